//! Output staging. Everything a command produces is rendered in memory
//! first and written only once the command has succeeded; files go through
//! a temporary sibling and a rename so a failure never leaves a partial
//! file behind.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use serde::Serialize;

use crate::error::{CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;

/// Header line opening every CSV written by this tool.
pub fn csv_schema_line() -> String {
    format!("# schema_version: {SCHEMA_VERSION}\n")
}

pub fn json<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("report types always serialize");
    text.push('\n');
    text
}

/// Path `<prefix>.<name>`.
pub fn prefixed(prefix: &str, name: &str) -> PathBuf {
    PathBuf::from(format!("{prefix}.{name}"))
}

#[derive(Default)]
pub struct Staged {
    stdout: String,
    files: Vec<(PathBuf, Vec<u8>)>,
}

impl Staged {
    pub fn print(&mut self, text: impl AsRef<str>) {
        self.stdout.push_str(text.as_ref());
    }

    pub fn file(&mut self, path: PathBuf, contents: impl Into<Vec<u8>>) {
        self.files.push((path, contents.into()));
    }

    pub fn commit(self) -> CliResult<()> {
        let mut temps: Vec<(PathBuf, PathBuf)> = Vec::new();
        let written = self.files.iter().try_for_each(|(path, bytes)| {
            let tmp = temp_sibling(path);
            temps.push((tmp.clone(), path.clone()));
            fs::write(&tmp, bytes).map_err(|source| CliError::Write {
                path: path.clone(),
                source,
            })
        });
        let renamed = written.and_then(|()| {
            temps.iter().try_for_each(|(tmp, path)| {
                fs::rename(tmp, path).map_err(|source| CliError::Write {
                    path: path.clone(),
                    source,
                })
            })
        });
        if let Err(e) = renamed {
            for (tmp, _) in &temps {
                let _ = fs::remove_file(tmp);
            }
            return Err(e);
        }
        let mut out = std::io::stdout().lock();
        out.write_all(self.stdout.as_bytes())
            .and_then(|()| out.flush())
            .map_err(|source| CliError::Write {
                path: PathBuf::from("<stdout>"),
                source,
            })
    }
}

fn temp_sibling(path: &std::path::Path) -> PathBuf {
    let mut name = path
        .file_name()
        .map(|n| n.to_os_string())
        .unwrap_or_default();
    name.push(format!(".tmp{}", std::process::id()));
    path.with_file_name(name)
}
