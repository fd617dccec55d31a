//! Data-file readers.
//!
//! Two layouts are accepted for count data:
//!
//! * frequency table: CSV with header `k,count`, one row per observed value;
//! * raw: one integer `k` per line, with `m` supplied separately.
//!
//! Blank lines and lines starting with `#` are ignored in both.

use std::path::Path;

use comb_stats::comm::Composition;
use comb_stats::inference::FrequencyTable;

use crate::error::{input, CliError, CliResult};

/// Content lines with their 1-based line numbers.
fn content_lines(path: &Path) -> CliResult<Vec<(usize, String)>> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_owned(),
        source,
    })?;
    Ok(text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim().to_owned()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .collect())
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> CliError {
    CliError::Parse {
        path: path.to_owned(),
        line,
        msg: msg.into(),
    }
}

fn is_table_header(line: &str) -> bool {
    let fields: Vec<&str> = line.split(',').map(str::trim).collect();
    fields == ["k", "count"]
}

/// Read either layout. `m` is required for raw files; for tables it
/// defaults to the largest `k` listed.
pub fn read_counts(path: &Path, m: Option<usize>) -> CliResult<FrequencyTable> {
    let lines = content_lines(path)?;
    let Some((_, first)) = lines.first() else {
        return input(format!("{}: no observations", path.display()));
    };
    if is_table_header(first) {
        read_table(path, m)
    } else {
        let Some(m) = m else {
            return input(format!(
                "{}: raw data (one k per line) needs --m; frequency tables need the header `k,count`",
                path.display()
            ));
        };
        read_raw(path, &lines, m)
    }
}

fn read_raw(path: &Path, lines: &[(usize, String)], m: usize) -> CliResult<FrequencyTable> {
    if m == 0 {
        return input("m must be at least 1");
    }
    let mut counts = vec![0u64; m + 1];
    for (line, text) in lines {
        let k: usize = text.parse().map_err(|_| {
            parse_err(
                path,
                *line,
                format!("expected a non-negative integer, got `{text}`"),
            )
        })?;
        if k > m {
            return Err(parse_err(path, *line, format!("k = {k} outside 0..={m}")));
        }
        counts[k] += 1;
    }
    Ok(FrequencyTable::new(m, counts)?)
}

fn read_table(path: &Path, m: Option<usize>) -> CliResult<FrequencyTable> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let mut rows: Vec<(usize, u64)> = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_err(path, line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != 2 {
            return Err(parse_err(
                path,
                line,
                format!("expected 2 fields, got {}", record.len()),
            ));
        }
        let k: usize = record[0].parse().map_err(|_| {
            parse_err(
                path,
                line,
                format!("k must be a non-negative integer, got `{}`", &record[0]),
            )
        })?;
        let count: u64 = record[1].parse().map_err(|_| {
            parse_err(
                path,
                line,
                format!("count must be a non-negative integer, got `{}`", &record[1]),
            )
        })?;
        if !seen.insert(k) {
            return Err(parse_err(path, line, format!("k = {k} listed twice")));
        }
        if let Some(m) = m {
            if k > m {
                return Err(parse_err(path, line, format!("k = {k} outside 0..={m}")));
            }
        }
        rows.push((k, count));
    }
    let m = match m.or_else(|| rows.iter().map(|r| r.0).max()) {
        Some(m) if m > 0 => m,
        _ => {
            return input(format!(
                "{}: cannot infer m from the table; pass --m",
                path.display()
            ))
        }
    };
    let mut counts = vec![0u64; m + 1];
    for (k, count) in rows {
        counts[k] = count;
    }
    FrequencyTable::new(m, counts).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// Compositions, one per line as comma-separated counts. An optional
/// header whose first field is not a number is skipped.
pub fn read_compositions(path: &Path) -> CliResult<Vec<Composition>> {
    let lines = content_lines(path)?;
    let mut out = Vec::with_capacity(lines.len());
    let mut shape: Option<(usize, usize)> = None;
    for (idx, (line, text)) in lines.iter().enumerate() {
        let fields: Vec<&str> = text.split(',').map(str::trim).collect();
        if idx == 0
            && fields[0].parse::<usize>().is_err()
            && fields[0].starts_with(|c: char| c.is_alphabetic())
        {
            continue;
        }
        let counts = fields
            .iter()
            .map(|f| f.parse::<usize>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| {
                parse_err(
                    path,
                    *line,
                    format!("expected non-negative integers, got `{text}`"),
                )
            })?;
        let m: usize = counts.iter().sum();
        let r = counts.len();
        if r < 2 {
            return Err(parse_err(
                path,
                *line,
                "a composition needs at least two parts",
            ));
        }
        match shape {
            None => shape = Some((m, r)),
            Some(s) if s != (m, r) => {
                return Err(parse_err(
                    path,
                    *line,
                    format!(
                        "row has m = {m}, r = {r}; earlier rows have m = {}, r = {}",
                        s.0, s.1
                    ),
                ))
            }
            _ => {}
        }
        out.push(Composition::new(counts, m).map_err(|e| parse_err(path, *line, e.to_string()))?);
    }
    if out.is_empty() {
        return input(format!("{}: no compositions", path.display()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn file(text: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(text.as_bytes()).unwrap();
        f
    }

    #[test]
    fn table_layout() {
        let f = file("# soybean\nk,count\n0,0\n1,2\n2,2\n3,5\n4,5\n5,3\n6,3\n");
        let t = read_counts(f.path(), None).unwrap();
        assert_eq!(t.m(), 6);
        assert_eq!(t.counts(), &[0, 2, 2, 5, 5, 3, 3]);
    }

    #[test]
    fn raw_layout_needs_m() {
        let f = file("3\n\n1\n3\n");
        assert!(matches!(
            read_counts(f.path(), None),
            Err(CliError::Input(_))
        ));
        let t = read_counts(f.path(), Some(4)).unwrap();
        assert_eq!(t.counts(), &[0, 1, 0, 2, 0]);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let f = file("1\n2\nseven\n");
        match read_counts(f.path(), Some(6)) {
            Err(CliError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        let f = file("k,count\n0,1\n0,2\n");
        match read_counts(f.path(), None) {
            Err(CliError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        let f = file("k,count\n0,1\n9,2\n");
        assert!(read_counts(f.path(), Some(6)).is_err());
    }

    #[test]
    fn empty_inputs() {
        assert!(read_counts(file("").path(), Some(3)).is_err());
        assert!(read_counts(file("k,count\n").path(), None).is_err());
        assert!(read_counts(file("k,count\n0,0\n1,0\n").path(), None).is_err());
    }

    #[test]
    fn compositions() {
        let f = file("k1,k2,k3\n1,1,1\n0,3,0\n");
        let c = read_compositions(f.path()).unwrap();
        assert_eq!(c.len(), 2);
        assert!(read_compositions(file("1,1,1\n1,1\n").path()).is_err());
    }
}
