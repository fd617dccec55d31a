use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use comb_stats::baselines::{binomial_mle_fit, sse, CbParams};
use comb_stats::comb::{CombNatural, CombParams};
use comb_stats::comm::{
    composition_count, sufficient_stats as comm_stats_of, CommHyperparams, CommParams,
    CommSufficientStats,
};
use comb_stats::exchangeable::{interior_grid, pairwise_curve};
use comb_stats::inference::{
    FrequencyTable, Hyperparams, MapResult, Posterior, PosteriorGrid, ProprietyReport,
    SufficientStats,
};
use comb_stats::special::logistic;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{input, CliError, CliResult};
use crate::input::{read_compositions, read_counts};
use crate::output::{csv_schema_line, json, prefixed, Staged, SCHEMA_VERSION};

/// Rendered output plus an error to report after it has been written.
pub struct Outcome {
    pub staged: Staged,
    pub failure: Option<CliError>,
}

impl From<Staged> for Outcome {
    fn from(staged: Staged) -> Self {
        Self {
            staged,
            failure: None,
        }
    }
}

/// Send `text` to `<out>.<name>` when an output prefix is set, else stdout.
fn emit(config: &RunConfig, name: &str, text: String) -> Staged {
    let mut staged = Staged::default();
    match &config.out {
        Some(prefix) => staged.file(prefixed(prefix, name), text),
        None => staged.print(text),
    }
    staged
}

fn comb_params(m: usize, p: Option<f64>, psi: Option<f64>, nu: f64) -> CliResult<CombParams> {
    match (p, psi) {
        (Some(p), None) => Ok(CombParams::new(m, p, nu)?),
        (None, Some(psi)) => Ok(CombNatural::new(m, psi, nu)?.to_mean()?),
        _ => input("give exactly one of --p and --psi"),
    }
}

fn posterior(config: &RunConfig, hyper: Hyperparams) -> CliResult<Posterior> {
    Ok(Posterior::with_tempering(hyper, config.tempering()?))
}

pub fn pmf(
    config: &RunConfig,
    m: usize,
    p: Option<f64>,
    psi: Option<f64>,
    nu: f64,
) -> CliResult<Outcome> {
    let params = comb_params(m, p, psi, nu)?;
    let mut text = csv_schema_line();
    text.push_str("k,pmf\n");
    for (k, prob) in params.pmf_table().iter().enumerate() {
        writeln!(text, "{k},{prob}").unwrap();
    }
    Ok(emit(config, "pmf.csv", text).into())
}

#[derive(Serialize)]
struct DataSummary<'a> {
    m: usize,
    n: u64,
    counts: &'a [u64],
}

#[derive(Serialize)]
struct HyperReport {
    a: f64,
    b: f64,
    c: f64,
}

impl From<Hyperparams> for HyperReport {
    fn from(h: Hyperparams) -> Self {
        Self {
            a: h.a,
            b: h.b,
            c: h.c,
        }
    }
}

#[derive(Serialize)]
struct MapReport {
    psi_hat: f64,
    nu_hat: f64,
    /// `logistic(psi_hat)`.
    p_hat: f64,
    sigma: [[f64; 2]; 2],
    iterations: usize,
    grad_norm: f64,
    log_kernel: f64,
}

impl From<&MapResult> for MapReport {
    fn from(r: &MapResult) -> Self {
        Self {
            psi_hat: r.psi_hat,
            nu_hat: r.nu_hat,
            p_hat: logistic(r.psi_hat),
            sigma: r.sigma,
            iterations: r.iterations,
            grad_norm: r.grad_norm,
            log_kernel: r.log_kernel,
        }
    }
}

#[derive(Serialize)]
struct FittedModel {
    fitted: Vec<f64>,
    sse: f64,
}

#[derive(Serialize)]
struct BinomialReport {
    p_hat: f64,
    fitted: Vec<f64>,
    sse: f64,
}

#[derive(Serialize)]
struct GridReport {
    psi: [f64; 2],
    nu: [f64; 2],
    points: usize,
    argmax: [f64; 2],
    csv: Option<String>,
}

#[derive(Serialize)]
struct FitReport<'a> {
    schema_version: u32,
    data: DataSummary<'a>,
    sufficient_stats: SufficientStats,
    prior: HyperReport,
    posterior: HyperReport,
    map: MapReport,
    comb: FittedModel,
    binomial: BinomialReport,
    grid: GridReport,
}

fn observed(table: &FrequencyTable) -> Vec<f64> {
    table.counts().iter().map(|&c| c as f64).collect()
}

struct Fitted {
    hyper: Hyperparams,
    post: Posterior,
    map: MapResult,
    comb_fit: Vec<f64>,
}

fn fit_table(config: &RunConfig, table: &FrequencyTable) -> CliResult<Fitted> {
    let prior = config.prior(table.m())?;
    let hyper = prior.update_batch(&table.sufficient_stats())?;
    let post = posterior(config, hyper)?;
    let map = post.map_estimate(&config.map_options()?)?;
    let comb_fit = map.fitted_counts(table.m(), table.n() as f64)?;
    Ok(Fitted {
        hyper,
        post,
        map,
        comb_fit,
    })
}

pub fn fit(config: &RunConfig, data: &Path, m: Option<usize>) -> CliResult<Outcome> {
    let table = read_counts(data, m)?;
    let spec = config.grid()?;
    let fitted = fit_table(config, &table)?;
    let grid = PosteriorGrid::evaluate(&fitted.post, &spec)?;
    let obs = observed(&table);
    let binom = binomial_mle_fit(&table);
    let (psi_arg, nu_arg) = grid.argmax();

    let grid_path = config
        .out
        .as_ref()
        .map(|prefix| prefixed(prefix, "grid.csv"));
    let report = FitReport {
        schema_version: SCHEMA_VERSION,
        data: DataSummary {
            m: table.m(),
            n: table.n(),
            counts: table.counts(),
        },
        sufficient_stats: table.sufficient_stats(),
        prior: config.prior(table.m())?.into(),
        posterior: fitted.hyper.into(),
        map: (&fitted.map).into(),
        comb: FittedModel {
            sse: sse(&obs, &fitted.comb_fit)?,
            fitted: fitted.comb_fit,
        },
        binomial: BinomialReport {
            p_hat: binom.p_hat,
            sse: sse(&obs, &binom.fitted)?,
            fitted: binom.fitted,
        },
        grid: GridReport {
            psi: config.grid_psi,
            nu: config.grid_nu,
            points: config.grid_points,
            argmax: [psi_arg, nu_arg],
            csv: grid_path.as_ref().map(|p| p.display().to_string()),
        },
    };
    let mut staged = emit(config, "report.json", json(&report));
    if let Some(path) = grid_path {
        staged.file(path, grid_csv(&grid));
    }
    Ok(staged.into())
}

fn grid_csv(grid: &PosteriorGrid) -> Vec<u8> {
    let mut buf = Vec::new();
    grid.write_csv(&mut buf)
        .expect("writing to memory cannot fail");
    buf
}

pub fn pairwise(config: &RunConfig, m: usize, nu: f64, steps: usize) -> CliResult<Outcome> {
    if steps < 2 {
        return input(format!("--steps must be at least 2, got {steps}"));
    }
    if m < 2 {
        return input(format!("pairwise probabilities need m >= 2, got {m}"));
    }
    let curve = pairwise_curve(m, nu, &interior_grid(steps))?;
    let mut text = csv_schema_line();
    text.push_str("p,p00,p01,p11\n");
    for (p, pair) in curve {
        writeln!(text, "{p},{},{},{}", pair.p00, pair.p01, pair.p11).unwrap();
    }
    Ok(emit(config, "pairwise.csv", text).into())
}

pub fn sample(
    config: &RunConfig,
    m: usize,
    p: Option<f64>,
    psi: Option<f64>,
    nu: f64,
    n: usize,
) -> CliResult<Outcome> {
    if n == 0 {
        return input("--n must be at least 1");
    }
    let params = comb_params(m, p, psi, nu)?;
    let mut text = String::with_capacity(2 * n);
    for k in params.sample(n, config.seed) {
        writeln!(text, "{k}").unwrap();
    }
    Ok(emit(config, "sample.txt", text).into())
}

const MAX_CATEGORIES: usize = 4;

pub fn comm_pmf(
    config: &RunConfig,
    m: usize,
    p: Vec<f64>,
    nu: f64,
    cap: u128,
) -> CliResult<Outcome> {
    let r = p.len();
    if !(2..=MAX_CATEGORIES).contains(&r) {
        return input(format!(
            "need between 2 and {MAX_CATEGORIES} categories, got {r}"
        ));
    }
    let params = CommParams::new(m, p, nu)?;
    let dist = params.build(cap)?;
    let mut text = csv_schema_line();
    let header: Vec<String> = (1..=r).map(|i| format!("k{i}")).collect();
    writeln!(text, "{},pmf", header.join(",")).unwrap();
    let table = dist.pmf_table();
    debug_assert_eq!(table.len() as u128, composition_count(m, r));
    for (k, prob) in table {
        let counts: Vec<String> = k.counts().iter().map(|c| c.to_string()).collect();
        writeln!(text, "{},{prob}", counts.join(",")).unwrap();
    }
    Ok(emit(config, "comm.csv", text).into())
}

#[derive(Serialize)]
struct CommStatsReport {
    schema_version: u32,
    m: usize,
    r: usize,
    stats: CommSufficientStats,
}

#[derive(Serialize)]
struct CommUpdateReport {
    schema_version: u32,
    m: usize,
    r: usize,
    prior: CommHyperparams,
    posterior: CommHyperparams,
}

fn load_compositions(data: &Path) -> CliResult<(Vec<comb_stats::comm::Composition>, usize, usize)> {
    let samples = read_compositions(data)?;
    let (m, r) = (samples[0].m(), samples[0].r());
    if r > MAX_CATEGORIES {
        return input(format!(
            "need between 2 and {MAX_CATEGORIES} categories, got {r}"
        ));
    }
    Ok((samples, m, r))
}

pub fn comm_stats(config: &RunConfig, data: &Path) -> CliResult<Outcome> {
    let (samples, m, r) = load_compositions(data)?;
    let report = CommStatsReport {
        schema_version: SCHEMA_VERSION,
        m,
        r,
        stats: comm_stats_of(&samples)?,
    };
    Ok(emit(config, "comm.json", json(&report)).into())
}

pub fn comm_update(config: &RunConfig, data: &Path) -> CliResult<Outcome> {
    let (samples, m, r) = load_compositions(data)?;
    let prior = CommHyperparams::flat(r);
    let posterior = samples.iter().try_fold(prior.clone(), |h, k| h.update(k))?;
    let report = CommUpdateReport {
        schema_version: SCHEMA_VERSION,
        m,
        r,
        prior,
        posterior,
    };
    Ok(emit(config, "comm.json", json(&report)).into())
}

/// Prior from the config, updated by `data` when given.
fn hyper_from(config: &RunConfig, data: Option<&Path>, m: Option<usize>) -> CliResult<Hyperparams> {
    match data {
        Some(path) => {
            let table = read_counts(path, m)?;
            Ok(config
                .prior(table.m())?
                .update_batch(&table.sufficient_stats())?)
        }
        None => match m {
            Some(m) => config.prior(m),
            None => input("give a data file or --m"),
        },
    }
}

pub fn posterior_grid(
    config: &RunConfig,
    data: Option<&Path>,
    m: Option<usize>,
) -> CliResult<Outcome> {
    let hyper = hyper_from(config, data, m)?;
    let spec = config.grid()?;
    let grid = PosteriorGrid::evaluate(&posterior(config, hyper)?, &spec)?;
    let text = String::from_utf8(grid_csv(&grid)).expect("CSV is ASCII");
    Ok(emit(config, "grid.csv", text).into())
}

#[derive(Serialize)]
struct ProprietyOutput {
    schema_version: u32,
    m: usize,
    hyper: HyperReport,
    #[serde(flatten)]
    report: ProprietyReport,
}

pub fn propriety(
    config: &RunConfig,
    data: Option<&Path>,
    m: Option<usize>,
    levels: usize,
) -> CliResult<Outcome> {
    if levels < 2 {
        return input(format!("--levels must be at least 2, got {levels}"));
    }
    let hyper = hyper_from(config, data, m)?;
    let report = posterior(config, hyper)?.propriety_check(levels)?;
    let failure = (!report.converged).then(|| {
        let last = report
            .levels
            .last()
            .map_or(f64::NAN, |l| l.relative_increment);
        CliError::Unconverged(format!(
            "tail increment {last:e} after {levels} levels exceeds {:e}",
            report.tail_tolerance
        ))
    });
    let out = ProprietyOutput {
        schema_version: SCHEMA_VERSION,
        m: hyper.m,
        hyper: hyper.into(),
        report,
    };
    Ok(Outcome {
        staged: emit(config, "propriety.json", json(&out)),
        failure,
    })
}

#[derive(Serialize)]
struct ModelFit {
    name: &'static str,
    params: BTreeMap<&'static str, f64>,
    fitted: Vec<f64>,
    sse: f64,
}

#[derive(Serialize)]
struct CompareReport<'a> {
    schema_version: u32,
    data: DataSummary<'a>,
    models: Vec<ModelFit>,
}

pub fn compare(
    config: &RunConfig,
    data: &Path,
    m: Option<usize>,
    cb_p: Option<f64>,
    cb_rho: Option<f64>,
    reference: Option<Vec<f64>>,
) -> CliResult<Outcome> {
    let table = read_counts(data, m)?;
    let obs = observed(&table);
    if cb_p.is_some() && cb_rho.is_none() {
        return input("--cb-p needs --cb-rho");
    }
    if let Some(r) = &reference {
        if r.len() != obs.len() {
            return input(format!(
                "--reference has {} values, data have {} cells",
                r.len(),
                obs.len()
            ));
        }
        if r.iter().any(|x| !x.is_finite()) {
            return input("--reference values must be finite");
        }
    }
    let binom = binomial_mle_fit(&table);
    let cb = match cb_rho {
        Some(rho) => Some(CbParams::new(table.m(), cb_p.unwrap_or(binom.p_hat), rho)?),
        None => None,
    };
    let fitted = fit_table(config, &table)?;

    let mut models = vec![
        ModelFit {
            name: "binomial",
            params: BTreeMap::from([("p", binom.p_hat)]),
            sse: sse(&obs, &binom.fitted)?,
            fitted: binom.fitted,
        },
        ModelFit {
            name: "comb",
            params: BTreeMap::from([
                ("psi", fitted.map.psi_hat),
                ("nu", fitted.map.nu_hat),
                ("p", logistic(fitted.map.psi_hat)),
            ]),
            sse: sse(&obs, &fitted.comb_fit)?,
            fitted: fitted.comb_fit,
        },
    ];
    if let Some(cb) = cb {
        let n = table.n() as f64;
        let fit = (0..=table.m())
            .map(|k| cb.pmf(k).map(|p| n * p))
            .collect::<Result<Vec<_>, _>>()?;
        models.push(ModelFit {
            name: "cb",
            params: BTreeMap::from([
                ("p", cb_p.unwrap_or(binom.p_hat)),
                ("rho", cb_rho.unwrap_or(0.0)),
            ]),
            sse: sse(&obs, &fit)?,
            fitted: fit,
        });
    }
    if let Some(fit) = reference {
        models.push(ModelFit {
            name: "reference",
            params: BTreeMap::new(),
            sse: sse(&obs, &fit)?,
            fitted: fit,
        });
    }
    let report = CompareReport {
        schema_version: SCHEMA_VERSION,
        data: DataSummary {
            m: table.m(),
            n: table.n(),
            counts: table.counts(),
        },
        models,
    };
    Ok(emit(config, "compare.json", json(&report)).into())
}
