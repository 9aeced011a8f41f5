//! Deterministic Monte Carlo studies of the evidence transforms and the
//! model-fit pipelines.
//!
//! Grid point `g` of a run with seed `s` uses the mixed seed
//! `mix(s, g)`; replication `i` at that point draws from stream `i` of it.
//! Replications run in parallel but are collected in index order, so the
//! output does not depend on the number of worker threads.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boundary::{euclid_d, least_divergent_point, sup_m, uniform};
use crate::dist::{sample_chisq, sample_counts, sample_reals, ChiSqParams, Family, RandomStream};
use crate::divergence::j_uniform;
use crate::error::{domain, Error, Result};
use crate::evidence::{
    evidence_against, evidence_for_equivalence, expected_evidence_against, expected_evidence_equiv,
    EquivalenceParams,
};
use crate::model_fit::{evidence_for_normality, evidence_for_poisson, tabulate_counts, DEFAULT_K};
use crate::pearson::{multinomial_power_mc, ncp_lambda, pearson_stat, power_lack_of_fit, CellData};

pub const MIN_REPS: usize = 100;
pub const DESK_REPS: usize = 4000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    VstLofCalibration,
    VstEquivCalibration,
    NormalFitTable,
    PoissonFitTable,
    Table1Models,
}

impl Scenario {
    pub const ALL: [Scenario; 5] = [
        Scenario::VstLofCalibration,
        Scenario::VstEquivCalibration,
        Scenario::NormalFitTable,
        Scenario::PoissonFitTable,
        Scenario::Table1Models,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::VstLofCalibration => "vst_lof_calibration",
            Scenario::VstEquivCalibration => "vst_equiv_calibration",
            Scenario::NormalFitTable => "normal_fit_table",
            Scenario::PoissonFitTable => "poisson_fit_table",
            Scenario::Table1Models => "table1_models",
        }
    }
}

impl std::fmt::Display for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| Error::Domain(format!("unknown scenario {s:?}")))
    }
}

/// Parameters for each scenario, tagged by scenario name in JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scenario", rename_all = "snake_case")]
pub enum ScenarioParams {
    VstLofCalibration { nu: f64, lambdas: Vec<f64> },
    VstEquivCalibration { nu: f64, lambda0: f64, lambdas: Vec<f64> },
    NormalFitTable { families: Vec<Family>, ns: Vec<usize>, k: f64 },
    PoissonFitTable { families: Vec<Family>, ns: Vec<usize>, k: f64 },
    Table1Models { n: u64, alpha: f64 },
}

fn grid(lo: u32, hi: u32) -> Vec<f64> {
    (lo..=hi).map(f64::from).collect()
}

impl ScenarioParams {
    pub fn default_for(scenario: Scenario) -> Self {
        let ns = vec![100, 400, 1600, 6400];
        match scenario {
            Scenario::VstLofCalibration => ScenarioParams::VstLofCalibration { nu: 1.0, lambdas: grid(0, 35) },
            Scenario::VstEquivCalibration => ScenarioParams::VstEquivCalibration {
                nu: 5.0,
                lambda0: 12.0,
                lambdas: grid(0, 24),
            },
            Scenario::NormalFitTable => ScenarioParams::NormalFitTable {
                families: vec![
                    Family::Normal { mean: 0.0, sd: 1.0 },
                    Family::Logistic { location: 0.0, scale: 1.0 },
                    Family::StudentT { df: 5.0 },
                ],
                ns,
                k: DEFAULT_K,
            },
            Scenario::PoissonFitTable => {
                let means = [1.0, 5.0, 10.0, 20.0];
                let mut families: Vec<Family> = means.iter().map(|&mean| Family::Poisson { mean }).collect();
                families.extend(means.iter().map(|&mean| Family::NegBinomial { mean, dispersion: 0.01 }));
                ScenarioParams::PoissonFitTable { families, ns, k: DEFAULT_K }
            }
            Scenario::Table1Models => ScenarioParams::Table1Models { n: 100, alpha: 0.05 },
        }
    }

    pub fn scenario(&self) -> Scenario {
        match self {
            ScenarioParams::VstLofCalibration { .. } => Scenario::VstLofCalibration,
            ScenarioParams::VstEquivCalibration { .. } => Scenario::VstEquivCalibration,
            ScenarioParams::NormalFitTable { .. } => Scenario::NormalFitTable,
            ScenarioParams::PoissonFitTable { .. } => Scenario::PoissonFitTable,
            ScenarioParams::Table1Models { .. } => Scenario::Table1Models,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let check_lambdas = |lambdas: &[f64]| {
            if lambdas.is_empty() || lambdas.iter().any(|l| !(*l >= 0.0) || !l.is_finite()) {
                return domain("lambda grid must be nonempty, finite and nonnegative");
            }
            Ok(())
        };
        let check_k = |k: f64| {
            if !(k > 0.0 && k <= 1.0) {
                return domain(format!("k must lie in (0, 1], got {k}"));
            }
            Ok(())
        };
        match self {
            ScenarioParams::VstLofCalibration { nu, lambdas } => {
                ChiSqParams::central(*nu)?;
                check_lambdas(lambdas)
            }
            ScenarioParams::VstEquivCalibration { nu, lambda0, lambdas } => {
                EquivalenceParams::new(*nu, *lambda0)?;
                check_lambdas(lambdas)
            }
            ScenarioParams::NormalFitTable { families, ns, k } => {
                check_k(*k)?;
                if families.is_empty() || ns.is_empty() {
                    return domain("families and sample sizes must be nonempty");
                }
                for f in families {
                    f.validate()?;
                    if f.is_count() || matches!(f, Family::Multinomial { .. }) {
                        return domain(format!("{} is not a continuous family", f.label()));
                    }
                }
                if let Some(n) = ns.iter().find(|&&n| n < crate::model_fit::MIN_NORMAL_N) {
                    return domain(format!("sample size {n} is below the normality minimum"));
                }
                Ok(())
            }
            ScenarioParams::PoissonFitTable { families, ns, k } => {
                check_k(*k)?;
                if families.is_empty() || ns.is_empty() {
                    return domain("families and sample sizes must be nonempty");
                }
                for f in families {
                    f.validate()?;
                    if !f.is_count() {
                        return domain(format!("{} is not a count family", f.label()));
                    }
                }
                if let Some(n) = ns.iter().find(|&&n| n < 20) {
                    return domain(format!("sample size {n} is too small for cell combining"));
                }
                Ok(())
            }
            ScenarioParams::Table1Models { n, alpha } => {
                if *n < 1 || !(*alpha > 0.0 && *alpha < 1.0) {
                    return domain(format!("need n >= 1 and alpha in (0, 1), got {n}, {alpha}"));
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub reps: usize,
    pub seed: u64,
    pub params: ScenarioParams,
}

impl SimConfig {
    pub fn new(params: ScenarioParams, reps: usize, seed: u64) -> Result<Self> {
        let config = Self { reps, seed, params };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps < MIN_REPS {
            return domain(format!("need at least {MIN_REPS} replications, got {}", self.reps));
        }
        if matches!(self.params, ScenarioParams::Table1Models { .. }) && self.reps < 1000 {
            return domain(format!("power estimates need at least 1000 replications, got {}", self.reps));
        }
        self.params.validate()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: SimConfig =
            serde_json::from_str(text).map_err(|e| Error::Parse { line: e.line(), message: e.to_string() })?;
        config.validate()?;
        Ok(config)
    }

    pub fn scenario(&self) -> Scenario {
        self.params.scenario()
    }
}

/// Replicated evidence values at one grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSummary {
    pub label: String,
    pub grid: BTreeMap<String, f64>,
    pub mean_t: f64,
    pub sd_t: f64,
    /// `sd_t / sqrt(reps)`
    pub mc_se: f64,
    /// Successful replications.
    pub reps: usize,
    /// Replications where the pipeline rejected the simulated data.
    pub failed: usize,
    pub extras: BTreeMap<String, f64>,
}

/// Mean and sample standard deviation.
pub fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// SplitMix64 finalizer applied to `seed + index`.
pub fn mix_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Runs `rep` for each replication in parallel and returns the values in
/// replication order, with failures dropped and counted.
fn replicate<T: Send>(
    seed: u64,
    reps: usize,
    rep: impl Fn(&mut RandomStream) -> Result<T> + Sync,
) -> (Vec<T>, usize) {
    let out: Vec<Result<T>> = (0..reps)
        .into_par_iter()
        .map(|i| rep(&mut RandomStream::new(seed, i as u64)))
        .collect();
    let total = out.len();
    let ok: Vec<T> = out.into_iter().filter_map(|r| r.ok()).collect();
    let failed = total - ok.len();
    (ok, failed)
}

fn summary(label: String, grid: BTreeMap<String, f64>, ts: &[f64], failed: usize) -> Result<SimSummary> {
    if ts.is_empty() {
        return Err(Error::Insufficient(format!("every replication failed at {label}")));
    }
    let (mean_t, sd_t) = mean_sd(ts);
    Ok(SimSummary {
        label,
        grid,
        mean_t,
        sd_t,
        mc_se: sd_t / (ts.len() as f64).sqrt(),
        reps: ts.len(),
        failed,
        extras: BTreeMap::new(),
    })
}

fn check_reps(reps: usize) -> Result<()> {
    if reps < MIN_REPS {
        return domain(format!("need at least {MIN_REPS} replications, got {reps}"));
    }
    Ok(())
}

/// Bias-adjusted evidence against the null for `S ~ χ²_{ν,λ}` at each `λ`.
pub fn run_vst_lof(nu: f64, lambdas: &[f64], reps: usize, seed: u64) -> Result<Vec<SimSummary>> {
    check_reps(reps)?;
    lambdas
        .iter()
        .enumerate()
        .map(|(g, &lambda)| {
            let params = ChiSqParams::new(nu, lambda)?;
            let (ts, failed) = replicate(mix_seed(seed, g as u64), reps, |rng| {
                Ok(evidence_against(sample_chisq(rng, params), nu, true)?.t)
            });
            let grid = BTreeMap::from([("lambda".to_string(), lambda), ("nu".to_string(), nu)]);
            let mut s = summary(format!("chisq({nu},{lambda})"), grid, &ts, failed)?;
            s.extras.insert("expected".into(), expected_evidence_against(nu, lambda));
            Ok(s)
        })
        .collect()
}

/// Bias-adjusted evidence for equivalence for `S ~ χ²_{ν,λ}` at each `λ`.
pub fn run_vst_equiv(nu: f64, lambda0: f64, lambdas: &[f64], reps: usize, seed: u64) -> Result<Vec<SimSummary>> {
    check_reps(reps)?;
    let eq = EquivalenceParams::new(nu, lambda0)?;
    lambdas
        .iter()
        .enumerate()
        .map(|(g, &lambda)| {
            let params = ChiSqParams::new(nu, lambda)?;
            let (ts, failed) = replicate(mix_seed(seed, g as u64), reps, |rng| {
                Ok(evidence_for_equivalence(sample_chisq(rng, params), eq, true)?.t)
            });
            let grid = BTreeMap::from([
                ("lambda".to_string(), lambda),
                ("lambda0".to_string(), lambda0),
                ("nu".to_string(), nu),
            ]);
            let mut s = summary(format!("chisq({nu},{lambda})"), grid, &ts, failed)?;
            s.extras.insert("expected".into(), expected_evidence_equiv(eq, lambda));
            Ok(s)
        })
        .collect()
}

/// Evidence for normality on samples from each family, rows in
/// family-major order.
pub fn run_normal_table(families: &[Family], ns: &[usize], k: f64, reps: usize, seed: u64) -> Result<Vec<SimSummary>> {
    check_reps(reps)?;
    let mut out = Vec::with_capacity(families.len() * ns.len());
    for (fi, family) in families.iter().enumerate() {
        for (ni, &n) in ns.iter().enumerate() {
            let g = (fi * ns.len() + ni) as u64;
            let (rows, failed) = replicate(mix_seed(seed, g), reps, |rng| {
                let data = sample_reals(rng, family, n)?;
                let rep = evidence_for_normality(&data, k, true)?;
                Ok((rep.evidence.t, rep.r, rep.lambda0, rep.m0))
            });
            let ts: Vec<f64> = rows.iter().map(|r| r.0).collect();
            let grid = BTreeMap::from([("n".to_string(), n as f64)]);
            let mut s = summary(family.label(), grid, &ts, failed)?;
            if let Some(&(_, r, lambda0, m0)) = rows.first() {
                s.extras.insert("r".into(), r as f64);
                s.extras.insert("lambda0".into(), lambda0);
                s.extras.insert("m0".into(), m0);
            }
            out.push(s);
        }
    }
    Ok(out)
}

/// Evidence for the Poisson model on count samples from each family, with
/// the mean and sd of the data-driven `r` and `m₀`.
pub fn run_poisson_table(families: &[Family], ns: &[usize], k: f64, reps: usize, seed: u64) -> Result<Vec<SimSummary>> {
    check_reps(reps)?;
    let mut out = Vec::with_capacity(families.len() * ns.len());
    for (fi, family) in families.iter().enumerate() {
        for (ni, &n) in ns.iter().enumerate() {
            let g = (fi * ns.len() + ni) as u64;
            let (rows, failed) = replicate(mix_seed(seed, g), reps, |rng| {
                let counts = tabulate_counts(&sample_counts(rng, family, n)?);
                let rep = evidence_for_poisson(&counts, k, true)?;
                Ok((rep.evidence.t, rep.r as f64, rep.m0))
            });
            let ts: Vec<f64> = rows.iter().map(|r| r.0).collect();
            let grid = BTreeMap::from([("n".to_string(), n as f64)]);
            let mut s = summary(family.label(), grid, &ts, failed)?;
            let (mean_r, sd_r) = mean_sd(&rows.iter().map(|r| r.1).collect::<Vec<_>>());
            let (mean_m0, sd_m0) = mean_sd(&rows.iter().map(|r| r.2).collect::<Vec<_>>());
            s.extras.insert("mean_r".into(), mean_r);
            s.extras.insert("sd_r".into(), sd_r);
            s.extras.insert("mean_m0".into(), mean_m0);
            s.extras.insert("sd_m0".into(), sd_m0);
            out.push(s);
        }
    }
    Ok(out)
}

/// The six-cell model at Euclidean distance 0.15 from the uniform with
/// least divergence, as used for the power comparison.
pub fn model_p7() -> Vec<f64> {
    least_divergent_point(6, 0.15).expect("valid radius")
}

/// Distances, divergence and level-`alpha` power at sample size `n` for
/// the reconstructible six-cell model and a uniform control. `mean_t` is
/// the bias-adjusted evidence against uniformity on the same draws used
/// for the power estimate.
pub fn run_table1(n: u64, alpha: f64, reps: usize, seed: u64) -> Result<Vec<SimSummary>> {
    let u = uniform(6);
    let rows = [("p7", model_p7()), ("uniform", u.clone())];
    rows.iter()
        .enumerate()
        .map(|(g, (label, p))| {
            let row_seed = mix_seed(seed, g as u64);
            let power = multinomial_power_mc(row_seed, n, p, &u, alpha, reps)?;
            let (ts, failed) = replicate(row_seed, reps, |rng| {
                let cells = CellData::uniform(crate::dist::multinomial(rng, n, p))?;
                Ok(evidence_against(pearson_stat(&cells), 5.0, true)?.t)
            });
            let grid = BTreeMap::from([("alpha".to_string(), alpha), ("n".to_string(), n as f64)]);
            let mut s = summary(label.to_string(), grid, &ts, failed)?;
            let lambda = ncp_lambda(n, &u, p)?;
            s.extras.insert("d".into(), euclid_d(p, &u)?);
            s.extras.insert("sup_m".into(), sup_m(p, &u)?);
            s.extras.insert("j".into(), j_uniform(p, 1)?);
            s.extras.insert("lambda".into(), lambda);
            s.extras.insert("power".into(), power.power);
            s.extras.insert("power_se".into(), power.se);
            s.extras.insert("power_asymptotic".into(), power_lack_of_fit(alpha, 5.0, lambda)?);
            Ok(s)
        })
        .collect()
}

pub fn run(config: &SimConfig) -> Result<Vec<SimSummary>> {
    config.validate()?;
    let (reps, seed) = (config.reps, config.seed);
    match &config.params {
        ScenarioParams::VstLofCalibration { nu, lambdas } => run_vst_lof(*nu, lambdas, reps, seed),
        ScenarioParams::VstEquivCalibration { nu, lambda0, lambdas } => run_vst_equiv(*nu, *lambda0, lambdas, reps, seed),
        ScenarioParams::NormalFitTable { families, ns, k } => run_normal_table(families, ns, *k, reps, seed),
        ScenarioParams::PoissonFitTable { families, ns, k } => run_poisson_table(families, ns, *k, reps, seed),
        ScenarioParams::Table1Models { n, alpha } => run_table1(*n, *alpha, reps, seed),
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// One row per summary: label, grid columns, statistics, then extras.
/// Columns absent from a row are left empty.
pub fn summaries_to_csv(summaries: &[SimSummary]) -> String {
    let grid_keys: BTreeSet<&str> = summaries.iter().flat_map(|s| s.grid.keys().map(String::as_str)).collect();
    let extra_keys: BTreeSet<&str> = summaries.iter().flat_map(|s| s.extras.keys().map(String::as_str)).collect();
    let mut out = String::from("label");
    for k in grid_keys.iter().copied() {
        out.push(',');
        out.push_str(k);
    }
    out.push_str(",mean_t,sd_t,mc_se,reps,failed");
    for k in extra_keys.iter().copied() {
        out.push(',');
        out.push_str(k);
    }
    out.push('\n');
    let opt = |v: Option<&f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for s in summaries {
        out.push_str(&csv_field(&s.label));
        for k in grid_keys.iter().copied() {
            let _ = write!(out, ",{}", opt(s.grid.get(k)));
        }
        let _ = write!(out, ",{},{},{},{},{}", s.mean_t, s.sd_t, s.mc_se, s.reps, s.failed);
        for k in extra_keys.iter().copied() {
            let _ = write!(out, ",{}", opt(s.extras.get(k)));
        }
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub scenario: Scenario,
    pub seed: u64,
    pub reps: usize,
    pub elapsed_seconds: f64,
    pub threads: usize,
    pub config: SimConfig,
    pub files: Vec<String>,
}

/// Writes `<scenario>.csv`, `<scenario>.json` and `manifest.json` into
/// `dir`, creating it if needed. Only the manifest records timing, so the
/// CSV and JSON files are byte-identical for identical configurations.
pub fn write_results(dir: &Path, config: &SimConfig, summaries: &[SimSummary], elapsed: Duration) -> std::io::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let name = config.scenario().name();
    let csv = dir.join(format!("{name}.csv"));
    let json = dir.join(format!("{name}.json"));
    std::fs::write(&csv, summaries_to_csv(summaries))?;
    std::fs::write(&json, serde_json::to_string_pretty(summaries)? + "\n")?;
    let manifest = Manifest {
        scenario: config.scenario(),
        seed: config.seed,
        reps: config.reps,
        elapsed_seconds: elapsed.as_secs_f64(),
        threads: rayon::current_num_threads(),
        config: config.clone(),
        files: vec![format!("{name}.csv"), format!("{name}.json")],
    };
    let path = dir.join("manifest.json");
    std::fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(vec![csv, json, path])
}
