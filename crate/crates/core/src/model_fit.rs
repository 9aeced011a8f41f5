//! From raw data to evidence for a parametric model.
//!
//! Normality: estimate `(x̄, s)` by maximum likelihood, cut the line into
//! `r` cells that are equiprobable under `N(x̄, s²)`, and measure evidence
//! for uniformity of the cell counts with `ν = r - 3`.
//!
//! Poisson: estimate `μ̂`, merge tail outcomes until both end cells expect
//! at least five counts, and measure evidence for the merged probabilities
//! with `ν = r - 2`. Both use `λ₀ = n k² / (r - 1)`.

use serde::{Deserialize, Serialize};

use crate::boundary::{lambda0_uniform, uniform, BoundaryKind};
use crate::dist::special::ln_poisson_term;
use crate::dist::{normal_quantile, regularized_gamma};
use crate::error::{domain, Error, Result};
use crate::evidence::{
    evidence_against, evidence_for_equivalence, max_expected_evidence, EquivalenceParams, EvidenceValue,
};
use crate::pearson::{pearson_stat, CellData};

/// Default relative error for equivalence.
pub const DEFAULT_K: f64 = 0.5;

/// Minimum expected count in each combined tail cell.
pub const MIN_EXPECTED: f64 = 5.0;

fn check_k(k: f64) -> Result<()> {
    if !(k > 0.0 && k <= 1.0) {
        return domain(format!("relative error k must lie in (0, 1], got {k}"));
    }
    Ok(())
}

/// Lack-of-fit evidence for a table of counts against fixed null probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LackOfFitReport {
    pub n: u64,
    pub r: usize,
    pub counts: Vec<u64>,
    pub null_probs: Vec<f64>,
    pub s_stat: f64,
    pub nu: f64,
    pub evidence: EvidenceValue,
}

pub fn lack_of_fit_report(cells: &CellData, bias_adjust: bool) -> Result<LackOfFitReport> {
    if cells.r() < 2 {
        return domain("need at least two cells for a lack-of-fit statistic");
    }
    let nu = (cells.r() - 1) as f64;
    let s_stat = pearson_stat(cells);
    Ok(LackOfFitReport {
        n: cells.n(),
        r: cells.r(),
        counts: cells.counts().to_vec(),
        null_probs: cells.null_probs().to_vec(),
        s_stat,
        nu,
        evidence: evidence_against(s_stat, nu, bias_adjust)?,
    })
}

/// Equivalence evidence for a table of counts against fixed null probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub n: u64,
    pub r: usize,
    pub k: f64,
    pub kind: BoundaryKind,
    pub counts: Vec<u64>,
    pub null_probs: Vec<f64>,
    pub s_stat: f64,
    pub nu: f64,
    pub lambda0: f64,
    pub m0: f64,
    pub evidence: EvidenceValue,
}

/// Uses the Euclidean boundary when the null is uniform and the weighted
/// relative-discrepancy boundary otherwise; both give `λ₀ = n k²/(r-1)`.
pub fn equivalence_report(cells: &CellData, k: f64, bias_adjust: bool) -> Result<EquivalenceReport> {
    check_k(k)?;
    let r = cells.r();
    if r < 2 {
        return domain("need at least two cells for an equivalence statistic");
    }
    let is_uniform = cells.null_probs().iter().all(|p| (p * r as f64 - 1.0).abs() < 1e-9);
    let nu = (r - 1) as f64;
    let lambda0 = lambda0_uniform(cells.n(), r, k);
    let params = EquivalenceParams::new(nu, lambda0)?;
    let s_stat = pearson_stat(cells);
    Ok(EquivalenceReport {
        n: cells.n(),
        r,
        k,
        kind: if is_uniform { BoundaryKind::Euclidean } else { BoundaryKind::Weighted },
        counts: cells.counts().to_vec(),
        null_probs: cells.null_probs().to_vec(),
        s_stat,
        nu,
        lambda0,
        m0: max_expected_evidence(params),
        evidence: evidence_for_equivalence(s_stat, params, bias_adjust)?,
    })
}

/// Number of equiprobable cells for a normality check, `max(10, ceil(ln n))`.
pub fn choose_r_normal(n: usize) -> Result<usize> {
    if n < 50 {
        return Err(Error::Insufficient(format!(
            "{n} observations give fewer than 5 per cell over 10 cells; use n >= 50"
        )));
    }
    Ok(10usize.max((n as f64).ln().ceil() as usize))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalFitReport {
    pub n: usize,
    pub r: usize,
    pub k: f64,
    pub mean: f64,
    pub sd: f64,
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub s_stat: f64,
    pub nu: f64,
    pub lambda0: f64,
    pub m0: f64,
    pub evidence: EvidenceValue,
}

/// Minimum sample size accepted by [`evidence_for_normality`].
pub const MIN_NORMAL_N: usize = 100;

pub fn evidence_for_normality(data: &[f64], k: f64, bias_adjust: bool) -> Result<NormalFitReport> {
    check_k(k)?;
    let n = data.len();
    if n < MIN_NORMAL_N {
        return Err(Error::Insufficient(format!(
            "normality check needs at least {MIN_NORMAL_N} observations, got {n}"
        )));
    }
    if let Some(x) = data.iter().find(|x| !x.is_finite()) {
        return domain(format!("non-finite observation {x}"));
    }
    let nf = n as f64;
    let mean = data.iter().sum::<f64>() / nf;
    let sd = (data.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / nf).sqrt();
    if !(sd > 0.0) {
        return Err(Error::Degenerate("all observations are equal".into()));
    }
    let r = choose_r_normal(n)?;
    let edges = (1..r)
        .map(|j| normal_quantile(j as f64 / r as f64).map(|z| mean + sd * z))
        .collect::<Result<Vec<f64>>>()?;
    let counts = bin_counts(data, &edges);
    let cells = CellData::new(counts.clone(), uniform(r))?;
    let s_stat = pearson_stat(&cells);
    let nu = (r - 3) as f64;
    let lambda0 = lambda0_uniform(n as u64, r, k);
    let params = EquivalenceParams::new(nu, lambda0)?;
    Ok(NormalFitReport {
        n,
        r,
        k,
        mean,
        sd,
        edges,
        counts,
        s_stat,
        nu,
        lambda0,
        m0: max_expected_evidence(params),
        evidence: evidence_for_equivalence(s_stat, params, bias_adjust)?,
    })
}

/// Counts per cell `[e_{j-1}, e_j)` for sorted interior `edges`; a value
/// on an edge belongs to the upper cell.
pub fn bin_counts(data: &[f64], edges: &[f64]) -> Vec<u64> {
    let mut counts = vec![0u64; edges.len() + 1];
    for &x in data {
        counts[edges.partition_point(|&e| e <= x)] += 1;
    }
    counts
}

/// `sum_j j ν_j / n` for counts `ν_j` of the outcome `j`.
pub fn poisson_mle(counts: &[u64]) -> Result<f64> {
    let n: u64 = counts.iter().sum();
    if n == 0 {
        return Err(Error::Insufficient("no observations".into()));
    }
    let total: f64 = counts.iter().enumerate().map(|(j, &c)| j as f64 * c as f64).sum();
    Ok(total / n as f64)
}

/// Tail-merged cells for a Poisson(μ) model at sample size `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellCombination {
    /// Cells are labelled `r0 + 1, ..., r0 + r`.
    pub r0: i64,
    pub r: usize,
    /// The first cell holds outcomes `0..=first_max`.
    pub first_max: u64,
    /// The last cell holds outcomes `last_min..`.
    pub last_min: u64,
    pub probs: Vec<f64>,
}

impl CellCombination {
    /// Folds per-outcome counts (index = outcome) into the combined cells.
    pub fn fold(&self, counts: &[u64]) -> Vec<u64> {
        let mut out = vec![0u64; self.r];
        for (j, &c) in counts.iter().enumerate() {
            let j = j as u64;
            let cell = if j <= self.first_max {
                0
            } else if j >= self.last_min {
                self.r - 1
            } else {
                (j - self.first_max) as usize
            };
            out[cell] += c;
        }
        out
    }
}

/// `P(X <= k)` for `X ~ Poisson(mu)`.
fn poisson_cdf(k: u64, mu: f64) -> f64 {
    regularized_gamma(k as f64 + 1.0, mu).expect("positive shape").1
}

/// `P(X >= k)` for `X ~ Poisson(mu)`.
fn poisson_upper(k: u64, mu: f64) -> f64 {
    if k == 0 {
        1.0
    } else {
        regularized_gamma(k as f64, mu).expect("positive shape").0
    }
}

/// Merge low-probability tails: the first cell collects outcomes up to the
/// least `k` with `n P(X <= k) >= 5`, the last cell collects outcomes from
/// the greatest `k` with `n P(X >= k) >= 5`, and every outcome between is
/// its own cell.
pub fn combine_cells_poisson(n: u64, mu: f64) -> Result<CellCombination> {
    if !(mu > 0.0) || !mu.is_finite() {
        return domain(format!("Poisson mean must be positive, got {mu}"));
    }
    let nf = n as f64;
    if nf < MIN_EXPECTED {
        return Err(Error::Insufficient(format!("sample size {n} cannot reach 5 expected counts")));
    }
    let mut first_max = 0u64;
    while nf * poisson_cdf(first_max, mu) < MIN_EXPECTED {
        first_max += 1;
    }
    let mut last_min = first_max;
    while nf * poisson_upper(last_min + 1, mu) >= MIN_EXPECTED {
        last_min += 1;
    }
    if last_min < first_max + 2 {
        return Err(Error::Insufficient(format!(
            "n = {n} and mean {mu} leave fewer than three cells after merging tails"
        )));
    }
    let r = (last_min - first_max + 1) as usize;
    let mut probs = Vec::with_capacity(r);
    probs.push(poisson_cdf(first_max, mu));
    probs.extend((first_max + 1..last_min).map(|j| ln_poisson_term(j as f64, mu).exp()));
    probs.push(poisson_upper(last_min, mu));
    Ok(CellCombination {
        r0: first_max as i64 - 1,
        r,
        first_max,
        last_min,
        probs,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoissonFitReport {
    pub n: u64,
    pub mu_hat: f64,
    pub r0: i64,
    pub r: usize,
    pub first_max: u64,
    pub last_min: u64,
    pub k: f64,
    pub comb_probs: Vec<f64>,
    pub comb_counts: Vec<u64>,
    pub s_stat: f64,
    pub nu: f64,
    pub lambda0: f64,
    pub m0: f64,
    pub evidence: EvidenceValue,
}

/// `counts[j]` is the number of observations equal to `j`.
pub fn evidence_for_poisson(counts: &[u64], k: f64, bias_adjust: bool) -> Result<PoissonFitReport> {
    check_k(k)?;
    let mu_hat = poisson_mle(counts)?;
    let n: u64 = counts.iter().sum();
    let comb = combine_cells_poisson(n, mu_hat)?;
    let comb_counts = comb.fold(counts);
    let cells = CellData::new(comb_counts.clone(), comb.probs.clone())?;
    let s_stat = pearson_stat(&cells);
    let nu = (comb.r - 2) as f64;
    let lambda0 = lambda0_uniform(n, comb.r, k);
    let params = EquivalenceParams::new(nu, lambda0)?;
    Ok(PoissonFitReport {
        n,
        mu_hat,
        r0: comb.r0,
        r: comb.r,
        first_max: comb.first_max,
        last_min: comb.last_min,
        k,
        comb_probs: comb.probs,
        comb_counts,
        s_stat,
        nu,
        lambda0,
        m0: max_expected_evidence(params),
        evidence: evidence_for_equivalence(s_stat, params, bias_adjust)?,
    })
}

/// Tabulates raw count observations into `counts[j] = #{x == j}`.
pub fn tabulate_counts(values: &[u64]) -> Vec<u64> {
    let max = values.iter().copied().max().unwrap_or(0) as usize;
    let mut counts = vec![0u64; max + 1];
    for &v in values {
        counts[v as usize] += 1;
    }
    counts
}

/// Large-`n` growth of the merged cell count, `sqrt(8 μ ln(n/5))`.
pub fn approx_r_poisson(n: f64, mu: f64) -> Result<f64> {
    if !(n > 5.0) || !(mu > 0.0) {
        return domain(format!("need n > 5 and mu > 0, got n={n}, mu={mu}"));
    }
    Ok((8.0 * mu * (n / 5.0).ln()).sqrt())
}

/// `Φ⁻¹(1 - 1/n) / sqrt(2 ln n)`, which tends to one.
pub fn dasgupta_ratio(n: u64) -> Result<f64> {
    if n < 2 {
        return domain(format!("need n >= 2, got {n}"));
    }
    let nf = n as f64;
    Ok(normal_quantile(1.0 - 1.0 / nf)? / (2.0 * nf.ln()).sqrt())
}
