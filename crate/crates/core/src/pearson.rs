//! Karl Pearson statistic, noncentrality, power and the equivalence test.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::{self, chisq_quantile, chisq_sf, ChiSqParams, RandomStream};
use crate::error::{domain, Result};
use crate::evidence::EquivalenceParams;

/// Null probabilities below this are rejected; merging sparse cells is the
/// caller's job.
pub const MIN_CELL_PROB: f64 = 1e-12;

/// Observed cell counts paired with null-model cell probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellData {
    counts: Vec<u64>,
    null_probs: Vec<f64>,
    n: u64,
}

impl CellData {
    pub fn new(counts: Vec<u64>, null_probs: Vec<f64>) -> Result<Self> {
        if counts.len() != null_probs.len() {
            return domain(format!(
                "{} counts but {} null probabilities",
                counts.len(),
                null_probs.len()
            ));
        }
        if counts.is_empty() {
            return domain("no cells");
        }
        validate_probs(&null_probs)?;
        let n: u64 = counts.iter().sum();
        if n == 0 {
            return domain("total count is zero");
        }
        Ok(Self { counts, null_probs, n })
    }

    /// Equiprobable null over `counts.len()` cells.
    pub fn uniform(counts: Vec<u64>) -> Result<Self> {
        let r = counts.len();
        if r == 0 {
            return domain("no cells");
        }
        Self::new(counts, vec![1.0 / r as f64; r])
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn null_probs(&self) -> &[f64] {
        &self.null_probs
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn r(&self) -> usize {
        self.counts.len()
    }
}

pub(crate) fn validate_probs(probs: &[f64]) -> Result<()> {
    if let Some(p) = probs.iter().find(|p| !(**p >= MIN_CELL_PROB) || !p.is_finite()) {
        return domain(format!("cell probability {p} is not positive"));
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return domain(format!("cell probabilities sum to {sum}, not 1"));
    }
    Ok(())
}

/// `sum_i (ν_i - n p_i)² / (n p_i)`
pub fn pearson_stat(data: &CellData) -> f64 {
    let n = data.n as f64;
    data.counts
        .iter()
        .zip(&data.null_probs)
        .map(|(&c, &p)| {
            let e = n * p;
            (c as f64 - e).powi(2) / e
        })
        .sum()
}

/// `n sum_i (p_i - q_i)² / p_i` for null `p` and alternative `q`.
pub fn ncp_lambda(n: u64, null_probs: &[f64], alt_probs: &[f64]) -> Result<f64> {
    if null_probs.len() != alt_probs.len() {
        return domain(format!(
            "probability vectors differ in length ({} vs {})",
            null_probs.len(),
            alt_probs.len()
        ));
    }
    validate_probs(null_probs)?;
    Ok(n as f64
        * null_probs
            .iter()
            .zip(alt_probs)
            .map(|(p, q)| (p - q).powi(2) / p)
            .sum::<f64>())
}

/// Asymptotic power `P(χ²_{ν,λ} >= c)` of the level-`alpha` lack-of-fit test,
/// with `c` the central `1 - alpha` quantile.
pub fn power_lack_of_fit(alpha: f64, nu: f64, lambda: f64) -> Result<f64> {
    let c = chisq_quantile(1.0 - alpha, ChiSqParams::central(nu)?)?;
    chisq_sf(c, ChiSqParams::new(nu, lambda)?)
}

/// Asymptotic power `P(χ²_{ν,λ} <= c_α)` of the equivalence test, with
/// `c_α` the `alpha` quantile of `χ²_{ν,λ₀}`.
pub fn power_equivalence(alpha: f64, params: EquivalenceParams, lambda: f64) -> Result<f64> {
    let c = equivalence_critical_value(alpha, params)?;
    dist::chisq_cdf(c, ChiSqParams::new(params.nu, lambda)?)
}

pub fn equivalence_critical_value(alpha: f64, params: EquivalenceParams) -> Result<f64> {
    chisq_quantile(alpha, ChiSqParams::new(params.nu, params.lambda0)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    RejectNonequivalence,
    Retain,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceDecision {
    pub decision: Decision,
    pub critical_value: f64,
    pub alpha: f64,
}

/// Rejects non-equivalence at level `alpha` iff `s <= c_α`.
pub fn equivalence_test(s: f64, params: EquivalenceParams, alpha: f64) -> Result<EquivalenceDecision> {
    if !(s >= 0.0) {
        return domain(format!("statistic must be nonnegative, got {s}"));
    }
    let critical_value = equivalence_critical_value(alpha, params)?;
    let decision = if s <= critical_value {
        Decision::RejectNonequivalence
    } else {
        Decision::Retain
    };
    Ok(EquivalenceDecision { decision, critical_value, alpha })
}

/// Monte Carlo power estimate with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerEstimate {
    pub power: f64,
    pub se: f64,
    pub reps: usize,
    pub critical_value: f64,
}

/// Fraction of `reps` multinomial(n, true_probs) samples whose Pearson
/// statistic against `null_probs` exceeds the central `1 - alpha` quantile
/// with `r - 1` df. Replication `i` draws from stream `(seed, i)`, so the
/// estimate does not depend on thread count.
pub fn multinomial_power_mc(
    seed: u64,
    n: u64,
    true_probs: &[f64],
    null_probs: &[f64],
    alpha: f64,
    reps: usize,
) -> Result<PowerEstimate> {
    if reps < 1000 {
        return domain(format!("need at least 1000 replications, got {reps}"));
    }
    if true_probs.len() != null_probs.len() {
        return domain("probability vectors differ in length");
    }
    validate_probs(null_probs)?;
    let tsum: f64 = true_probs.iter().sum();
    if true_probs.iter().any(|p| *p < 0.0) || (tsum - 1.0).abs() > 1e-9 {
        return domain("true probabilities are not a distribution");
    }
    let r = null_probs.len();
    if r < 2 {
        return domain("need at least two cells");
    }
    let c = chisq_quantile(1.0 - alpha, ChiSqParams::central((r - 1) as f64)?)?;
    let hits: usize = (0..reps)
        .into_par_iter()
        .map(|i| {
            let mut stream = RandomStream::new(seed, i as u64);
            let counts = dist::multinomial(&mut stream, n, true_probs);
            let nf = n as f64;
            let s: f64 = counts
                .iter()
                .zip(null_probs)
                .map(|(&k, &p)| (k as f64 - nf * p).powi(2) / (nf * p))
                .sum();
            usize::from(s >= c)
        })
        .sum();
    let power = hits as f64 / reps as f64;
    Ok(PowerEstimate {
        power,
        se: (power * (1.0 - power) / reps as f64).sqrt(),
        reps,
        critical_value: c,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const DIE: [u64; 6] = [17, 16, 25, 9, 16, 17];

    #[test]
    fn die_statistic() {
        let d = CellData::uniform(DIE.to_vec()).unwrap();
        assert_eq!(d.n(), 100);
        assert!((pearson_stat(&d) - 7.76).abs() < 0.005);
    }

    #[test]
    fn exact_fit_is_zero() {
        let d = CellData::new(vec![10, 20, 70], vec![0.1, 0.2, 0.7]).unwrap();
        assert!(pearson_stat(&d).abs() < 1e-12);
    }

    #[test]
    fn cell_validation() {
        assert!(CellData::new(vec![1, 2], vec![0.5]).is_err());
        assert!(CellData::new(vec![1, 2], vec![1.0, 0.0]).is_err());
        assert!(CellData::new(vec![1, 2], vec![0.6, 0.6]).is_err());
        assert!(CellData::new(vec![0, 0], vec![0.5, 0.5]).is_err());
        assert!(CellData::new(vec![1, 2], vec![1.0 - 1e-13, 1e-13]).is_err());
    }

    #[test]
    fn ncp_values() {
        let u = vec![1.0 / 6.0; 6];
        assert_eq!(ncp_lambda(100, &u, &u).unwrap(), 0.0);
        // alternative at Euclidean distance 0.15 from uniform
        let d = 0.15;
        let mut q = vec![1.0 / 6.0 - d / 30f64.sqrt(); 6];
        q[0] = 1.0 / 6.0 + d * (5.0f64 / 6.0).sqrt();
        assert!((ncp_lambda(100, &u, &q).unwrap() - 13.5).abs() < 1e-10);
        assert!(ncp_lambda(100, &u, &q[..5]).is_err());
    }

    #[test]
    fn lack_of_fit_power() {
        assert!((power_lack_of_fit(0.05, 5.0, 0.0).unwrap() - 0.05).abs() < 1e-10);
        let p = power_lack_of_fit(0.05, 5.0, 13.5).unwrap();
        assert!(p > 0.75 && p < 0.90, "{p}");
        let grid: Vec<f64> = [0.0, 5.0, 13.5, 30.0]
            .iter()
            .map(|&l| power_lack_of_fit(0.05, 5.0, l).unwrap())
            .collect();
        assert!(grid.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn equivalence_power() {
        let p = EquivalenceParams::new(5.0, 12.0).unwrap();
        assert!((power_equivalence(0.05, p, 12.0).unwrap() - 0.05).abs() < 1e-10);
        let g: Vec<f64> = [0.0, 6.0, 12.0].iter().map(|&l| power_equivalence(0.05, p, l).unwrap()).collect();
        assert!(g[0] > g[1] && g[1] > g[2]);
    }

    #[test]
    fn equivalence_power_matches_simulation() {
        let p = EquivalenceParams::new(5.0, 12.0).unwrap();
        let analytic = power_equivalence(0.05, p, 0.0).unwrap();
        let c = equivalence_critical_value(0.05, p).unwrap();
        let params = ChiSqParams::central(5.0).unwrap();
        let mut s = RandomStream::new(99, 0);
        let hits = (0..100_000).filter(|_| dist::sample_chisq(&mut s, params) <= c).count();
        let mc = hits as f64 / 1e5;
        assert!((mc - analytic).abs() < 0.01, "{mc} vs {analytic}");
    }

    #[test]
    fn equivalence_decisions() {
        let p = EquivalenceParams::new(5.0, 12.0).unwrap();
        assert_eq!(equivalence_test(0.0, p, 0.001).unwrap().decision, Decision::RejectNonequivalence);
        assert_eq!(equivalence_test(12.0 + 50.0, p, 0.05).unwrap().decision, Decision::Retain);
        let c = equivalence_test(0.0, p, 0.05).unwrap().critical_value;
        let mut flips = 0;
        let mut last = Decision::RejectNonequivalence;
        for i in 0..=400 {
            let s = 2.0 * c * i as f64 / 400.0;
            let d = equivalence_test(s, p, 0.05).unwrap().decision;
            assert_eq!(d == Decision::RejectNonequivalence, s <= c);
            if d != last {
                flips += 1;
                last = d;
            }
        }
        assert_eq!(flips, 1);
    }

    #[test]
    fn mc_size_under_null() {
        let u = vec![1.0 / 6.0; 6];
        let est = multinomial_power_mc(5, 100, &u, &u, 0.05, 20_000).unwrap();
        assert!((est.power - 0.05).abs() < 3.0 * est.se.max(0.05 * 0.95 / 20_000f64.sqrt()), "{est:?}");
        assert!(multinomial_power_mc(5, 100, &u, &u, 0.05, 999).is_err());
    }

    #[test]
    fn mc_se_scaling() {
        let u = vec![0.25; 4];
        let a = multinomial_power_mc(1, 50, &u, &u, 0.5, 4000).unwrap();
        let b = multinomial_power_mc(1, 50, &u, &u, 0.5, 8000).unwrap();
        let ratio = a.se / b.se;
        assert!((ratio - 2f64.sqrt()).abs() < 0.05, "{ratio}");
    }

    #[test]
    fn permutation_invariance() {
        let counts = vec![5u64, 9, 14, 2, 30];
        let probs = vec![0.1, 0.2, 0.3, 0.05, 0.35];
        let base = pearson_stat(&CellData::new(counts.clone(), probs.clone()).unwrap());
        let perm = [3usize, 0, 4, 1, 2];
        let c2: Vec<u64> = perm.iter().map(|&i| counts[i]).collect();
        let p2: Vec<f64> = perm.iter().map(|&i| probs[i]).collect();
        let s2 = pearson_stat(&CellData::new(c2, p2).unwrap());
        assert!((base - s2).abs() < 1e-12);
    }
}
