//! Equivalence boundaries around a null distribution and the sample size
//! needed to reach a target maximum expected evidence.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryKind {
    /// Euclidean ball of radius `k / sqrt(r(r-1))` around the uniform.
    Euclidean,
    /// Sup-metric polytope of radius `k / r` around the uniform.
    Sup,
    /// Weighted relative discrepancy against a non-uniform null.
    Weighted,
}

/// What counts as "equivalent": a relative error `k` over `r` cells,
/// with the Euclidean and sup radii it induces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceSpec {
    pub r: usize,
    pub k: f64,
    pub d0: f64,
    pub sup_radius: f64,
    pub kind: BoundaryKind,
}

impl EquivalenceSpec {
    pub fn new(r: usize, k: f64, kind: BoundaryKind) -> Result<Self> {
        if r < 2 {
            return domain(format!("need at least two cells, got {r}"));
        }
        if !(k > 0.0 && k <= 1.0) {
            return domain(format!("relative error k must lie in (0, 1], got {k}"));
        }
        let rf = r as f64;
        Ok(Self {
            r,
            k,
            d0: k / (rf * (rf - 1.0)).sqrt(),
            sup_radius: k / rf,
            kind,
        })
    }

    pub fn euclidean(r: usize, k: f64) -> Result<Self> {
        Self::new(r, k, BoundaryKind::Euclidean)
    }

    /// Boundary `λ₀ = n k² / (r - 1)` for a sample of size `n`. The same
    /// expression serves the weighted definition, where `k²/(r-1)` bounds
    /// the weighted mean squared relative discrepancy.
    pub fn lambda0(&self, n: u64) -> f64 {
        lambda0_uniform(n, self.r, self.k)
    }
}

fn check_pair(p: &[f64], q: &[f64]) -> Result<()> {
    if p.len() != q.len() {
        return domain(format!("vectors differ in length ({} vs {})", p.len(), q.len()));
    }
    Ok(())
}

/// Euclidean distance between two probability vectors.
pub fn euclid_d(p: &[f64], q: &[f64]) -> Result<f64> {
    check_pair(p, q)?;
    Ok(p.iter().zip(q).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt())
}

/// Sup-metric distance `max_i |p_i - q_i|`.
pub fn sup_m(p: &[f64], q: &[f64]) -> Result<f64> {
    check_pair(p, q)?;
    Ok(p.iter().zip(q).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
}

pub fn uniform(r: usize) -> Vec<f64> {
    vec![1.0 / r as f64; r]
}

/// `n r d₀² = n k² / (r - 1)`
pub fn lambda0_uniform(n: u64, r: usize, k: f64) -> f64 {
    n as f64 * k * k / (r as f64 - 1.0)
}

/// Radius `1 / sqrt(r(r-1))` of the ball inscribed in the simplex.
pub fn inradius(r: usize) -> Result<f64> {
    if r < 2 {
        return domain(format!("need at least two cells, got {r}"));
    }
    let rf = r as f64;
    Ok(1.0 / (rf * (rf - 1.0)).sqrt())
}

/// The point at Euclidean distance `d0` from the uniform with the least
/// symmetrized divergence from it:
/// `u_r + d0 sqrt(1 - 1/r) (1, -1/(r-1), ..., -1/(r-1))`.
///
/// The large coordinate comes first; any permutation is equally optimal.
pub fn least_divergent_point(r: usize, d0: f64) -> Result<Vec<f64>> {
    if r < 2 {
        return domain(format!("need at least two cells, got {r}"));
    }
    let rf = r as f64;
    let limit = (1.0 - 1.0 / rf).sqrt();
    if !(d0 > 0.0 && d0 < limit) {
        return domain(format!("d0 must lie in (0, {limit:.6}) for r = {r}, got {d0}"));
    }
    let step = d0 * limit;
    let mut p = vec![1.0 / rf - step / (rf - 1.0); r];
    p[0] = 1.0 / rf + step;
    Ok(p)
}

/// Smallest `n` giving maximum expected evidence `m0` for equivalence with
/// radius `d0`, and at least five expected counts per cell:
/// `ceil(max(((m0 + sqrt(ν/2))² - ν/2) / (r d0²), 5r))`.
pub fn sample_size(m0: f64, nu: f64, r: usize, d0: f64) -> Result<u64> {
    if !(m0 > 0.0) || !(nu > 0.0) || !(d0 > 0.0) || r < 2 {
        return domain(format!("invalid sample size inputs m0={m0}, nu={nu}, r={r}, d0={d0}"));
    }
    let half = 0.5 * nu;
    let lambda0 = (m0 + half.sqrt()).powi(2) - half;
    let rf = r as f64;
    let n = (lambda0 / (rf * d0 * d0)).max(5.0 * rf);
    // guard against ceil of values that are integers up to rounding
    let rounded = n.round();
    if (n - rounded).abs() < 1e-9 * rounded.max(1.0) {
        return Ok(rounded as u64);
    }
    Ok(n.ceil() as u64)
}

/// Minimum sample sizes for each `(m0, r)` pair with `ν = r - 1` and the
/// Euclidean radius for relative error `k`. Rows follow `m0_list`.
pub fn table2(m0_list: &[f64], r_list: &[usize], k: f64) -> Result<Vec<Vec<u64>>> {
    m0_list
        .iter()
        .map(|&m0| {
            r_list
                .iter()
                .map(|&r| {
                    let spec = EquivalenceSpec::euclidean(r, k)?;
                    sample_size(m0, (r - 1) as f64, r, spec.d0)
                })
                .collect()
        })
        .collect()
}
