//! Symmetrized Kullback–Leibler divergences `J = I(0:1) + I(1:0)`.
//!
//! For multinomials `J` has a closed form. For a pair of noncentral
//! chi-squared laws sharing `ν` it is integrated numerically; its square
//! root tracks the expected evidence closely.

use serde::{Deserialize, Serialize};

use crate::dist::{chisq_mean_var, ln_gamma, ChiSqParams};
use crate::dist::special::ln_poisson_term;
use crate::error::{domain, Error, Result};
use crate::evidence::EquivalenceParams;
use crate::quad;

/// Absolute tolerance requested from the quadrature in [`j_noncentral`].
pub const J_ABS_TOL: f64 = 1e-9;

const MAX_INTERVALS: usize = 4000;

fn positive_pair(p: &[f64], q: &[f64]) -> Result<()> {
    if p.len() != q.len() {
        return domain(format!("vectors differ in length ({} vs {})", p.len(), q.len()));
    }
    if p.iter().chain(q).any(|x| !(*x > 0.0)) {
        return domain("divergence is infinite: a cell probability is zero");
    }
    Ok(())
}

/// `n sum_i (p_i - q_i) ln(p_i / q_i)` between `M(n, p)` and `M(n, q)`.
pub fn kld_j_multinomial(p: &[f64], q: &[f64], n: u64) -> Result<f64> {
    positive_pair(p, q)?;
    Ok(n as f64 * p.iter().zip(q).map(|(a, b)| (a - b) * (a / b).ln()).sum::<f64>())
}

/// `J(p, u_r) = n sum_i (p_i - 1/r) ln p_i`.
pub fn j_uniform(p: &[f64], n: u64) -> Result<f64> {
    if p.iter().any(|x| !(*x > 0.0)) {
        return domain("divergence is infinite: a cell probability is zero");
    }
    let inv_r = 1.0 / p.len() as f64;
    Ok(n as f64 * p.iter().map(|x| (x - inv_r) * x.ln()).sum::<f64>())
}

fn central_ln_density(x: f64, nu: f64) -> f64 {
    let a = 0.5 * nu;
    (a - 1.0) * (0.5 * x).ln() - 0.5 * x - ln_gamma(a) - std::f64::consts::LN_2
}

/// Log-density of `χ²_{ν,λ}`; `-inf` for `x <= 0`.
pub fn chisq_ln_density(x: f64, params: ChiSqParams) -> f64 {
    if !(x > 0.0) {
        return f64::NEG_INFINITY;
    }
    if x.is_infinite() {
        return f64::NEG_INFINITY;
    }
    let nu = params.nu;
    if params.lambda == 0.0 {
        return central_ln_density(x, nu);
    }
    let m = 0.5 * params.lambda;
    let term = |j: u64| ln_poisson_term(j as f64, m) + central_ln_density(x, nu + 2.0 * j as f64);
    // successive-term ratio m x / (2 (j+1)(ν/2 + j)) falls through one at j*
    let h = 0.5 * nu;
    let b = h + 1.0;
    let disc = b * b - 4.0 * (h - 0.5 * m * x);
    let peak = if disc > 0.0 { ((-b + disc.sqrt()) / 2.0).max(0.0).round() as u64 } else { 0 };
    let top = term(peak);

    const REL: f64 = 1e-18;
    let mut sum = 1.0;
    let mut j = peak;
    loop {
        let ratio = m * x / (2.0 * (j as f64 + 1.0) * (h + j as f64));
        j += 1;
        let rel = (term(j) - top).exp();
        sum += rel;
        if ratio < 1.0 && rel / (1.0 - ratio) < REL * sum {
            break;
        }
    }
    let mut j = peak;
    while j > 0 {
        let ratio = j as f64 * (h + j as f64 - 1.0) / (0.5 * m * x);
        j -= 1;
        let rel = (term(j) - top).exp();
        sum += rel;
        if ratio < 1.0 && rel / (1.0 - ratio) < REL * sum {
            break;
        }
    }
    top + sum.ln()
}

/// Density of `χ²_{ν,λ}`; zero for `x <= 0`.
pub fn chisq_density(x: f64, params: ChiSqParams) -> f64 {
    chisq_ln_density(x, params).exp()
}

/// Density values tabulated on an evenly spaced support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityGrid {
    pub support: Vec<f64>,
    pub step: f64,
    pub values: Vec<f64>,
}

impl DensityGrid {
    /// Tabulates the density on `points` nodes spanning `[lo, hi]`, and
    /// fails if the trapezoid mass misses one by more than `1e-6`.
    pub fn tabulate(params: ChiSqParams, lo: f64, hi: f64, points: usize) -> Result<Self> {
        if points < 2 || !(hi > lo) || lo < 0.0 {
            return domain("density grid needs hi > lo >= 0 and at least two points");
        }
        let step = (hi - lo) / (points - 1) as f64;
        let support: Vec<f64> = (0..points).map(|i| lo + step * i as f64).collect();
        let values = support.iter().map(|&x| chisq_density(x, params)).collect();
        let grid = Self { support, step, values };
        let mass = grid.integral();
        if (mass - 1.0).abs() > 1e-6 {
            return domain(format!("tabulated density integrates to {mass}"));
        }
        Ok(grid)
    }

    pub fn integral(&self) -> f64 {
        let inner: f64 = self.values.iter().sum();
        let ends = self.values.first().unwrap_or(&0.0) + self.values.last().unwrap_or(&0.0);
        self.step * (inner - 0.5 * ends)
    }
}

/// Symmetrized divergence between `χ²_{ν,λa}` and `χ²_{ν,λb}`.
///
/// Integrated in `t = sqrt(x)` to absorb the `x^(ν/2 - 1)` behaviour at the
/// origin, up to `ν + λmax + 40 sd + 20` where both densities are below
/// `e^-100` and the remaining mass is negligible.
pub fn j_noncentral(nu: f64, lambda_a: f64, lambda_b: f64) -> Result<f64> {
    j_noncentral_tol(nu, lambda_a, lambda_b, J_ABS_TOL)
}

pub fn j_noncentral_tol(nu: f64, lambda_a: f64, lambda_b: f64, abs_tol: f64) -> Result<f64> {
    let pa = ChiSqParams::new(nu, lambda_a)?;
    let pb = ChiSqParams::new(nu, lambda_b)?;
    if lambda_a == lambda_b {
        return Ok(0.0);
    }
    let (mean_hi, var_hi) = chisq_mean_var(ChiSqParams::new(nu, lambda_a.max(lambda_b))?);
    let upper = mean_hi + 40.0 * var_hi.sqrt() + 20.0;
    let integrand = |t: f64| {
        let x = t * t;
        let la = chisq_ln_density(x, pa);
        let lb = chisq_ln_density(x, pb);
        if la == f64::NEG_INFINITY && lb == f64::NEG_INFINITY {
            return 0.0;
        }
        let d = (la - lb).abs();
        if d == 0.0 {
            return 0.0;
        }
        // (fa - fb) ln(fa/fb) = e^max (1 - e^-|d|) |d|
        la.max(lb).exp() * -(-d).exp_m1() * d * 2.0 * t
    };
    let mut breaks: Vec<f64> = (0..=16).map(|i| upper.sqrt() * i as f64 / 16.0).collect();
    breaks.push((nu + lambda_a).sqrt());
    breaks.push((nu + lambda_b).sqrt());
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let r = quad::integrate(integrand, &breaks, abs_tol, 0.0, MAX_INTERVALS);
    if r.intervals >= MAX_INTERVALS && r.error > 1e3 * abs_tol {
        return Err(Error::Numerical(format!(
            "divergence integral error estimate {:.3e} exceeds tolerance {abs_tol:.1e}",
            r.error
        )));
    }
    Ok(r.value.max(0.0))
}

/// `sgn(λ₀ - λ) sqrt(J(λ₀, λ))`, comparable to the expected evidence for
/// equivalence.
pub fn signed_root_j(params: EquivalenceParams, lambda: f64) -> Result<f64> {
    let j = j_noncentral(params.nu, params.lambda0, lambda)?;
    let sign = if lambda < params.lambda0 {
        1.0
    } else if lambda > params.lambda0 {
        -1.0
    } else {
        0.0
    };
    Ok(sign * j.sqrt())
}
