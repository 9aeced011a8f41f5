//! Evidence on the unit-normal calibration scale.
//!
//! Both transforms piece together `sqrt(2S)` below `S = ν` and
//! `sqrt(S - ν/2)` above it, which keeps the result continuous with a
//! positive (or negative) derivative everywhere and gives it variance near
//! one across the noncentrality range. An evidence value `T` estimates its
//! own mean with a standard normal error, so it is reported as `T ± 1`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dist::normal_quantile;
use crate::error::{domain, Result};

/// Additive bias correction for lack-of-fit evidence is `BIAS_AGAINST / sqrt(ν)`.
pub const BIAS_AGAINST: f64 = 0.2;

pub const WEAK: f64 = 1.645;
pub const MODERATE: f64 = 3.3;
pub const STRONG: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Positive values favour lack of fit; negative values favour the model.
    AgainstNull,
    /// Positive values favour equivalence to the model.
    ForEquivalence,
}

/// A calibrated evidence value, `t ± se` with `se = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvidenceValue {
    pub t: f64,
    pub se: f64,
    pub direction: Direction,
    pub bias_adjusted: bool,
}

impl EvidenceValue {
    fn new(t: f64, direction: Direction, bias_adjusted: bool) -> Self {
        Self { t, se: 1.0, direction, bias_adjusted }
    }

    pub fn label(&self) -> EvidenceLabel {
        evidence_label(self.t)
    }

    /// Plain-language reading, e.g. "moderate evidence for equivalence".
    pub fn describe(&self) -> String {
        let label = self.label();
        if label.strength == Strength::Negligible {
            let lean = match (self.direction, label.sign) {
                (_, Sign::Zero) => "",
                (Direction::AgainstNull, Sign::Positive) => ", marginally toward lack of fit",
                (Direction::AgainstNull, Sign::Negative) => ", marginally toward the model",
                (Direction::ForEquivalence, Sign::Positive) => ", marginally toward equivalence",
                (Direction::ForEquivalence, Sign::Negative) => ", marginally toward non-equivalence",
            };
            return format!("negligible evidence{lean}");
        }
        let target = match (self.direction, label.sign) {
            (Direction::AgainstNull, Sign::Negative) => "for the null model",
            (Direction::AgainstNull, _) => "for lack of fit",
            (Direction::ForEquivalence, Sign::Negative) => "against equivalence",
            (Direction::ForEquivalence, _) => "for equivalence",
        };
        format!("{} evidence {target}", label.strength)
    }
}

impl fmt::Display for EvidenceValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.3} ± {}", self.t, self.se)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strength {
    Negligible,
    Weak,
    Moderate,
    Strong,
}

impl fmt::Display for Strength {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strength::Negligible => "negligible",
            Strength::Weak => "weak",
            Strength::Moderate => "moderate",
            Strength::Strong => "strong",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sign {
    Negative,
    Zero,
    Positive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvidenceLabel {
    pub strength: Strength,
    pub sign: Sign,
}

/// Degrees of freedom and equivalence boundary `λ₀`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceParams {
    pub nu: f64,
    pub lambda0: f64,
}

impl EquivalenceParams {
    pub fn new(nu: f64, lambda0: f64) -> Result<Self> {
        if !(nu > 0.0) || !nu.is_finite() {
            return domain(format!("degrees of freedom must be positive, got {nu}"));
        }
        if !(lambda0 > 0.0) || !lambda0.is_finite() {
            return domain(format!("equivalence boundary must be positive, got {lambda0}"));
        }
        Ok(Self { nu, lambda0 })
    }

    /// `sqrt(λ₀ + ν/2)`
    fn c1(&self) -> f64 {
        (self.lambda0 + 0.5 * self.nu).sqrt()
    }

    /// Bias correction subtracted at the boundary, `1 / (2 sqrt(λ₀ + ν/2))`.
    pub fn bias(&self) -> f64 {
        0.5 / self.c1()
    }
}

fn check_stat(s: f64) -> Result<()> {
    if !(s >= 0.0) || !s.is_finite() {
        return domain(format!("statistic must be finite and nonnegative, got {s}"));
    }
    Ok(())
}

/// Evidence against the null model (for `λ > 0`) from `S ~ χ²_{ν,λ}`.
pub fn evidence_against(s: f64, nu: f64, bias_adjust: bool) -> Result<EvidenceValue> {
    check_stat(s)?;
    if !(nu > 0.0) || !nu.is_finite() {
        return domain(format!("degrees of freedom must be positive, got {nu}"));
    }
    let t = if s < nu {
        (2.0 * s).sqrt() - (2.0 * nu).sqrt()
    } else {
        (s - 0.5 * nu).sqrt() - (0.5 * nu).sqrt()
    };
    let t = if bias_adjust { t + BIAS_AGAINST / nu.sqrt() } else { t };
    Ok(EvidenceValue::new(t, Direction::AgainstNull, bias_adjust))
}

/// First-order mean of [`evidence_against`]: `sqrt(λ + ν/2) - sqrt(ν/2)`.
pub fn expected_evidence_against(nu: f64, lambda: f64) -> f64 {
    (lambda + 0.5 * nu).sqrt() - (0.5 * nu).sqrt()
}

/// Evidence for equivalence (`λ < λ₀`) from `S ~ χ²_{ν,λ}`.
pub fn evidence_for_equivalence(s: f64, params: EquivalenceParams, bias_adjust: bool) -> Result<EvidenceValue> {
    check_stat(s)?;
    let params = EquivalenceParams::new(params.nu, params.lambda0)?;
    let nu = params.nu;
    let c1 = params.c1();
    let t = if s < nu {
        let c0 = c1 - (0.5 * nu).sqrt() + (2.0 * nu).sqrt();
        c0 - (2.0 * s).sqrt()
    } else {
        c1 - (s - 0.5 * nu).sqrt()
    };
    let t = if bias_adjust { t - params.bias() } else { t };
    Ok(EvidenceValue::new(t, Direction::ForEquivalence, bias_adjust))
}

/// First-order mean of [`evidence_for_equivalence`],
/// `K(λ) = sqrt(λ₀ + ν/2) - sqrt(λ + ν/2)`.
pub fn expected_evidence_equiv(params: EquivalenceParams, lambda: f64) -> f64 {
    params.c1() - (lambda + 0.5 * params.nu).sqrt()
}

/// `m₀ = K(0)`, the expected evidence when the model holds exactly.
pub fn max_expected_evidence(params: EquivalenceParams) -> f64 {
    expected_evidence_equiv(params, 0.0)
}

/// Expected evidence of a level-`alpha` test with the given power:
/// `Φ⁻¹(1 - α) + Φ⁻¹(power)`.
pub fn evidence_from_level_power(alpha: f64, power: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) || !(power > 0.0 && power < 1.0) {
        return domain(format!("level and power must lie in (0, 1), got {alpha}, {power}"));
    }
    Ok(normal_quantile(1.0 - alpha)? + normal_quantile(power)?)
}

/// Strength of `|t|` against the 1.645 / 3.3 / 5 scale, with its sign.
pub fn evidence_label(t: f64) -> EvidenceLabel {
    let a = t.abs();
    let strength = if a >= STRONG {
        Strength::Strong
    } else if a >= MODERATE {
        Strength::Moderate
    } else if a >= WEAK {
        Strength::Weak
    } else {
        Strength::Negligible
    };
    let sign = if t > 0.0 {
        Sign::Positive
    } else if t < 0.0 {
        Sign::Negative
    } else {
        Sign::Zero
    };
    EvidenceLabel { strength, sign }
}
