//! Worst-case received power under a spherical CSI error ball and the SIC
//! feasibility checks built on it.
//!
//! For an estimate `ĝ` with error `‖e‖ <= σ`, the worst-case power
//! `min |w^H (ĝ + e)|²` depends on `e` only through `w^H e`, whose magnitude
//! is at most `σ‖w‖`. Hence it equals `(|w^H ĝ| - σ‖w‖)²` when positive and
//! zero otherwise (the error can null the beam, which makes the SIC
//! constraint unsatisfiable).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::EffectiveChannel;
use crate::error::{Error, Result};
use crate::linalg;
use crate::rates::{Beamformer, ProblemParams};

/// Slack below which `|w^H ĝ| - σ‖w‖` counts as nulled.
pub const NULL_TOL: f64 = 1e-12;

/// Relative slack tolerated by the SIC feasibility checks.
pub const FEASIBILITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorstCaseResult {
    /// Minimum of `|w^H (ĝ + e)|²` over the error ball.
    pub psi: f64,
    /// The error ball contains an `e` with `w^H (ĝ + e) = 0`.
    pub nulled: bool,
    /// A minimizing error (`None` when `σ = 0`).
    pub e_star: Option<Vec<Complex64>>,
    /// KKT multiplier of the norm constraint when the minimum is positive
    /// and `σ > 0`.
    pub lambda: Option<f64>,
}

/// Closed-form worst-case power `min_{‖e‖<=σ} |w^H (ĝ + e)|²`.
///
/// Outside the nulled region the minimizer is
/// `e* = -w w^H ĝ / (‖w‖² + λ*)` with `λ* = ‖w‖ |w^H ĝ| / σ - ‖w‖²`, which
/// puts `e*` on the sphere `‖e‖ = σ`.
pub fn worst_case_power(w: &[Complex64], g_hat: &[Complex64], sigma: f64) -> Result<WorstCaseResult> {
    if w.len() != g_hat.len() {
        return Err(Error::DimensionMismatch { expected: w.len(), got: g_hat.len() });
    }
    if !(sigma >= 0.0) {
        return Err(Error::NegativeSigma(sigma));
    }
    let w_norm_sq = linalg::norm_sq(w);
    if w_norm_sq == 0.0 {
        return Err(Error::ZeroBeamformer);
    }
    let w_norm = w_norm_sq.sqrt();
    let proj = linalg::dotc(w, g_hat);
    let amplitude = proj.norm();
    let radius = sigma * w_norm;

    if sigma == 0.0 && amplitude > 0.0 {
        return Ok(WorstCaseResult {
            psi: amplitude * amplitude,
            nulled: false,
            e_star: Some(vec![Complex64::new(0.0, 0.0); w.len()]),
            lambda: None,
        });
    }

    if amplitude <= radius + NULL_TOL {
        // w^H e = -w^H ĝ is reachable: pick the minimum-norm such error.
        let e = linalg::scale(w, -proj / w_norm_sq);
        return Ok(WorstCaseResult { psi: 0.0, nulled: true, e_star: Some(e), lambda: None });
    }

    let lambda = w_norm * amplitude / sigma - w_norm_sq;
    let e = linalg::scale(w, -proj / (w_norm_sq + lambda));
    let gap = amplitude - radius;
    Ok(WorstCaseResult { psi: gap * gap, nulled: false, e_star: Some(e), lambda: Some(lambda) })
}

/// Which high-mobility channel the SIC check uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckMode {
    /// Estimates `ĝ` with the channel's error radius.
    WorstCase,
    /// True channels `g` with no error.
    TrueChannel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    /// The error ball can null bin `(k, l)`.
    Nulled { k: usize, l: usize },
    HighMobilityRate { sum: f64, eps: f64 },
    NomaRate { user: usize, sum: f64, eps1: f64 },
    Power { norm_sq: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SicReport {
    pub mode: CheckMode,
    pub feasible: bool,
    /// `Σ_{k,l} 1/ψ_{k,l}` (infinite if any bin is nulled).
    pub high_mobility_sum: f64,
    pub eps: f64,
    /// `Σ_l |w^H h_{i,l}|^{-2}` per NOMA user.
    pub noma_sums: Vec<f64>,
    pub eps1: f64,
    pub norm_sq: f64,
    /// Smallest relative margin over all constraints, `1 - lhs/rhs`.
    pub min_slack: f64,
    pub violations: Vec<Violation>,
}

impl SicReport {
    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string(self)
    }
}

fn inv_gain(w: &[Complex64], h: &[Complex64]) -> f64 {
    let gain = linalg::dotc(w, h).norm_sqr();
    if gain == 0.0 {
        f64::INFINITY
    } else {
        1.0 / gain
    }
}

/// Evaluates every SIC constraint of the robust problem at `w` using
/// [`FEASIBILITY_TOL`].
pub fn check_sic_constraints(
    w: &Beamformer,
    ch: &EffectiveChannel,
    p: &ProblemParams,
    mode: CheckMode,
) -> Result<SicReport> {
    check_sic_constraints_with_tol(w, ch, p, mode, FEASIBILITY_TOL)
}

/// As [`check_sic_constraints`] with an explicit relative tolerance: a
/// constraint `lhs <= rhs` passes when `1 - lhs/rhs >= -tol`.
pub fn check_sic_constraints_with_tol(
    w: &Beamformer,
    ch: &EffectiveChannel,
    p: &ProblemParams,
    mode: CheckMode,
    tol: f64,
) -> Result<SicReport> {
    p.check_channel(ch)?;
    let weights = w.weights();
    let (estimates, sigma) = match mode {
        CheckMode::WorstCase => (&ch.g_hat, ch.sigma),
        CheckMode::TrueChannel => (&ch.g, 0.0),
    };
    let mut violations = Vec::new();

    let mut high_mobility_sum = 0.0;
    for (idx, g) in estimates.iter().enumerate() {
        let wc = worst_case_power(weights, g, sigma)?;
        if wc.nulled || wc.psi == 0.0 {
            violations.push(Violation::Nulled { k: idx / ch.m, l: idx % ch.m });
            high_mobility_sum = f64::INFINITY;
        } else {
            high_mobility_sum += 1.0 / wc.psi;
        }
    }
    let eps = p.eps();
    let mut min_slack = 1.0 - high_mobility_sum / eps;
    if high_mobility_sum.is_finite() && min_slack < -tol {
        violations.push(Violation::HighMobilityRate { sum: high_mobility_sum, eps });
    }

    let eps1 = p.eps1();
    let noma_sums: Vec<f64> = ch
        .h
        .iter()
        .map(|row| row.iter().map(|h| inv_gain(weights, h)).sum())
        .collect();
    for (i, &sum) in noma_sums.iter().enumerate() {
        let slack = 1.0 - sum / eps1;
        min_slack = min_slack.min(slack);
        if slack < -tol {
            violations.push(Violation::NomaRate { user: i + 1, sum, eps1 });
        }
    }

    let norm_sq = w.norm_sq();
    let power_slack = 1.0 - norm_sq;
    min_slack = min_slack.min(power_slack);
    if power_slack < -tol {
        violations.push(Violation::Power { norm_sq });
    }

    Ok(SicReport {
        mode,
        feasible: violations.is_empty(),
        high_mobility_sum,
        eps,
        noma_sums,
        eps1,
        norm_sq,
        min_slack,
        violations,
    })
}
