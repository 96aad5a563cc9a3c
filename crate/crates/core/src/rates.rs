//! SINR/SNR expressions, rate thresholds and the minimum NOMA rate.
//!
//! Rates are in bits per channel use (base-2 logarithm).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::EffectiveChannel;
use crate::error::{Error, Result};
use crate::linalg;
use crate::robust::{check_sic_constraints, CheckMode};

/// Tolerance on `‖w‖² <= 1` accepted by [`Beamformer::new`].
pub const NORM_TOL: f64 = 1e-9;

/// Rate thresholds of the SIC constraints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// `2^{R0} - 1`
    pub eta: f64,
    /// Bound on `Σ_{k,l} |w^H g_{k,l}|^{-2}`.
    pub eps: f64,
    /// Bound on `Σ_l |w^H h_{i,l}|^{-2}` for each NOMA user.
    pub eps1: f64,
}

/// Computes `eta = 2^{R0} - 1`, `eps = ρNM(1/eta - 1)` and
/// `eps1 = ρM(1/eta - 1)`.
///
/// The high-mobility SINR is always below one, so targets of 1 BPCU or more
/// are rejected up front.
pub fn thresholds(rho: f64, r0: f64, n: usize, m: usize) -> Result<Thresholds> {
    if !(r0 > 0.0) {
        return Err(Error::InvalidParameter(format!("target rate must be positive, got {r0}")));
    }
    if r0 >= 1.0 {
        return Err(Error::InfeasibleTarget(r0));
    }
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(Error::InvalidParameter(format!("transmit SNR must be positive, got {rho}")));
    }
    let eta = r0.exp2() - 1.0;
    let eps1 = rho * m as f64 * (1.0 / eta - 1.0);
    Ok(Thresholds { eta, eps: n as f64 * eps1, eps1 })
}

/// Scalars of one beamforming problem instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemParams {
    n: usize,
    m: usize,
    v: usize,
    rho: f64,
    r0: f64,
    sigma: f64,
    thresholds: Thresholds,
}

impl ProblemParams {
    pub fn new(n: usize, m: usize, v: usize, rho: f64, r0: f64, sigma: f64) -> Result<Self> {
        if n == 0 || m == 0 || v == 0 {
            return Err(Error::InvalidParameter(format!("N, M, V must be positive (got {n}, {m}, {v})")));
        }
        if !(sigma >= 0.0) {
            return Err(Error::NegativeSigma(sigma));
        }
        let thresholds = thresholds(rho, r0, n, m)?;
        Ok(Self { n, m, v, rho, r0, sigma, thresholds })
    }

    /// Same as [`ProblemParams::new`] with the SNR given in dB.
    pub fn from_db(n: usize, m: usize, v: usize, rho_db: f64, r0: f64, sigma: f64) -> Result<Self> {
        Self::new(n, m, v, db_to_linear(rho_db), r0, sigma)
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn m(&self) -> usize {
        self.m
    }
    pub fn v(&self) -> usize {
        self.v
    }
    pub fn rho(&self) -> f64 {
        self.rho
    }
    pub fn r0(&self) -> f64 {
        self.r0
    }
    pub fn sigma(&self) -> f64 {
        self.sigma
    }
    pub fn thresholds(&self) -> Thresholds {
        self.thresholds
    }
    pub fn eta(&self) -> f64 {
        self.thresholds.eta
    }
    pub fn eps(&self) -> f64 {
        self.thresholds.eps
    }
    pub fn eps1(&self) -> f64 {
        self.thresholds.eps1
    }

    pub fn with_rho(&self, rho: f64) -> Result<Self> {
        Self::new(self.n, self.m, self.v, rho, self.r0, self.sigma)
    }

    pub fn with_sigma(&self, sigma: f64) -> Result<Self> {
        Self::new(self.n, self.m, self.v, self.rho, self.r0, sigma)
    }

    pub(crate) fn check_channel(&self, ch: &EffectiveChannel) -> Result<()> {
        if ch.n != self.n || ch.m != self.m || ch.v != self.v {
            return Err(Error::InvalidParameter(format!(
                "channel is {}x{} with {} antennas, parameters expect {}x{} with {}",
                ch.n, ch.m, ch.v, self.n, self.m, self.v
            )));
        }
        if ch.sigma != self.sigma {
            return Err(Error::InvalidParameter(format!(
                "channel error radius {} differs from the parameters' {}",
                ch.sigma, self.sigma
            )));
        }
        Ok(())
    }
}

/// `ρ_dB = 10 log10(ρ)`.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Beamforming vector with `‖w‖² <= 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Beamformer(Vec<Complex64>);

impl Beamformer {
    pub fn new(weights: Vec<Complex64>) -> Result<Self> {
        let n2 = linalg::norm_sq(&weights);
        if weights.is_empty() {
            return Err(Error::InvalidParameter("empty beamformer".into()));
        }
        if !(n2 <= 1.0 + NORM_TOL) {
            return Err(Error::BeamformerNorm(n2));
        }
        Ok(Self(weights))
    }

    /// Scales `weights` to unit norm.
    pub fn normalized(weights: Vec<Complex64>) -> Result<Self> {
        let n = linalg::norm(&weights);
        if n == 0.0 || !n.is_finite() {
            return Err(Error::ZeroBeamformer);
        }
        Ok(Self(linalg::scale(&weights, Complex64::new(1.0 / n, 0.0))))
    }

    pub fn weights(&self) -> &[Complex64] {
        &self.0
    }

    pub fn into_weights(self) -> Vec<Complex64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn norm_sq(&self) -> f64 {
        linalg::norm_sq(&self.0)
    }

    /// `|w^H h|²`.
    pub fn gain(&self, h: &[Complex64]) -> f64 {
        linalg::dotc(&self.0, h).norm_sqr()
    }
}

/// `ρ / (ρ + (1/K) Σ |w^H d_j|^{-2})` over the `K` given bins; zero when any
/// bin is nulled.
pub fn sinr_from_bins<'a>(w: &[Complex64], bins: impl IntoIterator<Item = &'a [Complex64]>, rho: f64) -> f64 {
    let mut sum = 0.0;
    let mut count = 0usize;
    for d in bins {
        let gain = linalg::dotc(w, d).norm_sqr();
        if gain == 0.0 {
            return 0.0;
        }
        sum += 1.0 / gain;
        count += 1;
    }
    if count == 0 || !sum.is_finite() {
        return 0.0;
    }
    rho / (rho + sum / count as f64)
}

/// SINR of the high-mobility user's symbols after equalization at user `i`
/// (`0` for the high-mobility user itself, `1..=M` for NOMA users), using
/// the true channels. Returns 0 when any bin is nulled.
pub fn sinr_high_mobility(w: &Beamformer, ch: &EffectiveChannel, p: &ProblemParams, user: usize) -> Result<f64> {
    p.check_channel(ch)?;
    if user > ch.num_users() {
        return Err(Error::UserIndexOutOfRange { index: user, max: ch.num_users() });
    }
    let rho = p.rho();
    if user == 0 {
        Ok(sinr_from_bins(w.weights(), ch.g.iter().map(Vec::as_slice), rho))
    } else {
        // Doppler-free channel: every Doppler bin repeats the k = 0 row.
        let row = &ch.h[user - 1];
        let bins = (0..ch.n).flat_map(|_| row.iter().map(Vec::as_slice));
        Ok(sinr_from_bins(w.weights(), bins, rho))
    }
}

/// `ρ |w^H h_{i,i-1}|²` for NOMA user `i` in `1..=M`.
pub fn snr_noma(w: &Beamformer, ch: &EffectiveChannel, p: &ProblemParams, user: usize) -> Result<f64> {
    p.check_channel(ch)?;
    if user == 0 || user > ch.num_users() {
        return Err(Error::UserIndexOutOfRange { index: user, max: ch.num_users() });
    }
    Ok(p.rho() * w.gain(ch.h(user, user - 1)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    /// `R_min`; zero when the SIC check failed.
    pub min_rate: f64,
    /// `log2(1 + SNR_i)` for each NOMA user, regardless of the SIC outcome.
    pub user_rates: Vec<f64>,
    pub sic_feasible: bool,
}

/// Minimum NOMA rate on the true channels; zero when the true-channel SIC
/// constraints fail.
pub fn min_rate(w: &Beamformer, ch: &EffectiveChannel, p: &ProblemParams) -> Result<RateReport> {
    let user_rates = (1..=ch.num_users())
        .map(|i| snr_noma(w, ch, p, i).map(|s| (1.0 + s).log2()))
        .collect::<Result<Vec<f64>>>()?;
    let sic_feasible = check_sic_constraints(w, ch, p, CheckMode::TrueChannel)?.feasible;
    let min_rate = if sic_feasible {
        user_rates.iter().copied().fold(f64::INFINITY, f64::min)
    } else {
        0.0
    };
    Ok(RateReport { min_rate, user_rates, sic_feasible })
}
