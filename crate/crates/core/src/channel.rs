//! Sparse delay-Doppler channels, effective beamforming channels and
//! norm-bounded CSI errors.
//!
//! User 0 is the high-mobility user; users `1..=M` are the low-mobility NOMA
//! users, whose taps carry no Doppler shift.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::otfs::{tf_eigenvalues, BlockCirculant, TfEigenvalues};

/// Grid position of a channel tap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TapIndex {
    pub doppler: usize,
    pub delay: usize,
}

impl TapIndex {
    pub const fn new(doppler: usize, delay: usize) -> Self {
        Self { doppler, delay }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    pub n: usize,
    pub m: usize,
    pub v: usize,
    /// Only recorded for documentation; no computation uses it.
    pub subcarrier_spacing_hz: f64,
    /// Only recorded for documentation; no computation uses it.
    pub carrier_frequency_hz: f64,
    pub u0_taps: Vec<TapIndex>,
    pub noma_taps: Vec<TapIndex>,
    /// Variance of each complex Gaussian tap gain.
    pub tap_variance: f64,
}

impl ChannelConfig {
    /// Two-path model: the high-mobility user sees taps at (0,0) and (1,1),
    /// NOMA users at (0,0) and (0,1); every tap is CN(0, 1/2).
    pub fn two_path(n: usize, m: usize, v: usize) -> Self {
        Self {
            n,
            m,
            v,
            subcarrier_spacing_hz: 2e3,
            carrier_frequency_hz: 4e9,
            u0_taps: vec![TapIndex::new(0, 0), TapIndex::new(1 % n, 1 % m)],
            noma_taps: vec![TapIndex::new(0, 0), TapIndex::new(0, 1 % m)],
            tap_variance: 0.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m == 0 || self.v == 0 {
            return Err(Error::InvalidParameter(format!(
                "N, M and V must be positive (got {}, {}, {})",
                self.n, self.m, self.v
            )));
        }
        if !(self.tap_variance > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tap variance must be positive, got {}",
                self.tap_variance
            )));
        }
        for t in self.u0_taps.iter().chain(&self.noma_taps) {
            if t.doppler >= self.n || t.delay >= self.m {
                return Err(Error::InvalidTapIndex {
                    doppler: t.doppler,
                    delay: t.delay,
                    n: self.n,
                    m: self.m,
                });
            }
        }
        if let Some(t) = self.noma_taps.iter().find(|t| t.doppler != 0) {
            return Err(Error::DopplerOnNomaTap { doppler: t.doppler, delay: t.delay });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tap {
    pub doppler: usize,
    pub delay: usize,
    pub gain: Complex64,
}

/// Taps for every user and antenna: `users[i][v]` lists the taps between
/// antenna `v` and user `i` (user 0 is the high-mobility user).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelTapSet {
    pub n: usize,
    pub m: usize,
    pub v: usize,
    pub users: Vec<Vec<Vec<Tap>>>,
}

impl ChannelTapSet {
    pub fn block_circulant(&self, user: usize, antenna: usize) -> Result<BlockCirculant> {
        BlockCirculant::from_taps(
            self.n,
            self.m,
            self.users[user][antenna].iter().map(|t| (t.doppler, t.delay, t.gain)),
        )
    }

    /// Eigenvalue grids of every antenna's channel to `user`.
    pub fn eigenvalues(&self, user: usize) -> Result<Vec<TfEigenvalues>> {
        (0..self.v)
            .map(|a| self.block_circulant(user, a).map(|h| tf_eigenvalues(&h)))
            .collect()
    }

    /// Per-bin channel vectors of `user`: entry `kM + l` holds
    /// `[D^{k,l,1}, ..., D^{k,l,V}]`.
    pub fn response_grid(&self, user: usize) -> Result<Vec<Vec<Complex64>>> {
        let per_antenna = self.eigenvalues(user)?;
        Ok((0..self.n * self.m)
            .map(|idx| per_antenna.iter().map(|d| d.entries()[idx]).collect())
            .collect())
    }
}

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(s * re, s * im)
}

/// Draws i.i.d. complex Gaussian gains for every configured tap, user-major,
/// then antenna, then tap order.
pub fn sample_taps<R: Rng + ?Sized>(cfg: &ChannelConfig, rng: &mut R) -> Result<ChannelTapSet> {
    cfg.validate()?;
    let users = (0..=cfg.m)
        .map(|user| {
            let layout = if user == 0 { &cfg.u0_taps } else { &cfg.noma_taps };
            (0..cfg.v)
                .map(|_| {
                    layout
                        .iter()
                        .map(|t| Tap {
                            doppler: t.doppler,
                            delay: t.delay,
                            gain: complex_gaussian(rng, cfg.tap_variance),
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    Ok(ChannelTapSet { n: cfg.n, m: cfg.m, v: cfg.v, users })
}

/// Beamforming-domain channel vectors.
///
/// `h[i-1][l]` is `h_{i,l}` of NOMA user `i` (taken at Doppler bin 0),
/// `g[kM+l]` is the high-mobility user's `g_{k,l}`, and `g_hat` the estimate
/// available to the transmitter, with `‖g - g_hat‖ <= sigma` per bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectiveChannel {
    pub n: usize,
    pub m: usize,
    pub v: usize,
    pub h: Vec<Vec<Vec<Complex64>>>,
    pub g: Vec<Vec<Complex64>>,
    pub g_hat: Vec<Vec<Complex64>>,
    pub sigma: f64,
}

impl EffectiveChannel {
    /// `h_{i,l}` for NOMA user `i` in `1..=M`.
    pub fn h(&self, user: usize, l: usize) -> &[Complex64] {
        &self.h[user - 1][l]
    }

    pub fn g(&self, k: usize, l: usize) -> &[Complex64] {
        &self.g[k * self.m + l]
    }

    pub fn g_hat(&self, k: usize, l: usize) -> &[Complex64] {
        &self.g_hat[k * self.m + l]
    }

    /// Number of NOMA users (equal to `M`).
    pub fn num_users(&self) -> usize {
        self.h.len()
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }

    pub fn from_json(s: &str) -> serde_json::Result<Self> {
        serde_json::from_str(s)
    }
}

/// Builds `h_{i,l}` and `g_{k,l}` from the taps; the estimate equals the
/// true channel.
pub fn effective_channels(taps: &ChannelTapSet) -> Result<EffectiveChannel> {
    let g = taps.response_grid(0)?;
    let h = (1..=taps.m)
        .map(|user| {
            let grid = taps.response_grid(user)?;
            // NOMA channels are Doppler-free, so the k = 0 row is the channel.
            Ok(grid.into_iter().take(taps.m).collect())
        })
        .collect::<Result<Vec<Vec<Vec<Complex64>>>>>()?;
    Ok(EffectiveChannel {
        n: taps.n,
        m: taps.m,
        v: taps.v,
        h,
        g_hat: g.clone(),
        g,
        sigma: 0.0,
    })
}

/// Uniform sample from the unit ball of `C^dim`.
pub fn unit_ball_sample<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<Complex64> {
    let direction: Vec<Complex64> = (0..dim).map(|_| complex_gaussian(rng, 2.0)).collect();
    let len = linalg::norm(&direction);
    let u: f64 = rng.random();
    // Radius law for a uniform ball in real dimension 2 * dim.
    let radius = u.powf(1.0 / (2 * dim) as f64);
    if len == 0.0 {
        return vec![Complex64::new(0.0, 0.0); dim];
    }
    linalg::scale(&direction, Complex64::new(radius / len, 0.0))
}

/// Replaces the estimates with `g_hat = g - e`, `e` uniform in the ball of
/// radius `sigma`. The draws do not depend on `sigma`, so the same generator
/// state yields errors that scale linearly with it.
pub fn apply_csi_error<R: Rng + ?Sized>(
    ch: &EffectiveChannel,
    sigma: f64,
    rng: &mut R,
) -> Result<EffectiveChannel> {
    if !(sigma >= 0.0) {
        return Err(Error::NegativeSigma(sigma));
    }
    let g_hat = ch
        .g
        .iter()
        .map(|g| {
            let e = unit_ball_sample(ch.v, rng);
            linalg::axpy(g, -sigma, &e)
        })
        .collect();
    Ok(EffectiveChannel { g_hat, sigma, ..ch.clone() })
}
