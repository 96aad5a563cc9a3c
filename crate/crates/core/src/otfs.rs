//! Delay-Doppler / time-frequency transforms and block-circulant channels.
//!
//! Grids of `N` Doppler (or time) bins by `M` delay (or frequency) bins are
//! stored row-major: the entry at `(k, l)` lives at flat index `k * M + l`.
//! All DFT matrices are unitary, so
//!
//! - `isfft(x) = (F_N^H ⊗ F_M) x`
//! - `sfft(X)  = (F_N ⊗ F_M^H) X`
//!
//! A block-circulant matrix `H` whose first column is `a` is diagonalized as
//! `(F_N ⊗ F_M^H) H (F_N^H ⊗ F_M) = diag(d)` where
//! `d[kM+l] = Σ_n Σ_m a[nM+m] e^{+j2π lm/M} e^{-j2π kn/N}`, which makes
//! `(F_N^H ⊗ F_M) diag(d)^{-1} (F_N ⊗ F_M^H)` the exact inverse of `H`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Magnitude at or below which an equalizer eigenvalue is treated as zero.
pub const DEG_TOL: f64 = 1e-12;

/// Largest matrix order [`materialize`] will build.
pub const MAX_MATERIALIZE: usize = 256;

macro_rules! grid_type {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
        pub struct $name {
            n: usize,
            m: usize,
            entries: Vec<Complex64>,
        }

        impl $name {
            pub fn new(n: usize, m: usize, entries: Vec<Complex64>) -> Result<Self> {
                check_len(n, m, entries.len())?;
                Ok(Self { n, m, entries })
            }

            pub fn zeros(n: usize, m: usize) -> Self {
                Self { n, m, entries: vec![Complex64::new(0.0, 0.0); n * m] }
            }

            pub fn n(&self) -> usize {
                self.n
            }

            pub fn m(&self) -> usize {
                self.m
            }

            pub fn entries(&self) -> &[Complex64] {
                &self.entries
            }

            pub fn into_entries(self) -> Vec<Complex64> {
                self.entries
            }

            pub fn get(&self, row: usize, col: usize) -> Complex64 {
                self.entries[row * self.m + col]
            }

            pub fn set(&mut self, row: usize, col: usize, value: Complex64) {
                self.entries[row * self.m + col] = value;
            }
        }
    };
}

grid_type!(
    /// Delay-Doppler symbols, indexed by (Doppler `k`, delay `l`).
    DdGrid
);
grid_type!(
    /// Time-frequency samples, indexed by (time `n`, subcarrier `m`).
    TfGrid
);
grid_type!(
    /// Per-bin eigenvalues of a block-circulant channel, indexed by `(k, l)`.
    TfEigenvalues
);

/// Block-circulant matrix with circulant `M x M` blocks, stored by its first
/// column. Entry `nM + m` of the first column is the channel coefficient at
/// Doppler shift `n` and delay `m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockCirculant {
    n: usize,
    m: usize,
    first_column: Vec<Complex64>,
}

impl BlockCirculant {
    pub fn new(n: usize, m: usize, first_column: Vec<Complex64>) -> Result<Self> {
        check_len(n, m, first_column.len())?;
        Ok(Self { n, m, first_column })
    }

    /// Builds the first column from sparse `(doppler, delay, gain)` taps;
    /// repeated indices accumulate.
    pub fn from_taps(
        n: usize,
        m: usize,
        taps: impl IntoIterator<Item = (usize, usize, Complex64)>,
    ) -> Result<Self> {
        let mut first_column = vec![Complex64::new(0.0, 0.0); n * m];
        for (doppler, delay, gain) in taps {
            if doppler >= n || delay >= m {
                return Err(Error::InvalidTapIndex { doppler, delay, n, m });
            }
            first_column[doppler * m + delay] += gain;
        }
        Ok(Self { n, m, first_column })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn first_column(&self) -> &[Complex64] {
        &self.first_column
    }
}

fn check_len(n: usize, m: usize, len: usize) -> Result<()> {
    if n == 0 || m == 0 {
        return Err(Error::InvalidParameter(format!("grid dimensions must be positive, got {n}x{m}")));
    }
    if len != n * m {
        return Err(Error::DimensionMismatch { expected: n * m, got: len });
    }
    Ok(())
}

/// Unnormalized 2-D DFT: `outer` runs along the first (Doppler/time) index,
/// `inner` along the second (delay/frequency) index.
fn dft2(
    data: &[Complex64],
    n: usize,
    m: usize,
    outer: FftDirection,
    inner: FftDirection,
) -> Vec<Complex64> {
    let mut planner = FftPlanner::new();
    let mut out = data.to_vec();

    let inner_fft = planner.plan_fft(m, inner);
    inner_fft.process(&mut out);

    let outer_fft = planner.plan_fft(n, outer);
    let mut column = vec![Complex64::new(0.0, 0.0); n];
    for col in 0..m {
        for (row, c) in column.iter_mut().enumerate() {
            *c = out[row * m + col];
        }
        outer_fft.process(&mut column);
        for (row, c) in column.iter().enumerate() {
            out[row * m + col] = *c;
        }
    }
    out
}

fn scaled(mut v: Vec<Complex64>, s: f64) -> Vec<Complex64> {
    for x in &mut v {
        *x *= s;
    }
    v
}

/// `(F_N^H ⊗ F_M) x`: delay-Doppler symbols to the time-frequency plane.
pub fn isfft(x: &DdGrid) -> TfGrid {
    let (n, m) = (x.n, x.m);
    let raw = dft2(&x.entries, n, m, FftDirection::Inverse, FftDirection::Forward);
    TfGrid { n, m, entries: scaled(raw, 1.0 / ((n * m) as f64).sqrt()) }
}

/// `(F_N ⊗ F_M^H) X`, the inverse of [`isfft`].
pub fn sfft(x: &TfGrid) -> DdGrid {
    let (n, m) = (x.n, x.m);
    let raw = dft2(&x.entries, n, m, FftDirection::Forward, FftDirection::Inverse);
    DdGrid { n, m, entries: scaled(raw, 1.0 / ((n * m) as f64).sqrt()) }
}

/// Eigenvalues `D^{k,l}` of the block-circulant channel.
pub fn tf_eigenvalues(h: &BlockCirculant) -> TfEigenvalues {
    let entries = dft2(&h.first_column, h.n, h.m, FftDirection::Forward, FftDirection::Inverse);
    TfEigenvalues { n: h.n, m: h.m, entries }
}

/// Dense `NM x NM` matrix of `h`. Only intended for small grids.
pub fn materialize(h: &BlockCirculant) -> Result<DMatrix<Complex64>> {
    let (n, m) = (h.n, h.m);
    let order = n * m;
    if order > MAX_MATERIALIZE {
        return Err(Error::TooLarge { order, limit: MAX_MATERIALIZE });
    }
    Ok(DMatrix::from_fn(order, order, |r, c| {
        let (rn, rm) = (r / m, r % m);
        let (cn, cm) = (c / m, c % m);
        let dn = (rn + n - cn) % n;
        let dm = (rm + m - cm) % m;
        h.first_column[dn * m + dm]
    }))
}

/// Frequency-domain linear equalizer:
/// `(F_N^H ⊗ F_M) diag(d)^{-1} (F_N ⊗ F_M^H) y`.
pub fn equalize(y: &DdGrid, d_combined: &TfEigenvalues) -> Result<DdGrid> {
    if y.n != d_combined.n || y.m != d_combined.m {
        return Err(Error::DimensionMismatch {
            expected: y.n * y.m,
            got: d_combined.n * d_combined.m,
        });
    }
    if let Some((index, d)) = d_combined
        .entries
        .iter()
        .enumerate()
        .find(|(_, d)| d.norm() <= DEG_TOL)
    {
        return Err(Error::NearSingularEqualizer { index, magnitude: d.norm() });
    }
    let freq = sfft(&TfGrid { n: y.n, m: y.m, entries: y.entries.clone() });
    let divided: Vec<Complex64> = freq
        .entries
        .iter()
        .zip(&d_combined.entries)
        .map(|(v, d)| v / d)
        .collect();
    let back = isfft(&DdGrid { n: y.n, m: y.m, entries: divided });
    Ok(DdGrid { n: y.n, m: y.m, entries: back.entries })
}

/// `Σ_v w_v D^v`: eigenvalues of the beamformed channel `Σ_v w_v H^v`.
pub fn combine_eigenvalues(weights: &[Complex64], per_antenna: &[TfEigenvalues]) -> Result<TfEigenvalues> {
    if weights.len() != per_antenna.len() {
        return Err(Error::DimensionMismatch { expected: per_antenna.len(), got: weights.len() });
    }
    let first = per_antenna
        .first()
        .ok_or_else(|| Error::InvalidParameter("no antennas".into()))?;
    let mut entries = vec![Complex64::new(0.0, 0.0); first.entries.len()];
    for (w, d) in weights.iter().zip(per_antenna) {
        check_len(first.n, first.m, d.entries.len())?;
        for (acc, x) in entries.iter_mut().zip(&d.entries) {
            *acc += w * x;
        }
    }
    Ok(TfEigenvalues { n: first.n, m: first.m, entries })
}
