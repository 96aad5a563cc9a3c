//! Independent reference computations used by the integration tests. They
//! only use dense matrices and plain loops, never the library's transforms.
#![allow(dead_code)]

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

pub fn cn<R: Rng>(rng: &mut R, len: usize) -> Vec<C> {
    (0..len)
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            c(re, im) * std::f64::consts::FRAC_1_SQRT_2
        })
        .collect()
}

pub fn dot(a: &[C], b: &[C]) -> C {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(a: &[C]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

pub fn rel_err(a: &[C], b: &[C]) -> f64 {
    let diff: Vec<C> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm(&diff) / norm(b).max(1e-300)
}

/// Unitary DFT matrix, `F[p][q] = e^{-j2πpq/n}/√n`.
pub fn dft(n: usize) -> DMatrix<C> {
    let s = 1.0 / (n as f64).sqrt();
    DMatrix::from_fn(n, n, |p, q| C::from_polar(s, -2.0 * PI * (p * q) as f64 / n as f64))
}

pub fn kron(a: &DMatrix<C>, b: &DMatrix<C>) -> DMatrix<C> {
    a.kronecker(b)
}

/// `(F_N^H ⊗ F_M)`
pub fn isfft_matrix(n: usize, m: usize) -> DMatrix<C> {
    kron(&dft(n).adjoint(), &dft(m))
}

/// `(F_N ⊗ F_M^H)`
pub fn sfft_matrix(n: usize, m: usize) -> DMatrix<C> {
    kron(&dft(n), &dft(m).adjoint())
}

pub fn apply(mat: &DMatrix<C>, x: &[C]) -> Vec<C> {
    (mat * DVector::from_column_slice(x)).as_slice().to_vec()
}

/// Block-circulant matrix with circulant blocks built entry by entry from
/// its first column.
pub fn block_circulant_dense(n: usize, m: usize, a: &[C]) -> DMatrix<C> {
    DMatrix::from_fn(n * m, n * m, |r, col| {
        let (rn, rm) = (r / m, r % m);
        let (cn, cm) = (col / m, col % m);
        a[((rn + n - cn) % n) * m + (rm + m - cm) % m]
    })
}

/// Double sum `Σ_n Σ_m a[nM+m] e^{+j2πlm/M} e^{-j2πkn/N}` at flat index `kM+l`.
pub fn eigen_formula(n: usize, m: usize, a: &[C]) -> Vec<C> {
    let mut d = vec![C::new(0.0, 0.0); n * m];
    for k in 0..n {
        for l in 0..m {
            let mut acc = C::new(0.0, 0.0);
            for nn in 0..n {
                for mm in 0..m {
                    let phase = 2.0 * PI * ((l * mm) as f64 / m as f64 - (k * nn) as f64 / n as f64);
                    acc += a[nn * m + mm] * C::from_polar(1.0, phase);
                }
            }
            d[k * m + l] = acc;
        }
    }
    d
}

/// `(F_N ⊗ F_M^H) H (F_N^H ⊗ F_M)` computed densely.
pub fn similarity(n: usize, m: usize, h: &DMatrix<C>) -> DMatrix<C> {
    sfft_matrix(n, m) * h * isfft_matrix(n, m)
}

pub fn frob(m: &DMatrix<C>) -> f64 {
    m.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Numerical minimum of `|w^H (ĝ + e)|²` over `‖e‖ <= σ`: the best of
/// `samples` uniform points on the sphere, refined by projected gradient
/// descent onto the ball.
pub fn worst_case_oracle<R: Rng>(w: &[C], g_hat: &[C], sigma: f64, samples: usize, rng: &mut R) -> (f64, Vec<C>) {
    let v = w.len();
    let value = |e: &[C]| {
        let s: C = w.iter().zip(g_hat.iter().zip(e)).map(|(wi, (gi, ei))| wi.conj() * (gi + ei)).sum();
        s.norm_sqr()
    };
    let mut best = vec![C::new(0.0, 0.0); v];
    let mut best_val = value(&best);
    for _ in 0..samples {
        let dir = cn(rng, v);
        let len = norm(&dir);
        let e: Vec<C> = dir.iter().map(|x| x * (sigma / len)).collect();
        let val = value(&e);
        if val < best_val {
            best_val = val;
            best = e;
        }
    }
    let wn2 = norm(w).powi(2);
    // Projected steps that zero s along w. Near the boundary the component
    // orthogonal to w only shrinks by about σ/‖e‖ per step, so iterate until
    // the point stops moving rather than for a fixed count.
    let mut e = best.clone();
    for _ in 0..1_000_000 {
        let s: C = w.iter().zip(g_hat.iter().zip(&e)).map(|(wi, (gi, ei))| wi.conj() * (gi + ei)).sum();
        // ∂|s|²/∂e* = s·w
        let mut next: Vec<C> = e.iter().zip(w).map(|(ei, wi)| ei - wi * s / wn2).collect();
        let len = norm(&next);
        if len > sigma {
            next.iter_mut().for_each(|x| *x *= sigma / len);
        }
        let moved = rel_err(&next, &e);
        e = next;
        if moved < 1e-15 {
            break;
        }
    }
    let val = value(&e);
    if val < best_val {
        (val, e)
    } else {
        (best_val, best)
    }
}

/// Central difference of `f` at `w` along the real direction `delta`.
pub fn directional_fd(f: impl Fn(&[C]) -> f64, w: &[C], delta: &[C], step: f64) -> f64 {
    let plus: Vec<C> = w.iter().zip(delta).map(|(a, d)| a + d * step).collect();
    let minus: Vec<C> = w.iter().zip(delta).map(|(a, d)| a - d * step).collect();
    (f(&plus) - f(&minus)) / (2.0 * step)
}

pub fn inv_power(w: &[C], h: &[C]) -> f64 {
    1.0 / dot(w, h).norm_sqr()
}

pub fn robust_inv_power(w: &[C], g: &[C], sigma: f64) -> f64 {
    (dot(w, g).norm() - sigma * norm(w)).powi(-2)
}

/// Welch two-sample t-test; returns the two-sided p-value and the t
/// statistic of `mean(a) - mean(b)`.
pub fn welch(a: &[f64], b: &[f64]) -> (f64, f64) {
    use statrs::distribution::{ContinuousCDF, StudentsT};
    let stats = |x: &[f64]| {
        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (n, mean, var)
    };
    let (na, ma, va) = stats(a);
    let (nb, mb, vb) = stats(b);
    let se2 = va / na + vb / nb;
    if se2 == 0.0 {
        return (if ma == mb { 1.0 } else { 0.0 }, if ma == mb { 0.0 } else { (ma - mb).signum() * f64::INFINITY });
    }
    let t = (ma - mb) / se2.sqrt();
    let df = se2 * se2 / ((va / na).powi(2) / (na - 1.0) + (vb / nb).powi(2) / (nb - 1.0));
    let dist = StudentsT::new(0.0, 1.0, df).unwrap();
    (2.0 * (1.0 - dist.cdf(t.abs())), t)
}

/// One-sided test that `mean(a) > mean(b)` at level `alpha`.
pub fn significantly_greater(a: &[f64], b: &[f64], alpha: f64) -> bool {
    let (p, t) = welch(a, b);
    t > 0.0 && p / 2.0 < alpha
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Paired t-test on `a[i] - b[i]`; returns the one-sided p-value for
/// `mean(a) > mean(b)` and the t statistic.
pub fn paired_greater(a: &[f64], b: &[f64]) -> (f64, f64) {
    use statrs::distribution::{ContinuousCDF, StudentsT};
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let n = d.len() as f64;
    let m = mean(&d);
    let sd = (d.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    if sd == 0.0 {
        return (if m > 0.0 { 0.0 } else { 1.0 }, if m > 0.0 { f64::INFINITY } else { 0.0 });
    }
    let t = m / (sd / n.sqrt());
    let dist = StudentsT::new(0.0, 1.0, n - 1.0).unwrap();
    (1.0 - dist.cdf(t), t)
}
