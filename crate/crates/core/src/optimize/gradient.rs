//! Inverse-power constraint functions, their gradients and first-order
//! models.
//!
//! Gradients follow the convention where, for a real function `f` of a
//! complex vector `w`, `f(w + δ) ≈ f(w) + Re{∇f^H δ}`; `∇f` here is twice
//! the Wirtinger derivative with respect to `w*`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg;
use crate::otfs::DEG_TOL;

/// `1 / |w^H h|²`.
pub fn inv_power(w: &[Complex64], h: &[Complex64]) -> f64 {
    1.0 / linalg::dotc(w, h).norm_sqr()
}

/// `-2 h h^H w / (w^H h h^H w)²`.
pub fn grad_inv_power(w: &[Complex64], h: &[Complex64]) -> Result<Vec<Complex64>> {
    let proj = linalg::dotc(h, w);
    let amplitude = proj.norm();
    if amplitude <= DEG_TOL {
        return Err(Error::DegenerateDirection(amplitude));
    }
    let q = amplitude * amplitude;
    Ok(linalg::scale(h, proj * (-2.0 / (q * q))))
}

/// `(|w^H ĝ| - σ‖w‖)^{-2}`, infinite inside the nulled region.
pub fn robust_inv_power(w: &[Complex64], g_hat: &[Complex64], sigma: f64) -> f64 {
    if sigma == 0.0 {
        return inv_power(w, g_hat);
    }
    let gap = linalg::dotc(w, g_hat).norm() - sigma * linalg::norm(w);
    if gap <= 0.0 {
        f64::INFINITY
    } else {
        1.0 / (gap * gap)
    }
}

/// Gradient of [`robust_inv_power`]:
/// `-2 [ĝĝ^H w / |w^H ĝ| - σ w / ‖w‖] / (|w^H ĝ| - σ‖w‖)³`.
pub fn grad_robust_power(w: &[Complex64], g_hat: &[Complex64], sigma: f64) -> Result<Vec<Complex64>> {
    if sigma == 0.0 {
        return grad_inv_power(w, g_hat).map_err(|_| Error::NulledRegion(0.0));
    }
    let proj = linalg::dotc(g_hat, w);
    let amplitude = proj.norm();
    let w_norm = linalg::norm(w);
    let gap = amplitude - sigma * w_norm;
    if gap <= DEG_TOL || amplitude <= DEG_TOL {
        return Err(Error::NulledRegion(gap));
    }
    let coef = -2.0 / (gap * gap * gap);
    let radial = sigma / w_norm;
    Ok(g_hat
        .iter()
        .zip(w)
        .map(|(g, wv)| (g * (proj / amplitude) - wv * radial) * coef)
        .collect())
}

/// First-order model `f(w0) + Re{∇^H (w - w0)}` of a constraint function.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub value: f64,
    pub grad: Vec<Complex64>,
    pub at: Vec<Complex64>,
}

impl LinearModel {
    pub fn inv_power(w0: &[Complex64], h: &[Complex64]) -> Result<Self> {
        Ok(Self { value: inv_power(w0, h), grad: grad_inv_power(w0, h)?, at: w0.to_vec() })
    }

    pub fn robust_inv_power(w0: &[Complex64], g_hat: &[Complex64], sigma: f64) -> Result<Self> {
        Ok(Self {
            value: robust_inv_power(w0, g_hat, sigma),
            grad: grad_robust_power(w0, g_hat, sigma)?,
            at: w0.to_vec(),
        })
    }

    pub fn eval(&self, w: &[Complex64]) -> f64 {
        let delta = linalg::sub(w, &self.at);
        self.value + linalg::dotc(&self.grad, &delta).re
    }

    /// Coefficients `c` and offset `c0` with `eval(w) = c · [Re w; Im w] + c0`.
    pub fn real_affine(&self) -> (Vec<f64>, f64) {
        let coeffs = linalg::to_real(&self.grad);
        let at = linalg::to_real(&self.at);
        let offset = self.value - coeffs.iter().zip(&at).map(|(a, b)| a * b).sum::<f64>();
        (coeffs, offset)
    }

    /// Sums models that share the same expansion point.
    pub fn sum<'a>(models: impl IntoIterator<Item = &'a LinearModel>) -> Option<LinearModel> {
        let mut iter = models.into_iter();
        let first = iter.next()?.clone();
        Some(iter.fold(first, |mut acc, m| {
            acc.value += m.value;
            for (a, g) in acc.grad.iter_mut().zip(&m.grad) {
                *a += g;
            }
            acc
        }))
    }
}
