//! Beamformer designers.
//!
//! - [`sca_solve`]: successive convex approximation of the robust max-min
//!   problem, usable with any CSI error radius.
//! - [`sdr_solve`] / [`sdr_single_user`]: semidefinite relaxation with
//!   Gaussian randomization, perfect CSI only.
//! - [`random_beamformer`]: isotropic unit-norm baseline.

pub mod conic;
pub mod gradient;
pub mod sca;
pub mod sdr;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::rates::Beamformer;

pub use conic::{solve_conic, ConicProblem, SolveStatus, SolveStatusKind};
pub use gradient::{grad_inv_power, grad_robust_power, LinearModel};
pub use sca::{sca_solve, Objective, ScaOptions, ScaOutcome, ScaState};
pub use sdr::{sdr_single_user, sdr_solve, SdrOptions, SdrOutcome};

/// Standard complex Gaussian vector (unit variance per entry).
pub fn complex_normal<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Vec<Complex64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    (0..len)
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            Complex64::new(s * re, s * im)
        })
        .collect()
}

/// Unit-norm beamformer drawn uniformly from the complex sphere.
pub fn random_beamformer<R: Rng + ?Sized>(v: usize, rng: &mut R) -> Beamformer {
    loop {
        if let Ok(w) = Beamformer::normalized(complex_normal(v, rng)) {
            return w;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn random_beamformer_is_unit_norm_and_seeded() {
        let mut a = ChaCha8Rng::seed_from_u64(1);
        let mut b = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let w = random_beamformer(4, &mut a);
            assert!((w.norm_sq() - 1.0).abs() < 1e-12);
            assert_eq!(w, random_beamformer(4, &mut b));
        }
    }
}
