mod common;

use common::*;
use nalgebra::DMatrix;
use num_complex::Complex64 as C;
use otfs_noma::channel::{effective_channels, sample_taps, ChannelConfig, ChannelTapSet, EffectiveChannel, Tap};
use otfs_noma::optimize::random_beamformer;
use otfs_noma::rates::{min_rate, sinr_high_mobility, snr_noma, thresholds, Beamformer, ProblemParams};
use otfs_noma::robust::{check_sic_constraints_with_tol, CheckMode};
use otfs_noma::Error;
use proptest::prelude::*;

fn tap(doppler: usize, delay: usize, gain: f64) -> Tap {
    Tap { doppler, delay, gain: c(gain, 0.0) }
}

fn two_tap_scalar_channel() -> EffectiveChannel {
    let taps = ChannelTapSet {
        n: 2,
        m: 2,
        v: 1,
        users: vec![
            vec![vec![tap(0, 0, 1.0), tap(1, 1, 0.5)]],
            vec![vec![tap(0, 0, 1.0)]],
            vec![vec![tap(0, 0, 0.5), tap(0, 1, 0.25)]],
        ],
    };
    effective_channels(&taps).unwrap()
}

#[test]
fn sinr_matches_hand_evaluated_bins() {
    // D^{k,l} = 1 + 0.5 e^{jπ(l-k)}: 1.5, 0.5, 0.5, 1.5
    let ch = two_tap_scalar_channel();
    let rho = 3.0;
    let p = ProblemParams::new(2, 2, 1, rho, 0.5, 0.0).unwrap();
    let w = Beamformer::new(vec![c(1.0, 0.0)]).unwrap();
    let sum = 2.0 / 2.25 + 2.0 / 0.25;
    let want = rho / (rho + sum / 4.0);
    assert!((sinr_high_mobility(&w, &ch, &p, 0).unwrap() - want).abs() < 1e-12);
    assert!(want < 1.0);
}

#[test]
fn every_symbol_sees_the_same_post_equalization_sinr() {
    // Dense model: unit-power symbols, noise variance 1/ρ; detection output
    // for symbol j is x0[j] + Σ_q x_q[j] + (G z)[j] with
    // G = (F_N^H ⊗ F_M) D^{-1} (F_N ⊗ F_M^H).
    let (n, m, v) = (2, 2, 2);
    let taps = sample_taps(&ChannelConfig::two_path(n, m, v), &mut rng(21)).unwrap();
    let ch = effective_channels(&taps).unwrap();
    let rho = 5.0;
    let p = ProblemParams::new(n, m, v, rho, 0.5, 0.0).unwrap();
    let w = random_beamformer(v, &mut rng(22));
    // beamformed channel Σ_a conj(w_a) H_a, matching the gain w^H g
    let mut hsum = DMatrix::<C>::zeros(n * m, n * m);
    for a in 0..v {
        let mut col = vec![C::new(0.0, 0.0); n * m];
        for t in &taps.users[0][a] {
            col[t.doppler * m + t.delay] += t.gain;
        }
        hsum += block_circulant_dense(n, m, &col) * w.weights()[a].conj();
    }
    let d = similarity(n, m, &hsum);
    let dinv = DMatrix::from_fn(n * m, n * m, |i, j| if i == j { 1.0 / d[(i, i)] } else { C::new(0.0, 0.0) });
    let g = isfft_matrix(n, m) * dinv * sfft_matrix(n, m);
    // interference Σ_q x_q = sfft of unit-variance TF symbols
    let interf = sfft_matrix(n, m);
    let noise_cov = &g * g.adjoint();
    let interf_cov = &interf * interf.adjoint();
    let want = sinr_high_mobility(&w, &ch, &p, 0).unwrap();
    for j in 0..n * m {
        let sinr = 1.0 / (interf_cov[(j, j)].re + noise_cov[(j, j)].re / rho);
        assert!((sinr - want).abs() < 1e-9 * want, "symbol {j}: {sinr} vs {want}");
    }
}

#[test]
fn noma_snr_examples() {
    let ch = two_tap_scalar_channel();
    let p = ProblemParams::new(2, 2, 1, 10.0, 0.5, 0.0).unwrap();
    let w = Beamformer::new(vec![c(0.0, 1.0)]).unwrap();
    // h_{1,0} = 1, h_{2,1} = 0.5 - 0.25
    assert!((snr_noma(&w, &ch, &p, 1).unwrap() - 10.0).abs() < 1e-12);
    assert!((snr_noma(&w, &ch, &p, 2).unwrap() - 10.0 * 0.0625).abs() < 1e-12);
    assert!(matches!(snr_noma(&w, &ch, &p, 3), Err(Error::UserIndexOutOfRange { .. })));
    assert!(snr_noma(&w, &ch, &p, 0).is_err());
}

#[test]
fn matched_and_orthogonal_beams() {
    let taps = sample_taps(&ChannelConfig::two_path(4, 4, 2), &mut rng(23)).unwrap();
    let mut ch = effective_channels(&taps).unwrap();
    // force h_{1,0} = (2, 0)
    ch.h[0][0] = vec![c(2.0, 0.0), c(0.0, 0.0)];
    let p = ProblemParams::new(4, 4, 2, 10.0, 0.5, 0.0).unwrap();
    let matched = Beamformer::new(vec![c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
    assert!((snr_noma(&matched, &ch, &p, 1).unwrap() - 40.0).abs() < 1e-12);
    let orth = Beamformer::new(vec![c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
    assert_eq!(snr_noma(&orth, &ch, &p, 1).unwrap(), 0.0);
}

#[test]
fn noma_snr_matches_recomputation_from_taps() {
    let (n, m, v) = (4, 4, 3);
    let taps = sample_taps(&ChannelConfig::two_path(n, m, v), &mut rng(24)).unwrap();
    let ch = effective_channels(&taps).unwrap();
    let p = ProblemParams::new(n, m, v, 7.0, 0.5, 0.0).unwrap();
    let w = random_beamformer(v, &mut rng(25));
    for user in 1..=m {
        let h: Vec<C> = (0..v)
            .map(|a| {
                let mut col = vec![C::new(0.0, 0.0); n * m];
                for t in &taps.users[user][a] {
                    col[t.doppler * m + t.delay] += t.gain;
                }
                let idx = user - 1;
                similarity(n, m, &block_circulant_dense(n, m, &col))[(idx, idx)]
            })
            .collect();
        let want = 7.0 * dot(w.weights(), &h).norm_sqr();
        assert!((snr_noma(&w, &ch, &p, user).unwrap() - want).abs() < 1e-9 * want.max(1.0));
    }
}

#[test]
fn min_rate_of_two_user_instance() {
    // user 1: |h_{1,0}| = 1, user 2: |h_{2,1}| = 0.25, ρ = 100
    let ch = two_tap_scalar_channel();
    let p = ProblemParams::new(2, 2, 1, 100.0, 0.1, 0.0).unwrap();
    let w = Beamformer::new(vec![c(1.0, 0.0)]).unwrap();
    let r = min_rate(&w, &ch, &p).unwrap();
    assert!(r.sic_feasible);
    assert!((r.user_rates[0] - 101f64.log2()).abs() < 1e-12);
    assert!((r.user_rates[1] - (1.0 + 100.0 * 0.0625f64).log2()).abs() < 1e-12);
    assert_eq!(r.min_rate, r.user_rates[1]);
}

#[test]
fn failed_sic_check_zeroes_the_min_rate() {
    let ch = two_tap_scalar_channel();
    // ρ too small for 0.5 BPCU at the high-mobility user
    let p = ProblemParams::new(2, 2, 1, 0.1, 0.5, 0.0).unwrap();
    let w = Beamformer::new(vec![c(1.0, 0.0)]).unwrap();
    let r = min_rate(&w, &ch, &p).unwrap();
    assert!(!r.sic_feasible);
    assert_eq!(r.min_rate, 0.0);
    assert!(r.user_rates.iter().all(|&x| x > 0.0));
}

#[test]
fn nulled_user_gives_zero_rate() {
    let mut ch = two_tap_scalar_channel();
    ch.h[1][1] = vec![c(0.0, 0.0)];
    let p = ProblemParams::new(2, 2, 1, 100.0, 0.1, 0.0).unwrap();
    let w = Beamformer::new(vec![c(1.0, 0.0)]).unwrap();
    assert_eq!(min_rate(&w, &ch, &p).unwrap().min_rate, 0.0);
}

#[test]
fn mismatched_error_radius_is_rejected() {
    let ch = two_tap_scalar_channel();
    let p = ProblemParams::new(2, 2, 1, 1.0, 0.5, 0.1).unwrap();
    let w = Beamformer::new(vec![c(1.0, 0.0)]).unwrap();
    assert!(matches!(min_rate(&w, &ch, &p), Err(Error::InvalidParameter(_))));
}

#[test]
fn rate_and_inverse_power_constraints_flip_together() {
    let (n, m, v) = (8, 8, 4);
    let mut r = rng(26);
    for trial in 0..20 {
        let taps = sample_taps(&ChannelConfig::two_path(n, m, v), &mut r).unwrap();
        let ch = effective_channels(&taps).unwrap();
        let w = random_beamformer(v, &mut r);
        let eta = thresholds(1.0, 0.5, n, m).unwrap().eta;
        let sum: f64 = ch.g.iter().map(|g| inv_power(w.weights(), g)).sum();
        let rho_star = eta * sum / ((n * m) as f64 * (1.0 - eta));
        for (scale, expect) in [(1.0 + 1e-6, true), (1.0 - 1e-6, false)] {
            let p = ProblemParams::new(n, m, v, rho_star * scale, 0.5, 0.0).unwrap();
            let rate_ok = (1.0 + sinr_high_mobility(&w, &ch, &p, 0).unwrap()).log2() >= 0.5;
            let rep = check_sic_constraints_with_tol(&w, &ch, &p, CheckMode::TrueChannel, 0.0).unwrap();
            let alg_ok = rep.high_mobility_sum <= rep.eps;
            assert_eq!(rate_ok, expect, "trial {trial}");
            assert_eq!(alg_ok, expect, "trial {trial}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn sinr_grows_with_snr_and_noma_snr_is_linear(seed in any::<u64>(), rho in 0.01f64..1e3, factor in 1.001f64..10.0) {
        let mut r = rng(seed);
        let taps = sample_taps(&ChannelConfig::two_path(4, 4, 2), &mut r).unwrap();
        let ch = effective_channels(&taps).unwrap();
        let w = random_beamformer(2, &mut r);
        let p1 = ProblemParams::new(4, 4, 2, rho, 0.5, 0.0).unwrap();
        let p2 = p1.with_rho(rho * factor).unwrap();
        let s1 = sinr_high_mobility(&w, &ch, &p1, 0).unwrap();
        let s2 = sinr_high_mobility(&w, &ch, &p2, 0).unwrap();
        prop_assert!(s2 > s1);
        prop_assert!(s2 < 1.0);
        let n1 = snr_noma(&w, &ch, &p1, 2).unwrap();
        let n2 = snr_noma(&w, &ch, &p2, 2).unwrap();
        prop_assert!((n2 - factor * n1).abs() <= 1e-12 * n2.max(1e-300));
    }

    #[test]
    fn eps_is_n_times_eps1(rho in 1e-3f64..1e4, r0 in 0.01f64..0.99, n in 1usize..16, m in 1usize..16) {
        let t = thresholds(rho, r0, n, m).unwrap();
        prop_assert!((t.eps - n as f64 * t.eps1).abs() <= 1e-12 * t.eps);
    }
}
