mod common;

use common::*;
use otfs_noma::otfs::{
    combine_eigenvalues, equalize, isfft, materialize, sfft, tf_eigenvalues, BlockCirculant, DdGrid, TfEigenvalues,
    TfGrid,
};
use otfs_noma::Error;
use proptest::prelude::*;

#[test]
fn isfft_matches_dense_kronecker_product() {
    let mut r = rng(1);
    for &(n, m) in &[(1, 1), (2, 2), (2, 4), (4, 2), (8, 8), (3, 5)] {
        let x = cn(&mut r, n * m);
        let got = isfft(&DdGrid::new(n, m, x.clone()).unwrap());
        let want = apply(&isfft_matrix(n, m), &x);
        assert!(rel_err(got.entries(), &want) < 1e-12, "isfft {n}x{m}");
        let back = sfft(&TfGrid::new(n, m, want.clone()).unwrap());
        assert!(rel_err(back.entries(), &apply(&sfft_matrix(n, m), &want)) < 1e-12);
    }
}

#[test]
fn round_trips() {
    let mut r = rng(2);
    let x = cn(&mut r, 64);
    let tf = isfft(&DdGrid::new(8, 8, x.clone()).unwrap());
    assert!(rel_err(sfft(&tf).entries(), &x) < 1e-12);
    let y = cn(&mut r, 16);
    let dd = sfft(&TfGrid::new(4, 4, y.clone()).unwrap());
    assert!(rel_err(isfft(&dd).entries(), &y) < 1e-12);
}

#[test]
fn eigenvalues_match_direct_formula_and_dense_diagonalization() {
    let mut r = rng(3);
    let a = cn(&mut r, 16);
    let h = BlockCirculant::new(4, 4, a.clone()).unwrap();
    let d = tf_eigenvalues(&h);
    assert!(rel_err(d.entries(), &eigen_formula(4, 4, &a)) < 1e-12);
    let sim = similarity(4, 4, &block_circulant_dense(4, 4, &a));
    let diag: Vec<_> = (0..16).map(|i| sim[(i, i)]).collect();
    assert!(rel_err(d.entries(), &diag) < 1e-12);
}

#[test]
fn materialize_agrees_with_oracle_and_diagonalizes_2x2() {
    let mut r = rng(4);
    let a = cn(&mut r, 4);
    let h = BlockCirculant::new(2, 2, a.clone()).unwrap();
    let dense = materialize(&h).unwrap();
    assert_eq!(dense, block_circulant_dense(2, 2, &a));
    let mut sim = similarity(2, 2, &dense);
    let d = tf_eigenvalues(&h);
    for i in 0..4 {
        sim[(i, i)] -= d.entries()[i];
    }
    assert!(frob(&sim) < 1e-12 * norm(&a));
}

#[test]
fn stated_ordering_permutes_the_eigenvalues() {
    // (F_N^H ⊗ F_M) H (F_N ⊗ F_M^H) is diagonal as well, but entry kM+l holds
    // the formula's value at the reflected bin ((-k) mod N, (-l) mod M).
    let (n, m) = (4, 4);
    let mut r = rng(5);
    let a = cn(&mut r, n * m);
    let other = isfft_matrix(n, m) * block_circulant_dense(n, m, &a) * sfft_matrix(n, m);
    let formula = eigen_formula(n, m, &a);
    let mut off = other.clone();
    let mut same_index = 0.0f64;
    for k in 0..n {
        for l in 0..m {
            let i = k * m + l;
            let reflected = ((n - k) % n) * m + (m - l) % m;
            assert!((other[(i, i)] - formula[reflected]).norm() < 1e-10);
            same_index = same_index.max((other[(i, i)] - formula[i]).norm());
            off[(i, i)] = c(0.0, 0.0);
        }
    }
    assert!(frob(&off) < 1e-10);
    assert!(same_index > 1e-3);
}

#[test]
fn equalizer_recovers_superposed_symbols_end_to_end() {
    let mut r = rng(6);
    for v in [1usize, 3] {
        let (n, m) = (4, 4);
        let x0 = cn(&mut r, n * m);
        let xq: Vec<Vec<_>> = (0..m).map(|_| cn(&mut r, n * m)).collect();
        let w = if v == 1 { vec![c(1.0, 0.0)] } else { cn(&mut r, v) };
        let mut total = x0.clone();
        for x in &xq {
            for (t, xi) in total.iter_mut().zip(x) {
                *t += xi;
            }
        }
        let chans: Vec<_> = (0..v).map(|_| cn(&mut r, n * m)).collect();
        let mut hsum = nalgebra::DMatrix::zeros(n * m, n * m);
        for (wv, a) in w.iter().zip(&chans) {
            hsum += block_circulant_dense(n, m, a) * *wv;
        }
        let y = apply(&hsum, &total);
        let eig: Vec<TfEigenvalues> =
            chans.iter().map(|a| tf_eigenvalues(&BlockCirculant::new(n, m, a.clone()).unwrap())).collect();
        let d = combine_eigenvalues(&w, &eig).unwrap();
        let out = equalize(&DdGrid::new(n, m, y).unwrap(), &d).unwrap();
        assert!(rel_err(out.entries(), &total) < 1e-9, "V = {v}");
    }
}

#[test]
fn singular_equalizer_is_rejected() {
    let mut d = vec![c(1.0, 0.0); 4];
    d[2] = c(0.0, 0.0);
    let d = TfEigenvalues::new(2, 2, d).unwrap();
    let y = DdGrid::zeros(2, 2);
    assert!(matches!(equalize(&y, &d), Err(Error::NearSingularEqualizer { index: 2, .. })));
}

#[test]
fn materialize_size_guard() {
    let h = BlockCirculant::new(16, 17, vec![c(0.0, 0.0); 16 * 17]).unwrap();
    assert!(matches!(materialize(&h), Err(Error::TooLarge { .. })));
}

fn grid_dims() -> impl Strategy<Value = (usize, usize)> {
    (prop::sample::select(vec![1usize, 2, 3, 4, 8]), prop::sample::select(vec![1usize, 2, 4, 5, 8]))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn isfft_is_unitary((n, m) in grid_dims(), seed in any::<u64>()) {
        let x = cn(&mut rng(seed), n * m);
        let y = isfft(&DdGrid::new(n, m, x.clone()).unwrap());
        prop_assert!((norm(y.entries()) - norm(&x)).abs() <= 1e-12 * norm(&x));
    }

    #[test]
    fn transforms_are_linear((n, m) in grid_dims(), seed in any::<u64>(), s in -3.0f64..3.0) {
        let mut r = rng(seed);
        let x = cn(&mut r, n * m);
        let z = cn(&mut r, n * m);
        let alpha = c(s, 0.5);
        let combo: Vec<_> = x.iter().zip(&z).map(|(a, b)| a * alpha + b).collect();
        let lhs = isfft(&DdGrid::new(n, m, combo).unwrap());
        let fx = isfft(&DdGrid::new(n, m, x).unwrap());
        let fz = isfft(&DdGrid::new(n, m, z).unwrap());
        let rhs: Vec<_> = fx.entries().iter().zip(fz.entries()).map(|(a, b)| a * alpha + b).collect();
        prop_assert!(rel_err(lhs.entries(), &rhs) < 1e-12);
    }

    #[test]
    fn block_circulants_diagonalize((n, m) in grid_dims(), seed in any::<u64>()) {
        let a = cn(&mut rng(seed), n * m);
        let h = BlockCirculant::new(n, m, a.clone()).unwrap();
        let mut sim = similarity(n, m, &materialize(&h).unwrap());
        let d = tf_eigenvalues(&h);
        for i in 0..n * m {
            sim[(i, i)] -= d.entries()[i];
        }
        prop_assert!(frob(&sim) <= 1e-9 * norm(&a));
    }
}
