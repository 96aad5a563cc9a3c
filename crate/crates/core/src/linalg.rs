//! Small helpers for length-`V` complex vectors.

use num_complex::Complex64;

/// `a^H b`.
pub fn dotc(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm_sq(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum()
}

pub fn norm(a: &[Complex64]) -> f64 {
    norm_sq(a).sqrt()
}

pub fn scale(a: &[Complex64], s: Complex64) -> Vec<Complex64> {
    a.iter().map(|x| x * s).collect()
}

pub fn sub(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

/// `a + s * b`.
pub fn axpy(a: &[Complex64], s: f64, b: &[Complex64]) -> Vec<Complex64> {
    a.iter().zip(b).map(|(x, y)| x + y * s).collect()
}

/// Stacks `[Re a; Im a]`.
pub fn to_real(a: &[Complex64]) -> Vec<f64> {
    a.iter().map(|x| x.re).chain(a.iter().map(|x| x.im)).collect()
}

/// Inverse of [`to_real`].
pub fn from_real(x: &[f64]) -> Vec<Complex64> {
    let v = x.len() / 2;
    (0..v).map(|i| Complex64::new(x[i], x[v + i])).collect()
}
