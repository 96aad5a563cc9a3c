//! Semidefinite relaxation for perfect CSI.
//!
//! Lifting `W = w w^H` turns every received power into a linear function
//! `tr{W h h^H}`. With auxiliary powers `x_{i,l} = tr{W H_{i,l}}`,
//! `y_{k,l} = tr{W G_{k,l}}` and reciprocal epigraphs `u >= 1/x` written as
//! rotated cones, dropping `rank W = 1` leaves a convex program.
//!
//! The Hermitian `W` is handled through its real symmetric embedding
//! `Z = [[Re W, -Im W], [Im W, Re W]]`. Instead of constraining `Z` to that
//! structure, each trace is written as the average of `r^T Z r` over `r`
//! and its quarter-turn `J r`; any PSD `Z` then maps to a structured one with
//! the same constraint values, from which `W` is read off.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::complex_normal;
use super::conic::{solve_conic_with, AffineExpr, ConicProblem, PsdBlock, SocRow, SolveStatusKind, SolverSettings};
use super::sca::Objective;
use crate::channel::EffectiveChannel;
use crate::error::{Error, Result};
use crate::linalg;
use crate::rates::{Beamformer, ProblemParams};
use crate::robust::{check_sic_constraints, CheckMode, SicReport};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SdrOptions {
    /// Gaussian randomization draws.
    pub n_rand: usize,
    /// `λ₂/λ₁` at or below which the relaxed solution counts as rank one.
    pub rank_tol: f64,
    pub solver: SolverSettings,
}

impl Default for SdrOptions {
    fn default() -> Self {
        Self {
            n_rand: 200,
            rank_tol: 1e-6,
            solver: SolverSettings { max_iter: 300, tol_gap: 1e-10, tol_feas: 1e-10 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdrOutcome {
    pub beamformer: Beamformer,
    /// Optimal `t` of the relaxation: a lower bound on
    /// `max_i 1/|w^H h_{i,i-1}|²` over feasible rank-one solutions.
    pub relaxation_t: f64,
    /// Eigenvalues of the relaxed `W`, descending.
    pub eigenvalues: Vec<f64>,
    pub rank_ratio: f64,
    pub rank_one: bool,
    /// Randomization candidates (including the principal eigenvector) that
    /// passed the SIC check; zero when the rank-one path was taken.
    pub feasible_candidates: usize,
    pub report: SicReport,
}

struct Layout {
    z: PsdBlock,
    m: usize,
    x0: usize,
    y0: usize,
    ux0: usize,
    uy0: usize,
    t: usize,
    total: usize,
}

impl Layout {
    fn new(v: usize, n: usize, m: usize) -> Self {
        let z = PsdBlock { start: 0, dim: 2 * v };
        let x0 = z.len();
        let y0 = x0 + m * m;
        let ux0 = y0 + n * m;
        let uy0 = ux0 + m * m;
        let t = uy0 + n * m;
        Self { z, m, x0, y0, ux0, uy0, t, total: t + 1 }
    }

    fn x(&self, user: usize, l: usize) -> usize {
        self.x0 + (user - 1) * self.m + l
    }

    fn ux(&self, user: usize, l: usize) -> usize {
        self.ux0 + (user - 1) * self.m + l
    }
}

/// Coefficients of `tr{W h h^H}` on the triangle of `Z`.
fn trace_form(block: &PsdBlock, h: &[Complex64]) -> Vec<(usize, f64)> {
    let v = h.len();
    let r = linalg::to_real(h);
    let jr: Vec<f64> = (0..v).map(|i| -h[i].im).chain((0..v).map(|i| h[i].re)).collect();
    let dim = 2 * v;
    let mut coeffs = Vec::with_capacity(dim * (dim + 1) / 2);
    for col in 0..dim {
        for row in 0..=col {
            let pair = r[row] * r[col] + jr[row] * jr[col];
            // Off-diagonal entries appear twice in r^T Z r; halve for the average.
            let c = if row == col { 0.5 * pair } else { pair };
            if c != 0.0 {
                coeffs.push((block.index(row, col), c));
            }
        }
    }
    coeffs
}

fn build_relaxation(ch: &EffectiveChannel, p: &ProblemParams, objective_users: &[usize]) -> (ConicProblem, Layout) {
    let (n, m, v) = (ch.n, ch.m, ch.v);
    let lay = Layout::new(v, n, m);
    let mut prob = ConicProblem::new(lay.total);
    prob.objective[lay.t] = 1.0;
    prob.psd = Some(lay.z);

    let link = |var: usize, h: &[Complex64]| {
        let mut coeffs: Vec<(usize, f64)> = trace_form(&lay.z, h).into_iter().map(|(j, c)| (j, -c)).collect();
        coeffs.push((var, 1.0));
        AffineExpr::new(coeffs, 0.0)
    };

    for i in 1..=m {
        let mut sum = Vec::with_capacity(m);
        for l in 0..m {
            prob.equalities.push(link(lay.x(i, l), ch.h(i, l)));
            prob.bounds.push((lay.x(i, l), Some(0.0), None));
            prob.cones.push(SocRow::hyperbolic(lay.ux(i, l), lay.x(i, l)));
            sum.push((lay.ux(i, l), 1.0));
        }
        prob.inequalities.push(AffineExpr::new(sum, -p.eps1()));
    }

    let mut sum = Vec::with_capacity(n * m);
    for (idx, g) in ch.g_hat.iter().enumerate() {
        prob.equalities.push(link(lay.y0 + idx, g));
        prob.bounds.push((lay.y0 + idx, Some(0.0), None));
        prob.cones.push(SocRow::hyperbolic(lay.uy0 + idx, lay.y0 + idx));
        sum.push((lay.uy0 + idx, 1.0));
    }
    prob.inequalities.push(AffineExpr::new(sum, -p.eps()));

    for &i in objective_users {
        prob.cones.push(SocRow::hyperbolic(lay.t, lay.x(i, i - 1)));
    }

    // tr W = tr Z / 2 <= 1
    let trace: Vec<(usize, f64)> = (0..2 * v).map(|d| (lay.z.index(d, d), 0.5)).collect();
    prob.inequalities.push(AffineExpr::new(trace, -1.0));
    (prob, lay)
}

/// Reads the Hermitian `W` from the (possibly unstructured) embedding `Z`.
fn hermitian_from_embedding(z: &DMatrix<f64>) -> DMatrix<Complex64> {
    let v = z.nrows() / 2;
    DMatrix::from_fn(v, v, |a, b| {
        let re = 0.5 * (z[(a, b)] + z[(a + v, b + v)]);
        let im = 0.5 * (z[(a + v, b)] - z[(a, b + v)]);
        Complex64::new(re, im)
    })
}

struct Spectrum {
    values: Vec<f64>,
    vectors: Vec<Vec<Complex64>>,
}

fn spectrum(w: &DMatrix<Complex64>) -> Spectrum {
    let eig = w.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    Spectrum {
        values: order.iter().map(|&i| eig.eigenvalues[i]).collect(),
        vectors: order
            .iter()
            .map(|&i| eig.eigenvectors.column(i).iter().copied().collect())
            .collect(),
    }
}

fn score(w: &[Complex64], ch: &EffectiveChannel, users: &[usize]) -> f64 {
    users
        .iter()
        .map(|&i| linalg::dotc(w, ch.h(i, i - 1)).norm_sqr())
        .fold(f64::INFINITY, f64::min)
}

/// Draws candidates `W^{1/2} v` with `v` standard complex normal; the
/// principal eigenvector is candidate 0. Every candidate is scaled to unit
/// norm, checked against the SIC constraints, and the best by objective
/// wins (lowest index on ties).
fn randomize<R: Rng + ?Sized>(
    spec: &Spectrum,
    ch: &EffectiveChannel,
    p: &ProblemParams,
    users: &[usize],
    n_rand: usize,
    rng: &mut R,
) -> Result<(Beamformer, usize, SicReport)> {
    let v = ch.v;
    let roots: Vec<f64> = spec.values.iter().map(|&l| l.max(0.0).sqrt()).collect();
    let mut candidates = vec![spec.vectors[0].clone()];
    for _ in 0..n_rand {
        let z = complex_normal(v, rng);
        let mut w = vec![Complex64::new(0.0, 0.0); v];
        for (root, u) in roots.iter().zip(&spec.vectors) {
            let coef = linalg::dotc(u, &z) * *root;
            for (wi, ui) in w.iter_mut().zip(u) {
                *wi += ui * coef;
            }
        }
        candidates.push(w);
    }

    let mut feasible = 0;
    let mut best: Option<(f64, Beamformer, SicReport)> = None;
    for cand in candidates {
        let Ok(w) = Beamformer::normalized(cand) else {
            continue;
        };
        let report = check_sic_constraints(&w, ch, p, CheckMode::WorstCase)?;
        if !report.feasible {
            continue;
        }
        feasible += 1;
        let s = score(w.weights(), ch, users);
        if best.as_ref().is_none_or(|(b, _, _)| s > *b) {
            best = Some((s, w, report));
        }
    }
    let (_, w, report) = best.ok_or(Error::NoFeasibleRandomization)?;
    Ok((w, feasible, report))
}

fn solve_with_objective<R: Rng + ?Sized>(
    ch: &EffectiveChannel,
    p: &ProblemParams,
    objective: Objective,
    opts: &SdrOptions,
    rng: &mut R,
) -> Result<SdrOutcome> {
    p.check_channel(ch)?;
    if ch.sigma != 0.0 || p.sigma() != 0.0 {
        return Err(Error::SdrRequiresPerfectCsi(ch.sigma.max(p.sigma())));
    }
    let users: Vec<usize> = match objective {
        Objective::MinRate => (1..=ch.num_users()).collect(),
        Objective::SingleUser(i) if (1..=ch.num_users()).contains(&i) => vec![i],
        Objective::SingleUser(i) => return Err(Error::UserIndexOutOfRange { index: i, max: ch.num_users() }),
    };

    let (prob, lay) = build_relaxation(ch, p, &users);
    let sol = solve_conic_with(&prob, &opts.solver)?;
    match sol.status {
        SolveStatusKind::Optimal => {}
        SolveStatusKind::Infeasible => return Err(Error::SdpInfeasible("relaxation is infeasible".into())),
        other => {
            if !(sol.primal_residual <= 1e-6) {
                return Err(Error::SdpInfeasible(format!("solver ended with {other:?}")));
            }
        }
    }

    let w_lifted = hermitian_from_embedding(&lay.z.unpack(&sol.x));
    let spec = spectrum(&w_lifted);
    let lead = spec.values[0];
    if !(lead > 0.0) {
        return Err(Error::SdpInfeasible("relaxed solution is zero".into()));
    }
    let second = spec.values.get(1).copied().unwrap_or(0.0).max(0.0);
    let rank_ratio = second / lead;
    let rank_one = rank_ratio <= opts.rank_tol;

    let (beamformer, feasible_candidates, report) = if rank_one {
        let scale = lead.min(1.0).sqrt();
        let w = Beamformer::new(linalg::scale(&spec.vectors[0], Complex64::new(scale, 0.0)))?;
        let report = check_sic_constraints(&w, ch, p, CheckMode::WorstCase)?;
        (w, 0, report)
    } else {
        randomize(&spec, ch, p, &users, opts.n_rand, rng)?
    };

    Ok(SdrOutcome {
        beamformer,
        relaxation_t: sol.x[lay.t],
        eigenvalues: spec.values,
        rank_ratio,
        rank_one,
        feasible_candidates,
        report,
    })
}

/// Max-min SDR design with Gaussian randomization.
pub fn sdr_solve<R: Rng + ?Sized>(
    ch: &EffectiveChannel,
    p: &ProblemParams,
    opts: &SdrOptions,
    rng: &mut R,
) -> Result<SdrOutcome> {
    solve_with_objective(ch, p, Objective::MinRate, opts, rng)
}

/// SDR design maximizing the rate of NOMA user `user` alone, subject to the
/// same SIC and power constraints.
pub fn sdr_single_user<R: Rng + ?Sized>(
    ch: &EffectiveChannel,
    p: &ProblemParams,
    user: usize,
    opts: &SdrOptions,
    rng: &mut R,
) -> Result<SdrOutcome> {
    let out = solve_with_objective(ch, p, Objective::SingleUser(user), opts, rng)?;
    if !out.rank_one {
        log::warn!("single-user relaxation returned rank ratio {:.3e}", out.rank_ratio);
    }
    Ok(out)
}
