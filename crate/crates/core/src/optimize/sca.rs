//! Successive convex approximation for the robust max-min beamforming
//! problem.
//!
//! Each iteration linearizes the objective terms `1/|w^H h_{i,i-1}|²`, the
//! worst-case high-mobility terms `(|w^H ĝ_{k,l}| - σ‖w‖)^{-2}` and the NOMA
//! SIC terms `1/|w^H h_{i,l}|²` at the expansion point `w0`, and solves the
//! resulting second-order cone program
//!
//! ```text
//! min t  s.t.  linearized objective terms <= t
//!              Σ linearized high-mobility terms <= eps
//!              Σ_l linearized NOMA terms <= eps1   (each user)
//!              ‖w‖ <= 1
//! ```
//!
//! The first-order models are tangent but not guaranteed to bound the true
//! functions (which are not convex in `w`), so a subproblem solution is
//! only used as a search direction: the step from `w0` towards it is
//! backtracked until the true constraints hold and the true objective
//! decreases. Since every constraint function decreases when `w` is scaled
//! up, candidates are renormalized to unit norm.
//!
//! A random start that violates the constraints first runs restoration
//! steps, which backtrack on the total relative constraint violation.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::conic::{solve_conic_with, AffineExpr, ConicProblem, SocRow, SolveStatusKind, SolverSettings};
use super::gradient::{inv_power, robust_inv_power, LinearModel};
use super::random_beamformer;
use crate::channel::EffectiveChannel;
use crate::error::{Error, Result};
use crate::linalg;
use crate::rates::{Beamformer, ProblemParams};
use crate::robust::{check_sic_constraints, CheckMode, SicReport};

/// Which NOMA users enter the objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    /// Maximize the minimum rate over all NOMA users.
    MinRate,
    /// Maximize the rate of NOMA user `i` (1-based).
    SingleUser(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScaOptions {
    pub max_iter: usize,
    /// Stop when the relative decrease of `t` falls below this.
    pub rel_tol: f64,
    pub n_starts: usize,
    pub max_backtracks: usize,
    pub objective: Objective,
    pub solver: SolverSettings,
}

impl Default for ScaOptions {
    fn default() -> Self {
        Self {
            max_iter: 50,
            rel_tol: 1e-5,
            n_starts: 10,
            max_backtracks: 30,
            objective: Objective::MinRate,
            solver: SolverSettings::default(),
        }
    }
}

/// Progress of one SCA run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaState {
    pub w0: Beamformer,
    /// True objective `max_i 1/|w0^H h_{i,i-1}|²` at the expansion point.
    pub t: f64,
    pub iteration: usize,
    /// `t` after each accepted feasible iterate.
    pub history: Vec<f64>,
    pub feasible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum StartOutcome {
    Converged,
    IterationLimit,
    /// The linearized subproblem at a constraint-violating point had no
    /// solution.
    SubproblemInfeasible,
    /// A violated start could not be moved towards feasibility.
    RestorationStalled,
    /// The expansion point sits where a gradient is undefined.
    Degenerate,
    Solver(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StartRecord {
    pub state: ScaState,
    pub outcome: StartOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaOutcome {
    pub beamformer: Beamformer,
    pub t: f64,
    pub best_start: usize,
    /// Total SCA iterations over all starts.
    pub iterations: usize,
    pub starts: Vec<StartRecord>,
    pub report: SicReport,
}

struct Problem<'a> {
    ch: &'a EffectiveChannel,
    p: &'a ProblemParams,
    objective_users: Vec<usize>,
}

impl<'a> Problem<'a> {
    fn new(ch: &'a EffectiveChannel, p: &'a ProblemParams, objective: Objective) -> Result<Self> {
        p.check_channel(ch)?;
        let users = ch.num_users();
        let objective_users = match objective {
            Objective::MinRate => (1..=users).collect(),
            Objective::SingleUser(i) if (1..=users).contains(&i) => vec![i],
            Objective::SingleUser(i) => return Err(Error::UserIndexOutOfRange { index: i, max: users }),
        };
        Ok(Self { ch, p, objective_users })
    }

    fn objective(&self, w: &[Complex64]) -> f64 {
        self.objective_users
            .iter()
            .map(|&i| inv_power(w, self.ch.h(i, i - 1)))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Total relative violation of the SIC constraints (zero when feasible).
    fn violation(&self, w: &[Complex64]) -> f64 {
        let sigma = self.ch.sigma;
        let hm: f64 = self.ch.g_hat.iter().map(|g| robust_inv_power(w, g, sigma)).sum();
        let mut v = (hm / self.p.eps() - 1.0).max(0.0);
        for row in &self.ch.h {
            let s: f64 = row.iter().map(|h| inv_power(w, h)).sum();
            v += (s / self.p.eps1() - 1.0).max(0.0);
        }
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    }

    fn subproblem(&self, w0: &[Complex64]) -> Result<ConicProblem> {
        let v = w0.len();
        let t = 2 * v;
        let mut prob = ConicProblem::new(2 * v + 1);
        prob.objective[t] = 1.0;

        for &i in &self.objective_users {
            let (c, c0) = LinearModel::inv_power(w0, self.ch.h(i, i - 1))?.real_affine();
            let mut row = AffineExpr::dense(0, &c, c0);
            row.coeffs.push((t, -1.0));
            prob.inequalities.push(row);
        }

        let hm = self
            .ch
            .g_hat
            .iter()
            .map(|g| LinearModel::robust_inv_power(w0, g, self.ch.sigma))
            .collect::<Result<Vec<_>>>()?;
        let (c, c0) = LinearModel::sum(&hm).expect("grid is nonempty").real_affine();
        prob.inequalities.push(AffineExpr::dense(0, &c, c0 - self.p.eps()));

        for row in &self.ch.h {
            let models = row
                .iter()
                .map(|h| LinearModel::inv_power(w0, h))
                .collect::<Result<Vec<_>>>()?;
            let (c, c0) = LinearModel::sum(&models).expect("grid is nonempty").real_affine();
            prob.inequalities.push(AffineExpr::dense(0, &c, c0 - self.p.eps1()));
        }

        prob.cones.push(SocRow {
            bound: AffineExpr::constant(1.0),
            norm_args: (0..2 * v).map(AffineExpr::var).collect(),
        });
        Ok(prob)
    }
}

enum Step {
    Direction(Vec<Complex64>, f64),
    Infeasible,
}

fn solve_step(problem: &Problem, w0: &[Complex64], settings: &SolverSettings) -> Result<Step> {
    let prob = problem.subproblem(w0)?;
    let sol = solve_conic_with(&prob, settings)?;
    match sol.status {
        SolveStatusKind::Optimal => {}
        SolveStatusKind::Infeasible => return Ok(Step::Infeasible),
        other => {
            // Accept slightly inaccurate solutions; they are only search
            // directions and every accepted point is checked exactly.
            if !(sol.primal_residual <= 1e-5 && sol.x.iter().all(|x| x.is_finite())) {
                return Err(Error::Solver(format!("SCA subproblem ended with {other:?}")));
            }
        }
    }
    let v = w0.len();
    Ok(Step::Direction(linalg::from_real(&sol.x[..2 * v]), sol.x[2 * v]))
}

fn unit(w: &[Complex64]) -> Option<Vec<Complex64>> {
    let n = linalg::norm(w);
    (n > 0.0 && n.is_finite()).then(|| linalg::scale(w, Complex64::new(1.0 / n, 0.0)))
}

/// Backtracks from `w0` towards `target`, returning the first unit-norm
/// candidate accepted by `accept`.
fn backtrack(
    w0: &[Complex64],
    target: &[Complex64],
    max_backtracks: usize,
    mut accept: impl FnMut(&[Complex64]) -> bool,
) -> Option<Vec<Complex64>> {
    let dir = linalg::sub(target, w0);
    let mut alpha = 1.0;
    for _ in 0..=max_backtracks {
        if let Some(cand) = unit(&linalg::axpy(w0, alpha, &dir)) {
            if accept(&cand) {
                return Some(cand);
            }
        }
        alpha *= 0.5;
    }
    None
}

fn run_start(problem: &Problem, start: Vec<Complex64>, opts: &ScaOptions) -> StartRecord {
    let mut w0 = start;
    let mut violation = problem.violation(&w0);
    let mut state = ScaState {
        w0: Beamformer::new(w0.clone()).expect("start is unit norm"),
        t: problem.objective(&w0),
        iteration: 0,
        history: Vec::new(),
        feasible: violation == 0.0,
    };
    if state.feasible {
        state.history.push(state.t);
    }

    let outcome = loop {
        if state.iteration >= opts.max_iter {
            break StartOutcome::IterationLimit;
        }
        state.iteration += 1;

        let (target, predicted) = match solve_step(problem, &w0, &opts.solver) {
            Ok(Step::Direction(w, t)) => (w, t),
            Ok(Step::Infeasible) if !state.feasible => break StartOutcome::SubproblemInfeasible,
            Ok(Step::Infeasible) => break StartOutcome::Converged,
            Err(Error::DegenerateDirection(_)) | Err(Error::NulledRegion(_)) => break StartOutcome::Degenerate,
            Err(e) => break StartOutcome::Solver(e.to_string()),
        };

        if !state.feasible {
            let accepted = backtrack(&w0, &target, opts.max_backtracks, |cand| problem.violation(cand) < violation);
            let Some(next) = accepted else {
                break StartOutcome::RestorationStalled;
            };
            violation = problem.violation(&next);
            w0 = next;
            state.t = problem.objective(&w0);
            if violation == 0.0 {
                state.feasible = true;
                state.history.push(state.t);
            }
        } else {
            let t_prev = state.t;
            if predicted >= t_prev * (1.0 - 1e-12) {
                break StartOutcome::Converged;
            }
            let accepted = backtrack(&w0, &target, opts.max_backtracks, |cand| {
                problem.objective(cand) < t_prev && problem.violation(cand) == 0.0
            });
            let Some(next) = accepted else {
                break StartOutcome::Converged;
            };
            w0 = next;
            state.t = problem.objective(&w0);
            state.history.push(state.t);
            if (t_prev - state.t) / t_prev < opts.rel_tol {
                break StartOutcome::Converged;
            }
        }
        state.w0 = Beamformer::new(w0.clone()).expect("iterates are unit norm");
    };
    state.w0 = Beamformer::new(w0).expect("iterates are unit norm");
    StartRecord { state, outcome }
}

/// Multi-start SCA. Each start draws a random unit-norm `w0`; the feasible
/// final point with the smallest objective wins (earliest start on ties).
pub fn sca_solve<R: Rng + ?Sized>(
    ch: &EffectiveChannel,
    p: &ProblemParams,
    opts: &ScaOptions,
    rng: &mut R,
) -> Result<ScaOutcome> {
    let problem = Problem::new(ch, p, opts.objective)?;
    let mut starts = Vec::with_capacity(opts.n_starts);
    for _ in 0..opts.n_starts {
        let w0 = random_beamformer(ch.v, rng).into_weights();
        starts.push(run_start(&problem, w0, opts));
    }
    let iterations = starts.iter().map(|s| s.state.iteration).sum();

    let mut best: Option<(usize, f64, SicReport)> = None;
    for (idx, rec) in starts.iter().enumerate() {
        if !rec.state.feasible {
            continue;
        }
        let report = check_sic_constraints(&rec.state.w0, ch, p, CheckMode::WorstCase)?;
        if !report.feasible {
            continue;
        }
        if best.as_ref().is_none_or(|(_, t, _)| rec.state.t < *t) {
            best = Some((idx, rec.state.t, report));
        }
    }
    let (best_start, t, report) = best.ok_or(Error::AllStartsFailed(opts.n_starts))?;
    Ok(ScaOutcome {
        beamformer: starts[best_start].state.w0.clone(),
        t,
        best_start,
        iterations,
        starts,
        report,
    })
}
