//! Standard-form conic programs and the interior-point backend that solves
//! them.
//!
//! A [`ConicProblem`] minimizes `c · x` over a real vector `x` subject to
//! affine equalities and inequalities, second-order cone rows
//! `‖F x + f‖ <= g · x + h`, at most one positive-semidefinite block taken
//! from a contiguous slice of `x`, and simple bounds. Complex model variables
//! enter through real/imaginary stacking.

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sparse affine expression `Σ coeffs[j].1 * x[coeffs[j].0] + constant`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AffineExpr {
    pub coeffs: Vec<(usize, f64)>,
    pub constant: f64,
}

impl AffineExpr {
    pub fn new(coeffs: Vec<(usize, f64)>, constant: f64) -> Self {
        Self { coeffs, constant }
    }

    pub fn var(index: usize) -> Self {
        Self { coeffs: vec![(index, 1.0)], constant: 0.0 }
    }

    pub fn constant(value: f64) -> Self {
        Self { coeffs: Vec::new(), constant: value }
    }

    /// Dense coefficients starting at variable `offset`.
    pub fn dense(offset: usize, coeffs: &[f64], constant: f64) -> Self {
        Self {
            coeffs: coeffs.iter().enumerate().map(|(j, &c)| (offset + j, c)).collect(),
            constant,
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(j, c)| c * x[j]).sum::<f64>() + self.constant
    }
}

/// `‖norm_args‖₂ <= bound`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SocRow {
    pub bound: AffineExpr,
    pub norm_args: Vec<AffineExpr>,
}

impl SocRow {
    /// Hyperbolic constraint `a · b >= 1` with `a, b >= 0`, written as
    /// `‖(2, a - b)‖ <= a + b`.
    pub fn hyperbolic(a: usize, b: usize) -> Self {
        Self {
            bound: AffineExpr::new(vec![(a, 1.0), (b, 1.0)], 0.0),
            norm_args: vec![AffineExpr::constant(2.0), AffineExpr::new(vec![(a, 1.0), (b, -1.0)], 0.0)],
        }
    }

    pub fn residual(&self, x: &[f64]) -> f64 {
        let norm = self.norm_args.iter().map(|e| e.eval(x).powi(2)).sum::<f64>().sqrt();
        (norm - self.bound.eval(x)).max(0.0)
    }
}

/// Symmetric matrix of order `dim` stored in `x[start..]` as its upper
/// triangle, column by column: `(0,0), (0,1), (1,1), (0,2), ...`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PsdBlock {
    pub start: usize,
    pub dim: usize,
}

impl PsdBlock {
    pub fn len(&self) -> usize {
        self.dim * (self.dim + 1) / 2
    }

    pub fn is_empty(&self) -> bool {
        self.dim == 0
    }

    /// Variable index of entry `(row, col)` (either order).
    pub fn index(&self, row: usize, col: usize) -> usize {
        let (i, j) = if row <= col { (row, col) } else { (col, row) };
        self.start + j * (j + 1) / 2 + i
    }

    pub fn unpack(&self, x: &[f64]) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_fn(self.dim, self.dim, |r, c| x[self.index(r, c)])
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConicProblem {
    pub num_vars: usize,
    pub objective: Vec<f64>,
    /// `expr == 0`
    pub equalities: Vec<AffineExpr>,
    /// `expr <= 0`
    pub inequalities: Vec<AffineExpr>,
    pub cones: Vec<SocRow>,
    pub psd: Option<PsdBlock>,
    /// `(index, lower, upper)`
    pub bounds: Vec<(usize, Option<f64>, Option<f64>)>,
}

impl ConicProblem {
    pub fn new(num_vars: usize) -> Self {
        Self { num_vars, objective: vec![0.0; num_vars], ..Default::default() }
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string(self)
    }

    fn validate(&self) -> Result<()> {
        let n = self.num_vars;
        if self.objective.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: self.objective.len() });
        }
        let in_range = |e: &AffineExpr| e.coeffs.iter().all(|&(j, _)| j < n);
        let ok = self.equalities.iter().chain(&self.inequalities).all(in_range)
            && self
                .cones
                .iter()
                .all(|c| in_range(&c.bound) && c.norm_args.iter().all(in_range))
            && self.bounds.iter().all(|&(j, _, _)| j < n)
            && self.psd.is_none_or(|b| b.start + b.len() <= n);
        if ok {
            Ok(())
        } else {
            Err(Error::Solver("variable index out of range".into()))
        }
    }

    /// Largest violation of any constraint at `x` (cones in absolute terms,
    /// PSD block by its most negative eigenvalue).
    pub fn primal_residual(&self, x: &[f64]) -> f64 {
        let mut r: f64 = 0.0;
        for e in &self.equalities {
            r = r.max(e.eval(x).abs());
        }
        for e in &self.inequalities {
            r = r.max(e.eval(x).max(0.0));
        }
        for c in &self.cones {
            r = r.max(c.residual(x));
        }
        for &(j, lo, hi) in &self.bounds {
            if let Some(lo) = lo {
                r = r.max(lo - x[j]);
            }
            if let Some(hi) = hi {
                r = r.max(x[j] - hi);
            }
        }
        if let Some(block) = self.psd {
            let eig = block.unpack(x).symmetric_eigenvalues();
            r = r.max(-eig.min());
        }
        r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatusKind {
    Optimal,
    Infeasible,
    MaxIter,
    NumericalFailure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveStatus {
    pub status: SolveStatusKind,
    pub x: Vec<f64>,
    pub obj: f64,
    pub primal_residual: f64,
    pub relative_gap: f64,
    pub iterations: u32,
}

/// Accuracy required to report [`SolveStatusKind::Optimal`].
pub const OPTIMAL_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSettings {
    pub max_iter: u32,
    pub tol_gap: f64,
    pub tol_feas: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self { max_iter: 200, tol_gap: 1e-9, tol_feas: 1e-9 }
    }
}

pub fn solve_conic(prob: &ConicProblem) -> Result<SolveStatus> {
    solve_conic_with(prob, &SolverSettings::default())
}

/// Assembles `A x + s = b, s ∈ K` and runs the interior-point solver.
pub fn solve_conic_with(prob: &ConicProblem, settings: &SolverSettings) -> Result<SolveStatus> {
    prob.validate()?;
    let n = prob.num_vars;
    let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
    let mut b: Vec<f64> = Vec::new();
    let mut cones: Vec<SupportedConeT<f64>> = Vec::new();

    // A row encodes s = b - a·x; `push_slack` stores slack = expr.
    let push_slack = |expr: &AffineExpr, triplets: &mut Vec<(usize, usize, f64)>, b: &mut Vec<f64>| {
        let row = b.len();
        for &(j, c) in &expr.coeffs {
            triplets.push((row, j, -c));
        }
        b.push(expr.constant);
    };

    if !prob.equalities.is_empty() {
        for e in &prob.equalities {
            push_slack(e, &mut triplets, &mut b);
        }
        cones.push(SupportedConeT::ZeroConeT(prob.equalities.len()));
    }

    let mut nonneg = 0;
    for e in &prob.inequalities {
        let neg = AffineExpr::new(e.coeffs.iter().map(|&(j, c)| (j, -c)).collect(), -e.constant);
        push_slack(&neg, &mut triplets, &mut b);
        nonneg += 1;
    }
    for &(j, lo, hi) in &prob.bounds {
        if let Some(lo) = lo {
            push_slack(&AffineExpr::new(vec![(j, 1.0)], -lo), &mut triplets, &mut b);
            nonneg += 1;
        }
        if let Some(hi) = hi {
            push_slack(&AffineExpr::new(vec![(j, -1.0)], hi), &mut triplets, &mut b);
            nonneg += 1;
        }
    }
    if nonneg > 0 {
        cones.push(SupportedConeT::NonnegativeConeT(nonneg));
    }

    for c in &prob.cones {
        push_slack(&c.bound, &mut triplets, &mut b);
        for e in &c.norm_args {
            push_slack(e, &mut triplets, &mut b);
        }
        cones.push(SupportedConeT::SecondOrderConeT(1 + c.norm_args.len()));
    }

    if let Some(block) = prob.psd {
        // The solver's triangle vectorization scales off-diagonals by √2.
        for col in 0..block.dim {
            for row in 0..=col {
                let scale = if row == col { 1.0 } else { std::f64::consts::SQRT_2 };
                push_slack(&AffineExpr::new(vec![(block.index(row, col), scale)], 0.0), &mut triplets, &mut b);
            }
        }
        cones.push(SupportedConeT::PSDTriangleConeT(block.dim));
    }

    let m = b.len();
    let (rows, (cols, vals)): (Vec<usize>, (Vec<usize>, Vec<f64>)) =
        triplets.into_iter().map(|(r, c, v)| (r, (c, v))).unzip();
    let a = CscMatrix::new_from_triplets(m, n, rows, cols, vals);
    let p = CscMatrix::<f64>::zeros((n, n));

    let solver_settings = DefaultSettingsBuilder::default()
        .verbose(false)
        .max_iter(settings.max_iter)
        .tol_gap_abs(settings.tol_gap)
        .tol_gap_rel(settings.tol_gap)
        .tol_feas(settings.tol_feas)
        .build()
        .map_err(|e| Error::Solver(format!("{e:?}")))?;
    let mut solver = DefaultSolver::new(&p, &prob.objective, &a, &b, &cones, solver_settings)
        .map_err(|e| Error::Solver(format!("{e:?}")))?;
    solver.solve();

    let sol = &solver.solution;
    let x = sol.x.clone();
    let primal_residual = if x.iter().all(|v| v.is_finite()) {
        prob.primal_residual(&x)
    } else {
        f64::INFINITY
    };
    let obj: f64 = prob.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
    let relative_gap = (sol.obj_val - sol.obj_val_dual).abs() / (1.0 + sol.obj_val.abs().min(sol.obj_val_dual.abs()));

    let status = match sol.status {
        SolverStatus::Solved | SolverStatus::AlmostSolved
            if primal_residual <= OPTIMAL_TOL && relative_gap <= OPTIMAL_TOL =>
        {
            SolveStatusKind::Optimal
        }
        SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => SolveStatusKind::Infeasible,
        SolverStatus::MaxIterations => SolveStatusKind::MaxIter,
        _ => SolveStatusKind::NumericalFailure,
    };
    Ok(SolveStatus { status, x, obj, primal_residual, relative_gap, iterations: sol.iterations })
}
