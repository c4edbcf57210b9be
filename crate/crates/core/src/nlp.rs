//! Bound-constrained nonlinear programming by projected quasi-Newton descent
//! on a quadratic-penalty merit function.
//!
//! Problems are stated as
//!
//! ```text
//! minimize f(z)  subject to  g(z) <= 0,  lb <= z <= ub
//! ```
//!
//! The inequality constraints enter the merit function
//! `F(z) = f(z) + mu * sum(max(g_i(z), 0)^2)`; `mu` grows geometrically
//! until the violation drops under `feas_tol`. Each penalty phase is solved
//! by projected BFGS in the unit-scaled variable `u = (z - lb) / (ub - lb)`,
//! with variables pinned at a bound (and pushed against it by the gradient)
//! removed from the quasi-Newton step.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{SolverError, ValidationErrors};

/// A smooth nonlinear program with box bounds and inequality constraints.
pub trait NlpProblem {
    fn dim(&self) -> usize;
    fn lower_bounds(&self) -> &[f64];
    fn upper_bounds(&self) -> &[f64];

    fn num_constraints(&self) -> usize {
        0
    }

    fn objective(&self, z: &[f64]) -> f64;

    /// Writes `g(z)` into `g` (length [`num_constraints`](Self::num_constraints)).
    fn constraints(&self, _z: &[f64], _g: &mut [f64]) {}

    /// Objective and constraints in one pass. Override when both come out of
    /// the same expensive computation.
    fn evaluate(&self, z: &[f64], g: &mut [f64]) -> f64 {
        self.constraints(z, g);
        self.objective(z)
    }

    /// Analytic objective gradient. Return `false` to fall back on finite
    /// differences.
    fn gradient(&self, _z: &[f64], _grad: &mut [f64]) -> bool {
        false
    }
}

type ObjFn<'a> = Box<dyn Fn(&[f64]) -> f64 + Send + Sync + 'a>;
type ConFn<'a> = Box<dyn Fn(&[f64], &mut [f64]) + Send + Sync + 'a>;
type GradFn<'a> = Box<dyn Fn(&[f64], &mut [f64]) + Send + Sync + 'a>;

/// [`NlpProblem`] assembled from closures.
pub struct FnProblem<'a> {
    lower: Vec<f64>,
    upper: Vec<f64>,
    objective: ObjFn<'a>,
    num_constraints: usize,
    constraints: Option<ConFn<'a>>,
    gradient: Option<GradFn<'a>>,
}

impl<'a> FnProblem<'a> {
    pub fn new(
        lower: Vec<f64>,
        upper: Vec<f64>,
        objective: impl Fn(&[f64]) -> f64 + Send + Sync + 'a,
    ) -> Self {
        Self {
            lower,
            upper,
            objective: Box::new(objective),
            num_constraints: 0,
            constraints: None,
            gradient: None,
        }
    }

    pub fn with_constraints(
        mut self,
        count: usize,
        g: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'a,
    ) -> Self {
        self.num_constraints = count;
        self.constraints = Some(Box::new(g));
        self
    }

    pub fn with_gradient(mut self, grad: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'a) -> Self {
        self.gradient = Some(Box::new(grad));
        self
    }
}

impl NlpProblem for FnProblem<'_> {
    fn dim(&self) -> usize {
        self.lower.len()
    }

    fn lower_bounds(&self) -> &[f64] {
        &self.lower
    }

    fn upper_bounds(&self) -> &[f64] {
        &self.upper
    }

    fn num_constraints(&self) -> usize {
        self.num_constraints
    }

    fn objective(&self, z: &[f64]) -> f64 {
        (self.objective)(z)
    }

    fn constraints(&self, z: &[f64], g: &mut [f64]) {
        if let Some(c) = &self.constraints {
            c(z, g);
        }
    }

    fn gradient(&self, z: &[f64], grad: &mut [f64]) -> bool {
        match &self.gradient {
            Some(gr) => {
                gr(z, grad);
                true
            }
            None => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    /// Stationarity tolerance on the scaled projected gradient.
    pub tol: f64,
    /// Largest accepted constraint violation.
    pub feas_tol: f64,
    /// Quasi-Newton iterations over all penalty phases.
    pub max_iter: usize,
    pub penalty_initial: f64,
    pub penalty_growth: f64,
    /// Finite-difference step in the units of `z`.
    pub fd_step: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-4,
            feas_tol: 1e-6,
            max_iter: 200,
            penalty_initial: 1e3,
            penalty_growth: 10.0,
            fd_step: 1e-6,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<(), ValidationErrors> {
        let mut errs = ValidationErrors::new();
        errs.check(self.tol > 0.0, "tol", "must be > 0");
        errs.check(self.feas_tol > 0.0, "feas_tol", "must be > 0");
        errs.check(self.max_iter > 0, "max_iter", "must be > 0");
        errs.check(self.penalty_initial > 0.0, "penalty_initial", "must be > 0");
        errs.check(self.penalty_growth > 1.0, "penalty_growth", "must be > 1");
        errs.check(self.fd_step > 0.0, "fd_step", "must be > 0");
        errs.into_result()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverStatus {
    Converged,
    MaxIter,
    /// The iteration budget or penalty range ran out with constraints still
    /// violated; the returned point minimizes the softened problem.
    InfeasibleSoftened,
    /// The line search failed from a fresh quasi-Newton model before the
    /// stationarity test passed. Usually means the tolerance is below the
    /// finite-difference noise floor.
    Stalled,
}

impl SolverStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolverStatus::Converged => "converged",
            SolverStatus::MaxIter => "max_iter",
            SolverStatus::InfeasibleSoftened => "infeasible_softened",
            SolverStatus::Stalled => "stalled",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NlpSolution {
    pub z_opt: Vec<f64>,
    /// `f(z_opt)` without the penalty.
    pub objective_value: f64,
    pub max_constraint_violation: f64,
    pub stationarity_residual: f64,
    pub iterations: usize,
    pub status: SolverStatus,
    /// Penalty weight of the final phase.
    pub penalty: f64,
}

/// One accepted quasi-Newton step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iter: usize,
    /// Penalized objective after the step.
    pub f: f64,
    pub violation: f64,
    pub step_length: f64,
    /// Infinity norm of the scaled projected gradient after the step.
    pub grad_norm: f64,
    pub penalty: f64,
}

const ARMIJO_C1: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 50;
const PENALTY_MAX: f64 = 1e14;

struct Scaled<'p, P: NlpProblem + ?Sized> {
    problem: &'p P,
    lb: &'p [f64],
    span: Vec<f64>,
    fd_step: f64,
    mu: f64,
    z: Vec<f64>,
    g: Vec<f64>,
}

/// Merit value and constraint violation at one point.
#[derive(Clone, Copy)]
struct Eval {
    merit: f64,
    f: f64,
    viol: f64,
}

impl<'p, P: NlpProblem + ?Sized> Scaled<'p, P> {
    fn to_z(&self, u: &[f64], z: &mut [f64]) {
        let ub = self.problem.upper_bounds();
        for i in 0..u.len() {
            z[i] = (self.lb[i] + u[i] * self.span[i]).clamp(self.lb[i], ub[i]);
        }
    }

    fn eval_z(&mut self, z: &[f64]) -> Result<Eval, SolverError> {
        let f = self.problem.evaluate(z, &mut self.g);
        if !f.is_finite() || self.g.iter().any(|g| !g.is_finite()) {
            return Err(SolverError::NonFinite { z: z.to_vec() });
        }
        let mut pen = 0.0;
        let mut viol: f64 = 0.0;
        for &gi in &self.g {
            if gi > 0.0 {
                pen += gi * gi;
                viol = viol.max(gi);
            }
        }
        Ok(Eval {
            merit: f + self.mu * pen,
            f,
            viol,
        })
    }

    fn eval(&mut self, u: &[f64]) -> Result<Eval, SolverError> {
        let mut z = core::mem::take(&mut self.z);
        self.to_z(u, &mut z);
        let out = self.eval_z(&z);
        self.z = z;
        out
    }

    /// Gradient of the merit function with respect to `u`.
    fn grad(&mut self, u: &[f64], out: &mut [f64]) -> Result<(), SolverError> {
        let n = u.len();
        let mut z = vec![0.0; n];
        self.to_z(u, &mut z);
        let ub = self.problem.upper_bounds();
        let h = self.fd_step;

        let mut analytic = vec![0.0; n];
        let has_analytic = self.problem.gradient(&z, &mut analytic);
        if has_analytic && analytic.iter().any(|v| !v.is_finite()) {
            return Err(SolverError::NonFinite { z });
        }

        for i in 0..n {
            if self.span[i] == 0.0 {
                out[i] = 0.0;
                continue;
            }
            let zi = z[i];
            let hi = (zi + h).min(ub[i]);
            let lo = (zi - h).max(self.lb[i]);
            z[i] = hi;
            let (fp, pp) = self.split_eval(&z, has_analytic)?;
            z[i] = lo;
            let (fm, pm) = self.split_eval(&z, has_analytic)?;
            z[i] = zi;
            let width = hi - lo;
            let d = if has_analytic {
                analytic[i] + (pp - pm) / width
            } else {
                (fp + pp - fm - pm) / width
            };
            out[i] = d * self.span[i];
        }
        Ok(())
    }

    /// Objective (skipped when an analytic gradient covers it) and penalty
    /// at `z`.
    fn split_eval(&mut self, z: &[f64], penalty_only: bool) -> Result<(f64, f64), SolverError> {
        let e = self.eval_z(z)?;
        if penalty_only {
            Ok((0.0, e.merit - e.f))
        } else {
            Ok((e.f, e.merit - e.f))
        }
    }
}

fn project_unit(u: &mut [f64]) {
    for x in u {
        *x = x.clamp(0.0, 1.0);
    }
}

/// Stationarity measure `||P(u - g) - u||_inf` in scaled variables.
fn projected_gradient_norm(u: &[f64], g: &[f64]) -> f64 {
    u.iter()
        .zip(g)
        .map(|(&ui, &gi)| ((ui - gi).clamp(0.0, 1.0) - ui).abs())
        .fold(0.0, f64::max)
}

fn active_set(u: &[f64], g: &[f64], free: &mut [bool]) {
    for i in 0..u.len() {
        let at_lower = u[i] <= 0.0 && g[i] >= 0.0;
        let at_upper = u[i] >= 1.0 && g[i] <= 0.0;
        free[i] = !(at_lower || at_upper);
    }
}

fn reset_identity(h: &mut [f64], n: usize, scale: f64) {
    h.fill(0.0);
    for i in 0..n {
        h[i * n + i] = scale;
    }
}

/// Inverse BFGS update `H <- (I - r s y') H (I - r y s') + r s s'`.
fn bfgs_update(h: &mut [f64], s: &[f64], y: &[f64], n: usize) {
    let sy: f64 = s.iter().zip(y).map(|(a, b)| a * b).sum();
    let r = 1.0 / sy;
    let mut hy = vec![0.0; n];
    for i in 0..n {
        hy[i] = (0..n).map(|j| h[i * n + j] * y[j]).sum();
    }
    let yhy: f64 = y.iter().zip(&hy).map(|(a, b)| a * b).sum();
    for i in 0..n {
        for j in 0..n {
            h[i * n + j] += -r * (hy[i] * s[j] + s[i] * hy[j]) + (r * r * yhy + r) * s[i] * s[j];
        }
    }
}

fn check_inputs<P: NlpProblem + ?Sized>(problem: &P, z0: &[f64]) -> Result<(), SolverError> {
    let n = problem.dim();
    let lb = problem.lower_bounds();
    let ub = problem.upper_bounds();
    if z0.len() != n {
        return Err(SolverError::DimensionMismatch {
            expected: n,
            got: z0.len(),
        });
    }
    if lb.len() != n || ub.len() != n {
        return Err(SolverError::DimensionMismatch {
            expected: n,
            got: lb.len().min(ub.len()),
        });
    }
    for i in 0..n {
        if !(lb[i].is_finite() && ub[i].is_finite() && lb[i] <= ub[i]) {
            return Err(SolverError::InvalidBounds {
                index: i,
                lower: lb[i],
                upper: ub[i],
            });
        }
    }
    Ok(())
}

/// Solves `problem` from `z0` (projected onto the box).
pub fn solve<P: NlpProblem + ?Sized>(
    problem: &P,
    z0: &[f64],
    opts: &SolverOptions,
) -> Result<NlpSolution, SolverError> {
    solve_inner(problem, z0, opts, None)
}

/// [`solve`] that also returns one [`IterationRecord`] per accepted step.
pub fn solve_logged<P: NlpProblem + ?Sized>(
    problem: &P,
    z0: &[f64],
    opts: &SolverOptions,
) -> Result<(NlpSolution, Vec<IterationRecord>), SolverError> {
    let mut log = Vec::new();
    let sol = solve_inner(problem, z0, opts, Some(&mut log))?;
    Ok((sol, log))
}

fn solve_inner<P: NlpProblem + ?Sized>(
    problem: &P,
    z0: &[f64],
    opts: &SolverOptions,
    mut log: Option<&mut Vec<IterationRecord>>,
) -> Result<NlpSolution, SolverError> {
    check_inputs(problem, z0)?;
    let n = problem.dim();
    let lb = problem.lower_bounds();
    let ub = problem.upper_bounds();
    let span: Vec<f64> = lb.iter().zip(ub).map(|(l, u)| u - l).collect();

    let mut sp = Scaled {
        problem,
        lb,
        span,
        fd_step: opts.fd_step,
        mu: opts.penalty_initial,
        z: vec![0.0; n],
        g: vec![0.0; problem.num_constraints()],
    };

    let mut u: Vec<f64> = (0..n)
        .map(|i| {
            if sp.span[i] > 0.0 {
                ((z0[i] - lb[i]) / sp.span[i]).clamp(0.0, 1.0)
            } else {
                0.0
            }
        })
        .collect();
    let u_start = u.clone();

    let mut grad = vec![0.0; n];
    let mut grad_new = vec![0.0; n];
    let mut free = vec![true; n];
    let mut d = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut h = vec![0.0; n * n];

    let mut iterations = 0usize;
    let mut status;
    let mut cur;
    let mut residual;

    'outer: loop {
        cur = sp.eval(&u)?;
        sp.grad(&u, &mut grad)?;
        reset_identity(&mut h, n, 1.0);
        let mut fresh_model = true;
        let mut scaled_once = false;

        loop {
            residual = projected_gradient_norm(&u, &grad);
            if residual <= opts.tol {
                status = SolverStatus::Converged;
                break;
            }
            if iterations >= opts.max_iter {
                status = SolverStatus::MaxIter;
                break;
            }

            active_set(&u, &grad, &mut free);
            for i in 0..n {
                d[i] = if free[i] {
                    -(0..n)
                        .filter(|&j| free[j])
                        .map(|j| h[i * n + j] * grad[j])
                        .sum::<f64>()
                } else {
                    0.0
                };
            }
            let mut slope: f64 = d.iter().zip(&grad).map(|(a, b)| a * b).sum();
            if slope >= 0.0 {
                reset_identity(&mut h, n, 1.0);
                fresh_model = true;
                scaled_once = false;
                for i in 0..n {
                    d[i] = if free[i] { -grad[i] } else { 0.0 };
                }
                slope = d.iter().zip(&grad).map(|(a, b)| a * b).sum();
                if slope >= 0.0 {
                    status = SolverStatus::Stalled;
                    break;
                }
            }

            let dmax = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let mut alpha = (1.0f64).min(1.0 / dmax);
            let mut accepted = None;
            for _ in 0..MAX_BACKTRACKS {
                for i in 0..n {
                    trial[i] = u[i] + alpha * d[i];
                }
                project_unit(&mut trial);
                let decrease: f64 = trial
                    .iter()
                    .zip(&u)
                    .zip(&grad)
                    .map(|((t, ui), g)| (t - ui) * g)
                    .sum();
                let e = sp.eval(&trial)?;
                if e.merit <= cur.merit + ARMIJO_C1 * decrease && decrease < 0.0 {
                    accepted = Some(e);
                    break;
                }
                alpha *= 0.5;
            }

            let Some(next) = accepted else {
                if fresh_model {
                    status = SolverStatus::Stalled;
                    break;
                }
                reset_identity(&mut h, n, 1.0);
                fresh_model = true;
                scaled_once = false;
                continue;
            };

            sp.grad(&trial, &mut grad_new)?;
            for i in 0..n {
                let keep = free[i];
                s[i] = if keep { trial[i] - u[i] } else { 0.0 };
                y[i] = if keep { grad_new[i] - grad[i] } else { 0.0 };
            }
            let step_length = s.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
            let yy: f64 = y.iter().map(|v| v * v).sum();
            let ss: f64 = s.iter().map(|v| v * v).sum();
            if sy > 1e-12 * libm::sqrt(ss * yy) && sy > 0.0 {
                if !scaled_once {
                    reset_identity(&mut h, n, sy / yy);
                    scaled_once = true;
                }
                bfgs_update(&mut h, &s, &y, n);
                fresh_model = false;
            }

            u.copy_from_slice(&trial);
            core::mem::swap(&mut grad, &mut grad_new);
            cur = next;
            iterations += 1;

            if let Some(log) = log.as_deref_mut() {
                log.push(IterationRecord {
                    iter: iterations,
                    f: cur.merit,
                    violation: cur.viol,
                    step_length,
                    grad_norm: projected_gradient_norm(&u, &grad),
                    penalty: sp.mu,
                });
            }
        }

        if cur.viol <= opts.feas_tol {
            break 'outer;
        }
        if iterations >= opts.max_iter || sp.mu * opts.penalty_growth > PENALTY_MAX {
            status = SolverStatus::InfeasibleSoftened;
            break 'outer;
        }
        sp.mu *= opts.penalty_growth;
    }

    // Never hand back something worse than the start under the final merit.
    let start = sp.eval(&u_start)?;
    if start.merit < cur.merit {
        u.copy_from_slice(&u_start);
        cur = start;
        sp.grad(&u, &mut grad)?;
        residual = projected_gradient_norm(&u, &grad);
    }

    let mut z = vec![0.0; n];
    sp.to_z(&u, &mut z);
    Ok(NlpSolution {
        z_opt: z,
        objective_value: cur.f,
        max_constraint_violation: cur.viol,
        stationarity_residual: residual,
        iterations,
        status,
        penalty: sp.mu,
    })
}

/// Largest relative disagreement between the gradient the solver would use
/// (analytic if supplied, else central differences at `fd_step`) and central
/// differences at `fd_step / 10`.
///
/// Components are compared as `|a - b| / max(|a|, |b|, 1)`; the result is 0
/// when every component of both gradients is below 1e-12 in magnitude.
pub fn check_gradient<P: NlpProblem + ?Sized>(problem: &P, z: &[f64], opts: &SolverOptions) -> f64 {
    let n = problem.dim();
    let mut solver_grad = vec![0.0; n];
    if !problem.gradient(z, &mut solver_grad) {
        central_difference(problem, z, opts.fd_step, &mut solver_grad);
    }
    let mut fine = vec![0.0; n];
    central_difference(problem, z, opts.fd_step / 10.0, &mut fine);

    if solver_grad.iter().chain(&fine).all(|v| v.abs() < 1e-12) {
        return 0.0;
    }
    solver_grad
        .iter()
        .zip(&fine)
        .map(|(a, b)| (a - b).abs() / a.abs().max(b.abs()).max(1.0))
        .fold(0.0, f64::max)
}

fn central_difference<P: NlpProblem + ?Sized>(problem: &P, z: &[f64], h: f64, out: &mut [f64]) {
    let mut x = z.to_vec();
    for i in 0..z.len() {
        x[i] = z[i] + h;
        let fp = problem.objective(&x);
        x[i] = z[i] - h;
        let fm = problem.objective(&x);
        x[i] = z[i];
        out[i] = (fp - fm) / (2.0 * h);
    }
}
