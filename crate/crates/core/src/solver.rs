//! The feasible conjugate gradient iteration.
//!
//! Starting from a point scaled onto the feasible surface, each step builds a
//! modified Polak-Ribiere-Polyak direction, estimates an initial step from
//! the curvature along that direction, backtracks along the feasible curve
//! `x(alpha) = (x + alpha d)/|x + alpha d|_B` under an Armijo-type sufficient
//! decrease condition, and stops once the eigenpair defect drops below the
//! tolerance. Every iterate stays on the surface by construction and the
//! eigenvalue estimates are monotone in the solve sense.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifold::Objective;

/// Initial step length strategy for the curve search.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeltaStrategy {
    /// `delta = |F.d / d^T H d|`, the minimizer of the local quadratic model,
    /// clamped to `[1e-10, 1e10]` with a fallback of 1 when the curvature is
    /// numerically zero.
    #[serde(rename = "hessian")]
    HessianEstimate,
    /// A fixed initial step.
    #[serde(rename = "constant")]
    Constant(f64),
}

/// Solver parameters. The defaults are the settings used throughout the
/// experiments: `sigma1 = sigma2 = 1e-4`, `rho = 0.1`, residual tolerance
/// `1e-8`, at most 500 iterations, curvature-based initial steps.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveConfig {
    pub sigma1: f64,
    pub sigma2: f64,
    pub rho: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub max_backtracks: u32,
    pub delta: DeltaStrategy,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            sigma1: 1e-4,
            sigma2: 1e-4,
            rho: 0.1,
            tol: 1e-8,
            max_iter: 500,
            max_backtracks: 60,
            delta: DeltaStrategy::HessianEstimate,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.sigma1 > 0.0
            && self.sigma1 < 1.0
            && self.sigma2 > 0.0
            && self.rho > 0.0
            && self.rho < 1.0
            && self.tol > 0.0;
        if !ok {
            return Err(Error::InvalidConfig(
                "require sigma1 in (0,1), sigma2 > 0, rho in (0,1), tol > 0".into(),
            ));
        }
        if let DeltaStrategy::Constant(d) = self.delta {
            if !(d > 0.0) {
                return Err(Error::InvalidConfig("constant delta must be positive".into()));
            }
        }
        Ok(())
    }
}

/// An eigenvector, its eigenvalue and the defect of the pair.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenPair {
    pub x: DVector<f64>,
    pub lambda: f64,
    pub residual: f64,
}

/// Why a solve stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TerminationReason {
    Converged,
    MaxIterations,
    LineSearchFailed,
}

/// One row of the per-iteration trace.
#[derive(Clone, Copy, Debug)]
pub struct TraceRecord {
    pub k: usize,
    pub lambda: f64,
    pub grad_norm: f64,
    pub residual: f64,
    /// Step accepted at this iteration; zero on the terminal row.
    pub alpha: f64,
}

/// Outcome of a solve.
#[derive(Clone, Debug)]
pub struct SolveResult {
    pub eigenpair: EigenPair,
    pub iterations: usize,
    pub total_backtracks: u64,
    pub converged: bool,
    pub reason: TerminationReason,
    pub trace: Vec<TraceRecord>,
}

impl SolveResult {
    pub fn residual(&self) -> f64 {
        self.eigenpair.residual
    }
}

/// Snapshot of the solver state handed to an observer once per completed
/// iteration, before the step is taken.
#[derive(Clone, Copy, Debug)]
pub struct IterateState<'a> {
    pub k: usize,
    pub x: &'a DVector<f64>,
    /// Eigenvalue estimate at `x`, original sign convention.
    pub lambda: f64,
    /// Feasible gradient `F(x_k)` of the internal minimization problem.
    pub grad: &'a DVector<f64>,
    pub direction: &'a DVector<f64>,
    pub alpha: f64,
    pub backtracks: u32,
    pub residual: f64,
}

/// The conjugate direction
/// `d_k = -F_k + beta d_{k-1} - theta y`, `y = F_k - F_{k-1}`,
/// `beta = F_k.y / |F_{k-1}|^2`, `theta = F_k.d_{k-1} / |F_{k-1}|^2`.
///
/// The two correction terms cancel against each other in `d_k . F_k`, so
/// `d_k . F_k = -|F_k|^2` identically and the direction is always descent.
pub fn direction(
    grad: &DVector<f64>,
    grad_prev: &DVector<f64>,
    dir_prev: &DVector<f64>,
    k: usize,
) -> Result<DVector<f64>> {
    if k == 0 {
        return Ok(-grad);
    }
    let denom = grad_prev.norm_squared();
    if denom == 0.0 {
        return Err(Error::ZeroPreviousGradient(k));
    }
    let y = grad - grad_prev;
    let beta = grad.dot(&y) / denom;
    let theta = grad.dot(dir_prev) / denom;
    Ok(-grad + dir_prev * beta - y * theta)
}

/// Initial step for the curve search from the quadratic model along `d`:
/// `delta = |F.d / d^T H d|` under [`DeltaStrategy::HessianEstimate`], with a
/// fallback of 1 when the curvature is below `1e-14 |d|^2`.
pub fn initial_step(
    grad_dot_dir: f64,
    dir_hess_dir: f64,
    dir_norm_sq: f64,
    cfg: &SolveConfig,
) -> Result<f64> {
    if dir_norm_sq == 0.0 {
        return Err(Error::ZeroDirection);
    }
    Ok(match cfg.delta {
        DeltaStrategy::Constant(d) => d,
        DeltaStrategy::HessianEstimate => {
            if dir_hess_dir.abs() <= 1e-14 * dir_norm_sq {
                1.0
            } else {
                (grad_dot_dir / dir_hess_dir).abs().clamp(1e-10, 1e10)
            }
        }
    })
}

/// Backtracking curve search: returns the largest `alpha = delta rho^i`,
/// `i >= 0`, satisfying
/// `h(x(alpha)) <= h(x) + sigma1 alpha F.d - sigma2 alpha^2 |d|^2`,
/// together with the number of rejected trials.
///
/// A trial step that collapses `x + alpha d` to zero is treated as a
/// rejection; smaller steps move the trial point away from the origin.
pub fn line_search(
    obj: &Objective,
    x: &DVector<f64>,
    grad: &DVector<f64>,
    dir: &DVector<f64>,
    delta: f64,
    cfg: &SolveConfig,
) -> Result<(f64, u32)> {
    obj.check_feasible(x)?;
    let fd = grad.dot(dir);
    debug_assert!(fd < 0.0, "curve search requires a descent direction");
    let dn2 = dir.norm_squared();
    let h_x = obj.h_eval(x)?;
    for i in 0..=cfg.max_backtracks {
        let alpha = delta * cfg.rho.powi(i as i32);
        let y = match obj.bform().retract(x, dir, alpha) {
            Ok(y) => y,
            Err(Error::ZeroVector) => continue,
            Err(e) => return Err(e),
        };
        let h_y = obj.h_eval(&y)?;
        if h_y <= h_x + cfg.sigma1 * alpha * fd - cfg.sigma2 * alpha * alpha * dn2 {
            return Ok((alpha, i));
        }
    }
    Err(Error::LineSearchFailed(cfg.max_backtracks))
}

/// The two-branch eigenpair defect with `lambda = A x^m`:
/// `|A x^{m-1} - lambda B x^{m'-1}|` when `|lambda| <= 1`, otherwise
/// `|A x^{m-1}/lambda - B x^{m'-1}|`. Evaluated in the original tensor's
/// sign convention.
pub fn residual(obj: &Objective, x: &DVector<f64>) -> Result<f64> {
    Ok(obj.eval_state(x)?.residual)
}

/// Runs the feasible conjugate gradient iteration from `x0_raw` (any nonzero
/// vector; it is scaled onto the surface first).
///
/// A failed curve search is reported as an unconverged result, not an error.
pub fn solve(obj: &Objective, x0_raw: &DVector<f64>, cfg: &SolveConfig) -> Result<SolveResult> {
    solve_observed(obj, x0_raw, cfg, |_| {})
}

/// [`solve`] with a per-iteration observer, called once per completed step
/// with the full iterate state.
pub fn solve_observed(
    obj: &Objective,
    x0_raw: &DVector<f64>,
    cfg: &SolveConfig,
    mut observer: impl FnMut(&IterateState<'_>),
) -> Result<SolveResult> {
    cfg.validate()?;
    let mut x = obj.bform().normalize(x0_raw)?;
    let mut ev = obj.eval_state(&x)?;
    let mut prev: Option<(DVector<f64>, DVector<f64>)> = None; // (F_{k-1}, d_{k-1})
    let mut trace = Vec::new();
    let mut total_backtracks = 0u64;
    let mut k = 0usize;

    let reason = loop {
        if ev.residual <= cfg.tol {
            trace.push(TraceRecord {
                k,
                lambda: ev.lambda,
                grad_norm: ev.grad.norm(),
                residual: ev.residual,
                alpha: 0.0,
            });
            break TerminationReason::Converged;
        }
        if k >= cfg.max_iter {
            trace.push(TraceRecord {
                k,
                lambda: ev.lambda,
                grad_norm: ev.grad.norm(),
                residual: ev.residual,
                alpha: 0.0,
            });
            break TerminationReason::MaxIterations;
        }

        let dir = match &prev {
            None => -&ev.grad,
            Some((grad_prev, dir_prev)) => direction(&ev.grad, grad_prev, dir_prev, k)?,
        };
        let fd = ev.grad.dot(&dir);
        let dn2 = dir.norm_squared();
        let dhd = obj.feas_hess_quad(&x, &dir)?;
        let delta = initial_step(fd, dhd, dn2, cfg)?;

        let (alpha, backtracks) = match line_search(obj, &x, &ev.grad, &dir, delta, cfg) {
            Ok(step) => step,
            Err(Error::LineSearchFailed(_)) => {
                trace.push(TraceRecord {
                    k,
                    lambda: ev.lambda,
                    grad_norm: ev.grad.norm(),
                    residual: ev.residual,
                    alpha: 0.0,
                });
                break TerminationReason::LineSearchFailed;
            }
            Err(e) => return Err(e),
        };
        total_backtracks += u64::from(backtracks);
        trace.push(TraceRecord {
            k,
            lambda: ev.lambda,
            grad_norm: ev.grad.norm(),
            residual: ev.residual,
            alpha,
        });
        observer(&IterateState {
            k,
            x: &x,
            lambda: ev.lambda,
            grad: &ev.grad,
            direction: &dir,
            alpha,
            backtracks,
            residual: ev.residual,
        });

        x = obj.bform().retract(&x, &dir, alpha)?;
        let next = obj.eval_state(&x)?;
        prev = Some((std::mem::replace(&mut ev, next).grad, dir));
        k += 1;
    };

    Ok(SolveResult {
        eigenpair: EigenPair {
            x,
            lambda: ev.lambda,
            residual: ev.residual,
        },
        iterations: k,
        total_backtracks,
        converged: reason == TerminationReason::Converged,
        reason,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bform::BForm;
    use crate::manifold::Sense;
    use crate::tensor::SymTensor;
    use approx::assert_relative_eq;

    fn vecn(v: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(v)
    }

    #[test]
    fn first_direction_is_steepest_descent() {
        let f = vecn(&[1.0, 2.0]);
        let d = direction(&f, &f, &f, 0).unwrap();
        assert_eq!(d, vecn(&[-1.0, -2.0]));
    }

    #[test]
    fn direction_formula_example() {
        let f_prev = vecn(&[1.0, 0.0]);
        let f = vecn(&[0.0, 2.0]);
        let d_prev = vecn(&[-1.0, 0.0]);
        let d = direction(&f, &f_prev, &d_prev, 1).unwrap();
        assert_eq!(d, vecn(&[-4.0, -2.0]));
        assert_eq!(d.dot(&f), -f.norm_squared());
    }

    #[test]
    fn direction_reduces_to_steepest_descent_when_orthogonal() {
        let f = vecn(&[0.0, 0.0, 3.0]);
        let f_prev = vecn(&[2.0, 0.0, 0.0]);
        // y = f - f_prev must be orthogonal to f as well: pick f_prev, d_prev
        // in the plane orthogonal to f.
        let d_prev = vecn(&[0.0, 1.0, 0.0]);
        let d = direction(&f, &f_prev, &d_prev, 3).unwrap();
        // beta = f.y / |f_prev|^2 = (f.f - f.f_prev)/4 = 9/4, theta = 0.
        let y = &f - &f_prev;
        assert_eq!(f.dot(&d_prev), 0.0);
        let expected = -&f + &d_prev * (f.dot(&y) / 4.0) - y * 0.0;
        assert_eq!(d, expected);
        assert_relative_eq!(d.dot(&f), -f.norm_squared());
    }

    #[test]
    fn descent_identity_on_random_sequences() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let dim = rng.random_range(2..6);
            let mut draw = |_: usize| {
                DVector::from_fn(dim, |_, _| rng.random_range(-1.0..=1.0_f64))
            };
            let f = draw(0);
            let f_prev = draw(0);
            let d_prev = draw(0);
            if f_prev.norm_squared() == 0.0 {
                continue;
            }
            let d = direction(&f, &f_prev, &d_prev, 1).unwrap();
            let lhs = (d.dot(&f) + f.norm_squared()).abs();
            assert!(lhs <= 1e-12 * f.norm_squared().max(1e-300));
        }
    }

    #[test]
    fn zero_previous_gradient_is_an_error() {
        let f = vecn(&[1.0, 0.0]);
        let z = vecn(&[0.0, 0.0]);
        assert!(matches!(
            direction(&f, &z, &f, 2).unwrap_err(),
            Error::ZeroPreviousGradient(2)
        ));
    }

    #[test]
    fn initial_step_examples() {
        let cfg = SolveConfig::default();
        assert_eq!(initial_step(-4.0, 8.0, 1.0, &cfg).unwrap(), 0.5);
        assert_eq!(initial_step(-4.0, 0.0, 1.0, &cfg).unwrap(), 1.0);
        assert_eq!(initial_step(-4.0, 1e-30, 1.0, &cfg).unwrap(), 1.0);
        assert_eq!(initial_step(-1.0, 1e-30, 1e-18, &cfg).unwrap(), 1e10);

        let fixed = SolveConfig {
            delta: DeltaStrategy::Constant(0.7),
            ..SolveConfig::default()
        };
        assert_eq!(initial_step(-4.0, 8.0, 1.0, &fixed).unwrap(), 0.7);
        assert!(matches!(
            initial_step(-4.0, 8.0, 0.0, &cfg).unwrap_err(),
            Error::ZeroDirection
        ));
    }

    fn small_objective() -> Objective {
        // a[111] = 1, a[222] = -2, a[112] = 0.3 on the unit circle.
        let t = SymTensor::dense_from_entries(
            3,
            2,
            [
                (vec![1, 1, 1], 1.0),
                (vec![2, 2, 2], -2.0),
                (vec![1, 1, 2], 0.3),
            ],
        )
        .unwrap();
        Objective::new(t, BForm::identity(), Sense::Minimize).unwrap()
    }

    #[test]
    fn line_search_accepts_delta_when_it_satisfies_the_condition() {
        let obj = small_objective();
        let x = obj.bform().normalize(&vecn(&[1.0, 0.4])).unwrap();
        let grad = obj.feas_grad(&x).unwrap();
        let dir = -&grad;
        let cfg = SolveConfig::default();
        // A tiny delta always satisfies sufficient decrease.
        let (alpha, backtracks) = line_search(&obj, &x, &grad, &dir, 1e-6, &cfg).unwrap();
        assert_eq!(backtracks, 0);
        assert_eq!(alpha, 1e-6);
    }

    #[test]
    fn line_search_matches_independent_scalar_scan() {
        let obj = small_objective();
        let x = obj.bform().normalize(&vecn(&[1.0, 0.4])).unwrap();
        let grad = obj.feas_grad(&x).unwrap();
        let dir = -&grad;
        let cfg = SolveConfig::default();
        // Large enough that the quadratic penalty rejects the first trials.
        let delta = 1e4;
        let (alpha, backtracks) = line_search(&obj, &x, &grad, &dir, delta, &cfg).unwrap();

        let fd = grad.dot(&dir);
        let dn2 = dir.norm_squared();
        let h_x = obj.h_eval(&x).unwrap();
        let mut expected = None;
        for i in 0..=cfg.max_backtracks {
            let a = delta * cfg.rho.powi(i as i32);
            let Ok(y) = obj.bform().retract(&x, &dir, a) else {
                continue;
            };
            if obj.h_eval(&y).unwrap() <= h_x + cfg.sigma1 * a * fd - cfg.sigma2 * a * a * dn2 {
                expected = Some((a, i));
                break;
            }
        }
        assert_eq!(Some((alpha, backtracks)), expected);
        assert!(backtracks > 0);
    }

    #[test]
    fn residual_is_zero_at_an_exact_eigenpair() {
        let t = SymTensor::dense_from_entries(
            4,
            3,
            (0..3).map(|i| (vec![i + 1; 4], (i + 1) as f64)),
        )
        .unwrap();
        let obj = Objective::new(t, BForm::identity(), Sense::Minimize).unwrap();
        let e1 = vecn(&[1.0, 0.0, 0.0]);
        assert!(residual(&obj, &e1).unwrap() <= 1e-15);
    }

    #[test]
    fn residual_scaling_branch() {
        // A = [[2, eps], [eps, 0]] at x = e1: lambda = 2, A x = (2, eps),
        // so the defect is |(2,eps)/2 - (1,0)| = eps/2.
        let eps = 1e-3;
        let t = SymTensor::dense_from_entries(
            2,
            2,
            [(vec![1, 1], 2.0), (vec![1, 2], eps)],
        )
        .unwrap();
        let obj = Objective::new(t, BForm::identity(), Sense::Minimize).unwrap();
        let r = residual(&obj, &vecn(&[1.0, 0.0])).unwrap();
        assert_relative_eq!(r, eps / 2.0, max_relative = 1e-12);
    }

    #[test]
    fn residual_small_branch_equals_gradient_norm() {
        let obj = small_objective();
        let x = obj.bform().normalize(&vecn(&[0.6, 1.0])).unwrap();
        let f = obj.feas_grad(&x).unwrap();
        // |lambda| <= 1 here, so the defect is exactly |F|.
        assert!(obj.eigenvalue(&x).unwrap().abs() <= 1.0);
        assert_relative_eq!(residual(&obj, &x).unwrap(), f.norm(), max_relative = 1e-12);
    }

    #[test]
    fn solve_finds_dominant_axis_of_diagonal_tensor() {
        let t = SymTensor::dense_from_entries(
            4,
            3,
            (0..3).map(|i| (vec![i + 1; 4], (i + 1) as f64)),
        )
        .unwrap();
        let obj = Objective::new(t, BForm::identity(), Sense::Maximize).unwrap();
        let x0 = vecn(&[1e-3, 1e-3, 1.0]);
        let r = solve(&obj, &x0, &SolveConfig::default()).unwrap();
        assert!(r.converged);
        assert_relative_eq!(r.eigenpair.lambda, 3.0, max_relative = 1e-7);
        assert!(r.residual() <= 1e-8);
    }

    #[test]
    fn solve_rejects_zero_start() {
        let obj = small_objective();
        assert!(matches!(
            solve(&obj, &DVector::zeros(2), &SolveConfig::default()).unwrap_err(),
            Error::ZeroVector
        ));
    }

    #[test]
    fn solve_trace_is_consistent() {
        let obj = small_objective();
        let r = solve(&obj, &vecn(&[0.9, -0.2]), &SolveConfig::default()).unwrap();
        assert!(r.converged);
        assert_eq!(r.trace.len(), r.iterations + 1);
        assert_eq!(r.trace.last().unwrap().alpha, 0.0);
        assert!(r.trace.last().unwrap().residual <= 1e-8);
        // Minimize sense: the eigenvalue trace never increases.
        for w in r.trace.windows(2) {
            assert!(w[1].lambda <= w[0].lambda);
        }
    }
}
