//! Independent verification tools: finite-difference derivative checks and
//! brute-force eigenpair enumeration for dimensions 2 and 3.
//!
//! These deliberately avoid the closed-form derivative code paths they are
//! checking: the gradient check differences the objective itself, the
//! Hessian check differences the gradient, and the 2-dimensional enumerator
//! locates all critical points of the objective along the feasible curve by
//! a sign-change scan plus bisection.

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::generate::random_feasible;
use crate::manifold::Objective;
use crate::solver::{residual, solve, EigenPair, SolveConfig};

/// Two eigenpairs within these thresholds (eigenvalue, vector distance up to
/// sign) are treated as the same pair.
pub const DEDUP_LAMBDA_TOL: f64 = 1e-6;
pub const DEDUP_VECTOR_TOL: f64 = 1e-4;

/// Pairs with a defect above this are discarded by the enumerators.
pub const ENUM_RES_TOL: f64 = 1e-8;

/// A deduplicated collection of eigenpairs, sorted by eigenvalue.
#[derive(Clone, Debug, Default)]
pub struct EigenSet {
    pairs: Vec<EigenPair>,
}

impl EigenSet {
    /// Sorts candidates by eigenvalue and drops duplicates: a pair is a
    /// duplicate when some kept pair is within [`DEDUP_LAMBDA_TOL`] in
    /// eigenvalue and within [`DEDUP_VECTOR_TOL`] in `min(|x-x'|, |x+x'|)`.
    pub fn from_candidates(mut candidates: Vec<EigenPair>) -> Self {
        candidates.sort_by(|a, b| {
            a.lambda
                .partial_cmp(&b.lambda)
                .unwrap()
                .then(a.residual.partial_cmp(&b.residual).unwrap())
        });
        let mut pairs: Vec<EigenPair> = Vec::new();
        for cand in candidates {
            let dup = pairs.iter().rev().take_while(|p| {
                (p.lambda - cand.lambda).abs() <= DEDUP_LAMBDA_TOL
            }).any(|p| {
                let dist = (&p.x - &cand.x).norm().min((&p.x + &cand.x).norm());
                dist <= DEDUP_VECTOR_TOL
            });
            if !dup {
                pairs.push(cand);
            }
        }
        Self { pairs }
    }

    pub fn pairs(&self) -> &[EigenPair] {
        &self.pairs
    }

    pub fn lambdas(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.lambda).collect()
    }

    pub fn contains_lambda(&self, lambda: f64, tol: f64) -> bool {
        self.pairs.iter().any(|p| (p.lambda - lambda).abs() <= tol)
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Compares the analytic gradient of `h` against central differences of `h`
/// at step `step`; returns the worst coordinate error scaled by
/// `1 / (1 + |grad|)`.
pub fn fd_check_gradient(obj: &Objective, x: &DVector<f64>, step: f64) -> Result<f64> {
    if x.iter().all(|v| *v == 0.0) {
        return Err(Error::ZeroVector);
    }
    let grad = obj.grad_h(x)?;
    let mut worst: f64 = 0.0;
    let mut probe = x.clone();
    for j in 0..x.len() {
        probe[j] = x[j] + step;
        let hp = obj.h_eval(&probe)?;
        probe[j] = x[j] - step;
        let hm = obj.h_eval(&probe)?;
        probe[j] = x[j];
        worst = worst.max(((hp - hm) / (2.0 * step) - grad[j]).abs());
    }
    Ok(worst / (1.0 + grad.norm()))
}

/// Compares the feasible Hessian against the central-difference Jacobian of
/// the gradient of `h` at a feasible point; returns the worst entry error
/// scaled by `1 / (1 + max |H|)`.
pub fn fd_check_hessian(obj: &Objective, x: &DVector<f64>, step: f64) -> Result<f64> {
    let hess = obj.feas_hess(x)?;
    let n = x.len();
    let mut worst: f64 = 0.0;
    let scale = 1.0 + hess.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let mut probe = x.clone();
    for j in 0..n {
        probe[j] = x[j] + step;
        let gp = obj.grad_h(&probe)?;
        probe[j] = x[j] - step;
        let gm = obj.grad_h(&probe)?;
        probe[j] = x[j];
        for i in 0..n {
            let jac = (gp[i] - gm[i]) / (2.0 * step);
            worst = worst.max((hess[(i, j)] - jac).abs());
        }
    }
    Ok(worst / scale)
}

/// Enumerates the eigenpairs of a 2-dimensional problem by scanning the
/// feasible curve.
///
/// The curve is parametrized by `w(t) = (cos t, sin t)` scaled onto the
/// surface; since the objective is scale invariant, its derivative along the
/// curve is `grad h(w(t)) . w'(t)`. Sign changes of that derivative over a
/// `grid`-point scan are bisected down to `|derivative| <= 1e-12` and each
/// root is mapped to an eigenpair.
pub fn enumerate_n2(obj: &Objective, grid: usize) -> Result<EigenSet> {
    if obj.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: obj.dim(),
        });
    }
    if grid < 360 {
        return Err(Error::InvalidConfig("grid must be at least 360".into()));
    }
    let slope = |t: f64| -> Result<f64> {
        let w = DVector::from_vec(vec![t.cos(), t.sin()]);
        let tangent = DVector::from_vec(vec![-t.sin(), t.cos()]);
        Ok(obj.grad_h(&w)?.dot(&tangent))
    };

    let tau = std::f64::consts::TAU;
    let mut values = Vec::with_capacity(grid + 1);
    for i in 0..=grid {
        values.push(slope(i as f64 * tau / grid as f64)?);
    }

    let mut roots = Vec::new();
    for i in 0..grid {
        let t0 = i as f64 * tau / grid as f64;
        let t1 = (i + 1) as f64 * tau / grid as f64;
        if values[i].abs() <= 1e-12 {
            roots.push(t0);
            continue;
        }
        if values[i] * values[i + 1] < 0.0 {
            let (mut lo, mut hi) = (t0, t1);
            let mut f_lo = values[i];
            let mut root = 0.5 * (lo + hi);
            while hi - lo > 1e-15 {
                root = 0.5 * (lo + hi);
                let f_mid = slope(root)?;
                if f_mid.abs() <= 1e-12 {
                    break;
                }
                if f_lo * f_mid < 0.0 {
                    hi = root;
                } else {
                    lo = root;
                    f_lo = f_mid;
                }
            }
            roots.push(root);
        }
    }

    let mut candidates = Vec::new();
    for t in roots {
        let w = DVector::from_vec(vec![t.cos(), t.sin()]);
        let x = obj.bform().normalize(&w)?;
        let lambda = obj.eigenvalue(&x)?;
        let res = residual(obj, &x)?;
        if res <= ENUM_RES_TOL {
            candidates.push(EigenPair { x, lambda, residual: res });
        }
    }
    Ok(EigenSet::from_candidates(candidates))
}

/// Enumerates eigenpairs of a 3-dimensional problem by pooling converged
/// solves from `starts` seeded random feasible points, run in both
/// optimization directions.
pub fn enumerate_n3(obj: &Objective, starts: usize, seed: u64) -> Result<EigenSet> {
    if obj.dim() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            got: obj.dim(),
        });
    }
    let flipped = obj.flipped();
    let cfg = SolveConfig::default();
    let mut candidates = Vec::new();
    for i in 0..starts {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
        let x0 = random_feasible(obj.bform(), 3, &mut rng)?;
        for o in [obj, &flipped] {
            let result = solve(o, &x0, &cfg)?;
            if result.converged {
                candidates.push(result.eigenpair);
            }
        }
    }
    Ok(EigenSet::from_candidates(candidates))
}
