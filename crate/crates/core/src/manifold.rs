//! The normalized objective on the feasible surface and its derivatives.
//!
//! For a symmetric tensor `A` of order `m` and a constraint form `B`, the
//! scale-invariant objective is `h(x) = (1/m) A x^m / |x|_B^m`. On the
//! feasible surface its gradient and Hessian reduce to closed forms `F(x)`
//! and `H(x)` built from tensor contractions; `F(x) = 0` exactly at the
//! eigenpairs of `A` relative to `B`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::bform::BForm;
use crate::dd::Dd;
use crate::error::{Error, Result};
use crate::tensor::SymTensor;

/// Feasibility gate for operations that require `B x^{m'} = 1`. The
/// retraction renormalizes every iterate, so drift beyond this is a bug,
/// not rounding.
pub const FEAS_TOL: f64 = 1e-10;

/// Optimization direction for the eigenvalue search.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Minimize,
    Maximize,
}

impl Sense {
    pub fn opposite(self) -> Sense {
        match self {
            Sense::Minimize => Sense::Maximize,
            Sense::Maximize => Sense::Minimize,
        }
    }
}

/// The constrained objective `min/max (1/m) A x^m  s.t.  B x^{m'} = 1`.
///
/// Maximization is handled by negating the tensor once at construction, so
/// that all internal machinery minimizes; reported eigenvalues are mapped
/// back to the sign convention of the original tensor.
#[derive(Clone, Debug)]
pub struct Objective {
    tensor: SymTensor,
    work: SymTensor,
    bform: BForm,
    sense: Sense,
}

/// Everything the solver needs at one iterate, computed in a single pass.
#[derive(Clone, Debug)]
pub(crate) struct StateEval {
    /// Eigenvalue estimate in the original tensor's sign convention.
    pub lambda: f64,
    /// Feasible gradient `F(x)` of the minimization problem.
    pub grad: DVector<f64>,
    /// Two-branch eigenpair defect of `(x, lambda)`.
    pub residual: f64,
}

impl Objective {
    pub fn new(tensor: SymTensor, bform: BForm, sense: Sense) -> Result<Self> {
        if let Some(n) = bform.dim() {
            if n != tensor.dim() {
                return Err(Error::DimensionMismatch {
                    expected: tensor.dim(),
                    got: n,
                });
            }
        }
        let work = match sense {
            Sense::Minimize => tensor.clone(),
            Sense::Maximize => tensor.scaled(-1.0),
        };
        Ok(Self {
            tensor,
            work,
            bform,
            sense,
        })
    }

    pub fn tensor(&self) -> &SymTensor {
        &self.tensor
    }

    pub fn bform(&self) -> &BForm {
        &self.bform
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    pub fn dim(&self) -> usize {
        self.tensor.dim()
    }

    pub fn order(&self) -> usize {
        self.tensor.order()
    }

    pub fn border(&self) -> usize {
        self.bform.border()
    }

    /// Same tensor and constraint, opposite optimization direction.
    pub fn flipped(&self) -> Objective {
        Objective::new(self.tensor.clone(), self.bform.clone(), self.sense.opposite())
            .expect("dimensions already validated")
    }

    /// `+1` when minimizing, `-1` when maximizing; maps values of the
    /// internal minimization problem back to the original tensor.
    pub(crate) fn sign(&self) -> f64 {
        match self.sense {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        }
    }

    /// The scale-invariant objective `(1/m) A x^m / |x|_B^m` of the internal
    /// minimization problem.
    pub fn h_eval(&self, x: &DVector<f64>) -> Result<f64> {
        if x.iter().all(|v| *v == 0.0) {
            return Err(Error::ZeroVector);
        }
        let phi = self.bform.phi_dd(x)?;
        if phi.to_f64() <= 0.0 {
            return Err(Error::NonPositiveForm(phi.to_f64()));
        }
        let m = self.order();
        let numer = self.work.txm_dd(x)?;
        // Double-double all the way to the final rounding: the curve search
        // resolves objective differences of one ulp, and rounding is
        // monotone, so a trial step with a true decrease is never rejected.
        let denom = match self.bform.phi_pow_dd(phi, m) {
            Some(p) => p.mul_f64(m as f64),
            None => Dd::from(m as f64 * self.bform.phi_pow(phi.to_f64(), m)),
        };
        Ok(numer.div(denom).to_f64())
    }

    /// Eigenvalue estimate `A x^m` at a feasible point, in the original
    /// tensor's sign convention.
    ///
    /// Derived from `h` (which equals `A x^m / m` on the surface) so that the
    /// eigenvalue trace of a solve inherits the curve search's monotonicity
    /// bit for bit.
    pub fn eigenvalue(&self, x: &DVector<f64>) -> Result<f64> {
        Ok(self.sign() * self.order() as f64 * self.h_eval(x)?)
    }

    /// Gradient of `h` at any nonzero point:
    /// `|x|_B^{-m} (A x^{m-1} - phi(x)^{-1} (A x^m) B x^{m'-1})`.
    /// Orthogonal to `x` since `h` is homogeneous of degree zero.
    pub fn grad_h(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        if x.iter().all(|v| *v == 0.0) {
            return Err(Error::ZeroVector);
        }
        let phi = self.bform.phi(x)?;
        if phi <= 0.0 {
            return Err(Error::NonPositiveForm(phi));
        }
        let axm = self.work.txm(x)?;
        let t1 = self.work.txm1(x)?;
        let bg = self.bform.bgrad(x)?;
        Ok((t1 - bg * (axm / phi)) / self.bform.phi_pow(phi, self.order()))
    }

    /// The feasible gradient `F(x) = A x^{m-1} - (A x^m) B x^{m'-1}`,
    /// valid on the surface. Zero exactly at eigenpairs.
    pub fn feas_grad(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_feasible(x)?;
        let axm = self.work.txm(x)?;
        let t1 = self.work.txm1(x)?;
        let bg = self.bform.bgrad(x)?;
        Ok(t1 - bg * axm)
    }

    /// The feasible Hessian
    /// `H(x) = (m-1) A x^{m-2} - (m'-1)(A x^m) B x^{m'-2}
    ///         - m F(x) ⊙ B x^{m'-1} - (m-m')(A x^m) (B x^{m'-1})(B x^{m'-1})^T`
    /// where `u ⊙ v = u v^T + v u^T`.
    pub fn feas_hess(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.check_feasible(x)?;
        let m = self.order() as f64;
        let mp = self.border() as f64;
        let axm = self.work.txm(x)?;
        let t1 = self.work.txm1(x)?;
        let bg = self.bform.bgrad(x)?;
        let grad = &t1 - &bg * axm;

        let mut out = self.work.txm2(x)? * (m - 1.0);
        out -= self.bform.bhess(x)? * ((mp - 1.0) * axm);
        let cross = &grad * bg.transpose();
        out -= (&cross + cross.transpose()) * m;
        if self.order() != self.border() {
            out -= &bg * bg.transpose() * ((m - mp) * axm);
        }
        Ok(out)
    }

    /// `d^T H(x) d` assembled from quadratic forms; costs `O(n)` for
    /// structured tensors and never materializes an `n x n` matrix.
    pub fn feas_hess_quad(&self, x: &DVector<f64>, d: &DVector<f64>) -> Result<f64> {
        self.check_feasible(x)?;
        let m = self.order() as f64;
        let mp = self.border() as f64;
        let axm = self.work.txm(x)?;
        let t1 = self.work.txm1(x)?;
        let bg = self.bform.bgrad(x)?;
        let fd = t1.dot(d) - bg.dot(d) * axm;

        let mut out = self.work.txm2_quad(x, d)? * (m - 1.0);
        out -= self.bform.bhess_quad(x, d)? * ((mp - 1.0) * axm);
        out -= 2.0 * m * fd * bg.dot(d);
        if self.order() != self.border() {
            out -= (m - mp) * axm * bg.dot(d).powi(2);
        }
        Ok(out)
    }

    pub fn is_feasible(&self, x: &DVector<f64>) -> bool {
        matches!(self.bform.phi(x), Ok(phi) if (phi - 1.0).abs() <= FEAS_TOL)
    }

    pub fn check_feasible(&self, x: &DVector<f64>) -> Result<()> {
        let phi = self.bform.phi(x)?;
        let dev = (phi - 1.0).abs();
        if dev > FEAS_TOL {
            return Err(Error::InfeasiblePoint(dev));
        }
        Ok(())
    }

    /// One-pass evaluation of objective, gradient, eigenvalue and residual
    /// at a feasible point.
    pub(crate) fn eval_state(&self, x: &DVector<f64>) -> Result<StateEval> {
        self.check_feasible(x)?;
        let h = self.h_eval(x)?;
        let lambda = self.sign() * self.order() as f64 * h;
        let axm = self.work.txm(x)?;
        let t1 = self.work.txm1(x)?;
        let bg = self.bform.bgrad(x)?;
        let grad = &t1 - &bg * axm;

        // The defect is evaluated against the original tensor; negating both
        // A x^{m-1} and lambda leaves each branch's norm unchanged, so the
        // sign-adjusted contractions can be reused directly.
        let lambda_raw = self.sign() * axm;
        let residual = if lambda_raw.abs() <= 1.0 {
            (t1 * self.sign() - &bg * lambda_raw).norm()
        } else {
            (t1 * (self.sign() / lambda_raw) - &bg).norm()
        };
        Ok(StateEval {
            lambda,
            grad,
            residual,
        })
    }
}

/// The projector `P(x) = I - x (B x^{m'-1})^T` onto the tangent of the
/// feasible surface at `x`. Idempotent on the surface.
pub fn projector(bform: &BForm, x: &DVector<f64>) -> Result<DMatrix<f64>> {
    let phi = bform.phi(x)?;
    let dev = (phi - 1.0).abs();
    if dev > FEAS_TOL {
        return Err(Error::InfeasiblePoint(dev));
    }
    let bg = bform.bgrad(x)?;
    Ok(DMatrix::identity(x.len(), x.len()) - x * bg.transpose())
}
