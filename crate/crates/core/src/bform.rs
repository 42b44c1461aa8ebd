//! The positive definite even-order form defining the feasible surface.
//!
//! A constraint form `B` of even order `m'` induces the gauge
//! `|y|_B = (B y^{m'})^(1/m')` and the feasible surface `{x : B x^{m'} = 1}`.
//! Four variants are supported: the Euclidean quadratic form (Z-eigenpairs),
//! the diagonal power form (H-eigenpairs), powers of a quadratic form
//! (D-eigenpairs) and a general dense symmetric tensor.

use nalgebra::{DMatrix, DVector};

use crate::dd::{two_prod, CompensatedSum, Dd};
use crate::error::{Error, Result};
use crate::tensor::SymTensor;

/// A positive definite symmetric form of even order `m'`.
#[derive(Clone, Debug, PartialEq)]
pub enum BForm {
    /// `B x^2 = x^T x`; the feasible surface is the unit sphere.
    Identity2,
    /// `B x^{m'} = sum_i x_i^{m'}` with `m'` even.
    DiagPower { border: usize },
    /// `B x^{m'} = (x^T D x)^{m'/2}` for a symmetric positive definite `D`.
    QuadFormPower { border: usize, matrix: DMatrix<f64> },
    /// A dense even-order symmetric tensor, assumed positive definite.
    Dense(SymTensor),
}

impl BForm {
    pub fn identity() -> Self {
        BForm::Identity2
    }

    pub fn diag_power(border: usize) -> Result<Self> {
        check_border(border)?;
        Ok(BForm::DiagPower { border })
    }

    /// The form `(x^T D x)^{m'/2}`. `matrix` must be square and symmetric;
    /// it is symmetrized exactly to guard against rounding in its assembly.
    pub fn quad_form_power(border: usize, matrix: DMatrix<f64>) -> Result<Self> {
        check_border(border)?;
        if !matrix.is_square() {
            return Err(Error::InvalidSpec("quadratic form matrix must be square".into()));
        }
        let asym = (&matrix - matrix.transpose()).norm();
        if asym > 1e-12 * (1.0 + matrix.norm()) {
            return Err(Error::InvalidSpec(
                "quadratic form matrix must be symmetric".into(),
            ));
        }
        let matrix = (&matrix + matrix.transpose()) * 0.5;
        Ok(BForm::QuadFormPower { border, matrix })
    }

    pub fn dense(tensor: SymTensor) -> Result<Self> {
        check_border(tensor.order())?;
        Ok(BForm::Dense(tensor))
    }

    /// The order `m'` of the form.
    pub fn border(&self) -> usize {
        match self {
            BForm::Identity2 => 2,
            BForm::DiagPower { border } => *border,
            BForm::QuadFormPower { border, .. } => *border,
            BForm::Dense(t) => t.order(),
        }
    }

    /// Dimension the form is tied to, if any. The identity and diagonal power
    /// forms apply in any dimension.
    pub fn dim(&self) -> Option<usize> {
        match self {
            BForm::Identity2 | BForm::DiagPower { .. } => None,
            BForm::QuadFormPower { matrix, .. } => Some(matrix.nrows()),
            BForm::Dense(t) => Some(t.dim()),
        }
    }

    /// Evaluates `B x^{m'}`.
    pub fn phi(&self, x: &DVector<f64>) -> Result<f64> {
        Ok(self.phi_dd(x)?.to_f64())
    }

    pub(crate) fn phi_dd(&self, x: &DVector<f64>) -> Result<Dd> {
        self.check_dim(x)?;
        Ok(match self {
            BForm::Identity2 => {
                let mut acc = CompensatedSum::default();
                for v in x.iter() {
                    acc.add_dd(two_prod(*v, *v));
                }
                acc.total_dd()
            }
            BForm::DiagPower { border } => {
                let mut acc = CompensatedSum::default();
                for v in x.iter() {
                    acc.add_dd(Dd::from(*v).powi(*border));
                }
                acc.total_dd()
            }
            BForm::QuadFormPower { border, matrix } => {
                // x^T D x with error-free products throughout; the objective
                // is scale invariant only up to the accuracy of phi, and the
                // curve search needs phi differences at the ulp level.
                let mut acc = CompensatedSum::default();
                for i in 0..x.len() {
                    let mut row = CompensatedSum::default();
                    for j in 0..x.len() {
                        row.add_dd(two_prod(matrix[(i, j)], x[j]));
                    }
                    acc.add_dd(row.total_dd().mul_f64(x[i]));
                }
                acc.total_dd().powi(*border / 2)
            }
            BForm::Dense(t) => t.txm_dd(x)?,
        })
    }

    /// The gauge `|x|_B = phi(x)^(1/m')`. Zero for the zero vector; a
    /// non-positive `phi` on a nonzero vector is an error because it means
    /// the form is not positive definite there.
    pub fn bnorm(&self, x: &DVector<f64>) -> Result<f64> {
        let value = self.phi(x)?;
        if value > 0.0 {
            Ok(match self.border() {
                2 => value.sqrt(),
                4 => value.sqrt().sqrt(),
                b => value.powf(1.0 / b as f64),
            })
        } else if x.iter().all(|v| *v == 0.0) {
            Ok(0.0)
        } else {
            Err(Error::NonPositiveForm(value))
        }
    }

    /// The vector `B x^{m'-1} = grad(phi) / m'`. Satisfies `x . bgrad(x) = phi(x)`.
    pub fn bgrad(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_dim(x)?;
        Ok(match self {
            BForm::Identity2 => x.clone(),
            BForm::DiagPower { border } => {
                x.map(|v| v.powi(*border as i32 - 1))
            }
            BForm::QuadFormPower { border, matrix } => {
                let dx = matrix * x;
                let q = x.dot(&dx);
                dx * q.powi(*border as i32 / 2 - 1)
            }
            BForm::Dense(t) => t.txm1(x)?,
        })
    }

    /// The matrix `B x^{m'-2} = hess(phi) / (m' (m'-1))`. Satisfies
    /// `bhess(x) * x = bgrad(x)`.
    pub fn bhess(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.check_dim(x)?;
        Ok(match self {
            BForm::Identity2 => DMatrix::identity(x.len(), x.len()),
            BForm::DiagPower { border } => {
                DMatrix::from_diagonal(&x.map(|v| v.powi(*border as i32 - 2)))
            }
            BForm::QuadFormPower { border, matrix } => {
                let p = *border as i32 / 2;
                let dx = matrix * x;
                let q = x.dot(&dx);
                if *border == 2 {
                    matrix.clone()
                } else {
                    let scale = 1.0 / (*border as f64 - 1.0);
                    let mut out = matrix * (q.powi(p - 1) * scale);
                    out += &dx * dx.transpose()
                        * ((*border as f64 - 2.0) * q.powi(p - 2) * scale);
                    out
                }
            }
            BForm::Dense(t) => t.txm2(x)?,
        })
    }

    /// Quadratic form `d^T (B x^{m'-2}) d` without materializing the matrix.
    pub fn bhess_quad(&self, x: &DVector<f64>, d: &DVector<f64>) -> Result<f64> {
        self.check_dim(x)?;
        self.check_dim(d)?;
        Ok(match self {
            BForm::Identity2 => d.norm_squared(),
            BForm::DiagPower { border } => x
                .iter()
                .zip(d.iter())
                .map(|(xv, dv)| xv.powi(*border as i32 - 2) * dv * dv)
                .sum(),
            BForm::QuadFormPower { border, matrix } => {
                let p = *border as i32 / 2;
                let dd = d.dot(&(matrix * d));
                if *border == 2 {
                    dd
                } else {
                    let dx = matrix * x;
                    let q = x.dot(&dx);
                    (q.powi(p - 1) * dd
                        + (*border as f64 - 2.0) * q.powi(p - 2) * dx.dot(d).powi(2))
                        / (*border as f64 - 1.0)
                }
            }
            BForm::Dense(t) => t.txm2_quad(x, d)?,
        })
    }

    /// `phi(x)^{num/den}` with exact integer-power paths where possible.
    ///
    /// Objective evaluations divide by this quantity and their comparisons
    /// run down to ulp-level differences, so `powf` rounding is avoided
    /// whenever the exponent reduces to integer powers and square roots.
    pub(crate) fn phi_pow(&self, phi: f64, num: usize) -> f64 {
        match self.phi_pow_dd(Dd::from(phi), num) {
            Some(p) => p.to_f64(),
            None => phi.powf(num as f64 / self.border() as f64),
        }
    }

    /// Double-double `phi^{num/den}` when the reduced denominator is a power
    /// of two; `None` otherwise (the caller falls back to `powf`).
    pub(crate) fn phi_pow_dd(&self, phi: Dd, num: usize) -> Option<Dd> {
        let den = self.border();
        let g = gcd(num, den);
        let (num, den) = (num / g, den / g);
        if !den.is_power_of_two() {
            return None;
        }
        let mut out = phi.powi(num);
        let mut d = den;
        while d > 1 {
            out = out.sqrt();
            d /= 2;
        }
        Some(out)
    }

    /// Scales a nonzero vector onto the feasible surface: `x / |x|_B`.
    pub fn normalize(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        if x.iter().all(|v| *v == 0.0) {
            return Err(Error::ZeroVector);
        }
        let nb = self.bnorm(x)?;
        Ok(x / nb)
    }

    /// The feasible curve point `(x + alpha d) / |x + alpha d|_B`.
    pub fn retract(&self, x: &DVector<f64>, d: &DVector<f64>, alpha: f64) -> Result<DVector<f64>> {
        self.normalize(&(x + d * alpha))
    }

    fn check_dim(&self, x: &DVector<f64>) -> Result<()> {
        if let Some(n) = self.dim() {
            if x.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: x.len(),
                });
            }
        }
        Ok(())
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn check_border(border: usize) -> Result<()> {
    if border < 2 || border % 2 != 0 {
        return Err(Error::InvalidSpec(format!(
            "constraint form order must be even and at least 2, got {border}"
        )));
    }
    Ok(())
}
