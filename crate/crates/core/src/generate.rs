//! Generators for the benchmark tensor families and constraint forms.
//!
//! All randomness flows through seeded ChaCha8 streams, so equal seeds
//! produce bit-identical instances on every platform.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bform::BForm;
use crate::error::{Error, Result};
use crate::tensor::{sorted_multi_indices, SymTensor};

/// Benchmark tensor families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TensorFamily {
    /// A fixed 3rd-order, 3-dimensional symmetric tensor with four known
    /// attracting Z-eigenvalues; a standard small test case.
    Fixed33,
    /// `a[i1..im] = sin(i1 + ... + im)`, deterministic and dense.
    SinSum,
    /// One uniform `[-1, 1]` value per sorted multi-index.
    RandSym,
    /// Structured sum of per-index profile `g[i] = atan((-1)^i i/n)`.
    ArctanSum,
    /// Structured sum of a random profile `v` uniform in `[-1, 1]^n`.
    RandSum,
    /// A fixed 4th-order, 3-dimensional symmetric tensor with three known
    /// attracting H-eigenvalues.
    Fixed43,
}

/// A tensor generation request. `order`/`dim` may be left zero for the fixed
/// families, which force their own shape.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    pub family: TensorFamily,
    #[serde(default)]
    pub order: usize,
    #[serde(default)]
    pub dim: usize,
    #[serde(default)]
    pub seed: u64,
}

impl GenSpec {
    pub fn new(family: TensorFamily, order: usize, dim: usize, seed: u64) -> Self {
        Self {
            family,
            order,
            dim,
            seed,
        }
    }
}

/// Constraint form families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum BFamily {
    /// Unit sphere constraint (Z-eigenpairs).
    Identity,
    /// Diagonal power form of order `border` (H-eigenpairs when `border`
    /// matches the tensor order).
    DiagPower { border: usize },
    /// `(x^T D x)^{border/2}` with `D = 0.1 I + C C^T`, `C` an `n x (n-1)`
    /// matrix of uniform `[-1, 1]` entries (D-eigenpairs).
    RandQuad {
        border: usize,
        #[serde(default)]
        seed: u64,
    },
    /// Dense diagonally dominant form `s I + C` where `C` has zero diagonal,
    /// off-diagonal unique entries uniform in `[-1, 1]`, and
    /// `s = 1.01 max_i (|C| e^{border-1})_i`.
    DiagDom {
        border: usize,
        #[serde(default)]
        seed: u64,
    },
}

/// A constraint form generation request.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BGenSpec {
    #[serde(flatten)]
    pub family: BFamily,
    #[serde(default)]
    pub dim: usize,
}

impl BGenSpec {
    pub fn new(family: BFamily, dim: usize) -> Self {
        Self { family, dim }
    }
}

/// Builds a tensor instance from a spec.
pub fn gen_tensor(spec: &GenSpec) -> Result<SymTensor> {
    let (order, dim) = resolve_shape(spec)?;
    match spec.family {
        TensorFamily::Fixed33 => SymTensor::dense_from_entries(3, 3, FIXED33.iter().cloned().map(|(i, v)| (i.to_vec(), v))),
        TensorFamily::Fixed43 => SymTensor::dense_from_entries(4, 3, FIXED43.iter().cloned().map(|(i, v)| (i.to_vec(), v))),
        TensorFamily::SinSum => SymTensor::dense_from_entries(
            order,
            dim,
            sorted_multi_indices(order, dim).map(|idx| {
                let s: usize = idx.iter().sum();
                let v = (s as f64).sin();
                (idx, v)
            }),
        ),
        TensorFamily::RandSym => {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            SymTensor::dense_from_entries(
                order,
                dim,
                sorted_multi_indices(order, dim).map(|idx| (idx, rng.random_range(-1.0..=1.0))),
            )
        }
        TensorFamily::ArctanSum => {
            let g = DVector::from_fn(dim, |i, _| {
                let i1 = (i + 1) as f64;
                let sign = if (i + 1) % 2 == 0 { 1.0 } else { -1.0 };
                (sign * i1 / dim as f64).atan()
            });
            SymTensor::sum_unary(order, g)
        }
        TensorFamily::RandSum => {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            let g = DVector::from_fn(dim, |_, _| rng.random_range(-1.0..=1.0));
            SymTensor::sum_unary(order, g)
        }
    }
}

/// Builds a constraint form instance from a spec.
pub fn gen_bform(spec: &BGenSpec) -> Result<BForm> {
    match spec.family {
        BFamily::Identity => Ok(BForm::identity()),
        BFamily::DiagPower { border } => BForm::diag_power(border),
        BFamily::RandQuad { border, seed } => {
            let n = spec.dim;
            if n == 0 {
                return Err(Error::InvalidSpec("randquad requires a positive dimension".into()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut c = DMatrix::zeros(n, n.saturating_sub(1));
            for i in 0..n {
                for j in 0..n - 1 {
                    c[(i, j)] = rng.random_range(-1.0..=1.0);
                }
            }
            let d = DMatrix::identity(n, n) * 0.1 + &c * c.transpose();
            BForm::quad_form_power(border, d)
        }
        BFamily::DiagDom { border, seed } => {
            let n = spec.dim;
            if n < 2 {
                return Err(Error::InvalidSpec(
                    "diagdom requires dimension at least 2".into(),
                ));
            }
            if border < 2 || border % 2 != 0 {
                return Err(Error::InvalidSpec(format!(
                    "diagdom order must be even and at least 2, got {border}"
                )));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let off_diag: Vec<(Vec<usize>, f64)> = sorted_multi_indices(border, n)
                .filter(|idx| idx.iter().any(|&i| i != idx[0]))
                .map(|idx| (idx, rng.random_range(-1.0..=1.0)))
                .collect();

            // Row sums of |C| e^{border-1} via the same combinatorial
            // weights the contraction kernels use, with x = ones.
            let c_abs = SymTensor::dense_from_entries(
                border,
                n,
                off_diag.iter().map(|(i, v)| (i.clone(), v.abs())),
            )?;
            let rows = c_abs.txm1(&DVector::from_element(n, 1.0))?;
            let s = 1.01 * rows.max();

            let entries = (1..=n)
                .map(|i| (vec![i; border], s))
                .chain(off_diag)
                .collect::<Vec<_>>();
            BForm::dense(SymTensor::dense_from_entries(border, n, entries)?)
        }
    }
}

/// Draws a uniform `[-1, 1]^n` vector and scales it onto the feasible
/// surface of `b`.
pub fn random_feasible(b: &BForm, dim: usize, rng: &mut impl Rng) -> Result<DVector<f64>> {
    loop {
        let u = DVector::from_fn(dim, |_, _| rng.random_range(-1.0..=1.0));
        match b.normalize(&u) {
            Ok(x) => return Ok(x),
            Err(Error::ZeroVector) => continue,
            Err(e) => return Err(e),
        }
    }
}

fn resolve_shape(spec: &GenSpec) -> Result<(usize, usize)> {
    let forced = match spec.family {
        TensorFamily::Fixed33 => Some((3, 3)),
        TensorFamily::Fixed43 => Some((4, 3)),
        _ => None,
    };
    match forced {
        Some((m, n)) => {
            let order_ok = spec.order == 0 || spec.order == m;
            let dim_ok = spec.dim == 0 || spec.dim == n;
            if !order_ok || !dim_ok {
                return Err(Error::InvalidSpec(format!(
                    "{:?} is a fixed {m}x{n} instance; got order {}, dim {}",
                    spec.family, spec.order, spec.dim
                )));
            }
            Ok((m, n))
        }
        None => {
            if spec.order < 2 || spec.dim == 0 {
                return Err(Error::InvalidSpec(format!(
                    "{:?} requires order >= 2 and dim >= 1; got order {}, dim {}",
                    spec.family, spec.order, spec.dim
                )));
            }
            Ok((spec.order, spec.dim))
        }
    }
}

const FIXED33: [([usize; 3], f64); 10] = [
    ([1, 1, 1], -0.1281),
    ([1, 1, 2], 0.0516),
    ([1, 1, 3], -0.0954),
    ([1, 2, 2], -0.1958),
    ([1, 2, 3], -0.1790),
    ([1, 3, 3], -0.2676),
    ([2, 2, 2], 0.3251),
    ([2, 2, 3], 0.2513),
    ([2, 3, 3], 0.1773),
    ([3, 3, 3], 0.0338),
];

const FIXED43: [([usize; 4], f64); 15] = [
    ([1, 1, 1, 1], 0.2883),
    ([1, 1, 1, 2], -0.0031),
    ([1, 1, 1, 3], 0.1973),
    ([1, 1, 2, 2], -0.2485),
    ([1, 1, 2, 3], -0.2939),
    ([1, 1, 3, 3], 0.3847),
    ([1, 2, 2, 2], 0.2972),
    ([1, 2, 2, 3], 0.1862),
    ([1, 2, 3, 3], 0.0919),
    ([1, 3, 3, 3], -0.3619),
    ([2, 2, 2, 2], 0.1241),
    ([2, 2, 2, 3], -0.3420),
    ([2, 2, 3, 3], 0.2127),
    ([2, 3, 3, 3], 0.2727),
    ([3, 3, 3, 3], -0.3054),
];
