//! Eigenpairs of real symmetric tensors relative to a positive definite
//! constraint form, computed by a feasible conjugate gradient iteration.
//!
//! Given a symmetric tensor `A` of order `m` and an even-order positive
//! definite symmetric form `B`, a number `lambda` is an eigenvalue of `A`
//! relative to `B` when `A x^{m-1} = lambda B x^{m'-1}` for some `x` with
//! `B x^{m'} = 1`. The unit-sphere, diagonal-power and quadratic-form
//! constraints recover the classical Z-, H- and D-eigenpairs.
//!
//! The solver phrases the problem as minimizing (or maximizing) the
//! normalized form `(1/m) A x^m` on the constraint surface and walks it with
//! conjugate directions along the feasible curve
//! `x(alpha) = (x + alpha d) / |x + alpha d|_B`, so every iterate is feasible
//! and the eigenvalue estimates are monotone.
//!
//! ```
//! use beigen::{solve, BForm, Objective, Sense, SolveConfig, SymTensor};
//! use nalgebra::DVector;
//!
//! // A diagonal 4th-order tensor: the largest Z-eigenvalue on the unit
//! // sphere is its largest diagonal coefficient.
//! let tensor = SymTensor::dense_from_entries(
//!     4,
//!     3,
//!     (0..3).map(|i| (vec![i + 1; 4], (i + 1) as f64)),
//! )
//! .unwrap();
//! let objective = Objective::new(tensor, BForm::identity(), Sense::Maximize).unwrap();
//! let start = DVector::from_vec(vec![0.3, -0.5, 0.8]);
//! let result = solve(&objective, &start, &SolveConfig::default()).unwrap();
//! assert!(result.converged);
//! assert!((result.eigenpair.lambda - 3.0).abs() < 1e-6);
//! ```

mod bform;
mod dd;
mod error;
mod generate;
mod manifold;
mod oracle;
mod solver;
mod tensor;

pub use bform::BForm;
pub use error::{Error, Result};
pub use generate::{gen_bform, gen_tensor, random_feasible, BFamily, BGenSpec, GenSpec, TensorFamily};
pub use manifold::{projector, Objective, Sense, FEAS_TOL};
pub use oracle::{
    enumerate_n2, enumerate_n3, fd_check_gradient, fd_check_hessian, EigenSet, ENUM_RES_TOL,
};
pub use solver::{
    direction, initial_step, line_search, residual, solve, solve_observed, DeltaStrategy,
    EigenPair, IterateState, SolveConfig, SolveResult, TerminationReason, TraceRecord,
};
pub use tensor::{sorted_multi_indices, unique_entry_count, SortedIndices, SymTensor};
