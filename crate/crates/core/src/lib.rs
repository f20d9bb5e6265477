//! Solvers for monotone generalized Nash equilibrium problems with shared
//! linear constraints.
//!
//! The inner solver is accelerated mirror-prox ([`amp`]) applied to a
//! penalized variational inequality. Two outer loops drive the penalties:
//! a quadratic penalty method ([`outer::ampqp_solve`]) and an augmented
//! Lagrangian method with safeguarded multipliers ([`outer::ampal_solve`]).
//!
//! ```
//! use ngnep::{library, outer};
//!
//! let spec = library::builtin("cournot-active").unwrap();
//! let problem = library::build_instance(&spec).unwrap();
//! let report = outer::ampal_solve(&problem, &outer::OuterConfig::default(), &[0.0, 0.0]).unwrap();
//! assert!((report.x_final.as_slice()[0] - 0.25).abs() < 1e-3);
//! ```

// NaN must fail positivity checks, so `!(x > 0.0)` is intended.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod amp;
pub mod diagnostics;
pub mod error;
pub mod harness;
pub mod library;
mod linalg;
pub mod model;
pub mod outer;
pub mod penalties;
pub mod problem_file;
pub mod sets;

pub use amp::{amp_solve, AmpSolution, ClosureVi, CompositeVi, StopRule, ViConstants};
pub use diagnostics::{kkt_residuals, KktResiduals};
pub use error::{Error, Result};
pub use library::{build_instance, known_solution, InstanceSpec};
pub use model::{BlockLayout, BlockVector, ConstraintGroup, NgnepProblem, Player};
pub use outer::{ampal_solve, ampqp_solve, Algorithm, OuterConfig, SolveReport, Termination};
pub use penalties::{PenaltyMode, PenaltyState};
pub use problem_file::ProblemSpec;
pub use sets::{ProductSet, SimpleSet};
