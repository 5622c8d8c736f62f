//! Sublaplacians on Heisenberg manifolds: hypoellipticity criteria from the
//! Levi form, model heat kernels, Weyl-law constants, and a grid oracle on
//! the Heisenberg nilmanifold that checks those constants numerically.
//!
//! The layers build on each other. [`levi`] decides when a model operator
//! `−Σ X_j² − iμX₀` is hypoelliptic; [`mehler`] and [`plancherel`] evaluate
//! its heat kernel at the origin by two independent routes; [`weyl`] turns
//! those values into eigenvalue-counting constants; [`nil`] counts actual
//! eigenvalues on `Γ\H³`. Normalization choices are collected in
//! [`conventions`].

pub mod conventions;
pub mod coords;
pub mod eigen;
pub mod error;
pub mod levi;
pub mod mehler;
pub mod nil;
pub mod plancherel;
pub mod quad;
pub mod special;
pub mod weyl;

pub use conventions::{ConventionsLedger, PrefactorStatus};
pub use coords::{dilation_norm, group_multiply, model_fields, GroupPoint};
pub use error::{Error, Result};
pub use levi::{condition_x, condition_y, sublaplacian_condition, GeometryParams, LeviForm};
pub use mehler::{heat_kernel_fs, symbol_inverse_q, HeatQuery};
pub use nil::{build_operator, fit_counting, lowest_eigenvalues, NilGrid};
pub use plancherel::{heat_value_at_origin, rockland_scan, ModelOperatorSpec};
pub use weyl::{gover_graham_constant, nu, sublaplacian_weyl, WeylRecord};
