//! Numerical analysis of the time-dependent Eikonal equation
//! `u_t + |grad u| = 0`, `u = g` at `t = 0`.
//!
//! The solution is always evaluated from the Hopf-Lax representation
//! `u(x, t) = min over the closed ball B_t(x) of g` (no time stepping,
//! no fast marching). On top of that single primitive the crate resolves:
//!
//! * minimizer sets `L(x, t)` and the induced gradient structure of `u`
//!   ([`hopflax`]);
//! * characteristics, their first and second termination times, computed by
//!   two independent methods that cross-check each other
//!   ([`characteristics`]);
//! * the characteristic Jacobian `I + t A(y0)`, conjugate times, transported
//!   Hessians and the blow-up diagnostic ([`conjugate`]);
//! * the stratification of space-time points into smooth points,
//!   nondifferentiable points, termination points with unique minimizer, and
//!   the zero-gradient contact region ([`classify`]);
//! * grid scans of space-time boxes with connected-component labeling of the
//!   singular strata and finite-difference smoothness probes ([`sigmap`]).

pub mod characteristics;
pub mod classify;
pub mod conjugate;
pub mod error;
pub mod field;
pub mod geometry;
pub mod hopflax;
pub mod optim;
pub mod sigmap;
pub mod tol;

pub use error::{EikonalError, Result};
pub use field::{
    catalog, half_space_side, level_side, lookup, AnalyticField, FieldCatalogEntry, FieldRef,
    HalfSpaceSide, LevelSide, SampledField, ScalarField, Smoothness,
};
pub use geometry::BoundsBox;
pub use hopflax::SpaceTimePoint;
pub use tol::Tolerances;

/// Version tag embedded in every emitted JSON/CSV artifact.
pub const SCHEMA_VERSION: &str = "eikonal-report/1";
