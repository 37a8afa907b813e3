//! Implicit slices of a parametric H, nonlinear companions, grid coverage
//! checks, the pinned-distance demo and a finite Erdős obstruction.

mod distance;
mod erdos;
mod expr;
mod family;
mod nonlinear;
mod slice;

pub use distance::{pinned_distance_demo, DistanceDemoConfig, DistanceReport};
pub use erdos::{erdos_obstruction, ErdosReport, MapWitness, ObstructionSet};
pub use expr::{Env, Expr, ExprError, Func, Var};
pub use family::{HFamily, HSpec};
pub use nonlinear::{
    nonlinear_companion, verify_h_interior, verify_point, GridFailure, HInteriorReport, ImageTree, NonlinearCompanion,
    Witness,
};
pub use slice::{derivative_bound, implicit_slice, DerivativeBound, SliceSolution, SolverOptions};

use crate::cantor1d::TreeError;
use crate::containment1d::ContainmentError;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ApplicationsError {
    #[error("no sign change of H - c across the y-domain")]
    NoBracket,
    #[error("solver did not converge in {0} iterations")]
    NoConvergence(usize),
    #[error("sign of {0} is not definite on the boxes")]
    SignNotDefinite(&'static str),
    #[error("level {n} exceeds the depth {depth} of K1")]
    LevelOutOfRange { n: usize, depth: usize },
    #[error("implicit slice cannot be enclosed: {0}")]
    SliceUndefined(String),
    #[error("slice image {0} leaves the y-domain")]
    HullOutsideDomain(String),
    #[error("map {index} (lambda {lambda}, t {t}) is out of slack: {reason}")]
    FamilyOutOfSlack { index: usize, lambda: String, t: String, reason: String },
    #[error("residual {residual} exceeds tolerance {tol}")]
    ResidualTooLarge { residual: f64, tol: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Containment(#[from] ContainmentError),
    #[error(transparent)]
    Tree(#[from] TreeError),
}
