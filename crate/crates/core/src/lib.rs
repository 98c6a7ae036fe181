//! Weierstrass data, period problems and geometry for doubly periodic
//! minimal surfaces with Scherk ends.

pub mod curve;
pub mod families;
pub mod geometry;
pub mod numerics;
mod par;
pub mod quadrature;
pub mod solver;
pub mod store;
pub mod tables;

pub use par::set_max_threads;

use thiserror::Error;

/// Any failure surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Numerics(#[from] numerics::NumericsError),
    #[error(transparent)]
    Curve(#[from] curve::CurveError),
    #[error(transparent)]
    Quadrature(#[from] quadrature::QuadratureError),
    #[error(transparent)]
    Family(#[from] families::FamilyError),
    #[error(transparent)]
    Solve(#[from] solver::SolveError),
    #[error(transparent)]
    Geometry(#[from] geometry::GeometryError),
    #[error(transparent)]
    Store(#[from] store::StoreError),
}

impl Error {
    /// Whether the failure comes from the input rather than the numerics.
    pub fn is_config(&self) -> bool {
        use families::FamilyError as F;
        let family = |f: &F| {
            matches!(
                f,
                F::UnknownFamily(_) | F::ParameterCount { .. } | F::Ordering { .. } | F::NotApplicable(_) | F::UnknownParameter { .. } | F::NotSquare { .. }
            )
        };
        match self {
            Error::Numerics(_) => true,
            Error::Family(f) => family(f),
            Error::Solve(solver::SolveError::Family(f)) => family(f),
            Error::Solve(solver::SolveError::Options(_)) => true,
            Error::Store(store::StoreError::Family(f)) => family(f),
            Error::Store(_) => true,
            Error::Geometry(geometry::GeometryError::Family(f)) => family(f),
            _ => false,
        }
    }
}
