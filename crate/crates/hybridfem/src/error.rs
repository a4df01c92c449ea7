//! Crate-level error type aggregating the per-module errors.

use thiserror::Error;

use crate::assembly::AssemblyError;
use crate::geometry::GeometryError;
use crate::mesh::MeshError;
use crate::problems::HarnessError;
use crate::refelem::RefElemError;
use crate::sparse::SolveError;
use crate::spaces::SpaceError;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    RefElem(#[from] RefElemError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Harness(#[from] HarnessError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}
