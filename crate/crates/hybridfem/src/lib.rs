//! Continuous low-order finite element spaces on hybrid non-conforming
//! hexahedral-tetrahedral meshes.
//!
//! A hybrid mesh mixes tri-linear hexahedra with tetrahedra and allows one
//! quadrilateral hexahedron face to be covered by two tetrahedron faces split
//! along a face diagonal. This crate builds:
//!
//! - the combinatorial mesh with validation of the supported junction types
//!   ([`mesh`]),
//! - per-cell geometric mappings, tri-affine on hexahedra and quadratic on
//!   tetrahedra, with the diagonal edge node placed at the quad face center so
//!   the geometry stays watertight ([`geometry`]),
//! - the continuous function spaces `Hyb1` and `Hyb12` (plus `Q1`, `P1` and
//!   the unconstrained `DHyb12`) as a prolongation operator from free degrees
//!   of freedom to raw nodal values ([`spaces`]),
//! - Galerkin assembly for Poisson and linear elasticity with a conjugate
//!   gradient solver ([`assembly`], [`sparse`]),
//! - a problem harness with perturbed-cube mesh generation, manufactured
//!   solutions and convergence studies ([`problems`]).
//!
//! The full pipeline on a generated mesh:
//!
//! ```
//! use hybridfem::assembly::QuadratureSpec;
//! use hybridfem::geometry::MappingMode;
//! use hybridfem::problems::*;
//! use hybridfem::sparse::CgOptions;
//! use hybridfem::spaces::SpaceKind;
//!
//! let spec = MeshGenSpec::new(4, 0.10, 0.20, 7, MeshMode::Hybrid);
//! let mesh = generate_mesh(&spec).unwrap();
//! let problem = manufactured_problem(ProblemKind::PoissonSin, (1.0, 1.0));
//! let out = solve_problem(
//!     mesh,
//!     SpaceKind::Hyb1,
//!     &problem,
//!     MappingMode::Quadratic,
//!     QuadratureSpec::default(),
//!     CgOptions::default(),
//! )
//! .unwrap();
//! assert_eq!(out.dof_count, 125); // one dof per mesh vertex
//! assert!(out.l2_rel_error < 0.15);
//! ```

// Indexed loops over small fixed-size kernels read better than iterator
// chains in the element-integration code.
#![allow(clippy::needless_range_loop)]

pub mod assembly;
pub mod error;
pub mod geometry;
pub mod linalg;
pub mod mesh;
pub mod problems;
pub mod refelem;
pub mod sparse;
pub mod spaces;
pub mod vtk;

pub use error::Error;
