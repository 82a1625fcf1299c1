//! Boundary-aligned cross fields on planar triangle meshes.
//!
//! Singularities are prescribed as drilled holes carrying a degree constraint on
//! the representation field `u = c^4`. The crate covers mesh synthesis and MSH
//! loading, Crouzeix-Raviart and P1 assembly, the constrained Newton solver,
//! Ginzburg-Landau energy evaluators, corner-index classification, Poincare-Hopf
//! bookkeeping and the harmonic-conjugate `H` field.

pub mod assembly;
pub mod corners;
pub mod degree;
pub mod energy;
pub mod error;
pub mod export;
pub mod hfield;
pub mod job;
pub mod locate;
pub mod mesh;
pub mod solver;
pub mod sparse;
pub mod topology;

pub use assembly::{assemble, build_space, DofSpace, LinearSystem, SpaceKind};
pub use degree::{hole_constraint_matrix, measured_hole_degrees, winding_degree, ConstraintForm};
pub use error::{Error, Result};
pub use mesh::{boundary_analysis, drill_holes, parse_msh, preset_domain, CornerInfo, HoleSpec, Mesh, Point, Preset};
pub use solver::{dirichlet_energy, extract_crosses, solve, FieldU, SolveOptions, SolveReport};
