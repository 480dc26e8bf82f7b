//! Finite-element elastodynamics of thin anisotropic membranes.
//!
//! The membrane is a triangulated plane region whose points carry three
//! displacement components `(u, v, w)`, so it can move and deform in 3D while
//! being meshed only in 2D. Linear triangles, consistent mass, a general
//! 21-constant elasticity matrix, Newmark time integration with a once-factored
//! iteration matrix, and a refinement study harness for measuring the
//! empirical convergence order are provided.
//!
//! All numerical kernels are generic over [`Scalar`] (`f32` or `f64`); the
//! `*64` aliases below fix the double precision instantiation used by the
//! configuration files and the command line driver.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod assembly;
pub mod config;
pub mod convergence;
pub mod element;
pub mod integrator;
pub mod io;
pub mod material;
pub mod mesh;
pub mod ordering;
pub mod scalar;
pub mod scenarios;
pub mod sparse;

pub use assembly::{Constraint, GlobalSystem, LoadModel, Materials};
pub use element::{BMatrix, ElementMatrices, ElementResponse, ShapeCoeffs};
pub use integrator::{Newmark, NewmarkParams, State};
pub use material::{ElasticMatrix, MaterialParams};
pub use mesh::{Mesh, StructuredSpec};
pub use scenarios::{Scenario, Simulation};
pub use scalar::Scalar;
pub use sparse::{CsrMatrix, SparseLu};

pub type Mesh64 = Mesh<f64>;
pub type Mesh32 = Mesh<f32>;
pub type StructuredSpec64 = StructuredSpec<f64>;
pub type ElasticMatrix64 = ElasticMatrix<f64>;
pub type ElasticMatrix32 = ElasticMatrix<f32>;
pub type MaterialParams64 = MaterialParams<f64>;
pub type MaterialParams32 = MaterialParams<f32>;
pub type GlobalSystem64 = GlobalSystem<f64>;
pub type GlobalSystem32 = GlobalSystem<f32>;
pub type State64 = State<f64>;
pub type NewmarkParams64 = NewmarkParams<f64>;



pub type Scenario64 = scenarios::Scenario<f64>;
pub type Simulation64 = scenarios::Simulation<f64>;
pub type Simulation32 = scenarios::Simulation<f32>;
pub type StudySpec64 = convergence::StudySpec<f64>;
pub type StudyResult64 = convergence::StudyResult<f64>;
