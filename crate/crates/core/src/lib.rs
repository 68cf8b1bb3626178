//! Box-constrained distributed optimal control of the Allen-Cahn equation,
//! discretized by dG(0) in time and continuous P1 elements on triangles.

pub mod analysis;
pub mod assembly;
pub mod cli;
pub mod config;
pub mod discretization;
pub mod error;
pub mod io;
pub mod mesh;
pub mod objective;
pub mod optimizer;
pub mod quadrature;
pub mod sparse;
pub mod spectral;
pub mod state;

pub use discretization::{Bounds, ControlField, Data, DgField, ProblemConfig, TimeGrid};
pub use error::{Error, Result};
pub use mesh::{Mesh, Point, Rect};
pub use state::{Forcing, Problem};
