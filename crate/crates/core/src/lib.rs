//! Numerical verification of the geometry of quantum state space.
//!
//! The crate implements, at finite dimension and on finite grids, the chain of
//! identities linking four structures:
//!
//! - the Kahler triple `(J, g, omega)` on projective Hilbert space in chart
//!   coordinates ([`hilbert`], [`kahler`]);
//! - observables as Kahlerian functions, with Poisson/Riemann brackets, star
//!   products, flows, and uncertainty relations ([`observable`]);
//! - discrete and continuous Fisher information ([`fisher`]);
//! - the Madelung split of the Schrodinger equation and the Bohmian quantum
//!   potential ([`madelung`], [`evolve`]);
//! - Weyl-geometry curvature of a gauge field built from a probability density
//!   ([`weyl`]).
//!
//! Every nontrivial identity is evaluated along two independent routes
//! (operator algebra vs chart geometry, closed form vs tensor chain, analytic
//! vs finite difference) and the residuals are exposed so a verification
//! harness can assert them.

pub mod error;
pub mod evolve;
pub mod fisher;
pub mod grid;
pub mod hilbert;
pub mod kahler;
pub mod linalg;
pub mod madelung;
pub mod observable;
pub mod weyl;

pub use error::{Error, Result};
pub use evolve::{EvolutionResult, Scheme, Snapshot};
pub use fisher::{DensityGrid, ParametricFamily, ProbabilityVector};
pub use grid::{Boundary, ComplexGridField, Grid, ScalarField};
pub use hilbert::{ChartPoint, ChartSelector, HermitianOperator, StateVector};
pub use kahler::TangentVector;
pub use madelung::{MadelungPair, Wavefield};
pub use weyl::{TensorField, WeylManifold};

/// Default value of the configuration scalar `nu` (Planck's constant).
///
/// The bracket algebra and the flow generators carry `nu` explicitly; all
/// desk-scale verification runs use natural units `nu = hbar = 1`.
pub const DEFAULT_NU: f64 = 1.0;

/// Complex double, the scalar type of every Hilbert-space quantity here.
pub type C64 = num_complex::Complex64;
