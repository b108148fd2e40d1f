//! Stinespring dilations of completely positive maps on Hilbert C*-modules
//! over finite-dimensional C*-algebras, their group-covariant versions, and
//! the induced maps on finite-group crossed products.
//!
//! Every construction comes with a residual certificate: identities that hold
//! in exact arithmetic are recomputed numerically and reported as relative
//! residuals, and every rank decision records its singular-value profile.

pub mod cpmaps;
pub mod crossed;
pub mod cstar;
pub mod error;
pub mod hilbmod;
pub mod numkernel;
pub mod rng;
pub mod scenario;
pub mod stinespring;

pub use error::{Error, Result};
