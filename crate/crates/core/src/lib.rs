//! Jet-space symmetry toolkit: prolongations of vector fields on PDE
//! systems, μ-prolongations and their gauge theory, symmetry verdicts and
//! symmetry reduction.

pub mod error;
pub mod expr;
pub mod jet;
pub mod muform;
pub mod oracle;
pub mod reduce;
pub mod symcheck;
pub mod vfield;

pub use error::{Error, Result};
