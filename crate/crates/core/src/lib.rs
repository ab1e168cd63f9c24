//! Operator-valued free probability over `A = M_k(C)`.

pub mod algebra;
pub mod converse;
pub mod cpmaps;
pub mod error;
pub mod fock;
pub mod freeprod;
pub mod io;
pub mod ncpart;
pub mod ovdist;
pub mod sample;

pub use error::{Error, Result};
