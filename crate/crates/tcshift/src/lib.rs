pub mod bdg_lattice;
pub mod error;
pub mod gl;
pub mod linalg;
pub mod model;
pub mod quad;
pub mod specfun;
pub mod ti_bcs;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
