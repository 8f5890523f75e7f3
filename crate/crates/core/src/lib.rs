//! Neural precomputed radiance transfer: CGA motor encoding, SH lighting,
//! a ground-truth transfer oracle and an MLP that learns it.

pub mod bench;
pub mod bundle;
pub mod cga;
pub mod dataset;
pub mod error;
pub mod lightprobe;
pub mod mesh_io;
pub mod neural;
pub mod parallel;
pub mod prt_oracle;
pub mod sh;
pub mod shading;
pub mod textio;

pub use error::{Error, Result};
