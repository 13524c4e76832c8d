pub mod algebra;
pub mod analysis;
pub mod channel;
pub mod error;
pub mod io;
pub mod linalg;
pub mod separability;
pub mod spectral;
