pub mod channels;
pub mod discrimination;
pub mod error;
pub mod fidelity;
pub mod io;
pub mod linalg;
pub mod optim;
pub mod oracles;
pub mod qec;
pub mod random;
pub mod recovery;

pub use error::{Error, Result};
