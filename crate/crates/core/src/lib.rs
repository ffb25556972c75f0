pub mod basis;
pub mod chains;
pub mod ensemble;
pub mod error;
pub mod evolution;
pub mod exec;
pub mod io;
pub mod linalg;
pub mod measurement;
pub mod observables;
pub mod sampling;
pub mod state;
pub mod table;

pub use error::{Error, Result};
