pub mod bellman;
pub mod circle;
pub mod cli;
pub mod config;
pub mod ergopt;
pub mod error;
pub mod io;
pub mod potentials;
pub mod skew;
pub mod srb;
pub mod verify;

pub use error::{Error, Result};
