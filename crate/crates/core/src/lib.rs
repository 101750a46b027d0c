pub mod error;
pub mod grid;
pub mod numerics;
pub mod weights_seq;

pub use error::{Error, Result};
pub mod assoc;
pub mod subord;
pub mod ultrapoly;
pub mod analytic_weights;
pub mod laplace;
pub mod config;
pub mod suite;
