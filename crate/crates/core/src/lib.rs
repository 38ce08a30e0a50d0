//! H∞ state estimation for linear systems with bounded noise, with the
//! filter gain learned by ternary policy iteration.

pub mod approx;
pub mod bench;
pub mod checkpoint;
pub mod config;
pub mod error;
pub mod game;
pub mod linalg;
pub mod plant;
pub mod tpi;

pub use error::{Error, Result};
