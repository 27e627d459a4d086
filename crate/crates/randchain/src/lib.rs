//! Simulation and numerical verification toolkit for linear dynamics
//! `x(k+1) = W(k) x(k)` driven by chains of random stochastic matrices:
//! consensus and ergodicity testing, cut-flow accumulation analysis,
//! feedback-property checking, martingale audits, and randomized inequality
//! sweeps — all bit-reproducible from a master seed.

pub mod error;
pub mod flow;
pub mod linalg;
pub mod models;
pub mod properties;
pub mod rng;
pub mod sim;
pub mod verify;

pub use error::{Error, Result};
pub use linalg::{Cut, StochasticMatrix, StochasticVector};
pub use models::ChainModel;
pub use rng::StreamKey;
