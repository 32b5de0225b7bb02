//! Exact computation of ex-ante envy-free and Pareto-optimal allocation
//! lotteries for fair division with partition-based utilities.
//!
//! Everything on the core path uses exact rational arithmetic:
//!
//! * [`instance`]: instances, lotteries, expected utilities, wire format.
//! * [`ratlp`]: exact two-phase simplex with Bland's rule.
//! * [`envy`]: envy graphs, the separation constant rho, weight synthesis.
//! * [`solver`]: weighted-sum LP, fixed-point iteration, the
//!   constant-agent hull algorithm and welfare maximization.
//! * [`verify`]: envy-freeness, Pareto dominance and welfare checks.
//! * [`bvn`]: Birkhoff–von Neumann decomposition and seeded sampling.
//! * [`x3c`]: the Exact-Cover-by-3-Sets hardness instance generator.

pub mod bvn;
pub mod cli;
pub mod envy;
pub mod error;
pub mod instance;
pub mod ratlp;
pub mod solver;
pub mod verify;
pub mod x3c;

mod assign;
mod perm;

pub use error::{Error, Result};
pub use instance::{Instance, Lottery, Rational};
