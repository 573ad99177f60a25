//! Search and certification library for the Belgian chocolate problem:
//! maximize `delta > 0` such that real stable `x`, `y` with
//! `deg(x) >= deg(y)` make `z = (s^2 - 2 delta s + 1) x + (s^2 - 1) y`
//! stable.
//!
//! The crate enumerates structured families of quasi-stable candidates
//! ("algebraic configurations"), turns each one into a square polynomial
//! system by coefficient matching, solves the systems by multistart Newton,
//! and finally perturbs the quasi-stable optima into certified stable
//! triples arbitrarily close to the limiting `delta`.

mod dd;
mod roots;

pub mod config;
pub mod error;
pub mod perturb;
pub mod poly;
pub mod rational;
pub mod solver;
pub mod stability;
pub mod system;

pub use error::{Error, Result};
pub use poly::Polynomial;
