//! Optimal dynamic reinsurance under a recursive cost-of-capital criterion.
//!
//! The insurer's surplus evolves as `X_{n+1} = X_n - f_n(Y_{n+1}) - pi(f_n) + Z_{n+1}`
//! and each period's treaty `f_n` is chosen to minimize a monetary risk measure of
//! the period loss plus the discounted future cost. Everything operates on
//! finitely supported distributions, so risk measures and premiums are exact
//! finite sums and the Bellman operators act on gridded value functions.

pub mod cli;
pub mod distortion;
pub mod distributions;
pub mod dp;
pub mod error;
pub mod oracles;
pub mod premiums;
pub mod risk;
pub mod sim;
pub mod treaties;

pub use error::{Error, Result};
