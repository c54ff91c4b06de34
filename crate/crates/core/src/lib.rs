//! Pointwise adaptive kernel regression with Lepski's bandwidth selection
//! under martingale-increment noise.
//!
//! The crate is organized bottom-up:
//!
//! - [`sample`], [`grid`], [`estimator`]: sample paths, occupation times and
//!   the rectangular kernel estimator on a geometric bandwidth grid;
//! - [`lepski`]: the selection rule and a brute-force reference selector;
//! - [`rates`]: oracle bandwidths, the random and deterministic rates;
//! - [`stability`]: constants and Monte Carlo checks for regularized
//!   self-normalized martingales;
//! - [`dgp`]: data-generating processes and stopping rules.

pub mod design;
pub mod dgp;
pub mod error;
pub mod estimator;
pub mod grid;
pub mod lepski;
pub mod rates;
pub mod sample;
pub mod seed;
pub mod stability;

pub use error::{Error, Result};
pub use grid::{build_grid, psi, GridConfig, GridPoint, OccupationProfile};
pub use lepski::{brute_force_select, select_bandwidth, SelectionResult};
pub use sample::{RegressionFn, SamplePath};
