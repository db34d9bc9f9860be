//! Kernel quantile regression and prediction intervals.
//!
//! Model constructors ([`models`]) fit SVQR through its dual QP, sparse
//! SVQR through a linear program, LS-SVR through a bordered linear system,
//! and Tube-loss interval pairs by subgradient descent. [`interval`] turns
//! them into prediction intervals with hyperparameter search, and
//! [`conformal`], [`feature_select`] and [`forecast`] build on those.

pub mod conformal;
pub mod data;
pub mod error;
pub mod feature_select;
pub mod forecast;
pub mod generators;
pub mod interval;
pub mod kernel;
pub mod loss;
pub mod metrics;
pub mod models;
pub mod par;
pub mod solvers;
pub mod stats;

pub use data::Dataset;
pub use error::{Error, Result};
pub use kernel::{KernelFamily, KernelSpec};
pub use models::{FitOptions, FitReport, KernelModel};
pub use par::Execution;
