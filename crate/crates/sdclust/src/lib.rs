//! Clustering of financial return series by stochastic-dominance test
//! statistics, with dominance-directed cluster selection and portfolio
//! evaluation utilities.

pub mod bootstrap;
pub mod cli;
pub mod clustering;
pub mod commands;
pub mod config;
pub mod error;
pub mod heatmap;
pub mod hierarchical;
pub mod kmeans;
pub mod market_data;
pub mod matrix;
pub mod portfolio;
pub mod ranking;
pub mod sdstat;
pub mod seed;
pub mod synthetic;
pub mod validity;

pub use error::{Result, SdError};
