//! Federated short-term load forecasting with differential privacy and
//! secure aggregation.
//!
//! The crate is organised bottom-up:
//!
//! * [`loaddata`] ingests smart-meter CSV files, cleans and scales them and
//!   cuts supervised windows; it also generates synthetic households.
//! * [`metrics`] holds the MSE / RMSE / MAE / MAPE error metrics.
//! * [`nn`] is a small from-scratch network library (dense, LSTM, conv-1D)
//!   with backpropagation through time and Adam.
//! * [`federation`] runs Fed-Avg and Fed-SGD over simulated clients.
//! * [`clustering`] bundles clients by Pearson correlation.
//! * [`dp`] clips and noises model updates; [`accountant`] tracks the
//!   resulting Rényi-DP budget.
//! * [`secagg`] implements masked, dropout-tolerant secure aggregation on
//!   top of Shamir secret sharing.
//! * [`scenarios`] wires everything into configurable experiments.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod accountant;
pub mod clustering;
pub mod dp;
pub mod error;
pub mod federation;
pub mod loaddata;
pub mod metrics;
pub mod nn;
pub mod scenarios;
pub mod secagg;
pub mod seed;

pub use error::{Error, Result};
