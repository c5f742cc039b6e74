//! Time-series GAN toolkit.
//!
//! A small reverse-mode autodiff core ([`numcore`]) carries GRU/LSTM,
//! dense and 1-D convolutional networks ([`models`]). On top of those sit the
//! adversarial trainers (minimax GAN, weight-clipped WGAN, three-phase
//! TimeGAN) and supervised recurrent forecasters ([`training`]), an OHLCV
//! feature pipeline ([`data`]), descriptive and distributional statistics
//! ([`stats`]) and the RMSE/MAPE evaluation harness ([`eval`]).
//!
//! Batch-level work (Monte Carlo calibration, seed sweeps, perturbation
//! grids, large matrix products) runs on rayon when the `parallel` feature is
//! enabled and sequentially otherwise; both paths give bit-identical results.

pub mod data;
pub mod error;
pub mod eval;
pub mod models;
pub mod numcore;
pub mod par;
pub mod stats;
pub mod training;

pub use error::{Error, Result};
