//! Multi-temporal frame-stack fusion.
//!
//! Frames are enhanced by chains of per-frame operators ([`preprocess`]),
//! fused along time by z-projections ([`project`]), run over the full
//! video × sequence × projection grid ([`pipeline`]), and scored with
//! no-reference quality metrics ([`iqa`]). [`gtmetrics`] compares
//! segmentation ground truths and [`stats`] summarizes score tables.

pub mod config;
pub mod error;
pub mod gtmetrics;
pub mod iqa;
pub mod par;
pub mod pipeline;
pub mod preprocess;
pub mod project;
pub mod raster;
pub mod stackio;
pub mod stats;

pub use error::{Error, Result};
pub use raster::{Raster, Raster8};
