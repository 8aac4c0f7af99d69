//! Iris recognition toolkit.
//!
//! Pipeline: [`localization`] finds the pupil and iris circles, [`normalization`]
//! unwraps the annulus into a fixed polar rectangle, [`features`] turns it into
//! regional uniform-LBP histograms plus global intensity statistics, and [`lvq`]
//! classifies feature vectors with a majority-voting ensemble of LVQ1 codebooks.
//! [`pipeline`] wires the stages to datasets on disk and backs the `iris` CLI.

pub mod dataset;
pub mod error;
pub mod features;
pub mod localization;
pub mod lvq;
pub mod normalization;
pub mod pipeline;
pub mod raster;
pub mod synth;

pub use error::{Error, Result};
