//! Relative log expression (RLE) diagnostics for sample × feature matrices.
//!
//! The crate covers the whole workflow:
//!
//! * [`matrix`] / [`io`]: the [`ExpressionMatrix`] model and delimited-text ingestion.
//! * [`rle`]: per-feature medians, RLE deviations and per-sample boxplot summaries.
//! * [`simulate`]: synthetic matrices with additive and multiplicative sample effects.
//! * [`decompose`]: double-centering, SVD partition into rank-1 interaction terms
//!   and the corrected series `Y′_p`.
//! * [`render`]: deterministic SVG boxplots and small-multiple panels.
//! * [`cli`]: the `rle` command line front end.
//!
//! Data-parallel loops run on rayon when the `parallel` feature is enabled (the
//! default) and fall back to plain iterators otherwise. Results never depend on
//! the schedule.

pub mod cli;
pub mod decompose;
pub mod defaults;
pub mod error;
pub mod io;
pub mod matrix;
mod par;
pub mod render;
pub mod rle;
pub mod simulate;
pub mod svd;

pub use decompose::{decompose, AdditiveRemoval, DecomposeOptions, DecompositionResult};
pub use error::{Error, Result};
pub use matrix::ExpressionMatrix;
pub use rle::{BoxplotOptions, BoxplotStats, DeviationMatrix, QuantileMethod};
pub use simulate::{Batch, SimulatedDataset, SimulationConfig};
