// SPDX-License-Identifier: MIT OR Apache-2.0

//! Synthetic diagram datasets, linear probes and mean-replacement
//! interventions for locating diagram information inside vision-language
//! models.
//!
//! The pipeline runs end to end without a real model: [`mock`] produces
//! hidden states with known, injected label codes so probing and
//! intervention results can be checked against ground truth.

pub mod activations;
pub mod dataset;
pub mod error;
pub mod fsutil;
pub mod graph;
pub mod intervention;
pub mod metrics;
pub mod mock;
pub mod pipeline;
pub mod probe;
pub mod render;
pub mod seed;

pub use error::{Error, Result};
