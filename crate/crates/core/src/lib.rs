//! Terrain recognition from three-channel spoke vibration records.
//!
//! The pipeline: [`signal`] windowing and band-pass filtering, per-window
//! [`features`], the [`eigen`] signature of the channel covariance, a
//! one-vs-one SVM in [`classifier`], and nearest-terrain ranking in
//! [`similarity`]. [`synthgen`] produces seeded synthetic records and
//! [`formats`] reads and writes every on-disk artefact.

pub mod classifier;
pub mod eigen;
pub mod error;
pub mod features;
pub mod formats;
pub mod linalg;
pub mod rng;
pub mod signal;
pub mod similarity;
pub mod synthgen;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/signals.md")]
    mod signals {}
    #[doc = include_str!("../../../book/src/features.md")]
    mod features {}
    #[doc = include_str!("../../../book/src/eigen.md")]
    mod eigen {}
    #[doc = include_str!("../../../book/src/classification.md")]
    mod classification {}
    #[doc = include_str!("../../../book/src/similarity.md")]
    mod similarity {}
    #[doc = include_str!("../../../book/src/synthetic.md")]
    mod synthetic {}
    #[doc = include_str!("../../../book/src/formats.md")]
    mod formats {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
