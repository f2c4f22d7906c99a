//! Photon-statistics simulator for quantum superresolution imaging.
//!
//! The crate computes exact photon-number distributions for arbitrary
//! mixtures of coherent and thermal light, trains a small feedforward
//! classifier to identify the statistics of a light field from empirical
//! photon-number histograms, simulates raster-scanned imaging of multi-source
//! scenes, and estimates source separations from classified pixel maps,
//! beating the plain intensity-fit baseline below the diffraction limit.
//!
//! Pipeline, bottom to top:
//!
//! * [`photon_stats`] — closed-form distributions for one indistinguishable
//!   group of sources, discrete convolution across distinguishable modes,
//!   moments and `g2`, plus a quadrature oracle used by tests.
//! * [`sampling`] — seeded photon-counting simulation: histograms and
//!   21-entry feature vectors.
//! * [`classifier`] — the 21-10-5 sigmoid/softmax network with scaled
//!   conjugate gradient training and dataset generation.
//! * [`fitting`] — constrained least-squares decomposition of a measured
//!   distribution into up to three distinguishable modes.
//! * [`imaging`] — scenes, point-spread functions, per-pixel simulation and
//!   classification, the disk fit on class maps, the direct Gaussian-fit
//!   baseline, and the separation sweep.
//! * [`io`] — deterministic readers/writers for the CSV/PGM/JSON artifacts.
//!
//! Everything is deterministic given explicit 64-bit seeds; no global RNG
//! state, no threads.

pub mod classifier;
pub mod error;
pub mod fitting;
pub mod imaging;
pub mod io;
pub mod photon_stats;
pub mod sampling;

pub use error::{Error, Result};
