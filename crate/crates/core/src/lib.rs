//! Core of the sonda training platform.
//!
//! Training plans are declarative JSON documents whose loops are driven by
//! CSV condition tables. Expanded trials run through a sans-I/O state
//! machine ([`runtime::Session`]) that emits [`runtime::Directive`]s for a
//! host to render and produces [`runtime::TrialRecord`]s. Records are
//! persisted by [`store::Store`] and aggregated into per-block accuracy
//! reports by [`analytics`].
//!
//! Stimulus synthesis is generic over the sample type ([`Sample`]); the
//! aliases at the crate root fix it to `f64`, which is what the file formats
//! and the CLI use.

pub mod analytics;
pub mod bundled;
pub mod catalog;
pub mod num;
pub mod plan;
pub mod prng;
pub mod runtime;
pub mod stimulus;
pub mod store;

pub use num::Sample;
pub use prng::SplitMix64;

/// Tone parameters with `f64` samples.
pub type ToneSpec = stimulus::ToneSpec<f64>;
/// Sonification parameters with `f64` samples.
pub type SonificationSpec = stimulus::SonificationSpec<f64>;
/// A numeric series with `f64` values.
pub type DataSeries = stimulus::DataSeries<f64>;
/// A mono audio buffer with `f64` samples.
pub type AudioBuffer = stimulus::AudioBuffer<f64>;
/// A spectral line with `f64` parameters.
pub type SpectralLine = stimulus::SpectralLine<f64>;
/// Exact hit fraction used by the analytics module.
pub type HitFraction = num_rational::Ratio<u64>;
