//! Auditory and visual stimulus synthesis.
//!
//! Everything here is a pure function of its inputs: equal specs (seeds
//! included) give equal buffers and byte-equal files.

mod generate;
mod plot;
mod series_io;
mod sonify;
mod tone;
mod wav;

use thiserror::Error;

use crate::num::Sample;

pub use generate::{gen_function, gen_spectrum, FunctionKind, SpectralLine};
pub use plot::render_plot;
pub use series_io::{load_series, parse_series_csv, parse_series_txt, write_series_csv};
pub use sonify::{note_frequencies, sonify};
pub use tone::synth_tone;
pub use wav::{wav_len, write_wav};

pub const DEFAULT_SAMPLE_RATE: u32 = 44_100;

#[derive(Debug, Error)]
pub enum StimulusError {
    #[error("invalid spec: {0}")]
    InvalidSpec(String),
    #[error("non-finite data value at index {index}")]
    NonFiniteData { index: usize },
    #[error("invalid series input: {0}")]
    BadSeries(String),
    #[error(transparent)]
    Sink(#[from] std::io::Error),
}

pub type Result<T, E = StimulusError> = std::result::Result<T, E>;

fn invalid(msg: impl Into<String>) -> StimulusError {
    StimulusError::InvalidSpec(msg.into())
}

/// A sine tone optionally mixed with seeded white noise.
#[derive(Debug, Clone, PartialEq)]
pub struct ToneSpec<T> {
    pub frequency_hz: T,
    pub duration_s: T,
    pub sample_rate_hz: u32,
    pub amplitude: T,
    pub noise_mix: T,
    pub noise_seed: u64,
}

impl<T: Sample> ToneSpec<T> {
    pub fn new(frequency_hz: T, duration_s: T) -> Self {
        Self {
            frequency_hz,
            duration_s,
            sample_rate_hz: DEFAULT_SAMPLE_RATE,
            amplitude: T::of(0.8),
            noise_mix: T::zero(),
            noise_seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let nyquist = T::of(f64::from(self.sample_rate_hz) / 2.0);
        if self.sample_rate_hz == 0 {
            return Err(invalid("sample_rate_hz must be positive"));
        }
        if !(self.frequency_hz.is_finite() && self.frequency_hz > T::zero()) {
            return Err(invalid("frequency_hz must be > 0"));
        }
        if self.frequency_hz >= nyquist {
            return Err(invalid(format!(
                "frequency_hz {} must be below the Nyquist frequency {nyquist}",
                self.frequency_hz
            )));
        }
        if !(self.duration_s.is_finite() && self.duration_s > T::zero()) {
            return Err(invalid("duration_s must be > 0"));
        }
        if !(self.amplitude > T::zero() && self.amplitude <= T::one()) {
            return Err(invalid("amplitude must lie in (0, 1]"));
        }
        if !(self.noise_mix >= T::zero() && self.noise_mix <= T::one()) {
            return Err(invalid("noise_mix must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// Linear value-to-pitch mapping with fixed-length notes.
#[derive(Debug, Clone, PartialEq)]
pub struct SonificationSpec<T> {
    pub f_min_hz: T,
    pub f_max_hz: T,
    pub note_duration_s: T,
    pub sample_rate_hz: u32,
    pub amplitude: T,
    pub ramp_s: T,
}

impl<T: Sample> Default for SonificationSpec<T> {
    fn default() -> Self {
        Self {
            f_min_hz: T::of(220.0),
            f_max_hz: T::of(1700.0),
            note_duration_s: T::of(0.1),
            sample_rate_hz: DEFAULT_SAMPLE_RATE,
            amplitude: T::of(0.8),
            ramp_s: T::of(0.005),
        }
    }
}

impl<T: Sample> SonificationSpec<T> {
    pub fn validate(&self) -> Result<()> {
        if self.sample_rate_hz == 0 {
            return Err(invalid("sample_rate_hz must be positive"));
        }
        let nyquist = T::of(f64::from(self.sample_rate_hz) / 2.0);
        if !(self.f_min_hz.is_finite() && self.f_min_hz > T::zero()) {
            return Err(invalid("f_min_hz must be > 0"));
        }
        if !(self.f_min_hz < self.f_max_hz && self.f_max_hz < nyquist) {
            return Err(invalid(format!(
                "need f_min_hz < f_max_hz < {nyquist}, got {} and {}",
                self.f_min_hz, self.f_max_hz
            )));
        }
        if !(self.note_duration_s.is_finite() && self.note_duration_s > T::zero()) {
            return Err(invalid("note_duration_s must be > 0"));
        }
        if !(self.amplitude > T::zero() && self.amplitude <= T::one()) {
            return Err(invalid("amplitude must lie in (0, 1]"));
        }
        if !(self.ramp_s >= T::zero() && self.ramp_s + self.ramp_s <= self.note_duration_s) {
            return Err(invalid("ramp_s must be >= 0 and at most half of note_duration_s"));
        }
        Ok(())
    }
}

/// A named numeric series with optional abscissae.
#[derive(Debug, Clone, PartialEq)]
pub struct DataSeries<T> {
    x: Option<Vec<T>>,
    y: Vec<T>,
    pub name: String,
}

impl<T: Sample> DataSeries<T> {
    /// Requires at least one value and, when given, as many non-decreasing
    /// `x` values as `y` values. Values are not required to be finite here;
    /// consumers that need finiteness report [`StimulusError::NonFiniteData`].
    pub fn new(name: impl Into<String>, x: Option<Vec<T>>, y: Vec<T>) -> Result<Self> {
        if y.is_empty() {
            return Err(invalid("series needs at least one value"));
        }
        if let Some(x) = &x {
            if x.len() != y.len() {
                return Err(invalid(format!("x has {} values, y has {}", x.len(), y.len())));
            }
            // Written so that NaN fails as well.
            #[allow(clippy::neg_cmp_op_on_partial_ord)]
            if x.windows(2).any(|w| !(w[0] <= w[1])) {
                return Err(invalid("x must be non-decreasing"));
            }
        }
        Ok(Self {
            x,
            y,
            name: name.into(),
        })
    }

    pub fn from_values(name: impl Into<String>, y: Vec<T>) -> Result<Self> {
        Self::new(name, None, y)
    }

    pub fn x(&self) -> Option<&[T]> {
        self.x.as_deref()
    }

    pub fn y(&self) -> &[T] {
        &self.y
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    /// Sub-series `range`, used for range cuts before sonifying.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Result<Self> {
        let y = self
            .y
            .get(range.clone())
            .ok_or_else(|| invalid("slice out of bounds"))?
            .to_vec();
        let x = self.x.as_ref().map(|x| x[range].to_vec());
        Self::new(self.name.clone(), x, y)
    }

    pub(crate) fn check_finite(&self) -> Result<()> {
        let values = self.y.iter().chain(self.x.iter().flatten());
        match values.enumerate().find(|(_, v)| !v.is_finite()) {
            Some((i, _)) => Err(StimulusError::NonFiniteData {
                index: i % self.y.len(),
            }),
            None => Ok(()),
        }
    }

    pub(crate) fn y_range(&self) -> (T, T) {
        self.y.iter().fold((T::infinity(), T::neg_infinity()), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        })
    }
}

/// Mono audio with every sample in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer<T> {
    samples: Vec<T>,
    pub sample_rate_hz: u32,
}

impl<T: Sample> AudioBuffer<T> {
    pub fn new(samples: Vec<T>, sample_rate_hz: u32) -> Result<Self> {
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if let Some(i) = samples.iter().position(|s| !(s.abs() <= T::one())) {
            return Err(invalid(format!("sample {i} lies outside [-1, 1]")));
        }
        Ok(Self {
            samples,
            sample_rate_hz,
        })
    }

    pub fn samples(&self) -> &[T] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / f64::from(self.sample_rate_hz)
    }

    pub fn rms(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        let sum: f64 = self.samples.iter().map(|s| s.to_f64_lossy().powi(2)).sum();
        (sum / self.samples.len() as f64).sqrt()
    }

    pub fn peak(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| s.to_f64_lossy().abs())
            .fold(0.0, f64::max)
    }
}

/// Samples spanning `seconds` at `rate`, rounded to nearest.
pub(crate) fn sample_count(seconds: f64, rate: u32) -> usize {
    (seconds * f64::from(rate)).round() as usize
}
