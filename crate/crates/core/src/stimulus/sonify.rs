use std::f64::consts::TAU;

use super::{sample_count, AudioBuffer, DataSeries, Result, SonificationSpec};
use crate::num::Sample;

/// Target pitch of each note: `y` mapped linearly from `[y_min, y_max]` onto
/// `[f_min, f_max]`, or the midpoint of the pitch range for a flat series.
pub fn note_frequencies<T: Sample>(series: &DataSeries<T>, spec: &SonificationSpec<T>) -> Result<Vec<T>> {
    spec.validate()?;
    series.check_finite()?;
    let (lo, hi) = series.y_range();
    let span = spec.f_max_hz - spec.f_min_hz;
    Ok(series
        .y()
        .iter()
        .map(|&y| {
            if hi == lo {
                (spec.f_min_hz + spec.f_max_hz) / T::of(2.0)
            } else {
                spec.f_min_hz + (y - lo) / (hi - lo) * span
            }
        })
        .collect())
}

/// One fixed-length sine note per value, each with linear attack and release
/// ramps of `ramp_s`. Every note starts at zero phase.
pub fn sonify<T: Sample>(series: &DataSeries<T>, spec: &SonificationSpec<T>) -> Result<AudioBuffer<T>> {
    let freqs = note_frequencies(series, spec)?;
    let rate = spec.sample_rate_hz;
    let note_len = sample_count(spec.note_duration_s.to_f64_lossy(), rate);
    let ramp_len = sample_count(spec.ramp_s.to_f64_lossy(), rate);
    let amp = spec.amplitude.to_f64_lossy();

    let mut samples = Vec::with_capacity(note_len * freqs.len());
    for f in freqs {
        let f = f.to_f64_lossy();
        for k in 0..note_len {
            let gain = if ramp_len == 0 {
                1.0
            } else {
                let attack = k as f64 / ramp_len as f64;
                let release = (note_len - 1 - k) as f64 / ramp_len as f64;
                attack.min(release).min(1.0)
            };
            let cycles = (f * k as f64 / f64::from(rate)).fract();
            samples.push(T::of(amp * gain * (TAU * cycles).sin()));
        }
    }
    AudioBuffer::new(samples, rate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stimulus::StimulusError;

    #[test]
    fn flat_series_sits_at_midpoint() {
        let series = DataSeries::from_values("flat", vec![0.5; 10]).unwrap();
        let freqs = note_frequencies(&series, &SonificationSpec::default()).unwrap();
        assert_eq!(freqs, vec![960.0; 10]);
        let buf = sonify(&series, &SonificationSpec::default()).unwrap();
        assert_eq!(buf.len(), 10 * 4410);
    }

    #[test]
    fn endpoints_map_to_range() {
        let series = DataSeries::from_values("pair", vec![0.0, 1.0]).unwrap();
        let freqs = note_frequencies(&series, &SonificationSpec::default()).unwrap();
        assert_eq!(freqs, vec![220.0, 1700.0]);
    }

    #[test]
    fn permuting_values_permutes_notes() {
        let spec = SonificationSpec::default();
        let a = DataSeries::from_values("a", vec![3.0, -1.0, 2.0, 7.0]).unwrap();
        let b = DataSeries::from_values("b", vec![7.0, 2.0, 3.0, -1.0]).unwrap();
        let fa = note_frequencies(&a, &spec).unwrap();
        let fb = note_frequencies(&b, &spec).unwrap();
        assert_eq!([fa[3], fa[2], fa[0], fa[1]], fb[..]);
    }

    #[test]
    fn ramps_silence_note_edges() {
        let spec = SonificationSpec::default();
        let series = DataSeries::from_values("one", vec![1.0, 2.0]).unwrap();
        let buf = sonify(&series, &spec).unwrap();
        let s = buf.samples();
        assert_eq!(s[0], 0.0);
        assert_eq!(s[4409], 0.0);
        assert_eq!(s[4410], 0.0);
        assert!(buf.peak() <= 0.8);
    }

    #[test]
    fn rejects_bad_input() {
        let series = DataSeries::from_values("nan", vec![1.0, f64::NAN]).unwrap();
        assert!(matches!(
            sonify(&series, &SonificationSpec::default()),
            Err(StimulusError::NonFiniteData { index: 1 })
        ));
        let ok = DataSeries::from_values("ok", vec![1.0]).unwrap();
        let spec = SonificationSpec {
            f_min_hz: 1800.0,
            f_max_hz: 1700.0,
            ..Default::default()
        };
        assert!(matches!(sonify(&ok, &spec), Err(StimulusError::InvalidSpec(_))));
        let spec = SonificationSpec {
            ramp_s: 0.06,
            ..Default::default()
        };
        assert!(sonify(&ok, &spec).is_err());
    }
}
