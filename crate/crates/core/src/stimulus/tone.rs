use std::f64::consts::TAU;

use super::{sample_count, AudioBuffer, Result, ToneSpec};
use crate::num::Sample;
use crate::prng::SplitMix64;

/// `amplitude · ((1 − mix)·sin(2π f n / sr) + mix·w[n])`, where `w` is
/// uniform white noise in `[-1, 1)` drawn from SplitMix64(`noise_seed`).
///
/// The oscillator phase is accumulated in `f64` regardless of `T` so that
/// long `f32` tones do not drift.
pub fn synth_tone<T: Sample>(spec: &ToneSpec<T>) -> Result<AudioBuffer<T>> {
    spec.validate()?;
    let rate = spec.sample_rate_hz;
    let freq = spec.frequency_hz.to_f64_lossy();
    let amp = spec.amplitude.to_f64_lossy();
    let mix = spec.noise_mix.to_f64_lossy();
    let n = sample_count(spec.duration_s.to_f64_lossy(), rate);

    let mut noise = SplitMix64::new(spec.noise_seed);
    let samples = (0..n)
        .map(|i| {
            let cycles = (freq * i as f64 / f64::from(rate)).fract();
            let tone = (TAU * cycles).sin();
            let value = if mix > 0.0 {
                amp * ((1.0 - mix) * tone + mix * noise.next_signed_unit())
            } else {
                amp * tone
            };
            T::of(value)
        })
        .collect();
    AudioBuffer::new(samples, rate)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Sign changes between consecutive non-zero samples.
    fn sign_changes(samples: &[f64]) -> usize {
        let signs: Vec<bool> = samples.iter().filter(|s| **s != 0.0).map(|s| *s > 0.0).collect();
        signs.windows(2).filter(|w| w[0] != w[1]).count()
    }

    #[test]
    fn sample_count_is_duration_times_rate() {
        let buf = synth_tone(&ToneSpec::new(260.0, 4.0)).unwrap();
        assert_eq!(buf.len(), 176_400);
        assert_eq!(buf.sample_rate_hz, 44_100);
    }

    #[test]
    fn sign_changes_track_frequency() {
        let buf = synth_tone(&ToneSpec::new(260.0, 4.0)).unwrap();
        let changes = sign_changes(buf.samples());
        assert!((2078..=2082).contains(&changes), "{changes}");
    }

    #[test]
    fn zero_mix_equals_pure_sine_formula() {
        let spec = ToneSpec::new(311.0, 0.25);
        let buf = synth_tone(&spec).unwrap();
        for (n, s) in buf.samples().iter().enumerate() {
            let expected = 0.8 * (2.0 * std::f64::consts::PI * 311.0 * n as f64 / 44_100.0).sin();
            assert!((s - expected).abs() < 1e-9, "n={n}");
        }
    }

    #[test]
    fn noise_is_seeded_and_bounded() {
        let mut spec = ToneSpec::new(480.0, 0.5);
        spec.noise_mix = 0.4;
        spec.noise_seed = 9;
        let a = synth_tone(&spec).unwrap();
        assert_eq!(a, synth_tone(&spec).unwrap());
        spec.noise_seed = 10;
        assert_ne!(a, synth_tone(&spec).unwrap());
        assert!(a.peak() <= 0.8 + 1e-12);

        spec.noise_mix = 1.0;
        let pure_noise = synth_tone(&spec).unwrap();
        assert!(pure_noise.peak() <= 0.8);
        // Uniform noise on [-a, a] has RMS a/√3.
        assert!((pure_noise.rms() - 0.8 / 3f64.sqrt()).abs() < 0.01);
    }

    #[test]
    fn f32_tones_agree_with_f64() {
        let a = synth_tone(&ToneSpec::<f32>::new(300.0, 1.0)).unwrap();
        let b = synth_tone(&ToneSpec::<f64>::new(300.0, 1.0)).unwrap();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.samples().iter().zip(b.samples()) {
            assert!((f64::from(*x) - y).abs() < 1e-6);
        }
    }

    #[test]
    fn invalid_specs() {
        assert!(synth_tone(&ToneSpec::new(0.0, 1.0)).is_err());
        assert!(synth_tone(&ToneSpec::new(22_050.0, 1.0)).is_err());
        assert!(synth_tone(&ToneSpec::new(440.0, 0.0)).is_err());
        let mut spec = ToneSpec::new(440.0, 1.0);
        spec.amplitude = 1.5;
        assert!(synth_tone(&spec).is_err());
        spec.amplitude = 0.5;
        spec.noise_mix = -0.1;
        assert!(synth_tone(&spec).is_err());
    }
}
