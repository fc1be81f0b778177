//! Stand-in data series for the bundled trainings.

use super::{invalid, DataSeries, Result};
use crate::num::Sample;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FunctionKind {
    Sine,
    Square,
    Increasing,
    Decreasing,
}

impl FunctionKind {
    pub const ALL: [FunctionKind; 4] = [
        FunctionKind::Sine,
        FunctionKind::Square,
        FunctionKind::Increasing,
        FunctionKind::Decreasing,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FunctionKind::Sine => "sine",
            FunctionKind::Square => "square",
            FunctionKind::Increasing => "increasing",
            FunctionKind::Decreasing => "decreasing",
        }
    }
}

/// `n_points` samples of a simple function on `t ∈ [0, 1]`.
///
/// Sine spans `periods` full periods; square is `+1` where the sine is
/// non-negative and `-1` elsewhere; the ramps run linearly between -1 and 1.
pub fn gen_function<T: Sample>(kind: FunctionKind, n_points: usize, periods: T) -> Result<DataSeries<T>> {
    if n_points < 2 {
        return Err(invalid("n_points must be at least 2"));
    }
    let periodic = matches!(kind, FunctionKind::Sine | FunctionKind::Square);
    if periodic && !(periods.is_finite() && periods > T::zero()) {
        return Err(invalid("periods must be > 0"));
    }
    let last = T::of((n_points - 1) as f64);
    let two = T::of(2.0);
    let y = (0..n_points)
        .map(|i| {
            let t = T::of(i as f64) / last;
            let sine = || (two * T::PI() * periods * t).sin();
            match kind {
                FunctionKind::Sine => sine(),
                FunctionKind::Square => {
                    if sine() >= T::zero() {
                        T::one()
                    } else {
                        -T::one()
                    }
                }
                FunctionKind::Increasing => -T::one() + two * t,
                FunctionKind::Decreasing => T::one() - two * t,
            }
        })
        .collect();
    DataSeries::from_values(kind.name(), y)
}

/// A Gaussian line on the continuum: positive amplitude for emission,
/// negative for absorption.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralLine<T> {
    pub center: T,
    pub width: T,
    pub amplitude: T,
}

/// `continuum + Σ amplitude·exp(−(x − center)² / (2·width²))` on
/// `n_points` evenly spaced abscissae spanning `x_range`.
pub fn gen_spectrum<T: Sample>(
    continuum: T,
    lines: &[SpectralLine<T>],
    n_points: usize,
    x_range: (T, T),
) -> Result<DataSeries<T>> {
    if n_points < 16 {
        return Err(invalid("n_points must be at least 16"));
    }
    let (x0, x1) = x_range;
    if !(x0.is_finite() && x1.is_finite() && x0 < x1) {
        return Err(invalid("x_range must be finite and increasing"));
    }
    if !continuum.is_finite() {
        return Err(invalid("continuum must be finite"));
    }
    for line in lines {
        if !(line.width.is_finite() && line.width > T::zero()) {
            return Err(invalid("line widths must be > 0"));
        }
        if !(line.center.is_finite() && line.amplitude.is_finite()) {
            return Err(invalid("line parameters must be finite"));
        }
    }
    let step = (x1 - x0) / T::of((n_points - 1) as f64);
    let two = T::of(2.0);
    let x: Vec<T> = (0..n_points).map(|i| x0 + step * T::of(i as f64)).collect();
    let y = x
        .iter()
        .map(|&xi| {
            lines.iter().fold(continuum, |acc, l| {
                let d = xi - l.center;
                acc + l.amplitude * (-(d * d) / (two * l.width * l.width)).exp()
            })
        })
        .collect();
    DataSeries::new("spectrum", Some(x), y)
}
