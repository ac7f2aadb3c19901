//! Measurements on impulse responses and distance estimates.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Width of one distance class in meters.
pub const CLASS_WIDTH: f64 = 0.1;

/// Floor applied to the energy decay curve once the remaining energy is zero.
pub const EDC_FLOOR_DB: f64 = -400.0;

/// Direct window `[n_d - w, n_d + w]` (clipped at 0) and the late region
/// `[n_d + w + 1, len)`.
pub fn drr_ranges(len: usize, n_d: usize, w: usize) -> Result<(Range<usize>, Range<usize>)> {
    if n_d + w + 1 >= len {
        return Err(Error::param(
            "n_d",
            format!("direct window ending at {} leaves no late region in {len} samples", n_d + w),
        ));
    }
    Ok((n_d.saturating_sub(w)..n_d + w + 1, n_d + w + 1..len))
}

/// Energy ratio between the direct window around `n_d` and everything after it.
pub fn measure_drr(h: &[f64], n_d: usize, w: usize) -> Result<f64> {
    let (direct, late) = drr_ranges(h.len(), n_d, w)?;
    let e_direct: f64 = h[direct].iter().map(|v| v * v).sum();
    let e_late: f64 = h[late].iter().map(|v| v * v).sum();
    if e_late == 0.0 {
        return Err(Error::AnechoicInput);
    }
    Ok(e_direct / e_late)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyDecayCurve {
    /// Backward-integrated energy in dB relative to the total.
    pub values: Vec<f64>,
    pub fs: f64,
}

/// Schroeder backward integral in dB, 0 dB at the first sample.
pub fn schroeder_edc(h: &[f64], fs: f64) -> Result<EnergyDecayCurve> {
    let mut acc = vec![0.0; h.len()];
    let mut running = 0.0;
    for (a, v) in acc.iter_mut().zip(h).rev() {
        running += v * v;
        *a = running;
    }
    let total = running;
    if !(total > 0.0) {
        return Err(Error::ZeroEnergy);
    }
    let values = acc
        .into_iter()
        .map(|e| {
            if e > 0.0 {
                (10.0 * (e / total).log10()).max(EDC_FLOOR_DB)
            } else {
                EDC_FLOOR_DB
            }
        })
        .collect();
    Ok(EnergyDecayCurve { values, fs })
}

/// Decay fit range in dB, both negative, `start > end`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitRange {
    pub start_db: f64,
    pub end_db: f64,
}

impl FitRange {
    pub const T30: FitRange = FitRange {
        start_db: -5.0,
        end_db: -35.0,
    };
}

/// T60 from a least-squares line through the EDC between the fit limits,
/// extrapolated to 60 dB of decay.
pub fn estimate_t60(edc: &EnergyDecayCurve) -> Result<f64> {
    estimate_t60_with(edc, FitRange::T30)
}

pub fn estimate_t60_with(edc: &EnergyDecayCurve, range: FitRange) -> Result<f64> {
    let v = &edc.values;
    let attained = v.last().copied().unwrap_or(0.0);
    let insufficient = || Error::InsufficientDecayRange {
        attained_db: attained,
        required_db: range.end_db,
    };
    let start = v.iter().position(|&x| x <= range.start_db).ok_or_else(insufficient)?;
    let end = v.iter().position(|&x| x <= range.end_db).ok_or_else(insufficient)?;
    if end <= start + 1 {
        return Err(insufficient());
    }

    // Fit dB = slope * n + intercept over [start, end).
    let pts = &v[start..end];
    let count = pts.len() as f64;
    let mean_x = (start + end - 1) as f64 / 2.0;
    let mean_y = pts.iter().sum::<f64>() / count;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, &y) in pts.iter().enumerate() {
        let dx = (start + i) as f64 - mean_x;
        sxy += dx * (y - mean_y);
        sxx += dx * dx;
    }
    let slope_per_sample = sxy / sxx;
    if !(slope_per_sample < 0.0) {
        return Err(insufficient());
    }
    Ok(-60.0 / (slope_per_sample * edc.fs))
}

/// Mean absolute error between distance estimates and ground truth.
pub fn mae(estimates: &[f64], truths: &[f64]) -> Result<f64> {
    if estimates.len() != truths.len() {
        return Err(Error::LengthMismatch {
            left: estimates.len(),
            right: truths.len(),
        });
    }
    if estimates.is_empty() {
        return Err(Error::param("estimates", "need at least one estimate"));
    }
    let sum: f64 = estimates.iter().zip(truths).map(|(e, t)| (e - t).abs()).sum();
    Ok(sum / estimates.len() as f64)
}

/// Nearest class index with ties rounded up.
pub fn distance_to_class(d: f64) -> Result<u32> {
    if !(d.is_finite() && d >= 0.0) {
        return Err(Error::param("distance", format!("must be non-negative, got {d}")));
    }
    Ok((d / CLASS_WIDTH + 0.5).floor() as u32)
}

pub fn class_to_distance(class: u32) -> f64 {
    f64::from(class) * CLASS_WIDTH
}
