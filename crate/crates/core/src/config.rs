use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the late-tail scale is chosen against the DRR target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailSolve {
    /// Match the DRR of the drawn realization exactly, cross terms included.
    #[default]
    Realization,
    /// Match the DRR in expectation over tail realizations.
    Expectation,
}

/// Global synthesis parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    /// Sampling rate in Hz.
    pub fs: u32,
    pub n_samples: usize,
    /// Maximum image-source reflection order for the early part.
    pub image_order: usize,
    /// Fade-in speed of the stochastic tail.
    pub kappa: f64,
    /// Half-width of the direct-path window in samples.
    pub drr_window: usize,
    pub speed_of_sound: f64,
    pub highpass_cutoff: f64,
    /// Set to false to skip the early-part high-pass.
    pub highpass: bool,
    /// Uniform range of the source directivity factor.
    pub alpha_range: [f64; 2],
    /// Microphone directivity factor.
    pub beta: f64,
    pub tail_solve: TailSolve,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            fs: 16_000,
            n_samples: 16_384,
            image_order: 3,
            kappa: 1.0,
            drr_window: 40,
            speed_of_sound: 343.0,
            highpass_cutoff: 100.0,
            highpass: true,
            alpha_range: [2.5, 5.5],
            beta: 1.0,
            tail_solve: TailSolve::Realization,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.fs == 0 {
            return Err(Error::param("synth.fs", "must be positive"));
        }
        if self.n_samples == 0 {
            return Err(Error::param("synth.n_samples", "must be positive"));
        }
        let positive = [
            ("synth.kappa", self.kappa),
            ("synth.speed_of_sound", self.speed_of_sound),
            ("synth.beta", self.beta),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::param(name, format!("must be positive, got {v}")));
            }
        }
        if !(self.highpass_cutoff.is_finite()
            && self.highpass_cutoff > 0.0
            && self.highpass_cutoff < f64::from(self.fs) / 2.0)
        {
            return Err(Error::param(
                "synth.highpass_cutoff",
                "must lie strictly between 0 and fs/2",
            ));
        }
        let [lo, hi] = self.alpha_range;
        if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && lo <= hi) {
            return Err(Error::param(
                "synth.alpha_range",
                format!("need 0 < min <= max, got [{lo}, {hi}]"),
            ));
        }
        if 2 * self.drr_window + 2 > self.n_samples {
            return Err(Error::param(
                "synth.drr_window",
                "window does not fit inside the impulse response",
            ));
        }
        Ok(())
    }

    pub fn fs_f64(&self) -> f64 {
        f64::from(self.fs)
    }

    /// Integer-rounded time of flight over `distance` in samples.
    pub fn delay_samples(&self, distance: f64) -> usize {
        (distance * self.fs_f64() / self.speed_of_sound).round() as usize
    }
}
