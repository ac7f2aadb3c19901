//! Stochastic late reverberation, its fade-in, the DRR target and the solve
//! that scales the tail so the combined response meets that target.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::analysis::drr_ranges;
use crate::config::SynthConfig;
use crate::error::{Error, Result};
use crate::geometry::{relative_direction, Room, Scene, Source, Vec3};

/// Unit-variance tail realization with envelope and fade-in applied.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticTail {
    pub samples: Vec<f64>,
    pub n_d: usize,
    /// Amplitude decay rate in 1/s.
    pub delta: f64,
    pub rng_seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DrrTarget {
    pub eta: f64,
    pub critical_distance: f64,
    pub alpha: f64,
    pub beta: f64,
    /// Source pattern gain toward the receiver.
    pub directional_response: f64,
    pub distance: f64,
}

pub fn decay_rate(t60: f64) -> Result<f64> {
    if !(t60.is_finite() && t60 > 0.0) {
        return Err(Error::param("t60", format!("must be positive, got {t60}")));
    }
    Ok(3.0 * std::f64::consts::LN_10 / t60)
}

/// Raised-cosine fade-in starting at `n_d` and reaching one after
/// `2 fs / (kappa delta)` samples.
pub fn fade_window(n: f64, n_d: usize, delta: f64, kappa: f64, fs: f64) -> f64 {
    let offset = n - n_d as f64;
    let length = 2.0 * fs / (kappa * delta);
    if offset <= 0.0 {
        0.0
    } else if offset <= length {
        0.5 * (1.0 - (PI * offset / length).cos())
    } else {
        1.0
    }
}

/// Deterministic envelope `psi(n) exp(-delta (n - n_d) / fs)` of the tail.
pub fn tail_envelope(n: usize, n_d: usize, delta: f64, cfg: &SynthConfig) -> f64 {
    if n <= n_d {
        return 0.0;
    }
    let fs = cfg.fs_f64();
    fade_window(n as f64, n_d, delta, cfg.kappa, fs) * (-delta * (n - n_d) as f64 / fs).exp()
}

/// Draws one tail realization. Samples up to and including `n_d` are zero.
pub fn generate_tail(n_d: usize, delta: f64, cfg: &SynthConfig, seed: u64) -> Result<StochasticTail> {
    if n_d >= cfg.n_samples {
        return Err(Error::param(
            "n_d",
            format!("direct delay {n_d} beyond response length {}", cfg.n_samples),
        ));
    }
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::param("delta", "must be positive and finite"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = vec![0.0; cfg.n_samples];
    for (n, s) in samples.iter_mut().enumerate().skip(n_d + 1) {
        let g: f64 = StandardNormal.sample(&mut rng);
        *s = g * tail_envelope(n, n_d, delta, cfg);
    }
    Ok(StochasticTail {
        samples,
        n_d,
        delta,
        rng_seed: seed,
    })
}

/// Critical distance in meters for directivity factors `alpha` (source) and
/// `beta` (microphone).
pub fn critical_distance(room: &Room, alpha: f64, beta: f64) -> Result<f64> {
    room.validate()?;
    if !(alpha > 0.0 && beta > 0.0) {
        return Err(Error::param("alpha/beta", "directivity factors must be positive"));
    }
    Ok(0.1 * (alpha * beta).sqrt() * (room.volume() / (PI * room.t60)).sqrt())
}

/// DRR target at the pair center of `scene`.
pub fn target_drr(scene: &Scene, alpha: f64, beta: f64) -> Result<DrrTarget> {
    target_drr_at(&scene.room, &scene.source, scene.mics.center(), alpha, beta)
}

/// DRR target for an arbitrary receiver position.
pub fn target_drr_at(
    room: &Room,
    source: &Source,
    receiver: Vec3,
    alpha: f64,
    beta: f64,
) -> Result<DrrTarget> {
    let distance = source.position.distance(receiver);
    if !(distance > 0.0) {
        return Err(Error::DegenerateGeometry(
            "receiver coincides with the source".into(),
        ));
    }
    let dir = relative_direction(
        source.look_azimuth,
        source.look_elevation,
        receiver - source.position,
    )?;
    let a = source.pattern.coefficient();
    let directional_response = a + (1.0 - a) * dir.polar.cos();
    let d_c = critical_distance(room, alpha, beta)?;
    Ok(DrrTarget {
        eta: directional_response.powi(2) * d_c.powi(2) / distance.powi(2),
        critical_distance: d_c,
        alpha,
        beta,
        directional_response,
        distance,
    })
}

/// Quadratic forms of `h + s * t` restricted to the direct window (`a*`) and
/// the late region (`b*`): energy = x0 + 2 s x1 + s^2 x2.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EnergyForms {
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
}

impl EnergyForms {
    pub fn from_signals(early: &[f64], tail: &[f64], n_d: usize, w: usize) -> Result<Self> {
        if early.len() != tail.len() {
            return Err(Error::LengthMismatch {
                left: early.len(),
                right: tail.len(),
            });
        }
        let (direct, late) = drr_ranges(early.len(), n_d, w)?;
        let mut f = EnergyForms::default();
        for n in direct {
            f.a0 += early[n] * early[n];
            f.a1 += early[n] * tail[n];
            f.a2 += tail[n] * tail[n];
        }
        for n in late {
            f.b0 += early[n] * early[n];
            f.b1 += early[n] * tail[n];
            f.b2 += tail[n] * tail[n];
        }
        Ok(f)
    }

    /// Forms averaged over tail realizations: cross terms vanish and the tail
    /// energy is that of its envelope.
    pub fn expected(early: &[f64], envelope: &[f64], n_d: usize, w: usize) -> Result<Self> {
        let mut f = Self::from_signals(early, envelope, n_d, w)?;
        f.a1 = 0.0;
        f.b1 = 0.0;
        Ok(f)
    }

    pub fn ratio(&self, s: f64) -> f64 {
        let num = self.a0 + 2.0 * s * self.a1 + s * s * self.a2;
        let den = self.b0 + 2.0 * s * self.b1 + s * s * self.b2;
        num / den
    }

    /// Supremum of the DRR over non-negative scales.
    pub fn attainable_max(&self) -> f64 {
        let mut best = f64::NEG_INFINITY;
        let mut consider = |s: f64| {
            let den = self.b0 + 2.0 * s * self.b1 + s * s * self.b2;
            if s >= 0.0 && den > 0.0 {
                best = best.max(self.ratio(s));
            }
        };
        consider(0.0);
        // Stationary points of the ratio solve p s^2 + q s + r = 0.
        let p = self.a2 * self.b1 - self.a1 * self.b2;
        let q = self.a2 * self.b0 - self.a0 * self.b2;
        let r = self.a1 * self.b0 - self.a0 * self.b1;
        for s in real_roots(p, q, r) {
            consider(s);
        }
        if self.b2 > 0.0 {
            best = best.max(self.a2 / self.b2);
        }
        best
    }

    /// Smallest non-negative scale whose DRR equals `eta`.
    pub fn solve(&self, eta: f64) -> Result<f64> {
        let infeasible = || Error::InfeasibleDrr {
            requested: eta,
            attainable: self.attainable_max(),
        };
        if !(eta.is_finite() && eta > 0.0) {
            return Err(infeasible());
        }
        if !(self.b2 > 0.0) {
            return Err(Error::param(
                "tail",
                "tail has no energy outside the direct-path window",
            ));
        }
        let a = self.a2 - eta * self.b2;
        let b = 2.0 * (self.a1 - eta * self.b1);
        let c = self.a0 - eta * self.b0;
        if c.abs() <= 1e-12 * (self.a0 + eta * self.b0) {
            return Ok(0.0);
        }
        real_roots(a, b, c)
            .into_iter()
            .filter(|&s| s >= 0.0)
            .min_by(f64::total_cmp)
            .ok_or_else(infeasible)
    }
}

fn real_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    let scale = a.abs().max(b.abs()).max(c.abs());
    if scale == 0.0 {
        return Vec::new();
    }
    if a.abs() <= 1e-15 * scale {
        return if b != 0.0 { vec![-c / b] } else { Vec::new() };
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return Vec::new();
    }
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    if q == 0.0 {
        return vec![0.0];
    }
    vec![q / a, c / q]
}

/// Tail scale that makes `early + scale * tail` meet DRR `eta` for this
/// realization exactly.
pub fn solve_tail_scale(
    early: &[f64],
    tail: &StochasticTail,
    eta: f64,
    w: usize,
) -> Result<f64> {
    EnergyForms::from_signals(early, &tail.samples, tail.n_d, w)?.solve(eta)
}
