//! Shoebox image-source model for the early part of the impulse response.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::config::SynthConfig;
use crate::error::{Error, Result};
use crate::geometry::{Room, Scene, Source, Vec3};

/// Sabine constant in s/m.
pub const SABINE: f64 = 0.161;

/// Number of taps of the fractional-delay kernel.
pub const KERNEL_TAPS: usize = 81;
const KERNEL_HALF: i64 = (KERNEL_TAPS as i64 - 1) / 2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImageSource {
    pub position: Vec3,
    /// Lattice index per axis; `|i|` reflections off that axis' walls.
    pub lattice: [i32; 3],
    pub order: usize,
    pub reflection_gain: f64,
    /// Look direction after mirroring.
    pub look: Vec3,
    /// Pattern gain toward the receiver the images were enumerated for.
    pub directivity_gain: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EarlyRir {
    pub samples: Vec<f64>,
    /// Integer-rounded direct-path delay in samples.
    pub n_d: usize,
    /// Images whose arrival fell beyond the buffer and were dropped.
    pub truncated_images: usize,
}

/// Uniform wall pressure-reflection coefficient reproducing the room's T60
/// through the Sabine formula.
pub fn wall_reflection_coefficient(room: &Room) -> Result<f64> {
    room.validate()?;
    let absorption = SABINE * room.volume() / (room.surface_area() * room.t60);
    // Exactly total absorption is allowed; ulp-level overshoot is rounding.
    if absorption > 1.0 + 1e-12 {
        return Err(Error::InfeasibleRoom {
            t60: room.t60,
            absorption,
        });
    }
    Ok((1.0 - absorption).max(0.0).sqrt())
}

fn image_coordinate(index: i32, extent: f64, coord: f64) -> f64 {
    if index % 2 == 0 {
        f64::from(index) * extent + coord
    } else {
        f64::from(index + 1) * extent - coord
    }
}

fn pattern_gain_from_cos(a: f64, cos_theta: f64) -> f64 {
    a + (1.0 - a) * cos_theta
}

/// All image sources with at most `max_order` wall reflections, sorted by order.
///
/// Each axis flip mirrors the matching component of the look direction, and
/// the pattern gain is evaluated toward `receiver`.
pub fn enumerate_images(
    room: &Room,
    source: &Source,
    receiver: Vec3,
    max_order: usize,
) -> Result<Vec<ImageSource>> {
    let beta = wall_reflection_coefficient(room)?;
    let dims = room.dims();
    let look = source.look_direction();
    let a = source.pattern.coefficient();
    let k = max_order as i32;

    let mut images = Vec::with_capacity(image_count(max_order));
    for order in 0..=k {
        for ix in -order..=order {
            let rest = order - ix.abs();
            for iy in -rest..=rest {
                let iz_abs = rest - iy.abs();
                let zs: &[i32] = if iz_abs == 0 { &[0] } else { &[-iz_abs, iz_abs] };
                for &iz in zs {
                    let lattice = [ix, iy, iz];
                    let mut position = [0.0; 3];
                    let mut mirrored = look.0;
                    for axis in 0..3 {
                        position[axis] =
                            image_coordinate(lattice[axis], dims.0[axis], source.position.0[axis]);
                        if lattice[axis] % 2 != 0 {
                            mirrored[axis] = -mirrored[axis];
                        }
                    }
                    let position = Vec3(position);
                    let mirrored = Vec3(mirrored);
                    let to_receiver = (receiver - position).normalized().ok_or_else(|| {
                        Error::DegenerateGeometry("receiver coincides with an image source".into())
                    })?;
                    images.push(ImageSource {
                        position,
                        lattice,
                        order: order as usize,
                        reflection_gain: beta.powi(order),
                        look: mirrored,
                        directivity_gain: pattern_gain_from_cos(a, mirrored.dot(to_receiver)),
                    });
                }
            }
        }
    }
    Ok(images)
}

/// Closed-form count of images up to `max_order`: 1 + sum over o of (4o^2 + 2).
pub fn image_count(max_order: usize) -> usize {
    1 + (1..=max_order).map(|o| 4 * o * o + 2).sum::<usize>()
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// Hann-windowed sinc evaluated at offset `x` samples from the true arrival.
pub(crate) fn fractional_delay_tap(x: f64) -> f64 {
    let span = (KERNEL_HALF + 1) as f64;
    if x.abs() >= span {
        return 0.0;
    }
    0.5 * (1.0 + (PI * x / span).cos()) * sinc(x)
}

/// Adds a band-limited impulse of `amplitude` at fractional sample `delay`.
/// Returns false when the arrival lies beyond the buffer.
pub(crate) fn add_fractional_impulse(buf: &mut [f64], delay: f64, amplitude: f64) -> bool {
    let n = buf.len() as i64;
    if !(delay < n as f64) {
        return false;
    }
    let center = delay.round() as i64;
    let lo = (center - KERNEL_HALF).max(0);
    let hi = (center + KERNEL_HALF).min(n - 1);
    for k in lo..=hi {
        buf[k as usize] += amplitude * fractional_delay_tap(k as f64 - delay);
    }
    true
}

fn render_images(images: &[ImageSource], receiver: Vec3, cfg: &SynthConfig) -> (Vec<f64>, usize) {
    let fs = cfg.fs_f64();
    let mut buf = vec![0.0; cfg.n_samples];
    let mut truncated = 0;
    for img in images {
        let dist = img.position.distance(receiver);
        let amplitude = img.reflection_gain * img.directivity_gain / (4.0 * PI * dist);
        if !add_fractional_impulse(&mut buf, dist * fs / cfg.speed_of_sound, amplitude) {
            truncated += 1;
        }
    }
    (buf, truncated)
}

/// Early impulse response at microphone `mic` using images up to `cfg.image_order`.
pub fn render_early(scene: &Scene, mic: usize, cfg: &SynthConfig) -> Result<EarlyRir> {
    render_early_with_order(scene, mic, cfg, cfg.image_order)
}

pub fn render_early_with_order(
    scene: &Scene,
    mic: usize,
    cfg: &SynthConfig,
    max_order: usize,
) -> Result<EarlyRir> {
    if mic > 1 {
        return Err(Error::param("mic", format!("index {mic} out of range")));
    }
    let receiver = scene.mics.positions[mic];
    let images = enumerate_images(&scene.room, &scene.source, receiver, max_order)?;
    let (samples, truncated_images) = render_images(&images, receiver, cfg);
    Ok(EarlyRir {
        samples,
        n_d: cfg.delay_samples(scene.mic_distance(mic)),
        truncated_images,
    })
}

/// Allen-Berkley high-pass: a DC zero, a zero at `exp(-w)` and a matching
/// resonant pole pair.
pub fn highpass(mut rir: EarlyRir, cfg: &SynthConfig) -> EarlyRir {
    highpass_in_place(&mut rir.samples, cfg.highpass_cutoff, cfg.fs_f64());
    rir
}

pub fn highpass_in_place(x: &mut [f64], cutoff: f64, fs: f64) {
    let w = 2.0 * PI * cutoff / fs;
    let r1 = (-w).exp();
    let b1 = 2.0 * r1 * w.cos();
    let b2 = -r1 * r1;
    let a1 = -(1.0 + r1);
    let (mut y1, mut y2) = (0.0, 0.0);
    for v in x.iter_mut() {
        let y0 = b1 * y1 + b2 * y2 + *v;
        *v = y0 + a1 * y1 + r1 * y2;
        y2 = y1;
        y1 = y0;
    }
}
