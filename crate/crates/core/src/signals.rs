//! Microphone signal rendering and STFT features.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::synth::Rir;

#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    pub samples: Vec<f64>,
    pub fs: u32,
}

impl AudioClip {
    pub fn new(samples: Vec<f64>, fs: u32) -> Self {
        AudioClip { samples, fs }
    }

    pub fn power(&self) -> f64 {
        mean_power(&self.samples)
    }
}

pub fn mean_power(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64
}

/// First `out_len` samples of the linear convolution `x * h`.
pub fn convolve(x: &[f64], h: &[f64], out_len: usize) -> Vec<f64> {
    if x.is_empty() || h.is_empty() {
        return vec![0.0; out_len];
    }
    let full = x.len() + h.len() - 1;
    let size = full.next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(size);
    let inv = planner.plan_fft_inverse(size);

    let pad = |v: &[f64]| {
        let mut buf: Vec<Complex<f64>> = v.iter().map(|&r| Complex::new(r, 0.0)).collect();
        buf.resize(size, Complex::new(0.0, 0.0));
        buf
    };
    let mut a = pad(x);
    let mut b = pad(h);
    fwd.process(&mut a);
    fwd.process(&mut b);
    for (p, q) in a.iter_mut().zip(&b) {
        *p *= q;
    }
    inv.process(&mut a);
    let scale = 1.0 / size as f64;
    (0..out_len)
        .map(|n| if n < full { a[n].re * scale } else { 0.0 })
        .collect()
}

/// Adds white Gaussian noise `snr_db` below the signal's mean power.
/// Returns the noise variance used.
pub fn add_noise(y: &mut [f64], snr_db: f64, rng: &mut impl Rng) -> Result<f64> {
    let p = mean_power(y);
    if !(p > 0.0) {
        return Err(Error::ZeroEnergy);
    }
    let var = p * 10f64.powf(-snr_db / 10.0);
    let sd = var.sqrt();
    for v in y.iter_mut() {
        let g: f64 = StandardNormal.sample(rng);
        *v += sd * g;
    }
    Ok(var)
}

/// Scales all channels by one gain so the largest magnitude is 1.
pub fn normalize_joint(channels: &mut [Vec<f64>]) -> Result<f64> {
    let peak = channels
        .iter()
        .flat_map(|c| c.iter())
        .fold(0.0f64, |m, v| m.max(v.abs()));
    if !(peak > 0.0) {
        return Err(Error::ZeroEnergy);
    }
    let gain = 1.0 / peak;
    for c in channels.iter_mut() {
        for v in c.iter_mut() {
            *v *= gain;
        }
    }
    Ok(gain)
}

/// Convolves the first `duration` seconds of `clip` with both responses,
/// adds sensor noise per channel (if `snr_db` is given) and normalizes the
/// pair jointly into [-1, 1].
pub fn render_mics(
    rirs: &[Rir; 2],
    clip: &AudioClip,
    snr_db: Option<f64>,
    duration: f64,
    rng: &mut impl Rng,
) -> Result<[AudioClip; 2]> {
    for r in rirs {
        if r.fs != clip.fs {
            return Err(Error::SampleRateMismatch {
                expected: r.fs,
                actual: clip.fs,
            });
        }
    }
    render_pair([&rirs[0].samples, &rirs[1].samples], clip, snr_db, duration, rng)
}

/// [`render_mics`] for bare response samples at the clip's rate.
pub fn render_pair(
    responses: [&[f64]; 2],
    clip: &AudioClip,
    snr_db: Option<f64>,
    duration: f64,
    rng: &mut impl Rng,
) -> Result<[AudioClip; 2]> {
    let fs = clip.fs;
    if !(duration > 0.0) {
        return Err(Error::param("duration", "must be positive"));
    }
    let len = (duration * f64::from(fs)).round() as usize;
    if clip.samples.len() < len {
        return Err(Error::TooShort {
            needed: len,
            available: clip.samples.len(),
        });
    }
    let dry = &clip.samples[..len];
    if !(mean_power(dry) > 0.0) {
        return Err(Error::ZeroEnergy);
    }
    let mut channels: Vec<Vec<f64>> = responses.iter().map(|h| convolve(dry, h, len)).collect();
    if let Some(snr) = snr_db {
        for c in channels.iter_mut() {
            add_noise(c, snr, rng)?;
        }
    }
    normalize_joint(&mut channels)?;
    let mut it = channels.into_iter().map(|s| AudioClip::new(s, fs));
    Ok([it.next().unwrap(), it.next().unwrap()])
}

/// Symmetric Blackman window.
pub fn blackman(len: usize) -> Vec<f64> {
    if len == 1 {
        return vec![1.0];
    }
    let m = (len - 1) as f64;
    (0..len)
        .map(|n| {
            let x = n as f64 / m;
            0.42 - 0.5 * (2.0 * PI * x).cos() + 0.08 * (4.0 * PI * x).cos()
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StftLayout {
    pub win: usize,
    pub hop: usize,
    pub frames: usize,
    pub bins: usize,
}

impl StftLayout {
    pub fn new(fs: u32, win_ms: f64, hop_ms: f64, len: usize) -> Result<Self> {
        let win = (f64::from(fs) * win_ms / 1000.0).round() as usize;
        let hop = (f64::from(fs) * hop_ms / 1000.0).round() as usize;
        if win == 0 || hop == 0 {
            return Err(Error::param("win_ms/hop_ms", "window and hop must span at least one sample"));
        }
        if len < win {
            return Err(Error::TooShort {
                needed: win,
                available: len,
            });
        }
        Ok(StftLayout {
            win,
            hop,
            frames: (len - win) / hop + 1,
            bins: win / 2 + 1,
        })
    }
}

/// Feature planes laid out `[plane, frame, bin]`; per channel the planes
/// are magnitude, sin(phase), cos(phase).
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTensor {
    pub shape: [usize; 3],
    pub values: Vec<f32>,
    pub layout: StftLayout,
    pub fs: u32,
}

impl FeatureTensor {
    pub fn plane(&self, p: usize) -> &[f32] {
        let n = self.shape[1] * self.shape[2];
        &self.values[p * n..(p + 1) * n]
    }

    pub fn at(&self, plane: usize, frame: usize, bin: usize) -> f32 {
        self.values[(plane * self.shape[1] + frame) * self.shape[2] + bin]
    }

    pub fn to_le_bytes(&self) -> Vec<u8> {
        self.values.iter().flat_map(|v| v.to_le_bytes()).collect()
    }

    pub fn sidecar(&self) -> FeatureSidecar {
        let channels = self.shape[0] / 3;
        FeatureSidecar {
            dtype: "float32".into(),
            byte_order: "little".into(),
            shape: self.shape,
            axes: ["plane".into(), "frame".into(), "bin".into()],
            planes: (0..channels)
                .flat_map(|c| {
                    ["magnitude", "sin_phase", "cos_phase"].map(|k| format!("mic{c}_{k}"))
                })
                .collect(),
            fs: self.fs,
            win: self.layout.win,
            hop: self.layout.hop,
            window: "blackman".into(),
        }
    }

    /// Writes `<base>.f32` and the `<base>.json` sidecar.
    pub fn write(&self, base: &Path) -> std::io::Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(base.with_extension("f32"))?);
        f.write_all(&self.to_le_bytes())?;
        f.flush()?;
        let json = serde_json::to_string_pretty(&self.sidecar())?;
        std::fs::write(base.with_extension("json"), json + "\n")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSidecar {
    pub dtype: String,
    pub byte_order: String,
    pub shape: [usize; 3],
    pub axes: [String; 3],
    pub planes: Vec<String>,
    pub fs: u32,
    pub win: usize,
    pub hop: usize,
    pub window: String,
}

/// Magnitude and phase planes of the Blackman-windowed STFT of each channel.
pub fn stft_features(channels: &[AudioClip], win_ms: f64, hop_ms: f64) -> Result<FeatureTensor> {
    let first = channels
        .first()
        .ok_or_else(|| Error::param("channels", "need at least one channel"))?;
    for c in channels {
        if c.samples.len() != first.samples.len() {
            return Err(Error::LengthMismatch {
                left: first.samples.len(),
                right: c.samples.len(),
            });
        }
        if c.fs != first.fs {
            return Err(Error::SampleRateMismatch {
                expected: first.fs,
                actual: c.fs,
            });
        }
    }
    let layout = StftLayout::new(first.fs, win_ms, hop_ms, first.samples.len())?;
    let window = blackman(layout.win);
    let fft = FftPlanner::<f64>::new().plan_fft_forward(layout.win);
    let plane_len = layout.frames * layout.bins;
    let mut values = vec![0.0f32; 3 * channels.len() * plane_len];
    let mut buf = vec![Complex::new(0.0, 0.0); layout.win];

    for (c, clip) in channels.iter().enumerate() {
        let base = 3 * c * plane_len;
        for t in 0..layout.frames {
            let seg = &clip.samples[t * layout.hop..t * layout.hop + layout.win];
            for ((b, &x), &w) in buf.iter_mut().zip(seg).zip(&window) {
                *b = Complex::new(x * w, 0.0);
            }
            fft.process(&mut buf);
            for (k, z) in buf.iter().take(layout.bins).enumerate() {
                let mag = z.norm();
                let (s, co) = if mag > 0.0 { (z.im / mag, z.re / mag) } else { (0.0, 1.0) };
                let idx = t * layout.bins + k;
                values[base + idx] = mag as f32;
                values[base + plane_len + idx] = s as f32;
                values[base + 2 * plane_len + idx] = co as f32;
            }
        }
    }
    Ok(FeatureTensor {
        shape: [3 * channels.len(), layout.frames, layout.bins],
        values,
        layout,
        fs: first.fs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{DirectivityPattern, MicPair, Room, Scene, Source, Vec3};
    use crate::synth::Method;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rir_from(samples: Vec<f64>) -> Rir {
        let room = Room::new(5.0, 5.0, 2.5, 0.3).unwrap();
        let mics = MicPair::centered(Vec3::new(2.0, 2.0, 1.2), 0.0, 0.08).unwrap();
        let source = Source {
            position: Vec3::new(3.0, 3.0, 1.2),
            look_azimuth: 0.0,
            look_elevation: 0.0,
            pattern: DirectivityPattern::Cardioid,
        };
        Rir {
            samples,
            fs: 16000,
            mic: 0,
            n_d: 0,
            target_drr: None,
            measured_drr: None,
            scene: Scene::new(room, source, mics).unwrap(),
            seed: 0,
            method: Method::IsmOnly,
            alpha: None,
            tail_scale: None,
            direct_scale: None,
            truncated_images: 0,
        }
    }

    fn noise_clip(len: usize, seed: u64) -> AudioClip {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        AudioClip::new((0..len).map(|_| rng.gen_range(-0.5..0.5)).collect(), 16000)
    }

    fn direct_convolution(x: &[f64], h: &[f64], out_len: usize) -> Vec<f64> {
        (0..out_len)
            .map(|n| {
                (0..h.len())
                    .filter(|&k| k <= n && n - k < x.len())
                    .map(|k| h[k] * x[n - k])
                    .sum()
            })
            .collect()
    }

    #[test]
    fn fft_convolution_matches_direct_sum() {
        let x = noise_clip(300, 1).samples;
        let h = noise_clip(77, 2).samples;
        let fast = convolve(&x, &h, 400);
        let slow = direct_convolution(&x, &h, 400);
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn unit_impulse_returns_scaled_input() {
        let clip = noise_clip(16000, 3);
        let mut delta = vec![0.0; 64];
        delta[0] = 1.0;
        let rirs = [rir_from(delta.clone()), rir_from(delta)];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let out = render_mics(&rirs, &clip, None, 1.0, &mut rng).unwrap();
        let peak = clip.samples.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (o, x) in out[0].samples.iter().zip(&clip.samples) {
            assert!((o - x / peak).abs() < 1e-12);
        }
        assert_eq!(out[0].samples, out[1].samples);
    }

    #[test]
    fn injected_noise_matches_snr() {
        let mut y = noise_clip(16000, 4).samples;
        let clean = y.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        add_noise(&mut y, 40.0, &mut rng).unwrap();
        let noise: Vec<f64> = y.iter().zip(&clean).map(|(a, b)| a - b).collect();
        let ratio = mean_power(&noise) / mean_power(&clean);
        assert!((ratio / 1e-4 - 1.0).abs() < 0.05, "{ratio}");
    }

    #[test]
    fn normalized_pair_peaks_at_one() {
        let clip = noise_clip(16000, 6);
        let mut h0 = vec![0.0; 100];
        h0[3] = 0.7;
        h0[50] = 0.2;
        let mut h1 = vec![0.0; 100];
        h1[5] = 0.3;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let out = render_mics(&[rir_from(h0), rir_from(h1)], &clip, Some(50.0), 1.0, &mut rng).unwrap();
        let peak = out
            .iter()
            .flat_map(|c| c.samples.iter())
            .fold(0.0f64, |m, v| m.max(v.abs()));
        assert_eq!(peak, 1.0);
    }

    #[test]
    fn silent_clip_and_rate_mismatch() {
        let rirs = [rir_from(vec![1.0; 4]), rir_from(vec![1.0; 4])];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let silent = AudioClip::new(vec![0.0; 16000], 16000);
        assert_eq!(render_mics(&rirs, &silent, Some(40.0), 1.0, &mut rng), Err(Error::ZeroEnergy));
        let slow = AudioClip::new(vec![0.1; 8000], 8000);
        assert!(matches!(
            render_mics(&rirs, &slow, Some(40.0), 1.0, &mut rng),
            Err(Error::SampleRateMismatch { .. })
        ));
        let short = AudioClip::new(vec![0.1; 100], 16000);
        assert!(matches!(
            render_mics(&rirs, &short, None, 1.0, &mut rng),
            Err(Error::TooShort { .. })
        ));
    }

    #[test]
    fn normalization_keeps_power_ratio() {
        let mut ch = vec![noise_clip(5000, 7).samples, noise_clip(5000, 8).samples];
        for v in ch[1].iter_mut() {
            *v *= 0.3;
        }
        let before = mean_power(&ch[0]) / mean_power(&ch[1]);
        normalize_joint(&mut ch).unwrap();
        let after = mean_power(&ch[0]) / mean_power(&ch[1]);
        assert!((after / before - 1.0).abs() < 1e-9);
    }

    #[test]
    fn stft_shape_and_sinusoid_peak() {
        let fs = 16000;
        let len = 16000;
        let layout = StftLayout::new(fs, 25.0, 10.0, len).unwrap();
        assert_eq!((layout.win, layout.hop), (400, 160));
        assert_eq!(layout.frames, (len - 400) / 160 + 1);
        assert_eq!(layout.bins, 201);

        // Bin 25 of a 400-point FFT at 16 kHz is 1 kHz.
        let bin = 25;
        let f = bin as f64 * fs as f64 / 400.0;
        let tone: Vec<f64> = (0..len).map(|n| (2.0 * PI * f * n as f64 / fs as f64).sin()).collect();
        let clip = AudioClip::new(tone, fs);
        let feats = stft_features(&[clip.clone(), clip], 25.0, 10.0).unwrap();
        assert_eq!(feats.shape, [6, layout.frames, 201]);
        for t in 0..layout.frames {
            let best = (0..201)
                .max_by(|&a, &b| feats.at(0, t, a).total_cmp(&feats.at(0, t, b)))
                .unwrap();
            assert_eq!(best, bin);
        }
        for p in 0..3 {
            assert_eq!(feats.plane(p), feats.plane(p + 3));
        }
    }

    #[test]
    fn silent_frames_have_unit_cosine() {
        let clip = AudioClip::new(vec![0.0; 1000], 16000);
        let feats = stft_features(&[clip], 25.0, 10.0).unwrap();
        assert!(feats.plane(0).iter().all(|&v| v == 0.0));
        assert!(feats.plane(1).iter().all(|&v| v == 0.0));
        assert!(feats.plane(2).iter().all(|&v| v == 1.0));
    }

    #[test]
    fn stft_rejects_short_and_unequal() {
        let short = AudioClip::new(vec![0.1; 100], 16000);
        assert!(matches!(stft_features(&[short], 25.0, 10.0), Err(Error::TooShort { .. })));
        let a = AudioClip::new(vec![0.1; 1000], 16000);
        let b = AudioClip::new(vec![0.1; 1001], 16000);
        assert!(matches!(stft_features(&[a, b], 25.0, 10.0), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn blackman_is_symmetric() {
        let w = blackman(400);
        assert!(w[0].abs() < 1e-12);
        for n in 0..200 {
            assert!((w[n] - w[399 - n]).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn convolution_is_linear(seed in any::<u64>()) {
            let x = noise_clip(500, seed).samples;
            let a = noise_clip(60, seed ^ 1).samples;
            let b = noise_clip(60, seed ^ 2).samples;
            let ab: Vec<f64> = a.iter().zip(&b).map(|(p, q)| p + q).collect();
            let lhs = convolve(&x, &ab, 500);
            let ra = convolve(&x, &a, 500);
            let rb = convolve(&x, &b, 500);
            for n in 0..500 {
                prop_assert!((lhs[n] - ra[n] - rb[n]).abs() < 1e-9);
            }
        }

        #[test]
        fn phase_planes_are_unit(seed in any::<u64>()) {
            let clip = noise_clip(2000, seed);
            let feats = stft_features(&[clip], 25.0, 10.0).unwrap();
            for ((m, s), c) in feats.plane(0).iter().zip(feats.plane(1)).zip(feats.plane(2)) {
                if *m > 0.0 {
                    prop_assert!(((s * s + c * c) as f64 - 1.0).abs() < 1e-6);
                }
            }
        }
    }
}
