//! End-to-end impulse response synthesis and the baselines it is compared to.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::{drr_ranges, measure_drr};
use crate::config::{SynthConfig, TailSolve};
use crate::error::{Error, Result};
use crate::geometry::{DirectivityPattern, Scene, Source};
use crate::ism::{highpass, render_early_with_order};
use crate::tail::{decay_rate, generate_tail, tail_envelope, target_drr_at, EnergyForms};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Image sources up to the configured order plus the scaled stochastic tail.
    Proposed,
    IsmOnly,
    DrrAugmented,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Proposed => "proposed",
            Method::IsmOnly => "ism_only",
            Method::DrrAugmented => "drr_augmented",
        }
    }
}

/// Synthesized impulse response for one microphone plus its provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rir {
    #[serde(skip)]
    pub samples: Vec<f64>,
    pub fs: u32,
    pub mic: usize,
    pub n_d: usize,
    pub target_drr: Option<f64>,
    pub measured_drr: Option<f64>,
    pub scene: Scene,
    pub seed: u64,
    pub method: Method,
    pub alpha: Option<f64>,
    pub tail_scale: Option<f64>,
    pub direct_scale: Option<f64>,
    pub truncated_images: usize,
}

fn draw_alpha(cfg: &SynthConfig, rng: &mut impl Rng) -> f64 {
    let [lo, hi] = cfg.alpha_range;
    if lo == hi {
        lo
    } else {
        rng.gen_range(lo..=hi)
    }
}

/// Hybrid synthesis for both microphones of the scene's pair.
///
/// The early part is rendered from image sources and high-passed, then a
/// stochastic tail is added with the scale that makes the DRR of the sum hit
/// the geometric target. Microphones share the source directivity factor but
/// get independent tail realizations.
pub fn synthesize(scene: &Scene, cfg: &SynthConfig, seed: u64) -> Result<[Rir; 2]> {
    cfg.validate()?;
    scene.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let alpha = draw_alpha(cfg, &mut rng);
    let tail_seeds: [u64; 2] = [rng.gen(), rng.gen()];
    let delta = decay_rate(scene.room.t60)?;

    let render = |mic: usize| -> Result<Rir> {
        let mut early = render_early_with_order(scene, mic, cfg, cfg.image_order)?;
        if cfg.highpass {
            early = highpass(early, cfg);
        }
        let n_d = early.n_d;
        let tail = generate_tail(n_d, delta, cfg, tail_seeds[mic])?;
        let target = target_drr_at(
            &scene.room,
            &scene.source,
            scene.mics.positions[mic],
            alpha,
            cfg.beta,
        )?;
        let forms = match cfg.tail_solve {
            TailSolve::Realization => {
                EnergyForms::from_signals(&early.samples, &tail.samples, n_d, cfg.drr_window)?
            }
            TailSolve::Expectation => {
                let envelope: Vec<f64> = (0..cfg.n_samples)
                    .map(|n| tail_envelope(n, n_d, delta, cfg))
                    .collect();
                EnergyForms::expected(&early.samples, &envelope, n_d, cfg.drr_window)?
            }
        };
        let scale = forms.solve(target.eta)?;
        let samples: Vec<f64> = early
            .samples
            .iter()
            .zip(&tail.samples)
            .map(|(e, t)| e + scale * t)
            .collect();
        let measured = measure_drr(&samples, n_d, cfg.drr_window)?;
        Ok(Rir {
            samples,
            fs: cfg.fs,
            mic,
            n_d,
            target_drr: Some(target.eta),
            measured_drr: Some(measured),
            scene: *scene,
            seed,
            method: Method::Proposed,
            alpha: Some(alpha),
            tail_scale: Some(scale),
            direct_scale: None,
            truncated_images: early.truncated_images,
        })
    };
    Ok([render(0)?, render(1)?])
}

/// Pure image-source response with reflections up to `max_order`.
pub fn synthesize_ism_only(scene: &Scene, cfg: &SynthConfig, max_order: usize) -> Result<[Rir; 2]> {
    cfg.validate()?;
    scene.validate()?;
    let render = |mic: usize| -> Result<Rir> {
        let mut early = render_early_with_order(scene, mic, cfg, max_order)?;
        if cfg.highpass {
            early = highpass(early, cfg);
        }
        let measured = measure_drr(&early.samples, early.n_d, cfg.drr_window).ok();
        Ok(Rir {
            samples: early.samples,
            fs: cfg.fs,
            mic,
            n_d: early.n_d,
            target_drr: None,
            measured_drr: measured,
            scene: *scene,
            seed: 0,
            method: Method::IsmOnly,
            alpha: None,
            tail_scale: None,
            direct_scale: None,
            truncated_images: early.truncated_images,
        })
    };
    Ok([render(0)?, render(1)?])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum DrrAugmentMode {
    /// Direct window scaled by a factor drawn from U(1, 3).
    RandomScale,
    /// Direct window scaled to meet the geometric DRR target, evaluating the
    /// directional response with `pattern`.
    TargetEq4 { pattern: DirectivityPattern },
}

/// Multiplies `[n_d - w, n_d + w]` by `factor`.
pub fn scale_direct_window(samples: &mut [f64], n_d: usize, w: usize, factor: f64) -> Result<()> {
    let (direct, _) = drr_ranges(samples.len(), n_d, w)?;
    for v in &mut samples[direct] {
        *v *= factor;
    }
    Ok(())
}

/// Direct-path scaling augmentation applied to an existing response.
pub fn drr_augment(
    rir: &Rir,
    cfg: &SynthConfig,
    mode: DrrAugmentMode,
    rng: &mut impl Rng,
) -> Result<Rir> {
    let w = cfg.drr_window;
    let (direct, late) = drr_ranges(rir.samples.len(), rir.n_d, w)?;
    let (factor, target, alpha) = match mode {
        DrrAugmentMode::RandomScale => (rng.gen_range(1.0..3.0), None, None),
        DrrAugmentMode::TargetEq4 { pattern } => {
            let alpha = draw_alpha(cfg, rng);
            let scene = &rir.scene;
            let source = Source {
                pattern,
                ..scene.source
            };
            let target = target_drr_at(
                &scene.room,
                &source,
                scene.mics.positions[rir.mic],
                alpha,
                cfg.beta,
            )?;
            let e_direct: f64 = rir.samples[direct].iter().map(|v| v * v).sum();
            let e_late: f64 = rir.samples[late].iter().map(|v| v * v).sum();
            if !(target.eta > 0.0 && e_direct > 0.0 && e_late > 0.0) {
                return Err(Error::InfeasibleDrr {
                    requested: target.eta,
                    attainable: if e_late > 0.0 && e_direct > 0.0 {
                        f64::INFINITY
                    } else {
                        0.0
                    },
                });
            }
            (
                (target.eta * e_late / e_direct).sqrt(),
                Some(target.eta),
                Some(alpha),
            )
        }
    };
    let mut out = rir.clone();
    scale_direct_window(&mut out.samples, out.n_d, w, factor)?;
    out.method = Method::DrrAugmented;
    out.target_drr = target;
    out.alpha = alpha;
    out.direct_scale = Some(factor);
    out.measured_drr = measure_drr(&out.samples, out.n_d, w).ok();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{MicPair, Room, Vec3};
    use std::f64::consts::PI;

    fn scene(pattern: DirectivityPattern, src: Vec3, look_az: f64) -> Scene {
        let room = Room::new(6.0, 5.5, 2.7, 0.45).unwrap();
        let mics = MicPair::centered(Vec3::new(3.2, 2.5, 1.4), 0.4, 0.08).unwrap();
        let source = Source {
            position: src,
            look_azimuth: look_az,
            look_elevation: 0.05,
            pattern,
        };
        Scene::new(room, source, mics).unwrap()
    }

    fn looking_at_array(src: Vec3) -> f64 {
        let c = Vec3::new(3.2, 2.5, 1.4) - src;
        c.y().atan2(c.x())
    }

    #[test]
    fn proposed_hits_target() {
        let src = Vec3::new(1.2, 1.3, 1.4);
        let s = scene(DirectivityPattern::Cardioid, src, looking_at_array(src) + 0.3);
        let cfg = SynthConfig::default();
        for rir in synthesize(&s, &cfg, 42).unwrap() {
            let eta = rir.target_drr.unwrap();
            let got = measure_drr(&rir.samples, rir.n_d, 40).unwrap();
            assert!((got / eta - 1.0).abs() < 1e-6);
            assert_eq!(rir.n_d, cfg.delay_samples(s.mic_distance(rir.mic)));
            let alpha = rir.alpha.unwrap();
            assert!((2.5..=5.5).contains(&alpha));
        }
    }

    #[test]
    fn pair_shares_alpha_and_is_deterministic() {
        let src = Vec3::new(1.0, 4.0, 1.3);
        let s = scene(DirectivityPattern::Cardioid, src, looking_at_array(src));
        let cfg = SynthConfig::default();
        let a = synthesize(&s, &cfg, 9).unwrap();
        let b = synthesize(&s, &cfg, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(a[0].samples, b[0].samples);
        assert_eq!(a[0].alpha, a[1].alpha);
        assert_ne!(a[0].samples, a[1].samples);
    }

    #[test]
    fn close_source_is_mostly_geometric() {
        let src = Vec3::new(3.2, 2.5 - 0.3, 1.4);
        let s = scene(
            DirectivityPattern::Cardioid,
            src,
            looking_at_array(src),
        );
        let cfg = SynthConfig {
            alpha_range: [3.0, 3.0],
            ..Default::default()
        };
        let rir = &synthesize(&s, &cfg, 1).unwrap()[0];
        assert!(rir.target_drr.unwrap() > 1.0);
        let early = highpass(render_early_with_order(&s, 0, &cfg, 3).unwrap(), &cfg);
        let total: f64 = rir.samples.iter().map(|v| v * v).sum();
        let tail_part: f64 = rir
            .samples
            .iter()
            .zip(&early.samples)
            .map(|(h, e)| (h - e).powi(2))
            .sum();
        assert!(tail_part < 0.1 * total, "{}", tail_part / total);
    }

    #[test]
    fn tail_is_not_highpassed() {
        // Removing the high-passed early part must leave exactly the scaled
        // raw tail realization.
        let src = Vec3::new(1.5, 1.0, 1.4);
        let s = scene(DirectivityPattern::Cardioid, src, looking_at_array(src));
        let cfg = SynthConfig::default();
        let rir = &synthesize(&s, &cfg, 5).unwrap()[1];
        let early = highpass(render_early_with_order(&s, 1, &cfg, 3).unwrap(), &cfg);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let _alpha: f64 = rng.gen_range(2.5..=5.5);
        let seeds: [u64; 2] = [rng.gen(), rng.gen()];
        let tail = generate_tail(
            rir.n_d,
            decay_rate(s.room.t60).unwrap(),
            &cfg,
            seeds[1],
        )
        .unwrap();
        let scale = rir.tail_scale.unwrap();
        for ((h, e), t) in rir.samples.iter().zip(&early.samples).zip(&tail.samples) {
            assert!((h - e - scale * t).abs() < 1e-12);
        }
    }

    #[test]
    fn expectation_solve_is_close_but_not_exact() {
        let src = Vec3::new(1.2, 1.3, 1.4);
        let s = scene(DirectivityPattern::Cardioid, src, looking_at_array(src));
        let cfg = SynthConfig {
            tail_solve: TailSolve::Expectation,
            ..Default::default()
        };
        for rir in synthesize(&s, &cfg, 3).unwrap() {
            let ratio = rir.measured_drr.unwrap() / rir.target_drr.unwrap();
            assert!((ratio - 1.0).abs() < 0.5, "{ratio}");
        }
    }

    #[test]
    fn ism_order_zero_is_single_impulse() {
        let src = Vec3::new(1.2, 1.3, 1.4);
        let s = scene(DirectivityPattern::Omnidirectional, src, 0.0);
        let cfg = SynthConfig {
            highpass: false,
            ..Default::default()
        };
        let rirs = synthesize_ism_only(&s, &cfg, 0).unwrap();
        let nz: Vec<usize> = rirs[0]
            .samples
            .iter()
            .enumerate()
            .filter(|(_, v)| v.abs() > 0.0)
            .map(|(i, _)| i)
            .collect();
        assert!(nz.len() <= crate::ism::KERNEL_TAPS);
        assert!(nz.iter().all(|&i| i.abs_diff(rirs[0].n_d) <= 40));
        assert!(rirs[0].measured_drr.is_none());
    }

    #[test]
    fn ism_energy_grows_with_order() {
        let src = Vec3::new(1.2, 1.3, 1.4);
        let s = scene(DirectivityPattern::Cardioid, src, 0.7);
        let cfg = SynthConfig {
            highpass: false,
            ..Default::default()
        };
        let energies: Vec<f64> = (0..6)
            .map(|k| {
                synthesize_ism_only(&s, &cfg, k).unwrap()[0]
                    .samples
                    .iter()
                    .map(|v| v * v)
                    .sum()
            })
            .collect();
        assert!(energies.windows(2).all(|p| p[1] >= p[0] * 0.98), "{energies:?}");
        assert!(energies[5] > energies[0]);
    }

    #[test]
    fn cardioid_direct_peak_scales_with_gain() {
        let src = Vec3::new(1.2, 1.3, 1.4);
        let look = looking_at_array(src) + 1.1;
        let cfg = SynthConfig {
            highpass: false,
            ..Default::default()
        };
        let omni = synthesize_ism_only(&scene(DirectivityPattern::Omnidirectional, src, look), &cfg, 0).unwrap();
        let card = synthesize_ism_only(&scene(DirectivityPattern::Cardioid, src, look), &cfg, 0).unwrap();
        let s = scene(DirectivityPattern::Cardioid, src, look);
        let d = crate::geometry::angle_between(&s.source, s.mics.positions[0]).unwrap();
        let gain = crate::geometry::directivity_gain(DirectivityPattern::Cardioid, d.polar);
        let peak = |x: &[f64]| x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!((peak(&card[0].samples) / peak(&omni[0].samples) - gain).abs() < 1e-9);
    }

    #[test]
    fn augmentation_modes() {
        let src = Vec3::new(1.2, 1.3, 1.4);
        let s = scene(DirectivityPattern::Omnidirectional, src, 0.0);
        let cfg = SynthConfig::default();
        let base = &synthesize_ism_only(&s, &cfg, 12).unwrap()[0];

        let mut same = base.samples.clone();
        scale_direct_window(&mut same, base.n_d, 40, 1.0).unwrap();
        assert_eq!(same, base.samples);

        let mut doubled = base.samples.clone();
        scale_direct_window(&mut doubled, base.n_d, 40, 2.0).unwrap();
        let (direct, late) = drr_ranges(same.len(), base.n_d, 40).unwrap();
        let e = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>();
        assert!((e(&doubled[direct.clone()]) / e(&base.samples[direct]) - 4.0).abs() < 1e-12);
        assert_eq!(e(&doubled[late.clone()]), e(&base.samples[late]));

        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let aug = drr_augment(
            base,
            &cfg,
            DrrAugmentMode::TargetEq4 {
                pattern: DirectivityPattern::Cardioid,
            },
            &mut rng,
        )
        .unwrap();
        let got = measure_drr(&aug.samples, aug.n_d, 40).unwrap();
        assert!((got / aug.target_drr.unwrap() - 1.0).abs() < 1e-9);

        let rnd = drr_augment(base, &cfg, DrrAugmentMode::RandomScale, &mut rng).unwrap();
        let f = rnd.direct_scale.unwrap();
        assert!((1.0..3.0).contains(&f));
    }

    #[test]
    fn facing_away_is_infeasible() {
        // Source on the array axis facing directly away: cardioid null.
        let mics_center = Vec3::new(3.2, 2.5, 1.4);
        let room = Room::new(6.0, 5.5, 2.7, 0.45).unwrap();
        let mut mics = MicPair::centered(mics_center, PI / 2.0, 0.08).unwrap();
        mics.positions = [Vec3::new(3.2, 2.46, 1.4), Vec3::new(3.2, 2.54, 1.4)];
        let source = Source {
            position: Vec3::new(3.2, 1.0, 1.4),
            look_azimuth: -PI / 2.0,
            look_elevation: 0.0,
            pattern: DirectivityPattern::Cardioid,
        };
        let s = Scene::new(room, source, mics).unwrap();
        assert!(matches!(
            synthesize(&s, &SynthConfig::default(), 0),
            Err(Error::InfeasibleDrr { .. })
        ));
    }
}
