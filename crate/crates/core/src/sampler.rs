//! Random rooms and source/microphone-pair constellations for training-set
//! generation, and the parallel dataset driver built on top of them.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::distance_to_class;
use crate::config::SynthConfig;
use crate::error::{Error, Result};
use crate::geometry::{DirectivityPattern, MicPair, Room, Scene, Source, Vec3};
use crate::ism::wall_reflection_coefficient;
use crate::synth::{synthesize, Rir};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerConfig {
    pub rooms: usize,
    pub constellations_per_room: usize,
    pub room_length: [f64; 2],
    pub room_width: [f64; 2],
    pub ceiling: [f64; 2],
    pub t60: [f64; 2],
    pub mic_spacing: f64,
    pub d_min: f64,
    pub d_max: f64,
    pub wall_margin: f64,
    pub vertical_margin: f64,
    /// Look azimuth relative to the line of sight toward the array, degrees.
    pub look_azimuth: [f64; 2],
    /// Look elevation relative to the line of sight, degrees.
    pub look_elevation: [f64; 2],
    pub source_pattern: DirectivityPattern,
    /// Increment used when rotating an infeasible DoA, degrees.
    pub doa_step: f64,
    pub max_retries: usize,
    pub seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            rooms: 10_000,
            constellations_per_room: 10,
            room_length: [5.0, 7.0],
            room_width: [5.0, 7.0],
            ceiling: [2.4, 3.0],
            t60: [0.2, 0.7],
            mic_spacing: 0.08,
            d_min: 0.3,
            d_max: 5.0,
            wall_margin: 0.5,
            vertical_margin: 1.0,
            look_azimuth: [-90.0, 90.0],
            look_elevation: [-15.0, 15.0],
            source_pattern: DirectivityPattern::Cardioid,
            doa_step: 1.0,
            max_retries: 100,
            seed: 0,
        }
    }
}

fn check_interval(name: &'static str, [lo, hi]: [f64; 2]) -> Result<()> {
    if !(lo.is_finite() && hi.is_finite()) || lo > hi {
        return Err(Error::param(
            name,
            format!("interval [{lo}, {hi}] is empty (min > max)"),
        ));
    }
    Ok(())
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        check_interval("sampler.room_length", self.room_length)?;
        check_interval("sampler.room_width", self.room_width)?;
        check_interval("sampler.ceiling", self.ceiling)?;
        check_interval("sampler.t60", self.t60)?;
        check_interval("sampler.look_azimuth", self.look_azimuth)?;
        check_interval("sampler.look_elevation", self.look_elevation)?;
        if self.room_length[0] <= 0.0 || self.room_width[0] <= 0.0 || self.ceiling[0] <= 0.0 {
            return Err(Error::param("sampler.room_length", "room dimensions must be positive"));
        }
        if self.t60[0] <= 0.0 {
            return Err(Error::param("sampler.t60", "reverberation time must be positive"));
        }
        if !(self.mic_spacing > 0.0) {
            return Err(Error::param("sampler.mic_spacing", "must be positive"));
        }
        if !(self.d_min > 0.0 && self.d_min < self.d_max) {
            return Err(Error::param("sampler.d_min", "need 0 < d_min < d_max"));
        }
        if !(self.wall_margin > 0.0 && self.vertical_margin > 0.0) {
            return Err(Error::param("sampler.wall_margin", "margins must be positive"));
        }
        let free_x = self.room_length[0].min(self.room_width[0]) - 2.0 * self.wall_margin;
        if free_x <= self.mic_spacing {
            return Err(Error::param(
                "sampler.wall_margin",
                "margins leave no room for the microphone pair in the smallest room",
            ));
        }
        if self.ceiling[0] - 2.0 * self.vertical_margin < 0.0 {
            return Err(Error::param(
                "sampler.vertical_margin",
                "margins leave no feasible height in the lowest room",
            ));
        }
        if !(self.doa_step > 0.0 && self.doa_step <= 360.0) {
            return Err(Error::param("sampler.doa_step", "must lie in (0, 360]"));
        }
        if self.max_retries == 0 {
            return Err(Error::param("sampler.max_retries", "must be at least 1"));
        }
        Ok(())
    }

    pub fn record_count(&self) -> usize {
        self.rooms * self.constellations_per_room
    }
}

fn uniform(rng: &mut impl Rng, [lo, hi]: [f64; 2]) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.gen_range(lo..=hi)
    }
}

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for a sub-stream identified by `path` under `master`.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter().fold(mix(master), |acc, &p| mix(acc ^ mix(p)))
}

const TAG_ROOM: u64 = 1;
const TAG_SCENE: u64 = 2;
const TAG_SYNTH: u64 = 3;

pub fn sample_room(cfg: &SamplerConfig, rng: &mut impl Rng) -> Room {
    Room {
        length: uniform(rng, cfg.room_length),
        width: uniform(rng, cfg.room_width),
        height: uniform(rng, cfg.ceiling),
        t60: uniform(rng, cfg.t60),
    }
}

/// Margin-shrunk placement box `(lo, hi)` for sources and microphones.
pub fn placement_box(room: &Room, cfg: &SamplerConfig) -> (Vec3, Vec3) {
    let (m, v) = (cfg.wall_margin, cfg.vertical_margin);
    (
        Vec3::new(m, m, v),
        Vec3::new(room.length - m, room.width - m, room.height - v),
    )
}

fn in_box(p: Vec3, (lo, hi): (Vec3, Vec3)) -> bool {
    (0..3).all(|i| p.0[i] >= lo.0[i] && p.0[i] <= hi.0[i])
}

/// Places the source at `distance` from `center` in its horizontal plane,
/// starting at world azimuth `azimuth` and rotating by `step` radians until
/// the position lies inside the placement box. Returns the position and the
/// number of increments taken.
pub fn place_source(
    bounds: (Vec3, Vec3),
    center: Vec3,
    distance: f64,
    azimuth: f64,
    step: f64,
) -> Option<(Vec3, usize)> {
    let steps = (2.0 * PI / step).ceil() as usize;
    (0..steps).find_map(|k| {
        let az = azimuth + k as f64 * step;
        let p = center + Vec3::from_angles(az, 0.0) * distance;
        in_box(p, bounds).then_some((p, k))
    })
}

/// Draws one source / microphone-pair constellation inside `room`.
pub fn sample_constellation(room: &Room, cfg: &SamplerConfig, rng: &mut impl Rng) -> Result<Scene> {
    let bounds = placement_box(room, cfg);
    let (lo, hi) = bounds;
    let half = 0.5 * cfg.mic_spacing;
    if hi.x() - lo.x() < cfg.mic_spacing || hi.y() - lo.y() < cfg.mic_spacing || hi.z() < lo.z() {
        return Err(Error::SamplerExhausted {
            attempts: 0,
            reason: "placement region is empty".into(),
        });
    }
    let step = cfg.doa_step.to_radians();

    for _ in 0..cfg.max_retries {
        let center = Vec3::new(
            uniform(rng, [lo.x() + half, hi.x() - half]),
            uniform(rng, [lo.y() + half, hi.y() - half]),
            uniform(rng, [lo.z(), hi.z()]),
        );
        let orientation = rng.gen_range(0.0..2.0 * PI);
        let largest = [lo.x(), hi.x()]
            .iter()
            .flat_map(|&x| [lo.y(), hi.y()].map(|y| Vec3::new(x, y, center.z())))
            .map(|corner| corner.distance(center))
            .fold(0.0, f64::max);
        let d_hi = cfg.d_max.min(largest);
        if d_hi < cfg.d_min {
            continue;
        }
        for _ in 0..cfg.max_retries {
            let distance = uniform(rng, [cfg.d_min, d_hi]);
            let doa = rng.gen_range(0.0..2.0 * PI);
            let Some((position, _)) = place_source(bounds, center, distance, orientation + doa, step)
            else {
                continue;
            };
            let los = center - position;
            let los_az = los.y().atan2(los.x());
            let los_el = los.z().atan2((los.x().powi(2) + los.y().powi(2)).sqrt());
            let source = Source {
                position,
                look_azimuth: los_az + uniform(rng, cfg.look_azimuth).to_radians(),
                look_elevation: los_el + uniform(rng, cfg.look_elevation).to_radians(),
                pattern: cfg.source_pattern,
            };
            let mics = MicPair::centered(center, orientation, cfg.mic_spacing)?;
            return Scene::new(*room, source, mics);
        }
    }
    Err(Error::SamplerExhausted {
        attempts: cfg.max_retries,
        reason: "no feasible source placement".into(),
    })
}

/// One generated example: scene, both impulse responses and the label.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetRecord {
    pub index: usize,
    pub room_idx: usize,
    pub constellation_idx: usize,
    /// Seed the impulse responses were synthesized from.
    pub seed: u64,
    /// Reasons for discarded draws before the accepted one.
    pub redraws: Vec<String>,
    pub scene: Scene,
    pub rirs: [Rir; 2],
    pub distance: f64,
    pub class_label: u32,
}

/// Room `room_idx` of the dataset; identical for every constellation in it.
pub fn dataset_room(cfg: &SamplerConfig, room_idx: usize) -> Result<Room> {
    for attempt in 0..cfg.max_retries {
        let mut rng =
            ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &[TAG_ROOM, room_idx as u64, attempt as u64]));
        let room = sample_room(cfg, &mut rng);
        if wall_reflection_coefficient(&room).is_ok() {
            return Ok(room);
        }
    }
    Err(Error::SamplerExhausted {
        attempts: cfg.max_retries,
        reason: format!("room {room_idx}: T60 unattainable for every draw"),
    })
}

/// Generates record `index` (room-major order). Failing draws are re-drawn
/// with a fresh sub-stream and their reasons kept on the record.
pub fn generate_record(cfg: &SamplerConfig, synth: &SynthConfig, index: usize) -> Result<DatasetRecord> {
    let per_room = cfg.constellations_per_room;
    let (room_idx, constellation_idx) = (index / per_room, index % per_room);
    let room = dataset_room(cfg, room_idx)?;
    let mut redraws = Vec::new();
    for attempt in 0..cfg.max_retries {
        let path = [room_idx as u64, constellation_idx as u64, attempt as u64];
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &[TAG_SCENE, path[0], path[1], path[2]]));
        let seed = derive_seed(cfg.seed, &[TAG_SYNTH, path[0], path[1], path[2]]);
        let outcome = sample_constellation(&room, cfg, &mut rng)
            .and_then(|scene| synthesize(&scene, synth, seed).map(|rirs| (scene, rirs)));
        match outcome {
            Ok((scene, rirs)) => {
                return Ok(DatasetRecord {
                    index,
                    room_idx,
                    constellation_idx,
                    seed,
                    redraws,
                    distance: scene.distance,
                    class_label: distance_to_class(scene.distance)?,
                    scene,
                    rirs,
                });
            }
            Err(e) => redraws.push(e.to_string()),
        }
    }
    Err(Error::SamplerExhausted {
        attempts: cfg.max_retries,
        reason: format!(
            "record {index}: {}",
            redraws.last().map(String::as_str).unwrap_or("no attempts")
        ),
    })
}

/// Records generated per parallel batch before they are handed to the sink.
const BATCH: usize = 64;

/// Generates records `start..` in index order, synthesizing on `workers`
/// threads and handing each record to `sink` on the calling thread.
/// Output does not depend on `workers`.
pub fn generate_dataset<F, E>(
    cfg: &SamplerConfig,
    synth: &SynthConfig,
    workers: usize,
    start: usize,
    mut sink: F,
) -> std::result::Result<usize, E>
where
    F: FnMut(DatasetRecord) -> std::result::Result<(), E>,
    E: From<Error>,
{
    cfg.validate()?;
    synth.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::param("workers", e.to_string()))?;
    let total = cfg.record_count();
    let mut emitted = 0;
    let mut next = start;
    while next < total {
        let end = (next + BATCH * workers.max(1)).min(total);
        let batch: Vec<Result<DatasetRecord>> =
            pool.install(|| (next..end).into_par_iter().map(|i| generate_record(cfg, synth, i)).collect());
        for record in batch {
            sink(record?)?;
            emitted += 1;
        }
        next = end;
    }
    Ok(emitted)
}
