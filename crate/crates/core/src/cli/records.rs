//! On-disk documents: run config, manifests, metadata lines and sidecars.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::CliError;
use crate::analysis::distance_to_class;
use crate::config::SynthConfig;
use crate::geometry::{DirectivityPattern, MicPair, Room, Scene, Source, Vec3};
use crate::sampler::{DatasetRecord, SamplerConfig};
use crate::synth::{Method, Rir};

pub const TOOL_NAME: &str = "rirsim";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

pub const MANIFEST_FILE: &str = "manifest.json";
pub const METADATA_FILE: &str = "metadata.jsonl";

/// Config file contents: a `[sampler]` and a `[synth]` table, both optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub sampler: SamplerConfig,
    pub synth: SynthConfig,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let de = toml::Deserializer::parse(text).map_err(|e| CliError::Config(e.to_string()))?;
        let cfg: RunConfig = serde_path_to_error::deserialize(de)
            .map_err(|e| CliError::Config(format!("at `{}`: {}", e.path(), e.inner().message())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.sampler
            .validate()
            .and_then(|_| self.synth.validate())
            .map_err(|e| CliError::Config(e.to_string()))
    }
}

/// Scene description in degrees, as given on the command line or in a file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSpec {
    pub room: Room,
    pub source: SourceSpec,
    pub array: ArraySpec,
    /// Exact microphone positions; derived from `array` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mic_positions: Option<[Vec3; 2]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSpec {
    pub position: Vec3,
    #[serde(default)]
    pub look_azimuth_deg: f64,
    #[serde(default)]
    pub look_elevation_deg: f64,
    #[serde(default = "default_pattern")]
    pub pattern: DirectivityPattern,
}

fn default_pattern() -> DirectivityPattern {
    DirectivityPattern::Cardioid
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArraySpec {
    pub center: Vec3,
    #[serde(default)]
    pub orientation_deg: f64,
    #[serde(default = "default_spacing")]
    pub spacing: f64,
}

fn default_spacing() -> f64 {
    0.08
}

impl SceneSpec {
    pub fn from_scene(scene: &Scene) -> Self {
        SceneSpec {
            room: scene.room,
            source: SourceSpec {
                position: scene.source.position,
                look_azimuth_deg: scene.source.look_azimuth.to_degrees(),
                look_elevation_deg: scene.source.look_elevation.to_degrees(),
                pattern: scene.source.pattern,
            },
            array: ArraySpec {
                center: scene.mics.center(),
                orientation_deg: scene.mics.orientation.to_degrees(),
                spacing: scene.mics.spacing,
            },
            mic_positions: Some(scene.mics.positions),
        }
    }

    pub fn to_scene(&self) -> crate::Result<Scene> {
        let orientation = self.array.orientation_deg.to_radians();
        let mics = match self.mic_positions {
            Some(positions) => {
                let pair = MicPair {
                    positions,
                    orientation,
                    spacing: self.array.spacing,
                };
                pair.validate()?;
                pair
            }
            None => MicPair::centered(self.array.center, orientation, self.array.spacing)?,
        };
        let source = Source {
            position: self.source.position,
            look_azimuth: self.source.look_azimuth_deg.to_radians(),
            look_elevation: self.source.look_elevation_deg.to_radians(),
            pattern: self.source.pattern,
        };
        Scene::new(self.room, source, mics)
    }
}

/// Per-microphone synthesis results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MicMeta {
    pub n_d: usize,
    /// Source to microphone distance in meters.
    pub distance: f64,
    pub eta: Option<f64>,
    pub eta_measured: Option<f64>,
    pub alpha: Option<f64>,
    pub tail_scale: Option<f64>,
    pub direct_scale: Option<f64>,
    pub truncated_images: usize,
}

impl MicMeta {
    pub fn from_rir(rir: &Rir) -> Self {
        MicMeta {
            n_d: rir.n_d,
            distance: rir.scene.mic_distance(rir.mic),
            eta: rir.target_drr,
            eta_measured: rir.measured_drr,
            alpha: rir.alpha,
            tail_scale: rir.tail_scale,
            direct_scale: rir.direct_scale,
            truncated_images: rir.truncated_images,
        }
    }
}

/// One line of `metadata.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetLine {
    pub index: usize,
    pub room_idx: usize,
    pub constellation_idx: usize,
    pub files: [String; 2],
    pub seed: u64,
    pub distance: f64,
    pub class: u32,
    pub t60: f64,
    pub scene: SceneSpec,
    pub mics: [MicMeta; 2],
    pub redraws: Vec<String>,
}

pub fn record_dir(room_idx: usize, constellation_idx: usize) -> PathBuf {
    PathBuf::from(format!("room_{room_idx:05}")).join(format!("const_{constellation_idx:02}"))
}

impl DatasetLine {
    pub fn from_record(rec: &DatasetRecord) -> Self {
        let dir = record_dir(rec.room_idx, rec.constellation_idx);
        let file = |m: usize| dir.join(format!("mic{m}.wav")).to_string_lossy().replace('\\', "/");
        DatasetLine {
            index: rec.index,
            room_idx: rec.room_idx,
            constellation_idx: rec.constellation_idx,
            files: [file(0), file(1)],
            seed: rec.seed,
            distance: rec.distance,
            class: rec.class_label,
            t60: rec.scene.room.t60,
            scene: SceneSpec::from_scene(&rec.scene),
            mics: [MicMeta::from_rir(&rec.rirs[0]), MicMeta::from_rir(&rec.rirs[1])],
            redraws: rec.redraws.clone(),
        }
    }
}

/// Sidecar written next to a single synthesized WAV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthDoc {
    pub tool_version: String,
    pub method: Method,
    pub seed: u64,
    pub image_order: usize,
    pub synth: SynthConfig,
    pub distance: f64,
    pub class: u32,
    pub scene: SceneSpec,
    pub mics: [MicMeta; 2],
}

impl SynthDoc {
    pub fn new(rirs: &[Rir; 2], synth: &SynthConfig, seed: u64, image_order: usize) -> crate::Result<Self> {
        let scene = &rirs[0].scene;
        Ok(SynthDoc {
            tool_version: TOOL_VERSION.into(),
            method: rirs[0].method,
            seed,
            image_order,
            synth: synth.clone(),
            distance: scene.distance,
            class: distance_to_class(scene.distance)?,
            scene: SceneSpec::from_scene(scene),
            mics: [MicMeta::from_rir(&rirs[0]), MicMeta::from_rir(&rirs[1])],
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordChecksum {
    pub index: usize,
    pub mic0: String,
    pub mic1: String,
    /// Digest of the record's metadata line without the newline.
    pub metadata: String,
}

/// Everything needed to regenerate a dataset and check the result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub config: RunConfig,
    pub seed: u64,
    pub record_count: usize,
    pub complete: bool,
    pub records: Vec<RecordChecksum>,
}

impl Manifest {
    pub fn new(config: RunConfig) -> Self {
        Manifest {
            tool: TOOL_NAME.into(),
            version: TOOL_VERSION.into(),
            seed: config.sampler.seed,
            record_count: config.sampler.record_count(),
            config,
            complete: false,
            records: Vec::new(),
        }
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut de = serde_json::Deserializer::from_str(&text);
        let m: Manifest = serde_path_to_error::deserialize(&mut de)
            .map_err(|e| CliError::Config(format!("{}: at `{}`: {}", path.display(), e.path(), e.inner())))?;
        m.config.validate()?;
        Ok(m)
    }

    /// Writes through a temporary file so an interrupted write leaves the
    /// previous manifest intact.
    pub fn store(&self, path: &Path) -> Result<(), CliError> {
        let tmp = path.with_extension("json.tmp");
        let text = serde_json::to_string_pretty(self).expect("manifest serializes") + "\n";
        std::fs::write(&tmp, text).map_err(|e| CliError::io(&tmp, e))?;
        std::fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> Result<String, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(sha256_hex(&bytes))
}

/// Parses every complete line of a metadata file. A trailing line without a
/// newline is treated as an interrupted write and ignored.
pub fn read_metadata(path: &Path) -> Result<Vec<DatasetLine>, CliError> {
    Ok(read_metadata_lines(path)?.into_iter().map(|(_, l)| l).collect())
}

/// Like [`read_metadata`], keeping each line's original text.
pub fn read_metadata_lines(path: &Path) -> Result<Vec<(String, DatasetLine)>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let complete = match text.rfind('\n') {
        Some(i) => &text[..=i],
        None => "",
    };
    complete
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l)
                .map(|parsed| (l.to_string(), parsed))
                .map_err(|e| CliError::Input(format!("{} line {}: {e}", path.display(), i + 1)))
        })
        .collect()
}
