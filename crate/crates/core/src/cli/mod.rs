//! Command-line front end: dataset generation, single-scene synthesis,
//! verification reports and feature extraction.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::Error;
use crate::geometry::DirectivityPattern;

/// `println!` that ignores a closed stdout.
macro_rules! say {
    ($($t:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout(), $($t)*);
    }};
}

mod features;
mod generate;
pub mod records;
mod synth;
mod verify;

pub use features::cmd_features;
pub use generate::cmd_generate;
pub use synth::cmd_synth;
pub use verify::{cmd_verify, VerifyReport};

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_INFEASIBLE: u8 = 3;
pub const EXIT_VERIFY: u8 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("invalid config: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Wav {
        path: PathBuf,
        source: hound::Error,
    },
    #[error("{0}")]
    Input(String),
    #[error("verification failed: {0}")]
    Verification(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn wav(path: &Path, source: hound::Error) -> Self {
        CliError::Wav {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => EXIT_CONFIG,
            CliError::Verification(_) => EXIT_VERIFY,
            CliError::Io { .. } | CliError::Wav { .. } | CliError::Input(_) => EXIT_FAILURE,
            CliError::Core(e) => match e {
                Error::InvalidParameter { .. }
                | Error::DegenerateGeometry(_)
                | Error::OutsideRoom { .. }
                | Error::SampleRateMismatch { .. } => EXIT_CONFIG,
                Error::InfeasibleRoom { .. }
                | Error::InfeasibleDrr { .. }
                | Error::SamplerExhausted { .. } => EXIT_INFEASIBLE,
                _ => EXIT_FAILURE,
            },
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "rirsim", version, about = "Room impulse response synthesis with DRR targeting")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a dataset of random scenes and their impulse responses.
    Generate(GenerateArgs),
    /// Synthesize the two impulse responses of one scene into a stereo WAV.
    Synth(SynthArgs),
    /// Check a dataset directory or a single synthesized WAV.
    Verify(VerifyArgs),
    /// Render microphone signals from a dataset and extract STFT features.
    Features(FeaturesArgs),
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// TOML file with optional [sampler] and [synth] tables.
    #[arg(long, conflicts_with = "manifest")]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Master seed; overrides sampler.seed.
    #[arg(long, conflicts_with = "manifest")]
    pub seed: Option<u64>,
    /// Worker threads. Output does not depend on this.
    #[arg(long, env = "RIRSIM_WORKERS")]
    pub workers: Option<usize>,
    /// Regenerate from an existing manifest and compare checksums.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Continue an interrupted run in `--out`.
    #[arg(long)]
    pub resume: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SynthMethod {
    Proposed,
    Ism,
    DrrAug,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AugMode {
    /// Direct window scaled by a factor drawn from U(1, 3).
    Random,
    /// Direct window scaled to meet the geometric DRR target.
    Target,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Scene JSON file (degrees). Replaces the scene flags.
    #[arg(long, conflicts_with_all = ["room", "t60", "source", "array_center"])]
    pub scene: Option<PathBuf>,
    /// Room length, width, height in meters.
    #[arg(long, value_delimiter = ',', value_name = "X,Y,Z", required_unless_present = "scene")]
    pub room: Option<Vec<f64>>,
    /// Reverberation time in seconds.
    #[arg(long, required_unless_present = "scene")]
    pub t60: Option<f64>,
    /// Source position x,y,z in meters.
    #[arg(long, value_delimiter = ',', value_name = "X,Y,Z", required_unless_present = "scene", allow_negative_numbers = true)]
    pub source: Option<Vec<f64>>,
    /// Source look azimuth in degrees.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub look_azimuth: f64,
    /// Source look elevation in degrees.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub look_elevation: f64,
    #[arg(long, default_value = "cardioid")]
    pub pattern: DirectivityPattern,
    /// Microphone pair center x,y,z in meters.
    #[arg(long, value_delimiter = ',', value_name = "X,Y,Z", required_unless_present = "scene", allow_negative_numbers = true)]
    pub array_center: Option<Vec<f64>>,
    /// Azimuth of the microphone axis in degrees.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub array_orientation: f64,
    /// Microphone spacing in meters.
    #[arg(long, default_value_t = 0.08)]
    pub spacing: f64,
    #[arg(long, value_enum, default_value_t = SynthMethod::Proposed)]
    pub method: SynthMethod,
    /// Maximum reflection order (defaults to synth.image_order).
    #[arg(long)]
    pub order: Option<usize>,
    #[arg(long, value_enum, default_value_t = AugMode::Target)]
    pub aug_mode: AugMode,
    /// Directivity used for the augmentation target (defaults to --pattern).
    #[arg(long)]
    pub aug_pattern: Option<DirectivityPattern>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// TOML file; only its [synth] table is used.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output WAV; the metadata sidecar goes next to it with a .json extension.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Dataset directory or a WAV written by `synth`.
    pub path: PathBuf,
    /// Allowed relative DRR error against the stored target.
    #[arg(long, default_value_t = 1e-5)]
    pub drr_tolerance: f64,
    /// Relative T60 band used for the batch statistics.
    #[arg(long, default_value_t = 0.1)]
    pub t60_tolerance: f64,
    /// Print one JSON object per checked response instead of a table.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct FeaturesArgs {
    /// Dataset directory written by `generate`.
    #[arg(long)]
    pub dataset: PathBuf,
    /// Directory of WAV clips, a single WAV, or a text file listing WAV paths.
    #[arg(long)]
    pub clips: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 40.0)]
    pub snr_min: f64,
    #[arg(long, default_value_t = 60.0)]
    pub snr_max: f64,
    /// Skip sensor noise.
    #[arg(long)]
    pub no_noise: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Signal length in seconds.
    #[arg(long, default_value_t = 1.0)]
    pub duration: f64,
    #[arg(long, default_value_t = 25.0)]
    pub win_ms: f64,
    #[arg(long, default_value_t = 10.0)]
    pub hop_ms: f64,
    #[arg(long, env = "RIRSIM_WORKERS")]
    pub workers: Option<usize>,
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Generate(a) => cmd_generate(&a),
        Command::Synth(a) => cmd_synth(&a),
        Command::Verify(a) => cmd_verify(&a).map(|_| ()),
        Command::Features(a) => cmd_features(&a),
    }
}

/// Parses `std::env::args`, runs the command and maps the outcome to an exit status.
pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::from(EXIT_OK),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn exit_codes_are_distinct() {
        let config = CliError::Config("x".into()).exit_code();
        let infeasible = CliError::Core(Error::InfeasibleDrr {
            requested: 2.0,
            attainable: 1.0,
        })
        .exit_code();
        let verify = CliError::Verification("x".into()).exit_code();
        let io = CliError::Input("x".into()).exit_code();
        let mut all = vec![config, infeasible, verify, io, EXIT_OK];
        all.sort();
        all.dedup();
        assert_eq!(all.len(), 5);
    }

    #[test]
    fn missing_scene_flag_is_usage_error() {
        let err = Cli::try_parse_from(["rirsim", "synth", "--out", "x.wav", "--t60", "0.4"]).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}
