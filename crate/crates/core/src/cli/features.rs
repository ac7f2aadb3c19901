use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::records::{read_metadata, Manifest, MANIFEST_FILE, METADATA_FILE};
use super::{default_workers, CliError, FeaturesArgs};
use crate::sampler::derive_seed;
use crate::signals::{render_pair, stft_features, AudioClip};
use crate::wav::{read_wav, write_wav};

const TAG_FEATURES: u64 = 4;

/// Clip paths from a directory (sorted `.wav` files), a single WAV, or a
/// text file with one path per line relative to the list's directory.
fn clip_paths(spec: &Path) -> Result<Vec<PathBuf>, CliError> {
    let is_wav = |p: &Path| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("wav"));
    let paths = if spec.is_dir() {
        let mut v: Vec<PathBuf> = std::fs::read_dir(spec)
            .map_err(|e| CliError::io(spec, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file() && is_wav(p))
            .collect();
        v.sort();
        v
    } else if is_wav(spec) {
        vec![spec.to_path_buf()]
    } else {
        let text = std::fs::read_to_string(spec).map_err(|e| CliError::io(spec, e))?;
        let base = spec.parent().unwrap_or(Path::new(""));
        text.lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| base.join(l))
            .collect()
    };
    if paths.is_empty() {
        return Err(CliError::Input(format!("no clips found in {}", spec.display())));
    }
    Ok(paths)
}

fn load_clip(path: &Path, fs: u32) -> Result<AudioClip, CliError> {
    let data = read_wav(path).map_err(|e| CliError::wav(path, e))?;
    if data.fs != fs {
        return Err(crate::Error::SampleRateMismatch {
            expected: fs,
            actual: data.fs,
        }
        .into());
    }
    let samples = data
        .channels
        .into_iter()
        .next()
        .ok_or_else(|| CliError::Input(format!("{}: no channels", path.display())))?;
    Ok(AudioClip::new(samples, fs))
}

pub fn cmd_features(args: &FeaturesArgs) -> Result<(), CliError> {
    if !(args.snr_min <= args.snr_max) {
        return Err(CliError::Usage("--snr-min must not exceed --snr-max".into()));
    }
    let workers = args.workers.unwrap_or_else(default_workers);
    if workers == 0 {
        return Err(CliError::Usage("--workers must be at least 1".into()));
    }
    let meta_path = args.dataset.join(METADATA_FILE);
    if !meta_path.is_file() {
        return Err(CliError::Input(format!(
            "no records in {}: {METADATA_FILE} not found",
            args.dataset.display()
        )));
    }
    let lines = read_metadata(&meta_path)?;
    if lines.is_empty() {
        return Err(CliError::Input(format!("no records in {}", meta_path.display())));
    }
    let fs = Manifest::load(&args.dataset.join(MANIFEST_FILE))?.config.synth.fs;
    let clip_files = clip_paths(&args.clips)?;
    let clips: Vec<AudioClip> = clip_files
        .iter()
        .map(|p| load_clip(p, fs))
        .collect::<Result<_, _>>()?;
    std::fs::create_dir_all(&args.out).map_err(|e| CliError::io(&args.out, e))?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let labels: Vec<String> = pool.install(|| {
        lines
            .par_iter()
            .map(|line| -> Result<String, CliError> {
                let which = line.index % clips.len();
                let mut rng =
                    ChaCha8Rng::seed_from_u64(derive_seed(args.seed, &[TAG_FEATURES, line.index as u64]));
                let snr = if args.no_noise {
                    None
                } else if args.snr_min == args.snr_max {
                    Some(args.snr_min)
                } else {
                    Some(rng.gen_range(args.snr_min..=args.snr_max))
                };
                let mut rirs = Vec::with_capacity(2);
                for f in &line.files {
                    let path = args.dataset.join(f);
                    let data = read_wav(&path).map_err(|e| CliError::wav(&path, e))?;
                    if data.fs != fs {
                        return Err(crate::Error::SampleRateMismatch {
                            expected: fs,
                            actual: data.fs,
                        }
                        .into());
                    }
                    rirs.push(data.channels.into_iter().next().unwrap_or_default());
                }
                let pair = render_pair([&rirs[0], &rirs[1]], &clips[which], snr, args.duration, &mut rng)?;
                let features = stft_features(&pair, args.win_ms, args.hop_ms)?;

                let stem = format!("rec_{:06}", line.index);
                let wav = args.out.join(format!("{stem}.wav"));
                write_wav(&wav, &[&pair[0].samples, &pair[1].samples], fs)
                    .map_err(|e| CliError::wav(&wav, e))?;
                let base = args.out.join(&stem);
                features.write(&base).map_err(|e| CliError::io(&base, e))?;
                Ok(format!(
                    "{stem},{},{},{},{},{}",
                    line.index,
                    line.class,
                    line.distance,
                    snr.map_or_else(String::new, |s| s.to_string()),
                    clip_files[which].display()
                ))
            })
            .collect::<Result<_, _>>()
    })?;

    let mut text = String::from("stem,index,class,distance_m,snr_db,clip\n");
    for l in &labels {
        writeln!(text, "{l}").unwrap();
    }
    let labels_path = args.out.join("labels.csv");
    std::fs::write(&labels_path, text).map_err(|e| CliError::io(&labels_path, e))?;
    say!("wrote {} feature files to {}", labels.len(), args.out.display());
    Ok(())
}
