use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::records::{ArraySpec, RunConfig, SceneSpec, SourceSpec, SynthDoc};
use super::{AugMode, CliError, SynthArgs, SynthMethod};
use crate::geometry::{Room, Vec3};
use crate::synth::{drr_augment, synthesize, synthesize_ism_only, DrrAugmentMode};
use crate::wav::write_wav;

fn vec3(v: &Option<Vec<f64>>, flag: &str) -> Result<Vec3, CliError> {
    match v.as_deref() {
        Some(&[x, y, z]) => Ok(Vec3::new(x, y, z)),
        _ => Err(CliError::Usage(format!("--{flag} needs three comma-separated values"))),
    }
}

fn scene_spec(args: &SynthArgs) -> Result<SceneSpec, CliError> {
    if let Some(path) = &args.scene {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut de = serde_json::Deserializer::from_str(&text);
        return serde_path_to_error::deserialize(&mut de)
            .map_err(|e| CliError::Config(format!("{}: at `{}`: {}", path.display(), e.path(), e.inner())));
    }
    let dims = vec3(&args.room, "room")?;
    let t60 = args.t60.ok_or_else(|| CliError::Usage("--t60 is required".into()))?;
    Ok(SceneSpec {
        room: Room::new(dims.x(), dims.y(), dims.z(), t60)?,
        source: SourceSpec {
            position: vec3(&args.source, "source")?,
            look_azimuth_deg: args.look_azimuth,
            look_elevation_deg: args.look_elevation,
            pattern: args.pattern,
        },
        array: ArraySpec {
            center: vec3(&args.array_center, "array-center")?,
            orientation_deg: args.array_orientation,
            spacing: args.spacing,
        },
        mic_positions: None,
    })
}

pub fn cmd_synth(args: &SynthArgs) -> Result<(), CliError> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::load(path)?.synth,
        None => Default::default(),
    };
    let order = args.order.unwrap_or(cfg.image_order);
    cfg.image_order = order;
    let spec = scene_spec(args)?;
    let scene = spec.to_scene()?;

    let rirs = match args.method {
        SynthMethod::Proposed => synthesize(&scene, &cfg, args.seed)?,
        SynthMethod::Ism => synthesize_ism_only(&scene, &cfg, order)?,
        SynthMethod::DrrAug => {
            let base = synthesize_ism_only(&scene, &cfg, order)?;
            let mode = match args.aug_mode {
                AugMode::Random => DrrAugmentMode::RandomScale,
                AugMode::Target => DrrAugmentMode::TargetEq4 {
                    pattern: args.aug_pattern.unwrap_or(scene.source.pattern),
                },
            };
            let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
            let mut out = [base[0].clone(), base[1].clone()];
            for (o, b) in out.iter_mut().zip(&base) {
                *o = drr_augment(b, &cfg, mode, &mut rng)?;
                o.seed = args.seed;
            }
            out
        }
    };

    write_wav(&args.out, &[&rirs[0].samples, &rirs[1].samples], cfg.fs)
        .map_err(|e| CliError::wav(&args.out, e))?;
    let doc = SynthDoc::new(&rirs, &cfg, args.seed, order)?;
    let json = serde_json::to_string_pretty(&doc).expect("metadata serializes");
    let sidecar = args.out.with_extension("json");
    std::fs::write(&sidecar, format!("{json}\n")).map_err(|e| CliError::io(&sidecar, e))?;
    say!("{json}");
    Ok(())
}
