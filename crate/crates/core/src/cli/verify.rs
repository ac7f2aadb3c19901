use std::path::Path;

use serde::Serialize;

use super::records::{read_metadata, Manifest, MicMeta, SceneSpec, SynthDoc, MANIFEST_FILE, METADATA_FILE};
use super::{CliError, VerifyArgs};
use crate::analysis::{estimate_t60, measure_drr, schroeder_edc};
use crate::config::SynthConfig;
use crate::synth::Method;
use crate::wav::read_wav;

/// Result of checking one stored response.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyRow {
    pub index: Option<usize>,
    pub mic: usize,
    pub method: Method,
    pub n_d: usize,
    pub n_d_expected: usize,
    pub drr_reference: Option<f64>,
    pub drr_measured: Option<f64>,
    pub drr_rel_err: Option<f64>,
    pub t60_target: f64,
    pub t60_estimate: Option<f64>,
    pub t60_rel_err: Option<f64>,
    /// All hard checks passed.
    pub pass: bool,
    pub problems: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub rows: Vec<VerifyRow>,
    pub failed: usize,
    pub drr_max_rel_err: f64,
    /// Responses with a T60 estimate inside the tolerance band.
    pub t60_within: usize,
    pub t60_checked: usize,
    pub t60_median_abs_rel_err: Option<f64>,
}

struct Item<'a> {
    index: Option<usize>,
    method: Method,
    scene: &'a SceneSpec,
    mics: &'a [MicMeta; 2],
    samples: [Vec<f64>; 2],
    fs: u32,
}

fn check(item: &Item, cfg: &SynthConfig, args: &VerifyArgs) -> Result<Vec<VerifyRow>, CliError> {
    let scene = item.scene.to_scene()?;
    let mut rows = Vec::with_capacity(2);
    for (mic, (meta, h)) in item.mics.iter().zip(&item.samples).enumerate() {
        let mut problems = Vec::new();
        if item.fs != cfg.fs {
            problems.push(format!("sample rate {} != {}", item.fs, cfg.fs));
        }
        let n_d_expected = cfg.delay_samples(scene.mic_distance(mic));
        if meta.n_d != n_d_expected {
            problems.push(format!("n_d {} != {n_d_expected} from geometry", meta.n_d));
        }
        let drr_reference = meta.eta.or(meta.eta_measured);
        let measured = measure_drr(h, meta.n_d, cfg.drr_window);
        let (drr_measured, drr_rel_err) = match (&measured, drr_reference) {
            (Ok(m), Some(r)) => {
                let err = (m - r).abs() / r.abs().max(f64::MIN_POSITIVE);
                if !(err <= args.drr_tolerance) {
                    problems.push(format!("DRR {m:.6e} vs stored {r:.6e}"));
                }
                (Some(*m), Some(err))
            }
            (Err(e), Some(_)) => {
                problems.push(format!("DRR not measurable: {e}"));
                (None, None)
            }
            (m, None) => (m.as_ref().ok().copied(), None),
        };
        let (t60_estimate, t60_rel_err) = if item.method == Method::Proposed {
            let est = schroeder_edc(h, f64::from(item.fs)).and_then(|edc| estimate_t60(&edc)).ok();
            (est, est.map(|e| (e - scene.room.t60) / scene.room.t60))
        } else {
            (None, None)
        };
        rows.push(VerifyRow {
            index: item.index,
            mic,
            method: item.method,
            n_d: meta.n_d,
            n_d_expected,
            drr_reference,
            drr_measured,
            drr_rel_err,
            t60_target: scene.room.t60,
            t60_estimate,
            t60_rel_err,
            pass: problems.is_empty(),
            problems,
        });
    }
    Ok(rows)
}

fn load_pair(paths: [&Path; 2]) -> Result<([Vec<f64>; 2], u32), CliError> {
    let a = read_wav(paths[0]).map_err(|e| CliError::wav(paths[0], e))?;
    let b = read_wav(paths[1]).map_err(|e| CliError::wav(paths[1], e))?;
    if a.fs != b.fs {
        return Err(CliError::Input(format!(
            "{} and {} have different sample rates",
            paths[0].display(),
            paths[1].display()
        )));
    }
    let first = |d: crate::wav::WavData, p: &Path| {
        d.channels
            .into_iter()
            .next()
            .ok_or_else(|| CliError::Input(format!("{}: no channels", p.display())))
    };
    let fs = b.fs;
    Ok(([first(a, paths[0])?, first(b, paths[1])?], fs))
}

fn verify_dataset(dir: &Path, args: &VerifyArgs) -> Result<Vec<VerifyRow>, CliError> {
    let meta_path = dir.join(METADATA_FILE);
    if !meta_path.is_file() {
        return Err(CliError::Input(format!(
            "no records in {}: {METADATA_FILE} not found",
            dir.display()
        )));
    }
    let lines = read_metadata(&meta_path)?;
    if lines.is_empty() {
        return Err(CliError::Input(format!("no records in {}", meta_path.display())));
    }
    let manifest_path = dir.join(MANIFEST_FILE);
    if !manifest_path.is_file() {
        return Err(CliError::Input(format!("missing {}", manifest_path.display())));
    }
    let cfg = Manifest::load(&manifest_path)?.config.synth;
    let mut rows = Vec::with_capacity(2 * lines.len());
    for line in &lines {
        let (samples, fs) = load_pair([&dir.join(&line.files[0]), &dir.join(&line.files[1])])?;
        rows.extend(check(
            &Item {
                index: Some(line.index),
                method: Method::Proposed,
                scene: &line.scene,
                mics: &line.mics,
                samples,
                fs,
            },
            &cfg,
            args,
        )?);
    }
    Ok(rows)
}

fn verify_wav(path: &Path, args: &VerifyArgs) -> Result<Vec<VerifyRow>, CliError> {
    let sidecar = path.with_extension("json");
    if !sidecar.is_file() {
        return Err(CliError::Input(format!("missing metadata {}", sidecar.display())));
    }
    let text = std::fs::read_to_string(&sidecar).map_err(|e| CliError::io(&sidecar, e))?;
    let doc: SynthDoc = serde_json::from_str(&text)
        .map_err(|e| CliError::Input(format!("{}: {e}", sidecar.display())))?;
    let data = read_wav(path).map_err(|e| CliError::wav(path, e))?;
    let mut channels = data.channels.into_iter();
    let (Some(a), Some(b)) = (channels.next(), channels.next()) else {
        return Err(CliError::Input(format!("{}: expected two channels", path.display())));
    };
    check(
        &Item {
            index: None,
            method: doc.method,
            scene: &doc.scene,
            mics: &doc.mics,
            samples: [a, b],
            fs: data.fs,
        },
        &doc.synth,
        args,
    )
}

fn summarize(rows: Vec<VerifyRow>, t60_tol: f64) -> VerifyReport {
    let failed = rows.iter().filter(|r| !r.pass).count();
    let drr_max_rel_err = rows.iter().filter_map(|r| r.drr_rel_err).fold(0.0, f64::max);
    let mut t60: Vec<f64> = rows.iter().filter_map(|r| r.t60_rel_err).map(f64::abs).collect();
    t60.sort_by(f64::total_cmp);
    let t60_within = t60.iter().filter(|e| **e <= t60_tol).count();
    let median = match t60.len() {
        0 => None,
        n if n % 2 == 1 => Some(t60[n / 2]),
        n => Some(0.5 * (t60[n / 2 - 1] + t60[n / 2])),
    };
    VerifyReport {
        failed,
        drr_max_rel_err,
        t60_within,
        t60_checked: t60.len(),
        t60_median_abs_rel_err: median,
        rows,
    }
}

fn opt(v: Option<f64>, prec: usize) -> String {
    v.map_or_else(|| "-".into(), |x| format!("{x:.prec$}"))
}

fn print_table(report: &VerifyReport) {
    say!(
        "{:>7} {:>3} {:>6} {:>12} {:>12} {:>10} {:>6} {:>7} {:>8}  status",
        "record", "mic", "n_d", "drr_ref", "drr_meas", "drr_err", "t60", "t60_est", "t60_err"
    );
    for r in &report.rows {
        say!(
            "{:>7} {:>3} {:>6} {:>12} {:>12} {:>10} {:>6.3} {:>7} {:>8}  {}",
            r.index.map_or_else(|| "-".into(), |i| i.to_string()),
            r.mic,
            r.n_d,
            r.drr_reference.map_or_else(|| "-".into(), |x| format!("{x:.6e}")),
            r.drr_measured.map_or_else(|| "-".into(), |x| format!("{x:.6e}")),
            r.drr_rel_err.map_or_else(|| "-".into(), |x| format!("{x:.2e}")),
            r.t60_target,
            opt(r.t60_estimate, 3),
            opt(r.t60_rel_err, 3),
            if r.pass { "ok".to_string() } else { format!("FAIL {}", r.problems.join("; ")) }
        );
    }
    let n = report.rows.len();
    say!("hard checks: {}/{n} responses pass", n - report.failed);
    say!("max DRR relative error: {:.3e}", report.drr_max_rel_err);
    if report.t60_checked > 0 {
        say!(
            "T60 within band: {}/{} ({:.1}%), median |error| {}",
            report.t60_within,
            report.t60_checked,
            100.0 * report.t60_within as f64 / report.t60_checked as f64,
            opt(report.t60_median_abs_rel_err.map(|m| 100.0 * m), 1) + "%"
        );
    }
}

pub fn cmd_verify(args: &VerifyArgs) -> Result<VerifyReport, CliError> {
    let path = &args.path;
    let rows = if path.is_dir() {
        verify_dataset(path, args)?
    } else if path.is_file() {
        verify_wav(path, args)?
    } else {
        return Err(CliError::Input(format!("{} does not exist", path.display())));
    };
    let report = summarize(rows, args.t60_tolerance);
    if args.json {
        for r in &report.rows {
            say!("{}", serde_json::to_string(r).expect("row serializes"));
        }
        let summary = serde_json::json!({
            "responses": report.rows.len(),
            "failed": report.failed,
            "drr_max_rel_err": report.drr_max_rel_err,
            "t60_within": report.t60_within,
            "t60_checked": report.t60_checked,
            "t60_median_abs_rel_err": report.t60_median_abs_rel_err,
        });
        say!("{summary}");
    } else {
        print_table(&report);
    }
    if report.failed > 0 {
        return Err(CliError::Verification(format!(
            "{} of {} responses failed hard checks",
            report.failed,
            report.rows.len()
        )));
    }
    Ok(report)
}
