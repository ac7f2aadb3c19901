use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::Path;

use super::records::{
    read_metadata_lines, record_dir, sha256_file, sha256_hex, DatasetLine, Manifest, RecordChecksum,
    RunConfig, MANIFEST_FILE, METADATA_FILE,
};
use super::{default_workers, CliError, GenerateArgs};
use crate::sampler::{generate_dataset, DatasetRecord};
use crate::wav::write_wav;

pub fn cmd_generate(args: &GenerateArgs) -> Result<(), CliError> {
    let workers = args.workers.unwrap_or_else(default_workers);
    if workers == 0 {
        return Err(CliError::Usage("--workers must be at least 1".into()));
    }
    let out = &args.out;
    let manifest_path = out.join(MANIFEST_FILE);

    let reference = args.manifest.as_deref().map(Manifest::load).transpose()?;
    let mut manifest = if args.resume {
        let existing = Manifest::load(&manifest_path).map_err(|e| match e {
            CliError::Io { .. } => CliError::Usage(format!(
                "--resume: no run to resume in {} ({MANIFEST_FILE} missing)",
                out.display()
            )),
            other => other,
        })?;
        if let Some(r) = &reference {
            if r.config != existing.config {
                return Err(CliError::Usage(
                    "--resume: the reference manifest describes a different run".into(),
                ));
            }
        }
        existing
    } else {
        if manifest_path.exists() {
            return Err(CliError::Usage(format!(
                "{} already holds a dataset; pass --resume to continue it",
                out.display()
            )));
        }
        let config = match (&reference, &args.config) {
            (Some(r), _) => r.config.clone(),
            (None, Some(path)) => RunConfig::load(path)?,
            (None, None) => {
                return Err(CliError::Usage("one of --config or --manifest is required".into()))
            }
        };
        let mut config = config;
        if let Some(seed) = args.seed {
            config.sampler.seed = seed;
        }
        config.validate()?;
        std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
        Manifest::new(config)
    };

    let metadata_path = out.join(METADATA_FILE);
    let start = if args.resume {
        recover_completed(out, &mut manifest)?
    } else {
        File::create(&metadata_path).map_err(|e| CliError::io(&metadata_path, e))?;
        0
    };
    manifest.complete = false;
    manifest.store(&manifest_path)?;

    let mut meta = BufWriter::new(
        OpenOptions::new()
            .append(true)
            .open(&metadata_path)
            .map_err(|e| CliError::io(&metadata_path, e))?,
    );
    let total = manifest.record_count;
    let mut redraws = 0usize;
    let mut records = std::mem::take(&mut manifest.records);
    let emitted = generate_dataset(
        &manifest.config.sampler,
        &manifest.config.synth,
        workers,
        start,
        |rec: DatasetRecord| -> Result<(), CliError> {
            redraws += rec.redraws.len();
            records.push(write_record(out, &rec, &mut meta)?);
            let done = rec.index + 1;
            if done.is_multiple_of(1000) || done == total {
                eprintln!("{done}/{total} records");
            }
            Ok(())
        },
    );
    meta.flush().map_err(|e| CliError::io(&metadata_path, e))?;
    manifest.records = records;
    let emitted = match emitted {
        Ok(n) => n,
        Err(e) => {
            // Keep what was written so the run can be resumed.
            manifest.store(&manifest_path)?;
            return Err(e);
        }
    };
    manifest.complete = true;
    manifest.store(&manifest_path)?;
    say!(
        "wrote {} records ({emitted} new, {redraws} redraws) to {}",
        manifest.records.len(),
        out.display()
    );

    if let Some(reference) = reference {
        compare_checksums(&reference, &manifest)?;
        say!("checksums match {} records of the reference manifest", reference.records.len());
    }
    Ok(())
}

fn write_record(out: &Path, rec: &DatasetRecord, meta: &mut impl Write) -> Result<RecordChecksum, CliError> {
    let dir = out.join(record_dir(rec.room_idx, rec.constellation_idx));
    std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    let line = DatasetLine::from_record(rec);
    let mut digests = Vec::with_capacity(2);
    for (rir, file) in rec.rirs.iter().zip(&line.files) {
        let path = out.join(file);
        write_wav(&path, &[&rir.samples], rir.fs).map_err(|e| CliError::wav(&path, e))?;
        digests.push(sha256_file(&path)?);
    }
    let text = serde_json::to_string(&line).expect("metadata serializes");
    // The line is the commit point: a record counts as done once it is written.
    writeln!(meta, "{text}")
        .and_then(|_| meta.flush())
        .map_err(|e| CliError::io(&out.join(METADATA_FILE), e))?;
    let mic1 = digests.pop().unwrap();
    let mic0 = digests.pop().unwrap();
    Ok(RecordChecksum {
        index: rec.index,
        mic0,
        mic1,
        metadata: sha256_hex(text.as_bytes()),
    })
}

/// Keeps the leading run of complete records, truncates the metadata file
/// after them and returns the next index.
fn recover_completed(out: &Path, manifest: &mut Manifest) -> Result<usize, CliError> {
    let path = out.join(METADATA_FILE);
    let lines = read_metadata_lines(&path)?;
    let mut records = Vec::with_capacity(lines.len());
    let mut kept = String::new();
    for (i, (text, line)) in lines.iter().enumerate() {
        if line.index != i {
            break;
        }
        let files: Vec<_> = line.files.iter().map(|f| out.join(f)).collect();
        if !files.iter().all(|f| f.is_file()) {
            break;
        }
        records.push(RecordChecksum {
            index: i,
            mic0: sha256_file(&files[0])?,
            mic1: sha256_file(&files[1])?,
            metadata: sha256_hex(text.as_bytes()),
        });
        kept.push_str(text);
        kept.push('\n');
    }
    std::fs::write(&path, kept).map_err(|e| CliError::io(&path, e))?;
    let next = records.len();
    manifest.records = records;
    Ok(next)
}

fn compare_checksums(reference: &Manifest, got: &Manifest) -> Result<(), CliError> {
    if reference.records.len() != got.records.len() {
        return Err(CliError::Verification(format!(
            "reference lists {} records, regenerated {}",
            reference.records.len(),
            got.records.len()
        )));
    }
    let mismatched: Vec<usize> = reference
        .records
        .iter()
        .zip(&got.records)
        .filter(|(a, b)| a != b)
        .map(|(a, _)| a.index)
        .collect();
    if mismatched.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verification(format!(
            "{} records differ from the reference manifest (first: {})",
            mismatched.len(),
            mismatched[0]
        )))
    }
}
