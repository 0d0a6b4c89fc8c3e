//! Run orchestration: validate every configuration up front, execute the
//! sweeps inside a sized worker pool, emit CSVs, then the manifest.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use stbc_core::harness::{
    run_ber_sweep, run_nn_experiment, summarize, ExperimentConfig, Receiver, Summary,
};
use stbc_core::{Error, Result};

use crate::config::{apply_override, emit_config};
use crate::report;

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    pub workers: usize,
    pub seed: Option<u64>,
    pub overrides: Vec<(String, String)>,
}

#[derive(Debug)]
pub struct RunReport {
    pub files: Vec<PathBuf>,
    pub summaries: Vec<(String, Summary)>,
}

/// Execute a list of experiment configurations and emit their artifacts.
///
/// All configurations are validated (including the ML candidate guard)
/// before any simulation starts or any file is written.
pub fn run_configs(base_configs: &[ExperimentConfig], opts: &RunOptions) -> Result<RunReport> {
    let mut configs = base_configs.to_vec();
    for cfg in configs.iter_mut() {
        for (key, value) in &opts.overrides {
            apply_override(cfg, key, value)?;
        }
        if let Some(seed) = opts.seed {
            cfg.seed = seed;
        }
    }
    for cfg in &configs {
        cfg.validate()?;
    }
    let mut labels: Vec<&str> = configs.iter().map(|c| c.label.as_str()).collect();
    labels.sort_unstable();
    labels.dedup();
    if labels.len() != configs.len() {
        return Err(Error::Config("duplicate labels in run".into()));
    }

    std::fs::create_dir_all(&opts.out_dir)
        .map_err(|e| Error::Usage(format!("cannot create {}: {e}", opts.out_dir.display())))?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers.max(1))
        .build()
        .map_err(|e| Error::Usage(format!("cannot build worker pool: {e}")))?;

    let started = unix_now();
    let mut files: Vec<(PathBuf, String)> = Vec::new();
    let mut summaries = Vec::new();
    for cfg in &configs {
        match cfg.receiver {
            Receiver::MlPerfect | Receiver::MlMmse => {
                let records = pool.install(|| run_ber_sweep(cfg))?;
                emit(&opts.out_dir, &mut files, &cfg.label, "ber", report::ber_csv(&records))?;
                summaries.push((cfg.label.clone(), summarize(&records)?));
            }
            Receiver::Ptrbf => {
                let out = pool.install(|| run_nn_experiment(cfg))?;
                emit(&opts.out_dir, &mut files, &cfg.label, "ber", report::ber_csv(&out.ber))?;
                emit(&opts.out_dir, &mut files, &cfg.label, "nmse", report::nmse_csv(&out.nmse))?;
                emit(
                    &opts.out_dir,
                    &mut files,
                    &cfg.label,
                    "constellation",
                    report::constellation_csv(&out.constellation),
                )?;
                summaries.push((cfg.label.clone(), summarize(&out.ber)?));
            }
        }
    }

    let mut header = vec![
        format!("artifact_version = {ARTIFACT_VERSION}"),
        format!("workers = {}", opts.workers),
        format!("started_unix = {started}"),
        format!("finished_unix = {}", unix_now()),
    ];
    for cfg in &configs {
        for line in emit_config(cfg).lines() {
            header.push(format!("config.{}.{line}", cfg.label));
        }
    }
    let manifest = report::write_manifest(&opts.out_dir, &header, &files)?;

    let mut all_files: Vec<PathBuf> = files.into_iter().map(|(p, _)| p).collect();
    all_files.push(manifest);
    Ok(RunReport {
        files: all_files,
        summaries,
    })
}

fn emit(
    dir: &Path,
    files: &mut Vec<(PathBuf, String)>,
    label: &str,
    kind: &str,
    contents: String,
) -> Result<()> {
    let path = report::write_file(dir, &format!("{label}.{kind}.csv"), &contents)?;
    files.push((path, report::sha256_hex(contents.as_bytes())));
    Ok(())
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}
