//! Sweep execution: the full width x dataset grid, run in parallel, with
//! manifest-based resume.
//!
//! Each run writes three artifacts under `runs/` in the sweep directory:
//! `w{width}_d{dataset}.atrj` (binary trajectory), `...analysis.json`, and
//! `...summary.json`. The manifest lists every artifact with a sha256 hash;
//! rerunning an unchanged sweep skips completed runs, and interrupted sweeps
//! resume to the identical final artifact set. Parallelism only schedules
//! whole runs — each run is single-threaded and bit-deterministic — so the
//! artifact bytes do not depend on the thread count.

use std::path::{Path, PathBuf};
use std::sync::Mutex;

use adamlab_core::analysis::{analyze, SpikeParams};
use adamlab_core::{io, trainer, Error, Result, RunConfig};

use crate::config::SweepConfig;
use crate::manifest::{
    config_hash, hash_bytes, FileEntry, Manifest, RunEntry, RunStatus,
};
use crate::report::RunSummary;

/// Outcome of one sweep invocation.
#[derive(Debug)]
pub struct SweepOutcome {
    /// Summaries of all completed runs, in grid order.
    pub summaries: Vec<RunSummary>,
    /// Runs trained in this invocation (not resumed from the manifest).
    pub executed: usize,
    /// Runs skipped because the manifest already had them.
    pub skipped: usize,
    /// Runs that failed; their errors are recorded in the manifest.
    pub failed: usize,
}

pub fn run_key(width: usize, dataset_index: u64) -> String {
    format!("w{width:03}_d{dataset_index:03}")
}

/// Executes the sweep. With a `beta2_grid` the grid is repeated once per
/// beta2 value in its own subdirectory (`beta2_0.99/...`), each with its own
/// manifest; summaries of all sub-sweeps are concatenated.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepOutcome> {
    cfg.validate()?;
    match &cfg.beta2_grid {
        None => run_flat_sweep(cfg, &cfg.output_dir),
        Some(grid) => {
            let mut total = SweepOutcome { summaries: Vec::new(), executed: 0, skipped: 0, failed: 0 };
            for &beta2 in grid {
                let mut sub = cfg.clone();
                sub.beta2_grid = None;
                sub.base.adam.beta2 = beta2;
                let dir = cfg.output_dir.join(format!("beta2_{beta2}"));
                let outcome = run_flat_sweep(&sub, &dir)?;
                total.summaries.extend(outcome.summaries);
                total.executed += outcome.executed;
                total.skipped += outcome.skipped;
                total.failed += outcome.failed;
            }
            Ok(total)
        }
    }
}

fn run_flat_sweep(cfg: &SweepConfig, dir: &Path) -> Result<SweepOutcome> {
    std::fs::create_dir_all(dir.join("runs"))?;
    let manifest = Mutex::new(Manifest::load(dir)?);
    // Fail on an unwritable directory before any training happens.
    manifest.lock().unwrap().save(dir)?;

    let runs = cfg.runs();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.parallelism)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot build thread pool: {e}")))?;

    let results: Vec<(Option<RunSummary>, bool, bool)> = pool.install(|| {
        use rayon::prelude::*;
        runs.par_iter().map(|run| execute_or_resume(run, dir, &manifest)).collect()
    });

    let mut outcome = SweepOutcome { summaries: Vec::new(), executed: 0, skipped: 0, failed: 0 };
    for (summary, was_executed, failed) in results {
        if let Some(s) = summary {
            outcome.summaries.push(s);
        }
        if failed {
            outcome.failed += 1;
        } else if was_executed {
            outcome.executed += 1;
        } else {
            outcome.skipped += 1;
        }
    }
    Ok(outcome)
}

/// Returns (summary, executed, failed).
fn execute_or_resume(
    run: &RunConfig,
    dir: &Path,
    manifest: &Mutex<Manifest>,
) -> (Option<RunSummary>, bool, bool) {
    let key = run_key(run.shape.hidden_width, run.dataset_index);
    let hash = config_hash(run);

    {
        let m = manifest.lock().unwrap();
        if m.is_complete(dir, &key, &hash) {
            let summary = m.entries[&key].summary.clone();
            return (summary, false, false);
        }
    }

    match execute_run(run, dir, &key) {
        Ok((summary, files)) => {
            let entry = RunEntry {
                width: run.shape.hidden_width,
                dataset_index: run.dataset_index,
                config_hash: hash,
                status: RunStatus::Done,
                files,
                summary: Some(summary.clone()),
            };
            let mut m = manifest.lock().unwrap();
            m.entries.insert(key, entry);
            // Persist after every run so interruptions resume cleanly.
            let _ = m.save(dir);
            (Some(summary), true, false)
        }
        Err(err) => {
            let entry = RunEntry {
                width: run.shape.hidden_width,
                dataset_index: run.dataset_index,
                config_hash: hash,
                status: RunStatus::Failed { error: err.to_string() },
                files: Vec::new(),
                summary: None,
            };
            let mut m = manifest.lock().unwrap();
            m.entries.insert(key, entry);
            let _ = m.save(dir);
            (None, false, true)
        }
    }
}

fn execute_run(
    run: &RunConfig,
    dir: &Path,
    key: &str,
) -> Result<(RunSummary, Vec<FileEntry>)> {
    let traj = trainer::train(run)?;
    let report = analyze(&traj, &SpikeParams::default())?;
    let summary = RunSummary::from_report(&report);

    let mut files = Vec::new();
    let mut write = |rel: String, bytes: Vec<u8>| -> Result<()> {
        let path = dir.join(&rel);
        std::fs::write(&path, &bytes)?;
        files.push(FileEntry { path: rel, sha256: hash_bytes(&bytes) });
        Ok(())
    };
    write(format!("runs/{key}.atrj"), io::encode_trajectory(&traj))?;
    write(format!("runs/{key}.analysis.json"), report.to_json().into_bytes())?;
    write(
        format!("runs/{key}.summary.json"),
        serde_json::to_string_pretty(&summary).expect("summary serialization").into_bytes(),
    )?;
    Ok((summary, files))
}

/// Loads every summary recorded in a sweep directory (including beta2
/// subdirectories), in manifest order.
pub fn load_summaries(dir: &Path) -> Result<Vec<RunSummary>> {
    let mut dirs: Vec<PathBuf> = vec![dir.to_path_buf()];
    if dir.exists() {
        for entry in std::fs::read_dir(dir)? {
            let p = entry?.path();
            if p.is_dir() && p.file_name().is_some_and(|n| n.to_string_lossy().starts_with("beta2_"))
            {
                dirs.push(p);
            }
        }
    }
    dirs.sort();
    let mut out = Vec::new();
    let mut saw_manifest = false;
    for d in dirs {
        if !d.join(crate::manifest::MANIFEST_FILE).exists() {
            continue;
        }
        saw_manifest = true;
        let manifest = Manifest::load(&d)?;
        for entry in manifest.entries.values() {
            if let Some(s) = &entry.summary {
                out.push(s.clone());
            }
        }
    }
    if !saw_manifest {
        return Err(Error::Format(format!("no manifest found under {}", dir.display())));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{RunTemplate, SweepConfig};
    use adamlab_core::PrecisionMode;

    fn tiny_sweep(dir: &Path) -> SweepConfig {
        SweepConfig {
            widths: vec![3, 4],
            dataset_indices: vec![0, 1],
            base: RunTemplate {
                epochs: 60,
                n_points: 8,
                snapshot_stride: 10,
                precision: PrecisionMode::Native32,
                ..RunTemplate::default()
            },
            beta2_grid: None,
            parallelism: 2,
            output_dir: dir.to_path_buf(),
        }
    }

    #[test]
    fn sweep_writes_grid_artifacts_and_manifest() {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = tiny_sweep(tmp.path());
        let outcome = run_sweep(&cfg).unwrap();
        assert_eq!(outcome.summaries.len(), 4);
        assert_eq!(outcome.executed, 4);
        assert_eq!(outcome.failed, 0);
        let ids: Vec<(usize, u64)> =
            outcome.summaries.iter().map(|s| (s.width, s.dataset_index)).collect();
        assert_eq!(ids, vec![(3, 0), (3, 1), (4, 0), (4, 1)]);
        for (w, d) in ids {
            for suffix in [".atrj", ".analysis.json", ".summary.json"] {
                let p = tmp.path().join(format!("runs/{}{suffix}", run_key(w, d)));
                assert!(p.exists(), "{p:?}");
            }
        }
        let verify = crate::manifest::verify_dir(tmp.path()).unwrap();
        assert!(verify.ok());
        assert_eq!(verify.checked_files, 12);
    }

    #[test]
    fn rerun_skips_completed_runs_and_reproduces_summaries() {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = tiny_sweep(tmp.path());
        let first = run_sweep(&cfg).unwrap();
        let second = run_sweep(&cfg).unwrap();
        assert_eq!(second.executed, 0);
        assert_eq!(second.skipped, 4);
        assert_eq!(first.summaries, second.summaries);
    }

    #[test]
    fn parallelism_does_not_change_artifacts() {
        let tmp1 = tempfile::tempdir().unwrap();
        let tmp2 = tempfile::tempdir().unwrap();
        let mut cfg1 = tiny_sweep(tmp1.path());
        cfg1.parallelism = 1;
        let mut cfg2 = tiny_sweep(tmp2.path());
        cfg2.parallelism = 2;
        let a = run_sweep(&cfg1).unwrap();
        let b = run_sweep(&cfg2).unwrap();
        assert_eq!(a.summaries, b.summaries);
        for s in &a.summaries {
            let rel = format!("runs/{}.atrj", run_key(s.width, s.dataset_index));
            let x = std::fs::read(tmp1.path().join(&rel)).unwrap();
            let y = std::fs::read(tmp2.path().join(&rel)).unwrap();
            assert_eq!(x, y, "trajectory bytes differ for {rel}");
        }
    }

    #[test]
    fn interrupted_sweep_resumes_to_identical_artifacts() {
        let tmp_full = tempfile::tempdir().unwrap();
        let full = tiny_sweep(tmp_full.path());
        run_sweep(&full).unwrap();

        // Simulate an interruption: run only half the grid, then the rest.
        let tmp_part = tempfile::tempdir().unwrap();
        let mut part = tiny_sweep(tmp_part.path());
        part.widths = vec![3];
        run_sweep(&part).unwrap();
        let resumed = tiny_sweep(tmp_part.path());
        let outcome = run_sweep(&resumed).unwrap();
        assert_eq!(outcome.skipped, 2);
        assert_eq!(outcome.executed, 2);

        for key in ["w003_d000", "w003_d001", "w004_d000", "w004_d001"] {
            let rel = format!("runs/{key}.atrj");
            let a = std::fs::read(tmp_full.path().join(&rel)).unwrap();
            let b = std::fs::read(tmp_part.path().join(&rel)).unwrap();
            assert_eq!(a, b, "{rel}");
        }
    }

    #[test]
    fn beta2_grid_creates_subdirectories() {
        let tmp = tempfile::tempdir().unwrap();
        let mut cfg = tiny_sweep(tmp.path());
        cfg.widths = vec![3];
        cfg.dataset_indices = vec![0];
        cfg.beta2_grid = Some(vec![0.99, 0.999]);
        let outcome = run_sweep(&cfg).unwrap();
        assert_eq!(outcome.summaries.len(), 2);
        assert!(tmp.path().join("beta2_0.99/runs/w003_d000.atrj").exists());
        assert!(tmp.path().join("beta2_0.999/runs/w003_d000.atrj").exists());
        let betas: Vec<f64> = outcome.summaries.iter().map(|s| s.beta2).collect();
        assert_eq!(betas, vec![0.99, 0.999]);
        let loaded = load_summaries(tmp.path()).unwrap();
        assert_eq!(loaded.len(), 2);
    }

    #[test]
    fn unwritable_output_dir_fails_before_training() {
        let cfg = tiny_sweep(Path::new("/proc/definitely/not/writable"));
        assert!(run_sweep(&cfg).is_err());
    }
}
