//! `adamlab` command-line interface.
//!
//! Exit codes: 0 success, 1 usage error, 2 I/O or file-format error.

use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use adamlab_core::analysis::{analyze, detect_spikes, predict_next_spike, SpikeParams};
use adamlab_core::net::Activation;
use adamlab_core::optim::check_convergence_condition;
use adamlab_core::{io, trainer, Error, PrecisionMode, Result, RunConfig};

use adamlab_cli::config::{self, SweepConfig, OUT_DIR_ENV};
use adamlab_cli::manifest::verify_dir;
use adamlab_cli::report::{build_report, render_table};
use adamlab_cli::sweep::{load_summaries, run_sweep};
use adamlab_cli::svg::{render_scatter3, render_series, SeriesPlot};

#[derive(Parser)]
#[command(
    name = "adamlab",
    version,
    about = "Deterministic long-run Adam training on tiny networks, with spike/period/spiral analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one network and write its trajectory (.atrj binary, .csv text)
    Train(TrainArgs),
    /// Run a width x dataset sweep described by a TOML config file
    Sweep(SweepArgs),
    /// Analyze a trajectory file into a JSON report
    Analyze(AnalyzeArgs),
    /// Render an SVG plot from a trajectory
    Plot(PlotArgs),
    /// Aggregate a sweep directory into a report
    Report(ReportArgs),
    /// Predict the next spike from a trajectory prefix
    Predict(PredictArgs),
    /// Re-hash every artifact listed in a sweep manifest
    Verify(VerifyArgs),
}

#[derive(Args)]
struct TrainArgs {
    /// TOML run config; flags below override individual keys
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    hidden_width: Option<usize>,
    #[arg(long)]
    input_dim: Option<usize>,
    #[arg(long)]
    output_dim: Option<usize>,
    #[arg(long)]
    activation: Option<Activation>,
    #[arg(long)]
    dataset: Option<u64>,
    #[arg(long)]
    n_points: Option<usize>,
    #[arg(long)]
    init_seed: Option<u64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta1: Option<f64>,
    #[arg(long)]
    beta2: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// native64 | native32 | emulated:E,M
    #[arg(long)]
    precision: Option<PrecisionMode>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    stride: Option<usize>,
    /// Trajectory output path (defaults to $ADAMLAB_OUT_DIR/run.atrj)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also export the trajectory as CSV
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// TOML sweep config
    #[arg(long, required_unless_present = "preset")]
    config: Option<PathBuf>,
    /// Built-in grid: desk (8x8) or paper (40x40)
    #[arg(long, value_parser = ["desk", "paper"])]
    preset: Option<String>,
    /// Output directory (defaults to $ADAMLAB_OUT_DIR)
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    parallelism: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
}

#[derive(Args)]
struct AnalyzeArgs {
    trajectory: PathBuf,
    /// Write the JSON report here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    /// TOML file with spike detector parameters
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    threshold_ratio: Option<f64>,
    #[arg(long)]
    min_separation: Option<usize>,
    /// Also fit spirals of this parameter triple, e.g. 0,3,7
    #[arg(long, value_parser = parse_triple)]
    spiral: Option<[usize; 3]>,
    /// Epoch window A:B for the spiral fit (default: whole run)
    #[arg(long, value_parser = parse_window)]
    spiral_window: Option<(usize, usize)>,
}

#[derive(Args)]
struct PlotArgs {
    trajectory: PathBuf,
    /// loss | scatter3
    #[arg(long, default_value = "loss", value_parser = ["loss", "scatter3"])]
    kind: String,
    /// Log-scale y axis (loss plots)
    #[arg(long)]
    log: bool,
    /// Mark detected spikes on the loss plot
    #[arg(long)]
    spikes: bool,
    /// Parameter triple for scatter3, e.g. 0,3,7
    #[arg(long, value_parser = parse_triple)]
    triple: Option<[usize; 3]>,
    /// Epoch window A:B (default: whole run)
    #[arg(long, value_parser = parse_window)]
    window: Option<(usize, usize)>,
    /// SVG output path (defaults to $ADAMLAB_OUT_DIR/plot.svg)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    sweep_dir: PathBuf,
    /// Write report.json and report.txt into the sweep directory
    #[arg(long)]
    write: bool,
    /// Print JSON instead of the table
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct PredictArgs {
    trajectory: PathBuf,
    /// Use only the first N epochs of the recorded loss
    #[arg(long)]
    prefix: Option<usize>,
    /// TOML file with spike detector parameters
    #[arg(long)]
    params: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    sweep_dir: PathBuf,
}

fn parse_triple(s: &str) -> std::result::Result<[usize; 3], String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err("expected three comma-separated indices, e.g. 0,3,7".into());
    }
    let mut out = [0usize; 3];
    for (slot, part) in out.iter_mut().zip(&parts) {
        *slot = part.trim().parse().map_err(|_| format!("bad index `{part}`"))?;
    }
    Ok(out)
}

fn parse_window(s: &str) -> std::result::Result<(usize, usize), String> {
    let (a, b) = s.split_once(':').ok_or("expected A:B")?;
    let a: usize = a.trim().parse().map_err(|_| format!("bad epoch `{a}`"))?;
    let b: usize = b.trim().parse().map_err(|_| format!("bad epoch `{b}`"))?;
    if a > b {
        return Err(format!("window start {a} exceeds end {b}"));
    }
    Ok((a, b))
}

fn env_out_dir() -> Option<PathBuf> {
    std::env::var_os(OUT_DIR_ENV).map(PathBuf::from)
}

fn default_out(file: &str, explicit: Option<PathBuf>) -> Result<PathBuf> {
    if let Some(p) = explicit {
        return Ok(p);
    }
    if let Some(dir) = env_out_dir() {
        std::fs::create_dir_all(&dir)?;
        return Ok(dir.join(file));
    }
    Err(Error::InvalidArgument(format!(
        "no output path: pass --out or set {OUT_DIR_ENV}"
    )))
}

fn main() {
    std::process::exit(run());
}

fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            eprint!("{e}");
            return 1;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Io(_) | Error::Format(_) | Error::UnsupportedVersion(_) => 2,
                _ => 1,
            }
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train(args) => cmd_train(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Analyze(args) => cmd_analyze(args),
        Command::Plot(args) => cmd_plot(args),
        Command::Report(args) => cmd_report(args),
        Command::Predict(args) => cmd_predict(args),
        Command::Verify(args) => cmd_verify(args),
    }
}

fn effective_run_config(args: &TrainArgs) -> Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(path) => config::load_run_config(path)?,
        None => RunConfig::default(),
    };
    if let Some(v) = args.hidden_width {
        cfg.shape.hidden_width = v;
    }
    if let Some(v) = args.input_dim {
        cfg.shape.input_dim = v;
    }
    if let Some(v) = args.output_dim {
        cfg.shape.output_dim = v;
    }
    if let Some(v) = args.activation {
        cfg.shape.activation = v;
    }
    if let Some(v) = args.dataset {
        cfg.dataset_index = v;
    }
    if let Some(v) = args.n_points {
        cfg.n_points = v;
    }
    if let Some(v) = args.init_seed {
        cfg.init_seed = v;
    }
    if let Some(v) = args.alpha {
        cfg.adam.alpha = v;
    }
    if let Some(v) = args.beta1 {
        cfg.adam.beta1 = v;
    }
    if let Some(v) = args.beta2 {
        cfg.adam.beta2 = v;
    }
    if let Some(v) = args.epsilon {
        cfg.adam.epsilon = v;
    }
    if let Some(v) = args.precision {
        cfg.precision = v;
    }
    if let Some(v) = args.epochs {
        cfg.epochs = v;
    }
    if let Some(v) = args.stride {
        cfg.snapshot_stride = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn cmd_train(args: TrainArgs) -> Result<()> {
    let cfg = effective_run_config(&args)?;
    let out = default_out("run.atrj", args.out.clone())?;
    eprintln!("{}", check_convergence_condition(&cfg.adam).report);
    let traj = trainer::train(&cfg)?;
    io::write_trajectory(&traj, &out)?;
    if let Some(csv) = &args.csv {
        io::write_trajectory_csv(&traj, csv)?;
    }
    let status = match traj.diverged_at {
        Some(e) => format!("diverged at epoch {e}"),
        None => format!("final loss {:.6e}", traj.final_loss()),
    };
    println!(
        "trained (width {}, dataset {}) for {} epochs: {status}; wrote {}",
        cfg.shape.hidden_width,
        cfg.dataset_index,
        traj.loss.len(),
        out.display()
    );
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<()> {
    let mut cfg: SweepConfig = match (&args.config, args.preset.as_deref()) {
        (Some(path), _) => config::load_sweep_config(path)?,
        (None, Some(preset)) => {
            let dir = args
                .output_dir
                .clone()
                .or_else(env_out_dir)
                .ok_or_else(|| {
                    Error::InvalidArgument(format!(
                        "presets need --output-dir or {OUT_DIR_ENV}"
                    ))
                })?;
            match preset {
                "desk" => SweepConfig::desk_scale(dir),
                _ => SweepConfig::paper_scale(dir),
            }
        }
        (None, None) => unreachable!("clap enforces config or preset"),
    };
    if let Some(dir) = args.output_dir {
        cfg.output_dir = dir;
    }
    if let Some(p) = args.parallelism {
        cfg.parallelism = p;
    }
    if let Some(e) = args.epochs {
        cfg.base.epochs = e;
    }
    cfg.validate()?;

    std::fs::create_dir_all(&cfg.output_dir)?;
    config::save_sweep_config(&cfg, &cfg.output_dir.join("sweep_config.toml"))?;
    let outcome = run_sweep(&cfg)?;
    println!(
        "sweep complete: {} runs ({} executed, {} resumed, {} failed) in {}",
        outcome.summaries.len() + outcome.failed,
        outcome.executed,
        outcome.skipped,
        outcome.failed,
        cfg.output_dir.display()
    );

    let report = build_report(&outcome.summaries, &cfg);
    std::fs::write(cfg.output_dir.join("report.json"), serde_json::to_string_pretty(&report).expect("report serialization"))?;
    std::fs::write(cfg.output_dir.join("report.txt"), render_table(&report))?;
    Ok(())
}

fn spike_params(
    params_file: Option<&Path>,
    window: Option<usize>,
    threshold_ratio: Option<f64>,
    min_separation: Option<usize>,
) -> Result<SpikeParams> {
    let mut params = match params_file {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            toml::from_str(&text)
                .map_err(|e| Error::Format(format!("bad spike params {}: {e}", path.display())))?
        }
        None => SpikeParams::default(),
    };
    if let Some(w) = window {
        params.window = w;
    }
    if let Some(t) = threshold_ratio {
        params.threshold_ratio = t;
    }
    if let Some(m) = min_separation {
        params.min_separation = m;
    }
    params.validate()?;
    Ok(params)
}

fn cmd_analyze(args: AnalyzeArgs) -> Result<()> {
    let traj = io::read_trajectory(&args.trajectory)?;
    let params = spike_params(
        args.params.as_deref(),
        args.window,
        args.threshold_ratio,
        args.min_separation,
    )?;
    let mut report = analyze(&traj, &params)?;
    if let Some(triple) = args.spiral {
        let window = args.spiral_window.unwrap_or((0, traj.loss.len().saturating_sub(1)));
        let fit = adamlab_core::analysis::detect_spiral_pair(&traj.snapshots, triple, window)?;
        report.spiral = Some(adamlab_core::analysis::SpiralSection { triple, window, fit });
    }
    let json = report.to_json();
    match &args.out {
        Some(path) => std::fs::write(path, json)?,
        None => println!("{json}"),
    }
    Ok(())
}

fn cmd_plot(args: PlotArgs) -> Result<()> {
    let traj = io::read_trajectory(&args.trajectory)?;
    let out = default_out("plot.svg", args.out.clone())?;
    match args.kind.as_str() {
        "loss" => {
            let spike_epochs = if args.spikes {
                detect_spikes(&traj.loss, &SpikeParams::default())
                    .map(|t| t.events.iter().map(|e| e.peak_epoch).collect())
                    .unwrap_or_default()
            } else {
                Vec::new()
            };
            let opts = SeriesPlot {
                title: format!(
                    "loss, width {} dataset {} ({})",
                    traj.config.shape.hidden_width, traj.config.dataset_index, traj.config.precision
                ),
                log_y: args.log,
                spike_epochs,
            };
            render_series(&traj.loss, &opts, &out)?;
        }
        _ => {
            let triple = args.triple.ok_or_else(|| {
                Error::InvalidArgument("scatter3 needs --triple I,J,K".into())
            })?;
            let window =
                args.window.unwrap_or((0, traj.loss.len().saturating_sub(1)));
            render_scatter3(&traj, triple, window, &out)?;
        }
    }
    println!("wrote {}", out.display());
    Ok(())
}

fn cmd_report(args: ReportArgs) -> Result<()> {
    let summaries = load_summaries(&args.sweep_dir)?;
    let sweep_cfg_path = args.sweep_dir.join("sweep_config.toml");
    let sweep_cfg = if sweep_cfg_path.exists() {
        config::load_sweep_config(&sweep_cfg_path)?
    } else {
        // Directory produced without the CLI wrapper: synthesize provenance
        // from the summaries.
        let mut widths: Vec<usize> = summaries.iter().map(|s| s.width).collect();
        widths.sort_unstable();
        widths.dedup();
        let mut datasets: Vec<u64> = summaries.iter().map(|s| s.dataset_index).collect();
        datasets.sort_unstable();
        datasets.dedup();
        SweepConfig {
            widths,
            dataset_indices: datasets,
            base: adamlab_cli::config::RunTemplate::default(),
            beta2_grid: None,
            parallelism: 1,
            output_dir: args.sweep_dir.clone(),
        }
    };
    let report = build_report(&summaries, &sweep_cfg);
    if args.write {
        std::fs::write(
            args.sweep_dir.join("report.json"),
            serde_json::to_string_pretty(&report).expect("report serialization"),
        )?;
        std::fs::write(args.sweep_dir.join("report.txt"), render_table(&report))?;
    }
    if args.json {
        println!("{}", serde_json::to_string_pretty(&report).expect("report serialization"));
    } else {
        print!("{}", render_table(&report));
    }
    Ok(())
}

fn cmd_predict(args: PredictArgs) -> Result<()> {
    let traj = io::read_trajectory(&args.trajectory)?;
    let n = args.prefix.unwrap_or(traj.loss.len()).min(traj.loss.len());
    if n == 0 {
        return Err(Error::InvalidArgument("empty prefix".into()));
    }
    let prefix = &traj.loss[..n];
    let params = spike_params(args.params.as_deref(), None, None, None)?;
    let spikes = detect_spikes(prefix, &params)?;
    let prediction = predict_next_spike(&spikes, traj.config.adam.beta2, n - 1)?;
    let out = serde_json::json!({
        "prefix_epochs": n,
        "spike_count": spikes.len(),
        "predicted_epoch": prediction.predicted_epoch,
        "confidence": prediction.confidence,
    });
    println!("{}", serde_json::to_string_pretty(&out).expect("json"));
    Ok(())
}

fn cmd_verify(args: VerifyArgs) -> Result<()> {
    let mut dirs = vec![args.sweep_dir.clone()];
    for entry in std::fs::read_dir(&args.sweep_dir)? {
        let p = entry?.path();
        if p.is_dir() && p.file_name().is_some_and(|n| n.to_string_lossy().starts_with("beta2_")) {
            dirs.push(p);
        }
    }
    dirs.sort();
    let mut total = 0usize;
    for dir in dirs {
        if !dir.join(adamlab_cli::manifest::MANIFEST_FILE).exists() {
            continue;
        }
        let report = verify_dir(&dir)?;
        total += report.checked_files;
        if !report.ok() {
            for f in &report.missing {
                eprintln!("missing: {}/{f}", dir.display());
            }
            for f in &report.mismatched {
                eprintln!("hash mismatch: {}/{f}", dir.display());
            }
            return Err(Error::Format(format!(
                "verification failed in {}: {} missing, {} mismatched",
                dir.display(),
                report.missing.len(),
                report.mismatched.len()
            )));
        }
    }
    println!("verified {total} files: all hashes match");
    Ok(())
}
