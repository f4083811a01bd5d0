//! Command-line front end.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::experiment::{export_attention_heatmap, run_akbr, sweep_csv, sweep_wl_iterations, ExperimentConfig, ExperimentReport};
use crate::features::{feature_matrix, KernelKind};
use crate::graph::{dataset_summary, GraphDataset};
use crate::kernel::KernelMatrix;
use crate::model::check_model_gradients;
use crate::tudataset::{load_tudataset, LabelSource};

/// Environment variable naming the directory that holds dataset folders.
pub const DATA_ROOT_ENV: &str = "AKBR_DATA_ROOT";

#[derive(Debug, Parser)]
#[command(name = "akbr", version, about = "Adaptive kernel-based graph classification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Cross-validate one configuration and write report.json plus CSVs.
    Run(RunArgs),
    /// Cross-validate WL models over a range of iteration counts.
    Sweep(SweepArgs),
    /// Dump the substructure count matrix.
    Features(DumpArgs),
    /// Dump the raw (unweighted) kernel matrix.
    Gram(DumpArgs),
    /// Finite-difference check of the end-to-end gradients on toy data.
    Gradcheck(GradcheckArgs),
    /// Print dataset statistics.
    Summary(DatasetArgs),
}

#[derive(Debug, Args)]
struct DatasetArgs {
    /// Dataset name under the data root, or a dataset directory.
    #[arg(long)]
    dataset: Option<String>,
    /// Directory containing dataset folders (default: $AKBR_DATA_ROOT or ./data).
    #[arg(long)]
    data_root: Option<PathBuf>,
    /// Initial vertex labels: `file` (node label file, else degree) or `degree`.
    #[arg(long)]
    labels: Option<LabelSource>,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    #[command(flatten)]
    data: DatasetArgs,
    /// Flat `key = value` config file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    kernel: Option<KernelKind>,
    #[arg(long)]
    wl_iterations: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    weight_decay: Option<f64>,
    #[arg(long)]
    att_hid: Option<usize>,
    #[arg(long)]
    nhid1: Option<usize>,
    #[arg(long)]
    nhid2: Option<usize>,
    #[arg(long)]
    mlp_depth: Option<usize>,
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long)]
    repeats: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Train on frozen uniform attention (plain kernel rows).
    #[arg(long)]
    no_attention: bool,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    exp: ExperimentArgs,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    exp: ExperimentArgs,
    #[arg(long, default_value_t = 1)]
    from: usize,
    #[arg(long, default_value_t = 10)]
    to: usize,
    /// Features per iteration in the attention heatmap.
    #[arg(long, default_value_t = 13)]
    heatmap_features: usize,
    /// Iterations `1..=m` covered by the attention heatmap.
    #[arg(long, default_value_t = 6)]
    heatmap_iterations: usize,
}

#[derive(Debug, Args)]
struct DumpArgs {
    #[command(flatten)]
    data: DatasetArgs,
    #[arg(long, default_value = "wl")]
    kernel: KernelKind,
    #[arg(long, default_value_t = 1)]
    wl_iterations: usize,
    /// Output file (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GradcheckArgs {
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value_t = 1e-5)]
    eps: f64,
    #[arg(long, default_value_t = 1e-4)]
    tolerance: f64,
}

/// Parses `argv` (including the program name), runs the command and returns
/// the process exit code: 0 on success, 1 on failure, 2 on usage errors.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).try_init();
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn dispatch(cmd: Command) -> Result<i32> {
    match cmd {
        Command::Run(a) => cmd_run(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Features(a) => cmd_features(a),
        Command::Gram(a) => cmd_gram(a),
        Command::Gradcheck(a) => cmd_gradcheck(a),
        Command::Summary(a) => cmd_summary(a),
    }
}

/// Resolves a dataset argument to `(directory, name)`.
pub fn resolve_dataset(dataset: &str, data_root: Option<&Path>) -> Result<(PathBuf, String)> {
    let as_path = Path::new(dataset);
    if as_path.is_dir() {
        let name = as_path
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .ok_or_else(|| Error::Argument(format!("cannot name dataset at {dataset}")))?;
        return Ok((as_path.to_path_buf(), name));
    }
    let root = data_root
        .map(Path::to_path_buf)
        .or_else(|| std::env::var_os(DATA_ROOT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("data"));
    let dir = root.join(dataset);
    if !dir.is_dir() {
        return Err(Error::MissingFile(dir));
    }
    Ok((dir, dataset.to_string()))
}

fn load(dataset: &str, data_root: Option<&Path>, labels: LabelSource) -> Result<GraphDataset> {
    let (dir, name) = resolve_dataset(dataset, data_root)?;
    load_tudataset(&dir, &name, labels)
}

fn build_config(a: &ExperimentArgs) -> Result<ExperimentConfig> {
    let mut cfg = match (&a.config, &a.data.dataset) {
        (Some(path), _) => ExperimentConfig::from_file(path)?,
        (None, Some(d)) => ExperimentConfig::for_dataset(d),
        (None, None) => return Err(Error::Argument("--dataset or --config is required".into())),
    };
    if let Some(d) = &a.data.dataset {
        cfg.dataset = d.clone();
    }
    if let Some(v) = a.data.labels {
        cfg.labels = v;
    }
    if let Some(v) = a.kernel {
        cfg.kernel = v;
    }
    macro_rules! set {
        ($($f:ident),*) => { $( if let Some(v) = a.$f { cfg.$f = v; } )* };
    }
    set!(wl_iterations, lr, epochs, weight_decay, att_hid, nhid1, nhid2, mlp_depth, folds, repeats, seed);
    if a.no_attention {
        cfg.adaptive = false;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write_file(path: &Path, body: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, body).map_err(|e| Error::io(path, e))
}

fn default_out(cfg: &ExperimentConfig, suffix: &str) -> PathBuf {
    let name = Path::new(&cfg.dataset)
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into());
    PathBuf::from("results").join(format!("{name}_{}{suffix}", cfg.kernel))
}

fn write_report(report: &ExperimentReport, dir: &Path) -> Result<()> {
    write_file(&dir.join("report.json"), &report.to_json()?)?;
    write_file(&dir.join("loss_curve.csv"), &report.loss_curve_csv())?;
    write_file(&dir.join("attention.csv"), &report.attention_trace_csv())?;
    if let Some(state) = &report.artifacts.first_state {
        state.save_checkpoint(dir.join("checkpoint.json"))?;
    }
    Ok(())
}

fn cmd_run(a: RunArgs) -> Result<i32> {
    let cfg = build_config(&a.exp)?;
    let dataset = load(&cfg.dataset, a.exp.data.data_root.as_deref(), cfg.labels)?;
    let report = run_akbr(&cfg, &dataset)?;
    let out = a.exp.out.clone().unwrap_or_else(|| {
        let suffix = match cfg.kernel {
            KernelKind::Wl => format!("_i{}", cfg.wl_iterations),
            KernelKind::Sp => String::new(),
        };
        default_out(&cfg, &suffix)
    });
    write_report(&report, &out)?;
    println!(
        "{} {} accuracy {:.2} ± {:.2} % over {} runs ({:.1}s) -> {}",
        dataset.name(),
        cfg.kernel,
        report.mean_accuracy,
        report.std_error,
        report.all_scores().len(),
        report.wall_clock_secs,
        out.display()
    );
    Ok(0)
}

fn cmd_sweep(a: SweepArgs) -> Result<i32> {
    let mut cfg = build_config(&a.exp)?;
    cfg.kernel = KernelKind::Wl;
    let dataset = load(&cfg.dataset, a.exp.data.data_root.as_deref(), cfg.labels)?;
    let reports = sweep_wl_iterations(&cfg, a.from..=a.to, &dataset)?;
    let out = a.exp.out.clone().unwrap_or_else(|| default_out(&cfg, "_sweep"));
    write_file(&out.join("sweep.csv"), &sweep_csv(&reports))?;
    for r in &reports {
        write_report(r, &out.join(format!("i{}", r.config.wl_iterations)))?;
        println!("i={} accuracy {:.2} ± {:.2} %", r.config.wl_iterations, r.mean_accuracy, r.std_error);
    }
    let m = a.heatmap_iterations.min(a.to);
    if a.from <= 1 && m >= 1 {
        let csv = export_attention_heatmap(&reports, a.heatmap_features, m)?;
        write_file(&out.join("attention_heatmap.csv"), &csv)?;
    }
    println!("-> {}", out.display());
    Ok(0)
}

fn emit(out: Option<&Path>, body: Vec<u8>) -> Result<()> {
    match out {
        Some(p) => write_file(p, &String::from_utf8_lossy(&body)),
        None => {
            use std::io::Write;
            match std::io::stdout().lock().write_all(&body) {
                // a closed pipe (`| head`) is not an error
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Error::io("<stdout>", e)),
                _ => Ok(()),
            }
        }
    }
}

fn dump_inputs(a: &DumpArgs) -> Result<crate::features::FeatureMatrix> {
    let name = a
        .data
        .dataset
        .as_deref()
        .ok_or_else(|| Error::Argument("--dataset is required".into()))?;
    let d = load(name, a.data.data_root.as_deref(), a.data.labels.unwrap_or_default())?;
    Ok(feature_matrix(&d, a.kernel, a.wl_iterations))
}

fn cmd_features(a: DumpArgs) -> Result<i32> {
    let x = dump_inputs(&a)?;
    let mut buf = Vec::new();
    x.write_text(&mut buf).map_err(|e| Error::io("<buffer>", e))?;
    emit(a.out.as_deref(), buf)?;
    Ok(0)
}

fn cmd_gram(a: DumpArgs) -> Result<i32> {
    let x = dump_inputs(&a)?;
    let k = KernelMatrix::from_features(x.to_f64().view(), x.kind, false);
    let mut buf = Vec::new();
    k.write_text(&mut buf).map_err(|e| Error::io("<buffer>", e))?;
    emit(a.out.as_deref(), buf)?;
    Ok(0)
}

fn cmd_gradcheck(a: GradcheckArgs) -> Result<i32> {
    let report = check_model_gradients(a.seed, 6, 8, 3, a.eps, a.tolerance)?;
    println!(
        "max relative error {:.3e} over {} coordinates (tolerance {:.0e}): {}",
        report.max_relative_error,
        report.coordinates_checked,
        report.tolerance,
        if report.passed { "ok" } else { "FAILED" }
    );
    Ok(if report.passed { 0 } else { 1 })
}

fn cmd_summary(a: DatasetArgs) -> Result<i32> {
    let name = a
        .dataset
        .as_deref()
        .ok_or_else(|| Error::Argument("--dataset is required".into()))?;
    let d = load(name, a.data_root.as_deref(), a.labels.unwrap_or_default())?;
    println!("{}", dataset_summary(&d)?);
    Ok(0)
}
