use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use ldp_bandits::harness::config::AlgorithmSpec;
use ldp_bandits::harness::emit::{self, Format};
use ldp_bandits::harness::slope::DEFAULT_WINDOW;
use ldp_bandits::harness::{fit_slope, run_bai, run_coverage, run_experiment, suites, ExperimentConfig};
use ldp_bandits::Result;

/// Overrides the output directory of `run`.
const OUTPUT_DIR_ENV: &str = "LDP_BANDITS_OUTPUT_DIR";

#[derive(Parser)]
#[command(name = "ldp-bandits", version, about = "Locally private bandit experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Csv,
    Json,
    Both,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config and write its regret trace.
    Run {
        config: PathBuf,
        /// Output directory (default `out`, or the LDP_BANDITS_OUTPUT_DIR variable).
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "both")]
        format: OutputFormat,
        /// Record confidence-ellipsoid coverage instead of regret (contextual only).
        #[arg(long)]
        coverage: bool,
    },
    /// Fit a log-log slope to a CSV or JSON trace.
    Slope {
        trace: PathBuf,
        #[arg(long, default_value_t = DEFAULT_WINDOW)]
        window: usize,
        /// Also write the fit to this path (format from extension).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an acceptance suite (`c1` .. `c12`, `fast`, or `all`).
    Suite { id: String },
}

fn output_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn stem(cfg: &ExperimentConfig, path: &Path) -> String {
    if cfg.name.is_empty() {
        path.file_stem().and_then(|s| s.to_str()).unwrap_or("trace").to_string()
    } else {
        cfg.name.clone()
    }
}

fn run(config: &Path, out_dir: Option<PathBuf>, format: OutputFormat, coverage: bool) -> Result<bool> {
    let cfg = ExperimentConfig::from_path(config)?;
    let dir = output_dir(out_dir);
    std::fs::create_dir_all(&dir)?;
    let name = stem(&cfg, config);
    if coverage {
        let summary = run_coverage(&cfg)?;
        let path = dir.join(format!("{name}.coverage.json"));
        std::fs::write(&path, serde_json::to_string_pretty(&summary).expect("serializes") + "\n")?;
        println!("coverage {:.4} -> {}", summary.fraction, path.display());
        return Ok(true);
    }
    if matches!(cfg.algorithm, AlgorithmSpec::LilUcb { .. }) {
        let summary = run_bai(&cfg)?;
        let path = dir.join(format!("{name}.bai.json"));
        std::fs::write(&path, serde_json::to_string_pretty(&summary).expect("serializes") + "\n")?;
        println!(
            "success {:.3}, mean pulls {:.1}, capped {} -> {}",
            summary.success_rate,
            summary.mean_pulls,
            summary.capped,
            path.display()
        );
        return Ok(true);
    }
    let trace = run_experiment(&cfg)?;
    for f in &trace.failures {
        eprintln!("replication {} failed: {}", f.replication, f.message);
    }
    let targets: &[Format] = match format {
        OutputFormat::Csv => &[Format::Csv],
        OutputFormat::Json => &[Format::Json],
        OutputFormat::Both => &[Format::Csv, Format::Json],
    };
    for &f in targets {
        let ext = if f == Format::Csv { "csv" } else { "json" };
        let path = dir.join(format!("{name}.{ext}"));
        emit::write_trace(&trace, &path, f)?;
        println!("wrote {}", path.display());
    }
    let mean = trace.mean();
    println!(
        "{} replications ({} failed), final mean regret {} in {:.1}s",
        trace.n_replications(),
        trace.failures.len(),
        mean.last().copied().unwrap_or(0.0),
        trace.wall_clock.as_secs_f64()
    );
    match fit_slope(&trace.checkpoints, &mean, DEFAULT_WINDOW) {
        Ok(fit) => println!("exponent {:.4} (residual {:.4})", fit.exponent, fit.residual),
        Err(e) => println!("no slope: {e}"),
    }
    Ok(trace.failures.is_empty())
}

fn slope(trace: &Path, window: usize, out: Option<PathBuf>) -> Result<bool> {
    let rows = emit::read_rows(trace)?;
    let ts: Vec<u64> = rows.iter().map(|r| r.checkpoint).collect();
    let means: Vec<f64> = rows.iter().map(|r| r.mean_regret).collect();
    let fit = fit_slope(&ts, &means, window)?;
    print!("{}", emit::fit_to_json(&fit));
    if let Some(path) = out {
        emit::write_fit(&fit, &path, Format::from_path(&path)?)?;
    }
    Ok(true)
}

fn suite(id: &str) -> Result<bool> {
    let mut ok = true;
    for criterion in suites::suite_criteria(id)? {
        let report = suites::run_criterion(criterion)?;
        println!("{report}");
        ok &= report.passed;
    }
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, out_dir, format, coverage } => run(&config, out_dir, format, coverage),
        Command::Slope { trace, window, out } => slope(&trace, window, out),
        Command::Suite { id } => suite(&id),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
