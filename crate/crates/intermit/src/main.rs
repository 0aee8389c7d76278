//! Command-line front end: `run`, `preset`, `sweep`, and `analytic`.
//!
//! The binary is a thin shell over the library; everything it does is also
//! reachable from the examples. Scenario sources compose as
//! `--config FILE` or `--preset NAME`, then repeated `--set key=value`
//! overrides, applied in order.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use intermit::analytics::{self, LoadPoint, ModelParams};
use intermit::config::{
    apply_override, load_config, parse_duration_ns, parse_rate_pps, ScenarioConfig,
};
use intermit::engine;
use intermit::metrics::SimulationReport;
use intermit::output;
use intermit::presets;
use intermit::sweep::run_sweep;
use intermit::workload::read_trace_file;

const OUT_DIR_ENV: &str = "INTERMIT_OUT_DIR";

#[derive(Parser)]
#[command(
    name = "intermit",
    version,
    about = "Discrete-event model of intermittent polling across shared receive queues"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and print its summary.
    Run(RunArgs),
    /// List built-in presets, or print one as re-usable config text.
    Preset(PresetArgs),
    /// Re-run a scenario across several values of one config key.
    Sweep(SweepArgs),
    /// Evaluate a closed-form model quantity and print the number.
    Analytic(AnalyticArgs),
}

#[derive(Args)]
struct ScenarioArgs {
    /// Config file of `key = value` lines.
    #[arg(long, value_name = "FILE", conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in preset name (see `preset --list`).
    #[arg(long, value_name = "NAME")]
    preset: Option<String>,
    /// Override one key, e.g. `--set rate=5mpps`. Repeatable, applied in order.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl ScenarioArgs {
    fn resolve(&self) -> Result<ScenarioConfig, String> {
        let mut cfg = if let Some(path) = &self.config {
            load_config(path).map_err(|e| format!("{}: {e}", path.display()))?
        } else if let Some(name) = &self.preset {
            presets::preset(name).map_err(|e| e.to_string())?
        } else {
            ScenarioConfig::default()
        };
        for pair in &self.set {
            let (key, value) = pair
                .split_once('=')
                .ok_or_else(|| format!("--set expects KEY=VALUE, got '{pair}'"))?;
            apply_override(&mut cfg, key.trim(), value.trim()).map_err(|e| e.to_string())?;
        }
        Ok(cfg)
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Replay an arrival trace CSV instead of generating arrivals.
    #[arg(long, value_name = "FILE")]
    trace: Option<PathBuf>,
    /// Write the run directory here (overrides config `out_dir` and $INTERMIT_OUT_DIR).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PresetArgs {
    /// Print the catalog of preset names and descriptions.
    #[arg(long)]
    list: bool,
    /// Preset to print as config text.
    name: Option<String>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Config key to vary.
    #[arg(long, value_name = "KEY")]
    axis: String,
    /// Comma-separated values for the axis.
    #[arg(long, value_name = "V1,V2,...", value_delimiter = ',', required = true)]
    values: Vec<String>,
    /// Run points one at a time instead of in parallel.
    #[arg(long)]
    serial: bool,
    /// Write `sweep.csv` (and point directories with --emit-points) here.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Also write a full run directory per sweep point.
    #[arg(long, requires = "out")]
    emit_points: bool,
}

#[derive(Args)]
struct AnalyticArgs {
    #[command(subcommand)]
    op: AnalyticOp,
}

/// Shared model parameters for the vacation-law operations. Durations accept
/// the config units (`ns`, `us`, `ms`, `s`).
#[derive(Args)]
struct ModelArgs {
    /// Number of polling threads M.
    #[arg(long, default_value_t = 2)]
    m: u32,
    /// Number of receive queues N.
    #[arg(long, default_value_t = 1)]
    n: u32,
    /// Short (primary) timer.
    #[arg(long = "t-short", value_name = "DUR", default_value = "10us")]
    t_short: String,
    /// Long (backup) timer.
    #[arg(long = "t-long", value_name = "DUR", default_value = "500us")]
    t_long: String,
    /// Vacation target used by the adaptive rule.
    #[arg(long, value_name = "DUR", default_value = "10us")]
    target: String,
}

impl ModelArgs {
    fn build(&self) -> Result<ModelParams, String> {
        let ts = dur_f64(&self.t_short)?;
        let tl = dur_f64(&self.t_long)?;
        let tgt = dur_f64(&self.target)?;
        ModelParams::new(self.m, self.n, ts, tl, tgt).map_err(|e| e.to_string())
    }
}

#[derive(Subcommand)]
enum AnalyticOp {
    /// Mean busy period E[B] = V * rho / (1 - rho) fed by one vacation.
    ExpectedBusy {
        /// Mean vacation length.
        #[arg(long, value_name = "DUR")]
        vacation: String,
        /// Arrival rate (pps/kpps/mpps).
        #[arg(long, value_name = "RATE")]
        lambda: String,
        /// Service rate (pps/kpps/mpps).
        #[arg(long, value_name = "RATE")]
        mu: String,
    },
    /// Load recovered from period means: rho = B / (V + B).
    LoadFromPeriods {
        #[arg(long, value_name = "DUR")]
        busy: String,
        #[arg(long, value_name = "DUR")]
        vacation: String,
    },
    /// High-load vacation CDF at x.
    CdfHigh {
        #[arg(long, value_name = "DUR")]
        x: String,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// High-load vacation density at x (continuous part only).
    PdfHigh {
        #[arg(long, value_name = "DUR")]
        x: String,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Mean vacation under the high-load law, in ns.
    MeanHigh {
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Probability that a given backup wins the next race.
    BackupSuccess {
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Low-load vacation CDF at x.
    CdfLow {
        #[arg(long, value_name = "DUR")]
        x: String,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Mean vacation when each competitor is primary with probability p, in ns.
    MeanGeneral {
        /// Probability that a competitor sleeps the short timer.
        #[arg(long, value_name = "P")]
        primary_prob: f64,
        /// Print the t_long >> t_short approximation instead of the exact mean.
        #[arg(long)]
        approx: bool,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Short timer that holds the mean vacation at the target, in ns.
    AdaptiveTs {
        #[arg(long)]
        m: u32,
        #[arg(long)]
        rho: f64,
        #[arg(long, value_name = "DUR")]
        target: String,
    },
    /// Multi-queue variant of the adaptive timer rule, in ns.
    AdaptiveTsMq {
        #[arg(long)]
        m: u32,
        #[arg(long)]
        n: u32,
        #[arg(long)]
        rho: f64,
        #[arg(long, value_name = "DUR")]
        target: String,
    },
}

fn dur_f64(s: &str) -> Result<f64, String> {
    parse_duration_ns(s).map(|ns| ns as f64)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Preset(args) => cmd_preset(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Analytic(args) => cmd_analytic(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}

fn out_dir_for(cli_out: &Option<PathBuf>, cfg: &ScenarioConfig) -> Option<PathBuf> {
    cli_out
        .clone()
        .or_else(|| cfg.out_dir.as_ref().map(PathBuf::from))
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
}

/// Writes to stdout. When the reader hangs up early (say, `run | head`) the
/// rest of the text is moot, so the process exits quietly like any pipeline
/// stage; file artifacts are always on disk before the first `put`.
fn put(text: impl std::fmt::Display) -> Result<(), String> {
    use std::io::Write;
    match write!(std::io::stdout(), "{text}") {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => std::process::exit(0),
        r => r.map_err(|e| format!("stdout: {e}")),
    }
}

fn cmd_run(args: RunArgs) -> Result<(), String> {
    let cfg = args.scenario.resolve()?;
    let report = match &args.trace {
        Some(path) => {
            let arrivals = read_trace_file(path).map_err(|e| format!("{}: {e}", path.display()))?;
            engine::run_with_arrivals(&cfg, arrivals)
        }
        None => engine::run(&cfg),
    }
    .map_err(|e| e.to_string())?;
    let dir = out_dir_for(&args.out, &cfg);
    if let Some(dir) = &dir {
        emit(&report, dir)?;
    }
    put(output::render_summary(&report))?;
    if let Some(dir) = &dir {
        put(format!("\nrun directory: {}\n", dir.display()))?;
    }
    Ok(())
}

fn emit(report: &SimulationReport, dir: &Path) -> Result<(), String> {
    output::emit_report(report, dir).map_err(|e| format!("writing {}: {e}", dir.display()))
}

fn cmd_preset(args: PresetArgs) -> Result<(), String> {
    if args.list {
        for (name, desc) in presets::catalog() {
            put(format!("{name:<18} {desc}\n"))?;
        }
        return Ok(());
    }
    let name = args
        .name
        .ok_or("pass a preset name or --list".to_string())?;
    let cfg = presets::preset(&name).map_err(|e| e.to_string())?;
    put(cfg)?;
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<(), String> {
    let base = args.scenario.resolve()?;
    let points = run_sweep(&base, &args.axis, &args.values, !args.serial);
    let csv = if let Some(dir) = &args.out {
        std::fs::create_dir_all(dir).map_err(|e| format!("creating {}: {e}", dir.display()))?;
        let csv = dir.join("sweep.csv");
        output::write_sweep_csv(&points, &args.axis, &csv)
            .map_err(|e| format!("writing {}: {e}", csv.display()))?;
        if args.emit_points {
            for (i, p) in points.iter().enumerate() {
                if let Ok(report) = &p.outcome {
                    emit(report, &dir.join(format!("point-{i:03}")))?;
                }
            }
        }
        Some(csv)
    } else {
        None
    };
    put(format!(
        "{:<16} {:<8} {:>12} {:>10} {:>10}\n",
        args.axis, "status", "served", "cpu_proxy", "p99_ns"
    ))?;
    for p in &points {
        match &p.outcome {
            Ok(r) => put(format!(
                "{:<16} {:<8} {:>12} {:>10.4} {:>10}\n",
                p.value, "ok", r.totals.served, r.cpu_proxy, r.latency.p99_ns
            ))?,
            Err(e) => put(format!("{:<16} {:<8} {e}\n", p.value, "error"))?,
        }
    }
    if let Some(csv) = csv {
        put(format!("\nsweep table: {}\n", csv.display()))?;
    }
    if points.iter().any(|p| p.outcome.is_err()) {
        return Err("one or more sweep points failed".into());
    }
    Ok(())
}

fn cmd_analytic(args: AnalyticArgs) -> Result<(), String> {
    let value = match args.op {
        AnalyticOp::ExpectedBusy {
            vacation,
            lambda,
            mu,
        } => {
            let load = LoadPoint::from_rates(parse_rate_pps(&lambda)?, parse_rate_pps(&mu)?)
                .map_err(|e| e.to_string())?;
            analytics::expected_busy_given_vacation(dur_f64(&vacation)?, &load)
                .map_err(|e| e.to_string())?
        }
        AnalyticOp::LoadFromPeriods { busy, vacation } => {
            analytics::load_from_periods(dur_f64(&busy)?, dur_f64(&vacation)?)
                .map_err(|e| e.to_string())?
        }
        AnalyticOp::CdfHigh { x, model } => {
            analytics::vacation_cdf_high_load(dur_f64(&x)?, &model.build()?)
        }
        AnalyticOp::PdfHigh { x, model } => {
            analytics::vacation_pdf_high_load(dur_f64(&x)?, &model.build()?)
                .map_err(|e| e.to_string())?
        }
        AnalyticOp::MeanHigh { model } => analytics::mean_vacation_high_load(&model.build()?),
        AnalyticOp::BackupSuccess { model } => {
            analytics::backup_success_prob(&model.build()?).map_err(|e| e.to_string())?
        }
        AnalyticOp::CdfLow { x, model } => {
            analytics::vacation_cdf_low_load(dur_f64(&x)?, &model.build()?)
        }
        AnalyticOp::MeanGeneral {
            primary_prob,
            approx,
            model,
        } => {
            let mean = analytics::mean_vacation_general(&model.build()?, primary_prob)
                .map_err(|e| e.to_string())?;
            if approx {
                mean.approx
            } else {
                mean.exact
            }
        }
        AnalyticOp::AdaptiveTs { m, rho, target } => {
            analytics::adaptive_ts(m, rho, dur_f64(&target)?)
        }
        AnalyticOp::AdaptiveTsMq { m, n, rho, target } => {
            analytics::adaptive_ts_multiqueue(m, n, rho, dur_f64(&target)?)
                .map_err(|e| e.to_string())?
        }
    };
    put(format!("{value}\n"))?;
    Ok(())
}

// The binary stays test-free; end-to-end coverage lives in tests/cli.rs where
// it exercises the installed executable.
