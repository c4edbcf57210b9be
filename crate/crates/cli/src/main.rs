use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use ceco::compare::{compare_parallel, run_one};
use ceco::config::{LoadedConfig, ScenarioConfig, SEED_ENV};
use ceco::{plot, report, trace_io};
use ceco_core::comfort;
use ceco_core::mpc::ControllerKind;
use ceco_core::sim::{MetricsReport, Scenario, StepIteration};
use clap::{Args, Parser, Subcommand};

/// Energy and comfort optimizing A/C control, simulated over a drive cycle.
#[derive(Parser)]
#[command(name = "ceco", version, arg_required_else_help = true)]
struct Cli {
    /// Print a complete configuration with every default and exit.
    #[arg(long)]
    dump_default_config: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one controller and write its trace and metrics.
    Run(RunArgs),
    /// Simulate all four controllers and tabulate the savings.
    Compare(CompareArgs),
    /// Render SVG charts from a trace CSV.
    Plot(PlotArgs),
    /// Comfort model utilities.
    Pmv {
        #[command(subcommand)]
        command: PmvCommand,
    },
}

#[derive(Args)]
struct ConfigArgs {
    /// Scenario file; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the configured output directory.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Record wall-clock solve times. Output is then no longer reproducible.
    #[arg(long)]
    timing: bool,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: ConfigArgs,
    #[arg(long, value_parser = parse_kind)]
    controller: ControllerKind,
    /// Write every solver iteration of the run to this CSV.
    #[arg(long)]
    solver_log: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    common: ConfigArgs,
}

#[derive(Args)]
struct PlotArgs {
    #[arg(long)]
    trace: PathBuf,
    /// Defaults to the trace's directory.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum PmvCommand {
    /// Evaluate the automotive PMV for one operating point.
    Eval(PmvArgs),
}

#[derive(Args)]
struct PmvArgs {
    /// Cabin air temperature, K.
    #[arg(long, allow_negative_numbers = true)]
    t_cab: f64,
    /// Vent outlet air temperature, K.
    #[arg(long, allow_negative_numbers = true)]
    t_ain: f64,
    /// Interior surface temperature, K.
    #[arg(long, allow_negative_numbers = true)]
    t_int: f64,
    /// Blower air mass flow, kg/s.
    #[arg(long, allow_negative_numbers = true)]
    m_bl: f64,
    /// Solar irradiance, W/m².
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    irradiance: f64,
    /// Occupant parameters are taken from this scenario file.
    #[arg(long)]
    config: Option<PathBuf>,
}

fn parse_kind(s: &str) -> Result<ControllerKind, String> {
    s.parse().map_err(|e| format!("{e}"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    if cli.dump_default_config {
        print!("{}", ScenarioConfig::default().to_toml());
        return Ok(ExitCode::SUCCESS);
    }
    match cli.command {
        Some(Command::Run(a)) => cmd_run(a),
        Some(Command::Compare(a)) => cmd_compare(a),
        Some(Command::Plot(a)) => cmd_plot(a),
        Some(Command::Pmv {
            command: PmvCommand::Eval(a),
        }) => cmd_pmv_eval(a),
        None => bail!("no command given, see --help"),
    }
}

fn load_config(path: Option<&Path>) -> Result<LoadedConfig> {
    Ok(match path {
        Some(p) => ScenarioConfig::load(p)?,
        None => LoadedConfig {
            config: ScenarioConfig::default(),
            base: PathBuf::new(),
        },
    })
}

/// Loads and validates everything, then creates the output directory.
fn prepare(args: &ConfigArgs) -> Result<(Scenario, PathBuf)> {
    let loaded = load_config(args.config.as_deref())?;
    let seed_env = std::env::var(SEED_ENV).ok();
    let scenario = loaded.build_scenario(seed_env.as_deref())?;
    let out = args.out_dir.clone().unwrap_or_else(|| loaded.output_dir());
    std::fs::create_dir_all(&out).with_context(|| format!("cannot create {}", out.display()))?;
    Ok((scenario, out))
}

fn write_outputs(out: &Path, trace: &ceco_core::sim::SimTrace) -> Result<MetricsReport> {
    let kind = trace.controller;
    let trace_path = out.join(format!("trace_{kind}.csv"));
    trace_io::write_trace_file(&trace_path, trace).with_context(|| format!("writing {}", trace_path.display()))?;
    let metrics = MetricsReport::from_trace(trace);
    let metrics_path = out.join(format!("metrics_{kind}.json"));
    report::write_json(&metrics_path, &metrics).with_context(|| format!("writing {}", metrics_path.display()))?;
    Ok(metrics)
}

fn write_solver_log(path: &Path, log: &[StepIteration]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["step", "iter", "f", "violation", "step_length", "grad_norm", "penalty"])?;
    for s in log {
        let r = &s.record;
        w.write_record([
            s.step.to_string(),
            r.iter.to_string(),
            r.f.to_string(),
            r.violation.to_string(),
            r.step_length.to_string(),
            r.grad_norm.to_string(),
            r.penalty.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn cmd_run(a: RunArgs) -> Result<ExitCode> {
    let (scenario, out) = prepare(&a.common)?;
    let mut log = Vec::new();
    let result = run_one(a.controller, &scenario, a.common.timing, a.solver_log.as_ref().map(|_| &mut log));
    if let Some(p) = &a.solver_log {
        write_solver_log(p, &log).with_context(|| format!("writing {}", p.display()))?;
    }
    match result {
        Ok(trace) => {
            let metrics = write_outputs(&out, &trace)?;
            print!("{}", report::metrics_table(&metrics));
            Ok(ExitCode::SUCCESS)
        }
        Err(e) => {
            write_outputs(&out, &e.partial)?;
            bail!("{} failed: {e}", a.controller)
        }
    }
}

fn cmd_compare(a: CompareArgs) -> Result<ExitCode> {
    let (scenario, out) = prepare(&a.common)?;
    let (table, results) = compare_parallel(&scenario, a.common.timing);
    for r in &results {
        match r {
            Ok(trace) => write_outputs(&out, trace)?,
            Err(e) => write_outputs(&out, &e.partial)?,
        };
    }
    report::write_json(&out.join("comparison.json"), &table)?;
    print!("{}", report::comparison_table(&table));
    std::io::stdout().flush()?;
    Ok(if table.rows.iter().any(|r| r.error.is_some()) {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    })
}

fn cmd_plot(a: PlotArgs) -> Result<ExitCode> {
    let rows = trace_io::read_trace_file(&a.trace).with_context(|| format!("{}", a.trace.display()))?;
    let dir = match a.out_dir {
        Some(d) => d,
        None => a.trace.parent().map(Path::to_path_buf).unwrap_or_default(),
    };
    for p in plot::write_plots(&rows, &dir)? {
        println!("{}", p.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_pmv_eval(a: PmvArgs) -> Result<ExitCode> {
    let loaded = load_config(a.config.as_deref())?;
    let occ = &loaded.config.occupant;
    occ.validate().map_err(|e| anyhow::anyhow!("invalid occupant section, {e}"))?;
    let c = |k: f64| k - 273.15;
    let raw = comfort::pmv_modified(
        c(a.t_cab),
        c(a.t_ain),
        c(a.t_int),
        a.m_bl,
        occ.effective_radiation(a.irradiance),
        occ,
    );
    if !raw.is_finite() {
        bail!("PMV is not finite for these inputs");
    }
    println!("pmv       {raw:.4}");
    println!("reported  {:.4}", comfort::clamp_for_report(raw));
    println!("sensation {}", comfort::sensation_level(raw));
    Ok(ExitCode::SUCCESS)
}
