//! `stefan-es`: run scenarios, sweeps and oracle checks from the shell.
//!
//! Configuration is layered: built-in defaults, then `--config FILE`, then
//! each `--set section.key=value` in order, then `--scenario`. Later layers
//! win. Exit status is 0 on success, 1 when a scenario or check fails and 2
//! for usage or configuration errors.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use stefan_es::analysis::{decay_constants, KernelSpec};
use stefan_es::checks::{self, Check};
use stefan_es::dither::DitherGenerator;
use stefan_es::harness::{metrics_block, run_scenario};
use stefan_es::trace::{fmt_sig, write_trace};
use stefan_es::{load_config_with_overrides, Error, SimConfig};

#[derive(Parser)]
#[command(name = "stefan-es", version, about = "Extremum seeking through Stefan actuation dynamics")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Configuration file (`section.key = value` lines).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Override one key; repeatable, applied left to right.
    #[arg(long = "set", global = true, value_name = "SECTION.KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    /// Scenario name; shorthand for `--set sim.scenario=NAME` applied last.
    #[arg(long, global = true, value_name = "NAME")]
    scenario: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write `trace.csv` and `metrics.txt`.
    Run,
    /// Compare the solvers against their oracles.
    Validate,
    /// Run one scenario per value of a key, e.g. `controller.a=0.05,0.1,0.2`.
    Sweep {
        #[arg(value_name = "KEY=V1,V2,...", num_args = 1.., required = true)]
        assignment: Vec<String>,
    },
    /// Backstepping kernel and transform report.
    TransformCheck,
    /// Sample the probing signal over the horizon to `dither.csv`.
    DitherExport,
}

/// Failure categories mapped onto exit codes.
enum Failure {
    Usage(String),
    Run(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse { .. } | Error::Validation { .. } | Error::Config(_) => Failure::Usage(e.to_string()),
            other => Failure::Run(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Run(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Run => run(&cli.common),
        Command::Validate => validate(&cli.common),
        Command::Sweep { assignment } => sweep(&cli.common, &assignment.join("")),
        Command::TransformCheck => transform_check(&cli.common),
        Command::DitherExport => dither_export(&cli.common),
    }
}

fn load(common: &Common, extra: &[String]) -> Result<SimConfig, Failure> {
    let text = match &common.config {
        Some(path) => fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?,
        None => String::new(),
    };
    let mut overrides = common.overrides.clone();
    overrides.extend(extra.iter().cloned());
    if let Some(name) = &common.scenario {
        overrides.push(format!("sim.scenario = {name}"));
    }
    Ok(load_config_with_overrides(&text, &overrides)?)
}

fn ensure_dir(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::Run(format!("{}: {e}", dir.display())))
}

fn write_file(path: &Path, body: &str) -> Result<(), Failure> {
    fs::write(path, body).map_err(|e| Failure::Run(format!("{}: {e}", path.display())))
}

fn run(common: &Common) -> Result<(), Failure> {
    let cfg = load(common, &[])?;
    let out = run_scenario(&cfg)?;
    ensure_dir(&common.out)?;
    let rows = write_trace(&out.trace, &common.out.join("trace.csv"))?;
    let block = metrics_block(&cfg, &out);
    write_file(&common.out.join("metrics.txt"), &block)?;
    write_file(&common.out.join("config.txt"), &cfg.to_text())?;
    if !out.lyapunov.is_empty() {
        let mut csv = String::from("t,V1,V2,V3,V,W\n");
        for l in &out.lyapunov {
            let row = [l.t, l.v1, l.v2, l.v3, l.v, l.w].map(fmt_sig).join(",");
            csv.push_str(&row);
            csv.push('\n');
        }
        write_file(&common.out.join("lyapunov.csv"), &csv)?;
    }
    print!("{block}");
    eprintln!("wrote {rows} rows to {}", common.out.join("trace.csv").display());
    Ok(())
}

fn print_checks(checks: &[Check]) -> Result<(), Failure> {
    let mut stdout = std::io::stdout().lock();
    for c in checks {
        let tag = if c.passed { "PASS" } else { "FAIL" };
        let _ = writeln!(stdout, "{tag}  {:<44} {:>12.3e}  (limit {:.1e})", c.name, c.value, c.limit);
    }
    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Run(format!("failed checks: {}", failed.join(", "))))
    }
}

fn kernel_spec(cfg: &SimConfig) -> Result<KernelSpec, Failure> {
    Ok(KernelSpec::new(cfg.controller.k_gain * cfg.map.hessian, cfg.map.theta_star)?)
}

fn validate(common: &Common) -> Result<(), Failure> {
    let cfg = load(common, &[])?;
    let mut all = checks::plant_checks();
    all.extend(checks::dither_checks(&cfg.dither));
    all.extend(checks::transform_checks(&kernel_spec(&cfg)?));
    print_checks(&all)
}

fn transform_check(common: &Common) -> Result<(), Failure> {
    let cfg = load(common, &[])?;
    let spec = kernel_spec(&cfg)?;
    let (m, n) = decay_constants(&spec);
    println!("k_bar = {}", spec.k_bar);
    println!("s_star = {}", spec.s_star);
    println!("rho = {}", spec.rho());
    println!("m = {m}");
    println!("n = {n}");
    print_checks(&checks::transform_checks(&spec))
}

fn dither_export(common: &Common) -> Result<(), Failure> {
    let cfg = load(common, &[])?;
    let gen = DitherGenerator::new(cfg.dither.clone())?;
    let mut csv = String::from("t,xi,S\n");
    for k in 0..cfg.steps() {
        let t = k as f64 * cfg.controller.dt_ctrl;
        let s = gen.dither_signal(t)?;
        csv.push_str(&format!("{},{},{}\n", fmt_sig(t), fmt_sig(gen.xi(t)), fmt_sig(s)));
    }
    ensure_dir(&common.out)?;
    let path = common.out.join("dither.csv");
    write_file(&path, &csv)?;
    println!("rows = {}", cfg.steps());
    println!("path = {}", path.display());
    Ok(())
}

fn sweep(common: &Common, assignment: &str) -> Result<(), Failure> {
    let (key, values) = assignment
        .split_once('=')
        .ok_or_else(|| Failure::Usage(format!("expected KEY=V1,V2,..., got `{assignment}`")))?;
    let key = key.trim();
    let values: Vec<&str> = values.split(',').map(str::trim).filter(|v| !v.is_empty()).collect();
    if values.is_empty() {
        return Err(Failure::Usage(format!("no values given for `{key}`")));
    }
    // resolve every point first so a bad value fails before any run
    let configs = values.iter().map(|v| load(common, &[format!("{key} = {v}")])).collect::<Result<Vec<_>, _>>()?;
    ensure_dir(&common.out)?;

    let results: Vec<_> = configs
        .par_iter()
        .enumerate()
        .map(|(i, cfg)| {
            let out = run_scenario(cfg)?;
            write_trace(&out.trace, &common.out.join(format!("trace_{i:02}.csv")))?;
            Ok::<_, Error>(out)
        })
        .collect();

    let mut summary = String::from(
        "index,key,value,status,s_residual_max,s_residual_mean,y_residual_max,y_residual_mean,u_residual_mean,dither_amplitude_fit\n",
    );
    let mut failures = Vec::new();
    for (i, (value, res)) in values.iter().zip(&results).enumerate() {
        let (status, cols) = match res {
            Ok(out) => match &out.metrics {
                Some(m) => (
                    "ok".to_string(),
                    [
                        m.s_residual_max,
                        m.s_residual_mean,
                        m.y_residual_max,
                        m.y_residual_mean,
                        m.u_residual_mean,
                        m.dither_amplitude_fit,
                    ]
                    .map(fmt_sig)
                    .join(","),
                ),
                None => ("no-window".to_string(), ",,,,,".to_string()),
            },
            Err(e) => {
                failures.push(format!("{key}={value}: {e}"));
                ("failed".to_string(), ",,,,,".to_string())
            }
        };
        summary.push_str(&format!("{i},{key},{value},{status},{cols}\n"));
    }
    write_file(&common.out.join("summary.csv"), &summary)?;
    print!("{summary}");
    if failures.is_empty() {
        Ok(())
    } else {
        Err(Failure::Run(failures.join("; ")))
    }
}
