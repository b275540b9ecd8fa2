use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use localtime_ito::harness::{self, parse_mesh, summary_csv, ExperimentConfig, ExperimentKind};
use localtime_ito::sim::IntegrandConfig;

/// Monte Carlo experiments on local times and the extended Ito formula.
///
/// Exit status: 0 when every check passes, 1 on a tolerance failure,
/// 2 on a configuration or validation error.
#[derive(Parser)]
#[command(name = "ltito", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate paths, check the martingale property and dump paths.
    Simulate(Common),
    /// Local time at a level: occupation vs Tanaka estimators.
    Localtime(Common),
    /// Integral of a truncated sign against local time vs the covariation.
    Integrate(Common),
    /// Covariation limits under uniform and geometric-dyadic partitions.
    Covariation(Common),
    /// Residual of the generalized Ito formula.
    VerifyIto(Common),
    /// Classical Ito formula on mollified functions, term by term.
    VerifyChain(Common),
    /// Scaling of the local-time integral with the weighted norm.
    NormBound(Common),
    /// Maximal density of X_t across times.
    Density(Common),
}

#[derive(Args)]
struct Common {
    /// TOML experiment configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Number of Monte Carlo paths.
    #[arg(long)]
    paths: Option<usize>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Simulation mesh, as `2^-k` or a decimal.
    #[arg(long)]
    mesh: Option<String>,
    /// Output directory for summary.csv and report.json.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (0 = one per core).
    #[arg(long)]
    workers: Option<usize>,
    /// Tolerance overriding the configured one.
    #[arg(long)]
    tolerance: Option<f64>,
    /// Catalog function for verify-ito and verify-chain.
    #[arg(long)]
    function: Option<String>,
    /// Integrand: `constant:SIGMA` or `bounded-sine:RHO,EPS`.
    #[arg(long)]
    integrand: Option<String>,
}

fn parse_integrand(s: &str) -> anyhow::Result<IntegrandConfig> {
    let (name, args) = s.split_once(':').unwrap_or((s, ""));
    let nums = args
        .split(',')
        .filter(|a| !a.is_empty())
        .map(|a| a.trim().parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .with_context(|| format!("bad integrand arguments '{args}'"))?;
    Ok(match (name, nums.as_slice()) {
        ("constant", []) => IntegrandConfig::Constant { sigma: 1.0 },
        ("constant", [sigma]) => IntegrandConfig::Constant { sigma: *sigma },
        ("bounded-sine", [rho, eps]) => IntegrandConfig::BoundedSine { rho: *rho, eps: *eps },
        _ => bail!("integrand must be constant:SIGMA or bounded-sine:RHO,EPS"),
    })
}

fn build_config(kind: ExperimentKind, c: &Common) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = match &c.config {
        Some(p) => ExperimentConfig::from_file(p)?,
        None => ExperimentConfig::default(),
    };
    match cfg.kind {
        Some(k) if k != kind => bail!(
            "configuration kind '{}' does not match subcommand '{}'",
            k.name(),
            kind.name()
        ),
        _ => cfg.kind = Some(kind),
    }
    if let Some(v) = c.paths {
        cfg.n_paths = v;
    }
    if let Some(v) = c.seed {
        cfg.seed = v;
    }
    if let Some(v) = &c.mesh {
        cfg.mesh = parse_mesh(v)?;
    }
    if let Some(v) = c.workers {
        cfg.workers = v;
    }
    if let Some(v) = c.tolerance {
        cfg.tolerance = Some(v);
    }
    if let Some(v) = &c.function {
        cfg.function = v.clone();
    }
    if let Some(v) = &c.integrand {
        cfg.integrand = parse_integrand(v)?;
    }
    if let Some(v) = &c.out {
        cfg.output = Some(v.display().to_string());
    }
    Ok(cfg)
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    let (kind, common) = match &cli.command {
        Command::Simulate(c) => (ExperimentKind::Simulate, c),
        Command::Localtime(c) => (ExperimentKind::LocalTimeMean, c),
        Command::Integrate(c) => (ExperimentKind::BouleauYor, c),
        Command::Covariation(c) => (ExperimentKind::CovariationPartitions, c),
        Command::VerifyIto(c) => (ExperimentKind::ItoResidual, c),
        Command::VerifyChain(c) => (ExperimentKind::SmoothChain, c),
        Command::NormBound(c) => (ExperimentKind::NormBound, c),
        Command::Density(c) => (ExperimentKind::DensityBound, c),
    };
    let cfg = build_config(kind, common)?;
    let outcome = harness::run_experiment(&cfg)?;
    let outcomes = [outcome];
    print!("{}", summary_csv(&outcomes));
    for c in &outcomes[0].checks {
        println!(
            "{} {}: {} (target {})",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.value,
            c.target
        );
    }
    if let Some(dir) = &cfg.output {
        let dir = PathBuf::from(dir);
        harness::write_outputs(&dir, &outcomes)?;
        if kind == ExperimentKind::Simulate {
            harness::dump_paths(&cfg, &dir.join("paths"))?;
        }
    }
    Ok(outcomes[0].pass())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
