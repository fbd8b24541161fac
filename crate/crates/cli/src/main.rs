use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use mage::experiment::{
    run, EnvelopeJob, ExperimentConfig, ExperimentKind, RunOptions, SolveJob, SEED_ENV,
};

#[derive(Parser)]
#[command(name = "mage", version, about = "Complex Monge-Ampere lab on flat tori")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML config file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Run rows sequentially so that outputs are byte-identical across runs.
    #[arg(long)]
    deterministic: bool,
    /// Worker threads for concurrent rows.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one equation; writes u.bin and solve.json.
    Solve(Common),
    /// Compute one envelope; writes p.bin and envelope.json.
    Envelope(Common),
    /// Stability sweep for ||u - v||.
    Stability(Common),
    /// Stability sweep for the normalizing constant.
    CfStability(Common),
    /// Hoelder exponent of solutions.
    Hoelder(Common),
    /// Hoelder exponent of envelopes.
    EnvelopeHoelder(Common),
    /// Comparison-principle audits.
    Audit(Common),
}

fn sweep(common: &Common, expected: ExperimentKind) -> Result<ExitCode> {
    let cfg = ExperimentConfig::load(&common.config)?;
    anyhow::ensure!(
        cfg.experiment == expected,
        "config runs `{}`, but the `{}` command was given",
        cfg.experiment.as_str(),
        expected.as_str()
    );
    let opts = RunOptions::from_env(Some(common.out.clone()), common.deterministic);
    let (report, code) = run(&common.config, &opts)?;
    for v in &report.verdicts {
        println!(
            "{:<4} {} (value {:e}, threshold {:e})",
            if v.passed { "PASS" } else { "FAIL" },
            v.name,
            v.value,
            v.threshold
        );
    }
    println!("wrote {}", common.out.display());
    Ok(ExitCode::from(code as u8))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(command: &Command) -> Result<ExitCode> {
    let common = match command {
        Command::Solve(c)
        | Command::Envelope(c)
        | Command::Stability(c)
        | Command::CfStability(c)
        | Command::Hoelder(c)
        | Command::EnvelopeHoelder(c)
        | Command::Audit(c) => c,
    };
    if let Some(n) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    match command {
        Command::Solve(c) => {
            let job = SolveJob::load(&c.config)?;
            let mut job = job;
            if let Ok(s) = std::env::var(SEED_ENV) {
                job.seed = s.trim().parse().with_context(|| format!("parsing {SEED_ENV}"))?;
            }
            let res = job.run(&c.out)?;
            println!(
                "converged: {}, residual {:e}, iterations {}, c = {}",
                res.converged, res.residual_sup, res.iterations, res.c
            );
            Ok(if res.converged { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Command::Envelope(c) => {
            let job = EnvelopeJob::load(&c.config)?;
            let (env, side) = job.run(&c.out)?;
            println!(
                "lambda_final {}, defect {:e}, offcontact_ma_sup {:e}",
                env.lambda_final, env.defect, env.offcontact_ma_sup
            );
            let passed = side
                .exponent_fits
                .and_then(|f| f.passed)
                .unwrap_or(true);
            Ok(if passed { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Command::Stability(c) => sweep(c, ExperimentKind::Stability),
        Command::CfStability(c) => sweep(c, ExperimentKind::CfStability),
        Command::Hoelder(c) => sweep(c, ExperimentKind::Hoelder),
        Command::EnvelopeHoelder(c) => sweep(c, ExperimentKind::EnvelopeHoelder),
        Command::Audit(c) => sweep(c, ExperimentKind::AuditSuite),
    }
}
