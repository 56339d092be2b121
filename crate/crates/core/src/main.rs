use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use landau_core::harness::{ExperimentConfig, ExperimentKind, Lab, Status, SummaryReport};

/// Simulator and verification lab for u_t = div(A[u] grad u).
#[derive(Parser)]
#[command(name = "landau-lab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Config file (TOML or JSON) supplying settings; its `experiment` is ignored.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// No progress lines on stderr.
    #[arg(long)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment named in a config file.
    Run {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        quiet: bool,
    },
    /// Kernel oracle and structural identities.
    ValidateKernel(Common),
    /// Coefficient homogeneity, interpolation/truncation and the Poincaré sweep.
    Inequalities(Common),
    /// Level-energy suite.
    Degiorgi(Common),
    /// Decay rates and moment envelopes of the main run.
    Rates(Common),
    /// Paired Landau and heat runs.
    CompareHeat(Common),
}

fn load(path: Option<&PathBuf>, kind: ExperimentKind) -> anyhow::Result<ExperimentConfig> {
    match path {
        Some(p) => {
            let mut c = ExperimentConfig::load(p).with_context(|| format!("loading {}", p.display()))?;
            c.experiment = kind;
            Ok(c)
        }
        None => Ok(ExperimentConfig::new(kind)),
    }
}

fn print_summary(summary: &SummaryReport) {
    for item in &summary.items {
        let status = match item.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::NotRun => "----",
        };
        let detail = match item.status {
            Status::NotRun => item.note.clone().unwrap_or_default(),
            _ => item.measured.to_string(),
        };
        println!("{status} {:>2} {:<26} {detail}", item.id, item.name);
        if item.status == Status::Fail {
            if let Some(note) = &item.note {
                println!("        {note}");
            }
        }
    }
    println!("summary: {}", if summary.all_pass { "all evaluated items pass" } else { "some items fail" });
}

fn execute(cli: Cli) -> anyhow::Result<bool> {
    let (config, kinds, quiet) = match cli.command {
        Command::Run { config, out, quiet } => {
            let mut c = ExperimentConfig::load(&config).with_context(|| format!("loading {}", config.display()))?;
            if let Some(o) = out {
                c.output_dir = o;
            }
            let kinds = vec![c.experiment];
            (c, kinds, quiet)
        }
        Command::ValidateKernel(a) => with_common(a, &[ExperimentKind::KernelValidate])?,
        Command::Inequalities(a) => with_common(a, &[ExperimentKind::Inequalities])?,
        Command::Degiorgi(a) => with_common(a, &[ExperimentKind::Degiorgi])?,
        Command::Rates(a) => with_common(a, &[ExperimentKind::LpDecay, ExperimentKind::LinfDecay, ExperimentKind::Moments])?,
        Command::CompareHeat(a) => with_common(a, &[ExperimentKind::HeatComparison])?,
    };
    config.validate()?;
    let out = config.output_dir.clone();
    let summary = Lab::new(config).verbose(!quiet).run_experiments(&kinds)?;
    print_summary(&summary);
    println!("outputs in {}", out.display());
    Ok(summary.all_pass)
}

fn with_common(a: Common, kinds: &[ExperimentKind]) -> anyhow::Result<(ExperimentConfig, Vec<ExperimentKind>, bool)> {
    let mut c = load(a.config.as_ref(), kinds[0])?;
    if let Some(o) = a.out {
        c.output_dir = o;
    }
    Ok((c, kinds.to_vec(), a.quiet))
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
