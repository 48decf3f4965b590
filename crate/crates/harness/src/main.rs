use clap::{Parser, Subcommand};
use spinfield::{Model, ModelConfig};
use spinfield_harness::convergence::run_convergence;
use spinfield_harness::crosscheck::run_crosscheck;
use spinfield_harness::photon::run_photon_rate;
use spinfield_harness::plan::ExperimentPlan;
use spinfield_harness::report::{write_csv, write_json, CheckList};
use spinfield_harness::selftest::run_calculus_selftest;
use spinfield_harness::Result;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Semiclassical expansion experiments. The worker count is read from SPINFIELD_WORKERS.
#[derive(Parser)]
#[command(name = "spinfield", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Calculus, coherent-state and structural identities.
    Selftest {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact symbols against partial sums of the expansion.
    Converge {
        plan: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Photon-number rate against its leading terms.
    Photon {
        plan: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Maxwell–Bloch dual-path agreement.
    Crosscheck {
        plan: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the resolved mode layout and couplings of a model config.
    DumpModel { config: PathBuf },
}

fn out_dir(flag: Option<PathBuf>, plan: Option<&ExperimentPlan>) -> Option<PathBuf> {
    flag.or_else(|| plan.and_then(|p| p.output_dir()))
}

fn finish(checks: &CheckList) -> ExitCode {
    for c in checks.iter() {
        println!("{}", c.line());
    }
    if checks.acceptance_pass() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn run(cmd: Cmd) -> Result<ExitCode> {
    match cmd {
        Cmd::Selftest { out } => {
            let rep = run_calculus_selftest()?;
            if let Some(dir) = out {
                write_json(&dir.join("selftest.json"), &rep)?;
            }
            Ok(finish(&rep.checks))
        }
        Cmd::Converge { plan, out } => {
            let plan = ExperimentPlan::from_file(&plan)?;
            let rep = run_convergence(&plan)?;
            if let Some(dir) = out_dir(out, Some(&plan)) {
                write_json(&dir.join("convergence.json"), &rep)?;
                write_csv(&dir.join("convergence.csv"), &rep.rows())?;
            }
            Ok(finish(&rep.checks))
        }
        Cmd::Photon { plan, out } => {
            let plan = ExperimentPlan::from_file(&plan)?;
            let rep = run_photon_rate(&plan)?;
            if let Some(dir) = out_dir(out, Some(&plan)) {
                write_json(&dir.join("photon.json"), &rep)?;
                write_csv(&dir.join("photon.csv"), &rep.rows())?;
            }
            if let Some(s) = rep.sign {
                println!("recorded photon-rate sign ε = {s:+}");
            }
            Ok(finish(&rep.checks))
        }
        Cmd::Crosscheck { plan, out } => {
            let plan = ExperimentPlan::from_file(&plan)?;
            let rep = run_crosscheck(&plan)?;
            if let Some(dir) = out_dir(out, Some(&plan)) {
                write_json(&dir.join("crosscheck.json"), &rep)?;
            }
            Ok(finish(&rep.checks))
        }
        Cmd::DumpModel { config } => {
            let model = Model::new(ModelConfig::from_file(Path::new(&config))?)?;
            println!("{}", serde_json::to_string_pretty(&model.dump())?);
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    env_logger::init();
    match run(Cli::parse().cmd) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
