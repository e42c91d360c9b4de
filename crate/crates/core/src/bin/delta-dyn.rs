use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use delta_dyn::error::{Error, Result};
use delta_dyn::scenario;

#[derive(Parser)]
#[command(name = "delta-dyn", version, about = "Run, list and replay certified scenarios")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a scenario file (or a bundled scenario by name).
    Run {
        scenario: String,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        horizon: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// List bundled scenarios.
    List,
    /// Rerun a certificate's scenario and compare.
    Replay { certificate: PathBuf },
}

fn init_threads() -> Result<()> {
    let Ok(raw) = std::env::var("DELTA_DYN_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Config(format!("DELTA_DYN_THREADS = `{raw}` is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(e.to_string()))
}

fn main_inner(cli: Cli) -> Result<u8> {
    init_threads()?;
    match cli.cmd {
        Cmd::Run {
            scenario: arg,
            out,
            horizon,
            seed,
        } => {
            let sc = scenario::load(&arg)?;
            let result = scenario::run(&sc, horizon, seed)?;
            let path = result.write(&out)?;
            let v = &result.certificate.verdict;
            println!("{}: {:?} ({})", sc.name, v.status, v.note);
            println!("certificate: {}", path.display());
            Ok(v.status.exit_code() as u8)
        }
        Cmd::List => {
            let all = scenario::bundled();
            let width = all.iter().map(|s| s.name.len()).max().unwrap_or(0);
            for sc in &all {
                let check = serde_json::to_value(sc.check)?;
                println!(
                    "{:<width$}  {:<22}  {}",
                    sc.name,
                    check.as_str().unwrap_or(""),
                    sc.statement
                );
            }
            Ok(0)
        }
        Cmd::Replay { certificate } => {
            let text = std::fs::read_to_string(&certificate)?;
            let report = scenario::replay(&text)?;
            println!("verdict: {:?}", report.rerun.verdict.status);
            if report.matches() {
                println!("replay matches");
                Ok(0)
            } else {
                for m in &report.mismatches {
                    println!("mismatch at {m}");
                }
                Ok(1)
            }
        }
    }
}

fn main() -> ExitCode {
    match main_inner(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}
