//! Command-line front door: `run <config>`, `suite [--out <dir>]`, and
//! `describe`. Exit codes: 0 all checks pass, 1 check failure, 2 input error.

use clap::{Parser, Subcommand};
use morrey_lab::config::ExperimentConfig;
use morrey_lab::runner::{execute_run, exit_code_for};
use morrey_lab::suite::run_suite;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "morrey-lab", version, about = "Morrey-space inequality laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute the experiment described by a config file.
    Run {
        /// Path to an INI-style config (see `describe`).
        config: PathBuf,
    },
    /// Run the full acceptance battery.
    Suite {
        /// Output directory for reports (default: suite_out).
        #[arg(long, default_value = "suite_out")]
        out: PathBuf,
    },
    /// Print the config schema and the available experiment kinds.
    Describe,
}

fn init_threads() {
    #[cfg(feature = "parallel")]
    if let Ok(v) = std::env::var("MORREY_LAB_THREADS") {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => eprintln!("warning: ignoring invalid MORREY_LAB_THREADS = {v:?}"),
        }
    }
}

fn main() -> ExitCode {
    init_threads();
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config } => {
            let cfg = match ExperimentConfig::load(&config) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("config error: {e}");
                    return ExitCode::from(2);
                }
            };
            match execute_run(&cfg) {
                Ok(out) => {
                    for c in &out.manifest.checks {
                        println!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
                    }
                    println!("manifest: {}", out.manifest_path.display());
                    if out.all_pass {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(1)
                    }
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(exit_code_for(&e) as u8)
                }
            }
        }
        Command::Suite { out } => match run_suite(&out) {
            Ok(outcome) => {
                println!(
                    "suite: {} ({} criteria, {:.1}s)",
                    if outcome.all_pass { "PASS" } else { "FAIL" },
                    outcome.criteria.len(),
                    outcome.total_seconds
                );
                if outcome.all_pass {
                    ExitCode::SUCCESS
                } else {
                    for c in outcome.criteria.iter().filter(|c| !c.pass) {
                        eprintln!("failed: {} — {}", c.name, c.detail);
                    }
                    ExitCode::from(1)
                }
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(exit_code_for(&e) as u8)
            }
        },
        Command::Describe => {
            print!("{}", DESCRIBE_TEXT);
            ExitCode::SUCCESS
        }
    }
}

const DESCRIBE_TEXT: &str = r#"morrey-lab experiments

Config format: UTF-8 lines of `key = value`, grouped by `[section]` headers.
`#` and `;` start comments. Top-level keys:

  kind        norm | inequality | solve | sucp | suite
  seed        u64, recorded verbatim in every output (default 0)
  output_dir  where manifest.json, reports, and CSV dumps go (default out)

Sections by kind:

  [domain]    dim (1-3), shape = box | ball, half_width or radius + center,
              nodes (per axis)
  [phi]       family = power | logpower | table; beta, gamma, or
              radii/values comma lists; p; n (defaults to dim)
  [sweep]     r_min, r_max, ratio (default 2), stride (center node stride)
  [ladder]    r_min, r_max, ratio (default 2)
  [function]  kind = zero | constant | indicator | gaussian | random | csv
              with value / center / radius / width / amplitude / path
  [problem]   type = poisson | plaplace; p; epsilon; tol; max_iter; x0;
              growth_cap (sucp)
  [potential] function section for V (poisson source / equation potential)
  [boundary]  function section for Dirichlet data (plaplace, sucp)
  [inequality] name = fefferman | minkowski | caccioppoli; p; lambda; cap;
              x0; [function2] for the second operand

Outputs: manifest.json (config echo, version, per-check pass/fail, file
list), per-check JSON reports, CSV data files (header row, 17-significant-
digit decimals). CSV node dumps use columns x1..xd,value.

Exit codes: 0 all checks pass, 1 check failure, 2 input error.
Environment: MORREY_LAB_THREADS caps the rayon pool (parallel feature).
"#;
