use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use kinlab::exec::Execution;
use kinlab::seminorm::SweepTerm;
use kinlab::suite::{output, run_selected, suite_passed, write_jsonl, write_summary_csv, RunConfig, CHECKS};

#[derive(Parser)]
#[command(name = "kinlab", version, about = "Verification suite for boundary-driven linearized Boltzmann transport on convex domains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Multiplies every sample budget
    #[arg(long)]
    budget_scale: Option<f64>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the certificate suite (all checks unless --checks is given)
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        checks: Vec<String>,
    },
    /// Seminorm sweep of the Picard terms across orders
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_value = "0.3,0.5,0.7,0.9")]
        s: Vec<f64>,
        /// Any of g0, g1, g2, zero_extension
        #[arg(long, value_delimiter = ',', default_value = "g0,g1")]
        terms: Vec<String>,
    },
    /// Tabulate g0..g3 at random phase points
    Iterate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 16)]
        points: usize,
    },
    /// One seminorm estimate
    Seminorm {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.5)]
        s: f64,
        #[arg(long, default_value = "g0")]
        term: String,
    },
    /// Render stored results as gnuplot-ready .dat files
    Report {
        /// Directory holding earlier results (defaults to the config's output_dir)
        #[arg(long)]
        output_dir: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

/// Exit codes: 1 for a failed check or a runtime error, 2 for bad input.
enum Failure {
    Check(String),
    Input(String),
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Check(e.to_string())
    }
}

fn load(common: &Common) -> Result<RunConfig, Failure> {
    let mut cfg = RunConfig::load(&common.config).map_err(|e| Failure::Input(format!("{}: {e}", common.config.display())))?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(b) = common.budget_scale {
        cfg.budget_scale = b;
    }
    if let Some(d) = &common.output_dir {
        cfg.output_dir = d.clone();
    }
    cfg.validate().map_err(|e| Failure::Input(e.to_string()))?;
    std::fs::create_dir_all(&cfg.output_dir)?;
    Ok(cfg)
}

fn parse_term(name: &str) -> Result<SweepTerm, Failure> {
    [SweepTerm::G0, SweepTerm::G1, SweepTerm::G2, SweepTerm::ZeroExtension]
        .into_iter()
        .find(|t| t.name() == name)
        .ok_or_else(|| Failure::Input(format!("unknown term {name}")))
}

fn note(path: &Path) {
    eprintln!("wrote {}", path.display());
}

fn run(cli: Cli) -> Result<(), Failure> {
    let exec = Execution::Parallel;
    match cli.command {
        Command::Verify { common, checks } => {
            let cfg = load(&common)?;
            let names: Vec<&str> = if checks.is_empty() {
                CHECKS.to_vec()
            } else {
                for c in &checks {
                    if !CHECKS.contains(&c.as_str()) {
                        return Err(Failure::Input(format!("unknown check {c}")));
                    }
                }
                checks.iter().map(String::as_str).collect()
            };
            let certs = run_selected(&names, &cfg, exec);
            for c in &certs {
                let k = c.measured_constant.map(|v| format!("{v:.6e}")).unwrap_or_else(|| "-".into());
                println!("{:22} {:8} constant {k:>13} violations {}", c.check_name, c.status.as_str(), c.violations);
                if let Some(e) = &c.error {
                    eprintln!("{}: {e}", c.check_name);
                }
            }
            let dir = &cfg.output_dir;
            let p = dir.join(output::CERTIFICATES);
            write_jsonl(&p, &certs)?;
            note(&p);
            let p = dir.join(output::SUMMARY);
            write_summary_csv(&p, &certs)?;
            note(&p);
            let p = dir.join(output::EXIT_SAMPLES);
            output::write_exit_csv(&p, &output::exit_samples(&cfg, cfg.scaled(1000, 10), exec)?)?;
            note(&p);
            let p = dir.join(output::MOMENTS);
            output::write_moment_csv(&p, &output::moment_sweep(&cfg, &[0.0, 1.0, 2.0, 4.0, 8.0])?)?;
            note(&p);
            if !suite_passed(&certs) {
                return Err(Failure::Check("one or more checks failed".into()));
            }
        }
        Command::Sweep { common, s, terms } => {
            let cfg = load(&common)?;
            let terms = terms.iter().map(|t| parse_term(t)).collect::<Result<Vec<_>, _>>()?;
            let rows = output::sweep(&cfg, &terms, &s, exec)?;
            for r in &rows {
                println!("{:15} s={:<5} value {:.6e} stderr {:.3e}{}", r.term.name(), r.s, r.value, r.stderr, if r.flagged { " flagged" } else { "" });
            }
            let p = cfg.output_dir.join(output::SWEEP);
            output::write_sweep_csv(&p, &rows)?;
            note(&p);
            let p = cfg.output_dir.join(output::SHELLS);
            output::write_shell_profiles(&p, &rows)?;
            note(&p);
        }
        Command::Iterate { common, points } => {
            let cfg = load(&common)?;
            let rows = output::iterate_table(&cfg, points, exec)?;
            let p = cfg.output_dir.join(output::ITERATES);
            output::write_iterate_csv(&p, &rows)?;
            note(&p);
        }
        Command::Seminorm { common, s, term } => {
            let cfg = load(&common)?;
            let term = parse_term(&term)?;
            let row = output::sweep(&cfg, &[term], &[s], exec)?.remove(0);
            let text = serde_json::to_string_pretty(&row)?;
            println!("{text}");
            let p = cfg.output_dir.join("seminorm.json");
            std::fs::write(&p, text)?;
            note(&p);
        }
        Command::Report { output_dir, config } => {
            let dir = match (output_dir, config) {
                (Some(d), _) => d,
                (None, Some(c)) => RunConfig::load(&c).map_err(|e| Failure::Input(format!("{}: {e}", c.display())))?.output_dir,
                (None, None) => return Err(Failure::Input("report needs --output-dir or --config".into())),
            };
            if !dir.is_dir() {
                return Err(Failure::Input(format!("{} is not a directory", dir.display())));
            }
            let files = output::render_plot_data(&dir)?;
            if files.is_empty() {
                return Err(Failure::Input(format!("no results found in {}", dir.display())));
            }
            for f in &files {
                note(f);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Input(m)) => {
            eprintln!("config error: {m}");
            ExitCode::from(2)
        }
    }
}
