use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use paretomtl::decomposition::{even_preference_vectors, PreferenceVectors};
use paretomtl::diagnostics::run_all_checks;
use paretomtl::execution::Execution;
use paretomtl::experiment::{cmd_ablate_init, cmd_compare, cmd_run, CliError, CompareOptions, FrontMetrics};

/// Preference-guided multi-objective gradient descent experiments.
#[derive(Parser)]
#[command(name = "paretomtl", version)]
struct Cli {
    /// Run every batch in a single thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config and write its artifacts.
    /// The output directory can be overridden with PARETOMTL_OUTPUT_DIR.
    Run { config: PathBuf },
    /// Compare the final fronts of one or more front.csv files.
    Compare {
        #[arg(required = true)]
        fronts: Vec<PathBuf>,
        /// Hypervolume reference point, e.g. `1.1,1.1`.
        #[arg(long, value_delimiter = ',')]
        reference: Option<Vec<f64>>,
        /// Number of generated preference vectors used for sector coverage.
        #[arg(long, default_value_t = 10, conflicts_with = "preferences_file")]
        preferences: usize,
        /// CSV of preference vectors used for sector coverage.
        #[arg(long)]
        preferences_file: Option<PathBuf>,
        /// Where to write the comparison as JSON.
        #[arg(long, default_value = "comparison.json")]
        output: PathBuf,
    },
    /// Run Pareto MTL with and without the initialization phase under the
    /// same seeds and compare sector coverage.
    AblateInit { config: PathBuf },
    /// Run the finite-difference and descent-inequality self-checks.
    Check,
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "null".into(), |v| format!("{v:.6}"))
}

fn metrics_line(m: &FrontMetrics) -> String {
    format!(
        "points {:>4}  nondominated {:>4}  hypervolume {:>10}  spacing {:>10}  coverage {:>8}",
        m.points,
        m.nondominated,
        opt(m.hypervolume),
        opt(m.spacing),
        opt(m.sector_coverage)
    )
}

fn execute(cli: Cli) -> Result<bool, CliError> {
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::default()
    };
    match cli.command {
        Command::Run { config } => {
            let report = cmd_run(&config, exec)?;
            println!("wrote {} runs to {}", report.runs, report.output_dir.display());
            for a in &report.algorithms {
                println!("{:<11} {}", a.algorithm.name(), metrics_line(&a.pooled));
                for f in &a.failures {
                    println!("  failed run {} / {}: {}", f.run_id, f.k_or_seed, f.message);
                }
            }
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            Ok(true)
        }
        Command::Compare {
            fronts,
            reference,
            preferences,
            preferences_file,
            output,
        } => {
            let prefs: Option<PreferenceVectors> = match preferences_file {
                Some(path) => Some(PreferenceVectors::from_csv_path(path)?),
                None => {
                    // The objective count is only known once a front is read.
                    let m = fronts
                        .iter()
                        .find_map(|p| paretomtl::experiment::read_front(p).ok().and_then(|(m, _)| m));
                    m.map(|m| even_preference_vectors(preferences, m, 0)).transpose()?
                }
            };
            let c = cmd_compare(
                &fronts,
                &CompareOptions {
                    reference,
                    prefs,
                    output: Some(output.clone()),
                },
            )?;
            if let Some(r) = &c.reference {
                println!("reference point ({}, {})", r[0], r[1]);
            }
            for s in &c.sources {
                println!(
                    "{} [{}] rows {}  pooled-nondominated {}  {}",
                    s.source,
                    s.algorithm.as_deref().unwrap_or("-"),
                    s.rows,
                    s.pooled_nondominated,
                    metrics_line(&s.metrics)
                );
            }
            for w in &c.warnings {
                eprintln!("warning: {w}");
            }
            println!("wrote {}", output.display());
            Ok(true)
        }
        Command::AblateInit { config } => {
            let r = cmd_ablate_init(&config, exec)?;
            for p in &r.pairs {
                println!(
                    "run {:>3} seed {:>6}  coverage with init {:>8}  without {:>8}",
                    p.run_id,
                    p.seed,
                    opt(p.with_init.sector_coverage),
                    opt(p.without_init.sector_coverage)
                );
            }
            println!(
                "mean coverage with init {}  without {}  (init-failed subproblems: {})",
                opt(r.mean_coverage_with_init),
                opt(r.mean_coverage_without_init),
                r.init_failed_with_init
            );
            println!("wrote {}", r.output_dir.display());
            Ok(true)
        }
        Command::Check => {
            let results = run_all_checks()?;
            let mut all = true;
            for r in &results {
                println!("{} {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
                all &= r.passed;
            }
            Ok(all)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
