use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use wnncheck::{output, run_scenario, Check, CliError, Overall, Overrides, ScenarioConfig};

#[derive(Parser, Debug)]
#[command(name = "wnncheck", version, about = "Numerical checks for adapted metrics on homogeneous submersions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Override the sampling seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for the JSON report (and CSVs with --csv).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Also compare the tensors against the finite-difference oracle.
    #[arg(long, global = true)]
    with_oracles: bool,
    /// Override tol_check.
    #[arg(long, global = true)]
    tol_check: Option<f64>,
    /// Write per-sample CSVs next to the JSON report.
    #[arg(long, global = true)]
    csv: bool,
    /// Record wall time per check (reports are then no longer byte-stable).
    #[arg(long, global = true)]
    timing: bool,
    /// Print the JSON report to stdout instead of the summary.
    #[arg(long, global = true)]
    json: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a scenario config file.
    Run { config: PathBuf },
    /// List the built-in scenarios.
    Catalog,
    /// Run checks on a catalog scenario with default settings.
    Check {
        id: String,
        /// Comma-separated subset of: validate, tensors, wnn, invariance, fat,
        /// flatgeo, gronwall, eqK, dualrel, bounded, obstruction.
        #[arg(long, value_delimiter = ',')]
        checks: Option<Vec<String>>,
    },
}

fn execute(cli: Cli) -> Result<Overall, CliError> {
    let mut ov = Overrides { seed: cli.seed, tol_check: cli.tol_check, with_oracles: cli.with_oracles, checks: None };
    let cfg = match &cli.command {
        Command::Catalog => {
            print!("{}", output::catalog_listing()?);
            return Ok(Overall::Pass);
        }
        Command::Run { config } => ScenarioConfig::from_path(config, &ov)?,
        Command::Check { id, checks } => {
            if let Some(names) = checks {
                ov.checks = Some(names.iter().map(|n| n.trim().parse()).collect::<Result<Vec<Check>, _>>()?);
            }
            ScenarioConfig::catalog(id, &ov)?
        }
    };
    let bundle = run_scenario(&cfg, cli.timing);
    if cli.json {
        print!("{}", output::to_json(&bundle, &cfg));
    } else {
        print!("{}", output::summary(&bundle));
    }
    if let Some(dir) = &cli.out {
        let path = output::write_json(&bundle, &cfg, dir)?;
        eprintln!("wrote {}", path.display());
        if cli.csv {
            for p in output::write_csvs(&bundle, dir)? {
                eprintln!("wrote {}", p.display());
            }
        }
    }
    let overall = bundle.overall();
    if overall == Overall::Inconclusive {
        eprintln!("warning: some checks were inconclusive; this counts as not passing");
    }
    Ok(overall)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { wnncheck::EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(overall) => ExitCode::from(overall.exit_code()),
        Err(e) => {
            eprintln!("wnncheck: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
