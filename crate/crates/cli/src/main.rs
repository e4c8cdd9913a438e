use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::{error, info};

use rsma_isac::experiment::{
    self, beampattern, default_grid, emit_rows, run_grid, run_sweep, OutputFormat, SweepAxis, SweepSpec,
    SweepTable,
};
use rsma_isac::{Algorithm, IsacError, RunStatus, Scenario, Scheme};

const EXIT_INFEASIBLE: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_CONFIG: u8 = 4;

/// Secure rate-splitting ISAC beamforming designs.
///
/// Set RSMA_ISAC_SOLVER_VERBOSE=1 for solver iteration logs and RUST_LOG for
/// progress messages.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Scenario file; the built-in reference scenario when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    /// Output format: csv or json.
    #[arg(long, global = true, default_value = "csv")]
    format: String,
    /// Overrides the scenario seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Args, Clone)]
struct Selection {
    /// Algorithms (alg1, alg2, alg3), comma separated, or "all".
    #[arg(long, value_delimiter = ',', default_value = "all")]
    algorithm: Vec<String>,
    /// Schemes (scheme1, scheme2, scheme3, ben1, sdma), comma separated, or "all".
    #[arg(long, value_delimiter = ',', default_value = "all")]
    scheme: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the scenario for the selected algorithms and schemes.
    Run {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        selection: Selection,
    },
    /// Repeat the runs over a parameter axis.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        selection: Selection,
        /// crb_threshold (dB), antennas, qos_threshold, secrecy_threshold or p_max (dBm).
        #[arg(long)]
        axis: String,
        /// Strictly monotone axis values, comma separated.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
        values: Vec<f64>,
    },
    /// Solve one design and tabulate the gain of each matrix over -90..90 deg.
    Beampattern {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "alg1")]
        algorithm: String,
        #[arg(long, default_value = "scheme2")]
        scheme: String,
    },
    /// Monte-Carlo check of the closed-form channel expectations.
    Validate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            error!("{e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn exit_code_for(e: &IsacError) -> u8 {
    match e {
        IsacError::Config(_) | IsacError::InvalidInput(_) | IsacError::Dimension(_) => EXIT_CONFIG,
        IsacError::Infeasible(_) | IsacError::OverBudget { .. } => EXIT_INFEASIBLE,
        _ => EXIT_NUMERICAL,
    }
}

fn load(common: &Common) -> Result<(Scenario, OutputFormat), IsacError> {
    let mut scenario = match &common.config {
        Some(path) => experiment::load_scenario(path)?,
        None => Scenario::reference(),
    };
    if let Some(seed) = common.seed {
        scenario.seed = seed;
    }
    let format = common.format.parse()?;
    std::fs::create_dir_all(&common.out_dir).map_err(|source| IsacError::Io {
        path: common.out_dir.display().to_string(),
        source,
    })?;
    experiment::save_scenario(&scenario, common.out_dir.join("scenario.toml"))?;
    Ok((scenario, format))
}

fn parse_list<T: std::str::FromStr<Err = IsacError>>(items: &[String], all: &[T]) -> Result<Vec<T>, IsacError>
where
    T: Copy,
{
    if items.iter().any(|s| s.trim().eq_ignore_ascii_case("all")) {
        return Ok(all.to_vec());
    }
    items.iter().map(|s| s.parse()).collect()
}

fn selection(sel: &Selection) -> Result<(Vec<Algorithm>, Vec<Scheme>), IsacError> {
    Ok((parse_list(&sel.algorithm, &Algorithm::ALL)?, parse_list(&sel.scheme, &Scheme::ALL)?))
}

fn out_path(dir: &Path, stem: &str, format: OutputFormat) -> PathBuf {
    dir.join(format!("{stem}.{}", format.extension()))
}

/// 0 when every run succeeded, otherwise the code of the worst failure.
fn table_code(table: &SweepTable) -> ExitCode {
    let mut code = 0;
    for run in &table.runs {
        let c = match &run.outcome {
            Ok(r) => match r.status {
                RunStatus::Converged | RunStatus::IterationLimit => 0,
                RunStatus::Infeasible(_) => EXIT_INFEASIBLE,
                RunStatus::NumericalFailure(_) => EXIT_NUMERICAL,
            },
            Err(e) => exit_code_for(e),
        };
        code = code.max(c);
    }
    ExitCode::from(code)
}

fn write_table(table: &SweepTable, dir: &Path, format: OutputFormat) -> Result<(), IsacError> {
    let results = out_path(dir, "results", format);
    emit_rows(&table.rows(), format, &results)?;
    emit_rows(&table.traces(), format, out_path(dir, "traces", format))?;
    for row in table.rows() {
        info!(
            "run {} {}/{}: {} objective={} power_w={} iterations={}",
            row.run_id,
            row.algorithm,
            row.scheme,
            row.status,
            fmt_opt(row.objective),
            fmt_opt(row.power_w),
            row.iterations
        );
    }
    info!("wrote {}", results.display());
    Ok(())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |x| format!("{x:.6e}"))
}

fn execute(cmd: Command) -> Result<ExitCode, IsacError> {
    match cmd {
        Command::Run { common, selection: sel } => {
            let (scenario, format) = load(&common)?;
            let (algs, schemes) = selection(&sel)?;
            let table = run_grid(&[(None, scenario)], &algs, &schemes);
            write_table(&table, &common.out_dir, format)?;
            Ok(table_code(&table))
        }
        Command::Sweep {
            common,
            selection: sel,
            axis,
            values,
        } => {
            let (scenario, format) = load(&common)?;
            let (algorithms, schemes) = selection(&sel)?;
            let spec = SweepSpec {
                axis: axis.parse::<SweepAxis>()?,
                values,
                algorithms,
                schemes,
            };
            let table = run_sweep(&spec, &scenario)?;
            write_table(&table, &common.out_dir, format)?;
            Ok(table_code(&table))
        }
        Command::Beampattern {
            common,
            algorithm,
            scheme,
        } => {
            let (scenario, format) = load(&common)?;
            let alg: Algorithm = algorithm.parse()?;
            let scheme: Scheme = scheme.parse()?;
            let table = run_grid(&[(None, scenario.clone())], &[alg], &[scheme]);
            write_table(&table, &common.out_dir, format)?;
            if let Ok(result) = &table.runs[0].outcome {
                let rows = beampattern(&result.beamformers, &default_grid(), &scenario.array)?;
                let path = out_path(&common.out_dir, "beampattern", format);
                emit_rows(&rows, format, &path)?;
                info!("wrote {}", path.display());
            }
            Ok(table_code(&table))
        }
        Command::Validate { common, samples } => {
            let (scenario, format) = load(&common)?;
            let report = experiment::validate_statistics(&scenario, samples)?;
            let path = out_path(&common.out_dir, "validation", format);
            emit_rows(&report.rows, format, &path)?;
            info!(
                "{} samples: max relative deviation {:.3e}, rms {:.3e}",
                report.samples, report.max_deviation, report.rms_deviation
            );
            info!("wrote {}", path.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}
