//! `radiokey`: batch simulations, bound tables, parameter sweeps, isotope
//! arithmetic and the four-state variant.
//!
//! Exit codes: 0 success, 1 I/O or internal failure, 2 configuration or
//! argument error, 3 protocol abort, 4 detection-test failure under
//! `simulate --verify`.

use std::fmt::Display;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use radiokey::config::CONFIG_ENV;
use radiokey::isotope::{self, Catalog, IsotopeSpec, ProductionPlan};
use radiokey::postproc::DistillStatus;
use radiokey::runner::{linear_grid, run_bb84, SweepParameter};
use radiokey::{run_bounds, run_simulation, run_sweep, Error, RunConfig};

mod tables;

#[derive(Debug, Parser)]
#[command(
    name = "radiokey",
    version,
    about = "Key distribution over plates of decaying nuclei"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// JSON run configuration. Built-in defaults apply when absent.
    #[arg(long, global = true, env = CONFIG_ENV, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Master seed, overriding the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Trial count, overriding the configuration.
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Output file. Standard output when absent and the configuration names none.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Output format. Sweeps default to csv, everything else to json.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the configured trials and write a report.
    Simulate {
        /// Exit with code 4 when any trial fails Bob's detection test.
        #[arg(long)]
        verify: bool,
    },
    /// Evaluate the analytic bounds only.
    Bounds,
    /// Bounds (and optionally simulations) over a grid of one parameter.
    Sweep(SweepArgs),
    /// Production, dilution and contamination arithmetic.
    Isotope {
        /// TOML catalog replacing the bundled one.
        #[arg(long, global = true, value_name = "PATH")]
        catalog: Option<PathBuf>,
        #[command(subcommand)]
        command: IsotopeCommand,
    },
    /// Four-state protocol on single nuclei.
    Bb84 {
        /// Qubits Alice sends.
        #[arg(long, default_value_t = 100_000)]
        qubits: usize,
        /// Intercept and resend every qubit.
        #[arg(long)]
        eve: bool,
        /// Skip reconciliation and privacy amplification.
        #[arg(long)]
        no_postprocess: bool,
    },
    /// Print the effective configuration.
    Config,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// One of mu, tau_D, tau_T, tau_B, N, epsilon_bob.
    parameter: SweepParameter,
    /// Explicit grid values, comma separated.
    #[arg(long, value_delimiter = ',', conflicts_with_all = ["from", "to"])]
    values: Vec<f64>,
    /// First value of an evenly spaced grid.
    #[arg(long, requires = "to")]
    from: Option<f64>,
    /// Last value of an evenly spaced grid.
    #[arg(long, requires = "from")]
    to: Option<f64>,
    #[arg(long, default_value_t = 11)]
    points: usize,
    /// Run the configured trials at every grid point.
    #[arg(long)]
    simulate: bool,
}

#[derive(Debug, Subcommand)]
enum IsotopeCommand {
    /// List the catalog.
    Catalog,
    /// Activity and excited nuclei produced by an irradiation.
    Activity(BeamArgs),
    /// Activity, nuclei and the dilution that reaches a target mean.
    Plan {
        #[command(flatten)]
        beam: BeamArgs,
        /// Target mean excited nuclei per sample. Defaults to the configured mu.
        #[arg(long)]
        mu: Option<f64>,
        /// Volume of one sample in mm³.
        #[arg(long, default_value_t = 1.0)]
        volume_mm3: f64,
        /// Cell pairs to cover. Defaults to the configured plate size.
        #[arg(long)]
        pairs: Option<usize>,
    },
    /// Decayed fraction of each contaminant over a time window.
    Contamination {
        /// Window in days. Defaults to the configured tau_P + tau_T + tau_B.
        #[arg(long)]
        days: Option<f64>,
    },
}

#[derive(Debug, Args)]
struct BeamArgs {
    /// Catalog name. Defaults to the primary isotope.
    #[arg(long)]
    isotope: Option<String>,
    #[arg(long, default_value_t = 1.0)]
    current_ua: f64,
    #[arg(long, default_value_t = 1.0)]
    hours: f64,
}

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Display) -> Self {
        Self {
            code,
            message: message.to_string(),
        }
    }

    fn usage(message: impl Display) -> Self {
        Self::new(2, message)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config { .. } | Error::Domain(_) | Error::Catalog(_) => 2,
            Error::ReconciliationAborted { .. } => 3,
            Error::Protocol(_) | Error::NotNormalized(_) => 1,
        };
        Self::new(code, e)
    }
}

type CliResult<T> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("radiokey: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> CliResult<()> {
    let g = &cli.global;
    let config = load_config(g)?;
    match cli.command {
        Command::Simulate { verify } => simulate(&config, g, verify),
        Command::Bounds => {
            let bounds = run_bounds(&config)?;
            let text = match format_or(g, Format::Json) {
                Format::Json => to_json(&bounds),
                Format::Csv => tables::bounds_csv(&bounds)?,
            };
            emit(g.out.as_ref().or(config.output.report.as_ref()), &text)
        }
        Command::Sweep(args) => sweep(&config, g, &args),
        Command::Isotope { catalog, command } => {
            let catalog = match catalog {
                Some(path) => Catalog::from_toml(&read(&path)?)?,
                None => Catalog::bundled(),
            };
            isotope_command(&config, g, &catalog, command)
        }
        Command::Bb84 {
            qubits,
            eve,
            no_postprocess,
        } => {
            let params = if no_postprocess {
                None
            } else {
                config.postprocess.as_ref()
            };
            let report = run_bb84(qubits, eve, config.seed, params)?;
            let text = match format_or(g, Format::Json) {
                Format::Json => report.to_json(),
                Format::Csv => tables::bb84_csv(&report)?,
            };
            emit(g.out.as_ref().or(config.output.report.as_ref()), &text)?;
            match report.ledger.map(|l| l.status) {
                Some(DistillStatus::Aborted(reason)) => Err(Failure::new(
                    3,
                    format!("key distillation aborted: {reason}"),
                )),
                _ => Ok(()),
            }
        }
        Command::Config => {
            if format_or(g, Format::Json) == Format::Csv {
                return Err(Failure::usage("the configuration has no csv form"));
            }
            emit(g.out.as_ref(), &config.to_json())
        }
    }
}

fn load_config(g: &GlobalArgs) -> CliResult<RunConfig> {
    let mut config = match &g.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = g.seed {
        config.seed = seed;
    }
    if let Some(trials) = g.trials {
        config.trials = trials;
    }
    config.validate()?;
    for w in config.warnings() {
        eprintln!("warning: {w}");
    }
    Ok(config)
}

fn simulate(config: &RunConfig, g: &GlobalArgs, verify: bool) -> CliResult<()> {
    let report = run_simulation(config)?;
    let text = match format_or(g, Format::Json) {
        Format::Json => report.to_json(),
        Format::Csv => tables::trials_csv(&report)?,
    };
    emit(g.out.as_ref().or(config.output.report.as_ref()), &text)?;
    let failures = report.detection_failures();
    if verify && failures > 0 {
        return Err(Failure::new(
            4,
            format!(
                "{failures} of {} trials failed the detection test",
                report.trials.len()
            ),
        ));
    }
    match report.aborts() {
        0 => Ok(()),
        n => Err(Failure::new(
            3,
            format!(
                "key distillation aborted in {n} of {} trials",
                report.trials.len()
            ),
        )),
    }
}

fn sweep(config: &RunConfig, g: &GlobalArgs, args: &SweepArgs) -> CliResult<()> {
    let grid = match (args.from, args.to) {
        (Some(from), Some(to)) => linear_grid(from, to, args.points)?,
        _ if !args.values.is_empty() => args.values.clone(),
        _ => return Err(Failure::usage("give --values or --from/--to")),
    };
    let table = run_sweep(config, args.parameter, &grid, args.simulate)?;
    let text = match format_or(g, Format::Csv) {
        Format::Json => table.to_json(),
        Format::Csv => table.to_csv(),
    };
    emit(g.out.as_ref().or(config.output.sweep_csv.as_ref()), &text)
}

fn isotope_command(
    config: &RunConfig,
    g: &GlobalArgs,
    catalog: &Catalog,
    command: IsotopeCommand,
) -> CliResult<()> {
    let format = format_or(g, Format::Json);
    let text = match command {
        IsotopeCommand::Catalog => match format {
            Format::Json => to_json(&catalog.isotopes()),
            Format::Csv => tables::catalog_csv(catalog)?,
        },
        IsotopeCommand::Activity(beam) => {
            let spec = pick(catalog, beam.isotope.as_deref())?;
            let p = production(spec, &beam)?;
            match format {
                Format::Json => to_json(&p),
                Format::Csv => tables::rows_csv(&[p])?,
            }
        }
        IsotopeCommand::Plan {
            beam,
            mu,
            volume_mm3,
            pairs,
        } => {
            let spec = pick(catalog, beam.isotope.as_deref())?;
            let production = production(spec, &beam)?;
            let plan = ProductionPlan::new(
                beam.current_ua,
                beam.hours,
                mu.unwrap_or_else(|| config.mu()),
                volume_mm3,
            )?;
            let dilution = isotope::dilution_plan(production.nuclei, &plan)?;
            for w in &dilution.warnings {
                eprintln!("warning: {w}");
            }
            let pairs = pairs.unwrap_or(config.plate.pair_count);
            let report = tables::PlanReport {
                required_nuclei: isotope::required_nuclei(pairs, plan.target_mu),
                covers_plate: dilution.covers(pairs),
                pairs,
                production,
                dilution,
            };
            match format {
                Format::Json => to_json(&report),
                Format::Csv => tables::rows_csv(&[report.flat()])?,
            }
        }
        IsotopeCommand::Contamination { days } => {
            let t = &config.timeline;
            let days = days.unwrap_or(t.arrival() + t.revelation);
            let entries = isotope::contamination_report(catalog, days)?;
            match format {
                Format::Json => to_json(&entries),
                Format::Csv => tables::contamination_csv(&entries)?,
            }
        }
    };
    emit(g.out.as_ref(), &text)
}

fn pick<'a>(catalog: &'a Catalog, name: Option<&str>) -> CliResult<&'a IsotopeSpec> {
    match name {
        Some(n) => catalog
            .get(n)
            .ok_or_else(|| Failure::usage(format!("isotope {n:?} is not in the catalog"))),
        None => catalog
            .primary()
            .ok_or_else(|| Failure::usage("the catalog has no primary isotope")),
    }
}

fn production(spec: &IsotopeSpec, beam: &BeamArgs) -> CliResult<tables::Production> {
    let activity = isotope::activity_from_irradiation(spec, beam.current_ua, beam.hours)?;
    Ok(tables::Production {
        isotope: spec.name.clone(),
        beam_current_ua: beam.current_ua,
        irradiation_hours: beam.hours,
        activity_bq: activity,
        nuclei: isotope::nuclei_from_activity(activity, spec)?,
    })
}

fn format_or(g: &GlobalArgs, default: Format) -> Format {
    g.format.unwrap_or(default)
}

fn to_json<T: serde::Serialize + ?Sized>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("value serializes")
}

fn read(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

/// Writes `text` to `path`, or to standard output. JSON gains a trailing
/// newline; CSV already ends in one.
fn emit(path: Option<&PathBuf>, text: &str) -> CliResult<()> {
    let mut body = text.to_string();
    if !body.ends_with('\n') {
        body.push('\n');
    }
    let result = match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)
                    .map_err(|e| Failure::new(1, format!("{}: {e}", dir.display())))?;
            }
            std::fs::write(p, body).map_err(|e| (p.display().to_string(), e))
        }
        None => std::io::stdout()
            .lock()
            .write_all(body.as_bytes())
            .map_err(|e| ("stdout".to_string(), e)),
    };
    result.map_err(|(target, e)| Failure::new(1, format!("{target}: {e}")))
}
