use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};

use chisq_evidence::boundary::{sample_size, uniform, EquivalenceSpec};
use chisq_evidence::fixtures;
use chisq_evidence::io::{parse_counts, parse_probs, parse_reals, CountTable};
use chisq_evidence::model_fit::{
    equivalence_report, evidence_for_normality, evidence_for_poisson, lack_of_fit_report, tabulate_counts, DEFAULT_K,
};
use chisq_evidence::pearson::CellData;
use chisq_evidence::sim::{self, Scenario, ScenarioParams, SimConfig, DESK_REPS};

mod report;

use report::{Format, Rendered};

/// Environment variable naming the default results directory for `simulate`.
const RESULTS_DIR_VAR: &str = "CHISQ_EVIDENCE_RESULTS_DIR";

#[derive(Parser)]
#[command(name = "chisq-evidence", version, about = "Calibrated evidence for and against goodness of fit")]
struct Cli {
    #[arg(long, value_enum, global = true, default_value_t = Format::Text)]
    output_format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Fixture {
    Die,
    Alpha,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct CountSource {
    /// Counts file: one count per line, or "index,count" rows
    input: Option<PathBuf>,
    /// Use a bundled data set instead of a file
    #[arg(long, value_enum)]
    fixture: Option<Fixture>,
}

#[derive(Args)]
struct Common {
    /// Report the transform without its bias adjustment
    #[arg(long)]
    no_bias_adjust: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Evidence against a null model for a table of counts
    Lof {
        #[command(flatten)]
        source: CountSource,
        /// Null probabilities: "uniform" or a file with one probability per line
        #[arg(long, default_value = "uniform")]
        probs: String,
        #[command(flatten)]
        common: Common,
    },
    /// Evidence for equivalence to a null model for a table of counts
    Equiv {
        #[command(flatten)]
        source: CountSource,
        /// Relative error defining equivalence, in (0, 1]
        #[arg(long, default_value_t = DEFAULT_K)]
        k: f64,
        #[arg(long, default_value = "uniform")]
        probs: String,
        #[command(flatten)]
        common: Common,
    },
    /// Minimum sample size for a target maximum expected evidence
    Samplesize {
        #[arg(long)]
        m0: f64,
        /// Number of cells
        #[arg(long)]
        r: usize,
        #[arg(long, default_value_t = 1.0)]
        k: f64,
        /// Degrees of freedom, default r - 1
        #[arg(long)]
        nu: Option<f64>,
    },
    /// Evidence for normality of real-valued data (one value per line)
    FitNormal {
        input: PathBuf,
        #[arg(long, default_value_t = DEFAULT_K)]
        k: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Evidence for a Poisson model; "index,count" rows give a frequency
    /// table, one value per line gives raw observations
    FitPoisson {
        #[command(flatten)]
        source: CountSource,
        #[arg(long, default_value_t = DEFAULT_K)]
        k: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Run a Monte Carlo study and write CSV, JSON and a manifest
    Simulate(SimulateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
enum ScenarioArg {
    VstLofCalibration,
    VstEquivCalibration,
    NormalFitTable,
    PoissonFitTable,
    Table1Models,
}

impl From<ScenarioArg> for Scenario {
    fn from(s: ScenarioArg) -> Self {
        match s {
            ScenarioArg::VstLofCalibration => Scenario::VstLofCalibration,
            ScenarioArg::VstEquivCalibration => Scenario::VstEquivCalibration,
            ScenarioArg::NormalFitTable => Scenario::NormalFitTable,
            ScenarioArg::PoissonFitTable => Scenario::PoissonFitTable,
            ScenarioArg::Table1Models => Scenario::Table1Models,
        }
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, value_enum, required_unless_present = "config", conflicts_with = "config")]
    scenario: Option<ScenarioArg>,
    /// JSON scenario description (reps, seed, params)
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, conflicts_with = "full_scale")]
    reps: Option<usize>,
    /// Use 20,000 replications (40,000 for the transform calibrations)
    #[arg(long)]
    full_scale: bool,
    #[arg(long)]
    seed: Option<u64>,
    /// Results directory; defaults to $CHISQ_EVIDENCE_RESULTS_DIR or ./results
    #[arg(long)]
    out: Option<PathBuf>,
    /// Degrees of freedom for the calibration scenarios
    #[arg(long)]
    nu: Option<f64>,
    #[arg(long)]
    lambda0: Option<f64>,
    /// Comma-separated noncentrality grid
    #[arg(long, value_delimiter = ',')]
    lambdas: Option<Vec<f64>>,
    /// Comma-separated sample sizes for the model-fit tables
    #[arg(long, value_delimiter = ',')]
    ns: Option<Vec<usize>>,
    #[arg(long)]
    k: Option<f64>,
    /// Sample size for table1_models
    #[arg(long)]
    n: Option<u64>,
    #[arg(long)]
    alpha: Option<f64>,
}

type CliResult<T> = Result<T, String>;

fn read(path: &Path) -> CliResult<String> {
    if path.as_os_str() == "-" {
        let mut s = String::new();
        return std::io::Read::read_to_string(&mut std::io::stdin(), &mut s)
            .map(|_| s)
            .map_err(|e| format!("cannot read stdin: {e}"));
    }
    std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))
}

fn with_path<T>(path: &Path, r: chisq_evidence::Result<T>) -> CliResult<T> {
    r.map_err(|e| format!("{}: {e}", path.display()))
}

fn load_counts(source: &CountSource) -> CliResult<(CountTable, String)> {
    match (&source.input, source.fixture) {
        (_, Some(Fixture::Die)) => Ok((fixtures::die_table(), "fixture die".into())),
        (_, Some(Fixture::Alpha)) => Ok((fixtures::alpha_table(), "fixture alpha".into())),
        (Some(path), None) => Ok((with_path(path, parse_counts(&read(path)?))?, path.display().to_string())),
        (None, None) => unreachable!("clap requires a source"),
    }
}

fn load_cells(table: &CountTable, probs: &str) -> CliResult<CellData> {
    let null = if probs == "uniform" {
        uniform(table.counts.len())
    } else {
        let path = Path::new(probs);
        with_path(path, parse_probs(&read(path)?))?
    };
    CellData::new(table.counts.clone(), null).map_err(|e| e.to_string())
}

fn simulate_config(args: &SimulateArgs) -> Result<SimConfig, clap::Error> {
    let usage = |msg: String| Cli::command().error(clap::error::ErrorKind::ArgumentConflict, msg);
    if let Some(path) = &args.config {
        let text = read(path).map_err(|e| Cli::command().error(clap::error::ErrorKind::Io, e))?;
        let mut config = SimConfig::from_json(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
        if let Some(reps) = args.reps {
            config.reps = reps;
        }
        if let Some(seed) = args.seed {
            config.seed = seed;
        }
        return Ok(config);
    }
    let scenario: Scenario = args.scenario.expect("clap requires scenario or config").into();
    let mut params = ScenarioParams::default_for(scenario);
    let mut unused = Vec::new();
    {
        let mut set = |name: &str, applies: bool, given: bool| {
            if given && !applies {
                unused.push(name.to_string());
            }
        };
        match &mut params {
            ScenarioParams::VstLofCalibration { nu, lambdas } => {
                set_opt(nu, args.nu);
                set_opt(lambdas, args.lambdas.clone());
                set("--lambda0", false, args.lambda0.is_some());
            }
            ScenarioParams::VstEquivCalibration { nu, lambda0, lambdas } => {
                set_opt(nu, args.nu);
                set_opt(lambda0, args.lambda0);
                set_opt(lambdas, args.lambdas.clone());
            }
            ScenarioParams::NormalFitTable { ns, k, .. } | ScenarioParams::PoissonFitTable { ns, k, .. } => {
                set_opt(ns, args.ns.clone());
                set_opt(k, args.k);
                set("--nu", false, args.nu.is_some());
                set("--lambda0", false, args.lambda0.is_some());
                set("--lambdas", false, args.lambdas.is_some());
            }
            ScenarioParams::Table1Models { n, alpha } => {
                set_opt(n, args.n);
                set_opt(alpha, args.alpha);
                set("--nu", false, args.nu.is_some());
                set("--lambda0", false, args.lambda0.is_some());
                set("--lambdas", false, args.lambdas.is_some());
            }
        }
        let tables = matches!(scenario, Scenario::NormalFitTable | Scenario::PoissonFitTable);
        set("--ns", tables, args.ns.is_some());
        set("--k", tables, args.k.is_some());
        set("--n", scenario == Scenario::Table1Models, args.n.is_some());
        set("--alpha", scenario == Scenario::Table1Models, args.alpha.is_some());
    }
    unused.dedup();
    if !unused.is_empty() {
        return Err(usage(format!("{} not applicable to scenario {scenario}", unused.join(", "))));
    }
    let reps = match (args.reps, args.full_scale) {
        (Some(r), _) => r,
        (None, true) if matches!(scenario, Scenario::VstLofCalibration | Scenario::VstEquivCalibration) => 40_000,
        (None, true) => 20_000,
        (None, false) => DESK_REPS,
    };
    SimConfig::new(params, reps, args.seed.unwrap_or(1)).map_err(|e| usage(e.to_string()))
}

fn set_opt<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn results_dir(args: &SimulateArgs) -> PathBuf {
    args.out
        .clone()
        .or_else(|| std::env::var_os(RESULTS_DIR_VAR).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("results"))
}

fn run(cli: &Cli) -> CliResult<Rendered> {
    let err = |e: chisq_evidence::Error| e.to_string();
    match &cli.command {
        Command::Lof { source, probs, common } => {
            let (table, origin) = load_counts(source)?;
            let cells = load_cells(&table, probs)?;
            let rep = lack_of_fit_report(&cells, !common.no_bias_adjust).map_err(err)?;
            Ok(report::lof(&rep, &origin, probs))
        }
        Command::Equiv { source, k, probs, common } => {
            let (table, origin) = load_counts(source)?;
            let cells = load_cells(&table, probs)?;
            let rep = equivalence_report(&cells, *k, !common.no_bias_adjust).map_err(err)?;
            Ok(report::equiv(&rep, &origin, probs))
        }
        Command::Samplesize { m0, r, k, nu } => {
            let nu = nu.unwrap_or(*r as f64 - 1.0);
            let spec = EquivalenceSpec::euclidean(*r, *k).map_err(err)?;
            let n0 = sample_size(*m0, nu, *r, spec.d0).map_err(err)?;
            let unit = sample_size(*m0, nu, *r, EquivalenceSpec::euclidean(*r, 1.0).map_err(err)?.d0).map_err(err)?;
            Ok(report::samplesize(*m0, *r, *k, nu, spec.d0, n0, unit))
        }
        Command::FitNormal { input, k, common } => {
            let data = with_path(input, parse_reals(&read(input)?))?;
            let rep = evidence_for_normality(&data, *k, !common.no_bias_adjust).map_err(err)?;
            Ok(report::fit_normal(&rep, &input.display().to_string()))
        }
        Command::FitPoisson { source, k, common } => {
            let (table, origin) = load_counts(source)?;
            let counts = match table.index {
                Some(_) => table.by_outcome(),
                None => tabulate_counts(&table.counts),
            };
            let rep = evidence_for_poisson(&counts, *k, !common.no_bias_adjust).map_err(err)?;
            Ok(report::fit_poisson(&rep, &origin))
        }
        Command::Simulate(args) => {
            let config = simulate_config(args).unwrap_or_else(|e| e.exit());
            let start = Instant::now();
            let summaries = sim::run(&config).map_err(err)?;
            let dir = results_dir(args);
            let files = sim::write_results(&dir, &config, &summaries, start.elapsed())
                .map_err(|e| format!("cannot write results to {}: {e}", dir.display()))?;
            Ok(report::simulate(&config, &summaries, &files))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(rendered) => {
            print!("{}", rendered.render(cli.output_format));
            ExitCode::SUCCESS
        }
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
