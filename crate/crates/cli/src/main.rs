use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use xtpanel::coint::Standardization;
use xtpanel::Transform;
use xtpanel_cli::config::{AnnualInput, PipelineConfig, Stages};
use xtpanel_cli::error::{CliError, CliResult};
use xtpanel_cli::ingest::write_panel_csv;
use xtpanel_cli::montecarlo::{monte_carlo, McTest};
use xtpanel_cli::pipeline::{load_panel, run_pipeline};
use xtpanel_cli::report::{write_bundle, ReportBundle};
use xtpanel_cli::sim::{synth_dgp, DgpSpec, FIXTURE_SEED};

#[derive(Parser)]
#[command(name = "xtpanel", version, about = "Panel cointegration, causality and error-correction estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Read, transform and merge inputs, then write one long CSV.
    Ingest {
        #[command(flatten)]
        input: InputArgs,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Descriptive statistics table.
    Describe(RunArgs),
    /// Residual-based cointegration tests.
    Coint {
        #[arg(value_enum)]
        test: CointKind,
        #[command(flatten)]
        run: RunArgs,
        /// Pedroni group-mean statistics instead of panel statistics.
        #[arg(long)]
        group: bool,
    },
    /// Dumitrescu-Hurlin causality in every configured direction.
    Causality {
        #[command(flatten)]
        run: RunArgs,
        /// `CAUSE:EFFECT`; repeatable, replaces the configured directions.
        #[arg(long = "direction")]
        directions: Vec<String>,
        /// Lag order K.
        #[arg(long)]
        lags: Option<usize>,
    },
    /// Pooled and grouped panel FMOLS.
    Fmols(RunArgs),
    /// Pooled mean group estimation.
    Pmg(RunArgs),
    /// Fixed-effect error-correction regression.
    Ecm {
        #[command(flatten)]
        run: RunArgs,
        /// Cluster standard errors by entity.
        #[arg(long)]
        cluster: bool,
    },
    /// Every enabled stage in order.
    Pipeline(RunArgs),
    /// Generate a synthetic panel.
    Simulate {
        /// TOML DGP specification.
        #[arg(long, conflicts_with = "fixture")]
        dgp: Option<PathBuf>,
        /// The six-entity, 41-quarter paper-shaped layout.
        #[arg(long)]
        fixture: bool,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Monte Carlo rejection rates of a test on a synthetic DGP.
    Validate {
        #[arg(value_enum)]
        test: McKind,
        /// TOML DGP specification.
        #[arg(long)]
        dgp: PathBuf,
        #[arg(long, default_value_t = 1000)]
        reps: usize,
        #[arg(long, default_value_t = 0.05)]
        nominal: f64,
        /// DH lag order.
        #[arg(long, default_value_t = 2)]
        lags: usize,
        #[arg(long)]
        serial: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum CointKind {
    Kao,
    Pedroni,
}

#[derive(Clone, Copy, ValueEnum)]
enum McKind {
    Kao,
    Pedroni,
    PedroniGroup,
    Dh,
}

#[derive(Args)]
struct InputArgs {
    /// TOML pipeline configuration.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Panel CSV; overrides the configured input.
    #[arg(short, long)]
    input: Option<PathBuf>,
    /// Take the natural log of this column; repeatable.
    #[arg(long = "log")]
    log: Vec<String>,
    /// `FILE:COLUMN` annual CSV to expand to quarters; repeatable.
    #[arg(long = "annual")]
    annual: Vec<String>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Write bundle.json, report.txt and per-stage JSON here.
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    dependent: Option<String>,
    /// Comma-separated regressors.
    #[arg(long, value_delimiter = ',')]
    regressors: Option<Vec<String>>,
    #[arg(long)]
    bandwidth: Option<usize>,
    #[arg(long)]
    aug_lags: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

fn build_config(input: &InputArgs) -> CliResult<PipelineConfig> {
    let mut config = match (&input.config, &input.input) {
        (Some(path), _) => PipelineConfig::load(path)?,
        (None, Some(csv)) => PipelineConfig::new(csv),
        (None, None) => return Err(CliError::Config("give --config or --input".into())),
    };
    if let Some(csv) = &input.input {
        config.input = csv.clone();
    }
    if !input.log.is_empty() {
        if config.variables.is_empty() {
            return Err(CliError::Config("--log needs a configured variable mapping".into()));
        }
        for col in &input.log {
            let m = config
                .variables
                .iter_mut()
                .find(|m| &m.column == col)
                .ok_or_else(|| CliError::Config(format!("--log {col}: column not in the variable mapping")))?;
            m.transform = Transform::NaturalLog;
        }
    }
    for a in &input.annual {
        let (path, column) = a
            .rsplit_once(':')
            .ok_or_else(|| CliError::Config(format!("--annual `{a}` is not FILE:COLUMN")))?;
        config.annual.push(AnnualInput {
            path: path.into(),
            column: column.into(),
            name: None,
        });
    }
    Ok(config)
}

fn run_config(run: &RunArgs, stages: Option<Stages>, tweak: impl FnOnce(&mut PipelineConfig)) -> CliResult<()> {
    let mut config = build_config(&run.input)?;
    if let Some(s) = stages {
        config.stages = s;
    }
    if let Some(d) = &run.dependent {
        config.model.dependent = d.clone();
    }
    if let Some(r) = &run.regressors {
        config.model.regressors = r.clone();
    }
    if let Some(b) = run.bandwidth {
        config.parameters.bandwidth = b;
    }
    if let Some(a) = run.aug_lags {
        config.parameters.aug_lags = a;
    }
    if let Some(s) = run.seed {
        config.seed = s;
    }
    tweak(&mut config);
    let result = run_pipeline(&config);
    let out_dir = run.output_dir.clone().or_else(|| run.input.config.as_ref().map(|_| config.output_dir.clone()));
    let emit = |bundle: &ReportBundle| -> CliResult<()> {
        print!("{}", bundle.render_text());
        if let Some(dir) = &out_dir {
            write_bundle(bundle, dir)?;
        }
        Ok(())
    };
    match result {
        Ok(bundle) => emit(&bundle),
        Err(CliError::Stage { stage, source, partial }) => {
            emit(&partial)?;
            Err(CliError::Stage { stage, source, partial })
        }
        Err(e) => Err(e),
    }
}

fn only(f: impl FnOnce(&mut Stages)) -> Option<Stages> {
    let mut s = Stages::all(false);
    s.descriptive = true;
    f(&mut s);
    Some(s)
}

fn write_csv(panel: &xtpanel::Panel, path: &Path) -> CliResult<()> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    write_panel_csv(panel, BufWriter::new(file)).map_err(|e| CliError::io(path, e))
}

fn load_dgp(path: &Path) -> CliResult<DgpSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Ingest { input, output } => {
            let config = build_config(&input)?;
            let panel = load_panel(&config)?;
            write_csv(&panel, &output)
        }
        Command::Describe(run) => run_config(&run, only(|_| {}), |_| {}),
        Command::Coint { test, run, group } => {
            let stages = match test {
                CointKind::Kao => only(|s| s.kao = true),
                CointKind::Pedroni => only(|s| s.pedroni = true),
            };
            run_config(&run, stages, |c| {
                if group {
                    c.parameters.pedroni = Standardization::Group;
                }
            })
        }
        Command::Causality { run, directions, lags } => {
            let parsed = directions
                .iter()
                .map(|d| {
                    d.split_once(':')
                        .map(|(c, e)| xtpanel_cli::config::Direction { cause: c.into(), effect: e.into() })
                        .ok_or_else(|| CliError::Config(format!("--direction `{d}` is not CAUSE:EFFECT")))
                })
                .collect::<CliResult<Vec<_>>>()?;
            run_config(&run, only(|s| s.causality = true), |c| {
                if !parsed.is_empty() {
                    c.model.causality = parsed;
                }
                if let Some(k) = lags {
                    c.parameters.causality_lags = k;
                }
            })
        }
        Command::Fmols(run) => run_config(&run, only(|s| s.fmols = true), |_| {}),
        Command::Pmg(run) => run_config(&run, only(|s| s.pmg = true), |_| {}),
        Command::Ecm { run, cluster } => run_config(&run, only(|s| s.fe_ecm = true), |c| {
            if cluster {
                c.parameters.covariance = xtpanel::fe_ecm::Covariance::ClusterEntity;
            }
        }),
        Command::Pipeline(run) => run_config(&run, None, |_| {}),
        Command::Simulate { dgp, fixture, seed, output } => {
            let mut spec = match (dgp, fixture) {
                (Some(path), _) => load_dgp(&path)?,
                (None, true) => DgpSpec::paper_fixture(FIXTURE_SEED),
                (None, false) => return Err(CliError::Config("give --dgp or --fixture".into())),
            };
            if let Some(s) = seed {
                spec.seed = s;
            }
            write_csv(&synth_dgp(&spec)?, &output)
        }
        Command::Validate { test, dgp, reps, nominal, lags, serial } => {
            let spec = load_dgp(&dgp)?;
            let test = match test {
                McKind::Kao => McTest::Kao,
                McKind::Pedroni => McTest::Pedroni,
                McKind::PedroniGroup => McTest::PedroniGroup,
                McKind::Dh => McTest::Dh { k: lags },
            };
            let report = monte_carlo(test, &spec, reps, nominal, !serial)?;
            println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
