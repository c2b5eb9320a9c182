use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use discretize::experiments::{default_gammas, pareto_sweep, RuleMetrics, SweepConfig};
use discretize::heuristic::{apply_labeler, LinearLabeler, TrainConfig};
use discretize::io::{write_synthetic, Dataset};
use discretize::pipeline::{apply_rule, default_ties, fit_heuristic, parse_rules, ReferenceSpec, RuleContext, RuleSpec};
use discretize::simulator::{halving_prior, simulate_gaussian, simulate_worst_case, GaussianSimConfig, WorstCaseConfig};
use discretize::{aggregate_posterior, Error, LabelAssignment, ReferenceDistribution, RngSeed};
use serde::Serialize;

const EXIT_USAGE: u8 = 2;
const EXIT_SCHEMA: u8 = 3;
const EXIT_REFERENCE: u8 = 4;
const EXIT_IO: u8 = 5;

/// Turn multiclass probabilities into discrete labels.
#[derive(Parser)]
#[command(name = "discretize", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Label every row of a probability file with one or more rules.
    Discretize(DiscretizeArgs),
    /// Write a simulated dataset with exact posteriors.
    Simulate(SimulateArgs),
    /// Monte Carlo comparison of rules across the gamma grid.
    Sweep(SweepArgs),
    /// Recompute metrics for the label columns of a labeled file.
    Evaluate(EvaluateArgs),
}

#[derive(Args)]
struct DiscretizeArgs {
    #[arg(long, short)]
    input: PathBuf,
    /// Comma-separated rules: argmax, threshold:T, thompson, topk:K, match,
    /// match:group, gamma:G, heuristic.
    #[arg(long, short)]
    rules: String,
    /// aggregate, aggregate:group, truth, uniform, or custom:w1,w2,...
    #[arg(long, default_value = "aggregate")]
    reference: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = discretize::joint::DEFAULT_BATCH_SIZE)]
    batch_size: usize,
    /// Use the `group` column for group-conditional matching.
    #[arg(long)]
    group: bool,
    #[arg(long, short)]
    output: PathBuf,
    #[arg(long)]
    metrics: Option<PathBuf>,
    /// Label the `heuristic` rule with this saved model instead of fitting one.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Save the model fitted for the `heuristic` rule.
    #[arg(long)]
    save_model: Option<PathBuf>,
    #[arg(long, default_value_t = 500)]
    epochs: usize,
    #[arg(long, default_value_t = 1.0)]
    learning_rate: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum SimModel {
    Gaussian,
    WorstCase,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, value_enum, default_value = "gaussian")]
    model: SimModel,
    #[arg(long, default_value_t = 6)]
    k: usize,
    #[arg(long, default_value_t = 5000)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Feature noise of the Gaussian model.
    #[arg(long, default_value_t = 0.5)]
    sigma: f64,
    /// Comma-separated class prior of the Gaussian model; halving by default.
    #[arg(long)]
    prior: Option<String>,
    /// Mass of uniform rows in the worst-case model.
    #[arg(long, default_value_t = 0.5)]
    c: f64,
    #[arg(long, short)]
    output: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    /// Comma-separated rules run alongside the gamma grid.
    #[arg(long, short)]
    rules: String,
    /// Comma-separated gammas; 0.80 to 0.99 in steps of 0.01 by default.
    #[arg(long)]
    gammas: Option<String>,
    #[arg(long, default_value_t = 100)]
    replicates: usize,
    #[arg(long, default_value_t = 6)]
    k: usize,
    #[arg(long, default_value_t = 5000)]
    n: usize,
    #[arg(long, default_value_t = 0.5)]
    sigma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, short)]
    output: PathBuf,
    #[arg(long)]
    summary: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long, short)]
    input: PathBuf,
    #[arg(long, default_value = "aggregate")]
    reference: String,
    #[arg(long, short)]
    metrics: PathBuf,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Lib(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Lib(e) => match e {
                Error::Io(_) => EXIT_IO,
                Error::InvalidReference(_) | Error::InfeasibleCounts { .. } | Error::MissingGroupReference(_) => {
                    EXIT_REFERENCE
                }
                Error::InvalidParameter(_) | Error::InvalidTieOrder(_) => EXIT_USAGE,
                _ => EXIT_SCHEMA,
            },
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Lib(e) => write!(f, "{e}"),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())).into())
}

fn write_json(path: &Path, value: &impl Serialize) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    Ok(())
}

fn parse_list(s: &str) -> CliResult<Vec<f64>> {
    s.split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|_| CliError::Usage(format!("{v:?} is not a number"))))
        .collect()
}

fn parse_rule_list(s: &str) -> CliResult<Vec<RuleSpec>> {
    let rules = parse_rules(s)?;
    if rules.is_empty() {
        return Err(CliError::Usage("--rules must name at least one rule".into()));
    }
    Ok(rules)
}

#[derive(Serialize)]
struct MetricsFile<'a> {
    n_rows: usize,
    class_names: &'a [String],
    renormalized_rows: usize,
    reference: String,
    aggregate_posterior: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    truth_marginal: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mae: Option<f64>,
    rules: Vec<RuleMetrics>,
}

fn metrics_file<'a>(
    data: &'a Dataset<f64>,
    reference: &ReferenceSpec,
    assignments: &[LabelAssignment],
) -> CliResult<MetricsFile<'a>> {
    let extra = match reference {
        ReferenceSpec::Uniform | ReferenceSpec::Custom(_) => Some(reference.resolve(&data.probs, None)?),
        _ => None,
    };
    let rules = assignments
        .iter()
        .map(|a| RuleMetrics::compute(a, &data.probs, data.truth.as_ref(), extra.as_ref()))
        .collect::<discretize::Result<Vec<_>>>()?;
    Ok(MetricsFile {
        n_rows: data.n_rows(),
        class_names: data.class_names(),
        renormalized_rows: data.probs.renormalized_rows(),
        reference: reference.to_string(),
        aggregate_posterior: aggregate_posterior(&data.probs).weights().to_vec(),
        truth_marginal: data
            .truth
            .as_ref()
            .map(|t| ReferenceDistribution::<f64>::truth_marginal(t).map(|r| r.weights().to_vec()))
            .transpose()?,
        mae: data.truth.as_ref().map(|t| discretize::mae(&data.probs, t)).transpose()?,
        rules,
    })
}

fn cmd_discretize(args: DiscretizeArgs) -> CliResult<()> {
    let rules = parse_rule_list(&args.rules)?;
    let reference: ReferenceSpec = args.reference.parse()?;
    let data = Dataset::<f64>::from_path(&args.input)?;
    let wants_groups = args.group || reference == ReferenceSpec::AggregateByGroup || rules.iter().any(|r| r.needs_groups());
    if wants_groups && data.groups.is_none() {
        return Err(Error::Parse { line: 1, message: "group matching needs a `group` column".into() }.into());
    }
    if args.batch_size == 0 {
        return Err(CliError::Usage("--batch-size must be positive".into()));
    }
    let ctx = RuleContext {
        reference: reference.clone(),
        truth: data.truth.as_ref(),
        groups: if wants_groups { data.groups.as_ref() } else { None },
        seed: RngSeed(args.seed),
        batch_size: args.batch_size,
        train: TrainConfig {
            batch_size: args.batch_size,
            epochs: args.epochs,
            learning_rate: args.learning_rate,
            seed: RngSeed(args.seed),
        },
    };
    let ties = default_ties(&data.probs, &ctx)?;
    let mut assignments = Vec::with_capacity(rules.len());
    for &rule in &rules {
        let a = match rule {
            RuleSpec::Heuristic => {
                let model = match &args.model {
                    Some(path) => {
                        let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
                        LinearLabeler::from_text(&text)?
                    }
                    None => {
                        let fit = fit_heuristic(&data.probs, &ctx, &ties)?;
                        if fit.degenerate {
                            eprintln!("warning: heuristic training batch has a single class");
                        }
                        fit.model
                    }
                };
                if let Some(path) = &args.save_model {
                    fs::write(path, model.to_text()).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
                }
                apply_labeler(&model, &data.probs, &ties)?
            }
            other => apply_rule(&data.probs, other, &ctx, &ties)?,
        };
        assignments.push(a);
    }
    let mut out = create(&args.output)?;
    data.write_labeled(&mut out, &assignments)?;
    out.flush().map_err(Error::from)?;
    if let Some(path) = &args.metrics {
        write_json(path, &metrics_file(&data, &reference, &assignments)?)?;
    }
    Ok(())
}

fn cmd_evaluate(args: EvaluateArgs) -> CliResult<()> {
    let reference: ReferenceSpec = args.reference.parse()?;
    let data = Dataset::<f64>::from_path(&args.input)?;
    let rules: Vec<String> = data.label_rules().map(str::to_string).collect();
    if rules.is_empty() {
        return Err(Error::Parse { line: 1, message: "no label_<rule> columns".into() }.into());
    }
    let assignments = rules.iter().map(|r| data.labels_for(r)).collect::<discretize::Result<Vec<_>>>()?;
    write_json(&args.metrics, &metrics_file(&data, &reference, &assignments)?)
}

fn cmd_simulate(args: SimulateArgs) -> CliResult<()> {
    let mut out = create(&args.output)?;
    match args.model {
        SimModel::Gaussian => {
            let prior = match &args.prior {
                Some(p) => parse_list(p)?,
                None => halving_prior(args.k),
            };
            let cfg = GaussianSimConfig { k: args.k, prior, sigma: args.sigma, n: args.n, seed: args.seed };
            write_synthetic(&mut out, &simulate_gaussian::<f64>(&cfg)?)?;
        }
        SimModel::WorstCase => {
            let cfg = WorstCaseConfig { k: args.k, c: args.c, n: args.n, seed: args.seed };
            write_synthetic(&mut out, &simulate_worst_case::<f64>(&cfg)?)?;
        }
    }
    out.flush().map_err(Error::from)?;
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> CliResult<()> {
    let rules = parse_rule_list(&args.rules)?;
    let gammas = match &args.gammas {
        Some(g) => parse_list(g)?,
        None => default_gammas(),
    };
    let cfg = SweepConfig {
        gammas,
        replicates: args.replicates,
        sim: GaussianSimConfig {
            k: args.k,
            prior: halving_prior(args.k),
            sigma: args.sigma,
            n: args.n,
            seed: args.seed,
        },
        rules,
    };
    cfg.validate()?;
    let result = pareto_sweep(&cfg)?;
    let mut out = create(&args.output)?;
    result.write_csv(&mut out)?;
    out.flush().map_err(Error::from)?;
    write_json(&args.summary, &result.summary_json())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Discretize(a) => cmd_discretize(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Evaluate(a) => cmd_evaluate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
