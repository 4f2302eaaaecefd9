//! Command-line definitions and the four commands.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use dust_core::simgen::{simulate, worstcase_expfam, worstcase_gauss, SimSpec};
use dust_core::{run, ModelFamily, ModelId, RunOptions};

use crate::bench::{loglog_slopes, run_sweep, summarise, BenchConfig};
use crate::config::{default_strategy, parse_lengths, parse_penalty_sweep, resolve_penalty, PenaltySpec, PruningChoice};
use crate::error::{CliError, CliResult};
use crate::io::{read_series, write_series};
use crate::report::{write_records, Record, SegmentReport};

#[derive(Debug, Parser)]
#[command(name = "dust", version, about = "Exact change-point detection with dual-based pruning")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Segment a CSV series and print a JSON-lines report.
    Segment(SegmentArgs),
    /// Write a simulated series as CSV.
    Simulate(SimulateArgs),
    /// Write a series on which no pruning rule can discard any index.
    Worstcase(WorstcaseArgs),
    /// Run a sweep over lengths, penalties and repetitions.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// gauss | poisson | exponential | geometric | bernoulli | binomial | negbin | variance | meanvar | quadratic-regression
    #[arg(long)]
    pub model: String,
    /// Number of trials (binomial) or successes (negbin).
    #[arg(long, default_value_t = 10)]
    pub trials: u32,
    /// Divide Gaussian columns by a robust noise-scale estimate.
    #[arg(long)]
    pub standardise: bool,
}

impl ModelArgs {
    /// Builds the model for series with `columns` columns.
    pub fn family(&self, columns: usize) -> CliResult<ModelFamily> {
        let id: ModelId = self.model.parse()?;
        let columns = if id == ModelId::QuadraticRegression { 1 } else { columns };
        let mut m = ModelFamily::new(id, columns)?;
        if matches!(id, ModelId::Binomial | ModelId::NegBin) {
            m = m.with_trials(self.trials as f64)?;
        }
        Ok(m.with_standardise(self.standardise))
    }
}

#[derive(Debug, Args)]
pub struct PruningArgs {
    /// op | pelt | exact1d | zero | random | qn | meanvar | gauss (default depends on the model)
    #[arg(long)]
    pub strategy: Option<String>,
    /// Constraint indices per dual test.
    #[arg(long, default_value_t = 1)]
    pub constraints: usize,
    /// Draw constraint indices at random among the surviving ones.
    #[arg(long)]
    pub random_constraints: bool,
}

impl PruningArgs {
    fn choice(&self, name: &str) -> PruningChoice {
        PruningChoice {
            name: name.to_string(),
            constraints: self.constraints,
            random_constraints: self.random_constraints,
        }
    }
}

#[derive(Debug, Args)]
pub struct SegmentArgs {
    /// Input CSV, one observation per row.
    pub input: PathBuf,
    #[command(flatten)]
    pub model: ModelArgs,
    /// abs:<beta> or log:<a> for a·log n.
    #[arg(long, default_value = "log:2")]
    pub penalty: String,
    /// Multiply log penalties by the model's penalty scale.
    #[arg(long)]
    pub scale_table: bool,
    #[command(flatten)]
    pub pruning: PruningArgs,
    /// Seed of the random strategies.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Include the number of candidates at every step.
    #[arg(long)]
    pub trace: bool,
    /// Initial cost Q_0.
    #[arg(long, allow_hyphen_values = true)]
    pub q0: Option<f64>,
    /// The first CSV row is a header.
    #[arg(long)]
    pub header: bool,
    /// Leave the wall time out of the report.
    #[arg(long)]
    pub no_timing: bool,
    /// Report path; standard output when absent.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Length of the series.
    #[arg(long)]
    pub n: usize,
    /// Length of the segments; no change when absent.
    #[arg(long)]
    pub segment_len: Option<usize>,
    /// The two alternating parameters, as "a,b".
    #[arg(long)]
    pub params: Option<String>,
    /// Number of columns sharing the change points.
    #[arg(long, default_value_t = 1)]
    pub dim: usize,
    /// Seed of the generator; bench repetition k uses seed + k.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output path; standard output when absent.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct WorstcaseArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Length of the series.
    #[arg(long)]
    pub n: usize,
    /// Penalty the series is built for.
    #[arg(long, default_value = "log:2")]
    pub penalty: String,
    /// Multiply log penalties by the model's penalty scale.
    #[arg(long)]
    pub scale_table: bool,
    /// Overall mean of the series. Required except for gauss.
    #[arg(long, allow_hyphen_values = true)]
    pub mean: Option<f64>,
    /// Output path; standard output when absent.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Comma-separated lengths, or lo:hi:count for a log-regular grid.
    #[arg(long)]
    pub lengths: String,
    /// Number of simulated series per length and penalty.
    #[arg(long)]
    pub repetitions: usize,
    /// Comma-separated pruning rules.
    #[arg(long, default_value = "pelt,exact1d")]
    pub strategies: String,
    /// Constraint indices per dual test.
    #[arg(long, default_value_t = 1)]
    pub constraints: usize,
    /// Draw constraint indices at random among the surviving ones.
    #[arg(long)]
    pub random_constraints: bool,
    /// abs:<beta> or log:<a> for a·log n.
    #[arg(long, default_value = "log:2")]
    pub penalty: String,
    /// lo:hi:count, log-spaced multipliers of log n; replaces --penalty.
    #[arg(long)]
    pub penalty_sweep: Option<String>,
    /// Multiply log penalties by the model's penalty scale.
    #[arg(long)]
    pub scale_table: bool,
    /// Length of the segments; no change when absent.
    #[arg(long)]
    pub segment_len: Option<usize>,
    /// The two alternating parameters, as "a,b".
    #[arg(long)]
    pub params: Option<String>,
    /// Seed of the generator; bench repetition k uses seed + k.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Add the log-log slope of remaining candidates against n.
    #[arg(long)]
    pub slope: bool,
    /// Leave wall times out of the records.
    #[arg(long)]
    pub no_timing: bool,
    /// Output path; standard output when absent.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

fn open_output(path: &Option<PathBuf>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    })
}

fn parse_params(s: &str) -> CliResult<[f64; 2]> {
    let bad = || CliError::Config(format!("parameters '{s}' should look like 0,1"));
    let (a, b) = s.split_once(',').ok_or_else(bad)?;
    Ok([a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?])
}

/// Runs a parsed command line.
pub fn execute(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Segment(a) => {
            let out = open_output(&a.output)?;
            cmd_segment(&a, out)
        }
        Command::Simulate(a) => {
            let out = open_output(&a.output)?;
            cmd_simulate(&a, out)
        }
        Command::Worstcase(a) => {
            let out = open_output(&a.output)?;
            cmd_worstcase(&a, out)
        }
        Command::Bench(a) => {
            let out = open_output(&a.output)?;
            cmd_bench(&a, out)
        }
    }
}

pub fn cmd_segment<W: Write>(a: &SegmentArgs, out: W) -> CliResult<()> {
    let spec: PenaltySpec = a.penalty.parse()?;
    // settle the model name before touching the file
    let _: ModelId = a.model.model.parse()?;
    let file = File::open(&a.input).map_err(|e| CliError::Input(format!("{}: {e}", a.input.display())))?;
    let series = read_series(BufReader::new(file), a.header)?;
    let model = a.model.family(series.dim())?;
    let expected = if model.id() == ModelId::QuadraticRegression { 2 } else { model.columns() };
    if series.dim() != expected {
        return Err(CliError::Input(format!(
            "model {} needs {expected} column(s), input has {}",
            model.id(),
            series.dim()
        )));
    }
    let beta = resolve_penalty(spec, model.id(), series.len() as f64, a.scale_table)?;
    let name = a.pruning.strategy.clone().unwrap_or_else(|| default_strategy(&model).to_string());
    let pruning = a.pruning.choice(&name).build()?;
    let opts = RunOptions { q0: a.q0, seed: a.seed };
    let res = run(&model, &series, beta, &pruning, &opts)?;
    let report = SegmentReport {
        model: model.id().to_string(),
        n: series.len(),
        beta,
        strategy: pruning.name(),
        changepoints: res.changepoints.clone(),
        global_cost: res.global_cost,
        remaining_candidates: res.remaining(),
        candidate_trace: a.trace.then(|| res.candidate_trace.clone()),
        wall_time: (!a.no_timing).then_some(res.wall_time),
    };
    write_records(out, &[Record::header("segment"), Record::Segment(report)])
}

pub fn cmd_simulate<W: Write>(a: &SimulateArgs, out: W) -> CliResult<()> {
    let id: ModelId = a.model.model.parse()?;
    if a.n == 0 || a.dim == 0 {
        return Err(CliError::Config("n and dim must be positive".into()));
    }
    let mut spec = SimSpec::new(id, a.n, a.seed).with_dim(a.dim);
    spec.trials = a.model.trials;
    if let Some(k) = a.segment_len {
        spec = spec.with_segment_len(k);
    }
    if let Some(p) = &a.params {
        spec = spec.with_params(parse_params(p)?);
    }
    let series = simulate(&spec).map_err(|e| CliError::Config(e.to_string()))?;
    write_series(out, &series)
}

pub fn cmd_worstcase<W: Write>(a: &WorstcaseArgs, out: W) -> CliResult<()> {
    let spec: PenaltySpec = a.penalty.parse()?;
    let model = a.model.family(1)?;
    let beta = resolve_penalty(spec, model.id(), a.n as f64, a.scale_table)?;
    let series = match (model.id(), a.mean) {
        (ModelId::Gauss, None) => worstcase_gauss(a.n, beta),
        (_, Some(y)) => worstcase_expfam(&model, a.n, y, beta),
        (id, None) => return Err(CliError::Config(format!("--mean is required for model {id}"))),
    }
    .map_err(|e| CliError::Config(e.to_string()))?;
    write_series(out, &series)
}

pub fn cmd_bench<W: Write>(a: &BenchArgs, out: W) -> CliResult<()> {
    let model = a.model.family(1)?;
    let mut cfg = BenchConfig::new(
        model,
        parse_lengths(&a.lengths)?,
        a.strategies
            .split(',')
            .map(|s| PruningChoice {
                name: s.trim().to_string(),
                constraints: a.constraints,
                random_constraints: a.random_constraints,
            })
            .collect(),
        a.repetitions,
    );
    cfg.penalties = match &a.penalty_sweep {
        Some(s) => parse_penalty_sweep(s)?,
        None => vec![a.penalty.parse()?],
    };
    cfg.scale_table = a.scale_table;
    cfg.segment_len = a.segment_len;
    cfg.params = a.params.as_deref().map(parse_params).transpose()?;
    cfg.seed = a.seed;
    cfg.jobs = a.jobs;
    cfg.timing = !a.no_timing;
    let records = run_sweep(&cfg)?;
    let mut lines = vec![Record::header("bench")];
    let summaries = summarise(&records);
    let slopes = if a.slope { loglog_slopes(&records) } else { Vec::new() };
    lines.extend(records.into_iter().map(Record::Run));
    lines.extend(summaries.into_iter().map(Record::Summary));
    lines.extend(slopes.into_iter().map(Record::Slope));
    write_records(out, &lines)
}
