//! Command-line interface: sequence generation, private release, evaluation,
//! sensitivity computation, self-verification and batch experiments.
//!
//! Exit codes: 0 on success, 1 on internal errors or failed verification,
//! 2 on usage and configuration errors, 3 on unsupported combinations.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adversarial::{gen_event_level, parse_sigma, AdvError, GenParams, Target};
use crate::diff::{diff_release, needs_degree, sensitivity_bound, Adjacency, ReleaseConfig, ReleaseError, Sensitivity};
use crate::funcs::{FuncError, GraphFunction};
use crate::graph::{GraphError, GraphSequence, NodeId, Regime, Weight};
use crate::monotone::{monotone_release, MonotoneConfig, MonotoneError};
use crate::noise::RandomSource;
use crate::oracle::{compare_with_table, max_sensitivity, OracleError, OracleScope, Sampling, Verdict};

/// Environment variable read when `--seed` is absent.
pub const SEED_ENV: &str = "CONTINUAL_DP_SEED";

/// Version written into every output file.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Errors surfaced by the command-line interface.
#[derive(Debug, Error)]
pub enum CliError {
    /// Invalid arguments or configuration.
    #[error("{0}")]
    Usage(String),
    /// The requested statistic cannot be handled in this setting.
    #[error("{0}")]
    Unsupported(String),
    /// A verification suite found failures.
    #[error("verification failed: {0} check(s) failed")]
    VerificationFailed(usize),
    /// Reading or writing a file failed.
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    /// Any other failure.
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    /// Process exit code for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Unsupported(_) => 3,
            CliError::VerificationFailed(_) | CliError::Io { .. } | CliError::Internal(_) => 1,
        }
    }
}

impl From<ReleaseError> for CliError {
    fn from(e: ReleaseError) -> Self {
        match e {
            ReleaseError::UnboundedSensitivity(_) | ReleaseError::UnknownCombination(_) => {
                CliError::Unsupported(e.to_string())
            }
            ReleaseError::DegreeViolation { .. }
            | ReleaseError::MissingDegree(_)
            | ReleaseError::BadParameter(_)
            | ReleaseError::Graph(_) => CliError::Usage(e.to_string()),
            ReleaseError::Func(f) => f.into(),
            ReleaseError::Count(_) => CliError::Internal(e.to_string()),
        }
    }
}

impl From<MonotoneError> for CliError {
    fn from(e: MonotoneError) -> Self {
        match e {
            MonotoneError::NonMonotoneInput { .. } => CliError::Unsupported(e.to_string()),
            MonotoneError::Func(f) => f.into(),
            MonotoneError::Noise(_) => CliError::Internal(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<FuncError> for CliError {
    fn from(e: FuncError) -> Self {
        match e {
            FuncError::SizeLimitExceeded { .. } => CliError::Unsupported(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<GraphError> for CliError {
    fn from(e: GraphError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<AdvError> for CliError {
    fn from(e: AdvError) -> Self {
        match e {
            AdvError::Unsupported(_) => CliError::Unsupported(e.to_string()),
            AdvError::Graph(g) => g.into(),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::Unsupported(_) => CliError::Unsupported(e.to_string()),
            OracleError::BudgetExceeded { .. } | OracleError::BadScope(_) => CliError::Usage(e.to_string()),
            _ => CliError::Internal(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "continual-dp", version, about = "Private continual release of graph statistics")]
struct Cli {
    /// Master seed for all randomness.
    #[arg(long, global = true, env = SEED_ENV)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a lower-bound sequence encoding a bit string.
    Generate(GenerateArgs),
    /// Release a statistic of a sequence privately.
    Release(ReleaseArgs),
    /// Evaluate a statistic exactly along a sequence.
    Eval(EvalArgs),
    /// Compute the difference-sequence sensitivity by exhaustive search.
    Sensitivity(SensitivityArgs),
    /// Run a self-verification suite.
    Verify(VerifyArgs),
    /// Run a batch experiment described by a JSON file.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum Mechanism {
    /// Difference sequence through the binary mechanism.
    #[value(name = "diff_release", alias = "diff")]
    DiffRelease,
    /// Sparse-vector based mechanism for monotone statistics.
    Monotone,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AdjacencyArg {
    Edge,
    Node,
}

impl From<AdjacencyArg> for Adjacency {
    fn from(a: AdjacencyArg) -> Self {
        match a {
            AdjacencyArg::Edge => Adjacency::Edge,
            AdjacencyArg::Node => Adjacency::Node,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RegimeArg {
    Incremental,
    Decremental,
    FullyDynamic,
}

impl From<RegimeArg> for Regime {
    fn from(r: RegimeArg) -> Self {
        match r {
            RegimeArg::Incremental => Regime::Incremental,
            RegimeArg::Decremental => Regime::Decremental,
            RegimeArg::FullyDynamic => Regime::FullyDynamic,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Suite {
    Sensitivity,
    Generators,
    Bounds,
}

/// Statistic selection shared by several subcommands.
#[derive(Debug, Clone, Args)]
struct FunctionArgs {
    /// Statistic name, for example edge_count, high_degree, mst_weight.
    #[arg(long)]
    function: String,
    /// Degree threshold of high_degree.
    #[arg(long)]
    tau: Option<usize>,
    /// Star size of kstar_count.
    #[arg(long)]
    k: Option<usize>,
    /// Source terminal of st_min_cut.
    #[arg(long)]
    source: Option<NodeId>,
    /// Sink terminal of st_min_cut.
    #[arg(long)]
    sink: Option<NodeId>,
}

impl FunctionArgs {
    fn resolve(&self) -> Result<GraphFunction, CliError> {
        let terminals = self.source.zip(self.sink);
        GraphFunction::parse(&self.function, self.tau, self.k, terminals).map_err(|e| {
            CliError::Usage(format!("{e} (high_degree needs --tau, kstar_count --k, st_min_cut --source and --sink)"))
        })
    }
}

#[derive(Debug, Args)]
struct GenerateArgs {
    /// Construction, for example mst-edge or cut-node.
    #[arg(long)]
    target: String,
    /// Bit string to encode, for example 101.
    #[arg(long)]
    sigma: String,
    /// Weight bound W.
    #[arg(long, default_value_t = 1)]
    weight: Weight,
    /// Degree bound D of the node-level counting constructions.
    #[arg(long, default_value_t = 4)]
    max_degree: usize,
    /// Degree threshold of the high-degree constructions.
    #[arg(long, default_value_t = 2)]
    tau: usize,
    /// Star size of the k-star constructions.
    #[arg(long, default_value_t = 2)]
    k: usize,
    /// Output update log; the expected values go to `<out>.expected.json`.
    /// Without it the log is written to standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ReleaseArgs {
    /// Input update log.
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    function: FunctionArgs,
    /// Release mechanism.
    #[arg(long, value_enum, default_value = "diff_release")]
    mechanism: Mechanism,
    /// Neighbouring relation.
    #[arg(long, value_enum, default_value = "edge")]
    adjacency: AdjacencyArg,
    /// Privacy parameter.
    #[arg(long, default_value_t = 1.0)]
    epsilon: f64,
    /// Failure probability of the error bound.
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    /// Multiplicative slack of the monotone mechanism.
    #[arg(long)]
    beta: Option<f64>,
    /// Range bound of the monotone mechanism.
    #[arg(long)]
    range: Option<f64>,
    /// Declared maximum degree D.
    #[arg(long)]
    max_degree: Option<usize>,
    /// Number of independent trials.
    #[arg(long, default_value_t = 1)]
    trials: usize,
    /// Output CSV; standard output when absent.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Disable all noise (testing aid).
    #[arg(long, hide = true)]
    noise_off: bool,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Input update log.
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    function: FunctionArgs,
    /// Output CSV; standard output when absent.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SensitivityArgs {
    #[command(flatten)]
    function: FunctionArgs,
    /// Neighbouring relation.
    #[arg(long, value_enum, default_value = "edge")]
    adjacency: AdjacencyArg,
    /// Regime of the explored sequences.
    #[arg(long, value_enum, default_value = "incremental")]
    regime: RegimeArg,
    /// Number of nodes.
    #[arg(long, default_value_t = 4)]
    nodes: usize,
    /// Horizon T.
    #[arg(long, default_value_t = 3)]
    horizon: usize,
    /// Weight bound W.
    #[arg(long, default_value_t = 1)]
    max_weight: Weight,
    /// Degree bound D.
    #[arg(long)]
    max_degree: Option<usize>,
    /// Cap on examined transitions.
    #[arg(long)]
    budget: Option<u64>,
    /// Fall back to this many random walks when the budget is exceeded.
    #[arg(long)]
    walks: Option<usize>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// Suite to run.
    #[arg(value_enum)]
    suite: Suite,
    /// Replace every finite tabulated bound by this constant (negative
    /// control for the sensitivity suite).
    #[arg(long, hide = true)]
    inject_gamma: Option<f64>,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    /// JSON experiment configuration.
    #[arg(long)]
    config: PathBuf,
}

/// Input of an experiment: an update log or a generator invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentInput {
    /// Path of an update log.
    Path(PathBuf),
    /// Generator target, bit string and weight bound.
    Generator {
        target: String,
        sigma: String,
        #[serde(default = "one")]
        weight: Weight,
    },
}

fn one() -> Weight {
    1
}

fn default_delta() -> f64 {
    0.05
}

fn default_trials() -> usize {
    1
}

/// Batch experiment description read by the `experiment` subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// `diff_release` or `monotone`.
    pub mechanism: String,
    /// Statistic to release.
    pub function: GraphFunction,
    /// Neighbouring relation of the difference-sequence release.
    #[serde(default)]
    pub adjacency: Option<Adjacency>,
    /// Privacy parameter.
    pub epsilon: f64,
    /// Failure probability.
    #[serde(default = "default_delta")]
    pub delta: f64,
    /// Multiplicative slack of the monotone mechanism.
    #[serde(default)]
    pub beta: Option<f64>,
    /// Range bound of the monotone mechanism.
    #[serde(default)]
    pub range: Option<f64>,
    /// Declared maximum degree.
    #[serde(default)]
    pub max_degree: Option<usize>,
    /// Master seed; the command-line seed when absent.
    #[serde(default)]
    pub seed: Option<u64>,
    /// Number of trials.
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// Sequence to release.
    pub input: ExperimentInput,
    /// Output CSV path.
    pub output: PathBuf,
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code. Normal output goes to `out`, diagnostics to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if e.use_stderr() {
                write!(err, "{e}")
            } else {
                write!(out, "{e}")
            };
            return code;
        }
    };
    match dispatch(cli, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Generate(a) => cmd_generate(&a, out),
        Command::Release(a) => cmd_release(&a, cli.seed, out, err),
        Command::Eval(a) => cmd_eval(&a, out),
        Command::Sensitivity(a) => cmd_sensitivity(&a, out),
        Command::Verify(a) => cmd_verify(&a, out),
        Command::Experiment(a) => cmd_experiment(&a, cli.seed, out, err),
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn read_sequence(path: &Path) -> Result<GraphSequence, CliError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    Ok(GraphSequence::from_log(&text)?)
}

fn emit(path: Option<&Path>, text: &str, out: &mut dyn Write) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, text).map_err(io_err(p)),
        None => out
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Internal(e.to_string())),
    }
}

fn header(seed: Option<u64>, config: &impl Serialize) -> String {
    let mut h = format!("# version={VERSION}\n");
    if let Some(s) = seed {
        h.push_str(&format!("# seed={s}\n"));
    }
    let json = serde_json::to_string(config).unwrap_or_default();
    h.push_str(&format!("# config={json}\n"));
    h
}

fn resolve_seed(seed: Option<u64>, err: &mut dyn Write) -> RandomSource {
    match seed {
        Some(s) => RandomSource::from_seed(s),
        None => {
            let src = RandomSource::from_entropy();
            let _ = writeln!(err, "seed={}", src.seed());
            src
        }
    }
}

#[derive(Serialize)]
struct GenerateRecord<'a> {
    target: &'a str,
    sigma: &'a str,
    weight: Weight,
    max_degree: usize,
    tau: usize,
    k: usize,
    function: GraphFunction,
    expected: &'a [f64],
    version: &'a str,
}

fn cmd_generate(a: &GenerateArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let target: Target = a.target.parse().map_err(|e: AdvError| CliError::Usage(e.to_string()))?;
    let sigma = parse_sigma(&a.sigma)?;
    let params = GenParams {
        weight: a.weight,
        max_degree: a.max_degree,
        tau: a.tau,
        k: a.k,
    };
    let g = gen_event_level(target, &sigma, &params)?;
    let record = GenerateRecord {
        target: target.name(),
        sigma: &a.sigma,
        weight: a.weight,
        max_degree: a.max_degree,
        tau: a.tau,
        k: a.k,
        function: g.function,
        expected: &g.expected,
        version: VERSION,
    };
    let log = format!("{}{}", header(None, &record), g.sequence.to_log());
    match &a.out {
        Some(path) => {
            fs::write(path, log).map_err(io_err(path))?;
            let sidecar = sidecar_path(path);
            let json = serde_json::to_string_pretty(&record).map_err(|e| CliError::Internal(e.to_string()))?;
            fs::write(&sidecar, json + "\n").map_err(io_err(&sidecar))?;
            let _ = writeln!(out, "wrote {} and {}", path.display(), sidecar.display());
            Ok(())
        }
        None => emit(None, &log, out),
    }
}

/// Path of the expected-value file written next to a generated log.
pub fn sidecar_path(log: &Path) -> PathBuf {
    let mut name = log.as_os_str().to_owned();
    name.push(".expected.json");
    PathBuf::from(name)
}

/// Settings of one release, shared by `release` and `experiment`.
#[derive(Debug, Clone, Serialize)]
struct RunSpec {
    mechanism: Mechanism,
    function: GraphFunction,
    adjacency: Adjacency,
    epsilon: f64,
    delta: f64,
    beta: Option<f64>,
    range: Option<f64>,
    max_degree: Option<usize>,
    trials: usize,
    noise_off: bool,
}

/// Outcome of one trial.
struct TrialResult {
    seed: u64,
    csv: String,
    max_error: f64,
    bound: f64,
    within: bool,
}

fn run_trial(seq: &GraphSequence, spec: &RunSpec, src: &RandomSource) -> Result<TrialResult, CliError> {
    match spec.mechanism {
        Mechanism::DiffRelease => {
            let cfg = ReleaseConfig {
                function: spec.function,
                adjacency: spec.adjacency,
                epsilon: spec.epsilon,
                delta: spec.delta,
                max_degree: spec.max_degree,
            };
            let r = diff_release(seq, &cfg, src)?;
            let max_error = r.max_abs_error();
            Ok(TrialResult {
                seed: src.seed(),
                csv: r.to_csv(),
                max_error,
                bound: r.bound,
                within: max_error <= r.bound,
            })
        }
        Mechanism::Monotone => {
            let beta = spec
                .beta
                .ok_or_else(|| CliError::Usage("the monotone mechanism needs --beta".into()))?;
            let cfg = MonotoneConfig {
                function: spec.function,
                epsilon: spec.epsilon,
                beta,
                delta: spec.delta,
                range: spec.range,
            };
            let r = monotone_release(seq, &cfg, src)?;
            let max_error = r
                .steps
                .iter()
                .map(|s| (s.output - s.truth).abs())
                .fold(0.0, f64::max);
            Ok(TrialResult {
                seed: src.seed(),
                csv: r.to_csv(),
                max_error,
                bound: r.alpha,
                within: r.all_within(),
            })
        }
    }
}

fn run_trials(seq: &GraphSequence, spec: &RunSpec, master: &RandomSource) -> Result<String, CliError> {
    let prepare = |src: RandomSource| if spec.noise_off { src.with_noise_off() } else { src };
    if spec.trials == 0 {
        return Err(CliError::Usage("--trials must be at least 1".into()));
    }
    if spec.trials == 1 {
        let r = run_trial(seq, spec, &prepare(master.clone()))?;
        return Ok(format!(
            "{}# summary max_abs_error={} bound={} within={}\n",
            r.csv, r.max_error, r.bound, r.within
        ));
    }
    let results: Vec<TrialResult> = (0..spec.trials)
        .into_par_iter()
        .map(|i| run_trial(seq, spec, &prepare(master.child(&format!("trial-{i}")))))
        .collect::<Result<_, _>>()?;
    let mut csv = String::from("trial,seed,max_abs_error,bound,within\n");
    for (i, r) in results.iter().enumerate() {
        csv.push_str(&format!("{i},{},{},{},{}\n", r.seed, r.max_error, r.bound, r.within));
    }
    let within = results.iter().filter(|r| r.within).count();
    let worst = results.iter().map(|r| r.max_error).fold(0.0, f64::max);
    csv.push_str(&format!(
        "# summary trials={} within={within} max_abs_error={worst} bound={}\n",
        results.len(),
        results[0].bound
    ));
    Ok(csv)
}

fn cmd_release(a: &ReleaseArgs, seed: Option<u64>, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let spec = RunSpec {
        mechanism: a.mechanism,
        function: a.function.resolve()?,
        adjacency: a.adjacency.into(),
        epsilon: a.epsilon,
        delta: a.delta,
        beta: a.beta,
        range: a.range,
        max_degree: a.max_degree,
        trials: a.trials,
        noise_off: a.noise_off,
    };
    let seq = read_sequence(&a.input)?;
    let master = resolve_seed(seed, err);
    let body = run_trials(&seq, &spec, &master)?;
    let text = format!("{}{body}", header(Some(master.seed()), &spec));
    if let Some(line) = body.lines().last() {
        let _ = writeln!(err, "{}", line.trim_start_matches("# "));
    }
    emit(a.output.as_deref(), &text, out)
}

fn cmd_eval(a: &EvalArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let f = a.function.resolve()?;
    let seq = read_sequence(&a.input)?;
    let graphs = seq.materialize()?;
    let values: Vec<_> = graphs.par_iter().map(|g| f.eval(g)).collect::<Result<_, _>>()?;
    let mut text = header(None, &f);
    if f.is_vector() {
        let width = values.iter().map(|v| v.len()).max().unwrap_or(0);
        text.push_str("t,coord,value\n");
        for (i, v) in values.iter().enumerate() {
            for (j, x) in v.coords(width).iter().enumerate() {
                text.push_str(&format!("{},{j},{x}\n", i + 1));
            }
        }
    } else {
        text.push_str("t,value\n");
        for (i, v) in values.iter().enumerate() {
            text.push_str(&format!("{},{}\n", i + 1, v.coords(1)[0]));
        }
    }
    emit(a.output.as_deref(), &text, out)
}

fn cmd_sensitivity(a: &SensitivityArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let f = a.function.resolve()?;
    let adjacency: Adjacency = a.adjacency.into();
    let mut scope = OracleScope::new(a.nodes, a.horizon, a.max_weight, a.max_degree, a.regime.into());
    if let Some(b) = a.budget {
        scope.budget = b;
    }
    scope.sampling = a.walks.map(|walks| Sampling { seed: 0, walks });
    let report = max_sensitivity(&f, adjacency, &scope)?;
    let bound = sensitivity_bound(&f, adjacency, scope.regime, a.max_degree, a.max_weight);
    let mut text = format!(
        "function={f} adjacency={adjacency} n={} T={} W={} D={:?}\nvalue={}\nexhaustive={}\ntransitions={}\n",
        a.nodes, a.horizon, a.max_weight, a.max_degree, report.value, report.exhaustive, report.transitions
    );
    match bound {
        Ok(b) => text.push_str(&format!("table={b:?}\nverdict={}\n", compare_with_table(report.value, b))),
        Err(e) => text.push_str(&format!("table=none ({e})\n")),
    }
    if let Some((big, small)) = &report.witness {
        text.push_str("# witness, larger sequence\n");
        text.push_str(&big.to_log());
        text.push_str("# witness, smaller sequence\n");
        text.push_str(&small.to_log());
    }
    emit(None, &text, out)
}

/// One line of a verification report.
struct Check {
    name: String,
    ok: bool,
    detail: String,
}

fn verify_sensitivity(inject: Option<f64>) -> Result<Vec<Check>, CliError> {
    let functions = [
        GraphFunction::EdgeCount,
        GraphFunction::HighDegree { tau: 2 },
        GraphFunction::DegreeHistogram,
        GraphFunction::TriangleCount,
        GraphFunction::KStarCount { k: 2 },
        GraphFunction::MstWeight,
    ];
    let mut cells = Vec::new();
    for adjacency in [Adjacency::Edge, Adjacency::Node] {
        for f in functions {
            let w: Weight = if f == GraphFunction::MstWeight { 2 } else { 1 };
            let d = needs_degree(&f, adjacency).then_some(2);
            cells.push((f, adjacency, w, d));
        }
    }
    cells
        .par_iter()
        .map(|&(f, adjacency, w, d)| {
            let scope = OracleScope::new(4, 3, w, d, Regime::Incremental);
            let report = max_sensitivity(&f, adjacency, &scope)?;
            let bound = sensitivity_bound(&f, adjacency, Regime::Incremental, d, w)
                .map_err(|e| CliError::Internal(e.to_string()))?;
            let bound = match (inject, bound) {
                (Some(g), Sensitivity::Finite(_)) => Sensitivity::Finite(g),
                (_, b) => b,
            };
            let verdict = compare_with_table(report.value, bound);
            Ok(Check {
                name: format!("{f} {adjacency} W={w} D={d:?}"),
                ok: verdict != Verdict::Violation,
                detail: format!("oracle {} vs table {bound:?}: {verdict}", report.value),
            })
        })
        .collect()
}

fn verify_generators() -> Result<Vec<Check>, CliError> {
    let mut jobs = Vec::new();
    for target in Target::ALL {
        for t in [1usize, 2, 3, 5, 8, 16, 32] {
            if target == Target::CutEdge && t > 8 {
                continue;
            }
            jobs.push((target, t));
        }
    }
    jobs.par_iter()
        .map(|&(target, t)| {
            let sigma: Vec<bool> = (0..t).map(|i| (i * 7 + t) % 3 != 0).collect();
            let p = GenParams {
                weight: 3,
                max_degree: 4,
                tau: 2,
                k: 3,
            };
            let g = gen_event_level(target, &sigma, &p)?;
            let graphs = g.sequence.materialize()?;
            let mismatch = graphs
                .iter()
                .zip(&g.expected)
                .enumerate()
                .find_map(|(i, (graph, want))| match g.function.eval_scalar(graph) {
                    Ok(v) if v == *want => None,
                    Ok(v) => Some(format!("t={} evaluates to {v}, expected {want}", i + 1)),
                    Err(e) => Some(e.to_string()),
                });
            Ok(Check {
                name: format!("{} T={t}", target.name()),
                ok: mismatch.is_none(),
                detail: mismatch.unwrap_or_else(|| "closed form matches".into()),
            })
        })
        .collect()
}

fn verify_bounds() -> Result<Vec<Check>, CliError> {
    let mut checks = Vec::new();
    for t in [64usize, 256] {
        let updates = (0..t)
            .map(|i| crate::graph::Update::insert_edge(i as NodeId, i as NodeId + 1, 1))
            .collect();
        let initial = crate::graph::Graph::from_parts(1, 0..=t as NodeId, [])?;
        let seq = GraphSequence::new(initial, updates);
        let cfg = ReleaseConfig {
            function: GraphFunction::EdgeCount,
            adjacency: Adjacency::Edge,
            epsilon: 1.0,
            delta: 0.05,
            max_degree: None,
        };
        let exact = diff_release(&seq, &cfg, &RandomSource::from_seed(0).with_noise_off())?;
        checks.push(Check {
            name: format!("edge_count T={t} noise off"),
            ok: exact.max_abs_error() == 0.0,
            detail: format!("max error {}", exact.max_abs_error()),
        });
        let trials = 200;
        let results: Vec<(f64, f64)> = (0..trials)
            .into_par_iter()
            .map(|i| {
                diff_release(&seq, &cfg, &RandomSource::from_seed(i)).map(|r| (r.max_abs_error(), r.bound))
            })
            .collect::<Result<_, _>>()?;
        let within = results.iter().filter(|(e, b)| e <= b).count();
        checks.push(Check {
            name: format!("edge_count T={t} error bound"),
            ok: within >= 186,
            detail: format!("{within}/{trials} trials within {:.3}", results[0].1),
        });
    }
    Ok(checks)
}

fn cmd_verify(a: &VerifyArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let checks = match a.suite {
        Suite::Sensitivity => verify_sensitivity(a.inject_gamma)?,
        Suite::Generators => verify_generators()?,
        Suite::Bounds => verify_bounds()?,
    };
    let mut text = String::new();
    for c in &checks {
        text.push_str(&format!("{} {}: {}\n", if c.ok { "PASS" } else { "FAIL" }, c.name, c.detail));
    }
    let failed = checks.iter().filter(|c| !c.ok).count();
    text.push_str(&format!("{} passed, {failed} failed\n", checks.len() - failed));
    emit(None, &text, out)?;
    if failed > 0 {
        return Err(CliError::VerificationFailed(failed));
    }
    Ok(())
}

fn cmd_experiment(a: &ExperimentArgs, seed: Option<u64>, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let text = fs::read_to_string(&a.config).map_err(io_err(&a.config))?;
    let cfg: ExperimentConfig =
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", a.config.display())))?;
    let mechanism = Mechanism::from_str(&cfg.mechanism, true)
        .map_err(|_| CliError::Usage(format!("unknown mechanism '{}'", cfg.mechanism)))?;
    let seq = match &cfg.input {
        ExperimentInput::Path(p) => read_sequence(p)?,
        ExperimentInput::Generator { target, sigma, weight } => {
            let target: Target = target.parse().map_err(|e: AdvError| CliError::Usage(e.to_string()))?;
            let params = GenParams {
                weight: *weight,
                ..GenParams::default()
            };
            gen_event_level(target, &parse_sigma(sigma)?, &params)?.sequence
        }
    };
    let spec = RunSpec {
        mechanism,
        function: cfg.function,
        adjacency: cfg.adjacency.unwrap_or(Adjacency::Edge),
        epsilon: cfg.epsilon,
        delta: cfg.delta,
        beta: cfg.beta,
        range: cfg.range,
        max_degree: cfg.max_degree,
        trials: cfg.trials,
        noise_off: false,
    };
    let master = resolve_seed(cfg.seed.or(seed), err);
    let body = run_trials(&seq, &spec, &master)?;
    let text = format!("{}{body}", header(Some(master.seed()), &cfg));
    fs::write(&cfg.output, text).map_err(io_err(&cfg.output))?;
    let _ = writeln!(out, "wrote {}", cfg.output.display());
    Ok(())
}
