//! Continual release of monotone statistics with multiplicative and additive
//! error, built on the sparse vector technique.
//!
//! The released value is always a power `(1 + beta)^k`. At each step the
//! mechanism asks the sparse vector instance whether the true value has
//! passed the current power; every "above" answer raises `k` by one. Because
//! the statistic is monotone and bounded by `r`, at most
//! `c = ceil(log_{1+beta} r)` answers are "above", and the sparse vector
//! instance is sized for exactly that many.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::funcs::{static_sensitivity, FuncError, GraphFunction};
use crate::graph::{GraphError, GraphSequence};
use crate::noise::{NoiseError, RandomSource};

/// Errors raised by the monotone mechanism.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum MonotoneError {
    /// The values of the statistic are not monotone along the sequence.
    #[error("statistic is not monotone: step {step} goes from {before} to {after}")]
    NonMonotoneInput { step: usize, before: f64, after: f64 },
    /// No default range is known for the statistic.
    #[error("no default range for {0}; pass one explicitly")]
    UnknownRange(String),
    /// An invalid parameter.
    #[error("invalid parameter: {0}")]
    BadParameter(String),
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Func(#[from] FuncError),
}

/// Answer of one sparse vector query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SvtAnswer {
    /// Noisy value at or above the noisy threshold.
    Above,
    /// Noisy value below the noisy threshold.
    Below,
    /// The budget of "above" answers is spent.
    Abort,
}

/// Sparse vector instance that answers at most `c` queries with "above".
///
/// The threshold noise `Lap(rho / eps1)` is drawn once at construction and
/// kept for every query; each query draws fresh `Lap(2 c rho / eps2)` noise
/// before checking the budget. `eps1 = eps2 = epsilon / 2`.
#[derive(Debug, Clone)]
pub struct SvtState {
    rho: f64,
    c: usize,
    eps2: f64,
    zeta: f64,
    count: usize,
    queries: usize,
    rng: RandomSource,
}

impl SvtState {
    /// New instance for queries of sensitivity `rho`, privacy `epsilon` and
    /// at most `c` "above" answers.
    pub fn new(epsilon: f64, rho: f64, c: usize, mut rng: RandomSource) -> Result<Self, MonotoneError> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(MonotoneError::BadParameter(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        if c == 0 {
            return Err(MonotoneError::BadParameter("c must be at least 1".into()));
        }
        let eps1 = epsilon / 2.0;
        let zeta = rng.laplace(rho / eps1)?;
        Ok(SvtState {
            rho,
            c,
            eps2: epsilon - eps1,
            zeta,
            count: 0,
            queries: 0,
            rng,
        })
    }

    /// Compares `value` against `threshold`, both perturbed.
    pub fn query(&mut self, value: f64, threshold: f64) -> Result<SvtAnswer, MonotoneError> {
        let nu = self
            .rng
            .laplace(2.0 * self.c as f64 * self.rho / self.eps2)?;
        self.queries += 1;
        if self.count >= self.c {
            return Ok(SvtAnswer::Abort);
        }
        if value + nu >= threshold + self.zeta {
            self.count += 1;
            Ok(SvtAnswer::Above)
        } else {
            Ok(SvtAnswer::Below)
        }
    }

    /// Number of "above" answers so far.
    pub fn above_count(&self) -> usize {
        self.count
    }

    /// Budget `c` of "above" answers.
    pub fn budget(&self) -> usize {
        self.c
    }

    /// Number of queries answered, including aborted ones.
    pub fn queries(&self) -> usize {
        self.queries
    }
}

/// `ceil(log_{1+beta} r)`, the number of powers of `1 + beta` needed to pass
/// `r`, at least 1.
pub fn power_budget(beta: f64, range: f64) -> usize {
    let raw = range.ln() / (1.0 + beta).ln();
    ((raw - 1e-9).ceil().max(1.0)) as usize
}

/// Online mechanism that releases `(1 + beta)^k` for a monotone stream.
#[derive(Debug, Clone)]
pub struct MonotoneState {
    beta: f64,
    k: i32,
    svt: SvtState,
    exhausted: bool,
}

impl MonotoneState {
    /// Mechanism for values in `[1, range]` with per-value sensitivity `rho`.
    pub fn new(
        epsilon: f64,
        beta: f64,
        rho: f64,
        range: f64,
        rng: RandomSource,
    ) -> Result<Self, MonotoneError> {
        if !(beta.is_finite() && beta > 0.0) {
            return Err(MonotoneError::BadParameter(format!(
                "beta must be positive, got {beta}"
            )));
        }
        if !(range.is_finite() && range >= 1.0) {
            return Err(MonotoneError::BadParameter(format!(
                "range must be at least 1, got {range}"
            )));
        }
        let c = power_budget(beta, range);
        Ok(MonotoneState {
            beta,
            k: 0,
            svt: SvtState::new(epsilon, rho, c, rng)?,
            exhausted: false,
        })
    }

    /// Consumes the next value and returns the released power.
    pub fn process(&mut self, value: f64) -> Result<f64, MonotoneError> {
        loop {
            match self.svt.query(value, self.current())? {
                SvtAnswer::Above => self.k += 1,
                SvtAnswer::Below => break,
                SvtAnswer::Abort => {
                    self.exhausted = true;
                    break;
                }
            }
        }
        Ok(self.current())
    }

    /// Current output `(1 + beta)^k`.
    pub fn current(&self) -> f64 {
        (1.0 + self.beta).powi(self.k)
    }

    /// Number of threshold increases so far.
    pub fn increases(&self) -> usize {
        self.svt.above_count()
    }

    /// Budget of threshold increases.
    pub fn budget(&self) -> usize {
        self.svt.budget()
    }

    /// Whether the budget ran out at some step.
    pub fn exhausted(&self) -> bool {
        self.exhausted
    }
}

/// Additive error term `16 log_{1+beta}(r) rho ln(2T/delta) / epsilon` of the
/// monotone release.
pub fn additive_error(epsilon: f64, beta: f64, rho: f64, range: f64, horizon: usize, delta: f64) -> f64 {
    16.0 * (range.ln() / (1.0 + beta).ln()) * rho * (2.0 * horizon as f64 / delta).ln() / epsilon
}

/// Default range bound `r` for `f` on graphs with at most `n` nodes and
/// weights at most `w`: `n w` for cuts and matchings, `n` for densest
/// subgraph.
pub fn default_range(f: &GraphFunction, n: usize, w: u32) -> Result<f64, MonotoneError> {
    let n = n.max(1) as f64;
    match f {
        GraphFunction::MinCut | GraphFunction::StMinCut { .. } | GraphFunction::MaxWeightMatching => {
            Ok(n * f64::from(w))
        }
        GraphFunction::MaxCardinalityMatching | GraphFunction::DensestSubgraph => Ok(n),
        other => Err(MonotoneError::UnknownRange(other.to_string())),
    }
}

/// Parameters of a monotone release.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotoneConfig {
    /// Statistic to release; must be monotone along the sequence.
    pub function: GraphFunction,
    /// Privacy parameter.
    pub epsilon: f64,
    /// Multiplicative slack.
    pub beta: f64,
    /// Failure probability of the error guarantee.
    pub delta: f64,
    /// Range bound `r`; the default for the statistic when absent.
    pub range: Option<f64>,
}

/// Output for one step of a monotone release.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotoneStep {
    /// Step `t` (1-based).
    pub t: usize,
    /// Exact value.
    pub truth: f64,
    /// Released value.
    pub output: f64,
    /// `output >= truth - alpha`, or `None` when `truth < 1`.
    pub lower_ok: Option<bool>,
    /// `output <= (1 + beta) truth + alpha`, or `None` when `truth < 1`.
    pub upper_ok: Option<bool>,
}

/// Result of a monotone release.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotoneReport {
    /// Parameters used.
    pub config: MonotoneConfig,
    /// Range bound used.
    pub range: f64,
    /// Per-value sensitivity used.
    pub rho: f64,
    /// Additive error term.
    pub alpha: f64,
    /// Budget of threshold increases.
    pub budget: usize,
    /// Threshold increases performed.
    pub increases: usize,
    /// Whether the budget ran out.
    pub exhausted: bool,
    /// Whether noise was disabled.
    pub noise_off: bool,
    /// Seed of the random source.
    pub seed: u64,
    /// Whether the sequence was processed in reverse time.
    pub reversed: bool,
    /// Outputs for `t = 1..=T`.
    pub steps: Vec<MonotoneStep>,
}

impl MonotoneReport {
    /// Whether both error bounds hold at every checked step.
    pub fn all_within(&self) -> bool {
        self.steps
            .iter()
            .all(|s| s.lower_ok != Some(false) && s.upper_ok != Some(false))
    }

    /// Renders the report as CSV with header
    /// `t,true,output,lower_ok,upper_ok,alpha`. Unchecked steps show `na`.
    pub fn to_csv(&self) -> String {
        let show = |b: Option<bool>| match b {
            Some(true) => "true",
            Some(false) => "false",
            None => "na",
        };
        let mut out = String::from("t,true,output,lower_ok,upper_ok,alpha\n");
        for s in &self.steps {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                s.t,
                s.truth,
                s.output,
                show(s.lower_ok),
                show(s.upper_ok),
                self.alpha
            ));
        }
        out
    }
}

/// Runs the monotone mechanism on precomputed values, which must be
/// non-decreasing.
pub fn monotone_release_values(
    values: &[f64],
    epsilon: f64,
    beta: f64,
    rho: f64,
    range: f64,
    delta: f64,
    rng: &RandomSource,
) -> Result<(Vec<f64>, MonotoneState), MonotoneError> {
    for (i, w) in values.windows(2).enumerate() {
        if w[1] < w[0] {
            return Err(MonotoneError::NonMonotoneInput {
                step: i + 2,
                before: w[0],
                after: w[1],
            });
        }
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(MonotoneError::BadParameter(format!(
            "delta must lie in (0, 1), got {delta}"
        )));
    }
    let mut state = MonotoneState::new(epsilon, beta, rho, range, rng.child("svt"))?;
    let outputs = values
        .iter()
        .map(|&v| state.process(v))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((outputs, state))
}

/// Releases a monotone statistic along a graph sequence.
///
/// Non-decreasing value sequences are processed forward. Non-increasing ones
/// (for example a decremental sequence) are processed in reverse time and the
/// outputs reversed back.
pub fn monotone_release(
    seq: &GraphSequence,
    config: &MonotoneConfig,
    rng: &RandomSource,
) -> Result<MonotoneReport, MonotoneError> {
    let graphs = seq.materialize()?;
    let f = &config.function;
    let rho = static_sensitivity(f, seq.max_weight())?;
    let n = seq.max_node_count()?;
    let w = match f {
        GraphFunction::MaxCardinalityMatching | GraphFunction::DensestSubgraph => 1,
        _ => seq.max_weight(),
    };
    let range = match config.range {
        Some(r) => r,
        None => default_range(f, n, w)?,
    };
    let truth: Vec<f64> = graphs
        .iter()
        .map(|g| f.eval_scalar(g))
        .collect::<Result<_, _>>()?;
    let nondecreasing = truth.windows(2).all(|w| w[1] >= w[0]);
    let reversed = !nondecreasing && truth.windows(2).all(|w| w[1] <= w[0]);
    let mut ordered = truth.clone();
    if reversed {
        ordered.reverse();
    }
    let (mut outputs, state) = monotone_release_values(
        &ordered,
        config.epsilon,
        config.beta,
        rho,
        range,
        config.delta,
        rng,
    )?;
    if reversed {
        outputs.reverse();
    }
    let alpha = additive_error(config.epsilon, config.beta, rho, range, truth.len(), config.delta);
    let steps = truth
        .iter()
        .zip(&outputs)
        .enumerate()
        .map(|(i, (&x, &o))| {
            let checked = x >= 1.0;
            MonotoneStep {
                t: i + 1,
                truth: x,
                output: o,
                lower_ok: checked.then_some(o >= x - alpha),
                upper_ok: checked.then_some(o <= (1.0 + config.beta) * x + alpha),
            }
        })
        .collect();
    Ok(MonotoneReport {
        config: config.clone(),
        range,
        rho,
        alpha,
        budget: state.budget(),
        increases: state.increases(),
        exhausted: state.exhausted(),
        noise_off: rng.noise_is_off(),
        seed: rng.seed(),
        reversed,
        steps,
    })
}
