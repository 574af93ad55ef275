//! Release of bounded-sensitivity statistics through their difference
//! sequence.
//!
//! For a statistic `f` and a graph sequence `G_1, ..., G_T`, the difference
//! sequence is `df(t) = f(G_t) - f(G_{t-1})` with `f(G_0)` taken as 0. Its
//! total variation across two neighbouring sequences is bounded by the
//! constant `Gamma` from [`sensitivity_bound`], so feeding `df` into a binary
//! counter whose p-sums carry `Lap(Gamma x / epsilon)` noise releases every
//! running sum, that is every `f(G_t)`, under `epsilon`-differential privacy.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::counter::{levels, max_terms, BinaryMechanism, CountError, PsumRecord, ScaleMode};
use crate::funcs::{binomial, FuncError, GraphFunction};
use crate::graph::{GraphError, GraphSequence, Regime, Weight};
use crate::noise::RandomSource;

/// Errors raised by the difference-sequence release.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReleaseError {
    /// The function and neighbouring relation have no tabulated bound.
    #[error("no sensitivity bound for {0}")]
    UnknownCombination(String),
    /// The statistic has unbounded difference-sequence sensitivity in this
    /// setting, so it cannot be released through its differences.
    #[error("difference sequence of {0} has unbounded sensitivity")]
    UnboundedSensitivity(String),
    /// The sequence contains a graph with a larger degree than declared.
    #[error("declared maximum degree {declared} but the sequence reaches {observed}")]
    DegreeViolation { declared: usize, observed: usize },
    /// A bound depends on the maximum degree and none was declared.
    #[error("{0} needs a declared maximum degree")]
    MissingDegree(String),
    /// An invalid privacy or accuracy parameter.
    #[error("invalid parameter: {0}")]
    BadParameter(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Func(#[from] FuncError),
    #[error(transparent)]
    Count(#[from] CountError),
}

/// Neighbouring relation used for event-level privacy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Adjacency {
    /// Sequences differ in one edge update.
    Edge,
    /// Sequences differ in one node update with its incident edges.
    Node,
}

impl std::str::FromStr for Adjacency {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "edge" => Ok(Adjacency::Edge),
            "node" => Ok(Adjacency::Node),
            other => Err(format!("unknown adjacency '{other}' (expected edge or node)")),
        }
    }
}

impl std::fmt::Display for Adjacency {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Adjacency::Edge => "edge",
            Adjacency::Node => "node",
        })
    }
}

/// Bound on `sum_t |df(t) - df'(t)|` over neighbouring sequences.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sensitivity {
    Finite(f64),
    Unbounded,
}

impl Sensitivity {
    /// The finite value, if any.
    pub fn finite(self) -> Option<f64> {
        match self {
            Sensitivity::Finite(x) => Some(x),
            Sensitivity::Unbounded => None,
        }
    }
}

/// Whether the tabulated bound for `f` depends on the maximum degree.
pub fn needs_degree(f: &GraphFunction, adjacency: Adjacency) -> bool {
    match adjacency {
        Adjacency::Node => !matches!(
            f,
            GraphFunction::MinCut
                | GraphFunction::StMinCut { .. }
                | GraphFunction::MaxWeightMatching
                | GraphFunction::MaxCardinalityMatching
        ),
        Adjacency::Edge => matches!(
            f,
            GraphFunction::DegreeHistogram | GraphFunction::TriangleCount | GraphFunction::KStarCount { .. }
        ),
    }
}

/// Difference-sequence sensitivity `Gamma` of `f`.
///
/// Partially dynamic (incremental or decremental) sequences, maximum degree
/// `D`, weights in `1..=W`:
///
/// | statistic    | edge                         | node                              |
/// |--------------|------------------------------|-----------------------------------|
/// | edges        | 1                            | D                                 |
/// | high degree  | 4                            | 2D + 1                            |
/// | histogram    | 8D                           | 4D^2 + 2D + 1                     |
/// | triangles    | D                            | C(D, 2)                           |
/// | k-stars      | 2(C(D, k) - C(D-1, k))       | D C(D-1, k-1) + C(D, k)           |
/// | MST weight   | 2W - 2                       | 2DW                               |
///
/// Fully dynamic sequences: edges under edge adjacency have bound 2; every
/// other statistic is unbounded. Minimum cuts and matchings are unbounded in
/// every setting. Densest subgraph has no tabulated bound.
pub fn sensitivity_bound(
    f: &GraphFunction,
    adjacency: Adjacency,
    regime: Regime,
    max_degree: Option<usize>,
    max_weight: Weight,
) -> Result<Sensitivity, ReleaseError> {
    use GraphFunction as F;
    let label = || format!("{f} under {adjacency} adjacency");
    match f {
        F::MinCut | F::StMinCut { .. } | F::MaxWeightMatching | F::MaxCardinalityMatching => {
            return Ok(Sensitivity::Unbounded)
        }
        F::DensestSubgraph => return Err(ReleaseError::UnknownCombination(label())),
        _ => {}
    }
    if regime == Regime::FullyDynamic {
        return Ok(match (f, adjacency) {
            (F::EdgeCount, Adjacency::Edge) => Sensitivity::Finite(2.0),
            _ => Sensitivity::Unbounded,
        });
    }
    let d = if needs_degree(f, adjacency) {
        max_degree.ok_or_else(|| ReleaseError::MissingDegree(label()))? as u64
    } else {
        0
    };
    let df = d as f64;
    let w = f64::from(max_weight);
    let c = |n: u64, k: u64| binomial(n, k) as f64;
    let value = match (f, adjacency) {
        (F::EdgeCount, Adjacency::Edge) => 1.0,
        (F::EdgeCount, Adjacency::Node) => df,
        (F::HighDegree { .. }, Adjacency::Edge) => 4.0,
        (F::HighDegree { .. }, Adjacency::Node) => 2.0 * df + 1.0,
        (F::DegreeHistogram, Adjacency::Edge) => 8.0 * df,
        (F::DegreeHistogram, Adjacency::Node) => 4.0 * df * df + 2.0 * df + 1.0,
        (F::TriangleCount, Adjacency::Edge) => df,
        (F::TriangleCount, Adjacency::Node) => c(d, 2),
        (F::KStarCount { k }, Adjacency::Edge) => {
            let k = *k as u64;
            2.0 * (c(d, k) - if d == 0 { 0.0 } else { c(d - 1, k) })
        }
        (F::KStarCount { k }, Adjacency::Node) => {
            let k = *k as u64;
            let lower = if d == 0 || k == 0 { 0.0 } else { c(d - 1, k - 1) };
            df * lower + c(d, k)
        }
        (F::MstWeight, Adjacency::Edge) => 2.0 * w - 2.0,
        (F::MstWeight, Adjacency::Node) => 2.0 * df * w,
        _ => return Err(ReleaseError::UnknownCombination(label())),
    };
    Ok(Sensitivity::Finite(value))
}

/// High-probability per-step error bound of the release:
/// `Gamma / epsilon * x * sqrt(y) * sqrt(8 ln(2/delta)) * sqrt(ln(2/delta))`.
pub fn theoretical_release_error(gamma: f64, epsilon: f64, delta: f64, horizon: usize) -> f64 {
    let l = (2.0 / delta).ln();
    gamma / epsilon
        * levels(horizon) as f64
        * (max_terms(horizon) as f64).sqrt()
        * (8.0 * l).sqrt()
        * l.sqrt()
}

/// Parameters of one release.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReleaseConfig {
    /// Statistic to release.
    pub function: GraphFunction,
    /// Neighbouring relation to protect.
    pub adjacency: Adjacency,
    /// Privacy parameter.
    pub epsilon: f64,
    /// Failure probability of the reported error bound.
    pub delta: f64,
    /// Declared maximum degree `D`, required when the bound depends on it.
    pub max_degree: Option<usize>,
}

/// Release output for one step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReleaseStep {
    /// Step `t` (1-based).
    pub t: usize,
    /// Exact value, one entry per coordinate.
    pub truth: Vec<f64>,
    /// Released value.
    pub released: Vec<f64>,
    /// `|released - truth|` per coordinate.
    pub abs_error: Vec<f64>,
}

/// Result of a difference-sequence release.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReleaseReport {
    /// Parameters used.
    pub config: ReleaseConfig,
    /// Sensitivity constant used to scale the noise.
    pub gamma: f64,
    /// Laplace scale of every released p-sum, `Gamma x / epsilon`.
    pub psum_scale: f64,
    /// Per-step, per-coordinate error bound.
    pub bound: f64,
    /// Whether noise was disabled.
    pub noise_off: bool,
    /// Seed of the random source.
    pub seed: u64,
    /// Outputs for `t = 1..=T`.
    pub steps: Vec<ReleaseStep>,
    /// Released p-sums of every coordinate.
    pub traces: Vec<Vec<PsumRecord>>,
}

impl ReleaseReport {
    /// Largest per-coordinate error over all steps.
    pub fn max_abs_error(&self) -> f64 {
        self.steps
            .iter()
            .flat_map(|s| s.abs_error.iter().copied())
            .fold(0.0, f64::max)
    }

    /// Renders the report as CSV. Scalar statistics use the header
    /// `t,true,released,abs_error,bound`; vector statistics add a `coord`
    /// column after `t`.
    pub fn to_csv(&self) -> String {
        let vector = self.config.function.is_vector();
        let mut out = String::from(if vector {
            "t,coord,true,released,abs_error,bound\n"
        } else {
            "t,true,released,abs_error,bound\n"
        });
        for s in &self.steps {
            for j in 0..s.truth.len() {
                if vector {
                    out.push_str(&format!("{},{j},", s.t));
                } else {
                    out.push_str(&format!("{},", s.t));
                }
                out.push_str(&format!(
                    "{},{},{},{}\n",
                    s.truth[j], s.released[j], s.abs_error[j], self.bound
                ));
            }
        }
        out
    }
}

/// Releases `f(G_1), ..., f(G_T)` privately through the difference sequence.
///
/// Fails with [`ReleaseError::UnboundedSensitivity`] for statistics whose
/// bound is infinite in the sequence's regime, and with
/// [`ReleaseError::DegreeViolation`] when a graph exceeds the declared
/// maximum degree.
pub fn diff_release(
    seq: &GraphSequence,
    config: &ReleaseConfig,
    rng: &RandomSource,
) -> Result<ReleaseReport, ReleaseError> {
    if !(config.epsilon.is_finite() && config.epsilon > 0.0) {
        return Err(ReleaseError::BadParameter(format!(
            "epsilon must be positive, got {}",
            config.epsilon
        )));
    }
    if !(config.delta > 0.0 && config.delta < 1.0) {
        return Err(ReleaseError::BadParameter(format!(
            "delta must lie in (0, 1), got {}",
            config.delta
        )));
    }
    let horizon = seq.len();
    if horizon == 0 {
        return Err(ReleaseError::BadParameter("sequence has no steps".into()));
    }
    let f = &config.function;
    let gamma = match sensitivity_bound(
        f,
        config.adjacency,
        seq.regime(),
        config.max_degree,
        seq.max_weight(),
    )? {
        Sensitivity::Finite(g) => g,
        Sensitivity::Unbounded => {
            return Err(ReleaseError::UnboundedSensitivity(format!(
                "{f} under {} adjacency",
                config.adjacency
            )))
        }
    };
    let graphs = seq.materialize()?;
    if let Some(declared) = config.max_degree {
        let observed = seq.max_degree()?;
        if observed > declared {
            return Err(ReleaseError::DegreeViolation { declared, observed });
        }
    }
    let values: Vec<_> = graphs.iter().map(|g| f.eval(g)).collect::<Result<_, _>>()?;
    let width = values.iter().map(|v| v.len()).max().unwrap_or(1).max(1);
    let truth: Vec<Vec<f64>> = values.iter().map(|v| v.coords(width)).collect();

    let mut mechs = (0..width)
        .map(|j| {
            BinaryMechanism::with_width(
                horizon,
                gamma,
                config.epsilon,
                ScaleMode::Composed,
                rng.child(&format!("coordinate-{j}")),
            )
        })
        .collect::<Result<Vec<_>, _>>()?;
    let bound = theoretical_release_error(gamma, config.epsilon, config.delta, horizon);
    let mut steps = Vec::with_capacity(horizon);
    let mut prev = vec![0.0; width];
    for (i, cur) in truth.iter().enumerate() {
        let mut released = Vec::with_capacity(width);
        for j in 0..width {
            released.push(mechs[j].feed(cur[j] - prev[j])?);
        }
        let abs_error = released.iter().zip(cur).map(|(r, x)| (r - x).abs()).collect();
        steps.push(ReleaseStep {
            t: i + 1,
            truth: cur.clone(),
            released,
            abs_error,
        });
        prev = cur.clone();
    }
    Ok(ReleaseReport {
        config: config.clone(),
        gamma,
        psum_scale: mechs[0].psum_scale(),
        bound,
        noise_off: rng.noise_is_off(),
        seed: rng.seed(),
        steps,
        traces: mechs.iter().map(|m| m.trace().to_vec()).collect(),
    })
}
