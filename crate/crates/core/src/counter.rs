//! Private running sums with the binary (dyadic p-sum) mechanism.
//!
//! For a horizon `T`, the mechanism keeps one open partial sum per dyadic
//! level `0..x` with `x = floor(log2 T) + 1`. When step `t` is a multiple of
//! `2^i`, the level-`i` sum over `[t - 2^i + 1, t]` is closed and released with
//! fresh Laplace noise. The estimate at `t` adds the released sums selected by
//! the set bits of `t`, so it combines at most `y = ceil(log2(T + 1))` noisy
//! terms, and every input item takes part in at most `x` released sums.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::noise::{concentration_bound, NoiseError, RandomSource};

/// Errors raised by the running-sum mechanism.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum CountError {
    /// An item outside the declared bounds was fed.
    #[error("item {item} outside declared bounds [{lower}, {upper}]")]
    ItemOutOfBounds { item: f64, lower: f64, upper: f64 },
    /// More than `T` items were fed.
    #[error("horizon {0} exceeded")]
    HorizonExceeded(usize),
    /// A level or step outside the tree.
    #[error("p-sum level {level} at step {step} is outside a tree of horizon {horizon}")]
    OutOfRange {
        level: usize,
        step: usize,
        horizon: usize,
    },
    /// A configuration value is invalid.
    #[error("invalid parameter: {0}")]
    BadParameter(String),
    /// Noise sampling or tail-bound failure.
    #[error(transparent)]
    Noise(#[from] NoiseError),
}

/// Number of dyadic levels `x = floor(log2 T) + 1` for horizon `T >= 1`.
pub fn levels(horizon: usize) -> usize {
    assert!(horizon >= 1, "horizon must be positive");
    (usize::BITS - horizon.leading_zeros()) as usize
}

/// Largest number of released sums combined in one estimate,
/// `y = floor(log2(T + 1))`, the most one-bits of any `t <= T`.
pub fn max_terms(horizon: usize) -> usize {
    assert!(horizon >= 1, "horizon must be positive");
    (usize::BITS - 1 - (horizon + 1).leading_zeros()) as usize
}

/// 1-based label of the level-`level` p-sum used by the estimate at `step`.
///
/// Labels enumerate level 0 first, then level 1, and so on, so the map from
/// `(level, interval)` to label is a bijection onto
/// `1..=sum_i floor(T / 2^i)`.
pub fn psum_index(level: usize, step: usize, horizon: usize) -> Result<usize, CountError> {
    let err = CountError::OutOfRange {
        level,
        step,
        horizon,
    };
    if horizon == 0 || step == 0 || step > horizon || level >= levels(horizon) {
        return Err(err);
    }
    let slot = step >> level;
    if slot == 0 {
        return Err(err);
    }
    let offset: usize = (0..level).map(|j| horizon >> j).sum();
    Ok(offset + slot)
}

/// Inverse of [`psum_index`]: the level and closed interval `[start, end]`
/// of a p-sum label.
pub fn psum_interval(index: usize, horizon: usize) -> Result<(usize, usize, usize), CountError> {
    let mut rest = index;
    for level in 0..levels(horizon) {
        let count = horizon >> level;
        if rest >= 1 && rest <= count {
            let end = rest << level;
            return Ok((level, end - (1 << level) + 1, end));
        }
        rest = rest.saturating_sub(count);
    }
    Err(CountError::OutOfRange {
        level: levels(horizon),
        step: index,
        horizon,
    })
}

/// Whether the per-p-sum scale already accounts for the `x` levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScaleMode {
    /// Scale `width * x / epsilon`: the whole stream is `epsilon`-private.
    Composed,
    /// Scale `width / epsilon` per p-sum: each p-sum alone is
    /// `epsilon`-private and the stream is `x * epsilon`-private.
    PerPsum,
}

/// One released p-sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsumRecord {
    /// Dyadic level.
    pub level: usize,
    /// First step covered.
    pub start: usize,
    /// Last step covered.
    pub end: usize,
    /// Exact sum of the covered items.
    pub clean: f64,
    /// Released value.
    pub noisy: f64,
    /// Laplace scale used.
    pub scale: f64,
}

/// Running-sum mechanism over a stream of known horizon.
#[derive(Debug, Clone)]
pub struct BinaryMechanism {
    horizon: usize,
    bounds: Option<(f64, f64)>,
    width: f64,
    epsilon: f64,
    scale: f64,
    step: usize,
    open: Vec<f64>,
    released: Vec<f64>,
    trace: Vec<PsumRecord>,
    rng: RandomSource,
}

impl BinaryMechanism {
    /// Mechanism for items in `[lower, upper]`; the noise width is
    /// `upper - lower`.
    pub fn for_bounded_items(
        horizon: usize,
        lower: f64,
        upper: f64,
        epsilon: f64,
        mode: ScaleMode,
        rng: RandomSource,
    ) -> Result<Self, CountError> {
        if !(lower.is_finite() && upper.is_finite() && lower <= upper) {
            return Err(CountError::BadParameter(format!(
                "item bounds [{lower}, {upper}] are not an interval"
            )));
        }
        let mut m = Self::with_width(horizon, upper - lower, epsilon, mode, rng)?;
        m.bounds = Some((lower, upper));
        Ok(m)
    }

    /// Mechanism whose p-sums change by at most `width` in total across a
    /// pair of neighbouring inputs. Items are not range-checked.
    pub fn with_width(
        horizon: usize,
        width: f64,
        epsilon: f64,
        mode: ScaleMode,
        rng: RandomSource,
    ) -> Result<Self, CountError> {
        if horizon == 0 {
            return Err(CountError::BadParameter("horizon must be positive".into()));
        }
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(CountError::BadParameter(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        if !(width.is_finite() && width >= 0.0) {
            return Err(CountError::BadParameter(format!(
                "width must be non-negative, got {width}"
            )));
        }
        let x = levels(horizon);
        let scale = match mode {
            ScaleMode::Composed => width * x as f64 / epsilon,
            ScaleMode::PerPsum => width / epsilon,
        };
        Ok(BinaryMechanism {
            horizon,
            bounds: None,
            width,
            epsilon,
            scale,
            step: 0,
            open: vec![0.0; x],
            released: vec![0.0; x],
            trace: Vec::new(),
            rng,
        })
    }

    /// Horizon `T`.
    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Laplace scale of every released p-sum.
    pub fn psum_scale(&self) -> f64 {
        self.scale
    }

    /// Noise width (`upper - lower` or the declared sensitivity).
    pub fn width(&self) -> f64 {
        self.width
    }

    /// Privacy parameter the mechanism was built with.
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Steps consumed so far.
    pub fn step(&self) -> usize {
        self.step
    }

    /// Whether noise is disabled on the underlying random source.
    pub fn noise_is_off(&self) -> bool {
        self.rng.noise_is_off()
    }

    /// Every p-sum released so far, in release order.
    pub fn trace(&self) -> &[PsumRecord] {
        &self.trace
    }

    /// Consumes the next item and returns the private running sum.
    pub fn feed(&mut self, item: f64) -> Result<f64, CountError> {
        if let Some((lower, upper)) = self.bounds {
            if !(item >= lower && item <= upper) {
                return Err(CountError::ItemOutOfBounds { item, lower, upper });
            }
        }
        if self.step >= self.horizon {
            return Err(CountError::HorizonExceeded(self.horizon));
        }
        self.step += 1;
        let t = self.step;
        for s in &mut self.open {
            *s += item;
        }
        for level in 0..self.open.len() {
            if !t.is_multiple_of(1usize << level) {
                break;
            }
            let clean = self.open[level];
            let noise = if self.scale > 0.0 {
                self.rng.laplace(self.scale)?
            } else {
                0.0
            };
            let noisy = clean + noise;
            self.released[level] = noisy;
            self.trace.push(PsumRecord {
                level,
                start: t - (1 << level) + 1,
                end: t,
                clean,
                noisy,
                scale: self.scale,
            });
            self.open[level] = 0.0;
        }
        Ok((0..self.open.len())
            .filter(|&i| t >> i & 1 == 1)
            .map(|i| self.released[i])
            .sum())
    }

    /// The released p-sums combined by the estimate at step `t <= step()`,
    /// from the longest interval to the shortest.
    pub fn terms_for(&self, t: usize) -> Vec<PsumRecord> {
        (0..self.open.len())
            .rev()
            .filter(|&i| t >> i & 1 == 1)
            .filter_map(|i| {
                let end = (t >> i) << i;
                self.trace
                    .iter()
                    .find(|r| r.level == i && r.end == end)
                    .copied()
            })
            .collect()
    }
}

/// High-probability bound on the error of one running-sum estimate: the tail
/// bound for `y` Laplace variables of scale `width * x / epsilon`.
pub fn theoretical_count_error(
    width: f64,
    epsilon: f64,
    delta: f64,
    horizon: usize,
) -> Result<f64, CountError> {
    if horizon == 0 {
        return Err(CountError::BadParameter("horizon must be positive".into()));
    }
    let b = width * levels(horizon) as f64 / epsilon;
    Ok(concentration_bound(&vec![b; max_terms(horizon)], delta)?)
}

/// Renders a p-sum trace as CSV with header `level,start,end,clean,noisy,scale`.
pub fn trace_csv(trace: &[PsumRecord]) -> String {
    let mut out = String::from("level,start,end,clean,noisy,scale\n");
    for r in trace {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.level, r.start, r.end, r.clean, r.noisy, r.scale
        ));
    }
    out
}

/// Parses a stream file with one integer per line. Blank lines and lines
/// starting with `#` are skipped.
pub fn parse_stream(text: &str) -> Result<Vec<i64>, String> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .map(|(i, l)| {
            l.trim()
                .parse::<i64>()
                .map_err(|e| format!("line {}: {e}", i + 1))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn silent(horizon: usize) -> BinaryMechanism {
        BinaryMechanism::for_bounded_items(
            horizon,
            0.0,
            1.0,
            1.0,
            ScaleMode::Composed,
            RandomSource::from_seed(0).with_noise_off(),
        )
        .unwrap()
    }

    #[test]
    fn level_counts() {
        assert_eq!((levels(1), max_terms(1)), (1, 1));
        assert_eq!((levels(8), max_terms(8)), (4, 3));
        assert_eq!((levels(7), max_terms(7)), (3, 3));
        assert_eq!((levels(1000), max_terms(1000)), (10, 9));
        for t in 1..=2000usize {
            let most = (1..=t).map(|s| s.count_ones() as usize).max().unwrap();
            assert_eq!(max_terms(t), most);
        }
        assert_eq!(levels(4096), 13);
        assert_eq!(levels(64), 7);
    }

    #[test]
    fn estimate_uses_set_bits() {
        let mut m = silent(8);
        for _ in 0..7 {
            m.feed(1.0).unwrap();
        }
        let spans: Vec<(usize, usize)> = m.terms_for(7).iter().map(|r| (r.start, r.end)).collect();
        assert_eq!(spans, vec![(1, 4), (5, 6), (7, 7)]);
        let spans: Vec<(usize, usize)> = m.terms_for(5).iter().map(|r| (r.start, r.end)).collect();
        assert_eq!(spans, vec![(1, 4), (5, 5)]);
    }

    #[test]
    fn horizon_and_bounds_are_enforced() {
        let mut m = silent(2);
        assert!(matches!(m.feed(2.0), Err(CountError::ItemOutOfBounds { .. })));
        m.feed(1.0).unwrap();
        m.feed(0.0).unwrap();
        assert_eq!(m.feed(1.0), Err(CountError::HorizonExceeded(2)));
    }

    #[test]
    fn psum_labels_are_a_bijection() {
        for horizon in [1usize, 5, 8, 13, 64] {
            let total: usize = (0..levels(horizon)).map(|j| horizon >> j).sum();
            let mut seen = vec![false; total + 1];
            for level in 0..levels(horizon) {
                for t in 1..=horizon {
                    if let Ok(q) = psum_index(level, t, horizon) {
                        let (l, start, end) = psum_interval(q, horizon).unwrap();
                        assert_eq!(l, level);
                        assert_eq!(end, (t >> level) << level);
                        assert_eq!(end - start + 1, 1 << level);
                        seen[q] = true;
                    }
                }
            }
            assert!(seen[1..].iter().all(|&s| s));
        }
    }

    #[test]
    fn psum_index_out_of_range() {
        assert!(psum_index(4, 8, 8).is_err());
        assert!(psum_index(0, 9, 8).is_err());
        assert!(psum_index(3, 7, 8).is_err());
        assert_eq!(psum_index(0, 1, 8).unwrap(), 1);
        assert_eq!(psum_index(1, 2, 8).unwrap(), 9);
    }

    #[test]
    fn scale_modes() {
        let r = RandomSource::from_seed(1);
        let c = BinaryMechanism::with_width(8, 2.0, 0.5, ScaleMode::Composed, r.clone()).unwrap();
        assert_eq!(c.psum_scale(), 2.0 * 4.0 / 0.5);
        let p = BinaryMechanism::with_width(8, 2.0, 0.5, ScaleMode::PerPsum, r).unwrap();
        assert_eq!(p.psum_scale(), 4.0);
    }

    #[test]
    fn stream_parsing() {
        assert_eq!(parse_stream("1\n0\n\n# c\n-2\n").unwrap(), vec![1, 0, -2]);
        assert!(parse_stream("1\nx\n").is_err());
    }
}
