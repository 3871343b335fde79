//! Basic (unrestricted) estimators and their isotonized versions: the
//! empirical pmf projected onto antitonic vectors, and cell-mean regression
//! projected onto isotonic vectors with occupancy weights.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preorder::{grid_coords, PreOrder};
use crate::solver::{Direction, IsotonicFit, IsotonicSolver, WeightedFunction};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sample {
    /// Element indices drawn from a pmf.
    PmfDraws(Vec<usize>),
    /// `(element index, response)` pairs.
    RegressionPairs(Vec<(usize, f64)>),
}

impl Sample {
    pub fn len(&self) -> usize {
        match self {
            Sample::PmfDraws(d) => d.len(),
            Sample::RegressionPairs(p) => p.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorOutput {
    pub basic: WeightedFunction,
    pub isotonized: IsotonicFit,
    /// Cell occupancy fractions (regression only).
    pub empirical_weights: Option<Vec<f64>>,
}

fn check_index(index: usize, size: usize) -> Result<()> {
    if index >= size {
        return Err(Error::IndexOutOfRange { index, size });
    }
    Ok(())
}

/// Empirical pmf `n_i / n` and its antitonic projection with unit weights.
pub fn empirical_pmf(order: &PreOrder, sample: &Sample) -> Result<EstimatorOutput> {
    let Sample::PmfDraws(draws) = sample else {
        return Err(Error::WrongSampleKind("empirical_pmf needs pmf draws"));
    };
    if draws.is_empty() {
        return Err(Error::EmptySample);
    }
    let s = order.len();
    let mut counts = vec![0u64; s];
    for &d in draws {
        check_index(d, s)?;
        counts[d] += 1;
    }
    let basic = WeightedFunction::unit(pmf_from_counts(&counts, draws.len() as u64))?;
    let isotonized = IsotonicSolver::new(order).fit_directed(&basic, Direction::Antitonic)?;
    Ok(EstimatorOutput {
        basic,
        isotonized,
        empirical_weights: None,
    })
}

pub fn pmf_from_counts(counts: &[u64], n: u64) -> Vec<f64> {
    counts.iter().map(|&c| c as f64 / n as f64).collect()
}

/// Cell means with occupancy weights `w_x = #{i: x_i = x} / n`, and their
/// weighted isotonic projection. Every cell must be observed.
pub fn regression_means(order: &PreOrder, sample: &Sample) -> Result<EstimatorOutput> {
    let Sample::RegressionPairs(pairs) = sample else {
        return Err(Error::WrongSampleKind(
            "regression_means needs (index, response) pairs",
        ));
    };
    if pairs.is_empty() {
        return Err(Error::EmptySample);
    }
    let s = order.len();
    let mut sums = vec![0.0; s];
    let mut counts = vec![0u64; s];
    for &(i, y) in pairs {
        check_index(i, s)?;
        if !y.is_finite() {
            return Err(Error::NonFiniteValue { index: i, value: y });
        }
        sums[i] += y;
        counts[i] += 1;
    }
    let (means, weights) = cell_means(&sums, &counts, pairs.len() as u64)?;
    let basic = WeightedFunction::new(means, weights.clone())?;
    let isotonized = IsotonicSolver::new(order).fit(&basic)?;
    Ok(EstimatorOutput {
        basic,
        isotonized,
        empirical_weights: Some(weights),
    })
}

pub(crate) fn cell_means(sums: &[f64], counts: &[u64], n: u64) -> Result<(Vec<f64>, Vec<f64>)> {
    if let Some(empty) = counts.iter().position(|&c| c == 0) {
        return Err(Error::EmptyCell(empty));
    }
    let means = sums
        .iter()
        .zip(counts)
        .map(|(s, &c)| s / c as f64)
        .collect();
    let weights = counts.iter().map(|&c| c as f64 / n as f64).collect();
    Ok((means, weights))
}

/// Mixture of uniforms on nested cubes: with side `k = q.len()` and every entry
/// of `dims` equal to `k`, `p(x) = Σ_{r >= max_j x_j} q_r / r^d` (1-based
/// coordinates). For `d = 2` this is `q_1 U(1) + ... + q_k U(k)` with `U(r)`
/// uniform on `{1..r}²`. Elements are in row-major order.
pub fn mixture_uniform_pmf(dims: &[usize], q: &[f64]) -> Result<Vec<f64>> {
    let k = q.len();
    if k == 0 || dims.is_empty() || dims.iter().any(|&d| d != k) {
        return Err(Error::InvalidMixture(format!(
            "grid {dims:?} must be a cube with side equal to the number of weights ({k})"
        )));
    }
    if q.iter().any(|&x| !(x.is_finite() && x >= 0.0)) {
        return Err(Error::InvalidMixture(
            "weights must be finite and nonnegative".into(),
        ));
    }
    let total: f64 = q.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidMixture(format!(
            "weights sum to {total}, not 1"
        )));
    }
    let d = dims.len() as i32;
    // tail[r] = Σ_{r' >= r} q_{r'} / r'^d with r 1-based
    let mut tail = vec![0.0; k + 2];
    for r in (1..=k).rev() {
        tail[r] = tail[r + 1] + q[r - 1] / (r as f64).powi(d);
    }
    let size: usize = dims.iter().product();
    Ok((0..size)
        .map(|flat| {
            let m = grid_coords(flat, dims).into_iter().max().unwrap_or(0) + 1;
            tail[m]
        })
        .collect())
}

/// Inverse-CDF multinomial sampler over a flattened pmf.
///
/// If the masses sum to (numerically) one, every draw lands in a cell. If they
/// sum to less, as for a truncated pmf, the missing mass is an implicit
/// outside cell whose draws are counted separately.
#[derive(Debug, Clone)]
pub struct PmfSampler {
    cdf: Vec<f64>,
    scale: f64,
}

impl PmfSampler {
    pub fn new(p: &[f64]) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::InvalidMixture("empty pmf".into()));
        }
        let mut acc = 0.0;
        let mut cdf = Vec::with_capacity(p.len());
        for (index, &x) in p.iter().enumerate() {
            if !(x.is_finite() && x >= 0.0) {
                return Err(Error::NegativeEntry { index, value: x });
            }
            acc += x;
            cdf.push(acc);
        }
        if acc > 1.0 + 1e-9 || acc <= 0.0 {
            return Err(Error::InvalidMixture(format!(
                "pmf mass {acc} outside (0, 1]"
            )));
        }
        let scale = if acc >= 1.0 - 1e-12 { acc } else { 1.0 };
        Ok(Self { cdf, scale })
    }

    pub fn len(&self) -> usize {
        self.cdf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cdf.is_empty()
    }

    /// One draw; `None` for the outside cell.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<usize> {
        let u: f64 = rng.random::<f64>() * self.scale;
        let i = self.cdf.partition_point(|&c| c <= u);
        (i < self.cdf.len()).then_some(i)
    }

    /// Cell counts of `n` draws and the number that fell outside.
    pub fn counts<R: Rng + ?Sized>(&self, rng: &mut R, n: u64) -> (Vec<u64>, u64) {
        let mut counts = vec![0u64; self.cdf.len()];
        let mut outside = 0;
        for _ in 0..n {
            match self.draw(rng) {
                Some(i) => counts[i] += 1,
                None => outside += 1,
            }
        }
        (counts, outside)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Sample {
        Sample::PmfDraws((0..n).filter_map(|_| self.draw(rng)).collect())
    }
}
