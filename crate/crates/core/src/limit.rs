//! Gaussian limit laws of isotonized estimators and their Monte Carlo check.
//!
//! The finite-sample law of `B_n (ĝ*_n - g0)` is simulated directly, the limit
//! law as `φ(λ)` with `λ ~ N(0, C)`, and the two are compared through
//! per-coordinate marginals and the l1/l2 norms with two-sample
//! Kolmogorov–Smirnov distances.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{cell_means, pmf_from_counts, PmfSampler};
use crate::level::{level_partition, LevelPartition, PhiOperator};
use crate::par::{map_indices, Execution};
use crate::preorder::PreOrder;
use crate::rng::{replicate_rng, StreamPurpose};
use crate::solver::{Direction, IsotonicSolver};
use crate::stats::ks_two_sample;

/// Replicate count, master seed and execution mode of a Monte Carlo run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct McPlan {
    pub replicates: usize,
    pub seed: u64,
    #[serde(default)]
    pub execution: Execution,
}

impl McPlan {
    pub fn new(replicates: usize, seed: u64) -> Self {
        Self {
            replicates,
            seed,
            execution: Execution::default(),
        }
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Covariance {
    /// Cell-mean regression: `Σ_ii = σ² / w_i`.
    RegressionDiagonal {
        sigma2: f64,
        weights: Vec<f64>,
    },
    /// Empirical pmf: `C_ij = p_i δ_ij - p_i p_j`.
    Multinomial {
        p: Vec<f64>,
    },
    Dense {
        matrix: Vec<Vec<f64>>,
    },
}

impl Covariance {
    pub fn dim(&self) -> usize {
        match self {
            Covariance::RegressionDiagonal { weights, .. } => weights.len(),
            Covariance::Multinomial { p } => p.len(),
            Covariance::Dense { matrix } => matrix.len(),
        }
    }

    pub fn matrix(&self) -> Vec<Vec<f64>> {
        let s = self.dim();
        match self {
            Covariance::RegressionDiagonal { sigma2, weights } => (0..s)
                .map(|i| {
                    let mut row = vec![0.0; s];
                    row[i] = sigma2 / weights[i];
                    row
                })
                .collect(),
            Covariance::Multinomial { p } => (0..s)
                .map(|i| {
                    (0..s)
                        .map(|j| {
                            if i == j {
                                p[i] - p[i] * p[j]
                            } else {
                                -p[i] * p[j]
                            }
                        })
                        .collect()
                })
                .collect(),
            Covariance::Dense { matrix } => matrix.clone(),
        }
    }
}

/// The Gaussian limit of the basic estimator and the per-coordinate rate
/// exponents of the scaling `B_n = diag(n^{q_i})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitSpec {
    pub covariance: Covariance,
    pub rates: Vec<f64>,
}

impl LimitSpec {
    /// Rates default to `1/2` everywhere.
    pub fn new(covariance: Covariance) -> Self {
        let rates = vec![0.5; covariance.dim()];
        Self { covariance, rates }
    }

    pub fn with_rates(mut self, rates: Vec<f64>) -> Self {
        self.rates = rates;
        self
    }

    /// Rates must be constant on every block of the level partition.
    pub fn check_rates(&self, lp: &LevelPartition) -> Result<()> {
        if self.rates.len() != self.covariance.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.covariance.dim(),
                actual: self.rates.len(),
            });
        }
        for (set, members) in lp.blocks().enumerate() {
            let r0 = self.rates[members[0]];
            if members.iter().any(|&m| self.rates[m] != r0) {
                return Err(Error::RatesNotConstant { set });
            }
        }
        Ok(())
    }

    /// `B_n θ`.
    pub fn scale(&self, theta: &[f64], n: u64) -> Vec<f64> {
        theta
            .iter()
            .zip(&self.rates)
            .map(|(t, q)| t * (n as f64).powf(*q))
            .collect()
    }
}

/// `N(0, C)` sampler built from a pivoted, rank-revealing Cholesky factor.
/// Pivots below `1e-12 · max(1, max C_ii)` end the factorization, so singular
/// covariances (the multinomial one has rank `s - 1`) are sampled from
/// `rank` independent normals.
#[derive(Debug, Clone)]
pub struct GaussianSampler {
    dim: usize,
    /// Columns of the factor `L` with `L Lᵀ = C`.
    columns: Vec<Vec<f64>>,
}

impl GaussianSampler {
    pub fn new(cov: &[Vec<f64>]) -> Result<Self> {
        let n = cov.len();
        if let Some(bad) = cov.iter().find(|r| r.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: bad.len(),
            });
        }
        for (i, row) in cov.iter().enumerate() {
            for (j, &c) in row.iter().enumerate().take(i) {
                if (c - cov[j][i]).abs() > 1e-12 * 1f64.max(c.abs()) {
                    return Err(Error::InvalidConfig(format!(
                        "covariance not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        let max_diag = (0..n).fold(1f64, |m, i| m.max(cov[i][i].abs()));
        let floor = 1e-12 * max_diag;
        let mut resid: Vec<Vec<f64>> = cov.to_vec();
        let mut used = vec![false; n];
        let mut columns = Vec::new();
        loop {
            let pivot = (0..n)
                .filter(|&i| !used[i])
                .max_by(|&a, &b| resid[a][a].total_cmp(&resid[b][b]));
            let Some(k) = pivot else { break };
            let d = resid[k][k];
            if d <= floor {
                break;
            }
            let root = d.sqrt();
            let col: Vec<f64> = (0..n)
                .map(|i| if used[i] { 0.0 } else { resid[i][k] / root })
                .collect();
            for i in 0..n {
                for j in 0..n {
                    resid[i][j] -= col[i] * col[j];
                }
            }
            used[k] = true;
            columns.push(col);
        }
        if let Some(i) = (0..n).find(|&i| resid[i][i] < -floor * 1e3) {
            return Err(Error::NotPositiveSemidefinite {
                pivot: i,
                value: resid[i][i],
            });
        }
        Ok(Self { dim: n, columns })
    }

    pub fn rank(&self) -> usize {
        self.columns.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for col in &self.columns {
            let z: f64 = rng.sample(StandardNormal);
            for (o, c) in out.iter_mut().zip(col) {
                *o += z * c;
            }
        }
        out
    }
}

/// Draws of the limit law `φ^w(λ)`, one row per replicate. With
/// `Direction::Antitonic` the blocks are projected onto antitonic vectors,
/// which is the limit for a decreasing pmf.
pub fn sample_limit(
    spec: &LimitSpec,
    order: &PreOrder,
    lp: &LevelPartition,
    weights: &[f64],
    direction: Direction,
    plan: &McPlan,
) -> Result<Vec<Vec<f64>>> {
    let s = order.len();
    if spec.covariance.dim() != s {
        return Err(Error::DimensionMismatch {
            expected: s,
            actual: spec.covariance.dim(),
        });
    }
    let sampler = GaussianSampler::new(&spec.covariance.matrix())?;
    let phi = PhiOperator::new(order, lp);
    // validates weights once
    phi.apply(&vec![0.0; s], weights, direction)?;
    Ok(map_indices(plan.execution, plan.replicates, |r| {
        let mut rng = replicate_rng(plan.seed, StreamPurpose::LimitLaw, r);
        let lambda = sampler.draw(&mut rng);
        phi.apply_unchecked(&lambda, weights, direction)
    }))
}

/// Data-generating scenario for the finite-sample law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Scenario {
    /// `n` i.i.d. draws from the pmf `p`; the estimator is the antitonic
    /// projection of the empirical pmf.
    Pmf { p: Vec<f64> },
    /// Fixed design with cell fractions `design` (allocated to integer counts
    /// by largest remainder), responses `g0(x) + σ ε`, `ε ~ N(0, 1)`; the
    /// estimator is the weighted isotonic projection of the cell means.
    Regression {
        g0: Vec<f64>,
        sigma: f64,
        design: Vec<f64>,
    },
}

impl Scenario {
    pub fn truth(&self) -> &[f64] {
        match self {
            Scenario::Pmf { p } => p,
            Scenario::Regression { g0, .. } => g0,
        }
    }

    pub fn direction(&self) -> Direction {
        match self {
            Scenario::Pmf { .. } => Direction::Antitonic,
            Scenario::Regression { .. } => Direction::Isotonic,
        }
    }

    /// Level partition of the truth (through negation for a decreasing pmf;
    /// the sets are the same).
    pub fn level_partition(&self, order: &PreOrder) -> Result<LevelPartition> {
        match self {
            Scenario::Pmf { p } => {
                let neg: Vec<f64> = p.iter().map(|x| -x).collect();
                let mut lp = level_partition(order, &neg)?;
                for s in &mut lp.sets {
                    s.value = -s.value;
                }
                Ok(lp)
            }
            Scenario::Regression { g0, .. } => level_partition(order, g0),
        }
    }

    /// Weights of the limiting projection.
    pub fn limit_weights(&self) -> Vec<f64> {
        match self {
            Scenario::Pmf { p } => vec![1.0; p.len()],
            Scenario::Regression { design, .. } => design.clone(),
        }
    }

    pub fn limit_spec(&self) -> LimitSpec {
        match self {
            Scenario::Pmf { p } => LimitSpec::new(Covariance::Multinomial { p: p.clone() }),
            Scenario::Regression { sigma, design, .. } => {
                LimitSpec::new(Covariance::RegressionDiagonal {
                    sigma2: sigma * sigma,
                    weights: design.clone(),
                })
            }
        }
    }

    fn validate(&self, size: usize) -> Result<()> {
        let check = |len: usize| {
            if len != size {
                Err(Error::DimensionMismatch {
                    expected: size,
                    actual: len,
                })
            } else {
                Ok(())
            }
        };
        match self {
            Scenario::Pmf { p } => check(p.len()),
            Scenario::Regression { g0, sigma, design } => {
                check(g0.len())?;
                check(design.len())?;
                if !(sigma.is_finite() && *sigma >= 0.0) {
                    return Err(Error::InvalidConfig(format!(
                        "sigma must be nonnegative, got {sigma}"
                    )));
                }
                if design.iter().any(|&w| !(w.is_finite() && w > 0.0)) {
                    return Err(Error::InvalidConfig(
                        "design fractions must be positive".into(),
                    ));
                }
                Ok(())
            }
        }
    }
}

/// Integer cell counts summing to `n`, proportional to `design`
/// (largest-remainder rounding, ties to the lower index).
pub fn allocate_design(design: &[f64], n: u64) -> Vec<u64> {
    let total: f64 = design.iter().sum();
    let exact: Vec<f64> = design.iter().map(|w| w / total * n as f64).collect();
    let mut counts: Vec<u64> = exact.iter().map(|x| x.floor() as u64).collect();
    let mut left = n - counts.iter().sum::<u64>();
    let mut order: Vec<usize> = (0..design.len()).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (exact[a] - exact[a].floor(), exact[b] - exact[b].floor());
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().cycle() {
        if left == 0 {
            break;
        }
        counts[i] += 1;
        left -= 1;
    }
    counts
}

/// Replicates of the finite-sample law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteSampleDraws {
    /// `B_n (ĝ_n - g0)`.
    pub raw: Vec<Vec<f64>>,
    /// `B_n (ĝ*_n - g0)`.
    pub isotonized: Vec<Vec<f64>>,
    /// Whether `ĝ*_n` equalled the blockwise concatenation `φ(ĝ_n)` (to 1e-12).
    pub localized: Vec<bool>,
}

/// Simulates `plan.replicates` data sets of size `n`, fits the isotonized
/// estimator on each and returns the scaled deviations from the truth.
pub fn finite_sample_law(
    scenario: &Scenario,
    order: &PreOrder,
    lp: &LevelPartition,
    spec: &LimitSpec,
    n: u64,
    plan: &McPlan,
) -> Result<FiniteSampleDraws> {
    let s = order.len();
    scenario.validate(s)?;
    spec.check_rates(lp)?;
    if n == 0 {
        return Err(Error::EmptySample);
    }
    let solver = IsotonicSolver::new(order);
    let phi = PhiOperator::new(order, lp);
    let truth = scenario.truth();
    let direction = scenario.direction();

    enum Gen {
        Pmf(PmfSampler),
        Reg { counts: Vec<u64>, sigma: f64 },
    }
    let generator = match scenario {
        Scenario::Pmf { p } => Gen::Pmf(PmfSampler::new(p)?),
        Scenario::Regression { sigma, design, .. } => {
            let counts = allocate_design(design, n);
            if let Some(empty) = counts.iter().position(|&c| c == 0) {
                return Err(Error::EmptyCell(empty));
            }
            Gen::Reg {
                counts,
                sigma: *sigma,
            }
        }
    };

    let rows = map_indices(plan.execution, plan.replicates, |r| {
        let mut rng = replicate_rng(plan.seed, StreamPurpose::FiniteSample, r);
        let (basic, weights) = match &generator {
            Gen::Pmf(sampler) => {
                let (counts, _) = sampler.counts(&mut rng, n);
                (pmf_from_counts(&counts, n), vec![1.0; s])
            }
            Gen::Reg { counts, sigma } => {
                let sums: Vec<f64> = counts
                    .iter()
                    .zip(truth)
                    .map(|(&c, &g)| {
                        (0..c)
                            .map(|_| g + sigma * rng.sample::<f64, _>(StandardNormal))
                            .sum()
                    })
                    .collect();
                cell_means(&sums, counts, n).expect("cells are nonempty")
            }
        };
        let signed: Vec<f64> = match direction {
            Direction::Isotonic => basic.clone(),
            Direction::Antitonic => basic.iter().map(|v| -v).collect(),
        };
        let (fit, _) = solver.fit_values(&signed, &weights);
        let fit: Vec<f64> = match direction {
            Direction::Isotonic => fit,
            Direction::Antitonic => fit.into_iter().map(|v| -v).collect(),
        };
        let concat = phi.apply_unchecked(&basic, &weights, direction);
        let localized = fit
            .iter()
            .zip(&concat)
            .all(|(a, b)| (a - b).abs() <= 1e-12 * 1f64.max(a.abs()));
        let dev = |v: &[f64]| -> Vec<f64> {
            let d: Vec<f64> = v.iter().zip(truth).map(|(a, b)| a - b).collect();
            spec.scale(&d, n)
        };
        (dev(&basic), dev(&fit), localized)
    });

    let mut out = FiniteSampleDraws {
        raw: Vec::with_capacity(rows.len()),
        isotonized: Vec::with_capacity(rows.len()),
        localized: Vec::with_capacity(rows.len()),
    };
    for (raw, iso, loc) in rows {
        out.raw.push(raw);
        out.isotonized.push(iso);
        out.localized.push(loc);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionalSamples {
    pub name: String,
    pub finite: Vec<f64>,
    pub limit: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KsEntry {
    pub functional: String,
    pub statistic: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MCReport {
    pub functional_samples: Vec<FunctionalSamples>,
    pub ks_distances: Vec<KsEntry>,
    pub n_used: u64,
    pub replicates: usize,
    pub seed: u64,
    /// Fraction of replicates in which the isotonized estimator equalled the
    /// blockwise concatenation of the basic one.
    pub localization_frequency: f64,
}

impl MCReport {
    pub fn max_ks(&self) -> f64 {
        self.ks_distances
            .iter()
            .fold(0.0f64, |m, e| m.max(e.statistic))
    }

    pub fn ks(&self, functional: &str) -> Option<f64> {
        self.ks_distances
            .iter()
            .find(|e| e.functional == functional)
            .map(|e| e.statistic)
    }
}

/// Per-coordinate marginals plus the l1 and l2 norms of each row.
pub fn functionals(finite: &[Vec<f64>], limit: &[Vec<f64>]) -> Vec<FunctionalSamples> {
    let dim = finite.first().map_or(0, Vec::len);
    let mut out: Vec<FunctionalSamples> = (0..dim)
        .map(|i| FunctionalSamples {
            name: format!("coord[{i}]"),
            finite: finite.iter().map(|r| r[i]).collect(),
            limit: limit.iter().map(|r| r[i]).collect(),
        })
        .collect();
    let l1 = |r: &Vec<f64>| r.iter().map(|x| x.abs()).sum::<f64>();
    let l2 = |r: &Vec<f64>| r.iter().map(|x| x * x).sum::<f64>().sqrt();
    out.push(FunctionalSamples {
        name: "l1".into(),
        finite: finite.iter().map(l1).collect(),
        limit: limit.iter().map(l1).collect(),
    });
    out.push(FunctionalSamples {
        name: "l2".into(),
        finite: finite.iter().map(l2).collect(),
        limit: limit.iter().map(l2).collect(),
    });
    out
}

/// Everything produced by one limit-law check.
#[derive(Debug, Clone)]
pub struct LimitCheck {
    pub level_partition: LevelPartition,
    pub finite: FiniteSampleDraws,
    pub limit: Vec<Vec<f64>>,
    pub report: MCReport,
}

/// Simulates the finite-sample law at size `n` and the limit law with the
/// same replicate count, and compares them functional by functional.
pub fn limit_check(
    scenario: &Scenario,
    order: &PreOrder,
    n: u64,
    plan: &McPlan,
) -> Result<LimitCheck> {
    let lp = scenario.level_partition(order)?;
    let spec = scenario.limit_spec();
    let finite = finite_sample_law(scenario, order, &lp, &spec, n, plan)?;
    let limit = sample_limit(
        &spec,
        order,
        &lp,
        &scenario.limit_weights(),
        scenario.direction(),
        plan,
    )?;
    let functional_samples = functionals(&finite.isotonized, &limit);
    let ks_distances = functional_samples
        .iter()
        .map(|f| KsEntry {
            functional: f.name.clone(),
            statistic: ks_two_sample(&f.finite, &f.limit),
        })
        .collect();
    let localization_frequency = finite.localized.iter().filter(|&&b| b).count() as f64
        / finite.localized.len().max(1) as f64;
    let report = MCReport {
        functional_samples,
        ks_distances,
        n_used: n,
        replicates: plan.replicates,
        seed: plan.seed,
        localization_frequency,
    };
    Ok(LimitCheck {
        level_partition: lp,
        finite,
        limit,
        report,
    })
}

/// A pmf on the infinite grid `{1, 2, ...}^d` cut down to a finite cube.
#[derive(Debug, Clone)]
pub struct Truncation {
    pub dims: Vec<usize>,
    pub order: PreOrder,
    /// Masses on the retained cube, row-major, not renormalized.
    pub masses: Vec<f64>,
    pub retained: f64,
    /// Mass outside the cube; it plays the role of the zero level set.
    pub tail_mass: f64,
}

/// Smallest cube `{1..K}^dim` holding at least `1 - mass_tol` of the mass
/// given by `recipe` (1-based coordinates; total mass assumed to be one).
pub fn truncate_infinite_pmf<F>(
    dim: usize,
    recipe: F,
    mass_tol: f64,
    max_side: usize,
) -> Result<Truncation>
where
    F: Fn(&[usize]) -> f64,
{
    if dim == 0 || !(mass_tol > 0.0 && mass_tol < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "need dim >= 1 and 0 < mass_tol < 1, got dim {dim}, mass_tol {mass_tol}"
        )));
    }
    let mut retained = 0.0;
    for side in 1..=max_side {
        // add the shell of cells whose largest coordinate equals `side`
        let dims = vec![side; dim];
        let size: usize = dims.iter().product();
        for flat in 0..size {
            let coords = crate::preorder::grid_coords(flat, &dims);
            if coords.iter().any(|&c| c + 1 == side) {
                let x: Vec<usize> = coords.iter().map(|c| c + 1).collect();
                retained += recipe(&x);
            }
        }
        if retained >= 1.0 - mass_tol {
            let masses: Vec<f64> = (0..size)
                .map(|flat| {
                    let x: Vec<usize> = crate::preorder::grid_coords(flat, &dims)
                        .iter()
                        .map(|c| c + 1)
                        .collect();
                    recipe(&x)
                })
                .collect();
            if let Some((index, &value)) = masses
                .iter()
                .enumerate()
                .find(|(_, m)| m.is_nan() || **m < 0.0)
            {
                return Err(Error::NegativeEntry { index, value });
            }
            return Ok(Truncation {
                order: PreOrder::grid(&dims)?,
                dims,
                masses,
                retained,
                tail_mass: (1.0 - retained).max(0.0),
            });
        }
    }
    Err(Error::NotSummable {
        retained,
        max_side,
        mass_tol,
    })
}
