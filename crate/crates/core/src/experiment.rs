//! Reproducible experiment runs: the mixture-of-uniforms comparison of the
//! empirical and isotonized pmf estimators, and packaged limit-law checks.
//!
//! A run is fully described by an [`ExperimentConfig`] (JSON) and writes
//! plain CSV/JSON files; identical configs give byte-identical outputs.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{mixture_uniform_pmf, pmf_from_counts, PmfSampler};
use crate::limit::{limit_check, MCReport, McPlan, Scenario};
use crate::par::{map_indices, Execution};
use crate::preorder::PreOrder;
use crate::rng::{replicate_rng, StreamPurpose};
use crate::solver::{Direction, IsotonicSolver, WeightedFunction};
use crate::stats::{five_number, FiveNumber};

pub const DEFAULT_Q: [f64; 5] = [0.1, 0.2, 0.3, 0.2, 0.2];

/// Recorded in every summary so downstream plots are self-describing.
pub const HELLINGER_CONVENTION: &str =
    "H(p,q) = (sum_i (sqrt(p_i) - sqrt(q_i))^2)^(1/2), no 1/sqrt(2) factor";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Figure1,
    LimitCheckPmf,
    LimitCheckReg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub scenario: ExperimentKind,
    #[serde(default = "default_dims")]
    pub dims: Vec<usize>,
    /// Mixture weights; defaults to (0.1, 0.2, 0.3, 0.2, 0.2).
    #[serde(default)]
    pub q: Option<Vec<f64>>,
    /// Reference function: the pmf (limit-check-pmf) or regression function
    /// (limit-check-reg), row-major over the grid.
    #[serde(default)]
    pub g0: Option<Vec<f64>>,
    #[serde(default)]
    pub sigma: Option<f64>,
    pub n: Vec<u64>,
    pub replicates: usize,
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub execution: Option<Execution>,
}

fn default_dims() -> Vec<usize> {
    vec![5, 5]
}

impl ExperimentConfig {
    pub fn figure1(seed: u64) -> Self {
        Self {
            name: "figure1".into(),
            scenario: ExperimentKind::Figure1,
            dims: default_dims(),
            q: None,
            g0: None,
            sigma: None,
            n: vec![50, 300],
            replicates: 1000,
            seed,
            output_dir: None,
            execution: None,
        }
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::InvalidConfig("replicates must be >= 1".into()));
        }
        if self.n.is_empty() || self.n.contains(&0) {
            return Err(Error::InvalidConfig("n values must be >= 1".into()));
        }
        if self.scenario != ExperimentKind::Figure1 && self.n.len() != 1 {
            return Err(Error::InvalidConfig(
                "limit checks take exactly one n".into(),
            ));
        }
        Ok(())
    }

    fn plan(&self) -> McPlan {
        McPlan::new(self.replicates, self.seed).with_execution(self.execution.unwrap_or_default())
    }

    fn mixture(&self) -> Result<Vec<f64>> {
        let q = self.q.clone().unwrap_or_else(|| DEFAULT_Q.to_vec());
        mixture_uniform_pmf(&self.dims, &q)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Distances {
    pub l1: f64,
    pub l2: f64,
    pub hellinger: f64,
}

/// l1, l2 and (unsquared) Hellinger distance between `p_hat` and `p_true`.
pub fn distances(p_hat: &[f64], p_true: &[f64]) -> Result<Distances> {
    if p_hat.len() != p_true.len() {
        return Err(Error::DimensionMismatch {
            expected: p_true.len(),
            actual: p_hat.len(),
        });
    }
    for v in [p_hat, p_true] {
        if let Some((index, &value)) = v.iter().enumerate().find(|(_, x)| x.is_nan() || **x < 0.0) {
            return Err(Error::NegativeEntry { index, value });
        }
    }
    let (mut l1, mut l2, mut h) = (0.0, 0.0, 0.0);
    for (a, b) in p_hat.iter().zip(p_true) {
        let d = a - b;
        l1 += d.abs();
        l2 += d * d;
        let r = a.sqrt() - b.sqrt();
        h += r * r;
    }
    Ok(Distances {
        l1,
        l2: l2.sqrt(),
        hellinger: h.sqrt(),
    })
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricSamples {
    pub l1: Vec<f64>,
    pub l2: Vec<f64>,
    pub hellinger: Vec<f64>,
}

impl MetricSamples {
    fn push(&mut self, d: Distances) {
        self.l1.push(d.l1);
        self.l2.push(d.l2);
        self.hellinger.push(d.hellinger);
    }

    pub fn quartiles(&self) -> MetricQuartiles {
        MetricQuartiles {
            l1: five_number(&self.l1),
            l2: five_number(&self.l2),
            hellinger: five_number(&self.hellinger),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricQuartiles {
    pub l1: FiveNumber,
    pub l2: FiveNumber,
    pub hellinger: FiveNumber,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceSummary {
    pub n: u64,
    pub empirical: MetricSamples,
    pub isotonized: MetricSamples,
}

impl DistanceSummary {
    pub fn quartiles(&self) -> (MetricQuartiles, MetricQuartiles) {
        (self.empirical.quartiles(), self.isotonized.quartiles())
    }
}

/// For each `n`, draws `replicates` multinomial samples from the mixture pmf
/// and records the distances of the empirical and isotonized estimators to
/// the truth.
pub fn run_figure1(cfg: &ExperimentConfig) -> Result<Vec<DistanceSummary>> {
    cfg.validate()?;
    if cfg.scenario != ExperimentKind::Figure1 {
        return Err(Error::InvalidConfig(
            "run_figure1 needs scenario figure1".into(),
        ));
    }
    let p = cfg.mixture()?;
    let order = PreOrder::grid(&cfg.dims)?;
    let solver = IsotonicSolver::new(&order);
    let sampler = PmfSampler::new(&p)?;
    let plan = cfg.plan();

    cfg.n
        .iter()
        .enumerate()
        .map(|(k, &n)| {
            let rows = map_indices(
                plan.execution,
                plan.replicates,
                |r| -> Result<(Distances, Distances)> {
                    let stream = k * plan.replicates + r;
                    let mut rng = replicate_rng(plan.seed, StreamPurpose::Experiment, stream);
                    let (counts, _) = sampler.counts(&mut rng, n);
                    let basic = WeightedFunction::unit(pmf_from_counts(&counts, n))?;
                    let iso = solver.fit_directed(&basic, Direction::Antitonic)?;
                    Ok((distances(&basic.values, &p)?, distances(&iso.fitted, &p)?))
                },
            );
            let mut summary = DistanceSummary {
                n,
                empirical: MetricSamples::default(),
                isotonized: MetricSamples::default(),
            };
            for row in rows {
                let (e, i) = row?;
                summary.empirical.push(e);
                summary.isotonized.push(i);
            }
            Ok(summary)
        })
        .collect()
}

/// Runs a packaged limit-law check.
pub fn run_limit_check(cfg: &ExperimentConfig) -> Result<crate::limit::LimitCheck> {
    cfg.validate()?;
    let order = PreOrder::grid(&cfg.dims)?;
    let scenario = match cfg.scenario {
        ExperimentKind::LimitCheckPmf => Scenario::Pmf {
            p: match &cfg.g0 {
                Some(p) => p.clone(),
                None => cfg.mixture()?,
            },
        },
        ExperimentKind::LimitCheckReg => {
            let g0 = cfg
                .g0
                .clone()
                .ok_or_else(|| Error::InvalidConfig("limit-check-reg needs g0".into()))?;
            let s = g0.len();
            Scenario::Regression {
                g0,
                sigma: cfg.sigma.unwrap_or(1.0),
                design: vec![1.0 / s as f64; s],
            }
        }
        ExperimentKind::Figure1 => {
            return Err(Error::InvalidConfig(
                "run_limit_check needs a limit-check scenario".into(),
            ))
        }
    };
    limit_check(&scenario, &order, cfg.n[0], &cfg.plan())
}

fn write_rows(out: &mut String, rows: &[Vec<f64>]) {
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
}

/// CSV of the per-replicate distances for one sample size.
pub fn distances_csv(summary: &DistanceSummary) -> String {
    let mut out = String::from(
        "replicate,empirical_l1,empirical_l2,empirical_hellinger,isotonized_l1,isotonized_l2,isotonized_hellinger\n",
    );
    let (e, i) = (&summary.empirical, &summary.isotonized);
    for r in 0..e.l1.len() {
        let _ = writeln!(
            out,
            "{r},{},{},{},{},{},{}",
            e.l1[r], e.l2[r], e.hellinger[r], i.l1[r], i.l2[r], i.hellinger[r]
        );
    }
    out
}

/// Matrix of draws as CSV with a `coord[i]` header.
pub fn draws_csv(rows: &[Vec<f64>]) -> String {
    let dim = rows.first().map_or(0, Vec::len);
    let header: Vec<String> = (0..dim).map(|i| format!("coord[{i}]")).collect();
    let mut out = header.join(",");
    out.push('\n');
    write_rows(&mut out, rows);
    out
}

#[derive(Debug, Clone, Serialize)]
struct Figure1Summary<'a> {
    config: &'a ExperimentConfig,
    hellinger_convention: &'static str,
    results: Vec<Figure1Entry>,
}

#[derive(Debug, Clone, Serialize)]
struct Figure1Entry {
    n: u64,
    empirical: MetricQuartiles,
    isotonized: MetricQuartiles,
}

/// Files written by [`run_experiment`].
#[derive(Debug, Clone)]
pub enum ExperimentOutcome {
    Figure1(Vec<DistanceSummary>),
    LimitCheck(MCReport),
}

/// Runs `cfg` and writes its outputs into `out_dir`:
/// `distances_n{N}.csv` and `summary.json` for figure1; `mcreport.json`,
/// `finite_draws.csv` and `limit_draws.csv` for limit checks.
pub fn run_experiment(cfg: &ExperimentConfig, out_dir: &Path) -> Result<ExperimentOutcome> {
    fs::create_dir_all(out_dir)?;
    match cfg.scenario {
        ExperimentKind::Figure1 => {
            let summaries = run_figure1(cfg)?;
            for s in &summaries {
                fs::write(
                    out_dir.join(format!("distances_n{}.csv", s.n)),
                    distances_csv(s),
                )?;
            }
            let summary = Figure1Summary {
                config: cfg,
                hellinger_convention: HELLINGER_CONVENTION,
                results: summaries
                    .iter()
                    .map(|s| {
                        let (empirical, isotonized) = s.quartiles();
                        Figure1Entry {
                            n: s.n,
                            empirical,
                            isotonized,
                        }
                    })
                    .collect(),
            };
            fs::write(
                out_dir.join("summary.json"),
                serde_json::to_string_pretty(&summary)?,
            )?;
            Ok(ExperimentOutcome::Figure1(summaries))
        }
        _ => {
            let check = run_limit_check(cfg)?;
            fs::write(
                out_dir.join("mcreport.json"),
                serde_json::to_string_pretty(&check.report)?,
            )?;
            fs::write(
                out_dir.join("finite_draws.csv"),
                draws_csv(&check.finite.isotonized),
            )?;
            fs::write(out_dir.join("limit_draws.csv"), draws_csv(&check.limit))?;
            Ok(ExperimentOutcome::LimitCheck(check.report))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distance_examples() {
        let d = distances(&[0.2, 0.8], &[0.2, 0.8]).unwrap();
        assert_eq!((d.l1, d.l2, d.hellinger), (0.0, 0.0, 0.0));

        let d = distances(&[1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert_eq!(d.l1, 2.0);
        assert!((d.l2 - 2f64.sqrt()).abs() < 1e-15);
        assert!((d.hellinger - 2f64.sqrt()).abs() < 1e-15);

        let d = distances(&[0.25, 0.75], &[0.5, 0.5]).unwrap();
        assert!((d.l1 - 0.5).abs() < 1e-15);
        assert!((d.l2 - 0.125f64.sqrt()).abs() < 1e-15);
        let h = ((0.25f64.sqrt() - 0.5f64.sqrt()).powi(2)
            + (0.75f64.sqrt() - 0.5f64.sqrt()).powi(2))
        .sqrt();
        assert!((d.hellinger - h).abs() < 1e-15);

        assert!(matches!(
            distances(&[-0.1, 1.1], &[0.5, 0.5]),
            Err(Error::NegativeEntry { index: 0, .. })
        ));
        assert!(distances(&[1.0], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn point_mass_isotonized_never_worse() {
        let mut cfg = ExperimentConfig::figure1(3);
        cfg.q = Some(vec![1.0, 0.0, 0.0, 0.0, 0.0]);
        cfg.replicates = 50;
        let out = run_figure1(&cfg).unwrap();
        for s in &out {
            for r in 0..50 {
                assert!(s.isotonized.l1[r] <= s.empirical.l1[r] + 1e-12);
                assert!(s.isotonized.l2[r] <= s.empirical.l2[r] + 1e-12);
            }
        }
    }

    #[test]
    fn config_validation() {
        let text = r#"{"name": "x", "scenario": "figure1", "n": [50], "replicates": 0, "seed": 1}"#;
        assert!(ExperimentConfig::from_json_str(text).is_err());
        let text = r#"{"name": "x", "scenario": "limit-check-pmf", "n": [50, 60], "replicates": 3, "seed": 1}"#;
        assert!(ExperimentConfig::from_json_str(text).is_err());
        let text =
            r#"{"name": "x", "scenario": "figure1", "n": [50, 300], "replicates": 10, "seed": 1}"#;
        let cfg = ExperimentConfig::from_json_str(text).unwrap();
        assert_eq!(cfg.dims, vec![5, 5]);
        let text = r#"{"name": "x", "scenario": "figure1", "n": [5], "replicates": 1, "seed": 1, "bogus": 1}"#;
        assert!(ExperimentConfig::from_json_str(text).is_err());
    }

    #[test]
    fn limit_check_reg_needs_g0() {
        let mut cfg = ExperimentConfig::figure1(1);
        cfg.scenario = ExperimentKind::LimitCheckReg;
        cfg.n = vec![100];
        assert!(run_limit_check(&cfg).is_err());
    }
}
