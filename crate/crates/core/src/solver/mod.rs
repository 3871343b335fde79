//! Weighted least-squares projection onto the isotonic cone of a pre-order.
//!
//! The ground set is split into comparable components, each solved on its SCC
//! condensation: single nodes are returned as-is, chains go through PAVA and
//! anything else through recursive min-cut partitioning.

mod maxflow;
mod oracle;
mod partition;
mod pava;

use petgraph::unionfind::UnionFind;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preorder::PreOrder;

pub use oracle::oracle_projection;
pub use pava::pava;

/// Values over the ground set with strictly positive weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedFunction {
    pub values: Vec<f64>,
    pub weights: Vec<f64>,
}

impl WeightedFunction {
    pub fn new(values: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if values.len() != weights.len() {
            return Err(Error::DimensionMismatch {
                expected: values.len(),
                actual: weights.len(),
            });
        }
        validate(&values, &weights)?;
        Ok(Self { values, weights })
    }

    pub fn unit(values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        Self::new(values, vec![1.0; n])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub(crate) fn check_len(&self, expected: usize) -> Result<()> {
        if self.values.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                actual: self.values.len(),
            });
        }
        Ok(())
    }

    pub fn weighted_sum(&self) -> f64 {
        self.values
            .iter()
            .zip(&self.weights)
            .map(|(v, w)| v * w)
            .sum()
    }
}

fn validate(values: &[f64], weights: &[f64]) -> Result<()> {
    if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(Error::NonFiniteValue { index, value });
    }
    if let Some((index, &value)) = weights
        .iter()
        .enumerate()
        .find(|(_, w)| !(w.is_finite() && **w > 0.0))
    {
        return Err(Error::NonPositiveWeight { index, value });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Isotonic,
    Antitonic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SolverDiagnostics {
    pub components: usize,
    pub trivial_components: usize,
    pub chain_components: usize,
    pub general_components: usize,
    /// Elements absorbed into a larger strongly connected component.
    pub collapsed_elements: usize,
    pub max_flow_calls: usize,
    pub splits: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsotonicFit {
    pub fitted: Vec<f64>,
    /// Maximal comparability-connected sets on which the fit is constant.
    pub blocks: Vec<Vec<usize>>,
    pub objective: f64,
    pub diagnostics: SolverDiagnostics,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ComponentKind {
    Single,
    Chain,
    General,
}

#[derive(Debug, Clone)]
struct ComponentPlan {
    /// Global SCC ids in topological order.
    sccs: Vec<usize>,
    /// Successors in local indices.
    succ: Vec<Vec<usize>>,
    kind: ComponentKind,
}

/// A pre-order prepared for repeated projections: components, condensation
/// and chain detection are computed once.
#[derive(Debug, Clone)]
pub struct IsotonicSolver {
    size: usize,
    scc_members: Vec<Vec<usize>>,
    plans: Vec<ComponentPlan>,
    edges: Vec<(usize, usize)>,
}

impl IsotonicSolver {
    pub fn new(order: &PreOrder) -> Self {
        let comps = order.components();
        let mut plans = Vec::with_capacity(comps.len());
        for members in &comps.components {
            let mut sccs: Vec<usize> = members.iter().map(|&m| order.scc_of(m)).collect();
            sccs.sort_unstable();
            sccs.dedup();
            let local = |c: usize| sccs.binary_search(&c).expect("scc within component");
            let succ: Vec<Vec<usize>> = sccs
                .iter()
                .map(|&c| order.scc_successors(c).iter().map(|&d| local(d)).collect())
                .collect();
            let rep = |c: usize| order.sccs()[c][0];
            let kind = if sccs.len() == 1 {
                ComponentKind::Single
            } else if sccs
                .windows(2)
                .all(|w| order.precedes(rep(w[0]), rep(w[1])))
            {
                ComponentKind::Chain
            } else {
                ComponentKind::General
            };
            plans.push(ComponentPlan { sccs, succ, kind });
        }
        Self {
            size: order.len(),
            scc_members: order.sccs().to_vec(),
            plans,
            edges: order.edges().to_vec(),
        }
    }

    pub fn len(&self) -> usize {
        self.size
    }

    pub fn is_empty(&self) -> bool {
        self.size == 0
    }

    /// Fitted values only; inputs are assumed validated.
    pub fn fit_values(&self, values: &[f64], weights: &[f64]) -> (Vec<f64>, SolverDiagnostics) {
        debug_assert_eq!(values.len(), self.size);
        let mut fitted = vec![0.0; self.size];
        let mut diag = SolverDiagnostics {
            components: self.plans.len(),
            collapsed_elements: self.size - self.plans.iter().map(|p| p.sccs.len()).sum::<usize>(),
            ..Default::default()
        };
        for plan in &self.plans {
            let k = plan.sccs.len();
            let mut node_w = Vec::with_capacity(k);
            let mut node_y = Vec::with_capacity(k);
            for &c in &plan.sccs {
                let members = &self.scc_members[c];
                if members.len() == 1 {
                    node_w.push(weights[members[0]]);
                    node_y.push(values[members[0]]);
                } else {
                    let (sw, swy) = members.iter().fold((0.0, 0.0), |(sw, swy), &m| {
                        (sw + weights[m], swy + weights[m] * values[m])
                    });
                    node_w.push(sw);
                    node_y.push(swy / sw);
                }
            }
            let node_fit = match plan.kind {
                ComponentKind::Single => {
                    diag.trivial_components += 1;
                    node_y
                }
                ComponentKind::Chain => {
                    diag.chain_components += 1;
                    pava(&node_y, &node_w)
                }
                ComponentKind::General => {
                    diag.general_components += 1;
                    let mut stats = partition::PartitionStats::default();
                    let fit = partition::solve_dag(
                        &partition::Dag {
                            succ: &plan.succ,
                            values: &node_y,
                            weights: &node_w,
                        },
                        &mut stats,
                    );
                    diag.max_flow_calls += stats.max_flow_calls;
                    diag.splits += stats.splits;
                    fit
                }
            };
            for (&c, &v) in plan.sccs.iter().zip(&node_fit) {
                for &m in &self.scc_members[c] {
                    fitted[m] = v;
                }
            }
        }
        (fitted, diag)
    }

    pub fn fit(&self, f: &WeightedFunction) -> Result<IsotonicFit> {
        f.check_len(self.size)?;
        let (fitted, diagnostics) = self.fit_values(&f.values, &f.weights);
        Ok(self.finish(f, fitted, diagnostics))
    }

    pub fn fit_directed(&self, f: &WeightedFunction, direction: Direction) -> Result<IsotonicFit> {
        match direction {
            Direction::Isotonic => self.fit(f),
            Direction::Antitonic => {
                f.check_len(self.size)?;
                let neg: Vec<f64> = f.values.iter().map(|v| -v).collect();
                let (fitted, diagnostics) = self.fit_values(&neg, &f.weights);
                let fitted = fitted.into_iter().map(|v| -v).collect();
                Ok(self.finish(f, fitted, diagnostics))
            }
        }
    }

    fn finish(
        &self,
        f: &WeightedFunction,
        fitted: Vec<f64>,
        diagnostics: SolverDiagnostics,
    ) -> IsotonicFit {
        let objective = fitted
            .iter()
            .zip(&f.values)
            .zip(&f.weights)
            .map(|((a, b), w)| (a - b) * (a - b) * w)
            .sum();
        let blocks = constant_blocks(self.size, &self.edges, &fitted);
        IsotonicFit {
            fitted,
            blocks,
            objective,
            diagnostics,
        }
    }
}

/// Groups elements joined by an edge whose endpoints carry the same fitted
/// value (to 1e-10 relative).
fn constant_blocks(size: usize, edges: &[(usize, usize)], fitted: &[f64]) -> Vec<Vec<usize>> {
    let mut uf = UnionFind::<usize>::new(size);
    for &(a, b) in edges {
        let scale = 1f64.max(fitted[a].abs()).max(fitted[b].abs());
        if (fitted[a] - fitted[b]).abs() <= 1e-10 * scale {
            uf.union(a, b);
        }
    }
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; size];
    for i in 0..size {
        let r = uf.find(i);
        if slot[r] == usize::MAX {
            slot[r] = blocks.len();
            blocks.push(Vec::new());
        }
        blocks[slot[r]].push(i);
    }
    blocks
}

/// Weighted least-squares isotonic regression of `f` on `order`.
pub fn isotonic_regression(order: &PreOrder, f: &WeightedFunction) -> Result<IsotonicFit> {
    IsotonicSolver::new(order).fit(f)
}

/// Projection onto the antitonic (order-reversing) vectors, as the negation of
/// the isotonic regression of `-f`.
pub fn antitonic_regression(order: &PreOrder, f: &WeightedFunction) -> Result<IsotonicFit> {
    IsotonicSolver::new(order).fit_directed(f, Direction::Antitonic)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn chain_violating_pair() {
        let p = PreOrder::grid(&[2]).unwrap();
        let fit =
            isotonic_regression(&p, &WeightedFunction::unit(vec![2.0, 1.0]).unwrap()).unwrap();
        assert_eq!(fit.fitted, vec![1.5, 1.5]);
        assert_eq!(fit.blocks, vec![vec![0, 1]]);
        assert!((fit.objective - 0.5).abs() < 1e-15);
        assert_eq!(fit.diagnostics.chain_components, 1);
    }

    #[test]
    fn isotonic_input_is_fixed() {
        let p = PreOrder::grid(&[2, 3]).unwrap();
        let v = vec![0.0, 1.0, 2.0, 1.0, 1.5, 3.0];
        let fit = isotonic_regression(&p, &WeightedFunction::unit(v.clone()).unwrap()).unwrap();
        assert_eq!(fit.fitted, v);
        assert_eq!(fit.objective, 0.0);
    }

    #[test]
    fn grid_2x2_example() {
        // oracle value (2,2,2,4) computed by Dykstra to 1e-10 in the tests below
        let p = PreOrder::grid(&[2, 2]).unwrap();
        let f = WeightedFunction::unit(vec![3.0, 1.0, 2.0, 4.0]).unwrap();
        let fit = isotonic_regression(&p, &f).unwrap();
        assert_close(&fit.fitted, &[2.0, 2.0, 2.0, 4.0], 1e-12);
        assert_eq!(fit.diagnostics.general_components, 1);
        let oracle = oracle_projection(&p, &f, 1e-10, 100_000).unwrap();
        assert_close(&oracle, &[2.0, 2.0, 2.0, 4.0], 1e-8);
    }

    #[test]
    fn chain_of_three() {
        // brute force over the four block partitions of a 3-chain: only the
        // single pooled block {1,2,3} is isotonic and optimal -> (2,2,2)
        let p = PreOrder::grid(&[3]).unwrap();
        let fit =
            isotonic_regression(&p, &WeightedFunction::unit(vec![3.0, 1.0, 2.0]).unwrap()).unwrap();
        assert_close(&fit.fitted, &[2.0, 2.0, 2.0], 1e-15);
    }

    #[test]
    fn antitonic_cases() {
        let p = PreOrder::grid(&[2]).unwrap();
        let fit =
            antitonic_regression(&p, &WeightedFunction::unit(vec![1.0, 2.0]).unwrap()).unwrap();
        assert_eq!(fit.fitted, vec![1.5, 1.5]);
        let fit =
            antitonic_regression(&p, &WeightedFunction::unit(vec![2.0, 1.0]).unwrap()).unwrap();
        assert_eq!(fit.fitted, vec![2.0, 1.0]);

        let g = PreOrder::grid(&[2, 2]).unwrap();
        let v = vec![0.1, 0.3, 0.2, 0.05];
        let anti = antitonic_regression(&g, &WeightedFunction::unit(v.clone()).unwrap()).unwrap();
        let neg = WeightedFunction::unit(v.iter().map(|x| -x).collect()).unwrap();
        let iso = isotonic_regression(&g, &neg).unwrap();
        for (a, b) in anti.fitted.iter().zip(&iso.fitted) {
            assert!((a + b).abs() <= 1e-12);
        }
    }

    #[test]
    fn cycles_are_pooled() {
        // 0 ⪯ 1 ⪯ 0 forces equality even without a violation
        let p = PreOrder::from_indices(2, &[(0, 1), (1, 0)]).unwrap();
        let f = WeightedFunction::new(vec![1.0, 4.0], vec![2.0, 1.0]).unwrap();
        let fit = isotonic_regression(&p, &f).unwrap();
        assert_close(&fit.fitted, &[2.0, 2.0], 1e-15);
        assert_eq!(fit.diagnostics.collapsed_elements, 1);
    }

    #[test]
    fn degenerate_inputs() {
        let p = PreOrder::from_indices(1, &[]).unwrap();
        let fit = isotonic_regression(&p, &WeightedFunction::unit(vec![7.0]).unwrap()).unwrap();
        assert_eq!(fit.fitted, vec![7.0]);
        let p = PreOrder::from_indices(3, &[]).unwrap();
        let fit =
            isotonic_regression(&p, &WeightedFunction::unit(vec![3.0, 1.0, 2.0]).unwrap()).unwrap();
        assert_eq!(fit.fitted, vec![3.0, 1.0, 2.0]);
        assert_eq!(fit.blocks.len(), 3);
    }

    #[test]
    fn input_validation() {
        let p = PreOrder::grid(&[2]).unwrap();
        assert!(matches!(
            isotonic_regression(&p, &WeightedFunction::unit(vec![1.0]).unwrap()),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            WeightedFunction::new(vec![1.0, 2.0], vec![1.0, 0.0]),
            Err(Error::NonPositiveWeight { index: 1, .. })
        ));
        assert!(WeightedFunction::new(vec![f64::NAN], vec![1.0]).is_err());
        assert!(WeightedFunction::new(vec![1.0], vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn weighted_pool() {
        let p = PreOrder::grid(&[2]).unwrap();
        let f = WeightedFunction::new(vec![2.0, 1.0], vec![2.0 / 3.0, 1.0 / 3.0]).unwrap();
        let fit = isotonic_regression(&p, &f).unwrap();
        assert_close(&fit.fitted, &[5.0 / 3.0, 5.0 / 3.0], 1e-15);
    }
}
