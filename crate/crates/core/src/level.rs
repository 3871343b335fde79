//! Comparable level sets of a reference isotonic function and the
//! concatenation operator built on them.
//!
//! The partition is built in two passes: split the ground set into comparable
//! components, then split each component into maximal comparability-connected
//! pieces on which the reference function is constant. When a perturbation of
//! the reference stays within half the smallest comparable level distance,
//! the isotonic regression of the perturbed vector is the concatenation of the
//! separate regressions on these pieces.

use petgraph::unionfind::UnionFind;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preorder::PreOrder;
use crate::solver::{Direction, IsotonicSolver};

/// Slack allowed when validating that a reference function is isotonic.
pub const ISOTONIC_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSet {
    pub component: usize,
    /// Rank of this set among the sets of its component (by value, then first member).
    pub level: usize,
    pub value: f64,
    pub members: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelPartition {
    pub sets: Vec<LevelSet>,
    /// Smallest comparable level distance; `+inf` when no two sets hold a
    /// comparable pair. For a truncated partition this is the distance
    /// measured from the kept sets only.
    pub epsilon_tilde: f64,
    /// Elements lumped together by truncation; empty otherwise.
    pub tail_set: Vec<usize>,
}

impl LevelPartition {
    pub fn is_truncated(&self) -> bool {
        !self.tail_set.is_empty()
    }

    /// Every block the concatenation operator acts on: the level sets, then
    /// the tail set if present.
    pub fn blocks(&self) -> impl Iterator<Item = &[usize]> {
        self.sets
            .iter()
            .map(|s| s.members.as_slice())
            .chain(Some(self.tail_set.as_slice()).filter(|t| !t.is_empty()))
    }

    /// Block index of each element, in the numbering of [`blocks`](Self::blocks).
    pub fn block_of(&self, size: usize) -> Vec<usize> {
        let mut out = vec![usize::MAX; size];
        for (b, members) in self.blocks().enumerate() {
            for &m in members {
                out[m] = b;
            }
        }
        out
    }
}

fn check_reference(order: &PreOrder, g0: &[f64]) -> Result<()> {
    if g0.len() != order.len() {
        return Err(Error::DimensionMismatch {
            expected: order.len(),
            actual: g0.len(),
        });
    }
    if let Some((index, &value)) = g0.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(Error::NonFiniteValue { index, value });
    }
    if let Some((a, b)) = order.isotonic_violation(g0, ISOTONIC_SLACK) {
        return Err(Error::NotIsotonic {
            lower: a,
            upper: b,
            lower_value: g0[a],
            upper_value: g0[b],
        });
    }
    Ok(())
}

/// Comparable level sets of the isotonic reference `g0`.
///
/// Values are grouped by exact equality. For a decomposable ground set the
/// level distance is the minimum over components.
pub fn level_partition(order: &PreOrder, g0: &[f64]) -> Result<LevelPartition> {
    check_reference(order, g0)?;
    let n = order.len();
    let comps = order.components();

    // Within a level set, comparability connectivity equals connectivity along
    // generating edges with equal endpoint values: any path between two
    // elements of value c only passes through elements of value c.
    let mut uf = UnionFind::<usize>::new(n);
    for &(a, b) in order.edges() {
        if g0[a] == g0[b] {
            uf.union(a, b);
        }
    }
    let mut root_slot = vec![usize::MAX; n];
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        let r = uf.find(i);
        if root_slot[r] == usize::MAX {
            root_slot[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[root_slot[r]].push(i);
    }

    let mut sets: Vec<LevelSet> = groups
        .into_iter()
        .map(|members| LevelSet {
            component: comps.component_of[members[0]],
            level: 0,
            value: g0[members[0]],
            members,
        })
        .collect();
    sets.sort_by(|a, b| {
        a.component
            .cmp(&b.component)
            .then(a.value.total_cmp(&b.value))
            .then(a.members[0].cmp(&b.members[0]))
    });
    let mut prev_comp = usize::MAX;
    let mut level = 0;
    for s in &mut sets {
        if s.component != prev_comp {
            prev_comp = s.component;
            level = 0;
        }
        s.level = level;
        level += 1;
    }

    let set_of = set_index(n, &sets);
    let epsilon_tilde = comparable_gap(order, g0, &set_of, |_| true);
    Ok(LevelPartition {
        sets,
        epsilon_tilde,
        tail_set: Vec::new(),
    })
}

fn set_index(n: usize, sets: &[LevelSet]) -> Vec<usize> {
    let mut set_of = vec![usize::MAX; n];
    for (k, s) in sets.iter().enumerate() {
        for &m in &s.members {
            set_of[m] = k;
        }
    }
    set_of
}

/// Minimum `|g0[a] - g0[b]|` over comparable pairs in different sets where
/// `a` lies in a set accepted by `from`.
fn comparable_gap(
    order: &PreOrder,
    g0: &[f64],
    set_of: &[usize],
    from: impl Fn(usize) -> bool,
) -> f64 {
    let n = order.len();
    let mut best = f64::INFINITY;
    for a in 0..n {
        if !from(set_of[a]) {
            continue;
        }
        for b in 0..n {
            if set_of[a] != set_of[b] && order.comparable(a, b) {
                let gap = (g0[a] - g0[b]).abs();
                if gap > 0.0 && gap < best {
                    best = gap;
                }
            }
        }
    }
    best
}

/// Keeps the `m_prime` level sets with the largest `|g0|` (ties: smallest
/// first member) and lumps all others into the tail set.
pub fn truncated_level_partition(
    order: &PreOrder,
    g0: &[f64],
    m_prime: usize,
) -> Result<LevelPartition> {
    let full = level_partition(order, g0)?;
    let m = full.sets.len();
    if m_prime == 0 || m_prime >= m {
        return Err(Error::TruncationOutOfRange { m_prime, levels: m });
    }
    let mut ranked: Vec<usize> = (0..m).collect();
    ranked.sort_by(|&a, &b| {
        let (sa, sb) = (&full.sets[a], &full.sets[b]);
        sb.value
            .abs()
            .total_cmp(&sa.value.abs())
            .then(sa.members[0].cmp(&sb.members[0]))
    });
    let mut keep = vec![false; m];
    for &k in &ranked[..m_prime] {
        keep[k] = true;
    }
    let set_of = set_index(order.len(), &full.sets);
    let epsilon_tilde = comparable_gap(order, g0, &set_of, |k| keep[k]);

    let mut tail_set = Vec::new();
    let mut sets = Vec::with_capacity(m_prime);
    for (k, s) in full.sets.into_iter().enumerate() {
        if keep[k] {
            sets.push(s);
        } else {
            tail_set.extend(s.members);
        }
    }
    tail_set.sort_unstable();
    Ok(LevelPartition {
        sets,
        epsilon_tilde,
        tail_set,
    })
}

/// Whether `sup |g - g0| < epsilon_tilde / 2`, the condition under which the
/// full regression of `g` equals the per-block concatenation.
pub fn check_localization(lp: &LevelPartition, g: &[f64], g0: &[f64]) -> bool {
    if lp.epsilon_tilde.is_infinite() {
        return true;
    }
    let sup = g
        .iter()
        .zip(g0)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    sup < lp.epsilon_tilde / 2.0
}

/// The concatenation operator: separate (weighted) regressions on each block
/// of a level partition, prepared once for repeated application.
#[derive(Debug, Clone)]
pub struct PhiOperator {
    size: usize,
    blocks: Vec<(Vec<usize>, IsotonicSolver)>,
}

impl PhiOperator {
    pub fn new(order: &PreOrder, lp: &LevelPartition) -> Self {
        let blocks = lp
            .blocks()
            .map(|members| {
                (
                    members.to_vec(),
                    IsotonicSolver::new(&order.restrict(members)),
                )
            })
            .collect();
        Self {
            size: order.len(),
            blocks,
        }
    }

    pub fn len(&self) -> usize {
        self.size
    }

    pub fn is_empty(&self) -> bool {
        self.size == 0
    }

    pub fn apply(&self, theta: &[f64], weights: &[f64], direction: Direction) -> Result<Vec<f64>> {
        for (len, expected) in [(theta.len(), self.size), (weights.len(), self.size)] {
            if len != expected {
                return Err(Error::DimensionMismatch {
                    expected,
                    actual: len,
                });
            }
        }
        if let Some((index, &value)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !(w.is_finite() && **w > 0.0))
        {
            return Err(Error::NonPositiveWeight { index, value });
        }
        Ok(self.apply_unchecked(theta, weights, direction))
    }

    pub(crate) fn apply_unchecked(
        &self,
        theta: &[f64],
        weights: &[f64],
        direction: Direction,
    ) -> Vec<f64> {
        let sign = match direction {
            Direction::Isotonic => 1.0,
            Direction::Antitonic => -1.0,
        };
        let mut out = vec![0.0; self.size];
        let mut vals = Vec::new();
        let mut wts = Vec::new();
        for (members, solver) in &self.blocks {
            vals.clear();
            wts.clear();
            vals.extend(members.iter().map(|&m| sign * theta[m]));
            wts.extend(members.iter().map(|&m| weights[m]));
            let (fit, _) = solver.fit_values(&vals, &wts);
            for (&m, v) in members.iter().zip(fit) {
                out[m] = sign * v;
            }
        }
        out
    }
}

/// One-shot isotonic concatenation operator.
pub fn phi(
    order: &PreOrder,
    lp: &LevelPartition,
    theta: &[f64],
    weights: &[f64],
) -> Result<Vec<f64>> {
    PhiOperator::new(order, lp).apply(theta, weights, Direction::Isotonic)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{isotonic_regression, WeightedFunction};

    fn members(lp: &LevelPartition) -> Vec<(Vec<usize>, f64)> {
        lp.sets
            .iter()
            .map(|s| (s.members.clone(), s.value))
            .collect()
    }

    #[test]
    fn four_chain_two_levels() {
        let p = PreOrder::grid(&[4]).unwrap();
        let lp = level_partition(&p, &[0.0, 0.0, 1.0, 1.0]).unwrap();
        assert_eq!(members(&lp), vec![(vec![0, 1], 0.0), (vec![2, 3], 1.0)]);
        assert_eq!(lp.epsilon_tilde, 1.0);
        assert!(!lp.is_truncated());
    }

    #[test]
    fn antichain_splits_into_singletons() {
        let p = PreOrder::from_indices(4, &[]).unwrap();
        let lp = level_partition(&p, &[0.0; 4]).unwrap();
        assert_eq!(lp.sets.len(), 4);
        assert!(lp.epsilon_tilde.is_infinite());
        assert!(check_localization(&lp, &[100.0; 4], &[0.0; 4]));
    }

    #[test]
    fn equal_values_split_by_comparability() {
        // 2x2 grid with g0 = (0, 1, 1, 2): the two middle points are incomparable
        let p = PreOrder::grid(&[2, 2]).unwrap();
        let lp = level_partition(&p, &[0.0, 1.0, 1.0, 2.0]).unwrap();
        assert_eq!(lp.sets.len(), 4);
        assert_eq!(lp.epsilon_tilde, 1.0);
    }

    #[test]
    fn rejects_non_isotonic_reference() {
        let p = PreOrder::grid(&[2]).unwrap();
        assert!(matches!(
            level_partition(&p, &[1.0, 0.0]),
            Err(Error::NotIsotonic {
                lower: 0,
                upper: 1,
                ..
            })
        ));
        assert!(level_partition(&p, &[0.0]).is_err());
    }

    #[test]
    fn truncated_four_chain() {
        let p = PreOrder::grid(&[4]).unwrap();
        let g0 = [0.0, 0.5, 0.5, 1.0];
        let lp = truncated_level_partition(&p, &g0, 1).unwrap();
        assert_eq!(members(&lp), vec![(vec![3], 1.0)]);
        assert_eq!(lp.tail_set, vec![0, 1, 2]);
        assert_eq!(lp.epsilon_tilde, 0.5);

        let lp = truncated_level_partition(&p, &g0, 2).unwrap();
        assert_eq!(lp.tail_set, vec![0]);
        assert!(matches!(
            truncated_level_partition(&p, &g0, 3),
            Err(Error::TruncationOutOfRange {
                m_prime: 3,
                levels: 3
            })
        ));
        assert!(truncated_level_partition(&p, &g0, 0).is_err());
    }

    #[test]
    fn phi_pools_within_levels() {
        let p = PreOrder::grid(&[4]).unwrap();
        let lp = level_partition(&p, &[0.0, 0.0, 1.0, 1.0]).unwrap();
        let out = phi(&p, &lp, &[0.2, -0.1, 1.3, 0.9], &[1.0; 4]).unwrap();
        let expect = [0.05, 0.05, 1.1, 1.1];
        for (a, b) in out.iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
        let iso = [0.0, 0.1, -3.0, 2.0];
        assert_eq!(phi(&p, &lp, &iso, &[1.0; 4]).unwrap(), iso.to_vec());
        assert!(phi(&p, &lp, &iso, &[1.0; 3]).is_err());
    }

    #[test]
    fn localization_check_boundaries() {
        let p = PreOrder::grid(&[4]).unwrap();
        let g0 = [0.0, 0.0, 1.0, 1.0];
        let lp = level_partition(&p, &g0).unwrap();
        assert!(check_localization(&lp, &g0, &g0));
        let mut g = g0;
        g[2] += lp.epsilon_tilde;
        assert!(!check_localization(&lp, &g, &g0));
        let g = [0.2, -0.2, 0.8, 1.2];
        assert!(check_localization(&lp, &g, &g0));
        let full = isotonic_regression(&p, &WeightedFunction::unit(g.to_vec()).unwrap()).unwrap();
        let conc = phi(&p, &lp, &g, &[1.0; 4]).unwrap();
        for (a, b) in full.fitted.iter().zip(&conc) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
