//! Exact isotonic regression on a DAG by recursive min-cut partitioning.
//!
//! For a block `B` with weighted mean `m`, the set of nodes whose fitted value
//! exceeds `m` is the maximum-weight upper set of `B` under node weights
//! `w_i (y_i - m)`. That set is found as a minimum cut; the block then splits
//! into the upper part and its complement, and the two halves are solved
//! independently (their fits never violate a constraint across the split).
//! A block whose best upper set has weight zero is constant at `m`.

use super::maxflow::FlowNetwork;

/// DAG with node values and weights. `succ[u]` lists `v` with `u ⪯ v`.
#[derive(Debug, Clone)]
pub struct Dag<'a> {
    pub succ: &'a [Vec<usize>],
    pub values: &'a [f64],
    pub weights: &'a [f64],
}

#[derive(Debug, Default, Clone, Copy)]
pub struct PartitionStats {
    pub max_flow_calls: usize,
    pub splits: usize,
}

pub fn solve_dag(dag: &Dag<'_>, stats: &mut PartitionStats) -> Vec<f64> {
    let n = dag.values.len();
    let mut fitted = vec![0.0; n];
    let mut block_id = vec![usize::MAX; n];
    let mut next_id = 0usize;
    let mut stack: Vec<Vec<usize>> = vec![(0..n).collect()];

    while let Some(block) = stack.pop() {
        let id = next_id;
        next_id += 1;
        for &u in &block {
            block_id[u] = id;
        }
        if block.len() == 1 {
            fitted[block[0]] = dag.values[block[0]];
            continue;
        }
        let violated = block.iter().any(|&u| {
            dag.succ[u]
                .iter()
                .any(|&v| block_id[v] == id && dag.values[u] > dag.values[v])
        });
        if !violated {
            for &u in &block {
                fitted[u] = dag.values[u];
            }
            continue;
        }

        let (sw, swy) = block.iter().fold((0.0, 0.0), |(sw, swy), &u| {
            (sw + dag.weights[u], swy + dag.weights[u] * dag.values[u])
        });
        let mean = swy / sw;

        match best_upper_set(dag, &block, &block_id, id, mean, stats) {
            Some(upper) => {
                stats.splits += 1;
                let (up, low): (Vec<usize>, Vec<usize>) =
                    block.iter().partition(|&&u| upper[local_pos(&block, u)]);
                stack.push(low);
                stack.push(up);
            }
            None => {
                for &u in &block {
                    fitted[u] = mean;
                }
            }
        }
    }
    fitted
}

#[inline]
fn local_pos(block: &[usize], u: usize) -> usize {
    // blocks are kept sorted, so a binary search locates u
    block.binary_search(&u).expect("node belongs to block")
}

/// Maximum-weight upper set of `block` under weights `w_i (y_i - mean)`,
/// as a membership mask over block positions. `None` when the best upper set
/// is empty or the whole block (the block is then constant).
fn best_upper_set(
    dag: &Dag<'_>,
    block: &[usize],
    block_id: &[usize],
    id: usize,
    mean: f64,
    stats: &mut PartitionStats,
) -> Option<Vec<bool>> {
    let k = block.len();
    let source = k;
    let sink = k + 1;
    let gains: Vec<f64> = block
        .iter()
        .map(|&u| dag.weights[u] * (dag.values[u] - mean))
        .collect();
    let scale = gains.iter().fold(0.0f64, |a, g| a.max(g.abs()));
    if scale == 0.0 {
        return None;
    }
    let eps = scale * 1e-13;
    let mut net = FlowNetwork::new(k + 2, eps);
    for (i, &g) in gains.iter().enumerate() {
        if g > 0.0 {
            net.add_edge(source, i, g);
        } else if g < 0.0 {
            net.add_edge(i, sink, -g);
        }
    }
    for (i, &u) in block.iter().enumerate() {
        for &v in &dag.succ[u] {
            if block_id[v] == id {
                net.add_edge(i, local_pos(block, v), f64::INFINITY);
            }
        }
    }
    stats.max_flow_calls += 1;
    net.max_flow(source, sink);
    let side = net.source_side(source);
    let upper: Vec<bool> = side[..k].to_vec();
    let size = upper.iter().filter(|&&b| b).count();
    if size == 0 || size == k {
        return None;
    }
    let gain: f64 = gains
        .iter()
        .zip(&upper)
        .filter(|(_, &b)| b)
        .map(|(g, _)| g)
        .sum();
    if gain <= eps * k as f64 {
        return None;
    }
    Some(upper)
}
