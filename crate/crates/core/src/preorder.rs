//! Finite pre-ordered sets.
//!
//! A [`PreOrder`] is stored as its generating edges plus a reachability index
//! over the strongly connected components of the edge graph. Cycles are legal:
//! `a ⪯ b ⪯ a` with `a != b` simply puts both elements in one component of the
//! condensation, and every query goes through that condensation.

use std::collections::HashMap;

use fixedbitset::FixedBitSet;
use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};
use petgraph::unionfind::UnionFind;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct PreOrder {
    labels: Vec<String>,
    index: HashMap<String, usize>,
    edges: Vec<(usize, usize)>,
    /// SCC id of each element; SCC ids are a topological order of the condensation.
    scc_of: Vec<usize>,
    sccs: Vec<Vec<usize>>,
    scc_succ: Vec<Vec<usize>>,
    /// `reach[c]` holds every SCC reachable from `c`, including `c` itself.
    reach: Vec<FixedBitSet>,
}

/// Partition of the ground set into comparable components.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ComponentPartition {
    pub components: Vec<Vec<usize>>,
    pub component_of: Vec<usize>,
}

impl ComponentPartition {
    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }
}

impl PreOrder {
    /// Builds a pre-order from labels and `(a, b)` pairs meaning `a ⪯ b`.
    pub fn new<S: AsRef<str>>(labels: &[S], edges: &[(S, S)]) -> Result<Self> {
        let labels: Vec<String> = labels.iter().map(|l| l.as_ref().to_owned()).collect();
        let mut index = HashMap::with_capacity(labels.len());
        for (i, l) in labels.iter().enumerate() {
            if index.insert(l.clone(), i).is_some() {
                return Err(Error::DuplicateLabel(l.clone()));
            }
        }
        let mut idx_edges = Vec::with_capacity(edges.len());
        for (a, b) in edges {
            let ia = *index
                .get(a.as_ref())
                .ok_or_else(|| Error::UnknownLabel(a.as_ref().to_owned()))?;
            let ib = *index
                .get(b.as_ref())
                .ok_or_else(|| Error::UnknownLabel(b.as_ref().to_owned()))?;
            idx_edges.push((ia, ib));
        }
        Ok(Self::build(labels, index, idx_edges))
    }

    /// Builds a pre-order on `0..size` with labels `"0"`, `"1"`, ...
    pub fn from_indices(size: usize, edges: &[(usize, usize)]) -> Result<Self> {
        for &(a, b) in edges {
            for i in [a, b] {
                if i >= size {
                    return Err(Error::IndexOutOfRange { index: i, size });
                }
            }
        }
        let labels: Vec<String> = (0..size).map(|i| i.to_string()).collect();
        let index = labels.iter().cloned().zip(0..).collect();
        Ok(Self::build(labels, index, edges.to_vec()))
    }

    /// The d-dimensional matrix order on `{1..dims[0]} × ... × {1..dims[d-1]}`,
    /// elements in row-major order, with cover edges between coordinate-adjacent points.
    pub fn grid(dims: &[usize]) -> Result<Self> {
        if dims.is_empty() || dims.contains(&0) {
            return Err(Error::InvalidDimensions(dims.to_vec()));
        }
        let size: usize = dims.iter().product();
        let mut strides = vec![1usize; dims.len()];
        for k in (0..dims.len() - 1).rev() {
            strides[k] = strides[k + 1] * dims[k + 1];
        }
        let mut labels = Vec::with_capacity(size);
        let mut edges = Vec::new();
        for flat in 0..size {
            let coords = grid_coords(flat, dims);
            let text: Vec<String> = coords.iter().map(|c| (c + 1).to_string()).collect();
            labels.push(format!("({})", text.join(",")));
            for (k, &c) in coords.iter().enumerate() {
                if c + 1 < dims[k] {
                    edges.push((flat, flat + strides[k]));
                }
            }
        }
        let index = labels.iter().cloned().zip(0..).collect();
        Ok(Self::build(labels, index, edges))
    }

    fn build(
        labels: Vec<String>,
        index: HashMap<String, usize>,
        edges: Vec<(usize, usize)>,
    ) -> Self {
        let n = labels.len();
        let mut graph: DiGraph<(), ()> = DiGraph::with_capacity(n, edges.len());
        for _ in 0..n {
            graph.add_node(());
        }
        for &(a, b) in &edges {
            if a != b {
                graph.add_edge(NodeIndex::new(a), NodeIndex::new(b), ());
            }
        }
        // tarjan_scc yields components in reverse topological order.
        let raw = tarjan_scc(&graph);
        let k = raw.len();
        let mut scc_of = vec![0usize; n];
        let mut sccs = vec![Vec::new(); k];
        for (pos, comp) in raw.into_iter().enumerate() {
            let id = k - 1 - pos;
            let mut members: Vec<usize> = comp.into_iter().map(|v| v.index()).collect();
            members.sort_unstable();
            for &m in &members {
                scc_of[m] = id;
            }
            sccs[id] = members;
        }
        let mut scc_succ = vec![Vec::new(); k];
        for &(a, b) in &edges {
            let (ca, cb) = (scc_of[a], scc_of[b]);
            if ca != cb {
                scc_succ[ca].push(cb);
            }
        }
        for s in &mut scc_succ {
            s.sort_unstable();
            s.dedup();
        }
        let mut reach = vec![FixedBitSet::with_capacity(k); k];
        for c in (0..k).rev() {
            let mut set = FixedBitSet::with_capacity(k);
            set.insert(c);
            for &d in &scc_succ[c] {
                debug_assert!(d > c);
                set.union_with(&reach[d]);
            }
            reach[c] = set;
        }
        Self {
            labels,
            index,
            edges,
            scc_of,
            sccs,
            scc_succ,
            reach,
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.index
            .get(label)
            .copied()
            .ok_or_else(|| Error::UnknownLabel(label.to_owned()))
    }

    /// The generating edges as supplied (self-loops included if given).
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// `a ⪯ b` in the reflexive-transitive closure.
    #[inline]
    pub fn precedes(&self, a: usize, b: usize) -> bool {
        self.reach[self.scc_of[a]].contains(self.scc_of[b])
    }

    #[inline]
    pub fn comparable(&self, a: usize, b: usize) -> bool {
        self.precedes(a, b) || self.precedes(b, a)
    }

    pub fn comparable_labels(&self, a: &str, b: &str) -> Result<bool> {
        Ok(self.comparable(self.index_of(a)?, self.index_of(b)?))
    }

    pub fn scc_of(&self, i: usize) -> usize {
        self.scc_of[i]
    }

    /// Strongly connected components, indexed in topological order.
    pub fn sccs(&self) -> &[Vec<usize>] {
        &self.sccs
    }

    pub fn scc_successors(&self, c: usize) -> &[usize] {
        &self.scc_succ[c]
    }

    /// Weakly connected components of the edge graph. Two elements in different
    /// components are never comparable. Components are ordered by smallest member.
    pub fn components(&self) -> ComponentPartition {
        let n = self.len();
        let mut uf = UnionFind::<usize>::new(n);
        for &(a, b) in &self.edges {
            uf.union(a, b);
        }
        let mut root_to_comp: HashMap<usize, usize> = HashMap::new();
        let mut components: Vec<Vec<usize>> = Vec::new();
        let mut component_of = vec![0usize; n];
        for (i, slot) in component_of.iter_mut().enumerate() {
            let root = uf.find(i);
            let c = *root_to_comp.entry(root).or_insert_with(|| {
                components.push(Vec::new());
                components.len() - 1
            });
            components[c].push(i);
            *slot = c;
        }
        ComponentPartition {
            components,
            component_of,
        }
    }

    /// The pre-order induced on `members` (in the given order): `a ⪯ b` in the
    /// result iff `a ⪯ b` here. Edges of the result are the covers of the induced
    /// order plus cycles tying together members of a shared SCC.
    pub fn restrict(&self, members: &[usize]) -> PreOrder {
        let k = members.len();
        let labels: Vec<String> = members.iter().map(|&m| self.labels[m].clone()).collect();
        let index = labels.iter().cloned().zip(0..).collect();

        // strictly_above[a] = local indices b with a ≺ b (different SCC)
        let mut strictly_above = vec![FixedBitSet::with_capacity(k); k];
        for (a, &ma) in members.iter().enumerate() {
            for (b, &mb) in members.iter().enumerate() {
                if self.scc_of[ma] != self.scc_of[mb] && self.precedes(ma, mb) {
                    strictly_above[a].insert(b);
                }
            }
        }
        let mut edges = Vec::new();
        let mut first_in_scc: HashMap<usize, usize> = HashMap::new();
        for (a, &ma) in members.iter().enumerate() {
            match first_in_scc.get(&self.scc_of[ma]) {
                Some(&head) => {
                    edges.push((head, a));
                    edges.push((a, head));
                }
                None => {
                    first_in_scc.insert(self.scc_of[ma], a);
                }
            }
        }
        for a in 0..k {
            let mut covers = strictly_above[a].clone();
            for c in strictly_above[a].ones() {
                covers.difference_with(&strictly_above[c]);
            }
            for b in covers.ones() {
                edges.push((a, b));
            }
        }
        Self::build(labels, index, edges)
    }

    /// First violated edge of `values` (by more than `slack`), if any.
    pub fn isotonic_violation(&self, values: &[f64], slack: f64) -> Option<(usize, usize)> {
        self.edges
            .iter()
            .copied()
            .find(|&(a, b)| values[a] > values[b] + slack)
    }

    pub fn is_isotonic(&self, values: &[f64], slack: f64) -> bool {
        self.isotonic_violation(values, slack).is_none()
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: PreOrderFile = serde_json::from_str(text)?;
        file.into_preorder()
    }
}

/// Zero-based coordinates of a row-major flat index.
pub fn grid_coords(mut flat: usize, dims: &[usize]) -> Vec<usize> {
    let mut coords = vec![0; dims.len()];
    for k in (0..dims.len()).rev() {
        coords[k] = flat % dims[k];
        flat /= dims[k];
    }
    coords
}

/// On-disk pre-order description:
/// `{"elements": [...], "edges": [["a","b"], ...]}` or `{"grid": [5,5]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PreOrderFile {
    Grid {
        grid: Vec<usize>,
    },
    Explicit {
        elements: Vec<serde_json::Value>,
        #[serde(default)]
        edges: Vec<(serde_json::Value, serde_json::Value)>,
    },
}

fn json_label(v: &serde_json::Value) -> String {
    match v {
        serde_json::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

impl PreOrderFile {
    pub fn into_preorder(self) -> Result<PreOrder> {
        match self {
            PreOrderFile::Grid { grid } => PreOrder::grid(&grid),
            PreOrderFile::Explicit { elements, edges } => {
                let labels: Vec<String> = elements.iter().map(json_label).collect();
                let edges: Vec<(String, String)> = edges
                    .iter()
                    .map(|(a, b)| (json_label(a), json_label(b)))
                    .collect();
                PreOrder::new(&labels, &edges)
            }
        }
    }
}
