//! Dinic's algorithm on real capacities, used for maximum-weight closures.

#[derive(Debug, Clone)]
struct Arc {
    to: usize,
    rev: usize,
    cap: f64,
}

#[derive(Debug, Clone)]
pub struct FlowNetwork {
    adj: Vec<Vec<Arc>>,
    eps: f64,
}

impl FlowNetwork {
    /// `eps` is the residual capacity below which an arc counts as saturated.
    pub fn new(nodes: usize, eps: f64) -> Self {
        Self {
            adj: vec![Vec::new(); nodes],
            eps,
        }
    }

    pub fn add_edge(&mut self, from: usize, to: usize, cap: f64) {
        let rev_from = self.adj[to].len() + usize::from(from == to);
        let rev_to = self.adj[from].len();
        self.adj[from].push(Arc {
            to,
            rev: rev_from,
            cap,
        });
        self.adj[to].push(Arc {
            to: from,
            rev: rev_to,
            cap: 0.0,
        });
    }

    fn levels(&self, source: usize) -> Vec<i64> {
        let mut level = vec![-1i64; self.adj.len()];
        let mut queue = std::collections::VecDeque::new();
        level[source] = 0;
        queue.push_back(source);
        while let Some(v) = queue.pop_front() {
            for a in &self.adj[v] {
                if a.cap > self.eps && level[a.to] < 0 {
                    level[a.to] = level[v] + 1;
                    queue.push_back(a.to);
                }
            }
        }
        level
    }

    fn augment(
        &mut self,
        v: usize,
        sink: usize,
        pushed: f64,
        level: &[i64],
        iter: &mut [usize],
    ) -> f64 {
        if v == sink {
            return pushed;
        }
        while iter[v] < self.adj[v].len() {
            let Arc { to, rev, cap } = self.adj[v][iter[v]];
            if cap > self.eps && level[to] == level[v] + 1 {
                let d = self.augment(to, sink, pushed.min(cap), level, iter);
                if d > 0.0 {
                    self.adj[v][iter[v]].cap -= d;
                    self.adj[to][rev].cap += d;
                    return d;
                }
            }
            iter[v] += 1;
        }
        0.0
    }

    pub fn max_flow(&mut self, source: usize, sink: usize) -> f64 {
        let mut flow = 0.0;
        loop {
            let level = self.levels(source);
            if level[sink] < 0 {
                return flow;
            }
            let mut iter = vec![0usize; self.adj.len()];
            loop {
                let f = self.augment(source, sink, f64::INFINITY, &level, &mut iter);
                if f <= 0.0 {
                    break;
                }
                flow += f;
            }
        }
    }

    /// Nodes reachable from `source` in the residual graph (the source side of
    /// the minimal minimum cut). Call after [`max_flow`](Self::max_flow).
    pub fn source_side(&self, source: usize) -> Vec<bool> {
        let level = self.levels(source);
        level.iter().map(|&l| l >= 0).collect()
    }
}
