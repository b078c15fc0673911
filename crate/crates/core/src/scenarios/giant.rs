//! One fact spread over a random interaction graph. A root measures S, then
//! every node's neighbours read it in z along a spanning tree of the graph.
//! The community holding the fact should cover exactly the root's graph
//! component.

use std::collections::BTreeSet;
use std::f64::consts::FRAC_1_SQRT_2 as H;

use petgraph::unionfind::UnionFind;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Ctx, Metric, Outcome, ParamSpec, Result};
use crate::bonding::{derive_bonds, fact_community};
use crate::facts::{InteractionSpec, Ledger, ObserverId};
use crate::quantum::C64;

pub(super) const PARAMS: &[ParamSpec] = &[
    ParamSpec::int("extraEdges", 50, 0, 1_000_000),
    ParamSpec::int("graphSeed", 1, 0, i64::MAX),
    ParamSpec::int("nodes", 100, 1, 100_000),
    ParamSpec::float("split", 1.0, 0.0, 1.0),
];

/// Undirected graph as sorted adjacency lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(super) struct Graph {
    pub adj: Vec<Vec<usize>>,
}

impl Graph {
    /// Random tree plus `extra` random chords on each of the two blocks
    /// [0, k) and [k, n), where k = round(split·n) (at least 1). The blocks
    /// share no edge, so `split < 1` gives a disconnected graph.
    pub fn random(n: usize, split: f64, extra: usize, seed: u64) -> Graph {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = ((split * n as f64).round() as usize).clamp(1, n);
        let mut adj = vec![BTreeSet::new(); n];
        let add = |a: usize, b: usize, adj: &mut Vec<BTreeSet<usize>>| {
            adj[a].insert(b);
            adj[b].insert(a);
        };
        for (lo, hi) in [(0, k), (k, n)] {
            let size = hi - lo;
            for i in 1..size {
                let j = rng.random_range(0..i);
                add(lo + i, lo + j, &mut adj);
            }
            if size >= 2 {
                let chords = (extra * size).div_ceil(n);
                for _ in 0..chords {
                    let a = rng.random_range(0..size);
                    let b = rng.random_range(0..size);
                    if a != b {
                        add(lo + a, lo + b, &mut adj);
                    }
                }
            }
        }
        Graph { adj: adj.into_iter().map(|s| s.into_iter().collect()).collect() }
    }

    /// Union-find size of `node`'s component.
    pub fn component_size(&self, node: usize) -> usize {
        let mut uf = UnionFind::<usize>::new(self.adj.len());
        for (a, ns) in self.adj.iter().enumerate() {
            for &b in ns {
                uf.union(a, b);
            }
        }
        let root = uf.find(node);
        (0..self.adj.len()).filter(|&v| uf.find(v) == root).count()
    }

    /// Breadth-first spanning tree from `root`: children lists of the
    /// reachable nodes.
    fn bfs_tree(&self, root: usize) -> Vec<Vec<usize>> {
        let mut children = vec![Vec::new(); self.adj.len()];
        let mut seen = vec![false; self.adj.len()];
        let mut queue = std::collections::VecDeque::from([root]);
        seen[root] = true;
        while let Some(u) = queue.pop_front() {
            for &v in &self.adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    children[u].push(v);
                    queue.push_back(v);
                }
            }
        }
        children
    }
}

/// Height of each node's subtree (leaves are 0).
fn heights(children: &[Vec<usize>], root: usize) -> Vec<usize> {
    let mut h = vec![0; children.len()];
    let mut order = vec![root];
    let mut i = 0;
    while i < order.len() {
        order.extend(children[order[i]].iter().copied());
        i += 1;
    }
    for &u in order.iter().rev() {
        h[u] = children[u].iter().map(|&c| h[c] + 1).max().unwrap_or(0);
    }
    h
}

struct Broadcast<'a> {
    l: Ledger,
    s: ObserverId,
    children: Vec<Vec<usize>>,
    heights: Vec<usize>,
    rng: &'a mut ChaCha8Rng,
    max_dim: usize,
}

impl Broadcast<'_> {
    /// Passes the fact from `node` (registered as `obs`) to its subtree.
    /// Children go shallowest first and `obs` retires before the last one
    /// so the tracked state stays small.
    fn visit(&mut self, node: usize, obs: ObserverId) -> Result<()> {
        let mut kids = self.children[node].clone();
        kids.sort_by_key(|&c| (self.heights[c], c));
        if kids.is_empty() {
            self.l.retire(obs)?;
            return Ok(());
        }
        let last = kids.len() - 1;
        for (i, &c) in kids.iter().enumerate() {
            let reader = self.l.register_system(2)?;
            self.l.cpl_readout(reader, obs, self.s, "z", self.rng)?;
            self.max_dim = self.max_dim.max(self.l.state().dim());
            if i == last {
                self.l.retire(obs)?;
            }
            self.visit(c, reader)?;
        }
        Ok(())
    }
}

pub(super) fn run(ctx: &Ctx) -> Result<Outcome> {
    let n = ctx.param_usize("nodes");
    let graph = Graph::random(n, ctx.param("split"), ctx.param_usize("extraEdges"), ctx.param_usize("graphSeed") as u64);
    let expected = graph.component_size(0);
    let children = graph.bfs_tree(0);
    let hs = heights(&children, 0);

    let (trials, trace) = ctx.run_trials(|t, rng| {
        let mut l = ctx.ledger(t);
        let s = l.register_prepared(vec![C64::new(H, 0.0), C64::new(H, 0.0)])?;
        let root = l.register_system(2)?;
        l.interact(root, s, &InteractionSpec::pointer("z"), rng)?;
        l.retire(s)?;
        let fact = l.live_fact(root, s).expect("interaction records a fact").shared();
        let mut b = Broadcast { l, s, children: children.clone(), heights: hs.clone(), rng, max_dim: 0 };
        b.visit(0, root)?;
        let edges = derive_bonds(&b.l);
        let mut holders = fact_community(&edges, &fact).holders;
        holders.insert(root);
        Ok(((holders.len(), b.max_dim), b.l))
    })?;

    let mut out = Outcome { trace, ..Outcome::default() };
    let sizes: Vec<usize> = trials.iter().map(|t| t.0).collect();
    let min = *sizes.iter().min().expect("trials ≥ 1");
    let max = *sizes.iter().max().expect("trials ≥ 1");
    out.metric("communitySize", Metric { value: sizes[0] as f64, ci_low: Some(min as f64), ci_high: Some(max as f64) });
    out.metric("componentSize", Metric::count(expected));
    out.metric("graphEdges", Metric::count(graph.adj.iter().map(Vec::len).sum::<usize>() / 2));
    out.metric("maxStateDim", Metric::count(trials.iter().map(|t| t.1).max().unwrap_or(0)));
    let wrong = sizes.iter().filter(|&&s| s != expected).count();
    out.check(
        "communityMatchesComponent",
        wrong == 0,
        format!("expected {expected} holders; {wrong} trials differ (range {min}..={max})"),
    );
    out.notes.push("communitySize interval is the min and max over trials".into());
    Ok(out)
}
