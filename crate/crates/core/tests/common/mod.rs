//! Shared test fixtures: seeded dataset generators, a forward sampler for
//! synthetic networks, and a brute-force d-separation oracle that stays
//! independent of the library's implementation.

#![allow(dead_code)]

pub mod dot_grammar;

use cgforge::dataset::{Dataset, Variable};
use cgforge::graph::{Dag, Edge, NodeSet};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A discrete Bayesian network with explicit CPTs, used to forward-sample
/// synthetic datasets with known ground truth.
pub struct SyntheticNet {
    pub variables: Vec<Variable>,
    pub dag: Dag,
    /// Per node: rows indexed by the mixed-radix parent configuration (in
    /// ascending parent order), each row a distribution over states.
    pub cpts: Vec<Vec<Vec<f64>>>,
}

impl SyntheticNet {
    pub fn node_count(&self) -> usize {
        self.variables.len()
    }

    /// Ancestral sampling in topological order.
    pub fn sample(&self, rows: usize, seed: u64) -> Dataset {
        let order = self.dag.topological_order().expect("net is a DAG");
        let mut rng = rng(seed);
        let n = self.node_count();
        let mut columns: Vec<Vec<u32>> = vec![Vec::with_capacity(rows); n];
        let mut state = vec![0u32; n];
        for _ in 0..rows {
            for &v in &order {
                let parents = self.dag.parents(v);
                let mut config = 0usize;
                for &p in parents {
                    config = config * self.variables[p].arity() + state[p] as usize;
                }
                let dist = &self.cpts[v][config];
                let mut u: f64 = rng.random();
                let mut drawn = dist.len() - 1;
                for (k, &p) in dist.iter().enumerate() {
                    if u < p {
                        drawn = k;
                        break;
                    }
                    u -= p;
                }
                state[v] = drawn as u32;
            }
            for v in 0..n {
                columns[v].push(state[v]);
            }
        }
        Dataset::new(self.variables.clone(), columns).expect("sampled columns are valid")
    }
}

fn states(arity: usize) -> Vec<String> {
    (0..arity).map(|s| s.to_string()).collect()
}

/// Random network: random DAG plus CPT rows with one boosted state, so
/// sampled data carries detectable dependencies.
pub fn random_net(rng: &mut TestRng, n_vars: usize, max_arity: usize, edge_prob: f64) -> SyntheticNet {
    let variables: Vec<Variable> = (0..n_vars)
        .map(|i| Variable::new(format!("v{i}"), states(rng.random_range(2..=max_arity))))
        .collect();
    let dag = random_dag(rng, n_vars, edge_prob);
    let cpts = (0..n_vars)
        .map(|v| {
            let q: usize = dag
                .parents(v)
                .iter()
                .map(|&p| variables[p].arity())
                .product();
            let r = variables[v].arity();
            (0..q)
                .map(|_| {
                    let dominant = rng.random_range(0..r);
                    let mut weights: Vec<f64> =
                        (0..r).map(|_| rng.random_range(0.05..1.0)).collect();
                    weights[dominant] *= 4.0;
                    let total: f64 = weights.iter().sum();
                    weights.iter().map(|w| w / total).collect()
                })
                .collect()
        })
        .collect();
    SyntheticNet {
        variables,
        dag,
        cpts,
    }
}

/// Random DAG via a random node order and independent edge coins.
pub fn random_dag(rng: &mut TestRng, n: usize, edge_prob: f64) -> Dag {
    let mut order: Vec<usize> = (0..n).collect();
    // Fisher-Yates.
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        order.swap(i, j);
    }
    let mut g = Dag::new(n);
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random_bool(edge_prob) {
                g.add_edge(order[i], order[j]).expect("ordered edges are acyclic");
            }
        }
    }
    g
}

/// Seeded dataset with 2..=max_vars variables, arities up to max_arity,
/// and a randomly wired generating structure (possibly empty).
pub fn random_dataset(rng: &mut TestRng, max_vars: usize, max_arity: usize, max_rows: usize) -> Dataset {
    let n_vars = rng.random_range(2..=max_vars);
    let edge_prob = rng.random_range(0.0..0.8);
    let rows = rng.random_range(20..=max_rows);
    let net = random_net(rng, n_vars, max_arity, edge_prob);
    let seed = rng.random_range(0..u64::MAX);
    net.sample(rows, seed)
}

/// All simple undirected paths between `x` and `y`, each as a node sequence.
fn undirected_paths(g: &Dag, x: usize, y: usize) -> Vec<Vec<usize>> {
    let n = g.node_count();
    let mut neighbors: Vec<Vec<usize>> = vec![Vec::new(); n];
    for v in 0..n {
        for &p in g.parents(v) {
            neighbors[v].push(p);
        }
        for &c in g.children(v) {
            neighbors[v].push(c);
        }
        neighbors[v].sort_unstable();
        neighbors[v].dedup();
    }
    let mut paths = Vec::new();
    let mut stack = vec![x];
    let mut on_path = vec![false; n];
    on_path[x] = true;

    fn dfs(
        v: usize,
        y: usize,
        neighbors: &[Vec<usize>],
        stack: &mut Vec<usize>,
        on_path: &mut [bool],
        paths: &mut Vec<Vec<usize>>,
    ) {
        if v == y {
            paths.push(stack.clone());
            return;
        }
        for &w in &neighbors[v] {
            if !on_path[w] {
                on_path[w] = true;
                stack.push(w);
                dfs(w, y, neighbors, stack, on_path, paths);
                stack.pop();
                on_path[w] = false;
            }
        }
    }
    dfs(x, y, &neighbors, &mut stack, &mut on_path, &mut paths);
    paths
}

fn descendants(g: &Dag, v: usize) -> NodeSet {
    let mut out = NodeSet::new();
    let mut stack = vec![v];
    while let Some(u) = stack.pop() {
        for &c in g.children(u) {
            if out.insert(c) {
                stack.push(c);
            }
        }
    }
    out
}

/// Path-enumeration d-separation: every undirected path must be blocked,
/// where an interior node blocks as a non-collider in `z`, or as a
/// collider with neither itself nor any descendant in `z`.
pub fn d_separated_bruteforce(g: &Dag, x: usize, y: usize, z: &NodeSet) -> bool {
    for path in undirected_paths(g, x, y) {
        let mut blocked = false;
        for i in 1..path.len() - 1 {
            let (prev, w, next) = (path[i - 1], path[i], path[i + 1]);
            let is_collider = g.has_edge(prev, w) && g.has_edge(next, w);
            if is_collider {
                let opens = z.contains(&w) || descendants(g, w).iter().any(|d| z.contains(d));
                if !opens {
                    blocked = true;
                    break;
                }
            } else if z.contains(&w) {
                blocked = true;
                break;
            }
        }
        if !blocked {
            return false;
        }
    }
    true
}

/// The fixed five-node, two-tier benchmark network: two upstream drivers
/// feeding three downstream nodes with strong additive CPTs.
///
/// Edges: a->c, b->c, a->d, c->e, d->e. Tiers: {a, b} = 1, {c, d, e} = 2.
pub fn two_tier_net() -> SyntheticNet {
    let names = ["a", "b", "c", "d", "e"];
    let tiers = [1u32, 1, 2, 2, 2];
    let variables: Vec<Variable> = names
        .iter()
        .zip(tiers)
        .map(|(n, t)| Variable::new(*n, states(2)).with_tier(t))
        .collect();
    let dag = Dag::from_edges(
        5,
        [(0, 2), (1, 2), (0, 3), (2, 4), (3, 4)]
            .into_iter()
            .map(|(f, t)| Edge::new(f, t)),
    )
    .unwrap();

    let bernoulli = |p1: f64| vec![1.0 - p1, p1];
    let cpts = vec![
        vec![bernoulli(0.5)],
        vec![bernoulli(0.5)],
        // c | a, b: 0.10 + 0.35 a + 0.45 b
        vec![
            bernoulli(0.10),
            bernoulli(0.55),
            bernoulli(0.45),
            bernoulli(0.90),
        ],
        // d | a: 0.15 + 0.70 a
        vec![bernoulli(0.15), bernoulli(0.85)],
        // e | c, d: 0.05 + 0.40 c + 0.50 d
        vec![
            bernoulli(0.05),
            bernoulli(0.55),
            bernoulli(0.45),
            bernoulli(0.95),
        ],
    ];
    SyntheticNet {
        variables,
        dag,
        cpts,
    }
}

/// Undirected adjacency pairs of a DAG, each as (min, max).
pub fn skeleton(g: &Dag) -> std::collections::BTreeSet<(usize, usize)> {
    g.edges()
        .into_iter()
        .map(|e| (e.from.min(e.to), e.from.max(e.to)))
        .collect()
}

/// A three-tier network of `per_tier * 3` nodes for the scale test: tier-2
/// nodes take two tier-1 parents, tier-3 nodes one or two tier-2 parents.
pub fn scale_net(per_tier: usize) -> SyntheticNet {
    let n = per_tier * 3;
    let variables: Vec<Variable> = (0..n)
        .map(|i| {
            let tier = (i / per_tier + 1) as u32;
            let arity = if i % 4 == 0 { 3 } else { 2 };
            Variable::new(format!("v{i:02}"), (0..arity).map(|s| s.to_string()).collect())
                .with_tier(tier)
        })
        .collect();
    let mut dag = Dag::new(n);
    for i in 0..per_tier {
        let mid = per_tier + i;
        dag.add_edge(i, mid).unwrap();
        dag.add_edge((i + 3) % per_tier, mid).unwrap();
        let leaf = 2 * per_tier + i;
        dag.add_edge(mid, leaf).unwrap();
        if i % 2 == 0 {
            dag.add_edge(per_tier + (i + 1) % per_tier, leaf).unwrap();
        }
    }
    let cpts = (0..n)
        .map(|v| {
            let q: usize = dag.parents(v).iter().map(|&p| variables[p].arity()).product();
            let arity = variables[v].arity();
            (0..q)
                .map(|j| {
                    let dominant = (j + v) % arity;
                    let mut row = vec![0.1 / (arity - 1) as f64; arity];
                    row[dominant] = 0.9;
                    let total: f64 = row.iter().sum();
                    for p in &mut row {
                        *p /= total;
                    }
                    row
                })
                .collect()
        })
        .collect();
    SyntheticNet {
        variables,
        dag,
        cpts,
    }
}

/// Render a dataset back to CSV text (header plus decoded labels).
pub fn to_csv(d: &Dataset) -> String {
    let mut text = d
        .variables()
        .iter()
        .map(|v| v.name.clone())
        .collect::<Vec<_>>()
        .join(",");
    text.push('\n');
    for row in 0..d.row_count() {
        let line = (0..d.var_count())
            .map(|v| d.label(v, row).to_owned())
            .collect::<Vec<_>>()
            .join(",");
        text.push_str(&line);
        text.push('\n');
    }
    text
}

/// Peak resident set size of this process.
pub fn peak_rss_bytes() -> Option<u64> {
    #[cfg(target_os = "linux")]
    {
        // ru_maxrss is in kilobytes on Linux.
        let mut usage: libc::rusage = unsafe { std::mem::zeroed() };
        let rc = unsafe { libc::getrusage(libc::RUSAGE_SELF, &mut usage) };
        if rc == 0 && usage.ru_maxrss > 0 {
            return Some(usage.ru_maxrss as u64 * 1024);
        }
    }
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    for line in status.lines() {
        if let Some(rest) = line.strip_prefix("VmHWM:") {
            let kb: u64 = rest.trim().trim_end_matches("kB").trim().parse().ok()?;
            return Some(kb * 1024);
        }
    }
    None
}
