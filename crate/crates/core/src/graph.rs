//! Directed-graph core: a DAG that stays acyclic through guarded edits,
//! Markov blanket extraction, and a d-separation oracle.

use std::collections::BTreeSet;
use std::collections::VecDeque;
use std::fmt;

use crate::error::{Error, Result};

/// A directed edge between node indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
}

impl Edge {
    pub fn new(from: usize, to: usize) -> Self {
        Edge { from, to }
    }

    pub fn reversed(&self) -> Self {
        Edge {
            from: self.to,
            to: self.from,
        }
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -> {}", self.from, self.to)
    }
}

/// One hill-climbing edit. The derived order (add < delete < reverse,
/// then lexicographic by endpoints) is the deterministic tie-break order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Move {
    Add(Edge),
    Delete(Edge),
    Reverse(Edge),
}

impl Move {
    pub fn edge(&self) -> Edge {
        match self {
            Move::Add(e) | Move::Delete(e) | Move::Reverse(e) => *e,
        }
    }
}

impl fmt::Display for Move {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Move::Add(e) => write!(f, "add {e}"),
            Move::Delete(e) => write!(f, "delete {e}"),
            Move::Reverse(e) => write!(f, "reverse {e}"),
        }
    }
}

/// A set of node indices.
pub type NodeSet = BTreeSet<usize>;

/// Directed acyclic graph over integer node indices. Every mutation is
/// guarded: self-loops, duplicate edges, and cycle-closing edges are
/// rejected, so a `Dag` value is acyclic by construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dag {
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
    edge_count: usize,
}

impl Dag {
    /// An edgeless graph over `node_count` nodes.
    pub fn new(node_count: usize) -> Self {
        Dag {
            parents: vec![Vec::new(); node_count],
            children: vec![Vec::new(); node_count],
            edge_count: 0,
        }
    }

    /// Build a graph from an edge list, rejecting cycles and duplicates.
    pub fn from_edges<I: IntoIterator<Item = Edge>>(node_count: usize, edges: I) -> Result<Self> {
        let mut g = Dag::new(node_count);
        for e in edges {
            g.add_edge(e.from, e.to)?;
        }
        Ok(g)
    }

    pub fn node_count(&self) -> usize {
        self.parents.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    fn check_node(&self, index: usize) -> Result<()> {
        if index >= self.node_count() {
            return Err(Error::InvalidNode {
                index,
                node_count: self.node_count(),
            });
        }
        Ok(())
    }

    /// Sorted parent indices of `node`.
    pub fn parents(&self, node: usize) -> &[usize] {
        &self.parents[node]
    }

    /// Sorted child indices of `node`.
    pub fn children(&self, node: usize) -> &[usize] {
        &self.children[node]
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        from < self.node_count() && self.children[from].binary_search(&to).is_ok()
    }

    /// All edges in lexicographic (from, to) order.
    pub fn edges(&self) -> Vec<Edge> {
        let mut out = Vec::with_capacity(self.edge_count);
        for (from, children) in self.children.iter().enumerate() {
            for &to in children {
                out.push(Edge::new(from, to));
            }
        }
        out
    }

    /// Would adding `from -> to` close a directed cycle? True iff a
    /// directed path `to -> ... -> from` already exists. The graph is not
    /// modified.
    pub fn would_create_cycle(&self, from: usize, to: usize) -> bool {
        if from == to {
            return true;
        }
        self.reachable(to, from, None)
    }

    /// Would reversing an existing edge `from -> to` close a cycle? True
    /// iff a directed path `from -> ... -> to` survives with the direct
    /// edge removed.
    pub fn would_reversal_create_cycle(&self, from: usize, to: usize) -> bool {
        self.reachable(from, to, Some(Edge::new(from, to)))
    }

    /// BFS over children from `start` looking for `goal`, optionally
    /// ignoring one edge.
    fn reachable(&self, start: usize, goal: usize, skip: Option<Edge>) -> bool {
        if start == goal {
            return true;
        }
        let mut seen = vec![false; self.node_count()];
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        while let Some(u) = queue.pop_front() {
            for &v in &self.children[u] {
                if skip.is_some_and(|e| e.from == u && e.to == v) {
                    continue;
                }
                if v == goal {
                    return true;
                }
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        false
    }

    pub fn add_edge(&mut self, from: usize, to: usize) -> Result<()> {
        self.check_node(from)?;
        self.check_node(to)?;
        if from == to {
            return Err(Error::EdgeRejected {
                from,
                to,
                message: "self-loop".into(),
            });
        }
        if self.has_edge(from, to) {
            return Err(Error::EdgeRejected {
                from,
                to,
                message: "edge already present".into(),
            });
        }
        if self.would_create_cycle(from, to) {
            return Err(Error::CycleDetected(format!(
                "adding {from} -> {to} closes a directed cycle"
            )));
        }
        let pos = self.children[from].binary_search(&to).unwrap_err();
        self.children[from].insert(pos, to);
        let pos = self.parents[to].binary_search(&from).unwrap_err();
        self.parents[to].insert(pos, from);
        self.edge_count += 1;
        Ok(())
    }

    pub fn remove_edge(&mut self, from: usize, to: usize) -> Result<()> {
        self.check_node(from)?;
        self.check_node(to)?;
        match self.children[from].binary_search(&to) {
            Ok(pos) => {
                self.children[from].remove(pos);
                let pos = self.parents[to].binary_search(&from).unwrap();
                self.parents[to].remove(pos);
                self.edge_count -= 1;
                Ok(())
            }
            Err(_) => Err(Error::EdgeRejected {
                from,
                to,
                message: "edge not present".into(),
            }),
        }
    }

    /// Reverse an existing edge, rejecting the move if the reversal would
    /// close a cycle. The graph is left unchanged on error.
    pub fn reverse_edge(&mut self, from: usize, to: usize) -> Result<()> {
        if !self.has_edge(from, to) {
            return Err(Error::EdgeRejected {
                from,
                to,
                message: "edge not present".into(),
            });
        }
        if self.would_reversal_create_cycle(from, to) {
            return Err(Error::CycleDetected(format!(
                "reversing {from} -> {to} closes a directed cycle"
            )));
        }
        self.remove_edge(from, to)?;
        self.add_edge(to, from)?;
        Ok(())
    }

    /// Apply a hill-climbing move. Legality is checked by the underlying
    /// guarded edit.
    pub fn apply_move(&mut self, mv: &Move) -> Result<()> {
        match mv {
            Move::Add(e) => self.add_edge(e.from, e.to),
            Move::Delete(e) => self.remove_edge(e.from, e.to),
            Move::Reverse(e) => self.reverse_edge(e.from, e.to),
        }
    }

    /// Full-graph acyclicity check by Kahn's algorithm. Mutations already
    /// guarantee this; tests use it to cross-check the incremental guard.
    pub fn verify_acyclic(&self) -> bool {
        self.kahn_order().is_some()
    }

    fn kahn_order(&self) -> Option<Vec<usize>> {
        let n = self.node_count();
        let mut indegree: Vec<usize> = (0..n).map(|v| self.parents[v].len()).collect();
        // Min-index first for a deterministic order.
        let mut ready: BTreeSet<usize> = (0..n).filter(|&v| indegree[v] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(&v) = ready.iter().next() {
            ready.remove(&v);
            order.push(v);
            for &c in &self.children[v] {
                indegree[c] -= 1;
                if indegree[c] == 0 {
                    ready.insert(c);
                }
            }
        }
        (order.len() == n).then_some(order)
    }

    /// Topological order with ties broken by ascending node index.
    pub fn topological_order(&self) -> Result<Vec<usize>> {
        self.kahn_order()
            .ok_or_else(|| Error::CycleDetected("graph contains a directed cycle".into()))
    }

    /// Markov blanket of `target`: parents, children, and the children's
    /// other parents.
    pub fn markov_blanket(&self, target: usize) -> Result<NodeSet> {
        self.check_node(target)?;
        let mut mb: NodeSet = self.parents[target].iter().copied().collect();
        for &child in &self.children[target] {
            mb.insert(child);
            mb.extend(self.parents[child].iter().copied());
        }
        mb.remove(&target);
        Ok(mb)
    }

    /// Restrict the graph to `targets` plus the union of their Markov
    /// blankets. Returns the subgraph and the retained original indices in
    /// ascending order (new index `i` corresponds to `mapping[i]`).
    pub fn mb_subgraph(&self, targets: &NodeSet) -> Result<(Dag, Vec<usize>)> {
        if targets.is_empty() {
            return Err(Error::InvalidArgument(
                "mb_subgraph requires at least one target".into(),
            ));
        }
        let mut retained = NodeSet::new();
        for &t in targets {
            retained.insert(t);
            retained.extend(self.markov_blanket(t)?);
        }
        let mapping: Vec<usize> = retained.iter().copied().collect();
        let new_index: std::collections::HashMap<usize, usize> = mapping
            .iter()
            .enumerate()
            .map(|(new, &old)| (old, new))
            .collect();
        let mut sub = Dag::new(mapping.len());
        for e in self.edges() {
            if let (Some(&f), Some(&t)) = (new_index.get(&e.from), new_index.get(&e.to)) {
                sub.add_edge(f, t)?;
            }
        }
        Ok((sub, mapping))
    }

    /// Ancestors of every node in `seeds`, including the seeds.
    fn ancestral_set(&self, seeds: &NodeSet) -> Vec<bool> {
        let mut mask = vec![false; self.node_count()];
        let mut stack: Vec<usize> = seeds.iter().copied().collect();
        for &s in seeds {
            mask[s] = true;
        }
        while let Some(v) = stack.pop() {
            for &p in &self.parents[v] {
                if !mask[p] {
                    mask[p] = true;
                    stack.push(p);
                }
            }
        }
        mask
    }

    /// Is `x` d-separated from `y` given `z`?
    ///
    /// Decided on the moralized ancestral graph of `{x, y} ∪ z`: connect
    /// each node to its parents, marry co-parents, drop `z`, and test
    /// undirected connectivity. Disconnected iff every path between `x`
    /// and `y` is blocked under the chain/fork/collider rules.
    pub fn d_separated(&self, x: usize, y: usize, z: &NodeSet) -> Result<bool> {
        self.check_node(x)?;
        self.check_node(y)?;
        for &v in z {
            self.check_node(v)?;
        }
        if x == y {
            return Err(Error::InvalidArgument("d_separated requires x != y".into()));
        }
        if z.contains(&x) || z.contains(&y) {
            return Err(Error::InvalidArgument(
                "conditioning set must not contain x or y".into(),
            ));
        }

        let mut seeds: NodeSet = z.clone();
        seeds.insert(x);
        seeds.insert(y);
        let mask = self.ancestral_set(&seeds);

        let n = self.node_count();
        let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
        for v in 0..n {
            if !mask[v] {
                continue;
            }
            let pa = &self.parents[v];
            for &p in pa {
                // Parents of an ancestral node are ancestral too.
                adj[v].insert(p);
                adj[p].insert(v);
            }
            for (i, &p1) in pa.iter().enumerate() {
                for &p2 in &pa[i + 1..] {
                    adj[p1].insert(p2);
                    adj[p2].insert(p1);
                }
            }
        }

        let blocked: Vec<bool> = (0..n).map(|v| z.contains(&v)).collect();
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([x]);
        seen[x] = true;
        while let Some(u) = queue.pop_front() {
            if u == y {
                return Ok(false);
            }
            for &w in &adj[u] {
                if !seen[w] && !blocked[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        Ok(true)
    }
}
