//! Decomposable BIC scoring of a DAG against a discrete dataset.
//!
//! The score of a graph is the sum over nodes of a local family score
//!
//! ```text
//! local(child | parents) = sum_jk N_jk ln(N_jk / N_j)  -  (ln N / 2) q (r - 1)
//! ```
//!
//! where `N_jk` counts rows with parent configuration `j` and child state
//! `k`, `q` is the number of parent configurations, and `r` the child
//! arity. Natural logarithms throughout; maximization convention. Local
//! scores are memoized per (child, sorted parent set), which is what makes
//! repeated rescoring during search tractable.

use std::collections::HashMap;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::graph::{Dag, Edge, Move};

/// Largest allowed contingency table (configurations x child states).
/// Anything bigger signals a runaway parent set.
const MAX_TABLE_CELLS: usize = 1 << 24;

/// Cache key: a child and its canonically sorted parent set.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LocalScoreKey {
    child: usize,
    parents: Vec<usize>,
}

impl LocalScoreKey {
    pub fn new(child: usize, parents: &[usize]) -> Self {
        let mut parents = parents.to_vec();
        parents.sort_unstable();
        debug_assert!(!parents.contains(&child));
        LocalScoreKey { child, parents }
    }
}

/// Memo of local scores. A cached value is bit-identical to a fresh
/// recomputation on the same dataset; confine one cache per dataset.
#[derive(Debug, Default)]
pub struct ScoreCache {
    map: HashMap<LocalScoreKey, f64>,
}

impl ScoreCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

/// Observed counts for one family, indexed by parent configuration and
/// child state.
#[derive(Debug, Clone)]
pub struct ContingencyTable {
    child_arity: usize,
    config_count: usize,
    /// `counts[j * child_arity + k]` = rows with parent config `j`, child state `k`.
    counts: Vec<u64>,
    /// Per-configuration marginals `N_j`.
    config_totals: Vec<u64>,
}

impl ContingencyTable {
    pub fn child_arity(&self) -> usize {
        self.child_arity
    }

    /// Number of parent configurations `q` (product of parent arities).
    pub fn config_count(&self) -> usize {
        self.config_count
    }

    pub fn count(&self, config: usize, state: usize) -> u64 {
        self.counts[config * self.child_arity + state]
    }

    pub fn config_total(&self, config: usize) -> u64 {
        self.config_totals[config]
    }
}

/// Tally the contingency table of `child` given `parents`.
///
/// The configuration index is the mixed-radix number of the parent state
/// indices in canonical (ascending) parent order, first parent most
/// significant.
pub fn count_family(d: &Dataset, child: usize, parents: &[usize]) -> Result<ContingencyTable> {
    let n_vars = d.var_count();
    if child >= n_vars {
        return Err(Error::InvalidNode {
            index: child,
            node_count: n_vars,
        });
    }
    let mut parents = parents.to_vec();
    parents.sort_unstable();
    parents.dedup();
    if parents.contains(&child) {
        return Err(Error::InvalidArgument(format!(
            "child {child} cannot be its own parent"
        )));
    }
    if let Some(&bad) = parents.iter().find(|&&p| p >= n_vars) {
        return Err(Error::InvalidNode {
            index: bad,
            node_count: n_vars,
        });
    }

    let r = d.variables()[child].arity().max(1);
    let mut q: usize = 1;
    for &p in &parents {
        q = q
            .checked_mul(d.variables()[p].arity().max(1))
            .filter(|&q| q.saturating_mul(r) <= MAX_TABLE_CELLS)
            .ok_or_else(|| Error::ParentSetTooLarge {
                child,
                parents: parents.clone(),
            })?;
    }

    let mut counts = vec![0u64; q * r];
    let mut config_totals = vec![0u64; q];
    let child_col = d.column(child);
    let parent_cols: Vec<(&[u32], usize)> = parents
        .iter()
        .map(|&p| (d.column(p), d.variables()[p].arity()))
        .collect();

    for row in 0..d.row_count() {
        let mut config = 0usize;
        for (col, arity) in &parent_cols {
            config = config * arity + col[row] as usize;
        }
        counts[config * r + child_col[row] as usize] += 1;
        config_totals[config] += 1;
    }

    Ok(ContingencyTable {
        child_arity: r,
        config_count: q,
        counts,
        config_totals,
    })
}

fn compute_local_bic(d: &Dataset, child: usize, parents: &[usize]) -> Result<f64> {
    let n = d.row_count();
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    let table = count_family(d, child, parents)?;
    let r = table.child_arity;
    let mut log_likelihood = 0.0;
    for j in 0..table.config_count {
        let nj = table.config_totals[j];
        if nj == 0 {
            // Unobserved configurations contribute no likelihood but still
            // count toward the penalty's q.
            continue;
        }
        let nj = nj as f64;
        for k in 0..r {
            let njk = table.counts[j * r + k];
            if njk > 0 {
                let njk = njk as f64;
                log_likelihood += njk * (njk / nj).ln();
            }
        }
    }
    let penalty = (n as f64).ln() / 2.0 * table.config_count as f64 * (r - 1) as f64;
    Ok(log_likelihood - penalty)
}

/// Local BIC of `child` given `parents`, memoized in `cache`.
pub fn local_bic(
    d: &Dataset,
    child: usize,
    parents: &[usize],
    cache: &mut ScoreCache,
) -> Result<f64> {
    let key = LocalScoreKey::new(child, parents);
    if let Some(&score) = cache.map.get(&key) {
        return Ok(score);
    }
    let score = compute_local_bic(d, child, parents)?;
    cache.map.insert(key, score);
    Ok(score)
}

/// Local BIC without memoization; same computation path as [`local_bic`].
pub fn local_bic_uncached(d: &Dataset, child: usize, parents: &[usize]) -> Result<f64> {
    compute_local_bic(d, child, parents)
}

/// Total BIC of `g`: the sum of local scores in node order.
pub fn total_bic(d: &Dataset, g: &Dag, cache: &mut ScoreCache) -> Result<f64> {
    if g.node_count() != d.var_count() {
        return Err(Error::InvalidArgument(format!(
            "graph has {} nodes but dataset has {} variables",
            g.node_count(),
            d.var_count()
        )));
    }
    let mut total = 0.0;
    for v in 0..g.node_count() {
        total += local_bic(d, v, g.parents(v), cache)?;
    }
    Ok(total)
}

fn illegal(mv: &Move, reason: &str) -> Error {
    Error::IllegalMove {
        description: mv.to_string(),
        reason: reason.into(),
    }
}

fn with_parent(parents: &[usize], add: usize) -> Vec<usize> {
    let mut out = parents.to_vec();
    out.push(add);
    out.sort_unstable();
    out
}

fn without_parent(parents: &[usize], remove: usize) -> Vec<usize> {
    parents.iter().copied().filter(|&p| p != remove).collect()
}

/// Score change of applying `mv` to `g`, equal to
/// `total_bic(g after) - total_bic(g before)`.
///
/// Decomposability means only the families whose parent sets change are
/// rescored: the child for add/delete, both endpoints for reverse.
pub fn delta_score(d: &Dataset, g: &Dag, mv: &Move, cache: &mut ScoreCache) -> Result<f64> {
    let Edge { from, to } = mv.edge();
    let n = g.node_count();
    if from >= n || to >= n {
        return Err(illegal(mv, "endpoint out of range"));
    }
    if from == to {
        return Err(illegal(mv, "self-loop"));
    }
    match mv {
        Move::Add(_) => {
            if g.has_edge(from, to) {
                return Err(illegal(mv, "edge already present"));
            }
            if g.would_create_cycle(from, to) {
                return Err(illegal(mv, "would create a cycle"));
            }
            let old = local_bic(d, to, g.parents(to), cache)?;
            let new = local_bic(d, to, &with_parent(g.parents(to), from), cache)?;
            Ok(new - old)
        }
        Move::Delete(_) => {
            if !g.has_edge(from, to) {
                return Err(illegal(mv, "edge not present"));
            }
            let old = local_bic(d, to, g.parents(to), cache)?;
            let new = local_bic(d, to, &without_parent(g.parents(to), from), cache)?;
            Ok(new - old)
        }
        Move::Reverse(_) => {
            if !g.has_edge(from, to) {
                return Err(illegal(mv, "edge not present"));
            }
            if g.would_reversal_create_cycle(from, to) {
                return Err(illegal(mv, "would create a cycle"));
            }
            let from_old = local_bic(d, from, g.parents(from), cache)?;
            let from_new = local_bic(d, from, &with_parent(g.parents(from), to), cache)?;
            let to_old = local_bic(d, to, g.parents(to), cache)?;
            let to_new = local_bic(d, to, &without_parent(g.parents(to), from), cache)?;
            Ok((from_new - from_old) + (to_new - to_old))
        }
    }
}
