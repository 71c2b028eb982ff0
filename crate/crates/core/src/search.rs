//! Hill-climbing structure search under prior-knowledge constraints, plus
//! an exhaustive-search oracle for toy instances.
//!
//! The search walks the space of DAGs by adding, deleting, or reversing
//! single edges, always taking the move with the largest strictly positive
//! score gain, and halts at a local optimum or the iteration cap.

use std::collections::BTreeSet;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::graph::{Dag, Edge, Move};
use crate::scoring::{delta_score, total_bic, ScoreCache};

/// Hard prior knowledge: edges that must never appear and edges that must
/// always appear.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConstraintSet {
    forbidden: BTreeSet<Edge>,
    required: BTreeSet<Edge>,
}

impl ConstraintSet {
    /// No constraints at all.
    pub fn unconstrained() -> Self {
        Self::default()
    }

    /// Validates that neither set contains self-loops, the sets are
    /// disjoint, and the required edges are themselves acyclic.
    pub fn new(forbidden: BTreeSet<Edge>, required: BTreeSet<Edge>) -> Result<Self> {
        for e in forbidden.iter().chain(&required) {
            if e.from == e.to {
                return Err(Error::InvalidConstraints(format!("self-loop {e}")));
            }
        }
        if let Some(e) = forbidden.intersection(&required).next() {
            return Err(Error::InvalidConstraints(format!(
                "edge {e} is both forbidden and required"
            )));
        }
        let max_node = required
            .iter()
            .map(|e| e.from.max(e.to) + 1)
            .max()
            .unwrap_or(0);
        Dag::from_edges(max_node, required.iter().copied())
            .map_err(|_| Error::InvalidConstraints("required edges form a cycle".into()))?;
        Ok(ConstraintSet {
            forbidden,
            required,
        })
    }

    pub fn forbidden(&self) -> &BTreeSet<Edge> {
        &self.forbidden
    }

    pub fn required(&self) -> &BTreeSet<Edge> {
        &self.required
    }

    pub fn is_forbidden(&self, e: Edge) -> bool {
        self.forbidden.contains(&e)
    }

    pub fn is_required(&self, e: Edge) -> bool {
        self.required.contains(&e)
    }

    /// Check that `g` contains every required edge and no forbidden one.
    pub fn validate_graph(&self, g: &Dag) -> Result<()> {
        for e in &self.required {
            if !g.has_edge(e.from, e.to) {
                return Err(Error::ConstraintViolation(format!(
                    "required edge {e} is missing"
                )));
            }
        }
        for e in &self.forbidden {
            if g.has_edge(e.from, e.to) {
                return Err(Error::ConstraintViolation(format!(
                    "forbidden edge {e} is present"
                )));
            }
        }
        Ok(())
    }

    fn max_node(&self) -> usize {
        self.forbidden
            .iter()
            .chain(&self.required)
            .map(|e| e.from.max(e.to) + 1)
            .max()
            .unwrap_or(0)
    }
}

/// Tier assignment per variable index; tier 1 is the most upstream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TierSpec {
    tiers: Vec<u32>,
}

impl TierSpec {
    pub fn new(tiers: Vec<u32>) -> Result<Self> {
        if let Some(i) = tiers.iter().position(|&t| t == 0) {
            return Err(Error::InvalidArgument(format!(
                "tier of variable {i} must be >= 1"
            )));
        }
        Ok(TierSpec { tiers })
    }

    pub fn tier(&self, index: usize) -> u32 {
        self.tiers[index]
    }

    pub fn len(&self) -> usize {
        self.tiers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tiers.is_empty()
    }
}

/// Compile tiers into forbidden edges: a node in a later (downstream) tier
/// can never be a cause of a node in an earlier tier. Edges within a tier
/// stay unconstrained and nothing is required.
pub fn tiers_to_constraints(tiers: &TierSpec) -> ConstraintSet {
    let mut forbidden = BTreeSet::new();
    for from in 0..tiers.len() {
        for to in 0..tiers.len() {
            if from != to && tiers.tier(from) > tiers.tier(to) {
                forbidden.insert(Edge::new(from, to));
            }
        }
    }
    ConstraintSet {
        forbidden,
        required: BTreeSet::new(),
    }
}

/// Initial graph for the search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StartGraph {
    Empty,
    #[default]
    RequiredOnly,
}

/// Knobs for a single hill-climbing run.
#[derive(Debug, Clone)]
pub struct SearchConfig {
    /// Recorded for provenance; a single greedy run is deterministic and
    /// does not consume randomness itself.
    pub seed: u64,
    /// Iteration cap; `None` means 10 * n^2 for n variables.
    pub max_iterations: Option<usize>,
    pub start: StartGraph,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            seed: 0,
            max_iterations: None,
            start: StartGraph::RequiredOnly,
        }
    }
}

/// One accepted move: the move, its score gain, and the cumulative score
/// after applying it.
#[derive(Debug, Clone)]
pub struct TraceStep {
    pub mv: Move,
    pub delta: f64,
    pub score: f64,
}

/// Record of a hill-climbing run. Deltas are strictly positive and the
/// cumulative scores strictly increase.
#[derive(Debug, Clone)]
pub struct SearchTrace {
    pub initial_score: f64,
    pub steps: Vec<TraceStep>,
    pub final_score: f64,
    /// True when the run stopped at the iteration cap rather than at a
    /// local optimum.
    pub hit_iteration_cap: bool,
}

/// Every legal single-edge move on `g` under `c`, in deterministic order:
/// adds, then deletes, then reverses, each lexicographic by endpoints.
///
/// Adds must be absent, non-forbidden, and acyclic; deletes must not touch
/// required edges; reverses must not touch required edges and the reversed
/// edge must be non-forbidden and acyclic.
pub fn legal_moves(g: &Dag, c: &ConstraintSet) -> Result<Vec<Move>> {
    c.validate_graph(g)?;
    let n = g.node_count();
    let mut moves = Vec::new();
    for from in 0..n {
        for to in 0..n {
            if from == to {
                continue;
            }
            let e = Edge::new(from, to);
            if !g.has_edge(from, to) && !c.is_forbidden(e) && !g.would_create_cycle(from, to) {
                moves.push(Move::Add(e));
            }
        }
    }
    for e in g.edges() {
        if !c.is_required(e) {
            moves.push(Move::Delete(e));
        }
    }
    for e in g.edges() {
        if !c.is_required(e)
            && !c.is_forbidden(e.reversed())
            && !g.would_reversal_create_cycle(e.from, e.to)
        {
            moves.push(Move::Reverse(e));
        }
    }
    debug_assert!(moves.windows(2).all(|w| w[0] < w[1]));
    Ok(moves)
}

fn start_graph(n: usize, c: &ConstraintSet, start: StartGraph) -> Result<Dag> {
    match start {
        StartGraph::Empty => Ok(Dag::new(n)),
        StartGraph::RequiredOnly => Dag::from_edges(n, c.required().iter().copied()),
    }
}

/// Greedy hill-climbing over the BIC score.
///
/// Starting from `cfg.start`, each iteration applies the legal move with
/// the largest strictly positive score gain (ties broken by the
/// deterministic move order) and halts when no move improves the score or
/// the iteration cap is reached. The returned graph satisfies `c` and the
/// trace's final score equals its total BIC.
pub fn hill_climb(
    d: &Dataset,
    c: &ConstraintSet,
    cfg: &SearchConfig,
    cache: &mut ScoreCache,
) -> Result<(Dag, SearchTrace)> {
    if d.row_count() == 0 {
        return Err(Error::EmptyDataset);
    }
    let n = d.var_count();
    if c.max_node() > n {
        return Err(Error::InvalidConstraints(format!(
            "constraints reference node {} but the dataset has {} variables",
            c.max_node() - 1,
            n
        )));
    }
    if let Some(0) = cfg.max_iterations {
        return Err(Error::InvalidArgument("max_iterations must be >= 1".into()));
    }
    let max_iterations = cfg.max_iterations.unwrap_or(10 * n * n).max(1);

    let mut g = start_graph(n, c, cfg.start)?;
    c.validate_graph(&g)?;

    let initial_score = total_bic(d, &g, cache)?;
    let mut score = initial_score;
    let mut steps = Vec::new();
    let mut hit_iteration_cap = false;

    for iteration in 0.. {
        if iteration >= max_iterations {
            hit_iteration_cap = true;
            break;
        }
        let mut best: Option<(f64, Move)> = None;
        for mv in legal_moves(&g, c)? {
            let delta = delta_score(d, &g, &mv, cache)?;
            // Strictly-greater keeps the earliest move on ties.
            if delta > 0.0 && best.is_none_or(|(b, _)| delta > b) {
                best = Some((delta, mv));
            }
        }
        let Some((delta, mv)) = best else {
            break;
        };
        g.apply_move(&mv)?;
        score += delta;
        steps.push(TraceStep { mv, delta, score });
    }

    let final_score = total_bic(d, &g, cache)?;
    Ok((
        g,
        SearchTrace {
            initial_score,
            steps,
            final_score,
            hit_iteration_cap,
        },
    ))
}

/// Result of an exhaustive enumeration.
#[derive(Debug, Clone)]
pub struct ExhaustiveResult {
    pub dag: Dag,
    pub score: f64,
    /// Number of constraint-satisfying DAGs enumerated.
    pub dags_considered: usize,
}

/// Hard limit on the exhaustive oracle's variable count.
pub const EXHAUSTIVE_VAR_LIMIT: usize = 5;

/// Global optimum by enumerating every labeled DAG satisfying `c`.
///
/// Only feasible at toy scale; refuses more than
/// `min(max_vars, EXHAUSTIVE_VAR_LIMIT)` variables. Score ties are broken
/// toward the lexicographically smallest edge set.
pub fn exhaustive_search(d: &Dataset, c: &ConstraintSet, max_vars: usize) -> Result<ExhaustiveResult> {
    let limit = max_vars.min(EXHAUSTIVE_VAR_LIMIT);
    let n = d.var_count();
    if n > limit {
        return Err(Error::TooManyVariables {
            variables: n,
            limit,
        });
    }
    if d.row_count() == 0 {
        return Err(Error::EmptyDataset);
    }
    if c.max_node() > n {
        return Err(Error::InvalidConstraints(format!(
            "constraints reference node {} but the dataset has {} variables",
            c.max_node() - 1,
            n
        )));
    }

    // Candidate edges: every ordered pair that is not forbidden.
    let candidates: Vec<Edge> = (0..n)
        .flat_map(|from| (0..n).map(move |to| Edge::new(from, to)))
        .filter(|e| e.from != e.to && !c.is_forbidden(*e))
        .collect();
    for e in c.required() {
        if !candidates.contains(e) {
            return Err(Error::InvalidConstraints(format!(
                "required edge {e} is forbidden"
            )));
        }
    }
    let required_mask: u64 = candidates
        .iter()
        .enumerate()
        .filter(|(_, e)| c.is_required(**e))
        .map(|(i, _)| 1u64 << i)
        .sum();

    let mut cache = ScoreCache::new();
    let mut best: Option<(f64, Vec<Edge>, Dag)> = None;
    let mut dags_considered = 0usize;

    'masks: for mask in 0..(1u64 << candidates.len()) {
        if mask & required_mask != required_mask {
            continue;
        }
        let edges: Vec<Edge> = candidates
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, e)| *e)
            .collect();
        let mut g = Dag::new(n);
        for e in &edges {
            if g.add_edge(e.from, e.to).is_err() {
                continue 'masks; // cyclic
            }
        }
        dags_considered += 1;
        let score = total_bic(d, &g, &mut cache)?;
        let better = match &best {
            None => true,
            Some((best_score, best_edges, _)) => {
                score > *best_score || (score == *best_score && g.edges() < *best_edges)
            }
        };
        if better {
            best = Some((score, g.edges(), g));
        }
    }

    let (score, _, dag) = best.expect("the empty graph always satisfies the constraints");
    Ok(ExhaustiveResult {
        dag,
        score,
        dags_considered,
    })
}
