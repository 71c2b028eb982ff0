//! Bootstrap model averaging: learn many graphs from resampled data,
//! tabulate directed-edge frequencies, and keep only the edges that clear
//! a frequency threshold.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::graph::{Dag, Edge};
use crate::scoring::ScoreCache;
use crate::search::{hill_climb, ConstraintSet, SearchConfig, StartGraph};

/// Ensemble knobs. Defaults follow the 100-run, 90%-threshold recipe.
#[derive(Debug, Clone)]
pub struct EnsembleConfig {
    pub runs: usize,
    /// Edge retention threshold in (0, 1].
    pub threshold: f64,
    /// Run `i` resamples and searches with seed `base_seed + i`.
    pub base_seed: u64,
    /// Maximum concurrent runs.
    pub workers: usize,
    /// Per-run iteration cap passed through to the search.
    pub max_iterations: Option<usize>,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        EnsembleConfig {
            runs: 100,
            threshold: 0.9,
            base_seed: 0,
            workers: std::thread::available_parallelism().map_or(1, usize::from),
            max_iterations: None,
        }
    }
}

impl EnsembleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.runs < 1 {
            return Err(Error::InvalidArgument("runs must be >= 1".into()));
        }
        if !(self.threshold > 0.0 && self.threshold <= 1.0) {
            return Err(Error::InvalidArgument(
                "threshold must be in (0, 1]".into(),
            ));
        }
        if self.workers < 1 {
            return Err(Error::InvalidArgument("workers must be >= 1".into()));
        }
        Ok(())
    }
}

/// Outcome of one ensemble run.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub run_index: usize,
    pub seed: u64,
    pub final_score: f64,
    pub edge_count: usize,
    pub moves: usize,
    pub hit_iteration_cap: bool,
}

/// Occurrence count of each directed edge across the ensemble. An edge and
/// its reversal are tallied separately.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeFrequencyTable {
    node_count: usize,
    runs: usize,
    counts: BTreeMap<Edge, u32>,
}

impl EdgeFrequencyTable {
    pub fn new(node_count: usize, runs: usize, counts: BTreeMap<Edge, u32>) -> Result<Self> {
        if runs < 1 {
            return Err(Error::InvalidArgument("runs must be >= 1".into()));
        }
        for (e, &count) in &counts {
            if e.from >= node_count || e.to >= node_count || e.from == e.to {
                return Err(Error::InvalidArgument(format!("invalid edge {e}")));
            }
            if count as usize > runs {
                return Err(Error::InvalidArgument(format!(
                    "count {count} for edge {e} exceeds {runs} runs"
                )));
            }
        }
        Ok(EdgeFrequencyTable {
            node_count,
            runs,
            counts,
        })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn runs(&self) -> usize {
        self.runs
    }

    pub fn count(&self, e: Edge) -> u32 {
        self.counts.get(&e).copied().unwrap_or(0)
    }

    pub fn frequency(&self, e: Edge) -> f64 {
        self.count(e) as f64 / self.runs as f64
    }

    /// Edges with nonzero counts, in lexicographic order.
    pub fn iter(&self) -> impl Iterator<Item = (Edge, u32)> + '_ {
        self.counts.iter().map(|(&e, &c)| (e, c))
    }
}

/// Run `cfg.runs` independent bootstrap + hill-climbing passes and tally
/// how often each directed edge appears.
///
/// Run `i` resamples with seed `base_seed + i` and searches under the same
/// constraints; results are keyed by run index, so the table is identical
/// regardless of worker scheduling. Any failing run aborts the ensemble.
pub fn learn_ensemble(
    d: &Dataset,
    c: &ConstraintSet,
    cfg: &EnsembleConfig,
) -> Result<(EdgeFrequencyTable, Vec<RunSummary>)> {
    cfg.validate()?;
    if d.row_count() == 0 {
        return Err(Error::EmptyDataset);
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("worker pool: {e}")))?;

    let run_one = |i: usize| -> Result<(Dag, RunSummary)> {
        let seed = cfg.base_seed.wrapping_add(i as u64);
        let resample = d.bootstrap_sample(seed)?;
        let search_cfg = SearchConfig {
            seed,
            max_iterations: cfg.max_iterations,
            start: StartGraph::RequiredOnly,
        };
        let mut cache = ScoreCache::new();
        let (g, trace) = hill_climb(&resample, c, &search_cfg, &mut cache)?;
        let summary = RunSummary {
            run_index: i,
            seed,
            final_score: trace.final_score,
            edge_count: g.edge_count(),
            moves: trace.steps.len(),
            hit_iteration_cap: trace.hit_iteration_cap,
        };
        Ok((g, summary))
    };

    let results: Vec<(Dag, RunSummary)> = pool.install(|| {
        (0..cfg.runs)
            .into_par_iter()
            .map(|i| {
                run_one(i).map_err(|e| Error::EnsembleRun {
                    run: i,
                    source: Box::new(e),
                })
            })
            .collect::<Result<_>>()
    })?;

    let mut counts: BTreeMap<Edge, u32> = BTreeMap::new();
    let mut summaries = Vec::with_capacity(cfg.runs);
    for (g, summary) in results {
        for e in g.edges() {
            *counts.entry(e).or_insert(0) += 1;
        }
        summaries.push(summary);
    }

    let table = EdgeFrequencyTable::new(d.var_count(), cfg.runs, counts)?;
    Ok((table, summaries))
}

/// The thresholded average of an ensemble: a DAG of the edges that
/// appeared often enough, annotated with their frequencies.
#[derive(Debug, Clone)]
pub struct AveragedGraph {
    pub dag: Dag,
    /// Frequency (count / runs) per retained edge.
    pub frequencies: BTreeMap<Edge, f64>,
    /// Edges removed by cycle repair, lowest-frequency first. Expected to
    /// stay empty for thresholds above one half.
    pub dropped_in_repair: Vec<Edge>,
}

/// Retain exactly the edges whose frequency reaches `threshold`.
///
/// Thresholds above 0.5 cannot retain both directions of a pair, and
/// cycles among high-frequency edges are unlikely; if either happens the
/// repair removes the lowest-frequency edge of each cycle (ties broken
/// lexicographically) until the result is acyclic.
pub fn average_graph(table: &EdgeFrequencyTable, threshold: f64) -> Result<AveragedGraph> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::InvalidArgument("threshold must be in (0, 1]".into()));
    }

    let mut retained: Vec<Edge> = table
        .iter()
        .filter(|&(e, _)| table.frequency(e) >= threshold)
        .map(|(e, _)| e)
        .collect();

    let mut dropped = Vec::new();
    loop {
        match find_cycle(table.node_count(), &retained) {
            None => break,
            Some(cycle) => {
                let victim = cycle
                    .iter()
                    .copied()
                    .min_by(|a, b| {
                        table
                            .frequency(*a)
                            .total_cmp(&table.frequency(*b))
                            .then(a.cmp(b))
                    })
                    .expect("cycles are nonempty");
                retained.retain(|&e| e != victim);
                dropped.push(victim);
            }
        }
    }

    let dag = Dag::from_edges(table.node_count(), retained.iter().copied())?;
    let frequencies = retained
        .iter()
        .map(|&e| (e, table.frequency(e)))
        .collect();
    Ok(AveragedGraph {
        dag,
        frequencies,
        dropped_in_repair: dropped,
    })
}

/// Find the edges of one directed cycle, if any.
fn find_cycle(node_count: usize, edges: &[Edge]) -> Option<Vec<Edge>> {
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); node_count];
    for e in edges {
        children[e.from].push(e.to);
    }

    #[derive(Clone, Copy, PartialEq)]
    enum Color {
        White,
        Gray,
        Black,
    }
    let mut color = vec![Color::White; node_count];
    let mut parent_edge: Vec<Option<usize>> = vec![None; node_count];

    fn dfs(
        v: usize,
        children: &[Vec<usize>],
        color: &mut [Color],
        parent_edge: &mut [Option<usize>],
    ) -> Option<(usize, usize)> {
        color[v] = Color::Gray;
        for &c in &children[v] {
            match color[c] {
                Color::Gray => return Some((v, c)),
                Color::White => {
                    parent_edge[c] = Some(v);
                    if let Some(hit) = dfs(c, children, color, parent_edge) {
                        return Some(hit);
                    }
                }
                Color::Black => {}
            }
        }
        color[v] = Color::Black;
        None
    }

    for start in 0..node_count {
        if color[start] != Color::White {
            continue;
        }
        if let Some((back_from, back_to)) = dfs(start, &children, &mut color, &mut parent_edge) {
            // Walk parents from back_from up to back_to to recover the cycle.
            let mut cycle = vec![Edge::new(back_from, back_to)];
            let mut v = back_from;
            while v != back_to {
                let p = parent_edge[v].expect("cycle walk stays on the DFS path");
                cycle.push(Edge::new(p, v));
                v = p;
            }
            cycle.reverse();
            return Some(cycle);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Variable;
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    fn counts(entries: &[((usize, usize), u32)]) -> BTreeMap<Edge, u32> {
        entries
            .iter()
            .map(|&((f, t), c)| (Edge::new(f, t), c))
            .collect()
    }

    /// Binary pair with P(y = x) ~= 0.97, plus a little asymmetry.
    fn near_deterministic_pair() -> Dataset {
        let mut rows = Vec::new();
        for x in 0..2u32 {
            for i in 0..600usize {
                let y = if i % 33 == 0 { 1 - x } else { x };
                rows.push(vec![x, y]);
            }
        }
        let vars = vec![
            Variable::new("x", vec!["0".into(), "1".into()]),
            Variable::new("y", vec!["0".into(), "1".into()]),
        ];
        let mut columns = vec![Vec::new(), Vec::new()];
        for row in &rows {
            columns[0].push(row[0]);
            columns[1].push(row[1]);
        }
        Dataset::new(vars, columns).unwrap()
    }

    #[test]
    fn single_run_table_equals_its_edge_set() {
        let d = near_deterministic_pair();
        let cfg = EnsembleConfig {
            runs: 1,
            ..EnsembleConfig::default()
        };
        let (table, summaries) = learn_ensemble(&d, &ConstraintSet::unconstrained(), &cfg).unwrap();
        assert_eq!(summaries.len(), 1);
        let total: u32 = table.iter().map(|(_, c)| c).sum();
        assert_eq!(total as usize, summaries[0].edge_count);
        for (_, c) in table.iter() {
            assert_eq!(c, 1);
        }
    }

    #[test]
    fn strong_dependence_appears_in_every_run() {
        let d = near_deterministic_pair();
        let cfg = EnsembleConfig {
            runs: 10,
            base_seed: 11,
            ..EnsembleConfig::default()
        };
        let (table, _) = learn_ensemble(&d, &ConstraintSet::unconstrained(), &cfg).unwrap();
        let forward = table.count(Edge::new(0, 1));
        let backward = table.count(Edge::new(1, 0));
        assert_eq!(forward + backward, 10);
    }

    #[test]
    fn failing_run_aborts_with_its_index() {
        let d = near_deterministic_pair();
        // Constraints referencing a node the dataset lacks fail inside the run.
        let c = ConstraintSet::new(
            [Edge::new(4, 5)].into_iter().collect(),
            std::collections::BTreeSet::new(),
        )
        .unwrap();
        let cfg = EnsembleConfig {
            runs: 3,
            workers: 1,
            ..EnsembleConfig::default()
        };
        match learn_ensemble(&d, &c, &cfg) {
            Err(crate::error::Error::EnsembleRun { run, .. }) => assert_eq!(run, 0),
            other => panic!("expected an ensemble-run error, got {other:?}"),
        }
    }

    #[test]
    fn identical_base_seed_gives_identical_tables() {
        let d = near_deterministic_pair();
        let cfg = EnsembleConfig {
            runs: 5,
            base_seed: 99,
            workers: 2,
            ..EnsembleConfig::default()
        };
        let (t1, _) = learn_ensemble(&d, &ConstraintSet::unconstrained(), &cfg).unwrap();
        let single = EnsembleConfig {
            workers: 1,
            ..cfg.clone()
        };
        let (t2, _) = learn_ensemble(&d, &ConstraintSet::unconstrained(), &single).unwrap();
        assert_eq!(t1, t2);
    }

    #[test]
    fn threshold_arithmetic_on_the_boundary() {
        let table = EdgeFrequencyTable::new(
            4,
            100,
            counts(&[((0, 1), 92), ((1, 2), 89), ((2, 3), 90)]),
        )
        .unwrap();
        let avg = average_graph(&table, 0.9).unwrap();
        assert_eq!(
            avg.dag.edges(),
            vec![Edge::new(0, 1), Edge::new(2, 3)]
        );
        assert_eq!(avg.frequencies[&Edge::new(0, 1)], 0.92);
        assert!(avg.dropped_in_repair.is_empty());
    }

    #[test]
    fn threshold_one_keeps_only_unanimous_edges() {
        let table =
            EdgeFrequencyTable::new(3, 4, counts(&[((0, 1), 4), ((1, 2), 3)])).unwrap();
        let avg = average_graph(&table, 1.0).unwrap();
        assert_eq!(avg.dag.edges(), vec![Edge::new(0, 1)]);
    }

    #[test]
    fn empty_table_averages_to_empty_graph() {
        let table = EdgeFrequencyTable::new(3, 10, BTreeMap::new()).unwrap();
        let avg = average_graph(&table, 0.9).unwrap();
        assert_eq!(avg.dag.edge_count(), 0);
    }

    #[test]
    fn cycle_repair_removes_lowest_frequency_edge() {
        // A 3-cycle of frequent edges at a low threshold.
        let table = EdgeFrequencyTable::new(
            3,
            10,
            counts(&[((0, 1), 9), ((1, 2), 7), ((2, 0), 8)]),
        )
        .unwrap();
        let avg = average_graph(&table, 0.5).unwrap();
        assert_eq!(avg.dropped_in_repair, vec![Edge::new(1, 2)]);
        assert_eq!(avg.dag.edges(), vec![Edge::new(0, 1), Edge::new(2, 0)]);
        assert!(avg.dag.verify_acyclic());
    }

    #[test]
    fn two_cycle_repair_breaks_ties_lexicographically() {
        let table =
            EdgeFrequencyTable::new(2, 10, counts(&[((0, 1), 5), ((1, 0), 5)])).unwrap();
        let avg = average_graph(&table, 0.5).unwrap();
        assert_eq!(avg.dropped_in_repair, vec![Edge::new(0, 1)]);
        assert_eq!(avg.dag.edges(), vec![Edge::new(1, 0)]);
    }

    proptest! {
        // The thresholded set is exactly {e : count/R >= threshold}, it is
        // nested as the threshold rises, and the repaired graph is acyclic.
        #[test]
        fn thresholding_is_exact_and_nested(
            entries in proptest::collection::btree_map(
                (0usize..5, 0usize..5).prop_filter("no self-loops", |(f, t)| f != t),
                0u32..=20,
                0..12,
            )
        ) {
            let counts: BTreeMap<Edge, u32> =
                entries.into_iter().map(|((f, t), c)| (Edge::new(f, t), c)).collect();
            let table = EdgeFrequencyTable::new(5, 20, counts).unwrap();
            let mut previous: Option<BTreeSet<Edge>> = None;
            for step in (10..=20).rev() {
                let threshold = step as f64 / 20.0;
                let avg = average_graph(&table, threshold).unwrap();
                prop_assert!(avg.dag.verify_acyclic());
                let mut thresholded: BTreeSet<Edge> = avg.dag.edges().into_iter().collect();
                thresholded.extend(avg.dropped_in_repair.iter().copied());
                let expected: BTreeSet<Edge> = table
                    .iter()
                    .filter(|&(e, _)| table.frequency(e) >= threshold)
                    .map(|(e, _)| e)
                    .collect();
                prop_assert_eq!(&thresholded, &expected);
                if let Some(prev) = &previous {
                    prop_assert!(prev.is_subset(&thresholded),
                        "thresholded set lost edges when lowering to {}", threshold);
                }
                for (e, f) in &avg.frequencies {
                    prop_assert!(*f >= threshold && *f <= 1.0, "edge {} frequency {}", e, f);
                }
                previous = Some(thresholded);
            }
        }
    }
}
