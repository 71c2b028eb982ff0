//! Columnar store of categorical-encoded observations, plus the
//! preprocessing steps that turn raw CSV data into something a discrete
//! structure-learning algorithm can score: column removal, discretization,
//! and bootstrap resampling.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Read;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// A discrete variable: its name, ordered state labels, and tier.
///
/// The state list fixes the encoding: column entries are indices into
/// `states`. Tiers start at 1 (most upstream); see
/// [`crate::search::tiers_to_constraints`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Variable {
    pub name: String,
    pub states: Vec<String>,
    pub tier: u32,
}

impl Variable {
    pub fn new(name: impl Into<String>, states: Vec<String>) -> Self {
        Variable {
            name: name.into(),
            states,
            tier: 1,
        }
    }

    pub fn with_tier(mut self, tier: u32) -> Self {
        self.tier = tier;
        self
    }

    /// Number of states.
    pub fn arity(&self) -> usize {
        self.states.len()
    }
}

/// Immutable table of categorical observations, stored column-major as
/// state indices. Safe to share across search workers; resamples are
/// independent copies.
#[derive(Debug, Clone)]
pub struct Dataset {
    variables: Vec<Variable>,
    columns: Vec<Vec<u32>>,
    row_count: usize,
}

impl Dataset {
    /// Build a dataset from variables and their encoded columns.
    ///
    /// All columns must have equal length and every index must be a valid
    /// state of its variable.
    pub fn new(variables: Vec<Variable>, columns: Vec<Vec<u32>>) -> Result<Self> {
        if variables.len() != columns.len() {
            return Err(Error::InvalidArgument(format!(
                "{} variables but {} columns",
                variables.len(),
                columns.len()
            )));
        }
        let mut names = BTreeSet::new();
        for v in &variables {
            if !names.insert(v.name.as_str()) {
                return Err(Error::DuplicateColumn {
                    name: v.name.clone(),
                });
            }
        }
        let row_count = columns.first().map_or(0, Vec::len);
        for (v, col) in variables.iter().zip(&columns) {
            if col.len() != row_count {
                return Err(Error::InvalidArgument(format!(
                    "column '{}' has {} rows, expected {}",
                    v.name,
                    col.len(),
                    row_count
                )));
            }
            if let Some(&bad) = col.iter().find(|&&s| s as usize >= v.arity()) {
                return Err(Error::InvalidArgument(format!(
                    "state index {} out of range for '{}' (arity {})",
                    bad,
                    v.name,
                    v.arity()
                )));
            }
        }
        Ok(Dataset {
            variables,
            columns,
            row_count,
        })
    }

    /// Parse RFC 4180 CSV from `source`. The first record must be a header
    /// of unique column names.
    ///
    /// With a schema, values are encoded against the declared states and
    /// unknown values are rejected. Without one, each column's states are
    /// inferred as the sorted set of distinct values, fixing a canonical
    /// encoding. Empty fields are treated as missing and rejected.
    pub fn load_csv<R: Read>(source: R, schema: Option<Vec<Variable>>) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .from_reader(source);

        let headers: Vec<String> = reader
            .headers()
            .map_err(|e| Error::Csv {
                row: 0,
                message: e.to_string(),
            })?
            .iter()
            .map(str::to_owned)
            .collect();
        let mut seen = BTreeSet::new();
        for h in &headers {
            if !seen.insert(h.as_str()) {
                return Err(Error::DuplicateColumn { name: h.clone() });
            }
        }

        let variables = match schema {
            Some(vars) => {
                let names: Vec<&str> = vars.iter().map(|v| v.name.as_str()).collect();
                let header_refs: Vec<&str> = headers.iter().map(String::as_str).collect();
                if names != header_refs {
                    return Err(Error::Config(format!(
                        "schema columns {:?} do not match header {:?}",
                        names, header_refs
                    )));
                }
                vars
            }
            None => headers
                .iter()
                .map(|h| Variable::new(h.clone(), Vec::new()))
                .collect(),
        };
        let inferring = variables.iter().all(|v| v.states.is_empty());

        // Raw cells, column-major.
        let mut raw: Vec<Vec<String>> = vec![Vec::new(); headers.len()];
        for (i, record) in reader.records().enumerate() {
            let row = i + 1;
            let record = record.map_err(|e| Error::Csv {
                row,
                message: e.to_string(),
            })?;
            if record.len() != headers.len() {
                return Err(Error::Csv {
                    row,
                    message: format!(
                        "expected {} fields, found {}",
                        headers.len(),
                        record.len()
                    ),
                });
            }
            for (c, field) in record.iter().enumerate() {
                if field.is_empty() {
                    return Err(Error::MissingValue {
                        variable: headers[c].clone(),
                        row,
                    });
                }
                raw[c].push(field.to_owned());
            }
        }

        let mut variables = variables;
        let mut columns = Vec::with_capacity(headers.len());
        for (var, cells) in variables.iter_mut().zip(raw) {
            if inferring {
                let distinct: BTreeSet<&str> = cells.iter().map(String::as_str).collect();
                var.states = distinct.into_iter().map(str::to_owned).collect();
            }
            let index: HashMap<&str, u32> = var
                .states
                .iter()
                .enumerate()
                .map(|(i, s)| (s.as_str(), i as u32))
                .collect();
            let mut col = Vec::with_capacity(cells.len());
            for cell in &cells {
                match index.get(cell.as_str()) {
                    Some(&i) => col.push(i),
                    None => {
                        return Err(Error::UnknownValue {
                            variable: var.name.clone(),
                            value: cell.clone(),
                        })
                    }
                }
            }
            columns.push(col);
        }

        Dataset::new(variables, columns)
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn var_count(&self) -> usize {
        self.variables.len()
    }

    pub fn row_count(&self) -> usize {
        self.row_count
    }

    /// Encoded column of state indices for variable `index`.
    pub fn column(&self, index: usize) -> &[u32] {
        &self.columns[index]
    }

    pub fn variable_index(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name == name)
    }

    /// Decode one cell back to its state label.
    pub fn label(&self, var: usize, row: usize) -> &str {
        &self.variables[var].states[self.columns[var][row] as usize]
    }

    /// Remove the named columns, preserving the order of the rest.
    pub fn drop_columns<S: AsRef<str>>(&self, names: &[S]) -> Result<Self> {
        let requested: BTreeSet<&str> = names.iter().map(AsRef::as_ref).collect();
        let known: BTreeSet<&str> = self.variables.iter().map(|v| v.name.as_str()).collect();
        let unknown: Vec<&str> = requested.difference(&known).copied().collect();
        if !unknown.is_empty() {
            return Err(Error::UnknownColumn {
                names: unknown.join(", "),
            });
        }
        let mut variables = Vec::new();
        let mut columns = Vec::new();
        for (v, c) in self.variables.iter().zip(&self.columns) {
            if !requested.contains(v.name.as_str()) {
                variables.push(v.clone());
                columns.push(c.clone());
            }
        }
        Ok(Dataset {
            variables,
            columns,
            row_count: self.row_count,
        })
    }

    /// Assign tiers by column name. Names absent from the map keep their
    /// current tier; unknown names are rejected.
    pub fn with_tiers(&self, tiers: &BTreeMap<String, u32>) -> Result<Self> {
        let mut out = self.clone();
        for (name, &tier) in tiers {
            if tier == 0 {
                return Err(Error::InvalidArgument(format!(
                    "tier for '{name}' must be >= 1"
                )));
            }
            match out.variables.iter_mut().find(|v| &v.name == name) {
                Some(v) => v.tier = tier,
                None => {
                    return Err(Error::UnknownColumn {
                        names: name.clone(),
                    })
                }
            }
        }
        Ok(out)
    }

    /// Replace a column with its discretized version per `rule`.
    pub fn discretize(&self, rule: &DiscretizationRule) -> Result<Self> {
        let idx = self
            .variable_index(&rule.column)
            .ok_or_else(|| Error::UnknownColumn {
                names: rule.column.clone(),
            })?;
        let var = &self.variables[idx];
        let raw: Vec<&str> = self.columns[idx]
            .iter()
            .map(|&s| var.states[s as usize].as_str())
            .collect();
        let (new_var, new_col) = discretize_column(&rule.column, &raw, &rule.kind)?;
        let mut out = self.clone();
        out.variables[idx] = new_var.with_tier(var.tier);
        out.columns[idx] = new_col;
        Ok(out)
    }

    /// Draw `row_count` rows uniformly with replacement, deterministically
    /// for a given seed. Variable metadata is unchanged.
    pub fn bootstrap_sample(&self, seed: u64) -> Result<Self> {
        if self.row_count == 0 {
            return Err(Error::EmptyDataset);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let indices: Vec<usize> = (0..self.row_count)
            .map(|_| rng.random_range(0..self.row_count))
            .collect();
        let columns = self
            .columns
            .iter()
            .map(|col| indices.iter().map(|&i| col[i]).collect())
            .collect();
        Ok(Dataset {
            variables: self.variables.clone(),
            columns,
            row_count: self.row_count,
        })
    }
}

/// How to discretize one raw column.
#[derive(Debug, Clone, PartialEq)]
pub enum DiscretizeKind {
    /// Strictly increasing numeric thresholds. `k` cuts produce `k + 1`
    /// half-open bins: value `v` falls in bin `i` iff `cut[i-1] <= v < cut[i]`.
    ExplicitCuts(Vec<f64>),
    /// Split at empirical quantiles into `bins` categories, ties assigned
    /// to the lower bin.
    Quantile(usize),
    /// Map each raw value to a category label. Unmapped values are rejected.
    ValueMap(BTreeMap<String, String>),
    /// Replace every category observed fewer than `min_count` times with
    /// `merged_label`.
    RareMerge { min_count: u64, merged_label: String },
}

/// A named column paired with a [`DiscretizeKind`].
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretizationRule {
    pub column: String,
    pub kind: DiscretizeKind,
}

impl DiscretizationRule {
    pub fn new(column: impl Into<String>, kind: DiscretizeKind) -> Result<Self> {
        let column = column.into();
        match &kind {
            DiscretizeKind::ExplicitCuts(cuts) => {
                if cuts.windows(2).any(|w| w[0] >= w[1]) || cuts.iter().any(|c| !c.is_finite()) {
                    return Err(Error::InvalidRule {
                        variable: column,
                        message: "cuts must be finite and strictly increasing".into(),
                    });
                }
            }
            DiscretizeKind::Quantile(bins) => {
                if *bins < 2 {
                    return Err(Error::InvalidRule {
                        variable: column,
                        message: "quantile bin count must be >= 2".into(),
                    });
                }
            }
            DiscretizeKind::ValueMap(map) => {
                if map.is_empty() {
                    return Err(Error::InvalidRule {
                        variable: column,
                        message: "value map must not be empty".into(),
                    });
                }
            }
            DiscretizeKind::RareMerge { min_count, .. } => {
                if *min_count < 1 {
                    return Err(Error::InvalidRule {
                        variable: column,
                        message: "rare-merge minimum count must be >= 1".into(),
                    });
                }
            }
        }
        Ok(DiscretizationRule { column, kind })
    }
}

/// Discretize a raw column into a fresh [`Variable`] and encoded column.
pub fn discretize_column(
    name: &str,
    raw: &[&str],
    kind: &DiscretizeKind,
) -> Result<(Variable, Vec<u32>)> {
    match kind {
        DiscretizeKind::ExplicitCuts(cuts) => {
            let values = parse_numeric(name, raw)?;
            // bin(v) = number of cuts <= v, so each bin is [cut, next_cut).
            let assign = |v: f64| cuts.iter().take_while(|&&c| c <= v).count() as u32;
            let column = values.iter().map(|&v| assign(v)).collect();
            let states = interval_labels(cuts, IntervalClosure::LowerClosed);
            Ok((Variable::new(name, states), column))
        }
        DiscretizeKind::Quantile(bins) => {
            let values = parse_numeric(name, raw)?;
            let cuts = quantile_cuts(&values, *bins);
            // Ties go to the lower bin: bin(v) = number of cuts < v.
            let assign = |v: f64| cuts.iter().take_while(|&&c| c < v).count() as u32;
            let column = values.iter().map(|&v| assign(v)).collect();
            let states = interval_labels(&cuts, IntervalClosure::UpperClosed);
            Ok((Variable::new(name, states), column))
        }
        DiscretizeKind::ValueMap(map) => {
            let mut labels: Vec<String> = Vec::new();
            for &v in raw {
                match map.get(v) {
                    Some(label) => labels.push(label.clone()),
                    None => {
                        return Err(Error::InvalidRule {
                            variable: name.to_owned(),
                            message: format!("value '{v}' has no mapping"),
                        })
                    }
                }
            }
            Ok(encode_labels(name, labels))
        }
        DiscretizeKind::RareMerge {
            min_count,
            merged_label,
        } => {
            let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
            for &v in raw {
                *counts.entry(v).or_insert(0) += 1;
            }
            let labels = raw
                .iter()
                .map(|&v| {
                    if counts[v] < *min_count {
                        merged_label.clone()
                    } else {
                        v.to_owned()
                    }
                })
                .collect();
            Ok(encode_labels(name, labels))
        }
    }
}

fn parse_numeric(name: &str, raw: &[&str]) -> Result<Vec<f64>> {
    raw.iter()
        .map(|&v| {
            v.trim().parse::<f64>().map_err(|_| Error::NonNumeric {
                variable: name.to_owned(),
                value: v.to_owned(),
            })
        })
        .collect()
}

/// Cut points at the i/k empirical quantiles (the ceil(N*i/k)-th order
/// statistics), deduplicated.
fn quantile_cuts(values: &[f64], bins: usize) -> Vec<f64> {
    if values.is_empty() {
        return Vec::new();
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let mut cuts = Vec::new();
    for i in 1..bins {
        let rank = (n * i).div_ceil(bins); // 1-based
        let cut = sorted[rank - 1];
        if cuts.last().is_none_or(|&last| cut > last) {
            cuts.push(cut);
        }
    }
    cuts
}

enum IntervalClosure {
    /// Bins of the form [a, b); boundary values belong to the upper bin.
    LowerClosed,
    /// Bins of the form (a, b]; boundary values belong to the lower bin.
    UpperClosed,
}

fn interval_labels(cuts: &[f64], closure: IntervalClosure) -> Vec<String> {
    if cuts.is_empty() {
        return vec!["all".to_owned()];
    }
    let fmt = |v: f64| format!("{v}");
    let mut labels = Vec::with_capacity(cuts.len() + 1);
    match closure {
        IntervalClosure::LowerClosed => {
            labels.push(format!("<{}", fmt(cuts[0])));
            for w in cuts.windows(2) {
                labels.push(format!("[{},{})", fmt(w[0]), fmt(w[1])));
            }
            labels.push(format!(">={}", fmt(cuts[cuts.len() - 1])));
        }
        IntervalClosure::UpperClosed => {
            labels.push(format!("<={}", fmt(cuts[0])));
            for w in cuts.windows(2) {
                labels.push(format!("({},{}]", fmt(w[0]), fmt(w[1])));
            }
            labels.push(format!(">{}", fmt(cuts[cuts.len() - 1])));
        }
    }
    labels
}

/// Encode per-row labels as a variable with sorted states.
fn encode_labels(name: &str, labels: Vec<String>) -> (Variable, Vec<u32>) {
    let states: Vec<String> = labels
        .iter()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .cloned()
        .collect();
    let index: HashMap<&str, u32> = states
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_str(), i as u32))
        .collect();
    let column = labels.iter().map(|l| index[l.as_str()]).collect();
    (Variable::new(name, states), column)
}
