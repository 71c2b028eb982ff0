//! Graphviz DOT rendering of graph documents.

use std::collections::BTreeMap;

use crate::error::Result;

use super::document::GraphDocument;

/// Tier-to-fill-color mapping. Without overrides: tier 1 blue, tier 2
/// green, later tiers red, and the highest tier (the targets) uncolored.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TierPalette {
    overrides: BTreeMap<u32, String>,
}

impl TierPalette {
    pub fn set(&mut self, tier: u32, color: String) {
        self.overrides.insert(tier, color);
    }

    pub fn override_for(&self, tier: u32) -> Option<&str> {
        self.overrides.get(&tier).map(String::as_str)
    }

    pub fn color_for(&self, tier: u32, max_tier: u32) -> Option<&str> {
        if let Some(color) = self.override_for(tier) {
            return Some(color);
        }
        if tier == max_tier {
            return None;
        }
        Some(match tier {
            1 => "blue",
            2 => "green",
            _ => "red",
        })
    }
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

fn format_frequency(f: f64) -> String {
    let s = format!("{f:.4}");
    let trimmed = s.trim_end_matches('0').trim_end_matches('.');
    trimmed.to_owned()
}

/// Render a validated document as a DOT digraph.
///
/// Nodes appear in document order, edges sorted by endpoint names, so the
/// output is deterministic. Node fill colors follow the palette; edges
/// carry their frequency as a label when present.
pub fn export_dot(doc: &GraphDocument, palette: &TierPalette) -> Result<String> {
    doc.validate()?;
    let max_tier = doc.variables.iter().map(|v| v.tier).max().unwrap_or(1);

    let mut out = String::from("digraph causal_graph {\n");
    out.push_str("  node [shape=ellipse];\n");
    for v in &doc.variables {
        match palette.color_for(v.tier, max_tier) {
            Some(color) => out.push_str(&format!(
                "  {} [style=filled, fillcolor={}];\n",
                quote(&v.name),
                quote(color)
            )),
            None => out.push_str(&format!("  {};\n", quote(&v.name))),
        }
    }
    let mut edges = doc.edges.clone();
    edges.sort_by(|a, b| (&a.from, &a.to).cmp(&(&b.from, &b.to)));
    for e in &edges {
        match e.frequency {
            Some(f) => out.push_str(&format!(
                "  {} -> {} [label={}];\n",
                quote(&e.from),
                quote(&e.to),
                quote(&format_frequency(f))
            )),
            None => out.push_str(&format!("  {} -> {};\n", quote(&e.from), quote(&e.to))),
        }
    }
    out.push_str("}\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::document::{DocEdge, DocVariable, GRAPH_SCHEMA};

    fn doc(vars: &[(&str, u32)], edges: &[(&str, &str, Option<f64>)]) -> GraphDocument {
        GraphDocument {
            schema: GRAPH_SCHEMA.to_owned(),
            variables: vars
                .iter()
                .map(|(n, t)| DocVariable {
                    name: (*n).to_owned(),
                    tier: *t,
                })
                .collect(),
            edges: edges
                .iter()
                .map(|(f, t, freq)| DocEdge {
                    from: (*f).to_owned(),
                    to: (*t).to_owned(),
                    frequency: *freq,
                })
                .collect(),
            provenance: None,
        }
    }

    #[test]
    fn one_edge_document_renders_one_arrow() {
        let d = doc(&[("a", 1), ("b", 2)], &[("a", "b", None)]);
        let text = export_dot(&d, &TierPalette::default()).unwrap();
        assert_eq!(text.matches("->").count(), 1);
        assert!(text.contains("\"a\" -> \"b\";"));
    }

    #[test]
    fn frequency_becomes_an_edge_label() {
        let d = doc(&[("a", 1), ("b", 2)], &[("a", "b", Some(0.92))]);
        let text = export_dot(&d, &TierPalette::default()).unwrap();
        assert!(text.contains("label=\"0.92\""), "{text}");
    }

    #[test]
    fn export_is_deterministic() {
        let d = doc(
            &[("a", 1), ("b", 2), ("c", 3)],
            &[("b", "c", Some(0.95)), ("a", "b", Some(1.0))],
        );
        let p = TierPalette::default();
        assert_eq!(export_dot(&d, &p).unwrap(), export_dot(&d, &p).unwrap());
    }

    #[test]
    fn default_palette_follows_tier_semantics() {
        let p = TierPalette::default();
        assert_eq!(p.color_for(1, 5), Some("blue"));
        assert_eq!(p.color_for(2, 5), Some("green"));
        assert_eq!(p.color_for(3, 5), Some("red"));
        assert_eq!(p.color_for(4, 5), Some("red"));
        assert_eq!(p.color_for(5, 5), None);
        assert_eq!(p.color_for(1, 1), None);
    }

    #[test]
    fn palette_overrides_win() {
        let mut p = TierPalette::default();
        p.set(5, "gold".into());
        assert_eq!(p.color_for(5, 5), Some("gold"));
    }

    #[test]
    fn names_with_quotes_are_escaped() {
        let d = doc(&[("we\"ird", 1)], &[]);
        let text = export_dot(&d, &TierPalette::default()).unwrap();
        assert!(text.contains("\"we\\\"ird\""));
    }

    #[test]
    fn frequency_labels_trim_trailing_zeros() {
        assert_eq!(format_frequency(0.92), "0.92");
        assert_eq!(format_frequency(1.0), "1");
        assert_eq!(format_frequency(2.0 / 3.0), "0.6667");
    }
}
