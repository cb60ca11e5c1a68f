//! Matching network nodes to wanted-list entries, and per-tier summaries.
//!
//! Matches are candidates: every result carries `review_required = true`
//! and is expected to be confirmed by a person before analysis.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

use crate::build::CoAppearanceGraph;
use crate::metrics::CentralityReport;
use crate::model::{Embedding, Tier, WatchlistEntry};
use crate::{Error, Result};

/// Face-match threshold shared with clustering.
pub const DEFAULT_MATCH_CUTOFF: f64 = 0.39;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum MatchMethod {
    Face,
    Name,
    Both,
}

impl MatchMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            MatchMethod::Face => "face",
            MatchMethod::Name => "name",
            MatchMethod::Both => "both",
        }
    }
}

impl core::str::FromStr for MatchMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "face" => Ok(MatchMethod::Face),
            "name" => Ok(MatchMethod::Name),
            "both" => Ok(MatchMethod::Both),
            other => Err(Error::InvalidParameter(alloc::format!("unknown match method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchResult {
    pub cluster_id: usize,
    pub entry_id: String,
    pub method: MatchMethod,
    pub distance: Option<f64>,
    pub review_required: bool,
}

/// Operator-supplied name for a node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeName {
    pub cluster_id: usize,
    pub first_name: String,
    pub last_name: String,
}

/// Matches each entry with an embedding to the cluster holding its nearest
/// member face, when that distance is below `cutoff`. `members` yields
/// `(cluster_id, face embedding)` pairs. Equal distances go to the lower
/// cluster id.
pub fn match_by_face<'a, I>(members: I, entries: &[WatchlistEntry], cutoff: f64) -> Result<Vec<MatchResult>>
where
    I: IntoIterator<Item = (usize, &'a Embedding)>,
    I::IntoIter: Clone,
{
    if !(cutoff > 0.0) || !cutoff.is_finite() {
        return Err(Error::InvalidParameter("cutoff must be positive and finite".into()));
    }
    if !entries.iter().any(|e| e.embedding.is_some()) {
        return Err(Error::NoEmbeddings);
    }
    let members = members.into_iter();
    let mut out = Vec::new();
    for entry in entries {
        let Some(probe) = &entry.embedding else { continue };
        let mut best: Option<(f64, usize)> = None;
        for (cluster_id, face) in members.clone() {
            let d = probe.distance(face);
            if d >= cutoff {
                continue;
            }
            let better = match best {
                None => true,
                Some((bd, bc)) => d < bd || (d == bd && cluster_id < bc),
            };
            if better {
                best = Some((d, cluster_id));
            }
        }
        if let Some((distance, cluster_id)) = best {
            out.push(MatchResult {
                cluster_id,
                entry_id: entry.entry_id.clone(),
                method: MatchMethod::Face,
                distance: Some(distance),
                review_required: true,
            });
        }
    }
    Ok(out)
}

/// Unicode NFKD, combining marks removed, lowercased, surrounding whitespace
/// trimmed.
pub fn normalize_name(name: &str) -> String {
    name.trim().nfkd().filter(|c| !is_combining_mark(*c)).flat_map(char::to_lowercase).collect()
}

/// Exact match on normalised first and last names. When several nodes carry
/// the entry's name, the lowest cluster id is taken.
pub fn match_by_name(nodes: &[NodeName], entries: &[WatchlistEntry]) -> Vec<MatchResult> {
    let mut index: BTreeMap<(String, String), usize> = BTreeMap::new();
    for node in nodes {
        let key = (normalize_name(&node.first_name), normalize_name(&node.last_name));
        index.entry(key).and_modify(|c| *c = (*c).min(node.cluster_id)).or_insert(node.cluster_id);
    }
    entries
        .iter()
        .filter_map(|entry| {
            let key = (normalize_name(&entry.first_name), normalize_name(&entry.last_name));
            index.get(&key).map(|&cluster_id| MatchResult {
                cluster_id,
                entry_id: entry.entry_id.clone(),
                method: MatchMethod::Name,
                distance: None,
                review_required: true,
            })
        })
        .collect()
}

/// Merges face and name passes. A pair found by both becomes one `Both`
/// result carrying the face distance. Output is ordered by entry id, then
/// cluster id.
pub fn combine_matches(face: &[MatchResult], name: &[MatchResult]) -> Vec<MatchResult> {
    let mut merged: BTreeMap<(String, usize), MatchResult> = BTreeMap::new();
    for m in face.iter().chain(name) {
        let key = (m.entry_id.clone(), m.cluster_id);
        match merged.get_mut(&key) {
            Some(existing) if existing.method != m.method => {
                existing.method = MatchMethod::Both;
                existing.distance = existing.distance.or(m.distance);
            }
            Some(_) => {}
            None => {
                merged.insert(key, m.clone());
            }
        }
    }
    merged.into_values().collect()
}

/// Copies tier and reward from matched entries onto graph nodes. A node
/// matched to several entries takes the highest reward.
pub fn apply_matches(graph: &mut CoAppearanceGraph, matches: &[MatchResult], entries: &[WatchlistEntry]) -> Result<()> {
    let by_id: BTreeMap<&str, &WatchlistEntry> = entries.iter().map(|e| (e.entry_id.as_str(), e)).collect();
    for m in matches {
        let entry = by_id
            .get(m.entry_id.as_str())
            .ok_or_else(|| Error::InvalidParameter(alloc::format!("unknown watchlist entry `{}`", m.entry_id)))?;
        let Some(pos) = graph.position_of(m.cluster_id) else { continue };
        let node = &mut graph.nodes_mut()[pos];
        if node.reward.is_none_or(|r| entry.reward > r) {
            node.reward = Some(entry.reward);
            node.tier = Some(entry.tier);
        }
    }
    Ok(())
}

/// One column of the per-tier table. Means are over matched nodes and are
/// `None` when the tier has no match in the graph.
#[derive(Debug, Clone, PartialEq)]
pub struct TierSummary {
    pub tier: Tier,
    pub listed: usize,
    pub matched: usize,
    pub percent_matched: f64,
    pub mean_image_count: Option<f64>,
    pub percent_isolates: Option<f64>,
    pub mean_degree: Option<f64>,
    pub mean_eigenvector: Option<f64>,
    pub mean_betweenness: Option<f64>,
    pub mean_standardized_degree: Option<f64>,
    pub mean_standardized_eigenvector: Option<f64>,
    pub mean_standardized_betweenness: Option<f64>,
}

/// Per-tier listing and match counts with node statistics of the matched
/// nodes. `centrality` must be computed on `graph`. Matches to clusters
/// absent from the graph are ignored.
pub fn tier_summary(
    matches: &[MatchResult],
    entries: &[WatchlistEntry],
    graph: &CoAppearanceGraph,
    centrality: &CentralityReport,
) -> Result<Vec<TierSummary>> {
    if centrality.degree.len() != graph.node_count() {
        return Err(Error::LengthMismatch { left: centrality.degree.len(), right: graph.node_count() });
    }
    let by_id: BTreeMap<&str, &WatchlistEntry> = entries.iter().map(|e| (e.entry_id.as_str(), e)).collect();
    let mut matched: BTreeMap<Tier, BTreeMap<&str, usize>> = BTreeMap::new();
    for m in matches {
        let entry = by_id
            .get(m.entry_id.as_str())
            .ok_or_else(|| Error::InvalidParameter(alloc::format!("unknown watchlist entry `{}`", m.entry_id)))?;
        if let Some(pos) = graph.position_of(m.cluster_id) {
            // first match per entry wins; a single method pass yields one anyway
            matched.entry(entry.tier).or_default().entry(entry.entry_id.as_str()).or_insert(pos);
        }
    }
    let skeleton = graph.skeleton();
    Ok(Tier::ALL
        .iter()
        .map(|&tier| {
            let listed = entries.iter().filter(|e| e.tier == tier).count();
            let positions: Vec<usize> = matched.get(&tier).map(|m| m.values().copied().collect()).unwrap_or_default();
            let mean = |f: &dyn Fn(usize) -> f64| -> Option<f64> {
                (!positions.is_empty()).then(|| positions.iter().map(|&p| f(p)).sum::<f64>() / positions.len() as f64)
            };
            TierSummary {
                tier,
                listed,
                matched: positions.len(),
                percent_matched: if listed == 0 { 0.0 } else { positions.len() as f64 / listed as f64 * 100.0 },
                mean_image_count: mean(&|p| graph.nodes()[p].image_count() as f64),
                percent_isolates: mean(&|p| if skeleton.degree(p) == 0 { 100.0 } else { 0.0 }),
                mean_degree: mean(&|p| centrality.degree[p]),
                mean_eigenvector: mean(&|p| centrality.eigenvector[p]),
                mean_betweenness: mean(&|p| centrality.betweenness[p]),
                mean_standardized_degree: mean(&|p| centrality.standardized_degree[p]),
                mean_standardized_eigenvector: mean(&|p| centrality.standardized_eigenvector[p]),
                mean_standardized_betweenness: mean(&|p| centrality.standardized_betweenness[p]),
            }
        })
        .collect())
}

/// Distinct cluster ids among `matches`.
pub fn matched_clusters(matches: &[MatchResult]) -> BTreeSet<usize> {
    matches.iter().map(|m| m.cluster_id).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::EMBEDDING_DIM;
    use alloc::string::ToString;
    use alloc::vec;

    fn emb(x: f64) -> Embedding {
        let mut a = [0.0; EMBEDDING_DIM];
        a[0] = x;
        Embedding::from_array(a)
    }

    fn entry(id: &str, first: &str, last: &str, tier: Tier, e: Option<Embedding>) -> WatchlistEntry {
        WatchlistEntry {
            entry_id: id.to_string(),
            first_name: first.to_string(),
            last_name: last.to_string(),
            tier,
            reward: 1.0,
            embedding: e,
        }
    }

    #[test]
    fn face_match_rules() {
        let faces = [(3usize, emb(0.0)), (1, emb(1.0)), (2, emb(2.0))];
        let members = faces.iter().map(|(c, e)| (*c, e));
        let entries = [
            entry("a", "x", "y", Tier::Red, Some(emb(0.0))),
            entry("b", "x", "y", Tier::Red, Some(emb(0.5))),
            entry("c", "x", "y", Tier::Red, Some(emb(1.2))),
            entry("d", "x", "y", Tier::Red, None),
        ];
        let m = match_by_face(members.clone(), &entries, 0.39).unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!((m[0].entry_id.as_str(), m[0].cluster_id, m[0].distance), ("a", 3, Some(0.0)));
        assert_eq!(m[1].cluster_id, 1);
        assert!(m.iter().all(|r| r.review_required));
        // equidistant between clusters 3 and 1: lower id wins
        let tie = [entry("t", "x", "y", Tier::Red, Some(emb(0.5)))];
        assert_eq!(match_by_face(members.clone(), &tie, 0.6).unwrap()[0].cluster_id, 1);
        let none = [entry("n", "x", "y", Tier::Red, None)];
        assert!(matches!(match_by_face(members, &none, 0.39), Err(Error::NoEmbeddings)));
    }

    #[test]
    fn names_normalise() {
        assert_eq!(normalize_name("Güney"), "guney");
        assert_eq!(normalize_name(" ŞAHİN "), "sahin");
        let nodes = vec![
            NodeName { cluster_id: 7, first_name: "ekrem".into(), last_name: "guney".into() },
            NodeName { cluster_id: 2, first_name: "Ekrem".into(), last_name: "Güney".into() },
            NodeName { cluster_id: 4, first_name: "Ekrem".into(), last_name: "Other".into() },
        ];
        let entries =
            [entry("e1", "Ekrem", "Güney", Tier::Blue, None), entry("e2", "Ekrem", "Guneyy", Tier::Blue, None)];
        let m = match_by_name(&nodes, &entries);
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].cluster_id, 2);
        assert_eq!(m[0].method, MatchMethod::Name);
    }

    #[test]
    fn combining_marks_both() {
        let f = MatchResult {
            cluster_id: 1,
            entry_id: "a".into(),
            method: MatchMethod::Face,
            distance: Some(0.2),
            review_required: true,
        };
        let n = MatchResult { method: MatchMethod::Name, distance: None, ..f.clone() };
        let other = MatchResult { cluster_id: 5, ..n.clone() };
        let c = combine_matches(&[f], &[n, other]);
        assert_eq!(c.len(), 2);
        assert_eq!(c[0].method, MatchMethod::Both);
        assert_eq!(c[0].distance, Some(0.2));
        assert_eq!(c[1].method, MatchMethod::Name);
    }
}
