//! Weighted co-appearance network: one node per identity cluster, an edge
//! between two clusters weighted by the number of distinct images in which
//! both appear.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use crate::cluster::ClusterAssignment;
use crate::graph::Graph;
use crate::model::{FaceRecord, Gender, GenderEstimate, ImageRecord, Tier, Timestamp};
use crate::{Error, Result};

/// One identified person.
#[derive(Debug, Clone, PartialEq)]
pub struct PersonNode {
    pub cluster_id: usize,
    pub image_ids: BTreeSet<String>,
    /// Earliest timestamp among the person's images, if any has one.
    pub first_seen: Option<Timestamp>,
    /// Mean over member faces with an estimate.
    pub age_estimate: Option<f64>,
    pub gender_estimate: Option<GenderEstimate>,
    pub reward: Option<f64>,
    pub tier: Option<Tier>,
}

impl PersonNode {
    pub fn new(cluster_id: usize) -> Self {
        Self {
            cluster_id,
            image_ids: BTreeSet::new(),
            first_seen: None,
            age_estimate: None,
            gender_estimate: None,
            reward: None,
            tier: None,
        }
    }

    pub fn image_count(&self) -> usize {
        self.image_ids.len()
    }
}

/// Undirected co-appearance graph with positive integer edge weights.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CoAppearanceGraph {
    nodes: Vec<PersonNode>,
    /// Keyed by node positions `(i, j)` with `i < j`.
    edges: BTreeMap<(usize, usize), u32>,
}

impl CoAppearanceGraph {
    /// Validates: distinct cluster ids, in-range endpoints, no self-loops,
    /// positive weights. Edge endpoints are node positions and may be given
    /// in either order; repeated pairs are rejected.
    pub fn new(nodes: Vec<PersonNode>, edges: impl IntoIterator<Item = (usize, usize, u32)>) -> Result<Self> {
        let mut ids = BTreeSet::new();
        for n in &nodes {
            if !ids.insert(n.cluster_id) {
                return Err(Error::DuplicateId { kind: "cluster", id: alloc::format!("{}", n.cluster_id) });
            }
        }
        let mut map = BTreeMap::new();
        for (u, v, w) in edges {
            if u == v || u >= nodes.len() || v >= nodes.len() || w == 0 {
                return Err(Error::InvalidParameter(alloc::format!("invalid edge ({u}, {v}, {w})")));
            }
            if map.insert((u.min(v), u.max(v)), w).is_some() {
                return Err(Error::InvalidParameter(alloc::format!("repeated edge ({u}, {v})")));
            }
        }
        Ok(Self { nodes, edges: map })
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> &[PersonNode] {
        &self.nodes
    }

    pub fn nodes_mut(&mut self) -> &mut [PersonNode] {
        &mut self.nodes
    }

    /// `(i, j, weight)` with `i < j`, ascending.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, u32)> + '_ {
        self.edges.iter().map(|(&(i, j), &w)| (i, j, w))
    }

    pub fn weight(&self, i: usize, j: usize) -> u32 {
        self.edges.get(&(i.min(j), i.max(j))).copied().unwrap_or(0)
    }

    pub fn position_of(&self, cluster_id: usize) -> Option<usize> {
        self.nodes.iter().position(|n| n.cluster_id == cluster_id)
    }

    pub fn total_weight(&self) -> u64 {
        self.edges.values().map(|&w| u64::from(w)).sum()
    }

    /// Topology with co-appearance counts as edge weights.
    pub fn skeleton(&self) -> Graph {
        let mut g = Graph::new(self.nodes.len());
        for (&(i, j), &w) in &self.edges {
            g.add_edge(i, j, f64::from(w));
        }
        g
    }

    /// Subgraph induced by the node positions in `keep` (ascending order is
    /// preserved in the result).
    pub fn subgraph(&self, keep: &[usize]) -> Self {
        let mut keep = keep.to_vec();
        keep.sort_unstable();
        keep.dedup();
        let mut index = BTreeMap::new();
        for (new, &old) in keep.iter().enumerate() {
            index.insert(old, new);
        }
        let nodes = keep.iter().map(|&i| self.nodes[i].clone()).collect();
        let edges =
            self.edges.iter().filter_map(|(&(i, j), &w)| Some(((*index.get(&i)?, *index.get(&j)?), w))).collect();
        Self { nodes, edges }
    }
}

/// Warning tallies from graph construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BuildStats {
    /// Faces whose image id has no metadata record.
    pub unmatched_metadata: usize,
    /// Faces left out because they are unclustered.
    pub unclustered_faces: usize,
}

/// Builds the co-appearance graph. Within one image each distinct pair of
/// clusters adds exactly 1 to its edge weight, however many faces of each
/// cluster the image holds. Every cluster becomes a node, isolates included.
pub fn build_coappearance_graph(
    assignment: &ClusterAssignment,
    faces: &[FaceRecord],
    images: &BTreeMap<String, ImageRecord>,
) -> Result<(CoAppearanceGraph, BuildStats)> {
    let index = assignment.index();
    let mut stats = BuildStats::default();
    let mut nodes: Vec<PersonNode> = (0..assignment.cluster_count()).map(PersonNode::new).collect();
    let mut ages: Vec<(f64, usize)> = alloc::vec![(0.0, 0); nodes.len()];
    let mut votes: Vec<(f64, f64)> = alloc::vec![(0.0, 0.0); nodes.len()];
    let mut per_image: BTreeMap<&str, BTreeSet<usize>> = BTreeMap::new();

    for f in faces {
        let cluster = *index.get(f.face_id.as_str()).ok_or_else(|| {
            Error::InvalidParameter(alloc::format!("face {} missing from cluster assignment", f.face_id))
        })?;
        let meta = images.get(&f.image_id);
        if meta.is_none() {
            stats.unmatched_metadata += 1;
        }
        let Some(c) = cluster else {
            stats.unclustered_faces += 1;
            continue;
        };
        let node = &mut nodes[c];
        node.image_ids.insert(f.image_id.clone());
        if let Some(ts) = meta.and_then(|m| m.timestamp) {
            node.first_seen = Some(node.first_seen.map_or(ts, |t| t.min(ts)));
        }
        if let Some(age) = f.age_estimate {
            ages[c].0 += age;
            ages[c].1 += 1;
        }
        if let Some(g) = f.gender_estimate {
            match g.label {
                Gender::Female => votes[c].0 += g.confidence,
                Gender::Male => votes[c].1 += g.confidence,
            }
        }
        per_image.entry(f.image_id.as_str()).or_default().insert(c);
    }

    for (c, node) in nodes.iter_mut().enumerate() {
        if ages[c].1 > 0 {
            node.age_estimate = Some(ages[c].0 / ages[c].1 as f64);
        }
        let (female, male) = votes[c];
        let total = female + male;
        if total > 0.0 {
            node.gender_estimate = Some(if female >= male {
                GenderEstimate { label: Gender::Female, confidence: female / total }
            } else {
                GenderEstimate { label: Gender::Male, confidence: male / total }
            });
        }
    }

    let mut edges: BTreeMap<(usize, usize), u32> = BTreeMap::new();
    for clusters in per_image.values() {
        let cs: Vec<usize> = clusters.iter().copied().collect();
        for (a, &i) in cs.iter().enumerate() {
            for &j in &cs[a + 1..] {
                *edges.entry((i, j)).or_insert(0) += 1;
            }
        }
    }
    Ok((CoAppearanceGraph { nodes, edges }, stats))
}

/// Moves the faces of denied clusters to unclustered and renumbers the rest.
pub fn filter_artifact_clusters(
    assignment: &ClusterAssignment,
    denylist: &BTreeSet<usize>,
) -> Result<ClusterAssignment> {
    if let Some(&bad) = denylist.iter().find(|&&c| c >= assignment.cluster_count()) {
        return Err(Error::UnknownCluster(bad));
    }
    let labels = assignment.labels().iter().map(|l| l.filter(|c| !denylist.contains(c))).collect();
    ClusterAssignment::from_labels(assignment.face_ids().to_vec(), labels)
}

/// Node-induced subgraph on a largest component (ties: the component with
/// the smallest cluster id).
pub fn largest_connected_component(graph: &CoAppearanceGraph) -> CoAppearanceGraph {
    let skeleton = graph.skeleton();
    let best = skeleton
        .components()
        .into_iter()
        .map(|c| {
            let min_id = c.iter().map(|&i| graph.nodes[i].cluster_id).min().unwrap_or(usize::MAX);
            (c, min_id)
        })
        .fold(None::<(Vec<usize>, usize)>, |best, (c, id)| match best {
            Some((b, bid)) if b.len() > c.len() || (b.len() == c.len() && bid < id) => Some((b, bid)),
            _ => Some((c, id)),
        });
    match best {
        Some((nodes, _)) => graph.subgraph(&nodes),
        None => CoAppearanceGraph::default(),
    }
}

/// Cumulative snapshots: slice `k` holds the nodes first seen at or before
/// `breakpoints[k]` and the edges among them. Nodes without a timestamp are
/// never included.
pub fn time_slices(graph: &CoAppearanceGraph, breakpoints: &[Timestamp]) -> Result<Vec<CoAppearanceGraph>> {
    if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("breakpoints must be strictly increasing".into()));
    }
    Ok(breakpoints
        .iter()
        .map(|&bp| {
            let keep: Vec<usize> = graph
                .nodes
                .iter()
                .enumerate()
                .filter(|(_, n)| n.first_seen.is_some_and(|t| t <= bp))
                .map(|(i, _)| i)
                .collect();
            graph.subgraph(&keep)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Embedding;
    use alloc::format;
    use alloc::string::ToString;
    use alloc::vec;

    fn corpus(images: &[&[usize]]) -> (ClusterAssignment, Vec<FaceRecord>) {
        let mut faces = Vec::new();
        let mut labels = Vec::new();
        for (i, members) in images.iter().enumerate() {
            for &c in members.iter() {
                let id = format!("f{}", faces.len());
                faces.push(FaceRecord::new(id, format!("img{i}"), Embedding::from_array([0.0; 128])));
                labels.push(Some(c));
            }
        }
        let a = ClusterAssignment::from_labels(faces.iter().map(|f| f.face_id.clone()).collect(), labels).unwrap();
        (a, faces)
    }

    #[test]
    fn single_image_with_three_people_is_a_triangle() {
        let (a, faces) = corpus(&[&[0, 1, 2]]);
        let (g, _) = build_coappearance_graph(&a, &faces, &BTreeMap::new()).unwrap();
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 1, 1), (0, 2, 1), (1, 2, 1)]);
    }

    #[test]
    fn ten_shared_images_give_weight_ten() {
        let imgs: Vec<&[usize]> = (0..10).map(|_| &[0usize, 1][..]).collect();
        let (a, faces) = corpus(&imgs);
        let (g, _) = build_coappearance_graph(&a, &faces, &BTreeMap::new()).unwrap();
        assert_eq!(g.weight(0, 1), 10);
        assert_eq!(g.nodes()[0].image_count(), 10);
    }

    #[test]
    fn duplicate_faces_of_one_cluster_count_once() {
        let (a, faces) = corpus(&[&[0, 0, 1]]);
        let (g, _) = build_coappearance_graph(&a, &faces, &BTreeMap::new()).unwrap();
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 1, 1)]);
    }

    #[test]
    fn isolates_are_kept_and_metadata_gaps_tallied() {
        let (a, faces) = corpus(&[&[0, 1], &[2]]);
        let mut images = BTreeMap::new();
        images.insert(
            "img0".to_string(),
            ImageRecord { image_id: "img0".into(), timestamp: Some(Timestamp(50)), ..Default::default() },
        );
        let (g, stats) = build_coappearance_graph(&a, &faces, &images).unwrap();
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.edge_count(), 1);
        assert_eq!(stats.unmatched_metadata, 1);
        assert_eq!(g.nodes()[0].first_seen, Some(Timestamp(50)));
        assert_eq!(g.nodes()[2].first_seen, None);
    }

    #[test]
    fn node_attributes_aggregate() {
        let (a, mut faces) = corpus(&[&[0], &[0]]);
        faces[0].age_estimate = Some(30.0);
        faces[1].age_estimate = Some(40.0);
        faces[0].gender_estimate = Some(GenderEstimate { label: Gender::Male, confidence: 0.9 });
        faces[1].gender_estimate = Some(GenderEstimate { label: Gender::Female, confidence: 0.3 });
        let (g, _) = build_coappearance_graph(&a, &faces, &BTreeMap::new()).unwrap();
        let n = &g.nodes()[0];
        assert_eq!(n.age_estimate, Some(35.0));
        let ge = n.gender_estimate.unwrap();
        assert_eq!(ge.label, Gender::Male);
        assert!((ge.confidence - 0.75).abs() < 1e-12);
    }

    #[test]
    fn filter_moves_denied_faces_out() {
        let (a, _) = corpus(&[&[0, 1, 2]]);
        assert_eq!(filter_artifact_clusters(&a, &BTreeSet::new()).unwrap(), a);
        let f = filter_artifact_clusters(&a, &[1].into_iter().collect()).unwrap();
        assert_eq!(f.labels(), &[Some(0), None, Some(1)]);
        let all = filter_artifact_clusters(&a, &[0, 1, 2].into_iter().collect()).unwrap();
        assert_eq!(all.cluster_count(), 0);
        assert_eq!(all.unclustered_count(), 3);
        assert_eq!(filter_artifact_clusters(&a, &[7].into_iter().collect()), Err(Error::UnknownCluster(7)));
    }

    #[test]
    fn lcc_picks_biggest_component() {
        let (a, faces) = corpus(&[&[0, 1], &[1, 2], &[3, 4], &[5]]);
        let (g, _) = build_coappearance_graph(&a, &faces, &BTreeMap::new()).unwrap();
        let lcc = largest_connected_component(&g);
        let ids: Vec<usize> = lcc.nodes().iter().map(|n| n.cluster_id).collect();
        assert_eq!(ids, vec![0, 1, 2]);
        assert_eq!(lcc.edge_count(), 2);
        assert_eq!(largest_connected_component(&CoAppearanceGraph::default()).node_count(), 0);
    }

    #[test]
    fn time_slices_are_cumulative() {
        let (a, faces) = corpus(&[&[0, 1], &[2], &[3]]);
        let mut images = BTreeMap::new();
        for (i, t) in [(0, 10), (1, 20)] {
            let id = format!("img{i}");
            images
                .insert(id.clone(), ImageRecord { image_id: id, timestamp: Some(Timestamp(t)), ..Default::default() });
        }
        let (g, _) = build_coappearance_graph(&a, &faces, &images).unwrap();
        let slices = time_slices(&g, &[Timestamp(5), Timestamp(10), Timestamp(100)]).unwrap();
        let counts: Vec<usize> = slices.iter().map(|s| s.node_count()).collect();
        assert_eq!(counts, vec![0, 2, 3]);
        assert_eq!(slices[1].edge_count(), 1);
        assert!(time_slices(&g, &[Timestamp(5), Timestamp(5)]).is_err());
    }

    #[test]
    fn constructor_validates_edges() {
        let nodes = vec![PersonNode::new(0), PersonNode::new(1)];
        assert!(CoAppearanceGraph::new(nodes.clone(), [(0, 0, 1)]).is_err());
        assert!(CoAppearanceGraph::new(nodes.clone(), [(0, 1, 0)]).is_err());
        assert!(CoAppearanceGraph::new(nodes.clone(), [(0, 1, 2), (1, 0, 2)]).is_err());
        assert_eq!(CoAppearanceGraph::new(nodes, [(1, 0, 2)]).unwrap().weight(0, 1), 2);
    }
}
