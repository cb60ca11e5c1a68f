//! Identity clustering of face embeddings.
//!
//! Faces closer than a euclidean cutoff are joined in a [`SimilarityGraph`];
//! [`chinese_whispers`] partitions that graph; [`evaluate_clustering`] scores
//! a partition against ground truth with the Rand index and adjusted mutual
//! information; [`tune_cutoff`] sweeps the cutoff.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::math::{exp, ln, ln_gamma};
use crate::model::{FaceRecord, ImageRecord};
use crate::{rng, Error, Result};

/// Default iteration cap for Chinese Whispers.
pub const DEFAULT_MAX_ITERATIONS: usize = 100;

/// Undirected graph over faces; an edge joins two faces whose embeddings are
/// strictly closer than `cutoff`, weighted by that distance.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityGraph {
    face_ids: Vec<String>,
    /// Per vertex: `(neighbour, distance)`, neighbours ascending.
    adjacency: Vec<Vec<(usize, f64)>>,
    cutoff: f64,
}

impl SimilarityGraph {
    /// All-pairs construction. Pairs whose partial squared distance already
    /// exceeds `cutoff^2` are abandoned early.
    pub fn build(faces: &[FaceRecord], cutoff: f64) -> Result<Self> {
        if !(cutoff > 0.0) || !cutoff.is_finite() {
            return Err(Error::InvalidParameter("cutoff must be positive".into()));
        }
        let n = faces.len();
        let limit = cutoff * cutoff;
        let mut adjacency = vec![Vec::new(); n];
        for i in 0..n {
            let a = faces[i].embedding.as_slice();
            for j in i + 1..n {
                let b = faces[j].embedding.as_slice();
                let mut acc = 0.0;
                let mut pruned = false;
                for (chunk_a, chunk_b) in a.chunks(16).zip(b.chunks(16)) {
                    acc += chunk_a.iter().zip(chunk_b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>();
                    if acc >= limit {
                        pruned = true;
                        break;
                    }
                }
                if pruned {
                    continue;
                }
                let d = crate::math::sqrt(acc);
                if d < cutoff {
                    adjacency[i].push((j, d));
                    adjacency[j].push((i, d));
                }
            }
        }
        Ok(Self { face_ids: faces.iter().map(|f| f.face_id.clone()).collect(), adjacency, cutoff })
    }

    /// Builds directly from weighted edges `(i, j, distance)`; every distance
    /// must be below `cutoff`.
    pub fn from_edges(face_ids: Vec<String>, edges: &[(usize, usize, f64)], cutoff: f64) -> Result<Self> {
        let n = face_ids.len();
        let mut adjacency = vec![Vec::new(); n];
        for &(i, j, d) in edges {
            if i == j || i >= n || j >= n || !(d >= 0.0) || !(d < cutoff) {
                return Err(Error::InvalidParameter(alloc::format!("bad similarity edge ({i}, {j}, {d})")));
            }
            adjacency[i].push((j, d));
            adjacency[j].push((i, d));
        }
        for list in &mut adjacency {
            list.sort_by_key(|a| a.0);
            list.dedup_by_key(|e| e.0);
        }
        Ok(Self { face_ids, adjacency, cutoff })
    }

    /// Same vertices, keeping only edges strictly below a smaller cutoff.
    pub fn restrict(&self, cutoff: f64) -> Result<Self> {
        if !(cutoff > 0.0) || cutoff > self.cutoff {
            return Err(Error::InvalidParameter("restricted cutoff must lie in (0, current cutoff]".into()));
        }
        let adjacency =
            self.adjacency.iter().map(|l| l.iter().copied().filter(|&(_, d)| d < cutoff).collect()).collect();
        Ok(Self { face_ids: self.face_ids.clone(), adjacency, cutoff })
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn vertex_count(&self) -> usize {
        self.face_ids.len()
    }

    pub fn face_ids(&self) -> &[String] {
        &self.face_ids
    }

    pub fn neighbors(&self, v: usize) -> &[(usize, f64)] {
        &self.adjacency[v]
    }

    /// Edges `(i, j, distance)` with `i < j`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(i, l)| l.iter().filter(move |e| e.0 > i).map(move |&(j, d)| (i, j, d)))
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }
}

/// Partition of faces into identity clusters. Faces not assigned to any
/// cluster are "unclustered". Cluster ids are contiguous from 0, numbered
/// by first appearance in face order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterAssignment {
    face_ids: Vec<String>,
    labels: Vec<Option<usize>>,
    cluster_count: usize,
}

impl ClusterAssignment {
    /// Compacts arbitrary labels to `0..k` in order of first appearance.
    pub fn from_labels(face_ids: Vec<String>, labels: Vec<Option<usize>>) -> Result<Self> {
        if face_ids.len() != labels.len() {
            return Err(Error::LengthMismatch { left: face_ids.len(), right: labels.len() });
        }
        let mut seen = BTreeSet::new();
        for id in &face_ids {
            if !seen.insert(id.as_str()) {
                return Err(Error::DuplicateId { kind: "face", id: id.clone() });
            }
        }
        let mut remap = BTreeMap::new();
        let labels = labels
            .into_iter()
            .map(|l| {
                l.map(|l| {
                    let next = remap.len();
                    *remap.entry(l).or_insert(next)
                })
            })
            .collect();
        Ok(Self { face_ids, labels, cluster_count: remap.len() })
    }

    pub fn len(&self) -> usize {
        self.face_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.face_ids.is_empty()
    }

    pub fn cluster_count(&self) -> usize {
        self.cluster_count
    }

    pub fn face_ids(&self) -> &[String] {
        &self.face_ids
    }

    pub fn labels(&self) -> &[Option<usize>] {
        &self.labels
    }

    /// `(face_id, cluster)` pairs in face order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, Option<usize>)> + '_ {
        self.face_ids.iter().map(String::as_str).zip(self.labels.iter().copied())
    }

    pub fn cluster_of(&self, face_id: &str) -> Option<usize> {
        self.face_ids.iter().position(|f| f == face_id).and_then(|i| self.labels[i])
    }

    /// Lookup table `face_id -> cluster`, unclustered faces included as `None`.
    pub fn index(&self) -> BTreeMap<&str, Option<usize>> {
        self.iter().collect()
    }

    /// Member face positions for each cluster id.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.cluster_count];
        for (i, l) in self.labels.iter().enumerate() {
            if let Some(c) = l {
                out[*c].push(i);
            }
        }
        out
    }

    pub fn unclustered(&self) -> impl Iterator<Item = &str> + '_ {
        self.iter().filter(|(_, l)| l.is_none()).map(|(f, _)| f)
    }

    pub fn unclustered_count(&self) -> usize {
        self.labels.iter().filter(|l| l.is_none()).count()
    }

    /// Share of faces assigned to a cluster; 0 for an empty assignment.
    pub fn fraction_clustered(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        (self.len() - self.unclustered_count()) as f64 / self.len() as f64
    }
}

/// Chinese Whispers with every vertex starting in its own class.
pub fn chinese_whispers(sim: &SimilarityGraph, max_iterations: usize, seed: u64) -> Result<ClusterAssignment> {
    chinese_whispers_from(sim, (0..sim.vertex_count()).collect(), max_iterations, seed)
}

/// Chinese Whispers from given (distinct) initial class ids.
///
/// Each pass visits vertices in a freshly shuffled order; a vertex adopts the
/// class with the largest summed similarity `cutoff - distance` among its
/// neighbours, ties broken uniformly at random. Tied classes are ordered by
/// where they first occur in the neighbour list, so the result does not
/// depend on the numeric values of the initial ids. Stops after a pass with
/// no changes or after `max_iterations` passes. Vertices without edges and
/// classes of size one end up unclustered.
pub fn chinese_whispers_from(
    sim: &SimilarityGraph,
    initial: Vec<usize>,
    max_iterations: usize,
    seed: u64,
) -> Result<ClusterAssignment> {
    if max_iterations == 0 {
        return Err(Error::InvalidParameter("max_iterations must be at least 1".into()));
    }
    let n = sim.vertex_count();
    if initial.len() != n {
        return Err(Error::LengthMismatch { left: initial.len(), right: n });
    }
    let mut labels = initial;
    let mut rng = rng::seeded(seed);
    let mut order: Vec<usize> = (0..n).filter(|&v| !sim.adjacency[v].is_empty()).collect();
    let mut scores: Vec<(usize, f64)> = Vec::new();
    let mut tied: Vec<usize> = Vec::new();
    for _ in 0..max_iterations {
        order.shuffle(&mut rng);
        let mut changed = false;
        for &v in &order {
            scores.clear();
            for &(u, d) in &sim.adjacency[v] {
                let w = sim.cutoff - d;
                let l = labels[u];
                match scores.iter_mut().find(|(k, _)| *k == l) {
                    Some(entry) => entry.1 += w,
                    None => scores.push((l, w)),
                }
            }
            let best = scores.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
            tied.clear();
            tied.extend(scores.iter().filter(|s| s.1 == best).map(|s| s.0));
            let pick = if tied.len() == 1 { tied[0] } else { tied[rng.gen_range(0..tied.len())] };
            if pick != labels[v] {
                labels[v] = pick;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let mut sizes = BTreeMap::new();
    for (v, &l) in labels.iter().enumerate() {
        if !sim.adjacency[v].is_empty() {
            *sizes.entry(l).or_insert(0usize) += 1;
        }
    }
    let final_labels =
        labels.iter().enumerate().map(|(v, l)| (!sim.adjacency[v].is_empty() && sizes[l] > 1).then_some(*l)).collect();
    ClusterAssignment::from_labels(sim.face_ids.clone(), final_labels)
}

/// Agreement scores between a predicted and a reference partition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterEvaluation {
    pub rand_index: f64,
    pub adjusted_mutual_info: f64,
    pub fraction_clustered: f64,
}

/// Scores `predicted` against `truth` over the faces clustered in `truth`
/// that also appear in `predicted`. Faces unclustered in `predicted` count
/// as singleton clusters.
pub fn evaluate_clustering(predicted: &ClusterAssignment, truth: &ClusterAssignment) -> Result<ClusterEvaluation> {
    let pred_index = predicted.index();
    let mut a = Vec::new();
    let mut b = Vec::new();
    let mut clustered = 0usize;
    let offset = predicted.cluster_count();
    for (face, t) in truth.iter() {
        let Some(t) = t else { continue };
        let Some(p) = pred_index.get(face) else { continue };
        let p = match p {
            Some(c) => {
                clustered += 1;
                *c
            }
            None => offset + a.len(),
        };
        a.push(p);
        b.push(t);
    }
    if a.is_empty() {
        return Err(Error::EmptyIntersection);
    }
    Ok(ClusterEvaluation {
        rand_index: rand_index(&a, &b),
        adjusted_mutual_info: adjusted_mutual_info(&a, &b),
        fraction_clustered: clustered as f64 / a.len() as f64,
    })
}

type Counts<K> = BTreeMap<K, u64>;

fn contingency(a: &[usize], b: &[usize]) -> (Counts<(usize, usize)>, Counts<usize>, Counts<usize>) {
    let mut cells = BTreeMap::new();
    let mut rows = BTreeMap::new();
    let mut cols = BTreeMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *cells.entry((x, y)).or_insert(0) += 1;
        *rows.entry(x).or_insert(0) += 1;
        *cols.entry(y).or_insert(0) += 1;
    }
    (cells, rows, cols)
}

fn choose2(n: u64) -> u64 {
    n * n.saturating_sub(1) / 2
}

/// Rand index of two label vectors: the share of element pairs on which the
/// partitions agree (both together or both apart). 1 when fewer than two
/// elements.
pub fn rand_index(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len(), "label vectors differ in length");
    let n = a.len() as u64;
    if n < 2 {
        return 1.0;
    }
    let (cells, rows, cols) = contingency(a, b);
    let together_both: u64 = cells.values().map(|&c| choose2(c)).sum();
    let together_a: u64 = rows.values().map(|&c| choose2(c)).sum();
    let together_b: u64 = cols.values().map(|&c| choose2(c)).sum();
    let total = choose2(n);
    let agree = total + 2 * together_both - together_a - together_b;
    agree as f64 / total as f64
}

/// Adjusted mutual information (arithmetic-mean normalisation, expected
/// mutual information under the hypergeometric permutation model).
pub fn adjusted_mutual_info(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len(), "label vectors differ in length");
    let n = a.len();
    if n == 0 {
        return 1.0;
    }
    let (cells, rows, cols) = contingency(a, b);
    // identical up to relabelling
    if cells.len() == rows.len() && cells.len() == cols.len() {
        return 1.0;
    }
    let nf = n as f64;
    let mi: f64 = cells
        .iter()
        .map(|(&(r, c), &nij)| {
            let nij = nij as f64;
            nij / nf * ln(nf * nij / (rows[&r] as f64 * cols[&c] as f64))
        })
        .sum();
    let entropy = |m: &BTreeMap<usize, u64>| -> f64 {
        m.values()
            .map(|&c| {
                let p = c as f64 / nf;
                -p * ln(p)
            })
            .sum()
    };
    let h_a = entropy(&rows);
    let h_b = entropy(&cols);
    let emi = expected_mutual_info(&rows, &cols, n as u64);
    let mut denom = (h_a + h_b) / 2.0 - emi;
    if denom < 0.0 {
        denom = denom.min(-f64::EPSILON);
    } else {
        denom = denom.max(f64::EPSILON);
    }
    (mi - emi) / denom
}

fn expected_mutual_info(rows: &BTreeMap<usize, u64>, cols: &BTreeMap<usize, u64>, n: u64) -> f64 {
    // The summand depends only on the two marginal sizes, so iterate over
    // distinct sizes weighted by multiplicity.
    let multiplicity = |m: &BTreeMap<usize, u64>| {
        let mut out = BTreeMap::new();
        for &s in m.values() {
            *out.entry(s).or_insert(0u64) += 1;
        }
        out
    };
    let row_sizes = multiplicity(rows);
    let col_sizes = multiplicity(cols);
    let nf = n as f64;
    let lg_n = ln_gamma(nf + 1.0);
    let mut emi = 0.0;
    for (&ai, &ra) in &row_sizes {
        for (&bj, &cb) in &col_sizes {
            let lo = 1.max((ai + bj).saturating_sub(n));
            let hi = ai.min(bj);
            let (af, bf) = (ai as f64, bj as f64);
            let fixed =
                ln_gamma(af + 1.0) + ln_gamma(bf + 1.0) + ln_gamma(nf - af + 1.0) + ln_gamma(nf - bf + 1.0) - lg_n;
            let mut term = 0.0;
            for nij in lo..=hi {
                let k = nij as f64;
                let lp = fixed
                    - ln_gamma(k + 1.0)
                    - ln_gamma(af - k + 1.0)
                    - ln_gamma(bf - k + 1.0)
                    - ln_gamma(nf - af - bf + k + 1.0);
                term += k / nf * ln(nf * k / (af * bf)) * exp(lp);
            }
            emi += term * (ra * cb) as f64;
        }
    }
    emi
}

/// Reference partition from single-face images: such faces are grouped by
/// their source label (falling back to the image's source label). Every
/// other face is unclustered.
pub fn build_ground_truth(faces: &[FaceRecord], images: &BTreeMap<String, ImageRecord>) -> Result<ClusterAssignment> {
    let mut per_image: BTreeMap<&str, usize> = BTreeMap::new();
    for f in faces {
        *per_image.entry(f.image_id.as_str()).or_insert(0) += 1;
    }
    let mut label_ids: BTreeMap<&str, usize> = BTreeMap::new();
    let labels: Vec<Option<usize>> = faces
        .iter()
        .map(|f| {
            if per_image[f.image_id.as_str()] != 1 {
                return None;
            }
            let source = f
                .source_label
                .as_deref()
                .or_else(|| images.get(&f.image_id).and_then(|i| i.source_label.as_deref()))?;
            let next = label_ids.len();
            Some(*label_ids.entry(source).or_insert(next))
        })
        .collect();
    if label_ids.is_empty() {
        return Err(Error::NoGroundTruth);
    }
    ClusterAssignment::from_labels(faces.iter().map(|f| f.face_id.clone()).collect(), labels)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TuningPoint {
    pub cutoff: f64,
    pub evaluation: ClusterEvaluation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuningResult {
    pub points: Vec<TuningPoint>,
    /// Grid value with the highest AMI (first one on ties).
    pub best_cutoff: f64,
}

impl TuningResult {
    pub fn best(&self) -> &TuningPoint {
        self.points.iter().find(|p| p.cutoff == self.best_cutoff).expect("best cutoff is a grid point")
    }
}

/// Evaluates Chinese Whispers at each cutoff of a strictly increasing grid.
pub fn tune_cutoff(
    faces: &[FaceRecord],
    truth: &ClusterAssignment,
    grid: &[f64],
    max_iterations: usize,
    seed: u64,
) -> Result<TuningResult> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("cutoff grid is empty".into()));
    }
    if grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidParameter("cutoff grid must be strictly increasing".into()));
    }
    let widest = SimilarityGraph::build(faces, grid[grid.len() - 1])?;
    let mut points = Vec::with_capacity(grid.len());
    for &cutoff in grid {
        let sim = widest.restrict(cutoff)?;
        let predicted = chinese_whispers(&sim, max_iterations, seed)?;
        points.push(TuningPoint { cutoff, evaluation: evaluate_clustering(&predicted, truth)? });
    }
    let mut best = points[0];
    for p in &points[1..] {
        if p.evaluation.adjusted_mutual_info > best.evaluation.adjusted_mutual_info {
            best = *p;
        }
    }
    Ok(TuningResult { best_cutoff: best.cutoff, points })
}
