use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::graph::Graph;
use crate::math::{exp, powf};
use crate::{Error, Result};

pub const DEFAULT_GWESP_DECAY: f64 = 0.25;

/// Factor level given to nodes whose categorical attribute is missing when
/// [`MissingPolicy::Impute`] is in force.
pub const UNMATCHED_LEVEL: &str = "Unmatched";

/// One model term.
#[derive(Debug, Clone, PartialEq)]
pub enum Term {
    /// Number of edges.
    Edges,
    /// Number of degree-0 nodes.
    Isolates,
    /// Geometrically weighted edgewise shared partners with a fixed decay.
    Gwesp { decay: f64 },
    /// Sum over edges of `x_i + x_j` for a numeric node attribute.
    NodeCovariate { attribute: String },
    /// Per non-base level, the number of edge endpoints at that level.
    NodeFactor { attribute: String, base: String },
}

impl Term {
    pub fn node_covariate(attribute: &str) -> Self {
        Term::NodeCovariate { attribute: attribute.to_string() }
    }

    pub fn node_factor(attribute: &str, base: &str) -> Self {
        Term::NodeFactor { attribute: attribute.to_string(), base: base.to_string() }
    }

    fn is_dyad_dependent(&self) -> bool {
        matches!(self, Term::Isolates | Term::Gwesp { .. })
    }
}

/// How missing node attributes are handled when a model is compiled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MissingPolicy {
    /// Missing values are an error.
    #[default]
    Reject,
    /// Numeric attributes take 0; categorical ones take [`UNMATCHED_LEVEL`].
    Impute,
}

/// Node attributes by name, one entry per node.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct NodeAttributes {
    numeric: BTreeMap<String, Vec<Option<f64>>>,
    categorical: BTreeMap<String, Vec<Option<String>>>,
}

impl NodeAttributes {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_numeric(mut self, name: &str, values: Vec<Option<f64>>) -> Self {
        self.numeric.insert(name.to_string(), values);
        self
    }

    pub fn with_categorical(mut self, name: &str, values: Vec<Option<String>>) -> Self {
        self.categorical.insert(name.to_string(), values);
        self
    }

    pub fn numeric(&self, name: &str) -> Option<&[Option<f64>]> {
        self.numeric.get(name).map(Vec::as_slice)
    }

    pub fn categorical(&self, name: &str) -> Option<&[Option<String>]> {
        self.categorical.get(name).map(Vec::as_slice)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Column {
    Edges,
    Isolates,
    Gwesp { decay: f64 },
    Covariate(Vec<f64>),
    FactorLevel { levels: Vec<u32>, level: u32 },
}

/// Terms compiled against a node set: one statistic column per scalar
/// parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct ErgmModel {
    node_count: usize,
    terms: Vec<Term>,
    columns: Vec<Column>,
    labels: Vec<String>,
}

impl ErgmModel {
    pub fn new(terms: &[Term], node_count: usize, attributes: &NodeAttributes, missing: MissingPolicy) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::InvalidParameter("model has no terms".into()));
        }
        let mut columns = Vec::new();
        let mut labels = Vec::new();
        for term in terms {
            match term {
                Term::Edges => {
                    columns.push(Column::Edges);
                    labels.push("edges".to_string());
                }
                Term::Isolates => {
                    columns.push(Column::Isolates);
                    labels.push("isolates".to_string());
                }
                Term::Gwesp { decay } => {
                    if !decay.is_finite() || *decay < 0.0 {
                        return Err(Error::InvalidParameter("gwesp decay must be finite and non-negative".into()));
                    }
                    columns.push(Column::Gwesp { decay: *decay });
                    labels.push(format!("gwesp.fixed.{decay}"));
                }
                Term::NodeCovariate { attribute } => {
                    let raw =
                        attributes.numeric(attribute).ok_or_else(|| Error::MissingAttribute(attribute.clone()))?;
                    check_len(attribute, raw.len(), node_count)?;
                    let values = raw
                        .iter()
                        .map(|v| match (v, missing) {
                            (Some(x), _) => Ok(*x),
                            (None, MissingPolicy::Impute) => Ok(0.0),
                            (None, MissingPolicy::Reject) => Err(Error::MissingAttribute(attribute.clone())),
                        })
                        .collect::<Result<Vec<f64>>>()?;
                    columns.push(Column::Covariate(values));
                    labels.push(format!("nodecov.{attribute}"));
                }
                Term::NodeFactor { attribute, base } => {
                    let raw =
                        attributes.categorical(attribute).ok_or_else(|| Error::MissingAttribute(attribute.clone()))?;
                    check_len(attribute, raw.len(), node_count)?;
                    let values = raw
                        .iter()
                        .map(|v| match (v, missing) {
                            (Some(x), _) => Ok(x.clone()),
                            (None, MissingPolicy::Impute) => Ok(UNMATCHED_LEVEL.to_string()),
                            (None, MissingPolicy::Reject) => Err(Error::MissingAttribute(attribute.clone())),
                        })
                        .collect::<Result<Vec<String>>>()?;
                    let observed: BTreeSet<&str> = values.iter().map(String::as_str).collect();
                    if !observed.contains(base.as_str()) {
                        return Err(Error::InvalidParameter(format!(
                            "base level `{base}` not observed for attribute `{attribute}`"
                        )));
                    }
                    let level_names: Vec<&str> = observed.into_iter().collect();
                    let codes: Vec<u32> =
                        values.iter().map(|v| level_names.iter().position(|l| l == v).unwrap() as u32).collect();
                    for (code, name) in level_names.iter().enumerate() {
                        if *name == base {
                            continue;
                        }
                        columns.push(Column::FactorLevel { levels: codes.clone(), level: code as u32 });
                        labels.push(format!("nodefactor.{attribute}.{name}"));
                    }
                }
            }
        }
        Ok(Self { node_count, terms: terms.to_vec(), columns, labels })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn dyad_count(&self) -> usize {
        self.node_count * self.node_count.saturating_sub(1) / 2
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    /// Number of statistics (parameters).
    pub fn dimension(&self) -> usize {
        self.columns.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn is_dyad_independent(&self) -> bool {
        !self.terms.iter().any(Term::is_dyad_dependent)
    }

    /// Mask of columns whose change statistic depends on the rest of the graph.
    pub(crate) fn dependent_columns(&self) -> Vec<bool> {
        self.columns.iter().map(|c| matches!(c, Column::Isolates | Column::Gwesp { .. })).collect()
    }

    /// `g(y)` by full recount.
    pub fn statistics(&self, g: &Graph) -> Vec<f64> {
        let degrees = g.degrees();
        self.columns
            .iter()
            .map(|c| match c {
                Column::Edges => g.edge_count() as f64,
                Column::Isolates => degrees.iter().filter(|&&d| d == 0).count() as f64,
                Column::Gwesp { decay } => g.edges().map(|(i, j)| gwesp_weight(*decay, shared_partners(g, i, j))).sum(),
                Column::Covariate(x) => g.edges().map(|(i, j)| x[i] + x[j]).sum(),
                Column::FactorLevel { levels, level } => {
                    g.edges().map(|(i, j)| u32::from(levels[i] == *level) + u32::from(levels[j] == *level)).sum::<u32>()
                        as f64
                }
            })
            .collect()
    }

    /// `g(y + ij) - g(y - ij)` written into `out`, computed locally.
    pub(crate) fn change_into(&self, g: &Graph, i: usize, j: usize, out: &mut [f64]) {
        let present = g.has_edge(i, j);
        let off = usize::from(present);
        for (slot, c) in out.iter_mut().zip(&self.columns) {
            *slot = match c {
                Column::Edges => 1.0,
                Column::Isolates => {
                    -(f64::from(u8::from(g.degree(i) - off == 0)) + f64::from(u8::from(g.degree(j) - off == 0)))
                }
                Column::Gwesp { decay } => gwesp_change(g, *decay, i, j, off),
                Column::Covariate(x) => x[i] + x[j],
                Column::FactorLevel { levels, level } => {
                    f64::from(u8::from(levels[i] == *level)) + f64::from(u8::from(levels[j] == *level))
                }
            };
        }
    }

    /// `g(y + ij) - g(y - ij)` for the dyad `(i, j)`, computed locally.
    pub fn change(&self, g: &Graph, i: usize, j: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.dimension()];
        self.change_into(g, i, j, &mut out);
        out
    }
}

fn check_len(attribute: &str, got: usize, expected: usize) -> Result<()> {
    if got != expected {
        return Err(Error::InvalidParameter(format!("attribute `{attribute}` has {got} values for {expected} nodes")));
    }
    Ok(())
}

/// `e^tau * (1 - (1 - e^-tau)^k)`.
pub(crate) fn gwesp_weight(decay: f64, k: usize) -> f64 {
    if k == 0 {
        return 0.0;
    }
    exp(decay) * (1.0 - powf(1.0 - exp(-decay), k as f64))
}

pub(crate) fn shared_partners(g: &Graph, i: usize, j: usize) -> usize {
    let (a, b) = if g.degree(i) <= g.degree(j) { (i, j) } else { (j, i) };
    g.neighbors(a).iter().filter(|&&k| k != b && g.has_edge(b, k)).count()
}

// GWESP difference between the graph with and without edge ij. `off` is 1
// when ij is currently present, so shared-partner counts of edges touching a
// common neighbour include j (or i) and must be taken one lower.
fn gwesp_change(g: &Graph, decay: f64, i: usize, j: usize, off: usize) -> f64 {
    let (a, b) = if g.degree(i) <= g.degree(j) { (i, j) } else { (j, i) };
    let mut common = 0usize;
    let mut delta = 0.0;
    for &k in g.neighbors(a) {
        if k == b || !g.has_edge(b, k) {
            continue;
        }
        common += 1;
        for (u, v) in [(i, k), (j, k)] {
            let sp = shared_partners(g, u, v) - off;
            delta += gwesp_weight(decay, sp + 1) - gwesp_weight(decay, sp);
        }
    }
    delta + gwesp_weight(decay, common)
}

/// `g(y)` for a model built from `terms`.
pub fn network_statistics(
    g: &Graph,
    terms: &[Term],
    attributes: &NodeAttributes,
    missing: MissingPolicy,
) -> Result<Vec<f64>> {
    Ok(ErgmModel::new(terms, g.node_count(), attributes, missing)?.statistics(g))
}

/// `g(y with ij) - g(y without ij)`.
pub fn change_statistics(
    g: &Graph,
    terms: &[Term],
    attributes: &NodeAttributes,
    missing: MissingPolicy,
    dyad: (usize, usize),
) -> Result<Vec<f64>> {
    let (i, j) = dyad;
    if i == j || i >= g.node_count() || j >= g.node_count() {
        return Err(Error::InvalidParameter(format!("invalid dyad ({i}, {j})")));
    }
    Ok(ErgmModel::new(terms, g.node_count(), attributes, missing)?.change(g, i, j))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle() -> Graph {
        Graph::from_edges(3, &[(0, 1), (1, 2), (0, 2)])
    }

    #[test]
    fn simple_counts() {
        let none = NodeAttributes::new();
        assert_eq!(network_statistics(&triangle(), &[Term::Edges], &none, MissingPolicy::Reject).unwrap(), vec![3.0]);
        assert_eq!(
            network_statistics(&Graph::new(3), &[Term::Isolates], &none, MissingPolicy::Reject).unwrap(),
            vec![3.0]
        );
    }

    #[test]
    fn gwesp_on_triangle() {
        let s = network_statistics(
            &triangle(),
            &[Term::Gwesp { decay: 0.25 }],
            &NodeAttributes::new(),
            MissingPolicy::Reject,
        )
        .unwrap();
        assert!((s[0] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn gwesp_zero_without_shared_partners() {
        // 4-cycle: every edge has zero shared partners
        let c4 = Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]);
        for decay in [0.0, 0.25, 1.0, 3.0] {
            let s = network_statistics(&c4, &[Term::Gwesp { decay }], &NodeAttributes::new(), MissingPolicy::Reject)
                .unwrap();
            assert_eq!(s[0], 0.0);
        }
    }

    #[test]
    fn change_stat_examples() {
        let none = NodeAttributes::new();
        let g = Graph::new(3);
        assert_eq!(change_statistics(&g, &[Term::Edges], &none, MissingPolicy::Reject, (0, 2)).unwrap(), vec![1.0]);
        assert_eq!(change_statistics(&g, &[Term::Isolates], &none, MissingPolicy::Reject, (0, 2)).unwrap(), vec![-2.0]);
        assert!(change_statistics(&g, &[Term::Edges], &none, MissingPolicy::Reject, (1, 1)).is_err());
    }

    #[test]
    fn factor_levels_and_labels() {
        let attrs = NodeAttributes::new()
            .with_categorical("tier", vec![Some("Red".into()), Some("Grey".into()), None, Some("Blue".into())]);
        let terms = [Term::Edges, Term::node_factor("tier", "Grey")];
        assert!(matches!(ErgmModel::new(&terms, 4, &attrs, MissingPolicy::Reject), Err(Error::MissingAttribute(_))));
        let m = ErgmModel::new(&terms, 4, &attrs, MissingPolicy::Impute).unwrap();
        assert_eq!(m.labels(), &["edges", "nodefactor.tier.Blue", "nodefactor.tier.Red", "nodefactor.tier.Unmatched"]);
        let g = Graph::from_edges(4, &[(0, 1), (0, 2), (0, 3)]);
        assert_eq!(m.statistics(&g), vec![3.0, 1.0, 3.0, 1.0]);
        let bad = [Term::node_factor("tier", "Green")];
        assert!(ErgmModel::new(&bad, 4, &attrs, MissingPolicy::Impute).is_err());
    }

    #[test]
    fn covariate_sums_endpoints() {
        let attrs = NodeAttributes::new().with_numeric("age", vec![Some(1.0), Some(2.0), None]);
        let m = ErgmModel::new(&[Term::node_covariate("age")], 3, &attrs, MissingPolicy::Impute).unwrap();
        assert_eq!(m.statistics(&triangle()), vec![6.0]);
        assert!(m.is_dyad_independent());
    }
}
