//! Co-appearance graph export and import: GraphML, edge CSV (with a node
//! table alongside) and JSON.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use coappear_core::build::{CoAppearanceGraph, PersonNode};
use coappear_core::model::{Gender, GenderEstimate, Tier};
use quick_xml::escape::escape;
use quick_xml::events::Event;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::io::{format_timestamp, parse_timestamp, read_csv, write_csv, write_json, Provenance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphFormat {
    #[default]
    Graphml,
    Csv,
    Json,
}

impl GraphFormat {
    pub fn extension(self) -> &'static str {
        match self {
            GraphFormat::Graphml => "graphml",
            GraphFormat::Csv => "csv",
            GraphFormat::Json => "json",
        }
    }

    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()? {
            "graphml" => Some(GraphFormat::Graphml),
            "csv" => Some(GraphFormat::Csv),
            "json" => Some(GraphFormat::Json),
            _ => None,
        }
    }
}

/// Node table written next to an edge CSV: `graph.csv` -> `graph.nodes.csv`.
pub fn node_table_path(edge_csv: &Path) -> PathBuf {
    edge_csv.with_extension("nodes.csv")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeDoc {
    pub cluster_id: usize,
    pub image_count: usize,
    pub image_ids: Vec<String>,
    pub first_seen: Option<String>,
    pub age_estimate: Option<f64>,
    pub gender_estimate: Option<String>,
    pub gender_confidence: Option<f64>,
    pub reward: Option<f64>,
    pub tier: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeDoc {
    pub source: usize,
    pub target: usize,
    pub weight: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphDoc {
    pub provenance: Provenance,
    pub nodes: Vec<NodeDoc>,
    pub edges: Vec<EdgeDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
struct NodeCsvRow {
    cluster_id: usize,
    image_count: usize,
    image_ids: String,
    first_seen: Option<String>,
    age_estimate: Option<f64>,
    gender_estimate: Option<String>,
    gender_confidence: Option<f64>,
    reward: Option<f64>,
    tier: Option<String>,
}

pub fn node_doc(n: &PersonNode) -> NodeDoc {
    NodeDoc {
        cluster_id: n.cluster_id,
        image_count: n.image_count(),
        image_ids: n.image_ids.iter().cloned().collect(),
        first_seen: n.first_seen.map(format_timestamp),
        age_estimate: n.age_estimate,
        gender_estimate: n.gender_estimate.map(|g| g.label.as_str().to_string()),
        gender_confidence: n.gender_estimate.map(|g| g.confidence),
        reward: n.reward,
        tier: n.tier.map(|t| t.as_str().to_string()),
    }
}

fn person(doc: NodeDoc) -> std::result::Result<PersonNode, String> {
    let mut n = PersonNode::new(doc.cluster_id);
    n.image_ids = doc.image_ids.into_iter().collect();
    if n.image_ids.len() != doc.image_count {
        return Err(format!("node {}: image_count disagrees with image_ids", doc.cluster_id));
    }
    n.first_seen =
        doc.first_seen.map(|s| parse_timestamp(&s).ok_or_else(|| format!("bad first_seen `{s}`"))).transpose()?;
    n.age_estimate = doc.age_estimate;
    n.gender_estimate = match (doc.gender_estimate, doc.gender_confidence) {
        (Some(l), c) => {
            let label: Gender = l.parse().map_err(|e: coappear_core::Error| e.to_string())?;
            Some(GenderEstimate { label, confidence: c.unwrap_or(1.0) })
        }
        (None, _) => None,
    };
    n.reward = doc.reward;
    n.tier = doc.tier.map(|t| t.parse::<Tier>()).transpose().map_err(|e| e.to_string())?;
    Ok(n)
}

pub fn graph_doc(graph: &CoAppearanceGraph, provenance: &Provenance) -> GraphDoc {
    let nodes = graph.nodes();
    GraphDoc {
        provenance: provenance.clone(),
        nodes: nodes.iter().map(node_doc).collect(),
        edges: graph
            .edges()
            .map(|(i, j, w)| EdgeDoc { source: nodes[i].cluster_id, target: nodes[j].cluster_id, weight: w })
            .collect(),
    }
}

fn assemble(path: &Path, nodes: Vec<NodeDoc>, edges: Vec<EdgeDoc>) -> Result<CoAppearanceGraph> {
    let nodes: Vec<PersonNode> =
        nodes.into_iter().map(person).collect::<std::result::Result<_, _>>().map_err(|m| CliError::format(path, m))?;
    let position: BTreeMap<usize, usize> = nodes.iter().enumerate().map(|(p, n)| (n.cluster_id, p)).collect();
    let lookup =
        |c: usize| position.get(&c).copied().ok_or_else(|| CliError::format(path, format!("edge to unknown node {c}")));
    let edges =
        edges.into_iter().map(|e| Ok((lookup(e.source)?, lookup(e.target)?, e.weight))).collect::<Result<Vec<_>>>()?;
    Ok(CoAppearanceGraph::new(nodes, edges)?)
}

/// Writes `graph` to `path`; the CSV format also writes the node table.
/// Returns the files written.
pub fn export_graph(
    graph: &CoAppearanceGraph,
    format: GraphFormat,
    path: &Path,
    provenance: &Provenance,
) -> Result<Vec<PathBuf>> {
    match format {
        GraphFormat::Json => {
            write_json(path, &graph_doc(graph, provenance))?;
            Ok(vec![path.to_path_buf()])
        }
        GraphFormat::Csv => {
            let doc = graph_doc(graph, provenance);
            write_csv(path, provenance, &doc.edges)?;
            let nodes_path = node_table_path(path);
            let rows = doc.nodes.into_iter().map(|n| NodeCsvRow {
                cluster_id: n.cluster_id,
                image_count: n.image_count,
                image_ids: serde_json::to_string(&n.image_ids).expect("strings serialize"),
                first_seen: n.first_seen,
                age_estimate: n.age_estimate,
                gender_estimate: n.gender_estimate,
                gender_confidence: n.gender_confidence,
                reward: n.reward,
                tier: n.tier,
            });
            write_csv(&nodes_path, provenance, rows)?;
            Ok(vec![path.to_path_buf(), nodes_path])
        }
        GraphFormat::Graphml => {
            let file = File::create(path).map_err(|e| CliError::io(path, e))?;
            let mut w = BufWriter::new(file);
            write_graphml(&mut w, graph, provenance).map_err(|e| CliError::io(path, e))?;
            w.flush().map_err(|e| CliError::io(path, e))?;
            Ok(vec![path.to_path_buf()])
        }
    }
}

pub fn import_graph(path: &Path) -> Result<CoAppearanceGraph> {
    match GraphFormat::from_path(path) {
        Some(GraphFormat::Json) => {
            let doc: GraphDoc = crate::io::read_json(path)?;
            assemble(path, doc.nodes, doc.edges)
        }
        Some(GraphFormat::Csv) => {
            let edges: Vec<EdgeDoc> = read_csv(path)?;
            let nodes_path = node_table_path(path);
            let rows: Vec<NodeCsvRow> = read_csv(&nodes_path)?;
            let nodes = rows
                .into_iter()
                .map(|r| {
                    let image_ids = serde_json::from_str(&r.image_ids).map_err(|e| CliError::format(&nodes_path, e))?;
                    Ok(NodeDoc {
                        cluster_id: r.cluster_id,
                        image_count: r.image_count,
                        image_ids,
                        first_seen: r.first_seen,
                        age_estimate: r.age_estimate,
                        gender_estimate: r.gender_estimate,
                        gender_confidence: r.gender_confidence,
                        reward: r.reward,
                        tier: r.tier,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            assemble(path, nodes, edges)
        }
        Some(GraphFormat::Graphml) => {
            let file = File::open(path).map_err(|e| CliError::io(path, e))?;
            let (nodes, edges) = read_graphml(BufReader::new(file)).map_err(|m| CliError::format(path, m))?;
            assemble(path, nodes, edges)
        }
        None => Err(CliError::format(path, "unknown graph file extension (expected graphml, csv or json)")),
    }
}

const NODE_KEYS: [(&str, &str); 9] = [
    ("cluster_id", "int"),
    ("image_count", "int"),
    ("image_ids", "string"),
    ("first_seen", "string"),
    ("age_estimate", "double"),
    ("gender_estimate", "string"),
    ("gender_confidence", "double"),
    ("reward", "double"),
    ("tier", "string"),
];

fn write_graphml<W: Write>(w: &mut W, graph: &CoAppearanceGraph, provenance: &Provenance) -> std::io::Result<()> {
    writeln!(w, r#"<?xml version="1.0" encoding="UTF-8"?>"#)?;
    writeln!(w, r#"<graphml xmlns="http://graphml.graphdrawing.org/xmlns">"#)?;
    writeln!(w, r#"  <key id="config_digest" for="graph" attr.name="config_digest" attr.type="string"/>"#)?;
    writeln!(w, r#"  <key id="seed" for="graph" attr.name="seed" attr.type="long"/>"#)?;
    for (name, ty) in NODE_KEYS {
        writeln!(w, r#"  <key id="{name}" for="node" attr.name="{name}" attr.type="{ty}"/>"#)?;
    }
    writeln!(w, r#"  <key id="weight" for="edge" attr.name="weight" attr.type="int"/>"#)?;
    writeln!(w, r#"  <graph id="coappearance" edgedefault="undirected">"#)?;
    writeln!(w, r#"    <data key="config_digest">{}</data>"#, escape(&provenance.config_digest))?;
    writeln!(w, r#"    <data key="seed">{}</data>"#, provenance.seed)?;
    for node in graph.nodes() {
        let d = node_doc(node);
        writeln!(w, r#"    <node id="n{}">"#, d.cluster_id)?;
        writeln!(w, r#"      <data key="cluster_id">{}</data>"#, d.cluster_id)?;
        writeln!(w, r#"      <data key="image_count">{}</data>"#, d.image_count)?;
        let ids = serde_json::to_string(&d.image_ids).expect("strings serialize");
        writeln!(w, r#"      <data key="image_ids">{}</data>"#, escape(&ids))?;
        let optional: [(&str, Option<String>); 6] = [
            ("first_seen", d.first_seen),
            ("age_estimate", d.age_estimate.map(|v| v.to_string())),
            ("gender_estimate", d.gender_estimate),
            ("gender_confidence", d.gender_confidence.map(|v| v.to_string())),
            ("reward", d.reward.map(|v| v.to_string())),
            ("tier", d.tier),
        ];
        for (key, value) in optional {
            if let Some(v) = value {
                writeln!(w, r#"      <data key="{key}">{}</data>"#, escape(&v))?;
            }
        }
        writeln!(w, "    </node>")?;
    }
    let nodes = graph.nodes();
    for (i, j, weight) in graph.edges() {
        let (a, b) = (nodes[i].cluster_id, nodes[j].cluster_id);
        writeln!(w, r#"    <edge source="n{a}" target="n{b}">"#)?;
        writeln!(w, r#"      <data key="weight">{weight}</data>"#)?;
        writeln!(w, "    </edge>")?;
    }
    writeln!(w, "  </graph>")?;
    writeln!(w, "</graphml>")
}

#[derive(Default)]
struct Pending {
    id: String,
    source: String,
    target: String,
    data: BTreeMap<String, String>,
}

fn attr(e: &quick_xml::events::BytesStart<'_>, name: &[u8]) -> std::result::Result<Option<String>, String> {
    for a in e.attributes() {
        let a = a.map_err(|e| e.to_string())?;
        if a.key.as_ref() == name {
            return Ok(Some(a.unescape_value().map_err(|e| e.to_string())?.into_owned()));
        }
    }
    Ok(None)
}

fn read_graphml<R: std::io::BufRead>(input: R) -> std::result::Result<(Vec<NodeDoc>, Vec<EdgeDoc>), String> {
    let mut reader = quick_xml::Reader::from_reader(input);
    let mut buf = Vec::new();
    let mut keys: BTreeMap<String, String> = BTreeMap::new();
    let mut node_ids: BTreeMap<String, usize> = BTreeMap::new();
    let mut nodes: Vec<(String, BTreeMap<String, String>)> = Vec::new();
    let mut raw_edges: Vec<Pending> = Vec::new();
    let mut current: Option<(bool, Pending)> = None;
    let mut data_key: Option<String> = None;
    let mut text = String::new();
    loop {
        let event = reader.read_event_into(&mut buf).map_err(|e| e.to_string())?;
        match &event {
            Event::Start(e) | Event::Empty(e) => {
                let empty = matches!(event, Event::Empty(_));
                match e.name().as_ref() {
                    b"key" => {
                        let id = attr(e, b"id")?.ok_or("key without id")?;
                        let name = attr(e, b"attr.name")?.unwrap_or_else(|| id.clone());
                        keys.insert(id, name);
                    }
                    b"node" => {
                        let p = Pending { id: attr(e, b"id")?.ok_or("node without id")?, ..Pending::default() };
                        if empty {
                            nodes.push((p.id, p.data));
                        } else {
                            current = Some((true, p));
                        }
                    }
                    b"edge" => {
                        let p = Pending {
                            source: attr(e, b"source")?.ok_or("edge without source")?,
                            target: attr(e, b"target")?.ok_or("edge without target")?,
                            ..Pending::default()
                        };
                        if empty {
                            raw_edges.push(p);
                        } else {
                            current = Some((false, p));
                        }
                    }
                    b"data" if !empty => {
                        data_key = Some(attr(e, b"key")?.ok_or("data without key")?);
                        text.clear();
                    }
                    _ => {}
                }
            }
            Event::Text(t) if data_key.is_some() => {
                text.push_str(&t.unescape().map_err(|e| e.to_string())?);
            }
            Event::End(e) => match e.name().as_ref() {
                b"data" => {
                    if let (Some(k), Some((_, p))) = (data_key.take(), current.as_mut()) {
                        let name = keys.get(&k).cloned().unwrap_or(k);
                        p.data.insert(name, text.clone());
                    }
                }
                b"node" | b"edge" => match current.take() {
                    Some((true, p)) => nodes.push((p.id, p.data)),
                    Some((false, p)) => raw_edges.push(p),
                    None => {}
                },
                _ => {}
            },
            Event::Eof => break,
            _ => {}
        }
        buf.clear();
    }
    let num = |d: &BTreeMap<String, String>, k: &str| -> std::result::Result<Option<f64>, String> {
        d.get(k).map(|v| v.trim().parse::<f64>().map_err(|e| format!("{k}: {e}"))).transpose()
    };
    let mut docs = Vec::with_capacity(nodes.len());
    for (id, d) in nodes {
        let cluster_id: usize = match d.get("cluster_id") {
            Some(v) => v.trim().parse().map_err(|e| format!("cluster_id: {e}"))?,
            None => id.trim_start_matches('n').parse().map_err(|_| format!("node `{id}` has no cluster_id"))?,
        };
        node_ids.insert(id, cluster_id);
        let image_ids: Vec<String> = match d.get("image_ids") {
            Some(v) => serde_json::from_str(v).map_err(|e| format!("image_ids: {e}"))?,
            None => Vec::new(),
        };
        let image_count = match d.get("image_count") {
            Some(v) => v.trim().parse().map_err(|e| format!("image_count: {e}"))?,
            None => image_ids.len(),
        };
        docs.push(NodeDoc {
            cluster_id,
            image_count,
            image_ids,
            first_seen: d.get("first_seen").cloned(),
            age_estimate: num(&d, "age_estimate")?,
            gender_estimate: d.get("gender_estimate").cloned(),
            gender_confidence: num(&d, "gender_confidence")?,
            reward: num(&d, "reward")?,
            tier: d.get("tier").cloned(),
        });
    }
    let mut edges = Vec::with_capacity(raw_edges.len());
    for e in raw_edges {
        let end = |s: &str| node_ids.get(s).copied().ok_or_else(|| format!("edge references unknown node `{s}`"));
        let weight = match e.data.get("weight") {
            Some(v) => v.trim().parse().map_err(|err| format!("weight: {err}"))?,
            None => 1,
        };
        edges.push(EdgeDoc { source: end(&e.source)?, target: end(&e.target)?, weight });
    }
    Ok((docs, edges))
}
