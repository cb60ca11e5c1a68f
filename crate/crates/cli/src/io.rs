//! Line-delimited JSON readers and writers for faces, images, watchlists,
//! cluster assignments, matches and name sidecars.
//!
//! Files written here start with a provenance line
//! `{"provenance":{"config_digest":..,"seed":..}}`; readers skip it.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, NaiveDateTime, SecondsFormat, Utc};
use coappear_core::cluster::ClusterAssignment;
use coappear_core::model::{
    check_unique_faces, validate_watchlist, Embedding, FaceRecord, Gender, GenderEstimate, ImageRecord, Tier,
    TierTable, Timestamp, WatchlistEntry,
};
use coappear_core::watchlist::{MatchMethod, MatchResult, NodeName};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Config digest and seed stamped into every output file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_digest: String,
    pub seed: u64,
}

#[derive(Serialize)]
struct ProvenanceLine<'a> {
    provenance: &'a Provenance,
}

fn is_provenance(line: &str) -> bool {
    line.trim_start().starts_with("{\"provenance\"")
}

/// Parses every non-blank line of `path` as `T`, with its 1-based line number.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<(usize, T)>> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut out = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| CliError::io(path, e))?;
        if line.trim().is_empty() || (idx == 0 && is_provenance(&line)) {
            continue;
        }
        let value = serde_json::from_str(&line).map_err(|e| CliError::parse(path, idx + 1, e))?;
        out.push((idx + 1, value));
    }
    Ok(out)
}

/// Reads the provenance line of a file written by this crate, if present.
pub fn read_provenance(path: &Path) -> Result<Option<Provenance>> {
    #[derive(Deserialize)]
    struct Line {
        provenance: Provenance,
    }
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut first = String::new();
    BufReader::new(file).read_line(&mut first).map_err(|e| CliError::io(path, e))?;
    if !is_provenance(&first) {
        return Ok(None);
    }
    let line: Line = serde_json::from_str(&first).map_err(|e| CliError::parse(path, 1, e))?;
    Ok(Some(line.provenance))
}

pub struct JsonlWriter {
    path: PathBuf,
    out: BufWriter<File>,
}

impl JsonlWriter {
    pub fn create(path: &Path, provenance: &Provenance) -> Result<Self> {
        let file = File::create(path).map_err(|e| CliError::io(path, e))?;
        let mut w = Self { path: path.to_path_buf(), out: BufWriter::new(file) };
        w.write(&ProvenanceLine { provenance })?;
        Ok(w)
    }

    pub fn write<T: Serialize>(&mut self, record: &T) -> Result<()> {
        serde_json::to_writer(&mut self.out, record).map_err(|e| CliError::format(&self.path, e))?;
        self.out.write_all(b"\n").map_err(|e| CliError::io(&self.path, e))
    }

    pub fn finish(mut self) -> Result<()> {
        self.out.flush().map_err(|e| CliError::io(&self.path, e))
    }
}

pub fn write_jsonl<T: Serialize>(path: &Path, provenance: &Provenance, records: &[T]) -> Result<()> {
    let mut w = JsonlWriter::create(path, provenance)?;
    for r in records {
        w.write(r)?;
    }
    w.finish()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenderRow {
    pub label: String,
    pub confidence: f64,
}

impl From<&GenderEstimate> for GenderRow {
    fn from(g: &GenderEstimate) -> Self {
        Self { label: g.label.as_str().to_string(), confidence: g.confidence }
    }
}

impl GenderRow {
    pub fn parse(&self) -> std::result::Result<GenderEstimate, String> {
        let label: Gender = self.label.parse().map_err(|e: coappear_core::Error| e.to_string())?;
        if !(0.0..=1.0).contains(&self.confidence) {
            return Err(format!("gender confidence {} outside [0, 1]", self.confidence));
        }
        Ok(GenderEstimate { label, confidence: self.confidence })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FaceRow {
    pub face_id: String,
    pub image_id: String,
    pub embedding: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bbox: Option<[i64; 4]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub age_estimate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gender_estimate: Option<GenderRow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quality: Option<f64>,
}

impl From<&FaceRecord> for FaceRow {
    fn from(f: &FaceRecord) -> Self {
        Self {
            face_id: f.face_id.clone(),
            image_id: f.image_id.clone(),
            embedding: f.embedding.as_slice().to_vec(),
            bbox: f.bbox,
            source_label: f.source_label.clone(),
            age_estimate: f.age_estimate,
            gender_estimate: f.gender_estimate.as_ref().map(GenderRow::from),
            quality: f.quality,
        }
    }
}

/// Loads `faces.jsonl`, validating arity, finiteness and id uniqueness.
pub fn load_face_records(path: &Path) -> Result<Vec<FaceRecord>> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (line, row) in read_jsonl::<FaceRow>(path)? {
        let err = |m: String| CliError::parse(path, line, m);
        let embedding = Embedding::new(&row.face_id, row.embedding).map_err(|e| err(e.to_string()))?;
        if !seen.insert(row.face_id.clone()) {
            return Err(err(format!("duplicate face_id `{}`", row.face_id)));
        }
        if let Some(q) = row.quality {
            if !(0.0..=1.0).contains(&q) {
                return Err(err(format!("quality {q} outside [0, 1]")));
            }
        }
        let gender_estimate = row.gender_estimate.map(|g| g.parse()).transpose().map_err(err)?;
        out.push(FaceRecord {
            face_id: row.face_id,
            image_id: row.image_id,
            embedding,
            bbox: row.bbox,
            source_label: row.source_label,
            age_estimate: row.age_estimate,
            gender_estimate,
            quality: row.quality,
        });
    }
    check_unique_faces(&out)?;
    Ok(out)
}

pub fn write_face_records(path: &Path, provenance: &Provenance, faces: &[FaceRecord]) -> Result<()> {
    let rows: Vec<FaceRow> = faces.iter().map(FaceRow::from).collect();
    write_jsonl(path, provenance, &rows)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ImageRow {
    pub image_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub camera_make: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub camera_model: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub camera_serial: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_label: Option<String>,
}

impl From<&ImageRecord> for ImageRow {
    fn from(r: &ImageRecord) -> Self {
        Self {
            image_id: r.image_id.clone(),
            timestamp: r.timestamp.map(format_timestamp),
            camera_make: r.camera_make.clone(),
            camera_model: r.camera_model.clone(),
            camera_serial: r.camera_serial.clone(),
            source_label: r.source_label.clone(),
        }
    }
}

/// RFC 3339 with offset, or a zone-less `YYYY-MM-DDTHH:MM:SS` /
/// EXIF `YYYY:MM:DD HH:MM:SS` taken as UTC.
pub fn parse_timestamp(s: &str) -> Option<Timestamp> {
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Some(Timestamp(t.timestamp()));
    }
    ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S", "%Y:%m:%d %H:%M:%S"]
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
        .map(|t| Timestamp(t.and_utc().timestamp()))
}

pub fn format_timestamp(t: Timestamp) -> String {
    DateTime::<Utc>::from_timestamp(t.0, 0)
        .map(|d| d.to_rfc3339_opts(SecondsFormat::Secs, true))
        .unwrap_or_else(|| t.0.to_string())
}

/// Image metadata in file order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ImageTable {
    pub records: Vec<ImageRecord>,
    /// Rows whose timestamp did not parse (kept, timestamp absent).
    pub timestamp_warnings: usize,
}

impl ImageTable {
    pub fn by_id(&self) -> BTreeMap<String, ImageRecord> {
        self.records.iter().map(|r| (r.image_id.clone(), r.clone())).collect()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

pub fn load_image_metadata(path: &Path) -> Result<ImageTable> {
    let mut table = ImageTable::default();
    let mut seen = BTreeSet::new();
    for (line, row) in read_jsonl::<ImageRow>(path)? {
        if !seen.insert(row.image_id.clone()) {
            return Err(CliError::parse(path, line, format!("duplicate image_id `{}`", row.image_id)));
        }
        let timestamp = match row.timestamp.as_deref() {
            None => None,
            Some(s) => {
                let t = parse_timestamp(s);
                if t.is_none() {
                    table.timestamp_warnings += 1;
                }
                t
            }
        };
        table.records.push(ImageRecord {
            image_id: row.image_id,
            timestamp,
            camera_make: row.camera_make,
            camera_model: row.camera_model,
            camera_serial: row.camera_serial,
            source_label: row.source_label,
        });
    }
    Ok(table)
}

pub fn write_image_metadata(path: &Path, provenance: &Provenance, images: &[ImageRecord]) -> Result<()> {
    let rows: Vec<ImageRow> = images.iter().map(ImageRow::from).collect();
    write_jsonl(path, provenance, &rows)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WatchlistRow {
    pub entry_id: String,
    pub first_name: String,
    pub last_name: String,
    pub tier: String,
    pub reward: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding: Option<Vec<f64>>,
}

pub fn load_watchlist(path: &Path, tiers: &TierTable) -> Result<Vec<WatchlistEntry>> {
    let mut out = Vec::new();
    for (line, row) in read_jsonl::<WatchlistRow>(path)? {
        let err = |m: String| CliError::parse(path, line, m);
        let tier: Tier = row.tier.parse().map_err(|e: coappear_core::Error| err(e.to_string()))?;
        let embedding =
            row.embedding.map(|v| Embedding::new(&row.entry_id, v)).transpose().map_err(|e| err(e.to_string()))?;
        let entry = WatchlistEntry {
            entry_id: row.entry_id,
            first_name: row.first_name,
            last_name: row.last_name,
            tier,
            reward: row.reward,
            embedding,
        };
        entry.validate(tiers).map_err(|e| err(e.to_string()))?;
        out.push(entry);
    }
    validate_watchlist(&out, tiers)?;
    Ok(out)
}

pub fn write_watchlist(path: &Path, provenance: &Provenance, entries: &[WatchlistEntry]) -> Result<()> {
    let rows: Vec<WatchlistRow> = entries
        .iter()
        .map(|e| WatchlistRow {
            entry_id: e.entry_id.clone(),
            first_name: e.first_name.clone(),
            last_name: e.last_name.clone(),
            tier: e.tier.as_str().to_string(),
            reward: e.reward,
            embedding: e.embedding.as_ref().map(|x| x.as_slice().to_vec()),
        })
        .collect();
    write_jsonl(path, provenance, &rows)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClusterRow {
    pub face_id: String,
    pub cluster_id: Option<usize>,
}

pub fn write_clusters(path: &Path, provenance: &Provenance, assignment: &ClusterAssignment) -> Result<()> {
    let rows: Vec<ClusterRow> =
        assignment.iter().map(|(f, c)| ClusterRow { face_id: f.to_string(), cluster_id: c }).collect();
    write_jsonl(path, provenance, &rows)
}

pub fn load_clusters(path: &Path) -> Result<ClusterAssignment> {
    let rows = read_jsonl::<ClusterRow>(path)?;
    let (ids, labels) = rows.into_iter().map(|(_, r)| (r.face_id, r.cluster_id)).unzip();
    Ok(ClusterAssignment::from_labels(ids, labels)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchRow {
    pub entry_id: String,
    pub cluster_id: usize,
    pub method: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distance: Option<f64>,
    pub review_required: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accepted: Option<bool>,
}

impl From<&MatchResult> for MatchRow {
    fn from(m: &MatchResult) -> Self {
        Self {
            entry_id: m.entry_id.clone(),
            cluster_id: m.cluster_id,
            method: m.method.as_str().to_string(),
            distance: m.distance,
            review_required: m.review_required,
            accepted: None,
        }
    }
}

pub fn write_matches(path: &Path, provenance: &Provenance, matches: &[MatchResult]) -> Result<()> {
    let rows: Vec<MatchRow> = matches.iter().map(MatchRow::from).collect();
    write_jsonl(path, provenance, &rows)
}

/// Loads a matches file. For a reviewed file (rows carrying `accepted`),
/// only accepted rows are returned; rows without the field are kept.
pub fn load_matches(path: &Path) -> Result<Vec<MatchResult>> {
    let mut out = Vec::new();
    for (line, row) in read_jsonl::<MatchRow>(path)? {
        if row.accepted == Some(false) {
            continue;
        }
        let method: MatchMethod =
            row.method.parse().map_err(|e: coappear_core::Error| CliError::parse(path, line, e))?;
        out.push(MatchResult {
            cluster_id: row.cluster_id,
            entry_id: row.entry_id,
            method,
            distance: row.distance,
            review_required: row.review_required,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NameRow {
    pub cluster_id: usize,
    pub first_name: String,
    pub last_name: String,
}

/// Operator-supplied `{"cluster_id", "first_name", "last_name"}` sidecar.
pub fn load_names(path: &Path) -> Result<Vec<NodeName>> {
    Ok(read_jsonl::<NameRow>(path)?
        .into_iter()
        .map(|(_, r)| NodeName { cluster_id: r.cluster_id, first_name: r.first_name, last_name: r.last_name })
        .collect())
}

pub fn write_names(path: &Path, provenance: &Provenance, names: &[NodeName]) -> Result<()> {
    let rows: Vec<NameRow> = names
        .iter()
        .map(|n| NameRow { cluster_id: n.cluster_id, first_name: n.first_name.clone(), last_name: n.last_name.clone() })
        .collect();
    write_jsonl(path, provenance, &rows)
}

/// Writes `# config_digest=.. seed=..` and then the CSV rows.
pub fn write_csv<R: Serialize>(path: &Path, provenance: &Provenance, rows: impl IntoIterator<Item = R>) -> Result<()> {
    let mut file = BufWriter::new(File::create(path).map_err(|e| CliError::io(path, e))?);
    writeln!(file, "# config_digest={} seed={}", provenance.config_digest, provenance.seed)
        .map_err(|e| CliError::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    for r in rows {
        w.serialize(r).map_err(|e| CliError::format(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn read_csv<R: DeserializeOwned>(path: &Path) -> Result<Vec<R>> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path).map_err(|e| CliError::format(path, e))?;
    r.deserialize().enumerate().map(|(i, row)| row.map_err(|e| CliError::parse(path, i + 2, e))).collect()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut file = BufWriter::new(File::create(path).map_err(|e| CliError::io(path, e))?);
    serde_json::to_writer_pretty(&mut file, value).map_err(|e| CliError::format(path, e))?;
    file.write_all(b"\n").map_err(|e| CliError::io(path, e))?;
    file.flush().map_err(|e| CliError::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_reader(BufReader::new(file)).map_err(|e| CliError::format(path, e))
}
