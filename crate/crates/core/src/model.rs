//! Domain records: detected faces, image metadata and watchlist entries.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::{Error, Result};

/// Dimension of a face embedding.
pub const EMBEDDING_DIM: usize = 128;

/// A 128-dimensional face embedding. Euclidean distance between embeddings
/// tracks facial dissimilarity.
#[derive(Clone, PartialEq)]
pub struct Embedding(Box128);

type Box128 = alloc::boxed::Box<[f64; EMBEDDING_DIM]>;

impl Embedding {
    /// Validates arity and finiteness; `owner` names the record in errors.
    pub fn new(owner: &str, values: Vec<f64>) -> Result<Self> {
        let len = values.len();
        let arr: Box128 = values
            .into_boxed_slice()
            .try_into()
            .map_err(|_| Error::EmbeddingArity { face_id: owner.to_string(), len })?;
        if arr.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteEmbedding { face_id: owner.to_string() });
        }
        Ok(Self(arr))
    }

    pub fn from_array(values: [f64; EMBEDDING_DIM]) -> Self {
        Self(alloc::boxed::Box::new(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0[..]
    }

    pub fn squared_distance(&self, other: &Embedding) -> f64 {
        self.0.iter().zip(other.0.iter()).map(|(a, b)| (a - b) * (a - b)).sum()
    }

    pub fn distance(&self, other: &Embedding) -> f64 {
        crate::math::sqrt(self.squared_distance(other))
    }
}

impl fmt::Debug for Embedding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Embedding([{:.4}, {:.4}, ..])", self.0[0], self.0[1])
    }
}

/// Seconds since the Unix epoch, UTC.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Timestamp(pub i64);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Gender {
    Female,
    Male,
}

impl Gender {
    pub fn as_str(self) -> &'static str {
        match self {
            Gender::Female => "female",
            Gender::Male => "male",
        }
    }
}

impl FromStr for Gender {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "female" => Ok(Gender::Female),
            "male" => Ok(Gender::Male),
            other => Err(Error::InvalidParameter(alloc::format!("unknown gender label `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenderEstimate {
    pub label: Gender,
    /// In `[0, 1]`.
    pub confidence: f64,
}

/// One detected face.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceRecord {
    pub face_id: String,
    pub image_id: String,
    pub embedding: Embedding,
    pub bbox: Option<[i64; 4]>,
    /// Obituary or other source identifier.
    pub source_label: Option<String>,
    pub age_estimate: Option<f64>,
    pub gender_estimate: Option<GenderEstimate>,
    pub quality: Option<f64>,
}

impl FaceRecord {
    /// Minimal record with only the required fields.
    pub fn new(face_id: impl Into<String>, image_id: impl Into<String>, embedding: Embedding) -> Self {
        Self {
            face_id: face_id.into(),
            image_id: image_id.into(),
            embedding,
            bbox: None,
            source_label: None,
            age_estimate: None,
            gender_estimate: None,
            quality: None,
        }
    }
}

/// Image-level metadata (EXIF-derived).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ImageRecord {
    pub image_id: String,
    pub timestamp: Option<Timestamp>,
    pub camera_make: Option<String>,
    pub camera_model: Option<String>,
    pub camera_serial: Option<String>,
    pub source_label: Option<String>,
}

/// Checks that face ids are unique.
pub fn check_unique_faces(faces: &[FaceRecord]) -> Result<()> {
    let mut seen = BTreeSet::new();
    for f in faces {
        if !seen.insert(f.face_id.as_str()) {
            return Err(Error::DuplicateId { kind: "face", id: f.face_id.clone() });
        }
    }
    Ok(())
}

/// Wanted-list colour, highest reward first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Tier {
    Red,
    Blue,
    Green,
    Orange,
    Grey,
}

impl Tier {
    pub const ALL: [Tier; 5] = [Tier::Red, Tier::Blue, Tier::Green, Tier::Orange, Tier::Grey];

    pub fn as_str(self) -> &'static str {
        match self {
            Tier::Red => "Red",
            Tier::Blue => "Blue",
            Tier::Green => "Green",
            Tier::Orange => "Orange",
            Tier::Grey => "Grey",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Tier {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Tier::ALL
            .into_iter()
            .find(|t| t.as_str().eq_ignore_ascii_case(s) || (s.eq_ignore_ascii_case("gray") && *t == Tier::Grey))
            .ok_or_else(|| Error::InvalidParameter(alloc::format!("unknown tier `{s}`")))
    }
}

/// Reward per tier, in thousands of Turkish Lira.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TierTable {
    rewards: [f64; 5],
}

impl Default for TierTable {
    fn default() -> Self {
        Self { rewards: [10_000.0, 3_000.0, 2_000.0, 1_000.0, 500.0] }
    }
}

impl TierTable {
    pub fn new(red: f64, blue: f64, green: f64, orange: f64, grey: f64) -> Result<Self> {
        let rewards = [red, blue, green, orange, grey];
        if rewards.iter().any(|r| !(*r > 0.0) || !r.is_finite()) {
            return Err(Error::InvalidParameter("tier rewards must be positive".into()));
        }
        Ok(Self { rewards })
    }

    pub fn reward(&self, tier: Tier) -> f64 {
        self.rewards[tier.index()]
    }
}

/// One row of a wanted list.
#[derive(Debug, Clone, PartialEq)]
pub struct WatchlistEntry {
    pub entry_id: String,
    pub first_name: String,
    pub last_name: String,
    pub tier: Tier,
    /// Thousands of Turkish Lira.
    pub reward: f64,
    pub embedding: Option<Embedding>,
}

impl WatchlistEntry {
    /// Checks the reward against the tier table.
    pub fn validate(&self, table: &TierTable) -> Result<()> {
        let expected = table.reward(self.tier);
        if !(self.reward > 0.0) || crate::math::abs(self.reward - expected) > 1e-9 * expected {
            return Err(Error::InvalidParameter(alloc::format!(
                "entry {}: reward {} inconsistent with tier {} ({expected})",
                self.entry_id,
                self.reward,
                self.tier
            )));
        }
        Ok(())
    }
}

/// Checks entry ids are unique and rewards match `table`.
pub fn validate_watchlist(entries: &[WatchlistEntry], table: &TierTable) -> Result<()> {
    let mut seen = BTreeSet::new();
    for e in entries {
        if !seen.insert(e.entry_id.as_str()) {
            return Err(Error::DuplicateId { kind: "watchlist entry", id: e.entry_id.clone() });
        }
        e.validate(table)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn embedding_arity_is_enforced() {
        let err = Embedding::new("f1", vec![0.0; 127]).unwrap_err();
        assert_eq!(err, Error::EmbeddingArity { face_id: "f1".into(), len: 127 });
        assert!(Embedding::new("f1", vec![0.0; 128]).is_ok());
    }

    #[test]
    fn embedding_rejects_nan() {
        let mut v = vec![0.0; 128];
        v[5] = f64::NAN;
        assert!(matches!(Embedding::new("x", v), Err(Error::NonFiniteEmbedding { .. })));
    }

    #[test]
    fn distance_is_euclidean() {
        let mut a = [0.0; 128];
        a[0] = 3.0;
        let mut b = [0.0; 128];
        b[1] = 4.0;
        assert_eq!(Embedding::from_array(a).distance(&Embedding::from_array(b)), 5.0);
    }

    #[test]
    fn tier_table_consistency() {
        let table = TierTable::default();
        let mut e = WatchlistEntry {
            entry_id: "w1".into(),
            first_name: "A".into(),
            last_name: "B".into(),
            tier: Tier::Red,
            reward: 10_000.0,
            embedding: None,
        };
        assert!(e.validate(&table).is_ok());
        e.reward = 500.0;
        assert!(e.validate(&table).is_err());
        assert_eq!("grey".parse::<Tier>().unwrap(), Tier::Grey);
        assert_eq!("Gray".parse::<Tier>().unwrap(), Tier::Grey);
    }

    #[test]
    fn duplicate_faces_rejected() {
        let e = Embedding::from_array([0.0; 128]);
        let faces = vec![FaceRecord::new("a", "i", e.clone()), FaceRecord::new("a", "j", e)];
        assert!(matches!(check_unique_faces(&faces), Err(Error::DuplicateId { .. })));
    }
}
