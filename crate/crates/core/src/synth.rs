//! Planted-partition corpus generator.
//!
//! Each identity has a centre on a sphere in embedding space; its faces are
//! the centre plus isotropic Gaussian noise. Some faces sit alone in
//! labelled portrait images (the ground truth); the rest are packed into
//! group photographs of distinct identities, chosen with Zipf-like
//! popularity so the co-appearance network has heterogeneous degrees.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::math::{powf, sqrt};
use crate::model::{
    Embedding, FaceRecord, Gender, GenderEstimate, ImageRecord, Tier, TierTable, Timestamp, WatchlistEntry,
    EMBEDDING_DIM,
};
use crate::rng::{normal, seeded, Rng};
use crate::{Error, Result};

const FIRST_NAMES: [&str; 12] =
    ["Ekrem", "Ayşe", "Mehmet", "Zeynep", "Hüseyin", "Elif", "Çetin", "Gülşen", "İbrahim", "Şirin", "Rıza", "Özlem"];
const LAST_NAMES: [&str; 12] =
    ["Güney", "Yılmaz", "Demir", "Şahin", "Çelik", "Aydın", "Öztürk", "Kaya", "Doğan", "Arslan", "Koç", "Kurt"];

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub identities: usize,
    pub faces_per_identity: usize,
    /// Standard deviation of per-coordinate face noise.
    pub noise: f64,
    /// Norm of identity centres.
    pub center_radius: f64,
    /// Share of each identity's faces placed in labelled single-face images.
    pub portrait_fraction: f64,
    pub max_group_size: usize,
    /// Popularity of the identity at rank `r` is `(r + 1)^-popularity_exponent`.
    pub popularity_exponent: f64,
    pub missing_timestamp_fraction: f64,
    /// Share of identities, taken from the least popular, that only appear
    /// alone.
    pub loner_fraction: f64,
    /// The most popular identities get watchlist entries with a fresh photo.
    pub watchlisted: usize,
    /// Watchlist entries for people absent from the corpus.
    pub decoys: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            identities: 30,
            faces_per_identity: 20,
            noise: 0.015,
            center_radius: 0.6,
            portrait_fraction: 0.3,
            max_group_size: 5,
            popularity_exponent: 1.0,
            missing_timestamp_fraction: 0.05,
            loner_fraction: 0.0,
            watchlisted: 0,
            decoys: 0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthCorpus {
    pub faces: Vec<FaceRecord>,
    pub images: Vec<ImageRecord>,
    pub watchlist: Vec<WatchlistEntry>,
    /// Planted identity of every face.
    pub identity_of: BTreeMap<String, usize>,
    /// Ground-truth label per identity.
    pub labels: Vec<String>,
    /// `(first, last)` per identity.
    pub names: Vec<(String, String)>,
    /// Identity behind each non-decoy watchlist entry.
    pub listed_identity: BTreeMap<String, usize>,
}

impl SynthCorpus {
    /// Planted identity per face, in `faces` order.
    pub fn planted_labels(&self) -> Vec<usize> {
        self.faces.iter().map(|f| self.identity_of[&f.face_id]).collect()
    }
}

fn name_of(i: usize) -> (String, String) {
    let first = FIRST_NAMES[i % FIRST_NAMES.len()];
    let last = LAST_NAMES[(i / FIRST_NAMES.len()) % LAST_NAMES.len()];
    let round = i / (FIRST_NAMES.len() * LAST_NAMES.len());
    if round == 0 {
        (first.into(), last.into())
    } else {
        (first.into(), format!("{last}{round}"))
    }
}

fn random_center(rng: &mut Rng, radius: f64) -> [f64; EMBEDDING_DIM] {
    let mut c = [0.0; EMBEDDING_DIM];
    for v in c.iter_mut() {
        *v = normal(rng);
    }
    let norm = sqrt(c.iter().map(|v| v * v).sum());
    c.iter_mut().for_each(|v| *v *= radius / norm);
    c
}

fn jitter(rng: &mut Rng, center: &[f64; EMBEDDING_DIM], noise: f64) -> Embedding {
    let mut e = *center;
    for v in e.iter_mut() {
        *v += noise * normal(rng);
    }
    Embedding::from_array(e)
}

// Weighted draw of `k` distinct indices from `weights`.
fn weighted_distinct(rng: &mut Rng, weights: &[f64], k: usize) -> Vec<usize> {
    let mut w = weights.to_vec();
    let mut out = Vec::with_capacity(k);
    for _ in 0..k {
        let total: f64 = w.iter().sum();
        let mut target = rng.gen::<f64>() * total;
        let mut pick = w.iter().rposition(|x| *x > 0.0).expect("enough candidates");
        for (i, x) in w.iter().enumerate() {
            if *x > 0.0 && target < *x {
                pick = i;
                break;
            }
            target -= x;
        }
        out.push(pick);
        w[pick] = 0.0;
    }
    out
}

struct Identity {
    center: [f64; EMBEDDING_DIM],
    age: f64,
    gender: Gender,
}

pub fn generate(config: &SynthConfig) -> Result<SynthCorpus> {
    if config.identities == 0 || config.faces_per_identity == 0 {
        return Err(Error::InvalidParameter("identities and faces_per_identity must be positive".into()));
    }
    if config.max_group_size < 2 {
        return Err(Error::InvalidParameter("max_group_size must be at least 2".into()));
    }
    if [config.portrait_fraction, config.missing_timestamp_fraction, config.loner_fraction]
        .iter()
        .any(|f| !(0.0..=1.0).contains(f))
    {
        return Err(Error::InvalidParameter("fractions must lie in [0, 1]".into()));
    }
    if config.watchlisted > config.identities {
        return Err(Error::InvalidParameter("more watchlisted identities than identities".into()));
    }
    let mut rng = seeded(config.seed);
    let identities: Vec<Identity> = (0..config.identities)
        .map(|_| Identity {
            center: random_center(&mut rng, config.center_radius),
            age: rng.gen_range(18.0..60.0),
            gender: if rng.gen_bool(0.3) { Gender::Female } else { Gender::Male },
        })
        .collect();
    let labels: Vec<String> = (0..config.identities).map(|i| format!("person-{i:04}")).collect();
    let popularity: Vec<f64> =
        (0..config.identities).map(|r| powf((r + 1) as f64, -config.popularity_exponent)).collect();

    // (identities present, labelled portrait?)
    let mut layouts: Vec<(Vec<usize>, bool)> = Vec::new();
    let portraits = (config.portrait_fraction * config.faces_per_identity as f64 + 0.5) as usize;
    let mut remaining = vec![config.faces_per_identity - portraits.min(config.faces_per_identity); config.identities];
    for i in 0..config.identities {
        for _ in 0..portraits.min(config.faces_per_identity) {
            layouts.push((vec![i], true));
        }
    }
    let loners = (config.loner_fraction * config.identities as f64 + 0.5) as usize;
    for (i, left) in remaining.iter_mut().enumerate().skip(config.identities - loners) {
        for _ in 0..*left {
            layouts.push((vec![i], false));
        }
        *left = 0;
    }
    loop {
        let live = remaining.iter().filter(|&&r| r > 0).count();
        if live == 0 {
            break;
        }
        if live == 1 {
            let i = remaining.iter().position(|&r| r > 0).unwrap();
            for _ in 0..remaining[i] {
                layouts.push((vec![i], false));
            }
            remaining[i] = 0;
            break;
        }
        let k = rng.gen_range(2..=config.max_group_size.min(live));
        let weights: Vec<f64> = popularity.iter().zip(&remaining).map(|(p, &r)| p * r as f64).collect();
        let members = weighted_distinct(&mut rng, &weights, k);
        for &m in &members {
            remaining[m] -= 1;
        }
        layouts.push((members, false));
    }
    layouts.shuffle(&mut rng);

    let mut faces = Vec::new();
    let mut images = Vec::new();
    let mut identity_of = BTreeMap::new();
    let start = 946_684_800i64;
    let span = 20 * 365 * 86_400i64;
    for (idx, (members, labelled)) in layouts.iter().enumerate() {
        let image_id = format!("img-{idx:06}");
        let timestamp = if rng.gen_bool(config.missing_timestamp_fraction) {
            None
        } else {
            Some(Timestamp(start + rng.gen_range(0..span)))
        };
        images.push(ImageRecord {
            image_id: image_id.clone(),
            timestamp,
            source_label: labelled.then(|| labels[members[0]].clone()),
            ..ImageRecord::default()
        });
        for &m in members {
            let face_id = format!("face-{:06}", faces.len());
            let id = &identities[m];
            let mut face =
                FaceRecord::new(face_id.clone(), image_id.clone(), jitter(&mut rng, &id.center, config.noise));
            face.age_estimate = Some((id.age + 3.0 * normal(&mut rng)).max(1.0));
            let flip = rng.gen_bool(0.1);
            let label = match (id.gender, flip) {
                (Gender::Female, false) | (Gender::Male, true) => Gender::Female,
                _ => Gender::Male,
            };
            face.gender_estimate = Some(GenderEstimate { label, confidence: rng.gen_range(0.6..1.0) });
            face.quality = Some(rng.gen_range(0.5..1.0));
            identity_of.insert(face_id, m);
            faces.push(face);
        }
    }

    let names: Vec<(String, String)> = (0..config.identities).map(name_of).collect();
    let table = TierTable::default();
    let mut watchlist = Vec::new();
    let mut listed_identity = BTreeMap::new();
    for rank in 0..config.watchlisted {
        let tier = Tier::ALL[(rank * Tier::ALL.len() / config.watchlisted).min(Tier::ALL.len() - 1)];
        let entry_id = format!("wl-{rank:04}");
        watchlist.push(WatchlistEntry {
            entry_id: entry_id.clone(),
            first_name: names[rank].0.clone(),
            last_name: names[rank].1.clone(),
            tier,
            reward: table.reward(tier),
            embedding: Some(jitter(&mut rng, &identities[rank].center, config.noise)),
        });
        listed_identity.insert(entry_id, rank);
    }
    for d in 0..config.decoys {
        let center = random_center(&mut rng, config.center_radius);
        let (first, last) = name_of(config.identities + d);
        watchlist.push(WatchlistEntry {
            entry_id: format!("wl-decoy-{d:04}"),
            first_name: first,
            last_name: last,
            tier: Tier::Grey,
            reward: table.reward(Tier::Grey),
            embedding: (d % 3 != 0).then(|| jitter(&mut rng, &center, config.noise)),
        });
    }
    Ok(SynthCorpus { faces, images, watchlist, identity_of, labels, names, listed_identity })
}
