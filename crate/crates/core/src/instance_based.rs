//! Instance-based classifiers: IB1, IB1-IG, BIN-CAT, and the prototype
//! learner BIN-PRO.
//!
//! The first three keep the full training memory and score a new case
//! against every stored instance; BIN-PRO condenses each class into one
//! prototype built from the class-conditional proportions and feature
//! weights, so classification needs one comparison per class.

use serde::{Deserialize, Serialize};

use crate::corpus::{ClassId, Dataset, FeatureId, FeatureVector, Instance};
use crate::error::{Error, Result};
use crate::prediction::{Basis, RankedClass, RankedPrediction};
use crate::stats::FeatureStats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InstanceVariant {
    Ib1,
    Ib1Ig,
    BinCat,
}

/// Full training memory plus the statistics its similarity needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceModel {
    pub variant: InstanceVariant,
    pub instances: Vec<Instance>,
    pub stats: FeatureStats,
    /// Per-feature information gain; present only for IB1-IG.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gains: Option<Vec<f64>>,
}

/// Which side of a sorted merge a feature came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    Both,
    XOnly,
    YOnly,
}

/// Walks two ascending id lists, reporting shared and one-sided features.
fn merge_walk(x: &[FeatureId], y: &[FeatureId], mut visit: impl FnMut(FeatureId, Side)) {
    let (mut i, mut j) = (0, 0);
    while i < x.len() && j < y.len() {
        match x[i].cmp(&y[j]) {
            std::cmp::Ordering::Equal => {
                visit(x[i], Side::Both);
                i += 1;
                j += 1;
            }
            std::cmp::Ordering::Less => {
                visit(x[i], Side::XOnly);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                visit(y[j], Side::YOnly);
                j += 1;
            }
        }
    }
    for &f in &x[i..] {
        visit(f, Side::XOnly);
    }
    for &f in &y[j..] {
        visit(f, Side::YOnly);
    }
}

/// Overlap metric treating all features as equally important: the number of
/// features on which the two vectors differ.
pub fn ib1_distance(x: &FeatureVector, y: &FeatureVector) -> usize {
    let mut diff = 0;
    merge_walk(x.ids(), y.ids(), |_, side| {
        if side != Side::Both {
            diff += 1;
        }
    });
    diff
}

/// Same overlap metric with each differing feature weighted by its
/// information gain on the training set.
pub fn ib1ig_distance(x: &FeatureVector, y: &FeatureVector, gains: &[f64]) -> f64 {
    let mut dist = 0.0;
    merge_walk(x.ids(), y.ids(), |f, side| {
        if side != Side::Both {
            dist += gains[f];
        }
    });
    dist
}

/// Class-dependent, asymmetric similarity between a new case `x` and a
/// stored training case. Shared features add p(D_f, C_Y) * w_f; features only
/// the training case holds subtract the same amount, and features only the
/// new case holds subtract (1 - p(D_f, C_Y)) * w_f. Only features present on
/// either side contribute.
pub fn bincat_similarity(x: &FeatureVector, inst: &Instance, stats: &FeatureStats) -> f64 {
    let class = inst.class_id;
    let mut sim = 0.0;
    merge_walk(x.ids(), inst.vector.ids(), |f, side| {
        let p = stats.proportion(f, class);
        let w = stats.weight(f);
        match side {
            Side::Both => sim += p * w,
            Side::YOnly => sim -= p * w,
            Side::XOnly => sim -= (1.0 - p) * w,
        }
    });
    sim
}

impl InstanceModel {
    pub fn train(ds: &Dataset, variant: InstanceVariant) -> Result<Self> {
        let stats = FeatureStats::from_dataset(ds)?;
        let gains = match variant {
            InstanceVariant::Ib1Ig => Some(stats.gains()),
            _ => None,
        };
        Ok(InstanceModel { variant, instances: ds.instances().to_vec(), stats, gains })
    }

    fn score(&self, x: &FeatureVector, inst: &Instance) -> f64 {
        match self.variant {
            InstanceVariant::Ib1 => -(ib1_distance(x, &inst.vector) as f64),
            InstanceVariant::Ib1Ig => {
                -ib1ig_distance(x, &inst.vector, self.gains.as_ref().expect("gains present"))
            }
            InstanceVariant::BinCat => bincat_similarity(x, inst, &self.stats),
        }
    }

    /// Scores every stored instance and emits the first `k` distinct classes
    /// in order of their best-scoring instance. Ties favor the lower class
    /// id, then the earlier instance.
    pub fn rank(&self, x: &FeatureVector, k: usize) -> Result<RankedPrediction> {
        if k < 1 {
            return Err(Error::InvalidRank(k));
        }
        let mut best: Vec<Option<f64>> = vec![None; self.stats.n_classes()];
        for inst in &self.instances {
            let score = self.score(x, inst);
            let slot = &mut best[inst.class_id];
            if slot.map_or(true, |prev| score > prev) {
                *slot = Some(score);
            }
        }
        Ok(rank_class_scores(
            best.iter().enumerate().filter_map(|(c, s)| s.map(|s| (c, s))),
            k,
        ))
    }
}

/// Sorts (class, score) pairs descending by score, ties to the lower class
/// id, and truncates to `k`.
fn rank_class_scores(scores: impl Iterator<Item = (ClassId, f64)>, k: usize) -> RankedPrediction {
    let mut scored: Vec<(ClassId, f64)> = scores.collect();
    scored.sort_by(|a, b| {
        b.1.partial_cmp(&a.1).expect("finite scores").then(a.0.cmp(&b.0))
    });
    scored.truncate(k);
    RankedPrediction::new(
        scored
            .into_iter()
            .map(|(class_id, score)| RankedClass { class_id, score, basis: Basis::Exact })
            .collect(),
    )
}

/// One class summary: its size and the per-feature proportion table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prototype {
    pub class_id: ClassId,
    /// |D_C|: training instances of this class.
    pub size: usize,
    /// p(D_f, C) for every dictionary feature.
    pub p: Vec<f64>,
    /// Precomputed sum of p(D_f, C) * w_f over the whole dictionary.
    pub penalty_total: f64,
}

/// Per-class prototypes replacing the stored training memory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrototypeModel {
    pub weights: Vec<f64>,
    /// One prototype per class that appears in training, ascending class id.
    pub prototypes: Vec<Prototype>,
}

impl PrototypeModel {
    pub fn train(ds: &Dataset) -> Result<Self> {
        let stats = FeatureStats::from_dataset(ds)?;
        let n = stats.n_features();
        let weights = stats.weights().to_vec();
        let mut prototypes = Vec::new();
        for class_id in 0..stats.n_classes() {
            let size = stats.class_count(class_id);
            if size == 0 {
                continue;
            }
            let p: Vec<f64> = (0..n).map(|f| stats.proportion(f, class_id)).collect();
            let penalty_total = p.iter().zip(&weights).map(|(p, w)| p * w).sum();
            prototypes.push(Prototype { class_id, size, p, penalty_total });
        }
        Ok(PrototypeModel { weights, prototypes })
    }

    fn prototype(&self, class_id: ClassId) -> Option<&Prototype> {
        self.prototypes
            .binary_search_by_key(&class_id, |p| p.class_id)
            .ok()
            .map(|i| &self.prototypes[i])
    }

    /// Similarity of `x` to one class: present features add
    /// |D_C| * p(D_f, C) * w_f, and every dictionary feature missing from `x`
    /// subtracts p(D_f, C) * w_f. Evaluated sparsely against the precomputed
    /// full penalty sum.
    pub fn similarity(&self, x: &FeatureVector, class_id: ClassId) -> Result<f64> {
        let proto = self.prototype(class_id).ok_or(Error::UnknownClassId(class_id))?;
        let mut sim = -proto.penalty_total;
        for &f in x.ids() {
            let pw = proto.p[f] * self.weights[f];
            sim += proto.size as f64 * pw + pw;
        }
        Ok(sim)
    }

    /// Scores every class prototype, best first.
    pub fn rank(&self, x: &FeatureVector, k: usize) -> Result<RankedPrediction> {
        if k < 1 {
            return Err(Error::InvalidRank(k));
        }
        Ok(rank_class_scores(
            self.prototypes.iter().map(|p| {
                (p.class_id, self.similarity(x, p.class_id).expect("prototype exists"))
            }),
            k,
        ))
    }

    pub fn validate(&self, n: usize, c: usize) -> Result<()> {
        if self.weights.len() != n {
            return Err(Error::Invariant("prototype weights disagree with dictionary".into()));
        }
        for p in &self.prototypes {
            if p.class_id >= c || p.p.len() != n || p.size == 0 {
                return Err(Error::Invariant("malformed prototype table".into()));
            }
        }
        if !self.prototypes.windows(2).all(|w| w[0].class_id < w[1].class_id) {
            return Err(Error::Invariant("prototypes not sorted by class".into()));
        }
        Ok(())
    }
}
