//! Ranked class predictions, the common output of every classifier.

use serde::{Deserialize, Serialize};

use crate::corpus::ClassId;

/// How a ranked class was produced: by the classifier's exact decision
/// procedure, by an approximate candidate search (one incorrect tree edge /
/// one divergent rule literal), or as the default fallback.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    Exact,
    Approximate,
    Fallback,
}

impl Basis {
    pub fn as_str(self) -> &'static str {
        match self {
            Basis::Exact => "exact",
            Basis::Approximate => "approximate",
            Basis::Fallback => "fallback",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedClass {
    pub class_id: ClassId,
    pub score: f64,
    pub basis: Basis,
}

/// An ordered list of distinct candidate classes, best first. Within one
/// basis tier scores are non-increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedPrediction {
    entries: Vec<RankedClass>,
}

impl RankedPrediction {
    pub(crate) fn new(entries: Vec<RankedClass>) -> Self {
        debug_assert!(Self::well_formed(&entries), "malformed ranking: {:?}", entries);
        RankedPrediction { entries }
    }

    fn well_formed(entries: &[RankedClass]) -> bool {
        for pair in entries.windows(2) {
            if pair[0].basis == pair[1].basis && pair[0].score < pair[1].score {
                return false;
            }
            if pair[0].basis > pair[1].basis {
                return false;
            }
        }
        let mut ids: Vec<ClassId> = entries.iter().map(|e| e.class_id).collect();
        ids.sort_unstable();
        ids.windows(2).all(|w| w[0] != w[1])
    }

    pub fn entries(&self) -> &[RankedClass] {
        &self.entries
    }

    pub fn top(&self) -> Option<&RankedClass> {
        self.entries.first()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// True when `class` appears among the first `k` entries.
    pub fn hit_within(&self, class: ClassId, k: usize) -> bool {
        self.entries.iter().take(k).any(|e| e.class_id == class)
    }
}
