//! Binary decision trees with static or dynamic feature selection.
//!
//! Static splitting ranks all features once on the whole training set and
//! walks that ranking at every node, skipping features that do not properly
//! split the local instances. Dynamic splitting re-evaluates the criterion
//! on the local subset at each node, which yields markedly more compact
//! trees. Classification is a top-down traversal; an approximate search that
//! tolerates one incorrect edge supplies extra ranked candidates.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::corpus::{ClassId, Dataset, FeatureDictionary, FeatureId, FeatureVector};
use crate::error::{Error, Result};
use crate::prediction::{Basis, RankedClass, RankedPrediction};
use crate::stats::FeatureStats;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitCriterion {
    /// Selectivity weight of the feature.
    SelectivityWeight,
    /// Entropy-based information gain.
    InformationGain,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TreeVariant {
    #[serde(rename = "bs-tree")]
    BsTree,
    #[serde(rename = "igtree")]
    IgTree,
    #[serde(rename = "bd-tree")]
    BdTree,
    #[serde(rename = "c45")]
    C45,
}

impl TreeVariant {
    pub fn criterion(self) -> SplitCriterion {
        match self {
            TreeVariant::BsTree | TreeVariant::BdTree => SplitCriterion::SelectivityWeight,
            TreeVariant::IgTree | TreeVariant::C45 => SplitCriterion::InformationGain,
        }
    }

    pub fn is_dynamic(self) -> bool {
        matches!(self, TreeVariant::BdTree | TreeVariant::C45)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    Internal { feature: FeatureId, absent: Box<TreeNode>, present: Box<TreeNode> },
    Leaf { histogram: Vec<(ClassId, usize)>, majority: ClassId },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    pub variant: TreeVariant,
    root: TreeNode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeMetrics {
    pub nodes: usize,
    pub leaves: usize,
    pub levels: usize,
}

fn criterion_value(stats: &FeatureStats, criterion: SplitCriterion, f: FeatureId) -> f64 {
    match criterion {
        SplitCriterion::SelectivityWeight => stats.weight(f),
        SplitCriterion::InformationGain => stats.information_gain(f),
    }
}

fn leaf(ds: &Dataset, subset: &[usize]) -> TreeNode {
    let mut counts: BTreeMap<ClassId, usize> = BTreeMap::new();
    for &i in subset {
        *counts.entry(ds.instances()[i].class_id).or_insert(0) += 1;
    }
    let histogram: Vec<(ClassId, usize)> = counts.into_iter().collect();
    let majority = histogram
        .iter()
        .fold((usize::MAX, 0usize), |best, &(class, count)| {
            if count > best.1 {
                (class, count)
            } else {
                best
            }
        })
        .0;
    TreeNode::Leaf { histogram, majority }
}

fn is_pure(ds: &Dataset, subset: &[usize]) -> bool {
    let first = ds.instances()[subset[0]].class_id;
    subset.iter().all(|&i| ds.instances()[i].class_id == first)
}

fn partition(ds: &Dataset, subset: &[usize], f: FeatureId) -> (Vec<usize>, Vec<usize>) {
    let mut absent = Vec::new();
    let mut present = Vec::new();
    for &i in subset {
        if ds.instances()[i].vector.contains(f) {
            present.push(i);
        } else {
            absent.push(i);
        }
    }
    (absent, present)
}

/// Builds a tree whose features are ranked once on the whole collection. At
/// each node the highest-ranked unused feature that still splits the local
/// instances into two non-empty branches is taken; features that cannot are
/// passed over.
pub fn build_static_tree(ds: &Dataset, criterion: SplitCriterion) -> Result<DecisionTree> {
    let stats = FeatureStats::from_dataset(ds)?;
    let n = ds.n_features();
    let mut ranking: Vec<FeatureId> = (0..n).collect();
    let values: Vec<f64> = (0..n).map(|f| criterion_value(&stats, criterion, f)).collect();
    ranking.sort_by(|&a, &b| {
        values[b].partial_cmp(&values[a]).expect("finite criterion").then(a.cmp(&b))
    });

    fn grow(
        ds: &Dataset,
        ranking: &[FeatureId],
        subset: Vec<usize>,
        used: &mut Vec<bool>,
    ) -> TreeNode {
        if is_pure(ds, &subset) {
            return leaf(ds, &subset);
        }
        let local = FeatureStats::from_subset(ds, &subset);
        let chosen = ranking.iter().copied().find(|&f| {
            !used[f] && local.feature_count(f) > 0 && local.feature_count(f) < subset.len()
        });
        match chosen {
            None => leaf(ds, &subset),
            Some(f) => {
                let (absent, present) = partition(ds, &subset, f);
                used[f] = true;
                let node = TreeNode::Internal {
                    feature: f,
                    absent: Box::new(grow(ds, ranking, absent, used)),
                    present: Box::new(grow(ds, ranking, present, used)),
                };
                used[f] = false;
                node
            }
        }
    }

    let mut used = vec![false; n];
    let root = grow(ds, &ranking, (0..ds.len()).collect(), &mut used);
    let variant = match criterion {
        SplitCriterion::SelectivityWeight => TreeVariant::BsTree,
        SplitCriterion::InformationGain => TreeVariant::IgTree,
    };
    Ok(DecisionTree { variant, root })
}

/// Builds a tree that re-evaluates the criterion on the local instance
/// subset at every node. A feature with zero criterion value is still
/// eligible as long as it splits properly; growth stops on purity or when no
/// unused feature discriminates.
pub fn build_dynamic_tree(ds: &Dataset, criterion: SplitCriterion) -> Result<DecisionTree> {
    if ds.is_empty() {
        return Err(Error::EmptyInput("dataset"));
    }
    let n = ds.n_features();

    fn grow(
        ds: &Dataset,
        criterion: SplitCriterion,
        subset: Vec<usize>,
        used: &mut Vec<bool>,
    ) -> TreeNode {
        if is_pure(ds, &subset) {
            return leaf(ds, &subset);
        }
        let local = FeatureStats::from_subset(ds, &subset);
        let mut best: Option<(f64, FeatureId)> = None;
        for f in 0..ds.n_features() {
            if used[f] {
                continue;
            }
            let count = local.feature_count(f);
            if count == 0 || count == subset.len() {
                continue;
            }
            let value = criterion_value(&local, criterion, f);
            if best.map_or(true, |(bv, _)| value > bv) {
                best = Some((value, f));
            }
        }
        match best {
            None => leaf(ds, &subset),
            Some((_, f)) => {
                let (absent, present) = partition(ds, &subset, f);
                used[f] = true;
                let node = TreeNode::Internal {
                    feature: f,
                    absent: Box::new(grow(ds, criterion, absent, used)),
                    present: Box::new(grow(ds, criterion, present, used)),
                };
                used[f] = false;
                node
            }
        }
    }

    let mut used = vec![false; n];
    let root = grow(ds, criterion, (0..ds.len()).collect(), &mut used);
    let variant = match criterion {
        SplitCriterion::SelectivityWeight => TreeVariant::BdTree,
        SplitCriterion::InformationGain => TreeVariant::C45,
    };
    Ok(DecisionTree { variant, root })
}

/// Builds the tree for `variant` (static or dynamic selection with the
/// variant's criterion).
pub fn build_tree(ds: &Dataset, variant: TreeVariant) -> Result<DecisionTree> {
    let tree = if variant.is_dynamic() {
        build_dynamic_tree(ds, variant.criterion())?
    } else {
        build_static_tree(ds, variant.criterion())?
    };
    debug_assert_eq!(tree.variant, variant);
    Ok(tree)
}

fn rank_leaf_histogram(histogram: &[(ClassId, usize)], k: usize) -> Vec<RankedClass> {
    let mut entries: Vec<(ClassId, usize)> = histogram.to_vec();
    entries.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    entries
        .into_iter()
        .take(k)
        .map(|(class_id, count)| RankedClass {
            class_id,
            score: count as f64,
            basis: Basis::Exact,
        })
        .collect()
}

impl DecisionTree {
    pub fn new(variant: TreeVariant, root: TreeNode) -> Self {
        DecisionTree { variant, root }
    }

    pub fn root(&self) -> &TreeNode {
        &self.root
    }

    /// Top-down traversal by feature membership; the reached leaf's classes
    /// are emitted by descending training support.
    pub fn classify_exact(&self, x: &FeatureVector, k: usize) -> RankedPrediction {
        let mut node = &self.root;
        loop {
            match node {
                TreeNode::Internal { feature, absent, present } => {
                    node = if x.contains(*feature) { present } else { absent };
                }
                TreeNode::Leaf { histogram, .. } => {
                    return RankedPrediction::new(rank_leaf_histogram(histogram, k));
                }
            }
        }
    }

    /// Traversal that may contradict the case's feature value at up to
    /// `max_deviations` internal nodes, collecting every reachable leaf.
    /// Candidates rank by deviation tier first (exact-path leaves ahead of
    /// one-deviation leaves), then by summed leaf support.
    pub fn classify_approx(
        &self,
        x: &FeatureVector,
        max_deviations: usize,
        k: usize,
    ) -> RankedPrediction {
        // support per (deviation tier, class)
        let mut tiers: Vec<BTreeMap<ClassId, usize>> =
            (0..=max_deviations).map(|_| BTreeMap::new()).collect();

        fn walk(
            node: &TreeNode,
            x: &FeatureVector,
            deviations: usize,
            max: usize,
            tiers: &mut Vec<BTreeMap<ClassId, usize>>,
        ) {
            match node {
                TreeNode::Leaf { histogram, .. } => {
                    let tier = &mut tiers[deviations];
                    for &(class, count) in histogram {
                        *tier.entry(class).or_insert(0) += count;
                    }
                }
                TreeNode::Internal { feature, absent, present } => {
                    let (correct, wrong) = if x.contains(*feature) {
                        (present, absent)
                    } else {
                        (absent, present)
                    };
                    walk(correct, x, deviations, max, tiers);
                    if deviations < max {
                        walk(wrong, x, deviations + 1, max, tiers);
                    }
                }
            }
        }

        walk(&self.root, x, 0, max_deviations, &mut tiers);

        let mut out: Vec<RankedClass> = Vec::new();
        for (tier_no, tier) in tiers.iter().enumerate() {
            let mut entries: Vec<(ClassId, usize)> =
                tier.iter().map(|(&c, &s)| (c, s)).collect();
            entries.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
            let basis = if tier_no == 0 { Basis::Exact } else { Basis::Approximate };
            for (class_id, support) in entries {
                if out.len() >= k {
                    return RankedPrediction::new(out);
                }
                if out.iter().any(|e| e.class_id == class_id) {
                    continue;
                }
                out.push(RankedClass { class_id, score: support as f64, basis });
            }
        }
        RankedPrediction::new(out)
    }

    pub fn metrics(&self) -> TreeMetrics {
        fn walk(node: &TreeNode, depth: usize, m: &mut TreeMetrics) {
            m.nodes += 1;
            m.levels = m.levels.max(depth);
            match node {
                TreeNode::Leaf { .. } => m.leaves += 1,
                TreeNode::Internal { absent, present, .. } => {
                    walk(absent, depth + 1, m);
                    walk(present, depth + 1, m);
                }
            }
        }
        let mut m = TreeMetrics { nodes: 0, leaves: 0, levels: 0 };
        walk(&self.root, 1, &mut m);
        m
    }

    /// Verifies that no feature repeats on any root-to-leaf path.
    pub fn paths_test_distinct_features(&self) -> bool {
        fn walk(node: &TreeNode, path: &mut Vec<FeatureId>) -> bool {
            match node {
                TreeNode::Leaf { .. } => true,
                TreeNode::Internal { feature, absent, present } => {
                    if path.contains(feature) {
                        return false;
                    }
                    path.push(*feature);
                    let ok = walk(absent, path) && walk(present, path);
                    path.pop();
                    ok
                }
            }
        }
        walk(&self.root, &mut Vec::new())
    }

    /// Sum of all leaf histogram counts (the training instances the tree
    /// partitions).
    pub fn leaf_support_total(&self) -> usize {
        fn walk(node: &TreeNode) -> usize {
            match node {
                TreeNode::Leaf { histogram, .. } => histogram.iter().map(|&(_, n)| n).sum(),
                TreeNode::Internal { absent, present, .. } => walk(absent) + walk(present),
            }
        }
        walk(&self.root)
    }

    pub fn to_payload(&self, dict: &FeatureDictionary) -> Value {
        fn node_value(node: &TreeNode, dict: &FeatureDictionary) -> Value {
            match node {
                TreeNode::Internal { feature, absent, present } => json!({
                    "f": feature,
                    "absent": node_value(absent, dict),
                    "present": node_value(present, dict),
                }),
                TreeNode::Leaf { histogram, .. } => {
                    let hist: BTreeMap<String, usize> = histogram
                        .iter()
                        .map(|&(class, count)| {
                            (
                                dict.class_name(class).expect("class in dictionary").to_string(),
                                count,
                            )
                        })
                        .collect();
                    json!({ "hist": hist })
                }
            }
        }
        json!({
            "variant": serde_json::to_value(self.variant).expect("variant tag"),
            "root": node_value(&self.root, dict),
        })
    }

    pub fn from_payload(value: &Value, dict: &FeatureDictionary) -> Result<DecisionTree> {
        fn node_from(value: &Value, dict: &FeatureDictionary) -> Result<TreeNode> {
            let obj = value
                .as_object()
                .ok_or_else(|| Error::Model("tree node must be an object".into()))?;
            if let Some(hist) = obj.get("hist") {
                let map = hist
                    .as_object()
                    .ok_or_else(|| Error::Model("leaf histogram must be an object".into()))?;
                let mut histogram = Vec::with_capacity(map.len());
                for (name, count) in map {
                    let class = dict
                        .class_id(name)
                        .ok_or_else(|| Error::UnknownClass(name.clone()))?;
                    let count = count
                        .as_u64()
                        .ok_or_else(|| Error::Model("leaf count must be an integer".into()))?;
                    histogram.push((class, count as usize));
                }
                if histogram.is_empty() {
                    return Err(Error::Model("empty leaf histogram".into()));
                }
                histogram.sort_by_key(|&(class, _)| class);
                let majority = histogram
                    .iter()
                    .fold((usize::MAX, 0usize), |best, &(class, count)| {
                        if count > best.1 {
                            (class, count)
                        } else {
                            best
                        }
                    })
                    .0;
                return Ok(TreeNode::Leaf { histogram, majority });
            }
            let feature = obj
                .get("f")
                .and_then(Value::as_u64)
                .ok_or_else(|| Error::Model("internal node must carry a feature id".into()))?
                as usize;
            if feature >= dict.n_features() {
                return Err(Error::FeatureOutOfRange { feature, limit: dict.n_features() });
            }
            let absent = obj
                .get("absent")
                .ok_or_else(|| Error::Model("internal node missing absent branch".into()))?;
            let present = obj
                .get("present")
                .ok_or_else(|| Error::Model("internal node missing present branch".into()))?;
            Ok(TreeNode::Internal {
                feature,
                absent: Box::new(node_from(absent, dict)?),
                present: Box::new(node_from(present, dict)?),
            })
        }

        let variant: TreeVariant = serde_json::from_value(
            value.get("variant").cloned().ok_or_else(|| Error::Model("missing variant".into()))?,
        )
        .map_err(|e| Error::Model(e.to_string()))?;
        let root = node_from(
            value.get("root").ok_or_else(|| Error::Model("missing tree root".into()))?,
            dict,
        )?;
        let tree = DecisionTree { variant, root };
        if !tree.paths_test_distinct_features() {
            return Err(Error::Model("tree repeats a feature along a path".into()));
        }
        Ok(tree)
    }
}
