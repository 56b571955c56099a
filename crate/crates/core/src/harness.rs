//! One train/rank contract over all twelve learners, plus evaluation,
//! multi-algorithm comparison, model files, and the synthetic corpus
//! generator used for benchmarks.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;
use std::time::Instant;

use serde_json::{json, Value};

use crate::corpus::{self, ClassId, Dataset, Feature, FeatureDictionary, FeatureSource, FeatureVector, Instance};
use crate::error::{Error, Result};
use crate::instance_based::{InstanceModel, InstanceVariant, PrototypeModel};
use crate::prediction::RankedPrediction;
use crate::rules::{build_se_tree, learn_bin_rules, learn_foil, extract_rules_from_tree, RuleBase, SeTree};
use crate::stats::FeatureStats;
use crate::trees::{build_dynamic_tree, build_static_tree, DecisionTree, SplitCriterion};

/// The evaluated algorithm roster. `c45-rules` and `se-tree` are derived
/// models, built from the C4.5 tree and the BIN-rules base respectively.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AlgorithmId {
    Ib1,
    Ib1Ig,
    BinCat,
    BinPro,
    BsTree,
    IgTree,
    BdTree,
    C45,
    Foil,
    BinRules,
    C45Rules,
    SeTree,
}

impl AlgorithmId {
    pub const ALL: [AlgorithmId; 12] = [
        AlgorithmId::Ib1,
        AlgorithmId::Ib1Ig,
        AlgorithmId::BinCat,
        AlgorithmId::BinPro,
        AlgorithmId::BsTree,
        AlgorithmId::IgTree,
        AlgorithmId::BdTree,
        AlgorithmId::C45,
        AlgorithmId::Foil,
        AlgorithmId::BinRules,
        AlgorithmId::C45Rules,
        AlgorithmId::SeTree,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AlgorithmId::Ib1 => "ib1",
            AlgorithmId::Ib1Ig => "ib1-ig",
            AlgorithmId::BinCat => "bin-cat",
            AlgorithmId::BinPro => "bin-pro",
            AlgorithmId::BsTree => "bs-tree",
            AlgorithmId::IgTree => "igtree",
            AlgorithmId::BdTree => "bd-tree",
            AlgorithmId::C45 => "c45",
            AlgorithmId::Foil => "foil",
            AlgorithmId::BinRules => "bin-rules",
            AlgorithmId::C45Rules => "c45-rules",
            AlgorithmId::SeTree => "se-tree",
        }
    }
}

impl fmt::Display for AlgorithmId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AlgorithmId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AlgorithmId::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| Error::UnknownAlgorithm(s.to_string()))
    }
}

/// The learned knowledge behind one algorithm id.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelKind {
    Instance(InstanceModel),
    Prototype(PrototypeModel),
    Tree(DecisionTree),
    Rules(RuleBase),
    /// BIN-rules compiled into a set-enumeration trie; the trie is an index
    /// and is rebuilt deterministically from the rule base on load.
    SeTree { rules: RuleBase, index: SeTree },
}

/// A trained model: algorithm tag, the dictionary it was trained under (and
/// its digest, used to reject mismatched inputs), and the learned payload.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    algo: AlgorithmId,
    dictionary: FeatureDictionary,
    dict_hash: String,
    kind: ModelKind,
}

/// Trains `algo` on a non-empty labeled dataset. Deterministic for fixed
/// inputs.
pub fn train(algo: AlgorithmId, ds: &Dataset) -> Result<Model> {
    if ds.is_empty() {
        return Err(Error::EmptyInput("training set"));
    }
    let kind = match algo {
        AlgorithmId::Ib1 => ModelKind::Instance(InstanceModel::train(ds, InstanceVariant::Ib1)?),
        AlgorithmId::Ib1Ig => {
            ModelKind::Instance(InstanceModel::train(ds, InstanceVariant::Ib1Ig)?)
        }
        AlgorithmId::BinCat => {
            ModelKind::Instance(InstanceModel::train(ds, InstanceVariant::BinCat)?)
        }
        AlgorithmId::BinPro => ModelKind::Prototype(PrototypeModel::train(ds)?),
        AlgorithmId::BsTree => {
            ModelKind::Tree(build_static_tree(ds, SplitCriterion::SelectivityWeight)?)
        }
        AlgorithmId::IgTree => {
            ModelKind::Tree(build_static_tree(ds, SplitCriterion::InformationGain)?)
        }
        AlgorithmId::BdTree => {
            ModelKind::Tree(build_dynamic_tree(ds, SplitCriterion::SelectivityWeight)?)
        }
        AlgorithmId::C45 => {
            ModelKind::Tree(build_dynamic_tree(ds, SplitCriterion::InformationGain)?)
        }
        AlgorithmId::Foil => ModelKind::Rules(learn_foil(ds)?),
        AlgorithmId::BinRules => {
            let stats = FeatureStats::from_dataset(ds)?;
            ModelKind::Rules(learn_bin_rules(ds, &stats)?)
        }
        AlgorithmId::C45Rules => {
            let tree = build_dynamic_tree(ds, SplitCriterion::InformationGain)?;
            ModelKind::Rules(extract_rules_from_tree(&tree, ds))
        }
        AlgorithmId::SeTree => {
            let stats = FeatureStats::from_dataset(ds)?;
            let rules = learn_bin_rules(ds, &stats)?;
            let index = build_se_tree(&rules)?;
            ModelKind::SeTree { rules, index }
        }
    };
    Ok(Model {
        algo,
        dictionary: ds.dictionary().clone(),
        dict_hash: ds.dictionary().digest(),
        kind,
    })
}

impl Model {
    pub fn algo(&self) -> AlgorithmId {
        self.algo
    }

    pub fn dictionary(&self) -> &FeatureDictionary {
        &self.dictionary
    }

    pub fn dict_hash(&self) -> &str {
        &self.dict_hash
    }

    pub fn kind(&self) -> &ModelKind {
        &self.kind
    }

    /// Ranked candidate classes for one encoded case. Tree models use the
    /// one-incorrect-edge search and rule models the one-divergent-literal
    /// test, so model-based learners still produce ranked candidate lists.
    pub fn rank(&self, x: &FeatureVector, k: usize) -> Result<RankedPrediction> {
        if k < 1 {
            return Err(Error::InvalidRank(k));
        }
        match &self.kind {
            ModelKind::Instance(m) => m.rank(x, k),
            ModelKind::Prototype(m) => m.rank(x, k),
            ModelKind::Tree(t) => Ok(t.classify_approx(x, 1, k)),
            ModelKind::Rules(rb) => Ok(rb.classify(x, k)),
            ModelKind::SeTree { index, .. } => Ok(index.classify(x, k)),
        }
    }

    /// Knowledge-size metrics where the representation has them: node counts
    /// for trees, rule counts for rule bases, both for the SE-tree.
    pub fn metrics_value(&self) -> Option<Value> {
        match &self.kind {
            ModelKind::Instance(_) | ModelKind::Prototype(_) => None,
            ModelKind::Tree(t) => {
                Some(serde_json::to_value(t.metrics()).expect("tree metrics"))
            }
            ModelKind::Rules(rb) => {
                Some(serde_json::to_value(rb.metrics()).expect("rule metrics"))
            }
            ModelKind::SeTree { rules, index } => {
                let mut value =
                    serde_json::to_value(index.shape()).expect("se-tree shape");
                let rm = serde_json::to_value(rules.metrics()).expect("rule metrics");
                value
                    .as_object_mut()
                    .expect("object")
                    .extend(rm.as_object().expect("object").clone());
                Some(value)
            }
        }
    }

    fn payload(&self) -> Value {
        match &self.kind {
            ModelKind::Instance(m) => serde_json::to_value(m).expect("instance payload"),
            ModelKind::Prototype(m) => serde_json::to_value(m).expect("prototype payload"),
            ModelKind::Tree(t) => t.to_payload(&self.dictionary),
            ModelKind::Rules(rb) => rb.to_payload(&self.dictionary),
            ModelKind::SeTree { rules, .. } => rules.to_payload(&self.dictionary),
        }
    }

    pub fn save(&self, mut writer: impl Write) -> Result<()> {
        let envelope = json!({
            "version": 1,
            "algo": self.algo.as_str(),
            "dict_hash": self.dict_hash,
            "dictionary": serde_json::to_value(&self.dictionary).expect("dictionary value"),
            "payload": self.payload(),
        });
        writeln!(writer, "{}", serde_json::to_string_pretty(&envelope)?)?;
        Ok(())
    }

    pub fn load(reader: impl BufRead) -> Result<Model> {
        let envelope: Value = serde_json::from_reader(reader)?;
        let version = envelope.get("version").and_then(Value::as_u64).unwrap_or(0);
        if version != 1 {
            return Err(Error::Model(format!("unsupported model version {}", version)));
        }
        let algo: AlgorithmId = envelope
            .get("algo")
            .and_then(Value::as_str)
            .ok_or_else(|| Error::Model("missing algo tag".into()))?
            .parse()?;
        let dictionary: FeatureDictionary = serde_json::from_value(
            envelope
                .get("dictionary")
                .cloned()
                .ok_or_else(|| Error::Model("missing dictionary".into()))?,
        )
        .map_err(|e| Error::Model(e.to_string()))?;
        let dict_hash = envelope
            .get("dict_hash")
            .and_then(Value::as_str)
            .ok_or_else(|| Error::Model("missing dict_hash".into()))?
            .to_string();
        if dictionary.digest() != dict_hash {
            return Err(Error::Model(
                "dict_hash does not match the embedded dictionary".into(),
            ));
        }
        let payload = envelope
            .get("payload")
            .ok_or_else(|| Error::Model("missing payload".into()))?;

        let n = dictionary.n_features();
        let c = dictionary.n_classes();
        let kind = match algo {
            AlgorithmId::Ib1 | AlgorithmId::Ib1Ig | AlgorithmId::BinCat => {
                let m: InstanceModel = serde_json::from_value(payload.clone())
                    .map_err(|e| Error::Model(e.to_string()))?;
                let expected = match algo {
                    AlgorithmId::Ib1 => InstanceVariant::Ib1,
                    AlgorithmId::Ib1Ig => InstanceVariant::Ib1Ig,
                    _ => InstanceVariant::BinCat,
                };
                if m.variant != expected {
                    return Err(Error::Model("payload variant disagrees with algo tag".into()));
                }
                if m.variant == InstanceVariant::Ib1Ig
                    && m.gains.as_ref().map_or(true, |g| g.len() != n)
                {
                    return Err(Error::Model("missing or malformed gains".into()));
                }
                m.stats.validate()?;
                if m.stats.n_features() != n || m.stats.n_classes() != c {
                    return Err(Error::Model("stats disagree with dictionary".into()));
                }
                for inst in &m.instances {
                    if inst.class_id >= c || inst.vector.max_id().is_some_and(|f| f >= n) {
                        return Err(Error::Model("instance outside dictionary bounds".into()));
                    }
                }
                ModelKind::Instance(m)
            }
            AlgorithmId::BinPro => {
                let m: PrototypeModel = serde_json::from_value(payload.clone())
                    .map_err(|e| Error::Model(e.to_string()))?;
                m.validate(n, c)?;
                ModelKind::Prototype(m)
            }
            AlgorithmId::BsTree | AlgorithmId::IgTree | AlgorithmId::BdTree | AlgorithmId::C45 => {
                ModelKind::Tree(DecisionTree::from_payload(payload, &dictionary)?)
            }
            AlgorithmId::Foil | AlgorithmId::BinRules | AlgorithmId::C45Rules => {
                ModelKind::Rules(RuleBase::from_payload(payload, &dictionary)?)
            }
            AlgorithmId::SeTree => {
                let rules = RuleBase::from_payload(payload, &dictionary)?;
                let index = build_se_tree(&rules)?;
                ModelKind::SeTree { rules, index }
            }
        };
        Ok(Model { algo, dictionary, dict_hash, kind })
    }
}

/// Success and top-3 rates plus rank-1 confusion counts for one model on one
/// test set.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub total: usize,
    pub correct: usize,
    pub top3_correct: usize,
    pub success_rate: f64,
    pub top3_rate: f64,
    /// (true class, rank-1 class) -> count.
    pub confusion: BTreeMap<(ClassId, ClassId), usize>,
}

/// Ranks every test case and scores rank-1 success and top-3 containment.
/// The test set must be encoded under the model's dictionary.
pub fn evaluate(model: &Model, test: &Dataset, k: usize) -> Result<Evaluation> {
    if test.is_empty() {
        return Err(Error::EmptyInput("test set"));
    }
    if test.dictionary().digest() != model.dict_hash {
        return Err(Error::DictionaryMismatch {
            expected: model.dict_hash.clone(),
            actual: test.dictionary().digest(),
        });
    }
    let depth = k.max(3);
    let mut correct = 0;
    let mut top3_correct = 0;
    let mut confusion: BTreeMap<(ClassId, ClassId), usize> = BTreeMap::new();
    for inst in test.instances() {
        let ranking = model.rank(&inst.vector, depth)?;
        if let Some(top) = ranking.top() {
            *confusion.entry((inst.class_id, top.class_id)).or_insert(0) += 1;
            if top.class_id == inst.class_id {
                correct += 1;
            }
        }
        if ranking.hit_within(inst.class_id, 3) {
            top3_correct += 1;
        }
    }
    assert!(top3_correct >= correct, "top-3 hits cannot undercut rank-1 hits");
    let total = test.len();
    Ok(Evaluation {
        total,
        correct,
        top3_correct,
        success_rate: correct as f64 / total as f64,
        top3_rate: top3_correct as f64 / total as f64,
        confusion,
    })
}

/// Outcome of one algorithm inside a comparison run; failures are recorded
/// rather than aborting the remaining algorithms.
#[derive(Debug, Clone)]
pub struct AlgoOutcome {
    pub algo: AlgorithmId,
    pub outcome: std::result::Result<AlgoRun, String>,
}

#[derive(Debug, Clone)]
pub struct AlgoRun {
    pub evaluation: Evaluation,
    pub metrics: Option<Value>,
    pub train_ms: u64,
    pub classify_ms: u64,
}

/// Trains and evaluates each algorithm on identical data, in the order
/// given.
pub fn compare(
    algos: &[AlgorithmId],
    train_set: &Dataset,
    test_set: &Dataset,
    k: usize,
) -> Result<Vec<AlgoOutcome>> {
    if algos.is_empty() {
        return Err(Error::EmptyInput("algorithm list"));
    }
    let mut outcomes = Vec::with_capacity(algos.len());
    for &algo in algos {
        let run = (|| {
            let t0 = Instant::now();
            let model = train(algo, train_set).map_err(|e| e.to_string())?;
            let train_ms = t0.elapsed().as_millis() as u64;
            let t1 = Instant::now();
            let evaluation = evaluate(&model, test_set, k).map_err(|e| e.to_string())?;
            let classify_ms = t1.elapsed().as_millis() as u64;
            Ok(AlgoRun { evaluation, metrics: model.metrics_value(), train_ms, classify_ms })
        })();
        outcomes.push(AlgoOutcome { algo, outcome: run });
    }
    Ok(outcomes)
}

/// Renders a comparison as the report file object.
pub fn report_json(config: Value, outcomes: &[AlgoOutcome]) -> Value {
    let results: Vec<Value> = outcomes
        .iter()
        .map(|o| match &o.outcome {
            Ok(run) => json!({
                "algo": o.algo.as_str(),
                "success": run.evaluation.success_rate,
                "top3": run.evaluation.top3_rate,
                "metrics": run.metrics.clone().unwrap_or(Value::Null),
                "train_ms": run.train_ms,
                "classify_ms": run.classify_ms,
            }),
            Err(message) => json!({
                "algo": o.algo.as_str(),
                "error": message,
            }),
        })
        .collect();
    json!({ "config": config, "results": results })
}

/// Shape of the generated corpus. The default mirrors the reference
/// workload: 100 command classes with 10 sentences each over roughly 316
/// features, split 900/100.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub classes: usize,
    pub per_class: usize,
    pub features: usize,
    /// Features forming each class's signature.
    pub signature_size: usize,
    /// Probability that a signature feature is omitted from an instance.
    pub drop_prob: f64,
    /// Uniform distractor features added per instance.
    pub noise_features: usize,
    pub seed: u64,
    /// Give every class a signature disjoint from all others instead of
    /// sampling signatures independently (which lets classes overlap, like
    /// the near-identical command classes of the real task).
    pub disjoint_signatures: bool,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            classes: 100,
            per_class: 10,
            features: 316,
            signature_size: 6,
            drop_prob: 0.1,
            noise_features: 3,
            seed: 42,
            disjoint_signatures: false,
        }
    }
}

impl SynthConfig {
    fn validate(&self) -> Result<()> {
        if self.classes == 0 || self.per_class == 0 || self.features == 0 {
            return Err(Error::InvalidConfig(
                "classes, per-class count, and features must be positive".into(),
            ));
        }
        if self.signature_size == 0 || self.signature_size > self.features {
            return Err(Error::InvalidConfig(format!(
                "signature size {} must lie in 1..={}",
                self.signature_size, self.features
            )));
        }
        if !(0.0..=1.0).contains(&self.drop_prob) {
            return Err(Error::InvalidConfig(format!(
                "drop probability {} outside [0, 1]",
                self.drop_prob
            )));
        }
        if self.disjoint_signatures && self.classes * self.signature_size > self.features {
            return Err(Error::InvalidConfig(format!(
                "disjoint signatures need {} features, only {} available",
                self.classes * self.signature_size,
                self.features
            )));
        }
        if self.classes * self.per_class < 2 {
            return Err(Error::InvalidConfig("need at least 2 instances to split".into()));
        }
        Ok(())
    }
}

/// Generates a labeled corpus and returns its 90/10 stratified holdout
/// split. Each class draws a feature signature; each instance keeps every
/// signature feature with probability `1 - drop_prob` and picks up
/// `noise_features` uniform distractors. Fully deterministic per seed.
pub fn synthesize(cfg: &SynthConfig) -> Result<(Dataset, Dataset)> {
    use rand::seq::SliceRandom;
    use rand::Rng;
    use rand::SeedableRng;

    cfg.validate()?;
    let features: Vec<Feature> = (0..cfg.features)
        .map(|id| Feature {
            id,
            name: format!("concept_{:03}", id),
            source: FeatureSource::Dfl,
        })
        .collect();
    let classes: Vec<String> = (0..cfg.classes).map(|j| format!("cmd_{:03}", j)).collect();
    let dict = FeatureDictionary::from_parts(features, classes)?;

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.seed);
    let signatures: Vec<Vec<usize>> = if cfg.disjoint_signatures {
        let mut pool: Vec<usize> = (0..cfg.features).collect();
        pool.shuffle(&mut rng);
        (0..cfg.classes)
            .map(|j| pool[j * cfg.signature_size..(j + 1) * cfg.signature_size].to_vec())
            .collect()
    } else {
        (0..cfg.classes)
            .map(|_| {
                rand::seq::index::sample(&mut rng, cfg.features, cfg.signature_size).into_vec()
            })
            .collect()
    };

    let mut ids = Vec::with_capacity(cfg.classes * cfg.per_class);
    let mut instances = Vec::with_capacity(cfg.classes * cfg.per_class);
    for (class_id, signature) in signatures.iter().enumerate() {
        for i in 0..cfg.per_class {
            let mut present: Vec<usize> = signature
                .iter()
                .copied()
                .filter(|_| rng.gen_bool(1.0 - cfg.drop_prob))
                .collect();
            for _ in 0..cfg.noise_features {
                present.push(rng.gen_range(0..cfg.features));
            }
            ids.push(format!("cmd_{:03}-{}", class_id, i));
            instances.push(Instance::new(FeatureVector::new(present), class_id));
        }
    }
    let full = Dataset::new(dict, ids, instances)?;
    corpus::split(&full, 0.1, cfg.seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg(seed: u64) -> SynthConfig {
        SynthConfig {
            classes: 5,
            per_class: 10,
            features: 40,
            signature_size: 4,
            drop_prob: 0.0,
            noise_features: 0,
            seed,
            disjoint_signatures: true,
        }
    }

    #[test]
    fn algorithm_ids_roundtrip() {
        for algo in AlgorithmId::ALL {
            assert_eq!(algo.as_str().parse::<AlgorithmId>().unwrap(), algo);
        }
        assert!(matches!(
            "c4.5".parse::<AlgorithmId>(),
            Err(Error::UnknownAlgorithm(_))
        ));
    }

    #[test]
    fn synthesize_default_shape() {
        let (train, test) = synthesize(&SynthConfig::default()).unwrap();
        assert_eq!(train.len(), 900);
        assert_eq!(test.len(), 100);
        assert_eq!(train.n_features(), 316);
        assert_eq!(train.n_classes(), 100);
    }

    #[test]
    fn synthesize_is_deterministic() {
        let (a_train, a_test) = synthesize(&small_cfg(9)).unwrap();
        let (b_train, b_test) = synthesize(&small_cfg(9)).unwrap();
        assert_eq!(a_train, b_train);
        assert_eq!(a_test, b_test);
        let (c_train, _) = synthesize(&small_cfg(10)).unwrap();
        assert_ne!(a_train, c_train);
    }

    #[test]
    fn synthesize_rejects_bad_config() {
        let mut cfg = small_cfg(1);
        cfg.drop_prob = 1.5;
        assert!(matches!(synthesize(&cfg), Err(Error::InvalidConfig(_))));
        let mut cfg = small_cfg(1);
        cfg.signature_size = 100;
        assert!(matches!(synthesize(&cfg), Err(Error::InvalidConfig(_))));
        let mut cfg = small_cfg(1);
        cfg.classes = 11; // 11 * 4 > 40 disjoint features
        assert!(matches!(synthesize(&cfg), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn separable_corpus_trains_all_algorithms_to_perfection() {
        let (train, _) = synthesize(&small_cfg(7)).unwrap();
        for algo in AlgorithmId::ALL {
            let model = train_model(algo, &train);
            let eval = evaluate(&model, &train, 3).unwrap();
            assert_eq!(eval.success_rate, 1.0, "{} fell short on its own training set", algo);
        }
    }

    fn train_model(algo: AlgorithmId, ds: &Dataset) -> Model {
        train(algo, ds).unwrap_or_else(|e| panic!("training {} failed: {}", algo, e))
    }

    #[test]
    fn evaluate_scores_rank_positions() {
        let (train_set, test_set) = synthesize(&small_cfg(3)).unwrap();
        let model = train_model(AlgorithmId::Ib1, &train_set);
        let eval = evaluate(&model, &test_set, 3).unwrap();
        assert!(eval.top3_rate >= eval.success_rate);
        assert_eq!(eval.total, test_set.len());
        let diag: usize = eval
            .confusion
            .iter()
            .filter_map(|(&(t, p), &n)| (t == p).then_some(n))
            .sum();
        assert_eq!(diag, eval.correct);
    }

    #[test]
    fn evaluate_rejects_empty_and_mismatched() {
        let (train_set, _) = synthesize(&small_cfg(3)).unwrap();
        let model = train_model(AlgorithmId::Ib1, &train_set);
        let empty =
            Dataset::new(train_set.dictionary().clone(), vec![], vec![]).unwrap();
        assert!(matches!(evaluate(&model, &empty, 3), Err(Error::EmptyInput(_))));

        let (other_train, _) = synthesize(&SynthConfig {
            features: 41,
            ..small_cfg(3)
        })
        .unwrap();
        assert!(matches!(
            evaluate(&model, &other_train, 3),
            Err(Error::DictionaryMismatch { .. })
        ));
    }

    #[test]
    fn compare_single_matches_direct_evaluation() {
        let (train_set, test_set) = synthesize(&small_cfg(5)).unwrap();
        let outcomes = compare(&[AlgorithmId::Ib1], &train_set, &test_set, 3).unwrap();
        assert_eq!(outcomes.len(), 1);
        let run = outcomes[0].outcome.as_ref().unwrap();
        let direct =
            evaluate(&train_model(AlgorithmId::Ib1, &train_set), &test_set, 3).unwrap();
        assert_eq!(run.evaluation, direct);
    }

    #[test]
    fn compare_dispatches_metrics_by_representation() {
        let (train_set, test_set) = synthesize(&small_cfg(5)).unwrap();
        let outcomes = compare(
            &[AlgorithmId::C45, AlgorithmId::C45Rules, AlgorithmId::Ib1],
            &train_set,
            &test_set,
            3,
        )
        .unwrap();
        let tree_metrics = outcomes[0].outcome.as_ref().unwrap().metrics.as_ref().unwrap();
        assert!(tree_metrics.get("nodes").is_some());
        let rule_metrics = outcomes[1].outcome.as_ref().unwrap().metrics.as_ref().unwrap();
        assert!(rule_metrics.get("rules").is_some());
        assert!(outcomes[2].outcome.as_ref().unwrap().metrics.is_none());
    }

    #[test]
    fn derived_models_agree_at_rank_one() {
        let cfg = SynthConfig { drop_prob: 0.15, noise_features: 2, ..small_cfg(13) };
        let (train_set, test_set) = synthesize(&cfg).unwrap();
        let bin = train_model(AlgorithmId::BinRules, &train_set);
        let se = train_model(AlgorithmId::SeTree, &train_set);
        for inst in test_set.instances() {
            let a = bin.rank(&inst.vector, 3).unwrap();
            let b = se.rank(&inst.vector, 3).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn model_files_roundtrip_for_every_algorithm() {
        let cfg = SynthConfig { drop_prob: 0.1, noise_features: 1, ..small_cfg(21) };
        let (train_set, test_set) = synthesize(&cfg).unwrap();
        for algo in AlgorithmId::ALL {
            let model = train_model(algo, &train_set);
            let mut buf = Vec::new();
            model.save(&mut buf).unwrap();
            let reloaded = Model::load(buf.as_slice()).unwrap();
            for inst in test_set.instances() {
                assert_eq!(
                    model.rank(&inst.vector, 3).unwrap(),
                    reloaded.rank(&inst.vector, 3).unwrap(),
                    "{} rankings changed across save/load",
                    algo
                );
            }
        }
    }

    #[test]
    fn report_json_is_deterministic_modulo_timing() {
        let (train_set, test_set) = synthesize(&small_cfg(5)).unwrap();
        let zero_timing = |mut outcomes: Vec<AlgoOutcome>| {
            for o in &mut outcomes {
                if let Ok(run) = &mut o.outcome {
                    run.train_ms = 0;
                    run.classify_ms = 0;
                }
            }
            outcomes
        };
        let a = zero_timing(compare(&[AlgorithmId::Ib1, AlgorithmId::C45], &train_set, &test_set, 3).unwrap());
        let b = zero_timing(compare(&[AlgorithmId::Ib1, AlgorithmId::C45], &train_set, &test_set, 3).unwrap());
        let cfg = json!({"k": 3});
        assert_eq!(
            serde_json::to_string(&report_json(cfg.clone(), &a)).unwrap(),
            serde_json::to_string(&report_json(cfg, &b)).unwrap()
        );
    }

    #[test]
    fn train_rejects_empty_dataset() {
        let (train_set, _) = synthesize(&small_cfg(1)).unwrap();
        let empty = Dataset::new(train_set.dictionary().clone(), vec![], vec![]).unwrap();
        assert!(matches!(train(AlgorithmId::Ib1, &empty), Err(Error::EmptyInput(_))));
    }
}
