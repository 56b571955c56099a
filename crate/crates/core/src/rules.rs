//! Propositional rule induction and rule-based classification.
//!
//! Two separate-and-conquer learners share one skeleton: per class, grow a
//! rule literal by literal until it covers no instances of other classes,
//! remove the covered target instances, repeat until the target relation is
//! empty. FOIL picks the next literal by information gain over the bindings;
//! BIN-rules scores literals by positive bindings times the achieved
//! reduction of negative bindings, weighted by a class-dependent feature
//! weight. A third rule base comes from flattening a decision tree into its
//! root-to-leaf paths and pruning redundant literals and rules. Rule bases
//! compile into a set-enumeration trie that shares canonical literal
//! prefixes; evaluating the trie returns exactly what a linear scan over the
//! rules returns.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::corpus::{ClassId, Dataset, FeatureDictionary, FeatureId, FeatureVector};
use crate::error::{Error, Result};
use crate::prediction::{Basis, RankedClass, RankedPrediction};
use crate::stats::FeatureStats;
use crate::trees::{DecisionTree, TreeMetrics, TreeNode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sign {
    Positive,
    Negative,
}

/// A signed feature test. Canonical order: ascending feature id, positive
/// test ahead of negative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Literal {
    pub feature: FeatureId,
    pub sign: Sign,
}

impl Literal {
    pub fn positive(feature: FeatureId) -> Self {
        Literal { feature, sign: Sign::Positive }
    }

    pub fn negative(feature: FeatureId) -> Self {
        Literal { feature, sign: Sign::Negative }
    }

    pub fn satisfied_by(&self, x: &FeatureVector) -> bool {
        match self.sign {
            Sign::Positive => x.contains(self.feature),
            Sign::Negative => !x.contains(self.feature),
        }
    }
}

/// A conjunction of literals assigning a class when satisfied.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub class_id: ClassId,
    pub literals: Vec<Literal>,
    /// Training instances of the rule's class that satisfy it.
    pub coverage: usize,
    /// True when the rule covered no other-class instances at learning time.
    pub pure: bool,
}

impl Rule {
    pub fn satisfied_by(&self, x: &FeatureVector) -> bool {
        self.literals.iter().all(|l| l.satisfied_by(x))
    }

    /// Number of literals the case violates; 0 means the rule fires.
    pub fn divergence(&self, x: &FeatureVector) -> usize {
        self.literals.iter().filter(|l| !l.satisfied_by(x)).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleOrigin {
    Foil,
    BinRules,
    C45Rules,
}

/// Rules in learning order plus the fallback class.
#[derive(Debug, Clone, PartialEq)]
pub struct RuleBase {
    pub rules: Vec<Rule>,
    pub default_class: ClassId,
    pub origin: RuleOrigin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleMetrics {
    pub rules: usize,
    pub literals: usize,
    pub max_length: usize,
}

/// FOIL's information gain for adding one literal: the covered positives
/// weigh how much the positive-binding proportion improved.
pub fn foil_gain(
    pos_after: usize,
    neg_after: usize,
    pos_before: usize,
    neg_before: usize,
) -> f64 {
    debug_assert!(pos_after >= 1 && pos_before >= 1);
    let after = pos_after as f64 / (pos_after + neg_after) as f64;
    let before = pos_before as f64 / (pos_before + neg_before) as f64;
    pos_after as f64 * (after.log2() - before.log2())
}

/// Class-dependent literal weight: the feature's selectivity weight times
/// p(D_f, C) for a positive test or 1 - p(D_f, C) for a negative one.
pub fn literal_class_weight(
    stats: &FeatureStats,
    f: FeatureId,
    sign: Sign,
    class: ClassId,
) -> f64 {
    let p = stats.proportion(f, class);
    match sign {
        Sign::Positive => stats.weight(f) * p,
        Sign::Negative => stats.weight(f) * (1.0 - p),
    }
}

/// BIN-rules literal score: positive bindings kept, times negative bindings
/// removed, times the class-dependent weight. Never negative.
pub fn bin_literal_score(
    pos_after: usize,
    neg_before: usize,
    neg_after: usize,
    class_weight: f64,
) -> f64 {
    debug_assert!(neg_after <= neg_before);
    pos_after as f64 * (neg_before - neg_after) as f64 * class_weight
}

/// Bindings of one partially grown rule. Adding a literal only ever shrinks
/// both sides.
struct GrowthState {
    literals: Vec<Literal>,
    b_plus: Vec<usize>,
    b_minus: Vec<usize>,
}

impl GrowthState {
    fn add_literal(&mut self, ds: &Dataset, lit: Literal) {
        let (plus_before, minus_before) = (self.b_plus.len(), self.b_minus.len());
        self.b_plus.retain(|&i| lit.satisfied_by(&ds.instances()[i].vector));
        self.b_minus.retain(|&i| lit.satisfied_by(&ds.instances()[i].vector));
        assert!(
            self.b_plus.len() <= plus_before && self.b_minus.len() <= minus_before,
            "bindings grew after adding a literal"
        );
        self.literals.push(lit);
    }
}

fn presence_counts(ds: &Dataset, indices: &[usize]) -> Vec<usize> {
    let mut counts = vec![0usize; ds.n_features()];
    for &i in indices {
        for &f in ds.instances()[i].vector.ids() {
            counts[f] += 1;
        }
    }
    counts
}

/// Grows one rule for `class` from the remaining target instances. Candidate
/// literals must keep at least one positive binding and strictly reduce the
/// negative bindings; when none qualifies the rule ends impure so learning
/// always terminates, even on inseparable data.
fn grow_rule(
    ds: &Dataset,
    target: &[usize],
    negatives: &[usize],
    mut score: impl FnMut(FeatureId, Sign, usize, usize, usize, usize) -> f64,
) -> (Vec<Literal>, Vec<usize>, bool) {
    let mut state = GrowthState {
        literals: Vec::new(),
        b_plus: target.to_vec(),
        b_minus: negatives.to_vec(),
    };
    let mut used = vec![false; ds.n_features()];
    loop {
        if state.b_minus.is_empty() {
            return (state.literals, state.b_plus, true);
        }
        let pos_with = presence_counts(ds, &state.b_plus);
        let neg_with = presence_counts(ds, &state.b_minus);
        let (pos_total, neg_total) = (state.b_plus.len(), state.b_minus.len());

        let mut best: Option<(f64, Literal)> = None;
        for f in 0..ds.n_features() {
            if used[f] {
                continue;
            }
            for sign in [Sign::Positive, Sign::Negative] {
                let (pos_after, neg_after) = match sign {
                    Sign::Positive => (pos_with[f], neg_with[f]),
                    Sign::Negative => (pos_total - pos_with[f], neg_total - neg_with[f]),
                };
                if pos_after == 0 || neg_after >= neg_total {
                    continue;
                }
                let value = score(f, sign, pos_after, neg_after, pos_total, neg_total);
                if best.map_or(true, |(bv, _)| value > bv) {
                    best = Some((value, Literal { feature: f, sign }));
                }
            }
        }
        match best {
            None => return (state.literals, state.b_plus, false),
            Some((_, lit)) => {
                used[lit.feature] = true;
                state.add_literal(ds, lit);
            }
        }
    }
}

fn rule_coverage(ds: &Dataset, class: ClassId, literals: &[Literal]) -> usize {
    ds.instances()
        .iter()
        .filter(|i| i.class_id == class && literals.iter().all(|l| l.satisfied_by(&i.vector)))
        .count()
}

fn global_majority(ds: &Dataset) -> ClassId {
    let mut counts = vec![0usize; ds.n_classes()];
    for inst in ds.instances() {
        counts[inst.class_id] += 1;
    }
    counts
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
        .map(|(c, _)| c)
        .unwrap_or(0)
}

/// Majority class among training instances no retained rule covers; the
/// global majority when everything is covered. Ties go to the lower id.
fn default_class_for(ds: &Dataset, rules: &[Rule]) -> ClassId {
    let mut counts = vec![0usize; ds.n_classes()];
    let mut any = false;
    for inst in ds.instances() {
        if !rules.iter().any(|r| r.satisfied_by(&inst.vector)) {
            counts[inst.class_id] += 1;
            any = true;
        }
    }
    if !any {
        return global_majority(ds);
    }
    counts
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
        .map(|(c, _)| c)
        .unwrap_or(0)
}

fn learn_separate_and_conquer(
    ds: &Dataset,
    origin: RuleOrigin,
    mut score: impl FnMut(ClassId, FeatureId, Sign, usize, usize, usize, usize) -> f64,
) -> Result<RuleBase> {
    if ds.is_empty() {
        return Err(Error::EmptyInput("dataset"));
    }
    let mut rules = Vec::new();
    for class in 0..ds.n_classes() {
        let mut target: Vec<usize> =
            (0..ds.len()).filter(|&i| ds.instances()[i].class_id == class).collect();
        if target.is_empty() {
            continue;
        }
        let negatives: Vec<usize> =
            (0..ds.len()).filter(|&i| ds.instances()[i].class_id != class).collect();
        while !target.is_empty() {
            let (literals, covered, pure) =
                grow_rule(ds, &target, &negatives, |f, s, pa, na, pb, nb| {
                    score(class, f, s, pa, na, pb, nb)
                });
            let coverage = rule_coverage(ds, class, &literals);
            rules.push(Rule { class_id: class, literals, coverage, pure });
            target.retain(|i| !covered.contains(i));
        }
    }
    let default_class = default_class_for(ds, &rules);
    Ok(RuleBase { rules, default_class, origin })
}

/// FOIL: separate-and-conquer with information gain as the literal score.
pub fn learn_foil(ds: &Dataset) -> Result<RuleBase> {
    learn_separate_and_conquer(ds, RuleOrigin::Foil, |_, _, _, pa, na, pb, nb| {
        foil_gain(pa, na, pb, nb)
    })
}

/// BIN-rules: the same skeleton scored by positive bindings times removed
/// negatives times the class-dependent feature weight.
pub fn learn_bin_rules(ds: &Dataset, stats: &FeatureStats) -> Result<RuleBase> {
    learn_separate_and_conquer(ds, RuleOrigin::BinRules, |class, f, sign, pa, na, _, nb| {
        bin_literal_score(pa, nb, na, literal_class_weight(stats, f, sign, class))
    })
}

/// Flattens a tree into one rule per leaf: positive literals for present
/// branches, negative for absent ones, class = leaf majority. No pruning.
pub fn extract_path_rules(tree: &DecisionTree, ds: &Dataset) -> RuleBase {
    fn walk(node: &TreeNode, path: &mut Vec<Literal>, ds: &Dataset, rules: &mut Vec<Rule>) {
        match node {
            TreeNode::Leaf { majority, .. } => {
                let literals = path.clone();
                let coverage = rule_coverage(ds, *majority, &literals);
                let impure = ds.instances().iter().any(|i| {
                    i.class_id != *majority
                        && literals.iter().all(|l| l.satisfied_by(&i.vector))
                });
                rules.push(Rule {
                    class_id: *majority,
                    literals,
                    coverage,
                    pure: !impure,
                });
            }
            TreeNode::Internal { feature, absent, present } => {
                path.push(Literal::negative(*feature));
                walk(absent, path, ds, rules);
                path.pop();
                path.push(Literal::positive(*feature));
                walk(present, path, ds, rules);
                path.pop();
            }
        }
    }
    let mut rules = Vec::new();
    walk(tree.root(), &mut Vec::new(), ds, &mut rules);
    let default_class = default_class_for(ds, &rules);
    RuleBase { rules, default_class, origin: RuleOrigin::C45Rules }
}

fn misclassified(ds: &Dataset, class: ClassId, literals: &[Literal]) -> usize {
    ds.instances()
        .iter()
        .filter(|i| i.class_id != class && literals.iter().all(|l| l.satisfied_by(&i.vector)))
        .count()
}

/// Path rules pruned in two passes: per rule, greedily drop literals whose
/// removal does not raise the rule's misclassification count (left to right,
/// to a fixpoint); then drop duplicates, rules subsumed by a shorter rule of
/// the same class, and zero-coverage rules of the default class.
pub fn extract_rules_from_tree(tree: &DecisionTree, ds: &Dataset) -> RuleBase {
    let raw = extract_path_rules(tree, ds);

    let mut pruned: Vec<Rule> = Vec::with_capacity(raw.rules.len());
    for rule in raw.rules {
        let mut literals = rule.literals;
        let mut errors = misclassified(ds, rule.class_id, &literals);
        let mut changed = true;
        while changed {
            changed = false;
            let mut i = 0;
            while i < literals.len() {
                let mut shorter = literals.clone();
                shorter.remove(i);
                let e = misclassified(ds, rule.class_id, &shorter);
                if e <= errors {
                    literals = shorter;
                    errors = e;
                    changed = true;
                } else {
                    i += 1;
                }
            }
        }
        pruned.push(Rule { class_id: rule.class_id, literals, coverage: 0, pure: false });
    }

    // duplicate and subsumption filtering on literal sets
    let sets: Vec<BTreeMap<FeatureId, Sign>> = pruned
        .iter()
        .map(|r| r.literals.iter().map(|l| (l.feature, l.sign)).collect())
        .collect();
    let mut keep = vec![true; pruned.len()];
    for i in 0..pruned.len() {
        for j in 0..pruned.len() {
            if i == j || !keep[i] {
                continue;
            }
            if pruned[i].class_id != pruned[j].class_id {
                continue;
            }
            let subset =
                sets[j].iter().all(|(f, s)| sets[i].get(f) == Some(s));
            if subset && sets[j].len() < sets[i].len() {
                keep[i] = false; // proper subsumption by a shorter rule
            } else if sets[j] == sets[i] && j < i {
                keep[i] = false; // duplicate; the first occurrence stays
            }
        }
    }
    let mut retained: Vec<Rule> = pruned
        .into_iter()
        .zip(keep)
        .filter_map(|(r, k)| k.then_some(r))
        .collect();

    for rule in &mut retained {
        rule.coverage = rule_coverage(ds, rule.class_id, &rule.literals);
        rule.pure = misclassified(ds, rule.class_id, &rule.literals) == 0;
    }
    let default_class = default_class_for(ds, &retained);
    retained.retain(|r| !(r.class_id == default_class && r.coverage == 0));

    RuleBase { rules: retained, default_class, origin: RuleOrigin::C45Rules }
}

impl RuleBase {
    pub fn metrics(&self) -> RuleMetrics {
        RuleMetrics {
            rules: self.rules.len(),
            literals: self.rules.iter().map(|r| r.literals.len()).sum(),
            max_length: self.rules.iter().map(|r| r.literals.len()).max().unwrap_or(0),
        }
    }

    /// Ranks classes by rule firing: exactly satisfied rules first, then
    /// rules with one divergent literal, each tier ordered by the best
    /// coverage among its firing rules. The default class is appended when
    /// fewer than `k` classes fire.
    pub fn classify(&self, x: &FeatureVector, k: usize) -> RankedPrediction {
        let hits = self.rules.iter().filter_map(|r| {
            let div = r.divergence(x);
            (div <= 1).then_some((div, r.class_id, r.coverage))
        });
        rank_rule_hits(hits, self.default_class, k)
    }

    /// Training-set share of instances whose top-ranked class is correct.
    pub fn training_accuracy(&self, ds: &Dataset) -> f64 {
        if ds.is_empty() {
            return 0.0;
        }
        let correct = ds
            .instances()
            .iter()
            .filter(|i| {
                self.classify(&i.vector, 1)
                    .top()
                    .is_some_and(|t| t.class_id == i.class_id)
            })
            .count();
        correct as f64 / ds.len() as f64
    }

    /// One line per rule, e.g.
    /// `IF f(update) AND NOT f(delete) THEN class=UPDATE_PRICE (cov=9)`.
    pub fn render(&self, dict: &FeatureDictionary) -> String {
        let mut out = String::new();
        for rule in &self.rules {
            out.push_str(&format_rule(rule, dict));
            out.push('\n');
        }
        out.push_str(&format!(
            "DEFAULT class={}\n",
            dict.class_name(self.default_class).unwrap_or("?")
        ));
        out
    }

    pub fn to_payload(&self, dict: &FeatureDictionary) -> Value {
        let rules: Vec<Value> = self
            .rules
            .iter()
            .map(|r| {
                let lits: Vec<Value> = r
                    .literals
                    .iter()
                    .map(|l| {
                        json!([l.feature, if l.sign == Sign::Positive { "+" } else { "-" }])
                    })
                    .collect();
                json!({
                    "class": dict.class_name(r.class_id).expect("class in dictionary"),
                    "lits": lits,
                    "cov": r.coverage,
                    "pure": r.pure,
                })
            })
            .collect();
        json!({
            "origin": serde_json::to_value(self.origin).expect("origin tag"),
            "default": dict.class_name(self.default_class).expect("class in dictionary"),
            "rules": rules,
        })
    }

    pub fn from_payload(value: &Value, dict: &FeatureDictionary) -> Result<RuleBase> {
        let origin: RuleOrigin = serde_json::from_value(
            value.get("origin").cloned().ok_or_else(|| Error::Model("missing origin".into()))?,
        )
        .map_err(|e| Error::Model(e.to_string()))?;
        let default_name = value
            .get("default")
            .and_then(Value::as_str)
            .ok_or_else(|| Error::Model("missing default class".into()))?;
        let default_class = dict
            .class_id(default_name)
            .ok_or_else(|| Error::UnknownClass(default_name.to_string()))?;
        let rule_values = value
            .get("rules")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::Model("missing rules array".into()))?;
        let mut rules = Vec::with_capacity(rule_values.len());
        for rv in rule_values {
            let class_name = rv
                .get("class")
                .and_then(Value::as_str)
                .ok_or_else(|| Error::Model("rule missing class".into()))?;
            let class_id = dict
                .class_id(class_name)
                .ok_or_else(|| Error::UnknownClass(class_name.to_string()))?;
            let lits = rv
                .get("lits")
                .and_then(Value::as_array)
                .ok_or_else(|| Error::Model("rule missing literals".into()))?;
            let mut literals = Vec::with_capacity(lits.len());
            for lv in lits {
                let pair = lv
                    .as_array()
                    .filter(|a| a.len() == 2)
                    .ok_or_else(|| Error::Model("literal must be a [feature, sign] pair".into()))?;
                let feature = pair[0]
                    .as_u64()
                    .ok_or_else(|| Error::Model("literal feature must be an integer".into()))?
                    as usize;
                if feature >= dict.n_features() {
                    return Err(Error::FeatureOutOfRange {
                        feature,
                        limit: dict.n_features(),
                    });
                }
                let sign = match pair[1].as_str() {
                    Some("+") => Sign::Positive,
                    Some("-") => Sign::Negative,
                    _ => return Err(Error::Model("literal sign must be \"+\" or \"-\"".into())),
                };
                if literals.iter().any(|l: &Literal| l.feature == feature) {
                    return Err(Error::Model("rule tests one feature twice".into()));
                }
                literals.push(Literal { feature, sign });
            }
            let coverage = rv.get("cov").and_then(Value::as_u64).unwrap_or(0) as usize;
            let pure = rv.get("pure").and_then(Value::as_bool).unwrap_or(false);
            rules.push(Rule { class_id, literals, coverage, pure });
        }
        Ok(RuleBase { rules, default_class, origin })
    }
}

pub fn format_rule(rule: &Rule, dict: &FeatureDictionary) -> String {
    let body = if rule.literals.is_empty() {
        "TRUE".to_string()
    } else {
        rule.literals
            .iter()
            .map(|l| {
                let name = dict.feature_name(l.feature).unwrap_or("?");
                match l.sign {
                    Sign::Positive => format!("f({})", name),
                    Sign::Negative => format!("NOT f({})", name),
                }
            })
            .collect::<Vec<_>>()
            .join(" AND ")
    };
    format!(
        "IF {} THEN class={} (cov={})",
        body,
        dict.class_name(rule.class_id).unwrap_or("?"),
        rule.coverage
    )
}

fn rank_rule_hits(
    hits: impl IntoIterator<Item = (usize, ClassId, usize)>,
    default_class: ClassId,
    k: usize,
) -> RankedPrediction {
    let mut tiers: [BTreeMap<ClassId, usize>; 2] = [BTreeMap::new(), BTreeMap::new()];
    for (div, class, coverage) in hits {
        let best = tiers[div].entry(class).or_insert(0);
        *best = (*best).max(coverage);
    }
    let mut out: Vec<RankedClass> = Vec::new();
    for (tier_no, tier) in tiers.iter().enumerate() {
        let mut entries: Vec<(ClassId, usize)> = tier.iter().map(|(&c, &s)| (c, s)).collect();
        entries.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        let basis = if tier_no == 0 { Basis::Exact } else { Basis::Approximate };
        for (class_id, coverage) in entries {
            if out.len() >= k {
                break;
            }
            if out.iter().any(|e| e.class_id == class_id) {
                continue;
            }
            out.push(RankedClass { class_id, score: coverage as f64, basis });
        }
    }
    if out.len() < k && !out.iter().any(|e| e.class_id == default_class) {
        out.push(RankedClass { class_id: default_class, score: 0.0, basis: Basis::Fallback });
    }
    out.truncate(k);
    RankedPrediction::new(out)
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SeTreeNode {
    children: BTreeMap<Literal, SeTreeNode>,
    /// (class, coverage) of the rules terminating at this node.
    rules: Vec<(ClassId, usize)>,
}

/// Set-enumeration trie over canonically sorted rule literals. An index over
/// a rule base, not a different classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct SeTree {
    root: SeTreeNode,
    default_class: ClassId,
}

/// Sorts each rule's literals canonically and inserts them as a path,
/// sharing existing prefixes.
pub fn build_se_tree(rb: &RuleBase) -> Result<SeTree> {
    if rb.rules.is_empty() {
        return Err(Error::EmptyInput("rule base"));
    }
    let mut root = SeTreeNode::default();
    for rule in &rb.rules {
        let mut sorted = rule.literals.clone();
        sorted.sort();
        let mut node = &mut root;
        for lit in sorted {
            node = node.children.entry(lit).or_default();
        }
        node.rules.push((rule.class_id, rule.coverage));
    }
    Ok(SeTree { root, default_class: rb.default_class })
}

impl SeTree {
    /// Same contract as [`RuleBase::classify`], evaluated over the trie.
    pub fn classify(&self, x: &FeatureVector, k: usize) -> RankedPrediction {
        let mut hits: Vec<(usize, ClassId, usize)> = Vec::new();
        fn walk(
            node: &SeTreeNode,
            x: &FeatureVector,
            violated: usize,
            hits: &mut Vec<(usize, ClassId, usize)>,
        ) {
            for &(class, coverage) in &node.rules {
                hits.push((violated, class, coverage));
            }
            for (lit, child) in &node.children {
                if lit.satisfied_by(x) {
                    walk(child, x, violated, hits);
                } else if violated < 1 {
                    walk(child, x, violated + 1, hits);
                }
            }
        }
        walk(&self.root, x, 0, &mut hits);
        rank_rule_hits(hits, self.default_class, k)
    }

    pub fn default_class(&self) -> ClassId {
        self.default_class
    }

    /// Trie shape: total nodes, rule-bearing nodes, and depth with the root
    /// at level 1.
    pub fn shape(&self) -> TreeMetrics {
        fn walk(node: &SeTreeNode, depth: usize, m: &mut TreeMetrics) {
            m.nodes += 1;
            m.levels = m.levels.max(depth);
            if !node.rules.is_empty() {
                m.leaves += 1;
            }
            for child in node.children.values() {
                walk(child, depth + 1, m);
            }
        }
        let mut m = TreeMetrics { nodes: 0, leaves: 0, levels: 0 };
        walk(&self.root, 1, &mut m);
        m
    }

    pub fn root(&self) -> &SeTreeNode {
        &self.root
    }
}

impl SeTreeNode {
    pub fn children(&self) -> &BTreeMap<Literal, SeTreeNode> {
        &self.children
    }

    pub fn rules(&self) -> &[(ClassId, usize)] {
        &self.rules
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Feature, FeatureDictionary, FeatureSource, Instance};
    use crate::trees::{build_dynamic_tree, SplitCriterion};

    fn dataset(n: usize, rows: &[(&[usize], usize)]) -> Dataset {
        let c = rows.iter().map(|r| r.1).max().map_or(0, |m| m + 1);
        let features = (0..n)
            .map(|id| Feature { id, name: format!("f{}", id), source: FeatureSource::Dfl })
            .collect();
        let classes = (0..c).map(|j| format!("C{}", j)).collect();
        let dict = FeatureDictionary::from_parts(features, classes).unwrap();
        let ids = (0..rows.len()).map(|i| format!("i{}", i)).collect();
        let instances = rows
            .iter()
            .map(|(ids, class)| Instance::new(FeatureVector::new(ids.to_vec()), *class))
            .collect();
        Dataset::new(dict, ids, instances).unwrap()
    }

    fn fv(ids: &[usize]) -> FeatureVector {
        FeatureVector::new(ids.to_vec())
    }

    #[test]
    fn foil_learns_single_keyed_rule() {
        // class 0 holds feature 5 and nothing else distinguishes it
        let ds = dataset(6, &[(&[5, 0], 0), (&[5, 1], 0), (&[0], 1), (&[1], 1)]);
        let rb = learn_foil(&ds).unwrap();
        let class0: Vec<&Rule> = rb.rules.iter().filter(|r| r.class_id == 0).collect();
        assert_eq!(class0.len(), 1);
        assert_eq!(class0[0].literals, vec![Literal::positive(5)]);
        assert_eq!(class0[0].coverage, 2);
        assert!(class0[0].pure);
    }

    #[test]
    fn foil_flags_impure_on_duplicate_vectors() {
        let ds = dataset(1, &[(&[0], 0), (&[0], 1)]);
        let rb = learn_foil(&ds).unwrap();
        assert!(rb.rules.iter().any(|r| !r.pure));
        // every training instance still matches some rule of its class
        for inst in ds.instances() {
            assert!(rb
                .rules
                .iter()
                .any(|r| r.class_id == inst.class_id && r.satisfied_by(&inst.vector)));
        }
    }

    #[test]
    fn foil_one_rule_per_perfectly_keyed_class() {
        let ds = dataset(4, &[(&[0], 0), (&[1], 1), (&[2], 2), (&[3], 3)]);
        let rb = learn_foil(&ds).unwrap();
        assert_eq!(rb.rules.len(), 4);
        for (class, rule) in rb.rules.iter().enumerate() {
            assert_eq!(rule.class_id, class);
            assert_eq!(rule.literals.len(), 1);
            assert!(rule.pure);
        }
    }

    #[test]
    fn bin_rules_match_foil_on_keyed_class() {
        let ds = dataset(6, &[(&[5, 0], 0), (&[5, 1], 0), (&[0], 1), (&[1], 1)]);
        let stats = FeatureStats::from_dataset(&ds).unwrap();
        let foil = learn_foil(&ds).unwrap();
        let bin = learn_bin_rules(&ds, &stats).unwrap();
        let f0: Vec<&Rule> = foil.rules.iter().filter(|r| r.class_id == 0).collect();
        let b0: Vec<&Rule> = bin.rules.iter().filter(|r| r.class_id == 0).collect();
        assert_eq!(f0[0].literals, b0[0].literals);
    }

    #[test]
    fn bin_score_never_negative() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..500 {
            let neg_before = rng.gen_range(0..50);
            let neg_after = rng.gen_range(0..=neg_before);
            let pos_after = rng.gen_range(0..50);
            let w = rng.gen_range(0.0..1.0);
            assert!(bin_literal_score(pos_after, neg_before, neg_after, w) >= 0.0);
        }
    }

    #[test]
    fn growth_skips_literal_that_removes_no_negatives() {
        // feature 0 covers the whole class but also every negative; feature 1
        // strictly reduces negatives and must be chosen.
        let ds = dataset(2, &[(&[0, 1], 0), (&[0], 1)]);
        let rb = learn_foil(&ds).unwrap();
        let r0 = rb.rules.iter().find(|r| r.class_id == 0).unwrap();
        assert_eq!(r0.literals, vec![Literal::positive(1)]);
    }

    #[test]
    fn coverage_matches_recount() {
        let ds = dataset(
            4,
            &[(&[0, 1], 0), (&[0], 0), (&[1, 2], 1), (&[2], 1), (&[3], 2), (&[0, 3], 2)],
        );
        let stats = FeatureStats::from_dataset(&ds).unwrap();
        for rb in [learn_foil(&ds).unwrap(), learn_bin_rules(&ds, &stats).unwrap()] {
            for rule in &rb.rules {
                assert_eq!(rule.coverage, rule_coverage(&ds, rule.class_id, &rule.literals));
                assert!(rule.coverage >= 1);
            }
        }
    }

    #[test]
    fn single_class_dataset_yields_empty_rule() {
        let ds = dataset(1, &[(&[0], 0), (&[], 0)]);
        let rb = learn_foil(&ds).unwrap();
        assert_eq!(rb.rules.len(), 1);
        assert!(rb.rules[0].literals.is_empty());
        assert!(rb.rules[0].pure);
        assert_eq!(rb.rules[0].coverage, 2);
    }

    #[test]
    fn divergence_counts_violations() {
        let rule = Rule {
            class_id: 0,
            literals: vec![Literal::positive(1), Literal::negative(2)],
            coverage: 1,
            pure: true,
        };
        assert_eq!(rule.divergence(&fv(&[1])), 0);
        assert_eq!(rule.divergence(&fv(&[2])), 2);
        let empty = Rule { class_id: 0, literals: vec![], coverage: 1, pure: true };
        assert_eq!(empty.divergence(&fv(&[0, 1, 2])), 0);
        assert_eq!(empty.divergence(&fv(&[])), 0);
    }

    #[test]
    fn classify_tiers_and_fallback() {
        let rules = vec![
            Rule { class_id: 0, literals: vec![Literal::positive(0)], coverage: 5, pure: true },
            Rule {
                class_id: 1,
                literals: vec![Literal::positive(1), Literal::positive(2)],
                coverage: 9,
                pure: true,
            },
        ];
        let rb = RuleBase { rules, default_class: 2, origin: RuleOrigin::Foil };

        // exact hit ranks first
        let p = rb.classify(&fv(&[0]), 3);
        assert_eq!(p.entries()[0].class_id, 0);
        assert_eq!(p.entries()[0].basis, Basis::Exact);

        // only a one-divergence hit: approximate basis at rank 1
        let p = rb.classify(&fv(&[1]), 1);
        assert_eq!(p.entries()[0].class_id, 1);
        assert_eq!(p.entries()[0].basis, Basis::Approximate);

        // nothing within one divergent literal: default only
        let p = rb.classify(&fv(&[3, 4, 5]), 3);
        // rule 0 diverges by 1 on the missing f0 though; craft a miss of 2+
        // for rule 1 and 1 for rule 0 -> rule 0 still fires approximately.
        assert_eq!(p.entries()[0].class_id, 0);

        let far = Rule {
            class_id: 0,
            literals: vec![
                Literal::positive(0),
                Literal::positive(1),
                Literal::positive(2),
            ],
            coverage: 5,
            pure: true,
        };
        let rb = RuleBase { rules: vec![far], default_class: 2, origin: RuleOrigin::Foil };
        let p = rb.classify(&fv(&[]), 3);
        assert_eq!(p.len(), 1);
        assert_eq!(p.entries()[0].class_id, 2);
        assert_eq!(p.entries()[0].basis, Basis::Fallback);
    }

    #[test]
    fn extract_from_depth_one_tree() {
        let ds = dataset(1, &[(&[0], 0), (&[], 1)]);
        let tree = build_dynamic_tree(&ds, SplitCriterion::InformationGain).unwrap();
        let rb = extract_rules_from_tree(&tree, &ds);
        assert_eq!(rb.rules.len(), 2);
        assert!(rb.rules.iter().all(|r| r.literals.len() <= 1));
        assert!(rb.training_accuracy(&ds) >= 1.0 - 1e-12);
    }

    #[test]
    fn sibling_leaves_of_one_class_merge() {
        // hand-built: root tests f0 but both leaves carry class 0
        let ds = dataset(1, &[(&[0], 0), (&[], 0)]);
        let root = TreeNode::Internal {
            feature: 0,
            absent: Box::new(TreeNode::Leaf { histogram: vec![(0, 1)], majority: 0 }),
            present: Box::new(TreeNode::Leaf { histogram: vec![(0, 1)], majority: 0 }),
        };
        let tree = DecisionTree::new(crate::trees::TreeVariant::C45, root);
        let rb = extract_rules_from_tree(&tree, &ds);
        assert_eq!(rb.rules.len(), 1);
        assert!(rb.rules[0].literals.is_empty());
        assert_eq!(rb.rules[0].coverage, 2);
    }

    #[test]
    fn pruning_never_hurts_training_accuracy() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        for _ in 0..10 {
            let n = rng.gen_range(3..=8);
            let c = rng.gen_range(2..=4);
            let m = rng.gen_range(6..=24);
            let mut rows: Vec<(Vec<usize>, usize)> = (0..m)
                .map(|_| {
                    ((0..n).filter(|_| rng.gen_bool(0.4)).collect(), rng.gen_range(0..c))
                })
                .collect();
            rows.push((vec![], c - 1));
            let borrowed: Vec<(&[usize], usize)> =
                rows.iter().map(|(f, cl)| (f.as_slice(), *cl)).collect();
            let ds = dataset(n, &borrowed);
            let tree = build_dynamic_tree(&ds, SplitCriterion::InformationGain).unwrap();
            let raw = extract_path_rules(&tree, &ds);
            let pruned = extract_rules_from_tree(&tree, &ds);
            assert!(pruned.training_accuracy(&ds) >= raw.training_accuracy(&ds) - 1e-12);
        }
    }

    #[test]
    fn se_tree_shares_prefixes() {
        let rules = vec![
            Rule {
                class_id: 0,
                literals: vec![Literal::positive(1), Literal::positive(2)],
                coverage: 3,
                pure: true,
            },
            Rule {
                class_id: 1,
                literals: vec![Literal::positive(1), Literal::negative(3)],
                coverage: 2,
                pure: true,
            },
        ];
        let rb = RuleBase { rules, default_class: 0, origin: RuleOrigin::BinRules };
        let se = build_se_tree(&rb).unwrap();
        assert_eq!(se.root().children().len(), 1);
        let shared = se.root().children().get(&Literal::positive(1)).unwrap();
        assert_eq!(shared.children().len(), 2);
        // root + f1+ + two terminals
        assert_eq!(se.shape().nodes, 4);
        assert_eq!(se.shape().levels, 3);
    }

    #[test]
    fn se_tree_empty_bodied_rule_sits_at_root() {
        let rb = RuleBase {
            rules: vec![Rule { class_id: 1, literals: vec![], coverage: 4, pure: true }],
            default_class: 1,
            origin: RuleOrigin::BinRules,
        };
        let se = build_se_tree(&rb).unwrap();
        assert_eq!(se.root().rules(), &[(1, 4)]);
    }

    #[test]
    fn se_tree_rejects_empty_base() {
        let rb =
            RuleBase { rules: vec![], default_class: 0, origin: RuleOrigin::BinRules };
        assert!(build_se_tree(&rb).is_err());
    }

    #[test]
    fn se_tree_levels_bounded_by_rule_length() {
        let ds = dataset(
            5,
            &[(&[0, 1], 0), (&[1, 2], 1), (&[2, 3], 2), (&[3, 4], 0), (&[4], 1)],
        );
        let stats = FeatureStats::from_dataset(&ds).unwrap();
        let rb = learn_bin_rules(&ds, &stats).unwrap();
        let se = build_se_tree(&rb).unwrap();
        assert!(se.shape().levels <= rb.metrics().max_length + 1);
    }

    #[test]
    fn se_tree_agrees_with_linear_scan() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        for _ in 0..20 {
            let n = rng.gen_range(2..=8);
            let c = rng.gen_range(2..=4);
            let m = rng.gen_range(4..=20);
            let mut rows: Vec<(Vec<usize>, usize)> = (0..m)
                .map(|_| {
                    ((0..n).filter(|_| rng.gen_bool(0.4)).collect(), rng.gen_range(0..c))
                })
                .collect();
            rows.push((vec![], c - 1));
            let borrowed: Vec<(&[usize], usize)> =
                rows.iter().map(|(f, cl)| (f.as_slice(), *cl)).collect();
            let ds = dataset(n, &borrowed);
            let stats = FeatureStats::from_dataset(&ds).unwrap();
            let rb = learn_bin_rules(&ds, &stats).unwrap();
            let se = build_se_tree(&rb).unwrap();
            for _ in 0..50 {
                let x = fv(&(0..n).filter(|_| rng.gen_bool(0.5)).collect::<Vec<_>>());
                for k in [1, 3, c + 1] {
                    assert_eq!(se.classify(&x, k), rb.classify(&x, k));
                }
            }
        }
    }

    #[test]
    fn completeness_and_purity_on_separable_data() {
        let ds = dataset(4, &[(&[0], 0), (&[0, 3], 0), (&[1], 1), (&[1, 3], 1), (&[2], 2)]);
        let stats = FeatureStats::from_dataset(&ds).unwrap();
        for rb in [learn_foil(&ds).unwrap(), learn_bin_rules(&ds, &stats).unwrap()] {
            for rule in &rb.rules {
                assert!(rule.pure);
            }
            for inst in ds.instances() {
                assert!(rb
                    .rules
                    .iter()
                    .any(|r| r.class_id == inst.class_id && r.divergence(&inst.vector) == 0));
            }
        }
    }

    #[test]
    fn metrics_counts() {
        let empty = RuleBase { rules: vec![], default_class: 0, origin: RuleOrigin::Foil };
        assert_eq!(empty.metrics(), RuleMetrics { rules: 0, literals: 0, max_length: 0 });
        let rb = RuleBase {
            rules: vec![
                Rule { class_id: 0, literals: vec![Literal::positive(1)], coverage: 1, pure: true },
                Rule {
                    class_id: 1,
                    literals: vec![Literal::positive(1), Literal::negative(2)],
                    coverage: 1,
                    pure: true,
                },
            ],
            default_class: 0,
            origin: RuleOrigin::Foil,
        };
        assert_eq!(rb.metrics(), RuleMetrics { rules: 2, literals: 3, max_length: 2 });
    }

    #[test]
    fn render_is_human_readable() {
        let cases = vec![crate::corpus::RawCase {
            id: "a".into(),
            lang: None,
            dfl: vec!["update".into(), "delete".into()],
            uvl: vec![],
            class_label: Some("UPDATE_PRICE".into()),
        }];
        let dict = crate::corpus::build_dictionary(&cases).unwrap();
        let rule = Rule {
            class_id: 0,
            literals: vec![Literal::positive(0), Literal::negative(1)],
            coverage: 9,
            pure: true,
        };
        assert_eq!(
            format_rule(&rule, &dict),
            "IF f(update) AND NOT f(delete) THEN class=UPDATE_PRICE (cov=9)"
        );
    }

    #[test]
    fn payload_roundtrip() {
        let ds = dataset(4, &[(&[0], 0), (&[1], 1), (&[2, 3], 2), (&[], 0)]);
        let stats = FeatureStats::from_dataset(&ds).unwrap();
        let rb = learn_bin_rules(&ds, &stats).unwrap();
        let payload = rb.to_payload(ds.dictionary());
        let back = RuleBase::from_payload(&payload, ds.dictionary()).unwrap();
        assert_eq!(rb, back);
    }
}
