//! Shared sufficient statistics: per-feature occurrence counts, the
//! class-conditional proportions p(D_f, C), selectivity-based feature
//! weights, and entropy-based information gain.
//!
//! Every learner reads from one [`FeatureStats`] computed over its training
//! set; tree builders with dynamic splitting recompute them over the local
//! instance subset at each node.

use serde::{Deserialize, Serialize};

use crate::corpus::{ClassId, Dataset, FeatureId, Instance};
use crate::error::{Error, Result};

/// Occurrence counts and derived weights for one instance collection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureStats {
    n: usize,
    c: usize,
    total: usize,
    /// |D_f|: instances holding feature f.
    d: Vec<usize>,
    /// Instances of class j holding feature f, as d_class[f][j].
    d_class: Vec<Vec<usize>>,
    /// |D_C|: instances per class.
    class_count: Vec<usize>,
    /// Selectivity weight w_f, in [0, 1].
    weight: Vec<f64>,
}

impl FeatureStats {
    /// Counts over a whole dataset. Errors on an empty one.
    pub fn from_dataset(ds: &Dataset) -> Result<Self> {
        if ds.is_empty() {
            return Err(Error::EmptyInput("dataset"));
        }
        Ok(Self::count(ds.n_features(), ds.n_classes(), ds.instances().iter()))
    }

    /// Counts over a subset of a dataset's instances, for per-node
    /// re-evaluation in dynamically split trees.
    pub fn from_subset(ds: &Dataset, indices: &[usize]) -> Self {
        Self::count(
            ds.n_features(),
            ds.n_classes(),
            indices.iter().map(|&i| &ds.instances()[i]),
        )
    }

    fn count<'a>(n: usize, c: usize, instances: impl Iterator<Item = &'a Instance>) -> Self {
        let mut d = vec![0usize; n];
        let mut d_class = vec![vec![0usize; c]; n];
        let mut class_count = vec![0usize; c];
        let mut total = 0usize;
        for inst in instances {
            total += 1;
            class_count[inst.class_id] += 1;
            for &f in inst.vector.ids() {
                d[f] += 1;
                d_class[f][inst.class_id] += 1;
            }
        }
        let mut stats =
            FeatureStats { n, c, total, d, d_class, class_count, weight: Vec::new() };
        stats.weight = (0..n).map(|f| stats.compute_weight(f)).collect();
        stats
    }

    pub fn n_features(&self) -> usize {
        self.n
    }

    pub fn n_classes(&self) -> usize {
        self.c
    }

    pub fn total(&self) -> usize {
        self.total
    }

    /// |D_f|.
    pub fn feature_count(&self, f: FeatureId) -> usize {
        self.d[f]
    }

    /// Instances of `class` holding feature `f`.
    pub fn feature_class_count(&self, f: FeatureId, class: ClassId) -> usize {
        self.d_class[f][class]
    }

    /// |D_C|.
    pub fn class_count(&self, class: ClassId) -> usize {
        self.class_count[class]
    }

    pub fn class_counts(&self) -> &[usize] {
        &self.class_count
    }

    /// p(D_f, C): the share of feature-f holders that belong to `class`;
    /// 0 when no instance holds the feature.
    pub fn proportion(&self, f: FeatureId, class: ClassId) -> f64 {
        if self.d[f] == 0 {
            0.0
        } else {
            self.d_class[f][class] as f64 / self.d[f] as f64
        }
    }

    fn compute_weight(&self, f: FeatureId) -> f64 {
        let mut sum = 0.0;
        for j in 0..self.c {
            let p = self.proportion(f, j);
            sum += 1.0 - 4.0 * p * (1.0 - p);
        }
        sum / self.c as f64
    }

    /// Selectivity weight w_f: averages, over classes, how far p(D_f, C)
    /// sits from the uninformative 50% mark. 1 when every class either owns
    /// all holders of f or none of them; 0 when every p is exactly 0.5.
    pub fn weight(&self, f: FeatureId) -> f64 {
        self.weight[f]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weight
    }

    /// Information gain of the binary feature in bits:
    /// H(class) - sum over f's values of P(value) * H(class | value).
    pub fn information_gain(&self, f: FeatureId) -> f64 {
        if self.total == 0 {
            return 0.0;
        }
        let with = self.d[f];
        let without = self.total - with;
        let h_root = entropy(&self.class_count, self.total);

        let h_with = entropy(&self.d_class[f], with);
        let absent: Vec<usize> = self
            .class_count
            .iter()
            .zip(&self.d_class[f])
            .map(|(&all, &has)| all - has)
            .collect();
        let h_without = entropy(&absent, without);

        let p_with = with as f64 / self.total as f64;
        let p_without = without as f64 / self.total as f64;
        let gain = h_root - p_with * h_with - p_without * h_without;
        gain.max(0.0)
    }

    /// Information gain for every feature.
    pub fn gains(&self) -> Vec<f64> {
        (0..self.n).map(|f| self.information_gain(f)).collect()
    }

    /// Checks the internal count identities; used when accepting stats from
    /// an untrusted model file.
    pub fn validate(&self) -> Result<()> {
        if self.d.len() != self.n || self.d_class.len() != self.n || self.weight.len() != self.n {
            return Err(Error::Invariant("stats arrays disagree with feature count".into()));
        }
        if self.class_count.len() != self.c {
            return Err(Error::Invariant("stats arrays disagree with class count".into()));
        }
        if self.class_count.iter().sum::<usize>() != self.total {
            return Err(Error::Invariant("class counts do not sum to total".into()));
        }
        for f in 0..self.n {
            if self.d_class[f].len() != self.c {
                return Err(Error::Invariant("per-class counts disagree with class count".into()));
            }
            if self.d_class[f].iter().sum::<usize>() != self.d[f] {
                return Err(Error::Invariant(format!(
                    "per-class counts for feature {} do not sum to |D_f|",
                    f
                )));
            }
            if self.d[f] > self.total {
                return Err(Error::Invariant(format!("|D_{}| exceeds total", f)));
            }
        }
        Ok(())
    }
}

/// Shannon entropy in bits of a count vector, with 0 log 0 = 0.
pub fn entropy(counts: &[usize], total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let total_f = total as f64;
    let mut h = 0.0;
    for &cnt in counts {
        if cnt > 0 {
            let p = cnt as f64 / total_f;
            h -= p * p.log2();
        }
    }
    h
}

/// Convenience wrapper mirroring the per-feature accessor.
pub fn compute_stats(ds: &Dataset) -> Result<FeatureStats> {
    FeatureStats::from_dataset(ds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Feature, FeatureDictionary, FeatureSource, FeatureVector};

    pub(crate) fn dataset(n: usize, rows: &[(&[usize], usize)]) -> Dataset {
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

    #[test]
    fn counts_single_class() {
        let ds = dataset(1, &[(&[0], 0), (&[0], 0)]);
        let s = compute_stats(&ds).unwrap();
        assert_eq!(s.feature_count(0), 2);
        assert_eq!(s.feature_class_count(0, 0), 2);
        assert_eq!(s.proportion(0, 0), 1.0);
    }

    #[test]
    fn absent_feature_has_zero_proportion() {
        let ds = dataset(2, &[(&[0], 0), (&[0], 1)]);
        let s = compute_stats(&ds).unwrap();
        assert_eq!(s.feature_count(1), 0);
        assert_eq!(s.proportion(1, 0), 0.0);
        assert_eq!(s.proportion(1, 1), 0.0);
    }

    #[test]
    fn proportion_examples() {
        // 4 instances (A, A, B, B); feature 0 in both A's only.
        let ds = dataset(1, &[(&[0], 0), (&[0], 0), (&[], 1), (&[], 1)]);
        let s = compute_stats(&ds).unwrap();
        assert_eq!(s.feature_count(0), 2);
        assert_eq!(s.proportion(0, 0), 1.0);
        assert_eq!(s.proportion(0, 1), 0.0);
    }

    #[test]
    fn proportion_quarter() {
        // d = 4, one of the holders in class 0.
        let ds = dataset(1, &[(&[0], 0), (&[0], 1), (&[0], 1), (&[0], 1)]);
        let s = compute_stats(&ds).unwrap();
        assert!((s.proportion(0, 0) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn weight_boundaries() {
        // All holders in one class: maximal selectivity.
        let ds = dataset(1, &[(&[0], 0), (&[0], 0), (&[], 1), (&[], 1)]);
        let s = compute_stats(&ds).unwrap();
        assert_eq!(s.weight(0), 1.0);

        // Holders split 50/50 across the two classes: no selectivity.
        let ds = dataset(1, &[(&[0], 0), (&[0], 1)]);
        let s = compute_stats(&ds).unwrap();
        assert_eq!(s.weight(0), 0.0);
    }

    #[test]
    fn weight_quarter_case() {
        // c = 2, d = 4 with one holder in class 0: p = (0.25, 0.75), and both
        // terms come out as 1 - 4(0.25)(0.75) = 0.25.
        let ds = dataset(1, &[(&[0], 0), (&[0], 1), (&[0], 1), (&[0], 1)]);
        let s = compute_stats(&ds).unwrap();
        assert!((s.weight(0) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn information_gain_perfect_split() {
        let ds = dataset(1, &[(&[0], 0), (&[0], 0), (&[], 1), (&[], 1)]);
        let s = compute_stats(&ds).unwrap();
        assert!((s.information_gain(0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn information_gain_constant_feature() {
        let ds = dataset(1, &[(&[0], 0), (&[0], 0), (&[0], 1), (&[0], 1)]);
        let s = compute_stats(&ds).unwrap();
        assert_eq!(s.information_gain(0), 0.0);
    }

    #[test]
    fn information_gain_uninformative_split() {
        // Both branches stay 50/50.
        let ds = dataset(1, &[(&[0], 0), (&[], 0), (&[0], 1), (&[], 1)]);
        let s = compute_stats(&ds).unwrap();
        assert!(s.information_gain(0).abs() < 1e-12);
    }

    #[test]
    fn order_independence() {
        let rows: &[(&[usize], usize)] =
            &[(&[0, 2], 0), (&[1], 1), (&[0], 2), (&[2], 1), (&[], 0)];
        let ds = dataset(3, rows);
        let mut reversed: Vec<(&[usize], usize)> = rows.to_vec();
        reversed.reverse();
        let ds_rev = dataset(3, &reversed);
        let a = compute_stats(&ds).unwrap();
        let b = compute_stats(&ds_rev).unwrap();
        assert_eq!(a.d, b.d);
        assert_eq!(a.d_class, b.d_class);
        assert_eq!(a.class_count, b.class_count);
        assert_eq!(a.weight, b.weight);
    }

    #[test]
    fn empty_dataset_rejected() {
        let ds = dataset(1, &[(&[0], 0)]);
        let empty = Dataset::new(ds.dictionary().clone(), vec![], vec![]).unwrap();
        assert!(matches!(compute_stats(&empty), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn brute_force_recount_matches() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let n = rng.gen_range(1..=8);
            let c = rng.gen_range(1..=4);
            let m = rng.gen_range(1..=20);
            let rows: Vec<(Vec<usize>, usize)> = (0..m)
                .map(|_| {
                    let feats: Vec<usize> =
                        (0..n).filter(|_| rng.gen_bool(0.4)).collect();
                    (feats, rng.gen_range(0..c))
                })
                .collect();
            let borrowed: Vec<(&[usize], usize)> =
                rows.iter().map(|(f, cl)| (f.as_slice(), *cl)).collect();
            // pad class ids so the dictionary always has c classes
            let mut padded = borrowed.clone();
            padded.push((&[], c - 1));
            let ds = dataset(n, &padded);
            let s = compute_stats(&ds).unwrap();
            for f in 0..n {
                let expect_d =
                    ds.instances().iter().filter(|i| i.vector.contains(f)).count();
                assert_eq!(s.feature_count(f), expect_d);
                for j in 0..c {
                    let expect = ds
                        .instances()
                        .iter()
                        .filter(|i| i.class_id == j && i.vector.contains(f))
                        .count();
                    assert_eq!(s.feature_class_count(f, j), expect);
                }
                assert!(s.weight(f) >= 0.0 && s.weight(f) <= 1.0);
                assert!(s.information_gain(f) >= 0.0);
                assert!(s.information_gain(f) <= (c as f64).log2() + 1e-12);
            }
        }
    }
}
