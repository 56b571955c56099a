//! Case data model and binary feature encoding.
//!
//! A raw case arrives already analyzed: a deep-form list (DFL) of
//! language-independent semantic concepts plus an unknown-value list (UVL)
//! of values resolved to entity types or data types. Encoding maps both
//! onto sparse binary features: one feature per known deep form, one
//! feature for the bucketed UVL count, and one feature per known UVL
//! entry type.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub type FeatureId = usize;
pub type ClassId = usize;

/// UVL count buckets: 0, 1, 2, 3 and "4 or more" values.
pub const UVL_COUNT_BUCKETS: [&str; 5] = ["0", "1", "2", "3", "4+"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UvlKind {
    Entity,
    Datatype,
}

impl UvlKind {
    fn as_str(self) -> &'static str {
        match self {
            UvlKind::Entity => "entity",
            UvlKind::Datatype => "datatype",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UvlEntry {
    pub kind: UvlKind,
    pub name: String,
}

impl UvlEntry {
    pub fn new(kind: UvlKind, name: impl Into<String>) -> Self {
        UvlEntry { kind, name: name.into() }
    }

    /// Dictionary name for this entry, e.g. `entity:material_id`.
    pub fn feature_name(&self) -> String {
        format!("{}:{}", self.kind.as_str(), self.name)
    }
}

/// One analyzed input sentence, possibly labeled with its command class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawCase {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lang: Option<String>,
    pub dfl: Vec<String>,
    #[serde(default)]
    pub uvl: Vec<UvlEntry>,
    #[serde(rename = "class", default, skip_serializing_if = "Option::is_none")]
    pub class_label: Option<String>,
}

impl RawCase {
    fn validate(&self) -> std::result::Result<(), String> {
        if self.id.is_empty() {
            return Err("case id must be non-empty".into());
        }
        if self.dfl.iter().any(|d| d.is_empty()) {
            return Err(format!("case `{}`: empty deep form", self.id));
        }
        if self.uvl.iter().any(|u| u.name.is_empty()) {
            return Err(format!("case `{}`: empty UVL name", self.id));
        }
        if matches!(&self.class_label, Some(c) if c.is_empty()) {
            return Err(format!("case `{}`: empty class label", self.id));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSource {
    Dfl,
    UvlCount,
    UvlType,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Feature {
    pub id: FeatureId,
    pub name: String,
    pub source: FeatureSource,
}

/// Maps feature names and class labels to dense ids. Immutable once built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DictionaryFile", into = "DictionaryFile")]
pub struct FeatureDictionary {
    features: Vec<Feature>,
    classes: Vec<String>,
    dfl_index: HashMap<String, FeatureId>,
    count_index: HashMap<String, FeatureId>,
    type_index: HashMap<String, FeatureId>,
    class_index: HashMap<String, ClassId>,
}

/// On-disk dictionary object.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct DictionaryFile {
    version: u32,
    features: Vec<Feature>,
    classes: Vec<String>,
}

impl From<FeatureDictionary> for DictionaryFile {
    fn from(dict: FeatureDictionary) -> Self {
        DictionaryFile { version: 1, features: dict.features, classes: dict.classes }
    }
}

impl TryFrom<DictionaryFile> for FeatureDictionary {
    type Error = Error;

    fn try_from(file: DictionaryFile) -> Result<FeatureDictionary> {
        if file.version != 1 {
            return Err(Error::Parse {
                line: 1,
                message: format!("unsupported dictionary version {}", file.version),
            });
        }
        FeatureDictionary::from_parts(file.features, file.classes)
    }
}

impl FeatureDictionary {
    /// Builds a dictionary from explicit features and classes, validating
    /// dense ids and per-source name uniqueness.
    pub fn from_parts(features: Vec<Feature>, classes: Vec<String>) -> Result<Self> {
        let mut dfl_index = HashMap::new();
        let mut count_index = HashMap::new();
        let mut type_index = HashMap::new();
        for (pos, f) in features.iter().enumerate() {
            if f.id != pos {
                return Err(Error::Invariant(format!(
                    "feature ids must be dense 0..n-1, found id {} at position {}",
                    f.id, pos
                )));
            }
            if f.name.is_empty() {
                return Err(Error::Invariant(format!("feature {} has empty name", f.id)));
            }
            let index = match f.source {
                FeatureSource::Dfl => &mut dfl_index,
                FeatureSource::UvlCount => &mut count_index,
                FeatureSource::UvlType => &mut type_index,
            };
            if index.insert(f.name.clone(), f.id).is_some() {
                return Err(Error::Invariant(format!(
                    "duplicate feature name `{}` within one source",
                    f.name
                )));
            }
        }
        let mut class_index = HashMap::new();
        for (pos, c) in classes.iter().enumerate() {
            if c.is_empty() {
                return Err(Error::Invariant("empty class name".into()));
            }
            if class_index.insert(c.clone(), pos).is_some() {
                return Err(Error::Invariant(format!("duplicate class name `{}`", c)));
            }
        }
        Ok(FeatureDictionary { features, classes, dfl_index, count_index, type_index, class_index })
    }

    pub fn n_features(&self) -> usize {
        self.features.len()
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn features(&self) -> &[Feature] {
        &self.features
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn feature_name(&self, f: FeatureId) -> Option<&str> {
        self.features.get(f).map(|f| f.name.as_str())
    }

    pub fn class_name(&self, c: ClassId) -> Option<&str> {
        self.classes.get(c).map(String::as_str)
    }

    pub fn class_id(&self, name: &str) -> Option<ClassId> {
        self.class_index.get(name).copied()
    }

    /// Canonical single-line JSON form; the basis of the dictionary digest.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("dictionary serialization cannot fail")
    }

    /// Hex SHA-256 digest of the canonical serialization. Models record this
    /// to reject inputs encoded under a different dictionary.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }
}

/// Sparse binary feature vector: the strictly ascending set of feature ids
/// present in a case.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "Vec<FeatureId>", into = "Vec<FeatureId>")]
pub struct FeatureVector(Vec<FeatureId>);

impl From<Vec<FeatureId>> for FeatureVector {
    fn from(ids: Vec<FeatureId>) -> Self {
        FeatureVector::new(ids)
    }
}

impl From<FeatureVector> for Vec<FeatureId> {
    fn from(v: FeatureVector) -> Self {
        v.0
    }
}

impl FeatureVector {
    /// Normalizes to set semantics: sorted, duplicates collapsed.
    pub fn new(mut ids: Vec<FeatureId>) -> Self {
        ids.sort_unstable();
        ids.dedup();
        FeatureVector(ids)
    }

    pub fn empty() -> Self {
        FeatureVector(Vec::new())
    }

    pub fn contains(&self, f: FeatureId) -> bool {
        self.0.binary_search(&f).is_ok()
    }

    pub fn ids(&self) -> &[FeatureId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn max_id(&self) -> Option<FeatureId> {
        self.0.last().copied()
    }
}

/// An encoded, labeled training case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    #[serde(rename = "features")]
    pub vector: FeatureVector,
    #[serde(rename = "class")]
    pub class_id: ClassId,
}

impl Instance {
    pub fn new(vector: FeatureVector, class_id: ClassId) -> Self {
        Instance { vector, class_id }
    }
}

/// A feature dictionary plus the encoded instances under it.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    dictionary: FeatureDictionary,
    ids: Vec<String>,
    instances: Vec<Instance>,
}

impl Dataset {
    pub fn new(
        dictionary: FeatureDictionary,
        ids: Vec<String>,
        instances: Vec<Instance>,
    ) -> Result<Self> {
        if ids.len() != instances.len() {
            return Err(Error::Invariant(format!(
                "{} ids for {} instances",
                ids.len(),
                instances.len()
            )));
        }
        let n = dictionary.n_features();
        let c = dictionary.n_classes();
        for inst in &instances {
            if let Some(max) = inst.vector.max_id() {
                if max >= n {
                    return Err(Error::FeatureOutOfRange { feature: max, limit: n });
                }
            }
            if inst.class_id >= c {
                return Err(Error::UnknownClassId(inst.class_id));
            }
        }
        Ok(Dataset { dictionary, ids, instances })
    }

    pub fn dictionary(&self) -> &FeatureDictionary {
        &self.dictionary
    }

    pub fn instances(&self) -> &[Instance] {
        &self.instances
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.dictionary.n_features()
    }

    pub fn n_classes(&self) -> usize {
        self.dictionary.n_classes()
    }
}

/// Builds the feature dictionary from a labeled collection: one feature per
/// distinct deep form (by first occurrence), the five UVL count buckets, and
/// one feature per distinct UVL entry type (by first occurrence). Classes are
/// registered by first occurrence as well.
pub fn build_dictionary(cases: &[RawCase]) -> Result<FeatureDictionary> {
    if cases.is_empty() {
        return Err(Error::EmptyInput("case list"));
    }
    let mut features = Vec::new();
    let mut classes: Vec<String> = Vec::new();
    let mut seen_dfl: HashMap<&str, ()> = HashMap::new();
    let mut seen_type: HashMap<String, ()> = HashMap::new();
    let mut seen_class: HashMap<&str, ()> = HashMap::new();
    let mut type_names: Vec<String> = Vec::new();

    for case in cases {
        case.validate().map_err(|message| Error::Invariant(message))?;
        let label = case
            .class_label
            .as_deref()
            .ok_or_else(|| Error::UnlabeledCase { id: case.id.clone() })?;
        for form in &case.dfl {
            if seen_dfl.insert(form, ()).is_none() {
                features.push(Feature {
                    id: 0, // assigned below
                    name: form.clone(),
                    source: FeatureSource::Dfl,
                });
            }
        }
        for entry in &case.uvl {
            let name = entry.feature_name();
            if seen_type.insert(name.clone(), ()).is_none() {
                type_names.push(name);
            }
        }
        if seen_class.insert(label, ()).is_none() {
            classes.push(label.to_string());
        }
    }

    for bucket in UVL_COUNT_BUCKETS {
        features.push(Feature { id: 0, name: bucket.to_string(), source: FeatureSource::UvlCount });
    }
    for name in type_names {
        features.push(Feature { id: 0, name, source: FeatureSource::UvlType });
    }
    for (id, f) in features.iter_mut().enumerate() {
        f.id = id;
    }
    FeatureDictionary::from_parts(features, classes)
}

fn count_bucket(n: usize) -> &'static str {
    UVL_COUNT_BUCKETS[n.min(4)]
}

/// Encodes a case under a dictionary. Total for any input: deep forms and
/// UVL types the dictionary does not know are dropped, which filters
/// vocabulary never seen in training.
pub fn encode_case(case: &RawCase, dict: &FeatureDictionary) -> FeatureVector {
    let mut ids = Vec::with_capacity(case.dfl.len() + case.uvl.len() + 1);
    for form in &case.dfl {
        if let Some(&f) = dict.dfl_index.get(form) {
            ids.push(f);
        }
    }
    if let Some(&f) = dict.count_index.get(count_bucket(case.uvl.len())) {
        ids.push(f);
    }
    for entry in &case.uvl {
        if let Some(&f) = dict.type_index.get(&entry.feature_name()) {
            ids.push(f);
        }
    }
    FeatureVector::new(ids)
}

/// Encodes a labeled collection into a dataset. Every case must be labeled
/// with a class the dictionary knows.
pub fn encode_cases(cases: &[RawCase], dict: &FeatureDictionary) -> Result<Dataset> {
    let mut ids = Vec::with_capacity(cases.len());
    let mut instances = Vec::with_capacity(cases.len());
    for case in cases {
        let label = case
            .class_label
            .as_deref()
            .ok_or_else(|| Error::UnlabeledCase { id: case.id.clone() })?;
        let class_id = dict
            .class_id(label)
            .ok_or_else(|| Error::UnknownClass(label.to_string()))?;
        ids.push(case.id.clone());
        instances.push(Instance::new(encode_case(case, dict), class_id));
    }
    Dataset::new(dict.clone(), ids, instances)
}

/// Reads one raw case per line.
pub fn read_raw_cases(reader: impl BufRead) -> Result<Vec<RawCase>> {
    let mut cases = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let case: RawCase = serde_json::from_str(&line)
            .map_err(|e| Error::Parse { line: line_no, message: e.to_string() })?;
        case.validate().map_err(|message| Error::Parse { line: line_no, message })?;
        cases.push(case);
    }
    Ok(cases)
}

#[derive(Serialize, Deserialize)]
struct DatasetHeader {
    version: u32,
    dictionary: FeatureDictionary,
}

#[derive(Serialize, Deserialize)]
struct InstanceLine {
    id: String,
    features: Vec<FeatureId>,
    class: String,
}

/// Reads an encoded dataset: a header line with the dictionary, then one
/// instance per line. Errors name the offending line.
pub fn load_dataset(reader: impl BufRead) -> Result<Dataset> {
    let mut lines = reader.lines().enumerate();
    let (header_line, dictionary) = loop {
        match lines.next() {
            Some((idx, line)) => {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let header: DatasetHeader = serde_json::from_str(&line)
                    .map_err(|e| Error::Parse { line: idx + 1, message: e.to_string() })?;
                if header.version != 1 {
                    return Err(Error::Parse {
                        line: idx + 1,
                        message: format!("unsupported dataset version {}", header.version),
                    });
                }
                break (idx + 1, header.dictionary);
            }
            None => return Err(Error::EmptyInput("dataset stream")),
        }
    };
    let _ = header_line;

    let n = dictionary.n_features();
    let mut ids = Vec::new();
    let mut instances = Vec::new();
    for (idx, line) in lines {
        let line = line?;
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: InstanceLine = serde_json::from_str(&line)
            .map_err(|e| Error::Parse { line: line_no, message: e.to_string() })?;
        for &f in &parsed.features {
            if f >= n {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("feature id {} out of range (dictionary has {} features)", f, n),
                });
            }
        }
        let class_id = dictionary.class_id(&parsed.class).ok_or_else(|| Error::Parse {
            line: line_no,
            message: format!("unknown class `{}`", parsed.class),
        })?;
        ids.push(parsed.id);
        instances.push(Instance::new(FeatureVector::new(parsed.features), class_id));
    }
    Dataset::new(dictionary, ids, instances)
}

/// Writes the canonical encoded form; `load_dataset` of the output
/// reproduces an equal dataset.
pub fn save_dataset(ds: &Dataset, mut writer: impl Write) -> Result<()> {
    let header = DatasetHeader { version: 1, dictionary: ds.dictionary.clone() };
    writeln!(writer, "{}", serde_json::to_string(&header).expect("header serialization"))?;
    for (id, inst) in ds.ids.iter().zip(&ds.instances) {
        let line = InstanceLine {
            id: id.clone(),
            features: inst.vector.ids().to_vec(),
            class: ds
                .dictionary
                .class_name(inst.class_id)
                .expect("instance class consistent with dictionary")
                .to_string(),
        };
        writeln!(writer, "{}", serde_json::to_string(&line).expect("line serialization"))?;
    }
    Ok(())
}

/// Deterministic stratified holdout split. Each class contributes
/// `floor(size * fraction)` test cases; the rest stay in training. Instance
/// order within each side follows the input dataset.
pub fn split(ds: &Dataset, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;

    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidFraction(test_fraction));
    }
    if ds.len() < 2 {
        return Err(Error::EmptyInput("dataset must hold at least 2 instances to split"));
    }

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut is_test = vec![false; ds.len()];
    for class_id in 0..ds.n_classes() {
        let mut members: Vec<usize> = (0..ds.len())
            .filter(|&i| ds.instances[i].class_id == class_id)
            .collect();
        members.shuffle(&mut rng);
        let take = (members.len() as f64 * test_fraction + 1e-9).floor() as usize;
        for &i in members.iter().take(take) {
            is_test[i] = true;
        }
    }

    let mut train = (Vec::new(), Vec::new());
    let mut test = (Vec::new(), Vec::new());
    for i in 0..ds.len() {
        let side = if is_test[i] { &mut test } else { &mut train };
        side.0.push(ds.ids[i].clone());
        side.1.push(ds.instances[i].clone());
    }
    Ok((
        Dataset::new(ds.dictionary.clone(), train.0, train.1)?,
        Dataset::new(ds.dictionary.clone(), test.0, test.1)?,
    ))
}
