//! Inductive learners for mapping natural-language database commands to
//! command classes.
//!
//! Analyzed input sentences arrive as deep-form concept lists plus unknown
//! values resolved against the database; [`corpus`] encodes them into sparse
//! binary feature vectors. On top of that encoding sit twelve classifiers in
//! three families, all trained through [`harness::train`] and all answering
//! with a ranked list of candidate classes:
//!
//! * instance-based: IB1, IB1-IG, BIN-CAT, and the prototype learner
//!   BIN-PRO ([`instance_based`]);
//! * decision trees with static (BS-tree, IGTree) or dynamic (BD-tree,
//!   C4.5) feature selection ([`trees`]);
//! * rule induction: FOIL, BIN-rules, rules extracted from the C4.5 tree,
//!   and the SE-tree index over a rule base ([`rules`]).
//!
//! [`harness`] adds holdout evaluation (success and top-3 rates),
//! multi-algorithm comparison reports, model files, and a seeded synthetic
//! corpus generator shaped like the original 1000-sentence workload.

pub mod corpus;
pub mod error;
pub mod harness;
pub mod instance_based;
pub mod prediction;
pub mod rules;
pub mod stats;
pub mod trees;

pub use corpus::{ClassId, Dataset, FeatureDictionary, FeatureId, FeatureVector, Instance, RawCase};
pub use error::{Error, Result};
pub use harness::{AlgorithmId, Model, SynthConfig};
pub use prediction::{Basis, RankedClass, RankedPrediction};
