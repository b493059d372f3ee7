//! Counterfactual multi-token fairness auditing for binary text classifiers.
//!
//! The pipeline runs in four stages:
//!
//! 1. [`lexicon`] holds sensitive words for six attributes together with the
//!    words they may be swapped for.
//! 2. [`text`] and [`conllu`] tokenize documents and split them into
//!    independent clauses.
//! 3. [`cfgen`] locates sensitive tokens, groups tokens that must flip
//!    together, and realizes every clause-local combination of flips as a
//!    counterfactual text.
//! 4. [`audit`] measures the flip-rate of a classifier over those
//!    counterfactuals and mitigates it by augmentation-retraining.
//!
//! [`models`] ships three small classifiers over hashed text features and
//! [`explain`] adds local-linear and anchor explanations whose tokens can be
//! merged into the perturbation set.

pub mod audit;
pub mod cfgen;
pub mod cli;
pub mod conllu;
pub mod corpus;
pub mod error;
pub mod explain;
pub mod lexicon;
pub mod models;
pub mod seed;
pub mod synthetic;
pub mod text;

pub use error::{Error, Result};
