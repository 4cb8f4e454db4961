//! Multi-agent debate simulation with explicit belief boxes.
//!
//! Agents carry a *belief box* (natural-language propositions with Likert
//! strengths 1-5) and an open-mindedness level 1-5. Debates run against any
//! chat-completions backend; after every round each agent reassesses the
//! strength of its held beliefs, which yields belief trajectories, change
//! rates, and training data for a from-scratch belief-update predictor.
//!
//! Module map:
//! - [`model`]: belief box data model, revision arithmetic, headline metrics
//! - [`prompts`]: the prompt templates and response parsers
//! - [`backend`]: chat backend trait, HTTP client, deterministic scripted mock
//! - [`dataset`]: MMLU-shaped CSV and Aporia-shaped JSON loaders
//! - [`debate`]: round-based debate orchestration and transcripts
//! - [`experiment`]: the four experiment protocols and their result tables
//! - [`stats`]: Pearson r, univariate OLS F-test, MAE
//! - [`predictor`]: TF-IDF + ridge/forest regressors for belief updates

pub mod backend;
pub mod dataset;
pub mod debate;
pub mod error;
pub mod experiment;
pub mod model;
pub mod predictor;
pub mod prompts;
pub mod stats;

pub use error::{Error, Result};
