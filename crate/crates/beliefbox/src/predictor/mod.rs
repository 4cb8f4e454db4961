//! Belief-update prediction: mine (statement, previous, next) triples from
//! transcripts, featurize statements with TF-IDF, and regress the update
//! next - previous with ridge or a random forest. The new strength is the
//! previous one plus the predicted update, rounded back onto the scale.

mod forest;
mod ridge;
mod tfidf;

pub use forest::{fit_forest, ForestModel, ForestParams, TreeNode};
pub use ridge::{fit_ridge, RidgeModel};
pub use tfidf::{fit_tfidf, tokenize, SparseVec, TfidfModel};

use std::path::Path;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::debate::TranscriptRow;
use crate::error::{Error, Result};
use crate::prompts::parse_reassessment_prompt;
use crate::stats::mae;

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// One training example: agent-visible text plus the strength transition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BeliefUpdateExample {
    pub statement: String,
    pub prev: u8,
    pub next: u8,
}

impl BeliefUpdateExample {
    pub fn new(statement: impl Into<String>, prev: u8, next: u8) -> Result<Self> {
        if !(1..=5).contains(&prev) || !(1..=5).contains(&next) {
            return Err(Error::Domain(format!(
                "belief strengths must be 1-5, got prev={prev} next={next}"
            )));
        }
        Ok(Self {
            statement: statement.into(),
            prev,
            next,
        })
    }

    /// The regression target: next - prev, in [-4, 4].
    pub fn update(&self) -> f64 {
        f64::from(self.next) - f64::from(self.prev)
    }
}

/// How much of the reassessment prompt's statement becomes the training
/// text: the full debate window shown to the agent, or only its last turn.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatementGranularity {
    #[default]
    FullWindow,
    LastTurn,
}

/// Extract training pairs from transcript rows: every non-imputed
/// reassessment yields (statement shown in the prompt, previous, next).
pub fn mine_examples(
    rows: &[TranscriptRow],
    granularity: StatementGranularity,
) -> Vec<BeliefUpdateExample> {
    rows.iter()
        .filter(|r| r.imputed != Some(true))
        .filter_map(|r| {
            let next = r.reassessed_strength?;
            let (statement, prev) = parse_reassessment_prompt(&r.prompt_user)?;
            let statement = match granularity {
                StatementGranularity::FullWindow => statement,
                StatementGranularity::LastTurn => statement
                    .rsplit_once('\n')
                    .map(|(_, last)| last.to_string())
                    .unwrap_or(statement),
            };
            BeliefUpdateExample::new(statement, prev, next).ok()
        })
        .collect()
}

/// Deterministic shuffled 70/10/20 partition: floor(0.7 n) train,
/// floor(0.1 n) validation, remainder test.
pub fn split_dataset(
    examples: &[BeliefUpdateExample],
    seed: u64,
) -> (
    Vec<BeliefUpdateExample>,
    Vec<BeliefUpdateExample>,
    Vec<BeliefUpdateExample>,
) {
    let mut indices: Vec<usize> = (0..examples.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    indices.shuffle(&mut rng);
    let n = examples.len();
    let n_train = n * 7 / 10;
    let n_val = n / 10;
    let pick = |range: &[usize]| -> Vec<BeliefUpdateExample> {
        range.iter().map(|&i| examples[i].clone()).collect()
    };
    (
        pick(&indices[..n_train]),
        pick(&indices[n_train..n_train + n_val]),
        pick(&indices[n_train + n_val..]),
    )
}

/// Which regression backs the predictor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Regressor {
    Ridge(RidgeModel),
    Forest(ForestModel),
}

impl Regressor {
    pub fn predict(&self, x: &SparseVec) -> f64 {
        match self {
            Regressor::Ridge(m) => m.predict(x),
            Regressor::Forest(m) => m.predict(x),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Regressor::Ridge(_) => "ridge",
            Regressor::Forest(_) => "forest",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegressorKind {
    Ridge,
    Forest,
}

/// Training configuration, persisted with the model for provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainOptions {
    pub seed: u64,
    pub min_token_len: usize,
    pub regressor: RegressorKind,
    /// Ridge penalties tried against the validation split.
    pub ridge_penalty_grid: Vec<f64>,
    pub forest: ForestParams,
    /// How the training statements were mined (recorded for provenance).
    #[serde(default)]
    pub granularity: StatementGranularity,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            min_token_len: 2,
            regressor: RegressorKind::Ridge,
            ridge_penalty_grid: vec![0.1, 1.0, 10.0],
            forest: ForestParams::default(),
            granularity: StatementGranularity::FullWindow,
        }
    }
}

/// A trained predictor: vocabulary, idf weights, and the regressor, saved as
/// one JSON file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictorModel {
    pub format_version: u32,
    pub tfidf: TfidfModel,
    pub regressor: Regressor,
    pub config: TrainOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub train_size: usize,
    pub validation_size: usize,
    pub test_size: usize,
    /// Ridge penalty chosen on the validation split, when applicable.
    pub chosen_penalty: Option<f64>,
    pub validation_mae: Option<f64>,
    pub test: EvalReport,
}

/// Held-out accuracy of predicted next strengths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub mae: f64,
    /// MAE of the constant predictor at the split's median target.
    pub baseline_mae: f64,
    pub n: usize,
}

/// Predict the new strength: previous plus the regressed update, rounded
/// half-up and clamped to the 0-5 scale.
pub fn predict_new_strength(
    regressor: &Regressor,
    tfidf: &TfidfModel,
    statement: &str,
    prev: u8,
) -> Result<u8> {
    if !(1..=5).contains(&prev) {
        return Err(Error::Domain(format!(
            "previous strength must be 1-5, got {prev}"
        )));
    }
    let delta = regressor.predict(&tfidf.transform(statement));
    let raw = f64::from(prev) + delta;
    Ok(((raw + 0.5).floor()).clamp(0.0, 5.0) as u8)
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

fn eval_with(
    regressor: &Regressor,
    tfidf: &TfidfModel,
    examples: &[BeliefUpdateExample],
) -> Result<EvalReport> {
    if examples.is_empty() {
        return Err(Error::Domain("evaluation over an empty split".into()));
    }
    let truth: Vec<f64> = examples.iter().map(|e| f64::from(e.next)).collect();
    let pred: Vec<f64> = examples
        .iter()
        .map(|e| predict_new_strength(regressor, tfidf, &e.statement, e.prev).map(f64::from))
        .collect::<Result<_>>()?;
    let mut targets = truth.clone();
    let constant = median(&mut targets);
    let baseline: Vec<f64> = vec![constant; truth.len()];
    Ok(EvalReport {
        mae: mae(&pred, &truth)?,
        baseline_mae: mae(&baseline, &truth)?,
        n: examples.len(),
    })
}

/// Evaluate a trained model on a test split.
pub fn evaluate(model: &PredictorModel, test: &[BeliefUpdateExample]) -> Result<EvalReport> {
    eval_with(&model.regressor, &model.tfidf, test)
}

/// Split, fit TF-IDF on the train split, train the regressor (selecting the
/// ridge penalty on the validation split), and report test MAE.
pub fn train(
    examples: &[BeliefUpdateExample],
    options: &TrainOptions,
) -> Result<(PredictorModel, TrainReport)> {
    if examples.len() < 10 {
        return Err(Error::Domain(format!(
            "training needs at least 10 examples, got {}",
            examples.len()
        )));
    }
    let (train, validation, test) = split_dataset(examples, options.seed);
    let corpus: Vec<String> = train.iter().map(|e| e.statement.clone()).collect();
    let tfidf = fit_tfidf(&corpus, options.min_token_len)?;
    let x: Vec<SparseVec> = train
        .iter()
        .map(|e| tfidf.transform(&e.statement))
        .collect();
    let y: Vec<f64> = train.iter().map(|e| e.update()).collect();
    let dims = tfidf.dims();

    let (regressor, chosen_penalty, validation_mae) = match options.regressor {
        RegressorKind::Ridge => {
            let mut best: Option<(f64, f64, RidgeModel)> = None; // (val mae, penalty, model)
            for &penalty in &options.ridge_penalty_grid {
                let model = fit_ridge(&x, &y, dims, penalty)?;
                let candidate = Regressor::Ridge(model.clone());
                let val_mae = if validation.is_empty() {
                    f64::NAN
                } else {
                    eval_with(&candidate, &tfidf, &validation)?.mae
                };
                let better = match &best {
                    None => true,
                    Some((current, _, _)) => {
                        val_mae.is_nan() && current.is_nan() || val_mae < *current
                    }
                };
                if better {
                    best = Some((val_mae, penalty, model));
                }
            }
            let (val_mae, penalty, model) =
                best.ok_or_else(|| Error::Config("empty ridge penalty grid".into()))?;
            (
                Regressor::Ridge(model),
                Some(penalty),
                (!val_mae.is_nan()).then_some(val_mae),
            )
        }
        RegressorKind::Forest => {
            let params = ForestParams {
                seed: options.forest.seed,
                ..options.forest.clone()
            };
            let model = fit_forest(&x, &y, dims, &params)?;
            let candidate = Regressor::Forest(model);
            let val_mae = if validation.is_empty() {
                None
            } else {
                Some(eval_with(&candidate, &tfidf, &validation)?.mae)
            };
            (candidate, None, val_mae)
        }
    };

    let test_report = eval_with(&regressor, &tfidf, &test)?;
    let model = PredictorModel {
        format_version: MODEL_FORMAT_VERSION,
        tfidf,
        regressor,
        config: options.clone(),
    };
    let report = TrainReport {
        train_size: train.len(),
        validation_size: validation.len(),
        test_size: test.len(),
        chosen_penalty,
        validation_mae,
        test: test_report,
    };
    Ok((model, report))
}

pub fn save_model(model: &PredictorModel, path: impl AsRef<Path>) -> Result<()> {
    let mut json = serde_json::to_string_pretty(model)?;
    json.push('\n');
    std::fs::write(path, json)?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<PredictorModel> {
    let raw = std::fs::read_to_string(path.as_ref())?;
    let model: PredictorModel =
        serde_json::from_str(&raw).map_err(|e| Error::Data(format!("model file: {e}")))?;
    if model.format_version != MODEL_FORMAT_VERSION {
        return Err(Error::Data(format!(
            "unsupported model format version {}",
            model.format_version
        )));
    }
    Ok(model)
}
