//! BFI-2 personality scoring across open-mindedness levels.
//!
//! The inventory's licensed item text is user-supplied; the repository ships
//! a synthetic stand-in bank with the same trait/reverse-key schema for
//! tests.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::backend::ChatBackend;
use crate::debate::{AgentRole, TranscriptRow};
use crate::error::{Error, Result};
use crate::prompts::{parse_likert, render_bfi2, ExpectedAnswer};

use super::{ask_single, DataQuality, ExperimentResult, ResultRow, RunOutput};

/// The five inventory traits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraitName {
    OpenMindedness,
    Conscientiousness,
    Extraversion,
    Agreeableness,
    NegativeEmotionality,
}

impl TraitName {
    pub const ALL: [TraitName; 5] = [
        TraitName::OpenMindedness,
        TraitName::Conscientiousness,
        TraitName::Extraversion,
        TraitName::Agreeableness,
        TraitName::NegativeEmotionality,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TraitName::OpenMindedness => "open_mindedness",
            TraitName::Conscientiousness => "conscientiousness",
            TraitName::Extraversion => "extraversion",
            TraitName::Agreeableness => "agreeableness",
            TraitName::NegativeEmotionality => "negative_emotionality",
        }
    }
}

/// One inventory item with its trait and reverse-key flag.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bfi2Item {
    pub id: String,
    pub text: String,
    #[serde(rename = "trait")]
    pub trait_name: TraitName,
    pub reverse: bool,
}

/// Load an item bank: a JSON array of {id, text, trait, reverse}.
pub fn load_item_bank(path: impl AsRef<Path>) -> Result<Vec<Bfi2Item>> {
    let raw = std::fs::read_to_string(path.as_ref())?;
    let items: Vec<Bfi2Item> =
        serde_json::from_str(&raw).map_err(|e| Error::Data(format!("item bank: {e}")))?;
    for (i, item) in items.iter().enumerate() {
        if item.text.is_empty() {
            return Err(Error::Data(format!(
                "item bank record {}: empty text",
                i + 1
            )));
        }
    }
    Ok(items)
}

#[derive(Debug, Clone)]
pub struct Bfi2Options {
    pub levels: Vec<u8>,
    pub runs: usize,
    /// Traits to score; each must have at least one item in the bank.
    pub traits: Vec<TraitName>,
}

impl Default for Bfi2Options {
    fn default() -> Self {
        Self {
            levels: vec![1, 2, 3, 4, 5],
            runs: 3,
            traits: TraitName::ALL.to_vec(),
        }
    }
}

/// Answer every item at every level, map reverse-keyed responses r -> 6 - r,
/// and score each trait as (mean keyed response - 1) / 4 * 100, averaged
/// over runs.
pub fn run_bfi2(
    backend: &Arc<dyn ChatBackend>,
    items: &[Bfi2Item],
    options: &Bfi2Options,
) -> Result<RunOutput> {
    if options.runs == 0 {
        return Err(Error::Config("runs must be at least 1".into()));
    }
    if let Some(bad) = options.levels.iter().find(|l| !(1..=5).contains(*l)) {
        return Err(Error::Config(format!("level {bad} outside {{1..5}}")));
    }
    for t in &options.traits {
        if !items.iter().any(|i| i.trait_name == *t) {
            return Err(Error::Config(format!(
                "trait {} has zero items in the bank",
                t.name()
            )));
        }
    }

    let mut quality = DataQuality::default();
    let mut rows = Vec::new();
    let mut result_rows = Vec::new();

    for &level in &options.levels {
        // per (trait, run): keyed responses
        let mut per_run: BTreeMap<(TraitName, usize), Vec<f64>> = BTreeMap::new();
        let mut included = 0usize;
        for run in 0..options.runs {
            let agent_id = format!("bfi2-level{level}-run{run}");
            for (idx, item) in items.iter().enumerate() {
                if !options.traits.contains(&item.trait_name) {
                    continue;
                }
                let prompt = render_bfi2(&item.text, level)?;
                let outcome = ask_single(
                    backend,
                    &agent_id,
                    idx + 1,
                    prompt,
                    ExpectedAnswer::Likert,
                    parse_likert,
                    &mut quality,
                )?;
                let Some((prompt, response, parsed)) = outcome else {
                    continue;
                };
                rows.push(TranscriptRow {
                    debate_id: format!("bfi2-level{level}"),
                    sample_id: item.id.clone(),
                    run,
                    round: idx + 1,
                    speaker: agent_id.clone(),
                    role: AgentRole::Target,
                    prompt_system: prompt.system,
                    prompt_user: prompt.user,
                    response,
                    parsed_choice: None,
                    reassessed_strength: None,
                    imputed: None,
                });
                if let Some(raw) = parsed {
                    let keyed = if item.reverse {
                        6.0 - f64::from(raw)
                    } else {
                        f64::from(raw)
                    };
                    per_run
                        .entry((item.trait_name, run))
                        .or_default()
                        .push(keyed);
                    included += 1;
                }
            }
        }

        let values = options
            .traits
            .iter()
            .map(|t| {
                let run_scores: Vec<f64> = (0..options.runs)
                    .filter_map(|run| {
                        let keyed = per_run.get(&(*t, run))?;
                        let mean = keyed.iter().sum::<f64>() / keyed.len() as f64;
                        Some((mean - 1.0) / 4.0 * 100.0)
                    })
                    .collect();
                if run_scores.is_empty() {
                    f64::NAN
                } else {
                    run_scores.iter().sum::<f64>() / run_scores.len() as f64
                }
            })
            .collect();

        result_rows.push(ResultRow {
            condition: format!("level={level}"),
            n: included,
            values,
        });
    }

    Ok(RunOutput {
        result: ExperimentResult {
            experiment: "bfi2".into(),
            dataset: None,
            metric_names: options
                .traits
                .iter()
                .map(|t| t.name().to_string())
                .collect(),
            rows: result_rows,
            regression: None,
            regression_note: None,
            quality,
        },
        rows,
    })
}
