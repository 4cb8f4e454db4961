//! The four experiment protocols as seeded run matrices producing metric
//! tables: BFI-2 scoring, open-mindedness validation, persuasion, and peer
//! pressure.

mod bfi2;
mod open_mindedness;
mod peer_pressure;
mod persuasion;

pub use bfi2::{load_item_bank, run_bfi2, Bfi2Item, Bfi2Options, TraitName};
pub use open_mindedness::run_openmindedness;
pub use peer_pressure::{run_peer_pressure, PeerDataset, PeerPressureOptions};
pub use persuasion::{run_persuasion, PersuasionCondition};

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::backend::{CallContext, ChatBackend, ChatMessage};
use crate::error::{Error, Result};
use crate::prompts::{clarification, Direction, ExpectedAnswer, PromptPair};
use crate::stats::RegressionReport;

/// Which protocol a run executes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Bfi2,
    OpenMindedness,
    Persuasion,
    PeerPressure,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Bfi2 => "bfi2",
            ExperimentKind::OpenMindedness => "open-mindedness",
            ExperimentKind::Persuasion => "persuasion",
            ExperimentKind::PeerPressure => "peer-pressure",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetKind {
    Mmlu,
    Aporia,
}

impl DatasetKind {
    pub fn name(self) -> &'static str {
        match self {
            DatasetKind::Mmlu => "mmlu",
            DatasetKind::Aporia => "aporia",
        }
    }
}

/// Full description of one experiment's condition matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConditionSpec {
    pub experiment: ExperimentKind,
    pub dataset: Option<DatasetKind>,
    pub levels: Vec<u8>,
    pub directions: Vec<Direction>,
    pub conditions: Vec<PersuasionCondition>,
    pub group_sizes: Vec<usize>,
    pub runs: usize,
    pub seed: u64,
}

impl ConditionSpec {
    /// The protocol's published defaults for a dataset.
    pub fn default_for(experiment: ExperimentKind, dataset: Option<DatasetKind>) -> Self {
        let mut spec = Self {
            experiment,
            dataset,
            levels: Vec::new(),
            directions: Vec::new(),
            conditions: Vec::new(),
            group_sizes: Vec::new(),
            runs: 1,
            seed: 0,
        };
        match experiment {
            ExperimentKind::Bfi2 => {
                spec.levels = vec![1, 2, 3, 4, 5];
                spec.runs = 3;
            }
            ExperimentKind::OpenMindedness => {
                spec.levels = vec![1, 2, 3, 4, 5];
                spec.directions = Direction::BOTH.to_vec();
                spec.dataset = Some(DatasetKind::Aporia);
                spec.runs = 3;
            }
            ExperimentKind::Persuasion => {
                spec.conditions = PersuasionCondition::ALL.to_vec();
                spec.dataset = Some(DatasetKind::Aporia);
                spec.runs = 5;
            }
            ExperimentKind::PeerPressure => {
                spec.group_sizes = match dataset {
                    Some(DatasetKind::Mmlu) => vec![1, 3],
                    _ => vec![1, 2, 3, 4],
                };
                spec.runs = 5;
            }
        }
        spec
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::Config("runs must be at least 1".into()));
        }
        let need_levels = matches!(
            self.experiment,
            ExperimentKind::Bfi2 | ExperimentKind::OpenMindedness
        );
        if need_levels {
            if self.levels.is_empty() {
                return Err(Error::Config("no open-mindedness levels selected".into()));
            }
            if let Some(bad) = self.levels.iter().find(|l| !(1..=5).contains(*l)) {
                return Err(Error::Config(format!("level {bad} outside {{1..5}}")));
            }
        }
        match self.experiment {
            ExperimentKind::Bfi2 => {}
            ExperimentKind::OpenMindedness => {
                if self.directions.is_empty() {
                    return Err(Error::Config("no directions selected".into()));
                }
                if self.dataset != Some(DatasetKind::Aporia) {
                    return Err(Error::Config(
                        "open-mindedness validation requires the aporia dataset".into(),
                    ));
                }
            }
            ExperimentKind::Persuasion => {
                if self.conditions.is_empty() {
                    return Err(Error::Config("no persuasion conditions selected".into()));
                }
                if self.dataset != Some(DatasetKind::Aporia) {
                    return Err(Error::Config(
                        "persuasion requires the aporia dataset".into(),
                    ));
                }
            }
            ExperimentKind::PeerPressure => {
                if self.group_sizes.is_empty() {
                    return Err(Error::Config("no peer group sizes selected".into()));
                }
                if self.group_sizes.contains(&0) {
                    return Err(Error::Config("peer group size must be at least 1".into()));
                }
                if self.dataset.is_none() {
                    return Err(Error::Config("peer pressure requires a dataset".into()));
                }
            }
        }
        Ok(())
    }
}

/// Counters for responses that failed to parse or trials dropped from the
/// metrics.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataQuality {
    /// Responses that needed the single clarification retry.
    pub parse_retries: usize,
    /// Observations lost after the retry also failed.
    pub null_observations: usize,
    /// Reassessments imputed by carrying the previous strength forward.
    pub imputed_reassessments: usize,
    /// Trials excluded from the metrics (incomplete, unparseable verdict, or
    /// over the imputation budget).
    pub excluded_trials: usize,
    /// Debates aborted by backend failures.
    pub incomplete_debates: usize,
}

impl DataQuality {
    pub fn absorb_transcript(&mut self, t: &crate::debate::DebateTranscript) {
        self.parse_retries += t.parse_retries;
        self.null_observations += t.null_observations;
        self.imputed_reassessments += t
            .turns
            .iter()
            .filter(|turn| turn.is_reassessment() && turn.imputed)
            .count();
        if !t.complete {
            self.incomplete_debates += 1;
        }
    }
}

/// One metric-table row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub condition: String,
    /// Trials included in this row's metrics.
    pub n: usize,
    /// Values parallel to the table's `metric_names`.
    pub values: Vec<f64>,
}

/// Per-condition metric table plus statistics and data-quality counters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub experiment: String,
    pub dataset: Option<String>,
    pub metric_names: Vec<String>,
    pub rows: Vec<ResultRow>,
    /// Group-size regression for peer pressure, when defined.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub regression: Option<RegressionReport>,
    /// Reason the regression was omitted, when it was.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub regression_note: Option<String>,
    pub quality: DataQuality,
}

impl ExperimentResult {
    /// One CSV row per condition, byte-stable for identical inputs.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("condition,n");
        for name in &self.metric_names {
            out.push(',');
            out.push_str(name);
        }
        out.push('\n');
        for row in &self.rows {
            out.push_str(&format!("{},{}", csv_escape(&row.condition), row.n));
            for v in &row.values {
                out.push_str(&format!(",{v:.6}"));
            }
            out.push('\n');
        }
        out
    }

    pub fn to_summary_json(&self) -> Result<String> {
        let mut out = serde_json::to_string_pretty(self)?;
        out.push('\n');
        Ok(out)
    }
}

fn csv_escape(field: &str) -> String {
    if field.contains([',', '"', '\n']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

/// Stable seed derivation for nested run matrices.
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    let mut state = base;
    for &part in parts {
        state = splitmix64(state ^ part.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    }
    splitmix64(state)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

type Job<T> = Box<dyn FnOnce() -> T + Send>;

/// Run independent jobs under a bounded worker pool, returning results in
/// job order regardless of scheduling.
pub(crate) fn run_jobs<T: Send>(jobs: Vec<Job<T>>, limit: usize) -> Vec<T> {
    let limit = limit.max(1);
    if limit == 1 || jobs.len() <= 1 {
        return jobs.into_iter().map(|j| j()).collect();
    }
    let n = jobs.len();
    let slots: Vec<Mutex<Option<Job<T>>>> = jobs.into_iter().map(|j| Mutex::new(Some(j))).collect();
    let results: Vec<Mutex<Option<T>>> = (0..n).map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..limit.min(n) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= n {
                    break;
                }
                let job = slots[i]
                    .lock()
                    .expect("job slot")
                    .take()
                    .expect("job taken once");
                *results[i].lock().expect("result slot") = Some(job());
            });
        }
    });
    results
        .into_iter()
        .map(|m| m.into_inner().expect("result lock").expect("job ran"))
        .collect()
}

/// One single-shot trial with the parse-retry protocol: ask, and on a parse
/// failure ask once more with a clarification line appended.
#[allow(clippy::type_complexity)]
pub(crate) fn ask_single<T>(
    backend: &Arc<dyn ChatBackend>,
    agent_id: &str,
    round: usize,
    prompt: PromptPair,
    expected: ExpectedAnswer,
    parse: impl Fn(&str) -> Result<T>,
    quality: &mut DataQuality,
) -> Result<Option<(PromptPair, String, Option<T>)>> {
    let ctx = CallContext {
        agent: agent_id,
        round,
    };
    let messages = [
        ChatMessage::system(prompt.system.clone()),
        ChatMessage::user(prompt.user.clone()),
    ];
    let response = match backend.complete(&ctx, &messages) {
        Ok(r) => r,
        Err(e) => {
            log::warn!("trial {agent_id} round {round} dropped: {e}");
            quality.excluded_trials += 1;
            return Ok(None);
        }
    };
    if let Ok(v) = parse(&response) {
        return Ok(Some((prompt, response, Some(v))));
    }
    quality.parse_retries += 1;
    let retry_prompt = PromptPair {
        system: prompt.system,
        user: format!("{}\n\n{}", prompt.user, clarification(expected)),
    };
    let retry_messages = [
        ChatMessage::system(retry_prompt.system.clone()),
        ChatMessage::user(retry_prompt.user.clone()),
    ];
    let retry_response = match backend.complete(&ctx, &retry_messages) {
        Ok(r) => r,
        Err(e) => {
            log::warn!("trial {agent_id} round {round} dropped on retry: {e}");
            quality.excluded_trials += 1;
            return Ok(None);
        }
    };
    let parsed = parse(&retry_response).ok();
    if parsed.is_none() {
        quality.null_observations += 1;
    }
    Ok(Some((retry_prompt, retry_response, parsed)))
}

/// An experiment's outputs: the metric table plus the raw trial rows that
/// become the transcripts JSONL.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub result: ExperimentResult,
    pub rows: Vec<crate::debate::TranscriptRow>,
}
