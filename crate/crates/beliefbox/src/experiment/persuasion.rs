//! Persuasion protocol: a level-1 persuader pushes the aligned belief at a
//! level-5 target initialized with the misaligned belief at strength 5; the
//! metric is the target's mean belief score per persuader condition.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::backend::ChatBackend;
use crate::dataset::{make_belief, AporiaSample, SampleRef, Stance};
use crate::debate::{
    run_debate, transcript_rows, Agent, AgentRole, DebateConfig, DebateIds, DebateTask,
    DebateTranscript,
};
use crate::error::{Error, Result};
use crate::model::{mean_belief_score, BeliefBox, BeliefStrength, OpenMindedness};

use super::{run_jobs, DataQuality, ExperimentResult, ResultRow, RunOutput};

/// The persuading agent's belief-box condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PersuasionCondition {
    /// Aligned belief at strength 1.
    P1,
    /// Aligned belief at strength 5.
    P5,
    /// Misaligned belief at strength 1.
    NotP1,
    /// Misaligned belief at strength 5.
    NotP5,
    /// Empty belief box.
    Neutral,
}

impl PersuasionCondition {
    pub const ALL: [PersuasionCondition; 5] = [
        PersuasionCondition::P1,
        PersuasionCondition::P5,
        PersuasionCondition::NotP1,
        PersuasionCondition::NotP5,
        PersuasionCondition::Neutral,
    ];

    pub fn label(self) -> &'static str {
        match self {
            PersuasionCondition::P1 => "p=1",
            PersuasionCondition::P5 => "p=5",
            PersuasionCondition::NotP1 => "not_p=1",
            PersuasionCondition::NotP5 => "not_p=5",
            PersuasionCondition::Neutral => "neutral",
        }
    }

    pub fn parse_label(label: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.label() == label)
            .ok_or_else(|| Error::Config(format!("unknown persuasion condition {label:?}")))
    }

    fn stance_and_strength(self) -> Option<(Stance, u8)> {
        match self {
            PersuasionCondition::P1 => Some((Stance::Aligned, 1)),
            PersuasionCondition::P5 => Some((Stance::Aligned, 5)),
            PersuasionCondition::NotP1 => Some((Stance::Misaligned, 1)),
            PersuasionCondition::NotP5 => Some((Stance::Misaligned, 5)),
            PersuasionCondition::Neutral => None,
        }
    }
}

fn build_debate(
    backend: &Arc<dyn ChatBackend>,
    sample: &AporiaSample,
    sample_idx: usize,
    condition: PersuasionCondition,
    run: usize,
) -> Result<(Vec<Agent>, DebateIds)> {
    let sample_id = format!("s{sample_idx:03}");
    let mut persuader_box = BeliefBox::new();
    if let Some((stance, strength)) = condition.stance_and_strength() {
        let (proposition, strength) = make_belief(
            SampleRef::Aporia(sample),
            &sample_id,
            stance,
            BeliefStrength::new(strength)?,
            0,
        )?;
        persuader_box.set(proposition, strength);
    }
    let mut target_box = BeliefBox::new();
    let (proposition, strength) = make_belief(
        SampleRef::Aporia(sample),
        &sample_id,
        Stance::Misaligned,
        BeliefStrength::new(5)?,
        0,
    )?;
    target_box.set(proposition, strength);

    let agents = vec![
        Agent {
            name: "Persuading agent".into(),
            belief_box: persuader_box,
            openness: OpenMindedness::new(1)?,
            role: AgentRole::Persuader,
            backend: Arc::clone(backend),
        },
        Agent {
            name: "Target agent".into(),
            belief_box: target_box,
            openness: OpenMindedness::new(5)?,
            role: AgentRole::Target,
            backend: Arc::clone(backend),
        },
    ];
    let ids = DebateIds {
        debate_id: format!("persuasion-{}-{sample_id}-r{run}", condition.label()),
        sample_id,
        run_index: run,
    };
    Ok((agents, ids))
}

/// Run the full condition x sample x run matrix and report the target's mean
/// belief score per condition (rounds, then samples, then runs).
pub fn run_persuasion(
    backend: &Arc<dyn ChatBackend>,
    samples: &[AporiaSample],
    conditions: &[PersuasionCondition],
    config: &DebateConfig,
    concurrency: usize,
) -> Result<RunOutput> {
    if samples.is_empty() {
        return Err(Error::Config("persuasion run over an empty dataset".into()));
    }
    if conditions.is_empty() {
        return Err(Error::Config("no persuasion conditions selected".into()));
    }

    // fan out one job per (condition, sample, run); merge in job order
    let mut jobs: Vec<Box<dyn FnOnce() -> Result<DebateTranscript> + Send>> = Vec::new();
    let mut keys = Vec::new();
    for &condition in conditions {
        for (sample_idx, sample) in samples.iter().enumerate() {
            for run in 0..config.runs {
                let (agents, ids) = build_debate(backend, sample, sample_idx, condition, run)?;
                let task = DebateTask::Persuasion {
                    sample: sample.clone(),
                };
                let config = config.clone();
                keys.push((condition, run));
                jobs.push(Box::new(move || run_debate(agents, &task, ids, &config)));
            }
        }
    }
    let transcripts: Vec<DebateTranscript> = run_jobs(jobs, concurrency)
        .into_iter()
        .collect::<Result<_>>()?;

    let mut quality = DataQuality::default();
    let mut rows = Vec::new();
    let mut result_rows = Vec::new();

    for &condition in conditions {
        // per-run trajectories of included debates
        let mut per_run: Vec<Vec<Vec<crate::model::BeliefStrength>>> =
            vec![Vec::new(); config.runs];
        let mut included = 0usize;
        for (key, transcript) in keys.iter().zip(&transcripts) {
            if key.0 != condition {
                continue;
            }
            quality.absorb_transcript(transcript);
            rows.extend(transcript_rows(transcript));
            let trajectory = crate::debate::trajectory(transcript, "Target agent");
            let usable = transcript.complete
                && transcript.imputations("Target agent") <= 1
                && trajectory.len() == config.rounds;
            if usable {
                per_run[key.1].push(trajectory);
                included += 1;
            } else {
                quality.excluded_trials += 1;
            }
        }
        let run_means: Vec<f64> = per_run
            .iter()
            .filter(|t| !t.is_empty())
            .map(|trajectories| mean_belief_score(trajectories))
            .collect::<Result<_>>()?;
        let value = if run_means.is_empty() {
            f64::NAN
        } else {
            run_means.iter().sum::<f64>() / run_means.len() as f64
        };
        result_rows.push(ResultRow {
            condition: condition.label().to_string(),
            n: included,
            values: vec![value],
        });
    }

    Ok(RunOutput {
        result: ExperimentResult {
            experiment: "persuasion".into(),
            dataset: Some("aporia".into()),
            metric_names: vec!["mean_belief_score".into()],
            rows: result_rows,
            regression: None,
            regression_note: None,
            quality,
        },
        rows,
    })
}
