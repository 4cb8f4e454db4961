//! Peer-pressure protocol: a lone target holding the correct/aligned belief
//! debates a peer group arguing the shared wrong/misaligned one; the change
//! rate is regressed against group size.

use std::sync::Arc;

use crate::backend::ChatBackend;
use crate::dataset::{make_belief, AporiaSample, MmluSample, SampleRef, Stance};
use crate::debate::{
    extract_change, run_debate, transcript_rows, Agent, AgentRole, DebateConfig, DebateIds,
    DebateTask, DebateTranscript,
};
use crate::error::{Error, Result};
use crate::model::{belief_change_rate, BeliefBox, BeliefStrength, OpenMindedness};
use crate::stats::f_test_univariate;

use super::{derive_seed, run_jobs, DataQuality, ExperimentResult, ResultRow, RunOutput};

/// The dataset a peer-pressure run debates.
#[derive(Debug, Clone)]
pub enum PeerDataset {
    Mmlu(Vec<MmluSample>),
    Aporia(Vec<AporiaSample>),
}

impl PeerDataset {
    pub fn name(&self) -> &'static str {
        match self {
            PeerDataset::Mmlu(_) => "mmlu",
            PeerDataset::Aporia(_) => "aporia",
        }
    }

    fn len(&self) -> usize {
        match self {
            PeerDataset::Mmlu(v) => v.len(),
            PeerDataset::Aporia(v) => v.len(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PeerPressureOptions {
    pub group_sizes: Vec<usize>,
    /// Every agent's open-mindedness level.
    pub openness_level: u8,
    /// Every agent's initial belief strength.
    pub initial_strength: u8,
}

impl Default for PeerPressureOptions {
    fn default() -> Self {
        Self {
            group_sizes: vec![1, 2, 3, 4],
            openness_level: 5,
            initial_strength: 5,
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn build_debate(
    backend: &Arc<dyn ChatBackend>,
    dataset: &PeerDataset,
    sample_idx: usize,
    group_size: usize,
    run: usize,
    options: &PeerPressureOptions,
    seed: u64,
) -> Result<(Vec<Agent>, DebateTask, DebateIds)> {
    let sample_id = format!("s{sample_idx:03}");
    let strength = BeliefStrength::new(options.initial_strength)?;
    let openness = OpenMindedness::new(options.openness_level)?;

    let (task, peer_belief, target_belief) = match dataset {
        PeerDataset::Mmlu(samples) => {
            let sample = &samples[sample_idx];
            let sample_ref = SampleRef::Mmlu(sample);
            (
                DebateTask::PeerPressureMmlu {
                    sample: sample.clone(),
                },
                // one seed per debate: the whole peer group shares one wrong letter
                make_belief(sample_ref, &sample_id, Stance::Incorrect, strength, seed)?,
                make_belief(sample_ref, &sample_id, Stance::Correct, strength, seed)?,
            )
        }
        PeerDataset::Aporia(samples) => {
            let sample = &samples[sample_idx];
            let sample_ref = SampleRef::Aporia(sample);
            (
                DebateTask::PeerPressureAporia {
                    sample: sample.clone(),
                },
                make_belief(sample_ref, &sample_id, Stance::Misaligned, strength, seed)?,
                make_belief(sample_ref, &sample_id, Stance::Aligned, strength, seed)?,
            )
        }
    };

    let mut agents = Vec::with_capacity(group_size + 1);
    for i in 1..=group_size {
        let mut belief_box = BeliefBox::new();
        belief_box.set(peer_belief.0.clone(), peer_belief.1);
        agents.push(Agent {
            name: format!("Agent {i}"),
            belief_box,
            openness,
            role: AgentRole::Peer,
            backend: Arc::clone(backend),
        });
    }
    let mut belief_box = BeliefBox::new();
    belief_box.set(target_belief.0, target_belief.1);
    agents.push(Agent {
        name: format!("Agent {}", group_size + 1),
        belief_box,
        openness,
        role: AgentRole::Target,
        backend: Arc::clone(backend),
    });

    let ids = DebateIds {
        debate_id: format!("peer-{}-g{group_size}-{sample_id}-r{run}", dataset.name()),
        sample_id,
        run_index: run,
    };
    Ok((agents, task, ids))
}

/// Run the group-size x sample x run matrix; report the change rate per
/// group size and the pooled Pearson/F-test statistics when defined.
pub fn run_peer_pressure(
    backend: &Arc<dyn ChatBackend>,
    dataset: &PeerDataset,
    options: &PeerPressureOptions,
    config: &DebateConfig,
    concurrency: usize,
) -> Result<RunOutput> {
    if dataset.len() == 0 {
        return Err(Error::Config(
            "peer-pressure run over an empty dataset".into(),
        ));
    }
    if options.group_sizes.is_empty() {
        return Err(Error::Config("no peer group sizes selected".into()));
    }
    if options.group_sizes.contains(&0) {
        return Err(Error::Config("peer group size must be at least 1".into()));
    }

    let mut jobs: Vec<Box<dyn FnOnce() -> Result<DebateTranscript> + Send>> = Vec::new();
    let mut keys = Vec::new();
    for &group_size in &options.group_sizes {
        for sample_idx in 0..dataset.len() {
            for run in 0..config.runs {
                let seed = derive_seed(
                    config.seed,
                    &[group_size as u64, sample_idx as u64, run as u64],
                );
                let (agents, task, ids) =
                    build_debate(backend, dataset, sample_idx, group_size, run, options, seed)?;
                let config = config.clone();
                keys.push(group_size);
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
    let mut pooled: Vec<(f64, f64)> = Vec::new();

    for &group_size in &options.group_sizes {
        let mut outcomes = Vec::new();
        for (key, transcript) in keys.iter().zip(&transcripts) {
            if *key != group_size {
                continue;
            }
            quality.absorb_transcript(transcript);
            rows.extend(transcript_rows(transcript));
            let target = format!("Agent {}", group_size + 1);
            if !transcript.complete || transcript.imputations(&target) > 1 {
                quality.excluded_trials += 1;
                continue;
            }
            match extract_change(transcript) {
                Ok(changed) => {
                    outcomes.push(changed);
                    pooled.push((group_size as f64, if changed { 1.0 } else { 0.0 }));
                }
                Err(e) => {
                    log::warn!("debate {} excluded: {e}", transcript.ids.debate_id);
                    quality.excluded_trials += 1;
                }
            }
        }
        let rate = if outcomes.is_empty() {
            f64::NAN
        } else {
            belief_change_rate(&outcomes)?
        };
        result_rows.push(ResultRow {
            condition: format!("group_size={group_size}"),
            n: outcomes.len(),
            values: vec![rate],
        });
    }

    // pooled per-debate (group size, changed) regression
    let x: Vec<f64> = pooled.iter().map(|(a, _)| *a).collect();
    let y: Vec<f64> = pooled.iter().map(|(_, b)| *b).collect();
    let (regression, regression_note) = match f_test_univariate(&x, &y) {
        Ok(report) => (Some(report), None),
        Err(e) => (None, Some(format!("statistics omitted: {e}"))),
    };

    Ok(RunOutput {
        result: ExperimentResult {
            experiment: "peer-pressure".into(),
            dataset: Some(dataset.name().into()),
            metric_names: vec!["change_rate".into()],
            rows: result_rows,
            regression,
            regression_note,
            quality,
        },
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::ScriptedBackend;
    use crate::dataset::Choice;

    fn aporia_samples(n: usize) -> Vec<AporiaSample> {
        (0..n)
            .map(|i| AporiaSample {
                scenario: format!("scenario {i}"),
                profession_description: "profession".into(),
                rule: "rule".into(),
                aligned_belief: "aligned".into(),
                misaligned_belief: "misaligned".into(),
                winner_argument: "winner".into(),
                loser_argument: "loser".into(),
            })
            .collect()
    }

    fn group_size_of(agent: &str) -> usize {
        agent
            .split("-g")
            .nth(1)
            .and_then(|s| s.split('-').next())
            .and_then(|s| s.parse().ok())
            .unwrap()
    }

    fn is_target(agent: &str, size: usize) -> bool {
        agent.ends_with(&format!("/Agent {}", size + 1))
    }

    #[test]
    fn change_iff_group_size_at_least_three() {
        let backend: Arc<dyn ChatBackend> = Arc::new(ScriptedBackend::from_rule(|agent, _| {
            let size = group_size_of(agent);
            Some(if is_target(agent, size) {
                if size >= 3 {
                    "I now endorse B. Confidence 2.".into()
                } else {
                    "I stay with A. Confidence 5.".into()
                }
            } else {
                "We argue for B. Confidence 5.".into()
            })
        }));
        let out = run_peer_pressure(
            &backend,
            &PeerDataset::Aporia(aporia_samples(3)),
            &PeerPressureOptions::default(),
            &DebateConfig {
                runs: 2,
                ..DebateConfig::default()
            },
            2,
        )
        .unwrap();

        let rates: Vec<f64> = out.result.rows.iter().map(|r| r.values[0]).collect();
        assert_eq!(rates, vec![0.0, 0.0, 1.0, 1.0]);
        for row in &out.result.rows {
            assert_eq!(row.n, 6);
            // reported rates are exact multiples of 1/n
            let scaled = row.values[0] * row.n as f64;
            assert!((scaled - scaled.round()).abs() < 1e-9);
        }
        let report = out.result.regression.expect("statistics defined");
        assert!(report.r > 0.0);
        assert!(report.p < 0.05);
    }

    #[test]
    fn all_unchanged_omits_statistics_with_reason() {
        let backend: Arc<dyn ChatBackend> = Arc::new(ScriptedBackend::from_rule(|_, _| {
            Some("I stay with A. Confidence 5.".into())
        }));
        let out = run_peer_pressure(
            &backend,
            &PeerDataset::Aporia(aporia_samples(2)),
            &PeerPressureOptions {
                group_sizes: vec![1, 2],
                ..PeerPressureOptions::default()
            },
            &DebateConfig {
                runs: 1,
                ..DebateConfig::default()
            },
            1,
        )
        .unwrap();
        assert!(out.result.regression.is_none());
        assert!(out
            .result
            .regression_note
            .as_deref()
            .unwrap()
            .contains("statistics omitted"));
        assert!(out.result.rows.iter().all(|r| r.values[0] == 0.0));
    }

    #[test]
    fn mmlu_variant_counts_letter_flips() {
        let mmlu: Vec<MmluSample> = (0..2)
            .map(|i| MmluSample {
                subject: "subject".into(),
                question: format!("question {i}"),
                choices: ["w".into(), "x".into(), "y".into(), "z".into()],
                correct: Choice::B,
            })
            .collect();
        // target flips to D in the final round only
        let backend: Arc<dyn ChatBackend> = Arc::new(ScriptedBackend::from_rule(|agent, round| {
            let size = group_size_of(agent);
            Some(if is_target(agent, size) && round == 4 {
                "Convinced: (D). Confidence 2.".into()
            } else if is_target(agent, size) {
                "Still (B). Confidence 4.".into()
            } else {
                "We say (C). Confidence 5.".into()
            })
        }));
        let out = run_peer_pressure(
            &backend,
            &PeerDataset::Mmlu(mmlu),
            &PeerPressureOptions {
                group_sizes: vec![1, 3],
                ..PeerPressureOptions::default()
            },
            &DebateConfig {
                runs: 1,
                ..DebateConfig::default()
            },
            1,
        )
        .unwrap();
        assert!(out.result.rows.iter().all(|r| r.values[0] == 1.0));
        // every peer in one debate argues the same seeded wrong letter
        let mut per_debate: std::collections::BTreeMap<String, Vec<String>> = Default::default();
        for r in out.rows.iter().filter(|r| {
            r.round == 1
                && r.reassessed_strength.is_none()
                && r.speaker != "Agent 2"
                && r.speaker != "Agent 4"
        }) {
            let letter = r
                .prompt_user
                .split("The answer is ")
                .nth(1)
                .and_then(|s| s.chars().next())
                .unwrap()
                .to_string();
            per_debate
                .entry(r.debate_id.clone())
                .or_default()
                .push(letter);
        }
        for (debate, letters) in per_debate {
            assert!(
                letters.windows(2).all(|w| w[0] == w[1]),
                "{debate}: {letters:?}"
            );
            assert_ne!(letters[0], "B", "{debate}: peers hold the keyed answer");
        }
    }

    #[test]
    fn zero_group_size_rejected() {
        let backend: Arc<dyn ChatBackend> =
            Arc::new(ScriptedBackend::from_rule(|_, _| Some("A. 5".into())));
        let err = run_peer_pressure(
            &backend,
            &PeerDataset::Aporia(aporia_samples(1)),
            &PeerPressureOptions {
                group_sizes: vec![0],
                ..PeerPressureOptions::default()
            },
            &DebateConfig::default(),
            1,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }
}
