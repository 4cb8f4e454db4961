//! Debate orchestration: speaking order, history accumulation, per-round
//! belief reassessment, and final verdict extraction.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::backend::{CallContext, ChatBackend, ChatMessage};
use crate::dataset::{AporiaSample, Choice, MmluSample, SampleRef};
use crate::error::{Error, Result};
use crate::model::{BeliefBox, BeliefEntry, BeliefStrength, OpenMindedness, Polarity};
use crate::prompts::{
    self, clarification, parse_choice, parse_likert, ExpectedAnswer, HistoryLine, PersuasionRole,
    PromptPair,
};

/// Role an agent plays in a debate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AgentRole {
    Target,
    Persuader,
    Peer,
}

/// One debating agent: persona plus backend binding. Debates are homogeneous
/// setups, so every agent normally shares one backend handle.
#[derive(Clone)]
pub struct Agent {
    pub name: String,
    pub belief_box: BeliefBox,
    pub openness: OpenMindedness,
    pub role: AgentRole,
    pub backend: Arc<dyn ChatBackend>,
}

/// Debate shape parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DebateConfig {
    pub rounds: usize,
    pub runs: usize,
    pub seed: u64,
    pub reassess_every_round: bool,
    pub max_sentences_persuasion: usize,
    pub max_sentences_peer: usize,
}

impl Default for DebateConfig {
    fn default() -> Self {
        Self {
            rounds: 4,
            runs: 5,
            seed: 0,
            reassess_every_round: true,
            max_sentences_persuasion: 10,
            max_sentences_peer: 5,
        }
    }
}

/// What is being debated, which also selects the prompt family.
#[derive(Debug, Clone)]
pub enum DebateTask {
    /// Persuader pushes the sample's aligned belief at the target.
    Persuasion {
        sample: AporiaSample,
    },
    PeerPressureMmlu {
        sample: MmluSample,
    },
    PeerPressureAporia {
        sample: AporiaSample,
    },
}

impl DebateTask {
    fn is_peer_pressure(&self) -> bool {
        !matches!(self, DebateTask::Persuasion { .. })
    }
}

/// Identifiers stamped onto a transcript.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DebateIds {
    pub debate_id: String,
    pub sample_id: String,
    pub run_index: usize,
}

/// One transcript entry: a speaking turn (no reassessed strength) or a
/// reassessment record (reassessed strength present, never a parsed choice).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Turn {
    pub round: usize,
    pub speaker: String,
    pub role: AgentRole,
    pub prompt: PromptPair,
    pub response: String,
    pub parsed_choice: Option<Choice>,
    pub reassessed_strength: Option<u8>,
    pub imputed: bool,
}

impl Turn {
    pub fn is_reassessment(&self) -> bool {
        self.reassessed_strength.is_some()
    }

    pub fn is_speech(&self) -> bool {
        self.reassessed_strength.is_none()
    }
}

/// Complete record of one debate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DebateTranscript {
    pub ids: DebateIds,
    pub rounds: usize,
    /// Agent name -> initially held belief (empty boxes are absent).
    pub initial_beliefs: BTreeMap<String, BeliefEntry>,
    /// Agent name -> the answer letter its initial belief endorses.
    pub initial_verdicts: BTreeMap<String, Choice>,
    pub turns: Vec<Turn>,
    /// Agent name -> parsed choice of its last speaking turn (peer pressure).
    pub final_verdicts: BTreeMap<String, Option<Choice>>,
    pub complete: bool,
    pub error: Option<String>,
    /// Responses that needed the single clarification retry.
    pub parse_retries: usize,
    /// Observations lost after the retry also failed.
    pub null_observations: usize,
}

impl DebateTranscript {
    /// Number of imputed reassessments for one agent.
    pub fn imputations(&self, agent: &str) -> usize {
        self.turns
            .iter()
            .filter(|t| t.speaker == agent && t.is_reassessment() && t.imputed)
            .count()
    }
}

fn speech_parse_target(task: &DebateTask) -> Option<ExpectedAnswer> {
    match task {
        DebateTask::Persuasion { .. } => None,
        DebateTask::PeerPressureMmlu { .. } => Some(ExpectedAnswer::Choice),
        DebateTask::PeerPressureAporia { .. } => Some(ExpectedAnswer::ChoiceAb),
    }
}

/// The answer letter a held belief endorses: its MMLU letter, or A/B for
/// aligned/misaligned Aporia beliefs.
fn initial_verdict(task: &DebateTask, entry: &BeliefEntry) -> Result<Choice> {
    match task {
        DebateTask::Persuasion { .. } | DebateTask::PeerPressureAporia { .. } => {
            Ok(match entry.proposition.polarity {
                Polarity::P => Choice::A,
                Polarity::NotP => Choice::B,
            })
        }
        DebateTask::PeerPressureMmlu { .. } => entry
            .proposition
            .id
            .rsplit_once("answer-")
            .and_then(|(_, letter)| Choice::parse(letter))
            .ok_or_else(|| {
                Error::Domain(format!(
                    "mmlu belief id {:?} does not encode an answer letter",
                    entry.proposition.id
                ))
            }),
    }
}

struct LiveAgent {
    agent: Agent,
    held_id: Option<String>,
}

fn render_speech(
    task: &DebateTask,
    agent: &Agent,
    history: &[HistoryLine],
    config: &DebateConfig,
) -> Result<PromptPair> {
    match task {
        DebateTask::Persuasion { sample } => {
            let (role, target_belief) = match agent.role {
                AgentRole::Target => (PersuasionRole::Target, None),
                _ => (
                    PersuasionRole::Persuader,
                    Some(sample.aligned_belief.as_str()),
                ),
            };
            prompts::render_persuasion(
                role,
                sample,
                &agent.name,
                &agent.belief_box,
                agent.openness.level(),
                history,
                target_belief,
                config.max_sentences_persuasion,
            )
        }
        DebateTask::PeerPressureMmlu { sample } => prompts::render_peer_pressure(
            SampleRef::Mmlu(sample),
            &agent.name,
            &agent.belief_box,
            agent.openness.level(),
            history,
            config.max_sentences_peer,
        ),
        DebateTask::PeerPressureAporia { sample } => prompts::render_peer_pressure(
            SampleRef::Aporia(sample),
            &agent.name,
            &agent.belief_box,
            agent.openness.level(),
            history,
            config.max_sentences_peer,
        ),
    }
}

/// Backend call identity: debates qualify the agent name with the debate id
/// so scripted per-agent queues stay independent across concurrent debates.
fn complete_prompt(
    agent: &Agent,
    debate_id: &str,
    round: usize,
    prompt: &PromptPair,
) -> Result<String> {
    let messages = [
        ChatMessage::system(prompt.system.clone()),
        ChatMessage::user(prompt.user.clone()),
    ];
    let qualified = format!("{debate_id}/{}", agent.name);
    agent.backend.complete(
        &CallContext {
            agent: &qualified,
            round,
        },
        &messages,
    )
}

/// Ask once, and on a parse failure re-ask once with a clarification line
/// appended to the user prompt. Returns the prompt/response actually kept
/// plus the parsed value, if any.
fn ask_parsed<T>(
    agent: &Agent,
    debate_id: &str,
    round: usize,
    prompt: PromptPair,
    expected: ExpectedAnswer,
    parse: impl Fn(&str) -> Result<T>,
    retries: &mut usize,
) -> Result<(PromptPair, String, Option<T>)> {
    let response = complete_prompt(agent, debate_id, round, &prompt)?;
    match parse(&response) {
        Ok(v) => Ok((prompt, response, Some(v))),
        Err(_) => {
            *retries += 1;
            let retry_prompt = PromptPair {
                system: prompt.system.clone(),
                user: format!("{}\n\n{}", prompt.user, clarification(expected)),
            };
            let retry_response = complete_prompt(agent, debate_id, round, &retry_prompt)?;
            let parsed = parse(&retry_response).ok();
            Ok((retry_prompt, retry_response, parsed))
        }
    }
}

/// Run one debate to completion. Non-target agents speak first each round in
/// their given order, the target last; every agent sees the full prior
/// history. When enabled, every agent holding a belief reassesses its
/// strength at the end of every round. A backend failure aborts the debate
/// and marks the transcript incomplete.
pub fn run_debate(
    agents: Vec<Agent>,
    task: &DebateTask,
    ids: DebateIds,
    config: &DebateConfig,
) -> Result<DebateTranscript> {
    if agents.len() < 2 {
        return Err(Error::Domain("a debate needs at least 2 agents".into()));
    }
    let mut names = std::collections::BTreeSet::new();
    for a in &agents {
        if !names.insert(a.name.clone()) {
            return Err(Error::Domain(format!("duplicate agent name {:?}", a.name)));
        }
    }
    let target_count = agents
        .iter()
        .filter(|a| a.role == AgentRole::Target)
        .count();
    if target_count != 1 {
        return Err(Error::Domain(format!(
            "a debate needs exactly one target agent, got {target_count}"
        )));
    }

    // speaking order: persuaders/peers in given order, target last
    let mut order: Vec<Agent> = agents
        .iter()
        .filter(|a| a.role != AgentRole::Target)
        .cloned()
        .collect();
    order.extend(
        agents
            .iter()
            .filter(|a| a.role == AgentRole::Target)
            .cloned(),
    );

    let mut initial_beliefs = BTreeMap::new();
    let mut initial_verdicts = BTreeMap::new();
    let mut live: Vec<LiveAgent> = Vec::with_capacity(order.len());
    for agent in order {
        let held = agent.belief_box.entries().next().cloned();
        if let Some(entry) = &held {
            initial_verdicts.insert(agent.name.clone(), initial_verdict(task, entry)?);
            initial_beliefs.insert(agent.name.clone(), entry.clone());
        }
        live.push(LiveAgent {
            held_id: held.map(|e| e.proposition.id),
            agent,
        });
    }

    let mut transcript = DebateTranscript {
        ids,
        rounds: config.rounds,
        initial_beliefs,
        initial_verdicts,
        turns: Vec::new(),
        final_verdicts: BTreeMap::new(),
        complete: false,
        error: None,
        parse_retries: 0,
        null_observations: 0,
    };

    let mut history: Vec<HistoryLine> = Vec::new();
    let parse_expectation = speech_parse_target(task);
    let debate_id = transcript.ids.debate_id.clone();

    for round in 1..=config.rounds {
        // speaking phase
        for live_agent in &live {
            let agent = &live_agent.agent;
            let prompt = render_speech(task, agent, &history, config)?;
            let (prompt, response, parsed_choice) = match parse_expectation {
                Some(expected) => {
                    let result = ask_parsed(
                        agent,
                        &debate_id,
                        round,
                        prompt,
                        expected,
                        parse_choice,
                        &mut transcript.parse_retries,
                    );
                    match result {
                        Ok((p, r, parsed)) => {
                            if parsed.is_none() {
                                transcript.null_observations += 1;
                            }
                            (p, r, parsed)
                        }
                        Err(e) => return Ok(abort(transcript, e)),
                    }
                }
                None => match complete_prompt(agent, &debate_id, round, &prompt) {
                    Ok(response) => (prompt, response, None),
                    Err(e) => return Ok(abort(transcript, e)),
                },
            };
            history.push(HistoryLine {
                speaker: agent.name.clone(),
                text: response.clone(),
            });
            transcript.turns.push(Turn {
                round,
                speaker: agent.name.clone(),
                role: agent.role,
                prompt,
                response,
                parsed_choice,
                reassessed_strength: None,
                imputed: false,
            });
        }

        // reassessment phase
        if config.reassess_every_round {
            let statement = statement_window(&history);
            for live_agent in live.iter_mut() {
                let Some(held_id) = live_agent.held_id.clone() else {
                    continue;
                };
                let agent = &live_agent.agent;
                let prev = agent.belief_box.strength_of(&held_id);
                if prev.is_absent() {
                    continue;
                }
                let prompt = match prompts::render_reassessment(&statement, prev) {
                    Ok(p) => p,
                    Err(e) => return Ok(abort(transcript, e)),
                };
                let result = ask_parsed(
                    agent,
                    &debate_id,
                    round,
                    prompt,
                    ExpectedAnswer::Likert,
                    parse_likert,
                    &mut transcript.parse_retries,
                );
                let (prompt, response, parsed) = match result {
                    Ok(v) => v,
                    Err(e) => return Ok(abort(transcript, e)),
                };
                let (strength, imputed) = match parsed {
                    Some(v) => (v, false),
                    None => {
                        transcript.null_observations += 1;
                        (prev.value(), true)
                    }
                };
                let agent = &mut live_agent.agent;
                let entry = agent
                    .belief_box
                    .get(&held_id)
                    .expect("held belief present")
                    .clone();
                agent.belief_box.set(
                    entry.proposition,
                    BeliefStrength::new(strength).expect("likert parse is 1-5"),
                );
                transcript.turns.push(Turn {
                    round,
                    speaker: agent.name.clone(),
                    role: agent.role,
                    prompt,
                    response,
                    parsed_choice: None,
                    reassessed_strength: Some(strength),
                    imputed,
                });
            }
        }
    }

    if task.is_peer_pressure() {
        for live_agent in &live {
            let name = &live_agent.agent.name;
            let verdict = transcript
                .turns
                .iter()
                .rev()
                .find(|t| t.is_speech() && &t.speaker == name)
                .and_then(|t| t.parsed_choice);
            transcript.final_verdicts.insert(name.clone(), verdict);
        }
    }

    transcript.complete = true;
    Ok(transcript)
}

fn abort(mut transcript: DebateTranscript, error: Error) -> DebateTranscript {
    log::warn!("debate {} aborted: {error}", transcript.ids.debate_id);
    transcript.complete = false;
    transcript.error = Some(error.to_string());
    transcript
}

/// The debate-so-far text shown as the reassessment "statement".
fn statement_window(history: &[HistoryLine]) -> String {
    history
        .iter()
        .map(|l| format!("{}: {}", l.speaker, l.text))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Whether the target changed its belief: its final endorsed letter differs
/// from the initial one, or its held strength reached 0. An optional strength
/// threshold additionally counts trajectories that ended at or below it.
pub fn extract_change_with_threshold(
    transcript: &DebateTranscript,
    threshold: Option<u8>,
) -> Result<bool> {
    if !transcript.complete {
        return Err(Error::Domain(format!(
            "transcript {} is incomplete",
            transcript.ids.debate_id
        )));
    }
    let target = transcript
        .turns
        .iter()
        .find(|t| t.role == AgentRole::Target)
        .map(|t| t.speaker.clone())
        .ok_or_else(|| Error::Domain("transcript has no target turns".into()))?;
    let initial = transcript
        .initial_verdicts
        .get(&target)
        .ok_or_else(|| Error::Domain("target agent held no initial belief".into()))?;
    let final_verdict = transcript
        .final_verdicts
        .get(&target)
        .copied()
        .flatten()
        .ok_or_else(|| Error::Parse("missing final verdict for target".into()))?;

    let trajectory = trajectory(transcript, &target);
    let deleted = trajectory.iter().any(|s| s.is_absent());
    let below_threshold = match threshold {
        Some(t) => trajectory.last().is_some_and(|s| s.value() <= t),
        None => false,
    };
    Ok(final_verdict != *initial || deleted || below_threshold)
}

/// The stance-flip change rule used by the experiments.
pub fn extract_change(transcript: &DebateTranscript) -> Result<bool> {
    extract_change_with_threshold(transcript, None)
}

/// Per-round reassessed strengths of the agent's initially held belief.
pub fn trajectory(transcript: &DebateTranscript, agent: &str) -> Vec<BeliefStrength> {
    transcript
        .turns
        .iter()
        .filter(|t| t.speaker == agent && t.is_reassessment())
        .filter_map(|t| t.reassessed_strength)
        .map(|v| BeliefStrength::new(v).expect("recorded strengths are 0-5"))
        .collect()
}

/// Flat JSONL row for transcript persistence, one line per turn.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TranscriptRow {
    pub debate_id: String,
    pub sample_id: String,
    pub run: usize,
    pub round: usize,
    pub speaker: String,
    pub role: AgentRole,
    pub prompt_system: String,
    pub prompt_user: String,
    pub response: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub parsed_choice: Option<Choice>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub reassessed_strength: Option<u8>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub imputed: Option<bool>,
}

/// The transcript's turns as flat persistence rows.
pub fn transcript_rows(transcript: &DebateTranscript) -> Vec<TranscriptRow> {
    transcript
        .turns
        .iter()
        .map(|turn| TranscriptRow {
            debate_id: transcript.ids.debate_id.clone(),
            sample_id: transcript.ids.sample_id.clone(),
            run: transcript.ids.run_index,
            round: turn.round,
            speaker: turn.speaker.clone(),
            role: turn.role,
            prompt_system: turn.prompt.system.clone(),
            prompt_user: turn.prompt.user.clone(),
            response: turn.response.clone(),
            parsed_choice: turn.parsed_choice,
            reassessed_strength: turn.reassessed_strength,
            imputed: turn.is_reassessment().then_some(turn.imputed),
        })
        .collect()
}

/// Serialize a transcript to JSON Lines (one line per turn).
pub fn transcript_to_jsonl(transcript: &DebateTranscript) -> Result<String> {
    rows_to_jsonl(&transcript_rows(transcript))
}

/// Serialize persistence rows to JSON Lines.
pub fn rows_to_jsonl(rows: &[TranscriptRow]) -> Result<String> {
    let mut out = String::new();
    for row in rows {
        out.push_str(&serde_json::to_string(row)?);
        out.push('\n');
    }
    Ok(out)
}

/// Parse a JSONL transcript file's rows.
pub fn parse_jsonl(text: &str) -> Result<Vec<TranscriptRow>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(Into::into))
        .collect()
}
