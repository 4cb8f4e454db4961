//! Open-mindedness validation: single-shot counter-argument trials over the
//! Aporia samples, measuring the yes/no belief-change rate per level and
//! direction.

use std::sync::Arc;

use crate::backend::ChatBackend;
use crate::dataset::AporiaSample;
use crate::debate::{AgentRole, TranscriptRow};
use crate::error::{Error, Result};
use crate::model::belief_change_rate;
use crate::prompts::{parse_yes_no, render_belief_change, Direction, ExpectedAnswer};

use super::{ask_single, DataQuality, ExperimentResult, ResultRow, RunOutput};

/// Ask every (level, direction, sample, run) trial whether the agent changes
/// its stance after the counter-argument; report the change rate per cell.
pub fn run_openmindedness(
    backend: &Arc<dyn ChatBackend>,
    samples: &[AporiaSample],
    levels: &[u8],
    directions: &[Direction],
    runs: usize,
) -> Result<RunOutput> {
    if samples.is_empty() {
        return Err(Error::Config(
            "open-mindedness run over an empty dataset".into(),
        ));
    }
    if levels.is_empty() || directions.is_empty() || runs == 0 {
        return Err(Error::Config(
            "open-mindedness run needs levels, directions, and at least one run".into(),
        ));
    }
    if let Some(bad) = levels.iter().find(|l| !(1..=5).contains(*l)) {
        return Err(Error::Config(format!("level {bad} outside {{1..5}}")));
    }

    let mut quality = DataQuality::default();
    let mut rows = Vec::new();
    let mut result_rows = Vec::new();

    for &level in levels {
        for &direction in directions {
            let mut outcomes: Vec<bool> = Vec::new();
            for run in 0..runs {
                let agent_id = format!("openmind-level{level}-{}-run{run}", direction.label());
                for (idx, sample) in samples.iter().enumerate() {
                    let prompt = render_belief_change(sample, level, direction)?;
                    let outcome = ask_single(
                        backend,
                        &agent_id,
                        idx + 1,
                        prompt,
                        ExpectedAnswer::YesNo,
                        parse_yes_no,
                        &mut quality,
                    )?;
                    let Some((prompt, response, parsed)) = outcome else {
                        continue;
                    };
                    rows.push(TranscriptRow {
                        debate_id: format!("openmind-level{level}-{}", direction.label()),
                        sample_id: format!("s{idx:03}"),
                        run,
                        round: 1,
                        speaker: agent_id.clone(),
                        role: AgentRole::Target,
                        prompt_system: prompt.system,
                        prompt_user: prompt.user,
                        response,
                        parsed_choice: None,
                        reassessed_strength: None,
                        imputed: None,
                    });
                    if let Some(changed) = parsed {
                        outcomes.push(changed);
                    }
                }
            }
            let rate = if outcomes.is_empty() {
                f64::NAN
            } else {
                belief_change_rate(&outcomes)?
            };
            result_rows.push(ResultRow {
                condition: format!("level={level},direction={}", direction.label()),
                n: outcomes.len(),
                values: vec![rate],
            });
        }
    }

    Ok(RunOutput {
        result: ExperimentResult {
            experiment: "open-mindedness".into(),
            dataset: Some("aporia".into()),
            metric_names: vec!["change_rate".into()],
            rows: result_rows,
            regression: None,
            regression_note: None,
            quality,
        },
        rows,
    })
}
