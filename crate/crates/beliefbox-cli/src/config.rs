//! Run configuration: TOML file, environment interpolation for secrets, and
//! flag overrides. The resolved config is echoed into every output directory
//! so a run can be reproduced from it.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use beliefbox::backend::{BackendConfig, ChatBackend, HttpBackend, ScriptedBackend};
use beliefbox::experiment::{ConditionSpec, DatasetKind, ExperimentKind, PersuasionCondition};
use beliefbox::prompts::Direction;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: Option<String>,
    pub dataset: Option<PathBuf>,
    pub dataset_kind: Option<String>,
    #[serde(default)]
    pub seed: u64,
    /// Parallel-debate limit for live backends; scripted runs are serial.
    pub concurrency: Option<usize>,
    /// Draw this many samples from the dataset (seeded, without replacement).
    pub sample_count: Option<usize>,
    pub item_bank: Option<PathBuf>,
    pub backend: Option<BackendSection>,
    pub scripted: Option<ScriptSection>,
    #[serde(default)]
    pub conditions: ConditionsSection,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendSection {
    pub base_url: Option<String>,
    pub model: Option<String>,
    pub temperature: Option<f64>,
    pub timeout_secs: Option<u64>,
    pub max_retries: Option<u32>,
    /// May reference an environment variable as "${NAME}".
    pub api_key: Option<String>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptSection {
    /// JSON script file; merged with the inline fields below.
    pub path: Option<PathBuf>,
    pub default: Option<String>,
    pub queue: Option<Vec<String>>,
    pub per_agent: Option<BTreeMap<String, Vec<String>>>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConditionsSection {
    pub levels: Option<Vec<u8>>,
    pub directions: Option<Vec<String>>,
    pub persuasion: Option<Vec<String>>,
    pub group_sizes: Option<Vec<usize>>,
    pub rounds: Option<usize>,
    pub runs: Option<usize>,
}

/// Script file schema (JSON): any of default / queue / per_agent.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptFile {
    pub default: Option<String>,
    pub queue: Option<Vec<String>>,
    pub per_agent: Option<BTreeMap<String, Vec<String>>>,
}

impl RunConfig {
    pub fn load(path: &PathBuf) -> Result<Self> {
        let raw = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let config: RunConfig =
            toml::from_str(&raw).with_context(|| format!("parsing config {}", path.display()))?;
        Ok(config)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string_pretty(self)?)
    }

    pub fn experiment_kind(&self) -> Result<ExperimentKind> {
        match self.experiment.as_deref() {
            Some("bfi2") => Ok(ExperimentKind::Bfi2),
            Some("open-mindedness") => Ok(ExperimentKind::OpenMindedness),
            Some("persuasion") => Ok(ExperimentKind::Persuasion),
            Some("peer-pressure") => Ok(ExperimentKind::PeerPressure),
            Some(other) => bail!(
                "unknown experiment {other:?} (expected bfi2, open-mindedness, persuasion, or peer-pressure)"
            ),
            None => bail!("no experiment selected (use --experiment or the config file)"),
        }
    }

    pub fn dataset_kind(&self) -> Result<Option<DatasetKind>> {
        match self.dataset_kind.as_deref() {
            None => Ok(None),
            Some("mmlu") => Ok(Some(DatasetKind::Mmlu)),
            Some("aporia") => Ok(Some(DatasetKind::Aporia)),
            Some(other) => bail!("unknown dataset kind {other:?} (expected mmlu or aporia)"),
        }
    }

    /// Build the condition matrix: protocol defaults overridden by the
    /// config's `[conditions]` section.
    pub fn condition_spec(&self) -> Result<ConditionSpec> {
        let experiment = self.experiment_kind()?;
        let dataset = self.dataset_kind()?;
        let mut spec = ConditionSpec::default_for(experiment, dataset);
        spec.seed = self.seed;
        if let Some(levels) = &self.conditions.levels {
            spec.levels = levels.clone();
        }
        if let Some(directions) = &self.conditions.directions {
            spec.directions = directions
                .iter()
                .map(|d| parse_direction(d))
                .collect::<Result<_>>()?;
        }
        if let Some(conditions) = &self.conditions.persuasion {
            spec.conditions = conditions
                .iter()
                .map(|c| PersuasionCondition::parse_label(c).map_err(Into::into))
                .collect::<Result<_>>()?;
        }
        if let Some(sizes) = &self.conditions.group_sizes {
            spec.group_sizes = sizes.clone();
        }
        if let Some(runs) = self.conditions.runs {
            spec.runs = runs;
        }
        spec.validate()?;
        Ok(spec)
    }

    /// Instantiate the backend: scripted when a `[scripted]` section is
    /// present, live HTTP otherwise.
    pub fn build_backend(&self) -> Result<(Arc<dyn ChatBackend>, bool)> {
        if let Some(section) = &self.scripted {
            let mut script = ScriptFile {
                default: section.default.clone(),
                queue: section.queue.clone(),
                per_agent: section.per_agent.clone(),
            };
            if let Some(path) = &section.path {
                let raw = std::fs::read_to_string(path)
                    .with_context(|| format!("reading script {}", path.display()))?;
                let from_file: ScriptFile = serde_json::from_str(&raw)
                    .with_context(|| format!("parsing script {}", path.display()))?;
                script.default = script.default.or(from_file.default);
                script.queue = script.queue.or(from_file.queue);
                script.per_agent = script.per_agent.or(from_file.per_agent);
            }
            let backend = build_scripted(&script)?;
            return Ok((backend, true));
        }

        let section = self.backend.clone().unwrap_or_default();
        let mut config = BackendConfig::default();
        if let Some(url) = section.base_url {
            config.base_url = url;
        }
        if let Some(model) = section.model {
            config.model_name = model;
        }
        if let Some(t) = section.temperature {
            config.temperature = t;
        }
        if let Some(secs) = section.timeout_secs {
            config.timeout = Duration::from_secs(secs);
        }
        if let Some(retries) = section.max_retries {
            config.max_retries = retries;
        }
        config.api_key = match section.api_key {
            Some(raw) => Some(interpolate_env(&raw)?),
            None => std::env::var("BELIEFBOX_API_KEY").ok(),
        };
        Ok((Arc::new(HttpBackend::new(config)?), false))
    }
}

fn build_scripted(script: &ScriptFile) -> Result<Arc<dyn ChatBackend>> {
    let mut backend = match (&script.per_agent, &script.queue) {
        (Some(per_agent), _) => ScriptedBackend::per_agent(per_agent.clone()),
        (None, Some(queue)) => ScriptedBackend::from_queue(queue.clone()),
        (None, None) if script.default.is_some() => ScriptedBackend::from_queue(Vec::new()),
        (None, None) => {
            bail!("scripted backend needs at least one of per_agent, queue, or default")
        }
    };
    if let Some(default) = &script.default {
        backend = backend.with_default(default.clone());
    }
    Ok(Arc::new(backend))
}

pub fn parse_direction(label: &str) -> Result<Direction> {
    match label {
        "misaligned_to_aligned" => Ok(Direction::MisalignedToAligned),
        "aligned_to_misaligned" => Ok(Direction::AlignedToMisaligned),
        other => bail!("unknown direction {other:?}"),
    }
}

/// Expand "${NAME}" into the named environment variable.
pub fn interpolate_env(raw: &str) -> Result<String> {
    if let Some(name) = raw.strip_prefix("${").and_then(|s| s.strip_suffix('}')) {
        return std::env::var(name)
            .with_context(|| format!("environment variable {name} is not set"));
    }
    Ok(raw.to_string())
}
