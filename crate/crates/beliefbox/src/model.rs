//! Belief box data model and revision arithmetic.
//!
//! A belief box maps propositions to integer strengths 1-5; strength 0 means
//! the belief is not in the box. Revision scales an argumentative force by
//! the agent's open-mindedness coefficient and rounds back onto the integer
//! scale.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which side of a paired proposition this statement expresses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    P,
    NotP,
}

impl Polarity {
    pub fn opposite(self) -> Self {
        match self {
            Polarity::P => Polarity::NotP,
            Polarity::NotP => Polarity::P,
        }
    }
}

/// A natural-language proposition an agent can believe.
///
/// Propositions come in pairs (p and its opposite) linked by `pair_id`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Proposition {
    pub id: String,
    pub statement: String,
    pub polarity: Polarity,
    pub pair_id: String,
}

impl Proposition {
    pub fn new(
        id: impl Into<String>,
        statement: impl Into<String>,
        polarity: Polarity,
        pair_id: impl Into<String>,
    ) -> Result<Self> {
        let statement = statement.into();
        if statement.is_empty() {
            return Err(Error::Domain("proposition statement is empty".into()));
        }
        Ok(Self {
            id: id.into(),
            statement,
            polarity,
            pair_id: pair_id.into(),
        })
    }
}

/// Integer belief strength in {0..5}; 0 means "not in the belief box".
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BeliefStrength(u8);

impl BeliefStrength {
    pub const ABSENT: BeliefStrength = BeliefStrength(0);

    pub fn new(value: u8) -> Result<Self> {
        if value > 5 {
            return Err(Error::Domain(format!(
                "belief strength {value} outside {{0..5}}"
            )));
        }
        Ok(Self(value))
    }

    pub fn value(self) -> u8 {
        self.0
    }

    pub fn is_absent(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Display for BeliefStrength {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Open-mindedness persona level 1-5, mapped linearly onto [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct OpenMindedness {
    level: u8,
}

impl OpenMindedness {
    pub fn new(level: u8) -> Result<Self> {
        if !(1..=5).contains(&level) {
            return Err(Error::Domain(format!(
                "open-mindedness level {level} outside {{1..5}}"
            )));
        }
        Ok(Self { level })
    }

    pub fn level(self) -> u8 {
        self.level
    }

    /// The revision coefficient lambda in [0, 1].
    pub fn coefficient(self) -> f64 {
        openness_coefficient(self.level).expect("level validated at construction")
    }
}

/// Directional push an argument exerts on one belief's strength.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArgumentativeForce {
    pub delta: f64,
}

impl ArgumentativeForce {
    pub fn new(delta: f64) -> Result<Self> {
        if !delta.is_finite() {
            return Err(Error::Domain("argumentative force must be finite".into()));
        }
        Ok(Self { delta })
    }
}

/// One held belief: the proposition plus its current strength (never 0).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeliefEntry {
    pub proposition: Proposition,
    pub strength: BeliefStrength,
}

/// An agent's belief box.
///
/// Invariants: no entry with strength 0 (absence is deletion), and at most
/// one member of any proposition pair is held at a time; adopting one side
/// deletes the other.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BeliefBox {
    entries: BTreeMap<String, BeliefEntry>,
}

impl BeliefBox {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    /// Set the strength of `proposition`, evicting its paired opposite.
    /// Strength 0 removes the entry.
    pub fn set(&mut self, proposition: Proposition, strength: BeliefStrength) {
        if strength.is_absent() {
            self.entries.remove(&proposition.id);
            return;
        }
        let pair_id = proposition.pair_id.clone();
        let id = proposition.id.clone();
        self.entries
            .retain(|_, e| e.proposition.pair_id != pair_id || e.proposition.id == id);
        self.entries.insert(
            id,
            BeliefEntry {
                proposition,
                strength,
            },
        );
    }

    pub fn strength_of(&self, proposition_id: &str) -> BeliefStrength {
        self.entries
            .get(proposition_id)
            .map(|e| e.strength)
            .unwrap_or(BeliefStrength::ABSENT)
    }

    pub fn get(&self, proposition_id: &str) -> Option<&BeliefEntry> {
        self.entries.get(proposition_id)
    }

    /// Entries in deterministic (id) order.
    pub fn entries(&self) -> impl Iterator<Item = &BeliefEntry> {
        self.entries.values()
    }

    /// JSON form: `{"beliefs":[{"id":.., "statement":.., "strength":1-5}]}`.
    pub fn to_json(&self) -> serde_json::Value {
        let beliefs: Vec<serde_json::Value> = self
            .entries
            .values()
            .map(|e| {
                serde_json::json!({
                    "id": e.proposition.id,
                    "statement": e.proposition.statement,
                    "strength": e.strength.value(),
                })
            })
            .collect();
        serde_json::json!({ "beliefs": beliefs })
    }
}

/// Map an open-mindedness level 1-5 onto the coefficient (level - 1) / 4.
pub fn openness_coefficient(level: u8) -> Result<f64> {
    if !(1..=5).contains(&level) {
        return Err(Error::Domain(format!(
            "open-mindedness level {level} outside {{1..5}}"
        )));
    }
    Ok(f64::from(level - 1) / 4.0)
}

/// Apply one belief revision step: new = prev + force * openness, rounded
/// half-up and clamped to [0, 5].
pub fn revise_strength(
    prev: BeliefStrength,
    force: ArgumentativeForce,
    openness: f64,
) -> Result<BeliefStrength> {
    if !force.delta.is_finite() {
        return Err(Error::Domain("argumentative force must be finite".into()));
    }
    if !(0.0..=1.0).contains(&openness) {
        return Err(Error::Domain(format!(
            "openness coefficient {openness} outside [0, 1]"
        )));
    }
    let raw = f64::from(prev.value()) + force.delta * openness;
    let rounded = (raw + 0.5).floor();
    let clamped = rounded.clamp(0.0, 5.0);
    BeliefStrength::new(clamped as u8)
}

/// Fraction of trials in which the target agent changed its belief.
pub fn belief_change_rate(outcomes: &[bool]) -> Result<f64> {
    if outcomes.is_empty() {
        return Err(Error::Domain(
            "belief change rate over an empty outcome list".into(),
        ));
    }
    let changed = outcomes.iter().filter(|&&b| b).count();
    Ok(changed as f64 / outcomes.len() as f64)
}

/// Average strength over rounds within each trajectory, then the unweighted
/// mean across trajectories.
pub fn mean_belief_score(trajectories: &[Vec<BeliefStrength>]) -> Result<f64> {
    if trajectories.is_empty() {
        return Err(Error::Domain("mean belief score over no samples".into()));
    }
    let mut total = 0.0;
    for (i, t) in trajectories.iter().enumerate() {
        if t.is_empty() {
            return Err(Error::Domain(format!(
                "mean belief score: trajectory {i} is empty"
            )));
        }
        let sum: f64 = t.iter().map(|s| f64::from(s.value())).sum();
        total += sum / t.len() as f64;
    }
    Ok(total / trajectories.len() as f64)
}
