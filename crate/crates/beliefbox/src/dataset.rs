//! Dataset loaders: MMLU-shaped CSV and Aporia-shaped JSON, plus seeded
//! sampling and belief construction from answer keys / argument alignment.

use std::fmt;
use std::path::Path;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{BeliefStrength, Polarity, Proposition};

/// A multiple-choice answer letter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Choice {
    A,
    B,
    C,
    D,
}

impl Choice {
    pub const ALL: [Choice; 4] = [Choice::A, Choice::B, Choice::C, Choice::D];

    pub fn index(self) -> usize {
        match self {
            Choice::A => 0,
            Choice::B => 1,
            Choice::C => 2,
            Choice::D => 3,
        }
    }

    pub fn from_index(i: usize) -> Option<Choice> {
        Choice::ALL.get(i).copied()
    }

    pub fn parse(s: &str) -> Option<Choice> {
        match s.trim() {
            "A" | "a" => Some(Choice::A),
            "B" | "b" => Some(Choice::B),
            "C" | "c" => Some(Choice::C),
            "D" | "d" => Some(Choice::D),
            _ => None,
        }
    }
}

impl fmt::Display for Choice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match self {
            Choice::A => 'A',
            Choice::B => 'B',
            Choice::C => 'C',
            Choice::D => 'D',
        };
        write!(f, "{c}")
    }
}

/// One MMLU-shaped question: four options, one keyed answer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MmluSample {
    pub subject: String,
    pub question: String,
    pub choices: [String; 4],
    pub correct: Choice,
}

impl MmluSample {
    pub fn choice_text(&self, c: Choice) -> &str {
        &self.choices[c.index()]
    }
}

/// One Aporia-shaped ethics sample: scenario, rule, paired beliefs, and the
/// human-judged winner/loser arguments.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AporiaSample {
    pub scenario: String,
    pub profession_description: String,
    pub rule: String,
    pub aligned_belief: String,
    pub misaligned_belief: String,
    pub winner_argument: String,
    pub loser_argument: String,
}

impl AporiaSample {
    fn field_values(&self) -> [(&'static str, &str); 7] {
        [
            ("scenario", &self.scenario),
            ("profession_description", &self.profession_description),
            ("rule", &self.rule),
            ("aligned_belief", &self.aligned_belief),
            ("misaligned_belief", &self.misaligned_belief),
            ("winner_argument", &self.winner_argument),
            ("loser_argument", &self.loser_argument),
        ]
    }
}

#[derive(Debug, Deserialize)]
struct MmluRow {
    subject: String,
    question: String,
    choice_a: String,
    choice_b: String,
    choice_c: String,
    choice_d: String,
    answer: String,
}

/// Load an MMLU-shaped CSV (columns subject, question, choice_a..choice_d,
/// answer). A zero-byte file loads as the empty list; row order is preserved.
pub fn load_mmlu(path: impl AsRef<Path>) -> Result<Vec<MmluSample>> {
    let raw = std::fs::read_to_string(path.as_ref())?;
    if raw.is_empty() {
        return Ok(Vec::new());
    }
    let mut reader = csv::Reader::from_reader(raw.as_bytes());
    let mut samples = Vec::new();
    for (i, row) in reader.deserialize::<MmluRow>().enumerate() {
        let row_no = i + 1;
        let row = row.map_err(|e| Error::Data(format!("mmlu row {row_no}: {e}")))?;
        let choices = [row.choice_a, row.choice_b, row.choice_c, row.choice_d];
        for (name, value) in ["choice_a", "choice_b", "choice_c", "choice_d"]
            .iter()
            .zip(&choices)
        {
            if value.is_empty() {
                return Err(Error::Data(format!(
                    "mmlu row {row_no}: empty field {name}"
                )));
            }
        }
        if row.subject.is_empty() || row.question.is_empty() {
            return Err(Error::Data(format!(
                "mmlu row {row_no}: empty field subject/question"
            )));
        }
        let correct = Choice::parse(&row.answer).ok_or_else(|| {
            Error::Data(format!(
                "mmlu row {row_no}: field answer must be one of A-D, got {:?}",
                row.answer
            ))
        })?;
        samples.push(MmluSample {
            subject: row.subject,
            question: row.question,
            choices,
            correct,
        });
    }
    Ok(samples)
}

/// Canonical CSV form of an MMLU dataset (what `load_mmlu` reads back).
pub fn mmlu_to_csv(samples: &[MmluSample]) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record([
        "subject", "question", "choice_a", "choice_b", "choice_c", "choice_d", "answer",
    ])?;
    for s in samples {
        writer.write_record([
            s.subject.as_str(),
            s.question.as_str(),
            s.choices[0].as_str(),
            s.choices[1].as_str(),
            s.choices[2].as_str(),
            s.choices[3].as_str(),
            &s.correct.to_string(),
        ])?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| Error::Data(format!("csv flush: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::Data(format!("csv not utf-8: {e}")))
}

/// Load an Aporia-shaped JSON array with the seven snake_case fields.
pub fn load_aporia(path: impl AsRef<Path>) -> Result<Vec<AporiaSample>> {
    let raw = std::fs::read_to_string(path.as_ref())?;
    if raw.trim().is_empty() {
        return Ok(Vec::new());
    }
    let samples: Vec<AporiaSample> =
        serde_json::from_str(&raw).map_err(|e| Error::Data(format!("aporia dataset: {e}")))?;
    for (i, s) in samples.iter().enumerate() {
        for (name, value) in s.field_values() {
            if value.is_empty() {
                return Err(Error::Data(format!(
                    "aporia record {}: empty field {name}",
                    i + 1
                )));
            }
        }
    }
    Ok(samples)
}

/// Canonical JSON form of an Aporia dataset (what `load_aporia` reads back).
pub fn aporia_to_json(samples: &[AporiaSample]) -> Result<String> {
    let mut out = serde_json::to_string_pretty(samples)?;
    out.push('\n');
    Ok(out)
}

/// Deterministic uniform sample of `n` items without replacement, preserving
/// dataset order.
pub fn sample_items<T: Clone>(items: &[T], n: usize, seed: u64) -> Result<Vec<T>> {
    if n > items.len() {
        return Err(Error::Domain(format!(
            "cannot sample {n} items from {}",
            items.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut indices: Vec<usize> = rand::seq::index::sample(&mut rng, items.len(), n).into_vec();
    indices.sort_unstable();
    Ok(indices.into_iter().map(|i| items[i].clone()).collect())
}

/// Which belief to construct for an agent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stance {
    Correct,
    Incorrect,
    Aligned,
    Misaligned,
}

/// Either dataset's sample, borrowed.
#[derive(Debug, Clone, Copy)]
pub enum SampleRef<'a> {
    Mmlu(&'a MmluSample),
    Aporia(&'a AporiaSample),
}

/// The wrong answer letter a peer group argues for, chosen uniformly among
/// the three non-keyed letters. Identical seeds give the identical letter, so
/// a whole peer group shares one incorrect answer.
pub fn incorrect_letter(sample: &MmluSample, seed: u64) -> Choice {
    let wrongs: Vec<Choice> = Choice::ALL
        .into_iter()
        .filter(|c| *c != sample.correct)
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    wrongs[rng.random_range(0..wrongs.len())]
}

fn mmlu_proposition(sample: &MmluSample, sample_id: &str, letter: Choice) -> Result<Proposition> {
    let polarity = if letter == sample.correct {
        Polarity::P
    } else {
        Polarity::NotP
    };
    Proposition::new(
        format!("{sample_id}:answer-{letter}"),
        format!("The answer is {letter}) {}.", sample.choice_text(letter)),
        polarity,
        format!("{sample_id}:answer"),
    )
}

/// Build the initial belief for an agent: the keyed answer or a seeded wrong
/// answer for MMLU, the aligned or misaligned belief text for Aporia.
pub fn make_belief(
    sample: SampleRef<'_>,
    sample_id: &str,
    stance: Stance,
    strength: BeliefStrength,
    seed: u64,
) -> Result<(Proposition, BeliefStrength)> {
    let proposition = match (sample, stance) {
        (SampleRef::Mmlu(s), Stance::Correct) => mmlu_proposition(s, sample_id, s.correct)?,
        (SampleRef::Mmlu(s), Stance::Incorrect) => {
            mmlu_proposition(s, sample_id, incorrect_letter(s, seed))?
        }
        (SampleRef::Aporia(s), Stance::Aligned) => Proposition::new(
            format!("{sample_id}:aligned"),
            s.aligned_belief.clone(),
            Polarity::P,
            sample_id,
        )?,
        (SampleRef::Aporia(s), Stance::Misaligned) => Proposition::new(
            format!("{sample_id}:misaligned"),
            s.misaligned_belief.clone(),
            Polarity::NotP,
            sample_id,
        )?,
        (SampleRef::Mmlu(_), _) | (SampleRef::Aporia(_), _) => {
            return Err(Error::Domain(format!(
                "stance {stance:?} is not valid for this dataset kind"
            )))
        }
    };
    Ok((proposition, strength))
}
