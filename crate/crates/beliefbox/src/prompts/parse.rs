//! Parsers that recover typed values from free-form model responses.

use std::sync::OnceLock;

use regex::Regex;

use crate::dataset::Choice;
use crate::error::{Error, Result};

fn likert_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\b[1-5]\b").expect("valid regex"))
}

fn choice_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\b[A-D]\b").expect("valid regex"))
}

/// First standalone digit 1-5 in the text.
pub fn parse_likert(text: &str) -> Result<u8> {
    likert_re()
        .find(text)
        .map(|m| m.as_str().as_bytes()[0] - b'0')
        .ok_or_else(|| Error::Parse(format!("no standalone digit 1-5 in {text:?}")))
}

/// First token interpreted as yes/no, case-insensitively.
pub fn parse_yes_no(text: &str) -> Result<bool> {
    let first_token: String = text
        .trim_start()
        .chars()
        .take_while(|c| c.is_alphabetic())
        .collect();
    match first_token.to_ascii_lowercase().as_str() {
        "yes" => Ok(true),
        "no" => Ok(false),
        _ => Err(Error::Parse(format!(
            "first token is not yes/no in {text:?}"
        ))),
    }
}

/// Last standalone letter A-D in the text; responses conclude with their
/// final choice, so the last match wins.
pub fn parse_choice(text: &str) -> Result<Choice> {
    choice_re()
        .find_iter(text)
        .last()
        .and_then(|m| Choice::parse(m.as_str()))
        .ok_or_else(|| Error::Parse(format!("no standalone choice letter A-D in {text:?}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn likert_examples() {
        assert_eq!(parse_likert("4").unwrap(), 4);
        assert_eq!(parse_likert("I'd say 3 overall.").unwrap(), 3);
        assert_eq!(parse_likert("strength 2").unwrap(), 2);
        assert!(parse_likert("maybe").is_err());
        // 10 contains no standalone 1-5; v3 is not word-delimited
        assert!(parse_likert("10 out of 10, v3").is_err());
        assert_eq!(parse_likert("between 1 and 5: 1").unwrap(), 1);
    }

    #[test]
    fn yes_no_examples() {
        assert!(parse_yes_no("Yes").unwrap());
        assert!(!parse_yes_no("no.").unwrap());
        assert!(parse_yes_no("YES, absolutely").unwrap());
        assert!(parse_yes_no("It depends").is_err());
        assert!(parse_yes_no("").is_err());
    }

    #[test]
    fn choice_examples() {
        assert_eq!(
            parse_choice("I initially favored B, but conclude (C).").unwrap(),
            Choice::C
        );
        assert_eq!(parse_choice("Answer: A").unwrap(), Choice::A);
        assert!(parse_choice("all options are weak").is_err());
        // lowercase letters are English words, not verdicts
        assert!(parse_choice("a weak case indeed").is_err());
        assert_eq!(parse_choice("D").unwrap(), Choice::D);
    }

    #[test]
    fn choice_round_trips_scripted_conclusions() {
        for c in Choice::ALL {
            let text = format!("Weighing everything, my choice ({c}).");
            assert_eq!(parse_choice(&text).unwrap(), c);
        }
    }
}
