//! Text normalization and dictionary grapheme-to-phoneme lookup.

use std::collections::HashMap;
use std::path::Path;

use thiserror::Error;

use crate::bundle::PhonemeSequence;
use crate::phone::{Phone, PhoneError};

const BUNDLED_LEXICON: &str = include_str!("../data/lexicon.tsv");

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TextError {
    #[error("unknown words: {}", .0.join(", "))]
    UnknownWords(Vec<String>),
    #[error("phoneme sequence would be empty")]
    EmptySequence,
    #[error(transparent)]
    Phone(#[from] PhoneError),
}

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("lexicon line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("reading lexicon: {0}")]
    Io(#[from] std::io::Error),
}

/// Lowercases, drops punctuation (keeping apostrophes inside words) and
/// splits on whitespace and any other non-word character.
pub fn clean_text(raw: &str) -> Vec<String> {
    raw.to_lowercase()
        .replace(['\u{2019}', '\u{2018}'], "'")
        .split(|c: char| !(c.is_alphanumeric() || c == '\''))
        .map(|w| w.trim_matches('\''))
        .filter(|w| !w.is_empty())
        .map(str::to_string)
        .collect()
}

/// Word → pronunciation table.
#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    entries: HashMap<String, Vec<Phone>>,
}

impl Lexicon {
    /// Parses `word<TAB>PH PH ...` lines. Lines starting with `;;;` or `#` are
    /// comments; CMUdict-style variant markers (`word(2)`) are accepted, and
    /// the first pronunciation of a word wins.
    pub fn parse(text: &str) -> Result<Self, LexiconError> {
        let mut entries = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with(";;;") || line.starts_with('#') {
                continue;
            }
            let err = |message: String| LexiconError::Parse { line: i + 1, message };
            let (word, phones) = line
                .split_once('\t')
                .or_else(|| line.split_once(char::is_whitespace))
                .ok_or_else(|| err("expected a word followed by phones".into()))?;
            let mut word = word.trim().to_lowercase();
            if let Some(open) = word.find('(') {
                if word.ends_with(')') {
                    word.truncate(open);
                }
            }
            let phones = phones
                .split_whitespace()
                .map(str::parse)
                .collect::<Result<Vec<Phone>, _>>()
                .map_err(|e| err(e.to_string()))?;
            if phones.is_empty() {
                return Err(err(format!("empty pronunciation for {word:?}")));
            }
            entries.entry(word).or_insert(phones);
        }
        Ok(Self { entries })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, LexiconError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// The small dictionary shipped with the crate.
    pub fn bundled() -> Self {
        Self::parse(BUNDLED_LEXICON).expect("bundled lexicon is well-formed")
    }

    pub fn get(&self, word: &str) -> Option<&[Phone]> {
        self.entries.get(word).map(Vec::as_slice)
    }

    pub fn insert(&mut self, word: &str, phones: Vec<Phone>) {
        self.entries.insert(word.to_lowercase(), phones);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Looks up every word and joins the pronunciations with `SIL`.
pub fn g2p<S: AsRef<str>>(words: &[S], lexicon: &Lexicon) -> Result<PhonemeSequence, TextError> {
    let mut tokens = Vec::new();
    let mut unknown = Vec::new();
    for (i, word) in words.iter().enumerate() {
        let word = word.as_ref();
        match lexicon.get(word) {
            Some(phones) => {
                if i > 0 {
                    tokens.push(Phone::SIL);
                }
                tokens.extend_from_slice(phones);
            }
            None => unknown.push(word.to_string()),
        }
    }
    if !unknown.is_empty() {
        return Err(TextError::UnknownWords(unknown));
    }
    if tokens.is_empty() {
        return Err(TextError::EmptySequence);
    }
    Ok(PhonemeSequence::new(tokens))
}

pub fn is_vowel(symbol: &str) -> Result<bool, TextError> {
    Ok(symbol.parse::<Phone>()?.is_vowel())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn phones(s: &str) -> Vec<Phone> {
        s.split_whitespace().map(|p| p.parse().unwrap()).collect()
    }

    #[test]
    fn cleaning_rules() {
        assert_eq!(clean_text("Hello,  WORLD!"), vec!["hello", "world"]);
        assert!(clean_text("").is_empty());
        assert_eq!(clean_text("don't stop"), vec!["don't", "stop"]);
        assert_eq!(clean_text("'quoted' rock-and-roll\tdon\u{2019}t"), vec![
            "quoted", "rock", "and", "roll", "don't"
        ]);
    }

    #[test]
    fn bass_pronunciation() {
        let lex = Lexicon::bundled();
        let seq = g2p(&["bass"], &lex).unwrap();
        assert_eq!(seq.tokens, phones("B AE1 S"));
    }

    #[test]
    fn words_are_separated_by_silence() {
        let lex = Lexicon::bundled();
        let seq = g2p(&clean_text("Hello, world"), &lex).unwrap();
        assert_eq!(seq.to_string(), "HH AH0 L OW1 SIL W ER1 L D");
    }

    #[test]
    fn empty_and_unknown() {
        let lex = Lexicon::bundled();
        let none: [&str; 0] = [];
        assert_eq!(g2p(&none, &lex), Err(TextError::EmptySequence));
        assert_eq!(
            g2p(&["zzxqv", "bass", "qqq"], &lex),
            Err(TextError::UnknownWords(vec!["zzxqv".into(), "qqq".into()]))
        );
    }

    #[test]
    fn first_variant_wins() {
        let lex = Lexicon::parse("the\tDH AH0\nTHE(2)  DH IY0\n").unwrap();
        assert_eq!(lex.get("the").unwrap(), phones("DH AH0").as_slice());
    }

    #[test]
    fn lexicon_errors_carry_line_numbers() {
        match Lexicon::parse(";;; c\nok\tOW1\nbad\tQQ1\n") {
            Err(LexiconError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        assert!(Lexicon::parse("lonely\n").is_err());
    }

    #[test]
    fn vowel_classification() {
        assert_eq!(is_vowel("AE1"), Ok(true));
        assert_eq!(is_vowel("AE"), Ok(true));
        assert_eq!(is_vowel("B"), Ok(false));
        assert_eq!(is_vowel("SIL"), Ok(false));
        assert!(is_vowel("QQ").is_err());
    }

    #[test]
    fn deterministic() {
        let lex = Lexicon::bundled();
        let a = g2p(&clean_text("Sweet dreams are made of this"), &lex).unwrap();
        let b = g2p(&clean_text("Sweet dreams are made of this"), &lex).unwrap();
        assert_eq!(a, b);
    }
}
