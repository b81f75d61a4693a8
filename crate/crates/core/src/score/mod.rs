//! Score path: MusicXML parts → event tuples → conditioning bundles.
//!
//! Each sung syllable becomes its phones with consonants at the start of the
//! event and vowels filling the rest. Notes without a lyric extend the
//! previous vowel (melisma), rests become one silence token.

mod musicxml;

use std::ops::Range;

use thiserror::Error;

pub use musicxml::{parse_musicxml, DEFAULT_TEMPO};

use crate::bundle::{validate_bundle, ConditioningBundle, PhonemeSequence, PitchContour, Violation};
use crate::clock::AudioClock;
use crate::phone::{Base, Phone, PhoneClass};
use crate::rhythm::{alignment_from_durations, duration_to_frames};
use crate::text::{clean_text, g2p, Lexicon, TextError};

/// Consonant durations in seconds by class.
pub const PLOSIVE_SECONDS: f64 = 0.020;
pub const FRICATIVE_SECONDS: f64 = 0.100;
pub const SONORANT_SECONDS: f64 = 0.060;
/// Consonants may take at most this share of an event.
pub const MAX_CONSONANT_SHARE: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScoreError {
    #[error("malformed XML: {0}")]
    Xml(String),
    #[error("unsupported element <{element}> at line {line}")]
    Unsupported { element: String, line: u32 },
    #[error("part {part} measure {measure} (line {line}): duration given before any <divisions>")]
    MissingDivisions { part: String, measure: String, line: u32 },
    #[error("part {part} measure {measure} (line {line}): note has neither <duration> nor <type>")]
    MissingDuration { part: String, measure: String, line: u32 },
    #[error("note at line {line} has no pitch")]
    MissingPitch { line: u32 },
    #[error("invalid <{element}> value {value:?} at line {line}")]
    InvalidValue { element: String, value: String, line: u32 },
    #[error("part {part} has no events")]
    EmptyPart { part: String },
    #[error("score has no parts")]
    NoParts,
    #[error("MIDI number {0} is outside 0..=127")]
    MidiOutOfRange(f64),
    #[error("event is not a note")]
    NotANote,
    #[error("no phones to place")]
    NoPhones,
    #[error("event of {frames} frames is too short for its phones (needs {needed})")]
    TooShort { frames: usize, needed: usize },
    #[error("voices per part must be at least 1")]
    NoVoices,
    #[error("event {event}: {source}")]
    AtEvent {
        event: usize,
        #[source]
        source: Box<ScoreError>,
    },
    #[error("event {event}: lyric: {source}")]
    Lyric {
        event: usize,
        #[source]
        source: TextError,
    },
    #[error("compiled bundle is invalid: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Note,
    Rest,
}

/// Position of a lyric syllable within its word.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Syllabic {
    Single,
    Begin,
    Middle,
    End,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Syllable {
    pub text: String,
    pub syllabic: Syllabic,
}

/// A (pitch, duration, syllable) tuple.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreEvent {
    pub kind: EventKind,
    pub midi: Option<u8>,
    /// Seconds.
    pub duration: f64,
    pub syllable: Option<Syllable>,
}

impl ScoreEvent {
    pub fn note(midi: u8, duration: f64, syllable: Option<Syllable>) -> Self {
        Self {
            kind: EventKind::Note,
            midi: Some(midi),
            duration,
            syllable,
        }
    }

    pub fn rest(duration: f64) -> Self {
        Self {
            kind: EventKind::Rest,
            midi: None,
            duration,
            syllable: None,
        }
    }

    pub fn is_note(&self) -> bool {
        self.kind == EventKind::Note
    }
}

impl Syllable {
    pub fn single(text: &str) -> Self {
        Self {
            text: text.to_string(),
            syllabic: Syllabic::Single,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScorePart {
    pub name: String,
    pub events: Vec<ScoreEvent>,
    /// Tempo in quarter notes per minute at the start of the score.
    pub tempo: f64,
    /// Semitones added to every note when compiling.
    pub transpose: i32,
}

impl ScorePart {
    pub fn new(name: &str, events: Vec<ScoreEvent>) -> Self {
        Self {
            name: name.to_string(),
            events,
            tempo: DEFAULT_TEMPO,
            transpose: 0,
        }
    }
}

/// Equal temperament, A4 = 440 Hz.
pub fn midi_to_hz(midi: f64) -> Result<f64, ScoreError> {
    if !(0.0..=127.0).contains(&midi) {
        return Err(ScoreError::MidiOutOfRange(midi));
    }
    Ok(440.0 * 2f64.powf((midi - 69.0) / 12.0))
}

fn consonant_seconds(phone: Phone) -> f64 {
    match phone.class() {
        PhoneClass::Plosive => PLOSIVE_SECONDS,
        PhoneClass::Fricative => FRICATIVE_SECONDS,
        PhoneClass::Sonorant => SONORANT_SECONDS,
        PhoneClass::Vowel | PhoneClass::Silence => 0.0,
    }
}

/// Splits `total` into integer parts proportional to `weights`, largest
/// remainder first, earlier entries winning ties.
fn largest_remainder(weights: &[f64], total: usize) -> Vec<usize> {
    let sum: f64 = weights.iter().sum();
    if sum <= 0.0 {
        let mut out = vec![total / weights.len(); weights.len()];
        for o in out.iter_mut().take(total % weights.len()) {
            *o += 1;
        }
        return out;
    }
    let quotas: Vec<f64> = weights.iter().map(|w| w / sum * total as f64).collect();
    let mut out: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let short = total - out.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| (quotas[b] - quotas[b].floor()).total_cmp(&(quotas[a] - quotas[a].floor())));
    for &i in order.iter().take(short) {
        out[i] += 1;
    }
    out
}

/// Frames per phone for one note event. Consonants take their class
/// duration (scaled down together if they would exceed half the event),
/// vowels share the remainder equally. Counts sum to
/// `duration_to_frames(event.duration)`.
pub fn assign_phone_durations(
    event: &ScoreEvent,
    phones: &[Phone],
    clock: &AudioClock,
) -> Result<Vec<(Phone, usize)>, ScoreError> {
    if !event.is_note() {
        return Err(ScoreError::NotANote);
    }
    if phones.is_empty() {
        return Err(ScoreError::NoPhones);
    }
    let total = duration_to_frames(event.duration, clock).map_err(|_| ScoreError::TooShort {
        frames: 0,
        needed: 1,
    })?;
    let vowels = phones.iter().filter(|p| p.is_vowel()).count();
    let needed = vowels.max(1);
    if total < needed {
        return Err(ScoreError::TooShort { frames: total, needed });
    }
    if phones.len() == 1 {
        return Ok(vec![(phones[0], total)]);
    }

    let seconds: Vec<f64> = phones.iter().map(|&p| consonant_seconds(p)).collect();
    if vowels == 0 {
        let frames = largest_remainder(&seconds, total);
        return Ok(phones.iter().copied().zip(frames).collect());
    }

    let consonant_total: f64 = seconds.iter().sum();
    let budget = MAX_CONSONANT_SHARE * event.duration;
    let scale = if consonant_total > budget { budget / consonant_total } else { 1.0 };
    let mut frames: Vec<usize> = Vec::with_capacity(phones.len());
    for (&p, &s) in phones.iter().zip(&seconds) {
        frames.push(if p.is_vowel() {
            0
        } else {
            duration_to_frames(s * scale, clock).unwrap_or(0)
        });
    }
    let consonant_frames: usize = frames.iter().sum();
    if consonant_frames + vowels > total {
        return Err(ScoreError::TooShort {
            frames: total,
            needed: consonant_frames + vowels,
        });
    }
    let remainder = total - consonant_frames;
    let mut vowel_idx = 0;
    for (f, p) in frames.iter_mut().zip(phones) {
        if p.is_vowel() {
            *f = remainder / vowels + usize::from(vowel_idx < remainder % vowels);
            vowel_idx += 1;
        }
    }
    Ok(phones.iter().copied().zip(frames).collect())
}

/// Splits a word's phones into one group per vowel nucleus. A single
/// consonant between vowels starts the next group; with more, the first
/// closes the previous group.
fn syllabify(phones: &[Phone]) -> Vec<Vec<Phone>> {
    let nuclei: Vec<usize> = (0..phones.len()).filter(|&i| phones[i].is_vowel()).collect();
    if nuclei.len() <= 1 {
        return vec![phones.to_vec()];
    }
    let mut cuts = Vec::with_capacity(nuclei.len() - 1);
    for w in nuclei.windows(2) {
        let between = w[1] - w[0] - 1;
        cuts.push(if between >= 2 { w[0] + 2 } else { w[0] + 1 });
    }
    let mut groups = Vec::with_capacity(nuclei.len());
    let mut start = 0;
    for &c in &cuts {
        groups.push(phones[start..c].to_vec());
        start = c;
    }
    groups.push(phones[start..].to_vec());
    groups
}

/// One token group sung across one or more consecutive note events.
enum Unit {
    Rest(Vec<usize>),
    Sung { phones: Vec<Phone>, events: Vec<usize> },
}

fn lyric_text(event: &ScoreEvent) -> Option<(&str, Syllabic)> {
    let s = event.syllable.as_ref()?;
    if clean_text(&s.text).is_empty() {
        return None;
    }
    Some((s.text.as_str(), s.syllabic))
}

/// The syllable texts of the word starting at `start`.
fn word_syllables(events: &[ScoreEvent], start: usize) -> Vec<&str> {
    let mut texts = Vec::new();
    for e in &events[start..] {
        if !e.is_note() {
            break;
        }
        let Some((text, syllabic)) = lyric_text(e) else { continue };
        if !texts.is_empty() && matches!(syllabic, Syllabic::Single | Syllabic::Begin) {
            break;
        }
        texts.push(text);
        if texts.len() == 1 && syllabic == Syllabic::Single {
            break;
        }
        if syllabic == Syllabic::End {
            break;
        }
    }
    texts
}

fn build_units(events: &[ScoreEvent], lexicon: &Lexicon) -> Result<Vec<Unit>, ScoreError> {
    let default_vowel = Phone::new(Base::AA, Some(1)).expect("AA1 is a vowel");
    let mut units: Vec<Unit> = Vec::new();
    // remaining syllable groups of the current word; `None` marks a syllable sung as melisma
    let mut pending: std::collections::VecDeque<Option<Vec<Phone>>> = Default::default();
    let mut last_vowel = default_vowel;

    for (i, e) in events.iter().enumerate() {
        if !e.is_note() {
            pending.clear();
            match units.last_mut() {
                Some(Unit::Rest(ev)) => ev.push(i),
                _ => units.push(Unit::Rest(vec![i])),
            }
            continue;
        }
        let group = match lyric_text(e) {
            Some((_, syllabic)) => {
                let starts_word = matches!(syllabic, Syllabic::Single | Syllabic::Begin) || pending.is_empty();
                if starts_word {
                    let texts = word_syllables(events, i);
                    let words = clean_text(&texts.concat());
                    let phones = g2p(&words, lexicon)
                        .map_err(|source| ScoreError::Lyric { event: i, source })?
                        .tokens
                        .into_iter()
                        .filter(|p| !p.is_silence())
                        .collect::<Vec<_>>();
                    let mut groups = syllabify(&phones);
                    let n = texts.len().max(1);
                    while groups.len() > n {
                        let extra = groups.pop().expect("more groups than syllables");
                        groups.last_mut().expect("at least one group").extend(extra);
                    }
                    pending = groups.into_iter().map(Some).collect();
                    pending.resize(n, None);
                }
                pending.pop_front().flatten()
            }
            None => None,
        };
        match group {
            Some(phones) => {
                if let Some(&v) = phones.iter().rev().find(|p| p.is_vowel()) {
                    last_vowel = v;
                }
                units.push(Unit::Sung { phones, events: vec![i] });
            }
            None => match units.last_mut() {
                Some(Unit::Sung { events, .. }) => events.push(i),
                _ => units.push(Unit::Sung {
                    phones: vec![last_vowel],
                    events: vec![i],
                }),
            },
        }
    }
    Ok(units)
}

/// Accumulates tokens, their frame counts and the per-frame contour.
#[derive(Default)]
struct Frames {
    tokens: Vec<Phone>,
    durations: Vec<usize>,
    f0: Vec<f32>,
    voiced: Vec<bool>,
}

impl Frames {
    fn push(&mut self, token: usize, frames: usize, hz: Option<f32>) {
        self.durations[token] += frames;
        let v = hz.is_some();
        self.f0.extend(std::iter::repeat_n(hz.unwrap_or(0.0), frames));
        self.voiced.extend(std::iter::repeat_n(v, frames));
    }

    fn add_token(&mut self, phone: Phone) -> usize {
        self.tokens.push(phone);
        self.durations.push(0);
        self.tokens.len() - 1
    }
}

fn event_hz(event: &ScoreEvent, transpose: i32) -> Result<f32, ScoreError> {
    let midi = f64::from(event.midi.ok_or(ScoreError::NotANote)?) + f64::from(transpose);
    Ok(midi_to_hz(midi)? as f32)
}

/// Compiles one part into a bundle with speaker id 0 and no style token.
pub fn compile_part(part: &ScorePart, lexicon: &Lexicon, clock: &AudioClock) -> Result<ConditioningBundle, ScoreError> {
    compile_part_spans(part, lexicon, clock).map(|(bundle, _)| bundle)
}

/// Like [`compile_part`], also returning the frame range each event occupies.
pub fn compile_part_spans(
    part: &ScorePart,
    lexicon: &Lexicon,
    clock: &AudioClock,
) -> Result<(ConditioningBundle, Vec<Range<usize>>), ScoreError> {
    if part.events.is_empty() {
        return Err(ScoreError::EmptyPart { part: part.name.clone() });
    }
    let at = |event: usize| move |e: ScoreError| ScoreError::AtEvent { event, source: Box::new(e) };
    let mut out = Frames::default();
    let mut spans = vec![0..0; part.events.len()];
    for unit in build_units(&part.events, lexicon)? {
        match unit {
            Unit::Rest(events) => {
                let tok = out.add_token(Phone::SIL);
                for i in events {
                    let n = duration_to_frames(part.events[i].duration, clock)
                        .map_err(|_| at(i)(ScoreError::TooShort { frames: 0, needed: 0 }))?;
                    let start = out.f0.len();
                    out.push(tok, n, None);
                    spans[i] = start..out.f0.len();
                }
            }
            Unit::Sung { phones, events } => {
                let base = out.tokens.len();
                for &p in &phones {
                    out.add_token(p);
                }
                let nucleus = phones.iter().rposition(|p| p.is_vowel()).unwrap_or(phones.len() - 1);
                let last = events.len() - 1;
                for (k, &i) in events.iter().enumerate() {
                    let event = &part.events[i];
                    let hz = event_hz(event, part.transpose).map_err(at(i))?;
                    // token range this event covers within the unit
                    let (lo, hi) = match (k == 0, k == last) {
                        (true, true) => (0, phones.len()),
                        (true, false) => (0, nucleus + 1),
                        (false, true) => (nucleus, phones.len()),
                        (false, false) => (nucleus, nucleus + 1),
                    };
                    let frames = assign_phone_durations(event, &phones[lo..hi], clock).map_err(at(i))?;
                    let start = out.f0.len();
                    for (j, (phone, n)) in frames.into_iter().enumerate() {
                        out.push(base + lo + j, n, phone.is_vowel().then_some(hz));
                    }
                    spans[i] = start..out.f0.len();
                }
            }
        }
    }
    let alignment = alignment_from_durations(&out.durations).map_err(|_| ScoreError::NoPhones)?;
    let bundle = ConditioningBundle {
        clock: *clock,
        phonemes: PhonemeSequence::new(out.tokens),
        contour: PitchContour::new(out.f0, out.voiced),
        alignment,
        speaker_id: 0,
        gst_id: None,
    };
    let violations = validate_bundle(&bundle);
    if !violations.is_empty() {
        return Err(ScoreError::Invalid(violations));
    }
    Ok((bundle, spans))
}

/// Appends silence frames until the bundle has `frames` frames.
pub fn pad_bundle(bundle: &ConditioningBundle, frames: usize) -> ConditioningBundle {
    let extra = frames.saturating_sub(bundle.num_frames());
    if extra == 0 {
        return bundle.clone();
    }
    let mut durations = bundle.alignment.frames_per_token();
    let mut tokens = bundle.phonemes.tokens.clone();
    if tokens.last().is_some_and(|p| p.is_silence()) {
        *durations.last_mut().expect("non-empty") += extra;
    } else {
        tokens.push(Phone::SIL);
        durations.push(extra);
    }
    let mut contour = bundle.contour.clone();
    contour.f0.resize(frames, 0.0);
    contour.voiced.resize(frames, false);
    ConditioningBundle {
        phonemes: PhonemeSequence::new(tokens),
        contour,
        alignment: alignment_from_durations(&durations).expect("non-empty durations"),
        ..bundle.clone()
    }
}

/// Compiles every part and replicates it `voices_per_part` times with
/// speaker ids `part · voices_per_part + voice`. All bundles are padded to
/// the longest part.
pub fn compile_score(
    parts: &[ScorePart],
    lexicon: &Lexicon,
    clock: &AudioClock,
    voices_per_part: usize,
) -> Result<Vec<ConditioningBundle>, ScoreError> {
    if voices_per_part == 0 {
        return Err(ScoreError::NoVoices);
    }
    #[cfg(feature = "parallel")]
    let compiled: Result<Vec<_>, _> = {
        use rayon::prelude::*;
        parts.par_iter().map(|p| compile_part(p, lexicon, clock)).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let compiled: Result<Vec<_>, _> = parts.iter().map(|p| compile_part(p, lexicon, clock)).collect();
    let compiled = compiled?;
    let frames = compiled.iter().map(ConditioningBundle::num_frames).max().unwrap_or(0);
    let mut out = Vec::with_capacity(compiled.len() * voices_per_part);
    for (p, bundle) in compiled.iter().enumerate() {
        let padded = pad_bundle(bundle, frames);
        for v in 0..voices_per_part {
            out.push(ConditioningBundle {
                speaker_id: (p * voices_per_part + v) as u32,
                ..padded.clone()
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn phones(s: &str) -> Vec<Phone> {
        s.split_whitespace().map(|p| p.parse().unwrap()).collect()
    }

    fn clock() -> AudioClock {
        AudioClock::default()
    }

    const WHOLE_A4: &str = r#"<?xml version="1.0"?>
<score-partwise version="3.1">
  <part-list><score-part id="P1"><part-name>Solo</part-name></score-part></part-list>
  <part id="P1">
    <measure number="1">
      <attributes><divisions>2</divisions><time><beats>4</beats><beat-type>4</beat-type></time></attributes>
      <direction><direction-type><metronome><beat-unit>quarter</beat-unit><per-minute>60</per-minute></metronome></direction-type></direction>
      <note><pitch><step>A</step><octave>4</octave></pitch><duration>8</duration><type>whole</type>
        <lyric><syllabic>single</syllabic><text>ah</text></lyric></note>
    </measure>
  </part>
</score-partwise>"#;

    #[test]
    fn midi_examples() {
        assert_eq!(midi_to_hz(69.0).unwrap(), 440.0);
        assert_eq!(midi_to_hz(81.0).unwrap(), 880.0);
        let c4 = 440.0 * (2f64.ln() * -9.0 / 12.0).exp();
        assert!((midi_to_hz(60.0).unwrap() - c4).abs() < 1e-9);
        assert!((midi_to_hz(60.0).unwrap() - 261.6256).abs() < 1e-3);
        assert!(midi_to_hz(128.0).is_err());
        assert!(midi_to_hz(-1.0).is_err());
    }

    #[test]
    fn whole_note_at_sixty() {
        let parts = parse_musicxml(WHOLE_A4).unwrap();
        assert_eq!(parts.len(), 1);
        assert_eq!(parts[0].name, "Solo");
        assert_eq!(parts[0].tempo, 60.0);
        // 8 divisions / 2 per quarter = 4 quarters at 1 s each
        assert_eq!(
            parts[0].events,
            vec![ScoreEvent::note(69, 4.0, Some(Syllable::single("ah")))]
        );
    }

    #[test]
    fn whole_note_compiles_to_345_voiced_frames() {
        let parts = parse_musicxml(WHOLE_A4).unwrap();
        let b = compile_part(&parts[0], &Lexicon::bundled(), &clock()).unwrap();
        assert_eq!(b.num_frames(), 345);
        assert_eq!(b.phonemes.to_string(), "AA1");
        assert!(b.contour.voiced.iter().all(|&v| v));
        assert!(b.contour.f0.iter().all(|&f| f == 440.0));
    }

    #[test]
    fn measure_rest_and_ties() {
        let xml = r#"<score-partwise>
  <part-list><score-part id="P1"><part-name>T</part-name></score-part></part-list>
  <part id="P1">
    <measure number="1">
      <attributes><divisions>1</divisions><time><beats>3</beats><beat-type>4</beat-type></time></attributes>
      <note><rest measure="yes"/></note>
    </measure>
    <measure number="2">
      <note><pitch><step>C</step><octave>4</octave></pitch><duration>1</duration><tie type="start"/></note>
      <note><pitch><step>C</step><octave>4</octave></pitch><duration>1</duration><tie type="stop"/></note>
      <note><pitch><step>D</step><alter>-1</alter><octave>4</octave></pitch><duration>1</duration></note>
    </measure>
  </part>
</score-partwise>"#;
        let parts = parse_musicxml(xml).unwrap();
        // 120 bpm default: a quarter is 0.5 s
        assert_eq!(
            parts[0].events,
            vec![ScoreEvent::rest(1.5), ScoreEvent::note(60, 1.0, None), ScoreEvent::note(61, 0.5, None)]
        );
    }

    #[test]
    fn parse_errors_carry_locations() {
        assert!(matches!(parse_musicxml("<score-partwise>"), Err(ScoreError::Xml(_))));
        let no_div = r#"<score-partwise><part id="P1"><measure number="3">
<note><pitch><step>C</step><octave>4</octave></pitch><duration>1</duration></note>
</measure></part></score-partwise>"#;
        match parse_musicxml(no_div) {
            Err(ScoreError::MissingDivisions { part, measure, line }) => {
                assert_eq!((part.as_str(), measure.as_str(), line), ("P1", "3", 2));
            }
            other => panic!("{other:?}"),
        }
        let timewise = "<score-timewise/>";
        assert!(matches!(parse_musicxml(timewise), Err(ScoreError::Unsupported { .. })));
        let drums = r#"<score-partwise><part id="P1"><measure number="1"><attributes><divisions>1</divisions></attributes>
<note><unpitched><display-step>C</display-step><display-octave>4</display-octave></unpitched><duration>1</duration></note>
</measure></part></score-partwise>"#;
        match parse_musicxml(drums) {
            Err(ScoreError::Unsupported { element, line }) => assert_eq!((element.as_str(), line), ("unpitched", 2)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn second_voice_and_chords_are_skipped() {
        let xml = r#"<score-partwise><part id="P1"><measure number="1">
<attributes><divisions>1</divisions></attributes>
<note><pitch><step>E</step><octave>4</octave></pitch><duration>2</duration><voice>1</voice></note>
<note><chord/><pitch><step>G</step><octave>4</octave></pitch><duration>2</duration><voice>1</voice></note>
<backup><duration>2</duration></backup>
<note><pitch><step>C</step><octave>3</octave></pitch><duration>2</duration><voice>2</voice></note>
<forward><duration>1</duration></forward>
<note><pitch><step>F</step><octave>4</octave></pitch><duration>1</duration><voice>1</voice></note>
</measure></part></score-partwise>"#;
        let parts = parse_musicxml(xml).unwrap();
        assert_eq!(
            parts[0].events,
            vec![ScoreEvent::note(64, 1.0, None), ScoreEvent::rest(0.5), ScoreEvent::note(65, 0.5, None)]
        );
    }

    #[test]
    fn tempo_changes_midway() {
        let xml = r#"<score-partwise><part id="P1"><measure number="1">
<attributes><divisions>1</divisions></attributes>
<sound tempo="60"/>
<note><pitch><step>C</step><octave>4</octave></pitch><duration>2</duration></note>
<direction><sound tempo="120"/></direction>
<note><pitch><step>C</step><octave>4</octave></pitch><duration>2</duration></note>
</measure></part></score-partwise>"#;
        let parts = parse_musicxml(xml).unwrap();
        let d: Vec<f64> = parts[0].events.iter().map(|e| e.duration).collect();
        assert_eq!(d, vec![2.0, 1.0]);
    }

    #[test]
    fn bass_allocation() {
        let e = ScoreEvent::note(50, 1.0, None);
        let out = assign_phone_durations(&e, &phones("B AE1 S"), &clock()).unwrap();
        assert_eq!(out, vec![(phones("B")[0], 2), (phones("AE1")[0], 75), (phones("S")[0], 9)]);
    }

    #[test]
    fn single_phone_takes_everything() {
        let e = ScoreEvent::note(60, 0.7, None);
        let out = assign_phone_durations(&e, &phones("OW1"), &clock()).unwrap();
        assert_eq!(out, vec![(phones("OW1")[0], duration_to_frames(0.7, &clock()).unwrap())]);
    }

    #[test]
    fn short_event_clamps_consonants() {
        let e = ScoreEvent::note(60, 0.05, None);
        let out = assign_phone_durations(&e, &phones("B AE1 S"), &clock()).unwrap();
        let total: usize = out.iter().map(|p| p.1).sum();
        assert_eq!(total, 4);
        let consonants: usize = out.iter().filter(|p| !p.0.is_vowel()).map(|p| p.1).sum();
        assert!(2 * consonants <= total);
        let tiny = ScoreEvent::note(60, 0.004, None);
        assert!(matches!(
            assign_phone_durations(&tiny, &phones("B AE1 S"), &clock()),
            Err(ScoreError::TooShort { .. })
        ));
    }

    #[test]
    fn consonant_only_fills_event() {
        let e = ScoreEvent::note(60, 0.5, None);
        let out = assign_phone_durations(&e, &phones("S T"), &clock()).unwrap();
        assert_eq!(out.iter().map(|p| p.1).sum::<usize>(), 43);
        assert!(out[0].1 > out[1].1);
    }

    #[test]
    fn bass_note_voicing() {
        let part = ScorePart::new("B", vec![ScoreEvent::note(50, 1.0, Some(Syllable::single("Bass")))]);
        let b = compile_part(&part, &Lexicon::bundled(), &clock()).unwrap();
        assert_eq!(b.phonemes.to_string(), "B AE1 S");
        assert_eq!(b.alignment.frames_per_token(), vec![2, 75, 9]);
        let hz = midi_to_hz(50.0).unwrap() as f32;
        for (f, &t) in b.alignment.token_path().iter().enumerate() {
            assert_eq!(b.contour.voiced[f], t == 1);
            assert_eq!(b.contour.f0[f], if t == 1 { hz } else { 0.0 });
        }
    }

    #[test]
    fn rest_only_part() {
        let part = ScorePart::new("R", vec![ScoreEvent::rest(1.0)]);
        let b = compile_part(&part, &Lexicon::bundled(), &clock()).unwrap();
        assert_eq!(b.num_frames(), 86);
        assert_eq!(b.phonemes.to_string(), "SIL");
        assert_eq!(b.contour.num_voiced(), 0);
    }

    #[test]
    fn melisma_holds_vowel_and_changes_pitch() {
        let part = ScorePart::new(
            "M",
            vec![
                ScoreEvent::note(60, 0.5, Some(Syllable::single("love"))),
                ScoreEvent::note(62, 0.5, None),
                ScoreEvent::note(64, 0.5, None),
            ],
        );
        let b = compile_part(&part, &Lexicon::bundled(), &clock()).unwrap();
        assert_eq!(b.phonemes.to_string(), "L AH1 V");
        let per = b.alignment.frames_per_token();
        assert_eq!(per.iter().sum::<usize>(), 3 * 43);
        // L 60 ms, V 100 ms at the end
        assert_eq!((per[0], per[2]), (5, 9));
        let path = b.alignment.token_path();
        assert_eq!(b.contour.f0[43], midi_to_hz(62.0).unwrap() as f32);
        assert_eq!(path[43], 1);
        assert_eq!(path[86 + 30], 1);
    }

    #[test]
    fn multisyllable_word_spreads_over_notes() {
        let syl = |t: &str, s| Some(Syllable { text: t.into(), syllabic: s });
        let part = ScorePart::new(
            "H",
            vec![
                ScoreEvent::note(60, 0.5, syl("Hal", Syllabic::Begin)),
                ScoreEvent::note(62, 0.5, syl("le", Syllabic::Middle)),
                ScoreEvent::note(64, 0.5, syl("lu", Syllabic::Middle)),
                ScoreEvent::note(65, 1.0, syl("jah", Syllabic::End)),
                ScoreEvent::rest(0.5),
            ],
        );
        let b = compile_part(&part, &Lexicon::bundled(), &clock()).unwrap();
        assert_eq!(b.phonemes.to_string(), "HH AE2 L AH0 L UW1 Y AH0 SIL");
        let per = b.alignment.frames_per_token();
        assert_eq!(per[0] + per[1], 43);
        assert_eq!(per[2] + per[3], 43);
        assert!(validate_bundle(&b).is_empty());
    }

    #[test]
    fn syllabification() {
        let g = syllabify(&phones("HH AE2 L AH0 L UW1 Y AH0"));
        let s: Vec<String> = g
            .iter()
            .map(|x| x.iter().map(ToString::to_string).collect::<Vec<_>>().join(" "))
            .collect();
        assert_eq!(s, vec!["HH AE2", "L AH0", "L UW1", "Y AH0"]);
        let g = syllabify(&phones("AH0 M EY1 N"));
        assert_eq!(g.len(), 2);
        let g = syllabify(&phones("S T AA1 P S"));
        assert_eq!(g.len(), 1);
        let g = syllabify(&phones("AE1 N D R OW0"));
        assert_eq!(g[0], phones("AE1 N"));
    }

    #[test]
    fn unknown_lyric_reports_event() {
        let part = ScorePart::new(
            "U",
            vec![ScoreEvent::rest(0.5), ScoreEvent::note(60, 1.0, Some(Syllable::single("zzxq")))],
        );
        match compile_part(&part, &Lexicon::bundled(), &clock()) {
            Err(ScoreError::Lyric { event: 1, .. }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn score_replication_and_padding() {
        let a = ScorePart::new("A", vec![ScoreEvent::note(60, 1.0, Some(Syllable::single("ah")))]);
        let mut b = ScorePart::new("B", vec![ScoreEvent::note(64, 1.0, Some(Syllable::single("oh")))]);
        b.events.push(ScoreEvent::rest(4.0 * 256.0 / 22050.0));
        let lex = Lexicon::bundled();
        let c = clock();
        assert_eq!(compile_part(&a, &lex, &c).unwrap().num_frames(), 86);
        assert_eq!(compile_part(&b, &lex, &c).unwrap().num_frames(), 90);
        let out = compile_score(&[a.clone(), b], &lex, &c, 3).unwrap();
        assert_eq!(out.len(), 6);
        assert!(out.iter().all(|x| x.num_frames() == 90 && validate_bundle(x).is_empty()));
        assert_eq!(out.iter().map(|x| x.speaker_id).collect::<Vec<_>>(), vec![0, 1, 2, 3, 4, 5]);
        assert_eq!(out[0].phonemes.to_string(), "AA1 SIL");
        let single = compile_score(std::slice::from_ref(&a), &lex, &c, 1).unwrap();
        assert_eq!(single, vec![compile_part(&a, &lex, &c).unwrap()]);
        assert_eq!(compile_score(&[a], &lex, &c, 0), Err(ScoreError::NoVoices));
    }

    #[test]
    fn transpose_shifts_pitch() {
        let mut p = ScorePart::new("T", vec![ScoreEvent::note(57, 0.5, Some(Syllable::single("ah")))]);
        p.transpose = 12;
        let b = compile_part(&p, &Lexicon::bundled(), &clock()).unwrap();
        assert_eq!(b.contour.f0[0], 440.0);
    }

    fn arb_part() -> impl Strategy<Value = ScorePart> {
        let words = ["ah", "bass", "love", "sing", "sweet", "light", "stop", "oh", ""];
        prop::collection::vec((prop::option::of(48u8..84), 0.15f64..2.0, 0usize..words.len()), 1..12).prop_map(
            move |evs| {
                let events = evs
                    .into_iter()
                    .map(|(midi, d, w)| match midi {
                        None => ScoreEvent::rest(d),
                        Some(m) => {
                            let syl = (!words[w].is_empty()).then(|| Syllable::single(words[w]));
                            ScoreEvent::note(m, d, syl)
                        }
                    })
                    .collect();
                ScorePart::new("P", events)
            },
        )
    }

    proptest! {
        #[test]
        fn compiled_parts_are_valid_and_conserve_frames(part in arb_part()) {
            let c = clock();
            let b = compile_part(&part, &Lexicon::bundled(), &c).unwrap();
            prop_assert!(validate_bundle(&b).is_empty());
            prop_assert!(b.alignment.is_hard());
            let expected: usize = part.events.iter().map(|e| duration_to_frames(e.duration, &c).unwrap()).sum();
            prop_assert_eq!(b.num_frames(), expected);
            // every voiced frame carries the pitch of the event covering it
            let mut frame = 0;
            for e in &part.events {
                let n = duration_to_frames(e.duration, &c).unwrap();
                for f in frame..frame + n {
                    if b.contour.voiced[f] {
                        prop_assert_eq!(b.contour.f0[f], midi_to_hz(f64::from(e.midi.unwrap())).unwrap() as f32);
                    }
                }
                frame += n;
            }
        }

        #[test]
        fn durations_sum_to_event_frames(d in 0.1f64..3.0, word in 0usize..4) {
            let sets = ["B AE1 S", "S T AA1 P S", "L AH1 V", "HH AE2 L AH0 L UW1 Y AH0"];
            let e = ScoreEvent::note(60, d, None);
            let c = clock();
            let out = assign_phone_durations(&e, &phones(sets[word]), &c).unwrap();
            prop_assert_eq!(out.iter().map(|p| p.1).sum::<usize>(), duration_to_frames(d, &c).unwrap());
        }
    }
}
