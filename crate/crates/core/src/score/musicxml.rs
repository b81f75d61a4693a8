//! Partwise MusicXML reader.
//!
//! Positions are tracked in quarter notes per part; tempo marks from every
//! part are merged into one global tempo map that converts positions to
//! seconds once all parts are read.

use std::collections::HashMap;

use roxmltree::{Document, Node};

use super::{EventKind, ScoreError, ScoreEvent, ScorePart, Syllabic, Syllable};

/// Tempo used when a score has no marking at its start.
pub const DEFAULT_TEMPO: f64 = 120.0;

const EPS: f64 = 1e-9;

#[derive(Debug, Clone)]
struct RawEvent {
    kind: EventKind,
    midi: Option<u8>,
    start: f64,
    end: f64,
    syllable: Option<Syllable>,
    tie_open: bool,
}

struct PartReader<'a> {
    doc: &'a Document<'a>,
    part: String,
    measure: String,
    divisions: Option<f64>,
    measure_quarters: f64,
    transpose: i32,
    pos: f64,
    voice: Option<String>,
    events: Vec<RawEvent>,
    tempos: Vec<(f64, f64)>,
}

fn child<'a, 'i>(node: Node<'a, 'i>, name: &str) -> Option<Node<'a, 'i>> {
    node.children().find(|c| c.has_tag_name(name))
}

fn child_text<'a>(node: Node<'a, '_>, name: &str) -> Option<&'a str> {
    child(node, name).and_then(|c| c.text()).map(str::trim)
}

fn type_quarters(name: &str) -> Option<f64> {
    Some(match name {
        "maxima" => 32.0,
        "long" => 16.0,
        "breve" => 8.0,
        "whole" => 4.0,
        "half" => 2.0,
        "quarter" => 1.0,
        "eighth" => 0.5,
        "16th" => 0.25,
        "32nd" => 0.125,
        "64th" => 0.0625,
        "128th" => 0.03125,
        _ => return None,
    })
}

fn with_dots(quarters: f64, dots: usize) -> f64 {
    (0..=dots).map(|d| quarters / f64::from(1u32 << d)).sum()
}

impl<'a> PartReader<'a> {
    fn line(&self, node: Node) -> u32 {
        self.doc.text_pos_at(node.range().start).row
    }

    fn unsupported(&self, node: Node) -> ScoreError {
        ScoreError::Unsupported {
            element: node.tag_name().name().to_string(),
            line: self.line(node),
        }
    }

    fn number<T: std::str::FromStr>(&self, node: Node, name: &str) -> Result<Option<T>, ScoreError> {
        match child(node, name) {
            None => Ok(None),
            Some(c) => {
                let text = c.text().unwrap_or("").trim();
                text.parse().map(Some).map_err(|_| ScoreError::InvalidValue {
                    element: name.to_string(),
                    value: text.to_string(),
                    line: self.line(c),
                })
            }
        }
    }

    /// Converts a `<duration>` child to quarters, if present.
    fn duration(&self, node: Node) -> Result<Option<f64>, ScoreError> {
        let Some(d) = self.number::<f64>(node, "duration")? else {
            return Ok(None);
        };
        let div = self.divisions.ok_or_else(|| ScoreError::MissingDivisions {
            part: self.part.clone(),
            measure: self.measure.clone(),
            line: self.line(node),
        })?;
        Ok(Some(d / div))
    }

    fn attributes(&mut self, node: Node) -> Result<(), ScoreError> {
        if let Some(div) = self.number::<f64>(node, "divisions")? {
            if !(div > 0.0) {
                return Err(ScoreError::InvalidValue {
                    element: "divisions".into(),
                    value: div.to_string(),
                    line: self.line(node),
                });
            }
            self.divisions = Some(div);
        }
        if let Some(time) = child(node, "time") {
            let beats: Option<String> = self.number(time, "beats")?;
            let beat_type: Option<f64> = self.number(time, "beat-type")?;
            if let (Some(beats), Some(beat_type)) = (beats, beat_type) {
                // compound signatures such as "3+2" add up
                let total: f64 = beats.split('+').filter_map(|b| b.trim().parse::<f64>().ok()).sum();
                self.measure_quarters = total * 4.0 / beat_type;
            }
        }
        if let Some(tr) = child(node, "transpose") {
            let chromatic: i32 = self.number::<f64>(tr, "chromatic")?.unwrap_or(0.0) as i32;
            let octaves: i32 = self.number(tr, "octave-change")?.unwrap_or(0);
            self.transpose = chromatic + 12 * octaves;
        }
        Ok(())
    }

    fn direction(&mut self, node: Node) -> Result<(), ScoreError> {
        if let Some(sound) = child(node, "sound") {
            if self.sound(sound)? {
                return Ok(());
            }
        }
        for dt in node.children().filter(|c| c.has_tag_name("direction-type")) {
            if let Some(m) = child(dt, "metronome") {
                let unit = child_text(m, "beat-unit").and_then(type_quarters);
                let per_minute: Option<f64> = child_text(m, "per-minute").and_then(|t| t.parse().ok());
                if let (Some(unit), Some(pm)) = (unit, per_minute) {
                    let dots = m.children().filter(|c| c.has_tag_name("beat-unit-dot")).count();
                    self.tempos.push((self.pos, pm * with_dots(unit, dots)));
                }
            }
        }
        Ok(())
    }

    /// Records `<sound tempo>`; returns whether a tempo was found.
    fn sound(&mut self, node: Node) -> Result<bool, ScoreError> {
        match node.attribute("tempo") {
            None => Ok(false),
            Some(t) => {
                let bpm: f64 = t.trim().parse().map_err(|_| ScoreError::InvalidValue {
                    element: "sound@tempo".into(),
                    value: t.to_string(),
                    line: self.line(node),
                })?;
                if bpm > 0.0 {
                    self.tempos.push((self.pos, bpm));
                }
                Ok(bpm > 0.0)
            }
        }
    }

    fn note(&mut self, node: Node) -> Result<(), ScoreError> {
        if child(node, "grace").is_some() || child(node, "cue").is_some() {
            return Ok(());
        }
        if let Some(u) = child(node, "unpitched") {
            return Err(self.unsupported(u));
        }
        let rest = child(node, "rest");
        let quarters = match self.duration(node)? {
            Some(q) => q,
            None => {
                let from_type = child_text(node, "type").and_then(type_quarters).map(|q| {
                    with_dots(q, node.children().filter(|c| c.has_tag_name("dot")).count())
                });
                match (from_type, rest) {
                    (Some(q), _) => q,
                    (None, Some(r)) if r.attribute("measure") == Some("yes") => self.measure_quarters,
                    _ => {
                        return Err(ScoreError::MissingDuration {
                            part: self.part.clone(),
                            measure: self.measure.clone(),
                            line: self.line(node),
                        })
                    }
                }
            }
        };
        if child(node, "chord").is_some() {
            return Ok(());
        }
        let start = self.pos;
        self.pos += quarters;

        let voice = child_text(node, "voice").unwrap_or("1").to_string();
        let primary = self.voice.get_or_insert_with(|| voice.clone());
        if *primary != voice || quarters <= EPS {
            return Ok(());
        }

        let ties: Vec<&str> = node
            .children()
            .filter(|c| c.has_tag_name("tie"))
            .chain(
                child(node, "notations")
                    .into_iter()
                    .flat_map(|n| n.children().filter(|c| c.has_tag_name("tied"))),
            )
            .filter_map(|t| t.attribute("type"))
            .collect();
        let tie_stop = ties.contains(&"stop");
        let tie_start = ties.contains(&"start") || ties.contains(&"continue");

        if rest.is_some() {
            self.events.push(RawEvent {
                kind: EventKind::Rest,
                midi: None,
                start,
                end: start + quarters,
                syllable: None,
                tie_open: false,
            });
            return Ok(());
        }

        let pitch = child(node, "pitch").ok_or_else(|| ScoreError::MissingPitch {
            line: self.line(node),
        })?;
        let step = child_text(pitch, "step").unwrap_or("");
        let base = match step {
            "C" => 0,
            "D" => 2,
            "E" => 4,
            "F" => 5,
            "G" => 7,
            "A" => 9,
            "B" => 11,
            _ => {
                return Err(ScoreError::InvalidValue {
                    element: "step".into(),
                    value: step.to_string(),
                    line: self.line(pitch),
                })
            }
        };
        let alter: f64 = self.number(pitch, "alter")?.unwrap_or(0.0);
        let octave: i32 = self.number(pitch, "octave")?.ok_or_else(|| ScoreError::MissingPitch {
            line: self.line(pitch),
        })?;
        let midi = (octave + 1) * 12 + base + alter.round() as i32 + self.transpose;
        let midi = u8::try_from(midi)
            .ok()
            .filter(|&m| m <= 127)
            .ok_or(ScoreError::MidiOutOfRange(f64::from(midi)))?;

        if tie_stop {
            if let Some(prev) = self.events.last_mut() {
                if prev.tie_open && prev.midi == Some(midi) && (prev.end - start).abs() < EPS {
                    prev.end = start + quarters;
                    prev.tie_open = tie_start;
                    return Ok(());
                }
            }
        }

        let syllable = node
            .children()
            .find(|c| c.has_tag_name("lyric"))
            .and_then(|l| {
                let text = child_text(l, "text")?;
                let syllabic = match child_text(l, "syllabic") {
                    Some("begin") => Syllabic::Begin,
                    Some("middle") => Syllabic::Middle,
                    Some("end") => Syllabic::End,
                    _ => Syllabic::Single,
                };
                Some(Syllable {
                    text: text.to_string(),
                    syllabic,
                })
            });
        self.events.push(RawEvent {
            kind: EventKind::Note,
            midi: Some(midi),
            start,
            end: start + quarters,
            syllable,
            tie_open: tie_start,
        });
        Ok(())
    }

    fn read(&mut self, part: Node) -> Result<(), ScoreError> {
        for measure in part.children().filter(|c| c.has_tag_name("measure")) {
            self.measure = measure.attribute("number").unwrap_or("?").to_string();
            let measure_start = self.pos;
            let mut measure_end = self.pos;
            for el in measure.children().filter(Node::is_element) {
                match el.tag_name().name() {
                    "attributes" => self.attributes(el)?,
                    "direction" => self.direction(el)?,
                    "sound" => {
                        self.sound(el)?;
                    }
                    "note" => self.note(el)?,
                    "backup" => {
                        let q = self.duration(el)?.unwrap_or(0.0);
                        self.pos = (self.pos - q).max(measure_start);
                    }
                    "forward" => self.pos += self.duration(el)?.unwrap_or(0.0),
                    _ => {}
                }
                measure_end = measure_end.max(self.pos);
            }
            self.pos = measure_end;
        }
        Ok(())
    }
}

/// Piecewise-constant tempo over quarter-note positions.
struct TempoMap {
    marks: Vec<(f64, f64)>,
}

impl TempoMap {
    fn new(mut marks: Vec<(f64, f64)>) -> Self {
        marks.sort_by(|a, b| a.0.total_cmp(&b.0));
        marks.dedup_by(|b, a| (a.0 - b.0).abs() < EPS);
        if marks.first().is_none_or(|m| m.0 > EPS) {
            marks.insert(0, (0.0, DEFAULT_TEMPO));
        }
        Self { marks }
    }

    fn seconds(&self, q: f64) -> f64 {
        let mut t = 0.0;
        for (i, &(start, bpm)) in self.marks.iter().enumerate() {
            let end = self.marks.get(i + 1).map_or(f64::INFINITY, |m| m.0);
            if q <= start {
                break;
            }
            t += (q.min(end) - start) * 60.0 / bpm;
        }
        t
    }

    fn initial(&self) -> f64 {
        self.marks[0].1
    }
}

/// Parses a partwise MusicXML document into one [`ScorePart`] per part,
/// following the first voice that appears in each part.
pub fn parse_musicxml(document: &str) -> Result<Vec<ScorePart>, ScoreError> {
    let opts = roxmltree::ParsingOptions {
        allow_dtd: true,
        ..Default::default()
    };
    let doc = Document::parse_with_options(document, opts).map_err(|e| ScoreError::Xml(e.to_string()))?;
    let root = doc.root_element();
    if root.tag_name().name() != "score-partwise" {
        return Err(ScoreError::Unsupported {
            element: root.tag_name().name().to_string(),
            line: doc.text_pos_at(root.range().start).row,
        });
    }

    let names: HashMap<&str, &str> = child(root, "part-list")
        .into_iter()
        .flat_map(|pl| pl.children().filter(|c| c.has_tag_name("score-part")))
        .filter_map(|sp| Some((sp.attribute("id")?, child_text(sp, "part-name").unwrap_or(""))))
        .collect();

    let mut raw_parts = Vec::new();
    let mut all_tempos = Vec::new();
    for part in root.children().filter(|c| c.has_tag_name("part")) {
        let id = part.attribute("id").unwrap_or("").to_string();
        let mut reader = PartReader {
            doc: &doc,
            part: id.clone(),
            measure: String::new(),
            divisions: None,
            measure_quarters: 4.0,
            transpose: 0,
            pos: 0.0,
            voice: None,
            events: Vec::new(),
            tempos: Vec::new(),
        };
        reader.read(part)?;
        if reader.events.is_empty() {
            return Err(ScoreError::EmptyPart { part: id });
        }
        all_tempos.extend(reader.tempos);
        let name = names.get(id.as_str()).map_or_else(|| id.clone(), |n| n.to_string());
        raw_parts.push((name, fill_gaps(reader.events)));
    }
    if raw_parts.is_empty() {
        return Err(ScoreError::NoParts);
    }

    let tempo = TempoMap::new(all_tempos);
    Ok(raw_parts
        .into_iter()
        .map(|(name, raw)| ScorePart {
            name,
            tempo: tempo.initial(),
            transpose: 0,
            events: raw
                .into_iter()
                .map(|r| ScoreEvent {
                    kind: r.kind,
                    midi: r.midi,
                    duration: tempo.seconds(r.end) - tempo.seconds(r.start),
                    syllable: r.syllable,
                })
                .collect(),
        })
        .collect())
}

/// Inserts rests where the followed voice is silent.
fn fill_gaps(events: Vec<RawEvent>) -> Vec<RawEvent> {
    let mut out: Vec<RawEvent> = Vec::with_capacity(events.len());
    let mut cursor = 0.0;
    for e in events {
        if e.start > cursor + EPS {
            out.push(RawEvent {
                kind: EventKind::Rest,
                midi: None,
                start: cursor,
                end: e.start,
                syllable: None,
                tie_open: false,
            });
        }
        cursor = cursor.max(e.end);
        out.push(e);
    }
    out
}
