//! Rhythm as alignment maps: construction from phone intervals or per-token
//! frame durations, and procedural time warps driven by a rate curve.
//!
//! A warp assigns each source frame `f` an output duration of
//! `1 / rate((f + 0.5) / F)` frames. Output frame centers are mapped back
//! through the cumulative duration array and the source columns on either
//! side are blended linearly.

use std::str::FromStr;

use thiserror::Error;

use crate::bundle::{AlignmentMap, AlignmentWeights, ConditioningBundle, PhonemeSequence, PitchContour};
use crate::clock::AudioClock;
use crate::phone::Phone;

/// Slack, in seconds, allowed when intervals end just past the clip.
const END_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RhythmError {
    #[error("duration {0} s is negative or not finite")]
    NegativeDuration(f64),
    #[error("interval {index}: need 0 <= start < end, got [{start}, {end}]")]
    InvalidInterval { index: usize, start: f64, end: f64 },
    #[error("interval {index} overlaps or precedes the previous interval")]
    Unsorted { index: usize },
    #[error("intervals end at {end} s but the clip is only {total} s")]
    ExceedsClip { end: f64, total: f64 },
    #[error("interval {index}: phone {found} does not match expected {expected}")]
    PhoneMismatch { index: usize, expected: String, found: String },
    #[error("interval {index}: phone {found} has no remaining token to align to")]
    ExtraInterval { index: usize, found: String },
    #[error("token {token} ({phone}) and later tokens have no interval")]
    MissingPhones { token: usize, phone: String },
    #[error("durations must contain at least one non-zero entry")]
    AllZeroDurations,
    #[error("warping needs at least two frames, got {0}")]
    TooFewFrames(usize),
    #[error("invalid rate curve: {0}")]
    RateCurve(String),
    #[error("interval file line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Seconds → frames, rounding half to even.
pub fn duration_to_frames(seconds: f64, clock: &AudioClock) -> Result<usize, RhythmError> {
    if !(seconds >= 0.0) || !seconds.is_finite() {
        return Err(RhythmError::NegativeDuration(seconds));
    }
    Ok((seconds * clock.frame_rate()).round_ties_even() as usize)
}

/// One labelled span from a forced aligner.
#[derive(Debug, Clone, PartialEq)]
pub struct PhoneInterval {
    pub phone: Phone,
    pub start: f64,
    pub end: f64,
}

/// Parses `phone<TAB>start_sec<TAB>end_sec` lines. Labels `sil`, `sp`,
/// `<sil>` and empty labels mean silence; `#` starts a comment line.
pub fn parse_intervals(text: &str) -> Result<Vec<PhoneInterval>, RhythmError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let err = |message: String| RhythmError::Parse { line: i + 1, message };
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 3 {
            return Err(err(format!("expected 3 tab-separated columns, got {}", cols.len())));
        }
        let label = cols[0].trim();
        let phone = match label.to_ascii_lowercase().as_str() {
            "" | "sil" | "sp" | "<sil>" | "spn" => Phone::SIL,
            _ => label
                .to_ascii_uppercase()
                .parse()
                .map_err(|e: crate::phone::PhoneError| err(e.to_string()))?,
        };
        let num = |s: &str| s.trim().parse::<f64>().map_err(|e| err(format!("{s:?}: {e}")));
        out.push(PhoneInterval {
            phone,
            start: num(cols[1])?,
            end: num(cols[2])?,
        });
    }
    Ok(out)
}

enum Segment {
    Token(usize),
    /// Uncovered time with no silence token to absorb it.
    Hold,
}

/// Hard alignment whose frame `f` attends the token whose interval contains
/// the frame center `(f + 0.5) · hop / sample_rate`.
///
/// Gaps between intervals are taken by a `SIL` token when one is next in
/// `phonemes`; otherwise they extend the preceding token. `SIL` tokens with
/// no matching gap are kept with zero frames.
pub fn alignment_from_intervals(
    intervals: &[PhoneInterval],
    phonemes: &PhonemeSequence,
    total_frames: usize,
    clock: &AudioClock,
) -> Result<AlignmentMap, RhythmError> {
    let total = total_frames as f64 / clock.frame_rate();
    let mut prev_end = 0.0;
    for (index, iv) in intervals.iter().enumerate() {
        if !(iv.start >= 0.0 && iv.start < iv.end) {
            return Err(RhythmError::InvalidInterval {
                index,
                start: iv.start,
                end: iv.end,
            });
        }
        if iv.start < prev_end {
            return Err(RhythmError::Unsorted { index });
        }
        prev_end = iv.end;
    }
    if prev_end > total + END_TOLERANCE {
        return Err(RhythmError::ExceedsClip { end: prev_end, total });
    }

    // time-ordered segments, gaps included
    type Span = (f64, f64, Option<(usize, Phone)>);
    let mut spans: Vec<Span> = Vec::new();
    let mut cursor = 0.0;
    for (i, iv) in intervals.iter().enumerate() {
        if iv.start > cursor {
            spans.push((cursor, iv.start, None));
        }
        spans.push((iv.start, iv.end, Some((i, iv.phone))));
        cursor = iv.end;
    }
    if total > cursor {
        spans.push((cursor, total, None));
    }

    let tokens = &phonemes.tokens;
    let mut next = 0usize;
    let mut segments = Vec::with_capacity(spans.len());
    for &(_, _, label) in &spans {
        let seg = match label {
            Some((index, phone)) if !phone.is_silence() => {
                while next < tokens.len() && tokens[next].is_silence() {
                    next += 1;
                }
                let Some(&expected) = tokens.get(next) else {
                    return Err(RhythmError::ExtraInterval {
                        index,
                        found: phone.to_string(),
                    });
                };
                if !expected.same_base(phone) {
                    return Err(RhythmError::PhoneMismatch {
                        index,
                        expected: expected.to_string(),
                        found: phone.to_string(),
                    });
                }
                next += 1;
                Segment::Token(next - 1)
            }
            // silence interval or gap
            _ => {
                if tokens.get(next).is_some_and(|p| p.is_silence()) {
                    next += 1;
                    Segment::Token(next - 1)
                } else {
                    Segment::Hold
                }
            }
        };
        segments.push(seg);
    }
    if let Some(token) = (next..tokens.len()).find(|&t| !tokens[t].is_silence()) {
        return Err(RhythmError::MissingPhones {
            token,
            phone: tokens[token].to_string(),
        });
    }

    // resolve holds: previous assigned token, else the first assigned one
    let first_assigned = segments
        .iter()
        .find_map(|s| match s {
            Segment::Token(t) => Some(*t),
            Segment::Hold => None,
        })
        .unwrap_or(0);
    let mut resolved = Vec::with_capacity(segments.len());
    let mut last = first_assigned;
    for s in &segments {
        if let Segment::Token(t) = s {
            last = *t;
        }
        resolved.push(last);
    }

    let mut path = Vec::with_capacity(total_frames);
    let mut seg = 0;
    for f in 0..total_frames {
        let center = (f as f64 + 0.5) / clock.frame_rate();
        while seg + 1 < spans.len() && center >= spans[seg].1 {
            seg += 1;
        }
        path.push(resolved.get(seg).copied().unwrap_or(first_assigned) as u32);
    }
    Ok(AlignmentMap::hard(tokens.len(), path))
}

/// Token `t` occupies the next `frame_durations[t]` frames.
pub fn alignment_from_durations(frame_durations: &[usize]) -> Result<AlignmentMap, RhythmError> {
    if frame_durations.iter().all(|&d| d == 0) {
        return Err(RhythmError::AllZeroDurations);
    }
    let path = frame_durations
        .iter()
        .enumerate()
        .flat_map(|(t, &d)| std::iter::repeat_n(t as u32, d))
        .collect();
    Ok(AlignmentMap::hard(frame_durations.len(), path))
}

/// Piecewise-linear playback rate over normalized source position `[0, 1]`.
/// Rate 2 plays the source twice as fast.
#[derive(Debug, Clone, PartialEq)]
pub struct RateCurve {
    breakpoints: Vec<(f64, f64)>,
}

impl RateCurve {
    pub fn new(breakpoints: Vec<(f64, f64)>) -> Result<Self, RhythmError> {
        let bad = |m: &str| Err(RhythmError::RateCurve(m.to_string()));
        if breakpoints.len() < 2 {
            return bad("need at least two breakpoints");
        }
        if breakpoints[0].0 != 0.0 || breakpoints[breakpoints.len() - 1].0 != 1.0 {
            return bad("positions must start at 0 and end at 1");
        }
        if breakpoints.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return bad("positions must be strictly increasing");
        }
        if breakpoints.iter().any(|&(_, r)| !(r > 0.0 && r.is_finite())) {
            return bad("rates must be positive");
        }
        Ok(Self { breakpoints })
    }

    pub fn constant(rate: f64) -> Result<Self, RhythmError> {
        Self::new(vec![(0.0, rate), (1.0, rate)])
    }

    /// Linear ramp from `from` at the start to `to` at the end.
    pub fn linear(from: f64, to: f64) -> Result<Self, RhythmError> {
        Self::new(vec![(0.0, from), (1.0, to)])
    }

    pub fn breakpoints(&self) -> &[(f64, f64)] {
        &self.breakpoints
    }

    pub fn rate_at(&self, position: f64) -> f64 {
        let u = position.clamp(0.0, 1.0);
        let i = self
            .breakpoints
            .partition_point(|&(p, _)| p <= u)
            .clamp(1, self.breakpoints.len() - 1);
        let (p0, r0) = self.breakpoints[i - 1];
        let (p1, r1) = self.breakpoints[i];
        r0 + (r1 - r0) * (u - p0) / (p1 - p0)
    }
}

impl FromStr for RateCurve {
    type Err = RhythmError;

    /// `"0:0.5,1:2.0"`: comma-separated `position:rate` pairs.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let points = s
            .split(',')
            .map(|pair| {
                let (p, r) = pair
                    .split_once(':')
                    .ok_or_else(|| RhythmError::RateCurve(format!("{pair:?} is not position:rate")))?;
                let num = |x: &str| {
                    x.trim()
                        .parse::<f64>()
                        .map_err(|e| RhythmError::RateCurve(format!("{x:?}: {e}")))
                };
                Ok((num(p)?, num(r)?))
            })
            .collect::<Result<Vec<_>, RhythmError>>()?;
        Self::new(points)
    }
}

/// Cumulative output time at each source frame boundary.
struct TimeMap {
    cum: Vec<f64>,
    out_frames: usize,
}

impl TimeMap {
    fn new(source_frames: usize, curve: &RateCurve) -> Self {
        let n = source_frames as f64;
        let mut cum = Vec::with_capacity(source_frames + 1);
        cum.push(0.0);
        let mut t = 0.0;
        for f in 0..source_frames {
            t += 1.0 / curve.rate_at((f as f64 + 0.5) / n);
            cum.push(t);
        }
        let out_frames = (t.round_ties_even() as usize).max(1);
        Self { cum, out_frames }
    }

    /// Continuous source position (in frames) reached at output time `t`.
    fn source_position(&self, t: f64) -> f64 {
        let last = self.cum.len() - 2;
        let f = self.cum.partition_point(|&c| c <= t).saturating_sub(1).min(last);
        f as f64 + (t - self.cum[f]) / (self.cum[f + 1] - self.cum[f])
    }

    /// Source column coordinate sampled by output frame `g` (frame centers map to centers).
    fn column_coordinate(&self, g: usize) -> f64 {
        let last = (self.cum.len() - 2) as f64;
        (self.source_position(g as f64 + 0.5) - 0.5).clamp(0.0, last)
    }
}

/// Resamples an alignment map in time under `curve`. Output column `g`
/// blends the two source columns around the mapped position and is
/// renormalized to sum to 1. Hard maps stay hard when no column is blended.
pub fn warp_alignment(map: &AlignmentMap, curve: &RateCurve) -> Result<AlignmentMap, RhythmError> {
    let frames = map.num_frames();
    if frames < 2 {
        return Err(RhythmError::TooFewFrames(frames));
    }
    let tm = TimeMap::new(frames, curve);
    let tokens = map.num_tokens();
    let out_frames = tm.out_frames;
    let samples: Vec<(usize, usize, f64)> = (0..out_frames)
        .map(|g| {
            let c = tm.column_coordinate(g);
            let i0 = c.floor() as usize;
            (i0, (i0 + 1).min(frames - 1), c - i0 as f64)
        })
        .collect();

    if let AlignmentWeights::Hard(path) = map.weights() {
        let one_hot = samples
            .iter()
            .all(|&(i0, i1, frac)| frac == 0.0 || path[i0] == path[i1]);
        if one_hot {
            return Ok(AlignmentMap::hard(tokens, samples.iter().map(|&(i0, _, _)| path[i0]).collect()));
        }
    }

    let mut out = vec![0.0f32; tokens * out_frames];
    let mut col = vec![0.0f64; tokens];
    for (g, &(i0, i1, frac)) in samples.iter().enumerate() {
        for (t, c) in col.iter_mut().enumerate() {
            *c = (1.0 - frac) * f64::from(map.weight(t, i0)) + frac * f64::from(map.weight(t, i1));
        }
        let sum: f64 = col.iter().sum();
        for (t, &c) in col.iter().enumerate() {
            out[t * out_frames + g] = if sum > 0.0 { (c / sum) as f32 } else { 0.0 };
        }
    }
    Ok(AlignmentMap::soft(tokens, out_frames, out))
}

/// Resamples a contour under the same warp as [`warp_alignment`]. Each output
/// frame is voiced if any source frame it covers is voiced, and takes the f0
/// of the voiced source frame nearest its center.
pub fn warp_contour(contour: &PitchContour, curve: &RateCurve) -> Result<PitchContour, RhythmError> {
    let frames = contour.len();
    if frames < 2 {
        return Err(RhythmError::TooFewFrames(frames));
    }
    let tm = TimeMap::new(frames, curve);
    let last = frames - 1;
    let mut f0 = Vec::with_capacity(tm.out_frames);
    let mut voiced = Vec::with_capacity(tm.out_frames);
    for g in 0..tm.out_frames {
        let center = tm.column_coordinate(g);
        let nearest = center.round() as usize;
        let lo = (tm.source_position(g as f64).floor() as usize).min(last).min(nearest);
        let hi = ((tm.source_position(g as f64 + 1.0).ceil() as usize).saturating_sub(1))
            .min(last)
            .max(nearest);
        let pick = (lo..=hi)
            .filter(|&i| contour.voiced[i])
            .min_by(|&a, &b| (a as f64 - center).abs().total_cmp(&(b as f64 - center).abs()));
        match pick {
            Some(i) => {
                f0.push(contour.f0[i]);
                voiced.push(true);
            }
            None => {
                f0.push(0.0);
                voiced.push(false);
            }
        }
    }
    Ok(PitchContour::new(f0, voiced))
}

/// Warps a bundle's alignment and contour together; other fields are kept.
pub fn warp_bundle(bundle: &ConditioningBundle, curve: &RateCurve) -> Result<ConditioningBundle, RhythmError> {
    Ok(ConditioningBundle {
        alignment: warp_alignment(&bundle.alignment, curve)?,
        contour: warp_contour(&bundle.contour, curve)?,
        ..bundle.clone()
    })
}
