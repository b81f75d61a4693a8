//! Conditioning data model: phonemes (T), speaker (S), pitch contour (P),
//! alignment map (R) and an opaque style-token id (Z).
//!
//! Constructors here do not enforce invariants; [`validate_bundle`] and the
//! `violations` methods report every broken rule so that corrupt input can be
//! diagnosed instead of rejected wholesale.

use std::fmt;

use crate::clock::{AudioClock, ClockError};
use crate::phone::Phone;

/// Column sums of an alignment map must be within this of 1.
pub const COLUMN_SUM_TOLERANCE: f64 = 1e-6;

/// Per-frame f0 in Hz with voicing flags. Unvoiced frames carry exactly 0.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PitchContour {
    pub f0: Vec<f32>,
    pub voiced: Vec<bool>,
}

impl PitchContour {
    pub fn new(f0: Vec<f32>, voiced: Vec<bool>) -> Self {
        Self { f0, voiced }
    }

    /// Builds a contour from f0 values, treating every positive value as voiced.
    pub fn from_f0(f0: Vec<f32>) -> Self {
        let voiced = f0.iter().map(|&f| f > 0.0).collect();
        Self { f0, voiced }
    }

    pub fn len(&self) -> usize {
        self.f0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.f0.is_empty()
    }

    pub fn num_voiced(&self) -> usize {
        self.voiced.iter().filter(|&&v| v).count()
    }

    /// Voiced f0 values must stay below `nyquist`.
    pub fn violations(&self, nyquist: f64) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.f0.len() != self.voiced.len() {
            out.push(Violation::ContourLengthMismatch {
                f0: self.f0.len(),
                voiced: self.voiced.len(),
            });
        }
        for (frame, (&f0, &voiced)) in self.f0.iter().zip(&self.voiced).enumerate() {
            if !f0.is_finite() || f0 < 0.0 {
                out.push(Violation::F0NotFinite { frame, f0 });
            } else if voiced && f0 == 0.0 {
                out.push(Violation::VoicedWithoutF0 { frame });
            } else if !voiced && f0 != 0.0 {
                out.push(Violation::UnvoicedWithF0 { frame, f0 });
            } else if voiced && f64::from(f0) >= nyquist {
                out.push(Violation::F0AboveNyquist { frame, f0 });
            }
        }
        out
    }
}

/// Ordered phone tokens.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PhonemeSequence {
    pub tokens: Vec<Phone>,
}

impl PhonemeSequence {
    pub fn new(tokens: Vec<Phone>) -> Self {
        Self { tokens }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Phone> {
        self.tokens.iter()
    }
}

impl fmt::Display for PhonemeSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, p) in self.tokens.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{p}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AlignmentWeights {
    /// One attended token index per frame.
    Hard(Vec<u32>),
    /// Dense token × frame weights, row-major.
    Soft(Vec<f32>),
}

/// Token × frame attention matrix. Every column is a distribution over tokens.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentMap {
    num_tokens: usize,
    num_frames: usize,
    weights: AlignmentWeights,
}

impl AlignmentMap {
    pub fn hard(num_tokens: usize, path: Vec<u32>) -> Self {
        Self {
            num_tokens,
            num_frames: path.len(),
            weights: AlignmentWeights::Hard(path),
        }
    }

    /// `weights` is row-major with `num_tokens` rows of `num_frames` entries.
    pub fn soft(num_tokens: usize, num_frames: usize, weights: Vec<f32>) -> Self {
        Self {
            num_tokens,
            num_frames,
            weights: AlignmentWeights::Soft(weights),
        }
    }

    pub fn num_tokens(&self) -> usize {
        self.num_tokens
    }

    pub fn num_frames(&self) -> usize {
        self.num_frames
    }

    pub fn weights(&self) -> &AlignmentWeights {
        &self.weights
    }

    pub fn is_hard(&self) -> bool {
        matches!(self.weights, AlignmentWeights::Hard(_))
    }

    pub fn weight(&self, token: usize, frame: usize) -> f32 {
        match &self.weights {
            AlignmentWeights::Hard(path) => {
                if path[frame] as usize == token {
                    1.0
                } else {
                    0.0
                }
            }
            AlignmentWeights::Soft(w) => w[token * self.num_frames + frame],
        }
    }

    pub fn column(&self, frame: usize) -> Vec<f32> {
        (0..self.num_tokens).map(|t| self.weight(t, frame)).collect()
    }

    /// Most attended token of a column; ties go to the lower index.
    pub fn argmax(&self, frame: usize) -> usize {
        match &self.weights {
            AlignmentWeights::Hard(path) => path[frame] as usize,
            AlignmentWeights::Soft(_) => {
                let mut best = 0;
                let mut best_w = f32::NEG_INFINITY;
                for t in 0..self.num_tokens {
                    let w = self.weight(t, frame);
                    if w > best_w {
                        best = t;
                        best_w = w;
                    }
                }
                best
            }
        }
    }

    /// Argmax token per frame.
    pub fn token_path(&self) -> Vec<usize> {
        (0..self.num_frames).map(|f| self.argmax(f)).collect()
    }

    /// Number of frames whose argmax is each token.
    pub fn frames_per_token(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_tokens];
        for t in self.token_path() {
            if t < counts.len() {
                counts[t] += 1;
            }
        }
        counts
    }

    /// Row-major dense copy of the weights.
    pub fn to_dense(&self) -> Vec<f32> {
        match &self.weights {
            AlignmentWeights::Soft(w) => w.clone(),
            AlignmentWeights::Hard(path) => {
                let mut dense = vec![0.0; self.num_tokens * self.num_frames];
                for (f, &t) in path.iter().enumerate() {
                    if (t as usize) < self.num_tokens {
                        dense[t as usize * self.num_frames + f] = 1.0;
                    }
                }
                dense
            }
        }
    }

    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        match &self.weights {
            AlignmentWeights::Hard(path) => {
                let mut prev = 0u32;
                for (frame, &token) in path.iter().enumerate() {
                    if token as usize >= self.num_tokens {
                        out.push(Violation::TokenOutOfRange {
                            frame,
                            token,
                            num_tokens: self.num_tokens,
                        });
                    } else if token < prev {
                        out.push(Violation::NonMonotonic { frame });
                    }
                    prev = prev.max(token);
                }
            }
            AlignmentWeights::Soft(w) => {
                if w.len() != self.num_tokens * self.num_frames {
                    out.push(Violation::AlignmentShape {
                        len: w.len(),
                        num_tokens: self.num_tokens,
                        num_frames: self.num_frames,
                    });
                    return out;
                }
                for frame in 0..self.num_frames {
                    let mut sum = 0.0f64;
                    for token in 0..self.num_tokens {
                        let x = w[token * self.num_frames + frame];
                        if !x.is_finite() || x < 0.0 {
                            out.push(Violation::NegativeWeight { token, frame, weight: x });
                        }
                        sum += f64::from(x);
                    }
                    if !((sum - 1.0).abs() <= COLUMN_SUM_TOLERANCE) {
                        out.push(Violation::ColumnSum { frame, sum });
                    }
                }
            }
        }
        out
    }
}

/// The full conditioning record for one voice.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditioningBundle {
    pub clock: AudioClock,
    pub phonemes: PhonemeSequence,
    pub contour: PitchContour,
    pub alignment: AlignmentMap,
    pub speaker_id: u32,
    /// Style-token id, carried through untouched.
    pub gst_id: Option<u32>,
}

impl ConditioningBundle {
    pub fn num_frames(&self) -> usize {
        self.contour.len()
    }

    /// Total samples covered by the frames.
    pub fn num_samples(&self) -> usize {
        self.num_frames() * self.clock.hop as usize
    }
}

/// A broken bundle invariant. `Display` names the field and the rule.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Clock(ClockError),
    EmptyPhonemes,
    EmptyContour,
    ContourLengthMismatch { f0: usize, voiced: usize },
    F0NotFinite { frame: usize, f0: f32 },
    VoicedWithoutF0 { frame: usize },
    UnvoicedWithF0 { frame: usize, f0: f32 },
    F0AboveNyquist { frame: usize, f0: f32 },
    FrameCountMismatch { contour: usize, alignment: usize },
    TokenCountMismatch { alignment: usize, phonemes: usize },
    AlignmentShape { len: usize, num_tokens: usize, num_frames: usize },
    TokenOutOfRange { frame: usize, token: u32, num_tokens: usize },
    NonMonotonic { frame: usize },
    NegativeWeight { token: usize, frame: usize, weight: f32 },
    ColumnSum { frame: usize, sum: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Clock(e) => write!(f, "{e}"),
            Self::EmptyPhonemes => write!(f, "phonemes: sequence must be non-empty"),
            Self::EmptyContour => write!(f, "contour: must have at least one frame"),
            Self::ContourLengthMismatch { f0, voiced } => {
                write!(f, "contour: f0 has {f0} frames but voiced has {voiced}")
            }
            Self::F0NotFinite { frame, f0 } => {
                write!(f, "contour.f0[{frame}]: {f0} is not a finite non-negative value")
            }
            Self::VoicedWithoutF0 { frame } => write!(f, "contour.f0[{frame}]: voiced frame has f0 = 0"),
            Self::UnvoicedWithF0 { frame, f0 } => {
                write!(f, "contour.f0[{frame}]: unvoiced frame has f0 = {f0}, expected 0")
            }
            Self::F0AboveNyquist { frame, f0 } => {
                write!(f, "contour.f0[{frame}]: {f0} Hz is not below the Nyquist frequency")
            }
            Self::FrameCountMismatch { contour, alignment } => write!(
                f,
                "alignment: {alignment} frames but contour has {contour} (frame counts must agree)"
            ),
            Self::TokenCountMismatch { alignment, phonemes } => write!(
                f,
                "alignment: {alignment} tokens but phoneme sequence has {phonemes} (token counts must agree)"
            ),
            Self::AlignmentShape {
                len,
                num_tokens,
                num_frames,
            } => write!(
                f,
                "alignment: {len} weights do not fill a {num_tokens}x{num_frames} matrix"
            ),
            Self::TokenOutOfRange {
                frame,
                token,
                num_tokens,
            } => write!(
                f,
                "alignment[{frame}]: token index {token} out of range for {num_tokens} tokens"
            ),
            Self::NonMonotonic { frame } => {
                write!(f, "alignment[{frame}]: hard alignment token index decreases (must be monotonic)")
            }
            Self::NegativeWeight { token, frame, weight } => write!(
                f,
                "alignment[{token},{frame}]: weight {weight} must be finite and non-negative"
            ),
            Self::ColumnSum { frame, sum } => {
                write!(f, "alignment[:,{frame}]: column sums to {sum}, must be 1 (column-stochastic)")
            }
        }
    }
}

/// Checks every bundle invariant. An empty result means the bundle is valid.
pub fn validate_bundle(bundle: &ConditioningBundle) -> Vec<Violation> {
    let mut out = Vec::new();
    if let Err(e) = bundle.clock.validate() {
        out.push(Violation::Clock(e));
    }
    if bundle.phonemes.is_empty() {
        out.push(Violation::EmptyPhonemes);
    }
    if bundle.contour.is_empty() {
        out.push(Violation::EmptyContour);
    }
    out.extend(bundle.contour.violations(bundle.clock.nyquist()));
    if bundle.alignment.num_frames() != bundle.contour.len() {
        out.push(Violation::FrameCountMismatch {
            contour: bundle.contour.len(),
            alignment: bundle.alignment.num_frames(),
        });
    }
    if bundle.alignment.num_tokens() != bundle.phonemes.len() {
        out.push(Violation::TokenCountMismatch {
            alignment: bundle.alignment.num_tokens(),
            phonemes: bundle.phonemes.len(),
        });
    }
    out.extend(bundle.alignment.violations());
    out
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn small_bundle() -> ConditioningBundle {
        let phonemes = PhonemeSequence::new(vec![
            "B".parse().unwrap(),
            "AE1".parse().unwrap(),
            "S".parse().unwrap(),
        ]);
        ConditioningBundle {
            clock: AudioClock::default(),
            phonemes,
            contour: PitchContour::new(
                vec![0.0, 220.0, 220.0, 0.0],
                vec![false, true, true, false],
            ),
            alignment: AlignmentMap::hard(3, vec![0, 1, 1, 2]),
            speaker_id: 7,
            gst_id: None,
        }
    }

    #[test]
    fn consistent_bundle_has_no_violations() {
        assert!(validate_bundle(&small_bundle()).is_empty());
    }

    #[test]
    fn unvoiced_frame_with_f0_names_the_frame() {
        let mut b = small_bundle();
        b.contour.f0[3] = 100.0;
        let v = validate_bundle(&b);
        assert_eq!(v, vec![Violation::UnvoicedWithF0 { frame: 3, f0: 100.0 }]);
        assert!(v[0].to_string().contains("f0[3]"));
    }

    #[test]
    fn column_sum_098_is_one_violation() {
        let mut b = small_bundle();
        let mut dense = b.alignment.to_dense();
        // column 2: token 1 holds the mass; 1.0 - 0.02 = 0.98
        dense[4 + 2] = 0.98;
        b.alignment = AlignmentMap::soft(3, 4, dense);
        let v = validate_bundle(&b);
        assert_eq!(v.len(), 1);
        match v[0] {
            Violation::ColumnSum { frame, sum } => {
                assert_eq!(frame, 2);
                assert!((sum - 0.98).abs() < 1e-6);
            }
            ref other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_contour_and_count_mismatches() {
        let mut b = small_bundle();
        b.contour = PitchContour::default();
        let v = validate_bundle(&b);
        assert!(v.contains(&Violation::EmptyContour));
        assert!(v.contains(&Violation::FrameCountMismatch { contour: 0, alignment: 4 }));

        let mut b = small_bundle();
        b.phonemes.tokens.pop();
        let v = validate_bundle(&b);
        assert_eq!(v, vec![Violation::TokenCountMismatch { alignment: 3, phonemes: 2 }]);
    }

    #[test]
    fn non_monotonic_hard_path() {
        let mut b = small_bundle();
        b.alignment = AlignmentMap::hard(3, vec![0, 2, 1, 2]);
        assert_eq!(validate_bundle(&b), vec![Violation::NonMonotonic { frame: 2 }]);
    }

    #[test]
    fn dense_round_trip_of_hard_path() {
        let map = AlignmentMap::hard(3, vec![0, 0, 2]);
        let soft = AlignmentMap::soft(3, 3, map.to_dense());
        assert_eq!(soft.token_path(), vec![0, 0, 2]);
        assert_eq!(soft.frames_per_token(), vec![2, 0, 1]);
        assert!(soft.violations().is_empty());
    }
}
