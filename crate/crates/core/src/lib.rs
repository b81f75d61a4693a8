//! Conditioning data for controllable voice synthesis.
//!
//! `cantus` turns audio recordings or MusicXML scores into the inputs a
//! pitch- and rhythm-conditioned synthesizer consumes: a phoneme sequence,
//! a continuous pitch contour with voicing flags, and a token × frame
//! alignment map, packed together with a speaker id and an optional style
//! token id into a [`ConditioningBundle`].
//!
//! Alongside the compilers it provides Yin pitch tracking, mel spectrograms,
//! GPE/VDE/FFE pitch metrics and a deterministic harmonic-plus-noise
//! renderer used to close the loop end to end.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bundle;
pub mod clock;
pub mod dsp;
pub mod mcb;
pub mod metrics;
pub mod phone;
pub mod pitch;
pub mod rhythm;
pub mod score;
pub mod synth;
pub mod text;
pub mod wav;

pub use bundle::{
    validate_bundle, AlignmentMap, AlignmentWeights, ConditioningBundle, PhonemeSequence, PitchContour, Violation,
};
pub use clock::{AudioClock, ClockError};
pub use dsp::{frame_count, mel_filterbank, mel_spectrogram, stft_magnitude, MelScale, MelSpectrogram, MonoSignal};
pub use mcb::{deserialize_bundle, serialize_bundle, DecodeError, EncodeError};
pub use metrics::{compare_contours, evaluate_pair, MetricReport, GROSS_THRESHOLD};
pub use phone::{Phone, PhoneClass};
pub use pitch::{extract_contour, scale_contour, yin_frame, zero_contour, ScaleMode, VocalRange, YinConfig};
pub use rhythm::{
    alignment_from_durations, alignment_from_intervals, duration_to_frames, warp_alignment, warp_bundle, RateCurve,
};
pub use score::{
    assign_phone_durations, compile_part, compile_part_spans, compile_score, midi_to_hz, parse_musicxml, ScoreError, ScoreEvent, ScorePart,
};
pub use synth::{render_choir, render_voice, RenderConfig};
pub use text::{clean_text, g2p, Lexicon};
