//! Deterministic harmonic-plus-noise renderer for conditioning bundles.
//!
//! Voiced frames sound a band-limited harmonic series at the contour's f0,
//! interpolated between frame centers. Unvoiced frames are colored by the
//! class of the aligned phone: plosives give a short noise burst,
//! fricatives sustained bright noise, nasals/liquids/glides a quiet sine at
//! the neighbouring pitch, unvoiced vowels whispered noise, silence zeros.

use std::f64::consts::TAU;

use thiserror::Error;

use crate::bundle::{validate_bundle, ConditioningBundle, Violation};
use crate::dsp::MonoSignal;
use crate::phone::PhoneClass;

/// Peak level of rendered output, in dBFS.
pub const PEAK_DBFS: f64 = -1.0;
/// Length of a plosive burst in seconds.
pub const BURST_SECONDS: f64 = 0.020;
/// Harmonics stay below this fraction of the sample rate.
pub const HARMONIC_CEILING: f64 = 0.45;
/// Amplitude of the sine used for unvoiced sonorants.
pub const SONORANT_GAIN: f64 = 0.2;

/// Voices rendered concurrently before being added to the mix.
const CHOIR_BATCH: usize = 8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("invalid bundle: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
    #[error("invalid render config: {0}")]
    Config(&'static str),
    #[error("choir needs at least one voice")]
    NoVoices,
    #[error("voice {voice} has {got} frames, expected {expected}")]
    FrameMismatch { voice: usize, expected: usize, got: usize },
    #[error("voice {voice} uses a different clock")]
    ClockMismatch { voice: usize },
}

/// 64-bit linear congruential generator, `x ← a·x + c (mod 2^64)` with
/// `a = 6364136223846793005` and `c = 1442695040888963407`. Uniform draws
/// use the top 53 bits.
#[derive(Debug, Clone)]
pub struct Lcg {
    state: u64,
}

impl Lcg {
    pub const MULTIPLIER: u64 = 6_364_136_223_846_793_005;
    pub const INCREMENT: u64 = 1_442_695_040_888_963_407;

    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_mul(Self::MULTIPLIER).wrapping_add(Self::INCREMENT);
        self.state
    }

    /// Uniform in `[0, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Uniform in `[-1, 1)`.
    pub fn next_signed(&mut self) -> f64 {
        2.0 * self.next_f64() - 1.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderConfig {
    /// Harmonic `k` has amplitude `1 / k^harmonic_rolloff`.
    pub harmonic_rolloff: f64,
    pub max_harmonics: u32,
    /// Linear amplitude of unvoiced noise.
    pub noise_gain: f64,
    /// Crossfade length at phone boundaries, in seconds.
    pub crossfade: f64,
    pub seed: u64,
}

impl Default for RenderConfig {
    fn default() -> Self {
        Self {
            harmonic_rolloff: 1.0,
            max_harmonics: 30,
            noise_gain: 0.05,
            crossfade: 0.005,
            seed: 0,
        }
    }
}

impl RenderConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        if self.max_harmonics < 1 {
            return Err(SynthError::Config("max_harmonics must be at least 1"));
        }
        if !(self.crossfade >= 0.0 && self.crossfade.is_finite()) {
            return Err(SynthError::Config("crossfade must be non-negative"));
        }
        if !(self.noise_gain >= 0.0 && self.noise_gain.is_finite()) {
            return Err(SynthError::Config("noise_gain must be non-negative"));
        }
        if !self.harmonic_rolloff.is_finite() {
            return Err(SynthError::Config("harmonic_rolloff must be finite"));
        }
        Ok(())
    }
}

/// Number of harmonics emitted at `f0`.
pub fn harmonic_count(f0: f64, sample_rate: u32, max_harmonics: u32) -> u32 {
    if f0 <= 0.0 {
        return 0;
    }
    let limit = (HARMONIC_CEILING * f64::from(sample_rate) / f0).floor();
    (limit.min(f64::from(max_harmonics))) as u32
}

#[derive(Clone, Copy, PartialEq)]
enum Source {
    Harmonic,
    Burst,
    Bright,
    Sonorant,
    Whisper,
    Silent,
}

/// f0 held across unvoiced frames (previous voiced value, else next).
fn held_f0(bundle: &ConditioningBundle) -> Vec<f64> {
    let c = &bundle.contour;
    let mut out = vec![0.0; c.len()];
    let mut last = c.voiced.iter().position(|&v| v).map_or(0.0, |i| f64::from(c.f0[i]));
    for (i, o) in out.iter_mut().enumerate() {
        if c.voiced[i] {
            last = f64::from(c.f0[i]);
        }
        *o = last;
    }
    out
}

/// Centered moving average; a step becomes a linear ramp of `len` samples.
fn smooth(gains: &[f64], len: usize) -> Vec<f64> {
    if len <= 1 {
        return gains.to_vec();
    }
    let mut prefix = Vec::with_capacity(gains.len() + 1);
    prefix.push(0.0);
    for &g in gains {
        prefix.push(prefix.last().copied().unwrap_or(0.0) + g);
    }
    let n = gains.len();
    let half = len / 2;
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + len - half).min(n);
            // edges extend the boundary value instead of fading to zero
            let pad_lo = (half as isize - i as isize).max(0) as f64 * gains[0];
            let pad_hi = (i + len - half).saturating_sub(n) as f64 * gains[n - 1];
            (prefix[hi] - prefix[lo] + pad_lo + pad_hi) / len as f64
        })
        .collect()
}

/// Renders without normalization. `pitch_ratio` scales every f0 and
/// `shift` delays (positive) or advances the output by whole samples.
fn render_raw(bundle: &ConditioningBundle, config: &RenderConfig, seed: u64, pitch_ratio: f64, shift: isize) -> Vec<f64> {
    let clock = bundle.clock;
    let hop = clock.hop as usize;
    let sr = f64::from(clock.sample_rate);
    let frames = bundle.num_frames();
    let total = frames * hop;
    if total == 0 {
        return Vec::new();
    }

    let path = bundle.alignment.token_path();
    let held = held_f0(bundle);
    let sources: Vec<Source> = (0..frames)
        .map(|f| {
            if bundle.contour.voiced[f] {
                return Source::Harmonic;
            }
            match bundle.phonemes.tokens[path[f]].class() {
                PhoneClass::Plosive => Source::Burst,
                PhoneClass::Fricative => Source::Bright,
                PhoneClass::Sonorant if held[f] > 0.0 => Source::Sonorant,
                PhoneClass::Vowel => Source::Whisper,
                _ => Source::Silent,
            }
        })
        .collect();
    // first frame of the run of each frame's token
    let mut run_start = vec![0usize; frames];
    for f in 1..frames {
        run_start[f] = if path[f] == path[f - 1] { run_start[f - 1] } else { f };
    }

    let burst = (BURST_SECONDS * sr).round() as usize;
    let mut g_harm = vec![0.0; total];
    let mut g_noise = vec![0.0; total];
    let mut g_bright = vec![0.0; total];
    let mut g_sine = vec![0.0; total];
    for n in 0..total {
        let f = n / hop;
        match sources[f] {
            Source::Harmonic => g_harm[n] = 1.0,
            Source::Burst if n - run_start[f] * hop < burst => g_noise[n] = config.noise_gain,
            Source::Bright => g_bright[n] = config.noise_gain,
            Source::Sonorant => g_sine[n] = SONORANT_GAIN,
            Source::Whisper => g_noise[n] = config.noise_gain,
            Source::Burst | Source::Silent => {}
        }
    }
    let fade = (config.crossfade * sr).round() as usize;
    let (g_harm, g_noise, g_bright, g_sine) = (
        smooth(&g_harm, fade),
        smooth(&g_noise, fade),
        smooth(&g_bright, fade),
        smooth(&g_sine, fade),
    );

    let mut rng = Lcg::new(seed);
    let mut prev_white = 0.0;
    let mut phase = 0.0f64;
    let mut out = vec![0.0; total];
    for n in 0..total {
        let u = (n as f64 / hop as f64 - 0.5).clamp(0.0, (frames - 1) as f64);
        let i0 = u.floor() as usize;
        let i1 = (i0 + 1).min(frames - 1);
        let frac = u - i0 as f64;
        let f0 = ((1.0 - frac) * held[i0] + frac * held[i1]) * pitch_ratio;

        let white = rng.next_signed();
        let bright = 0.5 * (white - prev_white);
        prev_white = white;

        let mut y = g_noise[n] * white + g_bright[n] * bright;
        if g_harm[n] > 0.0 || g_sine[n] > 0.0 {
            let (s1, c1) = phase.sin_cos();
            y += g_sine[n] * s1;
            if g_harm[n] > 0.0 {
                let k_max = harmonic_count(f0, clock.sample_rate, config.max_harmonics);
                let (mut prev, mut cur) = (0.0, s1);
                let mut sum = 0.0;
                for k in 1..=k_max {
                    sum += cur * f64::from(k).powf(-config.harmonic_rolloff);
                    let next = 2.0 * c1 * cur - prev;
                    prev = cur;
                    cur = next;
                }
                y += g_harm[n] * sum;
            }
        }
        out[n] = y;
        phase = (phase + TAU * f0 / sr) % TAU;
    }

    if shift != 0 {
        let mut shifted = vec![0.0; total];
        for (n, s) in shifted.iter_mut().enumerate() {
            let src = n as isize - shift;
            if (0..total as isize).contains(&src) {
                *s = out[src as usize];
            }
        }
        out = shifted;
    }
    out
}

fn normalize(samples: &[f64], sample_rate: u32) -> MonoSignal {
    let peak = samples.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
    let target = 10f64.powf(PEAK_DBFS / 20.0);
    let gain = if peak > 0.0 { target / peak } else { 0.0 };
    MonoSignal::from_trusted(samples.iter().map(|&x| (x * gain) as f32).collect(), sample_rate)
}

fn check(bundle: &ConditioningBundle, config: &RenderConfig) -> Result<(), SynthError> {
    config.validate()?;
    let v = validate_bundle(bundle);
    if v.is_empty() {
        Ok(())
    } else {
        Err(SynthError::Invalid(v))
    }
}

/// Renders one voice, peak-normalized to [`PEAK_DBFS`]. The output has
/// exactly `frames · hop` samples.
pub fn render_voice(bundle: &ConditioningBundle, config: &RenderConfig) -> Result<MonoSignal, SynthError> {
    check(bundle, config)?;
    Ok(normalize(&render_raw(bundle, config, config.seed, 1.0, 0), bundle.clock.sample_rate))
}

/// Noise seed of voice `v`; voice 0 uses the configured seed.
fn voice_seed(seed: u64, v: usize) -> u64 {
    seed.wrapping_add((v as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Renders every bundle with a per-voice random detune in `±detune_cents`
/// and onset shift in `±onset_jitter_ms`, mixes in voice order and
/// peak-normalizes the sum.
pub fn render_choir(
    bundles: &[ConditioningBundle],
    config: &RenderConfig,
    detune_cents: f64,
    onset_jitter_ms: f64,
) -> Result<MonoSignal, SynthError> {
    let first = bundles.first().ok_or(SynthError::NoVoices)?;
    if !(detune_cents >= 0.0 && onset_jitter_ms >= 0.0) {
        return Err(SynthError::Config("detune and jitter must be non-negative"));
    }
    for (voice, b) in bundles.iter().enumerate() {
        if b.num_frames() != first.num_frames() {
            return Err(SynthError::FrameMismatch {
                voice,
                expected: first.num_frames(),
                got: b.num_frames(),
            });
        }
        if b.clock != first.clock {
            return Err(SynthError::ClockMismatch { voice });
        }
        check(b, config)?;
    }

    let sr = f64::from(first.clock.sample_rate);
    let render = |v: usize| {
        let seed = voice_seed(config.seed, v);
        let mut rng = Lcg::new(seed ^ 0xD1B5_4A32_D192_ED03);
        let cents = detune_cents * rng.next_signed();
        let shift = (onset_jitter_ms * 1e-3 * sr * rng.next_signed()).round() as isize;
        render_raw(&bundles[v], config, seed, 2f64.powf(cents / 1200.0), shift)
    };

    let mut mix = vec![0.0f64; first.num_samples()];
    for batch in (0..bundles.len()).collect::<Vec<_>>().chunks(CHOIR_BATCH) {
        #[cfg(feature = "parallel")]
        let voices: Vec<Vec<f64>> = {
            use rayon::prelude::*;
            batch.par_iter().map(|&v| render(v)).collect()
        };
        #[cfg(not(feature = "parallel"))]
        let voices: Vec<Vec<f64>> = batch.iter().map(|&v| render(v)).collect();
        for voice in voices {
            for (m, x) in mix.iter_mut().zip(voice) {
                *m += x;
            }
        }
    }
    Ok(normalize(&mix, first.clock.sample_rate))
}
