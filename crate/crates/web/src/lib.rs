//! Browser demo bindings: pitch tracking of a synthetic glide, alignment
//! warping, and singing a one-note lyric.

use cantus::score::{ScoreEvent, Syllable};
use cantus::{
    compile_part, extract_contour, mel_spectrogram, render_voice, warp_bundle, AudioClock, Lexicon, MelScale,
    MonoSignal, RateCurve, RenderConfig, ScorePart, YinConfig,
};
use wasm_bindgen::prelude::*;

const SAMPLE_RATE: u32 = 22_050;

fn clock() -> AudioClock {
    AudioClock::default()
}

/// Reference and Yin-estimated contours of an exponential sine glide.
#[wasm_bindgen]
pub struct GlideTrack {
    truth: Vec<f32>,
    estimate: Vec<f32>,
    voiced: Vec<u8>,
    frame_rate: f64,
}

#[wasm_bindgen]
impl GlideTrack {
    /// Ground-truth f0 at each frame center, Hz.
    pub fn truth(&self) -> Vec<f32> {
        self.truth.clone()
    }

    /// Estimated f0, 0 where unvoiced.
    pub fn estimate(&self) -> Vec<f32> {
        self.estimate.clone()
    }

    pub fn voiced(&self) -> Vec<u8> {
        self.voiced.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn frame_rate(&self) -> f64 {
        self.frame_rate
    }
}

pub fn glide_track(start_hz: f64, end_hz: f64, seconds: f64, threshold: f64) -> Result<GlideTrack, String> {
    if !(start_hz > 0.0 && end_hz > 0.0 && seconds > 0.0 && seconds <= 10.0) {
        return Err("glide needs positive frequencies and 0 < seconds <= 10".into());
    }
    let clock = clock();
    let n = (seconds * f64::from(SAMPLE_RATE)) as usize;
    let freq_at = |t: f64| start_hz * (end_hz / start_hz).powf((t / seconds).clamp(0.0, 1.0));
    let mut phase = 0.0f64;
    let samples: Vec<f32> = (0..n)
        .map(|i| {
            let s = (0.6 * phase.sin()) as f32;
            let t = i as f64 / f64::from(SAMPLE_RATE);
            phase = (phase + std::f64::consts::TAU * freq_at(t) / f64::from(SAMPLE_RATE)) % std::f64::consts::TAU;
            s
        })
        .collect();
    let signal = MonoSignal::new(samples, SAMPLE_RATE).map_err(|e| e.to_string())?;
    let config = YinConfig::default().with_threshold(threshold);
    let contour = extract_contour(&signal, &config, &clock).map_err(|e| e.to_string())?;
    let frame_rate = clock.frame_rate();
    let truth = (0..contour.len()).map(|f| freq_at(f as f64 / frame_rate) as f32).collect();
    let estimate = contour
        .f0
        .iter()
        .zip(&contour.voiced)
        .map(|(&f, &v)| if v { f } else { 0.0 })
        .collect();
    Ok(GlideTrack {
        truth,
        estimate,
        voiced: contour.voiced.iter().map(|&v| u8::from(v)).collect(),
        frame_rate,
    })
}

/// Tracks a synthetic sine glide from `start_hz` to `end_hz`.
#[wasm_bindgen(js_name = trackGlide)]
pub fn track_glide_js(start_hz: f64, end_hz: f64, seconds: f64, threshold: f64) -> Result<GlideTrack, JsError> {
    glide_track(start_hz, end_hz, seconds, threshold).map_err(|e| JsError::new(&e))
}

/// Token × frame weights of a phrase before and after a time warp.
#[wasm_bindgen]
pub struct WarpView {
    tokens: Vec<String>,
    before: Vec<f32>,
    after: Vec<f32>,
    frames_before: usize,
    frames_after: usize,
}

#[wasm_bindgen]
impl WarpView {
    /// Space-separated phoneme tokens (rows of both maps).
    pub fn tokens(&self) -> String {
        self.tokens.join(" ")
    }

    /// Row-major `tokens × frames_before` weights.
    pub fn before(&self) -> Vec<f32> {
        self.before.clone()
    }

    /// Row-major `tokens × frames_after` weights.
    pub fn after(&self) -> Vec<f32> {
        self.after.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn frames_before(&self) -> usize {
        self.frames_before
    }

    #[wasm_bindgen(getter)]
    pub fn frames_after(&self) -> usize {
        self.frames_after
    }
}

fn phrase(text: &str, midi: u8) -> Result<ScorePart, String> {
    let words: Vec<&str> = text.split_whitespace().collect();
    if words.is_empty() {
        return Err("enter at least one word".into());
    }
    let events = words
        .iter()
        .enumerate()
        .map(|(i, w)| ScoreEvent::note(midi.saturating_add((i % 3) as u8 * 2), 0.4, Some(Syllable::single(w))))
        .collect();
    Ok(ScorePart::new("demo", events))
}

pub fn warp_phrase(text: &str, rate_curve: &str) -> Result<WarpView, String> {
    let curve: RateCurve = rate_curve.parse().map_err(|e: cantus::rhythm::RhythmError| e.to_string())?;
    let bundle = compile_part(&phrase(text, 60)?, &Lexicon::bundled(), &clock()).map_err(|e| e.to_string())?;
    let warped = warp_bundle(&bundle, &curve).map_err(|e| e.to_string())?;
    Ok(WarpView {
        tokens: bundle.phonemes.iter().map(ToString::to_string).collect(),
        before: bundle.alignment.to_dense(),
        after: warped.alignment.to_dense(),
        frames_before: bundle.num_frames(),
        frames_after: warped.num_frames(),
    })
}

/// Compiles a short phrase, one 0.4 s note per word, and warps its
/// alignment under `rate_curve` (e.g. `0:0.5,1:2`).
#[wasm_bindgen(js_name = warpPhrase)]
pub fn warp_phrase_js(text: &str, rate_curve: &str) -> Result<WarpView, JsError> {
    warp_phrase(text, rate_curve).map_err(|e| JsError::new(&e))
}

/// Rendered audio and log-mel spectrogram of one sung note.
#[wasm_bindgen]
pub struct SungNote {
    samples: Vec<f32>,
    mel: Vec<f32>,
    bands: usize,
    frames: usize,
    phonemes: String,
}

#[wasm_bindgen]
impl SungNote {
    pub fn samples(&self) -> Vec<f32> {
        self.samples.clone()
    }

    /// Row-major `bands × frames` log-mel values.
    pub fn mel(&self) -> Vec<f32> {
        self.mel.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn bands(&self) -> usize {
        self.bands
    }

    #[wasm_bindgen(getter)]
    pub fn frames(&self) -> usize {
        self.frames
    }

    #[wasm_bindgen(getter)]
    pub fn sample_rate(&self) -> u32 {
        SAMPLE_RATE
    }

    pub fn phonemes(&self) -> String {
        self.phonemes.clone()
    }
}

pub fn sing_note(lyric: &str, midi: u8, seconds: f64, seed: u64) -> Result<SungNote, String> {
    if !(seconds > 0.0 && seconds <= 10.0) {
        return Err("duration must be in (0, 10] seconds".into());
    }
    let word = lyric.trim();
    let syllable = (!word.is_empty()).then(|| Syllable::single(word));
    let part = ScorePart::new("note", vec![ScoreEvent::note(midi, seconds, syllable)]);
    let clock = clock();
    let bundle = compile_part(&part, &Lexicon::bundled(), &clock).map_err(|e| e.to_string())?;
    let config = RenderConfig { seed, ..RenderConfig::default() };
    let signal = render_voice(&bundle, &config).map_err(|e| e.to_string())?;
    let mel = mel_spectrogram(&signal, &clock, MelScale::LogCompressed).map_err(|e| e.to_string())?;
    let (bands, frames) = mel.values.dim();
    Ok(SungNote {
        mel: mel.values.iter().copied().collect(),
        samples: signal.into_samples(),
        bands,
        frames,
        phonemes: bundle.phonemes.to_string(),
    })
}

/// Sings `lyric` on MIDI note `midi` for `seconds` with the reference renderer.
#[wasm_bindgen(js_name = singNote)]
pub fn sing_note_js(lyric: &str, midi: u8, seconds: f64, seed: u64) -> Result<SungNote, JsError> {
    sing_note(lyric, midi, seconds, seed).map_err(|e| JsError::new(&e))
}
