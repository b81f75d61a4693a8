//! Yin fundamental-frequency tracking and contour post-processing.
//!
//! For each window the squared-difference function
//! `d(τ) = Σ_j (x_j − x_{j+τ})²` is computed over a fixed integration span,
//! turned into the cumulative-mean-normalized difference `d'(τ)` (with
//! `d'(0) = 1`), and the first lag whose `d'` dips below the harmonicity
//! threshold is followed down to its local minimum and refined by parabolic
//! interpolation. Frames without such a dip, or quieter than the silence
//! floor, are unvoiced.
//!
//! The cross term of `d(τ)` is evaluated with an FFT; the energy terms come
//! from a running sum, so a frame costs two FFTs of the window length.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use thiserror::Error;

use crate::bundle::PitchContour;
use crate::clock::AudioClock;
use crate::dsp::{frame_count, reflected_slice, DspError, MonoSignal};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PitchError {
    #[error("invalid yin config: {0}")]
    Config(String),
    #[error("window has {got} samples, clock expects {expected}")]
    WindowLength { expected: usize, got: usize },
    #[error(transparent)]
    Signal(#[from] DspError),
    #[error("contour has no voiced frames")]
    NoVoicedFrames,
    #[error("contour must have at least one frame")]
    ZeroFrames,
    #[error("invalid vocal range [{low}, {high}] Hz")]
    InvalidRange { low: f64, high: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct YinConfig {
    /// d' dip level below which a frame is voiced.
    pub harmonicity_threshold: f64,
    pub f_min: f64,
    pub f_max: f64,
    /// Frames with RMS below this level (dBFS) are unvoiced.
    pub silence_floor_db: f64,
    /// Three-frame median over voiced f0 values; off by default.
    pub median_smoothing: bool,
}

impl Default for YinConfig {
    fn default() -> Self {
        Self {
            harmonicity_threshold: 0.15,
            f_min: 50.0,
            f_max: 1100.0,
            silence_floor_db: -60.0,
            median_smoothing: false,
        }
    }
}

impl YinConfig {
    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.harmonicity_threshold = threshold;
        self
    }

    pub fn validate(&self, clock: &AudioClock) -> Result<(), PitchError> {
        let bad = |m: String| Err(PitchError::Config(m));
        if !(0.05..=0.5).contains(&self.harmonicity_threshold) {
            return bad(format!(
                "harmonicity_threshold {} outside [0.05, 0.5]",
                self.harmonicity_threshold
            ));
        }
        if !(self.f_min > 0.0 && self.f_min < self.f_max && self.f_max < clock.nyquist()) {
            return bad(format!(
                "need 0 < f_min < f_max < {} Hz, got f_min={} f_max={}",
                clock.nyquist(),
                self.f_min,
                self.f_max
            ));
        }
        let (lo, hi) = self.lag_range(clock);
        if lo < 2 || lo > hi {
            return bad(format!("f_max {} Hz leaves no usable lag", self.f_max));
        }
        if 2 * (hi + 1) > clock.window_size as usize {
            return bad(format!(
                "f_min {} Hz needs lags up to {} samples; window of {} is too short",
                self.f_min,
                hi + 1,
                clock.window_size
            ));
        }
        Ok(())
    }

    /// Inclusive lag search range. Kept half a sample inside
    /// `[sr / f_max, sr / f_min]` so an interpolated minimum cannot leave it.
    fn lag_range(&self, clock: &AudioClock) -> (usize, usize) {
        let sr = f64::from(clock.sample_rate);
        let lo = (sr / self.f_max + 0.5).ceil() as usize;
        let hi = (sr / self.f_min - 0.5).floor().max(0.0) as usize;
        (lo, hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct YinEstimate {
    /// Hz, 0 when unvoiced.
    pub f0: f64,
    pub voiced: bool,
    /// d' at the selected lag, or the minimum d' over the search range when unvoiced.
    pub harmonicity: f64,
}

impl YinEstimate {
    fn unvoiced(harmonicity: f64) -> Self {
        Self {
            f0: 0.0,
            voiced: false,
            harmonicity,
        }
    }
}

/// Reusable Yin state: FFT plans and scratch buffers for one clock/config.
pub struct YinAnalyzer {
    config: YinConfig,
    clock: AudioClock,
    lag_lo: usize,
    lag_hi: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    a: Vec<Complex<f64>>,
    b: Vec<Complex<f64>>,
    scratch: Vec<Complex<f64>>,
    diff: Vec<f64>,
    cmnd: Vec<f64>,
}

impl Clone for YinAnalyzer {
    fn clone(&self) -> Self {
        Self::new(self.config, self.clock).expect("config already validated")
    }
}

impl YinAnalyzer {
    pub fn new(config: YinConfig, clock: AudioClock) -> Result<Self, PitchError> {
        config.validate(&clock)?;
        let (lag_lo, lag_hi) = config.lag_range(&clock);
        let n = clock.window_size as usize;
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        Ok(Self {
            config,
            clock,
            lag_lo,
            lag_hi,
            forward,
            inverse,
            a: vec![Complex::default(); n],
            b: vec![Complex::default(); n],
            scratch: vec![Complex::default(); scratch_len],
            diff: vec![0.0; lag_hi + 2],
            cmnd: vec![0.0; lag_hi + 2],
        })
    }

    pub fn config(&self) -> &YinConfig {
        &self.config
    }

    /// Inclusive lag range searched for a dip.
    pub fn lag_range(&self) -> (usize, usize) {
        (self.lag_lo, self.lag_hi)
    }

    /// d' from the most recent [`analyze`](Self::analyze) call, indexed by lag.
    pub fn cmnd(&self) -> &[f64] {
        &self.cmnd
    }

    /// Squared-difference function for lags `0..=lag_hi + 1` over an
    /// integration span of `window − (lag_hi + 1)` samples.
    pub fn difference(&mut self, window: &[f64]) -> &[f64] {
        let n = window.len();
        let max_lag = self.lag_hi + 1;
        let span = n - max_lag;
        for (i, (a, b)) in self.a.iter_mut().zip(self.b.iter_mut()).enumerate() {
            *a = Complex::new(if i < span { window[i] } else { 0.0 }, 0.0);
            *b = Complex::new(window[i], 0.0);
        }
        self.forward.process_with_scratch(&mut self.a, &mut self.scratch);
        self.forward.process_with_scratch(&mut self.b, &mut self.scratch);
        for (a, b) in self.a.iter_mut().zip(&self.b) {
            *a = a.conj() * b;
        }
        self.inverse.process_with_scratch(&mut self.a, &mut self.scratch);
        let scale = 1.0 / n as f64;

        let e0: f64 = window[..span].iter().map(|x| x * x).sum();
        let mut e_tau = e0;
        for tau in 0..=max_lag {
            if tau > 0 {
                e_tau += window[tau + span - 1].powi(2) - window[tau - 1].powi(2);
            }
            let cross = self.a[tau].re * scale;
            self.diff[tau] = (e0 + e_tau - 2.0 * cross).max(0.0);
        }
        &self.diff
    }

    pub fn analyze(&mut self, window: &[f64]) -> YinEstimate {
        let rms = (window.iter().map(|x| x * x).sum::<f64>() / window.len() as f64).sqrt();
        let level_db = 20.0 * rms.log10();

        self.difference(window);
        let max_lag = self.lag_hi + 1;
        self.cmnd[0] = 1.0;
        let mut running = 0.0;
        for tau in 1..=max_lag {
            running += self.diff[tau];
            self.cmnd[tau] = if running > 0.0 {
                self.diff[tau] * tau as f64 / running
            } else {
                1.0
            };
        }
        let search = &self.cmnd[self.lag_lo..=self.lag_hi];
        let min_cmnd = search.iter().copied().fold(f64::INFINITY, f64::min);

        if !(level_db >= self.config.silence_floor_db) {
            return YinEstimate::unvoiced(min_cmnd);
        }
        let threshold = self.config.harmonicity_threshold;
        let Some(first) = (self.lag_lo..=self.lag_hi).find(|&t| self.cmnd[t] < threshold) else {
            return YinEstimate::unvoiced(min_cmnd);
        };
        let mut tau = first;
        while tau < self.lag_hi && self.cmnd[tau + 1] < self.cmnd[tau] {
            tau += 1;
        }
        let (prev, cur, next) = (self.cmnd[tau - 1], self.cmnd[tau], self.cmnd[tau + 1]);
        let mut refined = tau as f64;
        let curvature = prev - 2.0 * cur + next;
        if prev >= cur && next >= cur && curvature > 0.0 {
            refined += 0.5 * (prev - next) / curvature;
        }
        let f0 = f64::from(self.clock.sample_rate) / refined;
        if f0 < self.config.f_min || f0 > self.config.f_max {
            return YinEstimate::unvoiced(cur);
        }
        YinEstimate {
            f0,
            voiced: true,
            harmonicity: cur,
        }
    }
}

/// Yin estimate for a single window of exactly `clock.window_size` samples.
pub fn yin_frame(window: &[f32], config: &YinConfig, clock: &AudioClock) -> Result<YinEstimate, PitchError> {
    let expected = clock.window_size as usize;
    if window.len() != expected {
        return Err(PitchError::WindowLength {
            expected,
            got: window.len(),
        });
    }
    let mut analyzer = YinAnalyzer::new(*config, *clock)?;
    let w: Vec<f64> = window.iter().map(|&x| f64::from(x)).collect();
    Ok(analyzer.analyze(&w))
}

/// Per-frame estimates at hop-spaced centers, one per `dsp::frame_count` frame.
pub fn analyze_frames(signal: &MonoSignal, config: &YinConfig, clock: &AudioClock) -> Result<Vec<YinEstimate>, PitchError> {
    signal.check_for(clock)?;
    let analyzer = YinAnalyzer::new(*config, *clock)?;
    let frames = frame_count(signal.len(), clock);
    let win = clock.window_size as usize;
    let hop = clock.hop as usize;
    let samples = signal.samples();
    let window_at = move |f: usize, buf: &mut Vec<f64>| {
        // frame f is centered on sample f * hop
        let start = (f * hop) as isize - (win / 2) as isize;
        buf.resize(win, 0.0);
        reflected_slice(samples, start, win, buf);
    };

    #[cfg(feature = "parallel")]
    let estimates = {
        use rayon::prelude::*;
        (0..frames)
            .into_par_iter()
            .map_init(
                || (analyzer.clone(), Vec::with_capacity(win)),
                |(a, buf), f| {
                    window_at(f, buf);
                    a.analyze(buf)
                },
            )
            .collect()
    };
    #[cfg(not(feature = "parallel"))]
    let estimates = {
        let mut analyzer = analyzer;
        let mut buf = Vec::with_capacity(win);
        (0..frames)
            .map(|f| {
                window_at(f, &mut buf);
                analyzer.analyze(&buf)
            })
            .collect()
    };
    Ok(estimates)
}

pub fn extract_contour(signal: &MonoSignal, config: &YinConfig, clock: &AudioClock) -> Result<PitchContour, PitchError> {
    let estimates = analyze_frames(signal, config, clock)?;
    let mut contour = PitchContour::new(
        estimates.iter().map(|e| e.f0 as f32).collect(),
        estimates.iter().map(|e| e.voiced).collect(),
    );
    if config.median_smoothing {
        contour = median3(&contour);
    }
    Ok(contour)
}

/// Three-frame median over voiced neighbours; voicing is unchanged.
pub fn median3(contour: &PitchContour) -> PitchContour {
    let n = contour.len();
    let mut f0 = contour.f0.clone();
    for (i, out) in f0.iter_mut().enumerate() {
        if !contour.voiced[i] {
            continue;
        }
        let mut vals: Vec<f32> = (i.saturating_sub(1)..(i + 2).min(n))
            .filter(|&j| contour.voiced[j])
            .map(|j| contour.f0[j])
            .collect();
        if vals.len() == 3 {
            vals.sort_by(f32::total_cmp);
            *out = vals[1];
        }
    }
    PitchContour::new(f0, contour.voiced.clone())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VocalRange {
    pub low: f64,
    pub high: f64,
}

impl VocalRange {
    pub fn new(low: f64, high: f64) -> Result<Self, PitchError> {
        if low > 0.0 && low < high && high.is_finite() {
            Ok(Self { low, high })
        } else {
            Err(PitchError::InvalidRange { low, high })
        }
    }

    pub fn contains(&self, f0: f32) -> bool {
        let f = f64::from(f0);
        f >= self.low && f <= self.high
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScaleMode {
    /// Factor restricted to powers of two.
    OctaveSnap,
    Free,
}

/// Multiplies every voiced f0 by one constant chosen to put as many voiced
/// frames as possible inside `range`; ties go to the constant closest to 1.
pub fn scale_contour(
    contour: &PitchContour,
    range: &VocalRange,
    mode: ScaleMode,
) -> Result<(PitchContour, f64), PitchError> {
    let voiced: Vec<f32> = contour
        .f0
        .iter()
        .zip(&contour.voiced)
        .filter(|(_, &v)| v)
        .map(|(&f, _)| f)
        .collect();
    if voiced.is_empty() {
        return Err(PitchError::NoVoicedFrames);
    }
    let in_range = |factor: f64| voiced.iter().filter(|&&f| range.contains(scale_f0(f, factor))).count();

    let factor = match mode {
        ScaleMode::OctaveSnap => (-12..=12)
            .map(|k| 2f64.powi(k))
            .map(|c| (in_range(c), c))
            .max_by(|a, b| a.0.cmp(&b.0).then((b.1 - 1.0).abs().total_cmp(&(a.1 - 1.0).abs())))
            .map(|(_, c)| c)
            .unwrap(),
        ScaleMode::Free => best_free_factor(&voiced, range, in_range),
    };
    let f0 = contour
        .f0
        .iter()
        .zip(&contour.voiced)
        .map(|(&f, &v)| if v { scale_f0(f, factor) } else { 0.0 })
        .collect();
    Ok((PitchContour::new(f0, contour.voiced.clone()), factor))
}

fn scale_f0(f0: f32, factor: f64) -> f32 {
    (f64::from(f0) * factor) as f32
}

/// Interval stabbing: factor `c` puts frame `f` in range iff
/// `low / f <= c <= high / f`. Sweep the endpoints for the deepest overlap.
fn best_free_factor(voiced: &[f32], range: &VocalRange, count: impl Fn(f64) -> usize) -> f64 {
    // (position, is_start); starts sort before ends at equal positions
    let mut events: Vec<(f64, bool)> = voiced
        .iter()
        .flat_map(|&f| {
            let f = f64::from(f);
            [(range.low / f, true), (range.high / f, false)]
        })
        .collect();
    events.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.cmp(&a.1)));

    let mut depth = 0usize;
    let mut best = 0usize;
    let mut segments: Vec<(f64, f64)> = Vec::new();
    let mut open_at = 0.0;
    for &(pos, start) in &events {
        if start {
            depth += 1;
            if depth > best {
                best = depth;
                segments.clear();
            }
            open_at = pos;
        } else {
            if depth == best {
                segments.push((open_at, pos));
            }
            depth -= 1;
        }
    }
    let mut candidates = Vec::new();
    for &(a, b) in &segments {
        let nearest = 1.0f64.clamp(a, b);
        candidates.push(nearest);
        // nudge inward in case f32 rounding pushes an edge frame out
        let inset = (b - a) * 1e-6;
        candidates.push((nearest + inset).min(b));
        candidates.push((nearest - inset).max(a));
    }
    candidates
        .into_iter()
        .map(|c| (count(c), c))
        .max_by(|x, y| x.0.cmp(&y.0).then((y.1 - 1.0).abs().total_cmp(&(x.1 - 1.0).abs())))
        .map(|(_, c)| c)
        .unwrap_or(1.0)
}

/// An all-unvoiced contour, used when only rhythm is transferred.
pub fn zero_contour(num_frames: usize) -> Result<PitchContour, PitchError> {
    if num_frames == 0 {
        return Err(PitchError::ZeroFrames);
    }
    Ok(PitchContour::new(vec![0.0; num_frames], vec![false; num_frames]))
}
