//! Framing, magnitude STFT and 80-band mel spectrograms.
//!
//! Frames are centered: the signal is reflect-padded by `fft_size / 2` on
//! each side, so frame `f` is centered on sample `f * hop` and a signal of `N`
//! samples yields `1 + N / hop` frames.

use std::f64::consts::PI;
use std::io::{self, Read, Write};

use ndarray::Array2;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use thiserror::Error;

use crate::clock::AudioClock;

pub const N_MELS: usize = 80;
/// Floor applied before the natural log of mel power.
pub const LOG_FLOOR: f32 = 1e-5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DspError {
    #[error("signal is empty")]
    EmptySignal,
    #[error("sample rate must be positive")]
    ZeroSampleRate,
    #[error("sample {index} is not finite")]
    NonFinite { index: usize },
    #[error("signal sample rate {signal} Hz does not match clock rate {clock} Hz")]
    RateMismatch { signal: u32, clock: u32 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonoSignal {
    samples: Vec<f32>,
    sample_rate: u32,
}

impl MonoSignal {
    pub fn new(samples: Vec<f32>, sample_rate: u32) -> Result<Self, DspError> {
        if sample_rate == 0 {
            return Err(DspError::ZeroSampleRate);
        }
        if let Some(index) = samples.iter().position(|x| !x.is_finite()) {
            return Err(DspError::NonFinite { index });
        }
        Ok(Self { samples, sample_rate })
    }

    /// Skips validation; callers guarantee finite samples and a non-zero rate.
    pub(crate) fn from_trusted(samples: Vec<f32>, sample_rate: u32) -> Self {
        Self { samples, sample_rate }
    }

    pub fn silence(len: usize, sample_rate: u32) -> Self {
        Self {
            samples: vec![0.0; len],
            sample_rate,
        }
    }

    pub fn samples(&self) -> &[f32] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f32> {
        self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / f64::from(self.sample_rate)
    }

    pub fn peak(&self) -> f32 {
        self.samples.iter().fold(0.0f32, |m, x| m.max(x.abs()))
    }

    pub(crate) fn check_for(&self, clock: &AudioClock) -> Result<(), DspError> {
        if self.samples.is_empty() {
            return Err(DspError::EmptySignal);
        }
        if self.sample_rate != clock.sample_rate {
            return Err(DspError::RateMismatch {
                signal: self.sample_rate,
                clock: clock.sample_rate,
            });
        }
        Ok(())
    }
}

/// Number of centered analysis frames for `num_samples` samples.
pub fn frame_count(num_samples: usize, clock: &AudioClock) -> usize {
    1 + num_samples / clock.hop as usize
}

/// Index into a signal of length `len` after mirroring about the end samples
/// (the edge sample itself is not repeated).
pub(crate) fn reflect_index(i: isize, len: usize) -> usize {
    if len == 1 {
        return 0;
    }
    let period = 2 * (len as isize - 1);
    let j = i.rem_euclid(period);
    if j >= len as isize {
        (period - j) as usize
    } else {
        j as usize
    }
}

/// Copies the `length` samples starting at `start` (which may lie outside the
/// signal) with reflect padding.
pub(crate) fn reflected_slice(samples: &[f32], start: isize, length: usize, out: &mut [f64]) {
    let n = samples.len();
    for (k, o) in out.iter_mut().enumerate().take(length) {
        let i = start + k as isize;
        let idx = if i >= 0 && (i as usize) < n {
            i as usize
        } else {
            reflect_index(i, n)
        };
        *o = f64::from(samples[idx]);
    }
}

/// Periodic Hann window of `len` samples.
pub fn hann_window(len: usize) -> Vec<f64> {
    (0..len)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / len as f64).cos())
        .collect()
}

/// Hann-windowed magnitude STFT, shape `(fft_size / 2 + 1) × frames`.
pub fn stft_magnitude(signal: &MonoSignal, clock: &AudioClock) -> Result<Array2<f32>, DspError> {
    signal.check_for(clock)?;
    let n_fft = clock.fft_size as usize;
    let win_len = clock.window_size as usize;
    let hop = clock.hop as usize;
    let frames = frame_count(signal.len(), clock);
    let bins = clock.num_bins();

    // window zero-padded to n_fft, centered
    let mut window = vec![0.0; n_fft];
    let offset = (n_fft - win_len) / 2;
    window[offset..offset + win_len].copy_from_slice(&hann_window(win_len));

    let fft = FftPlanner::<f64>::new().plan_fft_forward(n_fft);
    let mut frame = vec![0.0; n_fft];
    let mut buf = vec![Complex::new(0.0, 0.0); n_fft];
    let mut scratch = vec![Complex::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    let mut out = Array2::<f32>::zeros((bins, frames));
    let pad = (n_fft / 2) as isize;

    for f in 0..frames {
        reflected_slice(signal.samples(), (f * hop) as isize - pad, n_fft, &mut frame);
        for ((b, &x), &w) in buf.iter_mut().zip(&frame).zip(&window) {
            *b = Complex::new(x * w, 0.0);
        }
        fft.process_with_scratch(&mut buf, &mut scratch);
        for k in 0..bins {
            out[[k, f]] = buf[k].norm() as f32;
        }
    }
    Ok(out)
}

fn hz_to_mel(hz: f64) -> f64 {
    const F_SP: f64 = 200.0 / 3.0;
    const MIN_LOG_HZ: f64 = 1000.0;
    let min_log_mel = MIN_LOG_HZ / F_SP;
    let logstep = 6.4f64.ln() / 27.0;
    if hz >= MIN_LOG_HZ {
        min_log_mel + (hz / MIN_LOG_HZ).ln() / logstep
    } else {
        hz / F_SP
    }
}

fn mel_to_hz(mel: f64) -> f64 {
    const F_SP: f64 = 200.0 / 3.0;
    const MIN_LOG_HZ: f64 = 1000.0;
    let min_log_mel = MIN_LOG_HZ / F_SP;
    let logstep = 6.4f64.ln() / 27.0;
    if mel >= min_log_mel {
        MIN_LOG_HZ * (logstep * (mel - min_log_mel)).exp()
    } else {
        F_SP * mel
    }
}

/// The `N_MELS + 2` band edge frequencies in Hz, evenly spaced on the Slaney
/// mel scale from 0 Hz to Nyquist. Band `i` peaks at edge `i + 1`.
pub fn mel_band_edges(clock: &AudioClock) -> Vec<f64> {
    let lo = hz_to_mel(0.0);
    let hi = hz_to_mel(clock.nyquist());
    let n = N_MELS + 2;
    (0..n)
        .map(|i| mel_to_hz(lo + (hi - lo) * i as f64 / (n - 1) as f64))
        .collect()
}

/// Slaney-style area-normalized triangular filterbank, shape `80 × (fft_size / 2 + 1)`.
pub fn mel_filterbank(clock: &AudioClock) -> Array2<f32> {
    let bins = clock.num_bins();
    let edges = mel_band_edges(clock);
    let bin_hz: Vec<f64> = (0..bins)
        .map(|k| k as f64 * f64::from(clock.sample_rate) / f64::from(clock.fft_size))
        .collect();
    let mut fb = Array2::<f32>::zeros((N_MELS, bins));
    for m in 0..N_MELS {
        let (lo, center, hi) = (edges[m], edges[m + 1], edges[m + 2]);
        let norm = 2.0 / (hi - lo);
        for (k, &f) in bin_hz.iter().enumerate() {
            let rising = (f - lo) / (center - lo);
            let falling = (hi - f) / (hi - center);
            let w = rising.min(falling).max(0.0);
            fb[[m, k]] = (w * norm) as f32;
        }
    }
    fb
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MelScale {
    LinearPower,
    /// `ln(max(power, LOG_FLOOR))`.
    LogCompressed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MelSpectrogram {
    /// `80 × frames`.
    pub values: Array2<f32>,
    pub scale: MelScale,
}

impl MelSpectrogram {
    pub fn num_frames(&self) -> usize {
        self.values.ncols()
    }

    /// Writes the `MELS` container: magic, version u16 = 1, rows u32, cols u32,
    /// then row-major f32, all little-endian.
    pub fn write_mels<W: Write>(&self, mut w: W) -> io::Result<()> {
        w.write_all(b"MELS")?;
        w.write_all(&1u16.to_le_bytes())?;
        w.write_all(&(self.values.nrows() as u32).to_le_bytes())?;
        w.write_all(&(self.values.ncols() as u32).to_le_bytes())?;
        for x in self.values.iter() {
            w.write_all(&x.to_le_bytes())?;
        }
        Ok(())
    }

    /// One row per frame, one column per band.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let header: Vec<String> = (0..self.values.nrows()).map(|m| format!("mel{m}")).collect();
        writeln!(w, "frame,{}", header.join(","))?;
        for (f, col) in self.values.columns().into_iter().enumerate() {
            let row: Vec<String> = col.iter().map(|x| x.to_string()).collect();
            writeln!(w, "{f},{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Reads a `MELS` container back into a matrix.
pub fn read_mels<R: Read>(mut r: R) -> io::Result<Array2<f32>> {
    let bad = |m: &str| io::Error::new(io::ErrorKind::InvalidData, m.to_string());
    let mut head = [0u8; 14];
    r.read_exact(&mut head)?;
    if &head[..4] != b"MELS" || head[4..6] != 1u16.to_le_bytes() {
        return Err(bad("not a MELS v1 stream"));
    }
    let rows = u32::from_le_bytes(head[6..10].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(head[10..14].try_into().unwrap()) as usize;
    let mut raw = Vec::new();
    r.read_to_end(&mut raw)?;
    if raw.len() != rows * cols * 4 {
        return Err(bad("MELS payload size does not match header"));
    }
    let data = raw
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Array2::from_shape_vec((rows, cols), data).map_err(|_| bad("MELS shape"))
}

pub fn mel_spectrogram(signal: &MonoSignal, clock: &AudioClock, scale: MelScale) -> Result<MelSpectrogram, DspError> {
    let mag = stft_magnitude(signal, clock)?;
    let power = mag.mapv(|x| x * x);
    let mut values = mel_filterbank(clock).dot(&power);
    if scale == MelScale::LogCompressed {
        values.mapv_inplace(|x| x.max(LOG_FLOOR).ln());
    }
    Ok(MelSpectrogram { values, scale })
}
