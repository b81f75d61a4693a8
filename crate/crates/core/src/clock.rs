//! Analysis clock shared by every frame-based stage.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClockError {
    #[error("clock.{field}: must be positive")]
    NotPositive { field: &'static str },
    #[error("clock.window_size: {window_size} exceeds fft_size {fft_size}")]
    WindowExceedsFft { window_size: u32, fft_size: u32 },
    #[error("clock.hop: {hop} exceeds window_size {window_size}")]
    HopExceedsWindow { hop: u32, window_size: u32 },
}

/// Sample rate and STFT geometry. Frames are `hop` samples apart.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AudioClock {
    pub sample_rate: u32,
    pub hop: u32,
    pub fft_size: u32,
    pub window_size: u32,
}

impl Default for AudioClock {
    fn default() -> Self {
        Self {
            sample_rate: 22050,
            hop: 256,
            fft_size: 1024,
            window_size: 1024,
        }
    }
}

impl AudioClock {
    pub fn new(sample_rate: u32, hop: u32, fft_size: u32, window_size: u32) -> Result<Self, ClockError> {
        let clock = Self {
            sample_rate,
            hop,
            fft_size,
            window_size,
        };
        clock.validate()?;
        Ok(clock)
    }

    pub fn validate(&self) -> Result<(), ClockError> {
        for (field, value) in [
            ("sample_rate", self.sample_rate),
            ("hop", self.hop),
            ("fft_size", self.fft_size),
            ("window_size", self.window_size),
        ] {
            if value == 0 {
                return Err(ClockError::NotPositive { field });
            }
        }
        if self.window_size > self.fft_size {
            return Err(ClockError::WindowExceedsFft {
                window_size: self.window_size,
                fft_size: self.fft_size,
            });
        }
        if self.hop > self.window_size {
            return Err(ClockError::HopExceedsWindow {
                hop: self.hop,
                window_size: self.window_size,
            });
        }
        Ok(())
    }

    /// Frames per second.
    pub fn frame_rate(&self) -> f64 {
        f64::from(self.sample_rate) / f64::from(self.hop)
    }

    pub fn nyquist(&self) -> f64 {
        f64::from(self.sample_rate) / 2.0
    }

    /// Number of positive-frequency STFT bins.
    pub fn num_bins(&self) -> usize {
        self.fft_size as usize / 2 + 1
    }
}
