//! RIFF WAV ingestion and 16-bit PCM output.

use std::io::{Read, Seek, Write};
use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};
use thiserror::Error;

use crate::dsp::{DspError, MonoSignal};

#[derive(Debug, Error)]
pub enum WavError {
    #[error(transparent)]
    Wav(#[from] hound::Error),
    #[error("unsupported WAV encoding: {bits}-bit {format}")]
    Unsupported { bits: u16, format: &'static str },
    #[error(transparent)]
    Signal(#[from] DspError),
}

/// Reads 16/24-bit PCM or 32-bit float WAV; multi-channel input is averaged to mono.
pub fn read_wav<R: Read>(reader: R) -> Result<MonoSignal, WavError> {
    let reader = WavReader::new(reader)?;
    let spec = reader.spec();
    let interleaved: Vec<f32> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Int, 16) => reader
            .into_samples::<i16>()
            .map(|s| s.map(|v| f32::from(v) / 32768.0))
            .collect::<Result<_, _>>()?,
        (SampleFormat::Int, 24) => reader
            .into_samples::<i32>()
            .map(|s| s.map(|v| v as f32 / 8_388_608.0))
            .collect::<Result<_, _>>()?,
        (SampleFormat::Float, 32) => reader.into_samples::<f32>().collect::<Result<_, _>>()?,
        (format, bits) => {
            return Err(WavError::Unsupported {
                bits,
                format: match format {
                    SampleFormat::Int => "integer",
                    SampleFormat::Float => "float",
                },
            })
        }
    };
    let channels = usize::from(spec.channels.max(1));
    let samples = if channels == 1 {
        interleaved
    } else {
        interleaved
            .chunks_exact(channels)
            .map(|frame| frame.iter().sum::<f32>() / channels as f32)
            .collect()
    };
    Ok(MonoSignal::new(samples, spec.sample_rate)?)
}

pub fn read_wav_file(path: impl AsRef<Path>) -> Result<MonoSignal, WavError> {
    let file = std::fs::File::open(path).map_err(hound::Error::from)?;
    read_wav(std::io::BufReader::new(file))
}

/// Writes mono 16-bit PCM, clipping to [-1, 1].
pub fn write_wav<W: Write + Seek>(writer: W, signal: &MonoSignal) -> Result<(), WavError> {
    let spec = WavSpec {
        channels: 1,
        sample_rate: signal.sample_rate(),
        bits_per_sample: 16,
        sample_format: SampleFormat::Int,
    };
    let mut w = WavWriter::new(writer, spec)?;
    for &x in signal.samples() {
        w.write_sample(to_i16(x))?;
    }
    w.finalize()?;
    Ok(())
}

pub fn write_wav_file(path: impl AsRef<Path>, signal: &MonoSignal) -> Result<(), WavError> {
    let file = std::fs::File::create(path).map_err(hound::Error::from)?;
    write_wav(std::io::BufWriter::new(file), signal)
}

fn to_i16(x: f32) -> i16 {
    (x.clamp(-1.0, 1.0) * 32767.0).round() as i16
}
