use std::fmt;
use std::path::Path;

/// A domain error with a short machine-readable kind.
#[derive(Debug)]
pub struct CliError {
    pub kind: &'static str,
    pub message: String,
}

impl CliError {
    pub fn new(kind: &'static str, message: impl Into<String>) -> Self {
        Self {
            kind,
            message: message.into(),
        }
    }

    pub fn to_json_line(&self) -> String {
        serde_json::json!({ "error": { "kind": self.kind, "message": self.message } }).to_string()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind, self.message)
    }
}

impl std::error::Error for CliError {}

macro_rules! kinds {
    ($($ty:ty => $kind:literal),* $(,)?) => {
        $(impl From<$ty> for CliError {
            fn from(e: $ty) -> Self {
                Self::new($kind, e.to_string())
            }
        })*
    };
}

kinds! {
    std::io::Error => "io",
    cantus::ClockError => "clock",
    cantus::wav::WavError => "wav",
    cantus::dsp::DspError => "dsp",
    cantus::pitch::PitchError => "pitch",
    cantus::text::TextError => "text",
    cantus::text::LexiconError => "lexicon",
    cantus::score::ScoreError => "score",
    cantus::rhythm::RhythmError => "rhythm",
    cantus::metrics::MetricsError => "metrics",
    cantus::synth::SynthError => "synth",
    cantus::DecodeError => "bundle",
    cantus::EncodeError => "bundle",
    serde_json::Error => "json",
    csv::Error => "csv",
    tempfile::PersistError => "io",
}

/// Prefixes errors with the file they concern.
pub trait Context<T> {
    fn at(self, path: &Path) -> Result<T, CliError>;
}

impl<T, E: Into<CliError>> Context<T> for Result<T, E> {
    fn at(self, path: &Path) -> Result<T, CliError> {
        self.map_err(|e| {
            let e = e.into();
            CliError::new(e.kind, format!("{}: {}", path.display(), e.message))
        })
    }
}
