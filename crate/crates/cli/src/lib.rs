//! `cantus` command-line interface.
//!
//! Results go to standard output as JSON, logs to standard error. Exit code
//! 0 on success, 1 on domain errors (reported as one JSON line on standard
//! error) and 2 on usage errors.

mod commands;
mod error;
mod files;
mod plot;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use cantus::AudioClock;
use clap::{Args, Parser, Subcommand, ValueEnum};

pub use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "cantus", version, about = "Pitch, rhythm and phoneme conditioning data from audio or scores")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Sample rate in Hz.
    #[arg(long, global = true, default_value_t = 22050)]
    pub sample_rate: u32,
    /// Hop size in samples.
    #[arg(long, global = true, default_value_t = 256)]
    pub hop: u32,
    /// FFT size in samples.
    #[arg(long, global = true, default_value_t = 1024)]
    pub fft: u32,
    /// Analysis window in samples.
    #[arg(long, global = true, default_value_t = 1024)]
    pub window: u32,
    /// Pronunciation lexicon (word TAB phones); the bundled one by default.
    #[arg(long, global = true)]
    pub lexicon: Option<PathBuf>,
    /// Directory that relative output paths are resolved against.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// Seed for the noise generator.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// More log output on standard error (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

impl GlobalArgs {
    pub fn clock(&self) -> Result<AudioClock, CliError> {
        Ok(AudioClock::new(self.sample_rate, self.hop, self.fft, self.window)?)
    }

    /// `path` under `--out-dir` when it is relative.
    pub fn out(&self, path: &Path) -> PathBuf {
        match &self.out_dir {
            Some(dir) if path.is_relative() => dir.join(path),
            _ => path.to_path_buf(),
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Pitch tracking.
    #[command(subcommand)]
    Pitch(PitchCommand),
    /// Mel spectrograms of WAV files.
    Mel(MelArgs),
    /// Text to phonemes.
    #[command(subcommand)]
    Text(TextCommand),
    /// MusicXML compilation.
    #[command(subcommand)]
    Score(ScoreCommand),
    /// Alignment construction and time warps.
    #[command(subcommand)]
    Rhythm(RhythmCommand),
    /// Pitch and voicing error metrics.
    #[command(subcommand)]
    Metrics(MetricsCommand),
    /// Render a bundle with the reference synthesizer.
    Render(RenderArgs),
    /// Render every bundle of a score manifest as one mix.
    Choir(ChoirArgs),
}

#[derive(Debug, Args)]
pub struct YinArgs {
    /// Harmonicity threshold for the voicing decision.
    #[arg(long, default_value_t = 0.15)]
    pub threshold: f64,
    /// Lowest trackable f0 in Hz.
    #[arg(long, default_value_t = 50.0)]
    pub fmin: f64,
    /// Highest trackable f0 in Hz.
    #[arg(long, default_value_t = 1100.0)]
    pub fmax: f64,
    /// Three-frame median smoothing of voiced f0.
    #[arg(long)]
    pub median: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ScaleModeArg {
    /// Power-of-two factors only.
    Octave,
    /// Any factor.
    Free,
}

#[derive(Debug, Args)]
pub struct ScaleArgs {
    /// Target vocal range as LOW:HIGH in Hz; the contour is scaled into it.
    #[arg(long, value_name = "LOW:HIGH")]
    pub range: Option<String>,
    #[arg(long, value_enum, default_value = "octave")]
    pub scale_mode: ScaleModeArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ContourFormat {
    /// `frame,time_s,f0_hz,voiced` rows.
    Csv,
    /// Raw MCB1 contour chunk (`.mcbc`).
    Chunk,
}

#[derive(Debug, Subcommand)]
pub enum PitchCommand {
    /// Yin contour of one or more WAV files, written as CSV.
    Extract(PitchExtractArgs),
}

#[derive(Debug, Args)]
pub struct PitchExtractArgs {
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Output CSV (one input) or directory (several inputs).
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: ContourFormat,
    /// Contour plot (SVG); single input only.
    #[arg(long)]
    pub plot: Option<PathBuf>,
    #[command(flatten)]
    pub yin: YinArgs,
    #[command(flatten)]
    pub scale: ScaleArgs,
}

#[derive(Debug, Args)]
pub struct MelArgs {
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Output file (one input) or directory (several inputs).
    #[arg(short, long)]
    pub output: PathBuf,
    /// Linear power instead of log-compressed values.
    #[arg(long)]
    pub linear: bool,
    /// Write CSV rather than the binary MELS format.
    #[arg(long)]
    pub csv: bool,
}

#[derive(Debug, Subcommand)]
pub enum TextCommand {
    /// Print the phoneme sequence of a sentence, one token per line.
    G2p {
        #[arg(required = true)]
        text: Vec<String>,
    },
}

#[derive(Debug, Subcommand)]
pub enum ScoreCommand {
    /// Compile a partwise MusicXML file into one bundle per voice.
    Compile(ScoreCompileArgs),
}

#[derive(Debug, Args)]
pub struct ScoreCompileArgs {
    pub input: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub voices_per_part: usize,
    /// Output directory for the .mcb files and manifest.json; without it the
    /// score is only compiled and summarized.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Transpose a part, given by name or 0-based index, e.g. `Bass=-12`.
    #[arg(long, value_name = "PART=SEMITONES")]
    pub transpose: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum RhythmCommand {
    /// Time-warp a bundle's alignment and contour under a rate curve.
    Warp(WarpArgs),
    /// Build a bundle from a recording and its phone intervals.
    Align(AlignArgs),
}

#[derive(Debug, Args)]
pub struct WarpArgs {
    pub input: PathBuf,
    /// Breakpoints `position:rate`, e.g. `0:0.5,1:2.0`.
    #[arg(long)]
    pub rate_curve: String,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct AlignArgs {
    pub wav: PathBuf,
    /// TSV of `phone<TAB>start_sec<TAB>end_sec`.
    pub intervals: PathBuf,
    /// Transcript of the recording.
    #[arg(long)]
    pub text: String,
    #[arg(short, long)]
    pub output: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub speaker: u32,
    #[arg(long)]
    pub gst: Option<u32>,
    #[command(flatten)]
    pub yin: YinArgs,
    #[command(flatten)]
    pub scale: ScaleArgs,
}

#[derive(Debug, Subcommand)]
pub enum MetricsCommand {
    /// GPE, VDE and FFE between a reference and an estimate.
    Ffe(FfeArgs),
}

#[derive(Debug, Args)]
pub struct FfeArgs {
    pub reference: PathBuf,
    pub estimate: PathBuf,
    /// Inputs are contours (CSV, .mcbc chunk or .mcb bundle) instead of WAV files.
    #[arg(long)]
    pub contours: bool,
    /// Compare only the frames both contours have.
    #[arg(long)]
    pub truncate: bool,
    /// Relative gross pitch error threshold.
    #[arg(long, default_value_t = cantus::GROSS_THRESHOLD)]
    pub gross_threshold: f64,
    /// Overlay plot of both contours (SVG).
    #[arg(long)]
    pub plot: Option<PathBuf>,
    #[command(flatten)]
    pub yin: YinArgs,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Amplitude law exponent: harmonic k has amplitude 1/k^rolloff.
    #[arg(long, default_value_t = 1.0)]
    pub rolloff: f64,
    #[arg(long, default_value_t = 30)]
    pub max_harmonics: u32,
    #[arg(long, default_value_t = 0.05)]
    pub noise_gain: f64,
    /// Crossfade at phone boundaries, seconds.
    #[arg(long, default_value_t = 0.005)]
    pub crossfade: f64,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    pub input: PathBuf,
    #[arg(short, long)]
    pub output: PathBuf,
    #[command(flatten)]
    pub synth: SynthArgs,
}

#[derive(Debug, Args)]
pub struct ChoirArgs {
    /// manifest.json written by `score compile`.
    pub manifest: PathBuf,
    #[arg(short, long)]
    pub output: PathBuf,
    #[arg(long, default_value_t = 8.0)]
    pub detune_cents: f64,
    #[arg(long, default_value_t = 10.0)]
    pub jitter_ms: f64,
    #[command(flatten)]
    pub synth: SynthArgs,
}

/// Parses `argv` (including the program name), runs the command and
/// returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let level = match cli.global.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new().filter_level(level).format_timestamp(None).try_init();

    match commands::dispatch(&cli) {
        Ok(value) => {
            match value {
                commands::Output::Json(v) => println!("{v}"),
                commands::Output::Lines(lines) => lines.iter().for_each(|l| println!("{l}")),
            }
            0
        }
        Err(e) => {
            eprintln!("{}", e.to_json_line());
            1
        }
    }
}
