use std::io::Write;
use std::path::{Path, PathBuf};

use cantus::mcb::decode_contour_chunk;
use cantus::{deserialize_bundle, serialize_bundle, AudioClock, ConditioningBundle, PitchContour};
use serde::{Deserialize, Serialize};
use tempfile::NamedTempFile;

use crate::error::{CliError, Context};

/// Writes through a temporary file in the target directory, then renames it
/// into place.
pub fn write_atomic<F>(path: &Path, fill: F) -> Result<(), CliError>
where
    F: FnOnce(&mut NamedTempFile) -> Result<(), CliError>,
{
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = NamedTempFile::new_in(dir).at(path)?;
    fill(&mut tmp).map_err(|e| CliError::new(e.kind, format!("{}: {}", path.display(), e.message)))?;
    tmp.as_file().sync_all().at(path)?;
    tmp.persist(path).at(path)?;
    Ok(())
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    write_atomic(path, |f| Ok(f.write_all(bytes)?))
}

pub fn read_bundle(path: &Path) -> Result<ConditioningBundle, CliError> {
    let bytes = std::fs::read(path).at(path)?;
    deserialize_bundle(&bytes).at(path)
}

pub fn write_bundle(path: &Path, bundle: &ConditioningBundle) -> Result<(), CliError> {
    let bytes = serialize_bundle(bundle).at(path)?;
    write_bytes(path, &bytes)
}

#[derive(Debug, Serialize, Deserialize)]
struct ContourRow {
    frame: usize,
    time_s: f64,
    f0_hz: f32,
    voiced: u8,
}

/// CSV with columns `frame,time_s,f0_hz,voiced`.
pub fn write_contour_csv(path: &Path, contour: &PitchContour, clock: &AudioClock) -> Result<(), CliError> {
    write_atomic(path, |f| {
        let mut w = csv::Writer::from_writer(f);
        for (frame, (&f0_hz, &voiced)) in contour.f0.iter().zip(&contour.voiced).enumerate() {
            w.serialize(ContourRow {
                frame,
                time_s: frame as f64 / clock.frame_rate(),
                f0_hz,
                voiced: u8::from(voiced),
            })?;
        }
        w.flush()?;
        Ok(())
    })
}

/// Reads a contour from a raw contour chunk (`.mcbc`), a CSV with an `f0_hz` (or `f0`) column and an
/// optional `voiced` column, or from the contour of an `.mcb` bundle.
pub fn read_contour(path: &Path) -> Result<PitchContour, CliError> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("mcb") => return Ok(read_bundle(path)?.contour),
        Some("mcbc") => return decode_contour_chunk(&std::fs::read(path).at(path)?).at(path),
        _ => {}
    }
    let mut r = csv::Reader::from_path(path).at(path)?;
    let headers = r.headers().at(path)?.clone();
    let col = |names: &[&str]| headers.iter().position(|h| names.contains(&h.trim()));
    let f0_col = col(&["f0_hz", "f0"])
        .ok_or_else(|| CliError::new("csv", format!("{}: no f0_hz column", path.display())))?;
    let voiced_col = col(&["voiced"]);
    let mut f0 = Vec::new();
    let mut voiced = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.at(path)?;
        let bad = |what: &str| CliError::new("csv", format!("{}: row {}: bad {what}", path.display(), i + 1));
        let f: f32 = rec.get(f0_col).and_then(|s| s.trim().parse().ok()).ok_or_else(|| bad("f0"))?;
        let v = match voiced_col {
            None => f > 0.0,
            Some(c) => match rec.get(c).map(str::trim) {
                Some("1" | "true") => true,
                Some("0" | "false") => false,
                _ => return Err(bad("voiced flag")),
            },
        };
        f0.push(f);
        voiced.push(v);
    }
    Ok(PitchContour::new(f0, voiced))
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ManifestBundle {
    pub file: String,
    pub speaker_id: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ManifestPart {
    pub name: String,
    pub transpose: i32,
    /// Frames before padding to the common length.
    pub frames: usize,
    pub bundles: Vec<ManifestBundle>,
}

/// Index written next to the bundles of a compiled score.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Manifest {
    pub source: String,
    pub tempo: f64,
    pub frames: usize,
    pub sample_rate: u32,
    pub hop: u32,
    pub voices_per_part: usize,
    pub parts: Vec<ManifestPart>,
}

impl Manifest {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).at(path)?;
        serde_json::from_str(&text).at(path)
    }

    /// Bundle paths in part then voice order, resolved against the manifest's directory.
    pub fn bundle_paths(&self, manifest_path: &Path) -> Vec<PathBuf> {
        let dir = manifest_path.parent().unwrap_or(Path::new("."));
        self.parts
            .iter()
            .flat_map(|p| p.bundles.iter().map(|b| dir.join(&b.file)))
            .collect()
    }
}

/// Lowercase ASCII file-name stem for a part name.
pub fn slug(name: &str) -> String {
    let s: String = name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_lowercase() } else { '_' })
        .collect();
    let s = s.trim_matches('_').to_string();
    if s.is_empty() {
        "part".into()
    } else {
        s
    }
}

/// Output path for `input`: `output` itself for a single input, otherwise
/// `output/<stem>.<ext>`.
pub fn output_for(input: &Path, output: &Path, many: bool, ext: &str) -> PathBuf {
    if many {
        let stem = input.file_stem().map_or_else(|| "out".into(), |s| s.to_string_lossy().into_owned());
        output.join(format!("{stem}.{ext}"))
    } else {
        output.to_path_buf()
    }
}
