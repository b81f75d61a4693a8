#![allow(dead_code)]

use std::path::PathBuf;

use cantus::synth::Lcg;
use cantus::{AlignmentMap, AudioClock, ConditioningBundle, Phone, PhonemeSequence, PitchContour};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn fixture_text(name: &str) -> String {
    std::fs::read_to_string(fixture(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn all_score_fixtures() -> Vec<(String, String)> {
    let mut names: Vec<_> = std::fs::read_dir(fixture(""))
        .expect("fixtures dir")
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".musicxml"))
        .collect();
    names.sort();
    names.into_iter().map(|n| (n.clone(), fixture_text(&n))).collect()
}

pub fn below(rng: &mut Lcg, n: usize) -> usize {
    (rng.next_f64() * n as f64) as usize
}

pub fn uniform(rng: &mut Lcg, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.next_f64()
}

pub fn random_contour(rng: &mut Lcg, frames: usize) -> PitchContour {
    let f0 = (0..frames)
        .map(|_| if rng.next_f64() < 0.6 { uniform(rng, 50.0, 1000.0) as f32 } else { 0.0 })
        .collect();
    PitchContour::from_f0(f0)
}

/// A valid bundle with random phones, contour, and a hard or soft alignment.
pub fn random_bundle(rng: &mut Lcg) -> ConditioningBundle {
    let inventory: Vec<Phone> = Phone::inventory().collect();
    let tokens: Vec<Phone> = (0..1 + below(rng, 20)).map(|_| inventory[below(rng, inventory.len())]).collect();
    let frames = 1 + below(rng, 300);
    let n = tokens.len();
    let alignment = if rng.next_f64() < 0.5 {
        let mut path: Vec<u32> = (0..frames).map(|_| below(rng, n) as u32).collect();
        path.sort_unstable();
        AlignmentMap::hard(n, path)
    } else {
        let mut w = vec![0.0f32; n * frames];
        for f in 0..frames {
            let col: Vec<f64> = (0..n).map(|_| rng.next_f64() + 1e-3).collect();
            let sum: f64 = col.iter().sum();
            for (t, c) in col.iter().enumerate() {
                w[t * frames + f] = (c / sum) as f32;
            }
        }
        AlignmentMap::soft(n, frames, w)
    };
    ConditioningBundle {
        clock: AudioClock::default(),
        phonemes: PhonemeSequence::new(tokens),
        contour: random_contour(rng, frames),
        alignment,
        speaker_id: rng.next_u64() as u32,
        gst_id: (rng.next_f64() < 0.5).then(|| rng.next_u64() as u32),
    }
}

pub fn sine(hz: f64, n: usize, sr: u32) -> Vec<f32> {
    (0..n)
        .map(|i| (0.5 * (std::f64::consts::TAU * hz * i as f64 / f64::from(sr)).sin()) as f32)
        .collect()
}

pub fn sawtooth(hz: f64, n: usize, sr: u32) -> Vec<f32> {
    (0..n)
        .map(|i| {
            let p = (hz * i as f64 / f64::from(sr)).fract();
            (0.5 * (2.0 * p - 1.0)) as f32
        })
        .collect()
}
