//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on failure.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use cantus::mcb::{deserialize_bundle, serialize_bundle, DecodeError};
use cantus::metrics::{compare_contours, GROSS_THRESHOLD};
use cantus::pitch::{extract_contour, YinConfig};
use cantus::rhythm::{alignment_from_durations, duration_to_frames, warp_alignment, RateCurve};
use cantus::score::{assign_phone_durations, compile_part, compile_part_spans, compile_score, midi_to_hz, parse_musicxml, ScoreEvent, ScorePart, Syllable};
use cantus::synth::{render_choir, render_voice, Lcg, RenderConfig};
use cantus::wav::{read_wav_file, write_wav_file};
use cantus::{frame_count, mel_spectrogram, AudioClock, Lexicon, MelScale, MonoSignal, PitchContour, Violation};
use common::*;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn cents(est: f64, truth: f64) -> f64 {
    1200.0 * (est / truth).log2()
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Frames whose whole analysis window lies inside the signal.
fn interior(frames: usize, samples: usize, clock: &AudioClock) -> std::ops::Range<usize> {
    let half = clock.window_size as usize / 2;
    let hop = clock.hop as usize;
    let first = half.div_ceil(hop);
    let last = (0..frames).rev().find(|f| f * hop + half <= samples).unwrap_or(0);
    first..last + 1
}

fn yin_accuracy() -> Outcome {
    let clock = AudioClock::default();
    let cfg = YinConfig::default();
    let sr = clock.sample_rate;
    let mut rng = Lcg::new(2024);
    let start = Instant::now();
    let mut errors = Vec::new();
    let (mut voiced, mut total) = (0usize, 0usize);
    for i in 0..50 {
        let f0 = uniform(&mut rng, 110.0, 880.0);
        let samples = if i % 2 == 0 { sine(f0, sr as usize, sr) } else { sawtooth(f0, sr as usize, sr) };
        let n = samples.len();
        let c = extract_contour(&MonoSignal::new(samples, sr).map_err(|e| e.to_string())?, &cfg, &clock)
            .map_err(|e| e.to_string())?;
        for f in interior(c.len(), n, &clock) {
            total += 1;
            if c.voiced[f] {
                voiced += 1;
                errors.push(cents(f64::from(c.f0[f]), f0).abs());
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    let med = median(&mut errors);
    let recall = voiced as f64 / total as f64;
    let detail = format!("median {med:.3} cents, recall {:.2}%, {elapsed:.2} s", 100.0 * recall);
    ensure(med <= 10.0 && recall >= 0.99 && elapsed < 10.0, || detail.clone())?;
    Ok(detail)
}

fn metric_identities() -> Outcome {
    let mut rng = Lcg::new(7);
    for trial in 0..100 {
        let n = 1 + below(&mut rng, 500);
        let c = random_contour(&mut rng, n);
        let r = compare_contours(&c, &c, GROSS_THRESHOLD).map_err(|e| e.to_string())?;
        ensure((r.gpe, r.vde, r.ffe) == (0.0, 0.0, 0.0), || format!("identity trial {trial}: {r:?}"))?;

        let inverted = PitchContour::from_f0(c.f0.iter().map(|&f| if f > 0.0 { 0.0 } else { 200.0 }).collect());
        let r = compare_contours(&c, &inverted, GROSS_THRESHOLD).map_err(|e| e.to_string())?;
        ensure(r.vde == 1.0 && r.ffe == 1.0 && r.n_both_voiced == 0, || format!("inverted trial {trial}: {r:?}"))?;

        let other = random_contour(&mut rng, n);
        let r = compare_contours(&c, &other, GROSS_THRESHOLD).map_err(|e| e.to_string())?;
        // independent frame counts
        let (mut v_err, mut g_err, mut both) = (0usize, 0usize, 0usize);
        for f in 0..n {
            match (c.voiced[f], other.voiced[f]) {
                (true, true) => {
                    both += 1;
                    let (a, b) = (f64::from(c.f0[f]), f64::from(other.f0[f]));
                    g_err += usize::from((b - a).abs() > 0.2 * a);
                }
                (x, y) => v_err += usize::from(x != y),
            }
        }
        let ffe_count = (r.ffe * n as f64).round() as usize;
        let vde_count = (r.vde * n as f64).round() as usize;
        let gpe_count = (r.gpe * r.n_both_voiced as f64).round() as usize;
        ensure(
            r.n_both_voiced == both && vde_count == v_err && gpe_count == g_err && ffe_count == vde_count + gpe_count,
            || format!("decomposition trial {trial}: {r:?} vs oracle v={v_err} g={g_err} both={both}"),
        )?;
    }
    Ok("100 identity, inversion and decomposition trials".into())
}

fn loop_back() -> Outcome {
    let clock = AudioClock::default();
    let start = Instant::now();
    let parts = parse_musicxml(&fixture_text("ten_note.musicxml")).map_err(|e| e.to_string())?;
    let notes: Vec<f64> = parts[0]
        .events
        .iter()
        .filter_map(|e| e.midi)
        .map(|m| midi_to_hz(f64::from(m)).unwrap())
        .collect();
    ensure(notes.len() == 10 && notes.iter().all(|&f| (195.9..=784.0).contains(&f)), || {
        format!("fixture notes out of spec: {notes:?}")
    })?;
    let bundle = compile_part(&parts[0], &Lexicon::bundled(), &clock).map_err(|e| e.to_string())?;
    let audio = render_voice(&bundle, &RenderConfig::default()).map_err(|e| e.to_string())?;
    let est = extract_contour(&audio, &YinConfig::default(), &clock).map_err(|e| e.to_string())?;
    // the render covers frames·hop samples, which tracks to one extra frame
    let est = PitchContour::new(est.f0[..bundle.num_frames()].to_vec(), est.voiced[..bundle.num_frames()].to_vec());
    let r = compare_contours(&bundle.contour, &est, GROSS_THRESHOLD).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed().as_secs_f64();
    let detail = format!(
        "FFE {:.2}% (VDE {:.2}%, GPE {:.2}%) over {} frames, {elapsed:.2} s",
        100.0 * r.ffe,
        100.0 * r.vde,
        100.0 * r.gpe,
        r.n_frames
    );
    ensure(r.ffe <= 0.10 && elapsed < 5.0, || detail.clone())?;
    Ok(detail)
}

fn warp_arithmetic() -> Outcome {
    let map = alignment_from_durations(&[120, 300, 80, 500]).map_err(|e| e.to_string())?;
    let same = warp_alignment(&map, &RateCurve::constant(1.0).unwrap()).map_err(|e| e.to_string())?;
    ensure(same.num_frames() == map.num_frames(), || "identity changed frame count".into())?;
    let worst = (0..map.num_frames())
        .flat_map(|f| (0..map.num_tokens()).map(move |t| (t, f)))
        .map(|(t, f)| (same.weight(t, f) - map.weight(t, f)).abs())
        .fold(0.0f32, f32::max);
    ensure(worst <= 1e-6, || format!("identity column error {worst}"))?;

    let half = warp_alignment(&map, &RateCurve::constant(2.0).unwrap()).map_err(|e| e.to_string())?;
    let target = map.num_frames() as f64 / 2.0;
    ensure((half.num_frames() as f64 - target).abs() <= 1.0, || format!("rate 2 gave {}", half.num_frames()))?;

    let thousand = alignment_from_durations(&[250, 250, 250, 250]).map_err(|e| e.to_string())?;
    let acc = warp_alignment(&thousand, &RateCurve::linear(0.5, 2.0).unwrap()).map_err(|e| e.to_string())?;
    let closed = 1000.0 * 4f64.ln() / 1.5;
    ensure((acc.num_frames() as i64 - 924).abs() <= 1, || format!("accelerando gave {}", acc.num_frames()))?;
    Ok(format!(
        "identity max error {worst:e}, {} -> {} at rate 2, accelerando {} frames (closed form {closed:.3})",
        map.num_frames(),
        half.num_frames(),
        acc.num_frames()
    ))
}

fn score_math() -> Outcome {
    let clock = AudioClock::default();
    let lex = Lexicon::bundled();
    let one = ScorePart::new("one", vec![ScoreEvent::note(69, 1.0, Some(Syllable::single("ah")))]);
    let b = compile_part(&one, &lex, &clock).map_err(|e| e.to_string())?;
    ensure(b.num_frames() == 86, || format!("1 s event gave {} frames", b.num_frames()))?;

    let phones: Vec<_> = ["B", "AE1", "S"].iter().map(|p| p.parse().unwrap()).collect();
    let bass = assign_phone_durations(&ScoreEvent::note(50, 1.0, None), &phones, &clock).map_err(|e| e.to_string())?;
    let frames: Vec<usize> = bass.iter().map(|p| p.1).collect();
    ensure(frames == [2, 75, 9], || format!("Bass allocation {frames:?}"))?;

    let mut checked = 0;
    for (name, xml) in all_score_fixtures() {
        let parts = parse_musicxml(&xml).map_err(|e| format!("{name}: {e}"))?;
        for part in &parts {
            let (bundle, spans) = compile_part_spans(part, &lex, &clock).map_err(|e| format!("{name}: {e}"))?;
            let mut cursor = 0;
            for (i, (event, span)) in part.events.iter().zip(&spans).enumerate() {
                let expected = duration_to_frames(event.duration, &clock).unwrap();
                ensure(span.start == cursor && span.len() == expected, || {
                    format!("{name} part {} event {i}: span {span:?}, expected {expected} frames from {cursor}", part.name)
                })?;
                cursor = span.end;
                checked += 1;
            }
            ensure(cursor == bundle.num_frames(), || format!("{name}: spans do not cover the bundle"))?;
        }
    }
    Ok(format!("86 frames, Bass 2/75/9, conservation over {checked} fixture events"))
}

fn frame_count_law() -> Outcome {
    let clock = AudioClock::default();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut rng = Lcg::new(99);
    for i in 0..20 {
        let n = 300 + below(&mut rng, 40_000);
        let samples: Vec<f32> = (0..n).map(|_| 0.5 * rng.next_signed() as f32).collect();
        let path = dir.path().join(format!("noise_{i}.wav"));
        write_wav_file(&path, &MonoSignal::new(samples, 22050).unwrap()).map_err(|e| e.to_string())?;
        let signal = read_wav_file(&path).map_err(|e| e.to_string())?;
        let mel = mel_spectrogram(&signal, &clock, MelScale::LogCompressed).map_err(|e| e.to_string())?;
        let contour = extract_contour(&signal, &YinConfig::default(), &clock).map_err(|e| e.to_string())?;
        let law = 1 + n / 256;
        ensure(
            mel.num_frames() == law && contour.len() == law && frame_count(n, &clock) == law,
            || format!("N={n}: mel {} contour {} law {law}", mel.num_frames(), contour.len()),
        )?;
    }
    Ok("20 WAV files: mel frames == contour frames == 1 + floor(N/256)".into())
}

fn serialization() -> Outcome {
    let mut rng = Lcg::new(11);
    for i in 0..200 {
        let b = random_bundle(&mut rng);
        let bytes = serialize_bundle(&b).map_err(|e| format!("bundle {i}: {e}"))?;
        let back = deserialize_bundle(&bytes).map_err(|e| format!("bundle {i}: {e}"))?;
        ensure(back == b, || format!("bundle {i} changed in round trip"))?;
        let again = serialize_bundle(&back).map_err(|e| e.to_string())?;
        ensure(again == bytes, || format!("bundle {i} re-encoded differently"))?;
    }

    let good = serialize_bundle(&random_bundle(&mut Lcg::new(5))).map_err(|e| e.to_string())?;
    let mut magic = good.clone();
    magic[..4].copy_from_slice(b"MCB2");
    ensure(matches!(deserialize_bundle(&magic), Err(DecodeError::BadMagic { .. })), || "bad magic".into())?;
    let mut version = good.clone();
    version[4] = 9;
    ensure(
        matches!(deserialize_bundle(&version), Err(DecodeError::UnsupportedVersion { version: 9, .. })),
        || "bad version".into(),
    )?;
    let cut = &good[..good.len() - 1];
    ensure(matches!(deserialize_bundle(cut), Err(DecodeError::Truncated { .. })), || "truncation".into())?;
    let mut long = good.clone();
    long.extend_from_slice(&[0, 0]);
    ensure(
        matches!(deserialize_bundle(&long), Err(DecodeError::TrailingBytes { extra: 2, .. })),
        || "trailing bytes".into(),
    )?;

    // voicing bit set on a frame whose f0 is zero
    let part = ScorePart::new("r", vec![ScoreEvent::rest(0.1), ScoreEvent::note(60, 0.5, Some(Syllable::single("ah")))]);
    let b = compile_part(&part, &Lexicon::bundled(), &AudioClock::default()).map_err(|e| e.to_string())?;
    let mut bytes = serialize_bundle(&b).map_err(|e| e.to_string())?;
    let frames = b.num_frames();
    let bitset = bytes.len() - 4 * frames - 1 - frames.div_ceil(8);
    bytes[bitset] |= 1;
    ensure(
        deserialize_bundle(&bytes) == Err(DecodeError::Invariant(vec![Violation::VoicedWithoutF0 { frame: 0 }])),
        || "voicing edit not reported".into(),
    )?;
    // a frame pointing back to an earlier token breaks monotonicity
    let mut bytes = serialize_bundle(&b).map_err(|e| e.to_string())?;
    let last = bytes.len() - 4;
    bytes[last..].copy_from_slice(&0u32.to_le_bytes());
    ensure(
        matches!(deserialize_bundle(&bytes), Err(DecodeError::Invariant(v)) if v.iter().any(|x| matches!(x, Violation::NonMonotonic { .. }))),
        || "non-monotonic edit not reported".into(),
    )?;
    Ok("200 random bundles bit-exact; 6 corruptions reported with their structured errors".into())
}

fn determinism() -> Outcome {
    let clock = AudioClock::default();
    let lex = Lexicon::bundled();
    let parts = parse_musicxml(&fixture_text("ten_note.musicxml")).map_err(|e| e.to_string())?;
    let bundle = compile_part(&parts[0], &lex, &clock).map_err(|e| e.to_string())?;
    let cfg = RenderConfig {
        seed: 1234,
        ..Default::default()
    };
    let a = render_voice(&bundle, &cfg).map_err(|e| e.to_string())?;
    let b = render_voice(&bundle, &cfg).map_err(|e| e.to_string())?;
    ensure(a.samples() == b.samples(), || "two renders differ".into())?;

    let choir = parse_musicxml(&fixture_text("choir_4part.musicxml")).map_err(|e| e.to_string())?;
    ensure(choir.len() == 4, || format!("choir has {} parts", choir.len()))?;
    let bundles = compile_score(&choir, &lex, &clock, 20).map_err(|e| e.to_string())?;
    ensure(bundles.len() == 80, || format!("{} bundles", bundles.len()))?;
    let mix = render_choir(&bundles, &cfg, 8.0, 10.0).map_err(|e| e.to_string())?;
    let single = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .map_err(|e| e.to_string())?
        .install(|| render_choir(&bundles, &cfg, 8.0, 10.0))
        .map_err(|e| e.to_string())?;
    ensure(mix.samples() == single.samples(), || "choir differs across thread counts".into())?;
    let peak = 20.0 * f64::from(mix.peak()).log10();
    ensure(mix.len() == bundles[0].num_samples(), || "choir length".into())?;
    ensure((peak + 1.0).abs() <= 0.1, || format!("choir peak {peak:.3} dBFS"))?;
    Ok(format!("renders bit-identical; 80-voice choir peak {peak:.3} dBFS, identical on 1 thread"))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 8] = [
        ("Yin accuracy", yin_accuracy),
        ("metric identities", metric_identities),
        ("end-to-end loop-back", loop_back),
        ("warp arithmetic", warp_arithmetic),
        ("score math", score_math),
        ("frame-count law", frame_count_law),
        ("serialization", serialization),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("criterion {} {name}: PASS ({detail})", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {} {name}: FAIL ({detail})", i + 1);
            }
        }
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
