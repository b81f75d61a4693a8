use std::path::{Path, PathBuf};

use cantus::rhythm::{alignment_from_intervals, parse_intervals};
use cantus::mcb::encode_contour_chunk;
use cantus::score::pad_bundle;
use cantus::wav::{read_wav, write_wav};
use cantus::{
    clean_text, compare_contours, compile_part, extract_contour, g2p, mel_spectrogram, parse_musicxml, render_choir,
    render_voice, scale_contour, validate_bundle, warp_bundle, AudioClock, ConditioningBundle, Lexicon, MelScale,
    MonoSignal, PitchContour, RateCurve, RenderConfig, ScaleMode, VocalRange, YinConfig,
};
use log::info;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::error::{CliError, Context};
use crate::files::{
    output_for, read_bundle, read_contour, slug, write_atomic, write_bundle, write_bytes, write_contour_csv, Manifest,
    ManifestBundle, ManifestPart,
};
use crate::plot::contour_svg;
use crate::{
    AlignArgs, ChoirArgs, Cli, Command, ContourFormat, FfeArgs, GlobalArgs, MelArgs, MetricsCommand, PitchCommand, PitchExtractArgs,
    RenderArgs, RhythmCommand, ScaleArgs, ScaleModeArg, ScoreCommand, ScoreCompileArgs, SynthArgs, TextCommand,
    WarpArgs, YinArgs,
};

pub enum Output {
    Json(Value),
    Lines(Vec<String>),
}

pub fn dispatch(cli: &Cli) -> Result<Output, CliError> {
    let g = &cli.global;
    g.clock()?;
    match &cli.command {
        Command::Pitch(PitchCommand::Extract(a)) => pitch_extract(g, a).map(Output::Json),
        Command::Mel(a) => mel(g, a).map(Output::Json),
        Command::Text(TextCommand::G2p { text }) => text_g2p(g, text).map(Output::Lines),
        Command::Score(ScoreCommand::Compile(a)) => score_compile(g, a).map(Output::Json),
        Command::Rhythm(RhythmCommand::Warp(a)) => rhythm_warp(g, a).map(Output::Json),
        Command::Rhythm(RhythmCommand::Align(a)) => rhythm_align(g, a).map(Output::Json),
        Command::Metrics(MetricsCommand::Ffe(a)) => metrics_ffe(g, a).map(Output::Json),
        Command::Render(a) => render(g, a).map(Output::Json),
        Command::Choir(a) => choir(g, a).map(Output::Json),
    }
}

fn lexicon(g: &GlobalArgs) -> Result<Lexicon, CliError> {
    match &g.lexicon {
        Some(path) => Lexicon::load(path).at(path),
        None => Ok(Lexicon::bundled()),
    }
}

fn yin_config(a: &YinArgs, clock: &AudioClock) -> Result<YinConfig, CliError> {
    let config = YinConfig {
        harmonicity_threshold: a.threshold,
        f_min: a.fmin,
        f_max: a.fmax,
        median_smoothing: a.median,
        ..YinConfig::default()
    };
    config.validate(clock)?;
    Ok(config)
}

fn vocal_range(a: &ScaleArgs) -> Result<Option<(VocalRange, ScaleMode)>, CliError> {
    let Some(spec) = &a.range else { return Ok(None) };
    let bad = || CliError::new("usage", format!("range must be LOW:HIGH in Hz, got {spec:?}"));
    let (lo, hi) = spec.split_once(':').ok_or_else(bad)?;
    let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
    let mode = match a.scale_mode {
        ScaleModeArg::Octave => ScaleMode::OctaveSnap,
        ScaleModeArg::Free => ScaleMode::Free,
    };
    Ok(Some((VocalRange::new(lo, hi)?, mode)))
}

fn read_signal(path: &Path, clock: &AudioClock) -> Result<MonoSignal, CliError> {
    let file = std::fs::File::open(path).at(path)?;
    let signal = read_wav(std::io::BufReader::new(file)).at(path)?;
    if signal.sample_rate() != clock.sample_rate {
        return Err(CliError::new(
            "wav",
            format!(
                "{}: sample rate {} Hz does not match --sample-rate {}",
                path.display(),
                signal.sample_rate(),
                clock.sample_rate
            ),
        ));
    }
    Ok(signal)
}

fn write_signal(path: &Path, signal: &MonoSignal) -> Result<(), CliError> {
    write_atomic(path, |f| Ok(write_wav(std::io::BufWriter::new(f), signal)?))
}

fn contour_of(
    path: &Path,
    clock: &AudioClock,
    yin: &YinConfig,
    range: Option<(VocalRange, ScaleMode)>,
) -> Result<(PitchContour, Option<f64>), CliError> {
    let signal = read_signal(path, clock)?;
    let contour = extract_contour(&signal, yin, clock).at(path)?;
    match range {
        None => Ok((contour, None)),
        Some((range, mode)) => {
            let (scaled, factor) = scale_contour(&contour, &range, mode).at(path)?;
            Ok((scaled, Some(factor)))
        }
    }
}

fn median_f0(c: &PitchContour) -> Option<f64> {
    let mut v: Vec<f64> = c
        .f0
        .iter()
        .zip(&c.voiced)
        .filter(|(_, &v)| v)
        .map(|(&f, _)| f64::from(f))
        .collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

fn single_or_array(mut items: Vec<Value>) -> Value {
    if items.len() == 1 {
        items.pop().unwrap_or(Value::Null)
    } else {
        Value::Array(items)
    }
}

fn prepare_output_dir(output: &Path, many: bool) -> Result<(), CliError> {
    if many {
        std::fs::create_dir_all(output).at(output)?;
    }
    Ok(())
}

fn pitch_extract(g: &GlobalArgs, a: &PitchExtractArgs) -> Result<Value, CliError> {
    let clock = g.clock()?;
    let yin = yin_config(&a.yin, &clock)?;
    let range = vocal_range(&a.scale)?;
    let many = a.inputs.len() > 1;
    if many && a.plot.is_some() {
        return Err(CliError::new("usage", "--plot takes a single input"));
    }
    let output = a.output.as_ref().map(|o| g.out(o));
    let plot = a.plot.as_ref().map(|p| g.out(p));
    if let Some(out) = &output {
        prepare_output_dir(out, many)?;
    }
    let ext = match a.format {
        ContourFormat::Csv => "csv",
        ContourFormat::Chunk => "mcbc",
    };
    let results: Result<Vec<Value>, CliError> = a
        .inputs
        .par_iter()
        .map(|input| {
            let (contour, factor) = contour_of(input, &clock, &yin, range)?;
            let output = output.as_ref().map(|o| output_for(input, o, many, ext));
            if let Some(out) = &output {
                match a.format {
                    ContourFormat::Csv => write_contour_csv(out, &contour, &clock)?,
                    ContourFormat::Chunk => write_bytes(out, &encode_contour_chunk(&contour))?,
                }
            }
            if let Some(plot) = &plot {
                let title = input.file_name().map_or_else(String::new, |n| n.to_string_lossy().into_owned());
                contour_svg(plot, &title, clock.frame_rate(), &[("f0", &contour)])?;
            }
            info!("{}: {} frames, {} voiced", input.display(), contour.len(), contour.num_voiced());
            Ok(json!({
                "input": input,
                "output": output,
                "frames": contour.len(),
                "voiced_frames": contour.num_voiced(),
                "median_f0_hz": median_f0(&contour),
                "scale_factor": factor,
            }))
        })
        .collect();
    Ok(single_or_array(results?))
}

fn mel(g: &GlobalArgs, a: &MelArgs) -> Result<Value, CliError> {
    let clock = g.clock()?;
    let many = a.inputs.len() > 1;
    let output = g.out(&a.output);
    prepare_output_dir(&output, many)?;
    let scale = if a.linear { MelScale::LinearPower } else { MelScale::LogCompressed };
    let ext = if a.csv { "csv" } else { "mels" };
    let results: Result<Vec<Value>, CliError> = a
        .inputs
        .par_iter()
        .map(|input| {
            let signal = read_signal(input, &clock)?;
            let mel = mel_spectrogram(&signal, &clock, scale).at(input)?;
            let out = output_for(input, &output, many, ext);
            write_atomic(&out, |f| {
                let w = std::io::BufWriter::new(f);
                Ok(if a.csv { mel.write_csv(w) } else { mel.write_mels(w) }?)
            })?;
            Ok(json!({
                "input": input,
                "output": out,
                "bands": mel.values.nrows(),
                "frames": mel.num_frames(),
                "scale": if a.linear { "linear" } else { "log" },
            }))
        })
        .collect();
    Ok(single_or_array(results?))
}

fn text_g2p(g: &GlobalArgs, text: &[String]) -> Result<Vec<String>, CliError> {
    let lex = lexicon(g)?;
    let words = clean_text(&text.join(" "));
    let seq = g2p(&words, &lex)?;
    Ok(seq.iter().map(ToString::to_string).collect())
}

fn parse_transpose(spec: &str, names: &[String]) -> Result<(usize, i32), CliError> {
    let bad = |why: &str| CliError::new("usage", format!("--transpose {spec:?}: {why}"));
    let (part, semis) = spec.rsplit_once('=').ok_or_else(|| bad("expected PART=SEMITONES"))?;
    let semis: i32 = semis.trim().parse().map_err(|_| bad("semitones must be an integer"))?;
    let index = names
        .iter()
        .position(|n| n.eq_ignore_ascii_case(part.trim()))
        .or_else(|| part.trim().parse::<usize>().ok().filter(|&i| i < names.len()))
        .ok_or_else(|| bad("no such part"))?;
    Ok((index, semis))
}

fn score_compile(g: &GlobalArgs, a: &ScoreCompileArgs) -> Result<Value, CliError> {
    let clock = g.clock()?;
    let lex = lexicon(g)?;
    if a.voices_per_part == 0 {
        return Err(CliError::new("usage", "--voices-per-part must be at least 1"));
    }
    let xml = std::fs::read_to_string(&a.input).at(&a.input)?;
    let mut parts = parse_musicxml(&xml).at(&a.input)?;
    let names: Vec<String> = parts.iter().map(|p| p.name.clone()).collect();
    for spec in &a.transpose {
        let (i, semis) = parse_transpose(spec, &names)?;
        parts[i].transpose += semis;
    }
    let compiled: Result<Vec<ConditioningBundle>, CliError> = parts
        .par_iter()
        .map(|p| {
            compile_part(p, &lex, &clock)
                .map_err(|e| CliError::new("score", format!("{}: part {:?}: {e}", a.input.display(), p.name)))
        })
        .collect();
    let compiled = compiled?;
    let frames = compiled.iter().map(ConditioningBundle::num_frames).max().unwrap_or(0);

    let mut manifest = Manifest {
        source: a.input.file_name().map_or_else(String::new, |n| n.to_string_lossy().into_owned()),
        tempo: parts.first().map_or(0.0, |p| p.tempo),
        frames,
        sample_rate: clock.sample_rate,
        hop: clock.hop,
        voices_per_part: a.voices_per_part,
        parts: Vec::new(),
    };
    let mut writes = Vec::new();
    for (p, (part, bundle)) in parts.iter().zip(&compiled).enumerate() {
        let padded = pad_bundle(bundle, frames);
        let mut entries = Vec::new();
        for v in 0..a.voices_per_part {
            let speaker_id = (p * a.voices_per_part + v) as u32;
            let file = format!("p{p}_{}_v{v:02}.mcb", slug(&part.name));
            writes.push((file.clone(), ConditioningBundle { speaker_id, ..padded.clone() }));
            entries.push(ManifestBundle { file, speaker_id });
        }
        manifest.parts.push(ManifestPart {
            name: part.name.clone(),
            transpose: part.transpose,
            frames: bundle.num_frames(),
            bundles: entries,
        });
    }
    if let Some(dir) = a.output.as_ref().map(|o| g.out(o)) {
        std::fs::create_dir_all(&dir).at(&dir)?;
        writes
            .par_iter()
            .try_for_each(|(file, bundle)| write_bundle(&dir.join(file), bundle))?;
        let path = dir.join("manifest.json");
        let text = serde_json::to_string_pretty(&manifest)?;
        write_atomic(&path, |f| Ok(std::io::Write::write_all(f, text.as_bytes())?))?;
        info!("wrote {} bundles to {}", writes.len(), dir.display());
    }
    Ok(serde_json::to_value(&manifest)?)
}

fn rhythm_warp(g: &GlobalArgs, a: &WarpArgs) -> Result<Value, CliError> {
    let output = g.out(&a.output);
    let curve: RateCurve = a.rate_curve.parse()?;
    let bundle = read_bundle(&a.input)?;
    let warped = warp_bundle(&bundle, &curve).at(&a.input)?;
    write_bundle(&output, &warped)?;
    Ok(json!({
        "input": a.input,
        "output": output,
        "frames_in": bundle.num_frames(),
        "frames_out": warped.num_frames(),
        "hard": warped.alignment.is_hard(),
    }))
}

fn rhythm_align(g: &GlobalArgs, a: &AlignArgs) -> Result<Value, CliError> {
    let clock = g.clock()?;
    let lex = lexicon(g)?;
    let yin = yin_config(&a.yin, &clock)?;
    let (contour, factor) = contour_of(&a.wav, &clock, &yin, vocal_range(&a.scale)?)?;
    let tsv = std::fs::read_to_string(&a.intervals).at(&a.intervals)?;
    let intervals = parse_intervals(&tsv).at(&a.intervals)?;
    let mut tokens = vec![cantus::Phone::SIL];
    tokens.extend(g2p(&clean_text(&a.text), &lex)?.tokens);
    tokens.push(cantus::Phone::SIL);
    let phonemes = cantus::PhonemeSequence::new(tokens);
    let alignment = alignment_from_intervals(&intervals, &phonemes, contour.len(), &clock).at(&a.intervals)?;
    let bundle = ConditioningBundle {
        clock,
        phonemes,
        contour,
        alignment,
        speaker_id: a.speaker,
        gst_id: a.gst,
    };
    let violations = validate_bundle(&bundle);
    if !violations.is_empty() {
        let list: Vec<String> = violations.iter().map(ToString::to_string).collect();
        return Err(CliError::new("bundle", list.join("; ")));
    }
    let output = g.out(&a.output);
    write_bundle(&output, &bundle)?;
    Ok(json!({
        "output": output,
        "frames": bundle.num_frames(),
        "tokens": bundle.phonemes.len(),
        "phonemes": bundle.phonemes.to_string(),
        "scale_factor": factor,
    }))
}

fn metrics_ffe(g: &GlobalArgs, a: &FfeArgs) -> Result<Value, CliError> {
    let (mut reference, mut estimate, frame_rate) = if a.contours {
        (read_contour(&a.reference)?, read_contour(&a.estimate)?, g.clock()?.frame_rate())
    } else {
        let clock = g.clock()?;
        let yin = yin_config(&a.yin, &clock)?;
        let (r, e) = rayon::join(
            || contour_of(&a.reference, &clock, &yin, None),
            || contour_of(&a.estimate, &clock, &yin, None),
        );
        (r?.0, e?.0, clock.frame_rate())
    };
    if a.truncate {
        let n = reference.len().min(estimate.len());
        for c in [&mut reference, &mut estimate] {
            c.f0.truncate(n);
            c.voiced.truncate(n);
        }
    }
    let report = compare_contours(&reference, &estimate, a.gross_threshold)?;
    if let Some(plot) = a.plot.as_ref().map(|p| g.out(p)) {
        contour_svg(&plot, "reference vs estimate", frame_rate, &[("reference", &reference), ("estimate", &estimate)])?;
    }
    Ok(serde_json::to_value(&report)?)
}

fn render_config(g: &GlobalArgs, s: &SynthArgs) -> RenderConfig {
    RenderConfig {
        harmonic_rolloff: s.rolloff,
        max_harmonics: s.max_harmonics,
        noise_gain: s.noise_gain,
        crossfade: s.crossfade,
        seed: g.seed,
    }
}

fn signal_summary(output: &Path, signal: &MonoSignal) -> Value {
    let peak = f64::from(signal.peak());
    json!({
        "output": output,
        "samples": signal.len(),
        "seconds": signal.duration(),
        "sample_rate": signal.sample_rate(),
        "peak_dbfs": if peak > 0.0 { Some(20.0 * peak.log10()) } else { None },
    })
}

fn render(g: &GlobalArgs, a: &RenderArgs) -> Result<Value, CliError> {
    let bundle = read_bundle(&a.input)?;
    let signal = render_voice(&bundle, &render_config(g, &a.synth)).at(&a.input)?;
    let output = g.out(&a.output);
    write_signal(&output, &signal)?;
    Ok(signal_summary(&output, &signal))
}

fn choir(g: &GlobalArgs, a: &ChoirArgs) -> Result<Value, CliError> {
    let manifest = Manifest::read(&a.manifest)?;
    let paths: Vec<PathBuf> = manifest.bundle_paths(&a.manifest);
    let bundles: Result<Vec<ConditioningBundle>, CliError> = paths.par_iter().map(|p| read_bundle(p)).collect();
    let bundles = bundles?;
    let signal = render_choir(&bundles, &render_config(g, &a.synth), a.detune_cents, a.jitter_ms).at(&a.manifest)?;
    let output = g.out(&a.output);
    write_signal(&output, &signal)?;
    let mut summary = signal_summary(&output, &signal);
    summary["voices"] = json!(bundles.len());
    Ok(summary)
}
