//! Gross Pitch Error, Voicing Decision Error and F0 Frame Error.

use serde::Serialize;
use thiserror::Error;

use crate::bundle::PitchContour;
use crate::clock::AudioClock;
use crate::dsp::MonoSignal;
use crate::pitch::{extract_contour, PitchError, YinConfig};

/// Relative deviation from the reference above which a pitch is a gross error.
pub const GROSS_THRESHOLD: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("contour lengths differ: reference {reference}, estimate {estimate}")]
    LengthMismatch { reference: usize, estimate: usize },
    #[error("contours are empty")]
    Empty,
    #[error("sample rates differ: {reference} Hz vs {estimate} Hz")]
    RateMismatch { reference: u32, estimate: u32 },
    #[error(transparent)]
    Pitch(#[from] PitchError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricReport {
    pub gpe: f64,
    pub vde: f64,
    pub ffe: f64,
    pub n_frames: usize,
    pub n_both_voiced: usize,
    #[serde(skip)]
    pub voicing_errors: usize,
    #[serde(skip)]
    pub gross_errors: usize,
}

impl MetricReport {
    fn from_counts(n_frames: usize, n_both_voiced: usize, voicing_errors: usize, gross_errors: usize) -> Self {
        let frac = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        Self {
            gpe: frac(gross_errors, n_both_voiced),
            vde: frac(voicing_errors, n_frames),
            ffe: frac(voicing_errors + gross_errors, n_frames),
            n_frames,
            n_both_voiced,
            voicing_errors,
            gross_errors,
        }
    }
}

/// Frame-by-frame comparison; `gross_threshold` is relative to the reference f0.
pub fn compare_contours(
    reference: &PitchContour,
    estimate: &PitchContour,
    gross_threshold: f64,
) -> Result<MetricReport, MetricsError> {
    if reference.len() != estimate.len() {
        return Err(MetricsError::LengthMismatch {
            reference: reference.len(),
            estimate: estimate.len(),
        });
    }
    if reference.is_empty() {
        return Err(MetricsError::Empty);
    }
    let (mut both, mut voicing, mut gross) = (0, 0, 0);
    for i in 0..reference.len() {
        match (reference.voiced[i], estimate.voiced[i]) {
            (true, true) => {
                both += 1;
                let r = f64::from(reference.f0[i]);
                if (f64::from(estimate.f0[i]) - r).abs() > gross_threshold * r {
                    gross += 1;
                }
            }
            (a, b) if a != b => voicing += 1,
            _ => {}
        }
    }
    Ok(MetricReport::from_counts(reference.len(), both, voicing, gross))
}

/// Tracks both signals with the same Yin settings and compares the contours.
pub fn evaluate_pair(
    reference: &MonoSignal,
    estimate: &MonoSignal,
    config: &YinConfig,
    clock: &AudioClock,
) -> Result<MetricReport, MetricsError> {
    if reference.sample_rate() != estimate.sample_rate() {
        return Err(MetricsError::RateMismatch {
            reference: reference.sample_rate(),
            estimate: estimate.sample_rate(),
        });
    }
    if reference.len() != estimate.len() {
        return Err(MetricsError::LengthMismatch {
            reference: reference.len(),
            estimate: estimate.len(),
        });
    }
    let r = extract_contour(reference, config, clock)?;
    let e = extract_contour(estimate, config, clock)?;
    compare_contours(&r, &e, GROSS_THRESHOLD)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::TAU;

    use proptest::prelude::*;

    use super::*;

    fn sine(hz: f64, n: usize) -> Vec<f32> {
        (0..n).map(|i| (0.5 * (TAU * hz * i as f64 / 22050.0).sin()) as f32).collect()
    }

    #[test]
    fn identity_is_zero() {
        let c = PitchContour::from_f0(vec![0.0, 100.0, 220.0, 0.0]);
        let r = compare_contours(&c, &c, GROSS_THRESHOLD).unwrap();
        assert_eq!((r.gpe, r.vde, r.ffe, r.n_frames, r.n_both_voiced), (0.0, 0.0, 0.0, 4, 2));
    }

    #[test]
    fn inverted_voicing() {
        let a = PitchContour::from_f0(vec![0.0, 100.0, 220.0, 0.0]);
        let b = PitchContour::from_f0(vec![150.0, 0.0, 0.0, 300.0]);
        let r = compare_contours(&a, &b, GROSS_THRESHOLD).unwrap();
        assert_eq!((r.gpe, r.vde, r.ffe, r.n_both_voiced), (0.0, 1.0, 1.0, 0));
    }

    #[test]
    fn half_gross_errors() {
        let reference = PitchContour::from_f0(vec![100.0; 10]);
        let mut f0 = vec![130.0; 5];
        f0.extend([100.0; 5]);
        let r = compare_contours(&reference, &PitchContour::from_f0(f0), GROSS_THRESHOLD).unwrap();
        assert_eq!((r.gpe, r.vde, r.ffe), (0.5, 0.0, 0.5));
    }

    #[test]
    fn gpe_is_asymmetric() {
        // 100 vs 121: 21% above the reference, but only 17.4% below 121
        let a = PitchContour::from_f0(vec![100.0]);
        let b = PitchContour::from_f0(vec![121.0]);
        assert_eq!(compare_contours(&a, &b, GROSS_THRESHOLD).unwrap().gpe, 1.0);
        assert_eq!(compare_contours(&b, &a, GROSS_THRESHOLD).unwrap().gpe, 0.0);
    }

    #[test]
    fn length_mismatch_and_empty() {
        let a = PitchContour::from_f0(vec![100.0]);
        let b = PitchContour::from_f0(vec![100.0, 0.0]);
        assert!(matches!(
            compare_contours(&a, &b, GROSS_THRESHOLD),
            Err(MetricsError::LengthMismatch { .. })
        ));
        let e = PitchContour::default();
        assert_eq!(compare_contours(&e, &e, GROSS_THRESHOLD), Err(MetricsError::Empty));
    }

    #[test]
    fn wav_self_comparison() {
        let clock = AudioClock::default();
        let s = MonoSignal::new(sine(440.0, 22050), 22050).unwrap();
        let r = evaluate_pair(&s, &s, &YinConfig::default(), &clock).unwrap();
        assert_eq!(r.ffe, 0.0);
    }

    #[test]
    fn silenced_tail_gives_quarter_vde() {
        let clock = AudioClock::default();
        let n = 22050;
        let a = sine(440.0, n);
        let mut b = a.clone();
        for x in &mut b[3 * n / 4..] {
            *x = 0.0;
        }
        let cfg = YinConfig::default();
        let sa = MonoSignal::new(a, 22050).unwrap();
        let sb = MonoSignal::new(b, 22050).unwrap();
        let r = evaluate_pair(&sa, &sb, &cfg, &clock).unwrap();
        // independent count: frames whose center falls in the silenced quarter
        let frames = r.n_frames;
        let silent = (0..frames).filter(|&f| f * 256 >= 3 * n / 4).count();
        let expected = silent as f64 / frames as f64;
        assert!((r.vde - expected).abs() <= 3.0 / frames as f64, "vde {} expected {expected}", r.vde);
        assert!((r.vde - 0.25).abs() <= 3.0 / frames as f64);
    }

    #[test]
    fn major_third_is_gross() {
        let clock = AudioClock::default();
        let a = MonoSignal::new(sine(440.0, 22050), 22050).unwrap();
        let b = MonoSignal::new(sine(550.0, 22050), 22050).unwrap();
        let cfg = YinConfig::default();
        let ca = extract_contour(&a, &cfg, &clock).unwrap();
        let cb = extract_contour(&b, &cfg, &clock).unwrap();
        let interior = 4..ca.len() - 4;
        let ra = PitchContour::new(ca.f0[interior.clone()].to_vec(), ca.voiced[interior.clone()].to_vec());
        let rb = PitchContour::new(cb.f0[interior.clone()].to_vec(), cb.voiced[interior].to_vec());
        let r = compare_contours(&ra, &rb, GROSS_THRESHOLD).unwrap();
        assert_eq!((r.gpe, r.ffe), (1.0, 1.0));
        assert!(evaluate_pair(&a, &b, &cfg, &clock).unwrap().ffe > 0.9);
    }

    #[test]
    fn pair_preconditions() {
        let clock = AudioClock::default();
        let cfg = YinConfig::default();
        let a = MonoSignal::new(sine(440.0, 4096), 22050).unwrap();
        let b = MonoSignal::new(sine(440.0, 4000), 22050).unwrap();
        let c = MonoSignal::new(sine(440.0, 4096), 16000).unwrap();
        assert!(matches!(evaluate_pair(&a, &b, &cfg, &clock), Err(MetricsError::LengthMismatch { .. })));
        assert!(matches!(evaluate_pair(&a, &c, &cfg, &clock), Err(MetricsError::RateMismatch { .. })));
    }

    fn arb_contour(n: usize) -> impl Strategy<Value = PitchContour> {
        prop::collection::vec(prop::option::of(50.0f32..1000.0), n)
            .prop_map(|v| PitchContour::from_f0(v.into_iter().map(|x| x.unwrap_or(0.0)).collect()))
    }

    fn arb_pair() -> impl Strategy<Value = (PitchContour, PitchContour)> {
        (1usize..200).prop_flat_map(|n| (arb_contour(n), arb_contour(n)))
    }

    proptest! {
        #[test]
        fn identity_law(c in (1usize..200).prop_flat_map(arb_contour)) {
            let r = compare_contours(&c, &c, GROSS_THRESHOLD).unwrap();
            prop_assert_eq!((r.gpe, r.vde, r.ffe), (0.0, 0.0, 0.0));
        }

        #[test]
        fn decomposition_and_bounds((a, b) in arb_pair()) {
            let r = compare_contours(&a, &b, GROSS_THRESHOLD).unwrap();
            let n = r.n_frames as f64;
            let ffe_count = (r.ffe * n).round() as usize;
            let vde_count = (r.vde * n).round() as usize;
            let gpe_count = (r.gpe * r.n_both_voiced as f64).round() as usize;
            prop_assert_eq!(ffe_count, vde_count + gpe_count);
            prop_assert!((r.ffe - (r.vde * n + r.gpe * r.n_both_voiced as f64) / n).abs() < 1e-9);
            prop_assert!(r.vde <= r.ffe && r.ffe <= 1.0);
            prop_assert!((0.0..=1.0).contains(&r.gpe));
        }

        #[test]
        fn vde_is_symmetric((a, b) in arb_pair()) {
            let ab = compare_contours(&a, &b, GROSS_THRESHOLD).unwrap();
            let ba = compare_contours(&b, &a, GROSS_THRESHOLD).unwrap();
            prop_assert_eq!(ab.vde, ba.vde);
        }
    }
}
