use std::io::Write;
use std::path::Path;

use cantus::PitchContour;
use plotters::prelude::*;

use crate::error::CliError;
use crate::files::write_atomic;

const PALETTE: [RGBColor; 3] = [RGBColor(31, 119, 180), RGBColor(214, 39, 40), RGBColor(44, 160, 44)];

fn plot_err(e: impl std::fmt::Display) -> CliError {
    CliError::new("plot", e.to_string())
}

/// Voiced stretches of each contour as lines over time, saved as SVG.
pub fn contour_svg(path: &Path, title: &str, frame_rate: f64, series: &[(&str, &PitchContour)]) -> Result<(), CliError> {
    let frames = series.iter().map(|(_, c)| c.len()).max().unwrap_or(0).max(1);
    let top = series
        .iter()
        .flat_map(|(_, c)| c.f0.iter().copied())
        .fold(0.0f32, f32::max)
        .max(100.0) as f64
        * 1.1;
    let mut svg = String::new();
    {
        let root = SVGBackend::with_string(&mut svg, (1000, 420)).into_drawing_area();
        root.fill(&WHITE).map_err(plot_err)?;
        let mut chart = ChartBuilder::on(&root)
            .caption(title, ("sans-serif", 20))
            .margin(12)
            .x_label_area_size(36)
            .y_label_area_size(56)
            .build_cartesian_2d(0.0..frames as f64 / frame_rate, 0.0..top)
            .map_err(plot_err)?;
        chart
            .configure_mesh()
            .x_desc("time (s)")
            .y_desc("f0 (Hz)")
            .draw()
            .map_err(plot_err)?;
        for (k, (name, contour)) in series.iter().enumerate() {
            let color = PALETTE[k % PALETTE.len()];
            let mut first = true;
            let mut run: Vec<(f64, f64)> = Vec::new();
            let mut flush = |run: &mut Vec<(f64, f64)>, chart: &mut ChartContext<_, _>| -> Result<(), CliError> {
                if run.is_empty() {
                    return Ok(());
                }
                let style = color.stroke_width(2);
                let drawn = chart.draw_series(LineSeries::new(run.drain(..), style)).map_err(plot_err)?;
                if first {
                    drawn
                        .label(*name)
                        .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 18, y)], color.stroke_width(2)));
                    first = false;
                }
                Ok(())
            };
            for (f, (&f0, &v)) in contour.f0.iter().zip(&contour.voiced).enumerate() {
                if v {
                    run.push((f as f64 / frame_rate, f64::from(f0)));
                } else {
                    flush(&mut run, &mut chart)?;
                }
            }
            flush(&mut run, &mut chart)?;
        }
        chart
            .configure_series_labels()
            .background_style(WHITE.mix(0.8))
            .border_style(BLACK)
            .draw()
            .map_err(plot_err)?;
        root.present().map_err(plot_err)?;
    }
    write_atomic(path, |f| Ok(f.write_all(svg.as_bytes())?))
}
