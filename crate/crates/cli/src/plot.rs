//! Median infidelity curves with quartile bands.

use anyhow::{bail, Result};
use plotters::coord::ranged1d::{Ranged, ValueFormatter};
use plotters::coord::types::RangedCoordusize;
use plotters::prelude::*;
use sgt_core::io::SummaryCurve;

/// Smallest infidelity drawn on a log axis.
const LOG_FLOOR: f64 = 1e-12;

pub struct Series {
    pub label: String,
    pub curve: SummaryCurve,
}

pub fn check_series(series: &[Series]) -> Result<usize> {
    let Some(first) = series.first() else {
        bail!("nothing to plot: no input series");
    };
    let len = first.curve.len();
    if len == 0 {
        bail!("series {} has no iterations", first.label);
    }
    for s in series {
        if s.curve.len() != len {
            bail!(
                "inconsistent iteration counts: {} has {} iterations, {} has {len}",
                s.label,
                s.curve.len(),
                first.label
            );
        }
    }
    Ok(len)
}

/// The combined table behind a figure: `series,iteration,median,q25,q75`.
pub fn data_table(series: &[Series]) -> Result<Vec<u8>> {
    let mut out = csv::Writer::from_writer(Vec::new());
    out.write_record(["series", "iteration", "median", "q25", "q75"])?;
    for s in series {
        for k in 0..s.curve.len() {
            out.write_record([
                s.label.clone(),
                (k + 1).to_string(),
                s.curve.median[k].to_string(),
                s.curve.q25[k].to_string(),
                s.curve.q75[k].to_string(),
            ])?;
        }
    }
    Ok(out.into_inner()?)
}

pub fn render_svg(series: &[Series], title: &str, log_scale: bool) -> Result<String> {
    let len = check_series(series)?;
    let values = series
        .iter()
        .flat_map(|s| s.curve.q25.iter().chain(&s.curve.q75).chain(&s.curve.median))
        .copied();
    let (lo, hi) = if log_scale {
        let positive: Vec<f64> = values.map(|v| v.max(LOG_FLOOR)).collect();
        let lo = positive.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = positive.iter().copied().fold(0.0, f64::max);
        (lo / 1.5, (hi * 1.5).max(lo * 10.0))
    } else {
        let hi = values.fold(0.0, f64::max);
        (0.0, if hi > 0.0 { hi * 1.05 } else { 1.0 })
    };

    let mut svg = String::new();
    {
        let root = SVGBackend::with_string(&mut svg, (900, 600)).into_drawing_area();
        root.fill(&WHITE)?;
        let builder = || {
            let mut b = ChartBuilder::on(&root);
            b.caption(title, ("sans-serif", 22))
                .margin(15)
                .x_label_area_size(45)
                .y_label_area_size(80);
            b
        };
        let x_range = 1usize..len.max(2);
        if log_scale {
            let mut chart = builder().build_cartesian_2d(x_range, (lo..hi).log_scale())?;
            draw(&mut chart, series, LOG_FLOOR)?;
        } else {
            let mut chart = builder().build_cartesian_2d(x_range, lo..hi)?;
            draw(&mut chart, series, f64::NEG_INFINITY)?;
        }
        root.present()?;
    }
    Ok(svg)
}

fn draw<'a, Y>(
    chart: &mut ChartContext<'a, SVGBackend<'a>, Cartesian2d<RangedCoordusize, Y>>,
    series: &[Series],
    floor: f64,
) -> Result<()>
where
    Y: Ranged<ValueType = f64> + ValueFormatter<f64>,
{
    chart
        .configure_mesh()
        .x_desc("iteration")
        .y_desc("infidelity")
        .draw()?;
    for (i, s) in series.iter().enumerate() {
        let color = Palette99::pick(i).to_rgba();
        let c = &s.curve;
        let band: Vec<(usize, f64)> = (0..c.len())
            .map(|k| (k + 1, c.q75[k].max(floor)))
            .chain((0..c.len()).rev().map(|k| (k + 1, c.q25[k].max(floor))))
            .collect();
        chart.draw_series(std::iter::once(Polygon::new(band, color.mix(0.2).filled())))?;
        chart
            .draw_series(LineSeries::new(
                (0..c.len()).map(|k| (k + 1, c.median[k].max(floor))),
                color.stroke_width(2),
            ))?
            .label(s.label.as_str())
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], color.stroke_width(2)));
    }
    chart
        .configure_series_labels()
        .position(SeriesLabelPosition::UpperRight)
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .draw()?;
    Ok(())
}
