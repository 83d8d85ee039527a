//! SVG figures from run logs.

use std::path::Path;
use std::str::FromStr;

use dobac_core::{DobacError, Result, RunLog};
use plotters::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotSpec {
    /// `x1` against `xr1`.
    Tracking,
    /// `||e||` of every log on one axis.
    ErrorComparison,
    /// `u_drj` with the `+-u_bar` limits.
    UDrj,
    DVsDhat,
    Eta,
}

impl PlotSpec {
    pub const ALL: [PlotSpec; 5] =
        [PlotSpec::Tracking, PlotSpec::ErrorComparison, PlotSpec::UDrj, PlotSpec::DVsDhat, PlotSpec::Eta];

    pub fn name(self) -> &'static str {
        match self {
            PlotSpec::Tracking => "tracking",
            PlotSpec::ErrorComparison => "error-comparison",
            PlotSpec::UDrj => "u-drj",
            PlotSpec::DVsDhat => "d-vs-dhat",
            PlotSpec::Eta => "eta",
        }
    }
}

impl FromStr for PlotSpec {
    type Err = DobacError;

    fn from_str(s: &str) -> Result<Self> {
        PlotSpec::ALL.into_iter().find(|p| p.name() == s).ok_or_else(|| {
            let names: Vec<&str> = PlotSpec::ALL.iter().map(|p| p.name()).collect();
            DobacError::config("plot.spec", format!("unknown plot `{s}` (available: {})", names.join(", ")))
        })
    }
}

struct Series {
    label: String,
    points: Vec<(f64, f64)>,
}

fn series(log: &RunLog, label: String, column: &str) -> Result<Series> {
    let points = log.times().into_iter().zip(log.column(column)?).collect();
    Ok(Series { label, points })
}

fn error_norm(log: &RunLog, label: String) -> Series {
    let points = log.samples().iter().map(|s| (s.t, s.e.norm())).collect();
    Series { label, points }
}

fn gather(spec: PlotSpec, logs: &[(String, RunLog)], u_bar: Option<f64>) -> Result<Vec<Series>> {
    let (first_label, first) = logs
        .first()
        .ok_or_else(|| DobacError::config("plot.logs", "no logs given"))?;
    if let Some((label, log)) = logs.iter().find(|(_, l)| l.dims() != first.dims()) {
        return Err(DobacError::SchemaMismatch(format!(
            "`{label}` has dimensions {:?}, `{first_label}` has {:?}",
            log.dims(),
            first.dims()
        )));
    }
    let mut out = Vec::new();
    match spec {
        PlotSpec::Tracking => {
            for (label, log) in logs {
                out.push(series(log, format!("{label}: x1"), "x1")?);
            }
            out.push(series(first, "xr1".into(), "xr1")?);
        }
        PlotSpec::ErrorComparison => {
            for (label, log) in logs {
                out.push(error_norm(log, label.clone()));
            }
        }
        PlotSpec::UDrj => {
            for (label, log) in logs {
                out.push(series(log, format!("{label}: u_drj"), "u_drj")?);
            }
            if let Some(u) = u_bar {
                let (t0, t1) = (first.samples()[0].t, first.samples()[first.len() - 1].t);
                out.push(Series { label: "+u_bar".into(), points: vec![(t0, u), (t1, u)] });
                out.push(Series { label: "-u_bar".into(), points: vec![(t0, -u), (t1, -u)] });
            }
        }
        PlotSpec::DVsDhat => {
            out.push(series(first, "d".into(), "d")?);
            for (label, log) in logs {
                out.push(series(log, format!("{label}: d_hat"), "d_hat")?);
            }
        }
        PlotSpec::Eta => {
            for (label, log) in logs {
                out.push(series(log, format!("{label}: eta"), "eta")?);
            }
        }
    }
    Ok(out)
}

fn draw_err<E: std::error::Error>(e: E) -> DobacError {
    DobacError::Io(format!("plot: {e}"))
}

/// Renders `spec` for the given `(label, log)` pairs to an SVG file.
pub fn plot(spec: PlotSpec, logs: &[(String, RunLog)], u_bar: Option<f64>, path: &Path) -> Result<()> {
    let all = gather(spec, logs, u_bar)?;
    if all.iter().all(|s| s.points.is_empty()) {
        return Err(DobacError::config("plot.logs", "logs are empty"));
    }
    let pts = all.iter().flat_map(|s| s.points.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    let pad = ((y1 - y0) * 0.05).max(1e-9);

    let root = SVGBackend::new(path, (900, 480)).into_drawing_area();
    root.fill(&WHITE).map_err(draw_err)?;
    let mut chart = ChartBuilder::on(&root)
        .margin(10)
        .caption(spec.name(), ("sans-serif", 18))
        .x_label_area_size(30)
        .y_label_area_size(60)
        .build_cartesian_2d(x0..x1, (y0 - pad)..(y1 + pad))
        .map_err(draw_err)?;
    chart
        .configure_mesh()
        .disable_x_mesh()
        .disable_y_mesh()
        .x_desc("t")
        .draw()
        .map_err(draw_err)?;
    for (i, s) in all.iter().enumerate() {
        let colour = Palette99::pick(i);
        chart
            .draw_series(LineSeries::new(s.points.iter().copied(), colour.stroke_width(1)))
            .map_err(draw_err)?
            .label(s.label.as_str())
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 16, y)], colour.stroke_width(2)));
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .draw()
        .map_err(draw_err)?;
    root.present().map_err(draw_err)?;
    Ok(())
}

/// Labels of the series `plot` draws, in drawing order.
pub fn legend(spec: PlotSpec, logs: &[(String, RunLog)], u_bar: Option<f64>) -> Result<Vec<String>> {
    Ok(gather(spec, logs, u_bar)?.into_iter().map(|s| s.label).collect())
}
