use std::path::{Path, PathBuf};

use plotters::coord::Shift;
use plotters::prelude::*;

use super::trace::SimTrace;
use super::ScenarioError;

const MAX_POINTS: usize = 3000;

type Area<'a> = DrawingArea<SVGBackend<'a>, Shift>;

fn plot_err<E: std::fmt::Display>(e: E) -> ScenarioError {
    ScenarioError::Plot(e.to_string())
}

fn stride(len: usize) -> usize {
    len.div_ceil(MAX_POINTS).max(1)
}

fn bounds<'a>(values: impl Iterator<Item = &'a f64>) -> (f64, f64) {
    let (lo, hi) = values.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    });
    if !lo.is_finite() {
        return (-1.0, 1.0);
    }
    let pad = ((hi - lo) * 0.05).max(1e-9);
    (lo - pad, hi + pad)
}

/// One time-series panel with a legend.
fn panel(area: &Area, title: &str, t: &[f64], series: &[(String, Vec<f64>)]) -> Result<(), ScenarioError> {
    let (y0, y1) = bounds(series.iter().flat_map(|(_, v)| v.iter()));
    let (t0, t1) = (t.first().copied().unwrap_or(0.0), t.last().copied().unwrap_or(1.0).max(1e-9));
    let mut chart = ChartBuilder::on(area)
        .caption(title, ("sans-serif", 16))
        .margin(8)
        .x_label_area_size(30)
        .y_label_area_size(60)
        .build_cartesian_2d(t0..t1, y0..y1)
        .map_err(plot_err)?;
    chart.configure_mesh().x_desc("t [s]").draw().map_err(plot_err)?;
    let step = stride(t.len());
    for (k, (name, ys)) in series.iter().enumerate() {
        let color = Palette99::pick(k).to_rgba();
        let points = t.iter().zip(ys).step_by(step).map(|(a, b)| (*a, *b));
        chart
            .draw_series(LineSeries::new(points, color.stroke_width(1)))
            .map_err(plot_err)?
            .label(name.as_str())
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 15, y)], color));
    }
    chart
        .configure_series_labels()
        .border_style(BLACK)
        .background_style(WHITE.mix(0.8))
        .draw()
        .map_err(plot_err)?;
    Ok(())
}

fn followers(trace: &SimTrace) -> Vec<usize> {
    trace.agents().into_iter().filter(|&i| i > 0).collect()
}

fn norms(trace: &SimTrace, channel: &str) -> Vec<(String, Vec<f64>)> {
    followers(trace)
        .into_iter()
        .filter_map(|i| Some((format!("agent {i}"), trace.norm_channel(&format!("agent{i}.{channel}"))?)))
        .collect()
}

/// Stacked panels for the channels that exist in the trace; `None` if none do.
fn stacked(
    trace: &SimTrace,
    path: &Path,
    panels: &[(&str, Vec<(String, Vec<f64>)>)],
) -> Result<Option<PathBuf>, ScenarioError> {
    let present: Vec<_> = panels.iter().filter(|(_, s)| !s.is_empty()).collect();
    if present.is_empty() {
        return Ok(None);
    }
    let root = SVGBackend::new(path, (900, 300 * present.len() as u32)).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    for (area, (title, series)) in root.split_evenly((present.len(), 1)).iter().zip(present) {
        panel(area, title, &trace.times, series)?;
    }
    root.present().map_err(plot_err)?;
    Ok(Some(path.to_path_buf()))
}

/// Planar paths with circles at the start and squares at the end.
fn paths(
    trace: &SimTrace,
    path: &Path,
    title: &str,
    curves: &[(String, Vec<f64>, Vec<f64>)],
) -> Result<PathBuf, ScenarioError> {
    let (x0, x1) = bounds(curves.iter().flat_map(|(_, x, _)| x.iter()));
    let (y0, y1) = bounds(curves.iter().flat_map(|(_, _, y)| y.iter()));
    let root = SVGBackend::new(path, (800, 800)).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 18))
        .margin(10)
        .x_label_area_size(35)
        .y_label_area_size(50)
        .build_cartesian_2d(x0..x1, y0..y1)
        .map_err(plot_err)?;
    chart.configure_mesh().x_desc("x1").y_desc("x2").draw().map_err(plot_err)?;
    let step = stride(trace.len());
    for (k, (name, xs, ys)) in curves.iter().enumerate() {
        let color = if name == "leader" || name == "reference" { BLACK.to_rgba() } else { Palette99::pick(k).to_rgba() };
        let points: Vec<(f64, f64)> = xs.iter().zip(ys).step_by(step).map(|(a, b)| (*a, *b)).collect();
        chart
            .draw_series(LineSeries::new(points, color.stroke_width(1)))
            .map_err(plot_err)?
            .label(name.as_str())
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 15, y)], color));
        if let (Some(&a), Some(&b)) = (xs.first(), ys.first()) {
            chart.draw_series(std::iter::once(Circle::new((a, b), 5, color.stroke_width(2)))).map_err(plot_err)?;
        }
        if let (Some(&a), Some(&b)) = (xs.last(), ys.last()) {
            chart.draw_series(PointSeries::of_element([(a, b)], 4, color, &|c, s, st| {
                EmptyElement::at(c) + Rectangle::new([(-s, -s), (s, s)], st.filled())
            }))
            .map_err(plot_err)?;
        }
    }
    chart
        .configure_series_labels()
        .border_style(BLACK)
        .background_style(WHITE.mix(0.8))
        .draw()
        .map_err(plot_err)?;
    root.present().map_err(plot_err)?;
    Ok(path.to_path_buf())
}

fn planar(trace: &SimTrace, prefix: &str, channel: &str, label: String) -> Option<(String, Vec<f64>, Vec<f64>)> {
    let c = trace.vector_channel(&format!("{prefix}.{channel}"));
    if c.len() < 2 {
        return None;
    }
    let mut it = c.into_iter();
    Some((label, it.next()?, it.next()?))
}

/// Write the figure set for a trace into `dir` (created if absent) and return
/// the files written.
pub fn export_plots(trace: &SimTrace, dir: &Path) -> Result<Vec<PathBuf>, ScenarioError> {
    if trace.is_empty() {
        return Err(ScenarioError::Trace("refusing to plot an empty trace".into()));
    }
    std::fs::create_dir_all(dir).map_err(|source| ScenarioError::Io { path: dir.display().to_string(), source })?;
    let task = trace.column_index("agent1.q[0]").is_some();
    let mut out = Vec::new();

    let est = [
        ("position estimate error |xtilde_1|", norms(trace, "xtilde1")),
        ("velocity estimate error |xtilde_2|", norms(trace, "xtilde2")),
    ];
    out.extend(stacked(trace, &dir.join("estimator_errors.svg"), &est)?);

    let tracking = if task {
        vec![("end-effector error |x - x_d|", norms(trace, "track1"))]
    } else {
        vec![
            ("formation error |y_i - y_0 - Delta_i|", norms(trace, "track1")),
            ("velocity error |x_i2 - x_02|", norms(trace, "track2")),
        ]
    };
    out.extend(stacked(trace, &dir.join("tracking_errors.svg"), &tracking)?);

    let scalar = |name: &str| -> Vec<(String, Vec<f64>)> {
        followers(trace)
            .into_iter()
            .filter_map(|i| Some((format!("agent {i}"), trace.channel(&format!("agent{i}.{name}"))?)))
            .collect()
    };
    let adaptive = [
        ("kappa", scalar("kappa")),
        ("|eps_hat|", norms(trace, "eps_hat")),
        ("|theta_hat|", norms(trace, "theta_hat")),
        ("|a_hat|", norms(trace, "a_hat")),
    ];
    out.extend(stacked(trace, &dir.join("adaptive_parameters.svg"), &adaptive)?);

    if task {
        let mut curves: Vec<_> =
            followers(trace).into_iter().filter_map(|i| planar(trace, &format!("agent{i}"), "x", format!("robot {i}"))).collect();
        curves.extend(planar(trace, "agent0", "xd", "reference".into()));
        out.push(paths(trace, &dir.join("end_effector_paths.svg"), "end-effector paths", &curves)?);
    } else {
        let mut curves: Vec<_> =
            followers(trace).into_iter().filter_map(|i| planar(trace, &format!("agent{i}"), "x", format!("agent {i}"))).collect();
        curves.extend(planar(trace, "agent0", "x", "leader".into()));
        out.push(paths(trace, &dir.join("formation_trajectory.svg"), "formation trajectory", &curves)?);
    }
    Ok(out)
}
