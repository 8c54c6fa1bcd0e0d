//! Self-contained SVG line plots of comma-separated series.

use std::path::{Path, PathBuf};

use svg::node::element::path::Data;
use svg::node::element::{Group, Line, Path as SvgPath, Rectangle, Text};
use svg::Document;
use transonic_core::numerics::linalg::linear_fit;

use crate::error::{CliError, Result};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 84.0;
const TOP: f64 = 44.0;
const BOTTOM: f64 = 60.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

#[derive(Debug, Clone)]
pub struct PlotSpec {
    pub input: PathBuf,
    pub x: String,
    /// Columns on the left axis.
    pub y: Vec<String>,
    /// Columns on a twin right axis (linear scale).
    pub y2: Vec<String>,
    pub log_y: bool,
    /// Annotate the least-squares slope of `ln y` over the second half of the
    /// first left-axis series (log scale only).
    pub fit_slope: bool,
    pub title: Option<String>,
    pub output: PathBuf,
}

/// Numeric table with one header line. Cells that do not parse are NaN.
#[derive(Debug, Clone)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn read(path: &Path) -> Result<Self> {
        let io = |e: csv::Error| CliError::Usage(format!("cannot read {}: {e}", path.display()));
        let mut reader = csv::ReaderBuilder::new().flexible(true).from_path(path).map_err(io)?;
        let headers = reader.headers().map_err(io)?.iter().map(|h| h.trim().to_string()).collect();
        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record.map_err(io)?;
            rows.push(record.iter().map(|c| c.trim().parse::<f64>().unwrap_or(f64::NAN)).collect());
        }
        Ok(Self { headers, rows })
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let i = self
            .headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Usage(format!("missing column {name} (have {})", self.headers.join(", "))))?;
        Ok(self.rows.iter().map(|r| r.get(i).copied().unwrap_or(f64::NAN)).collect())
    }
}

#[derive(Debug, Clone)]
struct Series {
    name: String,
    points: Vec<(f64, f64)>,
}

fn series(table: &Table, x: &[f64], name: &str, log: bool) -> Result<Series> {
    let y = table.column(name)?;
    let points: Vec<(f64, f64)> = x
        .iter()
        .zip(&y)
        .filter(|(a, b)| a.is_finite() && b.is_finite() && (!log || **b > 0.0))
        .map(|(a, b)| (*a, *b))
        .collect();
    if points.is_empty() {
        return Err(CliError::Usage(format!("series {name} is empty")));
    }
    Ok(Series { name: name.to_string(), points })
}

/// Linear or base-10 logarithmic map from data to pixels.
#[derive(Debug, Clone, Copy)]
struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
    p0: f64,
    p1: f64,
}

impl Axis {
    fn new(values: impl Iterator<Item = f64>, log: bool, p0: f64, p1: f64) -> Self {
        let (mut lo, mut hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
            let v = if log { v.log10() } else { v };
            (a.min(v), b.max(v))
        });
        if log {
            lo = lo.floor();
            hi = hi.ceil().max(lo + 1.0);
        } else if hi - lo <= f64::EPSILON * hi.abs().max(1.0) {
            let pad = if lo == 0.0 { 1.0 } else { 0.5 * lo.abs() };
            lo -= pad;
            hi += pad;
        } else {
            let step = nice_step((hi - lo) / 5.0);
            lo = (lo / step).floor() * step;
            hi = (hi / step).ceil() * step;
        }
        Self { lo, hi, log, p0, p1 }
    }

    fn map(&self, v: f64) -> f64 {
        let v = if self.log { v.log10() } else { v };
        self.p0 + (v - self.lo) / (self.hi - self.lo) * (self.p1 - self.p0)
    }

    /// Tick values in data units with their labels.
    fn ticks(&self) -> Vec<(f64, String)> {
        if self.log {
            let span = (self.hi - self.lo).round() as i64;
            let stride = (span / 8).max(1);
            (self.lo as i64..=self.hi as i64)
                .filter(|e| (e - self.lo as i64) % stride == 0)
                .map(|e| (10f64.powi(e as i32), format!("1e{e}")))
                .collect()
        } else {
            let step = nice_step((self.hi - self.lo) / 5.0);
            let first = (self.lo / step).ceil() as i64;
            let last = (self.hi / step).floor() as i64;
            (first..=last).map(|i| i as f64 * step).map(|v| (v, label(v, step))).collect()
        }
    }
}

/// 1, 2 or 5 times a power of ten, at least `raw`.
fn nice_step(raw: f64) -> f64 {
    let mag = 10f64.powf(raw.log10().floor());
    let f = raw / mag;
    let m = if f <= 1.0 {
        1.0
    } else if f <= 2.0 {
        2.0
    } else if f <= 5.0 {
        5.0
    } else {
        10.0
    };
    m * mag
}

fn label(v: f64, step: f64) -> String {
    if v.abs() < 1e-12 * step {
        return "0".into();
    }
    if v.abs() >= 1e4 || v.abs() < 1e-3 {
        return format!("{v:.2e}");
    }
    let decimals = (-step.log10().floor()).max(0.0) as usize;
    format!("{v:.decimals$}")
}

fn text(x: f64, y: f64, anchor: &str, content: impl Into<String>) -> Text {
    Text::new(content)
        .set("x", x)
        .set("y", y)
        .set("text-anchor", anchor)
        .set("font-family", "sans-serif")
        .set("font-size", 12)
}

fn polyline(s: &Series, xa: &Axis, ya: &Axis, color: &str, dashed: bool) -> SvgPath {
    let mut data = Data::new();
    for (i, (x, y)) in s.points.iter().enumerate() {
        let p = (xa.map(*x), ya.map(*y));
        data = if i == 0 { data.move_to(p) } else { data.line_to(p) };
    }
    let mut path = SvgPath::new().set("d", data).set("fill", "none").set("stroke", color).set("stroke-width", 1.5);
    if dashed {
        path = path.set("stroke-dasharray", "6,4");
    }
    path
}

fn vertical_axis(axis: &Axis, x: f64, left: bool, title: &str) -> Group {
    let mut g = Group::new().add(Line::new().set("x1", x).set("x2", x).set("y1", axis.p0).set("y2", axis.p1).set("stroke", "black"));
    let (dx, anchor) = if left { (-6.0, "end") } else { (6.0, "start") };
    for (v, lab) in axis.ticks() {
        let y = axis.map(v);
        g = g
            .add(Line::new().set("x1", x).set("x2", x + dx * 0.7).set("y1", y).set("y2", y).set("stroke", "black"))
            .add(text(x + dx * 1.3, y + 4.0, anchor, lab));
    }
    let tx = if left { 18.0 } else { WIDTH - 12.0 };
    let ty = 0.5 * (axis.p0 + axis.p1);
    g.add(text(tx, ty, "middle", title).set("transform", format!("rotate(-90 {tx} {ty})")))
}

/// Renders the plot described by `spec` from `table` as an SVG document.
pub fn render(table: &Table, spec: &PlotSpec) -> Result<String> {
    if spec.y.is_empty() {
        return Err(CliError::Usage("at least one --y column is required".into()));
    }
    if spec.fit_slope && !spec.log_y {
        return Err(CliError::Usage("--fit-slope needs --log-y".into()));
    }
    if table.rows.is_empty() {
        return Err(CliError::Usage(format!("{} has no data rows", spec.input.display())));
    }
    let x = table.column(&spec.x)?;
    let left: Vec<Series> = spec.y.iter().map(|n| series(table, &x, n, spec.log_y)).collect::<Result<_>>()?;
    let right: Vec<Series> = spec.y2.iter().map(|n| series(table, &x, n, false)).collect::<Result<_>>()?;

    let right_margin = if right.is_empty() { 30.0 } else { 84.0 };
    let all = left.iter().chain(&right);
    let xa = Axis::new(all.flat_map(|s| s.points.iter().map(|p| p.0)), false, LEFT, WIDTH - right_margin);
    let ya = Axis::new(left.iter().flat_map(|s| s.points.iter().map(|p| p.1)), spec.log_y, HEIGHT - BOTTOM, TOP);

    let mut doc = Document::new()
        .set("viewBox", (0, 0, WIDTH, HEIGHT))
        .set("width", WIDTH)
        .set("height", HEIGHT)
        .add(Rectangle::new().set("width", WIDTH).set("height", HEIGHT).set("fill", "white"));
    if let Some(t) = &spec.title {
        doc = doc.add(text(0.5 * WIDTH, 24.0, "middle", t.clone()).set("font-size", 15));
    }

    let mut xaxis = Group::new().add(
        Line::new().set("x1", xa.p0).set("x2", xa.p1).set("y1", ya.p0).set("y2", ya.p0).set("stroke", "black"),
    );
    for (v, lab) in xa.ticks() {
        let px = xa.map(v);
        xaxis = xaxis
            .add(Line::new().set("x1", px).set("x2", px).set("y1", ya.p0).set("y2", ya.p0 + 5.0).set("stroke", "black"))
            .add(text(px, ya.p0 + 18.0, "middle", lab));
    }
    xaxis = xaxis.add(text(0.5 * (xa.p0 + xa.p1), HEIGHT - 16.0, "middle", spec.x.clone()));
    doc = doc.add(xaxis).add(vertical_axis(&ya, xa.p0, true, &spec.y.join(", ")));

    let mut legend = Vec::new();
    for (i, s) in left.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        doc = doc.add(polyline(s, &xa, &ya, color, false));
        legend.push((s.name.clone(), color, false));
    }
    if !right.is_empty() {
        let y2 = Axis::new(right.iter().flat_map(|s| s.points.iter().map(|p| p.1)), false, HEIGHT - BOTTOM, TOP);
        doc = doc.add(vertical_axis(&y2, xa.p1, false, &spec.y2.join(", ")));
        for (i, s) in right.iter().enumerate() {
            let color = COLORS[(left.len() + i) % COLORS.len()];
            doc = doc.add(polyline(s, &xa, &y2, color, true));
            legend.push((format!("{} (right)", s.name), color, true));
        }
    }

    if spec.fit_slope {
        let pts = &left[0].points;
        let tail = &pts[pts.len() / 2..];
        if tail.len() < 2 {
            return Err(CliError::Usage(format!("series {} is too short to fit a slope", left[0].name)));
        }
        let xs: Vec<f64> = tail.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = tail.iter().map(|p| p.1.ln()).collect();
        let (slope, intercept, r2) = linear_fit(&xs, &ys);
        let ends = [xs[0], xs[xs.len() - 1]];
        let fitted = Series { name: "fit".into(), points: ends.iter().map(|&t| (t, (intercept + slope * t).exp())).collect() };
        doc = doc.add(polyline(&fitted, &xa, &ya, "black", true));
        legend.push((format!("fitted slope {slope:.5} (R² {r2:.4})"), "black", true));
    }

    for (i, (name, color, dashed)) in legend.iter().enumerate() {
        let y = TOP + 14.0 + 16.0 * i as f64;
        let x = xa.p1 - 230.0;
        let mut mark = Line::new().set("x1", x).set("x2", x + 24.0).set("y1", y - 4.0).set("y2", y - 4.0).set("stroke", *color).set("stroke-width", 2);
        if *dashed {
            mark = mark.set("stroke-dasharray", "6,4");
        }
        doc = doc.add(mark).add(text(x + 30.0, y, "start", name.clone()));
    }
    Ok(doc.to_string())
}

/// Reads `spec.input` and writes the rendered SVG to `spec.output`.
pub fn plot(spec: &PlotSpec) -> Result<()> {
    let table = Table::read(&spec.input)?;
    let svg = render(&table, spec)?;
    std::fs::write(&spec.output, svg).map_err(|source| CliError::Io { path: spec.output.display().to_string(), source })
}
