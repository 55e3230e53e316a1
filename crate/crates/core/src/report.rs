//! CSV persistence, markdown summaries and SVG line charts for benchmark
//! records.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{self, Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::bench::{speedup, BenchmarkRecord};
use crate::kernels::Backend;
use crate::matrix::Precision;

/// Exact CSV header.
pub const CSV_HEADER: [&str; 11] = [
    "backend",
    "precision",
    "m",
    "n",
    "w",
    "tile",
    "reps",
    "workers",
    "total_seconds",
    "avg_seconds",
    "gflops",
];

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("line {line}: {message}")]
    Schema { line: u64, message: String },
    #[error("no records")]
    NoRecords,
    #[error("missing {baseline}/{target} pairs for sizes {sizes:?}")]
    MissingPairs {
        baseline: Backend,
        target: Backend,
        sizes: Vec<usize>,
    },
    #[error("invalid chart: {0}")]
    InvalidChart(String),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> ReportError + '_ {
    move |source| ReportError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub fn write_csv(records: &[BenchmarkRecord], path: impl AsRef<Path>) -> Result<(), ReportError> {
    let path = path.as_ref();
    let file = File::create(path).map_err(io_err(path))?;
    write_csv_to(records, file).map_err(io_err(path))
}

/// Writes the header and one LF-terminated row per record.
pub fn write_csv_to<W: Write>(records: &[BenchmarkRecord], out: W) -> io::Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<Vec<BenchmarkRecord>, ReportError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(io_err(path))?;
    read_csv_from(file)
}

pub fn read_csv_from<R: Read>(input: R) -> Result<Vec<BenchmarkRecord>, ReportError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).from_reader(input);
    let mut rows = reader.records();
    let schema = |line: u64, message: String| ReportError::Schema { line, message };
    match rows.next() {
        None => return Err(schema(1, "missing header".into())),
        Some(Err(e)) => return Err(schema(1, e.to_string())),
        Some(Ok(header)) => {
            if header.iter().ne(CSV_HEADER) {
                return Err(schema(
                    1,
                    format!("header mismatch: expected `{}`", CSV_HEADER.join(",")),
                ));
            }
        }
    }
    let mut out = Vec::new();
    for row in rows {
        let row = row.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            schema(line, e.to_string())
        })?;
        let line = row.position().map_or(0, |p| p.line());
        let record: BenchmarkRecord = row.deserialize(None).map_err(|e| schema(line, e.to_string()))?;
        out.push(record);
    }
    Ok(out)
}

/// Named sequence of points for one chart line.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartSeries {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

impl ChartSeries {
    pub fn validate(&self) -> Result<(), ReportError> {
        if self.points.is_empty() {
            return Err(ReportError::InvalidChart(format!("series `{}` is empty", self.label)));
        }
        if self.points.iter().any(|(x, y)| !(x.is_finite() && *x > 0.0 && y.is_finite())) {
            return Err(ReportError::InvalidChart(format!(
                "series `{}` has a non-finite or nonpositive x",
                self.label
            )));
        }
        if self.points.windows(2).any(|p| p[1].0 <= p[0].0) {
            return Err(ReportError::InvalidChart(format!(
                "series `{}` x values are not strictly increasing",
                self.label
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChartSpec {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub x_log2: bool,
    pub series: Vec<ChartSeries>,
    pub width_px: u32,
    pub height_px: u32,
}

impl ChartSpec {
    pub fn new(title: impl Into<String>, x_label: impl Into<String>, y_label: impl Into<String>) -> Self {
        ChartSpec {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            x_log2: true,
            series: Vec::new(),
            width_px: 720,
            height_px: 440,
        }
    }
}

/// Which quantity a size-sweep chart plots.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Gflops,
    Time,
}

impl Metric {
    fn value(self, r: &BenchmarkRecord) -> f64 {
        match self {
            Metric::Gflops => r.gflops,
            Metric::Time => r.avg_seconds,
        }
    }

    pub fn axis_label(self) -> &'static str {
        match self {
            Metric::Gflops => "GFLOPS",
            Metric::Time => "average time (s)",
        }
    }
}

/// Records selected by precision, tile and repetition count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct SeriesKey {
    pub precision: Precision,
    pub tile: usize,
    pub reps: usize,
}

fn matches_key(r: &BenchmarkRecord, key: SeriesKey) -> bool {
    r.precision == key.precision && r.tile == key.tile && r.reps == key.reps
}

/// Speedup of `target` over `baseline` at every size present under `key`.
pub fn derive_speedup_series(
    records: &[BenchmarkRecord],
    baseline: Backend,
    target: Backend,
    key: SeriesKey,
) -> Result<ChartSeries, ReportError> {
    let mut by_size: BTreeMap<usize, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for r in records.iter().filter(|r| matches_key(r, key)) {
        let entry = by_size.entry(r.m).or_default();
        if r.backend == baseline {
            entry.0.push(r.avg_seconds);
        }
        if r.backend == target {
            entry.1.push(r.avg_seconds);
        }
    }
    by_size.retain(|_, (b, t)| !b.is_empty() || !t.is_empty());
    if by_size.is_empty() {
        return Err(ReportError::NoRecords);
    }
    let missing: Vec<usize> = by_size
        .iter()
        .filter(|(_, (b, t))| b.len() != 1 || t.len() != 1)
        .map(|(&s, _)| s)
        .collect();
    if !missing.is_empty() {
        return Err(ReportError::MissingPairs {
            baseline,
            target,
            sizes: missing,
        });
    }
    let points = by_size
        .into_iter()
        .map(|(size, (b, t))| {
            let y = speedup(b[0], t[0]).map_err(|e| ReportError::InvalidChart(e.to_string()))?;
            Ok((size as f64, y))
        })
        .collect::<Result<Vec<_>, ReportError>>()?;
    Ok(ChartSeries {
        label: format!("{target} vs {baseline} (tile {})", key.tile),
        points,
    })
}

/// Records grouped by `(precision, reps)`, in ascending key order.
pub fn group_by_precision_reps(
    records: &[BenchmarkRecord],
) -> BTreeMap<(Precision, usize), Vec<&BenchmarkRecord>> {
    let mut groups: BTreeMap<(Precision, usize), Vec<&BenchmarkRecord>> = BTreeMap::new();
    for r in records {
        groups.entry((r.precision, r.reps)).or_default().push(r);
    }
    groups
}

/// One series per `(backend, tile)` plotting `metric` against matrix order.
/// When several records share a size, the first one wins.
pub fn metric_series(records: &[&BenchmarkRecord], metric: Metric) -> Vec<ChartSeries> {
    let mut lines: BTreeMap<(Backend, usize), BTreeMap<usize, f64>> = BTreeMap::new();
    for r in records {
        lines
            .entry((r.backend, r.tile))
            .or_default()
            .entry(r.m)
            .or_insert_with(|| metric.value(r));
    }
    lines
        .into_iter()
        .map(|((backend, tile), pts)| ChartSeries {
            label: format!("{backend} tile {tile}"),
            points: pts.into_iter().map(|(s, v)| (s as f64, v)).collect(),
        })
        .collect()
}

/// `value` rounded to `digits` significant digits, without exponent.
pub fn format_significant(value: f64, digits: usize) -> String {
    if value == 0.0 || !value.is_finite() {
        return format!("{value}");
    }
    let sci = format!("{:.*e}", digits.saturating_sub(1), value);
    let exp: i32 = sci.rsplit('e').next().and_then(|e| e.parse().ok()).unwrap_or(0);
    let decimals = (digits as i32 - 1 - exp).max(0) as usize;
    format!("{value:.decimals$}")
}

/// Markdown pipe tables of GFLOPS, one per `(precision, reps)` group.
/// Columns are matrix orders, rows are backend and tile.
pub fn summary_table(records: &[BenchmarkRecord]) -> Result<String, ReportError> {
    if records.is_empty() {
        return Err(ReportError::NoRecords);
    }
    let mut out = String::new();
    for ((precision, reps), group) in group_by_precision_reps(records) {
        let sizes: BTreeSet<usize> = group.iter().map(|r| r.m).collect();
        let mut rows: BTreeMap<(Backend, usize), BTreeMap<usize, f64>> = BTreeMap::new();
        for r in &group {
            rows.entry((r.backend, r.tile)).or_default().entry(r.m).or_insert(r.gflops);
        }
        if !out.is_empty() {
            out.push('\n');
        }
        let _ = writeln!(out, "### GFLOPS, {precision} precision, reps = {reps}\n");
        out.push_str("| backend / tile |");
        for s in &sizes {
            let _ = write!(out, " {s} |");
        }
        out.push_str("\n|---|");
        for _ in &sizes {
            out.push_str("---:|");
        }
        out.push('\n');
        for ((backend, tile), cells) in rows {
            let _ = write!(out, "| {backend} / {tile} |");
            for s in &sizes {
                match cells.get(s) {
                    Some(v) => {
                        let _ = write!(out, " {} |", format_significant(*v, 4));
                    }
                    None => out.push_str(" - |"),
                }
            }
            out.push('\n');
        }
    }
    Ok(out)
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];
const DASHES: [&str; 4] = ["", "6,3", "2,3", "8,3,2,3"];

const MARGIN_LEFT: f64 = 72.0;
const MARGIN_RIGHT: f64 = 200.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 56.0;

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Step of 1, 2 or 5 times a power of ten giving at most about `target`
/// intervals over `span`.
fn nice_step(span: f64, target: f64) -> f64 {
    let raw = span / target;
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let nice = if norm <= 1.0 {
        1.0
    } else if norm <= 2.0 {
        2.0
    } else if norm <= 5.0 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

fn linear_ticks(lo: f64, hi: f64) -> (f64, f64, Vec<f64>) {
    let (lo, hi) = if hi - lo <= f64::EPSILON * hi.abs().max(1.0) {
        let pad = if hi == 0.0 { 1.0 } else { hi.abs() * 0.5 };
        (lo - pad, hi + pad)
    } else {
        (lo, hi)
    };
    let step = nice_step(hi - lo, 5.0);
    let start = (lo / step).floor() * step;
    let end = (hi / step).ceil() * step;
    let count = ((end - start) / step).round() as i64;
    let ticks = (0..=count).map(|i| start + i as f64 * step).collect();
    (start, end, ticks)
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if !(1e-3..1e6).contains(&a) {
        return format!("{v:.1e}");
    }
    let s = format_significant(v, 4);
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

struct Axis {
    lo: f64,
    hi: f64,
    log2: bool,
    ticks: Vec<(f64, String)>,
}

impl Axis {
    fn frac(&self, v: f64) -> f64 {
        let v = if self.log2 { v.log2() } else { v };
        (v - self.lo) / (self.hi - self.lo)
    }
}

fn x_axis(xs: &[f64], log2: bool) -> Axis {
    let min = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if log2 {
        let mut lo = min.log2().floor();
        let mut hi = max.log2().ceil();
        if hi <= lo {
            lo -= 1.0;
            hi += 1.0;
        }
        let ticks = (lo as i64..=hi as i64)
            .map(|e| (e as f64, tick_label(2f64.powi(e as i32))))
            .collect();
        Axis { lo, hi, log2, ticks }
    } else {
        let (lo, hi, t) = linear_ticks(min, max);
        Axis {
            lo,
            hi,
            log2,
            ticks: t.into_iter().map(|v| (v, tick_label(v))).collect(),
        }
    }
}

fn y_axis(ys: &[f64]) -> Axis {
    let min = ys.iter().copied().fold(f64::INFINITY, f64::min).min(0.0);
    let max = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi, t) = linear_ticks(min, max);
    Axis {
        lo,
        hi,
        log2: false,
        ticks: t.into_iter().map(|v| (v, tick_label(v))).collect(),
    }
}

/// Renders `spec` as a standalone SVG 1.1 document. Output depends only on
/// `spec`.
pub fn render_svg(spec: &ChartSpec) -> Result<String, ReportError> {
    if spec.series.is_empty() {
        return Err(ReportError::InvalidChart("no series".into()));
    }
    for s in &spec.series {
        s.validate()?;
    }
    let (w, h) = (spec.width_px as f64, spec.height_px as f64);
    let plot_w = w - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = h - MARGIN_TOP - MARGIN_BOTTOM;
    if plot_w < 10.0 || plot_h < 10.0 {
        return Err(ReportError::InvalidChart("canvas too small".into()));
    }
    let xs: Vec<f64> = spec.series.iter().flat_map(|s| s.points.iter().map(|p| p.0)).collect();
    let ys: Vec<f64> = spec.series.iter().flat_map(|s| s.points.iter().map(|p| p.1)).collect();
    let xa = x_axis(&xs, spec.x_log2);
    let ya = y_axis(&ys);
    let px = |x: f64| MARGIN_LEFT + xa.frac(x) * plot_w;
    let py = |y: f64| MARGIN_TOP + (1.0 - ya.frac(y)) * plot_h;
    let bottom = MARGIN_TOP + plot_h;

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{}" height="{}" viewBox="0 0 {} {}">"#,
        spec.width_px, spec.height_px, spec.width_px, spec.height_px
    );
    let _ = writeln!(svg, r#"<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="24" font-family="sans-serif" font-size="15" text-anchor="middle">{}</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        escape(&spec.title)
    );

    svg.push_str("<g stroke=\"#dddddd\" stroke-width=\"1\">\n");
    for (v, _) in &xa.ticks {
        let x = MARGIN_LEFT + (v - xa.lo) / (xa.hi - xa.lo) * plot_w;
        let _ = writeln!(svg, r#"<line x1="{x:.2}" y1="{MARGIN_TOP:.2}" x2="{x:.2}" y2="{bottom:.2}"/>"#);
    }
    for (v, _) in &ya.ticks {
        let y = py(*v);
        let _ = writeln!(
            svg,
            r#"<line x1="{MARGIN_LEFT:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}"/>"#,
            MARGIN_LEFT + plot_w
        );
    }
    svg.push_str("</g>\n");

    let _ = writeln!(
        svg,
        r#"<rect x="{MARGIN_LEFT:.2}" y="{MARGIN_TOP:.2}" width="{plot_w:.2}" height="{plot_h:.2}" fill="none" stroke="black" stroke-width="1"/>"#
    );
    svg.push_str("<g class=\"x-ticks\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">\n");
    for (v, label) in &xa.ticks {
        let x = MARGIN_LEFT + (v - xa.lo) / (xa.hi - xa.lo) * plot_w;
        let _ = writeln!(svg, r#"<text x="{x:.2}" y="{:.2}">{}</text>"#, bottom + 16.0, escape(label));
    }
    svg.push_str("</g>\n");
    svg.push_str("<g class=\"y-ticks\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">\n");
    for (v, label) in &ya.ticks {
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}">{}</text>"#,
            MARGIN_LEFT - 6.0,
            py(*v) + 4.0,
            escape(label)
        );
    }
    svg.push_str("</g>\n");
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="12" text-anchor="middle">{}</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        h - 14.0,
        escape(&spec.x_label)
    );
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{:.2}" font-family="sans-serif" font-size="12" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
        MARGIN_TOP + plot_h / 2.0,
        MARGIN_TOP + plot_h / 2.0,
        escape(&spec.y_label)
    );

    for (i, s) in spec.series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let dash = DASHES[(i / PALETTE.len()) % DASHES.len()];
        let pts: Vec<String> = s.points.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
        let dash_attr = if dash.is_empty() {
            String::new()
        } else {
            format!(r#" stroke-dasharray="{dash}""#)
        };
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{color}" stroke-width="2"{dash_attr} points="{}"/>"#,
            pts.join(" ")
        );
        for &(x, y) in &s.points {
            let _ = writeln!(svg, r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{color}"/>"#, px(x), py(y));
        }
    }

    let lx = MARGIN_LEFT + plot_w + 16.0;
    svg.push_str("<g class=\"legend\" font-family=\"sans-serif\" font-size=\"11\">\n");
    for (i, s) in spec.series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let dash = DASHES[(i / PALETTE.len()) % DASHES.len()];
        let y = MARGIN_TOP + 10.0 + i as f64 * 18.0;
        let dash_attr = if dash.is_empty() {
            String::new()
        } else {
            format!(r#" stroke-dasharray="{dash}""#)
        };
        let _ = writeln!(
            svg,
            r#"<line x1="{lx:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{color}" stroke-width="2"{dash_attr}/>"#,
            lx + 24.0
        );
        let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, lx + 30.0, y + 4.0, escape(&s.label));
    }
    svg.push_str("</g>\n</svg>\n");
    Ok(svg)
}

pub fn render_chart(spec: &ChartSpec, path: impl AsRef<Path>) -> Result<(), ReportError> {
    let path = path.as_ref();
    let svg = render_svg(spec)?;
    fs::write(path, svg).map_err(io_err(path))
}
