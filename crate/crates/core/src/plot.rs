//! Deterministic log-log SVG charts.
//!
//! Layout is fixed so that output bytes depend only on the chart contents:
//! a 960x720 px canvas, the plot frame at x 100..860 and y 70..640, 12pt
//! sans-serif text, and series colours taken in order from [`PALETTE`].
//! Coordinates are written with two decimals.
//!
//! Log axes cannot show zero. A coordinate that is zero (or infinite, such as
//! the intensity of a zero-byte kernel) is clamped to 1% inside the nearest
//! axis edge, i.e. `min * (1 + 1e-2)` or `max / (1 + 1e-2)`, and drawn with a
//! hollow cross instead of the series marker.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use thiserror::Error;

use crate::machine::{machine_balance, MachineSpec};
use crate::roofline::{overhead_ceiling_flops, AnalyzedKernel};
use crate::sweep::SweepSeries;
use crate::units::{si, sig6};

pub const CANVAS_WIDTH: f64 = 960.0;
pub const CANVAS_HEIGHT: f64 = 720.0;
pub const PLOT_LEFT: f64 = 100.0;
pub const PLOT_RIGHT: f64 = 860.0;
pub const PLOT_TOP: f64 = 70.0;
pub const PLOT_BOTTOM: f64 = 640.0;
/// Relative inset for clamped zero / infinite coordinates.
pub const CLAMP_EPSILON: f64 = 1e-2;

pub const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChartKind {
    /// Intensity vs attained FLOP/s.
    ClassicRoofline,
    /// Bandwidth complexity vs computational complexity.
    ComplexityPlane,
    /// Bandwidth time vs compute time.
    TimePlane,
    /// Complexity (closed symbols) overlaid with peak-scaled time (open).
    ComplexityTime4D,
}

impl ChartKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::ClassicRoofline => "classic",
            Self::ComplexityPlane => "complexity",
            Self::TimePlane => "time",
            Self::ComplexityTime4D => "4d",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "classic" => Some(Self::ClassicRoofline),
            "complexity" => Some(Self::ComplexityPlane),
            "time" => Some(Self::TimePlane),
            "4d" => Some(Self::ComplexityTime4D),
            _ => None,
        }
    }

    fn axis_titles(&self) -> (&'static str, &'static str) {
        match self {
            Self::ClassicRoofline => ("Arithmetic Intensity (FLOPs/Byte)", "Performance (FLOP/s)"),
            Self::ComplexityPlane | Self::ComplexityTime4D => {
                ("Bandwidth Complexity (Bytes)", "Computational Complexity (FLOPs)")
            }
            Self::TimePlane => ("Bandwidth Time (s)", "Compute Time (s)"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisRange {
    pub min: f64,
    pub max: f64,
}

impl AxisRange {
    pub fn new(min: f64, max: f64) -> Self {
        Self { min, max }
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.min && v <= self.max
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisRanges {
    pub x: AxisRange,
    pub y: AxisRange,
}

/// A logarithmic axis mapped onto a pixel interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogAxis {
    range: AxisRange,
    px_start: f64,
    px_end: f64,
}

impl LogAxis {
    pub fn new(range: AxisRange, px_start: f64, px_end: f64) -> Self {
        Self {
            range,
            px_start,
            px_end,
        }
    }

    /// Horizontal axis of the plot frame.
    pub fn horizontal(range: AxisRange) -> Self {
        Self::new(range, PLOT_LEFT, PLOT_RIGHT)
    }

    /// Vertical axis of the plot frame (grows upwards).
    pub fn vertical(range: AxisRange) -> Self {
        Self::new(range, PLOT_BOTTOM, PLOT_TOP)
    }

    fn span(&self) -> f64 {
        libm::log10(self.range.max) - libm::log10(self.range.min)
    }

    pub fn to_px(&self, v: f64) -> f64 {
        let frac = (libm::log10(v) - libm::log10(self.range.min)) / self.span();
        self.px_start + frac * (self.px_end - self.px_start)
    }

    pub fn from_px(&self, px: f64) -> f64 {
        let frac = (px - self.px_start) / (self.px_end - self.px_start);
        libm::pow(10.0, libm::log10(self.range.min) + frac * self.span())
    }

    /// Clamps zero/infinite values into the axis; `None` marks values that
    /// lie outside the declared range and are not drawn.
    fn place(&self, v: f64) -> Option<(f64, bool)> {
        if v.is_nan() {
            None
        } else if v <= 0.0 {
            Some((self.to_px(self.range.min * (1.0 + CLAMP_EPSILON)), true))
        } else if v.is_infinite() {
            Some((self.to_px(self.range.max / (1.0 + CLAMP_EPSILON)), true))
        } else if self.range.contains(v) {
            Some((self.to_px(v), false))
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlotError {
    #[error("chart has no series")]
    EmptySeries,
    #[error("series {series:?} has no points")]
    EmptyPoints { series: String },
    #[error("{axis} axis range must satisfy 0 < min < max, got ({min}, {max})")]
    BadRange { axis: &'static str, min: f64, max: f64 },
    #[error("series {series:?} was analyzed on machine {series_machine:?}, chart is for {machine:?}")]
    MachineMismatch {
        series: String,
        series_machine: String,
        machine: String,
    },
    #[error("machine has no {kind} ceiling labelled {label:?}")]
    UnknownCeiling { kind: &'static str, label: String },
}

/// Drawn compute ceilings as (label, FLOP/s), and the memory ceiling as
/// (label, B/s).
type Roofs = (Vec<(String, f64)>, (String, f64));

/// Everything needed to render one chart.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartSpec {
    pub kind: ChartKind,
    pub machine: MachineSpec,
    /// Compute ceilings drawn as roofs / balance diagonals. Empty draws the
    /// ceiling each series was classified against.
    pub compute_ceilings: Vec<String>,
    /// Memory ceiling for diagonals and box edges. `None` uses the first
    /// series' memory ceiling.
    pub memory_ceiling: Option<String>,
    pub series: Vec<SweepSeries>,
    pub x_range: Option<AxisRange>,
    pub y_range: Option<AxisRange>,
    pub title: String,
}

impl ChartSpec {
    pub fn new(kind: ChartKind, machine: MachineSpec, series: Vec<SweepSeries>) -> Self {
        Self {
            kind,
            machine,
            compute_ceilings: Vec::new(),
            memory_ceiling: None,
            series,
            x_range: None,
            y_range: None,
            title: String::new(),
        }
    }

    pub fn with_title(mut self, title: impl Into<String>) -> Self {
        self.title = title.into();
        self
    }

    pub fn validate(&self) -> Result<(), PlotError> {
        if self.series.is_empty() {
            return Err(PlotError::EmptySeries);
        }
        for s in &self.series {
            if s.points.is_empty() {
                return Err(PlotError::EmptyPoints {
                    series: s.series_label.clone(),
                });
            }
            if s.machine != self.machine.name {
                return Err(PlotError::MachineMismatch {
                    series: s.series_label.clone(),
                    series_machine: s.machine.clone(),
                    machine: self.machine.name.clone(),
                });
            }
        }
        for (axis, range) in [("x", self.x_range), ("y", self.y_range)] {
            if let Some(r) = range {
                if !(r.min > 0.0 && r.min < r.max && r.max.is_finite()) {
                    return Err(PlotError::BadRange {
                        axis,
                        min: r.min,
                        max: r.max,
                    });
                }
            }
        }
        self.roofs()?;
        Ok(())
    }

    fn memory_label(&self) -> &str {
        match &self.memory_ceiling {
            Some(label) => label,
            None => &self.series[0].memory_ceiling,
        }
    }

    /// (label, peak FLOP/s) of each drawn compute ceiling, and the memory
    /// ceiling (label, B/s).
    fn roofs(&self) -> Result<Roofs, PlotError> {
        let mut labels: Vec<&str> = self.compute_ceilings.iter().map(String::as_str).collect();
        if labels.is_empty() {
            for s in &self.series {
                if !labels.contains(&s.compute_ceiling.as_str()) {
                    labels.push(&s.compute_ceiling);
                }
            }
        }
        let mut roofs = Vec::new();
        for label in labels {
            let c = self
                .machine
                .compute_ceiling(label)
                .ok_or_else(|| PlotError::UnknownCeiling {
                    kind: "compute",
                    label: label.into(),
                })?;
            roofs.push((c.label.clone(), c.flops_per_sec));
        }
        let memory_label = self.memory_label();
        let m = self
            .machine
            .memory_ceiling(memory_label)
            .ok_or_else(|| PlotError::UnknownCeiling {
                kind: "memory",
                label: memory_label.into(),
            })?;
        Ok((roofs, (m.label.clone(), m.bytes_per_sec)))
    }

    /// Guide points the automatic range must include: ridge points,
    /// overhead-box corners and binding overhead ceilings.
    pub fn anchors(&self) -> Result<Vec<(f64, f64)>, PlotError> {
        let (roofs, (_, bw)) = self.roofs()?;
        let top_peak = roofs.iter().map(|r| r.1).fold(0.0, f64::max);
        let mut out = Vec::new();
        match self.kind {
            ChartKind::ClassicRoofline => {
                for (_, peak) in &roofs {
                    out.push((peak / bw, *peak));
                }
                for k in self.series.iter().flat_map(|s| &s.points).map(|p| &p.analyzed) {
                    let ceiling = overhead_ceiling_flops(k.complexity.cc, k.overhead_sec);
                    if ceiling > 0.0 && ceiling <= top_peak {
                        out.push((ceiling / bw, ceiling));
                    }
                }
            }
            ChartKind::ComplexityPlane | ChartKind::ComplexityTime4D => {
                for k in self.series.iter().flat_map(|s| &s.points).map(|p| &p.analyzed) {
                    if k.overhead_sec > 0.0 {
                        out.push((k.peak_bandwidth * k.overhead_sec, k.peak_flops * k.overhead_sec));
                    }
                }
            }
            ChartKind::TimePlane => {
                for k in self.series.iter().flat_map(|s| &s.points).map(|p| &p.analyzed) {
                    if k.overhead_sec > 0.0 {
                        out.push((k.overhead_sec, k.overhead_sec));
                    }
                }
            }
        }
        Ok(out)
    }

    /// Declared ranges, falling back to [`auto_range`] per axis.
    pub fn ranges(&self) -> Result<AxisRanges, PlotError> {
        let auto = auto_range(&self.series, self.kind, &self.anchors()?);
        Ok(AxisRanges {
            x: self.x_range.unwrap_or(auto.x),
            y: self.y_range.unwrap_or(auto.y),
        })
    }
}

/// Data coordinates of a kernel's symbols: the primary one, and for the
/// combined chart the peak-scaled time symbol.
pub fn symbol_coords(kind: ChartKind, k: &AnalyzedKernel) -> ((f64, f64), Option<(f64, f64)>) {
    match kind {
        ChartKind::ClassicRoofline => ((k.ai, k.attained_flops_per_sec), None),
        ChartKind::ComplexityPlane => ((k.complexity.bc, k.complexity.cc), None),
        ChartKind::TimePlane => ((k.time.bandwidth_time_sec, k.time.compute_time_sec), None),
        ChartKind::ComplexityTime4D => {
            let open = k.open_symbol();
            ((k.complexity.bc, k.complexity.cc), Some((open.bc, open.cc)))
        }
    }
}

fn decade_floor(v: f64) -> i32 {
    let l = libm::log10(v);
    let r = libm::round(l);
    if (l - r).abs() < 1e-9 {
        r as i32
    } else {
        libm::floor(l) as i32
    }
}

fn decade_ceil(v: f64) -> i32 {
    let l = libm::log10(v);
    let r = libm::round(l);
    if (l - r).abs() < 1e-9 {
        r as i32
    } else {
        libm::ceil(l) as i32
    }
}

fn pow10(e: i32) -> f64 {
    libm::pow(10.0, f64::from(e))
}

fn padded_decades(values: impl Iterator<Item = f64>) -> AxisRange {
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for v in values.filter(|v| v.is_finite() && *v > 0.0) {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if hi == 0.0 {
        return AxisRange::new(1e-1, 1e1);
    }
    AxisRange::new(pow10(decade_floor(lo) - 1), pow10(decade_ceil(hi) + 1))
}

/// Smallest decade-aligned ranges holding every symbol and anchor, padded
/// by one decade on each side. Zero and infinite coordinates are ignored
/// (they are clamped when drawn).
pub fn auto_range(series: &[SweepSeries], kind: ChartKind, anchors: &[(f64, f64)]) -> AxisRanges {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for k in series.iter().flat_map(|s| &s.points).map(|p| &p.analyzed) {
        let (primary, secondary) = symbol_coords(kind, k);
        for (x, y) in core::iter::once(primary).chain(secondary) {
            xs.push(x);
            ys.push(y);
        }
    }
    for (x, y) in anchors {
        xs.push(*x);
        ys.push(*y);
    }
    AxisRanges {
        x: padded_decades(xs.into_iter()),
        y: padded_decades(ys.into_iter()),
    }
}

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for ch in text.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

#[derive(Clone, Copy)]
enum Shape {
    Circle,
    Square,
    Triangle,
    Diamond,
}

const SHAPES: [Shape; 4] = [Shape::Circle, Shape::Square, Shape::Triangle, Shape::Diamond];

struct Canvas {
    svg: String,
    x: LogAxis,
    y: LogAxis,
}

impl Canvas {
    fn line(&mut self, (x1, y1): (f64, f64), (x2, y2): (f64, f64), style: &str) {
        let _ = writeln!(
            self.svg,
            r#"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" {style}/>"#
        );
    }

    fn polyline(&mut self, pts: &[(f64, f64)], style: &str) {
        if pts.len() < 2 {
            return;
        }
        let mut coords = String::new();
        for (i, (x, y)) in pts.iter().enumerate() {
            if i > 0 {
                coords.push(' ');
            }
            let _ = write!(coords, "{x:.2},{y:.2}");
        }
        let _ = writeln!(self.svg, r#"<polyline points="{coords}" fill="none" {style}/>"#);
    }

    fn text(&mut self, (x, y): (f64, f64), anchor: &str, extra: &str, body: &str) {
        let _ = writeln!(
            self.svg,
            r#"<text x="{x:.2}" y="{y:.2}" text-anchor="{anchor}"{extra}>{body}</text>"#
        );
    }

    /// Data-space segment, clipped to the axis ranges.
    fn data_line(&mut self, a: (f64, f64), b: (f64, f64), style: &str) {
        let (xa, ya) = (self.x.to_px(a.0), self.y.to_px(a.1));
        let (xb, yb) = (self.x.to_px(b.0), self.y.to_px(b.1));
        self.line((xa, ya), (xb, yb), style);
    }

    /// `y = slope * x` clipped to the plot; returns the pixel endpoints.
    fn diagonal(&mut self, slope: f64, style: &str) -> Option<((f64, f64), (f64, f64))> {
        let (xr, yr) = (self.x.range, self.y.range);
        let x_start = xr.min.max(yr.min / slope);
        let x_end = xr.max.min(yr.max / slope);
        if x_start.is_nan() || x_end.is_nan() || x_start >= x_end {
            return None;
        }
        let a = (self.x.to_px(x_start), self.y.to_px(slope * x_start));
        let b = (self.x.to_px(x_end), self.y.to_px(slope * x_end));
        self.line(a, b, style);
        Some((a, b))
    }

    fn marker(&mut self, (x, y): (f64, f64), shape: Shape, filled: bool, color: &str, class: &str) {
        let fill = if filled { color } else { "none" };
        let style = format!(r#"fill="{fill}" stroke="{color}" stroke-width="1.5""#);
        let r = 5.0;
        match shape {
            Shape::Circle => {
                let _ = writeln!(
                    self.svg,
                    r#"<circle class="{class}" cx="{x:.2}" cy="{y:.2}" r="{r:.2}" {style}/>"#
                );
            }
            Shape::Square => {
                let _ = writeln!(
                    self.svg,
                    r#"<rect class="{class}" x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" {style}/>"#,
                    x - r,
                    y - r,
                    2.0 * r,
                    2.0 * r
                );
            }
            Shape::Triangle => {
                let _ = writeln!(
                    self.svg,
                    r#"<polygon class="{class}" points="{:.2},{:.2} {:.2},{:.2} {:.2},{:.2}" {style}/>"#,
                    x,
                    y - r - 1.0,
                    x + r + 1.0,
                    y + r,
                    x - r - 1.0,
                    y + r
                );
            }
            Shape::Diamond => {
                let d = r + 1.0;
                let _ = writeln!(
                    self.svg,
                    r#"<polygon class="{class}" points="{:.2},{:.2} {:.2},{:.2} {:.2},{:.2} {:.2},{:.2}" {style}/>"#,
                    x,
                    y - d,
                    x + d,
                    y,
                    x,
                    y + d,
                    x - d,
                    y
                );
            }
        }
    }

    fn clamped_marker(&mut self, (x, y): (f64, f64), color: &str, class: &str) {
        let r = 5.0;
        let _ = writeln!(
            self.svg,
            r#"<path class="{class}" d="M{:.2},{:.2} L{:.2},{:.2} M{:.2},{:.2} L{:.2},{:.2}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            x - r,
            y - r,
            x + r,
            y + r,
            x - r,
            y + r,
            x + r,
            y - r
        );
    }
}

fn decade_label(e: i32) -> String {
    format!("1e{e}")
}

/// Renders the chart. Identical specs give identical bytes.
pub fn render_chart(spec: &ChartSpec) -> Result<String, PlotError> {
    spec.validate()?;
    let ranges = spec.ranges()?;
    let (roofs, (mem_label, bw)) = spec.roofs()?;

    let mut c = Canvas {
        svg: String::new(),
        x: LogAxis::horizontal(ranges.x),
        y: LogAxis::vertical(ranges.y),
    };
    let _ = writeln!(c.svg, r#"<?xml version="1.0" encoding="UTF-8" standalone="no"?>"#);
    let _ = writeln!(
        c.svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{CANVAS_WIDTH}" height="{CANVAS_HEIGHT}" viewBox="0 0 {CANVAS_WIDTH} {CANVAS_HEIGHT}" font-family="sans-serif" font-size="12pt">"#
    );
    let title = if spec.title.is_empty() {
        format!("{} ({})", spec.kind.name(), spec.machine.name)
    } else {
        spec.title.clone()
    };
    let _ = writeln!(c.svg, "<title>{}</title>", escape(&title));
    let _ = writeln!(
        c.svg,
        r#"<rect x="0" y="0" width="{CANVAS_WIDTH}" height="{CANVAS_HEIGHT}" fill="white"/>"#
    );
    c.text(
        (CANVAS_WIDTH / 2.0, 22.0),
        "middle",
        r#" font-weight="bold""#,
        &escape(&title),
    );

    draw_axes(&mut c, spec.kind);
    let _ = writeln!(c.svg, r#"<g class="guides" stroke-linecap="round">"#);
    draw_guides(&mut c, spec, &roofs, (&mem_label, bw));
    let _ = writeln!(c.svg, "</g>");
    for (i, series) in spec.series.iter().enumerate() {
        draw_series(&mut c, spec.kind, series, i);
    }
    draw_legend(&mut c, spec);
    let _ = writeln!(c.svg, "</svg>");
    Ok(c.svg)
}

fn draw_axes(c: &mut Canvas, kind: ChartKind) {
    let _ = writeln!(c.svg, r#"<g class="axes">"#);
    let (xr, yr) = (c.x.range, c.y.range);
    let grid = r##"stroke="#e0e0e0" stroke-width="1""##;
    let tick = r##"stroke="#000000" stroke-width="1""##;
    let secondary = kind == ChartKind::ComplexityTime4D;

    for e in decade_floor(xr.min)..=decade_ceil(xr.max) {
        let v = pow10(e);
        if !xr.contains(v) {
            continue;
        }
        let px = c.x.to_px(v);
        c.line((px, PLOT_TOP), (px, PLOT_BOTTOM), grid);
        c.line((px, PLOT_BOTTOM), (px, PLOT_BOTTOM + 6.0), tick);
        c.text((px, PLOT_BOTTOM + 24.0), "middle", "", &decade_label(e));
        if secondary {
            c.line((px, PLOT_TOP - 6.0), (px, PLOT_TOP), tick);
        }
    }
    for e in decade_floor(yr.min)..=decade_ceil(yr.max) {
        let v = pow10(e);
        if !yr.contains(v) {
            continue;
        }
        let py = c.y.to_px(v);
        c.line((PLOT_LEFT, py), (PLOT_RIGHT, py), grid);
        c.line((PLOT_LEFT - 6.0, py), (PLOT_LEFT, py), tick);
        c.text((PLOT_LEFT - 10.0, py + 5.0), "end", "", &decade_label(e));
        if secondary {
            c.line((PLOT_RIGHT, py), (PLOT_RIGHT + 6.0, py), tick);
        }
    }
    let _ = writeln!(
        c.svg,
        r##"<rect x="{PLOT_LEFT}" y="{PLOT_TOP}" width="{:.2}" height="{:.2}" fill="none" stroke="#000000" stroke-width="1"/>"##,
        PLOT_RIGHT - PLOT_LEFT,
        PLOT_BOTTOM - PLOT_TOP
    );
    let (x_title, y_title) = kind.axis_titles();
    let mid_x = (PLOT_LEFT + PLOT_RIGHT) / 2.0;
    let mid_y = (PLOT_TOP + PLOT_BOTTOM) / 2.0;
    c.text((mid_x, PLOT_BOTTOM + 56.0), "middle", "", x_title);
    let _ = writeln!(
        c.svg,
        r#"<text x="30.00" y="{mid_y:.2}" text-anchor="middle" transform="rotate(-90 30.00 {mid_y:.2})">{y_title}</text>"#
    );
    let _ = writeln!(c.svg, "</g>");
}

/// Secondary time axes of the combined chart: every primary position read
/// back through the peak it was scaled by.
fn draw_secondary_axes(c: &mut Canvas, peak_flops: f64, bw: f64) {
    let _ = writeln!(c.svg, r#"<g class="secondary-axes">"#);
    let (xr, yr) = (c.x.range, c.y.range);
    let tick = r##"stroke="#555555" stroke-width="1""##;
    let x_time = AxisRange::new(xr.min / bw, xr.max / bw);
    for e in decade_floor(x_time.min)..=decade_ceil(x_time.max) {
        let t = pow10(e);
        if !x_time.contains(t) {
            continue;
        }
        let px = c.x.to_px(t * bw);
        c.line((px, PLOT_TOP - 4.0), (px, PLOT_TOP), tick);
        c.text(
            (px, PLOT_TOP - 10.0),
            "middle",
            r##" fill="#555555" font-size="9pt""##,
            &format!("1e{e}"),
        );
    }
    let y_time = AxisRange::new(yr.min / peak_flops, yr.max / peak_flops);
    for e in decade_floor(y_time.min)..=decade_ceil(y_time.max) {
        let t = pow10(e);
        if !y_time.contains(t) {
            continue;
        }
        let py = c.y.to_px(t * peak_flops);
        c.line((PLOT_RIGHT, py), (PLOT_RIGHT + 4.0, py), tick);
        c.text(
            (PLOT_RIGHT + 8.0, py + 4.0),
            "start",
            r##" fill="#555555" font-size="9pt""##,
            &format!("1e{e}"),
        );
    }
    c.text(
        ((PLOT_LEFT + PLOT_RIGHT) / 2.0, PLOT_TOP - 28.0),
        "middle",
        r##" fill="#555555""##,
        "Bandwidth Time (s)",
    );
    let mid_y = (PLOT_TOP + PLOT_BOTTOM) / 2.0;
    let x = CANVAS_WIDTH - 24.0;
    let _ = writeln!(
        c.svg,
        r##"<text x="{x:.2}" y="{mid_y:.2}" text-anchor="middle" fill="#555555" transform="rotate(90 {x:.2} {mid_y:.2})">Compute Time (s)</text>"##
    );
    let _ = writeln!(c.svg, "</g>");
}

/// Distinct overhead values per series, in series order.
fn overheads(spec: &ChartSpec) -> Vec<(usize, f64, f64, f64)> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (i, s) in spec.series.iter().enumerate() {
        for k in s.points.iter().map(|p| &p.analyzed) {
            if k.overhead_sec > 0.0 && seen.insert((i, k.overhead_sec.to_bits())) {
                out.push((i, k.overhead_sec, k.peak_flops, k.peak_bandwidth));
            }
        }
    }
    out
}

fn draw_guides(c: &mut Canvas, spec: &ChartSpec, roofs: &[(String, f64)], (mem_label, bw): (&str, f64)) {
    let ceiling_style = r##"stroke="#000000" stroke-width="2""##;
    let diagonal_style = r##"stroke="#555555" stroke-width="1.5" stroke-dasharray="6,4""##;
    let (xr, yr) = (c.x.range, c.y.range);
    match spec.kind {
        ChartKind::ClassicRoofline => {
            let top_peak = roofs.iter().map(|r| r.1).fold(0.0, f64::max);
            // memory diagonal up to the highest ridge point
            let ridge = top_peak / bw;
            let x_start = xr.min.max(yr.min / bw);
            let x_end = ridge.min(xr.max).min(yr.max / bw);
            if x_start < x_end {
                c.data_line((x_start, bw * x_start), (x_end, bw * x_end), ceiling_style);
                let px = c.x.to_px(x_start);
                let py = c.y.to_px(bw * x_start);
                c.text(
                    (px + 8.0, py - 8.0),
                    "start",
                    "",
                    &escape(&format!("{mem_label}: {}", si(bw, "B/s"))),
                );
            }
            for (label, peak) in roofs {
                if !yr.contains(*peak) {
                    continue;
                }
                let from = (peak / bw).max(xr.min);
                if from < xr.max {
                    c.data_line((from, *peak), (xr.max, *peak), ceiling_style);
                    let py = c.y.to_px(*peak);
                    c.text(
                        (PLOT_RIGHT - 6.0, py - 6.0),
                        "end",
                        "",
                        &escape(&format!("{label}: {}", si(*peak, "FLOP/s"))),
                    );
                }
            }
            for (i, s) in spec.series.iter().enumerate() {
                let color = PALETTE[i % PALETTE.len()];
                let mut seen = BTreeSet::new();
                for k in s.points.iter().map(|p| &p.analyzed) {
                    let ceiling = overhead_ceiling_flops(k.complexity.cc, k.overhead_sec);
                    if ceiling.is_finite() && yr.contains(ceiling) && seen.insert(ceiling.to_bits()) {
                        let style = format!(
                            r#"class="overhead-ceiling" stroke="{color}" stroke-width="1" stroke-dasharray="2,3""#
                        );
                        c.data_line((xr.min, ceiling), (xr.max, ceiling), &style);
                    }
                }
            }
        }
        ChartKind::ComplexityPlane | ChartKind::ComplexityTime4D => {
            for (label, peak) in roofs {
                let mb = peak / bw;
                if let Some((_, end)) = c.diagonal(mb, &format!(r#"class="balance" {diagonal_style}"#)) {
                    c.text(
                        (end.0 - 6.0, end.1 + 16.0),
                        "end",
                        r##" fill="#555555""##,
                        &escape(&format!("balance {} ({label}/{mem_label})", sig6(mb))),
                    );
                }
            }
            for (i, t_ov, peak, bandwidth) in overheads(spec) {
                let color = PALETTE[i % PALETTE.len()];
                let corner = (bandwidth * t_ov, peak * t_ov);
                draw_box(c, corner, color);
            }
            if spec.kind == ChartKind::ComplexityTime4D {
                let peak = spec.series[0].points[0].analyzed.peak_flops;
                let bandwidth = spec.series[0].points[0].analyzed.peak_bandwidth;
                draw_secondary_axes(c, peak, bandwidth);
            }
        }
        ChartKind::TimePlane => {
            let _ = c.diagonal(1.0, &format!(r#"class="balance" {diagonal_style}"#));
            // L-shaped isocurves of max(ct, bt) at each decade
            let iso = r##"class="isocurve" stroke="#9e9e9e" stroke-width="1""##;
            for e in decade_floor(xr.min.max(yr.min))..=decade_ceil(xr.max.min(yr.max)) {
                let d = pow10(e);
                if !(xr.contains(d) && yr.contains(d)) {
                    continue;
                }
                let corner = (c.x.to_px(d), c.y.to_px(d));
                let pts = [(corner.0, PLOT_BOTTOM), corner, (PLOT_LEFT, corner.1)];
                c.polyline(&pts, iso);
            }
            for (i, t_ov, _, _) in overheads(spec) {
                draw_box(c, (t_ov, t_ov), PALETTE[i % PALETTE.len()]);
            }
        }
    }
}

/// Overhead region from the axis origin to `corner`, clipped to the plot.
fn draw_box(c: &mut Canvas, corner: (f64, f64), color: &str) {
    let (xr, yr) = (c.x.range, c.y.range);
    if corner.0 <= xr.min || corner.1 <= yr.min {
        return;
    }
    let right = c.x.to_px(corner.0.min(xr.max));
    let top = c.y.to_px(corner.1.min(yr.max));
    let _ = writeln!(
        c.svg,
        r#"<rect class="overhead-box" x="{PLOT_LEFT}" y="{top:.2}" width="{:.2}" height="{:.2}" fill="{color}" fill-opacity="0.08" stroke="{color}" stroke-width="1" stroke-dasharray="4,3"/>"#,
        right - PLOT_LEFT,
        PLOT_BOTTOM - top
    );
}

fn draw_series(c: &mut Canvas, kind: ChartKind, series: &SweepSeries, index: usize) {
    let color = PALETTE[index % PALETTE.len()];
    let shape = SHAPES[index % SHAPES.len()];
    let _ = writeln!(
        c.svg,
        r#"<g class="series" data-label="{}" data-kind="{}">"#,
        escape(&series.series_label),
        series.kind.as_str()
    );

    let mut closed = Vec::new();
    let mut open = Vec::new();
    for p in &series.points {
        let (primary, secondary) = symbol_coords(kind, &p.analyzed);
        if let Some(placed) = place(c, primary) {
            closed.push(placed);
        }
        if let Some(placed) = secondary.and_then(|s| place(c, s)) {
            open.push(placed);
        }
    }
    let solid = format!(r#"stroke="{color}" stroke-width="1.5""#);
    let dashed = format!(r#"stroke="{color}" stroke-width="1.5" stroke-dasharray="6,4""#);
    c.polyline(&closed.iter().map(|p| p.0).collect::<Vec<_>>(), &solid);
    c.polyline(&open.iter().map(|p| p.0).collect::<Vec<_>>(), &dashed);
    for (pos, clamped) in closed {
        if clamped {
            c.clamped_marker(pos, color, "marker closed clamped");
        } else {
            c.marker(pos, shape, true, color, "marker closed");
        }
    }
    for (pos, clamped) in open {
        if clamped {
            c.clamped_marker(pos, color, "marker open clamped");
        } else {
            c.marker(pos, shape, false, color, "marker open");
        }
    }
    let _ = writeln!(c.svg, "</g>");
}

fn place(c: &Canvas, (x, y): (f64, f64)) -> Option<((f64, f64), bool)> {
    let (px, cx) = c.x.place(x)?;
    let (py, cy) = c.y.place(y)?;
    Some(((px, py), cx || cy))
}

fn draw_legend(c: &mut Canvas, spec: &ChartSpec) {
    let _ = writeln!(c.svg, r#"<g class="legend">"#);
    let row = 20.0;
    let extra = usize::from(spec.kind == ChartKind::ComplexityTime4D);
    let height = row * (spec.series.len() + extra) as f64 + 12.0;
    let (x, y) = (PLOT_LEFT + 12.0, PLOT_TOP + 12.0);
    // rough 9 px per character at 12pt
    let longest = spec
        .series
        .iter()
        .map(|s| s.series_label.chars().count() + s.kind.as_str().len() + 3)
        .max()
        .unwrap_or(0);
    let width = (60.0 + 9.0 * longest as f64).max(300.0);
    let _ = writeln!(
        c.svg,
        r##"<rect x="{x:.2}" y="{y:.2}" width="{width:.2}" height="{height:.2}" fill="white" fill-opacity="0.85" stroke="#9e9e9e" stroke-width="1"/>"##
    );
    for (i, s) in spec.series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let cy = y + 16.0 + row * i as f64;
        c.line(
            (x + 10.0, cy),
            (x + 40.0, cy),
            &format!(r#"stroke="{color}" stroke-width="1.5""#),
        );
        let _ = writeln!(
            c.svg,
            r#"<circle cx="{:.2}" cy="{cy:.2}" r="4.00" fill="{color}"/>"#,
            x + 25.0
        );
        c.text(
            (x + 48.0, cy + 5.0),
            "start",
            "",
            &escape(&format!("{} [{}]", s.series_label, s.kind.as_str())),
        );
    }
    if extra == 1 {
        let cy = y + 16.0 + row * spec.series.len() as f64;
        c.text(
            (x + 10.0, cy + 5.0),
            "start",
            r##" font-size="10pt" fill="#555555""##,
            "closed: complexity, open: time x peak",
        );
    }
    let _ = writeln!(c.svg, "</g>");
}

/// Balance of the ceiling pair a chart classifies against.
pub fn chart_balance(spec: &ChartSpec) -> Option<f64> {
    let s = spec.series.first()?;
    let c = spec.machine.compute_ceiling(&s.compute_ceiling)?;
    let m = spec.machine.memory_ceiling(spec.memory_label())?;
    Some(machine_balance(c, m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machine::{ComputeCeiling, MemoryCeiling};
    use crate::profile::KernelAggregate;
    use crate::roofline::{analyze, bound_runtime, ComplexityPoint};
    use crate::sweep::{SeriesKind, SweepPoint};
    use alloc::vec;

    fn v100() -> MachineSpec {
        MachineSpec::new(
            "V100",
            vec![
                ComputeCeiling::new("tensor_core", 1.07479e14),
                ComputeCeiling::new("fp32", 1.516e13),
            ],
            vec![MemoryCeiling::new("hbm", 8.288e11)],
            4.2e-6,
        )
        .unwrap()
    }

    fn series(m: &MachineSpec, label: &str, pts: &[(f64, f64, f64, u64)]) -> SweepSeries {
        let sel = m.default_ceilings().unwrap();
        let points = pts
            .iter()
            .enumerate()
            .map(|(i, &(cc, bc, gap, inv))| {
                let t_ov = inv as f64 * m.launch_overhead_sec;
                let t = gap * bound_runtime(ComplexityPoint::new(cc, bc), sel, t_ov);
                let agg = KernelAggregate {
                    computational_complexity: cc,
                    bandwidth_complexity: bc,
                    total_time_sec: t,
                    total_invocations: inv,
                    zero_ai_bytes: 0.0,
                };
                SweepPoint {
                    value: i as f64,
                    analyzed: analyze(label, &agg, m, sel).unwrap(),
                    zero_ai_share: 0.0,
                }
            })
            .collect();
        SweepSeries {
            series_label: label.into(),
            parameter_name: "i".into(),
            kind: SeriesKind::Measured,
            machine: m.name.clone(),
            compute_ceiling: sel.compute.label.clone(),
            memory_ceiling: sel.memory.label.clone(),
            points,
        }
    }

    fn markers(svg: &str, class: &str) -> usize {
        svg.matches(&format!(r#"class="{class}""#)).count()
    }

    /// Pulls every `attr="<number>"` value out of the first element whose
    /// text contains `needle`.
    fn attr(svg: &str, needle: &str, name: &str) -> f64 {
        let line = svg.lines().find(|l| l.contains(needle)).unwrap();
        let key = format!(r#" {name}=""#);
        let start = line.find(&key).unwrap() + key.len();
        let end = start + line[start..].find('"').unwrap();
        line[start..end].parse().unwrap()
    }

    #[test]
    fn decade_padding() {
        let r = padded_decades([1e2, 3e3, 1e4].into_iter());
        assert_eq!(r, AxisRange::new(1e1, 1e5));
        let r = padded_decades([1.0].into_iter());
        assert_eq!(r, AxisRange::new(1e-1, 1e1));
        let r = padded_decades([0.0, f64::INFINITY, 2.5e-6].into_iter());
        assert_eq!(r, AxisRange::new(1e-7, 1e-4));
    }

    #[test]
    fn auto_range_contains_overhead_box() {
        let m = v100();
        // tiny kernel deep inside a large overhead box
        let s = series(&m, "lstm", &[(1e6, 1e5, 1.0, 277)]);
        let spec = ChartSpec::new(ChartKind::ComplexityPlane, m.clone(), vec![s]);
        let r = spec.ranges().unwrap();
        let corner = (8.288e11 * 277.0 * 4.2e-6, 1.07479e14 * 277.0 * 4.2e-6);
        assert!(r.x.contains(corner.0) && r.y.contains(corner.1), "{r:?}");
        assert!(r.x.contains(1e5) && r.y.contains(1e6));
    }

    #[test]
    fn log_axis_round_trip() {
        let axis = LogAxis::horizontal(AxisRange::new(1e-3, 1e5));
        for v in [1e-3, 2.5e-1, 1.0, 7.7e3, 1e5] {
            let back = axis.from_px(axis.to_px(v));
            assert!((back - v).abs() / v < 1e-12);
        }
        assert!((axis.to_px(10.0) - (PLOT_LEFT + 0.5 * (PLOT_RIGHT - PLOT_LEFT))).abs() < 1e-9);
    }

    #[test]
    fn one_marker_per_point() {
        let m = v100();
        let a = series(
            &m,
            "a",
            &[(1e10, 1e8, 1.5, 10), (2e10, 1.5e8, 1.2, 10), (4e10, 2e8, 1.1, 10)],
        );
        let b = series(&m, "b", &[(3e11, 1e9, 3.0, 40)]);
        for kind in [
            ChartKind::ClassicRoofline,
            ChartKind::ComplexityPlane,
            ChartKind::TimePlane,
        ] {
            let svg = render_chart(&ChartSpec::new(kind, m.clone(), vec![a.clone(), b.clone()])).unwrap();
            assert_eq!(markers(&svg, "marker closed"), 4, "{kind:?}");
            assert_eq!(markers(&svg, "marker open"), 0);
        }
        let svg = render_chart(&ChartSpec::new(ChartKind::ComplexityTime4D, m.clone(), vec![a, b])).unwrap();
        assert_eq!(markers(&svg, "marker closed"), 4);
        assert_eq!(markers(&svg, "marker open"), 4);
    }

    #[test]
    fn declared_range_drops_outside_points() {
        let m = v100();
        let s = series(&m, "a", &[(1e10, 1e8, 1.0, 1), (1e14, 1e12, 1.0, 1)]);
        let mut spec = ChartSpec::new(ChartKind::ComplexityPlane, m, vec![s]);
        spec.x_range = Some(AxisRange::new(1e6, 1e10));
        spec.y_range = Some(AxisRange::new(1e8, 1e12));
        let svg = render_chart(&spec).unwrap();
        assert_eq!(markers(&svg, "marker closed"), 1);
    }

    #[test]
    fn zero_flop_points_are_clamped() {
        let m = v100();
        let s = series(&m, "copy", &[(0.0, 1e9, 2.0, 1), (1e9, 1e9, 2.0, 1)]);
        let svg = render_chart(&ChartSpec::new(ChartKind::ComplexityPlane, m, vec![s])).unwrap();
        assert_eq!(markers(&svg, "marker closed clamped"), 1);
        assert_eq!(markers(&svg, "marker closed"), 1);
    }

    #[test]
    fn on_roofline_symbols_coincide() {
        let m = v100();
        let s = series(&m, "k", &[(5e12, 1e9, 1.0, 1)]);
        let svg = render_chart(&ChartSpec::new(ChartKind::ComplexityTime4D, m, vec![s])).unwrap();
        let closed = (attr(&svg, "marker closed", "cx"), attr(&svg, "marker closed", "cy"));
        let open = (attr(&svg, "marker open", "cx"), attr(&svg, "marker open", "cy"));
        assert!((closed.0 - open.0).abs() <= 1.0 && (closed.1 - open.1).abs() <= 1.0);
    }

    #[test]
    fn symbols_on_balance_diagonal_stay_collinear() {
        let m = v100();
        let mb = 1.07479e14 / 8.288e11;
        let s = series(&m, "k", &[(mb * 1e9, 1e9, 3.0, 1)]);
        let spec = ChartSpec::new(ChartKind::ComplexityTime4D, m, vec![s]);
        let svg = render_chart(&spec).unwrap();
        let x = LogAxis::horizontal(spec.ranges().unwrap().x);
        let y = LogAxis::vertical(spec.ranges().unwrap().y);
        for class in ["marker closed", "marker open"] {
            let (px, py) = (attr(&svg, class, "cx"), attr(&svg, class, "cy"));
            let ratio = y.from_px(py) / x.from_px(px);
            // two-decimal pixel rounding bounds the error
            assert!((ratio / mb - 1.0).abs() < 1e-3, "{class}: {ratio}");
        }
    }

    #[test]
    fn guides_match_their_analytic_positions() {
        let m = v100();
        let s = series(&m, "k", &[(1e10, 1e9, 2.0, 100)]);
        let spec = ChartSpec::new(ChartKind::ComplexityPlane, m, vec![s]);
        let svg = render_chart(&spec).unwrap();
        let r = spec.ranges().unwrap();
        let (x, y) = (LogAxis::horizontal(r.x), LogAxis::vertical(r.y));
        let mb = 1.07479e14 / 8.288e11;
        let (x1, y1) = (
            attr(&svg, r#"class="balance""#, "x1"),
            attr(&svg, r#"class="balance""#, "y1"),
        );
        let (x2, y2) = (
            attr(&svg, r#"class="balance""#, "x2"),
            attr(&svg, r#"class="balance""#, "y2"),
        );
        for (px, py) in [(x1, y1), (x2, y2)] {
            let expected_py = y.to_px(mb * x.from_px(px));
            assert!((expected_py - py).abs() <= 0.5);
        }
        let t_ov = 100.0 * 4.2e-6;
        let top = attr(&svg, "overhead-box", "y");
        let width = attr(&svg, "overhead-box", "width");
        assert!((top - y.to_px(1.07479e14 * t_ov)).abs() <= 0.5);
        assert!((PLOT_LEFT + width - x.to_px(8.288e11 * t_ov)).abs() <= 0.5);
    }

    #[test]
    fn rendering_is_pure() {
        let m = v100();
        let s = series(&m, "a", &[(1e10, 1e8, 1.5, 10), (2e10, 1.5e8, 1.2, 10)]);
        let spec = ChartSpec::new(ChartKind::TimePlane, m, vec![s]).with_title("t <&>");
        let a = render_chart(&spec).unwrap();
        assert_eq!(a, render_chart(&spec).unwrap());
        assert!(a.contains("<title>t &lt;&amp;&gt;</title>"));
        assert!(a.contains(r#"class="isocurve""#));
    }

    #[test]
    fn invalid_specs() {
        let m = v100();
        assert_eq!(
            render_chart(&ChartSpec::new(ChartKind::TimePlane, m.clone(), vec![])),
            Err(PlotError::EmptySeries)
        );
        let s = series(&m, "a", &[(1e10, 1e8, 1.5, 10)]);
        let mut spec = ChartSpec::new(ChartKind::TimePlane, m.clone(), vec![s.clone()]);
        spec.x_range = Some(AxisRange::new(0.0, 1.0));
        assert!(matches!(
            render_chart(&spec),
            Err(PlotError::BadRange { axis: "x", .. })
        ));
        let mut other = m.clone();
        other.name = "A100".into();
        let spec = ChartSpec::new(ChartKind::TimePlane, other, vec![s.clone()]);
        assert!(matches!(render_chart(&spec), Err(PlotError::MachineMismatch { .. })));
        let mut spec = ChartSpec::new(ChartKind::ClassicRoofline, m, vec![s]);
        spec.compute_ceilings = vec!["fp8".into()];
        assert!(matches!(render_chart(&spec), Err(PlotError::UnknownCeiling { .. })));
    }
}
