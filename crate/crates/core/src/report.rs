// SPDX-License-Identifier: MIT OR Apache-2.0

//! CSV and hand-written SVG figures.
//!
//! Every SVG is drawn from the same numbers that go into its CSV twin, and
//! nothing time- or machine-dependent goes into either, so re-emitting from
//! the same inputs is byte-identical. Plotted marks carry their exact values
//! in `data-*` attributes.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::autodiff::Scalar;
use crate::dataset::InflectionExample;
use crate::error::{Error, Result};
use crate::probing::collect_sites;
use crate::rules::{classify_pair, Annotation, Consonant, Direction, Kind};
use crate::intervention::SweepCurve;
use crate::seq2seq::{CurvePoint, Seq2Seq};

/// Scatter mark of one example.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Glyph {
    /// Lower case for direct gradation, upper case for inverse.
    Letter(Consonant, Direction),
    /// No gradation.
    Dot,
}

impl Glyph {
    pub const ALL: [Glyph; 7] = [
        Glyph::Letter(Consonant::P, Direction::Direct),
        Glyph::Letter(Consonant::T, Direction::Direct),
        Glyph::Letter(Consonant::K, Direction::Direct),
        Glyph::Letter(Consonant::P, Direction::Inverse),
        Glyph::Letter(Consonant::T, Direction::Inverse),
        Glyph::Letter(Consonant::K, Direction::Inverse),
        Glyph::Dot,
    ];

    pub fn of(annotation: &Annotation) -> Glyph {
        match annotation.event {
            Some(e) => Glyph::Letter(e.consonant(), e.direction),
            None => Glyph::Dot,
        }
    }

    /// `p t k P T K` or `dot`.
    pub fn code(self) -> String {
        match self {
            Glyph::Letter(c, Direction::Direct) => c.as_char().to_string(),
            Glyph::Letter(c, Direction::Inverse) => c.as_char().to_ascii_uppercase().to_string(),
            Glyph::Dot => "dot".into(),
        }
    }

    pub fn from_code(code: &str) -> Result<Glyph> {
        Glyph::ALL
            .into_iter()
            .find(|g| g.code() == code)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown glyph {code:?}")))
    }

    fn legend(self) -> String {
        match self {
            Glyph::Letter(c, d) => format!("{c} {d}"),
            Glyph::Dot => "no gradation".into(),
        }
    }

    fn color(self) -> &'static str {
        match self {
            Glyph::Letter(Consonant::P, _) => "#1b9e77",
            Glyph::Letter(Consonant::T, _) => "#d95f02",
            Glyph::Letter(Consonant::K, _) => "#7570b3",
            Glyph::Dot => "#666666",
        }
    }
}

fn annotation_of(e: &InflectionExample) -> Result<Annotation> {
    match e.annotation {
        Some(a) => Ok(a),
        None => classify_pair(&e.nominative, &e.genitive),
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Writes `<stem>.csv` and `<stem>.svg`.
fn write_pair(stem: &Path, csv: &str, svg: &str) -> Result<(PathBuf, PathBuf)> {
    let (c, s) = (stem.with_extension("csv"), stem.with_extension("svg"));
    write_file(&c, csv)?;
    write_file(&s, svg)?;
    Ok((c, s))
}

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for ch in text.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            c => out.push(c),
        }
    }
    out
}

fn svg_open(out: &mut String, width: f64, height: f64) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{width}" height="{height}" fill="white"/>"#);
}

/// Closed interval with a little padding; never degenerate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Range {
    pub min: f64,
    pub max: f64,
}

impl Range {
    pub fn covering(values: impl IntoIterator<Item = f64>) -> Range {
        let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values {
            min = min.min(v);
            max = max.max(v);
        }
        if !min.is_finite() {
            return Range { min: 0.0, max: 1.0 };
        }
        if max - min < 1e-12 {
            let pad = if min.abs() > 1e-12 { min.abs() * 0.1 } else { 1.0 };
            return Range { min: min - pad, max: max + pad };
        }
        Range { min, max }
    }

    pub fn contains(&self, v: f64) -> bool {
        self.min <= v && v <= self.max
    }

    fn padded(self, frac: f64) -> Range {
        let pad = (self.max - self.min) * frac;
        Range { min: self.min - pad, max: self.max + pad }
    }

    fn ticks(&self, n: usize) -> Vec<f64> {
        (0..n).map(|i| self.min + (self.max - self.min) * i as f64 / (n - 1) as f64).collect()
    }
}

fn tick_label(v: f64) -> String {
    let r = (v * 100.0).round() / 100.0;
    if r == r.trunc() {
        format!("{}", r as i64)
    } else {
        format!("{r}")
    }
}

/// Plot area mapping data coordinates to pixels.
struct Frame {
    left: f64,
    top: f64,
    width: f64,
    height: f64,
    x: Range,
    y: Range,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        self.left + (x - self.x.min) / (self.x.max - self.x.min) * self.width
    }

    fn py(&self, y: f64) -> f64 {
        self.top + self.height - (y - self.y.min) / (self.y.max - self.y.min) * self.height
    }

    fn draw_axes(&self, out: &mut String, x_label: &str, y_label: &str) {
        let (l, t, w, h) = (self.left, self.top, self.width, self.height);
        let _ = writeln!(out, r##"<rect x="{l}" y="{t}" width="{w}" height="{h}" fill="none" stroke="#333"/>"##);
        for v in self.x.ticks(6) {
            let x = self.px(v);
            let _ = writeln!(
                out,
                r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#333"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"##,
                t + h,
                t + h + 4.0,
                t + h + 17.0,
                tick_label(v)
            );
        }
        for v in self.y.ticks(6) {
            let y = self.py(v);
            let _ = writeln!(
                out,
                r##"<line x1="{:.2}" y1="{y:.2}" x2="{l}" y2="{y:.2}" stroke="#333"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"##,
                l - 4.0,
                l - 7.0,
                y + 4.0,
                tick_label(v)
            );
        }
        let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, l + w / 2.0, t + h + 36.0, escape(x_label));
        let _ = writeln!(
            out,
            r#"<text transform="translate({:.2},{:.2}) rotate(-90)" text-anchor="middle">{}</text>"#,
            l - 44.0,
            t + h / 2.0,
            escape(y_label)
        );
    }
}

// ---------------------------------------------------------------- scatter

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatterPoint {
    /// Index into the example list.
    pub example: usize,
    pub x: f64,
    pub y: f64,
    pub glyph: Glyph,
}

/// Site activations of dimensions `d1` (x) and `d2` (y) for every example
/// with a probe site.
pub fn scatter_points<F: Scalar>(
    model: &Seq2Seq<F>,
    examples: &[InflectionExample],
    d1: usize,
    d2: usize,
) -> Result<Vec<ScatterPoint>> {
    let dim = model.trace_dim();
    if d1 >= dim || d2 >= dim {
        return Err(Error::InvalidConfig(format!("dimensions {d1}, {d2} out of range for width {dim}")));
    }
    let sites = collect_sites(model, examples)?;
    sites
        .examples
        .iter()
        .enumerate()
        .map(|(row, &i)| {
            Ok(ScatterPoint {
                example: i,
                x: sites.matrix[[row, d1]],
                y: sites.matrix[[row, d2]],
                glyph: Glyph::of(&annotation_of(&examples[i])?),
            })
        })
        .collect()
}

pub const SCATTER_HEADER: &str = "example,nominative,x,y,glyph";

pub fn scatter_csv(points: &[ScatterPoint], examples: &[InflectionExample]) -> String {
    let mut out = format!("{SCATTER_HEADER}\n");
    for p in points {
        let _ = writeln!(out, "{},{},{},{},{}", p.example, examples[p.example].nominative, p.x, p.y, p.glyph.code());
    }
    out
}

pub fn parse_scatter_csv(text: &str) -> Result<Vec<ScatterPoint>> {
    let mut lines = text.lines();
    if lines.next() != Some(SCATTER_HEADER) {
        return Err(Error::MalformedRow { line: 1, reason: "scatter header".into() });
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let bad = |reason: &str| Error::MalformedRow { line: i + 2, reason: reason.into() };
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 5 {
                return Err(bad("expected 5 fields"));
            }
            Ok(ScatterPoint {
                example: f[0].parse().map_err(|_| bad("example"))?,
                x: f[2].parse().map_err(|_| bad("x"))?,
                y: f[3].parse().map_err(|_| bad("y"))?,
                glyph: Glyph::from_code(f[4]).map_err(|_| bad("glyph"))?,
            })
        })
        .collect()
}

pub fn scatter_svg(points: &[ScatterPoint], d1: usize, d2: usize) -> String {
    let frame = Frame {
        left: 70.0,
        top: 20.0,
        width: 460.0,
        height: 460.0,
        x: Range::covering(points.iter().map(|p| p.x)).padded(0.05),
        y: Range::covering(points.iter().map(|p| p.y)).padded(0.05),
    };
    let mut out = String::new();
    svg_open(&mut out, 680.0, 540.0);
    frame.draw_axes(&mut out, &format!("dimension {d1}"), &format!("dimension {d2}"));
    for p in points {
        let (x, y) = (frame.px(p.x), frame.py(p.y));
        let data = format!(r#"class="point" data-example="{}" data-x="{}" data-y="{}" data-glyph="{}""#, p.example, p.x, p.y, p.glyph.code());
        match p.glyph {
            Glyph::Dot => {
                let _ = writeln!(out, r#"<circle {data} cx="{x:.2}" cy="{y:.2}" r="2" fill="{}"/>"#, p.glyph.color());
            }
            g => {
                let _ = writeln!(
                    out,
                    r#"<text {data} x="{x:.2}" y="{:.2}" text-anchor="middle" fill="{}">{}</text>"#,
                    y + 4.0,
                    g.color(),
                    g.code()
                );
            }
        }
    }
    out.push_str("<g class=\"legend\">\n");
    for (i, g) in Glyph::ALL.iter().enumerate() {
        let y = 40.0 + 20.0 * i as f64;
        let mark = match g {
            Glyph::Dot => format!(r#"<circle cx="553" cy="{:.0}" r="2" fill="{}"/>"#, y - 4.0, g.color()),
            _ => format!(r#"<text x="553" y="{y:.0}" text-anchor="middle" fill="{}">{}</text>"#, g.color(), g.code()),
        };
        let _ = writeln!(out, r#"{mark}<text x="565" y="{y:.0}">{}</text>"#, g.legend());
    }
    out.push_str("</g>\n</svg>\n");
    out
}

/// Writes `<stem>.csv` and `<stem>.svg` for dimensions `d1` against `d2`.
pub fn emit_scatter<F: Scalar>(
    model: &Seq2Seq<F>,
    examples: &[InflectionExample],
    d1: usize,
    d2: usize,
    stem: &Path,
) -> Result<(PathBuf, PathBuf)> {
    let points = scatter_points(model, examples, d1, d2)?;
    write_pair(stem, &scatter_csv(&points, examples), &scatter_svg(&points, d1, d2))
}

// ---------------------------------------------------------------- heatmap

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum HeatmapGroup {
    Quantitative,
    Qualitative,
    None,
}

impl HeatmapGroup {
    pub const ALL: [HeatmapGroup; 3] = [HeatmapGroup::Quantitative, HeatmapGroup::Qualitative, HeatmapGroup::None];

    pub fn of(annotation: &Annotation) -> HeatmapGroup {
        match annotation.event.map(|e| e.kind()) {
            Some(Kind::Quantitative) => HeatmapGroup::Quantitative,
            Some(Kind::Qualitative) => HeatmapGroup::Qualitative,
            None => HeatmapGroup::None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            HeatmapGroup::Quantitative => "quantitative",
            HeatmapGroup::Qualitative => "qualitative",
            HeatmapGroup::None => "none",
        }
    }

    fn title(self) -> &'static str {
        match self {
            HeatmapGroup::Quantitative => "quantitative gradation",
            HeatmapGroup::Qualitative => "qualitative gradation",
            HeatmapGroup::None => "no gradation",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeatmapRow {
    pub word: String,
    pub group: HeatmapGroup,
    /// One value per character of `word`.
    pub activations: Vec<f64>,
    pub predicted: String,
    pub gold: String,
    /// Per character of `predicted`: does it match `gold` at that index.
    pub char_ok: Vec<bool>,
}

impl HeatmapRow {
    pub fn correct(&self) -> bool {
        self.predicted == self.gold
    }
}

pub fn heatmap_rows<F: Scalar>(model: &Seq2Seq<F>, examples: &[InflectionExample], dim: usize) -> Result<Vec<HeatmapRow>> {
    if dim >= model.trace_dim() {
        return Err(Error::InvalidConfig(format!("dimension {dim} out of range for width {}", model.trace_dim())));
    }
    let words: Vec<&str> = examples.iter().map(|e| e.nominative.as_str()).collect();
    let traces = model.encode_batch(&words)?;
    let predicted = model.decode_batch(&traces);
    let mut rows = Vec::with_capacity(examples.len());
    for ((e, trace), out) in examples.iter().zip(&traces).zip(predicted) {
        let gold: Vec<char> = e.genitive.chars().collect();
        let char_ok = out.chars().enumerate().map(|(i, c)| gold.get(i) == Some(&c)).collect();
        rows.push(HeatmapRow {
            word: e.nominative.clone(),
            group: HeatmapGroup::of(&annotation_of(e)?),
            activations: trace.states.column(dim).iter().map(|x| x.to_f64().expect("finite")).collect(),
            predicted: out,
            gold: e.genitive.clone(),
            char_ok,
        });
    }
    Ok(rows)
}

pub const HEATMAP_HEADER: &str = "group,word,position,char,activation,predicted,correct";

/// Long format, one line per character, rows grouped in
/// quantitative / qualitative / none order.
pub fn heatmap_csv(rows: &[HeatmapRow]) -> String {
    let mut out = format!("{HEATMAP_HEADER}\n");
    for group in HeatmapGroup::ALL {
        for r in rows.iter().filter(|r| r.group == group) {
            for (i, (c, a)) in r.word.chars().zip(&r.activations).enumerate() {
                let _ = writeln!(out, "{},{},{i},{c},{a},{},{}", group.name(), r.word, r.predicted, r.correct());
            }
        }
    }
    out
}

fn heat_color(v: f64, scale: f64) -> String {
    let s = if scale > 0.0 { (v.abs() / scale).min(1.0) } else { 0.0 };
    let fade = (255.0 * (1.0 - s)).round() as u8;
    if v > 0.0 {
        format!("rgb(255,{fade},{fade})")
    } else if v < 0.0 {
        format!("rgb({fade},{fade},255)")
    } else {
        "rgb(255,255,255)".into()
    }
}

pub fn heatmap_svg(rows: &[HeatmapRow], dim: usize) -> String {
    const CELL: f64 = 22.0;
    let scale = rows.iter().flat_map(|r| &r.activations).fold(0.0f64, |m, v| m.max(v.abs()));
    let widest = rows.iter().map(|r| r.activations.len()).max().unwrap_or(0) as f64;
    let groups: Vec<HeatmapGroup> = HeatmapGroup::ALL.into_iter().filter(|g| rows.iter().any(|r| r.group == *g)).collect();
    let height = 40.0 + groups.len() as f64 * 30.0 + rows.len() as f64 * (CELL + 4.0) + 10.0;
    let width = 40.0 + widest * CELL + 220.0;

    let mut out = String::new();
    svg_open(&mut out, width, height);
    let _ = writeln!(out, r#"<text x="10" y="20">dimension {dim} (red positive, blue negative, max |a| = {scale:.4})</text>"#);
    let mut y = 40.0;
    for (gi, group) in groups.iter().enumerate() {
        let _ = writeln!(out, r#"<g class="block" data-group="{}">"#, group.name());
        let _ = writeln!(out, r#"<text x="10" y="{:.0}" font-weight="bold">({}) {}</text>"#, y + 16.0, gi + 1, group.title());
        y += 30.0;
        for r in rows.iter().filter(|r| r.group == *group) {
            let _ = writeln!(out, r#"<g class="row" data-word="{}" data-correct="{}">"#, escape(&r.word), r.correct());
            for (i, (c, &a)) in r.word.chars().zip(&r.activations).enumerate() {
                let x = 40.0 + i as f64 * CELL;
                let sign = if a > 0.0 { "pos" } else if a < 0.0 { "neg" } else { "zero" };
                let _ = writeln!(
                    out,
                    r##"<rect class="cell {sign}" data-value="{a}" x="{x:.0}" y="{y:.0}" width="{CELL}" height="{CELL}" fill="{}" stroke="#ccc"/><text x="{:.0}" y="{:.0}" text-anchor="middle">{}</text>"##,
                    heat_color(a, scale),
                    x + CELL / 2.0,
                    y + 15.0,
                    escape(&c.to_string())
                );
            }
            let tx = 50.0 + widest * CELL;
            let deco = if r.correct() { "" } else { r#" text-decoration="line-through""# };
            let _ = write!(out, r#"<text class="output" x="{tx:.0}" y="{:.0}"{deco}>"#, y + 15.0);
            for (c, ok) in r.predicted.chars().zip(&r.char_ok) {
                let fill = if *ok { "" } else { r##" fill="#c00""## };
                let _ = write!(out, "<tspan{fill}>{}</tspan>", escape(&c.to_string()));
            }
            out.push_str("</text>\n</g>\n");
            y += CELL + 4.0;
        }
        out.push_str("</g>\n");
    }
    out.push_str("</svg>\n");
    out
}

/// Writes `<stem>.csv` and `<stem>.svg` for one trace dimension over `examples`.
pub fn emit_heatmap<F: Scalar>(
    model: &Seq2Seq<F>,
    examples: &[InflectionExample],
    dim: usize,
    stem: &Path,
) -> Result<(PathBuf, PathBuf)> {
    let rows = heatmap_rows(model, examples, dim)?;
    write_pair(stem, &heatmap_csv(&rows), &heatmap_svg(&rows, dim))
}

// ---------------------------------------------------------------- curves

/// `(name, [(x, [metric values])])`
pub type Series = (String, Vec<(f64, Vec<f64>)>);

/// Named series sharing one x axis and a fixed list of metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveSet {
    pub title: String,
    pub x_label: String,
    pub metrics: Vec<String>,
    pub series: Vec<Series>,
}

/// Which sweep percentages to plot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepMetric {
    Gold,
    Alternate,
    Nonce,
}

impl SweepMetric {
    pub const ALL: [SweepMetric; 3] = [SweepMetric::Gold, SweepMetric::Alternate, SweepMetric::Nonce];

    pub fn name(self) -> &'static str {
        match self {
            SweepMetric::Gold => "gold_pct",
            SweepMetric::Alternate => "alternate_pct",
            SweepMetric::Nonce => "nonce_pct",
        }
    }
}

impl CurveSet {
    /// Dev accuracy against training step, one series per model.
    pub fn training(curves: &[(String, Vec<CurvePoint>)]) -> CurveSet {
        CurveSet {
            title: "development accuracy".into(),
            x_label: "step".into(),
            metrics: vec!["dev_accuracy".into()],
            series: curves
                .iter()
                .map(|(name, pts)| (name.clone(), pts.iter().map(|p| (p.step as f64, vec![p.dev_accuracy])).collect()))
                .collect(),
        }
    }

    /// One series per sweep curve, named by its label (`T1`, `TR`, ...).
    pub fn sweeps(title: &str, curves: &[&SweepCurve], metrics: &[SweepMetric]) -> CurveSet {
        CurveSet {
            title: title.into(),
            x_label: "factor".into(),
            metrics: metrics.iter().map(|m| m.name().to_string()).collect(),
            series: curves
                .iter()
                .map(|c| {
                    let pts = c
                        .points
                        .iter()
                        .map(|p| {
                            let vals = metrics
                                .iter()
                                .map(|m| match m {
                                    SweepMetric::Gold => p.gold_pct(),
                                    SweepMetric::Alternate => p.alternate_pct(),
                                    SweepMetric::Nonce => p.nonce_pct(),
                                })
                                .collect();
                            (p.factor, vals)
                        })
                        .collect();
                    (c.label.clone(), pts)
                })
                .collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.metrics.is_empty() || self.series.is_empty() || self.series.iter().any(|(_, pts)| pts.is_empty()) {
            return Err(Error::EmptyInput);
        }
        if self.series.iter().flat_map(|(_, p)| p).any(|(_, v)| v.len() != self.metrics.len()) {
            return Err(Error::InvalidConfig("metric count mismatch".into()));
        }
        Ok(())
    }

    pub fn x_range(&self) -> Range {
        Range::covering(self.series.iter().flat_map(|(_, p)| p.iter().map(|(x, _)| *x)))
    }

    pub fn y_range(&self, metric: usize) -> Range {
        Range::covering(self.series.iter().flat_map(|(_, p)| p.iter().map(move |(_, v)| v[metric])))
    }

    /// Columns `series,<x_label>,<metrics...>`.
    pub fn to_csv(&self) -> String {
        let mut out = format!("series,{},{}\n", self.x_label, self.metrics.join(","));
        for (name, pts) in &self.series {
            for (x, vals) in pts {
                let vals: Vec<String> = vals.iter().map(f64::to_string).collect();
                let _ = writeln!(out, "{name},{x},{}", vals.join(","));
            }
        }
        out
    }

    /// One panel per metric, side by side.
    pub fn to_svg(&self) -> String {
        const PALETTE: [&str; 8] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#17becf"];
        let (pw, ph) = (380.0, 280.0);
        let width = 30.0 + self.metrics.len() as f64 * (pw + 90.0) + 150.0;
        let mut out = String::new();
        svg_open(&mut out, width, ph + 110.0);
        let _ = writeln!(out, r#"<text x="10" y="18">{}</text>"#, escape(&self.title));
        let x_range = self.x_range();
        for (m, metric) in self.metrics.iter().enumerate() {
            let frame = Frame {
                left: 80.0 + m as f64 * (pw + 90.0),
                top: 35.0,
                width: pw,
                height: ph,
                x: x_range,
                y: self.y_range(m).padded(0.05),
            };
            frame.draw_axes(&mut out, &self.x_label, metric);
            for (s, (name, pts)) in self.series.iter().enumerate() {
                let color = PALETTE[s % PALETTE.len()];
                let path: Vec<String> = pts.iter().map(|(x, v)| format!("{:.2},{:.2}", frame.px(*x), frame.py(v[m]))).collect();
                let _ = writeln!(
                    out,
                    r#"<polyline class="series" data-series="{}" data-metric="{}" points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
                    escape(name),
                    escape(metric),
                    path.join(" ")
                );
                for (x, v) in pts {
                    let _ = writeln!(
                        out,
                        r#"<circle class="point" data-x="{x}" data-y="{}" cx="{:.2}" cy="{:.2}" r="2" fill="{color}"/>"#,
                        v[m],
                        frame.px(*x),
                        frame.py(v[m])
                    );
                }
            }
        }
        let lx = width - 140.0;
        for (s, (name, _)) in self.series.iter().enumerate() {
            let y = 50.0 + 18.0 * s as f64;
            let _ = writeln!(
                out,
                r#"<line x1="{lx}" y1="{:.0}" x2="{:.0}" y2="{:.0}" stroke="{}" stroke-width="2"/><text x="{:.0}" y="{y:.0}">{}</text>"#,
                y - 4.0,
                lx + 20.0,
                y - 4.0,
                PALETTE[s % PALETTE.len()],
                lx + 26.0,
                escape(name)
            );
        }
        out.push_str("</svg>\n");
        out
    }
}

/// Writes `<stem>.csv` and `<stem>.svg`.
pub fn emit_curves(curves: &CurveSet, stem: &Path) -> Result<(PathBuf, PathBuf)> {
    curves.validate()?;
    write_pair(stem, &curves.to_csv(), &curves.to_svg())
}
