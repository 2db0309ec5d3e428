//! Chart outputs and playstyle classification.
//!
//! Quadrants follow the usual reading of an alignment chart, with systemic
//! reward `E` on the x-axis and agential incentive `I` on the y-axis:
//!
//! | quadrant | E | I | meaning |
//! |---|---|---|---|
//! | Q1 (green) | + | + | rewarded and sought |
//! | Q2 (yellow) | − | + | punished but sought |
//! | Q3 (red) | − | − | punished and avoided |
//! | Q4 (blue) | + | − | rewarded but avoided |

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estimation::{alignment_value, AlignmentChart, EstimationError};
use crate::trace::{Condition, Corpus, MechanicId, TraceError};

pub const DEFAULT_AXIS_EPSILON: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReportError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("unknown traces must come from a single agent, found {0:?}")]
    MixedUnknownAgents(Vec<String>),
    #[error("unknown agent `{0}` already exists in the reference corpus")]
    AgentCollision(String),
    #[error("no profiles to compare against")]
    NoProfiles,
    #[error("line {line}: malformed profile record: {reason}")]
    MalformedProfile { line: usize, reason: String },
    #[error("line {line}: malformed CSV row: {reason}")]
    MalformedCsv { line: usize, reason: String },
    #[error("invalid chart style: {0}")]
    InvalidStyle(String),
    #[error(transparent)]
    Estimation(#[from] EstimationError),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for ReportError {
    fn from(e: std::io::Error) -> Self {
        ReportError::Io(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[allow(non_camel_case_types)]
pub enum QuadrantLabel {
    Q1_aligned_positive,
    Q2_misaligned_agent_positive,
    Q3_aligned_negative,
    Q4_misaligned_agent_negative,
    axis_systemic,
    axis_agential,
    origin_neutral,
}

impl QuadrantLabel {
    pub const ALL: [QuadrantLabel; 7] = [
        QuadrantLabel::Q1_aligned_positive,
        QuadrantLabel::Q2_misaligned_agent_positive,
        QuadrantLabel::Q3_aligned_negative,
        QuadrantLabel::Q4_misaligned_agent_negative,
        QuadrantLabel::axis_systemic,
        QuadrantLabel::axis_agential,
        QuadrantLabel::origin_neutral,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            QuadrantLabel::Q1_aligned_positive => "Q1_aligned_positive",
            QuadrantLabel::Q2_misaligned_agent_positive => "Q2_misaligned_agent_positive",
            QuadrantLabel::Q3_aligned_negative => "Q3_aligned_negative",
            QuadrantLabel::Q4_misaligned_agent_negative => "Q4_misaligned_agent_negative",
            QuadrantLabel::axis_systemic => "axis_systemic",
            QuadrantLabel::axis_agential => "axis_agential",
            QuadrantLabel::origin_neutral => "origin_neutral",
        }
    }

    /// Q1 and Q3: environment and player agree.
    pub fn is_aligned(self) -> bool {
        matches!(
            self,
            QuadrantLabel::Q1_aligned_positive | QuadrantLabel::Q3_aligned_negative
        )
    }
}

impl fmt::Display for QuadrantLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for QuadrantLabel {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        QuadrantLabel::ALL
            .into_iter()
            .find(|q| q.as_str() == s)
            .ok_or_else(|| s.to_string())
    }
}

/// Labels a point. Values within `epsilon` of zero count as on the axis.
pub fn quadrant(systemic: f64, agential: f64, epsilon: f64) -> QuadrantLabel {
    let on_x = systemic.abs() <= epsilon;
    let on_y = agential.abs() <= epsilon;
    match (on_x, on_y) {
        (true, true) => QuadrantLabel::origin_neutral,
        (true, false) => QuadrantLabel::axis_agential,
        (false, true) => QuadrantLabel::axis_systemic,
        (false, false) => match (systemic > 0.0, agential > 0.0) {
            (true, true) => QuadrantLabel::Q1_aligned_positive,
            (false, true) => QuadrantLabel::Q2_misaligned_agent_positive,
            (false, false) => QuadrantLabel::Q3_aligned_negative,
            (true, false) => QuadrantLabel::Q4_misaligned_agent_negative,
        },
    }
}

/// Distance from the `y = x` line along the y-axis: `|I - E|`.
pub fn misalignment(systemic: f64, agential: f64) -> f64 {
    (agential - systemic).abs()
}

/// An agent's incentive vector over the mechanic universe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaystyleProfile {
    pub agent: String,
    pub incentives: BTreeMap<MechanicId, f64>,
    pub trace_count: usize,
}

fn incentive_vector(
    corpus: &Corpus,
    agent: &str,
) -> Result<BTreeMap<MechanicId, f64>, ReportError> {
    let condition = Condition::agent(agent);
    corpus
        .mechanic_universe()
        .iter()
        .map(|m| Ok((m.clone(), alignment_value(corpus, m, &condition)?)))
        .collect()
}

/// One profile per agent: its `I_m` for every mechanic in the universe.
pub fn build_profiles(corpus: &Corpus) -> Result<BTreeMap<String, PlaystyleProfile>, ReportError> {
    if corpus.is_empty() {
        return Err(ReportError::EmptyCorpus);
    }
    corpus
        .agents()
        .map(|agent| {
            let profile = PlaystyleProfile {
                agent: agent.to_string(),
                incentives: incentive_vector(corpus, agent)?,
                trace_count: corpus.agent_trace_count(agent),
            };
            Ok((agent.to_string(), profile))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Metric {
    #[default]
    L1,
    L2,
}

impl Metric {
    pub fn as_str(self) -> &'static str {
        match self {
            Metric::L1 => "l1",
            Metric::L2 => "l2",
        }
    }

    pub fn distance<'a>(self, pairs: impl Iterator<Item = (f64, f64)> + 'a) -> f64 {
        match self {
            Metric::L1 => pairs.map(|(a, b)| (a - b).abs()).sum(),
            Metric::L2 => pairs.map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt(),
        }
    }
}

impl FromStr for Metric {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "l1" => Ok(Metric::L1),
            "l2" => Ok(Metric::L2),
            other => Err(format!("unknown metric `{other}` (expected l1 or l2)")),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ranked {
    pub agent: String,
    pub distance: f64,
}

/// The single agent id shared by all unknown traces.
pub fn unknown_agent_id(unknown: &Corpus) -> Result<String, ReportError> {
    let agents: Vec<String> = unknown.agents().map(str::to_string).collect();
    match agents.as_slice() {
        [] => Err(ReportError::EmptyCorpus),
        [one] => Ok(one.clone()),
        _ => Err(ReportError::MixedUnknownAgents(agents)),
    }
}

/// Ranks profiles by distance to the unknown traces' incentive vector.
///
/// The unknown traces are merged into `reference` first so the pooled
/// distributions include them. Only mechanics present in both the profile
/// and the merged universe are compared.
pub fn classify(
    profiles: &BTreeMap<String, PlaystyleProfile>,
    unknown: &Corpus,
    reference: &Corpus,
    metric: Metric,
) -> Result<Vec<Ranked>, ReportError> {
    if profiles.is_empty() {
        return Err(ReportError::NoProfiles);
    }
    let agent = unknown_agent_id(unknown)?;
    if reference.has_agent(&agent) {
        return Err(ReportError::AgentCollision(agent));
    }
    let merged = reference.merge(unknown)?;
    let vector = incentive_vector(&merged, &agent)?;
    let mut ranked: Vec<Ranked> = profiles
        .values()
        .map(|p| Ranked {
            agent: p.agent.clone(),
            distance: metric.distance(
                p.incentives
                    .iter()
                    .filter_map(|(m, a)| vector.get(m).map(|b| (*a, *b))),
            ),
        })
        .collect();
    ranked.sort_by(|a, b| {
        a.distance
            .total_cmp(&b.distance)
            .then_with(|| a.agent.cmp(&b.agent))
    });
    Ok(ranked)
}

/// Writes profiles as line-delimited JSON, one agent per line in agent order.
pub fn write_profiles<W: Write>(
    profiles: &BTreeMap<String, PlaystyleProfile>,
    mut writer: W,
) -> std::io::Result<()> {
    #[derive(Serialize)]
    struct Record<'a> {
        agent: &'a str,
        incentives: &'a BTreeMap<MechanicId, f64>,
        trace_count: usize,
    }
    for p in profiles.values() {
        let record = Record {
            agent: &p.agent,
            incentives: &p.incentives,
            trace_count: p.trace_count,
        };
        serde_json::to_writer(&mut writer, &record)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()
}

pub fn read_profiles<R: BufRead>(
    reader: R,
) -> Result<BTreeMap<String, PlaystyleProfile>, ReportError> {
    let mut out = BTreeMap::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let profile: PlaystyleProfile =
            serde_json::from_str(&line).map_err(|e| ReportError::MalformedProfile {
                line: i + 1,
                reason: e.to_string(),
            })?;
        if out.insert(profile.agent.clone(), profile).is_some() {
            return Err(ReportError::MalformedProfile {
                line: i + 1,
                reason: "duplicate agent".into(),
            });
        }
    }
    Ok(out)
}

pub const CSV_HEADER: &str =
    "game,level,agent,mechanic,systemic,agential,d_win,s_win,d_agent,s_agent,quadrant,n_pooled,n_win,n_agent";

/// Six decimals, with negative zero printed as zero.
fn fixed6(x: f64) -> String {
    let s = format!("{x:.6}");
    if s == "-0.000000" {
        "0.000000".to_string()
    } else {
        s
    }
}

pub fn write_csv<W: Write>(chart: &AlignmentChart, mut writer: W) -> std::io::Result<()> {
    writeln!(writer, "{CSV_HEADER}")?;
    for p in &chart.points {
        writeln!(
            writer,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            chart.game_id,
            chart.level_id,
            p.agent_id,
            p.mechanic,
            fixed6(p.systemic),
            fixed6(p.agential),
            fixed6(p.d_win),
            p.s_win,
            fixed6(p.d_agent),
            p.s_agent,
            quadrant(p.systemic, p.agential, DEFAULT_AXIS_EPSILON),
            p.n_traces_pooled,
            p.n_traces_win,
            p.n_traces_agent,
        )?;
    }
    writer.flush()
}

pub fn csv_string(chart: &AlignmentChart) -> String {
    let mut buf = Vec::new();
    write_csv(chart, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("CSV is UTF-8")
}

/// A row read back from an alignment CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub game: String,
    pub level: String,
    pub agent: String,
    pub mechanic: String,
    pub systemic: f64,
    pub agential: f64,
    pub d_win: f64,
    pub s_win: i8,
    pub d_agent: f64,
    pub s_agent: i8,
    pub quadrant: QuadrantLabel,
    pub n_pooled: usize,
    pub n_win: usize,
    pub n_agent: usize,
}

pub fn read_csv<R: BufRead>(reader: R) -> Result<Vec<CsvRow>, ReportError> {
    let mut rows = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        if lineno == 1 {
            if line != CSV_HEADER {
                return Err(ReportError::MalformedCsv {
                    line: 1,
                    reason: "unexpected header".into(),
                });
            }
            continue;
        }
        let bad = |reason: String| ReportError::MalformedCsv {
            line: lineno,
            reason,
        };
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 14 {
            return Err(bad(format!("expected 14 fields, found {}", f.len())));
        }
        fn num<T: FromStr>(s: &str, line: usize) -> Result<T, ReportError> {
            s.parse().map_err(|_| ReportError::MalformedCsv {
                line,
                reason: format!("bad number `{s}`"),
            })
        }
        rows.push(CsvRow {
            game: f[0].into(),
            level: f[1].into(),
            agent: f[2].into(),
            mechanic: f[3].into(),
            systemic: num(f[4], lineno)?,
            agential: num(f[5], lineno)?,
            d_win: num(f[6], lineno)?,
            s_win: num(f[7], lineno)?,
            d_agent: num(f[8], lineno)?,
            s_agent: num(f[9], lineno)?,
            quadrant: f[10]
                .parse()
                .map_err(|q| bad(format!("bad quadrant `{q}`")))?,
            n_pooled: num(f[11], lineno)?,
            n_win: num(f[12], lineno)?,
            n_agent: num(f[13], lineno)?,
        });
    }
    Ok(rows)
}

/// Canvas size and palette of the SVG chart.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartStyle {
    pub width: u32,
    pub height: u32,
    pub margin: u32,
    /// Q1, Q2, Q3, Q4 background tints.
    pub quadrant_colors: [&'static str; 4],
    pub agent_colors: Vec<&'static str>,
    pub font_size: u32,
}

impl Default for ChartStyle {
    fn default() -> Self {
        ChartStyle {
            width: 720,
            height: 720,
            margin: 70,
            quadrant_colors: ["#d9f2d9", "#fbf3c8", "#f7d4d4", "#d6e4f7"],
            agent_colors: vec![
                "#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#a6761d", "#666666",
                "#e6ab02",
            ],
            font_size: 11,
        }
    }
}

impl ChartStyle {
    pub fn validate(&self) -> Result<(), ReportError> {
        if self.width < 200 || self.height < 200 {
            return Err(ReportError::InvalidStyle(format!(
                "canvas {}x{} is smaller than 200x200",
                self.width, self.height
            )));
        }
        if 2 * self.margin + 50 > self.width.min(self.height) {
            return Err(ReportError::InvalidStyle(
                "margin leaves no room for the plot".into(),
            ));
        }
        if self.agent_colors.is_empty() {
            return Err(ReportError::InvalidStyle("no agent colors".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MarkerShape {
    Circle,
    Square,
    Triangle,
    Diamond,
    Cross,
    InvertedTriangle,
}

impl MarkerShape {
    const CYCLE: [MarkerShape; 6] = [
        MarkerShape::Circle,
        MarkerShape::Square,
        MarkerShape::Triangle,
        MarkerShape::Diamond,
        MarkerShape::Cross,
        MarkerShape::InvertedTriangle,
    ];

    pub fn for_agent(index: usize) -> MarkerShape {
        Self::CYCLE[index % Self::CYCLE.len()]
    }

    fn svg(self, cx: f64, cy: f64, r: f64, color: &str, class: &str) -> String {
        let (cx, cy) = (round2(cx), round2(cy));
        let attrs =
            format!(r##"class="{class}" fill="{color}" stroke="#222222" stroke-width="0.8""##);
        match self {
            MarkerShape::Circle => format!(r#"<circle {attrs} cx="{cx}" cy="{cy}" r="{r}"/>"#),
            MarkerShape::Square => format!(
                r#"<rect {attrs} x="{}" y="{}" width="{}" height="{}"/>"#,
                round2(cx - r),
                round2(cy - r),
                2.0 * r,
                2.0 * r
            ),
            MarkerShape::Triangle => {
                polygon(&attrs, &[(cx, cy - r), (cx + r, cy + r), (cx - r, cy + r)])
            }
            MarkerShape::InvertedTriangle => {
                polygon(&attrs, &[(cx - r, cy - r), (cx + r, cy - r), (cx, cy + r)])
            }
            MarkerShape::Diamond => polygon(
                &attrs,
                &[(cx, cy - r), (cx + r, cy), (cx, cy + r), (cx - r, cy)],
            ),
            MarkerShape::Cross => {
                let t = r / 3.0;
                polygon(
                    &attrs,
                    &[
                        (cx - t, cy - r),
                        (cx + t, cy - r),
                        (cx + t, cy - t),
                        (cx + r, cy - t),
                        (cx + r, cy + t),
                        (cx + t, cy + t),
                        (cx + t, cy + r),
                        (cx - t, cy + r),
                        (cx - t, cy + t),
                        (cx - r, cy + t),
                        (cx - r, cy - t),
                        (cx - t, cy - t),
                    ],
                )
            }
        }
    }
}

fn polygon(attrs: &str, pts: &[(f64, f64)]) -> String {
    let pts: Vec<String> = pts
        .iter()
        .map(|(x, y)| format!("{},{}", round2(*x), round2(*y)))
        .collect();
    format!(r#"<polygon {attrs} points="{}"/>"#, pts.join(" "))
}

fn round2(x: f64) -> f64 {
    let r = (x * 100.0).round() / 100.0;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Maps chart coordinates in `[-1, 1]^2` to canvas pixels.
#[derive(Debug, Clone, Copy)]
pub struct PlotFrame {
    pub left: f64,
    pub top: f64,
    pub size: f64,
}

impl PlotFrame {
    /// Largest square that fits inside the margins, centered on the canvas.
    pub fn new(style: &ChartStyle) -> Self {
        let (w, h, m) = (
            f64::from(style.width),
            f64::from(style.height),
            f64::from(style.margin),
        );
        let size = (w - 2.0 * m).min(h - 2.0 * m);
        PlotFrame {
            left: (w - size) / 2.0,
            top: (h - size) / 2.0,
            size,
        }
    }

    pub fn x(&self, systemic: f64) -> f64 {
        self.left + (systemic.clamp(-1.0, 1.0) + 1.0) / 2.0 * self.size
    }

    pub fn y(&self, agential: f64) -> f64 {
        self.top + (1.0 - agential.clamp(-1.0, 1.0)) / 2.0 * self.size
    }
}

const MARKER_RADIUS: f64 = 5.0;

/// Renders the chart as a standalone SVG document.
///
/// Markers carry `class="marker"`; legend swatches use `class="legend-marker"`.
pub fn render_svg(chart: &AlignmentChart, style: &ChartStyle) -> Result<String, ReportError> {
    style.validate()?;
    let frame = PlotFrame::new(style);
    let (w, h) = (style.width, style.height);
    let fs = style.font_size;
    let (l, t, s) = (round2(frame.left), round2(frame.top), round2(frame.size));
    let (cx, cy) = (round2(frame.x(0.0)), round2(frame.y(0.0)));
    let half = round2(frame.size / 2.0);
    let mut out = String::new();
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="{fs}">"#
    );
    let _ = writeln!(
        out,
        "<title>Mechanic alignment: {} {}</title>",
        escape(&chart.game_id),
        escape(&chart.level_id)
    );
    let _ = writeln!(
        out,
        r##"<rect x="0" y="0" width="{w}" height="{h}" fill="#ffffff"/>"##
    );

    // Quadrant tints: Q1 top-right, Q2 top-left, Q3 bottom-left, Q4 bottom-right.
    let [q1, q2, q3, q4] = style.quadrant_colors;
    for (x, y, color, name) in [
        (cx, t, q1, "Q1"),
        (l, t, q2, "Q2"),
        (l, cy, q3, "Q3"),
        (cx, cy, q4, "Q4"),
    ] {
        let _ = writeln!(
            out,
            r#"<rect class="quadrant" data-quadrant="{name}" x="{x}" y="{y}" width="{half}" height="{half}" fill="{color}"/>"#
        );
    }
    let _ = writeln!(
        out,
        r##"<rect x="{l}" y="{t}" width="{s}" height="{s}" fill="none" stroke="#444444"/>"##
    );

    // Grid ticks at multiples of 0.5.
    for i in -2..=2 {
        let v = f64::from(i) * 0.5;
        let (px, py) = (round2(frame.x(v)), round2(frame.y(v)));
        let _ = writeln!(
            out,
            r##"<text x="{px}" y="{}" text-anchor="middle" fill="#444444">{v}</text>"##,
            round2(frame.top + frame.size + f64::from(fs) + 6.0)
        );
        let _ = writeln!(
            out,
            r##"<text x="{}" y="{}" text-anchor="end" fill="#444444">{v}</text>"##,
            round2(frame.left - 6.0),
            round2(py + f64::from(fs) / 3.0)
        );
    }

    let _ = writeln!(
        out,
        r##"<line class="axis" x1="{l}" y1="{cy}" x2="{}" y2="{cy}" stroke="#222222" stroke-width="1.2"/>"##,
        round2(frame.left + frame.size)
    );
    let _ = writeln!(
        out,
        r##"<line class="axis" x1="{cx}" y1="{t}" x2="{cx}" y2="{}" stroke="#222222" stroke-width="1.2"/>"##,
        round2(frame.top + frame.size)
    );
    let _ = writeln!(
        out,
        r##"<line class="identity" x1="{l}" y1="{}" x2="{}" y2="{t}" stroke="#555555" stroke-dasharray="6,4"/>"##,
        round2(frame.top + frame.size),
        round2(frame.left + frame.size)
    );
    let _ = writeln!(
        out,
        r#"<text x="{cx}" y="{}" text-anchor="middle" font-size="{}">Systemic reward (E)</text>"#,
        round2(frame.top + frame.size + 2.0 * f64::from(fs) + 14.0),
        fs + 2
    );
    let ylabel_x = round2(frame.left - 3.0 * f64::from(fs) - 10.0);
    let _ = writeln!(
        out,
        r#"<text x="{ylabel_x}" y="{cy}" text-anchor="middle" font-size="{}" transform="rotate(-90 {ylabel_x} {cy})">Agential incentive (I)</text>"#,
        fs + 2
    );

    let agent_index: BTreeMap<&str, usize> = chart
        .agents
        .iter()
        .enumerate()
        .map(|(i, a)| (a.as_str(), i))
        .collect();
    let color_of = |i: usize| style.agent_colors[i % style.agent_colors.len()];

    let _ = writeln!(out, r#"<g class="points">"#);
    let line_height = f64::from(fs) + 1.0;
    let mut placed: Vec<(f64, f64, f64)> = Vec::new();
    for p in &chart.points {
        let i = agent_index.get(p.agent_id.as_str()).copied().unwrap_or(0);
        let (px, py) = (frame.x(p.systemic), frame.y(p.agential));
        let _ = writeln!(
            out,
            "{}",
            MarkerShape::for_agent(i).svg(px, py, MARKER_RADIUS, color_of(i), "marker")
        );

        // Labels go right of the marker (left near the right edge) and are
        // pushed down until they clear earlier labels.
        let label = escape(p.mechanic.as_str());
        let width = label.chars().count() as f64 * f64::from(fs) * 0.6;
        let right_side = px + width + 10.0 < frame.left + frame.size;
        let (lx, anchor) = if right_side {
            (px + MARKER_RADIUS + 3.0, "start")
        } else {
            (px - MARKER_RADIUS - 3.0, "end")
        };
        let x0 = if right_side { lx } else { lx - width };
        let mut ly = py + f64::from(fs) / 3.0;
        for _ in 0..8 {
            let clash = placed.iter().any(|&(ox, oy, ow)| {
                (oy - ly).abs() < line_height && x0 < ox + ow && ox < x0 + width
            });
            if !clash {
                break;
            }
            ly += line_height;
        }
        placed.push((x0, ly, width));
        let _ = writeln!(
            out,
            r##"<text class="label" x="{}" y="{}" text-anchor="{anchor}" fill="#222222">{label}</text>"##,
            round2(lx),
            round2(ly)
        );
    }
    let _ = writeln!(out, "</g>");

    // Legend along the top margin.
    let _ = writeln!(out, r#"<g class="legend">"#);
    let mut x = frame.left;
    let y = (frame.top / 2.0).max(f64::from(fs));
    for (i, agent) in chart.agents.iter().enumerate() {
        let _ = writeln!(
            out,
            "{}",
            MarkerShape::for_agent(i).svg(
                x + MARKER_RADIUS,
                y,
                MARKER_RADIUS,
                color_of(i),
                "legend-marker"
            )
        );
        let name = escape(agent);
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}">{name}</text>"#,
            round2(x + 2.0 * MARKER_RADIUS + 4.0),
            round2(y + f64::from(fs) / 3.0)
        );
        x += 2.0 * MARKER_RADIUS + 14.0 + name.chars().count() as f64 * f64::from(fs) * 0.6;
    }
    let _ = writeln!(out, "</g>");
    let _ = writeln!(out, "</svg>");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimation::{compute_chart, AlignmentPoint, ChartOptions};
    use crate::trace::{Outcome, Playtrace};

    fn point(mechanic: &str, agent: &str, e: f64, i: f64) -> AlignmentPoint {
        AlignmentPoint {
            mechanic: MechanicId::new(mechanic).unwrap(),
            agent_id: agent.into(),
            systemic: e,
            agential: i,
            d_win: e.abs(),
            s_win: e.signum() as i8,
            d_agent: i.abs(),
            s_agent: i.signum() as i8,
            mean_pooled: 0.0,
            mean_win: 0.0,
            mean_agent: 0.0,
            n_traces_pooled: 4,
            n_traces_win: 2,
            n_traces_agent: 2,
        }
    }

    fn chart(points: Vec<AlignmentPoint>) -> AlignmentChart {
        let mut agents: Vec<String> = points.iter().map(|p| p.agent_id.clone()).collect();
        agents.sort();
        agents.dedup();
        let mut universe: Vec<MechanicId> = points.iter().map(|p| p.mechanic.clone()).collect();
        universe.sort();
        universe.dedup();
        AlignmentChart {
            game_id: "g".into(),
            level_id: "l".into(),
            points,
            mechanic_universe: universe,
            agents,
            corpus_size: 4,
            no_win_fallback: false,
        }
    }

    fn two_agent_corpus() -> Corpus {
        let m = MechanicId::new("m").unwrap();
        let rows = [
            ("A", Outcome::Win, 1),
            ("A", Outcome::Win, 1),
            ("B", Outcome::Loss, 0),
            ("B", Outcome::Loss, 0),
        ];
        let traces = rows
            .iter()
            .enumerate()
            .map(|(i, (a, o, c))| Playtrace {
                game: "g".into(),
                level: "l".into(),
                agent: a.to_string(),
                episode: i as u64,
                seed: 0,
                outcome: *o,
                ticks: 3,
                counts: [(m.clone(), *c)].into_iter().collect(),
                score: None,
            })
            .collect();
        Corpus::new(traces, []).unwrap()
    }

    #[test]
    fn quadrant_examples() {
        use QuadrantLabel::*;
        assert_eq!(quadrant(0.5, 0.5, 1e-9), Q1_aligned_positive);
        assert_eq!(quadrant(0.0, 0.0, 1e-9), origin_neutral);
        assert_eq!(quadrant(0.3, -0.2, 1e-9), Q4_misaligned_agent_negative);
        assert_eq!(quadrant(-0.3, 0.2, 1e-9), Q2_misaligned_agent_positive);
        assert_eq!(quadrant(-0.3, -0.2, 1e-9), Q3_aligned_negative);
        assert_eq!(quadrant(1e-10, 0.4, 1e-9), axis_agential);
        assert_eq!(quadrant(0.4, -1e-10, 1e-9), axis_systemic);
        assert_eq!(quadrant(0.05, 0.05, 0.1), origin_neutral);
    }

    #[test]
    fn misalignment_examples() {
        assert_eq!(misalignment(0.4, 0.4), 0.0);
        assert_eq!(misalignment(1.0, -1.0), 2.0);
        assert_eq!(misalignment(0.5, 0.25), 0.25);
    }

    #[test]
    fn profiles_single_agent_are_zero() {
        let c = two_agent_corpus()
            .filter(&Condition::agent("A"))
            .unwrap()
            .to_corpus();
        let profiles = build_profiles(&c).unwrap();
        assert_eq!(profiles.len(), 1);
        assert!(profiles["A"].incentives.values().all(|&v| v == 0.0));
        assert!(matches!(
            build_profiles(&Corpus::empty()),
            Err(ReportError::EmptyCorpus)
        ));
    }

    #[test]
    fn profiles_two_agents() {
        let profiles = build_profiles(&two_agent_corpus()).unwrap();
        assert_eq!(
            profiles["A"]
                .incentives
                .values()
                .copied()
                .collect::<Vec<_>>(),
            vec![0.5]
        );
        assert_eq!(
            profiles["B"]
                .incentives
                .values()
                .copied()
                .collect::<Vec<_>>(),
            vec![-0.5]
        );
        assert_eq!(profiles["A"].trace_count, 2);
    }

    #[test]
    fn profile_store_round_trip() {
        let profiles = build_profiles(&two_agent_corpus()).unwrap();
        let mut buf = Vec::new();
        write_profiles(&profiles, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            r#"{"agent":"A","incentives":{"m":0.5},"trace_count":2}"#
        );
        assert_eq!(read_profiles(&buf[..]).unwrap(), profiles);
        let dup = format!("{text}{}\n", text.lines().next().unwrap());
        assert!(matches!(
            read_profiles(dup.as_bytes()),
            Err(ReportError::MalformedProfile { line: 3, .. })
        ));
    }

    #[test]
    fn classify_errors() {
        let reference = two_agent_corpus();
        let profiles = build_profiles(&reference).unwrap();
        let same_agent = reference
            .filter(&Condition::agent("A"))
            .unwrap()
            .to_corpus();
        assert_eq!(
            classify(&profiles, &same_agent, &reference, Metric::L1),
            Err(ReportError::AgentCollision("A".into()))
        );
        assert_eq!(
            classify(&profiles, &reference, &reference, Metric::L1),
            Err(ReportError::MixedUnknownAgents(vec![
                "A".into(),
                "B".into()
            ]))
        );
        assert_eq!(
            classify(&profiles, &Corpus::empty(), &reference, Metric::L1),
            Err(ReportError::EmptyCorpus)
        );
        assert_eq!(
            classify(&BTreeMap::new(), &same_agent, &reference, Metric::L1),
            Err(ReportError::NoProfiles)
        );
    }

    #[test]
    fn classify_relabeled_copy_ranks_source_first() {
        let reference = two_agent_corpus();
        let profiles = build_profiles(&reference).unwrap();
        let mut unknown: Vec<Playtrace> = reference
            .filter(&Condition::agent("B"))
            .unwrap()
            .traces()
            .cloned()
            .collect();
        for t in &mut unknown {
            t.agent = "unknown".into();
        }
        let unknown = Corpus::new(unknown, []).unwrap();
        for metric in [Metric::L1, Metric::L2] {
            let ranked = classify(&profiles, &unknown, &reference, metric).unwrap();
            assert_eq!(ranked[0].agent, "B");
            assert!(ranked[0].distance < ranked[1].distance);
        }
    }

    #[test]
    fn metric_parse_and_distance() {
        assert_eq!("l2".parse::<Metric>().unwrap(), Metric::L2);
        assert!("l3".parse::<Metric>().is_err());
        let pairs = || [(0.0, 3.0), (4.0, 0.0)].into_iter();
        assert_eq!(Metric::L1.distance(pairs()), 7.0);
        assert_eq!(Metric::L2.distance(pairs()), 5.0);
    }

    #[test]
    fn csv_cases() {
        assert_eq!(csv_string(&chart(vec![])), format!("{CSV_HEADER}\n"));
        let mut pts = Vec::new();
        for m in ["a", "b"] {
            for ag in ["x", "y", "z"] {
                pts.push(point(m, ag, 0.25, -0.125));
            }
        }
        let c = chart(pts);
        let text = csv_string(&c);
        assert_eq!(text.lines().count(), 7);
        assert_eq!(text, csv_string(&c));
        assert_eq!(
            text.lines().nth(1).unwrap(),
            "g,l,x,a,0.250000,-0.125000,0.250000,1,0.125000,-1,Q4_misaligned_agent_negative,4,2,2"
        );
    }

    #[test]
    fn csv_negative_zero() {
        let c = chart(vec![point("a", "x", -0.0, -1e-9)]);
        let row = csv_string(&c);
        assert!(row.contains(",0.000000,0.000000,"), "{row}");
    }

    #[test]
    fn csv_round_trip_from_real_chart() {
        let c = compute_chart(&two_agent_corpus(), None, ChartOptions::default()).unwrap();
        let rows = read_csv(csv_string(&c).as_bytes()).unwrap();
        assert_eq!(rows.len(), c.points.len());
        for (r, p) in rows.iter().zip(&c.points) {
            assert!((r.systemic - p.systemic).abs() <= 5e-7);
            assert!((r.agential - p.agential).abs() <= 5e-7);
            assert_eq!(
                r.quadrant,
                quadrant(p.systemic, p.agential, DEFAULT_AXIS_EPSILON)
            );
        }
        assert!(read_csv("nope\n".as_bytes()).is_err());
    }

    #[test]
    fn svg_origin_marker_at_center() {
        let style = ChartStyle::default();
        let svg = render_svg(&chart(vec![point("m", "a", 0.0, 0.0)]), &style).unwrap();
        assert_eq!(svg.matches(r#"class="marker""#).count(), 1);
        assert!(svg.contains(r#"cx="360" cy="360""#), "{svg}");
        assert!(svg.starts_with("<?xml"));
        assert!(svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn svg_corner_marker() {
        let style = ChartStyle::default();
        let frame = PlotFrame::new(&style);
        let svg = render_svg(&chart(vec![point("m", "a", 1.0, 1.0)]), &style).unwrap();
        let (x, y) = (frame.left + frame.size, frame.top);
        assert!(svg.contains(&format!(r#"cx="{x}" cy="{y}""#)), "{svg}");
    }

    #[test]
    fn svg_is_deterministic_and_complete() {
        let c = chart(vec![
            point("m<1>", "a", 0.5, -0.5),
            point("n", "b", -0.2, 0.7),
        ]);
        let style = ChartStyle::default();
        let a = render_svg(&c, &style).unwrap();
        assert_eq!(a, render_svg(&c, &style).unwrap());
        assert_eq!(a.matches(r#"class="quadrant""#).count(), 4);
        assert_eq!(a.matches(r#"class="legend-marker""#).count(), 2);
        assert!(a.contains("m&lt;1&gt;"));
        assert!(a.contains(r#"class="identity""#));
        assert!(a.contains("<polygon") || a.contains("<rect class=\"marker\""));
    }

    #[test]
    fn svg_style_validation() {
        let small = ChartStyle {
            width: 150,
            ..ChartStyle::default()
        };
        assert!(matches!(
            render_svg(&chart(vec![]), &small),
            Err(ReportError::InvalidStyle(_))
        ));
    }
}
