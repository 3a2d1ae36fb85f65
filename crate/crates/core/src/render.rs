//! Deterministic SVG boxplots.
//!
//! Every coordinate is written with two decimals so identical inputs give
//! byte-identical documents. Within a panel the value → pixel map is the
//! affine [`AxisMap`].

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::defaults;
use crate::error::{Error, Result};
use crate::rle::BoxplotStats;

const MARGIN_LEFT: f64 = 64.0;
const MARGIN_RIGHT: f64 = 16.0;
const MARGIN_TOP: f64 = 44.0;
const MARGIN_BOTTOM: f64 = 72.0;
const TITLE_BAND: f64 = 32.0;
const UNGROUPED_FILL: &str = "#d9d9d9";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutlierGlyph {
    #[default]
    Circle,
    Cross,
    Hidden,
}

/// Chooses the automatic y range: symmetric about zero for RLE plots,
/// data-driven for raw-value boxplots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PlotKind {
    #[default]
    Rle,
    Standard,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderSpec {
    pub title: String,
    pub width: u32,
    pub height: u32,
    /// Explicit group → colour assignments; other groups take the default palette.
    pub group_palette: BTreeMap<String, String>,
    pub y_limits: Option<(f64, f64)>,
    pub zero_line: bool,
    pub outlier_glyph: OutlierGlyph,
    pub box_width_fraction: f64,
    pub kind: PlotKind,
}

impl Default for RenderSpec {
    fn default() -> Self {
        RenderSpec {
            title: String::new(),
            width: defaults::RENDER_WIDTH,
            height: defaults::RENDER_HEIGHT,
            group_palette: BTreeMap::new(),
            y_limits: None,
            zero_line: true,
            outlier_glyph: OutlierGlyph::Circle,
            box_width_fraction: defaults::BOX_WIDTH_FRACTION,
            kind: PlotKind::Rle,
        }
    }
}

impl RenderSpec {
    pub fn rle(title: impl Into<String>) -> Self {
        RenderSpec {
            title: title.into(),
            ..Default::default()
        }
    }

    pub fn standard(title: impl Into<String>) -> Self {
        RenderSpec {
            title: title.into(),
            zero_line: false,
            kind: PlotKind::Standard,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if let Some((lo, hi)) = self.y_limits {
            if !lo.is_finite() || !hi.is_finite() || lo >= hi {
                return bad(format!("y limits must satisfy low < high, got ({lo}, {hi})"));
            }
        }
        if !(self.box_width_fraction > 0.0 && self.box_width_fraction <= 1.0) {
            return bad(format!(
                "box width fraction must be in (0, 1], got {}",
                self.box_width_fraction
            ));
        }
        if self.width < 160 || self.height < 160 {
            return bad(format!(
                "figure must be at least 160×160 px, got {}×{}",
                self.width, self.height
            ));
        }
        Ok(())
    }
}

/// Affine value ↔ pixel map for the y axis of one panel (panel-local pixels).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisMap {
    pub lo: f64,
    pub hi: f64,
    pub top: f64,
    pub bottom: f64,
}

impl AxisMap {
    pub fn to_px(&self, v: f64) -> f64 {
        self.top + (self.hi - v) / (self.hi - self.lo) * (self.bottom - self.top)
    }

    pub fn to_value(&self, px: f64) -> f64 {
        self.hi - (px - self.top) / (self.bottom - self.top) * (self.hi - self.lo)
    }

    /// Data units per pixel.
    pub fn resolution(&self) -> f64 {
        (self.hi - self.lo) / (self.bottom - self.top)
    }

    fn clamp_px(&self, v: f64) -> f64 {
        self.to_px(v.clamp(self.lo, self.hi))
    }
}

fn extremes(s: &BoxplotStats) -> (f64, f64) {
    s.outliers
        .iter()
        .fold((s.whisker_low.min(s.q1), s.whisker_high.max(s.q3)), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        })
}

/// Automatic y limits for one or more sets of summaries.
pub fn auto_limits<'a>(summaries: impl IntoIterator<Item = &'a BoxplotStats>, kind: PlotKind) -> (f64, f64) {
    let (lo, hi) = summaries
        .into_iter()
        .map(extremes)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), (lo, hi)| (a.min(lo), b.max(hi)));
    match kind {
        PlotKind::Rle => {
            let reach = lo.abs().max(hi.abs()) * defaults::Y_PADDING;
            if reach > 0.0 {
                (-reach, reach)
            } else {
                (-1.0, 1.0)
            }
        }
        PlotKind::Standard => {
            let pad = (hi - lo) * (defaults::Y_PADDING - 1.0);
            if pad > 0.0 {
                (lo - pad, hi + pad)
            } else {
                (lo - 1.0, hi + 1.0)
            }
        }
    }
}

/// The axis map `render_boxplots` uses for these inputs.
pub fn axis_map(summaries: &[BoxplotStats], spec: &RenderSpec) -> AxisMap {
    let (lo, hi) = spec.y_limits.unwrap_or_else(|| auto_limits(summaries, spec.kind));
    AxisMap {
        lo,
        hi,
        top: MARGIN_TOP,
        bottom: f64::from(spec.height) - MARGIN_BOTTOM,
    }
}

/// Rows and columns of a small-multiples grid: as near square as possible,
/// never taller than wide.
pub fn grid_shape(panels: usize) -> (usize, usize) {
    let cols = (1..=panels.max(1)).find(|c| c * c >= panels).unwrap_or(1);
    (panels.max(1).div_ceil(cols), cols)
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(c),
        }
    }
    out
}

struct Palette {
    colours: Vec<(String, String)>,
}

impl Palette {
    fn new<'a>(summaries: impl IntoIterator<Item = &'a BoxplotStats>, spec: &RenderSpec) -> Self {
        let mut colours: Vec<(String, String)> = Vec::new();
        for s in summaries {
            if let Some(g) = &s.group {
                if colours.iter().all(|(k, _)| k != g) {
                    let fill = spec
                        .group_palette
                        .get(g)
                        .cloned()
                        .unwrap_or_else(|| defaults::PALETTE[colours.len() % defaults::PALETTE.len()].to_string());
                    colours.push((g.clone(), fill));
                }
            }
        }
        Palette { colours }
    }

    fn fill(&self, group: Option<&str>) -> &str {
        group
            .and_then(|g| self.colours.iter().find(|(k, _)| k == g))
            .map_or(UNGROUPED_FILL, |(_, c)| c.as_str())
    }
}

fn nice_step(range: f64, target: f64) -> f64 {
    let raw = range / target;
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

fn ticks(lo: f64, hi: f64) -> (Vec<f64>, usize) {
    let step = nice_step(hi - lo, 5.0);
    let decimals = (-step.log10().floor()).max(0.0) as usize;
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    let values = (first..=last)
        .map(|k| {
            let v = k as f64 * step;
            if v.abs() < step * 1e-9 {
                0.0
            } else {
                v
            }
        })
        .collect();
    (values, decimals)
}

fn check_summaries(summaries: &[BoxplotStats]) -> Result<()> {
    if summaries.is_empty() {
        return Err(Error::EmptyInput("no boxplot summaries to render"));
    }
    summaries.iter().try_for_each(BoxplotStats::check_finite)
}

fn open_svg(out: &mut String, width: f64, height: f64) {
    let _ = writeln!(
        out,
        r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif">
<rect x="0" y="0" width="{width:.0}" height="{height:.0}" fill="white"/>"#
    );
}

/// One box-whisker glyph per sample, in input order.
pub fn render_boxplots(summaries: &[BoxplotStats], spec: &RenderSpec) -> Result<String> {
    spec.validate()?;
    check_summaries(summaries)?;
    let palette = Palette::new(summaries, spec);
    let axis = axis_map(summaries, spec);
    let mut out = String::new();
    open_svg(&mut out, f64::from(spec.width), f64::from(spec.height));
    draw_panel(&mut out, (0.0, 0.0), &spec.title, summaries, &axis, &palette, spec);
    out.push_str("</svg>\n");
    Ok(out)
}

/// Small-multiples grid; each panel is `spec.width × spec.height`. Panels
/// share the y axis when `spec.y_limits` is set and scale independently
/// otherwise.
pub fn render_panel(series: &[(String, Vec<BoxplotStats>)], spec: &RenderSpec) -> Result<String> {
    spec.validate()?;
    if series.is_empty() {
        return Err(Error::EmptyInput("no series to render"));
    }
    for (_, s) in series {
        check_summaries(s)?;
    }
    let palette = Palette::new(series.iter().flat_map(|(_, s)| s), spec);
    let (rows, cols) = grid_shape(series.len());
    let (w, h) = (f64::from(spec.width), f64::from(spec.height));
    let mut out = String::new();
    open_svg(&mut out, w * cols as f64, TITLE_BAND + h * rows as f64);
    let _ = writeln!(
        out,
        r#"<text class="title" x="{:.2}" y="22.00" font-size="16" text-anchor="middle">{}</text>"#,
        w * cols as f64 / 2.0,
        escape(&spec.title)
    );
    for (k, (label, summaries)) in series.iter().enumerate() {
        let (r, c) = (k / cols, k % cols);
        let axis = axis_map(summaries, spec);
        draw_panel(
            &mut out,
            (c as f64 * w, TITLE_BAND + r as f64 * h),
            label,
            summaries,
            &axis,
            &palette,
            spec,
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}

fn draw_panel(
    out: &mut String,
    origin: (f64, f64),
    heading: &str,
    summaries: &[BoxplotStats],
    axis: &AxisMap,
    palette: &Palette,
    spec: &RenderSpec,
) {
    let w = f64::from(spec.width);
    let (left, right) = (MARGIN_LEFT, w - MARGIN_RIGHT);
    let _ = writeln!(
        out,
        r#"<g class="panel" transform="translate({:.2},{:.2})">"#,
        origin.0, origin.1
    );
    let _ = writeln!(
        out,
        r#"<text class="heading" x="{:.2}" y="24.00" font-size="14" text-anchor="middle">{}</text>"#,
        (left + right) / 2.0,
        escape(heading)
    );

    // y axis with ticks
    let (tick_values, decimals) = ticks(axis.lo, axis.hi);
    let _ = writeln!(
        out,
        r##"<line class="axis" x1="{left:.2}" y1="{:.2}" x2="{left:.2}" y2="{:.2}" stroke="#333" stroke-width="1"/>"##,
        axis.top, axis.bottom
    );
    for t in tick_values {
        let y = axis.to_px(t);
        let _ = writeln!(
            out,
            r##"<line class="tick" x1="{:.2}" y1="{y:.2}" x2="{left:.2}" y2="{y:.2}" stroke="#333" stroke-width="1"/>
<text class="tick-label" x="{:.2}" y="{:.2}" font-size="10" text-anchor="end">{t:.decimals$}</text>"##,
            left - 4.0,
            left - 6.0,
            y + 3.5
        );
    }
    if spec.zero_line && axis.lo < 0.0 && axis.hi > 0.0 {
        let y = axis.to_px(0.0);
        let _ = writeln!(
            out,
            r##"<line class="zero" x1="{left:.2}" y1="{y:.2}" x2="{right:.2}" y2="{y:.2}" stroke="#888" stroke-width="1" stroke-dasharray="4 3"/>"##
        );
    }

    let slot = (right - left) / summaries.len() as f64;
    let half_box = spec.box_width_fraction * slot / 2.0;
    let half_cap = half_box / 2.0;
    for (i, s) in summaries.iter().enumerate() {
        let x = left + (i as f64 + 0.5) * slot;
        let fill = palette.fill(s.group.as_deref());
        let (y_q3, y_q1) = (axis.clamp_px(s.q3), axis.clamp_px(s.q1));
        let (y_hi, y_lo) = (axis.clamp_px(s.whisker_high), axis.clamp_px(s.whisker_low));
        let y_med = axis.clamp_px(s.median);
        let _ = writeln!(out, r#"<g class="sample" data-sample="{}">"#, escape(&s.sample_id));
        let _ = writeln!(
            out,
            r##"<line class="whisker" x1="{x:.2}" y1="{y_q3:.2}" x2="{x:.2}" y2="{y_hi:.2}" stroke="#333" stroke-width="1"/>
<line class="whisker" x1="{x:.2}" y1="{y_q1:.2}" x2="{x:.2}" y2="{y_lo:.2}" stroke="#333" stroke-width="1"/>
<line class="cap" x1="{:.2}" y1="{y_hi:.2}" x2="{:.2}" y2="{y_hi:.2}" stroke="#333" stroke-width="1"/>
<line class="cap" x1="{:.2}" y1="{y_lo:.2}" x2="{:.2}" y2="{y_lo:.2}" stroke="#333" stroke-width="1"/>
<rect class="box" x="{:.2}" y="{y_q3:.2}" width="{:.2}" height="{:.2}" fill="{fill}" stroke="#333" stroke-width="1"/>
<line class="median" x1="{:.2}" y1="{y_med:.2}" x2="{:.2}" y2="{y_med:.2}" stroke="#000" stroke-width="2"/>"##,
            x - half_cap,
            x + half_cap,
            x - half_cap,
            x + half_cap,
            x - half_box,
            2.0 * half_box,
            y_q1 - y_q3,
            x - half_box,
            x + half_box,
        );
        let (mut above, mut below) = (false, false);
        for &v in &s.outliers {
            if v > axis.hi {
                above = true;
            } else if v < axis.lo {
                below = true;
            } else {
                draw_outlier(out, x, axis.to_px(v), spec.outlier_glyph);
            }
        }
        // Triangles at the plot edge stand in for clipped outliers.
        if above {
            let y = axis.top;
            let _ = writeln!(
                out,
                r##"<path class="overflow" d="M {:.2} {:.2} L {:.2} {:.2} L {:.2} {:.2} Z" fill="#c00"/>"##,
                x - 4.0,
                y + 6.0,
                x + 4.0,
                y + 6.0,
                x,
                y
            );
        }
        if below {
            let y = axis.bottom;
            let _ = writeln!(
                out,
                r##"<path class="overflow" d="M {:.2} {:.2} L {:.2} {:.2} L {:.2} {:.2} Z" fill="#c00"/>"##,
                x - 4.0,
                y - 6.0,
                x + 4.0,
                y - 6.0,
                x,
                y
            );
        }
        let label_y = axis.bottom + 10.0;
        let _ = writeln!(
            out,
            r#"<text class="sample-label" x="{x:.2}" y="{label_y:.2}" font-size="9" text-anchor="end" transform="rotate(-90 {x:.2} {label_y:.2})">{}</text>
</g>"#,
            escape(&s.sample_id)
        );
    }

    // legend, top right
    for (k, (group, colour)) in palette.colours.iter().enumerate() {
        let y = 6.0 + 12.0 * k as f64;
        let x = right - 90.0;
        let _ = writeln!(
            out,
            r##"<rect class="legend" x="{x:.2}" y="{y:.2}" width="9.00" height="9.00" fill="{colour}" stroke="#333" stroke-width="0.5"/>
<text class="legend-label" x="{:.2}" y="{:.2}" font-size="9">{}</text>"##,
            x + 13.0,
            y + 8.0,
            escape(group)
        );
    }
    out.push_str("</g>\n");
}

fn draw_outlier(out: &mut String, x: f64, y: f64, glyph: OutlierGlyph) {
    match glyph {
        OutlierGlyph::Circle => {
            let _ = writeln!(
                out,
                r##"<circle class="outlier" cx="{x:.2}" cy="{y:.2}" r="1.80" fill="none" stroke="#333" stroke-width="0.8"/>"##
            );
        }
        OutlierGlyph::Cross => {
            let _ = writeln!(
                out,
                r##"<path class="outlier" d="M {:.2} {:.2} L {:.2} {:.2} M {:.2} {:.2} L {:.2} {:.2}" stroke="#333" stroke-width="0.8"/>"##,
                x - 2.0,
                y - 2.0,
                x + 2.0,
                y + 2.0,
                x - 2.0,
                y + 2.0,
                x + 2.0,
                y - 2.0
            );
        }
        OutlierGlyph::Hidden => {}
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stats(sample: &str, group: Option<&str>, median: f64) -> BoxplotStats {
        BoxplotStats {
            sample_id: sample.into(),
            group: group.map(Into::into),
            median,
            q1: median - 0.5,
            q3: median + 0.5,
            whisker_low: median - 1.0,
            whisker_high: median + 1.0,
            outliers: vec![],
        }
    }

    #[test]
    fn grid_layout_rule() {
        assert_eq!(grid_shape(1), (1, 1));
        assert_eq!(grid_shape(2), (1, 2));
        assert_eq!(grid_shape(4), (2, 2));
        assert_eq!(grid_shape(6), (2, 3));
        assert_eq!(grid_shape(7), (3, 3));
    }

    #[test]
    fn two_groups_two_fills() {
        let svg = render_boxplots(
            &[stats("a", Some("x"), 0.0), stats("b", Some("y"), 0.2)],
            &RenderSpec::rle("t"),
        )
        .unwrap();
        let boxes: Vec<&str> = svg.lines().filter(|l| l.starts_with(r#"<rect class="box""#)).collect();
        assert_eq!(boxes.len(), 2);
        assert!(boxes[0].contains(defaults::PALETTE[0]));
        assert!(boxes[1].contains(defaults::PALETTE[1]));
    }

    #[test]
    fn explicit_palette_entry_wins() {
        let spec = RenderSpec {
            group_palette: [("y".to_string(), "#123456".to_string())].into(),
            ..RenderSpec::rle("t")
        };
        let svg = render_boxplots(&[stats("a", Some("x"), 0.0), stats("b", Some("y"), 0.0)], &spec).unwrap();
        assert!(svg.contains("#123456"));
    }

    #[test]
    fn clipped_outlier_gets_marker() {
        let mut s = stats("a", None, 0.0);
        s.outliers = vec![10.0];
        let spec = RenderSpec {
            y_limits: Some((-2.0, 2.0)),
            ..RenderSpec::rle("t")
        };
        let svg = render_boxplots(&[s], &spec).unwrap();
        assert_eq!(svg.matches(r#"class="overflow""#).count(), 1);
        assert_eq!(svg.matches(r#"class="outlier""#).count(), 0);
        let axis = axis_map(&[], &spec);
        assert!(svg.contains(&format!("{:.2} Z", axis.top)));
    }

    #[test]
    fn errors() {
        assert!(matches!(
            render_boxplots(&[], &RenderSpec::rle("t")),
            Err(Error::EmptyInput(_))
        ));
        let mut s = stats("bad", None, 0.0);
        s.q3 = f64::NAN;
        assert!(matches!(
            render_boxplots(&[s], &RenderSpec::rle("t")),
            Err(Error::NonFiniteSummary(id)) if id == "bad"
        ));
        let spec = RenderSpec {
            y_limits: Some((1.0, 1.0)),
            ..RenderSpec::rle("t")
        };
        assert!(render_boxplots(&[stats("a", None, 0.0)], &spec).is_err());
    }

    #[test]
    fn auto_limits_by_kind() {
        let mut s = stats("a", None, 1.0);
        s.outliers = vec![-3.0];
        assert_eq!(auto_limits([&s], PlotKind::Rle), (-3.0 * 1.05, 3.0 * 1.05));
        let (lo, hi) = auto_limits([&s], PlotKind::Standard);
        assert!((lo - (-3.0 - 0.25)).abs() < 1e-12 && (hi - 2.25).abs() < 1e-12);
    }

    #[test]
    fn escapes_text() {
        let svg = render_boxplots(&[stats("a<b&c", None, 0.0)], &RenderSpec::rle("x \"y\"")).unwrap();
        assert!(svg.contains("a&lt;b&amp;c"));
        assert!(svg.contains("x &quot;y&quot;"));
    }

    #[test]
    fn ticks_are_round() {
        let (t, d) = ticks(-1.05, 1.05);
        assert_eq!(t, vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert_eq!(d, 1);
    }
}
