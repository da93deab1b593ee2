//! Static SVG charts written as plain text.

use std::fmt::Write;

use anyhow::{bail, Result};
use qualsim::model::CANONICAL_ASSOCIATIONS;

const WIDTH: f64 = 960.0;
const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 70.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 130.0;
const OLD_COLOUR: &str = "#1f77b4";
const NEW_COLOUR: &str = "#d62728";

/// A labelled value per association, as drawn by [`bar_chart`].
#[derive(Debug, Clone, PartialEq)]
pub struct Bar {
    pub label: String,
    pub value: f64,
}

/// Associations in canonical order (2019/20 access rank); names outside the
/// canonical list keep their relative order at the end.
pub fn order_by_rank(mut bars: Vec<Bar>) -> Vec<Bar> {
    let rank = |label: &str| CANONICAL_ASSOCIATIONS.iter().position(|a| *a == label).unwrap_or(usize::MAX);
    bars.sort_by_key(|b| rank(&b.label));
    bars
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Round tick positions covering `[lo, hi]`.
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = (hi - lo).max(1e-9);
    let raw = span / 6.0;
    let magnitude = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 2.5, 5.0, 10.0].iter().map(|m| m * magnitude).find(|s| *s >= raw).unwrap_or(raw);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn fmt_tick(v: f64) -> String {
    let s = format!("{v:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

struct Canvas {
    svg: String,
}

impl Canvas {
    fn new(title: &str) -> Self {
        let mut svg = String::new();
        writeln!(
            svg,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
        )
        .unwrap();
        writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
        writeln!(
            svg,
            r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
            WIDTH / 2.0,
            escape(title)
        )
        .unwrap();
        Canvas { svg }
    }

    fn line(&mut self, x1: f64, y1: f64, x2: f64, y2: f64, stroke: &str) {
        writeln!(self.svg, r#"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="{stroke}"/>"#).unwrap();
    }

    fn text(&mut self, x: f64, y: f64, anchor: &str, content: &str) {
        writeln!(self.svg, r#"<text x="{x:.2}" y="{y:.2}" text-anchor="{anchor}">{}</text>"#, escape(content)).unwrap();
    }

    fn finish(mut self) -> String {
        self.svg.push_str("</svg>\n");
        self.svg
    }
}

/// Linear map from data to pixels.
#[derive(Clone, Copy)]
struct Scale {
    d0: f64,
    d1: f64,
    p0: f64,
    p1: f64,
}

impl Scale {
    fn at(self, v: f64) -> f64 {
        self.p0 + (v - self.d0) / (self.d1 - self.d0) * (self.p1 - self.p0)
    }
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if hi - lo < 1e-12 {
        (lo - 1.0, hi + 1.0)
    } else {
        let pad = (hi - lo) * 0.05;
        (lo - pad, hi + pad)
    }
}

fn y_axis(c: &mut Canvas, y: Scale, x: f64, anchor: &str, label_dx: f64, colour: &str) {
    c.line(x, y.p0, x, y.p1, colour);
    for t in ticks(y.d0, y.d1) {
        let py = y.at(t);
        c.line(x - 4.0, py, x + 4.0, py, colour);
        c.text(x + label_dx, py + 4.0, anchor, &fmt_tick(t));
    }
}

/// One vertical bar per entry around a zero line, labels along the bottom.
pub fn bar_chart(title: &str, y_label: &str, bars: &[Bar]) -> Result<String> {
    if bars.is_empty() {
        bail!("report has no rows to chart");
    }
    let lo = bars.iter().map(|b| b.value).fold(0.0, f64::min);
    let hi = bars.iter().map(|b| b.value).fold(0.0, f64::max);
    let (lo, hi) = padded(lo, hi);
    let y = Scale { d0: lo, d1: hi, p0: HEIGHT - MARGIN_BOTTOM, p1: MARGIN_TOP };
    let plot_width = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let slot = plot_width / bars.len() as f64;

    let mut c = Canvas::new(title);
    y_axis(&mut c, y, MARGIN_LEFT, "end", -8.0, "black");
    c.line(MARGIN_LEFT, y.at(0.0), WIDTH - MARGIN_RIGHT, y.at(0.0), "black");
    for (i, bar) in bars.iter().enumerate() {
        let x = MARGIN_LEFT + slot * i as f64 + slot * 0.15;
        let (top, bottom) = (y.at(bar.value.max(0.0)), y.at(bar.value.min(0.0)));
        let colour = if bar.value < 0.0 { NEW_COLOUR } else { OLD_COLOUR };
        writeln!(
            c.svg,
            r#"<rect x="{x:.2}" y="{top:.2}" width="{:.2}" height="{:.2}" fill="{colour}"><title>{}: {:.4}</title></rect>"#,
            slot * 0.7,
            (bottom - top).max(0.0),
            escape(&bar.label),
            bar.value
        )
        .unwrap();
        let lx = x + slot * 0.35;
        let ly = HEIGHT - MARGIN_BOTTOM + 10.0;
        writeln!(
            c.svg,
            r#"<text x="{lx:.2}" y="{ly:.2}" text-anchor="end" transform="rotate(-60 {lx:.2} {ly:.2})">{}</text>"#,
            escape(&bar.label)
        )
        .unwrap();
    }
    vertical_label(&mut c, 18.0, y_label);
    Ok(c.finish())
}

fn vertical_label(c: &mut Canvas, x: f64, label: &str) {
    let y = (MARGIN_TOP + HEIGHT - MARGIN_BOTTOM) / 2.0;
    writeln!(
        c.svg,
        r#"<text x="{x}" y="{y}" text-anchor="middle" transform="rotate(-90 {x} {y})">{}</text>"#,
        escape(label)
    )
    .unwrap();
}

/// Labelled points.
pub fn scatter_chart(title: &str, x_label: &str, y_label: &str, points: &[(String, f64, f64)]) -> Result<String> {
    if points.is_empty() {
        bail!("report has no rows to chart");
    }
    let (x_lo, x_hi) = padded(
        points.iter().map(|p| p.1).fold(f64::INFINITY, f64::min),
        points.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max),
    );
    let (y_lo, y_hi) =
        padded(points.iter().map(|p| p.2).fold(0.0, f64::min), points.iter().map(|p| p.2).fold(0.0, f64::max));
    let x = Scale { d0: x_lo, d1: x_hi, p0: MARGIN_LEFT, p1: WIDTH - MARGIN_RIGHT };
    let y = Scale { d0: y_lo, d1: y_hi, p0: HEIGHT - MARGIN_BOTTOM, p1: MARGIN_TOP };

    let mut c = Canvas::new(title);
    y_axis(&mut c, y, MARGIN_LEFT, "end", -8.0, "black");
    let base = HEIGHT - MARGIN_BOTTOM;
    c.line(MARGIN_LEFT, base, WIDTH - MARGIN_RIGHT, base, "black");
    for t in ticks(x_lo, x_hi) {
        c.line(x.at(t), base, x.at(t), base + 4.0, "black");
        c.text(x.at(t), base + 16.0, "middle", &fmt_tick(t));
    }
    c.line(MARGIN_LEFT, y.at(0.0), WIDTH - MARGIN_RIGHT, y.at(0.0), "#999999");
    for (label, px, py) in points {
        writeln!(
            c.svg,
            r#"<circle cx="{:.2}" cy="{:.2}" r="3.5" fill="{OLD_COLOUR}"><title>{}: ({px:.4}, {py:.4})</title></circle>"#,
            x.at(*px),
            y.at(*py),
            escape(label)
        )
        .unwrap();
    }
    c.text((MARGIN_LEFT + WIDTH - MARGIN_RIGHT) / 2.0, base + 40.0, "middle", x_label);
    vertical_label(&mut c, 18.0, y_label);
    Ok(c.finish())
}

/// Two series over a logarithmic x axis, each on its own y scale (first on
/// the left, second on the right).
pub fn dual_line_chart(title: &str, names: [&str; 2], xs: &[f64], series: [&[f64]; 2]) -> Result<String> {
    if xs.is_empty() {
        bail!("report has no points to chart");
    }
    if xs.iter().any(|v| *v <= 0.0) {
        bail!("x values must be positive for a logarithmic axis");
    }
    let (lx0, lx1) = {
        let lo = xs.iter().copied().fold(f64::INFINITY, f64::min).log10();
        let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max).log10();
        if hi - lo < 1e-12 {
            (lo - 0.5, hi + 0.5)
        } else {
            (lo, hi)
        }
    };
    let x = Scale { d0: lx0, d1: lx1, p0: MARGIN_LEFT, p1: WIDTH - MARGIN_RIGHT };
    let base = HEIGHT - MARGIN_BOTTOM;

    let mut c = Canvas::new(title);
    c.line(MARGIN_LEFT, base, WIDTH - MARGIN_RIGHT, base, "black");
    for exponent in (lx0.ceil() as i32)..=(lx1.floor() as i32) {
        let px = x.at(exponent as f64);
        c.line(px, base, px, base + 4.0, "black");
        c.text(px, base + 16.0, "middle", &format!("1e{exponent}"));
    }
    c.text((MARGIN_LEFT + WIDTH - MARGIN_RIGHT) / 2.0, base + 40.0, "middle", "iterations");

    let colours = [OLD_COLOUR, NEW_COLOUR];
    for (k, values) in series.iter().enumerate() {
        let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
        if finite.is_empty() {
            bail!("series {} has no finite values", names[k]);
        }
        let (lo, hi) = padded(
            finite.iter().copied().fold(f64::INFINITY, f64::min),
            finite.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        );
        let y = Scale { d0: lo, d1: hi, p0: base, p1: MARGIN_TOP };
        if k == 0 {
            y_axis(&mut c, y, MARGIN_LEFT, "end", -8.0, colours[k]);
        } else {
            y_axis(&mut c, y, WIDTH - MARGIN_RIGHT, "start", 8.0, colours[k]);
        }
        let path: Vec<String> = xs
            .iter()
            .zip(values.iter())
            .filter(|(_, v)| v.is_finite())
            .map(|(px, py)| format!("{:.2},{:.2}", x.at(px.log10()), y.at(*py)))
            .collect();
        writeln!(
            c.svg,
            r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="2"/>"#,
            path.join(" "),
            colours[k]
        )
        .unwrap();
        let side = if k == 0 { "left" } else { "right" };
        let ly = base + 62.0 + 16.0 * k as f64;
        c.line(MARGIN_LEFT + 20.0, ly, MARGIN_LEFT + 40.0, ly, colours[k]);
        c.text(MARGIN_LEFT + 46.0, ly + 4.0, "start", &format!("{} ({side} scale)", names[k]));
    }
    Ok(c.finish())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bars(labels: &[&str]) -> Vec<Bar> {
        labels.iter().enumerate().map(|(i, l)| Bar { label: l.to_string(), value: -(i as f64) }).collect()
    }

    #[test]
    fn orders_by_canonical_rank() {
        let ordered = order_by_rank(bars(&["Kosovo", "Somewhere", "Turkey", "Hungary"]));
        let labels: Vec<&str> = ordered.iter().map(|b| b.label.as_str()).collect();
        assert_eq!(labels, ["Turkey", "Hungary", "Kosovo", "Somewhere"]);
    }

    #[test]
    fn one_rect_per_bar() {
        let svg = bar_chart("t", "pp", &bars(&["A", "B", "C"])).unwrap();
        assert_eq!(svg.matches("<rect x=").count(), 3);
        assert!(svg.ends_with("</svg>\n"));
    }

    #[test]
    fn empty_inputs_are_errors() {
        assert!(bar_chart("t", "pp", &[]).is_err());
        assert!(scatter_chart("t", "x", "y", &[]).is_err());
        assert!(dual_line_chart("t", ["a", "b"], &[], [&[], &[]]).is_err());
    }

    #[test]
    fn ticks_are_round() {
        assert_eq!(ticks(0.0, 30.0), vec![0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0]);
        assert!(ticks(-20.0, 1.0).contains(&0.0));
    }

    #[test]
    fn labels_are_escaped() {
        let svg = bar_chart("a<b", "pp", &[Bar { label: "Bosnia & Herzegovina".into(), value: 1.0 }]).unwrap();
        assert!(svg.contains("Bosnia &amp; Herzegovina"));
        assert!(svg.contains("a&lt;b"));
    }
}
