use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{read_csv, CsvRow, MetricsError};

const WIDTH: f64 = 960.0;
const HEIGHT: f64 = 420.0;
const PANEL_W: f64 = 380.0;
const PANEL_H: f64 = 280.0;
const PANEL_TOP: f64 = 70.0;
const PANEL_LEFT: [f64; 2] = [80.0, 560.0];
const COLORS: [&str; 6] = ["#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// One curve: per-episode ASR and mean DR, averaged over seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    /// (episode, asr, mean_dr), sorted by episode.
    pub points: Vec<(usize, f64, f64)>,
}

impl Series {
    /// Groups rows by algorithm and averages rows that share an episode.
    pub fn from_rows(rows: &[CsvRow]) -> Vec<Series> {
        let mut acc: BTreeMap<&str, BTreeMap<usize, (f64, f64, usize)>> = BTreeMap::new();
        for r in rows {
            let e = acc.entry(&r.algo).or_default().entry(r.episode).or_insert((0.0, 0.0, 0));
            e.0 += r.asr;
            e.1 += r.mean_dr;
            e.2 += 1;
        }
        acc.into_iter()
            .map(|(label, eps)| Series {
                label: label.to_string(),
                points: eps.into_iter().map(|(e, (a, d, n))| (e, a / n as f64, d / n as f64)).collect(),
            })
            .collect()
    }
}

struct Axis {
    lo: f64,
    hi: f64,
}

impl Axis {
    fn fit(values: impl Iterator<Item = f64>) -> Self {
        let (mut lo, mut hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(v), h.max(v)));
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        if hi - lo < 1e-9 {
            lo -= 1.0;
            hi += 1.0;
        }
        let pad = (hi - lo) * 0.05;
        Self { lo: lo - pad, hi: hi + pad }
    }

    fn map(&self, v: f64, len: f64) -> f64 {
        (v - self.lo) / (self.hi - self.lo) * len
    }

    fn ticks(&self, n: usize) -> Vec<f64> {
        (0..=n).map(|i| self.lo + (self.hi - self.lo) * i as f64 / n as f64).collect()
    }
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn panel(out: &mut String, left: f64, title: &str, series: &[Series], x: &Axis, y: &Axis, pick: fn(&(usize, f64, f64)) -> f64) {
    let bottom = PANEL_TOP + PANEL_H;
    let _ = writeln!(
        out,
        r##"<rect x="{left:.1}" y="{PANEL_TOP:.1}" width="{PANEL_W:.1}" height="{PANEL_H:.1}" fill="none" stroke="#333"/>"##
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="15">{}</text>"#,
        left + PANEL_W / 2.0,
        PANEL_TOP - 10.0,
        esc(title)
    );
    for t in y.ticks(5) {
        let py = bottom - y.map(t, PANEL_H);
        let _ = writeln!(
            out,
            r##"<line x1="{:.1}" y1="{py:.1}" x2="{:.1}" y2="{py:.1}" stroke="#ddd"/><text x="{:.1}" y="{:.1}" text-anchor="end" font-size="11">{t:.2}</text>"##,
            left,
            left + PANEL_W,
            left - 6.0,
            py + 4.0
        );
    }
    for t in x.ticks(5) {
        let px = left + x.map(t, PANEL_W);
        let _ = writeln!(
            out,
            r#"<text x="{px:.1}" y="{:.1}" text-anchor="middle" font-size="11">{t:.1}</text>"#,
            bottom + 16.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="12">episode</text>"#,
        left + PANEL_W / 2.0,
        bottom + 34.0
    );
    for (i, s) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<String> = s
            .points
            .iter()
            .map(|p| format!("{:.2},{:.2}", left + x.map(p.0 as f64, PANEL_W), bottom - y.map(pick(p), PANEL_H)))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            pts.join(" ")
        );
        if let [only] = pts.as_slice() {
            let (cx, cy) = only.split_once(',').expect("formatted above");
            let _ = writeln!(out, r#"<circle cx="{cx}" cy="{cy}" r="3" fill="{color}"/>"#);
        }
    }
}

/// Two panels side by side: ASR against episode and mean DR against
/// episode, one line per series, with a shared legend.
pub fn render_svg(series: &[Series]) -> String {
    let x = Axis::fit(series.iter().flat_map(|s| s.points.iter().map(|p| p.0 as f64)));
    let y_asr = Axis { lo: 0.0, hi: 1.0 };
    let y_dr = Axis::fit(series.iter().flat_map(|s| s.points.iter().map(|p| p.2)));
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    panel(&mut out, PANEL_LEFT[0], "ASR", series, &x, &y_asr, |p| p.1);
    panel(&mut out, PANEL_LEFT[1], "mean DR", series, &x, &y_dr, |p| p.2);
    for (i, s) in series.iter().enumerate() {
        let lx = 80.0 + 140.0 * i as f64;
        let color = COLORS[i % COLORS.len()];
        let _ = writeln!(
            out,
            r#"<line x1="{lx:.1}" y1="22" x2="{:.1}" y2="22" stroke="{color}" stroke-width="3"/><text x="{:.1}" y="26" font-size="13">{}</text>"#,
            lx + 24.0,
            lx + 30.0,
            esc(&s.label)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Reads every CSV, averages per algorithm and writes the SVG.
pub fn render_curves(csv_paths: &[&Path], out: &Path) -> Result<(), MetricsError> {
    let mut rows = Vec::new();
    for p in csv_paths {
        rows.extend(read_csv(p)?);
    }
    fs::write(out, render_svg(&Series::from_rows(&rows)))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows(algo: &str, n: usize) -> Vec<CsvRow> {
        (0..n)
            .map(|e| CsvRow {
                episode: e,
                algo: algo.into(),
                seed: 1,
                asr: 1.0 / (e + 1) as f64,
                mean_dr: e as f64 - 3.0,
                mean_ar: 0.0,
            })
            .collect()
    }

    #[test]
    fn three_algorithms_three_lines_per_panel() {
        let mut all = rows("dqn", 5);
        all.extend(rows("ddpg", 5));
        all.extend(rows("rrddpg", 5));
        let svg = render_svg(&Series::from_rows(&all));
        assert_eq!(svg.matches("<polyline").count(), 6);
        assert_eq!(svg, render_svg(&Series::from_rows(&all)));
    }

    #[test]
    fn single_point_renders() {
        let svg = render_svg(&Series::from_rows(&rows("dqn", 1)));
        assert!(svg.contains("<circle"));
        assert!(!svg.contains("NaN"));
    }

    #[test]
    fn seeds_are_averaged() {
        let mut a = rows("dqn", 2);
        let mut b = rows("dqn", 2);
        b.iter_mut().for_each(|r| r.asr = 0.0);
        a.append(&mut b);
        let s = Series::from_rows(&a);
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].points[0].1, 0.5);
    }
}
