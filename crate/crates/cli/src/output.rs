//! CSV with embedded-config headers, JSON reports, and self-contained SVG.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::{ExperimentConfig, HEADER_CONFIG_PREFIX};
use crate::error::{CliError, CliResult};

/// Output directory, created on demand.
pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    pub fn new(root: impl Into<PathBuf>) -> CliResult<Self> {
        let root = root.into();
        std::fs::create_dir_all(&root).map_err(|e| CliError::io(root.display().to_string(), e))?;
        Ok(Self { root })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write(&self, name: &str, contents: &str) -> CliResult<PathBuf> {
        let p = self.path(name);
        std::fs::write(&p, contents).map_err(|e| CliError::io(p.display().to_string(), e))?;
        Ok(p)
    }
}

/// Shortest round-trip form, scientific for very small or large magnitudes.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

/// `#` header lines that make a file self-describing and re-runnable.
pub fn header(command: &str, cfg: &ExperimentConfig) -> String {
    format!(
        "# acstab {command} v{}\n{HEADER_CONFIG_PREFIX}{}\n# seed: {}\n",
        env!("CARGO_PKG_VERSION"),
        cfg.to_json_line(),
        cfg.seed
    )
}

pub fn csv(command: &str, cfg: &ExperimentConfig, columns: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = header(command, cfg);
    out.push_str(&columns.join(","));
    out.push('\n');
    for r in rows {
        debug_assert_eq!(r.len(), columns.len());
        out.push_str(&r.join(","));
        out.push('\n');
    }
    out
}

/// One entry of a verification report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRecord {
    pub check: String,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub stderr: f64,
    pub pass: bool,
}

#[derive(Serialize)]
struct Document<'a, T: Serialize> {
    command: &'a str,
    version: &'a str,
    seed: u64,
    config: &'a ExperimentConfig,
    results: &'a T,
}

/// JSON file carrying the config and seed next to its payload.
pub fn json_document<T: Serialize>(command: &str, cfg: &ExperimentConfig, results: &T) -> String {
    let doc = Document {
        command,
        version: env!("CARGO_PKG_VERSION"),
        seed: cfg.seed,
        config: cfg,
        results,
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("document serializes");
    s.push('\n');
    s
}

const MARGIN_L: f64 = 60.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 30.0;
const MARGIN_B: f64 = 45.0;

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn svg_open(width: u32, height: u32, title: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
         viewBox=\"0 0 {width} {height}\" font-family=\"sans-serif\" font-size=\"11\">\n\
         <rect x=\"0\" y=\"0\" width=\"{width}\" height=\"{height}\" fill=\"#ffffff\"/>\n\
         <text x=\"{}\" y=\"18\" text-anchor=\"middle\" font-size=\"13\">{}</text>\n",
        width as f64 / 2.0,
        xml_escape(title)
    )
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    w: f64,
    h: f64,
}

impl Frame {
    fn new(width: u32, height: u32, x: (f64, f64), y: (f64, f64)) -> Self {
        let pad = |(a, b): (f64, f64)| if b > a { (a, b) } else { (a - 0.5, a + 0.5) };
        let (x0, x1) = pad(x);
        let (y0, y1) = pad(y);
        Self {
            x0,
            x1,
            y0,
            y1,
            w: width as f64 - MARGIN_L - MARGIN_R,
            h: height as f64 - MARGIN_T - MARGIN_B,
        }
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN_L + (x - self.x0) / (self.x1 - self.x0) * self.w
    }

    fn py(&self, y: f64) -> f64 {
        MARGIN_T + (1.0 - (y - self.y0) / (self.y1 - self.y0)) * self.h
    }

    fn axes(&self, out: &mut String, xlabel: &str, ylabel: &str) {
        let (l, r, t, b) = (MARGIN_L, MARGIN_L + self.w, MARGIN_T, MARGIN_T + self.h);
        let _ = writeln!(
            out,
            "<rect x=\"{l}\" y=\"{t}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#000000\"/>",
            self.w, self.h
        );
        for i in 0..=4 {
            let fx = self.x0 + (self.x1 - self.x0) * i as f64 / 4.0;
            let fy = self.y0 + (self.y1 - self.y0) * i as f64 / 4.0;
            let _ = writeln!(
                out,
                "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>",
                self.px(fx),
                b + 14.0,
                tick(fx)
            );
            let _ = writeln!(
                out,
                "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{}</text>",
                l - 4.0,
                self.py(fy) + 4.0,
                tick(fy)
            );
        }
        let _ = writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>",
            (l + r) / 2.0,
            b + 34.0,
            xml_escape(xlabel)
        );
        let _ = writeln!(
            out,
            "<text x=\"14\" y=\"{:.2}\" text-anchor=\"middle\" transform=\"rotate(-90 14 {:.2})\">{}</text>",
            (t + b) / 2.0,
            (t + b) / 2.0,
            xml_escape(ylabel)
        );
    }
}

fn tick(x: f64) -> String {
    let s = format!("{x:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.to_string()
    }
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Line plot of `(label, xs, ys)` series.
pub fn line_plot(
    title: &str,
    xlabel: &str,
    ylabel: &str,
    series: &[(String, Vec<f64>, Vec<f64>)],
    width: u32,
    height: u32,
) -> String {
    let xs = series.iter().flat_map(|s| s.1.iter().copied());
    let ys = series.iter().flat_map(|s| s.2.iter().copied()).filter(|y| y.is_finite());
    let (x0, x1) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    let y1 = ys.fold(0.0f64, f64::max);
    let frame = Frame::new(width, height, (x0, x1), (0.0, if y1 > 0.0 { y1 * 1.05 } else { 1.0 }));
    let mut out = svg_open(width, height, title);
    frame.axes(&mut out, xlabel, ylabel);
    for (i, (label, xs, ys)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = xs
            .iter()
            .zip(ys)
            .filter(|(_, y)| y.is_finite())
            .map(|(&x, &y)| format!("{:.2},{:.2}", frame.px(x), frame.py(y)))
            .collect();
        let _ = writeln!(
            out,
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>",
            pts.join(" ")
        );
        let _ = writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{:.2}\" fill=\"{color}\">{}</text>",
            MARGIN_L + frame.w - 90.0,
            MARGIN_T + 14.0 + 14.0 * i as f64,
            xml_escape(label)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Heatmap of `values[row][col]` over `xs` (columns) and `ys` (rows),
/// linear color scale clipped at `clip`, with labelled vertical guides.
#[allow(clippy::too_many_arguments)]
pub fn heatmap(
    title: &str,
    xlabel: &str,
    ylabel: &str,
    xs: &[f64],
    ys: &[f64],
    values: &[Vec<f64>],
    clip: f64,
    guides: &[(f64, String)],
    width: u32,
    height: u32,
) -> String {
    let span = |v: &[f64]| -> (f64, f64) {
        let lo = v.first().copied().unwrap_or(0.0);
        let hi = v.last().copied().unwrap_or(1.0);
        let half = if v.len() > 1 { (hi - lo) / (v.len() - 1) as f64 / 2.0 } else { 0.5 };
        (lo - half, hi + half)
    };
    let frame = Frame::new(width, height, span(xs), span(ys));
    let mut out = svg_open(width, height, title);
    let cw = frame.w / xs.len().max(1) as f64;
    let ch = frame.h / ys.len().max(1) as f64;
    for (r, &y) in ys.iter().enumerate() {
        for (c, &x) in xs.iter().enumerate() {
            let v = values[r][c];
            let t = if clip > 0.0 { (v / clip).clamp(0.0, 1.0) } else { 0.0 };
            let _ = writeln!(
                out,
                "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{}\"/>",
                frame.px(x) - cw / 2.0,
                frame.py(y) - ch / 2.0,
                cw + 0.05,
                ch + 0.05,
                color(t)
            );
        }
    }
    frame.axes(&mut out, xlabel, ylabel);
    for (x, label) in guides {
        if *x < frame.x0 || *x > frame.x1 {
            continue;
        }
        let px = frame.px(*x);
        let _ = writeln!(
            out,
            "<line x1=\"{px:.2}\" y1=\"{MARGIN_T}\" x2=\"{px:.2}\" y2=\"{:.2}\" stroke=\"#000000\" stroke-dasharray=\"4 3\"/>",
            MARGIN_T + frame.h
        );
        let _ = writeln!(
            out,
            "<text x=\"{px:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>",
            MARGIN_T - 3.0,
            xml_escape(label)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// White → dark blue.
fn color(t: f64) -> String {
    let lerp = |a: f64, b: f64| (a + (b - a) * t).round() as u8;
    format!("#{:02x}{:02x}{:02x}", lerp(255.0, 8.0), lerp(255.0, 48.0), lerp(255.0, 107.0))
}

pub fn display(p: &Path) -> String {
    p.display().to_string()
}
