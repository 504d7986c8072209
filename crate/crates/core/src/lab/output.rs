//! CSV, SVG and manifest writers.

use std::path::{Path, PathBuf};

use serde::Serialize;

/// Shortest form guaranteeing a bitwise round trip: 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Rows of identifiers and formatted numbers.
pub struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Table { header: header.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        ensure_parent(path)?;
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()
    }
}

fn ensure_parent(path: &Path) -> std::io::Result<()> {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => std::fs::create_dir_all(p),
        _ => Ok(()),
    }
}

/// A line plot with one data polyline and one horizontal reference line.
pub fn line_plot_svg(points: &[(f64, f64)], reference: f64, x_label: &str, y_label: &str) -> String {
    let (w, h, m) = (640.0, 420.0, 60.0);
    let xs = points.iter().map(|p| p.0);
    let ys = points.iter().map(|p| p.1).chain(std::iter::once(reference));
    let (x0, x1) = bounds(xs);
    let (y0, y1) = bounds(ys);
    let sx = |x: f64| m + (x - x0) / (x1 - x0) * (w - 2.0 * m);
    let sy = |y: f64| h - m - (y - y0) / (y1 - y0) * (h - 2.0 * m);
    let poly: Vec<String> = points.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
    let mut s = String::new();
    s.push_str(&format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n"
    ));
    s.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    s.push_str(&format!(
        "<line x1=\"{m}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n<line x1=\"{m}\" y1=\"{m}\" x2=\"{m}\" y2=\"{b}\" stroke=\"black\"/>\n",
        b = h - m,
        r = w - m
    ));
    s.push_str(&format!(
        "<line x1=\"{m}\" y1=\"{y:.2}\" x2=\"{r}\" y2=\"{y:.2}\" stroke=\"gray\" stroke-dasharray=\"6 4\"/>\n",
        y = sy(reference),
        r = w - m
    ));
    s.push_str(&format!("<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"{}\"/>\n", poly.join(" ")));
    for (x, y) in points {
        s.push_str(&format!("<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"steelblue\"/>\n", sx(*x), sy(*y)));
    }
    s.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
        w / 2.0,
        h - 15.0,
        escape(x_label)
    ));
    s.push_str(&format!(
        "<text x=\"15\" y=\"{}\" text-anchor=\"middle\" font-size=\"14\" transform=\"rotate(-90 15 {})\">{}</text>\n",
        h / 2.0,
        h / 2.0,
        escape(y_label)
    ));
    for (v, anchor) in [(x0, "start"), (x1, "end")] {
        s.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{}\" text-anchor=\"{anchor}\" font-size=\"11\">{v:.3}</text>\n",
            sx(v),
            h - m + 16.0
        ));
    }
    for v in [y0, y1] {
        s.push_str(&format!(
            "<text x=\"{}\" y=\"{:.2}\" text-anchor=\"end\" font-size=\"11\">{v:.5}</text>\n",
            m - 4.0,
            sy(v) + 4.0
        ));
    }
    s.push_str("</svg>\n");
    s
}

fn bounds(v: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = v.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    if !(lo.is_finite() && hi.is_finite()) {
        return (0.0, 1.0);
    }
    let pad = if hi > lo { 0.05 * (hi - lo) } else { lo.abs().max(1.0) * 1e-3 };
    (lo - pad, hi + pad)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn write_text(path: &Path, text: &str) -> std::io::Result<()> {
    ensure_parent(path)?;
    std::fs::write(path, text)
}

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    pub git_describe: String,
    pub started_at: String,
    pub finished_at: String,
    pub outputs: Vec<PathBuf>,
}

impl RunManifest {
    /// Written next to the first output as `<output>.manifest.json`.
    pub fn write(&self) -> std::io::Result<Option<PathBuf>> {
        let Some(first) = self.outputs.first() else { return Ok(None) };
        let mut name = first.as_os_str().to_owned();
        name.push(".manifest.json");
        let path = PathBuf::from(name);
        write_text(&path, &serde_json::to_string_pretty(self).expect("manifest serialises"))?;
        Ok(Some(path))
    }
}

pub fn git_describe() -> String {
    std::process::Command::new("git")
        .args(["describe", "--always", "--dirty", "--tags"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .and_then(|o| String::from_utf8(o.stdout).ok())
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .unwrap_or_else(|| "unknown".into())
}

pub fn now() -> String {
    chrono::Utc::now().to_rfc3339()
}
