//! Standalone SVG figures: error-versus-iteration curves from trace CSVs and
//! success-rate grids from experiment summaries.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use ttr_core::solvers::TraceRecord;

use crate::experiment::{CellResult, ExperimentSummary, SUMMARY_FILE};
use crate::read_json;
use crate::recover::SolverKind;
use crate::trace_io::read_trace_csv;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
/// Values at or below zero are drawn at this floor on the log axis.
pub const LOG_FLOOR: f64 = 1e-300;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn header(out: &mut String, w: f64, h: f64, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        w / 2.0,
        escape(title)
    );
}

/// Renders one trace as a log-scale line chart of `rel_error` against `t`
/// (the objective when the trace has no error column).
pub fn trace_svg(trace: &[TraceRecord], title: &str) -> String {
    let use_err = !trace.is_empty() && trace.iter().all(|r| r.rel_error.is_some());
    let label = if use_err { "rel_error" } else { "objective" };
    let logs: Vec<f64> = trace
        .iter()
        .map(|r| {
            let v = if use_err { r.rel_error.unwrap_or(0.0) } else { r.objective };
            v.max(LOG_FLOOR).log10()
        })
        .collect();
    let ts: Vec<f64> = trace.iter().map(|r| r.t as f64).collect();

    let mut out = String::new();
    header(&mut out, WIDTH, HEIGHT, title);
    let (pw, ph) = (WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM);
    let _ = writeln!(
        out,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">t</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 12.0
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{label} (log10)</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0
    );
    if trace.is_empty() {
        out.push_str("</svg>\n");
        return out;
    }

    let t_lo = ts.iter().copied().fold(f64::INFINITY, f64::min);
    let t_hi = ts.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut y_lo = logs.iter().copied().fold(f64::INFINITY, f64::min).floor();
    let mut y_hi = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max).ceil();
    if y_hi <= y_lo {
        y_lo -= 1.0;
        y_hi += 1.0;
    }
    let t_span = if t_hi > t_lo { t_hi - t_lo } else { 1.0 };
    let sx = |t: f64| LEFT + (t - t_lo) / t_span * pw;
    let sy = |v: f64| TOP + (y_hi - v) / (y_hi - y_lo) * ph;

    let decades = (y_hi - y_lo) as i64;
    let stride = (decades / 10).max(1);
    let mut e = y_lo as i64;
    while e <= y_hi as i64 {
        let y = sy(e as f64);
        let _ = writeln!(
            out,
            r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#ddd"/>"##,
            LEFT + pw
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.2}" text-anchor="end">1e{e}</text>"#,
            LEFT - 6.0,
            y + 4.0
        );
        e += stride;
    }
    for (t, anchor) in [(t_lo, "start"), (t_hi, "end")] {
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.1}" text-anchor="{anchor}">{t}</text>"#,
            sx(t),
            TOP + ph + 16.0
        );
    }
    let points: Vec<String> = ts
        .iter()
        .zip(&logs)
        .map(|(&t, &v)| format!("{:.2},{:.2}", sx(t), sy(v)))
        .collect();
    let _ = writeln!(
        out,
        r##"<polyline fill="none" stroke="#1f77b4" stroke-width="1.5" points="{}"/>"##,
        points.join(" ")
    );
    out.push_str("</svg>\n");
    out
}

/// Cells sharing everything but `(N, m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatGroup {
    pub solver: SolverKind,
    pub d: usize,
    pub r: usize,
    pub p_s: f64,
    pub lambda: f64,
    pub q: f64,
    pub cells: Vec<CellResult>,
}

impl HeatGroup {
    fn matches(&self, c: &CellResult) -> bool {
        let k = &c.cell;
        self.solver == k.solver
            && self.d == k.d
            && self.r == k.r
            && self.p_s == k.p_s
            && self.lambda == k.lambda
            && self.q == k.q
    }

    pub fn title(&self) -> String {
        format!(
            "{} success rate: d={} r={} p_s={} lambda={} q={}",
            self.solver.name(),
            self.d,
            self.r,
            self.p_s,
            self.lambda,
            self.q
        )
    }
}

/// Groups summary cells by `(solver, d, r, p_s, λ, q)` in order of first
/// appearance.
pub fn heat_groups(summary: &ExperimentSummary) -> Vec<HeatGroup> {
    let mut groups: Vec<HeatGroup> = Vec::new();
    for c in &summary.cells {
        match groups.iter_mut().find(|g| g.matches(c)) {
            Some(g) => g.cells.push(c.clone()),
            None => groups.push(HeatGroup {
                solver: c.cell.solver,
                d: c.cell.d,
                r: c.cell.r,
                p_s: c.cell.p_s,
                lambda: c.cell.lambda,
                q: c.cell.q,
                cells: vec![c.clone()],
            }),
        }
    }
    groups
}

fn sorted_unique(mut v: Vec<usize>) -> Vec<usize> {
    v.sort_unstable();
    v.dedup();
    v
}

/// Success-rate grid with rows `N` and columns `m`; one `rect` of class
/// `cell` per `(N, m)` present.
pub fn heatmap_svg(group: &HeatGroup) -> String {
    let ns = sorted_unique(group.cells.iter().map(|c| c.cell.n).collect());
    let ms = sorted_unique(group.cells.iter().map(|c| c.cell.m).collect());
    let cw = 60.0;
    let ch = 36.0;
    let w = LEFT + cw * ms.len() as f64 + RIGHT;
    let h = TOP + ch * ns.len() as f64 + BOTTOM;
    let mut out = String::new();
    header(&mut out, w.max(360.0), h, &group.title());
    for (i, n) in ns.iter().enumerate() {
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">N={n}</text>"#,
            LEFT - 6.0,
            TOP + ch * (i as f64 + 0.5) + 4.0
        );
    }
    for (j, m) in ms.iter().enumerate() {
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{m}</text>"#,
            LEFT + cw * (j as f64 + 0.5),
            TOP + ch * ns.len() as f64 + 16.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">m</text>"#,
        LEFT + cw * ms.len() as f64 / 2.0,
        h - 10.0
    );
    for (i, n) in ns.iter().enumerate() {
        for (j, m) in ms.iter().enumerate() {
            let Some(c) = group.cells.iter().find(|c| c.cell.n == *n && c.cell.m == *m) else {
                continue;
            };
            let rate = c.success_rate.clamp(0.0, 1.0);
            let shade = (255.0 * (1.0 - rate)).round() as u8;
            let (x, y) = (LEFT + cw * j as f64, TOP + ch * i as f64);
            let _ = writeln!(
                out,
                r##"<rect class="cell" x="{x:.1}" y="{y:.1}" width="{cw}" height="{ch}" fill="rgb({shade},{shade},255)" stroke="#888"/>"##
            );
            let ink = if rate > 0.6 { "white" } else { "black" };
            let _ = writeln!(
                out,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" fill="{ink}">{rate:.2}</text>"#,
                x + cw / 2.0,
                y + ch / 2.0 + 4.0
            );
        }
    }
    out.push_str("</svg>\n");
    out
}

fn write(path: PathBuf, text: &str, written: &mut Vec<PathBuf>) -> Result<()> {
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    written.push(path);
    Ok(())
}

/// Renders every trace CSV in `input` (or the single CSV `input`) and the
/// heatmaps of `summary.json` when present. Returns the files written, in
/// order.
pub fn plot(input: &Path, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let (csvs, summary) = if input.is_file() {
        (vec![input.to_path_buf()], None)
    } else {
        let mut csvs: Vec<PathBuf> = fs::read_dir(input)
            .with_context(|| format!("reading {}", input.display()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "csv"))
            .collect();
        csvs.sort();
        let summary = input.join(SUMMARY_FILE);
        (csvs, summary.is_file().then_some(summary))
    };
    if csvs.is_empty() && summary.is_none() {
        bail!("{} holds no trace CSVs or {SUMMARY_FILE}", input.display());
    }
    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let mut written = Vec::new();
    for csv in &csvs {
        let trace = read_trace_csv(csv)?;
        let stem = csv.file_stem().and_then(|s| s.to_str()).unwrap_or("trace");
        write(out_dir.join(format!("{stem}.svg")), &trace_svg(&trace, stem), &mut written)?;
    }
    if let Some(path) = summary {
        let summary: ExperimentSummary = read_json(&path)?;
        for (k, g) in heat_groups(&summary).iter().enumerate() {
            write(out_dir.join(format!("heatmap_{k:02}.svg")), &heatmap_svg(g), &mut written)?;
        }
    }
    Ok(written)
}
