//! CSV exports, result files, the evaluation table and SVG plots.

use std::fmt;
use std::path::Path;

use plotters::prelude::*;
use serde::Serialize;

use super::{read_versioned, write_json, FormatError};
use crate::contact_analysis::{DemoContacts, HysteresisParams};
use crate::execution_sim::{ExecutionResult, Outcome, RESULT_VERSION};
use crate::primitive_learning::{Primitive, PrimitiveKind};

fn csv_string(rows: impl FnOnce(&mut csv::Writer<Vec<u8>>) -> csv::Result<()>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    rows(&mut w).expect("in-memory csv write");
    String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
}

/// Long-format contact timelines: one row per pair and frame. Hand pairs
/// come first; `distance_m` is empty where either cloud is absent.
pub fn timeline_csv(contacts: &DemoContacts) -> String {
    let series = contacts.hand.values().chain(&contacts.objects);
    csv_string(|w| {
        w.write_record(["frame", "pair_a", "pair_b", "distance_m", "state"])?;
        for s in series {
            let (a, b) = &s.timeline.pair;
            for (f, (d, st)) in s.distances.iter().zip(&s.timeline.states).enumerate() {
                let d = d.map(|v| v.to_string()).unwrap_or_default();
                w.write_record([f.to_string().as_str(), a, b, &d, if *st { "1" } else { "0" }])?;
            }
        }
        Ok(())
    })
}

#[derive(Serialize)]
struct PrimitiveSummary<'a> {
    kind: PrimitiveKind,
    target: &'a str,
    span: (usize, usize),
}

/// Kinds, targets and spans only.
pub fn primitives_json(primitives: &[Primitive]) -> String {
    let list: Vec<_> = primitives.iter().map(|p| PrimitiveSummary { kind: p.kind, target: &p.target, span: p.span }).collect();
    serde_json::to_string_pretty(&list).expect("serializable") + "\n"
}

/// Joint configuration and held-object pose over time.
pub fn trace_csv(result: &ExecutionResult) -> String {
    let dof = result.trace.first().map_or(0, |s| s.q.len());
    csv_string(|w| {
        let mut head = vec!["time".to_string()];
        head.extend((0..dof).map(|i| format!("q{i}")));
        head.extend(["held", "qw", "qx", "qy", "qz", "tx", "ty", "tz"].map(String::from));
        w.write_record(&head)?;
        for s in &result.trace {
            let mut row = vec![s.time.to_string()];
            row.extend(s.q.iter().map(|v| v.to_string()));
            match &s.held {
                Some((name, p)) => {
                    let q = p.rotation.quaternion();
                    row.push(name.clone());
                    row.extend([q.w, q.i, q.j, q.k, p.translation.x, p.translation.y, p.translation.z].map(|v| v.to_string()));
                }
                None => row.extend(std::iter::repeat(String::new()).take(8)),
            }
            w.write_record(&row)?;
        }
        Ok(())
    })
}

pub fn write_result(result: &ExecutionResult, path: &Path) -> Result<(), FormatError> {
    write_json(path, result)
}

pub fn read_result(path: &Path) -> Result<ExecutionResult, FormatError> {
    read_versioned(path, RESULT_VERSION)
}

/// Success rates per step and for the full task, one row per condition label.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalTable {
    pub steps: Vec<String>,
    /// (label, per-step (successes, trials), full-task (successes, trials))
    pub rows: Vec<(String, Vec<(usize, usize)>, (usize, usize))>,
}

fn step_ok(r: &crate::execution_sim::PrimitiveReport) -> bool {
    r.outcome == Outcome::Success && r.key_moments.iter().all(|k| k.contacts_ok)
}

/// Rows keep first-appearance order of labels; unlabelled runs share one row.
/// A step that never ran counts as a failed trial.
pub fn eval_table(results: &[ExecutionResult]) -> EvalTable {
    let mut steps: Vec<String> = Vec::new();
    for r in results {
        for p in &r.primitives {
            if p.index >= steps.len() {
                steps.resize(p.index + 1, String::new());
            }
            if steps[p.index].is_empty() {
                steps[p.index] = format!("{:?} {}", p.kind, p.target);
            }
        }
    }
    let mut rows: Vec<(String, Vec<(usize, usize)>, (usize, usize))> = Vec::new();
    for r in results {
        let label = r.label.clone().unwrap_or_else(|| "unlabelled".into());
        let i = match rows.iter().position(|row| row.0 == label) {
            Some(i) => i,
            None => {
                rows.push((label, vec![(0, 0); steps.len()], (0, 0)));
                rows.len() - 1
            }
        };
        let row = &mut rows[i];
        for (k, cell) in row.1.iter_mut().enumerate() {
            cell.1 += 1;
            if r.primitives.iter().any(|p| p.index == k && step_ok(p)) {
                cell.0 += 1;
            }
        }
        row.2 .1 += 1;
        if r.success {
            row.2 .0 += 1;
        }
    }
    EvalTable { steps, rows }
}

impl fmt::Display for EvalTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Success rates from kinematic simulation (not physical-robot measurements).")?;
        writeln!(f)?;
        write!(f, "| condition |")?;
        for (i, s) in self.steps.iter().enumerate() {
            write!(f, " {}. {} |", i + 1, s)?;
        }
        writeln!(f, " full task |")?;
        writeln!(f, "|---|{}---|", "---|".repeat(self.steps.len()))?;
        let cell = |(ok, n): (usize, usize)| {
            if n == 0 {
                "-".to_string()
            } else {
                format!("{:.0}% ({ok}/{n})", 100.0 * ok as f64 / n as f64)
            }
        };
        for (label, cells, full) in &self.rows {
            write!(f, "| {label} |")?;
            for c in cells {
                write!(f, " {} |", cell(*c))?;
            }
            writeln!(f, " {} |", cell(*full))?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlotOptions {
    pub thresholds: HysteresisParams,
    pub width: u32,
}

impl Default for PlotOptions {
    fn default() -> Self {
        PlotOptions { thresholds: HysteresisParams::default(), width: 900 }
    }
}

struct PairPanel {
    name: String,
    /// (frame, distance mm, in contact)
    rows: Vec<(f64, Option<f64>, bool)>,
}

/// Renders a timeline CSV (distance panels with threshold lines and contact
/// bands) or a trace CSV (joint trajectories), chosen by the header.
pub fn plot_csv(text: &str, file: &Path, opts: &PlotOptions) -> Result<String, FormatError> {
    let mut rd = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let header = rd.headers().map_err(|e| FormatError::new(file, e.to_string()))?.clone();
    let records: Vec<csv::StringRecord> = rd
        .records()
        .collect::<Result<_, _>>()
        .map_err(|e| FormatError::at(file, e.position().map_or(0, |p| p.byte()), e.to_string()))?;
    let num = |r: &csv::StringRecord, i: usize| -> Result<Option<f64>, FormatError> {
        let s = r.get(i).unwrap_or("");
        if s.is_empty() {
            return Ok(None);
        }
        s.parse::<f64>().map(Some).map_err(|_| {
            FormatError::at(file, r.position().map_or(0, |p| p.byte()), format!("column {i}: '{s}' is not a number"))
        })
    };
    let cols: Vec<&str> = header.iter().collect();
    let svg = if cols.starts_with(&["frame", "pair_a", "pair_b", "distance_m", "state"]) {
        let mut panels: Vec<PairPanel> = Vec::new();
        for r in &records {
            let name = format!("{} / {}", &r[1], &r[2]);
            if panels.last().map_or(true, |p| p.name != name) {
                panels.push(PairPanel { name, rows: Vec::new() });
            }
            let frame = num(r, 0)?.unwrap_or(0.0);
            panels.last_mut().unwrap().rows.push((frame, num(r, 3)?.map(|d| d * 1000.0), &r[4] == "1"));
        }
        draw_timelines(&panels, opts)
    } else if cols.first() == Some(&"time") && cols.iter().any(|c| c.starts_with('q')) {
        let joints: Vec<usize> = (1..cols.len()).filter(|&i| cols[i].len() > 1 && cols[i][1..].parse::<usize>().is_ok() && cols[i].starts_with('q')).collect();
        let mut series = vec![Vec::new(); joints.len()];
        for r in &records {
            let t = num(r, 0)?.unwrap_or(0.0);
            for (k, &i) in joints.iter().enumerate() {
                if let Some(v) = num(r, i)? {
                    series[k].push((t, v));
                }
            }
        }
        let names = joints.iter().map(|&i| cols[i].to_string()).collect::<Vec<_>>();
        draw_joints(&names, &series, opts)
    } else {
        return Err(FormatError::at(file, 0, "unrecognised CSV header (expected a contact timeline or a joint trace)"));
    };
    svg.map_err(|e| FormatError::new(file, format!("plotting failed: {e}")))
}

type PlotResult = Result<String, Box<dyn std::error::Error>>;

fn draw_timelines(panels: &[PairPanel], opts: &PlotOptions) -> PlotResult {
    let panel_h = 150u32;
    let mut out = String::new();
    {
        let root = SVGBackend::with_string(&mut out, (opts.width, panel_h * panels.len().max(1) as u32)).into_drawing_area();
        root.fill(&WHITE)?;
        let d_make = opts.thresholds.d_make * 1000.0;
        let d_break = opts.thresholds.d_break * 1000.0;
        // Distances far above the thresholds carry no contact information.
        let y_max = 4.0 * d_break;
        for (area, panel) in root.split_evenly((panels.len().max(1), 1)).iter().zip(panels) {
            let x_max = panel.rows.iter().map(|r| r.0).fold(1.0, f64::max);
            let mut chart = ChartBuilder::on(area)
                .caption(&panel.name, ("sans-serif", 14))
                .margin(6)
                .x_label_area_size(22)
                .y_label_area_size(44)
                .build_cartesian_2d(0.0..x_max, 0.0..y_max)?;
            chart.configure_mesh().y_desc("mm").x_labels(10).y_labels(4).light_line_style(WHITE).draw()?;
            let band = RGBColor(140, 190, 255).mix(0.35).filled();
            chart.draw_series(panel.rows.iter().filter(|r| r.2).map(|r| Rectangle::new([(r.0 - 0.5, 0.0), (r.0 + 0.5, y_max)], band)))?;
            for (level, color) in [(d_make, GREEN), (d_break, RED)] {
                chart.draw_series(LineSeries::new([(0.0, level), (x_max, level)], color.stroke_width(1)))?;
            }
            // Break the line where the pair is absent.
            let mut seg: Vec<(f64, f64)> = Vec::new();
            let mut segs = Vec::new();
            for r in &panel.rows {
                match r.1 {
                    Some(d) => seg.push((r.0, d.min(y_max))),
                    None => segs.push(std::mem::take(&mut seg)),
                }
            }
            segs.push(seg);
            for s in segs.into_iter().filter(|s| !s.is_empty()) {
                chart.draw_series(LineSeries::new(s, BLACK.stroke_width(1)))?;
            }
        }
        root.present()?;
    }
    Ok(out)
}

fn draw_joints(names: &[String], series: &[Vec<(f64, f64)>], opts: &PlotOptions) -> PlotResult {
    let mut out = String::new();
    {
        let root = SVGBackend::with_string(&mut out, (opts.width, 420)).into_drawing_area();
        root.fill(&WHITE)?;
        let pts = series.iter().flatten();
        let (t_max, lo, hi) = pts.fold((1e-9f64, f64::INFINITY, f64::NEG_INFINITY), |(t, lo, hi), p| (t.max(p.0), lo.min(p.1), hi.max(p.1)));
        let (lo, hi) = if lo.is_finite() { (lo - 0.1, hi + 0.1) } else { (-1.0, 1.0) };
        let mut chart = ChartBuilder::on(&root)
            .caption("joint trajectories", ("sans-serif", 16))
            .margin(8)
            .x_label_area_size(30)
            .y_label_area_size(50)
            .build_cartesian_2d(0.0..t_max, lo..hi)?;
        chart.configure_mesh().x_desc("s").y_desc("rad").draw()?;
        for (i, (name, s)) in names.iter().zip(series).enumerate() {
            let color = Palette99::pick(i).to_rgba();
            chart
                .draw_series(LineSeries::new(s.iter().copied(), color.stroke_width(2)))?
                .label(name.as_str())
                .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 14, y)], color));
        }
        chart.configure_series_labels().background_style(WHITE.mix(0.8)).border_style(BLACK).draw()?;
        root.present()?;
    }
    Ok(out)
}
