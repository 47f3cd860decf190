//! CSV export and import for histories and trial traces.
//!
//! Floats are written with nine significant digits in their shortest form.

use std::fs;
use std::path::{Path, PathBuf};

use crate::bo::OptimizationHistory;
use crate::experiment::ProbeResult;
use crate::kinematics::Leg;
use crate::params::{ParamVector, DIM};
use crate::sim::TrialTrace;

pub const HISTORY_HEADER: [&str; 9] = ["iter", "x0", "x1", "x2", "x3", "x4", "support_height_m", "fitness", "best_so_far"];
pub const TRACE_HEADER: [&str; 13] = [
    "t", "z", "roll", "pitch", "rope_N", "hipFL", "kneeFL", "hipFR", "kneeFR", "hipRL", "kneeRL", "hipRR", "kneeRR",
];
pub const PROBE_HEADER: [&str; 8] = ["source_iter", "x0", "x1", "x2", "x3", "x4", "support_height_m", "fitness"];

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {source}", path.display())]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{}: line {line}: {msg}", path.display())]
    Parse { path: PathBuf, line: usize, msg: String },
}

/// Nine significant digits, shortest round-trip form.
pub fn format_float(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let rounded: f64 = format!("{x:.8e}").parse().expect("formatted float parses");
    rounded.to_string()
}

fn opt_float(x: Option<f64>) -> String {
    x.map(format_float).unwrap_or_default()
}

fn to_csv(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("writing to memory");
    for row in rows {
        w.write_record(&row).expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("flushing memory writer")).expect("csv output is utf-8")
}

pub fn history_csv(history: &OptimizationHistory) -> String {
    let best = history.best_so_far();
    to_csv(
        &HISTORY_HEADER,
        history.records.iter().zip(best).map(|(r, b)| {
            let mut row = vec![r.iteration.to_string()];
            row.extend(r.params.to_array().iter().map(|&v| format_float(v)));
            row.push(opt_float(r.support_height_m));
            row.push(format_float(r.fitness));
            row.push(format_float(b));
            row
        }),
    )
}

pub fn trace_csv(trace: &TrialTrace) -> String {
    to_csv(
        &TRACE_HEADER,
        trace.samples.iter().map(|s| {
            let b = &s.body;
            let mut row: Vec<String> = [b.position.z, b.orientation.roll, b.orientation.pitch, s.sensors.rope_tension]
                .iter()
                .map(|&v| format_float(v))
                .collect();
            row.insert(0, format_float(s.t));
            for leg in Leg::ALL {
                let q = s.targets.leg(leg);
                row.push(format_float(q.flexion));
                row.push(format_float(q.knee));
            }
            row
        }),
    )
}

pub fn probe_csv(probe: &ProbeResult) -> String {
    let mut row = vec![probe.source_iteration.to_string()];
    row.extend(probe.params.to_array().iter().map(|&v| format_float(v)));
    row.push(format_float(probe.height_m));
    row.push(format_float(probe.fitness));
    to_csv(&PROBE_HEADER, [row])
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), IoError> {
    fs::write(path, contents).map_err(|source| IoError::Io { path: path.to_path_buf(), source })
}

pub fn write_history(history: &OptimizationHistory, path: &Path) -> Result<(), IoError> {
    write_file(path, &history_csv(history))
}

pub fn write_trace(trace: &TrialTrace, path: &Path) -> Result<(), IoError> {
    write_file(path, &trace_csv(trace))
}

#[derive(Debug, Clone, PartialEq)]
pub struct HistoryRow {
    pub iteration: usize,
    pub params: ParamVector,
    pub support_height_m: Option<f64>,
    pub fitness: f64,
    pub best_so_far: f64,
}

/// Column-wise view of an exported trace.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TraceTable {
    pub t: Vec<f64>,
    pub z: Vec<f64>,
    pub roll: Vec<f64>,
    pub pitch: Vec<f64>,
    pub rope_n: Vec<f64>,
    /// `[flexion, knee]` per leg in FL, FR, RL, RR order.
    pub joints: Vec<[[f64; 2]; 4]>,
}

impl TraceTable {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Median spacing of the time column, if there are at least two rows.
    pub fn sample_interval(&self) -> Option<f64> {
        let mut d: Vec<f64> = self.t.windows(2).map(|w| w[1] - w[0]).collect();
        if d.is_empty() {
            return None;
        }
        d.sort_by(f64::total_cmp);
        Some(d[d.len() / 2])
    }
}

fn read_records(path: &Path, header: &[&str]) -> Result<Vec<csv::StringRecord>, IoError> {
    let mut rdr = csv::Reader::from_path(path).map_err(|source| IoError::Csv { path: path.to_path_buf(), source })?;
    let got = rdr.headers().map_err(|source| IoError::Csv { path: path.to_path_buf(), source })?.clone();
    if got.iter().ne(header.iter().copied()) {
        return Err(IoError::Parse { path: path.to_path_buf(), line: 1, msg: format!("expected header {}", header.join(",")) });
    }
    rdr.records().map(|r| r.map_err(|source| IoError::Csv { path: path.to_path_buf(), source })).collect()
}

fn field(rec: &csv::StringRecord, i: usize, path: &Path, line: usize) -> Result<f64, IoError> {
    let s = rec.get(i).unwrap_or("");
    s.trim()
        .parse()
        .map_err(|_| IoError::Parse { path: path.to_path_buf(), line, msg: format!("column {} is not a number: {s:?}", i + 1) })
}

pub fn read_history(path: &Path) -> Result<Vec<HistoryRow>, IoError> {
    let recs = read_records(path, &HISTORY_HEADER)?;
    recs.iter()
        .enumerate()
        .map(|(i, rec)| {
            let line = i + 2;
            let iteration = rec.get(0).unwrap_or("").parse().map_err(|_| IoError::Parse {
                path: path.to_path_buf(),
                line,
                msg: "bad iteration index".into(),
            })?;
            let mut x = [0.0; DIM];
            for (d, v) in x.iter_mut().enumerate() {
                *v = field(rec, d + 1, path, line)?;
            }
            let support_height_m = match rec.get(6).unwrap_or("").trim() {
                "" => None,
                _ => Some(field(rec, 6, path, line)?),
            };
            Ok(HistoryRow {
                iteration,
                params: ParamVector::from_array(x),
                support_height_m,
                fitness: field(rec, 7, path, line)?,
                best_so_far: field(rec, 8, path, line)?,
            })
        })
        .collect()
}

pub fn read_trace(path: &Path) -> Result<TraceTable, IoError> {
    let recs = read_records(path, &TRACE_HEADER)?;
    let mut tab = TraceTable::default();
    for (i, rec) in recs.iter().enumerate() {
        let line = i + 2;
        let v: Vec<f64> = (0..TRACE_HEADER.len()).map(|c| field(rec, c, path, line)).collect::<Result<_, _>>()?;
        tab.t.push(v[0]);
        tab.z.push(v[1]);
        tab.roll.push(v[2]);
        tab.pitch.push(v[3]);
        tab.rope_n.push(v[4]);
        tab.joints.push([[v[5], v[6]], [v[7], v[8]], [v[9], v[10]], [v[11], v[12]]]);
    }
    Ok(tab)
}

/// Reads a parameter vector from either `x0 = ...` lines or a single row of
/// five numbers separated by commas or whitespace. `#` starts a comment.
pub fn parse_params(text: &str) -> Result<ParamVector, String> {
    let lines: Vec<&str> =
        text.lines().map(|l| l.split('#').next().unwrap_or("").trim()).filter(|l| !l.is_empty()).collect();
    let mut x = [f64::NAN; DIM];
    if lines.iter().any(|l| l.contains('=')) {
        for l in &lines {
            let (k, v) = l.split_once('=').ok_or_else(|| format!("expected key = value, got {l:?}"))?;
            let d = match k.trim() {
                "x0" | "hop_height_mm" => 0,
                "x1" | "pitch_kp" => 1,
                "x2" | "pitch_kv" => 2,
                "x3" | "roll_kp" => 3,
                "x4" | "roll_kv" => 4,
                other => return Err(format!("unknown parameter {other:?}")),
            };
            x[d] = v.trim().parse().map_err(|_| format!("bad number for {}: {:?}", k.trim(), v.trim()))?;
        }
    } else {
        let nums: Vec<&str> = lines.iter().flat_map(|l| l.split([',', ' ', '\t'])).filter(|s| !s.is_empty()).collect();
        if nums.len() != DIM {
            return Err(format!("expected {DIM} numbers, got {}", nums.len()));
        }
        for (d, s) in nums.iter().enumerate() {
            x[d] = s.parse().map_err(|_| format!("bad number {s:?}"))?;
        }
    }
    let p = ParamVector::from_array(x);
    if !p.is_finite() {
        return Err("all five parameters x0..x4 must be given".into());
    }
    Ok(p)
}
