use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::ScenarioError;

/// Decimated time series of named channels sharing one time axis.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SimTrace {
    pub times: Vec<f64>,
    pub columns: Vec<String>,
    /// One row per sample, `columns.len()` values each.
    pub rows: Vec<Vec<f64>>,
    /// Time at which the run was cut by the divergence guard.
    pub divergence: Option<f64>,
}

impl SimTrace {
    pub fn new(columns: Vec<String>) -> Self {
        SimTrace { times: Vec::new(), columns, rows: Vec::new(), divergence: None }
    }

    pub fn push(&mut self, t: f64, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.times.push(t);
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn channel(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.column_index(name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    /// Components `prefix[0]`, `prefix[1]`, ... in order.
    pub fn vector_channel(&self, prefix: &str) -> Vec<Vec<f64>> {
        (0..)
            .map(|k| self.channel(&format!("{prefix}[{k}]")))
            .take_while(Option::is_some)
            .flatten()
            .collect()
    }

    /// Per-sample Euclidean norm of a vector channel; `None` if absent.
    pub fn norm_channel(&self, prefix: &str) -> Option<Vec<f64>> {
        let comps = self.vector_channel(prefix);
        if comps.is_empty() {
            return None;
        }
        Some((0..self.len()).map(|i| comps.iter().map(|c| c[i] * c[i]).sum::<f64>().sqrt()).collect())
    }

    /// Agents present, from `agent{i}.` column prefixes.
    pub fn agents(&self) -> Vec<usize> {
        let mut ids: Vec<usize> = self
            .columns
            .iter()
            .filter_map(|c| c.strip_prefix("agent")?.split('.').next()?.parse().ok())
            .collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }
}

/// Write `t` followed by every channel. Floats use the shortest
/// representation that parses back to the same value. A diverged trace ends
/// with one row holding the cut time and `NaN` in every channel.
pub fn export_csv(trace: &SimTrace, path: &Path) -> Result<(), ScenarioError> {
    if trace.is_empty() {
        return Err(ScenarioError::Trace("refusing to export an empty trace".into()));
    }
    let io = |source| ScenarioError::Io { path: path.display().to_string(), source };
    let file = File::create(path).map_err(io)?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    let header = std::iter::once("t").chain(trace.columns.iter().map(String::as_str));
    w.write_record(header).map_err(|e| ScenarioError::Trace(e.to_string()))?;
    let mut buf = Vec::with_capacity(trace.columns.len() + 1);
    for (t, row) in trace.times.iter().zip(&trace.rows) {
        buf.clear();
        buf.push(t.to_string());
        buf.extend(row.iter().map(f64::to_string));
        w.write_record(&buf).map_err(|e| ScenarioError::Trace(e.to_string()))?;
    }
    if let Some(t) = trace.divergence {
        buf.clear();
        buf.push(t.to_string());
        buf.extend(std::iter::repeat_n("NaN".to_string(), trace.columns.len()));
        w.write_record(&buf).map_err(|e| ScenarioError::Trace(e.to_string()))?;
    }
    let mut inner = w.into_inner().map_err(|e| ScenarioError::Trace(e.to_string()))?;
    inner.flush().map_err(io)
}

pub fn read_csv(path: &Path) -> Result<SimTrace, ScenarioError> {
    let file = File::open(path).map_err(|source| ScenarioError::Io { path: path.display().to_string(), source })?;
    let mut r = csv::Reader::from_reader(std::io::BufReader::new(file));
    let headers = r.headers().map_err(|e| ScenarioError::Trace(e.to_string()))?.clone();
    if headers.get(0) != Some("t") {
        return Err(ScenarioError::Trace("first column must be `t`".into()));
    }
    let mut trace = SimTrace::new(headers.iter().skip(1).map(str::to_string).collect());
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| ScenarioError::Trace(e.to_string()))?;
        let parse = |s: &str| {
            s.parse::<f64>().map_err(|_| ScenarioError::Trace(format!("row {}: bad number `{s}`", line + 2)))
        };
        let t = parse(&rec[0])?;
        let row = rec.iter().skip(1).map(parse).collect::<Result<Vec<_>, _>>()?;
        if row.len() != trace.columns.len() {
            return Err(ScenarioError::Trace(format!("row {} has {} values", line + 2, row.len() + 1)));
        }
        trace.push(t, row);
    }
    let cut = trace.rows.last().is_some_and(|r| !r.is_empty() && r.iter().all(|v| v.is_nan()));
    if cut {
        trace.rows.pop();
        trace.divergence = trace.times.pop();
    }
    Ok(trace)
}
