//! Synchronized input/output records and their CSV representation.
//!
//! File layout:
//!
//! ```text
//! # Ts=0.04
//! t,u1,u2,y1,y1_clean
//! 0,1,-1,0,0
//! 0.04,1,-1,0.0123,0.0120
//! ```
//!
//! The `# Ts=` line is required on write and preferred on read; without it
//! the sampling time is taken from the first two `t` values. A
//! `# transient=<k>` comment, when present, carries the number of leading
//! samples excluded from loss sums.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesDataset {
    sampling_time: f64,
    inputs: Vec<Vec<f64>>,
    outputs: Vec<Vec<f64>>,
    clean_outputs: Option<Vec<Vec<f64>>>,
    transient: usize,
}

impl TimeSeriesDataset {
    pub fn new(sampling_time: f64, inputs: Vec<Vec<f64>>, outputs: Vec<Vec<f64>>) -> Result<Self> {
        let ds = TimeSeriesDataset {
            sampling_time,
            inputs,
            outputs,
            clean_outputs: None,
            transient: 0,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn with_clean_outputs(mut self, clean: Vec<Vec<f64>>) -> Result<Self> {
        if clean.len() != self.outputs.len() {
            return Err(Error::arg(
                "clean outputs must match the number of output channels",
            ));
        }
        self.clean_outputs = Some(clean);
        self.validate()?;
        Ok(self)
    }

    /// Marks the first `k` samples as transient (excluded from loss sums).
    pub fn with_transient(mut self, k: usize) -> Self {
        self.transient = k;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.sampling_time > 0.0) || !self.sampling_time.is_finite() {
            return Err(Error::arg(format!(
                "sampling time must be positive, got {}",
                self.sampling_time
            )));
        }
        let n = self.len();
        if n == 0 {
            return Err(Error::arg(
                "dataset needs at least one channel with N >= 1 samples",
            ));
        }
        let all = self
            .inputs
            .iter()
            .chain(&self.outputs)
            .chain(self.clean_outputs.iter().flatten());
        for ch in all {
            if ch.len() != n {
                return Err(Error::arg(format!(
                    "channel lengths differ ({} vs {n})",
                    ch.len()
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.inputs
            .first()
            .or(self.outputs.first())
            .map(|c| c.len())
            .unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn sampling_time(&self) -> f64 {
        self.sampling_time
    }

    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[Vec<f64>] {
        &self.outputs
    }

    pub fn clean_outputs(&self) -> Option<&[Vec<f64>]> {
        self.clean_outputs.as_deref()
    }

    pub fn transient(&self) -> usize {
        self.transient
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len())
            .map(|k| k as f64 * self.sampling_time)
            .collect()
    }

    /// Single-output view keeping all inputs.
    pub fn select_output(&self, output: usize) -> Result<TimeSeriesDataset> {
        let y = self
            .outputs
            .get(output)
            .ok_or_else(|| Error::arg(format!("no output channel {output}")))?;
        Ok(TimeSeriesDataset {
            sampling_time: self.sampling_time,
            inputs: self.inputs.clone(),
            outputs: vec![y.clone()],
            clean_outputs: self.clean_outputs.as_ref().map(|c| vec![c[output].clone()]),
            transient: self.transient,
        })
    }

    /// Replaces output channels, dropping any clean record.
    pub fn with_outputs(&self, outputs: Vec<Vec<f64>>) -> Result<TimeSeriesDataset> {
        let ds = TimeSeriesDataset {
            sampling_time: self.sampling_time,
            inputs: self.inputs.clone(),
            outputs,
            clean_outputs: None,
            transient: self.transient,
        };
        ds.validate()?;
        Ok(ds)
    }

    /// Keeps every `factor`-th sample starting at the first.
    pub fn decimate(&self, factor: usize) -> Result<TimeSeriesDataset> {
        if factor == 0 {
            return Err(Error::arg("decimation factor must be >= 1"));
        }
        let pick = |c: &Vec<f64>| c.iter().step_by(factor).copied().collect::<Vec<f64>>();
        Ok(TimeSeriesDataset {
            sampling_time: self.sampling_time * factor as f64,
            inputs: self.inputs.iter().map(pick).collect(),
            outputs: self.outputs.iter().map(pick).collect(),
            clean_outputs: self
                .clean_outputs
                .as_ref()
                .map(|c| c.iter().map(pick).collect()),
            transient: self.transient.div_ceil(factor),
        })
    }

    pub(crate) fn set_channels(
        &mut self,
        inputs: Vec<Vec<f64>>,
        outputs: Vec<Vec<f64>>,
        clean: Option<Vec<Vec<f64>>>,
    ) {
        self.inputs = inputs;
        self.outputs = outputs;
        self.clean_outputs = clean;
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut w = w;
        writeln!(w, "# Ts={}", self.sampling_time)?;
        if self.transient > 0 {
            writeln!(w, "# transient={}", self.transient)?;
        }
        let mut wr = csv::Writer::from_writer(w);
        let mut header = vec!["t".to_string()];
        header.extend((1..=self.inputs.len()).map(|i| format!("u{i}")));
        header.extend((1..=self.outputs.len()).map(|i| format!("y{i}")));
        if let Some(c) = &self.clean_outputs {
            header.extend((1..=c.len()).map(|i| format!("y{i}_clean")));
        }
        wr.write_record(&header).map_err(csv_err)?;
        let clean = self.clean_outputs.as_deref().unwrap_or(&[]);
        for k in 0..self.len() {
            let mut row = vec![(k as f64 * self.sampling_time).to_string()];
            for ch in self.inputs.iter().chain(&self.outputs).chain(clean) {
                row.push(ch[k].to_string());
            }
            wr.write_record(&row).map_err(csv_err)?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)
            .expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("csv output is utf-8")
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(f))
    }

    pub fn read_csv<R: Read>(mut r: R) -> Result<Self> {
        let mut text = String::new();
        r.read_to_string(&mut text)?;
        parse_csv(&text)
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        parse_csv(&text)
    }
}

fn csv_err(e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
    Error::Input {
        line,
        message: e.to_string(),
    }
}

enum Column {
    Time,
    Input,
    Output,
    Clean,
}

fn parse_csv(text: &str) -> Result<TimeSeriesDataset> {
    let mut ts_meta: Option<f64> = None;
    let mut transient = 0usize;
    for (i, line) in text.lines().enumerate() {
        let l = line.trim();
        let Some(body) = l.strip_prefix('#') else {
            break;
        };
        let body = body.trim();
        if let Some(v) = body.strip_prefix("Ts=") {
            ts_meta = Some(v.trim().parse().map_err(|_| Error::Input {
                line: i + 1,
                message: format!("bad sampling time '{v}'"),
            })?);
        } else if let Some(v) = body.strip_prefix("transient=") {
            transient = v.trim().parse().map_err(|_| Error::Input {
                line: i + 1,
                message: format!("bad transient count '{v}'"),
            })?;
        }
    }

    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = rdr.headers().map_err(csv_err)?.clone();
    let header_line = text
        .lines()
        .position(|l| !l.trim_start().starts_with('#'))
        .unwrap_or(0)
        + 1;
    let mut cols = Vec::with_capacity(headers.len());
    let (mut n_in, mut n_out, mut n_clean) = (0, 0, 0);
    for (j, h) in headers.iter().enumerate() {
        let c = if h == "t" && j == 0 {
            Column::Time
        } else if h.ends_with("_clean") && h.starts_with('y') {
            n_clean += 1;
            Column::Clean
        } else if h.starts_with('u') && h[1..].parse::<usize>().is_ok() {
            n_in += 1;
            Column::Input
        } else if h.starts_with('y') && h[1..].parse::<usize>().is_ok() {
            n_out += 1;
            Column::Output
        } else {
            return Err(Error::Input {
                line: header_line,
                message: format!("unexpected column '{h}'"),
            });
        };
        cols.push(c);
    }
    if !matches!(cols.first(), Some(Column::Time)) {
        return Err(Error::Input {
            line: header_line,
            message: "first column must be 't'".into(),
        });
    }
    if n_clean != 0 && n_clean != n_out {
        return Err(Error::Input {
            line: header_line,
            message: "clean columns must match output columns".into(),
        });
    }
    let mut t = Vec::new();
    let mut ins = vec![Vec::new(); n_in];
    let mut outs = vec![Vec::new(); n_out];
    let mut clean = vec![Vec::new(); n_clean];
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        if rec.len() != cols.len() {
            return Err(Error::Input {
                line,
                message: format!("expected {} fields, found {}", cols.len(), rec.len()),
            });
        }
        let (mut i, mut o, mut c) = (0, 0, 0);
        for (field, col) in rec.iter().zip(&cols) {
            let v: f64 = field.parse().map_err(|_| Error::Input {
                line,
                message: format!("not a number: '{field}'"),
            })?;
            match col {
                Column::Time => t.push(v),
                Column::Input => {
                    ins[i].push(v);
                    i += 1;
                }
                Column::Output => {
                    outs[o].push(v);
                    o += 1;
                }
                Column::Clean => {
                    clean[c].push(v);
                    c += 1;
                }
            }
        }
    }
    if t.is_empty() {
        return Err(Error::Input {
            line: header_line,
            message: "no data rows".into(),
        });
    }
    let ts = match ts_meta {
        Some(v) => v,
        None if t.len() >= 2 => t[1] - t[0],
        None => {
            return Err(Error::Input {
                line: 1,
                message: "sampling time missing: need '# Ts=' or two rows".into(),
            })
        }
    };
    let mut ds = TimeSeriesDataset::new(ts, ins, outs).map_err(|e| Error::Input {
        line: 1,
        message: e.to_string(),
    })?;
    if n_clean > 0 {
        ds = ds.with_clean_outputs(clean)?;
    }
    Ok(ds.with_transient(transient))
}
