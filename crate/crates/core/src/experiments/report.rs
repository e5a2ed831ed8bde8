use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// One (seed, method) outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodRecord {
    pub seed: u64,
    /// Method label, prefixed by the output name for multi-output scenarios.
    pub method: String,
    /// Simulation relative error on the clean identification output.
    pub re: f64,
    /// Step-response relative error over the full horizon.
    pub step_re_full: Option<f64>,
    /// Step-response relative error over the fast window.
    pub step_re_fast: Option<f64>,
    /// Order picked by an FOE scan, when one was run.
    pub selected_order: Option<usize>,
}

/// Step responses of the true system and of every seed's model.
#[derive(Debug, Clone, PartialEq)]
pub struct StepSeries {
    pub key: String,
    pub sampling_time: f64,
    pub truth: Vec<f64>,
    pub per_seed: Vec<(u64, Vec<f64>)>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub count: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

impl Summary {
    pub fn of(values: &[f64]) -> Option<Summary> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        Some(Summary {
            count: v.len(),
            min: v[0],
            q1: quantile(&v, 0.25),
            median: quantile(&v, 0.5),
            q3: quantile(&v, 0.75),
            max: v[v.len() - 1],
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloReport {
    pub scenario: String,
    pub records: Vec<MethodRecord>,
    pub steps: Vec<StepSeries>,
}

impl MonteCarloReport {
    /// Method labels in first-appearance order.
    pub fn methods(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for r in &self.records {
            if !out.contains(&r.method) {
                out.push(r.method.clone());
            }
        }
        out
    }

    pub fn records_for<'a>(
        &'a self,
        method: &'a str,
    ) -> impl Iterator<Item = &'a MethodRecord> + 'a {
        self.records.iter().filter(move |r| r.method == method)
    }

    pub fn res(&self, method: &str) -> Vec<f64> {
        self.records_for(method).map(|r| r.re).collect()
    }

    pub fn step_full(&self, method: &str) -> Vec<f64> {
        self.records_for(method)
            .filter_map(|r| r.step_re_full)
            .collect()
    }

    pub fn step_fast(&self, method: &str) -> Vec<f64> {
        self.records_for(method)
            .filter_map(|r| r.step_re_fast)
            .collect()
    }

    pub fn summary(&self, method: &str) -> Option<Summary> {
        Summary::of(&self.res(method))
    }

    pub fn report_csv(&self) -> String {
        let mut s = String::from("seed,method,re,step_re_full,step_re_fast,selected_order\n");
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.records {
            s.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.seed,
                r.method,
                r.re,
                opt(r.step_re_full),
                opt(r.step_re_fast),
                r.selected_order.map(|o| o.to_string()).unwrap_or_default()
            ));
        }
        s
    }

    /// Box-plot statistics per method.
    pub fn summary_csv(&self) -> String {
        let mut s = String::from("method,count,min,q1,median,q3,max\n");
        for m in self.methods() {
            if let Some(x) = self.summary(&m) {
                s.push_str(&format!(
                    "{m},{},{},{},{},{},{}\n",
                    x.count, x.min, x.q1, x.median, x.q3, x.max
                ));
            }
        }
        s
    }

    pub fn steps_csv(series: &StepSeries) -> String {
        let mut s = String::from("time,true");
        for (seed, _) in &series.per_seed {
            s.push_str(&format!(",seed_{seed}"));
        }
        s.push('\n');
        for (k, t) in series.truth.iter().enumerate() {
            s.push_str(&format!("{},{}", k as f64 * series.sampling_time, t));
            for (_, y) in &series.per_seed {
                s.push_str(&format!(",{}", y[k]));
            }
            s.push('\n');
        }
        s
    }

    /// Writes `report.csv`, `summary.csv` and one `steps_<key>.csv` per series.
    pub fn write_dir(&self, dir: impl AsRef<Path>) -> Result<Vec<std::path::PathBuf>> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        let mut files: BTreeMap<String, String> = BTreeMap::new();
        files.insert("report.csv".into(), self.report_csv());
        files.insert("summary.csv".into(), self.summary_csv());
        for st in &self.steps {
            let name = format!("steps_{}.csv", st.key.replace(['/', ' '], "_"));
            if files.contains_key(&name) {
                return Err(Error::arg(format!("duplicate step series '{}'", st.key)));
            }
            files.insert(name, Self::steps_csv(st));
        }
        let mut written = Vec::new();
        for (name, body) in files {
            let path = dir.join(name);
            std::fs::File::create(&path)?.write_all(body.as_bytes())?;
            written.push(path);
        }
        Ok(written)
    }
}
