//! CSV result rows and their per-point aggregates.

use std::collections::BTreeMap;
use std::fs::File;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sgl_core::MetricReport;

use crate::error::CliError;

pub const STATUS_OK: &str = "ok";

pub const RESULT_HEADER: &str = "method,seed,N,B,H,K,noise_sigma,tau,relerr,relerr_plus,relerr_minus,\
fscore,fscore_plus,fscore_minus,precision,recall,nmi,outer_iters_used,wall_ms,status";

/// Where a trial sits in an experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub n: usize,
    pub b: usize,
    pub h: usize,
    pub k: usize,
    pub noise_sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub method: String,
    pub seed: u64,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "B")]
    pub b: usize,
    #[serde(rename = "H")]
    pub h: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub noise_sigma: f64,
    pub tau: f64,
    pub relerr: f64,
    pub relerr_plus: f64,
    pub relerr_minus: f64,
    pub fscore: f64,
    pub fscore_plus: f64,
    pub fscore_minus: f64,
    pub precision: f64,
    pub recall: f64,
    pub nmi: f64,
    pub outer_iters_used: usize,
    pub wall_ms: f64,
    pub status: String,
}

impl ResultRow {
    pub fn ok(method: &str, seed: u64, point: Point, r: &MetricReport, outer_iters_used: usize, wall_ms: f64) -> Self {
        Self {
            method: method.to_string(),
            seed,
            n: point.n,
            b: point.b,
            h: point.h,
            k: point.k,
            noise_sigma: point.noise_sigma,
            tau: r.tau,
            relerr: r.relerr,
            relerr_plus: r.relerr_plus,
            relerr_minus: r.relerr_minus,
            fscore: r.fscore,
            fscore_plus: r.fscore_plus,
            fscore_minus: r.fscore_minus,
            precision: r.precision,
            recall: r.recall,
            nmi: r.nmi,
            outer_iters_used,
            wall_ms,
            status: STATUS_OK.to_string(),
        }
    }

    /// A row whose metrics are all NaN and whose status carries the failure.
    pub fn failed(method: &str, seed: u64, point: Point, tau: f64, outer_iters_used: usize, wall_ms: f64, reason: &str) -> Self {
        let nan = f64::NAN;
        Self {
            method: method.to_string(),
            seed,
            n: point.n,
            b: point.b,
            h: point.h,
            k: point.k,
            noise_sigma: point.noise_sigma,
            tau,
            relerr: nan,
            relerr_plus: nan,
            relerr_minus: nan,
            fscore: nan,
            fscore_plus: nan,
            fscore_minus: nan,
            precision: nan,
            recall: nan,
            nmi: nan,
            outer_iters_used,
            wall_ms,
            status: format!("failed: {reason}"),
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == STATUS_OK
    }

    fn point_key(&self) -> (String, usize, usize, usize, usize, u64) {
        (self.method.clone(), self.n, self.b, self.h, self.k, self.noise_sigma.to_bits())
    }
}

pub fn create_csv(path: &Path) -> Result<csv::Writer<File>, CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::output(dir, e))?;
    }
    csv::Writer::from_path(path).map_err(|e| CliError::output(path, e))
}

pub fn write_rows(path: &Path, rows: &[ResultRow]) -> Result<(), CliError> {
    let mut w = create_csv(path)?;
    if rows.is_empty() {
        w.write_record(RESULT_HEADER.split(',')).map_err(|e| CliError::output(path, e))?;
    }
    for row in rows {
        w.serialize(row).map_err(|e| CliError::output(path, e))?;
    }
    w.flush().map_err(|e| CliError::output(path, e))
}

pub fn read_rows(path: &Path) -> Result<Vec<ResultRow>, CliError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| CliError::data(path, e))?;
    r.deserialize().map(|row| row.map_err(|e| CliError::data(path, e))).collect()
}

/// Writes row batches in submission order while they may complete out of
/// order. Each batch is flushed as soon as every earlier one is written.
pub struct OrderedWriter {
    inner: csv::Writer<File>,
    path: std::path::PathBuf,
    next: usize,
    pending: BTreeMap<usize, Vec<ResultRow>>,
    written: Vec<ResultRow>,
}

impl OrderedWriter {
    pub fn create(path: &Path) -> Result<Self, CliError> {
        Ok(Self {
            inner: create_csv(path)?,
            path: path.to_path_buf(),
            next: 0,
            pending: BTreeMap::new(),
            written: Vec::new(),
        })
    }

    pub fn submit(&mut self, index: usize, rows: Vec<ResultRow>) -> Result<(), CliError> {
        self.pending.insert(index, rows);
        while let Some(rows) = self.pending.remove(&self.next) {
            for row in &rows {
                self.inner.serialize(row).map_err(|e| CliError::output(&self.path, e))?;
            }
            self.inner.flush().map_err(|e| CliError::output(&self.path, e))?;
            self.written.extend(rows);
            self.next += 1;
        }
        Ok(())
    }

    /// Every row written, in file order.
    pub fn finish(mut self) -> Result<Vec<ResultRow>, CliError> {
        if !self.pending.is_empty() {
            return Err(CliError::Output(format!(
                "{}: batch {} never arrived",
                self.path.display(),
                self.next
            )));
        }
        if self.written.is_empty() {
            self.inner.write_record(RESULT_HEADER.split(',')).map_err(|e| CliError::output(&self.path, e))?;
        }
        self.inner.flush().map_err(|e| CliError::output(&self.path, e))?;
        Ok(self.written)
    }
}

/// Mean and standard error of the non-NaN values. The standard error uses
/// the unbiased sample variance and is 0 for a single value.
pub fn mean_stderr(values: impl IntoIterator<Item = f64>) -> (f64, f64) {
    let v: Vec<f64> = values.into_iter().filter(|x| !x.is_nan()).collect();
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() == 1 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub method: String,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "B")]
    pub b: usize,
    #[serde(rename = "H")]
    pub h: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub noise_sigma: f64,
    pub tau: f64,
    pub trials: usize,
    pub failed: usize,
    pub relerr_mean: f64,
    pub relerr_se: f64,
    pub relerr_plus_mean: f64,
    pub relerr_plus_se: f64,
    pub relerr_minus_mean: f64,
    pub relerr_minus_se: f64,
    pub fscore_mean: f64,
    pub fscore_se: f64,
    pub fscore_plus_mean: f64,
    pub fscore_plus_se: f64,
    pub fscore_minus_mean: f64,
    pub fscore_minus_se: f64,
    pub precision_mean: f64,
    pub precision_se: f64,
    pub recall_mean: f64,
    pub recall_se: f64,
    pub nmi_mean: f64,
    pub nmi_se: f64,
    pub wall_ms_mean: f64,
    pub wall_ms_se: f64,
}

/// Groups rows in first-appearance order.
fn group_by<K: PartialEq, T>(items: impl IntoIterator<Item = T>, key: impl Fn(&T) -> K) -> Vec<Vec<T>> {
    let mut keys: Vec<K> = Vec::new();
    let mut groups: Vec<Vec<T>> = Vec::new();
    for item in items {
        let k = key(&item);
        match keys.iter().position(|x| *x == k) {
            Some(i) => groups[i].push(item),
            None => {
                keys.push(k);
                groups.push(vec![item]);
            }
        }
    }
    groups
}

/// Per (method, point, tau) means and standard errors over successful trials.
pub fn aggregate(rows: &[ResultRow]) -> Vec<AggregateRow> {
    group_by(rows, |r| (r.point_key(), r.tau.to_bits()))
        .into_iter()
        .map(|group| {
            let first = group[0];
            let ok: Vec<&ResultRow> = group.iter().copied().filter(|r| r.is_ok()).collect();
            let stat = |f: fn(&ResultRow) -> f64| mean_stderr(ok.iter().map(|r| f(r)));
            let (relerr_mean, relerr_se) = stat(|r| r.relerr);
            let (relerr_plus_mean, relerr_plus_se) = stat(|r| r.relerr_plus);
            let (relerr_minus_mean, relerr_minus_se) = stat(|r| r.relerr_minus);
            let (fscore_mean, fscore_se) = stat(|r| r.fscore);
            let (fscore_plus_mean, fscore_plus_se) = stat(|r| r.fscore_plus);
            let (fscore_minus_mean, fscore_minus_se) = stat(|r| r.fscore_minus);
            let (precision_mean, precision_se) = stat(|r| r.precision);
            let (recall_mean, recall_se) = stat(|r| r.recall);
            let (nmi_mean, nmi_se) = stat(|r| r.nmi);
            let (wall_ms_mean, wall_ms_se) = stat(|r| r.wall_ms);
            AggregateRow {
                method: first.method.clone(),
                n: first.n,
                b: first.b,
                h: first.h,
                k: first.k,
                noise_sigma: first.noise_sigma,
                tau: first.tau,
                trials: ok.len(),
                failed: group.len() - ok.len(),
                relerr_mean,
                relerr_se,
                relerr_plus_mean,
                relerr_plus_se,
                relerr_minus_mean,
                relerr_minus_se,
                fscore_mean,
                fscore_se,
                fscore_plus_mean,
                fscore_plus_se,
                fscore_minus_mean,
                fscore_minus_se,
                precision_mean,
                precision_se,
                recall_mean,
                recall_se,
                nmi_mean,
                nmi_se,
                wall_ms_mean,
                wall_ms_se,
            }
        })
        .collect()
}

/// Best F-score over the tau grid, averaged per (method, point).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestRow {
    pub method: String,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "B")]
    pub b: usize,
    #[serde(rename = "H")]
    pub h: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub noise_sigma: f64,
    pub trials: usize,
    pub fscore_mean: f64,
    pub fscore_se: f64,
    pub relerr_mean: f64,
    pub relerr_se: f64,
}

pub fn best_over_tau(rows: &[ResultRow]) -> Vec<BestRow> {
    let ok = rows.iter().filter(|r| r.is_ok());
    group_by(ok, |r| r.point_key())
        .into_iter()
        .map(|group| {
            let first = group[0];
            let trials = group_by(group.iter().copied(), |r| r.seed);
            let best: Vec<&ResultRow> = trials
                .iter()
                .map(|t| {
                    t.iter()
                        .copied()
                        .reduce(|a, b| if b.fscore > a.fscore { b } else { a })
                        .expect("groups are non-empty")
                })
                .collect();
            let (fscore_mean, fscore_se) = mean_stderr(best.iter().map(|r| r.fscore));
            let (relerr_mean, relerr_se) = mean_stderr(best.iter().map(|r| r.relerr));
            BestRow {
                method: first.method.clone(),
                n: first.n,
                b: first.b,
                h: first.h,
                k: first.k,
                noise_sigma: first.noise_sigma,
                trials: best.len(),
                fscore_mean,
                fscore_se,
                relerr_mean,
                relerr_se,
            }
        })
        .collect()
}

pub fn write_serialized<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), CliError> {
    let mut w = create_csv(path)?;
    for row in rows {
        w.serialize(row).map_err(|e| CliError::output(path, e))?;
    }
    w.flush().map_err(|e| CliError::output(path, e))
}
