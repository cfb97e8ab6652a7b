//! Signed-graph recovery metrics: RelErr, precision/recall/F-score per sign
//! and NMI between edge labelings.
//!
//! Continuous Laplacians are turned into edge labels by a relative threshold
//! on each sign's adjacency weights.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::graph::{adjacency_from_laplacian, pair_count, LaplacianPair};

/// Detection thresholds tried when reporting the best F-score.
pub const TAU_GRID: [f64; 5] = [0.01, 0.05, 0.1, 0.2, 0.3];
pub const DEFAULT_TAU: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EdgeLabel {
    Positive,
    Negative,
    None,
}

impl EdgeLabel {
    fn index(self) -> usize {
        match self {
            EdgeLabel::Positive => 0,
            EdgeLabel::Negative => 1,
            EdgeLabel::None => 2,
        }
    }
}

/// One label per unordered node pair, lexicographic `(i, j)`, `i < j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeLabels {
    b: usize,
    labels: Vec<EdgeLabel>,
}

impl EdgeLabels {
    pub fn new(b: usize, labels: Vec<EdgeLabel>) -> Result<Self> {
        if labels.len() != pair_count(b) {
            return Err(Error::Dimension {
                expected: pair_count(b),
                got: labels.len(),
            });
        }
        Ok(Self { b, labels })
    }

    pub fn none(b: usize) -> Self {
        Self {
            b,
            labels: vec![EdgeLabel::None; pair_count(b)],
        }
    }

    /// Labels from the signs of a signed adjacency matrix.
    pub fn from_signed(w: &DMatrix<f64>) -> Self {
        let b = w.nrows();
        let mut labels = Vec::with_capacity(pair_count(b));
        for i in 0..b {
            for j in (i + 1)..b {
                labels.push(if w[(i, j)] > 0.0 {
                    EdgeLabel::Positive
                } else if w[(i, j)] < 0.0 {
                    EdgeLabel::Negative
                } else {
                    EdgeLabel::None
                });
            }
        }
        Self { b, labels }
    }

    pub fn b(&self) -> usize {
        self.b
    }

    pub fn labels(&self) -> &[EdgeLabel] {
        &self.labels
    }

    pub fn count(&self, label: EdgeLabel) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }

    /// Signed adjacency with unit weights.
    pub fn to_signed(&self) -> DMatrix<f64> {
        let mut w = DMatrix::zeros(self.b, self.b);
        let mut e = 0;
        for i in 0..self.b {
            for j in (i + 1)..self.b {
                let v = match self.labels[e] {
                    EdgeLabel::Positive => 1.0,
                    EdgeLabel::Negative => -1.0,
                    EdgeLabel::None => 0.0,
                };
                w[(i, j)] = v;
                w[(j, i)] = v;
                e += 1;
            }
        }
        w
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.b != other.b {
            return Err(Error::Dimension {
                expected: self.b,
                got: other.b,
            });
        }
        Ok(())
    }
}

/// Norm used in the RelErr numerator.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RelErrNorm {
    #[default]
    Spectral,
    Frobenius,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelErr {
    /// Mean over the defined components.
    pub relerr: f64,
    /// `None` when the ground truth has no edges of that sign.
    pub plus: Option<f64>,
    pub minus: Option<f64>,
}

fn trace_normalized(l: &DMatrix<f64>) -> DMatrix<f64> {
    let tr = l.trace();
    if tr > 0.0 {
        l * (l.nrows() as f64 / tr)
    } else {
        l.clone()
    }
}

fn numerator_norm_sq(m: &DMatrix<f64>, norm: RelErrNorm) -> f64 {
    match norm {
        RelErrNorm::Frobenius => m.norm_squared(),
        RelErrNorm::Spectral => {
            let sym = (m + m.transpose()) * 0.5;
            let top = sym.symmetric_eigenvalues().amax();
            top * top
        }
    }
}

fn rel_err_one(est: &DMatrix<f64>, truth: &DMatrix<f64>, norm: RelErrNorm) -> Option<f64> {
    let truth = trace_normalized(truth);
    let denom = truth.norm_squared();
    if denom == 0.0 {
        return None;
    }
    let diff = trace_normalized(est) - truth;
    Some(numerator_norm_sq(&diff, norm) / denom)
}

/// Per-sign `‖L̂ - L*‖²/‖L*‖_F²` after rescaling both Laplacians to trace `b`.
pub fn rel_err(est: &LaplacianPair, truth: &LaplacianPair, norm: RelErrNorm) -> Result<RelErr> {
    if est.n() != truth.n() {
        return Err(Error::Dimension {
            expected: truth.n(),
            got: est.n(),
        });
    }
    let plus = rel_err_one(&est.positive, &truth.positive, norm);
    let minus = rel_err_one(&est.negative, &truth.negative, norm);
    let defined: Vec<f64> = plus.iter().chain(minus.iter()).copied().collect();
    let relerr = if defined.is_empty() {
        f64::NAN
    } else {
        defined.iter().sum::<f64>() / defined.len() as f64
    };
    Ok(RelErr {
        relerr,
        plus,
        minus,
    })
}

/// Labels pair `(i, j)` with sign `s` when `Ŵ^s[i,j] > tau·max(Ŵ^s)`.
/// A pair passing both tests takes the sign with the larger weight.
pub fn threshold_edges(lp: &LaplacianPair, tau_rel: f64) -> Result<EdgeLabels> {
    if !(0.0..1.0).contains(&tau_rel) {
        return Err(invalid("tau", format!("must be in [0, 1), got {tau_rel}")));
    }
    let wp = adjacency_from_laplacian(&lp.positive);
    let wm = adjacency_from_laplacian(&lp.negative);
    let cut_p = tau_rel * wp.max().max(0.0);
    let cut_m = tau_rel * wm.max().max(0.0);
    let b = lp.n();
    let mut labels = Vec::with_capacity(pair_count(b));
    for i in 0..b {
        for j in (i + 1)..b {
            let (p, m) = (wp[(i, j)], wm[(i, j)]);
            let pos = p > cut_p && p > 0.0;
            let neg = m > cut_m && m > 0.0;
            labels.push(match (pos, neg) {
                (true, true) if m > p => EdgeLabel::Negative,
                (true, _) => EdgeLabel::Positive,
                (false, true) => EdgeLabel::Negative,
                (false, false) => EdgeLabel::None,
            });
        }
    }
    Ok(EdgeLabels { b, labels })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub fscore: f64,
    pub fscore_plus: f64,
    pub fscore_minus: f64,
    pub precision_plus: f64,
    pub precision_minus: f64,
    pub recall_plus: f64,
    pub recall_minus: f64,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Precision, recall and F-score per sign, averaged over the signs present
/// in the ground truth (over both if the truth has no edges at all).
pub fn prf(est: &EdgeLabels, truth: &EdgeLabels) -> Result<Prf> {
    est.check_same(truth)?;
    let mut per_sign = [(0.0, 0.0, 0.0); 2];
    let mut present = [false; 2];
    for (idx, label) in [EdgeLabel::Positive, EdgeLabel::Negative].into_iter().enumerate() {
        let hits = est
            .labels
            .iter()
            .zip(&truth.labels)
            .filter(|&(&e, &t)| e == label && t == label)
            .count();
        let found = est.count(label);
        let actual = truth.count(label);
        present[idx] = actual > 0;
        let p = ratio(hits, found);
        let r = ratio(hits, actual);
        per_sign[idx] = (p, r, harmonic(p, r));
    }
    let used: Vec<usize> = if present.iter().any(|&x| x) {
        (0..2).filter(|&i| present[i]).collect()
    } else {
        vec![0, 1]
    };
    let mean = |f: fn(&(f64, f64, f64)) -> f64| {
        used.iter().map(|&i| f(&per_sign[i])).sum::<f64>() / used.len() as f64
    };
    Ok(Prf {
        precision: mean(|t| t.0),
        recall: mean(|t| t.1),
        fscore: mean(|t| t.2),
        fscore_plus: per_sign[0].2,
        fscore_minus: per_sign[1].2,
        precision_plus: per_sign[0].0,
        precision_minus: per_sign[1].0,
        recall_plus: per_sign[0].1,
        recall_minus: per_sign[1].1,
    })
}

fn entropy(counts: &[f64], total: f64) -> f64 {
    counts
        .iter()
        .filter(|&&c| c > 0.0)
        .map(|&c| {
            let p = c / total;
            -p * p.ln()
        })
        .sum()
}

/// `I(est; truth) / sqrt(H(est)·H(truth))` over node pairs as samples,
/// natural log, zero when either labeling is constant.
pub fn nmi(est: &EdgeLabels, truth: &EdgeLabels) -> Result<f64> {
    est.check_same(truth)?;
    let total = est.labels.len() as f64;
    if total == 0.0 {
        return Ok(0.0);
    }
    let mut joint = [[0.0f64; 3]; 3];
    for (&e, &t) in est.labels.iter().zip(&truth.labels) {
        joint[e.index()][t.index()] += 1.0;
    }
    let row: Vec<f64> = joint.iter().map(|r| r.iter().sum()).collect();
    let col: Vec<f64> = (0..3).map(|j| joint.iter().map(|r| r[j]).sum()).collect();
    let h_est = entropy(&row, total);
    let h_truth = entropy(&col, total);
    if h_est * h_truth == 0.0 {
        return Ok(0.0);
    }
    let mut mi = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            let c = joint[i][j];
            if c > 0.0 {
                mi += c / total * (c * total / (row[i] * col[j])).ln();
            }
        }
    }
    Ok((mi / (h_est * h_truth).sqrt()).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub tau: f64,
    pub relerr: f64,
    /// NaN when the ground truth has no edges of that sign.
    pub relerr_plus: f64,
    pub relerr_minus: f64,
    pub fscore: f64,
    pub fscore_plus: f64,
    pub fscore_minus: f64,
    pub precision: f64,
    pub recall: f64,
    pub nmi: f64,
}

/// All metrics of an estimate at one detection threshold. Ground-truth
/// labels are the signs of the nonzero truth weights.
pub fn evaluate(
    est: &LaplacianPair,
    truth: &LaplacianPair,
    tau: f64,
    norm: RelErrNorm,
) -> Result<MetricReport> {
    let re = rel_err(est, truth, norm)?;
    let truth_labels = threshold_edges(truth, 0.0)?;
    let est_labels = threshold_edges(est, tau)?;
    let scores = prf(&est_labels, &truth_labels)?;
    Ok(MetricReport {
        tau,
        relerr: re.relerr,
        relerr_plus: re.plus.unwrap_or(f64::NAN),
        relerr_minus: re.minus.unwrap_or(f64::NAN),
        fscore: scores.fscore,
        fscore_plus: scores.fscore_plus,
        fscore_minus: scores.fscore_minus,
        precision: scores.precision,
        recall: scores.recall,
        nmi: nmi(&est_labels, &truth_labels)?,
    })
}

/// The report with the highest F-score over `taus`; the first wins ties.
pub fn evaluate_best(
    est: &LaplacianPair,
    truth: &LaplacianPair,
    taus: &[f64],
    norm: RelErrNorm,
) -> Result<MetricReport> {
    let mut best: Option<MetricReport> = None;
    for &tau in taus {
        let r = evaluate(est, truth, tau, norm)?;
        if best.is_none_or(|b| r.fscore > b.fscore) {
            best = Some(r);
        }
    }
    best.ok_or_else(|| invalid("tau_grid", "must not be empty"))
}
