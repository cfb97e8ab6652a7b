//! Synthetic ground truth: Erdős–Rényi signed graphs, spectrally filtered
//! graph signals, random hidden-node selection and sample covariances.
//!
//! All randomness comes from ChaCha8 (`rand_chacha::ChaCha8Rng`), a
//! counter-based stream cipher generator. Each operation seeds the generator
//! from the caller's `u64` seed and then selects its own stream id, so one
//! trial seed drives graph, sign, signal and partition draws independently.
//! Gaussian samples use `rand_distr::StandardNormal` (ziggurat). Output is
//! bit-reproducible for a fixed seed within this implementation.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::graph::{asymmetry, ensure_square, laplacian_unchecked, split_signed, LaplacianPair, SignedGraph};

const STREAM_GRAPH: u64 = 1;
const STREAM_SIGNS: u64 = 2;
const STREAM_SIGNALS: u64 = 3;
const STREAM_HIDDEN: u64 = 4;

pub(crate) fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// `K` graph signals on `n` nodes, one per column.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalSet {
    signals: DMatrix<f64>,
}

impl SignalSet {
    pub fn new(signals: DMatrix<f64>) -> Result<Self> {
        if signals.nrows() == 0 || signals.ncols() == 0 {
            return Err(invalid("signals", "signal matrix must be non-empty"));
        }
        if signals.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("signals"));
        }
        Ok(Self { signals })
    }

    pub fn n(&self) -> usize {
        self.signals.nrows()
    }

    pub fn k(&self) -> usize {
        self.signals.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.signals
    }

    /// Sample covariance `(1/K)·X·Xᵀ`.
    pub fn covariance(&self) -> DMatrix<f64> {
        let mut c = &self.signals * self.signals.transpose() / self.k() as f64;
        // Exact symmetry keeps downstream symmetry checks strict.
        c = (&c + c.transpose()) * 0.5;
        c
    }

    /// The first `k` signals.
    pub fn truncate(&self, k: usize) -> Result<Self> {
        if k == 0 || k > self.k() {
            return Err(invalid("k", format!("must be in 1..={}", self.k())));
        }
        Self::new(self.signals.columns(0, k).into_owned())
    }
}

/// Split of `0..N` into observed and hidden nodes, both ascending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub observed: Vec<usize>,
    pub hidden: Vec<usize>,
    pub original_n: usize,
}

impl Partition {
    pub fn new(original_n: usize, mut hidden: Vec<usize>) -> Result<Self> {
        hidden.sort_unstable();
        hidden.dedup();
        if hidden.iter().any(|&h| h >= original_n) {
            return Err(invalid("hidden", "hidden index out of range"));
        }
        let observed = (0..original_n)
            .filter(|i| hidden.binary_search(i).is_err())
            .collect();
        Ok(Self {
            observed,
            hidden,
            original_n,
        })
    }

    pub fn all_observed(n: usize) -> Self {
        Self {
            observed: (0..n).collect(),
            hidden: Vec::new(),
            original_n: n,
        }
    }

    pub fn b(&self) -> usize {
        self.observed.len()
    }

    pub fn h(&self) -> usize {
        self.hidden.len()
    }
}

/// Observed rows of the signals and their sample covariance. The hidden rows
/// are dropped at construction and never stored.
#[derive(Debug, Clone)]
pub struct ObservedData {
    pub partition: Partition,
    pub signals: SignalSet,
    pub covariance: DMatrix<f64>,
}

impl ObservedData {
    pub fn from_full(x: &SignalSet, partition: Partition) -> Result<Self> {
        if partition.original_n != x.n() {
            return Err(Error::Dimension {
                expected: x.n(),
                got: partition.original_n,
            });
        }
        if partition.observed.is_empty() {
            return Err(invalid("hidden", "at least one node must stay observed"));
        }
        let xb = x.matrix().select_rows(partition.observed.iter());
        let signals = SignalSet::new(xb)?;
        let covariance = signals.covariance();
        Ok(Self {
            partition,
            signals,
            covariance,
        })
    }
}

/// Parameters of one synthetic instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub n: usize,
    pub p_edge: f64,
    pub neg_fraction: f64,
    pub k: usize,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            n: 30,
            p_edge: 0.3,
            neg_fraction: 0.5,
            k: 50,
            noise_sigma: 0.1,
            seed: 0,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(invalid("n", "need at least 2 nodes"));
        }
        if !(0.0..=1.0).contains(&self.p_edge) {
            return Err(invalid("p_edge", "must lie in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.neg_fraction) {
            return Err(invalid("neg_fraction", "must lie in [0, 1]"));
        }
        if self.k == 0 {
            return Err(invalid("k", "need at least one signal"));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(invalid("noise_sigma", "must be finite and nonnegative"));
        }
        Ok(())
    }
}

/// Erdős–Rényi `G(n, p)` graph with 0/1 weights.
pub fn er_graph(n: usize, p_edge: f64, seed: u64) -> Result<DMatrix<f64>> {
    if n < 2 {
        return Err(invalid("n", "need at least 2 nodes"));
    }
    if !(0.0..=1.0).contains(&p_edge) {
        return Err(invalid("p_edge", "must lie in [0, 1]"));
    }
    let mut rng = rng_for(seed, STREAM_GRAPH);
    let mut w = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random::<f64>() < p_edge {
                w[(i, j)] = 1.0;
                w[(j, i)] = 1.0;
            }
        }
    }
    Ok(w)
}

/// Makes exactly `round(neg_fraction·|E|)` uniformly chosen edges `-1` and the
/// rest `+1`.
pub fn assign_signs(unsigned: &DMatrix<f64>, neg_fraction: f64, seed: u64) -> Result<SignedGraph> {
    let n = ensure_square(unsigned)?;
    if !(0.0..=1.0).contains(&neg_fraction) {
        return Err(invalid("neg_fraction", "must lie in [0, 1]"));
    }
    let edges: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .filter(|&(i, j)| unsigned[(i, j)] != 0.0)
        .collect();
    let n_neg = (neg_fraction * edges.len() as f64).round() as usize;
    let mut rng = rng_for(seed, STREAM_SIGNS);
    let chosen = rand::seq::index::sample(&mut rng, edges.len(), n_neg);
    let mut w = DMatrix::zeros(n, n);
    for &(i, j) in &edges {
        w[(i, j)] = 1.0;
        w[(j, i)] = 1.0;
    }
    for e in chosen.iter() {
        let (i, j) = edges[e];
        w[(i, j)] = -1.0;
        w[(j, i)] = -1.0;
    }
    SignedGraph::new(w)
}

/// Eigen-decomposition of a symmetric matrix, eigenvalues ascending and
/// eigenvectors as the matching columns.
pub fn sym_eig(m: &DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let n = ensure_square(m)?;
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("matrix"));
    }
    let dev = asymmetry(m);
    if dev > 1e-10 {
        return Err(Error::NotSymmetric(dev));
    }
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let vectors = eig.eigenvectors.select_columns(order.iter());
    Ok((values, vectors))
}

/// Spectral graph filter `U·diag(h)·Uᵀ`.
fn spectral_filter(vectors: &DMatrix<f64>, response: &DVector<f64>) -> DMatrix<f64> {
    let mut scaled = vectors.clone();
    for (mut col, &h) in scaled.column_iter_mut().zip(response.iter()) {
        col *= h;
    }
    scaled * vectors.transpose()
}

/// Low-pass response `Λ†/‖Λ†‖_F` with pseudo-inverse cutoff
/// `1e-8·max|λ|`. `None` when every eigenvalue is cut.
fn low_pass(values: &DVector<f64>) -> Option<DVector<f64>> {
    let max_abs = values.amax();
    let cutoff = 1e-8 * max_abs;
    let pinv = values.map(|v| if v.abs() > cutoff && v != 0.0 { 1.0 / v } else { 0.0 });
    let norm = pinv.norm();
    (norm > 0.0).then(|| pinv / norm)
}

/// High-pass response `Σ/‖Σ‖_F`; identically zero for an empty graph.
fn high_pass(values: &DVector<f64>) -> DVector<f64> {
    let norm = values.norm();
    if norm > 0.0 {
        values / norm
    } else {
        DVector::zeros(values.len())
    }
}

/// Signals `X = (U h₁(Λ) Uᵀ + V h₂(Σ) Vᵀ) X₀ + ε` with `L⁺ = UΛUᵀ`,
/// `L⁻ = VΣVᵀ`, `X₀` standard normal and `ε ~ N(0, σ²)`.
///
/// Columns are drawn one at a time (the `X₀` column, then its noise column), so
/// the first `k` signals do not depend on the total count.
pub fn gen_signals(lp: &LaplacianPair, k: usize, noise_sigma: f64, seed: u64) -> Result<SignalSet> {
    if k == 0 {
        return Err(invalid("k", "need at least one signal"));
    }
    if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
        return Err(invalid("noise_sigma", "must be finite and nonnegative"));
    }
    let n = lp.n();
    let (lambda, u) = sym_eig(&lp.positive)?;
    let (sigma, v) = sym_eig(&lp.negative)?;
    let h1 = low_pass(&lambda)
        .ok_or_else(|| invalid("positive Laplacian", "is zero, low-pass filter undefined"))?;
    let h2 = high_pass(&sigma);
    let filter = spectral_filter(&u, &h1) + spectral_filter(&v, &h2);

    let mut rng = rng_for(seed, STREAM_SIGNALS);
    let mut x = DMatrix::zeros(n, k);
    for col in 0..k {
        let x0 = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let mut signal = &filter * x0;
        for i in 0..n {
            let z: f64 = rng.sample(StandardNormal);
            signal[i] += noise_sigma * z;
        }
        x.set_column(col, &signal);
    }
    SignalSet::new(x)
}

/// Hides `h_count` uniformly chosen nodes and keeps the rest.
///
/// The hidden set is the prefix of one seeded random permutation, so for a
/// fixed seed the hidden set for `h` is contained in the one for `h + 1`.
pub fn hide_nodes(x: &SignalSet, h_count: usize, seed: u64) -> Result<ObservedData> {
    let n = x.n();
    if h_count >= n {
        return Err(invalid("h_count", format!("must be below n = {n}")));
    }
    let mut rng = rng_for(seed, STREAM_HIDDEN);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    order.truncate(h_count);
    let partition = Partition::new(n, order)?;
    ObservedData::from_full(x, partition)
}

/// Laplacians of the positive and negative graphs restricted to the observed
/// nodes, renumbered in ascending original order.
pub fn observed_groundtruth(g: &SignedGraph, part: &Partition) -> Result<LaplacianPair> {
    if part.original_n != g.n() {
        return Err(Error::Dimension {
            expected: g.n(),
            got: part.original_n,
        });
    }
    let parts = split_signed(g);
    let restrict = |w: &DMatrix<f64>| {
        w.select_rows(part.observed.iter())
            .select_columns(part.observed.iter())
    };
    Ok(LaplacianPair {
        positive: laplacian_unchecked(&restrict(&parts.positive)),
        negative: laplacian_unchecked(&restrict(&parts.negative)),
    })
}

/// A full synthetic trial: signed graph, signals on all nodes, and the
/// observed view after hiding `h_count` nodes.
#[derive(Debug, Clone)]
pub struct SyntheticInstance {
    pub graph: SignedGraph,
    pub signals: SignalSet,
    pub observed: ObservedData,
    pub truth: LaplacianPair,
}

pub fn synthesize(cfg: &GenConfig, h_count: usize) -> Result<SyntheticInstance> {
    cfg.validate()?;
    let unsigned = er_graph(cfg.n, cfg.p_edge, cfg.seed)?;
    let graph = assign_signs(&unsigned, cfg.neg_fraction, cfg.seed)?;
    let signals = gen_signals(&graph.laplacians(), cfg.k, cfg.noise_sigma, cfg.seed)?;
    let observed = hide_nodes(&signals, h_count, cfg.seed)?;
    let truth = observed_groundtruth(&graph, &observed.partition)?;
    Ok(SyntheticInstance {
        graph,
        signals,
        observed,
        truth,
    })
}
