//! Signed graphs, their positive/negative decomposition, combinatorial
//! Laplacians, and the edge-vector algebra the solvers work in.
//!
//! A symmetric zero-diagonal `b × b` matrix is represented by its strict upper
//! triangle, stored as an [`EdgeVector`] of length `p = b(b-1)/2` in
//! lexicographic `(i, j)`, `i < j` order. For a Laplacian `L` with off-diagonal
//! vector `ℓ` we have
//!
//! ```text
//! L = offdiag(ℓ) + diag(-S ℓ)
//! tr(C L)   = ⟨2c - Sᵀd, ℓ⟩          c = upper(C), d = diag(C)
//! ‖L‖_F²    = ⟨(2I + SᵀS) ℓ, ℓ⟩
//! tr(L)     = -2 · 1ᵀℓ
//! ```
//!
//! where `S` is the node/edge-slot incidence operator ([`PairIncidence`]).

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

const SYMMETRY_TOL: f64 = 1e-12;

pub(crate) fn ensure_square(m: &DMatrix<f64>) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare(m.nrows(), m.ncols()));
    }
    Ok(m.nrows())
}

/// Largest absolute deviation from symmetry, relative to the matrix scale.
pub(crate) fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            let a = m[(i, j)];
            let b = m[(j, i)];
            let scale = 1.0f64.max(a.abs()).max(b.abs());
            worst = worst.max((a - b).abs() / scale);
        }
    }
    worst
}

pub(crate) fn ensure_symmetric(m: &DMatrix<f64>, tol: f64) -> Result<usize> {
    let n = ensure_square(m)?;
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("matrix"));
    }
    let dev = asymmetry(m);
    if dev > tol {
        return Err(Error::NotSymmetric(dev));
    }
    Ok(n)
}

fn ensure_zero_diagonal(m: &DMatrix<f64>) -> Result<()> {
    for i in 0..m.nrows() {
        if m[(i, i)] != 0.0 {
            return Err(Error::NonzeroDiagonal {
                index: i,
                value: m[(i, i)],
            });
        }
    }
    Ok(())
}

fn ensure_nonnegative(m: &DMatrix<f64>) -> Result<()> {
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            if m[(i, j)] < 0.0 {
                return Err(Error::NegativeWeight {
                    row: i,
                    col: j,
                    value: m[(i, j)],
                });
            }
        }
    }
    Ok(())
}

/// Number of unordered node pairs, `b(b-1)/2`.
pub fn pair_count(b: usize) -> usize {
    b * b.saturating_sub(1) / 2
}

/// Undirected graph whose weights may be positive (friendly/trust) or
/// negative (antagonistic/distrust).
#[derive(Debug, Clone, PartialEq)]
pub struct SignedGraph {
    weights: DMatrix<f64>,
}

impl SignedGraph {
    /// Validates symmetry and the zero diagonal.
    pub fn new(weights: DMatrix<f64>) -> Result<Self> {
        ensure_symmetric(&weights, SYMMETRY_TOL)?;
        ensure_zero_diagonal(&weights)?;
        Ok(Self { weights })
    }

    pub fn n(&self) -> usize {
        self.weights.nrows()
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn edge_count(&self) -> usize {
        let n = self.n();
        (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .filter(|&(i, j)| self.weights[(i, j)] != 0.0)
            .count()
    }

    /// Positive and negative Laplacians of the full graph.
    pub fn laplacians(&self) -> LaplacianPair {
        let parts = split_signed(self);
        LaplacianPair {
            positive: laplacian_unchecked(&parts.positive),
            negative: laplacian_unchecked(&parts.negative),
        }
    }
}

/// The two nonnegative adjacency matrices `W⁺` and `W⁻` of a signed graph.
#[derive(Debug, Clone, PartialEq)]
pub struct UnsignedGraphPair {
    pub positive: DMatrix<f64>,
    pub negative: DMatrix<f64>,
}

impl UnsignedGraphPair {
    pub fn n(&self) -> usize {
        self.positive.nrows()
    }
}

/// Splits `W` into `W⁺ = max(W, 0)` and `W⁻ = max(-W, 0)`.
pub fn split_signed(g: &SignedGraph) -> UnsignedGraphPair {
    let w = g.weights();
    UnsignedGraphPair {
        positive: w.map(|v| if v > 0.0 { v } else { 0.0 }),
        negative: w.map(|v| if v < 0.0 { -v } else { 0.0 }),
    }
}

/// Combinatorial Laplacian `diag(W·1) - W` of a nonnegative symmetric
/// zero-diagonal adjacency matrix.
pub fn laplacian(w: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    ensure_symmetric(w, SYMMETRY_TOL)?;
    ensure_zero_diagonal(w)?;
    ensure_nonnegative(w)?;
    Ok(laplacian_unchecked(w))
}

pub(crate) fn laplacian_unchecked(w: &DMatrix<f64>) -> DMatrix<f64> {
    let n = w.nrows();
    let mut l = -w.clone();
    for i in 0..n {
        let degree: f64 = w.row(i).iter().sum();
        l[(i, i)] = degree;
    }
    l
}

/// Recovers `W` from a Laplacian: `W[i,j] = -L[i,j]` off the diagonal.
pub fn adjacency_from_laplacian(l: &DMatrix<f64>) -> DMatrix<f64> {
    let mut w = -l.clone();
    for i in 0..w.nrows().min(w.ncols()) {
        w[(i, i)] = 0.0;
    }
    w
}

/// Positive and negative combinatorial Laplacians over the same node set.
///
/// Valid pairs are symmetric with nonpositive off-diagonals and zero row sums,
/// and the two off-diagonal supports are disjoint. Only proper combinatorial
/// Laplacians are ever materialized; the relaxed class with `L·1 ≥ 0` that
/// describes the observed block of a larger graph is never built.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplacianPair {
    pub positive: DMatrix<f64>,
    pub negative: DMatrix<f64>,
}

impl LaplacianPair {
    pub fn new(positive: DMatrix<f64>, negative: DMatrix<f64>) -> Result<Self> {
        let n = ensure_square(&positive)?;
        let m = ensure_square(&negative)?;
        if n != m {
            return Err(Error::Dimension {
                expected: n,
                got: m,
            });
        }
        Ok(Self { positive, negative })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            positive: DMatrix::zeros(n, n),
            negative: DMatrix::zeros(n, n),
        }
    }

    pub fn n(&self) -> usize {
        self.positive.nrows()
    }

    pub fn get(&self, sign: crate::Sign) -> &DMatrix<f64> {
        match sign {
            crate::Sign::Positive => &self.positive,
            crate::Sign::Negative => &self.negative,
        }
    }

    /// Checks the Laplacian-pair invariants; `tol` bounds row sums and
    /// asymmetry. Sign and disjointness are checked exactly.
    pub fn check(&self, tol: f64) -> Result<()> {
        for l in [&self.positive, &self.negative] {
            ensure_symmetric(l, tol)?;
            let n = l.nrows();
            for i in 0..n {
                let row_sum: f64 = l.row(i).iter().sum();
                if row_sum.abs() > tol * (1.0 + l[(i, i)].abs()) {
                    return Err(Error::Solver(format!("row {i} sums to {row_sum:e}")));
                }
                for j in 0..n {
                    if i != j && l[(i, j)] > 0.0 {
                        return Err(Error::Solver(format!(
                            "positive off-diagonal {} at ({i}, {j})",
                            l[(i, j)]
                        )));
                    }
                }
            }
        }
        if !self.supports_disjoint() {
            return Err(Error::Solver("positive and negative supports overlap".into()));
        }
        Ok(())
    }

    pub fn supports_disjoint(&self) -> bool {
        let n = self.n();
        (0..n).all(|i| {
            (0..n).all(|j| i == j || self.positive[(i, j)] == 0.0 || self.negative[(i, j)] == 0.0)
        })
    }
}

/// Strict upper triangle of a symmetric `b × b` matrix, lexicographic order.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeVector {
    nodes: usize,
    values: DVector<f64>,
}

impl EdgeVector {
    pub fn new(nodes: usize, values: DVector<f64>) -> Result<Self> {
        let p = pair_count(nodes);
        if values.len() != p {
            return Err(Error::Dimension {
                expected: p,
                got: values.len(),
            });
        }
        Ok(Self { nodes, values })
    }

    pub fn zeros(nodes: usize) -> Self {
        Self {
            nodes,
            values: DVector::zeros(pair_count(nodes)),
        }
    }

    /// Node count `b` of the underlying graph.
    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn into_vector(self) -> DVector<f64> {
        self.values
    }

    pub fn as_slice(&self) -> &[f64] {
        self.values.as_slice()
    }
}

/// `upper(A)`: the strict upper triangle of a symmetric matrix.
pub fn upper_vec(a: &DMatrix<f64>) -> Result<EdgeVector> {
    let b = ensure_symmetric(a, SYMMETRY_TOL)?;
    let mut values = Vec::with_capacity(pair_count(b));
    for i in 0..b {
        for j in (i + 1)..b {
            values.push(a[(i, j)]);
        }
    }
    Ok(EdgeVector {
        nodes: b,
        values: DVector::from_vec(values),
    })
}

/// Inverse of [`upper_vec`] on the off-diagonal part; the diagonal is zero.
pub fn from_upper_vec(v: &EdgeVector) -> DMatrix<f64> {
    let b = v.nodes;
    let mut a = DMatrix::zeros(b, b);
    let mut e = 0;
    for i in 0..b {
        for j in (i + 1)..b {
            a[(i, j)] = v.values[e];
            a[(j, i)] = v.values[e];
            e += 1;
        }
    }
    a
}

/// The incidence operator `S ∈ {0,1}^{b×p}` with `S·upper(A) = A·1`, applied
/// through an endpoint table rather than stored densely.
#[derive(Debug, Clone)]
pub struct PairIncidence {
    nodes: usize,
    endpoints: Vec<(usize, usize)>,
}

impl PairIncidence {
    pub fn new(nodes: usize) -> Self {
        let mut endpoints = Vec::with_capacity(pair_count(nodes));
        for i in 0..nodes {
            for j in (i + 1)..nodes {
                endpoints.push((i, j));
            }
        }
        Self { nodes, endpoints }
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn edge_slots(&self) -> usize {
        self.endpoints.len()
    }

    pub fn endpoints(&self) -> &[(usize, usize)] {
        &self.endpoints
    }

    /// Index of the slot holding pair `(i, j)`, in either order.
    pub fn slot(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        debug_assert!(i != j && j < self.nodes);
        // Rows before i contribute (b-1) + (b-2) + ... + (b-i) slots.
        i * (2 * self.nodes - i - 1) / 2 + (j - i - 1)
    }

    fn check_len(&self, expected: usize, got: usize) -> Result<()> {
        if expected != got {
            return Err(Error::Dimension { expected, got });
        }
        Ok(())
    }

    /// `S·v`, length `b`.
    pub fn apply(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_len(self.edge_slots(), v.len())?;
        Ok(self.apply_unchecked(v))
    }

    pub(crate) fn apply_unchecked(&self, v: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.nodes);
        for (&(i, j), &x) in self.endpoints.iter().zip(v.iter()) {
            out[i] += x;
            out[j] += x;
        }
        out
    }

    /// `Sᵀ·x`, length `p`, with `(Sᵀx)[e] = x[i] + x[j]`.
    pub fn adjoint(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_len(self.nodes, x.len())?;
        Ok(self.adjoint_unchecked(x))
    }

    pub(crate) fn adjoint_unchecked(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(
            self.endpoints.len(),
            self.endpoints.iter().map(|&(i, j)| x[i] + x[j]),
        )
    }

    /// `(2I + SᵀS)·v`.
    pub(crate) fn frobenius_operator(&self, v: &DVector<f64>) -> DVector<f64> {
        let sv = self.apply_unchecked(v);
        let mut out = self.adjoint_unchecked(&sv);
        out.axpy(2.0, v, 1.0);
        out
    }

    /// Dense `b × p` materialization, for oracle tests only.
    #[cfg(any(test, feature = "dense"))]
    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut s = DMatrix::zeros(self.nodes, self.edge_slots());
        for (e, &(i, j)) in self.endpoints.iter().enumerate() {
            s[(i, e)] = 1.0;
            s[(j, e)] = 1.0;
        }
        s
    }
}

/// `S·v` for an edge vector.
pub fn incidence_apply(s: &PairIncidence, v: &EdgeVector) -> Result<DVector<f64>> {
    s.apply(v.as_vector())
}

/// `Sᵀ·x` as an edge vector.
pub fn incidence_adjoint(s: &PairIncidence, x: &DVector<f64>) -> Result<EdgeVector> {
    let values = s.adjoint(x)?;
    EdgeVector::new(s.nodes(), values)
}

/// Laplacian whose off-diagonal is `ℓ`: `offdiag(ℓ) + diag(-S·ℓ)`.
pub fn laplacian_from_edges(ell: &EdgeVector) -> DMatrix<f64> {
    let s = PairIncidence::new(ell.nodes());
    let mut l = from_upper_vec(ell);
    let degrees = s.apply_unchecked(ell.as_vector());
    for i in 0..ell.nodes() {
        l[(i, i)] = -degrees[i];
    }
    l
}

/// `q = 2·upper(C) - Sᵀ·diag(C)`, so that `tr(C·L) = ⟨q, ℓ⟩` for every
/// Laplacian `L` with off-diagonal vector `ℓ`.
pub fn trace_form_coeffs(c: &DMatrix<f64>) -> Result<EdgeVector> {
    let b = ensure_symmetric(c, 1e-10)?;
    let s = PairIncidence::new(b);
    let d = c.diagonal();
    let values = DVector::from_iterator(
        s.edge_slots(),
        s.endpoints()
            .iter()
            .map(|&(i, j)| c[(i, j)] + c[(j, i)] - d[i] - d[j]),
    );
    Ok(EdgeVector { nodes: b, values })
}

/// `⟨(2I + SᵀS)ℓ, ℓ⟩`, which equals `‖L‖_F²` for the Laplacian built from `ℓ`.
pub fn frobenius_quad(ell: &EdgeVector, s: &PairIncidence) -> Result<f64> {
    if ell.len() != s.edge_slots() {
        return Err(Error::Dimension {
            expected: s.edge_slots(),
            got: ell.len(),
        });
    }
    Ok(s.frobenius_operator(ell.as_vector()).dot(ell.as_vector()))
}
