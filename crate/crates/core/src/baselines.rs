//! Fully observed baselines.
//!
//! - GL: one unsigned Laplacian from smooth signals,
//!   `min tr(C L) + α‖L‖_F²` over Laplacians with `tr(L) = N`.
//! - scSGL: signed Laplacians from smooth and non-smooth components,
//!   `min tr(C L⁺) - tr(C L⁻) + α₊‖L⁺‖_F² + α₋‖L⁻‖_F²` with both traces `N`
//!   and disjoint supports. It runs the hidden-node ADMM with every hidden
//!   term and both log barriers switched off.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::graph::{laplacian_from_edges, trace_form_coeffs, EdgeVector, LaplacianPair, PairIncidence};
use crate::solver::{validate_covariance, AdmmConfig, AdmmState, BlockWeights, LaplacianBlock, SignWeights};
use crate::synth::SignalSet;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlConfig {
    pub alpha: f64,
    pub iters: usize,
    /// Bound on the projected-gradient residual `‖ℓ - Π(ℓ - ∇f/L)‖∞·L`.
    pub tol: f64,
}

impl Default for GlConfig {
    fn default() -> Self {
        Self {
            alpha: 0.1,
            iters: 20_000,
            tol: 1e-8,
        }
    }
}

impl GlConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(invalid("alpha", format!("must be positive, got {}", self.alpha)));
        }
        if self.iters == 0 {
            return Err(invalid("iters", "must be at least 1"));
        }
        if !(self.tol > 0.0) {
            return Err(invalid("tol", "must be positive"));
        }
        Ok(())
    }
}

/// GL solution with its convergence record.
#[derive(Debug, Clone)]
pub struct GlOutput {
    pub laplacian: DMatrix<f64>,
    /// Objective after each iteration, starting at the initial point.
    pub objective: Vec<f64>,
    pub residual: f64,
}

/// Euclidean projection onto `{w ≥ 0, Σw = total}`.
fn project_scaled_simplex(y: &DVector<f64>, total: f64) -> DVector<f64> {
    let mut sorted: Vec<f64> = y.iter().copied().collect();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (k, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let t = (cumsum - total) / (k + 1) as f64;
        if u - t > 0.0 {
            theta = t;
        } else {
            break;
        }
    }
    y.map(|v| (v - theta).max(0.0))
}

/// Projection onto `{ℓ ≤ 0, 1ᵀℓ = -b/2}`.
fn project_feasible(ell: &DVector<f64>, b: usize) -> DVector<f64> {
    -project_scaled_simplex(&(-ell), b as f64 / 2.0)
}

fn gl_objective(q: &DVector<f64>, s: &PairIncidence, alpha: f64, ell: &DVector<f64>) -> f64 {
    q.dot(ell) + alpha * s.frobenius_operator(ell).dot(ell)
}

/// GL on a given covariance by projected gradient with step `1/(4αN)`, the
/// inverse Lipschitz constant of the gradient.
pub fn gl_from_covariance(c: &DMatrix<f64>, cfg: &GlConfig) -> Result<GlOutput> {
    cfg.validate()?;
    let b = validate_covariance(c)?;
    let q = trace_form_coeffs(c)?.into_vector();
    let s = PairIncidence::new(b);
    let lipschitz = 4.0 * cfg.alpha * b as f64;
    let p = q.len();

    let mut ell = DVector::from_element(p, -(b as f64 / 2.0) / p as f64);
    let mut objective = vec![gl_objective(&q, &s, cfg.alpha, &ell)];
    let mut residual = f64::INFINITY;
    for _ in 0..cfg.iters {
        let mut grad = s.frobenius_operator(&ell) * (2.0 * cfg.alpha);
        grad += &q;
        let next = project_feasible(&(&ell - grad / lipschitz), b);
        residual = (&next - &ell).amax() * lipschitz;
        ell = next;
        objective.push(gl_objective(&q, &s, cfg.alpha, &ell));
        if residual < cfg.tol {
            break;
        }
    }
    if !(residual < cfg.tol) {
        return Err(Error::Solver(format!(
            "GL did not converge in {} iterations (residual {residual:.3e})",
            cfg.iters
        )));
    }
    let laplacian = laplacian_from_edges(&EdgeVector::new(b, ell)?);
    Ok(GlOutput {
        laplacian,
        objective,
        residual,
    })
}

/// GL Laplacian learned from signals `X`, using `C = (1/K)·X·Xᵀ`.
pub fn gl_learn(x: &SignalSet, cfg: &GlConfig) -> Result<DMatrix<f64>> {
    Ok(gl_from_covariance(&x.covariance(), cfg)?.laplacian)
}

/// scSGL on a given covariance.
pub fn scsgl_from_covariance(
    c: &DMatrix<f64>,
    alpha_plus: f64,
    alpha_minus: f64,
    admm: &AdmmConfig,
) -> Result<LaplacianPair> {
    admm.validate()?;
    for (name, a) in [("alpha_plus", alpha_plus), ("alpha_minus", alpha_minus)] {
        if !(a > 0.0 && a.is_finite()) {
            return Err(invalid(name, format!("must be positive, got {a}")));
        }
    }
    let b = validate_covariance(c)?;
    let weights = BlockWeights {
        plus: SignWeights {
            alpha: alpha_plus,
            barrier: 0.0,
        },
        minus: SignWeights {
            alpha: alpha_minus,
            barrier: 0.0,
        },
    };
    let block = LaplacianBlock::from_coeffs(trace_form_coeffs(c)?, weights, [0.0, 0.0], admm.rho);
    let (lp, _, _) = block.run(AdmmState::uniform(b), admm)?;
    Ok(lp)
}

/// scSGL Laplacian pair learned from signals `X`.
pub fn scsgl_learn(
    x: &SignalSet,
    alpha_plus: f64,
    alpha_minus: f64,
    admm: &AdmmConfig,
) -> Result<LaplacianPair> {
    scsgl_from_covariance(&x.covariance(), alpha_plus, alpha_minus, admm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn simplex_projection_examples() {
        let y = DVector::from_vec(vec![0.5, 0.5]);
        assert_eq!(project_scaled_simplex(&y, 1.0), y);
        let y = DVector::from_vec(vec![2.0, 0.0, -1.0]);
        assert_eq!(project_scaled_simplex(&y, 1.0).as_slice(), &[1.0, 0.0, 0.0]);
        let y = DVector::from_vec(vec![0.0, 0.0, 0.0, 0.0]);
        assert_eq!(project_scaled_simplex(&y, 2.0).as_slice(), &[0.5; 4]);
    }

    proptest! {
        #[test]
        fn simplex_projection_is_optimal(
            y in proptest::collection::vec(-3.0f64..3.0, 2..12),
            probes in proptest::collection::vec(0.0f64..1.0, 24),
        ) {
            let y = DVector::from_vec(y);
            let n = y.len();
            let total = 1.5;
            let w = project_scaled_simplex(&y, total);
            prop_assert!(w.iter().all(|&v| v >= 0.0));
            prop_assert!((w.sum() - total).abs() < 1e-12);
            // Random feasible points are never closer to y.
            let raw = DVector::from_fn(n, |i, _| probes[i % probes.len()] + 1e-3);
            let z = &raw * (total / raw.sum());
            prop_assert!((&w - &y).norm() <= (&z - &y).norm() + 1e-12);
        }
    }

    #[test]
    fn gl_output_is_a_trace_n_laplacian() {
        let c = DMatrix::from_fn(5, 5, |i, j| if i == j { 1.0 } else { 0.3 / (1.0 + (i + j) as f64) });
        let out = gl_from_covariance(&c, &GlConfig::default()).unwrap();
        let l = &out.laplacian;
        assert!((l.trace() - 5.0).abs() < 1e-6);
        for i in 0..5 {
            assert!(l.row(i).sum().abs() < 1e-9);
            for j in 0..5 {
                if i != j {
                    assert!(l[(i, j)] <= 0.0);
                }
            }
        }
        assert!(out.residual < 1e-8);
        for pair in out.objective.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-12);
        }
    }

    #[test]
    fn configs_are_validated() {
        let c = DMatrix::identity(3, 3);
        let bad = GlConfig {
            alpha: 0.0,
            ..GlConfig::default()
        };
        assert!(gl_from_covariance(&c, &bad).is_err());
        assert!(scsgl_from_covariance(&c, -1.0, 0.1, &AdmmConfig::default()).is_err());
        assert!(gl_from_covariance(&DMatrix::identity(1, 1), &GlConfig::default()).is_err());
    }

    #[test]
    fn gl_reports_non_convergence() {
        let c = DMatrix::from_fn(6, 6, |i, j| if i == j { 2.0 } else { 1.0 / (1 + i + j) as f64 });
        let cfg = GlConfig {
            iters: 1,
            tol: 1e-14,
            ..GlConfig::default()
        };
        assert!(matches!(gl_from_covariance(&c, &cfg), Err(Error::Solver(_))));
    }

    #[test]
    fn scsgl_output_is_valid() {
        let c = DMatrix::from_fn(6, 6, |i, j| if i == j { 1.0 } else if (i + j) % 3 == 0 { 0.4 } else { -0.2 });
        let lp = scsgl_from_covariance(&c, 0.1, 0.1, &AdmmConfig::default()).unwrap();
        lp.check(1e-9).unwrap();
        for l in [&lp.positive, &lp.negative] {
            let tr = l.trace();
            assert!(tr == 0.0 || (tr - 6.0).abs() < 1e-9);
        }
    }
}
