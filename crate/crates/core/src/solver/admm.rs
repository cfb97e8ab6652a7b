//! ADMM for the Laplacian block.
//!
//! With `q = 2c - Sᵀd` and `g^s(ℓ) = ⟨q, ℓ⟩ + 2·1ᵀp^s + r^s`, the smooth part is
//!
//! ```text
//! f(ℓ⁺, ℓ⁻) =  ⟨q, ℓ⁺⟩ + α₊⟨(2I + SᵀS)ℓ⁺, ℓ⁺⟩ - (1/η₊)·log g⁺(ℓ⁺)
//!            - ⟨q, ℓ⁻⟩ + α₋⟨(2I + SᵀS)ℓ⁻, ℓ⁻⟩ - (1/η₋)·log g⁻(ℓ⁻)
//! ```
//!
//! minimized over `ℓ^s ∈ 𝒮` and `(ℓ⁺, ℓ⁻) ∈ 𝒟` through the split `v = ℓ`.
//! Each round does the `v`-projection, one projected Newton step per sign and
//! a dual ascent step.

use nalgebra::{DMatrix, DVector};

use super::newton::NewtonOperator;
use super::projection::{project_complementarity, project_hyperplane_in_place};
use super::{AdmmConfig, AdmmState, BcdConfig, HiddenAux};
use crate::error::{Error, Result, Sign};
use crate::graph::{laplacian_from_edges, trace_form_coeffs, EdgeVector, LaplacianPair, PairIncidence};

/// Regularization and barrier weights of one sign's block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct SignWeights {
    pub alpha: f64,
    /// `1/η`; zero disables the log barrier.
    pub barrier: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct BlockWeights {
    pub plus: SignWeights,
    pub minus: SignWeights,
}

impl BlockWeights {
    pub(crate) fn from_bcd(cfg: &BcdConfig) -> Self {
        Self {
            plus: SignWeights {
                alpha: cfg.alpha_plus,
                barrier: 1.0 / cfg.eta_plus,
            },
            minus: SignWeights {
                alpha: cfg.alpha_minus,
                barrier: 1.0 / cfg.eta_minus,
            },
        }
    }
}

/// `g^s(ℓ) = ⟨q, ℓ⟩ + 2·1ᵀp^s + r^s`.
pub fn barrier_argument(q: &EdgeVector, ell: &EdgeVector, aux: &HiddenAux, sign: Sign) -> f64 {
    q.as_vector().dot(ell.as_vector()) + aux.offset(sign)
}

fn sign_factor(sign: Sign) -> f64 {
    match sign {
        Sign::Positive => 1.0,
        Sign::Negative => -1.0,
    }
}

fn grad_sign(
    s: &PairIncidence,
    q: &DVector<f64>,
    ell: &DVector<f64>,
    w: SignWeights,
    g: f64,
    sign: Sign,
) -> DVector<f64> {
    let mut grad = s.frobenius_operator(ell) * (2.0 * w.alpha);
    let coeff = sign_factor(sign) - if w.barrier > 0.0 { w.barrier / g } else { 0.0 };
    grad.axpy(coeff, q, 1.0);
    grad
}

/// Gradients of the smooth ℓ-subproblem objective with respect to `ℓ⁺` and `ℓ⁻`:
///
/// ```text
/// ∂f/∂ℓ⁺ =  q + 2α₊(2I + SᵀS)ℓ⁺ - (1/η₊)·q/g⁺(ℓ⁺)
/// ∂f/∂ℓ⁻ = -q + 2α₋(2I + SᵀS)ℓ⁻ - (1/η₋)·q/g⁻(ℓ⁻)
/// ```
pub fn grad_f(
    ell_plus: &EdgeVector,
    ell_minus: &EdgeVector,
    q: &EdgeVector,
    aux: &HiddenAux,
    cfg: &BcdConfig,
) -> Result<(EdgeVector, EdgeVector)> {
    let b = q.nodes();
    for v in [ell_plus, ell_minus] {
        if v.len() != q.len() {
            return Err(Error::Dimension {
                expected: q.len(),
                got: v.len(),
            });
        }
    }
    let s = PairIncidence::new(b);
    let weights = BlockWeights::from_bcd(cfg);
    let mut out = Vec::with_capacity(2);
    for (sign, ell, w) in [
        (Sign::Positive, ell_plus, weights.plus),
        (Sign::Negative, ell_minus, weights.minus),
    ] {
        let g = barrier_argument(q, ell, aux, sign);
        if !(g > 0.0) {
            return Err(Error::BarrierDomain { sign, value: g });
        }
        out.push(EdgeVector::new(
            b,
            grad_sign(&s, q.as_vector(), ell.as_vector(), w, g, sign),
        )?);
    }
    let minus = out.pop().unwrap();
    let plus = out.pop().unwrap();
    Ok((plus, minus))
}

/// Value of the smooth ℓ-subproblem objective `f(ℓ⁺, ℓ⁻)`, log barriers included.
pub fn subproblem_objective(
    ell_plus: &EdgeVector,
    ell_minus: &EdgeVector,
    q: &EdgeVector,
    aux: &HiddenAux,
    cfg: &BcdConfig,
) -> Result<f64> {
    let s = PairIncidence::new(q.nodes());
    let weights = BlockWeights::from_bcd(cfg);
    let mut total = 0.0;
    for (sign, ell, w) in [
        (Sign::Positive, ell_plus, weights.plus),
        (Sign::Negative, ell_minus, weights.minus),
    ] {
        let g = barrier_argument(q, ell, aux, sign);
        if !(g > 0.0) {
            return Err(Error::BarrierDomain { sign, value: g });
        }
        let x = ell.as_vector();
        total += sign_factor(sign) * q.as_vector().dot(x)
            + w.alpha * s.frobenius_operator(x).dot(x)
            - w.barrier * g.ln();
    }
    Ok(total)
}

/// Convergence summary of one inner solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerStats {
    pub iterations: usize,
    pub primal_residual: f64,
}

/// The ℓ-subproblem for fixed covariance, weights and hidden-node offsets.
pub(crate) struct LaplacianBlock {
    nodes: usize,
    q: DVector<f64>,
    incidence: PairIncidence,
    weights: BlockWeights,
    /// `2·1ᵀp^s + r^s` per sign.
    offsets: [f64; 2],
    newton: [NewtonOperator; 2],
}

impl LaplacianBlock {
    pub(crate) fn new(
        cb: &DMatrix<f64>,
        weights: BlockWeights,
        offsets: [f64; 2],
        rho: f64,
    ) -> Result<Self> {
        let q = trace_form_coeffs(cb)?;
        Ok(Self::from_coeffs(q, weights, offsets, rho))
    }

    pub(crate) fn from_coeffs(q: EdgeVector, weights: BlockWeights, offsets: [f64; 2], rho: f64) -> Self {
        let nodes = q.nodes();
        let incidence = PairIncidence::new(nodes);
        let q = q.into_vector();
        let newton = [
            NewtonOperator::new(incidence.clone(), weights.plus.alpha, rho, q.clone()),
            NewtonOperator::new(incidence.clone(), weights.minus.alpha, rho, q.clone()),
        ];
        Self {
            nodes,
            q,
            incidence,
            weights,
            offsets,
            newton,
        }
    }

    fn g(&self, idx: usize, ell: &DVector<f64>) -> f64 {
        self.q.dot(ell) + self.offsets[idx]
    }

    fn weights_of(&self, idx: usize) -> SignWeights {
        if idx == 0 {
            self.weights.plus
        } else {
            self.weights.minus
        }
    }

    pub(crate) fn check_domain(&self, state: &AdmmState, eps: f64) -> Result<()> {
        for (idx, sign, ell) in [
            (0, Sign::Positive, &state.ell_plus),
            (1, Sign::Negative, &state.ell_minus),
        ] {
            if self.weights_of(idx).barrier > 0.0 {
                let g = self.g(idx, ell.as_vector());
                if !(g > eps) {
                    return Err(Error::BarrierDomain { sign, value: g });
                }
            }
        }
        Ok(())
    }

    /// One projected Newton step for one sign, with step halving while the
    /// barrier argument stays below `domain_eps`.
    fn ell_step(
        &self,
        idx: usize,
        ell: &DVector<f64>,
        v: &DVector<f64>,
        lam: &DVector<f64>,
        admm: &AdmmConfig,
        iteration: usize,
    ) -> Result<DVector<f64>> {
        let w = self.weights_of(idx);
        let sign = if idx == 0 { Sign::Positive } else { Sign::Negative };
        let g = self.g(idx, ell);
        let grad = grad_sign(&self.incidence, &self.q, ell, w, g, sign);
        let rho = admm.rho;
        // ∇f(ℓ) - ρv + ρℓ - λ
        let mut rhs = grad;
        rhs.axpy(-rho, v, 1.0);
        rhs.axpy(rho, ell, 1.0);
        rhs -= lam;
        let beta = if w.barrier > 0.0 { w.barrier / (g * g) } else { 0.0 };
        let step = self.newton[idx].solve(beta, &rhs);
        let mut candidate = ell - step;
        project_hyperplane_in_place(&mut candidate, self.nodes);

        if w.barrier > 0.0 {
            let mut halvings = 0;
            while !(self.g(idx, &candidate) > admm.domain_eps) {
                if halvings == admm.backtrack_max {
                    return Err(Error::Solver(format!(
                        "{sign} barrier argument {:.3e} <= {:.1e} at ADMM iteration {iteration} \
                         after {halvings} step halvings (previous g = {g:.3e})",
                        self.g(idx, &candidate),
                        admm.domain_eps,
                    )));
                }
                candidate = (&candidate + ell) * 0.5;
                halvings += 1;
            }
        }
        Ok(candidate)
    }

    pub(crate) fn run(
        &self,
        init: AdmmState,
        admm: &AdmmConfig,
    ) -> Result<(LaplacianPair, AdmmState, InnerStats)> {
        self.check_domain(&init, 0.0)?;
        let b = self.nodes;
        let rho = admm.rho;
        let AdmmState {
            ell_plus,
            ell_minus,
            mut lam1,
            mut lam2,
            v_plus,
            v_minus,
        } = init;
        let mut ell_p = ell_plus.into_vector();
        let mut ell_m = ell_minus.into_vector();
        let mut v_p = v_plus.into_vector();
        let mut v_m = v_minus.into_vector();
        let mut stats = InnerStats {
            iterations: 0,
            primal_residual: f64::INFINITY,
        };

        for t in 0..admm.inner_iters {
            let a = &ell_p - &lam1 / rho;
            let c = &ell_m - &lam2 / rho;
            (v_p, v_m) = project_complementarity(&a, &c)?;

            let next_p = self.ell_step(0, &ell_p, &v_p, &lam1, admm, t)?;
            let next_m = self.ell_step(1, &ell_m, &v_m, &lam2, admm, t)?;
            ell_p = next_p;
            ell_m = next_m;

            let diff_p = &v_p - &ell_p;
            let diff_m = &v_m - &ell_m;
            lam1.axpy(rho, &diff_p, 1.0);
            lam2.axpy(rho, &diff_m, 1.0);

            stats.iterations = t + 1;
            stats.primal_residual = diff_p.amax().max(diff_m.amax());
            if !stats.primal_residual.is_finite() {
                return Err(Error::Solver(format!("ADMM diverged at iteration {t}")));
            }
            if stats.primal_residual < admm.primal_tol {
                break;
            }
        }

        let state = AdmmState {
            ell_plus: EdgeVector::new(b, ell_p)?,
            ell_minus: EdgeVector::new(b, ell_m)?,
            v_plus: EdgeVector::new(b, v_p)?,
            v_minus: EdgeVector::new(b, v_m)?,
            lam1,
            lam2,
        };
        let laplacians = read_out(&state.v_plus, &state.v_minus);
        Ok((laplacians, state, stats))
    }
}

/// Laplacians built from the `v` iterates, each rescaled to trace `b`.
pub(crate) fn read_out(v_plus: &EdgeVector, v_minus: &EdgeVector) -> LaplacianPair {
    let b = v_plus.nodes() as f64;
    let build = |v: &EdgeVector| {
        let l = laplacian_from_edges(v);
        let tr = l.trace();
        if tr > 0.0 {
            l * (b / tr)
        } else {
            l
        }
    };
    LaplacianPair {
        positive: build(v_plus),
        negative: build(v_minus),
    }
}

/// Runs the ADMM Laplacian update for fixed hidden-node terms.
///
/// Stops after `inner_iters` rounds or once `max(‖v⁺-ℓ⁺‖∞, ‖v⁻-ℓ⁻‖∞)` drops
/// below `primal_tol`. The returned Laplacians come from the `v` iterates, so
/// sign and disjoint-support constraints hold exactly.
pub fn admm_l_update(
    cb: &DMatrix<f64>,
    aux: &HiddenAux,
    init: AdmmState,
    bcd: &BcdConfig,
    admm: &AdmmConfig,
) -> Result<(LaplacianPair, AdmmState, InnerStats)> {
    bcd.validate()?;
    admm.validate()?;
    let block = LaplacianBlock::new(
        cb,
        BlockWeights::from_bcd(bcd),
        [aux.offset(Sign::Positive), aux.offset(Sign::Negative)],
        admm.rho,
    )?;
    if init.ell_plus.nodes() != cb.nrows() {
        return Err(Error::Dimension {
            expected: cb.nrows(),
            got: init.ell_plus.nodes(),
        });
    }
    block.run(init, admm)
}
