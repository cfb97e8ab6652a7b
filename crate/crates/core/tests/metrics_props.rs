use nalgebra::DMatrix;
use proptest::prelude::*;
use sgl_core::graph::{laplacian, SignedGraph};
use sgl_core::metrics::*;
use sgl_core::LaplacianPair;
use EdgeLabel::{Negative as M, None as O, Positive as P};

#[test]
fn nmi_hand_fixture() {
    // Joint counts (est, truth): (+,+) 2, (-,-) 1, (none,none) 2, (+,none) 1.
    let est = EdgeLabels::new(4, vec![P, P, M, O, O, P]).unwrap();
    let truth = EdgeLabels::new(4, vec![P, P, M, O, O, O]).unwrap();
    let v = nmi(&est, &truth).unwrap();
    assert!((v - 0.6853314789615866).abs() < 1e-12, "{v}");
}

fn signed_matrix(n: usize, vals: &[i8]) -> DMatrix<f64> {
    let mut w = DMatrix::zeros(n, n);
    let mut k = 0;
    for i in 0..n {
        for j in (i + 1)..n {
            let v = f64::from(vals[k % vals.len()]);
            w[(i, j)] = v;
            w[(j, i)] = v;
            k += 1;
        }
    }
    w
}

fn weighted_pair(n: usize, vals: &[f64]) -> LaplacianPair {
    let mut w = DMatrix::zeros(n, n);
    let mut k = 0;
    for i in 0..n {
        for j in (i + 1)..n {
            w[(i, j)] = vals[k % vals.len()];
            w[(j, i)] = w[(i, j)];
            k += 1;
        }
    }
    SignedGraph::new(w).unwrap().laplacians()
}

fn permute(m: &DMatrix<f64>, perm: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(perm[i], perm[j])])
}

/// Spectral norm from the dense SVD, an independent path from the
/// eigenvalue-based implementation.
fn dense_rel_err(est: &DMatrix<f64>, truth: &DMatrix<f64>) -> f64 {
    let n = truth.nrows() as f64;
    let e = est * (n / est.trace());
    let t = truth * (n / truth.trace());
    let top = (&e - &t).singular_values().max();
    top * top / t.iter().map(|x| x * x).sum::<f64>()
}

#[test]
fn rel_err_matches_dense_oracle() {
    let est = weighted_pair(5, &[0.3, -1.2, 0.0, 2.0, 0.7, -0.4, 1.1]);
    let truth = weighted_pair(5, &[1.0, -1.0, 1.0, 0.0, 1.0, -1.0, 0.0, 1.0]);
    let r = rel_err(&est, &truth, RelErrNorm::Spectral).unwrap();
    let plus = dense_rel_err(&est.positive, &truth.positive);
    let minus = dense_rel_err(&est.negative, &truth.negative);
    assert!((r.plus.unwrap() - plus).abs() < 1e-12);
    assert!((r.minus.unwrap() - minus).abs() < 1e-12);
    assert!((r.relerr - (plus + minus) / 2.0).abs() < 1e-12);
}

#[test]
fn frobenius_rel_err_differs_from_spectral() {
    let est = weighted_pair(5, &[0.3, -1.2, 0.0, 2.0, 0.7, -0.4, 1.1]);
    let truth = weighted_pair(5, &[1.0, -1.0, 1.0, 0.0, 1.0, -1.0, 0.0, 1.0]);
    let s = rel_err(&est, &truth, RelErrNorm::Spectral).unwrap();
    let f = rel_err(&est, &truth, RelErrNorm::Frobenius).unwrap();
    assert!(f.relerr >= s.relerr);
}

#[test]
fn exact_truth_thresholds_to_its_signs() {
    let w = signed_matrix(6, &[1, 0, -1, 1, 0, 0, -1]);
    let truth = SignedGraph::new(w.clone()).unwrap().laplacians();
    let labels = threshold_edges(&truth, 0.1).unwrap();
    assert_eq!(labels, EdgeLabels::from_signed(&w));
    let report = evaluate(&truth, &truth, 0.1, RelErrNorm::Spectral).unwrap();
    assert_eq!(report.relerr, 0.0);
    assert_eq!(report.fscore, 1.0);
    assert!((report.nmi - 1.0).abs() < 1e-12);
    let zero = evaluate(&LaplacianPair::zeros(6), &truth, 0.1, RelErrNorm::Spectral).unwrap();
    assert_eq!((zero.recall, zero.fscore, zero.nmi), (0.0, 0.0, 0.0));
}

#[test]
fn tau_zero_keeps_every_nonzero_weight() {
    let lp = weighted_pair(4, &[1e-9, -2.0, 0.0, 3.0, -1e-12, 0.5]);
    let labels = threshold_edges(&lp, 0.0).unwrap();
    assert_eq!(labels.labels(), &[P, M, O, P, M, P]);
}

proptest! {
    #[test]
    fn metric_ranges_and_symmetry(
        n in 3usize..8,
        a in proptest::collection::vec(-1i8..=1, 28),
        b in proptest::collection::vec(-1i8..=1, 28),
    ) {
        let la = EdgeLabels::from_signed(&signed_matrix(n, &a));
        let lb = EdgeLabels::from_signed(&signed_matrix(n, &b));
        let ab = prf(&la, &lb).unwrap();
        prop_assert!((0.0..=1.0).contains(&ab.fscore));
        let x = nmi(&la, &lb).unwrap();
        prop_assert!((0.0..=1.0).contains(&x));
        prop_assert!((x - nmi(&lb, &la).unwrap()).abs() < 1e-12);
        let ba = prf(&lb, &la).unwrap();
        prop_assert_eq!(ab.precision_plus, ba.recall_plus);
        prop_assert_eq!(ab.recall_minus, ba.precision_minus);
    }

    #[test]
    fn metrics_are_permutation_invariant(
        n in 3usize..8,
        est in proptest::collection::vec(-2.0f64..2.0, 28),
        truth in proptest::collection::vec(-1i8..=1, 28),
        shuffle in proptest::collection::vec(0usize..1000, 8),
    ) {
        let mut perm: Vec<usize> = (0..n).collect();
        for (i, s) in shuffle.iter().take(n).enumerate() {
            perm.swap(i, s % n);
        }
        let est_w = weighted_pair(n, &est);
        let truth_w = signed_matrix(n, &truth);
        prop_assume!(truth_w.iter().any(|&x| x > 0.0) && truth_w.iter().any(|&x| x < 0.0));
        let truth_lp = SignedGraph::new(truth_w.clone()).unwrap().laplacians();
        let permuted_est = LaplacianPair {
            positive: permute(&est_w.positive, &perm),
            negative: permute(&est_w.negative, &perm),
        };
        let permuted_truth = SignedGraph::new(permute(&truth_w, &perm)).unwrap().laplacians();
        let a = evaluate(&est_w, &truth_lp, 0.1, RelErrNorm::Spectral).unwrap();
        let b = evaluate(&permuted_est, &permuted_truth, 0.1, RelErrNorm::Spectral).unwrap();
        prop_assert_eq!(a.fscore, b.fscore);
        prop_assert_eq!(a.precision, b.precision);
        prop_assert!((a.nmi - b.nmi).abs() < 1e-12);
        prop_assert!((a.relerr - b.relerr).abs() < 1e-9);
    }

    #[test]
    fn rel_err_is_scale_invariant(
        vals in proptest::collection::vec(0.01f64..2.0, 10),
        scale in 0.01f64..100.0,
    ) {
        let w = signed_matrix(5, &[1, -1, 1, 0, 1, -1, 0, 1, 1, -1]);
        let truth = SignedGraph::new(w).unwrap().laplacians();
        let mut est_w = DMatrix::zeros(5, 5);
        let mut k = 0;
        for i in 0..5 {
            for j in (i + 1)..5 {
                est_w[(i, j)] = vals[k];
                est_w[(j, i)] = vals[k];
                k += 1;
            }
        }
        let est = LaplacianPair { positive: laplacian(&est_w).unwrap(), negative: truth.negative.clone() };
        let scaled = LaplacianPair { positive: &est.positive * scale, negative: &est.negative * scale };
        let a = rel_err(&est, &truth, RelErrNorm::Spectral).unwrap();
        let b = rel_err(&scaled, &truth, RelErrNorm::Spectral).unwrap();
        prop_assert!((a.relerr - b.relerr).abs() < 1e-10);
        prop_assert_eq!(rel_err(&truth, &truth, RelErrNorm::Spectral).unwrap().relerr, 0.0);
    }
}
