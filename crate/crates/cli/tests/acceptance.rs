//! Acceptance criteria 1 to 12. Prints one PASS/FAIL line per criterion and
//! exits nonzero when any criterion fails.

use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sgl_cli::commands::{realdata, synthetic_cell, BUNDLED_EDGE_LIST};
use sgl_cli::edgelist::parse_edge_list;
use sgl_cli::report::mean_stderr;
use sgl_cli::{ExperimentConfig, Method, ResultRow};
use sgl_core::graph::*;
use sgl_core::metrics::DEFAULT_TAU;
use sgl_core::solver::*;
use sgl_core::synth::synthesize;
use sgl_core::{GenConfig, Sign};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_cov(r: &mut ChaCha8Rng, b: usize) -> DMatrix<f64> {
    let k = 3 * b;
    let x = DMatrix::from_fn(b, k, |_, _| r.random::<f64>() * 2.0 - 1.0);
    let c = &x * x.transpose() / k as f64;
    (&c + c.transpose()) * 0.5
}

fn dense_incidence(b: usize) -> DMatrix<f64> {
    let mut s = DMatrix::zeros(b, pair_count(b));
    for (e, &(i, j)) in PairIncidence::new(b).endpoints().iter().enumerate() {
        s[(i, e)] = 1.0;
        s[(j, e)] = 1.0;
    }
    s
}

fn dense_laplacian(ell: &EdgeVector) -> DMatrix<f64> {
    let b = ell.nodes();
    let mut l = DMatrix::zeros(b, b);
    for (e, &(i, j)) in PairIncidence::new(b).endpoints().iter().enumerate() {
        let v = ell.as_slice()[e];
        l[(i, j)] = v;
        l[(j, i)] = v;
        l[(i, i)] -= v;
        l[(j, j)] -= v;
    }
    l
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut r = rng(101);
    let mut exact = 0;
    for _ in 0..200 {
        let b = r.random_range(2..=20);
        let mut a = DMatrix::zeros(b, b);
        for i in 0..b {
            for j in (i + 1)..b {
                let v = f64::from(r.random_range(-100i32..=100));
                a[(i, j)] = v;
                a[(j, i)] = v;
            }
        }
        let s = PairIncidence::new(b);
        let sv = incidence_apply(&s, &upper_vec(&a).unwrap()).unwrap();
        if sv == &a * DVector::from_element(b, 1.0) {
            exact += 1;
        }
    }
    let t = start.elapsed();
    outcome(exact == 200 && t < Duration::from_secs(1), format!("{exact}/200 exact in {t:.2?}"))
}

fn criterion_2() -> Outcome {
    let mut r = rng(102);
    let (mut worst_tr, mut worst_fro) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let b = r.random_range(2..=15);
        let c = random_cov(&mut r, b);
        let ell = EdgeVector::new(b, DVector::from_fn(pair_count(b), |_, _| -2.0 * r.random::<f64>())).unwrap();
        let l = dense_laplacian(&ell);
        let tr = (&c * &l).trace();
        let q = trace_form_coeffs(&c).unwrap();
        worst_tr = worst_tr.max((q.as_vector().dot(ell.as_vector()) - tr).abs() / (1.0 + tr.abs()));
        let fro = l.norm_squared();
        let quad = frobenius_quad(&ell, &PairIncidence::new(b)).unwrap();
        worst_fro = worst_fro.max((quad - fro).abs() / (1.0 + fro));
    }
    outcome(
        worst_tr <= 1e-10 && worst_fro <= 1e-10,
        format!("trace rel err {worst_tr:.1e}, Frobenius rel err {worst_fro:.1e}"),
    )
}

fn criterion_3() -> Outcome {
    let mut r = rng(103);
    let (mut worst_sum, mut worst_idem) = (0.0f64, 0.0f64);
    for _ in 0..200 {
        let b = r.random_range(2..=20);
        let x = DVector::from_fn(pair_count(b), |_, _| r.random::<f64>() * 10.0 - 5.0);
        let px = project_hyperplane(&x, b);
        worst_sum = worst_sum.max((px.sum() + b as f64 / 2.0).abs());
        worst_idem = worst_idem.max((project_hyperplane(&px, b) - &px).amax());
    }
    let a = DVector::from_fn(10_000, |_, _| r.random::<f64>() * 6.0 - 3.0);
    let c = DVector::from_fn(10_000, |_, _| r.random::<f64>() * 6.0 - 3.0);
    let (vp, vm) = project_complementarity(&a, &c).unwrap();
    let mut mismatches = 0;
    for e in 0..a.len() {
        let first = (a[e].min(0.0), 0.0);
        let second = (0.0, c[e].min(0.0));
        let cost = |(x, y): (f64, f64)| (x - a[e]).powi(2) + (y - c[e]).powi(2);
        let best = if cost(second) < cost(first) { second } else { first };
        if (vp[e], vm[e]) != best {
            mismatches += 1;
        }
    }
    outcome(
        worst_sum <= 1e-12 && worst_idem <= 1e-12 && mismatches == 0,
        format!("hyperplane gap {worst_sum:.1e}, idempotence {worst_idem:.1e}, {mismatches}/10000 complementarity mismatches"),
    )
}

fn criterion_4() -> Outcome {
    let mut r = rng(104);
    let cfg = BcdConfig::default();
    let mut worst = 0.0f64;
    let mut min_g = f64::INFINITY;
    for _ in 0..20 {
        let b = r.random_range(3..9);
        let c = random_cov(&mut r, b);
        let q = trace_form_coeffs(&c).unwrap();
        let on_plane = |r: &mut ChaCha8Rng| {
            let raw = DVector::from_fn(pair_count(b), |_, _| -r.random::<f64>());
            EdgeVector::new(b, project_hyperplane(&raw, b)).unwrap()
        };
        let lp = on_plane(&mut r);
        let lm = on_plane(&mut r);
        // Offsets chosen so both barrier arguments land in [0.1, 1.1].
        let mut aux = HiddenAux::zeros(b);
        for (ell, sign) in [(&lp, Sign::Positive), (&lm, Sign::Negative)] {
            let target = 0.1 + r.random::<f64>();
            let rr = 0.5 * r.random::<f64>();
            let p = (target - q.as_vector().dot(ell.as_vector()) - rr) / (2.0 * b as f64);
            match sign {
                Sign::Positive => {
                    aux.p_plus = DVector::from_element(b, p);
                    aux.r_plus = rr;
                }
                Sign::Negative => {
                    aux.p_minus = DVector::from_element(b, p);
                    aux.r_minus = rr;
                }
            }
            min_g = min_g.min(barrier_argument(&q, ell, &aux, sign));
        }
        let (gp, gm) = grad_f(&lp, &lm, &q, &aux, &cfg).unwrap();
        let h = 1e-6;
        for (which, grad) in [(0, &gp), (1, &gm)] {
            let fd = DVector::from_fn(q.len(), |e, _| {
                let shift = |delta: f64| {
                    let (mut a, mut m) = (lp.as_vector().clone(), lm.as_vector().clone());
                    if which == 0 {
                        a[e] += delta;
                    } else {
                        m[e] += delta;
                    }
                    let a = EdgeVector::new(b, a).unwrap();
                    let m = EdgeVector::new(b, m).unwrap();
                    subproblem_objective(&a, &m, &q, &aux, &cfg).unwrap()
                };
                (shift(h) - shift(-h)) / (2.0 * h)
            });
            worst = worst.max((&fd - grad.as_vector()).amax() / grad.as_vector().amax().max(1e-12));
        }
    }
    outcome(
        worst < 1e-5 && min_g >= 0.1 - 1e-12,
        format!("max relative error {worst:.1e}, min barrier argument {min_g:.3}"),
    )
}

fn criterion_5() -> Outcome {
    let mut r = rng(105);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let b = r.random_range(2..=12);
        let q = trace_form_coeffs(&random_cov(&mut r, b)).unwrap();
        let p = q.len();
        let rhs = EdgeVector::new(b, DVector::from_fn(p, |_, _| r.random::<f64>() - 0.5)).unwrap();
        let alpha = 0.01 + r.random::<f64>();
        let rho = 0.1 + 2.0 * r.random::<f64>();
        let g = 0.05 + r.random::<f64>();
        let weight = [0.1, 1.0, 10.0][r.random_range(0..3)];
        let x = newton_system_solve(&q, g, weight, alpha, rho, &rhs).unwrap();
        let s = dense_incidence(b);
        let a = (DMatrix::identity(p, p) * 2.0 + s.transpose() * &s) * (2.0 * alpha)
            + DMatrix::identity(p, p) * rho
            + q.as_vector() * q.as_vector().transpose() * (weight / (g * g));
        let dense = a.clone().lu().solve(rhs.as_vector()).unwrap();
        let residual = (&a * x.as_vector() - rhs.as_vector()).norm() / rhs.as_vector().norm();
        let agreement = (&dense - x.as_vector()).norm() / dense.norm();
        worst = worst.max(residual).max(agreement);
    }
    outcome(worst < 1e-8, format!("worst relative residual {worst:.1e} over 50 instances"))
}

/// `±2·1ᵀp + σ‖p‖₁` for the sign-`sign` column-sparse block.
fn p_objective(p: &DVector<f64>, sign: f64, sigma: f64) -> f64 {
    sign * 2.0 * p.sum() + sigma * p.lp_norm(1)
}

fn project_halfspace(p: &mut DVector<f64>, t: f64) {
    let gap = t - p.sum();
    if gap > 0.0 {
        p.add_scalar_mut(gap / p.len() as f64);
    }
}

fn p_reference(b: usize, t: f64, sign: f64, sigma: f64, r: &mut ChaCha8Rng) -> f64 {
    let mut p = DVector::from_fn(b, |_, _| r.random::<f64>() * 2.0 - 1.0);
    project_halfspace(&mut p, t);
    let mut best = p_objective(&p, sign, sigma);
    let mut step = 0.5;
    for _ in 0..50_000 {
        let g = p.map(|x| sign * 2.0 + sigma * x.signum());
        p.axpy(-step, &g, 1.0);
        project_halfspace(&mut p, t);
        best = best.min(p_objective(&p, sign, sigma));
        step *= 0.9995;
    }
    best
}

fn criterion_6() -> Outcome {
    let mut r = rng(106);
    let (mut worst_ref, mut worst_sample, mut worst_r) = (0.0f64, 0.0f64, 0.0f64);
    let mut samples = 0usize;
    for _ in 0..50 {
        let b = r.random_range(2..=12);
        let cfg = BcdConfig {
            sigma_plus: 2.5 + 2.5 * r.random::<f64>(),
            sigma_minus: 2.5 + 2.5 * r.random::<f64>(),
            ..BcdConfig::default()
        };
        let mut aux = HiddenAux::zeros(b);
        aux.r_plus = r.random::<f64>();
        aux.r_minus = r.random::<f64>();
        let trace_plus = r.random::<f64>() * 6.0 - 3.0;
        let trace_minus = r.random::<f64>() * 6.0 - 3.0;
        let (pp, pm) = p_update(trace_plus, trace_minus, &aux, &cfg).unwrap();
        for (p, trace, rr, sign, sigma) in [
            (&pp, trace_plus, aux.r_plus, 1.0, cfg.sigma_plus),
            (&pm, trace_minus, aux.r_minus, -1.0, cfg.sigma_minus),
        ] {
            let t = -(trace + rr) / 2.0;
            let closed = p_objective(p, sign, sigma);
            worst_ref = worst_ref.max((closed - p_reference(b, t, sign, sigma, &mut r)).abs());
            for _ in 0..1_000 {
                let scale = [0.01, 1.0, 10.0][r.random_range(0..3)];
                let mut z = DVector::from_fn(b, |_, _| scale * (r.random::<f64>() * 2.0 - 1.0));
                project_halfspace(&mut z, t);
                worst_sample = worst_sample.max(closed - p_objective(&z, sign, sigma));
                samples += 1;
            }
        }
        // The scalar update minimizes R over {R ≥ 0, input + R ≥ 0}.
        let full_plus = trace_plus + 2.0 * pp.sum();
        let full_minus = trace_minus + 2.0 * pm.sum();
        let (rp, rm) = r_update(full_plus, full_minus);
        for (rv, input) in [(rp, full_plus), (rm, full_minus)] {
            worst_r = worst_r.max((rv - (-input).max(0.0)).abs());
        }
    }
    outcome(
        worst_ref < 1e-5 && worst_sample <= 1e-7 && worst_r <= 1e-12,
        format!(
            "reference gap {worst_ref:.1e}, best sampled improvement {worst_sample:.1e} over {samples} samples, scalar gap {worst_r:.1e}"
        ),
    )
}

fn criterion_7() -> Outcome {
    let mut failures = Vec::new();
    let (mut worst_trace, mut worst_tv) = (0.0f64, f64::INFINITY);
    for seed in 0..5 {
        let gen = GenConfig { seed, ..GenConfig::default() };
        let inst = synthesize(&gen, 2).unwrap();
        let c = &inst.observed.covariance;
        let out = match sgl_hncs(c, &BcdConfig::default(), &AdmmConfig::default()) {
            Ok(o) => o,
            Err(e) => {
                failures.push(format!("seed {seed}: {e}"));
                continue;
            }
        };
        let lp = &out.laplacians;
        let b = lp.n();
        if !lp.supports_disjoint() {
            failures.push(format!("seed {seed}: supports overlap"));
        }
        for l in [&lp.positive, &lp.negative] {
            if (0..b).any(|i| (0..b).any(|j| i != j && l[(i, j)] > 0.0)) {
                failures.push(format!("seed {seed}: positive off-diagonal"));
            }
            worst_trace = worst_trace.max((l.trace() - b as f64).abs());
        }
        for (l, sign) in [(&lp.positive, Sign::Positive), (&lp.negative, Sign::Negative)] {
            worst_tv = worst_tv.min((c * l).trace() + out.aux.offset(sign));
        }
    }
    let pass = failures.is_empty() && worst_trace <= 1e-6 && worst_tv >= -1e-8;
    let mut detail = format!("5 seeds: trace gap {worst_trace:.1e}, min constraint value {worst_tv:.3e}");
    if !failures.is_empty() {
        detail.push_str(&format!("; {}", failures.join("; ")));
    }
    outcome(pass, detail)
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut out = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = avg;
        }
        i = j + 1;
    }
    out
}

fn spearman(x: &[f64], y: &[f64]) -> f64 {
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

/// Mean and standard error of F-score and RelErr per method at one point.
#[derive(Debug, Clone, Copy)]
struct PointStats {
    f: (f64, f64),
    relerr: (f64, f64),
    failed: usize,
}

fn point_stats(rows: &[ResultRow], method: Method) -> PointStats {
    let mine: Vec<&ResultRow> = rows.iter().filter(|r| r.method == method.name()).collect();
    let ok: Vec<&&ResultRow> = mine.iter().filter(|r| r.is_ok()).collect();
    PointStats {
        f: mean_stderr(ok.iter().map(|r| r.fscore)),
        relerr: mean_stderr(ok.iter().map(|r| r.relerr)),
        failed: mine.len() - ok.len(),
    }
}

fn sweep_config() -> ExperimentConfig {
    ExperimentConfig {
        methods: vec!["sgl-hncs".into(), "scsgl".into()],
        tau_grid: vec![DEFAULT_TAU],
        ..ExperimentConfig::default()
    }
}

/// (hncs, scsgl) stats per (H, K) point over 20 seeds.
fn run_points(points: &[(usize, usize)]) -> Vec<(PointStats, PointStats)> {
    let cfg = sweep_config();
    let methods = [Method::SglHncs, Method::Scsgl];
    points
        .iter()
        .map(|&(h, k)| {
            let rows: Vec<ResultRow> = (0..20).flat_map(|seed| synthetic_cell(&cfg, &methods, h, k, seed)).collect();
            (point_stats(&rows, Method::SglHncs), point_stats(&rows, Method::Scsgl))
        })
        .collect()
}

/// At most one non-improving step, and that one within a standard error.
fn monotone_with_one_slack(means: &[(f64, f64)], increasing: bool) -> (bool, usize) {
    let mut inversions = 0;
    let mut within = true;
    for w in means.windows(2) {
        let (a, b) = (w[0], w[1]);
        let improves = if increasing { b.0 > a.0 } else { b.0 < a.0 };
        if !improves {
            inversions += 1;
            within &= (b.0 - a.0).abs() <= a.1.max(b.1);
        }
    }
    (inversions == 0 || (inversions == 1 && within), inversions)
}

fn fmt_series(v: &[(f64, f64)]) -> String {
    v.iter().map(|(m, _)| format!("{m:.4}")).collect::<Vec<_>>().join(" ")
}

fn criterion_8(h_stats: &[(PointStats, PointStats)], elapsed: Duration) -> Outcome {
    let hs: Vec<f64> = (1..=5).map(f64::from).collect();
    let f: Vec<(f64, f64)> = h_stats.iter().map(|s| s.0.f).collect();
    let re: Vec<(f64, f64)> = h_stats.iter().map(|s| s.0.relerr).collect();
    let rho_f = spearman(&hs, &f.iter().map(|x| x.0).collect::<Vec<_>>());
    let rho_re = spearman(&hs, &re.iter().map(|x| x.0).collect::<Vec<_>>());
    let failed: usize = h_stats.iter().map(|s| s.0.failed).sum();
    outcome(
        rho_f <= -0.7 && rho_re >= 0.7 && failed == 0 && elapsed < Duration::from_secs(600),
        format!(
            "spearman(F, H) = {rho_f:.2}, spearman(RelErr, H) = {rho_re:.2}; F {}; RelErr {}; {elapsed:.1?}",
            fmt_series(&f),
            fmt_series(&re)
        ),
    )
}

fn criterion_9(h_stats: &[(PointStats, PointStats)], k_stats: &[(PointStats, PointStats)]) -> Outcome {
    let gaps: Vec<f64> = h_stats.iter().chain(k_stats).map(|(h, s)| h.f.0 - s.f.0).collect();
    let worst = gaps.iter().copied().fold(f64::INFINITY, f64::min);
    outcome(
        worst >= -0.02,
        format!("min over 9 points of mean F(sgl-hncs) - mean F(scsgl) = {worst:+.4}"),
    )
}

fn criterion_10(k_stats: &[(PointStats, PointStats)]) -> Outcome {
    let f: Vec<(f64, f64)> = k_stats.iter().map(|s| s.0.f).collect();
    let re: Vec<(f64, f64)> = k_stats.iter().map(|s| s.0.relerr).collect();
    let (f_ok, f_inv) = monotone_with_one_slack(&f, true);
    let (re_ok, re_inv) = monotone_with_one_slack(&re, false);
    let failed: usize = k_stats.iter().map(|s| s.0.failed).sum();
    outcome(
        f_ok && re_ok && failed == 0,
        format!(
            "F {} ({f_inv} inversions); RelErr {} ({re_inv} inversions)",
            fmt_series(&f),
            fmt_series(&re)
        ),
    )
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

fn criterion_11() -> Outcome {
    let bcd = BcdConfig {
        outer_tol: 0.0,
        ..BcdConfig::default()
    };
    let (mut e1, mut e10, mut e50) = (Vec::new(), Vec::new(), Vec::new());
    for seed in 0..10 {
        let inst = synthesize(&GenConfig { seed, ..GenConfig::default() }, 2).unwrap();
        match sgl_hncs(&inst.observed.covariance, &bcd, &AdmmConfig::default()) {
            Ok(out) if out.trace.error.len() >= 50 => {
                e1.push(out.trace.error[0]);
                e10.push(out.trace.error[9]);
                e50.push(out.trace.error[49]);
            }
            Ok(out) => return outcome(false, format!("seed {seed}: only {} iterations", out.trace.error.len())),
            Err(e) => return outcome(false, format!("seed {seed}: {e}")),
        }
    }
    let (m1, m10, m50) = (median(e1), median(e10), median(e50));
    outcome(
        m10 <= m1 / 10.0 && m50 < 1e-3,
        format!("median Error(1) = {m1:.2e}, Error(10) = {m10:.2e}, Error(50) = {m50:.2e}"),
    )
}

fn criterion_12() -> Outcome {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let edges = parse_edge_list(BUNDLED_EDGE_LIST.as_bytes()).unwrap();
    let cfg = ExperimentConfig {
        tau_grid: vec![DEFAULT_TAU],
        ..ExperimentConfig::default()
    };
    let rows = match realdata(&cfg, &edges, "bundled", dir.path(), sgl_cli::commands::default_workers()) {
        Ok(rows) => rows,
        Err(e) => return outcome(false, format!("pipeline failed: {e}")),
    };
    let elapsed = start.elapsed();
    let mut margins = Vec::new();
    for &k in &cfg.signal_counts {
        let at_k: Vec<ResultRow> = rows.iter().filter(|r| r.k == k).cloned().collect();
        let hncs = point_stats(&at_k, Method::SglHncs);
        let chance = point_stats(&at_k, Method::Chance);
        margins.push((k, hncs.f.0, chance.f.0, hncs.failed));
    }
    let pass = margins.iter().all(|&(_, f, c, failed)| f > c && failed == 0) && elapsed < Duration::from_secs(120);
    let detail = margins
        .iter()
        .map(|(k, f, c, _)| format!("K={k}: F {f:.3} vs chance {c:.3}"))
        .collect::<Vec<_>>()
        .join(", ");
    outcome(pass, format!("{detail}; {elapsed:.1?}"))
}

fn main() {
    let mut results: Vec<(u32, Outcome)> = Vec::new();
    let mut report = |n: u32, o: Outcome| {
        println!("criterion {n:>2}: {} ({})", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        results.push((n, o));
    };
    report(1, criterion_1());
    report(2, criterion_2());
    report(3, criterion_3());
    report(4, criterion_4());
    report(5, criterion_5());
    report(6, criterion_6());
    report(7, criterion_7());

    let start = Instant::now();
    let h_stats = run_points(&[(1, 50), (2, 50), (3, 50), (4, 50), (5, 50)]);
    let h_elapsed = start.elapsed();
    let k_stats = run_points(&[(2, 20), (2, 50), (2, 100), (2, 200)]);
    report(8, criterion_8(&h_stats, h_elapsed));
    report(9, criterion_9(&h_stats, &k_stats));
    report(10, criterion_10(&k_stats));
    report(11, criterion_11());
    report(12, criterion_12());

    let failed: Vec<u32> = results.iter().filter(|(_, o)| !o.pass).map(|(n, _)| *n).collect();
    if failed.is_empty() {
        println!("acceptance: all 12 criteria pass");
    } else {
        println!("acceptance: failing criteria {failed:?}");
        std::process::exit(1);
    }
}
