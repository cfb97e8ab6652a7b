//! The four subcommands and the method runners they share.

use std::path::{Path, PathBuf};
use std::sync::mpsc;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use sgl_core::baselines::{gl_from_covariance, scsgl_from_covariance};
use sgl_core::metrics::{evaluate, nmi, prf, threshold_edges, EdgeLabel, EdgeLabels, MetricReport};
use sgl_core::synth::{gen_signals, hide_nodes, observed_groundtruth, synthesize};
use sgl_core::{sgl_hncs, LaplacianPair, ObservedData, SolveTrace};

use crate::config::{ExperimentConfig, Method, SweepAxis};
use crate::dataset::{read_dataset, write_dataset};
use crate::edgelist::{write_mapping, EdgeList};
use crate::error::CliError;
use crate::report::{aggregate, best_over_tau, write_rows, write_serialized, OrderedWriter, Point, ResultRow};

pub const DEFAULT_HIDDEN: usize = 2;
pub const DEFAULT_REALDATA_HIDDEN: usize = 5;
const CHANCE_STREAM: u64 = 16;

pub const RESULTS_FILE: &str = "results.csv";
pub const AGGREGATE_FILE: &str = "aggregate.csv";
pub const BEST_FILE: &str = "best.csv";
pub const TRACE_FILE: &str = "trace.json";
pub const CONFIG_STAMP_FILE: &str = "config.toml";
pub const MAPPING_FILE: &str = "node_ids.txt";
pub const METADATA_FILE: &str = "metadata.json";

#[derive(Debug, Clone)]
pub struct MethodRun {
    pub laplacians: LaplacianPair,
    pub trace: Option<SolveTrace>,
    /// BCD rounds for sgl-hncs, projected-gradient iterations for gl, 0 for scsgl.
    pub iterations: usize,
    pub wall_ms: f64,
}

#[derive(Debug, Clone)]
pub struct MethodFailure {
    pub reason: String,
    pub trace: Option<SolveTrace>,
    pub iterations: usize,
    pub wall_ms: f64,
}

pub fn run_method(method: Method, obs: &ObservedData, cfg: &ExperimentConfig) -> Result<MethodRun, MethodFailure> {
    let start = Instant::now();
    let ms = |s: Instant| s.elapsed().as_secs_f64() * 1e3;
    let fail = |reason: String, trace: Option<SolveTrace>, iterations: usize| MethodFailure {
        reason,
        trace,
        iterations,
        wall_ms: ms(start),
    };
    let c = &obs.covariance;
    match method {
        Method::SglHncs => match sgl_hncs(c, &cfg.bcd(), &cfg.admm()) {
            Ok(out) => Ok(MethodRun {
                iterations: out.trace.outer_iterations(),
                laplacians: out.laplacians,
                trace: Some(out.trace),
                wall_ms: ms(start),
            }),
            Err(f) => {
                let it = f.trace.outer_iterations();
                Err(fail(f.error.to_string(), Some(f.trace), it))
            }
        },
        Method::Scsgl => scsgl_from_covariance(c, cfg.alpha_plus, cfg.alpha_minus, &cfg.admm())
            .map(|lp| MethodRun {
                laplacians: lp,
                trace: None,
                iterations: 0,
                wall_ms: ms(start),
            })
            .map_err(|e| fail(e.to_string(), None, 0)),
        Method::Gl => gl_from_covariance(c, &cfg.gl())
            .map(|out| {
                let b = out.laplacian.nrows();
                MethodRun {
                    laplacians: LaplacianPair {
                        positive: out.laplacian,
                        negative: nalgebra::DMatrix::zeros(b, b),
                    },
                    trace: None,
                    iterations: out.objective.len() - 1,
                    wall_ms: ms(start),
                }
            })
            .map_err(|e| fail(e.to_string(), None, 0)),
        Method::Chance => Err(fail("chance is not a solver".into(), None, 0)),
    }
}

/// One row per tau for a finished or failed run.
pub fn evaluate_rows(
    method: Method,
    seed: u64,
    point: Point,
    run: &Result<MethodRun, MethodFailure>,
    truth: &LaplacianPair,
    cfg: &ExperimentConfig,
) -> Vec<ResultRow> {
    let name = method.name();
    match run {
        Ok(r) => cfg
            .tau_grid
            .iter()
            .map(|&tau| match evaluate(&r.laplacians, truth, tau, cfg.relerr_norm) {
                Ok(m) => ResultRow::ok(name, seed, point, &m, r.iterations, r.wall_ms),
                Err(e) => ResultRow::failed(name, seed, point, tau, r.iterations, r.wall_ms, &e.to_string()),
            })
            .collect(),
        Err(f) => cfg
            .tau_grid
            .iter()
            .map(|&tau| ResultRow::failed(name, seed, point, tau, f.iterations, f.wall_ms, &f.reason))
            .collect(),
    }
}

/// Metrics of uniformly random labelings that keep the estimate's number of
/// positive and negative edges, averaged over `draws` labelings.
pub fn chance_report(est: &EdgeLabels, truth: &EdgeLabels, draws: usize, rng: &mut ChaCha8Rng) -> sgl_core::Result<MetricReport> {
    let b = est.b();
    let slots = est.labels().len();
    let n_pos = est.count(EdgeLabel::Positive);
    let n_neg = est.count(EdgeLabel::Negative);
    let mut acc = [0.0f64; 6];
    for _ in 0..draws {
        let mut labels = vec![EdgeLabel::None; slots];
        for (rank, slot) in rand::seq::index::sample(rng, slots, n_pos + n_neg).into_iter().enumerate() {
            labels[slot] = if rank < n_pos { EdgeLabel::Positive } else { EdgeLabel::Negative };
        }
        let labels = EdgeLabels::new(b, labels)?;
        let s = prf(&labels, truth)?;
        let vals = [s.fscore, s.fscore_plus, s.fscore_minus, s.precision, s.recall, nmi(&labels, truth)?];
        for (a, v) in acc.iter_mut().zip(vals) {
            *a += v / draws as f64;
        }
    }
    Ok(MetricReport {
        tau: f64::NAN,
        relerr: f64::NAN,
        relerr_plus: f64::NAN,
        relerr_minus: f64::NAN,
        fscore: acc[0],
        fscore_plus: acc[1],
        fscore_minus: acc[2],
        precision: acc[3],
        recall: acc[4],
        nmi: acc[5],
    })
}

/// Chance rows matched tau by tau to the estimate `est`.
pub fn chance_rows(seed: u64, point: Point, est: &LaplacianPair, truth: &LaplacianPair, cfg: &ExperimentConfig) -> Vec<ResultRow> {
    let name = Method::Chance.name();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(CHANCE_STREAM);
    cfg.tau_grid
        .iter()
        .map(|&tau| {
            let report = threshold_edges(truth, 0.0).and_then(|truth_labels| {
                let est_labels = threshold_edges(est, tau)?;
                chance_report(&est_labels, &truth_labels, cfg.chance_draws, &mut rng)
            });
            match report {
                Ok(r) => ResultRow::ok(name, seed, point, &MetricReport { tau, ..r }, 0, 0.0),
                Err(e) => ResultRow::failed(name, seed, point, tau, 0, 0.0, &e.to_string()),
            }
        })
        .collect()
}

/// Runs `f` on every cell with at most `workers` threads and streams each
/// cell's rows, in cell order, to `path`.
pub fn run_cells<C: Sync>(
    cells: &[C],
    workers: usize,
    path: &Path,
    f: impl Fn(&C) -> Vec<ResultRow> + Sync,
) -> Result<Vec<ResultRow>, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| CliError::Output(e.to_string()))?;
    let mut writer = OrderedWriter::create(path)?;
    let (tx, rx) = mpsc::channel();
    std::thread::scope(|s| {
        s.spawn(|| {
            pool.install(|| {
                cells
                    .par_iter()
                    .enumerate()
                    .for_each_with(tx, |tx, (i, cell)| {
                        // The receiver only disappears after a write error.
                        let _ = tx.send((i, f(cell)));
                    })
            })
        });
        for (i, rows) in rx {
            writer.submit(i, rows)?;
        }
        Ok::<(), CliError>(())
    })?;
    writer.finish()
}

pub fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn trial_seeds(cfg: &ExperimentConfig) -> Vec<u64> {
    (0..cfg.trials as u64).map(|t| cfg.seed.wrapping_add(t)).collect()
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::output(path, e))?;
    std::fs::write(path, text + "\n").map_err(|e| CliError::output(path, e))
}

fn write_aggregates(out: &Path, rows: &[ResultRow]) -> Result<(), CliError> {
    write_serialized(&out.join(AGGREGATE_FILE), &aggregate(rows))?;
    write_serialized(&out.join(BEST_FILE), &best_over_tau(rows))
}

fn stamp_config(out: &Path, cfg: &ExperimentConfig) -> Result<(), CliError> {
    let path = out.join(CONFIG_STAMP_FILE);
    std::fs::write(&path, cfg.to_toml()).map_err(|e| CliError::output(&path, e))
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::output(dir, e))
}

pub fn generate(cfg: &ExperimentConfig, out: &Path) -> Result<(), CliError> {
    let gen = cfg.gen();
    let inst = synthesize(&gen, cfg.hidden_or(DEFAULT_HIDDEN)).map_err(|e| CliError::Config(e.to_string()))?;
    write_dataset(out, &gen, &inst)?;
    log::info!(
        "wrote dataset to {} ({} nodes, {} hidden, {} edges)",
        out.display(),
        gen.n,
        inst.observed.partition.h(),
        inst.graph.edge_count()
    );
    Ok(())
}

#[derive(Debug)]
pub struct LearnOutcome {
    pub rows: Vec<ResultRow>,
    pub failure: Option<String>,
}

/// Learns from a dataset directory. A solver failure still writes its rows
/// and is reported through `LearnOutcome::failure`.
pub fn learn(cfg: &ExperimentConfig, dataset: &Path, method: Method, out: &Path) -> Result<LearnOutcome, CliError> {
    let data = read_dataset(dataset)?;
    let m = &data.manifest;
    let part = &data.observed.partition;
    let point = Point {
        n: m.n,
        b: part.b(),
        h: part.h(),
        k: m.k,
        noise_sigma: m.noise_sigma,
    };
    let run = run_method(method, &data.observed, cfg);
    let rows = evaluate_rows(method, m.seed, point, &run, &data.truth, cfg);

    create_dir(out)?;
    write_rows(&out.join(RESULTS_FILE), &rows)?;
    let trace = match &run {
        Ok(r) => r.trace.as_ref(),
        Err(f) => f.trace.as_ref(),
    };
    if let Some(trace) = trace {
        write_json(&out.join(TRACE_FILE), trace)?;
    }
    if let Ok(r) = &run {
        for (name, l) in [("laplacian_plus.txt", &r.laplacians.positive), ("laplacian_minus.txt", &r.laplacians.negative)] {
            let path = out.join(name);
            let file = std::fs::File::create(&path).map_err(|e| CliError::output(&path, e))?;
            sgl_core::matio::write_text(std::io::BufWriter::new(file), l, &[format!("{method} estimate")])
                .map_err(|e| CliError::output(&path, e))?;
        }
    }
    Ok(LearnOutcome {
        rows,
        failure: run.err().map(|f| f.reason),
    })
}

/// The (H, K) grid of a sweep.
pub fn sweep_points(cfg: &ExperimentConfig) -> Vec<(usize, usize)> {
    let h = cfg.hidden_or(DEFAULT_HIDDEN);
    match cfg.sweep {
        SweepAxis::Hidden => cfg.hidden_counts.iter().map(|&h| (h, cfg.k)).collect(),
        SweepAxis::Signals => cfg.signal_counts.iter().map(|&k| (h, k)).collect(),
        SweepAxis::None => vec![(h, cfg.k)],
    }
}

/// All methods on one synthetic trial.
pub fn synthetic_cell(cfg: &ExperimentConfig, methods: &[Method], h: usize, k: usize, seed: u64) -> Vec<ResultRow> {
    let gen = sgl_core::GenConfig { k, seed, ..cfg.gen() };
    let point = Point {
        n: gen.n,
        b: gen.n - h,
        h,
        k,
        noise_sigma: gen.noise_sigma,
    };
    let inst = match synthesize(&gen, h) {
        Ok(inst) => inst,
        Err(e) => {
            let reason = e.to_string();
            return methods
                .iter()
                .flat_map(|m| cfg.tau_grid.iter().map(move |&tau| (m, tau)))
                .map(|(m, tau)| ResultRow::failed(m.name(), seed, point, tau, 0, 0.0, &reason))
                .collect();
        }
    };
    methods
        .iter()
        .flat_map(|&m| {
            let run = run_method(m, &inst.observed, cfg);
            evaluate_rows(m, seed, point, &run, &inst.truth, cfg)
        })
        .collect()
}

/// Full factorial sweep over methods, points and trials.
pub fn sweep(cfg: &ExperimentConfig, out: &Path, workers: usize) -> Result<Vec<ResultRow>, CliError> {
    let methods = cfg.parsed_methods()?;
    let cells: Vec<(usize, usize, u64)> = sweep_points(cfg)
        .into_iter()
        .flat_map(|(h, k)| trial_seeds(cfg).into_iter().map(move |s| (h, k, s)))
        .collect();
    create_dir(out)?;
    stamp_config(out, cfg)?;
    let rows = run_cells(&cells, workers, &out.join(RESULTS_FILE), |&(h, k, seed)| {
        synthetic_cell(cfg, &methods, h, k, seed)
    })?;
    write_aggregates(out, &rows)?;
    let failed = rows.iter().filter(|r| !r.is_ok()).count();
    if failed > 0 {
        log::warn!("{failed} of {} rows failed", rows.len());
    }
    Ok(rows)
}

/// The synthetic 50-node two-faction network shipped with the harness.
pub const BUNDLED_EDGE_LIST: &str = include_str!("../data/two_factions_50.txt");

#[derive(Debug, Clone, Serialize)]
pub struct RealDataMeta {
    pub source: String,
    pub nodes: usize,
    pub positive_edges: usize,
    pub negative_edges: usize,
    pub self_loops_dropped: usize,
    pub cancelled_pairs: usize,
    pub hidden: usize,
    pub signal_counts: Vec<usize>,
    pub seeds: Vec<u64>,
    pub noise_sigma: f64,
    pub chance_draws: usize,
    pub signal_recipe: String,
}

pub const SIGNAL_RECIPE: &str = "x = (U h1 U^T + V h2 V^T) z + e, with L+ = U diag(lambda) U^T, \
L- = V diag(s) V^T, h1 = pinv(lambda)/||pinv(lambda)|| (low pass on the positive graph), \
h2 = s/||s|| (high pass on the negative graph), z ~ N(0, I), e ~ N(0, noise_sigma^2 I); \
one column per sample, hidden nodes drawn by the synthetic sampler with the same seed";

/// Ingested graph as ground truth, synthesized signals, and a sweep over the
/// signal count. Chance rows pair random labelings with the sgl-hncs estimate
/// (or the first method's, when sgl-hncs is not run).
pub fn realdata(
    cfg: &ExperimentConfig,
    edges: &EdgeList,
    source: &str,
    out: &Path,
    workers: usize,
) -> Result<Vec<ResultRow>, CliError> {
    let methods = cfg.parsed_methods()?;
    let g = &edges.graph;
    let n = g.n();
    let h = cfg.hidden_or(DEFAULT_REALDATA_HIDDEN);
    if h + 2 > n {
        return Err(CliError::Config(format!(
            "hidden: {h} hidden nodes leave fewer than 2 observed of {n}"
        )));
    }
    if cfg.signal_counts.is_empty() || cfg.signal_counts.contains(&0) {
        return Err(CliError::Config("signal_counts: need positive counts".into()));
    }
    let chance_source = if methods.contains(&Method::SglHncs) { Method::SglHncs } else { methods[0] };
    let lp = g.laplacians();
    let seeds = trial_seeds(cfg);
    let w = g.weights();
    let count = |pred: fn(f64) -> bool| (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).filter(|&p| pred(w[p])).count();
    let meta = RealDataMeta {
        source: source.to_string(),
        nodes: n,
        positive_edges: count(|v| v > 0.0),
        negative_edges: count(|v| v < 0.0),
        self_loops_dropped: edges.self_loops_dropped,
        cancelled_pairs: edges.cancelled_pairs,
        hidden: h,
        signal_counts: cfg.signal_counts.clone(),
        seeds: seeds.clone(),
        noise_sigma: cfg.noise_sigma,
        chance_draws: cfg.chance_draws,
        signal_recipe: SIGNAL_RECIPE.to_string(),
    };

    create_dir(out)?;
    stamp_config(out, cfg)?;
    write_json(&out.join(METADATA_FILE), &meta)?;
    let path = out.join(MAPPING_FILE);
    let file = std::fs::File::create(&path).map_err(|e| CliError::output(&path, e))?;
    write_mapping(std::io::BufWriter::new(file), &edges.ids).map_err(|e| CliError::output(&path, e))?;

    let cells: Vec<(usize, u64)> = cfg
        .signal_counts
        .iter()
        .flat_map(|&k| seeds.iter().map(move |&s| (k, s)))
        .collect();
    let rows = run_cells(&cells, workers, &out.join(RESULTS_FILE), |&(k, seed)| {
        let point = Point {
            n,
            b: n - h,
            h,
            k,
            noise_sigma: cfg.noise_sigma,
        };
        let prepared = gen_signals(&lp, k, cfg.noise_sigma, seed)
            .and_then(|x| hide_nodes(&x, h, seed))
            .and_then(|obs| observed_groundtruth(g, &obs.partition).map(|t| (obs, t)));
        let (obs, truth) = match prepared {
            Ok(p) => p,
            Err(e) => {
                let reason = e.to_string();
                return methods
                    .iter()
                    .flat_map(|m| cfg.tau_grid.iter().map(move |&tau| (m, tau)))
                    .map(|(m, tau)| ResultRow::failed(m.name(), seed, point, tau, 0, 0.0, &reason))
                    .collect();
            }
        };
        let mut rows = Vec::new();
        let mut chance = None;
        for &m in &methods {
            let run = run_method(m, &obs, cfg);
            rows.extend(evaluate_rows(m, seed, point, &run, &truth, cfg));
            if m == chance_source {
                chance = Some(match &run {
                    Ok(r) => chance_rows(seed, point, &r.laplacians, &truth, cfg),
                    Err(f) => cfg
                        .tau_grid
                        .iter()
                        .map(|&tau| ResultRow::failed(Method::Chance.name(), seed, point, tau, 0, 0.0, &f.reason))
                        .collect(),
                });
            }
        }
        rows.extend(chance.unwrap_or_default());
        rows
    })?;
    write_aggregates(out, &rows)?;
    Ok(rows)
}

/// Resolves the output directory: flag, then config, then `fallback`.
pub fn output_dir(flag: Option<PathBuf>, cfg: &ExperimentConfig, fallback: &str) -> PathBuf {
    flag.or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from(fallback))
}
