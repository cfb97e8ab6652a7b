//! On-disk synthetic datasets.
//!
//! A dataset directory holds:
//! - `graph.txt`: the full signed weight matrix, dense text.
//! - `signals.txt`: observed signals, one row per observed node.
//! - `covariance.txt`: their sample covariance.
//! - `dataset.toml`: generator settings and the observed/hidden partition.
//!
//! Hidden-node signals are never written.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use sgl_core::matio::{read_text, write_text};
use sgl_core::synth::observed_groundtruth;
use sgl_core::{GenConfig, LaplacianPair, ObservedData, Partition, SignalSet, SignedGraph, SyntheticInstance};

use crate::error::CliError;

pub const GRAPH_FILE: &str = "graph.txt";
pub const SIGNALS_FILE: &str = "signals.txt";
pub const COVARIANCE_FILE: &str = "covariance.txt";
pub const MANIFEST_FILE: &str = "dataset.toml";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub n: usize,
    pub k: usize,
    pub seed: u64,
    pub p_edge: f64,
    pub neg_fraction: f64,
    pub noise_sigma: f64,
    pub observed: Vec<usize>,
    pub hidden: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub manifest: Manifest,
    pub graph: SignedGraph,
    pub observed: ObservedData,
    pub truth: LaplacianPair,
}

fn write_matrix(path: &Path, m: &DMatrix<f64>, header: &[String]) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| CliError::output(path, e))?;
    let mut out = BufWriter::new(file);
    write_text(&mut out, m, header).map_err(|e| CliError::output(path, e))?;
    out.flush().map_err(|e| CliError::output(path, e))
}

fn read_matrix(path: &Path) -> Result<DMatrix<f64>, CliError> {
    let file = File::open(path).map_err(|e| CliError::data(path, e))?;
    read_text(BufReader::new(file)).map_err(|e| CliError::data(path, e))
}

pub fn write_dataset(dir: &Path, cfg: &GenConfig, inst: &SyntheticInstance) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::output(dir, e))?;
    let part = &inst.observed.partition;
    let manifest = Manifest {
        n: cfg.n,
        k: cfg.k,
        seed: cfg.seed,
        p_edge: cfg.p_edge,
        neg_fraction: cfg.neg_fraction,
        noise_sigma: cfg.noise_sigma,
        observed: part.observed.clone(),
        hidden: part.hidden.clone(),
    };
    write_matrix(
        &dir.join(GRAPH_FILE),
        inst.graph.weights(),
        &[format!("signed weights, {} nodes", cfg.n)],
    )?;
    write_matrix(
        &dir.join(SIGNALS_FILE),
        inst.observed.signals.matrix(),
        &[format!("observed signals, {} nodes x {} samples", part.b(), cfg.k)],
    )?;
    write_matrix(
        &dir.join(COVARIANCE_FILE),
        &inst.observed.covariance,
        &[format!("sample covariance of the {} observed nodes", part.b())],
    )?;
    let text = toml::to_string(&manifest).map_err(|e| CliError::Output(e.to_string()))?;
    let path = dir.join(MANIFEST_FILE);
    std::fs::write(&path, text).map_err(|e| CliError::output(&path, e))
}

pub fn read_dataset(dir: &Path) -> Result<Dataset, CliError> {
    let path = dir.join(MANIFEST_FILE);
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::data(&path, e))?;
    let manifest: Manifest = toml::from_str(&text).map_err(|e| CliError::data(&path, e))?;

    let path = dir.join(GRAPH_FILE);
    let graph = SignedGraph::new(read_matrix(&path)?).map_err(|e| CliError::data(&path, e))?;
    if graph.n() != manifest.n {
        return Err(CliError::data(&path, format!("{} nodes, manifest says {}", graph.n(), manifest.n)));
    }
    let partition = Partition::new(manifest.n, manifest.hidden.clone())
        .map_err(|e| CliError::Data(format!("{MANIFEST_FILE}: {e}")))?;
    if partition.observed != manifest.observed {
        return Err(CliError::Data(format!(
            "{MANIFEST_FILE}: observed list is not the complement of the hidden list"
        )));
    }

    let path = dir.join(SIGNALS_FILE);
    let signals = SignalSet::new(read_matrix(&path)?).map_err(|e| CliError::data(&path, e))?;
    if signals.n() != partition.b() || signals.k() != manifest.k {
        return Err(CliError::data(
            &path,
            format!(
                "shape {}x{}, manifest says {}x{}",
                signals.n(),
                signals.k(),
                partition.b(),
                manifest.k
            ),
        ));
    }
    let path = dir.join(COVARIANCE_FILE);
    let covariance = read_matrix(&path)?;
    let recomputed = signals.covariance();
    if covariance.shape() != recomputed.shape() || (&covariance - &recomputed).amax() > 1e-10 {
        return Err(CliError::data(&path, "does not match the sample covariance of the signals"));
    }

    let truth = observed_groundtruth(&graph, &partition).map_err(|e| CliError::Data(e.to_string()))?;
    Ok(Dataset {
        manifest,
        graph,
        observed: ObservedData {
            partition,
            signals,
            covariance,
        },
        truth,
    })
}
