//! Steady-state operation once every node holds its basis row: per-epoch
//! score aggregation, reconstruction at the sink, and supervised compression.

use std::io::Write;

use crate::aggregation::{aggregate_sums, route_to_sink, run_feedback, LoadReport};
use crate::error::{check_len, Error, Result};
use crate::io::format::sig9;
use crate::linalg::{reconstruct, PcaBasis};
use crate::topology::{RoutingTree, SensorId};

/// What node `i` stores to take part in score aggregation.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeBasisRow {
    pub sensor_id: SensorId,
    /// `w_i1 .. w_iq`
    pub coefficients: Vec<f64>,
    /// Training mean of this sensor.
    pub mean: f64,
    pub epsilon: Option<f64>,
}

impl NodeBasisRow {
    /// `Σ_k z_k w_ik + mean_i` over the first `z.len()` components.
    pub fn local_estimate(&self, z: &[f64]) -> f64 {
        self.mean + z.iter().zip(&self.coefficients).map(|(a, b)| a * b).sum::<f64>()
    }
}

/// Splits `basis` into per-node rows.
pub fn basis_rows(basis: &PcaBasis, ids: &[SensorId], epsilon: Option<f64>) -> Result<Vec<NodeBasisRow>> {
    check_len(basis.dim(), ids.len())?;
    if let Some(e) = epsilon {
        if !(e >= 0.0) {
            return Err(Error::Config(format!("epsilon must be non-negative, got {e}")));
        }
    }
    Ok(ids
        .iter()
        .enumerate()
        .map(|(i, &sensor_id)| NodeBasisRow {
            sensor_id,
            coefficients: basis.pairs().iter().map(|p| p.vector[i]).collect(),
            mean: basis.mean()[i],
            epsilon,
        })
        .collect())
}

/// Scores `z_k = Σ_i w_ik (x_i - mean_i)` summed up the tree (A operation of size `q`).
pub fn score_epoch(tree: &RoutingTree, rows: &[NodeBasisRow], x: &[f64]) -> Result<(Vec<f64>, LoadReport)> {
    let q = rows.first().map_or(0, |r| r.coefficients.len());
    score_epoch_truncated(tree, rows, x, q)
}

/// As [`score_epoch`] but aggregating only the first `q_prime` scores, to
/// shed load when the network is congested.
pub fn score_epoch_truncated(
    tree: &RoutingTree,
    rows: &[NodeBasisRow],
    x: &[f64],
    q_prime: usize,
) -> Result<(Vec<f64>, LoadReport)> {
    check_len(tree.len(), rows.len())?;
    check_len(tree.len(), x.len())?;
    let q = rows.first().map_or(0, |r| r.coefficients.len());
    if q_prime == 0 || q_prime > q {
        return Err(Error::Config(format!("score count must be in 1..={q}, got {q_prime}")));
    }
    let records: Vec<Vec<f64>> = rows
        .iter()
        .zip(x)
        .map(|(r, xi)| {
            check_len(q, r.coefficients.len())?;
            let centered = xi - r.mean;
            Ok(r.coefficients[..q_prime].iter().map(|w| w * centered).collect())
        })
        .collect::<Result<_>>()?;
    aggregate_sums(tree, &records)
}

/// `x̂ = W z + mean` at the base station.
pub fn sink_reconstruct(basis: &PcaBasis, z: &[f64]) -> Result<Vec<f64>> {
    check_len(basis.len(), z.len())?;
    reconstruct(&basis.w(), z, basis.mean())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    pub sensor_id: SensorId,
    pub error: f64,
}

/// Node-side check of the sink's estimate against the actual reading.
pub fn supervised_check(row: &NodeBasisRow, z_feedback: &[f64], x_actual: f64) -> Result<Option<Violation>> {
    let eps = row
        .epsilon
        .ok_or_else(|| Error::Config(format!("sensor {} has no epsilon", row.sensor_id)))?;
    check_len(row.coefficients.len(), z_feedback.len())?;
    let error = (row.local_estimate(z_feedback) - x_actual).abs();
    Ok((error > eps).then_some(Violation {
        sensor_id: row.sensor_id,
        error,
    }))
}

/// One epoch of supervised operation.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochOutcome {
    pub z: Vec<f64>,
    /// Node indices whose estimate missed by more than epsilon.
    pub violators: Vec<usize>,
    /// Scores, feedback, and the raw packets owed from the previous epoch.
    pub load: LoadReport,
}

/// Supervised compression: scores go up, get fed back, and any node whose
/// local reconstruction misses by more than epsilon ships its raw reading
/// to the sink during the next epoch.
#[derive(Debug, Clone)]
pub struct SupervisedRuntime<'a> {
    tree: &'a RoutingTree,
    basis: PcaBasis,
    rows: Vec<NodeBasisRow>,
    pending: Vec<usize>,
    /// Values held at the sink for each completed epoch.
    sink: Vec<Vec<f64>>,
    load: LoadReport,
    violations: usize,
}

impl<'a> SupervisedRuntime<'a> {
    pub fn new(tree: &'a RoutingTree, basis: PcaBasis, ids: &[SensorId], epsilon: f64) -> Result<Self> {
        check_len(tree.len(), basis.dim())?;
        if basis.is_empty() {
            return Err(Error::Config("basis has no components".into()));
        }
        let rows = basis_rows(&basis, ids, Some(epsilon))?;
        Ok(Self {
            tree,
            basis,
            rows,
            pending: Vec::new(),
            sink: Vec::new(),
            load: LoadReport::zeros(tree.len()),
            violations: 0,
        })
    }

    pub fn step(&mut self, x: &[f64]) -> Result<EpochOutcome> {
        let mut load = route_to_sink(self.tree, &self.pending);
        self.pending.clear();

        let (z, a_load) = score_epoch(self.tree, &self.rows, x)?;
        load.add(&a_load);
        load.add(&run_feedback(self.tree, z.len()));
        let mut estimate = sink_reconstruct(&self.basis, &z)?;

        let mut violators = Vec::new();
        for (i, row) in self.rows.iter().enumerate() {
            if supervised_check(row, &z, x[i])?.is_some() {
                violators.push(i);
                // delivered next epoch, but it belongs to this one
                estimate[i] = x[i];
            }
        }
        self.violations += violators.len();
        self.pending = violators.clone();
        self.sink.push(estimate);
        self.load.add(&load);
        Ok(EpochOutcome { z, violators, load })
    }

    /// Delivers raw readings still owed after the last epoch.
    pub fn finish(mut self) -> SupervisedReport {
        let tail = route_to_sink(self.tree, &self.pending);
        self.load.add(&tail);
        SupervisedReport {
            sink_values: self.sink,
            load: self.load,
            violations: self.violations,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SupervisedReport {
    /// Sink-side value of every sensor at every epoch, once retransmissions landed.
    pub sink_values: Vec<Vec<f64>>,
    pub load: LoadReport,
    pub violations: usize,
}

/// CSV `epoch,z_1..z_q`.
pub fn write_scores_csv<W: Write>(scores: &[Vec<f64>], out: W) -> Result<()> {
    let q = scores.first().map_or(0, Vec::len);
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["epoch".to_string()];
    header.extend((1..=q).map(|k| format!("z_{k}")));
    w.write_record(&header)?;
    for (t, z) in scores.iter().enumerate() {
        check_len(q, z.len())?;
        let mut rec = vec![t.to_string()];
        rec.extend(z.iter().map(|v| sig9(*v)));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

/// CSV `epoch,sensor_id,x,x_hat`.
pub fn write_reconstruction_csv<W: Write>(
    ids: &[SensorId],
    actual: &[Vec<f64>],
    estimated: &[Vec<f64>],
    out: W,
) -> Result<()> {
    check_len(actual.len(), estimated.len())?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["epoch", "sensor_id", "x", "x_hat"])?;
    for (t, (x, xh)) in actual.iter().zip(estimated).enumerate() {
        check_len(ids.len(), x.len())?;
        check_len(ids.len(), xh.len())?;
        for (i, id) in ids.iter().enumerate() {
            w.write_record([t.to_string(), id.to_string(), sig9(x[i]), sig9(xh[i])])?;
        }
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}
