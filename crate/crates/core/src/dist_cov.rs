//! Streaming covariance kept locally at each node for its radio neighborhood.
//!
//! Node `i` stores `t`, its own sums and one cross sum per neighbor. Pairs out
//! of radio range are taken to be uncorrelated, so the assembled matrix is
//! zero outside `N_i ∪ {i}`.

use std::collections::BTreeMap;
use std::io::Write;

use crate::aggregation::LoadReport;
use crate::error::{check_len, Error, Result};
use crate::io::format::sig9;
use crate::linalg::{cov_from_sums, Matrix};
use crate::topology::{Neighborhoods, SensorId};

#[derive(Debug, Clone, PartialEq)]
pub struct NodeCovState {
    node: usize,
    t: u64,
    s_self: f64,
    s_self_sq: f64,
    neighbors: Vec<usize>,
    s_neighbors: Vec<f64>,
    s_cross: Vec<f64>,
}

impl NodeCovState {
    pub fn new(node: usize, neighbors: &[usize]) -> Self {
        let mut neighbors = neighbors.to_vec();
        neighbors.sort_unstable();
        neighbors.dedup();
        let k = neighbors.len();
        Self {
            node,
            t: 0,
            s_self: 0.0,
            s_self_sq: 0.0,
            neighbors,
            s_neighbors: vec![0.0; k],
            s_cross: vec![0.0; k],
        }
    }

    pub fn node(&self) -> usize {
        self.node
    }

    pub fn count(&self) -> u64 {
        self.t
    }

    pub fn neighbors(&self) -> &[usize] {
        &self.neighbors
    }

    pub fn variance(&self) -> f64 {
        cov_from_sums(self.t, self.s_self_sq, self.s_self, self.s_self)
    }

    pub fn mean(&self) -> f64 {
        if self.t == 0 {
            0.0
        } else {
            self.s_self / self.t as f64
        }
    }

    /// `c_ij` for `j ∈ N_i ∪ {i}`, `None` outside the neighborhood.
    pub fn covariance_with(&self, j: usize) -> Option<f64> {
        if j == self.node {
            return Some(self.variance());
        }
        let k = self.neighbors.binary_search(&j).ok()?;
        Some(cov_from_sums(
            self.t,
            self.s_cross[k],
            self.s_self,
            self.s_neighbors[k],
        ))
    }

    /// `(j, c_ij)` over `N_i ∪ {i}` in ascending `j`.
    pub fn cov_row(&self) -> Vec<(usize, f64)> {
        let mut row: Vec<(usize, f64)> = self
            .neighbors
            .iter()
            .map(|&j| (j, self.covariance_with(j).expect("neighbor")))
            .collect();
        let at = row.partition_point(|(j, _)| *j < self.node);
        row.insert(at, (self.node, self.variance()));
        row
    }

    fn absorb(&mut self, own: f64, value_of: impl Fn(usize) -> f64) {
        self.t += 1;
        self.s_self += own;
        self.s_self_sq += own * own;
        for (k, &j) in self.neighbors.iter().enumerate() {
            let xj = value_of(j);
            self.s_neighbors[k] += xj;
            self.s_cross[k] += own * xj;
        }
    }
}

/// One epoch at one node: its own reading and one value heard from every neighbor.
pub fn node_cov_update(
    state: &mut NodeCovState,
    own: f64,
    neighbor_values: &BTreeMap<usize, f64>,
) -> Result<()> {
    if let Some(&j) = state.neighbors.iter().find(|j| !neighbor_values.contains_key(j)) {
        return Err(Error::IncompleteRound {
            node: state.node,
            missing: j,
        });
    }
    state.absorb(own, |j| neighbor_values[&j]);
    Ok(())
}

/// Fresh states for every node of `nb`.
pub fn init_network(nb: &Neighborhoods) -> Vec<NodeCovState> {
    (0..nb.len()).map(|i| NodeCovState::new(i, nb.of(i))).collect()
}

/// Every node broadcasts its reading once and hears each neighbor once.
pub fn run_cov_round(
    states: &mut [NodeCovState],
    nb: &Neighborhoods,
    x: &[f64],
) -> Result<LoadReport> {
    let p = nb.len();
    check_len(p, x.len())?;
    check_len(p, states.len())?;
    let mut load = LoadReport::zeros(p);
    for (i, st) in states.iter_mut().enumerate() {
        if st.neighbors != nb.of(i) {
            return Err(Error::Config(format!(
                "state of node #{i} was built for another neighborhood"
            )));
        }
        st.absorb(x[i], |j| x[j]);
        load.tx[i] += 1;
        load.rx[i] += st.neighbors.len() as u64;
    }
    Ok(load)
}

/// Covariance matrix with the neighborhood mask it was estimated under.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskedCovariance {
    matrix: Matrix,
    mask: Neighborhoods,
}

impl MaskedCovariance {
    /// Applies `mask` to a dense covariance.
    pub fn from_dense(c: &Matrix, mask: Neighborhoods) -> Result<Self> {
        c.ensure_symmetric()?;
        check_len(c.rows(), mask.len())?;
        let matrix = Matrix::from_fn(c.rows(), c.cols(), |i, j| {
            if mask.in_mask(i, j) {
                c[(i, j)]
            } else {
                0.0
            }
        });
        Ok(Self { matrix, mask })
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn mask(&self) -> &Neighborhoods {
        &self.mask
    }

    pub fn into_matrix(self) -> Matrix {
        self.matrix
    }

    /// CSV `i,j,c_ij` over in-mask pairs with `i ≤ j`, by sensor id.
    pub fn write_snapshot_csv<W: Write>(&self, ids: &[SensorId], out: W) -> Result<()> {
        let p = self.matrix.rows();
        check_len(p, ids.len())?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["i", "j", "c_ij"])?;
        for i in 0..p {
            for j in i..p {
                if self.mask.in_mask(i, j) {
                    w.write_record([
                        ids[i].to_string(),
                        ids[j].to_string(),
                        sig9(self.matrix[(i, j)]),
                    ])?;
                }
            }
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

/// Matrix of the node-local estimates; entry `(i, j)` is the value node `i` holds.
pub fn assemble_masked(states: &[NodeCovState], nb: &Neighborhoods) -> Result<MaskedCovariance> {
    let p = nb.len();
    check_len(p, states.len())?;
    let t = states.first().map_or(0, |s| s.t);
    for s in states {
        if s.t != t {
            return Err(Error::UnequalEpochs(t, s.t));
        }
    }
    if t < 2 {
        return Err(Error::Degenerate(format!(
            "covariance needs at least 2 epochs, got {t}"
        )));
    }
    let mut matrix = Matrix::zeros(p, p);
    for (i, s) in states.iter().enumerate() {
        check_len(i, s.node)?;
        for (j, c) in s.cov_row() {
            if !nb.in_mask(i, j) {
                return Err(Error::Config(format!(
                    "state of node #{i} was built for another neighborhood"
                )));
            }
            matrix[(i, j)] = c;
        }
    }
    if !matrix.is_symmetric(0.0) {
        return Err(Error::NotSymmetric(matrix.max_asymmetry()));
    }
    Ok(MaskedCovariance {
        matrix,
        mask: nb.clone(),
    })
}

/// Collects a masked covariance over `samples` round by round, with the summed round loads.
pub fn collect_masked<S: AsRef<[f64]>>(
    nb: &Neighborhoods,
    samples: &[S],
) -> Result<(MaskedCovariance, LoadReport)> {
    let mut states = init_network(nb);
    let mut load = LoadReport::zeros(nb.len());
    for x in samples {
        load.add(&run_cov_round(&mut states, nb, x.as_ref())?);
    }
    Ok((assemble_masked(&states, nb)?, load))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::covariance_batch;

    #[test]
    fn mutual_neighbors_by_hand() {
        let nb = Neighborhoods::complete(2);
        let mut states = init_network(&nb);
        run_cov_round(&mut states, &nb, &[1.0, 2.0]).unwrap();
        assert_eq!(states[0].covariance_with(1), Some(0.0));
        run_cov_round(&mut states, &nb, &[3.0, 4.0]).unwrap();
        // (1*2 + 3*4)/2 - (4*6)/4
        assert_eq!(states[0].covariance_with(1), Some(1.0));
        assert_eq!(states[1].covariance_with(0), Some(1.0));
    }

    #[test]
    fn isolated_node_keeps_only_variance() {
        let nb = Neighborhoods::from_lists(vec![vec![], vec![]]).unwrap();
        let (c, load) = collect_masked(&nb, &[[1.0, 5.0], [3.0, 1.0]]).unwrap();
        assert_eq!(c.matrix().as_slice(), &[1.0, 0.0, 0.0, 4.0]);
        assert_eq!(load.node_loads(), vec![2, 2]);
    }

    #[test]
    fn missing_neighbor_value() {
        let mut st = NodeCovState::new(0, &[1, 2]);
        let heard = BTreeMap::from([(1, 0.5)]);
        assert!(matches!(
            node_cov_update(&mut st, 1.0, &heard),
            Err(Error::IncompleteRound { node: 0, missing: 2 })
        ));
        let heard = BTreeMap::from([(1, 0.5), (2, 0.25)]);
        node_cov_update(&mut st, 1.0, &heard).unwrap();
        assert_eq!(st.count(), 1);
    }

    #[test]
    fn clique_round_loads() {
        let nb = Neighborhoods::complete(3);
        let mut states = init_network(&nb);
        let load = run_cov_round(&mut states, &nb, &[0.0; 3]).unwrap();
        assert_eq!(load.node_loads(), vec![3, 3, 3]);
    }

    #[test]
    fn unequal_counts_rejected() {
        let nb = Neighborhoods::complete(2);
        let mut states = init_network(&nb);
        for _ in 0..2 {
            run_cov_round(&mut states, &nb, &[1.0, 2.0]).unwrap();
        }
        states[1].absorb(1.0, |_| 1.0);
        assert!(matches!(
            assemble_masked(&states, &nb),
            Err(Error::UnequalEpochs(2, 3))
        ));
    }

    #[test]
    fn complete_mask_equals_batch() {
        let samples = [[1.0, 2.0, -1.0], [0.5, 0.0, 2.0], [2.0, 1.0, 1.0], [-1.0, 0.3, 0.2]];
        let (c, _) = collect_masked(&Neighborhoods::complete(3), &samples).unwrap();
        let batch = covariance_batch(&samples).unwrap();
        assert!(c.matrix().sub(&batch).unwrap().frobenius_norm() < 1e-12);
    }

    #[test]
    fn snapshot_lists_in_mask_pairs() {
        let nb = Neighborhoods::from_lists(vec![vec![1], vec![0], vec![]]).unwrap();
        let (c, _) = collect_masked(&nb, &[[1.0, 2.0, 0.0], [3.0, 4.0, 2.0]]).unwrap();
        let mut buf = Vec::new();
        c.write_snapshot_csv(&[SensorId(1), SensorId(2), SensorId(7)], &mut buf)
            .unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "i,j,c_ij\n1,1,1\n1,2,1\n2,2,1\n7,7,1\n"
        );
    }
}
