//! Distributed power iteration with deflation.
//!
//! Each iteration has three communication phases:
//! 1. every node broadcasts `v[i]` to its neighbors and computes `y_i = Σ_j c_ij v[j]`;
//! 2. the tree aggregates `‖y‖²` and the dot products `⟨y, w_l⟩` for every accepted `w_l`;
//! 3. the root feeds those `k` scalars back, and each node sets
//!    `v[i] ← (y_i - Σ_l d_l w_l[i]) / r` with `d_l = ⟨y, w_l⟩` and
//!    `r² = ‖y‖² - Σ_l d_l²`, the norm of the deflated vector.
//!
//! Once a component stops (converged or out of budget) one more A/F round
//! carries the sign votes, `⟨v_prev, v⟩` and `‖v‖²`, so every node learns
//! whether the component is accepted and can rescale its entry to unit norm.

use std::collections::BTreeMap;
use std::io::Write;

use crate::aggregation::{aggregate_sums, run_feedback, LoadReport};
use crate::error::{check_len, Error, Result};
use crate::io::format::sig9;
use crate::linalg::{aligned_distance, random_start, EigenPair, InitPolicy, Matrix, PcaBasis, FALLBACK_SEED};
use crate::topology::{Neighborhoods, RoutingTree};

/// Scalars carried by the end-of-component round.
pub const ACCEPTANCE_RECORD: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct PimNodeState {
    pub node: usize,
    pub v: f64,
    pub v_prev: f64,
    /// `w_k[i]` for every accepted component.
    pub w: Vec<f64>,
    /// `(j, c_ij)` over `N_i ∪ {i}`, ascending `j`.
    pub cov_row: Vec<(usize, f64)>,
}

impl PimNodeState {
    pub fn diagonal(&self) -> f64 {
        self.cov_row
            .iter()
            .find(|(j, _)| *j == self.node)
            .map_or(0.0, |(_, c)| *c)
    }
}

/// `Σ_{j ∈ N_i ∪ {i}} c_ij v[j]` from the values heard this round.
pub fn local_matvec(node: &PimNodeState, neighbor_v: &BTreeMap<usize, f64>) -> Result<f64> {
    let mut y = 0.0;
    for &(j, c) in &node.cov_row {
        let vj = if j == node.node {
            node.v
        } else {
            *neighbor_v.get(&j).ok_or(Error::IncompleteRound {
                node: node.node,
                missing: j,
            })?
        };
        y += c * vj;
    }
    Ok(y)
}

/// Componentwise sums of per-node records through the tree (one A operation).
pub fn aggregate_scalars(tree: &RoutingTree, per_node: &[Vec<f64>]) -> Result<(Vec<f64>, LoadReport)> {
    aggregate_sums(tree, per_node)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PimConfig {
    pub q_target: usize,
    pub delta: f64,
    pub t_max: usize,
    pub v0_policy: InitPolicy,
}

impl PimConfig {
    pub fn new(q_target: usize, delta: f64, t_max: usize) -> Self {
        Self {
            q_target,
            delta,
            t_max,
            v0_policy: InitPolicy::Diagonal,
        }
    }

    pub fn validate(&self, p: usize) -> Result<()> {
        if self.q_target == 0 || self.q_target > p {
            return Err(Error::Config(format!(
                "q must be in 1..={p}, got {}",
                self.q_target
            )));
        }
        if !(self.delta > 0.0) {
            return Err(Error::Config(format!("delta must be positive, got {}", self.delta)));
        }
        if self.t_max == 0 {
            return Err(Error::Config("t_max must be at least 1".into()));
        }
        Ok(())
    }
}

/// The simulated network: node states plus the neighborhoods they exchange over.
#[derive(Debug, Clone)]
pub struct PimNetwork {
    nodes: Vec<PimNodeState>,
    nb: Neighborhoods,
    values: Vec<f64>,
}

impl PimNetwork {
    /// Nodes hold the rows of `c` restricted to `nb`.
    pub fn from_matrix(c: &Matrix, nb: &Neighborhoods) -> Result<Self> {
        c.ensure_symmetric()?;
        check_len(c.rows(), nb.len())?;
        let nodes = (0..nb.len())
            .map(|i| PimNodeState {
                node: i,
                v: 0.0,
                v_prev: 0.0,
                w: Vec::new(),
                cov_row: (0..nb.len())
                    .filter(|&j| nb.in_mask(i, j))
                    .map(|j| (j, c[(i, j)]))
                    .collect(),
            })
            .collect();
        Ok(Self {
            nodes,
            nb: nb.clone(),
            values: Vec::new(),
        })
    }

    /// Nodes take their rows straight from distributed covariance states.
    pub fn from_cov_states(states: &[crate::dist_cov::NodeCovState], nb: &Neighborhoods) -> Result<Self> {
        check_len(nb.len(), states.len())?;
        let nodes = states
            .iter()
            .enumerate()
            .map(|(i, s)| PimNodeState {
                node: i,
                v: 0.0,
                v_prev: 0.0,
                w: Vec::new(),
                cov_row: s.cov_row(),
            })
            .collect();
        Ok(Self {
            nodes,
            nb: nb.clone(),
            values: Vec::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[PimNodeState] {
        &self.nodes
    }

    pub fn neighborhoods(&self) -> &Neighborhoods {
        &self.nb
    }

    pub fn accepted(&self) -> usize {
        self.values.len()
    }

    /// Current iterate, gathered for inspection.
    pub fn v(&self) -> Vec<f64> {
        self.nodes.iter().map(|n| n.v).collect()
    }

    pub fn set_v(&mut self, v: &[f64]) -> Result<()> {
        check_len(self.len(), v.len())?;
        for (n, x) in self.nodes.iter_mut().zip(v) {
            n.v = *x;
            n.v_prev = *x;
        }
        Ok(())
    }

    /// Basis rows held by node `i`.
    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.nodes.iter().map(|n| n.w.clone()).collect()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Gathers the accepted components into a basis centered at `mean`.
    pub fn to_basis(&self, mean: Vec<f64>) -> Result<PcaBasis> {
        let pairs = self
            .values
            .iter()
            .enumerate()
            .map(|(k, &value)| EigenPair {
                vector: self.nodes.iter().map(|n| n.w[k]).collect(),
                value,
            })
            .collect();
        PcaBasis::new(pairs, mean)
    }

    fn exchange_load(&self) -> LoadReport {
        let mut load = LoadReport::zeros(self.len());
        for i in 0..self.len() {
            load.tx[i] = 1;
            load.rx[i] = self.nb.of(i).len() as u64;
        }
        load
    }
}

/// What one iteration produced, as seen by an outside observer.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationOutcome {
    /// Norm of the deflated product this iteration.
    pub norm: f64,
    /// Sign-aligned `‖v_{t+1} - v_t‖`.
    pub delta_v: f64,
    pub converged: bool,
    pub load: LoadReport,
}

/// One iteration for component `network.accepted() + 1`.
pub fn pim_iteration(
    network: &mut PimNetwork,
    tree: &RoutingTree,
    delta: f64,
) -> Result<IterationOutcome> {
    check_len(network.len(), tree.len())?;
    let k = network.accepted() + 1;

    // neighbor exchange and local products
    let mut load = network.exchange_load();
    let snapshot = network.v();
    let y: Vec<f64> = network
        .nodes
        .iter()
        .map(|n| n.cov_row.iter().map(|&(j, c)| c * snapshot[j]).sum())
        .collect();

    // ‖y‖² and ⟨y, w_l⟩ in one record of size k
    let records: Vec<Vec<f64>> = network
        .nodes
        .iter()
        .zip(&y)
        .map(|(n, yi)| {
            let mut r = Vec::with_capacity(k);
            r.push(yi * yi);
            r.extend(n.w.iter().map(|w| yi * w));
            r
        })
        .collect();
    let (sums, a_load) = aggregate_scalars(tree, &records)?;
    load.add(&a_load);
    load.add(&run_feedback(tree, k));

    // ‖y - Σ d_l w_l‖² = ‖y‖² - Σ d_l² for orthonormal w_l
    let removed: f64 = sums[1..].iter().map(|d| d * d).sum();
    let norm = (sums[0] - removed).max(0.0).sqrt();
    if norm == 0.0 {
        return Err(Error::ZeroVector);
    }
    for (n, yi) in network.nodes.iter_mut().zip(&y) {
        let proj: f64 = n.w.iter().zip(&sums[1..]).map(|(w, d)| d * w).sum();
        n.v_prev = n.v;
        n.v = (yi - proj) / norm;
    }
    let delta_v = aligned_distance(&snapshot, &network.v());
    Ok(IterationOutcome {
        norm,
        delta_v,
        converged: delta_v <= delta,
        load,
    })
}

/// One row of the iteration log.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub component: usize,
    pub iteration: usize,
    pub norm: f64,
    pub delta_v: f64,
    /// Network-wide packets since the start of the run.
    pub load_total: u64,
}

/// Result of a full distributed run.
#[derive(Debug, Clone)]
pub struct PimRun {
    /// Iterations spent on each accepted component.
    pub iterations: Vec<usize>,
    pub converged: Vec<bool>,
    /// Loads spent on each attempted component, rejected ones included.
    pub component_loads: Vec<LoadReport>,
    pub load: LoadReport,
    pub log: Vec<IterationRecord>,
    /// Why the run ended before `q_target`, if it did.
    pub stopped_early: Option<StopReason>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    NonPositiveEigenvalue,
    ZeroVector,
}

impl PimRun {
    /// CSV `component,iteration,norm,delta_v,load_total`.
    pub fn write_log_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["component", "iteration", "norm", "delta_v", "load_total"])?;
        for r in &self.log {
            w.write_record([
                r.component.to_string(),
                r.iteration.to_string(),
                sig9(r.norm),
                sig9(r.delta_v),
                r.load_total.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

fn start_vector(network: &PimNetwork, policy: InitPolicy, component: usize) -> Vec<f64> {
    match policy {
        InitPolicy::Diagonal => network.nodes.iter().map(PimNodeState::diagonal).collect(),
        InitPolicy::Random { seed } => random_start(seed, component, network.len()),
    }
}

// iterates one component; Ok(None) when the product vanished
fn iterate_component(
    network: &mut PimNetwork,
    tree: &RoutingTree,
    config: &PimConfig,
    v0: &[f64],
    spent: &mut LoadReport,
    run: &mut PimRun,
) -> Result<Option<(usize, bool, f64)>> {
    network.set_v(v0)?;
    let component = network.accepted() + 1;
    let mut t = 0;
    loop {
        let out = match pim_iteration(network, tree, config.delta) {
            Ok(o) => o,
            Err(Error::ZeroVector) => {
                // the failed iteration still used the network
                let k = network.accepted() + 1;
                let mut lost = network.exchange_load();
                lost.add(&crate::aggregation::analytic_loads(
                    tree,
                    crate::aggregation::Operation::Aggregate(k),
                ));
                lost.add(&run_feedback(tree, k));
                spent.add(&lost);
                return Ok(None);
            }
            Err(e) => return Err(e),
        };
        t += 1;
        spent.add(&out.load);
        run.log.push(IterationRecord {
            component,
            iteration: t,
            norm: out.norm,
            delta_v: out.delta_v,
            load_total: run.load.total() + spent.total(),
        });
        if out.converged || t >= config.t_max {
            return Ok(Some((t, out.converged, out.norm)));
        }
    }
}

/// Components accepted until `q_target`, a non-positive eigenvalue sign, or a
/// vanishing product. Node `i` ends up holding `w_1[i] .. w_k[i]`.
pub fn run_distributed_pim(
    network: &mut PimNetwork,
    tree: &RoutingTree,
    config: &PimConfig,
) -> Result<PimRun> {
    let p = network.len();
    config.validate(p)?;
    check_len(p, tree.len())?;
    let mut run = PimRun {
        iterations: Vec::new(),
        converged: Vec::new(),
        component_loads: Vec::new(),
        load: LoadReport::zeros(p),
        log: Vec::new(),
        stopped_early: None,
    };

    while network.accepted() < config.q_target {
        let k = network.accepted();
        let mut spent = LoadReport::zeros(p);
        let v0 = start_vector(network, config.v0_policy, k);
        let zero_start = v0.iter().all(|x| *x == 0.0);
        let mut result = if zero_start {
            None
        } else {
            iterate_component(network, tree, config, &v0, &mut spent, &mut run)?
        };
        if result.is_none() && config.v0_policy == InitPolicy::Diagonal {
            let v0 = random_start(FALLBACK_SEED, k, p);
            result = iterate_component(network, tree, config, &v0, &mut spent, &mut run)?;
        }
        let Some((iterations, converged, norm)) = result else {
            run.component_loads.push(spent.clone());
            run.load.add(&spent);
            if k == 0 {
                return Err(Error::ZeroVector);
            }
            run.stopped_early = Some(StopReason::ZeroVector);
            break;
        };

        // end-of-component round: sign votes, ⟨v_prev, v⟩, ‖v‖²
        let records: Vec<Vec<f64>> = network
            .nodes
            .iter()
            .map(|n| {
                let prod = n.v_prev * n.v;
                let vote = if prod > 0.0 {
                    1.0
                } else if prod < 0.0 {
                    -1.0
                } else {
                    0.0
                };
                vec![vote, prod, n.v * n.v]
            })
            .collect();
        let (sums, a_load) = aggregate_scalars(tree, &records)?;
        spent.add(&a_load);
        spent.add(&run_feedback(tree, ACCEPTANCE_RECORD));
        run.component_loads.push(spent.clone());
        run.load.add(&spent);

        let sign = if sums[0] != 0.0 { sums[0].signum() } else { sums[1].signum() };
        if sign <= 0.0 || sums[2] <= 0.0 {
            run.stopped_early = Some(StopReason::NonPositiveEigenvalue);
            break;
        }
        let scale = sums[2].sqrt();
        for n in &mut network.nodes {
            n.w.push(n.v / scale);
        }
        network.values.push(sign * norm);
        run.iterations.push(iterations);
        run.converged.push(converged);
    }
    Ok(run)
}

/// Cost of shipping a centrally computed basis to the nodes: `q·p` scalars flooded down the tree.
pub fn distribute_basis_centralized(tree: &RoutingTree, basis: &PcaBasis) -> LoadReport {
    run_feedback(tree, basis.len() * tree.len())
}
