//! Cross-validated accuracy and network-load studies over a sensor field and trace.
//!
//! Every study returns typed results plus a [`MetricsReport`] of CSV tables.
//! Folds run in parallel; results are assembled in fold order so output is
//! identical from run to run.

use std::collections::BTreeMap;
use std::ops::Range;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::aggregation::{analytic_loads, LoadReport, Operation};
use crate::dist_cov::{collect_masked, init_network, run_cov_round};
use crate::dist_pim::{distribute_basis_centralized, run_distributed_pim, PimConfig, PimNetwork};
use crate::error::{Error, Result};
use crate::io::config::{BasisMethod, Config};
use crate::io::format::sig9;
use crate::io::positions::{intel_field, load_positions};
use crate::io::synth::generate_synthetic;
use crate::io::trace::{load_trace, EpochTrace, TraceOptions};
use crate::linalg::{
    compute_basis, covariance_batch, reference_eigendecomposition, retained_variance_curve,
    CovAccumulator, InitPolicy, Matrix, PcaBasis,
};
use crate::topology::{Neighborhoods, RoutingTree, SensorField, SensorId};

/// One cross-validation fold: a consecutive training block, the rest for testing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub train: Range<usize>,
    pub test: Vec<usize>,
}

/// `K` consecutive blocks with boundaries at `⌊T k / K⌋`.
pub fn kfold_split(epochs: usize, k: usize) -> Result<Vec<Fold>> {
    if k < 2 {
        return Err(Error::Config(format!("need at least 2 folds, got {k}")));
    }
    if epochs < k {
        return Err(Error::Config(format!("{k} folds exceed the {epochs} epochs")));
    }
    Ok((0..k)
        .map(|i| {
            let train = epochs * i / k..epochs * (i + 1) / k;
            let test = (0..epochs).filter(|t| !train.contains(t)).collect();
            Fold { train, test }
        })
        .collect())
}

/// Field and trace with matching sensors in matching order.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub field: SensorField,
    pub trace: EpochTrace,
}

impl Dataset {
    pub fn new(field: SensorField, trace: EpochTrace) -> Result<Self> {
        let missing: Vec<SensorId> = field
            .ids()
            .into_iter()
            .filter(|id| trace.ids().binary_search(id).is_err())
            .collect();
        let field = field.without(&missing)?;
        let trace = trace.select(&field.ids())?;
        Ok(Self { field, trace })
    }

    /// Positions, root and exclusions from `cfg`, then the trace file or a synthetic trace.
    pub fn from_config(cfg: &Config) -> Result<Self> {
        let base = match &cfg.positions {
            Some(path) => SensorField::new(load_positions(path)?, cfg.root)?,
            None => intel_field().with_root(cfg.root)?,
        };
        let field = base.without(&cfg.exclude)?;
        let trace = match &cfg.trace {
            Some(path) => {
                let opts = TraceOptions {
                    bucket_stat: cfg.bucket_stat,
                    excluded: cfg.exclude.clone(),
                    expected: field.ids(),
                };
                let loaded = load_trace(path, cfg.epoch_seconds, &opts)?;
                loaded.trace
            }
            None => generate_synthetic(&cfg.synth, &field)?,
        };
        Self::new(field, trace)
    }

    pub fn sensors(&self) -> usize {
        self.field.len()
    }

    pub fn epochs(&self) -> usize {
        self.trace.epochs()
    }

    pub fn block(&self, r: Range<usize>) -> &[Vec<f64>] {
        &self.trace.samples()[r]
    }

    pub fn pick(&self, epochs: &[usize]) -> Vec<&[f64]> {
        epochs.iter().map(|&t| self.trace.epoch(t)).collect()
    }
}

/// Parameters shared by the studies.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub folds: usize,
    pub q_max: usize,
    pub q_loads: usize,
    pub range: f64,
    pub ranges: Vec<f64>,
    pub delta: f64,
    pub t_max: usize,
    pub budgets: Vec<usize>,
    pub fold: usize,
    pub method: BasisMethod,
    pub init: InitPolicy,
}

impl From<&Config> for ExperimentConfig {
    fn from(c: &Config) -> Self {
        Self {
            folds: c.folds,
            q_max: c.q_max,
            q_loads: c.q_loads,
            range: c.range,
            ranges: c.ranges.clone(),
            delta: c.delta,
            t_max: c.t_max,
            budgets: c.budgets.clone(),
            fold: c.fold,
            method: c.method,
            init: c.init_policy(),
        }
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        (&Config::default()).into()
    }
}

/// A CSV table held in memory.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner().map_err(|e| Error::io("<csv>", e.into_error()))
    }
}

/// CSV tables keyed by file name.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricsReport {
    pub tables: BTreeMap<String, Table>,
}

impl MetricsReport {
    pub fn write_dir(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut written = Vec::new();
        for (name, table) in &self.tables {
            let path = dir.join(name);
            std::fs::write(&path, table.to_csv()?).map_err(|e| Error::io(&path, e))?;
            written.push(path);
        }
        Ok(written)
    }

    pub fn merge(&mut self, other: MetricsReport) {
        self.tables.extend(other.tables);
    }
}

/// Basis from a training block: covariance (masked when `mask` is given),
/// then the configured method, centered at the block mean.
pub fn train_basis(
    train: &[Vec<f64>],
    q: usize,
    mask: Option<(&Neighborhoods, &RoutingTree)>,
    method: BasisMethod,
    delta: f64,
    t_max: usize,
    init: InitPolicy,
) -> Result<PcaBasis> {
    let mut acc = CovAccumulator::new(train.first().map_or(0, Vec::len));
    for x in train {
        acc.update(x)?;
    }
    let mean = acc.mean();
    let c = match mask {
        Some((nb, _)) => collect_masked(nb, train)?.0.into_matrix(),
        None => covariance_batch(train)?,
    };
    basis_from_covariance(&c, q, mean, mask, method, delta, t_max, init)
}

#[allow(clippy::too_many_arguments)]
fn basis_from_covariance(
    c: &Matrix,
    q: usize,
    mean: Vec<f64>,
    mask: Option<(&Neighborhoods, &RoutingTree)>,
    method: BasisMethod,
    delta: f64,
    t_max: usize,
    init: InitPolicy,
) -> Result<PcaBasis> {
    match method {
        BasisMethod::Exact => {
            PcaBasis::from_eigenpairs(&reference_eigendecomposition(c)?, q, mean)
        }
        BasisMethod::Pim => compute_basis(c, q, delta, t_max, init)?.with_mean(mean),
        BasisMethod::Distributed => {
            let p = c.rows();
            let complete;
            let chain;
            let (nb, tree) = match mask {
                Some(m) => m,
                None => {
                    complete = Neighborhoods::complete(p);
                    chain = RoutingTree::star(p);
                    (&complete, &chain)
                }
            };
            let mut net = PimNetwork::from_matrix(c, nb)?;
            let cfg = PimConfig {
                q_target: q,
                delta,
                t_max,
                v0_policy: init,
            };
            run_distributed_pim(&mut net, tree, &cfg)?;
            net.to_basis(mean)
        }
    }
}

// curve of length q+1, padded with its last value when the basis is short
fn padded_curve(basis: &PcaBasis, test: &[&[f64]], q: usize) -> Result<Vec<f64>> {
    let mut curve = retained_variance_curve(&basis.truncated(q), test)?;
    let last = *curve.last().expect("curve has a point");
    curve.resize(q + 1, last);
    Ok(curve)
}

fn format_range(r: f64) -> String {
    sig9(r)
}

/// Retained variance per fold; index `q` of each curve uses `q` components.
#[derive(Debug, Clone, PartialEq)]
pub struct XvalResult {
    pub q_max: usize,
    /// Basis trained on the fold's block, evaluated on the other epochs.
    pub test: Vec<Vec<f64>>,
    /// Basis trained on the test epochs themselves.
    pub upper_bound: Vec<Vec<f64>>,
    /// Per radio range: curves with the masked training covariance, and
    /// the number of components that survived.
    pub masked: Vec<(f64, Vec<Vec<f64>>, Vec<usize>)>,
}

fn mean_at(curves: &[Vec<f64>], q: usize) -> f64 {
    curves.iter().map(|c| c[q]).sum::<f64>() / curves.len() as f64
}

impl XvalResult {
    pub fn mean_test(&self, q: usize) -> f64 {
        mean_at(&self.test, q)
    }

    pub fn mean_upper(&self, q: usize) -> f64 {
        mean_at(&self.upper_bound, q)
    }

    pub fn report(&self) -> MetricsReport {
        let mut fig9 = Table::new(&["fold", "q", "test_retained", "upper_bound"]);
        for (f, (t, u)) in self.test.iter().zip(&self.upper_bound).enumerate() {
            for q in 1..=self.q_max {
                fig9.push(vec![f.to_string(), q.to_string(), sig9(t[q]), sig9(u[q])]);
            }
        }
        let mut fig12 = Table::new(&["range", "fold", "q", "test_retained", "components"]);
        for (range, curves, counts) in &self.masked {
            for (f, (c, n)) in curves.iter().zip(counts).enumerate() {
                for q in 1..=self.q_max {
                    fig12.push(vec![
                        format_range(*range),
                        f.to_string(),
                        q.to_string(),
                        sig9(c[q]),
                        n.to_string(),
                    ]);
                }
            }
        }
        let mut report = MetricsReport::default();
        report.tables.insert("fig9_retained_variance.csv".into(), fig9);
        if !self.masked.is_empty() {
            report.tables.insert("fig12_masked_retained_variance.csv".into(), fig12);
        }
        report
    }
}

/// K-fold retained variance against component count, with the
/// train-on-test upper bound and one masked curve per radio range.
pub fn xval_retained_variance(data: &Dataset, cfg: &ExperimentConfig) -> Result<XvalResult> {
    let folds = kfold_split(data.epochs(), cfg.folds)?;
    let q = cfg.q_max;
    if q == 0 || q > data.sensors() {
        return Err(Error::Config(format!("q_max must be in 1..={}", data.sensors())));
    }
    let masks: Vec<(f64, Neighborhoods, Option<RoutingTree>)> = cfg
        .ranges
        .iter()
        .map(|&r| {
            let nb = Neighborhoods::build(&data.field, r)?;
            let tree = RoutingTree::build_on(&data.field, &nb).ok();
            Ok((r, nb, tree))
        })
        .collect::<Result<_>>()?;

    type FoldOut = (Vec<f64>, Vec<f64>, Vec<(Vec<f64>, usize)>);
    let per_fold: Vec<FoldOut> = folds
        .par_iter()
        .map(|fold| -> Result<FoldOut> {
            let train = data.block(fold.train.clone());
            if train.len() < 2 {
                return Err(Error::Degenerate("fold too small for a covariance".into()));
            }
            let test = data.pick(&fold.test);
            let basis = train_basis(train, q, None, cfg.method, cfg.delta, cfg.t_max, cfg.init)?;
            let test_curve = padded_curve(&basis, &test, q)?;

            let test_owned: Vec<Vec<f64>> = test.iter().map(|x| x.to_vec()).collect();
            let upper = train_basis(&test_owned, q, None, BasisMethod::Exact, cfg.delta, cfg.t_max, cfg.init)?;
            let upper_curve = padded_curve(&upper, &test, q)?;

            let mut masked = Vec::new();
            for (_, nb, tree) in &masks {
                // the distributed method needs a tree; without one fall back to exact
                let method = match (cfg.method, tree) {
                    (BasisMethod::Distributed, None) => BasisMethod::Exact,
                    (m, _) => m,
                };
                let mask = tree.as_ref().map(|t| (nb, t));
                let b = match mask {
                    Some(m) => train_basis(train, q, Some(m), method, cfg.delta, cfg.t_max, cfg.init)?,
                    None => {
                        let star = RoutingTree::star(nb.len());
                        train_basis(train, q, Some((nb, &star)), method, cfg.delta, cfg.t_max, cfg.init)?
                    }
                };
                masked.push((padded_curve(&b, &test, q)?, b.len()));
            }
            Ok((test_curve, upper_curve, masked))
        })
        .collect::<Result<_>>()?;

    let mut result = XvalResult {
        q_max: q,
        test: Vec::new(),
        upper_bound: Vec::new(),
        masked: masks.iter().map(|(r, _, _)| (*r, Vec::new(), Vec::new())).collect(),
    };
    for (t, u, m) in per_fold {
        result.test.push(t);
        result.upper_bound.push(u);
        for (slot, (curve, n)) in result.masked.iter_mut().zip(m) {
            slot.1.push(curve);
            slot.2.push(n);
        }
    }
    Ok(result)
}

/// Mean test retained variance for each fold count in `ks`, rows `(K, q, value)`.
pub fn fold_count_sweep(data: &Dataset, cfg: &ExperimentConfig, ks: &[usize]) -> Result<Vec<(usize, usize, f64)>> {
    let mut rows = Vec::new();
    for &k in ks {
        let c = ExperimentConfig {
            folds: k,
            ranges: Vec::new(),
            ..cfg.clone()
        };
        let r = xval_retained_variance(data, &c)?;
        for q in 1..=cfg.q_max {
            rows.push((k, q, r.mean_test(q)));
        }
    }
    Ok(rows)
}

/// Accuracy lost by stopping power iteration at a budget, per fold.
#[derive(Debug, Clone, PartialEq)]
pub struct PimAccuracy {
    pub q_max: usize,
    pub budgets: Vec<usize>,
    /// `[fold]` curves of the exact basis.
    pub exact: Vec<Vec<f64>>,
    /// `[budget][fold]` curves of the budget-limited basis.
    pub pim: Vec<Vec<Vec<f64>>>,
}

impl PimAccuracy {
    /// Fold mean of `exact - pim` at `q` components.
    pub fn mean_difference(&self, budget_index: usize, q: usize) -> f64 {
        let folds = self.exact.len();
        (0..folds)
            .map(|f| self.exact[f][q] - self.pim[budget_index][f][q])
            .sum::<f64>()
            / folds as f64
    }

    pub fn report(&self) -> MetricsReport {
        let mut t = Table::new(&["budget", "fold", "q", "exact", "pim", "difference"]);
        for (b, budget) in self.budgets.iter().enumerate() {
            for (f, exact) in self.exact.iter().enumerate() {
                let pim = &self.pim[b][f];
                for q in 1..=self.q_max {
                    t.push(vec![
                        budget.to_string(),
                        f.to_string(),
                        q.to_string(),
                        sig9(exact[q]),
                        sig9(pim[q]),
                        sig9(exact[q] - pim[q]),
                    ]);
                }
            }
        }
        let mut report = MetricsReport::default();
        report.tables.insert("fig14_pim_accuracy.csv".into(), t);
        report
    }
}

/// Exact basis against power iteration capped at each budget, on the full covariance.
pub fn pim_accuracy_study(data: &Dataset, cfg: &ExperimentConfig) -> Result<PimAccuracy> {
    let folds = kfold_split(data.epochs(), cfg.folds)?;
    let q = cfg.q_max;
    type FoldOut = (Vec<f64>, Vec<Vec<f64>>);
    let per_fold: Vec<FoldOut> = folds
        .par_iter()
        .map(|fold| -> Result<FoldOut> {
            let train = data.block(fold.train.clone());
            let test = data.pick(&fold.test);
            let mut acc = CovAccumulator::new(data.sensors());
            for x in train {
                acc.update(x)?;
            }
            let c = covariance_batch(train)?;
            let exact = basis_from_covariance(&c, q, acc.mean(), None, BasisMethod::Exact, cfg.delta, cfg.t_max, cfg.init)?;
            let exact_curve = padded_curve(&exact, &test, q)?;
            let curves = cfg
                .budgets
                .iter()
                .map(|&b| {
                    let basis = compute_basis(&c, q, cfg.delta, b, cfg.init)?.with_mean(acc.mean())?;
                    padded_curve(&basis, &test, q)
                })
                .collect::<Result<_>>()?;
            Ok((exact_curve, curves))
        })
        .collect::<Result<_>>()?;
    let mut out = PimAccuracy {
        q_max: q,
        budgets: cfg.budgets.clone(),
        exact: Vec::new(),
        pim: vec![Vec::new(); cfg.budgets.len()],
    };
    for (e, curves) in per_fold {
        out.exact.push(e);
        for (b, c) in curves.into_iter().enumerate() {
            out.pim[b].push(c);
        }
    }
    Ok(out)
}

/// Five-number summary with linearly interpolated quartiles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spread {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub mean: f64,
}

pub fn spread(values: &[u64]) -> Spread {
    let mut v: Vec<f64> = values.iter().map(|&x| x as f64).collect();
    v.sort_by(f64::total_cmp);
    let at = |p: f64| {
        if v.is_empty() {
            return 0.0;
        }
        let h = (v.len() - 1) as f64 * p;
        let lo = h.floor() as usize;
        let hi = h.ceil() as usize;
        v[lo] + (h - lo as f64) * (v[hi] - v[lo])
    };
    Spread {
        min: at(0.0),
        q1: at(0.25),
        median: at(0.5),
        q3: at(0.75),
        max: at(1.0),
        mean: if v.is_empty() { 0.0 } else { v.iter().sum::<f64>() / v.len() as f64 },
    }
}

fn spread_cells(s: &Spread) -> Vec<String> {
    [s.min, s.q1, s.median, s.q3, s.max, s.mean].iter().map(|x| sig9(*x)).collect()
}

/// Loads of one radio range.
#[derive(Debug, Clone, PartialEq)]
pub struct RangeLoads {
    pub range: f64,
    pub depth: usize,
    pub max_children: usize,
    pub max_neighbors: usize,
    pub default: LoadReport,
    pub aggregate1: LoadReport,
    pub cov_round: LoadReport,
}

/// Cumulative distributed PIM cost after each accepted component.
#[derive(Debug, Clone, PartialEq)]
pub struct PimCost {
    pub q: usize,
    pub cumulative: LoadReport,
    pub iterations: usize,
    pub centralized: LoadReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadStudy {
    pub ranges: Vec<RangeLoads>,
    /// Ranges with no spanning tree.
    pub skipped: Vec<f64>,
    pub range: f64,
    /// Default and `A(q)` loads at `range` for `q = 1..=q_loads`.
    pub by_q: Vec<(usize, LoadReport, LoadReport)>,
    pub pim: Vec<PimCost>,
}

impl LoadStudy {
    pub fn report(&self) -> MetricsReport {
        let spread_cols = ["min", "q1", "median", "q3", "max", "mean"];
        let mut h10 = vec!["range", "scheme", "total"];
        h10.extend(spread_cols);
        let mut fig10 = Table::new(&h10);
        let mut h13 = vec!["range", "total"];
        h13.extend(spread_cols);
        let mut fig13 = Table::new(&h13);
        for r in &self.ranges {
            for (scheme, load) in [("default", &r.default), ("pcag_q1", &r.aggregate1)] {
                let mut row = vec![format_range(r.range), scheme.to_string(), load.total().to_string()];
                row.extend(spread_cells(&spread(&load.node_loads())));
                fig10.push(row);
            }
            let mut row = vec![format_range(r.range), r.cov_round.total().to_string()];
            row.extend(spread_cells(&spread(&r.cov_round.node_loads())));
            fig13.push(row);
        }
        let mut h11 = vec!["q", "scheme", "total"];
        h11.extend(spread_cols);
        let mut fig11 = Table::new(&h11);
        for (q, d, a) in &self.by_q {
            for (scheme, load) in [("default", d), ("pcag", a)] {
                let mut row = vec![q.to_string(), scheme.to_string(), load.total().to_string()];
                row.extend(spread_cells(&spread(&load.node_loads())));
                fig11.push(row);
            }
        }
        let mut fig15 = Table::new(&[
            "q",
            "iterations",
            "total",
            "mean",
            "max",
            "centralized_total",
            "centralized_max",
        ]);
        for c in &self.pim {
            fig15.push(vec![
                c.q.to_string(),
                c.iterations.to_string(),
                c.cumulative.total().to_string(),
                sig9(c.cumulative.mean_node_load()),
                c.cumulative.max_node_load().to_string(),
                c.centralized.total().to_string(),
                c.centralized.max_node_load().to_string(),
            ]);
        }
        let mut report = MetricsReport::default();
        report.tables.insert("fig10_loads.csv".into(), fig10);
        report.tables.insert("fig11_loads_by_q.csv".into(), fig11);
        report.tables.insert("fig13_cov_loads.csv".into(), fig13);
        report.tables.insert("fig15_pim_loads.csv".into(), fig15);
        report
    }
}

/// Default versus aggregated loads across the range sweep, covariance
/// rounds, and the cost of computing the basis in-network at `cfg.range`
/// from the training block of `cfg.fold`.
pub fn load_study(data: &Dataset, cfg: &ExperimentConfig) -> Result<LoadStudy> {
    let mut ranges = Vec::new();
    let mut skipped = Vec::new();
    for &r in &cfg.ranges {
        let nb = Neighborhoods::build(&data.field, r)?;
        let tree = match RoutingTree::build_on(&data.field, &nb) {
            Ok(t) => t,
            Err(Error::Disconnected(ids)) => {
                log::warn!("range {r} m leaves {} sensors unreachable; skipped", ids.len());
                skipped.push(r);
                continue;
            }
            Err(e) => return Err(e),
        };
        let mut states = init_network(&nb);
        let cov_round = run_cov_round(&mut states, &nb, data.trace.epoch(0))?;
        let st = tree.stats();
        ranges.push(RangeLoads {
            range: r,
            depth: st.depth,
            max_children: st.max_children,
            max_neighbors: nb.max_degree(),
            default: analytic_loads(&tree, Operation::Default),
            aggregate1: analytic_loads(&tree, Operation::Aggregate(1)),
            cov_round,
        });
    }

    let nb = Neighborhoods::build(&data.field, cfg.range)?;
    let tree = RoutingTree::build_on(&data.field, &nb)?;
    let q_loads = cfg.q_loads.min(data.sensors());
    let by_q = (1..=q_loads)
        .map(|q| {
            (
                q,
                analytic_loads(&tree, Operation::Default),
                analytic_loads(&tree, Operation::Aggregate(q)),
            )
        })
        .collect();

    let folds = kfold_split(data.epochs(), cfg.folds)?;
    let fold = folds
        .get(cfg.fold)
        .ok_or_else(|| Error::Config(format!("fold {} out of range", cfg.fold)))?;
    let train = data.block(fold.train.clone());
    let mut states = init_network(&nb);
    for x in train {
        run_cov_round(&mut states, &nb, x)?;
    }
    let mut net = PimNetwork::from_cov_states(&states, &nb)?;
    let pim_cfg = PimConfig {
        q_target: q_loads,
        delta: cfg.delta,
        t_max: cfg.t_max,
        v0_policy: cfg.init,
    };
    let run = run_distributed_pim(&mut net, &tree, &pim_cfg)?;
    let mut cumulative = LoadReport::zeros(data.sensors());
    let mut pim = Vec::new();
    for (k, load) in run.component_loads.iter().enumerate().take(net.accepted()) {
        cumulative.add(load);
        let basis = net.to_basis(vec![0.0; data.sensors()])?.truncated(k + 1);
        pim.push(PimCost {
            q: k + 1,
            cumulative: cumulative.clone(),
            iterations: run.iterations[k],
            centralized: distribute_basis_centralized(&tree, &basis),
        });
    }
    Ok(LoadStudy {
        ranges,
        skipped,
        range: cfg.range,
        by_q,
        pim,
    })
}
