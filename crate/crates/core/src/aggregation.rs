//! Tree aggregation (initializer / merge / evaluator) and packet-load accounting.
//!
//! Loads count packets processed by each node, received plus transmitted, on
//! an ideal channel. A record of `q` scalars costs `q` packets.

use std::io::Write;

use crate::error::{check_len, Error, Result};
use crate::topology::{tree_stats, RoutingTree, SensorId};

/// Partial state record: the vector merged on its way up the tree.
#[derive(Debug, Clone, PartialEq)]
pub struct Psr(pub Vec<f64>);

/// An aggregation service over a routing tree.
pub trait Aggregation {
    type Output;

    /// Scalars per record, which is also the packet cost of sending one.
    fn record_size(&self) -> usize;

    /// Record contributed by `node`.
    fn init(&self, node: usize) -> Psr;

    /// Folds `other` into `acc`. Must be associative and commutative.
    fn merge(&self, acc: &mut Psr, other: &Psr) -> Result<()> {
        check_len(acc.0.len(), other.0.len())?;
        acc.0.iter_mut().zip(&other.0).for_each(|(a, b)| *a += b);
        Ok(())
    }

    fn evaluate(&self, root: Psr) -> Self::Output;
}

/// Per-node received and transmitted packet counts.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LoadReport {
    pub rx: Vec<u64>,
    pub tx: Vec<u64>,
}

impl LoadReport {
    pub fn zeros(p: usize) -> Self {
        Self {
            rx: vec![0; p],
            tx: vec![0; p],
        }
    }

    pub fn len(&self) -> usize {
        self.rx.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rx.is_empty()
    }

    pub fn node_load(&self, i: usize) -> u64 {
        self.rx[i] + self.tx[i]
    }

    pub fn node_loads(&self) -> Vec<u64> {
        (0..self.len()).map(|i| self.node_load(i)).collect()
    }

    pub fn total_rx(&self) -> u64 {
        self.rx.iter().sum()
    }

    pub fn total_tx(&self) -> u64 {
        self.tx.iter().sum()
    }

    pub fn total(&self) -> u64 {
        self.total_rx() + self.total_tx()
    }

    pub fn max_node_load(&self) -> u64 {
        (0..self.len()).map(|i| self.node_load(i)).max().unwrap_or(0)
    }

    pub fn mean_node_load(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            self.total() as f64 / self.len() as f64
        }
    }

    pub fn add(&mut self, other: &LoadReport) {
        if self.is_empty() {
            *self = LoadReport::zeros(other.len());
        }
        assert_eq!(self.len(), other.len(), "load reports cover different networks");
        self.rx.iter_mut().zip(&other.rx).for_each(|(a, b)| *a += b);
        self.tx.iter_mut().zip(&other.tx).for_each(|(a, b)| *a += b);
    }

    pub fn scaled(&self, k: u64) -> LoadReport {
        LoadReport {
            rx: self.rx.iter().map(|v| v * k).collect(),
            tx: self.tx.iter().map(|v| v * k).collect(),
        }
    }

    /// CSV with header `sensor_id,rx,tx,total`.
    pub fn write_csv<W: Write>(&self, ids: &[SensorId], out: W) -> Result<()> {
        check_len(self.len(), ids.len())?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["sensor_id", "rx", "tx", "total"])?;
        for (i, id) in ids.iter().enumerate() {
            w.write_record([
                id.to_string(),
                self.rx[i].to_string(),
                self.tx[i].to_string(),
                self.node_load(i).to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

impl std::iter::Sum for LoadReport {
    fn sum<I: Iterator<Item = LoadReport>>(iter: I) -> Self {
        let mut acc = LoadReport::default();
        for r in iter {
            acc.add(&r);
        }
        acc
    }
}

/// Network operations with closed-form loads.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Operation {
    /// Every raw measurement is forwarded to the sink.
    Default,
    /// In-tree aggregation of records of the given size.
    Aggregate(usize),
    /// Flood of a payload of the given size from the root to every node.
    Feedback(usize),
}

/// D operation: each node sends its own measurement and forwards its subtree's.
///
/// Returns the values in node order as reassembled at the sink.
pub fn run_default_epoch(tree: &RoutingTree, x: &[f64]) -> Result<(Vec<f64>, LoadReport)> {
    let p = tree.len();
    check_len(p, x.len())?;
    let mut load = LoadReport::zeros(p);
    // packets queued at each node, tagged with their origin
    let mut outbox: Vec<Vec<(usize, f64)>> = vec![Vec::new(); p];
    for v in tree.bottom_up() {
        let mut packets = vec![(v, x[v])];
        for &c in tree.children(v) {
            let incoming = std::mem::take(&mut outbox[c]);
            load.rx[v] += incoming.len() as u64;
            packets.extend(incoming);
        }
        load.tx[v] += packets.len() as u64;
        outbox[v] = packets;
    }
    let mut sink = vec![f64::NAN; p];
    for (origin, value) in std::mem::take(&mut outbox[tree.root()]) {
        sink[origin] = value;
    }
    Ok((sink, load))
}

/// A operation: records merged bottom-up, children folded in ascending index order.
pub fn run_aggregate_epoch<A: Aggregation>(
    tree: &RoutingTree,
    spec: &A,
) -> Result<(A::Output, LoadReport)> {
    let p = tree.len();
    let q = spec.record_size();
    if q == 0 {
        return Err(Error::Config("record size must be at least 1".into()));
    }
    let mut load = LoadReport::zeros(p);
    let mut partial: Vec<Option<Psr>> = vec![None; p];
    for v in tree.bottom_up() {
        let mut acc = spec.init(v);
        check_len(q, acc.0.len())?;
        for &c in tree.children(v) {
            let rec = partial[c].take().expect("children are processed first");
            spec.merge(&mut acc, &rec)?;
            load.rx[v] += q as u64;
        }
        check_len(q, acc.0.len())?;
        load.tx[v] += q as u64;
        partial[v] = Some(acc);
    }
    let root = partial[tree.root()].take().expect("root record");
    Ok((spec.evaluate(root), load))
}

/// F operation: the root broadcasts each payload packet once, inner nodes
/// receive and rebroadcast, leaves only receive.
pub fn run_feedback(tree: &RoutingTree, payload: usize) -> LoadReport {
    let p = tree.len();
    let mut load = LoadReport::zeros(p);
    let s = payload as u64;
    for &v in tree.top_down() {
        if tree.parent(v).is_some() {
            load.rx[v] += s;
        }
        if !tree.is_leaf(v) {
            load.tx[v] += s;
        }
    }
    load
}

/// Unicast of one raw packet from each of `origins` to the sink along tree paths.
///
/// Every node on the path transmits once, every node above the origin also
/// receives once. With every node as an origin this is the D operation.
pub fn route_to_sink(tree: &RoutingTree, origins: &[usize]) -> LoadReport {
    let mut load = LoadReport::zeros(tree.len());
    for &o in origins {
        load.tx[o] += 1;
        let mut v = o;
        while let Some(up) = tree.parent(v) {
            load.rx[up] += 1;
            load.tx[up] += 1;
            v = up;
        }
    }
    load
}

/// Closed-form loads of `op` on `tree`.
pub fn analytic_loads(tree: &RoutingTree, op: Operation) -> LoadReport {
    let st = tree_stats(tree);
    let p = tree.len();
    let mut load = LoadReport::zeros(p);
    for i in 0..p {
        let rt = st.subtree_sizes[i] as u64;
        let c = st.children_counts[i] as u64;
        let (rx, tx) = match op {
            // RT_i - 1 receptions, RT_i transmissions: 2 RT_i - 1
            Operation::Default => (rt - 1, rt),
            // q (C_i + 1)
            Operation::Aggregate(q) => (q as u64 * c, q as u64),
            Operation::Feedback(s) => {
                let s = s as u64;
                let rx = if i == tree.root() { 0 } else { s };
                let tx = if c > 0 { s } else { 0 };
                (rx, tx)
            }
        };
        load.rx[i] = rx;
        load.tx[i] = tx;
    }
    load
}

/// Whether aggregating `q` components lowers the highest load below the
/// default scheme's `2p - 1`.
pub fn tradeoff_holds(q: usize, c_max: usize, p: usize) -> bool {
    q * (c_max + 1) < 2 * p
}

/// Sum of squares, evaluated to the Euclidean norm.
#[derive(Debug, Clone)]
pub struct NormAggregation<'a> {
    pub values: &'a [f64],
}

impl Aggregation for NormAggregation<'_> {
    type Output = f64;

    fn record_size(&self) -> usize {
        1
    }

    fn init(&self, node: usize) -> Psr {
        Psr(vec![self.values[node] * self.values[node]])
    }

    fn evaluate(&self, root: Psr) -> f64 {
        root.0[0].sqrt()
    }
}

/// Componentwise sum of per-node vectors of a common length.
#[derive(Debug, Clone)]
pub struct VectorSum<'a> {
    pub records: &'a [Vec<f64>],
    pub size: usize,
}

impl<'a> VectorSum<'a> {
    pub fn new(records: &'a [Vec<f64>]) -> Result<Self> {
        let size = records.first().map_or(0, Vec::len);
        for r in records {
            check_len(size, r.len())?;
        }
        Ok(Self { records, size })
    }
}

impl Aggregation for VectorSum<'_> {
    type Output = Vec<f64>;

    fn record_size(&self) -> usize {
        self.size
    }

    fn init(&self, node: usize) -> Psr {
        Psr(self.records[node].clone())
    }

    fn evaluate(&self, root: Psr) -> Vec<f64> {
        root.0
    }
}

/// Componentwise sums of `per_node` vectors through the tree, with the A-operation loads.
pub fn aggregate_sums(tree: &RoutingTree, per_node: &[Vec<f64>]) -> Result<(Vec<f64>, LoadReport)> {
    check_len(tree.len(), per_node.len())?;
    run_aggregate_epoch(tree, &VectorSum::new(per_node)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_epoch_loads() {
        let (sink, load) = run_default_epoch(&RoutingTree::chain(3), &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(sink, vec![1.0, 2.0, 3.0]);
        assert_eq!(load.node_loads(), vec![5, 3, 1]);
        let (_, load) = run_default_epoch(&RoutingTree::star(1), &[7.0]).unwrap();
        assert_eq!(load.node_loads(), vec![1]);
        let (_, load) = run_default_epoch(&RoutingTree::star(52), &[0.0; 52]).unwrap();
        assert_eq!(load.node_load(0), 103);
        assert!(run_default_epoch(&RoutingTree::star(3), &[0.0; 2]).is_err());
    }

    #[test]
    fn norm_of_three_four() {
        let tree = RoutingTree::chain(2);
        let (n, load) = run_aggregate_epoch(&tree, &NormAggregation { values: &[3.0, 4.0] }).unwrap();
        assert_eq!(n, 5.0);
        assert_eq!(load.node_loads(), vec![2, 1]);
    }

    #[test]
    fn aggregate_loads_scale_with_record_size() {
        let tree = RoutingTree::star(7);
        for (q, expected) in [(1, 7), (15, 105)] {
            let records = vec![vec![1.0; q]; 7];
            let (sum, load) = aggregate_sums(&tree, &records).unwrap();
            assert_eq!(sum, vec![7.0; q]);
            assert_eq!(load.node_load(0), expected);
        }
    }

    struct Ragged;
    impl Aggregation for Ragged {
        type Output = ();
        fn record_size(&self) -> usize {
            2
        }
        fn init(&self, node: usize) -> Psr {
            Psr(vec![0.0; 1 + node % 2])
        }
        fn evaluate(&self, _: Psr) {}
    }

    #[test]
    fn merge_dimension_mismatch() {
        assert!(matches!(
            run_aggregate_epoch(&RoutingTree::chain(2), &Ragged),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn feedback_loads() {
        assert_eq!(run_feedback(&RoutingTree::chain(3), 1).node_loads(), vec![1, 2, 1]);
        assert_eq!(run_feedback(&RoutingTree::star(5), 1).node_loads(), vec![1; 5]);
        assert_eq!(run_feedback(&RoutingTree::chain(3), 3).node_loads(), vec![3, 6, 3]);
    }

    #[test]
    fn analytic_matches_simulation_on_small_trees() {
        for tree in [RoutingTree::chain(5), RoutingTree::star(6)] {
            let (_, d) = run_default_epoch(&tree, &vec![0.0; tree.len()]).unwrap();
            assert_eq!(d, analytic_loads(&tree, Operation::Default));
            let recs = vec![vec![0.0; 3]; tree.len()];
            let (_, a) = aggregate_sums(&tree, &recs).unwrap();
            assert_eq!(a, analytic_loads(&tree, Operation::Aggregate(3)));
            assert_eq!(run_feedback(&tree, 2), analytic_loads(&tree, Operation::Feedback(2)));
        }
    }

    #[test]
    fn routing_every_node_is_the_default_operation() {
        let tree = RoutingTree::from_parents(vec![None, Some(0), Some(0), Some(1), Some(1)]).unwrap();
        let all: Vec<usize> = (0..5).collect();
        assert_eq!(route_to_sink(&tree, &all), analytic_loads(&tree, Operation::Default));
        assert_eq!(route_to_sink(&tree, &[3]).node_loads(), vec![2, 2, 0, 1, 0]);
    }

    #[test]
    fn tradeoff_examples() {
        assert!(tradeoff_holds(1, 51, 52));
        assert!(!tradeoff_holds(52, 1, 52));
        assert!(!tradeoff_holds(15, 6, 52));
        assert!(tradeoff_holds(14, 6, 52));
    }

    #[test]
    fn load_csv() {
        let load = analytic_loads(&RoutingTree::chain(2), Operation::Default);
        let mut buf = Vec::new();
        load.write_csv(&[SensorId(4), SensorId(9)], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "sensor_id,rx,tx,total\n4,1,2,3\n9,0,1,1\n"
        );
    }
}
