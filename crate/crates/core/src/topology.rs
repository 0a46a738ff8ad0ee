//! Sensor placement, radio neighborhoods and shortest-hop routing trees.
//!
//! Nodes are addressed by index `0..p` in ascending [`SensorId`] order; the
//! external id is only used at I/O boundaries.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SensorId(pub u32);

impl fmt::Display for SensorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sensor {
    pub id: SensorId,
    pub x: f64,
    pub y: f64,
}

/// Positions (meters) of every sensor plus the root that talks to the sink.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorField {
    sensors: Vec<Sensor>,
    root: usize,
}

impl SensorField {
    pub fn new(mut sensors: Vec<Sensor>, root: SensorId) -> Result<Self> {
        if sensors.is_empty() {
            return Err(Error::Config("sensor field is empty".into()));
        }
        sensors.sort_by_key(|s| s.id);
        if let Some(w) = sensors.windows(2).find(|w| w[0].id == w[1].id) {
            return Err(Error::Config(format!("duplicate sensor id {}", w[0].id)));
        }
        if let Some(s) = sensors.iter().find(|s| !s.x.is_finite() || !s.y.is_finite()) {
            return Err(Error::Config(format!("sensor {} has a non-finite position", s.id)));
        }
        let root = sensors
            .iter()
            .position(|s| s.id == root)
            .ok_or_else(|| Error::Config(format!("root sensor {root} not in field")))?;
        Ok(Self { sensors, root })
    }

    /// Drops the listed sensors (unknown ids are ignored).
    pub fn without(&self, excluded: &[SensorId]) -> Result<Self> {
        let kept = self
            .sensors
            .iter()
            .copied()
            .filter(|s| !excluded.contains(&s.id))
            .collect();
        Self::new(kept, self.root_id())
    }

    pub fn with_root(&self, root: SensorId) -> Result<Self> {
        Self::new(self.sensors.clone(), root)
    }

    pub fn len(&self) -> usize {
        self.sensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sensors.is_empty()
    }

    pub fn sensors(&self) -> &[Sensor] {
        &self.sensors
    }

    pub fn ids(&self) -> Vec<SensorId> {
        self.sensors.iter().map(|s| s.id).collect()
    }

    pub fn id(&self, index: usize) -> SensorId {
        self.sensors[index].id
    }

    pub fn index_of(&self, id: SensorId) -> Option<usize> {
        self.sensors.binary_search_by_key(&id, |s| s.id).ok()
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn root_id(&self) -> SensorId {
        self.sensors[self.root].id
    }

    pub fn distance(&self, a: usize, b: usize) -> f64 {
        let (sa, sb) = (&self.sensors[a], &self.sensors[b]);
        (sa.x - sb.x).hypot(sa.y - sb.y)
    }
}

/// Per-node sorted list of other nodes within radio range.
#[derive(Debug, Clone, PartialEq)]
pub struct Neighborhoods {
    range: f64,
    lists: Vec<Vec<usize>>,
}

impl Neighborhoods {
    pub fn build(field: &SensorField, radio_range: f64) -> Result<Self> {
        if !(radio_range > 0.0) {
            return Err(Error::Config(format!(
                "radio range must be positive, got {radio_range}"
            )));
        }
        let p = field.len();
        let mut lists = vec![Vec::new(); p];
        for i in 0..p {
            for j in (i + 1)..p {
                if field.distance(i, j) <= radio_range {
                    lists[i].push(j);
                    lists[j].push(i);
                }
            }
        }
        for l in &mut lists {
            l.sort_unstable();
        }
        Ok(Self {
            range: radio_range,
            lists,
        })
    }

    /// Every node neighbors every other node.
    pub fn complete(p: usize) -> Self {
        Self {
            range: f64::INFINITY,
            lists: (0..p).map(|i| (0..p).filter(|&j| j != i).collect()).collect(),
        }
    }

    /// Builds from explicit adjacency lists; symmetrizes and drops self loops.
    pub fn from_lists(lists: Vec<Vec<usize>>) -> Result<Self> {
        let p = lists.len();
        let mut sets = vec![BTreeSet::new(); p];
        for (i, l) in lists.iter().enumerate() {
            for &j in l {
                if j >= p {
                    return Err(Error::Config(format!("neighbor index {j} out of range")));
                }
                if j != i {
                    sets[i].insert(j);
                    sets[j].insert(i);
                }
            }
        }
        Ok(Self {
            range: f64::NAN,
            lists: sets.into_iter().map(|s| s.into_iter().collect()).collect(),
        })
    }

    pub fn range(&self) -> f64 {
        self.range
    }

    pub fn len(&self) -> usize {
        self.lists.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lists.is_empty()
    }

    pub fn of(&self, i: usize) -> &[usize] {
        &self.lists[i]
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.lists[i].binary_search(&j).is_ok()
    }

    /// `j ∈ N_i ∪ {i}`
    pub fn in_mask(&self, i: usize, j: usize) -> bool {
        i == j || self.contains(i, j)
    }

    pub fn max_degree(&self) -> usize {
        self.lists.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Node with the most neighbors (lowest index on ties).
    pub fn argmax_degree(&self) -> usize {
        let max = self.max_degree();
        self.lists.iter().position(|l| l.len() == max).unwrap_or(0)
    }
}

/// Rooted spanning tree; children are kept in ascending index order.
#[derive(Debug, Clone, PartialEq)]
pub struct RoutingTree {
    root: usize,
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
    depth: Vec<usize>,
    // breadth-first order from the root
    order: Vec<usize>,
}

impl RoutingTree {
    /// Shortest-hop tree from the field's root over the radio graph.
    ///
    /// Each node picks, among neighbors one hop closer to the root, the one with
    /// the lowest id, then the nearest one.
    pub fn build(field: &SensorField, radio_range: f64) -> Result<Self> {
        let nb = Neighborhoods::build(field, radio_range)?;
        Self::build_on(field, &nb)
    }

    pub fn build_on(field: &SensorField, nb: &Neighborhoods) -> Result<Self> {
        let p = field.len();
        let root = field.root();
        let mut hops = vec![usize::MAX; p];
        hops[root] = 0;
        let mut queue = VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            for &v in nb.of(u) {
                if hops[v] == usize::MAX {
                    hops[v] = hops[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        let unreachable: Vec<SensorId> = (0..p)
            .filter(|&i| hops[i] == usize::MAX)
            .map(|i| field.id(i))
            .collect();
        if !unreachable.is_empty() {
            return Err(Error::Disconnected(unreachable));
        }
        let parent = (0..p)
            .map(|v| {
                if v == root {
                    return None;
                }
                nb.of(v)
                    .iter()
                    .copied()
                    .filter(|&u| hops[u] + 1 == hops[v])
                    .min_by(|&a, &b| {
                        field
                            .id(a)
                            .cmp(&field.id(b))
                            .then(field.distance(a, v).total_cmp(&field.distance(b, v)))
                    })
            })
            .collect();
        Self::from_parents(parent)
    }

    /// Builds a tree from a parent array; exactly one entry must be `None`.
    pub fn from_parents(parent: Vec<Option<usize>>) -> Result<Self> {
        let p = parent.len();
        let roots: Vec<usize> = (0..p).filter(|&i| parent[i].is_none()).collect();
        if roots.len() != 1 {
            return Err(Error::Config(format!(
                "tree needs exactly one root, found {}",
                roots.len()
            )));
        }
        let root = roots[0];
        let mut children = vec![Vec::new(); p];
        for (i, par) in parent.iter().enumerate() {
            if let Some(par) = *par {
                if par >= p || par == i {
                    return Err(Error::Config(format!("invalid parent {par} for node {i}")));
                }
                children[par].push(i);
            }
        }
        let mut depth = vec![usize::MAX; p];
        depth[root] = 0;
        let mut order = Vec::with_capacity(p);
        let mut queue = VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            order.push(u);
            for &c in &children[u] {
                depth[c] = depth[u] + 1;
                queue.push_back(c);
            }
        }
        if order.len() != p {
            return Err(Error::Config("parent array contains a cycle".into()));
        }
        Ok(Self {
            root,
            parent,
            children,
            depth,
            order,
        })
    }

    /// `0 <- 1 <- ... <- p-1`, rooted at 0.
    pub fn chain(p: usize) -> Self {
        let parent = (0..p).map(|i| i.checked_sub(1)).collect();
        Self::from_parents(parent).expect("chain is a tree")
    }

    /// Every node is a child of node 0.
    pub fn star(p: usize) -> Self {
        let parent = (0..p).map(|i| if i == 0 { None } else { Some(0) }).collect();
        Self::from_parents(parent).expect("star is a tree")
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn parent(&self, i: usize) -> Option<usize> {
        self.parent[i]
    }

    pub fn parents(&self) -> &[Option<usize>] {
        &self.parent
    }

    pub fn children(&self, i: usize) -> &[usize] {
        &self.children[i]
    }

    pub fn is_leaf(&self, i: usize) -> bool {
        self.children[i].is_empty()
    }

    pub fn depth_of(&self, i: usize) -> usize {
        self.depth[i]
    }

    pub fn depth(&self) -> usize {
        self.depth.iter().copied().max().unwrap_or(0)
    }

    /// Root first, then level by level.
    pub fn top_down(&self) -> &[usize] {
        &self.order
    }

    /// Leaves before their parents.
    pub fn bottom_up(&self) -> impl Iterator<Item = usize> + '_ {
        self.order.iter().rev().copied()
    }

    pub fn stats(&self) -> TreeStats {
        tree_stats(self)
    }
}

/// Structural quantities behind the load formulas.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeStats {
    /// `RT_i`: node plus all descendants.
    pub subtree_sizes: Vec<usize>,
    /// `C_i`: direct children.
    pub children_counts: Vec<usize>,
    pub max_children: usize,
    /// Node with the most children (lowest index on ties).
    pub argmax_children: usize,
    pub depth: usize,
}

pub fn tree_stats(tree: &RoutingTree) -> TreeStats {
    let p = tree.len();
    let mut subtree_sizes = vec![1; p];
    for v in tree.bottom_up() {
        if let Some(par) = tree.parent(v) {
            subtree_sizes[par] += subtree_sizes[v];
        }
    }
    let children_counts: Vec<usize> = (0..p).map(|i| tree.children(i).len()).collect();
    let max_children = children_counts.iter().copied().max().unwrap_or(0);
    let argmax_children = children_counts
        .iter()
        .position(|&c| c == max_children)
        .unwrap_or(0);
    TreeStats {
        subtree_sizes,
        children_counts,
        max_children,
        argmax_children,
        depth: tree.depth(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(xs: &[f64]) -> SensorField {
        let sensors = xs
            .iter()
            .enumerate()
            .map(|(i, &x)| Sensor {
                id: SensorId(i as u32 + 1),
                x,
                y: 0.0,
            })
            .collect();
        SensorField::new(sensors, SensorId(1)).unwrap()
    }

    #[test]
    fn neighborhoods_follow_range() {
        let f = line(&[0.0, 5.0]);
        let nb = Neighborhoods::build(&f, 10.0).unwrap();
        assert_eq!(nb.of(0), &[1]);
        assert_eq!(nb.of(1), &[0]);
        let nb = Neighborhoods::build(&f, 4.0).unwrap();
        assert!(nb.of(0).is_empty() && nb.of(1).is_empty());
        assert!(Neighborhoods::build(&f, 0.0).is_err());
    }

    #[test]
    fn chain_and_star_trees() {
        let f = line(&[0.0, 10.0, 20.0]);
        let chain = RoutingTree::build(&f, 10.0).unwrap();
        assert_eq!(chain.depth(), 2);
        assert_eq!(chain.parents(), &[None, Some(0), Some(1)]);
        let star = RoutingTree::build(&f, 25.0).unwrap();
        assert_eq!(star.depth(), 1);
        assert_eq!(star.children(0), &[1, 2]);
    }

    #[test]
    fn disconnected_field_names_sensors() {
        let f = line(&[0.0, 10.0, 50.0]);
        match RoutingTree::build(&f, 10.0) {
            Err(Error::Disconnected(ids)) => assert_eq!(ids, vec![SensorId(3)]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn ties_prefer_lower_id() {
        // 3 and 2 are both one hop from root 1; 4 hears both
        let sensors = vec![
            Sensor { id: SensorId(1), x: 0.0, y: 0.0 },
            Sensor { id: SensorId(3), x: 5.0, y: 1.0 },
            Sensor { id: SensorId(2), x: 5.0, y: -4.0 },
            Sensor { id: SensorId(4), x: 10.0, y: 0.0 },
        ];
        let f = SensorField::new(sensors, SensorId(1)).unwrap();
        let t = RoutingTree::build(&f, 6.5).unwrap();
        let four = f.index_of(SensorId(4)).unwrap();
        assert_eq!(f.id(t.parent(four).unwrap()), SensorId(2));
    }

    #[test]
    fn stats_of_simple_trees() {
        let s = RoutingTree::chain(4).stats();
        assert_eq!(s.subtree_sizes, vec![4, 3, 2, 1]);
        assert!(s.children_counts.iter().all(|&c| c <= 1));
        let s = RoutingTree::star(52).stats();
        assert_eq!(s.max_children, 51);
        assert_eq!(s.subtree_sizes[0], 52);
        assert_eq!(s.argmax_children, 0);
    }

    #[test]
    fn from_parents_validates() {
        assert!(RoutingTree::from_parents(vec![None, None]).is_err());
        assert!(RoutingTree::from_parents(vec![None, Some(2), Some(1)]).is_err());
        assert!(RoutingTree::from_parents(vec![None, Some(5)]).is_err());
    }

    #[test]
    fn field_validation() {
        let s = Sensor { id: SensorId(1), x: 0.0, y: 0.0 };
        assert!(SensorField::new(vec![s, s], SensorId(1)).is_err());
        assert!(SensorField::new(vec![s], SensorId(2)).is_err());
        assert!(SensorField::new(vec![], SensorId(1)).is_err());
    }
}
