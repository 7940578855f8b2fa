//! Finite event trees: the filtered probability space underlying every
//! model in this crate, together with adapted and predictable process
//! containers.
//!
//! Nodes are the atoms of the filtration at each date. Indices are
//! assigned in (time, id) order, so iterating `0..tree.len()` visits
//! nodes time-major and lexicographically within a date — every
//! deterministic iteration in the crate relies on this.

use std::collections::BTreeMap;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::rat::{is_zero_vec, zeros, Rat};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeIx(pub usize);

#[derive(Debug, Clone)]
pub struct Node {
    pub id: String,
    pub time: usize,
    pub parent: Option<NodeIx>,
    pub children: Vec<NodeIx>,
    /// Conditional branch weight given the parent (1 at the root).
    pub branch_prob: Rat,
    /// Unconditional probability: product of branch weights down to this atom.
    pub prob: Rat,
}

/// Raw node description used by the builder (and the model file loader).
#[derive(Debug, Clone)]
pub struct NodeSpec {
    pub id: String,
    pub time: usize,
    pub parent: Option<String>,
    pub branch_prob: Rat,
}

#[derive(Debug, Clone)]
pub struct EventTree {
    dim: usize,
    horizon: usize,
    nodes: Vec<Node>,
    by_time: Vec<Vec<NodeIx>>,
    index_by_id: BTreeMap<String, NodeIx>,
}

impl EventTree {
    /// Validates and builds a tree with horizon `T >= 1`.
    pub fn build(dim: usize, horizon: usize, specs: Vec<NodeSpec>) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::Tree("horizon must be at least 1".into()));
        }
        Self::build_inner(dim, horizon, specs)
    }

    fn build_inner(dim: usize, horizon: usize, mut specs: Vec<NodeSpec>) -> Result<Self> {
        if dim < 2 {
            return Err(Error::Tree(format!("dimension must be at least 2, got {dim}")));
        }
        specs.sort_by(|a, b| (a.time, a.id.clone()).cmp(&(b.time, b.id.clone())));

        let mut index_by_id = BTreeMap::new();
        for (i, s) in specs.iter().enumerate() {
            if index_by_id.insert(s.id.clone(), NodeIx(i)).is_some() {
                return Err(Error::Tree(format!("duplicate node id {:?}", s.id)));
            }
            if s.time > horizon {
                return Err(Error::Tree(format!(
                    "node {:?} has time {} beyond horizon {horizon}",
                    s.id, s.time
                )));
            }
            if !s.branch_prob.is_positive() {
                return Err(Error::Tree(format!("node {:?} has nonpositive branch probability", s.id)));
            }
        }

        let mut nodes: Vec<Node> = Vec::with_capacity(specs.len());
        for s in &specs {
            let parent = match (&s.parent, s.time) {
                (None, 0) => {
                    if !s.branch_prob.is_one() {
                        return Err(Error::Tree("root branch probability must be 1".into()));
                    }
                    None
                }
                (None, _) => return Err(Error::Tree(format!("non-root node {:?} has no parent", s.id))),
                (Some(_), 0) => return Err(Error::Tree(format!("root node {:?} must not have a parent", s.id))),
                (Some(pid), t) => {
                    let pix = *index_by_id
                        .get(pid)
                        .ok_or_else(|| Error::Tree(format!("node {:?} has dangling parent {pid:?}", s.id)))?;
                    if specs[pix.0].time + 1 != t {
                        return Err(Error::Tree(format!(
                            "node {:?} at time {t} has parent {pid:?} at time {}",
                            s.id, specs[pix.0].time
                        )));
                    }
                    Some(pix)
                }
            };
            nodes.push(Node {
                id: s.id.clone(),
                time: s.time,
                parent,
                children: Vec::new(),
                branch_prob: s.branch_prob.clone(),
                prob: Rat::zero(),
            });
        }

        let roots: Vec<usize> = nodes.iter().enumerate().filter(|(_, n)| n.time == 0).map(|(i, _)| i).collect();
        if roots.len() != 1 {
            return Err(Error::Tree(format!("expected exactly one root, found {}", roots.len())));
        }

        for i in 0..nodes.len() {
            if let Some(p) = nodes[i].parent {
                nodes[p.0].children.push(NodeIx(i));
            }
        }

        // Unconditional probabilities top-down; indices are time-major.
        for i in 0..nodes.len() {
            nodes[i].prob = match nodes[i].parent {
                None => Rat::one(),
                Some(p) => &nodes[p.0].prob * &nodes[i].branch_prob,
            };
        }

        let mut by_time = vec![Vec::new(); horizon + 1];
        for (i, n) in nodes.iter().enumerate() {
            by_time[n.time].push(NodeIx(i));
        }

        for (i, n) in nodes.iter().enumerate() {
            if n.time < horizon && n.children.is_empty() {
                return Err(Error::Tree(format!("node {:?} at time {} has no children", n.id, n.time)));
            }
            if !n.children.is_empty() {
                let s: Rat = n.children.iter().map(|c| nodes[c.0].branch_prob.clone()).sum();
                if !s.is_one() {
                    return Err(Error::Tree(format!(
                        "branch probabilities of children of {:?} sum to {} instead of 1",
                        nodes[i].id, s
                    )));
                }
            }
        }

        Ok(EventTree { dim, horizon, nodes, by_time, index_by_id })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, ix: NodeIx) -> &Node {
        &self.nodes[ix.0]
    }

    pub fn id(&self, ix: NodeIx) -> &str {
        &self.nodes[ix.0].id
    }

    pub fn ix_of(&self, id: &str) -> Option<NodeIx> {
        self.index_by_id.get(id).copied()
    }

    pub fn root(&self) -> NodeIx {
        self.by_time[0][0]
    }

    pub fn is_leaf(&self, ix: NodeIx) -> bool {
        self.nodes[ix.0].children.is_empty()
    }

    /// All node indices in deterministic (time, id) order.
    pub fn indices(&self) -> impl Iterator<Item = NodeIx> {
        (0..self.nodes.len()).map(NodeIx)
    }

    /// Atoms of the filtration at date `t`, ordered lexicographically by id.
    pub fn atoms(&self, t: usize) -> Result<&[NodeIx]> {
        self.by_time
            .get(t)
            .map(|v| v.as_slice())
            .ok_or_else(|| Error::Tree(format!("time {t} out of range 0..={}", self.horizon)))
    }

    pub fn leaves(&self) -> &[NodeIx] {
        &self.by_time[self.horizon]
    }

    /// Root-to-node path, inclusive on both ends.
    pub fn path(&self, ix: NodeIx) -> Vec<NodeIx> {
        let mut p = Vec::with_capacity(self.node(ix).time + 1);
        let mut cur = Some(ix);
        while let Some(c) = cur {
            p.push(c);
            cur = self.node(c).parent;
        }
        p.reverse();
        p
    }

    /// The node and all its descendants, in deterministic index order.
    pub fn descendants(&self, ix: NodeIx) -> Vec<NodeIx> {
        let mut out: Vec<NodeIx> = self
            .indices()
            .filter(|&j| {
                let mut cur = Some(j);
                while let Some(c) = cur {
                    if c == ix {
                        return true;
                    }
                    cur = self.node(c).parent;
                }
                false
            })
            .collect();
        out.sort();
        out
    }

    /// Subtree rooted at `ix`, times shifted to start at 0 and
    /// probabilities renormalized. Ids are preserved. A single-leaf
    /// subtree (horizon 0) is permitted here, unlike in `build`.
    pub fn restrict_to_subtree(&self, ix: NodeIx) -> Result<EventTree> {
        let base_time = self.node(ix).time;
        let sub = self.descendants(ix);
        let specs: Vec<NodeSpec> = sub
            .iter()
            .map(|&j| {
                let n = self.node(j);
                NodeSpec {
                    id: n.id.clone(),
                    time: n.time - base_time,
                    parent: if j == ix { None } else { n.parent.map(|p| self.id(p).to_string()) },
                    branch_prob: if j == ix { Rat::one() } else { n.branch_prob.clone() },
                }
            })
            .collect();
        Self::build_inner(self.dim, self.horizon - base_time, specs)
    }
}

/// One `R^d` value per node; the container for payoff processes and
/// anything else adapted to the filtration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdaptedProcess {
    values: Vec<Vec<Rat>>,
}

impl AdaptedProcess {
    pub fn new(tree: &EventTree, values: Vec<Vec<Rat>>) -> Result<Self> {
        if values.len() != tree.len() {
            return Err(Error::Tree(format!(
                "adapted process has {} values for {} nodes",
                values.len(),
                tree.len()
            )));
        }
        for v in &values {
            if v.len() != tree.dim() {
                return Err(Error::Dimension(format!(
                    "adapted value has dimension {}, expected {}",
                    v.len(),
                    tree.dim()
                )));
            }
        }
        Ok(AdaptedProcess { values })
    }

    pub fn zero(tree: &EventTree) -> Self {
        AdaptedProcess { values: vec![zeros(tree.dim()); tree.len()] }
    }

    pub fn from_fn(tree: &EventTree, mut f: impl FnMut(NodeIx) -> Vec<Rat>) -> Result<Self> {
        Self::new(tree, tree.indices().map(|ix| f(ix)).collect())
    }

    pub fn at(&self, ix: NodeIx) -> &[Rat] {
        &self.values[ix.0]
    }
}

/// A predictable `R^d` process `y = (y_0, …, y_{T+1})` with `y_{T+1} = 0`.
///
/// The value stored at a time-`t` node is `y_{t+1}`, the portfolio held
/// from `t` into each of the node's children; `initial` is `y_0`.
/// Measurability is structural: one value per parent, shared by all
/// children. Entries at leaves are forced to zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredictableProcess {
    pub initial: Vec<Rat>,
    values: Vec<Vec<Rat>>,
}

impl PredictableProcess {
    pub fn new(tree: &EventTree, initial: Vec<Rat>, values: Vec<Vec<Rat>>) -> Result<Self> {
        if values.len() != tree.len() {
            return Err(Error::Tree(format!(
                "predictable process has {} values for {} nodes",
                values.len(),
                tree.len()
            )));
        }
        for (i, v) in values.iter().enumerate() {
            if v.len() != tree.dim() || initial.len() != tree.dim() {
                return Err(Error::Dimension("predictable value has wrong dimension".into()));
            }
            if tree.is_leaf(NodeIx(i)) && !is_zero_vec(v) {
                return Err(Error::Tree(format!(
                    "terminal convention violated: nonzero value stored at leaf {:?}",
                    tree.id(NodeIx(i))
                )));
            }
        }
        Ok(PredictableProcess { initial, values })
    }

    pub fn zero(tree: &EventTree) -> Self {
        PredictableProcess {
            initial: zeros(tree.dim()),
            values: vec![zeros(tree.dim()); tree.len()],
        }
    }

    /// `y_t` at a time-`t` node: the portfolio held into this node.
    pub fn at_entry<'a>(&'a self, tree: &EventTree, ix: NodeIx) -> &'a [Rat] {
        match tree.node(ix).parent {
            None => &self.initial,
            Some(p) => &self.values[p.0],
        }
    }

    /// `y_{t+1}` at a time-`t` node: the portfolio held out of this node
    /// (zero at leaves by the terminal convention).
    pub fn after(&self, ix: NodeIx) -> &[Rat] {
        &self.values[ix.0]
    }

    pub fn set_after(&mut self, ix: NodeIx, v: Vec<Rat>) {
        self.values[ix.0] = v;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{rat, rat_int};

    pub(crate) fn chain_spec(id: &str, time: usize, parent: Option<&str>, p: Rat) -> NodeSpec {
        NodeSpec { id: id.into(), time, parent: parent.map(|s| s.into()), branch_prob: p }
    }

    fn half() -> Rat {
        rat(1, 2)
    }

    pub(crate) fn two_step_tree() -> EventTree {
        let specs = vec![
            chain_spec("root", 0, None, rat_int(1)),
            chain_spec("u", 1, Some("root"), half()),
            chain_spec("d", 1, Some("root"), half()),
            chain_spec("uu", 2, Some("u"), half()),
            chain_spec("ud", 2, Some("u"), half()),
            chain_spec("du", 2, Some("d"), half()),
            chain_spec("dd", 2, Some("d"), half()),
        ];
        EventTree::build(2, 2, specs).unwrap()
    }

    #[test]
    fn builds_and_orders_atoms_lexicographically() {
        let t = two_step_tree();
        let ids: Vec<&str> = t.atoms(1).unwrap().iter().map(|&ix| t.id(ix)).collect();
        assert_eq!(ids, ["d", "u"]);
        assert_eq!(t.atoms(0).unwrap().len(), 1);
        assert_eq!(t.atoms(2).unwrap().len(), 4);
        assert!(t.atoms(3).is_err());
        let leaf_sum: Rat = t.leaves().iter().map(|&ix| t.node(ix).prob.clone()).sum();
        assert!(leaf_sum.is_one());
    }

    #[test]
    fn rejects_degenerate_and_malformed_trees() {
        // horizon 0
        let specs = vec![chain_spec("root", 0, None, rat_int(1))];
        assert!(EventTree::build(2, 0, specs).is_err());

        // duplicate ids
        let specs = vec![
            chain_spec("root", 0, None, rat_int(1)),
            chain_spec("a", 1, Some("root"), half()),
            chain_spec("a", 1, Some("root"), half()),
        ];
        assert!(matches!(EventTree::build(2, 1, specs), Err(Error::Tree(m)) if m.contains("duplicate")));

        // dangling parent
        let specs = vec![
            chain_spec("root", 0, None, rat_int(1)),
            chain_spec("a", 1, Some("ghost"), rat_int(1)),
        ];
        assert!(matches!(EventTree::build(2, 1, specs), Err(Error::Tree(m)) if m.contains("dangling")));

        // nonpositive probability
        let specs = vec![
            chain_spec("root", 0, None, rat_int(1)),
            chain_spec("a", 1, Some("root"), rat_int(0)),
        ];
        assert!(EventTree::build(2, 1, specs).is_err());

        // probability mismatch
        let specs = vec![
            chain_spec("root", 0, None, rat_int(1)),
            chain_spec("a", 1, Some("root"), half()),
            chain_spec("b", 1, Some("root"), rat(1, 3)),
        ];
        assert!(matches!(EventTree::build(2, 1, specs), Err(Error::Tree(m)) if m.contains("sum")));
    }

    #[test]
    fn accepts_three_leaf_one_step_tree() {
        let specs = vec![
            chain_spec("root", 0, None, rat_int(1)),
            chain_spec("a", 1, Some("root"), half()),
            chain_spec("b", 1, Some("root"), rat(1, 4)),
            chain_spec("c", 1, Some("root"), rat(1, 4)),
        ];
        let t = EventTree::build(2, 1, specs).unwrap();
        assert_eq!(t.leaves().len(), 3);
    }

    #[test]
    fn subtree_restriction() {
        let t = two_step_tree();
        let u = t.ix_of("u").unwrap();
        let sub = t.restrict_to_subtree(u).unwrap();
        assert_eq!(sub.horizon(), 1);
        assert_eq!(sub.len(), 3);
        assert_eq!(sub.id(sub.root()), "u");
        let leaf_sum: Rat = sub.leaves().iter().map(|&ix| sub.node(ix).prob.clone()).sum();
        assert!(leaf_sum.is_one());

        // identity case
        let same = t.restrict_to_subtree(t.root()).unwrap();
        assert_eq!(same.len(), t.len());
        assert_eq!(same.horizon(), t.horizon());

        // a leaf restricts to a single-node horizon-0 tree (internal use only)
        let dd = t.ix_of("dd").unwrap();
        let tiny = t.restrict_to_subtree(dd).unwrap();
        assert_eq!(tiny.horizon(), 0);
        assert_eq!(tiny.len(), 1);
    }

    #[test]
    fn predictable_process_conventions() {
        let t = two_step_tree();
        let mut p = PredictableProcess::zero(&t);
        let u = t.ix_of("u").unwrap();
        p.set_after(t.root(), vec![rat_int(1), rat_int(-10)]);
        assert_eq!(p.at_entry(&t, u), &[rat_int(1), rat_int(-10)]);
        let uu = t.ix_of("uu").unwrap();
        assert!(is_zero_vec(p.after(uu)));
        // shared by siblings: structural measurability
        let d = t.ix_of("d").unwrap();
        assert_eq!(p.at_entry(&t, u), p.at_entry(&t, d));
    }
}
