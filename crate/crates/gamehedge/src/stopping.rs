//! Mixed (randomised) stopping times and the payoff-process algebra of
//! game options: star processes, minima, evaluation, the delivery flow
//! `G` and the derived `Q` processes.

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::market::ConeField;
use crate::rat::{add, add_scaled, scale, sub, zeros, Rat};
use crate::tree::{AdaptedProcess, EventTree, NodeIx};

/// Nonnegative adapted scalar process summing to 1 along every path;
/// the value at a node is the fraction stopped there.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MixedStoppingTime {
    values: Vec<Rat>,
}

impl MixedStoppingTime {
    pub fn new(tree: &EventTree, values: Vec<Rat>) -> Result<Self> {
        if values.len() != tree.len() {
            return Err(Error::Stopping(format!(
                "{} values for {} nodes",
                values.len(),
                tree.len()
            )));
        }
        for (i, v) in values.iter().enumerate() {
            if v.is_negative() {
                return Err(Error::Stopping(format!(
                    "negative mass at node {:?}",
                    tree.id(NodeIx(i))
                )));
            }
        }
        for &leaf in tree.leaves() {
            let s: Rat = tree.path(leaf).iter().map(|&ix| values[ix.0].clone()).sum();
            if !s.is_one() {
                return Err(Error::Stopping(format!(
                    "mass along the path to {:?} sums to {} instead of 1",
                    tree.id(leaf),
                    s
                )));
            }
        }
        Ok(MixedStoppingTime { values })
    }

    pub fn at(&self, ix: NodeIx) -> &Rat {
        &self.values[ix.0]
    }

    pub fn values(&self) -> &[Rat] {
        &self.values
    }

    /// Indicator of an ordinary stopping time given as its stopping
    /// region: the set of nodes where it stops. Every path must hit the
    /// region exactly once.
    pub fn indicator(tree: &EventTree, region: &[bool]) -> Result<Self> {
        if region.len() != tree.len() {
            return Err(Error::Stopping("region size mismatch".into()));
        }
        for &leaf in tree.leaves() {
            let hits = tree.path(leaf).iter().filter(|ix| region[ix.0]).count();
            if hits != 1 {
                return Err(Error::Stopping(format!(
                    "stopping region hits the path to {:?} {hits} times",
                    tree.id(leaf)
                )));
            }
        }
        let values = region.iter().map(|&b| if b { Rat::one() } else { Rat::zero() }).collect();
        Ok(MixedStoppingTime { values })
    }

    /// Stop everything at a deterministic date.
    pub fn at_time(tree: &EventTree, t: usize) -> Result<Self> {
        let mut region = vec![false; tree.len()];
        for &ix in tree.atoms(t)? {
            region[ix.0] = true;
        }
        Self::indicator(tree, &region)
    }

    /// Equal mass `1/(T+1)` at every date.
    pub fn uniform(tree: &EventTree) -> Self {
        let w = Rat::new(1.into(), (tree.horizon() as i64 + 1).into());
        MixedStoppingTime { values: vec![w; tree.len()] }
    }

    /// If this is an indicator stopping time, the stopping date per leaf
    /// (aligned with `tree.leaves()`).
    pub fn as_ordinary(&self, tree: &EventTree) -> Option<Vec<usize>> {
        let mut out = Vec::with_capacity(tree.leaves().len());
        for &leaf in tree.leaves() {
            let mut t = None;
            for &ix in &tree.path(leaf) {
                let v = &self.values[ix.0];
                if v.is_one() && t.is_none() {
                    t = Some(tree.node(ix).time);
                } else if !v.is_zero() && !(v.is_one() && t == Some(tree.node(ix).time)) {
                    return None;
                }
            }
            out.push(t?);
        }
        Some(out)
    }
}

/// Predictable remaining-mass process: at a time-`t` node the entry
/// value is the mass not yet stopped before `t` and the stored value is
/// the mass remaining after `t`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StarProcess {
    values: Vec<Rat>,
}

impl StarProcess {
    /// Remaining mass at the node's own date (`phi*_t`); 1 at the root.
    pub fn at_entry(&self, tree: &EventTree, ix: NodeIx) -> Rat {
        match tree.node(ix).parent {
            None => Rat::one(),
            Some(p) => self.values[p.0].clone(),
        }
    }

    /// Remaining mass after the node's date (`phi*_{t+1}`); 0 at leaves.
    pub fn after(&self, ix: NodeIx) -> &Rat {
        &self.values[ix.0]
    }
}

/// Suffix sums of a mixed stopping time along every path, computed
/// top-down; exact. The leaf values must come out to zero, which also
/// re-verifies the path-sum invariant.
pub fn star(tree: &EventTree, phi: &MixedStoppingTime) -> StarProcess {
    let mut values = vec![Rat::zero(); tree.len()];
    for ix in tree.indices() {
        let entry = match tree.node(ix).parent {
            None => Rat::one(),
            Some(p) => values[p.0].clone(),
        };
        values[ix.0] = entry - phi.at(ix);
    }
    for &leaf in tree.leaves() {
        debug_assert!(values[leaf.0].is_zero());
    }
    StarProcess { values }
}

/// The minimum of two mixed stopping times:
/// `(psi ∧ phi)_t = psi_t phi*_t + psi*_{t+1} phi_t`.
pub fn mst_min(
    tree: &EventTree,
    psi: &MixedStoppingTime,
    phi: &MixedStoppingTime,
) -> Result<MixedStoppingTime> {
    let psi_star = star(tree, psi);
    let phi_star = star(tree, phi);
    let values: Vec<Rat> = tree
        .indices()
        .map(|ix| {
            psi.at(ix) * phi_star.at_entry(tree, ix) + psi_star.after(ix) * phi.at(ix)
        })
        .collect();
    MixedStoppingTime::new(tree, values)
}

/// `X` evaluated at `phi`: the per-path portfolio `sum_t phi_t X_t`,
/// returned in `tree.leaves()` order.
pub fn evaluate_at(tree: &EventTree, x: &AdaptedProcess, phi: &MixedStoppingTime) -> Vec<Vec<Rat>> {
    tree.leaves()
        .iter()
        .map(|&leaf| {
            let mut acc = zeros(tree.dim());
            for &ix in &tree.path(leaf) {
                acc = add_scaled(&acc, phi.at(ix), x.at(ix));
            }
            acc
        })
        .collect()
}

/// Exercise and cancellation payoff processes of a game option. The
/// cancellation penalty `cancel - exercise` must be solvent at every
/// node.
#[derive(Debug, Clone)]
pub struct GamePayoffs {
    pub exercise: AdaptedProcess,
    pub cancel: AdaptedProcess,
}

impl GamePayoffs {
    pub fn new(exercise: AdaptedProcess, cancel: AdaptedProcess) -> Self {
        GamePayoffs { exercise, cancel }
    }

    pub fn zero(tree: &EventTree) -> Self {
        GamePayoffs { exercise: AdaptedProcess::zero(tree), cancel: AdaptedProcess::zero(tree) }
    }

    pub fn validate(&self, tree: &EventTree, cones: &ConeField) -> Result<()> {
        for ix in tree.indices() {
            let penalty = sub(self.cancel.at(ix), self.exercise.at(ix));
            if !cones.immediate(ix).contains(&penalty) {
                return Err(Error::Payoff(format!(
                    "cancellation penalty not solvent at node {:?}",
                    tree.id(ix)
                )));
            }
        }
        Ok(())
    }

    /// Scales both payoff processes by a positive factor.
    pub fn scaled(&self, tree: &EventTree, factor: &Rat) -> Result<GamePayoffs> {
        Ok(GamePayoffs {
            exercise: AdaptedProcess::from_fn(tree, |ix| scale(factor, self.exercise.at(ix)))?,
            cancel: AdaptedProcess::from_fn(tree, |ix| scale(factor, self.cancel.at(ix)))?,
        })
    }
}

/// The portfolio delivered at one node when the buyer exercises along
/// `psi` and the seller cancels along `phi`:
/// `G_t = psi_t phi*_t Y_t + psi*_{t+1} phi_t X_t`.
pub fn payoff_g(
    tree: &EventTree,
    payoffs: &GamePayoffs,
    phi: &MixedStoppingTime,
    psi: &MixedStoppingTime,
    ix: NodeIx,
) -> Vec<Rat> {
    let phi_star = star(tree, phi);
    let psi_star = star(tree, psi);
    payoff_g_with_stars(tree, payoffs, phi, &phi_star, psi, &psi_star, ix)
}

pub fn payoff_g_with_stars(
    tree: &EventTree,
    payoffs: &GamePayoffs,
    phi: &MixedStoppingTime,
    phi_star: &StarProcess,
    psi: &MixedStoppingTime,
    psi_star: &StarProcess,
    ix: NodeIx,
) -> Vec<Rat> {
    let w_exercise = psi.at(ix) * phi_star.at_entry(tree, ix);
    let w_cancel = psi_star.after(ix) * phi.at(ix);
    add(
        &scale(&w_exercise, payoffs.exercise.at(ix)),
        &scale(&w_cancel, payoffs.cancel.at(ix)),
    )
}

/// The American payoff seen by a holder facing gradual cancellation
/// `phi` and exercising in full at `t`:
/// `Q_{phi,t} = phi*_t Y_t + sum_{s<t} phi_s X_s`.
pub fn payoff_q_cancel(tree: &EventTree, payoffs: &GamePayoffs, phi: &MixedStoppingTime) -> AdaptedProcess {
    let phi_star = star(tree, phi);
    let mut prefix = vec![zeros(tree.dim()); tree.len()];
    let mut values = vec![zeros(tree.dim()); tree.len()];
    for ix in tree.indices() {
        let before = match tree.node(ix).parent {
            None => zeros(tree.dim()),
            Some(p) => prefix[p.0].clone(),
        };
        values[ix.0] = add_scaled(
            &before,
            &phi_star.at_entry(tree, ix),
            payoffs.exercise.at(ix),
        );
        prefix[ix.0] = add_scaled(&before, phi.at(ix), payoffs.cancel.at(ix));
    }
    AdaptedProcess::new(tree, values).expect("values constructed per node")
}

/// The payoff seen by a seller facing gradual exercise `psi` and
/// cancelling in full at `t`:
/// `Q_{t,psi} = sum_{s<=t} psi_s Y_s + psi*_{t+1} X_t`.
pub fn payoff_q_exercise(tree: &EventTree, payoffs: &GamePayoffs, psi: &MixedStoppingTime) -> AdaptedProcess {
    let psi_star = star(tree, psi);
    let mut prefix = vec![zeros(tree.dim()); tree.len()];
    let mut values = vec![zeros(tree.dim()); tree.len()];
    for ix in tree.indices() {
        let before = match tree.node(ix).parent {
            None => zeros(tree.dim()),
            Some(p) => prefix[p.0].clone(),
        };
        let upto = add_scaled(&before, psi.at(ix), payoffs.exercise.at(ix));
        values[ix.0] = add_scaled(&upto, psi_star.after(ix), payoffs.cancel.at(ix));
        prefix[ix.0] = upto;
    }
    AdaptedProcess::new(tree, values).expect("values constructed per node")
}

/// `Q_{sigma,tau}` for ordinary stopping times: the portfolio changing
/// hands at `sigma ∧ tau`, per leaf. Exercise has priority on ties.
pub fn payoff_q_ordinary(
    tree: &EventTree,
    payoffs: &GamePayoffs,
    sigma: &MixedStoppingTime,
    tau: &MixedStoppingTime,
) -> Result<Vec<Vec<Rat>>> {
    let s_times = sigma
        .as_ordinary(tree)
        .ok_or_else(|| Error::Stopping("sigma is not an ordinary stopping time".into()))?;
    let t_times = tau
        .as_ordinary(tree)
        .ok_or_else(|| Error::Stopping("tau is not an ordinary stopping time".into()))?;
    Ok(tree
        .leaves()
        .iter()
        .enumerate()
        .map(|(i, &leaf)| {
            let path = tree.path(leaf);
            let (s, t) = (s_times[i], t_times[i]);
            if s >= t {
                payoffs.exercise.at(path[t]).to_vec()
            } else {
                payoffs.cancel.at(path[s]).to_vec()
            }
        })
        .collect())
}

/// The total `Q_{phi,psi} = sum_s sum_t phi_s psi_t Q_{s,t}` per leaf,
/// computed from the double-sum definition. This is not the payoff flow
/// itself, but equals the per-path total of `G`; keeping the two routes
/// separate gives an independent cross-check.
pub fn payoff_q_mixed(
    tree: &EventTree,
    payoffs: &GamePayoffs,
    phi: &MixedStoppingTime,
    psi: &MixedStoppingTime,
) -> Vec<Vec<Rat>> {
    tree.leaves()
        .iter()
        .map(|&leaf| {
            let path = tree.path(leaf);
            let mut acc = zeros(tree.dim());
            for (s, &sn) in path.iter().enumerate() {
                for (t, &tn) in path.iter().enumerate() {
                    let w = phi.at(sn) * psi.at(tn);
                    if w.is_zero() {
                        continue;
                    }
                    let q = if s >= t { payoffs.exercise.at(tn) } else { payoffs.cancel.at(sn) };
                    acc = add_scaled(&acc, &w, q);
                }
            }
            acc
        })
        .collect()
}

/// Per-path total of the delivery flow `G`, in `tree.leaves()` order.
pub fn total_g(
    tree: &EventTree,
    payoffs: &GamePayoffs,
    phi: &MixedStoppingTime,
    psi: &MixedStoppingTime,
) -> Vec<Vec<Rat>> {
    let phi_star = star(tree, phi);
    let psi_star = star(tree, psi);
    tree.leaves()
        .iter()
        .map(|&leaf| {
            let mut acc = zeros(tree.dim());
            for &ix in &tree.path(leaf) {
                let g = payoff_g_with_stars(tree, payoffs, phi, &phi_star, psi, &psi_star, ix);
                acc = add(&acc, &g);
            }
            acc
        })
        .collect()
}

/// All mixed stopping times whose per-node stopped fraction of the
/// remaining mass lies on the `1/n` lattice: every non-leaf node gets a
/// fraction in `{0, 1/n, …, 1}`, leaves stop whatever remains. The full
/// product is enumerated, `(n+1)^(#non-leaf nodes)` entries in
/// deterministic order.
pub fn mst_grid(tree: &EventTree, n: u32) -> Vec<MixedStoppingTime> {
    let non_leaves: Vec<NodeIx> = tree.indices().filter(|&ix| !tree.is_leaf(ix)).collect();
    let mut out = Vec::new();
    let mut fractions = vec![0u32; non_leaves.len()];
    loop {
        out.push(mst_from_fractions(tree, &non_leaves, &fractions, n));
        // odometer increment
        let mut i = 0;
        loop {
            if i == fractions.len() {
                return out;
            }
            if fractions[i] < n {
                fractions[i] += 1;
                break;
            }
            fractions[i] = 0;
            i += 1;
        }
    }
}

fn mst_from_fractions(
    tree: &EventTree,
    non_leaves: &[NodeIx],
    fractions: &[u32],
    n: u32,
) -> MixedStoppingTime {
    let mut slot = vec![usize::MAX; tree.len()];
    for (i, ix) in non_leaves.iter().enumerate() {
        slot[ix.0] = i;
    }
    let mut remaining = vec![Rat::zero(); tree.len()];
    let mut values = vec![Rat::zero(); tree.len()];
    for ix in tree.indices() {
        let entry = match tree.node(ix).parent {
            None => Rat::one(),
            Some(p) => remaining[p.0].clone(),
        };
        let stopped = if tree.is_leaf(ix) {
            entry.clone()
        } else {
            let f = Rat::new(fractions[slot[ix.0]].into(), 1.into()) / Rat::new(n.into(), 1.into());
            &entry * f
        };
        remaining[ix.0] = entry - &stopped;
        values[ix.0] = stopped;
    }
    MixedStoppingTime { values }
}
