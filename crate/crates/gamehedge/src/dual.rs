//! LP oracles for the dual price representations: grid search over
//! mixed stopping times with one exact LP over unnormalized consistent
//! price systems per grid point.
//!
//! A price system is one vector `m(node)` per node, standing for the
//! node probability times the price vector, normalized so that prices
//! are quoted in the chosen currency (`m` restricted to that coordinate
//! is a probability measure on every date). Feasibility requires each
//! `m(node)` and each stopping-time-weighted tail sum to lie in the
//! polar of the deferred solvency cone.

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::market::ConeField;
use crate::polyhedra::lp::{solve, Constraint, LpOutcome, LpProblem, Rel, Sense};
use crate::pricing::Side;
use crate::rat::{dot, fmt_rat, zeros, Rat};
use crate::stopping::{mst_grid, payoff_q_cancel, payoff_q_exercise, GamePayoffs, MixedStoppingTime};
use crate::tree::{AdaptedProcess, EventTree, NodeIx};

/// A feasible price system together with the stopping time whose dual
/// feasible set it belongs to and the currency normalization.
#[derive(Debug, Clone)]
pub struct DualPair {
    pub currency: usize,
    pub stopping: MixedStoppingTime,
    pub m: Vec<Vec<Rat>>,
}

/// Result of one inner grid scan: the extremal LP value over the
/// stopping-time grid, its argument and certificate, plus every grid
/// value for reporting.
#[derive(Debug, Clone)]
pub struct InnerScan {
    pub value: Rat,
    pub best: MixedStoppingTime,
    pub pair: DualPair,
    pub per_point: Vec<Rat>,
}

/// One outer grid point of a two-level dual search.
#[derive(Debug, Clone)]
pub struct DualEntry {
    pub outer: MixedStoppingTime,
    pub scan: InnerScan,
}

#[derive(Debug, Clone)]
pub struct DualReport {
    pub side: Side,
    pub currency: usize,
    pub grid_n: u32,
    pub entries: Vec<DualEntry>,
    /// index of the extremal entry (min for the seller, max for the buyer)
    pub best: usize,
    /// extremal value minus the primal price, when a primal price is given
    pub gap_to_primal: Option<Rat>,
}

impl DualReport {
    pub fn best_value(&self) -> &Rat {
        &self.entries[self.best].scan.value
    }
}

fn var(ix: NodeIx, j: usize, d: usize) -> usize {
    ix.0 * d + j
}

fn dual_constraints(
    tree: &EventTree,
    cones: &ConeField,
    eval: &MixedStoppingTime,
    j: usize,
) -> Vec<Constraint> {
    let d = tree.dim();
    let nv = tree.len() * d;
    let mut cs = Vec::new();
    for ix in tree.indices() {
        let q = cones.deferred(ix);
        // the price vector itself stays in the polar cone
        for g in q.rays() {
            let mut row = zeros(nv);
            for k in 0..d {
                row[var(ix, k, d)] = g[k].clone();
            }
            cs.push(Constraint::new(row, Rel::Ge, Rat::zero()));
        }
        let node = tree.node(ix);
        if node.children.is_empty() {
            continue;
        }
        // weighted tail sums over strict descendants stay in the polar cone
        for g in q.rays() {
            let mut row = zeros(nv);
            for mu in tree.descendants(ix) {
                if mu == ix {
                    continue;
                }
                let wgt = eval.at(mu);
                if wgt.is_zero() {
                    continue;
                }
                for k in 0..d {
                    row[var(mu, k, d)] = wgt * &g[k];
                }
            }
            cs.push(Constraint::new(row, Rel::Ge, Rat::zero()));
        }
        // the normalized coordinate is additive: a measure on each date
        let mut row = zeros(nv);
        row[var(ix, j, d)] = Rat::one();
        for c in &node.children {
            row[var(*c, j, d)] = -Rat::one();
        }
        cs.push(Constraint::new(row, Rel::Eq, Rat::zero()));
    }
    let mut row = zeros(nv);
    row[var(tree.root(), j, d)] = Rat::one();
    cs.push(Constraint::new(row, Rel::Eq, Rat::one()));
    cs
}

fn dual_objective_row(tree: &EventTree, z: &AdaptedProcess, eval: &MixedStoppingTime) -> Vec<Rat> {
    let d = tree.dim();
    let mut obj = zeros(tree.len() * d);
    for ix in tree.indices() {
        let wgt = eval.at(ix);
        if wgt.is_zero() {
            continue;
        }
        for k in 0..d {
            obj[var(ix, k, d)] = wgt * &z.at(ix)[k];
        }
    }
    obj
}

/// Exact optimum of the expected stopped payoff over price systems
/// feasible for `eval`; `None` if the feasible set is empty.
pub fn price_system_lp(
    tree: &EventTree,
    cones: &ConeField,
    z: &AdaptedProcess,
    eval: &MixedStoppingTime,
    j: usize,
    sense: Sense,
) -> Result<Option<(Rat, Vec<Vec<Rat>>)>> {
    let d = tree.dim();
    let p = LpProblem {
        num_vars: tree.len() * d,
        sense,
        objective: dual_objective_row(tree, z, eval),
        constraints: dual_constraints(tree, cones, eval, j),
    };
    match solve(&p)? {
        LpOutcome::Optimal { point, value } => {
            let m = tree
                .indices()
                .map(|ix| (0..d).map(|k| point[var(ix, k, d)].clone()).collect())
                .collect();
            Ok(Some((value, m)))
        }
        LpOutcome::Infeasible => Ok(None),
        LpOutcome::Unbounded => Err(Error::Internal(
            "dual LP unbounded: polar cones are degenerate".into(),
        )),
    }
}

/// Price of an American-style payoff under gradual exercise by grid
/// search: for every stopping time on the fraction grid solve the exact
/// LP and keep the extremum (first attained in grid order). The grid
/// extremum bounds the true optimum from inside.
pub fn american_dual_price(
    tree: &EventTree,
    cones: &ConeField,
    z: &AdaptedProcess,
    j: usize,
    n: u32,
    sense: Sense,
) -> Result<InnerScan> {
    let grid = mst_grid(tree, n);
    let mut best: Option<(Rat, MixedStoppingTime, Vec<Vec<Rat>>)> = None;
    let mut per_point = Vec::with_capacity(grid.len());
    for eval in grid {
        let Some((value, m)) = price_system_lp(tree, cones, z, &eval, j, sense)? else {
            return Err(Error::Internal(
                "dual feasible set empty; the model cones are inconsistent".into(),
            ));
        };
        per_point.push(value.clone());
        let better = match (&best, sense) {
            (None, _) => true,
            (Some((b, _, _)), Sense::Max) => value > *b,
            (Some((b, _, _)), Sense::Min) => value < *b,
        };
        if better {
            best = Some((value, eval, m));
        }
    }
    let (value, eval, m) = best.expect("grid is never empty");
    Ok(InnerScan {
        value,
        best: eval.clone(),
        pair: DualPair { currency: j, stopping: eval, m },
        per_point,
    })
}

/// Outer scan over the seller's cancellation plans: for each candidate
/// the inner maximization prices the induced American payoff; the
/// report keeps the outer minimum.
pub fn seller_dual_price(
    tree: &EventTree,
    cones: &ConeField,
    payoffs: &GamePayoffs,
    j: usize,
    n: u32,
    outer: &[MixedStoppingTime],
    primal: Option<&Rat>,
) -> Result<DualReport> {
    let mut entries = Vec::with_capacity(outer.len());
    for phi in outer {
        let z = payoff_q_cancel(tree, payoffs, phi);
        let scan = american_dual_price(tree, cones, &z, j, n, Sense::Max)?;
        entries.push(DualEntry { outer: phi.clone(), scan });
    }
    finish_report(Side::Seller, j, n, entries, primal)
}

/// Outer scan over the buyer's exercise plans; the inner grid runs over
/// cancellation plans and minimizes, and the report keeps the outer
/// maximum.
pub fn buyer_dual_price(
    tree: &EventTree,
    cones: &ConeField,
    payoffs: &GamePayoffs,
    j: usize,
    n: u32,
    outer: &[MixedStoppingTime],
    primal: Option<&Rat>,
) -> Result<DualReport> {
    let mut entries = Vec::with_capacity(outer.len());
    for psi in outer {
        let z = payoff_q_exercise(tree, payoffs, psi);
        let scan = american_dual_price(tree, cones, &z, j, n, Sense::Min)?;
        entries.push(DualEntry { outer: psi.clone(), scan });
    }
    finish_report(Side::Buyer, j, n, entries, primal)
}

fn finish_report(
    side: Side,
    j: usize,
    n: u32,
    entries: Vec<DualEntry>,
    primal: Option<&Rat>,
) -> Result<DualReport> {
    if entries.is_empty() {
        return Err(Error::Internal("dual report needs at least one outer point".into()));
    }
    let mut best = 0usize;
    for (i, e) in entries.iter().enumerate() {
        let better = match side {
            Side::Seller => e.scan.value < entries[best].scan.value,
            Side::Buyer => e.scan.value > entries[best].scan.value,
        };
        if better {
            best = i;
        }
    }
    let gap_to_primal = primal.map(|p| &entries[best].scan.value - p);
    Ok(DualReport { side, currency: j, grid_n: n, entries, best, gap_to_primal })
}

/// Exact re-check of a dual pair: feasibility of `m` for its stopping
/// time and the bound its objective value places on the primal price
/// (at most the ask for seller certificates, at least the bid for buyer
/// certificates).
pub fn certify(
    tree: &EventTree,
    cones: &ConeField,
    z: &AdaptedProcess,
    pair: &DualPair,
    side: Side,
    price: &Rat,
) -> bool {
    if feasibility_violation(tree, cones, pair).is_some() {
        return false;
    }
    let value = pair_value(tree, z, pair);
    match side {
        Side::Seller => value <= *price,
        Side::Buyer => value >= *price,
    }
}

/// The objective value of a pair against a payoff process.
pub fn pair_value(tree: &EventTree, z: &AdaptedProcess, pair: &DualPair) -> Rat {
    let mut acc = Rat::zero();
    for ix in tree.indices() {
        acc += pair.stopping.at(ix) * dot(z.at(ix), &pair.m[ix.0]);
    }
    acc
}

/// First violated feasibility condition of a dual pair, if any.
pub fn feasibility_violation(tree: &EventTree, cones: &ConeField, pair: &DualPair) -> Option<String> {
    let d = tree.dim();
    if pair.m.len() != tree.len() || pair.m.iter().any(|v| v.len() != d) {
        return Some("price system has the wrong shape".into());
    }
    let root_j = &pair.m[tree.root().0][pair.currency];
    if !root_j.is_one() {
        return Some(format!("normalization broken: root coordinate is {}", fmt_rat(root_j)));
    }
    // weighted tails, bottom-up
    let mut tails = vec![zeros(d); tree.len()];
    for t in (0..=tree.horizon()).rev() {
        for &ix in tree.atoms(t).expect("within horizon") {
            let mut acc = zeros(d);
            for c in &tree.node(ix).children {
                let contrib = crate::rat::add_scaled(&tails[c.0], pair.stopping.at(*c), &pair.m[c.0]);
                acc = crate::rat::add(&acc, &contrib);
            }
            tails[ix.0] = acc;
        }
    }
    for ix in tree.indices() {
        let q = cones.deferred(ix);
        for g in q.rays() {
            if dot(g, &pair.m[ix.0]).is_negative() {
                return Some(format!("price vector leaves the polar cone at {:?}", tree.id(ix)));
            }
            if dot(g, &tails[ix.0]).is_negative() {
                return Some(format!("weighted tail leaves the polar cone at {:?}", tree.id(ix)));
            }
        }
        let node = tree.node(ix);
        if !node.children.is_empty() {
            let sum: Rat = node.children.iter().map(|c| pair.m[c.0][pair.currency].clone()).sum();
            if sum != pair.m[ix.0][pair.currency] {
                return Some(format!("normalized coordinate not additive at {:?}", tree.id(ix)));
            }
        }
    }
    None
}
