//! Seller and buyer pricing: backward-induction set ladders, exact bid
//! and ask prices, extraction of compact hedges (a stopping plan plus a
//! backbone process), conversion to full non-anticipating superhedges
//! via liquidation strategies, and exact hedge verification.

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::market::{liquidation_strategy, ConeField};
use crate::polyhedra::lp::{feasible_l1min, solve, Constraint, LpOutcome, LpProblem, Rel, Sense};
use crate::polyhedra::{AxisMin, Polyhedron};
use crate::rat::{add, add_scaled, neg, scale, sub, zeros, Rat};
use crate::stopping::{payoff_g_with_stars, star, GamePayoffs, MixedStoppingTime, StarProcess};
use crate::tree::{EventTree, NodeIx, PredictableProcess};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Seller,
    Buyer,
}

impl Side {
    pub fn as_str(self) -> &'static str {
        match self {
            Side::Seller => "seller",
            Side::Buyer => "buyer",
        }
    }
}

/// The five per-node polyhedra of the backward induction. `y` and `x`
/// are the stop-covered translates of the payoff legs, `w` carries next
/// period's hedge sets back, `v` relaxes `w` by deferred solvency and
/// `z` is the set of endowments hedging from that node on.
#[derive(Debug, Clone)]
pub struct SetLadder {
    pub side: Side,
    pub y: Vec<Polyhedron>,
    pub x: Vec<Polyhedron>,
    pub w: Vec<Polyhedron>,
    pub v: Vec<Polyhedron>,
    pub z: Vec<Polyhedron>,
}

pub fn seller_ladder(tree: &EventTree, cones: &ConeField, payoffs: &GamePayoffs) -> Result<SetLadder> {
    build_ladder(tree, cones, payoffs, Side::Seller)
}

pub fn buyer_ladder(tree: &EventTree, cones: &ConeField, payoffs: &GamePayoffs) -> Result<SetLadder> {
    build_ladder(tree, cones, payoffs, Side::Buyer)
}

fn build_ladder(
    tree: &EventTree,
    cones: &ConeField,
    payoffs: &GamePayoffs,
    side: Side,
) -> Result<SetLadder> {
    let d = tree.dim();
    let n = tree.len();
    let mut y = vec![Polyhedron::empty(d); n];
    let mut x = vec![Polyhedron::empty(d); n];
    let mut w = vec![Polyhedron::empty(d); n];
    let mut v = vec![Polyhedron::empty(d); n];
    let mut z = vec![Polyhedron::empty(d); n];

    for ix in tree.indices() {
        let (ye, xe) = match side {
            Side::Seller => (payoffs.exercise.at(ix).to_vec(), payoffs.cancel.at(ix).to_vec()),
            Side::Buyer => (neg(payoffs.exercise.at(ix)), neg(payoffs.cancel.at(ix))),
        };
        y[ix.0] = cones.deferred(ix).translate(&ye);
        x[ix.0] = cones.deferred(ix).translate(&xe);
    }

    for t in (0..=tree.horizon()).rev() {
        for &ix in tree.atoms(t)? {
            let node = tree.node(ix);
            if node.children.is_empty() {
                w[ix.0] = Polyhedron::full_space(d);
                v[ix.0] = Polyhedron::full_space(d);
                z[ix.0] = y[ix.0].clone();
            } else {
                let mut inter = z[node.children[0].0].clone();
                for c in &node.children[1..] {
                    inter = inter.intersect(&z[c.0]);
                }
                w[ix.0] = inter;
                v[ix.0] = w[ix.0].minkowski_sum(cones.deferred(ix));
                z[ix.0] = match side {
                    Side::Seller => v[ix.0].hull_union(&x[ix.0]).intersect(&y[ix.0]),
                    Side::Buyer => v[ix.0].intersect(&x[ix.0]).hull_union(&y[ix.0]),
                };
            }
            if z[ix.0].is_empty() {
                return Err(Error::EmptyPricingSet { node: tree.id(ix).to_string() });
            }
        }
    }
    Ok(SetLadder { side, y, x, w, v, z })
}

impl SetLadder {
    pub fn hedge_set_at_root(&self, tree: &EventTree) -> &Polyhedron {
        &self.z[tree.root().0]
    }
}

/// Least endowment in asset `j` (zero-based) superhedging the seller.
pub fn ask_price(tree: &EventTree, ladder: &SetLadder, j: usize) -> Result<Rat> {
    debug_assert_eq!(ladder.side, Side::Seller);
    match ladder.hedge_set_at_root(tree).min_along_axis(j) {
        AxisMin::Value(v) => Ok(v),
        _ => Err(Error::UnboundedPrice { axis: j }),
    }
}

/// Greatest amount in asset `j` raisable against the buyer's position.
pub fn bid_price(tree: &EventTree, ladder: &SetLadder, j: usize) -> Result<Rat> {
    debug_assert_eq!(ladder.side, Side::Buyer);
    match ladder.hedge_set_at_root(tree).min_along_axis(j) {
        AxisMin::Value(v) => Ok(-v),
        _ => Err(Error::UnboundedPrice { axis: j }),
    }
}

/// Compact hedge: a stopping plan for the holder's own option right and
/// a predictable backbone `z` scaled by the remaining fraction. All
/// rebalancing residues stay within deferred solvency.
#[derive(Debug, Clone)]
pub struct LambdaHedge {
    pub side: Side,
    pub stopping: MixedStoppingTime,
    pub backbone: PredictableProcess,
}

impl LambdaHedge {
    /// The backbone divided by the remaining fraction, which is how the
    /// per-node support points are usually quoted; `None` once the
    /// option is fully stopped.
    pub fn unit_backbone(&self, tree: &EventTree, ix: NodeIx) -> Option<Vec<Rat>> {
        let s = star(tree, &self.stopping);
        let mass = s.at_entry(tree, ix);
        if mass.is_zero() {
            return None;
        }
        let z = self.backbone.at_entry(tree, ix);
        Some(z.iter().map(|c| c / &mass).collect())
    }

    /// Exact membership recheck of both defining conditions.
    pub fn validate(&self, tree: &EventTree, cones: &ConeField, payoffs: &GamePayoffs) -> Result<()> {
        let s = star(tree, &self.stopping);
        for ix in tree.indices() {
            let q = cones.deferred(ix);
            let z_in = self.backbone.at_entry(tree, ix).to_vec();
            let frac = self.stopping.at(ix);
            let mass = s.at_entry(tree, ix);
            let stop_residue = match self.side {
                Side::Seller => sub(&z_in, &scale(&mass, payoffs.exercise.at(ix))),
                Side::Buyer => {
                    let held = add_scaled(&z_in, frac, payoffs.exercise.at(ix));
                    add_scaled(&held, s.after(ix), payoffs.cancel.at(ix))
                }
            };
            if let Some(h) = q.violated_halfspace(&stop_residue) {
                return Err(Error::Internal(format!(
                    "{} hedge stop residue violates {} at {:?}",
                    self.side.as_str(),
                    h,
                    tree.id(ix)
                )));
            }
            if !tree.is_leaf(ix) {
                let carry_residue = match self.side {
                    Side::Seller => sub(
                        &sub(&z_in, &scale(frac, payoffs.cancel.at(ix))),
                        self.backbone.after(ix),
                    ),
                    Side::Buyer => sub(
                        &add_scaled(&z_in, frac, payoffs.exercise.at(ix)),
                        self.backbone.after(ix),
                    ),
                };
                if let Some(h) = q.violated_halfspace(&carry_residue) {
                    return Err(Error::Internal(format!(
                        "{} hedge carry residue violates {} at {:?}",
                        self.side.as_str(),
                        h,
                        tree.id(ix)
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Walks the tree forward, at each node splitting the incoming backbone
/// into a stopped part and a carried part by the least stopping
/// fraction admitting the split, then projecting the carried support
/// point into next period's hedge sets along deferred solvency. Minimal
/// stopping and minimal-L1 projection make the result deterministic;
/// validity is re-checked exactly before returning.
pub fn extract_lambda_hedge(
    tree: &EventTree,
    cones: &ConeField,
    payoffs: &GamePayoffs,
    ladder: &SetLadder,
    initial: &[Rat],
) -> Result<LambdaHedge> {
    let z0 = ladder.hedge_set_at_root(tree);
    if let Some(h) = z0.violated_halfspace(initial) {
        return Err(Error::InitialOutsideZ0 { halfspace: h.to_string() });
    }

    let mut stop_frac = vec![Rat::zero(); tree.len()];
    let mut backbone = PredictableProcess::zero(tree);
    backbone.initial = initial.to_vec();
    // remaining mass entering each node and the carried value out of it
    let mut mass_after = vec![Rat::zero(); tree.len()];

    for ix in tree.indices() {
        let (z_in, mass): (Vec<Rat>, Rat) = match tree.node(ix).parent {
            None => (initial.to_vec(), Rat::one()),
            Some(p) => (backbone.after(p).to_vec(), mass_after[p.0].clone()),
        };
        if mass.is_zero() {
            debug_assert!(crate::rat::is_zero_vec(&z_in));
            continue; // fully stopped: zero frac, zero backbone already in place
        }
        if tree.is_leaf(ix) {
            stop_frac[ix.0] = mass;
            continue;
        }
        let unit: Vec<Rat> = z_in.iter().map(|c| c / &mass).collect();
        let (carry_set, stop_set) = match ladder.side {
            Side::Seller => (ladder.v[ix.0].clone(), &ladder.x[ix.0]),
            Side::Buyer => (ladder.v[ix.0].intersect(&ladder.x[ix.0]), &ladder.y[ix.0]),
        };
        let (lambda, carried) = min_stop_fraction(&carry_set, stop_set, &unit)?;
        stop_frac[ix.0] = &mass * &lambda;
        let mass_out = &mass * (Rat::one() - &lambda);
        mass_after[ix.0] = mass_out.clone();
        if mass_out.is_zero() {
            continue; // backbone stays zero below
        }
        let support = if lambda.is_zero() {
            unit
        } else {
            let rest = Rat::one() - &lambda;
            carried.iter().map(|c| c / &rest).collect()
        };
        debug_assert!(carry_set.contains(&support));
        let w = project_into(&ladder.w[ix.0], cones.deferred(ix), &support)
            .ok_or_else(|| Error::Internal(format!("carry projection infeasible at {:?}", tree.id(ix))))?;
        backbone.set_after(ix, scale(&mass_out, &w));
    }

    let hedge = LambdaHedge {
        side: ladder.side,
        stopping: MixedStoppingTime::new(tree, stop_frac)?,
        backbone,
    };
    hedge.validate(tree, cones, payoffs)?;
    Ok(hedge)
}

/// Least `lambda` in `[0,1]` with `point = carried + stopped`,
/// `carried` in `(1-lambda)*carry_set` and `stopped` in
/// `lambda*stop_set` (scaling understood in the closed, homogenized
/// sense). Returns `lambda` and `carried`.
fn min_stop_fraction(
    carry_set: &Polyhedron,
    stop_set: &Polyhedron,
    point: &[Rat],
) -> Result<(Rat, Vec<Rat>)> {
    let d = point.len();
    // variables: lambda, carried[0..d]
    let mut cs: Vec<Constraint> = Vec::new();
    let mut row0 = zeros(d + 1);
    row0[0] = Rat::one();
    cs.push(Constraint::new(row0.clone(), Rel::Ge, Rat::zero()));
    cs.push(Constraint::new(row0, Rel::Le, Rat::one()));
    for h in carry_set.halfspaces() {
        let mut row = zeros(d + 1);
        row[0] = h.offset.clone();
        for j in 0..d {
            row[1 + j] = h.normal[j].clone();
        }
        cs.push(Constraint::new(row, Rel::Ge, h.offset.clone()));
    }
    for h in stop_set.halfspaces() {
        let mut row = zeros(d + 1);
        row[0] = -h.offset.clone();
        for j in 0..d {
            row[1 + j] = -h.normal[j].clone();
        }
        cs.push(Constraint::new(row, Rel::Ge, -crate::rat::dot(&h.normal, point)));
    }
    let mut objective = zeros(d + 1);
    objective[0] = Rat::one();
    let lp = LpProblem { num_vars: d + 1, sense: Sense::Min, objective, constraints: cs };
    match solve(&lp)? {
        LpOutcome::Optimal { point: sol, .. } => {
            Ok((sol[0].clone(), sol[1..].to_vec()))
        }
        _ => Err(Error::Internal("stop-fraction split must be feasible inside the hedge set".into())),
    }
}

/// Nearest (in L1) point of `target` reachable from `from` by giving up
/// a deferred-solvent residue: minimizes `|w - from|_1` over `w` in
/// `target` with `from - w` in `cone`.
fn project_into(target: &Polyhedron, cone: &Polyhedron, from: &[Rat]) -> Option<Vec<Rat>> {
    let d = from.len();
    let mut cs: Vec<Constraint> = Vec::new();
    for h in target.halfspaces() {
        cs.push(Constraint::new(
            h.normal.clone(),
            Rel::Ge,
            &h.offset - crate::rat::dot(&h.normal, from),
        ));
    }
    for h in cone.halfspaces() {
        cs.push(Constraint::new(neg(&h.normal), Rel::Ge, Rat::zero()));
    }
    let delta = feasible_l1min(d, &cs).ok()??;
    Some(add(from, &delta))
}

/// A full superhedge: the compact hedge plus, per node, liquidation
/// strategies for the carry residue and the stop residue. Evaluating at
/// any opponent stopping time yields a trading strategy whose
/// rebalancing stays inside the immediate solvency cones.
#[derive(Debug, Clone)]
pub struct HedgeRecipe {
    pub lambda: LambdaHedge,
    pub carry_liq: Vec<PredictableProcess>,
    pub stop_liq: Vec<PredictableProcess>,
}

pub fn lambda_to_full_hedge(
    tree: &EventTree,
    cones: &ConeField,
    payoffs: &GamePayoffs,
    hedge: &LambdaHedge,
) -> Result<HedgeRecipe> {
    let s = star(tree, &hedge.stopping);
    let mut carry_liq = Vec::with_capacity(tree.len());
    let mut stop_liq = Vec::with_capacity(tree.len());
    for ix in tree.indices() {
        let z_in = hedge.backbone.at_entry(tree, ix).to_vec();
        let frac = hedge.stopping.at(ix);
        let mass = s.at_entry(tree, ix);
        let (carry_res, stop_res) = match hedge.side {
            Side::Seller => (
                sub(&sub(&z_in, &scale(frac, payoffs.cancel.at(ix))), hedge.backbone.after(ix)),
                sub(&z_in, &scale(&mass, payoffs.exercise.at(ix))),
            ),
            Side::Buyer => {
                let held = add_scaled(&z_in, frac, payoffs.exercise.at(ix));
                (
                    sub(&held, hedge.backbone.after(ix)),
                    add_scaled(&held, s.after(ix), payoffs.cancel.at(ix)),
                )
            }
        };
        carry_liq.push(if tree.is_leaf(ix) {
            PredictableProcess::zero(tree)
        } else {
            liquidation_strategy(tree, cones, ix, &carry_res)?
        });
        stop_liq.push(liquidation_strategy(tree, cones, ix, &stop_res)?);
    }
    Ok(HedgeRecipe { lambda: hedge.clone(), carry_liq, stop_liq })
}

/// The trading strategy the recipe prescribes against one opponent
/// stopping time. Non-anticipation is structural: the position held
/// into date `t` only reads the opponent's fractions before `t`.
pub fn evaluate_hedge(
    tree: &EventTree,
    recipe: &HedgeRecipe,
    opponent: &MixedStoppingTime,
) -> PredictableProcess {
    let opp_star = star(tree, opponent);
    let mut u = PredictableProcess::zero(tree);
    u.initial = recipe.lambda.backbone.initial.clone();
    for ix in tree.indices() {
        let mut val = scale(opp_star.after(ix), recipe.lambda.backbone.after(ix));
        for &anc in &tree.path(ix) {
            val = add_scaled(&val, opp_star.after(anc), recipe.carry_liq[anc.0].after(ix));
            val = add_scaled(&val, opponent.at(anc), recipe.stop_liq[anc.0].after(ix));
        }
        u.set_after(ix, val);
    }
    u
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub opponent: usize,
    pub node: String,
    pub halfspace: String,
}

#[derive(Debug, Clone)]
pub struct VerifyReport {
    pub opponents: usize,
    pub violations: Vec<Violation>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Exact rebalancing check of a recipe against a list of opponopponent
/// stopping times: at every node the position change net of the
/// delivered payoff must be immediately solvent.
pub fn verify_hedge(
    tree: &EventTree,
    cones: &ConeField,
    payoffs: &GamePayoffs,
    recipe: &HedgeRecipe,
    opponents: &[MixedStoppingTime],
) -> VerifyReport {
    let own_star = star(tree, &recipe.lambda.stopping);
    let mut violations = Vec::new();
    for (k, opp) in opponents.iter().enumerate() {
        let u = evaluate_hedge(tree, recipe, opp);
        let opp_star = star(tree, opp);
        for ix in tree.indices() {
            let g = match recipe.lambda.side {
                Side::Seller => payoff_g_with_stars(
                    tree, payoffs, &recipe.lambda.stopping, &own_star, opp, &opp_star, ix,
                ),
                Side::Buyer => payoff_g_with_stars(
                    tree, payoffs, opp, &opp_star, &recipe.lambda.stopping, &own_star, ix,
                ),
            };
            let entry = u.at_entry(tree, ix).to_vec();
            let delta = match recipe.lambda.side {
                Side::Seller => sub(&sub(&entry, &g), u.after(ix)),
                Side::Buyer => sub(&add(&entry, &g), u.after(ix)),
            };
            if let Some(h) = cones.immediate(ix).violated_halfspace(&delta) {
                violations.push(Violation {
                    opponent: k,
                    node: tree.id(ix).to_string(),
                    halfspace: h.to_string(),
                });
            }
        }
    }
    VerifyReport { opponents: opponents.len(), violations }
}

/// Spot check of non-anticipation: wherever two opponents agree up to
/// a date along a path, the evaluated strategies agree one step past
/// it. Returns the node ids where this fails.
pub fn non_anticipation_violations(
    tree: &EventTree,
    recipe: &HedgeRecipe,
    a: &MixedStoppingTime,
    b: &MixedStoppingTime,
) -> Vec<String> {
    let ua = evaluate_hedge(tree, recipe, a);
    let ub = evaluate_hedge(tree, recipe, b);
    let mut out = Vec::new();
    for ix in tree.indices() {
        let agree = tree.path(ix).iter().all(|&anc| a.at(anc) == b.at(anc));
        if agree && ua.after(ix) != ub.after(ix) {
            out.push(tree.id(ix).to_string());
        }
    }
    out
}
