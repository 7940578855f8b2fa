//! Market structure on an event tree: exchange rates, immediate and
//! deferred solvency cones, polars, no-arbitrage certification and
//! liquidation strategies.

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::polyhedra::lp::{feasible_l1min, Constraint, Rel};
use crate::polyhedra::Polyhedron;
use crate::rat::{dot, is_zero_vec, sub, unit, zeros, Rat};
use crate::tree::{AdaptedProcess, EventTree, NodeIx, PredictableProcess};

/// One `d x d` matrix of exchange rates per node: `pi[j][k]` units of
/// asset `j` buy one unit of asset `k`.
#[derive(Debug, Clone)]
pub struct ExchangeRates {
    matrices: Vec<Vec<Vec<Rat>>>,
}

impl ExchangeRates {
    pub fn new(tree: &EventTree, matrices: Vec<Vec<Vec<Rat>>>) -> Result<Self> {
        if matrices.len() != tree.len() {
            return Err(Error::Rates(format!(
                "{} rate matrices for {} nodes",
                matrices.len(),
                tree.len()
            )));
        }
        let d = tree.dim();
        for (i, m) in matrices.iter().enumerate() {
            let id = tree.id(NodeIx(i));
            if m.len() != d || m.iter().any(|row| row.len() != d) {
                return Err(Error::Rates(format!("rate matrix at {id:?} is not {d}x{d}")));
            }
            for (j, row) in m.iter().enumerate() {
                for (k, x) in row.iter().enumerate() {
                    if !x.is_positive() {
                        return Err(Error::Rates(format!("pi[{j}][{k}] at {id:?} must be positive")));
                    }
                    if j == k && !x.is_one() {
                        return Err(Error::Rates(format!("pi[{j}][{j}] at {id:?} must be 1")));
                    }
                }
            }
        }
        Ok(ExchangeRates { matrices })
    }

    pub fn at(&self, ix: NodeIx) -> &Vec<Vec<Rat>> {
        &self.matrices[ix.0]
    }
}

/// The immediate solvency cone for one rate matrix: generated by the
/// canonical basis vectors and the exchange vectors `pi[j][k] e^j - e^k`.
pub fn solvency_cone(d: usize, pi: &[Vec<Rat>]) -> Polyhedron {
    let mut rays: Vec<Vec<Rat>> = (0..d).map(|j| unit(d, j)).collect();
    for j in 0..d {
        for k in 0..d {
            if j != k {
                let mut g = zeros(d);
                g[j] = pi[j][k].clone();
                g[k] = -Rat::one();
                rays.push(g);
            }
        }
    }
    Polyhedron::cone_from_rays(d, rays)
}

/// Immediate (`K`) and deferred (`Q`) solvency cones at every node.
#[derive(Debug, Clone)]
pub struct ConeField {
    immediate: Vec<Polyhedron>,
    deferred: Vec<Polyhedron>,
}

impl ConeField {
    pub fn immediate(&self, ix: NodeIx) -> &Polyhedron {
        &self.immediate[ix.0]
    }

    pub fn deferred(&self, ix: NodeIx) -> &Polyhedron {
        &self.deferred[ix.0]
    }
}

/// Backward recursion for deferred solvency: at the horizon `Q = K`;
/// earlier, a portfolio is deferred-solvent if it lies in every child's
/// deferred cone (measurability) after adding an immediate trade:
/// `Q_t = (intersection of children's Q) + K_t`.
pub fn deferred_cones(tree: &EventTree, rates: &ExchangeRates) -> ConeField {
    let d = tree.dim();
    let immediate: Vec<Polyhedron> = tree.indices().map(|ix| solvency_cone(d, rates.at(ix))).collect();
    let mut deferred: Vec<Option<Polyhedron>> = vec![None; tree.len()];
    for t in (0..=tree.horizon()).rev() {
        for &ix in tree.atoms(t).expect("time within horizon") {
            let node = tree.node(ix);
            let q = if node.children.is_empty() {
                immediate[ix.0].clone()
            } else {
                let mut inter = deferred[node.children[0].0].clone().unwrap();
                for c in &node.children[1..] {
                    inter = inter.intersect(deferred[c.0].as_ref().unwrap());
                }
                inter.minkowski_sum(&immediate[ix.0])
            };
            deferred[ix.0] = Some(q);
        }
    }
    ConeField {
        immediate,
        deferred: deferred.into_iter().map(Option::unwrap).collect(),
    }
}

/// Polar cone `{y : y·x >= 0 for all x in C}`. Rejects non-cones.
pub fn polar(cone: &Polyhedron) -> Result<Polyhedron> {
    cone.polar_cone()
}

/// Unnormalized consistent price system: one vector per node standing
/// for the node probability times the price vector.
#[derive(Debug, Clone)]
pub struct Certificate {
    pub m: Vec<Vec<Rat>>,
}

#[derive(Debug, Clone)]
pub struct Witness {
    /// Self-financing strategy with zero initial endowment.
    pub strategy: PredictableProcess,
    /// Nonnegative, somewhere-positive terminal surplus per leaf.
    pub surplus: AdaptedProcess,
}

#[derive(Debug, Clone)]
pub enum ArbitrageReport {
    NoArbitrage(Certificate),
    Arbitrage(Witness),
}

/// Decides arbitrage by an exact feasibility LP over unnormalized
/// consistent price systems; when that system is infeasible the dual
/// side is exhibited directly as a self-financing strategy with
/// normalized positive surplus. Exactly one of the two LPs is feasible.
pub fn check_no_arbitrage(tree: &EventTree, cones: &ConeField) -> Result<ArbitrageReport> {
    if let Some(m) = cps_certificate(tree, cones)? {
        let cert = Certificate { m };
        validate_certificate(tree, cones, &cert)?;
        return Ok(ArbitrageReport::NoArbitrage(cert));
    }
    match arbitrage_witness(tree, cones)? {
        Some(w) => {
            validate_witness(tree, cones, &w)?;
            Ok(ArbitrageReport::Arbitrage(w))
        }
        None => Err(Error::Internal(
            "neither a price system nor an arbitrage strategy is feasible".into(),
        )),
    }
}

fn cps_certificate(tree: &EventTree, cones: &ConeField) -> Result<Option<Vec<Vec<Rat>>>> {
    let d = tree.dim();
    let n = tree.len();
    let var = |ix: NodeIx, j: usize| ix.0 * d + j;
    let mut cs: Vec<Constraint> = Vec::new();

    for ix in tree.indices() {
        // m(node) in K*(node): every generator of K must price nonnegatively
        for g in cones.immediate(ix).rays() {
            let mut row = zeros(n * d);
            for j in 0..d {
                row[var(ix, j)] = g[j].clone();
            }
            cs.push(Constraint::new(row, Rel::Ge, Rat::zero()));
        }
        let node = tree.node(ix);
        if node.children.is_empty() {
            // full-support surrogate: component sum at least 1 at every leaf
            let mut row = zeros(n * d);
            for j in 0..d {
                row[var(ix, j)] = Rat::one();
            }
            cs.push(Constraint::new(row, Rel::Ge, Rat::one()));
        } else {
            // martingale identity m(node) = sum of children
            for j in 0..d {
                let mut row = zeros(n * d);
                row[var(ix, j)] = Rat::one();
                for c in &node.children {
                    row[var(*c, j)] = -Rat::one();
                }
                cs.push(Constraint::new(row, Rel::Eq, Rat::zero()));
            }
        }
    }

    Ok(feasible_l1min(n * d, &cs)?.map(|x| {
        tree.indices().map(|ix| (0..d).map(|j| x[var(ix, j)].clone()).collect()).collect()
    }))
}

fn arbitrage_witness(tree: &EventTree, cones: &ConeField) -> Result<Option<Witness>> {
    let d = tree.dim();
    let n = tree.len();
    // non-leaf nodes carry the strategy value held out of them; leaves
    // carry the surplus portfolio
    let var = |ix: NodeIx, j: usize| ix.0 * d + j;
    let mut cs: Vec<Constraint> = Vec::new();

    let cone_rows = |cs: &mut Vec<Constraint>, ix: NodeIx, terms: &[(NodeIx, Rat)]| {
        for h in cones.immediate(ix).halfspaces() {
            let mut row = zeros(n * d);
            for (node, sign) in terms {
                for j in 0..d {
                    row[var(*node, j)] = sign * &h.normal[j];
                }
            }
            cs.push(Constraint::new(row, Rel::Ge, Rat::zero()));
        }
    };

    for ix in tree.indices() {
        let node = tree.node(ix);
        match node.parent {
            // root: 0 - y_1 must be an affordable trade
            None => cone_rows(&mut cs, ix, &[(ix, -Rat::one())]),
            Some(p) => cone_rows(&mut cs, ix, &[(p, Rat::one()), (ix, -Rat::one())]),
        }
        if node.children.is_empty() {
            // surplus is nonnegative, normalized to total 1
            for j in 0..d {
                let mut row = zeros(n * d);
                row[var(ix, j)] = Rat::one();
                cs.push(Constraint::new(row, Rel::Ge, Rat::zero()));
            }
        }
    }
    let mut norm = zeros(n * d);
    for &leaf in tree.leaves() {
        for j in 0..d {
            norm[var(leaf, j)] = Rat::one();
        }
    }
    cs.push(Constraint::new(norm, Rel::Eq, Rat::one()));

    let Some(x) = feasible_l1min(n * d, &cs)? else {
        return Ok(None);
    };
    let mut strategy = PredictableProcess::zero(tree);
    let mut surplus = vec![zeros(d); n];
    for ix in tree.indices() {
        let vals: Vec<Rat> = (0..d).map(|j| x[var(ix, j)].clone()).collect();
        if tree.is_leaf(ix) {
            surplus[ix.0] = vals;
        } else {
            strategy.set_after(ix, vals);
        }
    }
    Ok(Some(Witness { strategy, surplus: AdaptedProcess::new(tree, surplus)? }))
}

/// Exact definition-level re-check of a certificate.
pub fn validate_certificate(tree: &EventTree, cones: &ConeField, cert: &Certificate) -> Result<()> {
    if cert.m.len() != tree.len() {
        return Err(Error::Internal("certificate size mismatch".into()));
    }
    for ix in tree.indices() {
        let m = &cert.m[ix.0];
        for g in cones.immediate(ix).rays() {
            if dot(g, m).is_negative() {
                return Err(Error::Internal(format!(
                    "certificate leaves the polar cone at {:?}",
                    tree.id(ix)
                )));
            }
        }
        let node = tree.node(ix);
        if node.children.is_empty() {
            let s: Rat = m.iter().cloned().sum();
            if s < Rat::one() {
                return Err(Error::Internal(format!(
                    "certificate not normalized at leaf {:?}",
                    tree.id(ix)
                )));
            }
        } else {
            let mut sum = zeros(tree.dim());
            for c in &node.children {
                sum = crate::rat::add(&sum, &cert.m[c.0]);
            }
            if &sum != m {
                return Err(Error::Internal(format!(
                    "certificate not a martingale at {:?}",
                    tree.id(ix)
                )));
            }
        }
    }
    Ok(())
}

/// Exact definition-level re-check of an arbitrage witness.
pub fn validate_witness(tree: &EventTree, cones: &ConeField, w: &Witness) -> Result<()> {
    if !is_zero_vec(&w.strategy.initial) {
        return Err(Error::Internal("witness strategy must start from zero".into()));
    }
    let mut some_positive = false;
    for ix in tree.indices() {
        let entry = w.strategy.at_entry(tree, ix).to_vec();
        let delta = if tree.is_leaf(ix) {
            let x = w.surplus.at(ix);
            if x.iter().any(Signed::is_negative) {
                return Err(Error::Internal("witness surplus must be nonnegative".into()));
            }
            some_positive |= x.iter().any(Signed::is_positive);
            sub(&entry, x)
        } else {
            sub(&entry, w.strategy.after(ix))
        };
        if !cones.immediate(ix).contains(&delta) {
            return Err(Error::Internal(format!(
                "witness not self-financing at {:?}",
                tree.id(ix)
            )));
        }
    }
    if !some_positive {
        return Err(Error::Internal("witness surplus is identically zero".into()));
    }
    Ok(())
}

/// Finds a liquidation sequence realizing deferred solvency of `x` held
/// at `node`: portfolios `y_{t+1}, …, y_{T+1} = 0` on the subtree with
/// `x - y_{t+1}` affordable now and every later rebalancing affordable.
/// Deterministic minimal-L1 basic solution; the result is re-checked
/// exactly before returning. Off-subtree entries are zero and the
/// process `initial` slot records `x`.
pub fn liquidation_strategy(
    tree: &EventTree,
    cones: &ConeField,
    node: NodeIx,
    x: &[Rat],
) -> Result<PredictableProcess> {
    if let Some(h) = cones.deferred(node).violated_halfspace(x) {
        return Err(Error::NotDeferredSolvent {
            node: tree.id(node).to_string(),
            halfspace: h.to_string(),
        });
    }
    let d = tree.dim();
    let sub_nodes = tree.descendants(node);
    let mut col: std::collections::BTreeMap<NodeIx, usize> = std::collections::BTreeMap::new();
    for &ix in &sub_nodes {
        if !tree.is_leaf(ix) {
            let next = col.len();
            col.insert(ix, next);
        }
    }
    let nv = col.len() * d;
    let mut cs: Vec<Constraint> = Vec::new();
    for &ix in &sub_nodes {
        // value entering this node minus value leaving must be affordable
        for h in cones.immediate(ix).halfspaces() {
            let mut row = zeros(nv);
            let mut rhs = Rat::zero();
            if ix == node {
                rhs = -dot(&h.normal, x); // constant part moves to the rhs
            } else {
                let p = tree.node(ix).parent.expect("descendant below the start node");
                if let Some(&cp) = col.get(&p) {
                    for j in 0..d {
                        row[cp * d + j] = h.normal[j].clone();
                    }
                }
            }
            if let Some(&ci) = col.get(&ix) {
                for j in 0..d {
                    row[ci * d + j] -= &h.normal[j];
                }
            }
            cs.push(Constraint::new(row, Rel::Ge, rhs));
        }
    }
    let sol = match nv {
        0 => Some(Vec::new()), // starting at a leaf: no free values, constraints degenerate
        _ => feasible_l1min(nv, &cs)?,
    };
    let Some(sol) = sol else {
        return Err(Error::LiquidationInfeasible { node: tree.id(node).to_string() });
    };
    // starting at a leaf the only condition is immediate solvency of x
    if nv == 0 && !cones.immediate(node).contains(x) {
        return Err(Error::LiquidationInfeasible { node: tree.id(node).to_string() });
    }

    let mut out = PredictableProcess::zero(tree);
    out.initial = x.to_vec();
    for (&ix, &c) in &col {
        out.set_after(ix, (0..d).map(|j| sol[c * d + j].clone()).collect());
    }
    validate_liquidation(tree, cones, node, x, &out)?;
    Ok(out)
}

/// Re-checks the defining cone memberships of a liquidation strategy.
pub fn validate_liquidation(
    tree: &EventTree,
    cones: &ConeField,
    node: NodeIx,
    x: &[Rat],
    y: &PredictableProcess,
) -> Result<()> {
    for ix in tree.descendants(node) {
        let incoming = if ix == node { x.to_vec() } else { y.at_entry(tree, ix).to_vec() };
        let delta = sub(&incoming, y.after(ix));
        if let Some(h) = cones.immediate(ix).violated_halfspace(&delta) {
            return Err(Error::Internal(format!(
                "liquidation violates {} at {:?}",
                h,
                tree.id(ix)
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyhedra::hs;
    use crate::rat::{rat, rat_int};
    use crate::test_fixtures::{fig1, frictionless_pi, spread_pi};

    fn v(xs: &[i64]) -> Vec<Rat> {
        xs.iter().map(|&x| rat_int(x)).collect()
    }

    #[test]
    fn solvency_cone_examples() {
        // bid-ask node: pi12 = 1/8, pi21 = 16
        let k = solvency_cone(2, &spread_pi(rat(1, 8), rat_int(16)));
        let expect = Polyhedron::from_halfspaces(
            2,
            vec![hs(v(&[8, 1]), rat_int(0)), hs(v(&[16, 1]), rat_int(0))],
        );
        assert!(k.eq_set(&expect));

        // frictionless rate 10: antiparallel generators collapse to a halfplane
        let k = solvency_cone(2, &frictionless_pi(rat_int(10)));
        assert!(k.eq_set(&Polyhedron::from_halfspaces(2, vec![hs(v(&[10, 1]), rat_int(0))])));

        // symmetric unit rates
        let k = solvency_cone(2, &spread_pi(rat_int(1), rat_int(1)));
        assert!(k.eq_set(&Polyhedron::from_halfspaces(2, vec![hs(v(&[1, 1]), rat_int(0))])));
    }

    #[test]
    fn deferred_cones_on_fig1() {
        let m = fig1();
        let u = m.tree.ix_of("u").unwrap();
        let qu = m.cones.deferred(u);
        let expect = Polyhedron::from_halfspaces(
            2,
            vec![hs(v(&[14, 1]), rat_int(0)), hs(v(&[10, 1]), rat_int(0))],
        );
        assert!(qu.eq_set(&expect));

        let q0 = m.cones.deferred(m.tree.root());
        assert!(q0.eq_set(&Polyhedron::from_halfspaces(2, vec![hs(v(&[10, 1]), rat_int(0))])));

        // K subset Q everywhere, equality at leaves
        for ix in m.tree.indices() {
            assert!(m.cones.immediate(ix).subset(m.cones.deferred(ix)));
            if m.tree.is_leaf(ix) {
                assert!(m.cones.deferred(ix).eq_set(m.cones.immediate(ix)));
            }
        }

        // K1(u) is strictly inside Q1(u)
        let k1u = m.cones.immediate(u);
        assert!(k1u.subset(qu));
        assert!(!qu.subset(k1u));
    }

    #[test]
    fn polar_of_market_cones() {
        let m = fig1();
        let u = m.tree.ix_of("u").unwrap();
        let polar_k = polar(m.cones.immediate(u)).unwrap();
        let expect = Polyhedron::cone_from_rays(2, vec![v(&[8, 1]), v(&[16, 1])]);
        assert!(polar_k.eq_set(&expect));
    }

    #[test]
    fn fig1_admits_no_arbitrage() {
        let m = fig1();
        match check_no_arbitrage(&m.tree, &m.cones).unwrap() {
            ArbitrageReport::NoArbitrage(cert) => {
                validate_certificate(&m.tree, &m.cones, &cert).unwrap();
            }
            ArbitrageReport::Arbitrage(_) => panic!("fig1 must be arbitrage-free"),
        }
        // the hand-built price system with conditional weights 2/3, 1/2, 1/3
        let tree = &m.tree;
        let ix = |id: &str| tree.ix_of(id).unwrap();
        let mut cert = vec![crate::rat::zeros(2); tree.len()];
        let q = |p: Rat, s: i64| vec![&p * rat_int(s), p];
        cert[ix("uu").0] = q(rat(1, 3), 14);
        cert[ix("ud").0] = q(rat(1, 3), 10);
        cert[ix("du").0] = q(rat(1, 9), 10);
        cert[ix("dd").0] = q(rat(2, 9), 4);
        cert[ix("u").0] = crate::rat::add(&cert[ix("uu").0], &cert[ix("ud").0]);
        cert[ix("d").0] = crate::rat::add(&cert[ix("du").0], &cert[ix("dd").0]);
        cert[ix("root").0] = crate::rat::add(&cert[ix("u").0], &cert[ix("d").0]);
        validate_certificate(tree, &m.cones, &Certificate { m: cert }).unwrap();
    }

    #[test]
    fn frictionless_mismatch_is_arbitrage() {
        // root rate 10, both leaf rates strictly above
        let m = crate::test_fixtures::one_step_frictionless(&[rat_int(10), rat_int(11), rat_int(12)]);
        match check_no_arbitrage(&m.tree, &m.cones).unwrap() {
            ArbitrageReport::Arbitrage(w) => validate_witness(&m.tree, &m.cones, &w).unwrap(),
            ArbitrageReport::NoArbitrage(_) => panic!("expected arbitrage"),
        }
    }

    #[test]
    fn wide_spread_covers_leaf_rates() {
        // root bid-ask [8,16] contains the leaf rates 11 and 12
        let m = crate::test_fixtures::one_step_spread(
            (rat(1, 8), rat_int(16)),
            &[rat_int(11), rat_int(12)],
        );
        assert!(matches!(
            check_no_arbitrage(&m.tree, &m.cones).unwrap(),
            ArbitrageReport::NoArbitrage(_)
        ));
    }

    #[test]
    fn liquidation_cases() {
        let m = fig1();
        let u = m.tree.ix_of("u").unwrap();

        // immediately solvent portfolio liquidates without trading
        let y = liquidation_strategy(&m.tree, &m.cones, u, &v(&[1, 0])).unwrap();
        for ix in m.tree.descendants(u) {
            assert!(is_zero_vec(y.after(ix)));
        }

        // deferred but not immediate solvency at u: hold (1,-10) one step
        let x = v(&[1, -10]);
        assert!(!m.cones.immediate(u).contains(&x));
        assert!(m.cones.deferred(u).contains(&x));
        let y = liquidation_strategy(&m.tree, &m.cones, u, &x).unwrap();
        validate_liquidation(&m.tree, &m.cones, u, &x, &y).unwrap();

        // strictly negative portfolio is rejected up front
        let err = liquidation_strategy(&m.tree, &m.cones, u, &v(&[0, -1]));
        assert!(matches!(err, Err(Error::NotDeferredSolvent { .. })));
    }
}
