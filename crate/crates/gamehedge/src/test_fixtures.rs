//! Shared model builders for unit tests.

use num_traits::One;

use crate::market::{deferred_cones, ConeField, ExchangeRates};
use crate::rat::{rat, rat_int, zeros, Rat};
use crate::stopping::GamePayoffs;
use crate::tree::{AdaptedProcess, EventTree, NodeSpec};

pub struct TestModel {
    pub tree: EventTree,
    pub rates: ExchangeRates,
    pub cones: ConeField,
    pub payoffs: GamePayoffs,
}

pub fn frictionless_pi(rate: Rat) -> Vec<Vec<Rat>> {
    vec![vec![Rat::one(), Rat::one() / &rate], vec![rate, Rat::one()]]
}

pub fn spread_pi(pi12: Rat, pi21: Rat) -> Vec<Vec<Rat>> {
    vec![vec![Rat::one(), pi12], vec![pi21, Rat::one()]]
}

fn spec(id: &str, time: usize, parent: Option<&str>, p: Rat) -> NodeSpec {
    NodeSpec { id: id.into(), time, parent: parent.map(|s| s.into()), branch_prob: p }
}

/// The binary two-step two-currency game option model: transaction
/// costs only at node `u`, recombinant rates 14/10/4 at the horizon,
/// exercise leg (0,0),(0,3),(0,0),(0,9),(0,4),(0,4),(0,0) and cancel
/// leg (0,5),(0,6),(0,3) with no terminal penalty.
pub fn fig1() -> TestModel {
    let half = rat(1, 2);
    let tree = EventTree::build(
        2,
        2,
        vec![
            spec("root", 0, None, rat_int(1)),
            spec("u", 1, Some("root"), half.clone()),
            spec("d", 1, Some("root"), half.clone()),
            spec("uu", 2, Some("u"), half.clone()),
            spec("ud", 2, Some("u"), half.clone()),
            spec("du", 2, Some("d"), half.clone()),
            spec("dd", 2, Some("d"), half),
        ],
    )
    .unwrap();

    let ix = |id: &str| tree.ix_of(id).unwrap();
    let mut pis = vec![Vec::new(); tree.len()];
    pis[ix("root").0] = frictionless_pi(rat_int(10));
    pis[ix("u").0] = spread_pi(rat(1, 8), rat_int(16));
    pis[ix("d").0] = frictionless_pi(rat_int(6));
    pis[ix("uu").0] = frictionless_pi(rat_int(14));
    pis[ix("ud").0] = frictionless_pi(rat_int(10));
    pis[ix("du").0] = frictionless_pi(rat_int(10));
    pis[ix("dd").0] = frictionless_pi(rat_int(4));
    let rates = ExchangeRates::new(&tree, pis).unwrap();
    let cones = deferred_cones(&tree, &rates);

    let in2 = |c: i64| vec![rat_int(0), rat_int(c)];
    let mut y = vec![zeros(2); tree.len()];
    let mut x = vec![zeros(2); tree.len()];
    y[ix("root").0] = in2(0);
    x[ix("root").0] = in2(5);
    y[ix("u").0] = in2(3);
    x[ix("u").0] = in2(6);
    y[ix("d").0] = in2(0);
    x[ix("d").0] = in2(3);
    for (id, c) in [("uu", 9), ("ud", 4), ("du", 4), ("dd", 0)] {
        y[ix(id).0] = in2(c);
        x[ix(id).0] = in2(c);
    }
    let payoffs = GamePayoffs::new(
        AdaptedProcess::new(&tree, y).unwrap(),
        AdaptedProcess::new(&tree, x).unwrap(),
    );
    payoffs.validate(&tree, &cones).unwrap();

    TestModel { tree, rates, cones, payoffs }
}

/// One-step tree, frictionless everywhere: `rates[0]` at the root and
/// one leaf per remaining entry. Zero payoffs.
pub fn one_step_frictionless(rates: &[Rat]) -> TestModel {
    let n = rates.len() - 1;
    let w = Rat::new(1.into(), (n as i64).into());
    let mut specs = vec![spec("root", 0, None, rat_int(1))];
    for i in 0..n {
        specs.push(spec(&format!("leaf{i}"), 1, Some("root"), w.clone()));
    }
    let tree = EventTree::build(2, 1, specs).unwrap();
    let mut pis = vec![frictionless_pi(rates[0].clone())];
    for r in &rates[1..] {
        pis.push(frictionless_pi(r.clone()));
    }
    let rates = ExchangeRates::new(&tree, pis).unwrap();
    let cones = deferred_cones(&tree, &rates);
    let payoffs = GamePayoffs::zero(&tree);
    TestModel { tree, rates, cones, payoffs }
}

/// One-step tree with a bid-ask spread at the root and frictionless
/// leaves. Zero payoffs.
pub fn one_step_spread(root: (Rat, Rat), leaf_rates: &[Rat]) -> TestModel {
    let n = leaf_rates.len();
    let w = Rat::new(1.into(), (n as i64).into());
    let mut specs = vec![spec("root", 0, None, rat_int(1))];
    for i in 0..n {
        specs.push(spec(&format!("leaf{i}"), 1, Some("root"), w.clone()));
    }
    let tree = EventTree::build(2, 1, specs).unwrap();
    let mut pis = vec![spread_pi(root.0, root.1)];
    for r in leaf_rates {
        pis.push(frictionless_pi(r.clone()));
    }
    let rates = ExchangeRates::new(&tree, pis).unwrap();
    let cones = deferred_cones(&tree, &rates);
    let payoffs = GamePayoffs::zero(&tree);
    TestModel { tree, rates, cones, payoffs }
}
