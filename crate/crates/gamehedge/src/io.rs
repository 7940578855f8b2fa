//! JSON wire formats. Rationals travel as `"p/q"` strings, never as
//! floats; maps are ordered, so identical inputs serialize to identical
//! bytes. All documents carry `"schema": 1`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::{deferred_cones, ArbitrageReport, ConeField, ExchangeRates};
use crate::polyhedra::Polyhedron;
use crate::pricing::{HedgeRecipe, LambdaHedge, Side, VerifyReport};
use crate::rat::{fmt_rat, fmt_vec, parse_rat, parse_vec, zeros, Rat};
use crate::stopping::{GamePayoffs, MixedStoppingTime};
use crate::tree::{AdaptedProcess, EventTree, NodeSpec, PredictableProcess};

pub const SCHEMA_VERSION: u32 = 1;

fn check_schema(schema: u32) -> Result<()> {
    if schema != SCHEMA_VERSION {
        return Err(Error::Parse(format!("unsupported schema version {schema}")));
    }
    Ok(())
}

// ----------------------------------------------------------------------
// model files

#[derive(Debug, Serialize, Deserialize)]
struct ModelDoc {
    schema: u32,
    d: usize,
    #[serde(rename = "T")]
    horizon: usize,
    nodes: Vec<NodeDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
struct NodeDoc {
    id: String,
    time: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    parent: Option<String>,
    branch_prob: String,
    pi: Vec<Vec<String>>,
    #[serde(rename = "Y")]
    y: Vec<String>,
    #[serde(rename = "X")]
    x: Vec<String>,
}

/// A fully validated model: tree, rates, derived cone field and payoff
/// processes (with the penalty solvency condition checked).
#[derive(Debug, Clone)]
pub struct Model {
    pub tree: EventTree,
    pub rates: ExchangeRates,
    pub cones: ConeField,
    pub payoffs: GamePayoffs,
}

impl Model {
    pub fn from_json(s: &str) -> Result<Model> {
        let doc: ModelDoc =
            serde_json::from_str(s).map_err(|e| Error::Parse(format!("model JSON: {e}")))?;
        check_schema(doc.schema)?;
        let specs = doc
            .nodes
            .iter()
            .map(|n| {
                Ok(NodeSpec {
                    id: n.id.clone(),
                    time: n.time,
                    parent: n.parent.clone(),
                    branch_prob: parse_rat(&n.branch_prob)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let tree = EventTree::build(doc.d, doc.horizon, specs)?;

        let mut pis = vec![Vec::new(); tree.len()];
        let mut ys = vec![zeros(doc.d); tree.len()];
        let mut xs = vec![zeros(doc.d); tree.len()];
        for n in &doc.nodes {
            let ix = tree.ix_of(&n.id).expect("id validated by the builder");
            pis[ix.0] = n
                .pi
                .iter()
                .map(|row| parse_vec(row))
                .collect::<Result<Vec<_>>>()?;
            ys[ix.0] = parse_vec(&n.y)?;
            xs[ix.0] = parse_vec(&n.x)?;
        }
        let rates = ExchangeRates::new(&tree, pis)?;
        let cones = deferred_cones(&tree, &rates);
        let payoffs = GamePayoffs::new(
            AdaptedProcess::new(&tree, ys)?,
            AdaptedProcess::new(&tree, xs)?,
        );
        payoffs.validate(&tree, &cones)?;
        Ok(Model { tree, rates, cones, payoffs })
    }
}

// ----------------------------------------------------------------------
// processes and stopping times

#[derive(Debug, Serialize, Deserialize, PartialEq, Eq)]
struct ProcessDoc {
    initial: Vec<String>,
    values: BTreeMap<String, Vec<String>>,
}

fn process_to_doc(tree: &EventTree, p: &PredictableProcess) -> ProcessDoc {
    let mut values = BTreeMap::new();
    for ix in tree.indices() {
        if !tree.is_leaf(ix) {
            values.insert(tree.id(ix).to_string(), fmt_vec(p.after(ix)));
        }
    }
    ProcessDoc { initial: fmt_vec(&p.initial), values }
}

fn process_from_doc(tree: &EventTree, doc: &ProcessDoc) -> Result<PredictableProcess> {
    let mut p = PredictableProcess::zero(tree);
    p.initial = parse_vec(&doc.initial)?;
    if p.initial.len() != tree.dim() {
        return Err(Error::Dimension("process initial value".into()));
    }
    for (id, v) in &doc.values {
        let ix = tree
            .ix_of(id)
            .ok_or_else(|| Error::Parse(format!("unknown node id {id:?} in process")))?;
        if tree.is_leaf(ix) {
            return Err(Error::Parse(format!("process stores a value at leaf {id:?}")));
        }
        let v = parse_vec(v)?;
        if v.len() != tree.dim() {
            return Err(Error::Dimension(format!("process value at {id:?}")));
        }
        p.set_after(ix, v);
    }
    Ok(p)
}

fn mst_to_doc(tree: &EventTree, mst: &MixedStoppingTime) -> BTreeMap<String, String> {
    use num_traits::Zero;
    let mut out = BTreeMap::new();
    for ix in tree.indices() {
        if !mst.at(ix).is_zero() {
            out.insert(tree.id(ix).to_string(), fmt_rat(mst.at(ix)));
        }
    }
    out
}

fn mst_from_doc(tree: &EventTree, doc: &BTreeMap<String, String>) -> Result<MixedStoppingTime> {
    use num_traits::Zero;
    let mut values = vec![Rat::zero(); tree.len()];
    for (id, v) in doc {
        let ix = tree
            .ix_of(id)
            .ok_or_else(|| Error::Parse(format!("unknown node id {id:?} in stopping time")))?;
        values[ix.0] = parse_rat(v)?;
    }
    MixedStoppingTime::new(tree, values)
}

// ----------------------------------------------------------------------
// hedge recipes

#[derive(Debug, Serialize, Deserialize)]
struct RecipeDoc {
    schema: u32,
    side: String,
    stopping: BTreeMap<String, String>,
    backbone: ProcessDoc,
    carry_liq: BTreeMap<String, ProcessDoc>,
    stop_liq: BTreeMap<String, ProcessDoc>,
}

pub fn recipe_to_json(tree: &EventTree, recipe: &HedgeRecipe) -> String {
    let mut carry = BTreeMap::new();
    let mut stop = BTreeMap::new();
    for ix in tree.indices() {
        let id = tree.id(ix).to_string();
        carry.insert(id.clone(), process_to_doc(tree, &recipe.carry_liq[ix.0]));
        stop.insert(id, process_to_doc(tree, &recipe.stop_liq[ix.0]));
    }
    let doc = RecipeDoc {
        schema: SCHEMA_VERSION,
        side: recipe.lambda.side.as_str().to_string(),
        stopping: mst_to_doc(tree, &recipe.lambda.stopping),
        backbone: process_to_doc(tree, &recipe.lambda.backbone),
        carry_liq: carry,
        stop_liq: stop,
    };
    to_pretty(&doc)
}

pub fn recipe_from_json(tree: &EventTree, s: &str) -> Result<HedgeRecipe> {
    let doc: RecipeDoc =
        serde_json::from_str(s).map_err(|e| Error::Parse(format!("recipe JSON: {e}")))?;
    check_schema(doc.schema)?;
    let side = match doc.side.as_str() {
        "seller" => Side::Seller,
        "buyer" => Side::Buyer,
        other => return Err(Error::Parse(format!("unknown side {other:?}"))),
    };
    let lambda = LambdaHedge {
        side,
        stopping: mst_from_doc(tree, &doc.stopping)?,
        backbone: process_from_doc(tree, &doc.backbone)?,
    };
    let mut carry_liq = Vec::with_capacity(tree.len());
    let mut stop_liq = Vec::with_capacity(tree.len());
    for ix in tree.indices() {
        let id = tree.id(ix);
        carry_liq.push(match doc.carry_liq.get(id) {
            Some(d) => process_from_doc(tree, d)?,
            None => PredictableProcess::zero(tree),
        });
        stop_liq.push(match doc.stop_liq.get(id) {
            Some(d) => process_from_doc(tree, d)?,
            None => PredictableProcess::zero(tree),
        });
    }
    Ok(HedgeRecipe { lambda, carry_liq, stop_liq })
}

// ----------------------------------------------------------------------
// reports

#[derive(Debug, Serialize, Deserialize)]
struct VerifyDoc {
    schema: u32,
    pass: bool,
    opponents: usize,
    violations: Vec<ViolationDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ViolationDoc {
    opponent: usize,
    node: String,
    halfspace: String,
}

pub fn verify_report_to_json(report: &VerifyReport) -> String {
    let doc = VerifyDoc {
        schema: SCHEMA_VERSION,
        pass: report.passed(),
        opponents: report.opponents,
        violations: report
            .violations
            .iter()
            .map(|v| ViolationDoc {
                opponent: v.opponent,
                node: v.node.clone(),
                halfspace: v.halfspace.clone(),
            })
            .collect(),
    };
    to_pretty(&doc)
}

#[derive(Debug, Serialize, Deserialize)]
struct ArbitrageDoc {
    schema: u32,
    status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    certificate: Option<BTreeMap<String, Vec<String>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    strategy: Option<ProcessDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    surplus: Option<BTreeMap<String, Vec<String>>>,
}

pub fn arbitrage_report_to_json(tree: &EventTree, report: &ArbitrageReport) -> String {
    let doc = match report {
        ArbitrageReport::NoArbitrage(cert) => {
            let mut map = BTreeMap::new();
            for ix in tree.indices() {
                map.insert(tree.id(ix).to_string(), fmt_vec(&cert.m[ix.0]));
            }
            ArbitrageDoc {
                schema: SCHEMA_VERSION,
                status: "no-arbitrage".into(),
                certificate: Some(map),
                strategy: None,
                surplus: None,
            }
        }
        ArbitrageReport::Arbitrage(w) => {
            let mut surplus = BTreeMap::new();
            for &leaf in tree.leaves() {
                surplus.insert(tree.id(leaf).to_string(), fmt_vec(w.surplus.at(leaf)));
            }
            ArbitrageDoc {
                schema: SCHEMA_VERSION,
                status: "arbitrage".into(),
                certificate: None,
                strategy: Some(process_to_doc(tree, &w.strategy)),
                surplus: Some(surplus),
            }
        }
    };
    to_pretty(&doc)
}

#[derive(Debug, Serialize, Deserialize)]
struct DualDoc {
    schema: u32,
    side: String,
    currency: usize,
    grid_n: u32,
    entries: Vec<DualEntryDoc>,
    best: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    gap: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct DualEntryDoc {
    outer: BTreeMap<String, String>,
    value: String,
    argopt: BTreeMap<String, String>,
    certificate: BTreeMap<String, Vec<String>>,
    per_point: Vec<String>,
}

pub fn dual_report_to_json(tree: &EventTree, report: &crate::dual::DualReport) -> String {
    let entries = report
        .entries
        .iter()
        .map(|e| {
            let mut cert = BTreeMap::new();
            for ix in tree.indices() {
                cert.insert(tree.id(ix).to_string(), fmt_vec(&e.scan.pair.m[ix.0]));
            }
            DualEntryDoc {
                outer: mst_to_doc(tree, &e.outer),
                value: fmt_rat(&e.scan.value),
                argopt: mst_to_doc(tree, &e.scan.best),
                certificate: cert,
                per_point: e.scan.per_point.iter().map(fmt_rat).collect(),
            }
        })
        .collect();
    let doc = DualDoc {
        schema: SCHEMA_VERSION,
        side: report.side.as_str().to_string(),
        currency: report.currency + 1,
        grid_n: report.grid_n,
        entries,
        best: report.best,
        gap: report.gap_to_primal.as_ref().map(fmt_rat),
    };
    to_pretty(&doc)
}

// ----------------------------------------------------------------------
// polyhedra (used by figure metadata)

#[derive(Debug, Serialize, Deserialize)]
pub struct HalfspaceDoc {
    pub normal: Vec<String>,
    pub offset: String,
}

pub fn hrep_doc(p: &Polyhedron) -> Vec<HalfspaceDoc> {
    p.halfspaces()
        .iter()
        .map(|h| HalfspaceDoc { normal: fmt_vec(&h.normal), offset: fmt_rat(&h.offset) })
        .collect()
}

fn to_pretty<T: Serialize>(doc: &T) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("document serialization");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pricing::{extract_lambda_hedge, lambda_to_full_hedge, seller_ladder, verify_hedge};
    use crate::rat::rat;
    use crate::stopping::mst_grid;

    const FIG1_JSON: &str = include_str!("../../../models/fig1.json");

    #[test]
    fn model_round_trip_matches_fixture() {
        let m = Model::from_json(FIG1_JSON).unwrap();
        let f = crate::test_fixtures::fig1();
        assert_eq!(m.tree.len(), f.tree.len());
        assert_eq!(m.tree.horizon(), 2);
        for ix in m.tree.indices() {
            assert_eq!(m.payoffs.exercise.at(ix), f.payoffs.exercise.at(ix));
            assert_eq!(m.payoffs.cancel.at(ix), f.payoffs.cancel.at(ix));
            assert!(m.cones.deferred(ix).eq_set(f.cones.deferred(ix)));
        }
    }

    #[test]
    fn malformed_models_are_rejected() {
        assert!(Model::from_json("{").is_err());
        assert!(Model::from_json("{\"schema\":2,\"d\":2,\"T\":1,\"nodes\":[]}").is_err());
        // penalty violates solvency: X - Y not in K
        let bad = FIG1_JSON.replace("\"X\": [\"0/1\", \"5/1\"]", "\"X\": [\"0/1\", \"-1/1\"]");
        assert!(matches!(Model::from_json(&bad), Err(Error::Payoff(_))));
    }

    #[test]
    fn recipe_round_trip_is_identity() {
        let m = Model::from_json(FIG1_JSON).unwrap();
        let ladder = seller_ladder(&m.tree, &m.cones, &m.payoffs).unwrap();
        let hedge = extract_lambda_hedge(
            &m.tree,
            &m.cones,
            &m.payoffs,
            &ladder,
            &[Rat::from_integer(0.into()), rat(14, 3)],
        )
        .unwrap();
        let recipe = lambda_to_full_hedge(&m.tree, &m.cones, &m.payoffs, &hedge).unwrap();
        let json = recipe_to_json(&m.tree, &recipe);
        let back = recipe_from_json(&m.tree, &json).unwrap();
        assert_eq!(recipe_to_json(&m.tree, &back), json);
        // reloaded recipe verifies without re-deriving anything
        let report = verify_hedge(&m.tree, &m.cones, &m.payoffs, &back, &mst_grid(&m.tree, 1));
        assert!(report.passed());
    }
}
