//! Exact simplex over rationals.
//!
//! Dense two-phase tableau with Bland's anti-cycling rule. Variables are
//! free (unrestricted sign) and internally split as differences of
//! nonnegative parts. Deterministic: same input, same pivots, same
//! basic solution.

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::rat::Rat;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Min,
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rel {
    Ge,
    Le,
    Eq,
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub coeffs: Vec<Rat>,
    pub rel: Rel,
    pub rhs: Rat,
}

impl Constraint {
    pub fn new(coeffs: Vec<Rat>, rel: Rel, rhs: Rat) -> Self {
        Constraint { coeffs, rel, rhs }
    }
}

#[derive(Debug, Clone)]
pub struct LpProblem {
    pub num_vars: usize,
    pub sense: Sense,
    pub objective: Vec<Rat>,
    pub constraints: Vec<Constraint>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LpOutcome {
    Optimal { point: Vec<Rat>, value: Rat },
    Infeasible,
    Unbounded,
}

struct Tableau {
    /// rows[i] = constraint row, last entry is the rhs.
    rows: Vec<Vec<Rat>>,
    /// cost[j] = reduced cost of column j, last entry is -objective value.
    cost: Vec<Rat>,
    basis: Vec<usize>,
    ncols: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let piv = self.rows[r][c].clone();
        debug_assert!(!piv.is_zero());
        for x in self.rows[r].iter_mut() {
            *x = &*x / &piv;
        }
        for i in 0..self.rows.len() {
            if i == r {
                continue;
            }
            let f = self.rows[i][c].clone();
            if f.is_zero() {
                continue;
            }
            for j in 0..=self.ncols {
                let delta = &f * &self.rows[r][j];
                self.rows[i][j] -= delta;
            }
        }
        let f = self.cost[c].clone();
        if !f.is_zero() {
            for j in 0..=self.ncols {
                let delta = &f * &self.rows[r][j];
                self.cost[j] -= delta;
            }
        }
        self.basis[r] = c;
    }

    /// Bland: entering column = lowest index with negative reduced cost;
    /// leaving row = min ratio, ties broken by lowest basic variable index.
    fn run(&mut self, allowed: usize) -> LpOutcome {
        loop {
            let Some(c) = (0..allowed).find(|&j| self.cost[j].is_negative()) else {
                return LpOutcome::Optimal { point: Vec::new(), value: -self.cost[self.ncols].clone() };
            };
            let mut leave: Option<usize> = None;
            let mut best: Option<Rat> = None;
            for i in 0..self.rows.len() {
                if self.rows[i][c].is_positive() {
                    let ratio = &self.rows[i][self.ncols] / &self.rows[i][c];
                    let better = match &best {
                        None => true,
                        Some(b) => {
                            ratio < *b || (ratio == *b && self.basis[i] < self.basis[leave.unwrap()])
                        }
                    };
                    if better {
                        best = Some(ratio);
                        leave = Some(i);
                    }
                }
            }
            match leave {
                Some(r) => self.pivot(r, c),
                None => return LpOutcome::Unbounded,
            }
        }
    }
}

/// Solves the problem exactly. Errors only on malformed input.
pub fn solve(p: &LpProblem) -> Result<LpOutcome> {
    solve_with_objective(p, None)
}

/// Feasibility with the deterministic minimal-L1 tie-break: among all
/// feasible points, returns a basic one minimizing the sum of absolute
/// values of the variables. `None` means infeasible.
pub fn feasible_l1min(num_vars: usize, constraints: &[Constraint]) -> Result<Option<Vec<Rat>>> {
    let p = LpProblem {
        num_vars,
        sense: Sense::Min,
        objective: vec![Rat::zero(); num_vars],
        constraints: constraints.to_vec(),
    };
    // objective = sum of both split parts = L1 norm of the point
    match solve_with_objective(&p, Some(vec![Rat::one(); 2 * num_vars]))? {
        LpOutcome::Optimal { point, .. } => Ok(Some(point)),
        LpOutcome::Infeasible => Ok(None),
        LpOutcome::Unbounded => Err(Error::Internal("L1 objective cannot be unbounded".into())),
    }
}

/// `split_objective`, when given, is a cost vector over the 2n split
/// columns (u then interleaved v) and overrides `p.objective`.
fn solve_with_objective(p: &LpProblem, split_objective: Option<Vec<Rat>>) -> Result<LpOutcome> {
    let n = p.num_vars;
    if p.objective.len() != n {
        return Err(Error::Dimension("objective length != num_vars".into()));
    }
    for c in &p.constraints {
        if c.coeffs.len() != n {
            return Err(Error::Dimension("constraint length != num_vars".into()));
        }
    }

    let m = p.constraints.len();
    let nslack = p.constraints.iter().filter(|c| c.rel != Rel::Eq).count();
    // columns: u_0..u_{n-1}, v_0..v_{n-1}, slacks, artificials
    let ncols = 2 * n + nslack + m;
    let art0 = 2 * n + nslack;

    let mut rows: Vec<Vec<Rat>> = Vec::with_capacity(m);
    let mut slack_ix = 0usize;
    for (i, c) in p.constraints.iter().enumerate() {
        let mut row = vec![Rat::zero(); ncols + 1];
        for (j, a) in c.coeffs.iter().enumerate() {
            row[j] = a.clone();
            row[n + j] = -a.clone();
        }
        match c.rel {
            Rel::Ge => {
                row[2 * n + slack_ix] = -Rat::one();
                slack_ix += 1;
            }
            Rel::Le => {
                row[2 * n + slack_ix] = Rat::one();
                slack_ix += 1;
            }
            Rel::Eq => {}
        }
        row[ncols] = c.rhs.clone();
        if row[ncols].is_negative() {
            for x in row.iter_mut() {
                *x = -&*x;
            }
        }
        row[art0 + i] = Rat::one();
        rows.push(row);
    }

    // Phase 1: minimize sum of artificials.
    let mut cost = vec![Rat::zero(); ncols + 1];
    for i in 0..m {
        for j in 0..=ncols {
            if j < art0 {
                let delta = rows[i][j].clone();
                cost[j] -= delta;
            }
        }
        let delta = rows[i][ncols].clone();
        cost[ncols] -= delta;
    }
    // cost[ncols] currently -sum(b); tableau convention: last = -objective value
    let mut t = Tableau { rows, cost, basis: (art0..art0 + m).collect(), ncols };
    match t.run(art0) {
        LpOutcome::Optimal { value, .. } => {
            if !value.is_zero() {
                return Ok(LpOutcome::Infeasible);
            }
        }
        _ => return Err(Error::Internal("phase 1 cannot be unbounded".into())),
    }

    // Drive artificials out of the basis; drop redundant rows.
    let mut drop_rows = Vec::new();
    for i in 0..t.basis.len() {
        if t.basis[i] >= art0 {
            match (0..art0).find(|&j| !t.rows[i][j].is_zero()) {
                Some(j) => t.pivot(i, j),
                None => drop_rows.push(i),
            }
        }
    }
    for &i in drop_rows.iter().rev() {
        t.rows.remove(i);
        t.basis.remove(i);
    }

    // Phase 2 objective over split columns (min form).
    let minimize = split_objective.is_some() || p.sense == Sense::Min;
    let mut c2 = vec![Rat::zero(); ncols + 1];
    match &split_objective {
        Some(so) => {
            for j in 0..2 * n {
                c2[j] = so[j].clone();
            }
        }
        None => {
            for j in 0..n {
                let c = if p.sense == Sense::Min { p.objective[j].clone() } else { -p.objective[j].clone() };
                c2[j] = c.clone();
                c2[n + j] = -c;
            }
        }
    }
    // Price out the current basis.
    for i in 0..t.basis.len() {
        let b = t.basis[i];
        let f = c2[b].clone();
        if !f.is_zero() {
            for j in 0..=ncols {
                let delta = &f * &t.rows[i][j];
                c2[j] -= delta;
            }
        }
    }
    t.cost = c2;
    match t.run(art0) {
        LpOutcome::Optimal { value, .. } => {
            let mut x = vec![Rat::zero(); n];
            for (i, &b) in t.basis.iter().enumerate() {
                if b < n {
                    x[b] += &t.rows[i][ncols];
                } else if b < 2 * n {
                    x[b - n] -= &t.rows[i][ncols];
                }
            }
            let value = if minimize { value } else { -value };
            let value = if split_objective.is_some() { value } else { objective_value(p, &x) };
            Ok(LpOutcome::Optimal { point: x, value })
        }
        LpOutcome::Unbounded => Ok(LpOutcome::Unbounded),
        LpOutcome::Infeasible => Err(Error::Internal("phase 2 cannot be infeasible".into())),
    }
}

fn objective_value(p: &LpProblem, x: &[Rat]) -> Rat {
    crate::rat::dot(&p.objective, x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{rat, rat_int, zeros};

    fn ge(coeffs: Vec<Rat>, rhs: Rat) -> Constraint {
        Constraint::new(coeffs, Rel::Ge, rhs)
    }

    #[test]
    fn bounded_max() {
        // max x2 s.t. x2 <= 3, x2 >= 0 (x1 free, objective ignores it)
        let p = LpProblem {
            num_vars: 2,
            sense: Sense::Max,
            objective: vec![rat_int(0), rat_int(1)],
            constraints: vec![
                Constraint::new(vec![rat_int(0), rat_int(1)], Rel::Le, rat_int(3)),
                Constraint::new(vec![rat_int(0), rat_int(1)], Rel::Ge, rat_int(0)),
            ],
        };
        match solve(&p).unwrap() {
            LpOutcome::Optimal { value, point } => {
                assert_eq!(value, rat_int(3));
                assert_eq!(point[1], rat_int(3));
            }
            other => panic!("expected optimal, got {other:?}"),
        }
    }

    #[test]
    fn min_on_axis_slice() {
        // min x1 s.t. 10 x1 + x2 >= 14/3, x2 = 0  ->  7/15
        let p = LpProblem {
            num_vars: 2,
            sense: Sense::Min,
            objective: vec![rat_int(1), rat_int(0)],
            constraints: vec![
                ge(vec![rat_int(10), rat_int(1)], rat(14, 3)),
                Constraint::new(vec![rat_int(0), rat_int(1)], Rel::Eq, rat_int(0)),
            ],
        };
        match solve(&p).unwrap() {
            LpOutcome::Optimal { value, .. } => assert_eq!(value, rat(7, 15)),
            other => panic!("expected optimal, got {other:?}"),
        }
    }

    #[test]
    fn detects_infeasible_and_unbounded() {
        let infeasible = LpProblem {
            num_vars: 1,
            sense: Sense::Min,
            objective: vec![rat_int(1)],
            constraints: vec![
                ge(vec![rat_int(1)], rat_int(1)),
                Constraint::new(vec![rat_int(1)], Rel::Le, rat_int(0)),
            ],
        };
        assert_eq!(solve(&infeasible).unwrap(), LpOutcome::Infeasible);

        let unbounded = LpProblem {
            num_vars: 1,
            sense: Sense::Max,
            objective: vec![rat_int(1)],
            constraints: vec![ge(vec![rat_int(1)], rat_int(0))],
        };
        assert_eq!(solve(&unbounded).unwrap(), LpOutcome::Unbounded);
    }

    #[test]
    fn l1min_prefers_zero() {
        // feasible set contains 0 -> returns exactly 0
        let cs = vec![ge(vec![rat_int(1), rat_int(1)], rat_int(-5))];
        let x = feasible_l1min(2, &cs).unwrap().unwrap();
        assert_eq!(x, zeros(2));

        let cs = vec![ge(vec![rat_int(1)], rat_int(0)), Constraint::new(vec![rat_int(1)], Rel::Le, rat_int(-1))];
        assert!(feasible_l1min(1, &cs).unwrap().is_none());
    }

    #[test]
    fn degenerate_cycling_guard() {
        // classic degenerate instance; Bland must terminate
        let p = LpProblem {
            num_vars: 4,
            sense: Sense::Min,
            objective: vec![rat(-3, 4), rat_int(150), rat(-1, 50), rat_int(6)],
            constraints: vec![
                Constraint::new(vec![rat(1, 4), rat_int(-60), rat(-1, 25), rat_int(9)], Rel::Le, rat_int(0)),
                Constraint::new(vec![rat(1, 2), rat_int(-90), rat(-1, 50), rat_int(3)], Rel::Le, rat_int(0)),
                Constraint::new(vec![rat_int(0), rat_int(0), rat_int(1), rat_int(0)], Rel::Le, rat_int(1)),
                ge(vec![rat_int(1), rat_int(0), rat_int(0), rat_int(0)], rat_int(0)),
                ge(vec![rat_int(0), rat_int(1), rat_int(0), rat_int(0)], rat_int(0)),
                ge(vec![rat_int(0), rat_int(0), rat_int(1), rat_int(0)], rat_int(0)),
                ge(vec![rat_int(0), rat_int(0), rat_int(0), rat_int(1)], rat_int(0)),
            ],
        };
        match solve(&p).unwrap() {
            LpOutcome::Optimal { value, .. } => assert_eq!(value, rat(-1, 20)),
            other => panic!("expected optimal, got {other:?}"),
        }
    }
}
