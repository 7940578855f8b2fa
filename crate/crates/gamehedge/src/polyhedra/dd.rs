//! Double description method on polyhedral cones, exact rationals.
//!
//! `cone_generators` computes a minimal generating set (lineality basis
//! plus extreme rays of the pointed part) of `{x : a·x >= 0 for all rows a}`.
//! Constraints are processed one at a time; while the lineality space is
//! nontrivial a pivoting step shrinks it, afterwards the classic
//! positive/negative ray combination step applies, restricted to
//! combinatorially adjacent pairs.
//!
//! The output is canonical: the lineality basis is in reduced row
//! echelon form, rays are reduced modulo the lineality space, scaled to
//! primitive integer vectors and sorted. It does not depend on the
//! input row order.

use num_traits::{Signed, Zero};

use crate::rat::{add_scaled, dot, is_zero_vec, lex_cmp, neg, primitive, unit, Rat};

#[derive(Debug, Clone)]
pub struct ConeGenerators {
    pub lineality: Vec<Vec<Rat>>,
    pub rays: Vec<Vec<Rat>>,
}

const MAX_ROWS: usize = 128;

pub fn cone_generators(n: usize, input_rows: &[Vec<Rat>]) -> ConeGenerators {
    let rows: Vec<Vec<Rat>> = input_rows
        .iter()
        .filter(|r| !is_zero_vec(r))
        .map(|r| primitive(r))
        .collect();
    assert!(rows.len() <= MAX_ROWS, "too many halfspaces for the zero-set bitmask");

    let mut lineality: Vec<Vec<Rat>> = (0..n).map(|i| unit(n, i)).collect();
    let mut rays: Vec<Vec<Rat>> = Vec::new();
    let mut processed: Vec<Vec<Rat>> = Vec::new();

    for a in &rows {
        if let Some(k) = lineality.iter().position(|l| !dot(a, l).is_zero()) {
            // The constraint cuts the lineality space: pivot one basis
            // vector out of it; it becomes a ray, everything else is
            // adjusted to lie in the new hyperplane.
            let mut l0 = lineality.remove(k);
            if dot(a, &l0).is_negative() {
                l0 = neg(&l0);
            }
            let al0 = dot(a, &l0);
            for l in lineality.iter_mut() {
                let c = -(dot(a, l) / &al0);
                if !c.is_zero() {
                    *l = primitive(&add_scaled(l, &c, &l0));
                }
            }
            for r in rays.iter_mut() {
                let c = -(dot(a, r) / &al0);
                if !c.is_zero() {
                    *r = primitive(&add_scaled(r, &c, &l0));
                }
            }
            rays.push(primitive(&l0));
        } else {
            let vals: Vec<Rat> = rays.iter().map(|r| dot(a, r)).collect();
            if vals.iter().any(Signed::is_negative) {
                let masks: Vec<u128> = rays.iter().map(|r| zero_mask(&processed, r)).collect();
                let mut next: Vec<Vec<Rat>> = Vec::new();
                for (i, r) in rays.iter().enumerate() {
                    if !vals[i].is_negative() {
                        next.push(r.clone());
                    }
                }
                for (i, _) in vals.iter().enumerate().filter(|(_, v)| v.is_positive()) {
                    for (j, _) in vals.iter().enumerate().filter(|(_, v)| v.is_negative()) {
                        if adjacent(&masks, i, j) {
                            // positive combination tight on the new row
                            let w: Vec<Rat> = rays[i]
                                .iter()
                                .zip(&rays[j])
                                .map(|(x, y)| &vals[i] * y - &vals[j] * x)
                                .collect();
                            next.push(primitive(&w));
                        }
                    }
                }
                next.sort_by(|x, y| lex_cmp(x, y));
                next.dedup();
                rays = next;
            }
        }
        processed.push(a.clone());
    }

    echelonize(&mut lineality);
    let mut out: Vec<Vec<Rat>> = rays
        .iter()
        .map(|r| primitive(&reduce_mod(&lineality, r)))
        .filter(|r| !is_zero_vec(r))
        .collect();
    out.sort_by(|x, y| lex_cmp(x, y));
    out.dedup();
    ConeGenerators { lineality, rays: out }
}

fn zero_mask(processed: &[Vec<Rat>], r: &[Rat]) -> u128 {
    let mut m = 0u128;
    for (i, row) in processed.iter().enumerate() {
        if dot(row, r).is_zero() {
            m |= 1 << i;
        }
    }
    m
}

/// Rays i and j are adjacent iff no third ray is tight on every
/// constraint tight at both of them.
fn adjacent(masks: &[u128], i: usize, j: usize) -> bool {
    let t = masks[i] & masks[j];
    masks
        .iter()
        .enumerate()
        .all(|(k, &mk)| k == i || k == j || t & !mk != 0)
}

/// Reduced row echelon form with primitive rows, first nonzero entry
/// positive, ordered by pivot column. Unique for a given row space.
pub fn echelonize(basis: &mut Vec<Vec<Rat>>) {
    let mut out: Vec<Vec<Rat>> = Vec::new();
    for v in basis.iter() {
        let mut v = reduce_mod(&out, v);
        if is_zero_vec(&v) {
            continue;
        }
        let piv = v.iter().position(|x| !x.is_zero()).unwrap();
        let inv = v[piv].clone();
        for x in v.iter_mut() {
            *x = &*x / &inv;
        }
        for u in out.iter_mut() {
            let c = -u[piv].clone();
            if !c.is_zero() {
                *u = add_scaled(u, &c, &v);
            }
        }
        out.push(v);
    }
    out.sort_by_key(|v| v.iter().position(|x| !x.is_zero()).unwrap());
    for v in out.iter_mut() {
        *v = primitive(v);
        if v.iter().find(|x| !x.is_zero()).is_some_and(|x| x.is_negative()) {
            *v = neg(v);
        }
    }
    *basis = out;
}

/// Zeroes the pivot coordinates of `v` against an echelonized basis.
pub fn reduce_mod(echelon: &[Vec<Rat>], v: &[Rat]) -> Vec<Rat> {
    let mut v = v.to_vec();
    for l in echelon {
        let piv = l.iter().position(|x| !x.is_zero()).unwrap();
        if !v[piv].is_zero() {
            let c = -(&v[piv] / &l[piv]);
            v = add_scaled(&v, &c, l);
        }
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{rat_int, zeros};

    fn v(xs: &[i64]) -> Vec<Rat> {
        xs.iter().map(|&x| rat_int(x)).collect()
    }

    #[test]
    fn orthant_is_self_described() {
        let g = cone_generators(2, &[v(&[1, 0]), v(&[0, 1])]);
        assert!(g.lineality.is_empty());
        assert_eq!(g.rays, vec![v(&[0, 1]), v(&[1, 0])]);
    }

    #[test]
    fn halfplane_has_lineality() {
        // {10x + y >= 0}
        let g = cone_generators(2, &[v(&[10, 1])]);
        assert_eq!(g.lineality.len(), 1);
        assert_eq!(g.lineality[0], v(&[1, -10]));
        assert_eq!(g.rays.len(), 1);
        assert!(dot(&v(&[10, 1]), &g.rays[0]).is_positive());
    }

    #[test]
    fn two_halfplanes_make_a_pointed_cone() {
        // {14x + y >= 0, 10x + y >= 0}
        let g = cone_generators(2, &[v(&[14, 1]), v(&[10, 1])]);
        assert!(g.lineality.is_empty());
        assert_eq!(g.rays, vec![v(&[-1, 14]), v(&[1, -10])]);
    }

    #[test]
    fn equality_pair_collapses_to_subspace() {
        let g = cone_generators(2, &[v(&[1, 0]), v(&[-1, 0])]);
        assert_eq!(g.lineality, vec![v(&[0, 1])]);
        assert!(g.rays.is_empty());
    }

    #[test]
    fn no_rows_is_full_space() {
        let g = cone_generators(3, &[]);
        assert_eq!(g.lineality.len(), 3);
        assert!(g.rays.is_empty());
        let g = cone_generators(2, &[zeros(2)]);
        assert_eq!(g.lineality.len(), 2);
    }

    #[test]
    fn three_dim_octant_with_diagonal_cut() {
        // x,y,z >= 0 and x + y - z >= 0
        let rows = [v(&[1, 0, 0]), v(&[0, 1, 0]), v(&[0, 0, 1]), v(&[1, 1, -1])];
        let g = cone_generators(3, &rows);
        assert!(g.lineality.is_empty());
        assert_eq!(
            g.rays,
            vec![v(&[0, 1, 1]), v(&[1, 0, 0]), v(&[1, 0, 1]), v(&[0, 1, 0])]
                .into_iter()
                .map(|r| primitive(&r))
                .collect::<std::collections::BTreeSet<_>>()
                .into_iter()
                .collect::<Vec<_>>()
        );
    }
}
