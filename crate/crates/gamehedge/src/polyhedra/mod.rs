//! Exact-rational polyhedral kernel: closed convex polyhedra in `Q^d`
//! with both halfspace and generator descriptions, set algebra, and an
//! exact LP solver.
//!
//! Every `Polyhedron` is kept canonical: both representations present,
//! minimal and deterministically ordered, so equal sets built along
//! different routes serialize identically. Lines are stored as pairs of
//! opposite rays in the public generator view.

pub mod dd;
pub mod lp;

use std::cmp::Ordering;
use std::fmt;

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::rat::{add, dot, fmt_rat, is_zero_vec, lex_cmp, neg, primitive, scale, sub, zeros, Rat};

use dd::cone_generators;

/// The closed halfspace `{x : normal·x >= offset}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Halfspace {
    pub normal: Vec<Rat>,
    pub offset: Rat,
}

impl Halfspace {
    pub fn new(normal: Vec<Rat>, offset: Rat) -> Self {
        Halfspace { normal, offset }
    }

    pub fn satisfied_by(&self, x: &[Rat]) -> bool {
        dot(&self.normal, x) >= self.offset
    }

    /// Joint primitive scaling of `(normal, offset)`.
    fn canonicalized(&self) -> Halfspace {
        let mut joint = self.normal.clone();
        joint.push(self.offset.clone());
        let joint = primitive(&joint);
        let (normal, offset) = joint.split_at(self.normal.len());
        Halfspace { normal: normal.to_vec(), offset: offset[0].clone() }
    }
}

impl fmt::Display for Halfspace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms: Vec<String> = self
            .normal
            .iter()
            .enumerate()
            .map(|(i, c)| format!("{} x{}", fmt_rat(c), i + 1))
            .collect();
        write!(f, "{} >= {}", terms.join(" + "), fmt_rat(&self.offset))
    }
}

/// Generator description: the set is `conv(points) + cone(rays)`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VRep {
    pub points: Vec<Vec<Rat>>,
    pub rays: Vec<Vec<Rat>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Polyhedron {
    dim: usize,
    hrep: Vec<Halfspace>,
    vrep: VRep,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AxisMin {
    Value(Rat),
    Unbounded,
    Empty,
}

impl Polyhedron {
    // ------------------------------------------------------------------
    // constructors

    pub fn from_halfspaces(dim: usize, halfspaces: Vec<Halfspace>) -> Polyhedron {
        match vrep_from_hrep(dim, &halfspaces) {
            None => Polyhedron::empty(dim),
            Some(v) => {
                let hrep = hrep_from_vrep(dim, &v);
                Polyhedron { dim, hrep, vrep: v }
            }
        }
    }

    pub fn from_generators(dim: usize, points: Vec<Vec<Rat>>, rays: Vec<Vec<Rat>>) -> Polyhedron {
        if points.is_empty() {
            return Polyhedron::empty(dim);
        }
        let hrep = hrep_from_vrep(dim, &VRep { points, rays });
        match vrep_from_hrep(dim, &hrep) {
            None => unreachable!("generator description with a point cannot be empty"),
            Some(v) => Polyhedron { dim, hrep, vrep: v },
        }
    }

    /// The cone generated by `rays` (always contains the origin).
    pub fn cone_from_rays(dim: usize, rays: Vec<Vec<Rat>>) -> Polyhedron {
        Polyhedron::from_generators(dim, vec![zeros(dim)], rays)
    }

    pub fn full_space(dim: usize) -> Polyhedron {
        Polyhedron::from_halfspaces(dim, Vec::new())
    }

    pub fn empty(dim: usize) -> Polyhedron {
        Polyhedron {
            dim,
            hrep: vec![Halfspace::new(zeros(dim), Rat::one())],
            vrep: VRep::default(),
        }
    }

    pub fn singleton(point: Vec<Rat>) -> Polyhedron {
        let dim = point.len();
        Polyhedron::from_generators(dim, vec![point], Vec::new())
    }

    // ------------------------------------------------------------------
    // accessors

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn halfspaces(&self) -> &[Halfspace] {
        &self.hrep
    }

    pub fn points(&self) -> &[Vec<Rat>] {
        &self.vrep.points
    }

    pub fn rays(&self) -> &[Vec<Rat>] {
        &self.vrep.rays
    }

    pub fn is_empty(&self) -> bool {
        self.vrep.points.is_empty()
    }

    /// A cone: nonempty with every halfspace through the origin.
    pub fn is_cone(&self) -> bool {
        !self.is_empty() && self.hrep.iter().all(|h| h.offset.is_zero())
    }

    // ------------------------------------------------------------------
    // queries

    pub fn contains(&self, x: &[Rat]) -> bool {
        debug_assert_eq!(x.len(), self.dim);
        self.hrep.iter().all(|h| h.satisfied_by(x))
    }

    /// Membership of a direction in the recession cone.
    pub fn contains_ray(&self, r: &[Rat]) -> bool {
        !self.is_empty() && self.hrep.iter().all(|h| !dot(&h.normal, r).is_negative())
    }

    pub fn violated_halfspace(&self, x: &[Rat]) -> Option<&Halfspace> {
        self.hrep.iter().find(|h| !h.satisfied_by(x))
    }

    /// Set inclusion via generator membership.
    pub fn subset(&self, other: &Polyhedron) -> bool {
        if self.is_empty() {
            return true;
        }
        self.vrep.points.iter().all(|p| other.contains(p))
            && self.vrep.rays.iter().all(|r| other.contains_ray(r))
    }

    /// Set equality (mutual inclusion; representation-independent).
    pub fn eq_set(&self, other: &Polyhedron) -> bool {
        self.subset(other) && other.subset(self)
    }

    /// Exact minimum of `x` such that `x * e^j` lies in the set.
    pub fn min_along_axis(&self, j: usize) -> AxisMin {
        debug_assert!(j < self.dim);
        if self.is_empty() {
            return AxisMin::Empty;
        }
        // a·(t e^j) >= b is a one-dimensional condition on t per row
        let mut lower: Option<Rat> = None;
        let mut upper: Option<Rat> = None;
        for h in &self.hrep {
            let aj = &h.normal[j];
            match aj.cmp(&Rat::zero()) {
                Ordering::Greater => {
                    let bound = &h.offset / aj;
                    if lower.as_ref().is_none_or(|l| bound > *l) {
                        lower = Some(bound);
                    }
                }
                Ordering::Less => {
                    let bound = &h.offset / aj;
                    if upper.as_ref().is_none_or(|u| bound < *u) {
                        upper = Some(bound);
                    }
                }
                Ordering::Equal => {
                    if h.offset.is_positive() {
                        return AxisMin::Empty;
                    }
                }
            }
        }
        match (lower, upper) {
            (Some(l), Some(u)) if l > u => AxisMin::Empty,
            (Some(l), _) => AxisMin::Value(l),
            (None, _) => AxisMin::Unbounded,
        }
    }

    // ------------------------------------------------------------------
    // set algebra

    pub fn intersect(&self, other: &Polyhedron) -> Polyhedron {
        debug_assert_eq!(self.dim, other.dim);
        let mut rows = self.hrep.clone();
        rows.extend(other.hrep.iter().cloned());
        Polyhedron::from_halfspaces(self.dim, rows)
    }

    pub fn minkowski_sum(&self, other: &Polyhedron) -> Polyhedron {
        debug_assert_eq!(self.dim, other.dim);
        let mut points = Vec::new();
        for p in &self.vrep.points {
            for q in &other.vrep.points {
                points.push(add(p, q));
            }
        }
        let mut rays = self.vrep.rays.clone();
        rays.extend(other.vrep.rays.iter().cloned());
        Polyhedron::from_generators(self.dim, points, rays)
    }

    /// Closed polyhedral hull of the union: generated by the combined
    /// points and rays. Coincides with the closure of the convex hull.
    pub fn hull_union(&self, other: &Polyhedron) -> Polyhedron {
        debug_assert_eq!(self.dim, other.dim);
        let mut points = self.vrep.points.clone();
        points.extend(other.vrep.points.iter().cloned());
        let mut rays = self.vrep.rays.clone();
        rays.extend(other.vrep.rays.iter().cloned());
        Polyhedron::from_generators(self.dim, points, rays)
    }

    pub fn translate(&self, v: &[Rat]) -> Polyhedron {
        debug_assert_eq!(v.len(), self.dim);
        if self.is_empty() {
            return self.clone();
        }
        let hrep = self
            .hrep
            .iter()
            .map(|h| Halfspace::new(h.normal.clone(), &h.offset + dot(&h.normal, v)).canonicalized())
            .collect();
        let points = self.vrep.points.iter().map(|p| add(p, v)).collect();
        let mut out = Polyhedron { dim: self.dim, hrep, vrep: VRep { points, rays: self.vrep.rays.clone() } };
        out.resort();
        out
    }

    /// Image under positive scaling; `factor <= 0` is rejected.
    pub fn scale(&self, factor: &Rat) -> Result<Polyhedron> {
        if !factor.is_positive() {
            return Err(Error::Parse(format!("scale factor must be positive, got {}", fmt_rat(factor))));
        }
        if self.is_empty() {
            return Ok(self.clone());
        }
        let hrep = self
            .hrep
            .iter()
            .map(|h| Halfspace::new(h.normal.clone(), &h.offset * factor).canonicalized())
            .collect();
        let points = self.vrep.points.iter().map(|p| scale(factor, p)).collect();
        let mut out = Polyhedron { dim: self.dim, hrep, vrep: VRep { points, rays: self.vrep.rays.clone() } };
        out.resort();
        Ok(out)
    }

    /// `{x : normal·x >= 0 for every halfspace}`; `{0}` for the empty set.
    pub fn recession_cone(&self) -> Polyhedron {
        if self.is_empty() {
            return Polyhedron::singleton(zeros(self.dim));
        }
        let rows = self
            .hrep
            .iter()
            .map(|h| Halfspace::new(h.normal.clone(), Rat::zero()))
            .collect();
        Polyhedron::from_halfspaces(self.dim, rows)
    }

    /// Polar of a cone: `{y : y·x >= 0 for all x in C}`, itself a cone
    /// generated by the halfspace normals of `C`.
    pub fn polar_cone(&self) -> Result<Polyhedron> {
        if !self.is_cone() {
            return Err(Error::NotACone("polar is defined for cones only".into()));
        }
        Ok(Polyhedron::cone_from_rays(
            self.dim,
            self.hrep.iter().map(|h| h.normal.clone()).collect(),
        ))
    }

    fn resort(&mut self) {
        self.hrep.sort_by(|a, b| {
            lex_cmp(&a.normal, &b.normal).then_with(|| a.offset.cmp(&b.offset))
        });
        self.vrep.points.sort_by(|a, b| lex_cmp(a, b));
        self.vrep.rays.sort_by(|a, b| lex_cmp(a, b));
    }
}

/// H -> V via double description of the homogenization cone. `None`
/// means the polyhedron is empty.
fn vrep_from_hrep(dim: usize, halfspaces: &[Halfspace]) -> Option<VRep> {
    let mut rows: Vec<Vec<Rat>> = Vec::with_capacity(halfspaces.len() + 1);
    for h in halfspaces {
        let mut row = Vec::with_capacity(dim + 1);
        row.push(-h.offset.clone());
        row.extend(h.normal.iter().cloned());
        rows.push(row);
    }
    let mut x0 = zeros(dim + 1);
    x0[0] = Rat::one();
    rows.push(x0);

    let g = cone_generators(dim + 1, &rows);
    let mut points = Vec::new();
    let mut rays = Vec::new();
    for r in &g.rays {
        match r[0].cmp(&Rat::zero()) {
            Ordering::Greater => points.push(r[1..].iter().map(|x| x / &r[0]).collect()),
            Ordering::Equal => rays.push(r[1..].to_vec()),
            Ordering::Less => unreachable!("homogenization ray below the x0 >= 0 plane"),
        }
    }
    if points.is_empty() {
        return None;
    }
    for l in &g.lineality {
        debug_assert!(l[0].is_zero());
        rays.push(l[1..].to_vec());
        rays.push(neg(&l[1..]));
    }
    points.sort_by(|a, b| lex_cmp(a, b));
    rays.sort_by(|a, b| lex_cmp(a, b));
    Some(VRep { points, rays })
}

/// V -> H by polarity: the facet normals of the homogenization cone are
/// the extreme rays of its polar, computed by the same DD core.
fn hrep_from_vrep(dim: usize, v: &VRep) -> Vec<Halfspace> {
    let mut rows: Vec<Vec<Rat>> = Vec::with_capacity(v.points.len() + v.rays.len());
    for p in &v.points {
        let mut row = Vec::with_capacity(dim + 1);
        row.push(Rat::one());
        row.extend(p.iter().cloned());
        rows.push(row);
    }
    for r in &v.rays {
        let mut row = Vec::with_capacity(dim + 1);
        row.push(Rat::zero());
        row.extend(r.iter().cloned());
        rows.push(row);
    }
    let g = cone_generators(dim + 1, &rows);
    let mut out: Vec<Halfspace> = Vec::new();
    let mut push = |beta: &Rat, a: &[Rat]| {
        if !is_zero_vec(a) {
            out.push(Halfspace::new(a.to_vec(), -beta.clone()).canonicalized());
        }
    };
    for r in &g.rays {
        push(&r[0], &r[1..]);
    }
    for l in &g.lineality {
        push(&l[0], &l[1..]);
        let n = neg(l);
        push(&n[0], &n[1..]);
    }
    out.sort_by(|a, b| lex_cmp(&a.normal, &b.normal).then_with(|| a.offset.cmp(&b.offset)));
    out.dedup();
    out
}

/// Convenience builder for halfspace lists in tests and models.
pub fn hs(normal: Vec<Rat>, offset: Rat) -> Halfspace {
    Halfspace::new(normal, offset)
}

#[allow(unused)]
pub(crate) fn sub_vec(a: &[Rat], b: &[Rat]) -> Vec<Rat> {
    sub(a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{rat, rat_int, unit};

    fn v(xs: &[i64]) -> Vec<Rat> {
        xs.iter().map(|&x| rat_int(x)).collect()
    }

    fn vr(xs: &[(i64, i64)]) -> Vec<Rat> {
        xs.iter().map(|&(n, d)| rat(n, d)).collect()
    }

    #[test]
    fn halfplane_conversion_has_base_point_and_line() {
        // {10 x1 + x2 >= 14/3}
        let p = Polyhedron::from_halfspaces(2, vec![hs(v(&[10, 1]), rat(14, 3))]);
        assert!(!p.is_empty());
        assert_eq!(p.points(), &[vr(&[(0, 1), (14, 3)])]);
        // the boundary line as a ray pair plus one interior direction
        assert_eq!(p.rays(), &[v(&[-1, 10]), v(&[0, 1]), v(&[1, -10])]);
        // round trip preserves the set and the representation
        let q = Polyhedron::from_generators(2, p.points().to_vec(), p.rays().to_vec());
        assert!(p.eq_set(&q));
        assert_eq!(p, q);
    }

    #[test]
    fn orthant_from_generators() {
        let p = Polyhedron::from_generators(2, vec![v(&[0, 0])], vec![unit(2, 0), unit(2, 1)]);
        assert_eq!(
            p.halfspaces(),
            &[hs(v(&[0, 1]), rat_int(0)), hs(v(&[1, 0]), rat_int(0))]
        );
        assert!(p.is_cone());
    }

    #[test]
    fn golden_vrep_to_hrep() {
        // points (0,6), (5/4,-17/2); rays (1,-10), (-1,14)
        let p = Polyhedron::from_generators(
            2,
            vec![vr(&[(0, 1), (6, 1)]), vr(&[(5, 4), (-17, 2)])],
            vec![v(&[1, -10]), v(&[-1, 14])],
        );
        let expect = vec![
            hs(v(&[10, 1]), rat_int(4)),
            hs(v(&[14, 1]), rat_int(6)),
            hs(v(&[58, 5]), rat_int(30)),
        ];
        let q = Polyhedron::from_halfspaces(2, expect);
        assert!(p.eq_set(&q));
        assert_eq!(p.halfspaces().len(), 3);
    }

    #[test]
    fn intersection_examples() {
        let a = Polyhedron::from_halfspaces(2, vec![hs(v(&[14, 1]), rat_int(9))]);
        let b = Polyhedron::from_halfspaces(2, vec![hs(v(&[10, 1]), rat_int(4))]);
        let w = a.intersect(&b);
        assert_eq!(w.points(), &[vr(&[(5, 4), (-17, 2)])]);

        assert!(a.intersect(&a).eq_set(&a));

        let lo = Polyhedron::from_halfspaces(1, vec![hs(v(&[1]), rat_int(1))]);
        let hi = Polyhedron::from_halfspaces(1, vec![hs(v(&[-1]), rat_int(0))]);
        assert!(lo.intersect(&hi).is_empty());
    }

    #[test]
    fn minkowski_examples() {
        // W + Q = W when every ray of Q is a recession direction of W
        let w = Polyhedron::from_halfspaces(2, vec![hs(v(&[14, 1]), rat_int(9)), hs(v(&[10, 1]), rat_int(4))]);
        let q = Polyhedron::from_halfspaces(2, vec![hs(v(&[14, 1]), rat_int(0)), hs(v(&[10, 1]), rat_int(0))]);
        assert!(w.minkowski_sum(&q).eq_set(&w));

        let zero = Polyhedron::singleton(v(&[0, 0]));
        assert!(w.minkowski_sum(&zero).eq_set(&w));

        let orthant = Polyhedron::cone_from_rays(2, vec![unit(2, 0), unit(2, 1)]);
        assert!(zero.minkowski_sum(&orthant).eq_set(&orthant));
    }

    #[test]
    fn hull_union_examples() {
        let seg = Polyhedron::singleton(v(&[1, 0])).hull_union(&Polyhedron::singleton(v(&[0, 1])));
        assert_eq!(seg.points().len(), 2);
        assert!(seg.contains(&vr(&[(1, 2), (1, 2)])));
        assert!(!seg.contains(&v(&[1, 1])));

        let w = Polyhedron::from_halfspaces(2, vec![hs(v(&[14, 1]), rat_int(9)), hs(v(&[10, 1]), rat_int(4))]);
        assert!(w.hull_union(&w).eq_set(&w));
    }

    #[test]
    fn translate_scale_recession() {
        let q0 = Polyhedron::from_halfspaces(2, vec![hs(v(&[10, 1]), rat_int(0))]);
        let x0 = q0.translate(&v(&[0, 5]));
        assert_eq!(x0.halfspaces(), &[hs(v(&[10, 1]), rat_int(5))]);

        let z0 = Polyhedron::from_halfspaces(2, vec![hs(v(&[10, 1]), rat(14, 3))]);
        let doubled = z0.scale(&rat_int(2)).unwrap();
        assert_eq!(doubled.halfspaces(), &[hs(v(&[30, 3]), rat_int(28)).canonicalized()]);
        assert!(z0.scale(&rat_int(0)).is_err());
        assert!(z0.scale(&rat_int(-1)).is_err());

        assert!(z0.recession_cone().eq_set(&q0));
    }

    #[test]
    fn membership_and_subset() {
        let x0b = Polyhedron::from_halfspaces(2, vec![hs(v(&[10, 1]), rat_int(-5))]);
        let y0b = Polyhedron::from_halfspaces(2, vec![hs(v(&[10, 1]), rat_int(0))]);
        let z = vr(&[(0, 1), (-11, 3)]);
        assert!(x0b.contains(&z));
        assert!(!y0b.contains(&z));
        for p in x0b.points() {
            assert!(x0b.contains(p));
        }
        assert!(y0b.subset(&x0b));
        assert!(!x0b.subset(&y0b));
    }

    #[test]
    fn axis_minimum() {
        let z0a = Polyhedron::from_halfspaces(2, vec![hs(v(&[10, 1]), rat(14, 3))]);
        assert_eq!(z0a.min_along_axis(1), AxisMin::Value(rat(14, 3)));
        let z0b = Polyhedron::from_halfspaces(2, vec![hs(v(&[10, 1]), rat(-11, 3))]);
        assert_eq!(z0b.min_along_axis(1), AxisMin::Value(rat(-11, 3)));
        assert_eq!(Polyhedron::full_space(2).min_along_axis(0), AxisMin::Unbounded);
        assert_eq!(Polyhedron::empty(2).min_along_axis(0), AxisMin::Empty);
        // axis misses the set entirely
        let shifted = Polyhedron::from_halfspaces(
            2,
            vec![hs(v(&[1, 0]), rat_int(1)), hs(v(&[0, 1]), rat_int(1)), hs(v(&[0, -1]), rat_int(-2))],
        );
        assert_eq!(shifted.min_along_axis(0), AxisMin::Empty);
    }

    #[test]
    fn polar_examples() {
        let q0 = Polyhedron::from_halfspaces(2, vec![hs(v(&[10, 1]), rat_int(0))]);
        let polar = q0.polar_cone().unwrap();
        assert_eq!(polar.rays(), &[v(&[10, 1])]);

        let orthant = Polyhedron::cone_from_rays(2, vec![unit(2, 0), unit(2, 1)]);
        assert!(orthant.polar_cone().unwrap().eq_set(&orthant));

        let not_cone = Polyhedron::singleton(v(&[1, 1]));
        assert!(not_cone.polar_cone().is_err());
    }

    #[test]
    fn empty_set_is_representable() {
        let e = Polyhedron::empty(3);
        assert!(e.is_empty());
        assert!(!e.contains(&zeros(3)));
        assert!(e.subset(&Polyhedron::full_space(3)));
        assert!(!Polyhedron::full_space(3).subset(&e));
        assert!(e.intersect(&Polyhedron::full_space(3)).is_empty());
        assert!(e.minkowski_sum(&Polyhedron::full_space(3)).is_empty());
        assert!(e.hull_union(&Polyhedron::singleton(zeros(3))).eq_set(&Polyhedron::singleton(zeros(3))));
    }
}
