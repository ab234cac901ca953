//! Polyhedral convex geometry in the planar wrench space `(f_x, f_z, tau_y)`.
//!
//! Cones are stored generator-first. Face normals are derived when the
//! generators span all three dimensions and act as a fast membership test;
//! lower-dimensional cones (a single point pusher, a frictionless contact)
//! are decided by LP feasibility instead.
//!
//! Everything here is unit-agnostic. Callers are expected to hand in
//! wrenches whose force and torque components are comparable in scale.

pub mod lp;

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use nalgebra::{Matrix2, Vector2, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use lp::{LpOutcome, StandardLp};

/// Tolerance on facet projections of unit-normalized wrenches.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Generators closer than this (in cosine) are treated as the same ray.
const PARALLEL_COS: f64 = 1.0 - 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConeError {
    #[error("cone is degenerate: generators span rank {rank} < 3")]
    DegenerateCone { rank: usize },
}

/// A planar wrench (or impulse): in-plane force and torque about the grasp normal.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Wrench {
    pub fx: f64,
    pub fz: f64,
    pub tau: f64,
}

impl Wrench {
    pub const ZERO: Wrench = Wrench {
        fx: 0.0,
        fz: 0.0,
        tau: 0.0,
    };

    pub const fn new(fx: f64, fz: f64, tau: f64) -> Self {
        Self { fx, fz, tau }
    }

    /// Wrench of force `force` applied at `lever` (relative to the reference point).
    /// The torque is the Y component of `lever x force`.
    pub fn from_force_at(force: Vector2<f64>, lever: Vector2<f64>) -> Self {
        Self::new(force.x, force.y, lever.y * force.x - lever.x * force.y)
    }

    pub fn vec(&self) -> Vector3<f64> {
        Vector3::new(self.fx, self.fz, self.tau)
    }

    pub fn force(&self) -> Vector2<f64> {
        Vector2::new(self.fx, self.fz)
    }

    pub fn dot(&self, other: &Wrench) -> f64 {
        self.fx * other.fx + self.fz * other.fz + self.tau * other.tau
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.fx.is_finite() && self.fz.is_finite() && self.tau.is_finite()
    }

    /// Applies a linear map to the force components, leaving torque alone.
    pub fn map_force(&self, m: &Matrix2<f64>) -> Self {
        let f = m * self.force();
        Self::new(f.x, f.y, self.tau)
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.fx, self.fz, self.tau]
    }
}

impl From<Vector3<f64>> for Wrench {
    fn from(v: Vector3<f64>) -> Self {
        Self::new(v.x, v.y, v.z)
    }
}

impl From<[f64; 3]> for Wrench {
    fn from(v: [f64; 3]) -> Self {
        Self::new(v[0], v[1], v[2])
    }
}

impl Add for Wrench {
    type Output = Wrench;
    fn add(self, o: Wrench) -> Wrench {
        Wrench::new(self.fx + o.fx, self.fz + o.fz, self.tau + o.tau)
    }
}

impl AddAssign for Wrench {
    fn add_assign(&mut self, o: Wrench) {
        *self = *self + o;
    }
}

impl Sub for Wrench {
    type Output = Wrench;
    fn sub(self, o: Wrench) -> Wrench {
        Wrench::new(self.fx - o.fx, self.fz - o.fz, self.tau - o.tau)
    }
}

impl Neg for Wrench {
    type Output = Wrench;
    fn neg(self) -> Wrench {
        Wrench::new(-self.fx, -self.fz, -self.tau)
    }
}

impl Mul<f64> for Wrench {
    type Output = Wrench;
    fn mul(self, s: f64) -> Wrench {
        Wrench::new(self.fx * s, self.fz * s, self.tau * s)
    }
}

impl std::iter::Sum for Wrench {
    fn sum<I: Iterator<Item = Wrench>>(iter: I) -> Wrench {
        iter.fold(Wrench::ZERO, Add::add)
    }
}

/// Conical hull of a finite set of wrench rays.
#[derive(Debug, Clone, PartialEq)]
pub struct WrenchCone {
    generators: Vec<Wrench>,
    face_normals: Option<Vec<Wrench>>,
    rank: usize,
}

impl WrenchCone {
    /// Builds a cone from rays. Zero rays are dropped, the rest are scaled to
    /// unit length and duplicate directions are merged.
    pub fn new<I: IntoIterator<Item = Wrench>>(rays: I) -> Self {
        let mut generators: Vec<Wrench> = Vec::new();
        for ray in rays {
            let n = ray.norm();
            if !(n > 0.0) || !n.is_finite() {
                continue;
            }
            let unit = if (n - 1.0).abs() <= 4.0 * f64::EPSILON {
                ray
            } else {
                ray * (1.0 / n)
            };
            if generators.iter().all(|g| g.dot(&unit) < PARALLEL_COS) {
                generators.push(unit);
            }
        }
        let rank = span_rank(&generators);
        let face_normals = (rank == 3).then(|| facets_of(&generators));
        Self {
            generators,
            face_normals,
            rank,
        }
    }

    /// The cone `{0}`.
    pub fn zero() -> Self {
        Self::new(std::iter::empty())
    }

    /// Unit-length generators.
    pub fn generators(&self) -> &[Wrench] {
        &self.generators
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn is_full_dimensional(&self) -> bool {
        self.rank == 3
    }

    /// Outward facet normals (unit length): `w` is in the cone iff `n·w <= 0` for all `n`.
    pub fn face_normals(&self) -> Result<&[Wrench], ConeError> {
        self.face_normals
            .as_deref()
            .ok_or(ConeError::DegenerateCone { rank: self.rank })
    }

    pub fn contains(&self, w: &Wrench) -> bool {
        self.contains_with_tol(w, DEFAULT_TOL)
    }

    pub fn contains_with_tol(&self, w: &Wrench, tol: f64) -> bool {
        let n = w.norm();
        if n == 0.0 {
            return true;
        }
        let unit = *w * (1.0 / n);
        match &self.face_normals {
            Some(normals) => normals.iter().all(|f| f.dot(&unit) <= tol),
            None => self.contains_by_lp(w, tol),
        }
    }

    /// Membership by LP feasibility of `G l = w`, `l >= 0`, ignoring any
    /// cached facets. This is the only path for degenerate cones.
    pub fn contains_by_lp(&self, w: &Wrench, tol: f64) -> bool {
        let n = w.norm();
        if n == 0.0 {
            return true;
        }
        if self.generators.is_empty() {
            return false;
        }
        let mut lp = StandardLp::new(3, self.generators.len());
        for (j, g) in self.generators.iter().enumerate() {
            for (r, v) in g.to_array().into_iter().enumerate() {
                lp.set(r, j, v);
            }
        }
        lp.b = (*w * (1.0 / n)).to_array().to_vec();
        !matches!(lp.solve(tol), LpOutcome::Infeasible)
    }

    /// Largest facet projection of the unit-normalized `w`: negative inside,
    /// positive outside. `None` for degenerate cones or `w = 0`.
    pub fn facet_excess(&self, w: &Wrench) -> Option<f64> {
        let normals = self.face_normals.as_ref()?;
        let n = w.norm();
        if n == 0.0 {
            return None;
        }
        let unit = *w * (1.0 / n);
        Some(
            normals
                .iter()
                .map(|f| f.dot(&unit))
                .fold(f64::NEG_INFINITY, f64::max),
        )
    }

    /// Applies a planar rotation to the force components of every generator.
    pub fn map_force(&self, m: &Matrix2<f64>) -> Self {
        Self::new(self.generators.iter().map(|g| g.map_force(m)))
    }
}

/// Bounded convex hull of finitely many wrenches.
#[derive(Debug, Clone, PartialEq)]
pub struct WrenchPolytope {
    vertices: Vec<Wrench>,
}

impl WrenchPolytope {
    /// # Panics
    /// If `vertices` is empty.
    pub fn new(vertices: Vec<Wrench>) -> Self {
        assert!(!vertices.is_empty(), "polytope needs at least one vertex");
        Self { vertices }
    }

    pub fn singleton(w: Wrench) -> Self {
        Self { vertices: vec![w] }
    }

    pub fn vertices(&self) -> &[Wrench] {
        &self.vertices
    }

    pub fn negated(&self) -> Self {
        Self::new(self.vertices.iter().map(|v| -*v).collect())
    }

    pub fn map_force(&self, m: &Matrix2<f64>) -> Self {
        Self::new(self.vertices.iter().map(|v| v.map_force(m)).collect())
    }

    /// Minkowski sum with another polytope. Points that are convex
    /// combinations of the others are pruned.
    pub fn minkowski_sum(&self, other: &WrenchPolytope) -> Self {
        let mut sums = Vec::with_capacity(self.vertices.len() * other.vertices.len());
        for a in &self.vertices {
            for b in &other.vertices {
                sums.push(*a + *b);
            }
        }
        if self.vertices.len() == 1 || other.vertices.len() == 1 {
            return Self::new(sums);
        }
        Self::new(prune_interior(sums))
    }

    pub fn contains(&self, w: &Wrench) -> bool {
        let scale = self
            .vertices
            .iter()
            .map(Wrench::norm)
            .fold(w.norm(), f64::max)
            .max(f64::MIN_POSITIVE);
        in_convex_hull(&self.vertices, w, scale, DEFAULT_TOL)
    }
}

/// Witness for a point shared by a polytope and a cone, with the largest
/// uniform lower bound on the cone generator weights.
#[derive(Debug, Clone, PartialEq)]
pub struct IntersectionWitness {
    /// Minimum generator weight, in units of the polytope scale.
    pub margin: f64,
    /// Convex weights over the polytope vertices.
    pub vertex_weights: Vec<f64>,
    /// Nonnegative weights over the (unit) cone generators.
    pub generator_weights: Vec<f64>,
    /// The shared point.
    pub point: Wrench,
}

/// Conical hull of the union of the inputs' generators.
pub fn conical_sum(cones: &[WrenchCone]) -> WrenchCone {
    WrenchCone::new(cones.iter().flat_map(|c| c.generators.iter().copied()))
}

/// Outward facet normals of a full-dimensional cone.
pub fn face_normals(cone: &WrenchCone) -> Result<Vec<Wrench>, ConeError> {
    cone.face_normals().map(<[Wrench]>::to_vec)
}

pub fn cone_contains(cone: &WrenchCone, w: &Wrench) -> bool {
    cone.contains(w)
}

pub fn minkowski_sum_point_polytope(w: &Wrench, p: &WrenchPolytope) -> WrenchPolytope {
    WrenchPolytope::new(p.vertices.iter().map(|v| *v + *w).collect())
}

/// Whether the polytope and the cone share a point.
pub fn polytope_cone_intersects(p: &WrenchPolytope, c: &WrenchCone) -> bool {
    max_margin_intersection(p, c, DEFAULT_TOL).is_some()
}

/// Finds a common point of `p` and `c` that maximizes the smallest cone
/// generator weight (capped at 1 in normalized units). Returns `None` when
/// the sets are disjoint.
///
/// Variables: vertex weights `l_j`, generator slack `s_k`, margin `t`, cap
/// slack `u`; generator weights are `t + s_k`.
pub fn max_margin_intersection(
    p: &WrenchPolytope,
    c: &WrenchCone,
    tol: f64,
) -> Option<IntersectionWitness> {
    let scale = p
        .vertices
        .iter()
        .map(Wrench::norm)
        .fold(0.0, f64::max);
    if scale == 0.0 {
        // p = {0}: the apex, which is never interior.
        return Some(IntersectionWitness {
            margin: 0.0,
            vertex_weights: uniform(p.vertices.len()),
            generator_weights: vec![0.0; c.generators.len()],
            point: Wrench::ZERO,
        });
    }
    let nv = p.vertices.len();
    let ng = c.generators.len();
    let cols = nv + ng + 2;
    let t_col = nv + ng;
    let u_col = t_col + 1;
    let mut lp = StandardLp::new(5, cols);
    let gsum: Wrench = c.generators.iter().copied().sum();
    for (j, v) in p.vertices.iter().enumerate() {
        for (r, x) in (*v * (1.0 / scale)).to_array().into_iter().enumerate() {
            lp.set(r, j, x);
        }
        lp.set(3, j, 1.0);
    }
    for (k, g) in c.generators.iter().enumerate() {
        for (r, x) in g.to_array().into_iter().enumerate() {
            lp.set(r, nv + k, -x);
        }
    }
    for (r, x) in gsum.to_array().into_iter().enumerate() {
        lp.set(r, t_col, -x);
    }
    lp.set(4, t_col, 1.0);
    lp.set(4, u_col, 1.0);
    lp.b = vec![0.0, 0.0, 0.0, 1.0, 1.0];
    lp.c[t_col] = 1.0;
    match lp.solve(tol) {
        LpOutcome::Optimal { x, .. } => {
            let margin = x[t_col];
            let vertex_weights = x[..nv].to_vec();
            let generator_weights: Vec<f64> =
                (0..ng).map(|k| (x[nv + k] + margin) * scale).collect();
            let point = p
                .vertices
                .iter()
                .zip(&vertex_weights)
                .map(|(v, l)| *v * *l)
                .sum();
            Some(IntersectionWitness {
                margin,
                vertex_weights,
                generator_weights,
                point,
            })
        }
        LpOutcome::Infeasible => None,
        // t is capped, so unboundedness cannot occur.
        LpOutcome::Unbounded => unreachable!("margin LP is bounded"),
    }
}

fn uniform(n: usize) -> Vec<f64> {
    vec![1.0 / n as f64; n]
}

/// Rank of the span of unit vectors (0..=3).
fn span_rank(gens: &[Wrench]) -> usize {
    const EPS: f64 = 1e-10;
    let Some(first) = gens.first() else {
        return 0;
    };
    let a = first.vec();
    let mut plane: Option<Vector3<f64>> = None;
    for g in &gens[1..] {
        let cross = a.cross(&g.vec());
        if cross.norm() > EPS {
            plane = Some(cross.normalize());
            break;
        }
    }
    let Some(normal) = plane else {
        return 1;
    };
    if gens.iter().any(|g| normal.dot(&g.vec()).abs() > EPS) {
        3
    } else {
        2
    }
}

/// Facets of a full-dimensional cone: every plane through two generators
/// that leaves all generators on one side.
fn facets_of(gens: &[Wrench]) -> Vec<Wrench> {
    const SIDE_TOL: f64 = 1e-12;
    let mut normals: Vec<Wrench> = Vec::new();
    for i in 0..gens.len() {
        for j in i + 1..gens.len() {
            let cross = gens[i].vec().cross(&gens[j].vec());
            let len = cross.norm();
            if len < 1e-10 {
                continue;
            }
            let n = Wrench::from(cross / len);
            let (mut pos, mut neg) = (false, false);
            for g in gens {
                let d = n.dot(g);
                pos |= d > SIDE_TOL;
                neg |= d < -SIDE_TOL;
                if pos && neg {
                    break;
                }
            }
            let outward = match (pos, neg) {
                (false, _) => n,
                (true, false) => -n,
                (true, true) => continue,
            };
            if normals.iter().all(|m| m.dot(&outward) < PARALLEL_COS) {
                normals.push(outward);
            }
        }
    }
    normals
}

fn in_convex_hull(points: &[Wrench], w: &Wrench, scale: f64, tol: f64) -> bool {
    let mut lp = StandardLp::new(4, points.len());
    for (j, v) in points.iter().enumerate() {
        for (r, x) in (*v * (1.0 / scale)).to_array().into_iter().enumerate() {
            lp.set(r, j, x);
        }
        lp.set(3, j, 1.0);
    }
    let target = *w * (1.0 / scale);
    lp.b = vec![target.fx, target.fz, target.tau, 1.0];
    !matches!(lp.solve(tol), LpOutcome::Infeasible)
}

fn prune_interior(points: Vec<Wrench>) -> Vec<Wrench> {
    let scale = points
        .iter()
        .map(Wrench::norm)
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let mut kept: Vec<Wrench> = Vec::new();
    for (i, p) in points.iter().enumerate() {
        if kept.iter().any(|k| (*k - *p).norm() <= 1e-12 * scale) {
            continue;
        }
        let others: Vec<Wrench> = points
            .iter()
            .enumerate()
            .filter(|(j, q)| *j != i && (**q - *p).norm() > 1e-12 * scale)
            .map(|(_, q)| *q)
            .collect();
        if others.is_empty() || !in_convex_hull(&others, p, scale, 1e-12) {
            kept.push(*p);
        }
    }
    kept
}
