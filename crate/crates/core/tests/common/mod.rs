//! Independent oracles and random instances shared by the integration tests.
#![allow(dead_code)]

pub mod physics;

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use nalgebra::{DMatrix, DVector, Vector3};
use prepush::cone::{WrenchCone, WrenchPolytope};
use prepush::Wrench;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Lawson–Hanson non-negative least squares: argmin |A x - b| with x >= 0.
pub fn nnls(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let n = a.ncols();
    let mut x = DVector::zeros(n);
    let mut passive = vec![false; n];
    let tol = 1e-13 * a.norm().max(1.0) * b.norm().max(1.0);
    for _ in 0..(3 * n + 10) {
        let w = a.transpose() * (b - a * &x);
        let Some((j, wj)) = (0..n)
            .filter(|&j| !passive[j])
            .map(|j| (j, w[j]))
            .max_by(|p, q| p.1.total_cmp(&q.1))
        else {
            break;
        };
        if wj <= tol {
            break;
        }
        passive[j] = true;
        loop {
            let idx: Vec<usize> = (0..n).filter(|&i| passive[i]).collect();
            let ap = a.select_columns(&idx);
            let zp = ap
                .clone()
                .svd(true, true)
                .solve(b, 1e-14)
                .expect("svd solve");
            if zp.iter().all(|&v| v > 0.0) {
                x.fill(0.0);
                for (k, &i) in idx.iter().enumerate() {
                    x[i] = zp[k];
                }
                break;
            }
            let mut alpha = f64::INFINITY;
            for (k, &i) in idx.iter().enumerate() {
                if zp[k] <= 0.0 {
                    let d = x[i] - zp[k];
                    if d > 0.0 {
                        alpha = alpha.min(x[i] / d);
                    } else {
                        alpha = 0.0;
                    }
                }
            }
            for (k, &i) in idx.iter().enumerate() {
                x[i] += alpha * (zp[k] - x[i]);
                if x[i] <= 1e-15 {
                    x[i] = 0.0;
                    passive[i] = false;
                }
            }
            if idx.iter().all(|&i| !passive[i]) {
                break;
            }
        }
    }
    x
}

fn columns(gens: &[Wrench]) -> DMatrix<f64> {
    DMatrix::from_fn(3, gens.len(), |r, c| gens[c].to_array()[r])
}

/// Relative NNLS residual of `w` against the cone generators.
pub fn nnls_residual(gens: &[Wrench], w: &Wrench) -> f64 {
    let n = w.norm();
    if n == 0.0 {
        return 0.0;
    }
    if gens.is_empty() {
        return 1.0;
    }
    let a = columns(gens);
    let b = DVector::from_row_slice(&(*w * (1.0 / n)).to_array());
    let x = nnls(&a, &b);
    (a * x - b).norm()
}

/// Largest `t <= 1` with `w/|w| = sum l_k g_k` and every `l_k >= t`, by minilp.
/// Positive: strictly inside. Negative: outside. `None`: not in the span.
pub fn minilp_cone_depth(gens: &[Wrench], w: &Wrench) -> Option<f64> {
    let unit = *w * (1.0 / w.norm());
    let mut p = Problem::new(OptimizationDirection::Maximize);
    let t = p.add_var(1.0, (f64::NEG_INFINITY, 1.0));
    let ls: Vec<_> = gens.iter().map(|_| p.add_var(0.0, (f64::NEG_INFINITY, f64::INFINITY))).collect();
    for &l in &ls {
        p.add_constraint(vec![(l, 1.0), (t, -1.0)], ComparisonOp::Ge, 0.0);
    }
    for r in 0..3 {
        let terms: Vec<_> = gens.iter().zip(&ls).map(|(g, &l)| (l, g.to_array()[r])).collect();
        p.add_constraint(terms, ComparisonOp::Eq, unit.to_array()[r]);
    }
    p.solve().ok().map(|s| s.objective())
}

/// The max-min-generator-weight intersection LP, solved by minilp.
/// `t` is free below, so a negative optimum means the sets are disjoint.
pub fn minilp_intersection_margin(poly: &WrenchPolytope, cone: &WrenchCone) -> Option<f64> {
    let verts = poly.vertices();
    let scale = verts.iter().map(Wrench::norm).fold(0.0, f64::max);
    let gens = cone.generators();
    let mut p = Problem::new(OptimizationDirection::Maximize);
    let t = p.add_var(1.0, (f64::NEG_INFINITY, 1.0));
    let ls: Vec<_> = verts.iter().map(|_| p.add_var(0.0, (0.0, f64::INFINITY))).collect();
    let gs: Vec<_> = gens.iter().map(|_| p.add_var(0.0, (f64::NEG_INFINITY, f64::INFINITY))).collect();
    for &g in &gs {
        p.add_constraint(vec![(g, 1.0), (t, -1.0)], ComparisonOp::Ge, 0.0);
    }
    for r in 0..3 {
        let mut terms: Vec<_> = verts.iter().zip(&ls).map(|(v, &l)| (l, v.to_array()[r] / scale)).collect();
        terms.extend(gens.iter().zip(&gs).map(|(g, &k)| (k, -g.to_array()[r])));
        p.add_constraint(terms, ComparisonOp::Eq, 0.0);
    }
    p.add_constraint(ls.iter().map(|&l| (l, 1.0)).collect::<Vec<_>>(), ComparisonOp::Eq, 1.0);
    p.solve().ok().map(|s| s.objective())
}

/// Outward facet normals by brute force over generator pairs, written
/// independently of the library's version. Full-dimensional pointed cones only.
pub fn brute_facets(gens: &[Wrench]) -> Vec<Vector3<f64>> {
    let mut out: Vec<Vector3<f64>> = Vec::new();
    for i in 0..gens.len() {
        for j in 0..gens.len() {
            if i == j {
                continue;
            }
            let c = gens[i].vec().cross(&gens[j].vec());
            if c.norm() < 1e-9 {
                continue;
            }
            let n = c.normalize();
            if gens.iter().all(|g| n.dot(&g.vec()) <= 1e-12) && !out.iter().any(|m| (m - n).norm() < 1e-9) {
                out.push(n);
            }
        }
    }
    out
}

pub fn unit(rng: &mut ChaCha8Rng) -> Wrench {
    loop {
        let v = Vector3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let n = v.norm();
        if n > 0.1 && n <= 1.0 {
            return Wrench::from(v / n);
        }
    }
}

/// Unit ray within `half_angle` of `axis`.
pub fn ray_in_cap(rng: &mut ChaCha8Rng, axis: &Wrench, half_angle: f64) -> Wrench {
    loop {
        let u = unit(rng);
        if u.dot(axis) >= half_angle.cos() {
            return u;
        }
    }
}

/// Random cone: usually pointed (generators in a cap), sometimes arbitrary,
/// sometimes degenerate (one or two rays).
pub fn random_cone(rng: &mut ChaCha8Rng) -> WrenchCone {
    let kind = rng.gen_range(0..10);
    let axis = unit(rng);
    let count = match kind {
        0 => 1,
        1 => 2,
        _ => rng.gen_range(3..9),
    };
    let spread = rng.gen_range(0.2..1.3);
    let gens: Vec<Wrench> = (0..count)
        .map(|_| if kind == 9 { unit(rng) } else { ray_in_cap(rng, &axis, spread) })
        .collect();
    WrenchCone::new(gens)
}

/// Query wrench: half near the cone's generators, half anywhere.
pub fn random_query(rng: &mut ChaCha8Rng, cone: &WrenchCone) -> Wrench {
    let g = cone.generators();
    if !g.is_empty() && rng.gen_bool(0.5) {
        let mut w = Wrench::ZERO;
        for r in g {
            w += *r * rng.gen_range(-0.3..1.0);
        }
        if w.norm() > 1e-6 {
            return w * rng.gen_range(0.01..100.0);
        }
    }
    unit(rng) * rng.gen_range(0.01..100.0)
}

pub fn random_polytope(rng: &mut ChaCha8Rng, center: Wrench, radius: f64) -> WrenchPolytope {
    let n = rng.gen_range(1..6);
    WrenchPolytope::new((0..n).map(|_| center + unit(rng) * (radius * rng.gen_range(0.0..1.0))).collect())
}

/// Oracle verdict for membership, or `None` when either oracle is marginal.
pub fn oracle_membership(gens: &[Wrench], w: &Wrench) -> Option<bool> {
    if w.norm() == 0.0 {
        return Some(true);
    }
    let res = nnls_residual(gens, w);
    let by_nnls = if res < 1e-9 {
        true
    } else if res > 1e-6 {
        false
    } else {
        return None;
    };
    let by_lp = match minilp_cone_depth(gens, w) {
        None => false,
        Some(t) if t > 1e-6 => true,
        Some(t) if t < -1e-6 => false,
        Some(_) => return None,
    };
    // The two oracles must agree with each other on every decided case.
    assert_eq!(by_nnls, by_lp, "oracles disagree for {w:?} in {gens:?}");
    Some(by_nnls)
}

/// Oracle verdict for polytope/cone intersection, `None` when marginal.
pub fn oracle_intersects(poly: &WrenchPolytope, cone: &WrenchCone) -> Option<bool> {
    match minilp_intersection_margin(poly, cone) {
        None => Some(false),
        Some(t) if t > 1e-6 => Some(true),
        Some(t) if t < -1e-6 => Some(false),
        Some(_) => None,
    }
}
