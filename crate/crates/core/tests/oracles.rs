mod common;

use common::*;
use prepush::cone::{conical_sum, max_margin_intersection, polytope_cone_intersects, WrenchCone, WrenchPolytope, DEFAULT_TOL};
use prepush::Wrench;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn nnls_recovers_a_known_nonnegative_solution() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..200 {
        let gens: Vec<Wrench> = (0..3).map(|_| unit(&mut rng)).collect();
        let w: Wrench = gens.iter().map(|g| *g * rng.gen_range(0.1..2.0)).sum();
        assert!(nnls_residual(&gens, &w) < 1e-9);
        assert!(nnls_residual(&gens, &-w) > 1e-3 || minilp_cone_depth(&gens, &-w).unwrap_or(-1.0) > 0.0);
    }
}

#[test]
fn membership_matches_nnls_and_lp() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut decided, mut inside) = (0, 0);
    for _ in 0..10_000 {
        let cone = random_cone(&mut rng);
        let w = random_query(&mut rng, &cone);
        let Some(expected) = oracle_membership(cone.generators(), &w) else {
            continue;
        };
        decided += 1;
        inside += expected as usize;
        assert_eq!(cone.contains(&w), expected, "{w:?} in {:?}", cone.generators());
        assert_eq!(cone.contains_by_lp(&w, DEFAULT_TOL), expected);
    }
    assert!(decided > 9_000, "only {decided} decided");
    assert!(inside > 1_000 && decided - inside > 1_000, "unbalanced: {inside}/{decided}");
}

#[test]
fn facet_test_agrees_with_lp_membership() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut checked = 0;
    while checked < 10_000 {
        let cone = random_cone(&mut rng);
        if !cone.is_full_dimensional() {
            continue;
        }
        let w = random_query(&mut rng, &cone);
        let excess = cone.facet_excess(&w).unwrap();
        if excess.abs() < 1e-7 {
            continue;
        }
        checked += 1;
        assert_eq!(excess <= 0.0, cone.contains_by_lp(&w, DEFAULT_TOL));
    }
}

#[test]
fn facets_match_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut checked = 0;
    while checked < 2_000 {
        let cone = random_cone(&mut rng);
        let Ok(normals) = cone.face_normals() else {
            continue;
        };
        let brute = brute_facets(cone.generators());
        if brute.is_empty() {
            // Not pointed: any facet must still support every generator.
            for n in normals {
                assert!(cone.generators().iter().all(|g| n.dot(g) <= 1e-9));
            }
            continue;
        }
        checked += 1;
        for n in normals {
            assert!(brute.iter().any(|b| (b - n.vec()).norm() < 1e-6), "extra facet {n:?}");
        }
        for b in &brute {
            assert!(normals.iter().any(|n| (b - n.vec()).norm() < 1e-6), "missing facet {b:?}");
        }
    }
}

#[test]
fn conical_sum_contains_samples_and_nothing_else() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..10_000 {
        let a = random_cone(&mut rng);
        let b = random_cone(&mut rng);
        let s = conical_sum(&[a.clone(), b.clone()]);
        let inside: Wrench = a
            .generators()
            .iter()
            .chain(b.generators())
            .map(|g| *g * rng.gen_range(0.0..1.0))
            .sum();
        if inside.norm() > 1e-6 {
            assert!(s.contains(&inside));
        }
        let mut union: Vec<Wrench> = a.generators().to_vec();
        union.extend_from_slice(b.generators());
        let q = unit(&mut rng);
        if let Some(expected) = oracle_membership(&union, &q) {
            assert_eq!(s.contains(&q), expected);
        }
    }
}

#[test]
fn intersection_matches_lp_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let (mut decided, mut hits) = (0, 0);
    for _ in 0..10_000 {
        let cone = random_cone(&mut rng);
        let center = random_query(&mut rng, &cone);
        let radius = center.norm() * rng.gen_range(0.0..1.5);
        let poly = random_polytope(&mut rng, center, radius);
        let Some(expected) = oracle_intersects(&poly, &cone) else {
            continue;
        };
        decided += 1;
        hits += expected as usize;
        assert_eq!(polytope_cone_intersects(&poly, &cone), expected);
        if expected {
            let wit = max_margin_intersection(&poly, &cone, DEFAULT_TOL).unwrap();
            let reference = minilp_intersection_margin(&poly, &cone).unwrap();
            assert!((wit.margin - reference).abs() < 1e-7, "{} vs {reference}", wit.margin);
            assert!(poly.contains(&wit.point));
            let rebuilt: Wrench = cone
                .generators()
                .iter()
                .zip(&wit.generator_weights)
                .map(|(g, l)| *g * *l)
                .sum();
            assert!((rebuilt - wit.point).norm() <= 1e-7 * (1.0 + wit.point.norm()));
            assert!(wit.vertex_weights.iter().all(|&l| l >= -1e-12));
            assert!((wit.vertex_weights.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }
    assert!(decided > 9_000);
    assert!(hits > 1_000 && decided - hits > 1_000, "unbalanced: {hits}/{decided}");
}

fn sample_in(rng: &mut ChaCha8Rng, poly: &WrenchPolytope) -> Wrench {
    let w: Vec<f64> = poly.vertices().iter().map(|_| -rng.gen_range(1e-12f64..1.0).ln()).collect();
    let total: f64 = w.iter().sum();
    poly.vertices().iter().zip(&w).map(|(v, l)| *v * (l / total)).sum()
}

#[test]
fn intersection_agrees_with_sampling() {
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    let mut samples = 0;
    while samples < 100_000 {
        let cone = loop {
            let c = random_cone(&mut rng);
            if c.is_full_dimensional() {
                break c;
            }
        };
        let center = random_query(&mut rng, &cone);
        let radius = center.norm() * rng.gen_range(0.1..1.0);
        let poly = random_polytope(&mut rng, center, radius);
        let intersects = polytope_cone_intersects(&poly, &cone);
        for _ in 0..250 {
            let p = sample_in(&mut rng, &poly);
            samples += 1;
            let Some(excess) = cone.facet_excess(&p) else { continue };
            if excess < -1e-7 {
                assert!(intersects, "sample {p:?} lies inside yet no intersection");
            }
        }
        if !intersects {
            // Disjoint: no vertex lies in the cone.
            for v in poly.vertices() {
                assert!(!cone.contains(v));
            }
        }
    }
}

#[test]
fn degenerate_cones_are_handled_by_the_lp_path() {
    let ray = WrenchCone::new([Wrench::new(1.0, 0.0, 0.0)]);
    assert!(ray.face_normals().is_err());
    assert!(ray.contains(&Wrench::new(3.0, 0.0, 0.0)));
    assert!(!ray.contains(&Wrench::new(-3.0, 0.0, 0.0)));
    assert!(!ray.contains(&Wrench::new(1.0, 1e-3, 0.0)));
    let fan = WrenchCone::new([Wrench::new(1.0, 0.0, 0.0), Wrench::new(0.0, 1.0, 0.0)]);
    assert!(fan.contains(&Wrench::new(1.0, 2.0, 0.0)));
    assert!(!fan.contains(&Wrench::new(1.0, 2.0, 0.1)));
    assert!(WrenchCone::zero().contains(&Wrench::ZERO));
    assert!(!WrenchCone::zero().contains(&Wrench::new(0.0, 0.0, 1.0)));
}
