//! Random scenes and the physical invariants every scene must satisfy.

use nalgebra::Vector2;
use prepush::dynamics::{
    check_stable_push, classify_modes, finger_contacts_at, grasp_maintained, motion_wrench, momentum,
    gravity_impulse, sliding_finger_impulse, ContactCase, PointMode, StepAnalysis,
};
use prepush::scene::{
    DynamicsParams, FingerPair, ObjectModel, PatchDiscretization, PatchGeometry, PlannerParams, Pusher,
    SceneConfig,
};
use prepush::{GraspPose, ObjectTwist, Scene, Wrench};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

type P = Vector2<f64>;

/// Margin below which a verdict is treated as a tie and not compared.
pub const MARGINAL: f64 = 1e-7;

/// Newton–Euler residual allowed on a feasible certificate (normalized).
pub const RESIDUAL_TOL: f64 = 1e-9;

fn line(a: P, b: P) -> PatchGeometry {
    PatchGeometry::Line { start: a, end: b }
}

/// A box-shaped object with a random grasp, pushers on three or four sides,
/// random friction and an arbitrary gravity direction.
pub fn random_config(rng: &mut ChaCha8Rng) -> SceneConfig {
    let a = rng.gen_range(0.015..0.06);
    let b = rng.gen_range(0.008..0.03);
    let silhouette = vec![P::new(-a, -b), P::new(a, -b), P::new(a, b), P::new(-a, b)];
    let com = rng.gen_bool(0.3).then(|| P::new(rng.gen_range(-0.3..0.3) * a, rng.gen_range(-0.3..0.3) * b));
    let center = P::new(rng.gen_range(-0.3..0.3) * a, rng.gen_range(-0.3..0.3) * b);
    let patch = match rng.gen_range(0..3) {
        0 => PatchGeometry::Point { at: center },
        _ => PatchGeometry::Circle { center, radius: rng.gen_range(0.001..0.6 * b.min(a - center.x.abs())) },
    };
    let mut pushers = vec![
        Pusher {
            id: "left".into(),
            geometry: line(P::new(-a, -0.6 * b), P::new(-a, 0.6 * b)),
            mu: rng.gen_range(0.0..1.0),
            normal: None,
        },
        Pusher {
            id: "right".into(),
            geometry: line(P::new(a, 0.6 * b), P::new(a, -0.6 * b)),
            mu: rng.gen_range(0.0..1.0),
            normal: None,
        },
        Pusher {
            id: "bottom".into(),
            geometry: line(P::new(-0.5 * a, -b), P::new(0.5 * a, -b)),
            mu: rng.gen_range(0.0..1.0),
            normal: None,
        },
    ];
    if rng.gen_bool(0.5) {
        pushers.push(Pusher {
            id: "top".into(),
            geometry: PatchGeometry::Point { at: P::new(rng.gen_range(-0.8..0.8) * a, b) },
            mu: rng.gen_range(0.0..1.0),
            normal: None,
        });
    }
    let g_angle: f64 = if rng.gen_bool(0.5) { -std::f64::consts::FRAC_PI_2 } else { rng.gen_range(-3.14..3.14) };
    SceneConfig {
        object: ObjectModel {
            name: "random box".into(),
            silhouette,
            mass: rng.gen_range(0.05..0.5),
            inertia: None,
            com,
        },
        fingers: FingerPair {
            patch,
            grip_force: rng.gen_range(2.0..50.0),
            mu: rng.gen_range(0.1..1.0),
            discretization: PatchDiscretization::default(),
        },
        pushers,
        gravity: P::new(g_angle.cos(), g_angle.sin()) * 9.81,
        planner: PlannerParams::default(),
        dynamics: DynamicsParams::default(),
    }
}

pub fn random_scene(rng: &mut ChaCha8Rng) -> Scene {
    Scene::from_config(random_config(rng)).expect("generated scenes are valid")
}

/// A pose close to the start that keeps the grasp.
pub fn random_pose(rng: &mut ChaCha8Rng, scene: &Scene) -> GraspPose {
    for _ in 0..20 {
        let q = GraspPose::from_mm_deg(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0), rng.gen_range(-15.0..15.0));
        if grasp_maintained(scene, &q) {
            return q;
        }
    }
    GraspPose::default()
}

/// A twist of about one planner step: translation, rotation or both.
pub fn random_twist(rng: &mut ChaCha8Rng) -> ObjectTwist {
    let v = 0.1 * rng.gen_range(0.2..2.0);
    let w = 2f64.to_radians() / 0.01 * rng.gen_range(0.2..2.0);
    let dir: f64 = rng.gen_range(-3.1416..3.1416);
    let s = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    match rng.gen_range(0..3) {
        0 => ObjectTwist::new(v * dir.cos(), v * dir.sin(), 0.0),
        1 => ObjectTwist::new(0.0, 0.0, s * w),
        _ => ObjectTwist::new(v * dir.cos(), v * dir.sin(), s * w),
    }
}

/// A pusher and a twist, biased towards the interesting cases: pushing
/// along the pusher normal, and rotating about a finger point (sticking).
pub fn random_query(rng: &mut ChaCha8Rng, scene: &Scene, pose: &GraspPose) -> (String, ObjectTwist) {
    let k = rng.gen_range(0..scene.pushers().len());
    let id = scene.pushers()[k].id.clone();
    let twist = match rng.gen_range(0..4) {
        0 => {
            let n = scene.pusher_normal(k) * 0.1 * rng.gen_range(0.2..2.0);
            let slip = rng.gen_range(-0.05..0.05);
            ObjectTwist::new(n.x - slip * n.y, n.y + slip * n.x, 0.0)
        }
        1 => {
            let contacts = finger_contacts_at(scene, pose);
            let p = contacts[rng.gen_range(0..contacts.len())].position;
            let w = 2f64.to_radians() / 0.01 * rng.gen_range(-2.0..2.0);
            ObjectTwist::new(-w * p.y, w * p.x, w)
        }
        _ => random_twist(rng),
    };
    (id, twist)
}

fn decided(margin: Option<f64>) -> bool {
    margin.map_or(true, |m| m.abs() > MARGINAL)
}

/// Checks every invariant for one query; the error names the first violation.
pub fn check_invariants(
    scene: &Scene,
    pose: &GraspPose,
    twist: &ObjectTwist,
    pusher: &str,
) -> Result<(), String> {
    let l = scene.wrench_length();
    let cert = check_stable_push(scene, pose, twist, pusher).map_err(|e| e.to_string())?;

    // A feasible verdict carries a witness that balances the step and lies in the cone.
    if cert.feasible {
        let w = cert.witness.as_ref().ok_or("feasible without a witness")?;
        let residual = cert.residual.ok_or("feasible without a residual")?;
        if residual > RESIDUAL_TOL {
            return Err(format!("Newton-Euler residual {residual:e}"));
        }
        if cert.margin.map_or(true, |m| m < 0.0) {
            return Err(format!("feasible with margin {:?}", cert.margin));
        }
        let i = scene.pusher_index(pusher).unwrap();
        let p = w.pusher_wrench;
        let normalized = Wrench::new(p.fx, p.fz, p.tau / l);
        if normalized.norm() > 0.0 && !scene.pusher_cone(i).contains_with_tol(&normalized, 1e-7) {
            return Err("pusher impulse outside its friction cone".into());
        }
    }

    // The finger pair presses with twice the grip over the step.
    let total: f64 = scene.finger_contacts().iter().map(|c| c.normal_impulse).sum();
    let expect = 2.0 * scene.fingers().grip_force * scene.dynamics().time_step;
    if (total - expect).abs() > 1e-12 * expect.max(1.0) {
        return Err(format!("grip impulses sum to {total}, expected {expect}"));
    }

    // Sliding friction, recomputed point by point: each sliding point resists
    // its own slip with mu times its normal impulse.
    let modes = classify_modes(scene, pose, twist);
    let mut friction = Wrench::ZERO;
    for c in finger_contacts_at(scene, pose) {
        let v = twist.point_velocity(c.position);
        if v.norm() > 1e-6 * (twist.point_velocity(scene.com()).norm() + twist.omega.abs() * l) {
            let f = -v.normalize() * c.mu * c.normal_impulse;
            let r = c.position - scene.com();
            friction += Wrench::new(f.x, f.y, r.y * f.x - r.x * f.y);
        }
    }
    let lib = sliding_finger_impulse(scene, pose, &modes);
    if (friction - lib).norm() > 1e-9 * (1.0 + friction.norm()) {
        return Err(format!("sliding impulse {lib:?}, expected {friction:?}"));
    }
    let m = motion_wrench(scene, pose, twist, &modes);
    if (m - (momentum(scene, twist) - gravity_impulse(scene, pose) - friction)).norm() > 1e-9 * (1.0 + m.norm()) {
        return Err("motion wrench does not balance momentum, gravity and friction".into());
    }

    // Sticking points can always push back with zero: dropping them never helps.
    let analysis = StepAnalysis::new(scene, pose, twist).map_err(|e| e.to_string())?;
    let i = scene.pusher_index(pusher).unwrap();
    let relaxed = analysis.check_ignoring_sticking(scene, i);
    if relaxed.feasible && !cert.feasible && decided(relaxed.margin) {
        return Err("feasible without the sticking finger but not with it".into());
    }

    // With nothing sticking, the full test is the all-slide test.
    if analysis.case() == ContactCase::AllSlide
        && (relaxed.feasible != cert.feasible || relaxed.margin != cert.margin)
    {
        return Err("empty sticking set changed the verdict".into());
    }

    // Pure translation never sticks.
    if twist.omega == 0.0 && analysis.case() != ContactCase::AllSlide {
        return Err("translation classified as sticking".into());
    }

    // Sliding friction depends only on the slip directions, not the speed.
    let faster = twist.scaled(3.0);
    let modes_fast = classify_modes(scene, pose, &faster);
    if modes_fast == modes {
        let a = sliding_finger_impulse(scene, pose, &modes);
        let b = sliding_finger_impulse(scene, pose, &modes_fast);
        if (a - b).norm() > 1e-12 * (1.0 + a.norm()) {
            return Err("sliding friction changed with speed".into());
        }
    }

    // More pusher friction only enlarges the cone.
    let grippier = scene
        .with_pusher_mu(pusher, scene.pushers()[i].mu * 1.5 + 0.1)
        .map_err(|e| e.to_string())?;
    let more = check_stable_push(&grippier, pose, twist, pusher).map_err(|e| e.to_string())?;
    if cert.feasible && !more.feasible && decided(cert.margin) && decided(more.margin) {
        return Err("raising pusher friction broke a stable push".into());
    }

    // Mirroring the whole problem about the Z axis preserves the verdict.
    let mirror = scene.mirrored().map_err(|e| e.to_string())?;
    let mirrored = check_stable_push(&mirror, &pose.mirrored(), &twist.mirrored(), pusher).map_err(|e| e.to_string())?;
    if mirrored.feasible != cert.feasible && decided(cert.margin) && decided(mirrored.margin) {
        return Err(format!("mirror changed the verdict ({:?} vs {:?})", cert.margin, mirrored.margin));
    }
    Ok(())
}

/// Rotating about a finger point makes exactly that point stick.
pub fn check_rotation_center_sticks(scene: &Scene, pose: &GraspPose, omega: f64) -> Result<(), String> {
    let contacts = finger_contacts_at(scene, pose);
    for (k, c) in contacts.iter().enumerate() {
        let p = c.position;
        let twist = ObjectTwist::new(-omega * p.y, omega * p.x, omega);
        let modes = classify_modes(scene, pose, &twist);
        for (j, m) in modes.points.iter().enumerate() {
            let coincident = (contacts[j].position - p).norm() < 1e-12;
            if coincident != matches!(m, PointMode::Sticking) {
                return Err(format!("rotation about point {k}: point {j} has mode {m:?}"));
            }
        }
    }
    Ok(())
}

/// Runs the invariants over `count` random scenes and returns the failures.
pub fn sweep(rng: &mut ChaCha8Rng, count: usize, twists_per_scene: usize) -> Vec<String> {
    let mut failures = Vec::new();
    for n in 0..count {
        let scene = random_scene(rng);
        for _ in 0..twists_per_scene {
            let pose = random_pose(rng, &scene);
            let (id, twist) = random_query(rng, &scene, &pose);
            if let Err(e) = check_invariants(&scene, &pose, &twist, &id) {
                failures.push(format!("scene {n}, pusher {id}: {e}"));
            }
        }
        if let Err(e) = check_rotation_center_sticks(&scene, &GraspPose::default(), 3.0) {
            failures.push(format!("scene {n}: {e}"));
        }
    }
    failures
}
