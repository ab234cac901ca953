//! Stable-push feasibility.
//!
//! For a candidate object motion the finger contact modes are fixed by
//! kinematics: a finger point sticks only where the object's material
//! velocity vanishes. Sliding points contribute a known friction impulse
//! (maximum dissipation), sticking points contribute a bounded set. The push
//! is stable when the pusher's generalized friction cone can supply the
//! remaining impulse while the pusher itself sticks.
//!
//! Wrenches are SI at the object's center of mass. Cone tests run in
//! normalized coordinates where torque is divided by the object's bounding
//! radius.

use nalgebra::{Matrix3, Vector2, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cone::{max_margin_intersection, Wrench, WrenchCone, WrenchPolytope};
use crate::pose::{wrap_angle, GraspPose};
use crate::scene::geometry::{self, Point};
use crate::scene::{in_plane, Scene};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("unknown pusher '{0}'")]
    UnknownPusher(String),
    #[error("twist must be nonzero")]
    ZeroTwist,
}

/// Local contact frame. `normal` is the contact normal; `tangent` and
/// `other` span the contact plane. Vectors are 3-D with Y the grasp normal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactFrame {
    pub normal: Vector3<f64>,
    pub tangent: Vector3<f64>,
    pub other: Vector3<f64>,
}

impl ContactFrame {
    /// Finger pads press along the grasp normal; friction acts in-plane.
    pub fn finger() -> Self {
        Self {
            normal: Vector3::y(),
            tangent: Vector3::x(),
            other: Vector3::z(),
        }
    }

    /// Pushers press along an in-plane inward normal.
    pub fn pusher(normal: Vector2<f64>) -> Self {
        let n = normal.normalize();
        Self {
            normal: in_plane(n),
            tangent: in_plane(Vector2::new(-n.y, n.x)),
            other: Vector3::y(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointContact {
    /// Position in the frame the contact is defined in, m.
    pub position: Point,
    pub frame: ContactFrame,
    pub mu: f64,
    /// Normal impulse share, N·s (zero for pushers, where it is free).
    pub normal_impulse: f64,
}

/// Linear map from local contact impulse `(n, t, o)` to planar wrench.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraspMap(pub Matrix3<f64>);

impl GraspMap {
    /// Map for a contact with frame `frame` at `lever` from the reference point.
    pub fn new(frame: &ContactFrame, lever: Point) -> Self {
        let col = |axis: &Vector3<f64>| {
            let f = Vector2::new(axis.x, axis.z);
            Wrench::from_force_at(f, lever).vec()
        };
        GraspMap(Matrix3::from_columns(&[
            col(&frame.normal),
            col(&frame.tangent),
            col(&frame.other),
        ]))
    }

    pub fn apply(&self, local: Vector3<f64>) -> Wrench {
        Wrench::from(self.0 * local)
    }
}

/// Object velocity over one quasi-dynamic step, at the object-frame origin,
/// expressed in the object frame (m/s, rad/s).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ObjectTwist {
    pub v_x: f64,
    pub v_z: f64,
    pub omega: f64,
}

impl ObjectTwist {
    pub fn new(v_x: f64, v_z: f64, omega: f64) -> Self {
        Self { v_x, v_z, omega }
    }

    /// Twist that carries `from` to `to` in `dt`, linearized at `from`.
    pub fn from_step(from: &GraspPose, to: &GraspPose, dt: f64) -> Self {
        let dt_g = Vector2::new(to.x - from.x, to.z - from.z);
        let v = from.rotation().inverse() * dt_g / dt;
        Self::new(v.x, v.y, wrap_angle(to.theta - from.theta) / dt)
    }

    pub fn is_zero(&self) -> bool {
        self.v_x == 0.0 && self.v_z == 0.0 && self.omega == 0.0
    }

    pub fn is_finite(&self) -> bool {
        self.v_x.is_finite() && self.v_z.is_finite() && self.omega.is_finite()
    }

    /// Velocity of the material point at `p` (object frame).
    pub fn point_velocity(&self, p: Point) -> Vector2<f64> {
        Vector2::new(self.v_x + self.omega * p.y, self.v_z - self.omega * p.x)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self::new(self.v_x * s, self.v_z * s, self.omega * s)
    }

    pub fn mirrored(&self) -> Self {
        Self::new(-self.v_x, self.v_z, -self.omega)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PointMode {
    Sticking,
    /// Unit direction of the object's material velocity at the contact.
    Sliding { direction: Vector2<f64> },
}

/// Modes of the finger points, in the order of [`Scene::finger_contacts`].
#[derive(Debug, Clone, PartialEq)]
pub struct ContactMode {
    pub points: Vec<PointMode>,
}

impl ContactMode {
    pub fn sticking_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.points
            .iter()
            .enumerate()
            .filter(|(_, m)| matches!(m, PointMode::Sticking))
            .map(|(i, _)| i)
    }

    pub fn any_sticking(&self) -> bool {
        self.sticking_indices().next().is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ContactCase {
    AllSlide,
    StickSlide,
}

/// Pusher impulse and sticking-finger impulse that balance the step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    /// Impulse applied by the pusher, SI.
    pub pusher_wrench: Wrench,
    /// Net impulse of the sticking finger points, SI.
    pub sticking_impulse: Wrench,
    /// Weights over the pusher cone's unit generators (normalized units).
    pub generator_weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityCertificate {
    pub pusher: String,
    pub feasible: bool,
    pub case: ContactCase,
    /// Interior margin in normalized units; negative means outside.
    /// `None` when the candidate set misses the cone altogether.
    pub margin: Option<f64>,
    pub witness: Option<Witness>,
    /// Relative Newton–Euler residual of the witness.
    pub residual: Option<f64>,
}

/// Finger points (object frame) at `pose`.
pub fn finger_contacts_at(scene: &Scene, pose: &GraspPose) -> Vec<PointContact> {
    scene
        .finger_contacts()
        .iter()
        .map(|c| PointContact {
            position: pose.to_object(c.position),
            ..*c
        })
        .collect()
}

/// Whether every finger point still lies on the object at `pose`.
pub fn grasp_maintained(scene: &Scene, pose: &GraspPose) -> bool {
    let silhouette = &scene.object().silhouette;
    scene
        .finger_contacts()
        .iter()
        .all(|c| geometry::contains_point(silhouette, pose.to_object(c.position)))
}

fn characteristic_speed(scene: &Scene, twist: &ObjectTwist) -> f64 {
    twist.point_velocity(scene.com()).norm() + twist.omega.abs() * scene.wrench_length()
}

/// Sticking where the material speed is below the relative sticking tolerance.
pub fn classify_modes(scene: &Scene, pose: &GraspPose, twist: &ObjectTwist) -> ContactMode {
    let eps = scene.dynamics().sticking_tolerance * characteristic_speed(scene, twist);
    let points = finger_contacts_at(scene, pose)
        .iter()
        .map(|c| {
            let v = twist.point_velocity(c.position);
            let speed = v.norm();
            if speed < eps || speed == 0.0 {
                PointMode::Sticking
            } else {
                PointMode::Sliding {
                    direction: v / speed,
                }
            }
        })
        .collect();
    ContactMode { points }
}

/// Local friction impulse `(p_t, p_o)` of a sliding contact: magnitude
/// `mu * p_n`, opposing the slip direction.
pub fn sliding_friction_impulse(contact: &PointContact, slide_dir: Vector2<f64>) -> Vector2<f64> {
    let mag = contact.mu * contact.normal_impulse;
    let t = Vector2::new(contact.frame.tangent.x, contact.frame.tangent.z);
    let o = Vector2::new(contact.frame.other.x, contact.frame.other.z);
    Vector2::new(-mag * slide_dir.dot(&t), -mag * slide_dir.dot(&o))
}

fn contact_wrench(contact: &PointContact, com: Point, local_to: Vector2<f64>) -> Wrench {
    let map = GraspMap::new(&contact.frame, contact.position - com);
    map.apply(Vector3::new(0.0, local_to.x, local_to.y))
}

/// Net impulse of the sliding finger points.
pub fn sliding_finger_impulse(scene: &Scene, pose: &GraspPose, modes: &ContactMode) -> Wrench {
    let com = scene.com();
    finger_contacts_at(scene, pose)
        .iter()
        .zip(&modes.points)
        .filter_map(|(c, m)| match m {
            PointMode::Sliding { direction } => {
                Some(contact_wrench(c, com, sliding_friction_impulse(c, *direction)))
            }
            PointMode::Sticking => None,
        })
        .sum()
}

/// Gravity impulse over one step, object frame.
pub fn gravity_impulse(scene: &Scene, pose: &GraspPose) -> Wrench {
    let g = pose.rotation().inverse() * scene.gravity();
    let p = g * scene.mass() * scene.dynamics().time_step;
    Wrench::new(p.x, p.y, 0.0)
}

/// Momentum gained from rest: `(m v_com, I omega)`.
pub fn momentum(scene: &Scene, twist: &ObjectTwist) -> Wrench {
    let v = twist.point_velocity(scene.com());
    Wrench::new(
        scene.mass() * v.x,
        scene.mass() * v.y,
        scene.inertia() * twist.omega,
    )
}

/// Impulse the pusher (together with any sticking finger points) must supply.
pub fn motion_wrench(
    scene: &Scene,
    pose: &GraspPose,
    twist: &ObjectTwist,
    modes: &ContactMode,
) -> Wrench {
    momentum(scene, twist) - gravity_impulse(scene, pose) - sliding_finger_impulse(scene, pose, modes)
}

/// Cone of a pusher from its point contacts, in normalized coordinates.
pub(crate) fn pusher_cone_from_contacts(
    contacts: &[PointContact],
    com: Point,
    wrench_length: f64,
) -> WrenchCone {
    let mut rays = Vec::with_capacity(2 * contacts.len());
    for c in contacts {
        let n = Vector2::new(c.frame.normal.x, c.frame.normal.z);
        let t = Vector2::new(c.frame.tangent.x, c.frame.tangent.z);
        for edge in [n + t * c.mu, n - t * c.mu] {
            rays.push(normalize(Wrench::from_force_at(edge, c.position - com), wrench_length));
        }
    }
    WrenchCone::new(rays)
}

/// Generalized friction cone of a pusher (normalized coordinates).
pub fn pusher_generalized_cone<'s>(
    scene: &'s Scene,
    pusher_id: &str,
) -> Result<&'s WrenchCone, DynamicsError> {
    let i = scene
        .pusher_index(pusher_id)
        .ok_or_else(|| DynamicsError::UnknownPusher(pusher_id.into()))?;
    Ok(scene.pusher_cone(i))
}

/// Friction impulses the sticking finger points can supply (SI): the
/// Minkowski sum of each point's polygonal friction disk mapped to wrench space.
pub fn sticking_finger_polytope(scene: &Scene, sticking: &[PointContact]) -> WrenchPolytope {
    let facets = scene.dynamics().sticking_facets;
    let com = scene.com();
    let mut acc = WrenchPolytope::singleton(Wrench::ZERO);
    for c in sticking {
        let r = c.mu * c.normal_impulse;
        if r == 0.0 {
            continue;
        }
        let disk = (0..facets)
            .map(|k| {
                let a = std::f64::consts::TAU * k as f64 / facets as f64;
                Wrench::from_force_at(Vector2::new(a.cos(), a.sin()) * r, c.position - com)
            })
            .collect();
        acc = acc.minkowski_sum(&WrenchPolytope::new(disk));
    }
    acc
}

pub(crate) fn normalize(w: Wrench, length: f64) -> Wrench {
    Wrench::new(w.fx, w.fz, w.tau / length)
}

pub(crate) fn denormalize(w: Wrench, length: f64) -> Wrench {
    Wrench::new(w.fx, w.fz, w.tau * length)
}

/// Verdict of the cone tests, in normalized coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeVerdict {
    pub feasible: bool,
    pub margin: Option<f64>,
    /// Pusher wrench, normalized.
    pub pusher_wrench: Option<Wrench>,
    /// Sticking impulse, normalized.
    pub sticking_impulse: Option<Wrench>,
    pub generator_weights: Vec<f64>,
}

/// All-slide test: the motion wrench itself must lie strictly inside the cone.
/// The face normals reject quickly; the LP then measures the margin.
pub fn evaluate_all_slide(cone: &WrenchCone, motion: Wrench, tol: f64) -> ConeVerdict {
    if let Some(excess) = cone.facet_excess(&motion) {
        if excess > tol {
            return ConeVerdict {
                feasible: false,
                margin: Some(-excess),
                pusher_wrench: None,
                sticking_impulse: None,
                generator_weights: Vec::new(),
            };
        }
    }
    evaluate_stick_slide(cone, motion, &WrenchPolytope::singleton(Wrench::ZERO), tol)
}

/// Stick-slide test: some point of `motion - sticking` must lie strictly
/// inside the cone. `sticking` is the normalized sticking-finger set.
pub fn evaluate_stick_slide(
    cone: &WrenchCone,
    motion: Wrench,
    sticking: &WrenchPolytope,
    tol: f64,
) -> ConeVerdict {
    let candidates = crate::cone::minkowski_sum_point_polytope(&motion, &sticking.negated());
    match max_margin_intersection(&candidates, cone, tol) {
        None => ConeVerdict {
            feasible: false,
            margin: None,
            pusher_wrench: None,
            sticking_impulse: None,
            generator_weights: Vec::new(),
        },
        Some(wit) => {
            let pusher: Wrench = cone
                .generators()
                .iter()
                .zip(&wit.generator_weights)
                .map(|(g, w)| *g * *w)
                .sum();
            let sticking_impulse = motion - wit.point;
            let feasible = wit.margin >= tol;
            ConeVerdict {
                feasible,
                margin: Some(wit.margin),
                pusher_wrench: Some(pusher),
                sticking_impulse: Some(sticking_impulse),
                generator_weights: wit.generator_weights,
            }
        }
    }
}

/// Everything about one step that does not depend on the pusher.
#[derive(Debug, Clone)]
pub struct StepAnalysis {
    pub pose: GraspPose,
    pub twist: ObjectTwist,
    pub modes: ContactMode,
    /// SI.
    pub motion_wrench: Wrench,
    /// Sticking-finger set in normalized coordinates, if any point sticks.
    sticking: Option<WrenchPolytope>,
}

impl StepAnalysis {
    pub fn new(scene: &Scene, pose: &GraspPose, twist: &ObjectTwist) -> Result<Self, DynamicsError> {
        if twist.is_zero() || !twist.is_finite() {
            return Err(DynamicsError::ZeroTwist);
        }
        let modes = classify_modes(scene, pose, twist);
        let motion_wrench = motion_wrench(scene, pose, twist, &modes);
        let sticking = modes.any_sticking().then(|| {
            let contacts = finger_contacts_at(scene, pose);
            let stuck: Vec<PointContact> = modes.sticking_indices().map(|i| contacts[i]).collect();
            let l = scene.wrench_length();
            let poly = sticking_finger_polytope(scene, &stuck);
            WrenchPolytope::new(poly.vertices().iter().map(|v| normalize(*v, l)).collect())
        });
        Ok(Self {
            pose: *pose,
            twist: *twist,
            modes,
            motion_wrench,
            sticking,
        })
    }

    pub fn case(&self) -> ContactCase {
        if self.sticking.is_some() {
            ContactCase::StickSlide
        } else {
            ContactCase::AllSlide
        }
    }

    pub fn check(&self, scene: &Scene, pusher: usize) -> FeasibilityCertificate {
        self.certify(scene, pusher, self.sticking.as_ref())
    }

    /// Same test with the sticking finger forces neglected.
    pub fn check_ignoring_sticking(&self, scene: &Scene, pusher: usize) -> FeasibilityCertificate {
        self.certify(scene, pusher, None)
    }

    fn certify(
        &self,
        scene: &Scene,
        pusher: usize,
        sticking: Option<&WrenchPolytope>,
    ) -> FeasibilityCertificate {
        let l = scene.wrench_length();
        let tol = scene.dynamics().feasibility_tolerance;
        let cone = scene.pusher_cone(pusher);
        let motion = normalize(self.motion_wrench, l);
        let (case, verdict) = match sticking {
            Some(s) => (ContactCase::StickSlide, evaluate_stick_slide(cone, motion, s, tol)),
            None => (ContactCase::AllSlide, evaluate_all_slide(cone, motion, tol)),
        };
        let witness = verdict.feasible.then(|| Witness {
            pusher_wrench: denormalize(verdict.pusher_wrench.unwrap_or_default(), l),
            sticking_impulse: denormalize(verdict.sticking_impulse.unwrap_or_default(), l),
            generator_weights: verdict.generator_weights.clone(),
        });
        let residual = witness
            .as_ref()
            .map(|w| newton_euler_residual(scene, &self.pose, &self.twist, &self.modes, w));
        FeasibilityCertificate {
            pusher: scene.pushers()[pusher].id.clone(),
            feasible: verdict.feasible,
            case,
            margin: verdict.margin,
            witness,
            residual,
        }
    }
}

/// Relative residual of the impulse–momentum balance, rebuilt term by term:
/// sliding friction + sticking impulse + pusher impulse + gravity - momentum.
pub fn newton_euler_residual(
    scene: &Scene,
    pose: &GraspPose,
    twist: &ObjectTwist,
    modes: &ContactMode,
    witness: &Witness,
) -> f64 {
    let l = scene.wrench_length();
    let terms = [
        sliding_finger_impulse(scene, pose, modes),
        witness.sticking_impulse,
        witness.pusher_wrench,
        gravity_impulse(scene, pose),
        -momentum(scene, twist),
    ];
    let total: Wrench = terms.iter().copied().sum();
    let scale: f64 = terms.iter().map(|t| normalize(*t, l).norm()).sum();
    if scale == 0.0 {
        return 0.0;
    }
    normalize(total, l).norm() / scale
}

/// Full stable-push check for one pusher.
pub fn check_stable_push(
    scene: &Scene,
    pose: &GraspPose,
    twist: &ObjectTwist,
    pusher_id: &str,
) -> Result<FeasibilityCertificate, DynamicsError> {
    let i = scene
        .pusher_index(pusher_id)
        .ok_or_else(|| DynamicsError::UnknownPusher(pusher_id.into()))?;
    Ok(StepAnalysis::new(scene, pose, twist)?.check(scene, i))
}

/// One `check_stable_push` query for [`check_batch`].
#[derive(Debug, Clone, PartialEq)]
pub struct PushQuery {
    pub pose: GraspPose,
    pub twist: ObjectTwist,
    pub pusher: String,
}

/// Answers independent queries, in parallel when the feature is on.
pub fn check_batch(
    scene: &Scene,
    queries: &[PushQuery],
) -> Vec<Result<FeasibilityCertificate, DynamicsError>> {
    crate::par::map(queries, |q| check_stable_push(scene, &q.pose, &q.twist, &q.pusher))
}
