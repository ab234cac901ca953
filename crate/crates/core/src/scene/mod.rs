//! Physical problem description: object, grasp, pushers and parameters.
//!
//! A [`Scene`] is validated at construction and immutable afterwards. All
//! fields are SI (m, kg, N, s, rad); the file format in [`file`] converts
//! from the mm / g / N / deg units used in scene documents.

pub mod file;
pub mod geometry;
pub mod units;

use std::path::Path;

use nalgebra::{Vector2, Vector3};
use thiserror::Error;

use crate::cone::WrenchCone;
use crate::dynamics::{pusher_cone_from_contacts, ContactFrame, PointContact};
use geometry::Point;

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("cannot read scene file: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed scene file: {0}")]
    Parse(String),
    #[error("unit error in '{field}': {message}")]
    Unit { field: String, message: String },
    #[error("invalid scene: {0}")]
    Validation(String),
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, SceneError> {
    Err(SceneError::Validation(msg.into()))
}

/// Contact geometry of a finger pad or a pusher.
#[derive(Debug, Clone, PartialEq)]
pub enum PatchGeometry {
    Point { at: Point },
    Line { start: Point, end: Point },
    Circle { center: Point, radius: f64 },
}

impl PatchGeometry {
    pub fn translated(&self, by: Point) -> Self {
        match *self {
            PatchGeometry::Point { at } => PatchGeometry::Point { at: at + by },
            PatchGeometry::Line { start, end } => PatchGeometry::Line {
                start: start + by,
                end: end + by,
            },
            PatchGeometry::Circle { center, radius } => PatchGeometry::Circle {
                center: center + by,
                radius,
            },
        }
    }

    fn map_points(&self, f: impl Fn(Point) -> Point) -> Self {
        match *self {
            PatchGeometry::Point { at } => PatchGeometry::Point { at: f(at) },
            PatchGeometry::Line { start, end } => PatchGeometry::Line {
                start: f(start),
                end: f(end),
            },
            PatchGeometry::Circle { center, radius } => PatchGeometry::Circle {
                center: f(center),
                radius,
            },
        }
    }
}

/// How patches are broken into point contacts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PatchDiscretization {
    /// Evenly spaced points along a line patch, endpoints included.
    pub line_points: usize,
    /// Concentric rings around the (always present) center of a circular patch.
    pub rings: usize,
    pub ring_points: usize,
}

impl Default for PatchDiscretization {
    fn default() -> Self {
        Self {
            line_points: 3,
            rings: 1,
            ring_points: 8,
        }
    }
}

impl PatchDiscretization {
    pub fn point_count(&self, patch: &PatchGeometry) -> usize {
        match patch {
            PatchGeometry::Point { .. } => 1,
            PatchGeometry::Line { .. } => self.line_points,
            PatchGeometry::Circle { .. } => 1 + self.rings * self.ring_points,
        }
    }
}

/// Point positions of a patch under a discretization.
pub fn patch_points(patch: &PatchGeometry, disc: &PatchDiscretization) -> Vec<Point> {
    match *patch {
        PatchGeometry::Point { at } => vec![at],
        PatchGeometry::Line { start, end } => {
            let n = disc.line_points;
            if n == 1 {
                return vec![(start + end) / 2.0];
            }
            (0..n)
                .map(|i| start + (end - start) * (i as f64 / (n - 1) as f64))
                .collect()
        }
        PatchGeometry::Circle { center, radius } => {
            let mut pts = vec![center];
            for ring in 1..=disc.rings {
                let r = radius * ring as f64 / disc.rings as f64;
                for k in 0..disc.ring_points {
                    let a = std::f64::consts::TAU * k as f64 / disc.ring_points as f64;
                    pts.push(center + Point::new(a.cos(), a.sin()) * r);
                }
            }
            pts
        }
    }
}

/// Splits a patch into rigidly connected point contacts sharing
/// `normal_impulse_total` uniformly.
pub fn discretize_patch(
    patch: &PatchGeometry,
    disc: &PatchDiscretization,
    frame: ContactFrame,
    mu: f64,
    normal_impulse_total: f64,
) -> Vec<PointContact> {
    let pts = patch_points(patch, disc);
    let share = normal_impulse_total / pts.len() as f64;
    pts.into_iter()
        .map(|position| PointContact {
            position,
            frame,
            mu,
            normal_impulse: share,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectModel {
    pub name: String,
    /// Counter-clockwise silhouette in the object frame, m.
    pub silhouette: Vec<Point>,
    pub mass: f64,
    /// About the grasp normal through the center of mass, kg·m².
    /// `None` means uniform density over the silhouette.
    pub inertia: Option<f64>,
    /// `None` means the silhouette centroid.
    pub com: Option<Point>,
}

impl ObjectModel {
    pub fn com(&self) -> Point {
        self.com.unwrap_or_else(|| geometry::centroid(&self.silhouette))
    }

    pub fn inertia(&self) -> f64 {
        self.inertia.unwrap_or_else(|| {
            let area = geometry::signed_area(&self.silhouette).abs();
            let mut poly = self.silhouette.clone();
            if geometry::signed_area(&poly) < 0.0 {
                poly.reverse();
            }
            self.mass / area * geometry::polar_second_moment(&poly, self.com())
        })
    }

    /// Largest distance from the center of mass to the silhouette.
    pub fn bounding_radius(&self) -> f64 {
        let c = self.com();
        self.silhouette
            .iter()
            .map(|p| (p - c).norm())
            .fold(0.0, f64::max)
    }

    pub fn bounding_diagonal(&self) -> f64 {
        let (lo, hi) = geometry::bounding_box(&self.silhouette);
        (hi - lo).norm()
    }
}

/// The two coaxial finger pads of a parallel-jaw gripper, in the gripper frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FingerPair {
    pub patch: PatchGeometry,
    /// Normal force pressed by each finger, N.
    pub grip_force: f64,
    pub mu: f64,
    pub discretization: PatchDiscretization,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pusher {
    pub id: String,
    /// Point or line, in the object frame.
    pub geometry: PatchGeometry,
    pub mu: f64,
    /// Inward contact normal in the object frame. `None` takes it from the
    /// silhouette edge the pusher lies on.
    pub normal: Option<Vector2<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlannerParams {
    pub step_translation: f64,
    pub step_rotation: f64,
    /// Rotation weight of the pose metric, m/rad. `None`: half the bounding radius.
    pub rotation_weight: Option<f64>,
    pub goal_tolerance_translation: f64,
    pub goal_tolerance_rotation: f64,
    pub distance_weight: f64,
    /// Cost of one pusher switch-over, m. `None`: the silhouette bounding-box diagonal.
    pub switchover_weight: Option<f64>,
    pub switchover_threshold: usize,
    pub temperature_init: f64,
    pub temperature_rate: f64,
    pub temperature_fail_max: usize,
    /// Cost normalization of the transition test, m. `None`: one translation step.
    pub temperature_cost_scale: Option<f64>,
    /// `None`: five translation steps.
    pub rewire_radius: Option<f64>,
    pub max_iterations: usize,
    pub seed: u64,
    pub goal_bias: f64,
    pub sample_margin_translation: f64,
    pub sample_margin_rotation: f64,
}

impl Default for PlannerParams {
    fn default() -> Self {
        Self {
            step_translation: 1e-3,
            step_rotation: 2f64.to_radians(),
            rotation_weight: None,
            goal_tolerance_translation: 1e-3,
            goal_tolerance_rotation: 2f64.to_radians(),
            distance_weight: 1.0,
            switchover_weight: None,
            switchover_threshold: 2,
            temperature_init: 1.0,
            temperature_rate: 2.0,
            temperature_fail_max: 20,
            temperature_cost_scale: None,
            rewire_radius: None,
            max_iterations: 500_000,
            seed: 0,
            goal_bias: 0.05,
            sample_margin_translation: 10e-3,
            sample_margin_rotation: 20f64.to_radians(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DynamicsParams {
    pub time_step: f64,
    /// Sticking threshold relative to the step's characteristic speed.
    pub sticking_tolerance: f64,
    /// Facets of the polygonal friction disk at sticking finger points.
    pub sticking_facets: usize,
    pub pusher_line_points: usize,
    /// Feasibility margin and residual tolerance in normalized wrench units.
    pub feasibility_tolerance: f64,
}

impl Default for DynamicsParams {
    fn default() -> Self {
        Self {
            time_step: 0.01,
            sticking_tolerance: 1e-6,
            sticking_facets: 16,
            pusher_line_points: 3,
            feasibility_tolerance: 1e-9,
        }
    }
}

/// Everything a [`Scene`] is built from.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneConfig {
    pub object: ObjectModel,
    pub fingers: FingerPair,
    pub pushers: Vec<Pusher>,
    /// In the gripper frame, m/s².
    pub gravity: Vector2<f64>,
    pub planner: PlannerParams,
    pub dynamics: DynamicsParams,
}

/// Planner parameters with every default filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedPlannerParams {
    pub step_translation: f64,
    pub step_rotation: f64,
    pub rotation_weight: f64,
    pub goal_tolerance_translation: f64,
    pub goal_tolerance_rotation: f64,
    pub distance_weight: f64,
    pub switchover_weight: f64,
    pub switchover_threshold: usize,
    pub temperature_init: f64,
    pub temperature_rate: f64,
    pub temperature_fail_max: usize,
    pub temperature_cost_scale: f64,
    pub rewire_radius: f64,
    pub max_iterations: usize,
    pub seed: u64,
    pub goal_bias: f64,
    pub sample_margin_translation: f64,
    pub sample_margin_rotation: f64,
}

/// A validated, immutable scene with derived contact data.
#[derive(Debug, Clone)]
pub struct Scene {
    config: SceneConfig,
    com: Point,
    inertia: f64,
    bounding_radius: f64,
    planner: ResolvedPlannerParams,
    finger_contacts: Vec<PointContact>,
    pusher_normals: Vec<Vector2<f64>>,
    pusher_contacts: Vec<Vec<PointContact>>,
    pusher_cones: Vec<WrenchCone>,
}

/// Pushers must sit this close to the silhouette boundary.
pub const BOUNDARY_TOLERANCE: f64 = 0.5e-3;

impl Scene {
    pub fn from_config(config: SceneConfig) -> Result<Scene, SceneError> {
        let mut config = config;
        validate_object(&mut config.object)?;
        validate_fingers(&config.fingers)?;
        validate_dynamics(&config.dynamics)?;
        if !(config.gravity.x.is_finite() && config.gravity.y.is_finite()) {
            return invalid("gravity must be finite");
        }
        if config.pushers.is_empty() {
            return invalid("at least one pusher is required");
        }

        let object = &config.object;
        let com = object.com();
        let inertia = object.inertia();
        if !(inertia > 0.0) || !inertia.is_finite() {
            return invalid("object inertia must be positive");
        }
        let bounding_radius = object.bounding_radius();
        let planner = resolve_planner(&config.planner, object)?;

        let dt = config.dynamics.time_step;
        // Both pads are merged into one set carrying twice the per-pad impulse.
        let fingers = &config.fingers;
        let finger_contacts = discretize_patch(
            &fingers.patch,
            &fingers.discretization,
            ContactFrame::finger(),
            fingers.mu,
            2.0 * fingers.grip_force * dt,
        );

        let mut pusher_normals = Vec::new();
        let mut pusher_contacts = Vec::new();
        let mut pusher_cones = Vec::new();
        for (i, p) in config.pushers.iter().enumerate() {
            if config.pushers[..i].iter().any(|q| q.id == p.id) {
                return invalid(format!("duplicate pusher id '{}'", p.id));
            }
            let normal = validate_pusher(p, &object.silhouette)?;
            let disc = PatchDiscretization {
                line_points: config.dynamics.pusher_line_points,
                ..PatchDiscretization::default()
            };
            let contacts =
                discretize_patch(&p.geometry, &disc, ContactFrame::pusher(normal), p.mu, 0.0);
            let cone = pusher_cone_from_contacts(&contacts, com, bounding_radius);
            pusher_normals.push(normal);
            pusher_contacts.push(contacts);
            pusher_cones.push(cone);
        }

        Ok(Scene {
            config,
            com,
            inertia,
            bounding_radius,
            planner,
            finger_contacts,
            pusher_normals,
            pusher_contacts,
            pusher_cones,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Scene, SceneError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Scene, SceneError> {
        let doc: file::SceneFile =
            serde_json::from_str(text).map_err(|e| SceneError::Parse(e.to_string()))?;
        Scene::from_config(doc.to_config()?)
    }

    /// Canonical JSON form (mm / g / N / deg).
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&file::SceneFile::from_scene(self))
            .expect("scene serializes")
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn content_hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let digest = Sha256::digest(self.to_json().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn config(&self) -> &SceneConfig {
        &self.config
    }

    pub fn object(&self) -> &ObjectModel {
        &self.config.object
    }

    pub fn fingers(&self) -> &FingerPair {
        &self.config.fingers
    }

    pub fn pushers(&self) -> &[Pusher] {
        &self.config.pushers
    }

    pub fn pusher_index(&self, id: &str) -> Option<usize> {
        self.config.pushers.iter().position(|p| p.id == id)
    }

    pub fn gravity(&self) -> Vector2<f64> {
        self.config.gravity
    }

    pub fn dynamics(&self) -> &DynamicsParams {
        &self.config.dynamics
    }

    pub fn planner(&self) -> &ResolvedPlannerParams {
        &self.planner
    }

    pub fn mass(&self) -> f64 {
        self.config.object.mass
    }

    pub fn com(&self) -> Point {
        self.com
    }

    pub fn inertia(&self) -> f64 {
        self.inertia
    }

    /// Torque-to-force length used to make wrench components comparable.
    pub fn wrench_length(&self) -> f64 {
        self.bounding_radius
    }

    /// Merged finger contacts in the gripper frame.
    pub fn finger_contacts(&self) -> &[PointContact] {
        &self.finger_contacts
    }

    pub fn pusher_normal(&self, index: usize) -> Vector2<f64> {
        self.pusher_normals[index]
    }

    pub fn pusher_contacts(&self, index: usize) -> &[PointContact] {
        &self.pusher_contacts[index]
    }

    /// Generalized friction cone of a pusher, in normalized wrench coordinates.
    pub fn pusher_cone(&self, index: usize) -> &WrenchCone {
        &self.pusher_cones[index]
    }

    /// The scene reflected about the Z axis (x -> -x).
    pub fn mirrored(&self) -> Result<Scene, SceneError> {
        let flip = |p: Point| Point::new(-p.x, p.y);
        let mut cfg = self.config.clone();
        cfg.object.silhouette = cfg.object.silhouette.iter().rev().map(|p| flip(*p)).collect();
        cfg.object.com = cfg.object.com.map(flip);
        cfg.fingers.patch = cfg.fingers.patch.map_points(flip);
        for p in &mut cfg.pushers {
            p.geometry = p.geometry.map_points(flip);
            p.normal = p.normal.map(flip);
        }
        cfg.gravity = flip(cfg.gravity);
        Scene::from_config(cfg)
    }

    /// A copy with one pusher's friction coefficient replaced.
    pub fn with_pusher_mu(&self, id: &str, mu: f64) -> Result<Scene, SceneError> {
        let mut cfg = self.config.clone();
        let Some(p) = cfg.pushers.iter_mut().find(|p| p.id == id) else {
            return invalid(format!("unknown pusher '{id}'"));
        };
        p.mu = mu;
        Scene::from_config(cfg)
    }
}

fn validate_object(object: &mut ObjectModel) -> Result<(), SceneError> {
    if !(object.mass > 0.0) || !object.mass.is_finite() {
        return invalid("mass must be positive");
    }
    if object.silhouette.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
        return invalid("silhouette coordinates must be finite");
    }
    if !geometry::is_simple(&object.silhouette) {
        return invalid("silhouette must be a simple polygon");
    }
    let area = geometry::signed_area(&object.silhouette);
    if area.abs() <= 1e-12 {
        return invalid("silhouette must have positive area");
    }
    if area < 0.0 {
        object.silhouette.reverse();
    }
    if let Some(i) = object.inertia {
        if !(i > 0.0) || !i.is_finite() {
            return invalid("inertia must be positive");
        }
    }
    let com = object.com();
    let (lo, hi) = geometry::bounding_box(&object.silhouette);
    if com.x < lo.x || com.y < lo.y || com.x > hi.x || com.y > hi.y {
        return invalid("center of mass must lie inside the silhouette bounding box");
    }
    Ok(())
}

fn validate_patch(patch: &PatchGeometry, what: &str) -> Result<(), SceneError> {
    let finite = |p: &Point| p.x.is_finite() && p.y.is_finite();
    match patch {
        PatchGeometry::Point { at } if finite(at) => Ok(()),
        PatchGeometry::Line { start, end } if finite(start) && finite(end) => {
            if (end - start).norm() <= 0.0 {
                invalid(format!("{what} line patch has zero length"))
            } else {
                Ok(())
            }
        }
        PatchGeometry::Circle { center, radius } if finite(center) => {
            if !(*radius > 0.0) || !radius.is_finite() {
                invalid(format!("{what} circle radius must be positive"))
            } else {
                Ok(())
            }
        }
        _ => invalid(format!("{what} patch coordinates must be finite")),
    }
}

fn validate_fingers(f: &FingerPair) -> Result<(), SceneError> {
    validate_patch(&f.patch, "finger")?;
    if !(f.grip_force > 0.0) || !f.grip_force.is_finite() {
        return invalid("grip_force must be positive");
    }
    if !(f.mu >= 0.0) || !f.mu.is_finite() {
        return invalid("finger mu must be nonnegative");
    }
    let d = &f.discretization;
    if d.line_points < 1 || d.rings < 1 || d.ring_points < 1 {
        return invalid("finger discretization counts must be at least 1");
    }
    Ok(())
}

fn validate_dynamics(d: &DynamicsParams) -> Result<(), SceneError> {
    if !(d.time_step > 0.0) || !d.time_step.is_finite() {
        return invalid("time_step must be positive");
    }
    if !(d.sticking_tolerance > 0.0) {
        return invalid("sticking_tolerance must be positive");
    }
    if d.sticking_facets < 3 {
        return invalid("sticking_facets must be at least 3");
    }
    if d.pusher_line_points < 1 {
        return invalid("pusher_line_points must be at least 1");
    }
    if !(d.feasibility_tolerance > 0.0) {
        return invalid("feasibility_tolerance must be positive");
    }
    Ok(())
}

fn validate_pusher(p: &Pusher, silhouette: &[Point]) -> Result<Vector2<f64>, SceneError> {
    let what = format!("pusher '{}'", p.id);
    validate_patch(&p.geometry, &what)?;
    if !(p.mu >= 0.0) || !p.mu.is_finite() {
        return invalid(format!("{what}: mu must be nonnegative"));
    }
    let (a, b) = match p.geometry {
        PatchGeometry::Point { at } => (at, at),
        PatchGeometry::Line { start, end } => (start, end),
        PatchGeometry::Circle { .. } => {
            return invalid(format!("{what}: pushers must be points or lines"))
        }
    };
    for q in [a, b, (a + b) / 2.0] {
        if geometry::boundary_distance(silhouette, q) > BOUNDARY_TOLERANCE {
            return invalid(format!("{what} does not lie on the object boundary"));
        }
    }
    let normal = match p.normal {
        Some(n) => {
            let len = n.norm();
            if !(len > 0.0) || !len.is_finite() {
                return invalid(format!("{what}: normal must be nonzero"));
            }
            n / len
        }
        None => {
            let edge = geometry::nearest_edge(silhouette, (a + b) / 2.0);
            geometry::inward_normal(silhouette, edge)
        }
    };
    Ok(normal)
}

fn resolve_planner(
    p: &PlannerParams,
    object: &ObjectModel,
) -> Result<ResolvedPlannerParams, SceneError> {
    let positive = [
        ("step_translation", p.step_translation),
        ("step_rotation", p.step_rotation),
        ("goal_tolerance_translation", p.goal_tolerance_translation),
        ("goal_tolerance_rotation", p.goal_tolerance_rotation),
        ("distance_weight", p.distance_weight),
        ("temperature_init", p.temperature_init),
    ];
    for (name, v) in positive {
        if !(v > 0.0) || !v.is_finite() {
            return invalid(format!("planner {name} must be positive"));
        }
    }
    // A zero margin pins the axis to the init/goal span.
    for (name, v) in [
        ("sample_margin_translation", p.sample_margin_translation),
        ("sample_margin_rotation", p.sample_margin_rotation),
    ] {
        if !(v >= 0.0) || !v.is_finite() {
            return invalid(format!("planner {name} must be non-negative"));
        }
    }
    for (name, v) in [
        ("rotation_weight", p.rotation_weight),
        ("switchover_weight", p.switchover_weight),
        ("temperature_cost_scale", p.temperature_cost_scale),
        ("rewire_radius", p.rewire_radius),
    ] {
        if let Some(v) = v {
            if !(v > 0.0) || !v.is_finite() {
                return invalid(format!("planner {name} must be positive"));
            }
        }
    }
    if !(p.temperature_rate > 1.0) {
        return invalid("planner temperature_rate must exceed 1");
    }
    if p.temperature_fail_max == 0 || p.max_iterations == 0 {
        return invalid("planner temperature_fail_max and max_iterations must be positive");
    }
    if !(0.0..=1.0).contains(&p.goal_bias) {
        return invalid("planner goal_bias must lie in [0, 1]");
    }
    if p.goal_tolerance_translation > p.step_translation
        || p.goal_tolerance_rotation > p.step_rotation
    {
        return invalid("goal tolerance must not exceed the step size");
    }
    Ok(ResolvedPlannerParams {
        step_translation: p.step_translation,
        step_rotation: p.step_rotation,
        rotation_weight: p
            .rotation_weight
            .unwrap_or_else(|| 0.5 * object.bounding_radius()),
        goal_tolerance_translation: p.goal_tolerance_translation,
        goal_tolerance_rotation: p.goal_tolerance_rotation,
        distance_weight: p.distance_weight,
        switchover_weight: p
            .switchover_weight
            .unwrap_or_else(|| object.bounding_diagonal()),
        switchover_threshold: p.switchover_threshold,
        temperature_init: p.temperature_init,
        temperature_rate: p.temperature_rate,
        temperature_fail_max: p.temperature_fail_max,
        temperature_cost_scale: p.temperature_cost_scale.unwrap_or(p.step_translation),
        rewire_radius: p.rewire_radius.unwrap_or(5.0 * p.step_translation),
        max_iterations: p.max_iterations,
        seed: p.seed,
        goal_bias: p.goal_bias,
        sample_margin_translation: p.sample_margin_translation,
        sample_margin_rotation: p.sample_margin_rotation,
    })
}

/// Unit vector in 3-D contact-frame space (x, y, z with y the grasp normal).
pub(crate) fn in_plane(v: Vector2<f64>) -> Vector3<f64> {
    Vector3::new(v.x, 0.0, v.y)
}
