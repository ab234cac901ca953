//! JSON scene documents. See `docs/scene-format.md` for the schema.

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use super::units::{format_scalar, parse_scalar, Dimension, Tagged};
use super::{
    DynamicsParams, FingerPair, ObjectModel, PatchDiscretization, PatchGeometry, PlannerParams,
    Pusher, Scene, SceneConfig, SceneError,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneFile {
    pub object: ObjectSection,
    pub fingers: FingersSection,
    pub pushers: Vec<PusherSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gravity: Option<Tagged<[f64; 2]>>,
    #[serde(default)]
    pub planner: PlannerSection,
    #[serde(default)]
    pub dynamics: DynamicsSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectSection {
    #[serde(default)]
    pub name: String,
    pub silhouette: Tagged<Vec<[f64; 2]>>,
    pub mass: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inertia: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub com: Option<Tagged<[f64; 2]>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase", deny_unknown_fields)]
pub enum PatchSection {
    Point {
        at: Tagged<[f64; 2]>,
    },
    Line {
        start: Tagged<[f64; 2]>,
        end: Tagged<[f64; 2]>,
    },
    Circle {
        center: Tagged<[f64; 2]>,
        radius: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscretizationSection {
    #[serde(default = "default_line_points")]
    pub line_points: usize,
    #[serde(default = "default_rings")]
    pub rings: usize,
    #[serde(default = "default_ring_points")]
    pub ring_points: usize,
}

fn default_line_points() -> usize {
    PatchDiscretization::default().line_points
}
fn default_rings() -> usize {
    PatchDiscretization::default().rings
}
fn default_ring_points() -> usize {
    PatchDiscretization::default().ring_points
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FingersSection {
    pub patch: PatchSection,
    pub grip_force: String,
    pub mu: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub discretization: Option<DiscretizationSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PusherSection {
    pub id: String,
    pub geometry: PatchSection,
    pub mu: f64,
    /// Inward normal, dimensionless direction in the object frame.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normal: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlannerSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_translation: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_rotation: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotation_weight: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub goal_tolerance_translation: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub goal_tolerance_rotation: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distance_weight: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub switchover_weight: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub switchover_threshold: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature_init: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature_rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature_fail_max: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature_cost_scale: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rewire_radius: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub goal_bias: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_margin_translation: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_margin_rotation: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_step: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sticking_tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sticking_facets: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pusher_line_points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feasibility_tolerance: Option<f64>,
}

fn point(t: &Tagged<[f64; 2]>, field: &str) -> Result<Vector2<f64>, SceneError> {
    let v = t.to_si(Dimension::Length, field)?;
    Ok(Vector2::new(v[0], v[1]))
}

fn tag_point(p: Vector2<f64>) -> Tagged<[f64; 2]> {
    Tagged::<[f64; 2]>::from_si([p.x, p.y], Dimension::Length)
}

fn opt_scalar(
    v: &Option<String>,
    dim: Dimension,
    field: &str,
) -> Result<Option<f64>, SceneError> {
    v.as_deref().map(|s| parse_scalar(s, dim, field)).transpose()
}

impl PatchSection {
    fn to_geometry(&self, field: &str) -> Result<PatchGeometry, SceneError> {
        Ok(match self {
            PatchSection::Point { at } => PatchGeometry::Point {
                at: point(at, field)?,
            },
            PatchSection::Line { start, end } => PatchGeometry::Line {
                start: point(start, field)?,
                end: point(end, field)?,
            },
            PatchSection::Circle { center, radius } => PatchGeometry::Circle {
                center: point(center, field)?,
                radius: parse_scalar(radius, Dimension::Length, field)?,
            },
        })
    }

    fn from_geometry(g: &PatchGeometry) -> Self {
        match *g {
            PatchGeometry::Point { at } => PatchSection::Point { at: tag_point(at) },
            PatchGeometry::Line { start, end } => PatchSection::Line {
                start: tag_point(start),
                end: tag_point(end),
            },
            PatchGeometry::Circle { center, radius } => PatchSection::Circle {
                center: tag_point(center),
                radius: format_scalar(radius, Dimension::Length),
            },
        }
    }
}

impl SceneFile {
    pub fn to_config(&self) -> Result<SceneConfig, SceneError> {
        let o = &self.object;
        let silhouette = o
            .silhouette
            .to_si(Dimension::Length, "object.silhouette")?
            .into_iter()
            .map(|p| Vector2::new(p[0], p[1]))
            .collect();
        let object = ObjectModel {
            name: o.name.clone(),
            silhouette,
            mass: parse_scalar(&o.mass, Dimension::Mass, "object.mass")?,
            inertia: opt_scalar(&o.inertia, Dimension::Inertia, "object.inertia")?,
            com: o.com.as_ref().map(|c| point(c, "object.com")).transpose()?,
        };

        let f = &self.fingers;
        let discretization = f
            .discretization
            .as_ref()
            .map(|d| PatchDiscretization {
                line_points: d.line_points,
                rings: d.rings,
                ring_points: d.ring_points,
            })
            .unwrap_or_default();
        let fingers = FingerPair {
            patch: f.patch.to_geometry("fingers.patch")?,
            grip_force: parse_scalar(&f.grip_force, Dimension::Force, "fingers.grip_force")?,
            mu: f.mu,
            discretization,
        };

        let pushers = self
            .pushers
            .iter()
            .map(|p| {
                Ok(Pusher {
                    id: p.id.clone(),
                    geometry: p.geometry.to_geometry(&format!("pushers.{}", p.id))?,
                    mu: p.mu,
                    normal: p.normal.map(|n| Vector2::new(n[0], n[1])),
                })
            })
            .collect::<Result<Vec<_>, SceneError>>()?;

        let gravity = match &self.gravity {
            Some(g) => {
                let v = g.to_si(Dimension::Acceleration, "gravity")?;
                Vector2::new(v[0], v[1])
            }
            None => Vector2::new(0.0, -9.81),
        };

        let d = PlannerParams::default();
        let p = &self.planner;
        let len = |v: &Option<String>, field: &str, dflt: f64| {
            Ok::<_, SceneError>(opt_scalar(v, Dimension::Length, field)?.unwrap_or(dflt))
        };
        let ang = |v: &Option<String>, field: &str, dflt: f64| {
            Ok::<_, SceneError>(opt_scalar(v, Dimension::Angle, field)?.unwrap_or(dflt))
        };
        let planner = PlannerParams {
            step_translation: len(&p.step_translation, "planner.step_translation", d.step_translation)?,
            step_rotation: ang(&p.step_rotation, "planner.step_rotation", d.step_rotation)?,
            rotation_weight: opt_scalar(
                &p.rotation_weight,
                Dimension::LengthPerAngle,
                "planner.rotation_weight",
            )?,
            goal_tolerance_translation: len(
                &p.goal_tolerance_translation,
                "planner.goal_tolerance_translation",
                d.goal_tolerance_translation,
            )?,
            goal_tolerance_rotation: ang(
                &p.goal_tolerance_rotation,
                "planner.goal_tolerance_rotation",
                d.goal_tolerance_rotation,
            )?,
            distance_weight: p.distance_weight.unwrap_or(d.distance_weight),
            switchover_weight: opt_scalar(
                &p.switchover_weight,
                Dimension::Length,
                "planner.switchover_weight",
            )?,
            switchover_threshold: p.switchover_threshold.unwrap_or(d.switchover_threshold),
            temperature_init: p.temperature_init.unwrap_or(d.temperature_init),
            temperature_rate: p.temperature_rate.unwrap_or(d.temperature_rate),
            temperature_fail_max: p.temperature_fail_max.unwrap_or(d.temperature_fail_max),
            temperature_cost_scale: opt_scalar(
                &p.temperature_cost_scale,
                Dimension::Length,
                "planner.temperature_cost_scale",
            )?,
            rewire_radius: opt_scalar(&p.rewire_radius, Dimension::Length, "planner.rewire_radius")?,
            max_iterations: p.max_iterations.unwrap_or(d.max_iterations),
            seed: p.seed.unwrap_or(d.seed),
            goal_bias: p.goal_bias.unwrap_or(d.goal_bias),
            sample_margin_translation: len(
                &p.sample_margin_translation,
                "planner.sample_margin_translation",
                d.sample_margin_translation,
            )?,
            sample_margin_rotation: ang(
                &p.sample_margin_rotation,
                "planner.sample_margin_rotation",
                d.sample_margin_rotation,
            )?,
        };

        let dd = DynamicsParams::default();
        let q = &self.dynamics;
        let dynamics = DynamicsParams {
            time_step: opt_scalar(&q.time_step, Dimension::Time, "dynamics.time_step")?
                .unwrap_or(dd.time_step),
            sticking_tolerance: q.sticking_tolerance.unwrap_or(dd.sticking_tolerance),
            sticking_facets: q.sticking_facets.unwrap_or(dd.sticking_facets),
            pusher_line_points: q.pusher_line_points.unwrap_or(dd.pusher_line_points),
            feasibility_tolerance: q.feasibility_tolerance.unwrap_or(dd.feasibility_tolerance),
        };

        Ok(SceneConfig {
            object,
            fingers,
            pushers,
            gravity,
            planner,
            dynamics,
        })
    }

    /// Fully explicit document for a built scene (derived defaults written out).
    pub fn from_scene(scene: &Scene) -> Self {
        let cfg = scene.config();
        let o = &cfg.object;
        let object = ObjectSection {
            name: o.name.clone(),
            silhouette: Tagged::<Vec<[f64; 2]>>::from_si(
                &o.silhouette.iter().map(|p| [p.x, p.y]).collect::<Vec<_>>(),
                Dimension::Length,
            ),
            mass: format_scalar(o.mass, Dimension::Mass),
            inertia: Some(format_scalar(scene.inertia(), Dimension::Inertia)),
            com: Some(tag_point(scene.com())),
        };
        let f = &cfg.fingers;
        let fingers = FingersSection {
            patch: PatchSection::from_geometry(&f.patch),
            grip_force: format_scalar(f.grip_force, Dimension::Force),
            mu: f.mu,
            discretization: Some(DiscretizationSection {
                line_points: f.discretization.line_points,
                rings: f.discretization.rings,
                ring_points: f.discretization.ring_points,
            }),
        };
        let pushers = cfg
            .pushers
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let n = scene.pusher_normal(i);
                PusherSection {
                    id: p.id.clone(),
                    geometry: PatchSection::from_geometry(&p.geometry),
                    mu: p.mu,
                    normal: Some([n.x, n.y]),
                }
            })
            .collect();
        let r = scene.planner();
        let len = |v: f64| Some(format_scalar(v, Dimension::Length));
        let ang = |v: f64| Some(format_scalar(v, Dimension::Angle));
        let planner = PlannerSection {
            step_translation: len(r.step_translation),
            step_rotation: ang(r.step_rotation),
            rotation_weight: Some(format_scalar(r.rotation_weight, Dimension::LengthPerAngle)),
            goal_tolerance_translation: len(r.goal_tolerance_translation),
            goal_tolerance_rotation: ang(r.goal_tolerance_rotation),
            distance_weight: Some(r.distance_weight),
            switchover_weight: len(r.switchover_weight),
            switchover_threshold: Some(r.switchover_threshold),
            temperature_init: Some(r.temperature_init),
            temperature_rate: Some(r.temperature_rate),
            temperature_fail_max: Some(r.temperature_fail_max),
            temperature_cost_scale: len(r.temperature_cost_scale),
            rewire_radius: len(r.rewire_radius),
            max_iterations: Some(r.max_iterations),
            seed: Some(r.seed),
            goal_bias: Some(r.goal_bias),
            sample_margin_translation: len(r.sample_margin_translation),
            sample_margin_rotation: ang(r.sample_margin_rotation),
        };
        let d = &cfg.dynamics;
        let dynamics = DynamicsSection {
            time_step: Some(format_scalar(d.time_step, Dimension::Time)),
            sticking_tolerance: Some(d.sticking_tolerance),
            sticking_facets: Some(d.sticking_facets),
            pusher_line_points: Some(d.pusher_line_points),
            feasibility_tolerance: Some(d.feasibility_tolerance),
        };
        SceneFile {
            object,
            fingers,
            pushers,
            gravity: Some(Tagged::<[f64; 2]>::from_si(
                [cfg.gravity.x, cfg.gravity.y],
                Dimension::Acceleration,
            )),
            planner,
            dynamics,
        }
    }
}
