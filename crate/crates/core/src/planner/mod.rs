//! T-RRT* over grasp poses.
//!
//! The tree grows by unit steps toward random samples. A step is kept only
//! if it passes the temperature transition test, keeps the grasp, and is a
//! stable push for some pusher. Node cost is the weighted distance to the
//! goal plus a penalty per pusher switch-over; `optim_edge` and `rewire`
//! lower switch-overs as the tree fills in.

mod temperature;
mod tree;
pub mod verify;

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use temperature::Temperature;
pub use tree::{optim_edge, rewire, substep_count, Edge, Motion, Step, Tree, TreeNode};
pub use verify::{verify_plan, Verification};

use crate::dynamics::{grasp_maintained, FeasibilityCertificate};
use crate::pose::{wrap_angle, GraspPose};
use crate::scene::Scene;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PlanOptions {
    /// Overrides the scene's switch-over threshold.
    pub switchover_threshold: Option<usize>,
    pub max_iterations: Option<usize>,
    pub seed: Option<u64>,
    /// Wall-clock budget. Runs cut short by it are not reproducible.
    pub deadline: Option<Duration>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanSegment {
    pub pusher: String,
    /// Poses visited with this pusher; `certificates[i]` covers
    /// `waypoints[i] -> waypoints[i + 1]`.
    pub waypoints: Vec<GraspPose>,
    pub certificates: Vec<FeasibilityCertificate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PushPlan {
    pub init: GraspPose,
    pub goal: GraspPose,
    pub segments: Vec<PlanSegment>,
    pub switchovers: usize,
    pub final_pose: GraspPose,
    /// Final pose minus goal: (x m, z m, theta rad).
    pub final_error: [f64; 3],
}

impl PushPlan {
    pub fn empty(init: GraspPose, goal: GraspPose) -> Self {
        Self {
            init,
            goal,
            segments: Vec::new(),
            switchovers: 0,
            final_pose: init,
            final_error: pose_error(&init, &goal),
        }
    }

    pub fn step_count(&self) -> usize {
        self.segments.iter().map(|s| s.certificates.len()).sum()
    }

    /// Every pose in order, segment joins listed once.
    pub fn poses(&self) -> Vec<GraspPose> {
        let mut out = vec![self.init];
        for s in &self.segments {
            out.extend(s.waypoints.iter().skip(1));
        }
        out
    }
}

/// Iteration at which the best goal-region switch-over count changed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistoryPoint {
    pub iteration: usize,
    pub switchovers: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanStats {
    pub iterations: usize,
    pub tree_size: usize,
    pub history: Vec<HistoryPoint>,
    /// Smallest distance from any tree node to the goal.
    pub closest_distance: f64,
    pub elapsed: Duration,
}

#[derive(Debug, Clone)]
pub struct PlanOutcome {
    pub plan: PushPlan,
    pub stats: PlanStats,
}

#[derive(Debug, Clone, Error)]
pub enum PlanError {
    #[error("initial pose does not keep the fingers on the object")]
    StartNotGrasped,
    #[error("pose must be finite")]
    NonFinitePose,
    #[error(
        "no plan within {} switch-overs after {} iterations (tree {} nodes, closest {:.3} mm)",
        threshold,
        stats.iterations,
        stats.tree_size,
        stats.closest_distance * 1e3
    )]
    BudgetExhausted {
        threshold: usize,
        stats: PlanStats,
        /// Best goal-reaching plan found, if it exceeded the threshold.
        best: Option<Box<PushPlan>>,
    },
}

pub fn pose_error(pose: &GraspPose, goal: &GraspPose) -> [f64; 3] {
    [
        pose.x - goal.x,
        pose.z - goal.z,
        wrap_angle(pose.theta - goal.theta),
    ]
}

/// Per-axis goal-tolerance test.
pub fn in_goal_region(scene: &Scene, pose: &GraspPose, goal: &GraspPose) -> bool {
    let p = scene.planner();
    let [dx, dz, dth] = pose_error(pose, goal);
    dx.abs() <= p.goal_tolerance_translation
        && dz.abs() <= p.goal_tolerance_translation
        && dth.abs() <= p.goal_tolerance_rotation
}

/// Advances at most one unit step (per axis) from `from` toward `to`.
/// Returns the new pose and whether it is `to` itself.
pub fn unit_step(scene: &Scene, from: &GraspPose, to: &GraspPose) -> (GraspPose, bool) {
    let p = scene.planner();
    let trans = ((to.x - from.x).powi(2) + (to.z - from.z).powi(2)).sqrt();
    let rot = wrap_angle(to.theta - from.theta).abs();
    let mut s: f64 = 1.0;
    if trans > 0.0 {
        s = s.min(p.step_translation / trans);
    }
    if rot > 0.0 {
        s = s.min(p.step_rotation / rot);
    }
    if s >= 1.0 {
        (*to, true)
    } else {
        (from.interpolate(to, s), false)
    }
}

struct Sampler {
    lo: [f64; 3],
    hi: [f64; 3],
    goal: GraspPose,
    goal_bias: f64,
}

impl Sampler {
    fn new(scene: &Scene, init: &GraspPose, goal: &GraspPose) -> Self {
        let p = scene.planner();
        let th_goal = init.theta + wrap_angle(goal.theta - init.theta);
        let mt = p.sample_margin_translation;
        let mr = p.sample_margin_rotation;
        Self {
            lo: [
                init.x.min(goal.x) - mt,
                init.z.min(goal.z) - mt,
                init.theta.min(th_goal) - mr,
            ],
            hi: [
                init.x.max(goal.x) + mt,
                init.z.max(goal.z) + mt,
                init.theta.max(th_goal) + mr,
            ],
            goal: *goal,
            goal_bias: p.goal_bias,
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> GraspPose {
        if rng.gen::<f64>() < self.goal_bias {
            return self.goal;
        }
        let mut v = [0.0; 3];
        for k in 0..3 {
            v[k] = rng.gen_range(self.lo[k]..=self.hi[k]);
        }
        GraspPose::new(v[0], v[1], v[2])
    }
}

/// Best goal-region node: fewest switch-overs, then lowest cost, then oldest.
fn better(tree: &Tree, a: usize, b: usize) -> bool {
    let (na, nb) = (tree.node(a), tree.node(b));
    (na.switchovers, na.cost, a) < (nb.switchovers, nb.cost, b)
}

pub fn plan(scene: &Scene, init: &GraspPose, goal: &GraspPose) -> Result<PlanOutcome, PlanError> {
    plan_with(scene, init, goal, &PlanOptions::default())
}

pub fn plan_with(
    scene: &Scene,
    init: &GraspPose,
    goal: &GraspPose,
    opts: &PlanOptions,
) -> Result<PlanOutcome, PlanError> {
    let started = Instant::now();
    if !init.is_finite() || !goal.is_finite() {
        return Err(PlanError::NonFinitePose);
    }
    let init = GraspPose::new(init.x, init.z, init.theta);
    let goal = GraspPose::new(goal.x, goal.z, goal.theta);
    if !grasp_maintained(scene, &init) {
        return Err(PlanError::StartNotGrasped);
    }
    let params = scene.planner();
    let threshold = opts.switchover_threshold.unwrap_or(params.switchover_threshold);
    let max_iterations = opts.max_iterations.unwrap_or(params.max_iterations);
    let mut tree = Tree::new(init, goal, params);

    if in_goal_region(scene, &init, &goal) {
        return Ok(PlanOutcome {
            plan: PushPlan::empty(init, goal),
            stats: PlanStats {
                iterations: 0,
                tree_size: 1,
                history: vec![HistoryPoint {
                    iteration: 0,
                    switchovers: 0,
                }],
                closest_distance: tree.distance(&init, &goal),
                elapsed: started.elapsed(),
            },
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.unwrap_or(params.seed));
    let mut temperature = Temperature::new(
        params.temperature_init,
        params.temperature_rate,
        params.temperature_fail_max,
        params.temperature_cost_scale,
    );
    let sampler = Sampler::new(scene, &init, &goal);
    let mut goal_nodes: Vec<usize> = Vec::new();
    let mut best: Option<usize> = None;
    let mut history: Vec<HistoryPoint> = Vec::new();
    let mut closest = tree.distance(&init, &goal);
    let mut iterations = 0;

    while iterations < max_iterations {
        if opts.deadline.is_some_and(|d| started.elapsed() >= d) {
            break;
        }
        iterations += 1;
        let q_rand = sampler.sample(&mut rng);
        let mut parent = tree.nearest(&q_rand);
        loop {
            let q_parent = tree.node(parent).pose;
            let (q_new, reached) = unit_step(scene, &q_parent, &q_rand);
            if q_new == q_parent {
                break;
            }
            if !temperature.test(tree.config_cost(&q_parent), tree.config_cost(&q_new), &mut rng) {
                break;
            }
            let Some(motion) = Motion::new(scene, &q_parent, &q_new) else {
                break;
            };
            let Some(edge) = motion.first_feasible(scene, 0..scene.pushers().len()) else {
                break;
            };
            let (p, e) = optim_edge(&tree, scene, &q_new, parent, edge);
            let id = tree.insert(p, e, q_new);
            rewire(&mut tree, scene, id);
            closest = closest.min(tree.distance(&q_new, &goal));
            if in_goal_region(scene, &q_new, &goal) {
                goal_nodes.push(id);
            }
            if reached {
                break;
            }
            parent = id;
        }
        // Rewiring may have improved any goal node, so rescan.
        for &g in &goal_nodes {
            if best.map_or(true, |b| better(&tree, g, b)) {
                best = Some(g);
            }
        }
        if let Some(b) = best {
            let sw = tree.node(b).switchovers;
            if history.last().map_or(true, |h| h.switchovers != sw) {
                history.push(HistoryPoint {
                    iteration: iterations,
                    switchovers: sw,
                });
            }
            if sw <= threshold {
                break;
            }
        }
    }

    let stats = PlanStats {
        iterations,
        tree_size: tree.len(),
        history,
        closest_distance: closest,
        elapsed: started.elapsed(),
    };
    match best {
        Some(b) if tree.node(b).switchovers <= threshold => Ok(PlanOutcome {
            plan: extract_plan(scene, &tree, b),
            stats,
        }),
        _ => Err(PlanError::BudgetExhausted {
            threshold,
            best: best.map(|b| Box::new(extract_plan(scene, &tree, b))),
            stats,
        }),
    }
}

/// Root-to-node plan with consecutive same-pusher edges merged.
pub fn extract_plan(scene: &Scene, tree: &Tree, node: usize) -> PushPlan {
    let init = tree.node(0).pose;
    let goal = *tree.goal();
    let mut segments: Vec<PlanSegment> = Vec::new();
    let mut at = init;
    for id in tree.path_to(node).into_iter().skip(1) {
        let edge = tree.node(id).edge.as_ref().expect("non-root node has an edge");
        let id_str = &scene.pushers()[edge.pusher].id;
        if segments.last().map_or(true, |s| &s.pusher != id_str) {
            segments.push(PlanSegment {
                pusher: id_str.clone(),
                waypoints: vec![at],
                certificates: Vec::new(),
            });
        }
        let seg = segments.last_mut().expect("just pushed");
        for step in &edge.steps {
            seg.waypoints.push(step.to);
            seg.certificates.push(step.certificate.clone());
        }
        at = tree.node(id).pose;
    }
    PushPlan {
        init,
        goal,
        switchovers: segments.len().saturating_sub(1),
        segments,
        final_pose: at,
        final_error: pose_error(&at, &goal),
    }
}
