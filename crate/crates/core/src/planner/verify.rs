use serde::Serialize;

use super::{in_goal_region, substep_count, PushPlan};
use crate::dynamics::{grasp_maintained, ObjectTwist, StepAnalysis};
use crate::scene::Scene;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Issue {
    UnknownPusher(String),
    /// Certificate and waypoint counts disagree.
    Malformed,
    /// Segment does not start where the previous one ended.
    Discontinuous,
    StepTooLong,
    GraspLost,
    ZeroStep,
    /// Stored verdict differs from the recomputed one.
    VerdictMismatch { stored: bool, recomputed: bool },
    CaseMismatch,
    /// Stored step is not a stable push.
    Infeasible,
    GoalMissed,
    SwitchoverCount,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepIssue {
    pub segment: usize,
    pub step: usize,
    pub issue: Issue,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Verification {
    pub steps_checked: usize,
    pub issues: Vec<StepIssue>,
}

impl Verification {
    pub fn is_ok(&self) -> bool {
        self.issues.is_empty()
    }
}

/// Recomputes every step's certificate and checks the plan's structure.
pub fn verify_plan(scene: &Scene, plan: &PushPlan) -> Verification {
    let mut v = Verification::default();
    let dt = scene.dynamics().time_step;
    let mut at = plan.init;
    let mut report = |segment, step, issue| v.issues.push(StepIssue { segment, step, issue });
    let mut steps_checked = 0;
    for (si, seg) in plan.segments.iter().enumerate() {
        let Some(pusher) = scene.pusher_index(&seg.pusher) else {
            report(si, 0, Issue::UnknownPusher(seg.pusher.clone()));
            continue;
        };
        if seg.waypoints.len() != seg.certificates.len() + 1 {
            report(si, 0, Issue::Malformed);
            continue;
        }
        if seg.waypoints[0] != at {
            report(si, 0, Issue::Discontinuous);
        }
        for (k, pair) in seg.waypoints.windows(2).enumerate() {
            steps_checked += 1;
            let (from, to) = (&pair[0], &pair[1]);
            if substep_count(scene.planner(), from, to) > 1 {
                report(si, k, Issue::StepTooLong);
            }
            if !grasp_maintained(scene, to) {
                report(si, k, Issue::GraspLost);
            }
            let stored = &seg.certificates[k];
            let twist = ObjectTwist::from_step(from, to, dt);
            let Ok(analysis) = StepAnalysis::new(scene, from, &twist) else {
                report(si, k, Issue::ZeroStep);
                continue;
            };
            let fresh = analysis.check(scene, pusher);
            if fresh.feasible != stored.feasible {
                report(
                    si,
                    k,
                    Issue::VerdictMismatch {
                        stored: stored.feasible,
                        recomputed: fresh.feasible,
                    },
                );
            }
            if fresh.case != stored.case {
                report(si, k, Issue::CaseMismatch);
            }
            if !stored.feasible {
                report(si, k, Issue::Infeasible);
            }
        }
        at = *seg.waypoints.last().expect("segments have a start pose");
    }
    let last = plan.segments.len().saturating_sub(1);
    if !in_goal_region(scene, &at, &plan.goal) || at != plan.final_pose {
        report(last, 0, Issue::GoalMissed);
    }
    let changes = plan
        .segments
        .windows(2)
        .filter(|w| w[0].pusher != w[1].pusher)
        .count();
    if changes != plan.switchovers {
        report(last, 0, Issue::SwitchoverCount);
    }
    v.steps_checked = steps_checked;
    v
}
