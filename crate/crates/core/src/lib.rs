//! Planar in-hand regrasp planning with stable prehensile pushes.
//!
//! A grasped object is moved within a parallel-jaw grasp by external pushers
//! that stick to it. [`dynamics`] decides whether one small object motion is
//! such a push; [`planner`] chains those steps into a regrasp strategy that
//! keeps pusher switch-overs low.

pub mod bench;
pub mod cone;
pub mod dynamics;
pub mod par;
pub mod plan_file;
pub mod planner;
pub mod pose;
pub mod render;
pub mod scene;

pub use cone::{Wrench, WrenchCone, WrenchPolytope};
pub use dynamics::{check_stable_push, FeasibilityCertificate, ObjectTwist};
pub use plan_file::PlanDocument;
pub use planner::{plan, plan_with, PlanOptions, PushPlan};
pub use pose::GraspPose;
pub use scene::Scene;
