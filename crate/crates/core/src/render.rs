//! SVG keyframes of a plan, drawn in the gripper frame.
//!
//! The fingers stay put while the object moves. Each frame shows the object
//! at one pose, the finger patch in green, pushers (the active one in
//! magenta), the goal outline and the path traced so far. Numbers are
//! printed at fixed precision, so output is byte-stable.

use std::fmt::Write as _;

use nalgebra::Vector2;

use crate::planner::PushPlan;
use crate::pose::GraspPose;
use crate::scene::{PatchGeometry, Scene};

/// Every `KEYFRAME_STRIDE`-th pose is drawn, plus segment ends.
pub const KEYFRAME_STRIDE: usize = 5;

const FINGER: &str = "#2ca02c";
const ACTIVE: &str = "#d62cd6";
const IDLE: &str = "#9a9a9a";

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    /// Index into [`PushPlan::poses`].
    pub pose_index: usize,
    pub file_name: String,
    pub svg: String,
}

/// Pose indices to draw: the stride, every segment boundary and the end.
pub fn keyframes(plan: &PushPlan) -> Vec<usize> {
    let last = plan.step_count();
    let mut out: Vec<usize> = (0..=last).step_by(KEYFRAME_STRIDE).collect();
    let mut at = 0;
    for seg in &plan.segments {
        at += seg.certificates.len();
        out.push(at);
    }
    out.push(last);
    out.sort_unstable();
    out.dedup();
    out
}

/// Pusher moving the object out of pose `k`; the last pose keeps the last one.
fn active_pusher(plan: &PushPlan, k: usize) -> Option<&str> {
    let mut start = 0;
    for seg in &plan.segments {
        let end = start + seg.certificates.len();
        if k < end {
            return Some(&seg.pusher);
        }
        start = end;
    }
    plan.segments.last().map(|s| s.pusher.as_str())
}

struct View {
    min: Vector2<f64>,
    max: Vector2<f64>,
}

impl View {
    fn new(points: impl Iterator<Item = Vector2<f64>>) -> Self {
        let mut min = Vector2::repeat(f64::INFINITY);
        let mut max = Vector2::repeat(f64::NEG_INFINITY);
        for p in points {
            min = min.inf(&p);
            max = max.sup(&p);
        }
        let pad = 0.1 * (max - min).max() + 2e-3;
        Self {
            min: min.add_scalar(-pad),
            max: max.add_scalar(pad),
        }
    }

    /// Gripper-frame metres to SVG user units (mm, y down).
    fn map(&self, p: Vector2<f64>) -> (f64, f64) {
        ((p.x - self.min.x) * 1e3, (self.max.y - p.y) * 1e3)
    }

    fn size(&self) -> (f64, f64) {
        ((self.max.x - self.min.x) * 1e3, (self.max.y - self.min.y) * 1e3)
    }
}

fn points_attr(view: &View, pts: impl Iterator<Item = Vector2<f64>>) -> String {
    let mut s = String::new();
    for (i, p) in pts.enumerate() {
        let (x, y) = view.map(p);
        if i > 0 {
            s.push(' ');
        }
        let _ = write!(s, "{x:.3},{y:.3}");
    }
    s
}

fn patch_svg(view: &View, patch: &PatchGeometry, pose: &GraspPose, color: &str, width: f64) -> String {
    match patch {
        PatchGeometry::Point { at } => {
            let (x, y) = view.map(pose.to_gripper(*at));
            format!("<circle cx=\"{x:.3}\" cy=\"{y:.3}\" r=\"{:.3}\" fill=\"{color}\"/>\n", width)
        }
        PatchGeometry::Line { start, end } => {
            let (x1, y1) = view.map(pose.to_gripper(*start));
            let (x2, y2) = view.map(pose.to_gripper(*end));
            format!(
                "<line x1=\"{x1:.3}\" y1=\"{y1:.3}\" x2=\"{x2:.3}\" y2=\"{y2:.3}\" stroke=\"{color}\" stroke-width=\"{width:.3}\" stroke-linecap=\"round\"/>\n"
            )
        }
        PatchGeometry::Circle { center, radius } => {
            let (x, y) = view.map(pose.to_gripper(*center));
            format!(
                "<circle cx=\"{x:.3}\" cy=\"{y:.3}\" r=\"{:.3}\" fill=\"{color}\" fill-opacity=\"0.6\" stroke=\"{color}\"/>\n",
                radius * 1e3
            )
        }
    }
}

/// One SVG per keyframe. An empty plan gives a single frame at the start pose.
pub fn render_plan(scene: &Scene, plan: &PushPlan) -> Vec<Frame> {
    let poses = plan.poses();
    let silhouette = &scene.object().silhouette;
    let view = View::new(
        poses
            .iter()
            .chain(std::iter::once(&plan.goal))
            .flat_map(|q| silhouette.iter().map(move |p| q.to_gripper(*p)))
            .chain(scene.finger_contacts().iter().map(|c| c.position)),
    );
    let (w, h) = view.size();
    let keys = keyframes(plan);
    let identity = GraspPose::default();
    keys.iter()
        .enumerate()
        .map(|(n, &k)| {
            let q = poses[k];
            let active = active_pusher(plan, k);
            let mut svg = format!(
                "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {w:.3} {h:.3}\" width=\"{:.0}\" height=\"{:.0}\">\n",
                w * 8.0,
                h * 8.0
            );
            let _ = writeln!(svg, "<rect width=\"{w:.3}\" height=\"{h:.3}\" fill=\"white\"/>");
            let _ = writeln!(
                svg,
                "<polygon points=\"{}\" fill=\"none\" stroke=\"#4a7fd1\" stroke-width=\"0.3\" stroke-dasharray=\"1,1\"/>",
                points_attr(&view, silhouette.iter().map(|p| plan.goal.to_gripper(*p)))
            );
            let _ = writeln!(
                svg,
                "<polygon points=\"{}\" fill=\"#e4e4e4\" stroke=\"#333333\" stroke-width=\"0.4\"/>",
                points_attr(&view, silhouette.iter().map(|p| q.to_gripper(*p)))
            );
            if k > 0 {
                let _ = writeln!(
                    svg,
                    "<polyline points=\"{}\" fill=\"none\" stroke=\"#333333\" stroke-width=\"0.25\"/>",
                    points_attr(&view, poses[..=k].iter().map(|p| p.translation()))
                );
            }
            for p in scene.pushers() {
                let (color, width) = if Some(p.id.as_str()) == active {
                    (ACTIVE, 1.2)
                } else {
                    (IDLE, 0.6)
                };
                svg += &patch_svg(&view, &p.geometry, &q, color, width);
            }
            svg += &patch_svg(&view, &scene.fingers().patch, &identity, FINGER, 0.8);
            let [x, z, th] = q.to_mm_deg();
            let _ = writeln!(
                svg,
                "<text x=\"1\" y=\"4\" font-family=\"monospace\" font-size=\"3\">step {k}/{}  x {x:.2} mm  z {z:.2} mm  theta {th:.2} deg  pusher {}</text>",
                poses.len() - 1,
                active.unwrap_or("-")
            );
            svg += "</svg>\n";
            Frame {
                pose_index: k,
                file_name: format!("frame_{n:04}.svg"),
                svg,
            }
        })
        .collect()
}
