use serde::{Deserialize, Serialize};

use crate::dynamics::{grasp_maintained, FeasibilityCertificate, ObjectTwist, StepAnalysis};
use crate::pose::{distance, wrap_angle, GraspPose};
use crate::scene::{ResolvedPlannerParams, Scene};

/// One unit step of an edge, ending at `to`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub to: GraspPose,
    pub certificate: FeasibilityCertificate,
}

/// A push with a single pusher from the parent's pose to the child's.
#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub pusher: usize,
    pub steps: Vec<Step>,
}

/// Substeps of a straight-line motion, analyzed once and shared by pushers.
pub struct Motion {
    analyses: Vec<StepAnalysis>,
    targets: Vec<GraspPose>,
}

/// Number of unit steps needed to cover `from -> to`.
pub fn substep_count(params: &ResolvedPlannerParams, from: &GraspPose, to: &GraspPose) -> usize {
    let trans = ((to.x - from.x).powi(2) + (to.z - from.z).powi(2)).sqrt();
    let rot = wrap_angle(to.theta - from.theta).abs();
    let n = (trans / params.step_translation).max(rot / params.step_rotation);
    // Motions that are one step up to rounding stay one step.
    ((n - 1e-9).ceil() as usize).max(1)
}

impl Motion {
    /// `None` when the motion is empty or loses the grasp at any substep.
    pub fn new(scene: &Scene, from: &GraspPose, to: &GraspPose) -> Option<Motion> {
        let dt = scene.dynamics().time_step;
        let n = substep_count(scene.planner(), from, to);
        let mut analyses = Vec::with_capacity(n);
        let mut targets = Vec::with_capacity(n);
        let mut prev = *from;
        for k in 1..=n {
            let next = if k == n {
                *to
            } else {
                from.interpolate(to, k as f64 / n as f64)
            };
            if !grasp_maintained(scene, &next) {
                return None;
            }
            let twist = ObjectTwist::from_step(&prev, &next, dt);
            analyses.push(StepAnalysis::new(scene, &prev, &twist).ok()?);
            targets.push(next);
            prev = next;
        }
        Some(Motion { analyses, targets })
    }

    pub fn len(&self) -> usize {
        self.analyses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.analyses.is_empty()
    }

    /// Edge with every substep certified for `pusher`, if all are stable.
    pub fn certify(&self, scene: &Scene, pusher: usize) -> Option<Edge> {
        let mut steps = Vec::with_capacity(self.len());
        for (a, to) in self.analyses.iter().zip(&self.targets) {
            let certificate = a.check(scene, pusher);
            if !certificate.feasible {
                return None;
            }
            steps.push(Step { to: *to, certificate });
        }
        Some(Edge { pusher, steps })
    }

    /// First pusher, in the given order, that makes every substep stable.
    pub fn first_feasible(
        &self,
        scene: &Scene,
        order: impl IntoIterator<Item = usize>,
    ) -> Option<Edge> {
        order.into_iter().find_map(|p| self.certify(scene, p))
    }
}

#[derive(Debug, Clone)]
pub struct TreeNode {
    pub pose: GraspPose,
    pub parent: Option<usize>,
    pub edge: Option<Edge>,
    pub switchovers: usize,
    pub cost: f64,
    pub children: Vec<usize>,
}

impl TreeNode {
    pub fn incoming_pusher(&self) -> Option<usize> {
        self.edge.as_ref().map(|e| e.pusher)
    }
}

/// Search tree over grasp poses. Node ids are insertion indices.
#[derive(Debug, Clone)]
pub struct Tree {
    nodes: Vec<TreeNode>,
    goal: GraspPose,
    distance_weight: f64,
    switchover_weight: f64,
    rotation_weight: f64,
}

impl Tree {
    pub fn new(root: GraspPose, goal: GraspPose, params: &ResolvedPlannerParams) -> Self {
        let mut t = Self {
            nodes: Vec::new(),
            goal,
            distance_weight: params.distance_weight,
            switchover_weight: params.switchover_weight,
            rotation_weight: params.rotation_weight,
        };
        let cost = t.node_cost(&root, 0);
        t.nodes.push(TreeNode {
            pose: root,
            parent: None,
            edge: None,
            switchovers: 0,
            cost,
            children: Vec::new(),
        });
        t
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: usize) -> &TreeNode {
        &self.nodes[id]
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn goal(&self) -> &GraspPose {
        &self.goal
    }

    pub fn distance(&self, a: &GraspPose, b: &GraspPose) -> f64 {
        distance(a, b, self.rotation_weight)
    }

    /// Configuration cost used by the transition test.
    pub fn config_cost(&self, pose: &GraspPose) -> f64 {
        self.distance_weight * self.distance(pose, &self.goal)
    }

    pub fn node_cost(&self, pose: &GraspPose, switchovers: usize) -> f64 {
        self.config_cost(pose) + self.switchover_weight * switchovers as f64
    }

    /// Switch-overs of a child of `parent` entered with `pusher`.
    pub fn switchovers_via(&self, parent: usize, pusher: usize) -> usize {
        let n = &self.nodes[parent];
        n.switchovers + usize::from(n.incoming_pusher().is_some_and(|p| p != pusher))
    }

    pub fn nearest(&self, q: &GraspPose) -> usize {
        let mut best = (f64::INFINITY, 0);
        for (i, n) in self.nodes.iter().enumerate() {
            let d = self.distance(&n.pose, q);
            if d < best.0 {
                best = (d, i);
            }
        }
        best.1
    }

    /// Ids within `radius` of `q`, ascending.
    pub fn within(&self, q: &GraspPose, radius: f64) -> Vec<usize> {
        self.nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| self.distance(&n.pose, q) <= radius)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn insert(&mut self, parent: usize, edge: Edge, pose: GraspPose) -> usize {
        let switchovers = self.switchovers_via(parent, edge.pusher);
        let cost = self.node_cost(&pose, switchovers);
        let id = self.nodes.len();
        self.nodes.push(TreeNode {
            pose,
            parent: Some(parent),
            edge: Some(edge),
            switchovers,
            cost,
            children: Vec::new(),
        });
        self.nodes[parent].children.push(id);
        id
    }

    /// Moves `node` under `new_parent` and refreshes the subtree's counts.
    pub fn reparent(&mut self, node: usize, new_parent: usize, edge: Edge) {
        if let Some(old) = self.nodes[node].parent {
            self.nodes[old].children.retain(|&c| c != node);
        }
        self.nodes[new_parent].children.push(node);
        self.nodes[node].parent = Some(new_parent);
        self.nodes[node].edge = Some(edge);
        let mut stack = vec![node];
        while let Some(i) = stack.pop() {
            let parent = self.nodes[i].parent.expect("reparented nodes have parents");
            let pusher = self.nodes[i].incoming_pusher().expect("non-root node has an edge");
            let sw = self.switchovers_via(parent, pusher);
            self.nodes[i].switchovers = sw;
            self.nodes[i].cost = self.node_cost(&self.nodes[i].pose, sw);
            stack.extend(self.nodes[i].children.iter().copied());
        }
    }

    /// Root-to-node id sequence.
    pub fn path_to(&self, id: usize) -> Vec<usize> {
        let mut path = vec![id];
        let mut cur = id;
        while let Some(p) = self.nodes[cur].parent {
            path.push(p);
            cur = p;
        }
        path.reverse();
        path
    }

    /// Switch-overs along the root path, counted from scratch.
    pub fn recount_switchovers(&self, id: usize) -> usize {
        let pushers: Vec<usize> = self
            .path_to(id)
            .iter()
            .filter_map(|&i| self.nodes[i].incoming_pusher())
            .collect();
        pushers.windows(2).filter(|w| w[0] != w[1]).count()
    }
}

/// Pushers to try: preferred ones first, then the rest in scene order.
fn pusher_order(scene: &Scene, preferred: &[Option<usize>]) -> Vec<usize> {
    let mut order: Vec<usize> = Vec::with_capacity(scene.pushers().len());
    for p in preferred.iter().flatten() {
        if !order.contains(p) {
            order.push(*p);
        }
    }
    for p in 0..scene.pushers().len() {
        if !order.contains(&p) {
            order.push(p);
        }
    }
    order
}

/// Picks the in-radius parent that gives `q_new` the lowest cost.
///
/// `(parent, edge)` is the connection found by extension. Since the distance
/// term is shared, candidates compete on switch-overs, then insertion order.
pub fn optim_edge(
    tree: &Tree,
    scene: &Scene,
    q_new: &GraspPose,
    parent: usize,
    edge: Edge,
) -> (usize, Edge) {
    let mut best_key = (tree.switchovers_via(parent, edge.pusher), parent);
    let mut best = (parent, edge);
    for n in tree.within(q_new, scene.planner().rewire_radius) {
        let sw = tree.node(n).switchovers;
        if (sw, n) >= best_key {
            continue;
        }
        let Some(motion) = Motion::new(scene, &tree.node(n).pose, q_new) else {
            continue;
        };
        for p in pusher_order(scene, &[tree.node(n).incoming_pusher()]) {
            let key = (tree.switchovers_via(n, p), n);
            if key >= best_key {
                continue;
            }
            if let Some(e) = motion.certify(scene, p) {
                best_key = key;
                best = (n, e);
                break;
            }
        }
    }
    best
}

/// Re-parents in-radius nodes through `new` wherever that strictly lowers
/// their switch-over count. Returns the number of re-parented nodes.
pub fn rewire(tree: &mut Tree, scene: &Scene, new: usize) -> usize {
    let q_new = tree.node(new).pose;
    let sw_new = tree.node(new).switchovers;
    let parent = tree.node(new).parent;
    let mut changed = 0;
    for n in tree.within(&q_new, scene.planner().rewire_radius) {
        if n == new || Some(n) == parent || tree.node(n).switchovers <= sw_new {
            continue;
        }
        let mut motion = None;
        let order = pusher_order(
            scene,
            &[tree.node(new).incoming_pusher(), tree.node(n).incoming_pusher()],
        );
        for p in order {
            if tree.switchovers_via(new, p) >= tree.node(n).switchovers {
                continue;
            }
            let m = match &motion {
                Some(m) => m,
                None => match Motion::new(scene, &q_new, &tree.node(n).pose) {
                    Some(m) => motion.insert(m),
                    None => break,
                },
            };
            if let Some(e) = m.certify(scene, p) {
                tree.reparent(n, new, e);
                changed += 1;
                break;
            }
        }
    }
    changed
}
