//! Topological cognitive map (coarsest timescale).
//!
//! Each experience node stores one place canvas, the odometry pose at which
//! its frame was anchored, and a view-cell activation that decays every
//! environment step and refreshes on visit. Edges record the relative
//! transform between node frames, the forward-step cost of the traversal
//! that created them, and which door the crossing used on each side.

use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::allocentric::{PlaceCanvas, PlaceId, PlacePose, Transform};
use crate::gridworld::Action;
use crate::window::{rot_cw, Heading};

/// Accumulated odometry: translation in tiles plus heading, starting from
/// (0, 0, north) at episode start.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GlobalPose {
    pub x: i32,
    pub y: i32,
    pub heading: Heading,
}

impl GlobalPose {
    pub fn start() -> GlobalPose {
        GlobalPose {
            x: 0,
            y: 0,
            heading: Heading::North,
        }
    }

    pub fn new(x: i32, y: i32, heading: Heading) -> GlobalPose {
        GlobalPose { x, y, heading }
    }

    pub fn position(self) -> (i32, i32) {
        (self.x, self.y)
    }

    /// Interpret `local` in the frame anchored at `self` (frame origin at
    /// this pose, local north along this heading).
    pub fn compose(self, local: PlacePose) -> GlobalPose {
        let k = self.heading.index();
        let (dx, dy) = rot_cw((local.x, local.y), k);
        GlobalPose::new(self.x + dx, self.y + dy, local.heading.rotate_cw(k))
    }

    /// Express this pose in the frame anchored at `frame`.
    pub fn in_frame(self, frame: GlobalPose) -> PlacePose {
        let inv = (4 - frame.heading.index()) % 4;
        let (dx, dy) = rot_cw((self.x - frame.x, self.y - frame.y), inv);
        PlacePose::new(dx, dy, Heading::from_index(self.heading.index() + inv))
    }

    /// Rigid transform mapping coordinates of the frame anchored at `from`
    /// into the frame anchored at `to`.
    pub fn transform_between(from: GlobalPose, to: GlobalPose) -> Transform {
        let rot = (4 + from.heading.index() - to.heading.index()) % 4;
        let inv = (4 - to.heading.index()) % 4;
        let (dx, dy) = rot_cw((from.x - to.x, from.y - to.y), inv);
        Transform::new(rot, dx, dy)
    }
}

/// Pluggable odometry noise (the default integration is exact).
pub trait PoseNoise {
    fn perturb(&mut self, pose: GlobalPose) -> GlobalPose;
}

/// Exact integration: no perturbation.
pub struct NoNoise;

impl PoseNoise for NoNoise {
    fn perturb(&mut self, pose: GlobalPose) -> GlobalPose {
        pose
    }
}

/// Integrate one action into the odometry pose (exact).
pub fn pose_integrate(pose: GlobalPose, action: Action, collision: bool) -> GlobalPose {
    match action {
        Action::TurnLeft => GlobalPose::new(pose.x, pose.y, pose.heading.turn_left()),
        Action::TurnRight => GlobalPose::new(pose.x, pose.y, pose.heading.turn_right()),
        Action::Forward if collision => pose,
        Action::Forward => {
            let (dx, dy) = pose.heading.delta();
            GlobalPose::new(pose.x + dx, pose.y + dy, pose.heading)
        }
    }
}

/// Integrate with a noise model applied to the result.
pub fn pose_integrate_noisy(
    pose: GlobalPose,
    action: Action,
    collision: bool,
    noise: &mut dyn PoseNoise,
) -> GlobalPose {
    noise.perturb(pose_integrate(pose, action, collision))
}

/// A door crossing as seen from one node's frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DoorRef {
    /// Door tile in that node's local frame.
    pub cell: (i32, i32),
    /// Direction of travel through the door, in that node's frame.
    pub heading: Heading,
}

/// How the agent got from the previous node to the next one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Traversal {
    /// Forward steps taken between the node switches.
    pub forward_steps: u32,
    /// Door left through, in the source node's frame.
    pub from_door: Option<DoorRef>,
    /// Same door, in the destination node's frame.
    pub to_door: Option<DoorRef>,
}

/// One place in the map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperienceNode {
    pub id: PlaceId,
    pub canvas: PlaceCanvas,
    /// Odometry pose of the place frame origin (local (0,0) facing local
    /// north) at node creation.
    pub anchor: GlobalPose,
    /// View-cell activation in (0, 1]: decays each step, refreshes on visit.
    pub activation: f64,
    /// Environment step at which the node was created.
    pub created_at: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub from: PlaceId,
    pub to: PlaceId,
    /// Maps `from`-frame coordinates into `to`-frame coordinates.
    pub transform: Transform,
    /// Forward-step cost of the traversal that created the edge (>= 1).
    pub cost: u32,
    pub from_door: Option<DoorRef>,
    pub to_door: Option<DoorRef>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("node {0} does not exist")]
    UnknownNode(PlaceId),
    #[error("nodes {0} and {1} are not connected")]
    Disconnected(PlaceId, PlaceId),
    #[error("graph is empty")]
    Empty,
}

/// Verdict of the duplication guard.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GuardVerdict {
    Accept,
    /// The integrated pose is too far from where the candidate says the
    /// agent would be; the caller should duplicate the place instead.
    Duplicate,
}

/// Experience graph with activations and relative-transform edges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CognitiveGraph {
    nodes: BTreeMap<PlaceId, ExperienceNode>,
    edges: Vec<Edge>,
    current: Option<PlaceId>,
    next_id: u32,
}

impl CognitiveGraph {
    pub fn new() -> CognitiveGraph {
        CognitiveGraph {
            nodes: BTreeMap::new(),
            edges: Vec::new(),
            current: None,
            next_id: 0,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn current(&self) -> Option<PlaceId> {
        self.current
    }

    pub fn node(&self, id: PlaceId) -> Option<&ExperienceNode> {
        self.nodes.get(&id)
    }

    pub fn node_mut(&mut self, id: PlaceId) -> Option<&mut ExperienceNode> {
        self.nodes.get_mut(&id)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &ExperienceNode> {
        self.nodes.values()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Edges touching a node, in insertion order.
    pub fn edges_of(&self, id: PlaceId) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(move |e| e.from == id || e.to == id)
    }

    pub fn has_edge_between(&self, a: PlaceId, b: PlaceId) -> bool {
        self.edges
            .iter()
            .any(|e| (e.from == a && e.to == b) || (e.from == b && e.to == a))
    }

    /// Places adjacent to `id`.
    pub fn neighbors(&self, id: PlaceId) -> BTreeSet<PlaceId> {
        self.edges_of(id)
            .map(|e| if e.from == id { e.to } else { e.from })
            .collect()
    }

    /// Known places as (id, canvas) pairs in id order, for hypothesis
    /// spawning.
    pub fn known_places(&self) -> Vec<(PlaceId, &PlaceCanvas)> {
        self.nodes.values().map(|n| (n.id, &n.canvas)).collect()
    }

    fn push_edge(&mut self, from: PlaceId, to: PlaceId, traversal: Traversal) {
        let from_anchor = self.nodes[&from].anchor;
        let to_anchor = self.nodes[&to].anchor;
        self.edges.push(Edge {
            from,
            to,
            transform: GlobalPose::transform_between(from_anchor, to_anchor),
            cost: traversal.forward_steps.max(1),
            from_door: traversal.from_door,
            to_door: traversal.to_door,
        });
    }

    /// Insert a new experience node and make it current. When the agent came
    /// from an existing node, an edge carrying the observed traversal is
    /// added.
    pub fn add_node(
        &mut self,
        canvas: PlaceCanvas,
        anchor: GlobalPose,
        created_at: u64,
        traversal: Option<Traversal>,
    ) -> PlaceId {
        let id = PlaceId(self.next_id);
        self.next_id += 1;
        self.nodes.insert(
            id,
            ExperienceNode {
                id,
                canvas,
                anchor,
                activation: 1.0,
                created_at,
            },
        );
        if let (Some(prev), Some(traversal)) = (self.current, traversal) {
            self.push_edge(prev, id, traversal);
        }
        self.current = Some(id);
        id
    }

    /// Re-enter a known place: refresh its activation and close the loop with
    /// a new edge when the arrival came along a connection that does not
    /// exist yet.
    pub fn localize(
        &mut self,
        id: PlaceId,
        traversal: Option<Traversal>,
    ) -> Result<(), GraphError> {
        if !self.nodes.contains_key(&id) {
            return Err(GraphError::UnknownNode(id));
        }
        let prev = self.current;
        if let (Some(prev), Some(traversal)) = (prev, traversal) {
            if prev != id && !self.has_edge_between(prev, id) {
                self.push_edge(prev, id, traversal);
            }
        }
        self.nodes.get_mut(&id).unwrap().activation = 1.0;
        self.current = Some(id);
        Ok(())
    }

    /// Check whether localizing into `candidate` with the agent at
    /// `local_in_candidate` is consistent with integrated odometry.
    pub fn duplicate_guard(
        &self,
        candidate: PlaceId,
        local_in_candidate: PlacePose,
        integrated: GlobalPose,
        dup_radius: f64,
    ) -> Result<GuardVerdict, GraphError> {
        let node = self
            .nodes
            .get(&candidate)
            .ok_or(GraphError::UnknownNode(candidate))?;
        let implied = node.anchor.compose(local_in_candidate);
        let dx = (implied.x - integrated.x) as f64;
        let dy = (implied.y - integrated.y) as f64;
        let heading_penalty = {
            let diff = (4 + implied.heading.index() as i32 - integrated.heading.index() as i32) % 4;
            let quarter = diff.min(4 - diff) as f64;
            quarter * 4.0
        };
        let distance = (dx * dx + dy * dy).sqrt() + heading_penalty;
        Ok(if distance > dup_radius {
            GuardVerdict::Duplicate
        } else {
            GuardVerdict::Accept
        })
    }

    /// Decay every view-cell activation by `rho`; called once per
    /// environment step.
    pub fn decay_tick(&mut self, rho: f64) {
        for node in self.nodes.values_mut() {
            node.activation *= rho;
        }
    }

    /// Node with minimal activation; ties go to the oldest node.
    pub fn least_explored(&self) -> Result<PlaceId, GraphError> {
        self.nodes
            .values()
            .min_by(|a, b| {
                a.activation
                    .total_cmp(&b.activation)
                    .then(a.created_at.cmp(&b.created_at))
                    .then(a.id.cmp(&b.id))
            })
            .map(|n| n.id)
            .ok_or(GraphError::Empty)
    }

    /// Minimal-cost node path under edge costs (edges walkable both ways).
    pub fn shortest_path(
        &self,
        from: PlaceId,
        to: PlaceId,
    ) -> Result<(Vec<PlaceId>, u32), GraphError> {
        if !self.nodes.contains_key(&from) {
            return Err(GraphError::UnknownNode(from));
        }
        if !self.nodes.contains_key(&to) {
            return Err(GraphError::UnknownNode(to));
        }
        if from == to {
            return Ok((vec![from], 0));
        }

        let mut dist: BTreeMap<PlaceId, u32> = BTreeMap::new();
        let mut prev: BTreeMap<PlaceId, PlaceId> = BTreeMap::new();
        let mut heap: BinaryHeap<std::cmp::Reverse<(u32, PlaceId)>> = BinaryHeap::new();
        dist.insert(from, 0);
        heap.push(std::cmp::Reverse((0, from)));
        while let Some(std::cmp::Reverse((d, node))) = heap.pop() {
            if dist.get(&node).copied() != Some(d) {
                continue;
            }
            if node == to {
                break;
            }
            let mut steps: Vec<(PlaceId, u32)> = self
                .edges_of(node)
                .map(|e| {
                    let other = if e.from == node { e.to } else { e.from };
                    (other, e.cost)
                })
                .collect();
            steps.sort();
            for (other, cost) in steps {
                let nd = d + cost;
                if dist.get(&other).is_none_or(|&cur| nd < cur) {
                    dist.insert(other, nd);
                    prev.insert(other, node);
                    heap.push(std::cmp::Reverse((nd, other)));
                }
            }
        }

        let total = *dist.get(&to).ok_or(GraphError::Disconnected(from, to))?;
        let mut path = vec![to];
        let mut cursor = to;
        while cursor != from {
            cursor = prev[&cursor];
            path.push(cursor);
        }
        path.reverse();
        Ok((path, total))
    }

    /// Recenter a node's canvas by `delta` (content at local p moves to
    /// p + delta), keeping the anchor, edge transforms, and door records
    /// consistent with the shifted frame.
    pub fn recenter_node(&mut self, id: PlaceId, delta: (i32, i32)) -> Result<(), GraphError> {
        let node = self.nodes.get_mut(&id).ok_or(GraphError::UnknownNode(id))?;
        if node.canvas.recenter(delta).is_err() {
            // Caller checked fit; treat as no-op on overflow.
            return Ok(());
        }
        let k = node.anchor.heading.index();
        let (wx, wy) = rot_cw(delta, k);
        node.anchor = GlobalPose::new(node.anchor.x - wx, node.anchor.y - wy, node.anchor.heading);
        let anchors: BTreeMap<PlaceId, GlobalPose> =
            self.nodes.values().map(|n| (n.id, n.anchor)).collect();
        for edge in &mut self.edges {
            if edge.from == id {
                if let Some(d) = &mut edge.from_door {
                    d.cell = (d.cell.0 + delta.0, d.cell.1 + delta.1);
                }
            }
            if edge.to == id {
                if let Some(d) = &mut edge.to_door {
                    d.cell = (d.cell.0 + delta.0, d.cell.1 + delta.1);
                }
            }
            if edge.from == id || edge.to == id {
                edge.transform =
                    GlobalPose::transform_between(anchors[&edge.from], anchors[&edge.to]);
            }
        }
        Ok(())
    }

    /// First node whose canvas knows the goal tile, with the goal's local
    /// cell.
    pub fn find_goal(&self) -> Option<(PlaceId, (i32, i32))> {
        for node in self.nodes.values() {
            let map = node.canvas.complete();
            let found = map
                .known_cells()
                .find(|&(_, kind)| kind == crate::gridworld::TileKind::Goal);
            if let Some((cell, _)) = found {
                return Some((node.id, cell));
            }
        }
        None
    }
}

impl Default for CognitiveGraph {
    fn default() -> CognitiveGraph {
        CognitiveGraph::new()
    }
}

impl CognitiveGraph {
    /// Reassemble a graph from persisted parts, checking referential
    /// integrity.
    pub fn from_parts(
        nodes: Vec<ExperienceNode>,
        edges: Vec<Edge>,
        current: Option<PlaceId>,
        next_id: u32,
    ) -> Result<CognitiveGraph, String> {
        let map: BTreeMap<PlaceId, ExperienceNode> =
            nodes.into_iter().map(|n| (n.id, n)).collect();
        for edge in &edges {
            if !map.contains_key(&edge.from) || !map.contains_key(&edge.to) {
                return Err(format!("edge {}-{} references a missing node", edge.from, edge.to));
            }
        }
        if let Some(c) = current {
            if !map.contains_key(&c) {
                return Err(format!("current node {c} does not exist"));
            }
        }
        if map.keys().any(|id| id.0 >= next_id) {
            return Err("next id collides with an existing node".to_string());
        }
        Ok(CognitiveGraph {
            nodes: map,
            edges,
            current,
            next_id,
        })
    }
}
