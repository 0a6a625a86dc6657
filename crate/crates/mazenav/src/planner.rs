//! Expected-free-energy planning at three nested levels.
//!
//! The agent scores candidate targets by how much uncertainty they resolve
//! (epistemic value: canvas cells that would stop being unknown) and how well
//! they satisfy the goal preference (pragmatic value: standing on the white
//! tile), minus a small path-cost penalty. Location policy over the graph,
//! pose policy within the place, action policy over motions.

use std::collections::{BTreeMap, BinaryHeap, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::allocentric::{LocalRect, PlaceCanvas, PlaceId, PlacePose, RoomExit};
use crate::cogmap::CognitiveGraph;
use crate::egocentric::{ego_predict, EgoState};
use crate::gridworld::{Action, TileKind};
use crate::window::{self, Heading, Sight};

/// Outcome preference inducing goal-directed behaviour. `Flat` leaves the
/// agent purely epistemic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Preference {
    Flat,
    GoalTile { bonus: f64 },
}

impl Preference {
    pub fn goal() -> Preference {
        Preference::GoalTile {
            bonus: PlanParams::default().goal_bonus,
        }
    }
}

/// Expected-free-energy decomposition for one candidate. Lower total is
/// better.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EfeScore {
    /// Expected newly-resolved canvas cells (>= 0).
    pub epistemic: f64,
    /// Goal-preference satisfaction.
    pub pragmatic: f64,
}

impl EfeScore {
    pub fn total(&self) -> f64 {
        -self.epistemic - self.pragmatic
    }
}

/// Planner constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlanParams {
    /// Pragmatic bonus for standing on the goal tile; dominates any epistemic
    /// term.
    pub goal_bonus: f64,
    /// Path-cost weight (per forward-step equivalent).
    pub path_weight: f64,
    /// Cost of a turn relative to a forward step of 1.
    pub turn_cost: f64,
}

impl Default for PlanParams {
    fn default() -> PlanParams {
        PlanParams {
            goal_bonus: 1000.0,
            path_weight: 0.1,
            turn_cost: 0.25,
        }
    }
}

/// Integer cost units per forward step (turns cost a quarter of this).
const FORWARD_UNITS: u32 = 4;

/// Mid-level pose policy: where to stand (and face) within the place.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyMid {
    pub target: PlacePose,
    pub score: EfeScore,
    /// Path cost to the target in forward-step equivalents.
    pub path_cost: f64,
    /// The target deliberately crosses a door (exit or node travel); paths
    /// to it may pass door cells.
    pub crossing: bool,
}

/// Top-level location policy: which node to head for, along which node path.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyTop {
    pub target: PlaceId,
    pub path: Vec<PlaceId>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PlanError {
    /// No reachable pose offers any epistemic or pragmatic value.
    #[error("no mid-level target with finite expected value")]
    NoTarget,
    /// The requested target cannot be reached under current knowledge.
    #[error("no low-level path to the target")]
    NoPath,
}

/// Number of canvas cells currently unknown that would become visible from
/// `pose` under the occlusion rule applied to the canvas MAP (unknown cells
/// are see-through). The agent's own cell does not count.
///
/// Known door cells are treated as opaque here even when open: epistemic
/// value is room-local, and crossings are decided deliberately rather than
/// by chasing unknowns that belong to the neighbouring place.
pub fn info_gain(canvas: &PlaceCanvas, pose: PlacePose) -> usize {
    info_gain_in(canvas, pose, None)
}

/// Same as [`info_gain`], optionally counting only cells inside `region`.
pub fn info_gain_in(canvas: &PlaceCanvas, pose: PlacePose, region: Option<&LocalRect>) -> usize {
    if !canvas.in_bounds(pose.x, pose.y) {
        return 0;
    }
    let vis = window::visibility(|row, col| {
        let (x, y) = window::cell_to_grid(pose.x, pose.y, pose.heading, row, col);
        Some(match canvas.map_kind(x, y) {
            Some(TileKind::Door { .. }) => Sight::Opaque,
            Some(kind) if !kind.transparent() => Sight::Opaque,
            _ => Sight::Transparent,
        })
    });
    let mut gain = 0;
    for row in 0..window::WINDOW {
        for col in 0..window::WINDOW {
            if (row, col) == (window::AGENT_ROW, window::AGENT_COL) || !vis[row][col] {
                continue;
            }
            let (x, y) = window::cell_to_grid(pose.x, pose.y, pose.heading, row, col);
            if !canvas.in_bounds(x, y) || canvas.evidence_total(x, y) > 0 {
                continue;
            }
            if region.is_none_or(|r| r.contains(x, y)) {
                gain += 1;
            }
        }
    }
    gain
}

/// Unknown-optimistic traversability on the canvas MAP, with the ego buffer
/// overriding cells it has fresher knowledge of. With `doors_block`, known
/// door cells are impassable too (room-local reachability).
fn blocked(
    canvas: &PlaceCanvas,
    ego_walls: &BTreeMap<(i32, i32), bool>,
    doors_block: bool,
    x: i32,
    y: i32,
) -> bool {
    if doors_block && matches!(canvas.map_kind(x, y), Some(TileKind::Door { .. })) {
        return true;
    }
    if let Some(&wall) = ego_walls.get(&(x, y)) {
        return wall;
    }
    matches!(canvas.map_kind(x, y), Some(TileKind::Wall))
}

/// Project the ego buffer into place coordinates given the agent's local
/// pose. Maps cell -> "is wall".
fn ego_overlay(ego: &EgoState, local: PlacePose) -> BTreeMap<(i32, i32), bool> {
    let mut out = BTreeMap::new();
    let r = crate::egocentric::MIN_BUFFER_RADIUS as i32;
    let (fx, fy) = local.heading.delta();
    let (rx, ry) = local.heading.turn_right().delta();
    for fwd in -r..=r {
        for lat in -r..=r {
            if let Some(kind) = ego.known(fwd, lat) {
                let x = local.x + fwd * fx + lat * rx;
                let y = local.y + fwd * fy + lat * ry;
                out.insert((x, y), kind == TileKind::Wall);
            }
        }
    }
    out
}

/// Dijkstra over (cell, heading) states from `start`. Forward costs
/// `FORWARD_UNITS`, turns cost 1 unit. Returns cost and predecessor maps.
#[allow(clippy::type_complexity)]
fn pose_search(
    canvas: &PlaceCanvas,
    ego_walls: &BTreeMap<(i32, i32), bool>,
    doors_block: bool,
    start: PlacePose,
) -> (
    BTreeMap<(i32, i32, u8), u32>,
    BTreeMap<(i32, i32, u8), ((i32, i32, u8), Action)>,
) {
    let key = |p: PlacePose| (p.x, p.y, p.heading.index());
    let mut dist: BTreeMap<(i32, i32, u8), u32> = BTreeMap::new();
    let mut prev: BTreeMap<(i32, i32, u8), ((i32, i32, u8), Action)> = BTreeMap::new();
    let mut heap: BinaryHeap<std::cmp::Reverse<(u32, (i32, i32, u8))>> = BinaryHeap::new();
    dist.insert(key(start), 0);
    heap.push(std::cmp::Reverse((0, key(start))));

    while let Some(std::cmp::Reverse((d, at))) = heap.pop() {
        if dist.get(&at).copied() != Some(d) {
            continue;
        }
        let pose = PlacePose::new(at.0, at.1, Heading::from_index(at.2));
        for action in Action::ALL {
            let (next, cost) = match action {
                Action::Forward => {
                    let (dx, dy) = pose.heading.delta();
                    let target = (pose.x + dx, pose.y + dy);
                    if !canvas.in_bounds(target.0, target.1)
                        || blocked(canvas, ego_walls, doors_block, target.0, target.1)
                    {
                        continue;
                    }
                    (
                        PlacePose::new(target.0, target.1, pose.heading),
                        FORWARD_UNITS,
                    )
                }
                Action::TurnLeft => (
                    PlacePose::new(pose.x, pose.y, pose.heading.turn_left()),
                    1,
                ),
                Action::TurnRight => (
                    PlacePose::new(pose.x, pose.y, pose.heading.turn_right()),
                    1,
                ),
            };
            let nk = key(next);
            let nd = d + cost;
            if dist.get(&nk).is_none_or(|&cur| nd < cur) {
                dist.insert(nk, nd);
                prev.insert(nk, (at, action));
                heap.push(std::cmp::Reverse((nd, nk)));
            }
        }
    }
    (dist, prev)
}

/// Pragmatic value of standing at `pose`.
fn pragmatic_value(canvas: &PlaceCanvas, pose: PlacePose, pref: &Preference) -> f64 {
    match pref {
        Preference::Flat => 0.0,
        Preference::GoalTile { bonus } => {
            if canvas.map_kind(pose.x, pose.y) == Some(TileKind::Goal) {
                *bonus
            } else {
                0.0
            }
        }
    }
}

/// Select the mid-level pose target: the reachable pose minimizing
/// `-info_gain - pragmatic + path_weight * path_cost`.
pub fn efe_mid(
    canvas: &PlaceCanvas,
    current: PlacePose,
    pref: &Preference,
    params: &PlanParams,
) -> Result<PolicyMid, PlanError> {
    efe_mid_bounded(canvas, &EgoState::new(6, 0), current, pref, None, &[], params)
}

/// [`efe_mid`] with an optional gain-counting region, an ego overlay, and an
/// exclusion list of targets that recently failed.
pub fn efe_mid_bounded(
    canvas: &PlaceCanvas,
    ego: &EgoState,
    current: PlacePose,
    pref: &Preference,
    region: Option<&LocalRect>,
    exclude: &[PlacePose],
    params: &PlanParams,
) -> Result<PolicyMid, PlanError> {
    let ego_walls = ego_overlay(ego, current);
    let (dist, _) = pose_search(canvas, &ego_walls, true, current);

    let mut best: Option<(f64, PolicyMid)> = None;
    for (&(x, y, h), &cost_units) in &dist {
        let pose = PlacePose::new(x, y, Heading::from_index(h));
        if exclude.contains(&pose) {
            continue;
        }
        let epistemic = info_gain_in(canvas, pose, region) as f64;
        let pragmatic = pragmatic_value(canvas, pose, pref);
        if epistemic == 0.0 && pragmatic == 0.0 {
            continue;
        }
        let path_cost = cost_units as f64 / FORWARD_UNITS as f64;
        let score = EfeScore {
            epistemic,
            pragmatic,
        };
        let total = score.total() + params.path_weight * path_cost;
        // Deterministic tie-break: lowest (y, x, heading index).
        let better = match &best {
            None => true,
            Some((bt, bp)) => {
                total < *bt
                    || (total == *bt
                        && (y, x, h) < (bp.target.y, bp.target.x, bp.target.heading.index()))
            }
        };
        if better {
            best = Some((
                total,
                PolicyMid {
                    target: pose,
                    score,
                    path_cost,
                    crossing: false,
                },
            ));
        }
    }
    best.map(|(_, p)| p).ok_or(PlanError::NoTarget)
}

/// Exits of a node's room that no recorded edge traversal accounts for.
pub fn unmatched_exits(graph: &CognitiveGraph, id: PlaceId) -> Option<Vec<RoomExit>> {
    let node = graph.node(id)?;
    let bounds = node.canvas.room_bounds()?;
    let mut door_cells: Vec<(i32, i32)> = Vec::new();
    for edge in graph.edges_of(id) {
        let door = if edge.from == id {
            edge.from_door
        } else {
            edge.to_door
        };
        if let Some(d) = door {
            door_cells.push(d.cell);
        }
    }
    Some(
        bounds
            .exits
            .into_iter()
            .filter(|exit| {
                let (ex, ey) = exit.door_cell();
                !door_cells
                    .iter()
                    .any(|&(dx, dy)| (ex - dx).abs().max((ey - dy).abs()) <= 1)
            })
            .collect(),
    )
}

/// Top-level location policy.
///
/// With a known goal under a goal preference, head for the goal's node.
/// Otherwise stay while the current room still has unexplored doors (the mid
/// level will walk through them), and fall back to the least-explored node
/// when the local frontier is exhausted.
pub fn efe_top(graph: &CognitiveGraph, pref: &Preference) -> Option<PolicyTop> {
    let current = graph.current()?;
    if matches!(pref, Preference::GoalTile { .. }) {
        if let Some((goal_node, _)) = graph.find_goal() {
            let (path, _) = graph.shortest_path(current, goal_node).ok()?;
            return Some(PolicyTop {
                target: goal_node,
                path,
            });
        }
    }
    match unmatched_exits(graph, current) {
        // Unexplored doors here, or walls not yet mapped: stay.
        None => Some(PolicyTop {
            target: current,
            path: vec![current],
        }),
        Some(exits) if !exits.is_empty() => Some(PolicyTop {
            target: current,
            path: vec![current],
        }),
        Some(_) => {
            let target = graph.least_explored().ok()?;
            let (path, _) = graph.shortest_path(current, target).ok()?;
            Some(PolicyTop { target, path })
        }
    }
}

/// Minimal-cost action sequence from `current` to `target` over the canvas
/// MAP (unknown-optimistic), vetoed cell-by-cell by the ego buffer's known
/// walls.
pub fn efe_low(
    canvas: &PlaceCanvas,
    ego: &EgoState,
    current: PlacePose,
    target: PlacePose,
) -> Result<Vec<Action>, PlanError> {
    efe_low_opts(canvas, ego, current, target, false)
}

/// [`efe_low`] with room-local pathing: with `doors_block`, paths may not
/// pass through known door cells (used for exploration targets so that only
/// deliberate crossings leave the room).
pub fn efe_low_opts(
    canvas: &PlaceCanvas,
    ego: &EgoState,
    current: PlacePose,
    target: PlacePose,
    doors_block: bool,
) -> Result<Vec<Action>, PlanError> {
    if current == target {
        return Ok(Vec::new());
    }
    let ego_walls = ego_overlay(ego, current);
    let (dist, prev) = pose_search(canvas, &ego_walls, doors_block, current);
    let goal_key = (target.x, target.y, target.heading.index());
    if !dist.contains_key(&goal_key) {
        return Err(PlanError::NoPath);
    }
    let mut actions = Vec::new();
    let mut cursor = goal_key;
    let start_key = (current.x, current.y, current.heading.index());
    while cursor != start_key {
        let (p, action) = prev[&cursor];
        actions.push(action);
        cursor = p;
    }
    actions.reverse();
    Ok(actions)
}

/// Cost of an action path in forward-step equivalents.
pub fn path_cost(actions: &[Action], params: &PlanParams) -> f64 {
    actions
        .iter()
        .map(|a| match a {
            Action::Forward => 1.0,
            _ => params.turn_cost,
        })
        .sum()
}

/// Everything the planner needs to see for one decision.
pub struct PlanContext<'a> {
    /// Canvas of the current place (the tentative one while deciding).
    pub canvas: &'a PlaceCanvas,
    /// Agent pose in that canvas frame.
    pub local: PlacePose,
    pub ego: &'a EgoState,
    pub graph: &'a CognitiveGraph,
    pub pref: &'a Preference,
    /// Hypothesis phase active: plan only within the tentative place.
    pub deciding: bool,
    /// Bumped by the agent on every place switch or reset.
    pub place_generation: u64,
    /// The environment reported a collision the planner did not predict.
    pub unpredicted_collision: bool,
}

/// Hierarchical action dispatcher with cached policies.
pub struct Planner {
    params: PlanParams,
    generation: u64,
    mid: Option<PolicyMid>,
    low: VecDeque<Action>,
    /// Mid targets that turned out unreachable since the last new evidence.
    blocked_targets: Vec<PlacePose>,
    blocked_at_count: u32,
    /// Last top-level policy, for inspection.
    pub last_top: Option<PolicyTop>,
}

impl Planner {
    pub fn new(params: PlanParams) -> Planner {
        Planner {
            params,
            generation: 0,
            mid: None,
            low: VecDeque::new(),
            blocked_targets: Vec::new(),
            blocked_at_count: 0,
            last_top: None,
        }
    }

    pub fn params(&self) -> &PlanParams {
        &self.params
    }

    fn invalidate(&mut self) {
        self.mid = None;
        self.low.clear();
    }

    /// The currently cached mid-level target, if any.
    pub fn mid_target(&self) -> Option<PlacePose> {
        self.mid.map(|m| m.target)
    }

    /// Pick the next action.
    pub fn plan_step(&mut self, ctx: &PlanContext) -> Action {
        if ctx.place_generation != self.generation {
            self.generation = ctx.place_generation;
            self.invalidate();
            self.blocked_targets.clear();
            self.last_top = None;
        }
        if ctx.unpredicted_collision {
            self.invalidate();
        }
        if ctx.canvas.observation_count() != self.blocked_at_count {
            self.blocked_targets.clear();
            self.blocked_at_count = ctx.canvas.observation_count();
        }

        // Mid-level refresh conditions: reached, or its value evaporated.
        if let Some(mid) = self.mid {
            let reached = ctx.local == mid.target;
            let value_gone = mid.score.pragmatic == 0.0
                && info_gain(ctx.canvas, mid.target) == 0;
            if reached || value_gone {
                self.invalidate();
            }
        }

        // Validate the queued path against fresh knowledge: every remaining
        // forward must stay on believed-traversable cells (and out of door
        // cells unless this is a deliberate crossing), and the path must
        // still end at the target.
        if let Some(mid) = self.mid {
            if !self.low.is_empty() {
                let ego_walls = ego_overlay(ctx.ego, ctx.local);
                let mut sim = ctx.local;
                let mut ok = true;
                for &a in &self.low {
                    if a == Action::Forward {
                        let (dx, dy) = sim.heading.delta();
                        let t = (sim.x + dx, sim.y + dy);
                        if !ctx.canvas.in_bounds(t.0, t.1)
                            || blocked(ctx.canvas, &ego_walls, !mid.crossing, t.0, t.1)
                        {
                            ok = false;
                            break;
                        }
                    }
                    sim = sim.advanced(a, false);
                }
                if ok && sim != mid.target {
                    ok = false;
                }
                if !ok {
                    self.invalidate();
                }
            }
        }
        if let Some(&next) = self.low.front() {
            if next == Action::Forward && ego_predict(ctx.ego, Action::Forward).collision_prob == 1.0
            {
                self.invalidate();
            }
        }

        if self.mid.is_none() {
            self.select_mid(ctx);
        }
        if self.low.is_empty() {
            if let Some(mid) = self.mid {
                match efe_low_opts(ctx.canvas, ctx.ego, ctx.local, mid.target, !mid.crossing) {
                    Ok(actions) => self.low = actions.into(),
                    Err(_) => {
                        self.blocked_targets.push(mid.target);
                        self.mid = None;
                    }
                }
            }
        }

        if std::env::var("MAZENAV_DEBUG_PLAN").is_ok() {
            eprintln!(
                "plan: local={:?} deciding={} mid={:?} low={:?}",
                ctx.local,
                ctx.deciding,
                self.mid.map(|m| (m.target, m.score.epistemic)),
                self.low
            );
        }
        let action = self.low.pop_front().unwrap_or(Action::TurnLeft);
        // Safety: never emit a forward the ego model knows will collide.
        if action == Action::Forward
            && ego_predict(ctx.ego, Action::Forward).collision_prob == 1.0
        {
            self.invalidate();
            return Action::TurnLeft;
        }
        action
    }

    fn select_mid(&mut self, ctx: &PlanContext) {
        // Goal-directed top level: head for the goal's node when known.
        if !ctx.deciding {
            if let (Preference::GoalTile { .. }, Some(current)) = (ctx.pref, ctx.graph.current())
            {
                if let Some((goal_node, _)) = ctx.graph.find_goal() {
                    if goal_node != current {
                        if let Some(top) = efe_top(ctx.graph, ctx.pref) {
                            if top.path.len() > 1 {
                                let next = top.path[1];
                                self.last_top = Some(top);
                                if self.target_door_toward(ctx, current, next) {
                                    return;
                                }
                            }
                        }
                    }
                }
            }
        }

        // Local exploration (and goal pickup once it is in this canvas).
        let bounds = ctx.canvas.room_bounds();
        let region = bounds.as_ref().map(|b| b.ring.expanded(2));
        if let Ok(mid) = efe_mid_bounded(
            ctx.canvas,
            ctx.ego,
            ctx.local,
            ctx.pref,
            region.as_ref(),
            &self.blocked_targets,
            &self.params,
        ) {
            self.mid = Some(mid);
            return;
        }
        if ctx.deciding {
            return; // fall through to the turn-left fallback
        }

        // Room exhausted: head through an unexplored door, else travel to the
        // least-explored node.
        let Some(current) = ctx.graph.current() else {
            return;
        };
        if let Some(exits) = unmatched_exits(ctx.graph, current) {
            if let Some(exit) = exits.first() {
                self.target_exit(ctx, exit);
                return;
            }
        }
        if let Some(top) = efe_top(ctx.graph, ctx.pref) {
            if top.path.len() > 1 {
                let next = top.path[1];
                self.last_top = Some(top);
                self.target_door_toward(ctx, current, next);
            }
        }
    }

    /// Target the door leading from `from` to `next`, if the connecting edge
    /// recorded one. Returns false when no door is known.
    fn target_door_toward(&mut self, ctx: &PlanContext, from: PlaceId, next: PlaceId) -> bool {
        let door = ctx
            .graph
            .edges_of(from)
            .find(|e| (e.from == from && e.to == next) || (e.to == from && e.from == next))
            .and_then(|e| {
                if e.from == from {
                    e.from_door
                } else {
                    // The edge's to_door heading points INTO `from`; leaving
                    // goes the opposite way.
                    e.to_door.map(|d| crate::cogmap::DoorRef {
                        cell: d.cell,
                        heading: d.heading.rotate_cw(2),
                    })
                }
            });
        let Some(door) = door else {
            return false;
        };
        // One tile beyond the door: crossing completes there.
        let (dx, dy) = door.heading.delta();
        self.mid = Some(PolicyMid {
            target: PlacePose::new(door.cell.0 + dx, door.cell.1 + dy, door.heading),
            score: EfeScore {
                epistemic: 0.0,
                pragmatic: 0.0,
            },
            path_cost: 0.0,
            crossing: true,
        });
        true
    }

    fn target_exit(&mut self, _ctx: &PlanContext, exit: &RoomExit) {
        // One tile beyond the door: crossing completes there.
        let (x, y) = exit.door_cell();
        let (dx, dy) = exit.outward.delta();
        self.mid = Some(PolicyMid {
            target: PlacePose::new(x + dx, y + dy, exit.outward),
            score: EfeScore {
                epistemic: 0.0,
                pragmatic: 0.0,
            },
            path_cost: 0.0,
            crossing: true,
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridworld::{generate_maze, observe, MazeConfig, Pose, WorldGrid};

    fn room_world(size: i32, seed: u64) -> WorldGrid {
        let cfg = MazeConfig {
            room_rows: 1,
            room_cols: 1,
            min_room: size,
            max_room: size,
            ..MazeConfig::default()
        };
        generate_maze(&cfg, seed).unwrap()
    }

    fn anchor_of(world: &WorldGrid) -> Pose {
        let (cx, cy) = world.rooms()[0].center();
        Pose::new(cx, cy, Heading::North)
    }

    fn local(world_pose: Pose, anchor: Pose) -> PlacePose {
        PlacePose::new(
            world_pose.x - anchor.x,
            world_pose.y - anchor.y,
            world_pose.heading,
        )
    }

    fn fully_fused(world: &WorldGrid) -> PlaceCanvas {
        let anchor = anchor_of(world);
        let mut canvas = PlaceCanvas::default();
        for (x, y) in world.traversable_tiles().collect::<Vec<_>>() {
            for heading in Heading::ALL {
                let pose = Pose::new(x, y, heading);
                canvas
                    .fuse(local(pose, anchor), &observe(world, pose))
                    .unwrap();
            }
        }
        canvas
    }

    /// Independent visibility recount: fixed-point propagation coded against
    /// the canvas MAP directly, then a count of unknown in-canvas cells.
    fn brute_info_gain(canvas: &PlaceCanvas, pose: PlacePose) -> usize {
        let kind = |r: usize, c: usize| {
            let (x, y) = window::cell_to_grid(pose.x, pose.y, pose.heading, r, c);
            canvas.map_kind(x, y)
        };
        let mut vis = [[false; 7]; 7];
        vis[6][3] = true;
        loop {
            let mut changed = false;
            for r in 0..7usize {
                for c in 0..7usize {
                    if vis[r][c] {
                        continue;
                    }
                    let s = (3i32 - c as i32).signum();
                    let mut preds: Vec<(usize, usize)> = Vec::new();
                    if r + 1 < 7 {
                        preds.push((r + 1, c));
                        if s != 0 {
                            preds.push((r + 1, (c as i32 + s) as usize));
                        }
                    }
                    if s != 0 {
                        preds.push((r, (c as i32 + s) as usize));
                    }
                    let open = |k: Option<TileKind>| k.is_none_or(|k| k.transparent());
                    if preds.iter().any(|&(pr, pc)| vis[pr][pc] && open(kind(pr, pc))) {
                        vis[r][c] = true;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        let mut gain = 0;
        for r in 0..7usize {
            for c in 0..7usize {
                if (r, c) == (6, 3) || !vis[r][c] {
                    continue;
                }
                let (x, y) = window::cell_to_grid(pose.x, pose.y, pose.heading, r, c);
                if canvas.in_bounds(x, y) && canvas.evidence_total(x, y) == 0 {
                    gain += 1;
                }
            }
        }
        gain
    }

    #[test]
    fn info_gain_matches_independent_recount() {
        let world = room_world(6, 8);
        let anchor = anchor_of(&world);
        let room = world.rooms()[0];
        let mut canvas = PlaceCanvas::default();
        // Partially fused room.
        for p in [
            Pose::new(room.x, room.y + room.height - 1, Heading::North),
            Pose::new(room.x + 2, room.y + 1, Heading::East),
        ] {
            canvas.fuse(local(p, anchor), &observe(&world, p)).unwrap();
        }
        for y in room.y..room.y + room.height {
            for x in room.x..room.x + room.width {
                for h in Heading::ALL {
                    let pose = local(Pose::new(x, y, h), anchor);
                    assert_eq!(
                        info_gain(&canvas, pose),
                        brute_info_gain(&canvas, pose),
                        "{pose:?}"
                    );
                }
            }
        }
    }

    #[test]
    fn info_gain_trivial_cases() {
        let world = room_world(5, 2);
        let canvas = fully_fused(&world);
        // Fully-known canvas: zero gain everywhere inside the room.
        let b = canvas.room_bounds().unwrap();
        for y in b.interior.y0..=b.interior.y1 {
            for x in b.interior.x0..=b.interior.x1 {
                for h in Heading::ALL {
                    assert_eq!(info_gain(&canvas, PlacePose::new(x, y, h)), 0);
                }
            }
        }
        // Empty canvas: the full window minus the agent cell.
        let empty = PlaceCanvas::default();
        assert_eq!(info_gain(&empty, PlacePose::origin()), 48);
    }

    #[test]
    fn efe_mid_flat_maximizes_gain_minus_path() {
        let world = room_world(7, 4);
        let anchor = anchor_of(&world);
        // Half-explored room: fuse three observations from the south edge.
        let room = world.rooms()[0];
        let mut canvas = PlaceCanvas::default();
        let poses = [
            Pose::new(room.x + 1, room.y + room.height - 1, Heading::North),
            Pose::new(room.x + 1, room.y + room.height - 1, Heading::East),
            Pose::new(room.x + 3, room.y + room.height - 1, Heading::North),
        ];
        for p in poses {
            canvas.fuse(local(p, anchor), &observe(&world, p)).unwrap();
        }
        let current = local(poses[2], anchor);
        let params = PlanParams::default();
        let got = efe_mid(&canvas, current, &Preference::Flat, &params).unwrap();

        // Exhaustive scoring oracle over all reachable candidates.
        let ego = EgoState::new(6, 0);
        let walls = ego_overlay(&ego, current);
        let (dist, _) = pose_search(&canvas, &walls, true, current);
        let mut best: Option<(f64, (i32, i32, u8))> = None;
        for (&k, &units) in &dist {
            let pose = PlacePose::new(k.0, k.1, Heading::from_index(k.2));
            let gain = info_gain(&canvas, pose) as f64;
            if gain == 0.0 {
                continue;
            }
            let total = -gain + params.path_weight * units as f64 / 4.0;
            let better = match best {
                None => true,
                Some((bt, bk)) => total < bt || (total == bt && (k.1, k.0, k.2) < (bk.1, bk.0, bk.2)),
            };
            if better {
                best = Some((total, k));
            }
        }
        let (_, bk) = best.unwrap();
        assert_eq!(
            (got.target.x, got.target.y, got.target.heading.index()),
            (bk.0, bk.1, bk.2)
        );
        // Under a flat preference the score is purely epistemic.
        assert_eq!(got.score.pragmatic, 0.0);
        assert_eq!(got.score.total(), -got.score.epistemic);
    }

    #[test]
    fn efe_mid_pragmatic_dominance_targets_goal() {
        let world = room_world(6, 3);
        let canvas = fully_fused(&world);
        let anchor = anchor_of(&world);
        let (gx, gy) = world.goal();
        let goal_local = (gx - anchor.x, gy - anchor.y);

        // Partially refuse the canvas so some gain exists elsewhere; the goal
        // bonus must still dominate.
        let room = world.rooms()[0];
        let mut partial = PlaceCanvas::default();
        let p = Pose::new(room.x, room.y + room.height - 1, Heading::North);
        partial
            .fuse(local(p, anchor), &observe(&world, p))
            .unwrap();
        // Ensure the goal cell itself is known to the canvas.
        let near_goal = Pose::new(gx, gy, Heading::North);
        partial
            .fuse(local(near_goal, anchor), &observe(&world, near_goal))
            .unwrap();

        let params = PlanParams::default();
        let got = efe_mid(&partial, local(p, anchor), &Preference::goal(), &params).unwrap();
        assert_eq!((got.target.x, got.target.y), goal_local);
        assert!(got.score.pragmatic >= 1000.0);
        let _ = canvas;
    }

    #[test]
    fn efe_mid_errors_when_nothing_left() {
        let world = room_world(5, 2);
        let canvas = fully_fused(&world);
        // Known canvas, flat preference, gain-counting restricted to the
        // already-known ring region: no candidate has value.
        let b = canvas.room_bounds().unwrap();
        let region = b.ring;
        let err = efe_mid_bounded(
            &canvas,
            &EgoState::new(6, 0),
            PlacePose::origin(),
            &Preference::Flat,
            Some(&region),
            &[],
            &PlanParams::default(),
        )
        .unwrap_err();
        assert_eq!(err, PlanError::NoTarget);
    }

    #[test]
    fn efe_low_trivial_and_corridor() {
        let world = room_world(7, 4);
        let canvas = fully_fused(&world);
        let ego = EgoState::new(6, 0);
        let at = PlacePose::origin();
        assert_eq!(efe_low(&canvas, &ego, at, at).unwrap(), Vec::new());

        // Straight known corridor: n forwards.
        let b = canvas.room_bounds().unwrap();
        let start = PlacePose::new(b.interior.x0, b.interior.y1, Heading::North);
        let target = PlacePose::new(b.interior.x0, b.interior.y0, Heading::North);
        let n = (b.interior.y1 - b.interior.y0) as usize;
        let path = efe_low(&canvas, &ego, start, target).unwrap();
        assert_eq!(path, vec![Action::Forward; n]);
    }

    #[test]
    fn efe_low_cost_matches_reference_search() {
        // Independent reference: integer Dijkstra coded against a plain grid
        // extracted from the canvas, turns cost 1, forward 4.
        fn reference_cost(canvas: &PlaceCanvas, from: PlacePose, to: PlacePose) -> Option<u32> {
            let h = (canvas.size() / 2) as i32;
            let passable = |x: i32, y: i32| {
                x.abs() <= h
                    && y.abs() <= h
                    && !matches!(canvas.map_kind(x, y), Some(TileKind::Wall))
            };
            let mut dist: BTreeMap<(i32, i32, u8), u32> = BTreeMap::new();
            let mut heap = BinaryHeap::new();
            let k0 = (from.x, from.y, from.heading.index());
            dist.insert(k0, 0);
            heap.push(std::cmp::Reverse((0u32, k0)));
            while let Some(std::cmp::Reverse((d, k))) = heap.pop() {
                if dist[&k] != d {
                    continue;
                }
                let heading = Heading::from_index(k.2);
                let mut push = |nk: (i32, i32, u8), nd: u32| {
                    if dist.get(&nk).is_none_or(|&c| nd < c) {
                        dist.insert(nk, nd);
                        heap.push(std::cmp::Reverse((nd, nk)));
                    }
                };
                let (dx, dy) = heading.delta();
                if passable(k.0 + dx, k.1 + dy) {
                    push((k.0 + dx, k.1 + dy, k.2), d + 4);
                }
                push((k.0, k.1, heading.turn_left().index()), d + 1);
                push((k.0, k.1, heading.turn_right().index()), d + 1);
            }
            dist.get(&(to.x, to.y, to.heading.index())).copied()
        }

        for seed in [2, 4, 9] {
            let world = room_world(6, seed);
            let canvas = fully_fused(&world);
            let ego = EgoState::new(6, 0);
            let b = canvas.room_bounds().unwrap();
            let from = PlacePose::new(b.interior.x0, b.interior.y0, Heading::South);
            for y in b.interior.y0..=b.interior.y1 {
                for x in b.interior.x0..=b.interior.x1 {
                    for h in Heading::ALL {
                        let to = PlacePose::new(x, y, h);
                        let got = efe_low(&canvas, &ego, from, to)
                            .map(|p| {
                                p.iter()
                                    .map(|a| if *a == Action::Forward { 4u32 } else { 1 })
                                    .sum::<u32>()
                            })
                            .ok();
                        assert_eq!(got, reference_cost(&canvas, from, to), "{to:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn efe_low_respects_ego_known_walls() {
        // Canvas thinks the way is clear (unknown); the ego buffer knows a
        // wall dead ahead. The plan must not start with a forward.
        let canvas = PlaceCanvas::default();
        let mut ego = EgoState::new(6, 20);
        let mut obs = crate::gridworld::Observation::all_hidden();
        obs.cells[window::AGENT_ROW - 1][window::AGENT_COL] =
            crate::gridworld::ObsCell::Visible(TileKind::Wall);
        obs.cells[window::AGENT_ROW][window::AGENT_COL] = crate::gridworld::ObsCell::Visible(
            TileKind::Floor(crate::gridworld::FloorColor::Red),
        );
        ego = crate::egocentric::ego_update(&ego, Action::TurnLeft, &obs, false);

        let target = PlacePose::new(0, -3, Heading::North);
        let path = efe_low(&canvas, &ego, PlacePose::origin(), target).unwrap();
        assert_ne!(path[0], Action::Forward);
    }

    #[test]
    fn scaling_epistemic_and_path_weight_preserves_selection() {
        let world = room_world(7, 4);
        let anchor = anchor_of(&world);
        let room = world.rooms()[0];
        let mut canvas = PlaceCanvas::default();
        let p = Pose::new(room.x + 2, room.y + room.height - 1, Heading::North);
        canvas.fuse(local(p, anchor), &observe(&world, p)).unwrap();
        let current = local(p, anchor);

        let base = PlanParams::default();
        let scaled = PlanParams {
            path_weight: base.path_weight * 7.5,
            ..base.clone()
        };
        // Scaling all epistemic values by c is equivalent to dividing the
        // path weight by c: the argmin must not move.
        let a = efe_mid(&canvas, current, &Preference::Flat, &base).unwrap();
        let b = {
            let got = efe_mid_bounded(
                &canvas,
                &EgoState::new(6, 0),
                current,
                &Preference::Flat,
                None,
                &[],
                &PlanParams {
                    path_weight: scaled.path_weight / 7.5,
                    ..scaled
                },
            )
            .unwrap();
            got
        };
        assert_eq!(a.target, b.target);
    }
}
