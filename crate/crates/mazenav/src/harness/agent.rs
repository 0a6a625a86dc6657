//! The full navigation agent: ego model, place inference, hypothesis
//! machinery, cognitive map, and planner wired into one update loop.
//!
//! Per environment step the agent integrates odometry and the ego buffer,
//! routes the observation into the active place (switching places when it
//! crosses a door or when the mismatch score spikes), advances the
//! hypothesis population while undecided, updates the graph, and asks the
//! planner for the next action.

use serde::{Deserialize, Serialize};

use crate::allocentric::{
    hypo_decide, hypo_spawn, hypo_update, Decision, HypothesisSet, PlaceCanvas, PlaceId,
    PlacePose, PosePrior, SpawnContext, Transform,
};
use crate::cogmap::{
    pose_integrate, CognitiveGraph, DoorRef, GlobalPose, GuardVerdict, Traversal,
};
use crate::egocentric::{ego_update, EgoState};
use crate::gridworld::{Action, Observation, TileKind};
use crate::planner::{PlanContext, Planner, Preference};
use crate::window::rot_cw;

use super::config::RunConfig;

/// Step-level event emitted by the agent, for logs and tests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum AgentEvent {
    /// Hypothesis phase opened (door crossing or mismatch reset).
    HypoSpawned { size: usize, via_door: bool },
    HypoUpdated { size: usize, updates: u32 },
    /// Mismatch exceeded the room-change threshold.
    PlaceReset { mismatch: f64 },
    NodeCreated {
        node: u32,
        updates: u32,
        duplicate_of: Option<u32>,
    },
    Relocalized {
        node: u32,
        updates: u32,
        forced: bool,
    },
    CanvasRecentered { dx: i32, dy: i32 },
}

/// Odometry-consistency prior: suppresses hypotheses whose implied world
/// pose disagrees with integrated odometry. This is the cognitive-map
/// context that disambiguates look-alike rooms.
struct OdometryPrior<'a> {
    graph: &'a CognitiveGraph,
    local: PlacePose,
    global: GlobalPose,
    sigma: f64,
}

impl PosePrior for OdometryPrior<'_> {
    fn log_prior(&self, place: PlaceId, transform: &Transform) -> f64 {
        let Some(node) = self.graph.node(place) else {
            return f64::NEG_INFINITY;
        };
        let implied = node.anchor.compose(transform.apply_pose(self.local));
        let dx = (implied.x - self.global.x) as f64;
        let dy = (implied.y - self.global.y) as f64;
        let quarter = {
            let diff =
                (4 + implied.heading.index() as i32 - self.global.heading.index() as i32) % 4;
            diff.min(4 - diff) as f64
        };
        let d = (dx * dx + dy * dy).sqrt() + 4.0 * quarter;
        -(d * d) / (2.0 * self.sigma * self.sigma)
    }
}

/// Active-place state.
enum Phase {
    Stable {
        node: PlaceId,
        local: PlacePose,
    },
    Deciding {
        tentative: PlaceCanvas,
        local: PlacePose,
        /// Odometry pose of the tentative frame origin.
        frame: GlobalPose,
        hypos: HypothesisSet,
        previous: Option<PlaceId>,
        /// Door left through, in the previous node's frame.
        prev_exit: Option<DoorRef>,
        entered_via_door: bool,
    },
}

/// Hierarchical navigation agent.
pub struct Agent {
    config: RunConfig,
    pref: Preference,
    ego: EgoState,
    global: GlobalPose,
    graph: CognitiveGraph,
    phase: Phase,
    planner: Planner,
    place_generation: u64,
    step_index: u64,
    forward_steps_since_switch: u32,
    was_on_door: bool,
    last_collision: bool,
    events: Vec<AgentEvent>,
}

impl Agent {
    /// Build the agent and integrate the very first observation: the start
    /// pose anchors experience node 0.
    pub fn new(config: RunConfig, pref: Preference, first_obs: &Observation) -> Agent {
        let ego = {
            let fresh = EgoState::new(
                config.egocentric.buffer_radius,
                config.egocentric.forget_horizon,
            );
            // Fuse the first observation through a motion-free turn pair.
            let fresh = ego_update(&fresh, Action::TurnLeft, &Observation::all_hidden(), false);
            ego_update(&fresh, Action::TurnRight, first_obs, false)
        };
        let mut canvas = PlaceCanvas::new(config.allocentric.canvas_size);
        canvas
            .fuse(
                PlacePose::origin(),
                &crate::allocentric::mask_beyond_doors(first_obs),
            )
            .expect("first observation fits a fresh canvas");
        let mut graph = CognitiveGraph::new();
        let node = graph.add_node(canvas, GlobalPose::start(), 0, None);

        Agent {
            planner: Planner::new(config.planner.clone()),
            config,
            pref,
            ego,
            global: GlobalPose::start(),
            graph,
            phase: Phase::Stable {
                node,
                local: PlacePose::origin(),
            },
            place_generation: 0,
            step_index: 0,
            forward_steps_since_switch: 0,
            was_on_door: false,
            last_collision: false,
            events: Vec::new(),
        }
    }

    /// Resume with a pre-built cognitive map: the agent starts undecided
    /// and localizes itself into the map from its first observations.
    /// Assumes the same maze and start pose the map was built from.
    pub fn with_map(
        config: RunConfig,
        pref: Preference,
        first_obs: &Observation,
        graph: CognitiveGraph,
    ) -> Agent {
        let mut agent = Agent::new(config, pref, first_obs);
        agent.graph = graph;
        agent.events.clear();
        agent.open_hypothesis_phase(None, None, false, first_obs);
        agent
    }

    pub fn graph(&self) -> &CognitiveGraph {
        &self.graph
    }

    pub fn ego(&self) -> &EgoState {
        &self.ego
    }

    pub fn global_pose(&self) -> GlobalPose {
        self.global
    }

    pub fn preference(&self) -> &Preference {
        &self.pref
    }

    pub fn deciding(&self) -> bool {
        matches!(self.phase, Phase::Deciding { .. })
    }

    pub fn hypothesis_count(&self) -> usize {
        match &self.phase {
            Phase::Deciding { hypos, .. } => hypos.len(),
            Phase::Stable { .. } => 0,
        }
    }

    pub fn current_place(&self) -> Option<(PlaceId, PlacePose)> {
        match &self.phase {
            Phase::Stable { node, local } => Some((*node, *local)),
            Phase::Deciding { .. } => None,
        }
    }

    pub fn drain_events(&mut self) -> Vec<AgentEvent> {
        std::mem::take(&mut self.events)
    }

    /// Choose the next action from the current beliefs.
    pub fn next_action(&mut self) -> Action {
        let (canvas, local, deciding) = match &self.phase {
            Phase::Stable { node, local } => {
                (&self.graph.node(*node).expect("current node").canvas, *local, false)
            }
            Phase::Deciding {
                tentative, local, ..
            } => (tentative, *local, true),
        };
        let ctx = PlanContext {
            canvas,
            local,
            ego: &self.ego,
            graph: &self.graph,
            pref: &self.pref,
            deciding,
            place_generation: self.place_generation,
            unpredicted_collision: self.last_collision,
        };
        self.planner.plan_step(&ctx)
    }

    /// Integrate one executed action and the observation that followed.
    pub fn integrate(&mut self, action: Action, obs: &Observation, collision: bool) {
        self.global = pose_integrate(self.global, action, collision);
        self.ego = ego_update(&self.ego, action, obs, collision);
        self.last_collision = collision;
        if action == Action::Forward && !collision {
            self.forward_steps_since_switch += 1;
        }
        self.step_index += 1;

        let on_door = matches!(obs.own_tile(), Some(TileKind::Door { .. }));
        let door_entered = on_door && !self.was_on_door;
        // The place switch fires when the agent finishes crossing: it was on
        // a door and moved forward off it. Standing on the door itself the
        // view straddles both rooms, so it belongs to neither canvas.
        let door_crossed = self.was_on_door && !on_door && action == Action::Forward && !collision;
        self.was_on_door = on_door;

        self.advance_place(action, obs, collision, door_entered, door_crossed, on_door);

        self.graph.decay_tick(self.config.cogmap.decay);
    }

    fn advance_place(
        &mut self,
        action: Action,
        obs: &Observation,
        _collision: bool,
        door_entered: bool,
        door_crossed: bool,
        on_door: bool,
    ) {
        let _ = door_entered;
        match &mut self.phase {
            Phase::Stable { node, local } => {
                let node = *node;
                let door_cell = local.position();
                let new_local = local.advanced(action, _collision);
                *local = new_local;

                if door_crossed {
                    // `door_cell` was the pose before this forward: the door
                    // tile itself, in the old place's frame.
                    let exit = DoorRef {
                        cell: door_cell,
                        heading: new_local.heading,
                    };
                    self.open_hypothesis_phase(Some(node), Some(exit), true, obs);
                    return;
                }
                if on_door {
                    // Transitional view: keep odometry but do not fuse or
                    // score it against the room.
                    return;
                }

                let canvas = &self.graph.node(node).unwrap().canvas;
                let score = canvas.mismatch(new_local, obs);
                if score.is_defined(self.config.allocentric.min_overlap)
                    && score.value > self.config.allocentric.room_change_threshold
                {
                    self.events.push(AgentEvent::PlaceReset {
                        mismatch: score.value,
                    });
                    self.open_hypothesis_phase(Some(node), None, false, obs);
                    return;
                }

                // Fuse the room-local part of the view, recentering the
                // canvas when the frame has drifted toward an edge.
                let obs = &crate::allocentric::mask_beyond_doors(obs);
                let canvas = &mut self.graph.node_mut(node).unwrap().canvas;
                if let Err(_e) = canvas.fuse(new_local, obs) {
                    match recenter_for(canvas, new_local, obs) {
                        Some(delta) => {
                            self.graph
                                .recenter_node(node, delta)
                                .expect("node exists");
                            let shifted = PlacePose::new(
                                new_local.x + delta.0,
                                new_local.y + delta.1,
                                new_local.heading,
                            );
                            if let Phase::Stable { local, .. } = &mut self.phase {
                                *local = shifted;
                            }
                            self.events.push(AgentEvent::CanvasRecentered {
                                dx: delta.0,
                                dy: delta.1,
                            });
                            let canvas = &mut self.graph.node_mut(node).unwrap().canvas;
                            let _ = canvas.fuse(shifted, obs);
                        }
                        None => {
                            // No translation helps: keep the in-canvas part.
                            // Cells past the edge belong to neighbouring
                            // places and will be fused there.
                            let canvas = &mut self.graph.node_mut(node).unwrap().canvas;
                            canvas.fuse_clipped(new_local, obs);
                        }
                    }
                }
            }
            Phase::Deciding { .. } => {
                self.advance_deciding(action, obs, _collision, door_crossed);
            }
        }
    }

    fn advance_deciding(
        &mut self,
        action: Action,
        obs: &Observation,
        collision: bool,
        door_crossed: bool,
    ) {
        let Phase::Deciding {
            tentative,
            local,
            frame,
            hypos,
            previous,
            prev_exit,
            entered_via_door,
        } = &mut self.phase
        else {
            unreachable!();
        };
        *local = local.advanced(action, collision);

        let known = self.graph.known_places();
        let prior = OdometryPrior {
            graph: &self.graph,
            local: *local,
            global: self.global,
            sigma: self.config.allocentric.pose_sigma,
        };
        *hypos = hypo_update(hypos, &known, *local, obs, &prior, &self.config.hypotheses);
        self.events.push(AgentEvent::HypoUpdated {
            size: hypos.len(),
            updates: hypos.step_count(),
        });

        // Keep building the tentative canvas from the room-local view.
        let masked = crate::allocentric::mask_beyond_doors(obs);
        if tentative.fuse(*local, &masked).is_err() {
            if let Some(delta) = recenter_for(tentative, *local, &masked) {
                tentative.recenter(delta).expect("checked recenter");
                *local = PlacePose::new(local.x + delta.0, local.y + delta.1, local.heading);
                *frame = shift_frame(*frame, delta);
                hypos.shift_source_frame(delta);
                self.events.push(AgentEvent::CanvasRecentered {
                    dx: delta.0,
                    dy: delta.1,
                });
                let _ = tentative.fuse(*local, &masked);
            } else {
                tentative.fuse_clipped(*local, &masked);
            }
        }

        let mut decision = hypo_decide(hypos, &self.config.hypotheses);
        let mut forced = false;
        let out_of_patience = hypos.step_count() >= self.config.allocentric.max_hypo_updates;
        if matches!(decision, Decision::Undecided) && (out_of_patience || door_crossed) {
            forced = true;
            decision = match hypos.best().target {
                crate::allocentric::HypoTarget::KnownPlace(id) => {
                    Decision::Localized(id, hypos.best().transform)
                }
                crate::allocentric::HypoTarget::NewPlace => Decision::NewPlace,
            };
        }

        // Containment veto: a place is one room. Near a doorway the previous
        // room's canvas still explains the straddling view, but an alignment
        // that puts the agent outside the target's walls is not a
        // localization into it. Keep deciding until the view clears.
        if let Decision::Localized(target, transform) = decision {
            let q = transform.apply_pose(*local);
            let contained = self
                .graph
                .node(target)
                .and_then(|n| n.canvas.room_bounds())
                .is_none_or(|b| b.ring.contains(q.x, q.y));
            if std::env::var("MAZENAV_DEBUG_VETO").is_ok() {
                eprintln!(
                    "veto check: target={} t={:?} local={:?} q=({},{}) bounds={:?} contained={}",
                    target.0,
                    transform,
                    *local,
                    q.x,
                    q.y,
                    self.graph.node(target).and_then(|n| n.canvas.room_bounds()).map(|b| b.ring),
                    contained
                );
            }
            if !contained {
                let give_up =
                    hypos.step_count() >= 3 * self.config.allocentric.max_hypo_updates;
                decision = if door_crossed || give_up {
                    // The phase must close (another crossing) or has dragged
                    // on: the agent is outside every claimed room, so this
                    // is somewhere new.
                    forced = true;
                    Decision::NewPlace
                } else {
                    Decision::Undecided
                };
            }
        }

        let updates = hypos.step_count();
        let previous = *previous;
        let prev_exit = *prev_exit;
        let entered_via_door = *entered_via_door;
        let crossing_commit = door_crossed && !matches!(decision, Decision::Undecided);
        match decision {
            Decision::Undecided => {}
            Decision::NewPlace => {
                let (mut canvas, mut lp, mut fr) = match std::mem::replace(
                    &mut self.phase,
                    Phase::Stable {
                        node: PlaceId(0),
                        local: PlacePose::origin(),
                    },
                ) {
                    Phase::Deciding {
                        tentative,
                        local,
                        frame,
                        ..
                    } => (tentative, local, frame),
                    Phase::Stable { .. } => unreachable!(),
                };
                // Re-anchor the frame on the room the agent is actually in:
                // origin moves to the centroid of the observed floor.
                let delta = rebase_delta(&canvas);
                if delta != (0, 0) && canvas.recenter(delta).is_ok() {
                    lp = PlacePose::new(lp.x + delta.0, lp.y + delta.1, lp.heading);
                    fr = shift_frame(fr, delta);
                }
                let to_door = entered_via_door.then_some(DoorRef {
                    // The spawn pose stood one step past the door, facing
                    // local north: the door sits one tile behind the
                    // (pre-rebase) origin.
                    cell: (delta.0, delta.1 + 1),
                    heading: crate::window::Heading::North,
                });
                let traversal = previous.map(|_| Traversal {
                    forward_steps: self.forward_steps_since_switch.max(1),
                    from_door: prev_exit,
                    to_door,
                });
                let node = self
                    .graph
                    .add_node(canvas, fr, self.step_index, traversal);
                self.events.push(AgentEvent::NodeCreated {
                    node: node.0,
                    updates,
                    duplicate_of: None,
                });
                self.phase = Phase::Stable { node, local: lp };
                self.after_place_commit();
                if crossing_commit {
                    self.reopen_after_crossing(obs);
                }
            }
            Decision::Localized(target, transform) => {
                let local_in_target = transform.apply_pose(*local);
                let verdict = self
                    .graph
                    .duplicate_guard(
                        target,
                        local_in_target,
                        self.global,
                        self.config.cogmap.dup_radius,
                    )
                    .expect("hypothesis targets existing node");
                let (tentative, lp) = match std::mem::replace(
                    &mut self.phase,
                    Phase::Stable {
                        node: PlaceId(0),
                        local: PlacePose::origin(),
                    },
                ) {
                    Phase::Deciding {
                        tentative, local, ..
                    } => (tentative, local),
                    Phase::Stable { .. } => unreachable!(),
                };
                let spawn_origin_in_target = transform.apply_point((0, 0));
                let entry_heading = crate::window::Heading::from_index(transform.rot);
                let to_door = entered_via_door.then_some(DoorRef {
                    cell: spawn_origin_in_target,
                    heading: entry_heading,
                });
                let traversal = previous.map(|_| Traversal {
                    forward_steps: self.forward_steps_since_switch.max(1),
                    from_door: prev_exit,
                    to_door,
                });

                match verdict {
                    GuardVerdict::Accept => {
                        self.graph
                            .localize(target, traversal)
                            .expect("target exists");
                        self.graph
                            .node_mut(target)
                            .unwrap()
                            .canvas
                            .absorb(&tentative, &transform);
                        self.events.push(AgentEvent::Relocalized {
                            node: target.0,
                            updates,
                            forced,
                        });
                        self.phase = Phase::Stable {
                            node: target,
                            local: transform.apply_pose(lp),
                        };
                    }
                    GuardVerdict::Duplicate => {
                        // Aliased look-alike far away: duplicate the place,
                        // sharing the canvas ancestry, anchored where
                        // odometry actually puts the agent.
                        let mut canvas = self.graph.node(target).unwrap().canvas.clone();
                        canvas.absorb(&tentative, &transform);
                        let q = transform.apply_pose(lp);
                        let anchor = anchor_from(self.global, q);
                        let node =
                            self.graph
                                .add_node(canvas, anchor, self.step_index, traversal);
                        self.events.push(AgentEvent::NodeCreated {
                            node: node.0,
                            updates,
                            duplicate_of: Some(target.0),
                        });
                        self.phase = Phase::Stable { node, local: q };
                    }
                }
                self.after_place_commit();
                if crossing_commit {
                    self.reopen_after_crossing(obs);
                }
            }
        }
    }

    fn after_place_commit(&mut self) {
        self.place_generation += 1;
        self.forward_steps_since_switch = 0;
    }

    /// A door crossing finished while a hypothesis phase was still open: the
    /// phase was force-committed; start the next one from the committed
    /// place.
    fn reopen_after_crossing(&mut self, obs: &Observation) {
        let Phase::Stable { node, local } = &self.phase else {
            return;
        };
        let node = *node;
        let local = *local;
        // The door is the tile the forward move just left: one step behind.
        let (dx, dy) = local.heading.delta();
        let exit = DoorRef {
            cell: (local.x - dx, local.y - dy),
            heading: local.heading,
        };
        self.open_hypothesis_phase(Some(node), Some(exit), true, obs);
    }

    fn open_hypothesis_phase(
        &mut self,
        previous: Option<PlaceId>,
        prev_exit: Option<DoorRef>,
        via_door: bool,
        obs: &Observation,
    ) {
        let known = self.graph.known_places();
        let adjacent = previous
            .map(|p| self.graph.neighbors(p).into_iter().collect())
            .unwrap_or_default();
        let context = SpawnContext {
            previous,
            adjacent,
            exit_door: prev_exit.map(|d| d.cell),
        };
        let prior = OdometryPrior {
            graph: &self.graph,
            local: PlacePose::origin(),
            global: self.global,
            sigma: self.config.allocentric.pose_sigma,
        };
        let hypos = hypo_spawn(&known, obs, &context, &prior, &self.config.hypotheses);
        self.events.push(AgentEvent::HypoSpawned {
            size: hypos.len(),
            via_door,
        });

        let mut tentative = PlaceCanvas::new(self.config.allocentric.canvas_size);
        tentative
            .fuse(
                PlacePose::origin(),
                &crate::allocentric::mask_beyond_doors(obs),
            )
            .expect("first observation fits a fresh canvas");
        self.phase = Phase::Deciding {
            tentative,
            local: PlacePose::origin(),
            frame: self.global,
            hypos,
            previous,
            prev_exit,
            entered_via_door: via_door,
        };
        self.place_generation += 1;
    }
}

/// Shift a frame's world anchor so that local coordinates move by `delta`
/// (content at local p is re-addressed as p + delta).
fn shift_frame(frame: GlobalPose, delta: (i32, i32)) -> GlobalPose {
    let (dx, dy) = rot_cw(delta, frame.heading.index());
    GlobalPose::new(frame.x - dx, frame.y - dy, frame.heading)
}

/// Solve for the frame anchor A such that `A.compose(local) == global`.
fn anchor_from(global: GlobalPose, local: PlacePose) -> GlobalPose {
    let rot = (4 + global.heading.index() - local.heading.index()) % 4;
    let heading = crate::window::Heading::from_index(rot);
    let (dx, dy) = rot_cw((local.x, local.y), rot);
    GlobalPose::new(global.x - dx, global.y - dy, heading)
}

/// Pick the smallest recentering delta that brings the observation
/// footprint onto the canvas without pushing existing evidence off, or
/// `None` when no translation can. Minimal shifts keep the frame origin
/// where it was anchored (inside the room).
fn recenter_for(
    canvas: &PlaceCanvas,
    pose: PlacePose,
    obs: &Observation,
) -> Option<(i32, i32)> {
    let h = (canvas.size() / 2) as i32;
    let fp = crate::allocentric::obs_footprint_bbox(pose, obs)?;
    let axis = |lo: i32, hi: i32| -> i32 {
        if lo < -h {
            -h - lo
        } else if hi > h {
            h - hi
        } else {
            0
        }
    };
    let delta = (axis(fp.x0, fp.x1), axis(fp.y0, fp.y1));
    if delta == (0, 0) {
        return None; // footprint already fits: the failure was not overflow
    }
    let fits = |b: &crate::allocentric::LocalRect| {
        b.x0 + delta.0 >= -h && b.x1 + delta.0 <= h && b.y0 + delta.1 >= -h && b.y1 + delta.1 <= h
    };
    let shifted_fp = crate::allocentric::LocalRect {
        x0: fp.x0 + delta.0,
        y0: fp.y0 + delta.1,
        x1: fp.x1 + delta.0,
        y1: fp.y1 + delta.1,
    };
    if shifted_fp.x0 < -h || shifted_fp.x1 > h || shifted_fp.y0 < -h || shifted_fp.y1 > h {
        return None;
    }
    match canvas.evidence_bbox() {
        Some(ev) if !fits(&ev) => None,
        _ => Some(delta),
    }
}

/// Delta moving the canvas origin onto the observed floor cell nearest the
/// floor centroid, so a new place's frame is anchored inside its room.
fn rebase_delta(canvas: &PlaceCanvas) -> (i32, i32) {
    let map = canvas.complete();
    let mut sx = 0.0f64;
    let mut sy = 0.0f64;
    let mut n = 0.0f64;
    let floorish: Vec<(i32, i32)> = map
        .known_cells()
        .filter(|(_, kind)| matches!(kind, TileKind::Floor(_) | TileKind::Goal))
        .map(|(cell, _)| cell)
        .collect();
    for &(x, y) in &floorish {
        sx += x as f64;
        sy += y as f64;
        n += 1.0;
    }
    if n == 0.0 {
        return (0, 0);
    }
    let (cx, cy) = (sx / n, sy / n);
    let mut best: Option<((i32, i32), f64)> = None;
    for &(x, y) in &floorish {
        let d2 = (x as f64 - cx).powi(2) + (y as f64 - cy).powi(2);
        let better = match best {
            None => true,
            Some((bc, bd)) => d2 < bd || (d2 == bd && (y, x) < (bc.1, bc.0)),
        };
        if better {
            best = Some(((x, y), d2));
        }
    }
    let anchor = best.unwrap().0;
    let mut delta = (-anchor.0, -anchor.1);
    // Clamp so the existing evidence stays on the canvas.
    if let Some(b) = canvas.evidence_bbox() {
        let h = (canvas.size() / 2) as i32;
        delta.0 = delta.0.clamp(-h - b.x0, h - b.x1);
        delta.1 = delta.1.clamp(-h - b.y0, h - b.y1);
    }
    delta
}
