//! Egocentric short-memory world model (finest timescale).
//!
//! Keeps an agent-centered buffer of recently seen tiles, rigidly
//! re-registered under each motion, and predicts the next observation and
//! collision for a candidate action. Cells fade after `forget_horizon` steps
//! without being re-observed, so the buffer behaves as a short-term memory:
//! it can imagine the immediate surroundings but forgets rooms left behind.

use serde::{Deserialize, Serialize};

use crate::gridworld::{Action, ObsCell, Observation, TileKind};
use crate::view::{self, PredictedView};
use crate::window;

/// Buffer radius: the buffer is `(2K+1) x (2K+1)` agent-centered cells.
/// Must be at least 6 so a full 7x7 observation survives one shift.
pub const MIN_BUFFER_RADIUS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
struct EgoCell {
    kind: TileKind,
    /// Steps since this cell was last observed.
    age: u32,
}

/// Agent-frame belief buffer. Row 0 side is ahead of the agent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EgoState {
    radius: usize,
    forget_horizon: u32,
    cells: Vec<Option<EgoCell>>,
    clock: u64,
}

/// Imagined outcome of one action.
#[derive(Debug, Clone, PartialEq)]
pub struct EgoPrediction {
    pub view: PredictedView,
    /// 1.0 for a known wall ahead, 0.0 for known traversable or a turn,
    /// 0.5 when the front cell is unknown.
    pub collision_prob: f64,
}

/// Fresh, fully unknown state with the default buffer radius.
pub fn ego_init(forget_horizon: u32) -> EgoState {
    EgoState::new(MIN_BUFFER_RADIUS, forget_horizon)
}

impl EgoState {
    pub fn new(radius: usize, forget_horizon: u32) -> EgoState {
        let radius = radius.max(MIN_BUFFER_RADIUS);
        let side = 2 * radius + 1;
        EgoState {
            radius,
            forget_horizon,
            cells: vec![None; side * side],
            clock: 0,
        }
    }

    pub fn clock(&self) -> u64 {
        self.clock
    }

    pub fn forget_horizon(&self) -> u32 {
        self.forget_horizon
    }

    fn side(&self) -> usize {
        2 * self.radius + 1
    }

    fn idx(&self, fwd: i32, lat: i32) -> Option<usize> {
        let r = self.radius as i32;
        if fwd.abs() > r || lat.abs() > r {
            return None;
        }
        let row = (r - fwd) as usize;
        let col = (r + lat) as usize;
        Some(row * self.side() + col)
    }

    /// Believed tile at a forward/lateral offset, if observed recently enough.
    pub fn known(&self, fwd: i32, lat: i32) -> Option<TileKind> {
        let cell = self.cells[self.idx(fwd, lat)?]?;
        (cell.age <= self.forget_horizon).then_some(cell.kind)
    }

    /// Age of the belief at an offset (steps since observed).
    pub fn age(&self, fwd: i32, lat: i32) -> Option<u32> {
        self.idx(fwd, lat)
            .and_then(|i| self.cells[i])
            .map(|c| c.age)
    }

    pub fn known_cell_count(&self) -> usize {
        let r = self.radius as i32;
        (-r..=r)
            .flat_map(|f| (-r..=r).map(move |l| (f, l)))
            .filter(|&(f, l)| self.known(f, l).is_some())
            .count()
    }

    /// Rigid re-registration of the buffer under the inverse of the agent's
    /// own motion. Content shifted off the edge is dropped.
    fn transformed(&self, action: Action, moved: bool) -> EgoState {
        let r = self.radius as i32;
        let mut out = self.clone();
        for f_new in -r..=r {
            for l_new in -r..=r {
                let (f_old, l_old) = match action {
                    Action::TurnLeft => (l_new, -f_new),
                    Action::TurnRight => (-l_new, f_new),
                    Action::Forward if moved => (f_new + 1, l_new),
                    Action::Forward => (f_new, l_new),
                };
                let value = self.idx(f_old, l_old).and_then(|i| self.cells[i]);
                let dst = out.idx(f_new, l_new).unwrap();
                out.cells[dst] = value;
            }
        }
        out
    }

    fn fuse_observation(&mut self, obs: &Observation) {
        for row in 0..window::WINDOW {
            for col in 0..window::WINDOW {
                if let ObsCell::Visible(kind) = obs.cell(row, col) {
                    let (fwd, lat) = window::cell_offsets(row, col);
                    let i = self.idx(fwd, lat).expect("window fits in buffer");
                    self.cells[i] = Some(EgoCell { kind, age: 0 });
                }
            }
        }
    }

    fn age_and_forget(&mut self) {
        let horizon = self.forget_horizon;
        for cell in &mut self.cells {
            if let Some(c) = cell {
                c.age += 1;
                if c.age > horizon {
                    *cell = None;
                }
            }
        }
    }
}

/// Advance the model by one executed action and the observation that followed.
///
/// The buffer is re-registered by the action's inverse motion (identity on
/// collision), every cell ages by one step, then the visible cells of `obs`
/// overwrite their buffer positions with age zero. An observed collision flag
/// that contradicts the buffered front tile is logged but the observation
/// wins.
pub fn ego_update(state: &EgoState, action: Action, obs: &Observation, collision: bool) -> EgoState {
    if action == Action::Forward {
        match state.known(1, 0) {
            Some(TileKind::Wall) if !collision => {
                log::warn!("forward reported no collision but front cell was believed Wall");
            }
            Some(kind) if collision && kind.traversable() => {
                log::warn!("forward reported collision but front cell was believed traversable");
            }
            _ => {}
        }
    }
    let mut next = state.transformed(action, !collision);
    next.age_and_forget();
    next.fuse_observation(obs);
    next.clock = state.clock + 1;
    next
}

/// Imagine the outcome of one action from the current state.
pub fn ego_predict(state: &EgoState, action: Action) -> EgoPrediction {
    let collision_prob = match action {
        Action::TurnLeft | Action::TurnRight => 0.0,
        Action::Forward => match state.known(1, 0) {
            Some(TileKind::Wall) => 1.0,
            Some(_) => 0.0,
            None => 0.5,
        },
    };
    let moved = action == Action::Forward && collision_prob < 1.0;
    let imagined = state.transformed(action, moved);
    let view = view::render(|row, col| {
        let (fwd, lat) = window::cell_offsets(row, col);
        Some(imagined.known(fwd, lat))
    });
    EgoPrediction {
        view,
        collision_prob,
    }
}

/// Imagine a whole action sequence, carrying the buffer through each
/// predicted (non-colliding) motion. Predicted collisions keep position.
pub fn ego_rollout(state: &EgoState, actions: &[Action]) -> Vec<EgoPrediction> {
    let mut scratch = state.clone();
    let mut out = Vec::with_capacity(actions.len());
    for &action in actions {
        let prediction = ego_predict(&scratch, action);
        let moved = action == Action::Forward && prediction.collision_prob < 1.0;
        scratch = scratch.transformed(action, moved);
        out.push(prediction);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridworld::{generate_maze, observe, step, MazeConfig, Pose, WorldGrid};
    use crate::view::ViewCell;
    use crate::window::Heading;

    const HORIZON: u32 = 20;

    fn single_room(size: i32, seed: u64) -> WorldGrid {
        let cfg = MazeConfig {
            room_rows: 1,
            room_cols: 1,
            min_room: size,
            max_room: size,
            ..MazeConfig::default()
        };
        generate_maze(&cfg, seed).unwrap()
    }

    /// Observation (Visible/Hidden) must coincide with a predicted view
    /// (Seen/Hidden) cell for cell.
    fn assert_view_matches_obs(view: &PredictedView, obs: &Observation) {
        for r in 0..window::WINDOW {
            for c in 0..window::WINDOW {
                match (view.cell(r, c), obs.cell(r, c)) {
                    (ViewCell::Seen(a), ObsCell::Visible(b)) if a == b => {}
                    (ViewCell::Hidden, ObsCell::Hidden) => {}
                    (got, want) => panic!("cell ({r},{c}): predicted {got:?}, actual {want:?}"),
                }
            }
        }
    }

    /// Drive a fresh ego model around `world`, returning the model and the
    /// final pose. The first observation is fused via a no-op turn pair.
    fn ego_after_spin(world: &mut WorldGrid, mut pose: Pose) -> (EgoState, Pose) {
        let mut ego = ego_init(HORIZON);
        for _ in 0..4 {
            let out = step(world, pose, Action::TurnLeft);
            pose = out.new_pose;
            ego = ego_update(&ego, Action::TurnLeft, &observe(world, pose), out.collision);
        }
        (ego, pose)
    }

    #[test]
    fn init_is_fully_unknown() {
        let ego = ego_init(HORIZON);
        assert_eq!(ego.known_cell_count(), 0);
        assert_eq!(ego.clock(), 0);
    }

    #[test]
    fn unknown_front_gives_half_collision_prob() {
        let ego = ego_init(HORIZON);
        assert_eq!(ego_predict(&ego, Action::Forward).collision_prob, 0.5);
    }

    #[test]
    fn turn_prediction_on_empty_state_is_all_unknown() {
        let ego = ego_init(HORIZON);
        let pred = ego_predict(&ego, Action::TurnLeft);
        assert_eq!(pred.collision_prob, 0.0);
        assert!(pred
            .view
            .cells
            .iter()
            .flatten()
            .all(|c| matches!(c, ViewCell::Unknown)));
    }

    #[test]
    fn four_blind_turns_preserve_content_and_age_it() {
        let world = single_room(8, 5);
        let pose = Pose::new(4, 4, Heading::North);
        let mut ego = ego_init(HORIZON);
        ego = ego_update(&ego, Action::TurnLeft, &observe(&world, pose), false);
        let before = ego.clone();

        let blind = Observation::all_hidden();
        for _ in 0..4 {
            ego = ego_update(&ego, Action::TurnLeft, &blind, false);
        }
        let r = MIN_BUFFER_RADIUS as i32;
        for f in -r..=r {
            for l in -r..=r {
                assert_eq!(ego.known(f, l), before.known(f, l), "kind at ({f},{l})");
                if before.age(f, l).is_some() {
                    assert_eq!(ego.age(f, l), before.age(f, l).map(|a| a + 4));
                }
            }
        }
    }

    #[test]
    fn forward_shifts_known_wall_closer() {
        let mut world = single_room(8, 5);
        // Facing north with the boundary wall 2 ahead.
        let pose = Pose::new(4, 2, Heading::North);
        let mut ego = ego_init(HORIZON);
        ego = ego_update(&ego, Action::TurnLeft, &Observation::all_hidden(), false);
        ego = ego_update(&ego, Action::TurnRight, &observe(&world, pose), false);
        assert_eq!(ego.known(2, 0), Some(TileKind::Wall));

        let out = step(&mut world, pose, Action::Forward);
        assert!(!out.collision);
        ego = ego_update(&ego, Action::Forward, &Observation::all_hidden(), false);
        assert_eq!(ego.known(1, 0), Some(TileKind::Wall));
    }

    #[test]
    fn known_wall_ahead_predicts_certain_collision() {
        let world = single_room(8, 5);
        let pose = Pose::new(4, 1, Heading::North);
        let mut ego = ego_init(HORIZON);
        ego = ego_update(&ego, Action::TurnRight, &Observation::all_hidden(), false);
        ego = ego_update(&ego, Action::TurnLeft, &observe(&world, pose), false);
        assert_eq!(ego.known(1, 0), Some(TileKind::Wall));
        assert_eq!(ego_predict(&ego, Action::Forward).collision_prob, 1.0);
    }

    #[test]
    fn cells_are_forgotten_after_horizon() {
        let mut world = single_room(8, 5);
        let pose = Pose::new(4, 4, Heading::North);
        let mut ego = ego_init(HORIZON);
        ego = ego_update(&ego, Action::TurnLeft, &observe(&world, pose), false);
        assert!(ego.known_cell_count() > 0);
        let blind = Observation::all_hidden();
        // Alternate turns so the net rotation is identity every 4 steps.
        for _ in 0..HORIZON + 1 {
            ego = ego_update(&ego, Action::TurnLeft, &blind, false);
            ego = ego_update(&ego, Action::TurnRight, &blind, false);
        }
        assert_eq!(ego.known_cell_count(), 0);
        let _ = &mut world;
    }

    #[test]
    fn predictions_match_simulator_for_all_three_actions() {
        let mut world = single_room(5, 9);
        let center = Pose::new(3, 3, Heading::North);
        let (ego, pose) = ego_after_spin(&mut world, center);
        assert_eq!(pose, center);

        for action in Action::ALL {
            let pred = ego_predict(&ego, action);
            let mut w = world.clone();
            let out = step(&mut w, pose, action);
            let actual = observe(&w, out.new_pose);
            assert_view_matches_obs(&pred.view, &actual);
            if action != Action::Forward {
                assert_eq!(pred.collision_prob, 0.0);
            }
        }
    }

    #[test]
    fn rollout_trivial_cases() {
        let ego = ego_init(HORIZON);
        assert!(ego_rollout(&ego, &[]).is_empty());
        let single = ego_rollout(&ego, &[Action::Forward]);
        assert_eq!(single.len(), 1);
        assert_eq!(single[0], ego_predict(&ego, Action::Forward));
    }

    #[test]
    fn rollout_matches_replay_in_fully_known_room() {
        let mut world = single_room(5, 9);
        let center = Pose::new(3, 3, Heading::North);
        let (ego, start) = ego_after_spin(&mut world, center);

        let script = [
            Action::Forward,
            Action::TurnRight,
            Action::Forward,
            Action::Forward,
            Action::TurnLeft,
            Action::Forward,
            Action::TurnLeft,
            Action::Forward,
            Action::Forward,
            Action::TurnRight,
        ];
        let predictions = ego_rollout(&ego, &script);

        let mut w = world.clone();
        let mut pose = start;
        for (i, &action) in script.iter().enumerate() {
            let out = step(&mut w, pose, action);
            pose = out.new_pose;
            let actual = observe(&w, pose);
            assert_view_matches_obs(&predictions[i].view, &actual);
            if out.collision {
                assert_eq!(predictions[i].collision_prob, 1.0, "step {i}");
            }
        }
    }

    #[test]
    fn random_walk_buffer_matches_world_under_frame_transform() {
        let mut world = single_room(8, 11);
        let mut pose = Pose::new(4, 4, Heading::East);
        let mut ego = ego_init(HORIZON);
        ego = ego_update(&ego, Action::TurnLeft, &Observation::all_hidden(), false);
        ego = ego_update(&ego, Action::TurnRight, &observe(&world, pose), false);

        let mut state = 77u64;
        for _ in 0..50 {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            let action = match (state >> 33) % 3 {
                0 => Action::Forward,
                1 => Action::TurnLeft,
                _ => Action::TurnRight,
            };
            let out = step(&mut world, pose, action);
            pose = out.new_pose;
            ego = ego_update(&ego, action, &observe(&world, pose), out.collision);

            // Ground-truth transform oracle: every remembered cell must hold
            // the true world tile at its agent-frame offset.
            let r = MIN_BUFFER_RADIUS as i32;
            let (dx, dy) = pose.heading.delta();
            let (rx, ry) = pose.heading.turn_right().delta();
            for f in -r..=r {
                for l in -r..=r {
                    if let Some(kind) = ego.known(f, l) {
                        let wx = pose.x + f * dx + l * rx;
                        let wy = pose.y + f * dy + l * ry;
                        assert_eq!(
                            world.tile(wx, wy),
                            Some(kind),
                            "offset ({f},{l}) at pose {pose:?}"
                        );
                    }
                }
            }
        }
    }
}
