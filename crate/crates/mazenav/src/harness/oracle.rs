//! Full-knowledge reference solvers used as efficiency baselines.

use std::collections::{BTreeMap, BTreeSet, BinaryHeap, VecDeque};

use thiserror::Error;

use crate::gridworld::{visible_world_coords, Action, Pose, TileKind, WorldGrid};
use crate::window::Heading;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("goal is unreachable from the start pose (generation invariant violated)")]
    GoalUnreachable,
    #[error("target cell is unreachable")]
    TargetUnreachable,
}

/// Shortest path on (cell, heading) states minimizing forward steps first and
/// turns second. Returns the action sequence reaching `target_cell` (any
/// final heading).
pub fn action_path(
    world: &WorldGrid,
    start: Pose,
    target_cell: (i32, i32),
) -> Result<Vec<Action>, OracleError> {
    let key = |p: Pose| (p.x, p.y, p.heading.index());
    // Cost = forward steps * 1000 + turns: forward count dominates, turns
    // break ties, both deterministic.
    let mut dist: BTreeMap<(i32, i32, u8), u32> = BTreeMap::new();
    let mut prev: BTreeMap<(i32, i32, u8), ((i32, i32, u8), Action)> = BTreeMap::new();
    let mut heap: BinaryHeap<std::cmp::Reverse<(u32, (i32, i32, u8))>> = BinaryHeap::new();
    dist.insert(key(start), 0);
    heap.push(std::cmp::Reverse((0, key(start))));

    let passable =
        |x: i32, y: i32| world.tile(x, y).is_some_and(TileKind::traversable);

    let mut best_goal: Option<(u32, (i32, i32, u8))> = None;
    while let Some(std::cmp::Reverse((d, at))) = heap.pop() {
        if dist.get(&at).copied() != Some(d) {
            continue;
        }
        if (at.0, at.1) == target_cell {
            best_goal = Some((d, at));
            break;
        }
        let heading = Heading::from_index(at.2);
        for action in Action::ALL {
            let (next, cost) = match action {
                Action::Forward => {
                    let (dx, dy) = heading.delta();
                    let t = (at.0 + dx, at.1 + dy);
                    if !passable(t.0, t.1) {
                        continue;
                    }
                    ((t.0, t.1, at.2), 1000)
                }
                Action::TurnLeft => ((at.0, at.1, heading.turn_left().index()), 1),
                Action::TurnRight => ((at.0, at.1, heading.turn_right().index()), 1),
            };
            let nd = d + cost;
            if dist.get(&next).is_none_or(|&cur| nd < cur) {
                dist.insert(next, nd);
                prev.insert(next, (at, action));
                heap.push(std::cmp::Reverse((nd, next)));
            }
        }
    }

    let (_, mut cursor) = best_goal.ok_or(OracleError::TargetUnreachable)?;
    let mut actions = Vec::new();
    let start_key = key(start);
    while cursor != start_key {
        let (p, action) = prev[&cursor];
        actions.push(action);
        cursor = p;
    }
    actions.reverse();
    Ok(actions)
}

/// Minimal forward-step count and full action path from `start` onto the
/// goal tile, with complete knowledge of the maze.
pub fn oracle_goal(world: &WorldGrid, start: Pose) -> Result<(u32, Vec<Action>), OracleError> {
    let path =
        action_path(world, start, world.goal()).map_err(|_| OracleError::GoalUnreachable)?;
    let forward = path.iter().filter(|&&a| a == Action::Forward).count() as u32;
    Ok((forward, path))
}

/// Plain breadth-first tile distance, for cross-checking `oracle_goal`.
pub fn bfs_goal_distance(world: &WorldGrid, start: Pose) -> Option<u32> {
    let mut dist: BTreeMap<(i32, i32), u32> = BTreeMap::new();
    let mut queue = VecDeque::new();
    dist.insert((start.x, start.y), 0);
    queue.push_back((start.x, start.y));
    while let Some((x, y)) = queue.pop_front() {
        let d = dist[&(x, y)];
        if (x, y) == world.goal() {
            return Some(d);
        }
        for (dx, dy) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
            let n = (x + dx, y + dy);
            if world.tile(n.0, n.1).is_some_and(TileKind::traversable)
                && !dist.contains_key(&n)
            {
                dist.insert(n, d + 1);
                queue.push_back(n);
            }
        }
    }
    None
}

/// Every tile visible from some reachable pose: the denominator of the
/// coverage metric.
pub fn visible_universe(world: &WorldGrid, start: Pose) -> BTreeSet<(i32, i32)> {
    let mut universe = BTreeSet::new();
    for (x, y) in reachable_cells(world, (start.x, start.y)) {
        for heading in Heading::ALL {
            universe.extend(visible_world_coords(world, Pose::new(x, y, heading)));
        }
    }
    universe
}

fn reachable_cells(world: &WorldGrid, start: (i32, i32)) -> Vec<(i32, i32)> {
    let mut seen = BTreeSet::new();
    let mut stack = vec![start];
    seen.insert(start);
    while let Some((x, y)) = stack.pop() {
        for (dx, dy) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
            let n = (x + dx, y + dy);
            if world.tile(n.0, n.1).is_some_and(TileKind::traversable) && seen.insert(n) {
                stack.push(n);
            }
        }
    }
    seen.into_iter().collect()
}

/// Greedy full-knowledge coverage tour: repeatedly move to the pose with the
/// best newly-seen-tiles-per-forward-step ratio until the target coverage is
/// reached. An upper bound on the optimal watchman route, used as the
/// exploration baseline.
pub fn oracle_explore(
    world: &WorldGrid,
    start: Pose,
    coverage_target: f64,
) -> (u32, Vec<Action>) {
    let universe = visible_universe(world, start);
    let needed = (coverage_target * universe.len() as f64).ceil() as usize;
    let cells = reachable_cells(world, (start.x, start.y));

    // Door openings persist across tour legs.
    let mut w = world.clone();
    let mut seen: BTreeSet<(i32, i32)> = visible_world_coords(&w, start);
    let mut pose = start;
    let mut tour: Vec<Action> = Vec::new();
    let mut forward = 0u32;

    while seen.len() < needed {
        // Forward-step distances from the current cell.
        let mut dist: BTreeMap<(i32, i32), u32> = BTreeMap::new();
        let mut queue = VecDeque::new();
        dist.insert((pose.x, pose.y), 0);
        queue.push_back((pose.x, pose.y));
        while let Some((x, y)) = queue.pop_front() {
            let d = dist[&(x, y)];
            for (dx, dy) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
                let n = (x + dx, y + dy);
                if w.tile(n.0, n.1).is_some_and(TileKind::traversable) && !dist.contains_key(&n)
                {
                    dist.insert(n, d + 1);
                    queue.push_back(n);
                }
            }
        }

        let mut best: Option<(f64, u32, Pose)> = None;
        for &(x, y) in &cells {
            let d = dist[&(x, y)];
            for heading in Heading::ALL {
                let candidate = Pose::new(x, y, heading);
                let gain = visible_world_coords(&w, candidate)
                    .difference(&seen)
                    .count();
                if gain == 0 {
                    continue;
                }
                // Ratio of new tiles per forward step (turns free, matching
                // the step definition); +1 avoids division by zero in place.
                let ratio = gain as f64 / (d + 1) as f64;
                let better = match &best {
                    None => true,
                    Some((br, bd, bp)) => {
                        ratio > *br
                            || (ratio == *br
                                && (d, y, x, heading.index())
                                    < (*bd, bp.y, bp.x, bp.heading.index()))
                    }
                };
                if better {
                    best = Some((ratio, d, candidate));
                }
            }
        }

        let Some((_, _, target)) = best else {
            break; // nothing new anywhere: coverage saturated
        };
        let leg = action_path(&w, pose, (target.x, target.y)).expect("reachable cell");
        for &action in &leg {
            let out = crate::gridworld::step(&mut w, pose, action);
            pose = out.new_pose;
            if action == Action::Forward && !out.collision {
                forward += 1;
            }
            seen.extend(visible_world_coords(&w, pose));
            tour.push(action);
            if seen.len() >= needed {
                break;
            }
        }
        // Align the final heading when the target heading still matters.
        while pose.heading != target.heading && seen.len() < needed {
            let left_diff = (4 + pose.heading.index() as i32 - target.heading.index() as i32) % 4;
            let action = if left_diff == 1 {
                Action::TurnLeft
            } else {
                Action::TurnRight
            };
            pose = crate::gridworld::step(&mut w, pose, action).new_pose;
            seen.extend(visible_world_coords(&w, pose));
            tour.push(action);
        }
    }
    (forward, tour)
}
