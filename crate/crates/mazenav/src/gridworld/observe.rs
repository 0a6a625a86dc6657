//! Occluded egocentric observation.

use std::collections::BTreeSet;

use super::{ObsCell, Observation, Pose, WorldGrid};
use crate::window::{self, Sight, WINDOW};

/// Observe the 7x7 window ahead of the agent.
///
/// Deterministic. Cells outside the grid are hidden; sight does not pass
/// through walls or closed doors; the agent's own tile is always visible.
pub fn observe(world: &WorldGrid, pose: Pose) -> Observation {
    debug_assert!(
        world
            .tile(pose.x, pose.y)
            .is_some_and(super::TileKind::traversable),
        "observe called with pose off traversable tiles"
    );
    let kind_at = |row: usize, col: usize| {
        let (x, y) = window::cell_to_grid(pose.x, pose.y, pose.heading, row, col);
        world.tile(x, y)
    };
    let vis = window::visibility(|row, col| {
        kind_at(row, col).map(|k| {
            if k.transparent() {
                Sight::Transparent
            } else {
                Sight::Opaque
            }
        })
    });

    let mut cells = [[ObsCell::Hidden; WINDOW]; WINDOW];
    for (row, vis_row) in vis.iter().enumerate() {
        for (col, &v) in vis_row.iter().enumerate() {
            if v {
                if let Some(kind) = kind_at(row, col) {
                    cells[row][col] = ObsCell::Visible(kind);
                }
            }
        }
    }
    Observation { cells }
}

/// World coordinates of every visible cell of `observe(world, pose)`.
pub fn visible_world_coords(world: &WorldGrid, pose: Pose) -> BTreeSet<(i32, i32)> {
    let obs = observe(world, pose);
    let mut coords = BTreeSet::new();
    for row in 0..WINDOW {
        for col in 0..WINDOW {
            if matches!(obs.cells[row][col], ObsCell::Visible(_)) {
                coords.insert(window::cell_to_grid(pose.x, pose.y, pose.heading, row, col));
            }
        }
    }
    coords
}
