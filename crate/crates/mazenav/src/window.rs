//! Shared geometry for the 7x7 egocentric view window and quarter-turn frames.
//!
//! Conventions used throughout the crate:
//! - World/grid coordinates: `x` grows east, `y` grows south.
//! - The view window is 7x7 with the agent anchored at row 6, column 3
//!   (bottom-center). Row 0 is six tiles ahead; columns right of 3 are to the
//!   agent's right. Nothing behind the agent is represented.
//! - Rotations are quarter turns clockwise (`N -> E -> S -> W`).

use serde::{Deserialize, Serialize};

/// Side length of the egocentric view window.
pub const WINDOW: usize = 7;
/// Window row containing the agent.
pub const AGENT_ROW: usize = 6;
/// Window column containing the agent.
pub const AGENT_COL: usize = 3;

/// Cardinal facing direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Heading {
    North,
    East,
    South,
    West,
}

impl Heading {
    pub const ALL: [Heading; 4] = [Heading::North, Heading::East, Heading::South, Heading::West];

    /// Quarter turns clockwise from north.
    pub fn index(self) -> u8 {
        match self {
            Heading::North => 0,
            Heading::East => 1,
            Heading::South => 2,
            Heading::West => 3,
        }
    }

    pub fn from_index(i: u8) -> Heading {
        Heading::ALL[(i % 4) as usize]
    }

    /// Unit step in world coordinates when moving forward.
    pub fn delta(self) -> (i32, i32) {
        match self {
            Heading::North => (0, -1),
            Heading::East => (1, 0),
            Heading::South => (0, 1),
            Heading::West => (-1, 0),
        }
    }

    pub fn turn_left(self) -> Heading {
        Heading::from_index(self.index() + 3)
    }

    pub fn turn_right(self) -> Heading {
        Heading::from_index(self.index() + 1)
    }

    /// Rotate clockwise by `quarter_turns`.
    pub fn rotate_cw(self, quarter_turns: u8) -> Heading {
        Heading::from_index(self.index() + quarter_turns)
    }

    pub fn letter(self) -> char {
        match self {
            Heading::North => 'N',
            Heading::East => 'E',
            Heading::South => 'S',
            Heading::West => 'W',
        }
    }
}

/// Rotate a vector clockwise by one quarter turn (x east, y south).
fn rot_cw_once(v: (i32, i32)) -> (i32, i32) {
    (-v.1, v.0)
}

/// Rotate a vector clockwise by `k` quarter turns.
pub fn rot_cw(v: (i32, i32), k: u8) -> (i32, i32) {
    let mut out = v;
    for _ in 0..(k % 4) {
        out = rot_cw_once(out);
    }
    out
}

/// Forward/lateral offsets of a window cell relative to the agent.
///
/// `fwd` >= 0 is in front of the agent, `lat` > 0 is to the agent's right.
pub fn cell_offsets(row: usize, col: usize) -> (i32, i32) {
    (AGENT_ROW as i32 - row as i32, col as i32 - AGENT_COL as i32)
}

/// Window cell holding a given forward/lateral offset, if it is inside the window.
pub fn offsets_to_cell(fwd: i32, lat: i32) -> Option<(usize, usize)> {
    let row = AGENT_ROW as i32 - fwd;
    let col = AGENT_COL as i32 + lat;
    if (0..WINDOW as i32).contains(&row) && (0..WINDOW as i32).contains(&col) {
        Some((row as usize, col as usize))
    } else {
        None
    }
}

/// Map a window cell to grid coordinates for an agent at `(x, y)` facing `heading`.
pub fn cell_to_grid(x: i32, y: i32, heading: Heading, row: usize, col: usize) -> (i32, i32) {
    let (fwd, lat) = cell_offsets(row, col);
    let (dx, dy) = heading.delta();
    let (rx, ry) = heading.turn_right().delta();
    (x + fwd * dx + lat * rx, y + fwd * dy + lat * ry)
}

/// How a tile interacts with line-of-sight propagation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sight {
    /// Light passes through (floor, open door, goal, or an unknown cell in a
    /// model render, which is treated optimistically as see-through).
    Transparent,
    /// Blocks sight beyond it but is itself visible (wall, closed door).
    Opaque,
}

/// Visibility propagation over the window.
///
/// `sight_at(row, col)` returns `None` for cells with no content at all
/// (outside the grid); such cells are never visible and never transmit.
/// The agent cell is always visible. A cell is visible iff one of its
/// predecessors toward the agent — `(row+1, col)`, `(row+1, col±1)` and
/// `(row, col±1)`, stepping toward the center column — is visible and
/// transparent.
pub fn visibility<F>(sight_at: F) -> [[bool; WINDOW]; WINDOW]
where
    F: Fn(usize, usize) -> Option<Sight>,
{
    let mut vis = [[false; WINDOW]; WINDOW];
    vis[AGENT_ROW][AGENT_COL] = true;

    let transmits = |vis: &[[bool; WINDOW]; WINDOW], r: usize, c: usize| {
        vis[r][c] && sight_at(r, c) == Some(Sight::Transparent)
    };

    // Column order guarantees same-row predecessors are settled first.
    const COL_ORDER: [usize; 7] = [3, 2, 4, 1, 5, 0, 6];
    for row in (0..WINDOW).rev() {
        for &col in &COL_ORDER {
            if row == AGENT_ROW && col == AGENT_COL {
                continue;
            }
            let toward_center = (AGENT_COL as i32 - col as i32).signum();
            let mut seen = false;
            if row + 1 < WINDOW {
                seen = seen || transmits(&vis, row + 1, col);
                if toward_center != 0 {
                    let c2 = (col as i32 + toward_center) as usize;
                    seen = seen || transmits(&vis, row + 1, c2);
                }
            }
            if toward_center != 0 {
                let c2 = (col as i32 + toward_center) as usize;
                seen = seen || transmits(&vis, row, c2);
            }
            vis[row][col] = seen && sight_at(row, col).is_some();
        }
    }
    vis
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heading_rotation_group() {
        for h in Heading::ALL {
            assert_eq!(h.turn_left().turn_right(), h);
            assert_eq!(h.rotate_cw(4), h);
            assert_eq!(h.turn_right(), h.rotate_cw(1));
        }
    }

    #[test]
    fn rot_cw_maps_north_to_east() {
        assert_eq!(rot_cw((0, -1), 1), (1, 0));
        assert_eq!(rot_cw((0, -1), 2), (0, 1));
        assert_eq!(rot_cw((0, -1), 3), (-1, 0));
        assert_eq!(rot_cw((5, 2), 4), (5, 2));
    }

    #[test]
    fn cell_to_grid_all_headings() {
        // One tile ahead.
        assert_eq!(cell_to_grid(10, 10, Heading::North, 5, 3), (10, 9));
        assert_eq!(cell_to_grid(10, 10, Heading::East, 5, 3), (11, 10));
        assert_eq!(cell_to_grid(10, 10, Heading::South, 5, 3), (10, 11));
        assert_eq!(cell_to_grid(10, 10, Heading::West, 5, 3), (9, 10));
        // One tile to the right.
        assert_eq!(cell_to_grid(10, 10, Heading::North, 6, 4), (11, 10));
        assert_eq!(cell_to_grid(10, 10, Heading::West, 6, 4), (10, 9));
    }

    #[test]
    fn visibility_open_field_sees_everything() {
        let vis = visibility(|_, _| Some(Sight::Transparent));
        assert!(vis.iter().all(|row| row.iter().all(|&v| v)));
    }

    #[test]
    fn visibility_wall_row_blocks_rows_beyond() {
        // Opaque wall spanning the row one ahead of the agent.
        let vis = visibility(|r, _| {
            if r == AGENT_ROW - 1 {
                Some(Sight::Opaque)
            } else {
                Some(Sight::Transparent)
            }
        });
        for c in 0..WINDOW {
            assert!(vis[AGENT_ROW - 1][c], "wall itself visible at col {c}");
        }
        for r in 0..AGENT_ROW - 1 {
            for c in 0..WINDOW {
                assert!(!vis[r][c], "cell ({r},{c}) should be hidden");
            }
        }
    }

    #[test]
    fn visibility_absent_cells_block() {
        // Nothing exists left of the center column: right side unaffected.
        let vis = visibility(|_, c| {
            if c < AGENT_COL {
                None
            } else {
                Some(Sight::Transparent)
            }
        });
        assert!(vis[0][6]);
        assert!(!vis[6][0]);
    }
}
