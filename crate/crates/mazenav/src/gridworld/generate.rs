//! Procedural maze construction.
//!
//! Rooms sit on an `room_rows x room_cols` grid. All rooms in a grid column
//! share one interior width and all rooms in a grid row share one interior
//! height (sampled per column/row from the configured range), so facing walls
//! of adjacent rooms are always exactly `aisle_len` tiles apart. Connected
//! neighbors get an aisle punched through that gap: floor tiles with a single
//! closed door at the middle tile.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_chacha::rand_core::SeedableRng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{FloorColor, Room, TileKind, WorldGrid};

/// Which adjacent room pairs get an aisle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Connectivity {
    /// Every adjacent pair is connected (12 aisles for 3x3 rooms).
    Full,
    /// A random spanning tree of the room grid; harder mazes.
    SpanningTree,
}

/// Maze generation parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MazeConfig {
    pub room_rows: usize,
    pub room_cols: usize,
    /// Minimum interior side length of a room, in tiles.
    pub min_room: i32,
    /// Maximum interior side length of a room, in tiles.
    pub max_room: i32,
    pub connectivity: Connectivity,
    /// Gap between facing room walls; must be odd so the door sits at the
    /// middle tile. The aisle reads floor, door, floor at the default of 3.
    pub aisle_len: i32,
}

impl Default for MazeConfig {
    fn default() -> MazeConfig {
        MazeConfig {
            room_rows: 3,
            room_cols: 3,
            min_room: 4,
            max_room: 7,
            connectivity: Connectivity::Full,
            aisle_len: 3,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("room grid must be at least 1x1, got {rows}x{cols}")]
    EmptyRoomGrid { rows: usize, cols: usize },
    #[error("room size range invalid: need 4 <= min <= max <= 8, got {min}..={max}")]
    RoomSizeRange { min: i32, max: i32 },
    #[error("aisle length must be odd and >= 1, got {0}")]
    AisleLength(i32),
}

impl MazeConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.room_rows < 1 || self.room_cols < 1 {
            return Err(ConfigError::EmptyRoomGrid {
                rows: self.room_rows,
                cols: self.room_cols,
            });
        }
        if self.min_room < 4 || self.min_room > self.max_room || self.max_room > 8 {
            return Err(ConfigError::RoomSizeRange {
                min: self.min_room,
                max: self.max_room,
            });
        }
        if self.aisle_len < 1 || self.aisle_len % 2 == 0 {
            return Err(ConfigError::AisleLength(self.aisle_len));
        }
        Ok(())
    }
}

/// Room-grid edge between two adjacent rooms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum GridEdge {
    /// Between (row, col) and (row, col + 1).
    Horizontal { row: usize, col: usize },
    /// Between (row, col) and (row + 1, col).
    Vertical { row: usize, col: usize },
}

/// Build a maze deterministically from a config and seed.
pub fn generate_maze(config: &MazeConfig, seed: u64) -> Result<WorldGrid, ConfigError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let cols = config.room_cols;
    let rows = config.room_rows;

    let col_widths: Vec<i32> = (0..cols)
        .map(|_| rng.gen_range(config.min_room..=config.max_room))
        .collect();
    let row_heights: Vec<i32> = (0..rows)
        .map(|_| rng.gen_range(config.min_room..=config.max_room))
        .collect();

    // Interior origins: outer wall is 1 thick, inter-room gap is aisle_len.
    let mut x0 = vec![1i32; cols];
    for j in 1..cols {
        x0[j] = x0[j - 1] + col_widths[j - 1] + config.aisle_len;
    }
    let mut y0 = vec![1i32; rows];
    for i in 1..rows {
        y0[i] = y0[i - 1] + row_heights[i - 1] + config.aisle_len;
    }
    let width = x0[cols - 1] + col_widths[cols - 1] + 1;
    let height = y0[rows - 1] + row_heights[rows - 1] + 1;

    let mut tiles = vec![TileKind::Wall; (width * height) as usize];
    let set = |tiles: &mut Vec<TileKind>, x: i32, y: i32, k: TileKind| {
        tiles[(y * width + x) as usize] = k;
    };

    let mut rooms = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        for j in 0..cols {
            let color = *FloorColor::ALL.as_slice().choose(&mut rng).unwrap();
            let room = Room {
                x: x0[j],
                y: y0[i],
                width: col_widths[j],
                height: row_heights[i],
                color,
            };
            for y in room.y..room.y + room.height {
                for x in room.x..room.x + room.width {
                    set(&mut tiles, x, y, TileKind::Floor(color));
                }
            }
            rooms.push(room);
        }
    }

    // Canonical edge order: all horizontal edges row-major, then vertical.
    let mut all_edges = Vec::new();
    for row in 0..rows {
        for col in 0..cols.saturating_sub(1) {
            all_edges.push(GridEdge::Horizontal { row, col });
        }
    }
    for row in 0..rows.saturating_sub(1) {
        for col in 0..cols {
            all_edges.push(GridEdge::Vertical { row, col });
        }
    }

    let selected: Vec<GridEdge> = match config.connectivity {
        Connectivity::Full => all_edges,
        Connectivity::SpanningTree => spanning_tree(rows, cols, &mut rng),
    };

    let mut doors = Vec::new();
    for edge in &selected {
        match *edge {
            GridEdge::Horizontal { row, col } => {
                let a = rooms[row * cols + col];
                let b = rooms[row * cols + col + 1];
                let ry = rng.gen_range(a.y..a.y + a.height);
                let gap_x0 = a.x + a.width;
                for k in 0..config.aisle_len {
                    let x = gap_x0 + k;
                    let kind = if k == config.aisle_len / 2 {
                        TileKind::Door { open: false }
                    } else if k < config.aisle_len / 2 {
                        TileKind::Floor(a.color)
                    } else {
                        TileKind::Floor(b.color)
                    };
                    set(&mut tiles, x, ry, kind);
                    if matches!(kind, TileKind::Door { .. }) {
                        doors.push((x, ry));
                    }
                }
            }
            GridEdge::Vertical { row, col } => {
                let a = rooms[row * cols + col];
                let b = rooms[(row + 1) * cols + col];
                let rx = rng.gen_range(a.x..a.x + a.width);
                let gap_y0 = a.y + a.height;
                for k in 0..config.aisle_len {
                    let y = gap_y0 + k;
                    let kind = if k == config.aisle_len / 2 {
                        TileKind::Door { open: false }
                    } else if k < config.aisle_len / 2 {
                        TileKind::Floor(a.color)
                    } else {
                        TileKind::Floor(b.color)
                    };
                    set(&mut tiles, rx, y, kind);
                    if matches!(kind, TileKind::Door { .. }) {
                        doors.push((rx, y));
                    }
                }
            }
        }
    }

    // Exactly one goal, uniform over room interior tiles.
    let interior_cells: Vec<(i32, i32)> = rooms
        .iter()
        .flat_map(|r| {
            (r.y..r.y + r.height).flat_map(move |y| (r.x..r.x + r.width).map(move |x| (x, y)))
        })
        .collect();
    let goal = interior_cells[rng.gen_range(0..interior_cells.len())];
    set(&mut tiles, goal.0, goal.1, TileKind::Goal);

    Ok(WorldGrid::from_parts(width, height, tiles, rooms, doors, goal))
}

/// Random spanning tree over the room grid via randomized depth-first search.
fn spanning_tree(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Vec<GridEdge> {
    let mut visited = vec![false; rows * cols];
    let mut edges = Vec::new();
    let mut stack = vec![(0usize, 0usize)];
    visited[0] = true;
    while let Some(&(r, c)) = stack.last() {
        let mut neighbors = Vec::new();
        if c + 1 < cols && !visited[r * cols + c + 1] {
            neighbors.push((r, c + 1, GridEdge::Horizontal { row: r, col: c }));
        }
        if r + 1 < rows && !visited[(r + 1) * cols + c] {
            neighbors.push((r + 1, c, GridEdge::Vertical { row: r, col: c }));
        }
        if c > 0 && !visited[r * cols + c - 1] {
            neighbors.push((r, c - 1, GridEdge::Horizontal { row: r, col: c - 1 }));
        }
        if r > 0 && !visited[(r - 1) * cols + c] {
            neighbors.push((r - 1, c, GridEdge::Vertical { row: r - 1, col: c }));
        }
        if neighbors.is_empty() {
            stack.pop();
            continue;
        }
        let &(nr, nc, edge) = neighbors.as_slice().choose(rng).unwrap();
        visited[nr * cols + nc] = true;
        edges.push(edge);
        stack.push((nr, nc));
    }
    edges
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    /// Flood-fill count of traversable tiles reachable from a start tile.
    fn flood_fill_traversable(world: &WorldGrid, start: (i32, i32)) -> usize {
        let mut seen = HashSet::new();
        let mut stack = vec![start];
        seen.insert(start);
        while let Some((x, y)) = stack.pop() {
            for (dx, dy) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
                let n = (x + dx, y + dy);
                if !seen.contains(&n)
                    && world.tile(n.0, n.1).is_some_and(TileKind::traversable)
                {
                    seen.insert(n);
                    stack.push(n);
                }
            }
        }
        seen.len()
    }

    #[test]
    fn default_three_by_three_layout() {
        for seed in 0..5 {
            let world = generate_maze(&MazeConfig::default(), seed).unwrap();
            assert_eq!(world.rooms().len(), 9);
            for room in world.rooms() {
                assert!((4..=7).contains(&room.width));
                assert!((4..=7).contains(&room.height));
            }
            // Full connectivity on 3x3: 6 horizontal + 6 vertical aisles.
            assert_eq!(world.doors().len(), 12);
        }
    }

    #[test]
    fn identical_seed_identical_world() {
        let a = generate_maze(&MazeConfig::default(), 42).unwrap();
        let b = generate_maze(&MazeConfig::default(), 42).unwrap();
        assert_eq!(a, b);
        let c = generate_maze(&MazeConfig::default(), 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn single_room_degenerate_case() {
        let cfg = MazeConfig {
            room_rows: 1,
            room_cols: 1,
            min_room: 4,
            max_room: 4,
            ..MazeConfig::default()
        };
        let world = generate_maze(&cfg, 0).unwrap();
        assert_eq!(world.rooms().len(), 1);
        assert_eq!(world.doors().len(), 0);
        assert_eq!(world.width(), 6);
        assert_eq!(world.height(), 6);
        let goals = (0..world.height())
            .flat_map(|y| (0..world.width()).map(move |x| (x, y)))
            .filter(|&(x, y)| world.tile(x, y) == Some(TileKind::Goal))
            .count();
        assert_eq!(goals, 1);
    }

    #[test]
    fn traversable_count_matches_flood_fill_oracle() {
        let cfg = MazeConfig {
            room_rows: 2,
            room_cols: 2,
            min_room: 5,
            max_room: 5,
            ..MazeConfig::default()
        };
        let world = generate_maze(&cfg, 7).unwrap();
        let total: usize = world.traversable_tiles().count();
        let reached = flood_fill_traversable(&world, world.rooms()[0].center());
        assert_eq!(total, reached, "all traversable tiles reachable");
        // 4 rooms of 25 floor tiles + 4 aisles of 3 tiles each.
        assert_eq!(total, 4 * 25 + 4 * 3);
    }

    #[test]
    fn spanning_tree_keeps_world_connected() {
        for seed in 0..10 {
            let cfg = MazeConfig {
                connectivity: Connectivity::SpanningTree,
                ..MazeConfig::default()
            };
            let world = generate_maze(&cfg, seed).unwrap();
            // Spanning tree over 9 rooms: exactly 8 aisles.
            assert_eq!(world.doors().len(), 8);
            let total: usize = world.traversable_tiles().count();
            let reached = flood_fill_traversable(&world, world.rooms()[0].center());
            assert_eq!(total, reached);
        }
    }

    #[test]
    fn goal_sits_on_a_room_interior() {
        for seed in 0..10 {
            let world = generate_maze(&MazeConfig::default(), seed).unwrap();
            let (gx, gy) = world.goal();
            assert_eq!(world.tile(gx, gy), Some(TileKind::Goal));
            assert!(world.rooms().iter().any(|r| r.contains(gx, gy)));
        }
    }

    #[test]
    fn boundary_is_all_wall() {
        let world = generate_maze(&MazeConfig::default(), 7).unwrap();
        for x in 0..world.width() {
            assert_eq!(world.tile(x, 0), Some(TileKind::Wall));
            assert_eq!(world.tile(x, world.height() - 1), Some(TileKind::Wall));
        }
        for y in 0..world.height() {
            assert_eq!(world.tile(0, y), Some(TileKind::Wall));
            assert_eq!(world.tile(world.width() - 1, y), Some(TileKind::Wall));
        }
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut cfg = MazeConfig::default();
        cfg.min_room = 3;
        assert!(matches!(
            generate_maze(&cfg, 0),
            Err(ConfigError::RoomSizeRange { .. })
        ));
        let mut cfg = MazeConfig::default();
        cfg.max_room = 9;
        assert!(generate_maze(&cfg, 0).is_err());
        let mut cfg = MazeConfig::default();
        cfg.room_rows = 0;
        assert!(matches!(
            generate_maze(&cfg, 0),
            Err(ConfigError::EmptyRoomGrid { .. })
        ));
        let mut cfg = MazeConfig::default();
        cfg.aisle_len = 2;
        assert!(matches!(generate_maze(&cfg, 0), Err(ConfigError::AisleLength(2))));
    }
}
