//! Versioned plain-text maze format, one character per tile.
//!
//! ```text
//! maze v1
//! # legend: #=wall r/g/b/p=floor D=closed door d=open door W=goal
//! size 21 16
//! rooms 4
//! room 1 1 5 5 red
//! ...
//! grid
//! #####################
//! #rrrrr#...
//! ```
//!
//! Doors and the goal are recovered from the grid characters; rooms carry
//! their own records because interiors are not recoverable once a goal tile
//! overwrites a floor tile.

use thiserror::Error;

use super::{FloorColor, Room, TileKind, WorldGrid};

pub const FORMAT_VERSION: &str = "maze v1";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MazeTextError {
    #[error("line {line}: expected header '{}', got '{found}'", FORMAT_VERSION)]
    BadVersion { line: usize, found: String },
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("line {line}: unknown tile character '{ch}'")]
    UnknownTile { line: usize, ch: char },
    #[error("grid is {got} rows, header said {want}")]
    RowCount { want: i32, got: usize },
    #[error("expected exactly one goal tile, found {0}")]
    GoalCount(usize),
}

fn color_name(c: FloorColor) -> &'static str {
    match c {
        FloorColor::Red => "red",
        FloorColor::Green => "green",
        FloorColor::Blue => "blue",
        FloorColor::Purple => "purple",
    }
}

fn color_from_name(s: &str) -> Option<FloorColor> {
    Some(match s {
        "red" => FloorColor::Red,
        "green" => FloorColor::Green,
        "blue" => FloorColor::Blue,
        "purple" => FloorColor::Purple,
        _ => return None,
    })
}

fn tile_char(kind: TileKind) -> char {
    match kind {
        TileKind::Wall => '#',
        TileKind::Floor(FloorColor::Red) => 'r',
        TileKind::Floor(FloorColor::Green) => 'g',
        TileKind::Floor(FloorColor::Blue) => 'b',
        TileKind::Floor(FloorColor::Purple) => 'p',
        TileKind::Door { open: false } => 'D',
        TileKind::Door { open: true } => 'd',
        TileKind::Goal => 'W',
    }
}

fn tile_from_char(ch: char) -> Option<TileKind> {
    Some(match ch {
        '#' => TileKind::Wall,
        'r' => TileKind::Floor(FloorColor::Red),
        'g' => TileKind::Floor(FloorColor::Green),
        'b' => TileKind::Floor(FloorColor::Blue),
        'p' => TileKind::Floor(FloorColor::Purple),
        'D' => TileKind::Door { open: false },
        'd' => TileKind::Door { open: true },
        'W' => TileKind::Goal,
        _ => return None,
    })
}

impl WorldGrid {
    /// Serialize to the versioned text format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(FORMAT_VERSION);
        out.push('\n');
        out.push_str("# legend: #=wall r/g/b/p=floor D=closed door d=open door W=goal\n");
        out.push_str(&format!("size {} {}\n", self.width(), self.height()));
        out.push_str(&format!("rooms {}\n", self.rooms().len()));
        for r in self.rooms() {
            out.push_str(&format!(
                "room {} {} {} {} {}\n",
                r.x,
                r.y,
                r.width,
                r.height,
                color_name(r.color)
            ));
        }
        out.push_str("grid\n");
        for y in 0..self.height() {
            for x in 0..self.width() {
                out.push(tile_char(self.tile(x, y).unwrap()));
            }
            out.push('\n');
        }
        out
    }

    /// Parse the versioned text format.
    pub fn from_text(text: &str) -> Result<WorldGrid, MazeTextError> {
        let mut lines = text.lines().enumerate().peekable();
        let malformed = |line: usize, msg: &str| MazeTextError::Malformed {
            line: line + 1,
            msg: msg.to_string(),
        };

        let (ln, header) = lines
            .next()
            .ok_or_else(|| malformed(0, "empty input"))?;
        if header.trim() != FORMAT_VERSION {
            return Err(MazeTextError::BadVersion {
                line: ln + 1,
                found: header.to_string(),
            });
        }

        // Skip comment lines.
        while lines.peek().is_some_and(|(_, l)| l.starts_with('#')) {
            lines.next();
        }

        let (ln, size_line) = lines.next().ok_or_else(|| malformed(1, "missing size"))?;
        let dims: Vec<i32> = size_line
            .strip_prefix("size ")
            .ok_or_else(|| malformed(ln, "expected 'size <w> <h>'"))?
            .split_whitespace()
            .filter_map(|t| t.parse().ok())
            .collect();
        let [width, height] = dims[..] else {
            return Err(malformed(ln, "expected 'size <w> <h>'"));
        };
        if width <= 0 || height <= 0 {
            return Err(malformed(ln, "non-positive dimensions"));
        }

        let (ln, rooms_line) = lines.next().ok_or_else(|| malformed(ln, "missing rooms"))?;
        let room_count: usize = rooms_line
            .strip_prefix("rooms ")
            .and_then(|t| t.trim().parse().ok())
            .ok_or_else(|| malformed(ln, "expected 'rooms <n>'"))?;

        let mut rooms = Vec::with_capacity(room_count);
        for _ in 0..room_count {
            let (ln, line) = lines
                .next()
                .ok_or_else(|| malformed(ln, "missing room record"))?;
            let rest = line
                .strip_prefix("room ")
                .ok_or_else(|| malformed(ln, "expected 'room <x> <y> <w> <h> <color>'"))?;
            let toks: Vec<&str> = rest.split_whitespace().collect();
            let [x, y, w, h, color] = toks[..] else {
                return Err(malformed(ln, "expected 'room <x> <y> <w> <h> <color>'"));
            };
            let parse = |t: &str| -> Result<i32, MazeTextError> {
                t.parse().map_err(|_| malformed(ln, "bad integer in room record"))
            };
            rooms.push(Room {
                x: parse(x)?,
                y: parse(y)?,
                width: parse(w)?,
                height: parse(h)?,
                color: color_from_name(color)
                    .ok_or_else(|| malformed(ln, "unknown room color"))?,
            });
        }

        let (ln, grid_line) = lines.next().ok_or_else(|| malformed(ln, "missing grid"))?;
        if grid_line.trim() != "grid" {
            return Err(malformed(ln, "expected 'grid'"));
        }

        let mut tiles = Vec::with_capacity((width * height) as usize);
        let mut doors = Vec::new();
        let mut goals = Vec::new();
        let mut rows = 0usize;
        for (ln, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            if line.chars().count() != width as usize {
                return Err(malformed(ln, "grid row has wrong width"));
            }
            for (x, ch) in line.chars().enumerate() {
                let kind =
                    tile_from_char(ch).ok_or(MazeTextError::UnknownTile { line: ln + 1, ch })?;
                match kind {
                    TileKind::Door { .. } => doors.push((x as i32, rows as i32)),
                    TileKind::Goal => goals.push((x as i32, rows as i32)),
                    _ => {}
                }
                tiles.push(kind);
            }
            rows += 1;
        }
        if rows != height as usize {
            return Err(MazeTextError::RowCount {
                want: height,
                got: rows,
            });
        }
        if goals.len() != 1 {
            return Err(MazeTextError::GoalCount(goals.len()));
        }

        Ok(WorldGrid::from_parts(
            width, height, tiles, rooms, doors, goals[0],
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridworld::{generate_maze, MazeConfig};

    #[test]
    fn round_trip_identity() {
        for seed in [0, 7, 42] {
            let world = generate_maze(&MazeConfig::default(), seed).unwrap();
            let text = world.to_text();
            let back = WorldGrid::from_text(&text).unwrap();
            assert_eq!(world, back);
        }
    }

    #[test]
    fn version_mismatch_rejected() {
        let err = WorldGrid::from_text("maze v9\nsize 3 3\n").unwrap_err();
        assert!(matches!(err, MazeTextError::BadVersion { line: 1, .. }));
    }

    #[test]
    fn unknown_character_reports_line() {
        let world = generate_maze(&MazeConfig::default(), 0).unwrap();
        let text = world.to_text().replace('D', "?");
        let err = WorldGrid::from_text(&text).unwrap_err();
        assert!(matches!(err, MazeTextError::UnknownTile { ch: '?', .. }));
    }

    #[test]
    fn truncated_grid_rejected() {
        let world = generate_maze(&MazeConfig::default(), 0).unwrap();
        let text = world.to_text();
        let truncated: String = text
            .lines()
            .take(text.lines().count() - 3)
            .map(|l| format!("{l}\n"))
            .collect();
        let err = WorldGrid::from_text(&truncated).unwrap_err();
        assert!(matches!(err, MazeTextError::RowCount { .. } | MazeTextError::GoalCount(_)));
    }
}
