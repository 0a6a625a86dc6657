//! Multi-room maze environment: procedural generation, deterministic
//! dynamics, and occluded egocentric observation.
//!
//! A maze is a grid of rectangular rooms (4-7 tiles wide by default), each
//! painted one of four floor colors, connected by short aisles with a door at
//! the middle tile. One white goal tile sits somewhere on a room floor. The
//! agent moves with three actions (forward, turn left, turn right) and
//! perceives a 7x7 window of tiles ahead of it, with no sight through walls
//! or closed doors and none behind itself.

mod generate;
mod observe;
mod text;

pub use generate::{generate_maze, Connectivity, MazeConfig};
pub use observe::{observe, visible_world_coords};
pub use text::MazeTextError;

use serde::{Deserialize, Serialize};

use crate::window::Heading;

/// Floor paint of a room.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FloorColor {
    Red,
    Green,
    Blue,
    Purple,
}

impl FloorColor {
    pub const ALL: [FloorColor; 4] = [
        FloorColor::Red,
        FloorColor::Green,
        FloorColor::Blue,
        FloorColor::Purple,
    ];
}

/// One tile of the maze.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TileKind {
    Wall,
    Floor(FloorColor),
    Door { open: bool },
    /// The single white goal tile.
    Goal,
}

impl TileKind {
    /// Number of distinguishable tile symbols (wall, four floor colors,
    /// closed door, open door, goal). Used for evidence counting.
    pub const SYMBOLS: usize = 8;

    /// Dense index of this tile among the [`Self::SYMBOLS`] alternatives.
    pub fn symbol(self) -> usize {
        match self {
            TileKind::Wall => 0,
            TileKind::Floor(FloorColor::Red) => 1,
            TileKind::Floor(FloorColor::Green) => 2,
            TileKind::Floor(FloorColor::Blue) => 3,
            TileKind::Floor(FloorColor::Purple) => 4,
            TileKind::Door { open: false } => 5,
            TileKind::Door { open: true } => 6,
            TileKind::Goal => 7,
        }
    }

    pub fn from_symbol(s: usize) -> Option<TileKind> {
        Some(match s {
            0 => TileKind::Wall,
            1 => TileKind::Floor(FloorColor::Red),
            2 => TileKind::Floor(FloorColor::Green),
            3 => TileKind::Floor(FloorColor::Blue),
            4 => TileKind::Floor(FloorColor::Purple),
            5 => TileKind::Door { open: false },
            6 => TileKind::Door { open: true },
            7 => TileKind::Goal,
            _ => return None,
        })
    }

    /// Whether the agent can stand on / move onto this tile. Closed doors
    /// count: moving into one opens it.
    pub fn traversable(self) -> bool {
        !matches!(self, TileKind::Wall)
    }

    /// Whether sight passes through this tile. Walls and closed doors are
    /// opaque.
    pub fn transparent(self) -> bool {
        match self {
            TileKind::Wall | TileKind::Door { open: false } => false,
            TileKind::Floor(_) | TileKind::Door { open: true } | TileKind::Goal => true,
        }
    }
}

/// Axis-aligned room interior plus its assigned color.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Room {
    /// North-west interior corner.
    pub x: i32,
    pub y: i32,
    /// Interior extent in tiles.
    pub width: i32,
    pub height: i32,
    pub color: FloorColor,
}

impl Room {
    pub fn contains(&self, x: i32, y: i32) -> bool {
        x >= self.x && x < self.x + self.width && y >= self.y && y < self.y + self.height
    }

    pub fn center(&self) -> (i32, i32) {
        (self.x + self.width / 2, self.y + self.height / 2)
    }
}

/// Ground-truth maze grid.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorldGrid {
    width: i32,
    height: i32,
    tiles: Vec<TileKind>,
    rooms: Vec<Room>,
    doors: Vec<(i32, i32)>,
    goal: (i32, i32),
}

impl WorldGrid {
    pub(crate) fn from_parts(
        width: i32,
        height: i32,
        tiles: Vec<TileKind>,
        rooms: Vec<Room>,
        mut doors: Vec<(i32, i32)>,
        goal: (i32, i32),
    ) -> WorldGrid {
        debug_assert_eq!(tiles.len(), (width * height) as usize);
        // Canonical row-major door order regardless of construction path.
        doors.sort_by_key(|&(x, y)| (y, x));
        WorldGrid {
            width,
            height,
            tiles,
            rooms,
            doors,
            goal,
        }
    }

    pub fn width(&self) -> i32 {
        self.width
    }

    pub fn height(&self) -> i32 {
        self.height
    }

    pub fn rooms(&self) -> &[Room] {
        &self.rooms
    }

    pub fn doors(&self) -> &[(i32, i32)] {
        &self.doors
    }

    pub fn goal(&self) -> (i32, i32) {
        self.goal
    }

    pub fn in_bounds(&self, x: i32, y: i32) -> bool {
        x >= 0 && x < self.width && y >= 0 && y < self.height
    }

    pub fn tile(&self, x: i32, y: i32) -> Option<TileKind> {
        if self.in_bounds(x, y) {
            Some(self.tiles[(y * self.width + x) as usize])
        } else {
            None
        }
    }

    fn set_tile(&mut self, x: i32, y: i32, kind: TileKind) {
        let w = self.width;
        self.tiles[(y * w + x) as usize] = kind;
    }

    /// All traversable tile coordinates, row-major.
    pub fn traversable_tiles(&self) -> impl Iterator<Item = (i32, i32)> + '_ {
        (0..self.height).flat_map(move |y| {
            (0..self.width).filter_map(move |x| {
                if self.tile(x, y).is_some_and(TileKind::traversable) {
                    Some((x, y))
                } else {
                    None
                }
            })
        })
    }
}

/// Agent pose on the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Pose {
    pub x: i32,
    pub y: i32,
    pub heading: Heading,
}

impl Pose {
    pub fn new(x: i32, y: i32, heading: Heading) -> Pose {
        Pose { x, y, heading }
    }
}

/// The three agent motions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Action {
    Forward,
    TurnLeft,
    TurnRight,
}

impl Action {
    pub const ALL: [Action; 3] = [Action::Forward, Action::TurnLeft, Action::TurnRight];

    pub fn letter(self) -> char {
        match self {
            Action::Forward => 'F',
            Action::TurnLeft => 'L',
            Action::TurnRight => 'R',
        }
    }

    pub fn from_letter(c: char) -> Option<Action> {
        match c {
            'F' => Some(Action::Forward),
            'L' => Some(Action::TurnLeft),
            'R' => Some(Action::TurnRight),
            _ => None,
        }
    }
}

/// Result of one environment step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepOutcome {
    pub new_pose: Pose,
    /// True iff the action was `Forward` and the pose did not change.
    pub collision: bool,
}

/// Advance the environment by one action.
///
/// Turns rotate in place. `Forward` moves one tile unless the front tile is a
/// wall or out of bounds (collision, pose unchanged). Moving into a closed
/// door opens it and steps onto it; door opening is the only world mutation.
pub fn step(world: &mut WorldGrid, pose: Pose, action: Action) -> StepOutcome {
    match action {
        Action::TurnLeft => StepOutcome {
            new_pose: Pose::new(pose.x, pose.y, pose.heading.turn_left()),
            collision: false,
        },
        Action::TurnRight => StepOutcome {
            new_pose: Pose::new(pose.x, pose.y, pose.heading.turn_right()),
            collision: false,
        },
        Action::Forward => {
            let (dx, dy) = pose.heading.delta();
            let (fx, fy) = (pose.x + dx, pose.y + dy);
            match world.tile(fx, fy) {
                Some(TileKind::Door { open: false }) => {
                    world.set_tile(fx, fy, TileKind::Door { open: true });
                    StepOutcome {
                        new_pose: Pose::new(fx, fy, pose.heading),
                        collision: false,
                    }
                }
                Some(kind) if kind.traversable() => StepOutcome {
                    new_pose: Pose::new(fx, fy, pose.heading),
                    collision: false,
                },
                _ => StepOutcome {
                    new_pose: pose,
                    collision: true,
                },
            }
        }
    }
}

/// One cell of an egocentric observation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ObsCell {
    Visible(TileKind),
    Hidden,
}

/// 7x7 egocentric observation window. The agent sits at row 6, column 3 and
/// faces toward row 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Observation {
    pub cells: [[ObsCell; crate::window::WINDOW]; crate::window::WINDOW],
}

impl Observation {
    /// Fully hidden window (useful for model-only updates and tests).
    pub fn all_hidden() -> Observation {
        Observation {
            cells: [[ObsCell::Hidden; crate::window::WINDOW]; crate::window::WINDOW],
        }
    }

    pub fn cell(&self, row: usize, col: usize) -> ObsCell {
        self.cells[row][col]
    }

    /// The tile the agent is standing on; always visible in real observations.
    pub fn own_tile(&self) -> Option<TileKind> {
        match self.cells[crate::window::AGENT_ROW][crate::window::AGENT_COL] {
            ObsCell::Visible(kind) => Some(kind),
            ObsCell::Hidden => None,
        }
    }

    pub fn visible_count(&self) -> usize {
        self.cells
            .iter()
            .flatten()
            .filter(|c| matches!(c, ObsCell::Visible(_)))
            .count()
    }
}
