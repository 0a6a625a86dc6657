//! Evidence canvas for one place.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{PlacePose, Transform};
use crate::gridworld::{ObsCell, Observation, TileKind};
use crate::view::{self, PredictedView};
use crate::window::{self, Heading, WINDOW};

pub const DEFAULT_CANVAS_SIZE: usize = 17;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PlaceError {
    /// The observation footprint does not fit in the canvas: the place frame
    /// has drifted off-center and the caller must recenter or reset.
    #[error("observation cell at local ({x},{y}) falls outside the {size}x{size} canvas")]
    CanvasOverflow { x: i32, y: i32, size: usize },
    #[error("query pose ({x},{y}) is outside the canvas")]
    OutOfFrame { x: i32, y: i32 },
    #[error("recentering by ({dx},{dy}) would push evidence off the canvas")]
    RecenterOverflow { dx: i32, dy: i32 },
}

/// Per-cell evidence: an observation count per tile symbol plus the fuse
/// sequence number that last bumped each symbol (recency breaks count ties,
/// so doors that change state render with their latest observed state).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
struct CellEvidence {
    counts: [u32; TileKind::SYMBOLS],
    last_seq: [u32; TileKind::SYMBOLS],
}

impl Default for CellEvidence {
    fn default() -> CellEvidence {
        CellEvidence {
            counts: [0; TileKind::SYMBOLS],
            last_seq: [0; TileKind::SYMBOLS],
        }
    }
}

impl CellEvidence {
    fn total(&self) -> u32 {
        self.counts.iter().sum()
    }

    fn map_kind(&self) -> Option<TileKind> {
        let mut best: Option<(usize, u32, u32)> = None;
        for s in 0..TileKind::SYMBOLS {
            let (count, seq) = (self.counts[s], self.last_seq[s]);
            if count == 0 {
                continue;
            }
            let better = match best {
                None => true,
                Some((_, bc, bs)) => count > bc || (count == bc && seq > bs),
            };
            if better {
                best = Some((s, count, seq));
            }
        }
        best.map(|(s, _, _)| TileKind::from_symbol(s).unwrap())
    }
}

/// Result of comparing an observation against canvas evidence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MismatchScore {
    /// Fraction of compared cells that disagree, in `[0, 1]`. Zero when
    /// nothing was compared.
    pub value: f64,
    /// Number of visible observation cells that overlapped canvas evidence.
    pub compared_cells: usize,
}

impl MismatchScore {
    /// A score counts as evidence of a room change only when enough cells
    /// overlapped.
    pub fn is_defined(&self, min_overlap: usize) -> bool {
        self.compared_cells >= min_overlap
    }
}

/// MAP snapshot of a canvas.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlaceMap {
    size: usize,
    cells: Vec<Option<TileKind>>,
}

impl PlaceMap {
    pub fn size(&self) -> usize {
        self.size
    }

    fn half(&self) -> i32 {
        (self.size / 2) as i32
    }

    pub fn in_bounds(&self, x: i32, y: i32) -> bool {
        x.abs() <= self.half() && y.abs() <= self.half()
    }

    /// MAP tile at local coordinates; `None` when unknown or out of bounds.
    pub fn kind(&self, x: i32, y: i32) -> Option<TileKind> {
        if !self.in_bounds(x, y) {
            return None;
        }
        let h = self.half();
        self.cells[((y + h) as usize) * self.size + (x + h) as usize]
    }

    pub fn known_count(&self) -> usize {
        self.cells.iter().filter(|c| c.is_some()).count()
    }

    /// Local coordinates of every known cell, row-major.
    pub fn known_cells(&self) -> impl Iterator<Item = ((i32, i32), TileKind)> + '_ {
        let h = self.half();
        (-h..=h).flat_map(move |y| {
            (-h..=h).filter_map(move |x| self.kind(x, y).map(|k| ((x, y), k)))
        })
    }
}

/// Inclusive rectangle in local coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocalRect {
    pub x0: i32,
    pub y0: i32,
    pub x1: i32,
    pub y1: i32,
}

impl LocalRect {
    pub fn contains(&self, x: i32, y: i32) -> bool {
        x >= self.x0 && x <= self.x1 && y >= self.y0 && y <= self.y1
    }

    pub fn expanded(&self, by: i32) -> LocalRect {
        LocalRect {
            x0: self.x0 - by,
            y0: self.y0 - by,
            x1: self.x1 + by,
            y1: self.y1 + by,
        }
    }

    pub fn width(&self) -> i32 {
        self.x1 - self.x0 + 1
    }

    pub fn height(&self) -> i32 {
        self.y1 - self.y0 + 1
    }
}

/// An opening in the room's wall ring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoomExit {
    /// Floor tile on the wall ring where the aisle punches through.
    pub hole: (i32, i32),
    /// The door tile one step beyond the hole, once it has been observed.
    pub door: Option<(i32, i32)>,
    pub outward: Heading,
}

impl RoomExit {
    /// Representative cell for matching against traversal records: the door
    /// tile when known, otherwise its geometric position beyond the hole.
    pub fn door_cell(&self) -> (i32, i32) {
        self.door.unwrap_or_else(|| {
            let (dx, dy) = self.outward.delta();
            (self.hole.0 + dx, self.hole.1 + dy)
        })
    }
}

/// Detected wall rectangle of the room containing the frame origin.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoomBounds {
    /// Interior floor rectangle.
    pub interior: LocalRect,
    /// Wall ring around the interior (interior expanded by one).
    pub ring: LocalRect,
    pub exits: Vec<RoomExit>,
}

/// Restrict an observation to the room the agent is in: visibility is
/// re-propagated with every door treated as opaque, so tiles glimpsed
/// through an open doorway do not leak into this place's evidence. The door
/// tiles themselves stay visible (they are the room's boundary).
pub fn mask_beyond_doors(obs: &Observation) -> Observation {
    let vis = window::visibility(|row, col| match obs.cell(row, col) {
        ObsCell::Hidden => None,
        ObsCell::Visible(kind) => Some(match kind {
            TileKind::Floor(_) | TileKind::Goal => crate::window::Sight::Transparent,
            TileKind::Wall | TileKind::Door { .. } => crate::window::Sight::Opaque,
        }),
    });
    let mut out = Observation::all_hidden();
    for (row, vis_row) in vis.iter().enumerate() {
        for (col, &v) in vis_row.iter().enumerate() {
            if v {
                out.cells[row][col] = obs.cells[row][col];
            }
        }
    }
    out
}

/// Bounding box of the visible cells of an observation taken at `pose`, in
/// the pose's frame coordinates.
pub fn obs_footprint_bbox(pose: PlacePose, obs: &Observation) -> Option<LocalRect> {
    let mut bbox: Option<LocalRect> = None;
    for ((x, y), _) in PlaceCanvas::visible_footprint(pose, obs) {
        bbox = Some(match bbox {
            None => LocalRect { x0: x, y0: y, x1: x, y1: y },
            Some(b) => LocalRect {
                x0: b.x0.min(x),
                y0: b.y0.min(y),
                x1: b.x1.max(x),
                y1: b.y1.max(y),
            },
        });
    }
    bbox
}

/// Bounded evidence grid for one place. Local coordinate (0,0) maps to the
/// center cell.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlaceCanvas {
    size: usize,
    cells: Vec<CellEvidence>,
    observation_count: u32,
    fuse_seq: u32,
}

impl PlaceCanvas {
    /// Fresh, fully unknown canvas.
    pub fn new(size: usize) -> PlaceCanvas {
        assert!(size >= 9 && size % 2 == 1, "canvas size must be odd and >= 9");
        PlaceCanvas {
            size,
            cells: vec![CellEvidence::default(); size * size],
            observation_count: 0,
            fuse_seq: 0,
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn observation_count(&self) -> u32 {
        self.observation_count
    }

    fn half(&self) -> i32 {
        (self.size / 2) as i32
    }

    pub fn in_bounds(&self, x: i32, y: i32) -> bool {
        x.abs() <= self.half() && y.abs() <= self.half()
    }

    fn index(&self, x: i32, y: i32) -> Option<usize> {
        if self.in_bounds(x, y) {
            let h = self.half();
            Some(((y + h) as usize) * self.size + (x + h) as usize)
        } else {
            None
        }
    }

    /// Total evidence count at a local cell (0 when out of bounds).
    pub fn evidence_total(&self, x: i32, y: i32) -> u32 {
        self.index(x, y).map_or(0, |i| self.cells[i].total())
    }

    /// Evidence count for one tile kind at a local cell.
    pub fn evidence_for(&self, x: i32, y: i32, kind: TileKind) -> u32 {
        self.index(x, y)
            .map_or(0, |i| self.cells[i].counts[kind.symbol()])
    }

    /// MAP tile at a local cell; `None` when unknown or out of bounds.
    pub fn map_kind(&self, x: i32, y: i32) -> Option<TileKind> {
        self.index(x, y).and_then(|i| self.cells[i].map_kind())
    }

    pub(crate) fn raw_evidence(
        &self,
    ) -> impl Iterator<Item = ((i32, i32), &[u32; TileKind::SYMBOLS], &[u32; TileKind::SYMBOLS])>
    {
        let h = self.half();
        self.cells.iter().enumerate().filter_map(move |(i, c)| {
            if c.total() == 0 {
                return None;
            }
            let x = (i % self.size) as i32 - h;
            let y = (i / self.size) as i32 - h;
            Some(((x, y), &c.counts, &c.last_seq))
        })
    }

    pub(crate) fn set_raw_evidence(
        &mut self,
        cell: (i32, i32),
        counts: [u32; TileKind::SYMBOLS],
        last_seq: [u32; TileKind::SYMBOLS],
    ) {
        let i = self.index(cell.0, cell.1).expect("cell in canvas");
        self.cells[i] = CellEvidence { counts, last_seq };
    }

    pub(crate) fn set_counters(&mut self, observation_count: u32, fuse_seq: u32) {
        self.observation_count = observation_count;
        self.fuse_seq = fuse_seq;
    }

    pub(crate) fn counters(&self) -> (u32, u32) {
        (self.observation_count, self.fuse_seq)
    }

    /// Local coordinates of each visible cell of an observation taken at
    /// `pose` in this frame.
    fn visible_footprint(pose: PlacePose, obs: &Observation) -> Vec<((i32, i32), TileKind)> {
        let mut out = Vec::with_capacity(WINDOW * WINDOW);
        for row in 0..WINDOW {
            for col in 0..WINDOW {
                if let ObsCell::Visible(kind) = obs.cell(row, col) {
                    out.push((
                        window::cell_to_grid(pose.x, pose.y, pose.heading, row, col),
                        kind,
                    ));
                }
            }
        }
        out
    }

    /// Fuse one observation taken at `pose`. Each visible cell increments the
    /// evidence count of its tile kind; hidden cells contribute nothing.
    ///
    /// Fails without mutating anything when any visible cell falls outside
    /// the canvas.
    pub fn fuse(&mut self, pose: PlacePose, obs: &Observation) -> Result<(), PlaceError> {
        let footprint = Self::visible_footprint(pose, obs);
        for &((x, y), _) in &footprint {
            if !self.in_bounds(x, y) {
                return Err(PlaceError::CanvasOverflow {
                    x,
                    y,
                    size: self.size,
                });
            }
        }
        self.fuse_seq += 1;
        let seq = self.fuse_seq;
        for ((x, y), kind) in footprint {
            let i = self.index(x, y).unwrap();
            self.cells[i].counts[kind.symbol()] += 1;
            self.cells[i].last_seq[kind.symbol()] = seq;
        }
        self.observation_count += 1;
        Ok(())
    }

    /// Fuse only the visible cells that land inside the canvas, silently
    /// dropping the rest. Recovery path for observations straddling the
    /// canvas edge when no recentering can make them fit.
    pub fn fuse_clipped(&mut self, pose: PlacePose, obs: &Observation) -> usize {
        let footprint = Self::visible_footprint(pose, obs);
        self.fuse_seq += 1;
        let seq = self.fuse_seq;
        let mut fused = 0;
        for ((x, y), kind) in footprint {
            if let Some(i) = self.index(x, y) {
                self.cells[i].counts[kind.symbol()] += 1;
                self.cells[i].last_seq[kind.symbol()] = seq;
                fused += 1;
            }
        }
        self.observation_count += 1;
        fused
    }

    /// Would `fuse` succeed at this pose?
    pub fn fits(&self, pose: PlacePose, obs: &Observation) -> bool {
        Self::visible_footprint(pose, obs)
            .iter()
            .all(|&((x, y), _)| self.in_bounds(x, y))
    }

    /// Render the predicted 7x7 view at a pose from the canvas MAP, using the
    /// same occlusion rule as the simulator. Unknown cells are see-through
    /// and render as unknown.
    pub fn query(&self, pose: PlacePose) -> Result<PredictedView, PlaceError> {
        if !self.in_bounds(pose.x, pose.y) {
            return Err(PlaceError::OutOfFrame {
                x: pose.x,
                y: pose.y,
            });
        }
        Ok(view::render(|row, col| {
            let (x, y) = window::cell_to_grid(pose.x, pose.y, pose.heading, row, col);
            if self.in_bounds(x, y) {
                Some(self.map_kind(x, y))
            } else {
                None
            }
        }))
    }

    /// Compare an observation against existing evidence: the fraction of
    /// visible cells, among those overlapping evidence-bearing canvas cells,
    /// whose kind disagrees with the canvas MAP.
    pub fn mismatch(&self, pose: PlacePose, obs: &Observation) -> MismatchScore {
        let mut compared = 0usize;
        let mut disagree = 0usize;
        for ((x, y), kind) in Self::visible_footprint(pose, obs) {
            if self.evidence_total(x, y) > 0 {
                compared += 1;
                if self.map_kind(x, y) != Some(kind) {
                    disagree += 1;
                }
            }
        }
        MismatchScore {
            value: if compared == 0 {
                0.0
            } else {
                disagree as f64 / compared as f64
            },
            compared_cells: compared,
        }
    }

    /// Full MAP estimate of the place.
    pub fn complete(&self) -> PlaceMap {
        PlaceMap {
            size: self.size,
            cells: self.cells.iter().map(CellEvidence::map_kind).collect(),
        }
    }

    /// Bounding box of evidence-bearing cells, in local coordinates.
    pub fn evidence_bbox(&self) -> Option<LocalRect> {
        let mut bbox: Option<LocalRect> = None;
        for ((x, y), _, _) in self.raw_evidence() {
            bbox = Some(match bbox {
                None => LocalRect { x0: x, y0: y, x1: x, y1: y },
                Some(b) => LocalRect {
                    x0: b.x0.min(x),
                    y0: b.y0.min(y),
                    x1: b.x1.max(x),
                    y1: b.y1.max(y),
                },
            });
        }
        bbox
    }

    /// Translate all evidence by `delta`: content previously at local `p`
    /// moves to `p + delta`. Callers must shift their local poses by the same
    /// delta afterwards.
    pub fn recenter(&mut self, delta: (i32, i32)) -> Result<(), PlaceError> {
        if delta == (0, 0) {
            return Ok(());
        }
        if let Some(b) = self.evidence_bbox() {
            let shifted = LocalRect {
                x0: b.x0 + delta.0,
                y0: b.y0 + delta.1,
                x1: b.x1 + delta.0,
                y1: b.y1 + delta.1,
            };
            let h = self.half();
            if shifted.x0 < -h || shifted.y0 < -h || shifted.x1 > h || shifted.y1 > h {
                return Err(PlaceError::RecenterOverflow {
                    dx: delta.0,
                    dy: delta.1,
                });
            }
        }
        let mut fresh = vec![CellEvidence::default(); self.size * self.size];
        let h = self.half();
        for (i, cell) in self.cells.iter().enumerate() {
            if cell.total() == 0 {
                continue;
            }
            let x = (i % self.size) as i32 - h + delta.0;
            let y = (i / self.size) as i32 - h + delta.1;
            let j = ((y + h) as usize) * self.size + (x + h) as usize;
            fresh[j] = *cell;
        }
        self.cells = fresh;
        Ok(())
    }

    /// Pour another canvas's evidence into this one through a rigid
    /// alignment mapping `other`'s frame into this frame. Cells that would
    /// land outside are dropped (the target canvas already carries the
    /// authoritative geometry).
    pub fn absorb(&mut self, other: &PlaceCanvas, transform: &Transform) {
        self.fuse_seq += 1;
        let seq = self.fuse_seq;
        for ((x, y), counts, _) in other.raw_evidence() {
            let (tx, ty) = transform.apply_point((x, y));
            if let Some(i) = self.index(tx, ty) {
                for s in 0..TileKind::SYMBOLS {
                    if counts[s] > 0 {
                        self.cells[i].counts[s] += counts[s];
                        self.cells[i].last_seq[s] = seq;
                    }
                }
            }
        }
        self.observation_count += other.observation_count;
    }

    /// Detect the wall rectangle of the room around the frame origin.
    ///
    /// Grows a floor rectangle from the origin, then validates that the ring
    /// around it is fully observed wall except for exits. Returns `None`
    /// until the walls have been seen.
    pub fn room_bounds(&self) -> Option<RoomBounds> {
        let map = self.complete();
        let is_interior = |x: i32, y: i32| {
            matches!(
                map.kind(x, y),
                Some(TileKind::Floor(_)) | Some(TileKind::Goal)
            )
        };
        if !is_interior(0, 0) {
            return None;
        }

        let mut rect = LocalRect { x0: 0, y0: 0, x1: 0, y1: 0 };
        loop {
            let mut grew = false;
            if (rect.y0..=rect.y1).all(|y| is_interior(rect.x1 + 1, y)) {
                rect.x1 += 1;
                grew = true;
            }
            if (rect.y0..=rect.y1).all(|y| is_interior(rect.x0 - 1, y)) {
                rect.x0 -= 1;
                grew = true;
            }
            if (rect.x0..=rect.x1).all(|x| is_interior(x, rect.y1 + 1)) {
                rect.y1 += 1;
                grew = true;
            }
            if (rect.x0..=rect.x1).all(|x| is_interior(x, rect.y0 - 1)) {
                rect.y0 -= 1;
                grew = true;
            }
            if !grew {
                break;
            }
        }
        if rect.width() < 3 || rect.height() < 3 {
            return None;
        }

        let ring = rect.expanded(1);
        let mut exits = Vec::new();
        for y in ring.y0..=ring.y1 {
            for x in ring.x0..=ring.x1 {
                if rect.contains(x, y) {
                    continue;
                }
                let corner = (x == ring.x0 || x == ring.x1) && (y == ring.y0 || y == ring.y1);
                let outward = if x == ring.x0 {
                    Heading::West
                } else if x == ring.x1 {
                    Heading::East
                } else if y == ring.y0 {
                    Heading::North
                } else {
                    Heading::South
                };
                match map.kind(x, y) {
                    Some(TileKind::Wall) => {}
                    Some(TileKind::Floor(_)) if !corner => {
                        let (dx, dy) = outward.delta();
                        let door = match map.kind(x + dx, y + dy) {
                            Some(TileKind::Door { .. }) => Some((x + dx, y + dy)),
                            _ => None,
                        };
                        exits.push(RoomExit {
                            hole: (x, y),
                            door,
                            outward,
                        });
                    }
                    Some(TileKind::Door { .. }) if !corner => {
                        exits.push(RoomExit {
                            hole: (x, y),
                            door: Some((x, y)),
                            outward,
                        });
                    }
                    // Unknown or structurally wrong ring cell: the walls have
                    // not been observed well enough to commit to bounds.
                    _ => return None,
                }
            }
        }
        Some(RoomBounds {
            interior: rect,
            ring,
            exits,
        })
    }
}

impl Default for PlaceCanvas {
    fn default() -> PlaceCanvas {
        PlaceCanvas::new(DEFAULT_CANVAS_SIZE)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridworld::{generate_maze, observe, MazeConfig, Pose, WorldGrid};
    use crate::view::ViewCell;

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

    /// Local frame anchored at the room center facing north: local coords are
    /// world coords minus the anchor.
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

    fn fuse_pose_sweep(world: &WorldGrid, canvas: &mut PlaceCanvas, anchor: Pose) {
        for (x, y) in world.traversable_tiles().collect::<Vec<_>>() {
            for heading in Heading::ALL {
                let pose = Pose::new(x, y, heading);
                canvas.fuse(local(pose, anchor), &observe(world, pose)).unwrap();
            }
        }
    }

    #[test]
    fn fresh_canvas_is_all_unknown() {
        let canvas = PlaceCanvas::default();
        assert_eq!(canvas.observation_count(), 0);
        let view = canvas.query(PlacePose::origin()).unwrap();
        assert!(view
            .cells
            .iter()
            .flatten()
            .all(|c| matches!(c, ViewCell::Unknown)));
        let score = canvas.mismatch(PlacePose::origin(), &Observation::all_hidden());
        assert_eq!(score.compared_cells, 0);
        assert!(!score.is_defined(5));
        assert!(canvas.room_bounds().is_none());
        assert_eq!(canvas.complete().known_count(), 0);
    }

    #[test]
    fn fuse_then_query_agrees_on_every_visible_cell() {
        let world = room_world(5, 2);
        let anchor = anchor_of(&world);
        let mut canvas = PlaceCanvas::default();
        let obs = observe(&world, anchor);
        canvas.fuse(PlacePose::origin(), &obs).unwrap();
        let view = canvas.query(PlacePose::origin()).unwrap();
        for r in 0..WINDOW {
            for c in 0..WINDOW {
                if let ObsCell::Visible(kind) = obs.cell(r, c) {
                    assert_eq!(view.cell(r, c), ViewCell::Seen(kind), "({r},{c})");
                }
            }
        }
        assert_eq!(canvas.mismatch(PlacePose::origin(), &obs).value, 0.0);
    }

    #[test]
    fn conflicting_door_evidence_resolves_to_most_recent() {
        let mut canvas = PlaceCanvas::default();
        let mut obs_closed = Observation::all_hidden();
        obs_closed.cells[window::AGENT_ROW - 1][window::AGENT_COL] =
            ObsCell::Visible(TileKind::Door { open: false });
        obs_closed.cells[window::AGENT_ROW][window::AGENT_COL] =
            ObsCell::Visible(TileKind::Floor(crate::gridworld::FloorColor::Red));
        let mut obs_open = obs_closed;
        obs_open.cells[window::AGENT_ROW - 1][window::AGENT_COL] =
            ObsCell::Visible(TileKind::Door { open: true });

        canvas.fuse(PlacePose::origin(), &obs_closed).unwrap();
        canvas.fuse(PlacePose::origin(), &obs_open).unwrap();
        // Counts tie 1-1; the later fuse wins.
        assert_eq!(canvas.map_kind(0, -1), Some(TileKind::Door { open: true }));
        canvas.fuse(PlacePose::origin(), &obs_closed).unwrap();
        // 2-1 majority for closed.
        assert_eq!(canvas.map_kind(0, -1), Some(TileKind::Door { open: false }));
    }

    #[test]
    fn full_sweep_reconstructs_room_exactly() {
        for (size, seed) in [(4, 1), (5, 2), (7, 3), (8, 4)] {
            let world = room_world(size, seed);
            let anchor = anchor_of(&world);
            let mut canvas = PlaceCanvas::default();
            fuse_pose_sweep(&world, &mut canvas, anchor);
            let map = canvas.complete();
            let mut checked = 0;
            for ((lx, ly), kind) in map.known_cells() {
                let (wx, wy) = (lx + anchor.x, ly + anchor.y);
                assert_eq!(world.tile(wx, wy), Some(kind), "local ({lx},{ly})");
                checked += 1;
            }
            // Everything inside the wall ring must be known.
            let room = world.rooms()[0];
            let expected = ((room.width + 2) * (room.height + 2)) as usize;
            assert_eq!(checked, expected, "size {size}");
        }
    }

    /// Entry-walk scan: the poses an agent naturally fuses right after
    /// entering a room from the south — look in, then sweep left and right
    /// from a tile further in.
    pub(crate) fn entry_scan_poses(room: &crate::gridworld::Room, fuses: usize) -> Vec<Pose> {
        let entry_x = room.x + room.width / 2;
        let entry_y = room.y + room.height - 1;
        let mid_y = room.y + room.height / 2;
        let mut poses = vec![
            Pose::new(entry_x, entry_y, Heading::North),
            Pose::new(entry_x, mid_y, Heading::West),
            Pose::new(entry_x, mid_y, Heading::East),
            Pose::new(entry_x, room.y, Heading::South),
            Pose::new(entry_x, mid_y, Heading::North),
            Pose::new(room.x, mid_y, Heading::South),
        ];
        poses.truncate(fuses);
        poses
    }

    /// Mean disagreement of queries at unvisited interior poses against
    /// ground truth, after fusing an entry scan of `fuses` observations.
    pub(crate) fn unvisited_query_disagreement(world: &WorldGrid, fuses: usize) -> f64 {
        let anchor = anchor_of(world);
        let room = world.rooms()[0];
        let mut canvas = PlaceCanvas::default();
        let scan = entry_scan_poses(&room, fuses);
        for p in &scan {
            canvas.fuse(local(*p, anchor), &observe(world, *p)).unwrap();
        }
        let mut total = 0.0;
        let mut count = 0usize;
        for y in room.y..room.y + room.height {
            for x in room.x..room.x + room.width {
                for heading in Heading::ALL {
                    let pose = Pose::new(x, y, heading);
                    if scan.contains(&pose) {
                        continue;
                    }
                    let view = canvas.query(local(pose, anchor)).unwrap();
                    let truth = observe(world, pose);
                    if let Some(d) = view.disagreement_with(&truth) {
                        total += d;
                        count += 1;
                    }
                }
            }
        }
        total / count as f64
    }

    #[test]
    fn query_from_unvisited_poses_matches_ground_truth() {
        // Sizes inside the generator's default range converge in 3 fuses.
        for (size, seed) in [(4, 8), (5, 8), (6, 8), (7, 8)] {
            let world = room_world(size, seed);
            let mean = unvisited_query_disagreement(&world, 3);
            assert!(
                mean < 0.2,
                "size {size}: mean disagreement {mean} after 3 fuses"
            );
        }
        // An 8-wide room needs more observations but no structural change.
        let world = room_world(8, 8);
        let mean = unvisited_query_disagreement(&world, 5);
        assert!(mean < 0.2, "8-wide: mean disagreement {mean} after 5 fuses");
    }

    #[test]
    fn mismatch_flags_color_disagreement() {
        let world = room_world(5, 2);
        let anchor = anchor_of(&world);
        let own_color = world.rooms()[0].color;
        let (other_world, other_anchor) = (0..30)
            .map(|s| room_world(5, s))
            .find(|w| w.rooms()[0].color != own_color)
            .map(|w| {
                let a = anchor_of(&w);
                (w, a)
            })
            .unwrap();

        let mut canvas = PlaceCanvas::default();
        fuse_pose_sweep(&world, &mut canvas, anchor);
        let probe = observe(&other_world, other_anchor);
        let score = canvas.mismatch(PlacePose::origin(), &probe);
        assert!(score.is_defined(5));
        // Every floor cell disagrees (different color); walls agree where the
        // room shapes coincide.
        assert!(score.value > 0.3, "got {}", score.value);
    }

    #[test]
    fn unknown_count_decreases_with_informative_fuses() {
        let world = room_world(6, 8);
        let anchor = anchor_of(&world);
        let mut canvas = PlaceCanvas::default();
        let room = world.rooms()[0];
        let mut unknown_before = canvas.size() * canvas.size() - canvas.complete().known_count();
        for i in 0..3 {
            let p = Pose::new(room.x + i, room.y + room.height - 1, Heading::North);
            canvas.fuse(local(p, anchor), &observe(&world, p)).unwrap();
            let unknown_now = canvas.size() * canvas.size() - canvas.complete().known_count();
            assert!(unknown_now < unknown_before, "fuse {i} added nothing");
            unknown_before = unknown_now;
        }
    }

    #[test]
    fn fuse_outside_canvas_overflows_without_mutation() {
        let world = room_world(5, 2);
        let anchor = anchor_of(&world);
        let mut canvas = PlaceCanvas::default();
        let before = canvas.clone();
        // A pose far outside the canvas range.
        let far = PlacePose::new(20, 0, Heading::North);
        let err = canvas.fuse(far, &observe(&world, anchor)).unwrap_err();
        assert!(matches!(err, PlaceError::CanvasOverflow { .. }));
        assert_eq!(canvas, before);
    }

    #[test]
    fn query_outside_canvas_is_out_of_frame() {
        let canvas = PlaceCanvas::default();
        let err = canvas.query(PlacePose::new(99, 0, Heading::North)).unwrap_err();
        assert!(matches!(err, PlaceError::OutOfFrame { .. }));
    }

    #[test]
    fn room_bounds_finds_ring_and_exits() {
        let cfg = MazeConfig {
            room_rows: 1,
            room_cols: 3,
            min_room: 5,
            max_room: 5,
            ..MazeConfig::default()
        };
        let world = generate_maze(&cfg, 6).unwrap();
        // Middle room has two exits (east and west).
        let room = world.rooms()[1];
        let anchor = Pose::new(room.center().0, room.center().1, Heading::North);
        let mut canvas = PlaceCanvas::default();
        for y in room.y..room.y + room.height {
            for x in room.x..room.x + room.width {
                for heading in Heading::ALL {
                    let p = Pose::new(x, y, heading);
                    canvas.fuse(local(p, anchor), &observe(&world, p)).unwrap();
                }
            }
        }
        let bounds = canvas.room_bounds().expect("fully observed room");
        assert_eq!(bounds.interior.width(), 5);
        assert_eq!(bounds.interior.height(), 5);
        assert_eq!(bounds.exits.len(), 2);
        let outward: Vec<Heading> = bounds.exits.iter().map(|e| e.outward).collect();
        assert!(outward.contains(&Heading::East));
        assert!(outward.contains(&Heading::West));
        for exit in &bounds.exits {
            assert!(exit.door.is_some(), "door tile observed through the hole");
        }
    }

    #[test]
    fn partial_walls_give_no_bounds() {
        let world = room_world(5, 2);
        let anchor = anchor_of(&world);
        let mut canvas = PlaceCanvas::default();
        // One observation from the center facing north sees the north wall
        // but not the south one.
        canvas
            .fuse(PlacePose::origin(), &observe(&world, anchor))
            .unwrap();
        assert!(canvas.room_bounds().is_none());
    }

    #[test]
    fn recenter_shifts_evidence_and_fails_on_overflow() {
        let world = room_world(5, 2);
        let anchor = anchor_of(&world);
        let mut canvas = PlaceCanvas::default();
        fuse_pose_sweep(&world, &mut canvas, anchor);
        let map_before = canvas.complete();
        canvas.recenter((2, -1)).unwrap();
        let map_after = canvas.complete();
        for ((x, y), kind) in map_before.known_cells() {
            assert_eq!(map_after.kind(x + 2, y - 1), Some(kind));
        }
        // Shifting the whole room off the canvas must fail.
        assert!(canvas.recenter((15, 0)).is_err());
    }

    #[test]
    fn absorb_merges_through_transform() {
        let world = room_world(5, 2);
        let anchor = anchor_of(&world);
        let mut source = PlaceCanvas::default();
        fuse_pose_sweep(&world, &mut source, anchor);

        let mut target = PlaceCanvas::default();
        let t = Transform::new(1, 3, 2);
        target.absorb(&source, &t);
        for ((x, y), kind) in source.complete().known_cells() {
            let (tx, ty) = t.apply_point((x, y));
            if target.in_bounds(tx, ty) {
                assert_eq!(target.complete().kind(tx, ty), Some(kind));
            }
        }
    }
}
