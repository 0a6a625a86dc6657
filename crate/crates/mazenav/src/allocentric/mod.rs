//! Allocentric place model (middle timescale).
//!
//! A place is one room, represented as a bounded canvas of per-tile evidence
//! counts accumulated by fusing (pose, observation) pairs expressed in the
//! place's local frame. The canvas renders predicted views at arbitrary
//! poses, scores how badly a live observation disagrees with it, and exposes
//! the room's wall rectangle and exits once they have been seen.
//!
//! Entering a room with known places on record is a localization problem:
//! the [`hypothesis`] submodule maintains a pruned population of candidate
//! alignments against known canvases plus a new-place alternative.

mod canvas;
mod hypothesis;

pub use canvas::{
    mask_beyond_doors, obs_footprint_bbox, LocalRect, MismatchScore, PlaceCanvas, PlaceError,
    PlaceMap, RoomBounds, RoomExit,
};
pub use hypothesis::{
    hypo_decide, hypo_spawn, hypo_update, Decision, FlatPosePrior, HypoParams, HypoTarget,
    Hypothesis, HypothesisSet, PosePrior, SpawnContext,
};

use serde::{Deserialize, Serialize};

use crate::window::{rot_cw, Heading};

/// Identifier of a place / experience node in the cognitive map.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub struct PlaceId(pub u32);

impl std::fmt::Display for PlaceId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Pose in a place's local frame. The frame is anchored where the place was
/// created: that pose is the origin, facing local north.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PlacePose {
    pub x: i32,
    pub y: i32,
    pub heading: Heading,
}

impl PlacePose {
    pub fn new(x: i32, y: i32, heading: Heading) -> PlacePose {
        PlacePose { x, y, heading }
    }

    pub fn origin() -> PlacePose {
        PlacePose::new(0, 0, Heading::North)
    }

    pub fn position(self) -> (i32, i32) {
        (self.x, self.y)
    }

    /// Integrate one action in this frame (exact discrete odometry).
    pub fn advanced(self, action: crate::gridworld::Action, collision: bool) -> PlacePose {
        use crate::gridworld::Action;
        match action {
            Action::TurnLeft => PlacePose::new(self.x, self.y, self.heading.turn_left()),
            Action::TurnRight => PlacePose::new(self.x, self.y, self.heading.turn_right()),
            Action::Forward if collision => self,
            Action::Forward => {
                let (dx, dy) = self.heading.delta();
                PlacePose::new(self.x + dx, self.y + dy, self.heading)
            }
        }
    }
}

/// Rigid alignment between two local frames: a quarter-turn rotation followed
/// by a translation. Maps source-frame coordinates into target-frame
/// coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Transform {
    /// Quarter turns clockwise.
    pub rot: u8,
    pub dx: i32,
    pub dy: i32,
}

impl Transform {
    pub fn identity() -> Transform {
        Transform { rot: 0, dx: 0, dy: 0 }
    }

    pub fn new(rot: u8, dx: i32, dy: i32) -> Transform {
        Transform { rot: rot % 4, dx, dy }
    }

    pub fn apply_point(&self, p: (i32, i32)) -> (i32, i32) {
        let (x, y) = rot_cw(p, self.rot);
        (x + self.dx, y + self.dy)
    }

    pub fn apply_pose(&self, p: PlacePose) -> PlacePose {
        let (x, y) = self.apply_point((p.x, p.y));
        PlacePose::new(x, y, p.heading.rotate_cw(self.rot))
    }

    /// `other` applied after `self`.
    pub fn then(&self, other: &Transform) -> Transform {
        let (tx, ty) = rot_cw((self.dx, self.dy), other.rot);
        Transform::new(self.rot + other.rot, tx + other.dx, ty + other.dy)
    }

    pub fn inverse(&self) -> Transform {
        let inv_rot = (4 - self.rot) % 4;
        let (tx, ty) = rot_cw((self.dx, self.dy), inv_rot);
        Transform::new(inv_rot, -tx, -ty)
    }

    /// Shift the source frame's coordinates by `delta` (used when a canvas is
    /// recentered): the transform must subtract it back out.
    pub fn source_shifted(&self, delta: (i32, i32)) -> Transform {
        let (sx, sy) = rot_cw(delta, self.rot);
        Transform::new(self.rot, self.dx - sx, self.dy - sy)
    }
}
