//! Predicted (imagined) view windows rendered from internal models.
//!
//! Unlike a real [`Observation`](crate::gridworld::Observation), a model
//! render distinguishes cells the model has never learned (`Unknown`) from
//! cells occluded by what it believes is there (`Hidden`). Unknown cells are
//! treated as see-through during visibility propagation.

use serde::{Deserialize, Serialize};

use crate::gridworld::{ObsCell, Observation, TileKind};
use crate::window::{self, Sight, WINDOW};

/// One cell of a model-rendered view.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ViewCell {
    /// Predicted visible with a believed tile kind.
    Seen(TileKind),
    /// In view but the model has no belief about it.
    Unknown,
    /// Occluded by believed walls / closed doors.
    Hidden,
}

/// 7x7 window imagined by a model, same geometry as a real observation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictedView {
    pub cells: [[ViewCell; WINDOW]; WINDOW],
}

impl PredictedView {
    pub fn cell(&self, row: usize, col: usize) -> ViewCell {
        self.cells[row][col]
    }

    pub fn seen_count(&self) -> usize {
        self.cells
            .iter()
            .flatten()
            .filter(|c| matches!(c, ViewCell::Seen(_)))
            .count()
    }

    /// Fraction of cells visible in `truth` that this render gets wrong
    /// (different kind, unknown, or hidden). `None` when the ground-truth
    /// observation has no visible cells.
    pub fn disagreement_with(&self, truth: &Observation) -> Option<f64> {
        let mut compared = 0usize;
        let mut wrong = 0usize;
        for row in 0..WINDOW {
            for col in 0..WINDOW {
                if let ObsCell::Visible(kind) = truth.cell(row, col) {
                    compared += 1;
                    if self.cells[row][col] != ViewCell::Seen(kind) {
                        wrong += 1;
                    }
                }
            }
        }
        (compared > 0).then(|| wrong as f64 / compared as f64)
    }
}

/// Render a predicted view from a belief lookup.
///
/// `belief_at(row, col)` returns `Some(Some(kind))` for a believed tile,
/// `Some(None)` for a representable-but-unknown cell, and `None` for cells
/// outside the model's extent (rendered `Unknown`, treated see-through).
pub fn render<F>(belief_at: F) -> PredictedView
where
    F: Fn(usize, usize) -> Option<Option<TileKind>>,
{
    let vis = window::visibility(|row, col| {
        Some(match belief_at(row, col) {
            Some(Some(kind)) => {
                if kind.transparent() {
                    Sight::Transparent
                } else {
                    Sight::Opaque
                }
            }
            // Unknown and out-of-extent cells are optimistically see-through.
            Some(None) | None => Sight::Transparent,
        })
    });
    let mut cells = [[ViewCell::Hidden; WINDOW]; WINDOW];
    for (row, vis_row) in vis.iter().enumerate() {
        for (col, &v) in vis_row.iter().enumerate() {
            if v {
                cells[row][col] = match belief_at(row, col) {
                    Some(Some(kind)) => ViewCell::Seen(kind),
                    Some(None) | None => ViewCell::Unknown,
                };
            }
        }
    }
    PredictedView { cells }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridworld::FloorColor;

    #[test]
    fn empty_belief_renders_all_unknown() {
        let view = render(|_, _| Some(None));
        assert!(view
            .cells
            .iter()
            .flatten()
            .all(|c| matches!(c, ViewCell::Unknown)));
    }

    #[test]
    fn believed_wall_occludes() {
        // Wall one row ahead across the window.
        let view = render(|row, _| {
            Some(if row == 5 {
                Some(TileKind::Wall)
            } else {
                Some(TileKind::Floor(FloorColor::Red))
            })
        });
        assert_eq!(view.cell(5, 3), ViewCell::Seen(TileKind::Wall));
        for col in 0..WINDOW {
            for row in 0..5 {
                assert_eq!(view.cell(row, col), ViewCell::Hidden);
            }
        }
    }
}
