//! Deterministic SVG rendering of mazes, trajectories, and place maps.

use std::fmt::Write as _;

use crate::allocentric::PlaceCanvas;
use crate::cogmap::CognitiveGraph;
use crate::gridworld::{FloorColor, TileKind, WorldGrid};

use super::episode::EpisodeLog;

const TILE: i32 = 16;

fn fill_of(kind: TileKind) -> &'static str {
    match kind {
        TileKind::Wall => "#3a3a3a",
        TileKind::Floor(FloorColor::Red) => "#d95d53",
        TileKind::Floor(FloorColor::Green) => "#5cab5c",
        TileKind::Floor(FloorColor::Blue) => "#5b83c9",
        TileKind::Floor(FloorColor::Purple) => "#9a6bbf",
        TileKind::Door { open: false } => "#8a5a2b",
        TileKind::Door { open: true } => "#c9a063",
        TileKind::Goal => "#ffffff",
    }
}

fn tile_rect(out: &mut String, x: i32, y: i32, px: i32, py: i32, kind: TileKind) {
    let _ = (x, y);
    writeln!(
        out,
        r##"<rect x="{px}" y="{py}" width="{TILE}" height="{TILE}" fill="{}"/>"##,
        fill_of(kind)
    )
    .unwrap();
}

/// Render the maze, optionally the episode trajectory, and optionally the
/// MAP insets of every place in a cognitive map. Output is byte-stable for
/// identical inputs.
pub fn render_svg(
    world: &WorldGrid,
    log: Option<&EpisodeLog>,
    map: Option<&CognitiveGraph>,
) -> String {
    let maze_w = world.width() * TILE;
    let maze_h = world.height() * TILE;

    // Place insets lay out in a column right of the maze.
    let inset_scale = 4;
    let inset_pad = 8;
    let insets: Vec<(u32, &PlaceCanvas)> = map
        .map(|g| g.nodes().map(|n| (n.id.0, &n.canvas)).collect())
        .unwrap_or_default();
    let inset_w = insets
        .first()
        .map(|(_, c)| c.size() as i32 * inset_scale + inset_pad)
        .unwrap_or(0);
    let inset_h_total: i32 = insets
        .iter()
        .map(|(_, c)| c.size() as i32 * inset_scale + inset_pad + 12)
        .sum();

    let width = maze_w + inset_w + if inset_w > 0 { inset_pad } else { 0 };
    let height = maze_h.max(inset_h_total);

    let mut out = String::new();
    writeln!(
        out,
        r##"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    )
    .unwrap();
    writeln!(out, r##"<rect width="{width}" height="{height}" fill="#1e1e1e"/>"##).unwrap();

    for y in 0..world.height() {
        for x in 0..world.width() {
            tile_rect(&mut out, x, y, x * TILE, y * TILE, world.tile(x, y).unwrap());
        }
    }

    if let Some(log) = log {
        if !log.steps.is_empty() {
            let points: Vec<String> = log
                .steps
                .iter()
                .map(|r| {
                    format!(
                        "{},{}",
                        r.pose.x * TILE + TILE / 2,
                        r.pose.y * TILE + TILE / 2
                    )
                })
                .collect();
            writeln!(
                out,
                r##"<polyline points="{}" fill="none" stroke="#f0e68c" stroke-width="2" stroke-opacity="0.8"/>"##,
                points.join(" ")
            )
            .unwrap();
            // Start marker: triangle pointing along the start heading.
            let s = log.start;
            let cx = s.x * TILE + TILE / 2;
            let cy = s.y * TILE + TILE / 2;
            let (dx, dy) = s.heading.delta();
            let tip = (cx + dx * 6, cy + dy * 6);
            let left = (cx - dy * 5 - dx * 4, cy + dx * 5 - dy * 4);
            let right = (cx + dy * 5 - dx * 4, cy - dx * 5 - dy * 4);
            writeln!(
                out,
                r##"<polygon points="{},{} {},{} {},{}" fill="#e33"/>"##,
                tip.0, tip.1, left.0, left.1, right.0, right.1
            )
            .unwrap();
        }
    }

    let mut oy = 0;
    for (id, canvas) in insets {
        let ox = maze_w + inset_pad;
        writeln!(
            out,
            r##"<text x="{ox}" y="{}" fill="#ddd" font-size="10" font-family="monospace">place {id}</text>"##,
            oy + 10
        )
        .unwrap();
        let top = oy + 14;
        let half = (canvas.size() / 2) as i32;
        let map = canvas.complete();
        for y in -half..=half {
            for x in -half..=half {
                let fill = match map.kind(x, y) {
                    Some(kind) => fill_of(kind),
                    None => "#262626",
                };
                writeln!(
                    out,
                    r##"<rect x="{}" y="{}" width="{inset_scale}" height="{inset_scale}" fill="{fill}"/>"##,
                    ox + (x + half) * inset_scale,
                    top + (y + half) * inset_scale,
                )
                .unwrap();
            }
        }
        oy = top + canvas.size() as i32 * inset_scale + inset_pad;
    }

    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridworld::{generate_maze, MazeConfig};

    #[test]
    fn map_only_render_is_stable_and_wellformed() {
        let world = generate_maze(&MazeConfig::default(), 7).unwrap();
        let a = render_svg(&world, None, None);
        let b = render_svg(&world, None, None);
        assert_eq!(a, b);
        assert!(a.starts_with("<svg"));
        assert!(a.ends_with("</svg>\n"));
        // One rect per tile plus the background.
        let rects = a.matches("<rect").count();
        assert_eq!(rects, (world.width() * world.height()) as usize + 1);
    }
}
