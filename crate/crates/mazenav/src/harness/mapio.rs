//! Versioned structured-text persistence for the cognitive map.
//!
//! ```text
//! cogmap v1
//! graph nodes 4 edges 4 current 3 next 4
//! node 0 anchor 0 0 N activation 0.9320653479069899 created 0
//! canvas 0 size 17 obs 42 seq 42
//! cell -3 -2 0:5:12 1:1:3
//! endcanvas
//! edge 0 1 rot 1 dx 3 dy -8 cost 7 fromdoor 8 0 E todoor 0 -2 N
//! ```
//!
//! Evidence cells are written as `symbol:count:last_seq` runs; floats use
//! Rust's shortest round-trip formatting so load(save(g)) == g exactly.

use std::fmt::Write as _;

use thiserror::Error;

use crate::allocentric::{PlaceCanvas, PlaceId, Transform};
use crate::cogmap::{CognitiveGraph, DoorRef, Edge, ExperienceNode, GlobalPose};
use crate::gridworld::TileKind;
use crate::window::Heading;

pub const MAP_FORMAT_VERSION: &str = "cogmap v1";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MapIoError {
    #[error("line {line}: expected header '{}', got '{found}'", MAP_FORMAT_VERSION)]
    BadVersion { line: usize, found: String },
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("file ends before the graph is complete")]
    Truncated,
}

fn heading_letter(h: Heading) -> char {
    h.letter()
}

fn heading_from(s: &str) -> Option<Heading> {
    match s {
        "N" => Some(Heading::North),
        "E" => Some(Heading::East),
        "S" => Some(Heading::South),
        "W" => Some(Heading::West),
        _ => None,
    }
}

/// Serialize a cognitive map.
pub fn save_map(graph: &CognitiveGraph) -> String {
    let mut out = String::new();
    out.push_str(MAP_FORMAT_VERSION);
    out.push('\n');
    let nodes: Vec<&ExperienceNode> = graph.nodes().collect();
    let next_id = nodes.iter().map(|n| n.id.0 + 1).max().unwrap_or(0);
    writeln!(
        out,
        "graph nodes {} edges {} current {} next {}",
        nodes.len(),
        graph.edges().len(),
        graph
            .current()
            .map(|c| c.0.to_string())
            .unwrap_or_else(|| "none".to_string()),
        next_id,
    )
    .unwrap();

    for node in &nodes {
        writeln!(
            out,
            "node {} anchor {} {} {} activation {} created {}",
            node.id.0,
            node.anchor.x,
            node.anchor.y,
            heading_letter(node.anchor.heading),
            node.activation,
            node.created_at,
        )
        .unwrap();
        let (obs, seq) = node.canvas.counters();
        writeln!(
            out,
            "canvas {} size {} obs {} seq {}",
            node.id.0,
            node.canvas.size(),
            obs,
            seq
        )
        .unwrap();
        for ((x, y), counts, last_seq) in node.canvas.raw_evidence() {
            write!(out, "cell {x} {y}").unwrap();
            for s in 0..TileKind::SYMBOLS {
                if counts[s] > 0 {
                    write!(out, " {s}:{}:{}", counts[s], last_seq[s]).unwrap();
                }
            }
            out.push('\n');
        }
        out.push_str("endcanvas\n");
    }

    for edge in graph.edges() {
        write!(
            out,
            "edge {} {} rot {} dx {} dy {} cost {}",
            edge.from.0, edge.to.0, edge.transform.rot, edge.transform.dx, edge.transform.dy, edge.cost
        )
        .unwrap();
        match edge.from_door {
            Some(d) => write!(
                out,
                " fromdoor {} {} {}",
                d.cell.0,
                d.cell.1,
                heading_letter(d.heading)
            )
            .unwrap(),
            None => out.push_str(" fromdoor -"),
        }
        match edge.to_door {
            Some(d) => write!(
                out,
                " todoor {} {} {}",
                d.cell.0,
                d.cell.1,
                heading_letter(d.heading)
            )
            .unwrap(),
            None => out.push_str(" todoor -"),
        }
        out.push('\n');
    }
    out
}

struct Parser<'a> {
    lines: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Parser<'a> {
    fn next_line(&mut self) -> Option<(usize, &'a str)> {
        for (i, line) in self.lines.by_ref() {
            if !line.trim().is_empty() {
                return Some((i + 1, line));
            }
        }
        None
    }
}

fn malformed(line: usize, msg: impl Into<String>) -> MapIoError {
    MapIoError::Malformed {
        line,
        msg: msg.into(),
    }
}

/// Parse a cognitive map saved by [`save_map`]. Fails without producing a
/// partial graph.
pub fn load_map(text: &str) -> Result<CognitiveGraph, MapIoError> {
    let mut parser = Parser {
        lines: text.lines().enumerate(),
    };
    let (line, header) = parser.next_line().ok_or(MapIoError::Truncated)?;
    if header.trim() != MAP_FORMAT_VERSION {
        return Err(MapIoError::BadVersion {
            line,
            found: header.to_string(),
        });
    }

    let (line, meta) = parser.next_line().ok_or(MapIoError::Truncated)?;
    let toks: Vec<&str> = meta.split_whitespace().collect();
    let ["graph", "nodes", n, "edges", m, "current", current, "next", next] = toks[..] else {
        return Err(malformed(line, "expected 'graph nodes .. edges .. current .. next ..'"));
    };
    let node_count: usize = n.parse().map_err(|_| malformed(line, "bad node count"))?;
    let edge_count: usize = m.parse().map_err(|_| malformed(line, "bad edge count"))?;
    let current: Option<u32> = match current {
        "none" => None,
        s => Some(s.parse().map_err(|_| malformed(line, "bad current id"))?),
    };
    let next_id: u32 = next.parse().map_err(|_| malformed(line, "bad next id"))?;

    let mut nodes: Vec<ExperienceNode> = Vec::with_capacity(node_count);
    for _ in 0..node_count {
        let (line, node_line) = parser.next_line().ok_or(MapIoError::Truncated)?;
        let toks: Vec<&str> = node_line.split_whitespace().collect();
        let ["node", id, "anchor", ax, ay, ah, "activation", act, "created", created] = toks[..]
        else {
            return Err(malformed(line, "expected node record"));
        };
        let id: u32 = id.parse().map_err(|_| malformed(line, "bad node id"))?;
        let anchor = GlobalPose::new(
            ax.parse().map_err(|_| malformed(line, "bad anchor x"))?,
            ay.parse().map_err(|_| malformed(line, "bad anchor y"))?,
            heading_from(ah).ok_or_else(|| malformed(line, "bad anchor heading"))?,
        );
        let activation: f64 = act.parse().map_err(|_| malformed(line, "bad activation"))?;
        let created_at: u64 = created.parse().map_err(|_| malformed(line, "bad created"))?;

        let (line, canvas_line) = parser.next_line().ok_or(MapIoError::Truncated)?;
        let toks: Vec<&str> = canvas_line.split_whitespace().collect();
        let ["canvas", cid, "size", size, "obs", obs, "seq", seq] = toks[..] else {
            return Err(malformed(line, "expected canvas record"));
        };
        if cid.parse::<u32>().ok() != Some(id) {
            return Err(malformed(line, "canvas id does not match its node"));
        }
        let size: usize = size.parse().map_err(|_| malformed(line, "bad canvas size"))?;
        if size < 9 || size % 2 == 0 {
            return Err(malformed(line, "canvas size must be odd and >= 9"));
        }
        let obs: u32 = obs.parse().map_err(|_| malformed(line, "bad obs count"))?;
        let seq: u32 = seq.parse().map_err(|_| malformed(line, "bad fuse seq"))?;
        let mut canvas = PlaceCanvas::new(size);
        loop {
            let (line, cell_line) = parser.next_line().ok_or(MapIoError::Truncated)?;
            if cell_line.trim() == "endcanvas" {
                break;
            }
            let mut toks = cell_line.split_whitespace();
            if toks.next() != Some("cell") {
                return Err(malformed(line, "expected cell record or endcanvas"));
            }
            let x: i32 = toks
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| malformed(line, "bad cell x"))?;
            let y: i32 = toks
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| malformed(line, "bad cell y"))?;
            let mut counts = [0u32; TileKind::SYMBOLS];
            let mut last_seq = [0u32; TileKind::SYMBOLS];
            for run in toks {
                let parts: Vec<&str> = run.split(':').collect();
                let [sym, count, at] = parts[..] else {
                    return Err(malformed(line, "bad evidence run"));
                };
                let sym: usize = sym.parse().map_err(|_| malformed(line, "bad symbol"))?;
                if sym >= TileKind::SYMBOLS {
                    return Err(malformed(line, "symbol out of range"));
                }
                counts[sym] = count.parse().map_err(|_| malformed(line, "bad count"))?;
                last_seq[sym] = at.parse().map_err(|_| malformed(line, "bad seq"))?;
            }
            canvas.set_raw_evidence((x, y), counts, last_seq);
        }
        canvas.set_counters(obs, seq);

        nodes.push(ExperienceNode {
            id: PlaceId(id),
            canvas,
            anchor,
            activation,
            created_at,
        });
    }

    let mut edges: Vec<Edge> = Vec::with_capacity(edge_count);
    for _ in 0..edge_count {
        let (line, edge_line) = parser.next_line().ok_or(MapIoError::Truncated)?;
        let toks: Vec<&str> = edge_line.split_whitespace().collect();
        if toks.len() < 12 || toks[0] != "edge" {
            return Err(malformed(line, "expected edge record"));
        }
        let from: u32 = toks[1].parse().map_err(|_| malformed(line, "bad from"))?;
        let to: u32 = toks[2].parse().map_err(|_| malformed(line, "bad to"))?;
        if toks[3] != "rot" || toks[5] != "dx" || toks[7] != "dy" || toks[9] != "cost" {
            return Err(malformed(line, "bad edge fields"));
        }
        let rot: u8 = toks[4].parse().map_err(|_| malformed(line, "bad rot"))?;
        let dx: i32 = toks[6].parse().map_err(|_| malformed(line, "bad dx"))?;
        let dy: i32 = toks[8].parse().map_err(|_| malformed(line, "bad dy"))?;
        let cost: u32 = toks[10].parse().map_err(|_| malformed(line, "bad cost"))?;

        let mut cursor = 11;
        let read_door = |label: &str, cursor: &mut usize| -> Result<Option<DoorRef>, MapIoError> {
            if toks.get(*cursor) != Some(&label) {
                return Err(malformed(line, format!("expected '{label}'")));
            }
            *cursor += 1;
            if toks.get(*cursor) == Some(&"-") {
                *cursor += 1;
                return Ok(None);
            }
            let x: i32 = toks
                .get(*cursor)
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| malformed(line, "bad door x"))?;
            let y: i32 = toks
                .get(*cursor + 1)
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| malformed(line, "bad door y"))?;
            let h = toks
                .get(*cursor + 2)
                .and_then(|t| heading_from(t))
                .ok_or_else(|| malformed(line, "bad door heading"))?;
            *cursor += 3;
            Ok(Some(DoorRef {
                cell: (x, y),
                heading: h,
            }))
        };
        let from_door = read_door("fromdoor", &mut cursor)?;
        let to_door = read_door("todoor", &mut cursor)?;

        edges.push(Edge {
            from: PlaceId(from),
            to: PlaceId(to),
            transform: Transform::new(rot, dx, dy),
            cost,
            from_door,
            to_door,
        });
    }

    CognitiveGraph::from_parts(nodes, edges, current.map(PlaceId), next_id)
        .map_err(|msg| malformed(0, msg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::allocentric::PlacePose;
    use crate::cogmap::Traversal;
    use crate::gridworld::{generate_maze, observe, MazeConfig, Pose};
    use crate::window::Heading;

    fn sample_graph() -> CognitiveGraph {
        let world = generate_maze(&MazeConfig::default(), 3).unwrap();
        let mut graph = CognitiveGraph::new();
        for i in 0..4u32 {
            let room = world.rooms()[i as usize];
            let anchor = GlobalPose::new(room.center().0, room.center().1, Heading::East);
            let mut canvas = PlaceCanvas::default();
            let pose = Pose::new(room.center().0, room.center().1, Heading::North);
            canvas
                .fuse(PlacePose::origin(), &observe(&world, pose))
                .unwrap();
            graph.add_node(
                canvas,
                anchor,
                i as u64 * 10,
                (i > 0).then(|| Traversal {
                    forward_steps: 5 + i,
                    from_door: Some(DoorRef {
                        cell: (3, -1),
                        heading: Heading::East,
                    }),
                    to_door: (i % 2 == 0).then_some(DoorRef {
                        cell: (0, 2),
                        heading: Heading::North,
                    }),
                }),
            );
            graph.decay_tick(0.97);
        }
        graph
    }

    #[test]
    fn save_load_round_trip_is_identity() {
        let graph = sample_graph();
        let text = save_map(&graph);
        let back = load_map(&text).unwrap();
        assert_eq!(graph, back);
    }

    #[test]
    fn truncated_file_fails_without_partial_graph() {
        let graph = sample_graph();
        let text = save_map(&graph);
        let lines: Vec<&str> = text.lines().collect();
        for cut in [1, 3, lines.len() / 2, lines.len() - 1] {
            let partial: String = lines[..cut].iter().map(|l| format!("{l}\n")).collect();
            assert!(load_map(&partial).is_err(), "cut at {cut} should fail");
        }
    }

    #[test]
    fn version_mismatch_is_reported() {
        let err = load_map("cogmap v9\n").unwrap_err();
        assert!(matches!(err, MapIoError::BadVersion { line: 1, .. }));
    }

    #[test]
    fn malformed_record_reports_line() {
        let graph = sample_graph();
        let text = save_map(&graph).replace("activation", "activatXon");
        let err = load_map(&text).unwrap_err();
        assert!(matches!(err, MapIoError::Malformed { .. }));
    }
}
