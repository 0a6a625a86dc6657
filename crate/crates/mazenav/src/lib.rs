//! Hierarchical navigation for multi-room grid mazes.
//!
//! An agent explores and solves procedurally generated mazes by maintaining
//! three nested models and planning over them by expected free energy:
//!
//! - [`egocentric`] — agent-frame short-memory predictor of the next
//!   observation and collision (finest timescale),
//! - [`allocentric`] — per-room place canvases fused from pose/observation
//!   pairs, with multi-hypothesis localization on room entry,
//! - [`cogmap`] — a topological graph of places with relative-transform
//!   edges, activation decay, and path queries (coarsest timescale),
//! - [`planner`] — expected-free-energy action selection at the three levels,
//! - [`gridworld`] — the maze simulator itself,
//! - [`harness`] — episode runner, oracles, metrics, persistence, rendering.
//!
//! Each major capability has a runnable example under `examples/`; see the
//! README for the tour. The `mazenav` binary wraps the harness in a small
//! CLI (`gen`, `explore`, `goal`, `suite`, `render`, `map-dump`).

pub mod allocentric;
pub mod cogmap;
pub mod egocentric;
pub mod gridworld;
pub mod harness;
pub mod planner;
pub mod view;
pub mod window;
