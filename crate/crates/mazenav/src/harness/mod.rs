//! Experiment harness: configuration, the episode loop, full-knowledge
//! oracles, the evaluation suite, map persistence, and rendering.

mod agent;
mod config;
mod episode;
mod mapio;
mod oracle;
mod render;
mod suite;

pub use agent::{Agent, AgentEvent};
pub use config::{ConfigFileError, EgoConfig, HarnessConfig, MapConfig, PlaceConfig, RunConfig};
pub use episode::{
    run_episode, run_episode_with_map, run_scripted, start_pose, EpisodeLog, StepRecord, TaskSpec,
};
pub use mapio::{load_map, save_map, MapIoError, MAP_FORMAT_VERSION};
pub use oracle::{
    action_path, bfs_goal_distance, oracle_explore, oracle_goal, visible_universe, OracleError,
};
pub use render::render_svg;
pub use suite::{run_suite, run_suite_with_logs, SeedRow, SuiteReport, TaskSummary};
