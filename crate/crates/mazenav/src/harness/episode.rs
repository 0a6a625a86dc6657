//! Episode driver: the observe/update/plan/step loop, task success criteria,
//! and the replayable structured log.

use serde::{Deserialize, Serialize};

use crate::cogmap::CognitiveGraph;
use crate::gridworld::{
    generate_maze, observe, step, visible_world_coords, Action, Pose, WorldGrid,
};
use crate::planner::Preference;
use crate::window::Heading;

use super::agent::{Agent, AgentEvent};
use super::config::RunConfig;
use super::oracle::{oracle_explore, oracle_goal, visible_universe};

/// What the agent is evaluated on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TaskSpec {
    /// Observe at least this fraction of the visible tiles.
    Exploration { coverage_target: f64 },
    /// Step on the white goal tile.
    GoalReach,
}

impl TaskSpec {
    pub fn name(&self) -> &'static str {
        match self {
            TaskSpec::Exploration { .. } => "exploration",
            TaskSpec::GoalReach => "goal",
        }
    }
}

/// One step of an episode log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: u64,
    /// Action that produced this state; `None` on the initial record.
    pub action: Option<Action>,
    pub pose: Pose,
    pub collision: bool,
    pub coverage: f64,
    pub deciding: bool,
    pub hypo_count: usize,
    pub events: Vec<AgentEvent>,
}

/// Replayable record of one episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeLog {
    pub seed: u64,
    pub task: String,
    pub start: Pose,
    pub step_cap: u32,
    pub success: bool,
    pub forward_steps: u32,
    pub turn_steps: u32,
    pub coverage: f64,
    pub node_count: usize,
    /// Forward steps of the task-matched full-knowledge oracle.
    pub oracle_forward_steps: u32,
    pub steps: Vec<StepRecord>,
}

impl EpisodeLog {
    pub fn actions(&self) -> Vec<Action> {
        self.steps.iter().filter_map(|r| r.action).collect()
    }

    /// Line-delimited self-describing records: one header line, one line per
    /// step, one summary line.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        let header = serde_json::json!({
            "record": "episode",
            "seed": self.seed,
            "task": self.task,
            "start": self.start,
            "step_cap": self.step_cap,
        });
        out.push_str(&header.to_string());
        out.push('\n');
        for record in &self.steps {
            let mut line = serde_json::to_value(record).expect("step serializes");
            line.as_object_mut()
                .unwrap()
                .insert("record".into(), "step".into());
            out.push_str(&line.to_string());
            out.push('\n');
        }
        let summary = serde_json::json!({
            "record": "summary",
            "success": self.success,
            "forward_steps": self.forward_steps,
            "turn_steps": self.turn_steps,
            "coverage": self.coverage,
            "node_count": self.node_count,
            "oracle_forward_steps": self.oracle_forward_steps,
        });
        out.push_str(&summary.to_string());
        out.push('\n');
        out
    }

    /// Re-execute the action trace on a freshly generated world and confirm
    /// every recorded pose.
    pub fn replay_matches(&self, config: &RunConfig) -> bool {
        let Ok(mut world) = generate_maze(&config.environment, self.seed) else {
            return false;
        };
        let mut pose = self.start;
        if self.steps.first().map(|r| r.pose) != Some(pose) {
            return false;
        }
        for record in self.steps.iter().skip(1) {
            let Some(action) = record.action else {
                return false;
            };
            let out = step(&mut world, pose, action);
            pose = out.new_pose;
            if pose != record.pose || out.collision != record.collision {
                return false;
            }
        }
        true
    }
}

/// Deterministic start pose: the center of the north-west room, facing east.
pub fn start_pose(world: &WorldGrid) -> Pose {
    let (cx, cy) = world.rooms()[0].center();
    Pose::new(cx, cy, Heading::East)
}

/// Task-matched oracle forward-step count.
pub fn oracle_steps_for(world: &WorldGrid, start: Pose, task: &TaskSpec) -> u32 {
    match task {
        TaskSpec::Exploration { coverage_target } => {
            oracle_explore(world, start, *coverage_target).0
        }
        TaskSpec::GoalReach => oracle_goal(world, start).map(|(s, _)| s).unwrap_or(0),
    }
}

/// Run one full episode with the planning agent.
pub fn run_episode(config: &RunConfig, seed: u64, task: &TaskSpec) -> EpisodeLog {
    let world = generate_maze(&config.environment, seed).expect("valid environment config");
    let start = start_pose(&world);
    run_episode_on(config, seed, task, world, start, None)
}

/// Run one episode starting from a pre-built cognitive map (the agent still
/// has to localize itself into it). The map must come from the same maze and
/// start pose.
pub fn run_episode_with_map(
    config: &RunConfig,
    seed: u64,
    task: &TaskSpec,
    map: CognitiveGraph,
) -> EpisodeLog {
    let world = generate_maze(&config.environment, seed).expect("valid environment config");
    let start = start_pose(&world);
    run_episode_on(config, seed, task, world, start, Some(map))
}

fn preference_for(task: &TaskSpec) -> Preference {
    match task {
        TaskSpec::Exploration { .. } => Preference::Flat,
        TaskSpec::GoalReach => Preference::goal(),
    }
}

fn run_episode_on(
    config: &RunConfig,
    seed: u64,
    task: &TaskSpec,
    mut world: WorldGrid,
    start: Pose,
    map: Option<CognitiveGraph>,
) -> EpisodeLog {
    let universe = visible_universe(&world, start);
    let (explore_oracle, _) = oracle_explore(&world, start, config.harness.coverage_target);
    let step_cap = (config.harness.step_cap_factor * explore_oracle.max(1))
        .max(config.harness.step_cap_min);
    let oracle_forward_steps = oracle_steps_for(&world, start, task);

    let pref = preference_for(task);
    let first_obs = observe(&world, start);
    let mut agent = match map {
        None => Agent::new(config.clone(), pref, &first_obs),
        Some(graph) => Agent::with_map(config.clone(), pref, &first_obs, graph),
    };

    let mut pose = start;
    let mut seen = visible_world_coords(&world, pose);
    let mut log = EpisodeLog {
        seed,
        task: task.name().to_string(),
        start,
        step_cap,
        success: false,
        forward_steps: 0,
        turn_steps: 0,
        coverage: 0.0,
        node_count: 0,
        oracle_forward_steps,
        steps: Vec::new(),
    };

    let coverage_of = |seen: &std::collections::BTreeSet<(i32, i32)>| {
        seen.len() as f64 / universe.len() as f64
    };
    log.steps.push(StepRecord {
        step: 0,
        action: None,
        pose,
        collision: false,
        coverage: coverage_of(&seen),
        deciding: agent.deciding(),
        hypo_count: agent.hypothesis_count(),
        events: agent.drain_events(),
    });

    let succeeded = |world: &WorldGrid, pose: Pose, coverage: f64| match task {
        TaskSpec::Exploration { coverage_target } => coverage >= *coverage_target,
        TaskSpec::GoalReach => (pose.x, pose.y) == world.goal(),
    };

    let mut steps_taken = 0u32;
    loop {
        let coverage = coverage_of(&seen);
        if succeeded(&world, pose, coverage) {
            log.success = true;
            break;
        }
        if steps_taken >= step_cap {
            break;
        }
        let action = agent.next_action();
        let out = step(&mut world, pose, action);
        let obs = observe(&world, out.new_pose);
        agent.integrate(action, &obs, out.collision);
        pose = out.new_pose;
        seen.extend(visible_world_coords(&world, pose));
        steps_taken += 1;
        match action {
            Action::Forward => {
                if !out.collision {
                    log.forward_steps += 1;
                }
            }
            _ => log.turn_steps += 1,
        }
        log.steps.push(StepRecord {
            step: steps_taken as u64,
            action: Some(action),
            pose,
            collision: out.collision,
            coverage: coverage_of(&seen),
            deciding: agent.deciding(),
            hypo_count: agent.hypothesis_count(),
            events: agent.drain_events(),
        });
    }

    log.coverage = coverage_of(&seen);
    log.node_count = agent.graph().len();
    log
}

/// Drive the place/hypothesis/map machinery along a fixed action script
/// instead of the planner. Returns the log and the agent for inspection.
pub fn run_scripted(
    config: &RunConfig,
    mut world: WorldGrid,
    start: Pose,
    actions: &[Action],
    pref: Preference,
) -> (EpisodeLog, Agent) {
    let universe = visible_universe(&world, start);
    let first_obs = observe(&world, start);
    let mut agent = Agent::new(config.clone(), pref, &first_obs);
    let mut pose = start;
    let mut seen = visible_world_coords(&world, pose);

    let mut log = EpisodeLog {
        seed: 0,
        task: "scripted".to_string(),
        start,
        step_cap: actions.len() as u32,
        success: true,
        forward_steps: 0,
        turn_steps: 0,
        coverage: 0.0,
        node_count: 0,
        oracle_forward_steps: 0,
        steps: Vec::new(),
    };
    log.steps.push(StepRecord {
        step: 0,
        action: None,
        pose,
        collision: false,
        coverage: seen.len() as f64 / universe.len() as f64,
        deciding: agent.deciding(),
        hypo_count: agent.hypothesis_count(),
        events: agent.drain_events(),
    });

    for (i, &action) in actions.iter().enumerate() {
        let out = step(&mut world, pose, action);
        let obs = observe(&world, out.new_pose);
        agent.integrate(action, &obs, out.collision);
        pose = out.new_pose;
        seen.extend(visible_world_coords(&world, pose));
        match action {
            Action::Forward => {
                if !out.collision {
                    log.forward_steps += 1;
                }
            }
            _ => log.turn_steps += 1,
        }
        log.steps.push(StepRecord {
            step: (i + 1) as u64,
            action: Some(action),
            pose,
            collision: out.collision,
            coverage: seen.len() as f64 / universe.len() as f64,
            deciding: agent.deciding(),
            hypo_count: agent.hypothesis_count(),
            events: agent.drain_events(),
        });
    }
    log.coverage = *log
        .steps
        .last()
        .map(|r| &r.coverage)
        .unwrap_or(&0.0);
    log.node_count = agent.graph().len();
    (log, agent)
}

