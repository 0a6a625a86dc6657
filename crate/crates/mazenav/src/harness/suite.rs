//! Multi-seed evaluation suite with per-seed rows and oracle-relative means.

use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use super::episode::{run_episode, EpisodeLog, TaskSpec};

/// One episode's aggregate numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRow {
    pub seed: u64,
    pub task: String,
    pub success: bool,
    pub forward_steps: u32,
    pub turn_steps: u32,
    pub coverage: f64,
    pub node_count: usize,
    pub oracle_steps: u32,
    /// forward_steps - oracle_steps.
    pub deviation: i64,
}

impl SeedRow {
    fn from_log(log: &EpisodeLog) -> SeedRow {
        SeedRow {
            seed: log.seed,
            task: log.task.clone(),
            success: log.success,
            forward_steps: log.forward_steps,
            turn_steps: log.turn_steps,
            coverage: log.coverage,
            node_count: log.node_count,
            oracle_steps: log.oracle_forward_steps,
            deviation: log.forward_steps as i64 - log.oracle_forward_steps as i64,
        }
    }
}

/// Per-task aggregate over the suite's seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSummary {
    pub task: String,
    pub episodes: usize,
    pub successes: usize,
    pub mean_forward_steps: f64,
    pub mean_oracle_steps: f64,
    pub mean_deviation: f64,
}

/// Full suite outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub rows: Vec<SeedRow>,
    pub summaries: Vec<TaskSummary>,
}

impl SuiteReport {
    pub fn summary_for(&self, task: &str) -> Option<&TaskSummary> {
        self.summaries.iter().find(|s| s.task == task)
    }

    /// CSV emission: one row per (seed, task), stable ordering.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "seed,task,success,forward_steps,turn_steps,coverage,node_count,oracle_steps,deviation\n",
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                r.seed,
                r.task,
                r.success,
                r.forward_steps,
                r.turn_steps,
                r.coverage,
                r.node_count,
                r.oracle_steps,
                r.deviation
            ));
        }
        out
    }
}

fn summarize(task: &str, rows: &[SeedRow]) -> TaskSummary {
    let mine: Vec<&SeedRow> = rows.iter().filter(|r| r.task == task).collect();
    let n = mine.len().max(1) as f64;
    TaskSummary {
        task: task.to_string(),
        episodes: mine.len(),
        successes: mine.iter().filter(|r| r.success).count(),
        mean_forward_steps: mine.iter().map(|r| r.forward_steps as f64).sum::<f64>() / n,
        mean_oracle_steps: mine.iter().map(|r| r.oracle_steps as f64).sum::<f64>() / n,
        mean_deviation: mine.iter().map(|r| r.deviation as f64).sum::<f64>() / n,
    }
}

/// Run every (seed, task) episode and aggregate. Rows are ordered by task
/// then seed regardless of execution order.
pub fn run_suite(config: &RunConfig, seeds: &[u64], tasks: &[TaskSpec]) -> SuiteReport {
    let mut rows = Vec::with_capacity(seeds.len() * tasks.len());
    for task in tasks {
        for &seed in seeds {
            let log = run_episode(config, seed, task);
            rows.push(SeedRow::from_log(&log));
        }
    }
    let mut summaries = Vec::new();
    for task in tasks {
        summaries.push(summarize(task.name(), &rows));
    }
    SuiteReport { rows, summaries }
}

/// Suite variant that also returns the logs (for rendering or replay).
pub fn run_suite_with_logs(
    config: &RunConfig,
    seeds: &[u64],
    tasks: &[TaskSpec],
) -> (SuiteReport, Vec<EpisodeLog>) {
    let mut rows = Vec::new();
    let mut logs = Vec::new();
    for task in tasks {
        for &seed in seeds {
            let log = run_episode(config, seed, task);
            rows.push(SeedRow::from_log(&log));
            logs.push(log);
        }
    }
    let mut summaries = Vec::new();
    for task in tasks {
        summaries.push(summarize(task.name(), &rows));
    }
    (SuiteReport { rows, summaries }, logs)
}
