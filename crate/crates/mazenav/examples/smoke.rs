use mazenav::gridworld::MazeConfig;
use mazenav::harness::{run_episode, RunConfig, TaskSpec};

fn main() {
    let config = RunConfig { environment: MazeConfig::default(), ..RunConfig::default() };
    let mut explore_ok = 0;
    let mut goal_ok = 0;
    let mut edev = 0i64; let mut eo = 0i64;
    let mut gdev = 0i64; let mut go = 0i64;
    for seed in 0..20u64 {
        let log = run_episode(&config, seed, &TaskSpec::Exploration { coverage_target: 0.95 });
        if log.success { explore_ok += 1; }
        edev += log.forward_steps as i64 - log.oracle_forward_steps as i64;
        eo += log.oracle_forward_steps as i64;
        println!("explore {seed:2}: ok={} steps={:4} fwd={:4} cov={:.3} nodes={} oracle={}",
            log.success, log.steps.len()-1, log.forward_steps, log.coverage, log.node_count, log.oracle_forward_steps);
    }
    for seed in 0..20u64 {
        let log = run_episode(&config, seed, &TaskSpec::GoalReach);
        if log.success { goal_ok += 1; }
        gdev += log.forward_steps as i64 - log.oracle_forward_steps as i64;
        go += log.oracle_forward_steps as i64;
        println!("goal {seed:2}: ok={} steps={:4} fwd={:4} nodes={} oracle={}",
            log.success, log.steps.len()-1, log.forward_steps, log.node_count, log.oracle_forward_steps);
    }
    println!("explore {explore_ok}/20 mean_dev={:.1} 3x_oracle_mean={:.1}", edev as f64/20.0, 3.0*eo as f64/20.0);
    println!("goal    {goal_ok}/20 mean_dev={:.1} 3x_oracle_mean={:.1}", gdev as f64/20.0, 3.0*go as f64/20.0);
}
