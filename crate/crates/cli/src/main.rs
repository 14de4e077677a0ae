use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use contiplan_core::agent::{run_scenario, Outcome, Scenario};
use contiplan_core::exec::{simulate_plan, SimulationResult};
use contiplan_core::pddl::load_task;
use contiplan_core::search::{plan_offline, SearchContext};
use contiplan_core::{Config, GroundedTask, Time, TimedPlan, WorldState};

#[derive(Parser)]
#[command(name = "contiplan", version, about = "Continual temporal planning interleaved with execution")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Plan offline and print the time-triggered plan.
    Plan {
        domain: PathBuf,
        problem: PathBuf,
        /// Also write the plan to this file.
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run the agent on a scenario and emit its trace.
    Run {
        scenario: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Check that a plan reaches the goal from the initial state.
    Validate { domain: PathBuf, problem: PathBuf, plan: PathBuf },
}

#[derive(Args, Default)]
struct Overrides {
    #[arg(long)]
    min_commit: Option<usize>,
    #[arg(long)]
    interval_ms: Option<u64>,
    #[arg(long)]
    plan_size_limit: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Virtual time budget, in time units.
    #[arg(long)]
    time_limit: Option<Time>,
    /// Trace destination; standard output when absent.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long, action = clap::ArgAction::Set, num_args = 1)]
    deterministic: Option<bool>,
}

impl Overrides {
    fn apply(&self, mut c: Config) -> Result<Config> {
        if let Some(v) = self.min_commit {
            c.min_commit = v;
        }
        if let Some(v) = self.interval_ms {
            c.interval_ms = v;
        }
        if let Some(v) = self.plan_size_limit {
            c.plan_size_limit = v;
        }
        if let Some(v) = self.seed {
            c.seed = v;
        }
        if let Some(v) = self.time_limit {
            c.time_limit = v;
        }
        if let Some(v) = self.deterministic {
            c.deterministic = v;
        }
        c.validate().map_err(anyhow::Error::msg)?;
        Ok(c)
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn load(domain: &Path, problem: &Path) -> Result<GroundedTask> {
    let task = load_task(&read(domain)?, &read(problem)?)?;
    Ok(task)
}

/// Input errors exit with 2, every other failure with 1.
enum Failure {
    Input(anyhow::Error),
    Negative,
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Input(e.into())
    }
}

fn cmd_plan(domain: &Path, problem: &Path, output: Option<&Path>, o: &Overrides) -> Result<(), Failure> {
    let config = o.apply(Config::default())?;
    let task = Arc::new(load(domain, problem)?);
    let ctx = SearchContext::new(task.clone(), task.goal.clone());
    let Some(result) = plan_offline(&ctx, WorldState::new(task.init.clone()), &config) else {
        println!("UNSAT");
        return Err(Failure::Negative);
    };
    let text = result.plan.render(&task);
    print!("{text}");
    eprintln!("; makespan {} after {} rounds", result.plan.makespan(), result.rounds);
    if let Some(path) = output {
        std::fs::write(path, &text).with_context(|| format!("cannot write {}", path.display()))?;
    }
    Ok(())
}

fn cmd_run(scenario: &Path, o: &Overrides) -> Result<(), Failure> {
    let mut s = Scenario::load(scenario)?;
    s.config = o.apply(s.config)?;
    let run = run_scenario(&s);
    let jsonl = run.trace.to_jsonl();
    match &o.trace {
        Some(path) => std::fs::write(path, &jsonl).with_context(|| format!("cannot write {}", path.display()))?,
        None => print!("{jsonl}"),
    }
    eprintln!("{:?} at {}", run.outcome, run.end_time);
    if run.outcome == Outcome::GoalAchieved {
        Ok(())
    } else {
        Err(Failure::Negative)
    }
}

fn cmd_validate(domain: &Path, problem: &Path, plan: &Path) -> Result<(), Failure> {
    let task = load(domain, problem)?;
    let plan = TimedPlan::parse(&read(plan)?, &task).map_err(anyhow::Error::msg)?;
    let steps = plan.to_snaps();
    match simulate_plan(&task, &WorldState::new(task.init.clone()), &steps, &task.goal) {
        SimulationResult::Success(_) => {
            println!("valid, makespan {}", plan.makespan());
            Ok(())
        }
        SimulationResult::Failure { index, error } => {
            let why = error.literal().map(|l| task.literal_name(l)).unwrap_or_else(|| format!("{error:?}"));
            println!("invalid: step {index} {} fails on {why}", task.snap_name(steps[index]));
            Err(Failure::Negative)
        }
        SimulationResult::GoalNotReached(_) => {
            println!("invalid: GoalNotReached");
            Err(Failure::Negative)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Plan { domain, problem, output, overrides } => cmd_plan(domain, problem, output.as_deref(), overrides),
        Command::Run { scenario, overrides } => cmd_run(scenario, overrides),
        Command::Validate { domain, problem, plan } => cmd_validate(domain, problem, plan),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Negative) => ExitCode::from(1),
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
