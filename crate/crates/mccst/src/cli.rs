//! Command-line front end.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use mccst_core::behaviors::{nominal_controls_capped, BehaviorAssignment};
use mccst_core::graph::{build_comm_graph, inflate_weights};
use mccst_core::model::Scenario;
use mccst_core::protocol::{run_protocol_with, ProtocolOptions};
use mccst_core::qp::assemble_qp;
use mccst_core::sim::{speed_cap, ConnectivityMode};

use crate::acceptance::{run_acceptance, AcceptanceOptions};
use crate::formats::{weighted_edges, write_edge_list, write_metrics, write_qp_dump, write_trace};
use crate::generate::demo_scenario;
use crate::plots::metric_plots;
use crate::record::record;
use crate::scenario_file::{load_scenario_file, serialize_scenario};
use crate::sweep::{run_sweep, write_sweep_csv, write_timing_csv, SweepSpec};

#[derive(Debug, Parser)]
#[command(name = "mccst", version, about = "Behavior mixing with minimum connectivity constraint spanning trees")]
#[command(arg_required_else_help = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one scenario and write trajectory, metrics and tree files.
    Run(RunArgs),
    /// Run random teams of several sizes under every mode.
    Sweep(SweepArgs),
    /// Run the acceptance suite.
    Verify(VerifyArgs),
    /// Write the 40-robot demo scenario as a TOML document.
    Demo(DemoArgs),
}

fn parse_mode(s: &str) -> Result<ConnectivityMode, String> {
    ConnectivityMode::parse(s).ok_or_else(|| format!("unknown mode {s:?} (mccst, centralized, fixed-mst, fixed-graph)"))
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Scenario document; the 40-robot demo when omitted.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    #[arg(long, default_value = "mccst", value_parser = parse_mode)]
    pub mode: ConnectivityMode,
    /// Steps to simulate; the scenario's step count when omitted.
    #[arg(long)]
    pub steps: Option<usize>,
    /// Demo seed, or the run seed of a scenario document.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Also write SVG plots of the step metrics.
    #[arg(long)]
    pub plots: bool,
    /// Also write the protocol trace and QP rows of the first step.
    #[arg(long)]
    pub trace: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Team sizes.
    #[arg(long = "sweep", value_delimiter = ',', default_value = "10,20,40,60,80,100")]
    pub sizes: Vec<usize>,
    #[arg(long, default_value_t = 10)]
    pub reps: usize,
    #[arg(long, default_value_t = 100)]
    pub steps: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Modes to run; all four when omitted.
    #[arg(long, value_delimiter = ',', value_parser = parse_mode)]
    pub modes: Vec<ConnectivityMode>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Criterion ids to run.
    #[arg(long, value_delimiter = ',')]
    pub only: Vec<u8>,
    #[arg(long, hide = true)]
    pub inject_comparator_bug: bool,
}

#[derive(Debug, Args)]
pub struct DemoArgs {
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Output path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(a) => cmd_run(&a),
        Command::Sweep(a) => cmd_sweep(&a),
        Command::Verify(a) => cmd_verify(&a),
        Command::Demo(a) => cmd_demo(&a),
    }
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn load_run_scenario(args: &RunArgs) -> Result<Scenario> {
    match &args.scenario {
        Some(path) => {
            let mut s = load_scenario_file(path)?;
            if let Some(seed) = args.seed {
                s.config.seed = seed;
            }
            Ok(s)
        }
        None => Ok(demo_scenario(args.seed.unwrap_or(1))?),
    }
}

fn cmd_run(args: &RunArgs) -> Result<()> {
    let scenario = load_run_scenario(args)?;
    let steps = args.steps.unwrap_or(scenario.step_count);
    fs::create_dir_all(&args.out).with_context(|| format!("cannot create {}", args.out.display()))?;
    if args.trace {
        write_first_step_trace(&scenario, &args.out)?;
    }
    let rec = record(&scenario, args.mode, steps)?;
    write(&args.out.join("trajectory.csv"), &rec.trajectory_csv())?;
    write(&args.out.join("metrics.csv"), &write_metrics(&rec.reports))?;
    let tree = match rec.frames.last() {
        Some(f) => weighted_edges(&f.robots, &f.u_hat, rec.world.enforced_edges(), &scenario.config),
        None => Vec::new(),
    };
    write(&args.out.join("tree.txt"), &write_edge_list(&tree))?;
    if args.plots {
        let dir = args.out.join("plots");
        fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;
        for (name, svg) in metric_plots(args.mode.as_str(), &rec.reports, scenario.config.safe_radius) {
            write(&dir.join(name), &svg)?;
        }
    }
    println!(
        "{} robots, {} steps, mode {}: mean perturbation {:.6}, final distance {:.6}, min pair distance {}",
        scenario.robots.len(),
        rec.reports.len(),
        args.mode,
        rec.mean_perturbation(),
        rec.final_distance().unwrap_or(f64::NAN),
        rec.min_distance().map_or_else(|| "n/a".to_string(), |d| format!("{d:.6}")),
    );
    if let Some(step) = rec.stalled_at {
        println!("team stalled from step {step}");
    }
    Ok(())
}

fn write_first_step_trace(scenario: &Scenario, out: &Path) -> Result<()> {
    let config = &scenario.config;
    let assignment = BehaviorAssignment::new(&scenario.robots, &scenario.subgroup_behaviors);
    let u_hat = nominal_controls_capped(&scenario.robots, &assignment, speed_cap(config));
    let graph = inflate_weights(build_comm_graph(&scenario.robots, config, &u_hat), config.lambda_mode)?;
    let outcome = run_protocol_with(&graph, ProtocolOptions { policy: config.delivery, trace: true })?;
    write(&out.join("trace.txt"), &write_trace(&outcome.trace))?;
    let problem = assemble_qp(&scenario.robots, &u_hat, outcome.tree.edges(), config);
    write(&out.join("qp.txt"), &write_qp_dump(&problem))
}

fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    let modes = if args.modes.is_empty() { ConnectivityMode::ALL.to_vec() } else { args.modes.clone() };
    let spec = SweepSpec { sizes: args.sizes.clone(), reps: args.reps, steps: args.steps, seed: args.seed, modes };
    let (rows, timing) = run_sweep(&spec)?;
    fs::create_dir_all(&args.out).with_context(|| format!("cannot create {}", args.out.display()))?;
    write(&args.out.join("sweep.csv"), &write_sweep_csv(&rows))?;
    write(&args.out.join("sweep_timing.csv"), &write_timing_csv(&timing))?;
    for &mode in &spec.modes {
        for &n in &spec.sizes {
            let cell: Vec<_> = rows.iter().filter(|r| r.mode == mode && r.n == n).collect();
            let avg = |f: &dyn Fn(&crate::sweep::SweepRow) -> f64| crate::record::mean(cell.iter().map(|r| f(r)));
            println!(
                "{:<12} N={n:<4} messages {:>9.1}  final distance {:.4}  perturbation {:.4}",
                mode.as_str(),
                avg(&|r| r.messages_mean),
                avg(&|r| r.final_distance),
                avg(&|r| r.perturbation_mean),
            );
        }
    }
    Ok(())
}

fn cmd_verify(args: &VerifyArgs) -> Result<()> {
    let only = (!args.only.is_empty()).then(|| args.only.iter().copied().collect::<BTreeSet<u8>>());
    if let Some(bad) = only.iter().flatten().find(|&&id| !(1..=10).contains(&id)) {
        bail!("no criterion {bad}; ids are 1 to 10");
    }
    let results = run_acceptance(&AcceptanceOptions { only, comparator_bug: args.inject_comparator_bug });
    for r in &results {
        println!("{r}");
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    if failed > 0 {
        bail!("{failed} of {} criteria failed", results.len());
    }
    Ok(())
}

fn cmd_demo(args: &DemoArgs) -> Result<()> {
    let text = serialize_scenario(&demo_scenario(args.seed)?)?;
    match &args.out {
        Some(path) => write(path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
