//! Command line front end: closed-loop runs, mode comparison, trace
//! replay through the estimator, and terminal-ingredient checks.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use zonomax_core::error::Result;
use zonomax_core::mpc::verify_terminal_assumption;
use zonomax_core::sim::{
    self, Mode, RunResult, SimConfig, parse_trace_csv, replay_estimation, run_closed_loop,
};

#[derive(Parser)]
#[command(name = "zonomax", version, about = "Self-triggered min-max MPC with set-membership estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Adaptive,
    Robust,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Adaptive => Mode::Adaptive,
            ModeArg::Robust => Mode::Robust,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run one closed loop and write trace.csv and metrics.txt.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Override the seed from the config file.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the mode from the config file.
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        /// Output directory (default: config's out_dir, else ./out).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run adaptive and robust with the same disturbances and compare.
    Compare {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Replay a logged trace through the set-membership estimator.
    EstimateOnly {
        #[arg(long)]
        config: PathBuf,
        /// trace.csv produced by a previous run.
        #[arg(long)]
        trace: PathBuf,
    },
    /// Check the terminal cost, feedback, and set against the plant.
    VerifyTerminal {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn load(config: &PathBuf, seed: Option<u64>, mode: Option<ModeArg>) -> Result<SimConfig> {
    let mut cfg = SimConfig::from_path(config)?;
    if let Some(seed) = seed {
        cfg.sim.seed = seed;
    }
    if let Some(mode) = mode {
        cfg.sim.mode = mode.into();
    }
    Ok(cfg)
}

fn out_dir(cfg: &SimConfig, out: Option<PathBuf>) -> PathBuf {
    out.or_else(|| cfg.sim.out_dir.clone().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn print_summary(label: &str, result: &RunResult) {
    let m = &result.metrics;
    println!(
        "{label}: steps={} triggers={} J_p={:.4} avg_sampling={:.4} violations={} final_width={:.6}",
        result.trace.len(),
        m.trigger_count,
        m.j_p,
        m.average_sampling_time,
        m.constraint_violations,
        m.efss_final_width,
    );
    if m.v_rate_clips > 0 || m.d_magnitude_clips > 0 {
        println!(
            "{label}: profile clipped to admissibility ({} rate clips, {} magnitude clips)",
            m.v_rate_clips, m.d_magnitude_clips
        );
    }
    if m.estimation_faults > 0 {
        println!(
            "{label}: {} measurement(s) discarded as inconsistent",
            m.estimation_faults
        );
    }
}

fn cmd_run(
    config: PathBuf,
    seed: Option<u64>,
    mode: Option<ModeArg>,
    out: Option<PathBuf>,
) -> Result<bool> {
    let cfg = load(&config, seed, mode)?;
    let result = run_closed_loop(&cfg)?;
    let dir = out_dir(&cfg, out);
    sim::write_run(&dir, &result)?;
    print_summary("run", &result);
    println!("run: outputs in {}", dir.display());
    if let Some(msg) = &result.fault {
        eprintln!("run aborted: {msg}");
        eprintln!("partial trace dumped to {}", dir.join("trace.csv").display());
        return Ok(false);
    }
    Ok(true)
}

fn cmd_compare(config: PathBuf, seed: Option<u64>, out: Option<PathBuf>) -> Result<bool> {
    let base = load(&config, seed, None)?;
    let dir = out_dir(&base, out);
    let mut ok = true;
    let mut sampling = Vec::new();
    for (label, mode) in [("adaptive", Mode::Adaptive), ("robust", Mode::Robust)] {
        let mut cfg = base.clone();
        cfg.sim.mode = mode;
        let result = run_closed_loop(&cfg)?;
        sim::write_run(&dir.join(label), &result)?;
        print_summary(label, &result);
        sampling.push(result.metrics.average_sampling_time);
        if let Some(msg) = &result.fault {
            eprintln!("{label} run aborted: {msg}");
            ok = false;
        }
    }
    println!(
        "compare: adaptive avg sampling {:.4} vs robust {:.4}",
        sampling[0], sampling[1]
    );
    Ok(ok)
}

fn cmd_estimate_only(config: PathBuf, trace: PathBuf) -> Result<bool> {
    let cfg = load(&config, None, None)?;
    let text = std::fs::read_to_string(&trace)?;
    let records = parse_trace_csv(&text)?;
    let report = replay_estimation(&records, &cfg)?;
    println!(
        "replay: triggers={} updates={} faults={} containment_failures={} hull_mismatch={:.3e} final_width={:.6}",
        report.triggers,
        report.updates,
        report.faults,
        report.containment_failures,
        report.max_hull_mismatch,
        report.final_width,
    );
    Ok(report.faults == 0 && report.containment_failures == 0)
}

fn cmd_verify_terminal(config: PathBuf, samples: usize, seed: u64) -> Result<bool> {
    let cfg = load(&config, None, None)?;
    let s = sim::setup(&cfg)?;
    let report = verify_terminal_assumption(&s.plant, &s.term, &s.weights, samples, seed)?;
    println!(
        "terminal: feedback bound {:.4} within input limits: {}",
        report.kappa_bound.amax(),
        report.kappa_within_input_bounds,
    );
    println!(
        "terminal: set extent ({:.4}, {:.4}) within state limits: {}",
        report.terminal_extent[0],
        report.terminal_extent[1],
        report.terminal_set_within_state_bounds,
    );
    println!(
        "terminal: decrease holds at {:.2}% of {} boundary samples (worst margin {:.4})",
        100.0 * report.decrease_pass_fraction,
        report.boundary_samples,
        report.decrease_worst_margin,
    );
    for f in &report.decrease_failures {
        println!(
            "terminal: decrease fails at ({:.4}, {:.4}) with margin {:.4}",
            f.x[0], f.x[1], f.margin
        );
    }
    println!(
        "terminal: invariance holds at {:.2}% of sampled successors (worst excess {:.4})",
        100.0 * report.invariance_pass_fraction,
        report.invariance_worst_excess,
    );
    println!("terminal: disturbance slope {:.4}", report.alpha_slope);
    Ok(report.kappa_within_input_bounds && report.terminal_set_within_state_bounds)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run {
            config,
            seed,
            mode,
            out,
        } => cmd_run(config, seed, mode, out),
        Command::Compare { config, seed, out } => cmd_compare(config, seed, out),
        Command::EstimateOnly { config, trace } => cmd_estimate_only(config, trace),
        Command::VerifyTerminal {
            config,
            samples,
            seed,
        } => cmd_verify_terminal(config, samples, seed),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
