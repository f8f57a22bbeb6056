use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Deserialize;

use safecover::dynamics::FwLimits;
use safecover::hj_grid::{self, HjProblem, Scheme, SolveOptions, ValueGrid};
use safecover::sim::{self, builtin_names, builtin_scenario, Model, Safety, Scenario};
use safecover::{Error, Result};

#[derive(Parser)]
#[command(name = "safecover", version, about = "Swarm coverage simulator with collision avoidance")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its output files.
    Simulate {
        /// Scenario TOML file or builtin name.
        #[arg(long)]
        scenario: String,
        /// Run directory to create.
        #[arg(long)]
        out: PathBuf,
        /// on | off | grid:<path>
        #[arg(long)]
        safety: Option<String>,
        /// RNG seed for fixed-wing initial headings.
        #[arg(long)]
        seed: Option<u64>,
        /// Integration step in seconds.
        #[arg(long)]
        dt: Option<f64>,
        /// Final time in seconds.
        #[arg(long = "t-end")]
        t_end: Option<f64>,
    },
    /// Solve the fixed-wing time-to-reach grid and save it.
    SolveGrid {
        /// Grid config TOML file or builtin fixed-wing scenario name.
        #[arg(long)]
        config: String,
        /// Output grid file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the summary of a finished run.
    Report {
        /// Run directory written by `simulate`.
        #[arg(long)]
        run: PathBuf,
    },
    /// List builtin scenario names.
    List,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GridConfig {
    c_r: f64,
    limits: FwLimits,
    #[serde(default = "default_half_width")]
    half_width: f64,
    #[serde(default = "default_n_pos")]
    n_pos: usize,
    #[serde(default = "default_n_heading")]
    n_heading: usize,
    #[serde(default = "default_n_speed")]
    n_speed: usize,
    #[serde(default)]
    tol: Option<f64>,
    #[serde(default)]
    max_iters: Option<usize>,
    #[serde(default)]
    cap: Option<f64>,
    #[serde(default)]
    scheme: Scheme,
    #[serde(default)]
    step: Option<f64>,
}

fn default_half_width() -> f64 {
    15.0
}
fn default_n_pos() -> usize {
    31
}
fn default_n_heading() -> usize {
    15
}
fn default_n_speed() -> usize {
    9
}

fn load_scenario(arg: &str) -> Result<Scenario> {
    let path = Path::new(arg);
    if path.exists() {
        Scenario::from_file(path)
    } else {
        builtin_scenario(arg)
    }
}

fn apply_safety_flag(s: &mut Scenario, flag: &str) -> Result<()> {
    s.safety = match flag {
        "off" => Safety::Off,
        "on" => match (&s.model, &s.safety) {
            (_, Safety::Off) | (Model::DoubleIntegrator, _) => match s.model {
                Model::DoubleIntegrator => Safety::Analytic,
                Model::FixedWing => Safety::Grid { path: None },
            },
            (Model::FixedWing, current) => current.clone(),
        },
        other => match other.strip_prefix("grid:") {
            Some(path) => Safety::Grid {
                path: Some(PathBuf::from(path)),
            },
            None => return Err(Error::Config(format!("unknown --safety value `{other}`"))),
        },
    };
    Ok(())
}

fn simulate(
    scenario: &str,
    out: &Path,
    safety: Option<&str>,
    seed: Option<u64>,
    dt: Option<f64>,
    t_end: Option<f64>,
) -> Result<()> {
    let mut s = load_scenario(scenario)?;
    if let Some(flag) = safety {
        apply_safety_flag(&mut s, flag)?;
    }
    if let Some(seed) = seed {
        s.seed = seed;
    }
    if let Some(dt) = dt {
        s.dt = dt;
    }
    if let Some(t_end) = t_end {
        s.t_end = t_end;
    }
    s.validate()?;
    let output = sim::run(&s)?;
    sim::write_run(&output, out)?;
    let sum = &output.summary;
    println!(
        "{}: {} steps, {} collision events, final cover {}, wall time {:.2} s -> {}",
        sum.name,
        sum.steps,
        sum.collision_events,
        sum.final_cover,
        sum.wall_time_s,
        out.display()
    );
    Ok(())
}

fn solve_grid(config: &str, out: &Path) -> Result<()> {
    let (problem, opts) = if !Path::new(config).exists() {
        let s = builtin_scenario(config)?;
        let limits = s
            .limits
            .ok_or_else(|| Error::Config(format!("`{config}` is not a fixed-wing scenario")))?;
        (HjProblem::desk_default(s.params.c_r, limits), SolveOptions::default())
    } else {
        let text = std::fs::read_to_string(config).map_err(|e| Error::Io {
            path: config.into(),
            source: e,
        })?;
        let c: GridConfig = toml::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
        let d = SolveOptions::default();
        (
            HjProblem::with_resolution(c.c_r, c.limits, c.half_width, c.n_pos, c.n_heading, c.n_speed),
            SolveOptions {
                tol: c.tol.unwrap_or(d.tol),
                max_iters: c.max_iters.unwrap_or(d.max_iters),
                cap: c.cap.unwrap_or(d.cap),
                parallel: true,
                scheme: c.scheme,
                step: c.step.unwrap_or(d.step),
            },
        )
    };
    let started = std::time::Instant::now();
    let grid: ValueGrid = hj_grid::solve(&problem, &opts)?;
    grid.save(out)?;
    println!(
        "{} nodes, {} sweeps, residual {:.3e}, converged {}, {:.1} s -> {}",
        grid.node_count(),
        grid.iterations,
        grid.residual,
        grid.converged,
        started.elapsed().as_secs_f64(),
        out.display()
    );
    Ok(())
}

fn report(run: &Path) -> Result<()> {
    let s = sim::read_summary(run)?;
    print!("{}", toml::to_string_pretty(&s).expect("summary serializes"));
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate {
            scenario,
            out,
            safety,
            seed,
            dt,
            t_end,
        } => simulate(&scenario, &out, safety.as_deref(), seed, dt, t_end),
        Command::SolveGrid { config, out } => solve_grid(&config, &out),
        Command::Report { run } => report(&run),
        Command::List => {
            for name in builtin_names() {
                println!("{name}");
            }
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
