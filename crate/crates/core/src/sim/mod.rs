//! Synchronous multi-vehicle simulation: every step decides all controls
//! from one state snapshot, then advances every vehicle.

mod builtin;
mod output;
mod scenario;

pub use builtin::{builtin_names, builtin_scenario, builtin_square};
pub use output::{read_summary, write_run, Summary};
pub use scenario::{HeadingRule, InitialCondition, InitialStates, Model, Safety, Scenario};

use std::time::Instant;

use rayon::prelude::*;

use crate::dynamics::{step_di, step_fw, DiState, FwState};
use crate::error::{Error, Result};
use crate::hj_grid::{self, HjProblem, SolveOptions, ValueGrid};
use crate::metrics::{
    energy, energy_rate, flocking_sums, is_r_subcover, max_signed_distance, min_pairwise,
    CollisionLog, StepMetrics, COVER_TOL_ASYMPTOTIC, COVER_TOL_EXACT,
};
use crate::policy::{decide_di_with_positions, decide_fw_with, Mode};
use crate::vec2::Vec2;

/// Vehicle state in the run's model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum VehicleState {
    Di(DiState),
    Fw(FwState),
}

impl VehicleState {
    pub fn position(&self) -> Vec2 {
        match self {
            VehicleState::Di(s) => s.p,
            VehicleState::Fw(s) => s.p,
        }
    }

    pub fn velocity(&self) -> Vec2 {
        match self {
            VehicleState::Di(s) => s.v,
            VehicleState::Fw(s) => s.velocity(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrajectoryRecord {
    pub t: f64,
    pub id: usize,
    pub state: VehicleState,
    /// Applied input: Cartesian acceleration or `(u_θ, u_s)`.
    pub u: [f64; 2],
    pub mode: Mode,
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub scenario: Scenario,
    pub trajectory: Vec<TrajectoryRecord>,
    pub metrics: Vec<StepMetrics>,
    pub collisions: CollisionLog,
    pub final_states: Vec<VehicleState>,
    pub summary: Summary,
}

impl RunOutput {
    /// Records of the last logged instant, one per vehicle.
    pub fn final_records(&self) -> &[TrajectoryRecord] {
        let n = self.scenario.n;
        &self.trajectory[self.trajectory.len() - n..]
    }
}

/// Loads or solves the value grid a fixed-wing scenario asks for.
pub fn prepare_grid(scenario: &Scenario) -> Result<Option<ValueGrid>> {
    let Safety::Grid { path } = &scenario.safety else {
        return Ok(None);
    };
    let limits = scenario
        .limits
        .ok_or_else(|| Error::Config("grid safety needs limits".into()))?;
    let grid = match path {
        Some(p) => ValueGrid::load(p)?,
        None => {
            log::info!("solving the default value grid in process");
            hj_grid::solve(
                &HjProblem::desk_default(scenario.params.c_r, limits),
                &SolveOptions::default(),
            )?
        }
    };
    Ok(Some(grid))
}

/// Runs a scenario, loading or solving its value grid when needed.
pub fn run(scenario: &Scenario) -> Result<RunOutput> {
    let grid = prepare_grid(scenario)?;
    run_with_grid(scenario, grid.as_ref())
}

/// Runs a scenario with an already available value grid. The grid is
/// ignored unless the scenario asks for grid safety.
pub fn run_with_grid(scenario: &Scenario, grid: Option<&ValueGrid>) -> Result<RunOutput> {
    scenario.validate()?;
    let started = Instant::now();
    let grid = match (&scenario.safety, grid) {
        (Safety::Grid { .. }, Some(g)) => {
            check_grid(scenario, g)?;
            Some(g)
        }
        (Safety::Grid { .. }, None) => {
            return Err(Error::Config("grid safety requested but no grid given".into()))
        }
        _ => None,
    };
    let mut states: Vec<VehicleState> = match scenario.initial_states() {
        InitialStates::Di(v) => v.into_iter().map(VehicleState::Di).collect(),
        InitialStates::Fw(v) => v.into_iter().map(VehicleState::Fw).collect(),
    };
    let steps = scenario.steps();
    let mut trajectory = Vec::with_capacity(scenario.n * (steps / scenario.record_every + 1));
    let mut metrics = Vec::with_capacity(steps + 1);
    let mut collisions = CollisionLog::new();

    for k in 0..=steps {
        let t = k as f64 * scenario.dt;
        let controls = decide_all(scenario, &states, t, grid)?;
        let positions: Vec<Vec2> = states.iter().map(|s| s.position()).collect();
        collisions.update(&positions, t, scenario.params.c_r);
        metrics.push(step_metrics(scenario, &states, &controls, t));
        if k % scenario.record_every == 0 || k == steps {
            for (id, (s, (u, mode))) in states.iter().zip(&controls).enumerate() {
                trajectory.push(TrajectoryRecord {
                    t,
                    id,
                    state: *s,
                    u: *u,
                    mode: *mode,
                });
            }
        }
        if k == steps {
            break;
        }
        states = advance(scenario, &states, &controls)?;
    }

    let t_final = steps as f64 * scenario.dt;
    let summary = summarize(scenario, &states, &metrics, &collisions, t_final, started);
    Ok(RunOutput {
        scenario: scenario.clone(),
        trajectory,
        metrics,
        collisions,
        final_states: states,
        summary,
    })
}

fn check_grid(scenario: &Scenario, g: &ValueGrid) -> Result<()> {
    let limits = scenario.limits.expect("validated");
    if g.problem.limits != limits || g.problem.c_r != scenario.params.c_r {
        return Err(Error::Config(
            "value grid was solved for different limits or collision radius".into(),
        ));
    }
    if !g.converged {
        log::warn!("value grid did not converge (residual {:.3e})", g.residual);
    }
    Ok(())
}

type Control = ([f64; 2], Mode);

fn decide_all(
    scenario: &Scenario,
    states: &[VehicleState],
    t: f64,
    grid: Option<&ValueGrid>,
) -> Result<Vec<Control>> {
    let domain_now = scenario.domain.at(t);
    let params = &scenario.params;
    let positions: Vec<Vec2> = states.iter().map(|s| s.position()).collect();
    let n = states.len();
    match scenario.model {
        Model::DoubleIntegrator => {
            let di: Vec<DiState> = states
                .iter()
                .map(|s| match s {
                    VehicleState::Di(d) => *d,
                    VehicleState::Fw(f) => f.as_di(),
                })
                .collect();
            let t_safety = match scenario.safety {
                Safety::Off => None,
                _ => Some(scenario.t_safety),
            };
            Ok((0..n)
                .into_par_iter()
                .map(|i| {
                    let v_d = scenario.domain.velocity_at(t, positions[i]);
                    let d = decide_di_with_positions(
                        i,
                        &di,
                        &positions,
                        &domain_now,
                        v_d,
                        params,
                        t_safety,
                        scenario.threshold,
                    );
                    ([d.u.x, d.u.y], d.mode)
                })
                .collect())
        }
        Model::FixedWing => {
            let fw: Vec<FwState> = states
                .iter()
                .map(|s| match s {
                    VehicleState::Fw(f) => *f,
                    VehicleState::Di(_) => unreachable!("model mismatch"),
                })
                .collect();
            let di: Vec<DiState> = fw.iter().map(|s| s.as_di()).collect();
            let limits = scenario.limits.expect("validated");
            let safety = grid.map(|g| (g, scenario.t_safety));
            (0..n)
                .into_par_iter()
                .map(|i| {
                    let v_d = scenario.domain.velocity_at(t, positions[i]);
                    decide_fw_with(
                        i,
                        &fw,
                        &di,
                        &positions,
                        &domain_now,
                        v_d,
                        params,
                        &limits,
                        safety,
                        scenario.dt,
                    )
                    .map(|d| ([d.u.0, d.u.1], d.mode))
                })
                .collect()
        }
    }
}

fn advance(
    scenario: &Scenario,
    states: &[VehicleState],
    controls: &[Control],
) -> Result<Vec<VehicleState>> {
    let v_max = if scenario.threshold {
        scenario.params.v_max
    } else {
        f64::INFINITY
    };
    states
        .iter()
        .zip(controls)
        .map(|(s, (u, _))| match s {
            VehicleState::Di(d) => {
                step_di(*d, Vec2::new(u[0], u[1]), scenario.dt, v_max).map(VehicleState::Di)
            }
            VehicleState::Fw(f) => step_fw(
                *f,
                (u[0], u[1]),
                scenario.dt,
                &scenario.limits.expect("validated"),
            )
            .map(VehicleState::Fw),
        })
        .collect()
}

fn as_di(states: &[VehicleState]) -> Vec<DiState> {
    states
        .iter()
        .map(|s| DiState::new(s.position(), s.velocity()))
        .collect()
}

fn step_metrics(
    scenario: &Scenario,
    states: &[VehicleState],
    controls: &[Control],
    t: f64,
) -> StepMetrics {
    let di = as_di(states);
    let domain_now = scenario.domain.at(t);
    let v_d = scenario.domain.marker_velocity(t);
    let positions: Vec<Vec2> = di.iter().map(|s| s.p).collect();
    let (flock_pos_sum, flock_vel_sum) = flocking_sums(&di, scenario.domain.marker_at(t), v_d);
    StepMetrics {
        t,
        energy: energy(&di, &domain_now, &scenario.params, v_d),
        energy_rate_predicted: energy_rate(&di, &scenario.params, v_d),
        flock_pos_sum,
        flock_vel_sum,
        min_pairwise: if positions.len() > 1 {
            min_pairwise(&positions)
        } else {
            0.0
        },
        max_signed_dist: max_signed_distance(&positions, &domain_now),
        active_conflicts: controls
            .iter()
            .filter(|(_, m)| matches!(m, Mode::Avoid(_)))
            .count(),
    }
}

fn summarize(
    scenario: &Scenario,
    states: &[VehicleState],
    metrics: &[StepMetrics],
    collisions: &CollisionLog,
    t_final: f64,
    started: Instant,
) -> Summary {
    let positions: Vec<Vec2> = states.iter().map(|s| s.position()).collect();
    let domain_final = scenario.domain.at(t_final);
    let r = scenario.params.r_d;
    let asym = is_r_subcover(&positions, &domain_final, r, COVER_TOL_ASYMPTOTIC);
    let exact = is_r_subcover(&positions, &domain_final, r, COVER_TOL_EXACT);
    let last = metrics.last().expect("at least one step");
    let max_rel_speed = states
        .iter()
        .map(|s| (s.velocity() - scenario.domain.velocity_at(t_final, s.position())).norm())
        .fold(0.0, f64::max);
    Summary {
        name: scenario.name.clone(),
        model: scenario.model,
        n: scenario.n,
        dt: scenario.dt,
        t_end: scenario.t_end,
        steps: scenario.steps(),
        seed: scenario.seed,
        r_d: r,
        collision_events: collisions.count(),
        final_cover: asym.ok,
        final_cover_exact: exact.ok,
        final_min_pairwise: asym.min_pairwise,
        final_max_signed_dist: asym.max_signed_dist,
        final_flock_pos_sum: last.flock_pos_sum,
        final_flock_vel_sum: last.flock_vel_sum,
        final_max_rel_speed: max_rel_speed,
        final_energy: last.energy,
        wall_time_s: started.elapsed().as_secs_f64(),
    }
}
