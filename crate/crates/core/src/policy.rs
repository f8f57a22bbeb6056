//! Per-vehicle control logic: conflict scan, safety/coverage switching and
//! input thresholding.

use crate::coverage::{coverage_force_with_positions, CoverageParams, ForceFlags};
use crate::dynamics::{DiState, FwLimits, FwState};
use crate::error::{Error, Result};
use crate::geometry::Polygon;
use crate::hj_grid::{relative_state, ValueGrid};
use crate::safety::{optimal_avoid_control, psi, RelativeState};
use crate::vec2::Vec2;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Coverage,
    /// Avoiding the given vehicle index.
    Avoid(usize),
}

impl Mode {
    pub fn label(&self) -> String {
        match self {
            Mode::Coverage => "coverage".to_string(),
            Mode::Avoid(j) => format!("avoid:{j}"),
        }
    }
}

/// Anomalies met while deciding; none of them aborts the step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct DecisionFlags {
    pub force: ForceFlags,
    /// A conflict was detected but its avoidance control was undefined, so
    /// the coverage control was used instead.
    pub avoidance_fallback: bool,
    /// Some pair fell outside the value grid and was ignored.
    pub grid_out_of_bounds: bool,
    /// The grid control had no switching information (zero control).
    pub grid_degenerate: bool,
    /// The commanded speed rate was cut to keep the speed in range.
    pub speed_floored: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ControlDecision<U> {
    pub u: U,
    pub mode: Mode,
    pub flags: DecisionFlags,
}

/// Double-integrator decision: Cartesian acceleration.
pub type DiDecision = ControlDecision<Vec2>;
/// Fixed-wing decision: `(u_θ, u_s)`.
pub type FwDecision = ControlDecision<(f64, f64)>;

/// Scales `u` down to norm `u_max` when it is longer; shorter inputs pass
/// through unchanged.
pub fn threshold_di(u: Vec2, u_max: f64) -> Vec2 {
    let n = u.norm();
    if n > u_max {
        u * (u_max / n)
    } else {
        u
    }
}

/// Double-integrator decision for vehicle `i`. `t_safety = None` disables
/// the safety layer; `threshold = false` returns the raw force.
pub fn decide_di(
    i: usize,
    states: &[DiState],
    domain_now: &Polygon,
    domain_velocity: Vec2,
    params: &CoverageParams,
    t_safety: Option<f64>,
    threshold: bool,
) -> DiDecision {
    let positions: Vec<Vec2> = states.iter().map(|s| s.p).collect();
    decide_di_with_positions(
        i,
        states,
        &positions,
        domain_now,
        domain_velocity,
        params,
        t_safety,
        threshold,
    )
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn decide_di_with_positions(
    i: usize,
    states: &[DiState],
    positions: &[Vec2],
    domain_now: &Polygon,
    domain_velocity: Vec2,
    params: &CoverageParams,
    t_safety: Option<f64>,
    threshold: bool,
) -> DiDecision {
    let mut flags = DecisionFlags::default();
    if let Some(t_s) = t_safety {
        let si = states[i];
        for (j, sj) in states.iter().enumerate() {
            if j == i {
                continue;
            }
            let z = RelativeState::new(si.p - sj.p, si.v - sj.v);
            if psi(&z, params.c_r) > t_s {
                continue;
            }
            match optimal_avoid_control(&z, params.c_r, params.u_max) {
                Ok(u) => {
                    return ControlDecision {
                        u,
                        mode: Mode::Avoid(j),
                        flags,
                    }
                }
                Err(e) => {
                    log::debug!("vehicle {i}: avoidance of {j} undefined ({e}), using coverage");
                    flags.avoidance_fallback = true;
                    break;
                }
            }
        }
    }
    let (raw, force) =
        coverage_force_with_positions(i, states, positions, domain_now, domain_velocity, params);
    flags.force = force;
    let u = if threshold {
        threshold_di(raw, params.u_max)
    } else {
        raw
    };
    ControlDecision {
        u,
        mode: Mode::Coverage,
        flags,
    }
}

/// Inverts `p̈ = R(θ, s) (u_θ, u_s)` with
/// `R = [[−s sin θ, cos θ], [s cos θ, sin θ]]`.
pub fn fixed_wing_from_cartesian(theta: f64, s: f64, a: Vec2) -> Result<(f64, f64)> {
    if s == 0.0 {
        return Err(Error::SingularTransform);
    }
    let (sin, cos) = theta.sin_cos();
    Ok(((-sin * a.x + cos * a.y) / s, cos * a.x + sin * a.y))
}

/// Cartesian acceleration produced by `(u_θ, u_s)`.
pub fn cartesian_from_fixed_wing(theta: f64, s: f64, u: (f64, f64)) -> Vec2 {
    let (sin, cos) = theta.sin_cos();
    Vec2::new(-s * sin * u.0 + cos * u.1, s * cos * u.0 + sin * u.1)
}

/// Uniformly shrinks `u` into the input box. Inputs already inside are
/// returned unchanged, so the Cartesian direction is always preserved.
pub fn threshold_fw(u: (f64, f64), limits: &FwLimits) -> (f64, f64) {
    let ratio = |bound: f64, x: f64| if x == 0.0 { f64::INFINITY } else { bound / x.abs() };
    let tau = ratio(limits.u_theta_max, u.0)
        .min(ratio(limits.u_s_max, u.1))
        .min(1.0);
    if tau == 1.0 {
        u
    } else {
        (u.0 * tau, u.1 * tau)
    }
}

/// Cuts `u_s` so that one step of length `dt` keeps the speed in range.
fn floor_speed_rate(s: f64, u_s: f64, dt: f64, limits: &FwLimits) -> (f64, bool) {
    let next = s + u_s * dt;
    if next < limits.s_min {
        (((limits.s_min - s) / dt).min(0.0), true)
    } else if next > limits.s_max {
        (((limits.s_max - s) / dt).max(0.0), true)
    } else {
        (u_s, false)
    }
}

/// Fixed-wing decision for vehicle `i`. With a value grid, the first
/// vehicle `j` (ascending) whose time-to-reach is at most `t_safety`
/// triggers the grid's avoidance control.
#[allow(clippy::too_many_arguments)]
pub fn decide_fw(
    i: usize,
    states: &[FwState],
    domain_now: &Polygon,
    domain_velocity: Vec2,
    params: &CoverageParams,
    limits: &FwLimits,
    safety: Option<(&ValueGrid, f64)>,
    dt: f64,
) -> Result<FwDecision> {
    let di: Vec<DiState> = states.iter().map(|s| s.as_di()).collect();
    let positions: Vec<Vec2> = di.iter().map(|s| s.p).collect();
    decide_fw_with(i, states, &di, &positions, domain_now, domain_velocity, params, limits, safety, dt)
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn decide_fw_with(
    i: usize,
    states: &[FwState],
    di: &[DiState],
    positions: &[Vec2],
    domain_now: &Polygon,
    domain_velocity: Vec2,
    params: &CoverageParams,
    limits: &FwLimits,
    safety: Option<(&ValueGrid, f64)>,
    dt: f64,
) -> Result<FwDecision> {
    let mut flags = DecisionFlags::default();
    let me = states[i];
    let mut chosen = None;
    if let Some((grid, t_safety)) = safety {
        for (j, other) in states.iter().enumerate() {
            if j == i {
                continue;
            }
            let x = relative_state(&me, other);
            let phi = match grid.query(&x) {
                Ok(v) => v,
                Err(Error::OutOfBounds { .. }) => {
                    flags.grid_out_of_bounds = true;
                    continue;
                }
                Err(e) => return Err(e),
            };
            if phi > t_safety {
                continue;
            }
            match grid.optimal_control(&x) {
                Ok(c) => {
                    flags.grid_degenerate = c.degenerate;
                    chosen = Some((c.u_theta, c.u_s, Mode::Avoid(j)));
                }
                Err(e) => {
                    log::debug!("vehicle {i}: grid avoidance of {j} undefined ({e}), using coverage");
                    flags.avoidance_fallback = true;
                }
            }
            break;
        }
    }
    let (u_theta, u_s, mode) = match chosen {
        Some(c) => c,
        None => {
            let (a, force) =
                coverage_force_with_positions(i, di, positions, domain_now, domain_velocity, params);
            flags.force = force;
            let raw = fixed_wing_from_cartesian(me.theta, me.s, a)?;
            let (ut, us) = threshold_fw(raw, limits);
            (ut, us, Mode::Coverage)
        }
    };
    let (u_s, floored) = floor_speed_rate(me.s, u_s, dt, limits);
    flags.speed_floored = floored;
    Ok(ControlDecision {
        u: (u_theta, u_s),
        mode,
        flags,
    })
}
