//! Artificial-potential and alignment force laws of the coverage controller.
//!
//! The inter-vehicle force `f_I` and vehicle-domain force `f_h` are the exact
//! derivatives of the piecewise quadratic potentials `V_I` and `V_h`, so the
//! coverage control is the negative gradient of the potential energy plus
//! velocity alignment terms.

use serde::{Deserialize, Serialize};

use crate::dynamics::DiState;
use crate::error::{Error, Result};
use crate::geometry::Polygon;
use crate::vec2::Vec2;

/// Controller gains and ranges.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoverageParams {
    /// Slope of `f_I` on `[0, r_d]` (s⁻²).
    pub a_i: f64,
    /// Slope of `f_h` on `[-r_d/2, ∞)` (s⁻²).
    pub a_h: f64,
    /// Vehicle-domain alignment (braking when the domain is static) gain.
    pub a_v: f64,
    /// Inter-vehicle alignment strength.
    #[serde(default)]
    pub c_al: f64,
    /// Inter-vehicle alignment range (m).
    #[serde(default = "default_l_al")]
    pub l_al: f64,
    /// Desired spacing (m).
    pub r_d: f64,
    /// Collision radius (m).
    pub c_r: f64,
    pub u_max: f64,
    pub v_max: f64,
}

fn default_l_al() -> f64 {
    1.0
}

impl CoverageParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("a_i", self.a_i),
            ("a_h", self.a_h),
            ("a_v", self.a_v),
            ("r_d", self.r_d),
            ("c_r", self.c_r),
            ("u_max", self.u_max),
            ("v_max", self.v_max),
        ];
        for (name, v) in positive {
            if !(v > 0.0) {
                return Err(Error::InvalidParams(format!("{name} must be > 0, got {v}")));
            }
        }
        if !(self.c_al >= 0.0) || !(self.l_al >= 0.0) {
            return Err(Error::InvalidParams("c_al and l_al must be >= 0".into()));
        }
        if self.c_al > 0.0 && self.l_al == 0.0 {
            return Err(Error::InvalidParams("l_al must be > 0 when c_al > 0".into()));
        }
        if self.c_r >= self.r_d {
            return Err(Error::InvalidParams(format!(
                "collision radius {} must be below the desired spacing {}",
                self.c_r, self.r_d
            )));
        }
        Ok(())
    }

    /// Inter-vehicle force magnitude; negative (repulsive) below `r_d`.
    #[inline]
    pub fn f_i(&self, r: f64) -> f64 {
        if r < self.r_d {
            self.a_i * (r - self.r_d)
        } else {
            0.0
        }
    }

    /// Vehicle-domain force magnitude as a function of signed distance.
    #[inline]
    pub fn f_h(&self, s: f64) -> f64 {
        let cut = -0.5 * self.r_d;
        if s > cut {
            self.a_h * (s - cut)
        } else {
            0.0
        }
    }

    /// Cucker-Smale communication weight `C_al exp(-r / l_al)`.
    #[inline]
    pub fn f_al(&self, r: f64) -> f64 {
        if self.c_al == 0.0 {
            0.0
        } else {
            self.c_al * (-r / self.l_al).exp()
        }
    }

    /// Pair potential `V_I(p_ij)`.
    pub fn potential_vi(&self, p_ij: Vec2) -> f64 {
        let r = p_ij.norm();
        if r < self.r_d {
            0.5 * self.a_i * (r - self.r_d).powi(2)
        } else {
            0.0
        }
    }

    /// Domain potential `V_h(p)` with respect to `poly`.
    pub fn potential_vh(&self, p: Vec2, poly: &Polygon) -> f64 {
        self.potential_vh_at(poly.signed_distance(p))
    }

    pub(crate) fn potential_vh_at(&self, s: f64) -> f64 {
        let shifted = s + 0.5 * self.r_d;
        if shifted > 0.0 {
            0.5 * self.a_h * shifted * shifted
        } else {
            0.0
        }
    }
}

/// Diagnostic flags raised while assembling a force.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ForceFlags {
    /// Some pair `j` sat exactly on vehicle `i`; its repulsion was dropped.
    pub coincident: bool,
    /// Vehicle `i` sat exactly on the boundary; the domain term was dropped.
    pub on_boundary: bool,
}

/// Gradient part of the coverage force on vehicle `i`: inter-vehicle
/// repulsion and vehicle-domain attraction/repulsion.
pub fn potential_force(
    i: usize,
    positions: &[Vec2],
    domain_now: &Polygon,
    params: &CoverageParams,
) -> (Vec2, ForceFlags) {
    let mut flags = ForceFlags::default();
    let pi = positions[i];
    let mut u = Vec2::ZERO;
    for (j, &pj) in positions.iter().enumerate() {
        if j == i {
            continue;
        }
        let p_ij = pi - pj;
        let r = p_ij.norm();
        if r == 0.0 {
            flags.coincident = true;
            continue;
        }
        let f = params.f_i(r);
        if f != 0.0 {
            u -= p_ij * (f / r);
        }
    }
    let pr = domain_now.project(pi);
    if pr.is_degenerate() {
        flags.on_boundary = true;
    } else {
        u -= pr.outward * params.f_h(pr.signed_distance);
    }
    (u, flags)
}

/// Full coverage force with alignment on vehicle `i`. `domain_velocity` is
/// the velocity the vehicle should match (the domain velocity `v_d`).
///
/// This is the raw force; input bounds are applied by the policy.
pub fn coverage_force(
    i: usize,
    states: &[DiState],
    domain_now: &Polygon,
    domain_velocity: Vec2,
    params: &CoverageParams,
) -> (Vec2, ForceFlags) {
    let positions: Vec<Vec2> = states.iter().map(|s| s.p).collect();
    coverage_force_with_positions(i, states, &positions, domain_now, domain_velocity, params)
}

pub(crate) fn coverage_force_with_positions(
    i: usize,
    states: &[DiState],
    positions: &[Vec2],
    domain_now: &Polygon,
    domain_velocity: Vec2,
    params: &CoverageParams,
) -> (Vec2, ForceFlags) {
    let (mut u, flags) = potential_force(i, positions, domain_now, params);
    let si = states[i];
    if params.c_al != 0.0 {
        for (j, sj) in states.iter().enumerate() {
            if j == i {
                continue;
            }
            let w = params.f_al((si.p - sj.p).norm());
            u -= (si.v - sj.v) * w;
        }
    }
    u -= (si.v - domain_velocity) * params.a_v;
    (u, flags)
}
