//! Closed-form time-to-collision for the double-integrator relative game.
//!
//! With both vehicles bounded by the same `u_max`, the pursuer's worst case is
//! to copy the evader's acceleration, which freezes the relative velocity. The
//! time to reach the collision disk is then the smaller root of
//! `|v|² ψ² + 2 (p·v) ψ + |p|² − c_r² = 0`.

use crate::error::{Error, Result};
use crate::vec2::Vec2;

/// Relative state of an evader `i` with respect to a pursuer `j`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RelativeState {
    /// `p_i − p_j`
    pub p: Vec2,
    /// `v_i − v_j`
    pub v: Vec2,
}

impl RelativeState {
    pub fn new(p: Vec2, v: Vec2) -> Self {
        Self { p, v }
    }
}

/// Denominators below this are treated as a tangent encounter.
pub const TANGENT_EPS: f64 = 1e-12;

/// Time until the relative position enters the disk of radius `c_r`, or
/// `+∞` when no collision happens under the copy strategy.
pub fn psi(z: &RelativeState, c_r: f64) -> f64 {
    let pp = z.p.norm_sq();
    let c = pp - c_r * c_r;
    if c <= 0.0 {
        return 0.0;
    }
    let vv = z.v.norm_sq();
    let b = z.p.dot(z.v);
    // b >= 0 means both roots are non-positive (their product c/vv > 0 and
    // their sum -2b/vv <= 0), which also covers vv = 0.
    if vv == 0.0 || b >= 0.0 {
        return f64::INFINITY;
    }
    let disc = b * b - vv * c;
    if disc < 0.0 {
        return f64::INFINITY;
    }
    // (-b - sqrt(disc)) / vv, rewritten to avoid cancellation
    c / (-b + disc.sqrt())
}

/// Shared denominator `|v|² ψ + p·v` of the implicit derivatives.
fn denominator(z: &RelativeState, psi: f64) -> f64 {
    z.v.norm_sq() * psi + z.p.dot(z.v)
}

/// Gradient of ψ with respect to the relative velocity.
pub fn psi_grad_v(z: &RelativeState, c_r: f64) -> Result<Vec2> {
    let t = psi(z, c_r);
    grad_v_at(z, t)
}

fn grad_v_at(z: &RelativeState, t: f64) -> Result<Vec2> {
    if !t.is_finite() {
        return Err(Error::Degenerate("no collision ahead"));
    }
    if t <= 0.0 {
        return Err(Error::Degenerate("already inside the collision radius"));
    }
    let den = denominator(z, t);
    if den.abs() < TANGENT_EPS {
        return Err(Error::Degenerate("tangent encounter"));
    }
    Ok((z.v * (t * t) + z.p * t) * (-1.0 / den))
}

/// Gradient of ψ with respect to the relative position.
pub fn psi_grad_p(z: &RelativeState, c_r: f64) -> Result<Vec2> {
    let t = psi(z, c_r);
    if !t.is_finite() || t <= 0.0 {
        return Err(Error::Degenerate("gradient undefined outside the capture set"));
    }
    let den = denominator(z, t);
    if den.abs() < TANGENT_EPS {
        return Err(Error::Degenerate("tangent encounter"));
    }
    Ok((z.v * t + z.p) * (-1.0 / den))
}

/// The evader's time-maximizing acceleration, `u_max` along `∂ψ/∂v`.
pub fn optimal_avoid_control(z: &RelativeState, c_r: f64, u_max: f64) -> Result<Vec2> {
    let g = psi_grad_v(z, c_r)?;
    g.normalized()
        .map(|d| d * u_max)
        .ok_or(Error::Degenerate("zero velocity gradient"))
}
