//! Vehicle models and fixed-step RK4 integration with zero-order-hold inputs.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vec2::Vec2;

/// Double-integrator state.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DiState {
    pub p: Vec2,
    pub v: Vec2,
}

impl DiState {
    pub fn new(p: Vec2, v: Vec2) -> Self {
        Self { p, v }
    }

    pub fn at_rest(p: Vec2) -> Self {
        Self { p, v: Vec2::ZERO }
    }
}

/// Planar fixed-wing (unicycle with speed state) state.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FwState {
    pub p: Vec2,
    /// Heading in `[0, 2π)`.
    pub theta: f64,
    /// Forward speed.
    pub s: f64,
}

impl FwState {
    pub fn new(p: Vec2, theta: f64, s: f64) -> Self {
        Self {
            p,
            theta: wrap_angle(theta),
            s,
        }
    }

    pub fn velocity(&self) -> Vec2 {
        Vec2::from_angle(self.theta) * self.s
    }

    pub fn as_di(&self) -> DiState {
        DiState::new(self.p, self.velocity())
    }
}

/// Speed and input limits of the fixed-wing model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FwLimits {
    pub s_min: f64,
    pub s_max: f64,
    pub u_theta_max: f64,
    pub u_s_max: f64,
}

impl FwLimits {
    pub fn validate(&self) -> Result<()> {
        if !(self.s_min > 0.0 && self.s_max > self.s_min) {
            return Err(Error::InvalidParams(format!(
                "need 0 < s_min < s_max, got [{}, {}]",
                self.s_min, self.s_max
            )));
        }
        if !(self.u_theta_max > 0.0 && self.u_s_max > 0.0) {
            return Err(Error::InvalidParams("input bounds must be > 0".into()));
        }
        Ok(())
    }

    #[inline]
    pub fn clamp_speed(&self, s: f64) -> f64 {
        s.clamp(self.s_min, self.s_max)
    }
}

/// Wraps an angle into `[0, 2π)`.
#[inline]
pub fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(TAU);
    // rem_euclid rounds tiny negative inputs up to exactly 2π
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Radial projection onto the ball `||v|| <= v_max`.
#[inline]
pub fn cap_speed(v: Vec2, v_max: f64) -> Vec2 {
    let n = v.norm();
    if n > v_max {
        v * (v_max / n)
    } else {
        v
    }
}

/// One classical RK4 step of `ṗ = v, v̇ = u` with `u` held over the step,
/// followed by the speed cap.
pub fn step_di(state: DiState, u: Vec2, dt: f64, v_max: f64) -> Result<DiState> {
    if !(state.p.is_finite() && state.v.is_finite() && u.is_finite() && dt.is_finite()) {
        return Err(Error::NonFinite("step_di"));
    }
    let h = dt;
    // stage derivatives (dp, dv)
    let k1 = (state.v, u);
    let k2 = (state.v + k1.1 * (h / 2.0), u);
    let k3 = (state.v + k2.1 * (h / 2.0), u);
    let k4 = (state.v + k3.1 * h, u);
    let p = state.p + (k1.0 + k2.0 * 2.0 + k3.0 * 2.0 + k4.0) * (h / 6.0);
    let v = state.v + (k1.1 + k2.1 * 2.0 + k3.1 * 2.0 + k4.1) * (h / 6.0);
    Ok(DiState::new(p, cap_speed(v, v_max)))
}

#[derive(Clone, Copy)]
struct FwDeriv {
    dp: Vec2,
    dtheta: f64,
    ds: f64,
}

#[inline]
fn fw_rhs(theta: f64, s: f64, u: (f64, f64)) -> FwDeriv {
    FwDeriv {
        dp: Vec2::from_angle(theta) * s,
        dtheta: u.0,
        ds: u.1,
    }
}

/// One RK4 step of the fixed-wing model with `u = (u_θ, u_s)` held, then
/// the speed clamp and heading wrap.
pub fn step_fw(state: FwState, u: (f64, f64), dt: f64, limits: &FwLimits) -> Result<FwState> {
    if !(state.p.is_finite()
        && state.theta.is_finite()
        && state.s.is_finite()
        && u.0.is_finite()
        && u.1.is_finite()
        && dt.is_finite())
    {
        return Err(Error::NonFinite("step_fw"));
    }
    let h = dt;
    let k1 = fw_rhs(state.theta, state.s, u);
    let k2 = fw_rhs(state.theta + k1.dtheta * h / 2.0, state.s + k1.ds * h / 2.0, u);
    let k3 = fw_rhs(state.theta + k2.dtheta * h / 2.0, state.s + k2.ds * h / 2.0, u);
    let k4 = fw_rhs(state.theta + k3.dtheta * h, state.s + k3.ds * h, u);
    let p = state.p + (k1.dp + k2.dp * 2.0 + k3.dp * 2.0 + k4.dp) * (h / 6.0);
    let theta = state.theta + (k1.dtheta + 2.0 * k2.dtheta + 2.0 * k3.dtheta + k4.dtheta) * h / 6.0;
    let s = state.s + (k1.ds + 2.0 * k2.ds + 2.0 * k3.ds + k4.ds) * h / 6.0;
    Ok(FwState {
        p,
        theta: wrap_angle(theta),
        s: limits.clamp_speed(s),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn limits() -> FwLimits {
        FwLimits {
            s_min: 0.5,
            s_max: 10.0,
            u_theta_max: PI / 2.0,
            u_s_max: 3.0,
        }
    }

    #[test]
    fn ballistic_step_is_exact() {
        let s = DiState::new(Vec2::new(1.0, 2.0), Vec2::new(0.5, -0.25));
        let n = step_di(s, Vec2::ZERO, 0.5, 10.0).unwrap();
        assert_eq!(n.p, Vec2::new(1.25, 1.875));
        assert_eq!(n.v, s.v);
    }

    #[test]
    fn constant_acceleration_is_exact() {
        let n = step_di(DiState::default(), Vec2::new(1.0, 0.0), 1.0, 10.0).unwrap();
        assert_eq!(n.p, Vec2::new(0.5, 0.0));
        assert_eq!(n.v, Vec2::new(1.0, 0.0));
    }

    #[test]
    fn speed_cap_applies() {
        let s = DiState::new(Vec2::ZERO, Vec2::new(10.0, 0.0));
        let n = step_di(s, Vec2::new(3.0, 0.0), 0.01, 10.0).unwrap();
        assert!((n.v.norm() - 10.0).abs() < 1e-12);
        // idempotent projection
        assert_eq!(cap_speed(n.v, 10.0), n.v);
    }

    #[test]
    fn non_finite_rejected() {
        assert!(step_di(DiState::default(), Vec2::new(f64::NAN, 0.0), 0.1, 1.0).is_err());
        assert!(step_fw(FwState::new(Vec2::ZERO, 0.0, 1.0), (f64::INFINITY, 0.0), 0.1, &limits()).is_err());
    }

    #[test]
    fn straight_flight() {
        let n = step_fw(FwState::new(Vec2::ZERO, 0.0, 1.0), (0.0, 0.0), 1.0, &limits()).unwrap();
        assert_eq!(n.p, Vec2::new(1.0, 0.0));
        assert_eq!(n.theta, 0.0);
    }

    #[test]
    fn speed_clamped_at_max() {
        let n = step_fw(FwState::new(Vec2::ZERO, 0.0, 10.0), (0.0, 3.0), 0.1, &limits()).unwrap();
        assert_eq!(n.s, 10.0);
        assert_eq!(limits().clamp_speed(limits().clamp_speed(12.0)), limits().clamp_speed(12.0));
    }

    fn circle_error(dt: f64) -> f64 {
        // constant turn: closed form p(t) = (s/ω)(sin ωt, 1 − cos ωt)
        let (s0, w) = (2.0, 0.5);
        let t_end = 2.0 * PI / w;
        let steps = (t_end / dt).round() as usize;
        let mut st = FwState::new(Vec2::ZERO, 0.0, s0);
        for _ in 0..steps {
            st = step_fw(st, (w, 0.0), dt, &limits()).unwrap();
        }
        let t = steps as f64 * dt;
        let exact = Vec2::new((w * t).sin(), 1.0 - (w * t).cos()) * (s0 / w);
        (st.p - exact).norm()
    }

    #[test]
    fn circular_arc_closes_and_rk4_order() {
        let e1 = circle_error(0.2);
        let e2 = circle_error(0.1);
        assert!(e1 < 1e-3, "{e1}");
        let order = (e1 / e2).log2();
        assert!(order >= 3.9, "observed order {order}");
        // heading returns after one period
        let mut st = FwState::new(Vec2::ZERO, 0.0, 2.0);
        let steps = ((2.0 * PI / 0.5) / 0.01f64).round() as usize;
        for _ in 0..steps {
            st = step_fw(st, (0.5, 0.0), 0.01, &limits()).unwrap();
        }
        let want = wrap_angle(0.5 * 0.01 * steps as f64);
        assert!((st.theta - want).abs() < 1e-9, "{} vs {want}", st.theta);
    }

    #[test]
    fn wrap_angle_range() {
        assert_eq!(wrap_angle(-1e-18), 0.0);
        assert!((wrap_angle(-PI / 2.0) - 1.5 * PI).abs() < 1e-15);
        assert_eq!(wrap_angle(TAU), 0.0);
    }
}
