//! Scenario library. Initial line placements are fixed here so every run is
//! reproducible; they are chosen to look like the published experiments,
//! not to match them point by point.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use super::scenario::{HeadingRule, InitialCondition, Model, Safety, Scenario};
use crate::coverage::CoverageParams;
use crate::dynamics::FwLimits;
use crate::error::{Error, Result};
use crate::geometry::{Motion, MovingDomain, Polygon};
use crate::vec2::Vec2;

const NAMES: [&str; 6] = [
    "square",
    "triangle",
    "arrowhead",
    "circle",
    "fw_triangle",
    "fw_circle",
];

pub fn builtin_names() -> &'static [&'static str] {
    &NAMES
}

/// Looks up a builtin by name. `square_<n>` gives the square with `n`
/// vehicles.
pub fn builtin_scenario(name: &str) -> Result<Scenario> {
    let s = match name {
        "square" => builtin_square(16),
        "triangle" => triangle(),
        "arrowhead" => arrowhead(),
        "circle" => circle(),
        "fw_triangle" => fw_triangle(),
        "fw_circle" => fw_circle(),
        other => match other.strip_prefix("square_").and_then(|n| n.parse().ok()) {
            Some(n) if n > 0 => builtin_square(n),
            _ => return Err(Error::UnknownScenario(other.to_string())),
        },
    };
    s.validate()?;
    Ok(s)
}

fn base_params(r_d: f64) -> CoverageParams {
    CoverageParams {
        a_i: 1.0,
        a_h: 2.0,
        a_v: 0.2,
        c_al: 0.0,
        l_al: 1.0,
        r_d,
        c_r: 2.0,
        u_max: 3.0,
        v_max: 10.0,
    }
}

/// Static 20 m square with `n` vehicles starting on a line below it;
/// `r_d = sqrt(400 / n)`. The potential and damping gains are stiffer than
/// the moving-domain ones so the grid settles by `t = 50`.
pub fn builtin_square(n: usize) -> Scenario {
    let poly = Polygon::rectangle(0.0, 0.0, 20.0, 20.0).expect("valid square");
    let mut params = base_params((poly.area() / n as f64).sqrt());
    params.a_i = 5.0;
    params.a_h = 4.0;
    params.a_v = 0.4;
    Scenario {
        name: if n == 16 {
            "square".into()
        } else {
            format!("square_{n}")
        },
        model: Model::DoubleIntegrator,
        n,
        dt: 0.01,
        t_end: 50.0,
        seed: 0,
        t_safety: 5.0,
        safety: Safety::Analytic,
        threshold: true,
        record_every: 1,
        params,
        limits: None,
        domain: MovingDomain::stationary(poly),
        init: InitialCondition::Line {
            center: Vec2::new(10.0, -4.0),
            direction: Vec2::new(1.0, 0.0),
            spacing: 2.5,
            heading: HeadingRule::Random,
        },
    }
}

fn diagonal() -> Vec2 {
    Vec2::new(FRAC_1_SQRT_2, FRAC_1_SQRT_2)
}

/// Equilateral triangle of side `15√3` (area 292.28 m²) centered at the
/// origin with a vertex pointing along the diagonal.
fn big_triangle() -> Polygon {
    Polygon::equilateral(Vec2::ZERO, 15.0 * 3f64.sqrt(), PI / 4.0).expect("valid triangle")
}

fn triangle() -> Scenario {
    let mut params = base_params(5.4);
    params.c_al = 0.2;
    params.l_al = 7.79;
    Scenario {
        name: "triangle".into(),
        model: Model::DoubleIntegrator,
        n: 10,
        dt: 0.01,
        t_end: 60.0,
        seed: 0,
        t_safety: 5.0,
        safety: Safety::Analytic,
        threshold: true,
        record_every: 1,
        params,
        limits: None,
        domain: MovingDomain::new(
            big_triangle(),
            Motion::ConstantVelocity {
                velocity: diagonal(),
            },
        ),
        init: InitialCondition::Line {
            center: diagonal() * -15.0,
            direction: diagonal().perp(),
            spacing: 2.5,
            heading: HeadingRule::Random,
        },
    }
}

/// Non-convex arrow of area 225 m² pointing along +x: an 8 × 15 m shaft and
/// a 21 m wide, 10 m long head.
fn arrow() -> Polygon {
    Polygon::new(vec![
        Vec2::new(0.0, -4.0),
        Vec2::new(15.0, -4.0),
        Vec2::new(15.0, -10.5),
        Vec2::new(25.0, 0.0),
        Vec2::new(15.0, 10.5),
        Vec2::new(15.0, 4.0),
        Vec2::new(0.0, 4.0),
    ])
    .expect("valid arrow")
}

fn arrowhead() -> Scenario {
    let mut params = base_params(5.0);
    params.c_al = 0.1;
    params.l_al = 7.21;
    Scenario {
        name: "arrowhead".into(),
        model: Model::DoubleIntegrator,
        n: 9,
        dt: 0.01,
        t_end: 60.0,
        seed: 0,
        t_safety: 5.0,
        safety: Safety::Analytic,
        threshold: true,
        record_every: 1,
        params,
        limits: None,
        domain: MovingDomain::new(
            arrow(),
            Motion::ConstantVelocity {
                velocity: Vec2::new(1.0, 0.0),
            },
        ),
        init: InitialCondition::Line {
            center: Vec2::new(-10.0, 0.0),
            direction: Vec2::new(0.0, 1.0),
            spacing: 2.5,
            heading: HeadingRule::Random,
        },
    }
}

/// The domain centroid starts at `(radius, 0)` and circles the origin
/// counter-clockwise, turning with its path.
fn circling(poly: Polygon, radius: f64, angular_velocity: f64) -> MovingDomain {
    MovingDomain::new(
        poly.translated(Vec2::new(radius, 0.0)),
        Motion::CircularPath {
            center: Vec2::ZERO,
            radius,
            angular_velocity,
            rotate_with_heading: true,
        },
    )
}

fn circle() -> Scenario {
    let params = CoverageParams {
        a_i: 10.0,
        a_h: 10.0,
        a_v: 1.0,
        c_al: 1.2,
        l_al: 10.06,
        r_d: 6.97,
        c_r: 2.0,
        u_max: 3.0,
        v_max: 10.0,
    };
    Scenario {
        name: "circle".into(),
        model: Model::DoubleIntegrator,
        n: 6,
        dt: 0.01,
        t_end: 70.0,
        seed: 0,
        t_safety: 5.0,
        safety: Safety::Analytic,
        threshold: true,
        record_every: 1,
        params,
        limits: None,
        domain: circling(
            Polygon::equilateral(Vec2::ZERO, 15.0 * 3f64.sqrt(), PI / 2.0).expect("valid"),
            30.0,
            2.0 * PI / 40.0,
        ),
        init: InitialCondition::Line {
            center: Vec2::new(30.0, -25.0),
            direction: Vec2::new(1.0, 0.0),
            spacing: 2.5,
            heading: HeadingRule::Random,
        },
    }
}

fn fw_limits(s_max: f64) -> FwLimits {
    FwLimits {
        s_min: 0.5,
        s_max,
        u_theta_max: PI / 2.0,
        u_s_max: 3.0,
    }
}

/// Horizon for grid conflicts. The coarse default grid overestimates the
/// time to reach near the capture set, so the horizon is longer than the
/// double-integrator one.
const FW_T_SAFETY: f64 = 10.0;

/// Fixed-wing vehicles start further apart than double integrators: at
/// `s_min` with random headings they cannot turn away from a neighbour
/// 2.5 m off.
const FW_SPACING: f64 = 4.0;

fn fw_triangle() -> Scenario {
    let mut s = triangle();
    s.name = "fw_triangle".into();
    s.model = Model::FixedWing;
    s.t_end = 48.0;
    s.t_safety = FW_T_SAFETY;
    s.safety = Safety::Grid { path: None };
    s.limits = Some(fw_limits(10.0));
    if let InitialCondition::Line { spacing, .. } = &mut s.init {
        *spacing = FW_SPACING;
    }
    s
}

fn fw_circle() -> Scenario {
    let params = CoverageParams {
        a_i: 5.0,
        a_h: 2.7,
        a_v: 1.2,
        c_al: 1.5,
        l_al: 3.679,
        r_d: 3.489,
        c_r: 2.0,
        u_max: 3.0,
        v_max: 10.0,
    };
    Scenario {
        name: "fw_circle".into(),
        model: Model::FixedWing,
        n: 6,
        dt: 0.01,
        t_end: 70.0,
        seed: 0,
        t_safety: FW_T_SAFETY,
        safety: Safety::Grid { path: None },
        threshold: true,
        record_every: 1,
        params,
        limits: Some(fw_limits(5.0)),
        domain: circling(
            Polygon::equilateral(Vec2::ZERO, 7.5 * 3f64.sqrt(), PI / 2.0).expect("valid"),
            30.0,
            3.0 * PI / 80.0,
        ),
        init: InitialCondition::Line {
            center: Vec2::new(30.0, -10.0),
            direction: Vec2::new(1.0, 0.0),
            spacing: FW_SPACING,
            heading: HeadingRule::Random,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_builtins_validate() {
        for name in builtin_names() {
            let s = builtin_scenario(name).unwrap();
            assert_eq!(&s.name, name);
        }
        assert!(builtin_scenario("nope").is_err());
    }

    #[test]
    fn caption_values() {
        let sq = builtin_scenario("square").unwrap();
        assert_eq!((sq.n, sq.params.r_d, sq.domain.base().area()), (16, 5.0, 400.0));

        let tri = builtin_scenario("triangle").unwrap();
        assert!((tri.domain.base().area() - 292.28).abs() < 0.01);
        assert_eq!(tri.domain.inertial_velocity(), Some(diagonal()));

        let arrow = builtin_scenario("arrowhead").unwrap();
        assert!((arrow.domain.base().area() - 225.0).abs() < 1e-9);
        assert_eq!((arrow.n, arrow.params.r_d, arrow.params.c_al, arrow.params.l_al), (9, 5.0, 0.1, 7.21));

        let fw = builtin_scenario("fw_circle").unwrap();
        assert!((fw.domain.base().area() - 73.07).abs() < 0.01);
        assert_eq!(fw.limits.unwrap().s_max, 5.0);
        assert_eq!((fw.n, fw.params.r_d), (6, 3.489));
    }
}
