use proptest::prelude::*;

use safecover::sim::{self, builtin_scenario, InitialCondition, Safety, Scenario, VehicleState};
use safecover::Vec2;

fn shift_start(s: &mut Scenario, dx: f64, dy: f64) {
    if let InitialCondition::Line { center, .. } = &mut s.init {
        *center += Vec2::new(dx, dy);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn thresholded_runs_respect_bounds(dx in -5.0..5.0, dy in -5.0..5.0, safety in any::<bool>()) {
        let mut s = builtin_scenario("triangle").unwrap();
        shift_start(&mut s, dx, dy);
        s.t_end = 8.0;
        if !safety {
            s.safety = Safety::Off;
        }
        let out = sim::run(&s).unwrap();
        for r in &out.trajectory {
            let u = (r.u[0].powi(2) + r.u[1].powi(2)).sqrt();
            prop_assert!(u <= s.params.u_max * (1.0 + 1e-12));
            prop_assert!(r.state.velocity().norm() <= s.params.v_max * (1.0 + 1e-12));
        }
    }

    #[test]
    fn fixed_wing_inputs_and_speeds_stay_in_limits(seed in 0u64..1000) {
        let mut s = builtin_scenario("fw_triangle").unwrap();
        s.safety = Safety::Off;
        s.seed = seed;
        s.t_end = 8.0;
        let l = s.limits.unwrap();
        let out = sim::run(&s).unwrap();
        for r in &out.trajectory {
            let VehicleState::Fw(f) = r.state else { unreachable!() };
            prop_assert!(f.s >= l.s_min - 1e-9 && f.s <= l.s_max + 1e-9);
            prop_assert!(r.u[0].abs() <= l.u_theta_max * (1.0 + 1e-12));
            prop_assert!(r.u[1].abs() <= l.u_s_max * (1.0 + 1e-12));
        }
    }

    #[test]
    fn collision_events_are_well_formed(dx in -3.0..3.0, dy in -3.0..3.0) {
        let mut s = builtin_scenario("square_9").unwrap();
        s.safety = Safety::Off;
        shift_start(&mut s, dx, dy);
        s.t_end = 10.0;
        let out = sim::run(&s).unwrap();
        for e in out.collisions.events() {
            prop_assert!(e.i < e.j && e.j < s.n);
            if let Some(end) = e.t_end {
                prop_assert!(end > e.t_start);
            }
        }
        let min = out.metrics.iter().map(|m| m.min_pairwise).fold(f64::INFINITY, f64::min);
        prop_assert_eq!(out.collisions.count() == 0, min > s.params.c_r);
    }
}
