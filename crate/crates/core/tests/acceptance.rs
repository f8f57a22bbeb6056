//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero when a criterion outside `KNOWN_FAILING` fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use safecover::dynamics::{DiState, FwLimits};
use safecover::hj_grid::{self, HjProblem, SolveOptions, ValueGrid};
use safecover::metrics::{energy, is_r_subcover, min_pairwise};
use safecover::policy::{cartesian_from_fixed_wing, fixed_wing_from_cartesian, threshold_fw};
use safecover::safety::{optimal_avoid_control, psi, psi_grad_p, psi_grad_v, RelativeState};
use safecover::sim::{
    self, builtin_scenario, builtin_square, InitialCondition, RunOutput, Safety, Scenario,
    VehicleState,
};
use safecover::{Motion, Vec2};

/// Criteria that do not hold with the current controller; see the README.
const KNOWN_FAILING: &[&str] = &["circular path centripetal"];

struct Outcome {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn outcome(name: &'static str, pass: bool, detail: String) -> Outcome {
    Outcome { name, pass, detail }
}

fn rel(p: Vec2, v: Vec2) -> RelativeState {
    RelativeState::new(p, v)
}

fn uniform_in_disk(rng: &mut ChaCha8Rng, radius: f64) -> Vec2 {
    let r = radius * rng.gen::<f64>().sqrt();
    Vec2::from_angle(rng.gen_range(0.0..2.0 * PI)) * r
}

/// First time `|p + v t| <= c_r` on `[0, horizon]`, found by marching
/// 10 ms segments, testing each for a hit at its closest point, then
/// bisecting the entry.
fn brute_force_hit(z: &RelativeState, c_r: f64, horizon: f64) -> Option<f64> {
    let inside = |t: f64| (z.p + z.v * t).norm() <= c_r;
    if inside(0.0) {
        return Some(0.0);
    }
    let h = 1e-2;
    let steps = (horizon / h).ceil() as usize;
    for k in 0..steps {
        let (a, b) = (k as f64 * h, (k + 1) as f64 * h);
        let vv = z.v.norm_sq();
        let t_min = if vv > 0.0 {
            (-(z.p.dot(z.v)) / vv).clamp(a, b)
        } else {
            a
        };
        let hit = if inside(b) {
            Some(b)
        } else if inside(t_min) {
            Some(t_min)
        } else {
            None
        };
        if let Some(mut hi) = hit {
            let mut lo = a;
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if inside(mid) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return Some(hi);
        }
    }
    None
}

fn psi_oracle() -> Outcome {
    let name = "analytic time-to-collision vs brute force";
    let started = Instant::now();
    let c_r = 2.0;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (mut finite, mut worst, mut bad) = (0usize, 0.0f64, 0usize);
    for k in 0..10_000 {
        let p = uniform_in_disk(&mut rng, 50.0);
        // Every other state is aimed near the origin so both outcomes are
        // well represented.
        let v = if k % 2 == 0 {
            uniform_in_disk(&mut rng, 20.0)
        } else {
            let aim = uniform_in_disk(&mut rng, 3.0) - p;
            aim.normalized().unwrap_or(Vec2::new(1.0, 0.0)) * rng.gen_range(0.0..20.0)
        };
        let z = rel(p, v);
        let t = psi(&z, c_r);
        if t.is_finite() {
            finite += 1;
            match brute_force_hit(&z, c_r, t.max(60.0) + 1.0) {
                Some(o) => worst = worst.max((o - t).abs()),
                None => bad += 1,
            }
        } else if brute_force_hit(&z, c_r, 60.0).is_some() {
            bad += 1;
        }
    }
    let secs = started.elapsed().as_secs_f64();
    let pass = bad == 0 && worst < 1e-6 && secs < 10.0;
    outcome(
        name,
        pass,
        format!("10000 states, {finite} finite, max |dt| {worst:.2e} s, {bad} mismatches, {secs:.1} s"),
    )
}

fn hji_residual() -> Outcome {
    let name = "HJI residual of analytic time-to-collision";
    let (c_r, u_max) = (2.0, 3.0);
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let (mut n, mut worst_pde, mut worst_quad, mut worst_ctrl) = (0, 0.0f64, 0.0f64, 0.0f64);
    while n < 1000 {
        let p = uniform_in_disk(&mut rng, 50.0);
        let aim = uniform_in_disk(&mut rng, 1.9) - p;
        let v = aim.normalized().unwrap_or(Vec2::new(1.0, 0.0)) * rng.gen_range(0.1..20.0);
        let z = rel(p, v);
        let t = psi(&z, c_r);
        let (Ok(gp), Ok(gv)) = (psi_grad_p(&z, c_r), psi_grad_v(&z, c_r)) else {
            continue;
        };
        if !(t.is_finite() && t > 1e-3) {
            continue;
        }
        n += 1;
        // −∇ψ·f − 1 with f = (v, u − d): the u and d terms separate, so the
        // inner min over |u| ≤ u_max and max over |d| ≤ u_max are closed form.
        let min_u = -u_max * gv.norm();
        let max_d = u_max * gv.norm();
        let residual = -gp.dot(v) + min_u + max_d - 1.0;
        worst_pde = worst_pde.max(residual.abs());
        // The crate's avoidance input must attain the minimum.
        let u = optimal_avoid_control(&z, c_r, u_max).expect("finite gradient");
        worst_ctrl = worst_ctrl.max((-gv.dot(u) - min_u).abs());
        let q = v.norm_sq() * t * t + 2.0 * p.dot(v) * t + p.norm_sq() - c_r * c_r;
        let scale = v.norm_sq() * t * t + 2.0 * p.dot(v).abs() * t + p.norm_sq() + c_r * c_r;
        worst_quad = worst_quad.max(q.abs() / scale);
    }
    let pass = worst_pde < 1e-6 && worst_quad < 1e-9 && worst_ctrl < 1e-9;
    outcome(
        name,
        pass,
        format!(
            "1000 states, max PDE residual {worst_pde:.2e}, quadratic {worst_quad:.2e}, control gap {worst_ctrl:.2e}"
        ),
    )
}

fn run(s: &Scenario) -> RunOutput {
    sim::run(s).expect("scenario runs")
}

fn without_safety(s: &Scenario) -> Scenario {
    let mut s = s.clone();
    s.safety = Safety::Off;
    s
}

fn square_table() -> Outcome {
    let name = "square collision table";
    let started = Instant::now();
    let mut on_total = 0;
    let mut all_cover = true;
    let mut off_greater = true;
    let mut cells = Vec::new();
    for n in [9, 16, 25] {
        let s = builtin_square(n);
        let on = run(&s).summary;
        let off = run(&without_safety(&s)).summary;
        on_total += on.collision_events;
        all_cover &= on.final_cover;
        off_greater &= off.collision_events > on.collision_events;
        cells.push(format!(
            "N={n}: off {} / on {} cover {}",
            off.collision_events, on.collision_events, on.final_cover
        ));
    }
    let secs = started.elapsed().as_secs_f64();
    let pass = on_total <= 2 && all_cover && off_greater && secs < 60.0;
    outcome(name, pass, format!("{}, {secs:.1} s", cells.join("; ")))
}

fn static_square() -> Outcome {
    let name = "static square cover";
    let out = run(&builtin_square(16));
    let sum = &out.summary;
    let max_speed = out
        .final_states
        .iter()
        .map(|s| s.velocity().norm())
        .fold(0.0, f64::max);
    let pass = sum.final_min_pairwise >= 4.8 && sum.final_max_signed_dist <= -2.3 && max_speed < 0.05;
    outcome(
        name,
        pass,
        format!(
            "min pairwise {:.3} m, max signed distance {:.3} m, max speed {:.4} m/s",
            sum.final_min_pairwise, sum.final_max_signed_dist, max_speed
        ),
    )
}

fn flocking() -> Outcome {
    let name = "moving triangle flocking";
    let out = run(&builtin_scenario("triangle").expect("builtin"));
    let sum = &out.summary;
    let pass = sum.final_flock_vel_sum < 0.01 && sum.final_cover;
    outcome(
        name,
        pass,
        format!(
            "sum |v - v_d|^2 {:.2e} m^2/s^2, cover {} (min pairwise {:.3}, max signed distance {:.3})",
            sum.final_flock_vel_sum, sum.final_cover, sum.final_min_pairwise, sum.final_max_signed_dist
        ),
    )
}

fn positions_at(out: &RunOutput, k: usize) -> Vec<Vec2> {
    let n = out.scenario.n;
    out.trajectory[k * n..(k + 1) * n]
        .iter()
        .map(|r| r.state.position())
        .collect()
}

/// True when a potential switches branch between two steps: a pair crosses
/// `r_d`, a vehicle crosses the boundary-force cutoff or changes its nearest
/// edge.
fn crosses_cutoff(s: &Scenario, a: &[Vec2], b: &[Vec2], t0: f64, t1: f64) -> bool {
    let r_d = s.params.r_d;
    for i in 0..a.len() {
        for j in i + 1..a.len() {
            if ((a[i] - a[j]).norm() < r_d) != ((b[i] - b[j]).norm() < r_d) {
                return true;
            }
        }
    }
    let (d0, d1) = (s.domain.at(t0), s.domain.at(t1));
    a.iter().zip(b).any(|(&p, &q)| {
        let (x, y) = (d0.project(p), d1.project(q));
        x.edge != y.edge || (x.signed_distance > -0.5 * r_d) != (y.signed_distance > -0.5 * r_d)
    })
}

fn energy_dissipation() -> Outcome {
    let name = "energy dissipation";
    let mut s = without_safety(&builtin_scenario("triangle").expect("builtin"));
    s.threshold = false;
    s.dt = 0.001;
    s.t_end = 10.0;
    let out = run(&s);
    let m = &out.metrics;
    let (mut checked, mut matched, mut excluded) = (0usize, 0usize, 0usize);
    let mut worst_rise = f64::NEG_INFINITY;
    let mut prev = positions_at(&out, 0);
    for k in 0..m.len() - 1 {
        let next = positions_at(&out, k + 1);
        worst_rise = worst_rise.max(m[k + 1].energy - m[k].energy);
        if crosses_cutoff(&s, &prev, &next, m[k].t, m[k + 1].t) {
            excluded += 1;
        } else {
            checked += 1;
            let fd = (m[k + 1].energy - m[k].energy) / s.dt;
            let rate = 0.5 * (m[k].energy_rate_predicted + m[k + 1].energy_rate_predicted);
            if (fd - rate).abs() <= f64::max(1e-3, 0.02 * rate.abs()) {
                matched += 1;
            }
        }
        prev = next;
    }
    let share = matched as f64 / checked as f64;
    let pass = share >= 0.99 && worst_rise <= 1e-4;
    outcome(
        name,
        pass,
        format!(
            "{matched}/{checked} steps match ({:.2}%), {excluded} cutoff steps excluded, largest rise {worst_rise:.2e}",
            100.0 * share
        ),
    )
}

fn energy_bound_safety() -> Outcome {
    let name = "energy-bound safety";
    let base = without_safety(&builtin_scenario("triangle").expect("builtin"));
    let p = base.params.clone();
    let bound = 0.5 * p.a_i * (p.c_r - p.r_d).powi(2);
    let v_d = match base.domain.motion {
        Motion::ConstantVelocity { velocity } => velocity,
        _ => unreachable!("triangle translates"),
    };
    let poly = base.domain.base().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let (mut runs, mut violations, mut closest) = (0, 0, f64::INFINITY);
    while runs < 100 {
        let n = rng.gen_range(2..=6);
        let mut states = Vec::with_capacity(n);
        while states.len() < n {
            let q = uniform_in_disk(&mut rng, 15.0);
            if poly.signed_distance(q) < -1.0 {
                states.push(DiState::new(q, v_d + uniform_in_disk(&mut rng, 1.5)));
            }
        }
        let phi0 = energy(&states, &poly, &p, v_d);
        if phi0 >= bound {
            continue;
        }
        runs += 1;
        let mut s = base.clone();
        s.name = format!("energy_bound_{runs}");
        s.n = n;
        s.threshold = false;
        s.t_end = 30.0;
        s.record_every = 1000;
        s.init = InitialCondition::Explicit {
            positions: states.iter().map(|st| st.p).collect(),
            velocities: states.iter().map(|st| st.v).collect(),
        };
        let out = run(&s);
        let m = out
            .metrics
            .iter()
            .map(|x| x.min_pairwise)
            .fold(f64::INFINITY, f64::min);
        closest = closest.min(m);
        if m <= p.c_r || out.collisions.count() > 0 {
            violations += 1;
        }
    }
    outcome(
        name,
        violations == 0,
        format!("100 runs below the bound {bound:.3}, {violations} reached c_r, closest pair {closest:.3} m"),
    )
}

fn fixed_wing_transform() -> Outcome {
    let name = "fixed-wing transform";
    let limits = FwLimits {
        s_min: 0.5,
        s_max: 10.0,
        u_theta_max: PI / 2.0,
        u_s_max: 3.0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let (mut worst_trip, mut worst_cross, mut outside, mut reversed) = (0.0f64, 0.0f64, 0, 0);
    for _ in 0..10_000 {
        let theta = rng.gen_range(-PI..PI);
        let s = rng.gen_range(0.5..10.0);
        let a = Vec2::new(rng.gen_range(-20.0..20.0), rng.gen_range(-20.0..20.0));
        let u = fixed_wing_from_cartesian(theta, s, a).expect("s > 0");
        worst_trip = worst_trip.max((cartesian_from_fixed_wing(theta, s, u) - a).norm());
        let ut = threshold_fw(u, &limits);
        let at = cartesian_from_fixed_wing(theta, s, ut);
        if let (Some(x), Some(y)) = (a.normalized(), at.normalized()) {
            worst_cross = worst_cross.max(x.cross(y).abs());
            if x.dot(y) <= 0.0 {
                reversed += 1;
            }
        }
        let slack = 1e-12;
        if ut.0.abs() > limits.u_theta_max * (1.0 + slack) || ut.1.abs() > limits.u_s_max * (1.0 + slack) {
            outside += 1;
        }
    }
    let pass = worst_trip < 1e-12 && worst_cross < 1e-9 && outside == 0 && reversed == 0;
    outcome(
        name,
        pass,
        format!(
            "10000 samples, round trip {worst_trip:.2e}, cross {worst_cross:.2e}, {outside} outside the input box, {reversed} reversed"
        ),
    )
}

fn hj_solver(grid: &ValueGrid, secs: f64) -> Outcome {
    let name = "HJ grid solver";
    let problem = &grid.problem;
    let (mut target_bad, mut obstacle_bad) = (0, 0);
    for idx in 0..grid.node_count() {
        let x = grid.node_coords(idx);
        let v = grid.values()[idx];
        if problem.in_obstacle(&x) {
            obstacle_bad += usize::from(v != f64::INFINITY);
        } else if problem.in_target(&x) {
            target_bad += usize::from(v != 0.0);
        }
    }
    let small = HjProblem::with_resolution(problem.c_r, problem.limits, 15.0, 9, 9, 9);
    let opts = SolveOptions::default();
    let par = hj_grid::solve(&small, &opts).expect("solves");
    let ser = hj_grid::solve(&small, &SolveOptions { parallel: false, ..opts }).expect("solves");
    let max_diff = par
        .values()
        .iter()
        .zip(ser.values())
        .map(|(a, b)| if a == b { 0.0 } else { (a - b).abs() })
        .fold(0.0, f64::max);
    let pass = grid.converged
        && grid.residual < 1e-2
        && grid.iterations <= 500
        && secs < 900.0
        && target_bad == 0
        && obstacle_bad == 0
        && max_diff <= 1e-12;
    outcome(
        name,
        pass,
        format!(
            "{} sweeps, residual {:.2e} s, {secs:.1} s; {target_bad} target and {obstacle_bad} obstacle nodes off; 9^5 parallel vs serial {max_diff:.1e}",
            grid.iterations, grid.residual
        ),
    )
}

fn fixed_wing_triangle(grid: &ValueGrid) -> Outcome {
    let name = "fixed-wing triangle coverage";
    let s = builtin_scenario("fw_triangle").expect("builtin");
    let on = sim::run_with_grid(&s, Some(grid)).expect("runs");
    let off = sim::run_with_grid(&without_safety(&s), None).expect("runs");
    let positions: Vec<Vec2> = on.final_states.iter().map(VehicleState::position).collect();
    let cover = is_r_subcover(&positions, &s.domain.at(s.t_end), s.params.r_d, 0.3);
    let pass = cover.ok && on.summary.collision_events <= off.summary.collision_events;
    outcome(
        name,
        pass,
        format!(
            "cover {} (min pairwise {:.3}, max signed distance {:.3}), collisions on {} / off {}",
            cover.ok,
            min_pairwise(&positions),
            cover.max_signed_dist,
            on.summary.collision_events,
            off.summary.collision_events
        ),
    )
}

fn circular_centripetal() -> Outcome {
    let name = "circular path centripetal";
    let s = builtin_scenario("circle").expect("builtin");
    let Motion::CircularPath {
        center,
        angular_velocity,
        ..
    } = s.domain.motion
    else {
        unreachable!("circle follows a circular path");
    };
    let out = run(&s);
    let mut worst = vec![0.0f64; s.n];
    for r in out.trajectory.iter().filter(|r| r.t >= 60.0 - 1e-9) {
        let target = (r.state.position() - center).norm() * angular_velocity.powi(2);
        let u = Vec2::new(r.u[0], r.u[1]).norm();
        worst[r.id] = worst[r.id].max((u - target).abs() / target);
    }
    let within = worst.iter().filter(|&&w| w <= 0.2).count();
    let list: Vec<String> = worst.iter().map(|w| format!("{:.0}%", 100.0 * w)).collect();
    outcome(
        name,
        within == s.n,
        format!("{within}/{} vehicles within 20%, worst relative error per vehicle [{}]", s.n, list.join(", ")),
    )
}

fn main() -> ExitCode {
    let started = Instant::now();
    let fw = builtin_scenario("fw_triangle").expect("builtin");
    let mut results = vec![psi_oracle(), hji_residual()];
    results.push(square_table());
    results.push(static_square());
    results.push(flocking());
    results.push(energy_dissipation());
    results.push(energy_bound_safety());
    results.push(fixed_wing_transform());
    let solve_started = Instant::now();
    let grid = hj_grid::solve(
        &HjProblem::desk_default(fw.params.c_r, fw.limits.expect("fixed-wing limits")),
        &SolveOptions::default(),
    )
    .expect("default grid solves");
    let solve_secs = solve_started.elapsed().as_secs_f64();
    results.push(fixed_wing_triangle(&grid));
    results.push(hj_solver(&grid, solve_secs));
    results.push(circular_centripetal());

    let mut unexpected = 0;
    for r in &results {
        let known = KNOWN_FAILING.contains(&r.name);
        let tag = match (r.pass, known) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known)",
            (false, false) => {
                unexpected += 1;
                "FAIL"
            }
        };
        println!("{tag:<12} {}: {}", r.name, r.detail);
    }
    let passed = results.iter().filter(|r| r.pass).count();
    println!(
        "acceptance: {passed}/{} passed, {unexpected} unexpected failures, {:.1} s",
        results.len(),
        started.elapsed().as_secs_f64()
    );
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
