use safecover::hj_grid::{self, HjProblem, SolveOptions};
use safecover::sim::{self, builtin_scenario, write_run, Scenario};

#[test]
fn same_seed_same_trajectory() {
    let mut s = builtin_scenario("triangle").unwrap();
    s.t_end = 5.0;
    let a = sim::run(&s).unwrap();
    let b = sim::run(&s).unwrap();
    assert_eq!(a.trajectory, b.trajectory);
    assert_eq!(a.metrics.len(), b.metrics.len());
    assert_eq!(a.collisions.events(), b.collisions.events());
}

#[test]
fn echoed_scenario_replays_exactly() {
    let mut s = builtin_scenario("arrowhead").unwrap();
    s.t_end = 5.0;
    s.seed = 7;
    let first = sim::run(&s).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_run(&first, dir.path()).unwrap();
    let echoed = Scenario::from_file(&dir.path().join("scenario.toml")).unwrap();
    assert_eq!(echoed, s);
    let second = sim::run(&echoed).unwrap();
    assert_eq!(first.trajectory, second.trajectory);
}

#[test]
fn seed_changes_fixed_wing_headings() {
    let mut s = builtin_scenario("fw_triangle").unwrap();
    s.safety = sim::Safety::Off;
    s.t_end = 0.5;
    let a = sim::run(&s).unwrap();
    s.seed = 1;
    let b = sim::run(&s).unwrap();
    assert_ne!(a.trajectory[0].state, b.trajectory[0].state);
}

#[test]
fn fixed_wing_grid_run_is_deterministic() {
    let mut s = builtin_scenario("fw_triangle").unwrap();
    s.t_end = 3.0;
    let limits = s.limits.unwrap();
    let grid = hj_grid::solve(
        &HjProblem::with_resolution(s.params.c_r, limits, 15.0, 13, 9, 9),
        &SolveOptions::default(),
    )
    .unwrap();
    let a = sim::run_with_grid(&s, Some(&grid)).unwrap();
    let b = sim::run_with_grid(&s, Some(&grid)).unwrap();
    assert_eq!(a.trajectory, b.trajectory);

    let mut other = limits;
    other.s_max = 5.0;
    let mismatched = hj_grid::solve(
        &HjProblem::with_resolution(s.params.c_r, other, 15.0, 9, 9, 9),
        &SolveOptions::default(),
    )
    .unwrap();
    assert!(sim::run_with_grid(&s, Some(&mismatched)).is_err());
}
