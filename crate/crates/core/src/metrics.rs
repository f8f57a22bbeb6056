//! Lyapunov energy, its dissipation rate, cover predicates, flocking sums
//! and collision bookkeeping.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::coverage::CoverageParams;
use crate::dynamics::DiState;
use crate::geometry::Polygon;
use crate::vec2::Vec2;

/// Per-step record written to the metrics file.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StepMetrics {
    pub t: f64,
    pub energy: f64,
    pub energy_rate_predicted: f64,
    pub flock_pos_sum: f64,
    pub flock_vel_sum: f64,
    pub min_pairwise: f64,
    pub max_signed_dist: f64,
    pub active_conflicts: usize,
}

/// Energy `Φ = ½ Σ_i (|v_i − v_d|² + Σ_{j≠i} V_I(p_ij) + 2 V_h(p_i))`
/// evaluated against the domain polygon at the same instant.
///
/// For a translating domain this equals the co-moving-frame energy, since
/// pair distances and signed distances are frame invariant.
pub fn energy(states: &[DiState], domain_now: &Polygon, params: &CoverageParams, v_d: Vec2) -> f64 {
    let mut total = 0.0;
    for (i, si) in states.iter().enumerate() {
        let mut pair = 0.0;
        for (j, sj) in states.iter().enumerate() {
            if j != i {
                pair += params.potential_vi(si.p - sj.p);
            }
        }
        total += (si.v - v_d).norm_sq() + pair + 2.0 * params.potential_vh(si.p, domain_now);
    }
    0.5 * total
}

/// Closed-form energy rate
/// `−½ Σ_i Σ_{j≠i} f_al(|p_ij|) |v_i − v_j|² − a_v Σ_i |v_i − v_d|²`.
pub fn energy_rate(states: &[DiState], params: &CoverageParams, v_d: Vec2) -> f64 {
    let mut align = 0.0;
    if params.c_al != 0.0 {
        for (i, si) in states.iter().enumerate() {
            for (j, sj) in states.iter().enumerate() {
                if j != i {
                    align += params.f_al((si.p - sj.p).norm()) * (si.v - sj.v).norm_sq();
                }
            }
        }
    }
    let brake: f64 = states.iter().map(|s| (s.v - v_d).norm_sq()).sum();
    -0.5 * align - params.a_v * brake
}

/// Outcome of an r-subcover check with the worst offenders.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoverCheck {
    pub ok: bool,
    pub min_pairwise: f64,
    pub max_signed_dist: f64,
}

/// Smallest pairwise distance (`+∞` for fewer than two points).
pub fn min_pairwise(positions: &[Vec2]) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..positions.len() {
        for j in i + 1..positions.len() {
            best = best.min((positions[i] - positions[j]).norm());
        }
    }
    best
}

pub fn max_signed_distance(positions: &[Vec2], poly: &Polygon) -> f64 {
    positions
        .iter()
        .map(|&p| poly.signed_distance(p))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Pairwise distances at least `r − tol` and every vehicle at least
/// `r/2 − tol` inside `poly`.
pub fn is_r_subcover(positions: &[Vec2], poly: &Polygon, r: f64, tol: f64) -> CoverCheck {
    let min_pairwise = min_pairwise(positions);
    let max_signed_dist = max_signed_distance(positions, poly);
    CoverCheck {
        ok: min_pairwise >= r - tol && max_signed_dist <= -0.5 * r + tol,
        min_pairwise,
        max_signed_dist,
    }
}

/// Default tolerance for exact cover checks (m).
pub const COVER_TOL_EXACT: f64 = 1e-3;
/// Default tolerance for asymptotic-convergence cover checks (m).
pub const COVER_TOL_ASYMPTOTIC: f64 = 0.2;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CollisionEvent {
    pub i: usize,
    pub j: usize,
    pub t_start: f64,
    /// `None` while the pair is still within the collision radius.
    pub t_end: Option<f64>,
}

/// Collision events, opened when a pair comes within `c_r` and closed when
/// it separates again.
#[derive(Clone, Debug, Default)]
pub struct CollisionLog {
    events: Vec<CollisionEvent>,
    open: BTreeMap<(usize, usize), usize>,
}

impl CollisionLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn events(&self) -> &[CollisionEvent] {
        &self.events
    }

    pub fn count(&self) -> usize {
        self.events.len()
    }

    pub fn update(&mut self, positions: &[Vec2], t: f64, c_r: f64) {
        for i in 0..positions.len() {
            for j in i + 1..positions.len() {
                let close = (positions[i] - positions[j]).norm() <= c_r;
                match (close, self.open.get(&(i, j))) {
                    (true, None) => {
                        self.open.insert((i, j), self.events.len());
                        self.events.push(CollisionEvent {
                            i,
                            j,
                            t_start: t,
                            t_end: None,
                        });
                    }
                    (false, Some(&k)) => {
                        self.events[k].t_end = Some(t);
                        self.open.remove(&(i, j));
                    }
                    _ => {}
                }
            }
        }
    }
}

/// `(Σ |p_i − p_d|², Σ |v_i − v_d|²)`.
pub fn flocking_sums(states: &[DiState], p_d: Vec2, v_d: Vec2) -> (f64, f64) {
    states.iter().fold((0.0, 0.0), |(a, b), s| {
        (a + (s.p - p_d).norm_sq(), b + (s.v - v_d).norm_sq())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> CoverageParams {
        CoverageParams {
            a_i: 1.0,
            a_h: 2.0,
            a_v: 0.2,
            c_al: 0.0,
            l_al: 7.79,
            r_d: 5.0,
            c_r: 2.0,
            u_max: 3.0,
            v_max: 10.0,
        }
    }

    fn square() -> Polygon {
        Polygon::rectangle(0.0, 0.0, 20.0, 20.0).unwrap()
    }

    fn grid16() -> Vec<Vec2> {
        let mut out = Vec::new();
        for i in 0..4 {
            for j in 0..4 {
                out.push(Vec2::new(2.5 + 5.0 * i as f64, 2.5 + 5.0 * j as f64));
            }
        }
        out
    }

    #[test]
    fn energy_examples() {
        let p = params();
        let cover: Vec<DiState> = grid16().into_iter().map(DiState::at_rest).collect();
        assert_eq!(energy(&cover, &square(), &p, Vec2::ZERO), 0.0);

        let one = [DiState::at_rest(Vec2::new(20.0, 10.0))];
        assert_eq!(energy(&one, &square(), &p, Vec2::ZERO), 6.25);

        let pair = [
            DiState::at_rest(Vec2::new(9.0, 10.0)),
            DiState::at_rest(Vec2::new(11.0, 10.0)),
        ];
        assert_eq!(energy(&pair, &square(), &p, Vec2::ZERO), 4.5);
    }

    #[test]
    fn energy_rate_examples() {
        let mut p = params();
        let v_d = Vec2::new(0.5, 0.5);
        let same = [DiState::new(Vec2::ZERO, v_d), DiState::new(Vec2::new(1.0, 0.0), v_d)];
        assert_eq!(energy_rate(&same, &p, v_d), 0.0);

        let pair = [
            DiState::new(Vec2::ZERO, v_d + Vec2::new(1.0, 0.0)),
            DiState::new(Vec2::new(7.79, 0.0), v_d),
        ];
        assert!((energy_rate(&pair, &p, v_d) + 0.2).abs() < 1e-15);
        p.c_al = 0.2;
        let want = -0.2 - 0.2 / std::f64::consts::E;
        assert!((energy_rate(&pair, &p, v_d) - want).abs() < 1e-12);
        assert!((want + 0.2736).abs() < 1e-4);
    }

    #[test]
    fn cover_examples() {
        assert!(is_r_subcover(&grid16(), &square(), 5.0, COVER_TOL_EXACT).ok);
        let mut out = grid16();
        out[0] = Vec2::new(-1.0, 2.5);
        assert!(!is_r_subcover(&out, &square(), 5.0, COVER_TOL_EXACT).ok);
        let twins = [Vec2::new(10.0, 10.0), Vec2::new(10.0, 10.0)];
        assert!(!is_r_subcover(&twins, &square(), 5.0, COVER_TOL_EXACT).ok);
    }

    #[test]
    fn collision_events_count_entries() {
        let mut log = CollisionLog::new();
        let far = [Vec2::ZERO, Vec2::new(5.0, 0.0)];
        let near = [Vec2::ZERO, Vec2::new(1.0, 0.0)];
        log.update(&far, 0.0, 2.0);
        assert_eq!(log.count(), 0);
        log.update(&near, 1.0, 2.0);
        log.update(&near, 2.0, 2.0);
        log.update(&far, 3.0, 2.0);
        assert_eq!(log.count(), 1);
        assert_eq!(log.events()[0].t_end, Some(3.0));
        log.update(&near, 4.0, 2.0);
        assert_eq!(log.count(), 2);
        assert_eq!(log.events()[1].t_end, None);
    }

    #[test]
    fn flocking_examples() {
        let v_d = Vec2::new(1.0, 1.0);
        let p_d = Vec2::new(2.0, 2.0);
        let at = [DiState::new(p_d, v_d)];
        assert_eq!(flocking_sums(&at, p_d, v_d), (0.0, 0.0));
        let off = [DiState::new(p_d + Vec2::new(3.0, 4.0), v_d)];
        assert_eq!(flocking_sums(&off, p_d, v_d), (25.0, 0.0));
        let fast = [DiState::new(p_d, v_d + Vec2::new(0.0, 2.0))];
        assert_eq!(flocking_sums(&fast, p_d, v_d), (0.0, 4.0));
    }
}
