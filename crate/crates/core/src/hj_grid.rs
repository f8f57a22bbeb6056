//! Numerical time-to-reach solver for the pairwise fixed-wing game.
//!
//! The relative state puts the evader at the origin facing `+x1`:
//! `(x1, x2)` is the pursuer position, `x3` the heading difference, `x4` the
//! evader speed and `x5` the pursuer speed. The stationary Isaacs equation
//! `min_u max_d {−∇φ·f − 1} = 0` is discretized with a Lax-Friedrichs
//! numerical Hamiltonian and solved by red-black value iteration from above.
//!
//! Internally unreachable values are stored as `cap`; after the solve every
//! value at the cap and every obstacle node is reported as `+∞`.

use std::f64::consts::TAU;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{wrap_angle, FwLimits, FwState};
use crate::error::{Error, Result};

const DIM: usize = 5;
const MAGIC: &[u8; 8] = b"SCHJGRID";
const FORMAT_VERSION: u64 = 1;

/// Relative state `(x1, x2, x3, x4, x5)` of a fixed-wing pursuer seen from
/// the evader.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FwRelativeState(pub [f64; DIM]);

impl FwRelativeState {
    pub fn new(x1: f64, x2: f64, x3: f64, x4: f64, x5: f64) -> Self {
        FwRelativeState([x1, x2, wrap_angle(x3), x4, x5])
    }
}

/// Relative coordinates of `pursuer` in the frame of `evader`.
pub fn relative_state(evader: &FwState, pursuer: &FwState) -> FwRelativeState {
    let d = (pursuer.p - evader.p).rotate(-evader.theta);
    FwRelativeState::new(
        d.x,
        d.y,
        pursuer.theta - evader.theta,
        evader.s,
        pursuer.s,
    )
}

/// Relative dynamics. `u = (u_θ, u_s)` belongs to the evader and
/// `d = (d_θ, d_s)` to the pursuer.
pub fn rhs(x: &FwRelativeState, u: (f64, f64), d: (f64, f64)) -> [f64; DIM] {
    let [x1, x2, x3, x4, x5] = x.0;
    [
        x5 * x3.cos() - x4 + u.0 * x2,
        x5 * x3.sin() - u.0 * x1,
        d.0 - u.0,
        u.1,
        d.1,
    ]
}

/// One grid axis. Non-periodic axes have nodes at both ends; a periodic axis
/// covers `[lo, hi)` with `hi − lo` the period.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
    #[serde(default)]
    pub periodic: bool,
}

impl Axis {
    pub fn new(lo: f64, hi: f64, n: usize) -> Self {
        Axis {
            lo,
            hi,
            n,
            periodic: false,
        }
    }

    pub fn periodic(lo: f64, hi: f64, n: usize) -> Self {
        Axis {
            lo,
            hi,
            n,
            periodic: true,
        }
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        if self.periodic {
            (self.hi - self.lo) / self.n as f64
        } else {
            (self.hi - self.lo) / (self.n - 1) as f64
        }
    }

    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        self.lo + i as f64 * self.spacing()
    }

    fn validate(&self, k: usize) -> Result<()> {
        if self.n < 5 || !(self.hi > self.lo) || !self.lo.is_finite() || !self.hi.is_finite() {
            return Err(Error::InvalidParams(format!(
                "axis {k}: need finite lo < hi and at least 5 nodes"
            )));
        }
        Ok(())
    }

    /// Lower cell index and fraction for an interpolation query.
    fn locate(&self, k: usize, x: f64) -> Result<(usize, usize, f64)> {
        let h = self.spacing();
        if self.periodic {
            let period = self.hi - self.lo;
            let u = (x - self.lo).rem_euclid(period) / h;
            let mut i = u.floor() as usize;
            let mut frac = u - i as f64;
            if i >= self.n {
                i = 0;
                frac = 0.0;
            }
            return Ok((i, (i + 1) % self.n, frac));
        }
        let slack = 1e-9 * h;
        if !(x >= self.lo - slack && x <= self.hi + slack) {
            return Err(Error::OutOfBounds { axis: k, value: x });
        }
        let u = ((x - self.lo) / h).max(0.0);
        let i = (u.floor() as usize).min(self.n - 2);
        let frac = (u - i as f64).clamp(0.0, 1.0);
        Ok((i, i + 1, frac))
    }
}

/// Grid layout, collision radius and the (shared) vehicle limits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HjProblem {
    pub axes: [Axis; DIM],
    pub c_r: f64,
    pub limits: FwLimits,
}

impl HjProblem {
    /// Desk-scale default: 31 × 31 nodes over `[−15, 15]²` m, 15 heading
    /// nodes, and 9 speed nodes that extend one cell past each speed limit
    /// so the speed constraints are represented on the grid.
    pub fn desk_default(c_r: f64, limits: FwLimits) -> Self {
        Self::with_resolution(c_r, limits, 15.0, 31, 15, 9)
    }

    pub fn with_resolution(
        c_r: f64,
        limits: FwLimits,
        half_width: f64,
        n_pos: usize,
        n_heading: usize,
        n_speed: usize,
    ) -> Self {
        let hs = (limits.s_max - limits.s_min) / (n_speed as f64 - 3.0);
        let speed = Axis::new(limits.s_min - hs, limits.s_max + hs, n_speed);
        HjProblem {
            axes: [
                Axis::new(-half_width, half_width, n_pos),
                Axis::new(-half_width, half_width, n_pos),
                Axis::periodic(0.0, TAU, n_heading),
                speed,
                speed,
            ],
            c_r,
            limits,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (k, a) in self.axes.iter().enumerate() {
            a.validate(k)?;
        }
        if self.axes.iter().enumerate().any(|(k, a)| a.periodic != (k == 2)) {
            return Err(Error::InvalidParams(
                "only the heading axis (x3) is periodic".into(),
            ));
        }
        if (self.axes[2].hi - self.axes[2].lo - TAU).abs() > 1e-12 {
            return Err(Error::InvalidParams("heading axis must span 2π".into()));
        }
        if !(self.c_r > 0.0) {
            return Err(Error::InvalidParams("c_r must be > 0".into()));
        }
        self.limits.validate()
    }

    /// Collision target: the cylinder of radius `c_r` plus evader speeds
    /// outside the limits.
    pub fn in_target(&self, x: &[f64; DIM]) -> bool {
        x[0] * x[0] + x[1] * x[1] <= self.c_r * self.c_r
            || x[3] < self.limits.s_min
            || x[3] > self.limits.s_max
    }

    /// Obstacle: pursuer speeds outside the limits.
    pub fn in_obstacle(&self, x: &[f64; DIM]) -> bool {
        x[4] < self.limits.s_min || x[4] > self.limits.s_max
    }
}

/// Discretization of the Hamiltonian.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Central differences with Lax-Friedrichs dissipation.
    #[default]
    LaxFriedrichs,
    /// Dynamic programming over steps of length `SolveOptions::step` with
    /// interpolated values, max over evader and min over pursuer corners.
    SemiLagrangian,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveOptions {
    /// Stop when the largest node update of a sweep drops below this (s).
    pub tol: f64,
    pub max_iters: usize,
    /// Times at or above this are treated as unreachable.
    pub cap: f64,
    pub parallel: bool,
    pub scheme: Scheme,
    /// Time step of the semi-Lagrangian scheme (s).
    pub step: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: 1e-3,
            max_iters: 500,
            cap: 20.0,
            parallel: true,
            scheme: Scheme::default(),
            step: 0.3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u8)]
enum NodeKind {
    Free,
    Target,
    Obstacle,
}

/// Dense 5D array of time-to-reach values with its metadata.
#[derive(Clone, Debug, PartialEq)]
pub struct ValueGrid {
    pub problem: HjProblem,
    pub cap: f64,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    values: Vec<f64>,
}

/// Evader control extracted from the grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridControl {
    pub u_theta: f64,
    pub u_s: f64,
    /// Both switching coefficients vanished; the control is zero.
    pub degenerate: bool,
}

#[derive(Clone, Debug, PartialEq)]
struct Layout {
    n: [usize; DIM],
    stride: [usize; DIM],
    h: [f64; DIM],
    coords: [Vec<f64>; DIM],
}

impl Layout {
    fn new(axes: &[Axis; DIM]) -> Self {
        let n = axes.map(|a| a.n);
        let mut stride = [1usize; DIM];
        for k in (0..DIM - 1).rev() {
            stride[k] = stride[k + 1] * n[k + 1];
        }
        let h = axes.map(|a| a.spacing());
        let coords = std::array::from_fn(|k| (0..n[k]).map(|i| axes[k].coord(i)).collect());
        Layout {
            n,
            stride,
            h,
            coords,
        }
    }

    fn len(&self) -> usize {
        self.n.iter().product()
    }

    fn unravel(&self, mut idx: usize) -> [usize; DIM] {
        let mut out = [0; DIM];
        for (o, &stride) in out.iter_mut().zip(&self.stride) {
            *o = idx / stride;
            idx %= stride;
        }
        out
    }

    /// Values of the two neighbours of `idx` along axis `k`; non-periodic
    /// boundaries use a linearly extrapolated ghost node, which turns the
    /// central difference into a one-sided one.
    #[inline]
    fn neighbours(&self, values: &[f64], idx: usize, i: usize, k: usize, cap: f64) -> (f64, f64) {
        let s = self.stride[k];
        let n = self.n[k];
        if k == 2 {
            let lo = if i == 0 { idx + (n - 1) * s } else { idx - s };
            let hi = if i == n - 1 { idx - (n - 1) * s } else { idx + s };
            return (values[lo], values[hi]);
        }
        let here = values[idx];
        if i == 0 {
            let up = values[idx + s];
            ((2.0 * here - up).clamp(0.0, cap), up)
        } else if i == n - 1 {
            let down = values[idx - s];
            (down, (2.0 * here - down).clamp(0.0, cap))
        } else {
            (values[idx - s], values[idx + s])
        }
    }
}

struct Hamiltonian {
    u_theta: f64,
    u_s: f64,
    d_theta: f64,
    d_s: f64,
}

impl Hamiltonian {
    fn new(l: &FwLimits) -> Self {
        // both vehicles share the same limits
        Hamiltonian {
            u_theta: l.u_theta_max,
            u_s: l.u_s_max,
            d_theta: l.u_theta_max,
            d_s: l.u_s_max,
        }
    }

    /// `min_u max_d {−p·f(x, u, d)} − 1`.
    #[inline]
    fn eval(&self, x: &[f64; DIM], cos3: f64, sin3: f64, p: &[f64; DIM]) -> f64 {
        let drift1 = x[4] * cos3 - x[3];
        let drift2 = x[4] * sin3;
        let c_theta = -p[0] * x[1] + p[1] * x[0] + p[2];
        -p[0] * drift1 - p[1] * drift2 - self.u_theta * c_theta.abs() - self.u_s * p[3].abs()
            + self.d_theta * p[2].abs()
            + self.d_s * p[4].abs()
            - 1.0
    }

    /// Per-axis bound on `|f_k|` over the input boxes.
    #[inline]
    fn dissipation(&self, x: &[f64; DIM], cos3: f64, sin3: f64) -> [f64; DIM] {
        [
            (x[4] * cos3 - x[3]).abs() + self.u_theta * x[1].abs(),
            (x[4] * sin3).abs() + self.u_theta * x[0].abs(),
            self.u_theta + self.d_theta,
            self.u_s,
            self.d_s,
        ]
    }
}

struct Solver<'a> {
    layout: Layout,
    kinds: Vec<NodeKind>,
    ham: Hamiltonian,
    cap: f64,
    scheme: Scheme,
    step: f64,
    problem: &'a HjProblem,
    trig: Vec<(f64, f64)>,
}

enum Flow {
    Hit(f64),
    End([f64; DIM]),
}

const SL_SUBSTEPS: usize = 3;

impl<'a> Solver<'a> {
    fn new(problem: &'a HjProblem, opts: &SolveOptions) -> Self {
        let cap = opts.cap;
        let layout = Layout::new(&problem.axes);
        let kinds = (0..layout.len())
            .map(|idx| {
                let ii = layout.unravel(idx);
                let x = std::array::from_fn(|k| layout.coords[k][ii[k]]);
                // reaching the target while violating the obstacle does not count
                if problem.in_obstacle(&x) {
                    NodeKind::Obstacle
                } else if problem.in_target(&x) {
                    NodeKind::Target
                } else {
                    NodeKind::Free
                }
            })
            .collect();
        let trig = layout.coords[2].iter().map(|a| (a.cos(), a.sin())).collect();
        Solver {
            layout,
            kinds,
            ham: Hamiltonian::new(&problem.limits),
            cap,
            scheme: opts.scheme,
            step: opts.step,
            problem,
            trig,
        }
    }

    fn initial_values(&self) -> Vec<f64> {
        self.kinds
            .iter()
            .map(|k| match k {
                NodeKind::Target => 0.0,
                _ => self.cap,
            })
            .collect()
    }

    #[inline]
    fn update(&self, values: &[f64], idx: usize, ii: &[usize; DIM]) -> f64 {
        match self.scheme {
            Scheme::LaxFriedrichs => self.update_lf(values, idx, ii),
            Scheme::SemiLagrangian => self.update_sl(values, idx, ii),
        }
    }

    /// Dynamic-programming update `φ(x) = max_u min_d [τ + φ(x(τ))]` over
    /// the corners of both input boxes, where `x(τ)` follows the relative
    /// dynamics with the inputs held. A path that enters the collision disk
    /// within the step scores its entry time instead.
    #[inline]
    fn update_sl(&self, values: &[f64], idx: usize, ii: &[usize; DIM]) -> f64 {
        let l = &self.layout;
        let x: [f64; DIM] = std::array::from_fn(|k| l.coords[k][ii[k]]);
        let ham = &self.ham;
        let mut best = 0.0f64;
        for ut in [-ham.u_theta, ham.u_theta] {
            for us in [-ham.u_s, ham.u_s] {
                let mut worst = self.cap;
                for dth in [-ham.d_theta, ham.d_theta] {
                    for ds in [-ham.d_s, ham.d_s] {
                        let c = match flow(self.problem, self.step, x, (ut, us), (dth, ds)) {
                            Flow::Hit(t) => t,
                            Flow::End(y) => {
                                self.step + interpolate(&self.problem.axes, l, values, &y)
                            }
                        };
                        worst = worst.min(c);
                    }
                }
                best = best.max(worst);
            }
        }
        best.clamp(0.0, self.cap).min(values[idx])
    }

    #[inline]
    fn update_lf(&self, values: &[f64], idx: usize, ii: &[usize; DIM]) -> f64 {
        let l = &self.layout;
        let x: [f64; DIM] = std::array::from_fn(|k| l.coords[k][ii[k]]);
        let (cos3, sin3) = self.trig[ii[2]];
        let mut p = [0.0; DIM];
        let mut avg = 0.0;
        let mut weight = 0.0;
        let alpha = self.ham.dissipation(&x, cos3, sin3);
        for k in 0..DIM {
            let (lo, hi) = l.neighbours(values, idx, ii[k], k, self.cap);
            p[k] = (hi - lo) / (2.0 * l.h[k]);
            avg += alpha[k] * (hi + lo) / (2.0 * l.h[k]);
            weight += alpha[k] / l.h[k];
        }
        let h = self.ham.eval(&x, cos3, sin3, &p);
        let candidate = ((avg - h) / weight).clamp(0.0, self.cap);
        candidate.min(values[idx])
    }

    /// Updates every free node of one colour, reading only from `src`.
    /// Returns the largest change.
    fn half_sweep(&self, src: &[f64], dst: &mut [f64], color: usize, parallel: bool) -> f64 {
        let slab = self.layout.stride[0];
        let work = |(i1, chunk): (usize, &mut [f64])| -> f64 {
            let mut worst: f64 = 0.0;
            let base = i1 * slab;
            let n = self.layout.n;
            let mut local = 0;
            for i2 in 0..n[1] {
                for i3 in 0..n[2] {
                    for i4 in 0..n[3] {
                        for i5 in 0..n[4] {
                            let idx = base + local;
                            let ii = [i1, i2, i3, i4, i5];
                            let v = if self.kinds[idx] == NodeKind::Free
                                && (i1 + i2 + i3 + i4 + i5) % 2 == color
                            {
                                let nv = self.update(src, idx, &ii);
                                worst = worst.max(src[idx] - nv);
                                nv
                            } else {
                                src[idx]
                            };
                            chunk[local] = v;
                            local += 1;
                        }
                    }
                }
            }
            worst
        };
        if parallel {
            dst.par_chunks_mut(slab)
                .enumerate()
                .map(work)
                .reduce(|| 0.0, f64::max)
        } else {
            dst.chunks_mut(slab).enumerate().map(work).fold(0.0, f64::max)
        }
    }
}

/// Integrates the relative dynamics over one step with RK4 substeps,
/// saturating both speeds at the limits.
fn flow(problem: &HjProblem, step: f64, mut x: [f64; DIM], u: (f64, f64), d: (f64, f64)) -> Flow {
    let (s_lo, s_hi) = (problem.limits.s_min, problem.limits.s_max);
    let h = step / SL_SUBSTEPS as f64;
    let r2 = problem.c_r * problem.c_r;
    for sub in 0..SL_SUBSTEPS {
        let f = |y: &[f64; DIM]| rhs(&FwRelativeState(*y), u, d);
        let add = |y: &[f64; DIM], k: &[f64; DIM], c: f64| -> [f64; DIM] {
            std::array::from_fn(|i| y[i] + c * k[i])
        };
        let k1 = f(&x);
        let k2 = f(&add(&x, &k1, h / 2.0));
        let k3 = f(&add(&x, &k2, h / 2.0));
        let k4 = f(&add(&x, &k3, h));
        let mut y: [f64; DIM] =
            std::array::from_fn(|i| x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]));
        y[3] = y[3].clamp(s_lo, s_hi);
        y[4] = y[4].clamp(s_lo, s_hi);
        // first entry into the disk along the chord of this substep
        let (ax, ay) = (x[0], x[1]);
        let (dx, dy) = (y[0] - ax, y[1] - ay);
        let qa = dx * dx + dy * dy;
        let qb = 2.0 * (ax * dx + ay * dy);
        let qc = ax * ax + ay * ay - r2;
        if qc <= 0.0 {
            return Flow::Hit(sub as f64 * h);
        }
        if qa > 0.0 && qb < 0.0 {
            let disc = qb * qb - 4.0 * qa * qc;
            if disc >= 0.0 {
                let s = 2.0 * qc / (-qb + disc.sqrt());
                if s <= 1.0 {
                    return Flow::Hit((sub as f64 + s) * h);
                }
            }
        }
        x = y;
    }
    x[2] = wrap_angle(x[2]);
    Flow::End(x)
}

/// Multilinear interpolation of the working values with positions
/// clamped to the grid box.
fn interpolate(axes: &[Axis; DIM], l: &Layout, values: &[f64], x: &[f64; DIM]) -> f64 {
    let mut cells = [(0usize, 0usize, 0.0f64); DIM];
    for k in 0..DIM {
        let a = &axes[k];
        cells[k] = if a.periodic {
            a.locate(k, x[k]).expect("periodic axes accept any finite value")
        } else {
            let u = ((x[k] - a.lo) / l.h[k]).clamp(0.0, (a.n - 1) as f64);
            let i = (u.floor() as usize).min(a.n - 2);
            (i, i + 1, u - i as f64)
        };
    }
    let mut acc = 0.0;
    for mask in 0..(1usize << DIM) {
        let mut w = 1.0;
        let mut idx = 0;
        for (k, &(lo, hi, frac)) in cells.iter().enumerate() {
            let upper = mask >> k & 1 == 1;
            w *= if upper { frac } else { 1.0 - frac };
            idx += if upper { hi } else { lo } * l.stride[k];
        }
        if w > 0.0 {
            acc += w * values[idx];
        }
    }
    acc
}

/// Solves the time-to-reach problem on the grid.
pub fn solve(problem: &HjProblem, opts: &SolveOptions) -> Result<ValueGrid> {
    problem.validate()?;
    if !(opts.cap > 0.0 && opts.tol > 0.0 && opts.step > 0.0) {
        return Err(Error::InvalidParams("cap, tol and step must be > 0".into()));
    }
    let solver = Solver::new(problem, opts);
    let mut values = solver.initial_values();
    let mut scratch = values.clone();
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    while iterations < opts.max_iters {
        let r0 = solver.half_sweep(&values, &mut scratch, 0, opts.parallel);
        let r1 = solver.half_sweep(&scratch, &mut values, 1, opts.parallel);
        residual = r0.max(r1);
        iterations += 1;
        log::debug!("hj sweep {iterations}: residual {residual:.3e}");
        if residual < opts.tol {
            break;
        }
    }
    let converged = residual < opts.tol;
    if !converged {
        log::warn!("hj solve stopped after {iterations} sweeps with residual {residual:.3e}");
    }
    for (v, kind) in values.iter_mut().zip(&solver.kinds) {
        if *kind == NodeKind::Obstacle || *v >= opts.cap {
            *v = f64::INFINITY;
        }
    }
    Ok(ValueGrid {
        problem: problem.clone(),
        cap: opts.cap,
        residual,
        iterations,
        converged,
        values,
    })
}

impl ValueGrid {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn node_count(&self) -> usize {
        self.values.len()
    }

    /// Coordinates of node `idx` in row-major order.
    pub fn node_coords(&self, idx: usize) -> [f64; DIM] {
        let l = Layout::new(&self.problem.axes);
        let ii = l.unravel(idx);
        std::array::from_fn(|k| l.coords[k][ii[k]])
    }

    /// Value at node multi-index `ii`.
    pub fn at(&self, ii: [usize; DIM]) -> f64 {
        let l = Layout::new(&self.problem.axes);
        self.values[(0..DIM).map(|k| ii[k] * l.stride[k]).sum::<usize>()]
    }

    fn corners(&self, x: &FwRelativeState) -> Result<Vec<(usize, f64)>> {
        let l = Layout::new(&self.problem.axes);
        let mut cells = [(0usize, 0usize, 0.0f64); DIM];
        for (k, cell) in cells.iter_mut().enumerate() {
            if !x.0[k].is_finite() {
                return Err(Error::NonFinite("grid query"));
            }
            *cell = self.problem.axes[k].locate(k, x.0[k])?;
        }
        let mut out = Vec::with_capacity(1 << DIM);
        for mask in 0..(1usize << DIM) {
            let mut w = 1.0;
            let mut idx = 0;
            for (k, &(lo, hi, frac)) in cells.iter().enumerate() {
                let upper = mask >> k & 1 == 1;
                w *= if upper { frac } else { 1.0 - frac };
                idx += if upper { hi } else { lo } * l.stride[k];
            }
            if w > 0.0 {
                out.push((idx, w));
            }
        }
        Ok(out)
    }

    /// Multilinear interpolation, `+∞` when any contributing node is `+∞`.
    pub fn query(&self, x: &FwRelativeState) -> Result<f64> {
        let mut acc = 0.0;
        for (idx, w) in self.corners(x)? {
            let v = self.values[idx];
            if v.is_infinite() {
                return Ok(f64::INFINITY);
            }
            acc += w * v;
        }
        Ok(acc)
    }

    fn node_gradient(&self, l: &Layout, capped: &dyn Fn(usize) -> f64, idx: usize) -> [f64; DIM] {
        let ii = l.unravel(idx);
        std::array::from_fn(|k| {
            let s = l.stride[k];
            let n = l.n[k];
            let i = ii[k];
            if k == 2 {
                let lo = if i == 0 { idx + (n - 1) * s } else { idx - s };
                let hi = if i == n - 1 { idx - (n - 1) * s } else { idx + s };
                (capped(hi) - capped(lo)) / (2.0 * l.h[k])
            } else if i == 0 {
                (capped(idx + s) - capped(idx)) / l.h[k]
            } else if i == n - 1 {
                (capped(idx) - capped(idx - s)) / l.h[k]
            } else {
                (capped(idx + s) - capped(idx - s)) / (2.0 * l.h[k])
            }
        })
    }

    /// Interpolated central-difference gradient of φ, with unreachable
    /// values taken at the cap.
    pub fn gradient(&self, x: &FwRelativeState) -> Result<[f64; DIM]> {
        let l = Layout::new(&self.problem.axes);
        let capped = |i: usize| self.values[i].min(self.cap);
        let mut g = [0.0; DIM];
        for (idx, w) in self.corners(x)? {
            let gi = self.node_gradient(&l, &capped, idx);
            for k in 0..DIM {
                g[k] += w * gi[k];
            }
        }
        Ok(g)
    }

    /// Evader control minimizing the worst-case Hamiltonian. The Hamiltonian
    /// is affine in each input, so the minimizer sits at a corner of the
    /// input box; a zero coefficient selects the zero input on that axis.
    pub fn optimal_control(&self, x: &FwRelativeState) -> Result<GridControl> {
        if !self.query(x)?.is_finite() {
            return Err(Error::Degenerate("time-to-reach is infinite here"));
        }
        let g = self.gradient(x)?;
        let [x1, x2, ..] = x.0;
        // coefficients of u_θ and u_s in −∇φ·f
        let c_theta = -g[0] * x2 + g[1] * x1 + g[2];
        let c_s = -g[3];
        let lim = &self.problem.limits;
        let pick = |c: f64, bound: f64| {
            if c > 0.0 {
                -bound
            } else if c < 0.0 {
                bound
            } else {
                0.0
            }
        };
        Ok(GridControl {
            u_theta: pick(c_theta, lim.u_theta_max),
            u_s: pick(c_s, lim.u_s_max),
            degenerate: c_theta == 0.0 && c_s == 0.0,
        })
    }

    /// Evader and pursuer inputs from a one-step lookahead of length `step`
    /// on the interpolated values: the evader corner maximizing the
    /// pursuer's best reply, and that reply.
    pub fn lookahead_control(
        &self,
        x: &FwRelativeState,
        step: f64,
    ) -> Result<(GridControl, (f64, f64))> {
        if !self.query(x)?.is_finite() {
            return Err(Error::Degenerate("time-to-reach is infinite here"));
        }
        let l = Layout::new(&self.problem.axes);
        let capped: Vec<f64> = self.values.iter().map(|v| v.min(self.cap)).collect();
        let lim = &self.problem.limits;
        let mut best = (f64::NEG_INFINITY, (0.0, 0.0), (0.0, 0.0));
        for ut in [-lim.u_theta_max, lim.u_theta_max] {
            for us in [-lim.u_s_max, lim.u_s_max] {
                let mut worst = (f64::INFINITY, (0.0, 0.0));
                for dth in [-lim.u_theta_max, lim.u_theta_max] {
                    for ds in [-lim.u_s_max, lim.u_s_max] {
                        let c = match flow(&self.problem, step, x.0, (ut, us), (dth, ds)) {
                            Flow::Hit(t) => t,
                            Flow::End(y) => step + interpolate(&self.problem.axes, &l, &capped, &y),
                        };
                        if c < worst.0 {
                            worst = (c, (dth, ds));
                        }
                    }
                }
                if worst.0 > best.0 {
                    best = (worst.0, (ut, us), worst.1);
                }
            }
        }
        Ok((
            GridControl {
                u_theta: best.1 .0,
                u_s: best.1 .1,
                degenerate: false,
            },
            best.2,
        ))
    }

    /// Pursuer input maximizing the Hamiltonian (worst case for the evader).
    pub fn worst_disturbance(&self, x: &FwRelativeState) -> Result<(f64, f64)> {
        let g = self.gradient(x)?;
        let lim = &self.problem.limits;
        let pick = |c: f64, bound: f64| {
            if c > 0.0 {
                bound
            } else if c < 0.0 {
                -bound
            } else {
                0.0
            }
        };
        // coefficients of d_θ and d_s in −∇φ·f
        Ok((pick(-g[2], lim.u_theta_max), pick(-g[4], lim.u_s_max)))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        self.write_to(&mut w).map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(&mut BufReader::new(file))
    }

    /// Little-endian layout: magic, version, five axes as
    /// `(lo: f64, hi: f64, n: u64, periodic: u64)`, then `c_r`, `s_min`,
    /// `s_max`, `u_theta_max`, `u_s_max`, `cap`, `residual` as f64,
    /// `iterations` and `converged` as u64, the node count as u64 and the
    /// row-major values (x1 slowest) as f64.
    pub fn write_to<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        w.write_all(MAGIC)?;
        w.write_u64::<LittleEndian>(FORMAT_VERSION)?;
        for a in &self.problem.axes {
            w.write_f64::<LittleEndian>(a.lo)?;
            w.write_f64::<LittleEndian>(a.hi)?;
            w.write_u64::<LittleEndian>(a.n as u64)?;
            w.write_u64::<LittleEndian>(a.periodic as u64)?;
        }
        let l = &self.problem.limits;
        for v in [
            self.problem.c_r,
            l.s_min,
            l.s_max,
            l.u_theta_max,
            l.u_s_max,
            self.cap,
            self.residual,
        ] {
            w.write_f64::<LittleEndian>(v)?;
        }
        w.write_u64::<LittleEndian>(self.iterations as u64)?;
        w.write_u64::<LittleEndian>(self.converged as u64)?;
        w.write_u64::<LittleEndian>(self.values.len() as u64)?;
        for &v in &self.values {
            w.write_f64::<LittleEndian>(v)?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self> {
        let bad = |e: std::io::Error| Error::GridFormat(e.to_string());
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).map_err(bad)?;
        if &magic != MAGIC {
            return Err(Error::GridFormat("bad magic".into()));
        }
        let version = r.read_u64::<LittleEndian>().map_err(bad)?;
        if version != FORMAT_VERSION {
            return Err(Error::GridFormat(format!("unsupported version {version}")));
        }
        let mut axes = [Axis::new(0.0, 1.0, 5); DIM];
        for a in axes.iter_mut() {
            a.lo = r.read_f64::<LittleEndian>().map_err(bad)?;
            a.hi = r.read_f64::<LittleEndian>().map_err(bad)?;
            a.n = r.read_u64::<LittleEndian>().map_err(bad)? as usize;
            a.periodic = r.read_u64::<LittleEndian>().map_err(bad)? != 0;
        }
        let mut f = [0.0; 7];
        for v in f.iter_mut() {
            *v = r.read_f64::<LittleEndian>().map_err(bad)?;
        }
        let iterations = r.read_u64::<LittleEndian>().map_err(bad)? as usize;
        let converged = r.read_u64::<LittleEndian>().map_err(bad)? != 0;
        let count = r.read_u64::<LittleEndian>().map_err(bad)? as usize;
        let problem = HjProblem {
            axes,
            c_r: f[0],
            limits: FwLimits {
                s_min: f[1],
                s_max: f[2],
                u_theta_max: f[3],
                u_s_max: f[4],
            },
        };
        problem
            .validate()
            .map_err(|e| Error::GridFormat(e.to_string()))?;
        let expected: usize = axes.iter().map(|a| a.n).product();
        if count != expected {
            return Err(Error::GridFormat(format!(
                "node count {count} does not match axes ({expected})"
            )));
        }
        let mut values = vec![0.0; count];
        r.read_f64_into::<LittleEndian>(&mut values).map_err(bad)?;
        Ok(ValueGrid {
            problem,
            cap: f[5],
            residual: f[6],
            iterations,
            converged,
            values,
        })
    }
}
