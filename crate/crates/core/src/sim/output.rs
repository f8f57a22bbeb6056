//! Run directory layout: `trajectory.csv`, `metrics.csv`, `collisions.csv`,
//! `summary.toml` and an echo of the scenario in `scenario.toml`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Model, RunOutput, VehicleState};
use crate::error::{Error, Result};

/// End-of-run digest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub name: String,
    pub model: Model,
    pub n: usize,
    pub dt: f64,
    pub t_end: f64,
    pub steps: usize,
    pub seed: u64,
    pub r_d: f64,
    pub collision_events: usize,
    /// r_d-subcover within 0.2 m at the final time.
    pub final_cover: bool,
    /// r_d-subcover within 1 mm at the final time.
    pub final_cover_exact: bool,
    pub final_min_pairwise: f64,
    pub final_max_signed_dist: f64,
    pub final_flock_pos_sum: f64,
    pub final_flock_vel_sum: f64,
    /// Largest speed relative to the local domain velocity.
    pub final_max_rel_speed: f64,
    pub final_energy: f64,
    pub wall_time_s: f64,
}

/// Writes all run files into `dir`, creating it when missing.
pub fn write_run(out: &RunOutput, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let path = dir.join("trajectory.csv");
    let mut w = csv::Writer::from_path(&path)?;
    match out.scenario.model {
        Model::DoubleIntegrator => {
            w.write_record(["t", "id", "x", "y", "vx", "vy", "ux", "uy", "mode"])?
        }
        Model::FixedWing => {
            w.write_record(["t", "id", "x", "y", "theta", "s", "u_theta", "u_s", "mode"])?
        }
    }
    for r in &out.trajectory {
        let (a, b, c, d) = match r.state {
            VehicleState::Di(s) => (s.p.x, s.p.y, s.v.x, s.v.y),
            VehicleState::Fw(s) => (s.p.x, s.p.y, s.theta, s.s),
        };
        w.write_record([
            r.t.to_string(),
            r.id.to_string(),
            a.to_string(),
            b.to_string(),
            c.to_string(),
            d.to_string(),
            r.u[0].to_string(),
            r.u[1].to_string(),
            r.mode.label(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;

    let path = dir.join("metrics.csv");
    let mut w = csv::Writer::from_path(&path)?;
    for m in &out.metrics {
        w.serialize(m)?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;

    let path = dir.join("collisions.csv");
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(["i", "j", "t_start", "t_end"])?;
    for e in out.collisions.events() {
        w.write_record([
            e.i.to_string(),
            e.j.to_string(),
            e.t_start.to_string(),
            e.t_end.map(|t| t.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;

    let summary = toml::to_string_pretty(&out.summary).expect("summary serializes");
    let path = dir.join("summary.toml");
    fs::write(&path, summary).map_err(|e| Error::io(&path, e))?;
    let path = dir.join("scenario.toml");
    fs::write(&path, out.scenario.to_toml_string()).map_err(|e| Error::io(&path, e))?;
    Ok(())
}

pub fn read_summary(dir: &Path) -> Result<Summary> {
    let path = dir.join("summary.toml");
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    toml::from_str(&text).map_err(|e| Error::Config(e.to_string()))
}
