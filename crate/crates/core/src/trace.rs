//! Recorded simulation time series, CSV export and JSON summaries.
//!
//! CSV layout (one row per sample, floats in shortest lossless form):
//! `t`, then per robot (in id order) `r{id}_x1..x{n}`, `r{id}_w1..w{m}`,
//! `r{id}_phi`, then the aggregates `min_pair_dist`, `max_pair_dist`,
//! `mean_omega_error`, `lyapunov`. The column order is stable.

use std::io::{self, Write};

use serde::Serialize;

use crate::coordination::ControlOutput;
use crate::sim::{ConditionReport, LyapunovMonitor, RobotState, SwarmConfig};

/// Time series of one robot.
#[derive(Debug, Clone, PartialEq)]
pub struct RobotTrace {
    pub id: usize,
    /// Physical position per sample.
    pub x: Vec<Vec<f64>>,
    /// Virtual coordinates per sample.
    pub omega: Vec<Vec<f64>>,
    /// On-manifold error norm per sample.
    pub phi_norm: Vec<f64>,
    /// Virtual-coordinate velocity command per sample (zero once broken).
    pub u_omega: Vec<Vec<f64>>,
    /// Liveness per sample.
    pub alive: Vec<bool>,
}

/// Complete record of one simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationTrace {
    pub times: Vec<f64>,
    pub robots: Vec<RobotTrace>,
    /// Virtual target coordinates per sample.
    pub target_omega: Vec<Vec<f64>>,
    /// Min pairwise virtual distance over live robots (+inf if < 2 alive).
    pub min_pair_distance: Vec<f64>,
    /// Max pairwise virtual distance over live robots (-inf if < 2 alive).
    pub max_pair_distance: Vec<f64>,
    /// Norm of (live-mean omega) - omega_*.
    pub mean_omega_error: Vec<f64>,
    /// Lyapunov value per sample.
    pub lyapunov: Vec<f64>,
    pub safe_radius: f64,
    pub sensing_radius: f64,
    /// Common drift (-1)^n of the virtual coordinates.
    pub sign: f64,
    pub ambient_dim: usize,
    pub manifold_dim: usize,
}

impl SimulationTrace {
    /// Empty trace shell for the robots in `initial`.
    pub fn new(config: &SwarmConfig, initial: &[RobotState]) -> Self {
        Self {
            times: Vec::new(),
            robots: initial
                .iter()
                .map(|s| RobotTrace {
                    id: s.id,
                    x: Vec::new(),
                    omega: Vec::new(),
                    phi_norm: Vec::new(),
                    u_omega: Vec::new(),
                    alive: Vec::new(),
                })
                .collect(),
            target_omega: Vec::new(),
            min_pair_distance: Vec::new(),
            max_pair_distance: Vec::new(),
            mean_omega_error: Vec::new(),
            lyapunov: Vec::new(),
            safe_radius: config.potential.safe_radius(),
            sensing_radius: config.potential.sensing_radius(),
            sign: config.sign(),
            ambient_dim: config.manifold.ambient_dim(),
            manifold_dim: config.manifold.manifold_dim(),
        }
    }

    /// Append one sample. `controls` must be the derivative evaluation at
    /// exactly this state and time.
    pub fn record(
        &mut self,
        config: &SwarmConfig,
        t: f64,
        states: &[RobotState],
        controls: &[ControlOutput<f64>],
        monitor: &LyapunovMonitor,
    ) {
        self.times.push(t);
        let target = config.target_omega(t);
        self.target_omega.push(target.as_slice().to_vec());

        for ((robot, state), control) in self.robots.iter_mut().zip(states).zip(controls) {
            robot.x.push(state.x.as_slice().to_vec());
            robot.omega.push(state.omega.as_slice().to_vec());
            let phi = config
                .manifold
                .phi(&state.x, &state.omega)
                .map(|p| p.norm())
                .unwrap_or(f64::NAN);
            robot.phi_norm.push(phi);
            robot.u_omega.push(control.u_omega.as_slice().to_vec());
            robot.alive.push(state.alive);
        }

        let live: Vec<&RobotState> = states.iter().filter(|s| s.alive).collect();
        let mut min_d = f64::INFINITY;
        let mut max_d = f64::NEG_INFINITY;
        for i in 0..live.len() {
            for k in i + 1..live.len() {
                let d = live[i].omega.distance(&live[k].omega);
                min_d = min_d.min(d);
                max_d = max_d.max(d);
            }
        }
        self.min_pair_distance.push(min_d);
        self.max_pair_distance.push(max_d);

        let mean_err = if live.is_empty() {
            f64::NAN
        } else {
            let m = self.manifold_dim;
            let mut mean = vec![0.0; m];
            for s in &live {
                for (acc, w) in mean.iter_mut().zip(s.omega.iter()) {
                    *acc += w;
                }
            }
            mean.iter()
                .zip(target.iter())
                .map(|(acc, tw)| {
                    let e = acc / live.len() as f64 - tw;
                    e * e
                })
                .sum::<f64>()
                .sqrt()
        };
        self.mean_omega_error.push(mean_err);
        self.lyapunov.push(monitor.value);
    }

    pub fn sample_count(&self) -> usize {
        self.times.len()
    }

    /// Final simulated time.
    pub fn t_end(&self) -> f64 {
        *self.times.last().unwrap_or(&0.0)
    }

    /// Smallest pairwise virtual-coordinate distance over the whole run.
    pub fn min_pair_distance_over_trace(&self) -> f64 {
        self.min_pair_distance
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Ids of the closest live pair at sample `idx`, if two robots were
    /// alive there.
    pub fn closest_pair_at(&self, idx: usize) -> Option<(usize, usize)> {
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..self.robots.len() {
            if !self.robots[i].alive.get(idx).copied().unwrap_or(false) {
                continue;
            }
            for k in i + 1..self.robots.len() {
                if !self.robots[k].alive.get(idx).copied().unwrap_or(false) {
                    continue;
                }
                let d: f64 = self.robots[i].omega[idx]
                    .iter()
                    .zip(&self.robots[k].omega[idx])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                if best.is_none_or(|(bd, _, _)| d < bd) {
                    best = Some((d, self.robots[i].id, self.robots[k].id));
                }
            }
        }
        best.map(|(_, i, k)| (i, k))
    }

    /// Write the full trace as CSV; deterministic byte-for-byte for a given
    /// trace.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        let mut header = vec!["t".to_string()];
        for robot in &self.robots {
            for j in 1..=self.ambient_dim {
                header.push(format!("r{}_x{j}", robot.id));
            }
            for l in 1..=self.manifold_dim {
                header.push(format!("r{}_w{l}", robot.id));
            }
            header.push(format!("r{}_phi", robot.id));
        }
        header.push("min_pair_dist".into());
        header.push("max_pair_dist".into());
        header.push("mean_omega_error".into());
        header.push("lyapunov".into());
        writeln!(out, "{}", header.join(","))?;

        for s in 0..self.sample_count() {
            let mut row = Vec::with_capacity(header.len());
            row.push(fmt_float(self.times[s]));
            for robot in &self.robots {
                row.extend(robot.x[s].iter().map(|v| fmt_float(*v)));
                row.extend(robot.omega[s].iter().map(|v| fmt_float(*v)));
                row.push(fmt_float(robot.phi_norm[s]));
            }
            row.push(fmt_float(self.min_pair_distance[s]));
            row.push(fmt_float(self.max_pair_distance[s]));
            row.push(fmt_float(self.mean_omega_error[s]));
            row.push(fmt_float(self.lyapunov[s]));
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }

    /// Condensed machine-readable result of the run.
    pub fn summary(&self, report: &ConditionReport) -> Summary {
        let last = self.sample_count().saturating_sub(1);
        let alive_ids = self
            .robots
            .iter()
            .filter(|r| *r.alive.get(last).unwrap_or(&false))
            .map(|r| r.id)
            .collect();
        Summary {
            t_end: self.t_end(),
            samples: self.sample_count(),
            robots: self.robots.len(),
            alive_ids,
            all_conditions_pass: report.all_pass(),
            conditions: report.clone(),
            min_pairwise_omega_distance: finite_or_none(self.min_pair_distance_over_trace()),
            final_max_pairwise_omega_distance: finite_or_none(
                self.max_pair_distance.get(last).copied().unwrap_or(f64::NAN),
            ),
            final_lyapunov: self.lyapunov.get(last).copied().unwrap_or(f64::NAN),
            final_mean_omega_error: self.mean_omega_error.get(last).copied().unwrap_or(f64::NAN),
        }
    }
}

/// Shortest lossless decimal form (round-trips to the same f64); infinities
/// and NaN appear as `inf`/`-inf`/`NaN`.
fn fmt_float(v: f64) -> String {
    format!("{v}")
}

fn finite_or_none(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

/// JSON summary written next to the CSV trace.
#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub t_end: f64,
    pub samples: usize,
    pub robots: usize,
    pub alive_ids: Vec<usize>,
    pub all_conditions_pass: bool,
    pub conditions: ConditionReport,
    /// None when fewer than two robots were ever alive simultaneously.
    pub min_pairwise_omega_distance: Option<f64>,
    pub final_max_pairwise_omega_distance: Option<f64>,
    pub final_lyapunov: f64,
    pub final_mean_omega_error: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::ManifoldSpec;
    use crate::sim::{self, InitialStates, SwarmConfig};
    use crate::linalg::RealVector;

    fn tiny_run() -> SimulationTrace {
        let spec = ManifoldSpec::<f64>::builtin("circle2").unwrap();
        let w1 = RealVector::new(vec![0.0]).unwrap();
        let w2 = RealVector::new(vec![1.0]).unwrap();
        let cfg = SwarmConfig {
            t_end: 0.003,
            ..SwarmConfig::with_defaults(
                spec.clone(),
                InitialStates::Explicit(vec![
                    (spec.evaluate(&w1).unwrap(), w1),
                    (spec.evaluate(&w2).unwrap(), w2),
                ]),
            )
            .unwrap()
        };
        sim::run(&cfg).unwrap()
    }

    #[test]
    fn csv_shape_and_header() {
        let trace = tiny_run();
        let mut buf = Vec::new();
        trace.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        let header = lines.next().unwrap();
        assert_eq!(
            header,
            "t,r1_x1,r1_x2,r1_w1,r1_phi,r2_x1,r2_x2,r2_w1,r2_phi,\
             min_pair_dist,max_pair_dist,mean_omega_error,lyapunov"
        );
        let rows: Vec<&str> = lines.collect();
        assert_eq!(rows.len(), trace.sample_count());
        for row in rows {
            assert_eq!(row.split(',').count(), header.split(',').count());
        }
    }

    #[test]
    fn csv_floats_round_trip() {
        let trace = tiny_run();
        let mut buf = Vec::new();
        trace.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let first_data = text.lines().nth(1).unwrap();
        let cols: Vec<f64> = first_data
            .split(',')
            .map(|c| c.parse::<f64>().unwrap())
            .collect();
        assert_eq!(cols[0], trace.times[0]);
        assert_eq!(cols[1], trace.robots[0].x[0][0]);
    }

    #[test]
    fn summary_serializes() {
        let trace = tiny_run();
        let report = sim::check_conditions(&trace, &sim::ConditionTolerances::default());
        let summary = trace.summary(&report);
        let json = serde_json::to_string_pretty(&summary).unwrap();
        assert!(json.contains("\"conditions\""));
        assert!(json.contains("\"min_pairwise_omega_distance\""));
        let parsed: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(parsed["robots"], 2);
    }
}
