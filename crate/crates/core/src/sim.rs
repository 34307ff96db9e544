//! Deterministic continuous-time swarm simulator.
//!
//! Integrates N robots (physical position in R^n plus m virtual
//! coordinates each) with classical fixed-step RK4, advances the virtual
//! target in closed form, applies scheduled breakdown events, records a
//! full trace and monitors a Lyapunov function of the collective state.
//!
//! The barrier potential makes the dynamics stiff when two virtual
//! coordinates come close; macro steps are then recursively halved (down to
//! `dt_min`) based on the local barrier stiffness, so the default step can
//! stay coarse everywhere else.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::coordination::{cgvf_control, neighbor_set, AlphaPotential, ControlOutput};
use crate::linalg::RealVector;
use crate::manifold::ManifoldSpec;
use crate::trace::SimulationTrace;
use crate::{parity_sign, Error, Result};

type Vector64 = RealVector<f64>;

/// State of one robot: identity, physical position, virtual coordinates and
/// a liveness flag. Once `alive` is false both vectors stay frozen at their
/// values from the breakdown instant.
#[derive(Debug, Clone, PartialEq)]
pub struct RobotState {
    pub id: usize,
    pub x: Vector64,
    pub omega: Vector64,
    pub alive: bool,
}

/// Axis-aligned sampling box.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxBounds {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl BoxBounds {
    fn validate(&self, dim: usize, what: &str) -> Result<()> {
        if self.min.len() != dim || self.max.len() != dim {
            return Err(Error::Config(format!(
                "{what} box must have {dim} bounds per side, got {} and {}",
                self.min.len(),
                self.max.len()
            )));
        }
        for (lo, hi) in self.min.iter().zip(&self.max) {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::Config(format!(
                    "{what} box has an empty or non-finite side [{lo}, {hi}]"
                )));
            }
        }
        Ok(())
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> Vector64 {
        Vector64::from_raw(
            self.min
                .iter()
                .zip(&self.max)
                .map(|(lo, hi)| rng.gen_range(*lo..=*hi))
                .collect(),
        )
    }
}

/// Where the initial robot states come from.
#[derive(Debug, Clone)]
pub enum InitialStates {
    /// Explicit list of (x, omega) pairs; robot ids are 1-based positions.
    Explicit(Vec<(Vector64, Vector64)>),
    /// Seeded uniform sampling; virtual coordinates are rejection-resampled
    /// until all pairwise separations exceed the safe radius.
    Sampled {
        seed: u64,
        count: usize,
        x_box: BoxBounds,
        omega_box: BoxBounds,
    },
}

/// Scheduled breakdown: the robot freezes at `time` and leaves every
/// neighbor set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Breakdown {
    pub robot: usize,
    pub time: f64,
}

/// Full description of one simulation run.
#[derive(Debug, Clone)]
pub struct SwarmConfig {
    pub manifold: ManifoldSpec<f64>,
    /// Convergence gains, one per ambient coordinate.
    pub gains: Vector64,
    /// Target attraction gain c.
    pub attraction: f64,
    pub potential: AlphaPotential<f64>,
    pub dt: f64,
    pub dt_min: f64,
    pub t_end: f64,
    pub initial: InitialStates,
    pub target_omega0: Vector64,
    pub breakdowns: Vec<Breakdown>,
    /// Record every `decimation`-th macro step (1 = every step).
    pub decimation: usize,
}

impl SwarmConfig {
    /// Uniform-gain config with the defaults used throughout: k = 0.7,
    /// c = 20, r = 0.4, R = 1.6, dt = 1e-3, dt_min = 1e-6.
    pub fn with_defaults(manifold: ManifoldSpec<f64>, initial: InitialStates) -> Result<Self> {
        let n = manifold.ambient_dim();
        let m = manifold.manifold_dim();
        Ok(Self {
            manifold,
            gains: Vector64::new(vec![0.7; n])?,
            attraction: 20.0,
            potential: AlphaPotential::new(0.4, 1.6)?,
            dt: 1e-3,
            dt_min: 1e-6,
            t_end: 30.0,
            initial,
            target_omega0: Vector64::zeros(m),
            breakdowns: Vec::new(),
            decimation: 1,
        })
    }

    pub fn robot_count(&self) -> usize {
        match &self.initial {
            InitialStates::Explicit(list) => list.len(),
            InitialStates::Sampled { count, .. } => *count,
        }
    }

    /// `(-1)^n` for this manifold's ambient dimension.
    pub fn sign(&self) -> f64 {
        parity_sign(self.manifold.ambient_dim())
    }

    /// Closed-form target virtual coordinates at time t:
    /// omega_*(t) = omega_*(0) + (-1)^n t 1_m.
    pub fn target_omega(&self, t: f64) -> Vector64 {
        let drift = self.sign() * t;
        Vector64::from_raw(self.target_omega0.iter().map(|w| w + drift).collect())
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.manifold.ambient_dim();
        let m = self.manifold.manifold_dim();
        if self.robot_count() == 0 {
            return Err(Error::Config("at least one robot is required".into()));
        }
        if self.gains.dim() != n {
            return Err(Error::Config(format!(
                "expected {n} gains, got {}",
                self.gains.dim()
            )));
        }
        if let Some(bad) = self.gains.iter().position(|k| *k <= 0.0) {
            return Err(Error::Config(format!(
                "convergence gain {bad} must be strictly positive"
            )));
        }
        if self.attraction <= 0.0 {
            return Err(Error::Config(
                "attraction gain must be strictly positive".into(),
            ));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.dt_min > 0.0 && self.dt_min <= self.dt) {
            return Err(Error::Config(format!(
                "dt_min must satisfy 0 < dt_min <= dt, got {}",
                self.dt_min
            )));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::Config(format!(
                "t_end must be non-negative, got {}",
                self.t_end
            )));
        }
        if self.decimation == 0 {
            return Err(Error::Config("decimation must be at least 1".into()));
        }
        if self.target_omega0.dim() != m {
            return Err(Error::Config(format!(
                "target omega0 has dim {}, manifold has {m} parameters",
                self.target_omega0.dim()
            )));
        }
        let count = self.robot_count();
        for b in &self.breakdowns {
            if b.robot == 0 || b.robot > count {
                return Err(Error::Config(format!(
                    "breakdown schedules robot {} but ids are 1..={count}",
                    b.robot
                )));
            }
            if !(b.time >= 0.0 && b.time.is_finite()) {
                return Err(Error::Config(format!(
                    "breakdown time for robot {} must be non-negative",
                    b.robot
                )));
            }
        }
        if let InitialStates::Explicit(list) = &self.initial {
            for (i, (x, omega)) in list.iter().enumerate() {
                if x.dim() != n || omega.dim() != m {
                    return Err(Error::Config(format!(
                        "initial state {} has dims ({}, {}), expected ({n}, {m})",
                        i + 1,
                        x.dim(),
                        omega.dim()
                    )));
                }
            }
            check_initial_separation(list, self.potential.safe_radius())?;
        }
        if let InitialStates::Sampled {
            count,
            x_box,
            omega_box,
            ..
        } = &self.initial
        {
            if *count == 0 {
                return Err(Error::Config("sampled robot count must be positive".into()));
            }
            x_box.validate(n, "position")?;
            omega_box.validate(m, "virtual-coordinate")?;
        }
        Ok(())
    }

    /// Materialize the initial robot states (ids 1..=N).
    pub fn initial_states(&self) -> Result<Vec<RobotState>> {
        self.validate()?;
        match &self.initial {
            InitialStates::Explicit(list) => Ok(list
                .iter()
                .enumerate()
                .map(|(i, (x, omega))| RobotState {
                    id: i + 1,
                    x: x.clone(),
                    omega: omega.clone(),
                    alive: true,
                })
                .collect()),
            InitialStates::Sampled {
                seed,
                count,
                x_box,
                omega_box,
            } => {
                let r = self.potential.safe_radius();
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let mut states = Vec::with_capacity(*count);
                let mut attempts = 0usize;
                for id in 1..=*count {
                    let x = x_box.sample(&mut rng);
                    let omega = loop {
                        attempts += 1;
                        if attempts > 10_000 {
                            return Err(Error::Config(
                                "could not sample initial virtual coordinates with pairwise \
                                 separation above the safe radius within 10000 attempts; \
                                 enlarge the omega box or shrink r"
                                    .into(),
                            ));
                        }
                        let cand = omega_box.sample(&mut rng);
                        if states
                            .iter()
                            .all(|s: &RobotState| s.omega.distance(&cand) > r)
                        {
                            break cand;
                        }
                    };
                    states.push(RobotState {
                        id,
                        x,
                        omega,
                        alive: true,
                    });
                }
                Ok(states)
            }
        }
    }
}

fn check_initial_separation(list: &[(Vector64, Vector64)], r: f64) -> Result<()> {
    for i in 0..list.len() {
        for k in i + 1..list.len() {
            let d = list[i].1.distance(&list[k].1);
            if d <= r {
                return Err(Error::Config(format!(
                    "initial virtual coordinates of robots {} and {} are separated by \
                     {d:.6}, which does not exceed the safe radius {r}; initial pairwise \
                     separation must be strictly greater than r",
                    i + 1,
                    k + 1
                )));
            }
        }
    }
    Ok(())
}

/// Closest pair of live virtual coordinates: (distance, id_i, id_k).
/// Distance is +inf when fewer than two robots are alive.
fn min_alive_pair(states: &[RobotState]) -> (f64, usize, usize) {
    let mut best = (f64::INFINITY, 0, 0);
    for i in 0..states.len() {
        if !states[i].alive {
            continue;
        }
        for k in i + 1..states.len() {
            if !states[k].alive {
                continue;
            }
            let d = states[i].omega.distance(&states[k].omega);
            if d < best.0 {
                best = (d, states[i].id, states[k].id);
            }
        }
    }
    best
}

/// Per-robot derivative of the stacked state at time `t`; broken robots get
/// zero velocities.
fn derivatives(cfg: &SwarmConfig, states: &[RobotState], t: f64) -> Result<Vec<ControlOutput<f64>>> {
    let target = cfg.target_omega(t);
    let live: Vec<(usize, Vector64)> = states
        .iter()
        .filter(|s| s.alive)
        .map(|s| (s.id, s.omega.clone()))
        .collect();
    let n = cfg.manifold.ambient_dim();
    let m = cfg.manifold.manifold_dim();
    states
        .iter()
        .map(|s| {
            if !s.alive {
                return Ok(ControlOutput {
                    u_x: Vector64::zeros(n),
                    u_omega: Vector64::zeros(m),
                });
            }
            let view = neighbor_set(&live, s.id, &target, &cfg.potential)?;
            cgvf_control(
                &cfg.manifold,
                &s.x,
                &s.omega,
                &view,
                &cfg.gains,
                cfg.attraction,
                &cfg.potential,
            )
        })
        .collect()
}

fn offset_states(base: &[RobotState], k: &[ControlOutput<f64>], h: f64) -> Vec<RobotState> {
    base.iter()
        .zip(k)
        .map(|(s, d)| {
            if !s.alive {
                return s.clone();
            }
            RobotState {
                id: s.id,
                x: s.x.add(&d.u_x.scaled(h)),
                omega: s.omega.add(&d.u_omega.scaled(h)),
                alive: true,
            }
        })
        .collect()
}

fn rk4_once(cfg: &SwarmConfig, states: &[RobotState], t: f64, h: f64) -> Result<Vec<RobotState>> {
    let k1 = derivatives(cfg, states, t)?;
    let k2 = derivatives(cfg, &offset_states(states, &k1, 0.5 * h), t + 0.5 * h)?;
    let k3 = derivatives(cfg, &offset_states(states, &k2, 0.5 * h), t + 0.5 * h)?;
    let k4 = derivatives(cfg, &offset_states(states, &k3, h), t + h)?;
    let sixth = h / 6.0;
    let out: Vec<RobotState> = states
        .iter()
        .enumerate()
        .map(|(i, s)| {
            if !s.alive {
                return s.clone();
            }
            let combine = |a: &Vector64, b: &Vector64, c: &Vector64, d: &Vector64| {
                Vector64::from_raw(
                    a.iter()
                        .zip(b.iter())
                        .zip(c.iter().zip(d.iter()))
                        .map(|((ka, kb), (kc, kd))| sixth * (ka + 2.0 * kb + 2.0 * kc + kd))
                        .collect(),
                )
            };
            let dx = combine(&k1[i].u_x, &k2[i].u_x, &k3[i].u_x, &k4[i].u_x);
            let domega = combine(&k1[i].u_omega, &k2[i].u_omega, &k3[i].u_omega, &k4[i].u_omega);
            RobotState {
                id: s.id,
                x: s.x.add(&dx),
                omega: s.omega.add(&domega),
                alive: true,
            }
        })
        .collect();
    for s in &out {
        if !(s.x.is_finite() && s.omega.is_finite()) {
            return Err(Error::NumericFailure(format!(
                "robot {} reached a non-finite state during the step starting at t={t:.6}",
                s.id
            )));
        }
    }
    Ok(out)
}

/// Local stiffness of the barrier term at pair distance `d`: roughly twice
/// the magnitude of d(alpha)/ds, the fastest decaying mode the repulsion
/// introduces. Zero outside sensing range.
fn barrier_rate(pot: &AlphaPotential<f64>, d: f64) -> f64 {
    let r = pot.safe_radius();
    let big_r = pot.sensing_radius();
    if d >= big_r {
        return 0.0;
    }
    let gap = d - r;
    4.0 * (big_r - r) * (big_r - d) / (gap * gap * gap)
}

fn attach_time(err: Error, t: f64) -> Error {
    match err {
        Error::BarrierViolation(msg) => Error::BarrierViolation(format!("at t={t:.6}: {msg}")),
        other => other,
    }
}

/// Advance the swarm by `h`, recursively halving the step while the closest
/// pair sits in the stiff zone of the barrier (h * rate > 1), never below
/// `dt_min`.
fn advance(cfg: &SwarmConfig, states: &[RobotState], t: f64, h: f64) -> Result<Vec<RobotState>> {
    let (dmin, i, k) = min_alive_pair(states);
    if dmin <= cfg.potential.safe_radius() {
        return Err(Error::BarrierViolation(format!(
            "at t={t:.6}: robots {i} and {k} at virtual-coordinate distance {dmin:.6} \
             within the safe radius {}",
            cfg.potential.safe_radius()
        )));
    }
    if h > cfg.dt_min && h * barrier_rate(&cfg.potential, dmin) > 1.0 {
        let half = 0.5 * h;
        let mid = advance(cfg, states, t, half)?;
        return advance(cfg, &mid, t + half, half);
    }
    rk4_once(cfg, states, t, h).map_err(|e| attach_time(e, t))
}

/// One macro step of size `config.dt` starting at time `t`. Broken robots
/// are left untouched; the barrier-induced stiffness is handled by internal
/// step halving.
pub fn step(config: &SwarmConfig, states: &[RobotState], t: f64) -> Result<Vec<RobotState>> {
    advance(config, states, t, config.dt)
}

/// Lyapunov function of the collective state, split into its three
/// nonnegative components:
/// sum_i Phi_i^T K Phi_i, sum_i c |omega_i - omega_*|^2, and the pairwise
/// barrier integrals sum_i sum_{k in N_i} int_{d_ik}^R alpha(s) ds
/// (each unordered pair counted twice). Broken robots are excluded.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LyapunovMonitor {
    pub value: f64,
    pub manifold_error_term: f64,
    pub target_tracking_term: f64,
    pub barrier_term: f64,
}

/// Evaluate the Lyapunov monitor at a state snapshot taken at time `t`.
pub fn lyapunov(config: &SwarmConfig, states: &[RobotState], t: f64) -> Result<LyapunovMonitor> {
    let target = config.target_omega(t);
    let mut manifold_error_term = 0.0;
    let mut target_tracking_term = 0.0;
    let mut barrier_term = 0.0;
    let live: Vec<&RobotState> = states.iter().filter(|s| s.alive).collect();
    for s in &live {
        let phi = config.manifold.phi(&s.x, &s.omega)?;
        for (j, v) in phi.values().iter().enumerate() {
            manifold_error_term += config.gains[j] * v * v;
        }
        let err = s.omega.sub(&target);
        target_tracking_term += config.attraction * err.dot(&err);
    }
    for i in 0..live.len() {
        for k in 0..live.len() {
            if i == k {
                continue;
            }
            let d = live[i].omega.distance(&live[k].omega);
            barrier_term += config.potential.integral_to_sensing(d)?;
        }
    }
    Ok(LyapunovMonitor {
        value: manifold_error_term + target_tracking_term + barrier_term,
        manifold_error_term,
        target_tracking_term,
        barrier_term,
    })
}

/// Integrate the configured scenario from t = 0 to t_end, recording every
/// `decimation`-th macro step (plus the final state). Terminates early only
/// on barrier violations or numeric failures.
pub fn run(config: &SwarmConfig) -> Result<SimulationTrace> {
    config.validate()?;
    let mut states = config.initial_states()?;
    let n_steps = (config.t_end / config.dt).round() as usize;

    let mut events = config.breakdowns.clone();
    events.sort_by(|a, b| a.time.total_cmp(&b.time));
    let mut next_event = 0usize;

    let mut trace = SimulationTrace::new(config, &states);
    for step_idx in 0..=n_steps {
        let t = step_idx as f64 * config.dt;
        while next_event < events.len() && events[next_event].time <= t + 0.5 * config.dt {
            let id = events[next_event].robot;
            if let Some(s) = states.iter_mut().find(|s| s.id == id) {
                s.alive = false;
            }
            next_event += 1;
        }
        if step_idx.is_multiple_of(config.decimation) || step_idx == n_steps {
            let controls = derivatives(config, &states, t).map_err(|e| attach_time(e, t))?;
            let monitor = lyapunov(config, &states, t).map_err(|e| attach_time(e, t))?;
            trace.record(config, t, &states, &controls, &monitor);
        }
        if step_idx < n_steps {
            states = advance(config, &states, t, config.dt)?;
        }
    }
    Ok(trace)
}

/// Thresholds for the terminal success conditions.
#[derive(Debug, Clone, Copy)]
pub struct ConditionTolerances {
    /// C1: max final on-manifold error norm.
    pub phi: f64,
    /// C2: max final deviation of omega-rate from the common drift.
    pub omega_rate: f64,
    /// C3a: final distance between the live-mean omega and the target.
    pub centroid: f64,
}

impl Default for ConditionTolerances {
    fn default() -> Self {
        Self {
            phi: 1e-2,
            omega_rate: 1e-2,
            centroid: 1e-2,
        }
    }
}

/// Outcome of a single condition check with its witness value.
#[derive(Debug, Clone, Serialize)]
pub struct ConditionCheck {
    pub pass: bool,
    pub witness: f64,
    pub detail: String,
}

/// Pass/fail report for the four terminal checks.
#[derive(Debug, Clone, Serialize)]
pub struct ConditionReport {
    /// On-manifold convergence: every live robot's final ||Phi|| small.
    pub c1: ConditionCheck,
    /// On-manifold maneuvering: every live robot's final omega-rate equals
    /// the common drift (-1)^n per axis.
    pub c2: ConditionCheck,
    /// Coordination (a): live-mean omega tracks the virtual target.
    pub c3a: ConditionCheck,
    /// Coordination (b): pairwise omega distances stay above r over the
    /// whole run and the final live swarm fits within the sensing radius.
    pub c3b: ConditionCheck,
}

impl ConditionReport {
    pub fn all_pass(&self) -> bool {
        self.c1.pass && self.c2.pass && self.c3a.pass && self.c3b.pass
    }
}

/// Evaluate the terminal conditions on a completed trace.
pub fn check_conditions(trace: &SimulationTrace, tol: &ConditionTolerances) -> ConditionReport {
    let last = trace.sample_count() - 1;
    let sign = trace.sign;

    let mut phi_max: f64 = 0.0;
    let mut rate_max: f64 = 0.0;
    let mut any_alive = false;
    for robot in &trace.robots {
        if !robot.alive[last] {
            continue;
        }
        any_alive = true;
        phi_max = phi_max.max(robot.phi_norm[last]);
        let rate_err: f64 = robot.u_omega[last]
            .iter()
            .map(|u| (u - sign) * (u - sign))
            .sum::<f64>()
            .sqrt();
        rate_max = rate_max.max(rate_err);
    }

    let c1 = ConditionCheck {
        pass: any_alive && phi_max <= tol.phi,
        witness: phi_max,
        detail: format!(
            "max final on-manifold error {phi_max:.3e} (tolerance {:.3e})",
            tol.phi
        ),
    };
    let c2 = ConditionCheck {
        pass: any_alive && rate_max <= tol.omega_rate,
        witness: rate_max,
        detail: format!(
            "max final omega-rate deviation from {sign:+} per axis: {rate_max:.3e} \
             (tolerance {:.3e})",
            tol.omega_rate
        ),
    };

    let centroid_err = trace.mean_omega_error[last];
    let c3a = ConditionCheck {
        pass: any_alive && centroid_err <= tol.centroid,
        witness: centroid_err,
        detail: format!(
            "final live-mean omega offset from target {centroid_err:.3e} (tolerance {:.3e})",
            tol.centroid
        ),
    };

    let r = trace.safe_radius;
    let big_r = trace.sensing_radius;
    let mut min_over_trace = f64::INFINITY;
    let mut min_idx = 0;
    for (idx, d) in trace.min_pair_distance.iter().enumerate() {
        if *d < min_over_trace {
            min_over_trace = *d;
            min_idx = idx;
        }
    }
    let min_pair = trace.closest_pair_at(min_idx);
    let pair_label = min_pair
        .map(|(i, k)| format!(" (robots {i} and {k})"))
        .unwrap_or_default();
    let final_max = trace.max_pair_distance[last];
    let lower_ok = min_over_trace > r;
    let upper_ok = !final_max.is_finite() || final_max < big_r;
    let c3b = ConditionCheck {
        pass: lower_ok && upper_ok,
        witness: min_over_trace,
        detail: format!(
            "min pairwise omega distance over trace {min_over_trace:.6} at t={:.3}{pair_label} \
             (must stay above r={r}); final max pairwise distance {final_max:.6} \
             (must stay below R={big_r})",
            trace.times[min_idx]
        ),
    };

    ConditionReport { c1, c2, c3a, c3b }
}
