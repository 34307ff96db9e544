//! Scenario files: a strict JSON schema describing one simulation run.
//!
//! ```json
//! {
//!   "manifold": "helicoid3",
//!   "robots": { "count": 7, "seed": 11,
//!               "x_box": {"min": [-6,-6,-3], "max": [6,6,3]},
//!               "omega_box": {"min": [-1.5,-1.5,-1.5], "max": [1.5,1.5,1.5]} },
//!   "gains": { "k": 0.7, "c": 20.0 },
//!   "radii": { "r": 0.4, "R": 1.6 },
//!   "integrator": { "dt": 0.001, "t_end": 30.0, "dt_min": 1e-6 },
//!   "target": { "omega0": [0, 0, 0] },
//!   "breakdowns": [ { "robot": 1, "time": 0.2 } ],
//!   "outputs": { "csv": "trace.csv", "json": "summary.json", "decimation": 1 }
//! }
//! ```
//!
//! `manifold` is either a builtin name or
//! `{"expressions": ["...", ...], "params": m}` with formulas in `w1..wm`.
//! `robots` carries either `states` (explicit list) or the sampling fields
//! shown above. Unknown keys are rejected with line/column positions.
//! Dotted-path overrides (`--set integrator.dt=5e-4`) are applied to the
//! JSON tree before validation, so they obey the same schema.

use std::path::Path;

use serde::Deserialize;

use gvf_core::linalg::RealVector;
use gvf_core::manifold::ManifoldSpec;
use gvf_core::sim::{BoxBounds, Breakdown, InitialStates, SwarmConfig};
use gvf_core::{AlphaPotential64, Error};

/// Scenarios compiled into the binary, addressable by name in `simulate`.
pub const BUNDLED: &[(&str, &str)] = &[
    (
        "helicoid_case1",
        include_str!("../scenarios/helicoid_case1.json"),
    ),
    (
        "helicoid_case2",
        include_str!("../scenarios/helicoid_case2.json"),
    ),
    (
        "torus4d_case1",
        include_str!("../scenarios/torus4d_case1.json"),
    ),
    (
        "torus4d_case2",
        include_str!("../scenarios/torus4d_case2.json"),
    ),
    (
        "breakdown_case1",
        include_str!("../scenarios/breakdown_case1.json"),
    ),
    (
        "breakdown_case2",
        include_str!("../scenarios/breakdown_case2.json"),
    ),
];

pub fn bundled(name: &str) -> Option<&'static str> {
    BUNDLED
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| *text)
}

pub fn bundled_names() -> Vec<&'static str> {
    BUNDLED.iter().map(|(n, _)| *n).collect()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub manifold: ManifoldField,
    pub robots: RobotsField,
    pub gains: GainsField,
    pub radii: RadiiField,
    pub integrator: IntegratorField,
    #[serde(default)]
    pub target: Option<TargetField>,
    #[serde(default)]
    pub breakdowns: Vec<BreakdownField>,
    #[serde(default)]
    pub outputs: OutputsField,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum ManifoldField {
    Builtin(String),
    Expressions {
        expressions: Vec<String>,
        params: usize,
    },
}

/// Either explicit `states` or the seeded-sampling fields; mixing them is
/// rejected during conversion.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotsField {
    #[serde(default)]
    pub states: Option<Vec<StateField>>,
    #[serde(default)]
    pub count: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub x_box: Option<BoxField>,
    #[serde(default)]
    pub omega_box: Option<BoxField>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateField {
    pub x: Vec<f64>,
    pub omega: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxField {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainsField {
    pub k: ScalarOrVec,
    pub c: f64,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum ScalarOrVec {
    Scalar(f64),
    Vec(Vec<f64>),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadiiField {
    pub r: f64,
    #[serde(rename = "R")]
    pub sensing: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorField {
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "default_dt_min")]
    pub dt_min: f64,
}

fn default_dt_min() -> f64 {
    1e-6
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetField {
    pub omega0: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BreakdownField {
    pub robot: usize,
    pub time: f64,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputsField {
    #[serde(default)]
    pub csv: Option<String>,
    #[serde(default)]
    pub json: Option<String>,
    #[serde(default)]
    pub decimation: Option<usize>,
}

/// Apply one `path=value` override to the parsed JSON tree. Intermediate
/// objects are created as needed; schema validation happens afterwards, so
/// misspelled paths still fail loudly.
pub fn apply_override(root: &mut serde_json::Value, spec: &str) -> Result<(), Error> {
    let (path, raw) = spec.split_once('=').ok_or_else(|| {
        Error::Parse(format!("override `{spec}` must have the form path=value"))
    })?;
    if path.is_empty() {
        return Err(Error::Parse(format!("override `{spec}` has an empty path")));
    }
    let mut cursor = root;
    let segments: Vec<&str> = path.split('.').collect();
    for (idx, segment) in segments.iter().enumerate() {
        let map = cursor.as_object_mut().ok_or_else(|| {
            Error::Parse(format!(
                "override path `{path}`: `{}` is not an object",
                segments[..idx].join(".")
            ))
        })?;
        if idx + 1 == segments.len() {
            let value = serde_json::from_str(raw)
                .unwrap_or_else(|_| serde_json::Value::String(raw.to_string()));
            map.insert((*segment).to_string(), value);
            return Ok(());
        }
        cursor = map
            .entry((*segment).to_string())
            .or_insert_with(|| serde_json::Value::Object(Default::default()));
    }
    unreachable!("loop returns on the last segment");
}

/// Parse scenario text (after overrides) into the strict schema.
pub fn parse(text: &str, overrides: &[String]) -> Result<ScenarioFile, Error> {
    let mut value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    for spec in overrides {
        apply_override(&mut value, spec)?;
    }
    // Deserializing from the Value loses line/column for override-injected
    // errors, so reserialize and parse once more to keep positions exact.
    let rendered =
        serde_json::to_string_pretty(&value).map_err(|e| Error::Parse(e.to_string()))?;
    serde_json::from_str(&rendered).map_err(|e| Error::Parse(e.to_string()))
}

/// Resolve a `simulate` argument: an existing file path, or the name of a
/// bundled scenario.
pub fn load_source(arg: &str) -> Result<(String, String), Error> {
    let path = Path::new(arg);
    if path.exists() {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Parse(format!("cannot read `{arg}`: {e}")))?;
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "scenario".into());
        return Ok((stem, text));
    }
    if let Some(text) = bundled(arg) {
        return Ok((arg.to_string(), text.to_string()));
    }
    Err(Error::Parse(format!(
        "`{arg}` is neither a readable file nor a bundled scenario (bundled: {})",
        bundled_names().join(", ")
    )))
}

impl ScenarioFile {
    /// Validate and convert into a runnable configuration.
    pub fn to_config(&self) -> Result<SwarmConfig, Error> {
        let manifold = match &self.manifold {
            ManifoldField::Builtin(name) => ManifoldSpec::builtin(name)?,
            ManifoldField::Expressions {
                expressions,
                params,
            } => ManifoldSpec::from_expressions("custom", expressions, *params)?,
        };
        let n = manifold.ambient_dim();
        let m = manifold.manifold_dim();

        let gains = match &self.gains.k {
            ScalarOrVec::Scalar(k) => RealVector::new(vec![*k; n])?,
            ScalarOrVec::Vec(ks) => {
                if ks.len() != n {
                    return Err(Error::Config(format!(
                        "gains.k has {} entries but the manifold has {n} coordinates",
                        ks.len()
                    )));
                }
                RealVector::new(ks.clone())?
            }
        };

        let potential = AlphaPotential64::new(self.radii.r, self.radii.sensing)?;

        let initial = match (&self.robots.states, self.robots.count) {
            (Some(states), None) => {
                if self.robots.seed.is_some()
                    || self.robots.x_box.is_some()
                    || self.robots.omega_box.is_some()
                {
                    return Err(Error::Config(
                        "robots: `states` excludes the sampling fields \
                         (count/seed/x_box/omega_box)"
                            .into(),
                    ));
                }
                let mut list = Vec::with_capacity(states.len());
                for s in states {
                    list.push((
                        RealVector::new(s.x.clone())?,
                        RealVector::new(s.omega.clone())?,
                    ));
                }
                InitialStates::Explicit(list)
            }
            (None, Some(count)) => {
                let seed = self.robots.seed.ok_or_else(|| {
                    Error::Config("robots: sampled initial states need a `seed`".into())
                })?;
                let x_box = self.robots.x_box.as_ref().ok_or_else(|| {
                    Error::Config("robots: sampled initial states need an `x_box`".into())
                })?;
                let omega_box = self.robots.omega_box.as_ref().ok_or_else(|| {
                    Error::Config("robots: sampled initial states need an `omega_box`".into())
                })?;
                InitialStates::Sampled {
                    seed,
                    count,
                    x_box: BoxBounds {
                        min: x_box.min.clone(),
                        max: x_box.max.clone(),
                    },
                    omega_box: BoxBounds {
                        min: omega_box.min.clone(),
                        max: omega_box.max.clone(),
                    },
                }
            }
            _ => {
                return Err(Error::Config(
                    "robots: provide either `states` or `count` (with seed and boxes)".into(),
                ))
            }
        };

        let target_omega0 = match &self.target {
            Some(t) => RealVector::new(t.omega0.clone())?,
            None => RealVector::zeros(m),
        };

        let config = SwarmConfig {
            manifold,
            gains,
            attraction: self.gains.c,
            potential,
            dt: self.integrator.dt,
            dt_min: self.integrator.dt_min,
            t_end: self.integrator.t_end,
            initial,
            target_omega0,
            breakdowns: self
                .breakdowns
                .iter()
                .map(|b| Breakdown {
                    robot: b.robot,
                    time: b.time,
                })
                .collect(),
            decimation: self.outputs.decimation.unwrap_or(1),
        };
        config.validate()?;
        Ok(config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_scenarios_all_parse_and_validate() {
        for (name, text) in BUNDLED {
            let file = parse(text, &[]).unwrap_or_else(|e| panic!("{name}: {e}"));
            file.to_config().unwrap_or_else(|e| panic!("{name}: {e}"));
        }
    }

    #[test]
    fn unknown_key_is_rejected_with_position() {
        let text = r#"{
            "manifold": "circle2",
            "robots": { "states": [ { "x": [1, 0], "omega": [0] } ] },
            "gains": { "k": 0.7, "c": 20.0 },
            "radii": { "r": 0.4, "R": 1.6 },
            "integrator": { "dt": 0.001, "t_end": 1.0 },
            "typo_key": 1
        }"#;
        let err = parse(text, &[]).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("typo_key"), "{msg}");
        assert!(msg.contains("line"), "{msg}");
    }

    #[test]
    fn override_changes_nested_value() {
        let text = bundled("helicoid_case1").unwrap();
        let file = parse(text, &["integrator.t_end=0.01".to_string()]).unwrap();
        assert_eq!(file.integrator.t_end, 0.01);
    }

    #[test]
    fn override_with_bad_path_fails_schema() {
        let text = bundled("helicoid_case1").unwrap();
        let err = parse(text, &["integrater.dt=1e-4".to_string()]).unwrap_err();
        assert!(err.to_string().contains("integrater"));
    }

    #[test]
    fn override_must_contain_equals() {
        let text = bundled("helicoid_case1").unwrap();
        assert!(parse(text, &["integrator.dt".to_string()]).is_err());
    }

    #[test]
    fn expression_manifold_scenario() {
        let text = r#"{
            "manifold": { "expressions": ["cos(w1)", "sin(w1)"], "params": 1 },
            "robots": { "states": [ { "x": [1, 0], "omega": [0] } ] },
            "gains": { "k": 0.7, "c": 20.0 },
            "radii": { "r": 0.4, "R": 1.6 },
            "integrator": { "dt": 0.001, "t_end": 0.1 }
        }"#;
        let cfg = parse(text, &[]).unwrap().to_config().unwrap();
        assert_eq!(cfg.manifold.ambient_dim(), 2);
        assert_eq!(cfg.manifold.manifold_dim(), 1);
    }

    #[test]
    fn mixed_robot_specs_rejected() {
        let text = r#"{
            "manifold": "circle2",
            "robots": { "states": [ { "x": [1, 0], "omega": [0] } ], "seed": 3 },
            "gains": { "k": 0.7, "c": 20.0 },
            "radii": { "r": 0.4, "R": 1.6 },
            "integrator": { "dt": 0.001, "t_end": 1.0 }
        }"#;
        let err = parse(text, &[]).unwrap().to_config().unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn close_initial_omegas_rejected_with_separation_message() {
        let text = r#"{
            "manifold": "circle2",
            "robots": { "states": [
                { "x": [1, 0], "omega": [0.0] },
                { "x": [0, 1], "omega": [0.3] }
            ] },
            "gains": { "k": 0.7, "c": 20.0 },
            "radii": { "r": 0.4, "R": 1.6 },
            "integrator": { "dt": 0.001, "t_end": 1.0 }
        }"#;
        let err = parse(text, &[]).unwrap().to_config().unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, Error::Config(_)));
        assert!(msg.contains("safe radius"), "{msg}");
    }

    #[test]
    fn per_axis_gains_accepted() {
        let text = r#"{
            "manifold": "circle2",
            "robots": { "states": [ { "x": [1, 0], "omega": [0] } ] },
            "gains": { "k": [0.5, 0.9], "c": 20.0 },
            "radii": { "r": 0.4, "R": 1.6 },
            "integrator": { "dt": 0.001, "t_end": 1.0 }
        }"#;
        let cfg = parse(text, &[]).unwrap().to_config().unwrap();
        assert_eq!(cfg.gains.as_slice(), &[0.5, 0.9]);
    }
}
