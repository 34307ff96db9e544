//! Implementations behind the `simulate`, `verify-lemma1` and
//! `coupling-demo` subcommands.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use gvf_core::gvf::{
    closed_form_from_partials, coupling_demo, feasible_aux_vectors, propagation_from_partials,
};
use gvf_core::linalg::{RealMatrix, RealVector};
use gvf_core::sim::{self, check_conditions, ConditionReport, ConditionTolerances};
use gvf_core::trace::SimulationTrace;
use gvf_core::Error;

use crate::scenario;
use crate::OUT_DIR_ENV;

/// Exit codes shared by the binary and its tests.
pub mod exit_codes {
    /// Every requested condition passed.
    pub const OK: i32 = 0;
    /// The run completed but some terminal condition failed.
    pub const CONDITIONS_NOT_MET: i32 = 1;
    /// Scenario parse or configuration error.
    pub const PARSE: i32 = 2;
    /// Barrier violation during integration.
    pub const BARRIER: i32 = 3;
    /// Non-finite state or other numeric failure.
    pub const NUMERIC: i32 = 4;
    /// Closed-form/brute-force mismatch in `verify-lemma1`.
    pub const VERIFY_MISMATCH: i32 = 5;
}

pub fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::BarrierViolation(_) => exit_codes::BARRIER,
        Error::NumericFailure(_) => exit_codes::NUMERIC,
        _ => exit_codes::PARSE,
    }
}

pub struct SimulateArgs {
    pub scenario: String,
    pub overrides: Vec<String>,
    pub csv: Option<PathBuf>,
    pub json: Option<PathBuf>,
}

/// Artifacts of one `simulate` invocation.
pub struct SimulateOutcome {
    pub report: ConditionReport,
    pub trace: SimulationTrace,
    pub csv_path: PathBuf,
    pub json_path: PathBuf,
}

fn resolve_out_path(configured: Option<&str>, fallback: String) -> PathBuf {
    let raw = configured.map(str::to_string).unwrap_or(fallback);
    let path = PathBuf::from(&raw);
    if path.is_absolute() {
        return path;
    }
    match std::env::var_os(OUT_DIR_ENV) {
        Some(dir) => Path::new(&dir).join(path),
        None => path,
    }
}

pub fn cmd_simulate(args: &SimulateArgs, out: &mut impl Write) -> Result<SimulateOutcome, Error> {
    let (name, text) = scenario::load_source(&args.scenario)?;
    let file = scenario::parse(&text, &args.overrides)?;
    let config = file.to_config()?;

    let csv_path = match &args.csv {
        Some(p) => p.clone(),
        None => resolve_out_path(file.outputs.csv.as_deref(), format!("{name}_trace.csv")),
    };
    let json_path = match &args.json {
        Some(p) => p.clone(),
        None => resolve_out_path(file.outputs.json.as_deref(), format!("{name}_summary.json")),
    };

    writeln!(
        out,
        "scenario `{name}`: {} robots on {} (n={}, m={}), t_end={}, dt={}",
        config.robot_count(),
        config.manifold.name(),
        config.manifold.ambient_dim(),
        config.manifold.manifold_dim(),
        config.t_end,
        config.dt
    )
    .ok();

    let trace = sim::run(&config)?;
    let report = check_conditions(&trace, &ConditionTolerances::default());
    print_report(&report, out);

    write_artifacts(&trace, &report, &csv_path, &json_path)?;
    writeln!(out, "trace:   {} ({} samples)", csv_path.display(), trace.sample_count()).ok();
    writeln!(out, "summary: {}", json_path.display()).ok();

    Ok(SimulateOutcome {
        report,
        trace,
        csv_path,
        json_path,
    })
}

fn print_report(report: &ConditionReport, out: &mut impl Write) {
    let line = |label: &str, check: &gvf_core::sim::ConditionCheck, out: &mut dyn Write| {
        writeln!(
            out,
            "{label:<28} {}  {}",
            if check.pass { "PASS" } else { "FAIL" },
            check.detail
        )
        .ok();
    };
    line("C1  on-manifold convergence", &report.c1, out);
    line("C2  on-manifold maneuvering", &report.c2, out);
    line("C3a target-centroid tracking", &report.c3a, out);
    line("C3b separation and cohesion", &report.c3b, out);
}

fn write_artifacts(
    trace: &SimulationTrace,
    report: &ConditionReport,
    csv_path: &Path,
    json_path: &Path,
) -> Result<(), Error> {
    let io_err = |what: &str, path: &Path, e: std::io::Error| {
        Error::Config(format!("cannot write {what} `{}`: {e}", path.display()))
    };
    if let Some(parent) = csv_path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| io_err("trace", csv_path, e))?;
        }
    }
    let mut csv = BufWriter::new(File::create(csv_path).map_err(|e| io_err("trace", csv_path, e))?);
    trace
        .write_csv(&mut csv)
        .map_err(|e| io_err("trace", csv_path, e))?;

    if let Some(parent) = json_path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| io_err("summary", json_path, e))?;
        }
    }
    let summary = trace.summary(report);
    let json = serde_json::to_string_pretty(&summary)
        .map_err(|e| Error::Config(format!("cannot serialize summary: {e}")))?;
    std::fs::write(json_path, json).map_err(|e| io_err("summary", json_path, e))?;
    Ok(())
}

pub struct VerifyArgs {
    pub n_max: usize,
    pub m_max: usize,
    pub trials: usize,
    pub seed: u64,
}

/// One closed-form/brute-force disagreement, serialized on failure.
#[derive(Debug, Serialize)]
pub struct VerifyMismatch {
    pub n: usize,
    pub m: usize,
    pub trial: usize,
    pub partials_row_major: Vec<f64>,
    pub bruteforce: Vec<f64>,
    pub closed_form: Vec<f64>,
    pub relative_error: f64,
}

#[derive(Debug)]
pub struct VerifyReport {
    /// Worst relative deviation per (n, m) pair.
    pub worst: Vec<(usize, usize, f64)>,
    pub mismatch: Option<VerifyMismatch>,
}

/// Exhaustively compare the brute-force propagation term against the
/// decoupled closed form over random partial-derivative matrices.
pub fn cmd_verify_lemma1(args: &VerifyArgs, out: &mut impl Write) -> Result<VerifyReport, Error> {
    if args.n_max < 1 || args.m_max < 1 {
        return Err(Error::Config(
            "verify-lemma1 needs n_max >= 1 and m_max >= 1".into(),
        ));
    }
    if args.n_max + args.m_max > 10 {
        return Err(Error::Config(format!(
            "verify-lemma1 is limited to n_max + m_max <= 10 (minor expansion cost), got {}",
            args.n_max + args.m_max
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let tol = 1e-9;
    let mut worst = Vec::new();
    writeln!(
        out,
        "comparing brute-force cross product against the decoupled closed form"
    )
    .ok();
    writeln!(
        out,
        "{} trials per (n, m), partials uniform in [-5, 5], tolerance {tol:.0e} relative",
        args.trials
    )
    .ok();
    for n in 1..=args.n_max {
        for m in 1..=args.m_max {
            let aux = feasible_aux_vectors::<f64>(n, m)?;
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            let mut worst_rel = 0.0f64;
            for trial in 0..args.trials {
                let entries: Vec<f64> = (0..n * m).map(|_| rng.gen_range(-5.0..=5.0)).collect();
                let partials = RealMatrix::new(n, m, entries.clone())?;
                let brute = propagation_from_partials(&partials, aux.vectors())?;
                let closed = closed_form_from_partials(&partials);
                for l in 0..m {
                    // Exact by construction; belt and braces.
                    assert_eq!(closed[n + l], sign);
                }
                let scale = closed
                    .iter()
                    .fold(0.0f64, |acc, v| acc.max(v.abs()))
                    .max(1.0);
                let rel = brute
                    .sub(&closed)
                    .iter()
                    .fold(0.0f64, |acc, v| acc.max(v.abs()))
                    / scale;
                worst_rel = worst_rel.max(rel);
                if rel > tol {
                    let mismatch = VerifyMismatch {
                        n,
                        m,
                        trial,
                        partials_row_major: entries,
                        bruteforce: brute.as_slice().to_vec(),
                        closed_form: closed.as_slice().to_vec(),
                        relative_error: rel,
                    };
                    writeln!(
                        out,
                        "MISMATCH at (n={n}, m={m}) trial {trial}:\n{}",
                        serde_json::to_string_pretty(&mismatch).unwrap_or_default()
                    )
                    .ok();
                    return Ok(VerifyReport {
                        worst,
                        mismatch: Some(mismatch),
                    });
                }
            }
            worst.push((n, m, worst_rel));
        }
    }
    writeln!(out, "pass matrix (worst relative deviation):").ok();
    write!(out, "{:>6}", "n\\m").ok();
    for m in 1..=args.m_max {
        write!(out, "{m:>12}").ok();
    }
    writeln!(out).ok();
    for n in 1..=args.n_max {
        write!(out, "{n:>6}").ok();
        for m in 1..=args.m_max {
            let w = worst
                .iter()
                .find(|(wn, wm, _)| *wn == n && *wm == m)
                .map(|(_, _, w)| *w)
                .unwrap_or(f64::NAN);
            write!(out, "{w:>12.2e}").ok();
        }
        writeln!(out).ok();
    }
    writeln!(out, "all {} x {} pairs pass", args.n_max, args.m_max).ok();
    Ok(VerifyReport {
        worst,
        mismatch: None,
    })
}

/// Everything `coupling-demo` computes, separated from the printing so tests
/// can assert on the numbers.
pub struct CouplingReport {
    /// Trailing entries under the arbitrary aux vectors at all-ones partials.
    pub arbitrary_all_ones: [f64; 3],
    /// Trailing entries under the decoupling aux vectors at all-ones partials.
    pub decoupled_all_ones: [f64; 3],
    /// Per-trailing-entry standard deviation across random partials,
    /// arbitrary aux vectors.
    pub arbitrary_stddev: [f64; 3],
    /// Same for the decoupling vectors (identically zero).
    pub decoupled_stddev: [f64; 3],
    /// Worst disagreement between the cross product and the predicted
    /// trailing-entry expressions over the random draws.
    pub formula_max_err: f64,
}

fn example_aux() -> [RealVector<f64>; 2] {
    [
        RealVector::new(vec![1.0, 1.0, 0.0, 0.0, 0.0, 0.0]).unwrap(),
        RealVector::new(vec![0.0, 0.0, 0.0, 0.0, 1.0, 1.0]).unwrap(),
    ]
}

/// Trailing-entry expressions for the arbitrary aux pair above, derived from
/// the cross product (df(j,l) is the partial of coordinate j by parameter l,
/// 0-based):
///   tail1 = df(0,2) - df(0,1) + df(1,2) - df(1,1)
///   tail2 = df(0,0) + df(1,0)
///   tail3 = -tail2
fn predicted_tail(partials: &RealMatrix<f64>) -> [f64; 3] {
    let df = |j: usize, l: usize| partials.get(j, l);
    let tail1 = df(0, 2) - df(0, 1) + df(1, 2) - df(1, 1);
    let tail2 = df(0, 0) + df(1, 0);
    [tail1, tail2, -tail2]
}

pub fn coupling_report(draws: usize, seed: u64) -> Result<CouplingReport, Error> {
    let arbitrary = example_aux();
    let feasible = feasible_aux_vectors::<f64>(3, 3)?;

    let all_ones = RealMatrix::new(3, 3, vec![1.0; 9])?;
    // `+ 0.0` folds IEEE negative zeros into positive ones for display.
    let tail = |v: &RealVector<f64>| [v[3] + 0.0, v[4] + 0.0, v[5] + 0.0];
    let arbitrary_all_ones = tail(&coupling_demo(&all_ones, &arbitrary)?);
    let decoupled_all_ones = tail(&coupling_demo(&all_ones, feasible.vectors())?);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut arb_samples: Vec<[f64; 3]> = Vec::with_capacity(draws);
    let mut dec_samples: Vec<[f64; 3]> = Vec::with_capacity(draws);
    let mut formula_max_err = 0.0f64;
    for _ in 0..draws {
        let entries: Vec<f64> = (0..9).map(|_| rng.gen_range(-5.0..=5.0)).collect();
        let partials = RealMatrix::new(3, 3, entries)?;
        let arb = tail(&coupling_demo(&partials, &arbitrary)?);
        let dec = tail(&coupling_demo(&partials, feasible.vectors())?);
        let predicted = predicted_tail(&partials);
        for i in 0..3 {
            formula_max_err = formula_max_err.max((arb[i] - predicted[i]).abs());
        }
        arb_samples.push(arb);
        dec_samples.push(dec);
    }
    let stddev = |samples: &[[f64; 3]]| -> [f64; 3] {
        let mut out = [0.0; 3];
        if samples.is_empty() {
            return out;
        }
        for i in 0..3 {
            let mean = samples.iter().map(|s| s[i]).sum::<f64>() / samples.len() as f64;
            let var = samples
                .iter()
                .map(|s| (s[i] - mean) * (s[i] - mean))
                .sum::<f64>()
                / samples.len() as f64;
            out[i] = var.sqrt();
        }
        out
    };
    Ok(CouplingReport {
        arbitrary_all_ones,
        decoupled_all_ones,
        arbitrary_stddev: stddev(&arb_samples),
        decoupled_stddev: stddev(&dec_samples),
        formula_max_err,
    })
}

pub fn cmd_coupling_demo(out: &mut impl Write) -> Result<CouplingReport, Error> {
    let report = coupling_report(20, 7)?;
    let fmt3 = |v: &[f64; 3]| format!("[{}, {}, {}]", v[0], v[1], v[2]);
    writeln!(out, "propagation-term coupling demo (n = 3, m = 3)").ok();
    writeln!(
        out,
        "arbitrary aux vectors: [1 1 0 0 0 0], [0 0 0 0 1 1]; trailing entries obey"
    )
    .ok();
    writeln!(out, "  tail1 = df1/dw3 - df1/dw2 + df2/dw3 - df2/dw2").ok();
    writeln!(out, "  tail2 = df1/dw1 + df2/dw1").ok();
    writeln!(out, "  tail3 = -(df1/dw1 + df2/dw1)").ok();
    writeln!(out, "all partial derivatives = 1:").ok();
    writeln!(
        out,
        "  arbitrary aux : trailing entries {} (coupled to the partials)",
        fmt3(&report.arbitrary_all_ones)
    )
    .ok();
    writeln!(
        out,
        "  decoupling aux: trailing entries {} (the constant (-1)^3)",
        fmt3(&report.decoupled_all_ones)
    )
    .ok();
    writeln!(out, "20 random partial matrices in [-5, 5]:").ok();
    writeln!(
        out,
        "  arbitrary aux : trailing-entry stddev {} (varies with the partials)",
        fmt3(&report.arbitrary_stddev)
    )
    .ok();
    writeln!(
        out,
        "  decoupling aux: trailing-entry stddev {} (decoupled, constant)",
        fmt3(&report.decoupled_stddev)
    )
    .ok();
    writeln!(
        out,
        "  max |cross product - predicted tail expression| = {:.3e}",
        report.formula_max_err
    )
    .ok();
    Ok(report)
}
