//! Desired m-dimensional manifolds in R^n given by a parametrization
//! f: R^m -> R^n, together with the implicit error functions
//! phi_j(x, omega) = x_j - f_j(omega) and the partial derivatives of f.
//!
//! A spec carries either analytic partials (hand-written for the builtins,
//! symbolically differentiated for expression-defined manifolds) or a
//! central finite-difference fallback. Analytic partials are cross-checked
//! against finite differences on a deterministic sample grid at
//! registration time.

use std::fmt;
use std::sync::Arc;

use crate::expr::Expr;
use crate::linalg::{RealMatrix, RealVector};
use crate::{scalar, Error, Result, Scalar};

/// Bound above which a partial derivative is flagged as a suspected
/// violation of the bounded-derivatives requirement on f.
const PARTIAL_BOUND: f64 = 1e6;

type EvalFn<T> = Arc<dyn Fn(&[T]) -> Vec<T> + Send + Sync>;
type PartialFn<T> = Arc<dyn Fn(&[T], usize, usize) -> T + Send + Sync>;

/// On-manifold convergence error vector Phi = x - f(omega), one entry per
/// ambient coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct ImplicitError<T> {
    values: RealVector<T>,
}

impl<T: Scalar> ImplicitError<T> {
    pub fn values(&self) -> &RealVector<T> {
        &self.values
    }

    pub fn norm(&self) -> T {
        self.values.norm()
    }
}

/// Parametrized manifold: ambient dimension `n`, manifold dimension `m`,
/// an evaluation map and a source of partial derivatives.
#[derive(Clone)]
pub struct ManifoldSpec<T> {
    name: String,
    n: usize,
    m: usize,
    eval_fn: EvalFn<T>,
    partial_fn: Option<PartialFn<T>>,
}

impl<T> fmt::Debug for ManifoldSpec<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ManifoldSpec")
            .field("name", &self.name)
            .field("n", &self.n)
            .field("m", &self.m)
            .field("analytic_partials", &self.partial_fn.is_some())
            .finish()
    }
}

impl<T: Scalar> ManifoldSpec<T> {
    /// Register a manifold with analytic partial derivatives. The partials
    /// are validated against central finite differences on a deterministic
    /// sample grid.
    pub fn analytic(
        name: impl Into<String>,
        n: usize,
        m: usize,
        eval: impl Fn(&[T]) -> Vec<T> + Send + Sync + 'static,
        partial: impl Fn(&[T], usize, usize) -> T + Send + Sync + 'static,
    ) -> Result<Self> {
        let spec = Self {
            name: name.into(),
            n,
            m,
            eval_fn: Arc::new(eval),
            partial_fn: Some(Arc::new(partial)),
        };
        spec.check_dims()?;
        spec.validate_partials()?;
        Ok(spec)
    }

    /// Register a manifold with finite-difference-backed partials.
    pub fn numeric(
        name: impl Into<String>,
        n: usize,
        m: usize,
        eval: impl Fn(&[T]) -> Vec<T> + Send + Sync + 'static,
    ) -> Result<Self> {
        let spec = Self {
            name: name.into(),
            n,
            m,
            eval_fn: Arc::new(eval),
            partial_fn: None,
        };
        spec.check_dims()?;
        // Probe once so malformed evaluators fail at registration.
        spec.evaluate(&RealVector::zeros(m))?;
        Ok(spec)
    }

    /// Register a manifold from n formulas in the variables `w1..wm`.
    /// Partials come from symbolic differentiation of the parsed trees.
    pub fn from_expressions(name: impl Into<String>, formulas: &[String], m: usize) -> Result<Self> {
        if formulas.is_empty() {
            return Err(Error::Config(
                "manifold needs at least one coordinate formula".into(),
            ));
        }
        let mut exprs = Vec::with_capacity(formulas.len());
        for f in formulas {
            exprs.push(Expr::parse(f, m)?);
        }
        let mut partials = Vec::with_capacity(exprs.len());
        for e in &exprs {
            partials.push((0..m).map(|l| e.diff(l)).collect::<Vec<_>>());
        }
        let n = exprs.len();
        let eval_exprs = exprs.clone();
        Self::analytic(
            name,
            n,
            m,
            move |omega: &[T]| eval_exprs.iter().map(|e| e.eval(omega)).collect(),
            move |omega: &[T], j, l| partials[j][l].eval(omega),
        )
    }

    /// Look up one of the built-in manifolds by name.
    pub fn builtin(name: &str) -> Result<Self> {
        match name {
            "helicoid3" => Self::analytic(
                "helicoid3",
                3,
                3,
                |w: &[T]| {
                    let radial = scalar::<T>(4.0) + scalar::<T>(3.0) * w[0].cos();
                    vec![
                        radial * w[1].cos(),
                        radial * w[1].sin(),
                        w[0] + (w[1] + w[2]).sin(),
                    ]
                },
                |w: &[T], j, l| {
                    let three = scalar::<T>(3.0);
                    let radial = scalar::<T>(4.0) + three * w[0].cos();
                    match (j, l) {
                        (0, 0) => -three * w[0].sin() * w[1].cos(),
                        (0, 1) => -radial * w[1].sin(),
                        (0, 2) => T::zero(),
                        (1, 0) => -three * w[0].sin() * w[1].sin(),
                        (1, 1) => radial * w[1].cos(),
                        (1, 2) => T::zero(),
                        (2, 0) => T::one(),
                        (2, 1) | (2, 2) => (w[1] + w[2]).cos(),
                        _ => unreachable!("indices validated by caller"),
                    }
                },
            ),
            "torus3in4" => Self::analytic(
                "torus3in4",
                4,
                3,
                |w: &[T]| {
                    let radial = scalar::<T>(6.0) + scalar::<T>(3.0) * w[0].cos();
                    let three = scalar::<T>(3.0);
                    vec![
                        radial * w[1].cos(),
                        radial * w[1].sin(),
                        three * w[1].sin() * w[2].cos(),
                        three * w[1].sin() * w[2].sin(),
                    ]
                },
                |w: &[T], j, l| {
                    let three = scalar::<T>(3.0);
                    let radial = scalar::<T>(6.0) + three * w[0].cos();
                    match (j, l) {
                        (0, 0) => -three * w[0].sin() * w[1].cos(),
                        (0, 1) => -radial * w[1].sin(),
                        (0, 2) => T::zero(),
                        (1, 0) => -three * w[0].sin() * w[1].sin(),
                        (1, 1) => radial * w[1].cos(),
                        (1, 2) => T::zero(),
                        (2, 0) => T::zero(),
                        (2, 1) => three * w[1].cos() * w[2].cos(),
                        (2, 2) => -three * w[1].sin() * w[2].sin(),
                        (3, 0) => T::zero(),
                        (3, 1) => three * w[1].cos() * w[2].sin(),
                        (3, 2) => three * w[1].sin() * w[2].cos(),
                        _ => unreachable!("indices validated by caller"),
                    }
                },
            ),
            "circle2" => Self::analytic(
                "circle2",
                2,
                1,
                |w: &[T]| vec![w[0].cos(), w[0].sin()],
                |w: &[T], j, _l| match j {
                    0 => -w[0].sin(),
                    1 => w[0].cos(),
                    _ => unreachable!("indices validated by caller"),
                },
            ),
            other => Err(Error::UnknownManifold {
                name: other.into(),
                available: Self::builtin_names().join(", "),
            }),
        }
    }

    pub fn builtin_names() -> &'static [&'static str] {
        &["helicoid3", "torus3in4", "circle2"]
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Ambient dimension n.
    pub fn ambient_dim(&self) -> usize {
        self.n
    }

    /// Manifold dimension m.
    pub fn manifold_dim(&self) -> usize {
        self.m
    }

    pub fn has_analytic_partials(&self) -> bool {
        self.partial_fn.is_some()
    }

    /// Evaluate f(omega).
    pub fn evaluate(&self, omega: &RealVector<T>) -> Result<RealVector<T>> {
        self.check_omega(omega)?;
        let out = (self.eval_fn)(omega.as_slice());
        if out.len() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "manifold `{}` evaluator returned {} coordinates, expected {}",
                self.name,
                out.len(),
                self.n
            )));
        }
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericFailure(format!(
                "manifold `{}` evaluated to a non-finite coordinate",
                self.name
            )));
        }
        Ok(RealVector::from_raw(out))
    }

    /// Partial derivative of f_j with respect to omega_l (0-based).
    pub fn partial(&self, omega: &RealVector<T>, j: usize, l: usize) -> Result<T> {
        self.check_omega(omega)?;
        self.check_indices(j, l)?;
        let v = self.partial_unchecked(omega.as_slice(), j, l);
        if !v.is_finite() {
            return Err(Error::NumericFailure(format!(
                "partial of `{}` coordinate {j} w.r.t. omega_{l} is non-finite",
                self.name
            )));
        }
        if v.abs() > scalar(PARTIAL_BOUND) {
            return Err(Error::NumericFailure(format!(
                "partial of `{}` coordinate {j} w.r.t. omega_{l} has magnitude {v}, \
                 suspected unbounded derivative",
                self.name
            )));
        }
        Ok(v)
    }

    /// The n x m matrix of partials, row j column l = d f_j / d omega_l.
    pub fn partials_matrix(&self, omega: &RealVector<T>) -> Result<RealMatrix<T>> {
        self.check_omega(omega)?;
        let mut out = RealMatrix::zeros(self.n, self.m);
        for j in 0..self.n {
            for l in 0..self.m {
                out.set(j, l, self.partial(omega, j, l)?);
            }
        }
        Ok(out)
    }

    /// Convergence error Phi = x - f(omega), componentwise.
    pub fn phi(&self, x: &RealVector<T>, omega: &RealVector<T>) -> Result<ImplicitError<T>> {
        if x.dim() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "position has dim {} but manifold `{}` lives in R^{}",
                x.dim(),
                self.name,
                self.n
            )));
        }
        let f = self.evaluate(omega)?;
        Ok(ImplicitError {
            values: x.sub(&f),
        })
    }

    /// Gradient of phi_j on the lifted space R^(n+m):
    /// `[0.. 1 ..0 | -df_j/dw_1, ..., -df_j/dw_m]` with the 1 at position j.
    pub fn gradient_phi(&self, omega: &RealVector<T>, j: usize) -> Result<RealVector<T>> {
        self.check_omega(omega)?;
        if j >= self.n {
            return Err(Error::IndexOutOfRange(format!(
                "gradient index {j} for a manifold with {} coordinates",
                self.n
            )));
        }
        let mut out = vec![T::zero(); self.n + self.m];
        out[j] = T::one();
        for l in 0..self.m {
            out[self.n + l] = -self.partial(omega, j, l)?;
        }
        Ok(RealVector::from_raw(out))
    }

    fn partial_unchecked(&self, omega: &[T], j: usize, l: usize) -> T {
        match &self.partial_fn {
            Some(p) => p(omega, j, l),
            None => {
                let h = T::fd_step() * omega[l].abs().max(T::one());
                let mut hi = omega.to_vec();
                let mut lo = omega.to_vec();
                hi[l] = hi[l] + h;
                lo[l] = lo[l] - h;
                let fh = (self.eval_fn)(&hi);
                let fl = (self.eval_fn)(&lo);
                (fh[j] - fl[j]) / (h + h)
            }
        }
    }

    fn check_dims(&self) -> Result<()> {
        if self.n == 0 || self.m == 0 {
            return Err(Error::Config(format!(
                "manifold `{}` needs positive dimensions, got n={}, m={}",
                self.name, self.n, self.m
            )));
        }
        Ok(())
    }

    fn check_omega(&self, omega: &RealVector<T>) -> Result<()> {
        if omega.dim() != self.m {
            return Err(Error::DimensionMismatch(format!(
                "omega has dim {} but manifold `{}` has {} parameters",
                omega.dim(),
                self.name,
                self.m
            )));
        }
        Ok(())
    }

    fn check_indices(&self, j: usize, l: usize) -> Result<()> {
        if j >= self.n {
            return Err(Error::IndexOutOfRange(format!(
                "coordinate index {j} for a manifold with {} coordinates",
                self.n
            )));
        }
        if l >= self.m {
            return Err(Error::IndexOutOfRange(format!(
                "parameter index {l} for a manifold with {} parameters",
                self.m
            )));
        }
        Ok(())
    }

    /// Compare analytic partials against central finite differences on a
    /// deterministic sample grid; rejects inconsistent registrations.
    fn validate_partials(&self) -> Result<()> {
        let partial = self.partial_fn.as_ref().expect("analytic registration");
        let tol = T::fd_validation_tol();
        for point in sample_points(self.m) {
            let omega: Vec<T> = point.iter().map(|&v| scalar(v)).collect();
            for j in 0..self.n {
                for l in 0..self.m {
                    let a = partial(&omega, j, l);
                    if !a.is_finite() {
                        return Err(Error::NumericFailure(format!(
                            "manifold `{}`: analytic partial ({j},{l}) non-finite at sample point",
                            self.name
                        )));
                    }
                    let h = T::fd_step() * omega[l].abs().max(T::one());
                    let mut hi = omega.clone();
                    let mut lo = omega.clone();
                    hi[l] = hi[l] + h;
                    lo[l] = lo[l] - h;
                    let fd = ((self.eval_fn)(&hi)[j] - (self.eval_fn)(&lo)[j]) / (h + h);
                    if (a - fd).abs() > tol {
                        return Err(Error::Config(format!(
                            "manifold `{}`: analytic partial ({j},{l}) = {a} disagrees with \
                             finite difference {fd} at omega = {point:?}",
                            self.name
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Deterministic low-discrepancy-ish sample grid in [-2, 2]^m used for
/// registration validation.
fn sample_points(m: usize) -> Vec<Vec<f64>> {
    let mut points = vec![vec![0.0; m]];
    let mut s = 0.6180339887_f64;
    for _ in 0..24 {
        let mut p = Vec::with_capacity(m);
        for _ in 0..m {
            s = (s + 0.6180339887).fract();
            p.push(4.0 * s - 2.0);
        }
        points.push(p);
    }
    points
}
