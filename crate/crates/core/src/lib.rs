//! Navigation of robot swarms on m-dimensional parametric manifolds in R^n.
//!
//! The library builds a guiding vector field on the lifted space R^(n+m):
//! the manifold parameters are promoted to per-robot virtual coordinates,
//! a generalized cross product of the implicit-function gradients drives
//! motion along the manifold, and a gradient-weighted error term drives
//! convergence onto it. Swarm coordination (target attraction plus
//! barrier-potential repulsion) happens purely in virtual-coordinate space,
//! so no geodesic distances are ever computed.
//!
//! Module map:
//! - [`linalg`]: dense small-dimension vectors/matrices and the generalized
//!   cross product.
//! - [`manifold`]: parametrizations f: R^m -> R^n, implicit errors, partial
//!   derivatives; ships the built-in helicoid, 3-torus and circle.
//! - [`expr`]: expression trees for user-defined manifolds with symbolic
//!   differentiation.
//! - [`gvf`]: the higher-dimensional guiding vector field, its decoupled
//!   closed form and the brute-force cross-product route.
//! - [`coordination`]: barrier potential, neighbor sensing and the
//!   distributed control law.
//! - [`sim`]: deterministic RK4 swarm simulator with breakdown events and a
//!   Lyapunov monitor.
//! - [`trace`]: recorded time series, CSV export and JSON summaries.
//!
//! The math layers are generic over the floating-point scalar via
//! [`Scalar`]; the simulator and file formats are fixed to `f64`.

pub mod coordination;
pub mod error;
pub mod expr;
pub mod gvf;
pub mod linalg;
pub mod manifold;
pub mod sim;
pub mod trace;

use std::fmt;

use num_traits::{Float, FloatConst, FromPrimitive};

pub use error::Error;

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Floating-point scalar the math layers are generic over: `f32` or `f64`.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + fmt::Debug + fmt::Display + Send + Sync + 'static
{
    /// Step scale for central finite differences of manifold parametrizations.
    fn fd_step() -> Self;

    /// Absolute tolerance when validating analytic partial derivatives
    /// against central finite differences at registration time.
    fn fd_validation_tol() -> Self;
}

impl Scalar for f64 {
    fn fd_step() -> f64 {
        1e-6
    }
    fn fd_validation_tol() -> f64 {
        1e-5
    }
}

impl Scalar for f32 {
    // Central differences in f32 lose roughly two thirds of the mantissa;
    // cbrt(eps) step keeps truncation and rounding balanced.
    fn fd_step() -> f32 {
        5e-3
    }
    fn fd_validation_tol() -> f32 {
        2e-2
    }
}

/// Convert an `f64` constant into the working scalar.
pub(crate) fn scalar<T: Scalar>(v: f64) -> T {
    T::from_f64(v).expect("f64 constant representable in scalar type")
}

/// `(-1)^n` as a scalar: the sign carried by the propagation term.
pub fn parity_sign<T: Scalar>(n: usize) -> T {
    if n.is_multiple_of(2) {
        T::one()
    } else {
        -T::one()
    }
}

/// Vector in R^d at the default `f64` precision.
pub type Vector64 = linalg::RealVector<f64>;
/// Row-major matrix at the default `f64` precision.
pub type Matrix64 = linalg::RealMatrix<f64>;
/// Manifold description at the default `f64` precision.
pub type ManifoldSpec64 = manifold::ManifoldSpec<f64>;
/// Barrier potential at the default `f64` precision.
pub type AlphaPotential64 = coordination::AlphaPotential<f64>;
