//! The guiding vector field on the lifted space R^(n+m).
//!
//! The field is a sum of two terms. The propagation term is the generalized
//! cross product of the n implicit-function gradients and m-1 constant
//! auxiliary vectors; it is orthogonal to every gradient and drives motion
//! along the manifold. The convergence term -sum_j k_j phi_j grad(phi_j)
//! drives the approach to the manifold.
//!
//! With arbitrary auxiliary vectors, the trailing m entries of the
//! propagation term couple to the partial derivatives of the parametrization,
//! which breaks coordination in virtual-coordinate space. The feasible
//! choice built by [`feasible_aux_vectors`] decouples them to the constant
//! (-1)^n, with the leading n entries collapsing to (-1)^n * sum_l df_j/dw_l.
//! That closed form is the production path; the brute-force cross product
//! exists as a test oracle and for demonstrating the coupling.

use crate::linalg::{generalized_cross, RealMatrix, RealVector};
use crate::manifold::ManifoldSpec;
use crate::{parity_sign, Error, Result, Scalar};

/// The m-1 constant auxiliary vectors completing the cross-product argument
/// list: vector k has zeros in its first n entries and trailing block
/// `[-1, 0, ..., 1, ..., 0]` with the 1 at block position k+1.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxiliaryVectorSet<T> {
    vectors: Vec<RealVector<T>>,
    n: usize,
    m: usize,
}

impl<T: Scalar> AuxiliaryVectorSet<T> {
    pub fn vectors(&self) -> &[RealVector<T>] {
        &self.vectors
    }

    pub fn ambient_dim(&self) -> usize {
        self.n
    }

    pub fn manifold_dim(&self) -> usize {
        self.m
    }
}

/// Build the decoupling auxiliary vectors for given dimensions; empty when
/// m = 1 (the cross product is already fully determined by the gradients).
pub fn feasible_aux_vectors<T: Scalar>(n: usize, m: usize) -> Result<AuxiliaryVectorSet<T>> {
    if n == 0 || m == 0 {
        return Err(Error::Config(format!(
            "auxiliary vectors need positive dimensions, got n={n}, m={m}"
        )));
    }
    let mut vectors = Vec::with_capacity(m - 1);
    for k in 1..m {
        let mut v = vec![T::zero(); n + m];
        v[n] = -T::one();
        v[n + k] = T::one();
        vectors.push(RealVector::from_raw(v));
    }
    Ok(AuxiliaryVectorSet { vectors, n, m })
}

/// The assembled field at one state: propagation + convergence, with the
/// gains that shaped the convergence term.
#[derive(Debug, Clone)]
pub struct GvfField<T> {
    pub propagation: RealVector<T>,
    pub convergence: RealVector<T>,
    pub total: RealVector<T>,
    pub gains: RealVector<T>,
}

/// Gradients of phi_1..phi_n built from a raw n x m partials matrix.
fn gradients_from_partials<T: Scalar>(partials: &RealMatrix<T>) -> Vec<RealVector<T>> {
    let (n, m) = (partials.rows(), partials.cols());
    (0..n)
        .map(|j| {
            let mut g = vec![T::zero(); n + m];
            g[j] = T::one();
            for l in 0..m {
                g[n + l] = -partials.get(j, l);
            }
            RealVector::from_raw(g)
        })
        .collect()
}

/// Brute-force propagation term from a raw partials matrix and arbitrary
/// auxiliary vectors: the generalized cross product of the n gradients
/// followed by the auxiliary vectors, in that order.
pub fn propagation_from_partials<T: Scalar>(
    partials: &RealMatrix<T>,
    aux: &[RealVector<T>],
) -> Result<RealVector<T>> {
    let (n, m) = (partials.rows(), partials.cols());
    if aux.len() != m - 1 {
        return Err(Error::DimensionMismatch(format!(
            "propagation term needs {} auxiliary vectors for m={m}, got {}",
            m - 1,
            aux.len()
        )));
    }
    if let Some(bad) = aux.iter().position(|v| v.dim() != n + m) {
        return Err(Error::DimensionMismatch(format!(
            "auxiliary vector {bad} has dim {}, expected {}",
            aux[bad].dim(),
            n + m
        )));
    }
    let mut args = gradients_from_partials(partials);
    args.extend_from_slice(aux);
    generalized_cross(&args)
}

/// Brute-force propagation term for a manifold state. Exists as the oracle
/// route; costs one (n+m-1)-dimensional minor per output entry.
pub fn propagation_bruteforce<T: Scalar>(
    spec: &ManifoldSpec<T>,
    omega: &RealVector<T>,
    aux: &AuxiliaryVectorSet<T>,
) -> Result<RealVector<T>> {
    if aux.n != spec.ambient_dim() || aux.m != spec.manifold_dim() {
        return Err(Error::DimensionMismatch(format!(
            "auxiliary set built for (n={}, m={}) used with manifold (n={}, m={})",
            aux.n,
            aux.m,
            spec.ambient_dim(),
            spec.manifold_dim()
        )));
    }
    propagation_from_partials(&spec.partials_matrix(omega)?, &aux.vectors)
}

/// Reproduce the coupling of the propagation term under arbitrary (possibly
/// infeasible) auxiliary vectors. Identical to the brute-force route; named
/// separately because feasibility is deliberately not required here.
pub fn coupling_demo<T: Scalar>(
    partials: &RealMatrix<T>,
    aux: &[RealVector<T>],
) -> Result<RealVector<T>> {
    propagation_from_partials(partials, aux)
}

/// Decoupled closed form of the propagation term from a raw partials matrix:
/// entry j < n is (-1)^n * sum_l df_j/dw_l, the trailing m entries are all
/// (-1)^n.
pub fn closed_form_from_partials<T: Scalar>(partials: &RealMatrix<T>) -> RealVector<T> {
    let (n, m) = (partials.rows(), partials.cols());
    let sign = parity_sign::<T>(n);
    let mut out = Vec::with_capacity(n + m);
    for j in 0..n {
        let mut row_sum = T::zero();
        for l in 0..m {
            row_sum = row_sum + partials.get(j, l);
        }
        out.push(sign * row_sum);
    }
    out.resize(n + m, sign);
    RealVector::from_raw(out)
}

/// Decoupled closed form of the propagation term at a manifold state; the
/// production path, O(n*m).
pub fn propagation_closed_form<T: Scalar>(
    spec: &ManifoldSpec<T>,
    omega: &RealVector<T>,
) -> Result<RealVector<T>> {
    Ok(closed_form_from_partials(&spec.partials_matrix(omega)?))
}

/// Assemble the full field at a state: closed-form propagation plus the
/// gradient-weighted convergence term.
pub fn hgvf<T: Scalar>(
    spec: &ManifoldSpec<T>,
    x: &RealVector<T>,
    omega: &RealVector<T>,
    gains: &RealVector<T>,
) -> Result<GvfField<T>> {
    let n = spec.ambient_dim();
    let m = spec.manifold_dim();
    if gains.dim() != n {
        return Err(Error::DimensionMismatch(format!(
            "expected {n} gains, got {}",
            gains.dim()
        )));
    }
    if let Some(bad) = gains.iter().position(|k| *k <= T::zero()) {
        return Err(Error::Config(format!(
            "convergence gain {bad} must be strictly positive, got {}",
            gains.as_slice()[bad]
        )));
    }
    let partials = spec.partials_matrix(omega)?;
    let phi = spec.phi(x, omega)?;
    let propagation = closed_form_from_partials(&partials);

    // Convergence term split over the two blocks: head j gets -k_j phi_j,
    // tail l gets sum_j k_j phi_j df_j/dw_l.
    let mut convergence = vec![T::zero(); n + m];
    for j in 0..n {
        let weighted = gains[j] * phi.values()[j];
        convergence[j] = -weighted;
        for l in 0..m {
            convergence[n + l] = convergence[n + l] + weighted * partials.get(j, l);
        }
    }
    let convergence = RealVector::from_raw(convergence);
    let total = propagation.add(&convergence);
    Ok(GvfField {
        propagation,
        convergence,
        total,
        gains: gains.clone(),
    })
}
