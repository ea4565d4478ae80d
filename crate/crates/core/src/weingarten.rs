//! Gram and Weingarten matrices of the permutation representation.

use nalgebra::DMatrix;
use num_bigint::BigInt;

use crate::error::{Error, Result};
use crate::exact::ExactMatrix;
use crate::localized::{BasisTag, TransferMatrix};
use crate::moments::EnsembleSpec;
use crate::symmgroup::{factorial, inverse_power, SymmetricGroup};
use crate::Rational;

/// Normalized Gram matrix `X(σ,π) = d^{-|σ⁻¹π|}` in canonical order.
pub fn gram_matrix(t: usize, d: u64) -> Result<ExactMatrix> {
    let g = SymmetricGroup::new(t)?;
    Ok(gram_matrix_for(&g, d))
}

pub fn gram_matrix_for(g: &SymmetricGroup, d: u64) -> ExactMatrix {
    let dist = g.distance_table();
    // Distances repeat heavily; share the handful of distinct powers.
    let powers: Vec<Rational> = (0..g.t()).map(|k| inverse_power(d, k)).collect();
    ExactMatrix::from_fn(g.len(), g.len(), |i, j| powers[dist[i][j]].clone())
}

pub fn gram_matrix_f64(g: &SymmetricGroup, d: f64) -> DMatrix<f64> {
    let n = g.len();
    DMatrix::from_fn(n, n, |i, j| d.powi(-(g.distance(i, j) as i32)))
}

/// Exact inverse of the normalized Gram matrix.
pub fn weingarten_matrix(t: usize, d: u64) -> Result<ExactMatrix> {
    let g = SymmetricGroup::new(t)?;
    weingarten_matrix_for(&g, d)
}

pub fn weingarten_matrix_for(g: &SymmetricGroup, d: u64) -> Result<ExactMatrix> {
    let t = g.t();
    if d < t as u64 {
        return Err(Error::SingularGram { t, d: d as usize });
    }
    gram_matrix_for(g, d).inverse().map_err(|_| Error::SingularGram { t, d: d as usize })
}

pub fn weingarten_matrix_f64(g: &SymmetricGroup, d: f64) -> Result<DMatrix<f64>> {
    if d < g.t() as f64 {
        return Err(Error::SingularGram { t: g.t(), d: d as usize });
    }
    gram_matrix_f64(g, d)
        .try_inverse()
        .ok_or(Error::SingularGram { t: g.t(), d: d as usize })
}

/// `C(d+t-1, t) t! / d^t = d(d+1)…(d+t-1) / d^t`.
pub fn jucys_murphy_sum(t: usize, d: u64) -> Rational {
    let rising: BigInt = (0..t as u64).map(|j| BigInt::from(d + j)).product();
    Rational::new(rising, BigInt::from(d).pow(t as u32))
}

/// Haar transfer matrix in the permutation basis: the Weingarten matrix.
pub fn haar_transfer_perm(t: usize, d: u64) -> Result<TransferMatrix> {
    let g = SymmetricGroup::new(t)?;
    let w = weingarten_matrix_for(&g, d)?;
    Ok(TransferMatrix::exact(w, BasisTag::permutation(t, d), EnsembleSpec::haar(t, d)))
}

/// cHaar transfer matrix, `dE^{-|σ|} Wg_{d·dE}(σ,π)`.
pub fn chaar_transfer_perm(t: usize, d: u64, d_env: u64) -> Result<TransferMatrix> {
    let g = SymmetricGroup::new(t)?;
    let m = chaar_matrix(&g, d, d_env)?;
    Ok(TransferMatrix::exact(m, BasisTag::permutation(t, d), EnsembleSpec::chaar(t, d, d_env)))
}

pub(crate) fn chaar_matrix(g: &SymmetricGroup, d: u64, d_env: u64) -> Result<ExactMatrix> {
    let w = weingarten_matrix_for(g, d * d_env)?;
    let weights: Vec<Rational> = (0..g.len()).map(|i| inverse_power(d_env, g.size(i))).collect();
    Ok(ExactMatrix::from_fn(g.len(), g.len(), |i, j| &weights[i] * w.get(i, j)))
}

pub(crate) fn chaar_matrix_f64(g: &SymmetricGroup, d: f64, d_env: f64) -> Result<DMatrix<f64>> {
    let mut w = weingarten_matrix_f64(g, d * d_env)?;
    for i in 0..g.len() {
        let s = d_env.powi(-(g.size(i) as i32));
        w.row_mut(i).scale_mut(s);
    }
    Ok(w)
}

/// `t!` as a rational.
pub fn factorial_rational(t: usize) -> Rational {
    Rational::from_integer(BigInt::from(factorial(t)))
}

/// `Σ_σ χ_d(σ)`, the sum of the identity row of the Gram matrix.
pub fn character_sum_direct(t: usize, d: u64) -> Result<Rational> {
    let g = SymmetricGroup::new(t)?;
    Ok(crate::symmgroup::character_sum(&g, d))
}
