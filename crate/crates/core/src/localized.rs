//! The localized permutation basis.
//!
//! Localized elements are Möbius inversions of the normalized permutation
//! operators `d^{|σ|} R_σ` over the sub-permutation lattice:
//! `L_σ = Σ_{π ⊆ σ} φ(σ,π) d^{|π|} R_π`, with `φ(σ,π) = μ(π⁻¹σ)` and inverse
//! `ζ(σ,π) = [π ⊆ σ]`. Elements with different supports are orthogonal.
//!
//! A transfer matrix `τ` describes the operator `d^{-t} Σ τ(σ,π) |R_σ⟩⟩⟨⟨R_π|`.
//! In the localized basis the same operator has coefficients
//! `τ_L = ζᵀ D τ D ζ` with `D = diag(d^{-|σ|})`, and overlaps
//! `X_L = φ D⁻¹ X D⁻¹ φᵀ`.

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::ExactMatrix;
use crate::moments::EnsembleSpec;
use crate::symmgroup::{inverse_power, SymmetricGroup};
use crate::weingarten::{chaar_matrix, gram_matrix_f64, gram_matrix_for, weingarten_matrix_for};
use crate::Rational;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum BasisKind {
    Permutation,
    Localized,
    /// Orthogonal Pauli strings, normalized to unit overlap.
    Pauli,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct BasisTag {
    pub kind: BasisKind,
    pub t: usize,
    pub d: u64,
}

impl BasisTag {
    pub fn permutation(t: usize, d: u64) -> Self {
        Self { kind: BasisKind::Permutation, t, d }
    }

    pub fn localized(t: usize, d: u64) -> Self {
        Self { kind: BasisKind::Localized, t, d }
    }

    pub fn pauli(t: usize, d: u64) -> Self {
        Self { kind: BasisKind::Pauli, t, d }
    }
}

/// Exact or floating-point coefficients.
#[derive(Clone, Debug, PartialEq)]
pub enum Entries {
    Exact(ExactMatrix),
    Float(DMatrix<f64>),
}

impl Entries {
    pub fn dim(&self) -> usize {
        match self {
            Entries::Exact(m) => m.rows(),
            Entries::Float(m) => m.nrows(),
        }
    }

    pub fn to_f64(&self) -> DMatrix<f64> {
        match self {
            Entries::Exact(m) => m.to_f64(),
            Entries::Float(m) => m.clone(),
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Entries::Exact(_))
    }
}

/// Coefficients of a moment operator in a tagged basis.
#[derive(Clone, Debug, PartialEq)]
pub struct TransferMatrix {
    pub entries: Entries,
    pub basis: BasisTag,
    pub ensemble: EnsembleSpec,
}

impl TransferMatrix {
    pub fn exact(m: ExactMatrix, basis: BasisTag, ensemble: EnsembleSpec) -> Self {
        Self { entries: Entries::Exact(m), basis, ensemble }
    }

    pub fn float(m: DMatrix<f64>, basis: BasisTag, ensemble: EnsembleSpec) -> Self {
        Self { entries: Entries::Float(m), basis, ensemble }
    }

    pub fn dim(&self) -> usize {
        self.entries.dim()
    }

    /// Concatenation count.
    pub fn k(&self) -> usize {
        self.ensemble.k
    }

    pub fn exact_entries(&self) -> Option<&ExactMatrix> {
        match &self.entries {
            Entries::Exact(m) => Some(m),
            Entries::Float(_) => None,
        }
    }

    pub fn to_f64(&self) -> DMatrix<f64> {
        self.entries.to_f64()
    }

    /// Float copy with the same tags.
    pub fn as_float(&self) -> Self {
        Self { entries: Entries::Float(self.to_f64()), basis: self.basis, ensemble: self.ensemble.clone() }
    }
}

/// Gram and Weingarten-type objects in either representation.
#[derive(Clone, Debug, PartialEq)]
pub struct Gram {
    pub entries: Entries,
    pub basis: BasisTag,
}

fn phi_for(g: &SymmetricGroup) -> ExactMatrix {
    let n = g.len();
    let mut m = ExactMatrix::zeros(n, n);
    for s in 0..n {
        for &p in g.subpermutations(s) {
            m.set(s, p, Rational::from_integer(BigInt::from(g.mobius_between(p, s))));
        }
    }
    m
}

fn zeta_for(g: &SymmetricGroup) -> ExactMatrix {
    let n = g.len();
    let mut m = ExactMatrix::zeros(n, n);
    for s in 0..n {
        for &p in g.subpermutations(s) {
            m.set(s, p, Rational::from_integer(BigInt::from(1)));
        }
    }
    m
}

/// `φ(σ,π) = μ(π⁻¹σ) [π ⊆ σ]`.
pub fn phi_matrix(t: usize) -> Result<ExactMatrix> {
    Ok(phi_for(&SymmetricGroup::new(t)?))
}

/// `φ⁻¹(σ,π) = [π ⊆ σ]`.
pub fn phi_inverse(t: usize) -> Result<ExactMatrix> {
    Ok(zeta_for(&SymmetricGroup::new(t)?))
}

/// `diag(d^{|σ|})`, the inverse character scaling.
fn inverse_character_diag(g: &SymmetricGroup, d: u64) -> Vec<Rational> {
    (0..g.len()).map(|i| Rational::from_integer(BigInt::from(d).pow(g.size(i) as u32))).collect()
}

fn character_diag(g: &SymmetricGroup, d: u64) -> Vec<Rational> {
    (0..g.len()).map(|i| inverse_power(d, g.size(i))).collect()
}

fn scale_rows_cols(m: &ExactMatrix, left: &[Rational], right: &[Rational]) -> ExactMatrix {
    ExactMatrix::from_fn(m.rows(), m.cols(), |i, j| &(&left[i] * m.get(i, j)) * &right[j])
}

/// Overlaps of localized elements:
/// `Σ_{η⊆σ, κ⊆π} φ(σ,η) φ(π,κ) d^{|η|+|κ|-|η⁻¹κ|}`.
pub fn localized_gram(t: usize, d: u64) -> Result<ExactMatrix> {
    Ok(localized_gram_for(&SymmetricGroup::new(t)?, d))
}

pub fn localized_gram_for(g: &SymmetricGroup, d: u64) -> ExactMatrix {
    let phi = phi_for(g);
    let dinv = inverse_character_diag(g, d);
    let inner = scale_rows_cols(&gram_matrix_for(g, d), &dinv, &dinv);
    &(&phi * &inner) * &phi.transpose()
}

pub fn localized_gram_f64(g: &SymmetricGroup, d: f64) -> DMatrix<f64> {
    let phi = phi_for(g).to_f64();
    let n = g.len();
    let x = gram_matrix_f64(g, d);
    let inner = DMatrix::from_fn(n, n, |i, j| {
        d.powi(g.size(i) as i32) * x[(i, j)] * d.powi(g.size(j) as i32)
    });
    &phi * inner * phi.transpose()
}

/// Gram matrix matching a basis tag.
pub fn gram_for_basis(tag: BasisTag, exact: bool) -> Result<Gram> {
    let entries = match tag.kind {
        BasisKind::Pauli => {
            let n = (tag.d as usize).pow(2 * tag.t as u32);
            if exact {
                Entries::Exact(ExactMatrix::identity(n))
            } else {
                Entries::Float(DMatrix::identity(n, n))
            }
        }
        BasisKind::Permutation | BasisKind::Localized => {
            let g = SymmetricGroup::new(tag.t)?;
            match (tag.kind, exact) {
                (BasisKind::Permutation, true) => Entries::Exact(gram_matrix_for(&g, tag.d)),
                (BasisKind::Permutation, false) => Entries::Float(gram_matrix_f64(&g, tag.d as f64)),
                (_, true) => Entries::Exact(localized_gram_for(&g, tag.d)),
                (_, false) => Entries::Float(localized_gram_f64(&g, tag.d as f64)),
            }
        }
    };
    Ok(Gram { entries, basis: tag })
}

/// Transports a permutation-basis transfer matrix to the localized basis:
/// `τ_L(η,κ) = Σ_{σ⊇η, π⊇κ} χ_d(σ) τ(σ,π) χ_d(π)`.
pub fn to_localized(tau: &TransferMatrix) -> Result<TransferMatrix> {
    if tau.basis.kind != BasisKind::Permutation {
        return Err(Error::InvalidParameter(format!(
            "to_localized expects a permutation-basis transfer, got {:?}",
            tau.basis.kind
        )));
    }
    let g = SymmetricGroup::new(tau.basis.t)?;
    let d = tau.basis.d;
    let entries = match &tau.entries {
        Entries::Exact(m) => {
            let zeta = zeta_for(&g);
            let chi = character_diag(&g, d);
            let inner = scale_rows_cols(m, &chi, &chi);
            Entries::Exact(&(&zeta.transpose() * &inner) * &zeta)
        }
        Entries::Float(m) => {
            let zeta = zeta_for(&g).to_f64();
            let n = g.len();
            let df = d as f64;
            let inner = DMatrix::from_fn(n, n, |i, j| {
                df.powi(-(g.size(i) as i32)) * m[(i, j)] * df.powi(-(g.size(j) as i32))
            });
            Entries::Float(zeta.transpose() * inner * zeta)
        }
    };
    Ok(TransferMatrix {
        entries,
        basis: BasisTag::localized(tau.basis.t, d),
        ensemble: tau.ensemble.clone(),
    })
}

/// Inverse transport, localized to permutation basis: `τ = D⁻¹ φᵀ τ_L φ D⁻¹`.
pub fn to_permutation(tau: &TransferMatrix) -> Result<TransferMatrix> {
    if tau.basis.kind != BasisKind::Localized {
        return Err(Error::InvalidParameter("to_permutation expects a localized transfer".into()));
    }
    let g = SymmetricGroup::new(tau.basis.t)?;
    let d = tau.basis.d;
    let phi = phi_for(&g);
    let dinv = inverse_character_diag(&g, d);
    let entries = match &tau.entries {
        Entries::Exact(m) => {
            let core = &(&phi.transpose() * m) * &phi;
            Entries::Exact(scale_rows_cols(&core, &dinv, &dinv))
        }
        Entries::Float(m) => {
            let phi = phi.to_f64();
            let core = phi.transpose() * m * phi;
            let n = g.len();
            let df = d as f64;
            Entries::Float(DMatrix::from_fn(n, n, |i, j| {
                df.powi(g.size(i) as i32) * core[(i, j)] * df.powi(g.size(j) as i32)
            }))
        }
    };
    Ok(TransferMatrix { entries, basis: BasisTag::permutation(tau.basis.t, d), ensemble: tau.ensemble.clone() })
}

/// Whether `(σ,π)` entries vanish whenever the supports differ.
pub fn is_block_diagonal_by_support(m: &ExactMatrix, g: &SymmetricGroup) -> bool {
    support_violations(m, g, |a, b| a == b).is_empty()
}

/// Whether `(σ,π)` entries vanish unless `Γ_σ ⊇ Γ_π`.
pub fn is_block_lower_triangular_by_support(m: &ExactMatrix, g: &SymmetricGroup) -> bool {
    support_violations(m, g, |a, b| a & b == b).is_empty()
}

/// Nonzero entries outside the allowed support pattern.
pub fn support_violations(
    m: &ExactMatrix,
    g: &SymmetricGroup,
    allowed: impl Fn(u64, u64) -> bool,
) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for i in 0..g.len() {
        for j in 0..g.len() {
            if !allowed(g.support_mask(i), g.support_mask(j)) && !m.get(i, j).is_zero() {
                out.push((i, j));
            }
        }
    }
    out
}

/// How the environment dimension follows `d` in a scaling study.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EnvRule {
    Fixed(u64),
    /// `dE = d^p`.
    Power(u32),
}

impl EnvRule {
    pub fn env_dim(&self, d: u64) -> u64 {
        match *self {
            EnvRule::Fixed(e) => e,
            EnvRule::Power(p) => d.pow(p),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScalingTarget {
    Haar,
    CHaar(EnvRule),
}

/// Per-entry classification of the leading `1/d^l` scaling.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Exponent {
    StructuralZero,
    Order(i32),
    /// Estimate not within 0.1 of an integer, or zero at only one dimension.
    MixedOrder(f64),
}

/// Exponent tolerance for integer classification.
pub const EXPONENT_TOLERANCE: f64 = 0.1;

/// Localized transfer matrix of a scaling target at one dimension.
pub fn localized_transfer_exact(target: ScalingTarget, t: usize, k: usize, d: u64) -> Result<ExactMatrix> {
    let g = SymmetricGroup::new(t)?;
    let (tau, spec) = match target {
        ScalingTarget::Haar => (weingarten_matrix_for(&g, d)?, EnsembleSpec::haar(t, d)),
        ScalingTarget::CHaar(rule) => {
            let de = rule.env_dim(d);
            (chaar_matrix(&g, d, de)?, EnsembleSpec::chaar(t, d, de))
        }
    };
    let tm = TransferMatrix::exact(tau, BasisTag::permutation(t, d), spec);
    let tm = crate::moments::concatenate(&tm, &gram_for_basis(tm.basis, true)?, k)?;
    let loc = to_localized(&tm)?;
    Ok(loc.exact_entries().cloned().expect("exact input stays exact"))
}

/// Leading-order exponents `l` with `|entry| ~ d^{-l}`, from two dimensions.
pub fn scaling_exponents(
    target: ScalingTarget,
    t: usize,
    k: usize,
    d_pair: (u64, u64),
) -> Result<Vec<Vec<Exponent>>> {
    let (d1, d2) = d_pair;
    if d1 < t as u64 || d2 < t as u64 || d1 == d2 {
        return Err(Error::InvalidParameter(format!("need distinct d >= t, got {d_pair:?}")));
    }
    let a = localized_transfer_exact(target, t, k, d1)?;
    let b = localized_transfer_exact(target, t, k, d2)?;
    let ratio = (d2 as f64 / d1 as f64).ln();
    let n = a.rows();
    Ok((0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let (x, y) = (a.get(i, j), b.get(i, j));
                    match (x.is_zero(), y.is_zero()) {
                        (true, true) => Exponent::StructuralZero,
                        (true, false) | (false, true) => Exponent::MixedOrder(f64::NAN),
                        _ => {
                            // log|x/y| stays accurate even when both underflow as floats.
                            let r = (x / y).abs();
                            let est = log_rational(&r) / ratio;
                            let rounded = est.round();
                            if (est - rounded).abs() < EXPONENT_TOLERANCE {
                                Exponent::Order(rounded as i32)
                            } else {
                                Exponent::MixedOrder(est)
                            }
                        }
                    }
                })
                .collect()
        })
        .collect())
}

/// Natural log of a positive rational without overflow.
pub fn log_rational(r: &Rational) -> f64 {
    fn log_big(x: &BigInt) -> f64 {
        let bits = x.bits();
        if bits < 1000 {
            use num_traits::ToPrimitive;
            x.to_f64().unwrap_or(f64::INFINITY).ln()
        } else {
            let shift = bits - 64;
            let top: BigInt = x >> shift;
            use num_traits::ToPrimitive;
            top.to_f64().unwrap().ln() + shift as f64 * std::f64::consts::LN_2
        }
    }
    log_big(r.numer()) - log_big(r.denom())
}
