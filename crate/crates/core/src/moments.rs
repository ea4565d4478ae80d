//! Moment operators of channel ensembles at the transfer-matrix level.
//!
//! Every quantity is computed from a transfer matrix `τ` and the overlap
//! (Gram) matrix `X` of its basis. Products of moment operators become
//! `τ₁ X τ₂`, so `k` concatenations give `τ (X τ)^{k-1}`; the squared
//! Hilbert-Schmidt norm is `Tr(τᵀ X τ X)`, the trace is `Tr(τ X)`, and the
//! spectrum is that of `τ X`.

use std::fmt;

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{rational_to_f64, ExactMatrix};
use crate::localized::{gram_for_basis, BasisKind, BasisTag, Entries, EnvRule, Gram, TransferMatrix};
use crate::localized::to_localized;
use crate::sampling::{haar_unitary, parallel_moments, stinespring_kraus};
use crate::symmgroup::{factorial, SymmetricGroup};
use crate::twirlsim::CircuitSpec;
use crate::weingarten::{chaar_matrix, chaar_matrix_f64, weingarten_matrix_f64, weingarten_matrix_for};
use crate::Rational;

#[derive(Clone, Debug, PartialEq)]
pub enum EnsembleKind {
    Haar { d: u64 },
    CHaar { d: u64, d_env: u64 },
    Depolarize { d: u64 },
    NoisyCircuit(CircuitSpec),
    /// A single fixed channel, such as a noise model.
    Fixed { d: u64, label: String },
}

/// An ensemble together with the moment order and concatenation count.
#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleSpec {
    pub kind: EnsembleKind,
    pub t: usize,
    pub k: usize,
}

impl EnsembleSpec {
    pub fn haar(t: usize, d: u64) -> Self {
        Self { kind: EnsembleKind::Haar { d }, t, k: 1 }
    }

    pub fn chaar(t: usize, d: u64, d_env: u64) -> Self {
        Self { kind: EnsembleKind::CHaar { d, d_env }, t, k: 1 }
    }

    pub fn depolarize(t: usize, d: u64) -> Self {
        Self { kind: EnsembleKind::Depolarize { d }, t, k: 1 }
    }

    pub fn with_k(mut self, k: usize) -> Self {
        self.k = k;
        self
    }

    /// System dimension.
    pub fn d(&self) -> u64 {
        match &self.kind {
            EnsembleKind::Haar { d } | EnsembleKind::CHaar { d, .. } | EnsembleKind::Depolarize { d } => *d,
            EnsembleKind::NoisyCircuit(c) => 1u64 << c.n,
            EnsembleKind::Fixed { d, .. } => *d,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        if self.t == 0 {
            return Err(Error::InvalidParameter("t must be at least 1".into()));
        }
        match &self.kind {
            EnsembleKind::Haar { d } | EnsembleKind::Depolarize { d } if *d < 2 => {
                Err(Error::InvalidParameter(format!("d must be at least 2, got {d}")))
            }
            EnsembleKind::CHaar { d, d_env } if *d < 2 || *d_env < 1 => {
                Err(Error::InvalidParameter(format!("need d >= 2 and dE >= 1, got d={d}, dE={d_env}")))
            }
            _ => Ok(()),
        }
    }

    pub fn label(&self) -> String {
        match &self.kind {
            EnsembleKind::Haar { d } => format!("haar(d={d})"),
            EnsembleKind::CHaar { d, d_env } => format!("chaar(d={d},dE={d_env})"),
            EnsembleKind::Depolarize { d } => format!("depolarize(d={d})"),
            EnsembleKind::NoisyCircuit(c) => format!("circuit({})", c.label()),
            EnsembleKind::Fixed { label, .. } => format!("fixed({label})"),
        }
    }
}

/// An exact rational or a float.
#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Exact(Rational),
    Float(f64),
}

impl Value {
    pub fn to_f64(&self) -> f64 {
        match self {
            Value::Exact(r) => rational_to_f64(r),
            Value::Float(x) => *x,
        }
    }

    pub fn as_exact(&self) -> Option<&Rational> {
        match self {
            Value::Exact(r) => Some(r),
            Value::Float(_) => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Exact(r) => write!(f, "{r}"),
            Value::Float(x) => write!(f, "{x}"),
        }
    }
}

fn check_gram(tau: &TransferMatrix, gram: &Gram) -> Result<()> {
    if tau.basis != gram.basis || tau.dim() != gram.entries.dim() {
        return Err(Error::DimensionMismatch(format!(
            "transfer basis {:?} does not match Gram basis {:?}",
            tau.basis, gram.basis
        )));
    }
    Ok(())
}

/// k = `spec.k` transfer matrix of a Haar, cHaar or Depolarize ensemble.
pub fn transfer(spec: &EnsembleSpec, basis: BasisKind, exact: bool) -> Result<TransferMatrix> {
    spec.validate()?;
    let t = spec.t;
    let g = SymmetricGroup::new(t)?;
    let d = spec.d();
    let base = spec.clone().with_k(1);
    let tag = BasisTag::permutation(t, d);
    let tau = match (&spec.kind, exact) {
        (EnsembleKind::Haar { d }, true) => TransferMatrix::exact(weingarten_matrix_for(&g, *d)?, tag, base),
        (EnsembleKind::Haar { d }, false) => {
            TransferMatrix::float(weingarten_matrix_f64(&g, *d as f64)?, tag, base)
        }
        (EnsembleKind::CHaar { d, d_env }, true) => {
            TransferMatrix::exact(chaar_matrix(&g, *d, *d_env)?, tag, base)
        }
        (EnsembleKind::CHaar { d, d_env }, false) => {
            TransferMatrix::float(chaar_matrix_f64(&g, *d as f64, *d_env as f64)?, tag, base)
        }
        (EnsembleKind::Depolarize { .. }, true) => {
            let mut m = ExactMatrix::zeros(g.len(), g.len());
            m.set(0, 0, Rational::one());
            TransferMatrix::exact(m, tag, base)
        }
        (EnsembleKind::Depolarize { .. }, false) => {
            let mut m = DMatrix::zeros(g.len(), g.len());
            m[(0, 0)] = 1.0;
            TransferMatrix::float(m, tag, base)
        }
        (EnsembleKind::NoisyCircuit(_), _) => {
            return Err(Error::Unsupported(
                "circuit ensembles have no closed transfer matrix; use the twirl simulator".into(),
            ))
        }
        (EnsembleKind::Fixed { .. }, _) => {
            return Err(Error::Unsupported("fixed channels are built from their noise model".into()))
        }
    };
    let tau = if spec.k > 1 { concatenate(&tau, &gram_for_basis(tag, exact)?, spec.k)? } else { tau };
    match basis {
        BasisKind::Permutation => Ok(tau),
        BasisKind::Localized => to_localized(&tau),
        BasisKind::Pauli => Err(Error::Unsupported("Pauli basis transfer for unitary ensembles".into())),
    }
}

/// Product of moment operators: `τ_a X τ_b`.
pub fn compose_transfer(a: &TransferMatrix, b: &TransferMatrix, gram: &Gram) -> Result<TransferMatrix> {
    check_gram(a, gram)?;
    check_gram(b, gram)?;
    let entries = match (&a.entries, &gram.entries, &b.entries) {
        (Entries::Exact(x), Entries::Exact(g), Entries::Exact(y)) => Entries::Exact(&(x * g) * y),
        _ => Entries::Float(a.to_f64() * gram.entries.to_f64() * b.to_f64()),
    };
    Ok(TransferMatrix { entries, basis: a.basis, ensemble: a.ensemble.clone() })
}

/// `τ (X τ)^{k-1}`.
pub fn concatenate(tau: &TransferMatrix, gram: &Gram, k: usize) -> Result<TransferMatrix> {
    check_gram(tau, gram)?;
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    let mut ensemble = tau.ensemble.clone();
    ensemble.k = tau.ensemble.k * k;
    let entries = match (&tau.entries, &gram.entries) {
        (Entries::Exact(m), Entries::Exact(x)) => {
            let step = x * m;
            let mut acc = m.clone();
            for _ in 1..k {
                acc = &acc * &step;
            }
            Entries::Exact(acc)
        }
        _ => {
            let m = tau.to_f64();
            let step = gram.entries.to_f64() * &m;
            let mut acc = m;
            for _ in 1..k {
                acc = &acc * &step;
            }
            Entries::Float(acc)
        }
    };
    Ok(TransferMatrix { entries, basis: tau.basis, ensemble })
}

/// Closed-form localized transfer of the k-fold concatenated t=2 cHaar ensemble,
/// ordered `(ℓe, ℓτ)`.
pub fn exact_t2_chaar(k: usize, d: u64, d_env: u64) -> Result<TransferMatrix> {
    if k == 0 || d < 2 || d_env < 1 {
        return Err(Error::InvalidParameter(format!("need k>=1, d>=2, dE>=1; got k={k}, d={d}, dE={d_env}")));
    }
    let big = |x: u64| Rational::from_integer(BigInt::from(x));
    let (dd, de) = (big(d), big(d_env));
    let d2m1 = &dd * &dd - Rational::one();
    let den = &dd * &dd * &de * &de - Rational::one();
    let r = &de * &d2m1 / &den;
    let a = (&de - Rational::one()) / &den;
    let mut geo = Rational::one();
    let mut rp = Rational::one();
    for _ in 1..k {
        rp = &rp * &r;
        geo += &rp;
    }
    let diag = num_traits::pow(de, k) * num_traits::pow(d2m1, k - 1) / num_traits::pow(den, k);
    let m = ExactMatrix::from_rows(vec![vec![Rational::one(), Rational::zero()], vec![&a * &geo, diag]])?;
    Ok(TransferMatrix::exact(m, BasisTag::localized(2, d), EnsembleSpec::chaar(2, d, d_env).with_k(k)))
}

/// `‖M‖²_HS = Tr(τᵀ X τ X)`.
pub fn norm_squared(tau: &TransferMatrix, gram: &Gram) -> Result<Value> {
    check_gram(tau, gram)?;
    Ok(match (&tau.entries, &gram.entries) {
        (Entries::Exact(m), Entries::Exact(x)) => {
            let left = &(&m.transpose() * x) * m;
            Value::Exact(left.frobenius_dot(&x.transpose()))
        }
        _ => {
            let m = tau.to_f64();
            let x = gram.entries.to_f64();
            let left = m.transpose() * &x * &m;
            Value::Float(left.component_mul(&x.transpose()).sum())
        }
    })
}

/// `Tr M = Tr(τ X)`.
pub fn trace(tau: &TransferMatrix, gram: &Gram) -> Result<Value> {
    check_gram(tau, gram)?;
    Ok(match (&tau.entries, &gram.entries) {
        (Entries::Exact(m), Entries::Exact(x)) => Value::Exact(m.frobenius_dot(&x.transpose())),
        _ => Value::Float(tau.to_f64().component_mul(&gram.entries.to_f64().transpose()).sum()),
    })
}

/// `τ X`, the matrix of the moment operator acting on permutation coefficients.
pub fn modified_transfer(tau: &TransferMatrix, gram: &Gram) -> Result<Entries> {
    check_gram(tau, gram)?;
    Ok(match (&tau.entries, &gram.entries) {
        (Entries::Exact(m), Entries::Exact(x)) => Entries::Exact(m * x),
        _ => Entries::Float(tau.to_f64() * gram.entries.to_f64()),
    })
}

/// Residual norms of the reported leading eigenpair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Residuals {
    /// `‖τ̃ v - λ v‖` for the numerically computed right eigenvector.
    pub right: f64,
    /// `‖τ̃ ψ - ψ‖` for the closed-form fixed point `ψ(σ) = (d dE)^{-|σ|}`.
    pub closed_form: f64,
    /// `‖ℓᵀ (X τ) - ℓᵀ‖` for the identity indicator `ℓ`.
    pub left: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectralReport {
    /// Eigenvalues of `τ X`, by decreasing modulus.
    pub eigenvalues: Vec<Complex64>,
    /// Right eigenvector for the leading eigenvalue, scaled to unit identity entry.
    pub leading_right: Vec<f64>,
    /// Left coefficient vector fixed by `X τ`: the identity indicator.
    pub leading_left: Vec<f64>,
    /// `ψ(σ) = (d dE)^{-|σ|}`, normalized like `leading_right`.
    pub closed_form_right: Vec<f64>,
    pub residuals: Residuals,
}

/// Tolerance for eigenpair residuals.
pub const EIGEN_TOLERANCE: f64 = 1e-10;

/// Spectrum of the modified transfer matrix `τ X` in the permutation basis.
pub fn spectrum(spec: &EnsembleSpec) -> Result<SpectralReport> {
    let tau = transfer(spec, BasisKind::Permutation, false)?;
    let gram = gram_for_basis(tau.basis, false)?;
    let tt = modified_transfer(&tau, &gram)?.to_f64();
    let n = tt.nrows();
    let schur = nalgebra::Schur::try_new(tt.clone(), 1e-15, 100_000)
        .ok_or_else(|| Error::Convergence(format!("Schur iteration for {}", spec.label())))?;
    let mut eigenvalues: Vec<Complex64> = schur.complex_eigenvalues().iter().copied().collect();
    eigenvalues.sort_by(|a, b| b.norm().partial_cmp(&a.norm()).unwrap().then(b.re.partial_cmp(&a.re).unwrap()));
    let lead = eigenvalues.first().map(|z| z.re).unwrap_or(0.0);

    let v = leading_vector(&tt, lead)?;
    let right = (&tt * &v - &v * lead).norm();

    let de = match spec.kind {
        EnsembleKind::CHaar { d_env, .. } => d_env as f64,
        _ => 1.0,
    };
    let d = spec.d() as f64;
    let g = SymmetricGroup::new(spec.t)?;
    let psi = DMatrix::from_fn(n, 1, |i, _| (d * de).powi(-(g.size(i) as i32)));
    let closed_form = (&tt * &psi - &psi).norm() / psi.norm();

    let mut ell = DMatrix::zeros(1, n);
    ell[(0, 0)] = 1.0;
    let x = gram.entries.to_f64();
    let left = (&ell * (&x * tau.to_f64()) - &ell).norm();

    Ok(SpectralReport {
        eigenvalues,
        leading_right: v.iter().copied().collect(),
        leading_left: ell.iter().copied().collect(),
        closed_form_right: psi.iter().copied().collect(),
        residuals: Residuals { right, closed_form, left },
    })
}

/// Eigenvector for a real eigenvalue via shifted inverse iteration,
/// scaled so the identity entry is one (or the vector has unit norm if that entry vanishes).
fn leading_vector(m: &DMatrix<f64>, lambda: f64) -> Result<DMatrix<f64>> {
    let n = m.nrows();
    let shift = lambda + 1e-10 * lambda.abs().max(1.0);
    let a = m - DMatrix::identity(n, n) * shift;
    let lu = a.lu();
    let mut v = DMatrix::from_element(n, 1, 1.0 / (n as f64).sqrt());
    for _ in 0..8 {
        let w = lu.solve(&v).ok_or_else(|| Error::Convergence("singular shifted system".into()))?;
        let nrm = w.norm();
        if !nrm.is_finite() || nrm == 0.0 {
            return Err(Error::Convergence("inverse iteration diverged".into()));
        }
        v = w / nrm;
    }
    if v[(0, 0)].abs() > 1e-12 {
        let s = v[(0, 0)];
        v /= s;
    }
    Ok(v)
}

/// `‖T - T_Dep‖ = sqrt(‖T‖² - 1)` for trace-preserving ensembles.
pub fn design_distance_depolarize(spec: &EnsembleSpec, exact: bool) -> Result<f64> {
    let tau = transfer(spec, BasisKind::Permutation, exact)?;
    let gram = gram_for_basis(tau.basis, exact)?;
    let n2 = norm_squared(&tau, &gram)?;
    distance_from_norm(&n2)
}

fn distance_from_norm(n2: &Value) -> Result<f64> {
    let excess = match n2 {
        Value::Exact(r) => {
            if r < &Rational::one() {
                return Err(Error::InvalidParameter(format!("norm² {r} below the depolarizing floor 1")));
            }
            rational_to_f64(&(r - Rational::one()))
        }
        Value::Float(x) => {
            let e = x - 1.0;
            if e < -1e-9 {
                return Err(Error::InvalidParameter(format!("norm² {x} below the depolarizing floor 1")));
            }
            e.max(0.0)
        }
    };
    Ok(excess.sqrt())
}

/// One grid point of a hierarchy scan.
#[derive(Clone, Debug, PartialEq)]
pub struct ScanRow {
    pub t: usize,
    pub k: usize,
    pub d: u64,
    pub d_env: u64,
    pub norm2: Value,
    pub trace: Value,
    pub eps_dep: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum FlagKind {
    /// `1 <= ‖T‖² <= t!` violated.
    Bounds,
    /// Norm increased with the environment dimension.
    EnvMonotonicity,
    /// Norm increased with the concatenation count.
    ConcatenationMonotonicity,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanFlag {
    pub kind: FlagKind,
    pub t: usize,
    pub k: usize,
    pub d: u64,
    pub d_env: u64,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HierarchyTable {
    pub rows: Vec<ScanRow>,
    pub flags: Vec<ScanFlag>,
    /// Grid points with `d·dE < t`, where the Gram matrix is singular.
    pub skipped: Vec<(usize, u64, u64)>,
}

/// Norms and traces of k-concatenated cHaar moment operators over a grid,
/// with bound and monotonicity checks reported as flags.
pub fn hierarchy_scan(
    t_list: &[usize],
    k_list: &[usize],
    d_list: &[u64],
    env_rules: &[EnvRule],
    exact: bool,
) -> Result<HierarchyTable> {
    if t_list.is_empty() || k_list.is_empty() || d_list.is_empty() || env_rules.is_empty() {
        return Err(Error::InvalidParameter("empty scan grid".into()));
    }
    if k_list.contains(&0) || d_list.iter().any(|&d| d < 2) || t_list.contains(&0) {
        return Err(Error::InvalidParameter("scan needs t >= 1, k >= 1, d >= 2".into()));
    }
    let mut ks = k_list.to_vec();
    ks.sort_unstable();
    ks.dedup();

    let mut points = Vec::new();
    let mut skipped = Vec::new();
    for &t in t_list {
        SymmetricGroup::new(t)?;
        for &d in d_list {
            let mut envs: Vec<u64> = env_rules.iter().map(|r| r.env_dim(d)).collect();
            envs.sort_unstable();
            envs.dedup();
            for de in envs {
                if d * de < t as u64 {
                    skipped.push((t, d, de));
                } else {
                    points.push((t, d, de));
                }
            }
        }
    }

    // Each point yields its rows for every k, computed from one base transfer.
    let results: Vec<Result<Vec<ScanRow>>> = points
        .par_iter()
        .map(|&(t, d, de)| {
            let spec = EnsembleSpec::chaar(t, d, de);
            let tau = transfer(&spec, BasisKind::Permutation, exact)?;
            let gram = gram_for_basis(tau.basis, exact)?;
            ks.iter()
                .map(|&k| {
                    let tk = concatenate(&tau, &gram, k)?;
                    let n2 = norm_squared(&tk, &gram)?;
                    let tr = trace(&tk, &gram)?;
                    let eps = distance_from_norm(&n2).unwrap_or(f64::NAN);
                    Ok(ScanRow { t, k, d, d_env: de, norm2: n2, trace: tr, eps_dep: eps })
                })
                .collect()
        })
        .collect();
    let mut rows = Vec::new();
    for r in results {
        rows.extend(r?);
    }
    rows.sort_by_key(|r| (r.t, r.k, r.d, r.d_env));

    let flags = scan_flags(&rows);
    Ok(HierarchyTable { rows, flags, skipped })
}

fn le(a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::Exact(x), Value::Exact(y)) => x <= y,
        _ => a.to_f64() <= b.to_f64() * (1.0 + 1e-12) + 1e-12,
    }
}

fn scan_flags(rows: &[ScanRow]) -> Vec<ScanFlag> {
    let mut flags = Vec::new();
    for r in rows {
        let tf = Value::Exact(Rational::from_integer(BigInt::from(factorial(r.t))));
        let one = Value::Exact(Rational::one());
        if !(le(&one, &r.norm2) && le(&r.norm2, &tf)) {
            flags.push(ScanFlag {
                kind: FlagKind::Bounds,
                t: r.t,
                k: r.k,
                d: r.d,
                d_env: r.d_env,
                detail: format!("norm2 = {}", r.norm2),
            });
        }
    }
    // Rows are sorted by (t, k, d, dE).
    for w in rows.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        if (a.t, a.k, a.d) == (b.t, b.k, b.d) && !le(&b.norm2, &a.norm2) {
            flags.push(ScanFlag {
                kind: FlagKind::EnvMonotonicity,
                t: b.t,
                k: b.k,
                d: b.d,
                d_env: b.d_env,
                detail: format!("dE {} -> {}: {} -> {}", a.d_env, b.d_env, a.norm2.to_f64(), b.norm2.to_f64()),
            });
        }
    }
    let mut by_k: Vec<&ScanRow> = rows.iter().collect();
    by_k.sort_by_key(|r| (r.t, r.d, r.d_env, r.k));
    for w in by_k.windows(2) {
        let (a, b) = (w[0], w[1]);
        if (a.t, a.d, a.d_env) == (b.t, b.d, b.d_env) && !le(&b.norm2, &a.norm2) {
            flags.push(ScanFlag {
                kind: FlagKind::ConcatenationMonotonicity,
                t: b.t,
                k: b.k,
                d: b.d,
                d_env: b.d_env,
                detail: format!("k {} -> {}: {} -> {}", a.k, b.k, a.norm2.to_f64(), b.norm2.to_f64()),
            });
        }
    }
    flags
}

/// Outcome of one named identity check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InvarianceReport {
    pub t: usize,
    pub d: u64,
    pub d_env: u64,
    pub checks: Vec<Check>,
}

impl InvarianceReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Composition identities between Haar, cHaar and Depolarize moment operators,
/// checked exactly on transfer matrices.
pub fn invariance_checks(t: usize, d: u64, d_env: u64) -> Result<InvarianceReport> {
    let haar = transfer(&EnsembleSpec::haar(t, d), BasisKind::Permutation, true)?;
    let chaar = transfer(&EnsembleSpec::chaar(t, d, d_env), BasisKind::Permutation, true)?;
    let dep = transfer(&EnsembleSpec::depolarize(t, d), BasisKind::Permutation, true)?;
    let gram = gram_for_basis(haar.basis, true)?;
    let eq = |a: &TransferMatrix, b: &TransferMatrix| a.exact_entries() == b.exact_entries();
    let mut checks = Vec::new();
    let mut push = |name: &str, passed: bool, detail: String| {
        checks.push(Check { name: name.to_string(), passed, detail })
    };

    for (label, c) in [("haar", &haar), ("chaar", &chaar), ("depolarize", &dep)] {
        let p = compose_transfer(&dep, c, &gram)?;
        push(&format!("depolarize_right_invariant_under_{label}"), eq(&p, &dep), "T_Dep T_C = T_Dep".into());
    }
    for (label, c) in [("haar", &haar), ("depolarize", &dep)] {
        let p = compose_transfer(c, &dep, &gram)?;
        push(&format!("depolarize_left_invariant_under_{label}"), eq(&p, &dep), "T_C T_Dep = T_Dep (unital C)".into());
    }
    if d_env > 1 && t > 1 {
        let p = compose_transfer(&chaar, &dep, &gram)?;
        push("chaar_is_not_unital", !eq(&p, &dep), "T_cHaar T_Dep != T_Dep".into());
    }
    let hc = compose_transfer(&haar, &chaar, &gram)?;
    push("haar_then_chaar_is_chaar", eq(&hc, &chaar), "T_Haar T_cHaar = T_cHaar".into());
    let ch = compose_transfer(&chaar, &haar, &gram)?;
    push("chaar_then_haar_is_chaar", eq(&ch, &chaar), "T_cHaar T_Haar = T_cHaar".into());
    let hh = compose_transfer(&haar, &haar, &gram)?;
    push("haar_is_projector", eq(&hh, &haar), "T_Haar² = T_Haar".into());
    if d_env > 1 && t > 1 {
        let cc = compose_transfer(&chaar, &chaar, &gram)?;
        let diff = (&(cc.exact_entries().unwrap() * gram.entries_exact()) - &(chaar.exact_entries().unwrap() * gram.entries_exact()))
            .max_abs_f64();
        push("chaar_is_not_idempotent", !eq(&cc, &chaar), format!("max |τ̃² - τ̃| = {diff:e}"));
    }
    Ok(InvarianceReport { t, d, d_env, checks })
}

impl Gram {
    pub fn entries_exact(&self) -> &ExactMatrix {
        match &self.entries {
            Entries::Exact(m) => m,
            Entries::Float(_) => panic!("exact Gram required"),
        }
    }
}

/// Monte-Carlo estimate with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: u64,
}

/// Minimum accepted sample count.
pub const MIN_SAMPLES: u64 = 100;

/// Frame potential `E (Tr Λ̂†Υ̂)^t` over independent channel pairs,
/// an unbiased estimate of `‖T‖²`.
pub fn frame_potential_mc(spec: &EnsembleSpec, samples: u64, seed: u64) -> Result<McEstimate> {
    spec.validate()?;
    if samples < MIN_SAMPLES {
        return Err(Error::InvalidParameter(format!("need at least {MIN_SAMPLES} samples, got {samples}")));
    }
    let t = spec.t as i32;
    let m = match spec.kind {
        EnsembleKind::Depolarize { .. } => return Ok(McEstimate { mean: 1.0, std_error: 0.0, samples }),
        EnsembleKind::Haar { d } => {
            let d = d as usize;
            parallel_moments(samples, seed, |rng| {
                let u = haar_unitary(d, rng);
                let v = haar_unitary(d, rng);
                (u.adjoint() * v).trace().norm_sqr().powi(t)
            })
        }
        EnsembleKind::CHaar { d, d_env } => {
            let (d, de) = (d as usize, d_env as usize);
            if d * de > 64 {
                return Err(Error::ResourceCap(format!("d·dE = {} exceeds 64", d * de)));
            }
            parallel_moments(samples, seed, |rng| {
                let a = stinespring_kraus(d, de, rng);
                let b = stinespring_kraus(d, de, rng);
                let mut overlap = 0.0;
                for ka in &a {
                    for kb in &b {
                        overlap += (ka.adjoint() * kb).trace().norm_sqr();
                    }
                }
                overlap.powi(t)
            })
        }
        EnsembleKind::NoisyCircuit(_) | EnsembleKind::Fixed { .. } => {
            return Err(Error::Unsupported(format!("frame potential sampling for {}", spec.label())))
        }
    };
    Ok(McEstimate { mean: m.mean(), std_error: m.std_error(), samples })
}

/// `t!` for convenience in comparisons.
pub fn haar_norm(t: usize) -> Rational {
    Rational::from_integer(BigInt::from(factorial(t)))
}
