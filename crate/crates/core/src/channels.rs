//! Dense superoperators, Kraus maps, Pauli strings and structured noise.
//!
//! Operators are vectorized row-major, `|α⟩⟨β| ↦ |αβ⟩`, so a Kraus map
//! `X ↦ Σ K X K†` has superoperator `Σ K ⊗ K*`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::localized::{BasisTag, TransferMatrix};
use crate::moments::{EnsembleKind, EnsembleSpec};
use crate::sampling::CMatrix;

/// Square complex matrix acting on a Hilbert space.
pub type DenseOperator = CMatrix;

/// Tolerance for Kraus completeness and trace preservation.
pub const COMPLETENESS_TOLERANCE: f64 = 1e-12;
/// Tolerance on negative Choi eigenvalues.
pub const CP_TOLERANCE: f64 = 1e-10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Row-major flattening.
pub fn vectorize(x: &DenseOperator) -> DVector<Complex64> {
    let (r, c) = x.shape();
    DVector::from_fn(r * c, |k, _| x[(k / c, k % c)])
}

/// Inverse of [`vectorize`] for a `dim × dim` operator.
pub fn unvectorize(v: &DVector<Complex64>, dim: usize) -> DenseOperator {
    assert_eq!(v.len(), dim * dim, "vector length must be dim²");
    CMatrix::from_fn(dim, dim, |i, j| v[i * dim + j])
}

pub fn is_hermitian(x: &DenseOperator, tol: f64) -> bool {
    x.is_square() && (x - x.adjoint()).norm() <= tol
}

/// Kraus operators with `Σ K†K = I`.
#[derive(Clone, Debug, PartialEq)]
pub struct KrausSet {
    ops: Vec<DenseOperator>,
    dim: usize,
}

impl KrausSet {
    pub fn new(ops: Vec<DenseOperator>) -> Result<Self> {
        let dim = ops.first().map(|k| k.nrows()).ok_or_else(|| Error::InvalidParameter("empty Kraus set".into()))?;
        if ops.iter().any(|k| k.shape() != (dim, dim)) {
            return Err(Error::DimensionMismatch("Kraus operators must share a square shape".into()));
        }
        let sum = ops.iter().fold(CMatrix::zeros(dim, dim), |acc, k| acc + k.adjoint() * k);
        let dev = (sum - CMatrix::identity(dim, dim)).camax();
        if dev > COMPLETENESS_TOLERANCE {
            return Err(Error::CompletenessViolation(dev));
        }
        Ok(Self { ops, dim })
    }

    pub fn identity(dim: usize) -> Self {
        Self { ops: vec![CMatrix::identity(dim, dim)], dim }
    }

    pub fn ops(&self) -> &[DenseOperator] {
        &self.ops
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn apply(&self, rho: &DenseOperator) -> DenseOperator {
        crate::sampling::apply_kraus(&self.ops, rho)
    }
}

/// Matrix of `Λ^{⊗t}` on row-major vectorized operators of `(C^d)^{⊗t}`.
#[derive(Clone, Debug, PartialEq)]
pub struct SuperOperator {
    pub t: usize,
    pub d: usize,
    pub matrix: CMatrix,
}

impl SuperOperator {
    pub fn identity(d: usize, t: usize) -> Self {
        let n = d.pow(2 * t as u32);
        Self { t, d, matrix: CMatrix::identity(n, n) }
    }

    /// Dimension `d^t` of the operators it acts on.
    pub fn operator_dim(&self) -> usize {
        self.d.pow(self.t as u32)
    }

    pub fn apply(&self, x: &DenseOperator) -> DenseOperator {
        unvectorize(&(&self.matrix * vectorize(x)), self.operator_dim())
    }

    /// Deviation of `⟨⟨I| Λ̂` from `⟨⟨I|`.
    pub fn trace_preservation_error(&self) -> f64 {
        let n = self.operator_dim();
        let cols = self.matrix.ncols();
        (0..cols)
            .map(|c| {
                let s: Complex64 = (0..n).map(|a| self.matrix[(a * n + a, c)]).sum();
                let target = if c % (n + 1) == 0 { ONE } else { ZERO };
                (s - target).norm()
            })
            .fold(0.0, f64::max)
    }

    pub fn is_trace_preserving(&self, tol: f64) -> bool {
        self.trace_preservation_error() <= tol
    }

    pub fn is_unital(&self, tol: f64) -> bool {
        let n = self.operator_dim();
        let id = vectorize(&CMatrix::identity(n, n));
        (&self.matrix * &id - id).camax() <= tol
    }

    /// `t`-fold tensor power of a single-copy superoperator, by index reordering.
    pub fn tensor_power(&self, t: usize) -> Result<Self> {
        if self.t != 1 {
            return Err(Error::InvalidParameter("tensor power needs a single-copy superoperator".into()));
        }
        if t == 0 {
            return Err(Error::InvalidParameter("t must be at least 1".into()));
        }
        let d = self.d;
        let big = d.pow(t as u32);
        let n = big * big;
        // Per-copy single-copy vector indices of every t-fold vector index.
        let split: Vec<Vec<usize>> = (0..n)
            .map(|v| {
                let (mut a, mut b) = (v / big, v % big);
                let mut out = vec![0; t];
                for j in (0..t).rev() {
                    out[j] = (a % d) * d + b % d;
                    a /= d;
                    b /= d;
                }
                out
            })
            .collect();
        let matrix = CMatrix::from_fn(n, n, |r, c| {
            split[r].iter().zip(&split[c]).fold(ONE, |acc, (&i, &j)| acc * self.matrix[(i, j)])
        });
        Ok(Self { t, d, matrix })
    }

    /// Choi matrix `Σ_ij |i⟩⟨j| ⊗ Λ(|i⟩⟨j|)` of a single-copy map.
    pub fn choi(&self) -> Result<CMatrix> {
        if self.t != 1 {
            return Err(Error::InvalidParameter("Choi matrix of a single-copy map only".into()));
        }
        let d = self.d;
        Ok(CMatrix::from_fn(d * d, d * d, |r, c| {
            let (i, a) = (r / d, r % d);
            let (j, b) = (c / d, c % d);
            self.matrix[(a * d + b, i * d + j)]
        }))
    }

    /// Smallest eigenvalue of the Hermitian part of the Choi matrix.
    pub fn min_choi_eigenvalue(&self) -> Result<f64> {
        let c = self.choi()?;
        let h = (&c + c.adjoint()) * Complex64::new(0.5, 0.0);
        Ok(SymmetricEigen::new(h).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min))
    }
}

/// `Σ` over Kraus index tuples of `(K_{i1}⊗…⊗K_{it}) ⊗ (K_{i1}⊗…⊗K_{it})*`.
pub fn kraus_to_super(kraus: &KrausSet, t: usize) -> Result<SuperOperator> {
    if t == 0 {
        return Err(Error::InvalidParameter("t must be at least 1".into()));
    }
    KrausSet::new(kraus.ops.clone())?;
    let r = kraus.ops.len();
    let d = kraus.dim;
    let big = d.pow(t as u32);
    let mut matrix = CMatrix::zeros(big * big, big * big);
    for tuple in 0..r.pow(t as u32) {
        let mut a = CMatrix::identity(1, 1);
        let mut rest = tuple;
        let mut picks = vec![0; t];
        for j in (0..t).rev() {
            picks[j] = rest % r;
            rest /= r;
        }
        for &p in &picks {
            a = a.kronecker(&kraus.ops[p]);
        }
        matrix += a.kronecker(&a.map(|z| z.conj()));
    }
    Ok(SuperOperator { t, d, matrix })
}

/// Single-qubit noise families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum NoiseKind {
    BitFlip,
    Dephasing,
    LocalDepolarizing,
    AmplitudeDamping,
}

impl NoiseKind {
    pub const ALL: [NoiseKind; 4] =
        [NoiseKind::BitFlip, NoiseKind::Dephasing, NoiseKind::LocalDepolarizing, NoiseKind::AmplitudeDamping];

    pub fn name(self) -> &'static str {
        match self {
            NoiseKind::BitFlip => "bitflip",
            NoiseKind::Dephasing => "dephasing",
            NoiseKind::LocalDepolarizing => "depolarizing",
            NoiseKind::AmplitudeDamping => "amplitude-damping",
        }
    }

    pub fn is_unital(self) -> bool {
        self != NoiseKind::AmplitudeDamping
    }
}

impl fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NoiseKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "bitflip" | "bit-flip" | "bf" => Ok(NoiseKind::BitFlip),
            "dephasing" | "d" => Ok(NoiseKind::Dephasing),
            "depolarizing" | "local-depolarizing" | "ld" => Ok(NoiseKind::LocalDepolarizing),
            "amplitude-damping" | "amplitudedamping" | "ad" => Ok(NoiseKind::AmplitudeDamping),
            other => Err(Error::InvalidParameter(format!("unknown noise kind '{other}'"))),
        }
    }
}

/// Kraus set of a single-qubit noise channel with strength `gamma`.
pub fn standard_noise(kind: NoiseKind, gamma: f64) -> Result<KrausSet> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::InvalidParameter(format!("noise strength {gamma} outside [0, 1]")));
    }
    let keep = Complex64::new((1.0 - gamma).sqrt(), 0.0);
    let c = |x: f64| Complex64::new(x, 0.0);
    let ops = match kind {
        NoiseKind::BitFlip => vec![Pauli::I.matrix() * keep, Pauli::X.matrix() * c(gamma.sqrt())],
        NoiseKind::Dephasing => vec![Pauli::I.matrix() * keep, Pauli::Z.matrix() * c(gamma.sqrt())],
        NoiseKind::LocalDepolarizing => {
            let s = c((gamma / 3.0).sqrt());
            vec![Pauli::I.matrix() * keep, Pauli::X.matrix() * s, Pauli::Y.matrix() * s, Pauli::Z.matrix() * s]
        }
        NoiseKind::AmplitudeDamping => vec![
            CMatrix::from_row_slice(2, 2, &[ZERO, c(gamma.sqrt()), ZERO, ZERO]),
            CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, keep]),
        ],
    };
    KrausSet::new(ops)
}

/// Kraus set `{|i⟩⟨j|/√d}` of the maximally depolarizing channel.
pub fn depolarizing_channel(d: usize) -> KrausSet {
    let s = Complex64::new(1.0 / (d as f64).sqrt(), 0.0);
    let ops = (0..d * d)
        .map(|k| {
            let mut m = CMatrix::zeros(d, d);
            m[(k / d, k % d)] = s;
            m
        })
        .collect();
    KrausSet { ops, dim: d }
}

/// Single-qubit Pauli label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn matrix(self) -> CMatrix {
        let i = Complex64::new(0.0, 1.0);
        let v = match self {
            Pauli::I => [ONE, ZERO, ZERO, ONE],
            Pauli::X => [ZERO, ONE, ONE, ZERO],
            Pauli::Y => [ZERO, -i, i, ZERO],
            Pauli::Z => [ONE, ZERO, ZERO, -ONE],
        };
        CMatrix::from_row_slice(2, 2, &v)
    }

    pub fn symbol(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    /// Parses a string such as `"XIZ"`.
    pub fn parse_string(s: &str) -> Result<Vec<Pauli>> {
        s.chars()
            .map(|ch| match ch.to_ascii_uppercase() {
                'I' => Ok(Pauli::I),
                'X' => Ok(Pauli::X),
                'Y' => Ok(Pauli::Y),
                'Z' => Ok(Pauli::Z),
                other => Err(Error::InvalidParameter(format!("bad Pauli label '{other}'"))),
            })
            .collect()
    }
}

pub fn pauli_label(labels: &[Pauli]) -> String {
    labels.iter().map(|p| p.symbol()).collect()
}

/// Tensor product of single-qubit Paulis, qubit 0 leftmost.
pub fn pauli_string(labels: &[Pauli]) -> DenseOperator {
    labels.iter().fold(CMatrix::identity(1, 1), |acc, p| acc.kronecker(&p.matrix()))
}

/// All `4^n` strings in base-4 order (`I < X < Y < Z`, qubit 0 most significant).
pub fn pauli_basis(n: usize) -> Vec<Vec<Pauli>> {
    (0..4usize.pow(n as u32))
        .map(|mut k| {
            let mut v = vec![Pauli::I; n];
            for j in (0..n).rev() {
                v[j] = Pauli::ALL[k % 4];
                k /= 4;
            }
            v
        })
        .collect()
}

/// Pauli transfer matrix `R(P,S) = Tr[P Λ(S)] / D` of a superoperator whose
/// operator dimension `D` is a power of two.
pub fn pauli_transfer(s: &SuperOperator) -> Result<DMatrix<f64>> {
    let dim = s.operator_dim();
    if !dim.is_power_of_two() {
        return Err(Error::InvalidParameter(format!("operator dimension {dim} is not a power of two")));
    }
    let n = dim.trailing_zeros() as usize;
    let basis: Vec<CMatrix> = pauli_basis(n).iter().map(|l| pauli_string(l)).collect();
    let images: Vec<CMatrix> = basis.iter().map(|b| s.apply(b)).collect();
    Ok(DMatrix::from_fn(basis.len(), basis.len(), |p, q| (&basis[p] * &images[q]).trace().re / dim as f64))
}

/// Pauli-diagonal decay `1 − γ(P)` plus identity-column shifts `η(P)`, indexed by
/// the non-identity strings of [`pauli_basis`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NoiseModel {
    pub n: usize,
    pub gamma: Vec<f64>,
    pub eta: Vec<f64>,
}

impl NoiseModel {
    pub fn new(n: usize, gamma: Vec<f64>, eta: Vec<f64>) -> Result<Self> {
        let m = 4usize.pow(n as u32) - 1;
        if gamma.len() != m || eta.len() != m {
            return Err(Error::DimensionMismatch(format!("expected {m} decay and shift values")));
        }
        if let Some(g) = gamma.iter().find(|g| !(0.0..=1.0).contains(*g)) {
            return Err(Error::InvalidParameter(format!("decay {g} outside [0, 1]")));
        }
        Ok(Self { n, gamma, eta })
    }

    /// Same decay on every string, no shifts.
    pub fn uniform(n: usize, gamma: f64) -> Result<Self> {
        let m = 4usize.pow(n as u32) - 1;
        Self::new(n, vec![gamma; m], vec![0.0; m])
    }

    /// Sets the identity-column shift of one string.
    pub fn with_eta(mut self, label: &[Pauli], value: f64) -> Result<Self> {
        let idx = pauli_index(label)?;
        if label.len() != self.n || idx == 0 {
            return Err(Error::InvalidParameter("shift label must be a non-identity string on n qubits".into()));
        }
        self.eta[idx - 1] = value;
        Ok(self)
    }

    pub fn d(&self) -> usize {
        1 << self.n
    }

    /// Pauli transfer matrix.
    pub fn ptm(&self) -> DMatrix<f64> {
        let m = self.d() * self.d();
        let mut r = DMatrix::zeros(m, m);
        r[(0, 0)] = 1.0;
        for p in 1..m {
            r[(p, 0)] = self.eta[p - 1];
            r[(p, p)] = 1.0 - self.gamma[p - 1];
        }
        r
    }

    /// Single-copy superoperator `Σ R(P,S) |P⟩⟩⟨⟨S| / d`.
    pub fn to_super(&self) -> SuperOperator {
        let d = self.d();
        let r = self.ptm();
        let vecs: Vec<DVector<Complex64>> = pauli_basis(self.n).iter().map(|l| vectorize(&pauli_string(l))).collect();
        let mut matrix = CMatrix::zeros(d * d, d * d);
        for (p, vp) in vecs.iter().enumerate() {
            for (s, vs) in vecs.iter().enumerate() {
                let c = r[(p, s)];
                if c != 0.0 {
                    matrix += (vp * vs.adjoint()) * Complex64::new(c / d as f64, 0.0);
                }
            }
        }
        SuperOperator { t: 1, d, matrix }
    }

    /// Errors with the most negative Choi eigenvalue when the map is not CP.
    pub fn validate(&self) -> Result<()> {
        let min = self.to_super().min_choi_eigenvalue()?;
        if min < -CP_TOLERANCE {
            return Err(Error::CpViolation { min_eigenvalue: min });
        }
        Ok(())
    }
}

/// Position of a string in [`pauli_basis`].
pub fn pauli_index(label: &[Pauli]) -> Result<usize> {
    Ok(label.iter().fold(0, |acc, p| acc * 4 + *p as usize))
}

/// `t`-fold superoperator of a noise model and its Pauli-basis transfer `R^{⊗t}`.
pub fn noise_model_super(m: &NoiseModel, t: usize) -> Result<(SuperOperator, TransferMatrix)> {
    m.validate()?;
    let single = m.to_super();
    let sup = single.tensor_power(t)?;
    let r = m.ptm();
    let mut tau = DMatrix::from_element(1, 1, 1.0);
    for _ in 0..t {
        tau = tau.kronecker(&r);
    }
    let d = m.d() as u64;
    let spec = EnsembleSpec { kind: EnsembleKind::Fixed { d, label: "noise".into() }, t, k: 1 };
    Ok((sup, TransferMatrix::float(tau, BasisTag::pauli(t, d), spec)))
}
