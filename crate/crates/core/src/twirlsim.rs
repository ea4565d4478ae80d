//! Second moments of noisy layered circuits with uniformly random angles.
//!
//! Each gate is `exp(-iθG)` for a Pauli string `G` and `θ` uniform on
//! `[0, 2π]`. Averaging over `θ` is done in closed form on the two-copy state
//! `E[ρ ⊗ ρ]`, which stays a `d² × d²` matrix.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::channels::{pauli_string, standard_noise, KrausSet, NoiseKind, NoiseModel, Pauli, SuperOperator};
use crate::error::{Error, Result};
use crate::moments::{EnsembleKind, EnsembleSpec};
use crate::sampling::{haar_unitary, parallel_draws, stinespring_kraus, CMatrix, MIN_DRAWS};
use crate::symmgroup::SymmetricGroup;
use crate::weingarten::{gram_matrix_f64, weingarten_matrix_f64};

/// Default largest qubit count for two-copy evolution.
pub const DEFAULT_MAX_QUBITS: usize = 5;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Ansatz {
    /// Single-qubit X and Y rotations with nearest-neighbour ZZ.
    Hea,
    /// Single-qubit X rotations with nearest-neighbour ZZ.
    Mat,
}

impl fmt::Display for Ansatz {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Ansatz::Hea => "hea",
            Ansatz::Mat => "mat",
        })
    }
}

impl FromStr for Ansatz {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hea" => Ok(Ansatz::Hea),
            "mat" => Ok(Ansatz::Mat),
            other => Err(Error::InvalidParameter(format!("unknown ansatz '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum InitialState {
    /// `|0…0⟩`
    Zero,
    /// `|+…+⟩`
    Plus,
}

impl FromStr for InitialState {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "zero" | "0" => Ok(InitialState::Zero),
            "plus" | "+" => Ok(InitialState::Plus),
            other => Err(Error::InvalidParameter(format!("unknown initial state '{other}'"))),
        }
    }
}

/// Where the per-gate noise acts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum NoisePlacement {
    /// On the qubits the gate touches.
    TouchedQubits,
    /// On every qubit after every gate.
    FullRegister,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CircuitSpec {
    pub n: usize,
    pub ansatz: Ansatz,
    pub layers: usize,
    pub noise: NoiseKind,
    pub gamma: f64,
    pub initial: InitialState,
    pub placement: NoisePlacement,
}

impl CircuitSpec {
    /// Uses `|0…0⟩` for HEA, `|+…+⟩` for MAT, and noise on touched qubits.
    pub fn new(ansatz: Ansatz, n: usize, layers: usize, noise: NoiseKind, gamma: f64) -> Self {
        let initial = match ansatz {
            Ansatz::Hea => InitialState::Zero,
            Ansatz::Mat => InitialState::Plus,
        };
        Self { n, ansatz, layers, noise, gamma, initial, placement: NoisePlacement::TouchedQubits }
    }

    pub fn with_initial(mut self, initial: InitialState) -> Self {
        self.initial = initial;
        self
    }

    pub fn with_placement(mut self, placement: NoisePlacement) -> Self {
        self.placement = placement;
        self
    }

    pub fn label(&self) -> String {
        format!("{}-n{}-L{}-{}-{}", self.ansatz, self.n, self.layers, self.noise, self.gamma)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidParameter("need at least one qubit".into()));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::InvalidParameter(format!("noise strength {} outside [0, 1]", self.gamma)));
        }
        Ok(())
    }

    /// Generator strings of one layer, in application order.
    pub fn generators(&self) -> Vec<Vec<Pauli>> {
        let n = self.n;
        let single = |p: Pauli| {
            (0..n).map(move |i| {
                let mut v = vec![Pauli::I; n];
                v[i] = p;
                v
            })
        };
        let zz = (0..n.saturating_sub(1)).map(|i| {
            let mut v = vec![Pauli::I; n];
            v[i] = Pauli::Z;
            v[i + 1] = Pauli::Z;
            v
        });
        match self.ansatz {
            Ansatz::Hea => single(Pauli::X).chain(single(Pauli::Y)).chain(zz).collect(),
            Ansatz::Mat => single(Pauli::X).chain(zz).collect(),
        }
    }

    fn noisy_qubits(&self, g: &[Pauli]) -> Vec<usize> {
        match self.placement {
            NoisePlacement::TouchedQubits => (0..self.n).filter(|&i| g[i] != Pauli::I).collect(),
            NoisePlacement::FullRegister => (0..self.n).collect(),
        }
    }
}

/// Product state on `n` qubits.
pub fn initial_state(n: usize, state: InitialState) -> CMatrix {
    let one = match state {
        InitialState::Zero => CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, ZERO]),
        InitialState::Plus => CMatrix::from_element(2, 2, Complex64::new(0.5, 0.0)),
    };
    (0..n).fold(CMatrix::identity(1, 1), |acc, _| acc.kronecker(&one))
}

/// Pauli string as bit masks: `P|j⟩ = i^{nY} (-1)^{|j ∧ z|} |j ⊕ x⟩`,
/// with qubit 0 the most significant bit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PauliMask {
    pub qubits: usize,
    pub x: usize,
    pub z: usize,
    pub ny: u32,
}

impl PauliMask {
    pub fn new(labels: &[Pauli]) -> Self {
        let q = labels.len();
        let (mut x, mut z, mut ny) = (0, 0, 0);
        for (i, p) in labels.iter().enumerate() {
            let bit = 1 << (q - 1 - i);
            match p {
                Pauli::I => {}
                Pauli::X => x |= bit,
                Pauli::Y => {
                    x |= bit;
                    z |= bit;
                    ny += 1;
                }
                Pauli::Z => z |= bit,
            }
        }
        Self { qubits: q, x, z, ny }
    }

    pub fn identity(qubits: usize) -> Self {
        Self { qubits, x: 0, z: 0, ny: 0 }
    }

    /// `self ⊗ other`.
    pub fn tensor(&self, other: &Self) -> Self {
        Self {
            qubits: self.qubits + other.qubits,
            x: (self.x << other.qubits) | other.x,
            z: (self.z << other.qubits) | other.z,
            ny: self.ny + other.ny,
        }
    }

    /// `⟨j ⊕ x| P |j⟩`.
    pub fn coeff(&self, j: usize) -> Complex64 {
        let sign = if (j & self.z).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
        let phase = match self.ny % 4 {
            0 => ONE,
            1 => Complex64::new(0.0, 1.0),
            2 => -ONE,
            _ => Complex64::new(0.0, -1.0),
        };
        phase * sign
    }

    /// `A M B†` with `A = self`.
    pub fn sandwich(&self, m: &CMatrix, b: &PauliMask) -> CMatrix {
        CMatrix::from_fn(m.nrows(), m.ncols(), |r, c| {
            let (ra, cb) = (r ^ self.x, c ^ b.x);
            self.coeff(ra) * m[(ra, cb)] * b.coeff(cb).conj()
        })
    }
}

fn involution_check(g: &CMatrix) -> Result<()> {
    let n = g.nrows();
    if !g.is_square() || (g * g - CMatrix::identity(n, n)).camax() > 1e-12 {
        return Err(Error::NonInvolutory);
    }
    Ok(())
}

/// `E_θ e^{-iθG} X e^{iθG} = (X + GXG)/2`.
pub fn gate_twirl_t1(x: &CMatrix, g: &CMatrix) -> Result<CMatrix> {
    involution_check(g)?;
    Ok((x + g * x * g) * Complex64::new(0.5, 0.0))
}

/// Two-copy gate twirl
/// `3/8 (X + GG X GG) − 1/8 {GG, X} + 1/8 G₂ X G₂` with `GG = G⊗G`, `G₂ = G⊗I + I⊗G`.
pub fn gate_twirl_t2(x: &CMatrix, g: &CMatrix) -> Result<CMatrix> {
    involution_check(g)?;
    let d = g.nrows();
    if x.shape() != (d * d, d * d) {
        return Err(Error::DimensionMismatch(format!("two-copy operator must be {0}x{0}", d * d)));
    }
    let id = CMatrix::identity(d, d);
    let gg = g.kronecker(g);
    let g2 = g.kronecker(&id) + id.kronecker(g);
    let c = |v: f64| Complex64::new(v, 0.0);
    Ok((x + &gg * x * &gg) * c(0.375) - (&gg * x + x * &gg) * c(0.125) + &g2 * x * &g2 * c(0.125))
}

/// [`gate_twirl_t2`] for a Pauli string acting on a `2n`-qubit two-copy matrix.
pub fn gate_twirl_t2_pauli(m: &CMatrix, g: &PauliMask) -> CMatrix {
    let id = PauliMask::identity(g.qubits);
    let gg = g.tensor(g);
    let g1 = g.tensor(&id);
    let g2 = id.tensor(g);
    let e = id.tensor(&id);
    let dim = m.nrows();
    let masks = [e, gg, g1, g2];
    let coeffs: Vec<Vec<Complex64>> = masks.iter().map(|p| (0..dim).map(|j| p.coeff(j)).collect()).collect();
    // (left mask, right mask, weight)
    let terms: [(usize, usize, f64); 8] = [
        (0, 0, 0.375),
        (1, 1, 0.375),
        (1, 0, -0.125),
        (0, 1, -0.125),
        (2, 2, 0.125),
        (2, 3, 0.125),
        (3, 2, 0.125),
        (3, 3, 0.125),
    ];
    let src = m.as_slice();
    let mut out = vec![ZERO; dim * dim];
    out.par_chunks_mut(dim).enumerate().for_each(|(c, col)| {
        for (a, b, w) in terms {
            let cb = c ^ masks[b].x;
            let right = coeffs[b][cb].conj() * w;
            let scol = &src[cb * dim..(cb + 1) * dim];
            let (xa, ca) = (masks[a].x, &coeffs[a]);
            for (r, o) in col.iter_mut().enumerate() {
                let ra = r ^ xa;
                *o += ca[ra] * scol[ra] * right;
            }
        }
    });
    CMatrix::from_vec(dim, dim, out)
}

/// Average of `U^{⊗copies} X U^{⊗copies}†` over `points` equally spaced angles,
/// with `U = cos θ I − i sin θ G`.
pub fn twirl_quadrature(x: &CMatrix, g: &CMatrix, copies: usize, points: usize) -> CMatrix {
    let d = g.nrows();
    let id = CMatrix::identity(d, d);
    let mut acc = CMatrix::zeros(x.nrows(), x.ncols());
    for j in 0..points {
        let th = 2.0 * std::f64::consts::PI * j as f64 / points as f64;
        let u = &id * Complex64::new(th.cos(), 0.0) - g * Complex64::new(0.0, th.sin());
        let big = (0..copies).fold(CMatrix::identity(1, 1), |a, _| a.kronecker(&u));
        acc += &big * x * big.adjoint();
    }
    acc / Complex64::new(points as f64, 0.0)
}

/// `Σ K_q M K_q†` for Kraus operators acting on one qubit of a register of
/// `qubits` qubits.
pub fn apply_kraus_on_qubit(m: &CMatrix, qubits: usize, qubit: usize, kraus: &[CMatrix]) -> CMatrix {
    let bit = 1 << (qubits - 1 - qubit);
    let dim = m.nrows();
    let src = m.as_slice();
    let mut out = vec![ZERO; dim * dim];
    // Column pairs (c, c | bit) are independent under K · M · K†.
    let mut pairs: Vec<(usize, &mut [Complex64], &mut [Complex64])> = Vec::with_capacity(dim / 2);
    {
        let mut cols: Vec<Option<&mut [Complex64]>> = out.chunks_mut(dim).map(Some).collect();
        for c in (0..dim).filter(|c| c & bit == 0) {
            let lo = cols[c].take().expect("each column used once");
            let hi = cols[c | bit].take().expect("each column used once");
            pairs.push((c, lo, hi));
        }
    }
    pairs.into_par_iter().for_each(|(c, lo, hi)| {
        let c1 = c | bit;
        let (s0, s1) = (&src[c * dim..(c + 1) * dim], &src[c1 * dim..(c1 + 1) * dim]);
        let mut l0 = vec![ZERO; dim];
        let mut l1 = vec![ZERO; dim];
        for k in kraus {
            let (k00, k01, k10, k11) = (k[(0, 0)], k[(0, 1)], k[(1, 0)], k[(1, 1)]);
            for r in (0..dim).filter(|r| r & bit == 0) {
                let r1 = r | bit;
                l0[r] = k00 * s0[r] + k01 * s0[r1];
                l0[r1] = k10 * s0[r] + k11 * s0[r1];
                l1[r] = k00 * s1[r] + k01 * s1[r1];
                l1[r1] = k10 * s1[r] + k11 * s1[r1];
            }
            let (c00, c01, c10, c11) = (k00.conj(), k01.conj(), k10.conj(), k11.conj());
            for r in 0..dim {
                lo[r] += l0[r] * c00 + l1[r] * c01;
                hi[r] += l0[r] * c10 + l1[r] * c11;
            }
        }
    });
    CMatrix::from_vec(dim, dim, out)
}

/// `Σ_ab |M_ab|²`.
pub fn purity(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum()
}

/// Two-copy trajectory.
#[derive(Clone, Debug)]
pub struct Trajectory {
    /// Purity after each layer.
    pub purities: Vec<f64>,
    /// Final two-copy state.
    pub state: CMatrix,
}

pub fn evolve(spec: &CircuitSpec) -> Result<Trajectory> {
    evolve_with_cap(spec, DEFAULT_MAX_QUBITS)
}

pub fn evolve_with_cap(spec: &CircuitSpec, max_qubits: usize) -> Result<Trajectory> {
    spec.validate()?;
    if spec.n > max_qubits {
        return Err(Error::ResourceCap(format!("{} qubits exceeds the cap of {max_qubits}", spec.n)));
    }
    let n = spec.n;
    let kraus = standard_noise(spec.noise, spec.gamma)?;
    let noisy = spec.gamma > 0.0;
    let rho = initial_state(n, spec.initial);
    let mut m = rho.kronecker(&rho);
    let gens: Vec<(PauliMask, Vec<usize>)> =
        spec.generators().iter().map(|g| (PauliMask::new(g), spec.noisy_qubits(g))).collect();
    let mut purities = Vec::with_capacity(spec.layers);
    for _ in 0..spec.layers {
        for (g, qs) in &gens {
            m = gate_twirl_t2_pauli(&m, g);
            if noisy {
                for &q in qs {
                    m = apply_kraus_on_qubit(&m, 2 * n, q, kraus.ops());
                    m = apply_kraus_on_qubit(&m, 2 * n, n + q, kraus.ops());
                }
            }
        }
        purities.push(purity(&m));
    }
    Ok(Trajectory { purities, state: m })
}

/// `Tr[M (O ⊗ O)]` for the final two-copy state of a circuit.
pub fn circuit_second_moment(spec: &CircuitSpec, o: &CMatrix) -> Result<f64> {
    let m = evolve(spec)?.state;
    Ok((m * o.kronecker(o)).trace().re)
}

/// Swap of the two copies.
pub fn copy_swap(m: &CMatrix, qubits_per_copy: usize) -> CMatrix {
    let d = 1 << qubits_per_copy;
    let sw = |i: usize| (i % d) * d + i / d;
    CMatrix::from_fn(m.nrows(), m.ncols(), |r, c| m[(sw(r), sw(c))])
}

/// Purities of the averaged two-copy output of a pure input under the
/// reference ensembles.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ReferencePurities {
    pub haar: f64,
    pub chaar: f64,
    pub depolarize: f64,
}

/// Coefficients `(a, b)` of `E[Λ(ρ)^{⊗2}] = a I + b S` for the cHaar ensemble.
pub fn chaar_two_copy_coefficients(d: f64, d_env: f64, tr: f64, tr_sq: f64) -> (f64, f64) {
    let big = d * d_env;
    let pref = 1.0 / (d * d) / (1.0 - 1.0 / (big * big));
    let a = pref * (tr * tr - tr_sq / big);
    let b = pref / d_env * (tr_sq - tr * tr / big);
    (a, b)
}

pub fn reference_purities(n: usize, d_env: u64) -> ReferencePurities {
    let d = (1u64 << n) as f64;
    let (a, b) = chaar_two_copy_coefficients(d, d_env as f64, 1.0, 1.0);
    ReferencePurities {
        haar: 2.0 / (d * (d + 1.0)),
        chaar: a * a * d * d + 2.0 * a * b * d + b * b * d * d,
        depolarize: 1.0 / (d * d),
    }
}

/// Ensembles with closed-form second moments of expectation values.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum RefEnsemble {
    Haar,
    CHaar(u64),
    Depolarize,
}

/// Mean, second moment and variance of `Tr[Λ(ρ) O]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct VarianceReference {
    pub mean: f64,
    pub second_moment: f64,
    pub variance: f64,
}

pub fn variance_reference(rho: &CMatrix, o: &CMatrix, r: RefEnsemble) -> Result<VarianceReference> {
    if rho.shape() != o.shape() || !rho.is_square() {
        return Err(Error::DimensionMismatch("state and observable must be square and equal".into()));
    }
    let d = rho.nrows() as f64;
    let tr = rho.trace().re;
    let tr_sq = (rho * rho).trace().re;
    let tr_o = o.trace().re;
    let tr_o2 = (o * o).trace().re;
    let mean = tr * tr_o / d;
    match r {
        RefEnsemble::Depolarize => Ok(VarianceReference { mean, second_moment: mean * mean, variance: 0.0 }),
        RefEnsemble::Haar | RefEnsemble::CHaar(_) => {
            let de = if let RefEnsemble::CHaar(e) = r { e as f64 } else { 1.0 };
            if d * de < 2.0 {
                return Err(Error::SingularGram { t: 2, d: (d * de) as usize });
            }
            let (a, b) = chaar_two_copy_coefficients(d, de, tr, tr_sq);
            let second = a * tr_o * tr_o + b * tr_o2;
            Ok(VarianceReference { mean, second_moment: second, variance: second - mean * mean })
        }
    }
}

/// Sample statistics of `Tr[Λ(ρ) O]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct McMoments {
    pub samples: u64,
    pub mean: f64,
    pub mean_se: f64,
    pub second_moment: f64,
    pub second_moment_se: f64,
    pub variance: f64,
    pub variance_se: f64,
}

impl McMoments {
    fn from_draws(x: &[f64]) -> Self {
        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        let c2 = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>();
        let c4 = x.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / n;
        let variance = c2 / (n - 1.0);
        let sq: Vec<f64> = x.iter().map(|v| v * v).collect();
        let second = sq.iter().sum::<f64>() / n;
        let sq_var = sq.iter().map(|v| (v - second).powi(2)).sum::<f64>() / (n - 1.0);
        Self {
            samples: x.len() as u64,
            mean,
            mean_se: (variance / n).sqrt(),
            second_moment: second,
            second_moment_se: (sq_var / n).sqrt(),
            variance,
            variance_se: ((c4 - (c2 / n).powi(2)).max(0.0) / n).sqrt(),
        }
    }
}

/// Single-copy density-matrix run of a circuit with random angles.
fn sample_circuit<R: Rng + ?Sized>(spec: &CircuitSpec, gens: &[(PauliMask, Vec<usize>)], kraus: &KrausSet, rho: &CMatrix, rng: &mut R) -> CMatrix {
    let mut m = rho.clone();
    let noisy = spec.gamma > 0.0;
    for _ in 0..spec.layers {
        for (g, qs) in gens {
            let th = rng.random::<f64>() * 2.0 * std::f64::consts::PI;
            let (c, s) = (th.cos(), th.sin());
            let gm = g.sandwich(&m, &PauliMask::identity(g.qubits));
            let mg = PauliMask::identity(g.qubits).sandwich(&m, g);
            let gmg = g.sandwich(&m, g);
            m = &m * Complex64::new(c * c, 0.0) + (mg - gm) * Complex64::new(0.0, c * s) + gmg * Complex64::new(s * s, 0.0);
            if noisy {
                for &q in qs {
                    m = apply_kraus_on_qubit(&m, spec.n, q, kraus.ops());
                }
            }
        }
    }
    m
}

pub fn mc_expectation_moments(
    spec: &EnsembleSpec,
    rho: &CMatrix,
    o: &CMatrix,
    samples: u64,
    seed: u64,
) -> Result<McMoments> {
    spec.validate()?;
    if samples < MIN_DRAWS {
        return Err(Error::InvalidParameter(format!("need at least {MIN_DRAWS} samples, got {samples}")));
    }
    let d = spec.d() as usize;
    if rho.shape() != (d, d) || o.shape() != (d, d) {
        return Err(Error::DimensionMismatch(format!("state and observable must be {d}x{d}")));
    }
    let ev = |out: &CMatrix| (out * o).trace().re;
    let draws = match &spec.kind {
        EnsembleKind::Depolarize { .. } => {
            let v = rho.trace().re * o.trace().re / d as f64;
            return Ok(McMoments {
                samples,
                mean: v,
                mean_se: 0.0,
                second_moment: v * v,
                second_moment_se: 0.0,
                variance: 0.0,
                variance_se: 0.0,
            });
        }
        EnsembleKind::Haar { .. } => parallel_draws(samples, seed, |rng| {
            let u = haar_unitary(d, rng);
            ev(&(&u * rho * u.adjoint()))
        }),
        EnsembleKind::CHaar { d_env, .. } => {
            let de = *d_env as usize;
            if d * de > 256 {
                return Err(Error::ResourceCap(format!("d·dE = {} exceeds 256", d * de)));
            }
            parallel_draws(samples, seed, |rng| ev(&crate::sampling::apply_kraus(&stinespring_kraus(d, de, rng), rho)))
        }
        EnsembleKind::NoisyCircuit(c) => {
            c.validate()?;
            let kraus = standard_noise(c.noise, c.gamma)?;
            let gens: Vec<(PauliMask, Vec<usize>)> =
                c.generators().iter().map(|g| (PauliMask::new(g), c.noisy_qubits(g))).collect();
            parallel_draws(samples, seed, |rng| ev(&sample_circuit(c, &gens, &kraus, rho, rng)))
        }
        EnsembleKind::Fixed { .. } => {
            return Err(Error::Unsupported(format!("sampling {}", spec.label())));
        }
    };
    Ok(McMoments::from_draws(&draws))
}

/// Unitary part of a composite noise-then-twirl channel.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum CompositeEnsemble {
    HaarUnitaries,
    /// `exp(-iθG)` with uniform `θ` for one Pauli string `G`.
    SingleGenerator(Vec<Pauli>),
}

/// Largest superoperator side used by [`composite_noise_norm`].
pub const COMPOSITE_MAX_DIM: usize = 4096;

/// `‖(N̂^{⊗t} T)^k‖²_HS` for a noise model `N` following a twirl `T`.
pub fn composite_noise_norm(ensemble: &CompositeEnsemble, noise: &NoiseModel, t: usize, k: usize) -> Result<f64> {
    if k == 0 || t == 0 {
        return Err(Error::InvalidParameter("t and k must be at least 1".into()));
    }
    let d = noise.d();
    let side = d.checked_pow(2 * t as u32).filter(|s| *s <= COMPOSITE_MAX_DIM);
    let side = side.ok_or_else(|| Error::ResourceCap(format!("d^(2t) with d={d}, t={t} exceeds {COMPOSITE_MAX_DIM}")))?;
    noise.validate()?;
    let nt = noise.to_super().tensor_power(t)?;
    match ensemble {
        CompositeEnsemble::HaarUnitaries => haar_composite(&nt, d, t, k),
        CompositeEnsemble::SingleGenerator(labels) => {
            if t > 2 {
                return Err(Error::Unsupported(format!("single-generator twirl at t = {t}")));
            }
            if labels.len() != noise.n {
                return Err(Error::DimensionMismatch("generator and noise act on different qubit counts".into()));
            }
            let g = pauli_string(labels);
            let big = d.pow(t as u32);
            let mut tw = CMatrix::zeros(side, side);
            for col in 0..side {
                let mut e = CMatrix::zeros(big, big);
                e[(col / big, col % big)] = ONE;
                let img = if t == 1 { gate_twirl_t1(&e, &g)? } else { gate_twirl_t2(&e, &g)? };
                for row in 0..side {
                    tw[(row, col)] = img[(row / big, row % big)];
                }
            }
            let step = &nt.matrix * tw;
            let mut acc = step.clone();
            for _ in 1..k {
                acc = &acc * &step;
            }
            Ok(acc.iter().map(|z| z.norm_sqr()).sum())
        }
    }
}

/// Permutation operator `|i₀…i_{t−1}⟩ ↦ |i_{σ(0)}…i_{σ(t−1)}⟩`, vectorized.
fn permutation_vector(g: &SymmetricGroup, s: usize, d: usize) -> nalgebra::DVector<Complex64> {
    let t = g.t();
    let big = d.pow(t as u32);
    let p = g.get(s);
    let digits = |mut v: usize| {
        let mut out = vec![0; t];
        for j in (0..t).rev() {
            out[j] = v % d;
            v /= d;
        }
        out
    };
    let mut vec = nalgebra::DVector::from_element(big * big, ZERO);
    for input in 0..big {
        let di = digits(input);
        let out = (0..t).fold(0, |acc, j| acc * d + di[p.apply(j)]);
        vec[out * big + input] = ONE;
    }
    vec
}

fn haar_composite(nt: &SuperOperator, d: usize, t: usize, k: usize) -> Result<f64> {
    let g = SymmetricGroup::new(t)?;
    let tau = weingarten_matrix_f64(&g, d as f64)?.map(|v| Complex64::new(v, 0.0));
    let x = gram_matrix_f64(&g, d as f64).map(|v| Complex64::new(v, 0.0));
    let norm = Complex64::new((d as f64).powi(t as i32), 0.0);
    let r: Vec<_> = (0..g.len()).map(|s| permutation_vector(&g, s, d)).collect();
    let nr: Vec<_> = r.iter().map(|v| &nt.matrix * v).collect();
    let n = g.len();
    let y = CMatrix::from_fn(n, n, |i, j| r[i].dotc(&nr[j]) / norm);
    let z = CMatrix::from_fn(n, n, |i, j| nr[i].dotc(&nr[j]) / norm);
    let step = &y * &tau;
    let mut c = tau.clone();
    for _ in 1..k {
        c = &c * &step;
    }
    Ok((c.adjoint() * z * c * x).trace().re)
}

/// Dense Haar moment operator `d^{-t} Σ Wg(σ,π) |R_σ⟩⟩⟨⟨R_π|`.
pub fn haar_moment_dense(d: usize, t: usize) -> Result<CMatrix> {
    let g = SymmetricGroup::new(t)?;
    let w = weingarten_matrix_f64(&g, d as f64)?;
    let r: Vec<_> = (0..g.len()).map(|s| permutation_vector(&g, s, d)).collect();
    let side = r[0].len();
    let mut m = CMatrix::zeros(side, side);
    for i in 0..g.len() {
        for j in 0..g.len() {
            m += (&r[i] * r[j].adjoint()) * Complex64::new(w[(i, j)], 0.0);
        }
    }
    Ok(m / Complex64::new((d as f64).powi(t as i32), 0.0))
}

/// Real part helper for reporting.
pub fn real_part(m: &CMatrix) -> DMatrix<f64> {
    m.map(|z| z.re)
}
