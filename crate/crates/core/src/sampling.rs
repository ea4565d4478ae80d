//! Random unitaries and channels.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

pub type CMatrix = DMatrix<Complex64>;

/// Number of independent streams a Monte-Carlo run is split into. Fixed, so
/// results do not depend on the thread count.
pub const STREAMS: u64 = 64;

/// Smallest accepted Monte-Carlo sample count.
pub const MIN_DRAWS: u64 = 100;

/// Generator for stream `index` of a run seeded with `seed`.
pub fn stream_rng(seed: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_add(index))
}

/// Haar-random unitary: QR of a complex Ginibre matrix with the phases of
/// `R`'s diagonal moved into `Q`.
pub fn haar_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    let z = CMatrix::from_fn(d, d, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    });
    let qr = z.qr();
    let (mut q, r) = qr.unpack();
    for j in 0..d {
        let rjj = r[(j, j)];
        let n = rjj.norm();
        let phase = if n > 0.0 { rjj / n } else { Complex64::new(1.0, 0.0) };
        for i in 0..d {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Kraus operators `(I ⊗ ⟨k|) U (I ⊗ |0⟩)` of a Haar-random Stinespring
/// dilation with a `d_env`-dimensional environment (system index major).
pub fn stinespring_kraus<R: Rng + ?Sized>(d: usize, d_env: usize, rng: &mut R) -> Vec<CMatrix> {
    let u = haar_unitary(d * d_env, rng);
    (0..d_env)
        .map(|k| CMatrix::from_fn(d, d, |s, s2| u[(s * d_env + k, s2 * d_env)]))
        .collect()
}

/// `Λ(ρ) = Σ K ρ K†`.
pub fn apply_kraus(kraus: &[CMatrix], rho: &CMatrix) -> CMatrix {
    kraus.iter().fold(CMatrix::zeros(rho.nrows(), rho.ncols()), |acc, k| acc + k * rho * k.adjoint())
}

/// Running first and second moments of a scalar estimator.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Moments {
    pub n: u64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    pub fn merge(self, o: Self) -> Self {
        Self { n: self.n + o.n, sum: self.sum + o.sum, sum_sq: self.sum_sq + o.sum_sq }
    }

    pub fn mean(&self) -> f64 {
        self.sum / self.n as f64
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        let n = self.n as f64;
        ((self.sum_sq - self.sum * self.sum / n) / (n - 1.0)).max(0.0)
    }

    pub fn std_error(&self) -> f64 {
        (self.variance() / self.n as f64).sqrt()
    }
}

/// Runs `samples` draws of `f` split over [`STREAMS`] seeded streams.
pub fn parallel_moments<F>(samples: u64, seed: u64, f: F) -> Moments
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    let per = samples / STREAMS;
    let extra = samples % STREAMS;
    let parts: Vec<Moments> = (0..STREAMS)
        .into_par_iter()
        .map(|s| {
            let count = per + u64::from(s < extra);
            let mut rng = stream_rng(seed, s);
            let mut m = Moments::default();
            for _ in 0..count {
                m.push(f(&mut rng));
            }
            m
        })
        .collect();
    parts.into_iter().fold(Moments::default(), Moments::merge)
}

/// Collects `samples` draws of `f` over [`STREAMS`] seeded streams, in stream order.
pub fn parallel_draws<F>(samples: u64, seed: u64, f: F) -> Vec<f64>
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    let per = samples / STREAMS;
    let extra = samples % STREAMS;
    let parts: Vec<Vec<f64>> = (0..STREAMS)
        .into_par_iter()
        .map(|s| {
            let mut rng = stream_rng(seed, s);
            (0..per + u64::from(s < extra)).map(|_| f(&mut rng)).collect()
        })
        .collect();
    parts.concat()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sampled_unitary_is_unitary() {
        let mut rng = stream_rng(3, 0);
        let u = haar_unitary(5, &mut rng);
        let err = (u.adjoint() * &u - CMatrix::identity(5, 5)).norm();
        assert!(err < 1e-12);
    }

    #[test]
    fn stinespring_is_trace_preserving() {
        let mut rng = stream_rng(9, 1);
        let ks = stinespring_kraus(3, 4, &mut rng);
        let s = ks.iter().fold(CMatrix::zeros(3, 3), |a, k| a + k.adjoint() * k);
        assert!((s - CMatrix::identity(3, 3)).norm() < 1e-12);
    }

    #[test]
    fn stream_split_is_thread_independent() {
        let f = |r: &mut ChaCha8Rng| r.random::<f64>();
        let a = parallel_moments(1000, 5, f);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| parallel_moments(1000, 5, f));
        assert_eq!(a, b);
    }
}
