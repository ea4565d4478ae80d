//! Permutations of `t` tensor factors.
//!
//! A [`Permutation`] stores its image sequence; composition follows
//! `compose(a, b)[i] = a[b[i]]` (apply `b` first). The size `|σ|` is the
//! minimal number of transpositions, `t` minus the number of cycles.
//! Sub-permutations `π ⊆ σ` are the elements on a geodesic from the identity
//! to `σ`, i.e. `|π| + |π⁻¹σ| = |σ|`.

use std::collections::HashMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::Rational;

/// Default upper bound on `t`.
pub const DEFAULT_MAX_T: usize = 6;

/// Environment variable overriding [`DEFAULT_MAX_T`].
pub const MAX_T_ENV: &str = "CHANNEL_MOMENTS_MAX_T";

/// Current cap on `t`, honouring the environment override.
pub fn max_t() -> usize {
    std::env::var(MAX_T_ENV)
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|&v| v >= 1)
        .unwrap_or(DEFAULT_MAX_T)
}

/// A bijection on `{0, …, t-1}`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation {
    images: Vec<u8>,
}

/// A non-trivial cyclic factor, listed so that `indices[i] ↦ indices[i+1]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Cycle {
    pub indices: Vec<usize>,
}

impl Cycle {
    /// Cycle size: length minus one.
    pub fn size(&self) -> usize {
        self.indices.len() - 1
    }
}

impl Permutation {
    pub fn new(images: Vec<usize>) -> Result<Self> {
        let t = images.len();
        if t > u8::MAX as usize {
            return Err(Error::InvalidPermutation(format!("order {t} too large")));
        }
        let mut seen = vec![false; t];
        for &x in &images {
            if x >= t || seen[x] {
                return Err(Error::InvalidPermutation(format!("{images:?} is not a bijection")));
            }
            seen[x] = true;
        }
        Ok(Self { images: images.into_iter().map(|x| x as u8).collect() })
    }

    pub fn identity(t: usize) -> Self {
        Self { images: (0..t as u8).collect() }
    }

    pub fn transposition(t: usize, a: usize, b: usize) -> Result<Self> {
        Self::from_cycles(t, &[vec![a, b]])
    }

    /// Builds a permutation from disjoint cycles in arrow notation.
    pub fn from_cycles(t: usize, cycles: &[Vec<usize>]) -> Result<Self> {
        let mut images: Vec<usize> = (0..t).collect();
        let mut used = vec![false; t];
        for c in cycles {
            for (i, &x) in c.iter().enumerate() {
                if x >= t || used[x] {
                    return Err(Error::InvalidPermutation(format!("bad cycle list {cycles:?}")));
                }
                used[x] = true;
                images[x] = c[(i + 1) % c.len()];
            }
        }
        Self::new(images)
    }

    pub fn order(&self) -> usize {
        self.images.len()
    }

    pub fn apply(&self, i: usize) -> usize {
        self.images[i] as usize
    }

    pub fn images(&self) -> Vec<usize> {
        self.images.iter().map(|&x| x as usize).collect()
    }

    pub fn is_identity(&self) -> bool {
        self.images.iter().enumerate().all(|(i, &x)| i == x as usize)
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0u8; self.images.len()];
        for (i, &x) in self.images.iter().enumerate() {
            inv[x as usize] = i as u8;
        }
        Self { images: inv }
    }

    /// Non-trivial cycles, each starting at its smallest element, ordered by that element.
    pub fn cycles(&self) -> Vec<Cycle> {
        let t = self.order();
        let mut seen = vec![false; t];
        let mut out = Vec::new();
        for start in 0..t {
            if seen[start] {
                continue;
            }
            let mut c = vec![start];
            seen[start] = true;
            let mut x = self.apply(start);
            while x != start {
                seen[x] = true;
                c.push(x);
                x = self.apply(x);
            }
            if c.len() > 1 {
                out.push(Cycle { indices: c });
            }
        }
        out
    }

    /// Number of cycles, fixed points included.
    pub fn cycle_count(&self) -> usize {
        let fixed = self.images.iter().enumerate().filter(|(i, &x)| *i == x as usize).count();
        fixed + self.cycles().len()
    }

    /// Minimal number of transpositions.
    pub fn size(&self) -> usize {
        self.order() - self.cycle_count()
    }

    /// Moved points, as a bitmask over `[t]`.
    pub fn support_mask(&self) -> u64 {
        self.images
            .iter()
            .enumerate()
            .filter(|(i, &x)| *i != x as usize)
            .fold(0u64, |m, (i, _)| m | (1 << i))
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.order()).filter(|&i| self.apply(i) != i).collect()
    }

    /// Ordering key: support popcount, support mask, then images.
    pub fn canonical_key(&self) -> (u32, u64, Vec<u8>) {
        let m = self.support_mask();
        (m.count_ones(), m, self.images.clone())
    }
}

impl fmt::Debug for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Permutation {
    /// Cycle notation, `e` for the identity, e.g. `(01)(234)`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cycles = self.cycles();
        if cycles.is_empty() {
            return write!(f, "e");
        }
        let sep = if self.order() > 10 { "," } else { "" };
        for c in cycles {
            let parts: Vec<String> = c.indices.iter().map(|x| x.to_string()).collect();
            write!(f, "({})", parts.join(sep))?;
        }
        Ok(())
    }
}

/// `compose(a, b)[i] = a[b[i]]`.
pub fn compose(a: &Permutation, b: &Permutation) -> Result<Permutation> {
    if a.order() != b.order() {
        return Err(Error::OrderMismatch { left: a.order(), right: b.order() });
    }
    Ok(Permutation { images: b.images.iter().map(|&i| a.images[i as usize]).collect() })
}

pub fn size(p: &Permutation) -> usize {
    p.size()
}

pub fn support(p: &Permutation) -> Vec<usize> {
    p.support()
}

/// `π ⊆ σ` iff `|π⁻¹σ| = |σ| - |π|`. Mismatched orders are never related.
pub fn is_subpermutation(pi: &Permutation, sigma: &Permutation) -> bool {
    match compose(&pi.inverse(), sigma) {
        Ok(q) => pi.size() <= sigma.size() && q.size() == sigma.size() - pi.size(),
        Err(_) => false,
    }
}

/// Non-crossing partitions of `0..n`, blocks listed in increasing order.
pub fn non_crossing_partitions(n: usize) -> Vec<Vec<Vec<usize>>> {
    let seq: Vec<usize> = (0..n).collect();
    ncp(&seq)
}

fn ncp(seq: &[usize]) -> Vec<Vec<Vec<usize>>> {
    if seq.is_empty() {
        return vec![Vec::new()];
    }
    let rest = &seq[1..];
    let mut out = Vec::new();
    // Choose which later elements share the block of seq[0]; the gaps between
    // chosen elements are partitioned independently.
    for mask in 0u64..(1u64 << rest.len()) {
        let chosen: Vec<usize> = (0..rest.len()).filter(|&j| mask >> j & 1 == 1).collect();
        let mut block = vec![seq[0]];
        block.extend(chosen.iter().map(|&j| rest[j]));
        let mut segments: Vec<&[usize]> = Vec::new();
        let mut lo = 0;
        for &j in &chosen {
            segments.push(&rest[lo..j]);
            lo = j + 1;
        }
        segments.push(&rest[lo..]);
        let mut partial: Vec<Vec<Vec<usize>>> = vec![vec![block]];
        for seg in segments {
            let parts = ncp(seg);
            let mut next = Vec::with_capacity(partial.len() * parts.len());
            for p in &partial {
                for q in &parts {
                    let mut r = p.clone();
                    r.extend(q.iter().cloned());
                    next.push(r);
                }
            }
            partial = next;
        }
        out.extend(partial);
    }
    out
}

/// All `π ⊆ σ`, built per cycle from non-crossing partitions of the cycle sequence.
pub fn enumerate_subpermutations(sigma: &Permutation) -> Vec<Permutation> {
    let t = sigma.order();
    let mut acc: Vec<Vec<u8>> = vec![(0..t as u8).collect()];
    for cycle in sigma.cycles() {
        let l = cycle.indices.len();
        let parts = non_crossing_partitions(l);
        let mut next = Vec::with_capacity(acc.len() * parts.len());
        for base in &acc {
            for part in &parts {
                let mut img = base.clone();
                for block in part {
                    for (i, &pos) in block.iter().enumerate() {
                        let from = cycle.indices[pos];
                        let to = cycle.indices[block[(i + 1) % block.len()]];
                        img[from] = to as u8;
                    }
                }
                next.push(img);
            }
        }
        acc = next;
    }
    acc.into_iter().map(|images| Permutation { images }).collect()
}

/// `C(2n, n) / (n + 1)`.
pub fn catalan(n: usize) -> u64 {
    let mut c: u64 = 1;
    for i in 0..n as u64 {
        c = c * 2 * (2 * i + 1) / (i + 2);
    }
    c
}

/// Möbius function of the sub-permutation lattice below `σ`:
/// `∏_λ (-1)^{|λ|} Catalan(|λ|)` over cycles.
pub fn mobius(sigma: &Permutation) -> i64 {
    sigma
        .cycles()
        .iter()
        .map(|c| {
            let s = c.size();
            let sign = if s % 2 == 0 { 1 } else { -1 };
            sign * catalan(s) as i64
        })
        .product()
}

/// Number of sub-permutations, `∏_λ Catalan(len λ)`.
pub fn subpermutation_count(sigma: &Permutation) -> u64 {
    sigma.cycles().iter().map(|c| catalan(c.indices.len())).product()
}

/// `χ_d(σ) = d^{-|σ|}`.
pub fn character(sigma: &Permutation, d: u64) -> Rational {
    inverse_power(d, sigma.size())
}

/// `χ_d(σ, π) = d^{-|σ⁻¹π|}`.
pub fn character_pair(sigma: &Permutation, pi: &Permutation, d: u64) -> Result<Rational> {
    Ok(inverse_power(d, compose(&sigma.inverse(), pi)?.size()))
}

pub(crate) fn inverse_power(d: u64, k: usize) -> Rational {
    Rational::new(BigInt::one(), BigInt::from(d).pow(k as u32))
}

pub fn factorial(n: usize) -> u64 {
    (1..=n as u64).product()
}

/// All of `S_t` in canonical order, with composition and lattice tables.
#[derive(Clone, Debug)]
pub struct SymmetricGroup {
    t: usize,
    elements: Vec<Permutation>,
    index: HashMap<Vec<u8>, usize>,
    sizes: Vec<usize>,
    masks: Vec<u64>,
    inverse: Vec<usize>,
    /// `sub[σ]` lists the indices of every `π ⊆ σ`.
    sub: Vec<Vec<usize>>,
}

impl SymmetricGroup {
    pub fn new(t: usize) -> Result<Self> {
        let cap = max_t();
        if t == 0 {
            return Err(Error::InvalidParameter("t must be at least 1".into()));
        }
        if t > cap {
            return Err(Error::OrderTooLarge { t, cap });
        }
        let mut elements = all_permutations(t);
        elements.sort_by_key(|p| p.canonical_key());
        let index: HashMap<Vec<u8>, usize> =
            elements.iter().enumerate().map(|(i, p)| (p.images.clone(), i)).collect();
        let sizes = elements.iter().map(|p| p.size()).collect();
        let masks = elements.iter().map(|p| p.support_mask()).collect();
        let inverse = elements.iter().map(|p| index[&p.inverse().images]).collect();
        let sub = elements
            .iter()
            .map(|p| {
                let mut v: Vec<usize> =
                    enumerate_subpermutations(p).iter().map(|q| index[&q.images]).collect();
                v.sort_unstable();
                v
            })
            .collect();
        Ok(Self { t, elements, index, sizes, masks, inverse, sub })
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[Permutation] {
        &self.elements
    }

    pub fn get(&self, i: usize) -> &Permutation {
        &self.elements[i]
    }

    pub fn index_of(&self, p: &Permutation) -> Option<usize> {
        self.index.get(&p.images).copied()
    }

    pub fn size(&self, i: usize) -> usize {
        self.sizes[i]
    }

    pub fn support_mask(&self, i: usize) -> u64 {
        self.masks[i]
    }

    pub fn inverse_index(&self, i: usize) -> usize {
        self.inverse[i]
    }

    /// Index of `elements[a] ∘ elements[b]`.
    pub fn compose_index(&self, a: usize, b: usize) -> usize {
        let pa = &self.elements[a].images;
        let img: Vec<u8> = self.elements[b].images.iter().map(|&i| pa[i as usize]).collect();
        self.index[&img]
    }

    /// `|σ⁻¹π|` for indices `σ`, `π`.
    pub fn distance(&self, s: usize, p: usize) -> usize {
        self.sizes[self.compose_index(self.inverse[s], p)]
    }

    /// Full table of `|σ⁻¹π|`.
    pub fn distance_table(&self) -> Vec<Vec<usize>> {
        (0..self.len()).map(|s| (0..self.len()).map(|p| self.distance(s, p)).collect()).collect()
    }

    pub fn subpermutations(&self, s: usize) -> &[usize] {
        &self.sub[s]
    }

    /// Möbius value `μ(π⁻¹σ)` for the pair.
    pub fn mobius_between(&self, pi: usize, sigma: usize) -> i64 {
        mobius(&self.elements[self.compose_index(self.inverse[pi], sigma)])
    }

    /// Labels in canonical order.
    pub fn labels(&self) -> Vec<String> {
        self.elements.iter().map(|p| p.to_string()).collect()
    }
}

fn all_permutations(t: usize) -> Vec<Permutation> {
    let mut out = Vec::new();
    let mut cur: Vec<u8> = (0..t as u8).collect();
    heap_permute(t, &mut cur, &mut out);
    out
}

fn heap_permute(k: usize, a: &mut Vec<u8>, out: &mut Vec<Permutation>) {
    if k <= 1 {
        out.push(Permutation { images: a.clone() });
        return;
    }
    for i in 0..k - 1 {
        heap_permute(k - 1, a, out);
        if k % 2 == 0 {
            a.swap(i, k - 1);
        } else {
            a.swap(0, k - 1);
        }
    }
    heap_permute(k - 1, a, out);
}

/// `Σ_{σ ∈ S_t} χ_d(σ)` by direct summation.
pub fn character_sum(group: &SymmetricGroup, d: u64) -> Rational {
    (0..group.len()).fold(Rational::zero(), |acc, i| acc + inverse_power(d, group.size(i)))
}
