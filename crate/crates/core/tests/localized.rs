use channel_moments::localized::{
    gram_for_basis, is_block_diagonal_by_support, is_block_lower_triangular_by_support, localized_gram, phi_inverse,
    phi_matrix, scaling_exponents, to_localized, to_permutation, EnvRule, Exponent, ScalingTarget,
};
use channel_moments::moments::{concatenate, norm_squared, transfer};
use channel_moments::symmgroup::{compose, enumerate_subpermutations, is_subpermutation, mobius, SymmetricGroup};
use channel_moments::{BasisKind, EnsembleSpec, ExactMatrix, Rational};
use num_bigint::BigInt;
use num_traits::{One, Pow, Zero};
use proptest::prelude::*;

fn rat(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}

fn pow(d: u64, e: i64) -> Rational {
    Rational::from_integer(BigInt::from(d)).pow(e as i32)
}

fn exact(spec: &EnsembleSpec, basis: BasisKind) -> ExactMatrix {
    transfer(spec, basis, true).unwrap().exact_entries().unwrap().clone()
}

fn transpositions(g: &SymmetricGroup) -> Vec<usize> {
    (0..g.len()).filter(|&i| g.size(i) == 1).collect()
}

fn derangements(l: u64) -> u64 {
    let (mut prev, mut cur) = (1u64, 0u64);
    if l == 0 {
        return 1;
    }
    for n in 2..=l {
        (prev, cur) = (cur, (n - 1) * (prev + cur));
    }
    cur
}

#[test]
fn phi_examples() {
    assert_eq!(
        phi_matrix(2).unwrap(),
        ExactMatrix::from_rows(vec![vec![rat(1, 1), rat(0, 1)], vec![rat(-1, 1), rat(1, 1)]]).unwrap()
    );
    assert_eq!(
        phi_inverse(2).unwrap(),
        ExactMatrix::from_rows(vec![vec![rat(1, 1), rat(0, 1)], vec![rat(1, 1), rat(1, 1)]]).unwrap()
    );
    let g = SymmetricGroup::new(3).unwrap();
    let phi = phi_matrix(3).unwrap();
    for c in (0..g.len()).filter(|&i| g.size(i) == 2) {
        assert_eq!(phi.get(c, 0), &rat(2, 1));
    }
    let zeta = phi_inverse(4).unwrap();
    assert!((0..zeta.rows()).all(|i| zeta.get(i, 0).is_one()));
}

#[test]
fn phi_is_the_mobius_inverse_of_zeta() {
    for t in 1..=6 {
        let (phi, zeta) = (phi_matrix(t).unwrap(), phi_inverse(t).unwrap());
        assert!((&phi * &zeta).is_identity());
        assert!((&zeta * &phi).is_identity());
        // Supported on the sub-permutation relation, unit diagonal, integer entries.
        let g = SymmetricGroup::new(t).unwrap();
        for i in 0..phi.rows() {
            assert!(phi.get(i, i).is_one());
            for j in 0..phi.cols() {
                if !is_subpermutation(g.get(j), g.get(i)) {
                    assert!(phi.get(i, j).is_zero());
                }
            }
        }
        assert!(phi.entries().iter().all(|x| x.is_integer()));
    }
}

/// `Σ_{η⊆σ, κ⊆π} μ(η⁻¹σ) μ(κ⁻¹π) d^{|η|+|κ|-|η⁻¹κ|}` by direct enumeration.
fn localized_gram_oracle(t: usize, d: u64) -> ExactMatrix {
    let g = SymmetricGroup::new(t).unwrap();
    ExactMatrix::from_fn(g.len(), g.len(), |i, j| {
        let (s, p) = (g.get(i), g.get(j));
        let mut acc = Rational::zero();
        for eta in enumerate_subpermutations(s) {
            for kappa in enumerate_subpermutations(p) {
                let m = mobius(&compose(&eta.inverse(), s).unwrap()) * mobius(&compose(&kappa.inverse(), p).unwrap());
                let e = eta.size() as i64 + kappa.size() as i64 - compose(&eta.inverse(), &kappa).unwrap().size() as i64;
                acc += rat(m, 1) * pow(d, e);
            }
        }
        acc
    })
}

#[test]
fn localized_gram_matches_direct_sum() {
    for t in 1..=3 {
        for d in 2..=4 {
            assert_eq!(localized_gram(t, d).unwrap(), localized_gram_oracle(t, d), "t={t} d={d}");
        }
    }
}

#[test]
fn localized_gram_examples() {
    for d in [2u64, 3, 5] {
        let l = localized_gram(3, d).unwrap();
        let g = SymmetricGroup::new(3).unwrap();
        assert!(l.get(0, 0).is_one());
        let dd = (d * d) as i64;
        for &a in &transpositions(&g) {
            for &b in &transpositions(&g) {
                let expect = if a == b { rat(dd - 1, 1) } else { rat(0, 1) };
                assert_eq!(l.get(a, b), &expect);
            }
        }
    }
}

#[test]
fn localized_gram_is_orthogonal_by_support() {
    for t in 1..=5 {
        let g = SymmetricGroup::new(t).unwrap();
        for d in [8u64, 16] {
            assert!(is_block_diagonal_by_support(&localized_gram(t, d).unwrap(), &g), "t={t} d={d}");
        }
    }
}

#[test]
fn support_blocks_have_derangement_sizes() {
    for t in 1..=6usize {
        let g = SymmetricGroup::new(t).unwrap();
        let mut blocks = std::collections::BTreeMap::<u64, u64>::new();
        for i in 0..g.len() {
            *blocks.entry(g.support_mask(i)).or_default() += 1;
        }
        let mut total = 0;
        for (mask, count) in &blocks {
            assert_eq!(*count, derangements(mask.count_ones() as u64));
        }
        for l in 0..=t as u64 {
            let binom = (0..l).fold(1u64, |acc, i| acc * (t as u64 - i) / (i + 1));
            total += binom * derangements(l);
        }
        assert_eq!(total, g.len() as u64);
    }
}

#[test]
fn haar_localized_examples() {
    for d in [3u64, 4, 6] {
        let h = exact(&EnsembleSpec::haar(3, d), BasisKind::Localized);
        let g = SymmetricGroup::new(3).unwrap();
        for i in 0..g.len() {
            assert_eq!(h.get(i, 0), &rat(i64::from(i == 0), 1));
        }
        let dd = (d * d) as i64;
        for &a in &transpositions(&g) {
            for &b in &transpositions(&g) {
                let expect = if a == b { rat(1, dd - 1) } else { rat(0, 1) };
                assert_eq!(h.get(a, b), &expect);
            }
        }
        assert!(is_block_diagonal_by_support(&h, &g));
    }
}

#[test]
fn chaar_localized_examples() {
    for (d, de) in [(2i64, 2i64), (3, 2), (2, 5)] {
        let c = exact(&EnsembleSpec::chaar(3, d as u64, de as u64), BasisKind::Localized);
        let g = SymmetricGroup::new(3).unwrap();
        let den = d * d * de * de - 1;
        assert!(c.get(0, 0).is_one());
        for &a in &transpositions(&g) {
            assert_eq!(c.get(a, 0), &rat(de - 1, den));
            for &b in &transpositions(&g) {
                let expect = if a == b { rat(de, den) } else { rat(0, 1) };
                assert_eq!(c.get(a, b), &expect);
            }
        }
    }
}

#[test]
fn chaar_localized_is_block_lower_triangular() {
    for t in 1..=4usize {
        let g = SymmetricGroup::new(t).unwrap();
        for (d, de) in [(2u64, 2u64), (3, 1), (2, 3), (4, 4)] {
            if d * de < t as u64 {
                continue;
            }
            let c = exact(&EnsembleSpec::chaar(t, d, de), BasisKind::Localized);
            assert!(is_block_lower_triangular_by_support(&c, &g), "t={t} d={d} dE={de}");
        }
    }
}

#[test]
fn haar_localized_is_concatenation_invariant() {
    for t in 1..=4usize {
        let d = t as u64 + 1;
        let tau = transfer(&EnsembleSpec::haar(t, d), BasisKind::Localized, true).unwrap();
        let gram = gram_for_basis(tau.basis, true).unwrap();
        for k in [2, 3] {
            let tk = concatenate(&tau, &gram, k).unwrap();
            assert_eq!(tk.exact_entries(), tau.exact_entries(), "t={t} k={k}");
        }
    }
}

#[test]
fn norms_agree_across_bases() {
    for t in 1..=3usize {
        for spec in [EnsembleSpec::haar(t, 3), EnsembleSpec::chaar(t, 2, 3), EnsembleSpec::depolarize(t, 2)] {
            let p = transfer(&spec, BasisKind::Permutation, true).unwrap();
            let l = to_localized(&p).unwrap();
            let np = norm_squared(&p, &gram_for_basis(p.basis, true).unwrap()).unwrap();
            let nl = norm_squared(&l, &gram_for_basis(l.basis, true).unwrap()).unwrap();
            assert_eq!(np, nl, "{}", spec.label());
        }
    }
}

#[test]
fn scaling_examples() {
    let h = scaling_exponents(ScalingTarget::Haar, 2, 1, (8, 16)).unwrap();
    assert_eq!(h[1][1], Exponent::Order(2));
    assert_eq!(h[0][1], Exponent::StructuralZero);
    let c = scaling_exponents(ScalingTarget::CHaar(EnvRule::Power(2)), 2, 1, (8, 16)).unwrap();
    assert_eq!(c[1][0], Exponent::Order(4));
    assert_eq!(c[0][0], Exponent::Order(0));
    assert_eq!(c[0][1], Exponent::StructuralZero);
}

#[test]
fn structural_zeros_follow_support_pattern() {
    for t in 2..=3usize {
        let g = SymmetricGroup::new(t).unwrap();
        for (target, allowed) in [
            (ScalingTarget::Haar, (|a: u64, b: u64| a == b) as fn(u64, u64) -> bool),
            (ScalingTarget::CHaar(EnvRule::Power(2)), |a: u64, b: u64| a & b == b),
        ] {
            let ex = scaling_exponents(target, t, 1, (8, 16)).unwrap();
            for i in 0..g.len() {
                for j in 0..g.len() {
                    let ok = allowed(g.support_mask(i), g.support_mask(j));
                    assert_eq!(ex[i][j] == Exponent::StructuralZero, !ok, "t={t} ({i},{j}) {:?}", ex[i][j]);
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]
    #[test]
    fn basis_transport_round_trips(t in 1usize..=3, d in 2u64..6, de in 1u64..5) {
        prop_assume!(d * de >= t as u64);
        let p = transfer(&EnsembleSpec::chaar(t, d, de), BasisKind::Permutation, true).unwrap();
        let back = to_permutation(&to_localized(&p).unwrap()).unwrap();
        prop_assert_eq!(back.exact_entries(), p.exact_entries());
    }
}
