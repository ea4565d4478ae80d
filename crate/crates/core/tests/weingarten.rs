use channel_moments::symmgroup::{compose, mobius, SymmetricGroup};
use channel_moments::weingarten::{
    character_sum_direct, chaar_transfer_perm, gram_matrix, haar_transfer_perm, jucys_murphy_sum, weingarten_matrix,
};
use channel_moments::{Error, ExactMatrix, Rational};
use num_bigint::BigInt;
use num_traits::{Pow, Signed, Zero};
use proptest::prelude::*;

fn rat(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}

fn mat(rows: &[&[Rational]]) -> ExactMatrix {
    ExactMatrix::from_rows(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
}

fn binomial(n: u64, k: u64) -> BigInt {
    (0..k).fold(BigInt::from(1), |acc, i| acc * BigInt::from(n - i) / BigInt::from(i + 1))
}

fn factorial(n: u64) -> BigInt {
    (1..=n).fold(BigInt::from(1), |acc, i| acc * BigInt::from(i))
}

#[test]
fn gram_examples() {
    assert_eq!(gram_matrix(1, 7).unwrap(), mat(&[&[rat(1, 1)]]));
    assert_eq!(gram_matrix(2, 2).unwrap(), mat(&[&[rat(1, 1), rat(1, 2)], &[rat(1, 2), rat(1, 1)]]));
    let g = SymmetricGroup::new(3).unwrap();
    let c = (0..g.len()).find(|&i| g.size(i) == 2).unwrap();
    assert_eq!(gram_matrix(3, 3).unwrap().get(0, c), &rat(1, 9));
}

#[test]
fn gram_is_symmetric_with_unit_diagonal() {
    for t in 1..=4 {
        let g = gram_matrix(t, 5).unwrap();
        assert_eq!(g, g.transpose());
        assert!((0..g.rows()).all(|i| g.get(i, i) == &rat(1, 1)));
    }
}

#[test]
fn weingarten_examples() {
    assert_eq!(weingarten_matrix(1, 3).unwrap(), mat(&[&[rat(1, 1)]]));
    assert_eq!(weingarten_matrix(2, 2).unwrap(), mat(&[&[rat(4, 3), rat(-2, 3)], &[rat(-2, 3), rat(4, 3)]]));
    for d in [3i64, 4] {
        // 2×2 inverse of [[1, 1/d], [1/d, 1]]
        let pre = rat(d * d, d * d - 1);
        let expect = mat(&[&[pre.clone(), -pre.clone() / rat(d, 1)], &[-pre.clone() / rat(d, 1), pre]]);
        assert_eq!(weingarten_matrix(2, d as u64).unwrap(), expect);
    }
}

#[test]
fn singular_gram_rejected() {
    assert!(matches!(weingarten_matrix(3, 2), Err(Error::SingularGram { .. })));
    assert!(matches!(chaar_transfer_perm(4, 1, 3), Err(Error::SingularGram { .. })));
}

#[test]
fn gram_times_weingarten_is_identity() {
    for t in 1..=5usize {
        for d in [t as u64, t as u64 + 1, 8] {
            let p = &gram_matrix(t, d).unwrap() * &weingarten_matrix(t, d).unwrap();
            assert!(p.is_identity(), "t={t} d={d}");
        }
    }
}

#[test]
fn leading_sign_follows_mobius() {
    for t in 1..=4 {
        let g = SymmetricGroup::new(t).unwrap();
        let wg = weingarten_matrix(t, 64).unwrap();
        for i in 0..g.len() {
            for j in 0..g.len() {
                let m = mobius(&compose(&g.get(i).inverse(), g.get(j)).unwrap());
                assert_eq!(wg.get(i, j).is_positive(), m > 0, "t={t} ({i},{j})");
            }
        }
    }
}

#[test]
fn jucys_murphy_examples() {
    assert_eq!(jucys_murphy_sum(1, 9), rat(1, 1));
    assert_eq!(jucys_murphy_sum(2, 2), rat(3, 2));
    assert_eq!(jucys_murphy_sum(3, 3), rat(20, 9));
}

#[test]
fn jucys_murphy_matches_direct_sum() {
    for t in 1..=6u64 {
        for d in 1..=16u64 {
            let closed = Rational::new(
                binomial(d + t - 1, t) * factorial(t),
                BigInt::from(d).pow(t as u32),
            );
            assert_eq!(jucys_murphy_sum(t as usize, d), closed);
            assert_eq!(character_sum_direct(t as usize, d).unwrap(), closed, "t={t} d={d}");
        }
    }
}

#[test]
fn haar_transfer_examples() {
    let h1 = haar_transfer_perm(1, 5).unwrap();
    assert_eq!(h1.exact_entries().unwrap(), &mat(&[&[rat(1, 1)]]));
    let h2 = haar_transfer_perm(2, 2).unwrap();
    assert_eq!(h2.exact_entries().unwrap(), &weingarten_matrix(2, 2).unwrap());
}

#[test]
fn haar_transfer_is_projector() {
    for (t, d) in [(2usize, 2u64), (3, 4), (4, 4)] {
        let tau = haar_transfer_perm(t, d).unwrap();
        let tau = tau.exact_entries().unwrap();
        let x = gram_matrix(t, d).unwrap();
        assert_eq!(&(tau * &x) * tau, *tau, "t={t} d={d}");
    }
}

#[test]
fn chaar_transfer_examples() {
    for t in 1..=3usize {
        let c = chaar_transfer_perm(t, 4, 1).unwrap();
        let h = haar_transfer_perm(t, 4).unwrap();
        assert_eq!(c.exact_entries(), h.exact_entries());
    }
    let c1 = chaar_transfer_perm(1, 3, 5).unwrap();
    assert_eq!(c1.exact_entries().unwrap(), &mat(&[&[rat(1, 1)]]));
}

#[test]
fn chaar_is_environment_weighted_weingarten() {
    for (t, d, de) in [(2usize, 2u64, 4u64), (3, 2, 3), (3, 3, 2)] {
        let g = SymmetricGroup::new(t).unwrap();
        let c = chaar_transfer_perm(t, d, de).unwrap();
        let c = c.exact_entries().unwrap();
        let wg = weingarten_matrix(t, d * de).unwrap();
        for i in 0..g.len() {
            for j in 0..g.len() {
                let weight = Rational::new(1.into(), BigInt::from(de).pow(g.size(i) as u32));
                assert_eq!(c.get(i, j), &(weight * wg.get(i, j)));
            }
        }
    }
}

#[test]
fn chaar_preserves_trace_through_identity_row() {
    // The identity row of X τ is the identity indicator.
    let (t, d, de) = (2usize, 2u64, 4u64);
    let c = chaar_transfer_perm(t, d, de).unwrap();
    let c = c.exact_entries().unwrap();
    let x = gram_matrix(t, d).unwrap();
    let row0: Vec<Rational> = (0..c.cols()).map(|j| (0..c.rows()).map(|i| x.get(0, i) * c.get(i, j)).sum()).collect();
    assert_eq!(row0[0], rat(1, 1));
    assert!(row0[1..].iter().all(Zero::is_zero));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn weingarten_is_symmetric_and_inverse(t in 1usize..=4, extra in 0u64..6) {
        let d = t as u64 + extra;
        let w = weingarten_matrix(t, d).unwrap();
        prop_assert_eq!(&w, &w.transpose());
        prop_assert!((&w * &gram_matrix(t, d).unwrap()).is_identity());
    }
}
