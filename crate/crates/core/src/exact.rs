//! Dense matrices over arbitrary-precision rationals.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::Rational;

/// Row-major dense rational matrix.
#[derive(Clone, PartialEq, Eq)]
pub struct ExactMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Rational>,
}

impl ExactMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![Rational::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { Rational::one() } else { Rational::zero() })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Rational) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: Vec<Vec<Rational>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |v| v.len());
        if rows.iter().any(|v| v.len() != c) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        Ok(Self { rows: r, cols: c, data: rows.into_iter().flatten().collect() })
    }

    /// Diagonal matrix from the given entries.
    pub fn diagonal(entries: &[Rational]) -> Self {
        let n = entries.len();
        Self::from_fn(n, n, |i, j| if i == j { entries[i].clone() } else { Rational::zero() })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &Rational {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Rational) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[Rational] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn entries(&self) -> &[Rational] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).clone())
    }

    pub fn trace(&self) -> Rational {
        (0..self.rows.min(self.cols)).fold(Rational::zero(), |acc, i| acc + self.get(i, i))
    }

    pub fn is_identity(&self) -> bool {
        self.is_square()
            && (0..self.rows).all(|i| {
                (0..self.cols).all(|j| {
                    let v = self.get(i, j);
                    if i == j {
                        v.is_one()
                    } else {
                        v.is_zero()
                    }
                })
            })
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|v| v.is_zero())
    }

    pub fn scale(&self, s: &Rational) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|v| v * s).collect() }
    }

    /// Sum of entrywise products, `Σ_ij A_ij B_ij`.
    pub fn frobenius_dot(&self, other: &Self) -> Rational {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "shape mismatch");
        common_denominator_sum(self.data.iter().zip(&other.data).map(|(a, b)| a * b))
    }

    /// Largest absolute entry, as a float.
    pub fn max_abs_f64(&self) -> f64 {
        self.data.iter().map(|v| v.abs().to_f64().unwrap_or(f64::INFINITY)).fold(0.0, f64::max)
    }

    pub fn to_f64(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| rational_to_f64(self.get(i, j)))
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        // Clear denominators per row of `self` and per column of `other`, so each
        // entry needs a single reduction.
        let (a_int, a_den) = integer_rows(self);
        let bt = other.transpose();
        let (b_int, b_den) = integer_rows(&bt);
        let data: Vec<Rational> = (0..self.rows)
            .into_par_iter()
            .flat_map_iter(|i| {
                let ai = &a_int[i];
                let b_int = &b_int;
                let a_den = &a_den;
                let b_den = &b_den;
                (0..other.cols).map(move |j| {
                    let bj = &b_int[j];
                    let mut s = BigInt::zero();
                    for (x, y) in ai.iter().zip(bj) {
                        if !x.is_zero() && !y.is_zero() {
                            s += x * y;
                        }
                    }
                    Rational::new(s, &a_den[i] * &b_den[j])
                })
            })
            .collect();
        Ok(Self { rows: self.rows, cols: other.cols, data })
    }

    /// Exact inverse by fraction-free Gauss-Jordan elimination.
    pub fn inverse(&self) -> Result<Self> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch("inverse of a non-square matrix".into()));
        }
        let n = self.rows;
        let (int_rows, row_den) = integer_rows(self);
        let w = 2 * n;
        let mut m: Vec<Vec<BigInt>> = int_rows
            .into_iter()
            .enumerate()
            .map(|(i, mut r)| {
                r.extend((0..n).map(|j| if i == j { BigInt::one() } else { BigInt::zero() }));
                r
            })
            .collect();
        let mut prev = BigInt::one();
        for k in 0..n {
            let piv = (k..n).find(|&r| !m[r][k].is_zero()).ok_or(Error::SingularMatrix)?;
            m.swap(k, piv);
            let pivot_row = m[k].clone();
            let pk = pivot_row[k].clone();
            m.par_iter_mut().enumerate().filter(|(i, _)| *i != k).for_each(|(_, row)| {
                let mik = row[k].clone();
                for j in 0..w {
                    let v = &pk * &row[j] - &mik * &pivot_row[j];
                    row[j] = if prev.is_one() { v } else { exact_div(v, &prev) };
                }
            });
            prev = pk;
        }
        // Left block is now diagonal: A'^{-1}(i, j) = right(i, j) / diag(i).
        // Undo row scaling: A^{-1} = A'^{-1} diag(row_den).
        let mut out = Self::zeros(n, n);
        for i in 0..n {
            let di = &m[i][i];
            for j in 0..n {
                let v = &m[i][n + j];
                if !v.is_zero() {
                    out.set(i, j, Rational::new(v * &row_den[j], di.clone()));
                }
            }
        }
        Ok(out)
    }

    /// `self^k` for `k >= 0`.
    pub fn pow(&self, k: u32) -> Self {
        assert!(self.is_square(), "power of a non-square matrix");
        let mut acc = Self::identity(self.rows);
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }
}

fn exact_div(v: BigInt, d: &BigInt) -> BigInt {
    let (q, r) = v.div_rem(d);
    debug_assert!(r.is_zero(), "fraction-free elimination produced a remainder");
    q
}

/// Rows scaled to integers, with the scaling denominators.
fn integer_rows(m: &ExactMatrix) -> (Vec<Vec<BigInt>>, Vec<BigInt>) {
    (0..m.rows)
        .map(|i| {
            let row = m.row(i);
            let den = row.iter().fold(BigInt::one(), |acc, v| acc.lcm(v.denom()));
            let ints = row.iter().map(|v| v.numer() * (&den / v.denom())).collect();
            (ints, den)
        })
        .unzip()
}

fn common_denominator_sum(it: impl Iterator<Item = Rational>) -> Rational {
    it.fold(Rational::zero(), |a, b| a + b)
}

pub fn rational_to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        if r.is_positive() {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        }
    })
}

impl Mul for &ExactMatrix {
    type Output = ExactMatrix;
    fn mul(self, rhs: &ExactMatrix) -> ExactMatrix {
        self.try_mul(rhs).expect("matrix shapes must agree")
    }
}

impl Add for &ExactMatrix {
    type Output = ExactMatrix;
    fn add(self, rhs: &ExactMatrix) -> ExactMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape mismatch");
        ExactMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ExactMatrix {
    type Output = ExactMatrix;
    fn sub(self, rhs: &ExactMatrix) -> ExactMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape mismatch");
        ExactMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Neg for &ExactMatrix {
    type Output = ExactMatrix;
    fn neg(self) -> ExactMatrix {
        ExactMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|a| -a).collect() }
    }
}

impl fmt::Debug for ExactMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ExactMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            let r: Vec<String> = self.row(i).iter().map(|v| v.to_string()).collect();
            writeln!(f, "  [{}]", r.join(", "))?;
        }
        write!(f, "]")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    #[test]
    fn two_by_two_inverse() {
        let m = ExactMatrix::from_rows(vec![vec![q(1, 1), q(1, 2)], vec![q(1, 2), q(1, 1)]]).unwrap();
        let inv = m.inverse().unwrap();
        assert_eq!(inv.get(0, 0), &q(4, 3));
        assert_eq!(inv.get(0, 1), &q(-2, 3));
        assert!((&m * &inv).is_identity());
    }

    #[test]
    fn singular_detected() {
        let m = ExactMatrix::from_rows(vec![vec![q(1, 1), q(2, 1)], vec![q(1, 2), q(1, 1)]]).unwrap();
        assert_eq!(m.inverse(), Err(Error::SingularMatrix));
    }

    #[test]
    fn pivoting_needed() {
        let m = ExactMatrix::from_rows(vec![
            vec![q(0, 1), q(1, 1), q(2, 3)],
            vec![q(1, 5), q(0, 1), q(1, 1)],
            vec![q(3, 1), q(-1, 7), q(0, 1)],
        ])
        .unwrap();
        let inv = m.inverse().unwrap();
        assert!((&m * &inv).is_identity());
        assert!((&inv * &m).is_identity());
    }

    #[test]
    fn mul_shape_error() {
        let a = ExactMatrix::zeros(2, 3);
        assert!(a.try_mul(&a).is_err());
    }
}
