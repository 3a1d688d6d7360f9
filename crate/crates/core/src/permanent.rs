//! Matrix permanents: naive enumeration, Ryser's inclusion-exclusion formula
//! and Glynn's formula, the latter two walked in Gray-code order so each
//! subset costs `O(n)` updates.
//!
//! The permanent of a 0x0 matrix is 1 (empty product), which lets Laplace
//! expansions bottom out without special cases.

use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::ComplexMatrix;

/// Largest size accepted by the `m * m!` enumeration.
pub const NAIVE_MAX_SIZE: usize = 10;
/// Gray-code loops index subsets with a `u64`.
pub const GRAY_MAX_SIZE: usize = 63;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PermanentAlgorithm {
    Naive,
    Ryser,
    Glynn,
}

/// Scalars the permanent kernels run on (real for positive permanents,
/// complex otherwise).
pub trait PermScalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + Send
    + Sync
{
    fn zero() -> Self;
    fn one() -> Self;
    fn scale(self, s: f64) -> Self;
}

impl PermScalar for f64 {
    #[inline]
    fn zero() -> Self {
        0.0
    }
    #[inline]
    fn one() -> Self {
        1.0
    }
    #[inline]
    fn scale(self, s: f64) -> Self {
        self * s
    }
}

impl PermScalar for Complex64 {
    #[inline]
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    #[inline]
    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }
    #[inline]
    fn scale(self, s: f64) -> Self {
        self * s
    }
}

pub fn permanent(m: &ComplexMatrix, alg: PermanentAlgorithm) -> Result<Complex64> {
    if !m.is_square() {
        return Err(Error::NonSquareMatrix {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    permanent_of(m.rows(), m.entries(), alg)
}

/// Permanent of an `n x n` row-major slice.
pub fn permanent_of<T: PermScalar>(n: usize, a: &[T], alg: PermanentAlgorithm) -> Result<T> {
    debug_assert_eq!(a.len(), n * n);
    match alg {
        PermanentAlgorithm::Naive if n > NAIVE_MAX_SIZE => Err(Error::SizeLimitExceeded {
            what: "naive permanent",
            size: n,
            limit: NAIVE_MAX_SIZE,
        }),
        _ if n > GRAY_MAX_SIZE => Err(Error::SizeLimitExceeded {
            what: "permanent",
            size: n,
            limit: GRAY_MAX_SIZE,
        }),
        PermanentAlgorithm::Naive => Ok(naive(n, a)),
        PermanentAlgorithm::Ryser => Ok(ryser(n, a)),
        PermanentAlgorithm::Glynn => Ok(glynn(n, a)),
    }
}

/// Fast path used by the expansion engine: closed forms up to 3x3, Ryser
/// above. Panics above [`GRAY_MAX_SIZE`].
#[inline]
pub fn fast_permanent<T: PermScalar>(n: usize, a: &[T]) -> T {
    match n {
        0 => T::one(),
        1 => a[0],
        2 => a[0] * a[3] + a[1] * a[2],
        3 => {
            a[0] * (a[4] * a[8] + a[5] * a[7])
                + a[1] * (a[3] * a[8] + a[5] * a[6])
                + a[2] * (a[3] * a[7] + a[4] * a[6])
        }
        _ => ryser(n, a),
    }
}

fn naive<T: PermScalar>(n: usize, a: &[T]) -> T {
    fn walk<T: PermScalar>(row: usize, n: usize, a: &[T], used: u32, partial: T) -> T {
        if row == n {
            return partial;
        }
        let mut acc = T::zero();
        for c in 0..n {
            if used & (1 << c) == 0 {
                acc += walk(row + 1, n, a, used | (1 << c), partial * a[row * n + c]);
            }
        }
        acc
    }
    walk(0, n, a, 0, T::one())
}

/// `Perm(A) = (-1)^n sum_S (-1)^|S| prod_i sum_{j in S} a_ij`, with the
/// column subset `S` updated one column at a time.
fn ryser<T: PermScalar>(n: usize, a: &[T]) -> T {
    if n == 0 {
        return T::one();
    }
    assert!(n <= GRAY_MAX_SIZE);
    let mut row_sums = vec![T::zero(); n];
    let mut total = T::zero();
    let mut gray: u64 = 0;
    for g in 1..(1u64 << n) {
        let col = g.trailing_zeros() as usize;
        gray ^= 1 << col;
        if gray & (1 << col) != 0 {
            for (i, s) in row_sums.iter_mut().enumerate() {
                *s += a[i * n + col];
            }
        } else {
            for (i, s) in row_sums.iter_mut().enumerate() {
                *s -= a[i * n + col];
            }
        }
        let mut prod = row_sums[0];
        for s in &row_sums[1..] {
            prod = prod * *s;
        }
        if gray.count_ones() % 2 == 1 {
            total -= prod;
        } else {
            total += prod;
        }
    }
    if n % 2 == 1 {
        -total
    } else {
        total
    }
}

/// `Perm(A) = 2^{1-n} sum_delta (prod_k delta_k) prod_j sum_i delta_i a_ij`
/// over sign vectors with `delta_0 = +1`.
fn glynn<T: PermScalar>(n: usize, a: &[T]) -> T {
    if n == 0 {
        return T::one();
    }
    assert!(n <= GRAY_MAX_SIZE);
    let mut col_sums = vec![T::zero(); n];
    for i in 0..n {
        for j in 0..n {
            col_sums[j] += a[i * n + j];
        }
    }
    let product = |s: &[T]| s[1..].iter().fold(s[0], |p, &v| p * v);
    let mut total = product(&col_sums);
    let mut gray: u64 = 0;
    for g in 1..(1u64 << (n - 1)) {
        let bit = g.trailing_zeros() as usize;
        gray ^= 1 << bit;
        let row = bit + 1;
        let flipped_negative = gray & (1 << bit) != 0;
        for (j, s) in col_sums.iter_mut().enumerate() {
            let twice = a[row * n + j].scale(2.0);
            if flipped_negative {
                *s -= twice;
            } else {
                *s += twice;
            }
        }
        let p = product(&col_sums);
        if gray.count_ones() % 2 == 1 {
            total -= p;
        } else {
            total += p;
        }
    }
    total.scale(0.5f64.powi(n as i32 - 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const ALGS: [PermanentAlgorithm; 3] = [
        PermanentAlgorithm::Naive,
        PermanentAlgorithm::Ryser,
        PermanentAlgorithm::Glynn,
    ];

    fn random_matrix(n: usize, rng: &mut impl Rng) -> ComplexMatrix {
        ComplexMatrix::from_fn(n, n, |_, _| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
    }

    fn rel_err(a: Complex64, b: Complex64) -> f64 {
        (a - b).norm() / b.norm().max(1e-300)
    }

    #[test]
    fn trivial_values() {
        let one = ComplexMatrix::from_real(1, 1, &[7.0]).unwrap();
        let two = ComplexMatrix::from_real(2, 2, &[1.0, 2.0, 3.0, 4.0]).unwrap();
        for alg in ALGS {
            assert_eq!(permanent(&one, alg).unwrap(), Complex64::new(7.0, 0.0));
            assert_eq!(permanent(&two, alg).unwrap(), Complex64::new(10.0, 0.0));
        }
    }

    #[test]
    fn empty_matrix_has_unit_permanent() {
        let e = ComplexMatrix::zeros(0, 0);
        for alg in ALGS {
            assert_eq!(permanent(&e, alg).unwrap(), Complex64::new(1.0, 0.0));
        }
        assert_eq!(fast_permanent::<f64>(0, &[]), 1.0);
    }

    #[test]
    fn errors() {
        let rect = ComplexMatrix::zeros(2, 3);
        assert_eq!(
            permanent(&rect, PermanentAlgorithm::Ryser),
            Err(Error::NonSquareMatrix { rows: 2, cols: 3 })
        );
        let big = ComplexMatrix::identity(11);
        assert!(matches!(
            permanent(&big, PermanentAlgorithm::Naive),
            Err(Error::SizeLimitExceeded { .. })
        ));
        assert!(permanent(&big, PermanentAlgorithm::Ryser).is_ok());
    }

    #[test]
    fn ryser_matches_enumeration_5x5() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let m = random_matrix(5, &mut rng);
        let oracle = permanent(&m, PermanentAlgorithm::Naive).unwrap();
        let r = permanent(&m, PermanentAlgorithm::Ryser).unwrap();
        assert!(rel_err(r, oracle) < 1e-10);
    }

    #[test]
    fn identity_permanent_is_one() {
        for n in 1..=12 {
            let id = ComplexMatrix::identity(n);
            for alg in [PermanentAlgorithm::Ryser, PermanentAlgorithm::Glynn] {
                assert!((permanent(&id, alg).unwrap() - 1.0).norm() < 1e-12, "n={n}");
            }
        }
    }

    #[test]
    fn algorithms_agree_up_to_twelve() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for n in [8, 10, 12] {
            let m = random_matrix(n, &mut rng);
            let r = permanent(&m, PermanentAlgorithm::Ryser).unwrap();
            let g = permanent(&m, PermanentAlgorithm::Glynn).unwrap();
            assert!(rel_err(g, r) < 1e-10, "n={n}");
            if n <= NAIVE_MAX_SIZE {
                let nv = permanent(&m, PermanentAlgorithm::Naive).unwrap();
                assert!(rel_err(r, nv) < 1e-10, "n={n}");
            }
        }
    }

    #[test]
    fn fast_path_matches_ryser() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 1..=5 {
            let m = random_matrix(n, &mut rng);
            let fast = fast_permanent(n, m.entries());
            let slow = permanent(&m, PermanentAlgorithm::Naive).unwrap();
            assert!(rel_err(fast, slow) < 1e-12);
        }
    }

    #[test]
    fn real_kernel_on_positive_matrix() {
        // all-ones n x n has permanent n!
        let ones = vec![1.0f64; 36];
        assert_eq!(permanent_of(6, &ones, PermanentAlgorithm::Ryser).unwrap(), 720.0);
        assert_eq!(permanent_of(6, &ones, PermanentAlgorithm::Glynn).unwrap(), 720.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn row_scaling_is_linear(seed in any::<u64>(), row in 0usize..4, re in -2.0f64..2.0, im in -2.0f64..2.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = random_matrix(4, &mut rng);
            let c = Complex64::new(re, im);
            let mut scaled = m.clone();
            scaled.scale_row(row, c);
            let base = permanent(&m, PermanentAlgorithm::Ryser).unwrap();
            let got = permanent(&scaled, PermanentAlgorithm::Ryser).unwrap();
            let want = base * c;
            prop_assert!((got - want).norm() <= 1e-10 * want.norm().max(1e-12) + 1e-14);
        }

        #[test]
        fn invariant_under_simultaneous_permutation(seed in any::<u64>(), p in Just(vec![0usize, 1, 2, 3]).prop_shuffle()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = random_matrix(4, &mut rng);
            let permuted = m.select(&p, &p);
            let a = permanent(&m, PermanentAlgorithm::Ryser).unwrap();
            let b = permanent(&permuted, PermanentAlgorithm::Glynn).unwrap();
            prop_assert!((a - b).norm() <= 1e-10 * a.norm().max(1e-12));
        }

        #[test]
        fn zero_row_gives_zero(seed in any::<u64>(), row in 0usize..5) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut m = random_matrix(5, &mut rng);
            m.scale_row(row, Complex64::new(0.0, 0.0));
            for alg in ALGS {
                prop_assert!(permanent(&m, alg).unwrap().norm() < 1e-12);
            }
        }
    }
}
