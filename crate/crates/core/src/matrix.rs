//! Dense complex matrices.
//!
//! Storage is row-major. Matrices in this crate are small (at most a few
//! dozen modes) so nothing here tries to be clever about layout.

use std::fmt;
use std::ops::{Index, IndexMut};

use num_complex::Complex64;

use crate::combinatorics::{ModeConfiguration, Permutation};
use crate::error::{Error, Result};

#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    /// Builds a matrix from row-major entries, rejecting wrong lengths and
    /// non-finite values.
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!(
                "{} entries for a {}x{} matrix",
                data.len(),
                rows,
                cols
            )));
        }
        if let Some(pos) = data.iter().position(|z| !z.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / cols.max(1),
                col: pos % cols.max(1),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_real(rows: usize, cols: usize, values: &[f64]) -> Result<Self> {
        Self::new(
            rows,
            cols,
            values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        )
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn entries(&self) -> &[Complex64] {
        &self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::ShapeMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other[(k, j)];
                }
            }
        }
        Ok(out)
    }

    /// Elementwise squared modulus, as a real matrix stored row-major.
    pub fn abs_sq(&self) -> Vec<f64> {
        self.data.iter().map(|z| z.norm_sqr()).collect()
    }

    pub fn scale_row(&mut self, i: usize, c: Complex64) {
        for z in &mut self.data[i * self.cols..(i + 1) * self.cols] {
            *z *= c;
        }
    }

    /// Largest entrywise deviation of `self^† self` from the identity.
    pub fn unitarity_residual(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows;
        let mut worst = 0.0f64;
        for a in 0..n {
            for b in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..n {
                    acc += self[(k, a)].conj() * self[(k, b)];
                }
                if a == b {
                    acc -= 1.0;
                }
                worst = worst.max(acc.norm());
            }
        }
        worst
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Unchecked selection of arbitrary (possibly unordered) rows and columns.
    pub(crate) fn select(&self, rows: &[usize], cols: &[usize]) -> Self {
        let mut data = Vec::with_capacity(rows.len() * cols.len());
        for &r in rows {
            let row = self.row(r);
            data.extend(cols.iter().map(|&c| row[c]));
        }
        Self {
            rows: rows.len(),
            cols: cols.len(),
            data,
        }
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for z in self.row(i) {
                write!(f, "{:>10.5}{:+.5}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Extracts `u[row_idx[i]][col_idx[j]]`.
pub fn submatrix(
    u: &ComplexMatrix,
    row_idx: &ModeConfiguration,
    col_idx: &ModeConfiguration,
) -> Result<ComplexMatrix> {
    if let Some(&r) = row_idx.last() {
        if r >= u.rows() {
            return Err(Error::IndexOutOfBounds {
                index: r,
                bound: u.rows(),
            });
        }
    }
    if let Some(&c) = col_idx.last() {
        if c >= u.cols() {
            return Err(Error::IndexOutOfBounds {
                index: c,
                bound: u.cols(),
            });
        }
    }
    Ok(u.select(row_idx.as_slice(), col_idx.as_slice()))
}

/// `a[i][j] * conj(b[perm(i)][j])`: the elementwise product of a matrix with
/// the conjugate of a row-permuted one.
pub fn hadamard_conj_rowperm(
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    perm: &Permutation,
) -> Result<ComplexMatrix> {
    if a.rows() != b.rows() || a.cols() != b.cols() {
        return Err(Error::ShapeMismatch(format!(
            "{}x{} vs {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    if perm.len() != a.rows() {
        return Err(Error::InvalidPermutation(format!(
            "length {} for {} rows",
            perm.len(),
            a.rows()
        )));
    }
    let map = perm.map();
    Ok(ComplexMatrix::from_fn(a.rows(), a.cols(), |i, j| {
        a[(i, j)] * b[(map[i], j)].conj()
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> ComplexMatrix {
        ComplexMatrix::from_fn(rows, cols, |_, _| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
    }

    fn cfg(v: &[usize]) -> ModeConfiguration {
        ModeConfiguration::new(v.to_vec()).unwrap()
    }

    #[test]
    fn rejects_bad_shapes_and_nan() {
        assert!(ComplexMatrix::from_real(2, 2, &[1.0, 2.0, 3.0]).is_err());
        assert!(matches!(
            ComplexMatrix::from_real(2, 2, &[1.0, f64::NAN, 3.0, 4.0]),
            Err(Error::NonFinite { row: 0, col: 1 })
        ));
    }

    #[test]
    fn identity_submatrices() {
        let id = ComplexMatrix::identity(3);
        let s = submatrix(&id, &cfg(&[0, 1]), &cfg(&[0, 1])).unwrap();
        assert_eq!(s, ComplexMatrix::identity(2));
        let s = submatrix(&id, &cfg(&[0]), &cfg(&[2])).unwrap();
        assert_eq!(s, ComplexMatrix::zeros(1, 1));
    }

    #[test]
    fn submatrix_matches_direct_indexing() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = random_matrix(4, 4, &mut rng);
        let s = submatrix(&u, &cfg(&[1, 3]), &cfg(&[0, 2])).unwrap();
        for (i, &r) in [1usize, 3].iter().enumerate() {
            for (j, &c) in [0usize, 2].iter().enumerate() {
                assert_eq!(s[(i, j)], u[(r, c)]);
            }
        }
    }

    #[test]
    fn submatrix_out_of_bounds() {
        let id = ComplexMatrix::identity(3);
        assert_eq!(
            submatrix(&id, &cfg(&[0, 3]), &cfg(&[0, 1])),
            Err(Error::IndexOutOfBounds { index: 3, bound: 3 })
        );
    }

    #[test]
    fn hadamard_of_identity() {
        let id = ComplexMatrix::identity(2);
        let same = hadamard_conj_rowperm(&id, &id, &Permutation::identity(2)).unwrap();
        assert_eq!(same, ComplexMatrix::identity(2));
        let swap = Permutation::new(vec![1, 0]).unwrap();
        let crossed = hadamard_conj_rowperm(&id, &id, &swap).unwrap();
        assert_eq!(crossed, ComplexMatrix::zeros(2, 2));
    }

    #[test]
    fn hadamard_matches_triple_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = random_matrix(3, 3, &mut rng);
        let b = random_matrix(3, 3, &mut rng);
        let perm = Permutation::new(vec![2, 0, 1]).unwrap();
        let h = hadamard_conj_rowperm(&a, &b, &perm).unwrap();
        let map = [2usize, 0, 1];
        for i in 0..3 {
            for j in 0..3 {
                let expected = a[(i, j)] * b[(map[i], j)].conj();
                assert_eq!(h[(i, j)], expected);
            }
        }
    }

    #[test]
    fn hadamard_errors() {
        let a = ComplexMatrix::identity(2);
        let b = ComplexMatrix::identity(3);
        assert!(matches!(
            hadamard_conj_rowperm(&a, &b, &Permutation::identity(2)),
            Err(Error::ShapeMismatch(_))
        ));
        assert!(matches!(
            hadamard_conj_rowperm(&a, &a, &Permutation::identity(3)),
            Err(Error::InvalidPermutation(_))
        ));
    }

    #[test]
    fn unitarity_of_identity_and_product() {
        let id = ComplexMatrix::identity(4);
        assert_eq!(id.unitarity_residual(), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_matrix(3, 2, &mut rng);
        let p = a.adjoint().matmul(&a).unwrap();
        assert_eq!((p.rows(), p.cols()), (2, 2));
        assert!(a.matmul(&a).is_err());
    }
}
