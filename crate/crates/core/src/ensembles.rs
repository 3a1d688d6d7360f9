//! Random matrix ensembles and reproducible random streams.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::ComplexMatrix;

/// Unitarity tolerance for every interferometer accepted by this crate.
pub const UNITARITY_TOLERANCE: f64 = 1e-10;

/// A `(seed, stream)` pair naming one ChaCha8 stream. Streams under the same
/// seed never overlap, so workers can be handed `with_stream(worker_index)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngSeed {
    pub seed: u64,
    pub stream: u64,
}

impl RngSeed {
    pub fn new(seed: u64) -> Self {
        Self { seed, stream: 0 }
    }

    pub fn with_stream(self, stream: u64) -> Self {
        Self { stream, ..self }
    }

    /// Stream `base + offset`; handy for handing out blocks of streams.
    pub fn offset(self, offset: u64) -> Self {
        self.with_stream(self.stream.wrapping_add(offset))
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

/// An `N`-mode linear interferometer. Element `[l][i]` is the amplitude for
/// a photon entering mode `i` to leave through mode `l`.
#[derive(Clone, Debug, PartialEq)]
pub struct InterferometerUnitary {
    matrix: ComplexMatrix,
}

impl InterferometerUnitary {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::NonSquareMatrix {
                rows: matrix.rows(),
                cols: matrix.cols(),
            });
        }
        let residual = matrix.unitarity_residual();
        if residual > UNITARITY_TOLERANCE {
            return Err(Error::NotUnitary { residual });
        }
        Ok(Self { matrix })
    }

    /// `(1/sqrt 2) [[1, 1], [1, -1]]`.
    pub fn beamsplitter() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self {
            matrix: ComplexMatrix::from_real(2, 2, &[h, h, h, -h]).unwrap(),
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    #[inline]
    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    /// Transfer matrix with rows indexed by the occupied inputs and columns
    /// by the detected outputs: `M[a][b] = U[q_b][tau_a]`.
    pub fn transfer_matrix(&self, inputs: &[usize], outputs: &[usize]) -> ComplexMatrix {
        ComplexMatrix::from_fn(inputs.len(), outputs.len(), |a, b| {
            self.matrix[(outputs[b], inputs[a])]
        })
    }
}

fn complex_normal<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}

/// I.i.d. circularly symmetric complex Gaussians with `E|z|^2 = variance`
/// (real and imaginary parts each carry `variance / 2`).
pub fn sample_gaussian_matrix<R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    variance: f64,
    rng: &mut R,
) -> Result<ComplexMatrix> {
    if !(variance > 0.0 && variance.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "variance must be positive, got {variance}"
        )));
    }
    Ok(ComplexMatrix::from_fn(rows, cols, |_, _| {
        complex_normal(rng, variance)
    }))
}

/// Haar-random `n x n` unitary: QR of a complex Ginibre matrix, then each
/// column of `Q` multiplied by the phase of the matching diagonal entry of
/// `R` so the result does not depend on the QR sign convention.
pub fn sample_haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<InterferometerUnitary> {
    if n == 0 {
        return Err(Error::InvalidArgument("unitary dimension must be positive".into()));
    }
    let z = DMatrix::<Complex64>::from_fn(n, n, |_, _| complex_normal(rng, 1.0));
    let qr = z.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..n {
        let d = r[(j, j)];
        let norm = d.norm();
        let phase = if norm > 0.0 {
            d / norm
        } else {
            Complex64::new(1.0, 0.0)
        };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    let matrix = ComplexMatrix::from_fn(n, n, |i, j| q[(i, j)]);
    InterferometerUnitary::new(matrix)
}

pub fn sample_haar_unitary_seeded(n: usize, seed: RngSeed) -> Result<InterferometerUnitary> {
    sample_haar_unitary(n, &mut seed.rng())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_mode_unitary_is_a_phase() {
        let u = sample_haar_unitary_seeded(1, RngSeed::new(1)).unwrap();
        assert!((u.matrix()[(0, 0)].norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn unitarity_up_to_64_modes() {
        let mut rng = RngSeed::new(7).rng();
        for n in [2, 3, 5, 8, 15, 32, 64] {
            let u = sample_haar_unitary(n, &mut rng).unwrap();
            assert!(u.matrix().unitarity_residual() <= UNITARITY_TOLERANCE);
        }
    }

    #[test]
    fn seeds_and_streams_are_reproducible() {
        let a = sample_haar_unitary_seeded(6, RngSeed::new(42).with_stream(3)).unwrap();
        let b = sample_haar_unitary_seeded(6, RngSeed::new(42).with_stream(3)).unwrap();
        let c = sample_haar_unitary_seeded(6, RngSeed::new(42).with_stream(4)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn rejects_non_unitary() {
        let m = ComplexMatrix::from_real(2, 2, &[1.0, 1.0, 0.0, 1.0]).unwrap();
        assert!(matches!(
            InterferometerUnitary::new(m),
            Err(Error::NotUnitary { .. })
        ));
        assert!(sample_haar_unitary_seeded(0, RngSeed::new(0)).is_err());
        assert!(sample_gaussian_matrix(2, 2, 0.0, &mut RngSeed::new(0).rng()).is_err());
    }

    #[test]
    fn beamsplitter_transfer_matrix() {
        let u = InterferometerUnitary::beamsplitter();
        let m = u.transfer_matrix(&[1], &[0, 1]);
        assert_eq!(m[(0, 0)], u.matrix()[(0, 1)]);
        assert_eq!(m[(0, 1)], u.matrix()[(1, 1)]);
    }
}
