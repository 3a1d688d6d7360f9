//! Exact output probabilities of a uniformly lossy interferometer fed with
//! partially distinguishable single photons.
//!
//! Photons enter modes `0..n`. Loss acts at the input: `m` of the `n`
//! photons survive, each `m`-subset `tau` equally likely, and the survivors
//! interfere through `U`. Only collision-free outputs are modelled; the
//! probability that leaks into collision patterns is not redistributed.

use std::collections::BTreeMap;

use itertools::Itertools;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::combinatorics::{binomial, binomial_f64, bounded_combinations, combinations, ModeConfiguration, Permutation};
use crate::ensembles::InterferometerUnitary;
use crate::error::{Error, Result};
use crate::matrix::{hadamard_conj_rowperm, ComplexMatrix};
use crate::permanent::{fast_permanent, permanent, PermanentAlgorithm};
use crate::summation::{stable_sum, CompensatedComplexSum};

/// Cap on input subsets enumerated by [`prob_postselected`].
pub const EXACT_SUBSET_CAP: u128 = 1_000_000;
/// Largest photon number for the `m!`-term reference sum.
pub const BRUTE_FORCE_MAX_PHOTONS: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Uniform pairwise overlap of the internal states, in `[0, 1]`.
    pub x: f64,
    /// Per-photon transmission, in `(0, 1]`.
    pub eta: f64,
    /// Photons injected.
    pub n: usize,
    /// Photons detected (post-selected).
    pub m: usize,
}

impl NoiseModel {
    pub fn new(x: f64, eta: f64, n: usize, m: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::InvalidArgument(format!("overlap x = {x} not in [0, 1]")));
        }
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(Error::InvalidArgument(format!("transmission eta = {eta} not in (0, 1]")));
        }
        if m > n {
            return Err(Error::InvalidArgument(format!("m = {m} exceeds n = {n}")));
        }
        Ok(Self { x, eta, n, m })
    }

    /// Lossless, post-selected on all `n` photons.
    pub fn lossless(x: f64, n: usize) -> Result<Self> {
        Self::new(x, 1.0, n, n)
    }

    /// Same source, post-selected on `m` detections.
    pub fn with_detected(self, m: usize) -> Result<Self> {
        Self::new(self.x, self.eta, self.n, m)
    }

    /// `x^2 m / n`, the post-selected figure of merit.
    pub fn alpha_postselected(&self) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        self.x * self.x * self.m as f64 / self.n as f64
    }

    /// `x^2 eta`, the figure of merit for a random number of detections.
    pub fn alpha_asymptotic(&self) -> f64 {
        self.x * self.x * self.eta
    }
}

/// Gram matrix of the internal states: `S[i][j] = x + delta_ij (1 - x)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OverlapMatrix {
    pub size: usize,
    pub x: f64,
}

impl OverlapMatrix {
    pub fn new(size: usize, x: f64) -> Self {
        Self { size, x }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            1.0
        } else {
            self.x
        }
    }

    /// `prod_i S[i][sigma(i)]`.
    pub fn weight(&self, sigma: &Permutation) -> f64 {
        sigma
            .map()
            .iter()
            .enumerate()
            .map(|(i, &s)| self.get(i, s))
            .product()
    }
}

fn check_configs(u: &InterferometerUnitary, tau: &[usize], q: &[usize], n: usize) -> Result<()> {
    if tau.len() != q.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} occupied inputs but {} detected outputs",
            tau.len(),
            q.len()
        )));
    }
    if let Some(&t) = tau.last() {
        if t >= n.min(u.dim()) {
            return Err(Error::IndexOutOfBounds {
                index: t,
                bound: n.min(u.dim()),
            });
        }
    }
    if let Some(&l) = q.last() {
        if l >= u.dim() {
            return Err(Error::IndexOutOfBounds {
                index: l,
                bound: u.dim(),
            });
        }
    }
    Ok(())
}

/// The full permutation sum for one input subset, before taking the real
/// part. Conjugate pairs `sigma, sigma^-1` cancel the imaginary part.
pub fn prob_given_input_complex(
    u: &InterferometerUnitary,
    tau: &ModeConfiguration,
    q: &ModeConfiguration,
    x: f64,
) -> Result<Complex64> {
    check_configs(u, tau, q, u.dim())?;
    let m = tau.len();
    if m == 0 {
        return Err(Error::InvalidArgument("need at least one photon".into()));
    }
    if m > BRUTE_FORCE_MAX_PHOTONS {
        return Err(Error::SizeLimitExceeded {
            what: "brute-force permutation sum",
            size: m,
            limit: BRUTE_FORCE_MAX_PHOTONS,
        });
    }
    let overlap = OverlapMatrix::new(m, x);
    let transfer = u.transfer_matrix(tau, q);
    let mut acc = CompensatedComplexSum::new();
    for map in (0..m).permutations(m) {
        let sigma = Permutation::new(map)?;
        let w = overlap.weight(&sigma);
        if w == 0.0 {
            continue;
        }
        let a = hadamard_conj_rowperm(&transfer, &transfer, &sigma)?;
        acc += permanent(&a, PermanentAlgorithm::Ryser)? * w;
    }
    Ok(acc.value())
}

/// Probability that photons in inputs `tau` exit in outputs `q`, summing
/// every permutation weighted by the overlap matrix.
pub fn prob_given_input(
    u: &InterferometerUnitary,
    tau: &ModeConfiguration,
    q: &ModeConfiguration,
    x: f64,
) -> Result<f64> {
    Ok(prob_given_input_complex(u, tau, q, x)?.re)
}

/// `Perm(|M|^2)`: the value for fully distinguishable photons.
pub fn distinguishable_probability(
    u: &InterferometerUnitary,
    tau: &ModeConfiguration,
    q: &ModeConfiguration,
) -> Result<f64> {
    check_configs(u, tau, q, u.dim())?;
    let transfer = u.transfer_matrix(tau, q);
    Ok(fast_permanent(tau.len(), &transfer.abs_sq()))
}

/// Post-selected probability `C(n,m)^-1 sum_tau P(q | tau)` of detecting the
/// collision-free pattern `q` with `m = |q|` photons.
pub fn prob_postselected(
    u: &InterferometerUnitary,
    q: &ModeConfiguration,
    noise: &NoiseModel,
) -> Result<f64> {
    if q.len() != noise.m {
        return Err(Error::ShapeMismatch(format!(
            "pattern has {} photons, noise model expects {}",
            q.len(),
            noise.m
        )));
    }
    if noise.n > u.dim() {
        return Err(Error::InvalidArgument(format!(
            "{} input photons in {} modes",
            noise.n,
            u.dim()
        )));
    }
    q.check_bound(u.dim())?;
    if noise.m == 0 {
        return Ok(1.0);
    }
    let count = binomial(noise.n, noise.m)?;
    if count > EXACT_SUBSET_CAP {
        return Err(Error::CombinatorialBlowup {
            n: noise.n,
            m: noise.m,
            count,
            cap: EXACT_SUBSET_CAP,
        });
    }
    let subsets: Vec<ModeConfiguration> = combinations(noise.n, noise.m)?.collect();
    let terms = subsets
        .par_iter()
        .map(|tau| prob_given_input(u, tau, q, noise.x))
        .collect::<Result<Vec<f64>>>()?;
    Ok(stable_sum(&terms) / count as f64)
}

/// `C(n,m) eta^m (1 - eta)^(n-m)`.
pub fn photon_number_weight(n: usize, m: usize, eta: f64) -> f64 {
    if m > n {
        return 0.0;
    }
    binomial_f64(n, m) * eta.powi(m as i32) * (1.0 - eta).powi((n - m) as i32)
}

/// Probabilities of collision-free patterns with a random number of
/// detections: `weight(n, |q|, eta) * P_|q|(q)`. The empty pattern is the
/// vacuum outcome.
pub fn full_distribution_exact(
    u: &InterferometerUnitary,
    noise: &NoiseModel,
    q_list: &[ModeConfiguration],
) -> Result<Vec<f64>> {
    q_list
        .iter()
        .map(|q| {
            let m = q.len();
            let w = photon_number_weight(noise.n, m, noise.eta);
            if w == 0.0 {
                // still validate the pattern
                noise.with_detected(m)?;
                q.check_bound(u.dim())?;
                return Ok(0.0);
            }
            Ok(w * prob_postselected(u, q, &noise.with_detected(m)?)?)
        })
        .collect()
}

/// Every collision-free pattern with `noise.m` photons and its exact
/// post-selected probability, in lexicographic order.
pub fn postselected_distribution(
    u: &InterferometerUnitary,
    noise: &NoiseModel,
) -> Result<Vec<(ModeConfiguration, f64)>> {
    let patterns: Vec<ModeConfiguration> = bounded_combinations(u.dim(), noise.m)?.collect();
    patterns
        .into_par_iter()
        .map(|q| {
            let p = prob_postselected(u, &q, noise)?;
            Ok((q, p))
        })
        .collect()
}

pub const COLLISION_ORACLE_MAX_PHOTONS: usize = 5;
pub const COLLISION_ORACLE_MAX_MODES: usize = 12;

/// Ideal (`x = 1`, lossless) distribution over all output multisets,
/// collisions included: `|Perm(U_S)|^2 / prod_l s_l!`. Keys are sorted
/// lists of output modes with repetition.
pub fn ideal_distribution_with_collisions(
    u: &InterferometerUnitary,
    n: usize,
) -> Result<BTreeMap<Vec<usize>, f64>> {
    if n > COLLISION_ORACLE_MAX_PHOTONS {
        return Err(Error::SizeLimitExceeded {
            what: "collision oracle photons",
            size: n,
            limit: COLLISION_ORACLE_MAX_PHOTONS,
        });
    }
    if u.dim() > COLLISION_ORACLE_MAX_MODES {
        return Err(Error::SizeLimitExceeded {
            what: "collision oracle modes",
            size: u.dim(),
            limit: COLLISION_ORACLE_MAX_MODES,
        });
    }
    if n > u.dim() {
        return Err(Error::InvalidArgument(format!("{n} photons in {} modes", u.dim())));
    }
    let inputs: Vec<usize> = (0..n).collect();
    let mut out = BTreeMap::new();
    for outputs in (0..u.dim()).combinations_with_replacement(n) {
        let transfer: ComplexMatrix = u.transfer_matrix(&inputs, &outputs);
        let amp = fast_permanent(n, transfer.entries());
        let multiplicity: f64 = outputs
            .iter()
            .dedup_with_count()
            .map(|(c, _)| (1..=c).product::<usize>() as f64)
            .product();
        out.insert(outputs, amp.norm_sqr() / multiplicity);
    }
    Ok(out)
}
