//! Expansion of the post-selected probability in interference orders.
//!
//! `P_m(q) = C(n,m)^-1 sum_j x^j c_j`, where `c_j` collects every input
//! subset `tau` and every permutation `sigma` of the `m` surviving photons
//! that moves exactly `j` of them:
//!
//! ```text
//! c_j = sum_tau sum_sigma R(tau, sigma)
//! R   = sum_rho Perm(M[D, rho] o conj(M[sigma(D), rho])) * Perm(|M[F, !rho]|^2)
//! ```
//!
//! `D` are the moved rows, `F` the fixed rows and `rho` runs over the
//! `j`-column subsets. The second factor is a permanent of a non-negative
//! matrix; it depends only on the input modes in `F` and on `!rho`, so it is
//! cached across input subsets.

use std::collections::HashMap;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::combinatorics::{
    binomial, binomial_f64, combinations, count_expansion_terms, derangements, ln_binomial,
    ln_factorial, ModeConfiguration, Permutation,
};
use crate::ensembles::{sample_haar_unitary, InterferometerUnitary, RngSeed};
use crate::error::{Error, Result};
use crate::exact::NoiseModel;
use crate::matrix::hadamard_conj_rowperm;
use crate::permanent::{fast_permanent, permanent, PermanentAlgorithm};
use crate::summation::{CompensatedComplexSum, CompensatedSum};

/// Default cap on permanent products per evaluated pattern.
pub const DEFAULT_TERM_BUDGET: u128 = 100_000_000;
/// Input and output indices are packed into 64-bit masks.
pub const MAX_EXPANSION_MODES: usize = 64;

/// How conjugate permutation pairs are enumerated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Pairing {
    /// Every permutation; the imaginary parts cancel in the sum.
    #[default]
    Full,
    /// One representative per `{sigma, sigma^-1}` pair with weight 2,
    /// keeping only the real part.
    Paired,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpansionOptions {
    pub budget: u128,
    pub pairing: Pairing,
    pub parallel: bool,
}

impl Default for ExpansionOptions {
    fn default() -> Self {
        Self {
            budget: DEFAULT_TERM_BUDGET,
            pairing: Pairing::Full,
            parallel: true,
        }
    }
}

impl ExpansionOptions {
    pub fn sequential(self) -> Self {
        Self {
            parallel: false,
            ..self
        }
    }

    pub fn with_pairing(self, pairing: Pairing) -> Self {
        Self { pairing, ..self }
    }

    pub fn with_budget(self, budget: u128) -> Self {
        Self { budget, ..self }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruncationSpec {
    pub k: usize,
    pub clamp: bool,
}

impl TruncationSpec {
    pub fn new(k: usize) -> Self {
        Self { k, clamp: true }
    }

    pub fn raw(k: usize) -> Self {
        Self { k, clamp: false }
    }
}

/// Which input subsets enter the sum.
#[derive(Clone, Debug, PartialEq)]
pub enum InputSet {
    /// All `C(n, m)` subsets of the `n` input modes.
    All,
    Subset(Vec<ModeConfiguration>),
}

/// `c_0 ..= c_order` for one output pattern.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpansionCoefficients {
    pub n: usize,
    pub m: usize,
    pub q: ModeConfiguration,
    pub coeffs: Vec<f64>,
    /// `|Im c_j|` left after summation; zero in paired mode.
    pub imag_residue: Vec<f64>,
}

impl ExpansionCoefficients {
    /// Highest order computed.
    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_complete(&self) -> bool {
        self.order() == self.m
    }

    pub fn coeff(&self, j: usize) -> Option<f64> {
        self.coeffs.get(j).copied()
    }

    /// `C(n,m)^-1 sum_{j <= k} x^j c_j`, unclamped.
    pub fn partial_sum(&self, x: f64, k: usize) -> Result<f64> {
        if k > self.order() {
            return Err(Error::InvalidArgument(format!(
                "order {k} requested, only {} computed",
                self.order()
            )));
        }
        let mut acc = CompensatedSum::new();
        let mut xj = 1.0;
        for &c in &self.coeffs[..=k] {
            acc.add(xj * c);
            xj *= x;
        }
        Ok(acc.value() / binomial_f64(self.n, self.m))
    }

    pub fn probability(&self, x: f64) -> Result<f64> {
        self.partial_sum(x, self.order())
    }
}

#[inline]
pub fn clamp_probability(p: f64) -> f64 {
    p.clamp(0.0, 1.0)
}

struct OrderTable {
    j: usize,
    row_subsets: Vec<Vec<usize>>,
    /// Derangements of `0..j` with their enumeration weight.
    derangements: Vec<(Vec<usize>, f64)>,
    /// `(rho, complement of rho)`.
    col_subsets: Vec<(Vec<usize>, Vec<usize>)>,
}

fn is_lex_le_inverse(d: &[usize]) -> (bool, bool) {
    let mut inv = vec![0; d.len()];
    for (i, &v) in d.iter().enumerate() {
        inv[v] = i;
    }
    (d <= inv.as_slice(), d == inv.as_slice())
}

fn complement(set: &[usize], len: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(len - set.len());
    let mut it = set.iter().peekable();
    for i in 0..len {
        if it.peek() == Some(&&i) {
            it.next();
        } else {
            out.push(i);
        }
    }
    out
}

type PositiveCache = HashMap<(u64, u64), f64>;

/// Evaluates expansion coefficients for one output pattern.
pub struct ExpansionEngine<'a> {
    u: &'a InterferometerUnitary,
    q: ModeConfiguration,
    n: usize,
    m: usize,
    /// `|U[q_c][i]|^2`, row-major over input `i < n` and column `c < m`.
    weights: Vec<f64>,
    options: ExpansionOptions,
}

impl<'a> ExpansionEngine<'a> {
    pub fn new(
        u: &'a InterferometerUnitary,
        q: &ModeConfiguration,
        n: usize,
        options: ExpansionOptions,
    ) -> Result<Self> {
        let m = q.len();
        if n > u.dim() {
            return Err(Error::InvalidArgument(format!("{n} input photons in {} modes", u.dim())));
        }
        if m > n {
            return Err(Error::InvalidArgument(format!("{m} detections from {n} photons")));
        }
        if n > MAX_EXPANSION_MODES {
            return Err(Error::SizeLimitExceeded {
                what: "expansion input photons",
                size: n,
                limit: MAX_EXPANSION_MODES,
            });
        }
        q.check_bound(u.dim())?;
        let mat = u.matrix();
        let mut weights = Vec::with_capacity(n * m);
        for i in 0..n {
            weights.extend(q.iter().map(|&l| mat[(l, i)].norm_sqr()));
        }
        Ok(Self {
            u,
            q: q.clone(),
            n,
            m,
            weights,
            options,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Permanent products needed for orders `0..=k` over all input subsets.
    pub fn required_terms(&self, k: usize) -> Result<u128> {
        (0..=k.min(self.m))
            .filter(|&j| j != 1)
            .try_fold(0u128, |acc, j| {
                acc.checked_add(count_expansion_terms(self.n, self.m, j)?)
                    .ok_or(Error::Overflow("expansion term count"))
            })
    }

    fn tables(&self, k: usize) -> Result<Vec<OrderTable>> {
        (0..=k)
            .filter(|&j| j != 1)
            .map(|j| {
                let ders = derangements(j)
                    .into_iter()
                    .filter_map(|d| match self.options.pairing {
                        Pairing::Full => Some((d, 1.0)),
                        Pairing::Paired => match is_lex_le_inverse(&d) {
                            (true, true) => Some((d, 1.0)),
                            (true, false) => Some((d, 2.0)),
                            _ => None,
                        },
                    })
                    .collect();
                Ok(OrderTable {
                    j,
                    row_subsets: combinations(self.m, j)?.map(|c| c.into_vec()).collect(),
                    derangements: ders,
                    col_subsets: combinations(self.m, j)?
                        .map(|c| {
                            let rest = complement(&c, self.m);
                            (c.into_vec(), rest)
                        })
                        .collect(),
                })
            })
            .collect()
    }

    fn positive_permanent(
        &self,
        tau: &[usize],
        rows: &[usize],
        cols: &[usize],
        cache: &mut PositiveCache,
    ) -> f64 {
        let size = rows.len();
        if size == 0 {
            return 1.0;
        }
        let row_mask = rows.iter().fold(0u64, |a, &r| a | 1 << tau[r]);
        let col_mask = cols.iter().fold(0u64, |a, &c| a | 1 << c);
        *cache.entry((row_mask, col_mask)).or_insert_with(|| {
            let mut buf = Vec::with_capacity(size * size);
            for &r in rows {
                let base = tau[r] * self.m;
                buf.extend(cols.iter().map(|&c| self.weights[base + c]));
            }
            fast_permanent(size, &buf)
        })
    }

    /// Per-order sums for one input subset, indexed like `tables`.
    fn tau_sums(&self, tau: &[usize], tables: &[OrderTable], cache: &mut PositiveCache) -> Vec<Complex64> {
        let m = self.m;
        let transfer = self.u.transfer_matrix(tau, &self.q);
        let mt = transfer.entries();
        let mut buf: Vec<Complex64> = Vec::with_capacity(m * m);
        let mut sig = Vec::with_capacity(m);
        tables
            .iter()
            .map(|table| {
                let j = table.j;
                let mut acc = CompensatedComplexSum::new();
                for d_rows in &table.row_subsets {
                    let f_rows = complement(d_rows, m);
                    for (rho, rho_bar) in &table.col_subsets {
                        let pos = self.positive_permanent(tau, &f_rows, rho_bar, cache);
                        if pos == 0.0 {
                            continue;
                        }
                        let mut inner = Complex64::new(0.0, 0.0);
                        for (der, w) in &table.derangements {
                            sig.clear();
                            sig.extend(der.iter().map(|&p| d_rows[p]));
                            buf.clear();
                            for (p, &r) in d_rows.iter().enumerate() {
                                let s = sig[p];
                                buf.extend(rho.iter().map(|&c| mt[r * m + c] * mt[s * m + c].conj()));
                            }
                            inner += fast_permanent(j, &buf) * *w;
                        }
                        acc += inner * pos;
                    }
                }
                acc.value()
            })
            .collect()
    }

    fn subsets(&self, tau_set: &InputSet) -> Result<Vec<ModeConfiguration>> {
        match tau_set {
            InputSet::All => Ok(combinations(self.n, self.m)?.collect()),
            InputSet::Subset(list) => {
                for tau in list {
                    if tau.len() != self.m {
                        return Err(Error::ShapeMismatch(format!(
                            "input subset of size {} for {} detections",
                            tau.len(),
                            self.m
                        )));
                    }
                    tau.check_bound(self.n)?;
                }
                Ok(list.clone())
            }
        }
    }

    /// Coefficients `c_0 ..= c_k`.
    pub fn coefficients(&self, k: usize, tau_set: &InputSet) -> Result<ExpansionCoefficients> {
        if k > self.m {
            return Err(Error::InvalidArgument(format!(
                "truncation order {k} exceeds m = {}",
                self.m
            )));
        }
        let subsets = self.subsets(tau_set)?;
        let per_tau: u128 = self.required_terms(k)? / binomial(self.n, self.m)?.max(1);
        let required = per_tau
            .checked_mul(subsets.len() as u128)
            .ok_or(Error::Overflow("expansion term count"))?;
        if required > self.options.budget {
            return Err(Error::BudgetExceeded {
                required,
                budget: self.options.budget,
            });
        }
        let tables = self.tables(k)?;
        let eval = |cache: &mut PositiveCache, tau: &ModeConfiguration| self.tau_sums(tau, &tables, cache);
        let partials: Vec<Vec<Complex64>> = if self.options.parallel && subsets.len() > 1 {
            subsets.par_iter().map_init(PositiveCache::new, eval).collect()
        } else {
            let mut cache = PositiveCache::new();
            subsets.iter().map(|t| eval(&mut cache, t)).collect()
        };
        let mut coeffs = vec![0.0; k + 1];
        let mut imag_residue = vec![0.0; k + 1];
        for (slot, table) in tables.iter().enumerate() {
            let mut acc = CompensatedComplexSum::new();
            for p in &partials {
                acc += p[slot];
            }
            let total = acc.value();
            coeffs[table.j] = total.re;
            if self.options.pairing == Pairing::Full {
                imag_residue[table.j] = total.im.abs();
            }
        }
        Ok(ExpansionCoefficients {
            n: self.n,
            m: self.m,
            q: self.q.clone(),
            coeffs,
            imag_residue,
        })
    }

    /// `R(tau, sigma)` through the column expansion used by the engine.
    pub fn r_term(&self, tau: &ModeConfiguration, sigma: &Permutation) -> Result<Complex64> {
        if tau.len() != self.m || sigma.len() != self.m {
            return Err(Error::ShapeMismatch("tau, sigma and q must have equal length".into()));
        }
        tau.check_bound(self.n)?;
        let moved = sigma.moved_positions();
        let j = moved.len();
        let position: HashMap<usize, usize> = moved.iter().enumerate().map(|(p, &r)| (r, p)).collect();
        let der: Vec<usize> = moved.iter().map(|&r| position[&sigma.map()[r]]).collect();
        let table = OrderTable {
            j,
            row_subsets: vec![moved],
            derangements: vec![(der, 1.0)],
            col_subsets: combinations(self.m, j)?
                .map(|c| {
                    let rest = complement(&c, self.m);
                    (c.into_vec(), rest)
                })
                .collect(),
        };
        Ok(self.tau_sums(tau, &[table], &mut PositiveCache::new())[0])
    }
}

/// `R(tau, sigma) = Perm(M o conj(M_sigma))` evaluated as one permanent.
pub fn r_term_direct(
    u: &InterferometerUnitary,
    tau: &ModeConfiguration,
    q: &ModeConfiguration,
    sigma: &Permutation,
) -> Result<Complex64> {
    if tau.len() != q.len() {
        return Err(Error::ShapeMismatch("tau and q must have equal length".into()));
    }
    tau.check_bound(u.dim())?;
    q.check_bound(u.dim())?;
    let m = u.transfer_matrix(tau, q);
    permanent(&hadamard_conj_rowperm(&m, &m, sigma)?, PermanentAlgorithm::Ryser)
}

/// All coefficients `c_0 ..= c_k` for pattern `q` with `n` input photons.
pub fn expansion_coefficients(
    u: &InterferometerUnitary,
    q: &ModeConfiguration,
    n: usize,
    k: usize,
    tau_set: &InputSet,
    options: &ExpansionOptions,
) -> Result<ExpansionCoefficients> {
    ExpansionEngine::new(u, q, n, *options)?.coefficients(k, tau_set)
}

/// The single coefficient `c_j`; zero for `j = 1`.
pub fn expansion_coefficient(
    u: &InterferometerUnitary,
    q: &ModeConfiguration,
    n: usize,
    tau_set: &InputSet,
    j: usize,
    options: &ExpansionOptions,
) -> Result<f64> {
    let engine = ExpansionEngine::new(u, q, n, *options)?;
    if j > engine.m() {
        return Err(Error::InvalidArgument(format!("order {j} exceeds m = {}", engine.m())));
    }
    if j == 1 {
        return Ok(0.0);
    }
    let subsets = engine.subsets(tau_set)?;
    let required = count_expansion_terms(n, q.len(), j)? / binomial(n, q.len())?.max(1)
        * subsets.len() as u128;
    if required > options.budget {
        return Err(Error::BudgetExceeded {
            required,
            budget: options.budget,
        });
    }
    let tables: Vec<OrderTable> = engine.tables(j)?.into_iter().filter(|t| t.j == j).collect();
    let mut cache = PositiveCache::new();
    let mut acc = CompensatedComplexSum::new();
    for tau in &subsets {
        acc += engine.tau_sums(tau, &tables, &mut cache)[0];
    }
    Ok(acc.value().re)
}

/// `C(n,m)^-1 sum_{j <= k} x^j c_j`, optionally clamped to `[0, 1]`.
pub fn truncated_probability(
    u: &InterferometerUnitary,
    q: &ModeConfiguration,
    noise: &NoiseModel,
    spec: &TruncationSpec,
    options: &ExpansionOptions,
) -> Result<f64> {
    if q.len() != noise.m {
        return Err(Error::ShapeMismatch(format!(
            "pattern has {} photons, noise model expects {}",
            q.len(),
            noise.m
        )));
    }
    if spec.k > noise.m {
        return Err(Error::InvalidArgument(format!(
            "truncation order {} exceeds m = {}",
            spec.k, noise.m
        )));
    }
    let coeffs = expansion_coefficients(u, q, noise.n, spec.k, &InputSet::All, options)?;
    let raw = coeffs.partial_sum(noise.x, spec.k)?;
    Ok(if spec.clamp { clamp_probability(raw) } else { raw })
}

/// `C(n-j, m-j) C(n, m) (m! / N^m)^2`, an upper bound on `Var(c_j)` over
/// Haar-random `N`-mode interferometers.
pub fn variance_bound_cj(n: usize, m: usize, j: usize, modes: usize) -> Result<f64> {
    if !(j <= m && m <= n && n <= modes) {
        return Err(Error::InvalidArgument(format!(
            "need j <= m <= n <= N, got j={j} m={m} n={n} N={modes}"
        )));
    }
    let ln = ln_binomial(n - j, m - j) + ln_binomial(n, m)
        + 2.0 * (ln_factorial(m) - m as f64 * (modes as f64).ln());
    Ok(ln.exp())
}

/// `(m! / N^m)^2 alpha^(k+1) / (1 - alpha)` with `alpha = x^2 m / n`: the
/// geometric bound on `Var(P_m(q) - P'_m(q))`.
pub fn truncation_variance_bound(noise: &NoiseModel, k: usize, modes: usize) -> Result<f64> {
    let alpha = noise.alpha_postselected();
    if alpha >= 1.0 {
        return Err(Error::AlphaOutOfRange { alpha });
    }
    if noise.n > modes {
        return Err(Error::InvalidArgument(format!("{} photons in {modes} modes", noise.n)));
    }
    let m = noise.m;
    let ln_scale = 2.0 * (ln_factorial(m) - m as f64 * (modes as f64).ln());
    Ok((ln_scale + (k as f64 + 1.0) * alpha.ln()).exp() / (1.0 - alpha))
}

/// Problem size for the coefficient Monte Carlo.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpansionDims {
    pub modes: usize,
    pub n: usize,
    pub m: usize,
}

pub const MIN_VARIANCE_TRIALS: usize = 100;

/// `x^j c_j` for the pattern `q = {0, ..., m-1}` under `trials` independent
/// Haar unitaries. Trial `t` draws its unitary from stream `seed + t`.
pub fn sample_scaled_coefficients(
    dims: ExpansionDims,
    x: f64,
    trials: usize,
    seed: RngSeed,
    options: &ExpansionOptions,
) -> Result<Vec<Vec<f64>>> {
    if dims.n > dims.modes || dims.m > dims.n {
        return Err(Error::InvalidArgument(format!("need m <= n <= N, got {dims:?}")));
    }
    let q = ModeConfiguration::first(dims.m);
    let inner = options.sequential();
    (0..trials)
        .into_par_iter()
        .map(|t| {
            let u = sample_haar_unitary(dims.modes, &mut seed.offset(t as u64).rng())?;
            let c = expansion_coefficients(&u, &q, dims.n, dims.m, &InputSet::All, &inner)?;
            let mut xj = 1.0;
            Ok(c.coeffs
                .iter()
                .map(|&v| {
                    let s = xj * v;
                    xj *= x;
                    s
                })
                .collect())
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderVariance {
    pub j: usize,
    /// Unbiased sample variance of `x^j c_j`.
    pub variance: f64,
    pub stderr: f64,
    /// `Var(x^j c_j) / Var(c_0)`.
    pub normalized: f64,
    pub normalized_stderr: f64,
    /// Bound on `Var(c_j)` (no `x` factor).
    pub bound_cj: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CovarianceEstimate {
    pub i: usize,
    pub j: usize,
    pub covariance: f64,
    pub stderr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CjVarianceStudy {
    pub dims: ExpansionDims,
    pub x: f64,
    pub trials: usize,
    pub orders: Vec<OrderVariance>,
    /// Pairs `i < j`, both different from 1.
    pub covariances: Vec<CovarianceEstimate>,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().copied().sum::<CompensatedSum>().value() / v.len() as f64
}

/// Sample covariance with a large-sample standard error,
/// `sqrt(Var((a - mean a)(b - mean b)) / T)`.
pub fn covariance_with_stderr(a: &[f64], b: &[f64]) -> (f64, f64) {
    let t = a.len() as f64;
    let (ma, mb) = (mean(a), mean(b));
    let prods: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).collect();
    let mp = mean(&prods);
    let cov = mp * t / (t - 1.0);
    let spread = prods.iter().map(|p| (p - mp).powi(2)).sum::<f64>() / (t - 1.0);
    (cov, (spread / t).sqrt())
}

/// Unbiased sample variance with the standard error `sqrt((mu4 - s^4) / T)`.
pub fn variance_with_stderr(a: &[f64]) -> (f64, f64) {
    let t = a.len() as f64;
    let m = mean(a);
    let m2 = a.iter().map(|v| (v - m).powi(2)).sum::<f64>() / t;
    let m4 = a.iter().map(|v| (v - m).powi(4)).sum::<f64>() / t;
    let s2 = m2 * t / (t - 1.0);
    (s2, ((m4 - m2 * m2).max(0.0) / t).sqrt())
}

/// Monte Carlo variances and covariances of `x^j c_j` over Haar unitaries.
pub fn monte_carlo_cj_variance(
    dims: ExpansionDims,
    x: f64,
    trials: usize,
    seed: RngSeed,
    options: &ExpansionOptions,
) -> Result<CjVarianceStudy> {
    if trials < MIN_VARIANCE_TRIALS {
        return Err(Error::InvalidArgument(format!(
            "need at least {MIN_VARIANCE_TRIALS} trials, got {trials}"
        )));
    }
    let samples = sample_scaled_coefficients(dims, x, trials, seed, options)?;
    let columns: Vec<Vec<f64>> = (0..=dims.m)
        .map(|j| samples.iter().map(|row| row[j]).collect())
        .collect();
    let t = trials as f64;
    let (v0, _) = variance_with_stderr(&columns[0]);
    let m0 = mean(&columns[0]);
    let dev0: Vec<f64> = columns[0].iter().map(|v| (v - m0).powi(2)).collect();
    let orders = columns
        .iter()
        .enumerate()
        .map(|(j, col)| {
            let (var, stderr) = variance_with_stderr(col);
            let normalized = var / v0;
            // delta method for a ratio of two correlated sample variances
            let mj = mean(col);
            let devj: Vec<f64> = col.iter().map(|v| (v - mj).powi(2)).collect();
            let (cov_vv, _) = covariance_with_stderr(&devj, &dev0);
            let (var_vj, var_v0) = (stderr * stderr, variance_with_stderr(&columns[0]).1.powi(2));
            let rel = if var > 0.0 {
                var_vj / (var * var) + var_v0 / (v0 * v0) - 2.0 * cov_vv / t / (var * v0)
            } else {
                0.0
            };
            Ok(OrderVariance {
                j,
                variance: var,
                stderr,
                normalized,
                normalized_stderr: normalized.abs() * rel.max(0.0).sqrt(),
                bound_cj: variance_bound_cj(dims.n, dims.m, j, dims.modes)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut covariances = Vec::new();
    for i in (0..=dims.m).filter(|&i| i != 1) {
        for j in (i + 1..=dims.m).filter(|&j| j != 1) {
            let (covariance, stderr) = covariance_with_stderr(&columns[i], &columns[j]);
            covariances.push(CovarianceEstimate {
                i,
                j,
                covariance,
                stderr,
            });
        }
    }
    Ok(CjVarianceStudy {
        dims,
        x,
        trials,
        orders,
        covariances,
    })
}
