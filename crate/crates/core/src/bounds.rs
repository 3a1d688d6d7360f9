//! Closed-form error bounds, truncation orders and thresholds.
//!
//! Two figures of merit appear below. Post-selected setups use
//! `alpha = x^2 m / n`; a random number of detections uses `alpha = x^2 eta`,
//! widened to `x^2 (eta + C / sqrt n)` by the photon-number window. Every
//! function taking `alpha` leaves the choice to the caller.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `eta` for [`min_transmission_for_size`].
pub const TRANSMISSION_TOLERANCE: f64 = 1e-4;
/// Tolerance on `p` for [`postselection_margin`].
pub const MARGIN_TOLERANCE: f64 = 1e-3;
/// Multipliers reported in a [`BoundReport`].
pub const MARKOV_MULTIPLIERS: [f64; 3] = [1.0, 2.0, 4.0];

fn check_alpha(alpha: f64) -> Result<()> {
    if (0.0..1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(Error::AlphaOutOfRange { alpha })
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")))
    }
}

/// `sqrt(alpha^(k+1) / (1 - alpha))`, the bound on the expected trace
/// distance after truncating at order `k`.
pub fn expected_distance_bound(alpha: f64, k: usize) -> Result<f64> {
    check_alpha(alpha)?;
    Ok((alpha.powi(k as i32 + 1) / (1.0 - alpha)).sqrt())
}

/// Smallest `k` with `expected_distance_bound(alpha, k) <= epsilon`.
pub fn minimal_k(alpha: f64, epsilon: f64) -> Result<usize> {
    check_positive("epsilon", epsilon)?;
    if !(alpha > 0.0 && alpha < 1.0) {
        if alpha == 0.0 {
            return Ok(0);
        }
        return Err(Error::AlphaOutOfRange { alpha });
    }
    let mut k = 0;
    while expected_distance_bound(alpha, k)? > epsilon {
        k += 1;
    }
    Ok(k)
}

/// `floor(ln(eps delta (1 - alpha) / 2) / ln alpha) - 1`, clipped at 0: the
/// order that keeps the failure probability below `delta` at accuracy
/// `epsilon`.
pub fn k_of_failure_budget(alpha: f64, epsilon: f64, delta: f64) -> Result<usize> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::AlphaOutOfRange { alpha });
    }
    let arg = epsilon * delta * (1.0 - alpha) / 2.0;
    if !(arg > 0.0 && arg < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "epsilon * delta * (1 - alpha) / 2 = {arg} not in (0, 1)"
        )));
    }
    let k = (arg.ln() / alpha.ln()).floor() - 1.0;
    Ok(k.max(0.0) as usize)
}

/// `2 (ln eps + ln delta + ln(1 - eta)) / ln eta`, the large-`n` estimate of
/// the truncation order at `x = 1`. Not rounded.
pub fn asymptotic_k(eta: f64, epsilon: f64, delta: f64) -> Result<f64> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::EtaOutOfRange { eta });
    }
    check_positive("epsilon", epsilon)?;
    check_positive("delta", delta)?;
    Ok(2.0 * (epsilon.ln() + delta.ln() + (1.0 - eta).ln()) / eta.ln())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Theorem2Bound {
    /// `x^2 (eta + C / sqrt n)`.
    pub alpha: f64,
    /// `4 exp(-2 C^2)`, the photon-number tail.
    pub hoeffding: f64,
    /// `sqrt(alpha^(k+1) / (1 - alpha))`.
    pub truncation: f64,
    pub total: f64,
}

/// Bound on the expected trace distance between the full distributions
/// (random number of detections) for `0 < C < sqrt(n) (1 - eta)`.
pub fn theorem2_bound(x: f64, eta: f64, n: usize, k: usize, c: f64) -> Result<Theorem2Bound> {
    let sqrt_n = (n as f64).sqrt();
    let limit = sqrt_n * (1.0 - eta);
    if !(c > 0.0 && c < limit) {
        return Err(Error::WindowExceedsRange { c, limit });
    }
    let alpha = x * x * (eta + c / sqrt_n);
    let truncation = expected_distance_bound(alpha, k)?;
    let hoeffding = 4.0 * (-2.0 * c * c).exp();
    Ok(Theorem2Bound {
        alpha,
        hoeffding,
        truncation,
        total: hoeffding + truncation,
    })
}

/// `C(eps) = sqrt(ln(8 / eps) / 2)`, which makes the Hoeffding term `eps / 2`.
pub fn window_parameter(epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon < 8.0) {
        return Err(Error::InvalidArgument(format!("epsilon = {epsilon} not in (0, 8)")));
    }
    Ok(((8.0 / epsilon).ln() / 2.0).sqrt())
}

/// Markov bound `min(1, 1/a)` on `Prob(d > a E(d))`.
pub fn markov_failure_probability(a: f64) -> Result<f64> {
    if !(a >= 1.0) {
        return Err(Error::InvalidArgument(format!("multiplier a = {a} must be >= 1")));
    }
    Ok((1.0 / a).min(1.0))
}

/// The second-moment form `min(1, 1/a^2)`.
pub fn markov_failure_probability_squared(a: f64) -> Result<f64> {
    Ok(markov_failure_probability(a)?.powi(2))
}

/// Bound at `alpha`, with `alpha >= 1` read as an unbounded distance.
fn distance_or_infinite(alpha: f64, k: usize) -> f64 {
    if alpha >= 1.0 {
        f64::INFINITY
    } else {
        expected_distance_bound(alpha, k).unwrap_or(f64::INFINITY)
    }
}

/// Smallest transmission `eta` (to within [`TRANSMISSION_TOLERANCE`], rounded
/// up) at which truncating at `k = n_target` no longer reaches accuracy
/// `epsilon`, with `alpha = x^2 eta`. Below it, an `n_target`-photon
/// experiment is simulable.
pub fn min_transmission_for_size(n_target: usize, x: f64, epsilon: f64) -> Result<f64> {
    if n_target == 0 {
        return Err(Error::InvalidArgument("target size must be at least 1".into()));
    }
    check_positive("epsilon", epsilon)?;
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::InvalidArgument(format!("overlap x = {x} not in [0, 1]")));
    }
    let exceeds = |eta: f64| distance_or_infinite(x * x * eta, n_target) > epsilon;
    if !exceeds(1.0) {
        return Err(Error::NoThreshold);
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    if exceeds(lo) {
        return Ok(0.0);
    }
    while hi - lo > TRANSMISSION_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        if exceeds(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

fn margin_lhs(n: usize, k: usize, x_squared: f64, p: f64) -> f64 {
    let ratio = n as f64 / (n as f64 + p);
    let alpha = x_squared * ratio;
    if alpha >= 1.0 {
        return f64::INFINITY;
    }
    alpha.powi(k as i32 + 1) / (1.0 - alpha)
}

/// Largest `p >= 0` such that post-selecting `n` detections out of `n + p`
/// photons still defeats truncation at order `k`:
/// `(x^2 n/(n+p))^(k+1) / (1 - x^2 n/(n+p)) >= epsilon^2`. Found by bisection
/// to [`MARGIN_TOLERANCE`]; the integer loss allowance is `floor(p)`.
pub fn postselection_margin(n: usize, k: usize, x_squared: f64, epsilon: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    if !(x_squared > 0.0 && x_squared <= 1.0) {
        return Err(Error::InvalidArgument(format!("x^2 = {x_squared} not in (0, 1]")));
    }
    check_positive("epsilon", epsilon)?;
    let target = epsilon * epsilon;
    let holds = |p: f64| margin_lhs(n, k, x_squared, p) >= target;
    if !holds(0.0) {
        return Err(Error::NoMargin);
    }
    let mut hi = 1.0;
    while holds(hi) {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::Overflow("postselection margin search"));
        }
    }
    let mut lo = 0.0;
    while hi - lo > MARGIN_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        if holds(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Inputs for [`evaluate_bounds`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundQuery {
    pub x: f64,
    /// Transmission, or `m / n` for post-selected setups.
    pub eta: f64,
    pub n: usize,
    pub k: usize,
    pub epsilon: f64,
    pub delta: f64,
    /// Photon-number window; `C(epsilon)` when absent.
    pub c: Option<f64>,
}

impl BoundQuery {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.x) {
            return Err(Error::InvalidArgument(format!("overlap x = {} not in [0, 1]", self.x)));
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::EtaOutOfRange { eta: self.eta });
        }
        check_positive("epsilon", self.epsilon)?;
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return Err(Error::InvalidArgument(format!("delta = {} not in (0, 1]", self.delta)));
        }
        Ok(())
    }

    /// `x^2 eta`.
    pub fn alpha(&self) -> f64 {
        self.x * self.x * self.eta
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarkovPoint {
    pub a: f64,
    pub probability: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub query: BoundQuery,
    pub alpha: f64,
    pub expected_distance_bound: f64,
    pub theorem2: Option<Theorem2Bound>,
    pub minimal_k: Option<usize>,
    pub k_of_failure_budget: Option<usize>,
    pub asymptotic_k: Option<f64>,
    pub markov_failure_at: Vec<MarkovPoint>,
    pub notes: Vec<String>,
}

/// Evaluates every bound that applies to `query`. Bounds whose
/// preconditions fail are left out and explained in `notes`.
pub fn evaluate_bounds(query: &BoundQuery) -> Result<BoundReport> {
    query.validate()?;
    let alpha = query.alpha();
    let expected = expected_distance_bound(alpha, query.k)?;
    let mut notes = vec![format!("alpha = x^2 eta = {alpha}")];

    let c = match query.c {
        Some(c) => Some(c),
        None => window_parameter(query.epsilon).ok(),
    };
    let theorem2 = match c.map(|c| theorem2_bound(query.x, query.eta, query.n, query.k, c)) {
        Some(Ok(t)) => Some(t),
        Some(Err(e)) => {
            notes.push(format!("photon-number window bound skipped: {e}"));
            None
        }
        None => None,
    };
    let minimal_k = match minimal_k(alpha, query.epsilon) {
        Ok(k) => Some(k),
        Err(e) => {
            notes.push(format!("minimal k skipped: {e}"));
            None
        }
    };
    let budget_k = match k_of_failure_budget(alpha, query.epsilon, query.delta) {
        Ok(k) => Some(k),
        Err(e) => {
            notes.push(format!("failure-budget k skipped: {e}"));
            None
        }
    };
    let asym = match asymptotic_k(query.eta, query.epsilon, query.delta) {
        Ok(k) => Some(k),
        Err(e) => {
            notes.push(format!("asymptotic k skipped: {e}"));
            None
        }
    };
    let markov_failure_at = MARKOV_MULTIPLIERS
        .iter()
        .map(|&a| {
            Ok(MarkovPoint {
                a,
                probability: markov_failure_probability(a)?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(BoundReport {
        query: *query,
        alpha,
        expected_distance_bound: expected,
        theorem2,
        minimal_k,
        k_of_failure_budget: budget_k,
        asymptotic_k: asym,
        markov_failure_at,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expected_distance_examples() {
        assert!((expected_distance_bound(0.6, 1).unwrap() - 0.948_683_298).abs() < 1e-8);
        assert_eq!(expected_distance_bound(0.0, 5).unwrap(), 0.0);
        let b = expected_distance_bound(0.282, 3).unwrap();
        assert!((b - 0.0938).abs() < 5e-4 && b <= 0.1);
        assert!(expected_distance_bound(1.0, 3).is_err());
        assert!(expected_distance_bound(-0.1, 3).is_err());
    }

    #[test]
    fn expected_distance_monotonicity() {
        for i in 1..99 {
            let a = i as f64 / 100.0;
            let b = (i + 1) as f64 / 100.0;
            for k in 0..=60 {
                assert!(expected_distance_bound(a, k).unwrap() < expected_distance_bound(b, k).unwrap());
                assert!(expected_distance_bound(a, k + 1).unwrap() < expected_distance_bound(a, k).unwrap());
            }
        }
    }

    #[test]
    fn minimal_k_is_exact_argmin() {
        for alpha in [0.282, 0.475, 0.533, 0.65, 0.67, 0.75, 0.755, 0.79, 0.82] {
            let k = minimal_k(alpha, 0.1).unwrap();
            assert!(expected_distance_bound(alpha, k).unwrap() <= 0.1);
            if k > 0 {
                assert!(expected_distance_bound(alpha, k - 1).unwrap() > 0.1);
            }
        }
        assert_eq!(minimal_k(0.475, 0.1).unwrap(), 7);
        assert_eq!(minimal_k(0.82, 0.1).unwrap(), 31);
        assert_eq!(minimal_k(0.755, 0.1).unwrap(), 21);
        assert_eq!(minimal_k(0.0, 0.1).unwrap(), 0);
        assert!(minimal_k(1.0, 0.1).is_err());
    }

    #[test]
    fn failure_budget_order() {
        assert_eq!(k_of_failure_budget(0.5, 0.1, 0.1).unwrap(), 7);
        let mut prev = usize::MAX;
        for eps in [0.001, 0.01, 0.1, 0.5, 1.0] {
            let k = k_of_failure_budget(0.6, eps, 0.5).unwrap();
            assert!(k <= prev);
            prev = k;
        }
        assert!(k_of_failure_budget(0.999, 0.1, 0.1).unwrap() > k_of_failure_budget(0.99, 0.1, 0.1).unwrap());
        assert!(k_of_failure_budget(1.0, 0.1, 0.1).is_err());
    }

    #[test]
    fn asymptotic_order() {
        assert!((asymptotic_k(0.5, 0.1, 0.1).unwrap() - 15.2877).abs() < 1e-3);
        assert!(asymptotic_k(0.999, 0.1, 0.1).unwrap() > asymptotic_k(0.99, 0.1, 0.1).unwrap());
        assert!(matches!(asymptotic_k(1.0, 0.1, 0.1), Err(Error::EtaOutOfRange { .. })));
        // the estimate squares the accuracy condition, so it never undercuts
        // the failure-budget order
        for i in 0..=60 {
            let eta = 0.3 + i as f64 * 0.01;
            let a = asymptotic_k(eta, 0.1, 0.1).unwrap();
            let b = k_of_failure_budget(eta, 0.1, 0.1).unwrap() as f64;
            assert!(a >= b, "eta={eta}");
        }
    }

    #[test]
    fn theorem2_example() {
        let c = window_parameter(0.1).unwrap();
        assert!((c - 1.480_207).abs() < 1e-6);
        let t = theorem2_bound(1.0, 0.5, 100, 20, c).unwrap();
        assert!((t.hoeffding - 0.05).abs() < 1e-12);
        assert!((t.total - 0.0678).abs() < 5e-4);
        assert!((t.truncation - 0.0178).abs() < 5e-4);
        assert!(t.total >= expected_distance_bound(0.5, 20).unwrap());
        assert!(matches!(
            theorem2_bound(1.0, 0.5, 100, 20, 6.0),
            Err(Error::WindowExceedsRange { .. })
        ));
        // with x <= 1, alpha reaches 1 exactly when C reaches the window limit
        assert!(matches!(
            theorem2_bound(1.0, 0.5, 1, 3, 0.5),
            Err(Error::WindowExceedsRange { .. })
        ));
    }

    #[test]
    fn theorem2_dominates_fixed_m() {
        for eta in [0.3, 0.5, 0.7] {
            for k in [1, 5, 10] {
                let t = theorem2_bound(0.9, eta, 400, k, 1.0).unwrap();
                assert!(t.total >= expected_distance_bound(0.81 * eta, k).unwrap());
            }
        }
    }

    #[test]
    fn markov() {
        assert_eq!(markov_failure_probability(1.0).unwrap(), 1.0);
        assert_eq!(markov_failure_probability(2.0).unwrap(), 0.5);
        assert!((markov_failure_probability(10.0).unwrap() - 0.1).abs() < 1e-15);
        assert_eq!(markov_failure_probability_squared(2.0).unwrap(), 0.25);
        assert!(markov_failure_probability(0.5).is_err());
    }

    #[test]
    fn transmission_threshold() {
        let eta = min_transmission_for_size(50, 1.0, 0.1).unwrap();
        assert!((0.875..=0.885).contains(&eta), "eta = {eta}");
        assert!(expected_distance_bound(eta, 50).unwrap() > 0.1);
        assert!(expected_distance_bound(eta - 2.0 * TRANSMISSION_TOLERANCE, 50).unwrap() <= 0.1);
        assert!(min_transmission_for_size(50, 1.0, 0.01).unwrap() < eta);
        assert_eq!(
            min_transmission_for_size(50, 1.0, 0.1).unwrap().to_bits(),
            eta.to_bits()
        );
        // 0.755 is just below the 21-photon frontier
        let eta21 = min_transmission_for_size(21, 1.0, 0.1).unwrap();
        assert!(eta21 > 0.755 && eta21 - 0.755 < 0.01, "eta21 = {eta21}");
    }

    #[test]
    fn postselection_examples() {
        let p = postselection_margin(50, 49, 0.939, 0.1).unwrap();
        assert!((p - 3.665).abs() < 0.01, "p = {p}");
        assert_eq!(p.floor(), 3.0);
        assert_eq!(postselection_margin(50, 49, 1.0, 0.1).unwrap().floor(), 7.0);
        // a stricter accuracy target keeps larger losses out of reach
        assert!(postselection_margin(50, 49, 0.939, 0.01).unwrap() > p);
        assert!(matches!(postselection_margin(50, 20, 0.5, 0.1), Err(Error::NoMargin)));
    }

    #[test]
    fn report() {
        let q = BoundQuery {
            x: 1.0,
            eta: 0.6,
            n: 5,
            k: 1,
            epsilon: 0.1,
            delta: 0.1,
            c: None,
        };
        let r = evaluate_bounds(&q).unwrap();
        assert!((r.expected_distance_bound - 0.948_683).abs() < 1e-6);
        assert_eq!(r.markov_failure_at.len(), 3);
        assert!(r.theorem2.is_none());
        assert!(!r.notes.is_empty());
        assert_eq!(r.minimal_k, Some(minimal_k(0.6, 0.1).unwrap()));
    }
}
