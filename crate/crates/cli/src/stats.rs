//! Goodness-of-fit helpers for checking sampler output.

use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{CliError, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Pearson test of `observed` counts against category probabilities
/// `expected` (renormalized). Categories with expected count below
/// `min_expected` are pooled into one.
pub fn chi_square_test(observed: &[u64], expected: &[f64], min_expected: f64) -> Result<ChiSquareTest> {
    if observed.len() != expected.len() {
        return Err(CliError::Invalid("observed and expected lengths differ".into()));
    }
    let total: u64 = observed.iter().sum();
    let mass: f64 = expected.iter().sum();
    if total == 0 || !(mass > 0.0) {
        return Err(CliError::Invalid("empty sample or zero expected mass".into()));
    }
    let scale = total as f64 / mass;
    let mut cells = Vec::new();
    let (mut pooled_obs, mut pooled_exp) = (0.0, 0.0);
    for (&o, &e) in observed.iter().zip(expected) {
        let e = e * scale;
        if e < min_expected {
            pooled_obs += o as f64;
            pooled_exp += e;
        } else {
            cells.push((o as f64, e));
        }
    }
    if pooled_exp > 0.0 {
        cells.push((pooled_obs, pooled_exp));
    } else if pooled_obs > 0.0 {
        return Ok(ChiSquareTest { statistic: f64::INFINITY, dof: cells.len(), p_value: 0.0 });
    }
    if cells.len() < 2 {
        return Err(CliError::Invalid("need at least two categories".into()));
    }
    let statistic: f64 = cells.iter().map(|(o, e)| (o - e).powi(2) / e).sum();
    let dof = cells.len() - 1;
    let dist = ChiSquared::new(dof as f64).map_err(|e| CliError::Invalid(e.to_string()))?;
    Ok(ChiSquareTest { statistic, dof, p_value: dist.sf(statistic) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_fit_has_p_one() {
        let t = chi_square_test(&[25, 25, 50], &[0.25, 0.25, 0.5], 5.0).unwrap();
        assert_eq!(t.statistic, 0.0);
        assert_eq!(t.dof, 2);
        assert!((t.p_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn known_statistic() {
        // (60-50)^2/50 + (40-50)^2/50 = 4, one degree of freedom
        let t = chi_square_test(&[60, 40], &[1.0, 1.0], 5.0).unwrap();
        assert!((t.statistic - 4.0).abs() < 1e-12);
        assert!((t.p_value - 0.0455002638963584).abs() < 1e-9);
    }

    #[test]
    fn pools_sparse_categories() {
        let t = chi_square_test(&[50, 48, 1, 1], &[0.5, 0.48, 0.01, 0.01], 5.0).unwrap();
        assert_eq!(t.dof, 2);
    }
}
