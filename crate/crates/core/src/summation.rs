//! Compensated (Neumaier) summation. The expansion coefficients mix signs
//! and magnitudes over up to millions of terms.

use std::iter::Sum;
use std::ops::AddAssign;

use num_complex::Complex64;

#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.carry += (self.sum - t) + v;
        } else {
            self.carry += (v - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

impl AddAssign<f64> for CompensatedSum {
    fn add_assign(&mut self, v: f64) {
        self.add(v);
    }
}

impl Sum<f64> for CompensatedSum {
    fn sum<I: Iterator<Item = f64>>(iter: I) -> Self {
        let mut s = Self::new();
        iter.for_each(|v| s.add(v));
        s
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedComplexSum {
    re: CompensatedSum,
    im: CompensatedSum,
}

impl CompensatedComplexSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, z: Complex64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    #[inline]
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }
}

impl AddAssign<Complex64> for CompensatedComplexSum {
    fn add_assign(&mut self, z: Complex64) {
        self.add(z);
    }
}

/// Compensated sum of a slice, in order.
pub fn stable_sum(values: &[f64]) -> f64 {
    values.iter().copied().sum::<CompensatedSum>().value()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_cancelled_small_terms() {
        let values = [1e16, 1.0, -1e16, 1.0];
        let naive: f64 = values.iter().sum();
        assert_ne!(naive, 2.0);
        assert_eq!(stable_sum(&values), 2.0);
    }

    #[test]
    fn complex_parts_are_independent() {
        let mut s = CompensatedComplexSum::new();
        s += Complex64::new(1e16, 1.0);
        s += Complex64::new(1.0, -1.0);
        s += Complex64::new(-1e16, 0.5);
        assert_eq!(s.value(), Complex64::new(1.0, 0.5));
    }
}
