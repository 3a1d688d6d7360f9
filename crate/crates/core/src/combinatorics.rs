//! Mode configurations, permutations grouped by fixed points, and exact
//! counting.
//!
//! Conventions: a permutation of `m` elements with `j` *moved* (non-fixed)
//! positions belongs to interference order `j`. Its deranged part is the
//! induced derangement on those `j` positions. No permutation has exactly one
//! moved position, so order 1 is always an empty class.

use std::fmt;
use std::ops::Deref;
use std::rc::Rc;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Strictly increasing list of mode indices. Used both for input subsets
/// and for collision-free output patterns.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct ModeConfiguration(Vec<usize>);

impl ModeConfiguration {
    pub fn new(indices: Vec<usize>) -> Result<Self> {
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidConfiguration(format!(
                "{indices:?} is not strictly increasing"
            )));
        }
        Ok(Self(indices))
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    /// `{0, 1, ..., len-1}`.
    pub fn first(len: usize) -> Self {
        Self((0..len).collect())
    }

    /// Sorts and validates an arbitrary list of distinct modes.
    pub fn from_unsorted(mut indices: Vec<usize>) -> Result<Self> {
        indices.sort_unstable();
        Self::new(indices)
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<usize> {
        self.0
    }

    /// Checks every index is below `bound`.
    pub fn check_bound(&self, bound: usize) -> Result<()> {
        match self.0.last() {
            Some(&i) if i >= bound => Err(Error::IndexOutOfBounds { index: i, bound }),
            _ => Ok(()),
        }
    }

    /// Bitmask of occupied modes; modes must be below 64.
    pub fn mask(&self) -> u64 {
        self.0.iter().fold(0u64, |acc, &i| acc | (1u64 << i))
    }
}

impl Deref for ModeConfiguration {
    type Target = [usize];

    fn deref(&self) -> &[usize] {
        &self.0
    }
}

impl TryFrom<Vec<usize>> for ModeConfiguration {
    type Error = Error;

    fn try_from(v: Vec<usize>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<ModeConfiguration> for Vec<usize> {
    fn from(c: ModeConfiguration) -> Self {
        c.0
    }
}

/// Pipe-separated, e.g. `0|4|7`; the empty configuration prints as "".
impl fmt::Display for ModeConfiguration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, m) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("|")?;
            }
            write!(f, "{m}")?;
        }
        Ok(())
    }
}

impl FromStr for ModeConfiguration {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.trim().is_empty() {
            return Ok(Self::empty());
        }
        let indices = s
            .split('|')
            .map(|t| {
                t.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::InvalidConfiguration(format!("bad mode index {t:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(indices)
    }
}

/// Lexicographic iterator over the `m`-subsets of `{0, ..., n-1}`.
#[derive(Clone, Debug)]
pub struct Combinations {
    n: usize,
    current: Vec<usize>,
    done: bool,
}

impl Iterator for Combinations {
    type Item = ModeConfiguration;

    fn next(&mut self) -> Option<ModeConfiguration> {
        if self.done {
            return None;
        }
        let out = ModeConfiguration(self.current.clone());
        let m = self.current.len();
        // advance: rightmost index that can still move
        let mut i = m;
        loop {
            if i == 0 {
                self.done = true;
                break;
            }
            i -= 1;
            if self.current[i] < self.n - m + i {
                self.current[i] += 1;
                for k in i + 1..m {
                    self.current[k] = self.current[k - 1] + 1;
                }
                break;
            }
        }
        Some(out)
    }
}

pub fn combinations(n: usize, m: usize) -> Result<Combinations> {
    if m > n {
        return Err(Error::InvalidArgument(format!(
            "cannot choose {m} elements from {n}"
        )));
    }
    Ok(Combinations {
        n,
        current: (0..m).collect(),
        done: false,
    })
}

/// Largest number of patterns a full enumeration will visit.
pub const ENUMERATION_CAP: u128 = 10_000_000;

/// [`combinations`], refusing more than [`ENUMERATION_CAP`] subsets.
pub fn bounded_combinations(n: usize, m: usize) -> Result<Combinations> {
    let it = combinations(n, m)?;
    let count = binomial(n, m)?;
    if count > ENUMERATION_CAP {
        return Err(Error::CombinatorialBlowup {
            n,
            m,
            count,
            cap: ENUMERATION_CAP,
        });
    }
    Ok(it)
}

/// Uniformly random `m`-subset of `{0, ..., n-1}`.
pub fn random_combination<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> ModeConfiguration {
    let mut v = rand::seq::index::sample(rng, n, m).into_vec();
    v.sort_unstable();
    ModeConfiguration(v)
}

/// A bijection on `{0, ..., len-1}`; `map[i]` is the image of `i`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation {
    map: Vec<usize>,
}

impl Permutation {
    pub fn new(map: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; map.len()];
        for &v in &map {
            if v >= map.len() || seen[v] {
                return Err(Error::InvalidPermutation(format!("{map:?} is not a bijection")));
            }
            seen[v] = true;
        }
        Ok(Self { map })
    }

    pub fn identity(len: usize) -> Self {
        Self {
            map: (0..len).collect(),
        }
    }

    /// Rebuilds a permutation from its deranged part, given as
    /// `(position, image)` pairs; every other position is fixed.
    pub fn from_deranged_part(len: usize, deranged: &[(usize, usize)]) -> Result<Self> {
        let mut map: Vec<usize> = (0..len).collect();
        for &(p, img) in deranged {
            if p >= len || img >= len {
                return Err(Error::InvalidPermutation(format!(
                    "pair ({p}, {img}) out of range for length {len}"
                )));
            }
            if p == img {
                return Err(Error::InvalidPermutation(format!(
                    "position {p} listed as deranged but maps to itself"
                )));
            }
            map[p] = img;
        }
        Self::new(map)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.map.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    #[inline]
    pub fn map(&self) -> &[usize] {
        &self.map
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.map.len()];
        for (i, &v) in self.map.iter().enumerate() {
            inv[v] = i;
        }
        Self { map: inv }
    }

    pub fn is_involution(&self) -> bool {
        self.map.iter().enumerate().all(|(i, &v)| self.map[v] == i)
    }

    pub fn fixed_points(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.map[i] == i).collect()
    }

    pub fn moved_positions(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.map[i] != i).collect()
    }

    /// Number of moved positions, i.e. the interference order.
    pub fn order(&self) -> usize {
        self.map.iter().enumerate().filter(|(i, v)| *i != **v).count()
    }

    pub fn deranged_part(&self) -> Vec<(usize, usize)> {
        self.moved_positions()
            .into_iter()
            .map(|i| (i, self.map[i]))
            .collect()
    }
}

/// All derangements of `{0, ..., j-1}` in lexicographic order.
pub fn derangements(j: usize) -> Vec<Vec<usize>> {
    fn extend(pos: usize, cur: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        let j = used.len();
        if pos == j {
            out.push(cur.clone());
            return;
        }
        for v in 0..j {
            if v != pos && !used[v] {
                used[v] = true;
                cur.push(v);
                extend(pos + 1, cur, used, out);
                cur.pop();
                used[v] = false;
            }
        }
    }
    let mut out = Vec::new();
    extend(0, &mut Vec::with_capacity(j), &mut vec![false; j], &mut out);
    out
}

/// Permutations of `m` elements with exactly `j` moved positions, ordered by
/// moved-position set (lexicographic) and then by derangement.
///
/// `j == 1` yields nothing.
pub fn permutations_with_derangement_size(
    m: usize,
    j: usize,
) -> Result<impl Iterator<Item = Permutation>> {
    let subsets = combinations(m, j)?;
    let ders = Rc::new(derangements(j));
    Ok(subsets.flat_map(move |moved| {
        let ders = Rc::clone(&ders);
        (0..ders.len()).map(move |t| {
            let mut map: Vec<usize> = (0..m).collect();
            for (a, &b) in ders[t].iter().enumerate() {
                map[moved[a]] = moved[b];
            }
            Permutation { map }
        })
    }))
}

pub fn binomial(n: usize, k: usize) -> Result<u128> {
    if k > n {
        return Ok(0);
    }
    let k = k.min(n - k);
    let mut r: u128 = 1;
    for i in 0..k {
        // r * (n - i) is divisible by i + 1; cancel first to delay overflow
        let d = i as u128 + 1;
        let g = gcd(r, d);
        let factor = (n - i) as u128 / (d / g);
        r = (r / g)
            .checked_mul(factor)
            .ok_or(Error::Overflow("binomial coefficient"))?;
    }
    Ok(r)
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

pub fn factorial(n: usize) -> Result<u128> {
    (1..=n as u128).try_fold(1u128, |acc, i| acc.checked_mul(i).ok_or(Error::Overflow("factorial")))
}

/// Number of derangements `!n`.
pub fn subfactorial(n: usize) -> Result<u128> {
    let (mut prev, mut cur) = (1u128, 0u128);
    if n == 0 {
        return Ok(1);
    }
    for i in 2..=n as u128 {
        let next = (i - 1)
            .checked_mul(cur + prev)
            .ok_or(Error::Overflow("subfactorial"))?;
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

/// Rencontres number `D(m, f)`: permutations of `m` elements with exactly
/// `f` fixed points.
pub fn rencontres(m: usize, f: usize) -> Result<u128> {
    if f > m {
        return Err(Error::InvalidArgument(format!("{f} fixed points out of {m}")));
    }
    binomial(m, f)?
        .checked_mul(subfactorial(m - f)?)
        .ok_or(Error::Overflow("rencontres number"))
}

fn check_order(n: usize, m: usize, j: usize) -> Result<()> {
    if j > m || m > n {
        return Err(Error::InvalidArgument(format!(
            "need j <= m <= n, got j={j}, m={m}, n={n}"
        )));
    }
    Ok(())
}

/// Ways to place the `m - j` fixed points of a permutation once its
/// deranged part is pinned: `C(n - j, m - j)`.
pub fn count_covariant_assignments(n: usize, m: usize, j: usize) -> Result<u128> {
    check_order(n, m, j)?;
    binomial(n - j, m - j)
}

/// Number of `(tau, sigma, rho)` terms at order `j`:
/// `C(n, m) * C(m, j) * !j * C(m, j)`.
pub fn count_expansion_terms(n: usize, m: usize, j: usize) -> Result<u128> {
    check_order(n, m, j)?;
    let cmj = binomial(m, j)?;
    [binomial(n, m)?, cmj, subfactorial(j)?, cmj]
        .into_iter()
        .try_fold(1u128, |acc, v| {
            acc.checked_mul(v).ok_or(Error::Overflow("expansion term count"))
        })
}

pub fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|i| (i as f64).ln()).sum()
}

pub fn ln_binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

/// Binomial coefficient as a float; exact whenever it fits in 128 bits
/// and below 2^53.
pub fn binomial_f64(n: usize, k: usize) -> f64 {
    match binomial(n, k) {
        Ok(v) => v as f64,
        Err(_) => ln_binomial(n, k).exp(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use itertools::Itertools;
    use std::collections::HashSet;

    fn brute_force_fixed_point_count(m: usize, f: usize) -> usize {
        (0..m)
            .permutations(m)
            .filter(|p| p.iter().enumerate().filter(|(i, v)| *i == **v).count() == f)
            .count()
    }

    #[test]
    fn small_combinations() {
        let c: Vec<Vec<usize>> = combinations(3, 2).unwrap().map(|c| c.into_vec()).collect();
        assert_eq!(c, vec![vec![0, 1], vec![0, 2], vec![1, 2]]);
        let c: Vec<_> = combinations(5, 0).unwrap().collect();
        assert_eq!(c, vec![ModeConfiguration::empty()]);
        assert_eq!(combinations(8, 3).unwrap().count(), 56);
        assert!(combinations(2, 3).is_err());
    }

    #[test]
    fn combinations_are_lexicographic_and_unique() {
        for n in 0..9 {
            for m in 0..=n {
                let all: Vec<_> = combinations(n, m).unwrap().collect();
                assert_eq!(all.len() as u128, binomial(n, m).unwrap());
                assert!(all.windows(2).all(|w| w[0] < w[1]));
                let set: HashSet<_> = all.iter().cloned().collect();
                assert_eq!(set.len(), all.len());
            }
        }
    }

    #[test]
    fn configuration_validation_and_text() {
        assert!(ModeConfiguration::new(vec![1, 1]).is_err());
        assert!(ModeConfiguration::new(vec![2, 1]).is_err());
        let c: ModeConfiguration = "0|4|7".parse().unwrap();
        assert_eq!(c.as_slice(), &[0, 4, 7]);
        assert_eq!(c.to_string(), "0|4|7");
        assert_eq!("".parse::<ModeConfiguration>().unwrap(), ModeConfiguration::empty());
        assert!("3|1".parse::<ModeConfiguration>().is_err());
        assert_eq!(c.mask(), 0b1001_0001);
    }

    #[test]
    fn derangement_classes() {
        let id: Vec<_> = permutations_with_derangement_size(3, 0).unwrap().collect();
        assert_eq!(id, vec![Permutation::identity(3)]);

        let transpositions: Vec<_> = permutations_with_derangement_size(3, 2).unwrap().collect();
        let mut expected: Vec<Permutation> = (0..3)
            .permutations(3)
            .filter(|p| p.iter().enumerate().filter(|(i, v)| *i == **v).count() == 1)
            .map(|p| Permutation::new(p).unwrap())
            .collect();
        let mut got = transpositions.clone();
        got.sort();
        expected.sort();
        assert_eq!(got, expected);
        assert_eq!(got.len(), 3);

        assert_eq!(permutations_with_derangement_size(4, 4).unwrap().count(), 9);
        assert_eq!(permutations_with_derangement_size(5, 1).unwrap().count(), 0);
        assert!(permutations_with_derangement_size(3, 4).is_err());
    }

    #[test]
    fn fixed_point_grouping_partitions_symmetric_group() {
        for m in 1..=8 {
            let mut total = 0u128;
            let mut seen = HashSet::new();
            for j in 0..=m {
                let class: Vec<_> = permutations_with_derangement_size(m, j).unwrap().collect();
                assert_eq!(class.len() as u128, rencontres(m, m - j).unwrap());
                for p in class {
                    assert_eq!(p.order(), j);
                    if m <= 6 {
                        assert!(seen.insert(p));
                    }
                }
                total += rencontres(m, m - j).unwrap();
            }
            assert_eq!(total, factorial(m).unwrap());
        }
    }

    #[test]
    fn decomposition_round_trip() {
        for m in 0..=6 {
            for j in 0..=m {
                for p in permutations_with_derangement_size(m, j).unwrap() {
                    let fixed = p.fixed_points();
                    let der = p.deranged_part();
                    assert_eq!(fixed.len() + der.len(), m);
                    assert!(der.iter().all(|(a, b)| a != b));
                    assert_eq!(Permutation::from_deranged_part(m, &der).unwrap(), p);
                }
            }
        }
    }

    #[test]
    fn rencontres_against_brute_force() {
        assert_eq!(rencontres(3, 1).unwrap(), 3);
        assert_eq!(rencontres(4, 0).unwrap(), 9);
        for m in 0..=7 {
            assert_eq!(rencontres(m, m).unwrap(), 1);
            for f in 0..=m {
                assert_eq!(
                    rencontres(m, f).unwrap(),
                    brute_force_fixed_point_count(m, f) as u128,
                    "D({m},{f})"
                );
            }
        }
    }

    #[test]
    fn covariant_assignments() {
        for (n, m) in [(4, 3), (8, 6), (10, 4)] {
            assert_eq!(count_covariant_assignments(n, m, m).unwrap(), 1);
            assert_eq!(
                count_covariant_assignments(n, m, 0).unwrap(),
                binomial(n, m).unwrap()
            );
        }
        assert_eq!(count_covariant_assignments(4, 3, 2).unwrap(), 2);
        assert!(count_covariant_assignments(3, 4, 0).is_err());
    }

    #[test]
    fn expansion_term_counts() {
        assert_eq!(count_expansion_terms(7, 4, 0).unwrap(), binomial(7, 4).unwrap());
        // explicit (sigma, rho) enumeration for n = m = 3, j = 2
        let pairs = permutations_with_derangement_size(3, 2)
            .unwrap()
            .cartesian_product(combinations(3, 2).unwrap().collect::<Vec<_>>())
            .count();
        assert_eq!(pairs, 9);
        assert_eq!(count_expansion_terms(3, 3, 2).unwrap(), 9);
        for m in 1..=8usize {
            for k in 0..=m {
                for j in 0..=k {
                    let c = count_expansion_terms(10, m, j).unwrap();
                    let cap = binomial(10, m).unwrap() * (m as u128).pow(2 * k as u32);
                    assert!(c <= cap, "m={m} j={j} k={k}");
                }
            }
        }
    }

    #[test]
    fn wide_counts_use_128_bits() {
        let c = binomial(50, 25).unwrap();
        assert_eq!(c, 126_410_606_437_752);
        assert!(binomial(130, 65).unwrap() > u64::MAX as u128);
        assert!(factorial(40).is_err());
        assert!(binomial(200, 100).is_err());
    }

    #[test]
    fn float_binomials() {
        assert_eq!(binomial_f64(50, 25), 126_410_606_437_752.0);
        assert!((ln_binomial(10, 3) - 120f64.ln()).abs() < 1e-12);
        assert_eq!(binomial_f64(3, 4), 0.0);
    }
}
