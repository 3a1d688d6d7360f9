use proptest::prelude::*;
use rand::Rng;

use noisy_bs::combinatorics::random_combination;
use noisy_bs::ensembles::{sample_haar_unitary, sample_haar_unitary_seeded};
use noisy_bs::exact::prob_postselected;
use noisy_bs::truncation::{
    covariance_with_stderr, expansion_coefficients, r_term_direct, truncated_probability, ExpansionOptions, InputSet,
    TruncationSpec,
};
use noisy_bs::{ModeConfiguration, NoiseModel, Permutation, RngSeed};

#[test]
fn full_order_truncation_matches_exact_model() {
    let mut rng = RngSeed::new(21).rng();
    let xs = [0.0, 0.3, 0.7, 1.0];
    for case in 0..100 {
        let n = rng.random_range(1..=6usize);
        let m = rng.random_range(0..=n.min(5));
        let modes = rng.random_range(n..=n + 5);
        let u = sample_haar_unitary(modes, &mut rng).unwrap();
        let q = random_combination(modes, m, &mut rng);
        let noise = NoiseModel::new(xs[case % 4], 0.5, n, m).unwrap();
        let p = truncated_probability(&u, &q, &noise, &TruncationSpec::raw(m), &ExpansionOptions::default())
            .unwrap();
        let exact = prob_postselected(&u, &q, &noise).unwrap();
        assert!((p - exact).abs() <= 1e-9, "case {case}: {p} vs {exact}");
    }
}

#[test]
fn accumulated_coefficients_are_real() {
    let mut rng = RngSeed::new(22).rng();
    for _ in 0..30 {
        let u = sample_haar_unitary(9, &mut rng).unwrap();
        let q = random_combination(9, 5, &mut rng);
        let c = expansion_coefficients(&u, &q, 6, 5, &InputSet::All, &ExpansionOptions::default()).unwrap();
        assert_eq!(c.coeffs[1], 0.0);
        for (v, im) in c.coeffs.iter().zip(&c.imag_residue) {
            assert!(*im <= 1e-9 * v.abs() + 1e-12);
        }
    }
}

fn config(v: &[usize]) -> ModeConfiguration {
    ModeConfiguration::new(v.to_vec()).unwrap()
}

fn perm(v: &[usize]) -> Permutation {
    Permutation::new(v.to_vec()).unwrap()
}

/// Real parts of two expansion terms are correlated over Haar unitaries only
/// when their deranged parts agree up to inversion (the real part does not
/// see the difference between a permutation and its inverse). The rule is
/// exact to leading order in `1/N`; at `N = 6` the excluded pairs still show
/// correlations of 0.2 to 0.5, so the check runs with `N >> m^2`.
#[test]
fn covariance_selection_rule() {
    let modes = 48;
    let trials = 2000;
    let q = config(&[0, 1, 2]);
    let t012 = config(&[0, 1, 2]);
    let t013 = config(&[0, 1, 3]);
    let swap01 = perm(&[1, 0, 2]);
    let swap12 = perm(&[0, 2, 1]);
    let cycle = perm(&[1, 2, 0]);
    let identity = perm(&[0, 1, 2]);
    // (first term, second term, deranged parts equal up to inversion)
    let pairs = [
        ((&t012, &swap01), (&t013, &swap01), true),
        ((&t012, &cycle), (&t012, &cycle.inverse()), true),
        ((&t012, &cycle), (&t012, &cycle), true),
        ((&t012, &swap01), (&t012, &swap12), false),
        ((&t012, &identity), (&t012, &swap01), false),
        ((&t012, &swap01), (&t013, &cycle), false),
        ((&t012, &cycle), (&t013, &swap01), false),
    ];
    let mut samples = vec![(Vec::new(), Vec::new()); pairs.len()];
    for t in 0..trials {
        let u = sample_haar_unitary_seeded(modes, RngSeed::new(23).with_stream(t)).unwrap();
        for (i, ((ta, sa), (tb, sb), _)) in pairs.iter().enumerate() {
            samples[i].0.push(r_term_direct(&u, ta, &q, sa).unwrap().re);
            samples[i].1.push(r_term_direct(&u, tb, &q, sb).unwrap().re);
        }
    }
    for (i, (_, _, related)) in pairs.iter().enumerate() {
        let (cov, stderr) = covariance_with_stderr(&samples[i].0, &samples[i].1);
        if *related {
            assert!(cov > 4.0 * stderr, "pair {i}: {cov} (stderr {stderr})");
        } else {
            assert!(cov.abs() <= 4.0 * stderr, "pair {i}: {cov} (stderr {stderr})");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn inverse_permutation_conjugates_the_term(
        seed in any::<u64>(),
        map in Just(vec![0usize, 1, 2, 3]).prop_shuffle(),
    ) {
        let u = sample_haar_unitary_seeded(7, RngSeed::new(seed)).unwrap();
        let tau = config(&[1, 2, 4, 6]);
        let q = config(&[0, 3, 4, 5]);
        let sigma = perm(&map);
        let a = r_term_direct(&u, &tau, &q, &sigma).unwrap();
        let b = r_term_direct(&u, &tau, &q, &sigma.inverse()).unwrap();
        prop_assert!((a - b.conj()).norm() <= 1e-15 * a.norm().max(1.0));
    }

    #[test]
    fn partial_sums_accumulate_the_coefficients(seed in any::<u64>(), x in 0.0f64..=1.0) {
        let u = sample_haar_unitary_seeded(7, RngSeed::new(seed)).unwrap();
        let q = config(&[1, 3, 5, 6]);
        let c = expansion_coefficients(&u, &q, 5, 4, &InputSet::All, &ExpansionOptions::default()).unwrap();
        let mut running = 0.0;
        for k in 0..=4 {
            running += x.powi(k as i32) * c.coeffs[k] / 5.0;
            prop_assert!((c.partial_sum(x, k).unwrap() - running).abs() <= 1e-15);
        }
    }
}
