use std::collections::BTreeMap;

use noisy_bs::sampler::{
    metropolis_step, sample_fixed_m, Chain, ChainState, Proposal, Proposer, SamplerConfig, StateKey,
};
use noisy_bs::truncation::TruncationSpec;
use noisy_bs::{ensembles::sample_haar_unitary_seeded, ModeConfiguration, NoiseModel, RngSeed, Result};

const WEIGHTS: [f64; 5] = [1.0, 2.0, 3.0, 4.0, 5.0];

fn five_states(key: &StateKey) -> Result<f64> {
    Ok(WEIGHTS[key.q[0]])
}

#[test]
fn detailed_balance_on_five_states() {
    let steps = 1_000_000;
    let mut target = five_states;
    let mut rng = RngSeed::new(31).rng();
    for kind in [Proposal::UniformIndependent, Proposal::SingleModeSwap] {
        let proposer = Proposer { kind, modes: 5, inputs: None };
        let mut state = ChainState {
            q: ModeConfiguration::new(vec![0]).unwrap(),
            tau: None,
            value: 1.0,
            step: 0,
        };
        let mut flows = [[0u64; 5]; 5];
        let mut visits = [0u64; 5];
        for _ in 0..steps {
            let (next, _) = metropolis_step(&state, &mut target, &proposer, &mut rng).unwrap();
            flows[state.q[0]][next.q[0]] += 1;
            visits[next.q[0]] += 1;
            state = next;
        }
        for a in 0..5 {
            for b in a + 1..5 {
                let (ab, ba) = (flows[a][b] as f64, flows[b][a] as f64);
                let stderr = (ab + ba).sqrt();
                assert!((ab - ba).abs() <= 4.0 * stderr, "{kind:?} {a}->{b}: {ab} vs {ba}");
            }
        }
        let total: f64 = WEIGHTS.iter().sum();
        for (s, &v) in visits.iter().enumerate() {
            let freq = v as f64 / steps as f64;
            assert!((freq - WEIGHTS[s] / total).abs() < 0.01, "{kind:?} state {s}: {freq}");
        }
    }
}

#[test]
fn zero_target_states_are_not_emitted_after_burn_in() {
    let mut target = |key: &StateKey| -> Result<f64> { Ok(if key.q[0] % 2 == 0 { 1.0 } else { 0.0 }) };
    let proposer = Proposer { kind: Proposal::UniformIndependent, modes: 6, inputs: None };
    let config = SamplerConfig { burn_in: 1000, ..SamplerConfig::default() };
    let mut rng = RngSeed::new(32).rng();
    let mut chain = Chain::new(&mut target, proposer, config, 1, &mut rng).unwrap();
    chain.burn_in(&mut rng).unwrap();
    let mut seen = BTreeMap::new();
    for _ in 0..10_000 {
        let s = chain.next_sample(&mut rng).unwrap();
        assert_eq!(s.q[0] % 2, 0);
        *seen.entry(s.q[0]).or_insert(0) += 1;
    }
    assert_eq!(seen.len(), 3);
}

#[test]
fn same_seed_reproduces_the_sample_stream() {
    let u = sample_haar_unitary_seeded(8, RngSeed::new(4)).unwrap();
    let noise = NoiseModel::new(0.9, 0.7, 4, 3).unwrap();
    let spec = TruncationSpec::new(2);
    let config = SamplerConfig { burn_in: 500, proposal: Proposal::SingleModeSwap, ..SamplerConfig::default() };
    let draw = |stream| {
        let mut rng = RngSeed::new(33).with_stream(stream).rng();
        sample_fixed_m(&u, &noise, &spec, &config, 2000, &mut rng).unwrap()
    };
    assert_eq!(draw(0), draw(0));
    assert_ne!(draw(0), draw(1));
}
