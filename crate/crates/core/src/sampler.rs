//! Metropolis sampling from the clamped truncated distribution.
//!
//! A chain holds an output pattern `q` (and, for the joint chain, the input
//! subset `tau` that produced it), proposes a new state and moves with
//! probability `min(1, P'(new) / P'(old))`. The target only needs to be
//! known up to normalization.

use std::collections::{BTreeMap, HashMap};

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::bounds::window_parameter;
use crate::combinatorics::{binomial_f64, bounded_combinations, combinations, random_combination, ModeConfiguration};
use crate::ensembles::{InterferometerUnitary, RngSeed};
use crate::error::{Error, Result};
use crate::exact::NoiseModel;
use crate::truncation::{
    clamp_probability, ExpansionEngine, ExpansionOptions, InputSet, TruncationSpec,
};

pub const DEFAULT_BURN_IN: u64 = 10_000;
pub const DEFAULT_MAX_DEAD_STEPS: u64 = 10_000;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Proposal {
    /// A uniformly random pattern, independent of the current one.
    #[default]
    UniformIndependent,
    /// Move one occupied mode to a uniformly chosen empty mode.
    SingleModeSwap,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub burn_in: u64,
    /// Steps between emitted samples; 1 emits every iterate.
    pub thinning: u64,
    pub proposal: Proposal,
    pub chain_count: usize,
    /// Consecutive steps on a zero-valued state before giving up.
    pub max_dead_steps: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            burn_in: DEFAULT_BURN_IN,
            thinning: 1,
            proposal: Proposal::UniformIndependent,
            chain_count: 1,
            max_dead_steps: DEFAULT_MAX_DEAD_STEPS,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.thinning == 0 {
            return Err(Error::InvalidArgument("thinning must be at least 1".into()));
        }
        if self.chain_count == 0 {
            return Err(Error::InvalidArgument("need at least one chain".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StateKey {
    pub tau: Option<ModeConfiguration>,
    pub q: ModeConfiguration,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainState {
    pub q: ModeConfiguration,
    pub tau: Option<ModeConfiguration>,
    /// Target value at the current state.
    pub value: f64,
    pub step: u64,
}

impl ChainState {
    pub fn key(&self) -> StateKey {
        StateKey {
            tau: self.tau.clone(),
            q: self.q.clone(),
        }
    }
}

/// Unnormalized, non-negative target.
pub trait Target {
    fn value(&mut self, state: &StateKey) -> Result<f64>;
}

impl<F: FnMut(&StateKey) -> Result<f64>> Target for F {
    fn value(&mut self, state: &StateKey) -> Result<f64> {
        self(state)
    }
}

/// Symmetric proposals over `m`-patterns in `modes` output modes and,
/// for the joint chain, `m`-subsets of `inputs` input modes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Proposer {
    pub kind: Proposal,
    pub modes: usize,
    /// `Some(n)` for the joint chain.
    pub inputs: Option<usize>,
}

fn swap_one<R: Rng + ?Sized>(config: &ModeConfiguration, bound: usize, rng: &mut R) -> ModeConfiguration {
    let m = config.len();
    if m == 0 || m == bound {
        return config.clone();
    }
    let out = rng.random_range(0..m);
    let free: Vec<usize> = (0..bound).filter(|i| !config.contains(i)).collect();
    let incoming = free[rng.random_range(0..free.len())];
    let mut v = config.to_vec();
    v[out] = incoming;
    ModeConfiguration::from_unsorted(v).expect("distinct modes")
}

impl Proposer {
    pub fn propose<R: Rng + ?Sized>(&self, state: &ChainState, rng: &mut R) -> StateKey {
        let m = state.q.len();
        match self.kind {
            Proposal::UniformIndependent => StateKey {
                tau: self.inputs.map(|n| random_combination(n, m, rng)),
                q: random_combination(self.modes, m, rng),
            },
            Proposal::SingleModeSwap => match (self.inputs, &state.tau) {
                (Some(n), Some(tau)) if n > m && rng.random_bool(0.5) => StateKey {
                    tau: Some(swap_one(tau, n, rng)),
                    q: state.q.clone(),
                },
                _ => StateKey {
                    tau: state.tau.clone(),
                    q: swap_one(&state.q, self.modes, rng),
                },
            },
        }
    }
}

/// One Metropolis update. Accepts with probability `min(1, new / old)`; a
/// zero-valued current state accepts any proposal. Returns the new state
/// and whether the move was accepted.
pub fn metropolis_step<T: Target + ?Sized, R: Rng + ?Sized>(
    state: &ChainState,
    target: &mut T,
    proposer: &Proposer,
    rng: &mut R,
) -> Result<(ChainState, bool)> {
    let candidate = proposer.propose(state, rng);
    let new_value = target.value(&candidate)?;
    let accept = state.value <= 0.0
        || new_value >= state.value
        || rng.random::<f64>() < new_value / state.value;
    let next = if accept {
        ChainState {
            q: candidate.q,
            tau: candidate.tau,
            value: new_value,
            step: state.step + 1,
        }
    } else {
        ChainState {
            step: state.step + 1,
            ..state.clone()
        }
    };
    Ok((next, accept))
}

/// A chain with burn-in, thinning and the dead-start guard.
pub struct Chain<T: Target> {
    state: ChainState,
    target: T,
    proposer: Proposer,
    config: SamplerConfig,
    dead_steps: u64,
    accepted: u64,
}

impl<T: Target> Chain<T> {
    pub fn new<R: Rng + ?Sized>(
        mut target: T,
        proposer: Proposer,
        config: SamplerConfig,
        m: usize,
        rng: &mut R,
    ) -> Result<Self> {
        config.validate()?;
        let key = StateKey {
            tau: proposer.inputs.map(|n| random_combination(n, m, rng)),
            q: random_combination(proposer.modes, m, rng),
        };
        let value = target.value(&key)?;
        Ok(Self {
            state: ChainState {
                q: key.q,
                tau: key.tau,
                value,
                step: 0,
            },
            target,
            proposer,
            config,
            dead_steps: 0,
            accepted: 0,
        })
    }

    pub fn state(&self) -> &ChainState {
        &self.state
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.state.step == 0 {
            0.0
        } else {
            self.accepted as f64 / self.state.step as f64
        }
    }

    pub fn advance<R: Rng + ?Sized>(&mut self, steps: u64, rng: &mut R) -> Result<()> {
        for _ in 0..steps {
            let (next, accepted) = metropolis_step(&self.state, &mut self.target, &self.proposer, rng)?;
            self.state = next;
            self.accepted += accepted as u64;
            if self.state.value <= 0.0 {
                self.dead_steps += 1;
                if self.dead_steps > self.config.max_dead_steps {
                    return Err(Error::NonErgodicStart {
                        steps: self.dead_steps,
                    });
                }
            } else {
                self.dead_steps = 0;
            }
        }
        Ok(())
    }

    pub fn burn_in<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        self.advance(self.config.burn_in, rng)
    }

    /// Advances by the thinning interval and returns the current state.
    pub fn next_sample<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<StateKey> {
        self.advance(self.config.thinning, rng)?;
        Ok(self.state.key())
    }
}

fn check_spec(noise: &NoiseModel, spec: &TruncationSpec) -> Result<()> {
    if !spec.clamp {
        return Err(Error::InvalidArgument(
            "sampling needs a clamped (non-negative) target".into(),
        ));
    }
    if spec.k > noise.m {
        return Err(Error::InvalidArgument(format!(
            "truncation order {} exceeds m = {}",
            spec.k, noise.m
        )));
    }
    Ok(())
}

/// Clamped `P'_m(q)`, memoized per pattern.
pub struct TruncatedTarget<'a> {
    u: &'a InterferometerUnitary,
    noise: NoiseModel,
    k: usize,
    options: ExpansionOptions,
    cache: HashMap<ModeConfiguration, f64>,
}

impl<'a> TruncatedTarget<'a> {
    pub fn new(
        u: &'a InterferometerUnitary,
        noise: NoiseModel,
        spec: TruncationSpec,
        options: ExpansionOptions,
    ) -> Result<Self> {
        check_spec(&noise, &spec)?;
        Ok(Self {
            u,
            noise,
            k: spec.k,
            options,
            cache: HashMap::new(),
        })
    }

    pub fn evaluate(&mut self, q: &ModeConfiguration) -> Result<f64> {
        if let Some(&v) = self.cache.get(q) {
            return Ok(v);
        }
        let engine = ExpansionEngine::new(self.u, q, self.noise.n, self.options)?;
        let c = engine.coefficients(self.k, &InputSet::All)?;
        let v = clamp_probability(c.partial_sum(self.noise.x, self.k)?);
        self.cache.insert(q.clone(), v);
        Ok(v)
    }
}

impl Target for TruncatedTarget<'_> {
    fn value(&mut self, state: &StateKey) -> Result<f64> {
        self.evaluate(&state.q)
    }
}

/// Clamped per-subset value `sum_{j <= k} x^j sum_sigma R(tau, sigma)`,
/// memoized per `(tau, q)`.
pub struct JointTarget<'a> {
    u: &'a InterferometerUnitary,
    noise: NoiseModel,
    k: usize,
    options: ExpansionOptions,
    cache: HashMap<(ModeConfiguration, ModeConfiguration), f64>,
}

impl<'a> JointTarget<'a> {
    pub fn new(
        u: &'a InterferometerUnitary,
        noise: NoiseModel,
        spec: TruncationSpec,
        options: ExpansionOptions,
    ) -> Result<Self> {
        check_spec(&noise, &spec)?;
        Ok(Self {
            u,
            noise,
            k: spec.k,
            options,
            cache: HashMap::new(),
        })
    }

    pub fn evaluate(&mut self, tau: &ModeConfiguration, q: &ModeConfiguration) -> Result<f64> {
        let key = (tau.clone(), q.clone());
        if let Some(&v) = self.cache.get(&key) {
            return Ok(v);
        }
        let engine = ExpansionEngine::new(self.u, q, self.noise.n, self.options)?;
        let c = engine.coefficients(self.k, &InputSet::Subset(vec![tau.clone()]))?;
        let scale = binomial_f64(self.noise.n, self.noise.m);
        let v = clamp_probability(scale * c.partial_sum(self.noise.x, self.k)?);
        self.cache.insert(key, v);
        Ok(v)
    }
}

impl Target for JointTarget<'_> {
    fn value(&mut self, state: &StateKey) -> Result<f64> {
        let tau = state
            .tau
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("joint target needs an input subset".into()))?;
        self.evaluate(tau, &state.q)
    }
}

fn check_dims(u: &InterferometerUnitary, noise: &NoiseModel) -> Result<()> {
    if noise.n > u.dim() {
        return Err(Error::InvalidArgument(format!(
            "{} input photons in {} modes",
            noise.n,
            u.dim()
        )));
    }
    Ok(())
}

/// `count` patterns from a chain targeting the clamped `P'_m`.
pub fn sample_fixed_m<R: Rng + ?Sized>(
    u: &InterferometerUnitary,
    noise: &NoiseModel,
    spec: &TruncationSpec,
    config: &SamplerConfig,
    count: usize,
    rng: &mut R,
) -> Result<Vec<ModeConfiguration>> {
    check_dims(u, noise)?;
    let target = TruncatedTarget::new(u, *noise, *spec, ExpansionOptions::default())?;
    if noise.m == 0 {
        return Ok(vec![ModeConfiguration::empty(); count]);
    }
    let proposer = Proposer {
        kind: config.proposal,
        modes: u.dim(),
        inputs: None,
    };
    let mut chain = Chain::new(target, proposer, *config, noise.m, rng)?;
    chain.burn_in(rng)?;
    (0..count).map(|_| Ok(chain.next_sample(rng)?.q)).collect()
}

/// `count` `(tau, q)` pairs from the joint chain over input subsets and
/// output patterns.
pub fn sample_joint<R: Rng + ?Sized>(
    u: &InterferometerUnitary,
    noise: &NoiseModel,
    spec: &TruncationSpec,
    config: &SamplerConfig,
    count: usize,
    rng: &mut R,
) -> Result<Vec<(ModeConfiguration, ModeConfiguration)>> {
    check_dims(u, noise)?;
    let target = JointTarget::new(u, *noise, *spec, ExpansionOptions::default())?;
    if noise.m == 0 {
        return Ok(vec![(ModeConfiguration::empty(), ModeConfiguration::empty()); count]);
    }
    let proposer = Proposer {
        kind: config.proposal,
        modes: u.dim(),
        inputs: Some(noise.n),
    };
    let mut chain = Chain::new(target, proposer, *config, noise.m, rng)?;
    chain.burn_in(rng)?;
    (0..count)
        .map(|_| {
            let s = chain.next_sample(rng)?;
            Ok((s.tau.expect("joint chain carries tau"), s.q))
        })
        .collect()
}

/// Samples with a random number of detections. Each draw picks
/// `m ~ Binomial(n, eta)` from stream `seed`, then takes the next sample of
/// the chain for that `m`; chains are created on first use with stream
/// `seed + 1 + m` and persist across draws. The vacuum yields the empty
/// pattern.
pub fn sample_full(
    u: &InterferometerUnitary,
    noise: &NoiseModel,
    spec: &TruncationSpec,
    config: &SamplerConfig,
    count: usize,
    seed: RngSeed,
) -> Result<Vec<(usize, ModeConfiguration)>> {
    check_dims(u, noise)?;
    config.validate()?;
    if !spec.clamp {
        return Err(Error::InvalidArgument(
            "sampling needs a clamped (non-negative) target".into(),
        ));
    }
    let binom = Binomial::new(noise.n as u64, noise.eta)
        .map_err(|e| Error::InvalidArgument(format!("photon-number law: {e}")))?;
    let mut master = seed.rng();
    let mut chains: BTreeMap<usize, (Chain<TruncatedTarget>, rand_chacha::ChaCha8Rng)> = BTreeMap::new();
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let m = binom.sample(&mut master) as usize;
        if m == 0 {
            out.push((0, ModeConfiguration::empty()));
            continue;
        }
        if !chains.contains_key(&m) {
            let sub = noise.with_detected(m)?;
            let sub_spec = TruncationSpec {
                k: spec.k.min(m),
                clamp: true,
            };
            let target = TruncatedTarget::new(u, sub, sub_spec, ExpansionOptions::default())?;
            let proposer = Proposer {
                kind: config.proposal,
                modes: u.dim(),
                inputs: None,
            };
            let mut rng = seed.offset(1 + m as u64).rng();
            let mut chain = Chain::new(target, proposer, *config, m, &mut rng)?;
            chain.burn_in(&mut rng)?;
            chains.insert(m, (chain, rng));
        }
        let (chain, rng) = chains.get_mut(&m).expect("chain just created");
        out.push((m, chain.next_sample(rng)?.q));
    }
    Ok(out)
}

/// Photon-number window `[n eta - C sqrt n, n eta + C sqrt n]`, rounded
/// outward and clipped to `[0, n]`, with `C = sqrt(ln(8 / eps) / 2)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MWindow {
    pub low: usize,
    pub high: usize,
    pub c: f64,
}

pub fn m_window(n: usize, eta: f64, epsilon: f64) -> Result<MWindow> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::EtaOutOfRange { eta });
    }
    let c = window_parameter(epsilon)?;
    let sqrt_n = (n as f64).sqrt();
    let limit = sqrt_n * (1.0 - eta);
    if c >= limit {
        return Err(Error::WindowExceedsRange { c, limit });
    }
    let center = n as f64 * eta;
    let low = (center - c * sqrt_n).floor().max(0.0) as usize;
    let high = ((center + c * sqrt_n).ceil() as usize).min(n);
    Ok(MWindow { low, high, c })
}

/// Clamped `P'_m(q)` for every `m`-pattern, unnormalized.
pub fn truncated_distribution(
    u: &InterferometerUnitary,
    noise: &NoiseModel,
    spec: &TruncationSpec,
    options: &ExpansionOptions,
) -> Result<Vec<(ModeConfiguration, f64)>> {
    let mut target = TruncatedTarget::new(u, *noise, *spec, *options)?;
    bounded_combinations(u.dim(), noise.m)?
        .map(|q| {
            let v = target.evaluate(&q)?;
            Ok((q, v))
        })
        .collect()
}

/// Unnormalized weights keyed by pattern.
pub type Weights = Vec<(ModeConfiguration, f64)>;

/// `sum_tau clamp(f(tau, q))` for every `m`-pattern: the `q`-marginal of
/// the joint target, unnormalized. Also returns the per-subset totals.
pub fn joint_marginals(
    u: &InterferometerUnitary,
    noise: &NoiseModel,
    spec: &TruncationSpec,
    options: &ExpansionOptions,
) -> Result<(Weights, Weights)> {
    let mut target = JointTarget::new(u, *noise, *spec, *options)?;
    let subsets: Vec<ModeConfiguration> = combinations(noise.n, noise.m)?.collect();
    let mut per_tau = vec![0.0; subsets.len()];
    let q_marginal = bounded_combinations(u.dim(), noise.m)?
        .map(|q| {
            let mut total = 0.0;
            for (i, tau) in subsets.iter().enumerate() {
                let v = target.evaluate(tau, &q)?;
                per_tau[i] += v;
                total += v;
            }
            Ok((q, total))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((q_marginal, subsets.into_iter().zip(per_tau).collect()))
}

/// Rescales to unit mass; an all-zero input is returned unchanged.
pub fn normalize<K: Clone>(weights: &[(K, f64)]) -> Vec<(K, f64)> {
    let total: f64 = weights.iter().map(|(_, w)| w).sum();
    if total <= 0.0 {
        return weights.to_vec();
    }
    weights.iter().map(|(k, w)| (k.clone(), w / total)).collect()
}

/// Relative frequencies of the samples.
pub fn empirical_distribution<K: Ord + Clone>(samples: &[K]) -> BTreeMap<K, f64> {
    let mut counts = BTreeMap::new();
    for s in samples {
        *counts.entry(s.clone()).or_insert(0usize) += 1;
    }
    let n = samples.len() as f64;
    counts.into_iter().map(|(k, c)| (k, c as f64 / n)).collect()
}

/// `(1/2) sum |p - q|` over the union of supports; `reference` must be
/// normalized.
pub fn total_variation<K: Ord + Clone>(empirical: &BTreeMap<K, f64>, reference: &[(K, f64)]) -> f64 {
    let mut seen = 0.0;
    let mut acc = 0.0;
    for (k, p) in reference {
        let e = empirical.get(k).copied().unwrap_or(0.0);
        seen += e;
        acc += (e - p).abs();
    }
    // empirical mass outside the reference support
    acc += (1.0 - seen).max(0.0);
    acc / 2.0
}
