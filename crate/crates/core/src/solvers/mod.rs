//! Classical samplers for quadratic binary models: exact enumeration,
//! simulated annealing, tabu search, an adaptive-penalty loop over the
//! natural-form model, and a continuous reference optimizer.

mod anneal;
mod brute;
mod constrained;
mod reference;
mod tabu;

pub use anneal::simulated_anneal;
pub use brute::{brute_force, MAX_BRUTE_BITS};
pub use constrained::{solve_constrained, ConstrainedSolveResult, RoundInfo};
pub use reference::{reference_continuous, ReferenceSolution};
pub use tabu::tabu_search;

use std::io::Write;
use std::time::Duration;

use crate::compiler::QuadraticModel;
use crate::encoding::BitString;
use crate::error::{Error, Result};

/// Sampler configuration shared by the stochastic backends.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplerConfig {
    pub seed: u64,
    /// Independent restarts; one sample is returned per read.
    pub num_reads: usize,
    /// Sweeps per read; one sweep proposes `n` single-bit flips (annealing)
    /// or applies one best-improving move (tabu).
    pub sweeps: usize,
    pub temperature_initial: f64,
    pub temperature_final: f64,
    pub tabu_tenure: usize,
    /// Wall-clock cutoff; reads past the limit return what they have.
    pub time_limit: Option<Duration>,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            seed: 0,
            num_reads: 50,
            sweeps: 1000,
            temperature_initial: 1.0,
            temperature_final: 1e-6,
            tabu_tenure: 10,
            time_limit: None,
        }
    }
}

impl SamplerConfig {
    /// Scale the temperature schedule to a model: start at the largest
    /// coefficient magnitude, finish three decades below the squared
    /// effective granularity so the final walk polishes low-order bits.
    pub fn scaled_to(mut self, model: &QuadraticModel, effective_granularity: f64) -> Self {
        let hot = model.max_abs_coefficient();
        if hot > 0.0 {
            self.temperature_initial = hot;
        }
        let cold = 1e-3 * effective_granularity * effective_granularity;
        if cold > 0.0 && cold < self.temperature_initial {
            self.temperature_final = cold;
        } else {
            self.temperature_final = self.temperature_initial * 1e-9;
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_reads == 0 {
            return Err(Error::InvalidConfig("num_reads must be at least 1".into()));
        }
        if self.sweeps == 0 {
            return Err(Error::InvalidConfig("sweeps must be at least 1".into()));
        }
        if !(self.temperature_final > 0.0 && self.temperature_initial > self.temperature_final) {
            return Err(Error::InvalidConfig(format!(
                "need temperature_initial > temperature_final > 0, got {} and {}",
                self.temperature_initial, self.temperature_final
            )));
        }
        Ok(())
    }
}

/// One drawn bit string with its energy under the model it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub bits: BitString,
    pub energy: f64,
    pub read: usize,
    /// Adaptive-penalty round; zero for single-model samplers.
    pub round: usize,
}

/// Samples sorted ascending by (energy, bits, read, round).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SampleSet {
    samples: Vec<Sample>,
}

impl SampleSet {
    pub fn from_samples(mut samples: Vec<Sample>) -> Self {
        samples.sort_by(|a, b| {
            a.energy
                .total_cmp(&b.energy)
                .then_with(|| a.bits.cmp(&b.bits))
                .then_with(|| a.read.cmp(&b.read))
                .then_with(|| a.round.cmp(&b.round))
        });
        SampleSet { samples }
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Lowest-energy sample.
    pub fn best(&self) -> Option<&Sample> {
        self.samples.first()
    }

    /// Deterministic merge of two sets.
    pub fn merge(self, other: SampleSet) -> SampleSet {
        let mut samples = self.samples;
        samples.extend(other.samples);
        SampleSet::from_samples(samples)
    }
}

/// Export samples as `read,round,energy,bits,feasible` rows. `feasible`
/// must align with the sample order.
pub fn write_samples_csv<W: Write>(
    set: &SampleSet,
    feasible: &[bool],
    mut out: W,
) -> std::io::Result<()> {
    writeln!(out, "read,round,energy,bits,feasible")?;
    for (s, &ok) in set.samples().iter().zip(feasible) {
        writeln!(out, "{},{},{},{},{}", s.read, s.round, s.energy, s.bits, ok)?;
    }
    Ok(())
}

/// Dense adjacency view of a quadratic model for O(degree) flip deltas.
pub(crate) struct Adjacency {
    pub n: usize,
    pub offset: f64,
    /// Diagonal (linear) coefficient per bit.
    diag: Vec<f64>,
    /// Off-diagonal couplings, mirrored both ways.
    neighbors: Vec<Vec<(usize, f64)>>,
}

impl Adjacency {
    pub fn new(model: &QuadraticModel) -> Self {
        let n = model.n_bits();
        let mut diag = vec![0.0; n];
        let mut neighbors = vec![Vec::new(); n];
        for (i, j, v) in model.entries() {
            if i == j {
                diag[i] += v;
            } else {
                neighbors[i].push((j, v));
                neighbors[j].push((i, v));
            }
        }
        Adjacency {
            n,
            offset: model.offset(),
            diag,
            neighbors,
        }
    }

    pub fn energy_of(&self, bits: &[bool]) -> f64 {
        let mut e = self.offset;
        for b in 0..self.n {
            if bits[b] {
                e += self.diag[b];
                for &(j, v) in &self.neighbors[b] {
                    if j > b && bits[j] {
                        e += v;
                    }
                }
            }
        }
        e
    }
}

/// Mutable walk state over an adjacency: current bits, per-bit local
/// fields, and a running energy.
pub(crate) struct FlipState<'a> {
    adj: &'a Adjacency,
    pub bits: Vec<bool>,
    /// h[b] = diag[b] + sum over set neighbors of the coupling.
    field: Vec<f64>,
    pub energy: f64,
}

impl<'a> FlipState<'a> {
    pub fn new(adj: &'a Adjacency, bits: Vec<bool>) -> Self {
        debug_assert_eq!(bits.len(), adj.n);
        let mut field = adj.diag.clone();
        for b in 0..adj.n {
            if bits[b] {
                for &(j, v) in &adj.neighbors[b] {
                    field[j] += v;
                }
            }
        }
        let energy = adj.energy_of(&bits);
        FlipState {
            adj,
            bits,
            field,
            energy,
        }
    }

    /// Energy change if bit `b` were flipped.
    #[inline]
    pub fn delta(&self, b: usize) -> f64 {
        if self.bits[b] {
            -self.field[b]
        } else {
            self.field[b]
        }
    }

    pub fn flip(&mut self, b: usize) {
        self.energy += self.delta(b);
        let now_set = !self.bits[b];
        self.bits[b] = now_set;
        let sign = if now_set { 1.0 } else { -1.0 };
        for &(j, v) in &self.adj.neighbors[b] {
            self.field[j] += sign * v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn random_model(n: usize, seed: u64) -> QuadraticModel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = QuadraticModel::new(n);
        for i in 0..n {
            m.add(i, i, rng.gen_range(-1.0..1.0));
            for j in (i + 1)..n {
                if rng.gen_bool(0.6) {
                    m.add(i, j, rng.gen_range(-1.0..1.0));
                }
            }
        }
        m.add_offset(rng.gen_range(-1.0..1.0));
        m
    }

    #[test]
    fn flip_state_matches_full_reevaluation() {
        let model = random_model(14, 3);
        let adj = Adjacency::new(&model);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let bits: Vec<bool> = (0..14).map(|_| rng.gen()).collect();
        let mut state = FlipState::new(&adj, bits);
        for _ in 0..500 {
            let b = rng.gen_range(0..14);
            let predicted = state.energy + state.delta(b);
            state.flip(b);
            let full = model.energy_of(&state.bits);
            assert!((predicted - state.energy).abs() < 1e-12);
            assert!((full - state.energy).abs() < 1e-9, "drift too large");
        }
    }

    #[test]
    fn sample_set_sorts_by_energy_then_bits() {
        let s = |bits: &str, e: f64, read: usize| Sample {
            bits: bits.parse().unwrap(),
            energy: e,
            read,
            round: 0,
        };
        let set = SampleSet::from_samples(vec![
            s("10", 1.0, 0),
            s("01", -1.0, 1),
            s("10", -1.0, 2),
        ]);
        let order: Vec<String> = set.samples().iter().map(|x| x.bits.to_string()).collect();
        assert_eq!(order, vec!["01", "10", "10"]);
        assert_eq!(set.best().unwrap().energy, -1.0);
    }

    #[test]
    fn merge_is_order_independent() {
        let mk = |seed: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let samples: Vec<Sample> = (0..20)
                .map(|read| Sample {
                    bits: BitString((0..6).map(|_| rng.gen()).collect()),
                    energy: rng.gen_range(-2.0..2.0),
                    read,
                    round: 0,
                })
                .collect();
            SampleSet::from_samples(samples)
        };
        let (a, b) = (mk(1), mk(2));
        assert_eq!(a.clone().merge(b.clone()), b.merge(a));
    }

    #[test]
    fn config_validation() {
        let mut c = SamplerConfig::default();
        c.temperature_final = 2.0;
        assert!(c.validate().is_err());
        let mut c = SamplerConfig::default();
        c.num_reads = 0;
        assert!(c.validate().is_err());
        assert!(SamplerConfig::default().validate().is_ok());
    }
}
