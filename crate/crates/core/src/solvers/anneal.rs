//! Single-bit-flip Metropolis annealing with a geometric schedule.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::compiler::QuadraticModel;
use crate::encoding::BitString;
use crate::error::{Error, Result};

use super::{Adjacency, FlipState, Sample, SampleSet, SamplerConfig};

/// Simulated annealing; one best-seen sample per read.
///
/// Each read owns an RNG seeded with `seed XOR read_index`, so reads are
/// reproducible independently of scheduling. The temperature decays
/// geometrically from `temperature_initial` to `temperature_final` over
/// the configured sweeps; a sweep proposes `n` uniformly chosen flips.
pub fn simulated_anneal(model: &QuadraticModel, config: &SamplerConfig) -> Result<SampleSet> {
    config.validate()?;
    if model.n_bits() == 0 {
        return Err(Error::InvalidConfig(
            "cannot sample a model with zero bits".into(),
        ));
    }
    let adj = Adjacency::new(model);
    let started = Instant::now();
    let samples: Vec<Sample> = (0..config.num_reads)
        .into_par_iter()
        .map(|read| anneal_read(model, &adj, config, read, started))
        .collect();
    Ok(SampleSet::from_samples(samples))
}

fn anneal_read(
    model: &QuadraticModel,
    adj: &Adjacency,
    config: &SamplerConfig,
    read: usize,
    started: Instant,
) -> Sample {
    let n = adj.n;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ read as u64);
    let init: Vec<bool> = (0..n).map(|_| rng.gen()).collect();
    let mut state = FlipState::new(adj, init);
    let mut best_bits = state.bits.clone();
    let mut best_energy = state.energy;

    let t0 = config.temperature_initial;
    let ratio = config.temperature_final / t0;
    let denom = (config.sweeps - 1).max(1) as f64;
    'sweeps: for sweep in 0..config.sweeps {
        let temperature = t0 * ratio.powf(sweep as f64 / denom);
        for _ in 0..n {
            let b = rng.gen_range(0..n);
            let delta = state.delta(b);
            if delta <= 0.0 || rng.gen::<f64>() < (-delta / temperature).exp() {
                state.flip(b);
                if state.energy < best_energy {
                    best_energy = state.energy;
                    best_bits.copy_from_slice(&state.bits);
                }
            }
        }
        if let Some(limit) = config.time_limit {
            if started.elapsed() >= limit {
                break 'sweeps;
            }
        }
    }

    let exact = model.energy_of(&best_bits);
    Sample {
        bits: BitString(best_bits),
        energy: exact,
        read,
        round: 0,
    }
}
