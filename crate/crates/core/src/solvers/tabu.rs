//! Tabu search over single-bit flips.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::compiler::QuadraticModel;
use crate::encoding::BitString;
use crate::error::{Error, Result};

use super::{Adjacency, FlipState, Sample, SampleSet, SamplerConfig};

/// Greedy best-improving flips with a recency tabu list.
///
/// Each move scans every bit and applies the best admissible flip; a bit
/// stays tabu for `tabu_tenure` moves after it was flipped, unless the
/// move would beat the read's best energy (aspiration). Worsening moves
/// are taken to escape local minima. With tenure zero the search reduces
/// to plain greedy descent and stops at the first local minimum, so the
/// final energy never exceeds the initial one. Restarts follow the reads
/// convention of the annealer, RNG seeded with `seed XOR read_index`.
pub fn tabu_search(model: &QuadraticModel, config: &SamplerConfig) -> Result<SampleSet> {
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
        .map(|read| tabu_read(model, &adj, config, read, started))
        .collect();
    Ok(SampleSet::from_samples(samples))
}

fn tabu_read(
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
    // Move index until which each bit stays tabu. The expiry is jittered
    // around the configured tenure so the escape trajectory does not
    // settle into a deterministic cycle.
    let mut tabu_until = vec![0usize; n];
    let tenure = config.tabu_tenure;

    for step in 1..=config.sweeps {
        let mut chosen: Option<(usize, f64)> = None;
        let mut n_ties = 0u32;
        let mut fallback: Option<(usize, f64)> = None;
        for b in 0..n {
            let delta = state.delta(b);
            if fallback.map_or(true, |(_, d)| delta < d) {
                fallback = Some((b, delta));
            }
            let aspires = state.energy + delta < best_energy;
            if tabu_until[b] >= step && !aspires {
                continue;
            }
            match chosen {
                Some((_, d)) if delta > d => {}
                Some((_, d)) if delta == d => {
                    // Reservoir choice among exact ties.
                    n_ties += 1;
                    if rng.gen_ratio(1, n_ties + 1) {
                        chosen = Some((b, delta));
                    }
                }
                _ => {
                    n_ties = 0;
                    chosen = Some((b, delta));
                }
            }
        }
        // Everything tabu and nothing aspiring: take the best move anyway.
        let (b, delta) = chosen.or(fallback).expect("n >= 1");
        if delta >= 0.0 && tenure == 0 {
            break;
        }
        state.flip(b);
        tabu_until[b] = step + tenure + if tenure > 0 { rng.gen_range(0..=tenure) } else { 0 };
        if state.energy < best_energy {
            best_energy = state.energy;
            best_bits.copy_from_slice(&state.bits);
        }
        if let Some(limit) = config.time_limit {
            if started.elapsed() >= limit {
                break;
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
