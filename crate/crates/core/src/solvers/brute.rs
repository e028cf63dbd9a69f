//! Exact minimization by Gray-code enumeration.

use crate::compiler::QuadraticModel;
use crate::encoding::BitString;
use crate::error::{Error, Result};

use super::{Adjacency, FlipState};

/// Enumeration guard: at most 2^30 states.
pub const MAX_BRUTE_BITS: usize = 30;

/// Exact global minimum of a quadratic model.
///
/// Walks all states in Gray-code order with incremental energy updates.
/// Ties are broken toward the lexicographically smallest bit string,
/// comparing index 0 as the most significant position. The returned
/// energy is re-evaluated from scratch.
pub fn brute_force(model: &QuadraticModel) -> Result<(BitString, f64)> {
    let n = model.n_bits();
    if n > MAX_BRUTE_BITS {
        return Err(Error::TooLarge {
            bits: n,
            max: MAX_BRUTE_BITS,
        });
    }
    let adj = Adjacency::new(model);
    let mut state = FlipState::new(&adj, vec![false; n]);
    let mut best_bits = state.bits.clone();
    let mut best_energy = state.energy;
    let total: u64 = 1u64 << n;
    for t in 1..total {
        let b = t.trailing_zeros() as usize;
        state.flip(b);
        if state.energy < best_energy
            || (state.energy == best_energy && state.bits < best_bits)
        {
            best_energy = state.energy;
            best_bits.copy_from_slice(&state.bits);
        }
    }
    let exact = model.energy_of(&best_bits);
    Ok((BitString(best_bits), exact))
}
