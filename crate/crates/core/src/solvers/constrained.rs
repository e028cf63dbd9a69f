//! Adaptive-penalty loop over a natural-form constrained model.
//!
//! Each round compiles the constraints into a penalty model with the
//! current per-constraint weights, samples it, and multiplies the weight
//! of every constraint the round's best sample violates. Samples carry
//! the objective (negated-return) energy so they stay comparable across
//! rounds with different penalty weights.

use crate::compiler::{assemble_adaptive, ConstrainedModel, NaturalKind};
use crate::encoding::BitString;
use crate::error::{Error, Result};
use crate::model::ConstraintOp;
use crate::seed;

use super::{simulated_anneal, Sample, SampleSet, SamplerConfig};

/// Residual tolerance for natural-form linear constraints.
const LINEAR_TOL: f64 = 1e-12;

/// Penalty-weight state of one round.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RoundInfo {
    pub round: usize,
    /// Weights in effect during the round, aligned with the constraints.
    pub lambdas: Vec<f64>,
    /// Constraints violated by the round's lowest-energy sample; these
    /// were escalated for the next round.
    pub escalated: Vec<usize>,
    pub feasible_samples: usize,
}

#[derive(Debug, Clone)]
pub struct ConstrainedSolveResult {
    /// Union of all rounds' samples, truncated to the asset bits and
    /// re-scored with the objective energy.
    pub samples: SampleSet,
    /// Best feasible sample by objective energy, if any round found one.
    pub incumbent: Option<Sample>,
    pub feasible: bool,
    pub rounds: Vec<RoundInfo>,
}

/// Indices of constraints the bit string violates, under the model's
/// tolerances: the budget band is the effective granularity, linear
/// residuals get 1e-12, the volatility bound is strict.
pub fn violated_constraints(cmodel: &ConstrainedModel, bits: &[bool]) -> Vec<usize> {
    cmodel
        .constraints
        .iter()
        .enumerate()
        .filter_map(|(idx, c)| {
            let v = c.form.energy_of(bits);
            let ok = match c.kind {
                NaturalKind::Budget => (v - c.rhs).abs() <= cmodel.norm_tolerance + 1e-15,
                NaturalKind::MultiLinear(_) => match c.op {
                    ConstraintOp::Le => v - c.rhs <= LINEAR_TOL,
                    ConstraintOp::Ge => c.rhs - v <= LINEAR_TOL,
                    ConstraintOp::Eq => (v - c.rhs).abs() <= LINEAR_TOL,
                },
                NaturalKind::Volatility => v <= c.rhs,
            };
            if ok {
                None
            } else {
                Some(idx)
            }
        })
        .collect()
}

/// Run the adaptive-penalty loop.
///
/// Stops early when the feasible incumbent survives two consecutive
/// rounds unchanged, or when two consecutive rounds end with a feasible
/// best sample (so no weight moved). If no feasible sample appears within
/// `max_rounds`, the result is flagged infeasible rather than failing.
pub fn solve_constrained(
    cmodel: &ConstrainedModel,
    config: &SamplerConfig,
    eta: f64,
    max_rounds: usize,
) -> Result<ConstrainedSolveResult> {
    if !(eta > 1.0) {
        return Err(Error::InvalidConfig(format!(
            "penalty growth factor must exceed 1, got {eta}"
        )));
    }
    if max_rounds == 0 {
        return Err(Error::InvalidConfig("max_rounds must be at least 1".into()));
    }
    config.validate()?;

    let mut lambdas = cmodel.default_lambdas.clone();
    let mut all_samples: Vec<Sample> = Vec::new();
    let mut rounds: Vec<RoundInfo> = Vec::new();
    let mut incumbent: Option<Sample> = None;
    let mut prev_incumbent_bits: Option<BitString> = None;
    let mut prev_round_feasible = false;

    for round in 0..max_rounds {
        let qubo = assemble_adaptive(cmodel, &lambdas)?;
        let round_config = SamplerConfig {
            seed: seed::derive(config.seed, round as u64),
            ..config.clone()
        };
        let raw = simulated_anneal(&qubo, &round_config)?;

        let mut feasible_samples = 0usize;
        let mut round_best_violations: Option<Vec<usize>> = None;
        for s in raw.samples() {
            let asset_bits = &s.bits.as_slice()[..cmodel.n_bits];
            let violations = violated_constraints(cmodel, asset_bits);
            // The set is energy-sorted, so the first sample is the round's
            // recommendation under the current weights.
            if round_best_violations.is_none() {
                round_best_violations = Some(violations.clone());
            }
            let objective_energy = cmodel.objective.energy_of(asset_bits);
            let sample = Sample {
                bits: BitString(asset_bits.to_vec()),
                energy: objective_energy,
                read: s.read,
                round,
            };
            if violations.is_empty() {
                feasible_samples += 1;
                let better = match &incumbent {
                    None => true,
                    Some(cur) => (sample.energy, &sample.bits) < (cur.energy, &cur.bits),
                };
                if better {
                    incumbent = Some(sample.clone());
                }
            }
            all_samples.push(sample);
        }

        let best_violations = round_best_violations.unwrap_or_default();
        let round_feasible = best_violations.is_empty();
        rounds.push(RoundInfo {
            round,
            lambdas: lambdas.clone(),
            escalated: if round_feasible {
                Vec::new()
            } else {
                best_violations.clone()
            },
            feasible_samples,
        });

        let incumbent_bits = incumbent.as_ref().map(|s| s.bits.clone());
        let incumbent_repeated =
            incumbent_bits.is_some() && incumbent_bits == prev_incumbent_bits;
        if incumbent_repeated || (round_feasible && prev_round_feasible) {
            break;
        }
        prev_incumbent_bits = incumbent_bits;
        prev_round_feasible = round_feasible;

        for &idx in &best_violations {
            lambdas[idx] *= eta;
        }
    }

    Ok(ConstrainedSolveResult {
        samples: SampleSet::from_samples(all_samples),
        feasible: incumbent.is_some(),
        incumbent,
        rounds,
    })
}
