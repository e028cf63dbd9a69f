//! Binary encoding of asset weights and slack values.
//!
//! Each asset gets a fixed-width block of K bits covering its weight box
//! `[weight_min, weight_max]`; each inequality constraint gets a slack
//! block of the same width scaled to the largest residual the box allows.
//! Bit k of a block (index k-1, LSB first) carries `2^(k-1) * p` of the
//! block's range, with `p = 1/2^width`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ConstraintOp, Problem};

/// Largest supported block width; keeps `1/2^K` representable exactly.
pub const MAX_BITS: usize = 62;

/// A fixed-length vector of bits. Index 0 is the least significant bit of
/// the first block; the ASCII form prints index 0 leftmost.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BitString(pub Vec<bool>);

impl BitString {
    pub fn zeros(len: usize) -> Self {
        BitString(vec![false; len])
    }

    pub fn ones(len: usize) -> Self {
        BitString(vec![true; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.0
    }
}

impl std::fmt::Display for BitString {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for &b in &self.0 {
            write!(f, "{}", if b { '1' } else { '0' })?;
        }
        Ok(())
    }
}

impl std::str::FromStr for BitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Parse(format!("invalid bit character {other:?}"))),
            })
            .collect::<Result<Vec<bool>>>()
            .map(BitString)
    }
}

impl Serialize for BitString {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for BitString {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Slack block for one inequality constraint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlackBlock {
    /// Index into `Problem::multi_constraints`.
    pub constraint: usize,
    pub offset: usize,
    pub bits: usize,
    /// Largest slack value the box allows (beta_j >= 0).
    pub bound: f64,
    /// +1 for `<=`, -1 for `>=`.
    pub sign: f64,
}

/// Slack block for the volatility inequality, only used when emitting a
/// natural-form constrained model with explicit slack diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolaSlackBlock {
    pub offset: usize,
    pub bits: usize,
    /// Bound equals the volatility target.
    pub bound: f64,
}

/// The bit map of a compiled problem: one K-bit block per asset followed
/// by one slack block per inequality constraint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodingLayout {
    pub n_assets: usize,
    pub bits_per_asset: usize,
    pub asset_bit_offset: Vec<usize>,
    pub slack_blocks: Vec<SlackBlock>,
    pub vola_slack_block: Option<VolaSlackBlock>,
    pub total_bits: usize,
}

impl EncodingLayout {
    /// Bit index range of asset `i`.
    pub fn asset_bits(&self, i: usize) -> std::ops::Range<usize> {
        let start = self.asset_bit_offset[i];
        start..start + self.bits_per_asset
    }

    /// Largest effective granularity over all assets; the width of the
    /// normalization tolerance band.
    pub fn max_effective_granularity(&self, problem: &Problem) -> f64 {
        problem
            .assets()
            .iter()
            .map(|a| a.box_width())
            .fold(0.0_f64, f64::max)
            * granularity_unchecked(self.bits_per_asset)
    }
}

/// Granularity of a K-bit expansion, `1/2^K`.
pub fn granularity(bits: usize) -> Result<f64> {
    if bits == 0 || bits > MAX_BITS {
        return Err(Error::InvalidConfig(format!(
            "bit width must be in 1..={MAX_BITS}, got {bits}"
        )));
    }
    Ok(granularity_unchecked(bits))
}

fn granularity_unchecked(bits: usize) -> f64 {
    1.0 / (1u64 << bits) as f64
}

/// Effective granularity of a weight constrained to `[weight_min, weight_max]`.
pub fn effective_granularity(bits: usize, weight_min: f64, weight_max: f64) -> f64 {
    (weight_max - weight_min) * granularity_unchecked(bits)
}

/// Fraction in `[0, 1 - p]` encoded by a bit slice, LSB first.
pub fn decode_fraction(bits: &[bool]) -> f64 {
    let p = granularity_unchecked(bits.len());
    let mut term = p;
    let mut acc = 0.0;
    for &b in bits {
        if b {
            acc += term;
        }
        term *= 2.0;
    }
    acc
}

/// Weight encoded by a K-bit slice over the box `[weight_min, weight_max]`.
///
/// Always lands in `[weight_min, weight_min + dw * (1 - p))`, so the upper
/// bound is respected by construction whenever the box has positive width.
pub fn decode_weight(bits: &[bool], weight_min: f64, weight_max: f64) -> f64 {
    weight_min + (weight_max - weight_min) * decode_fraction(bits)
}

/// Nearest representable bit pattern for a target weight.
pub fn encode_weight_nearest(
    target: f64,
    weight_min: f64,
    weight_max: f64,
    bits: usize,
) -> Vec<bool> {
    let width = weight_max - weight_min;
    let levels = 1u64 << bits;
    let level = if width > 0.0 {
        let raw = ((target - weight_min) / width * levels as f64).round();
        (raw.max(0.0) as u64).min(levels - 1)
    } else {
        0
    };
    (0..bits).map(|k| (level >> k) & 1 == 1).collect()
}

/// Build the bit layout for a problem at K bits per asset.
///
/// Every `<=`/`>=` multi-asset constraint gets a K-bit slack block whose
/// bound is the largest residual over the continuous weight box; equality
/// constraints get none. Errors if some constraint cannot be satisfied
/// anywhere in the box.
pub fn build_layout(
    problem: &Problem,
    bits_per_asset: usize,
    include_vola_slack: bool,
) -> Result<EncodingLayout> {
    build_layout_opts(problem, bits_per_asset, include_vola_slack, true, None)
}

/// Layout with only asset blocks, as used by the natural-form model path.
pub fn build_natural_layout(problem: &Problem, bits_per_asset: usize) -> Result<EncodingLayout> {
    build_layout_opts(problem, bits_per_asset, false, false, None)
}

/// Full-control layout constructor. `slack_bits` overrides the default
/// slack block width (which equals `bits_per_asset`).
pub fn build_layout_opts(
    problem: &Problem,
    bits_per_asset: usize,
    include_vola_slack: bool,
    include_linear_slack: bool,
    slack_bits: Option<usize>,
) -> Result<EncodingLayout> {
    granularity(bits_per_asset)?;
    let s_bits = slack_bits.unwrap_or(bits_per_asset);
    granularity(s_bits)?;

    let n = problem.n_assets();
    let asset_bit_offset: Vec<usize> = (0..n).map(|i| i * bits_per_asset).collect();
    let mut next = n * bits_per_asset;

    let mut slack_blocks = Vec::new();
    if include_linear_slack {
        for (j, c) in problem.multi_constraints().iter().enumerate() {
            let (bound, sign) = match c.op {
                ConstraintOp::Eq => continue,
                ConstraintOp::Le => (c.rhs - extremal_lhs(problem, &c.coefficients, false), 1.0),
                ConstraintOp::Ge => (extremal_lhs(problem, &c.coefficients, true) - c.rhs, -1.0),
            };
            if bound < 0.0 {
                return Err(Error::Infeasible {
                    index: j,
                    detail: format!(
                        "no point of the weight box satisfies lhs {} {}",
                        c.op, c.rhs
                    ),
                });
            }
            slack_blocks.push(SlackBlock {
                constraint: j,
                offset: next,
                bits: s_bits,
                bound,
                sign,
            });
            next += s_bits;
        }
    }

    let vola_slack_block = if include_vola_slack {
        let block = VolaSlackBlock {
            offset: next,
            bits: s_bits,
            bound: problem.sigma2_target(),
        };
        next += s_bits;
        Some(block)
    } else {
        None
    };

    Ok(EncodingLayout {
        n_assets: n,
        bits_per_asset,
        asset_bit_offset,
        slack_blocks,
        vola_slack_block,
        total_bits: next,
    })
}

/// Extremal value of `coeffs . w` over the continuous weight box
/// (maximum when `max` is true, else minimum).
fn extremal_lhs(problem: &Problem, coeffs: &[f64], max: bool) -> f64 {
    problem
        .assets()
        .iter()
        .zip(coeffs)
        .map(|(a, &c)| {
            let (lo, hi) = (c * a.weight_min, c * a.weight_max);
            if max {
                lo.max(hi)
            } else {
                lo.min(hi)
            }
        })
        .sum()
}

/// A bit string decoded against a layout.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodedSolution {
    pub weights: Vec<f64>,
    /// Slack value per slack block, in `slack_blocks` order.
    pub slacks: Vec<f64>,
    pub vola_slack: Option<f64>,
}

/// Decode a full bit string into weights and slack values.
pub fn decode_solution(
    bits: &BitString,
    layout: &EncodingLayout,
    problem: &Problem,
) -> Result<DecodedSolution> {
    if bits.len() != layout.total_bits {
        return Err(Error::Dimension {
            expected: layout.total_bits,
            got: bits.len(),
        });
    }
    let weights = problem
        .assets()
        .iter()
        .enumerate()
        .map(|(i, a)| decode_weight(&bits.0[layout.asset_bits(i)], a.weight_min, a.weight_max))
        .collect();
    let slacks = layout
        .slack_blocks
        .iter()
        .map(|s| s.bound * decode_fraction(&bits.0[s.offset..s.offset + s.bits]))
        .collect();
    let vola_slack = layout
        .vola_slack_block
        .as_ref()
        .map(|s| s.bound * decode_fraction(&bits.0[s.offset..s.offset + s.bits]));
    Ok(DecodedSolution {
        weights,
        slacks,
        vola_slack,
    })
}

/// Nearest representable bit string for a vector of target weights; slack
/// bits are left at zero.
pub fn encode_nearest(
    targets: &[f64],
    layout: &EncodingLayout,
    problem: &Problem,
) -> Result<BitString> {
    if targets.len() != layout.n_assets {
        return Err(Error::Dimension {
            expected: layout.n_assets,
            got: targets.len(),
        });
    }
    let mut bits = vec![false; layout.total_bits];
    for (i, (&t, a)) in targets.iter().zip(problem.assets()).enumerate() {
        let block = encode_weight_nearest(t, a.weight_min, a.weight_max, layout.bits_per_asset);
        bits[layout.asset_bits(i)].copy_from_slice(&block);
    }
    Ok(BitString(bits))
}
