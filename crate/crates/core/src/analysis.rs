//! Solution scoring: constraint checks with the discretization-aware
//! tolerances, portfolio KPIs, success probabilities, experiment records,
//! and the closed-form rounding-error statistics with a Monte Carlo
//! cross-check.

use std::collections::BTreeMap;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::encoding::{decode_solution, DecodedSolution, EncodingLayout};
use crate::error::{Error, Result};
use crate::model::{portfolio_return, portfolio_variance, ConstraintOp, Problem};
use crate::solvers::SampleSet;

/// Residual tolerance for multi-asset linear constraints.
const LINEAR_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintKind {
    Normalization,
    MultiLinear,
    Volatility,
}

impl std::fmt::Display for ConstraintKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConstraintKind::Normalization => write!(f, "normalization"),
            ConstraintKind::MultiLinear => write!(f, "multi_linear"),
            ConstraintKind::Volatility => write!(f, "volatility"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationEntry {
    pub label: String,
    pub kind: ConstraintKind,
    /// Signed residual: sum-of-weights minus one, lhs minus rhs, or
    /// variance minus target.
    pub residual: f64,
    pub satisfied: bool,
}

/// Per-sample constraint audit. Single-asset bounds never appear: the
/// encoding satisfies them by construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationReport {
    pub entries: Vec<ViolationEntry>,
    pub not_satisfied: usize,
}

impl ViolationReport {
    pub fn is_clean(&self) -> bool {
        self.not_satisfied == 0
    }
}

/// Check every constraint of a decoded solution.
///
/// Normalization is satisfied within the effective-granularity band
/// `|sum w - 1| <= p_eff`; linear residuals must obey their operator
/// within 1e-12; the volatility bound is strict.
pub fn check_constraints(
    decoded: &DecodedSolution,
    problem: &Problem,
    layout: &EncodingLayout,
) -> ViolationReport {
    let weights = &decoded.weights;
    let mut entries = Vec::with_capacity(2 + problem.multi_constraints().len());

    let p_eff = layout.max_effective_granularity(problem);
    let sum: f64 = weights.iter().sum();
    // The absolute epsilon keeps an exactly-one-step deviation inside the
    // band: both sides of the comparison carry float summation noise.
    entries.push(ViolationEntry {
        label: "normalization".into(),
        kind: ConstraintKind::Normalization,
        residual: sum - 1.0,
        satisfied: (sum - 1.0).abs() <= p_eff + 1e-15,
    });

    for (j, c) in problem.multi_constraints().iter().enumerate() {
        let residual = c.lhs(weights) - c.rhs;
        let satisfied = match c.op {
            ConstraintOp::Le => residual <= LINEAR_TOL,
            ConstraintOp::Ge => residual >= -LINEAR_TOL,
            ConstraintOp::Eq => residual.abs() <= LINEAR_TOL,
        };
        entries.push(ViolationEntry {
            label: format!("multi_{j}"),
            kind: ConstraintKind::MultiLinear,
            residual,
            satisfied,
        });
    }

    let variance = portfolio_variance(weights, problem).expect("decoded weights match problem");
    entries.push(ViolationEntry {
        label: "volatility".into(),
        kind: ConstraintKind::Volatility,
        residual: variance - problem.sigma2_target(),
        satisfied: variance <= problem.sigma2_target(),
    });

    let not_satisfied = entries.iter().filter(|e| !e.satisfied).count();
    ViolationReport {
        entries,
        not_satisfied,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Kpis {
    pub expected_return: f64,
    /// Portfolio variance `w^T Sigma w`.
    pub volatility: f64,
    /// Return over standard deviation (risk-free rate zero); `None` when
    /// the variance vanishes.
    pub sharpe: Option<f64>,
}

pub fn kpis(weights: &[f64], problem: &Problem) -> Result<Kpis> {
    let expected_return = portfolio_return(weights, problem)?;
    let volatility = portfolio_variance(weights, problem)?;
    let sharpe = if volatility > 0.0 {
        Some(expected_return / volatility.sqrt())
    } else {
        None
    };
    Ok(Kpis {
        expected_return,
        volatility,
        sharpe,
    })
}

/// Fraction of reports with no violated constraint.
pub fn success_probability(reports: &[ViolationReport]) -> Result<f64> {
    if reports.is_empty() {
        return Err(Error::InvalidConfig(
            "success probability needs at least one report".into(),
        ));
    }
    let clean = reports.iter().filter(|r| r.is_clean()).count();
    Ok(clean as f64 / reports.len() as f64)
}

/// Violation counts per constraint label, for the bar-chart export.
pub fn violation_breakdown(reports: &[ViolationReport]) -> Vec<(String, ConstraintKind, usize)> {
    let mut counts: BTreeMap<String, (ConstraintKind, usize)> = BTreeMap::new();
    for report in reports {
        for e in &report.entries {
            let slot = counts.entry(e.label.clone()).or_insert((e.kind, 0));
            if !e.satisfied {
                slot.1 += 1;
            }
        }
    }
    counts
        .into_iter()
        .map(|(label, (kind, n))| (label, kind, n))
        .collect()
}

/// Write the breakdown as `constraint,kind,violations` rows.
pub fn write_violation_csv<W: Write>(
    breakdown: &[(String, ConstraintKind, usize)],
    mut out: W,
) -> std::io::Result<()> {
    writeln!(out, "constraint,kind,violations")?;
    for (label, kind, n) in breakdown {
        writeln!(out, "{label},{kind},{n}")?;
    }
    Ok(())
}

/// Moments of the per-weight rounding error distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorStats {
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
}

/// Closed-form moments of the rounding error for granularity `p`.
///
/// A uniform value in [0, 1] rounded to the nearest representable level
/// errs by at most p/2 everywhere except the top segment [1-p, 1], whose
/// levels stop at 1-p; that segment contributes the whole bias:
/// mean p^2/2, variance p^2/12 + p^3/4 - p^4/4, and a skewness of
/// (p^4/4 - 3 mean var - mean^3) / var^(3/2), about 3 sqrt(3) p for
/// small p.
pub fn error_stats_theory(p: f64) -> Result<ErrorStats> {
    if !(p > 0.0 && p <= 0.5) {
        return Err(Error::InvalidConfig(format!(
            "granularity must lie in (0, 0.5], got {p}"
        )));
    }
    let mean = p * p / 2.0;
    let variance = p * p / 12.0 + p * p * p / 4.0 - p * p * p * p / 4.0;
    let third_raw = p * p * p * p / 4.0;
    let skewness = (third_raw - 3.0 * mean * variance - mean.powi(3)) / variance.powf(1.5);
    Ok(ErrorStats {
        mean,
        variance,
        skewness,
    })
}

/// Rounding error of `u` in [0, 1) against the representable levels
/// {0, p, ..., 1-p}: the top segment has no level above 1-p to round to.
pub fn rounding_error(u: f64, p: f64) -> f64 {
    if u >= 1.0 - p {
        u - (1.0 - p)
    } else {
        let m = (u / p).round();
        u - m * p
    }
}

/// Monte Carlo estimate of the rounding-error moments.
///
/// Variance uses the unbiased (n-1) estimator; skewness the adjusted
/// estimator `sqrt(n(n-1))/(n-2) * m3 / m2^(3/2)` on the biased central
/// moments m2, m3.
pub fn error_stats_monte_carlo(p: f64, n_samples: usize, seed: u64) -> Result<ErrorStats> {
    if !(p > 0.0 && p <= 0.5) {
        return Err(Error::InvalidConfig(format!(
            "granularity must lie in (0, 0.5], got {p}"
        )));
    }
    if n_samples < 10_000 {
        return Err(Error::InvalidConfig(format!(
            "need at least 10^4 samples, got {n_samples}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = n_samples as f64;
    let mut sum = 0.0;
    let mut errors = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let e = rounding_error(rng.gen::<f64>(), p);
        sum += e;
        errors.push(e);
    }
    let mean = sum / n;
    let (mut m2, mut m3) = (0.0, 0.0);
    for e in &errors {
        let d = e - mean;
        m2 += d * d;
        m3 += d * d * d;
    }
    let variance = m2 / (n - 1.0);
    m2 /= n;
    m3 /= n;
    let skewness = (n * (n - 1.0)).sqrt() / (n - 2.0) * m3 / m2.powf(1.5);
    Ok(ErrorStats {
        mean,
        variance,
        skewness,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub read: usize,
    pub round: usize,
    pub energy: f64,
    pub expected_return: f64,
    pub volatility: f64,
    pub sharpe: Option<f64>,
    pub not_satisfied: usize,
    pub sum_weights: f64,
    pub feasible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Medians {
    pub expected_return: f64,
    pub volatility: f64,
    /// Median over samples with a defined ratio.
    pub sharpe: Option<f64>,
    pub sum_weights: f64,
    pub energy: f64,
}

/// Fixed-bin counts of the per-sample sum of weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<usize>,
}

impl Histogram {
    fn build(values: &[f64], bins: usize) -> Histogram {
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut counts = vec![0usize; bins];
        if hi > lo {
            for &v in values {
                let idx = (((v - lo) / (hi - lo)) * bins as f64) as usize;
                counts[idx.min(bins - 1)] += 1;
            }
        } else {
            counts[0] = values.len();
        }
        Histogram { lo, hi, counts }
    }
}

/// One experiment's decoded, scored sample set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub samples: Vec<SampleRecord>,
    /// Index of the highest-return sample with no violation, if any.
    pub best_feasible: Option<usize>,
    pub medians: Medians,
    pub success_probability: f64,
    pub sum_weights_histogram: Histogram,
}

impl ExperimentRecord {
    pub fn best_feasible_record(&self) -> Option<&SampleRecord> {
        self.best_feasible.map(|i| &self.samples[i])
    }
}

fn median_of(mut values: Vec<f64>) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Decode and score every sample: KPIs, violation report, best feasible
/// sample by expected return, medians and the sum-of-weights histogram.
pub fn summarize(
    sample_set: &SampleSet,
    problem: &Problem,
    layout: &EncodingLayout,
) -> Result<ExperimentRecord> {
    if sample_set.is_empty() {
        return Err(Error::InvalidConfig(
            "cannot summarize an empty sample set".into(),
        ));
    }
    let mut samples: Vec<SampleRecord> = Vec::with_capacity(sample_set.len());
    let mut best_feasible: Option<usize> = None;
    for (idx, s) in sample_set.samples().iter().enumerate() {
        let decoded = decode_solution(&s.bits, layout, problem)?;
        let report = check_constraints(&decoded, problem, layout);
        let k = kpis(&decoded.weights, problem)?;
        let record = SampleRecord {
            read: s.read,
            round: s.round,
            energy: s.energy,
            expected_return: k.expected_return,
            volatility: k.volatility,
            sharpe: k.sharpe,
            not_satisfied: report.not_satisfied,
            sum_weights: decoded.weights.iter().sum(),
            feasible: report.is_clean(),
        };
        if record.feasible {
            let better = match best_feasible {
                None => true,
                Some(b) => record.expected_return > samples[b].expected_return,
            };
            if better {
                best_feasible = Some(idx);
            }
        }
        samples.push(record);
    }

    let sum_weights: Vec<f64> = samples.iter().map(|r| r.sum_weights).collect();
    let sharpes: Vec<f64> = samples.iter().filter_map(|r| r.sharpe).collect();
    let medians = Medians {
        expected_return: median_of(samples.iter().map(|r| r.expected_return).collect()),
        volatility: median_of(samples.iter().map(|r| r.volatility).collect()),
        sharpe: if sharpes.is_empty() {
            None
        } else {
            Some(median_of(sharpes))
        },
        sum_weights: median_of(sum_weights.clone()),
        energy: median_of(samples.iter().map(|r| r.energy).collect()),
    };
    let feasible_count = samples.iter().filter(|r| r.feasible).count();

    Ok(ExperimentRecord {
        success_probability: feasible_count as f64 / samples.len() as f64,
        sum_weights_histogram: Histogram::build(&sum_weights, 20),
        samples,
        best_feasible,
        medians,
    })
}

/// Write per-sample rows as `energy,return,volatility,sharpe,not_satisfied,sum_weights`.
pub fn write_record_csv<W: Write>(record: &ExperimentRecord, mut out: W) -> std::io::Result<()> {
    writeln!(out, "energy,return,volatility,sharpe,not_satisfied,sum_weights")?;
    for r in &record.samples {
        let sharpe = match r.sharpe {
            Some(v) => v.to_string(),
            None => "nan".to_string(),
        };
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.energy, r.expected_return, r.volatility, sharpe, r.not_satisfied, r.sum_weights
        )?;
    }
    Ok(())
}
