//! Portfolio problem definition, validation and continuous-space evaluation.

use std::path::Path;

use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance for the covariance symmetry check, scaled by the
/// largest entry magnitude.
const SYMMETRY_REL_TOL: f64 = 1e-12;

/// The smallest eigenvalue of the covariance must be >= -PSD_REL_TOL * trace.
const PSD_REL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AssetClass {
    #[serde(rename = "EQ")]
    Equity,
    #[serde(rename = "FI")]
    FixedIncome,
    #[serde(rename = "MM")]
    MoneyMarket,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Asset {
    pub name: String,
    pub class: AssetClass,
    /// Mean return, as a fraction per period.
    #[serde(rename = "ret")]
    pub mean_return: f64,
    /// Lower weight bound, in [0, 1].
    #[serde(rename = "min")]
    pub weight_min: f64,
    /// Upper weight bound, in [0, 1].
    #[serde(rename = "max")]
    pub weight_max: f64,
}

impl Asset {
    /// Width of the admissible weight interval.
    pub fn box_width(&self) -> f64 {
        self.weight_max - self.weight_min
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConstraintOp {
    #[serde(rename = "eq")]
    Eq,
    #[serde(rename = "le")]
    Le,
    #[serde(rename = "ge")]
    Ge,
}

impl std::fmt::Display for ConstraintOp {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConstraintOp::Eq => write!(f, "=="),
            ConstraintOp::Le => write!(f, "<="),
            ConstraintOp::Ge => write!(f, ">="),
        }
    }
}

/// One multi-asset linear constraint: `coefficients . w  <op>  rhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearConstraint {
    #[serde(rename = "coeffs")]
    pub coefficients: Vec<f64>,
    pub op: ConstraintOp,
    pub rhs: f64,
}

impl LinearConstraint {
    /// Left-hand side value at the given weights.
    pub fn lhs(&self, weights: &[f64]) -> f64 {
        dot(&self.coefficients, weights)
    }
}

/// A validated portfolio optimization problem.
///
/// Immutable after construction; asset order is authoritative and every
/// vector or matrix indexes by it.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    assets: Vec<Asset>,
    /// Row-major N x N covariance.
    covariance: Vec<f64>,
    sigma2_target: f64,
    multi_constraints: Vec<LinearConstraint>,
}

/// On-disk JSON schema for a problem.
#[derive(Serialize, Deserialize)]
struct ProblemFile {
    assets: Vec<Asset>,
    covariance: CovarianceRepr,
    sigma2_target: f64,
    constraints: Vec<LinearConstraint>,
}

/// Covariance in a file is either nested rows or a flat row-major array.
#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum CovarianceRepr {
    Rows(Vec<Vec<f64>>),
    Flat(Vec<f64>),
}

impl CovarianceRepr {
    fn into_flat(self, n: usize) -> Result<Vec<f64>> {
        match self {
            CovarianceRepr::Flat(v) => Ok(v),
            CovarianceRepr::Rows(rows) => {
                let mut flat = Vec::with_capacity(n * n);
                for row in &rows {
                    flat.extend_from_slice(row);
                }
                if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                    return Err(Error::Validation(format!(
                        "covariance must be {n}x{n}, got {} rows",
                        rows.len()
                    )));
                }
                Ok(flat)
            }
        }
    }
}

impl Problem {
    /// Build and validate a problem. `covariance` is row-major N x N.
    pub fn new(
        assets: Vec<Asset>,
        covariance: Vec<f64>,
        sigma2_target: f64,
        multi_constraints: Vec<LinearConstraint>,
    ) -> Result<Self> {
        let p = Problem {
            assets,
            covariance,
            sigma2_target,
            multi_constraints,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn n_assets(&self) -> usize {
        self.assets.len()
    }

    pub fn assets(&self) -> &[Asset] {
        &self.assets
    }

    pub fn returns(&self) -> Vec<f64> {
        self.assets.iter().map(|a| a.mean_return).collect()
    }

    /// Covariance entry (i, j).
    pub fn cov(&self, i: usize, j: usize) -> f64 {
        self.covariance[i * self.n_assets() + j]
    }

    pub fn covariance_rows(&self) -> Vec<Vec<f64>> {
        let n = self.n_assets();
        (0..n)
            .map(|i| self.covariance[i * n..(i + 1) * n].to_vec())
            .collect()
    }

    pub fn sigma2_target(&self) -> f64 {
        self.sigma2_target
    }

    pub fn multi_constraints(&self) -> &[LinearConstraint] {
        &self.multi_constraints
    }

    fn validate(&self) -> Result<()> {
        let n = self.assets.len();
        if n == 0 {
            return Err(Error::Validation("problem has no assets".into()));
        }
        for (i, a) in self.assets.iter().enumerate() {
            for (label, v) in [
                ("ret", a.mean_return),
                ("min", a.weight_min),
                ("max", a.weight_max),
            ] {
                if !v.is_finite() {
                    return Err(Error::Validation(format!(
                        "asset {i} ({:?}): field {label} is not finite",
                        a.name
                    )));
                }
            }
            if a.weight_min < 0.0 {
                return Err(Error::Validation(format!(
                    "asset {i} ({:?}): weight_min {} < 0",
                    a.name, a.weight_min
                )));
            }
            if a.weight_min > a.weight_max {
                return Err(Error::Validation(format!(
                    "asset {i} ({:?}): weight_min {} > weight_max {}",
                    a.name, a.weight_min, a.weight_max
                )));
            }
            if a.weight_max > 1.0 {
                return Err(Error::Validation(format!(
                    "asset {i} ({:?}): weight_max {} > 1",
                    a.name, a.weight_max
                )));
            }
        }
        if self.covariance.len() != n * n {
            return Err(Error::Validation(format!(
                "covariance has {} entries, expected {}",
                self.covariance.len(),
                n * n
            )));
        }
        if let Some(v) = self.covariance.iter().find(|v| !v.is_finite()) {
            return Err(Error::Validation(format!(
                "covariance contains non-finite entry {v}"
            )));
        }
        let scale = self
            .covariance
            .iter()
            .fold(0.0_f64, |acc, v| acc.max(v.abs()));
        let sym_tol = SYMMETRY_REL_TOL * scale.max(f64::MIN_POSITIVE);
        for i in 0..n {
            for j in (i + 1)..n {
                let d = (self.cov(i, j) - self.cov(j, i)).abs();
                if d > sym_tol {
                    return Err(Error::Validation(format!(
                        "covariance not symmetric at ({i}, {j}): {} vs {}",
                        self.cov(i, j),
                        self.cov(j, i)
                    )));
                }
            }
        }
        let (min_eig, trace) = self.smallest_eigenvalue_and_trace();
        if min_eig < -PSD_REL_TOL * trace.abs() {
            return Err(Error::Validation(format!(
                "covariance is not positive semidefinite: smallest eigenvalue {min_eig:.3e} \
                 below tolerance {:.3e}",
                -PSD_REL_TOL * trace.abs()
            )));
        }
        if !(self.sigma2_target.is_finite() && self.sigma2_target > 0.0) {
            return Err(Error::Validation(format!(
                "sigma2_target {} must be positive",
                self.sigma2_target
            )));
        }
        // Small slack absorbs float summation error, e.g. ten boxes of 0.1.
        let min_sum: f64 = self.assets.iter().map(|a| a.weight_min).sum();
        let max_sum: f64 = self.assets.iter().map(|a| a.weight_max).sum();
        if min_sum > 1.0 + 1e-9 {
            return Err(Error::Validation(format!(
                "sum of weight_min is {min_sum}, normalization to 1 is unreachable"
            )));
        }
        if max_sum < 1.0 - 1e-9 {
            return Err(Error::Validation(format!(
                "sum of weight_max is {max_sum}, normalization to 1 is unreachable"
            )));
        }
        for (j, c) in self.multi_constraints.iter().enumerate() {
            if c.coefficients.len() != n {
                return Err(Error::Validation(format!(
                    "constraint {j}: {} coefficients, expected {n}",
                    c.coefficients.len()
                )));
            }
            if c.coefficients.iter().all(|&v| v == 0.0) {
                return Err(Error::Validation(format!(
                    "constraint {j}: all coefficients are zero"
                )));
            }
            if c.coefficients.iter().any(|v| !v.is_finite()) || !c.rhs.is_finite() {
                return Err(Error::Validation(format!(
                    "constraint {j}: non-finite coefficient or rhs"
                )));
            }
        }
        Ok(())
    }

    fn smallest_eigenvalue_and_trace(&self) -> (f64, f64) {
        let n = self.n_assets();
        let m = DMatrix::from_row_slice(n, n, &self.covariance);
        let trace = m.trace();
        let eig = m.symmetric_eigen();
        let min_eig = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        (min_eig, trace)
    }
}

/// Load a problem from a JSON file and validate it. Asset order in the
/// file is preserved.
pub fn load_problem(path: impl AsRef<Path>) -> Result<Problem> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    problem_from_json(&text)
}

/// Parse a problem from JSON text and validate it.
pub fn problem_from_json(text: &str) -> Result<Problem> {
    let file: ProblemFile =
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let n = file.assets.len();
    Problem::new(
        file.assets,
        file.covariance.into_flat(n)?,
        file.sigma2_target,
        file.constraints,
    )
}

/// Serialize a problem to the JSON file schema (covariance as nested rows).
pub fn problem_to_json(problem: &Problem) -> String {
    let file = ProblemFile {
        assets: problem.assets.clone(),
        covariance: CovarianceRepr::Rows(problem.covariance_rows()),
        sigma2_target: problem.sigma2_target,
        constraints: problem.multi_constraints.clone(),
    };
    serde_json::to_string_pretty(&file).expect("problem serialization cannot fail")
}

/// Write a problem to a JSON file.
pub fn save_problem(problem: &Problem, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, problem_to_json(problem)).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Expected portfolio return `r . w`.
pub fn portfolio_return(weights: &[f64], problem: &Problem) -> Result<f64> {
    check_len(weights, problem)?;
    Ok(problem
        .assets
        .iter()
        .zip(weights)
        .map(|(a, w)| a.mean_return * w)
        .sum())
}

/// Portfolio variance `w^T Sigma w`.
pub fn portfolio_variance(weights: &[f64], problem: &Problem) -> Result<f64> {
    check_len(weights, problem)?;
    let n = problem.n_assets();
    let mut acc = 0.0;
    for i in 0..n {
        let mut row = 0.0;
        for j in 0..n {
            row += problem.cov(i, j) * weights[j];
        }
        acc += weights[i] * row;
    }
    Ok(acc)
}

fn check_len(weights: &[f64], problem: &Problem) -> Result<()> {
    if weights.len() != problem.n_assets() {
        return Err(Error::Dimension {
            expected: problem.n_assets(),
            got: weights.len(),
        });
    }
    Ok(())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Generate a deterministic synthetic problem for scaling studies.
///
/// The covariance is `F F^T` plus diagonal noise, hence positive
/// semidefinite by construction. Returns are uniform in [-0.02, 0.10].
/// Weight boxes default to [0, 0.1]; when the box sum does not strictly
/// exceed 1 they widen to [0, 2/n], because a binary expansion never
/// reaches the top of its box and normalization must stay reachable on
/// the lattice, not just in the continuum. The volatility target is 1.5x
/// the variance of the equal-weight portfolio.
pub fn generate_instance(n_assets: usize, n_factors: usize, seed: u64) -> Result<Problem> {
    if n_assets == 0 || n_factors == 0 || n_factors > n_assets {
        return Err(Error::InvalidConfig(format!(
            "need 1 <= n_factors <= n_assets, got n_assets={n_assets}, n_factors={n_factors}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let weight_max = if n_assets as f64 * 0.1 > 1.0 {
        0.1
    } else {
        2.0 / n_assets as f64
    };
    let classes = [
        AssetClass::Equity,
        AssetClass::FixedIncome,
        AssetClass::MoneyMarket,
    ];
    let assets: Vec<Asset> = (0..n_assets)
        .map(|i| Asset {
            name: format!("A{i:03}"),
            class: classes[i % 3],
            mean_return: rng.gen_range(-0.02..0.10),
            weight_min: 0.0,
            weight_max,
        })
        .collect();

    let loadings: Vec<f64> = (0..n_assets * n_factors)
        .map(|_| rng.gen_range(-0.1..0.1))
        .collect();
    let noise: Vec<f64> = (0..n_assets)
        .map(|_| rng.gen_range(0.001..0.01))
        .collect();
    let mut covariance = vec![0.0; n_assets * n_assets];
    for i in 0..n_assets {
        for j in i..n_assets {
            let mut v = 0.0;
            for f in 0..n_factors {
                v += loadings[i * n_factors + f] * loadings[j * n_factors + f];
            }
            if i == j {
                v += noise[i];
            }
            covariance[i * n_assets + j] = v;
            covariance[j * n_assets + i] = v;
        }
    }

    let equal = vec![1.0 / n_assets as f64; n_assets];
    let mut var_equal = 0.0;
    for i in 0..n_assets {
        for j in 0..n_assets {
            var_equal += equal[i] * covariance[i * n_assets + j] * equal[j];
        }
    }
    let sigma2_target = 1.5 * var_equal;

    Problem::new(assets, covariance, sigma2_target, Vec::new())
}
