//! Compilation of a portfolio problem into quadratic penalty models.
//!
//! The compiled objective is a weighted sum of four terms over the bit
//! layout: negated returns, the squared budget residual, squared linear
//! constraint residuals with slack bits, and a volatility term. The
//! natural-form alternative keeps constraints as (form, op, rhs) entries
//! for the adaptive-penalty solver.

use std::collections::BTreeMap;
use std::io::Write;

use crate::encoding::{BitString, EncodingLayout, SlackBlock};
use crate::error::{Error, Result};
use crate::model::{ConstraintOp, Problem};

/// Coefficients with magnitude below this are dropped after assembly to
/// bound the sparse map's density.
const PRUNE_TOL: f64 = 1e-15;

/// Sparse upper-triangular quadratic form over binary variables plus a
/// constant offset. Diagonal entries double as linear terms since
/// `x^2 = x` on {0, 1}.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct QuadraticModel {
    n: usize,
    q: BTreeMap<(usize, usize), f64>,
    offset: f64,
}

impl QuadraticModel {
    pub fn new(n: usize) -> Self {
        QuadraticModel {
            n,
            q: BTreeMap::new(),
            offset: 0.0,
        }
    }

    pub fn n_bits(&self) -> usize {
        self.n
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn add_offset(&mut self, v: f64) {
        self.offset += v;
    }

    /// Accumulate a coefficient; the pair is stored with i <= j.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.n && j < self.n);
        let key = if i <= j { (i, j) } else { (j, i) };
        *self.q.entry(key).or_insert(0.0) += v;
    }

    pub fn coefficient(&self, i: usize, j: usize) -> f64 {
        let key = if i <= j { (i, j) } else { (j, i) };
        self.q.get(&key).copied().unwrap_or(0.0)
    }

    /// Upper-triangular entries in ascending (i, j) order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.q.iter().map(|(&(i, j), &v)| (i, j, v))
    }

    pub fn nnz(&self) -> usize {
        self.q.len()
    }

    /// Fraction of the upper triangle (diagonal included) that is filled.
    pub fn density(&self) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        self.q.len() as f64 / (self.n * (self.n + 1) / 2) as f64
    }

    pub fn max_abs_coefficient(&self) -> f64 {
        self.q.values().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Energy of a bit vector: sum of q_ij x_i x_j plus the offset.
    pub fn energy(&self, bits: &BitString) -> f64 {
        self.energy_of(bits.as_slice())
    }

    pub fn energy_of(&self, bits: &[bool]) -> f64 {
        debug_assert_eq!(bits.len(), self.n);
        let mut e = self.offset;
        for (&(i, j), &v) in &self.q {
            if bits[i] && bits[j] {
                e += v;
            }
        }
        e
    }

    /// Add `lambda` times another model of the same width.
    pub fn add_scaled(&mut self, other: &QuadraticModel, lambda: f64) -> Result<()> {
        if other.n != self.n {
            return Err(Error::Dimension {
                expected: self.n,
                got: other.n,
            });
        }
        if lambda == 0.0 {
            return Ok(());
        }
        self.offset += lambda * other.offset;
        for (&key, &v) in &other.q {
            *self.q.entry(key).or_insert(0.0) += lambda * v;
        }
        Ok(())
    }

    /// Drop entries below the pruning tolerance.
    pub fn prune(&mut self) {
        self.q.retain(|_, v| v.abs() >= PRUNE_TOL);
    }

    /// The same form over a wider bit space.
    pub fn widened(&self, n: usize) -> QuadraticModel {
        assert!(n >= self.n);
        QuadraticModel {
            n,
            q: self.q.clone(),
            offset: self.offset,
        }
    }

    /// View a diagonal-only model as an affine form; `None` if any true
    /// quadratic (off-diagonal) coupling is present.
    fn as_affine(&self) -> Option<LinearForm> {
        let mut coeffs = Vec::with_capacity(self.q.len());
        for (&(i, j), &v) in &self.q {
            if i != j {
                return None;
            }
            coeffs.push((i, v));
        }
        Some(LinearForm {
            constant: self.offset,
            coeffs,
        })
    }
}

/// Affine form `constant + sum coeffs_b x_b` over the bit layout.
#[derive(Debug, Clone, Default)]
struct LinearForm {
    constant: f64,
    /// Sorted by bit index, one entry per bit.
    coeffs: Vec<(usize, f64)>,
}

impl LinearForm {
    fn add(&mut self, other: &LinearForm, scale: f64) {
        self.constant += scale * other.constant;
        // Blocks never overlap, so a plain merge keeps indices unique.
        for &(b, c) in &other.coeffs {
            match self.coeffs.binary_search_by_key(&b, |&(i, _)| i) {
                Ok(pos) => self.coeffs[pos].1 += scale * c,
                Err(pos) => self.coeffs.insert(pos, (b, scale * c)),
            }
        }
    }

    /// Accumulate the square of this form into a quadratic model.
    fn add_square_to(&self, model: &mut QuadraticModel, lambda: f64) {
        model.add_offset(lambda * self.constant * self.constant);
        for (idx, &(b, c)) in self.coeffs.iter().enumerate() {
            model.add(b, b, lambda * (c * c + 2.0 * self.constant * c));
            for &(b2, c2) in &self.coeffs[idx + 1..] {
                model.add(b, b2, lambda * 2.0 * c * c2);
            }
        }
    }

    /// Accumulate the product of two forms into a quadratic model.
    fn add_product_to(a: &LinearForm, b: &LinearForm, model: &mut QuadraticModel, lambda: f64) {
        model.add_offset(lambda * a.constant * b.constant);
        for &(u, au) in &a.coeffs {
            model.add(u, u, lambda * au * b.constant);
        }
        for &(v, bv) in &b.coeffs {
            model.add(v, v, lambda * bv * a.constant);
        }
        for &(u, au) in &a.coeffs {
            for &(v, bv) in &b.coeffs {
                model.add(u, v, lambda * au * bv);
            }
        }
    }

    /// Embed the affine form itself (not its square) into a model.
    fn add_linear_to(&self, model: &mut QuadraticModel, lambda: f64) {
        model.add_offset(lambda * self.constant);
        for &(b, c) in &self.coeffs {
            model.add(b, b, lambda * c);
        }
    }
}

/// Binary expansion of asset `i`'s weight as an affine form.
fn weight_form(problem: &Problem, layout: &EncodingLayout, i: usize) -> LinearForm {
    let asset = &problem.assets()[i];
    let p = 1.0 / (1u64 << layout.bits_per_asset) as f64;
    let width = asset.box_width();
    let start = layout.asset_bit_offset[i];
    let mut term = p;
    let coeffs = (0..layout.bits_per_asset)
        .map(|k| {
            let c = (start + k, width * term);
            term *= 2.0;
            c
        })
        .collect();
    LinearForm {
        constant: asset.weight_min,
        coeffs,
    }
}

/// Binary expansion of a slack block's value.
fn slack_form(block: &SlackBlock) -> LinearForm {
    let p = 1.0 / (1u64 << block.bits) as f64;
    let mut term = p;
    let coeffs = (0..block.bits)
        .map(|k| {
            let c = (block.offset + k, block.bound * term);
            term *= 2.0;
            c
        })
        .collect();
    LinearForm {
        constant: 0.0,
        coeffs,
    }
}

/// `sum_i coeffs_i w_i(x)` as an affine form over the bits.
fn combination_form(problem: &Problem, layout: &EncodingLayout, coeffs: &[f64]) -> LinearForm {
    let mut form = LinearForm::default();
    for (i, &c) in coeffs.iter().enumerate() {
        if c != 0.0 {
            form.add(&weight_form(problem, layout, i), c);
        }
    }
    form
}

/// Negated expected return, `-sum_i r_i w_i(x)`.
pub fn build_h1(problem: &Problem, layout: &EncodingLayout) -> QuadraticModel {
    let mut model = QuadraticModel::new(layout.total_bits);
    for (i, asset) in problem.assets().iter().enumerate() {
        weight_form(problem, layout, i).add_linear_to(&mut model, -asset.mean_return);
    }
    model
}

/// Squared budget residual, `(sum_i w_i(x) - 1)^2`.
pub fn build_h2(problem: &Problem, layout: &EncodingLayout) -> QuadraticModel {
    let mut model = QuadraticModel::new(layout.total_bits);
    let mut budget = LinearForm {
        constant: -1.0,
        coeffs: Vec::new(),
    };
    for i in 0..problem.n_assets() {
        budget.add(&weight_form(problem, layout, i), 1.0);
    }
    budget.add_square_to(&mut model, 1.0);
    model
}

/// Squared residual of one multi-asset constraint, slack included.
fn h3_term(problem: &Problem, layout: &EncodingLayout, j: usize) -> Result<QuadraticModel> {
    let c = &problem.multi_constraints()[j];
    let mut form = combination_form(problem, layout, &c.coefficients);
    form.constant -= c.rhs;
    if c.op != ConstraintOp::Eq {
        let block = layout
            .slack_blocks
            .iter()
            .find(|b| b.constraint == j)
            .ok_or_else(|| {
                Error::InvalidConfig(format!(
                    "layout provides no slack block for inequality constraint {j}"
                ))
            })?;
        form.add(&slack_form(block), block.sign);
    }
    let mut model = QuadraticModel::new(layout.total_bits);
    form.add_square_to(&mut model, 1.0);
    Ok(model)
}

/// One squared-residual model per multi-asset constraint, in order.
pub fn build_h3_terms(problem: &Problem, layout: &EncodingLayout) -> Result<Vec<QuadraticModel>> {
    (0..problem.multi_constraints().len())
        .map(|j| h3_term(problem, layout, j))
        .collect()
}

/// Sum of all squared linear-constraint residuals with unit weights.
pub fn build_h3(problem: &Problem, layout: &EncodingLayout) -> Result<QuadraticModel> {
    let mut model = QuadraticModel::new(layout.total_bits);
    for term in build_h3_terms(problem, layout)? {
        model.add_scaled(&term, 1.0)?;
    }
    Ok(model)
}

/// How the volatility bound enters the compiled model.
#[derive(Debug, Clone, PartialEq)]
pub enum VolatilityMode {
    /// Treat the bound as an equality-to-zero condition and minimize the
    /// variance form directly. The default for plain quadratic assembly.
    EqualityToZero,
    /// Replace the quadratic form by the squared linear surrogate
    /// `(k^T Sigma w - sigma2_target)^2` for a fixed weight vector `k`.
    Linearized(Vec<f64>),
    /// Keep the bound as a natural-form constraint with a slack term.
    /// Only valid when emitting a constrained model: squaring the
    /// quadratic form would produce quartic terms, leaving the quadratic
    /// model class.
    SlackConstraint,
}

impl Default for VolatilityMode {
    fn default() -> Self {
        VolatilityMode::EqualityToZero
    }
}

/// Linearization vector with every entry `1/n`.
pub fn uniform_linearization(n: usize) -> Vec<f64> {
    vec![1.0 / n as f64; n]
}

/// Result of compiling the volatility term.
#[derive(Debug, Clone)]
pub enum H4Term {
    Quadratic(QuadraticModel),
    /// Natural-form entry `(variance form, <=, sigma2_target)`.
    Constraint(NaturalConstraint),
}

/// The variance quadratic form `w(x)^T Sigma w(x)` over the bits, using
/// the upper-triangular adjusted coefficients (off-diagonal doubled).
pub fn variance_form(problem: &Problem, layout: &EncodingLayout) -> QuadraticModel {
    let mut model = QuadraticModel::new(layout.total_bits);
    let forms: Vec<LinearForm> = (0..problem.n_assets())
        .map(|i| weight_form(problem, layout, i))
        .collect();
    for i in 0..problem.n_assets() {
        for j in i..problem.n_assets() {
            let adjusted = if i == j {
                problem.cov(i, i)
            } else {
                2.0 * problem.cov(i, j)
            };
            if adjusted != 0.0 {
                LinearForm::add_product_to(&forms[i], &forms[j], &mut model, adjusted);
            }
        }
    }
    model
}

/// Compile the volatility term in the requested mode.
pub fn build_h4(
    problem: &Problem,
    layout: &EncodingLayout,
    mode: &VolatilityMode,
) -> Result<H4Term> {
    match mode {
        VolatilityMode::EqualityToZero => Ok(H4Term::Quadratic(variance_form(problem, layout))),
        VolatilityMode::Linearized(k) => {
            if k.len() != problem.n_assets() {
                return Err(Error::Dimension {
                    expected: problem.n_assets(),
                    got: k.len(),
                });
            }
            let n = problem.n_assets();
            // m_i = (k^T Sigma)_i
            let m: Vec<f64> = (0..n)
                .map(|i| (0..n).map(|l| k[l] * problem.cov(l, i)).sum())
                .collect();
            let mut form = combination_form(problem, layout, &m);
            form.constant -= problem.sigma2_target();
            let mut model = QuadraticModel::new(layout.total_bits);
            form.add_square_to(&mut model, 1.0);
            Ok(H4Term::Quadratic(model))
        }
        VolatilityMode::SlackConstraint => Ok(H4Term::Constraint(NaturalConstraint {
            label: "volatility".into(),
            kind: NaturalKind::Volatility,
            form: variance_form(problem, layout),
            op: ConstraintOp::Le,
            rhs: problem.sigma2_target(),
            slack_bound: Some(problem.sigma2_target()),
        })),
    }
}

/// Penalty weights for the four objective terms, with one weight per
/// multi-asset constraint inside the third term.
#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyWeights {
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: Vec<f64>,
    pub lambda4: f64,
}

impl PenaltyWeights {
    /// Scale-aware defaults: the budget and linear penalties dominate the
    /// largest attainable return gradient at one effective-granularity
    /// step, so a single constraint violation outweighs any return gain.
    ///
    /// The volatility weight is sized to the bound itself rather than to
    /// the budget stiffness: the variance form penalizes risk everywhere,
    /// not just above the bound, and a weight of `lambda2 / sigma2` drags
    /// the minimum off the budget hyperplane whenever portfolio variance
    /// is within an order of the target. Pricing a full-scale violation
    /// (variance at the bound) at ten times the best return keeps
    /// violations uneconomical without distorting the feasible region.
    pub fn defaults(problem: &Problem, layout: &EncodingLayout) -> Self {
        let r_max = problem
            .assets()
            .iter()
            .map(|a| a.mean_return.abs())
            .fold(0.0_f64, f64::max)
            .max(1e-3);
        let p_eff = layout.max_effective_granularity(problem);
        let lambda2 = if p_eff > 0.0 {
            10.0 * r_max / p_eff
        } else {
            1e6
        };
        PenaltyWeights {
            lambda1: 1.0,
            lambda2,
            lambda3: vec![lambda2; problem.multi_constraints().len()],
            lambda4: 10.0 * r_max / problem.sigma2_target(),
        }
    }

    /// Reject weights that are not strictly positive and finite.
    pub fn validate(&self) -> Result<()> {
        let all = std::iter::once(self.lambda1)
            .chain(std::iter::once(self.lambda2))
            .chain(self.lambda3.iter().copied())
            .chain(std::iter::once(self.lambda4));
        for (idx, v) in all.enumerate() {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "penalty weight #{idx} must be strictly positive, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Assemble the weighted sum `l1 H1 + l2 H2 + sum_j l3j H3j + l4 H4`.
///
/// Offsets are kept exactly so energies remain comparable across weight
/// settings; near-zero coefficients are pruned at the end.
pub fn assemble(
    problem: &Problem,
    layout: &EncodingLayout,
    weights: &PenaltyWeights,
    h4_mode: &VolatilityMode,
) -> Result<QuadraticModel> {
    if layout.n_assets != problem.n_assets() {
        return Err(Error::InvalidConfig(format!(
            "layout is for {} assets, problem has {}",
            layout.n_assets,
            problem.n_assets()
        )));
    }
    if weights.lambda3.len() != problem.multi_constraints().len() {
        return Err(Error::InvalidConfig(format!(
            "{} third-term weights for {} constraints",
            weights.lambda3.len(),
            problem.multi_constraints().len()
        )));
    }
    let h4 = match build_h4(problem, layout, h4_mode)? {
        H4Term::Quadratic(m) => m,
        H4Term::Constraint(_) => {
            return Err(Error::UnsupportedMode(
                "the volatility slack mode keeps a quadratic form inside a squared penalty, \
                 which expands to quartic terms; plain quadratic assembly supports only \
                 equality-to-zero and linearized modes"
                    .into(),
            ))
        }
    };

    let mut model = QuadraticModel::new(layout.total_bits);
    model.add_scaled(&build_h1(problem, layout), weights.lambda1)?;
    model.add_scaled(&build_h2(problem, layout), weights.lambda2)?;
    for (term, &l3) in build_h3_terms(problem, layout)?.iter().zip(&weights.lambda3) {
        model.add_scaled(term, l3)?;
    }
    model.add_scaled(&h4, weights.lambda4)?;
    model.prune();
    Ok(model)
}

/// Which tolerance regime a natural constraint belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NaturalKind {
    Budget,
    MultiLinear(usize),
    Volatility,
}

/// A constraint kept in natural form: `form(x) <op> rhs`.
#[derive(Debug, Clone)]
pub struct NaturalConstraint {
    pub label: String,
    pub kind: NaturalKind,
    pub form: QuadraticModel,
    pub op: ConstraintOp,
    pub rhs: f64,
    /// Largest continuous slack value, for rebuilding penalty encodings.
    /// `None` for equality constraints.
    pub slack_bound: Option<f64>,
}

impl NaturalConstraint {
    pub fn value(&self, bits: &BitString) -> f64 {
        self.form.energy(bits)
    }
}

/// Objective plus natural-form constraints, the input to the
/// adaptive-penalty solver.
#[derive(Debug, Clone)]
pub struct ConstrainedModel {
    /// Negated returns only.
    pub objective: QuadraticModel,
    pub constraints: Vec<NaturalConstraint>,
    /// Asset-bit count; constraint forms reference only these bits.
    pub n_bits: usize,
    /// Slack block width used when a round rebuilds penalty encodings.
    pub slack_bits: usize,
    /// Normalization tolerance band (largest effective granularity).
    pub norm_tolerance: f64,
    /// Starting penalty weight per constraint, aligned with `constraints`.
    pub default_lambdas: Vec<f64>,
}

/// Emit the natural-form model: objective H1 plus budget, multi-asset and
/// volatility constraints as they are. Slack blocks in the layout are
/// ignored; prefer [`encoding::build_natural_layout`].
pub fn build_constrained(problem: &Problem, layout: &EncodingLayout) -> ConstrainedModel {
    let defaults = PenaltyWeights::defaults(problem, layout);
    let mut constraints = Vec::new();
    let mut default_lambdas = Vec::new();

    let mut budget_model = QuadraticModel::new(layout.total_bits);
    let mut budget = LinearForm::default();
    for i in 0..problem.n_assets() {
        budget.add(&weight_form(problem, layout, i), 1.0);
    }
    budget.add_linear_to(&mut budget_model, 1.0);
    constraints.push(NaturalConstraint {
        label: "budget".into(),
        kind: NaturalKind::Budget,
        form: budget_model,
        op: ConstraintOp::Eq,
        rhs: 1.0,
        slack_bound: None,
    });
    default_lambdas.push(defaults.lambda2);

    for (j, c) in problem.multi_constraints().iter().enumerate() {
        let mut form = QuadraticModel::new(layout.total_bits);
        combination_form(problem, layout, &c.coefficients).add_linear_to(&mut form, 1.0);
        let slack_bound = match c.op {
            ConstraintOp::Eq => None,
            ConstraintOp::Le => Some((c.rhs - box_extremum(problem, &c.coefficients, false)).max(0.0)),
            ConstraintOp::Ge => Some((box_extremum(problem, &c.coefficients, true) - c.rhs).max(0.0)),
        };
        constraints.push(NaturalConstraint {
            label: format!("multi_{j}"),
            kind: NaturalKind::MultiLinear(j),
            form,
            op: c.op,
            rhs: c.rhs,
            slack_bound,
        });
        default_lambdas.push(defaults.lambda3[j]);
    }

    constraints.push(NaturalConstraint {
        label: "volatility".into(),
        kind: NaturalKind::Volatility,
        form: variance_form(problem, layout),
        op: ConstraintOp::Le,
        rhs: problem.sigma2_target(),
        slack_bound: Some(problem.sigma2_target()),
    });
    default_lambdas.push(defaults.lambda4);

    ConstrainedModel {
        objective: build_h1(problem, layout),
        constraints,
        n_bits: layout.total_bits,
        slack_bits: layout.bits_per_asset,
        norm_tolerance: layout.max_effective_granularity(problem),
        default_lambdas,
    }
}

/// Rebuild a penalty model from a natural-form model with explicit
/// per-constraint weights, as the adaptive-penalty loop does each round.
///
/// Inequality linear constraints get fresh slack blocks appended after the
/// asset bits; the volatility bound enters as its equality-to-zero form.
/// The objective keeps unit weight.
pub fn assemble_adaptive(cmodel: &ConstrainedModel, lambdas: &[f64]) -> Result<QuadraticModel> {
    if lambdas.len() != cmodel.constraints.len() {
        return Err(Error::Dimension {
            expected: cmodel.constraints.len(),
            got: lambdas.len(),
        });
    }
    let mut next = cmodel.n_bits;
    let mut slack_offsets = Vec::with_capacity(cmodel.constraints.len());
    for c in &cmodel.constraints {
        let needs_slack =
            c.op != ConstraintOp::Eq && !matches!(c.kind, NaturalKind::Volatility);
        if needs_slack {
            slack_offsets.push(Some(next));
            next += cmodel.slack_bits;
        } else {
            slack_offsets.push(None);
        }
    }

    let mut model = QuadraticModel::new(next);
    model.add_scaled(&cmodel.objective.widened(next), 1.0)?;
    for ((c, &lambda), offset) in cmodel
        .constraints
        .iter()
        .zip(lambdas)
        .zip(&slack_offsets)
    {
        match c.kind {
            NaturalKind::Volatility => {
                model.add_scaled(&c.form.widened(next), lambda)?;
            }
            NaturalKind::Budget | NaturalKind::MultiLinear(_) => {
                let mut form = c.form.as_affine().ok_or_else(|| {
                    Error::InvalidConfig(format!(
                        "constraint {} is not affine in the bits",
                        c.label
                    ))
                })?;
                form.constant -= c.rhs;
                if let Some(start) = *offset {
                    let block = SlackBlock {
                        constraint: 0,
                        offset: start,
                        bits: cmodel.slack_bits,
                        bound: c.slack_bound.unwrap_or(0.0),
                        sign: if c.op == ConstraintOp::Le { 1.0 } else { -1.0 },
                    };
                    form.add(&slack_form(&block), block.sign);
                }
                form.add_square_to(&mut model, lambda);
            }
        }
    }
    model.prune();
    Ok(model)
}

fn box_extremum(problem: &Problem, coeffs: &[f64], max: bool) -> f64 {
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

/// Write the model as `i j coeff` lines (indices ascending) preceded by a
/// `# offset` comment, the plain-text interchange format.
pub fn export_qubo<W: Write>(model: &QuadraticModel, mut out: W) -> std::io::Result<()> {
    writeln!(out, "# offset {}", model.offset)?;
    for (i, j, v) in model.entries() {
        writeln!(out, "{i} {j} {v}")?;
    }
    Ok(())
}
