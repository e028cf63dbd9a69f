//! Continuous benchmark solver for the convex problem.
//!
//! Maximizes `r . w` over the weight box, the normalization simplex, the
//! multi-asset linear constraints and the volatility ball by projected
//! gradient ascent on a penalized objective, with an outer bisection on
//! the volatility multiplier. Deterministic throughout.

use crate::error::{Error, Result};
use crate::model::{ConstraintOp, Problem};

/// Total projected-gradient step budget.
const MAX_GRADIENT_STEPS: usize = 100_000;

/// Outer bisection budget on the volatility multiplier.
const MAX_BISECTION_STEPS: usize = 60;

/// Iterations of the final cyclic-projection cleanup.
const POLISH_ROUNDS: usize = 2000;

/// Linear-constraint residual the cleanup drives for.
const POLISH_TOL: f64 = 1e-13;

#[derive(Debug, Clone)]
pub struct ReferenceSolution {
    pub weights: Vec<f64>,
    pub expected_return: f64,
    /// Portfolio variance `w^T Sigma w`.
    pub volatility: f64,
    /// Composite optimality residual: projected-gradient stationarity,
    /// feasibility and complementary slackness, relative to the return
    /// scale.
    pub kkt_residual: f64,
    pub gradient_steps: usize,
    pub bisection_steps: usize,
}

struct Solver<'a> {
    problem: &'a Problem,
    returns: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    /// Row-sum norm of the covariance, an upper bound on its spectrum.
    sigma_norm: f64,
    /// Sum of squared constraint-row norms.
    lin_norm: f64,
    gradient_steps: usize,
    bisection_steps: usize,
}

impl<'a> Solver<'a> {
    fn new(problem: &'a Problem) -> Self {
        let n = problem.n_assets();
        let sigma_norm = (0..n)
            .map(|i| (0..n).map(|j| problem.cov(i, j).abs()).sum::<f64>())
            .fold(0.0_f64, f64::max);
        let lin_norm = problem
            .multi_constraints()
            .iter()
            .map(|c| c.coefficients.iter().map(|v| v * v).sum::<f64>())
            .sum();
        Solver {
            problem,
            returns: problem.returns(),
            lo: problem.assets().iter().map(|a| a.weight_min).collect(),
            hi: problem.assets().iter().map(|a| a.weight_max).collect(),
            sigma_norm,
            lin_norm,
            gradient_steps: 0,
            bisection_steps: 0,
        }
    }

    /// Project onto the box intersected with the budget hyperplane by
    /// bisecting the shift that makes the clipped sum hit one.
    fn project(&self, v: &[f64]) -> Vec<f64> {
        let mut tau_lo = f64::INFINITY;
        let mut tau_hi = f64::NEG_INFINITY;
        for i in 0..v.len() {
            tau_lo = tau_lo.min(self.lo[i] - v[i]);
            tau_hi = tau_hi.max(self.hi[i] - v[i]);
        }
        let clipped_sum = |tau: f64| -> f64 {
            v.iter()
                .zip(&self.lo)
                .zip(&self.hi)
                .map(|((&vi, &lo), &hi)| (vi + tau).clamp(lo, hi))
                .sum()
        };
        let (mut a, mut b) = (tau_lo, tau_hi);
        for _ in 0..128 {
            let mid = 0.5 * (a + b);
            if clipped_sum(mid) < 1.0 {
                a = mid;
            } else {
                b = mid;
            }
        }
        let tau = 0.5 * (a + b);
        v.iter()
            .zip(&self.lo)
            .zip(&self.hi)
            .map(|((&vi, &lo), &hi)| (vi + tau).clamp(lo, hi))
            .collect()
    }

    fn variance(&self, w: &[f64]) -> f64 {
        let n = w.len();
        let mut acc = 0.0;
        for i in 0..n {
            let mut row = 0.0;
            for j in 0..n {
                row += self.problem.cov(i, j) * w[j];
            }
            acc += w[i] * row;
        }
        acc
    }

    /// Gradient of `r.w - mu w'Sw - rho sum max(0, viol)^2`.
    fn gradient(&self, w: &[f64], mu: f64, rho: f64) -> Vec<f64> {
        let n = w.len();
        let mut g = self.returns.clone();
        if mu != 0.0 {
            for i in 0..n {
                let mut row = 0.0;
                for j in 0..n {
                    row += self.problem.cov(i, j) * w[j];
                }
                g[i] -= 2.0 * mu * row;
            }
        }
        for c in self.problem.multi_constraints() {
            let lhs = c.lhs(w);
            let signed = match c.op {
                ConstraintOp::Le => (lhs - c.rhs).max(0.0),
                ConstraintOp::Ge => (lhs - c.rhs).min(0.0),
                ConstraintOp::Eq => lhs - c.rhs,
            };
            if signed != 0.0 {
                for i in 0..n {
                    g[i] -= 2.0 * rho * signed * c.coefficients[i];
                }
            }
        }
        g
    }

    fn max_linear_violation(&self, w: &[f64]) -> f64 {
        self.problem
            .multi_constraints()
            .iter()
            .map(|c| {
                let lhs = c.lhs(w);
                match c.op {
                    ConstraintOp::Le => (lhs - c.rhs).max(0.0),
                    ConstraintOp::Ge => (c.rhs - lhs).max(0.0),
                    ConstraintOp::Eq => (lhs - c.rhs).abs(),
                }
            })
            .fold(0.0_f64, f64::max)
    }

    /// Projected-gradient ascent at fixed multipliers; returns when the
    /// unit-step stationarity residual drops below `tol` or the global
    /// step budget runs out.
    fn inner_solve(&mut self, start: Vec<f64>, mu: f64, rho: f64, tol: f64) -> Vec<f64> {
        let step = 1.0 / (2.0 * mu * self.sigma_norm + 2.0 * rho * self.lin_norm + 1.0);
        let mut w = self.project(&start);
        while self.gradient_steps < MAX_GRADIENT_STEPS {
            self.gradient_steps += 1;
            let g = self.gradient(&w, mu, rho);
            let moved: Vec<f64> = w.iter().zip(&g).map(|(wi, gi)| wi + step * gi).collect();
            let next = self.project(&moved);
            let shift = norm_inf(&next, &w) / step;
            w = next;
            if shift <= tol {
                break;
            }
        }
        w
    }

    /// Metric projection onto box-simplex intersected with the linear
    /// constraints, by Dykstra's alternating projections. Falls back to
    /// the plain box-simplex projection when there are no extra
    /// constraints.
    fn project_full(&self, v: &[f64]) -> Vec<f64> {
        let constraints = self.problem.multi_constraints();
        if constraints.is_empty() {
            return self.project(v);
        }
        let n = v.len();
        let sets = 1 + constraints.len();
        let mut x = v.to_vec();
        let mut corrections = vec![vec![0.0; n]; sets];
        for _ in 0..POLISH_ROUNDS {
            let before = x.clone();
            for s in 0..sets {
                let shifted: Vec<f64> = x
                    .iter()
                    .zip(&corrections[s])
                    .map(|(xi, ci)| xi + ci)
                    .collect();
                let projected = if s == 0 {
                    self.project(&shifted)
                } else {
                    let c = &constraints[s - 1];
                    let lhs = c.lhs(&shifted);
                    let overshoot = match c.op {
                        ConstraintOp::Le => (lhs - c.rhs).max(0.0),
                        ConstraintOp::Ge => (lhs - c.rhs).min(0.0),
                        ConstraintOp::Eq => lhs - c.rhs,
                    };
                    if overshoot == 0.0 {
                        shifted.clone()
                    } else {
                        let norm2: f64 = c.coefficients.iter().map(|a| a * a).sum();
                        shifted
                            .iter()
                            .zip(&c.coefficients)
                            .map(|(xi, ai)| xi - overshoot * ai / norm2)
                            .collect()
                    }
                };
                for i in 0..n {
                    corrections[s][i] = shifted[i] - projected[i];
                }
                x = projected;
            }
            if norm_inf(&x, &before) <= POLISH_TOL && self.max_linear_violation(&x) <= POLISH_TOL
            {
                break;
            }
        }
        x
    }

    /// Unit-step stationarity residual of `r.w - mu w'Sw` over the full
    /// feasible set.
    fn stationarity(&self, w: &[f64], mu: f64) -> f64 {
        let g = self.gradient(w, mu, 0.0);
        let moved: Vec<f64> = w.iter().zip(&g).map(|(wi, gi)| wi + gi).collect();
        let back = self.project_full(&moved);
        norm_inf(&back, w)
    }
}

fn norm_inf(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0_f64, f64::max)
}

/// Solve the continuous problem to the requested KKT tolerance.
pub fn reference_continuous(problem: &Problem, tolerance: f64) -> Result<ReferenceSolution> {
    if !(tolerance > 0.0 && tolerance.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "tolerance must be positive, got {tolerance}"
        )));
    }
    let mut solver = Solver::new(problem);
    let sigma2 = problem.sigma2_target();
    let return_scale = 1.0
        + problem
            .assets()
            .iter()
            .map(|a| a.mean_return.abs())
            .fold(0.0_f64, f64::max);
    let inner_tol = 0.01 * tolerance * return_scale;

    // Penalty weight for the linear constraints, escalated until the
    // inner solutions respect them tightly enough to polish away.
    let mut rho = 10.0 * return_scale;
    let center: Vec<f64> = problem
        .assets()
        .iter()
        .map(|a| 0.5 * (a.weight_min + a.weight_max))
        .collect();

    let solve_at = |solver: &mut Solver, mu: f64, rho: f64, start: Vec<f64>| -> Vec<f64> {
        solver.inner_solve(start, mu, rho, inner_tol)
    };

    // Unconstrained-volatility pass, escalating rho as needed.
    let mut w0 = solve_at(&mut solver, 0.0, rho, center.clone());
    for _ in 0..8 {
        if solver.max_linear_violation(&w0) <= 0.1 * tolerance || solver.lin_norm == 0.0 {
            break;
        }
        rho *= 10.0;
        w0 = solve_at(&mut solver, 0.0, rho, w0);
    }

    let mut mu = 0.0;
    let mut w = w0.clone();
    if solver.variance(&solver.project_full(&w0.clone())) > sigma2 {
        // Find a multiplier that pulls the variance under the target.
        let mut mu_hi = 1.0;
        let mut w_hi = solve_at(&mut solver, mu_hi, rho, w0.clone());
        let mut doublings = 0;
        while solver.variance(&w_hi) > sigma2 {
            doublings += 1;
            solver.bisection_steps += 1;
            if doublings > MAX_BISECTION_STEPS {
                return Err(Error::NonConverged {
                    iterations: solver.gradient_steps,
                    residual: solver.variance(&w_hi) - sigma2,
                });
            }
            mu_hi *= 2.0;
            w_hi = solve_at(&mut solver, mu_hi, rho, w_hi);
        }
        let mut mu_lo = 0.0;
        while solver.bisection_steps < MAX_BISECTION_STEPS {
            solver.bisection_steps += 1;
            let mid = 0.5 * (mu_lo + mu_hi);
            let w_mid = solve_at(&mut solver, mid, rho, w_hi.clone());
            if solver.variance(&w_mid) > sigma2 {
                mu_lo = mid;
            } else {
                mu_hi = mid;
                w_hi = w_mid;
            }
        }
        mu = mu_hi;
        w = w_hi;
    }

    // Cleanup: exact-ish feasibility for the reported point.
    let mut w = solver.project_full(&w);
    if solver.variance(&w) > sigma2 {
        // Pull toward a deep-feasible point until the bound holds.
        let mut mu_safe = (2.0 * mu).max(1.0);
        let deep = solve_at(&mut solver, mu_safe, rho, w.clone());
        let mut w_safe = solver.project_full(&deep);
        let mut tries = 0;
        while solver.variance(&w_safe) > sigma2 {
            tries += 1;
            if tries > 40 {
                return Err(Error::NonConverged {
                    iterations: solver.gradient_steps,
                    residual: solver.variance(&w_safe) - sigma2,
                });
            }
            mu_safe *= 4.0;
            let deep = solve_at(&mut solver, mu_safe, rho, w_safe);
            w_safe = solver.project_full(&deep);
        }
        let (mut t_lo, mut t_hi) = (0.0_f64, 1.0_f64);
        for _ in 0..60 {
            let t = 0.5 * (t_lo + t_hi);
            let blend: Vec<f64> = w
                .iter()
                .zip(&w_safe)
                .map(|(a, b)| (1.0 - t) * a + t * b)
                .collect();
            if solver.variance(&solver.project_full(&blend)) > sigma2 {
                t_lo = t;
            } else {
                t_hi = t;
            }
        }
        let blend: Vec<f64> = w
            .iter()
            .zip(&w_safe)
            .map(|(a, b)| (1.0 - t_hi) * a + t_hi * b)
            .collect();
        w = solver.project_full(&blend);
    }

    let variance = solver.variance(&w);
    let expected_return: f64 = solver
        .returns
        .iter()
        .zip(&w)
        .map(|(r, wi)| r * wi)
        .sum();

    let stationarity = solver.stationarity(&w, mu);
    let lin_viol = solver.max_linear_violation(&w);
    let budget_viol = (w.iter().sum::<f64>() - 1.0).abs();
    let vol_viol = (variance - sigma2).max(0.0);
    let complementarity = if mu > 0.0 {
        mu * (sigma2 - variance).abs() / (1.0 + mu * sigma2)
    } else {
        0.0
    };
    let kkt_residual = (stationarity / return_scale)
        .max(lin_viol)
        .max(budget_viol)
        .max(vol_viol / sigma2.max(f64::MIN_POSITIVE))
        .max(complementarity);

    if kkt_residual > tolerance {
        return Err(Error::NonConverged {
            iterations: solver.gradient_steps,
            residual: kkt_residual,
        });
    }

    Ok(ReferenceSolution {
        weights: w,
        expected_return,
        volatility: variance,
        kkt_residual,
        gradient_steps: solver.gradient_steps,
        bisection_steps: solver.bisection_steps,
    })
}
