//! Acceptance suite: eight end-to-end criteria with pinned tolerances.
//! Each test prints one `acceptance N: PASS ...` line (run with
//! `--nocapture` to see them).

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use qpo_core::analysis::{
    check_constraints, error_stats_monte_carlo, error_stats_theory, success_probability,
    violation_breakdown, write_violation_csv, ViolationReport,
};
use qpo_core::compiler::{
    assemble, build_constrained, PenaltyWeights, VolatilityMode,
};
use qpo_core::encoding::{
    build_layout, build_natural_layout, decode_solution, BitString, DecodedSolution,
    EncodingLayout,
};
use qpo_core::model::{
    portfolio_return, portfolio_variance, Asset, AssetClass, ConstraintOp, LinearConstraint,
    Problem,
};
use qpo_core::seed::derive;
use qpo_core::solvers::{
    brute_force, reference_continuous, simulated_anneal, solve_constrained, tabu_search,
    SamplerConfig,
};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn asset(name: &str, ret: f64, lo: f64, hi: f64) -> Asset {
    Asset {
        name: name.into(),
        class: AssetClass::Equity,
        mean_return: ret,
        weight_min: lo,
        weight_max: hi,
    }
}

/// Random valid problem with wide boxes, a factor-structure covariance
/// and (optionally) one inequality constraint that is feasible over the
/// box by construction.
fn random_problem(n: usize, seed: u64, with_constraint: bool) -> Problem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let assets: Vec<Asset> = (0..n)
        .map(|i| {
            Asset {
                name: format!("R{i}"),
                class: AssetClass::Equity,
                mean_return: rng.gen_range(-0.02..0.10),
                weight_min: 0.0,
                weight_max: rng.gen_range(0.5..0.9),
            }
        })
        .collect();
    let loadings: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.1..0.1)).collect();
    let mut cov = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            cov[i * n + j] = loadings[i] * loadings[j];
        }
        cov[i * n + i] += rng.gen_range(0.004..0.02);
    }
    let constraints = if with_constraint {
        let coeffs: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 1.0 } else { 0.0 }).collect();
        let max_lhs: f64 = assets
            .iter()
            .zip(&coeffs)
            .map(|(a, c)| c * a.weight_max)
            .sum();
        vec![LinearConstraint {
            coefficients: coeffs,
            op: ConstraintOp::Le,
            rhs: rng.gen_range(0.55..0.95) * max_lhs,
        }]
    } else {
        Vec::new()
    };
    Problem::new(assets, cov, rng.gen_range(0.3..0.8), constraints).unwrap()
}

/// Direct penalty evaluation through the decode + model-evaluator route.
fn direct_energy(
    problem: &Problem,
    layout: &EncodingLayout,
    weights: &PenaltyWeights,
    mode: &VolatilityMode,
    bits: &BitString,
) -> f64 {
    let d = decode_solution(bits, layout, problem).unwrap();
    let ret = portfolio_return(&d.weights, problem).unwrap();
    let sum: f64 = d.weights.iter().sum();
    let mut e = weights.lambda1 * (-ret) + weights.lambda2 * (sum - 1.0).powi(2);
    let mut slack_iter = layout.slack_blocks.iter().zip(&d.slacks);
    for (j, c) in problem.multi_constraints().iter().enumerate() {
        let mut residual = c.lhs(&d.weights) - c.rhs;
        if c.op != ConstraintOp::Eq {
            let (block, slack) = slack_iter.next().unwrap();
            residual += block.sign * slack;
        }
        e += weights.lambda3[j] * residual * residual;
    }
    let h4 = match mode {
        VolatilityMode::EqualityToZero => portfolio_variance(&d.weights, problem).unwrap(),
        VolatilityMode::Linearized(k) => {
            let n = problem.n_assets();
            let mut lin = -problem.sigma2_target();
            for i in 0..n {
                for l in 0..n {
                    lin += k[l] * problem.cov(l, i) * d.weights[i];
                }
            }
            lin * lin
        }
        VolatilityMode::SlackConstraint => unreachable!(),
    };
    e + weights.lambda4 * h4
}

#[test]
fn acceptance_1_oracle_equivalence() {
    let started = Instant::now();
    let mut checked = 0usize;
    for inst in 0..20u64 {
        let n = 2 + (inst as usize % 4); // N in 2..=5
        let k = 1 + (inst as usize % 4); // K in 1..=4
        let problem = random_problem(n, derive(0xACCE, inst), inst % 2 == 0);
        let layout = build_layout(&problem, k, false).unwrap();
        let weights = PenaltyWeights::defaults(&problem, &layout);
        let mode = if inst % 3 == 0 {
            VolatilityMode::Linearized(qpo_core::compiler::uniform_linearization(n))
        } else {
            VolatilityMode::EqualityToZero
        };
        let model = assemble(&problem, &layout, &weights, &mode).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(derive(0xACC1, inst));
        for _ in 0..1000 {
            let bits = BitString((0..layout.total_bits).map(|_| rng.gen()).collect());
            let direct = direct_energy(&problem, &layout, &weights, &mode, &bits);
            let compiled = model.energy(&bits);
            assert!(
                (compiled - direct).abs() <= 1e-9,
                "instance {inst}: compiled {compiled} vs direct {direct}"
            );
            checked += 1;
        }
    }
    let elapsed = started.elapsed();
    assert!(elapsed < Duration::from_secs(10), "took {elapsed:?}");
    println!(
        "acceptance 1: PASS oracle equivalence on {checked} bit strings within 1e-9 ({elapsed:?})"
    );
}

#[test]
fn acceptance_2_samplers_recover_exact_optimum() {
    let started = Instant::now();
    let mut sa_hits = 0usize;
    let mut tabu_hits = 0usize;
    let mut total = 0usize;
    for inst in 0..20u64 {
        // Sizes chosen so total_bits stays at or below 20.
        let (n, k, constrained) = match inst % 4 {
            0 => (2, 5, true),  // 10 + 5 = 15 bits
            1 => (3, 4, true),  // 12 + 4 = 16 bits
            2 => (4, 4, false), // 16 bits
            _ => (5, 3, false), // 15 bits
        };
        let problem = random_problem(n, derive(0xB002, inst), constrained);
        let layout = build_layout(&problem, k, false).unwrap();
        assert!(layout.total_bits <= 20);
        // Benign uniform penalty weights: the batch measures sampler
        // agreement with the exact oracle, and the weights are a swept
        // parameter rather than ground truth.
        let weights = PenaltyWeights {
            lambda1: 1.0,
            lambda2: 0.25,
            lambda3: vec![0.25; problem.multi_constraints().len()],
            lambda4: 0.25,
        };
        let model = assemble(&problem, &layout, &weights, &VolatilityMode::EqualityToZero).unwrap();
        let (_, optimum) = brute_force(&model).unwrap();

        let config = SamplerConfig {
            seed: derive(0xB003, inst),
            num_reads: 50,
            sweeps: 2000,
            ..SamplerConfig::default()
        }
        .scaled_to(&model, layout.max_effective_granularity(&problem));
        let sa = simulated_anneal(&model, &config).unwrap();
        let tabu = tabu_search(&model, &config).unwrap();
        for s in sa.samples() {
            total += 1;
            if s.energy <= optimum + 1e-9 {
                sa_hits += 1;
            }
        }
        for s in tabu.samples() {
            if s.energy <= optimum + 1e-9 {
                tabu_hits += 1;
            }
        }
    }
    let elapsed = started.elapsed();
    assert!(elapsed < Duration::from_secs(120), "took {elapsed:?}");
    assert!(
        sa_hits * 10 >= total * 9,
        "annealing recovered the optimum in only {sa_hits}/{total} reads"
    );
    assert!(
        tabu_hits * 10 >= total * 9,
        "tabu recovered the optimum in only {tabu_hits}/{total} reads"
    );
    println!(
        "acceptance 2: PASS exact-solver agreement sa {sa_hits}/{total}, tabu {tabu_hits}/{total} \
         reads at the brute-force optimum ({elapsed:?})"
    );
}

/// Hand-built N=3 instance family for the feasible-optimum criterion.
fn small_constrained_instance(idx: u64) -> Problem {
    let mut rng = ChaCha8Rng::seed_from_u64(derive(0xC003, idx));
    let returns = [
        rng.gen_range(0.06..0.12),
        rng.gen_range(0.02..0.06),
        rng.gen_range(-0.01..0.02),
    ];
    let mut cov = vec![0.0; 9];
    for i in 0..3 {
        cov[i * 3 + i] = rng.gen_range(0.01..0.03);
    }
    let constraints = if idx % 2 == 0 {
        vec![LinearConstraint {
            coefficients: vec![1.0, 1.0, 0.0],
            op: ConstraintOp::Le,
            rhs: rng.gen_range(0.7..0.9),
        }]
    } else {
        Vec::new()
    };
    Problem::new(
        vec![
            asset("a", returns[0], 0.0, 0.5),
            asset("b", returns[1], 0.0, 0.5),
            asset("c", returns[2], 0.0, 0.5),
        ],
        cov,
        rng.gen_range(0.3..0.6),
        constraints,
    )
    .unwrap()
}

/// Enumerate-and-filter oracle: best feasible return over every asset
/// bit string.
fn feasible_optimum(problem: &Problem, layout: &EncodingLayout) -> Option<f64> {
    let n = layout.total_bits;
    let mut best: Option<f64> = None;
    for state in 0u64..(1 << n) {
        let bits = BitString((0..n).map(|b| (state >> b) & 1 == 1).collect());
        let d = decode_solution(&bits, layout, problem).unwrap();
        let report = check_constraints(&d, problem, layout);
        if report.not_satisfied > 0 {
            continue;
        }
        let ret = portfolio_return(&d.weights, problem).unwrap();
        if best.map_or(true, |b| ret > b) {
            best = Some(ret);
        }
    }
    best
}

#[test]
fn acceptance_3_constrained_loop_recovers_feasible_optimum() {
    let k = 3;
    let mut recovered = 0usize;
    for idx in 0..10u64 {
        let problem = small_constrained_instance(idx);
        let layout = build_natural_layout(&problem, k).unwrap();
        let oracle = feasible_optimum(&problem, &layout)
            .expect("instance family must have feasible lattice points");
        let cmodel = build_constrained(&problem, &layout);
        let config = SamplerConfig {
            seed: derive(0xC004, idx),
            num_reads: 20,
            sweeps: 800,
            ..SamplerConfig::default()
        };
        let result = solve_constrained(&cmodel, &config, 2.0, 12).unwrap();
        let Some(incumbent) = result.incumbent else {
            continue;
        };
        let d = decode_solution(&incumbent.bits, &layout, &problem).unwrap();
        let ret = portfolio_return(&d.weights, &problem).unwrap();
        let r_max = problem
            .returns()
            .iter()
            .fold(0.0_f64, |a, &b| a.max(b.abs()));
        let lattice_step = layout.max_effective_granularity(&problem) * r_max;
        if ret >= oracle - lattice_step {
            recovered += 1;
        } else {
            println!(
                "  instance {idx}: incumbent return {ret} vs oracle {oracle} (step {lattice_step})"
            );
        }
    }
    assert!(recovered >= 9, "recovered only {recovered}/10 feasible optima");
    println!(
        "acceptance 3: PASS adaptive-penalty loop matched the enumerate-and-filter optimum \
         within one lattice step on {recovered}/10 instances"
    );
}

/// Vertex-optimum instances for the classical-benchmark comparison; each
/// has exactly one active cap so the lattice argmax pins down.
fn benchmark_instances() -> Vec<Problem> {
    // The absorbing (budget-balancing) asset always owns the widest box,
    // so the normalization band exceeds the active cap's lattice
    // shortfall with real margin and the lattice argmax pins down.
    vec![
        // box cap on the best asset: optimum (0.45, 0.55, 0)
        Problem::new(
            vec![
                asset("a", 0.10, 0.0, 0.45),
                asset("b", 0.05, 0.0, 0.8),
                asset("c", 0.02, 0.0, 0.3),
            ],
            vec![
                0.010, 0.002, 0.001, //
                0.002, 0.008, 0.001, //
                0.001, 0.001, 0.006,
            ],
            10.0,
            Vec::new(),
        )
        .unwrap(),
        // linear cap on the best asset: optimum (0.35, 0.65, 0)
        Problem::new(
            vec![
                asset("a", 0.10, 0.0, 0.5),
                asset("b", 0.06, 0.0, 0.8),
                asset("c", 0.02, 0.0, 0.5),
            ],
            vec![
                0.012, 0.002, 0.001, //
                0.002, 0.009, 0.001, //
                0.001, 0.001, 0.005,
            ],
            10.0,
            vec![LinearConstraint {
                coefficients: vec![1.0, 0.0, 0.0],
                op: ConstraintOp::Le,
                rhs: 0.35,
            }],
        )
        .unwrap(),
        // diversification floor: optimum (0.7, 0.3, 0)
        Problem::new(
            vec![
                asset("a", 0.11, 0.0, 0.8),
                asset("b", 0.05, 0.0, 0.4),
                asset("c", 0.02, 0.0, 0.4),
            ],
            vec![
                0.014, 0.002, 0.001, //
                0.002, 0.010, 0.001, //
                0.001, 0.001, 0.007,
            ],
            10.0,
            vec![LinearConstraint {
                coefficients: vec![0.0, 1.0, 1.0],
                op: ConstraintOp::Ge,
                rhs: 0.3,
            }],
        )
        .unwrap(),
    ]
}

/// Exhaustive K-bit lattice search restricted to the normalization band:
/// any feasible point's third weight is pinned to a few levels once the
/// first two are fixed.
fn lattice_optimum(problem: &Problem, k: usize) -> (f64, Vec<f64>) {
    let layout = build_layout(problem, k, false).unwrap();
    let band = layout.max_effective_granularity(problem) + 1e-15;
    let levels = 1u64 << k;
    let a = &problem.assets()[0];
    let b = &problem.assets()[1];
    let c = &problem.assets()[2];
    let steps = [
        a.box_width() / levels as f64,
        b.box_width() / levels as f64,
        c.box_width() / levels as f64,
    ];
    let returns = problem.returns();
    let mut best_ret = f64::NEG_INFINITY;
    let mut best_w = vec![0.0; 3];
    for l1 in 0..levels {
        let w1 = a.weight_min + steps[0] * l1 as f64;
        for l2 in 0..levels {
            let w2 = b.weight_min + steps[1] * l2 as f64;
            let lo_f = ((1.0 - band - w1 - w2 - c.weight_min) / steps[2]).ceil();
            let hi_f = ((1.0 + band - w1 - w2 - c.weight_min) / steps[2]).floor();
            if hi_f < 0.0 || lo_f > (levels - 1) as f64 || hi_f < lo_f {
                continue;
            }
            let l3_lo = lo_f.max(0.0) as u64;
            let l3_hi = hi_f.min((levels - 1) as f64) as u64;
            for l3 in l3_lo..=l3_hi {
                let w3 = c.weight_min + steps[2] * l3 as f64;
                let w = [w1, w2, w3];
                let ret = returns[0] * w1 + returns[1] * w2 + returns[2] * w3;
                if ret <= best_ret {
                    continue;
                }
                if (w1 + w2 + w3 - 1.0).abs() > band {
                    continue;
                }
                let mut var = 0.0;
                for i in 0..3 {
                    for j in 0..3 {
                        var += w[i] * problem.cov(i, j) * w[j];
                    }
                }
                if var > problem.sigma2_target() {
                    continue;
                }
                let ok = problem.multi_constraints().iter().all(|cst| {
                    let lhs: f64 = cst.coefficients.iter().zip(&w).map(|(x, y)| x * y).sum();
                    match cst.op {
                        ConstraintOp::Le => lhs - cst.rhs <= 1e-12,
                        ConstraintOp::Ge => cst.rhs - lhs <= 1e-12,
                        ConstraintOp::Eq => (lhs - cst.rhs).abs() <= 1e-12,
                    }
                });
                if !ok {
                    continue;
                }
                best_ret = ret;
                best_w = w.to_vec();
            }
        }
    }
    assert!(best_ret.is_finite(), "lattice search found no feasible point");
    (best_ret, best_w)
}

#[test]
fn acceptance_4_reference_matches_lattice_and_bounds_samplers() {
    let k = 12;
    for (i, problem) in benchmark_instances().iter().enumerate() {
        let reference = reference_continuous(problem, 1e-7).unwrap();
        let (lattice_ret, lattice_w) = lattice_optimum(problem, k);
        let layout = build_layout(problem, k, false).unwrap();
        let p_eff = layout.max_effective_granularity(problem);
        for (j, (rw, lw)) in reference.weights.iter().zip(&lattice_w).enumerate() {
            assert!(
                (rw - lw).abs() <= 2.0 * p_eff,
                "instance {i} weight {j}: reference {rw} vs lattice {lw} (2 p_eff {})",
                2.0 * p_eff
            );
        }
        assert!(lattice_ret <= reference.expected_return + p_eff * 0.2);

        // No feasible sampler solution may beat the dashed-line return.
        let weights = PenaltyWeights::defaults(problem, &layout);
        let model =
            assemble(problem, &layout, &weights, &VolatilityMode::EqualityToZero).unwrap();
        let config = SamplerConfig {
            seed: derive(0xD004, i as u64),
            num_reads: 30,
            sweeps: 3000,
            ..SamplerConfig::default()
        }
        .scaled_to(&model, p_eff);
        let set = simulated_anneal(&model, &config).unwrap();
        let r_max = problem
            .returns()
            .iter()
            .fold(0.0_f64, |a, &b| a.max(b.abs()));
        let mut feasible = 0usize;
        for s in set.samples() {
            let d = decode_solution(&s.bits, &layout, problem).unwrap();
            if check_constraints(&d, problem, &layout).not_satisfied == 0 {
                feasible += 1;
                let ret = portfolio_return(&d.weights, problem).unwrap();
                assert!(
                    ret <= reference.expected_return + p_eff * r_max,
                    "instance {i}: feasible sample return {ret} beats reference {}",
                    reference.expected_return
                );
            }
        }
        assert!(feasible > 0, "instance {i}: sampler found no feasible samples");
    }
    println!(
        "acceptance 4: PASS continuous benchmark within 2 p_eff of the K=12 lattice optimum \
         per weight; all feasible sampler returns at or below the reference line"
    );
}

#[test]
fn acceptance_5_error_statistics() {
    let started = Instant::now();
    for p in [2.0_f64.powi(-4), 2.0_f64.powi(-10), 2.0_f64.powi(-20)] {
        let n = 1_000_000;
        let mc = error_stats_monte_carlo(p, n, 0xE005).unwrap();
        let theory = error_stats_theory(p).unwrap();
        let se = (theory.variance / n as f64).sqrt();
        assert!(
            (mc.mean - theory.mean).abs() <= 5.0 * se,
            "p={p}: Monte Carlo mean {} vs theory {} (se {se})",
            mc.mean,
            theory.mean
        );
    }
    let k10 = error_stats_theory(2.0_f64.powi(-10)).unwrap();
    let printed = format!("{:.2e}", k10.mean);
    assert_eq!(printed, "4.77e-7");
    let elapsed = started.elapsed();
    assert!(elapsed < Duration::from_secs(30), "took {elapsed:?}");
    println!(
        "acceptance 5: PASS Monte Carlo within 5 standard errors at p = 2^-4, 2^-10, 2^-20; \
         theory mean at K=10 prints {printed} ({elapsed:?})"
    );
}

#[test]
fn acceptance_6_finer_bits_tighten_normalization() {
    let problem = qpo_core::model::generate_instance(10, 3, 4242).unwrap();
    let mut medians = Vec::new();
    for (k, sweeps) in [(10usize, 4000usize), (20, 6000)] {
        let layout = build_layout(&problem, k, false).unwrap();
        let weights = PenaltyWeights::defaults(&problem, &layout);
        let model =
            assemble(&problem, &layout, &weights, &VolatilityMode::EqualityToZero).unwrap();
        let config = SamplerConfig {
            seed: 0xF006,
            num_reads: 40,
            sweeps,
            ..SamplerConfig::default()
        }
        .scaled_to(&model, layout.max_effective_granularity(&problem));
        let set = tabu_search(&model, &config).unwrap();
        let mut deviations: Vec<f64> = set
            .samples()
            .iter()
            .filter_map(|s| {
                let d = decode_solution(&s.bits, &layout, &problem).unwrap();
                if check_constraints(&d, &problem, &layout).not_satisfied == 0 {
                    Some((d.weights.iter().sum::<f64>() - 1.0).abs())
                } else {
                    None
                }
            })
            .collect();
        assert!(
            deviations.len() >= 5,
            "K={k}: only {} feasible samples",
            deviations.len()
        );
        deviations.sort_by(f64::total_cmp);
        medians.push(deviations[deviations.len() / 2]);
    }
    assert!(
        medians[1] <= medians[0],
        "median |sum - 1| at K=20 ({}) exceeds K=10 ({})",
        medians[1],
        medians[0]
    );
    println!(
        "acceptance 6: PASS median |sum(w) - 1| tightened from {:.3e} (K=10) to {:.3e} (K=20)",
        medians[0], medians[1]
    );
}

#[test]
fn acceptance_7_success_probability_accounting() {
    // Two-asset family w = (a, 1 - a): variance 0.02 (a^2 + (1-a)^2).
    // The target sits so that 18 of the 100 decoded samples exceed it.
    let problem = Problem::new(
        vec![asset("x", 0.06, 0.0, 1.0), asset("y", 0.03, 0.0, 1.0)],
        vec![0.02, 0.0, 0.0, 0.02],
        0.012,
        Vec::new(),
    )
    .unwrap();
    let layout = build_layout(&problem, 10, false).unwrap();
    let reports: Vec<ViolationReport> = (0..100)
        .map(|i| {
            // 82 balanced portfolios (variance 0.01), 18 concentrated
            // ones (variance 0.0136).
            let a = if i < 82 { 0.5 } else { 0.8 };
            let decoded = DecodedSolution {
                weights: vec![a, 1.0 - a],
                slacks: vec![],
                vola_slack: None,
            };
            check_constraints(&decoded, &problem, &layout)
        })
        .collect();
    for (i, r) in reports.iter().enumerate() {
        let expect = usize::from(i >= 82);
        assert_eq!(r.not_satisfied, expect, "report {i}: {:?}", r.entries);
    }
    let p = success_probability(&reports).unwrap();
    assert_eq!(p, 0.82);

    let breakdown = violation_breakdown(&reports);
    let mut csv = Vec::new();
    write_violation_csv(&breakdown, &mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert!(!text.contains("single"));
    for (label, _, count) in &breakdown {
        match label.as_str() {
            "volatility" => assert_eq!(*count, 18),
            "normalization" => assert_eq!(*count, 0),
            other => panic!("unexpected constraint label {other}"),
        }
    }
    println!(
        "acceptance 7: PASS success probability 0.82 exact; violation export lists only \
         normalization/multi/volatility rows"
    );
}

fn run_qpo(cwd: &Path, args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_qpo"))
        .current_dir(cwd)
        .args(args)
        .output()
        .expect("binary runs")
}

fn read_outputs(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                std::fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

#[test]
fn acceptance_8_byte_identical_reruns() {
    let dir = tempfile::tempdir().unwrap();
    let problem_path = dir.path().join("problem.json");
    let problem = small_constrained_instance(2);
    qpo_core::model::save_problem(&problem, &problem_path).unwrap();

    for solver in ["brute", "sa", "tabu", "constrained"] {
        let cwd_a = dir.path().join(format!("{solver}_a"));
        let cwd_b = dir.path().join(format!("{solver}_b"));
        for cwd in [&cwd_a, &cwd_b] {
            std::fs::create_dir_all(cwd).unwrap();
            let status = run_qpo(
                cwd,
                &[
                    "solve",
                    "--problem",
                    problem_path.to_str().unwrap(),
                    "--bits",
                    "3",
                    "--solver",
                    solver,
                    "--seed",
                    "77",
                    "--reads",
                    "8",
                    "--sweeps",
                    "300",
                    "--out",
                    "out",
                ],
            );
            assert!(
                status.status.code() == Some(0) || status.status.code() == Some(3),
                "{solver}: unexpected exit {:?}: {}",
                status.status.code(),
                String::from_utf8_lossy(&status.stderr)
            );
        }
        let a = read_outputs(&cwd_a.join("out"));
        let b = read_outputs(&cwd_b.join("out"));
        assert_eq!(a.len(), b.len());
        for ((name_a, bytes_a), (name_b, bytes_b)) in a.iter().zip(&b) {
            assert_eq!(name_a, name_b);
            assert_eq!(
                bytes_a, bytes_b,
                "{solver}: {name_a} differs between identical runs"
            );
        }
    }
    println!("acceptance 8: PASS byte-identical outputs on repeated runs for all four solvers");
}
