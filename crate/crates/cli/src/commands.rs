//! The five subcommands: compile, solve, sweep, error-stats, report.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use qpo_core::analysis::{
    self, error_stats_monte_carlo, error_stats_theory, summarize, ExperimentRecord,
};
use qpo_core::compiler::{self, PenaltyWeights, QuadraticModel};
use qpo_core::encoding::{self, EncodingLayout};
use qpo_core::model::{self, Problem};
use qpo_core::solvers::{self, Sample, SampleSet};
use qpo_core::{seed, Error};

use crate::config::{RunConfig, SolverKind};
use crate::{CliError, ErrorStatsArgs, ReportArgs, SweepArgs, SweepAxis};

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", dir.display())))
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    fs::write(path, contents)
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
}

fn load_problem(path: &Path) -> Result<Problem, CliError> {
    model::load_problem(path).map_err(|e| CliError::Usage(e.to_string()))
}

fn write_effective_config(cfg: &RunConfig, dir: &Path) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(cfg).expect("config serializes");
    write_file(&dir.join("effective_config.json"), text.as_bytes())?;
    println!("effective config: {text}");
    Ok(())
}

fn penalty_weights(cfg: &RunConfig, problem: &Problem, layout: &EncodingLayout) -> Result<PenaltyWeights, CliError> {
    let mut weights = PenaltyWeights::defaults(problem, layout);
    if let Some(v) = cfg.lambda1 {
        weights.lambda1 = v;
    }
    if let Some(v) = cfg.lambda2 {
        weights.lambda2 = v;
    }
    if let Some(v) = cfg.lambda3 {
        weights.lambda3 = vec![v; problem.multi_constraints().len()];
    }
    if let Some(v) = cfg.lambda4 {
        weights.lambda4 = v;
    }
    weights.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(weights)
}

fn compile_model(
    cfg: &RunConfig,
    problem: &Problem,
) -> Result<(EncodingLayout, QuadraticModel), CliError> {
    let layout = encoding::build_layout(problem, cfg.bits, false).map_err(to_cli)?;
    let weights = penalty_weights(cfg, problem, &layout)?;
    let mode = cfg.h4_mode.to_mode(problem.n_assets());
    let model = compiler::assemble(problem, &layout, &weights, &mode).map_err(to_cli)?;
    Ok((layout, model))
}

fn to_cli(e: Error) -> CliError {
    match e {
        Error::NonConverged { .. } => CliError::Runtime(e.to_string()),
        _ => CliError::Usage(e.to_string()),
    }
}

pub fn cmd_compile(cfg: &RunConfig) -> Result<(), CliError> {
    let problem = load_problem(cfg.require_problem()?)?;
    let (layout, model) = compile_model(cfg, &problem)?;
    ensure_dir(&cfg.out)?;
    write_effective_config(cfg, &cfg.out)?;

    let layout_json = serde_json::to_string_pretty(&layout).expect("layout serializes");
    write_file(&cfg.out.join("layout.json"), layout_json.as_bytes())?;
    let mut qubo_text = Vec::new();
    compiler::export_qubo(&model, &mut qubo_text)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    write_file(&cfg.out.join("qubo.txt"), &qubo_text)?;

    println!(
        "total_bits={} nnz={} density={:.6}",
        layout.total_bits,
        model.nnz(),
        model.density()
    );
    Ok(())
}

/// Everything `solve` writes, kept so sweeps can reuse the pipeline.
struct SolveOutcome {
    record: ExperimentRecord,
}

fn run_solver(
    cfg: &RunConfig,
    problem: &Problem,
    out_dir: &Path,
) -> Result<SolveOutcome, CliError> {
    ensure_dir(out_dir)?;
    let sampler = cfg.sampler_config();

    let (layout, sample_set) = match cfg.solver {
        SolverKind::Constrained => {
            let layout = encoding::build_natural_layout(problem, cfg.bits).map_err(to_cli)?;
            let cmodel = compiler::build_constrained(problem, &layout);
            let result =
                solvers::solve_constrained(&cmodel, &sampler, cfg.eta, cfg.max_rounds)
                    .map_err(to_cli)?;
            let rounds_json =
                serde_json::to_string_pretty(&result.rounds).expect("rounds serialize");
            write_file(&out_dir.join("rounds.json"), rounds_json.as_bytes())?;
            if let Some(inc) = &result.incumbent {
                let inc_json = serde_json::json!({
                    "bits": inc.bits.to_string(),
                    "objective_energy": inc.energy,
                    "round": inc.round,
                });
                write_file(
                    &out_dir.join("incumbent.json"),
                    serde_json::to_string_pretty(&inc_json).unwrap().as_bytes(),
                )?;
            }
            (layout, result.samples)
        }
        SolverKind::Brute => {
            let (layout, model) = compile_model(cfg, problem)?;
            if layout.total_bits > solvers::MAX_BRUTE_BITS {
                return Err(CliError::Usage(format!(
                    "brute solver needs total_bits <= {}, layout has {}",
                    solvers::MAX_BRUTE_BITS,
                    layout.total_bits
                )));
            }
            let (bits, energy) = solvers::brute_force(&model).map_err(to_cli)?;
            let set = SampleSet::from_samples(vec![Sample {
                bits,
                energy,
                read: 0,
                round: 0,
            }]);
            (layout, set)
        }
        SolverKind::Sa | SolverKind::Tabu => {
            let (layout, model) = compile_model(cfg, problem)?;
            let scaled = sampler
                .clone()
                .scaled_to(&model, layout.max_effective_granularity(problem));
            let set = if cfg.solver == SolverKind::Sa {
                solvers::simulated_anneal(&model, &scaled).map_err(to_cli)?
            } else {
                solvers::tabu_search(&model, &scaled).map_err(to_cli)?
            };
            (layout, set)
        }
    };

    let record = summarize(&sample_set, problem, &layout).map_err(to_cli)?;

    let feasible_flags: Vec<bool> = record.samples.iter().map(|r| r.feasible).collect();
    let mut samples_csv = Vec::new();
    solvers::write_samples_csv(&sample_set, &feasible_flags, &mut samples_csv)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    write_file(&out_dir.join("samples.csv"), &samples_csv)?;

    let record_json = serde_json::to_string_pretty(&record).expect("record serializes");
    write_file(&out_dir.join("record.json"), record_json.as_bytes())?;
    let mut record_csv = Vec::new();
    analysis::write_record_csv(&record, &mut record_csv)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    write_file(&out_dir.join("record.csv"), &record_csv)?;

    let reports: Vec<analysis::ViolationReport> = sample_set
        .samples()
        .iter()
        .map(|s| {
            let decoded = encoding::decode_solution(&s.bits, &layout, problem).map_err(to_cli)?;
            Ok(analysis::check_constraints(&decoded, problem, &layout))
        })
        .collect::<Result<_, CliError>>()?;
    let breakdown = analysis::violation_breakdown(&reports);
    let mut violations_csv = Vec::new();
    analysis::write_violation_csv(&breakdown, &mut violations_csv)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    write_file(&out_dir.join("violations.csv"), &violations_csv)?;

    Ok(SolveOutcome { record })
}

pub fn cmd_solve(cfg: &RunConfig) -> Result<(), CliError> {
    let problem = load_problem(cfg.require_problem()?)?;
    ensure_dir(&cfg.out)?;
    write_effective_config(cfg, &cfg.out)?;
    let outcome = run_solver(cfg, &problem, &cfg.out)?;
    print_record_summary(&outcome.record);
    if outcome.record.best_feasible.is_none() {
        return Err(CliError::Infeasible);
    }
    Ok(())
}

fn print_record_summary(record: &ExperimentRecord) {
    println!(
        "samples={} success_probability={:.4}",
        record.samples.len(),
        record.success_probability
    );
    match record.best_feasible_record() {
        Some(best) => println!(
            "best_feasible: return={:.6} volatility={:.6} sum_weights={:.6}",
            best.expected_return, best.volatility, best.sum_weights
        ),
        None => println!("best_feasible: none"),
    }
}

pub fn cmd_sweep(cfg: &RunConfig, args: &SweepArgs) -> Result<(), CliError> {
    if args.values.is_empty() {
        return Err(CliError::Usage("sweep needs at least one value".into()));
    }
    let base_problem = match args.axis {
        SweepAxis::Assets => None,
        _ => Some(load_problem(cfg.require_problem()?)?),
    };
    ensure_dir(&cfg.out)?;
    write_effective_config(cfg, &cfg.out)?;

    struct Point {
        value: usize,
        dir: PathBuf,
        result: Result<SolveOutcome, CliError>,
    }

    let points: Vec<Point> = args
        .values
        .par_iter()
        .enumerate()
        .map(|(idx, &value)| {
            let mut point_cfg = cfg.clone();
            point_cfg.seed = seed::derive(cfg.seed, idx as u64);
            let dir = cfg.out.join(format!("{}_{value}", args.axis));
            let result = (|| {
                ensure_dir(&dir)?;
                let problem = match args.axis {
                    SweepAxis::Bits => {
                        point_cfg.bits = value;
                        base_problem.clone().unwrap()
                    }
                    SweepAxis::Reads => {
                        point_cfg.reads = value;
                        base_problem.clone().unwrap()
                    }
                    SweepAxis::Assets => {
                        let p = model::generate_instance(value, args.factors, point_cfg.seed)
                            .map_err(to_cli)?;
                        model::save_problem(&p, dir.join("problem.json"))
                            .map_err(to_cli)?;
                        p
                    }
                };
                run_solver(&point_cfg, &problem, &dir)
            })();
            Point { value, dir, result }
        })
        .collect();

    let mut summary = String::from(
        "axis,value,status,samples,success_probability,median_return,median_volatility,\
         median_sum_weights,best_feasible_return,best_feasible_volatility\n",
    );
    let mut any_feasible = false;
    for p in &points {
        match &p.result {
            Ok(outcome) => {
                let r = &outcome.record;
                let (br, bv) = match r.best_feasible_record() {
                    Some(b) => (b.expected_return.to_string(), b.volatility.to_string()),
                    None => (String::new(), String::new()),
                };
                if r.best_feasible.is_some() {
                    any_feasible = true;
                }
                summary.push_str(&format!(
                    "{},{},ok,{},{},{},{},{},{},{}\n",
                    args.axis,
                    p.value,
                    r.samples.len(),
                    r.success_probability,
                    r.medians.expected_return,
                    r.medians.volatility,
                    r.medians.sum_weights,
                    br,
                    bv
                ));
                println!(
                    "{}={} ok (success_probability {:.4}, outputs in {})",
                    args.axis,
                    p.value,
                    r.success_probability,
                    p.dir.display()
                );
            }
            Err(e) => {
                summary.push_str(&format!(
                    "{},{},failed,,,,,,,\n",
                    args.axis, p.value
                ));
                println!("{}={} failed: {e}", args.axis, p.value);
            }
        }
    }
    write_file(&cfg.out.join("summary.csv"), summary.as_bytes())?;
    if !any_feasible {
        return Err(CliError::Infeasible);
    }
    Ok(())
}

pub fn cmd_error_stats(args: &ErrorStatsArgs) -> Result<(), CliError> {
    let p = match (args.p, args.bits) {
        (Some(p), None) => p,
        (None, Some(k)) => encoding::granularity(k).map_err(to_cli)?,
        (None, None) => return Err(CliError::Usage("give either --p or --bits".into())),
        (Some(_), Some(_)) => {
            return Err(CliError::Usage("give only one of --p and --bits".into()))
        }
    };
    let theory = error_stats_theory(p).map_err(to_cli)?;
    let mc = error_stats_monte_carlo(p, args.samples, args.seed).map_err(to_cli)?;

    println!("granularity p = {p:e}");
    println!("{:<12} {:>12} {:>12} {:>12}", "", "mean", "variance", "skewness");
    println!(
        "{:<12} {:>12} {:>12} {:>12}",
        "theory",
        format!("{:.2e}", theory.mean),
        format!("{:.2e}", theory.variance),
        format!("{:.2e}", theory.skewness)
    );
    println!(
        "{:<12} {:>12} {:>12} {:>12}",
        "monte-carlo",
        format!("{:.2e}", mc.mean),
        format!("{:.2e}", mc.variance),
        format!("{:.2e}", mc.skewness)
    );
    println!("(n = {}, seed = {})", args.samples, args.seed);

    if let Some(out) = &args.out {
        if let Some(parent) = out.parent() {
            if !parent.as_os_str().is_empty() {
                ensure_dir(parent)?;
            }
        }
        let csv = format!(
            "source,p,mean,variance,skewness\ntheory,{p},{},{},{}\nmonte_carlo,{p},{},{},{}\n",
            theory.mean, theory.variance, theory.skewness, mc.mean, mc.variance, mc.skewness
        );
        write_file(out, csv.as_bytes())?;
    }
    Ok(())
}

pub fn cmd_report(args: &ReportArgs) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.record).map_err(|e| {
        CliError::Usage(format!("cannot read record {}: {e}", args.record.display()))
    })?;
    let record: ExperimentRecord = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("bad record {}: {e}", args.record.display())))?;

    println!("samples: {}", record.samples.len());
    println!("success probability: {:.4}", record.success_probability);
    println!(
        "medians: return={:.6} volatility={:.6} sum_weights={:.6}",
        record.medians.expected_return, record.medians.volatility, record.medians.sum_weights
    );
    match record.best_feasible_record() {
        Some(b) => {
            let sharpe = b
                .sharpe
                .map(|s| format!("{s:.4}"))
                .unwrap_or_else(|| "undefined".into());
            println!(
                "best feasible: return={:.6} volatility={:.6} sharpe={sharpe} (read {}, round {})",
                b.expected_return, b.volatility, b.read, b.round
            );
        }
        None => println!("best feasible: none"),
    }
    let hist = &record.sum_weights_histogram;
    println!(
        "sum-of-weights histogram over [{}, {}]:",
        hist.lo, hist.hi
    );
    let peak = hist.counts.iter().copied().max().unwrap_or(1).max(1);
    for (i, &count) in hist.counts.iter().enumerate() {
        let width = (count * 40).div_ceil(peak);
        let lo = hist.lo + (hist.hi - hist.lo) * i as f64 / hist.counts.len() as f64;
        println!("{lo:>10.6} | {} {count}", "#".repeat(width));
    }
    Ok(())
}
