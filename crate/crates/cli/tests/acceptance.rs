//! End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.
//!
//! Criteria can be selected by number: `cargo test --test acceptance -- 5 10`.

use std::collections::BTreeSet;
use std::process::Command;
use std::time::Instant;

use dbscd_core::covering::solve_covering;
use dbscd_core::dbscd::{
    sample_lipschitz_check, solve_packing, truncate, PackingSolver, SolveOptions, TraceMode,
    FEASIBILITY_TOL, MONOTONICITY_TOL,
};
use dbscd_core::instance::normalize;
use dbscd_core::mtx::write_matrix_market_file;
use dbscd_core::oracle::{
    check_covering_feasible, check_packing_feasible, enumerate_covering_vertices,
    enumerate_packing_vertices, simplex_covering, simplex_covering_matrix, simplex_packing,
    simplex_packing_matrix,
};
use dbscd_core::smoothing::{gradient, initial_point, objective};
use dbscd_core::sweep::bench_run;
use dbscd_core::{derive_params, generate_random, CoveringInstance, SparseNonnegMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const GRID_SEED: u64 = 20_240_601;
const GRID_INSTANCES: u64 = 10;
const SEEDS_PER_INSTANCE: u64 = 50;
const PACK_EPS: f64 = 0.1;
const COVER_EPS: f64 = 0.05;

struct Outcome {
    id: u32,
    name: &'static str,
    pass: bool,
    detail: String,
}

struct GridInstance {
    raw: SparseNonnegMatrix,
}

/// Invariant counters gathered from every solver run.
#[derive(Default)]
struct Trajectory {
    runs: u64,
    iterations: u64,
    monotonicity_violations: u64,
    max_increase: f64,
    trajectory_violations: u64,
    worst_activity_excess: f64,
}

impl Trajectory {
    fn record(&mut self, report: &dbscd_core::PackingReport) {
        self.runs += 1;
        self.iterations += report.iterations;
        self.monotonicity_violations += report.stats.monotonicity_violations;
        self.max_increase = self.max_increase.max(report.stats.max_increase);
        self.trajectory_violations += report.stats.trajectory_violations;
        let excess = report.stats.max_row_activity - (1.0 + report.params.epsilon);
        self.worst_activity_excess = self.worst_activity_excess.max(excess);
    }
}

struct PackingResults {
    runs: u64,
    feasible: u64,
    good: u64,
    worst_violation: f64,
    min_ratio: f64,
    trajectory: Trajectory,
}

struct CoveringResults {
    runs: u64,
    feasible: u64,
    good: u64,
    worst_shortfall: f64,
    max_ratio: f64,
    total_fixed: u64,
    total_constraints: u64,
    trajectory: Trajectory,
}

fn grid() -> Vec<GridInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(GRID_SEED);
    (0..GRID_INSTANCES)
        .map(|k| {
            let n = rng.random_range(5..=40);
            let m = rng.random_range(5..=40);
            GridInstance {
                raw: generate_random(n, m, 0.3, GRID_SEED + k).unwrap(),
            }
        })
        .collect()
}

fn packing_runs(grid: &[GridInstance]) -> PackingResults {
    let mut res = PackingResults {
        runs: 0,
        feasible: 0,
        good: 0,
        worst_violation: f64::NEG_INFINITY,
        min_ratio: f64::INFINITY,
        trajectory: Trajectory {
            max_increase: f64::NEG_INFINITY,
            worst_activity_excess: f64::NEG_INFINITY,
            ..Trajectory::default()
        },
    };
    for (k, g) in grid.iter().enumerate() {
        let started = Instant::now();
        let inst = normalize(&g.raw).unwrap();
        let opt = simplex_packing_matrix(&g.raw).unwrap().opt_value;
        for seed in 0..SEEDS_PER_INSTANCE {
            let r = solve_packing(&inst, PACK_EPS, seed, None).unwrap();
            let check = check_packing_feasible(&r.x_final, &g.raw, 1e-9).unwrap();
            res.runs += 1;
            res.feasible += u64::from(check.feasible);
            res.worst_violation = res.worst_violation.max(check.max_violation);
            let ratio = r.objective / opt;
            res.min_ratio = res.min_ratio.min(ratio);
            res.good += u64::from(r.objective >= (1.0 - 10.0 * PACK_EPS) * opt);
            res.trajectory.record(&r);
        }
        eprintln!(
            "  packing instance {k} ({}x{}, nnz {}): {:.1}s",
            g.raw.n_rows(),
            g.raw.n_cols(),
            g.raw.nnz(),
            started.elapsed().as_secs_f64()
        );
    }
    res
}

fn covering_runs(grid: &[GridInstance]) -> CoveringResults {
    let mut res = CoveringResults {
        runs: 0,
        feasible: 0,
        good: 0,
        worst_shortfall: f64::NEG_INFINITY,
        max_ratio: f64::NEG_INFINITY,
        total_fixed: 0,
        total_constraints: 0,
        trajectory: Trajectory {
            max_increase: f64::NEG_INFINITY,
            worst_activity_excess: f64::NEG_INFINITY,
            ..Trajectory::default()
        },
    };
    for (k, g) in grid.iter().enumerate() {
        let started = Instant::now();
        // The covering program dual to the packing instance: one row per
        // packing variable.
        let c = g.raw.transpose();
        let cov = CoveringInstance::new(&c).unwrap();
        let opt = simplex_covering_matrix(&c).unwrap().opt_value;
        for seed in 0..SEEDS_PER_INSTANCE {
            let r = solve_covering(&cov, COVER_EPS, seed).unwrap();
            let check = check_covering_feasible(&r.y_final, &c, 1e-12).unwrap();
            res.runs += 1;
            res.feasible += u64::from(check.feasible);
            res.worst_shortfall = res.worst_shortfall.max(check.max_violation);
            let ratio = r.objective / opt;
            res.max_ratio = res.max_ratio.max(ratio);
            res.good += u64::from(r.objective <= (1.0 + 100.0 * COVER_EPS) * opt);
            res.total_fixed += r.num_fixed as u64;
            res.total_constraints += c.n_rows() as u64;
            res.trajectory.record(&r.packing_report);
        }
        eprintln!(
            "  covering instance {k} ({}x{}, nnz {}): {:.1}s",
            c.n_rows(),
            c.n_cols(),
            c.nnz(),
            started.elapsed().as_secs_f64()
        );
    }
    res
}

fn criterion_packing(p: &PackingResults) -> Outcome {
    let pass = p.feasible == p.runs && p.good * 10 >= p.runs * 9;
    Outcome {
        id: 1,
        name: "packing approximation",
        pass,
        detail: format!(
            "feasible {}/{} (worst violation {:.3e}), objective >= (1-10eps) OPT in {}/{}, min ratio {:.4}",
            p.feasible, p.runs, p.worst_violation, p.good, p.runs, p.min_ratio
        ),
    }
}

fn criterion_covering(c: &CoveringResults) -> Outcome {
    let pass = c.feasible == c.runs && c.good * 10 >= c.runs * 9;
    Outcome {
        id: 2,
        name: "covering approximation",
        pass,
        detail: format!(
            "feasible {}/{} (worst shortfall {:.3e}), objective <= (1+100eps) OPT in {}/{}, max ratio {:.4}",
            c.feasible, c.runs, c.worst_shortfall, c.good, c.runs, c.max_ratio
        ),
    }
}

fn merged<'a>(parts: impl Iterator<Item = &'a Trajectory>) -> Trajectory {
    let mut t = Trajectory {
        max_increase: f64::NEG_INFINITY,
        worst_activity_excess: f64::NEG_INFINITY,
        ..Trajectory::default()
    };
    for p in parts {
        t.runs += p.runs;
        t.iterations += p.iterations;
        t.monotonicity_violations += p.monotonicity_violations;
        t.max_increase = t.max_increase.max(p.max_increase);
        t.trajectory_violations += p.trajectory_violations;
        t.worst_activity_excess = t.worst_activity_excess.max(p.worst_activity_excess);
    }
    t
}

fn criterion_monotone(t: &Trajectory) -> Outcome {
    Outcome {
        id: 3,
        name: "objective monotonicity",
        pass: t.runs > 0 && t.monotonicity_violations == 0 && t.max_increase <= MONOTONICITY_TOL,
        detail: format!(
            "{} runs, {} iterations, {} increases above 1e-9, largest step change {:.3e}",
            t.runs, t.iterations, t.monotonicity_violations, t.max_increase
        ),
    }
}

fn criterion_trajectory(t: &Trajectory) -> Outcome {
    Outcome {
        id: 4,
        name: "trajectory feasibility",
        pass: t.runs > 0
            && t.trajectory_violations == 0
            && t.worst_activity_excess <= FEASIBILITY_TOL,
        detail: format!(
            "{} runs, {} iterates above 1+eps+1e-9, max_k max_j (Ax_k)_j - (1+eps) = {:.3e}",
            t.runs, t.trajectory_violations, t.worst_activity_excess
        ),
    }
}

fn criterion_gradient() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    let mut failures = 0;
    for pair in 0..100u64 {
        let n = rng.random_range(2..=20);
        let m = rng.random_range(5..=20);
        let inst = normalize(&generate_random(n, m, 0.3, 500 + pair).unwrap()).unwrap();
        let eps = [0.5, 0.2, 0.1, 0.05][pair as usize % 4];
        let mu = derive_params(n, m, eps).unwrap().mu;
        let x: Vec<f64> = initial_point(&inst, eps)
            .iter()
            .map(|&v| v * rng.random_range(0.0..1.05))
            .collect();
        let (g, _) = gradient(&inst, &x, mu).unwrap();
        for i in 0..n {
            let h = 1e-6 * x[i].abs().max(1.0);
            let mut up = x.clone();
            let mut down = x.clone();
            up[i] += h;
            down[i] -= h;
            let fd = (objective(&inst, &up, mu).unwrap() - objective(&inst, &down, mu).unwrap())
                / (2.0 * h);
            let rel = (fd - g[i]).abs() / g[i].abs().max(1.0);
            worst = worst.max(rel);
            if rel > 1e-6 {
                failures += 1;
            }
        }
    }
    Outcome {
        id: 5,
        name: "gradient vs central differences",
        pass: failures == 0,
        detail: format!("100 pairs, {failures} components above 1e-6, worst relative error {worst:.3e}"),
    }
}

fn criterion_initial_point(grid: &[GridInstance]) -> Outcome {
    let mut checked = 0;
    let mut failures = 0;
    let mut worst_margin = f64::INFINITY;
    let mut instances: Vec<SparseNonnegMatrix> = grid.iter().map(|g| g.raw.clone()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for k in 0..50 {
        let n = rng.random_range(1..=40);
        let m = rng.random_range(5..=40);
        instances.push(generate_random(n, m, rng.random_range(0.5..=1.0), 600 + k).unwrap());
    }
    for raw in &instances {
        let inst = normalize(raw).unwrap();
        for eps in [0.5, 0.2, 0.1, 0.05] {
            let mu = derive_params(inst.n(), inst.m(), eps).unwrap().mu;
            let f = objective(&inst, &initial_point(&inst, eps), mu).unwrap();
            let bound = -(1.0 - eps) / inst.n() as f64;
            checked += 1;
            worst_margin = worst_margin.min(bound - f);
            if f > bound {
                failures += 1;
            }
        }
    }
    Outcome {
        id: 6,
        name: "initial point value",
        pass: failures == 0,
        detail: format!("{checked} (instance, eps) pairs, {failures} above -(1-eps)/n, smallest margin {worst_margin:.3e}"),
    }
}

fn criterion_lipschitz() -> Outcome {
    let taus = [0.0, 0.25, 0.5, 0.75];
    let mut sampled = 0;
    let mut checks = 0;
    let mut violations = 0;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for k in 0..10u64 {
        let n = rng.random_range(5..=40);
        let m = rng.random_range(5..=40);
        let inst = normalize(&generate_random(n, m, 0.3, 700 + k).unwrap()).unwrap();
        let opts = SolveOptions {
            iteration_override: Some(200_000),
            trace: TraceMode::Off,
            ..SolveOptions::default()
        };
        let mut solver = PackingSolver::new(&inst, PACK_EPS, k, opts).unwrap();
        let params = *solver.params();
        // Ten iterations per trajectory, spread from the start to 2e5.
        let points: BTreeSet<u64> = (0..10).map(|j| (j * j * 2_000) as u64).collect();
        while !solver.is_done() {
            if points.contains(&solver.iteration()) {
                let trunc = truncate(&solver.evaluation().gradient, params.epsilon).unwrap();
                for t in 0..params.w {
                    if trunc.bucket_len(t) == 0 {
                        continue;
                    }
                    let r = sample_lipschitz_check(&inst, solver.x(), &trunc, t, &params, &taus)
                        .unwrap();
                    checks += r.samples.len();
                    violations += r.violations;
                    lo = lo.min(r.min_ratio());
                    hi = hi.max(r.max_ratio());
                }
                sampled += 1;
            }
            solver.advance().unwrap();
        }
    }
    Outcome {
        id: 7,
        name: "local multiplicative Lipschitz",
        pass: sampled == 100 && violations == 0,
        detail: format!(
            "{sampled} iterations, {checks} (coordinate, tau) checks, {violations} outside [1/2, 3/2], ratios in [{lo:.4}, {hi:.4}]"
        ),
    }
}

fn criterion_scaling() -> Outcome {
    let n = 20;
    let t = |eps: f64| derive_params(n, n, eps).unwrap().iterations as f64;
    let formula = [t(0.1) / t(0.2), t(0.05) / t(0.1)];
    let formula_ok = formula.iter().all(|r| (3.5..=6.0).contains(r));

    let inst = normalize(&generate_random(n, n, 0.3, 8).unwrap()).unwrap();
    let opt = simplex_packing(&inst).unwrap().opt_value;
    let mean_hit = |eps: f64| {
        let mut total = 0.0;
        let mut misses = 0;
        for seed in 0..20 {
            let row = bench_run(&inst, eps, seed, Some(opt)).unwrap();
            match row.iterations_to_target {
                Some(k) => total += k as f64,
                None => misses += 1,
            }
        }
        (total / 20.0, misses)
    };
    let (k10, miss10) = mean_hit(0.1);
    let (k05, miss05) = mean_hit(0.05);
    let measured = k05 / k10;
    let measured_ok = miss10 == 0 && miss05 == 0 && measured <= 6.0;
    Outcome {
        id: 8,
        name: "iteration scaling",
        pass: formula_ok && measured_ok,
        detail: format!(
            "T ratios {:.4} (0.2->0.1), {:.4} (0.1->0.05); mean iterations to target {k10:.0} at 0.1, {k05:.0} at 0.05 (ratio {measured:.3}, misses {miss10}+{miss05}); target at 0.2 is -(1-5*0.2) OPT = 0, met by x_0",
            formula[0], formula[1]
        ),
    }
}

fn run_cli(args: &[&str]) -> (serde_json::Value, i32) {
    let out = Command::new(env!("CARGO_BIN_EXE_dbscd"))
        .args(args)
        .output()
        .expect("dbscd binary runs");
    let value = serde_json::from_slice(&out.stdout).unwrap_or(serde_json::Value::Null);
    (value, out.status.code().unwrap_or(-1))
}

fn criterion_determinism(grid: &[GridInstance]) -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let grid_path = dir.path().join("grid0.mtx");
    write_matrix_market_file(&grid_path, &grid[0].raw).unwrap();
    // Large enough that full evaluations take the parallel path.
    let big_path = dir.path().join("big.mtx");
    write_matrix_market_file(&big_path, &generate_random(400, 300, 0.3, 9).unwrap()).unwrap();

    let cases: [(&str, &std::path::Path, &str, Option<&str>); 3] = [
        ("pack", &grid_path, "0.1", None),
        ("cover", &grid_path, "0.1", None),
        ("pack", &big_path, "0.1", Some("3000")),
    ];
    let mut compared = 0;
    let mut mismatches = Vec::new();
    for (i, (mode, path, eps, iterations)) in cases.iter().enumerate() {
        let mut reports = Vec::new();
        let mut solutions = Vec::new();
        for threads in ["1", "8"] {
            let sol = dir.path().join(format!("sol{i}_{threads}.txt"));
            let mut args = vec![
                "solve", "--mode", mode, "--input", path.to_str().unwrap(), "--epsilon", eps,
                "--seed", "17", "--threads", threads, "--solution", sol.to_str().unwrap(),
            ];
            if let Some(it) = iterations {
                args.extend(["--iterations", it]);
            }
            let (mut report, code) = run_cli(&args);
            if code != 0 {
                mismatches.push(format!("case {i} exited {code}"));
                continue;
            }
            if let Some(obj) = report.as_object_mut() {
                for key in ["wall_time_ms", "threads", "solution_path"] {
                    obj.remove(key);
                }
            }
            reports.push(report);
            solutions.push(std::fs::read(&sol).unwrap());
        }
        if reports.len() == 2 {
            compared += 1;
            if reports[0] != reports[1] {
                mismatches.push(format!("case {i} reports differ"));
            }
            if solutions[0] != solutions[1] {
                mismatches.push(format!("case {i} solution files differ"));
            }
        }
    }
    Outcome {
        id: 9,
        name: "thread-count determinism",
        pass: compared == cases.len() && mismatches.is_empty(),
        detail: if mismatches.is_empty() {
            format!("{compared} cases (pack, cover, 400x300 pack) identical with 1 and 8 threads")
        } else {
            mismatches.join("; ")
        },
    }
}

fn criterion_oracle(grid: &[GridInstance]) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst_enum: f64 = 0.0;
    let mut worst_dual: f64 = 0.0;
    let mut opt_range_failures = 0;
    let mut opt_checked = 0;
    let mut check_opt = |opt: f64, n: usize| {
        opt_checked += 1;
        if !(opt >= 1.0 - 1e-9 && opt <= n as f64 + 1e-9) {
            opt_range_failures += 1;
        }
    };
    for k in 0..100u64 {
        let n = rng.random_range(1..=4);
        let m = rng.random_range(1..=4);
        let inst = normalize(&generate_random(n, m, rng.random_range(0.3..=1.0), 1000 + k).unwrap())
            .unwrap();
        let s = simplex_packing(&inst).unwrap();
        let e = enumerate_packing_vertices(inst.matrix(), 5).unwrap();
        worst_enum = worst_enum.max((s.opt_value - e.opt_value).abs());
        let cov = inst.dual_covering();
        let s = simplex_covering(&cov).unwrap();
        let e = enumerate_covering_vertices(cov.matrix(), 5).unwrap();
        worst_enum = worst_enum.max((s.opt_value - e.opt_value).abs());
        check_opt(simplex_packing(&inst).unwrap().opt_value, n);
    }
    for k in 0..100u64 {
        let n = rng.random_range(1..=40);
        let m = rng.random_range(5..=40);
        let inst = normalize(&generate_random(n, m, 0.3, 2000 + k).unwrap()).unwrap();
        let p = simplex_packing(&inst).unwrap().opt_value;
        let c = simplex_covering(&inst.dual_covering()).unwrap().opt_value;
        worst_dual = worst_dual.max((p - c).abs());
        check_opt(p, n);
    }
    for g in grid {
        let inst = normalize(&g.raw).unwrap();
        check_opt(simplex_packing(&inst).unwrap().opt_value, inst.n());
    }
    Outcome {
        id: 10,
        name: "oracle soundness",
        pass: worst_enum <= 1e-9 && worst_dual <= 1e-9 && opt_range_failures == 0,
        detail: format!(
            "simplex vs enumeration max gap {worst_enum:.2e} (100 packing + 100 covering), duality max gap {worst_dual:.2e} (100 pairs), OPT in [1, n] for {}/{opt_checked}",
            opt_checked - opt_range_failures
        ),
    }
}

fn main() {
    let selected: BTreeSet<u32> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let wants = |id: u32| selected.is_empty() || selected.contains(&id);
    let started = Instant::now();
    let grid = grid();
    let mut outcomes = Vec::new();

    let needs_packing = wants(1) || wants(3) || wants(4);
    let needs_covering = wants(2) || wants(3) || wants(4);
    let packing = needs_packing.then(|| {
        eprintln!("running {} packing solves", GRID_INSTANCES * SEEDS_PER_INSTANCE);
        packing_runs(&grid)
    });
    let covering = needs_covering.then(|| {
        eprintln!("running {} covering solves", GRID_INSTANCES * SEEDS_PER_INSTANCE);
        covering_runs(&grid)
    });
    if let Some(p) = &packing {
        if wants(1) {
            outcomes.push(criterion_packing(p));
        }
    }
    if let Some(c) = &covering {
        if wants(2) {
            outcomes.push(criterion_covering(c));
        }
    }
    let trajectories = merged(
        packing
            .iter()
            .map(|p| &p.trajectory)
            .chain(covering.iter().map(|c| &c.trajectory)),
    );
    if wants(3) {
        outcomes.push(criterion_monotone(&trajectories));
    }
    if wants(4) {
        outcomes.push(criterion_trajectory(&trajectories));
    }
    if wants(5) {
        outcomes.push(criterion_gradient());
    }
    if wants(6) {
        outcomes.push(criterion_initial_point(&grid));
    }
    if wants(7) {
        outcomes.push(criterion_lipschitz());
    }
    if wants(8) {
        outcomes.push(criterion_scaling());
    }
    if wants(9) {
        outcomes.push(criterion_determinism(&grid));
    }
    if wants(10) {
        outcomes.push(criterion_oracle(&grid));
    }

    println!();
    for o in &outcomes {
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("{tag} {:>2} {}: {}", o.id, o.name, o.detail);
    }
    if let Some(c) = &covering {
        println!(
            "INFO    covering repairs: {} over {} runs, mean {:.3} per run, {:.2e} per constraint (eps = {COVER_EPS})",
            c.total_fixed,
            c.runs,
            c.total_fixed as f64 / c.runs as f64,
            c.total_fixed as f64 / c.total_constraints as f64
        );
    }
    println!(
        "INFO    wall time {:.1} s on {} thread(s)",
        started.elapsed().as_secs_f64(),
        rayon::current_num_threads()
    );
    if outcomes.iter().any(|o| !o.pass) {
        std::process::exit(1);
    }
}
