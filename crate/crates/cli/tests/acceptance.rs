//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each,
//! and exits non-zero if any fails.

use std::path::Path as FsPath;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use qnt_core::estimators::{benchmark_variance, solve_plan, ExpectedCounts};
use qnt_core::fisher::{crossover, path_information, plan_qfim, qcrb, single_link_qcrb, FisherMode};
use qnt_core::network::{build_star, builtin_plan, channel_uses, single_link_plan, PlanKind};
use qnt_core::oracle;
use qnt_core::schemes::Scheme;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = fn() -> Outcome;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

fn oracle_outcomes(scheme: Scheme, params: &[f64]) -> [f64; 4] {
    match scheme {
        Scheme::Lzm => oracle::lzm_outcomes(params),
        Scheme::Jbm => oracle::jbm_outcomes(params),
        Scheme::Pem => oracle::pem_outcomes(params),
    }
    .expect("valid chain")
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for i in 0..=20 {
        let w = i as f64 / 20.0;
        for scheme in Scheme::ALL {
            let analytic = scheme.probabilities(w);
            let simulated = oracle_outcomes(scheme, &[w]);
            for k in 0..4 {
                worst = worst.max((analytic[k] - simulated[k]).abs());
            }
        }
    }
    let elapsed = start.elapsed();
    let detail = format!("max |diff| = {worst:.3e}, runtime {elapsed:.2?}");
    if worst <= 1e-12 && elapsed < Duration::from_secs(5) {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn multiplicative_composition() -> Outcome {
    let grid: Vec<f64> = (0..10).map(|i| i as f64 / 9.0).collect();
    let mut worst = 0.0f64;
    for &w1 in &grid {
        for &w2 in &grid {
            let chain = oracle::linear_generation(&[w1, w2]).map_err(|e| e.to_string())?;
            let target = oracle::werner_density(w1 * w2).map_err(|e| e.to_string())?;
            worst = worst.max(chain.max_abs_diff(&target));
        }
    }
    let detail = format!("10x10 grid, max |diff| = {worst:.3e}");
    if worst <= 1e-12 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn fisher_mode_consistency() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    let mut worst_lzm_direct = 0.0f64;
    for _ in 0..300 {
        let scheme = Scheme::ALL[rng.gen_range(0..3)];
        let len = rng.gen_range(1..=3);
        let params: Vec<f64> = (0..len).map(|_| rng.gen_range(0.05..0.95)).collect();
        let paper = path_information(scheme, &params, FisherMode::Paper);
        let fp = path_information(scheme, &params, FisherMode::FirstPrinciples);
        if scheme == Scheme::Lzm && len == 1 {
            worst_lzm_direct = worst_lzm_direct.max((paper[(0, 0)] / fp[(0, 0)] - 2.0).abs());
        } else {
            for (a, b) in paper.iter().zip(fp.iter()) {
                worst = worst.max(rel(*a, *b));
            }
        }
    }
    // make sure the direct LZM case is exercised across the range too
    for i in 1..100 {
        let w = i as f64 / 100.0;
        let paper = path_information(Scheme::Lzm, &[w], FisherMode::Paper)[(0, 0)];
        let fp = path_information(Scheme::Lzm, &[w], FisherMode::FirstPrinciples)[(0, 0)];
        worst_lzm_direct = worst_lzm_direct.max((paper / fp - 2.0).abs());
    }
    let detail = format!("max relative deviation {worst:.3e}; direct LZM ratio off 2.0 by {worst_lzm_direct:.3e}");
    if worst <= 1e-9 && worst_lzm_direct <= 1e-12 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Central differences of the simulated outcome probabilities.
fn finite_difference_check() -> Outcome {
    const H: f64 = 1e-6;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let scheme = Scheme::ALL[rng.gen_range(0..3)];
        let len = rng.gen_range(1..=3);
        let params: Vec<f64> = (0..len).map(|_| rng.gen_range(0.05..0.95)).collect();
        let p = oracle_outcomes(scheme, &params);
        let grads: Vec<[f64; 4]> = (0..len)
            .map(|i| {
                let (mut up, mut down) = (params.clone(), params.clone());
                up[i] += H;
                down[i] -= H;
                let (pu, pd) = (oracle_outcomes(scheme, &up), oracle_outcomes(scheme, &down));
                std::array::from_fn(|k| (pu[k] - pd[k]) / (2.0 * H))
            })
            .collect();
        let exact = path_information(scheme, &params, FisherMode::FirstPrinciples);
        for i in 0..len {
            for j in 0..len {
                let fd: f64 = (0..4).map(|k| grads[i][k] * grads[j][k] / p[k]).sum();
                worst = worst.max(rel(exact[(i, j)], fd));
            }
        }
    }
    let detail = format!("50 instances, max relative deviation {worst:.3e}");
    if worst <= 1e-5 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn crossover_reproduction() -> Outcome {
    let paper = crossover(Scheme::Lzm, Scheme::Jbm, FisherMode::Paper).ok_or("no paper-mode crossover")?;
    let fp = crossover(Scheme::Lzm, Scheme::Jbm, FisherMode::FirstPrinciples)
        .ok_or("no first-principles crossover")?;
    let detail = format!("paper {paper:.6}, first-principles {fp:.6}");
    if (paper - 0.57735).abs() <= 1e-4 && (fp - 1.0 / 3.0).abs() <= 1e-4 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn monotonicity() -> Outcome {
    let grid: Vec<f64> = (1..=99).map(|i| i as f64 / 100.0).collect();
    let mut violations = Vec::new();
    for scheme in Scheme::ALL {
        let bounds: Vec<f64> = grid.iter().map(|&w| single_link_qcrb(scheme, w, FisherMode::Paper)).collect();
        let bad: Vec<f64> = (1..grid.len()).filter(|&i| bounds[i] >= bounds[i - 1]).map(|i| grid[i]).collect();
        if let (Some(first), Some(last)) = (bad.first(), bad.last()) {
            let peak = (0..grid.len()).max_by(|&a, &b| bounds[a].total_cmp(&bounds[b])).unwrap();
            violations.push(format!(
                "{scheme} bound rises at {} grid points in [{first}, {last}], peaking at w={} ({:.6})",
                bad.len(),
                grid[peak],
                bounds[peak]
            ));
        }
    }
    if violations.is_empty() {
        Ok("all three schemes strictly decreasing on [0.01, 0.99]".into())
    } else {
        Err(violations.join("; "))
    }
}

fn channel_use_ledgers() -> Outcome {
    let expected: [(PlanKind, [u64; 3], u64); 4] = [
        (PlanKind::Jbm2, [4, 2, 2], 8),
        (PlanKind::Jbm3, [2, 2, 2], 6),
        (PlanKind::Hyb2, [5, 1, 2], 8),
        (PlanKind::Hyb3, [4, 1, 1], 6),
    ];
    let g = build_star(3, &[0.9, 0.8, 0.7]).map_err(|e| e.to_string())?;
    let mut seen = Vec::new();
    for (kind, per_link, total) in expected {
        let ledger = channel_uses(&builtin_plan(kind, &g).map_err(|e| e.to_string())?);
        seen.push(format!("{kind} {:?}/{}", ledger.per_link, ledger.total));
        if ledger.per_link != per_link || ledger.total != total {
            return Err(seen.join(", "));
        }
    }
    Ok(seen.join(", "))
}

fn star_bound(kind: PlanKind, params: [f64; 3]) -> f64 {
    let g = build_star(3, &params).unwrap();
    let plan = builtin_plan(kind, &g).unwrap();
    qcrb(&plan_qfim(&plan, &params, FisherMode::Paper, true).unwrap()).value
}

fn star_ordering() -> Outcome {
    let grid: Vec<f64> = (1..=99).map(|i| i as f64 / 100.0).collect();
    let mut divergences = Vec::new();
    for (better, worse) in [(PlanKind::Jbm2, PlanKind::Hyb2), (PlanKind::Jbm3, PlanKind::Hyb3)] {
        for &w in &grid {
            let (b, x) = (star_bound(better, [w; 3]), star_bound(worse, [w; 3]));
            if b > x {
                divergences.push(format!("homogeneous w={w}: {better} {b:.6e} > {worse} {x:.6e}"));
            }
        }
    }
    let hyb_wins: Vec<bool> = grid
        .iter()
        .map(|&w| star_bound(PlanKind::Hyb3, [0.99, 0.99, w]) < star_bound(PlanKind::Jbm3, [0.99, 0.99, w]))
        .collect();
    let prefix = hyb_wins.iter().take_while(|&&x| x).count();
    let threshold = if prefix == 0 {
        divergences.push("heterogeneous: HYB3 never below JBM3 at the low end of the sweep".into());
        None
    } else {
        if hyb_wins[prefix..].iter().any(|&x| x) {
            divergences.push(format!(
                "heterogeneous: HYB3 < JBM3 below w2={} but again at larger w2",
                grid[prefix]
            ));
        }
        Some(grid[prefix])
    };
    if divergences.is_empty() {
        Ok(format!(
            "homogeneous JBM2<=HYB2 and JBM3<=HYB3 at all 99 points; heterogeneous HYB3<JBM3 for w2<{}",
            threshold.unwrap()
        ))
    } else {
        Err(format!("paper-claim divergence: {}", divergences.join("; ")))
    }
}

fn estimator_consistency() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst = 0.0f64;
    for kind in PlanKind::ALL {
        for _ in 0..20 {
            let params: Vec<f64> = (0..3).map(|_| rng.gen_range(0.05..0.95)).collect();
            let g = build_star(3, &params).map_err(|e| e.to_string())?;
            let plan = builtin_plan(kind, &g).map_err(|e| e.to_string())?;
            let tallies: Vec<ExpectedCounts> = plan
                .tasks()
                .iter()
                .map(|t| ExpectedCounts::new(&t.scheme.distribution(t.path.product(&params)).unwrap(), 1e5))
                .collect();
            let est = solve_plan(&plan, &tallies).map_err(|e| e.to_string())?;
            let values = est.values().ok_or_else(|| format!("{kind} {params:?}: unidentified link"))?;
            for (v, p) in values.iter().zip(&params) {
                worst = worst.max((v - p).abs());
            }
        }
    }
    let detail = format!("4 plans x 20 triples, max |error| = {worst:.3e}");
    if worst <= 1e-12 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn asymptotic_efficiency() -> Outcome {
    let start = Instant::now();
    let mut parts = Vec::new();
    let mut ok = true;
    for scheme in [Scheme::Pem, Scheme::Lzm] {
        let (_, plan) = single_link_plan(scheme, 0.6).map_err(|e| e.to_string())?;
        let report = benchmark_variance(&plan, &[0.6], 100_000, 200, 0, FisherMode::FirstPrinciples)
            .map_err(|e| e.to_string())?;
        let ratio = report.links[0].ratio;
        ok &= (0.85..=1.25).contains(&ratio);
        parts.push(format!("{scheme} ratio {ratio:.4}"));
    }
    let elapsed = start.elapsed();
    ok &= elapsed < Duration::from_secs(60);
    let detail = format!("{}, runtime {elapsed:.2?}", parts.join(", "));
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn run_cli(args: &[&str], out: &FsPath) -> Result<Vec<u8>, String> {
    let status = Command::new(env!("CARGO_BIN_EXE_qnt"))
        .args(args)
        .arg("--out")
        .arg(out)
        .stderr(Stdio::null())
        .status()
        .map_err(|e| e.to_string())?;
    if !status.success() {
        return Err(format!("qnt {} exited with {status}", args.join(" ")));
    }
    std::fs::read(out).map_err(|e| e.to_string())
}

fn reproducibility() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let bench = dir.path().join("bench.toml");
    std::fs::write(&bench, "plan = \"HYB2\"\nsamples = 2000\nrounds = 20\ntrue_w = [0.9, 0.7, 0.8]\n")
        .map_err(|e| e.to_string())?;
    let hetero = dir.path().join("hetero.toml");
    std::fs::write(&hetero, "sweep = \"heterogeneous\"\n").map_err(|e| e.to_string())?;
    let bench = bench.to_str().unwrap();
    let hetero = hetero.to_str().unwrap();
    let commands: [&[&str]; 7] = [
        &["single-link", "--seed", "5"],
        &["single-link", "--mode", "first-principles", "--normalize", "on"],
        &["ratio", "--seed", "5"],
        &["star", "--seed", "5"],
        &["star", "--config", hetero],
        &["validate"],
        &["benchmark", "--config", bench, "--seed", "11"],
    ];
    for (i, args) in commands.iter().enumerate() {
        let a = run_cli(args, &dir.path().join(format!("{i}a.csv")))?;
        let b = run_cli(args, &dir.path().join(format!("{i}b.csv")))?;
        if a != b || a.is_empty() {
            return Err(format!("qnt {} differs between runs", args.join(" ")));
        }
    }
    Ok(format!("{} commands byte-identical across two runs", commands.len()))
}

fn main() {
    let criteria: [(&str, Criterion); 11] = [
        ("oracle equivalence", oracle_equivalence),
        ("multiplicative composition", multiplicative_composition),
        ("fisher mode consistency", fisher_mode_consistency),
        ("finite-difference check", finite_difference_check),
        ("crossover reproduction", crossover_reproduction),
        ("monotonicity", monotonicity),
        ("channel-use ledgers", channel_use_ledgers),
        ("star ordering", star_ordering),
        ("estimator consistency", estimator_consistency),
        ("asymptotic efficiency", asymptotic_efficiency),
        ("reproducibility", reproducibility),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("criterion {:>2} {name}: PASS ({detail})", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} {name}: FAIL ({detail})", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
