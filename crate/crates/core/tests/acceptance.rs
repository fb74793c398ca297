//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line for each
//! and exits nonzero if any fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use dks1d::cli::{generate_gaps, run_pieces_stats, GapDistribution, RunConfig};
use dks1d::explicit_chain::build_chain;
use dks1d::instance::{
    allpairs_q, build_instance, compute_q, gradient_q, redistribute_weight, Instance, PairWeights,
    PointSet, WeightVector,
};
use dks1d::oracle::{oracle_allpairs, oracle_consecutive};
use dks1d::solver::{solve, Backend};
use dks1d::{Exact, Scalar};
use clap::Parser;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn small_uniform<S: Scalar>(n: usize, seed: u64) -> Instance<S> {
    Instance::from_gaps(generate_gaps(GapDistribution::SmallUniform, n, seed, 0).unwrap()).unwrap()
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut worst_q, mut worst_w) = (0.0f64, 0.0f64);
    for trial in 0..200 {
        let n = rng.random_range(3..=9);
        let inst = small_uniform::<f64>(n, 1000 + trial);
        let oracle = oracle_consecutive(&inst).map_err(|e| e.to_string())?;
        for backend in Backend::ALL {
            let res = solve(&inst, backend).map_err(|e| e.to_string())?;
            worst_q = worst_q.max(rel_diff(res.q_value, oracle.q_value));
            for (a, b) in res.weights.0.iter().zip(&oracle.weights.0) {
                worst_w = worst_w.max((a - b).abs());
            }
        }
    }
    let elapsed = start.elapsed();
    check(worst_q <= 1e-9, || format!("Q rel diff {worst_q:e} > 1e-9"))?;
    check(worst_w <= 1e-7, || format!("weight diff {worst_w:e} > 1e-7"))?;
    check(elapsed < Duration::from_secs(30), || format!("took {elapsed:?}"))?;
    Ok(format!(
        "200 instances, max Q rel diff {worst_q:.1e}, max weight diff {worst_w:.1e}, {elapsed:.2?}"
    ))
}

fn four_point_example() -> Outcome {
    for den in [2, 100] {
        let eps = Exact::from_ratio(1, den).unwrap();
        let inst = Instance::from_gaps(vec![Exact::one(), eps, Exact::one()]).unwrap();
        for backend in Backend::ALL {
            let res = solve(&inst, backend).map_err(|e| e.to_string())?;
            let want = vec![Exact::one(), Exact::from_i64(den), Exact::one()];
            check(res.weights.0 == want, || {
                format!("eps = 1/{den}, {backend}: w = {:?}", res.weights.0)
            })?;
            check(res.q_value == Exact::from_i64(2), || {
                format!("eps = 1/{den}, {backend}: Q = {}", res.q_value)
            })?;
        }
    }
    Ok("w = (1, 1/eps, 1) and Q = 2 exactly for eps = 1/2, 1/100".into())
}

fn consecutive_edges_suffice() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for trial in 0..50 {
        let gaps = generate_gaps::<f64>(GapDistribution::SmallUniform, 4, 3000 + trial, 0).unwrap();
        let pts = PointSet::from_gaps(&gaps).map_err(|e| e.to_string())?;
        let all = oracle_allpairs(&pts).map_err(|e| e.to_string())?;
        let cons = oracle_consecutive(&build_instance(&pts).unwrap()).map_err(|e| e.to_string())?;
        worst = worst.max(rel_diff(all.q_value, cons.q_value));

        let exact_gaps: Vec<Exact> = gaps.iter().map(|&g| Exact::from_f64(g).unwrap()).collect();
        let exact_pts = PointSet::from_gaps(&exact_gaps).unwrap();
        let mut w = PairWeights::zeros(4);
        for i in 0..4 {
            for j in i + 1..4 {
                w.set(i, j, Exact::from_ratio(rng.random_range(1..100), rng.random_range(1..20)).unwrap());
            }
        }
        let (i, k) = if rng.random_bool(0.5) { (0, 2 + rng.random_range(0..2)) } else { (1, 3) };
        let j = rng.random_range(i + 1..k);
        let moved = redistribute_weight(&exact_pts, &w, i, j, k).map_err(|e| e.to_string())?;
        let (before, after) = (allpairs_q(&exact_pts, &w).unwrap(), allpairs_q(&exact_pts, &moved).unwrap());
        check(before == after, || format!("redistribution ({i},{j},{k}) changed Q {before} -> {after}"))?;
        check((0..4).all(|r| moved.row_sum(r) >= w.row_sum(r)), || "row sum decreased".into())?;
    }
    check(worst <= 1e-9, || format!("all-pairs vs consecutive rel diff {worst:e}"))?;
    Ok(format!("50 instances, max rel diff {worst:.1e}; redistribution exact"))
}

fn backend_agreement() -> Outcome {
    let sizes = [10, 100, 500];
    let start = Instant::now();
    let mut worst = 0.0f64;
    for trial in 0..100u64 {
        let n = sizes[trial as usize % sizes.len()];
        let seed = 4000 + trial;
        let exact = small_uniform::<Exact>(n, seed);
        let a = solve(&exact, Backend::Explicit).map_err(|e| e.to_string())?;
        let b = solve(&exact, Backend::Implicit).map_err(|e| e.to_string())?;
        check(a.weights == b.weights, || format!("exact weights differ, n = {n}, seed {seed}"))?;

        let float = small_uniform::<f64>(n, seed);
        let a = solve(&float, Backend::Explicit).map_err(|e| e.to_string())?;
        let b = solve(&float, Backend::Implicit).map_err(|e| e.to_string())?;
        for (x, y) in a.weights.0.iter().zip(&b.weights.0) {
            worst = worst.max(rel_diff(*x, *y));
        }
    }
    check(worst <= 1e-10, || format!("float rel diff {worst:e} > 1e-10"))?;
    Ok(format!(
        "100 instances, exact identical, float max rel diff {worst:.1e}, {:.1?}",
        start.elapsed()
    ))
}

fn chain_invariants() -> Outcome {
    let mut case_two = 0;
    for trial in 0..100 {
        let inst = small_uniform::<Exact>(50, 5000 + trial);
        let chain = build_chain(&inst).map_err(|e| e.to_string())?;
        for f in chain.functions() {
            let i = f.level();
            let d = inst.gap(i).clone();
            let bound = (Exact::from_i64(2) + Exact::from_ratio(2, i as i64).unwrap()) * &d * &d;
            check(f.value_at_zero().is_negative(), || format!("R_{i}(0) >= 0"))?;
            check(f.pieces().iter().all(|p| p.slope >= bound), || format!("R_{i} slope below bound"))?;
            let last = f.pieces().last().unwrap();
            check(last.slope == bound, || format!("R_{i} final slope {} != {bound}", last.slope))?;
            for k in 1..f.num_pieces() {
                let x = &f.starts()[k];
                check(f.pieces()[k - 1].at(x) == f.pieces()[k].at(x), || {
                    format!("R_{i} discontinuous at {x}")
                })?;
            }
            if let Some(split) = chain.split(i) {
                case_two += 1;
                let prev = chain.function(i - 1);
                let xi = inst.coupling(i - 1).clone();
                let c = Exact::from_i64(4) * &d * &d;
                let w_star = Exact::one() - split;
                // R_{i-1}(w*) = xi (1 - w*), so both branches meet at the split
                check(prev.eval(&w_star).unwrap() == xi.clone() * split, || {
                    format!("R_{} misses the branch point", i - 1)
                })?;
                let lower = c.clone() * split - &(xi.clone() * &w_star);
                let upper = c * split - &(xi * &prev.inverse(&(inst.coupling(i - 1).clone() * split)).unwrap());
                check(lower == upper && f.eval(split).unwrap() == lower, || {
                    format!("branches of R_{i} disagree at {split}")
                })?;
            }
        }
    }
    Ok(format!("100 chains of 48 functions, {case_two} constrained breakpoints checked exactly"))
}

fn kkt_certificates() -> Outcome {
    let mut worst_res = 0.0f64;
    for seed in 0..20 {
        let inst = small_uniform::<f64>(2000, 6000 + seed);
        for backend in Backend::ALL {
            let res = solve(&inst, backend).map_err(|e| e.to_string())?;
            let c = &res.certificate;
            let scaled = c.stationarity_residual / (1.0 + c.gradient_norm);
            worst_res = worst_res.max(scaled);
            check(c.valid, || format!("seed {seed} {backend}: {}", c.summary()))?;
            check(scaled <= 1e-8, || format!("residual {scaled:e}"))?;
            check(c.min_multiplier >= -1e-10, || format!("multiplier {}", c.min_multiplier))?;
            check(c.max_complementarity_violation <= 1e-8, || {
                format!("complementarity {}", c.max_complementarity_violation)
            })?;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst_fd = 0.0f64;
    for trial in 0..20 {
        let inst = small_uniform::<f64>(50, 6100 + trial);
        let w = WeightVector((0..49).map(|_| rng.random_range(1.0..4.0)).collect());
        let grad = gradient_q(&inst, &w).unwrap();
        let h = 1e-3;
        for (i, g) in grad.iter().enumerate() {
            let (mut plus, mut minus) = (w.clone(), w.clone());
            plus.0[i] += h;
            minus.0[i] -= h;
            let fd = (compute_q(&inst, &plus).unwrap() - compute_q(&inst, &minus).unwrap()) / (2.0 * h);
            worst_fd = worst_fd.max((fd - g).abs() / g.abs().max(1.0));
        }
    }
    check(worst_fd <= 1e-6, || format!("finite differences off by {worst_fd:e}"))?;
    Ok(format!(
        "40 solves at n = 2000 valid, max residual/(1+|grad|) {worst_res:.1e}; gradient vs differences {worst_fd:.1e}"
    ))
}

fn piece_statistics() -> Outcome {
    let start = Instant::now();
    let mut report = Vec::new();
    for (n, lo, hi, reference_max) in [(100, 12.0, 16.0, 33), (1000, 21.0, 26.0, 48)] {
        let args = format!("dks1d --mode pieces-stats --n {n} --trials 1000 --seed 7");
        let cfg = RunConfig::try_parse_from(args.split(' ')).unwrap();
        let stats = run_pieces_stats(&cfg).map_err(|e| e.to_string())?;
        check((lo..=hi).contains(&stats.avg), || format!("n = {n}: avg {} outside [{lo}, {hi}]", stats.avg))?;
        check(stats.max <= 3 * reference_max, || format!("n = {n}: max {}", stats.max))?;
        report.push(format!("n = {n}: avg {:.3} max {}", stats.avg, stats.max));
    }
    let elapsed = start.elapsed();
    check(elapsed < Duration::from_secs(300), || format!("took {elapsed:?}"))?;
    Ok(format!("{}, {elapsed:.1?}", report.join("; ")))
}

fn scaling() -> Outcome {
    let mut counts = Vec::new();
    for n in [400, 800, 1600] {
        let inst = small_uniform::<f64>(n, 8000 + n as u64);
        counts.push(solve(&inst, Backend::Implicit).map_err(|e| e.to_string())?.stats.matrix_products);
    }
    let ratios: Vec<f64> = counts.windows(2).map(|w| w[1] as f64 / w[0] as f64).collect();
    check(ratios.iter().all(|r| (3.5..=4.5).contains(r)), || format!("count ratios {ratios:?}"))?;
    let inst = small_uniform::<f64>(3200, 8001);
    let start = Instant::now();
    let res = solve(&inst, Backend::Explicit).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    check(res.certificate.valid, || res.certificate.summary())?;
    check(elapsed < Duration::from_secs(1), || format!("explicit n = 3200 took {elapsed:?}"))?;
    Ok(format!(
        "product counts {counts:?}, ratios {:.3}/{:.3}; explicit n = 3200 in {elapsed:.2?}",
        ratios[0], ratios[1]
    ))
}

fn exact_at_scale() -> Outcome {
    let exact = small_uniform::<Exact>(3200, 9000);
    let start = Instant::now();
    let res = solve(&exact, Backend::Explicit).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    check(res.certificate.valid, || res.certificate.summary())?;
    check(elapsed < Duration::from_secs(30), || format!("took {elapsed:?}"))?;
    let float = solve(&small_uniform::<f64>(3200, 9000), Backend::Explicit).map_err(|e| e.to_string())?;
    let worst = res
        .weights
        .0
        .iter()
        .zip(&float.weights.0)
        .map(|(e, f)| rel_diff(e.to_f64(), *f))
        .fold(0.0, f64::max);
    check(worst <= 1e-9, || format!("float rel diff {worst:e}"))?;
    Ok(format!("exact n = 3200 in {elapsed:.2?}, float max rel diff {worst:.1e}"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("oracle equivalence", oracle_equivalence),
        ("four-point 1/eps example", four_point_example),
        ("consecutive edges suffice", consecutive_edges_suffice),
        ("backend agreement", backend_agreement),
        ("derivative chain invariants", chain_invariants),
        ("KKT certificates", kkt_certificates),
        ("piece-count statistics", piece_statistics),
        ("quadratic scaling", scaling),
        ("exact arithmetic at scale", exact_at_scale),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let id = (k + 1).to_string();
        if !filter.is_empty() && !filter.iter().any(|f| *f == id || name.contains(f.as_str())) {
            continue;
        }
        match run() {
            Ok(detail) => println!("criterion {id} [{name}]: PASS ({detail})"),
            Err(why) => {
                failed += 1;
                println!("criterion {id} [{name}]: FAIL ({why})");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
