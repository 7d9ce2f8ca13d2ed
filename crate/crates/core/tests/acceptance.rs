//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the test fails if any criterion fails.

mod common;

use std::fs;
use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use atlp::annotation::{self, Annotation};
use atlp::cli::{certificate_from_json, certificate_to_json, chart_csv};
use atlp::kernel::{self, Rule};
use atlp::lp::{self, LpError};
use atlp::prover::{self, SearchConfig, SearchRecord};
use atlp::rational::q;
use atlp::recurrence::{growth_root, tree_size};
use atlp::{verify, ClassLine, LpSolution, ProofCertificate, QuantifierBlock, Rational};
use common::{random_program, vertex_oracle, OracleStatus};
use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn tol() -> Rational {
    Rational::pow10_neg(4)
}

fn eps() -> Rational {
    q(1, 1000)
}

fn config() -> SearchConfig {
    SearchConfig {
        tol: tol(),
        eps: eps(),
        workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
    }
}

fn dec(r: &Rational) -> String {
    r.to_decimal(6)
}

fn within(value: &Rational, lo: &str, hi: &str) -> bool {
    let lo: Rational = lo.parse().unwrap();
    let hi: Rational = hi.parse().unwrap();
    *value >= lo && *value <= hi
}

fn check_time(elapsed: Duration, limit: Duration) -> Result<(), String> {
    if elapsed <= limit {
        Ok(())
    } else {
        Err(format!("took {elapsed:.1?}, limit {limit:?}"))
    }
}

struct Shared {
    /// Best exponent of every annotation with a speedup, up to 9 lines.
    records: Vec<SearchRecord>,
    records_time: Duration,
    seven_line: Option<SearchRecord>,
    heuristic: Vec<SearchRecord>,
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let best = prover::best_exponent(&annotation::validate("DSD").unwrap(), &tol(), &eps())
        .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    if !within(&best.lower, "1.4141", "1.4143") {
        return Err(format!(
            "c* = {} outside [1.4141, 1.4143]",
            dec(&best.lower)
        ));
    }
    check_time(elapsed, Duration::from_secs(5))?;
    Ok(format!("DSD: c* = {} in {elapsed:.2?}", dec(&best.lower)))
}

fn criterion_2(shared: &mut Shared) -> Outcome {
    let a = annotation::validate("DSSDDSD").unwrap();
    let start = Instant::now();
    let best = prover::best_exponent(&a, &tol(), &eps()).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let closed = ((1.0 + 17f64.sqrt()) / 2.0).sqrt();
    let (lo, hi) = (best.lower.to_f64(), best.upper.to_f64());
    shared.seven_line = Some(SearchRecord {
        lines: 7,
        annotation: a,
        best_c: best.lower.clone(),
        upper_c: best.upper.clone(),
        certificate: best.certificate,
    });
    if !within(&best.lower, "1.6003", "1.6005") {
        return Err(format!(
            "c* = {} outside [1.6003, 1.6005]",
            dec(&best.lower)
        ));
    }
    if !(lo <= closed && closed <= hi) {
        return Err(format!(
            "bracket [{lo}, {hi}] misses sqrt((1+sqrt17)/2) = {closed}"
        ));
    }
    check_time(elapsed, Duration::from_secs(10))?;
    Ok(format!(
        "DSSDDSD: c* = {}, bracket holds {closed:.7}, in {elapsed:.2?}",
        dec(&best.lower)
    ))
}

fn criterion_3(shared: &Shared) -> Outcome {
    let reference = shared
        .seven_line
        .as_ref()
        .ok_or("criterion 2 did not run")?;
    let upto7: Vec<&SearchRecord> = shared.records.iter().filter(|r| r.lines <= 7).collect();
    let best = upto7
        .iter()
        .max_by(|a, b| a.best_c.cmp(&b.best_c))
        .ok_or("no annotations up to 7 lines")?;
    let gap = (&best.best_c - &reference.best_c).abs();
    if gap > tol() {
        return Err(format!(
            "max {} differs from {} by {}",
            dec(&best.best_c),
            dec(&reference.best_c),
            dec(&gap)
        ));
    }
    if let Some(r) = upto7.iter().find(|r| r.best_c > reference.best_c) {
        return Err(format!("{} reaches {}", r.annotation, dec(&r.best_c)));
    }
    check_time(shared.records_time, Duration::from_secs(600))?;
    Ok(format!(
        "{} annotations, max {} at {}",
        upto7.len(),
        dec(&best.best_c),
        best.annotation
    ))
}

fn criterion_4() -> Outcome {
    let c = Rational::from_integer(2) - Rational::pow10_neg(6);
    let mut count = 0;
    for length in 1..=10 {
        for a in annotation::enumerate(length) {
            let program = lp::build_lp(&a, &c, &eps()).map_err(|e| e.to_string())?;
            if lp::find_feasible(&program.program).is_feasible() {
                return Err(format!("{a} is feasible at c = 2 - 1e-6"));
            }
            count += 1;
        }
    }
    Ok(format!(
        "all {count} annotations up to 10 lines infeasible at c = 2 - 1e-6"
    ))
}

fn fixture_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/heuristic_frontier.csv")
}

fn criterion_5(shared: &mut Shared) -> Outcome {
    let start = Instant::now();
    let config = config();
    let seeds = prover::exhaustive_search(7, &config).map_err(|e| e.to_string())?;
    let found = prover::heuristic_search(&seeds, 2000, &config).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let frontier = prover::frontier(&found);
    shared.heuristic = found;

    let limit: Rational = "1.8019".parse::<Rational>().unwrap() + tol();
    let all = shared.records.iter().chain(&shared.heuristic);
    if let Some(r) = all.clone().find(|r| r.best_c > limit) {
        return Err(format!(
            "needs review: {} reaches {}",
            r.annotation,
            dec(&r.best_c)
        ));
    }
    let best =
        prover::best_of(shared.heuristic.iter().cloned()).ok_or("heuristic found nothing")?;
    if best.best_c < "1.6003".parse::<Rational>().unwrap() {
        return Err(format!("heuristic best {} below 1.6003", dec(&best.best_c)));
    }
    // Lengths the heuristic reached beyond the seeds must not get worse.
    let grown: Vec<&SearchRecord> = frontier.iter().filter(|r| r.lines > 7).collect();
    if let Some(w) = grown.windows(2).find(|w| w[1].best_c < w[0].best_c) {
        return Err(format!(
            "frontier drops from {} to {}",
            w[0].annotation, w[1].annotation
        ));
    }
    let csv = chart_csv(&frontier);
    let fixture = fs::read_to_string(fixture_path()).map_err(|e| format!("fixture: {e}"))?;
    if csv != fixture {
        return Err(format!("frontier differs from fixture:\n{csv}"));
    }
    Ok(format!(
        "max over {} records {} ({} lines, {}), fixture matches, {elapsed:.1?}",
        all.count(),
        dec(
            &prover::best_of(shared.records.iter().chain(&shared.heuristic).cloned())
                .unwrap()
                .best_c
        ),
        best.lines,
        best.annotation
    ))
}

/// A recorded exponent that can be lowered while keeping the certificate
/// well formed.
#[derive(Debug, Clone, Copy)]
enum Target {
    A0,
    Dts(usize),
    Guess(usize, usize),
    Feed(usize, usize),
    Nu,
}

/// The smallest value each field may take, from the kernel rules applied to
/// the recorded lines.
fn requirements(cert: &ProofCertificate) -> Vec<(Target, Rational, Rational)> {
    let mut out = vec![(
        Target::A0,
        cert.a0.clone(),
        &cert.final_ntime_exp + &cert.eps,
    )];
    for (i, step) in cert.steps.iter().enumerate() {
        let required = if i == 0 {
            kernel::anchor_slowdown(&cert.a0, &cert.c)
        } else {
            let prev = &cert.steps[i - 1].result;
            match step.rule {
                Rule::Slowdown => kernel::apply_slowdown(prev, &cert.c),
                Rule::Speedup => kernel::apply_speedup(prev, step.x.as_ref().unwrap()),
            }
        }
        .unwrap();
        out.push((
            Target::Dts(i),
            step.result.dts_exp().clone(),
            required.dts_exp().clone(),
        ));
        for (j, (r, k)) in step
            .result
            .blocks()
            .iter()
            .zip(required.blocks())
            .enumerate()
        {
            out.push((
                Target::Guess(i, j),
                r.guess_exp.clone(),
                k.guess_exp.clone(),
            ));
            out.push((Target::Feed(i, j), r.feed_exp.clone(), k.feed_exp.clone()));
        }
    }
    let last = &cert.steps.last().unwrap().result;
    out.push((
        Target::Nu,
        cert.final_ntime_exp.clone(),
        kernel::close_line(last).unwrap(),
    ));
    out
}

fn mutate(cert: &ProofCertificate, target: Target, value: Rational) -> ProofCertificate {
    let mut m = cert.clone();
    let set_line = |line: &mut ClassLine, f: &dyn Fn(&mut Vec<QuantifierBlock>, &mut Rational)| {
        let mut blocks = line.blocks().to_vec();
        let mut dts = line.dts_exp().clone();
        f(&mut blocks, &mut dts);
        *line = ClassLine::new(blocks, dts).unwrap();
    };
    match target {
        Target::A0 => m.a0 = value,
        Target::Nu => m.final_ntime_exp = value,
        Target::Dts(i) => set_line(&mut m.steps[i].result, &|_, d| *d = value.clone()),
        Target::Guess(i, j) => set_line(&mut m.steps[i].result, &|b, _| {
            b[j].guess_exp = value.clone()
        }),
        Target::Feed(i, j) => set_line(&mut m.steps[i].result, &|b, _| {
            b[j].feed_exp = value.clone()
        }),
    }
    m
}

fn criterion_6(shared: &Shared) -> Outcome {
    let start = Instant::now();
    for r in &shared.records {
        let text = certificate_to_json(&r.certificate);
        let back = certificate_from_json(&text)?;
        if back != r.certificate {
            return Err(format!(
                "{}: JSON round trip changed the certificate",
                r.annotation
            ));
        }
        verify(&back).map_err(|e| format!("{}: {e}", r.annotation))?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut mutants = 0;
    while mutants < 1000 {
        let r = &shared.records[rng.gen_range(0..shared.records.len())];
        let fields: Vec<(Target, Rational, Rational)> = requirements(&r.certificate)
            .into_iter()
            .filter(|(_, _, required)| *required > Rational::one())
            .collect();
        let (target, recorded, required) = &fields[rng.gen_range(0..fields.len())];
        if recorded < required {
            return Err(format!(
                "{}: {target:?} already below its requirement",
                r.annotation
            ));
        }
        // Somewhere in [1, required).
        let share = q(rng.gen_range(1..=64), 64);
        let value = required - &(&(required - &Rational::one()) * &share);
        let mutant = mutate(&r.certificate, *target, value.clone());
        let reparsed = certificate_from_json(&certificate_to_json(&mutant))?;
        if verify(&reparsed).is_ok() {
            return Err(format!(
                "{}: {target:?} lowered from {} to {} was accepted",
                r.annotation,
                dec(recorded),
                dec(&value)
            ));
        }
        mutants += 1;
    }
    let elapsed = shared.records_time + start.elapsed();
    check_time(elapsed, Duration::from_secs(900))?;
    Ok(format!(
        "{} certificates accepted, {mutants} mutants rejected, {elapsed:.1?}",
        shared.records.len()
    ))
}

fn lp_status(result: Result<LpSolution, LpError>) -> OracleStatus {
    match result {
        Ok(LpSolution::Infeasible) => OracleStatus::Infeasible,
        Ok(LpSolution::Feasible {
            objective_value, ..
        }) => OracleStatus::Optimal(objective_value),
        Err(LpError::UnboundedObjective) => OracleStatus::Unbounded,
        Err(e) => panic!("unexpected LP error {e}"),
    }
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut tally = [0usize; 3];
    for k in 0..500 {
        let program = random_program(&mut rng);
        let expected = vertex_oracle(&program);
        let got = lp_status(lp::solve(&program));
        if got != expected {
            return Err(format!(
                "program {k}: simplex {got:?}, oracle {expected:?}\n{program}"
            ));
        }
        tally[match expected {
            OracleStatus::Infeasible => 0,
            OracleStatus::Unbounded => 1,
            OracleStatus::Optimal(_) => 2,
        }] += 1;
    }
    let elapsed = start.elapsed();
    check_time(elapsed, Duration::from_secs(60))?;
    Ok(format!(
        "500 programs agree ({} infeasible, {} unbounded, {} optimal), {elapsed:.2?}",
        tally[0], tally[1], tally[2]
    ))
}

fn criterion_8(shared: &Shared) -> Outcome {
    let start = Instant::now();
    let step = q(1, 20);
    let floor = Rational::one() + &step;
    let pool: Vec<&SearchRecord> = shared
        .records
        .iter()
        .filter(|r| r.best_c >= floor)
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..100 {
        let r = pool[rng.gen_range(0..pool.len())];
        // A random c in [1 + 1/20, best_c], feasible by construction.
        let c = &floor + &(&(&r.best_c - &floor) * &q(rng.gen_range(0..=256), 256));
        let program = lp::build_lp(&r.annotation, &c, &eps()).map_err(|e| e.to_string())?;
        let sol = lp::solve(&program.program).map_err(|e| e.to_string())?;
        let point = sol
            .assignment()
            .ok_or_else(|| format!("{} infeasible at {c}", r.annotation))?;
        let lower =
            lp::build_lp(&r.annotation, &(&c - &step), &eps()).map_err(|e| e.to_string())?;
        if let Some(k) = lower.program.first_violation(point) {
            return Err(format!(
                "{} at c = {c}: constraint {k} fails at c - 1/20",
                r.annotation
            ));
        }
    }
    let elapsed = start.elapsed();
    check_time(elapsed, Duration::from_secs(60))?;
    Ok(format!(
        "100 pairs from {} annotations, {elapsed:.2?}",
        pool.len()
    ))
}

fn pow(x: &Rational, k: u64) -> Rational {
    (0..k).fold(Rational::one(), |acc, _| acc * x)
}

fn criterion_9() -> Outcome {
    let start = Instant::now();
    let fine = Rational::pow10_neg(9);
    let tolerance = Rational::pow10_neg(3);
    let ints = |v: &[i64]| {
        v.iter()
            .map(|&d| Rational::from_integer(d))
            .collect::<Vec<_>>()
    };
    let r14 = growth_root(&ints(&[1, 4]), &fine).map_err(|e| e.to_string())?;
    let r35 = growth_root(&ints(&[3, 5]), &fine).map_err(|e| e.to_string())?;
    for (root, want) in [(&r14, "1.380278"), (&r35, "1.193859")] {
        let gap = (root.midpoint() - want.parse::<Rational>().unwrap()).abs();
        if gap > tolerance {
            return Err(format!(
                "root {} is not within 1e-3 of {want}",
                dec(&root.midpoint())
            ));
        }
    }

    // tree_size(k) <= C (x* + tol)^k with C = tree_size(10) / (x* - tol)^10,
    // using the bracket ends so the check is exact and conservative.
    let sizes: Vec<BigUint> = (0..=30).map(|k| tree_size(&[1, 4], k)).collect();
    let big = |n: &BigUint| Rational::from_big(n.clone().into(), 1.into());
    let below = &r14.lo - &tolerance;
    let above = &r14.hi + &tolerance;
    let c = big(&sizes[10]) / pow(&below, 10);
    if let Some(k) = (0..=30u64).find(|&k| big(&sizes[k as usize]) > &c * &pow(&above, k)) {
        return Err(format!("tree_size({k}) exceeds the root bound"));
    }
    let rate = big(&sizes[30]).to_f64().powf(1.0 / 30.0);
    let rel = (rate / r14.midpoint().to_f64() - 1.0).abs();
    if rel > 0.05 {
        return Err(format!(
            "tree_size(30)^(1/30) = {rate:.4} is {rel:.3} away from the root"
        ));
    }
    let elapsed = start.elapsed();
    check_time(elapsed, Duration::from_secs(5))?;
    Ok(format!(
        "roots {} and {}, tree_size(30) = {}, rate {rate:.4} ({:.1}% off), {elapsed:.2?}",
        dec(&r14.midpoint()),
        dec(&r35.midpoint()),
        sizes[30],
        rel * 100.0
    ))
}

fn criterion_10() -> Outcome {
    let run = |workers: &str| {
        Command::new(env!("CARGO_BIN_EXE_atlp"))
            .args([
                "search",
                "--mode",
                "exhaustive",
                "--max-lines",
                "8",
                "--workers",
                workers,
            ])
            .output()
            .map_err(|e| e.to_string())
    };
    let one = run("1")?;
    let eight = run("8")?;
    if !one.status.success() || !eight.status.success() {
        return Err("search exited with an error".into());
    }
    if one.stdout != eight.stdout {
        return Err("CSV differs between 1 and 8 workers".into());
    }
    Ok(format!(
        "{} identical bytes, {} rows",
        one.stdout.len(),
        one.stdout.iter().filter(|&&b| b == b'\n').count() - 1
    ))
}

fn all_up_to_nine() -> Result<Vec<SearchRecord>, String> {
    let shapes: Vec<Annotation> = (1..=9).flat_map(annotation::enumerate).collect();
    prover::evaluate_all(&shapes, &config()).map_err(|e| e.to_string())
}

#[test]
fn acceptance() {
    let start = Instant::now();
    let records = all_up_to_nine().expect("evaluating annotations up to 9 lines");
    let mut shared = Shared {
        records,
        records_time: start.elapsed(),
        seven_line: None,
        heuristic: Vec::new(),
    };

    // Criteria run in order: later ones reuse earlier results.
    let results: Vec<(u32, &str, Outcome)> = vec![
        (1, "sqrt 2 bound", criterion_1()),
        (2, "seven-line optimum", criterion_2(&mut shared)),
        (3, "exhaustive optimality at 7 lines", criterion_3(&shared)),
        (4, "no n^2 bound up to 10 lines", criterion_4()),
        (
            5,
            "conjecture guard and heuristic search",
            criterion_5(&mut shared),
        ),
        (
            6,
            "certificate round trip and mutations",
            criterion_6(&shared),
        ),
        (7, "simplex vs vertex enumeration", criterion_7()),
        (8, "downward closure", criterion_8(&shared)),
        (9, "recurrence roots", criterion_9()),
        (10, "deterministic search output", criterion_10()),
    ];

    for (n, name, outcome) in &results {
        match outcome {
            Ok(detail) => println!("PASS [{n:>2}] {name}: {detail}"),
            Err(why) => println!("FAIL [{n:>2}] {name}: {why}"),
        }
    }
    let failed: Vec<u32> = results
        .iter()
        .filter(|r| r.2.is_err())
        .map(|r| r.0)
        .collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
