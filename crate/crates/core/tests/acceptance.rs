//! Acceptance criteria 1-8. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::distribution::{Binomial, Discrete};
use stochsub::bounds::{f_plus, gap_constant, verify_gap_chain, DEFAULT_SCENARIO_CAP};
use stochsub::experiments::{gap_experiment, gen_random_instance, small_suite, GenSpec, MatroidKind, ObjectiveKind, SuiteInstance};
use stochsub::policies::{
    continuous_greedy, evaluate_adaptive_exact, optimal_adaptive_exact, optimal_nonadaptive_exact, pipage_round,
    ExpectationMode, Myopic,
};
use stochsub::FractionalPoint;

const TOL: f64 = 1e-9;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

struct Exact {
    a: f64,
    myopic: f64,
    n: f64,
    rank: usize,
    uniform: bool,
    chain: Option<(bool, String)>,
}

fn solve_suite(suite: &[SuiteInstance]) -> Vec<Exact> {
    suite
        .par_iter()
        .map(|s| {
            let (a, _) = optimal_adaptive_exact(&s.instance, &s.matroid).unwrap();
            let myopic = evaluate_adaptive_exact(&Myopic, &s.instance, &s.matroid).unwrap().value;
            let n = optimal_nonadaptive_exact(&s.instance, &s.matroid).unwrap().value;
            let chain = (!s.matroid.is_explicit()).then(|| {
                let cert = verify_gap_chain(&s.instance, &s.matroid, DEFAULT_SCENARIO_CAP).unwrap();
                let failed: Vec<String> = cert.failures().iter().map(|l| l.name.clone()).collect();
                (cert.holds(), format!("{}: {}", s.label, failed.join("; ")))
            });
            Exact {
                a,
                myopic,
                n,
                rank: s.matroid.rank(),
                uniform: s.matroid.is_uniform(),
                chain,
            }
        })
        .collect()
}

fn criteria_1_to_3(suite: &[SuiteInstance]) -> [Verdict; 3] {
    let start = Instant::now();
    let results = solve_suite(suite);
    let secs = start.elapsed().as_secs_f64();
    let kinds: Vec<&str> = ["uniform", "partition", "explicit"]
        .into_iter()
        .filter(|k| suite.iter().any(|s| s.matroid.kind_name() == *k))
        .collect();
    let small = suite
        .iter()
        .all(|s| s.instance.n() <= 6 && s.matroid.rank() <= 3 && (0..s.instance.n()).all(|i| s.instance.dist(i).len() <= 3));

    let half_violations = results.iter().filter(|r| r.myopic < 0.5 * r.a - TOL).count();
    let worst_ratio = results
        .iter()
        .filter(|r| r.a > 0.0)
        .map(|r| r.myopic / r.a)
        .fold(f64::INFINITY, f64::min);
    let c1 = verdict(
        suite.len() >= 500 && kinds.len() == 3 && small && half_violations == 0 && secs < 120.0,
        format!(
            "{} instances ({}), {half_violations} violations, min myopic/A = {worst_ratio:.4}, {secs:.1}s",
            suite.len(),
            kinds.join("/")
        ),
    );

    let uniform: Vec<&Exact> = results.iter().filter(|r| r.uniform && r.rank > 0).collect();
    let uniform_violations = uniform
        .iter()
        .filter(|r| {
            let k = r.rank as f64;
            r.myopic < (1.0 - (1.0 - 1.0 / k).powf(k)) * r.a - TOL
        })
        .count();
    let c2 = verdict(
        !uniform.is_empty() && uniform_violations == 0,
        format!("{} uniform instances, {uniform_violations} violations of (1 - (1 - 1/k)^k) A", uniform.len()),
    );

    let c = gap_constant();
    let gap_violations = results.iter().filter(|r| r.a > c * r.n + TOL).count();
    let worst_gap = results
        .iter()
        .filter(|r| r.n > 0.0)
        .map(|r| r.a / r.n)
        .fold(0.0, f64::max);
    let chains: Vec<&(bool, String)> = results.iter().filter_map(|r| r.chain.as_ref()).collect();
    let broken: Vec<&String> = chains.iter().filter(|(ok, _)| !ok).map(|(_, msg)| msg).collect();
    let c3 = verdict(
        gap_violations == 0 && broken.is_empty() && !chains.is_empty(),
        format!(
            "{gap_violations} gap violations, max A/N = {worst_gap:.4}; chain holds on {}/{} uniform/partition instances{}",
            chains.len() - broken.len(),
            chains.len(),
            broken.first().map(|m| format!(", first failure {m}")).unwrap_or_default()
        ),
    );
    [c1, c2, c3]
}

fn criterion_4() -> Verdict {
    let suite = small_suite(4, 200).unwrap();
    let c = gap_constant();
    let outcomes: Vec<(f64, f64)> = suite
        .par_iter()
        .enumerate()
        .map(|(idx, s)| {
            let mut rng = ChaCha8Rng::seed_from_u64(idx as u64);
            let y = FractionalPoint::new((0..s.instance.n()).map(|_| rng.gen::<f64>()).collect()).unwrap();
            let fy = s.instance.multilinear_exact(&y).unwrap();
            let fp = f_plus(&s.instance, &y, DEFAULT_SCENARIO_CAP).unwrap();
            (fy, fp)
        })
        .collect();
    let below = outcomes.iter().filter(|(fy, fp)| fy - TOL > *fp).count();
    let above = outcomes.iter().filter(|(fy, fp)| *fp > c * fy + TOL).count();
    let worst = outcomes
        .iter()
        .filter(|(fy, _)| *fy > 0.0)
        .map(|(fy, fp)| fp / fy)
        .fold(1.0, f64::max);
    verdict(
        outcomes.len() >= 200 && below == 0 && above == 0,
        format!(
            "{} pairs, {below} below F(y), {above} above e/(e-1) F(y), max f+/F = {worst:.4}",
            outcomes.len()
        ),
    )
}

fn binomial_oracle(n: usize) -> f64 {
    let trials = (n * n) as u64;
    let bin = Binomial::new(1.0 / n as f64, trials).unwrap();
    (0..=trials).map(|k| k.min(n as u64) as f64 * bin.pmf(k)).sum()
}

fn criterion_5() -> Verdict {
    let start = Instant::now();
    let ns = [10, 30, 100];
    let report = gap_experiment(&ns, 200, 1).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let mut ok = secs < 60.0;
    let mut notes = Vec::new();
    let mut ratios = Vec::new();
    for &n in &ns {
        let row = report.row(&format!("tight-n{n}"), "scanning").unwrap();
        let analytic = row.analytic_value.unwrap();
        let formula = (1.0 - (1.0 - 1.0 / n as f64).powi(n as i32)) * n as f64;
        ok &= (analytic - formula).abs() < 1e-12;
        let oracle = binomial_oracle(n);
        let within = (row.mc_mean - oracle).abs() <= row.mc_ci95;
        ok &= within;
        let ratio = row.ratio.unwrap();
        ratios.push(ratio);
        notes.push(format!(
            "n={n}: N={analytic:.5} mean={:.3}±{:.3} oracle={oracle:.3}{} ratio={ratio:.4}",
            row.mc_mean,
            row.mc_ci95,
            if within { "" } else { " (outside CI)" }
        ));
        if n == 100 {
            let ratio_ci = row.mc_ci95 / analytic;
            ok &= ratio >= 1.45 && ratio <= 1.582 + 3.0 * ratio_ci;
        }
    }
    // published values for n = 10 and n = 100
    let published = [(10, 6.51322), (100, 63.39677)];
    for (n, value) in published {
        ok &= (report.row(&format!("tight-n{n}"), "scanning").unwrap().analytic_value.unwrap() - value).abs() < 5e-6;
    }
    let nondecreasing = ratios.windows(2).all(|w| w[0] <= w[1]);
    ok &= nondecreasing;
    verdict(ok, format!("{}; nondecreasing={nondecreasing}, {secs:.2}s", notes.join("; ")))
}

fn criterion_6() -> Verdict {
    let c = gap_constant();
    let target_n = 1.0 - (-1.0f64).exp() - 0.05;
    let target_a = (1.0 / c).powi(2) - 0.08;
    let trials: Vec<(bool, bool, bool)> = (0..100u64)
        .into_par_iter()
        .map(|t| {
            let spec = GenSpec {
                n: 3 + t as usize % 4,
                support: 1 + (t as usize / 4) % 3,
                objective: ObjectiveKind::ALL[t as usize % 3],
                matroid: if (t / 2) % 2 == 0 { MatroidKind::Uniform } else { MatroidKind::Partition },
                max_rank: 3,
            };
            let (inst, m) = gen_random_instance(&spec, 7000 + t).unwrap();
            let cg = continuous_greedy(&inst, &m, 100, 200, &mut ChaCha8Rng::seed_from_u64(t)).unwrap();
            let set = pipage_round(&inst, &m, &cg.point, ExpectationMode::Exact).unwrap();
            let value = inst.expected_value_exact(&set).unwrap();
            let fy = inst.multilinear_exact(&cg.point).unwrap();
            let n = optimal_nonadaptive_exact(&inst, &m).unwrap().value;
            let (a, _) = optimal_adaptive_exact(&inst, &m).unwrap();
            (value >= target_n * n - TOL, value >= target_a * a - TOL, value >= fy - TOL)
        })
        .collect();
    let vs_n = trials.iter().filter(|t| t.0).count();
    let vs_a_when_n = trials.iter().filter(|t| t.0 && t.1).count();
    let rounding_losses = trials.iter().filter(|t| !t.2).count();
    verdict(
        vs_n >= 95 && vs_a_when_n == vs_n && rounding_losses == 0,
        format!(
            "{vs_n}/100 trials >= {target_n:.4} N, {vs_a_when_n} of those >= {target_a:.4} A, {rounding_losses} pipage losses"
        ),
    )
}

fn criterion_7(suite: &[SuiteInstance]) -> Verdict {
    let mut compared = 0usize;
    let mut worst: f64 = 0.0;
    for s in suite.iter().filter(|s| s.instance.is_coverage()) {
        let n = s.instance.n();
        for mask in 0u32..1 << n {
            let set: Vec<usize> = (0..n).filter(|&i| mask >> i & 1 == 1).collect();
            let exact = s.instance.expected_value_exact(&set).unwrap();
            let closed = s.instance.coverage_closed_form(&set).unwrap();
            let indicator = s.instance.multilinear_exact(&FractionalPoint::indicator(n, &set)).unwrap();
            worst = worst.max((exact - closed).abs()).max((exact - indicator).abs());
            compared += 1;
        }
    }

    let spec = GenSpec {
        n: 5,
        support: 2,
        objective: ObjectiveKind::Coverage,
        matroid: MatroidKind::Uniform,
        max_rank: 3,
    };
    let (inst, _) = gen_random_instance(&spec, 77).unwrap();
    let set = [0, 1, 2, 3, 4];
    let exact = inst.expected_value_exact(&set).unwrap();
    let y = FractionalPoint::new(vec![0.3, 0.9, 0.5, 0.1, 0.7]).unwrap();
    let exact_y = inst.multilinear_exact(&y).unwrap();
    let mut set_hits = 0;
    let mut point_hits = 0;
    for trial in 0..200u64 {
        let est = inst.expected_value_mc(&set, 1000, &mut ChaCha8Rng::seed_from_u64(trial)).unwrap();
        set_hits += usize::from((est.estimate - exact).abs() <= est.ci_halfwidth_95);
        let est = inst.multilinear_mc(&y, 1000, &mut ChaCha8Rng::seed_from_u64(trial)).unwrap();
        point_hits += usize::from((est.estimate - exact_y).abs() <= est.ci_halfwidth_95);
    }
    verdict(
        compared > 0 && worst <= TOL && set_hits >= 186 && point_hits >= 186,
        format!(
            "{compared} coverage sets agree within {worst:.1e}; MC CI covers exact F(S) in {set_hits}/200 and F(y) in {point_hits}/200"
        ),
    )
}

fn criterion_8() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("inst.json");
    let p = |path: &Path| path.to_str().unwrap().to_string();
    let gen = |out: &Path| {
        vec!["gen".into(), "random".into(), "n=5".into(), "support=2".into(), "matroid=partition".into(), "--seed".into(), "3".into(), "--out".into(), p(out)]
    };
    let status = Command::new(env!("CARGO_BIN_EXE_stochsub")).args(gen(&inst)).output().unwrap().status;
    if !status.success() {
        return verdict(false, "could not generate the instance".into());
    }
    let commands: Vec<Vec<String>> = [
        vec!["gen", "tight", "n=4"],
        vec!["gen", "random", "n=5", "support=2", "--seed", "3"],
        vec!["run", "--instance", "INST", "--policy", "myopic,greedy,continuous_greedy,optimal_adaptive,optimal_nonadaptive", "--seed", "7", "--replicates", "100"],
        vec!["exact", "--instance", "INST"],
        vec!["bound", "--instance", "INST"],
        vec!["gap", "--n", "10,30,100", "--replicates", "200", "--seed", "1"],
        vec!["verify", "--suite", "small", "--seed", "1"],
    ]
    .iter()
    .map(|args| args.iter().map(|a| if *a == "INST" { p(&inst) } else { a.to_string() }).collect())
    .collect();
    let mut differing = Vec::new();
    for args in &commands {
        let runs: Vec<_> = (0..2)
            .map(|_| Command::new(env!("CARGO_BIN_EXE_stochsub")).args(args).output().unwrap())
            .collect();
        let ok = runs.iter().all(|r| r.status.success())
            && runs[0].stdout == runs[1].stdout
            && runs[0].stderr == runs[1].stderr
            && !runs[0].stdout.is_empty();
        if !ok {
            differing.push(args[0].clone());
        }
    }
    // --out files as well
    let files: Vec<Vec<u8>> = ["a.json", "b.json"]
        .iter()
        .map(|name| {
            let out = dir.path().join(name);
            Command::new(env!("CARGO_BIN_EXE_stochsub")).args(gen(&out)).output().unwrap();
            std::fs::read(out).unwrap()
        })
        .collect();
    if files[0] != files[1] || files[0] != std::fs::read(&inst).unwrap() {
        differing.push("gen --out".into());
    }
    verdict(
        differing.is_empty(),
        format!("{} commands run twice, differing: [{}]", commands.len() + 1, differing.join(", ")),
    )
}

fn main() {
    let suite = small_suite(1, 540).expect("suite generation");
    let mut verdicts: Vec<(usize, &str, Verdict)> = Vec::new();
    let [c1, c2, c3] = criteria_1_to_3(&suite);
    verdicts.push((1, "myopic is half of the adaptive optimum", c1));
    verdicts.push((2, "uniform matroid finite-k guarantee", c2));
    verdicts.push((3, "adaptivity gap and certificate chain", c3));
    verdicts.push((4, "f+ between F(y) and e/(e-1) F(y)", criterion_4()));
    verdicts.push((5, "tight example gap experiment", criterion_5()));
    verdicts.push((6, "continuous greedy with pipage rounding", criterion_6()));
    verdicts.push((7, "evaluator coherence and MC coverage", criterion_7(&suite)));
    verdicts.push((8, "CLI determinism", criterion_8()));
    let mut failed = 0;
    for (id, name, v) in &verdicts {
        println!("criterion {id} ({name}): {} - {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
        failed += usize::from(!v.pass);
    }
    println!("acceptance: {} passed, {failed} failed", verdicts.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
