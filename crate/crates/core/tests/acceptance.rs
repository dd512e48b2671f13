//! Acceptance suite. Runs every criterion at its stated size and tolerance and
//! prints one PASS/FAIL line per criterion; exits non-zero if any fails.
//!
//! Run with `cargo test -p stirlab-core --test acceptance`. The full suite takes
//! about an hour on one core.

use std::time::{Duration, Instant};

use stirlab_core::walk::series_terms;
use stirlab_core::*;

const THETA_TOL: f64 = 1e-4;

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: String) -> Self {
        Verdict { pass, detail }
    }
}

fn theta3() -> SeriesResult {
    neighbor_occupation_series(3, THETA_TOL).expect("d = 3 series")
}

// ---- criterion 1

fn identity_residuals() -> (f64, f64) {
    let mut dp = 0.0f64;
    let mut cross = 0.0f64;
    for d in 3..=5 {
        let pmf = build_walk_pmf(d, 30).unwrap();
        dp = dp.max(markov_identity_residual(&pmf));
        // p_n(0) from the coordinate-convolution route against the DP neighbour mass
        let terms = series_terms(d, 30).unwrap();
        for n in 1..=30 {
            cross = cross.max((terms.ret[n] - pmf.neighbor_prob(n - 1) / (2.0 * d as f64)).abs());
        }
    }
    (dp, cross)
}

fn c1() -> Verdict {
    let (dp, cross) = identity_residuals();
    Verdict::new(
        dp <= 1e-12 && cross <= 1e-12,
        format!("max residual over d in 3..=5, n <= 30: table {dp:.2e}, convolution route {cross:.2e} (<= 1e-12)"),
    )
}

// ---- criterion 2

fn c2() -> Verdict {
    let s = theta3();
    let gap = (6.0 * s.theta - (s.green - 1.0)).abs();
    Verdict::new(
        gap <= 2e-4 && (0.085..=0.087).contains(&s.theta) && s.converged,
        format!(
            "theta_3 = {:.7} (+- {:.1e}), G(0,0) = {:.7}, |6 theta - (G - 1)| = {gap:.2e} (<= 2e-4), n = {}",
            s.theta, s.tolerance, s.green, s.n_used
        ),
    )
}

// ---- criterion 3

const C3_SEED: u64 = 0x0c03;

fn coupling_runs() -> Vec<(usize, f64, MeanStderr, MeanStderr)> {
    let mut out = Vec::new();
    for (k, (d, n)) in [(3, 2.0), (3, 4.0), (4, 2.0), (4, 4.0)].into_iter().enumerate() {
        let seed = rng::replicate_seed(C3_SEED, 2 * k as u64);
        let v = simulate_v_occupation(d, n, 1.0, 100_000, seed).unwrap();
        let w = simulate_w_occupation(d, n, 1.0, 100_000, rng::replicate_seed(C3_SEED, 2 * k as u64 + 1)).unwrap();
        out.push((d, n, v, w));
    }
    out
}

fn c3() -> Verdict {
    let runs = coupling_runs();
    let worst = runs.iter().map(|(_, _, v, w)| v.z_distance(w)).fold(0.0, f64::max);
    let parts: Vec<String> =
        runs.iter().map(|(d, n, v, w)| format!("d={d} N={n}: z={:.2}", v.z_distance(w))).collect();
    Verdict::new(worst <= 3.0, format!("{} (max {worst:.2} <= 3)", parts.join(", ")))
}

// ---- criterion 4

const C4_SEED: u64 = 0x0c04;

fn f1_runs() -> Vec<(LineageEstimate, f64)> {
    let mut out = Vec::new();
    let mut k = 0;
    for n in [4.0, 10.0, 40.0] {
        for theta in [0.0, 0.05] {
            let p = LineageParams::new(3, n, theta).unwrap();
            out.push((estimate_z1(&p, 100_000, rng::replicate_seed(C4_SEED, k)).unwrap(), f1_analytic(&p)));
            k += 1;
        }
    }
    out
}

fn c4() -> Verdict {
    let runs = f1_runs();
    let worst = runs.iter().map(|(e, a)| e.f1.z_to(*a)).fold(0.0, f64::max);
    let parts: Vec<String> = runs
        .iter()
        .map(|(e, a)| format!("N={} th={}: {:.5} vs {:.5}", e.params.n, e.params.theta, e.f1.mean, a))
        .collect();
    Verdict::new(worst <= 3.0, format!("{} (max z {worst:.2} <= 3)", parts.join("; ")))
}

// ---- criterion 5

const C5_SEED: u64 = 0x0c05;
const C5_NS: [f64; 3] = [8.0, 32.0, 128.0];

fn z1_runs(reps: u64) -> Vec<LineageEstimate> {
    C5_NS
        .iter()
        .enumerate()
        .map(|(k, &n)| {
            let p = LineageParams::new(3, n, 0.0).unwrap();
            estimate_z1(&p, reps, rng::replicate_seed(C5_SEED, k as u64)).unwrap()
        })
        .collect()
}

fn c5() -> Verdict {
    let target = 3.0 * theta3().theta;
    let runs = z1_runs(1_000_000);
    let mut pass = true;
    let mut parts = Vec::new();
    let mut gaps = Vec::new();
    for e in &runs {
        let n = e.params.n;
        let analytic = z1_analytic(&e.params, ExponentVariant::default()).unwrap();
        let exact = z1_exact(&e.params).unwrap();
        let z = e.z1.z_to(analytic);
        pass &= z <= 3.0;
        gaps.push((n * e.z1.mean - target).abs());
        parts.push(format!(
            "N={n}: N*E = {:.4} +- {:.4}, formula {:.4} (z {z:.1}), exact {:.4} (z {:.1})",
            n * e.z1.mean,
            n * e.z1.stderr,
            n * analytic,
            n * exact,
            e.z1.z_to(exact)
        ));
    }
    let decreasing = gaps.windows(2).all(|w| w[1] < w[0]);
    pass &= decreasing;
    parts.push(format!(
        "gap to 3 theta = {target:.4}: {} ({})",
        gaps.iter().map(|g| format!("{g:.4}")).collect::<Vec<_>>().join(" > "),
        if decreasing { "decreasing" } else { "not decreasing" }
    ));
    Verdict::new(pass, parts.join("; "))
}

// ---- criterion 6

const C6_SEED: u64 = 0x0c06;

fn supercritical_runs(reps: u64) -> Vec<SurvivalEstimate> {
    let policy = StopPolicy::new(200.0, 1000, vec![]).unwrap();
    [5.0, 10.0, 20.0]
        .iter()
        .enumerate()
        .map(|(k, &n)| {
            let p = ModelParams::with_lambda(3, n, 2.0).unwrap();
            survival_probability(&p, &policy, reps, rng::replicate_seed(C6_SEED, k as u64)).unwrap()
        })
        .collect()
}

fn c6() -> Verdict {
    let runs = supercritical_runs(1000);
    let dist: Vec<f64> = runs.iter().map(|e| (e.rho_hat - 0.5).abs()).collect();
    let monotone = dist.windows(2).all(|w| w[1] <= w[0]);
    let last = *dist.last().unwrap();
    let parts: Vec<String> = runs
        .iter()
        .map(|e| format!("N={}: {:.3} [{:.3}, {:.3}]", e.params.n, e.rho_hat, e.ci_low, e.ci_high))
        .collect();
    Verdict::new(
        monotone && last <= 0.1,
        format!(
            "{}; |rho - 0.5| {} ; |rho(20) - 0.5| = {last:.3} (<= 0.1)",
            parts.join(", "),
            if monotone { "non-increasing" } else { "not monotone" }
        ),
    )
}

// ---- criterion 7

const C7_SEED: u64 = 0x0c07;

fn subcritical_run(reps: u64) -> SurvivalEstimate {
    let p = ModelParams::with_lambda(3, 10.0, 0.8).unwrap();
    survival_probability(&p, &StopPolicy::new(200.0, 1000, vec![]).unwrap(), reps, C7_SEED).unwrap()
}

fn c7() -> Verdict {
    let e = subcritical_run(10_000);
    Verdict::new(e.successes == 0, format!("{} of {} runs reached the cap (want 0)", e.successes, e.reps))
}

// ---- criterion 8

const C8_SEED: u64 = 0x0c08;
const C8_REPS: u64 = 40_000;

fn decay_curve(reps: u64) -> MassCurve {
    let p = ModelParams::with_theta(3, 30.0, 0.04).unwrap().speeded_up();
    // no cap: a capped run would freeze its mass and bias later checkpoints
    let policy = StopPolicy::new(20.0, usize::MAX, vec![5.0, 10.0, 20.0]).unwrap();
    mass_curve(&p, &policy, reps, C8_SEED).unwrap()
}

fn c8() -> Verdict {
    let c = decay_curve(C8_REPS);
    // per-replicate changes between consecutive checkpoints, so the checkpoints' shared noise cancels
    let strict = c.step_changes.iter().all(|s| s.mean + 2.0 * s.stderr < 0.0);
    let means: Vec<String> = c.mass.iter().map(|m| format!("{:.4} +- {:.4}", m.mean, m.stderr)).collect();
    let steps: Vec<String> = c.step_changes.iter().map(|s| format!("{:.1}", s.mean / s.stderr)).collect();
    Verdict::new(
        strict && c.stopped_early == 0,
        format!(
            "{} reps, mean mass at t = 5, 10, 20: {}; step changes in stderr units: {} (< -2); truncated {}",
            c.reps,
            means.join(", "),
            steps.join(", "),
            c.stopped_early
        ),
    )
}

// ---- criterion 9

const C9_SEED: u64 = 0x0c09;

fn scan_config(theta: f64, reps: u64, max_reps: u64) -> ScanConfig {
    // The proxy for a near-critical birth rate behaves like a branching process
    // hitting the cap: P(hit) ~ eps / (1 - exp(-eps * cap)) with eps = lambda - lambda_c.
    // At cap 1000 a threshold of 0.002 puts the crossing about 0.0016 above lambda_c,
    // i.e. an upward bias of ~0.016 in N (lambda_hat - 1). The horizon lets slow
    // near-critical runs reach the cap.
    let policy = StopPolicy::new(5000.0, 1000, vec![]).unwrap();
    let mut cfg = ScanConfig::new(3, 10.0, theta, policy, C9_SEED);
    cfg.threshold = 0.002;
    cfg.reps_per_level = reps;
    cfg.max_reps_per_level = max_reps;
    cfg
}

fn c9() -> Verdict {
    let s = theta3();
    let r = critical_scan(&scan_config(s.theta, 4000, 64_000)).unwrap();
    let lo = 1.0 / 30.0 - 0.02;
    let hi = 0.0861 + 0.05;
    let gap = r.n_times_gap();
    let levels: Vec<String> = r
        .levels
        .iter()
        .map(|l| format!("{:.5}:{}/{}", l.lambda, l.estimate.successes, l.estimate.reps))
        .collect();
    Verdict::new(
        (lo..=hi).contains(&gap),
        format!(
            "lambda in [{:.5}, {:.5}], N(lambda_hat - 1) = {gap:.4} in [{lo:.4}, {hi:.4}]; levels {}; flags {:?}",
            r.lambda_lo,
            r.lambda_hi,
            levels.join(" "),
            r.flags
        ),
    )
}

// ---- criterion 10

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(f)
}

fn bits(xs: &[f64]) -> Vec<u64> {
    xs.iter().map(|x| x.to_bits()).collect()
}

/// Every stochastic criterion rerun with one and with four worker threads.
/// Criteria 4, 5 and 7 rerun at full size; 3, 6, 8 and 9 at reduced size with
/// their own seeds, which exercises the same replicate streams.
fn fingerprint() -> Vec<u64> {
    let mut out = Vec::new();
    let (a, b) = identity_residuals();
    out.extend(bits(&[a, b]));
    let s = theta3();
    out.extend(bits(&[s.theta, s.green]));
    for (_, _, v, w) in coupling_runs_small() {
        out.extend(bits(&[v.mean, v.stderr, w.mean, w.stderr]));
    }
    for (e, _) in f1_runs() {
        out.extend(bits(&[e.f1.mean, e.z1.mean]));
    }
    for e in z1_runs(1_000_000) {
        out.extend(bits(&[e.f1.mean, e.z1.mean]));
    }
    for e in supercritical_runs(100) {
        out.push(e.successes);
    }
    out.push(subcritical_run(10_000).successes);
    let c = decay_curve(500);
    for m in c.mass.iter().chain(&c.step_changes) {
        out.extend(bits(&[m.mean, m.stderr]));
    }
    let r = critical_scan(&scan_config(s.theta, 200, 400)).unwrap();
    out.extend(bits(&[r.lambda_lo, r.lambda_hi]));
    out.extend(r.levels.iter().map(|l| l.estimate.successes));
    out
}

fn coupling_runs_small() -> Vec<(usize, f64, MeanStderr, MeanStderr)> {
    [(3, 2.0), (4, 4.0)]
        .into_iter()
        .enumerate()
        .map(|(k, (d, n))| {
            let v = simulate_v_occupation(d, n, 1.0, 5000, rng::replicate_seed(C3_SEED, 2 * k as u64)).unwrap();
            let w = simulate_w_occupation(d, n, 1.0, 5000, rng::replicate_seed(C3_SEED, 2 * k as u64 + 1)).unwrap();
            (d, n, v, w)
        })
        .collect()
}

fn c10() -> Verdict {
    let one = in_pool(1, fingerprint);
    let four = in_pool(4, fingerprint);
    let same = one == four;
    let differing = one.iter().zip(&four).filter(|(a, b)| a != b).count();
    Verdict::new(
        same,
        format!("{} values compared between 1 and 4 worker threads, {differing} differ", one.len()),
    )
}

struct Criterion {
    id: u32,
    name: &'static str,
    budget: Duration,
    run: fn() -> Verdict,
}

fn main() {
    // `cargo test` forwards harness flags and name filters. Flags are ignored
    // apart from `--list`; a filter is a criterion number or a substring of
    // `criterion_<n>`.
    let args: Vec<String> = std::env::args().skip(1).collect();
    let list = args.iter().any(|a| a == "--list");
    let filters: Vec<&String> = args.iter().filter(|a| !a.starts_with('-')).collect();
    let selected = |id: u32| {
        filters.is_empty()
            || filters.iter().any(|f| f.parse::<u32>() == Ok(id) || format!("criterion_{id}").contains(f.as_str()))
    };
    let min = |m: u64| Duration::from_secs(60 * m);
    let criteria = [
        Criterion { id: 1, name: "exact Markov identity", budget: Duration::from_secs(10), run: c1 },
        Criterion { id: 2, name: "theta and Green's function agree", budget: min(1), run: c2 },
        Criterion { id: 3, name: "V/W occupation coupling", budget: min(5), run: c3 },
        Criterion { id: 4, name: "P(F1) closed form", budget: min(2), run: c4 },
        Criterion { id: 5, name: "N E[Z1] against its formula, gap trend", budget: min(20), run: c5 },
        Criterion { id: 6, name: "supercritical survival tends to 1 - 1/lambda", budget: min(30), run: c6 },
        Criterion { id: 7, name: "subcritical extinction", budget: min(5), run: c7 },
        Criterion { id: 8, name: "mass decay below theta", budget: min(30), run: c8 },
        Criterion { id: 9, name: "critical bracket", budget: min(120), run: c9 },
        Criterion { id: 10, name: "determinism across thread counts", budget: min(30), run: c10 },
    ];
    if list {
        for c in criteria.iter().filter(|c| selected(c.id)) {
            println!("criterion_{}: test", c.id);
        }
        return;
    }
    let mut failed = Vec::new();
    let mut ran = 0;
    for c in criteria.iter().filter(|c| selected(c.id)) {
        ran += 1;
        let start = Instant::now();
        let v = (c.run)();
        let elapsed = start.elapsed();
        let in_time = elapsed <= c.budget;
        let pass = v.pass && in_time;
        println!(
            "{} criterion {:>2} ({}): {} [{:.1}s of {}s{}]",
            if pass { "PASS" } else { "FAIL" },
            c.id,
            c.name,
            v.detail,
            elapsed.as_secs_f64(),
            c.budget.as_secs(),
            if in_time { "" } else { ", over budget" }
        );
        if !pass {
            failed.push(c.id);
        }
    }
    if ran == 0 {
        println!("acceptance: no criteria selected");
    } else if failed.is_empty() {
        println!("acceptance: all {ran} criteria passed");
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
