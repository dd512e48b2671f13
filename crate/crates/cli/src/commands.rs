//! One function per subcommand. Each returns its output files in memory; the
//! caller writes them.

use serde::Serialize;
use serde_json::json;
use stirlab_core::io;
use stirlab_core::rng::{mix64, replicate_seed};
use stirlab_core::*;

use crate::config::{Command, RunConfig};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug)]
pub struct RunOutput {
    /// One-line human summary.
    pub summary: String,
    pub files: Vec<(String, Vec<u8>)>,
    /// Ran fine but did not converge or could not classify.
    pub inconclusive: bool,
}

fn csv(f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

fn summary_json<T: Serialize>(cfg: &RunConfig, result: &T) -> Vec<u8> {
    let v = json!({
        "command": cfg.command,
        "version": VERSION,
        "seed": cfg.seed,
        "result": result,
    });
    let mut s = serde_json::to_vec_pretty(&v).expect("serialisable");
    s.push(b'\n');
    s
}

fn model(cfg: &RunConfig) -> Result<ModelParams> {
    let p = ModelParams::with_lambda(cfg.d, cfg.n, cfg.rate.lambda(cfg.n))?;
    Ok(ModelParams { time_scale: cfg.time_scale, ..p })
}

fn policy(cfg: &RunConfig) -> Result<StopPolicy> {
    Ok(StopPolicy::new(cfg.horizon, cfg.mass_cap, cfg.checkpoints.clone())?.with_event_budget(cfg.event_budget))
}

pub fn run(cfg: &RunConfig) -> Result<RunOutput> {
    match cfg.command {
        Command::Theta => theta(cfg),
        Command::Green => green(cfg),
        Command::Identity => identity(cfg),
        Command::Coupling => coupling(cfg),
        Command::Z1 | Command::F1 => lineage(cfg),
        Command::Survive => survive(cfg),
        Command::Masscurve => masscurve(cfg),
        Command::Critscan => critscan(cfg),
        Command::Report => report(cfg),
    }
}

fn theta(cfg: &RunConfig) -> Result<RunOutput> {
    let s = neighbor_occupation_series(cfg.d, cfg.tol)?;
    Ok(RunOutput {
        summary: format!(
            "theta_{} = {:.7} +- {:.1e} (n = {}, {})",
            s.d,
            s.theta,
            s.tolerance,
            s.n_used,
            if s.converged { "converged" } else { "not converged" }
        ),
        files: vec![
            ("series.csv".into(), csv(|b| io::write_series(b, &s.neighbor_rows()))?),
            ("summary.json".into(), summary_json(cfg, &s)),
        ],
        inconclusive: !s.converged,
    })
}

fn green(cfg: &RunConfig) -> Result<RunOutput> {
    let s = neighbor_occupation_series(cfg.d, cfg.tol)?;
    Ok(RunOutput {
        summary: format!(
            "G(0,0) = {:.7} +- {:.1e}, (G-1)/2d = {:.7}, theta_{} = {:.7}",
            s.green,
            s.green_tolerance,
            s.green_bound(),
            s.d,
            s.theta
        ),
        files: vec![
            ("green.csv".into(), csv(|b| io::write_series(b, &s.green_rows()))?),
            ("summary.json".into(), summary_json(cfg, &s)),
        ],
        inconclusive: !s.converged,
    })
}

fn identity(cfg: &RunConfig) -> Result<RunOutput> {
    let pmf = build_walk_pmf(cfg.d, cfg.nmax)?;
    let two_d = 2.0 * cfg.d as f64;
    let rows: Vec<[f64; 3]> = (1..=cfg.nmax)
        .map(|n| {
            let lhs = pmf.return_prob(n);
            let rhs = pmf.neighbor_prob(n - 1) / two_d;
            [lhs, rhs, (lhs - rhs).abs()]
        })
        .collect();
    let max = markov_identity_residual(&pmf);
    let file = csv(|b| {
        io::write_rows(
            b,
            &io::IDENTITY_COLUMNS,
            rows.iter().enumerate().map(|(i, r)| {
                vec![(i + 1).to_string(), r[0].to_string(), r[1].to_string(), r[2].to_string()]
            }),
        )
    })?;
    Ok(RunOutput {
        summary: format!("max |p_n(0) - P(V_(n-1) in nbhd)/2d| over n <= {} in d = {}: {:.3e}", cfg.nmax, cfg.d, max),
        files: vec![
            ("identity.csv".into(), file),
            ("summary.json".into(), summary_json(cfg, &json!({ "d": cfg.d, "nmax": cfg.nmax, "max_residual": max }))),
        ],
        inconclusive: false,
    })
}

fn coupling(cfg: &RunConfig) -> Result<RunOutput> {
    let v = simulate_v_occupation(cfg.d, cfg.n, cfg.t, cfg.reps, cfg.seed)?;
    let w = simulate_w_occupation(cfg.d, cfg.n, cfg.t, cfg.reps, mix64(cfg.seed ^ 0x5745_4348_4149_4e57))?;
    let analytic = v_occupation_analytic(cfg.d, cfg.n, cfg.t)?;
    let z = v.z_distance(&w);
    let row = vec![
        cfg.d.to_string(),
        cfg.n.to_string(),
        cfg.t.to_string(),
        cfg.reps.to_string(),
        v.mean.to_string(),
        v.stderr.to_string(),
        w.mean.to_string(),
        w.stderr.to_string(),
        analytic.to_string(),
        z.to_string(),
    ];
    Ok(RunOutput {
        summary: format!(
            "occupation V = {:.6e} +- {:.1e}, W = {:.6e} +- {:.1e}, pooled z = {:.2}",
            v.mean, v.stderr, w.mean, w.stderr, z
        ),
        files: vec![
            ("coupling.csv".into(), csv(|b| io::write_rows(b, &io::COUPLING_COLUMNS, [row]))?),
            ("summary.json".into(), summary_json(cfg, &json!({ "v": v, "w": w, "v_analytic": analytic, "z_pooled": z }))),
        ],
        inconclusive: false,
    })
}

fn lineage(cfg: &RunConfig) -> Result<RunOutput> {
    let p = LineageParams::new(cfg.d, cfg.n, cfg.rate.theta(cfg.n))?;
    let est = estimate_z1(&p, cfg.reps, cfg.seed)?;
    let f1 = f1_analytic(&p);
    let z1 = z1_analytic(&p, cfg.variant)?;
    let exact = z1_exact(&p)?;
    let summary = if cfg.command == Command::F1 {
        format!("P(F1): MC {:.6} +- {:.1e}, closed form {:.6}", est.f1.mean, est.f1.stderr, f1)
    } else {
        format!(
            "N E[Z1]: MC {:.5} +- {:.1e}, approximate {:.5}, exact {:.5}",
            cfg.n * est.z1.mean,
            cfg.n * est.z1.stderr,
            cfg.n * z1,
            cfg.n * exact
        )
    };
    Ok(RunOutput {
        summary,
        files: vec![
            ("lineage.csv".into(), csv(|b| io::write_lineage(b, &[(est, f1, z1)]))?),
            (
                "summary.json".into(),
                summary_json(
                    cfg,
                    &json!({ "estimate": est, "f1_analytic": f1, "z1_analytic": z1, "z1_exact": exact, "variant": cfg.variant }),
                ),
            ),
        ],
        inconclusive: false,
    })
}

fn survive(cfg: &RunConfig) -> Result<RunOutput> {
    let est = survival_probability(&model(cfg)?, &policy(cfg)?, cfg.reps, cfg.seed)?;
    Ok(RunOutput {
        summary: format!(
            "rho_hat = {:.4} [{:.4}, {:.4}] ({} of {} reached {})",
            est.rho_hat, est.ci_low, est.ci_high, est.successes, est.reps, cfg.mass_cap
        ),
        files: vec![
            ("survival.csv".into(), csv(|b| io::write_survival(b, std::slice::from_ref(&est)))?),
            ("summary.json".into(), summary_json(cfg, &est)),
        ],
        inconclusive: false,
    })
}

fn masscurve(cfg: &RunConfig) -> Result<RunOutput> {
    if cfg.checkpoints.is_empty() {
        return Err(Error::InvalidParameter("masscurve needs at least one checkpoint".into()));
    }
    let p = model(cfg)?;
    let pol = policy(cfg)?;
    let curve = mass_curve(&p, &pol, cfg.reps, cfg.seed)?;
    let first = run_trajectory(&p, &pol, replicate_seed(cfg.seed, 0))?;
    let curve_csv = csv(|b| {
        io::write_rows(
            b,
            &io::MASS_CURVE_COLUMNS,
            (0..curve.times.len()).map(|i| {
                vec![
                    curve.times[i].to_string(),
                    curve.mass[i].mean.to_string(),
                    curve.mass[i].stderr.to_string(),
                    curve.pairs[i].mean.to_string(),
                    curve.pairs[i].stderr.to_string(),
                ]
            }),
        )
    })?;
    let traj_csv = csv(|b| {
        io::write_rows(
            b,
            &io::TRAJECTORY_COLUMNS,
            (0..pol.checkpoints.len()).map(|i| {
                vec![
                    pol.checkpoints[i].to_string(),
                    first.mass_samples[i].to_string(),
                    first.pair_samples[i].to_string(),
                ]
            }),
        )
    })?;
    let run = json!({
        "outcome": first.outcome,
        "times": pol.checkpoints,
        "event_count": first.event_count,
        "truncated": first.truncated,
        "seed": replicate_seed(cfg.seed, 0),
        "master_seed": cfg.seed,
        "version": VERSION,
    });
    let means: Vec<String> = curve.mass.iter().map(|m| format!("{:.4}", m.mean)).collect();
    Ok(RunOutput {
        summary: format!("mean mass at t = {:?}: {}", curve.times, means.join(", ")),
        files: vec![
            ("mass_curve.csv".into(), curve_csv),
            ("trajectory.csv".into(), traj_csv),
            ("trajectory.json".into(), serde_json::to_vec_pretty(&run).expect("serialisable")),
            ("summary.json".into(), summary_json(cfg, &curve)),
        ],
        inconclusive: false,
    })
}

fn scan_template(cfg: &RunConfig, series: &SeriesResult) -> Result<ScanConfig> {
    let mut scan = ScanConfig::new(cfg.d, cfg.n, series.theta, policy(cfg)?, cfg.seed);
    scan.threshold = cfg.threshold;
    scan.reps_per_level = cfg.reps;
    scan.max_reps_per_level = cfg.max_reps;
    scan.tol_lambda = cfg.tol_lambda;
    Ok(scan)
}

fn critscan(cfg: &RunConfig) -> Result<RunOutput> {
    let series = neighbor_occupation_series(cfg.d, cfg.tol)?;
    let result = critical_scan(&scan_template(cfg, &series)?)?;
    Ok(RunOutput {
        summary: format!(
            "lambda_hat = {:.6} in [{:.6}, {:.6}], N(lambda_hat - 1) = {:.4} vs theta_{} = {:.5}, bracket [{:.5}, {:.5}]{}",
            result.lambda_hat,
            result.lambda_lo,
            result.lambda_hi,
            result.n_times_gap(),
            cfg.d,
            series.theta,
            series.konno_lower(),
            series.green_bound(),
            if result.inconclusive { " (inconclusive)" } else { "" }
        ),
        files: vec![
            ("scan_levels.csv".into(), csv(|b| io::write_scan_levels(b, &result))?),
            ("summary.json".into(), summary_json(cfg, &result)),
        ],
        inconclusive: result.inconclusive,
    })
}

fn report(cfg: &RunConfig) -> Result<RunOutput> {
    let series = neighbor_occupation_series(cfg.d, cfg.tol)?;
    let rows = asymptotics_report(&scan_template(cfg, &series)?, &cfg.n_list, &series)?;
    let inconclusive = rows.iter().any(|r| r.flags.iter().any(|f| f == "inconclusive"));
    Ok(RunOutput {
        summary: format!(
            "{} rows, N(lambda_hat - 1) = [{}]",
            rows.len(),
            rows.iter().map(|r| format!("{:.4}", r.n_times_gap)).collect::<Vec<_>>().join(", ")
        ),
        files: vec![
            ("report.csv".into(), csv(|b| io::write_report(b, &rows))?),
            ("summary.json".into(), summary_json(cfg, &rows)),
        ],
        inconclusive,
    })
}
