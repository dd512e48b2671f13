//! Survival probabilities, the critical-value scan and the asymptotics report.
//!
//! Survival forever is not observable, so a run counts as surviving when its
//! mass reaches the policy's cap before the horizon.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng::{replicate_seed, replicates};
use crate::sim::{run_trajectory_from, ModelParams, Outcome, StopPolicy};
use crate::lattice::Configuration;
use crate::walk::SeriesResult;

/// Two-sided 95% normal quantile.
pub const Z_95: f64 = 1.959_963_984_540_054;

/// Wilson score interval for `successes` out of `trials`.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> Result<(f64, f64)> {
    if trials == 0 {
        return Err(Error::InvalidParameter("Wilson interval needs at least one trial".into()));
    }
    if successes > trials {
        return Err(Error::InvalidParameter(format!("{successes} successes out of {trials} trials")));
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    let low = if successes == 0 { 0.0 } else { (center - half).max(0.0) };
    let high = if successes == trials { 1.0 } else { (center + half).min(1.0) };
    Ok((low, high))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurvivalEstimate {
    pub params: ModelParams,
    pub reps: u64,
    pub successes: u64,
    /// Runs that exhausted the event budget (counted as non-surviving).
    pub truncated: u64,
    pub rho_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub seed: u64,
}

impl SurvivalEstimate {
    fn from_counts(params: ModelParams, reps: u64, successes: u64, truncated: u64, seed: u64) -> Self {
        let (ci_low, ci_high) = wilson_interval(successes, reps, Z_95).expect("reps >= 1");
        SurvivalEstimate { params, reps, successes, truncated, rho_hat: successes as f64 / reps as f64, ci_low, ci_high, seed }
    }

    pub fn stderr(&self) -> f64 {
        (self.rho_hat * (1.0 - self.rho_hat) / self.reps as f64).sqrt()
    }
}

/// Counts cap hits among replicates `start..start + count`.
fn survival_counts(p: &ModelParams, policy: &StopPolicy, seed: u64, start: u64, count: u64) -> Result<(u64, u64)> {
    let origin = Configuration::single_origin(p.d)?;
    let runs = replicates(seed, start, count, |_, rng| run_trajectory_from(p, policy, origin.clone(), rng));
    let mut hits = 0;
    let mut truncated = 0;
    for r in runs {
        let r = r?;
        if matches!(r.outcome, Outcome::MassCap(_)) {
            hits += 1;
        }
        if r.truncated {
            truncated += 1;
        }
    }
    Ok((hits, truncated))
}

/// Fraction of runs reaching the mass cap, with a 95% Wilson interval.
pub fn survival_probability(p: &ModelParams, policy: &StopPolicy, reps: u64, seed: u64) -> Result<SurvivalEstimate> {
    if reps < 30 {
        return Err(Error::InvalidParameter(format!("need at least 30 replicates, got {reps}")));
    }
    let (hits, truncated) = survival_counts(p, policy, seed, 0, reps)?;
    Ok(SurvivalEstimate::from_counts(*p, reps, hits, truncated, seed))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LevelClass {
    Supercritical,
    Subcritical,
    Inconclusive,
}

impl LevelClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            LevelClass::Supercritical => "supercritical",
            LevelClass::Subcritical => "subcritical",
            LevelClass::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanLevel {
    pub lambda: f64,
    pub estimate: SurvivalEstimate,
    pub class: LevelClass,
}

/// Settings of a critical-value scan.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanConfig {
    pub d: usize,
    pub n: f64,
    /// Survival-proxy probability separating super- from subcritical levels.
    pub threshold: f64,
    /// Replicates at the first look of every level; doubled while the CI straddles the threshold.
    pub reps_per_level: u64,
    pub max_reps_per_level: u64,
    pub policy: StopPolicy,
    pub seed: u64,
    /// Reference constant `theta_d`; sets the initial bracket `[1, 1 + 4 theta / N]`.
    pub theta_ref: f64,
    /// Stop when the bracket is narrower than this; defaults to `theta / 4N`.
    pub tol_lambda: Option<f64>,
    pub max_widenings: usize,
}

impl ScanConfig {
    pub const DEFAULT_THRESHOLD: f64 = 0.05;
    pub const DEFAULT_MAX_REPS: u64 = 100_000;

    pub fn new(d: usize, n: f64, theta_ref: f64, policy: StopPolicy, seed: u64) -> Self {
        ScanConfig {
            d,
            n,
            threshold: Self::DEFAULT_THRESHOLD,
            reps_per_level: 1000,
            max_reps_per_level: Self::DEFAULT_MAX_REPS,
            policy,
            seed,
            theta_ref,
            tol_lambda: None,
            max_widenings: 12,
        }
    }

    fn tol(&self) -> f64 {
        self.tol_lambda.unwrap_or(self.theta_ref / (4.0 * self.n))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalScanResult {
    pub d: usize,
    pub n: f64,
    pub lambda_lo: f64,
    pub lambda_hat: f64,
    pub lambda_hi: f64,
    pub threshold: f64,
    /// Every evaluated level, in evaluation order.
    pub levels: Vec<ScanLevel>,
    pub inconclusive: bool,
    pub flags: Vec<String>,
}

impl CriticalScanResult {
    /// `N (lambda_hat - 1)`.
    pub fn n_times_gap(&self) -> f64 {
        self.n * (self.lambda_hat - 1.0)
    }
}

/// Classifies one level, doubling replicates while the interval straddles the threshold.
fn classify(cfg: &ScanConfig, lambda: f64, level_seed: u64) -> Result<ScanLevel> {
    let params = ModelParams::with_lambda(cfg.d, cfg.n, lambda)?;
    let mut reps = 0u64;
    let mut hits = 0u64;
    let mut truncated = 0u64;
    let mut batch = cfg.reps_per_level.max(30);
    loop {
        let (h, t) = survival_counts(&params, &cfg.policy, level_seed, reps, batch)?;
        hits += h;
        truncated += t;
        reps += batch;
        let est = SurvivalEstimate::from_counts(params, reps, hits, truncated, level_seed);
        let class = if est.ci_low > cfg.threshold {
            Some(LevelClass::Supercritical)
        } else if est.ci_high < cfg.threshold {
            Some(LevelClass::Subcritical)
        } else if reps >= cfg.max_reps_per_level {
            Some(LevelClass::Inconclusive)
        } else {
            None
        };
        if let Some(class) = class {
            return Ok(ScanLevel { lambda, estimate: est, class });
        }
        // doubling the total
        batch = reps.min(cfg.max_reps_per_level - reps);
    }
}

/// Brackets the birth rate at which the survival proxy crosses `threshold`.
///
/// The bracket starts at `[1, 1 + 4 theta / N]`; the upper end is doubled
/// (in `lambda - 1`) until it classifies as supercritical, then bisection
/// runs until the bracket is narrower than the tolerance. A level whose
/// interval still straddles the threshold at the replicate cap stops the scan
/// and marks the result inconclusive.
pub fn critical_scan(cfg: &ScanConfig) -> Result<CriticalScanResult> {
    if !(cfg.threshold > 0.0 && cfg.threshold < 0.5) {
        return Err(Error::InvalidParameter(format!("threshold must lie in (0, 0.5), got {}", cfg.threshold)));
    }
    if !(cfg.theta_ref > 0.0) || !(cfg.n >= 1.0) {
        return Err(Error::InvalidParameter("scan needs theta_ref > 0 and N >= 1".into()));
    }
    if cfg.max_reps_per_level < cfg.reps_per_level {
        return Err(Error::InvalidParameter("max_reps_per_level below reps_per_level".into()));
    }
    cfg.policy.validate()?;
    let mut levels = Vec::new();
    let mut flags = Vec::new();
    let mut next_seed = {
        let mut k = 0u64;
        move || {
            k += 1;
            replicate_seed(cfg.seed, k)
        }
    };

    let mut lo = 1.0;
    let mut hi = 1.0 + 4.0 * cfg.theta_ref / cfg.n;
    let bottom = classify(cfg, lo, next_seed())?;
    if bottom.class != LevelClass::Subcritical {
        flags.push(format!("lambda=1 classified {}", bottom.class.as_str()));
    }
    levels.push(bottom);

    let mut inconclusive = false;
    let mut widenings = 0;
    loop {
        let top = classify(cfg, hi, next_seed())?;
        let class = top.class;
        levels.push(top);
        match class {
            LevelClass::Supercritical => break,
            LevelClass::Inconclusive => {
                inconclusive = true;
                break;
            }
            LevelClass::Subcritical => {
                if widenings == cfg.max_widenings {
                    flags.push("upper end never classified supercritical".into());
                    inconclusive = true;
                    break;
                }
                lo = hi;
                hi = 1.0 + 2.0 * (hi - 1.0);
                widenings += 1;
            }
        }
    }

    while !inconclusive && hi - lo > cfg.tol() {
        let mid = 0.5 * (lo + hi);
        let level = classify(cfg, mid, next_seed())?;
        let class = level.class;
        levels.push(level);
        match class {
            LevelClass::Supercritical => hi = mid,
            LevelClass::Subcritical => lo = mid,
            LevelClass::Inconclusive => inconclusive = true,
        }
    }
    if inconclusive {
        flags.push("inconclusive".into());
    }
    flags.extend(monotonicity_violations(&levels));
    Ok(CriticalScanResult {
        d: cfg.d,
        n: cfg.n,
        lambda_lo: lo,
        lambda_hat: 0.5 * (lo + hi),
        lambda_hi: hi,
        threshold: cfg.threshold,
        levels,
        inconclusive,
        flags,
    })
}

/// Pairs of levels where the estimate drops by more than 2 pooled standard
/// errors as `lambda` increases.
fn monotonicity_violations(levels: &[ScanLevel]) -> Vec<String> {
    let mut sorted: Vec<&ScanLevel> = levels.iter().collect();
    sorted.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
    sorted
        .windows(2)
        .filter_map(|w| {
            let (a, b) = (&w[0].estimate, &w[1].estimate);
            let se = (a.stderr().powi(2) + b.stderr().powi(2)).sqrt();
            (b.rho_hat < a.rho_hat - 2.0 * se)
                .then(|| format!("non-monotone between lambda={} and lambda={}", w[0].lambda, w[1].lambda))
        })
        .collect()
}

/// One row of the asymptotics report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub d: usize,
    pub n: f64,
    pub lambda_lo: f64,
    pub lambda_hat: f64,
    pub lambda_hi: f64,
    pub n_times_gap: f64,
    pub theta: f64,
    pub green_bound: f64,
    pub konno_lower: f64,
    pub flags: Vec<String>,
}

/// Runs one scan per `N` and sets `N (lambda_hat - 1)` against `theta_d`,
/// `(G(0,0) - 1) / 2d` and `1 / (2d (2d - 1))`. Rows outside
/// `[theta / 2, 2 theta]` are flagged as outliers.
pub fn asymptotics_report(template: &ScanConfig, n_list: &[f64], series: &SeriesResult) -> Result<Vec<ReportRow>> {
    if series.d != template.d {
        return Err(Error::DimensionMismatch { expected: template.d, got: series.d });
    }
    n_list
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let cfg = ScanConfig { n, seed: replicate_seed(template.seed, 1_000_000 + i as u64), ..template.clone() };
            let scan = critical_scan(&cfg)?;
            let gap = scan.n_times_gap();
            let mut flags = scan.flags.clone();
            if !(0.5 * series.theta..=2.0 * series.theta).contains(&gap) {
                flags.push("outlier".into());
            }
            Ok(ReportRow {
                d: template.d,
                n,
                lambda_lo: scan.lambda_lo,
                lambda_hat: scan.lambda_hat,
                lambda_hi: scan.lambda_hi,
                n_times_gap: gap,
                theta: series.theta,
                green_bound: series.green_bound(),
                konno_lower: series.konno_lower(),
                flags,
            })
        })
        .collect()
}
