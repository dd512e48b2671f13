//! Run configuration: a flat `key=value` file overlaid by command line flags.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::Serialize;
use stirlab_core::{ExponentVariant, TimeScale};
use thiserror::Error;

/// Environment variable overriding the worker count.
pub const THREADS_ENV: &str = "STIRLAB_THREADS";

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("`{key}`: expected {expected}, got `{got}`")]
    Type { key: String, expected: &'static str, got: String },
    #[error("line {line}: expected key=value, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("`{0}` given twice in the config file")]
    Duplicate(String),
    #[error("lambda and theta are mutually exclusive")]
    RateConflict,
    #[error("no subcommand given")]
    MissingCommand,
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Theta,
    Green,
    Identity,
    Coupling,
    Z1,
    F1,
    Survive,
    Masscurve,
    Critscan,
    Report,
}

impl Command {
    pub const ALL: [Command; 10] = [
        Command::Theta,
        Command::Green,
        Command::Identity,
        Command::Coupling,
        Command::Z1,
        Command::F1,
        Command::Survive,
        Command::Masscurve,
        Command::Critscan,
        Command::Report,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Command::Theta => "theta",
            Command::Green => "green",
            Command::Identity => "identity",
            Command::Coupling => "coupling",
            Command::Z1 => "z1",
            Command::F1 => "f1",
            Command::Survive => "survive",
            Command::Masscurve => "masscurve",
            Command::Critscan => "critscan",
            Command::Report => "report",
        }
    }
}

impl FromStr for Command {
    type Err = ();
    fn from_str(s: &str) -> Result<Self, ()> {
        Command::ALL.into_iter().find(|c| c.as_str() == s).ok_or(())
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Birth rate, given either directly or through the drift `theta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Rate {
    Lambda(f64),
    Theta(f64),
}

impl Rate {
    pub fn lambda(&self, n: f64) -> f64 {
        match *self {
            Rate::Lambda(l) => l,
            Rate::Theta(t) => 1.0 + t / n,
        }
    }

    pub fn theta(&self, n: f64) -> f64 {
        match *self {
            Rate::Lambda(l) => (l - 1.0) * n,
            Rate::Theta(t) => t,
        }
    }
}

/// Fully resolved configuration of one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub d: usize,
    pub n: f64,
    pub rate: Rate,
    pub reps: u64,
    pub seed: u64,
    pub horizon: f64,
    pub mass_cap: usize,
    pub checkpoints: Vec<f64>,
    pub time_scale: TimeScale,
    pub event_budget: u64,
    /// Series tolerance for the constant `theta_d`.
    pub tol: f64,
    pub nmax: usize,
    /// Horizon of the coupling functionals.
    pub t: f64,
    pub variant: ExponentVariant,
    pub threshold: f64,
    pub max_reps: u64,
    /// Bisection tolerance; `None` uses `theta_d / 4N`.
    pub tol_lambda: Option<f64>,
    pub n_list: Vec<f64>,
    pub out: PathBuf,
    pub threads: usize,
}

/// Keys accepted in config files and as flags, in emission order.
pub const KEYS: [&str; 22] = [
    "command",
    "d",
    "N",
    "lambda",
    "theta",
    "reps",
    "seed",
    "horizon",
    "mass_cap",
    "checkpoints",
    "time_scale",
    "event_budget",
    "tol",
    "nmax",
    "t",
    "variant",
    "threshold",
    "max_reps",
    "tol_lambda",
    "n_list",
    "out",
    "threads",
];

fn key_name(key: &str) -> Option<&'static str> {
    KEYS.iter().copied().find(|k| *k == key)
}

/// Raw `key=value` pairs from a config file. `#` starts a comment line.
pub fn parse_file(text: &str) -> Result<Vec<(String, String)>, ConfigError> {
    let mut out: Vec<(String, String)> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| ConfigError::Syntax { line: i + 1, text: line.to_string() })?;
        let k = k.trim();
        if key_name(k).is_none() {
            return Err(ConfigError::UnknownKey(k.to_string()));
        }
        if out.iter().any(|(seen, _)| seen == k) {
            return Err(ConfigError::Duplicate(k.to_string()));
        }
        out.push((k.to_string(), v.trim().to_string()));
    }
    Ok(out)
}

fn typed<T: FromStr>(key: &str, v: &str, expected: &'static str) -> Result<T, ConfigError> {
    v.parse().map_err(|_| ConfigError::Type { key: key.to_string(), expected, got: v.to_string() })
}

fn float(key: &str, v: &str) -> Result<f64, ConfigError> {
    let x: f64 = typed(key, v, "a number")?;
    if !x.is_finite() {
        return Err(ConfigError::Type { key: key.to_string(), expected: "a finite number", got: v.to_string() });
    }
    Ok(x)
}

fn float_list(key: &str, v: &str) -> Result<Vec<f64>, ConfigError> {
    if v.is_empty() {
        return Ok(Vec::new());
    }
    v.split(',').map(|x| float(key, x.trim())).collect()
}

fn join(xs: &[f64]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

/// Where values not given anywhere come from.
pub struct Defaults {
    pub seed: u64,
    pub threads: usize,
}

impl Defaults {
    pub fn from_environment() -> Self {
        Defaults {
            seed: rand::random(),
            threads: std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
        }
    }
}

/// Resolves a configuration. Flags override file entries, `env_threads`
/// overrides both for the worker count.
pub fn parse_config(
    command: Option<Command>,
    file: &[(String, String)],
    flags: &[(String, String)],
    env_threads: Option<&str>,
    defaults: Defaults,
) -> Result<RunConfig, ConfigError> {
    let mut map: BTreeMap<&str, &str> = BTreeMap::new();
    for (k, v) in file.iter().chain(flags) {
        let key = key_name(k).ok_or_else(|| ConfigError::UnknownKey(k.clone()))?;
        map.insert(key, v.as_str());
    }
    let has = |k: &str| file.iter().chain(flags).any(|(key, _)| key == k);
    if has("lambda") && has("theta") {
        return Err(ConfigError::RateConflict);
    }
    let get = |k: &str| map.get(k).copied();

    let command = match command {
        Some(c) => c,
        None => {
            let v = get("command").ok_or(ConfigError::MissingCommand)?;
            v.parse().map_err(|_| ConfigError::Type { key: "command".into(), expected: "a subcommand name", got: v.into() })?
        }
    };
    let rate = match (get("lambda"), get("theta")) {
        (Some(l), None) => Rate::Lambda(float("lambda", l)?),
        (None, Some(t)) => Rate::Theta(float("theta", t)?),
        _ => Rate::Theta(0.0),
    };
    let time_scale = match get("time_scale").unwrap_or("raw") {
        "raw" => TimeScale::Raw,
        "speeded_up" => TimeScale::SpeededUp,
        other => {
            return Err(ConfigError::Type { key: "time_scale".into(), expected: "raw or speeded_up", got: other.into() })
        }
    };
    let variant = match get("variant").unwrap_or("consistent") {
        "consistent" => ExponentVariant::Consistent,
        "doubled" => ExponentVariant::Doubled,
        other => {
            return Err(ConfigError::Type { key: "variant".into(), expected: "consistent or doubled", got: other.into() })
        }
    };
    let tol_lambda = match get("tol_lambda").unwrap_or("auto") {
        "auto" => None,
        v => Some(float("tol_lambda", v)?),
    };
    let threads = match env_threads.or(get("threads")) {
        Some(v) => typed::<usize>("threads", v, "a positive integer")?,
        None => defaults.threads,
    };
    if threads == 0 {
        return Err(ConfigError::Invalid("threads must be at least 1".into()));
    }

    let cfg = RunConfig {
        command,
        d: get("d").map_or(Ok(3), |v| typed("d", v, "a positive integer"))?,
        n: get("N").map_or(Ok(10.0), |v| float("N", v))?,
        rate,
        reps: get("reps").map_or(Ok(1000), |v| typed("reps", v, "a non-negative integer"))?,
        seed: get("seed").map_or(Ok(defaults.seed), |v| typed("seed", v, "a 64-bit unsigned integer"))?,
        horizon: get("horizon").map_or(Ok(200.0), |v| float("horizon", v))?,
        mass_cap: get("mass_cap").map_or(Ok(1000), |v| typed("mass_cap", v, "a positive integer"))?,
        checkpoints: get("checkpoints").map_or(Ok(Vec::new()), |v| float_list("checkpoints", v))?,
        time_scale,
        event_budget: get("event_budget")
            .map_or(Ok(stirlab_core::sim::DEFAULT_EVENT_BUDGET), |v| typed("event_budget", v, "a positive integer"))?,
        tol: get("tol").map_or(Ok(1e-4), |v| float("tol", v))?,
        nmax: get("nmax").map_or(Ok(30), |v| typed("nmax", v, "a non-negative integer"))?,
        t: get("t").map_or(Ok(1.0), |v| float("t", v))?,
        variant,
        threshold: get("threshold").map_or(Ok(0.05), |v| float("threshold", v))?,
        max_reps: get("max_reps").map_or(Ok(100_000), |v| typed("max_reps", v, "a positive integer"))?,
        tol_lambda,
        n_list: get("n_list").map_or(Ok(Vec::new()), |v| float_list("n_list", v))?,
        out: PathBuf::from(get("out").unwrap_or("stirlab-out")),
        threads,
    };
    Ok(cfg)
}

/// Renders a configuration as a config file that parses back to the same value.
pub fn emit(cfg: &RunConfig) -> String {
    let mut lines = vec![
        ("command", cfg.command.to_string()),
        ("d", cfg.d.to_string()),
        ("N", cfg.n.to_string()),
    ];
    match cfg.rate {
        Rate::Lambda(l) => lines.push(("lambda", l.to_string())),
        Rate::Theta(t) => lines.push(("theta", t.to_string())),
    }
    lines.extend([
        ("reps", cfg.reps.to_string()),
        ("seed", cfg.seed.to_string()),
        ("horizon", cfg.horizon.to_string()),
        ("mass_cap", cfg.mass_cap.to_string()),
        ("checkpoints", join(&cfg.checkpoints)),
        (
            "time_scale",
            match cfg.time_scale {
                TimeScale::Raw => "raw",
                TimeScale::SpeededUp => "speeded_up",
            }
            .to_string(),
        ),
        ("event_budget", cfg.event_budget.to_string()),
        ("tol", cfg.tol.to_string()),
        ("nmax", cfg.nmax.to_string()),
        ("t", cfg.t.to_string()),
        (
            "variant",
            match cfg.variant {
                ExponentVariant::Consistent => "consistent",
                ExponentVariant::Doubled => "doubled",
            }
            .to_string(),
        ),
        ("threshold", cfg.threshold.to_string()),
        ("max_reps", cfg.max_reps.to_string()),
        ("tol_lambda", cfg.tol_lambda.map_or("auto".to_string(), |x| x.to_string())),
        ("n_list", join(&cfg.n_list)),
        ("out", cfg.out.display().to_string()),
        ("threads", cfg.threads.to_string()),
    ]);
    lines.into_iter().map(|(k, v)| format!("{k}={v}\n")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn defaults() -> Defaults {
        Defaults { seed: 42, threads: 2 }
    }

    fn pairs(xs: &[(&str, &str)]) -> Vec<(String, String)> {
        xs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn defaults_are_materialised() {
        let c = parse_config(Some(Command::Survive), &[], &pairs(&[("d", "4")]), None, defaults()).unwrap();
        assert_eq!(c.d, 4);
        assert_eq!(c.n, 10.0);
        assert_eq!(c.seed, 42);
        assert_eq!(c.threads, 2);
        assert_eq!(c.rate, Rate::Theta(0.0));
        assert_eq!(c.mass_cap, 1000);
        assert_eq!(c.horizon, 200.0);
        assert_eq!(c.tol_lambda, None);
    }

    #[test]
    fn flags_override_file() {
        let file = parse_file("N=10\n# comment\n\nreps = 50\n").unwrap();
        let c = parse_config(Some(Command::Survive), &file, &pairs(&[("N", "20")]), None, defaults()).unwrap();
        assert_eq!(c.n, 20.0);
        assert_eq!(c.reps, 50);
    }

    #[test]
    fn rate_exclusivity() {
        let err = parse_config(
            Some(Command::Survive),
            &pairs(&[("theta", "0.1")]),
            &pairs(&[("lambda", "2")]),
            None,
            defaults(),
        )
        .unwrap_err();
        assert_eq!(err, ConfigError::RateConflict);
        let c = parse_config(Some(Command::Survive), &[], &pairs(&[("theta", "0.5"), ("N", "5")]), None, defaults())
            .unwrap();
        assert_eq!(c.rate.lambda(c.n), 1.1);
    }

    #[test]
    fn unknown_key_is_named() {
        let err = parse_file("N=3\nbogus=1\n").unwrap_err();
        assert_eq!(err, ConfigError::UnknownKey("bogus".into()));
        assert!(err.to_string().contains("bogus"));
    }

    #[test]
    fn type_mismatch_names_expected_type() {
        let err = parse_config(Some(Command::Theta), &[], &pairs(&[("d", "three")]), None, defaults()).unwrap_err();
        assert!(err.to_string().contains("positive integer"), "{err}");
        let err = parse_config(Some(Command::Theta), &[], &pairs(&[("checkpoints", "1,x")]), None, defaults()).unwrap_err();
        assert!(matches!(err, ConfigError::Type { .. }));
        assert!(parse_file("just text").is_err());
        assert!(parse_file("N=1\nN=2").is_err());
    }

    #[test]
    fn env_overrides_threads() {
        let c = parse_config(Some(Command::Theta), &[], &pairs(&[("threads", "3")]), Some("5"), defaults()).unwrap();
        assert_eq!(c.threads, 5);
        assert!(parse_config(Some(Command::Theta), &[], &[], Some("0"), defaults()).is_err());
    }

    #[test]
    fn emit_then_parse_round_trips() {
        let mut c = parse_config(
            Some(Command::Masscurve),
            &[],
            &pairs(&[
                ("lambda", "1.0013333333333334"),
                ("checkpoints", "5,10,20.5"),
                ("time_scale", "speeded_up"),
                ("variant", "doubled"),
                ("tol_lambda", "0.002"),
                ("n_list", "5,10"),
                ("seed", "18446744073709551615"),
            ]),
            None,
            defaults(),
        )
        .unwrap();
        for _ in 0..2 {
            let text = emit(&c);
            let back = parse_config(None, &parse_file(&text).unwrap(), &[], None, defaults()).unwrap();
            assert_eq!(back, c);
            c.rate = Rate::Theta(0.04);
            c.tol_lambda = None;
            c.checkpoints.clear();
        }
    }

    #[test]
    fn command_comes_from_file_when_absent() {
        let file = parse_file("command=report").unwrap();
        let c = parse_config(None, &file, &[], None, defaults()).unwrap();
        assert_eq!(c.command, Command::Report);
        assert_eq!(parse_config(None, &[], &[], None, defaults()).unwrap_err(), ConfigError::MissingCommand);
    }
}
