//! Experiment configuration: a flat `key = value` file plus overrides.
//!
//! Keys are the lower snake case field names of [`ExperimentConfig`].
//! Entries are applied in order, so later ones (command-line overrides)
//! win over earlier ones (the file).

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use bdh_core::psprimes::PsConfig;

use crate::error::{LabError, Result};

/// How `Q` follows from `X`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QRule {
    Fixed(u64),
    /// `ceil(X / (log X)^A)`
    XOverLogPow(f64),
    /// `ceil(X^γ / (log X)^A)`
    XPowGammaOverLogPow(f64),
}

impl QRule {
    pub fn evaluate(&self, x: f64, gamma: f64) -> u64 {
        let q = match *self {
            Self::Fixed(q) => return q,
            Self::XOverLogPow(a) => (x / x.ln().powf(a)).ceil(),
            Self::XPowGammaOverLogPow(a) => (x.powf(gamma) / x.ln().powf(a)).ceil(),
        };
        (q as u64).max(1)
    }
}

impl fmt::Display for QRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Fixed(q) => write!(f, "fixed:{q}"),
            Self::XOverLogPow(a) => write!(f, "x_over_log_pow:{a:?}"),
            Self::XPowGammaOverLogPow(a) => write!(f, "x_pow_gamma_over_log_pow:{a:?}"),
        }
    }
}

impl FromStr for QRule {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        let (name, arg) = s.split_once(':').unwrap_or((s, ""));
        match name.trim() {
            "fixed" => {
                let q = parse_num::<u64>("q_rule", arg)?;
                if q == 0 {
                    return Err(LabError::Config("q_rule fixed:Q needs Q >= 1".into()));
                }
                Ok(Self::Fixed(q))
            }
            "x_over_log_pow" => Ok(Self::XOverLogPow(parse_finite("q_rule", arg)?)),
            "x_pow_gamma_over_log_pow" => Ok(Self::XPowGammaOverLogPow(parse_finite("q_rule", arg)?)),
            _ => Err(LabError::Config(format!(
                "q_rule '{s}' is not fixed:Q, x_over_log_pow:A or x_pow_gamma_over_log_pow:A"
            ))),
        }
    }
}

/// How `t` follows from `X`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TRule {
    Fixed(f64),
    /// `X^(e - delta)`
    XPow(f64),
    /// `X^(e - delta)` with `e` the admissible exponent for the weight kind
    Admissible,
}

impl fmt::Display for TRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Fixed(t) => write!(f, "fixed:{t:?}"),
            Self::XPow(e) => write!(f, "x_pow:{e:?}"),
            Self::Admissible => write!(f, "admissible"),
        }
    }
}

impl FromStr for TRule {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        let (name, arg) = s.split_once(':').unwrap_or((s, ""));
        match name.trim() {
            "fixed" => Ok(Self::Fixed(parse_finite("t_rule", arg)?)),
            "x_pow" => Ok(Self::XPow(parse_finite("t_rule", arg)?)),
            "admissible" if arg.is_empty() => Ok(Self::Admissible),
            _ => Err(LabError::Config(format!("t_rule '{s}' is not fixed:t, x_pow:e or admissible"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            _ => Err(LabError::Config(format!("output_format '{s}' is not csv or json"))),
        }
    }
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Csv => "csv",
            Self::Json => "json",
        })
    }
}

/// Weight kinds selectable from a config.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KindName {
    ClassicExp,
    PsPlain,
    PsExp,
    RawLambda,
    LogpOnly,
}

impl KindName {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::ClassicExp => "classic_exp",
            Self::PsPlain => "ps_plain",
            Self::PsExp => "ps_exp",
            Self::RawLambda => "raw_lambda",
            Self::LogpOnly => "logp_only",
        }
    }

    pub fn uses_gamma(&self) -> bool {
        matches!(self, Self::PsPlain | Self::PsExp)
    }

    pub fn uses_phase(&self) -> bool {
        matches!(self, Self::ClassicExp | Self::PsExp | Self::LogpOnly)
    }
}

impl FromStr for KindName {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "classic_exp" => Ok(Self::ClassicExp),
            "ps_plain" => Ok(Self::PsPlain),
            "ps_exp" => Ok(Self::PsExp),
            "raw_lambda" => Ok(Self::RawLambda),
            "logp_only" => Ok(Self::LogpOnly),
            _ => Err(LabError::Config(format!(
                "kind '{s}' is not one of classic_exp, ps_plain, ps_exp, raw_lambda, logp_only"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub x_grid: Vec<f64>,
    /// `None` picks the default rule for the kind.
    pub q_rule: Option<QRule>,
    pub mu: f64,
    pub gamma: PsConfig,
    pub c: f64,
    pub t_rule: TRule,
    pub a: f64,
    pub delta: f64,
    pub seed: u64,
    /// 0 lets the thread pool choose.
    pub threads: usize,
    pub output_path: Option<PathBuf>,
    pub output_format: OutputFormat,
    pub kind: KindName,
    /// Explicit t values for `lemma3`.
    pub t_grid: Option<Vec<f64>>,
    /// Number of log-spaced t values for `lemma3` when no grid is given.
    pub t_count: usize,
    /// `lemma3` admits `|t| <= X^(1 - c - epsilon)`.
    pub epsilon: f64,
    pub trials: usize,
    /// Large sieve length `N`.
    pub n: u64,
    /// Large sieve modulus bound `Q`.
    pub q_max: u64,
    /// Large sieve offset `M`.
    pub m: i64,
    pub h_list: Vec<u32>,
    pub points: usize,
    pub row_budget_secs: f64,
    pub guard_epsilon: f64,
    pub high_precision_digits: u32,
    pub allow_out_of_range: bool,
    /// Fill the `wall_ms` column; makes reports run-dependent.
    pub timing: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            x_grid: vec![1e4],
            q_rule: None,
            mu: 0.5,
            gamma: PsConfig::rational(9, 10).expect("valid"),
            c: 1.5,
            t_rule: TRule::Fixed(0.0),
            a: 2.0,
            delta: 0.05,
            seed: 0,
            threads: 0,
            output_path: None,
            output_format: OutputFormat::Csv,
            kind: KindName::ClassicExp,
            t_grid: None,
            t_count: 5,
            epsilon: 0.05,
            trials: 100,
            n: 200,
            q_max: 200,
            m: 0,
            h_list: vec![1, 5, 20, 100],
            points: 10_000,
            row_budget_secs: 600.0,
            guard_epsilon: bdh_core::psprimes::DEFAULT_GUARD_EPSILON,
            high_precision_digits: bdh_core::psprimes::DEFAULT_HIGH_PRECISION_DIGITS,
            allow_out_of_range: false,
            timing: false,
        }
    }
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value.trim().parse().map_err(|_| LabError::Config(format!("{key}: cannot parse '{}'", value.trim())))
}

fn parse_finite(key: &str, value: &str) -> Result<f64> {
    let v: f64 = parse_num(key, value)?;
    if !v.is_finite() {
        return Err(LabError::Config(format!("{key}: '{value}' is not finite")));
    }
    Ok(v)
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(LabError::Config(format!("{key}: '{value}' is not a boolean"))),
    }
}

fn parse_list<T>(key: &str, value: &str, item: impl Fn(&str, &str) -> Result<T>) -> Result<Vec<T>> {
    let list =
        value.split(',').map(str::trim).filter(|s| !s.is_empty()).map(|s| item(key, s)).collect::<Result<Vec<_>>>()?;
    if list.is_empty() {
        return Err(LabError::Config(format!("{key}: empty list")));
    }
    Ok(list)
}

fn join<T: fmt::Debug>(items: &[T]) -> String {
    items.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(",")
}

/// `key = value` lines; `#` starts a comment, blank lines are skipped.
pub fn parse_entries(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| LabError::Config(format!("line {}: expected 'key = value', got '{raw}'", i + 1)))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

/// A single `key=value` override.
pub fn parse_override(text: &str) -> Result<(String, String)> {
    let (k, v) = text.split_once('=').ok_or_else(|| LabError::Config(format!("override '{text}' is not key=value")))?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}

impl ExperimentConfig {
    /// Defaults with `entries` applied in order.
    pub fn from_entries<K: AsRef<str>, V: AsRef<str>>(entries: &[(K, V)]) -> Result<Self> {
        let mut cfg = Self::default();
        let mut gamma_text = None;
        for (k, v) in entries {
            let (k, v) = (k.as_ref().trim(), v.as_ref().trim());
            match k {
                "x_grid" => cfg.x_grid = parse_list(k, v, parse_finite)?,
                "q_rule" => cfg.q_rule = if v == "auto" { None } else { Some(v.parse()?) },
                "mu" => cfg.mu = parse_finite(k, v)?,
                "gamma" => gamma_text = Some(v.to_string()),
                "c" => cfg.c = parse_finite(k, v)?,
                "t_rule" => cfg.t_rule = v.parse()?,
                "a" => cfg.a = parse_finite(k, v)?,
                "delta" => cfg.delta = parse_finite(k, v)?,
                "seed" => cfg.seed = parse_num(k, v)?,
                "threads" => cfg.threads = parse_num(k, v)?,
                "output_path" => cfg.output_path = Some(PathBuf::from(v)),
                "output_format" => cfg.output_format = v.parse()?,
                "kind" => cfg.kind = v.parse()?,
                "t_grid" => cfg.t_grid = if v == "auto" { None } else { Some(parse_list(k, v, parse_finite)?) },
                "t_count" => cfg.t_count = parse_num(k, v)?,
                "epsilon" => cfg.epsilon = parse_finite(k, v)?,
                "trials" => cfg.trials = parse_num(k, v)?,
                "n" => cfg.n = parse_num(k, v)?,
                "q_max" => cfg.q_max = parse_num(k, v)?,
                "m" => cfg.m = parse_num(k, v)?,
                "h_list" => cfg.h_list = parse_list(k, v, parse_num)?,
                "points" => cfg.points = parse_num(k, v)?,
                "row_budget_secs" => cfg.row_budget_secs = parse_finite(k, v)?,
                "guard_epsilon" => cfg.guard_epsilon = parse_finite(k, v)?,
                "high_precision_digits" => cfg.high_precision_digits = parse_num(k, v)?,
                "allow_out_of_range" => cfg.allow_out_of_range = parse_bool(k, v)?,
                "timing" => cfg.timing = parse_bool(k, v)?,
                _ => return Err(LabError::Config(format!("unknown key '{k}'"))),
            }
        }
        let gamma = match gamma_text {
            Some(text) => PsConfig::parse(&text).map_err(|e| LabError::Config(format!("gamma: {e}")))?,
            None => cfg.gamma.clone(),
        };
        cfg.gamma = gamma
            .with_guard_epsilon(cfg.guard_epsilon)
            .and_then(|g| g.with_high_precision_digits(cfg.high_precision_digits))
            .map_err(|e| LabError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(LabError::Config(m));
        if self.x_grid.iter().any(|&x| x < 2.0) {
            return fail("x_grid values must be at least 2".into());
        }
        if self.x_grid.windows(2).any(|w| w[0] >= w[1]) {
            return fail("x_grid must be strictly ascending".into());
        }
        if !(0.0..1.0).contains(&self.mu) {
            return fail(format!("mu = {} must lie in [0, 1)", self.mu));
        }
        if self.row_budget_secs <= 0.0 {
            return fail("row_budget_secs must be positive".into());
        }
        if self.a <= 0.0 {
            return fail(format!("a = {} must be positive", self.a));
        }
        if self.h_list.contains(&0) {
            return fail("h_list entries must be at least 1".into());
        }
        Ok(())
    }

    /// Every setting that affects report contents, in a fixed order.
    ///
    /// Threads, output location and format are left out so reports from
    /// different runs of the same experiment compare byte for byte.
    pub fn resolved_entries(&self) -> Vec<(&'static str, String)> {
        vec![
            ("x_grid", join(&self.x_grid)),
            ("q_rule", self.q_rule.map_or("auto".to_string(), |r| r.to_string())),
            ("mu", format!("{:?}", self.mu)),
            ("gamma", self.gamma.to_text()),
            ("c", format!("{:?}", self.c)),
            ("t_rule", self.t_rule.to_string()),
            ("a", format!("{:?}", self.a)),
            ("delta", format!("{:?}", self.delta)),
            ("seed", self.seed.to_string()),
            ("kind", self.kind.as_str().to_string()),
            ("t_grid", self.t_grid.as_deref().map_or("auto".to_string(), join)),
            ("t_count", self.t_count.to_string()),
            ("epsilon", format!("{:?}", self.epsilon)),
            ("trials", self.trials.to_string()),
            ("n", self.n.to_string()),
            ("q_max", self.q_max.to_string()),
            ("m", self.m.to_string()),
            ("h_list", join(&self.h_list)),
            ("points", self.points.to_string()),
            ("row_budget_secs", format!("{:?}", self.row_budget_secs)),
            ("guard_epsilon", format!("{:?}", self.guard_epsilon)),
            ("high_precision_digits", self.high_precision_digits.to_string()),
            ("allow_out_of_range", self.allow_out_of_range.to_string()),
        ]
    }
}
