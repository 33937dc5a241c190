//! The five experiment commands. Each fills a [`Report`]; rows already
//! pushed stay in the report when a later row fails.

use std::time::{Duration, Instant};

use bdh_core::arith::{build_prime_table, LambdaTable, PrimeTable};
use bdh_core::characters::GroupCache;
use bdh_core::oscillatory::{
    main_term_integral, prime_exp_sum, saw_psi, vaaler_eval, vaaler_expansion, ExpWeightParams,
};
use bdh_core::psprimes::{ps_count_main_term, ps_indicator, ps_prime_count, PsConfig};
use bdh_core::variance::{
    large_sieve_check, normalized_ratio, normalizer, MainTerm, VarianceReport, WeightKind, WeightTable,
};
use bdh_core::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::config::{ExperimentConfig, KindName, QRule, TRule};
use crate::driver::{variance_totals, Deadline};
use crate::error::{LabError, Result};
use crate::report::{Cell, Report};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Variance,
    PsCount,
    Lemma3,
    LargeSieve,
    Vaaler,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Variance => "variance",
            Self::PsCount => "ps-count",
            Self::Lemma3 => "lemma3",
            Self::LargeSieve => "large-sieve",
            Self::Vaaler => "vaaler",
        }
    }

    pub fn columns(&self) -> &'static [&'static str] {
        match self {
            Self::Variance => &[
                "X",
                "Q",
                "mu",
                "kind",
                "gamma",
                "c",
                "t",
                "direct",
                "character",
                "ratio",
                "ratio_alt",
                "seed",
                "wall_ms",
            ],
            Self::PsCount => &["X", "gamma", "count", "main_term", "normalized_error"],
            Self::Lemma3 => &["X", "c", "t", "abs_residual", "rel_residual", "error_scale"],
            Self::LargeSieve => &["trial", "M", "N", "Q", "ratio"],
            Self::Vaaler => &[
                "H",
                "points",
                "max_error",
                "max_majorant",
                "min_majorant",
                "violations",
                "max_a_h_times_h",
                "max_b_times_h_plus_1",
            ],
        }
    }
}

/// Largest relative gap between the two variance forms a run accepts.
pub const CROSS_CHECK_TOLERANCE: f64 = 1e-8;

/// Largest admissible large sieve ratio.
pub const LARGE_SIEVE_TOLERANCE: f64 = 1e-9;

/// Slack in the Vaaler majorant comparison.
pub const VAALER_TOLERANCE: f64 = 1e-12;

pub fn empty_report(command: Command, cfg: &ExperimentConfig) -> Report {
    Report::new(command.name(), command.columns(), cfg.resolved_entries())
}

/// Runs `command`, appending rows to `report`.
///
/// A cross-check failure is reported after all rows are written.
pub fn run(command: Command, cfg: &ExperimentConfig, report: &mut Report) -> Result<()> {
    match command {
        Command::Variance => variance(cfg, report),
        Command::PsCount => ps_count(cfg, report),
        Command::Lemma3 => lemma3(cfg, report),
        Command::LargeSieve => large_sieve(cfg, report),
        Command::Vaaler => vaaler(cfg, report),
    }
}

fn budget(cfg: &ExperimentConfig) -> Deadline {
    Deadline::after(Duration::from_secs_f64(cfg.row_budget_secs))
}

fn tables(x_max: f64) -> Result<(PrimeTable, LambdaTable)> {
    let primes = build_prime_table(x_max.floor() as u64)?;
    let lambda = LambdaTable::from_primes(&primes);
    Ok((primes, lambda))
}

/// Reports warn when `γ` is at or below these (plain, weighted).
const PS_PLAIN_GAMMA_MIN: f64 = 2426.0 / 2817.0;
const PS_EXP_GAMMA_MIN: f64 = 11.0 / 12.0;

/// Exponent `e` of the largest admissible `|t| <= X^(e - delta)`.
fn admissible_t_exponent(kind: KindName, c: f64, gamma: f64) -> Option<f64> {
    match kind {
        KindName::ClassicExp => Some(2.0 / 3.0 - c),
        KindName::PsExp => Some((4.0 * gamma - 3.0 * c - 1.0) / 3.0),
        KindName::LogpOnly => Some(1.0 - c),
        KindName::PsPlain | KindName::RawLambda => None,
    }
}

fn default_q_rule(kind: KindName, a: f64) -> QRule {
    match kind {
        KindName::PsPlain => QRule::XPowGammaOverLogPow(2.0),
        KindName::PsExp => QRule::XPowGammaOverLogPow(a),
        _ => QRule::XOverLogPow(a),
    }
}

/// Admissible range `[lo, hi]` for `Q`.
fn q_range(kind: KindName, x: f64, gamma: f64, a: f64) -> (f64, f64) {
    let log = x.ln();
    match kind {
        KindName::PsPlain => (x.powf(gamma) / log.powi(2), x.powf(gamma)),
        KindName::PsExp => (x.powf(gamma) / log.powf(a), x.powf(gamma)),
        _ => (x / log.powf(a), x),
    }
}

struct VariancePlan {
    x: f64,
    q: u64,
    t: Option<f64>,
}

fn plan_variance(cfg: &ExperimentConfig, report: &mut Report) -> Result<Vec<VariancePlan>> {
    let gamma = cfg.gamma.gamma();
    let kind = cfg.kind;
    if kind.uses_phase() {
        bdh_core::oscillatory::validate_exponent(cfg.c)?;
    }
    match kind {
        KindName::PsPlain if gamma <= PS_PLAIN_GAMMA_MIN => {
            report.warn(format!("gamma = {} is at or below 2426/2817", cfg.gamma))
        }
        KindName::PsExp if gamma <= PS_EXP_GAMMA_MIN => {
            report.warn(format!("gamma = {} is at or below 11/12", cfg.gamma))
        }
        _ => {}
    }
    let rule = cfg.q_rule.unwrap_or_else(|| default_q_rule(kind, cfg.a));
    let mut plan = Vec::new();
    for &x in &cfg.x_grid {
        let q = rule.evaluate(x, gamma);
        let (lo, hi) = q_range(kind, x, gamma, cfg.a);
        if (q as f64) < lo || (q as f64) > hi {
            let msg = format!("Q = {q} lies outside [{lo:.6e}, {hi:.6e}] at X = {x:?}");
            if !cfg.allow_out_of_range {
                return Err(LabError::Config(format!("{msg}; pass --allow-out-of-range to run anyway")));
            }
            report.warn(msg);
        }
        let exponent = admissible_t_exponent(kind, cfg.c, gamma);
        let t = exponent.map(|e| match cfg.t_rule {
            TRule::Fixed(t) => t,
            TRule::XPow(p) => x.powf(p - cfg.delta),
            TRule::Admissible => x.powf(e - cfg.delta),
        });
        if let (Some(t), Some(e)) = (t, exponent) {
            let bound = x.powf(e - cfg.delta);
            if matches!(kind, KindName::ClassicExp | KindName::PsExp) && t.abs() > bound {
                report.warn(format!("|t| = {t:e} exceeds X^(e - delta) = {bound:e} at X = {x:?}"));
            }
        }
        plan.push(VariancePlan { x, q, t });
    }
    Ok(plan)
}

fn weight_kind(cfg: &ExperimentConfig, t: Option<f64>) -> WeightKind {
    let t = t.unwrap_or(0.0);
    let c = cfg.c;
    match cfg.kind {
        KindName::ClassicExp => WeightKind::ClassicExp { c, t },
        KindName::PsPlain => WeightKind::PsPlain { ps: cfg.gamma.clone() },
        KindName::PsExp => WeightKind::PsExp { ps: cfg.gamma.clone(), c, t },
        KindName::RawLambda => WeightKind::RawLambda,
        KindName::LogpOnly => WeightKind::LogpOnly { c, t },
    }
}

/// One row per `X`: both variance forms and the normalized ratios.
pub fn variance(cfg: &ExperimentConfig, report: &mut Report) -> Result<()> {
    let plan = plan_variance(cfg, report)?;
    let x_max = cfg.x_grid.last().copied().unwrap_or(2.0);
    let (primes, lambda) = tables(x_max)?;
    let mut failures = Vec::new();
    for p in plan {
        let start = Instant::now();
        let deadline = budget(cfg);
        let kind = weight_kind(cfg, p.t);
        let w = WeightTable::build(p.x, cfg.mu, kind.clone(), &primes, &lambda)?;
        let main = MainTerm::for_table(&w)?;
        let totals = variance_totals(&w, p.q, &main, &deadline)?;
        let mut row = VarianceReport {
            x: p.x,
            q_max: p.q,
            mu: cfg.mu,
            kind,
            main,
            direct_variance: totals.direct,
            character_variance: totals.character,
            normalized_ratio: 0.0,
            normalized_ratio_alt: None,
            per_q_breakdown: None,
            seed: cfg.seed,
            wall_time: start.elapsed(),
        };
        row.normalized_ratio = normalized_ratio(&row);
        row.normalized_ratio_alt = totals.direct_alt.map(|d| d / normalizer(&row.kind, row.x, row.q_max));
        if totals.max_gap > CROSS_CHECK_TOLERANCE {
            failures.push(format!("X = {:?}: relative gap {:e}", p.x, totals.max_gap));
        }
        report.push(vec![
            Cell::Float(row.x),
            row.q_max.into(),
            Cell::Float(row.mu),
            row.kind.name().into(),
            if cfg.kind.uses_gamma() { cfg.gamma.to_text().into() } else { Cell::Empty },
            if cfg.kind.uses_phase() { Cell::Float(cfg.c) } else { Cell::Empty },
            Cell::opt_float(p.t),
            row.direct_variance.into(),
            row.character_variance.into(),
            row.normalized_ratio.into(),
            Cell::opt_float(row.normalized_ratio_alt),
            row.seed.into(),
            if cfg.timing { Cell::Float(row.wall_time.as_secs_f64() * 1e3) } else { Cell::Empty },
        ]);
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(LabError::CrossCheck(format!("direct and character forms disagree: {}", failures.join("; "))))
    }
}

/// Primes `p <= x` with `ps_indicator(p) = 1`, testing every prime.
fn ps_prime_count_by_indicator(x: u64, cfg: &PsConfig, primes: &PrimeTable) -> u64 {
    primes.primes_in(0, x).iter().filter(|&&p| ps_indicator(u64::from(p), cfg) == 1).count() as u64
}

/// Piatetski-Shapiro prime counts against `X^γ / log X`.
pub fn ps_count(cfg: &ExperimentConfig, report: &mut Report) -> Result<()> {
    if let Some(&x) = cfg.x_grid.iter().find(|&&x| x < 3.0) {
        return Err(LabError::Config(format!("ps-count needs X >= 3, got {x:?}")));
    }
    let x_max = cfg.x_grid.last().copied().unwrap_or(3.0);
    let primes = build_prime_table(x_max.floor() as u64)?;
    let gamma = cfg.gamma.gamma();
    let mut failures = Vec::new();
    for &x in &cfg.x_grid {
        let deadline = budget(cfg);
        let n = x.floor() as u64;
        let count = ps_prime_count(n, &cfg.gamma, &primes)?;
        deadline.check(&format!("ps-count at X = {x:?}"))?;
        let by_indicator = ps_prime_count_by_indicator(n, &cfg.gamma, &primes);
        if count != by_indicator {
            failures.push(format!("X = {x:?}: generator {count}, indicator {by_indicator}"));
        }
        let main = ps_count_main_term(x, &cfg.gamma)?;
        let err = (count as f64 - main).abs() * x.ln().powi(2) / x.powf(gamma);
        report.push(vec![Cell::Float(x), cfg.gamma.to_text().into(), count.into(), main.into(), err.into()]);
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(LabError::CrossCheck(format!("prime counts disagree: {}", failures.join("; "))))
    }
}

/// The `t` values for one `X`: the configured grid or `t_count` values
/// log-spaced over four decades up to `X^(1 - c - epsilon)`.
fn lemma3_t_values(cfg: &ExperimentConfig, x: f64, report: &mut Report) -> Result<Vec<f64>> {
    let t_max = x.powf(1.0 - cfg.c - cfg.epsilon);
    match &cfg.t_grid {
        Some(grid) => {
            for &t in grid {
                if t.abs() > t_max {
                    let msg = format!("|t| = {t:e} exceeds X^(1 - c - epsilon) = {t_max:e} at X = {x:?}");
                    if !cfg.allow_out_of_range {
                        return Err(LabError::Config(format!("{msg}; pass --allow-out-of-range to run anyway")));
                    }
                    report.warn(msg);
                }
            }
            Ok(grid.clone())
        }
        None => {
            let k = cfg.t_count;
            if k == 0 {
                return Err(LabError::Config("t_count must be at least 1".into()));
            }
            Ok((0..k)
                .map(|j| {
                    let decades = if k == 1 { 0.0 } else { 4.0 * (k - 1 - j) as f64 / (k - 1) as f64 };
                    t_max * 10f64.powf(-decades)
                })
                .collect())
        }
    }
}

/// `Σ_{mu X < p <= X} e(t p^c) log p` against the integral.
pub fn lemma3(cfg: &ExperimentConfig, report: &mut Report) -> Result<()> {
    bdh_core::oscillatory::validate_exponent(cfg.c)?;
    let x_max = cfg.x_grid.last().copied().unwrap_or(2.0);
    let primes = build_prime_table(x_max.floor() as u64)?;
    for &x in &cfg.x_grid {
        let ts = lemma3_t_values(cfg, x, report)?;
        let deadline = budget(cfg);
        for t in ts {
            deadline.check(&format!("lemma3 at X = {x:?}"))?;
            let params = ExpWeightParams::new(cfg.c, t, cfg.mu, x)?;
            let residual = (prime_exp_sum(&params, &primes)? - main_term_integral(&params)?).norm();
            let scale = x / x.ln().powf(0.2).exp();
            report.push(vec![
                Cell::Float(x),
                Cell::Float(cfg.c),
                Cell::Float(t),
                residual.into(),
                (residual / x).into(),
                scale.into(),
            ]);
        }
    }
    Ok(())
}

/// Upper limit on `N` and `Q` for `large-sieve`.
pub const LARGE_SIEVE_MAX: u64 = 500;

/// Seeded complex Gaussian trials of the large sieve ratio, then the max.
pub fn large_sieve(cfg: &ExperimentConfig, report: &mut Report) -> Result<()> {
    let (n, q) = (cfg.n, cfg.q_max);
    if !(1..=LARGE_SIEVE_MAX).contains(&n) || !(1..=LARGE_SIEVE_MAX).contains(&q) {
        return Err(LabError::Config(format!(
            "large-sieve needs 1 <= N, Q <= {LARGE_SIEVE_MAX}, got N = {n}, Q = {q}"
        )));
    }
    if cfg.trials == 0 {
        return Err(LabError::Config("trials must be at least 1".into()));
    }
    let groups = GroupCache::up_to(q)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let deadline = budget(cfg);
    let mut max_ratio = 0.0f64;
    for trial in 0..cfg.trials {
        deadline.check("large-sieve trials")?;
        let coeffs: Vec<Complex64> = (0..n)
            .map(|_| {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
            })
            .collect();
        let ratio = large_sieve_check(cfg.m, n, q, &coeffs, &groups)?;
        max_ratio = max_ratio.max(ratio);
        report.push(vec![(trial as u64 + 1).into(), cfg.m.into(), n.into(), q.into(), ratio.into()]);
    }
    report.push(vec!["max".into(), cfg.m.into(), n.into(), q.into(), max_ratio.into()]);
    if max_ratio > 1.0 + LARGE_SIEVE_TOLERANCE {
        return Err(LabError::CrossCheck(format!("large sieve ratio {max_ratio} exceeds 1")));
    }
    Ok(())
}

/// Vaaler's approximation of the sawtooth on `points + 1` equally spaced
/// points of `[0, 1]`, both integers included.
pub fn vaaler(cfg: &ExperimentConfig, report: &mut Report) -> Result<()> {
    if cfg.points == 0 {
        return Err(LabError::Config("points must be at least 1".into()));
    }
    let mut failures = Vec::new();
    for &h_max in &cfg.h_list {
        let deadline = budget(cfg);
        let v = vaaler_expansion(h_max)?;
        let (mut max_error, mut max_maj, mut min_maj, mut violations) = (0.0f64, f64::MIN, f64::MAX, 0u64);
        for i in 0..=cfg.points {
            let x = i as f64 / cfg.points as f64;
            let (approx, majorant) = vaaler_eval(x, &v);
            let error = (saw_psi(x) - approx).abs();
            max_error = max_error.max(error);
            max_maj = max_maj.max(majorant);
            min_maj = min_maj.min(majorant);
            if error > majorant + VAALER_TOLERANCE {
                violations += 1;
            }
        }
        deadline.check(&format!("vaaler at H = {h_max}"))?;
        let hm = i64::from(h_max);
        let max_a = (1..=hm).map(|h| v.a(h).norm() * h as f64).fold(0.0, f64::max);
        let max_b = (0..=hm).map(|h| v.b(h) * (f64::from(h_max) + 1.0)).fold(0.0, f64::max);
        if violations > 0 || max_a > 1.0 || max_b > 1.0 {
            failures.push(format!("H = {h_max}: {violations} violations, |a(h)| h <= {max_a}, b(h)(H+1) <= {max_b}"));
        }
        report.push(vec![
            u64::from(h_max).into(),
            (cfg.points as u64 + 1).into(),
            max_error.into(),
            max_maj.into(),
            min_maj.into(),
            violations.into(),
            max_a.into(),
            max_b.into(),
        ]);
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(LabError::CrossCheck(failures.join("; ")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(entries: &[(&str, &str)]) -> ExperimentConfig {
        ExperimentConfig::from_entries(entries).unwrap()
    }

    fn run_report(command: Command, c: &ExperimentConfig) -> (Report, Result<()>) {
        let mut r = empty_report(command, c);
        let res = run(command, c, &mut r);
        (r, res)
    }

    #[test]
    fn variance_single_row_schema() {
        let c = cfg(&[("x_grid", "2000"), ("kind", "classic_exp")]);
        let (r, res) = run_report(Command::Variance, &c);
        res.unwrap();
        assert_eq!(r.rows.len(), 1);
        assert_eq!(r.columns.len(), 13);
        let q = r.cell(0, "Q").unwrap().as_f64().unwrap();
        assert_eq!(q, (2000f64 / 2000f64.ln().powi(2)).ceil());
        assert_eq!(r.cell(0, "wall_ms"), Some(&Cell::Empty));
        assert_eq!(r.cell(0, "ratio_alt"), Some(&Cell::Empty));
        assert!(r.cell(0, "ratio").unwrap().as_f64().unwrap() > 0.0);
    }

    #[test]
    fn ps_plain_reports_both_main_terms() {
        let c = cfg(&[("x_grid", "5000"), ("kind", "ps_plain"), ("gamma", "0.9")]);
        let (r, res) = run_report(Command::Variance, &c);
        res.unwrap();
        assert!(r.cell(0, "ratio_alt").unwrap().as_f64().is_some());
        assert_eq!(r.cell(0, "gamma"), Some(&Cell::Text("9/10".into())));
        assert_eq!(r.cell(0, "t"), Some(&Cell::Empty));
    }

    #[test]
    fn q_outside_range_needs_override() {
        let c = cfg(&[("x_grid", "3000"), ("q_rule", "fixed:5")]);
        let (_, res) = run_report(Command::Variance, &c);
        assert_eq!(res.unwrap_err().exit_code(), 2);
        let c = cfg(&[("x_grid", "3000"), ("q_rule", "fixed:5"), ("allow_out_of_range", "true")]);
        let (r, res) = run_report(Command::Variance, &c);
        res.unwrap();
        assert_eq!(r.warnings.len(), 1);
        assert!(r.warnings[0].contains("Q = 5"));
    }

    #[test]
    fn ps_count_cross_checked() {
        let c = cfg(&[("x_grid", "1000"), ("gamma", "1/2")]);
        let (r, res) = run_report(Command::PsCount, &c);
        res.unwrap();
        // primes that are perfect squares: none
        assert_eq!(r.cell(0, "count"), Some(&Cell::Int(0)));
        let c = cfg(&[("x_grid", "2.5")]);
        assert_eq!(run_report(Command::PsCount, &c).1.unwrap_err().exit_code(), 2);
        let c = cfg(&[("x_grid", "1000"), ("gamma", "2426/2817")]);
        let (r, res) = run_report(Command::PsCount, &c);
        res.unwrap();
        assert_eq!(r.cell(0, "gamma"), Some(&Cell::Text("2426/2817".into())));
    }

    #[test]
    fn lemma3_zero_frequency_is_chebyshev_error() {
        let c = cfg(&[("x_grid", "10000"), ("t_grid", "0")]);
        let (r, res) = run_report(Command::Lemma3, &c);
        res.unwrap();
        let primes = build_prime_table(10_000).unwrap();
        let theta: f64 = primes.primes_in(5000, 10_000).iter().map(|&p| f64::from(p).ln()).sum();
        let want = (theta - 5000.0).abs();
        let got = r.cell(0, "abs_residual").unwrap().as_f64().unwrap();
        assert!((got - want).abs() < 1e-8);
        let c = cfg(&[("x_grid", "10000"), ("t_grid", "1")]);
        assert_eq!(run_report(Command::Lemma3, &c).1.unwrap_err().exit_code(), 2);
    }

    #[test]
    fn lemma3_default_grid() {
        let c = cfg(&[("x_grid", "20000")]);
        let (r, res) = run_report(Command::Lemma3, &c);
        res.unwrap();
        assert_eq!(r.rows.len(), 5);
        let t_max = 20000f64.powf(1.0 - 1.5 - 0.05);
        let last = r.cell(4, "t").unwrap().as_f64().unwrap();
        assert!((last - t_max).abs() <= 1e-15 * t_max);
    }

    #[test]
    fn large_sieve_trivial_trial() {
        let c = cfg(&[("trials", "1"), ("n", "1"), ("q_max", "1")]);
        let (r, res) = run_report(Command::LargeSieve, &c);
        res.unwrap();
        assert_eq!(r.rows.len(), 2);
        assert!((r.cell(0, "ratio").unwrap().as_f64().unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(r.cell(1, "trial"), Some(&Cell::Text("max".into())));
        let c = cfg(&[("n", "501")]);
        assert_eq!(run_report(Command::LargeSieve, &c).1.unwrap_err().exit_code(), 2);
    }

    #[test]
    fn vaaler_rows() {
        let c = cfg(&[("h_list", "1,7"), ("points", "1000")]);
        let (r, res) = run_report(Command::Vaaler, &c);
        res.unwrap();
        assert!((r.cell(0, "max_majorant").unwrap().as_f64().unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(r.cell(1, "violations"), Some(&Cell::Int(0)));
    }
}
