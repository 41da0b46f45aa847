//! Monte-Carlo driver: sweeps one scenario knob over a grid, runs a set of
//! schemes on common channel draws, and reduces the per-trial metrics to
//! plot-ready aggregate rows.

use std::fmt;
use std::panic::{self, AssertUnwindSafe};

use rayon::prelude::*;
use thiserror::Error;

use crate::channel::{generate_channels, ChannelRealization, ConfigError, ScenarioConfig};
use crate::maxmin::{run_maxmin, FairnessPolicy};
use crate::rate::SchemeOutcome;
use crate::schemes::{epa, jpa, jpaso, ospwj};

/// Allocation scheme selectable from the sweep driver.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SchemeKind {
    Jpa,
    Jpaso,
    Epa,
    Ospwj,
    Pfa,
    Oda,
    Pfaso,
    Odaso,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 8] = [
        SchemeKind::Jpa,
        SchemeKind::Jpaso,
        SchemeKind::Epa,
        SchemeKind::Ospwj,
        SchemeKind::Pfa,
        SchemeKind::Oda,
        SchemeKind::Pfaso,
        SchemeKind::Odaso,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::Jpa => "jpa",
            SchemeKind::Jpaso => "jpaso",
            SchemeKind::Epa => "epa",
            SchemeKind::Ospwj => "ospwj",
            SchemeKind::Pfa => "pfa",
            SchemeKind::Oda => "oda",
            SchemeKind::Pfaso => "pfaso",
            SchemeKind::Odaso => "odaso",
        }
    }

    pub fn parse(s: &str) -> Option<SchemeKind> {
        SchemeKind::ALL
            .into_iter()
            .find(|k| k.name() == s.trim().to_ascii_lowercase())
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Scenario knob swept over the grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepAxis {
    PsDb,
    PjDb,
    NumUsers,
    JammerPos,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::PsDb => "ps_db",
            SweepAxis::PjDb => "pj_db",
            SweepAxis::NumUsers => "num_users",
            SweepAxis::JammerPos => "jammer_pos",
        }
    }

    pub fn parse(s: &str) -> Option<SweepAxis> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ps_db" => Some(SweepAxis::PsDb),
            "pj_db" => Some(SweepAxis::PjDb),
            "num_users" => Some(SweepAxis::NumUsers),
            "jammer_pos" => Some(SweepAxis::JammerPos),
            _ => None,
        }
    }
}

/// One grid entry; positions only fit the jammer-position axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SweepValue {
    Scalar(f64),
    Position(f64, f64),
}

impl SweepValue {
    /// CSV rendering; positions join their coordinates with a semicolon so
    /// the comma structure of the row survives.
    pub fn label(&self) -> String {
        match self {
            SweepValue::Scalar(v) => format!("{v:.6}"),
            SweepValue::Position(x, y) => format!("{x:.6};{y:.6}"),
        }
    }

    pub fn parse(s: &str) -> Option<SweepValue> {
        if let Some((x, y)) = s.split_once(';') {
            Some(SweepValue::Position(x.trim().parse().ok()?, y.trim().parse().ok()?))
        } else {
            Some(SweepValue::Scalar(s.trim().parse().ok()?))
        }
    }
}

/// Full description of one sweep: the knob, its grid, the scenario the grid
/// perturbs, and what to run at every point.
#[derive(Clone, Debug)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub grid: Vec<SweepValue>,
    pub base: ScenarioConfig,
    pub trials: usize,
    pub schemes: Vec<SchemeKind>,
}

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("sweep grid is empty")]
    EmptyGrid,
    #[error("a sweep needs at least one trial")]
    NoTrials,
    #[error("no schemes selected")]
    NoSchemes,
    #[error("grid value {0} does not fit axis {1}")]
    ValueKind(String, &'static str),
    #[error("user counts must be integers of at least 2, got {0}")]
    BadUserCount(f64),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), SweepError> {
        if self.grid.is_empty() {
            return Err(SweepError::EmptyGrid);
        }
        if self.trials == 0 {
            return Err(SweepError::NoTrials);
        }
        if self.schemes.is_empty() {
            return Err(SweepError::NoSchemes);
        }
        for &value in &self.grid {
            match (self.axis, value) {
                (SweepAxis::JammerPos, SweepValue::Position(..)) => {}
                (SweepAxis::JammerPos, v) | (_, v @ SweepValue::Position(..)) => {
                    return Err(SweepError::ValueKind(v.label(), self.axis.name()));
                }
                (SweepAxis::NumUsers, SweepValue::Scalar(m)) => {
                    if m.fract().abs() > 1e-9 || m < 2.0 {
                        return Err(SweepError::BadUserCount(m));
                    }
                }
                _ => {}
            }
            self.scenario_at(value).validate()?;
        }
        Ok(())
    }

    /// Base scenario with the swept knob set to `value`. dB points convert
    /// as `P = sigma^2 * 10^(dB/10)`.
    pub fn scenario_at(&self, value: SweepValue) -> ScenarioConfig {
        let mut cfg = self.base.clone();
        match (self.axis, value) {
            (SweepAxis::PsDb, SweepValue::Scalar(db)) => cfg = cfg.with_source_db(db),
            (SweepAxis::PjDb, SweepValue::Scalar(db)) => cfg = cfg.with_jammer_db(db),
            (SweepAxis::NumUsers, SweepValue::Scalar(m)) => {
                cfg.num_users = m.round() as usize;
                if cfg.weights.len() != cfg.num_users {
                    cfg.weights = vec![1.0; cfg.num_users];
                }
            }
            (SweepAxis::JammerPos, SweepValue::Position(x, y)) => cfg.jammer_pos = (x, y),
            _ => unreachable!("axis and value kind mismatch survives validate"),
        }
        cfg
    }
}

/// One aggregated cell of a sweep: a grid value crossed with a scheme.
#[derive(Clone, Debug)]
pub struct AggregateRow {
    pub axis: SweepAxis,
    pub value: SweepValue,
    pub scheme: SchemeKind,
    pub mean_sum_rate: f64,
    pub mean_fairness: f64,
    pub mean_min_rate: f64,
    /// Trials that completed; a panicking scheme forfeits the trial and the
    /// means are taken over the survivors.
    pub trials: usize,
    /// Standard error of the mean sum rate; zero below two samples.
    pub stderr: f64,
}

/// Runs one scheme on one realization.
pub fn run_scheme(
    kind: SchemeKind,
    ch: &ChannelRealization,
    cfg: &ScenarioConfig,
) -> SchemeOutcome {
    match kind {
        SchemeKind::Jpa => jpa(ch, cfg),
        SchemeKind::Jpaso => jpaso(ch, cfg),
        SchemeKind::Epa => epa(ch, cfg),
        SchemeKind::Ospwj => ospwj(ch, cfg),
        SchemeKind::Pfa => run_maxmin(ch, cfg, FairnessPolicy::Pfa),
        SchemeKind::Oda => run_maxmin(ch, cfg, FairnessPolicy::Oda),
        SchemeKind::Pfaso => run_maxmin(ch, cfg, FairnessPolicy::Pfaso),
        SchemeKind::Odaso => run_maxmin(ch, cfg, FairnessPolicy::Odaso),
    }
}

#[derive(Clone, Copy, Debug)]
struct TrialMetrics {
    sum_rate: f64,
    fairness: f64,
    min_rate: f64,
}

/// Identity-free per-trial metrics: user rates are sorted before the spread
/// is read off, so permuting users never changes a row.
fn trial_metrics(outcome: &SchemeOutcome) -> TrialMetrics {
    let mut sorted = outcome.user_rates.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("rates are never NaN"));
    TrialMetrics {
        sum_rate: outcome.sum_weighted_rate,
        fairness: 1.0 - outcome.fairness_gap,
        min_rate: sorted.first().copied().unwrap_or(0.0),
    }
}

/// Fixed-order reduction of one grid point; `samples[trial][scheme]` holds
/// `None` where that scheme forfeited the trial.
fn reduce_point(
    axis: SweepAxis,
    value: SweepValue,
    schemes: &[SchemeKind],
    samples: &[Vec<Option<TrialMetrics>>],
) -> Vec<AggregateRow> {
    schemes
        .iter()
        .enumerate()
        .map(|(si, &scheme)| {
            let kept: Vec<TrialMetrics> =
                samples.iter().filter_map(|trial| trial[si]).collect();
            let n = kept.len();
            if n == 0 {
                return AggregateRow {
                    axis,
                    value,
                    scheme,
                    mean_sum_rate: 0.0,
                    mean_fairness: 0.0,
                    mean_min_rate: 0.0,
                    trials: 0,
                    stderr: 0.0,
                };
            }
            let inv = 1.0 / n as f64;
            let mean_sum_rate = kept.iter().map(|s| s.sum_rate).sum::<f64>() * inv;
            let mean_fairness = kept.iter().map(|s| s.fairness).sum::<f64>() * inv;
            let mean_min_rate = kept.iter().map(|s| s.min_rate).sum::<f64>() * inv;
            let stderr = if n > 1 {
                let var = kept
                    .iter()
                    .map(|s| (s.sum_rate - mean_sum_rate).powi(2))
                    .sum::<f64>()
                    / (n - 1) as f64;
                (var * inv).sqrt()
            } else {
                0.0
            };
            AggregateRow {
                axis,
                value,
                scheme,
                mean_sum_rate,
                mean_fairness,
                mean_min_rate,
                trials: n,
                stderr,
            }
        })
        .collect()
}

/// Runs the full sweep. Trials are independent (seed = master xor trial
/// index, shared across grid points so schemes face common draws) and run in
/// parallel; the reduction walks trials in index order, so a given spec and
/// seed always reproduce the same rows.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<AggregateRow>, SweepError> {
    spec.validate()?;
    let mut schemes = spec.schemes.clone();
    schemes.sort_by_key(|k| k.name());
    schemes.dedup();

    let mut rows = Vec::with_capacity(spec.grid.len() * schemes.len());
    for &value in &spec.grid {
        let cfg = spec.scenario_at(value);
        let samples: Vec<Vec<Option<TrialMetrics>>> = (0..spec.trials)
            .into_par_iter()
            .map(|trial| {
                let mut c = cfg.clone();
                c.rng_seed = spec.base.rng_seed ^ trial as u64;
                let ch = generate_channels(&c);
                schemes
                    .iter()
                    .map(|&kind| {
                        panic::catch_unwind(AssertUnwindSafe(|| {
                            trial_metrics(&run_scheme(kind, &ch, &c))
                        }))
                        .ok()
                    })
                    .collect()
            })
            .collect();
        rows.extend(reduce_point(spec.axis, value, &schemes, &samples));
    }
    Ok(rows)
}

pub const CSV_HEADER: &str =
    "sweep_var,value,scheme,mean_sum_rate,mean_fairness,mean_min_rate,trials,stderr";

/// Renders rows as CSV in their given order (the sweep already emits grid
/// order with schemes alphabetical inside a grid point).
pub fn emit_csv(rows: &[AggregateRow]) -> String {
    let mut out = String::with_capacity(80 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{:.6},{:.6},{:.6},{},{:.6}\n",
            r.axis.name(),
            r.value.label(),
            r.scheme,
            r.mean_sum_rate,
            r.mean_fairness,
            r.mean_min_rate,
            r.trials,
            r.stderr,
        ));
    }
    out
}

/// Parses text produced by [`emit_csv`] back into rows.
pub fn parse_csv(text: &str) -> Option<Vec<AggregateRow>> {
    let mut lines = text.lines();
    if lines.next()? != CSV_HEADER {
        return None;
    }
    let mut rows = Vec::new();
    for line in lines {
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 8 {
            return None;
        }
        rows.push(AggregateRow {
            axis: SweepAxis::parse(f[0])?,
            value: SweepValue::parse(f[1])?,
            scheme: SchemeKind::parse(f[2])?,
            mean_sum_rate: f[3].parse().ok()?,
            mean_fairness: f[4].parse().ok()?,
            mean_min_rate: f[5].parse().ok()?,
            trials: f[6].parse().ok()?,
            stderr: f[7].parse().ok()?,
        });
    }
    Some(rows)
}

/// One human-readable table over all rows, aligned for a terminal.
pub fn summary_table(rows: &[AggregateRow]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<12} {:>14} {:>8} {:>12} {:>10} {:>10} {:>7} {:>10}\n",
        "sweep_var", "value", "scheme", "sum_rate", "fairness", "min_rate", "trials", "stderr"
    ));
    for r in rows {
        out.push_str(&format!(
            "{:<12} {:>14} {:>8} {:>12.4} {:>10.4} {:>10.4} {:>7} {:>10.4}\n",
            r.axis.name(),
            r.value.label(),
            r.scheme.name(),
            r.mean_sum_rate,
            r.mean_fairness,
            r.mean_min_rate,
            r.trials,
            r.stderr,
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_spec() -> SweepSpec {
        let mut base = ScenarioConfig::new(3, 4);
        base.rng_seed = 41;
        SweepSpec {
            axis: SweepAxis::PjDb,
            grid: vec![SweepValue::Scalar(0.0), SweepValue::Scalar(6.0)],
            base,
            trials: 3,
            schemes: vec![SchemeKind::Jpa, SchemeKind::Epa],
        }
    }

    #[test]
    fn scheme_names_round_trip() {
        for kind in SchemeKind::ALL {
            assert_eq!(SchemeKind::parse(kind.name()), Some(kind));
        }
        assert_eq!(SchemeKind::parse(" JPA "), Some(SchemeKind::Jpa));
        assert!(SchemeKind::parse("nope").is_none());
    }

    #[test]
    fn db_points_scale_with_noise_power() {
        let mut spec = small_spec();
        spec.axis = SweepAxis::PsDb;
        spec.base.noise_variance = 2.0;
        let cfg = spec.scenario_at(SweepValue::Scalar(0.0));
        assert!((cfg.source_budget - 2.0).abs() < 1e-12);
        let cfg = spec.scenario_at(SweepValue::Scalar(10.0));
        assert!((cfg.source_budget - 20.0).abs() < 1e-12);
    }

    #[test]
    fn validation_rejects_mismatched_values() {
        let mut spec = small_spec();
        spec.grid = vec![SweepValue::Position(0.5, 0.5)];
        assert!(matches!(spec.validate(), Err(SweepError::ValueKind(..))));

        let mut spec = small_spec();
        spec.axis = SweepAxis::NumUsers;
        spec.grid = vec![SweepValue::Scalar(2.5)];
        assert!(matches!(spec.validate(), Err(SweepError::BadUserCount(_))));

        let mut spec = small_spec();
        spec.grid.clear();
        assert!(matches!(spec.validate(), Err(SweepError::EmptyGrid)));
    }

    #[test]
    fn identical_specs_emit_identical_csv() {
        let spec = small_spec();
        let a = emit_csv(&run_sweep(&spec).unwrap());
        let b = emit_csv(&run_sweep(&spec).unwrap());
        assert_eq!(a, b);
        assert_eq!(a.lines().count(), 1 + 2 * 2);
    }

    #[test]
    fn csv_round_trips_and_orders_schemes_alphabetically() {
        let rows = run_sweep(&small_spec()).unwrap();
        // epa sorts before jpa inside each grid point
        assert_eq!(rows[0].scheme, SchemeKind::Epa);
        assert_eq!(rows[1].scheme, SchemeKind::Jpa);
        assert_eq!(rows[2].scheme, SchemeKind::Epa);
        let text = emit_csv(&rows);
        let parsed = parse_csv(&text).expect("own output must parse");
        assert_eq!(emit_csv(&parsed), text);
    }

    #[test]
    fn empty_rows_emit_header_only() {
        let text = emit_csv(&[]);
        assert_eq!(text.lines().count(), 1);
        assert_eq!(text.lines().next(), Some(CSV_HEADER));
    }

    #[test]
    fn every_scheme_dispatches() {
        let mut spec = small_spec();
        spec.grid = vec![SweepValue::Scalar(3.0)];
        spec.trials = 2;
        spec.schemes = SchemeKind::ALL.to_vec();
        let rows = run_sweep(&spec).unwrap();
        assert_eq!(rows.len(), 8);
        for row in &rows {
            assert_eq!(row.trials, 2);
            assert!(row.mean_sum_rate >= 0.0);
            assert!(row.stderr >= 0.0);
            assert!((0.0..=1.0 + 1e-12).contains(&row.mean_fairness));
        }
    }

    #[test]
    fn forfeited_trials_shrink_the_count_not_the_sweep() {
        let metrics = |v: f64| TrialMetrics { sum_rate: v, fairness: 1.0, min_rate: v };
        let samples = vec![
            vec![Some(metrics(2.0)), None],
            vec![Some(metrics(4.0)), None],
            vec![None, None],
        ];
        let rows = reduce_point(
            SweepAxis::PjDb,
            SweepValue::Scalar(0.0),
            &[SchemeKind::Epa, SchemeKind::Jpa],
            &samples,
        );
        assert_eq!(rows[0].trials, 2);
        assert!((rows[0].mean_sum_rate - 3.0).abs() < 1e-12);
        assert!(rows[0].stderr > 0.0);
        assert_eq!(rows[1].trials, 0);
        assert_eq!(rows[1].mean_sum_rate, 0.0);
        assert_eq!(rows[1].stderr, 0.0);
    }

    #[test]
    fn user_axis_rebuilds_weights() {
        let mut spec = small_spec();
        spec.axis = SweepAxis::NumUsers;
        spec.grid = vec![SweepValue::Scalar(4.0), SweepValue::Scalar(6.0)];
        spec.trials = 2;
        spec.schemes = vec![SchemeKind::Jpa];
        let cfg = spec.scenario_at(SweepValue::Scalar(6.0));
        assert_eq!(cfg.num_users, 6);
        assert_eq!(cfg.weights.len(), 6);
        let rows = run_sweep(&spec).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| r.trials == 2));
    }
}
