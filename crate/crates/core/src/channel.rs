//! Scenario geometry and channel realizations.
//!
//! A scenario is a single-cell OFDMA downlink: one source, one friendly
//! jammer, and `M` users placed in a rectangular region. Every node sees
//! every subcarrier through an independent Rayleigh-faded link whose
//! amplitude is scaled by distance-based path loss. Users double as
//! eavesdroppers for each other, so both the source-to-user gains `h` and
//! the jammer-to-user gains `g` matter for the secrecy analysis downstream.
//!
//! Channel matrices can also be loaded from a small text fixture format so
//! that known gain tables can be replayed exactly; see [`load_channels`].

use rand::SeedableRng;
use rand_chacha::ChaChaRng;
use rand_distr::{Distribution, Exp1, Uniform};
use std::fmt::Write as _;
use thiserror::Error;

/// Axis-aligned rectangle, used for the user drop region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub const UNIT_SQUARE: Rect = Rect { x0: 0.0, y0: 0.0, x1: 1.0, y1: 1.0 };
}

/// Full description of a simulation scenario.
///
/// Powers are linear (same unit as the noise variance); dB operating points
/// are converted by [`ScenarioConfig::db_to_linear`] before they land here.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub num_users: usize,
    pub num_subcarriers: usize,
    pub source_pos: (f64, f64),
    pub jammer_pos: (f64, f64),
    pub user_region: Rect,
    pub path_loss_exponent: f64,
    pub noise_variance: f64,
    /// Total source power budget.
    pub source_budget: f64,
    /// Total jammer power budget.
    pub jammer_budget: f64,
    /// Per-user rate weights, one entry per user.
    pub weights: Vec<f64>,
    pub rng_seed: u64,
}

impl ScenarioConfig {
    /// Scenario with the default geometry: source at the origin, jammer at
    /// the center of the unit-square user region, path-loss exponent 3 and
    /// unit noise power.
    pub fn new(num_users: usize, num_subcarriers: usize) -> Self {
        ScenarioConfig {
            num_users,
            num_subcarriers,
            source_pos: (0.0, 0.0),
            jammer_pos: (0.5, 0.5),
            user_region: Rect::UNIT_SQUARE,
            path_loss_exponent: 3.0,
            noise_variance: 1.0,
            source_budget: 10.0,
            jammer_budget: 10.0,
            weights: vec![1.0; num_users],
            rng_seed: 0,
        }
    }

    /// Converts a power given in dB over the noise floor to linear units.
    pub fn db_to_linear(&self, db: f64) -> f64 {
        self.noise_variance * 10f64.powf(db / 10.0)
    }

    /// Sets the source budget from a dB operating point.
    pub fn with_source_db(mut self, db: f64) -> Self {
        self.source_budget = self.db_to_linear(db);
        self
    }

    /// Sets the jammer budget from a dB operating point.
    pub fn with_jammer_db(mut self, db: f64) -> Self {
        self.jammer_budget = self.db_to_linear(db);
        self
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.num_users < 2 {
            return Err(ConfigError::TooFewUsers(self.num_users));
        }
        if self.num_subcarriers == 0 {
            return Err(ConfigError::NoSubcarriers);
        }
        if !(self.noise_variance > 0.0) {
            return Err(ConfigError::BadNoise(self.noise_variance));
        }
        if !(self.source_budget >= 0.0) || !(self.jammer_budget >= 0.0) {
            return Err(ConfigError::NegativeBudget);
        }
        if self.weights.len() != self.num_users {
            return Err(ConfigError::WeightCount {
                expected: self.num_users,
                got: self.weights.len(),
            });
        }
        if self.weights.iter().any(|w| !(*w > 0.0)) {
            return Err(ConfigError::NonPositiveWeight);
        }
        if !(self.path_loss_exponent >= 0.0) {
            return Err(ConfigError::BadPathLoss(self.path_loss_exponent));
        }
        if self.user_region.x1 <= self.user_region.x0 || self.user_region.y1 <= self.user_region.y0 {
            return Err(ConfigError::EmptyRegion);
        }
        Ok(())
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("need at least 2 users, got {0}")]
    TooFewUsers(usize),
    #[error("need at least 1 subcarrier")]
    NoSubcarriers,
    #[error("noise variance must be positive, got {0}")]
    BadNoise(f64),
    #[error("power budgets must be non-negative")]
    NegativeBudget,
    #[error("expected {expected} weights, got {got}")]
    WeightCount { expected: usize, got: usize },
    #[error("user weights must be positive")]
    NonPositiveWeight,
    #[error("path-loss exponent must be non-negative, got {0}")]
    BadPathLoss(f64),
    #[error("user region is empty")]
    EmptyRegion,
}

/// Dense users-by-subcarriers matrix of channel gain magnitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct GainMatrix {
    users: usize,
    subcarriers: usize,
    data: Vec<f64>,
}

impl GainMatrix {
    pub fn from_fn(users: usize, subcarriers: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(users * subcarriers);
        for m in 0..users {
            for n in 0..subcarriers {
                data.push(f(m, n));
            }
        }
        GainMatrix { users, subcarriers, data }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        let users = rows.len();
        let subcarriers = rows.first().map_or(0, Vec::len);
        assert!(
            rows.iter().all(|r| r.len() == subcarriers),
            "all rows must have equal length"
        );
        let data = rows.into_iter().flatten().collect();
        GainMatrix { users, subcarriers, data }
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn subcarriers(&self) -> usize {
        self.subcarriers
    }

    /// Gain magnitude of user `m` on subcarrier `n`.
    #[inline]
    pub fn at(&self, m: usize, n: usize) -> f64 {
        self.data[m * self.subcarriers + n]
    }

    pub fn row(&self, m: usize) -> &[f64] {
        &self.data[m * self.subcarriers..(m + 1) * self.subcarriers]
    }
}

/// One draw of all channel magnitudes for a scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    /// Source-to-user gain magnitudes `|h|`.
    pub source_gain: GainMatrix,
    /// Jammer-to-user gain magnitudes `|g|`.
    pub jammer_gain: GainMatrix,
    pub noise_variance: f64,
}

impl ChannelRealization {
    pub fn num_users(&self) -> usize {
        self.source_gain.users()
    }

    pub fn num_subcarriers(&self) -> usize {
        self.source_gain.subcarriers()
    }

    /// `|h_{m,n}|`
    #[inline]
    pub fn h(&self, m: usize, n: usize) -> f64 {
        self.source_gain.at(m, n)
    }

    /// `|g_{m,n}|`
    #[inline]
    pub fn g(&self, m: usize, n: usize) -> f64 {
        self.jammer_gain.at(m, n)
    }

    /// `|h_{m,n}|^2`
    #[inline]
    pub fn h2(&self, m: usize, n: usize) -> f64 {
        let v = self.h(m, n);
        v * v
    }

    /// `|g_{m,n}|^2`
    #[inline]
    pub fn g2(&self, m: usize, n: usize) -> f64 {
        let v = self.g(m, n);
        v * v
    }
}

/// Minimum node separation; user positions closer than this to the source
/// or jammer are re-sampled to keep path loss finite.
const MIN_NODE_DISTANCE: f64 = 1e-3;

fn distance(a: (f64, f64), b: (f64, f64)) -> f64 {
    ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
}

/// Draws one channel realization for the scenario.
///
/// Users are placed uniformly in the configured region (re-sampled if they
/// land on top of the source or jammer), and each link gain is a Rayleigh
/// amplitude of unit mean square scaled by `d^(-exponent/2)` so that the
/// mean power gain follows the `d^-exponent` path-loss law.
///
/// Draw order is fixed (positions, then `h` row-major, then `g` row-major),
/// so a given seed always produces the same realization.
///
/// # Panics
/// Panics if `cfg` does not pass [`ScenarioConfig::validate`].
pub fn generate_channels(cfg: &ScenarioConfig) -> ChannelRealization {
    cfg.validate().expect("invalid scenario config");
    let mut rng = ChaChaRng::seed_from_u64(cfg.rng_seed);
    let ux = Uniform::new_inclusive(cfg.user_region.x0, cfg.user_region.x1);
    let uy = Uniform::new_inclusive(cfg.user_region.y0, cfg.user_region.y1);
    // Rayleigh amplitude of unit mean square, drawn as the square root of a
    // unit exponential (the fading power).
    let rayleigh = |rng: &mut ChaChaRng| -> f64 {
        let power: f64 = Exp1.sample(rng);
        power.sqrt()
    };

    let mut positions = Vec::with_capacity(cfg.num_users);
    for _ in 0..cfg.num_users {
        let pos = loop {
            let p = (ux.sample(&mut rng), uy.sample(&mut rng));
            if distance(p, cfg.source_pos) > MIN_NODE_DISTANCE
                && distance(p, cfg.jammer_pos) > MIN_NODE_DISTANCE
            {
                break p;
            }
        };
        positions.push(pos);
    }

    let half_exp = cfg.path_loss_exponent / 2.0;
    let faded = |anchor: (f64, f64), rng: &mut ChaChaRng| {
        let scales: Vec<f64> = positions
            .iter()
            .map(|&p| distance(p, anchor).powf(-half_exp))
            .collect();
        GainMatrix::from_fn(cfg.num_users, cfg.num_subcarriers, |m, _| {
            scales[m] * rayleigh(rng)
        })
    };
    let source_gain = faded(cfg.source_pos, &mut rng);
    let jammer_gain = faded(cfg.jammer_pos, &mut rng);

    ChannelRealization { source_gain, jammer_gain, noise_variance: cfg.noise_variance }
}

/// Errors from [`load_channels`]. Rows and columns are 1-based in messages.
#[derive(Debug, Error, PartialEq)]
pub enum FixtureError {
    #[error("fixture is empty")]
    Empty,
    #[error("first line must be a '# users subcarriers noise' header")]
    MissingHeader,
    #[error("bad header: {0}")]
    BadHeader(String),
    #[error("{block} gains, row {row}: expected {expected} entries, got {got}")]
    RaggedRow { block: &'static str, row: usize, expected: usize, got: usize },
    #[error("{block} gains, row {row}, column {col}: cannot parse '{token}'")]
    BadNumber { block: &'static str, row: usize, col: usize, token: String },
    #[error("{block} gains, row {row}, column {col}: gain must be positive, got {value}")]
    NonPositive { block: &'static str, row: usize, col: usize, value: f64 },
    #[error("{block} gains: expected {expected} rows, got {got}")]
    MissingRows { block: &'static str, expected: usize, got: usize },
    #[error("unexpected extra content after the jammer gain block")]
    TrailingContent,
}

/// Parses a channel fixture.
///
/// Format: a header line `# M N sigma2`, then `M` whitespace-separated rows
/// of `N` source gains, a blank line, and `M` rows of `N` jammer gains.
pub fn load_channels(text: &str) -> Result<ChannelRealization, FixtureError> {
    let mut lines = text.lines().map(str::trim);
    let header = loop {
        match lines.next() {
            None => return Err(FixtureError::Empty),
            Some("") => continue,
            Some(l) => break l,
        }
    };
    let Some(rest) = header.strip_prefix('#') else {
        return Err(FixtureError::MissingHeader);
    };
    let fields: Vec<&str> = rest.split_whitespace().collect();
    if fields.len() != 3 {
        return Err(FixtureError::BadHeader(format!(
            "expected 'users subcarriers noise', got '{}'",
            rest.trim()
        )));
    }
    let users: usize = fields[0]
        .parse()
        .map_err(|_| FixtureError::BadHeader(format!("bad user count '{}'", fields[0])))?;
    let subcarriers: usize = fields[1]
        .parse()
        .map_err(|_| FixtureError::BadHeader(format!("bad subcarrier count '{}'", fields[1])))?;
    let noise: f64 = fields[2]
        .parse()
        .map_err(|_| FixtureError::BadHeader(format!("bad noise variance '{}'", fields[2])))?;
    if users < 2 || subcarriers == 0 || !(noise > 0.0) {
        return Err(FixtureError::BadHeader(format!(
            "need >= 2 users, >= 1 subcarrier and positive noise, got '{}'",
            rest.trim()
        )));
    }

    let mut parse_block = |block: &'static str| -> Result<GainMatrix, FixtureError> {
        let mut rows: Vec<Vec<f64>> = Vec::with_capacity(users);
        while rows.len() < users {
            let line = match lines.next() {
                // Blank lines separate blocks; inside a block they cut a row short.
                Some("") if rows.is_empty() => continue,
                None | Some("") => {
                    return Err(FixtureError::MissingRows { block, expected: users, got: rows.len() })
                }
                Some(l) => l,
            };
            let row = rows.len() + 1;
            let mut parsed = Vec::with_capacity(subcarriers);
            for (i, token) in line.split_whitespace().enumerate() {
                let col = i + 1;
                let value: f64 = token.parse().map_err(|_| FixtureError::BadNumber {
                    block,
                    row,
                    col,
                    token: token.to_string(),
                })?;
                if !(value > 0.0) || !value.is_finite() {
                    return Err(FixtureError::NonPositive { block, row, col, value });
                }
                parsed.push(value);
            }
            if parsed.len() != subcarriers {
                return Err(FixtureError::RaggedRow {
                    block,
                    row,
                    expected: subcarriers,
                    got: parsed.len(),
                });
            }
            rows.push(parsed);
        }
        Ok(GainMatrix::from_rows(rows))
    };

    let source_gain = parse_block("source")?;
    let jammer_gain = parse_block("jammer")?;
    if lines.any(|l| !l.is_empty()) {
        return Err(FixtureError::TrailingContent);
    }
    Ok(ChannelRealization { source_gain, jammer_gain, noise_variance: noise })
}

/// Renders a realization in the fixture text format.
///
/// Gains are printed with `f64`'s shortest round-trip formatting, so
/// `load_channels(&emit_channels(ch))` reproduces `ch` exactly.
pub fn emit_channels(ch: &ChannelRealization) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# {} {} {}",
        ch.num_users(),
        ch.num_subcarriers(),
        ch.noise_variance
    );
    fn block(out: &mut String, gm: &GainMatrix) {
        for m in 0..gm.users() {
            let row: Vec<String> = gm.row(m).iter().map(|v| v.to_string()).collect();
            let _ = writeln!(out, "{}", row.join(" "));
        }
    }
    block(&mut out, &ch.source_gain);
    out.push('\n');
    block(&mut out, &ch.jammer_gain);
    out
}

/// Name accepted by fixture-loading entry points for the built-in example.
pub const BUILTIN_FIXTURE_NAME: &str = "paper3x5";

/// Built-in 3-user, 5-subcarrier gain table used throughout the tests and
/// by the `analyze` tooling. Unit noise power.
pub const BUILTIN_FIXTURE: &str = "\
# 3 5 1
1.1027 0.3856 0.6719 1.2101 0.7043
0.7423 1.0735 0.6558 1.0006 0.8943
0.7554 1.4772 0.2498 1.3572 3.5391

3.3624 6.0713 3.4125 3.0584 0.4987
8.1741 7.0607 4.1047 0.9860 1.6860
0.9028 2.0636 0.5605 3.0277 4.5346
";

/// Parsed form of [`BUILTIN_FIXTURE`].
pub fn builtin_fixture() -> ChannelRealization {
    load_channels(BUILTIN_FIXTURE).expect("built-in fixture parses")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_fixture_payload() {
        let ch = builtin_fixture();
        assert_eq!(ch.num_users(), 3);
        assert_eq!(ch.num_subcarriers(), 5);
        assert_eq!(ch.noise_variance, 1.0);
        assert_eq!(ch.h(0, 0), 1.1027);
        assert_eq!(ch.h(2, 4), 3.5391);
        assert_eq!(ch.g(0, 0), 3.3624);
        assert_eq!(ch.g(1, 3), 0.9860);
        assert_eq!(ch.g(2, 4), 4.5346);
    }

    #[test]
    fn fixture_round_trip() {
        let ch = builtin_fixture();
        let text = emit_channels(&ch);
        let back = load_channels(&text).unwrap();
        assert_eq!(back, ch);
    }

    #[test]
    fn generated_round_trip() {
        let cfg = ScenarioConfig::new(4, 6);
        let ch = generate_channels(&cfg);
        let back = load_channels(&emit_channels(&ch)).unwrap();
        assert_eq!(back, ch);
    }

    #[test]
    fn fixture_parse_errors_name_position() {
        let ragged = "# 2 3 1\n1 2 3\n1 2\n\n1 2 3\n1 2 3\n";
        assert_eq!(
            load_channels(ragged),
            Err(FixtureError::RaggedRow { block: "source", row: 2, expected: 3, got: 2 })
        );
        let bad = "# 2 2 1\n1 2\n1 x\n\n1 2\n1 2\n";
        assert_eq!(
            load_channels(bad),
            Err(FixtureError::BadNumber { block: "source", row: 2, col: 2, token: "x".into() })
        );
        let negative = "# 2 2 1\n1 2\n1 2\n\n1 -2\n1 2\n";
        assert!(matches!(
            load_channels(negative),
            Err(FixtureError::NonPositive { block: "jammer", row: 1, col: 2, .. })
        ));
        assert_eq!(load_channels(""), Err(FixtureError::Empty));
        assert_eq!(load_channels("1 2\n"), Err(FixtureError::MissingHeader));
    }

    #[test]
    fn config_validation() {
        assert!(ScenarioConfig::new(2, 1).validate().is_ok());
        assert_eq!(ScenarioConfig::new(1, 4).validate(), Err(ConfigError::TooFewUsers(1)));
        assert_eq!(ScenarioConfig::new(3, 0).validate(), Err(ConfigError::NoSubcarriers));
        let mut cfg = ScenarioConfig::new(3, 4);
        cfg.weights = vec![1.0; 2];
        assert_eq!(cfg.validate(), Err(ConfigError::WeightCount { expected: 3, got: 2 }));
        let mut cfg = ScenarioConfig::new(3, 4);
        cfg.noise_variance = 0.0;
        assert_eq!(cfg.validate(), Err(ConfigError::BadNoise(0.0)));
    }

    #[test]
    fn db_conversion() {
        let cfg = ScenarioConfig::new(2, 1);
        assert!((cfg.db_to_linear(0.0) - 1.0).abs() < 1e-12);
        assert!((cfg.db_to_linear(10.0) - 10.0).abs() < 1e-12);
        let mut scaled = cfg;
        scaled.noise_variance = 2.0;
        assert!((scaled.db_to_linear(3.0) - 2.0 * 10f64.powf(0.3)).abs() < 1e-12);
    }

    #[test]
    fn same_seed_same_channels() {
        let cfg = ScenarioConfig::new(5, 8);
        assert_eq!(generate_channels(&cfg), generate_channels(&cfg));
        let mut other = ScenarioConfig::new(5, 8);
        other.rng_seed = 1;
        assert_ne!(generate_channels(&cfg), generate_channels(&other));
    }

    /// With the user pinned at distance 1 from both anchors the gains are raw
    /// Rayleigh amplitudes; their empirical CDF must match 1 - exp(-r^2).
    #[test]
    fn fading_matches_unit_mean_square_rayleigh() {
        let mut cfg = ScenarioConfig::new(2, 50_000);
        cfg.source_pos = (0.0, 0.0);
        cfg.jammer_pos = (1.0, 1.0);
        cfg.user_region = Rect { x0: 1.0, y0: 0.0, x1: 1.0 + 1e-9, y1: 1e-9 };
        let ch = generate_channels(&cfg);

        let mut samples: Vec<f64> = Vec::with_capacity(2 * cfg.num_subcarriers);
        samples.extend(ch.source_gain.row(0));
        samples.extend(ch.jammer_gain.row(0));
        samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = samples.len() as f64;
        let mut ks: f64 = 0.0;
        for (i, r) in samples.iter().enumerate() {
            let model = 1.0 - (-r * r).exp();
            let below = i as f64 / n;
            let above = (i + 1) as f64 / n;
            ks = ks.max((model - below).abs()).max((model - above).abs());
        }
        assert!(ks < 0.02, "KS distance {ks} too large for unit mean-square Rayleigh");

        let mean_square: f64 = samples.iter().map(|r| r * r).sum::<f64>() / n;
        assert!(
            (mean_square - 1.0).abs() < 0.02,
            "mean square gain {mean_square} should be ~1 at unit distance"
        );
    }

    #[test]
    fn path_loss_scales_mean_power() {
        // User at distance 2 from the source: mean power gain 2^-3 = 0.125.
        let mut cfg = ScenarioConfig::new(2, 40_000);
        cfg.source_pos = (0.0, 0.0);
        cfg.jammer_pos = (0.0, 5.0);
        cfg.user_region = Rect { x0: 2.0, y0: 0.0, x1: 2.0 + 1e-9, y1: 1e-9 };
        let ch = generate_channels(&cfg);
        let mean_square: f64 =
            ch.source_gain.row(0).iter().map(|r| r * r).sum::<f64>() / cfg.num_subcarriers as f64;
        assert!(
            (mean_square - 0.125).abs() < 0.005,
            "mean power gain {mean_square} should be ~0.125 at distance 2"
        );
    }
}
