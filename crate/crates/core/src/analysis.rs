//! Per-subcarrier analysis of what the jammer can achieve.
//!
//! For a designated main user `m` and eavesdropper `e` on one subcarrier,
//! this module answers four questions:
//!
//! * can jamming raise the secure rate at all (and from which source /
//!   jammer power onward),
//! * can jamming hand the subcarrier to a user who is not the strongest
//!   receiver ("snatching"), and at what minimum jammer power,
//! * which jammer power maximizes the pairwise secure rate, and
//! * inside which jammer power interval the assumed user ordering (main
//!   strongest, designated eavesdropper second) actually holds.
//!
//! The rate as a function of jammer power is quasi-concave: zero or one
//! interior maximum, found as the positive root of a quadratic. All
//! quantities here are closed-form; no iteration is involved.

use crate::channel::ChannelRealization;
use thiserror::Error;

/// Whether a jammed subcarrier serves its strongest receiver (rate
/// improvement) or a weaker user that the jammer promotes (snatching).
/// The two differ in which side of the ordering constraints binds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JamRole {
    Improvement,
    Snatch,
}

/// Open interval of jammer powers, `lower < pj < upper`.
/// `upper` may be infinite when no ordering constraint caps the power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JammerBounds {
    pub lower: f64,
    pub upper: f64,
}

impl JammerBounds {
    pub fn is_feasible(&self) -> bool {
        self.lower < self.upper && self.upper > 0.0
    }

    /// Intersection with another interval.
    pub fn intersect(&self, other: &JammerBounds) -> JammerBounds {
        JammerBounds {
            lower: self.lower.max(other.lower),
            upper: self.upper.min(other.upper),
        }
    }

    /// Margin used when a power must sit strictly inside the interval.
    pub fn delta(&self) -> f64 {
        let scale = if self.upper.is_finite() {
            self.upper.max(1.0)
        } else {
            self.lower.max(1.0)
        };
        1e-6 * scale
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("jammer bound interval ({lower}, {upper}) too narrow for margin {delta}")]
    DegenerateInterval { lower: f64, upper: f64, delta: f64 },
}

/// True when jamming can raise `m`'s secure rate against eavesdropper `e`
/// on subcarrier `n`: the jammer must hit the eavesdropper harder than the
/// main user. Only meaningful when `m` is the stronger receiver.
pub fn rate_improvement_feasible(ch: &ChannelRealization, m: usize, e: usize, n: usize) -> bool {
    ch.g(e, n) > ch.g(m, n)
}

/// Minimum source power from which jamming starts to pay off for an
/// improvement-feasible `(m, e)` pair. Clamped at zero: below-threshold
/// channel geometries benefit at any source power.
pub fn ps_threshold(ch: &ChannelRealization, m: usize, e: usize, n: usize) -> f64 {
    let (hm2, he2) = (ch.h2(m, n), ch.h2(e, n));
    let (gm2, ge2) = (ch.g2(m, n), ch.g2(e, n));
    let s2 = ch.noise_variance;
    (s2 * (gm2 * hm2 - ge2 * he2) / ((ge2 - gm2) * hm2 * he2)).max(0.0)
}

/// Jammer power above which jamming stops paying off for an improvement
/// pair at source power `ps`. Positive only when `ps` clears
/// [`ps_threshold`].
pub fn pj_threshold_improve(ch: &ChannelRealization, m: usize, e: usize, n: usize, ps: f64) -> f64 {
    let (hm2, he2) = (ch.h2(m, n), ch.h2(e, n));
    let (gm2, ge2) = (ch.g2(m, n), ch.g2(e, n));
    let s2 = ch.noise_variance;
    let alpha = (ge2 - gm2) * hm2 * he2;
    let beta = ge2 * he2 - gm2 * hm2;
    (ps * alpha + s2 * beta) / (gm2 * ge2 * (hm2 - he2))
}

/// True when the jammer can flip subcarrier `n` from its strongest
/// receiver `e` to the weaker user `m`.
pub fn snatch_feasible(ch: &ChannelRealization, m: usize, e: usize, n: usize) -> bool {
    ch.g2(e, n) * ch.h2(m, n) > ch.g2(m, n) * ch.h2(e, n)
}

/// Minimum jammer power that makes a feasible snatch profitable (the
/// pairwise secure rate crosses zero there, independent of source power).
pub fn pj_threshold_snatch(ch: &ChannelRealization, m: usize, e: usize, n: usize) -> f64 {
    let (hm2, he2) = (ch.h2(m, n), ch.h2(e, n));
    let (gm2, ge2) = (ch.g2(m, n), ch.g2(e, n));
    ch.noise_variance * (he2 - hm2) / (ge2 * hm2 - gm2 * he2)
}

/// Coefficients of the stationarity quadratic `x p^2 + y p + z = 0` whose
/// positive root is the unconstrained rate-optimal jammer power.
pub(crate) fn stationarity_quadratic(
    ch: &ChannelRealization,
    m: usize,
    e: usize,
    n: usize,
    ps: f64,
) -> (f64, f64, f64) {
    let (hm2, he2) = (ch.h2(m, n), ch.h2(e, n));
    let (gm2, ge2) = (ch.g2(m, n), ch.g2(e, n));
    let s2 = ch.noise_variance;
    let x = gm2 * ge2 * (gm2 * he2 - ge2 * hm2);
    let y = 2.0 * s2 * gm2 * ge2 * (he2 - hm2);
    let z = s2 * ps * hm2 * he2 * (ge2 - gm2) + s2 * s2 * (ge2 * he2 - gm2 * hm2);
    (x, y, z)
}

/// Positive root of `x p^2 + y p + z = 0` via the numerically stable
/// split `q = -(y + sign(y) sqrt(disc)) / 2`, roots `q/x` and `z/q`.
///
/// # Panics
/// Panics if no positive root exists; callers gate on feasibility first,
/// which guarantees `x < 0 < z` and hence exactly one positive root.
pub(crate) fn positive_quadratic_root(x: f64, y: f64, z: f64) -> f64 {
    debug_assert!(x < 0.0 && z > 0.0, "root regime requires x < 0 < z");
    let disc = y * y - 4.0 * x * z;
    debug_assert!(disc >= 0.0);
    let sign = if y >= 0.0 { 1.0 } else { -1.0 };
    let q = -(y + sign * disc.sqrt()) / 2.0;
    let candidates = [q / x, z / q];
    for r in candidates {
        if r > 0.0 && r.is_finite() {
            return r;
        }
    }
    panic!("stationarity quadratic has no positive root (x={x}, y={y}, z={z})");
}

/// Jammer power that maximizes the pairwise secure rate of `(m, e)` on
/// subcarrier `n` at source power `ps`, ignoring ordering bounds and
/// budgets.
///
/// For an improvement pair this requires `ps` above [`ps_threshold`]; for a
/// feasible snatch pair it exists at any positive `ps`.
pub fn optimal_pj(ch: &ChannelRealization, m: usize, e: usize, n: usize, ps: f64) -> f64 {
    let (x, y, z) = stationarity_quadratic(ch, m, e, n, ps);
    positive_quadratic_root(x, y, z)
}

/// Jammer power interval on which the designated ordering survives: `m`
/// decodes strongest and `e` stays the strongest eavesdropper.
///
/// Preconditions on the designation: for [`JamRole::Improvement`], `m` is
/// the strongest receiver and `e` the second; for [`JamRole::Snatch`], `e`
/// is the strongest receiver being displaced. In the snatch case the
/// main-versus-eavesdropper constraint contributes exactly the snatch
/// threshold as lower bound; third users add their own caps or floors.
/// Returns `None` when the constraints admit no jammer power.
pub fn reorder_bounds(
    ch: &ChannelRealization,
    m: usize,
    e: usize,
    n: usize,
    _role: JamRole,
) -> Option<JammerBounds> {
    let s2 = ch.noise_variance;
    let mut bounds = JammerBounds { lower: 0.0, upper: f64::INFINITY };

    // Linear constraint a * pj > b; source power cancels out of every
    // SNR comparison, so the interval depends on the channel alone.
    let mut apply = |a: f64, b: f64| -> bool {
        if a > 0.0 {
            bounds.lower = bounds.lower.max(b / a);
            true
        } else if a < 0.0 {
            bounds.upper = bounds.upper.min(b / a);
            true
        } else {
            // Gain ratios tie: feasible only if the inequality holds for free.
            b < 0.0
        }
    };

    // Main user above the designated eavesdropper.
    let a_me = ch.h2(m, n) * ch.g2(e, n) - ch.h2(e, n) * ch.g2(m, n);
    let b_me = s2 * (ch.h2(e, n) - ch.h2(m, n));
    if !apply(a_me, b_me) {
        return None;
    }
    // Designated eavesdropper above every third user.
    for k in 0..ch.num_users() {
        if k == m || k == e {
            continue;
        }
        let a = ch.h2(e, n) * ch.g2(k, n) - ch.h2(k, n) * ch.g2(e, n);
        let b = s2 * (ch.h2(k, n) - ch.h2(e, n));
        if !apply(a, b) {
            return None;
        }
    }

    bounds.is_feasible().then_some(bounds)
}

/// Ordering bounds for an improvement pair combined with the profitability
/// cap at source power `ps`: above [`pj_threshold_improve`] jamming hurts
/// even if the ordering survives.
pub fn improvement_bounds(
    ch: &ChannelRealization,
    m: usize,
    e: usize,
    n: usize,
    ps: f64,
) -> Option<JammerBounds> {
    if !rate_improvement_feasible(ch, m, e, n) || ps <= ps_threshold(ch, m, e, n) {
        return None;
    }
    let reorder = reorder_bounds(ch, m, e, n, JamRole::Improvement)?;
    let capped = reorder.intersect(&JammerBounds {
        lower: 0.0,
        upper: pj_threshold_improve(ch, m, e, n, ps),
    });
    capped.is_feasible().then_some(capped)
}

/// Ordering bounds for a snatch pair. The snatch threshold enters through
/// the main-versus-eavesdropper constraint, so `bounds.lower` is at least
/// [`pj_threshold_snatch`].
pub fn snatch_bounds(ch: &ChannelRealization, m: usize, e: usize, n: usize) -> Option<JammerBounds> {
    if !snatch_feasible(ch, m, e, n) {
        return None;
    }
    reorder_bounds(ch, m, e, n, JamRole::Snatch)
}

/// Constrains a candidate jammer power to sit strictly inside `bounds`,
/// stepping `delta` off whichever bound it violates. Powers already inside
/// pass through unchanged, as does an exact zero against a zero lower
/// bound (the jammer simply stays off).
pub fn clamp_pj(p: f64, bounds: &JammerBounds, delta: f64) -> Result<f64, AnalysisError> {
    let lower_ok = bounds.lower + delta;
    let upper_ok = bounds.upper - delta;
    if lower_ok > upper_ok {
        return Err(AnalysisError::DegenerateInterval {
            lower: bounds.lower,
            upper: bounds.upper,
            delta,
        });
    }
    if p < bounds.lower || (p == bounds.lower && p > 0.0) {
        Ok(lower_ok)
    } else if p > upper_ok {
        Ok(upper_ok)
    } else {
        Ok(p)
    }
}

/// Snatch opportunity of one user on one subcarrier.
#[derive(Debug, Clone, PartialEq)]
pub struct SnatchOption {
    pub user: usize,
    /// Minimum profitable jammer power.
    pub threshold: f64,
    /// Rate-optimal jammer power at the analyzed source power.
    pub pj_opt: f64,
    /// Ordering interval; `None` when third users block the snatch.
    pub bounds: Option<JammerBounds>,
}

/// Full jammer picture of one subcarrier at a given per-subcarrier source
/// power: the improvement outlook for its strongest receiver, and every
/// feasible snatch by a weaker user.
#[derive(Debug, Clone, PartialEq)]
pub struct JammerAnalysisResult {
    pub subcarrier: usize,
    /// Strongest receiver (the owner under best-gain allocation).
    pub main_user: usize,
    /// Second-strongest receiver.
    pub eavesdropper: usize,
    /// Jamming can improve the owner's rate for some source power.
    pub improvable: bool,
    pub ps_threshold: f64,
    /// Profitability cap at the analyzed source power, when improvable and
    /// the source power clears its threshold.
    pub pj_threshold_improve: Option<f64>,
    /// Rate-optimal jammer power under the same conditions.
    pub pj_opt: Option<f64>,
    /// Ordering interval combined with the profitability cap.
    pub bounds: Option<JammerBounds>,
    pub snatch_options: Vec<SnatchOption>,
}

/// Runs the full analysis for subcarrier `n` at source power `ps`.
///
/// # Panics
/// Panics if the channel has fewer than two users.
pub fn analyze_subcarrier(ch: &ChannelRealization, n: usize, ps: f64) -> JammerAnalysisResult {
    let ranked = rank_by_source_gain(ch, n);
    let (main_user, eavesdropper) = (ranked[0], ranked[1]);
    let improvable = rate_improvement_feasible(ch, main_user, eavesdropper, n);
    let ps_th = if improvable {
        ps_threshold(ch, main_user, eavesdropper, n)
    } else {
        f64::INFINITY
    };
    let active = improvable && ps > ps_th;
    let pj_th = active.then(|| pj_threshold_improve(ch, main_user, eavesdropper, n, ps));
    let pj_opt = active.then(|| optimal_pj(ch, main_user, eavesdropper, n, ps));
    let bounds = active
        .then(|| improvement_bounds(ch, main_user, eavesdropper, n, ps))
        .flatten();

    let mut snatch_options = Vec::new();
    for m in 0..ch.num_users() {
        if m == main_user || !snatch_feasible(ch, m, main_user, n) {
            continue;
        }
        snatch_options.push(SnatchOption {
            user: m,
            threshold: pj_threshold_snatch(ch, m, main_user, n),
            pj_opt: optimal_pj(ch, m, main_user, n, ps),
            bounds: snatch_bounds(ch, m, main_user, n),
        });
    }

    JammerAnalysisResult {
        subcarrier: n,
        main_user,
        eavesdropper,
        improvable,
        ps_threshold: ps_th,
        pj_threshold_improve: pj_th,
        pj_opt,
        bounds,
        snatch_options,
    }
}

/// Users sorted by descending source gain on subcarrier `n`, ties toward
/// the lower index.
pub fn rank_by_source_gain(ch: &ChannelRealization, n: usize) -> Vec<usize> {
    let mut users: Vec<usize> = (0..ch.num_users()).collect();
    users.sort_by(|&a, &b| {
        ch.h(b, n).partial_cmp(&ch.h(a, n)).unwrap().then(a.cmp(&b))
    });
    users
}
