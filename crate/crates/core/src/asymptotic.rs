//! Infinite-power structure of the allocation: which user survives as the
//! receiver on each subcarrier once both powers grow without bound, the rate
//! the subcarrier saturates to, and a finite-budget ceiling curve obtained by
//! freezing those limiting decisions.

use crate::analysis::{positive_quadratic_root, rank_by_source_gain, rate_improvement_feasible,
                      snatch_feasible, stationarity_quadratic};
use crate::channel::{ChannelRealization, ScenarioConfig};
use crate::rate::snr;
use crate::waterfill::secure_power;

use std::f64::consts::LN_2;

/// How a designated pair behaves when source power grows and jammer power
/// follows its rate optimum.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AsymptoticMode {
    /// Jamming never pays for this pair; it saturates at the jammer-free
    /// gain ratio.
    NoJammer,
    /// Improvement-feasible pair; the jammed ratio limit applies.
    Improvement,
    /// The receiver has the weaker direct gain but jams its way to a
    /// positive limit.
    Snatch,
    /// No amount of jamming makes the pair rate positive.
    Zero,
}

/// Limiting outcome of one subcarrier (or one designated pair).
#[derive(Clone, Copy, Debug)]
pub struct AsymptoticVerdict {
    pub main_user: usize,
    pub eavesdropper: usize,
    pub mode: AsymptoticMode,
    /// Saturation rate in bits per symbol; zero exactly in `Zero` mode.
    pub limit_rate: f64,
}

/// User whose jammed SNR ends on top as jammer power grows without bound on
/// subcarrier `n`: the argmax of `h^2 / g^2`. Exact ratio ties break to the
/// lowest index.
pub fn asymptotic_main_user(ch: &ChannelRealization, n: usize) -> usize {
    let mut best = 0;
    let mut best_ratio = ch.h2(0, n) / ch.g2(0, n);
    for m in 1..ch.num_users() {
        let ratio = ch.h2(m, n) / ch.g2(m, n);
        if ratio > best_ratio {
            best = m;
            best_ratio = ratio;
        }
    }
    best
}

/// Saturation rate of the designated pair `(m, e)` on subcarrier `n`.
///
/// With the stronger direct gain and no improvement margin the pair tops out
/// at `log2(h_m^2 / h_e^2)` without jamming; whenever jamming stays useful
/// (improvement or a feasible snatch) the limit is the cross ratio
/// `log2(g_e^2 h_m^2 / (g_m^2 h_e^2))`; an infeasible snatch pins the pair
/// at zero.
pub fn asymptotic_pair_rate(
    ch: &ChannelRealization,
    m: usize,
    e: usize,
    n: usize,
) -> AsymptoticVerdict {
    debug_assert_ne!(m, e);
    let (hm2, he2) = (ch.h2(m, n), ch.h2(e, n));
    let (gm2, ge2) = (ch.g2(m, n), ch.g2(e, n));
    let (mode, limit_rate) = if hm2 > he2 {
        if rate_improvement_feasible(ch, m, e, n) {
            (AsymptoticMode::Improvement, (ge2 * hm2 / (gm2 * he2)).log2())
        } else {
            (AsymptoticMode::NoJammer, (hm2 / he2).log2())
        }
    } else if snatch_feasible(ch, m, e, n) {
        (AsymptoticMode::Snatch, (ge2 * hm2 / (gm2 * he2)).log2())
    } else {
        (AsymptoticMode::Zero, 0.0)
    };
    AsymptoticVerdict { main_user: m, eavesdropper: e, mode, limit_rate }
}

/// Whole-subcarrier verdict: the better of two frozen modes. With the jammer,
/// the ratio winner of [`asymptotic_main_user`] saturates at whatever its
/// worst eavesdropper allows; without, the best direct-gain pair tops out at
/// the plain gain ratio. Whichever limit is higher fixes the mode.
///
/// The ratio winner is weakly snatch-feasible against every rival, so the
/// jammed floor is `Zero` only under exact ratio ties.
pub fn asymptotic_verdict(ch: &ChannelRealization, n: usize) -> AsymptoticVerdict {
    let m = asymptotic_main_user(ch, n);
    let mut worst: Option<AsymptoticVerdict> = None;
    for e in 0..ch.num_users() {
        if e == m {
            continue;
        }
        let v = asymptotic_pair_rate(ch, m, e, n);
        if worst.map_or(true, |w: AsymptoticVerdict| v.limit_rate < w.limit_rate) {
            worst = Some(v);
        }
    }
    let jammed = worst.expect("a verdict needs at least two users");
    let ranked = rank_by_source_gain(ch, n);
    let (b, r) = (ranked[0], ranked[1]);
    let plain = (ch.h2(b, n) / ch.h2(r, n)).log2();
    if plain > jammed.limit_rate {
        AsymptoticVerdict { main_user: b, eavesdropper: r, mode: AsymptoticMode::NoJammer, limit_rate: plain }
    } else {
        jammed
    }
}

/// Rate-optimal jammer power for the frozen pair at finite source power.
/// Zero whenever the stationarity root does not exist: below the source
/// threshold of an improvement pair, or in a mode that never jams.
fn envelope_pj(ch: &ChannelRealization, v: &AsymptoticVerdict, n: usize, ps: f64) -> f64 {
    match v.mode {
        AsymptoticMode::Improvement | AsymptoticMode::Snatch => {
            let (x, y, z) = stationarity_quadratic(ch, v.main_user, v.eavesdropper, n, ps);
            if z > 0.0 { positive_quadratic_root(x, y, z) } else { 0.0 }
        }
        _ => 0.0,
    }
}

/// Pair rate of the frozen `(main, eavesdropper)` choice at `(ps, pj)`.
fn pair_rate(ch: &ChannelRealization, m: usize, e: usize, n: usize, ps: f64, pj: f64) -> f64 {
    if ps <= 0.0 {
        return 0.0;
    }
    let s2 = ch.noise_variance;
    let own = snr(ps, ch.h(m, n), s2, pj, ch.g(m, n));
    let eve = snr(ps, ch.h(e, n), s2, pj, ch.g(e, n));
    ((1.0 + own) / (1.0 + eve)).log2().max(0.0)
}

/// Frozen-pair rate with the jammer riding its own optimum.
fn envelope_rate(ch: &ChannelRealization, v: &AsymptoticVerdict, n: usize, ps: f64) -> f64 {
    let pj = envelope_pj(ch, v, n, ps);
    pair_rate(ch, v.main_user, v.eavesdropper, n, ps, pj)
}

/// Derivative of the envelope in `ps`. The jammer block sits at its own
/// stationary point, so only the explicit source dependence contributes.
fn envelope_marginal(ch: &ChannelRealization, v: &AsymptoticVerdict, n: usize, ps: f64) -> f64 {
    let pj = envelope_pj(ch, v, n, ps);
    let s2 = ch.noise_variance;
    let a = ch.h2(v.main_user, n) / (s2 + pj * ch.g2(v.main_user, n));
    let b = ch.h2(v.eavesdropper, n) / (s2 + pj * ch.g2(v.eavesdropper, n));
    (a / (1.0 + ps * a) - b / (1.0 + ps * b)) / LN_2
}

/// Source power at which the weighted envelope marginal drops to `lambda`,
/// found by doubling and bisection; the marginal decays like `1/ps`, so the
/// bracket always closes.
fn envelope_demand(
    ch: &ChannelRealization,
    v: &AsymptoticVerdict,
    n: usize,
    weight: f64,
    lambda: f64,
) -> f64 {
    if weight * envelope_marginal(ch, v, n, 0.0) <= lambda {
        return 0.0;
    }
    let mut hi = 1.0;
    let mut guard = 0;
    while weight * envelope_marginal(ch, v, n, hi) > lambda {
        hi *= 2.0;
        guard += 1;
        if guard > 200 {
            break;
        }
    }
    let mut lo = 0.0;
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if weight * envelope_marginal(ch, v, n, mid) > lambda {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Per-subcarrier power demand at price `lambda`. Jammer-free pairs invert
/// their marginal in closed form; jamming pairs fall back to the numeric
/// envelope inversion.
fn demand(
    ch: &ChannelRealization,
    v: &AsymptoticVerdict,
    n: usize,
    weight: f64,
    lambda: f64,
) -> f64 {
    match v.mode {
        AsymptoticMode::NoJammer => {
            let s2 = ch.noise_variance;
            let eta = s2 / ch.h2(v.main_user, n);
            let nu = s2 / ch.h2(v.eavesdropper, n);
            secure_power(eta, nu, 4.0 * weight / (lambda * LN_2))
        }
        AsymptoticMode::Improvement | AsymptoticMode::Snatch => {
            envelope_demand(ch, v, n, weight, lambda)
        }
        AsymptoticMode::Zero => 0.0,
    }
}

fn upper_rate_at(
    ch: &ChannelRealization,
    cfg: &ScenarioConfig,
    verdicts: &[AsymptoticVerdict],
    budget: f64,
) -> f64 {
    let live: Vec<usize> = (0..verdicts.len())
        .filter(|&n| verdicts[n].limit_rate > 0.0)
        .collect();
    if live.is_empty() || budget <= 0.0 {
        return 0.0;
    }
    let weight = |n: usize| cfg.weights[verdicts[n].main_user];
    let total = |lambda: f64| -> f64 {
        live.iter()
            .map(|&n| demand(ch, &verdicts[n], n, weight(n), lambda))
            .sum()
    };
    let lambda_max = live
        .iter()
        .map(|&n| weight(n) * envelope_marginal(ch, &verdicts[n], n, 0.0))
        .fold(0.0f64, f64::max);
    if lambda_max <= 0.0 {
        return 0.0;
    }
    let mut hi = lambda_max;
    let mut lo = lambda_max;
    for _ in 0..600 {
        if total(lo) >= budget {
            break;
        }
        lo *= 0.5;
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if total(mid) >= budget {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // Spend from the cheap side, then stretch to the full budget; every
    // envelope is nondecreasing in ps, so stretching never hurts.
    let mut powers: Vec<f64> = live
        .iter()
        .map(|&n| demand(ch, &verdicts[n], n, weight(n), hi))
        .collect();
    let spent: f64 = powers.iter().sum();
    if spent > 0.0 {
        let scale = budget / spent;
        for p in &mut powers {
            *p *= scale;
        }
    }
    live.iter()
        .zip(&powers)
        .map(|(&n, &p)| weight(n) * envelope_rate(ch, &verdicts[n], n, p))
        .sum()
}

/// Sum-rate ceiling at each source budget in `ps_grid`: ownership, the
/// designated eavesdropper, and the jamming mode stay frozen at their
/// infinite-power verdicts while the budget is waterfilled across the
/// surviving subcarriers.
///
/// Generous budgets approach the sum of saturation rates. Small ones can dip
/// below what an adaptive scheme achieves, because the frozen decisions are
/// only optimal in the limit.
pub fn rate_upper_curve(
    ch: &ChannelRealization,
    cfg: &ScenarioConfig,
    ps_grid: &[f64],
) -> Vec<f64> {
    debug_assert!(ps_grid.windows(2).all(|w| w[0] <= w[1]), "grid must ascend");
    let verdicts: Vec<AsymptoticVerdict> = (0..ch.num_subcarriers())
        .map(|n| asymptotic_verdict(ch, n))
        .collect();
    ps_grid
        .iter()
        .map(|&budget| upper_rate_at(ch, cfg, &verdicts, budget))
        .collect()
}
