//! Jammer power allocation across jammed subcarriers.
//!
//! With source powers held fixed, the budgeted jammer problem prices each
//! subcarrier's power at a common multiplier `mu`. The stationarity
//! condition for one subcarrier reduces to a polynomial identity: a quartic
//! in the jammer power (the product of the four SNR denominators) scaled by
//! `mu ln2 / w` on one side, and the quadratic numerator of the rate
//! derivative times the source power on the other. The root is bracketed
//! inside `(0, pj_star)` where `pj_star` is the bound-clamped unconstrained
//! optimum, and found by bisection; raising `mu` shrinks every root, so the
//! budget residual is monotone and the price search is a one-dimensional
//! root find. A subgradient warm-up locates the bracket, bisection finishes
//! it.
//!
//! The closed-form variant used by the sequential schemes drops the `1+` in
//! each log argument, which decouples the jammer from the source power and
//! admits the same water-filling closed form as the source problem.

use crate::analysis::{clamp_pj, JammerBounds};
use crate::channel::ChannelRealization;
use crate::waterfill::secure_power;

/// Coefficients of the stationarity identity at one subcarrier:
/// `(mu ln2 / w) * (a p^4 + b p^3 + c p^2 + d p + e)` versus
/// `ps * (quad_c p^2 + quad_d p + quad_e)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuarticCoeffs {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
    pub quad_c: f64,
    pub quad_d: f64,
    pub quad_e: f64,
}

impl QuarticCoeffs {
    /// Builds the coefficients for pair `(m, e)` on subcarrier `n` at
    /// source power `ps`.
    pub fn build(ch: &ChannelRealization, m: usize, e: usize, n: usize, ps: f64) -> Self {
        let (hm2, he2) = (ch.h2(m, n), ch.h2(e, n));
        let (gm2, ge2) = (ch.g2(m, n), ch.g2(e, n));
        let s2 = ch.noise_variance;
        let s4 = s2 * s2;
        let gg = ge2 * gm2;

        let a = gg * gg;
        let b = gg * (2.0 * s2 * (ge2 + gm2) + ps * (gm2 * he2 + ge2 * hm2));
        let c = ps * ps * gg * he2 * hm2
            + ps * s2 * (gm2 * he2 * (gm2 + 2.0 * ge2) + ge2 * hm2 * (ge2 + 2.0 * gm2))
            + s4 * (ge2 * ge2 + gm2 * gm2 + 4.0 * gg);
        let d = s2 * (ge2 + gm2) * (2.0 * s4 + ps * s2 * (hm2 + he2) + ps * ps * hm2 * he2)
            + ps * s4 * (gm2 * he2 + ge2 * hm2);
        let e_coef = s4 * (s2 + ps * he2) * (s2 + ps * hm2);

        let quad_c = gg * (gm2 * he2 - ge2 * hm2);
        let quad_d = 2.0 * gg * s2 * (he2 - hm2);
        let quad_e = s4 * (ge2 * he2 - gm2 * hm2) + s2 * ps * he2 * hm2 * (ge2 - gm2);

        QuarticCoeffs { a, b, c, d, e: e_coef, quad_c, quad_d, quad_e }
    }

    #[inline]
    pub fn quartic_at(&self, p: f64) -> f64 {
        (((self.a * p + self.b) * p + self.c) * p + self.d) * p + self.e
    }

    #[inline]
    pub fn quadratic_at(&self, p: f64) -> f64 {
        (self.quad_c * p + self.quad_d) * p + self.quad_e
    }

    /// Signed stationarity residual; negative where the priced-out marginal
    /// utility still exceeds `mu`.
    #[inline]
    pub fn residual(&self, p: f64, mu: f64, weight: f64, ps: f64) -> f64 {
        mu * std::f64::consts::LN_2 / weight * self.quartic_at(p) - ps * self.quadratic_at(p)
    }
}

/// Solves the stationarity identity for the jammer power on one subcarrier
/// at price `mu`, searching `(0, upper)`.
///
/// Returns 0 when the price exceeds the marginal utility everywhere (the
/// subcarrier is priced out) and `upper` when the marginal utility still
/// beats the price at the bracket end.
pub fn solve_quartic_root(co: &QuarticCoeffs, mu: f64, weight: f64, ps: f64, upper: f64) -> f64 {
    if !(upper > 0.0) {
        return 0.0;
    }
    if mu <= 0.0 {
        return upper;
    }
    // The marginal utility can rise before it falls (snatch-regime humps),
    // so probe a few interior points and keep the rightmost sign change:
    // that is the crossing on the decreasing branch.
    const PROBES: usize = 8;
    let mut left = 0.0;
    let mut left_val = co.residual(0.0, mu, weight, ps);
    let mut bracket = None;
    for i in 1..=PROBES {
        let p = upper * i as f64 / PROBES as f64;
        let v = co.residual(p, mu, weight, ps);
        if left_val < 0.0 && v >= 0.0 {
            bracket = Some((left, p));
        }
        left = p;
        left_val = v;
    }
    let (mut lo, mut hi) = match bracket {
        Some(b) => b,
        // No crossing: fully priced out, or still under-priced at the end.
        None => return if left_val < 0.0 { upper } else { 0.0 },
    };
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if co.residual(mid, mu, weight, ps) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// One subcarrier's standing request for jammer power.
#[derive(Debug, Clone, PartialEq)]
pub struct JammerDemand {
    /// Bound-clamped unconstrained optimum (`pj_star`); granted in full
    /// when the budget allows.
    pub optimum: f64,
    pub bounds: JammerBounds,
    pub delta: f64,
    pub coeffs: QuarticCoeffs,
    pub weight: f64,
    pub ps: f64,
}

/// Outcome of a budgeted jammer allocation.
#[derive(Debug, Clone, PartialEq)]
pub struct JammerAllocation {
    pub powers: Vec<f64>,
    /// Final price; zero when the budget was slack.
    pub multiplier: f64,
    /// Price-update steps spent (subgradient warm-up plus bisection).
    pub steps: usize,
}

/// Relative budget tolerance for the price search.
pub const BUDGET_TOLERANCE: f64 = 1e-6;

fn priced_powers(demands: &[JammerDemand], mu: f64) -> Vec<f64> {
    demands
        .iter()
        .map(|d| {
            if d.optimum <= 0.0 {
                return 0.0;
            }
            let root = solve_quartic_root(&d.coeffs, mu, d.weight, d.ps, d.optimum);
            if root <= 0.0 && d.bounds.lower <= 0.0 {
                // Priced out against a zero floor: the jammer stays off.
                0.0
            } else {
                clamp_pj(root, &d.bounds, d.delta).unwrap_or(d.optimum)
            }
        })
        .collect()
}

/// Splits `budget` of jammer power across `demands`.
///
/// When the unconstrained optima fit, everyone gets theirs. Otherwise a
/// price `mu` is searched so the clamped stationarity roots spend the
/// budget: a normalized subgradient pass brackets the price, bisection
/// tightens it to `1e-6 * budget`, always settling on the feasible side.
/// Demands with a positive lower bound are never starved below it, so the
/// result can exceed the budget only if the floors alone do.
pub fn allocate_jammer_budget(demands: &[JammerDemand], budget: f64) -> JammerAllocation {
    let optima: Vec<f64> = demands.iter().map(|d| d.optimum.max(0.0)).collect();
    let wanted: f64 = optima.iter().sum();
    if wanted <= budget || budget <= 0.0 {
        let powers = if budget <= 0.0 { vec![0.0; demands.len()] } else { optima };
        return JammerAllocation { powers, multiplier: 0.0, steps: 0 };
    }

    // Highest relevant price: the largest marginal utility at zero power,
    // ps * quad_e / e per unit ln2/weight.
    let mu_max = demands
        .iter()
        .filter(|d| d.optimum > 0.0)
        .map(|d| d.weight * d.ps * d.coeffs.quad_e / (std::f64::consts::LN_2 * d.coeffs.e))
        .fold(0.0f64, f64::max)
        .max(f64::MIN_POSITIVE);

    let tol = BUDGET_TOLERANCE * budget;
    let residual = |mu: f64| -> f64 { priced_powers(demands, mu).iter().sum::<f64>() - budget };

    // Subgradient warm-up, step scaled so the first move spans the price
    // range, shrinking as 1/sqrt(k); it stops once a bracket exists.
    let r0 = wanted - budget;
    let step0 = mu_max / r0;
    let mut mu = 0.0f64;
    let mut lo = 0.0f64; // residual(lo) > 0
    let mut hi = None; // residual(hi) < 0
    let mut steps = 0;
    for k in 1..=200u32 {
        mu = (mu + step0 / (k as f64).sqrt() * residual(mu)).max(0.0);
        steps += 1;
        let r = residual(mu);
        if r > 0.0 {
            lo = lo.max(mu);
        } else {
            hi = Some(hi.map_or(mu, |h: f64| h.min(mu)));
            if -r <= tol {
                break;
            }
        }
        if hi.is_some() {
            break;
        }
    }
    let mut hi = hi.unwrap_or(mu_max * 4.0);
    // The residual is monotone in the price, so plain bisection finishes.
    for _ in 0..100 {
        let r = residual(hi);
        if r <= 0.0 {
            break;
        }
        // Floors keep the spend above budget at any price; give them the floor.
        lo = hi;
        hi *= 4.0;
        steps += 1;
    }
    for _ in 0..100 {
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let r = residual(mid);
        steps += 1;
        if r > 0.0 {
            lo = mid;
        } else {
            hi = mid;
            if -r <= tol {
                break;
            }
        }
    }
    let powers = priced_powers(demands, hi);
    JammerAllocation { powers, multiplier: hi, steps }
}

/// Slack-budget rule for [`suboptimal_jammer_allocation`]: what each pair
/// receives when the per-pair caps sum to less than the budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlackRule {
    /// Midpoint of the feasible interval.
    Midpoint,
    /// The upper bound, backed off by the pair's margin.
    UpperMinusDelta,
}

/// One `(user, subcarrier)` pair in the closed-form jammer allocation.
#[derive(Debug, Clone, PartialEq)]
pub struct SuboptimalPair {
    /// `noise / g_e^2`: inverse effective jammer gain at the eavesdropper.
    pub inverse_eve_gain: f64,
    /// `noise / g_m^2` for the main user; larger than the eavesdropper's
    /// term whenever jamming is worth anything.
    pub inverse_main_gain: f64,
    pub weight: f64,
    pub bounds: JammerBounds,
    pub delta: f64,
}

/// Closed-form jammer split used by the sequential schemes.
///
/// Maximizes the decoupled log-ratio utility, which has the water-filling
/// form with the roles of jammer gains swapped (the eavesdropper's side
/// plays the "main" gain). If the per-pair upper bounds already fit in the
/// budget the slack rule applies; otherwise the price is bisected until
/// the clamped powers spend the budget.
pub fn suboptimal_jammer_allocation(
    pairs: &[SuboptimalPair],
    budget: f64,
    slack: SlackRule,
) -> Vec<f64> {
    if pairs.is_empty() || budget <= 0.0 {
        return vec![0.0; pairs.len()];
    }
    let cap_sum: f64 = pairs.iter().map(|p| p.bounds.upper).sum();
    if cap_sum <= budget {
        return pairs
            .iter()
            .map(|p| match slack {
                SlackRule::Midpoint => 0.5 * (p.bounds.lower + p.bounds.upper),
                SlackRule::UpperMinusDelta => p.bounds.upper - p.delta,
            })
            .collect();
    }

    let powers_at = |lambda: f64| -> Vec<f64> {
        pairs
            .iter()
            .map(|p| {
                let kappa = 4.0 * p.weight / (lambda * std::f64::consts::LN_2);
                let raw = secure_power(p.inverse_eve_gain, p.inverse_main_gain, kappa);
                if raw <= 0.0 && p.bounds.lower <= 0.0 {
                    0.0
                } else {
                    clamp_pj(raw, &p.bounds, p.delta).unwrap_or(0.5 * (p.bounds.lower + p.bounds.upper))
                }
            })
            .collect()
    };
    let spend = |lambda: f64| powers_at(lambda).iter().sum::<f64>();

    let lambda_hi = pairs
        .iter()
        .map(|p| {
            p.weight / std::f64::consts::LN_2
                * (1.0 / p.inverse_eve_gain - 1.0 / p.inverse_main_gain)
        })
        .fold(0.0f64, f64::max)
        .max(f64::MIN_POSITIVE);
    let mut hi = lambda_hi;
    while spend(hi) > budget && hi < lambda_hi * 1e12 {
        hi *= 4.0;
    }
    let mut lo = hi;
    for _ in 0..2100 {
        lo *= 0.5;
        if spend(lo) >= budget {
            break;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if spend(mid) > budget {
            lo = mid;
        } else {
            hi = mid;
            if budget - spend(mid) <= BUDGET_TOLERANCE * budget {
                break;
            }
        }
    }
    powers_at(hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{improvement_bounds, optimal_pj, rank_by_source_gain};
    use crate::channel::builtin_fixture;
    use crate::rate::snr;

    fn pair_rate(ch: &crate::channel::ChannelRealization, m: usize, e: usize, n: usize, ps: f64, pj: f64) -> f64 {
        let own = snr(ps, ch.h(m, n), ch.noise_variance, pj, ch.g(m, n));
        let eve = snr(ps, ch.h(e, n), ch.noise_variance, pj, ch.g(e, n));
        ((1.0 + own) / (1.0 + eve)).log2()
    }

    /// Unit gains and zero source power collapse the quartic side to
    /// (1 + p)^4 and null the rate side.
    #[test]
    fn coeffs_degenerate_to_binomial() {
        let ch = crate::channel::load_channels("# 2 1 1\n1.0\n1.0\n\n1.0\n1.0\n").unwrap();
        let co = QuarticCoeffs::build(&ch, 0, 1, 0, 0.0);
        assert_eq!((co.a, co.b, co.c, co.d, co.e), (1.0, 4.0, 6.0, 4.0, 1.0));
        assert_eq!((co.quad_c, co.quad_d, co.quad_e), (0.0, 0.0, 0.0));
        // Both sides of the identity vanish only on the rate side, so any
        // positive price shuts the subcarrier off.
        assert_eq!(solve_quartic_root(&co, 0.5, 1.0, 0.0, 1.0), 0.0);
    }

    /// The quartic really is the product of the four SNR denominators.
    #[test]
    fn quartic_matches_denominator_product() {
        let ch = builtin_fixture();
        let (m, e, n, ps) = (2usize, 1usize, 1usize, 2.0);
        let co = QuarticCoeffs::build(&ch, m, e, n, ps);
        let s2 = ch.noise_variance;
        for pj in [0.0, 0.05, 0.3, 1.7] {
            let dm = s2 + pj * ch.g2(m, n);
            let de = s2 + pj * ch.g2(e, n);
            let want = dm * (dm + ps * ch.h2(m, n)) * de * (de + ps * ch.h2(e, n));
            let got = co.quartic_at(pj);
            assert!((got - want).abs() < 1e-9 * want, "pj={pj}: {got} vs {want}");
        }
    }

    /// At vanishing price the root recovers the unconstrained optimum.
    #[test]
    fn tiny_price_recovers_rate_optimum() {
        let ch = builtin_fixture();
        let (m, e, n, ps) = (2usize, 1usize, 1usize, 2.0);
        let co = QuarticCoeffs::build(&ch, m, e, n, ps);
        let opt = optimal_pj(&ch, m, e, n, ps);
        let root = solve_quartic_root(&co, 1e-12, 1.0, ps, opt * 1.0001);
        assert!((root - opt).abs() < 1e-4, "root {root} vs optimum {opt}");
    }

    /// The root satisfies the stationarity identity tightly, and pricing
    /// shrinks it monotonically.
    #[test]
    fn root_satisfies_identity_and_shrinks_with_price() {
        let ch = builtin_fixture();
        let (m, e, n, ps) = (2usize, 1usize, 1usize, 2.0);
        let co = QuarticCoeffs::build(&ch, m, e, n, ps);
        let opt = optimal_pj(&ch, m, e, n, ps);
        let mut last = f64::INFINITY;
        for mu in [0.01, 0.05, 0.1, 0.5, 1.0] {
            let root = solve_quartic_root(&co, mu, 1.0, ps, opt);
            assert!(root < last, "root must shrink as the price rises");
            last = root;
            if root > 0.0 && root < opt {
                let lhs = mu * std::f64::consts::LN_2 * co.quartic_at(root);
                let rhs = ps * co.quadratic_at(root);
                assert!(
                    (lhs - rhs).abs() <= 1e-6 * rhs.abs().max(1e-300),
                    "identity residual at mu={mu}: {lhs} vs {rhs}"
                );
            }
        }
    }

    /// Scaling noise and powers together scales the root identically.
    #[test]
    fn root_scales_with_the_system() {
        let base = builtin_fixture();
        let mut doubled = base.clone();
        doubled.noise_variance = 2.0;
        let (m, e, n) = (2usize, 1usize, 1usize);
        let co1 = QuarticCoeffs::build(&base, m, e, n, 2.0);
        let co2 = QuarticCoeffs::build(&doubled, m, e, n, 4.0);
        let opt1 = optimal_pj(&base, m, e, n, 2.0);
        let opt2 = optimal_pj(&doubled, m, e, n, 4.0);
        assert!((opt2 - 2.0 * opt1).abs() < 1e-9 * opt2, "optimum must scale by 2");
        let mu = 0.08;
        let r1 = solve_quartic_root(&co1, mu, 1.0, 2.0, opt1);
        // Marginal utilities halve when everything doubles, so the price
        // must halve to pick the corresponding point.
        let r2 = solve_quartic_root(&co2, mu / 2.0, 1.0, 4.0, opt2);
        assert!((r2 - 2.0 * r1).abs() < 1e-6 * r2, "roots {r1} vs {r2}");
    }

    fn improvement_demand(
        ch: &crate::channel::ChannelRealization,
        n: usize,
        ps: f64,
    ) -> JammerDemand {
        let r = rank_by_source_gain(ch, n);
        let (m, e) = (r[0], r[1]);
        let bounds = improvement_bounds(ch, m, e, n, ps).unwrap();
        let delta = bounds.delta();
        let optimum = clamp_pj(optimal_pj(ch, m, e, n, ps), &bounds, delta).unwrap();
        JammerDemand {
            optimum,
            bounds,
            delta,
            coeffs: QuarticCoeffs::build(ch, m, e, n, ps),
            weight: 1.0,
            ps,
        }
    }

    #[test]
    fn slack_budget_grants_optima() {
        let ch = builtin_fixture();
        let demands = [improvement_demand(&ch, 1, 2.0), improvement_demand(&ch, 2, 2.0)];
        let total_opt: f64 = demands.iter().map(|d| d.optimum).sum();
        let alloc = allocate_jammer_budget(&demands, total_opt * 2.0);
        assert_eq!(alloc.multiplier, 0.0);
        for (d, &p) in demands.iter().zip(&alloc.powers) {
            assert_eq!(p, d.optimum);
        }
        let none = allocate_jammer_budget(&demands, 0.0);
        assert!(none.powers.iter().all(|&p| p == 0.0));
    }

    /// Tight budget: the priced split must beat every grid split of the
    /// same budget between the two subcarriers.
    #[test]
    fn tight_budget_matches_grid_split() {
        let ch = builtin_fixture();
        let demands = [improvement_demand(&ch, 1, 2.0), improvement_demand(&ch, 2, 2.0)];
        let budget = 0.6 * (demands[0].optimum + demands[1].optimum);
        let alloc = allocate_jammer_budget(&demands, budget);
        let spent: f64 = alloc.powers.iter().sum();
        assert!(spent <= budget * (1.0 + 1e-9));
        assert!((spent - budget).abs() <= 2e-6 * budget, "budget not met: {spent} vs {budget}");

        let value = |p0: f64, p1: f64| {
            pair_rate(&ch, 2, 1, 1, 2.0, p0) + pair_rate(&ch, 0, 1, 2, 2.0, p1)
        };
        let ours = value(alloc.powers[0], alloc.powers[1]);
        let mut best = f64::NEG_INFINITY;
        for i in 0..=4000 {
            let p0 = budget * i as f64 / 4000.0;
            let p1 = (budget - p0).min(demands[1].optimum);
            if p0 > demands[0].optimum {
                continue;
            }
            best = best.max(value(p0, p1));
        }
        assert!(ours >= best - 1e-5, "priced split {ours} lags grid best {best}");
    }

    /// A demand with a positive floor keeps at least the floor.
    #[test]
    fn floors_survive_tight_budgets() {
        let ch = builtin_fixture();
        let bounds = crate::analysis::snatch_bounds(&ch, 1, 2, 3).unwrap();
        let delta = bounds.delta();
        let ps = 2.0;
        let optimum = clamp_pj(optimal_pj(&ch, 1, 2, 3, ps), &bounds, delta).unwrap();
        let demand = JammerDemand {
            optimum,
            bounds,
            delta,
            coeffs: QuarticCoeffs::build(&ch, 1, 2, 3, ps),
            weight: 1.0,
            ps,
        };
        let floor = bounds.lower + delta;
        let alloc = allocate_jammer_budget(std::slice::from_ref(&demand), optimum * 0.5);
        assert!(
            alloc.powers[0] >= floor - 1e-12,
            "snatch floor starved: {} < {floor}",
            alloc.powers[0]
        );
    }

    #[test]
    fn suboptimal_slack_rules() {
        let pairs = [
            SuboptimalPair {
                inverse_eve_gain: 0.1,
                inverse_main_gain: 1.0,
                weight: 1.0,
                bounds: JammerBounds { lower: 0.0, upper: 0.5 },
                delta: 1e-6,
            },
            SuboptimalPair {
                inverse_eve_gain: 0.2,
                inverse_main_gain: 2.0,
                weight: 1.0,
                bounds: JammerBounds { lower: 0.1, upper: 0.7 },
                delta: 1e-6,
            },
        ];
        let mid = suboptimal_jammer_allocation(&pairs, 10.0, SlackRule::Midpoint);
        assert!((mid[0] - 0.25).abs() < 1e-12 && (mid[1] - 0.4).abs() < 1e-12);
        let upper = suboptimal_jammer_allocation(&pairs, 10.0, SlackRule::UpperMinusDelta);
        assert!((upper[0] - (0.5 - 1e-6)).abs() < 1e-12);
        assert!((upper[1] - (0.7 - 1e-6)).abs() < 1e-12);
    }

    /// Tight budget: spends it all, within bounds, and the log-ratio
    /// utility matches a grid split.
    #[test]
    fn suboptimal_tight_budget() {
        let pairs = [
            SuboptimalPair {
                inverse_eve_gain: 0.1,
                inverse_main_gain: 1.0,
                weight: 1.0,
                bounds: JammerBounds { lower: 0.0, upper: f64::INFINITY },
                delta: 1e-6,
            },
            SuboptimalPair {
                inverse_eve_gain: 0.05,
                inverse_main_gain: 0.8,
                weight: 1.0,
                bounds: JammerBounds { lower: 0.0, upper: f64::INFINITY },
                delta: 1e-6,
            },
        ];
        let budget = 0.4;
        let got = suboptimal_jammer_allocation(&pairs, budget, SlackRule::Midpoint);
        let spent: f64 = got.iter().sum();
        assert!((spent - budget).abs() <= 1e-5 * budget, "spent {spent}");

        let util = |p: &[f64]| -> f64 {
            pairs
                .iter()
                .zip(p)
                .map(|(pr, &x)| {
                    ((1.0 + x / pr.inverse_eve_gain) / (1.0 + x / pr.inverse_main_gain)).log2()
                })
                .sum()
        };
        let ours = util(&got);
        let mut best = f64::NEG_INFINITY;
        for i in 0..=4000 {
            let p0 = budget * i as f64 / 4000.0;
            best = best.max(util(&[p0, budget - p0]));
        }
        assert!(ours >= best - 1e-6, "{ours} lags grid best {best}");
    }
}
