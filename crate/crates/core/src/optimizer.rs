//! Joint source and jammer power optimization over a fixed subcarrier
//! assignment.
//!
//! The assigned subcarriers split into a plain set (no jamming, source
//! water-filling only) and a jammed set (source and jammer powers coupled).
//! A scalar `t` carries the source budget granted to the plain set; the
//! master loop nudges `t` along the water-level gap between the two sets
//! while each side solves its own subproblem: a direct water-fill for the
//! plain set, alternating optimization for the jammed one.
//!
//! The master keeps the best allocation seen under the true achieved rates
//! (eavesdropper re-derived from the powers, not the designated one), and
//! it is seeded with the no-jammer water-fill over every assigned
//! subcarrier. Turning the jammer on can therefore never return less than
//! the jammer-free optimum.

use crate::analysis::{
    clamp_pj, improvement_bounds, optimal_pj, snatch_bounds, JamRole, JammerBounds,
};
use crate::channel::ChannelRealization;
use crate::jammer_power::{allocate_jammer_budget, JammerDemand, QuarticCoeffs};
use crate::rate::{secure_rate, snr, IterationStats, PowerAllocation};
use crate::waterfill::{secure_waterfill, WaterfillEntry};

pub const AO_MAX_ITERATIONS: usize = 30;
pub const PD_MAX_ITERATIONS: usize = 50;
/// Objective-gain stopping threshold shared by both loops.
pub const OBJECTIVE_TOLERANCE: f64 = 1e-6;

/// A subcarrier scheduled for jamming, with its designated pair.
#[derive(Debug, Clone, PartialEq)]
pub struct JammedSubcarrier {
    pub subcarrier: usize,
    pub main: usize,
    pub eavesdropper: usize,
    pub role: JamRole,
    pub weight: f64,
    /// Hard per-subcarrier jammer ceiling on top of the ordering bounds;
    /// infinite when only the shared budget limits it.
    pub pj_cap: f64,
}

/// A subcarrier served without jamming.
#[derive(Debug, Clone, PartialEq)]
pub struct PlainSubcarrier {
    pub subcarrier: usize,
    pub main: usize,
    /// Strongest competing receiver at zero jamming; rate is measured
    /// against it.
    pub eavesdropper: usize,
    pub weight: f64,
}

impl From<JammedSubcarrier> for PlainSubcarrier {
    fn from(j: JammedSubcarrier) -> Self {
        PlainSubcarrier {
            subcarrier: j.subcarrier,
            main: j.main,
            eavesdropper: j.eavesdropper,
            weight: j.weight,
        }
    }
}

/// How the jammer half-step spends the jammer budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JammerRule {
    /// Price-share the budget across the jammed set.
    Budgeted,
    /// All-or-nothing: grant every member its clamped optimum when the
    /// total fits, otherwise keep the previous powers. Used by the
    /// fairness schemes that admit subcarriers at their exact optimum.
    OptimalOnly,
}

#[derive(Debug, Clone)]
pub struct AoOutcome {
    /// Per-member source powers, aligned with the input slice.
    pub source_power: Vec<f64>,
    pub jammer_power: Vec<f64>,
    /// Water level of the final source fill, translated for the master:
    /// 0 when the set cannot use more budget, infinite when it is starved.
    pub price: f64,
    /// Weighted designated-pair rate at the final powers.
    pub objective: f64,
    /// Objective after each sweep; non-decreasing.
    pub trace: Vec<f64>,
    /// Member positions whose jammer power ended at zero.
    pub zeroed: Vec<usize>,
    pub iterations: usize,
    pub price_steps: usize,
}

/// Rate of the designated pair `(m, e)`, positive part.
fn designated_rate(
    ch: &ChannelRealization,
    m: usize,
    e: usize,
    n: usize,
    ps: f64,
    pj: f64,
) -> f64 {
    if ps <= 0.0 {
        return 0.0;
    }
    let own = snr(ps, ch.h(m, n), ch.noise_variance, pj, ch.g(m, n));
    let eve = snr(ps, ch.h(e, n), ch.noise_variance, pj, ch.g(e, n));
    (((1.0 + own) / (1.0 + eve)).log2()).max(0.0)
}

fn member_objective(ch: &ChannelRealization, members: &[JammedSubcarrier], ps: &[f64], pj: &[f64]) -> f64 {
    members
        .iter()
        .zip(ps.iter().zip(pj))
        .map(|(mb, (&p, &j))| {
            mb.weight * designated_rate(ch, mb.main, mb.eavesdropper, mb.subcarrier, p, j)
        })
        .sum()
}

/// Ordering-preserving jammer interval for a member at source power `ps`,
/// `None` when jamming cannot pay off there.
pub fn member_bounds(
    ch: &ChannelRealization,
    member: &JammedSubcarrier,
    ps: f64,
) -> Option<JammerBounds> {
    if ps <= 0.0 {
        return None;
    }
    let raw = match member.role {
        JamRole::Improvement => {
            improvement_bounds(ch, member.main, member.eavesdropper, member.subcarrier, ps)
        }
        JamRole::Snatch => snatch_bounds(ch, member.main, member.eavesdropper, member.subcarrier),
    }?;
    let capped = raw.intersect(&JammerBounds { lower: 0.0, upper: member.pj_cap });
    capped.is_feasible().then_some(capped)
}

/// Standing jammer request per member at the given source powers; `None`
/// where the gates fail.
pub fn jammer_demands(
    ch: &ChannelRealization,
    members: &[JammedSubcarrier],
    ps: &[f64],
) -> Vec<Option<JammerDemand>> {
    members
        .iter()
        .zip(ps)
        .map(|(mb, &p)| {
            let bounds = member_bounds(ch, mb, p)?;
            if !bounds.is_feasible() {
                return None;
            }
            let delta = bounds.delta();
            let raw = optimal_pj(ch, mb.main, mb.eavesdropper, mb.subcarrier, p);
            let optimum = clamp_pj(raw, &bounds, delta).ok()?;
            Some(JammerDemand {
                optimum,
                bounds,
                delta,
                coeffs: QuarticCoeffs::build(ch, mb.main, mb.eavesdropper, mb.subcarrier, p),
                weight: mb.weight,
                ps: p,
            })
        })
        .collect()
}

/// One jammer half-step: fresh demands at the current source powers, spent
/// per the rule. Members whose ordering floors alone would blow the budget
/// are shed, largest floor first, so the result is always affordable.
fn jammer_step(
    ch: &ChannelRealization,
    members: &[JammedSubcarrier],
    ps: &[f64],
    budget: f64,
    rule: JammerRule,
    previous: &[f64],
    price_steps: &mut usize,
) -> Vec<f64> {
    let demands = jammer_demands(ch, members, ps);
    match rule {
        JammerRule::OptimalOnly => {
            let total: f64 = demands.iter().flatten().map(|d| d.optimum).sum();
            if total <= budget {
                demands
                    .iter()
                    .map(|d| d.as_ref().map_or(0.0, |d| d.optimum))
                    .collect()
            } else {
                previous.to_vec()
            }
        }
        JammerRule::Budgeted => {
            let mut active: Vec<bool> = demands.iter().map(Option::is_some).collect();
            loop {
                let picked: Vec<usize> =
                    (0..members.len()).filter(|&i| active[i]).collect();
                let compact: Vec<JammerDemand> =
                    picked.iter().map(|&i| demands[i].clone().unwrap()).collect();
                let alloc = allocate_jammer_budget(&compact, budget);
                *price_steps += alloc.steps;
                let spent: f64 = alloc.powers.iter().sum();
                let affordable = budget <= 0.0 || spent <= budget * (1.0 + 1e-9);
                let over_floor = picked
                    .iter()
                    .enumerate()
                    .filter(|&(_, &i)| demands[i].as_ref().unwrap().bounds.lower > 0.0)
                    .max_by(|a, b| {
                        let la = demands[*a.1].as_ref().unwrap().bounds.lower;
                        let lb = demands[*b.1].as_ref().unwrap().bounds.lower;
                        la.partial_cmp(&lb).unwrap()
                    })
                    .map(|(_, &i)| i);
                if affordable || over_floor.is_none() {
                    let mut out = vec![0.0; members.len()];
                    for (slot, &i) in picked.iter().enumerate() {
                        out[i] = alloc.powers[slot];
                    }
                    return out;
                }
                active[over_floor.unwrap()] = false;
            }
        }
    }
}

fn jammed_entries(
    ch: &ChannelRealization,
    members: &[JammedSubcarrier],
    pj: &[f64],
) -> Vec<WaterfillEntry> {
    members
        .iter()
        .zip(pj)
        .map(|(mb, &j)| {
            let s2 = ch.noise_variance;
            WaterfillEntry {
                inverse_main_gain: (s2 + j * ch.g2(mb.main, mb.subcarrier))
                    / ch.h2(mb.main, mb.subcarrier),
                inverse_eve_gain: (s2 + j * ch.g2(mb.eavesdropper, mb.subcarrier))
                    / ch.h2(mb.eavesdropper, mb.subcarrier),
                weight: mb.weight,
            }
        })
        .collect()
}

/// Water level as seen by the budget master. Distinguishes "starved"
/// (would pay anything for budget) from "hopeless" (cannot use any), which
/// the raw fill conflates in its infinite marker.
fn effective_price(multiplier: f64, budget: f64, any_viable: bool) -> f64 {
    if !any_viable {
        0.0
    } else if budget <= 0.0 {
        f64::INFINITY
    } else if multiplier.is_finite() {
        multiplier
    } else {
        0.0
    }
}

/// Alternating optimization over the jammed set at fixed budgets.
///
/// Source powers start from an equal split. Each sweep recomputes the
/// ordering bounds at the current source powers, spends the jammer budget,
/// then refills the source budget against the jammed effective gains. The
/// jammer step keeps its previous powers when the fresh ones rate worse,
/// and the source step is an exact block maximization, so the objective
/// never decreases.
pub fn alternating_optimization(
    ch: &ChannelRealization,
    members: &[JammedSubcarrier],
    source_budget: f64,
    jammer_budget: f64,
    rule: JammerRule,
    initial_jammer: Option<&[f64]>,
) -> AoOutcome {
    let k = members.len();
    let mut pj = match initial_jammer {
        Some(init) => init.to_vec(),
        None => vec![0.0; k],
    };
    debug_assert_eq!(pj.len(), k);
    if k == 0 {
        return AoOutcome {
            source_power: vec![],
            jammer_power: vec![],
            price: 0.0,
            objective: 0.0,
            trace: vec![],
            zeroed: vec![],
            iterations: 0,
            price_steps: 0,
        };
    }
    let share = if source_budget > 0.0 { source_budget / k as f64 } else { 0.0 };
    let mut ps = vec![share; k];
    let mut obj = member_objective(ch, members, &ps, &pj);
    let mut price = 0.0;
    let mut price_steps = 0;
    let mut trace = Vec::new();
    let mut iterations = 0;

    for _ in 0..AO_MAX_ITERATIONS {
        iterations += 1;
        let candidate = jammer_step(ch, members, &ps, jammer_budget, rule, &pj, &mut price_steps);
        if member_objective(ch, members, &ps, &candidate) >= obj {
            pj = candidate;
        }
        let entries = jammed_entries(ch, members, &pj);
        let any_viable = entries.iter().any(|e| e.inverse_eve_gain > e.inverse_main_gain);
        let fill = secure_waterfill(&entries, source_budget);
        ps = fill.powers;
        price = effective_price(fill.multiplier, source_budget, any_viable);

        let swept = member_objective(ch, members, &ps, &pj);
        trace.push(swept);
        let gain = swept - obj;
        obj = obj.max(swept);
        if gain < OBJECTIVE_TOLERANCE {
            break;
        }
    }

    let zeroed = pj
        .iter()
        .enumerate()
        .filter(|(_, &p)| p == 0.0)
        .map(|(i, _)| i)
        .collect();
    AoOutcome {
        source_power: ps,
        jammer_power: pj,
        price,
        objective: obj,
        trace,
        zeroed,
        iterations,
        price_steps,
    }
}

#[derive(Debug, Clone)]
pub struct PdOutcome {
    /// Best allocation seen, judged by achieved weighted rates.
    pub allocation: PowerAllocation,
    pub objective: f64,
    /// Plain-set source budget at the best iterate.
    pub t: f64,
    /// Water levels of the last iterate (diagnostics).
    pub plain_price: f64,
    pub jammed_price: f64,
    /// Whether the two water levels met within `1e-4 * max(λ, 1)`.
    pub multipliers_converged: bool,
    /// Subcarriers whose jammer power died and were folded back into the
    /// plain set.
    pub demoted: Vec<usize>,
    pub stats: IterationStats,
}

fn plain_entries(ch: &ChannelRealization, plain: &[PlainSubcarrier]) -> Vec<WaterfillEntry> {
    plain
        .iter()
        .map(|p| WaterfillEntry {
            inverse_main_gain: ch.noise_variance / ch.h2(p.main, p.subcarrier),
            inverse_eve_gain: ch.noise_variance / ch.h2(p.eavesdropper, p.subcarrier),
            weight: p.weight,
        })
        .collect()
}

fn build_allocation(
    n_total: usize,
    plain: &[PlainSubcarrier],
    plain_ps: &[f64],
    jammed: &[JammedSubcarrier],
    jammed_ps: &[f64],
    jammed_pj: &[f64],
    source_budget: f64,
    jammer_budget: f64,
) -> PowerAllocation {
    let mut alloc = PowerAllocation::empty(n_total);
    for (p, &ps) in plain.iter().zip(plain_ps) {
        alloc.source_power[p.subcarrier] = ps;
        alloc.owner[p.subcarrier] = Some(p.main);
    }
    for (mb, (&ps, &pj)) in jammed.iter().zip(jammed_ps.iter().zip(jammed_pj)) {
        alloc.source_power[mb.subcarrier] = ps;
        alloc.owner[mb.subcarrier] = Some(mb.main);
        if pj > 0.0 {
            alloc.jammer_power[mb.subcarrier] = pj;
            alloc.jammer_active[mb.subcarrier] = true;
        }
    }
    // Trim real overshoot so the budget invariants hold; leave float dust
    // alone, otherwise the extra multiply perturbs allocations that other
    // paths produce without it.
    let spent_s: f64 = alloc.source_power.iter().sum();
    if spent_s > source_budget * (1.0 + 1e-12) && spent_s > 0.0 {
        let f = source_budget / spent_s;
        alloc.source_power.iter_mut().for_each(|p| *p *= f);
    }
    let spent_j: f64 = alloc.jammer_power.iter().sum();
    if spent_j > jammer_budget * (1.0 + 1e-12) && spent_j > 0.0 {
        let f = jammer_budget / spent_j;
        alloc.jammer_power.iter_mut().for_each(|p| *p *= f);
    }
    alloc
}

/// Σ weight · achieved rate over the owned subcarriers.
fn achieved_objective(
    ch: &ChannelRealization,
    alloc: &PowerAllocation,
    weight_of: &[f64],
) -> f64 {
    (0..alloc.num_subcarriers())
        .filter_map(|n| {
            alloc.owner[n].map(|m| weight_of[n] * secure_rate(ch, alloc, m, n))
        })
        .sum()
}

/// Primal decomposition of the source budget between the plain and jammed
/// sets.
///
/// Iterates {plain water-fill at `t`, alternating optimization at
/// `source_budget - t`, subgradient step on `t` along the water-level gap}
/// until the achieved objective stalls or the iteration cap hits. Members
/// whose jammer power dies are folded back into the plain set (once each,
/// never promoted back). Returns the best allocation seen, which is at
/// least the no-jammer water-fill it is seeded with.
pub fn primal_decomposition(
    ch: &ChannelRealization,
    plain: &[PlainSubcarrier],
    jammed: &[JammedSubcarrier],
    source_budget: f64,
    jammer_budget: f64,
    rule: JammerRule,
) -> PdOutcome {
    let n_total = ch.num_subcarriers();
    let mut weight_of = vec![0.0; n_total];
    for p in plain {
        weight_of[p.subcarrier] = p.weight;
    }
    for j in jammed {
        weight_of[j.subcarrier] = j.weight;
    }

    let mut plain_v = plain.to_vec();
    let mut jammed_v = jammed.to_vec();
    let mut stats = IterationStats::default();

    // Anchor: all assigned subcarriers filled jammer-free.
    let all_plain: Vec<PlainSubcarrier> = plain_v
        .iter()
        .cloned()
        .chain(jammed_v.iter().cloned().map(PlainSubcarrier::from))
        .collect();
    let anchor_entries = plain_entries(ch, &all_plain);
    let anchor_viable = anchor_entries
        .iter()
        .any(|e| e.inverse_eve_gain > e.inverse_main_gain);
    let anchor_fill = secure_waterfill(&anchor_entries, source_budget);
    let anchor_price = effective_price(anchor_fill.multiplier, source_budget, anchor_viable);
    let anchor_alloc = build_allocation(
        n_total,
        &all_plain,
        &anchor_fill.powers,
        &[],
        &[],
        &[],
        source_budget,
        jammer_budget,
    );
    let anchor_obj = achieved_objective(ch, &anchor_alloc, &weight_of);

    let mut best_alloc = anchor_alloc;
    let mut best_obj = anchor_obj;
    let mut best_t = source_budget;

    if jammed_v.is_empty() {
        return PdOutcome {
            allocation: best_alloc,
            objective: best_obj,
            t: best_t,
            plain_price: anchor_price,
            jammed_price: anchor_price,
            multipliers_converged: true,
            demoted: vec![],
            stats,
        };
    }

    let mut t = source_budget * plain_v.len() as f64 / n_total as f64;
    let mut carry = vec![0.0; jammed_v.len()];
    let mut prev_obj = f64::NEG_INFINITY;
    let mut demoted = Vec::new();
    let (mut plain_price, mut jammed_price) = (0.0f64, 0.0f64);
    // Adaptive subgradient step: the price residual is normalized to the
    // price scale so one step moves at most `xi`, and every sign flip of the
    // residual halves `xi`. Plain bisection behavior once the optimum is
    // bracketed, without assuming anything about the price magnitudes.
    let mut xi = 0.25 * source_budget;
    let mut prev_sign = 0.0f64;

    for _ in 1..=PD_MAX_ITERATIONS {
        stats.outer_iterations += 1;

        let (plain_ps, p_price) = if plain_v.is_empty() {
            (vec![], 0.0)
        } else {
            let entries = plain_entries(ch, &plain_v);
            let any_viable = entries.iter().any(|e| e.inverse_eve_gain > e.inverse_main_gain);
            let fill = secure_waterfill(&entries, t);
            (fill.powers, effective_price(fill.multiplier, t, any_viable))
        };
        let ao = alternating_optimization(
            ch,
            &jammed_v,
            source_budget - t,
            jammer_budget,
            rule,
            Some(&carry),
        );
        stats.ao_iterations += ao.iterations;
        stats.price_steps += ao.price_steps;
        plain_price = p_price;
        jammed_price = ao.price;

        let alloc = build_allocation(
            n_total,
            &plain_v,
            &plain_ps,
            &jammed_v,
            &ao.source_power,
            &ao.jammer_power,
            source_budget,
            jammer_budget,
        );
        let obj = achieved_objective(ch, &alloc, &weight_of);
        if obj > best_obj {
            best_alloc = alloc;
            best_obj = obj;
            best_t = t;
        }
        let stalled = (obj - prev_obj).abs() < OBJECTIVE_TOLERANCE;
        prev_obj = obj;

        carry = ao.jammer_power.clone();
        for &i in ao.zeroed.iter().rev() {
            let member = jammed_v.remove(i);
            carry.remove(i);
            demoted.push(member.subcarrier);
            plain_v.push(PlainSubcarrier::from(member));
        }

        if stalled || jammed_v.is_empty() {
            break;
        }

        if plain_v.is_empty() {
            t = 0.0;
        } else {
            let resid = jammed_price - plain_price;
            let sign = if resid > 0.0 {
                1.0
            } else if resid < 0.0 {
                -1.0
            } else {
                0.0
            };
            if sign != 0.0 {
                if prev_sign != 0.0 && sign != prev_sign {
                    xi *= 0.5;
                }
                prev_sign = sign;
            }
            // An infinite price means one side ran dry; walk back a full step.
            let delta = if resid.is_nan() {
                0.0
            } else if resid.is_finite() {
                let scale = plain_price.max(jammed_price).max(1e-12);
                (xi * resid / scale).clamp(-xi, xi)
            } else {
                xi.copysign(resid)
            };
            t = (t - delta).clamp(0.0, source_budget);
        }
    }

    let gap = (jammed_price - plain_price).abs();
    let multipliers_converged =
        gap <= 1e-4 * plain_price.max(jammed_price).max(1.0);
    PdOutcome {
        allocation: best_alloc,
        objective: best_obj,
        t: best_t,
        plain_price,
        jammed_price,
        multipliers_converged,
        demoted,
        stats,
    }
}
