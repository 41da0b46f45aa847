//! Max-min fair allocation with subcarrier snatching.
//!
//! Subcarriers are handed out one at a time, always to the currently
//! worst-off user. A user whose best-gain claims are exhausted may snatch
//! a subcarrier whose natural owner out-gains it, provided enough jammer
//! power can flip the decoding order; the natural owner is pinned as that
//! subcarrier's eavesdropper from then on. A user who can neither claim
//! nor snatch is retired, which keeps the loop deadlock-free: every pass
//! either allocates a subcarrier or retires a user, so it ends within
//! `M + N` passes.
//!
//! Four jammer policies share the skeleton. The proactive pair budget the
//! jammer evenly per subcarrier (`P_J/N` each); the on-demand pair serve
//! exact per-subcarrier optima first come, first served, until the budget
//! ledger runs dry. Each family has a joint-optimizing member (PFA, ODA)
//! and a sequential one (PFASO, ODASO).

use crate::analysis::{optimal_pj, rank_by_source_gain, snatch_bounds, snatch_feasible, JamRole, JammerBounds};
use crate::channel::{ChannelRealization, ScenarioConfig};
use crate::jammer_power::{suboptimal_jammer_allocation, SlackRule, SuboptimalPair};
use crate::optimizer::{primal_decomposition, JammedSubcarrier, JammerRule, PlainSubcarrier};
use crate::rate::{per_user_rates, IterationStats, PowerAllocation, SchemeOutcome};
use crate::schemes::runner_up;
use crate::waterfill::{secure_waterfill, WaterfillEntry};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FairnessPolicy {
    /// Proactively fair: every subcarrier's jammer cap is `P_J/N`; joint
    /// per-user power optimization.
    Pfa,
    /// On-demand: snatches draw exact optima from a shared ledger; source
    /// power re-optimized per user.
    Oda,
    /// Proactively fair, sequential powers.
    Pfaso,
    /// On-demand, no optimization at all.
    Odaso,
}

/// A subcarrier user `user` could take from its natural best-gain owner.
#[derive(Debug, Clone, PartialEq)]
pub struct SnatchCandidate {
    pub subcarrier: usize,
    /// Natural owner; becomes the pinned eavesdropper if snatched.
    pub victim: usize,
    /// Minimum jammer power that flips the decoding order.
    pub threshold: f64,
    pub bounds: JammerBounds,
}

#[derive(Debug, Clone)]
pub struct FairnessUser {
    /// Still competing for subcarriers.
    pub active: bool,
    /// Subcarriers held as natural best-gain owner.
    pub plain: Vec<PlainSubcarrier>,
    /// Subcarriers held by snatching.
    pub snatched: Vec<JammedSubcarrier>,
    /// Subcarriers where this user is the strict best-gain user.
    pub best: Vec<usize>,
    /// Snatchable subcarriers with cached thresholds and bounds.
    pub snatches: Vec<SnatchCandidate>,
}

#[derive(Debug, Clone)]
pub struct FairnessState {
    pub users: Vec<FairnessUser>,
    /// Subcarriers not yet handed to anyone.
    pub free: Vec<bool>,
    pub allocation: PowerAllocation,
    pub rates: Vec<f64>,
    /// Equal source share `P_S/N`.
    pub share_source: f64,
    /// Equal jammer share `P_J/N`.
    pub share_jammer: f64,
    pub stats: IterationStats,
}

/// Builds the candidate sets and grants every user one opening subcarrier.
///
/// Best sets need a strict gain win. Each user opens with the best
/// subcarrier of its set by main-to-runner-up gain ratio at the equal
/// source share; users with an empty set start with nothing and must
/// snatch.
pub fn init_fairness_state(ch: &ChannelRealization, cfg: &ScenarioConfig) -> FairnessState {
    let (num_users, n_total) = (ch.num_users(), ch.num_subcarriers());
    let share_source = cfg.source_budget / n_total as f64;
    let share_jammer = cfg.jammer_budget / n_total as f64;

    let mut users: Vec<FairnessUser> = (0..num_users)
        .map(|m| {
            let best = (0..n_total)
                .filter(|&n| (0..num_users).all(|k| k == m || ch.h(m, n) > ch.h(k, n)))
                .collect();
            let snatches = (0..n_total)
                .filter_map(|n| {
                    let victim = rank_by_source_gain(ch, n)[0];
                    if victim == m || !snatch_feasible(ch, m, victim, n) {
                        return None;
                    }
                    let bounds = snatch_bounds(ch, m, victim, n)?;
                    Some(SnatchCandidate { subcarrier: n, victim, threshold: bounds.lower, bounds })
                })
                .collect();
            FairnessUser { active: true, plain: vec![], snatched: vec![], best, snatches }
        })
        .collect();

    let mut free = vec![true; n_total];
    let mut allocation = PowerAllocation::empty(n_total);
    for (m, user) in users.iter_mut().enumerate() {
        let opener = user
            .best
            .iter()
            .copied()
            .max_by(|&a, &b| {
                let ra = ch.h(m, a) / ch.h(runner_up(ch, m, a), a);
                let rb = ch.h(m, b) / ch.h(runner_up(ch, m, b), b);
                ra.partial_cmp(&rb).unwrap().then(b.cmp(&a))
            });
        if let Some(n) = opener {
            free[n] = false;
            user.plain.push(PlainSubcarrier {
                subcarrier: n,
                main: m,
                eavesdropper: runner_up(ch, m, n),
                weight: cfg.weights[m],
            });
            allocation.source_power[n] = share_source;
            allocation.owner[n] = Some(m);
        }
    }
    let rates = per_user_rates(ch, &allocation);
    FairnessState {
        users,
        free,
        allocation,
        rates,
        share_source,
        share_jammer,
        stats: IterationStats::default(),
    }
}

/// Clamped per-subcarrier jammer optimum within `bounds`, additionally
/// capped at `cap`. `None` when the usable window closes.
fn capped_snatch_power(
    ch: &ChannelRealization,
    m: usize,
    e: usize,
    n: usize,
    ps: f64,
    bounds: &JammerBounds,
    cap: f64,
) -> Option<f64> {
    if ps <= 0.0 {
        return None;
    }
    let delta = bounds.delta();
    let lo = bounds.lower + delta;
    let hi = (bounds.upper - delta).min(cap);
    if !(lo <= hi) {
        return None;
    }
    Some(optimal_pj(ch, m, e, n, ps).clamp(lo, hi))
}

fn committed_to(state: &FairnessState, v: usize) -> f64 {
    state.users[v]
        .snatched
        .iter()
        .map(|s| state.allocation.effective_jammer_power(s.subcarrier))
        .sum()
}

fn subcarriers_of(user: &FairnessUser) -> Vec<usize> {
    user.plain
        .iter()
        .map(|p| p.subcarrier)
        .chain(user.snatched.iter().map(|s| s.subcarrier))
        .collect()
}

fn snapshot(state: &FairnessState, subs: &[usize]) -> Vec<(usize, f64, f64, bool)> {
    subs.iter()
        .map(|&n| {
            (
                n,
                state.allocation.source_power[n],
                state.allocation.jammer_power[n],
                state.allocation.jammer_active[n],
            )
        })
        .collect()
}

fn restore(state: &mut FairnessState, saved: &[(usize, f64, f64, bool)]) {
    for &(n, ps, pj, active) in saved {
        state.allocation.source_power[n] = ps;
        state.allocation.jammer_power[n] = pj;
        state.allocation.jammer_active[n] = active;
    }
}

/// Jammer budget not yet committed anywhere in the running allocation.
/// Derived fresh at every use so mid-pass grants can never be counted
/// twice against the ledger.
fn uncommitted(cfg: &ScenarioConfig, state: &FairnessState) -> f64 {
    let committed: f64 = state.allocation.jammer_power.iter().sum();
    (cfg.jammer_budget - committed).max(0.0)
}

/// Re-runs user `v`'s power routine per policy; keeps the incumbent powers
/// if the routine somehow rates worse, so a user's rate never drops when
/// it gains a subcarrier.
fn reoptimize_user(
    ch: &ChannelRealization,
    cfg: &ScenarioConfig,
    state: &mut FairnessState,
    v: usize,
    policy: FairnessPolicy,
) {
    let subs = subcarriers_of(&state.users[v]);
    let saved = snapshot(state, &subs);
    let before = state.rates[v];
    let budget_s = state.share_source * subs.len() as f64;

    match policy {
        FairnessPolicy::Pfa | FairnessPolicy::Oda => {
            let user = &state.users[v];
            let (budget_j, rule) = if policy == FairnessPolicy::Pfa {
                (state.share_jammer * user.snatched.len() as f64, JammerRule::Budgeted)
            } else {
                // what v holds plus whatever nobody has claimed yet
                (committed_to(state, v) + uncommitted(cfg, state), JammerRule::OptimalOnly)
            };
            let out = primal_decomposition(ch, &user.plain, &user.snatched, budget_s, budget_j, rule);
            // The outer counter belongs to the fairness passes; keep only the
            // nested sweep and price work from the per-user solve.
            let mut nested = out.stats;
            nested.outer_iterations = 0;
            state.stats.absorb(nested);
            for &n in &subs {
                state.allocation.source_power[n] = out.allocation.source_power[n];
                state.allocation.jammer_power[n] = out.allocation.jammer_power[n];
                state.allocation.jammer_active[n] = out.allocation.jammer_active[n];
            }
        }
        FairnessPolicy::Pfaso => {
            let user = &state.users[v];
            let entries: Vec<WaterfillEntry> = user
                .plain
                .iter()
                .map(|p| WaterfillEntry {
                    inverse_main_gain: ch.noise_variance / ch.h2(p.main, p.subcarrier),
                    inverse_eve_gain: ch.noise_variance / ch.h2(p.eavesdropper, p.subcarrier),
                    weight: p.weight,
                })
                .collect();
            let fill = secure_waterfill(&entries, state.share_source * user.plain.len() as f64);
            let pairs: Vec<SuboptimalPair> = user
                .snatched
                .iter()
                .map(|s| {
                    let b = snatch_bounds(ch, s.main, s.eavesdropper, s.subcarrier)
                        .expect("cached snatch stays feasible");
                    SuboptimalPair {
                        inverse_eve_gain: ch.noise_variance / ch.g2(s.eavesdropper, s.subcarrier),
                        inverse_main_gain: ch.noise_variance / ch.g2(s.main, s.subcarrier),
                        weight: s.weight,
                        bounds: b,
                        delta: b.delta(),
                    }
                })
                .collect();
            let pj = suboptimal_jammer_allocation(
                &pairs,
                state.share_jammer * user.snatched.len() as f64,
                SlackRule::UpperMinusDelta,
            );
            let plain_subs: Vec<usize> = user.plain.iter().map(|p| p.subcarrier).collect();
            let snatch_subs: Vec<usize> = user.snatched.iter().map(|s| s.subcarrier).collect();
            for (&n, &p) in plain_subs.iter().zip(&fill.powers) {
                state.allocation.source_power[n] = p;
            }
            for (&n, &p) in snatch_subs.iter().zip(&pj) {
                state.allocation.source_power[n] = state.share_source;
                state.allocation.jammer_power[n] = if p > 0.0 { p } else { 0.0 };
                state.allocation.jammer_active[n] = p > 0.0;
            }
        }
        FairnessPolicy::Odaso => {
            // Equal source power and committed jammer power as granted;
            // nothing to recompute.
        }
    }

    state.rates = per_user_rates(ch, &state.allocation);
    if state.rates[v] < before - 1e-12 {
        restore(state, &saved);
        state.rates = per_user_rates(ch, &state.allocation);
    }
}

/// Decides whether `v` may snatch `cand` under the policy, and the jammer
/// power the grant opens with.
fn admit_snatch(
    ch: &ChannelRealization,
    cfg: &ScenarioConfig,
    state: &FairnessState,
    v: usize,
    cand: &SnatchCandidate,
    policy: FairnessPolicy,
) -> Option<f64> {
    let ps = state.share_source;
    match policy {
        FairnessPolicy::Pfa | FairnessPolicy::Pfaso => capped_snatch_power(
            ch,
            v,
            cand.victim,
            cand.subcarrier,
            ps,
            &cand.bounds,
            state.share_jammer,
        ),
        FairnessPolicy::Oda => {
            let fresh = capped_snatch_power(
                ch,
                v,
                cand.victim,
                cand.subcarrier,
                ps,
                &cand.bounds,
                f64::INFINITY,
            )?;
            // Every already-snatched subcarrier restates its optimum at its
            // current source power; the whole wish list must fit what this
            // user holds plus the unclaimed pool.
            let mut wanted = fresh;
            for s in &state.users[v].snatched {
                let held = state.allocation.effective_jammer_power(s.subcarrier);
                let b = snatch_bounds(ch, s.main, s.eavesdropper, s.subcarrier)?;
                wanted += capped_snatch_power(
                    ch,
                    s.main,
                    s.eavesdropper,
                    s.subcarrier,
                    state.allocation.source_power[s.subcarrier],
                    &b,
                    f64::INFINITY,
                )
                .unwrap_or(held);
            }
            (wanted <= committed_to(state, v) + uncommitted(cfg, state)).then_some(fresh)
        }
        FairnessPolicy::Odaso => {
            let p = capped_snatch_power(
                ch,
                v,
                cand.victim,
                cand.subcarrier,
                ps,
                &cand.bounds,
                f64::INFINITY,
            )?;
            (p <= uncommitted(cfg, state)).then_some(p)
        }
    }
}

/// Runs the fairness loop to completion and reports the final allocation.
pub fn maxmin_loop(
    ch: &ChannelRealization,
    cfg: &ScenarioConfig,
    state: &mut FairnessState,
    policy: FairnessPolicy,
) -> SchemeOutcome {
    let pj_cap = match policy {
        FairnessPolicy::Pfa => state.share_jammer,
        _ => f64::INFINITY,
    };
    // Each pass allocates a subcarrier or retires a user.
    let pass_limit = ch.num_users() + ch.num_subcarriers();
    for _ in 0..pass_limit {
        if !state.free.iter().any(|&f| f) {
            break;
        }
        let v = match (0..state.users.len())
            .filter(|&m| state.users[m].active)
            .min_by(|&a, &b| state.rates[a].partial_cmp(&state.rates[b]).unwrap())
        {
            Some(v) => v,
            None => break,
        };
        state.stats.outer_iterations += 1;

        let claim = state.users[v]
            .best
            .iter()
            .copied()
            .filter(|&n| state.free[n])
            .max_by(|&a, &b| {
                let ra = ch.h(v, a) / ch.h(runner_up(ch, v, a), a);
                let rb = ch.h(v, b) / ch.h(runner_up(ch, v, b), b);
                ra.partial_cmp(&rb).unwrap().then(b.cmp(&a))
            });
        if let Some(n) = claim {
            state.free[n] = false;
            state.users[v].plain.push(PlainSubcarrier {
                subcarrier: n,
                main: v,
                eavesdropper: runner_up(ch, v, n),
                weight: cfg.weights[v],
            });
            state.allocation.source_power[n] = state.share_source;
            state.allocation.owner[n] = Some(v);
            state.rates = per_user_rates(ch, &state.allocation);
            reoptimize_user(ch, cfg, state, v, policy);
            continue;
        }

        let cand = state.users[v]
            .snatches
            .iter()
            .filter(|c| state.free[c.subcarrier])
            .min_by(|a, b| {
                a.threshold
                    .partial_cmp(&b.threshold)
                    .unwrap()
                    .then(a.subcarrier.cmp(&b.subcarrier))
            })
            .cloned();
        let admitted = cand
            .as_ref()
            .and_then(|c| admit_snatch(ch, cfg, state, v, c, policy).map(|p| (c.clone(), p)));
        match admitted {
            Some((c, pj)) => {
                state.free[c.subcarrier] = false;
                state.users[v].snatched.push(JammedSubcarrier {
                    subcarrier: c.subcarrier,
                    main: v,
                    eavesdropper: c.victim,
                    role: JamRole::Snatch,
                    weight: cfg.weights[v],
                    pj_cap,
                });
                state.allocation.source_power[c.subcarrier] = state.share_source;
                state.allocation.owner[c.subcarrier] = Some(v);
                state.allocation.jammer_power[c.subcarrier] = pj;
                state.allocation.jammer_active[c.subcarrier] = true;
                state.rates = per_user_rates(ch, &state.allocation);
                reoptimize_user(ch, cfg, state, v, policy);
            }
            // No claim, no affordable snatch: the user retires so the rest
            // can finish.
            None => state.users[v].active = false,
        }
    }
    SchemeOutcome::from_allocation(ch, &cfg.weights, state.allocation.clone(), state.stats)
}

/// One-call runner: initialize, loop, report.
pub fn run_maxmin(ch: &ChannelRealization, cfg: &ScenarioConfig, policy: FairnessPolicy) -> SchemeOutcome {
    let mut state = init_fairness_state(ch, cfg);
    maxmin_loop(ch, cfg, &mut state, policy)
}

/// Jammer-free fair baseline: the proactive policy with nothing to spend,
/// so only best-gain claims are served.
pub fn ospwj_fair(ch: &ChannelRealization, cfg: &ScenarioConfig) -> SchemeOutcome {
    let mut cfg0 = cfg.clone();
    cfg0.jammer_budget = 0.0;
    run_maxmin(ch, &cfg0, FairnessPolicy::Pfa)
}

/// On-demand allocation with a bottomless ledger: admits every feasible
/// snatch at its exact optimum. Upper-bounds what any finite jammer budget
/// can do for the minimum rate.
pub fn maxmin_upper_bound(ch: &ChannelRealization, cfg: &ScenarioConfig) -> SchemeOutcome {
    let mut state = init_fairness_state(ch, cfg);
    let mut cfg_inf = cfg.clone();
    cfg_inf.jammer_budget = f64::INFINITY;
    maxmin_loop(ch, &cfg_inf, &mut state, FairnessPolicy::Oda)
}
