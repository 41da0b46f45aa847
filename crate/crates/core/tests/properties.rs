//! Randomized invariants of the per-subcarrier analysis, the power
//! optimizers, and the full schemes.

use proptest::prelude::*;

use secure_ofdma_core::waterfill::marginal_rate;
use secure_ofdma_core::{
    allocate_subcarriers_best_gain, alternating_optimization, improvement_bounds,
    init_fairness_state, maxmin_loop, partition_sets, pj_threshold_improve, pj_threshold_snatch,
    reorder_bounds, run_scheme, secure_waterfill, snatch_feasible, snr, ChannelRealization,
    FairnessPolicy, GainMatrix, JamRole, JammerRule, ScenarioConfig, SchemeKind, WaterfillEntry,
};

fn pair_rate(ch: &ChannelRealization, m: usize, e: usize, n: usize, ps: f64, pj: f64) -> f64 {
    let own = snr(ps, ch.h(m, n), ch.noise_variance, pj, ch.g(m, n));
    let eve = snr(ps, ch.h(e, n), ch.noise_variance, pj, ch.g(e, n));
    ((1.0 + own) / (1.0 + eve)).log2().max(0.0)
}

fn arb_channel(max_users: usize, max_subs: usize) -> impl Strategy<Value = ChannelRealization> {
    (2..=max_users, 1..=max_subs).prop_flat_map(|(users, subs)| {
        let rows = prop::collection::vec(prop::collection::vec(0.05f64..4.0, subs), users);
        (rows.clone(), rows, 0.25f64..2.0).prop_map(|(h, g, noise_variance)| ChannelRealization {
            source_gain: GainMatrix::from_rows(h),
            jammer_gain: GainMatrix::from_rows(g),
            noise_variance,
        })
    })
}

/// Channel plus a designated pair, a subcarrier, and a source power.
fn arb_pair_scene() -> impl Strategy<Value = (ChannelRealization, usize, usize, usize, f64)> {
    arb_channel(5, 6).prop_flat_map(|ch| {
        let users = ch.num_users();
        let subs = ch.num_subcarriers();
        (Just(ch), 0..users, 1..users, 0..subs, 0.1f64..20.0).prop_map(
            |(ch, m, offset, n, ps)| {
                let e = (m + offset) % ch.num_users();
                (ch, m, e, n, ps)
            },
        )
    })
}

fn arb_budget_scene() -> impl Strategy<Value = (ChannelRealization, f64, f64)> {
    (arb_channel(5, 6), 0.5f64..30.0, 0.0f64..20.0)
}

fn config_for(ch: &ChannelRealization, source_budget: f64, jammer_budget: f64) -> ScenarioConfig {
    let mut cfg = ScenarioConfig::new(ch.num_users(), ch.num_subcarriers());
    cfg.noise_variance = ch.noise_variance;
    cfg.source_budget = source_budget;
    cfg.jammer_budget = jammer_budget;
    cfg
}

proptest! {
    #[test]
    fn improvement_jamming_beats_none_inside_its_window(
        (ch, m, e, n, ps) in arb_pair_scene()
    ) {
        if let Some(b) = improvement_bounds(&ch, m, e, n, ps) {
            prop_assume!(b.upper.is_finite());
            let base = pair_rate(&ch, m, e, n, ps, 0.0);
            let width = b.upper - b.lower;
            for k in 1..=9 {
                let pj = b.lower + width * k as f64 / 10.0;
                prop_assert!(pair_rate(&ch, m, e, n, ps, pj) > base - 1e-10);
            }
            let mid = pair_rate(&ch, m, e, n, ps, b.lower + 0.5 * width);
            prop_assert!(mid > base, "midpoint must beat the jammer-free rate strictly");
        }
    }

    #[test]
    fn designated_ordering_survives_inside_reorder_bounds(
        (ch, m, e, n, ps) in arb_pair_scene()
    ) {
        let role = if ch.h2(m, n) > ch.h2(e, n) { JamRole::Improvement } else { JamRole::Snatch };
        if let Some(b) = reorder_bounds(&ch, m, e, n, role) {
            prop_assume!(b.is_feasible());
            let hi = if b.upper.is_finite() { b.upper } else { (b.lower + 1.0) * 8.0 };
            for k in 1..=7 {
                let pj = b.lower + (hi - b.lower) * k as f64 / 8.0;
                let sm = snr(ps, ch.h(m, n), ch.noise_variance, pj, ch.g(m, n));
                let se = snr(ps, ch.h(e, n), ch.noise_variance, pj, ch.g(e, n));
                prop_assert!(sm >= se);
                for u in 0..ch.num_users() {
                    if u == m || u == e {
                        continue;
                    }
                    let su = snr(ps, ch.h(u, n), ch.noise_variance, pj, ch.g(u, n));
                    prop_assert!(su <= sm, "the receiver must decode strongest");
                    prop_assert!(su <= se, "nobody may outgrow the designated eavesdropper");
                }
            }
        }
    }

    #[test]
    fn ao_objective_trace_never_falls((ch, ps_budget, pj_budget) in arb_budget_scene()) {
        let owners = allocate_subcarriers_best_gain(&ch);
        let weights = vec![1.0; ch.num_users()];
        let ps_init = ps_budget / ch.num_subcarriers() as f64;
        let parts = partition_sets(&ch, &owners, &weights, ps_init, pj_budget);
        prop_assume!(!parts.jammed.is_empty());
        let out = alternating_optimization(
            &ch,
            &parts.jammed,
            ps_budget,
            pj_budget,
            JammerRule::Budgeted,
            None,
        );
        for w in out.trace.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-9);
        }
        prop_assert!(out.source_power.iter().sum::<f64>() <= ps_budget * (1.0 + 1e-9));
        prop_assert!(out.jammer_power.iter().sum::<f64>() <= pj_budget * (1.0 + 1e-9) + 1e-12);
    }
}

proptest! {
    // conditioning on feasible improvement or snatch pairs rejects most raw
    // draws, so these two get a roomier reject ceiling
    #![proptest_config(ProptestConfig {
        max_global_rejects: 16384,
        ..ProptestConfig::default()
    })]

    #[test]
    fn pair_rate_is_unimodal_below_the_identity_threshold(
        (ch, m, e, n, ps) in arb_pair_scene()
    ) {
        prop_assume!(improvement_bounds(&ch, m, e, n, ps).is_some());
        let th = pj_threshold_improve(&ch, m, e, n, ps);
        prop_assume!(th.is_finite() && th > 0.0);
        let rates: Vec<f64> = (1..48)
            .map(|k| pair_rate(&ch, m, e, n, ps, th * k as f64 / 48.0))
            .collect();
        let peak = rates
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .map(|(i, _)| i)
            .unwrap();
        for w in rates[..=peak].windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-9, "must climb left of the peak");
        }
        for w in rates[peak..].windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-9, "must fall right of the peak");
        }
    }

    #[test]
    fn snatched_rate_is_positive_exactly_above_the_threshold(
        (ch, a, b, n, ps) in arb_pair_scene()
    ) {
        // orient the pair: the weak-gain side is the snatcher
        let (m, e) = if ch.h2(a, n) < ch.h2(b, n) { (a, b) } else { (b, a) };
        prop_assume!(ch.h2(m, n) < ch.h2(e, n));
        prop_assume!(snatch_feasible(&ch, m, e, n));
        let th = pj_threshold_snatch(&ch, m, e, n);
        prop_assert!(th > 0.0);
        prop_assume!(th.is_finite() && th > 1e-9);
        for factor in [0.2, 0.6, 0.95] {
            prop_assert_eq!(pair_rate(&ch, m, e, n, ps, factor * th), 0.0);
        }
        for factor in [1.05, 1.5, 3.0, 50.0] {
            prop_assert!(pair_rate(&ch, m, e, n, ps, factor * th) > 0.0);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn every_scheme_returns_a_feasible_allocation(
        (ch, ps_budget, pj_budget) in arb_budget_scene()
    ) {
        let cfg = config_for(&ch, ps_budget, pj_budget);
        for kind in SchemeKind::ALL {
            let out = run_scheme(kind, &ch, &cfg);
            prop_assert!(
                out.allocation.check_feasible(cfg.source_budget, cfg.jammer_budget).is_ok(),
                "{kind} broke feasibility"
            );
            prop_assert_eq!(out.user_rates.len(), ch.num_users());
            for n in 0..ch.num_subcarriers() {
                if let Some(u) = out.allocation.owner[n] {
                    prop_assert!(u < ch.num_users());
                }
            }
            prop_assert!(out.fairness_gap >= 0.0 && out.fairness_gap <= 1.0);
            prop_assert!(out.sum_weighted_rate >= -1e-12);
        }
    }

    #[test]
    fn zero_jammer_budget_collapses_the_jammed_schemes(
        (ch, ps_budget, _pj) in arb_budget_scene()
    ) {
        let cfg = config_for(&ch, ps_budget, 0.0);
        let plain = run_scheme(SchemeKind::Ospwj, &ch, &cfg);
        for kind in [SchemeKind::Jpa, SchemeKind::Jpaso] {
            let out = run_scheme(kind, &ch, &cfg);
            prop_assert_eq!(&out.allocation.source_power, &plain.allocation.source_power);
            let jam: f64 = (0..ch.num_subcarriers())
                .map(|n| out.allocation.effective_jammer_power(n))
                .sum();
            prop_assert_eq!(jam, 0.0);
        }
    }

    #[test]
    fn maxmin_quiesces_inside_its_pass_budget(
        (ch, ps_budget, pj_budget) in arb_budget_scene()
    ) {
        let cfg = config_for(&ch, ps_budget, pj_budget);
        let cap = ch.num_users() + ch.num_subcarriers();
        for policy in [
            FairnessPolicy::Pfa,
            FairnessPolicy::Oda,
            FairnessPolicy::Pfaso,
            FairnessPolicy::Odaso,
        ] {
            let mut state = init_fairness_state(&ch, &cfg);
            let out = maxmin_loop(&ch, &cfg, &mut state, policy);
            prop_assert!(out.iterations.outer_iterations <= cap);
            let free_left = state.free.iter().any(|&f| f);
            let active_left = state.users.iter().any(|u| u.active);
            prop_assert!(
                !free_left || !active_left,
                "the loop may stop only once claims or claimants run out"
            );
        }
    }
}

proptest! {
    #[test]
    fn waterfill_clears_the_price_and_the_budget(
        raw in prop::collection::vec((0.05f64..5.0, 0.0f64..5.0, 0.2f64..3.0), 1..8),
        budget in 0.01f64..50.0
    ) {
        let entries: Vec<WaterfillEntry> = raw
            .iter()
            .map(|&(eta, gap, weight)| WaterfillEntry {
                inverse_main_gain: eta,
                inverse_eve_gain: eta + gap,
                weight,
            })
            .collect();
        let sol = secure_waterfill(&entries, budget);
        let spent: f64 = sol.powers.iter().sum();
        if sol.multiplier.is_finite() {
            let lam = sol.multiplier;
            let scale = lam.max(1.0);
            prop_assert!((spent - budget).abs() <= 1e-6 * budget.max(1.0));
            for (entry, &p) in entries.iter().zip(&sol.powers) {
                if p > 1e-9 {
                    prop_assert!((marginal_rate(entry, p) - lam).abs() <= 1e-6 * scale);
                } else {
                    prop_assert!(marginal_rate(entry, 0.0) <= lam + 1e-6 * scale);
                }
            }
        } else {
            prop_assert_eq!(spent, 0.0, "no price means nothing was worth funding");
        }
    }
}
