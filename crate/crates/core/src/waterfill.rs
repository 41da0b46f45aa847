//! Water-filling of source power against secrecy objectives.
//!
//! Each subcarrier contributes `w * log2((1 + p/eta) / (1 + p/nu))` to the
//! objective, where `eta` and `nu` are the inverse effective power gains of
//! the main user and its designated eavesdropper (`noise / gain^2`, with
//! any jamming folded into the noise term). The per-subcarrier optimum for
//! a given water level has a closed form; the level itself is found by
//! bisection on the monotone total-power curve.

/// One subcarrier's inputs to [`secure_waterfill`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaterfillEntry {
    /// Inverse effective gain of the main user (`eta`).
    pub inverse_main_gain: f64,
    /// Inverse effective gain of the eavesdropper (`nu`). Secure power is
    /// only spent where `nu > eta`.
    pub inverse_eve_gain: f64,
    pub weight: f64,
}

/// Result of a water-filling run. `multiplier` is the water-level dual
/// variable; it is `inf` when the budget is zero or nothing is worth
/// funding (the constraint is slack at zero power).
#[derive(Debug, Clone, PartialEq)]
pub struct WaterfillSolution {
    pub powers: Vec<f64>,
    pub multiplier: f64,
}

/// Closed-form per-subcarrier power for inverse gains `eta < nu` and
/// price term `kappa = 4 w / (lambda ln 2)`; zero when the price is too
/// high or the pair cannot earn a secure rate.
pub fn secure_power(eta: f64, nu: f64, kappa: f64) -> f64 {
    let diff = nu - eta;
    if diff <= 0.0 {
        return 0.0;
    }
    let root = (diff * diff + kappa * diff).sqrt();
    (0.5 * (root - (nu + eta))).max(0.0)
}

/// Marginal secure rate of one entry at power `p`.
#[inline]
pub fn marginal_rate(entry: &WaterfillEntry, p: f64) -> f64 {
    let (eta, nu) = (entry.inverse_main_gain, entry.inverse_eve_gain);
    entry.weight / std::f64::consts::LN_2 * (1.0 / (p + eta) - 1.0 / (p + nu))
}

fn total_power(entries: &[WaterfillEntry], lambda: f64) -> f64 {
    entries
        .iter()
        .map(|e| {
            let kappa = 4.0 * e.weight / (lambda * std::f64::consts::LN_2);
            secure_power(e.inverse_main_gain, e.inverse_eve_gain, kappa)
        })
        .sum()
}

/// Relative tolerance on the spent budget.
pub const BUDGET_TOLERANCE: f64 = 1e-8;

/// Splits `budget` across `entries` to maximize the weighted secure-rate
/// sum. Entries that cannot earn (eavesdropper at least as strong as the
/// main user) or are priced out receive zero.
///
/// The returned powers sum to `budget` within `1e-8 * budget` whenever any
/// entry can absorb power; the sum never exceeds the budget.
pub fn secure_waterfill(entries: &[WaterfillEntry], budget: f64) -> WaterfillSolution {
    let zeros = WaterfillSolution { powers: vec![0.0; entries.len()], multiplier: f64::INFINITY };
    if budget <= 0.0 || entries.is_empty() {
        return zeros;
    }
    // Highest price any entry would pay: its marginal rate at zero power.
    let lambda_hi = entries
        .iter()
        .map(|e| marginal_rate(e, 0.0))
        .fold(0.0f64, f64::max);
    if lambda_hi <= 0.0 {
        return zeros;
    }

    let mut hi = lambda_hi;
    let mut lo = lambda_hi;
    for _ in 0..2100 {
        lo *= 0.5;
        if total_power(entries, lo) >= budget {
            break;
        }
        hi = lo;
    }
    if total_power(entries, lo) < budget {
        // Budget outruns every finite water level; numerically impossible
        // for positive-gap entries, but return the best we can spend.
        lo = f64::MIN_POSITIVE;
    }

    let mut lambda = f64::NAN;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let spent = total_power(entries, mid);
        if (spent - budget).abs() <= BUDGET_TOLERANCE * budget {
            lambda = mid;
            break;
        }
        if spent > budget {
            lo = mid;
        } else {
            hi = mid;
        }
        lambda = mid;
    }

    let mut powers: Vec<f64> = entries
        .iter()
        .map(|e| {
            let kappa = 4.0 * e.weight / (lambda * std::f64::consts::LN_2);
            secure_power(e.inverse_main_gain, e.inverse_eve_gain, kappa)
        })
        .collect();
    // Land exactly on the budget; the correction is within the bisection
    // tolerance so it cannot disturb optimality measurably.
    let spent: f64 = powers.iter().sum();
    if spent > 0.0 {
        let scale = budget / spent;
        if (scale - 1.0).abs() < 1e-6 {
            for p in &mut powers {
                *p *= scale;
            }
        }
    }
    WaterfillSolution { powers, multiplier: lambda }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rate(entry: &WaterfillEntry, p: f64) -> f64 {
        entry.weight
            * ((1.0 + p / entry.inverse_main_gain) / (1.0 + p / entry.inverse_eve_gain)).log2()
    }

    fn objective(entries: &[WaterfillEntry], powers: &[f64]) -> f64 {
        entries.iter().zip(powers).map(|(e, &p)| rate(e, p)).sum()
    }

    #[test]
    fn closed_form_power_basics() {
        // Single entry, generous price: positive power.
        assert!(secure_power(0.5, 2.0, 10.0) > 0.0);
        // Hopeless pair: eavesdropper at least as strong.
        assert_eq!(secure_power(2.0, 2.0, 10.0), 0.0);
        assert_eq!(secure_power(2.0, 1.0, 10.0), 0.0);
        // Priced out: tiny kappa.
        assert_eq!(secure_power(0.5, 2.0, 1e-9), 0.0);
    }

    #[test]
    fn single_entry_gets_whole_budget() {
        let entries = [WaterfillEntry {
            inverse_main_gain: 0.4,
            inverse_eve_gain: 3.0,
            weight: 1.0,
        }];
        let sol = secure_waterfill(&entries, 5.0);
        assert!((sol.powers[0] - 5.0).abs() < 5.0 * 1e-7);
        assert!(sol.multiplier.is_finite());
        // The multiplier equals the marginal rate at the solution.
        let m = marginal_rate(&entries[0], sol.powers[0]);
        assert!((m - sol.multiplier).abs() < 1e-6 * m.max(1.0));
    }

    #[test]
    fn budget_exhausted_and_never_exceeded() {
        let entries = [
            WaterfillEntry { inverse_main_gain: 0.2, inverse_eve_gain: 1.0, weight: 1.0 },
            WaterfillEntry { inverse_main_gain: 0.5, inverse_eve_gain: 4.0, weight: 1.0 },
            WaterfillEntry { inverse_main_gain: 1.0, inverse_eve_gain: 1.2, weight: 1.0 },
            WaterfillEntry { inverse_main_gain: 3.0, inverse_eve_gain: 0.5, weight: 1.0 },
        ];
        for budget in [0.1, 1.0, 10.0, 100.0] {
            let sol = secure_waterfill(&entries, budget);
            let spent: f64 = sol.powers.iter().sum();
            assert!(spent <= budget * (1.0 + 1e-9), "budget {budget} exceeded: {spent}");
            assert!(
                (spent - budget).abs() <= 1e-7 * budget,
                "budget {budget} not filled: {spent}"
            );
            assert_eq!(sol.powers[3], 0.0, "hopeless entry funded");
        }
    }

    #[test]
    fn zero_budget_returns_infinite_multiplier() {
        let entries = [WaterfillEntry { inverse_main_gain: 0.5, inverse_eve_gain: 2.0, weight: 1.0 }];
        let sol = secure_waterfill(&entries, 0.0);
        assert_eq!(sol.powers, vec![0.0]);
        assert!(sol.multiplier.is_infinite());
        assert_eq!(secure_waterfill(&[], 3.0).powers.len(), 0);
    }

    /// Two-entry split checked against a dense grid over the simplex.
    #[test]
    fn beats_grid_search_on_two_entries() {
        let entries = [
            WaterfillEntry { inverse_main_gain: 0.3, inverse_eve_gain: 2.0, weight: 1.0 },
            WaterfillEntry { inverse_main_gain: 0.8, inverse_eve_gain: 5.0, weight: 2.0 },
        ];
        let budget = 4.0;
        let sol = secure_waterfill(&entries, budget);
        let ours = objective(&entries, &sol.powers);
        let mut best = f64::NEG_INFINITY;
        let mut best_split = 0.0;
        for i in 0..=100_000 {
            let p0 = budget * i as f64 / 100_000.0;
            let v = objective(&entries, &[p0, budget - p0]);
            if v > best {
                best = v;
                best_split = p0;
            }
        }
        assert!(
            ours >= best - 1e-7,
            "waterfill {ours} lags grid best {best} (split {best_split})"
        );
    }

    /// At the optimum, active entries share one marginal rate and inactive
    /// entries cannot beat it (complementary slackness).
    #[test]
    fn equalizes_marginal_rates() {
        let entries = [
            WaterfillEntry { inverse_main_gain: 0.2, inverse_eve_gain: 3.0, weight: 1.0 },
            WaterfillEntry { inverse_main_gain: 0.4, inverse_eve_gain: 2.5, weight: 1.5 },
            WaterfillEntry { inverse_main_gain: 0.9, inverse_eve_gain: 1.0, weight: 1.0 },
        ];
        let sol = secure_waterfill(&entries, 6.0);
        for (e, &p) in entries.iter().zip(&sol.powers) {
            if p > 0.0 {
                let m = marginal_rate(e, p);
                assert!(
                    (m - sol.multiplier).abs() <= 1e-5 * sol.multiplier,
                    "active entry marginal {m} vs level {}",
                    sol.multiplier
                );
            } else {
                assert!(marginal_rate(e, 0.0) <= sol.multiplier * (1.0 + 1e-9));
            }
        }
    }

    #[test]
    fn weights_shift_power_toward_heavy_entries() {
        let base = WaterfillEntry { inverse_main_gain: 0.5, inverse_eve_gain: 3.0, weight: 1.0 };
        let heavy = WaterfillEntry { weight: 4.0, ..base };
        let sol = secure_waterfill(&[base, heavy], 2.0);
        assert!(sol.powers[1] > sol.powers[0]);
    }
}
