//! Secrecy rates under jamming, and the allocation bookkeeping they act on.
//!
//! Each subcarrier carries one user's data. Every other user can try to
//! decode it, so the secure rate is the owner's rate minus the strongest
//! eavesdropper's rate, floored at zero. When the jammer is active on a
//! subcarrier its power degrades everyone's SNR on that subcarrier; the
//! allocation schemes arrange for the degradation to hit the eavesdroppers
//! harder than the owner.

use crate::channel::ChannelRealization;

/// Received SNR for a single link:
/// `ps * h^2 / (noise + pj * g^2)`, with `h`, `g` gain magnitudes.
#[inline]
pub fn snr(source_power: f64, source_gain: f64, noise: f64, jammer_power: f64, jammer_gain: f64) -> f64 {
    source_power * source_gain * source_gain
        / (noise + jammer_power * jammer_gain * jammer_gain)
}

/// Powers and ownership for every subcarrier of a scenario.
///
/// `jammer_power[n]` only counts when `jammer_active[n]` is set; inactive
/// subcarriers keep a zero entry so the two stay consistent.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerAllocation {
    pub source_power: Vec<f64>,
    pub jammer_power: Vec<f64>,
    pub owner: Vec<Option<usize>>,
    pub jammer_active: Vec<bool>,
}

impl PowerAllocation {
    pub fn empty(num_subcarriers: usize) -> Self {
        PowerAllocation {
            source_power: vec![0.0; num_subcarriers],
            jammer_power: vec![0.0; num_subcarriers],
            owner: vec![None; num_subcarriers],
            jammer_active: vec![false; num_subcarriers],
        }
    }

    pub fn num_subcarriers(&self) -> usize {
        self.source_power.len()
    }

    /// Jammer power actually radiated on subcarrier `n`.
    #[inline]
    pub fn effective_jammer_power(&self, n: usize) -> f64 {
        if self.jammer_active[n] {
            self.jammer_power[n]
        } else {
            0.0
        }
    }

    /// Relative slack allowed on budget sums.
    pub const BUDGET_TOLERANCE: f64 = 1e-9;

    /// Checks the feasibility invariants: non-negative powers, budget sums
    /// within tolerance, and inactive subcarriers carrying no jammer power.
    pub fn check_feasible(&self, source_budget: f64, jammer_budget: f64) -> Result<(), String> {
        for n in 0..self.num_subcarriers() {
            if !(self.source_power[n] >= 0.0) {
                return Err(format!("negative source power on subcarrier {n}"));
            }
            if !(self.jammer_power[n] >= 0.0) {
                return Err(format!("negative jammer power on subcarrier {n}"));
            }
            if !self.jammer_active[n] && self.jammer_power[n] != 0.0 {
                return Err(format!("inactive subcarrier {n} holds jammer power"));
            }
        }
        let ps: f64 = self.source_power.iter().sum();
        if ps > source_budget * (1.0 + Self::BUDGET_TOLERANCE) + f64::MIN_POSITIVE {
            return Err(format!("source budget exceeded: {ps} > {source_budget}"));
        }
        let pj: f64 = self.jammer_power.iter().sum();
        if pj > jammer_budget * (1.0 + Self::BUDGET_TOLERANCE) + f64::MIN_POSITIVE {
            return Err(format!("jammer budget exceeded: {pj} > {jammer_budget}"));
        }
        Ok(())
    }
}

/// Strongest eavesdropper of user `m` on subcarrier `n` under the given
/// allocation. Ties resolve to the lowest user index.
pub fn eavesdropper_of(ch: &ChannelRealization, alloc: &PowerAllocation, m: usize, n: usize) -> usize {
    let pj = alloc.effective_jammer_power(n);
    let ps = alloc.source_power[n];
    let mut best = usize::MAX;
    let mut best_snr = f64::NEG_INFINITY;
    for e in 0..ch.num_users() {
        if e == m {
            continue;
        }
        let s = snr(ps, ch.h(e, n), ch.noise_variance, pj, ch.g(e, n));
        if s > best_snr {
            best_snr = s;
            best = e;
        }
    }
    best
}

/// Secure rate of user `m` on subcarrier `n`: the positive part of the gap
/// between `m`'s rate and the strongest eavesdropper's rate.
pub fn secure_rate(ch: &ChannelRealization, alloc: &PowerAllocation, m: usize, n: usize) -> f64 {
    let ps = alloc.source_power[n];
    if ps <= 0.0 {
        return 0.0;
    }
    let pj = alloc.effective_jammer_power(n);
    let e = eavesdropper_of(ch, alloc, m, n);
    let own = snr(ps, ch.h(m, n), ch.noise_variance, pj, ch.g(m, n));
    let eve = snr(ps, ch.h(e, n), ch.noise_variance, pj, ch.g(e, n));
    (((1.0 + own) / (1.0 + eve)).log2()).max(0.0)
}

/// Per-user totals over the subcarriers each user owns.
pub fn per_user_rates(ch: &ChannelRealization, alloc: &PowerAllocation) -> Vec<f64> {
    let mut rates = vec![0.0; ch.num_users()];
    for n in 0..alloc.num_subcarriers() {
        if let Some(m) = alloc.owner[n] {
            rates[m] += secure_rate(ch, alloc, m, n);
        }
    }
    rates
}

/// Weighted sum of per-user rates.
pub fn sum_weighted_rate(rates: &[f64], weights: &[f64]) -> f64 {
    rates.iter().zip(weights).map(|(r, w)| r * w).sum()
}

/// Spread of the rate vector: `(max - min) / max`, or 0 when every rate is
/// zero. Lower is fairer; the complementary index `1 - gap` is reported by
/// the simulation harness.
pub fn fairness_gap(rates: &[f64]) -> f64 {
    let max = rates.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = rates.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(max > 0.0) {
        return 0.0;
    }
    (max - min) / max
}

/// Iteration counters reported by the optimizing schemes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IterationStats {
    /// Outer coupling-variable iterations.
    pub outer_iterations: usize,
    /// Alternating-optimization sweeps, summed over outer iterations.
    pub ao_iterations: usize,
    /// Price-update steps spent in jammer budget searches.
    pub price_steps: usize,
}

impl IterationStats {
    pub fn absorb(&mut self, other: IterationStats) {
        self.outer_iterations += other.outer_iterations;
        self.ao_iterations += other.ao_iterations;
        self.price_steps += other.price_steps;
    }
}

/// Everything a scheme returns: the allocation it committed to and the
/// metrics derived from it.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeOutcome {
    pub user_rates: Vec<f64>,
    pub sum_weighted_rate: f64,
    pub fairness_gap: f64,
    pub allocation: PowerAllocation,
    pub iterations: IterationStats,
}

impl SchemeOutcome {
    /// Evaluates an allocation: rates via [`secure_rate`] with the true
    /// strongest eavesdropper, then the aggregate metrics.
    pub fn from_allocation(
        ch: &ChannelRealization,
        weights: &[f64],
        allocation: PowerAllocation,
        iterations: IterationStats,
    ) -> Self {
        let user_rates = per_user_rates(ch, &allocation);
        let sum = sum_weighted_rate(&user_rates, weights);
        let gap = fairness_gap(&user_rates);
        SchemeOutcome {
            user_rates,
            sum_weighted_rate: sum,
            fairness_gap: gap,
            allocation,
            iterations,
        }
    }
}
