use std::time::Instant;

use secure_ofdma_core::asymptotic::rate_upper_curve;
use secure_ofdma_core::channel::{generate_channels, ScenarioConfig};
use secure_ofdma_core::maxmin::{maxmin_upper_bound, run_maxmin, FairnessPolicy};
use secure_ofdma_core::schemes::jpa;

fn main() {
    // Criterion 5a salt, 500 trials: R_U violation crossover in P_S.
    for ps_db in [15.0, 18.0, 21.0, 24.0, 27.0] {
        let t = Instant::now();
        let base = ScenarioConfig::new(8, 64).with_source_db(ps_db).with_jammer_db(6.0);
        let mut viol = 0usize;
        let mut worst = f64::NEG_INFINITY;
        let mut sum_excess = 0.0;
        for tr in 0..500u64 {
            let mut cfg = base.clone();
            cfg.rng_seed = 0xAC5E_0005 ^ tr;
            let ch = generate_channels(&cfg);
            let j = jpa(&ch, &cfg).sum_weighted_rate;
            let ru = rate_upper_curve(&ch, &cfg, &[cfg.source_budget])[0];
            if j > ru + 1e-9 {
                viol += 1;
                sum_excess += j - ru;
            }
            worst = worst.max(j - ru);
        }
        println!(
            "RU@{ps_db}dB: viol {viol}/500 worst {worst:.3} mean-excess {:.3}, {:?}",
            if viol > 0 { sum_excess / viol as f64 } else { 0.0 },
            t.elapsed()
        );
    }

    // Criterion 5e salt, 500 trials: fairness orderings and the ODA-vs-bound
    // tail at candidate endpoints.
    for ps_db in [3.0, 6.0, 9.0, 12.0] {
        let t = Instant::now();
        let base = ScenarioConfig::new(8, 64).with_source_db(ps_db).with_jammer_db(12.0);
        let (mut fp, mut fo) = (0.0, 0.0);
        let mut viol = 0usize;
        let mut worst = f64::NEG_INFINITY;
        for tr in 0..500u64 {
            let mut cfg = base.clone();
            cfg.rng_seed = 0xAC5E_0E05 ^ tr;
            let ch = generate_channels(&cfg);
            let p = 1.0 - run_maxmin(&ch, &cfg, FairnessPolicy::Pfa).fairness_gap;
            let o = 1.0 - run_maxmin(&ch, &cfg, FairnessPolicy::Oda).fairness_gap;
            let u = 1.0 - maxmin_upper_bound(&ch, &cfg).fairness_gap;
            fp += p;
            fo += o;
            if o > u + 1e-9 {
                viol += 1;
            }
            worst = worst.max(o - u);
        }
        println!(
            "F ps={ps_db}: pfa {:.6} oda {:.6} (oda-pfa {:+.6}) viol {viol} worst {worst:.2e}, {el:?}",
            fp / 500.0,
            fo / 500.0,
            (fo - fp) / 500.0,
            el = t.elapsed()
        );
    }
}
