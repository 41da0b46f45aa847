//! Resource allocation for secure OFDMA downlinks with untrusted users.
//!
//! Every user of the cell is a potential eavesdropper on every other user,
//! and a friendly jammer can degrade the eavesdroppers' reception. This
//! crate implements the channel model, the per-subcarrier secrecy analysis
//! (when jamming helps, how much jammer power keeps the user ordering
//! intact, where the optimum lies), the sum-rate and max-min allocation
//! schemes built on that analysis, their asymptotic benchmarks, and a small
//! Monte-Carlo harness for reproducing the performance trends.

pub mod analysis;
pub mod asymptotic;
pub mod channel;
pub mod harness;
pub mod jammer_power;
pub mod maxmin;
pub mod optimizer;
pub mod rate;
pub mod schemes;
pub mod waterfill;

pub use channel::{
    builtin_fixture, emit_channels, generate_channels, load_channels, ChannelRealization,
    ConfigError, FixtureError, GainMatrix, Rect, ScenarioConfig, BUILTIN_FIXTURE,
    BUILTIN_FIXTURE_NAME,
};
pub use analysis::{
    analyze_subcarrier, clamp_pj, improvement_bounds, optimal_pj, pj_threshold_improve,
    pj_threshold_snatch, ps_threshold, rank_by_source_gain, rate_improvement_feasible,
    reorder_bounds, snatch_bounds, snatch_feasible, AnalysisError, JamRole, JammerAnalysisResult,
    JammerBounds, SnatchOption,
};
pub use asymptotic::{
    asymptotic_main_user, asymptotic_pair_rate, asymptotic_verdict, rate_upper_curve,
    AsymptoticMode, AsymptoticVerdict,
};
pub use harness::{
    emit_csv, parse_csv, run_scheme, run_sweep, summary_table, AggregateRow, SchemeKind,
    SweepAxis, SweepError, SweepSpec, SweepValue, CSV_HEADER,
};
pub use jammer_power::{
    allocate_jammer_budget, solve_quartic_root, suboptimal_jammer_allocation, JammerAllocation,
    JammerDemand, QuarticCoeffs, SlackRule, SuboptimalPair,
};
pub use maxmin::{
    init_fairness_state, maxmin_loop, maxmin_upper_bound, ospwj_fair, run_maxmin,
    FairnessPolicy, FairnessState, FairnessUser, SnatchCandidate,
};
pub use optimizer::{
    alternating_optimization, jammer_demands, member_bounds, primal_decomposition, AoOutcome,
    JammedSubcarrier, JammerRule, PdOutcome, PlainSubcarrier, AO_MAX_ITERATIONS,
    PD_MAX_ITERATIONS,
};
pub use rate::{
    eavesdropper_of, fairness_gap, per_user_rates, secure_rate, snr, sum_weighted_rate,
    IterationStats, PowerAllocation, SchemeOutcome,
};
pub use schemes::{
    allocate_subcarriers_best_gain, epa, jpa, jpaso, ospwj, partition_sets, SetPartition,
};
pub use waterfill::{secure_power, secure_waterfill, WaterfillEntry, WaterfillSolution};
