//! Constructive adversary: type coverings, ordered strategies, the counting
//! function, attack evaluation and brute-force oracles.

mod attack;
mod covering;
mod greedy;
mod oracle;
mod strategy;

pub use attack::{counting_function, exact_expected_guesses, simulate_attack, AttackMode, AttackReport, GuessIndex};
pub use covering::{build_covering, build_covering_with, verify_covering, CandidatePool, CoveringOptions, CoveringSet};
pub use oracle::{
    oracle_best_strategy, oracle_best_strategy_with, OracleMethod, OracleOptions, OracleResult, GREEDY_APPROXIMATION,
    MAX_EXHAUSTIVE,
};
pub use strategy::{build_strategy, build_strategy_with, Segment, SegmentOrder, Strategy, StrategyOptions};

pub(crate) use attack::{first_accepted, guess_table, run_blocks};
pub(crate) use covering::{check_limit_value, cover_members, stream_key};
