//! Deception exponents for distortion-tolerant authentication under a
//! guessing adversary.
//!
//! The crate computes `E(D) = max_Q [R(D, Q) - D(Q || P)]` (and its
//! side-information counterpart), builds the adversary's type-covering
//! guessing strategy, and evaluates attacks exactly or by seeded Monte Carlo.
//! All information quantities are in nats.

pub mod error;
pub mod exponent;
pub mod guessing;
pub mod prob;
pub mod rd;
pub mod side_info;
pub mod strategy_io;

pub use error::{Error, Result};
pub use exponent::{
    converse_lower_bound, deception_exponent, deception_exponent_si, deception_exponent_si_with,
    deception_exponent_with, Argmax, ExponentOptions, ExponentResult,
};
pub use guessing::{
    build_covering, build_strategy, counting_function, exact_expected_guesses, oracle_best_strategy, simulate_attack,
    AttackMode, AttackReport, CoveringSet, GuessIndex, Strategy,
};
pub use prob::{DistortionSpec, JointPmf, Pmf, TypeComposition};
pub use rd::{
    conditional_rate_distortion, conditional_rate_distortion_with, rate_distortion, rate_distortion_with, rd_curve,
    rd_curve_with, RdOptions, RdResult,
};
pub use side_info::{build_si_strategy, evaluate_si_attack, si_counting_function, SiStrategy};
