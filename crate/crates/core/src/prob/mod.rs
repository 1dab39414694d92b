//! Finite-alphabet probability primitives shared by every other module.

mod distortion;
mod pmf;
pub mod seq;
mod types;

pub use distortion::{DistortionSpec, DISTORTION_SLACK};
pub use pmf::{
    conditional_renyi_half_entropy, entropy, joint_relative_entropy, kl_divergence, neg_p_ln_p, relative_entropy,
    renyi_half_entropy, JointPmf, Pmf, MASS_TOL,
};
pub use seq::Seq;
pub use types::{
    count_types, enumerate_types, enumerate_types_with_limit, log_type_class_prob, log_type_class_size, Compositions,
    TypeComposition, DEFAULT_TYPE_LIMIT,
};
