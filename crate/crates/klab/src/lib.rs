//! klab: an exact desk-scale laboratory for plain and prefix-free
//! Kolmogorov complexity on a frozen reference machine.
//!
//! The crate enumerates every program up to a length bound on a small
//! deterministic bit machine, tabulates time-bounded complexities
//! C_T(x|cond) and K_T(x|cond) for all short strings, and measures the
//! additive slack in the symmetry-of-information identities that relate
//! the complexity of a pair to conditional complexities of its parts.

pub mod bitcodec;
pub mod cli;
pub mod config;
pub mod constants;
pub mod enumerator;
pub mod machine;
pub mod theorems;
