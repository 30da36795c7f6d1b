pub mod converge;
pub mod couple;
pub mod critical;
pub mod hydro;
pub mod kernels;
pub mod masswalk;
pub mod stationary;
pub mod subcritical;

/// Decorrelate a derived stream family from the primary one.
pub(crate) fn stream_offset(seed: u64) -> u64 {
    seed ^ 0x9e37_79b9_7f4a_7c15
}
