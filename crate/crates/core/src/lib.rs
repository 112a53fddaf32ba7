//! A cerebellum-like network that learns the torque equation of a planar
//! arm one term at a time.
//!
//! - [`dynamics`] is the exact Lagrange-Euler oracle and its term breakdown.
//! - [`encoding`] holds the tile codes of joint position and the granule/Golgi loop.
//! - [`network`] contains the processing units, microzones, baskets, stellates and NLMS training.
//! - [`experiment`] covers configs, datasets and reports for end-to-end runs.
//! - [`arch`] does memory and latency arithmetic for table-based controllers.
//!
//! The guide in `book/` walks through each piece. Its code blocks are
//! compiled as doctests of this crate.

pub mod arch;
pub mod dynamics;
pub mod encoding;
pub mod experiment;
pub mod network;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/dynamics.md")]
    mod dynamics {}
    #[doc = include_str!("../../../book/src/encoding.md")]
    mod encoding {}
    #[doc = include_str!("../../../book/src/golgi.md")]
    mod golgi {}
    #[doc = include_str!("../../../book/src/network.md")]
    mod network {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
    #[doc = include_str!("../../../book/src/architecture.md")]
    mod architecture {}
}
