//! Gauge-invariant geometry of parameterized families of pure quantum states.
//!
//! A family is a map from a real parameter space into complex projective
//! space. Everything computed here depends only on the rays, never on the
//! phase convention of the amplitudes: Bargmann invariants and the three-point
//! phase, Berry phases, the quantum geometric tensor and connection, the
//! symmetric three-tensor `T`, ambient and intrinsic distances, state
//! reconstruction from invariants, and Brillouin-zone band observables.
//!
//! The crate is `no_std` and only needs an allocator.

#![no_std]
// `Float` methods resolve to the inherent versions whenever std is in the
// build graph, which leaves the trait import unused.
#![allow(unused_imports)]
#![allow(clippy::needless_range_loop)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod band;
pub mod config;
pub mod connection;
pub mod deriv;
pub mod error;
pub mod extrinsic;
pub mod invariants;
pub mod linalg;
pub mod local_geom;
pub mod models;
pub mod states;
pub mod tomography;

pub use config::Tolerances;
pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use states::{Family, KernelFamily, Projector, StateFamily, StateVector};
