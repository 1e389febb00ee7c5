//! Heat kernels, Brownian paths and Feynman-Kac estimates on model
//! manifolds: Euclidean space, hyperbolic 3-space, flat tori and circles,
//! and the Dirichlet interval with its one-point compactification.
//!
//! Conventions: the generator is the Laplacian `Delta` (not `Delta / 2`),
//! so one Euclidean coordinate of `X_t` has variance `2t`; kernels are
//! written `p_t(x, y)` with `x` the destination and `y` the source.

pub mod diagnostics;
pub mod ensemble;
pub mod error;
pub mod feynman_kac;
pub mod heat_kernel;
pub mod io;
pub mod manifold;
pub mod path_sampler;
pub mod quadrature;
pub mod rng;
pub mod stats;

pub use ensemble::{EstimateWithError, Workers};
pub use error::{Error, Result};
pub use feynman_kac::{FKProblem, Potential, Terminal};
pub use heat_kernel::{KernelKind, TransitionKernel, TruncationPolicy};
pub use manifold::{CoveringDescriptor, ManifoldModel, Point};
pub use path_sampler::{Path, TimeGrid};
pub use rng::{RngContract, DEFAULT_SEED};
