//! Hierarchical random walks on the infinite direct sum of cyclic groups,
//! occupation-time fluctuations of particle systems driven by them, and the
//! oscillatory fractional Gaussian processes that arise as their limits.

pub mod analysis;
pub mod error;
pub mod gp_sampler;
pub mod hiergroup;
pub mod kernels;
pub mod logsum;
pub mod particles;
pub mod quad;
pub mod rng;
pub mod verify;
pub mod walk;

pub use analysis::{Bound, CovEstimate, Report};
pub use error::{Error, Result};
pub use gp_sampler::{Grid, PathEnsemble};
pub use hiergroup::{GroupElement, HierParams};
pub use kernels::{Family, KernelSpec};
pub use particles::{Branching, Regime, Simulator, SupportFn, SystemConfig, ThetaLaw};
pub use verify::Suite;
pub use walk::{RadialFn, Trajectory};
