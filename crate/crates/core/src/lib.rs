//! Reversible probabilistic cellular automata on ±1 spin lattices.

pub mod contours;
pub mod dynamics;
pub mod error;
pub mod exact;
pub mod gibbs;
pub mod grid;
pub mod model;
pub mod montecarlo;
pub mod rng;
pub mod verify;

pub use dynamics::TransitionContext;
pub use error::{Error, Result};
pub use exact::{Distribution, TransitionMatrix};
pub use model::{BoundaryCondition, CouplingKernel, LatticeBox, Norm, PcaParams, Site, Spin, SpinConfig, Tau};
pub use rng::{CounterRng, UniformSource};
