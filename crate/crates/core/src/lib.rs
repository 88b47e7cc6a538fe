//! Simulation and verification toolkit for conservative stochastic PDEs
//! `∂ρ = ΔΦ(ρ) − ∇·ν(ρ) − ∇·B(ρ) − f(ρ) − √ε ∇·(σ(ρ) ξ)` on the periodic torus.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod coefficients;
pub mod ensemble;
pub mod ergodicity;
pub mod error;
pub mod flow;
pub mod grid;
pub mod harness;
pub mod noise;
pub mod solver;
pub mod stats;

pub use coefficients::{preset, CoefficientSet, PresetName, PresetParams};
pub use error::{Error, Result};
pub use grid::Grid;
pub use noise::{build_basis, sample_path, shift_path, AmplitudeRule, NoiseBasis, NoisePath};
