//! Coupling program for unique ergodicity: dissipation monitors, two-point
//! closeness probabilities, occupation measures and Kantorovich–Rubinstein
//! distances between empirical laws of projected states.

pub mod coupling;
pub mod dissipation;
pub mod features;
pub mod measure;
pub mod occupation;

pub use coupling::{
    contraction_profile, coupled_distances, deterministic_flow, mixing_fit, mixing_fit_interval, mixing_fit_series,
    smooth_family, support_proximity, two_point_run, ContractionProfile, MixingFit, SupportEstimate, TwoPointStats,
};
pub use dissipation::{
    dissipation_check, dissipation_sweep, gradient_monitor, DissipationReport, DissipationSweep, GradientReport,
};
pub use features::FeatureMap;
pub use measure::{block_noise_floor, kr_distance, two_sample_band, wasserstein_1d, EmpiricalMeasure, KrDistance};
pub use occupation::{chapman_kolmogorov_check, occupation_measure, MarkovCheck};
