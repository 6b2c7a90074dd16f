//! Amplitude-phase analysis of the trained MLP: token tables, per-neuron
//! spectra, frequency clusters, phase regressions and second harmonics.

pub mod basis;
pub mod cluster;
pub mod secondary;
pub mod spectrum;

pub use basis::{fold_frequency, nearest_representative, wrap_angle, Component, FourierBasis};
pub use cluster::{
    cluster_by_frequency, fit_line, phase_regression, ClusterMember, Clustering, FrequencyCluster, LineFit,
    PhaseRegression,
};
pub use secondary::{detect_secondary, expected_secondary, SecondaryReport};
pub use spectrum::{neuron_spectra, ov_token_table, write_spectrum_table, NeuronSpectrum, TokenTable};
