//! Diffraction-limited images of spin correlations in one-dimensional
//! optical lattices.
//!
//! The crate evaluates four imaging protocols for spin-1 chains in a
//! lattice: coherent single-photon imaging, two-photon absorption, the
//! centroid of the two-photon intensity, and the centroid of the two-photon
//! amplitude. A fifth protocol uses photon pairs with a fixed transverse
//! displacement to read out neighbour spin correlations directly.
//!
//! All lengths are in units of the probe wavelength unless an
//! [`OpticsConfig`] with a different wavelength is supplied.

pub mod analysis;
pub mod error;
pub mod imaging;
pub mod kernels;
pub mod model;
pub mod scenario;
pub mod states;

pub use analysis::{
    extrema, oscillation_report, resolvability_scan, threshold_crossing, Extremum, ExtremumKind,
    OscillationReport, ScanConfig, ScanPoint, ScanProtocol, RESOLVABILITY_THRESHOLD,
};
pub use error::{Error, Result};
pub use imaging::{
    centroid_amplitude_image, centroid_intensity_image, coherent_image, correlated_pair_image,
    site_pair_probe, twophoton_absorption_image, CorrelatedPairImage, CorrelatedPairModel,
    GridRequest, ProbeRow, ProbeTable,
};
pub use kernels::{
    centroid_kernel_k, psf_f, psf_g, sinc, sinc_convolution_identity_check, QuadratureSpec,
};
pub use model::{
    band_limit, site_positions, AxisKind, ImageGrid, LatticeGeometry, Normalization, OpticsConfig,
    SourceProfile, WannierEnvelope,
};
pub use scenario::{
    list_presets, preset, run_config, run_preset, run_scenario, Overrides, Scenario,
};
pub use states::{
    correlation_matrix, defect_lattice_spec, oracle_correlation_matrix, CorrelationMatrix,
    SpinStateSpec, StateKind,
};
