//! Shared domain types: optics, lattice layout, site envelopes, photon
//! source profiles and the sampled image container.
//!
//! Lengths carry the unit of the configured wavelength. With the default
//! `wavelength = 1` every position is measured in units of λ and `κ_l·x`
//! is a plain angle.

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::sinc;

/// Imaging optics: probe wavelength and numerical aperture `sin θ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpticsConfig {
    wavelength: f64,
    numerical_aperture: f64,
}

impl OpticsConfig {
    pub fn new(wavelength: f64, numerical_aperture: f64) -> Result<Self> {
        if !(wavelength.is_finite() && wavelength > 0.0) {
            return Err(Error::invalid(
                "optics",
                format!("wavelength must be positive, got {wavelength}"),
            ));
        }
        if !(numerical_aperture > 0.0 && numerical_aperture <= 1.0) {
            return Err(Error::invalid(
                "optics",
                format!("numerical aperture must lie in (0, 1], got {numerical_aperture}"),
            ));
        }
        Ok(Self {
            wavelength,
            numerical_aperture,
        })
    }

    /// Optics with unit wavelength, the convention used throughout.
    pub fn with_aperture(numerical_aperture: f64) -> Result<Self> {
        Self::new(1.0, numerical_aperture)
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    pub fn numerical_aperture(&self) -> f64 {
        self.numerical_aperture
    }

    /// Free-space wavenumber `k = 2π/λ`.
    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.wavelength
    }

    /// Transverse band limit `κ_l = k sin θ`.
    pub fn band_limit(&self) -> f64 {
        self.wavenumber() * self.numerical_aperture
    }
}

pub fn band_limit(optics: &OpticsConfig) -> f64 {
    optics.band_limit()
}

/// Density envelope `|w(x)|²` of a single lattice site.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WannierEnvelope {
    /// Unit-mass delta at the site centre.
    Point,
    /// Normalised Gaussian density with standard deviation `width`.
    Gaussian { width: f64 },
}

impl WannierEnvelope {
    pub fn gaussian(width: f64) -> Result<Self> {
        if !(width.is_finite() && width > 0.0) {
            return Err(Error::invalid(
                "wannier envelope",
                format!("gaussian width must be positive, got {width}"),
            ));
        }
        Ok(WannierEnvelope::Gaussian { width })
    }

    /// Density at offset `x` from the site centre. Zero everywhere for the
    /// point envelope, whose mass only shows up through [`Self::nodes`].
    pub fn density(&self, x: f64) -> f64 {
        match *self {
            WannierEnvelope::Point => 0.0,
            WannierEnvelope::Gaussian { width } => {
                (-x * x / (2.0 * width * width)).exp() / (width * (2.0 * PI).sqrt())
            }
        }
    }

    /// Half-width of the integration window, `8σ` for Gaussians.
    pub fn support(&self) -> f64 {
        match *self {
            WannierEnvelope::Point => 0.0,
            WannierEnvelope::Gaussian { width } => 8.0 * width,
        }
    }

    /// Quadrature nodes `(offset, mass)` for integrals against `|w|²`.
    ///
    /// The point envelope collapses to a single node of unit mass; the
    /// Gaussian uses composite Simpson over `[-8σ, 8σ]` with `panels` panels.
    pub fn nodes(&self, panels: usize) -> Vec<(f64, f64)> {
        match *self {
            WannierEnvelope::Point => vec![(0.0, 1.0)],
            WannierEnvelope::Gaussian { .. } => {
                let half = self.support();
                crate::kernels::Simpson::new(-half, half, panels)
                    .points()
                    .map(|(x, w)| (x, w * self.density(x)))
                    .collect()
            }
        }
    }
}

/// A one-dimensional lattice of `site_count` equally spaced sites.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeGeometry {
    site_count: usize,
    spacing: f64,
    center_offset: f64,
    wannier: WannierEnvelope,
}

impl LatticeGeometry {
    pub fn new(
        site_count: usize,
        spacing: f64,
        center_offset: f64,
        wannier: WannierEnvelope,
    ) -> Result<Self> {
        if site_count == 0 {
            return Err(Error::invalid("lattice", "site count must be positive"));
        }
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(Error::invalid(
                "lattice",
                format!("spacing must be positive, got {spacing}"),
            ));
        }
        if !center_offset.is_finite() {
            return Err(Error::invalid("lattice", "center offset must be finite"));
        }
        if let WannierEnvelope::Gaussian { width } = wannier {
            WannierEnvelope::gaussian(width)?;
        }
        Ok(Self {
            site_count,
            spacing,
            center_offset,
            wannier,
        })
    }

    /// Sites centred on `x = 0` with point envelopes.
    pub fn centered(site_count: usize, spacing: f64) -> Result<Self> {
        Self::new(site_count, spacing, 0.0, WannierEnvelope::Point)
    }

    pub fn with_envelope(mut self, wannier: WannierEnvelope) -> Result<Self> {
        if let WannierEnvelope::Gaussian { width } = wannier {
            WannierEnvelope::gaussian(width)?;
        }
        self.wannier = wannier;
        Ok(self)
    }

    pub fn site_count(&self) -> usize {
        self.site_count
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn center_offset(&self) -> f64 {
        self.center_offset
    }

    pub fn wannier(&self) -> WannierEnvelope {
        self.wannier
    }

    /// Position of the 1-based site `j`: `offset + (j - (M+1)/2)·a`.
    pub fn site_position(&self, j: usize) -> f64 {
        let centre = (self.site_count as f64 + 1.0) / 2.0;
        self.center_offset + (j as f64 - centre) * self.spacing
    }

    pub fn site_positions(&self) -> Vec<f64> {
        (1..=self.site_count)
            .map(|j| self.site_position(j))
            .collect()
    }

    /// Outermost site positions.
    pub fn extent(&self) -> (f64, f64) {
        (self.site_position(1), self.site_position(self.site_count))
    }

    /// Soft violations of the negligible-overlap assumption.
    pub fn validation_warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if let WannierEnvelope::Gaussian { width } = self.wannier {
            if width > self.spacing / 4.0 {
                out.push(format!(
                    "gaussian envelope width {width} exceeds spacing/4 = {}; neighbouring sites overlap",
                    self.spacing / 4.0
                ));
            }
        }
        out
    }
}

pub fn site_positions(lattice: &LatticeGeometry) -> Vec<f64> {
    lattice.site_positions()
}

/// Initial spatial correlation of the probe light.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SourceProfile {
    /// Single-mode coherent beam with a flat transverse profile.
    CoherentUniform,
    /// Down-converted pair with anticorrelated transverse momenta.
    AnticorrelatedPair,
    /// Pair whose photons are displaced by `separation`.
    DisplacedPair { separation: f64 },
}

impl SourceProfile {
    /// Two-photon spatial amplitude `ψ_i(x, x')` for band limit `kappa`.
    ///
    /// Returns `None` for the single-photon coherent source.
    pub fn pair_amplitude(&self, kappa: f64, x: f64, xp: f64) -> Option<f64> {
        match *self {
            SourceProfile::CoherentUniform => None,
            SourceProfile::AnticorrelatedPair => Some(kappa / PI * sinc(kappa * (x - xp))),
            SourceProfile::DisplacedPair { separation } => {
                let d = separation;
                Some(
                    kappa / (SQRT_2 * PI.sqrt())
                        * (sinc(kappa * (x - xp - d)) + sinc(kappa * (x - xp + d))),
                )
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AxisKind {
    /// Detector coordinate `x`.
    Line,
    /// Joint detector coordinates `(x₁, x₂)`.
    Plane,
    /// Two-photon centroid `X = (x₁ + x₂)/2`.
    Centroid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    Raw,
    #[default]
    MaxOne,
}

/// A sampled intensity image.
///
/// Plane images store `values` row-major with rows indexed by `coords`
/// (x₁) and columns by `coords2` (x₂). `raw_max` keeps the pre-normalisation
/// maximum so raw values can be recovered from a max-one image.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageGrid {
    pub axis: AxisKind,
    pub coords: Vec<f64>,
    pub coords2: Vec<f64>,
    pub values: Vec<f64>,
    pub normalization: Normalization,
    pub raw_max: f64,
}

/// Intensities below this floor indicate a broken quadratic form rather
/// than rounding noise.
pub const POSITIVITY_FLOOR: f64 = -1e-9;

impl ImageGrid {
    /// Checks positivity, clamps rounding noise to zero and applies the
    /// requested normalisation.
    pub(crate) fn from_raw(
        axis: AxisKind,
        coords: Vec<f64>,
        coords2: Vec<f64>,
        mut values: Vec<f64>,
        normalization: Normalization,
    ) -> Result<Self> {
        for (i, v) in values.iter_mut().enumerate() {
            if *v < POSITIVITY_FLOOR || v.is_nan() {
                let position = if coords2.is_empty() {
                    coords[i]
                } else {
                    coords[i / coords2.len()]
                };
                return Err(Error::NegativeIntensity {
                    value: *v,
                    position,
                });
            }
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        let raw_max = values.iter().cloned().fold(0.0, f64::max);
        if normalization == Normalization::MaxOne && raw_max > 0.0 {
            for v in values.iter_mut() {
                *v /= raw_max;
            }
        }
        Ok(Self {
            axis,
            coords,
            coords2,
            values,
            normalization,
            raw_max,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Sample spacing along the first axis.
    pub fn step(&self) -> f64 {
        if self.coords.len() < 2 {
            0.0
        } else {
            self.coords[1] - self.coords[0]
        }
    }

    /// Values in raw units regardless of the stored normalisation.
    pub fn raw_values(&self) -> Vec<f64> {
        match self.normalization {
            Normalization::Raw => self.values.clone(),
            Normalization::MaxOne => self.values.iter().map(|v| v * self.raw_max).collect(),
        }
    }

    /// Plane value at row `i` (x₁) and column `k` (x₂).
    pub fn plane_value(&self, i: usize, k: usize) -> f64 {
        self.values[i * self.coords2.len() + k]
    }
}
