//! Imaging protocols.
//!
//! Each protocol turns a [`CorrelationMatrix`] into an [`ImageGrid`]. Every
//! intensity is a quadratic form `Σ_{j,r} ⟨ρ_j ρ_r⟩ h_j h_r` in per-site
//! amplitudes `h_j`, except the amplitude centroid which only needs `⟨ρ_j⟩`.
//! Grid points are evaluated independently and collected in grid order.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernels::{sinc, QuadratureSpec, SiteKernels, XiRule, CONVERGENCE_TOLERANCE};
use crate::model::{
    AxisKind, ImageGrid, LatticeGeometry, Normalization, OpticsConfig, SourceProfile,
};
use crate::states::CorrelationMatrix;

/// Ratio `g(a)/g(0)` above which the site-pair probe no longer isolates a
/// single pair of sites.
pub const PROBE_RESOLUTION_LIMIT: f64 = 0.1;

/// Sample positions requested for an image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridRequest {
    pub axis: AxisKind,
    pub min: f64,
    pub max: f64,
    pub samples: usize,
    pub normalization: Normalization,
}

pub const DEFAULT_SAMPLES: usize = 513;

/// Padding added beyond the outermost sites, in wavelengths.
pub const DEFAULT_PADDING: f64 = 2.0;

impl GridRequest {
    pub fn new(axis: AxisKind, min: f64, max: f64, samples: usize) -> Result<Self> {
        if !(min.is_finite() && max.is_finite() && min < max) {
            return Err(Error::invalid(
                "grid",
                format!("range [{min}, {max}] is empty"),
            ));
        }
        if samples < 3 {
            return Err(Error::invalid(
                "grid",
                format!("need at least 3 samples, got {samples}"),
            ));
        }
        Ok(Self {
            axis,
            min,
            max,
            samples,
            normalization: Normalization::MaxOne,
        })
    }

    /// Lattice extent padded by two wavelengths on each side.
    pub fn around(
        lattice: &LatticeGeometry,
        optics: &OpticsConfig,
        axis: AxisKind,
        samples: usize,
    ) -> Result<Self> {
        let (lo, hi) = lattice.extent();
        let pad = DEFAULT_PADDING * optics.wavelength();
        Self::new(axis, lo - pad, hi + pad, samples)
    }

    pub fn with_normalization(mut self, normalization: Normalization) -> Self {
        self.normalization = normalization;
        self
    }

    pub fn coords(&self) -> Vec<f64> {
        let step = (self.max - self.min) / (self.samples - 1) as f64;
        (0..self.samples)
            .map(|i| self.min + i as f64 * step)
            .collect()
    }

    fn expect_axis(&self, allowed: &[AxisKind], protocol: &str) -> Result<()> {
        if allowed.contains(&self.axis) {
            Ok(())
        } else {
            Err(Error::invalid(
                "grid",
                format!("{protocol} cannot be sampled on a {:?} grid", self.axis),
            ))
        }
    }
}

fn check_dims(corr: &CorrelationMatrix, lattice: &LatticeGeometry) -> Result<()> {
    if corr.dim() != lattice.site_count() {
        return Err(Error::DimensionMismatch {
            expected: lattice.site_count(),
            found: corr.dim(),
        });
    }
    Ok(())
}

fn sparse_form(entries: &[(usize, usize, f64)], amps: &[f64]) -> f64 {
    entries.iter().map(|&(j, r, q)| q * amps[j] * amps[r]).sum()
}

fn line_image(grid: &GridRequest, eval: impl Fn(f64) -> f64 + Sync) -> Result<ImageGrid> {
    let coords = grid.coords();
    let values: Vec<f64> = coords.par_iter().map(|&x| eval(x)).collect();
    ImageGrid::from_raw(grid.axis, coords, Vec::new(), values, grid.normalization)
}

/// Single-photon image `Σ ⟨ρ_j ρ_r⟩ f(x − x_j) f(x − x_r)`.
pub fn coherent_image(
    corr: &CorrelationMatrix,
    lattice: &LatticeGeometry,
    optics: &OpticsConfig,
    grid: &GridRequest,
    quad: &QuadratureSpec,
) -> Result<ImageGrid> {
    check_dims(corr, lattice)?;
    grid.expect_axis(&[AxisKind::Line], "coherent image")?;
    let kernels =
        SiteKernels::checked(lattice.wannier(), optics.band_limit(), quad.envelope_panels)?;
    let sites = lattice.site_positions();
    let entries = corr.nonzero_entries();
    line_image(grid, |x| {
        let amps: Vec<f64> = sites.iter().map(|xj| kernels.f(x - xj)).collect();
        sparse_form(&entries, &amps)
    })
}

/// Coincidence (`x₁ = x₂ = x`) two-photon absorption image for the
/// anticorrelated pair source, `Σ ⟨ρ_j ρ_r⟩ g(x − x_j) g(x − x_r)`.
pub fn twophoton_absorption_image(
    corr: &CorrelationMatrix,
    lattice: &LatticeGeometry,
    optics: &OpticsConfig,
    grid: &GridRequest,
    quad: &QuadratureSpec,
) -> Result<ImageGrid> {
    check_dims(corr, lattice)?;
    grid.expect_axis(&[AxisKind::Line], "two-photon absorption image")?;
    let kernels =
        SiteKernels::checked(lattice.wannier(), optics.band_limit(), quad.envelope_panels)?;
    let sites = lattice.site_positions();
    let entries = corr.nonzero_entries();
    line_image(grid, |x| {
        let amps: Vec<f64> = sites.iter().map(|xj| kernels.g(x - xj)).collect();
        sparse_form(&entries, &amps)
    })
}

/// Centroid distribution of the two-photon amplitude,
/// `|Σ ⟨ρ_j⟩ f₂(X − x_j)|²` with `f₂` at twice the band limit.
pub fn centroid_amplitude_image(
    corr: &CorrelationMatrix,
    lattice: &LatticeGeometry,
    optics: &OpticsConfig,
    grid: &GridRequest,
    quad: &QuadratureSpec,
) -> Result<ImageGrid> {
    check_dims(corr, lattice)?;
    grid.expect_axis(
        &[AxisKind::Centroid, AxisKind::Line],
        "amplitude centroid image",
    )?;
    let kernels =
        SiteKernels::checked(lattice.wannier(), optics.band_limit(), quad.envelope_panels)?;
    let sites = lattice.site_positions();
    let means = corr.means().to_vec();
    let grid = GridRequest {
        axis: AxisKind::Centroid,
        ..*grid
    };
    line_image(&grid, |x| {
        let amp: f64 = sites
            .iter()
            .zip(&means)
            .map(|(xj, m)| m * kernels.f_scaled(x - xj, 2.0))
            .sum();
        amp * amp
    })
}

/// Evaluates `C(X) = Σ ⟨ρ_j ρ_r⟩ K̃(X, x_j, x_r)` point by point.
struct CentroidIntensity<'a> {
    entries: Vec<(usize, usize, f64)>,
    sites: Vec<f64>,
    nodes: &'a [(f64, f64)],
    rule: XiRule,
}

impl<'a> CentroidIntensity<'a> {
    fn new(
        corr: &CorrelationMatrix,
        lattice: &LatticeGeometry,
        kernels: &'a SiteKernels,
        quad: &QuadratureSpec,
    ) -> Self {
        let kappa = kernels.kappa();
        Self {
            entries: corr.nonzero_entries(),
            sites: lattice.site_positions(),
            nodes: kernels.nodes(),
            rule: XiRule::from_spec(kappa, quad),
        }
    }

    fn at(&self, centroid: f64) -> f64 {
        let n = self.rule.len();
        let mut active = vec![false; self.sites.len()];
        for &(j, r, _) in &self.entries {
            active[j] = true;
            active[r] = true;
        }
        let mut profiles = vec![Vec::new(); self.sites.len()];
        for (j, xj) in self.sites.iter().enumerate() {
            if !active[j] {
                continue;
            }
            let mut p = vec![0.0; n];
            for &(o, w) in self.nodes {
                self.rule
                    .accumulate_pair_profile(centroid - xj - o, w, &mut p);
            }
            profiles[j] = p;
        }
        let mut integrand = vec![0.0; n];
        for &(j, r, q) in &self.entries {
            let (pj, pr) = (&profiles[j], &profiles[r]);
            for i in 0..n {
                integrand[i] += q * pj[i] * pr[i];
            }
        }
        self.rule.integrate(&integrand)
    }
}

/// Centroid distribution of the two-photon intensity for the
/// anticorrelated pair source.
pub fn centroid_intensity_image(
    corr: &CorrelationMatrix,
    lattice: &LatticeGeometry,
    optics: &OpticsConfig,
    grid: &GridRequest,
    quad: &QuadratureSpec,
) -> Result<ImageGrid> {
    check_dims(corr, lattice)?;
    quad.validate()?;
    grid.expect_axis(
        &[AxisKind::Centroid, AxisKind::Line],
        "intensity centroid image",
    )?;
    let kappa = optics.band_limit();
    let kernels = SiteKernels::checked(lattice.wannier(), kappa, quad.envelope_panels)?;
    let model = CentroidIntensity::new(corr, lattice, &kernels, quad);
    let grid = GridRequest {
        axis: AxisKind::Centroid,
        ..*grid
    };
    let image = line_image(&grid, |x| model.at(x))?;

    // spot-check panel doubling on a few samples
    let fine_kernels = SiteKernels::new(lattice.wannier(), kappa, 2 * quad.envelope_panels);
    let fine = CentroidIntensity::new(corr, lattice, &fine_kernels, &quad.doubled());
    let raw = image.raw_values();
    let scale = image.raw_max.max(f64::MIN_POSITIVE);
    let n = image.coords.len();
    let mut delta: f64 = 0.0;
    for i in [n / 4, n / 2, 3 * n / 4] {
        delta = delta.max((fine.at(image.coords[i]) - raw[i]).abs() / scale);
    }
    if delta > CONVERGENCE_TOLERANCE {
        return Err(Error::NonConvergence {
            kernel: "centroid K",
            delta,
        });
    }
    Ok(image)
}

/// Two-photon intensity `⟨ψ†(x₁,x₂) ψ(x₁,x₂)⟩` for a pair source whose
/// photons are displaced by `separation`.
#[derive(Debug, Clone)]
pub struct CorrelatedPairModel {
    entries: Vec<(usize, usize, f64)>,
    sites: Vec<f64>,
    nodes: Vec<(f64, f64)>,
    kappa: f64,
    source: SourceProfile,
}

impl CorrelatedPairModel {
    pub fn new(
        corr: &CorrelationMatrix,
        lattice: &LatticeGeometry,
        optics: &OpticsConfig,
        separation: f64,
        quad: &QuadratureSpec,
    ) -> Result<Self> {
        check_dims(corr, lattice)?;
        if !(separation.is_finite() && separation > 0.0) {
            return Err(Error::invalid(
                "correlated pair",
                format!("separation must be positive, got {separation}"),
            ));
        }
        let kappa = optics.band_limit();
        let kernels = SiteKernels::checked(lattice.wannier(), kappa, quad.envelope_panels)?;
        Ok(Self {
            entries: corr.nonzero_entries(),
            sites: lattice.site_positions(),
            nodes: kernels.nodes().to_vec(),
            kappa,
            source: SourceProfile::DisplacedPair { separation },
        })
    }

    /// Amplitude of both photon paths through an atom at `x`: the scattered
    /// photon reaches one detector point, its partner the other.
    fn path_amplitude(&self, x1: f64, x2: f64, x: f64) -> f64 {
        let k = self.kappa;
        let psi = |a: f64| self.source.pair_amplitude(k, a, x).unwrap_or(0.0);
        sinc(k * (x1 - x)) * psi(x2) + sinc(k * (x2 - x)) * psi(x1)
    }

    pub fn intensity(&self, x1: f64, x2: f64) -> f64 {
        let amps: Vec<f64> = self
            .sites
            .iter()
            .map(|xj| {
                self.nodes
                    .iter()
                    .map(|&(o, w)| w * self.path_amplitude(x1, x2, xj + o))
                    .sum()
            })
            .collect();
        sparse_form(&self.entries, &amps)
    }
}

#[derive(Debug, Clone)]
pub struct CorrelatedPairImage {
    pub image: ImageGrid,
    pub warnings: Vec<String>,
}

/// Returns `Some(s)` when `separation` is `s` lattice steps.
pub fn separation_steps(lattice: &LatticeGeometry, separation: f64) -> Option<usize> {
    let s = separation / lattice.spacing();
    let rounded = s.round();
    if rounded >= 1.0 && (s - rounded).abs() < 1e-9 {
        Some(rounded as usize)
    } else {
        None
    }
}

/// Full two-photon intensity over the detector plane `(x₁, x₂)`.
pub fn correlated_pair_image(
    corr: &CorrelationMatrix,
    lattice: &LatticeGeometry,
    optics: &OpticsConfig,
    separation: f64,
    grid: &GridRequest,
    quad: &QuadratureSpec,
) -> Result<CorrelatedPairImage> {
    grid.expect_axis(&[AxisKind::Plane], "correlated pair image")?;
    let model = CorrelatedPairModel::new(corr, lattice, optics, separation, quad)?;
    let mut warnings = Vec::new();
    if separation_steps(lattice, separation).is_none() {
        warnings.push(format!(
            "separation {separation} is not a whole number of lattice spacings ({}); \
             image no longer probes a single site pair",
            lattice.spacing()
        ));
    }
    let coords = grid.coords();
    let values: Vec<f64> = coords
        .par_iter()
        .flat_map_iter(|&x1| {
            coords
                .iter()
                .map(|&x2| model.intensity(x1, x2))
                .collect::<Vec<_>>()
        })
        .collect();
    let image = ImageGrid::from_raw(
        AxisKind::Plane,
        coords.clone(),
        coords,
        values,
        grid.normalization,
    )?;
    Ok(CorrelatedPairImage { image, warnings })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeRow {
    /// 1-based index of the first site.
    pub site: usize,
    pub x1: f64,
    pub x2: f64,
    /// `⟨(ρ_j + ρ_{j+s})²⟩`.
    pub value: f64,
    /// Pair touches the first or last `s` sites of the chain.
    pub edge: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeTable {
    pub steps: usize,
    pub rows: Vec<ProbeRow>,
    /// `g(a)/g(0)`, small when neighbouring sites are resolved.
    pub resolution_ratio: f64,
    pub warnings: Vec<String>,
}

/// Dominant-term site-pair values `⟨(ρ_j + ρ_{j+s})²⟩` read out by photons
/// displaced by `s` lattice steps.
pub fn site_pair_probe(
    corr: &CorrelationMatrix,
    lattice: &LatticeGeometry,
    optics: &OpticsConfig,
    steps: usize,
) -> Result<ProbeTable> {
    check_dims(corr, lattice)?;
    let m = lattice.site_count();
    if steps == 0 || steps >= m {
        return Err(Error::invalid(
            "site pair probe",
            format!("step count {steps} outside 1..{m}"),
        ));
    }
    let kernels = SiteKernels::checked(
        lattice.wannier(),
        optics.band_limit(),
        QuadratureSpec::default().envelope_panels,
    )?;
    let resolution_ratio = kernels.g(lattice.spacing()) / kernels.g(0.0);
    let mut warnings = Vec::new();
    if resolution_ratio > PROBE_RESOLUTION_LIMIT {
        warnings.push(format!(
            "g(a)/g(0) = {resolution_ratio:.3} exceeds {PROBE_RESOLUTION_LIMIT}; \
             neighbouring sites leak into each probe value"
        ));
    }
    let rows = (1..=m - steps)
        .map(|j| ProbeRow {
            site: j,
            x1: lattice.site_position(j),
            x2: lattice.site_position(j + steps),
            value: corr.pair_sum_square(j - 1, j - 1 + steps),
            edge: j <= steps || j + steps > m - steps,
        })
        .collect();
    Ok(ProbeTable {
        steps,
        rows,
        resolution_ratio,
        warnings,
    })
}
