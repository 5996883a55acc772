//! Visibility, extrema and dominant spatial period of line images.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::imaging::{centroid_intensity_image, coherent_image, GridRequest, DEFAULT_SAMPLES};
use crate::kernels::QuadratureSpec;
use crate::model::{AxisKind, ImageGrid, LatticeGeometry, Normalization, OpticsConfig};
use crate::states::{correlation_matrix, SpinStateSpec, StateKind};

/// Visibility below which an oscillation counts as unresolved.
pub const RESOLVABILITY_THRESHOLD: f64 = 0.05;

/// Sites excluded at each end of the chain before analysis.
pub const DEFAULT_EDGE_MARGIN: usize = 2;

/// Zero-padding factor for the period DFT.
pub const DFT_PADDING: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExtremumKind {
    Maximum,
    Minimum,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Extremum {
    pub index: usize,
    pub position: f64,
    pub value: f64,
    pub kind: ExtremumKind,
    /// Height above (or depth below) the higher of the two bases reached
    /// before a more extreme sample or the end of the data.
    pub prominence: f64,
}

/// Interior local extrema by three-point comparison.
///
/// A run of equal samples bounded by lower (higher) neighbours on both sides
/// is one maximum (minimum) reported at the run's midpoint. Endpoints are
/// never extrema.
pub fn extrema(coords: &[f64], values: &[f64]) -> Result<Vec<Extremum>> {
    if coords.len() != values.len() {
        return Err(Error::DimensionMismatch {
            expected: coords.len(),
            found: values.len(),
        });
    }
    let n = values.len();
    if n < 5 {
        return Err(Error::invalid(
            "extrema",
            format!("need at least 5 samples, got {n}"),
        ));
    }
    let mut out = Vec::new();
    let mut i = 1;
    while i < n - 1 {
        let mut end = i;
        while end + 1 < n && values[end + 1] == values[i] {
            end += 1;
        }
        if end == n - 1 {
            break;
        }
        let (before, here, after) = (values[i - 1], values[i], values[end + 1]);
        let kind = if here > before && here > after {
            Some(ExtremumKind::Maximum)
        } else if here < before && here < after {
            Some(ExtremumKind::Minimum)
        } else {
            None
        };
        if let Some(kind) = kind {
            let index = (i + end) / 2;
            let position = if (end - i) % 2 == 0 {
                coords[index]
            } else {
                0.5 * (coords[index] + coords[index + 1])
            };
            out.push(Extremum {
                index,
                position,
                value: here,
                kind,
                prominence: prominence(values, i, end, kind),
            });
        }
        i = end + 1;
    }
    Ok(out)
}

fn prominence(values: &[f64], start: usize, end: usize, kind: ExtremumKind) -> f64 {
    let sign = match kind {
        ExtremumKind::Maximum => 1.0,
        ExtremumKind::Minimum => -1.0,
    };
    let peak = sign * values[start];
    let mut left_base = peak;
    for &v in values[..start].iter().rev() {
        let v = sign * v;
        if v > peak {
            break;
        }
        left_base = left_base.min(v);
    }
    let mut right_base = peak;
    for &v in &values[end + 1..] {
        let v = sign * v;
        if v > peak {
            break;
        }
        right_base = right_base.min(v);
    }
    peak - left_base.max(right_base)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OscillationReport {
    pub visibility: f64,
    pub dominant_period: f64,
    pub extrema: Vec<Extremum>,
    /// Interior window `[x_{1+m}, x_{M−m}]`.
    pub window: (f64, f64),
    pub edge_margin: usize,
}

/// Visibility and dominant period inside the chain, `edge_margin` sites in
/// from each end.
///
/// Visibility compares the mean of the interior local maxima with the mean
/// of the interior local minima, `(Ī_max − Ī_min)/(Ī_max + Ī_min)`, and is
/// zero when the window holds no oscillation.
pub fn oscillation_report(
    image: &ImageGrid,
    lattice: &LatticeGeometry,
    edge_margin: usize,
) -> Result<OscillationReport> {
    if image.axis == AxisKind::Plane {
        return Err(Error::invalid(
            "analysis",
            "plane images have no oscillation report",
        ));
    }
    let m = lattice.site_count();
    if edge_margin == 0 || 2 * edge_margin + 1 >= m {
        return Err(Error::invalid(
            "analysis window",
            format!("edge margin {edge_margin} leaves too few of {m} sites"),
        ));
    }
    let lo = lattice.site_position(1 + edge_margin);
    let hi = lattice.site_position(m - edge_margin);
    let eps = 1e-12 * (1.0 + hi.abs().max(lo.abs()));
    let idx: Vec<usize> = (0..image.coords.len())
        .filter(|&i| image.coords[i] >= lo - eps && image.coords[i] <= hi + eps)
        .collect();
    if idx.len() < 5 {
        return Err(Error::invalid(
            "analysis window",
            format!("only {} samples between {lo} and {hi}", idx.len()),
        ));
    }
    let coords: Vec<f64> = idx.iter().map(|&i| image.coords[i]).collect();
    let values: Vec<f64> = idx.iter().map(|&i| image.values[i]).collect();
    let ext = extrema(&coords, &values)?;
    let visibility = visibility(&ext);
    let dominant_period = dominant_period(&values, image.step()).unwrap_or(hi - lo);
    Ok(OscillationReport {
        visibility,
        dominant_period,
        extrema: ext,
        window: (lo, hi),
        edge_margin,
    })
}

fn visibility(ext: &[Extremum]) -> f64 {
    let mean = |kind| {
        let v: Vec<f64> = ext
            .iter()
            .filter(|e| e.kind == kind)
            .map(|e| e.value)
            .collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    };
    match (mean(ExtremumKind::Maximum), mean(ExtremumKind::Minimum)) {
        (Some(hi), Some(lo)) if hi + lo > 0.0 => ((hi - lo) / (hi + lo)).clamp(0.0, 1.0),
        _ => 0.0,
    }
}

/// Period at the peak of the zero-padded DFT magnitude, or `None` for a flat
/// signal.
fn dominant_period(values: &[f64], step: f64) -> Option<f64> {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = values.iter().map(|v| v - mean).collect();
    let scale = centered.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if scale <= 1e-12 * mean.abs().max(f64::MIN_POSITIVE) {
        return None;
    }
    let padded = n * DFT_PADDING;
    let bins = padded / 2;
    let spectrum: Vec<f64> = (0..=bins)
        .map(|k| {
            let w = 2.0 * std::f64::consts::PI * k as f64 / padded as f64;
            let (mut re, mut im) = (0.0, 0.0);
            for (t, v) in centered.iter().enumerate() {
                let (s, c) = (w * t as f64).sin_cos();
                re += v * c;
                im -= v * s;
            }
            re.hypot(im)
        })
        .collect();
    let k = (1..=bins)
        .max_by(|&a, &b| spectrum[a].total_cmp(&spectrum[b]))
        .unwrap_or(1);
    let shift = if k < bins {
        let (y0, y1, y2) = (spectrum[k - 1], spectrum[k], spectrum[k + 1]);
        let denom = y0 - 2.0 * y1 + y2;
        if denom != 0.0 {
            0.5 * (y0 - y2) / denom
        } else {
            0.0
        }
    } else {
        0.0
    };
    Some(padded as f64 * step / (k as f64 + shift))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScanProtocol {
    Coherent,
    CentroidIntensity,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanConfig {
    pub site_count: usize,
    pub samples: usize,
    pub edge_margin: usize,
    pub quadrature: QuadratureSpec,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            site_count: 18,
            samples: DEFAULT_SAMPLES,
            edge_margin: DEFAULT_EDGE_MARGIN,
            quadrature: QuadratureSpec::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanPoint {
    pub spacing: f64,
    pub visibility: f64,
    pub dominant_period: f64,
}

/// Image one report for a chain of `kind` at spacing `a`.
pub fn scan_point(
    kind: StateKind,
    protocol: ScanProtocol,
    optics: &OpticsConfig,
    spacing: f64,
    config: &ScanConfig,
) -> Result<ScanPoint> {
    let spec = match kind {
        StateKind::Product => {
            return Err(Error::Unsupported(
                "resolvability scans need an unpolarized, dimer or trimer chain".into(),
            ))
        }
        StateKind::Unpolarized => SpinStateSpec::unpolarized(config.site_count)?,
        other => SpinStateSpec::blocked(other, config.site_count)?,
    };
    let corr = correlation_matrix(&spec);
    let lattice = LatticeGeometry::centered(config.site_count, spacing)?;
    let axis = match protocol {
        ScanProtocol::Coherent => AxisKind::Line,
        ScanProtocol::CentroidIntensity => AxisKind::Centroid,
    };
    let grid = GridRequest::around(&lattice, optics, axis, config.samples)?
        .with_normalization(Normalization::MaxOne);
    let image = match protocol {
        ScanProtocol::Coherent => {
            coherent_image(&corr, &lattice, optics, &grid, &config.quadrature)?
        }
        ScanProtocol::CentroidIntensity => {
            centroid_intensity_image(&corr, &lattice, optics, &grid, &config.quadrature)?
        }
    };
    let report = oscillation_report(&image, &lattice, config.edge_margin)?;
    Ok(ScanPoint {
        spacing,
        visibility: report.visibility,
        dominant_period: report.dominant_period,
    })
}

/// Visibility against lattice spacing at fixed chain length.
pub fn resolvability_scan(
    kind: StateKind,
    protocol: ScanProtocol,
    optics: &OpticsConfig,
    spacings: &[f64],
    config: &ScanConfig,
) -> Result<Vec<ScanPoint>> {
    if let Some(bad) = spacings.iter().find(|a| !(a.is_finite() && **a > 0.0)) {
        return Err(Error::invalid(
            "scan",
            format!("spacing {bad} must be positive"),
        ));
    }
    spacings
        .par_iter()
        .map(|&a| scan_point(kind, protocol, optics, a, config))
        .collect()
}

/// Spacing where visibility rises through `threshold`, interpolated between
/// the largest spacing still below it and the next sample.
///
/// `None` when the scan never dips below the threshold or never recovers.
pub fn threshold_crossing(scan: &[ScanPoint], threshold: f64) -> Option<f64> {
    let mut pts = scan.to_vec();
    pts.sort_by(|a, b| a.spacing.total_cmp(&b.spacing));
    let below = pts.iter().rposition(|p| p.visibility < threshold)?;
    let (p, q) = (pts[below], *pts.get(below + 1)?);
    let t = (threshold - p.visibility) / (q.visibility - p.visibility);
    Some(p.spacing + t * (q.spacing - p.spacing))
}
