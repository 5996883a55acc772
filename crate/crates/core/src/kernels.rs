//! Scalar kernels and the quadrature they share.
//!
//! `f` and `g` are the site point-spread functions (sinc and sinc² smoothed by
//! the site envelope); `K` is the four-sinc centroid kernel integrated over
//! the relative photon coordinate ξ. Integrals use composite Simpson on a
//! fixed panel count so repeated runs are bit-identical.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{LatticeGeometry, OpticsConfig, WannierEnvelope};

/// Maximum change tolerated when the panel count is doubled.
pub const CONVERGENCE_TOLERANCE: f64 = 1e-8;

/// Default truncation of ξ integrals, in units of `1/κ_l`.
pub const XI_RADIUS_KAPPA: f64 = 60.0;

/// Truncation of the two-sinc identity integral, in units of `1/b`.
pub const IDENTITY_RADIUS_B: f64 = 200.0;

/// Unnormalised sinc, `sin(u)/u` with `sinc(0) = 1`.
#[inline]
pub fn sinc(u: f64) -> f64 {
    if u.abs() < 1e-8 {
        1.0 - u * u / 6.0
    } else {
        u.sin() / u
    }
}

/// Composite Simpson rule on `[a, b]`.
#[derive(Debug, Clone)]
pub struct Simpson {
    start: f64,
    step: f64,
    panels: usize,
}

impl Simpson {
    /// `panels` is rounded up to the next even number.
    pub fn new(start: f64, end: f64, panels: usize) -> Self {
        let panels = panels.max(2);
        let panels = panels + panels % 2;
        Self {
            start,
            step: (end - start) / panels as f64,
            panels,
        }
    }

    pub fn panels(&self) -> usize {
        self.panels
    }

    /// Nodes and weights.
    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let h3 = self.step / 3.0;
        (0..=self.panels).map(move |i| {
            let w = if i == 0 || i == self.panels {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            (self.start + i as f64 * self.step, w * h3)
        })
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.points().map(|(x, w)| w * f(x)).sum()
    }
}

/// Panel counts and truncation for the numerical integrals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSpec {
    /// Simpson panels for infinite-domain ξ integrals.
    #[serde(default = "default_panels")]
    pub panels: usize,
    /// Half-width of the ξ window; `60/κ_l` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation_radius: Option<f64>,
    /// Simpson panels across a Gaussian site envelope.
    #[serde(default = "default_envelope_panels")]
    pub envelope_panels: usize,
}

fn default_panels() -> usize {
    2048
}

fn default_envelope_panels() -> usize {
    64
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            panels: default_panels(),
            truncation_radius: None,
            envelope_panels: default_envelope_panels(),
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, n) in [
            ("panels", self.panels),
            ("envelope_panels", self.envelope_panels),
        ] {
            if n < 16 || n % 2 != 0 {
                return Err(Error::invalid(
                    "quadrature",
                    format!("{name} must be even and at least 16, got {n}"),
                ));
            }
        }
        if let Some(r) = self.truncation_radius {
            if !(r.is_finite() && r > 0.0) {
                return Err(Error::invalid(
                    "quadrature",
                    format!("truncation radius must be positive, got {r}"),
                ));
            }
        }
        Ok(())
    }

    pub fn xi_radius(&self, kappa: f64) -> f64 {
        self.truncation_radius.unwrap_or(XI_RADIUS_KAPPA / kappa)
    }

    /// Same settings with every panel count doubled.
    pub fn doubled(&self) -> Self {
        Self {
            panels: 2 * self.panels,
            envelope_panels: 2 * self.envelope_panels,
            ..*self
        }
    }
}

/// Envelope-smoothed site kernels for one band limit.
#[derive(Debug, Clone)]
pub struct SiteKernels {
    kappa: f64,
    nodes: Vec<(f64, f64)>,
}

impl SiteKernels {
    pub fn new(envelope: WannierEnvelope, kappa: f64, envelope_panels: usize) -> Self {
        Self {
            kappa,
            nodes: envelope.nodes(envelope_panels),
        }
    }

    /// Builds the kernels and verifies that doubling the envelope panels
    /// leaves `f` and `g` unchanged at a few probe offsets.
    pub fn checked(envelope: WannierEnvelope, kappa: f64, envelope_panels: usize) -> Result<Self> {
        let base = Self::new(envelope, kappa, envelope_panels);
        if envelope == WannierEnvelope::Point {
            return Ok(base);
        }
        let fine = Self::new(envelope, kappa, 2 * envelope_panels);
        let probes = [0.0, 0.25, 0.5, 1.0, 1.5, 3.0].map(|t| t * PI / kappa);
        let mut delta: f64 = 0.0;
        for x in probes {
            delta = delta.max((base.f(x) - fine.f(x)).abs());
            delta = delta.max((base.g(x) - fine.g(x)).abs());
            delta = delta.max((base.f_scaled(x, 2.0) - fine.f_scaled(x, 2.0)).abs());
        }
        if delta > CONVERGENCE_TOLERANCE {
            return Err(Error::NonConvergence {
                kernel: "site envelope",
                delta,
            });
        }
        Ok(base)
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn nodes(&self) -> &[(f64, f64)] {
        &self.nodes
    }

    /// `f(x) = ∫ |w(x')|² sinc(κ(x − x')) dx'`.
    pub fn f(&self, x: f64) -> f64 {
        self.f_scaled(x, 1.0)
    }

    /// `f` with the band limit multiplied by `factor`.
    pub fn f_scaled(&self, x: f64, factor: f64) -> f64 {
        let k = factor * self.kappa;
        self.nodes.iter().map(|&(o, w)| w * sinc(k * (x - o))).sum()
    }

    /// `g(x) = ∫ |w(x')|² sinc²(κ(x − x')) dx'`.
    pub fn g(&self, x: f64) -> f64 {
        self.nodes
            .iter()
            .map(|&(o, w)| {
                let s = sinc(self.kappa * (x - o));
                w * s * s
            })
            .sum()
    }
}

fn checked_value(kernel: &'static str, coarse: f64, fine: f64) -> Result<f64> {
    let delta = (coarse - fine).abs();
    if delta > CONVERGENCE_TOLERANCE * coarse.abs().max(1.0) {
        return Err(Error::NonConvergence { kernel, delta });
    }
    Ok(coarse)
}

/// Coherent point-spread function of one site.
pub fn psf_f(x: f64, lattice: &LatticeGeometry, optics: &OpticsConfig) -> Result<f64> {
    let quad = QuadratureSpec::default();
    let kappa = optics.band_limit();
    let coarse = SiteKernels::new(lattice.wannier(), kappa, quad.envelope_panels).f(x);
    let fine = SiteKernels::new(lattice.wannier(), kappa, 2 * quad.envelope_panels).f(x);
    checked_value("psf f", coarse, fine)
}

/// Two-photon (squared-sinc) point-spread function of one site.
pub fn psf_g(x: f64, lattice: &LatticeGeometry, optics: &OpticsConfig) -> Result<f64> {
    let quad = QuadratureSpec::default();
    let kappa = optics.band_limit();
    let coarse = SiteKernels::new(lattice.wannier(), kappa, quad.envelope_panels).g(x);
    let fine = SiteKernels::new(lattice.wannier(), kappa, 2 * quad.envelope_panels).g(x);
    checked_value("psf g", coarse, fine)
}

/// Simpson rule over ξ with `sin(κξ)`, `cos(κξ)` tabulated so the shifted
/// sinc pairs `sinc(κ(s ± ξ))` cost a few multiplies per node.
#[derive(Debug, Clone)]
pub struct XiRule {
    kappa: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    sin_k: Vec<f64>,
    cos_k: Vec<f64>,
}

impl XiRule {
    pub fn new(kappa: f64, radius: f64, panels: usize) -> Self {
        let (nodes, weights): (Vec<f64>, Vec<f64>) =
            Simpson::new(-radius, radius, panels).points().unzip();
        let sin_k = nodes.iter().map(|xi| (kappa * xi).sin()).collect();
        let cos_k = nodes.iter().map(|xi| (kappa * xi).cos()).collect();
        Self {
            kappa,
            nodes,
            weights,
            sin_k,
            cos_k,
        }
    }

    pub fn from_spec(kappa: f64, quad: &QuadratureSpec) -> Self {
        Self::new(kappa, quad.xi_radius(kappa), quad.panels)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Adds `mass · sinc(κ(s + ξ)) · sinc(κ(s − ξ))` to `out` at every node.
    pub fn accumulate_pair_profile(&self, shift: f64, mass: f64, out: &mut [f64]) {
        let a = self.kappa * shift;
        let (sa, ca) = a.sin_cos();
        for (i, slot) in out.iter_mut().enumerate() {
            let b = self.kappa * self.nodes[i];
            let plus = a + b;
            let minus = a - b;
            let sp = if plus.abs() < 0.5 {
                sinc(plus)
            } else {
                (sa * self.cos_k[i] + ca * self.sin_k[i]) / plus
            };
            let sm = if minus.abs() < 0.5 {
                sinc(minus)
            } else {
                (sa * self.cos_k[i] - ca * self.sin_k[i]) / minus
            };
            *slot += mass * sp * sm;
        }
    }

    pub fn integrate(&self, values: &[f64]) -> f64 {
        values.iter().zip(&self.weights).map(|(v, w)| v * w).sum()
    }
}

/// `K(X, x, x') = ∫ dξ sinc(κ(X+ξ−x)) sinc(κ(X−ξ−x)) sinc(κ(X+ξ−x')) sinc(κ(X−ξ−x'))`
/// evaluated with the configured panels, then rechecked at twice the panels.
pub fn centroid_kernel_k(
    centroid: f64,
    x: f64,
    xp: f64,
    optics: &OpticsConfig,
    quad: &QuadratureSpec,
) -> Result<f64> {
    quad.validate()?;
    let kappa = optics.band_limit();
    let eval = |q: &QuadratureSpec| {
        let rule = XiRule::from_spec(kappa, q);
        let mut a = vec![0.0; rule.len()];
        let mut b = vec![0.0; rule.len()];
        rule.accumulate_pair_profile(centroid - x, 1.0, &mut a);
        rule.accumulate_pair_profile(centroid - xp, 1.0, &mut b);
        let prod: Vec<f64> = a.iter().zip(&b).map(|(u, v)| u * v).collect();
        rule.integrate(&prod)
    };
    let coarse = eval(quad);
    let fine = eval(&quad.doubled());
    checked_value("centroid K", coarse, fine)
}

/// Analytic right-hand side `(π/b) sinc(b(y+z))` of the two-sinc identity.
pub fn sinc_convolution_rhs(b: f64, y: f64, z: f64) -> f64 {
    PI / b * sinc(b * (y + z))
}

/// Numerical `∫ sinc(b(x+y)) sinc(b(z−x)) dx` over the whole line.
///
/// Simpson covers `|x| ≤ 200/b + |y| + |z|`; the two tails, which decay only
/// like `x⁻²`, are added from their asymptotic expansion.
pub fn sinc_convolution_lhs(b: f64, y: f64, z: f64, quad: &QuadratureSpec) -> Result<f64> {
    if !(b.is_finite() && b > 0.0) {
        return Err(Error::invalid(
            "identity check",
            format!("b must be positive, got {b}"),
        ));
    }
    let radius = IDENTITY_RADIUS_B / b + y.abs() + z.abs();
    let core = Simpson::new(-radius, radius, quad.panels.max(default_panels()))
        .integrate(|x| sinc(b * (x + y)) * sinc(b * (z - x)));
    Ok(core + right_tail(b, y, z, radius) + right_tail(b, z, y, radius))
}

/// `∫_R^∞ sinc(b(x+y)) sinc(b(z−x)) dx` for `R ≫ |y|, |z|`.
///
/// With `A = b(x+y)`, `B = b(z−x)` the product splits into
/// `½cos(b(2x+y−z))/(AB) − ½cos(b(y+z))/(AB)`. The second part integrates in
/// closed form, the first by two rounds of integration by parts.
fn right_tail(b: f64, y: f64, z: f64, radius: f64) -> f64 {
    let s = y + z;
    let smooth = if s == 0.0 {
        -1.0 / (radius + y)
    } else {
        (-s / (radius + y)).ln_1p() / s
    } / (b * b);
    let p = (radius + y) * (z - radius);
    let h = 1.0 / (b * b * p);
    let dh = -(z - y - 2.0 * radius) / (b * b * p * p);
    let omega = 2.0 * b;
    let theta = omega * radius + b * (y - z);
    let oscillating = -theta.sin() * h / omega - theta.cos() * dh / (omega * omega);
    0.5 * oscillating - 0.5 * (b * s).cos() * smooth
}

/// `|numerical LHS − analytic RHS|` of the two-sinc identity; a quadrature
/// self-test.
pub fn sinc_convolution_identity_check(
    b: f64,
    y: f64,
    z: f64,
    quad: &QuadratureSpec,
) -> Result<f64> {
    Ok((sinc_convolution_lhs(b, y, z, quad)? - sinc_convolution_rhs(b, y, z)).abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn optics(na: f64) -> OpticsConfig {
        OpticsConfig::with_aperture(na).unwrap()
    }

    #[test]
    fn sinc_values() {
        assert_eq!(sinc(0.0), 1.0);
        assert!(sinc(PI).abs() < 1e-16);
        assert!((sinc(PI / 2.0) - 2.0 / PI).abs() < 1e-15);
        assert!((sinc(1e-9) - 1.0).abs() < 1e-17);
        assert_eq!(sinc(-0.7), sinc(0.7));
    }

    #[test]
    fn simpson_is_exact_for_cubics() {
        let v = Simpson::new(-1.0, 2.0, 4).integrate(|x| x * x * x - 2.0 * x + 1.0);
        let exact = (16.0 / 4.0 - 4.0 + 2.0) - (1.0 / 4.0 - 1.0 - 1.0);
        assert!((v - exact).abs() < 1e-13);
        assert_eq!(Simpson::new(0.0, 1.0, 7).panels(), 8);
    }

    #[test]
    fn quadrature_validation() {
        assert!(QuadratureSpec::default().validate().is_ok());
        let odd = QuadratureSpec {
            panels: 33,
            ..Default::default()
        };
        assert!(odd.validate().is_err());
        let small = QuadratureSpec {
            envelope_panels: 8,
            ..Default::default()
        };
        assert!(small.validate().is_err());
        let neg = QuadratureSpec {
            truncation_radius: Some(-1.0),
            ..Default::default()
        };
        assert!(neg.validate().is_err());
    }

    #[test]
    fn point_psf_examples() {
        let lat = LatticeGeometry::centered(1, 1.0).unwrap();
        let o = optics(0.5);
        let k = o.band_limit();
        assert_eq!(psf_f(0.0, &lat, &o).unwrap(), 1.0);
        assert!(psf_f(PI / k, &lat, &o).unwrap().abs() < 1e-15);
        assert_eq!(psf_g(0.0, &lat, &o).unwrap(), 1.0);
        assert!(psf_g(PI / k, &lat, &o).unwrap().abs() < 1e-30);
        let half = psf_g(PI / (2.0 * k), &lat, &o).unwrap();
        assert!((half - (2.0 / PI).powi(2)).abs() < 1e-15);
    }

    #[test]
    fn gaussian_psf_matches_fine_trapezoid() {
        let sigma = 0.05;
        let lat =
            LatticeGeometry::new(1, 1.0, 0.0, WannierEnvelope::Gaussian { width: sigma }).unwrap();
        let o = optics(2.0 / 3.0);
        let k = o.band_limit();
        // independent trapezoid at 10x the default envelope panel count
        let n = 640;
        let (lo, hi) = (-8.0 * sigma, 8.0 * sigma);
        let h = (hi - lo) / n as f64;
        let oracle: f64 = (0..=n)
            .map(|i| {
                let x = lo + i as f64 * h;
                let w = if i == 0 || i == n { 0.5 } else { 1.0 };
                let dens = (-x * x / (2.0 * sigma * sigma)).exp() / (sigma * (2.0 * PI).sqrt());
                let kernel = if x == 0.0 {
                    1.0
                } else {
                    (k * x).sin() / (k * x)
                };
                w * h * dens * kernel
            })
            .sum();
        let f0 = psf_f(0.0, &lat, &o).unwrap();
        assert!((f0 - oracle).abs() < 1e-10, "{f0} vs {oracle}");
        assert!(f0 < 1.0);

        let narrow = lat
            .with_envelope(WannierEnvelope::Gaussian { width: 1e-4 })
            .unwrap();
        assert!((psf_f(0.0, &narrow, &o).unwrap() - 1.0).abs() < 1e-7);
    }

    #[test]
    fn psfs_are_even() {
        let lat =
            LatticeGeometry::new(1, 1.0, 0.0, WannierEnvelope::Gaussian { width: 0.08 }).unwrap();
        let o = optics(0.5);
        for x in [0.1, 0.37, 0.9, 2.3] {
            assert!((psf_f(x, &lat, &o).unwrap() - psf_f(-x, &lat, &o).unwrap()).abs() < 1e-12);
            assert!((psf_g(x, &lat, &o).unwrap() - psf_g(-x, &lat, &o).unwrap()).abs() < 1e-12);
            assert!(psf_g(x, &lat, &o).unwrap() >= 0.0);
        }
    }

    #[test]
    fn quartic_sinc_integral() {
        for na in [0.5, 2.0 / 3.0, 1.0] {
            let o = optics(na);
            let k = o.band_limit();
            let v = centroid_kernel_k(0.0, 0.0, 0.0, &o, &QuadratureSpec::default()).unwrap();
            let exact = 2.0 * PI / (3.0 * k);
            assert!(((v - exact) / exact).abs() < 1e-5, "{v} vs {exact}");
        }
    }

    #[test]
    fn quartic_sinc_against_wide_trapezoid() {
        // wide-window trapezoid oracle; sinc⁴ tails beyond 600/κ are < 1e-9
        let o = optics(0.5);
        let k = o.band_limit();
        let radius = 600.0 / k;
        let n = 120_000;
        let h = 2.0 * radius / n as f64;
        let oracle: f64 = (0..=n)
            .map(|i| {
                let x = -radius + i as f64 * h;
                let w = if i == 0 || i == n { 0.5 } else { 1.0 };
                w * h * sinc(k * x).powi(4)
            })
            .sum();
        assert!((oracle - 2.0 * PI / (3.0 * k)).abs() < 1e-8);
        let v = centroid_kernel_k(0.0, 0.0, 0.0, &o, &QuadratureSpec::default()).unwrap();
        assert!(((v - oracle) / oracle).abs() < 1e-5);
    }

    #[test]
    fn centroid_kernel_symmetries() {
        let o = optics(0.5);
        let q = QuadratureSpec::default();
        let cases = [(0.3, -0.2, 0.5), (1.1, 0.0, 0.4), (-0.7, -0.9, 0.8)];
        for (x_c, x, xp) in cases {
            let k1 = centroid_kernel_k(x_c, x, xp, &o, &q).unwrap();
            let k2 = centroid_kernel_k(x_c, xp, x, &o, &q).unwrap();
            assert!((k1 - k2).abs() < 1e-14);
            let reflected = centroid_kernel_k(-x_c, -x, -xp, &o, &q).unwrap();
            assert!((k1 - reflected).abs() < 1e-12);
            let s = 0.45;
            let shifted = centroid_kernel_k(x_c + s, x + s, xp + s, &o, &q).unwrap();
            assert!((k1 - shifted).abs() < 1e-12);
        }
    }

    #[test]
    fn identity_examples() {
        let q = QuadratureSpec::default();
        let b = PI;
        let scale = PI / b;
        let lhs = sinc_convolution_lhs(b, 0.0, 0.0, &q).unwrap();
        assert!((lhs - scale).abs() < 1e-6 * scale, "{lhs}");
        // b(y+z) = π puts the right-hand side on a sinc zero
        let zero = sinc_convolution_lhs(b, 0.4, 0.6, &q).unwrap();
        assert!(zero.abs() < 1e-6 * scale, "{zero}");
    }

    #[test]
    fn identity_rejects_bad_b() {
        assert!(
            sinc_convolution_identity_check(0.0, 0.0, 0.0, &QuadratureSpec::default()).is_err()
        );
    }

    #[test]
    fn tail_correction_is_needed() {
        // Without the tails the truncated integral misses ~1/(b·R); make sure
        // the correction is doing real work, not just noise.
        let b = PI;
        let radius = IDENTITY_RADIUS_B / b;
        let tails = right_tail(b, 0.0, 0.0, radius) * 2.0;
        assert!(tails.abs() > 1e-3 * (PI / b));
    }

    #[test]
    fn panel_doubling_is_stable() {
        let o = optics(0.5);
        let q = QuadratureSpec::default();
        let rule = XiRule::from_spec(o.band_limit(), &q);
        let fine = XiRule::from_spec(o.band_limit(), &q.doubled());
        for shift in [0.0, 0.3, 1.7] {
            let mut a = vec![0.0; rule.len()];
            let mut b = vec![0.0; fine.len()];
            rule.accumulate_pair_profile(shift, 1.0, &mut a);
            fine.accumulate_pair_profile(shift, 1.0, &mut b);
            let sq = |v: &[f64]| v.iter().map(|t| t * t).collect::<Vec<_>>();
            let c = rule.integrate(&sq(&a));
            let f = fine.integrate(&sq(&b));
            assert!(((c - f) / c).abs() < 1e-8, "shift {shift}: {c} vs {f}");
        }

        let env = WannierEnvelope::Gaussian { width: 0.06 };
        assert!(SiteKernels::checked(env, o.band_limit(), q.envelope_panels).is_ok());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]
            #[test]
            fn identity_holds_for_random_offsets(y in -2.0f64..2.0, z in -2.0f64..2.0, na in 0.2f64..1.0) {
                let b = optics(na).band_limit();
                let r = sinc_convolution_identity_check(b, y, z, &QuadratureSpec::default()).unwrap();
                prop_assert!(r < 1e-6 * PI / b, "residual {}", r);
            }

            #[test]
            fn point_psfs_bounded(x in -5.0f64..5.0) {
                let lat = LatticeGeometry::centered(1, 1.0).unwrap();
                let o = optics(0.5);
                let f = psf_f(x, &lat, &o).unwrap();
                let g = psf_g(x, &lat, &o).unwrap();
                prop_assert!((0.0..=1.0).contains(&g));
                prop_assert!((g - f * f).abs() < 1e-15);
            }
        }
    }
}
