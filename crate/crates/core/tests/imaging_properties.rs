use lattice_imaging::imaging::CorrelatedPairModel;
use lattice_imaging::{
    centroid_amplitude_image, centroid_intensity_image, coherent_image, correlation_matrix,
    oscillation_report, twophoton_absorption_image, AxisKind, CorrelationMatrix, GridRequest,
    LatticeGeometry, Normalization, OpticsConfig, QuadratureSpec, SpinStateSpec, WannierEnvelope,
};
use proptest::prelude::*;

fn optics(na: f64) -> OpticsConfig {
    OpticsConfig::with_aperture(na).unwrap()
}

fn dimer(m: usize) -> CorrelationMatrix {
    correlation_matrix(&SpinStateSpec::dimer(m).unwrap())
}

#[test]
fn dimer_midpoints_alternate_in_the_resolvable_regime() {
    let m = 18;
    let o = optics(0.5);
    let mut violations = Vec::new();
    for a in [0.42, 0.45, 0.48, 0.5, 0.52, 0.6, 0.8, 1.0] {
        let lattice = LatticeGeometry::centered(m, a).unwrap();
        // step a/4 from -9a puts every pair midpoint on a sample
        let grid = GridRequest::new(AxisKind::Line, -9.0 * a, 9.0 * a, 4 * m + 1)
            .unwrap()
            .with_normalization(Normalization::Raw);
        let img =
            coherent_image(&dimer(m), &lattice, &o, &grid, &QuadratureSpec::default()).unwrap();
        // midpoint of sites j, j+1 sits at (j - 9)a, sample 4j
        let mid = |j: usize| img.values[4 * j];
        let bad = (1..m)
            .step_by(2)
            .filter(|&j| {
                let left = (j > 1).then(|| mid(j - 1));
                let right = (j + 1 < m).then(|| mid(j + 1));
                [left, right]
                    .into_iter()
                    .flatten()
                    .any(|side| mid(j) >= side)
            })
            .count();
        if bad > 0 {
            violations.push(format!(
                "a = {a}: {bad} of 9 intra-pair midpoints not below both neighbours"
            ));
        }
    }
    assert!(
        violations.is_empty(),
        "{}\nthe 2a dimer period needs 2π/(2a) ≤ 2κ, i.e. a ≥ λ/2 at NA 1/2",
        violations.join("\n")
    );
}

#[test]
fn displaced_pairs_see_no_dimer_cancellation() {
    let (m, o, q) = (12, optics(0.5), QuadratureSpec::default());
    let lattice = LatticeGeometry::centered(m, 1.0).unwrap();
    let unpolarized = correlation_matrix(&SpinStateSpec::unpolarized(m).unwrap());
    let model = CorrelatedPairModel::new(&dimer(m), &lattice, &o, 2.0, &q).unwrap();
    let base = CorrelatedPairModel::new(&unpolarized, &lattice, &o, 2.0, &q).unwrap();
    for j in 1..=m - 2 {
        let (x1, x2) = (lattice.site_position(j), lattice.site_position(j + 2));
        let ratio = model.intensity(x1, x2) / base.intensity(x1, x2);
        assert!((ratio - 1.0).abs() < 1e-9, "pair {j}: {ratio}");
    }
}

#[test]
fn unpolarized_centroid_oscillates_at_lattice_period() {
    let (m, a, o) = (18, 0.4, optics(0.5));
    let lattice = LatticeGeometry::centered(m, a).unwrap();
    let corr = correlation_matrix(&SpinStateSpec::unpolarized(m).unwrap());
    let grid = GridRequest::around(&lattice, &o, AxisKind::Centroid, 513).unwrap();
    let img =
        centroid_intensity_image(&corr, &lattice, &o, &grid, &QuadratureSpec::default()).unwrap();
    let period = oscillation_report(&img, &lattice, 2)
        .unwrap()
        .dominant_period;
    assert!(
        (period - a).abs() < 0.05 * a,
        "dominant period {period:.4}λ = {:.2}a; the centroid image carries spatial frequencies \
         only up to 4κ = 4π/λ, below the 2π/a = 5π/λ lattice frequency",
        period / a
    );
}

#[test]
fn gaussian_envelopes_broaden_but_keep_positivity() {
    let o = optics(0.5);
    let q = QuadratureSpec::default();
    let point = LatticeGeometry::centered(4, 0.6).unwrap();
    let wide = point
        .with_envelope(WannierEnvelope::gaussian(0.12).unwrap())
        .unwrap();
    let corr = dimer(4);
    let grid = GridRequest::around(&point, &o, AxisKind::Line, 201)
        .unwrap()
        .with_normalization(Normalization::Raw);
    let a = coherent_image(&corr, &point, &o, &grid, &q).unwrap();
    let b = coherent_image(&corr, &wide, &o, &grid, &q).unwrap();
    assert!(b.values.iter().all(|v| *v >= 0.0));
    assert!(b.raw_max < a.raw_max);
    let c = centroid_intensity_image(&corr, &wide, &o, &grid, &q).unwrap();
    assert!(c.values.iter().all(|v| *v >= 0.0));
}

fn product_state() -> impl Strategy<Value = Vec<i32>> {
    prop::collection::vec(-1i32..=1, 1..7)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn line_images_are_nonnegative(
        m in product_state(),
        a in 0.15f64..1.2,
        na in 0.2f64..1.0,
    ) {
        let o = optics(na);
        let lattice = LatticeGeometry::centered(m.len(), a).unwrap();
        let corr = correlation_matrix(&SpinStateSpec::product(m).unwrap());
        let grid = GridRequest::around(&lattice, &o, AxisKind::Line, 97)
            .unwrap()
            .with_normalization(Normalization::Raw);
        let q = QuadratureSpec::default();
        for img in [
            coherent_image(&corr, &lattice, &o, &grid, &q).unwrap(),
            twophoton_absorption_image(&corr, &lattice, &o, &grid, &q).unwrap(),
            centroid_amplitude_image(&corr, &lattice, &o, &grid, &q).unwrap(),
        ] {
            prop_assert!(img.values.iter().all(|v| *v >= 0.0));
        }
    }

    #[test]
    fn pair_intensity_is_swap_symmetric(
        x1 in -4.0f64..4.0,
        x2 in -4.0f64..4.0,
        d in 0.1f64..3.0,
    ) {
        let lattice = LatticeGeometry::centered(6, 0.7).unwrap();
        let model = CorrelatedPairModel::new(
            &correlation_matrix(&SpinStateSpec::trimer(6).unwrap()),
            &lattice,
            &optics(0.5),
            d,
            &QuadratureSpec::default(),
        )
        .unwrap();
        prop_assert_eq!(model.intensity(x1, x2), model.intensity(x2, x1));
        prop_assert!(model.intensity(x1, x2) >= -1e-12);
    }

    #[test]
    fn images_translate_with_the_lattice(shift in -2.0f64..2.0) {
        let o = optics(0.5);
        let q = QuadratureSpec::default();
        let corr = dimer(4);
        let base = LatticeGeometry::centered(4, 0.5).unwrap();
        let moved = LatticeGeometry::new(4, 0.5, shift, WannierEnvelope::Point).unwrap();
        let g0 = GridRequest::new(AxisKind::Line, -3.0, 3.0, 61).unwrap();
        let g1 = GridRequest::new(AxisKind::Line, -3.0 + shift, 3.0 + shift, 61).unwrap();
        let a = coherent_image(&corr, &base, &o, &g0, &q).unwrap();
        let b = coherent_image(&corr, &moved, &o, &g1, &q).unwrap();
        for (u, v) in a.values.iter().zip(&b.values) {
            prop_assert!((u - v).abs() < 1e-9);
        }
    }
}
