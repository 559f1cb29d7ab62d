use sigmaflow::expr::Expr;
use sigmaflow::models::{self, sphere_sigma};
use sigmaflow::soliton::{
    classify_values, lemma_structural_check, obata_check, point_residual, probe_points,
    soliton_residual, SolitonError, SolitonField, SolitonSpec, SolitonType, DEFAULT_SEED,
    TRIVIAL_TOLERANCE,
};

fn probes(spec: &SolitonSpec, count: usize) -> Vec<Vec<f64>> {
    probe_points(spec.chart.domain(), count, DEFAULT_SEED)
}

#[test]
fn sphere_solitons_pass_and_are_indefinite() {
    for n in 3..=5 {
        let spec = SolitonSpec::from_model(&models::sphere(n).unwrap()).unwrap();
        let report = soliton_residual(&spec, &probes(&spec, 64), TRIVIAL_TOLERANCE).unwrap();
        assert!(report.passes(), "n = {n}: {:?}", report.residual);
        assert!(!report.trivial);
        assert_eq!(report.classification.kind, SolitonType::Indefinite);
    }
}

#[test]
fn hyperbolic_solitons_pass() {
    for n in 3..=5 {
        let spec = SolitonSpec::from_model(&models::hyperbolic(n).unwrap()).unwrap();
        let report = soliton_residual(&spec, &probes(&spec, 64), TRIVIAL_TOLERANCE).unwrap();
        assert!(report.passes(), "n = {n}: {:?}", report.residual);
        assert!(!report.trivial);
    }
}

#[test]
fn other_index_pairs_on_the_sphere() {
    let n = 5;
    for (k, l) in [(1, 0), (3, 1), (5, 2), (4, 3)] {
        let mut v = vec![0.0; n + 1];
        v[1] = 0.6;
        v[n] = 0.8;
        let spec = SolitonSpec::from_model(&models::sphere_with(n, &v, k, l).unwrap()).unwrap();
        let report = soliton_residual(&spec, &probes(&spec, 32), TRIVIAL_TOLERANCE).unwrap();
        assert!(report.passes(), "({k}, {l})");
    }
}

#[test]
fn zero_lambda_is_not_a_soliton() {
    let spec = SolitonSpec::from_model(&models::sphere(4).unwrap())
        .unwrap()
        .with_lambda(Expr::num(0.0));
    let report = soliton_residual(&spec, &probes(&spec, 32), TRIVIAL_TOLERANCE).unwrap();
    assert!(!report.passes());
    assert!(report.residual.sup > 0.1);
}

#[test]
fn constant_shift_of_lambda_shows_up_linearly() {
    // ψ moves by -δ, so the residual becomes δ·g with norm δ√n
    let n = 4;
    let spec = SolitonSpec::from_model(&models::sphere(n).unwrap()).unwrap();
    let base = spec.lambda.clone();
    for delta in [1e-3, 0.1, 2.0] {
        let shifted = spec.with_lambda(base.clone() + Expr::num(delta));
        for x in probes(&spec, 8) {
            let r = point_residual(&shifted, &x).unwrap();
            assert!((r.residual - delta * (n as f64).sqrt()).abs() < 1e-9 * delta.max(1.0));
        }
        let lemma = lemma_structural_check(&shifted, &probes(&spec, 8)).unwrap();
        assert!((lemma.a - n as f64 * delta).abs() < 1e-8);
    }
}

#[test]
fn gradient_and_vector_forms_agree() {
    for model in [
        models::sphere(4).unwrap(),
        models::hyperbolic(3).unwrap(),
        models::product_line_sphere(3).unwrap(),
    ] {
        let spec = SolitonSpec::from_model(&model).unwrap();
        let as_field = spec.gradient_as_vector_field().unwrap();
        assert!(matches!(as_field.field, SolitonField::Vector(_)));
        for x in probes(&spec, 10) {
            let a = point_residual(&spec, &x).unwrap();
            let b = point_residual(&as_field, &x).unwrap();
            assert!((a.residual - b.residual).abs() < 1e-9);
            assert!((a.lie - b.lie).abs() < 1e-9 * a.lie.max(1.0));
        }
    }
}

#[test]
fn lemma_identities_on_the_sphere_soliton() {
    for n in 3..=5 {
        let spec = SolitonSpec::from_model(&models::sphere(n).unwrap()).unwrap();
        let r = lemma_structural_check(&spec, &probes(&spec, 32)).unwrap();
        assert!(r.a < 1e-6 && r.b < 1e-6 && r.c < 1e-6, "n = {n}: {r:?}");
    }
}

#[test]
fn lemma_needs_a_potential() {
    let spec = SolitonSpec::from_model(&models::example4(4).unwrap()).unwrap();
    assert!(matches!(
        lemma_structural_check(&spec, &probes(&spec, 4)),
        Err(SolitonError::NotGradient)
    ));
}

#[test]
fn obata_holds_on_round_and_rescaled_spheres() {
    let n = 4;
    let model = models::sphere(n).unwrap();
    let spec = SolitonSpec::from_model(&model).unwrap();
    assert!(obata_check(&spec, &probes(&spec, 32), 1e-8).unwrap() < 1e-8);

    let c: f64 = 2.5;
    let h = model.potential.clone().unwrap();
    // σ_k scales by c^{-k} under g -> c g
    let log_q = (sphere_sigma(n, model.k) / sphere_sigma(n, model.l)).ln()
        - (model.k - model.l) as f64 * c.ln();
    let scaled = SolitonSpec::new(
        model.chart.scaled(c),
        SolitonField::Gradient(Expr::num(c) * h.clone()),
        h + Expr::num(log_q),
        model.k,
        model.l,
    )
    .unwrap();
    let report = soliton_residual(&scaled, &probes(&scaled, 32), TRIVIAL_TOLERANCE).unwrap();
    assert!(report.passes());
    assert!(obata_check(&scaled, &probes(&scaled, 32), 1e-8).unwrap() < 1e-8);
}

#[test]
fn obata_rejects_non_constant_scalar_curvature() {
    let model = models::builtin("warped:sphere:3:cosh(x1)").unwrap();
    let spec = SolitonSpec::new(
        model.chart.clone(),
        SolitonField::Gradient(Expr::var(0)),
        Expr::num(0.0),
        4,
        2,
    )
    .unwrap();
    let pts = probe_points(spec.chart.domain(), 16, 3);
    match obata_check(&spec, &pts, 1e-8) {
        Err(SolitonError::NonConstantScalar { .. }) | Err(SolitonError::Cone { .. }) => {}
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn trivial_solitons() {
    for model in [
        models::product_line_sphere(3).unwrap(),
        models::example4(4).unwrap(),
        models::example4(5).unwrap(),
    ] {
        let spec = SolitonSpec::from_model(&model).unwrap();
        let report = soliton_residual(&spec, &probes(&spec, 32), TRIVIAL_TOLERANCE).unwrap();
        assert!(report.passes(), "{}", model.name);
        assert!(report.trivial, "{}", model.name);
    }
    let product = SolitonSpec::from_model(&models::product_line_sphere(3).unwrap()).unwrap();
    let report = soliton_residual(&product, &probes(&product, 8), TRIVIAL_TOLERANCE).unwrap();
    assert_eq!(report.classification.kind, SolitonType::Steady);
}

#[test]
fn models_without_data_are_rejected() {
    assert!(matches!(
        SolitonSpec::from_model(&models::euclidean(3).unwrap()),
        Err(SolitonError::NoSolitonData(_))
    ));
}

#[test]
fn cone_violations_surface_from_residuals() {
    let model = models::hyperbolic(4).unwrap();
    let spec = SolitonSpec::new(
        model.chart.clone(),
        SolitonField::Gradient(model.potential.clone().unwrap()),
        Expr::num(0.0),
        2,
        1,
    )
    .unwrap();
    assert!(matches!(
        soliton_residual(&spec, &probes(&spec, 4), 1e-7),
        Err(SolitonError::Cone { .. })
    ));
    assert!(matches!(
        soliton_residual(&spec, &[], 1e-7),
        Err(SolitonError::NoProbes)
    ));
}

#[test]
fn classification_thresholds() {
    assert_eq!(
        classify_values(&[0.0, 1e-9, -1e-9], 1e-7).kind,
        SolitonType::Steady
    );
    assert_eq!(
        classify_values(&[-1.0, -0.5], 1e-7).kind,
        SolitonType::Expanding
    );
    assert_eq!(
        classify_values(&[0.5, 2.0], 1e-7).kind,
        SolitonType::Shrinking
    );
    assert_eq!(
        classify_values(&[-0.5, 2.0], 1e-7).kind,
        SolitonType::Indefinite
    );
    assert_eq!(
        classify_values(&[0.0, 2.0], 1e-7).kind,
        SolitonType::Indefinite
    );
}

#[test]
fn probes_are_deterministic_and_interior() {
    let model = models::sphere(4).unwrap();
    let d = model.chart.domain();
    let a = probe_points(d, 50, DEFAULT_SEED);
    assert_eq!(a, probe_points(d, 50, DEFAULT_SEED));
    assert_ne!(a, probe_points(d, 50, DEFAULT_SEED + 1));
    for p in &a {
        for (&v, &(lo, hi)) in p.iter().zip(d.intervals()) {
            let margin = 0.02 * (hi - lo) - 1e-12;
            assert!(v >= lo + margin && v <= hi - margin);
        }
    }
}
