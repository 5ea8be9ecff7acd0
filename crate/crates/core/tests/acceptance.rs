//! Acceptance suite: every criterion the crate promises, with pinned
//! tolerances and time budgets, one printed line per criterion.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the lines.

use std::time::{Duration, Instant};

use warpcheck_core::catalog;
use warpcheck_core::expr::{Chart, Expr};
use warpcheck_core::geometry::{inner, lie_bracket_at};
use warpcheck_core::killing::{
    curvature_identity_defect, killing_defect, ode_2killing_residual, two_killing_defect,
    CheckStatus, SampleSpec, Tolerance,
};
use warpcheck_core::scenario::{parse_scenario, Overrides};
use warpcheck_core::spacetime::{
    check_static_2killing, e6_residual, static_line_check, static_line_components,
    StaticCondition, StaticField, StaticSpacetime,
};
use warpcheck_core::warped::{
    connection_agreement_check, dxz_agreement_check, lie2_agreement_check,
    lie2_intext_variant_peak, lie_agreement_check, trace_agreement_check,
    trace_four_term_variant_peak, FiberSign, SplitField, WarpedProduct,
};
use warpcheck_core::{Manifold, Point, VectorFieldSpec};

fn finish(criterion: &str, start: Instant, budget: Duration, detail: &str) {
    let elapsed = start.elapsed();
    println!("{criterion}: PASS — {detail} ({elapsed:.2?})");
    assert!(
        elapsed < budget,
        "{criterion} exceeded its time budget: {elapsed:.2?} > {budget:.2?}"
    );
}

fn tol() -> Tolerance {
    Tolerance::default()
}

fn catalog_products() -> Vec<(WarpedProduct, Vec<(f64, f64)>)> {
    vec![
        (
            catalog::warped_exp_line(FiberSign::Plus),
            catalog::warped_exp_line_box(),
        ),
        (
            catalog::warped_poly_plane(),
            catalog::warped_poly_plane_box(),
        ),
        (
            catalog::warped_curved_lines(),
            catalog::warped_curved_lines_box(),
        ),
        (
            catalog::warped_exp_line(FiberSign::Minus),
            catalog::warped_exp_line_box(),
        ),
    ]
}

/// Base-only, fiber-only and genuinely mixed field triples per product.
fn mixed_field_sets(w: &WarpedProduct) -> Vec<(SplitField, SplitField, SplitField)> {
    let (zeta, x, y) = catalog::generic_split_fields(w);
    let base_x = SplitField::base_only(w, x.base().clone()).unwrap();
    let fiber_y = SplitField::fiber_only(w, y.fiber().clone()).unwrap();
    let base_z = SplitField::base_only(w, zeta.base().clone()).unwrap();
    let fiber_z = SplitField::fiber_only(w, zeta.fiber().clone()).unwrap();
    vec![
        (zeta.clone(), x.clone(), y.clone()),
        (base_z, base_x.clone(), y.clone()),
        (fiber_z, fiber_y.clone(), x),
        (zeta, base_x, fiber_y),
    ]
}

#[test]
fn criterion_01_connection_axioms() {
    let start = Instant::now();
    let tol = tol();
    let suite = catalog::manifold_suite();
    assert!(suite.len() >= 6, "catalog must offer at least 6 manifolds");
    let mut checked = 0usize;
    for (m, boxes, fields) in &suite {
        let x = &fields[0];
        let y = &fields[1];
        let points = SampleSpec::new(100, 101, boxes.clone())
            .unwrap()
            .points_on(m)
            .unwrap();
        for p in &points {
            // torsion
            let dxy = m.covariant_derivative_at(x, y, p).unwrap();
            let dyx = m.covariant_derivative_at(y, x, p).unwrap();
            let br = lie_bracket_at(x, y, p).unwrap();
            let mut scale = 0.0_f64;
            for v in dxy.iter().chain(&dyx).chain(&br) {
                scale = scale.max(v.abs());
            }
            for k in 0..m.dim() {
                let t = (dxy[k] - dyx[k] - br[k]).abs();
                assert!(tol.allows(t, scale), "{}: torsion {t:e} at {p}", m.name());
            }
            // metric compatibility along each coordinate direction
            let (g, _) = m.metric_at(p).unwrap();
            let xj: Vec<_> = x.components().iter().map(|c| c.eval_jet2(p).unwrap()).collect();
            let yj: Vec<_> = y.components().iter().map(|c| c.eval_jet2(p).unwrap()).collect();
            let n = m.dim();
            for k in 0..n {
                let mut lhs = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        let gij = m.metric_entry(i, j).eval_jet2(p).unwrap();
                        lhs += gij.grad()[k] * xj[i].value() * yj[j].value()
                            + gij.value()
                                * (xj[i].grad()[k] * yj[j].value()
                                    + xj[i].value() * yj[j].grad()[k]);
                    }
                }
                let z = VectorFieldSpec::coordinate(m.chart(), k);
                let dzx = m.covariant_derivative_at(&z, x, p).unwrap();
                let dzy = m.covariant_derivative_at(&z, y, p).unwrap();
                let xv = x.values_at(p).unwrap();
                let yv = y.values_at(p).unwrap();
                let rhs = inner(&g, &dzx, &yv) + inner(&g, &xv, &dzy);
                let scale = lhs.abs().max(rhs.abs());
                assert!(
                    tol.allows((lhs - rhs).abs(), scale),
                    "{}: compatibility {:e} at {p}",
                    m.name(),
                    (lhs - rhs).abs()
                );
            }
            checked += 1;
        }
    }
    finish(
        "criterion 1",
        start,
        Duration::from_secs(5),
        &format!(
            "torsion-free and metric-compatible on {} manifolds × 100 points ({checked} points total)",
            suite.len()
        ),
    );
}

#[test]
fn criterion_02_connection_split_form() {
    let start = Instant::now();
    let products = catalog_products();
    assert!(products.len() >= 3);
    let mut pairs = 0usize;
    for (w, boxes) in &products {
        let spec = SampleSpec::new(100, 102, boxes.clone()).unwrap();
        for (zeta, x, y) in mixed_field_sets(w) {
            for (a, b) in [(&zeta, &x), (&x, &y), (&y, &zeta)] {
                let r = connection_agreement_check(w, a, b, &spec, tol()).unwrap();
                assert!(
                    r.passed(),
                    "{}: residual {:e} scale {:e}",
                    w.product().name(),
                    r.max_residual,
                    r.scale
                );
                pairs += 1;
            }
        }
    }
    finish(
        "criterion 2",
        start,
        Duration::from_secs(5),
        &format!(
            "split-form connection matches intrinsic on {} products × 100 points × {pairs} field pairs",
            products.len()
        ),
    );
}

#[test]
fn criterion_03_first_derivative_split_forms() {
    let start = Instant::now();
    let products = catalog_products();
    for (w, boxes) in &products {
        let spec = SampleSpec::new(100, 103, boxes.clone()).unwrap();
        for (zeta, x, y) in mixed_field_sets(w) {
            let r = lie_agreement_check(w, &zeta, &x, &y, &spec, tol()).unwrap();
            assert!(
                r.passed(),
                "{} first-derivative split: residual {:e} scale {:e}",
                w.product().name(),
                r.max_residual,
                r.scale
            );
            let r = dxz_agreement_check(w, &zeta, &x, &spec, tol()).unwrap();
            assert!(
                r.passed(),
                "{} inner-product split: residual {:e} scale {:e}",
                w.product().name(),
                r.max_residual,
                r.scale
            );
        }
    }
    finish(
        "criterion 3",
        start,
        Duration::from_secs(5),
        "first Lie derivative and inner-product split forms match intrinsic values",
    );
}

#[test]
fn criterion_04_second_derivative_split_and_adjudication() {
    let start = Instant::now();
    let mut adjudicated = 0usize;
    for (w, boxes) in catalog_products() {
        let spec = SampleSpec::new(100, 104, boxes).unwrap();
        let (zeta, x, y) = catalog::generic_split_fields(&w);
        let r = lie2_agreement_check(&w, &zeta, &x, &y, &spec, tol()).unwrap();
        assert!(
            r.passed(),
            "{}: residual {:e} scale {:e}",
            w.product().name(),
            r.max_residual,
            r.scale
        );
        let peak = lie2_intext_variant_peak(&w, &zeta, &x, &y, &spec).unwrap();
        assert!(
            peak > 1e-3,
            "{}: duplicated-term variant was not refuted (peak {:e})",
            w.product().name(),
            peak
        );
        adjudicated += 1;
    }
    finish(
        "criterion 4",
        start,
        Duration::from_secs(10),
        &format!(
            "second-derivative split form ≤ 1e-8·scale while the duplicated-term variant exceeds 1e-3·scale on {adjudicated} products"
        ),
    );
}

#[test]
fn criterion_05_trace_split_form() {
    let start = Instant::now();
    let riemannian: Vec<(WarpedProduct, Vec<(f64, f64)>)> = vec![
        (
            catalog::warped_exp_line(FiberSign::Plus),
            catalog::warped_exp_line_box(),
        ),
        (
            catalog::warped_poly_plane(),
            catalog::warped_poly_plane_box(),
        ),
        (
            catalog::warped_curved_lines(),
            catalog::warped_curved_lines_box(),
        ),
    ];
    for (w, boxes) in &riemannian {
        let spec = SampleSpec::new(100, 105, boxes.clone()).unwrap();
        let (zeta, _, _) = catalog::generic_split_fields(w);
        let r = trace_agreement_check(w, &zeta, &spec, tol()).unwrap();
        assert!(
            r.passed(),
            "{}: residual {:e} scale {:e}",
            w.product().name(),
            r.max_residual,
            r.scale
        );
        // the four-term variant without the divergence cross term is
        // demonstrably incomplete on generic fields
        let peak = trace_four_term_variant_peak(w, &zeta, &spec).unwrap();
        assert!(
            peak > 1e-3,
            "{}: four-term trace variant unexpectedly matched (peak {:e})",
            w.product().name(),
            peak
        );
    }
    finish(
        "criterion 5",
        start,
        Duration::from_secs(5),
        "derivative-trace split (with the divergence cross term) matches on Riemannian products; the four-term variant is refuted on generic fields",
    );
}

#[test]
fn criterion_06_two_killing_characterizations() {
    let start = Instant::now();
    let tol = tol();

    // Killing ⇒ 2-Killing across the catalog
    let plane = catalog::euclidean_plane();
    let sphere = catalog::unit_sphere();
    let cylinder = catalog::cylinder();
    let hyper = catalog::hyperbolic_half_plane();
    let polar = catalog::polar_plane();
    let killing_fields: Vec<(&Manifold, VectorFieldSpec)> = vec![
        (&plane, catalog::rotation_field()),
        (
            &plane,
            VectorFieldSpec::from_sources(plane.chart(), &["1", "-2"]).unwrap(),
        ),
        (&sphere, VectorFieldSpec::coordinate(sphere.chart(), 1)),
        (&cylinder, VectorFieldSpec::coordinate(cylinder.chart(), 0)),
        (&hyper, VectorFieldSpec::coordinate(hyper.chart(), 0)),
        (&polar, VectorFieldSpec::coordinate(polar.chart(), 1)),
    ];
    for (m, field) in killing_fields {
        let spec = SampleSpec::new(100, 106, catalog::sample_box(m)).unwrap();
        let kd = killing_defect(m, &field, &spec, tol).unwrap();
        assert!(kd.max_residual <= 1e-12, "{} killing defect", m.name());
        let td = two_killing_defect(m, &field, &spec, tol).unwrap();
        assert!(td.max_residual <= 1e-10, "{} 2-killing defect", m.name());
    }

    // plane family versus the per-axis profile equation, passing and
    // failing members alike
    let xchart = Chart::new("ux", ["x"]).unwrap();
    let ychart = Chart::new("vy", ["y"]).unwrap();
    let boxes = catalog::cube_root_plane_box();
    let members = [
        ("(x+1)^(1/3)", "(2*y+5)^(1/3)"),
        ("(x+1)^(1/3)", "y"),
        ("x", "(2*y+5)^(1/3)"),
        ("2", "(2*y+5)^(1/3)"),
        ("x", "y"),
        ("(3*x+2)^(1/3)", "4"),
    ];
    for (u_src, v_src) in members {
        let field = VectorFieldSpec::from_sources(plane.chart(), &[u_src, v_src]).unwrap();
        let spec = SampleSpec::new(100, 107, boxes.clone()).unwrap();
        let two = two_killing_defect(&plane, &field, &spec, tol).unwrap();
        let ru = ode_2killing_residual(
            &Expr::parse(u_src, &xchart).unwrap(),
            &SampleSpec::new(100, 107, vec![boxes[0]]).unwrap(),
            tol,
        )
        .unwrap();
        let rv = ode_2killing_residual(
            &Expr::parse(v_src, &ychart).unwrap(),
            &SampleSpec::new(100, 107, vec![boxes[1]]).unwrap(),
            tol,
        )
        .unwrap();
        assert_eq!(
            two.passed(),
            ru.passed() && rv.passed(),
            "family member ({u_src}, {v_src}) disagrees with the profile equations"
        );
    }

    // connection route variants agree with the coordinate route
    for (m, boxes, fields) in catalog::manifold_suite() {
        let zeta = &fields[0];
        let points = SampleSpec::new(40, 108, boxes).unwrap().points_on(&m).unwrap();
        for p in &points {
            let h = m.lie2_metric_at(zeta, p).unwrap();
            for i in 0..m.dim() {
                for j in 0..m.dim() {
                    let x = VectorFieldSpec::coordinate(m.chart(), i);
                    let y = VectorFieldSpec::coordinate(m.chart(), j);
                    let via = m.lie2_via_connection_at(zeta, &x, &y, p).unwrap();
                    let scale = via.abs().max(h.get(i, j).abs());
                    assert!(
                        (via - h.get(i, j)).abs() <= 1e-10 + 1e-8 * scale,
                        "{} routes disagree at {p}",
                        m.name()
                    );
                }
            }
        }
    }

    finish(
        "criterion 6",
        start,
        Duration::from_secs(5),
        "Killing ⇒ 2-Killing on the catalog; plane family matches the profile equations member-for-member; both second-derivative routes agree",
    );
}

#[test]
fn criterion_07_curvature_identity() {
    let start = Instant::now();
    let plane = catalog::euclidean_plane();
    let sphere = catalog::unit_sphere();
    let cases: Vec<(&Manifold, VectorFieldSpec, Vec<(f64, f64)>)> = vec![
        (
            &plane,
            catalog::cube_root_plane_field(),
            catalog::cube_root_plane_box(),
        ),
        (&plane, catalog::rotation_field(), catalog::sample_box(&plane)),
        (
            &sphere,
            VectorFieldSpec::coordinate(sphere.chart(), 1),
            catalog::sample_box(&sphere),
        ),
    ];
    for (m, field, boxes) in cases {
        let spec = SampleSpec::new(100, 109, boxes).unwrap();
        let r = curvature_identity_defect(m, &field, &spec, tol()).unwrap();
        assert_eq!(
            r.status,
            CheckStatus::Passed,
            "{}: residual {:e} scale {:e} notes {:?}",
            m.name(),
            r.max_residual,
            r.scale,
            r.notes
        );
    }
    finish(
        "criterion 7",
        start,
        Duration::from_secs(5),
        "curvature identity holds for 2-Killing fields on the flat plane and the unit sphere under the locked convention",
    );
}

#[test]
fn criterion_08_static_sufficient_conditions() {
    let start = Instant::now();
    let tol = tol();

    let (s1, f1, b1) = catalog::static_constant_u();
    let spec1 = SampleSpec::new(100, 110, b1.clone()).unwrap();
    let r = check_static_2killing(&s1, &f1, &spec1, StaticCondition::ConstantU, tol).unwrap();
    assert_eq!(r.status, CheckStatus::Passed, "{:?}", r.notes);
    let r = e6_residual(&s1, &f1, &spec1, tol).unwrap();
    assert_eq!(r.status, CheckStatus::Passed, "{:?}", r.notes);

    let (s2, f2, b2) = catalog::static_cube_root_u();
    let spec2 = SampleSpec::new(100, 110, b2.clone()).unwrap();
    let r = check_static_2killing(&s2, &f2, &spec2, StaticCondition::CubeRootU, tol).unwrap();
    assert_eq!(r.status, CheckStatus::Passed, "{:?}", r.notes);
    let r = e6_residual(&s2, &f2, &spec2, tol).unwrap();
    assert_eq!(r.status, CheckStatus::Passed, "{:?}", r.notes);

    // single-hypothesis perturbations flip the 2-Killing defect to fail
    let broken_u = StaticField::new(
        &s2,
        Expr::parse("t", s2.interval().chart()).unwrap(),
        f2.zeta().clone(),
    )
    .unwrap();
    let zbar = broken_u.split_field(&s2).unwrap().product_field(s2.warped()).unwrap();
    let r = two_killing_defect(s2.manifold(), &zbar, &spec2, tol).unwrap();
    assert!(r.status == CheckStatus::Failed && r.max_residual > 1e-3);

    let tilted = StaticSpacetime::new(
        catalog::euclidean_plane(),
        Expr::parse("3 + x", catalog::euclidean_plane().chart()).unwrap(),
        "t",
    )
    .unwrap();
    let tilted_field = StaticField::new(
        &tilted,
        Expr::parse("(2*t + 3)^(1/3)", tilted.interval().chart()).unwrap(),
        VectorFieldSpec::from_sources(tilted.spatial().chart(), &["-y", "x"]).unwrap(),
    )
    .unwrap();
    let zbar = tilted_field
        .split_field(&tilted)
        .unwrap()
        .product_field(tilted.warped())
        .unwrap();
    let r = two_killing_defect(tilted.manifold(), &zbar, &spec2, tol).unwrap();
    assert!(r.status == CheckStatus::Failed && r.max_residual > 1e-3);

    let non_killing = StaticField::new(
        &s2,
        f2.u().clone(),
        VectorFieldSpec::from_sources(
            s2.spatial().chart(),
            &["-y*(x^2 + y^2)", "x*(x^2 + y^2)"],
        )
        .unwrap(),
    )
    .unwrap();
    let zbar = non_killing.split_field(&s2).unwrap().product_field(s2.warped()).unwrap();
    let r = two_killing_defect(s2.manifold(), &zbar, &spec2, tol).unwrap();
    assert!(r.status == CheckStatus::Failed && r.max_residual > 1e-3);

    // the unreduced time-time expansion holds with a generic u as long as
    // the spatial part is Killing
    let generic = StaticField::new(
        &s1,
        Expr::parse("t^2/3 + 1", s1.interval().chart()).unwrap(),
        VectorFieldSpec::from_sources(s1.spatial().chart(), &["1"]).unwrap(),
    )
    .unwrap();
    let zbar = generic.split_field(&s1).unwrap().product_field(s1.warped()).unwrap();
    let t_index = s1.time_index();
    for p in spec1.points_on(s1.manifold()).unwrap() {
        let (pb, pf) = s1.warped().split_point(&p).unwrap();
        let lie2 = s1.manifold().lie2_metric_at(&zbar, &p).unwrap();
        let lhs = lie2.get(t_index, t_index);
        let fj = s1.f().eval_jet2(&pb).unwrap();
        let uj = generic.u().eval_jet2(&pf).unwrap();
        let zfj = fj.grad()[0]; // ζ = ∂x
        let zfzf = zfj * zfj + fj.value() * fj.hess().get(0, 0);
        let eps = -1.0;
        let rhs = fj.value() * fj.value()
            * (2.0 * uj.value() * uj.hess().get(0, 0) + 4.0 * uj.grad()[0] * uj.grad()[0])
            * eps
            + 8.0 * uj.grad()[0] * fj.value() * zfj * eps
            + 2.0 * zfzf * eps;
        let scale = lhs.abs().max(rhs.abs());
        assert!(
            (lhs - rhs).abs() <= 1e-10 + 1e-8 * scale,
            "time-time expansion off by {:e} at {p}",
            (lhs - rhs).abs()
        );
    }

    finish(
        "criterion 8",
        start,
        Duration::from_secs(5),
        "both sufficient conditions hold, each hypothesis perturbation breaks the conclusion, and the time-time expansions match",
    );
}

#[test]
fn criterion_09_line_component_formulas() {
    let start = Instant::now();
    let xchart = Chart::new("bx", ["x"]).unwrap();
    let tchart = Chart::new("bt", ["t"]).unwrap();

    // componentwise agreement over 100 random draws per family
    let families: [(&str, &str, &str); 3] = [
        ("exp(x/2)", "t^2/4 + 1", "sin(x)/2 + x"),
        ("2 + sin(x)", "(2*t + 3)^(1/3)", "x^2/3"),
        ("sqrt(2*x + 3)", "exp(t/3)", "cbrt(x + 2)"),
    ];
    for (f_src, u_src, v_src) in families {
        let f = Expr::parse(f_src, &xchart).unwrap();
        let u = Expr::parse(u_src, &tchart).unwrap();
        let v = Expr::parse(v_src, &xchart).unwrap();
        let spec = SampleSpec::new(100, 111, vec![(-0.8, 1.2), (-0.9, 1.1)]).unwrap();
        let r = static_line_check(&f, &u, &v, &spec, tol()).unwrap();
        assert!(
            r.passed(),
            "({f_src}, {u_src}, {v_src}): residual {:e} scale {:e}",
            r.max_residual,
            r.scale
        );
    }

    // the hand value: f = e^x, u = t, v = 1 at x = 0 gives 16
    let f = Expr::parse("exp(x)", &xchart).unwrap();
    let u = Expr::parse("t", &tchart).unwrap();
    let v = Expr::parse("1", &xchart).unwrap();
    let cmp = static_line_components(&f, &u, &v, 0.3, 0.0).unwrap();
    assert!((cmp.closed[0][0] - 16.0).abs() <= 1e-8 * 16.0);
    assert!((cmp.intrinsic[0][0] - 16.0).abs() <= 1e-8 * 16.0);

    finish(
        "criterion 9",
        start,
        Duration::from_secs(2),
        "all four line components match the intrinsic values over 100 draws per family, including the hand value 16",
    );
}

#[test]
fn criterion_10_deterministic_reports() {
    let start = Instant::now();
    let run_suite = || {
        let mut all = String::new();
        for entry in catalog::examples() {
            let scenario = parse_scenario(entry.source).unwrap();
            let report = scenario
                .run(&Overrides {
                    seed: Some(0),
                    ..Default::default()
                })
                .unwrap();
            all.push_str(&report.to_json_lines());
        }
        all
    };
    let a = run_suite();
    let b = run_suite();
    assert!(!a.is_empty());
    assert_eq!(a, b, "two seed-0 runs must serialize to identical bytes");
    finish(
        "criterion 10",
        start,
        Duration::from_secs(60),
        &format!(
            "two seed-0 runs of all {} bundled scenarios produced byte-identical JSON ({} bytes)",
            catalog::examples().len(),
            a.len()
        ),
    );
}

// Sanity anchor used by several criteria: a point on the unit sphere where
// every convention-sensitive quantity has a known value.
#[test]
fn convention_anchor_on_the_unit_sphere() {
    let m = catalog::unit_sphere();
    let p = Point::new(m.chart().clone(), vec![1.0, 0.7]).unwrap();
    let r = m.riemann_at(&p).unwrap();
    let s2 = 1.0_f64.sin().powi(2);
    assert!((r.get(0, 1, 1, 0) - s2).abs() <= 1e-12);
    let k = m.sectional_at(&p, &[1.0, 0.0], &[0.0, 1.0]).unwrap();
    assert!((k - 1.0).abs() <= 1e-10);
    let ric = m.ricci_at(&p).unwrap();
    let (g, _) = m.metric_at(&p).unwrap();
    for i in 0..2 {
        for j in 0..2 {
            assert!((ric.get(i, j) - g[(i, j)]).abs() <= 1e-10 * g[(i, j)].abs().max(1.0));
        }
    }
}
