//! Bundled constructions shared by unit tests, the acceptance suite, the
//! benchmarks and the example scenarios: a small zoo of manifolds with
//! sensible sampling boxes, warped products over them, and static
//! spacetime instances for both sufficient-condition families.

use crate::expr::{Chart, Expr};
use crate::geometry::{Manifold, VectorFieldSpec};
use crate::spacetime::{StaticField, StaticSpacetime};
use crate::warped::{FiberSign, SplitField, WarpedProduct};

fn parse(src: &str, chart: &Chart) -> Expr {
    Expr::parse(src, chart).expect("catalog expression parses")
}

fn build(name: &str, coords: &[&str], upper: &[&str], domain: &[&str]) -> Manifold {
    let chart = Chart::new(name, coords.iter().copied()).expect("catalog chart");
    let entries = upper.iter().map(|s| parse(s, &chart)).collect();
    let m = Manifold::from_upper(name, chart.clone(), entries).expect("catalog manifold");
    if domain.is_empty() {
        m
    } else {
        m.with_domain(domain.iter().map(|s| parse(s, &chart)).collect())
    }
}

/// Flat line `dx²` over an arbitrary coordinate name.
pub fn line(coord: &str) -> Manifold {
    build(&format!("line_{coord}"), &[coord], &["1"], &[])
}

pub fn euclidean_plane() -> Manifold {
    build("euclidean_plane", &["x", "y"], &["1", "0", "1"], &[])
}

/// Flat plane in polar coordinates, `dr² + r²dθ²`, on `r > 0`.
pub fn polar_plane() -> Manifold {
    build("polar_plane", &["r", "theta"], &["1", "0", "r^2"], &["r"])
}

/// Unit sphere chart `dθ² + sin²θ dφ²` away from the poles.
pub fn unit_sphere() -> Manifold {
    build(
        "unit_sphere",
        &["theta", "phi"],
        &["1", "0", "sin(theta)^2"],
        &["sin(theta)"],
    )
}

/// Flat cylinder `dθ² + dz²`.
pub fn cylinder() -> Manifold {
    build("cylinder", &["theta", "z"], &["1", "0", "1"], &[])
}

/// Hyperbolic half-plane `(dx² + dy²)/y²` on `y > 0`; curvature −1.
pub fn hyperbolic_half_plane() -> Manifold {
    build(
        "hyperbolic_half_plane",
        &["x", "y"],
        &["y^-2", "0", "y^-2"],
        &["y"],
    )
}

/// A generic curved surface with off-diagonal metric entries; exists so
/// that nothing in the test matrix accidentally relies on diagonality.
pub fn skewed_surface() -> Manifold {
    build(
        "skewed_surface",
        &["x", "y"],
        &["4 + sin(x)^2", "x*y/8", "2 + exp(y/4)"],
        &[],
    )
}

/// Sampling box appropriate for each catalog manifold, keyed by name.
pub fn sample_box(m: &Manifold) -> Vec<(f64, f64)> {
    match m.name() {
        "polar_plane" => vec![(0.5, 2.5), (0.2, 5.8)],
        "unit_sphere" => vec![(0.4, 2.7), (0.0, 6.0)],
        "hyperbolic_half_plane" => vec![(-2.0, 2.0), (0.4, 3.0)],
        _ => m.chart().coords().iter().map(|_| (-1.4, 1.6)).collect(),
    }
}

/// The manifolds exercised by the connection-axiom checks, each with its
/// sampling box and a pair of generic smooth test fields.
pub fn manifold_suite() -> Vec<(Manifold, Vec<(f64, f64)>, Vec<VectorFieldSpec>)> {
    let mut out = Vec::new();
    for m in [
        euclidean_plane(),
        polar_plane(),
        unit_sphere(),
        cylinder(),
        hyperbolic_half_plane(),
        skewed_surface(),
    ] {
        let boxes = sample_box(&m);
        let c = m.chart().clone();
        let names = c.coords().to_vec();
        let (a, b) = (&names[0], &names[1]);
        let fields = vec![
            VectorFieldSpec::from_sources(
                &c,
                &[
                    &format!("1 + {a}/4 + sin({b})/3"),
                    &format!("{b}/5 - cos({a})/4"),
                ],
            )
            .expect("catalog field"),
            VectorFieldSpec::from_sources(
                &c,
                &[&format!("{b}/3 + 1/2"), &format!("{a}*{b}/6 + 1/4")],
            )
            .expect("catalog field"),
        ];
        out.push((m, boxes, fields));
    }
    out
}

/// Rotation field on the euclidean plane; Killing.
pub fn rotation_field() -> VectorFieldSpec {
    let m = euclidean_plane();
    VectorFieldSpec::from_sources(m.chart(), &["-y", "x"]).expect("rotation field")
}

/// `u(x)∂x + v(y)∂y` with cube-root profiles: 2-Killing but not Killing.
pub fn cube_root_plane_field() -> VectorFieldSpec {
    let m = euclidean_plane();
    VectorFieldSpec::from_sources(m.chart(), &["(x+1)^(1/3)", "(2*y+5)^(1/3)"])
        .expect("cube root field")
}

/// Box on which the cube-root profiles stay well inside their domain.
pub fn cube_root_plane_box() -> Vec<(f64, f64)> {
    vec![(-0.4, 1.8), (-1.6, 1.8)]
}

/// Warped product of two flat lines with an exponential warping:
/// `dx² + ε·e^{2x}dt²`.
pub fn warped_exp_line(sign: FiberSign) -> WarpedProduct {
    let base = line("x");
    let fiber = line("t");
    let f = parse("exp(x)", base.chart());
    WarpedProduct::new(base, fiber, f, sign).expect("warped line")
}

pub fn warped_exp_line_box() -> Vec<(f64, f64)> {
    vec![(-0.6, 1.1), (-1.0, 1.5)]
}

/// Plane base, line fiber, polynomial warping `1 + x² + y²`.
pub fn warped_poly_plane() -> WarpedProduct {
    let base = euclidean_plane();
    let fiber = line("z");
    let f = parse("1 + x^2 + y^2", base.chart());
    WarpedProduct::new(base, fiber, f, FiberSign::Plus).expect("warped plane")
}

pub fn warped_poly_plane_box() -> Vec<(f64, f64)> {
    vec![(-1.2, 1.2), (-1.2, 1.2), (-1.5, 1.5)]
}

/// Curved base and curved fiber lines with a bounded warping, so nothing
/// in the product is flat or diagonal-trivial.
pub fn warped_curved_lines() -> WarpedProduct {
    let base_chart = Chart::new("curved_base", ["x"]).expect("chart");
    let base = Manifold::from_upper(
        "curved_base",
        base_chart.clone(),
        vec![parse("1 + x^2", &base_chart)],
    )
    .expect("curved base");
    let fiber_chart = Chart::new("curved_fiber", ["t"]).expect("chart");
    let fiber = Manifold::from_upper(
        "curved_fiber",
        fiber_chart.clone(),
        vec![parse("1 + t^2/4", &fiber_chart)],
    )
    .expect("curved fiber");
    let f = parse("2 + sin(x)", &base_chart);
    WarpedProduct::new(base, fiber, f, FiberSign::Plus).expect("curved warped product")
}

pub fn warped_curved_lines_box() -> Vec<(f64, f64)> {
    vec![(-1.3, 1.3), (-1.5, 1.5)]
}

/// Generic (non-Killing) split fields on a warped product of two lines or
/// a plane-times-line product, used by the closed-form comparisons.
pub fn generic_split_fields(w: &WarpedProduct) -> (SplitField, SplitField, SplitField) {
    let bc = w.base().chart();
    let fc = w.fiber().chart();
    let base_sources: Vec<String> = bc
        .coords()
        .iter()
        .enumerate()
        .map(|(i, c)| format!("{c}^2/3 + {}", (i + 1) as f64 / 4.0))
        .collect();
    let fiber_sources: Vec<String> = fc
        .coords()
        .iter()
        .enumerate()
        .map(|(i, c)| format!("sin({c})/2 + {c}/3 + {}", (i + 1) as f64 / 5.0))
        .collect();
    let zeta = SplitField::new(
        w,
        VectorFieldSpec::from_sources(
            bc,
            &base_sources.iter().map(String::as_str).collect::<Vec<_>>(),
        )
        .expect("zeta base"),
        VectorFieldSpec::from_sources(
            fc,
            &fiber_sources.iter().map(String::as_str).collect::<Vec<_>>(),
        )
        .expect("zeta fiber"),
    )
    .expect("zeta");

    let x_base: Vec<String> = bc
        .coords()
        .iter()
        .map(|c| format!("cos({c})/3 + 1/2"))
        .collect();
    let x_fiber: Vec<String> = fc.coords().iter().map(|c| format!("{c}/4 + 1")).collect();
    let x = SplitField::new(
        w,
        VectorFieldSpec::from_sources(bc, &x_base.iter().map(String::as_str).collect::<Vec<_>>())
            .expect("x base"),
        VectorFieldSpec::from_sources(
            fc,
            &x_fiber.iter().map(String::as_str).collect::<Vec<_>>(),
        )
        .expect("x fiber"),
    )
    .expect("x");

    let y_base: Vec<String> = bc
        .coords()
        .iter()
        .enumerate()
        .map(|(i, c)| format!("{c}/5 - {}", (i as f64 + 2.0) / 6.0))
        .collect();
    let y_fiber: Vec<String> = fc
        .coords()
        .iter()
        .map(|c| format!("exp({c}/3)/2"))
        .collect();
    let y = SplitField::new(
        w,
        VectorFieldSpec::from_sources(bc, &y_base.iter().map(String::as_str).collect::<Vec<_>>())
            .expect("y base"),
        VectorFieldSpec::from_sources(
            fc,
            &y_fiber.iter().map(String::as_str).collect::<Vec<_>>(),
        )
        .expect("y fiber"),
    )
    .expect("y");

    (zeta, x, y)
}

/// Static instance for the constant-`u` condition: spatial half-line with
/// `f = √(2x+1)` (so `f·ζ(f) ≡ 1`), `ζ = ∂x`, `u ≡ 5`.
pub fn static_constant_u() -> (StaticSpacetime, StaticField, Vec<(f64, f64)>) {
    let chart = Chart::new("halfline", ["x"]).expect("chart");
    let spatial = Manifold::from_upper("halfline", chart.clone(), vec![parse("1", &chart)])
        .expect("halfline")
        .with_domain(vec![parse("2*x + 1", &chart)]);
    let f = parse("sqrt(2*x + 1)", &chart);
    let s = StaticSpacetime::new(spatial, f, "t").expect("static");
    let zeta = VectorFieldSpec::from_sources(s.spatial().chart(), &["1"]).expect("zeta");
    let u = parse("5", s.interval().chart());
    let field = StaticField::new(&s, u, zeta).expect("field");
    (s, field, vec![(0.2, 2.0), (-1.0, 2.0)])
}

/// Static instance for the cube-root-`u` condition: plane with radial
/// `f = 1 + x² + y²`, rotation `ζ` (so `ζ(f) = 0`), `u = (2t+3)^{1/3}`.
pub fn static_cube_root_u() -> (StaticSpacetime, StaticField, Vec<(f64, f64)>) {
    let spatial = euclidean_plane();
    let f = parse("1 + x^2 + y^2", spatial.chart());
    let s = StaticSpacetime::new(spatial, f, "t").expect("static");
    let zeta = VectorFieldSpec::from_sources(s.spatial().chart(), &["-y", "x"]).expect("zeta");
    let u = parse("(2*t + 3)^(1/3)", s.interval().chart());
    let field = StaticField::new(&s, u, zeta).expect("field");
    (s, field, vec![(-1.5, 1.5), (-1.5, 1.5), (0.0, 3.0)])
}

/// Flat 1+1 static spacetime (`f ≡ 1`): Minkowski in (x, t) order.
pub fn minkowski_line() -> (StaticSpacetime, Vec<(f64, f64)>) {
    let spatial = line("x");
    let f = parse("1", spatial.chart());
    let s = StaticSpacetime::new(spatial, f, "t").expect("static");
    (s, vec![(-2.0, 2.0), (-2.0, 2.0)])
}

/// A named, bundled scenario: its source text ships inside the binary so
/// the runner works from any directory.
#[derive(Debug, Clone, Copy)]
pub struct ExampleEntry {
    pub name: &'static str,
    pub description: &'static str,
    pub source: &'static str,
}

/// The bundled example scenarios, in listing order.
pub fn examples() -> &'static [ExampleEntry] {
    &[
        ExampleEntry {
            name: "euclidean-plane-2killing",
            description: "cube-root profile fields on the flat plane; per-axis 2uu''+4u'^2 = 0 characterizes the 2-Killing defect",
            source: include_str!("../scenarios/euclidean-plane-2killing.scn"),
        },
        ExampleEntry {
            name: "th1-random-warped",
            description: "second-Lie-derivative split identity on a curved warped product with generic fields",
            source: include_str!("../scenarios/th1-random-warped.scn"),
        },
        ExampleEntry {
            name: "appendix-b-static-line",
            description: "explicit 2-Killing form components on the warped line f^2 dt^2 + dx^2",
            source: include_str!("../scenarios/appendix-b-static-line.scn"),
        },
        ExampleEntry {
            name: "static-cond1",
            description: "static spacetime with constant u and constant f*zeta(f)",
            source: include_str!("../scenarios/static-cond1.scn"),
        },
        ExampleEntry {
            name: "static-cond2",
            description: "static spacetime with cube-root u and zeta(f) = 0",
            source: include_str!("../scenarios/static-cond2.scn"),
        },
        ExampleEntry {
            name: "warped-connection",
            description: "split-form connection, inner-product and derivative-trace identities in both fiber signs",
            source: include_str!("../scenarios/warped-connection.scn"),
        },
        ExampleEntry {
            name: "sphere-curvature",
            description: "axial rotation field on the unit sphere: Killing, curvature identity, sectional sign",
            source: include_str!("../scenarios/sphere-curvature.scn"),
        },
        ExampleEntry {
            name: "parallel-theorem",
            description: "parallelism of 2-Killing fields under nonpositive factor Ricci hypotheses",
            source: include_str!("../scenarios/parallel-theorem.scn"),
        },
    ]
}

pub fn example(name: &str) -> Option<&'static ExampleEntry> {
    examples().iter().find(|e| e.name == name)
}
