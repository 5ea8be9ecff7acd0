//! Standard static spacetimes: a Riemannian spatial manifold, a positive
//! function `f` on it, and a time interval, assembled as a warped product
//! with a negative fiber sign so the metric is `diag(g, −f²)` in
//! (spatial…, t) block order.
//!
//! The checks here specialize the warped-product identities to fields of
//! the form `ζ̄ = u(t)·∂t + ζ` with `ζ` spatial, and also cover the
//! Riemannian line version of the same split (`f²dt² + dx²`), whose
//! 2-Killing form has fully explicit component formulas.

use crate::expr::{Chart, Expr, Jet2, Point};
use crate::geometry::{GeomError, Manifold, VectorFieldSpec};
use crate::killing::{
    killing_defect, ode_2killing_residual, two_killing_defect, CheckResult, CheckStatus,
    DefectAccumulator, SampleSpec, Tolerance,
};
use crate::warped::{FiberSign, Residual, SplitField, WarpedProduct};

/// `I_f × M` with metric `−f²dt² ⊕ g`, stored internally as the warped
/// product `base = M`, `fiber = (I, dt²)`, warping `f`, fiber sign `−1`.
/// The product chart is (spatial…, t).
#[derive(Debug, Clone)]
pub struct StaticSpacetime {
    warped: WarpedProduct,
}

impl StaticSpacetime {
    pub fn new(
        spatial: Manifold,
        f: Expr,
        time_coord: &str,
    ) -> Result<StaticSpacetime, GeomError> {
        let time_chart = Chart::new(format!("{}_time", spatial.name()), [time_coord])?;
        let interval = Manifold::from_upper(
            format!("{}_interval", spatial.name()),
            time_chart.clone(),
            vec![Expr::constant(&time_chart, 1.0)],
        )?;
        let warped = WarpedProduct::new(spatial, interval, f, FiberSign::Minus)?;
        Ok(StaticSpacetime { warped })
    }

    pub fn warped(&self) -> &WarpedProduct {
        &self.warped
    }

    pub fn spatial(&self) -> &Manifold {
        self.warped.base()
    }

    /// The time factor `(I, dt²)` (positive line metric; the sign lives in
    /// the product assembly).
    pub fn interval(&self) -> &Manifold {
        self.warped.fiber()
    }

    pub fn f(&self) -> &Expr {
        self.warped.warping()
    }

    /// The Lorentzian product manifold.
    pub fn manifold(&self) -> &Manifold {
        self.warped.product()
    }

    pub fn spatial_dim(&self) -> usize {
        self.warped.base_dim()
    }

    /// Index of the time coordinate in the product chart.
    pub fn time_index(&self) -> usize {
        self.warped.base_dim()
    }
}

/// `ζ̄ = u(t)·∂t + ζ` with `u` on the interval and `ζ` on the spatial
/// manifold. The dependency restriction is structural: `u` parses on the
/// time chart, `ζ` on the spatial chart.
#[derive(Debug, Clone, PartialEq)]
pub struct StaticField {
    u: Expr,
    zeta: VectorFieldSpec,
}

impl StaticField {
    pub fn new(s: &StaticSpacetime, u: Expr, zeta: VectorFieldSpec) -> Result<StaticField, GeomError> {
        if u.chart() != s.interval().chart() {
            return Err(GeomError::ChartMismatch {
                expected: s.interval().chart().name().to_string(),
                found: u.chart().name().to_string(),
            });
        }
        if zeta.chart() != s.spatial().chart() {
            return Err(GeomError::ChartMismatch {
                expected: s.spatial().chart().name().to_string(),
                found: zeta.chart().name().to_string(),
            });
        }
        Ok(StaticField { u, zeta })
    }

    pub fn u(&self) -> &Expr {
        &self.u
    }

    pub fn zeta(&self) -> &VectorFieldSpec {
        &self.zeta
    }

    pub fn split_field(&self, s: &StaticSpacetime) -> Result<SplitField, GeomError> {
        let fiber = VectorFieldSpec::new(s.interval().chart().clone(), vec![self.u.clone()])?;
        SplitField::new(s.warped(), self.zeta.clone(), fiber)
    }
}

/// Which sufficient condition a static 2-Killing check verifies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StaticCondition {
    /// `ζ` Killing, `u` constant, `f·ζ(f)` constant.
    ConstantU,
    /// `ζ` Killing, `2uü + 4u̇² = 0`, `ζ(f) = 0`.
    CubeRootU,
}

impl StaticCondition {
    pub fn from_index(i: u8) -> Option<StaticCondition> {
        match i {
            1 => Some(StaticCondition::ConstantU),
            2 => Some(StaticCondition::CubeRootU),
            _ => None,
        }
    }
}

/// `ζ(f)` and `ζ(f·ζ(f))` data at a spatial point.
struct WarpData {
    zf: f64,
    dzfz: Vec<f64>, // ∂_k (f·ζ(f))
    z_fzf: f64,     // ζ(f·ζ(f))
    scale: f64,
}

fn warp_data(f: &Expr, zeta: &VectorFieldSpec, p: &Point) -> Result<WarpData, GeomError> {
    let fj = f.eval_jet2(p)?;
    let zj: Vec<Jet2> = zeta
        .components()
        .iter()
        .map(|c| c.eval_jet2(p))
        .collect::<Result<_, _>>()?;
    let n = zj.len();
    let zf: f64 = (0..n).map(|i| zj[i].value() * fj.grad()[i]).sum();
    // ∂_k (ζ(f)) = ∂_k ζ^i · f_i + ζ^i · f_{ik}
    let dzf: Vec<f64> = (0..n)
        .map(|k| {
            (0..n)
                .map(|i| zj[i].grad()[k] * fj.grad()[i] + zj[i].value() * fj.hess().get(i, k))
                .sum()
        })
        .collect();
    // ∂_k (f·ζ(f)) = f_k·ζ(f) + f·∂_k(ζ(f))
    let dzfz: Vec<f64> = (0..n)
        .map(|k| fj.grad()[k] * zf + fj.value() * dzf[k])
        .collect();
    let z_fzf: f64 = (0..n).map(|k| zj[k].value() * dzfz[k]).sum();
    let scale = fj.value().abs().max(zf.abs()).max(z_fzf.abs());
    Ok(WarpData {
        zf,
        dzfz,
        z_fzf,
        scale,
    })
}

/// Verifies one sufficient condition for `ζ̄ = u∂t + ζ` to be 2-Killing on
/// the static spacetime, then asserts the 2-Killing defect of `ζ̄` itself.
pub fn check_static_2killing(
    s: &StaticSpacetime,
    field: &StaticField,
    spec: &SampleSpec,
    condition: StaticCondition,
    tol: Tolerance,
) -> Result<CheckResult, GeomError> {
    let m = s.spatial_dim();
    let spatial_spec = spec.slice(0, m);
    let time_spec = spec.slice(m, 1);
    let mut unmet = Vec::new();

    let kd = killing_defect(s.spatial(), field.zeta(), &spatial_spec, tol)?;
    if !kd.passed() {
        unmet.push(format!(
            "spatial field is not Killing (defect {:e})",
            kd.max_residual
        ));
    }

    match condition {
        StaticCondition::ConstantU => {
            let mut du_max = 0.0_f64;
            let mut u_scale = 0.0_f64;
            for p in time_spec.points(s.interval().chart())? {
                let j = field.u().eval_jet2(&p)?;
                du_max = du_max.max(j.grad()[0].abs());
                u_scale = u_scale.max(j.value().abs());
            }
            if !tol.allows(du_max, u_scale) {
                unmet.push(format!("u is not constant (|u̇| up to {du_max:e})"));
            }
            let mut dfzf_max = 0.0_f64;
            let mut scale = 0.0_f64;
            for p in spatial_spec.points_on(s.spatial())? {
                let data = warp_data(s.f(), field.zeta(), &p)?;
                for d in &data.dzfz {
                    dfzf_max = dfzf_max.max(d.abs());
                }
                scale = scale.max(data.scale);
            }
            if !tol.allows(dfzf_max, scale) {
                unmet.push(format!(
                    "f·ζ(f) is not constant (|∂(fζ(f))| up to {dfzf_max:e})"
                ));
            }
        }
        StaticCondition::CubeRootU => {
            let ode = ode_2killing_residual(field.u(), &time_spec, tol)?;
            if !ode.passed() {
                unmet.push(format!(
                    "u does not satisfy 2uü + 4u̇² = 0 (residual {:e})",
                    ode.max_residual
                ));
            }
            let mut zf_max = 0.0_f64;
            let mut scale = 0.0_f64;
            for p in spatial_spec.points_on(s.spatial())? {
                let data = warp_data(s.f(), field.zeta(), &p)?;
                zf_max = zf_max.max(data.zf.abs());
                scale = scale.max(data.scale);
            }
            if !tol.allows(zf_max, scale) {
                unmet.push(format!("ζ(f) is not zero (up to {zf_max:e})"));
            }
        }
    }

    let zbar = field.split_field(s)?.product_field(s.warped())?;
    let conclusion = two_killing_defect(s.manifold(), &zbar, spec, tol)?;
    let mut result = conclusion;
    result.name = format!("static 2-killing field on {}", s.manifold().name());
    result.kind = "static_2killing".to_string();
    if !unmet.is_empty() {
        result.notes = unmet;
        result
            .notes
            .push(format!("conclusion defect was {:e}", result.max_residual));
        result.status = CheckStatus::HypothesesNotMet;
    }
    Ok(result)
}

/// Residual of the reduced time-time identity: when `ζ` is Killing on the
/// spatial factor and `2uü + 4u̇² = 0`, the full second Lie derivative
/// collapses to `2[4fζ(f)u̇ + ζ(fζ(f))]·g_I(∂t,∂t)` with `g_I = −dt²`.
pub fn e6_residual(
    s: &StaticSpacetime,
    field: &StaticField,
    spec: &SampleSpec,
    tol: Tolerance,
) -> Result<CheckResult, GeomError> {
    let m = s.spatial_dim();
    let spatial_spec = spec.slice(0, m);
    let time_spec = spec.slice(m, 1);
    let mut unmet = Vec::new();

    let kd = killing_defect(s.spatial(), field.zeta(), &spatial_spec, tol)?;
    if !kd.passed() {
        unmet.push(format!(
            "spatial field is not Killing (defect {:e})",
            kd.max_residual
        ));
    }
    let ode = ode_2killing_residual(field.u(), &time_spec, tol)?;
    if !ode.passed() {
        unmet.push(format!(
            "u does not satisfy 2uü + 4u̇² = 0 (residual {:e})",
            ode.max_residual
        ));
    }

    let zbar = field.split_field(s)?.product_field(s.warped())?;
    let t_index = s.time_index();
    let eps = -1.0; // g_I(∂t, ∂t)

    let mut acc = DefectAccumulator::new();
    for p in spec.points_on(s.manifold())? {
        let (pb, pf) = s.warped().split_point(&p)?;
        let (lie2, lie2_scale) = s.manifold().lie2_metric_scaled_at(&zbar, &p)?;
        let lhs = lie2.get(t_index, t_index);

        let data = warp_data(s.f(), field.zeta(), &pb)?;
        let fj = s.f().eval_jet2(&pb)?;
        let uj = field.u().eval_jet2(&pf)?;
        let rhs = 2.0 * (4.0 * fj.value() * data.zf * uj.grad()[0] + data.z_fzf) * eps;

        let scale = lhs.abs().max(rhs.abs()).max(lie2_scale).max(data.scale);
        acc.record((lhs - rhs).abs(), scale, &p);
    }
    let mut result = acc.finish(
        format!("reduced time-time identity on {}", s.manifold().name()),
        "static_tt_identity",
        tol,
    );
    if !unmet.is_empty() {
        result.notes = unmet;
        result.status = CheckStatus::HypothesesNotMet;
    }
    Ok(result)
}

/// Converse decomposition: a 2-Killing `ζ̄ = u∂t + ζ` on the spacetime has
/// a 2-Killing spatial part; and when additionally `ζ(f) = 0`, the time
/// part `u∂t` is 2-Killing on the interval.
pub fn converse_decompose(
    s: &StaticSpacetime,
    field: &StaticField,
    spec: &SampleSpec,
    tol: Tolerance,
) -> Result<CheckResult, GeomError> {
    let m = s.spatial_dim();
    let spatial_spec = spec.slice(0, m);
    let time_spec = spec.slice(m, 1);

    let zbar = field.split_field(s)?.product_field(s.warped())?;
    let gate = two_killing_defect(s.manifold(), &zbar, spec, tol)?;
    if !gate.passed() {
        let mut r = gate;
        r.name = format!("converse decomposition on {}", s.manifold().name());
        r.kind = "static_converse".to_string();
        r.status = CheckStatus::HypothesesNotMet;
        r.notes
            .push("combined field is not 2-Killing; nothing to decompose".to_string());
        return Ok(r);
    }

    let spatial = two_killing_defect(s.spatial(), field.zeta(), &spatial_spec, tol)?;
    let mut notes = vec![format!(
        "spatial part 2-killing defect {:e}",
        spatial.max_residual
    )];
    let mut status = spatial.status;
    let mut max_residual = spatial.max_residual;
    let mut scale = spatial.scale;
    let mut witness = spatial.witness.clone();

    let mut zf_max = 0.0_f64;
    let mut zf_scale = 0.0_f64;
    for p in spatial_spec.points_on(s.spatial())? {
        let data = warp_data(s.f(), field.zeta(), &p)?;
        zf_max = zf_max.max(data.zf.abs());
        zf_scale = zf_scale.max(data.scale);
    }
    if tol.allows(zf_max, zf_scale) {
        let time_field =
            VectorFieldSpec::new(s.interval().chart().clone(), vec![field.u().clone()])?;
        let time_part = two_killing_defect(s.interval(), &time_field, &time_spec, tol)?;
        notes.push(format!(
            "ζ(f) = 0 held, time part 2-killing defect {:e}",
            time_part.max_residual
        ));
        if time_part.max_residual > max_residual {
            max_residual = time_part.max_residual;
            witness = time_part.witness.clone();
        }
        scale = scale.max(time_part.scale);
        if !time_part.passed() {
            status = CheckStatus::Failed;
        }
    } else {
        notes.push(format!(
            "ζ(f) ≠ 0 (up to {zf_max:e}); time part not asserted"
        ));
    }

    Ok(CheckResult {
        name: format!("converse decomposition on {}", s.manifold().name()),
        kind: "static_converse".to_string(),
        status,
        max_residual,
        scale,
        atol: tol.atol,
        rtol: tol.rtol,
        witness,
        notes,
    })
}

/// Closed-form components of the 2-Killing form of `ζ̄ = u(t)∂t + v(x)∂x`
/// on the Riemannian line product `ds² = f²dt² + dx²`, in (t, x) display
/// order, compared against the intrinsic computation.
#[derive(Debug, Clone, PartialEq)]
pub struct StaticLineComparison {
    /// Closed-form matrix, rows/columns ordered (t, x).
    pub closed: [[f64; 2]; 2],
    /// Intrinsic matrix, same ordering.
    pub intrinsic: [[f64; 2]; 2],
    /// Max-abs comparison across the four components.
    pub residual: Residual,
}

/// Evaluates both routes at `(t, x)`.
///
/// `f` and `v` must be expressions over one coordinate (the line), `u`
/// over another (the interval); the two names must differ.
pub fn static_line_components(
    f: &Expr,
    u: &Expr,
    v: &Expr,
    t: f64,
    x: f64,
) -> Result<StaticLineComparison, GeomError> {
    let line_chart = f.chart().clone();
    let time_chart = u.chart().clone();
    if line_chart.dim() != 1 || time_chart.dim() != 1 {
        return Err(GeomError::Invalid(
            "line components require one-dimensional factor charts".to_string(),
        ));
    }
    if v.chart() != &line_chart {
        return Err(GeomError::ChartMismatch {
            expected: line_chart.name().to_string(),
            found: v.chart().name().to_string(),
        });
    }
    let base = Manifold::from_upper(
        "line",
        line_chart.clone(),
        vec![Expr::constant(&line_chart, 1.0)],
    )?;
    let fiber = Manifold::from_upper(
        "interval",
        time_chart.clone(),
        vec![Expr::constant(&time_chart, 1.0)],
    )?;
    let w = WarpedProduct::new(base, fiber, f.clone(), FiberSign::Plus)?;

    let vfield = VectorFieldSpec::new(line_chart.clone(), vec![v.clone()])?;
    let ufield = VectorFieldSpec::new(time_chart.clone(), vec![u.clone()])?;
    let zbar = SplitField::new(&w, vfield, ufield)?.product_field(&w)?;

    let px = Point::new(line_chart, vec![x])?;
    let pt = Point::new(time_chart, vec![t])?;
    let p = w.join_point(&px, &pt)?;

    // Intrinsic, product chart order (x, t) — reordered to (t, x) below.
    let (lie2, lie2_scale) = w.product().lie2_metric_scaled_at(&zbar, &p)?;
    let intrinsic = [
        [lie2.get(1, 1), lie2.get(1, 0)],
        [lie2.get(0, 1), lie2.get(0, 0)],
    ];

    let fj = f.eval_jet2(&px)?;
    let uj = u.eval_jet2(&pt)?;
    let vj = v.eval_jet2(&px)?;
    let (fv, f1, f2) = (fj.value(), fj.grad()[0], fj.hess().get(0, 0));
    let (uv, u1, u2) = (uj.value(), uj.grad()[0], uj.hess().get(0, 0));
    let (vv, v1, v2) = (vj.value(), vj.grad()[0], vj.hess().get(0, 0));

    let tt = 2.0 * fv * fv * (uv * u2 + 2.0 * u1 * u1)
        + 2.0 * (vv * vv * fv * f2 + vv * v1 * fv * f1)
        + 8.0 * u1 * vv * fv * f1
        + 2.0 * vv * vv * f1 * f1;
    let xx = 2.0 * (vv * v2 + 2.0 * v1 * v1);
    let closed = [[tt, 0.0], [0.0, xx]];

    let mut max_res = 0.0_f64;
    let mut scale = lie2_scale;
    for i in 0..2 {
        for j in 0..2 {
            max_res = max_res.max((closed[i][j] - intrinsic[i][j]).abs());
            scale = scale.max(closed[i][j].abs()).max(intrinsic[i][j].abs());
        }
    }
    Ok(StaticLineComparison {
        closed,
        intrinsic,
        residual: Residual {
            lhs: intrinsic[0][0],
            rhs: closed[0][0],
            residual: max_res,
            scale,
        },
    })
}

/// Samples [`static_line_components`] over a box and reports the worst
/// component residual.
pub fn static_line_check(
    f: &Expr,
    u: &Expr,
    v: &Expr,
    spec: &SampleSpec,
    tol: Tolerance,
) -> Result<CheckResult, GeomError> {
    // Boxes are in display order (t, x).
    if spec.boxes().len() != 2 {
        return Err(GeomError::Dimension {
            expected: 2,
            got: spec.boxes().len(),
        });
    }
    let display_chart = Chart::new(
        "line_product",
        [u.chart().coords()[0].clone(), f.chart().coords()[0].clone()],
    )?;
    let mut acc = DefectAccumulator::new();
    for p in spec.points(&display_chart)? {
        let (t, x) = (p.coords()[0], p.coords()[1]);
        let cmp = static_line_components(f, u, v, t, x)?;
        acc.record(cmp.residual.residual, cmp.residual.scale, &p);
    }
    Ok(acc.finish(
        "2-killing form components on the warped line",
        "static_line",
        tol,
    ))
}
