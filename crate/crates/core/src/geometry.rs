//! Pointwise pseudo-Riemannian machinery on a single chart: metric and
//! inverse, Levi-Civita connection, Lie brackets, first and second Lie
//! derivatives of the metric, curvature.
//!
//! Everything is evaluated numerically at a point from second-order jets of
//! the metric entries and field components — no finite differences, no
//! symbolic simplification. The signature is never assumed definite; traces
//! and gradients always go through the inverse metric.
//!
//! Curvature convention, fixed once and locked by regression tests:
//! `R(X,Y)Z = D_X D_Y Z − D_Y D_X Z − D_{[X,Y]} Z`, stored as the (0,4)
//! tensor `R[i][j][k][l] = g(R(∂i,∂j)∂k, ∂l)`. Under this storage the unit
//! sphere has `R[θ][φ][φ][θ] = sin²θ`, sectional curvature
//! `K(u,v) = R4(u,v,v,u) / (‖u‖²‖v‖² − g(u,v)²)` is `+1` on the unit
//! sphere, and the Ricci contraction `Ric[j][k] = g^{ml} R[m][j][k][l]`
//! makes the unit sphere Einstein with `Ric = g`.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::expr::{Chart, Expr, ExprError, Jet2, Point};
use crate::tensor::{SymMat, Tensor3, Tensor4};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum GeomError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("singular metric at {point}: |det| = {det:e} below threshold {threshold:e}")]
    SingularMetric {
        point: String,
        det: f64,
        threshold: f64,
    },
    #[error("degenerate plane at {point}: gram determinant {gram:e}")]
    DegeneratePlane { point: String, gram: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("chart `{expected}` expected, got `{found}`")]
    ChartMismatch { expected: String, found: String },
    #[error("invalid manifold: {0}")]
    Invalid(String),
    #[error("warping function not positive at {point}: f = {value}")]
    NonpositiveWarping { point: String, value: f64 },
    #[error("unsupported signature: {0}")]
    SignatureUnsupported(String),
    #[error("sampled point {point} violates domain constraint `{constraint}`")]
    SamplingDomain { point: String, constraint: String },
}

fn check_chart(expected: &Chart, found: &Chart) -> Result<(), GeomError> {
    if expected != found {
        return Err(GeomError::ChartMismatch {
            expected: expected.name().to_string(),
            found: found.name().to_string(),
        });
    }
    Ok(())
}

#[inline]
fn packed_idx(n: usize, i: usize, j: usize) -> usize {
    let (a, b) = if i <= j { (i, j) } else { (j, i) };
    a * n - (a * a - a) / 2 + (b - a)
}

/// Metric inner product of two vectors at a point.
pub fn inner(g: &DMatrix<f64>, u: &[f64], v: &[f64]) -> f64 {
    let n = g.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += g[(i, j)] * u[i] * v[j];
        }
    }
    acc
}

/// Contraction of a rank-4 tensor with four vectors.
pub fn contract4(r: &Tensor4, a: &[f64], b: &[f64], c: &[f64], d: &[f64]) -> f64 {
    let n = r.dim();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    acc += r.get(i, j, k, l) * a[i] * b[j] * c[k] * d[l];
                }
            }
        }
    }
    acc
}

/// A chart together with a symmetric matrix of metric-entry expressions and
/// an optional list of domain constraints (each expression must be `> 0`).
///
/// The metric is stored packed: entries `(i,j)` and `(j,i)` are literally
/// the same AST.
#[derive(Debug, Clone)]
pub struct Manifold {
    name: String,
    chart: Chart,
    metric: Vec<Expr>,
    domain: Vec<Expr>,
}

impl Manifold {
    /// Builds from full rows; the rows must be structurally symmetric.
    pub fn new(
        name: impl Into<String>,
        chart: Chart,
        rows: Vec<Vec<Expr>>,
    ) -> Result<Manifold, GeomError> {
        let n = chart.dim();
        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
            return Err(GeomError::Dimension {
                expected: n,
                got: rows.len(),
            });
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if rows[i][j] != rows[j][i] {
                    return Err(GeomError::Invalid(format!(
                        "metric entries ({i},{j}) and ({j},{i}) differ: `{}` vs `{}`",
                        rows[i][j], rows[j][i]
                    )));
                }
            }
        }
        let mut metric = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in i..n {
                metric.push(rows[i][j].clone());
            }
        }
        Ok(Manifold {
            name: name.into(),
            chart,
            metric,
            domain: Vec::new(),
        })
    }

    /// Builds from the upper triangle in row-major order
    /// (row 0 first: `g00 g01 … g0n g11 g12 …`).
    pub fn from_upper(
        name: impl Into<String>,
        chart: Chart,
        upper: Vec<Expr>,
    ) -> Result<Manifold, GeomError> {
        let n = chart.dim();
        if upper.len() != n * (n + 1) / 2 {
            return Err(GeomError::Dimension {
                expected: n * (n + 1) / 2,
                got: upper.len(),
            });
        }
        Ok(Manifold {
            name: name.into(),
            chart,
            metric: upper,
            domain: Vec::new(),
        })
    }

    pub fn with_domain(mut self, constraints: Vec<Expr>) -> Manifold {
        self.domain = constraints;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn metric_entry(&self, i: usize, j: usize) -> &Expr {
        &self.metric[packed_idx(self.dim(), i, j)]
    }

    pub fn domain(&self) -> &[Expr] {
        &self.domain
    }

    /// True when every domain constraint is strictly positive at `p`.
    pub fn domain_ok(&self, p: &Point) -> Result<bool, GeomError> {
        for c in &self.domain {
            if c.eval(p)? <= 0.0 {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Metric matrix and its inverse at a point.
    ///
    /// Fails with `SingularMetric` when `|det g| < 1e-12·(max|g_ij|)^n`.
    pub fn metric_at(&self, p: &Point) -> Result<(DMatrix<f64>, DMatrix<f64>), GeomError> {
        check_chart(&self.chart, p.chart())?;
        let n = self.dim();
        let mut g = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = self.metric_entry(i, j).eval(p)?;
                g[(i, j)] = v;
                g[(j, i)] = v;
            }
        }
        let inv = self.invert(&g, p)?;
        Ok((g, inv))
    }

    fn invert(&self, g: &DMatrix<f64>, p: &Point) -> Result<DMatrix<f64>, GeomError> {
        let n = self.dim();
        let max_abs = g.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let threshold = 1e-12 * max_abs.powi(n as i32);
        let det = g.determinant();
        if det.abs() < threshold || det == 0.0 {
            return Err(GeomError::SingularMetric {
                point: p.to_string(),
                det,
                threshold,
            });
        }
        g.clone().try_inverse().ok_or(GeomError::SingularMetric {
            point: p.to_string(),
            det,
            threshold,
        })
    }

    /// Metric, inverse, and first/second partials of every entry.
    pub(crate) fn metric_jets_at(&self, p: &Point) -> Result<MetricJets, GeomError> {
        check_chart(&self.chart, p.chart())?;
        let n = self.dim();
        let mut g = DMatrix::zeros(n, n);
        let mut dg = Tensor3::zeros(n);
        let mut d2g = Tensor4::zeros(n);
        for i in 0..n {
            for j in i..n {
                let jet = self.metric_entry(i, j).eval_jet2(p)?;
                g[(i, j)] = jet.value();
                g[(j, i)] = jet.value();
                for k in 0..n {
                    dg.set(k, i, j, jet.grad()[k]);
                    dg.set(k, j, i, jet.grad()[k]);
                    for l in 0..n {
                        d2g.set(k, l, i, j, jet.hess().get(k, l));
                        d2g.set(k, l, j, i, jet.hess().get(k, l));
                    }
                }
            }
        }
        let inv = self.invert(&g, p)?;
        Ok(MetricJets { g, inv, dg, d2g })
    }

    /// Christoffel symbols `Γ^k_{ij}` (tensor indexed `[k][i][j]`).
    pub fn christoffel_at(&self, p: &Point) -> Result<Tensor3, GeomError> {
        Ok(self.connection_at(p)?.gamma)
    }

    /// Christoffel symbols plus their first partials.
    pub(crate) fn connection_at(&self, p: &Point) -> Result<ConnectionData, GeomError> {
        let jets = self.metric_jets_at(p)?;
        let n = self.dim();
        let mut gamma = Tensor3::zeros(n);
        for k in 0..n {
            for i in 0..n {
                for j in i..n {
                    let mut acc = 0.0;
                    for l in 0..n {
                        acc += jets.inv[(k, l)]
                            * (jets.dg.get(i, j, l) + jets.dg.get(j, i, l)
                                - jets.dg.get(l, i, j));
                    }
                    let v = 0.5 * acc;
                    gamma.set(k, i, j, v);
                    gamma.set(k, j, i, v);
                }
            }
        }
        // ∂_m g^{kl} = −g^{ka} ∂_m g_{ab} g^{bl}
        let mut dinv = Tensor3::zeros(n);
        for m in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let mut acc = 0.0;
                    for a in 0..n {
                        for b in 0..n {
                            acc -= jets.inv[(k, a)] * jets.dg.get(m, a, b) * jets.inv[(b, l)];
                        }
                    }
                    dinv.set(m, k, l, acc);
                }
            }
        }
        let mut dgamma = Tensor4::zeros(n);
        for m in 0..n {
            for k in 0..n {
                for i in 0..n {
                    for j in i..n {
                        let mut acc = 0.0;
                        for l in 0..n {
                            let koszul = jets.dg.get(i, j, l) + jets.dg.get(j, i, l)
                                - jets.dg.get(l, i, j);
                            let dkoszul = jets.d2g.get(m, i, j, l) + jets.d2g.get(m, j, i, l)
                                - jets.d2g.get(m, l, i, j);
                            acc += dinv.get(m, k, l) * koszul + jets.inv[(k, l)] * dkoszul;
                        }
                        let v = 0.5 * acc;
                        dgamma.set(m, k, i, j, v);
                        dgamma.set(m, k, j, i, v);
                    }
                }
            }
        }
        Ok(ConnectionData { jets, gamma, dgamma })
    }

    /// `(D_X Y)(p)` in components: `X^i ∂_i Y^k + Γ^k_{ij} X^i Y^j`.
    pub fn covariant_derivative_at(
        &self,
        x: &VectorFieldSpec,
        y: &VectorFieldSpec,
        p: &Point,
    ) -> Result<Vec<f64>, GeomError> {
        check_chart(&self.chart, x.chart())?;
        check_chart(&self.chart, y.chart())?;
        let gamma = self.christoffel_at(p)?;
        let xv = x.values_at(p)?;
        let yj = y.jets_at(p)?;
        Ok(cov_along(&gamma, &xv, &yj))
    }

    /// `D_v Y` for a bare tangent vector `v` at `p`.
    pub fn covariant_derivative_along_at(
        &self,
        v: &[f64],
        y: &VectorFieldSpec,
        p: &Point,
    ) -> Result<Vec<f64>, GeomError> {
        check_chart(&self.chart, y.chart())?;
        let gamma = self.christoffel_at(p)?;
        let yj = y.jets_at(p)?;
        Ok(cov_along(&gamma, v, &yj))
    }

    /// First Lie derivative of the metric along `zeta`, as a symmetric
    /// matrix at `p`. Needs no metric inverse.
    pub fn lie_metric_at(&self, zeta: &VectorFieldSpec, p: &Point) -> Result<SymMat, GeomError> {
        Ok(self.lie_metric_scaled_at(zeta, p)?.0)
    }

    /// As [`lie_metric_at`](Self::lie_metric_at), also reporting the largest
    /// absolute summand seen while assembling the entries.
    pub fn lie_metric_scaled_at(
        &self,
        zeta: &VectorFieldSpec,
        p: &Point,
    ) -> Result<(SymMat, f64), GeomError> {
        check_chart(&self.chart, zeta.chart())?;
        let n = self.dim();
        let jets = self.metric_values_and_grads_at(p)?;
        let zj = zeta.jets_at(p)?;
        let mut scale = 0.0_f64;
        let h = SymMat::from_upper_fn(n, |i, j| {
            let mut acc = 0.0;
            for k in 0..n {
                let t1 = zj[k].value() * jets.1.get(k, i, j);
                let t2 = jets.0[(k, j)] * zj[k].grad()[i];
                let t3 = jets.0[(i, k)] * zj[k].grad()[j];
                scale = scale.max(t1.abs()).max(t2.abs()).max(t3.abs());
                acc += t1 + t2 + t3;
            }
            acc
        });
        Ok((h, scale))
    }

    /// Metric values only, without requiring invertibility.
    pub(crate) fn metric_values_at(&self, p: &Point) -> Result<DMatrix<f64>, GeomError> {
        check_chart(&self.chart, p.chart())?;
        let n = self.dim();
        let mut g = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = self.metric_entry(i, j).eval(p)?;
                g[(i, j)] = v;
                g[(j, i)] = v;
            }
        }
        Ok(g)
    }

    /// Metric values and entry gradients, without requiring invertibility.
    fn metric_values_and_grads_at(
        &self,
        p: &Point,
    ) -> Result<(DMatrix<f64>, Tensor3), GeomError> {
        check_chart(&self.chart, p.chart())?;
        let n = self.dim();
        let mut g = DMatrix::zeros(n, n);
        let mut dg = Tensor3::zeros(n);
        for i in 0..n {
            for j in i..n {
                let jet = self.metric_entry(i, j).eval_jet2(p)?;
                g[(i, j)] = jet.value();
                g[(j, i)] = jet.value();
                for k in 0..n {
                    dg.set(k, i, j, jet.grad()[k]);
                    dg.set(k, j, i, jet.grad()[k]);
                }
            }
        }
        Ok((g, dg))
    }

    /// Second Lie derivative of the metric along `zeta`: the Lie derivative
    /// of the tensor field `q ↦ (L_ζ g)(q)`, computed from second-order
    /// jets of the metric entries and field components.
    pub fn lie2_metric_at(&self, zeta: &VectorFieldSpec, p: &Point) -> Result<SymMat, GeomError> {
        Ok(self.lie2_metric_scaled_at(zeta, p)?.0)
    }

    pub fn lie2_metric_scaled_at(
        &self,
        zeta: &VectorFieldSpec,
        p: &Point,
    ) -> Result<(SymMat, f64), GeomError> {
        check_chart(&self.chart, zeta.chart())?;
        let n = self.dim();
        // Full second-order data of the metric, no inverse needed.
        let mut g = DMatrix::zeros(n, n);
        let mut dg = Tensor3::zeros(n);
        let mut d2g = Tensor4::zeros(n);
        for i in 0..n {
            for j in i..n {
                let jet = self.metric_entry(i, j).eval_jet2(p)?;
                g[(i, j)] = jet.value();
                g[(j, i)] = jet.value();
                for k in 0..n {
                    dg.set(k, i, j, jet.grad()[k]);
                    dg.set(k, j, i, jet.grad()[k]);
                    for l in 0..n {
                        d2g.set(k, l, i, j, jet.hess().get(k, l));
                        d2g.set(k, l, j, i, jet.hess().get(k, l));
                    }
                }
            }
        }
        let zj = zeta.jets_at(p)?;
        let zval: Vec<f64> = zj.iter().map(Jet2::value).collect();

        // h = L_ζ g and its first partials.
        let mut h = DMatrix::zeros(n, n);
        let mut dh = Tensor3::zeros(n);
        for i in 0..n {
            for j in i..n {
                let mut acc = 0.0;
                for a in 0..n {
                    acc += zval[a] * dg.get(a, i, j)
                        + g[(a, j)] * zj[a].grad()[i]
                        + g[(a, i)] * zj[a].grad()[j];
                }
                h[(i, j)] = acc;
                h[(j, i)] = acc;
                for k in 0..n {
                    let mut d = 0.0;
                    for a in 0..n {
                        d += zj[a].grad()[k] * dg.get(a, i, j)
                            + zval[a] * d2g.get(k, a, i, j)
                            + dg.get(k, a, j) * zj[a].grad()[i]
                            + g[(a, j)] * zj[a].hess().get(i, k)
                            + dg.get(k, a, i) * zj[a].grad()[j]
                            + g[(a, i)] * zj[a].hess().get(j, k);
                    }
                    dh.set(k, i, j, d);
                    dh.set(k, j, i, d);
                }
            }
        }

        let mut scale = 0.0_f64;
        let out = SymMat::from_upper_fn(n, |i, j| {
            let mut acc = 0.0;
            for k in 0..n {
                let t1 = zval[k] * dh.get(k, i, j);
                let t2 = h[(k, j)] * zj[k].grad()[i];
                let t3 = h[(i, k)] * zj[k].grad()[j];
                scale = scale.max(t1.abs()).max(t2.abs()).max(t3.abs());
                acc += t1 + t2 + t3;
            }
            acc
        });
        Ok((out, scale))
    }

    /// The second Lie derivative contracted with `X(p)` and `Y(p)` by the
    /// connection route:
    /// `g(D_ζ D_X ζ − D_{[ζ,X]} ζ, Y) + g(X, D_ζ D_Y ζ − D_{[ζ,Y]} ζ) + 2 g(D_X ζ, D_Y ζ)`.
    pub fn lie2_via_connection_at(
        &self,
        zeta: &VectorFieldSpec,
        x: &VectorFieldSpec,
        y: &VectorFieldSpec,
        p: &Point,
    ) -> Result<f64, GeomError> {
        Ok(self.lie2_via_connection_scaled_at(zeta, x, y, p)?.0)
    }

    pub fn lie2_via_connection_scaled_at(
        &self,
        zeta: &VectorFieldSpec,
        x: &VectorFieldSpec,
        y: &VectorFieldSpec,
        p: &Point,
    ) -> Result<(f64, f64), GeomError> {
        let t = self.lie2_connection_terms_at(zeta, x, y, p)?;
        Ok((t.total(), t.scale()))
    }

    /// The three term groups of the connection-route second Lie derivative:
    /// the second-covariant-derivative pair, the bracket pair (entering with
    /// a minus sign), and the first-derivative cross term.
    pub fn lie2_connection_terms_at(
        &self,
        zeta: &VectorFieldSpec,
        x: &VectorFieldSpec,
        y: &VectorFieldSpec,
        p: &Point,
    ) -> Result<ConnectionTerms, GeomError> {
        check_chart(&self.chart, zeta.chart())?;
        check_chart(&self.chart, x.chart())?;
        check_chart(&self.chart, y.chart())?;
        let conn = self.connection_at(p)?;
        let zj = zeta.jets_at(p)?;
        let xj = x.jets_at(p)?;
        let yj = y.jets_at(p)?;
        let zval: Vec<f64> = zj.iter().map(Jet2::value).collect();
        let xval: Vec<f64> = xj.iter().map(Jet2::value).collect();
        let yval: Vec<f64> = yj.iter().map(Jet2::value).collect();

        // g(D_ζ D_dir ζ, against) and g(D_{[ζ,dir]} ζ, against)
        let slot = |dir: &[Jet2], against: &[f64]| -> (f64, f64) {
            let (w, dw) = cov_field_with_derivs(&conn, dir, &zj);
            let dzw = cov_along_with_derivs(&conn.gamma, &zval, &w, &dw);
            let bracket = bracket_values(&zj, dir);
            let dbz = cov_along(&conn.gamma, &bracket, &zj);
            (
                inner(&conn.jets.g, &dzw, against),
                inner(&conn.jets.g, &dbz, against),
            )
        };
        let (t1, t3) = slot(&xj, &yval);
        let (t2, t4) = slot(&yj, &xval);
        let dxz = cov_along(&conn.gamma, &xval, &zj);
        let dyz = cov_along(&conn.gamma, &yval, &zj);
        let t5 = 2.0 * inner(&conn.jets.g, &dxz, &dyz);
        Ok(ConnectionTerms {
            second_derivative_pair: t1 + t2,
            bracket_pair: t3 + t4,
            cross_term: t5,
        })
    }

    /// `D_{∂i}(D_ζ ζ)` at `p`. The inner field's components are
    /// differentiated through jets, not numerically differenced.
    pub fn second_cov_coord_at(
        &self,
        zeta: &VectorFieldSpec,
        i: usize,
        p: &Point,
    ) -> Result<Vec<f64>, GeomError> {
        check_chart(&self.chart, zeta.chart())?;
        let conn = self.connection_at(p)?;
        let zj = zeta.jets_at(p)?;
        let (w, dw) = cov_field_with_derivs(&conn, &zj, &zj);
        let n = self.dim();
        Ok((0..n)
            .map(|k| {
                let mut acc = dw[i][k];
                for j in 0..n {
                    acc += conn.gamma.get(k, i, j) * w[j];
                }
                acc
            })
            .collect())
    }

    /// The (0,4) curvature tensor `R[i][j][k][l] = g(R(∂i,∂j)∂k, ∂l)`.
    pub fn riemann_at(&self, p: &Point) -> Result<Tensor4, GeomError> {
        let conn = self.connection_at(p)?;
        let n = self.dim();
        let mut up = Tensor4::zeros(n); // up[i][j][k][m] = [R(∂i,∂j)∂k]^m
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for m in 0..n {
                        let mut acc = conn.dgamma.get(i, m, j, k) - conn.dgamma.get(j, m, i, k);
                        for a in 0..n {
                            acc += conn.gamma.get(m, i, a) * conn.gamma.get(a, j, k)
                                - conn.gamma.get(m, j, a) * conn.gamma.get(a, i, k);
                        }
                        up.set(i, j, k, m, acc);
                    }
                }
            }
        }
        let mut r = Tensor4::zeros(n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let mut acc = 0.0;
                        for m in 0..n {
                            acc += conn.jets.g[(l, m)] * up.get(i, j, k, m);
                        }
                        r.set(i, j, k, l, acc);
                    }
                }
            }
        }
        Ok(r)
    }

    /// Ricci tensor `Ric[j][k] = g^{ml} R[m][j][k][l]` (trace of
    /// `X ↦ R(X, ∂j)∂k`).
    pub fn ricci_at(&self, p: &Point) -> Result<SymMat, GeomError> {
        let r = self.riemann_at(p)?;
        let (_, inv) = self.metric_at(p)?;
        let n = self.dim();
        Ok(SymMat::from_upper_fn(n, |j, k| {
            let mut acc = 0.0;
            for m in 0..n {
                for l in 0..n {
                    acc += inv[(m, l)] * r.get(m, j, k, l);
                }
            }
            acc
        }))
    }

    /// Sectional curvature of the plane spanned by `u`, `v`:
    /// `R4(u,v,v,u) / (‖u‖²‖v‖² − g(u,v)²)`.
    pub fn sectional_at(&self, p: &Point, u: &[f64], v: &[f64]) -> Result<f64, GeomError> {
        let n = self.dim();
        if u.len() != n || v.len() != n {
            return Err(GeomError::Dimension {
                expected: n,
                got: u.len().min(v.len()),
            });
        }
        let (g, _) = self.metric_at(p)?;
        let uu = inner(&g, u, u);
        let vv = inner(&g, v, v);
        let uv = inner(&g, u, v);
        let area2 = uu * vv - uv * uv;
        let area_scale = (uu * vv).abs().max(uv * uv).max(1e-300);
        if area2.abs() <= 1e-12 * area_scale {
            return Err(GeomError::DegeneratePlane {
                point: p.to_string(),
                gram: area2,
            });
        }
        let r = self.riemann_at(p)?;
        Ok(contract4(&r, u, v, v, u) / area2)
    }

    /// Metric gradient of a scalar: `(∇h)^k = g^{kl} ∂_l h`.
    pub fn gradient_at(&self, h: &Expr, p: &Point) -> Result<Vec<f64>, GeomError> {
        check_chart(&self.chart, h.chart())?;
        let (_, inv) = self.metric_at(p)?;
        let jet = h.eval_jet2(p)?;
        let n = self.dim();
        Ok((0..n)
            .map(|k| (0..n).map(|l| inv[(k, l)] * jet.grad()[l]).sum())
            .collect())
    }
}

/// Term groups of the connection route to the second Lie derivative.
/// The contracted value is `second_derivative_pair − bracket_pair + cross_term`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConnectionTerms {
    pub second_derivative_pair: f64,
    pub bracket_pair: f64,
    pub cross_term: f64,
}

impl ConnectionTerms {
    pub fn total(&self) -> f64 {
        self.second_derivative_pair - self.bracket_pair + self.cross_term
    }

    pub fn scale(&self) -> f64 {
        self.second_derivative_pair
            .abs()
            .max(self.bracket_pair.abs())
            .max(self.cross_term.abs())
    }
}

pub(crate) struct MetricJets {
    pub g: DMatrix<f64>,
    pub inv: DMatrix<f64>,
    pub dg: Tensor3,
    pub d2g: Tensor4,
}

pub(crate) struct ConnectionData {
    pub jets: MetricJets,
    pub gamma: Tensor3,
    pub dgamma: Tensor4,
}

/// `D_v Y` from Christoffel symbols, a vector `v`, and jets of `Y`.
pub(crate) fn cov_along(gamma: &Tensor3, v: &[f64], yj: &[Jet2]) -> Vec<f64> {
    let n = gamma.dim();
    (0..n)
        .map(|k| {
            let mut acc = 0.0;
            for i in 0..n {
                acc += v[i] * yj[k].grad()[i];
                for j in 0..n {
                    acc += gamma.get(k, i, j) * v[i] * yj[j].value();
                }
            }
            acc
        })
        .collect()
}

/// Value and first partials of the field `W = D_dir B`, where `dir` and `B`
/// are field specs with known jets. Needs `∂Γ`, i.e. second derivatives of
/// the metric — everything comes from jets, nothing is differenced.
pub(crate) fn cov_field_with_derivs(
    conn: &ConnectionData,
    dir: &[Jet2],
    b: &[Jet2],
) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = conn.gamma.dim();
    let mut w = vec![0.0; n];
    let mut dw = vec![vec![0.0; n]; n]; // dw[m][k] = ∂_m W^k
    for k in 0..n {
        let mut acc = 0.0;
        for i in 0..n {
            acc += dir[i].value() * b[k].grad()[i];
            for j in 0..n {
                acc += conn.gamma.get(k, i, j) * dir[i].value() * b[j].value();
            }
        }
        w[k] = acc;
        for m in 0..n {
            let mut d = 0.0;
            for i in 0..n {
                d += dir[i].grad()[m] * b[k].grad()[i] + dir[i].value() * b[k].hess().get(i, m);
                for j in 0..n {
                    d += conn.dgamma.get(m, k, i, j) * dir[i].value() * b[j].value()
                        + conn.gamma.get(k, i, j)
                            * (dir[i].grad()[m] * b[j].value()
                                + dir[i].value() * b[j].grad()[m]);
                }
            }
            dw[m][k] = d;
        }
    }
    (w, dw)
}

/// `D_v W` where `W` is known by value and first partials at the point.
pub(crate) fn cov_along_with_derivs(
    gamma: &Tensor3,
    v: &[f64],
    w: &[f64],
    dw: &[Vec<f64>],
) -> Vec<f64> {
    let n = gamma.dim();
    (0..n)
        .map(|k| {
            let mut acc = 0.0;
            for m in 0..n {
                acc += v[m] * dw[m][k];
                for j in 0..n {
                    acc += gamma.get(k, m, j) * v[m] * w[j];
                }
            }
            acc
        })
        .collect()
}

pub(crate) fn bracket_values(xj: &[Jet2], yj: &[Jet2]) -> Vec<f64> {
    let n = xj.len();
    (0..n)
        .map(|k| {
            let mut acc = 0.0;
            for i in 0..n {
                acc += xj[i].value() * yj[k].grad()[i] - yj[i].value() * xj[k].grad()[i];
            }
            acc
        })
        .collect()
}

/// Coordinate Lie bracket `[X,Y]^k = X^i ∂_i Y^k − Y^i ∂_i X^k` at a point.
/// Metric-free.
pub fn lie_bracket_at(
    x: &VectorFieldSpec,
    y: &VectorFieldSpec,
    p: &Point,
) -> Result<Vec<f64>, GeomError> {
    check_chart(x.chart(), y.chart())?;
    let xj = x.jets_at(p)?;
    let yj = y.jets_at(p)?;
    Ok(bracket_values(&xj, &yj))
}

/// A vector field given by one component expression per coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorFieldSpec {
    chart: Chart,
    components: Vec<Expr>,
}

impl VectorFieldSpec {
    pub fn new(chart: Chart, components: Vec<Expr>) -> Result<Self, GeomError> {
        if components.len() != chart.dim() {
            return Err(GeomError::Dimension {
                expected: chart.dim(),
                got: components.len(),
            });
        }
        for c in &components {
            check_chart(&chart, c.chart())?;
        }
        Ok(VectorFieldSpec { chart, components })
    }

    /// Parses each component source against the chart.
    pub fn from_sources(chart: &Chart, sources: &[&str]) -> Result<Self, GeomError> {
        let components = sources
            .iter()
            .map(|s| Expr::parse(s, chart))
            .collect::<Result<Vec<_>, _>>()?;
        VectorFieldSpec::new(chart.clone(), components)
    }

    /// The zero field.
    pub fn zero(chart: &Chart) -> Self {
        let components = (0..chart.dim()).map(|_| Expr::constant(chart, 0.0)).collect();
        VectorFieldSpec {
            chart: chart.clone(),
            components,
        }
    }

    /// The coordinate field `∂_index`.
    pub fn coordinate(chart: &Chart, index: usize) -> Self {
        let components = (0..chart.dim())
            .map(|i| Expr::constant(chart, if i == index { 1.0 } else { 0.0 }))
            .collect();
        VectorFieldSpec {
            chart: chart.clone(),
            components,
        }
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    pub fn values_at(&self, p: &Point) -> Result<Vec<f64>, GeomError> {
        self.components
            .iter()
            .map(|c| c.eval(p).map_err(GeomError::from))
            .collect()
    }

    pub(crate) fn jets_at(&self, p: &Point) -> Result<Vec<Jet2>, GeomError> {
        self.components
            .iter()
            .map(|c| c.eval_jet2(p).map_err(GeomError::from))
            .collect()
    }
}
