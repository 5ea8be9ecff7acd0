//! Scalar functions of named real coordinates, with exact derivatives.
//!
//! Expressions are parsed from a small infix language (see [`Expr::parse`])
//! into an immutable AST bound to a [`Chart`]. Evaluation comes in two
//! flavours that share the value lane instruction-for-instruction:
//!
//! - [`Expr::eval`] produces the plain IEEE double,
//! - [`Expr::eval_jet2`] propagates a [`Jet2`] (value, gradient, Hessian)
//!   through the tree, so first and second derivatives are exact up to
//!   round-off.
//!
//! Finite differences exist only as the independent cross-check
//! [`fd_oracle`]; nothing in the main path depends on a step size.
//!
//! # Grammar
//!
//! ```text
//! expr    = term { ("+" | "-") term } ;
//! term    = factor { ("*" | "/") factor } ;
//! factor  = "-" factor | power ;
//! power   = atom [ "^" factor ] ;
//! atom    = number | name | name "(" expr ")" | "(" expr ")" ;
//! name    = (letter | "_") { letter | digit | "_" } ;
//! number  = digits [ "." digits ] [ ("e" | "E") ["+" | "-"] digits ] ;
//! ```
//!
//! Precedence: `^` binds tighter than unary minus, which binds tighter than
//! `*` `/`, which bind tighter than `+` `-`. The functions are `sin`, `cos`,
//! `exp`, `log` (natural), `sqrt`, `cbrt`. The exponent of `^` must fold to
//! a real constant at parse time; integer exponents are evaluated exactly
//! (valid for negative bases), non-integer exponents require a positive
//! base.

mod jet;
mod parse;

pub use jet::Jet2;

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// Errors from parsing or evaluating expressions. Parse-time errors carry
/// the byte offset into the source text.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum ExprError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown variable `{name}` at byte {offset}")]
    UnknownVariable { name: String, offset: usize },
    #[error("domain error in `{subexpr}`: {message}")]
    Domain { subexpr: String, message: String },
    #[error("not differentiable in `{subexpr}`: {message}")]
    NotDifferentiable { subexpr: String, message: String },
    #[error("chart `{expected}` expected, point is on `{found}`")]
    ChartMismatch { expected: String, found: String },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("invalid chart: {0}")]
    InvalidChart(String),
}

/// A named coordinate system: an ordered list of distinct coordinate names.
///
/// Charts are cheap to clone and compared by content, so two independently
/// built charts with the same name and coordinates are interchangeable.
#[derive(Debug, Clone)]
pub struct Chart(Arc<ChartInner>);

#[derive(Debug)]
struct ChartInner {
    name: String,
    coords: Vec<String>,
}

impl PartialEq for Chart {
    fn eq(&self, other: &Self) -> bool {
        self.0.name == other.0.name && self.0.coords == other.0.coords
    }
}
impl Eq for Chart {}

impl Chart {
    pub fn new(
        name: impl Into<String>,
        coords: impl IntoIterator<Item = impl Into<String>>,
    ) -> Result<Chart, ExprError> {
        let name = name.into();
        let coords: Vec<String> = coords.into_iter().map(Into::into).collect();
        if coords.is_empty() {
            return Err(ExprError::InvalidChart(format!(
                "chart `{name}` has no coordinates"
            )));
        }
        for (i, c) in coords.iter().enumerate() {
            if !is_valid_name(c) {
                return Err(ExprError::InvalidChart(format!(
                    "`{c}` is not a valid coordinate name"
                )));
            }
            if coords[..i].contains(c) {
                return Err(ExprError::InvalidChart(format!(
                    "duplicate coordinate `{c}` in chart `{name}`"
                )));
            }
        }
        Ok(Chart(Arc::new(ChartInner { name, coords })))
    }

    pub fn name(&self) -> &str {
        &self.0.name
    }

    pub fn dim(&self) -> usize {
        self.0.coords.len()
    }

    pub fn coords(&self) -> &[String] {
        &self.0.coords
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.0.coords.iter().position(|c| c == name)
    }
}

fn is_valid_name(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// A point of a chart: the chart plus one real value per coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    chart: Chart,
    coords: Vec<f64>,
}

impl Point {
    pub fn new(chart: Chart, coords: Vec<f64>) -> Result<Point, ExprError> {
        if coords.len() != chart.dim() {
            return Err(ExprError::Dimension {
                expected: chart.dim(),
                got: coords.len(),
            });
        }
        Ok(Point { chart, coords })
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Restriction to a sub-chart occupying `range` of this point's slots.
    pub(crate) fn slice(&self, chart: Chart, start: usize) -> Point {
        let coords = self.coords[start..start + chart.dim()].to_vec();
        Point { chart, coords }
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, (name, v)) in self.chart.coords().iter().zip(&self.coords).enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{name}={v}")?;
        }
        write!(f, ")")
    }
}

/// AST node. `Pow` keeps its exponent as a plain real: the parser folds the
/// exponent sub-expression to a constant so that integer powers can be
/// treated exactly.
#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Ast {
    Const(f64),
    Var { index: usize, name: String },
    Unary(UnaryOp, Box<Ast>),
    Binary(BinOp, Box<Ast>, Box<Ast>),
    Pow(Box<Ast>, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum UnaryOp {
    Neg,
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Cbrt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl UnaryOp {
    fn fn_name(self) -> Option<&'static str> {
        match self {
            UnaryOp::Neg => None,
            UnaryOp::Sin => Some("sin"),
            UnaryOp::Cos => Some("cos"),
            UnaryOp::Exp => Some("exp"),
            UnaryOp::Log => Some("log"),
            UnaryOp::Sqrt => Some("sqrt"),
            UnaryOp::Cbrt => Some("cbrt"),
        }
    }
}

impl fmt::Display for Ast {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ast::Const(c) => write!(f, "{c}"),
            Ast::Var { name, .. } => write!(f, "{name}"),
            Ast::Unary(UnaryOp::Neg, e) => write!(f, "(-{e})"),
            Ast::Unary(op, e) => write!(f, "{}({e})", op.fn_name().unwrap()),
            Ast::Binary(op, l, r) => {
                let sym = match op {
                    BinOp::Add => "+",
                    BinOp::Sub => "-",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                };
                write!(f, "({l} {sym} {r})")
            }
            Ast::Pow(b, q) => write!(f, "({b} ^ {q})"),
        }
    }
}

/// Parsed scalar function over a chart's coordinates.
///
/// Immutable after parsing; evaluation is pure, so an `Expr` may be shared
/// freely across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    chart: Chart,
    root: Ast,
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.fmt(f)
    }
}

impl Expr {
    /// Parses `source` against the chart's coordinate names.
    pub fn parse(source: &str, chart: &Chart) -> Result<Expr, ExprError> {
        let root = parse::parse(source, chart)?;
        Ok(Expr {
            chart: chart.clone(),
            root,
        })
    }

    pub fn constant(chart: &Chart, c: f64) -> Expr {
        Expr {
            chart: chart.clone(),
            root: Ast::Const(c),
        }
    }

    pub fn coordinate(chart: &Chart, name: &str) -> Result<Expr, ExprError> {
        let index = chart
            .index_of(name)
            .ok_or_else(|| ExprError::UnknownVariable {
                name: name.to_string(),
                offset: 0,
            })?;
        Ok(Expr {
            chart: chart.clone(),
            root: Ast::Var {
                index,
                name: name.to_string(),
            },
        })
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    /// Total number of AST nodes.
    pub fn node_count(&self) -> usize {
        fn walk(a: &Ast) -> usize {
            match a {
                Ast::Const(_) | Ast::Var { .. } => 1,
                Ast::Unary(_, e) => 1 + walk(e),
                Ast::Binary(_, l, r) => 1 + walk(l) + walk(r),
                Ast::Pow(b, _) => 1 + walk(b),
            }
        }
        walk(&self.root)
    }

    /// Indices of the coordinates this expression actually reads.
    pub fn free_vars(&self) -> BTreeSet<usize> {
        fn walk(a: &Ast, out: &mut BTreeSet<usize>) {
            match a {
                Ast::Const(_) => {}
                Ast::Var { index, .. } => {
                    out.insert(*index);
                }
                Ast::Unary(_, e) => walk(e, out),
                Ast::Binary(_, l, r) => {
                    walk(l, out);
                    walk(r, out);
                }
                Ast::Pow(b, _) => walk(b, out),
            }
        }
        let mut out = BTreeSet::new();
        walk(&self.root, &mut out);
        out
    }

    /// Re-interprets the expression over another chart containing the same
    /// coordinate names (possibly at different positions).
    pub fn rebind(&self, chart: &Chart) -> Result<Expr, ExprError> {
        fn walk(a: &Ast, chart: &Chart) -> Result<Ast, ExprError> {
            Ok(match a {
                Ast::Const(c) => Ast::Const(*c),
                Ast::Var { name, .. } => {
                    let index = chart.index_of(name).ok_or_else(|| {
                        ExprError::InvalidChart(format!(
                            "coordinate `{name}` not present in chart `{}`",
                            chart.name()
                        ))
                    })?;
                    Ast::Var {
                        index,
                        name: name.clone(),
                    }
                }
                Ast::Unary(op, e) => Ast::Unary(*op, Box::new(walk(e, chart)?)),
                Ast::Binary(op, l, r) => Ast::Binary(
                    *op,
                    Box::new(walk(l, chart)?),
                    Box::new(walk(r, chart)?),
                ),
                Ast::Pow(b, q) => Ast::Pow(Box::new(walk(b, chart)?), *q),
            })
        }
        Ok(Expr {
            chart: chart.clone(),
            root: walk(&self.root, chart)?,
        })
    }

    fn combine(op: BinOp, a: &Expr, b: &Expr) -> Expr {
        assert_eq!(a.chart, b.chart, "expressions on different charts");
        Expr {
            chart: a.chart.clone(),
            root: Ast::Binary(op, Box::new(a.root.clone()), Box::new(b.root.clone())),
        }
    }

    pub fn mul(a: &Expr, b: &Expr) -> Expr {
        Expr::combine(BinOp::Mul, a, b)
    }

    pub fn add(a: &Expr, b: &Expr) -> Expr {
        Expr::combine(BinOp::Add, a, b)
    }

    pub fn neg(a: &Expr) -> Expr {
        Expr {
            chart: a.chart.clone(),
            root: Ast::Unary(UnaryOp::Neg, Box::new(a.root.clone())),
        }
    }

    fn check_point(&self, p: &Point) -> Result<(), ExprError> {
        if p.chart != self.chart {
            return Err(ExprError::ChartMismatch {
                expected: self.chart.name().to_string(),
                found: p.chart.name().to_string(),
            });
        }
        Ok(())
    }

    /// Evaluates to an IEEE double at the given point.
    pub fn eval(&self, p: &Point) -> Result<f64, ExprError> {
        self.check_point(p)?;
        eval_lane::<f64>(&self.root, p.coords())
    }

    /// Evaluates value, gradient and Hessian together.
    pub fn eval_jet2(&self, p: &Point) -> Result<Jet2, ExprError> {
        self.check_point(p)?;
        eval_lane::<Jet2>(&self.root, p.coords())
    }
}

/// Requested order for the finite-difference oracle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FdOrder {
    First,
    Second,
}

/// Central finite-difference estimate of a directional derivative.
///
/// This is deliberately a different computation from [`Expr::eval_jet2`];
/// tests use it as an independent oracle. Not intended for production use —
/// the step size trades truncation against cancellation error.
pub fn fd_oracle(
    e: &Expr,
    p: &Point,
    dir: &[f64],
    order: FdOrder,
    step: f64,
) -> Result<f64, ExprError> {
    assert!(step > 0.0, "fd_oracle requires a positive step");
    if dir.len() != p.chart().dim() {
        return Err(ExprError::Dimension {
            expected: p.chart().dim(),
            got: dir.len(),
        });
    }
    let shift = |s: f64| -> Result<f64, ExprError> {
        let coords: Vec<f64> = p
            .coords()
            .iter()
            .zip(dir)
            .map(|(x, d)| x + s * d)
            .collect();
        let q = Point::new(p.chart().clone(), coords)?;
        e.eval(&q)
    };
    match order {
        FdOrder::First => Ok((shift(step)? - shift(-step)?) / (2.0 * step)),
        FdOrder::Second => {
            Ok((shift(step)? - 2.0 * e.eval(p)? + shift(-step)?) / (step * step))
        }
    }
}

// ---------------------------------------------------------------------------
// Evaluation lanes
// ---------------------------------------------------------------------------

enum OpError {
    Domain(String),
    NotDifferentiable(String),
}

impl OpError {
    fn attach(self, at: &Ast) -> ExprError {
        match self {
            OpError::Domain(message) => ExprError::Domain {
                subexpr: at.to_string(),
                message,
            },
            OpError::NotDifferentiable(message) => ExprError::NotDifferentiable {
                subexpr: at.to_string(),
                message,
            },
        }
    }
}

/// Exact integer power by repeated squaring; used identically by both lanes
/// so the value channels agree bit for bit.
fn int_pow(base: f64, exp: i64) -> f64 {
    let neg = exp < 0;
    let mut e = exp.unsigned_abs();
    let mut acc = 1.0_f64;
    let mut b = base;
    while e > 0 {
        if e & 1 == 1 {
            acc *= b;
        }
        b *= b;
        e >>= 1;
    }
    if neg {
        1.0 / acc
    } else {
        acc
    }
}

fn integer_exponent(q: f64) -> Option<i64> {
    if q.fract() == 0.0 && q.abs() <= 4.0e9 {
        Some(q as i64)
    } else {
        None
    }
}

fn pow_value(x: f64, q: f64) -> Result<f64, OpError> {
    match integer_exponent(q) {
        Some(k) => {
            if x == 0.0 && k < 0 {
                Err(OpError::Domain(
                    "zero base with negative exponent".to_string(),
                ))
            } else {
                Ok(int_pow(x, k))
            }
        }
        None => {
            if x <= 0.0 {
                Err(OpError::Domain(format!(
                    "non-integer exponent {q} requires a positive base, base is {x}"
                )))
            } else {
                Ok(x.powf(q))
            }
        }
    }
}

fn ln_value(x: f64) -> Result<f64, OpError> {
    if x <= 0.0 {
        Err(OpError::Domain(format!("log of non-positive value {x}")))
    } else {
        Ok(x.ln())
    }
}

fn sqrt_value(x: f64) -> Result<f64, OpError> {
    if x < 0.0 {
        Err(OpError::Domain(format!("sqrt of negative value {x}")))
    } else {
        Ok(x.sqrt())
    }
}

/// One scalar carrier per evaluation mode. The `f64` impl is the value lane;
/// `Jet2` mirrors every value-lane operation exactly and adds derivatives.
trait Lane: Sized {
    fn constant(c: f64, n: usize) -> Self;
    fn variable(x: f64, index: usize, n: usize) -> Self;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn div(&self, o: &Self) -> Result<Self, OpError>;
    fn unary(&self, op: UnaryOp) -> Result<Self, OpError>;
    fn pow(&self, q: f64) -> Result<Self, OpError>;
}

impl Lane for f64 {
    fn constant(c: f64, _n: usize) -> f64 {
        c
    }
    fn variable(x: f64, _index: usize, _n: usize) -> f64 {
        x
    }
    fn add(&self, o: &f64) -> f64 {
        self + o
    }
    fn sub(&self, o: &f64) -> f64 {
        self - o
    }
    fn mul(&self, o: &f64) -> f64 {
        self * o
    }
    fn div(&self, o: &f64) -> Result<f64, OpError> {
        if *o == 0.0 {
            Err(OpError::Domain("division by zero".to_string()))
        } else {
            Ok(self / o)
        }
    }
    fn unary(&self, op: UnaryOp) -> Result<f64, OpError> {
        let x = *self;
        Ok(match op {
            UnaryOp::Neg => -x,
            UnaryOp::Sin => x.sin(),
            UnaryOp::Cos => x.cos(),
            UnaryOp::Exp => x.exp(),
            UnaryOp::Log => ln_value(x)?,
            UnaryOp::Sqrt => sqrt_value(x)?,
            UnaryOp::Cbrt => x.cbrt(),
        })
    }
    fn pow(&self, q: f64) -> Result<f64, OpError> {
        pow_value(*self, q)
    }
}

impl Lane for Jet2 {
    fn constant(c: f64, n: usize) -> Jet2 {
        Jet2::constant(c, n)
    }
    fn variable(x: f64, index: usize, n: usize) -> Jet2 {
        Jet2::variable(x, index, n)
    }
    fn add(&self, o: &Jet2) -> Jet2 {
        Jet2::add(self, o)
    }
    fn sub(&self, o: &Jet2) -> Jet2 {
        Jet2::sub(self, o)
    }
    fn mul(&self, o: &Jet2) -> Jet2 {
        Jet2::mul(self, o)
    }
    fn div(&self, o: &Jet2) -> Result<Jet2, OpError> {
        if o.value() == 0.0 {
            Err(OpError::Domain("division by zero".to_string()))
        } else {
            Ok(Jet2::div(self, o))
        }
    }
    fn unary(&self, op: UnaryOp) -> Result<Jet2, OpError> {
        let u = self.value();
        Ok(match op {
            UnaryOp::Neg => Jet2::neg(self),
            UnaryOp::Sin => self.chain(u.sin(), u.cos(), -u.sin()),
            UnaryOp::Cos => self.chain(u.cos(), -u.sin(), -u.cos()),
            UnaryOp::Exp => {
                let e = u.exp();
                self.chain(e, e, e)
            }
            UnaryOp::Log => {
                let v = ln_value(u)?;
                self.chain(v, 1.0 / u, -1.0 / (u * u))
            }
            UnaryOp::Sqrt => {
                let v = sqrt_value(u)?;
                if u == 0.0 {
                    return Err(OpError::NotDifferentiable(
                        "sqrt has unbounded derivative at 0".to_string(),
                    ));
                }
                self.chain(v, 0.5 / v, -0.25 / (v * u))
            }
            UnaryOp::Cbrt => {
                if u == 0.0 {
                    return Err(OpError::NotDifferentiable(
                        "cbrt has unbounded derivative at 0".to_string(),
                    ));
                }
                let c = u.cbrt();
                let c2 = c * c;
                self.chain(c, 1.0 / (3.0 * c2), -2.0 / (9.0 * c2 * c2 * c))
            }
        })
    }
    fn pow(&self, q: f64) -> Result<Jet2, OpError> {
        let u = self.value();
        let v = pow_value(u, q)?;
        match integer_exponent(q) {
            Some(0) => Ok(self.chain(v, 0.0, 0.0)),
            Some(1) => Ok(self.chain(v, 1.0, 0.0)),
            Some(k) => {
                let kf = k as f64;
                let d1 = kf * int_pow(u, k - 1);
                let d2 = kf * (kf - 1.0) * int_pow(u, k - 2);
                Ok(self.chain(v, d1, d2))
            }
            None => {
                let d1 = q * u.powf(q - 1.0);
                let d2 = q * (q - 1.0) * u.powf(q - 2.0);
                Ok(self.chain(v, d1, d2))
            }
        }
    }
}

fn eval_lane<T: Lane>(ast: &Ast, coords: &[f64]) -> Result<T, ExprError> {
    let n = coords.len();
    fn walk<T: Lane>(a: &Ast, coords: &[f64], n: usize) -> Result<T, ExprError> {
        match a {
            Ast::Const(c) => Ok(T::constant(*c, n)),
            Ast::Var { index, .. } => Ok(T::variable(coords[*index], *index, n)),
            Ast::Unary(op, e) => {
                let x: T = walk(e, coords, n)?;
                x.unary(*op).map_err(|err| err.attach(a))
            }
            Ast::Binary(op, l, r) => {
                let lv: T = walk(l, coords, n)?;
                let rv: T = walk(r, coords, n)?;
                Ok(match op {
                    BinOp::Add => lv.add(&rv),
                    BinOp::Sub => lv.sub(&rv),
                    BinOp::Mul => lv.mul(&rv),
                    BinOp::Div => lv.div(&rv).map_err(|err| err.attach(a))?,
                })
            }
            Ast::Pow(b, q) => {
                let bv: T = walk(b, coords, n)?;
                bv.pow(*q).map_err(|err| err.attach(a))
            }
        }
    }
    walk(ast, coords, n)
}

/// Constant folding used by the parser for `^` exponents. Fails on any
/// variable reference.
pub(crate) fn fold_constant(ast: &Ast) -> Result<f64, OpFoldError> {
    match ast {
        Ast::Const(c) => Ok(*c),
        Ast::Var { name, .. } => Err(OpFoldError::Variable(name.clone())),
        Ast::Unary(op, e) => {
            let x = fold_constant(e)?;
            x.unary(*op).map_err(|e| OpFoldError::Eval(ast.to_string(), msg(e)))
        }
        Ast::Binary(op, l, r) => {
            let lv = fold_constant(l)?;
            let rv = fold_constant(r)?;
            match op {
                BinOp::Add => Ok(lv + rv),
                BinOp::Sub => Ok(lv - rv),
                BinOp::Mul => Ok(lv * rv),
                BinOp::Div => lv
                    .div(&rv)
                    .map_err(|e| OpFoldError::Eval(ast.to_string(), msg(e))),
            }
        }
        Ast::Pow(b, q) => {
            let bv = fold_constant(b)?;
            bv.pow(*q)
                .map_err(|e| OpFoldError::Eval(ast.to_string(), msg(e)))
        }
    }
}

fn msg(e: OpError) -> String {
    match e {
        OpError::Domain(m) | OpError::NotDifferentiable(m) => m,
    }
}

pub(crate) enum OpFoldError {
    Variable(String),
    Eval(String, String),
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn chart(coords: &[&str]) -> Chart {
        Chart::new("test", coords.iter().copied()).unwrap()
    }

    fn pt(c: &Chart, coords: &[f64]) -> Point {
        Point::new(c.clone(), coords.to_vec()).unwrap()
    }

    #[test]
    fn node_count_with_real_exponent() {
        let c = chart(&["x", "y"]);
        let e = Expr::parse("x^2 * sin(y)", &c).unwrap();
        // Mul, Pow(·, 2), Var x, Sin, Var y
        assert_eq!(e.node_count(), 5);
    }

    #[test]
    fn syntax_error_carries_byte_offset() {
        let c = chart(&["x"]);
        let err = Expr::parse("x +", &c).unwrap_err();
        match err {
            ExprError::Syntax { offset, .. } => assert_eq!(offset, 3),
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn cube_root_exponent_parses() {
        let c = chart(&["t"]);
        let e = Expr::parse("(2*t+3)^(1/3)", &c).unwrap();
        let v = e.eval(&pt(&c, &[0.5])).unwrap();
        assert_relative_eq!(v, 1.5874010519681994, max_relative = 1e-13);
    }

    #[test]
    fn eval_basics() {
        let c = chart(&["x", "y"]);
        let e = Expr::parse("sin(x)*y^2", &c).unwrap();
        assert_eq!(e.eval(&pt(&c, &[0.0, 5.0])).unwrap(), 0.0);
        let c1 = chart(&["x"]);
        let cube = Expr::parse("x^3", &c1).unwrap();
        assert_eq!(cube.eval(&pt(&c1, &[2.0])).unwrap(), 8.0);
    }

    #[test]
    fn jet_of_cube() {
        let c = chart(&["x"]);
        let e = Expr::parse("x^3", &c).unwrap();
        let j = e.eval_jet2(&pt(&c, &[2.0])).unwrap();
        assert_eq!(j.value(), 8.0);
        assert_eq!(j.grad(), &[12.0]);
        assert_eq!(j.hess().get(0, 0), 12.0);
    }

    #[test]
    fn jet_of_identity() {
        let c = chart(&["x"]);
        let e = Expr::parse("x", &c).unwrap();
        let j = e.eval_jet2(&pt(&c, &[7.0])).unwrap();
        assert_eq!(j.value(), 7.0);
        assert_eq!(j.grad(), &[1.0]);
        assert_eq!(j.hess().get(0, 0), 0.0);
    }

    #[test]
    fn jet_of_product() {
        let c = chart(&["x", "y"]);
        let e = Expr::parse("x*y", &c).unwrap();
        let j = e.eval_jet2(&pt(&c, &[2.0, 3.0])).unwrap();
        assert_eq!(j.value(), 6.0);
        assert_eq!(j.grad(), &[3.0, 2.0]);
        assert_eq!(j.hess().get(0, 0), 0.0);
        assert_eq!(j.hess().get(0, 1), 1.0);
        assert_eq!(j.hess().get(1, 1), 0.0);
    }

    #[test]
    fn fd_oracle_matches_analytic() {
        let c = chart(&["x"]);
        let e = Expr::parse("x^2", &c).unwrap();
        let p = pt(&c, &[3.0]);
        let d1 = fd_oracle(&e, &p, &[1.0], FdOrder::First, 1e-5).unwrap();
        assert_relative_eq!(d1, 6.0, epsilon = 1e-8);
        let d2 = fd_oracle(&e, &p, &[1.0], FdOrder::Second, 1e-4).unwrap();
        assert_relative_eq!(d2, 2.0, epsilon = 1e-5);
        let k = Expr::parse("4.25", &c).unwrap();
        let dk = fd_oracle(&k, &p, &[1.0], FdOrder::First, 0.1).unwrap();
        assert_eq!(dk, 0.0);
    }

    #[test]
    fn unknown_variable_is_named() {
        let c = chart(&["x"]);
        let err = Expr::parse("x + zz", &c).unwrap_err();
        match err {
            ExprError::UnknownVariable { name, offset } => {
                assert_eq!(name, "zz");
                assert_eq!(offset, 4);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn domain_errors_identify_subexpression() {
        let c = chart(&["x"]);
        let e = Expr::parse("1 + log(x)", &c).unwrap();
        let err = e.eval(&pt(&c, &[-2.0])).unwrap_err();
        match err {
            ExprError::Domain { subexpr, .. } => assert_eq!(subexpr, "log(x)"),
            other => panic!("unexpected {other:?}"),
        }
        let s = Expr::parse("sqrt(x)", &c).unwrap();
        assert!(matches!(
            s.eval(&pt(&c, &[-1.0])),
            Err(ExprError::Domain { .. })
        ));
        let d = Expr::parse("1/x", &c).unwrap();
        assert!(matches!(
            d.eval(&pt(&c, &[0.0])),
            Err(ExprError::Domain { .. })
        ));
    }

    #[test]
    fn cbrt_works_on_negatives_but_has_no_jet_at_zero() {
        let c = chart(&["x"]);
        let e = Expr::parse("cbrt(x)", &c).unwrap();
        assert_relative_eq!(e.eval(&pt(&c, &[-8.0])).unwrap(), -2.0);
        assert_eq!(e.eval(&pt(&c, &[0.0])).unwrap(), 0.0);
        assert!(matches!(
            e.eval_jet2(&pt(&c, &[0.0])),
            Err(ExprError::NotDifferentiable { .. })
        ));
        let j = e.eval_jet2(&pt(&c, &[-8.0])).unwrap();
        assert_relative_eq!(j.grad()[0], 1.0 / 12.0, max_relative = 1e-14);
    }

    #[test]
    fn integer_powers_handle_negative_bases() {
        let c = chart(&["x"]);
        let e = Expr::parse("x^3", &c).unwrap();
        assert_eq!(e.eval(&pt(&c, &[-2.0])).unwrap(), -8.0);
        let inv = Expr::parse("x^-2", &c).unwrap();
        assert_relative_eq!(inv.eval(&pt(&c, &[-2.0])).unwrap(), 0.25);
        let frac = Expr::parse("x^(1/3)", &c).unwrap();
        assert!(matches!(
            frac.eval(&pt(&c, &[-2.0])),
            Err(ExprError::Domain { .. })
        ));
    }

    #[test]
    fn variable_exponent_rejected() {
        let c = chart(&["x", "y"]);
        let err = Expr::parse("x^y", &c).unwrap_err();
        assert!(matches!(err, ExprError::Syntax { offset: 1, .. }));
    }

    #[test]
    fn value_lane_is_shared_between_eval_and_jets() {
        let c = chart(&["x", "y"]);
        let e = Expr::parse("exp(x/3) * sin(y) + (x+y)^5 / (1 + x^2)", &c).unwrap();
        let p = pt(&c, &[0.7, -1.3]);
        let plain = e.eval(&p).unwrap();
        let jet = e.eval_jet2(&p).unwrap();
        assert_eq!(plain.to_bits(), jet.value().to_bits());
    }

    #[test]
    fn print_reparse_roundtrip() {
        let c = chart(&["x", "y"]);
        for src in [
            "x^2 * sin(y)",
            "-x + y / (x - 2)",
            "cbrt(2*x + 5) ^ -3",
            "exp(x)*cos(y) - sqrt(x^2 + 1)",
        ] {
            let e = Expr::parse(src, &c).unwrap();
            let printed = e.to_string();
            let e2 = Expr::parse(&printed, &c).unwrap();
            assert_eq!(e, e2, "roundtrip failed for `{src}` -> `{printed}`");
        }
    }

    #[test]
    fn chart_mismatch_detected() {
        let c1 = chart(&["x"]);
        let c2 = Chart::new("other", ["t"]).unwrap();
        let e = Expr::parse("x", &c1).unwrap();
        let p = Point::new(c2, vec![1.0]).unwrap();
        assert!(matches!(e.eval(&p), Err(ExprError::ChartMismatch { .. })));
    }
}
