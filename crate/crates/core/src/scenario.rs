//! Scenario files: a line-oriented text format declaring manifolds, warped
//! and static constructions, vector fields, and a list of residual checks,
//! plus the runner that executes the checks and builds a [`Report`].
//!
//! The format is `key = value` lines grouped under `[section]` headers.
//! Expression strings are double-quoted; everything else is bare tokens.
//! `#` starts a comment outside quotes. Checks run with defaults
//! `samples = 100`, `seed = 0`, `atol = 1e-10`, `rtol = 1e-8`, overridable
//! per check, per scenario (`[options]`), or from the command line (which
//! wins).
//!
//! ```text
//! [manifold plane]
//! coords = x y
//! g = "1" "0"
//! g = "0" "1"
//! box = -1.5 1.5
//! box = -1.5 1.5
//!
//! [field rot]
//! on = plane
//! components = "-y" "x"
//!
//! [check killing]
//! name = rotation-is-killing
//! on = plane
//! field = rot
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::expr::{Chart, Expr};
use crate::geometry::{GeomError, Manifold, VectorFieldSpec};
use crate::killing::{
    check_parallel_theorem, curvature_identity_defect, killing_defect, ode_2killing_residual,
    parallel_defect, sectional_sign_check, two_killing_defect, CheckResult, CheckStatus,
    ParallelVariant, SampleSpec, Tolerance,
};
use crate::spacetime::{
    check_static_2killing, converse_decompose, e6_residual, static_line_check, StaticCondition,
    StaticField, StaticSpacetime,
};
use crate::warped::{
    connection_agreement_check, dxz_agreement_check, lie2_agreement_check, lie_agreement_check,
    trace_agreement_check, FiberSign, SplitField, WarpedProduct,
};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("check `{name}` could not run: {source}")]
    Run {
        name: String,
        #[source]
        source: GeomError,
    },
}

fn perr(line: usize, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Parse {
        line,
        message: message.into(),
    }
}

/// Command-line overrides; these win over scenario and check settings.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub atol: Option<f64>,
    pub rtol: Option<f64>,
}

#[derive(Debug, Clone, Copy)]
struct Options {
    samples: usize,
    seed: u64,
    atol: f64,
    rtol: f64,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            samples: 100,
            seed: 0,
            atol: 1e-10,
            rtol: 1e-8,
        }
    }
}

/// One check invocation, fully resolved against the declarations.
#[derive(Debug, Clone)]
struct CheckSpec {
    def: CheckDef,
    name: String,
    line: usize,
    samples: Option<usize>,
    seed: Option<u64>,
    atol: Option<f64>,
    rtol: Option<f64>,
    boxes: Option<Vec<(f64, f64)>>,
}

#[derive(Debug, Clone)]
enum CheckDef {
    Killing { target: String, field: String },
    TwoKilling { target: String, field: String },
    Parallel { target: String, field: String },
    CurvatureIdentity { target: String, field: String },
    SectionalSign { target: String, field: String },
    Ode2Killing { u: Expr },
    ParallelTheorem { warped: String, field: String, variant: ParallelVariant },
    ConnectionClosed { warped: String, x: String, y: String },
    DxzInner { warped: String, zeta: String, x: String },
    LieClosed { warped: String, zeta: String, x: String, y: String },
    Lie2Closed { warped: String, zeta: String, x: String, y: String },
    TraceClosed { warped: String, zeta: String },
    Static2Killing { target: String, field: String, condition: StaticCondition },
    StaticTt { target: String, field: String },
    StaticConverse { target: String, field: String },
    StaticLine { f: Expr, u: Expr, v: Expr },
}

/// A parsed, validated scenario: every reference resolves.
#[derive(Debug)]
pub struct Scenario {
    options: Options,
    manifolds: BTreeMap<String, (Manifold, Vec<(f64, f64)>)>,
    warpeds: BTreeMap<String, WarpedProduct>,
    statics: BTreeMap<String, StaticSpacetime>,
    fields: BTreeMap<String, (String, VectorFieldSpec)>,
    splitfields: BTreeMap<String, (String, SplitField)>,
    staticfields: BTreeMap<String, (String, StaticField)>,
    checks: Vec<CheckSpec>,
}

/// Run metadata plus the ordered check results. Wall time is kept out of
/// the serialized forms so identical runs produce identical bytes.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub version: String,
    pub seed: u64,
    pub results: Vec<CheckResult>,
}

impl Report {
    pub fn all_passed(&self) -> bool {
        self.results
            .iter()
            .all(|r| !matches!(r.status, CheckStatus::Failed))
    }

    pub fn has_warnings(&self) -> bool {
        self.results
            .iter()
            .any(|r| matches!(r.status, CheckStatus::HypothesesNotMet))
    }

    /// One JSON object per check result, then a summary object.
    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for r in &self.results {
            out.push_str(&serde_json::to_string(r).expect("check result serializes"));
            out.push('\n');
        }
        let summary = serde_json::json!({
            "summary": {
                "version": self.version,
                "seed": self.seed,
                "checks": self.results.len(),
                "passed": self.results.iter().filter(|r| r.status == CheckStatus::Passed).count(),
                "failed": self.results.iter().filter(|r| r.status == CheckStatus::Failed).count(),
                "hypotheses_not_met": self.results.iter().filter(|r| r.status == CheckStatus::HypothesesNotMet).count(),
                "informational": self.results.iter().filter(|r| r.status == CheckStatus::Informational).count(),
                "all_passed": self.all_passed(),
            }
        });
        out.push_str(&serde_json::to_string(&summary).expect("summary serializes"));
        out.push('\n');
        out
    }

    pub fn to_text(&self, color: bool) -> String {
        let mut out = String::new();
        for r in &self.results {
            let (tag, code) = match r.status {
                CheckStatus::Passed => ("PASS", "32"),
                CheckStatus::Failed => ("FAIL", "31"),
                CheckStatus::HypothesesNotMet => ("SKIP", "33"),
                CheckStatus::Informational => ("INFO", "36"),
            };
            let tag = if color {
                format!("\x1b[{code}m{tag}\x1b[0m")
            } else {
                tag.to_string()
            };
            let _ = write!(
                out,
                "{tag} [{kind}] {name}: max residual {res:.3e} (scale {scale:.3e}, tol {atol:.1e}+{rtol:.1e}*scale)",
                kind = r.kind,
                name = r.name,
                res = r.max_residual,
                scale = r.scale,
                atol = r.atol,
                rtol = r.rtol,
            );
            if let Some(w) = &r.witness {
                let coords: Vec<String> = w
                    .names
                    .iter()
                    .zip(&w.coords)
                    .map(|(n, v)| format!("{n}={v:.6}"))
                    .collect();
                let _ = write!(out, " at ({})", coords.join(", "));
            }
            out.push('\n');
            for note in &r.notes {
                let _ = writeln!(out, "     note: {note}");
            }
        }
        let _ = writeln!(
            out,
            "{} checks, {} passed, {} failed, {} hypotheses-not-met, {} informational (seed {})",
            self.results.len(),
            self.results.iter().filter(|r| r.status == CheckStatus::Passed).count(),
            self.results.iter().filter(|r| r.status == CheckStatus::Failed).count(),
            self.results.iter().filter(|r| r.status == CheckStatus::HypothesesNotMet).count(),
            self.results.iter().filter(|r| r.status == CheckStatus::Informational).count(),
            self.seed,
        );
        out
    }
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
enum Val {
    Quoted(String),
    Bare(String),
}

impl Val {
    fn as_str(&self) -> &str {
        match self {
            Val::Quoted(s) | Val::Bare(s) => s,
        }
    }
}

fn tokenize_values(line: usize, input: &str) -> Result<Vec<Val>, ScenarioError> {
    let mut out = Vec::new();
    let mut chars = input.chars().peekable();
    while let Some(&c) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
        } else if c == '"' {
            chars.next();
            let mut s = String::new();
            loop {
                match chars.next() {
                    Some('"') => break,
                    Some(ch) => s.push(ch),
                    None => return Err(perr(line, "unterminated string")),
                }
            }
            out.push(Val::Quoted(s));
        } else {
            let mut s = String::new();
            while let Some(&ch) = chars.peek() {
                if ch.is_whitespace() {
                    break;
                }
                s.push(ch);
                chars.next();
            }
            out.push(Val::Bare(s));
        }
    }
    Ok(out)
}

fn strip_comment(line: &str) -> &str {
    let mut in_quotes = false;
    for (i, c) in line.char_indices() {
        match c {
            '"' => in_quotes = !in_quotes,
            '#' if !in_quotes => return &line[..i],
            _ => {}
        }
    }
    line
}

struct Section {
    kind: String,
    name: String,
    line: usize,
    entries: Vec<(String, Vec<Val>, usize)>,
}

impl Section {
    fn values<'a>(&'a self, key: &str) -> impl Iterator<Item = &'a (String, Vec<Val>, usize)> {
        let key = key.to_string();
        self.entries.iter().filter(move |(k, _, _)| *k == key)
    }

    fn single(&self, key: &str) -> Result<&Vec<Val>, ScenarioError> {
        let mut it = self.values(key);
        let first = it
            .next()
            .ok_or_else(|| perr(self.line, format!("missing `{key}` in [{0}]", self.kind)))?;
        if it.next().is_some() {
            return Err(perr(first.2, format!("duplicate `{key}`")));
        }
        Ok(&first.1)
    }

    fn single_str(&self, key: &str) -> Result<String, ScenarioError> {
        let vals = self.single(key)?;
        if vals.len() != 1 {
            return Err(perr(
                self.line,
                format!("`{key}` expects exactly one value"),
            ));
        }
        Ok(vals[0].as_str().to_string())
    }

    fn opt_single_str(&self, key: &str) -> Result<Option<String>, ScenarioError> {
        if self.values(key).next().is_none() {
            return Ok(None);
        }
        self.single_str(key).map(Some)
    }

    fn parse_boxes(&self) -> Result<Vec<(f64, f64)>, ScenarioError> {
        let mut boxes = Vec::new();
        for (_, vals, line) in self.values("box") {
            if vals.len() != 2 {
                return Err(perr(*line, "`box` expects two numbers: low high"));
            }
            let lo: f64 = vals[0]
                .as_str()
                .parse()
                .map_err(|_| perr(*line, "invalid box bound"))?;
            let hi: f64 = vals[1]
                .as_str()
                .parse()
                .map_err(|_| perr(*line, "invalid box bound"))?;
            boxes.push((lo, hi));
        }
        Ok(boxes)
    }
}

fn split_sections(text: &str) -> Result<Vec<Section>, ScenarioError> {
    let mut sections: Vec<Section> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = strip_comment(raw).trim();
        if line.is_empty() {
            continue;
        }
        if let Some(header) = line.strip_prefix('[') {
            let header = header
                .strip_suffix(']')
                .ok_or_else(|| perr(line_no, "unclosed section header"))?;
            let mut parts = header.split_whitespace();
            let kind = parts
                .next()
                .ok_or_else(|| perr(line_no, "empty section header"))?
                .to_string();
            let name = parts.next().unwrap_or("").to_string();
            if parts.next().is_some() {
                return Err(perr(line_no, "section header has too many tokens"));
            }
            sections.push(Section {
                kind,
                name,
                line: line_no,
                entries: Vec::new(),
            });
        } else if let Some(eq) = line.find('=') {
            let key = line[..eq].trim().to_string();
            let vals = tokenize_values(line_no, line[eq + 1..].trim())?;
            let section = sections
                .last_mut()
                .ok_or_else(|| perr(line_no, "entry before any [section]"))?;
            section.entries.push((key, vals, line_no));
        } else {
            return Err(perr(line_no, format!("cannot parse `{line}`")));
        }
    }
    Ok(sections)
}

pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let sections = split_sections(text)?;
    let mut scenario = Scenario {
        options: Options::default(),
        manifolds: BTreeMap::new(),
        warpeds: BTreeMap::new(),
        statics: BTreeMap::new(),
        fields: BTreeMap::new(),
        splitfields: BTreeMap::new(),
        staticfields: BTreeMap::new(),
        checks: Vec::new(),
    };

    for s in &sections {
        match s.kind.as_str() {
            "options" => parse_options(s, &mut scenario.options)?,
            "manifold" => parse_manifold(s, &mut scenario)?,
            "warped" => parse_warped(s, &mut scenario)?,
            "static" => parse_static(s, &mut scenario)?,
            "field" => parse_field(s, &mut scenario)?,
            "splitfield" => parse_splitfield(s, &mut scenario)?,
            "staticfield" => parse_staticfield(s, &mut scenario)?,
            "check" => parse_check(s, &mut scenario)?,
            other => return Err(perr(s.line, format!("unknown section kind `{other}`"))),
        }
    }
    if scenario.checks.is_empty() {
        return Err(perr(0, "scenario declares no checks"));
    }
    Ok(scenario)
}

fn parse_options(s: &Section, options: &mut Options) -> Result<(), ScenarioError> {
    for (key, vals, line) in &s.entries {
        let value = vals
            .first()
            .ok_or_else(|| perr(*line, "missing value"))?
            .as_str();
        match key.as_str() {
            "samples" => {
                options.samples = value
                    .parse()
                    .map_err(|_| perr(*line, "invalid sample count"))?
            }
            "seed" => options.seed = value.parse().map_err(|_| perr(*line, "invalid seed"))?,
            "atol" => options.atol = value.parse().map_err(|_| perr(*line, "invalid atol"))?,
            "rtol" => options.rtol = value.parse().map_err(|_| perr(*line, "invalid rtol"))?,
            other => return Err(perr(*line, format!("unknown option `{other}`"))),
        }
    }
    Ok(())
}

fn require_name(s: &Section) -> Result<String, ScenarioError> {
    if s.name.is_empty() {
        return Err(perr(s.line, format!("[{}] needs a name", s.kind)));
    }
    Ok(s.name.clone())
}

fn parse_expr_on(chart: &Chart, src: &str, line: usize) -> Result<Expr, ScenarioError> {
    Expr::parse(src, chart).map_err(|e| perr(line, format!("in `{src}`: {e}")))
}

fn parse_manifold(s: &Section, scenario: &mut Scenario) -> Result<(), ScenarioError> {
    let name = require_name(s)?;
    let coords_vals = s.single("coords")?;
    let coords: Vec<String> = coords_vals.iter().map(|v| v.as_str().to_string()).collect();
    let chart = Chart::new(name.clone(), coords.clone())
        .map_err(|e| perr(s.line, e.to_string()))?;
    let n = chart.dim();

    let mut rows: Vec<Vec<Expr>> = Vec::new();
    for (_, vals, line) in s.values("g") {
        if vals.len() != n {
            return Err(perr(*line, format!("metric row needs {n} entries")));
        }
        let row = vals
            .iter()
            .map(|v| parse_expr_on(&chart, v.as_str(), *line))
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    if rows.len() != n {
        return Err(perr(s.line, format!("metric needs {n} `g` rows")));
    }

    let mut domain = Vec::new();
    for (_, vals, line) in s.values("domain") {
        for v in vals {
            domain.push(parse_expr_on(&chart, v.as_str(), *line)?);
        }
    }

    let boxes = s.parse_boxes()?;
    if boxes.len() != n {
        return Err(perr(s.line, format!("manifold needs {n} `box` rows")));
    }

    let manifold = Manifold::new(name.clone(), chart, rows)
        .map_err(|e| perr(s.line, e.to_string()))?
        .with_domain(domain);
    if scenario.manifolds.insert(name.clone(), (manifold, boxes)).is_some() {
        return Err(perr(s.line, format!("duplicate manifold `{name}`")));
    }
    Ok(())
}

fn lookup_manifold<'a>(
    scenario: &'a Scenario,
    name: &str,
    line: usize,
) -> Result<&'a (Manifold, Vec<(f64, f64)>), ScenarioError> {
    scenario
        .manifolds
        .get(name)
        .ok_or_else(|| perr(line, format!("unknown manifold `{name}`")))
}

fn parse_warped(s: &Section, scenario: &mut Scenario) -> Result<(), ScenarioError> {
    let name = require_name(s)?;
    let base_name = s.single_str("base")?;
    let fiber_name = s.single_str("fiber")?;
    let (base, _) = lookup_manifold(scenario, &base_name, s.line)?.clone();
    let (fiber, _) = lookup_manifold(scenario, &fiber_name, s.line)?.clone();
    let warping_src = s.single_str("warping")?;
    let warping = parse_expr_on(base.chart(), &warping_src, s.line)?;
    let sign = match s.opt_single_str("fiber_sign")?.as_deref() {
        None | Some("+1") | Some("1") => FiberSign::Plus,
        Some("-1") => FiberSign::Minus,
        Some(other) => return Err(perr(s.line, format!("invalid fiber_sign `{other}`"))),
    };
    let w = WarpedProduct::new(base, fiber, warping, sign)
        .map_err(|e| perr(s.line, e.to_string()))?;
    let base_boxes = lookup_manifold(scenario, &base_name, s.line)?.1.clone();
    let fiber_boxes = lookup_manifold(scenario, &fiber_name, s.line)?.1.clone();
    let mut boxes = base_boxes;
    boxes.extend(fiber_boxes);
    let product = w.product().clone();
    if scenario.warpeds.insert(name.clone(), w).is_some() {
        return Err(perr(s.line, format!("duplicate warped product `{name}`")));
    }
    scenario
        .manifolds
        .insert(name.clone(), (product, boxes));
    Ok(())
}

fn parse_static(s: &Section, scenario: &mut Scenario) -> Result<(), ScenarioError> {
    let name = require_name(s)?;
    let space_name = s.single_str("space")?;
    let (space, space_boxes) = lookup_manifold(scenario, &space_name, s.line)?.clone();
    let f_src = s.single_str("f")?;
    let f = parse_expr_on(space.chart(), &f_src, s.line)?;
    let time = s.single_str("time")?;
    let time_box = s.parse_boxes()?;
    if time_box.len() != 1 {
        return Err(perr(s.line, "static section needs one `box` row for time"));
    }
    let st = StaticSpacetime::new(space, f, &time)
        .map_err(|e| perr(s.line, e.to_string()))?;
    let mut boxes = space_boxes;
    boxes.extend(time_box);
    let product = st.manifold().clone();
    if scenario.statics.insert(name.clone(), st).is_some() {
        return Err(perr(s.line, format!("duplicate static spacetime `{name}`")));
    }
    scenario.manifolds.insert(name.clone(), (product, boxes));
    Ok(())
}

fn parse_field(s: &Section, scenario: &mut Scenario) -> Result<(), ScenarioError> {
    let name = require_name(s)?;
    let target = s.single_str("on")?;
    let (m, _) = lookup_manifold(scenario, &target, s.line)?;
    let comps = s.single("components")?;
    let exprs = comps
        .iter()
        .map(|v| parse_expr_on(m.chart(), v.as_str(), s.line))
        .collect::<Result<Vec<_>, _>>()?;
    let field = VectorFieldSpec::new(m.chart().clone(), exprs)
        .map_err(|e| perr(s.line, e.to_string()))?;
    if scenario
        .fields
        .insert(name.clone(), (target, field))
        .is_some()
    {
        return Err(perr(s.line, format!("duplicate field `{name}`")));
    }
    Ok(())
}

fn parse_splitfield(s: &Section, scenario: &mut Scenario) -> Result<(), ScenarioError> {
    let name = require_name(s)?;
    let target = s.single_str("on")?;
    let w = scenario
        .warpeds
        .get(&target)
        .ok_or_else(|| perr(s.line, format!("unknown warped product `{target}`")))?;
    let base_vals = s.single("base")?;
    let fiber_vals = s.single("fiber")?;
    let base_exprs = base_vals
        .iter()
        .map(|v| parse_expr_on(w.base().chart(), v.as_str(), s.line))
        .collect::<Result<Vec<_>, _>>()?;
    let fiber_exprs = fiber_vals
        .iter()
        .map(|v| parse_expr_on(w.fiber().chart(), v.as_str(), s.line))
        .collect::<Result<Vec<_>, _>>()?;
    let base = VectorFieldSpec::new(w.base().chart().clone(), base_exprs)
        .map_err(|e| perr(s.line, e.to_string()))?;
    let fiber = VectorFieldSpec::new(w.fiber().chart().clone(), fiber_exprs)
        .map_err(|e| perr(s.line, e.to_string()))?;
    let field = SplitField::new(w, base, fiber).map_err(|e| perr(s.line, e.to_string()))?;
    if scenario
        .splitfields
        .insert(name.clone(), (target, field))
        .is_some()
    {
        return Err(perr(s.line, format!("duplicate splitfield `{name}`")));
    }
    Ok(())
}

fn parse_staticfield(s: &Section, scenario: &mut Scenario) -> Result<(), ScenarioError> {
    let name = require_name(s)?;
    let target = s.single_str("on")?;
    let st = scenario
        .statics
        .get(&target)
        .ok_or_else(|| perr(s.line, format!("unknown static spacetime `{target}`")))?;
    let u_src = s.single_str("u")?;
    let u = parse_expr_on(st.interval().chart(), &u_src, s.line)?;
    let zeta_vals = s.single("zeta")?;
    let zeta_exprs = zeta_vals
        .iter()
        .map(|v| parse_expr_on(st.spatial().chart(), v.as_str(), s.line))
        .collect::<Result<Vec<_>, _>>()?;
    let zeta = VectorFieldSpec::new(st.spatial().chart().clone(), zeta_exprs)
        .map_err(|e| perr(s.line, e.to_string()))?;
    let field = StaticField::new(st, u, zeta).map_err(|e| perr(s.line, e.to_string()))?;
    if scenario
        .staticfields
        .insert(name.clone(), (target, field))
        .is_some()
    {
        return Err(perr(s.line, format!("duplicate staticfield `{name}`")));
    }
    Ok(())
}

fn parse_check(s: &Section, scenario: &mut Scenario) -> Result<(), ScenarioError> {
    let kind = if s.name.is_empty() {
        return Err(perr(s.line, "[check] needs a kind, e.g. [check killing]"));
    } else {
        s.name.clone()
    };

    let field_ref = |key: &str| -> Result<(String, String), ScenarioError> {
        let target = s.single_str("on")?;
        let field = s.single_str(key)?;
        Ok((target, field))
    };

    let lookup_field = |target: &str, field: &str| -> Result<(), ScenarioError> {
        match scenario.fields.get(field) {
            Some((t, _)) if t == target => Ok(()),
            Some((t, _)) => Err(perr(
                s.line,
                format!("field `{field}` is declared on `{t}`, not `{target}`"),
            )),
            None => Err(perr(s.line, format!("unknown field `{field}`"))),
        }
    };
    let lookup_split = |target: &str, field: &str| -> Result<(), ScenarioError> {
        match scenario.splitfields.get(field) {
            Some((t, _)) if t == target => Ok(()),
            Some((t, _)) => Err(perr(
                s.line,
                format!("splitfield `{field}` is declared on `{t}`, not `{target}`"),
            )),
            None => Err(perr(s.line, format!("unknown splitfield `{field}`"))),
        }
    };

    let def = match kind.as_str() {
        "killing" | "two_killing" | "parallel" | "curvature_identity" | "sectional_sign" => {
            let (target, field) = field_ref("field")?;
            lookup_manifold(scenario, &target, s.line)?;
            lookup_field(&target, &field)?;
            match kind.as_str() {
                "killing" => CheckDef::Killing { target, field },
                "two_killing" => CheckDef::TwoKilling { target, field },
                "parallel" => CheckDef::Parallel { target, field },
                "curvature_identity" => CheckDef::CurvatureIdentity { target, field },
                _ => CheckDef::SectionalSign { target, field },
            }
        }
        "ode_2killing" => {
            let coord = s.single_str("coord")?;
            let chart = Chart::new("ode", [coord.as_str()])
                .map_err(|e| perr(s.line, e.to_string()))?;
            let u_src = s.single_str("u")?;
            let u = parse_expr_on(&chart, &u_src, s.line)?;
            CheckDef::Ode2Killing { u }
        }
        "parallel_theorem" => {
            let target = s.single_str("on")?;
            if !scenario.warpeds.contains_key(&target) {
                return Err(perr(s.line, format!("unknown warped product `{target}`")));
            }
            let field = s.single_str("field")?;
            lookup_split(&target, &field)?;
            let variant_str = s.single_str("variant")?;
            let variant = variant_str
                .parse::<u8>()
                .ok()
                .and_then(ParallelVariant::from_index)
                .ok_or_else(|| perr(s.line, "variant must be 1, 2 or 3"))?;
            CheckDef::ParallelTheorem { warped: target, field, variant }
        }
        "connection_closed" | "dxz_inner" | "lie_closed" | "lie2_closed" | "trace_closed" => {
            let target = s.single_str("on")?;
            if !scenario.warpeds.contains_key(&target) {
                return Err(perr(s.line, format!("unknown warped product `{target}`")));
            }
            let get_split = |key: &str| -> Result<String, ScenarioError> {
                let v = s.single_str(key)?;
                lookup_split(&target, &v)?;
                Ok(v)
            };
            match kind.as_str() {
                "connection_closed" => CheckDef::ConnectionClosed {
                    warped: target.clone(),
                    x: get_split("x")?,
                    y: get_split("y")?,
                },
                "dxz_inner" => CheckDef::DxzInner {
                    warped: target.clone(),
                    zeta: get_split("zeta")?,
                    x: get_split("x")?,
                },
                "lie_closed" => CheckDef::LieClosed {
                    warped: target.clone(),
                    zeta: get_split("zeta")?,
                    x: get_split("x")?,
                    y: get_split("y")?,
                },
                "lie2_closed" => CheckDef::Lie2Closed {
                    warped: target.clone(),
                    zeta: get_split("zeta")?,
                    x: get_split("x")?,
                    y: get_split("y")?,
                },
                _ => CheckDef::TraceClosed {
                    warped: target.clone(),
                    zeta: get_split("zeta")?,
                },
            }
        }
        "static_2killing" | "static_tt" | "static_converse" => {
            let target = s.single_str("on")?;
            if !scenario.statics.contains_key(&target) {
                return Err(perr(s.line, format!("unknown static spacetime `{target}`")));
            }
            let field = s.single_str("field")?;
            match scenario.staticfields.get(&field) {
                Some((t, _)) if *t == target => {}
                Some((t, _)) => {
                    return Err(perr(
                        s.line,
                        format!("staticfield `{field}` is declared on `{t}`, not `{target}`"),
                    ))
                }
                None => return Err(perr(s.line, format!("unknown staticfield `{field}`"))),
            }
            match kind.as_str() {
                "static_2killing" => {
                    let c = s.single_str("condition")?;
                    let condition = c
                        .parse::<u8>()
                        .ok()
                        .and_then(StaticCondition::from_index)
                        .ok_or_else(|| perr(s.line, "condition must be 1 or 2"))?;
                    CheckDef::Static2Killing { target, field, condition }
                }
                "static_tt" => CheckDef::StaticTt { target, field },
                _ => CheckDef::StaticConverse { target, field },
            }
        }
        "static_line" => {
            let x_coord = s.opt_single_str("x_coord")?.unwrap_or_else(|| "x".into());
            let t_coord = s.opt_single_str("t_coord")?.unwrap_or_else(|| "t".into());
            let xc = Chart::new("line", [x_coord.as_str()])
                .map_err(|e| perr(s.line, e.to_string()))?;
            let tc = Chart::new("interval", [t_coord.as_str()])
                .map_err(|e| perr(s.line, e.to_string()))?;
            let f = parse_expr_on(&xc, &s.single_str("f")?, s.line)?;
            let v = parse_expr_on(&xc, &s.single_str("v")?, s.line)?;
            let u = parse_expr_on(&tc, &s.single_str("u")?, s.line)?;
            CheckDef::StaticLine { f, u, v }
        }
        other => return Err(perr(s.line, format!("unknown check kind `{other}`"))),
    };

    let boxes = s.parse_boxes()?;
    let parse_opt = |key: &str| -> Result<Option<String>, ScenarioError> { s.opt_single_str(key) };
    let samples = parse_opt("samples")?
        .map(|v| v.parse::<usize>().map_err(|_| perr(s.line, "invalid samples")))
        .transpose()?;
    let seed = parse_opt("seed")?
        .map(|v| v.parse::<u64>().map_err(|_| perr(s.line, "invalid seed")))
        .transpose()?;
    let atol = parse_opt("atol")?
        .map(|v| v.parse::<f64>().map_err(|_| perr(s.line, "invalid atol")))
        .transpose()?;
    let rtol = parse_opt("rtol")?
        .map(|v| v.parse::<f64>().map_err(|_| perr(s.line, "invalid rtol")))
        .transpose()?;

    let name = s
        .opt_single_str("name")?
        .unwrap_or_else(|| format!("{kind}#{}", scenario.checks.len() + 1));

    scenario.checks.push(CheckSpec {
        def,
        name,
        line: s.line,
        samples,
        seed,
        atol,
        rtol,
        boxes: if boxes.is_empty() { None } else { Some(boxes) },
    });
    Ok(())
}

// ---------------------------------------------------------------------------
// Running
// ---------------------------------------------------------------------------

impl Scenario {
    fn resolve_spec(
        &self,
        check: &CheckSpec,
        default_boxes: Option<&[(f64, f64)]>,
        overrides: &Overrides,
    ) -> Result<(SampleSpec, Tolerance), ScenarioError> {
        let boxes = match (&check.boxes, default_boxes) {
            (Some(b), _) => b.clone(),
            (None, Some(b)) => b.to_vec(),
            (None, None) => {
                return Err(perr(
                    check.line,
                    "check needs explicit `box` rows (no target boxes available)",
                ))
            }
        };
        let samples = overrides
            .samples
            .or(check.samples)
            .unwrap_or(self.options.samples);
        let seed = overrides.seed.or(check.seed).unwrap_or(self.options.seed);
        let spec = SampleSpec::new(samples, seed, boxes)
            .map_err(|e| perr(check.line, e.to_string()))?;
        let tol = Tolerance {
            atol: overrides.atol.or(check.atol).unwrap_or(self.options.atol),
            rtol: overrides.rtol.or(check.rtol).unwrap_or(self.options.rtol),
        };
        Ok((spec, tol))
    }

    fn target_boxes(&self, name: &str) -> Option<&[(f64, f64)]> {
        self.manifolds.get(name).map(|(_, b)| b.as_slice())
    }

    fn run_check(&self, check: &CheckSpec, overrides: &Overrides) -> Result<CheckResult, ScenarioError> {
        let wrap = |e: GeomError| ScenarioError::Run {
            name: check.name.clone(),
            source: e,
        };
        let mut result = match &check.def {
            CheckDef::Killing { target, field }
            | CheckDef::TwoKilling { target, field }
            | CheckDef::Parallel { target, field }
            | CheckDef::CurvatureIdentity { target, field }
            | CheckDef::SectionalSign { target, field } => {
                let (m, boxes) = &self.manifolds[target];
                let (spec, tol) = self.resolve_spec(check, Some(boxes), overrides)?;
                let f = &self.fields[field].1;
                match &check.def {
                    CheckDef::Killing { .. } => killing_defect(m, f, &spec, tol),
                    CheckDef::TwoKilling { .. } => two_killing_defect(m, f, &spec, tol),
                    CheckDef::Parallel { .. } => parallel_defect(m, f, &spec, tol),
                    CheckDef::CurvatureIdentity { .. } => {
                        curvature_identity_defect(m, f, &spec, tol)
                    }
                    _ => sectional_sign_check(m, f, &spec, tol),
                }
                .map_err(wrap)?
            }
            CheckDef::Ode2Killing { u } => {
                let (spec, tol) = self.resolve_spec(check, None, overrides)?;
                ode_2killing_residual(u, &spec, tol).map_err(wrap)?
            }
            CheckDef::ParallelTheorem { warped, field, variant } => {
                let w = &self.warpeds[warped];
                let boxes = self.target_boxes(warped);
                let (spec, tol) = self.resolve_spec(check, boxes, overrides)?;
                let f = &self.splitfields[field].1;
                check_parallel_theorem(w, f, &spec, *variant, tol).map_err(wrap)?
            }
            CheckDef::ConnectionClosed { warped, x, y } => {
                let w = &self.warpeds[warped];
                let (spec, tol) =
                    self.resolve_spec(check, self.target_boxes(warped), overrides)?;
                connection_agreement_check(
                    w,
                    &self.splitfields[x].1,
                    &self.splitfields[y].1,
                    &spec,
                    tol,
                )
                .map_err(wrap)?
            }
            CheckDef::DxzInner { warped, zeta, x } => {
                let w = &self.warpeds[warped];
                let (spec, tol) =
                    self.resolve_spec(check, self.target_boxes(warped), overrides)?;
                dxz_agreement_check(
                    w,
                    &self.splitfields[zeta].1,
                    &self.splitfields[x].1,
                    &spec,
                    tol,
                )
                .map_err(wrap)?
            }
            CheckDef::LieClosed { warped, zeta, x, y } => {
                let w = &self.warpeds[warped];
                let (spec, tol) =
                    self.resolve_spec(check, self.target_boxes(warped), overrides)?;
                lie_agreement_check(
                    w,
                    &self.splitfields[zeta].1,
                    &self.splitfields[x].1,
                    &self.splitfields[y].1,
                    &spec,
                    tol,
                )
                .map_err(wrap)?
            }
            CheckDef::Lie2Closed { warped, zeta, x, y } => {
                let w = &self.warpeds[warped];
                let (spec, tol) =
                    self.resolve_spec(check, self.target_boxes(warped), overrides)?;
                lie2_agreement_check(
                    w,
                    &self.splitfields[zeta].1,
                    &self.splitfields[x].1,
                    &self.splitfields[y].1,
                    &spec,
                    tol,
                )
                .map_err(wrap)?
            }
            CheckDef::TraceClosed { warped, zeta } => {
                let w = &self.warpeds[warped];
                let (spec, tol) =
                    self.resolve_spec(check, self.target_boxes(warped), overrides)?;
                trace_agreement_check(w, &self.splitfields[zeta].1, &spec, tol).map_err(wrap)?
            }
            CheckDef::Static2Killing { target, field, condition } => {
                let st = &self.statics[target];
                let (spec, tol) =
                    self.resolve_spec(check, self.target_boxes(target), overrides)?;
                check_static_2killing(st, &self.staticfields[field].1, &spec, *condition, tol)
                    .map_err(wrap)?
            }
            CheckDef::StaticTt { target, field } => {
                let st = &self.statics[target];
                let (spec, tol) =
                    self.resolve_spec(check, self.target_boxes(target), overrides)?;
                e6_residual(st, &self.staticfields[field].1, &spec, tol).map_err(wrap)?
            }
            CheckDef::StaticConverse { target, field } => {
                let st = &self.statics[target];
                let (spec, tol) =
                    self.resolve_spec(check, self.target_boxes(target), overrides)?;
                converse_decompose(st, &self.staticfields[field].1, &spec, tol).map_err(wrap)?
            }
            CheckDef::StaticLine { f, u, v } => {
                let (spec, tol) = self.resolve_spec(check, None, overrides)?;
                static_line_check(f, u, v, &spec, tol).map_err(wrap)?
            }
        };
        result.name = check.name.clone();
        Ok(result)
    }

    /// Runs every check (in parallel) and reports results in declaration
    /// order.
    pub fn run(&self, overrides: &Overrides) -> Result<Report, ScenarioError> {
        let results: Result<Vec<CheckResult>, ScenarioError> = self
            .checks
            .par_iter()
            .map(|c| self.run_check(c, overrides))
            .collect();
        Ok(Report {
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: overrides.seed.unwrap_or(self.options.seed),
            results: results?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    #[test]
    fn bundled_examples_parse_and_pass() {
        for entry in catalog::examples() {
            let scenario = parse_scenario(entry.source)
                .unwrap_or_else(|e| panic!("{}: {e}", entry.name));
            let report = scenario
                .run(&Overrides::default())
                .unwrap_or_else(|e| panic!("{}: {e}", entry.name));
            for r in &report.results {
                assert_ne!(
                    r.status,
                    CheckStatus::Failed,
                    "{}: check `{}` failed with residual {:e} (scale {:e}), notes {:?}",
                    entry.name,
                    r.name,
                    r.max_residual,
                    r.scale,
                    r.notes
                );
                assert_ne!(
                    r.status,
                    CheckStatus::HypothesesNotMet,
                    "{}: check `{}` skipped: {:?}",
                    entry.name,
                    r.name,
                    r.notes
                );
            }
        }
    }

    #[test]
    fn failing_scenario_reports_failure() {
        let text = r#"
[manifold xline]
coords = x
g = "1"
box = -2.0 2.0

[static st]
space = xline
f = "1"
time = t
box = -2.0 2.0

[staticfield linear]
on = st
u = "t"
zeta = "0"

[field linear_flat]
on = st
components = "0" "t"

[check two_killing]
name = linear-u-two-killing
on = st
field = linear_flat
"#;
        let scenario = parse_scenario(text).unwrap();
        let report = scenario.run(&Overrides::default()).unwrap();
        assert!(!report.all_passed());
        assert_eq!(report.results[0].status, CheckStatus::Failed);
        assert!((report.results[0].max_residual - 4.0).abs() < 1e-9);
    }

    #[test]
    fn unknown_references_are_parse_errors() {
        let text = r#"
[check two_killing]
on = nowhere
field = nothing
"#;
        let err = parse_scenario(text).unwrap_err();
        assert!(matches!(err, ScenarioError::Parse { .. }));
        assert!(err.to_string().contains("unknown manifold"));
    }

    #[test]
    fn reports_are_byte_identical_across_runs() {
        let entry = catalog::example("static-cond2").unwrap();
        let scenario = parse_scenario(entry.source).unwrap();
        let a = scenario.run(&Overrides::default()).unwrap();
        let b = scenario.run(&Overrides::default()).unwrap();
        assert_eq!(a.to_json_lines(), b.to_json_lines());
        assert_eq!(a.to_text(false), b.to_text(false));
    }

    #[test]
    fn json_lines_carry_the_check_result_schema() {
        let entry = catalog::example("euclidean-plane-2killing").unwrap();
        let scenario = parse_scenario(entry.source).unwrap();
        let report = scenario.run(&Overrides::default()).unwrap();
        let json = report.to_json_lines();
        let lines: Vec<&str> = json.lines().collect();
        assert_eq!(lines.len(), report.results.len() + 1);
        for (line, result) in lines.iter().zip(&report.results) {
            let v: serde_json::Value = serde_json::from_str(line).unwrap();
            let obj = v.as_object().unwrap();
            for key in [
                "name",
                "kind",
                "status",
                "max_residual",
                "scale",
                "atol",
                "rtol",
                "witness",
                "notes",
            ] {
                assert!(obj.contains_key(key), "missing `{key}`");
            }
            assert_eq!(obj["name"], serde_json::json!(result.name));
        }
        let summary: serde_json::Value =
            serde_json::from_str(lines.last().unwrap()).unwrap();
        assert!(summary["summary"]["all_passed"].as_bool().unwrap());
    }

    #[test]
    fn overrides_take_precedence() {
        let entry = catalog::example("euclidean-plane-2killing").unwrap();
        let scenario = parse_scenario(entry.source).unwrap();
        let a = scenario
            .run(&Overrides {
                seed: Some(5),
                samples: Some(17),
                ..Default::default()
            })
            .unwrap();
        assert_eq!(a.seed, 5);
        let b = scenario
            .run(&Overrides {
                seed: Some(6),
                samples: Some(17),
                ..Default::default()
            })
            .unwrap();
        assert_ne!(a.to_json_lines(), b.to_json_lines());
    }
}
