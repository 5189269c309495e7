//! Generating functions `ψ: (A, B) → (0, ∞)` of Grand Lebesgue spaces.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{EvalError, Expr, ParseError};
use crate::function::{Domain, MeasureSpace, RealFunction};
use crate::quadrature::{self, LpValue, QuadOptions, QuadratureError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PsiError {
    #[error("invalid support ({lower}, {upper}): need 1 <= A < B")]
    InvalidSupport { lower: f64, upper: String },
    #[error("|f|_p diverges at every probed p")]
    NowhereIntegrable,
    #[error("homothety factor {0} is not positive")]
    NonPositiveScale(f64),
    #[error("p = {0} is outside the support")]
    OutsideSupport(f64),
    #[error("invalid table: {0}")]
    InvalidTable(String),
    #[error("cannot serialize: {0}")]
    NotSerializable(String),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

/// Right end of a support interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Upper {
    Finite(f64),
    Infinite,
}

impl Upper {
    /// Numeric view for comparisons, `+∞` for [`Upper::Infinite`].
    pub fn value(self) -> f64 {
        match self {
            Upper::Finite(b) => b,
            Upper::Infinite => f64::INFINITY,
        }
    }

    pub fn from_value(b: f64) -> Upper {
        if b == f64::INFINITY {
            Upper::Infinite
        } else {
            Upper::Finite(b)
        }
    }
}

impl fmt::Display for Upper {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Upper::Finite(b) => write!(f, "{b}"),
            Upper::Infinite => f.write_str("inf"),
        }
    }
}

/// Open interval `(A, B)` with `1 <= A < B <= ∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Support {
    lower: f64,
    upper: Upper,
}

impl Support {
    pub fn new(lower: f64, upper: Upper) -> Result<Self, PsiError> {
        let ok = lower.is_finite()
            && lower >= 1.0
            && match upper {
                Upper::Finite(b) => b.is_finite() && lower < b,
                Upper::Infinite => true,
            };
        if !ok {
            return Err(PsiError::InvalidSupport { lower, upper: upper.to_string() });
        }
        Ok(Support { lower, upper })
    }

    pub fn bounded(lower: f64, upper: f64) -> Result<Self, PsiError> {
        Self::new(lower, Upper::Finite(upper))
    }

    pub fn unbounded(lower: f64) -> Result<Self, PsiError> {
        Self::new(lower, Upper::Infinite)
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> Upper {
        self.upper
    }

    pub fn is_bounded(&self) -> bool {
        matches!(self.upper, Upper::Finite(_))
    }

    pub fn contains_open(&self, p: f64) -> bool {
        p > self.lower && p < self.upper.value()
    }

    pub fn contains_closed(&self, p: f64) -> bool {
        p >= self.lower && p <= self.upper.value()
    }

    pub fn intersect(&self, other: &Support) -> Option<Support> {
        let lower = self.lower.max(other.lower);
        let upper = Upper::from_value(self.upper.value().min(other.upper.value()));
        Support::new(lower, upper).ok()
    }

    /// Canonical probe grid: 64 points clustered geometrically towards both
    /// ends of a bounded support, or `A + 2^k`, `k = 0..=20`, when `B = ∞`.
    pub fn canonical_grid(&self) -> Vec<f64> {
        match self.upper {
            Upper::Infinite => (0..=20).map(|k| self.lower + (k as f64).exp2()).collect(),
            Upper::Finite(b) => {
                let a = self.lower;
                let half = 0.5 * (b - a);
                // 32 distances from half the width down to 1e-6 of the width
                let ratio = (2e-6f64).powf(1.0 / 31.0);
                let mut grid: Vec<f64> = Vec::with_capacity(64);
                for j in (0..32).rev() {
                    grid.push(a + half * ratio.powi(j));
                }
                for j in 1..=32 {
                    let d = half * ratio.powi(j - 1) * if j == 1 { ratio.sqrt() } else { 1.0 };
                    grid.push(b - d);
                }
                grid.sort_by(f64::total_cmp);
                grid.dedup();
                grid.retain(|&p| self.contains_open(p));
                grid
            }
        }
    }
}

impl fmt::Display for Support {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.lower, self.upper)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum UpperRepr {
    Num(f64),
    Marker(String),
}

impl Serialize for Support {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let upper = match self.upper {
            Upper::Finite(b) => UpperRepr::Num(b),
            Upper::Infinite => UpperRepr::Marker("inf".into()),
        };
        (self.lower, upper).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Support {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let (lower, upper): (f64, UpperRepr) = Deserialize::deserialize(d)?;
        let upper = match upper {
            UpperRepr::Num(b) => Upper::Finite(b),
            UpperRepr::Marker(m) if m == "inf" => Upper::Infinite,
            UpperRepr::Marker(m) => return Err(serde::de::Error::custom(format!("bad upper bound `{m}`"))),
        };
        Support::new(lower, upper).map_err(serde::de::Error::custom)
    }
}

/// How a generating function is evaluated.
#[derive(Debug, Clone)]
pub enum PsiKind {
    /// Closed-form expression in `p`.
    ClosedForm(Expr),
    /// `ψ_f(p) = |f|_p`, computed by quadrature on demand. `table` holds the
    /// probe values gathered when the support was determined.
    Natural { f: RealFunction, measure: MeasureSpace, table: Vec<(f64, f64)>, tol: f64 },
    /// Sorted `(p, ψ(p))` nodes; `ln ψ` is interpolated linearly in `1/p`.
    Tabulated(Vec<(f64, f64)>),
}

#[derive(Debug, Clone)]
pub struct PsiFunction {
    support: Support,
    kind: PsiKind,
    scale: f64,
}

impl PsiFunction {
    pub fn new(kind: PsiKind, support: Support) -> Result<Self, PsiError> {
        let kind = match kind {
            PsiKind::Tabulated(table) => PsiKind::Tabulated(check_table(table)?),
            k => k,
        };
        Ok(PsiFunction { support, kind, scale: 1.0 })
    }

    pub fn closed_form(src: &str, support: Support) -> Result<Self, PsiError> {
        Self::new(PsiKind::ClosedForm(Expr::parse(src)?), support)
    }

    pub fn tabulated(table: Vec<(f64, f64)>, support: Support) -> Result<Self, PsiError> {
        Self::new(PsiKind::Tabulated(table), support)
    }

    /// `ψ ≡ c` on the given support.
    pub fn constant(c: f64, support: Support) -> Self {
        PsiFunction { support, kind: PsiKind::ClosedForm(Expr::Num(c)), scale: 1.0 }
    }

    pub fn support(&self) -> &Support {
        &self.support
    }

    pub fn kind(&self) -> &PsiKind {
        &self.kind
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// The function whose norms this ψ tabulates, for natural kinds.
    pub fn natural_of(&self) -> Option<&RealFunction> {
        match &self.kind {
            PsiKind::Natural { f, .. } => Some(f),
            _ => None,
        }
    }

    /// `ψ(p)`, with `+∞` outside `[A, B]` and wherever the underlying
    /// evaluation fails or diverges.
    pub fn eval(&self, p: f64) -> f64 {
        self.try_eval(p).unwrap_or(f64::INFINITY)
    }

    pub fn try_eval(&self, p: f64) -> Result<f64, PsiError> {
        if !self.support.contains_closed(p) {
            return Err(PsiError::OutsideSupport(p));
        }
        let raw = match &self.kind {
            PsiKind::ClosedForm(e) => e.eval(p)?,
            PsiKind::Natural { f, measure, tol, .. } => {
                match quadrature::lp_norm_with(f, p, measure, &QuadOptions::with_tol(*tol))?.value {
                    LpValue::Finite(v) => v,
                    LpValue::Divergent => f64::INFINITY,
                }
            }
            PsiKind::Tabulated(table) => interpolate(table, p),
        };
        Ok(self.scale * raw)
    }

    /// `T_λ ψ = λ·ψ`, applied lazily through the scale factor.
    pub fn homothety(&self, lambda: f64) -> Result<Self, PsiError> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(PsiError::NonPositiveScale(lambda));
        }
        let mut out = self.clone();
        out.scale *= lambda;
        Ok(out)
    }

    /// Positivity check on `grid` (the canonical grid when `None`).
    pub fn validate(&self, grid: Option<&[f64]>) -> PsiValidationReport {
        let grid_used: Vec<f64> = match grid {
            Some(g) => g.to_vec(),
            None => self.support.canonical_grid(),
        };
        let values: Vec<f64> = grid_used.par_iter().map(|&p| self.eval(p)).collect();
        let inf_on_grid = values.iter().copied().fold(f64::INFINITY, |acc, v| if v.is_nan() { acc } else { acc.min(v) });
        let positivity_ok = !values.iter().any(|v| v.is_nan()) && inf_on_grid > 0.0;
        PsiValidationReport { positivity_ok, inf_on_grid, support: self.support, grid_used }
    }

    pub fn to_json(&self) -> Result<serde_json::Value, PsiError> {
        let spec = match &self.kind {
            PsiKind::ClosedForm(e) => PsiSpec::ClosedForm { support: self.support, scale: self.scale, expr: e.to_string() },
            PsiKind::Tabulated(t) => PsiSpec::Tabulated {
                support: self.support,
                scale: self.scale,
                table: t.iter().map(|&(p, v)| [p, v]).collect(),
            },
            PsiKind::Natural { f, measure, table, tol } => {
                let fx = f.expr().ok_or_else(|| PsiError::NotSerializable(format!("function `{f}` has no expression form")))?;
                let density = match measure.density() {
                    None => None,
                    Some(w) => Some(
                        w.expr()
                            .ok_or_else(|| PsiError::NotSerializable("density has no expression form".into()))?
                            .to_string(),
                    ),
                };
                PsiSpec::Natural {
                    support: self.support,
                    scale: self.scale,
                    f: fx.to_string(),
                    domain: measure.domain().to_string(),
                    density,
                    tol: *tol,
                    table: table.iter().map(|&(p, v)| [p, v]).collect(),
                }
            }
        };
        serde_json::to_value(spec).map_err(|e| PsiError::NotSerializable(e.to_string()))
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self, PsiError> {
        let spec: PsiSpec = serde_json::from_value(v.clone()).map_err(|e| PsiError::NotSerializable(e.to_string()))?;
        let (support, scale, kind) = match spec {
            PsiSpec::ClosedForm { support, scale, expr } => (support, scale, PsiKind::ClosedForm(Expr::parse(&expr)?)),
            PsiSpec::Tabulated { support, scale, table } => {
                (support, scale, PsiKind::Tabulated(table.into_iter().map(|[p, v]| (p, v)).collect()))
            }
            PsiSpec::Natural { support, scale, f, domain, density, tol, table } => {
                let domain: Domain = domain.parse().map_err(|e: crate::function::DomainError| PsiError::NotSerializable(e.to_string()))?;
                let mut measure = MeasureSpace::new(domain).map_err(|e| PsiError::NotSerializable(e.to_string()))?;
                if let Some(w) = density {
                    measure = measure.with_density(RealFunction::parse(&w)?);
                }
                let kind = PsiKind::Natural {
                    f: RealFunction::parse(&f)?,
                    measure,
                    table: table.into_iter().map(|[p, v]| (p, v)).collect(),
                    tol,
                };
                (support, scale, kind)
            }
        };
        if !(scale > 0.0) {
            return Err(PsiError::NonPositiveScale(scale));
        }
        let mut psi = PsiFunction::new(kind, support)?;
        psi.scale = scale;
        Ok(psi)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum PsiSpec {
    ClosedForm {
        support: Support,
        scale: f64,
        expr: String,
    },
    Natural {
        support: Support,
        scale: f64,
        f: String,
        domain: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        density: Option<String>,
        tol: f64,
        table: Vec<[f64; 2]>,
    },
    Tabulated {
        support: Support,
        scale: f64,
        table: Vec<[f64; 2]>,
    },
}

fn check_table(mut table: Vec<(f64, f64)>) -> Result<Vec<(f64, f64)>, PsiError> {
    if table.is_empty() {
        return Err(PsiError::InvalidTable("no nodes".into()));
    }
    if table.iter().any(|(p, v)| !p.is_finite() || v.is_nan()) {
        return Err(PsiError::InvalidTable("non-finite node or NaN value".into()));
    }
    table.sort_by(|a, b| a.0.total_cmp(&b.0));
    if table.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(PsiError::InvalidTable("duplicate p".into()));
    }
    Ok(table)
}

/// Linear interpolation of `ln ψ` in `1/p`, extrapolating from the end
/// segments. Exact for `ψ(p) = c^{1/p}`.
fn interpolate(table: &[(f64, f64)], p: f64) -> f64 {
    if table.len() == 1 {
        return table[0].1;
    }
    let i = match table.binary_search_by(|n| n.0.total_cmp(&p)) {
        Ok(i) => return table[i].1,
        Err(i) => i.clamp(1, table.len() - 1),
    };
    let (p0, v0) = table[i - 1];
    let (p1, v1) = table[i];
    let w = (1.0 / p - 1.0 / p0) / (1.0 / p1 - 1.0 / p0);
    if v0 > 0.0 && v1 > 0.0 && v0.is_finite() && v1.is_finite() {
        ((1.0 - w) * v0.ln() + w * v1.ln()).exp()
    } else {
        (1.0 - w) * v0 + w * v1
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PsiValidationReport {
    pub positivity_ok: bool,
    pub inf_on_grid: f64,
    pub support: Support,
    pub grid_used: Vec<f64>,
}

/// `ψ_f(p) = |f|_p` on the maximal interval where it is finite.
///
/// The probe grid supplies the tabulated values and the fallback support;
/// the support itself comes from the endpoint exponents of `|f|` whenever
/// those estimates are stable.
pub fn natural_psi(f: &RealFunction, m: &MeasureSpace, probe_grid: &[f64]) -> Result<PsiFunction, PsiError> {
    natural_psi_with(f, m, probe_grid, quadrature::DEFAULT_TOL)
}

pub fn natural_psi_with(f: &RealFunction, m: &MeasureSpace, probe_grid: &[f64], tol: f64) -> Result<PsiFunction, PsiError> {
    let mut grid: Vec<f64> = probe_grid.iter().copied().filter(|p| *p >= 1.0 && p.is_finite()).collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let opts = QuadOptions::with_tol(tol);
    let probes: Vec<Option<f64>> = grid
        .par_iter()
        .map(|&p| match quadrature::lp_norm_with(f, p, m, &opts) {
            Ok(r) => r.value.finite(),
            Err(QuadratureError::Eval(_)) | Err(_) => None,
        })
        .collect();
    if probes.iter().all(Option::is_none) {
        return Err(PsiError::NowhereIntegrable);
    }
    let table: Vec<(f64, f64)> = grid.iter().zip(&probes).filter_map(|(&p, v)| v.map(|v| (p, v))).collect();

    let support = exponent_support(f, m)
        .filter(|s| table.iter().all(|&(p, _)| s.contains_closed(p)))
        .map(Ok)
        .unwrap_or_else(|| probe_support(&grid, &probes))?;
    Ok(PsiFunction { support, kind: PsiKind::Natural { f: f.clone(), measure: m.clone(), table, tol }, scale: 1.0 })
}

/// Interval of `p >= 1` on which every endpoint exponent `p·σ + c` of the
/// integrand stays above `-1`.
fn exponent_support(f: &RealFunction, m: &MeasureSpace) -> Option<Support> {
    let profiles = quadrature::endpoint_profiles(f, m).ok()?;
    let mut lo = 1.0f64;
    let mut hi = f64::INFINITY;
    for prof in &profiles {
        if !prof.is_stable() {
            return None;
        }
        if prof.sigma == f64::INFINITY || prof.offset == f64::INFINITY {
            continue;
        }
        let crit = (-1.0 - prof.offset) / prof.sigma;
        if prof.sigma.abs() < 1e-9 {
            if prof.offset <= -1.0 {
                return None;
            }
        } else if prof.sigma > 0.0 {
            lo = lo.max(crit);
        } else {
            hi = hi.min(crit);
        }
    }
    Support::new(lo, Upper::from_value(hi)).ok()
}

/// Support spanned by the longest run of finite probes.
fn probe_support(grid: &[f64], probes: &[Option<f64>]) -> Result<Support, PsiError> {
    let mut best: Option<(usize, usize)> = None;
    let mut i = 0;
    while i < probes.len() {
        if probes[i].is_some() {
            let start = i;
            while i < probes.len() && probes[i].is_some() {
                i += 1;
            }
            if best.map_or(true, |(s, e)| i - start > e - s) {
                best = Some((start, i));
            }
        } else {
            i += 1;
        }
    }
    let (start, end) = best.ok_or(PsiError::NowhereIntegrable)?;
    let lower = if start > 0 { grid[start - 1] } else { grid[start] };
    let upper = if end < grid.len() { Upper::Finite(grid[end]) } else { Upper::Infinite };
    Support::new(lower.max(1.0), upper)
}
