//! Scalar functions and the measure spaces they are integrated over.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::expr::{BinOp, EvalError, Expr, ParseError};

type NativeFn = dyn Fn(f64) -> Result<f64, EvalError> + Send + Sync;

#[derive(Clone)]
enum Body {
    Expr(Expr),
    Native { label: String, f: Arc<NativeFn> },
}

/// Power-law exponents of `|f|` at the two ends of a finite interval:
/// `|f(x)| ~ c (x - a)^left` near `a`, and likewise at `b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingularityHints {
    pub interval: (f64, f64),
    pub left: f64,
    pub right: f64,
}

/// An evaluatable function of one real variable.
///
/// Expression-backed functions stay expression-backed under composition and
/// scaling, so they can always be printed and serialized.
#[derive(Clone)]
pub struct RealFunction {
    body: Body,
    hints: Option<SingularityHints>,
}

impl RealFunction {
    pub fn from_expr(e: Expr) -> Self {
        RealFunction { body: Body::Expr(e), hints: None }
    }

    pub fn parse(src: &str) -> Result<Self, ParseError> {
        Expr::parse(src).map(Self::from_expr)
    }

    /// Wraps an arbitrary closure. `label` is used for display only.
    pub fn native<F>(label: impl Into<String>, f: F) -> Self
    where
        F: Fn(f64) -> Result<f64, EvalError> + Send + Sync + 'static,
    {
        RealFunction { body: Body::Native { label: label.into(), f: Arc::new(f) }, hints: None }
    }

    pub fn constant(c: f64) -> Self {
        Self::from_expr(Expr::Num(c))
    }

    pub fn identity() -> Self {
        Self::from_expr(Expr::var())
    }

    /// `x^a`.
    pub fn power(a: f64) -> Self {
        Self::from_expr(Expr::bin(BinOp::Pow, Expr::var(), Expr::Num(a)))
    }

    /// Indicator of the open interval `(lo, hi)`.
    pub fn indicator(lo: f64, hi: f64) -> Self {
        Self::native(format!("1_({lo}, {hi})"), move |x| Ok(if x > lo && x < hi { 1.0 } else { 0.0 }))
    }

    #[inline]
    pub fn eval(&self, x: f64) -> Result<f64, EvalError> {
        match &self.body {
            Body::Expr(e) => e.eval(x),
            Body::Native { f, .. } => f(x),
        }
    }

    pub fn expr(&self) -> Option<&Expr> {
        match &self.body {
            Body::Expr(e) => Some(e),
            Body::Native { .. } => None,
        }
    }

    pub fn hints(&self) -> Option<&SingularityHints> {
        self.hints.as_ref()
    }

    pub fn with_hints(mut self, hints: SingularityHints) -> Self {
        self.hints = Some(hints);
        self
    }

    pub fn without_hints(mut self) -> Self {
        self.hints = None;
        self
    }

    /// `c * f`.
    pub fn scaled(&self, c: f64) -> Self {
        let body = match &self.body {
            Body::Expr(e) => Body::Expr(Expr::bin(BinOp::Mul, Expr::Num(c), e.clone())),
            Body::Native { label, f } => {
                let f = Arc::clone(f);
                Body::Native { label: format!("{c} * {label}"), f: Arc::new(move |x| Ok(c * f(x)?)) }
            }
        };
        // scaling by a nonzero constant leaves power-law exponents unchanged
        let hints = if c != 0.0 { self.hints } else { None };
        RealFunction { body, hints }
    }

    /// `self ∘ inner`, i.e. `x ↦ self(inner(x))`. No hints are carried over.
    pub fn after(&self, inner: &RealFunction) -> Self {
        match (&self.body, &inner.body) {
            (Body::Expr(outer), Body::Expr(inner)) => Self::from_expr(outer.substitute(inner)),
            _ => {
                let outer = self.clone();
                let inner_fn = inner.clone();
                Self::native(format!("({self})∘({inner})"), move |x| outer.eval(inner_fn.eval(x)?))
            }
        }
    }

    /// Pointwise product.
    pub fn times(&self, other: &RealFunction) -> Self {
        match (&self.body, &other.body) {
            (Body::Expr(a), Body::Expr(b)) => Self::from_expr(Expr::bin(BinOp::Mul, a.clone(), b.clone())),
            _ => {
                let a = self.clone();
                let b = other.clone();
                Self::native(format!("({self})*({other})"), move |x| Ok(a.eval(x)? * b.eval(x)?))
            }
        }
    }

    /// True when both functions are backed by structurally equal expressions.
    pub fn same_expr(&self, other: &RealFunction) -> bool {
        matches!((self.expr(), other.expr()), (Some(a), Some(b)) if a == b)
    }
}

impl fmt::Display for RealFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.body {
            Body::Expr(e) => write!(f, "{e}"),
            Body::Native { label, .. } => f.write_str(label),
        }
    }
}

impl fmt::Debug for RealFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RealFunction")
            .field("body", &self.to_string())
            .field("hints", &self.hints)
            .finish()
    }
}

impl From<Expr> for RealFunction {
    fn from(e: Expr) -> Self {
        Self::from_expr(e)
    }
}

/// The underlying set `X` of a measure space.
#[derive(Debug, Clone, PartialEq)]
pub enum Domain {
    /// `(0, 1)`.
    UnitInterval,
    /// `ℝ`.
    RealLine,
    /// Product of finite open intervals, one per axis, `1 <= d <= 3`.
    Box(Vec<(f64, f64)>),
}

impl Domain {
    pub fn dim(&self) -> usize {
        match self {
            Domain::UnitInterval | Domain::RealLine => 1,
            Domain::Box(b) => b.len(),
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Domain::UnitInterval => f.write_str("unit"),
            Domain::RealLine => f.write_str("real"),
            Domain::Box(axes) => {
                f.write_str("box")?;
                for (a, b) in axes {
                    write!(f, ":{a:?}:{b:?}")?;
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DomainError {
    #[error("unrecognised domain `{0}` (expected unit, real or box:a:b[:a:b...])")]
    Unrecognised(String),
    #[error("box dimension {0} outside 1..=3")]
    Dimension(usize),
    #[error("box axis ({0}, {1}) is empty or not finite")]
    Axis(f64, f64),
}

impl FromStr for Domain {
    type Err = DomainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "unit" => return Ok(Domain::UnitInterval),
            "real" => return Ok(Domain::RealLine),
            _ => {}
        }
        let rest = s.strip_prefix("box:").ok_or_else(|| DomainError::Unrecognised(s.into()))?;
        let nums: Vec<f64> = rest
            .split(':')
            .map(|t| t.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| DomainError::Unrecognised(s.into()))?;
        if nums.len() % 2 != 0 {
            return Err(DomainError::Unrecognised(s.into()));
        }
        let axes: Vec<(f64, f64)> = nums.chunks(2).map(|c| (c[0], c[1])).collect();
        MeasureSpace::boxed(axes).map(|m| m.domain)
    }
}

/// A sigma-finite measure `dμ = w(x) dx` on one of the supported domains.
#[derive(Debug, Clone)]
pub struct MeasureSpace {
    domain: Domain,
    density: Option<RealFunction>,
}

impl MeasureSpace {
    /// Lebesgue measure on `(0, 1)`.
    pub fn unit() -> Self {
        MeasureSpace { domain: Domain::UnitInterval, density: None }
    }

    /// Lebesgue measure on `ℝ`.
    pub fn real_line() -> Self {
        MeasureSpace { domain: Domain::RealLine, density: None }
    }

    /// Lebesgue measure on the finite interval `(a, b)`.
    pub fn interval(a: f64, b: f64) -> Result<Self, DomainError> {
        Self::boxed(vec![(a, b)])
    }

    pub fn boxed(axes: Vec<(f64, f64)>) -> Result<Self, DomainError> {
        if axes.is_empty() || axes.len() > 3 {
            return Err(DomainError::Dimension(axes.len()));
        }
        for &(a, b) in &axes {
            if !(a.is_finite() && b.is_finite() && a < b) {
                return Err(DomainError::Axis(a, b));
            }
        }
        Ok(MeasureSpace { domain: Domain::Box(axes), density: None })
    }

    pub fn new(domain: Domain) -> Result<Self, DomainError> {
        match domain {
            Domain::Box(axes) => Self::boxed(axes),
            d => Ok(MeasureSpace { domain: d, density: None }),
        }
    }

    /// Attaches a density `w >= 0` against Lebesgue measure.
    pub fn with_density(mut self, w: RealFunction) -> Self {
        self.density = Some(w);
        self
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn density(&self) -> Option<&RealFunction> {
        self.density.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    /// Endpoints of a one-dimensional domain (`±∞` for the real line).
    pub fn bounds_1d(&self) -> Option<(f64, f64)> {
        match &self.domain {
            Domain::UnitInterval => Some((0.0, 1.0)),
            Domain::RealLine => Some((f64::NEG_INFINITY, f64::INFINITY)),
            Domain::Box(axes) if axes.len() == 1 => Some(axes[0]),
            Domain::Box(_) => None,
        }
    }

    /// `μ(X)` for unweighted spaces; `None` when a density is attached.
    pub fn total_measure(&self) -> Option<f64> {
        if self.density.is_some() {
            return None;
        }
        Some(match &self.domain {
            Domain::UnitInterval => 1.0,
            Domain::RealLine => f64::INFINITY,
            Domain::Box(axes) => axes.iter().map(|(a, b)| b - a).product(),
        })
    }

    pub fn is_probability(&self) -> bool {
        self.total_measure() == Some(1.0)
    }

    /// All supported spaces are absolutely continuous against Lebesgue
    /// measure, hence atomless.
    pub fn is_diffuse(&self) -> bool {
        true
    }
}
