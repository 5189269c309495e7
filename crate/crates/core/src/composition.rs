//! Composition operators `U_ξ f = f ∘ ξ`, pushforward densities, bound
//! certificates and linear substitutions.

use std::fmt;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::expr::{BinOp, EvalError, Expr, Func, Var};
use crate::function::{Domain, MeasureSpace, RealFunction};
use crate::gls_norm::{bracket, best_node, boundary_of, gls_norm, ArgMax, Boundary, GlsError, GlsOptions};
use crate::odot::{odot_tabulate, power_density};
use crate::optimize::golden_max;
use crate::psi::{PsiError, PsiFunction, Upper};
use crate::quadrature::{self, Axis, LpValue, MultiFunction, QuadratureError};
use crate::report::{fmt_num, ser_extended};

/// Default relative slack below which a violated bound is still accepted
/// (with a warning) as quadrature noise.
pub const DEFAULT_TOL_SLACK: f64 = 1e-6;

const MONOTONE_PROBES: usize = 257;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CompositionError {
    #[error("ξ({x}) = {value} leaves the domain")]
    RangeMismatch { x: f64, value: f64 },
    #[error("ξ is not strictly monotone near x = {x}")]
    NotMonotone { x: f64 },
    #[error("could not invert ξ at z = {z}")]
    InversionFailed { z: f64 },
    #[error("pushforward densities are derived on a finite interval with Lebesgue measure only: {0}")]
    UnsupportedSpace(String),
    #[error("the composition map carries no density")]
    Underivable,
    #[error("ν is infinite at every grid point")]
    EmptyNuSupport,
    #[error("{what} has infinite norm")]
    InfiniteNorm { what: &'static str },
    #[error("matrix is singular")]
    SingularMatrix,
    #[error("expected dimension {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("ψ(p) = {psi} but ζ(p)/τ(p) = {ratio} at p = {p}")]
    FactorizationMismatch { p: f64, psi: f64, ratio: f64 },
    #[error("{0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Psi(#[from] PsiError),
    #[error(transparent)]
    Gls(#[from] GlsError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

// ---------------------------------------------------------------------------
// Transformations and densities

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Derivation {
    ClosedForm,
    MonotoneInverse,
    UserSupplied,
}

/// A transformation `ξ: X → X` together with the density `h` of the image
/// measure, `μ{ξ ∈ A} = ∫_A h dμ`.
#[derive(Debug, Clone)]
pub struct CompositionMap {
    xi: RealFunction,
    space: MeasureSpace,
    density: Option<RealFunction>,
    derivation: Derivation,
}

impl CompositionMap {
    /// A map with a caller-provided density.
    pub fn with_density(xi: RealFunction, space: MeasureSpace, h: RealFunction) -> Self {
        CompositionMap { xi, space, density: Some(h), derivation: Derivation::UserSupplied }
    }

    /// A map whose density is unknown; usable with [`compose`] only.
    pub fn without_density(xi: RealFunction, space: MeasureSpace) -> Self {
        CompositionMap { xi, space, density: None, derivation: Derivation::UserSupplied }
    }

    pub fn xi(&self) -> &RealFunction {
        &self.xi
    }

    pub fn space(&self) -> &MeasureSpace {
        &self.space
    }

    pub fn density(&self) -> Option<&RealFunction> {
        self.density.as_ref()
    }

    pub fn derivation(&self) -> Derivation {
        self.derivation
    }

    /// `μ{y: ξ(y) ∈ (u, v)}` through the monotone preimage of `(u, v)`.
    pub fn preimage_measure(&self, u: f64, v: f64) -> Result<f64, CompositionError> {
        let (lo, hi) = finite_interval(&self.space)?;
        let increasing = probe_monotone(&self.xi, lo, hi)?;
        let a = invert(&self.xi, lo, hi, increasing, u)?;
        let b = invert(&self.xi, lo, hi, increasing, v)?;
        Ok((b - a).abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Form {
    Identity,
    Power(f64),
    Affine(f64, f64),
}

/// `(a, b)` when `e = a·x + b` syntactically.
fn affine_coeffs(e: &Expr) -> Option<(f64, f64)> {
    if let Some(c) = e.constant_value() {
        return Some((0.0, c));
    }
    match e {
        Expr::Var(Var::X) => Some((1.0, 0.0)),
        Expr::Neg(inner) => affine_coeffs(inner).map(|(a, b)| (-a, -b)),
        Expr::Bin(op, l, r) => {
            let (la, lb) = affine_coeffs(l)?;
            let (ra, rb) = affine_coeffs(r)?;
            match op {
                BinOp::Add => Some((la + ra, lb + rb)),
                BinOp::Sub => Some((la - ra, lb - rb)),
                BinOp::Mul if la == 0.0 => Some((lb * ra, lb * rb)),
                BinOp::Mul if ra == 0.0 => Some((la * rb, lb * rb)),
                BinOp::Div if ra == 0.0 && rb != 0.0 => Some((la / rb, lb / rb)),
                BinOp::Pow if ra == 0.0 && rb == 1.0 => Some((la, lb)),
                _ => None,
            }
        }
        _ => None,
    }
}

fn power_exponent(e: &Expr) -> Option<f64> {
    match e {
        Expr::Bin(BinOp::Pow, base, exp) if matches!(**base, Expr::Var(Var::X)) => exp.constant_value(),
        Expr::Call(Func::Pow, args) if args.len() == 2 && matches!(args[0], Expr::Var(Var::X)) => args[1].constant_value(),
        Expr::Call(Func::Sqrt, args) if args.len() == 1 && matches!(args[0], Expr::Var(Var::X)) => Some(0.5),
        _ => None,
    }
}

fn recognize(xi: &RealFunction) -> Option<Form> {
    let e = xi.expr()?;
    if let Some((a, b)) = affine_coeffs(e) {
        return match (a, b) {
            (a, b) if a == 1.0 && b == 0.0 => Some(Form::Identity),
            (a, _) if a != 0.0 => Some(Form::Affine(a, b)),
            _ => None,
        };
    }
    match power_exponent(e) {
        Some(c) if c == 1.0 => Some(Form::Identity),
        Some(c) if c > 0.0 && c.is_finite() => Some(Form::Power(c)),
        _ => None,
    }
}

fn finite_interval(m: &MeasureSpace) -> Result<(f64, f64), CompositionError> {
    if m.density().is_some() {
        return Err(CompositionError::UnsupportedSpace("weighted measure".into()));
    }
    m.bounds_1d()
        .filter(|(a, b)| a.is_finite() && b.is_finite())
        .ok_or_else(|| CompositionError::UnsupportedSpace(m.domain().to_string()))
}

fn probe_xs(lo: f64, hi: f64) -> impl Iterator<Item = f64> {
    (1..=MONOTONE_PROBES).map(move |i| lo + (hi - lo) * i as f64 / (MONOTONE_PROBES + 1) as f64)
}

/// `true` for increasing, `false` for decreasing; errors on a sign change.
fn probe_monotone(xi: &RealFunction, lo: f64, hi: f64) -> Result<bool, CompositionError> {
    let pts: Vec<(f64, f64)> = probe_xs(lo, hi).map(|x| Ok((x, xi.eval(x)?))).collect::<Result<_, EvalError>>()?;
    let increasing = pts[1].1 > pts[0].1;
    for w in pts.windows(2) {
        let d = w[1].1 - w[0].1;
        if !(if increasing { d > 0.0 } else { d < 0.0 }) {
            return Err(CompositionError::NotMonotone { x: w[1].0 });
        }
    }
    Ok(increasing)
}

/// `η(z) = sup{x : ξ(x) ≤ z}` (or the mirrored form for decreasing ξ), by
/// bisection; values of `z` outside the image clamp to the interval ends.
fn invert(xi: &RealFunction, lo: f64, hi: f64, increasing: bool, z: f64) -> Result<f64, CompositionError> {
    if !z.is_finite() {
        return Err(CompositionError::InversionFailed { z });
    }
    let (mut a, mut b) = (lo, hi);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if !(mid > a && mid < b) {
            break;
        }
        let v = xi.eval(mid).map_err(|_| CompositionError::InversionFailed { z })?;
        if (v <= z) == increasing {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}

/// Derives `h` for a strictly monotone `ξ` on a finite interval with
/// Lebesgue measure. Powers, affine maps and the identity get closed forms;
/// anything else is differentiated through its numerical inverse.
pub fn pushforward_density(xi: &RealFunction, m: &MeasureSpace) -> Result<CompositionMap, CompositionError> {
    let (lo, hi) = finite_interval(m)?;
    let increasing = probe_monotone(xi, lo, hi)?;
    let unit = (lo, hi) == (0.0, 1.0);
    let closed = match recognize(xi) {
        Some(Form::Identity) => Some(RealFunction::constant(1.0)),
        Some(Form::Power(c)) if unit => Some(power_density(c)),
        Some(Form::Affine(a, b)) => {
            let (u, v) = (a * lo + b, a * hi + b);
            let (u, v) = (u.min(v), u.max(v));
            if u < lo || v > hi {
                return Err(CompositionError::RangeMismatch { x: if a * lo + b < lo { lo } else { hi }, value: u.min(v) });
            }
            Some(RealFunction::indicator(u, v).scaled(1.0 / a.abs()))
        }
        _ => None,
    };
    if let Some(h) = closed {
        return Ok(CompositionMap { xi: xi.clone(), space: m.clone(), density: Some(h), derivation: Derivation::ClosedForm });
    }

    let image = {
        let a = xi.eval(lo + (hi - lo) * 1e-12).unwrap_or(f64::NAN);
        let b = xi.eval(hi - (hi - lo) * 1e-12).unwrap_or(f64::NAN);
        (a.min(b), a.max(b))
    };
    if !(image.0.is_finite() && image.1.is_finite()) {
        return Err(CompositionError::InversionFailed { z: if image.0.is_finite() { image.1 } else { image.0 } });
    }
    if image.0 < lo - 1e-9 || image.1 > hi + 1e-9 {
        return Err(CompositionError::RangeMismatch { x: lo, value: if image.0 < lo { image.0 } else { image.1 } });
    }
    let f = xi.clone();
    let label = format!("d/dz ({xi})^-1");
    let h = RealFunction::native(label, move |z| {
        if !(z > image.0 && z < image.1) {
            return Ok(0.0);
        }
        let d = 1e-4 * (z - image.0).min(image.1 - z);
        let eta = |w: f64| invert(&f, lo, hi, increasing, w).map_err(|_| EvalError { what: "inverse", arg: w });
        Ok(((eta(z + d)? - eta(z - d)?) / (2.0 * d)).abs())
    });
    Ok(CompositionMap { xi: xi.clone(), space: m.clone(), density: Some(h), derivation: Derivation::MonotoneInverse })
}

/// Largest discrepancy between `μ{ξ ∈ (u, v)}` and `∫_u^v h dμ` over the
/// given sub-intervals.
pub fn check_pushforward(c: &CompositionMap, intervals: &[(f64, f64)], tol: f64) -> Result<f64, CompositionError> {
    let h = c.density.as_ref().ok_or(CompositionError::Underivable)?;
    let mut worst: f64 = 0.0;
    for &(u, v) in intervals {
        let lhs = c.preimage_measure(u, v)?;
        let sub = MeasureSpace::interval(u, v).map_err(|e| CompositionError::InvalidArgument(e.to_string()))?;
        let rhs = quadrature::integrate_nonnegative(h, &sub, tol)?.as_f64();
        worst = worst.max((lhs - rhs).abs());
    }
    Ok(worst)
}

/// `f ∘ ξ`, after probing that `ξ` stays inside the domain.
pub fn compose(f: &RealFunction, c: &CompositionMap) -> Result<RealFunction, CompositionError> {
    if let Some((lo, hi)) = c.space.bounds_1d() {
        if lo.is_finite() && hi.is_finite() {
            for x in probe_xs(lo, hi) {
                let v = c.xi.eval(x)?;
                if !(v >= lo && v <= hi) {
                    return Err(CompositionError::RangeMismatch { x, value: v });
                }
            }
        }
    }
    if recognize(&c.xi) == Some(Form::Identity) {
        return Ok(f.clone());
    }
    let g = f.after(&c.xi);
    let unit = matches!(c.space.domain(), Domain::UnitInterval) && c.space.density().is_none();
    Ok(if unit { quadrature::with_estimated_hints(&g).unwrap_or(g) } else { g })
}

// ---------------------------------------------------------------------------
// Bound certificates

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    PassWithWarning,
    Fail,
    Inconclusive,
}

impl Verdict {
    fn of(lhs: f64, rhs: f64, tol_slack: f64) -> Verdict {
        let margin = rhs - lhs;
        if margin >= 0.0 {
            Verdict::Pass
        } else if margin >= -tol_slack * rhs.abs() {
            Verdict::PassWithWarning
        } else {
            Verdict::Fail
        }
    }

    pub fn is_pass(self) -> bool {
        matches!(self, Verdict::Pass | Verdict::PassWithWarning)
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::PassWithWarning => "pass_with_warning",
            Verdict::Fail => "fail",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundRow {
    pub p: f64,
    #[serde(serialize_with = "ser_extended")]
    pub lhs: f64,
    #[serde(serialize_with = "ser_extended")]
    pub rhs: f64,
    #[serde(serialize_with = "ser_extended")]
    pub margin: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub rows: Vec<BoundRow>,
    pub overall_pass: bool,
    pub inputs_digest: String,
    pub tol_slack: f64,
    /// Grid points left out because the right-hand side is infinite there.
    pub skipped_p: Vec<f64>,
}

impl BoundReport {
    fn assemble(rows: Vec<BoundRow>, digest: String, tol_slack: f64, skipped_p: Vec<f64>) -> Self {
        let overall_pass = !rows.is_empty() && rows.iter().all(|r| r.verdict.is_pass());
        BoundReport { rows, overall_pass, inputs_digest: digest, tol_slack, skipped_p }
    }

    pub fn violations(&self) -> usize {
        self.rows.iter().filter(|r| r.verdict == Verdict::Fail).count()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("p,lhs,rhs,margin,verdict\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{},{},{}\n", fmt_num(r.p), fmt_num(r.lhs), fmt_num(r.rhs), fmt_num(r.margin), r.verdict));
        }
        out
    }
}

/// FNV-1a over a canonical rendering of the inputs.
fn digest(parts: &[String]) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for part in parts {
        for b in part.bytes().chain(std::iter::once(0x1f)) {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    format!("{h:016x}")
}

/// Details of a [`verify_bound`] run beyond the per-p rows.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundContext {
    pub f_norm: f64,
    pub h_norm: f64,
    pub h_norm_used: f64,
    pub nu_support: (f64, f64),
}

/// Checks `|f ∘ ξ|_p ≤ ν(p)·‖f‖Gψ` at every grid point where `ν` is
/// finite, with `ν = ψ ⊙ θ` built from `‖h‖Gθ`.
pub fn verify_bound(
    f: &RealFunction,
    psi: &PsiFunction,
    c: &CompositionMap,
    theta: &PsiFunction,
    m: &MeasureSpace,
    p_grid: &[f64],
    tol_slack: f64,
) -> Result<(BoundReport, BoundContext), CompositionError> {
    if !(tol_slack >= 0.0) {
        return Err(CompositionError::InvalidArgument(format!("tol_slack {tol_slack} must be nonnegative")));
    }
    let h = c.density.as_ref().ok_or(CompositionError::Underivable)?;
    let opts = GlsOptions::default();
    let f_norm = gls_norm(f, psi, m, &opts)?.value.finite().ok_or(CompositionError::InfiniteNorm { what: "f" })?;
    let h_norm = gls_norm(h, theta, m, &opts)?.value.finite().ok_or(CompositionError::InfiniteNorm { what: "h" })?;
    // for the natural pick the norm is 1 up to quadrature noise
    let natural = theta.natural_of().is_some_and(|g| g.same_expr(h));
    let h_norm_used = if natural && (h_norm - 1.0).abs() <= 1e-4 { 1.0 } else { h_norm };

    let nu = odot_tabulate(psi, theta, h_norm_used, p_grid);
    let nu_support = nu.support.ok_or(CompositionError::EmptyNuSupport)?;
    let g = compose(f, c)?;

    let feasible: Vec<(f64, f64)> = nu.rows.iter().filter(|r| r.feasible).map(|r| (r.p, r.nu)).collect();
    let skipped_p = nu.rows.iter().filter(|r| !r.feasible).map(|r| r.p).collect();
    let rows: Vec<Result<BoundRow, CompositionError>> = feasible
        .par_iter()
        .map(|&(p, nu_p)| {
            let rhs = nu_p * f_norm;
            match quadrature::lp_norm(&g, p, m, quadrature::DEFAULT_TOL) {
                Ok(r) => {
                    let lhs = r.value.as_f64();
                    Ok(BoundRow { p, lhs, rhs, margin: rhs - lhs, verdict: Verdict::of(lhs, rhs, tol_slack) })
                }
                Err(e) if e.is_inconclusive() => {
                    Ok(BoundRow { p, lhs: f64::NAN, rhs, margin: f64::NAN, verdict: Verdict::Inconclusive })
                }
                Err(e) => Err(e.into()),
            }
        })
        .collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>, _>>()?;
    let d = digest(&[
        format!("{f:?}"),
        format!("{psi:?}"),
        format!("{:?}", c.xi),
        format!("{theta:?}"),
        format!("{m:?}"),
        format!("{p_grid:?}"),
        format!("{tol_slack:?}"),
    ]);
    Ok((BoundReport::assemble(rows, d, tol_slack, skipped_p), BoundContext { f_norm, h_norm, h_norm_used, nu_support }))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HolderSplit {
    #[serde(serialize_with = "ser_extended")]
    pub lhs: f64,
    #[serde(serialize_with = "ser_extended")]
    pub rhs: f64,
}

/// `(∫|f|^p h dμ)^{1/p}` against `|f|_{αp}·|h|_β^{1/p}`, `β = α/(α−1)`.
pub fn holder_split(f: &RealFunction, h: &RealFunction, m: &MeasureSpace, p: f64, alpha: f64) -> Result<HolderSplit, CompositionError> {
    if !(alpha > 1.0 && alpha.is_finite()) {
        return Err(CompositionError::InvalidArgument(format!("α = {alpha} must exceed 1")));
    }
    let tol = quadrature::DEFAULT_TOL;
    let beta = alpha / (alpha - 1.0);
    let weighted = m.clone().with_density(h.clone());
    let lhs = quadrature::lp_norm(f, p, &weighted, tol)?.value.as_f64();
    let f_ap = quadrature::lp_norm(f, alpha * p, m, tol)?.value.as_f64();
    let h_b = quadrature::lp_norm(h, beta, m, tol)?.value.as_f64();
    Ok(HolderSplit { lhs, rhs: f_ap * h_b.powf(1.0 / p) })
}

// ---------------------------------------------------------------------------
// Linear substitution

/// Square matrix of size 1 to 3, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn from_row_major(data: Vec<f64>) -> Result<Self, CompositionError> {
        let n = match data.len() {
            1 => 1,
            4 => 2,
            9 => 3,
            k => return Err(CompositionError::InvalidArgument(format!("{k} entries do not form a 1x1, 2x2 or 3x3 matrix"))),
        };
        if data.iter().any(|v| !v.is_finite()) {
            return Err(CompositionError::InvalidArgument("matrix entries must be finite".into()));
        }
        Ok(Matrix { n, data })
    }

    pub fn scalar(a: f64) -> Self {
        Matrix { n: 1, data: vec![a] }
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Matrix { n, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn det(&self) -> f64 {
        match self.n {
            1 => self.data[0],
            2 => self.at(0, 0) * self.at(1, 1) - self.at(0, 1) * self.at(1, 0),
            _ => {
                self.at(0, 0) * (self.at(1, 1) * self.at(2, 2) - self.at(1, 2) * self.at(2, 1))
                    - self.at(0, 1) * (self.at(1, 0) * self.at(2, 2) - self.at(1, 2) * self.at(2, 0))
                    + self.at(0, 2) * (self.at(1, 0) * self.at(2, 1) - self.at(1, 1) * self.at(2, 0))
            }
        }
    }

    pub fn apply(&self, x: &[f64]) -> [f64; 3] {
        let mut out = [0.0; 3];
        for (i, o) in out.iter_mut().enumerate().take(self.n) {
            *o = (0..self.n).map(|j| self.at(i, j) * x[j]).sum();
        }
        out
    }

    fn nonsingular(&self) -> Result<f64, CompositionError> {
        let d = self.det();
        let scale = self.data.iter().fold(0.0f64, |acc, v| acc.max(v.abs())).powi(self.n as i32);
        if d == 0.0 || d.abs() <= 1e-14 * scale {
            return Err(CompositionError::SingularMatrix);
        }
        Ok(d)
    }
}

/// `x ↦ f(a·x)` for a 1×1 matrix.
pub fn substitute_1d(f: &RealFunction, a: &Matrix) -> Result<RealFunction, CompositionError> {
    if a.dim() != 1 {
        return Err(CompositionError::DimensionMismatch { expected: 1, got: a.dim() });
    }
    a.nonsingular()?;
    Ok(f.after(&RealFunction::from_expr(Expr::bin(BinOp::Mul, Expr::num(a.data[0]), Expr::var()))))
}

/// `|V_A f|_p = |f(A·)|_p` for a one-dimensional measure space.
pub fn linear_substitute(f: &RealFunction, a: &Matrix, m: &MeasureSpace, p: f64) -> Result<LpValue, CompositionError> {
    let g = substitute_1d(f, a)?;
    Ok(quadrature::lp_norm(&g, p, m, quadrature::DEFAULT_TOL)?.value)
}

/// `|f(A·)|_p` over a product of up to three axes.
pub fn linear_substitute_nd(f: &MultiFunction<'_>, a: &Matrix, axes: &[Axis], p: f64) -> Result<LpValue, CompositionError> {
    if axes.len() != a.dim() {
        return Err(CompositionError::DimensionMismatch { expected: a.dim(), got: axes.len() });
    }
    a.nonsingular()?;
    let g = |x: &[f64]| f(&a.apply(x)[..a.dim()]);
    Ok(quadrature::lp_norm_nd(&g, p, axes, quadrature::DEFAULT_TOL)?.value)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FundamentalValue {
    pub delta: f64,
    pub value: f64,
    pub argmax_p: ArgMax,
}

/// `φ(Gτ, δ) = sup_p δ^{1/p} / τ(p)` for `0 < δ ≤ μ(X)`.
pub fn fundamental_function(tau: &PsiFunction, delta: f64, total_measure: f64) -> Result<FundamentalValue, CompositionError> {
    if !(delta > 0.0 && delta <= total_measure && delta.is_finite()) {
        return Err(CompositionError::InvalidArgument(format!("δ = {delta} must lie in (0, {total_measure}]")));
    }
    let support = *tau.support();
    let grid: Vec<f64> = match support.upper() {
        // the supremum may only be approached as p → ∞
        Upper::Infinite => (0..=40).map(|k| support.lower() + (k as f64).exp2()).collect(),
        Upper::Finite(_) => support.canonical_grid(),
    };
    let g = |p: f64| {
        let t = tau.eval(p);
        if t == f64::INFINITY {
            0.0
        } else {
            delta.powf(1.0 / p) / t
        }
    };
    let rows: Vec<(f64, f64)> = grid.iter().map(|&p| (p, g(p))).collect();
    let (bp, bv) = best_node(&rows).ok_or(CompositionError::InvalidArgument("τ has an empty grid".into()))?;
    let (lo, hi) = bracket(&rows, bp, &support);
    let mut best = (bp, bv);
    let cand = golden_max(lo, hi, 1e-12 * (1.0 + bp), 80, |p| if support.contains_open(p) { g(p) } else { f64::NEG_INFINITY });
    if cand.1 > best.1 {
        best = cand;
    }
    let mut boundary = boundary_of(best.0, &rows, &support);
    // one-sided limits at a finite end, where τ extends continuously
    for (end, p) in [(Boundary::Lower, support.lower()), (Boundary::Upper, support.upper().value())] {
        if p.is_finite() {
            let v = g(p);
            if v.is_finite() && v > best.1 {
                best = (p, v);
                boundary = Some(end);
            }
        }
    }
    Ok(FundamentalValue { delta, value: best.1, argmax_p: ArgMax { p: best.0, boundary } })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearBoundReport {
    /// Per-p rows: `|V_A f|_p / ζ(p)` against the constant right side.
    pub report: BoundReport,
    #[serde(serialize_with = "ser_extended")]
    pub substituted_norm: f64,
    pub f_norm: f64,
    pub phi: FundamentalValue,
    pub det: f64,
    #[serde(serialize_with = "ser_extended")]
    pub rhs: f64,
    pub sup_pass: bool,
}

/// Checks `‖V_A f‖Gζ ≤ ‖f‖Gψ · φ(Gτ, |det A|^{−1})` for a factorization
/// `ψ = ζ / τ`, both row by row on `p_grid` and for the full suprema.
#[allow(clippy::too_many_arguments)]
pub fn linear_bound_check(
    f: &RealFunction,
    psi: &PsiFunction,
    zeta: &PsiFunction,
    tau: &PsiFunction,
    a: &Matrix,
    m: &MeasureSpace,
    p_grid: &[f64],
    tol_slack: f64,
) -> Result<LinearBoundReport, CompositionError> {
    for &p in p_grid {
        let (s, z, t) = (psi.eval(p), zeta.eval(p), tau.eval(p));
        let ratio = z / t;
        if !((s - ratio).abs() <= 1e-10 * s.abs()) {
            return Err(CompositionError::FactorizationMismatch { p, psi: s, ratio });
        }
    }
    let det = a.nonsingular()?;
    let g = substitute_1d(f, a)?;
    let opts = GlsOptions::default();
    let f_norm = gls_norm(f, psi, m, &opts)?.value.finite().ok_or(CompositionError::InfiniteNorm { what: "f" })?;
    let substituted_norm = gls_norm(&g, zeta, m, &opts)?.value.as_f64();
    let total = m.total_measure().unwrap_or(f64::INFINITY);
    let phi = fundamental_function(tau, (1.0 / det.abs()).min(total), total)?;
    let rhs = f_norm * phi.value;

    let rows: Vec<Result<BoundRow, CompositionError>> = p_grid
        .par_iter()
        .map(|&p| {
            let lhs = quadrature::lp_norm(&g, p, m, quadrature::DEFAULT_TOL)?.value.as_f64() / zeta.eval(p);
            Ok(BoundRow { p, lhs, rhs, margin: rhs - lhs, verdict: Verdict::of(lhs, rhs, tol_slack) })
        })
        .collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>, _>>()?;
    let d = digest(&[format!("{f:?}"), format!("{psi:?}"), format!("{zeta:?}"), format!("{tau:?}"), format!("{a:?}"), format!("{p_grid:?}")]);
    let sup_pass = Verdict::of(substituted_norm, rhs, tol_slack).is_pass();
    Ok(LinearBoundReport { report: BoundReport::assemble(rows, d, tol_slack, Vec::new()), substituted_norm, f_norm, phi, det, rhs, sup_pass })
}
