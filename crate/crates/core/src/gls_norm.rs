//! Grand Lebesgue space norm `||f||Gψ = sup_p |f|_p / ψ(p)`.

use rayon::prelude::*;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::function::{MeasureSpace, RealFunction};
use crate::optimize::golden_max;
use crate::psi::{PsiFunction, Support};
use crate::quadrature::{self, LpValue, QuadOptions, QuadratureError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GlsError {
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error("no grid node could be evaluated")]
    NoEvaluableNodes,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormValue {
    Finite(f64),
    Infinite,
}

impl NormValue {
    pub fn finite(self) -> Option<f64> {
        match self {
            NormValue::Finite(v) => Some(v),
            NormValue::Infinite => None,
        }
    }

    pub fn as_f64(self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, NormValue::Infinite)
    }
}

impl Serialize for NormValue {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            NormValue::Finite(v) => s.serialize_f64(*v),
            NormValue::Infinite => s.serialize_str("inf"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Lower,
    Upper,
}

/// Location of a supremum: a point, flagged when it sits at an end of the
/// support (the supremum is then a one-sided limit).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ArgMax {
    pub p: f64,
    pub boundary: Option<Boundary>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GlsNormReport {
    pub value: NormValue,
    pub argmax_p: ArgMax,
    /// `(p, |f|_p / ψ(p))` at every evaluated grid node.
    pub grid: Vec<(f64, f64)>,
    pub refined: bool,
    /// Grid nodes where the quadrature could not decide convergence.
    pub skipped: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct GlsOptions {
    pub tol: f64,
    /// Overrides the canonical grid of the support of ψ.
    pub grid: Option<Vec<f64>>,
    pub refine: bool,
}

impl Default for GlsOptions {
    fn default() -> Self {
        GlsOptions { tol: quadrature::DEFAULT_TOL, grid: None, refine: true }
    }
}

enum Ratio {
    Value(f64),
    Divergent,
    Skipped,
}

fn ratio_at(f: &RealFunction, psi: &PsiFunction, m: &MeasureSpace, p: f64, opts: &QuadOptions) -> Result<Ratio, QuadratureError> {
    let denom = psi.eval(p);
    if denom == f64::INFINITY {
        return Ok(Ratio::Value(0.0));
    }
    match quadrature::lp_norm_with(f, p, m, opts) {
        Ok(r) => Ok(match r.value {
            LpValue::Finite(v) => Ratio::Value(v / denom),
            LpValue::Divergent => Ratio::Divergent,
        }),
        Err(e) if e.is_inconclusive() => Ok(Ratio::Skipped),
        Err(e) => Err(e),
    }
}

/// Supremum of `|f|_p / ψ(p)` over the support of ψ: a grid scan followed by
/// golden-section refinement around the best node.
pub fn gls_norm(f: &RealFunction, psi: &PsiFunction, m: &MeasureSpace, opts: &GlsOptions) -> Result<GlsNormReport, GlsError> {
    let support = *psi.support();
    let grid = match &opts.grid {
        Some(g) => g.clone(),
        None => support.canonical_grid(),
    };
    let qopts = QuadOptions::with_tol(opts.tol);
    let ratios: Vec<Result<Ratio, QuadratureError>> = grid.par_iter().map(|&p| ratio_at(f, psi, m, p, &qopts)).collect();

    let mut rows = Vec::with_capacity(grid.len());
    let mut skipped = Vec::new();
    let mut divergent_at = None;
    for (&p, r) in grid.iter().zip(ratios) {
        match r? {
            Ratio::Value(v) => rows.push((p, v)),
            Ratio::Divergent => {
                divergent_at.get_or_insert(p);
            }
            Ratio::Skipped => skipped.push(p),
        }
    }
    if let Some(p) = divergent_at {
        return Ok(GlsNormReport {
            value: NormValue::Infinite,
            argmax_p: ArgMax { p, boundary: None },
            grid: rows,
            refined: false,
            skipped,
        });
    }
    let (best_p, best_v) = best_node(&rows).ok_or(GlsError::NoEvaluableNodes)?;
    let mut argmax = (best_p, best_v);
    let mut refined = false;
    if opts.refine && best_v > 0.0 && best_v.is_finite() {
        let (lo, hi) = bracket(&rows, best_p, &support);
        let xtol = 1e-10 * (1.0 + best_p.abs());
        let cand = golden_max(lo, hi, xtol, 60, |p| match ratio_at(f, psi, m, p, &qopts) {
            Ok(Ratio::Value(v)) => v,
            _ => f64::NEG_INFINITY,
        });
        refined = true;
        if cand.1 > argmax.1 && cand.1.is_finite() {
            argmax = cand;
        }
    }
    let boundary = boundary_of(argmax.0, &rows, &support);
    Ok(GlsNormReport {
        value: NormValue::Finite(argmax.1),
        argmax_p: ArgMax { p: argmax.0, boundary },
        grid: rows,
        refined,
        skipped,
    })
}

pub(crate) fn best_node(rows: &[(f64, f64)]) -> Option<(f64, f64)> {
    rows.iter().copied().filter(|r| !r.1.is_nan()).fold(None, |acc: Option<(f64, f64)>, r| match acc {
        Some(b) if b.1 >= r.1 => Some(b),
        _ => Some(r),
    })
}

/// Neighbouring nodes of `p`, or the support ends beyond the extreme nodes.
pub(crate) fn bracket(rows: &[(f64, f64)], p: f64, support: &Support) -> (f64, f64) {
    let i = rows.iter().position(|r| r.0 == p).unwrap_or(0);
    let lo = if i > 0 { rows[i - 1].0 } else { support.lower() };
    let hi = if i + 1 < rows.len() {
        rows[i + 1].0
    } else {
        let b = support.upper().value();
        if b.is_finite() {
            b
        } else {
            2.0 * p
        }
    };
    (lo, hi)
}

/// Boundary marker when `p` lies beyond the outermost evaluated node.
pub(crate) fn boundary_of(p: f64, rows: &[(f64, f64)], support: &Support) -> Option<Boundary> {
    let first = rows.first()?.0;
    let last = rows.last()?.0;
    if p <= first && first - support.lower() <= 1e-5 * (1.0 + first) {
        Some(Boundary::Lower)
    } else if p >= last && (!support.is_bounded() || support.upper().value() - last <= 1e-5 * (1.0 + last)) {
        Some(Boundary::Upper)
    } else {
        None
    }
}
