//! The ⊙-convolution `ν(p) = inf_{α>1} ψ(αp)·(‖h‖·θ(α/(α−1)))^{1/p}` and
//! the power-substitution function built from it.

use rayon::prelude::*;
use serde::Serialize;

use crate::function::{MeasureSpace, RealFunction};
use crate::optimize::golden_min;
use crate::psi::{natural_psi, PsiError, PsiFunction, Support};

/// Range of `s = ln(α − α₀)` explored by the minimizer.
pub const S_RANGE: f64 = 30.0;
/// Coarse scan resolution in `s`.
pub const SCAN_NODES: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OdotValue {
    /// `+∞` when no α is feasible.
    #[serde(serialize_with = "crate::report::ser_extended")]
    pub value: f64,
    pub argmin_alpha: Option<f64>,
}

impl OdotValue {
    pub fn infeasible() -> Self {
        OdotValue { value: f64::INFINITY, argmin_alpha: None }
    }

    pub fn is_feasible(&self) -> bool {
        self.value.is_finite()
    }
}

/// Minimizes `log_obj(α)` over `α = α₀ + e^s`, `s ∈ [−30, 30]`, restricted to
/// the open window `lo < α < hi`. Returns `(min log value, α*)`.
fn minimize_alpha(alpha0: f64, lo: f64, hi: f64, log_obj: impl Fn(f64) -> f64) -> Option<(f64, f64)> {
    let s_lo = if lo > alpha0 { (lo - alpha0).ln().max(-S_RANGE) } else { -S_RANGE };
    let s_hi = if hi == f64::INFINITY { S_RANGE } else if hi > alpha0 { (hi - alpha0).ln().min(S_RANGE) } else { return None };
    if !(s_lo < s_hi) {
        return None;
    }
    let obj = |s: f64| {
        let v = log_obj(alpha0 + s.exp());
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let step = (s_hi - s_lo) / (SCAN_NODES - 1) as f64;
    let nodes: Vec<f64> = (0..SCAN_NODES).map(|i| s_lo + step * i as f64).collect();
    let vals: Vec<f64> = nodes.iter().map(|&s| obj(s)).collect();
    let (i, &best) = vals.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1))?;
    if best == f64::INFINITY {
        return None;
    }
    let a = nodes[i.saturating_sub(1)];
    let b = nodes[(i + 1).min(SCAN_NODES - 1)];
    let (s_ref, v_ref) = golden_min(a, b, 1e-12, 200, obj);
    let (s, v) = if v_ref < best { (s_ref, v_ref) } else { (nodes[i], best) };
    Some((v, alpha0 + s.exp()))
}

/// `ν(p)` with the minimizing α. Feasibility uses open supports: `αp` must
/// lie strictly inside supp ψ and `α/(α−1)` strictly inside supp θ.
pub fn odot(psi: &PsiFunction, theta: &PsiFunction, h_norm: f64, p: f64) -> OdotValue {
    if !(p >= 1.0 && p.is_finite() && h_norm > 0.0 && h_norm.is_finite()) {
        return OdotValue::infeasible();
    }
    let sp = psi.support();
    let st = theta.support();
    // αp ∈ (Aψ, Bψ)
    let mut lo = sp.lower() / p;
    let mut hi = sp.upper().value() / p;
    // β = α/(α−1) ∈ (Aθ, Bθ) ⇔ α ∈ (Bθ/(Bθ−1), Aθ/(Aθ−1))
    let bt = st.upper().value();
    if bt.is_finite() {
        lo = lo.max(bt / (bt - 1.0));
    }
    if st.lower() > 1.0 {
        hi = hi.min(st.lower() / (st.lower() - 1.0));
    }
    let ln_h = h_norm.ln();
    let log_obj = |alpha: f64| {
        let beta = alpha / (alpha - 1.0);
        if !(sp.contains_open(alpha * p) && st.contains_open(beta)) {
            return f64::INFINITY;
        }
        let a = psi.eval(alpha * p);
        let t = theta.eval(beta);
        if !(a > 0.0 && t > 0.0) {
            return f64::INFINITY;
        }
        a.ln() + (ln_h + t.ln()) / p
    };
    match minimize_alpha(1.0, lo, hi, log_obj) {
        Some((v, alpha)) if v.is_finite() => OdotValue { value: v.exp(), argmin_alpha: Some(alpha) },
        _ => OdotValue::infeasible(),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OdotRow {
    pub p: f64,
    #[serde(serialize_with = "crate::report::ser_extended")]
    pub nu: f64,
    pub argmin_alpha: Option<f64>,
    pub feasible: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct OdotResult {
    pub rows: Vec<OdotRow>,
    /// `(c, d)`: first and last node of the longest run of finite values.
    pub support: Option<(f64, f64)>,
    pub h_norm_used: f64,
    /// ν tabulated on the support run; `None` when the run has fewer than
    /// two nodes.
    #[serde(skip)]
    pub nu: Option<PsiFunction>,
}

impl OdotResult {
    pub fn support_is_empty(&self) -> bool {
        self.support.is_none()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("p,nu,argmin_alpha,feasible\n");
        for r in &self.rows {
            let alpha = r.argmin_alpha.map(crate::report::fmt_num).unwrap_or_default();
            out.push_str(&format!("{},{},{},{}\n", crate::report::fmt_num(r.p), crate::report::fmt_num(r.nu), alpha, r.feasible));
        }
        out
    }
}

pub fn odot_tabulate(psi: &PsiFunction, theta: &PsiFunction, h_norm: f64, p_grid: &[f64]) -> OdotResult {
    let values: Vec<OdotValue> = p_grid.par_iter().map(|&p| odot(psi, theta, h_norm, p)).collect();
    let rows: Vec<OdotRow> = p_grid
        .iter()
        .zip(&values)
        .map(|(&p, v)| OdotRow { p, nu: v.value, argmin_alpha: v.argmin_alpha, feasible: v.is_feasible() })
        .collect();

    let mut best: Option<(usize, usize)> = None;
    let mut i = 0;
    while i < rows.len() {
        if rows[i].feasible {
            let start = i;
            while i < rows.len() && rows[i].feasible {
                i += 1;
            }
            if best.map_or(true, |(s, e)| i - start > e - s) {
                best = Some((start, i));
            }
        } else {
            i += 1;
        }
    }
    let support = best.map(|(s, e)| (rows[s].p, rows[e - 1].p));
    let nu = best.and_then(|(s, e)| {
        let table: Vec<(f64, f64)> = rows[s..e].iter().map(|r| (r.p, r.nu)).collect();
        let supp = Support::bounded(rows[s].p, rows[e - 1].p).ok()?;
        PsiFunction::tabulated(table, supp).ok()
    });
    OdotResult { rows, support, h_norm_used: h_norm, nu }
}

/// Density of the image of Lebesgue measure on (0, 1) under `x ↦ x^m`.
pub fn power_density(m: f64) -> RealFunction {
    use crate::expr::{BinOp, Expr};
    let e = Expr::bin(
        BinOp::Mul,
        Expr::num(1.0 / m),
        Expr::bin(BinOp::Pow, Expr::var(), Expr::num(1.0 / m - 1.0)),
    );
    RealFunction::from_expr(e)
}

/// Natural generating function of [`power_density`].
pub fn power_density_psi(m: f64) -> Result<PsiFunction, PsiError> {
    let probes = [1.0, 1.1, 1.25, 1.5, 2.0, 3.0, 5.0, 9.0, 17.0];
    natural_psi(&power_density(m), &MeasureSpace::unit(), &probes)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerPsiM {
    pub p: f64,
    pub m: f64,
    /// The bracket `m^{−1/α}(α−1)^{(α−1)/α}(α−m)^{−1−1/α}·ψ(αp)` minimized
    /// over `α > min(1, m)` exactly as written.
    pub literal: OdotValue,
    /// `ψ ⊙ θ_m` with `θ_m` the natural function of the power density.
    pub generic: OdotValue,
}

/// Literal evaluation of the power-substitution bracket.
pub fn power_psi_m_literal(psi: &PsiFunction, m: f64, p: f64) -> OdotValue {
    if !(m > 0.0 && p >= 1.0 && p.is_finite()) {
        return OdotValue::infeasible();
    }
    let sp = psi.support();
    let ln_m = m.ln();
    let log_obj = |alpha: f64| {
        if !sp.contains_open(alpha * p) {
            return f64::INFINITY;
        }
        let (d1, dm) = (alpha - 1.0, alpha - m);
        // a zero or negative base makes the bracket undefined
        if !(d1 > 0.0 && dm > 0.0) {
            return f64::INFINITY;
        }
        let v = psi.eval(alpha * p);
        if !(v > 0.0) {
            return f64::INFINITY;
        }
        -ln_m / alpha + (d1 / alpha) * d1.ln() - (1.0 + 1.0 / alpha) * dm.ln() + v.ln()
    };
    let alpha0 = m.min(1.0);
    match minimize_alpha(alpha0, sp.lower() / p, sp.upper().value() / p, log_obj) {
        Some((v, alpha)) if v.is_finite() => OdotValue { value: v.exp(), argmin_alpha: Some(alpha) },
        _ => OdotValue::infeasible(),
    }
}

/// Both evaluations of the power-substitution function side by side.
pub fn power_psi_m(psi: &PsiFunction, m: f64, p: f64) -> Result<PowerPsiM, PsiError> {
    let theta = power_density_psi(m)?;
    Ok(PowerPsiM { p, m, literal: power_psi_m_literal(psi, m, p), generic: odot(psi, &theta, 1.0, p) })
}
