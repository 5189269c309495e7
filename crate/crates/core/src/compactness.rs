//! Sufficient conditions for compactness of a composition operator acting
//! from `Gψ` into `Gγ`, given the ⊙-convolution `ν`.

use serde::Serialize;
use thiserror::Error;

use crate::function::MeasureSpace;
use crate::psi::{PsiFunction, Support, Upper};
use crate::report::{fmt_num, ser_extended};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CompactnessError {
    #[error("supports of ν {nu} and γ {gamma} do not overlap")]
    DisjointSupports { nu: String, gamma: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CompactnessVerdict {
    Compact,
    NotConcluded,
    #[serde(rename = "Fails_5_1")]
    FailsBoundedRatio,
}

#[derive(Debug, Clone, Serialize)]
pub struct CompactnessOptions {
    /// Largest ratio `ν/γ` accepted as "tends to zero".
    pub limit_tol: f64,
    /// Bound on `γ / min γ` below which γ counts as bounded.
    pub boundedness_threshold: f64,
    /// Minimum decade `k` of `γ / min γ ≥ 10^k` needed before the limit
    /// estimate is trusted.
    pub min_evidence: u32,
    #[serde(skip)]
    pub measure: MeasureSpace,
}

impl Default for CompactnessOptions {
    fn default() -> Self {
        CompactnessOptions { limit_tol: 1e-2, boundedness_threshold: 1e8, min_evidence: 4, measure: MeasureSpace::unit() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompactnessRow {
    pub p: f64,
    #[serde(serialize_with = "ser_extended")]
    pub nu: f64,
    #[serde(serialize_with = "ser_extended")]
    pub gamma: f64,
    #[serde(serialize_with = "ser_extended")]
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompactnessReport {
    #[serde(serialize_with = "ser_extended")]
    pub sup_ratio: f64,
    /// `None` when γ never grows past ten times its minimum.
    pub limit_estimate: Option<f64>,
    /// Largest `k` with `γ ≥ 10^k · min γ` reached near an endpoint.
    pub evidence_k: u32,
    pub gamma_bounded: bool,
    pub verdict: CompactnessVerdict,
    pub common_support: Support,
    pub diagnostics: Vec<CompactnessRow>,
}

impl CompactnessReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("p,nu,gamma,ratio\n");
        for r in &self.diagnostics {
            out.push_str(&format!("{},{},{},{}\n", fmt_num(r.p), fmt_num(r.nu), fmt_num(r.gamma), fmt_num(r.ratio)));
        }
        out
    }
}

fn ratio(nu: f64, gamma: f64) -> f64 {
    if gamma == f64::INFINITY && nu.is_finite() {
        0.0
    } else {
        nu / gamma
    }
}

/// Probe sequences running into each end of the support, innermost last.
fn endpoint_sequences(s: &Support) -> Vec<Vec<f64>> {
    let a = s.lower();
    match s.upper() {
        Upper::Finite(b) => {
            let half = 0.5 * (b - a);
            let toward = |end: f64, sign: f64| -> Vec<f64> {
                (1..=42).map(|j| end + sign * half * (-(j as f64)).exp2()).filter(|&p| s.contains_open(p)).collect()
            };
            vec![toward(a, 1.0), toward(b, -1.0)]
        }
        Upper::Infinite => {
            let half = 0.5;
            let lower: Vec<f64> = (1..=42).map(|j| a + half * (-(j as f64)).exp2()).filter(|&p| s.contains_open(p)).collect();
            vec![lower, (0..=42).map(|k| a + (k as f64).exp2()).collect()]
        }
    }
}

/// Still growing at the end of the probe sequence: positive increments that
/// are not decaying geometrically.
fn tail_increasing(values: &[f64]) -> bool {
    if values.iter().any(|v| !v.is_finite()) {
        return true;
    }
    let n = values.len();
    if n < 3 {
        return false;
    }
    let d1 = values[n - 2] - values[n - 3];
    let d2 = values[n - 1] - values[n - 2];
    d2 > 1e-12 * values[n - 1].abs() && d1 > 0.0 && d2 >= 0.9 * d1
}

/// Evaluates both conditions of the criterion: the ratio `ν/γ` is bounded on
/// the common support, and it vanishes where `γ` grows without bound (not
/// required when γ is bounded).
pub fn check_compactness(nu: &PsiFunction, gamma: &PsiFunction, opts: &CompactnessOptions) -> Result<CompactnessReport, CompactnessError> {
    assert!(opts.measure.is_diffuse(), "the criterion needs a diffuse measure");
    let common = nu.support().intersect(gamma.support()).ok_or_else(|| CompactnessError::DisjointSupports {
        nu: nu.support().to_string(),
        gamma: gamma.support().to_string(),
    })?;

    let diagnostics: Vec<CompactnessRow> = common
        .canonical_grid()
        .into_iter()
        .map(|p| {
            let (n, g) = (nu.eval(p), gamma.eval(p));
            CompactnessRow { p, nu: n, gamma: g, ratio: ratio(n, g) }
        })
        .collect();
    let sup_ratio = diagnostics.iter().map(|r| r.ratio).fold(0.0f64, |acc, v| if v.is_nan() { f64::INFINITY } else { acc.max(v) });
    let gamma_ref = diagnostics.iter().map(|r| r.gamma).filter(|g| *g > 0.0).fold(f64::INFINITY, f64::min);

    let mut gamma_bounded = gamma_ref.is_finite();
    let mut evidence_k = 0u32;
    let mut limit_estimate: Option<f64> = None;
    for seq in endpoint_sequences(&common) {
        let gammas: Vec<f64> = seq.iter().map(|&p| gamma.eval(p)).collect();
        let max = gammas.iter().copied().fold(0.0f64, |acc, v| if v.is_nan() { f64::INFINITY } else { acc.max(v) });
        if !(max < opts.boundedness_threshold * gamma_ref) || tail_increasing(&gammas) {
            gamma_bounded = false;
        }
        // ratio where γ first passes the highest decade reached
        let mut reached: Option<(u32, f64)> = None;
        for k in 1..=6u32 {
            let level = gamma_ref * 10f64.powi(k as i32);
            if let Some(i) = gammas.iter().position(|&g| g >= level) {
                reached = Some((k, ratio(nu.eval(seq[i]), gammas[i])));
            }
        }
        if let Some((k, r)) = reached {
            evidence_k = evidence_k.max(k);
            limit_estimate = Some(limit_estimate.map_or(r, |l: f64| l.max(r)));
        }
    }

    let verdict = if !sup_ratio.is_finite() {
        CompactnessVerdict::FailsBoundedRatio
    } else if gamma_bounded || (evidence_k >= opts.min_evidence && limit_estimate.is_some_and(|l| l <= opts.limit_tol)) {
        CompactnessVerdict::Compact
    } else {
        CompactnessVerdict::NotConcluded
    };
    Ok(CompactnessReport { sup_ratio, limit_estimate, evidence_k, gamma_bounded, verdict, common_support: common, diagnostics })
}
