//! `|f|_p` by adaptive Gauss–Kronrod quadrature.
//!
//! Every one-dimensional domain is first mapped onto a finite interval
//! (the real line through `x = t / (1 - t²)`). The integrand `|f|^p w` is
//! then probed along geometric sequences towards both ends to estimate its
//! power-law exponent there. An exponent at or below `-1` means the
//! integral diverges; otherwise the interval is split at its midpoint and
//! each half is integrated after the substitution `x = a + L u^k`, with `k`
//! chosen from the exponent so the transformed integrand is bounded.
//!
//! Values are accumulated in log space before the final exponentiation so
//! that large `p` does not overflow.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::EvalError;
use crate::function::{Domain, MeasureSpace, RealFunction};

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_SUBDIVISIONS: usize = 100_000;

/// Exponents above which panels are graded towards interior spikes.
const LARGE_P: f64 = 256.0;

/// Half-width of the band around exponent `-1` where no verdict is issued.
pub const DIVERGENCE_BAND: f64 = 0.05;

/// Allowed RMS residual of the log-log regression before an exponent
/// estimate counts as unstable.
pub const EXPONENT_RESIDUAL_TOL: f64 = 0.05;

// Floating-point slack on the band edges, so that exponents which sit exactly
// on an edge (e.g. p = 1.9 for x^(-1/2)) classify the same way every run.
const BAND_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadratureError {
    #[error("adaptive quadrature did not reach tolerance within {subdivisions} subdivisions (error {error:e})")]
    MaxSubdivisionsExceeded { subdivisions: usize, error: f64 },
    #[error("integrand overflowed after rescaling")]
    Overflow,
    #[error("endpoint exponent {exponent} lies in the inconclusive band around -1")]
    Inconclusive { exponent: f64 },
    #[error("exponent estimate unstable: slope {slope}, residual {residual}")]
    EstimationUnstable { slope: f64, residual: f64 },
    #[error("function cannot be integrated over a {0}-dimensional domain here")]
    DimensionMismatch(usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

impl QuadratureError {
    /// Neither convergence nor divergence could be established.
    pub fn is_inconclusive(&self) -> bool {
        matches!(self, QuadratureError::MaxSubdivisionsExceeded { .. } | QuadratureError::Inconclusive { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    /// Relative tolerance on the reported norm.
    pub tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions { tol: DEFAULT_TOL, max_subdivisions: DEFAULT_MAX_SUBDIVISIONS }
    }
}

impl QuadOptions {
    pub fn with_tol(tol: f64) -> Self {
        QuadOptions { tol, ..Default::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LpValue {
    Finite(f64),
    Divergent,
}

impl LpValue {
    pub fn finite(self) -> Option<f64> {
        match self {
            LpValue::Finite(v) => Some(v),
            LpValue::Divergent => None,
        }
    }

    /// `+∞` for a divergent integral.
    pub fn as_f64(self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }

    pub fn is_divergent(self) -> bool {
        matches!(self, LpValue::Divergent)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LpResult {
    pub value: LpValue,
    /// Absolute error estimate of `value` (zero for divergent results).
    pub abs_error_estimate: f64,
    pub subdivisions: usize,
}

impl LpResult {
    fn divergent() -> Self {
        LpResult { value: LpValue::Divergent, abs_error_estimate: 0.0, subdivisions: 0 }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum LpValueRepr {
    Finite(f64),
    Marker(String),
}

#[derive(Serialize, Deserialize)]
struct LpResultRepr {
    value: LpValueRepr,
    err: f64,
}

impl Serialize for LpResult {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let value = match self.value {
            LpValue::Finite(v) => LpValueRepr::Finite(v),
            LpValue::Divergent => LpValueRepr::Marker("divergent".into()),
        };
        LpResultRepr { value, err: self.abs_error_estimate }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for LpResult {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let r = LpResultRepr::deserialize(d)?;
        let value = match r.value {
            LpValueRepr::Finite(v) => LpValue::Finite(v),
            LpValueRepr::Marker(m) if m == "divergent" => LpValue::Divergent,
            LpValueRepr::Marker(m) => return Err(serde::de::Error::custom(format!("unknown marker `{m}`"))),
        };
        Ok(LpResult { value, abs_error_estimate: r.err, subdivisions: 0 })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Endpoint {
    Left,
    Right,
}

// ---------------------------------------------------------------------------
// Gauss–Kronrod 10/21

#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

/// One 21-point Kronrod panel; returns `(integral, |K21 - G10|)`.
fn gk21<F>(g: &F, a: f64, b: f64) -> Result<(f64, f64), EvalError>
where
    F: Fn(f64) -> Result<f64, EvalError> + ?Sized,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = g(center)?;
    let mut kronrod = fc * WGK[10];
    let mut gauss = 0.0;
    for j in 0..10 {
        let dx = half * XGK[j];
        let s = g(center - dx)? + g(center + dx)?;
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    Ok((kronrod * half, ((kronrod - gauss) * half).abs()))
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    piece: usize,
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err
            .total_cmp(&other.err)
            .then_with(|| other.piece.cmp(&self.piece))
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Integral {
    pub value: f64,
    pub error: f64,
    pub subdivisions: usize,
}

/// Neumaier-compensated sum.
fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut c = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}

type Integrand<'a> = dyn Fn(f64) -> Result<f64, EvalError> + 'a;

/// Globally adaptive integration over several pieces at once; the worst
/// panel across all pieces is bisected until the summed error estimate is
/// below `max(tol_rel·|I|, tol_abs)`.
pub(crate) fn adaptive(
    pieces: &[(&Integrand<'_>, f64, f64)],
    tol_rel: f64,
    tol_abs: f64,
    max_subdivisions: usize,
) -> Result<Integral, QuadratureError> {
    let mut heap = BinaryHeap::new();
    let mut done: Vec<Panel> = Vec::new();
    let mut total = 0.0;
    let mut total_err = 0.0;
    for (i, &(g, a, b)) in pieces.iter().enumerate() {
        let (value, err) = gk21(g, a, b)?;
        total += value;
        total_err += err;
        heap.push(Panel { piece: i, a, b, value, err });
    }
    let mut subdivisions = 0usize;
    loop {
        if !(total.is_finite() && total_err.is_finite()) {
            return Err(QuadratureError::Overflow);
        }
        if total_err <= (tol_rel * total.abs()).max(tol_abs) {
            break;
        }
        let Some(worst) = heap.pop() else {
            return Err(QuadratureError::MaxSubdivisionsExceeded { subdivisions, error: total_err });
        };
        if subdivisions >= max_subdivisions {
            return Err(QuadratureError::MaxSubdivisionsExceeded { subdivisions, error: total_err });
        }
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) {
            // cannot split further in floating point
            done.push(worst);
            continue;
        }
        let g = pieces[worst.piece].0;
        let (lv, le) = gk21(g, worst.a, mid)?;
        let (rv, re) = gk21(g, mid, worst.b)?;
        total += lv + rv - worst.value;
        total_err += le + re - worst.err;
        subdivisions += 1;
        heap.push(Panel { piece: worst.piece, a: worst.a, b: mid, value: lv, err: le });
        heap.push(Panel { piece: worst.piece, a: mid, b: worst.b, value: rv, err: re });
        // the running totals drift; resynchronise now and then
        if subdivisions % 256 == 0 {
            total = heap.iter().chain(done.iter()).map(|p| p.value).sum();
            total_err = heap.iter().chain(done.iter()).map(|p| p.err).sum();
        }
    }
    let mut panels: Vec<Panel> = heap.into_vec();
    panels.extend(done);
    panels.sort_by(|x, y| x.piece.cmp(&y.piece).then(x.a.total_cmp(&y.a)));
    Ok(Integral {
        value: compensated_sum(panels.iter().map(|p| p.value)),
        error: compensated_sum(panels.iter().map(|p| p.err)),
        subdivisions,
    })
}

// ---------------------------------------------------------------------------
// Domain mapping

#[derive(Debug, Clone, Copy)]
enum Chart {
    /// `x = t` on `(a, b)`.
    Finite(f64, f64),
    /// `x = t / (1 - t²)` on `(-1, 1)`.
    Compact,
}

impl Chart {
    fn for_measure(m: &MeasureSpace) -> Result<Chart, QuadratureError> {
        match m.domain() {
            Domain::UnitInterval => Ok(Chart::Finite(0.0, 1.0)),
            Domain::RealLine => Ok(Chart::Compact),
            Domain::Box(axes) if axes.len() == 1 => Ok(Chart::Finite(axes[0].0, axes[0].1)),
            Domain::Box(axes) => Err(QuadratureError::DimensionMismatch(axes.len())),
        }
    }

    fn bounds(self) -> (f64, f64) {
        match self {
            Chart::Finite(a, b) => (a, b),
            Chart::Compact => (-1.0, 1.0),
        }
    }

    #[inline]
    fn x(self, t: f64) -> f64 {
        match self {
            Chart::Finite(..) => t,
            Chart::Compact => t / ((1.0 - t) * (1.0 + t)),
        }
    }

    #[inline]
    fn log_jacobian(self, t: f64) -> f64 {
        match self {
            Chart::Finite(..) => 0.0,
            Chart::Compact => {
                let s = (1.0 - t) * (1.0 + t);
                (1.0 + t * t).ln() - 2.0 * s.ln()
            }
        }
    }
}

/// `|f|^p w` pulled back to chart coordinates and split into
/// `p·ln|f|` and `ln w + ln J` parts.
struct LogIntegrand<'a> {
    f: &'a RealFunction,
    w: Option<&'a RealFunction>,
    chart: Chart,
}

impl<'a> LogIntegrand<'a> {
    fn new(f: &'a RealFunction, m: &'a MeasureSpace) -> Result<Self, QuadratureError> {
        Ok(LogIntegrand { f, w: m.density(), chart: Chart::for_measure(m)? })
    }

    #[inline]
    fn log_abs_f(&self, t: f64) -> Result<f64, EvalError> {
        Ok(self.f.eval(self.chart.x(t))?.abs().ln())
    }

    #[inline]
    fn log_weight(&self, t: f64) -> Result<f64, EvalError> {
        let mut lw = self.chart.log_jacobian(t);
        if let Some(w) = self.w {
            let x = self.chart.x(t);
            let v = w.eval(x)?;
            if v < 0.0 {
                return Err(EvalError { what: "negative density", arg: x });
            }
            lw += v.ln();
        }
        Ok(lw)
    }

    #[inline]
    fn log_value(&self, p: f64, t: f64) -> Result<f64, EvalError> {
        let lf = self.log_abs_f(t)?;
        if lf == f64::NEG_INFINITY {
            return Ok(f64::NEG_INFINITY);
        }
        Ok(p * lf + self.log_weight(t)?)
    }
}

/// Power-law profile of the integrand at one end of the chart interval:
/// `ln|f| ≈ sigma·ln d` and `ln(w·J) ≈ offset·ln d`, so the integrand
/// exponent for a given `p` is `p·sigma + offset`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct EndpointProfile {
    pub sigma: f64,
    pub offset: f64,
    pub residual: f64,
}

impl EndpointProfile {
    pub fn exponent(&self, p: f64) -> f64 {
        if self.sigma == f64::INFINITY || self.offset == f64::INFINITY {
            return f64::INFINITY;
        }
        p * self.sigma + self.offset
    }

    pub fn is_stable(&self) -> bool {
        self.residual <= EXPONENT_RESIDUAL_TOL
    }
}

/// Least-squares slope and RMS residual; `None` with fewer than 4 points.
fn fit_slope(pts: &[(f64, f64)]) -> Option<(f64, f64)> {
    let n = pts.len();
    if n < 4 {
        return None;
    }
    let nf = n as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let rss: f64 = pts.iter().map(|p| (p.1 - my - slope * (p.0 - mx)).powi(2)).sum();
    Some((slope, (rss / nf).sqrt()))
}

/// Fits a power law to `sample(d)` against `ln d`. Samples equal to `-∞`
/// are dropped; if fewer than four finite samples remain the quantity is
/// treated as vanishing faster than any power (`slope = +∞`).
fn fit_power_law(dists: &[f64], logs: &[f64]) -> (f64, f64) {
    let pts: Vec<(f64, f64)> = dists
        .iter()
        .zip(logs)
        .filter(|(_, l)| l.is_finite())
        .map(|(d, l)| (d.ln(), *l))
        .collect();
    match fit_slope(&pts) {
        Some(fit) => fit,
        None => (f64::INFINITY, 0.0),
    }
}

/// Geometric sample distances from one end of `(lo, hi)`, returned as the
/// chart points together with their exactly representable distances.
fn probe_points(lo: f64, hi: f64, end: Endpoint, deep: bool) -> Vec<(f64, f64)> {
    let half = 0.5 * (hi - lo);
    let range = if deep { 24..=80 } else { 10..=40 };
    let mut out: Vec<(f64, f64)> = Vec::new();
    for j in range {
        let d = half * (-(j as f64)).exp2();
        let (t, actual) = match end {
            Endpoint::Left => {
                let t = lo + d;
                (t, t - lo)
            }
            Endpoint::Right => {
                let t = hi - d;
                (t, hi - t)
            }
        };
        if actual <= 0.0 || out.last().is_some_and(|&(_, prev)| prev == actual) {
            continue;
        }
        out.push((t, actual));
    }
    out
}

fn profile_endpoint(li: &LogIntegrand<'_>, end: Endpoint, deep: bool) -> Result<EndpointProfile, EvalError> {
    let (lo, hi) = li.chart.bounds();
    let pts = probe_points(lo, hi, end, deep);
    let dists: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let mut lf = Vec::with_capacity(pts.len());
    let mut lw = Vec::with_capacity(pts.len());
    for &(t, _) in &pts {
        lf.push(li.log_abs_f(t)?);
        lw.push(li.log_weight(t)?);
    }
    let (sigma, rf) = fit_power_law(&dists, &lf);
    let (offset, rw) = fit_power_law(&dists, &lw);
    Ok(EndpointProfile { sigma, offset, residual: rf.max(rw) })
}

pub(crate) fn endpoint_profiles(f: &RealFunction, m: &MeasureSpace) -> Result<[EndpointProfile; 2], QuadratureError> {
    let li = LogIntegrand::new(f, m)?;
    Ok([profile_endpoint(&li, Endpoint::Left, false)?, profile_endpoint(&li, Endpoint::Right, false)?])
}

/// Estimated power-law exponent of `|f|` at one end of the domain of `m`.
///
/// At a finite endpoint `a` this is `s` in `|f(x)| ~ c |x - a|^s`; at an
/// infinite end it is `s` in `|f(x)| ~ c |x|^s`.
pub fn estimate_exponent(f: &RealFunction, endpoint: Endpoint, m: &MeasureSpace) -> Result<f64, QuadratureError> {
    let (lo, hi) = m.bounds_1d().ok_or(QuadratureError::DimensionMismatch(m.dim()))?;
    let end_value = match endpoint {
        Endpoint::Left => lo,
        Endpoint::Right => hi,
    };
    let mut dists = Vec::new();
    let mut logs = Vec::new();
    if end_value.is_finite() {
        let other = match endpoint {
            Endpoint::Left => hi.min(lo + 2.0),
            Endpoint::Right => lo.max(hi - 2.0),
        };
        let (a, b) = match endpoint {
            Endpoint::Left => (lo, other),
            Endpoint::Right => (other, hi),
        };
        for (x, d) in probe_points(a, b, endpoint, false) {
            dists.push(d);
            logs.push(f.eval(x)?.abs().ln());
        }
    } else {
        let sign = if endpoint == Endpoint::Left { -1.0 } else { 1.0 };
        for j in 10..=40 {
            let r = (j as f64).exp2();
            dists.push(r);
            logs.push(f.eval(sign * r)?.abs().ln());
        }
    }
    let (slope, residual) = fit_power_law(&dists, &logs);
    if slope.is_finite() && residual > EXPONENT_RESIDUAL_TOL {
        return Err(QuadratureError::EstimationUnstable { slope, residual });
    }
    Ok(slope)
}

/// Copy of `f` carrying endpoint exponents estimated on the unit interval.
pub fn with_estimated_hints(f: &RealFunction) -> Result<RealFunction, QuadratureError> {
    let m = MeasureSpace::unit();
    let left = estimate_exponent(f, Endpoint::Left, &m)?;
    let right = estimate_exponent(f, Endpoint::Right, &m)?;
    Ok(f.clone().with_hints(crate::function::SingularityHints { interval: (0.0, 1.0), left, right }))
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum EndClass {
    Regular,
    Divergent,
    Band,
}

fn classify(e: f64) -> EndClass {
    if e <= -1.0 - DIVERGENCE_BAND + BAND_SLACK {
        EndClass::Divergent
    } else if e >= -1.0 + DIVERGENCE_BAND - BAND_SLACK {
        EndClass::Regular
    } else {
        EndClass::Band
    }
}

/// Substitution power for an integrand exponent `e > -1` so that the
/// transformed integrand behaves like `u^r` with `r >= 1`.
fn substitution_power(e: f64) -> i32 {
    if e >= -0.01 {
        1
    } else {
        ((2.0 / (e + 1.0)).ceil() as i32).clamp(1, 400)
    }
}

/// Resolves the exponent at one end, refining once when it lands in the band.
fn end_exponent(li: &LogIntegrand<'_>, p: f64, end: Endpoint, hint: Option<f64>) -> Result<f64, QuadratureError> {
    if let Some(s) = hint {
        let e = p * s;
        return match classify(e) {
            EndClass::Band => Err(QuadratureError::Inconclusive { exponent: e }),
            _ => Ok(e),
        };
    }
    let prof = profile_endpoint(li, end, false)?;
    let mut e = prof.exponent(p);
    if !prof.is_stable() {
        if e < -0.5 {
            return Err(QuadratureError::EstimationUnstable { slope: e, residual: prof.residual });
        }
        return Ok(e.min(0.0));
    }
    if classify(e) == EndClass::Band {
        let deep = profile_endpoint(li, end, true)?;
        e = deep.exponent(p);
        if classify(e) == EndClass::Band || !deep.is_stable() {
            return Err(QuadratureError::Inconclusive { exponent: e });
        }
    }
    Ok(e)
}

/// `|f|_p = (∫ |f|^p dμ)^{1/p}` with the default options.
pub fn lp_norm(f: &RealFunction, p: f64, m: &MeasureSpace, tol: f64) -> Result<LpResult, QuadratureError> {
    lp_norm_with(f, p, m, &QuadOptions::with_tol(tol))
}

pub fn lp_norm_with(f: &RealFunction, p: f64, m: &MeasureSpace, opts: &QuadOptions) -> Result<LpResult, QuadratureError> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(QuadratureError::InvalidArgument(format!("exponent p = {p} must be finite and >= 1")));
    }
    if !(opts.tol > 0.0) {
        return Err(QuadratureError::InvalidArgument(format!("tolerance {} must be positive", opts.tol)));
    }
    let li = LogIntegrand::new(f, m)?;
    let (lo, hi) = li.chart.bounds();

    // hints only describe |f| itself, so they apply to plain Lebesgue
    // measure on the interval they were estimated for
    let hint = |end: Endpoint| -> Option<f64> {
        let h = f.hints()?;
        let plain = m.density().is_none() && matches!(li.chart, Chart::Finite(a, b) if (a, b) == h.interval);
        plain.then_some(match end {
            Endpoint::Left => h.left,
            Endpoint::Right => h.right,
        })
    };
    let e_left = end_exponent(&li, p, Endpoint::Left, hint(Endpoint::Left))?;
    let e_right = end_exponent(&li, p, Endpoint::Right, hint(Endpoint::Right))?;
    if classify(e_left) == EndClass::Divergent || classify(e_right) == EndClass::Divergent {
        return Ok(LpResult::divergent());
    }

    // scale so the largest interior sample maps to 1
    let mut shift = f64::NEG_INFINITY;
    for i in 0..16 {
        let t = lo + (hi - lo) * (i as f64 + 0.5) / 16.0;
        let v = li.log_value(p, t)?;
        if v.is_finite() {
            shift = shift.max(v);
        }
    }
    if shift == f64::NEG_INFINITY {
        shift = 0.0;
    }

    let len = 0.5 * (hi - lo);
    let k_left = substitution_power(e_left);
    let k_right = substitution_power(e_right);
    // a sharp peak missed by the shift samples overflows; retry once with
    // the largest log-value the integrator actually met
    let peak = std::cell::Cell::new(f64::NEG_INFINITY);
    let mut attempt = 0;
    let integral = loop {
        match integrate_halves(&li, p, (lo, hi, len), (k_left, k_right), shift, &peak, opts) {
            Err(QuadratureError::Overflow) if peak.get() > shift && attempt < 4 => {
                shift = peak.get();
                attempt += 1;
            }
            r => break r?,
        }
    };
    if integral.value <= 0.0 {
        return Ok(LpResult { value: LpValue::Finite(0.0), abs_error_estimate: 0.0, subdivisions: integral.subdivisions });
    }
    let value = ((shift + integral.value.ln()) / p).exp();
    let rel = integral.error / integral.value;
    Ok(LpResult {
        value: LpValue::Finite(value),
        abs_error_estimate: value * rel / p,
        subdivisions: integral.subdivisions,
    })
}

fn integrate_halves(
    li: &LogIntegrand<'_>,
    p: f64,
    (lo, hi, len): (f64, f64, f64),
    (k_left, k_right): (i32, i32),
    shift: f64,
    peak: &std::cell::Cell<f64>,
    opts: &QuadOptions,
) -> Result<Integral, QuadratureError> {
    let half = |u: f64, k: i32, end: Endpoint| -> Result<f64, EvalError> {
        let d = len * u.powi(k);
        let t = match end {
            Endpoint::Left => lo + d,
            Endpoint::Right => hi - d,
        };
        if t <= lo || t >= hi {
            return Ok(0.0);
        }
        let lv = li.log_value(p, t)?;
        if lv == f64::NEG_INFINITY {
            return Ok(0.0);
        }
        let ljac = (k as f64 * len).ln() + (k - 1) as f64 * u.ln();
        if lv + ljac > peak.get() {
            peak.set(lv + ljac);
        }
        Ok((lv + ljac - shift).exp())
    };
    let left = |u: f64| half(u, k_left, Endpoint::Left);
    let right = |u: f64| half(u, k_right, Endpoint::Right);
    // for large p the integrand concentrates into a spike of width ~ 1/p;
    // grade the panels towards the split point so a spike there is seen
    let mut cuts = vec![0.0, 1.0];
    if p > LARGE_P {
        cuts = vec![0.0];
        let mut j = 1;
        while j <= 48 && len * (-(j as f64)).exp2() > 4.0 * f64::EPSILON * (1.0 + lo.abs().max(hi.abs())) {
            cuts.push(1.0 - (-(j as f64)).exp2());
            j += 1;
        }
        cuts.push(1.0);
    }
    let mut pieces: Vec<(&Integrand<'_>, f64, f64)> = Vec::with_capacity(2 * cuts.len());
    for w in cuts.windows(2) {
        pieces.push((&left, w[0], w[1]));
        pieces.push((&right, w[0], w[1]));
    }
    // relative error of the integral is p times that of the norm
    adaptive(&pieces, (opts.tol * p).min(0.1), f64::MIN_POSITIVE, opts.max_subdivisions)
}

/// `∫ f dμ` for a nonnegative `f`, reusing the singular-endpoint machinery.
pub fn integrate_nonnegative(f: &RealFunction, m: &MeasureSpace, tol: f64) -> Result<LpValue, QuadratureError> {
    Ok(lp_norm(f, 1.0, m, tol)?.value)
}

// ---------------------------------------------------------------------------
// Several variables

/// One axis of a product domain for [`lp_norm_nd`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Axis {
    Finite(f64, f64),
    Real,
}

impl Axis {
    fn chart(self) -> Chart {
        match self {
            Axis::Finite(a, b) => Chart::Finite(a, b),
            Axis::Real => Chart::Compact,
        }
    }
}

pub type MultiFunction<'a> = dyn Fn(&[f64]) -> Result<f64, EvalError> + Sync + 'a;

/// `|f|_p` over a product of up to three axes by iterated adaptive
/// quadrature. Intended for smooth integrands without endpoint
/// singularities.
pub fn lp_norm_nd(f: &MultiFunction<'_>, p: f64, axes: &[Axis], tol: f64) -> Result<LpResult, QuadratureError> {
    if axes.is_empty() || axes.len() > 3 {
        return Err(QuadratureError::DimensionMismatch(axes.len()));
    }
    if !(p >= 1.0 && p.is_finite()) {
        return Err(QuadratureError::InvalidArgument(format!("exponent p = {p} must be finite and >= 1")));
    }
    let mut point = [0.0f64; 3];
    let opts = QuadOptions::with_tol(tol);
    let integral = nested(f, p, axes, 0, &mut point, tol * p, &opts)?;
    if integral.value <= 0.0 {
        return Ok(LpResult { value: LpValue::Finite(0.0), abs_error_estimate: 0.0, subdivisions: integral.subdivisions });
    }
    let value = integral.value.powf(1.0 / p);
    Ok(LpResult {
        value: LpValue::Finite(value),
        abs_error_estimate: value * integral.error / integral.value / p,
        subdivisions: integral.subdivisions,
    })
}

fn nested(
    f: &MultiFunction<'_>,
    p: f64,
    axes: &[Axis],
    depth: usize,
    point: &mut [f64; 3],
    tol_rel: f64,
    opts: &QuadOptions,
) -> Result<Integral, QuadratureError> {
    let chart = axes[depth].chart();
    let (lo, hi) = chart.bounds();
    let prefix = *point;
    let inner_err = std::cell::Cell::new(None::<QuadratureError>);
    let g = |t: f64| -> Result<f64, EvalError> {
        let jac = chart.log_jacobian(t).exp();
        if !jac.is_finite() {
            return Ok(0.0);
        }
        let mut pt = prefix;
        pt[depth] = chart.x(t);
        let v = if depth + 1 == axes.len() {
            f(&pt[..axes.len()])?.abs().powf(p)
        } else {
            match nested(f, p, axes, depth + 1, &mut pt, tol_rel * 0.1, opts) {
                Ok(i) => i.value,
                Err(QuadratureError::Eval(e)) => return Err(e),
                Err(e) => {
                    inner_err.set(Some(e));
                    0.0
                }
            }
        };
        Ok(v * jac)
    };
    // split at the origin of the chart so kinks at 0 fall on a panel edge
    let mid = 0.5 * (lo + hi);
    let pieces: [(&Integrand<'_>, f64, f64); 2] = [(&g, lo, mid), (&g, mid, hi)];
    let out = adaptive(&pieces, tol_rel, f64::MIN_POSITIVE, opts.max_subdivisions)?;
    if let Some(e) = inner_err.take() {
        return Err(e);
    }
    Ok(out)
}
