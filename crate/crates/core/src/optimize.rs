//! One-dimensional golden-section search on a bracket.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Maximizes `g` on `[lo, hi]` by golden-section search, returning the best
/// `(x, g(x))` seen. Non-finite or NaN values count as `-∞`. Stops after
/// `max_iter` steps or once the bracket is narrower than `xtol`.
pub(crate) fn golden_max(mut lo: f64, mut hi: f64, xtol: f64, max_iter: usize, mut g: impl FnMut(f64) -> f64) -> (f64, f64) {
    let mut eval = |x: f64| {
        let v = g(x);
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    };
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = eval(x1);
    let mut f2 = eval(x2);
    let mut best = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
    for _ in 0..max_iter {
        if hi - lo <= xtol {
            break;
        }
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = eval(x1);
            if f1 > best.1 {
                best = (x1, f1);
            }
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = eval(x2);
            if f2 > best.1 {
                best = (x2, f2);
            }
        }
    }
    best
}

/// Minimizing counterpart of [`golden_max`]; NaN counts as `+∞`.
pub(crate) fn golden_min(lo: f64, hi: f64, xtol: f64, max_iter: usize, mut g: impl FnMut(f64) -> f64) -> (f64, f64) {
    let (x, v) = golden_max(lo, hi, xtol, max_iter, |x| {
        let v = g(x);
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            -v
        }
    });
    (x, -v)
}
