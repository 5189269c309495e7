//! Shared formatting for JSON and CSV reports.

use serde::Serializer;

/// Numbers as JSON numbers; infinities and NaN as the strings `"inf"`,
/// `"-inf"` and `"nan"`.
pub fn ser_extended<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_str(&fmt_num(*v))
    }
}

/// The same mapping as [`ser_extended`], as a JSON value.
pub fn extended(v: f64) -> serde_json::Value {
    if v.is_finite() {
        serde_json::Value::from(v)
    } else {
        serde_json::Value::from(fmt_num(v))
    }
}

/// Shortest round-trip decimal form, switching to exponent notation for
/// very small or very large magnitudes; `inf`, `-inf` and `nan` otherwise.
pub fn fmt_num(v: f64) -> String {
    let a = v.abs();
    if v.is_nan() {
        "nan".into()
    } else if a.is_finite() && a != 0.0 && !(1e-5..1e16).contains(&a) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formatting() {
        assert_eq!(fmt_num(0.1), "0.1");
        assert_eq!(fmt_num(f64::INFINITY), "inf");
        assert_eq!(fmt_num(f64::NEG_INFINITY), "-inf");
        assert_eq!(fmt_num(2.0), "2");
        assert_eq!(fmt_num(-5.5e-11), "-5.5e-11");
        for v in [1.234e-300, 6.02e23, -0.1 + 0.2] {
            assert_eq!(fmt_num(v).parse::<f64>().unwrap(), v);
        }
    }
}
