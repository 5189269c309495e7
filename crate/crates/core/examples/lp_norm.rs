//! Parses a few expressions and prints their L_p norms on (0, 1) and R.

use gls::quadrature::{lp_norm, DEFAULT_TOL};
use gls::{LpValue, MeasureSpace, RealFunction};

fn main() {
    let unit = MeasureSpace::unit();
    for src in ["x^(-1/2)", "log(1/x)", "x^(-3/2)"] {
        let f = RealFunction::parse(src).expect("valid expression");
        for p in [1.0, 1.5, 1.9, 4.0] {
            match lp_norm(&f, p, &unit, DEFAULT_TOL) {
                Ok(r) => match r.value {
                    LpValue::Finite(v) => println!("|{src}|_{p} = {v:.12} (±{:.1e})", r.abs_error_estimate),
                    LpValue::Divergent => println!("|{src}|_{p} = inf"),
                },
                Err(e) => println!("|{src}|_{p}: {e}"),
            }
        }
    }
    let f = RealFunction::parse("exp(-abs(x))").unwrap();
    let v = lp_norm(&f, 3.0, &MeasureSpace::real_line(), DEFAULT_TOL).unwrap();
    println!("|exp(-|x|)|_3 on R = {:.12}, exact {:.12}", v.value.as_f64(), (2.0f64 / 3.0).powf(1.0 / 3.0));
}
