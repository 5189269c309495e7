//! Builds the natural generating function of x^(-1/4) and measures two
//! functions in the resulting space.

use gls::{gls_norm, natural_psi, GlsOptions, MeasureSpace, RealFunction};

fn main() {
    let unit = MeasureSpace::unit();
    let f = RealFunction::parse("x^(-1/4)").unwrap();
    let psi = natural_psi(&f, &unit, &[1.0, 2.0]).unwrap();
    println!("support of psi: {}", psi.support());
    for p in [1.0, 2.0, 3.0, 3.9] {
        println!("psi({p}) = {:.10}", psi.eval(p));
    }
    for src in ["x^(-1/4)", "3*x^(-1/4)", "x^(-1/8)", "log(1/x)"] {
        let g = RealFunction::parse(src).unwrap();
        let r = gls_norm(&g, &psi, &unit, &GlsOptions::default()).unwrap();
        println!("||{src}|| = {:?} at p = {:.6} ({} nodes skipped)", r.value, r.argmax_p.p, r.skipped.len());
    }
}
