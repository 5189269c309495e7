//! Dilations of exp(-|x|) on R: the scaling identity, the fundamental
//! function of 2^(1/p), and the factorized bound.

use gls::composition::DEFAULT_TOL_SLACK;
use gls::quadrature::{lp_norm, DEFAULT_TOL};
use gls::showcase::linear_grid;
use gls::{fundamental_function, linear_bound_check, linear_substitute, Matrix, MeasureSpace, PsiFunction, RealFunction, Support};

fn main() {
    let real = MeasureSpace::real_line();
    let f = RealFunction::parse("exp(-abs(x))").unwrap();
    for (a, p) in [(0.5, 1.0), (2.0, 2.0), (4.0, 3.5)] {
        let v = linear_substitute(&f, &Matrix::scalar(a), &real, p).unwrap().as_f64();
        let base = lp_norm(&f, p, &real, DEFAULT_TOL).unwrap().value.as_f64();
        println!("a = {a}, p = {p}: |V f|_p |a|^(1/p) / |f|_p = {:.12}", v * f64::powf(a, 1.0 / p) / base);
    }

    let s = Support::unbounded(1.0).unwrap();
    let tau = PsiFunction::closed_form("2^(1/p)", s).unwrap();
    for delta in [0.25, 0.5, 2.0] {
        let phi = fundamental_function(&tau, delta, f64::INFINITY).unwrap();
        println!("phi(delta = {delta}) = {:.9} at p = {:.3}", phi.value, phi.argmax_p.p);
    }

    let psi = PsiFunction::closed_form("(2/p)^(1/p)", s).unwrap();
    let zeta = PsiFunction::closed_form("(4/p)^(1/p)", s).unwrap();
    let r = linear_bound_check(&f, &psi, &zeta, &tau, &Matrix::scalar(2.0), &real, &linear_grid(1.0, 6.0, 1.0), DEFAULT_TOL_SLACK).unwrap();
    print!("{}", r.report.to_csv());
    println!("||V f|| = {:.9} <= {:.9}: {}", r.substituted_norm, r.rhs, r.sup_pass);
}
