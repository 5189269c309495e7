//! Derives the image density of x ↦ x^2 on (0, 1) and certifies the bound
//! for f(x) = x^(-1/4) with natural generating functions.

use gls::composition::DEFAULT_TOL_SLACK;
use gls::showcase::linear_grid;
use gls::{check_pushforward, natural_psi, pushforward_density, verify_bound, MeasureSpace, RealFunction};

fn main() {
    let unit = MeasureSpace::unit();
    let c = pushforward_density(&RealFunction::power(2.0), &unit).unwrap();
    let h = c.density().unwrap().clone();
    println!("h = {h:?}");
    let err = check_pushforward(&c, &[(0.0, 0.25), (0.1, 0.9), (0.5, 1.0)], 1e-10).unwrap();
    println!("pushforward check: max error {err:.2e}");

    let f = RealFunction::parse("x^(-1/4)").unwrap();
    let psi = natural_psi(&f, &unit, &[1.0, 2.0]).unwrap();
    let theta = natural_psi(&h, &unit, &[1.0, 1.5]).unwrap();
    let (report, ctx) = verify_bound(&f, &psi, &c, &theta, &unit, &linear_grid(1.0, 1.8, 0.1), DEFAULT_TOL_SLACK).unwrap();
    print!("{}", report.to_csv());
    println!("||f|| = {}, ||h|| = {}, overall pass: {}", ctx.f_norm, ctx.h_norm, report.overall_pass);
}
