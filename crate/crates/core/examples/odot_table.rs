//! Tabulates ψ ⊙ θ for the square-root profile and a mildly growing θ, and
//! prints the result as CSV.

use gls::showcase::linear_grid;
use gls::{odot_tabulate, PsiFunction, Support};

fn main() {
    let psi = PsiFunction::closed_form("(2/(2-p))^(1/p)", Support::bounded(1.0, 2.0).unwrap()).unwrap();
    let theta = PsiFunction::closed_form("1 + 1/p", Support::unbounded(1.0).unwrap()).unwrap();
    let r = odot_tabulate(&psi, &theta, 1.0, &linear_grid(1.0, 2.0, 0.1));
    print!("{}", r.to_csv());
    println!("support: {:?}", r.support);
    if let Some(nu) = &r.nu {
        println!("{}", serde_json::to_string(&nu.to_json().unwrap()).unwrap());
    }
}
