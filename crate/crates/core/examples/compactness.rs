//! Three compactness checks: γ = ν, a γ that outgrows ν, and a bounded γ.

use gls::{check_compactness, CompactnessOptions, PsiFunction, Support};

fn main() {
    let s = Support::bounded(1.0, 2.0).unwrap();
    let nu = PsiFunction::closed_form("(2/(2-p))^(1/p)", s).unwrap();
    let short = Support::bounded(1.0, 1.5).unwrap();
    let cases = [
        ("gamma = nu", nu.clone(), nu.clone()),
        ("gamma = nu / (2 - p)", nu.clone(), PsiFunction::closed_form("(2/(2-p))^(1/p) / (2 - p)", s).unwrap()),
        ("gamma = 1", PsiFunction::closed_form("(2/(2-p))^(1/p)", short).unwrap(), PsiFunction::constant(1.0, short)),
    ];
    for (label, nu, gamma) in cases {
        let r = check_compactness(&nu, &gamma, &CompactnessOptions::default()).unwrap();
        println!(
            "{label}: {:?} (sup ratio {:.4}, limit {:?}, evidence k = {}, gamma bounded: {})",
            r.verdict, r.sup_ratio, r.limit_estimate, r.evidence_k, r.gamma_bounded
        );
    }
}
