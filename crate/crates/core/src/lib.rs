//! Grand Lebesgue space norms, the ⊙-convolution of generating functions,
//! and numerical certificates for composition operators between two such
//! spaces.

pub mod compactness;
pub mod composition;
pub mod expr;
pub mod function;
pub mod gls_norm;
pub mod odot;
mod optimize;
pub mod psi;
pub mod quadrature;
pub mod report;
pub mod showcase;

pub use compactness::{check_compactness, CompactnessError, CompactnessOptions, CompactnessReport, CompactnessVerdict};
pub use composition::{
    check_pushforward, compose, fundamental_function, holder_split, linear_bound_check, linear_substitute, linear_substitute_nd,
    pushforward_density, verify_bound, BoundReport, BoundRow, CompositionError, CompositionMap, FundamentalValue, Matrix, Verdict,
};
pub use expr::{EvalError, Expr, ParseError};
pub use function::{Domain, MeasureSpace, RealFunction};
pub use gls_norm::{gls_norm, ArgMax, Boundary, GlsError, GlsNormReport, GlsOptions, NormValue};
pub use odot::{odot, odot_tabulate, power_psi_m, OdotResult, OdotRow, OdotValue, PowerPsiM};
pub use psi::{natural_psi, PsiError, PsiFunction, PsiKind, PsiValidationReport, Support, Upper};
pub use quadrature::{estimate_exponent, lp_norm, Endpoint, LpResult, LpValue, QuadratureError};
