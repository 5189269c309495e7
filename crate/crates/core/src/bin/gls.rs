use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use gls::composition::DEFAULT_TOL_SLACK;
use gls::psi::natural_psi_with;
use gls::quadrature::{lp_norm, LpValue, QuadratureError};
use gls::report::fmt_num;
use gls::showcase::{certify_case, linear_grid, power_corpus, run_example, ShowcaseError};
use gls::{
    check_compactness, gls_norm, odot_tabulate, pushforward_density, verify_bound, CompactnessOptions, CompositionError, CompositionMap,
    Domain, GlsError, GlsOptions, MeasureSpace, ParseError, PsiError, PsiFunction, RealFunction, Support, Upper,
};

/// Grand Lebesgue space norms, ⊙-convolutions and composition-operator
/// certificates.
#[derive(Parser)]
#[command(name = "gls", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Quadrature tolerance.
    #[arg(long, global = true, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Cmd {
    /// |f|_p at one exponent, ||f|| for a given ψ, or the natural ψ of f.
    Norm(NormArgs),
    /// Runs one of the four worked examples.
    Example {
        #[arg(value_parser = clap::value_parser!(u8).range(1..=4))]
        n: u8,
    },
    /// Tabulates ν = ψ ⊙ θ on a p-grid.
    Odot(OdotArgs),
    /// Certifies |f∘ξ|_p ≤ ν(p)·||f|| on a p-grid, or over a random corpus.
    Verify(VerifyArgs),
    /// Checks the compactness conditions for ν against γ.
    Compact(CompactArgs),
}

#[derive(Args)]
struct NormArgs {
    #[arg(long)]
    f: String,
    #[arg(long, default_value = "unit")]
    domain: String,
    /// Density of the measure with respect to Lebesgue measure.
    #[arg(long)]
    density: Option<String>,
    #[arg(long, conflicts_with_all = ["psi", "natural"])]
    p: Option<f64>,
    #[arg(long, requires = "psi_supp", conflicts_with = "natural")]
    psi: Option<String>,
    #[arg(long, num_args = 2, value_names = ["A", "B"])]
    psi_supp: Option<Vec<String>>,
    #[arg(long)]
    natural: bool,
}

#[derive(Args)]
struct OdotArgs {
    #[arg(long)]
    psi: String,
    #[arg(long, num_args = 2, value_names = ["A", "B"])]
    psi_supp: Vec<String>,
    #[arg(long)]
    theta: String,
    #[arg(long, num_args = 2, value_names = ["A", "B"])]
    theta_supp: Vec<String>,
    #[arg(long, default_value_t = 1.0)]
    h_norm: f64,
    #[arg(long)]
    p_grid: String,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, required_unless_present = "corpus")]
    f: Option<String>,
    #[arg(long, required_unless_present = "corpus")]
    xi: Option<String>,
    /// Density of the image measure; derived from ξ when omitted.
    #[arg(long)]
    h: Option<String>,
    #[arg(long, default_value = "unit")]
    domain: String,
    /// ψ as an expression in p; the natural function of f when omitted.
    #[arg(long, requires = "psi_supp")]
    psi: Option<String>,
    #[arg(long, num_args = 2, value_names = ["A", "B"])]
    psi_supp: Option<Vec<String>>,
    /// θ as an expression in p; the natural function of h when omitted.
    #[arg(long, requires = "theta_supp")]
    theta: Option<String>,
    #[arg(long, num_args = 2, value_names = ["A", "B"])]
    theta_supp: Option<Vec<String>>,
    #[arg(long, required_unless_present = "corpus")]
    p_grid: Option<String>,
    #[arg(long, default_value_t = DEFAULT_TOL_SLACK)]
    tol_slack: f64,
    /// Runs N seeded power-family cases instead of a single configuration.
    #[arg(long, conflicts_with_all = ["f", "xi", "h", "psi", "theta", "p_grid"])]
    corpus: Option<usize>,
}

#[derive(Args)]
struct CompactArgs {
    #[arg(long, requires = "nu_supp", conflicts_with = "nu_from")]
    nu: Option<String>,
    #[arg(long, num_args = 2, value_names = ["A", "B"])]
    nu_supp: Option<Vec<String>>,
    /// JSON from `odot --format json`, or a ψ-function JSON.
    #[arg(long, required_unless_present = "nu")]
    nu_from: Option<PathBuf>,
    #[arg(long)]
    gamma: String,
    #[arg(long, num_args = 2, value_names = ["A", "B"])]
    gamma_supp: Vec<String>,
    #[arg(long, default_value_t = 1e-2)]
    limit_tol: f64,
}

enum Failure {
    Validation(String),
    Divergent(String),
    Other(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Validation(_) => 2,
            Failure::Divergent(_) => 3,
            Failure::Other(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Validation(m) | Failure::Divergent(m) | Failure::Other(m) => m,
        }
    }
}

impl From<ParseError> for Failure {
    fn from(e: ParseError) -> Self {
        Failure::Validation(e.to_string())
    }
}

impl From<PsiError> for Failure {
    fn from(e: PsiError) -> Self {
        match e {
            PsiError::InvalidSupport { .. } | PsiError::NonPositiveScale(_) | PsiError::InvalidTable(_) | PsiError::Parse(_) => {
                Failure::Validation(e.to_string())
            }
            PsiError::NowhereIntegrable => Failure::Divergent(e.to_string()),
            _ => Failure::Other(e.to_string()),
        }
    }
}

impl From<QuadratureError> for Failure {
    fn from(e: QuadratureError) -> Self {
        match e {
            QuadratureError::InvalidArgument(_) | QuadratureError::DimensionMismatch(_) => Failure::Validation(e.to_string()),
            _ => Failure::Other(e.to_string()),
        }
    }
}

impl From<GlsError> for Failure {
    fn from(e: GlsError) -> Self {
        match e {
            GlsError::Quadrature(q) => q.into(),
            other => Failure::Other(other.to_string()),
        }
    }
}

impl From<CompositionError> for Failure {
    fn from(e: CompositionError) -> Self {
        match e {
            CompositionError::InfiniteNorm { .. } | CompositionError::EmptyNuSupport => Failure::Divergent(e.to_string()),
            CompositionError::RangeMismatch { .. }
            | CompositionError::NotMonotone { .. }
            | CompositionError::UnsupportedSpace(_)
            | CompositionError::SingularMatrix
            | CompositionError::DimensionMismatch { .. }
            | CompositionError::FactorizationMismatch { .. }
            | CompositionError::InvalidArgument(_) => Failure::Validation(e.to_string()),
            CompositionError::Psi(p) => p.into(),
            CompositionError::Gls(g) => g.into(),
            CompositionError::Quadrature(q) => q.into(),
            other => Failure::Other(other.to_string()),
        }
    }
}

impl From<ShowcaseError> for Failure {
    fn from(e: ShowcaseError) -> Self {
        match e {
            ShowcaseError::UnknownExample(_) => Failure::Validation(e.to_string()),
            ShowcaseError::Composition(c) => c.into(),
            ShowcaseError::Psi(p) => p.into(),
            ShowcaseError::Gls(g) => g.into(),
            ShowcaseError::Quadrature(q) => q.into(),
            ShowcaseError::Compactness(c) => Failure::Validation(c.to_string()),
        }
    }
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure::Validation(msg.into())
}

/// Rendered report and whether its verdict counts as a pass.
struct Output {
    body: String,
    passed: bool,
}

const NATURAL_PROBES: [f64; 9] = [1.0, 1.25, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0, 16.0];

fn parse_support(tokens: &[String]) -> Result<Support, Failure> {
    let [a, b] = tokens else {
        return Err(invalid("a support takes two values A B"));
    };
    let num = |s: &str| f64::from_str(s.trim()).map_err(|_| invalid(format!("`{s}` is not a number")));
    let lower = num(a)?;
    let upper = match b.trim() {
        "inf" | "+inf" | "infinity" => Upper::Infinite,
        s => Upper::Finite(num(s)?),
    };
    Ok(Support::new(lower, upper)?)
}

fn parse_grid(spec: &str) -> Result<Vec<f64>, Failure> {
    let parts: Vec<f64> = spec
        .split(':')
        .map(|s| f64::from_str(s.trim()).map_err(|_| invalid(format!("bad p-grid `{spec}`; expected lo:hi:step"))))
        .collect::<Result<_, _>>()?;
    match parts[..] {
        [lo, hi, step] if lo.is_finite() && hi.is_finite() && step > 0.0 && lo <= hi && lo >= 1.0 => Ok(linear_grid(lo, hi, step)),
        _ => Err(invalid(format!("bad p-grid `{spec}`; need 1 <= lo <= hi and step > 0"))),
    }
}

fn parse_space(domain: &str, density: Option<&str>) -> Result<MeasureSpace, Failure> {
    let d = Domain::from_str(domain).map_err(|e| invalid(e.to_string()))?;
    let m = MeasureSpace::new(d).map_err(|e| invalid(e.to_string()))?;
    Ok(match density {
        Some(w) => m.with_density(RealFunction::parse(w)?),
        None => m,
    })
}

fn positive(name: &str, v: f64) -> Result<(), Failure> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("--{name} must be positive, got {v}")))
    }
}

fn render(format: Format, json: &Value, csv: String) -> String {
    match format {
        Format::Json => serde_json::to_string_pretty(json).expect("json values serialize") + "\n",
        Format::Csv => csv,
    }
}

fn to_json<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("reports serialize")
}

fn cmd_norm(cli: &Cli, a: &NormArgs) -> Result<Output, Failure> {
    let f = RealFunction::parse(&a.f)?;
    let m = parse_space(&a.domain, a.density.as_deref())?;
    if let Some(p) = a.p {
        if !(p >= 1.0 && p.is_finite()) {
            return Err(invalid(format!("--p must be a finite value >= 1, got {p}")));
        }
        let r = lp_norm(&f, p, &m, cli.tol)?;
        let value = match r.value {
            LpValue::Finite(v) => v,
            LpValue::Divergent => return Err(Failure::Divergent(format!("divergent: |f|_{p} = inf"))),
        };
        let j = json!({"kind": "lp", "p": p, "value": value, "abs_error_estimate": r.abs_error_estimate});
        return Ok(Output { body: render(cli.format, &j, format!("p,value\n{},{}\n", fmt_num(p), fmt_num(value))), passed: true });
    }
    if let Some(src) = &a.psi {
        let psi = PsiFunction::closed_form(src, parse_support(a.psi_supp.as_deref().unwrap_or_default())?)?;
        let r = gls_norm(&f, &psi, &m, &GlsOptions { tol: cli.tol, ..GlsOptions::default() })?;
        if r.value.is_infinite() {
            return Err(Failure::Divergent(format!("divergent: |f|_p = inf at p = {}", r.argmax_p.p)));
        }
        let mut j = to_json(&r);
        j["kind"] = json!("gls");
        let boundary = r.argmax_p.boundary.map(|b| format!("{b:?}").to_lowercase()).unwrap_or_default();
        let csv = format!("norm,argmax_p,boundary\n{},{},{}\n", fmt_num(r.value.as_f64()), fmt_num(r.argmax_p.p), boundary);
        return Ok(Output { body: render(cli.format, &j, csv), passed: true });
    }
    if a.natural {
        let psi = natural_psi_with(&f, &m, &NATURAL_PROBES, cli.tol)?;
        let table: Vec<(f64, f64)> = psi.support().canonical_grid().into_iter().map(|p| (p, psi.eval(p))).collect();
        let mut csv = String::from("p,psi\n");
        for (p, v) in &table {
            csv.push_str(&format!("{},{}\n", fmt_num(*p), fmt_num(*v)));
        }
        let rows: Vec<Value> = table.iter().map(|(p, v)| json!({"p": p, "psi": gls::report::extended(*v)})).collect();
        let j = json!({"kind": "natural", "support": psi.support(), "table": rows});
        return Ok(Output { body: render(cli.format, &j, csv), passed: true });
    }
    Err(invalid("norm needs one of --p, --psi with --psi-supp, or --natural"))
}

fn cmd_example(cli: &Cli, n: u8) -> Result<Output, Failure> {
    let r = run_example(n, cli.seed)?;
    Ok(Output { body: render(cli.format, &to_json(&r), r.to_csv()), passed: r.passed })
}

fn cmd_odot(cli: &Cli, a: &OdotArgs) -> Result<Output, Failure> {
    let psi = PsiFunction::closed_form(&a.psi, parse_support(&a.psi_supp)?)?;
    let theta = PsiFunction::closed_form(&a.theta, parse_support(&a.theta_supp)?)?;
    positive("h-norm", a.h_norm)?;
    let grid = parse_grid(&a.p_grid)?;
    let r = odot_tabulate(&psi, &theta, a.h_norm, &grid);
    let mut j = to_json(&r);
    j["nu"] = match &r.nu {
        Some(nu) => nu.to_json()?,
        None => Value::Null,
    };
    Ok(Output { body: render(cli.format, &j, r.to_csv()), passed: true })
}

fn psi_or_natural(src: Option<&str>, supp: Option<&[String]>, of: &RealFunction, m: &MeasureSpace, tol: f64) -> Result<PsiFunction, Failure> {
    match src {
        Some(s) => Ok(PsiFunction::closed_form(s, parse_support(supp.unwrap_or_default())?)?),
        None => Ok(natural_psi_with(of, m, &NATURAL_PROBES, tol)?),
    }
}

fn cmd_verify(cli: &Cli, a: &VerifyArgs) -> Result<Output, Failure> {
    positive("tol-slack", a.tol_slack).or_else(|e| if a.tol_slack == 0.0 { Ok(()) } else { Err(e) })?;
    if let Some(n) = a.corpus {
        return verify_corpus(cli, n, a.tol_slack);
    }
    let (f_src, xi_src, grid) = match (&a.f, &a.xi, &a.p_grid) {
        (Some(f), Some(xi), Some(g)) => (f, xi, g),
        _ => return Err(invalid("verify needs --f, --xi and --p-grid")),
    };
    let f = RealFunction::parse(f_src)?;
    let xi = RealFunction::parse(xi_src)?;
    let m = parse_space(&a.domain, None)?;
    let grid = parse_grid(grid)?;
    let c = match &a.h {
        Some(h) => CompositionMap::with_density(xi, m.clone(), RealFunction::parse(h)?),
        None => pushforward_density(&xi, &m)?,
    };
    let h = c.density().expect("density present").clone();
    let psi = psi_or_natural(a.psi.as_deref(), a.psi_supp.as_deref(), &f, &m, cli.tol)?;
    let theta = psi_or_natural(a.theta.as_deref(), a.theta_supp.as_deref(), &h, &m, cli.tol)?;
    let (report, ctx) = verify_bound(&f, &psi, &c, &theta, &m, &grid, a.tol_slack)?;
    let mut j = to_json(&report);
    j["context"] = to_json(&ctx);
    Ok(Output { body: render(cli.format, &j, report.to_csv()), passed: report.overall_pass })
}

fn verify_corpus(cli: &Cli, n: usize, tol_slack: f64) -> Result<Output, Failure> {
    if n == 0 {
        return Err(invalid("--corpus must be at least 1"));
    }
    let mut csv = String::from("case,a,m,rows,violations,overall_pass\n");
    let mut cases = Vec::with_capacity(n);
    let mut all = true;
    for (i, case) in power_corpus(n, cli.seed).iter().enumerate() {
        let r = certify_case(case, tol_slack)?;
        all &= r.overall_pass;
        csv.push_str(&format!("{i},{},{},{},{},{}\n", fmt_num(case.a), fmt_num(case.m), r.rows.len(), r.violations(), r.overall_pass));
        cases.push(json!({"case": i, "a": case.a, "m": case.m, "p_grid": case.p_grid, "report": to_json(&r)}));
    }
    let j = json!({"seed": cli.seed, "tol_slack": tol_slack, "overall_pass": all, "cases": cases});
    Ok(Output { body: render(cli.format, &j, csv), passed: all })
}

fn load_nu(path: &PathBuf) -> Result<PsiFunction, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
    let v: Value = serde_json::from_str(&text).map_err(|e| invalid(format!("{} is not JSON: {e}", path.display())))?;
    let psi = match v.get("nu") {
        Some(Value::Null) => return Err(Failure::Divergent(format!("{} records an empty ν support", path.display()))),
        Some(nu) => nu,
        None => &v,
    };
    Ok(PsiFunction::from_json(psi)?)
}

fn cmd_compact(cli: &Cli, a: &CompactArgs) -> Result<Output, Failure> {
    positive("limit-tol", a.limit_tol)?;
    let nu = match (&a.nu, &a.nu_from) {
        (Some(src), _) => PsiFunction::closed_form(src, parse_support(a.nu_supp.as_deref().unwrap_or_default())?)?,
        (None, Some(path)) => load_nu(path)?,
        (None, None) => return Err(invalid("compact needs --nu with --nu-supp, or --nu-from")),
    };
    let gamma = PsiFunction::closed_form(&a.gamma, parse_support(&a.gamma_supp)?)?;
    let opts = CompactnessOptions { limit_tol: a.limit_tol, ..CompactnessOptions::default() };
    let r = check_compactness(&nu, &gamma, &opts).map_err(|e| invalid(e.to_string()))?;
    eprintln!("verdict: {}", to_json(&r.verdict).as_str().unwrap_or_default());
    Ok(Output { body: render(cli.format, &to_json(&r), r.to_csv()), passed: true })
}

fn run(cli: &Cli) -> Result<Output, Failure> {
    positive("tol", cli.tol)?;
    match &cli.cmd {
        Cmd::Norm(a) => cmd_norm(cli, a),
        Cmd::Example { n } => cmd_example(cli, *n),
        Cmd::Odot(a) => cmd_odot(cli, a),
        Cmd::Verify(a) => cmd_verify(cli, a),
        Cmd::Compact(a) => cmd_compact(cli, a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => {
            let written = match &cli.out {
                Some(path) => std::fs::write(path, &out.body),
                None => {
                    print!("{}", out.body);
                    Ok(())
                }
            };
            if let Err(e) = written {
                eprintln!("error: cannot write output: {e}");
                return ExitCode::from(1);
            }
            if out.passed {
                ExitCode::SUCCESS
            } else {
                eprintln!("verdict: fail");
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
