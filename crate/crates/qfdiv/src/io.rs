//! Problem parsing and the command dispatch behind the `qfdiv` binary.
//!
//! Problems are JSON documents; complex matrices are arrays of rows, each
//! entry a `[re, im]` pair. Unknown fields are rejected. Reports are emitted
//! as JSON with every float printed at 17 significant digits and infinities
//! encoded as the strings `"inf"` / `"-inf"`; emission is deterministic, so
//! seeded runs produce byte-identical reports.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Deserialize;

use crate::asymptotics::{gap_report, sandwiched_renyi};
use crate::convex::DivergenceGenerator;
use crate::fisher::{self, SecondOrderReport};
use crate::matrix::DensityOperator;
use crate::oracle::{measurement_value, pvm_search, Measurement};
use crate::solver::{solve, DivergenceResult, SolveOptions, SolverPath};
use crate::{Error, Result};

/// A parsed problem: the generator plus the two matrix payloads.
/// Hermiticity/PSD validation is deferred to [`DensityOperator`].
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub family: DivergenceGenerator,
    pub rho1: DMatrix<Complex64>,
    pub rho2: DMatrix<Complex64>,
}

type MatrixPayload = Vec<Vec<[f64; 2]>>;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FamilySpecRaw {
    family: String,
    #[serde(default)]
    alpha: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ProblemFile {
    family: FamilySpecRaw,
    rho1: MatrixPayload,
    rho2: MatrixPayload,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FisherFile {
    family: FamilySpecRaw,
    eta0: f64,
    step: f64,
    rho_minus: MatrixPayload,
    rho_zero: MatrixPayload,
    rho_plus: MatrixPayload,
}

fn family_from_raw(raw: &FamilySpecRaw) -> Result<DivergenceGenerator> {
    let needs_no_alpha = |name: &str| -> Result<()> {
        if raw.alpha.is_some() {
            Err(Error::InvalidFamily(format!("family \"{name}\" takes no alpha parameter")))
        } else {
            Ok(())
        }
    };
    match raw.family.as_str() {
        "renyi" => {
            let alpha = raw.alpha.ok_or_else(|| {
                Error::InvalidFamily("family \"renyi\" requires an alpha parameter".into())
            })?;
            DivergenceGenerator::renyi(alpha)
        }
        "kl" => {
            needs_no_alpha("kl")?;
            Ok(DivergenceGenerator::kl())
        }
        "tv" => {
            needs_no_alpha("tv")?;
            Ok(DivergenceGenerator::tv())
        }
        "fb" => {
            needs_no_alpha("fb")?;
            Ok(DivergenceGenerator::fb())
        }
        "chi2" => {
            needs_no_alpha("chi2")?;
            Ok(DivergenceGenerator::chi2())
        }
        "fidelity" => {
            needs_no_alpha("fidelity")?;
            Ok(DivergenceGenerator::fidelity_family())
        }
        other => Err(Error::InvalidFamily(format!("unknown family \"{other}\""))),
    }
}

/// Parses a family spec given either as a bare name ("kl") or as inline
/// JSON ({"family":"renyi","alpha":0.3}).
pub fn parse_family_arg(text: &str) -> Result<DivergenceGenerator> {
    let trimmed = text.trim();
    if trimmed.starts_with('{') {
        let raw: FamilySpecRaw = serde_json::from_str(trimmed)
            .map_err(|e| Error::InvalidInput(format!("family spec: {e}")))?;
        family_from_raw(&raw)
    } else {
        family_from_raw(&FamilySpecRaw { family: trimmed.to_string(), alpha: None })
    }
}

fn matrix_from_payload(field: &str, payload: &MatrixPayload) -> Result<DMatrix<Complex64>> {
    let n = payload.len();
    if n == 0 {
        return Err(Error::InvalidInput(format!("{field}: matrix must be nonempty")));
    }
    for (i, row) in payload.iter().enumerate() {
        if row.len() != n {
            return Err(Error::InvalidInput(format!(
                "{field}: row {i} has {} entries, expected {n} (matrix must be square)",
                row.len()
            )));
        }
    }
    Ok(DMatrix::from_fn(n, n, |i, j| {
        Complex64::new(payload[i][j][0], payload[i][j][1])
    }))
}

/// Parses a problem document, rejecting unknown fields, non-square matrices
/// and dimension mismatches with a diagnostic naming the offending field.
pub fn parse_problem(text: &str) -> Result<ProblemSpec> {
    let file: ProblemFile =
        serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("problem: {e}")))?;
    let family = family_from_raw(&file.family)?;
    let rho1 = matrix_from_payload("rho1", &file.rho1)?;
    let rho2 = matrix_from_payload("rho2", &file.rho2)?;
    if rho1.nrows() != rho2.nrows() {
        return Err(Error::InvalidInput(format!(
            "rho1 is {0}x{0} but rho2 is {1}x{1}",
            rho1.nrows(),
            rho2.nrows()
        )));
    }
    Ok(ProblemSpec { family, rho1, rho2 })
}

/// Canonical serialization of a parsed problem (round-trips through
/// [`parse_problem`] unchanged).
pub fn serialize_problem(spec: &ProblemSpec) -> String {
    let mut out = String::from("{\"family\":{\"family\":\"");
    out.push_str(spec.family.name());
    out.push('"');
    if let Some(alpha) = spec.family.param() {
        out.push_str(",\"alpha\":");
        out.push_str(&fmt_f64(alpha));
    }
    out.push_str("},\"rho1\":");
    out.push_str(&fmt_matrix(&spec.rho1));
    out.push_str(",\"rho2\":");
    out.push_str(&fmt_matrix(&spec.rho2));
    out.push('}');
    out
}

/// 17-significant-digit float formatting; infinities as quoted strings.
pub(crate) fn fmt_f64(x: f64) -> String {
    if x == f64::INFINITY {
        "\"inf\"".to_string()
    } else if x == f64::NEG_INFINITY {
        "\"-inf\"".to_string()
    } else if x.is_nan() {
        "\"nan\"".to_string()
    } else {
        format!("{x:.16e}")
    }
}

fn fmt_matrix(m: &DMatrix<Complex64>) -> String {
    let mut out = String::from("[");
    for i in 0..m.nrows() {
        if i > 0 {
            out.push(',');
        }
        out.push('[');
        for j in 0..m.ncols() {
            if j > 0 {
                out.push(',');
            }
            out.push('[');
            out.push_str(&fmt_f64(m[(i, j)].re));
            out.push(',');
            out.push_str(&fmt_f64(m[(i, j)].im));
            out.push(']');
        }
        out.push(']');
    }
    out.push(']');
    out
}

fn fmt_str(s: &str) -> String {
    serde_json::to_string(s).expect("string serialization cannot fail")
}

struct ReportBuilder {
    buf: String,
    first: bool,
}

impl ReportBuilder {
    fn new() -> Self {
        ReportBuilder { buf: String::from("{"), first: true }
    }

    fn raw(&mut self, key: &str, value: &str) -> &mut Self {
        if !self.first {
            self.buf.push(',');
        }
        self.first = false;
        self.buf.push_str(&fmt_str(key));
        self.buf.push(':');
        self.buf.push_str(value);
        self
    }

    fn float(&mut self, key: &str, value: f64) -> &mut Self {
        let v = fmt_f64(value);
        self.raw(key, &v)
    }

    fn string(&mut self, key: &str, value: &str) -> &mut Self {
        let v = fmt_str(value);
        self.raw(key, &v)
    }

    fn boolean(&mut self, key: &str, value: bool) -> &mut Self {
        self.raw(key, if value { "true" } else { "false" })
    }

    fn integer(&mut self, key: &str, value: usize) -> &mut Self {
        let v = value.to_string();
        self.raw(key, &v)
    }

    fn finish(mut self) -> String {
        self.buf.push('}');
        self.buf
    }
}

fn family_fields(rb: &mut ReportBuilder, f: &DivergenceGenerator) {
    rb.string("family", f.name());
    if let Some(alpha) = f.param() {
        rb.float("alpha", alpha);
    }
}

/// A command's JSON report plus the process exit code
/// (0 = answered, 2 = input error, 3 = non-convergence).
pub struct RunOutput {
    pub report: String,
    pub exit_code: i32,
}

fn divergence_fields(rb: &mut ReportBuilder, res: &DivergenceResult) -> i32 {
    rb.float("value", if res.finite { res.value } else { f64::INFINITY });
    rb.boolean("finite", res.finite);
    rb.string("path", res.path.as_str());
    rb.integer("iterations", res.iterations);
    match res.gradient_residual {
        Some(r) => rb.float("gradient_residual", r),
        None => rb.raw("gradient_residual", "null"),
    };
    let warnings: Vec<String> = res.warnings.iter().map(|w| fmt_str(w)).collect();
    rb.raw("warnings", &format!("[{}]", warnings.join(",")));
    if res.warnings.iter().any(|w| w.starts_with("gradient ascent stopped")) {
        3
    } else {
        0
    }
}

/// `compute`: solve the problem and report the result.
pub fn run_compute(spec: &ProblemSpec, opts: &SolveOptions) -> Result<RunOutput> {
    let rho1 = DensityOperator::new(spec.rho1.clone())?;
    let rho2 = DensityOperator::new(spec.rho2.clone())?;
    let res = solve(&spec.family, &rho1, &rho2, opts)?;
    let mut rb = ReportBuilder::new();
    rb.string("command", "compute");
    family_fields(&mut rb, &spec.family);
    let code = divergence_fields(&mut rb, &res);
    Ok(RunOutput { report: rb.finish(), exit_code: code })
}

fn measurement_json(m: &Measurement) -> String {
    let effects: Vec<String> = m.effects().iter().map(fmt_matrix).collect();
    format!("[{}]", effects.join(","))
}

/// `verify`: solver value, PVM-oracle value, their gap and the best
/// measurement found. Deterministic for a fixed seed.
pub fn run_verify(spec: &ProblemSpec, restarts: usize, seed: u64) -> Result<RunOutput> {
    let rho1 = DensityOperator::new(spec.rho1.clone())?;
    let rho2 = DensityOperator::new(spec.rho2.clone())?;
    let opts = SolveOptions::default();
    let res = solve(&spec.family, &rho1, &rho2, &opts)?;
    let (oracle_value, best) = pvm_search(&spec.family, &rho1, &rho2, restarts, seed)?;
    let oracle_value = if oracle_value == f64::NEG_INFINITY {
        measurement_value(&spec.family, &best, &rho1, &rho2)?
    } else {
        oracle_value
    };
    let mut rb = ReportBuilder::new();
    rb.string("command", "verify");
    family_fields(&mut rb, &spec.family);
    rb.float("solver_value", if res.finite { res.value } else { f64::INFINITY });
    rb.string("solver_path", res.path.as_str());
    rb.float("oracle_value", oracle_value);
    let gap = if res.finite { res.value - oracle_value } else { f64::INFINITY };
    rb.float("gap", gap);
    rb.integer("restarts", restarts);
    rb.integer("seed", seed as usize);
    rb.raw("best_measurement", &measurement_json(&best));
    Ok(RunOutput { report: rb.finish(), exit_code: 0 })
}

fn fisher_report(
    f: &DivergenceGenerator,
    eta0: f64,
    step: f64,
    richardson: bool,
    report: &SecondOrderReport,
) -> String {
    let mut rb = ReportBuilder::new();
    rb.string("command", "fisher");
    family_fields(&mut rb, f);
    rb.float("eta0", eta0);
    rb.float("step", step);
    rb.boolean("richardson", richardson);
    rb.float("lhs", report.lhs);
    rb.float("rhs", report.rhs);
    rb.float("gap", report.gap);
    rb.float("lhs_at_h", report.lhs_at_h);
    rb.float("naive_rhs", report.naive_rhs);
    rb.float("j_s", report.j_s);
    rb.float("j1", report.j1);
    rb.float("j2", report.j2);
    rb.integer("rank", report.rank);
    rb.finish()
}

/// `fisher --builtin`: second-order check on a named built-in family, with
/// Richardson extrapolation over steps h and h/2.
pub fn run_fisher_builtin(
    family: &DivergenceGenerator,
    name: &str,
    eta0: f64,
    step: f64,
) -> Result<RunOutput> {
    let sampler = fisher::families::by_name(name).ok_or_else(|| {
        Error::InvalidInput(format!(
            "unknown builtin family \"{name}\" (available: rotating-qubit, binary-mixture, pure-qubit, rank2-in-3d)"
        ))
    })?;
    let report = fisher::second_order_check(family, &sampler, eta0, step)?;
    Ok(RunOutput { report: fisher_report(family, eta0, step, true, &report), exit_code: 0 })
}

/// `fisher -f`: second-order check from three sampled matrices at
/// η₀ − h, η₀, η₀ + h. With a single step available the quotient is not
/// Richardson-extrapolated.
pub fn run_fisher_samples(text: &str) -> Result<RunOutput> {
    let file: FisherFile =
        serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("fisher: {e}")))?;
    let family = family_from_raw(&file.family)?;
    let minus = matrix_from_payload("rho_minus", &file.rho_minus)?;
    let zero = matrix_from_payload("rho_zero", &file.rho_zero)?;
    let plus = matrix_from_payload("rho_plus", &file.rho_plus)?;
    let report = fisher::three_point_report(&family, &minus, &zero, &plus, file.step)?;
    Ok(RunOutput {
        report: fisher_report(&family, file.eta0, file.step, false, &report),
        exit_code: 0,
    })
}

/// `compare`: single-copy versus asymptotic optimum at Rényi order α.
pub fn run_compare(spec: &ProblemSpec, alpha: f64) -> Result<RunOutput> {
    let rho1 = DensityOperator::new(spec.rho1.clone())?;
    let rho2 = DensityOperator::new(spec.rho2.clone())?;
    let report = gap_report(alpha, &rho1, &rho2)?;
    let asym_value = sandwiched_renyi(alpha, &rho1, &rho2)?;
    let mut rb = ReportBuilder::new();
    rb.string("command", "compare");
    rb.float("alpha", alpha);
    rb.float("single_copy_log", report.single_copy_log);
    rb.float("asymptotic_log", report.asymptotic_log);
    rb.float("asymptotic_value", asym_value);
    rb.float("gap", report.gap);
    rb.boolean("commuting", report.commuting);
    Ok(RunOutput { report: rb.finish(), exit_code: 0 })
}

/// Parses a `--force-path` argument.
pub fn parse_force_path(s: &str) -> Result<SolverPath> {
    SolverPath::parse(s).ok_or_else(|| {
        Error::InvalidInput(format!(
            "unknown path \"{s}\" (expected one of: pure_state, closed_form_f2, \
             closed_form_fidelity, closed_form_tv, generic_gradient, swapped_generic, \
             commuting_classical)"
        ))
    })
}
