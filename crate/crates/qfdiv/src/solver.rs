//! Computation of the measured f-divergence D_f^min(ρ₁‖ρ₂).
//!
//! The route taken depends on the pair and the family:
//!
//! 1. finiteness classification from the support relation and the conjugate
//!    domain data;
//! 2. commuting pairs reduce to the classical divergence of the joint
//!    eigenvalue vectors;
//! 3. closed forms: χ² (α = 2, a Lyapunov solve), α = −1 (argument swap),
//!    fidelity (α = 1/2), trace distance (tv);
//! 4. rank-1 first argument: the scalar pure-state formula;
//! 5. otherwise, when f* is operator convex, kernel reduction onto supp ρ₁
//!    followed by projected gradient ascent on the concave functional
//!    G(T) = tr ρ₁T − tr ρ₂ f*(T) over the spectral box [t*′, t*];
//! 6. when only the reversed conjugate is operator convex, the same ascent
//!    on the swapped problem (f̂, ρ₂, ρ₁).
//!
//! The maximizing T is restricted to spectrum in [t*′, t*]: a measurement
//! supported outside that interval never increases the objective, with
//! t* = f′₊(b*), t*′ = f′₋(b*′) obtained from the extremal operator ratios
//! b* (smallest b with ρ₁ ≤ b·ρ₂) and b*′ (largest b with ρ₁ ≥ b·ρ₂) by
//! subgradient inversion b ∈ ∂f*(t) ⇔ t ∈ ∂f(b).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::convex::{DiscreteMeasure, DivergenceGenerator};
use crate::matrix::{
    commutator_norm, eigh, fidelity, from_spectral, identity, max_abs, sqrtm_psd,
    trace_norm, trace_product_re, DensityOperator, HermitianOperator,
};
use crate::{Error, Result};

/// Commutator max-norm below which a pair is treated as commuting.
pub const COMMUTING_TOL: f64 = 1e-10;
/// Support-inclusion tolerance for projector comparisons.
const INCLUSION_TOL: f64 = 1e-8;
/// Relative margin kept from open or derivative-singular domain ends.
const BOX_EDGE_EPS: f64 = 1e-8;

/// Which computation produced a [`DivergenceResult`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverPath {
    PureState,
    ClosedFormF2,
    ClosedFormFidelity,
    ClosedFormTv,
    GenericGradient,
    SwappedGeneric,
    CommutingClassical,
}

impl SolverPath {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolverPath::PureState => "pure_state",
            SolverPath::ClosedFormF2 => "closed_form_f2",
            SolverPath::ClosedFormFidelity => "closed_form_fidelity",
            SolverPath::ClosedFormTv => "closed_form_tv",
            SolverPath::GenericGradient => "generic_gradient",
            SolverPath::SwappedGeneric => "swapped_generic",
            SolverPath::CommutingClassical => "commuting_classical",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "pure_state" => SolverPath::PureState,
            "closed_form_f2" => SolverPath::ClosedFormF2,
            "closed_form_fidelity" => SolverPath::ClosedFormFidelity,
            "closed_form_tv" => SolverPath::ClosedFormTv,
            "generic_gradient" => SolverPath::GenericGradient,
            "swapped_generic" => SolverPath::SwappedGeneric,
            "commuting_classical" => SolverPath::CommutingClassical,
            _ => return None,
        })
    }
}

/// Options for [`solve`].
#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Projected-gradient norm at which the ascent stops.
    pub tol: f64,
    pub max_iter: usize,
    /// Overrides the routing when set; errors if the path does not apply.
    pub force_path: Option<SolverPath>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { tol: 1e-9, max_iter: 10_000, force_path: None }
    }
}

/// Outcome of a divergence computation.
#[derive(Debug, Clone)]
pub struct DivergenceResult {
    /// D_f^min(ρ₁‖ρ₂); +∞ when `finite` is false.
    pub value: f64,
    pub finite: bool,
    /// Maximizer of G when one is available for the path taken. For the
    /// swapped route this is the optimizer of the swapped objective; after a
    /// kernel reduction the kernel block is filled below the support
    /// spectrum so its eigenbasis still separates support from kernel.
    pub optimizer_t: Option<HermitianOperator>,
    pub path: SolverPath,
    pub iterations: usize,
    /// Final projected-gradient norm; only the gradient routes report it.
    pub gradient_residual: Option<f64>,
    pub warnings: Vec<String>,
}

impl DivergenceResult {
    fn infinite(path: SolverPath) -> Self {
        DivergenceResult {
            value: f64::INFINITY,
            finite: false,
            optimizer_t: None,
            path,
            iterations: 0,
            gradient_residual: None,
            warnings: Vec::new(),
        }
    }

    fn exact(value: f64, path: SolverPath) -> Self {
        DivergenceResult {
            value,
            finite: true,
            optimizer_t: None,
            path,
            iterations: 0,
            gradient_residual: None,
            warnings: Vec::new(),
        }
    }
}

/// Relation between the supports of two density operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SupportRelation {
    Equal,
    OneInTwo,
    TwoInOne,
    Incomparable,
}

/// Extremal operator ratios and the induced spectral interval ends.
#[derive(Debug, Clone, Copy)]
pub struct SpectralBounds {
    /// Smallest b with ρ₁ − b·ρ₂ ≤ 0; +∞ when none exists.
    pub b_star: f64,
    /// Largest b with ρ₁ − b·ρ₂ ≥ 0.
    pub b_star_prime: f64,
    /// Upper end of the optimizer's spectral interval, f′₊(b*).
    pub t_star: f64,
    /// Lower end, f′₋(b*′).
    pub t_star_prime: f64,
}

fn subset_within(inner: &DensityOperator, outer_projector: &DMatrix<Complex64>) -> bool {
    let basis = inner.support_basis();
    let residual = &basis - outer_projector * &basis;
    max_abs(&residual) <= INCLUSION_TOL
}

/// Classifies supp ρ₁ against supp ρ₂ at the rank tolerance.
pub fn support_relation(rho1: &DensityOperator, rho2: &DensityOperator) -> Result<SupportRelation> {
    if rho1.dim() != rho2.dim() {
        return Err(Error::DimensionMismatch(rho1.dim(), rho2.dim()));
    }
    let p1 = rho1.support_projector();
    let p2 = rho2.support_projector();
    let one_in_two = subset_within(rho1, &p2);
    let two_in_one = subset_within(rho2, &p1);
    Ok(match (one_in_two, two_in_one) {
        (true, true) => SupportRelation::Equal,
        (true, false) => SupportRelation::OneInTwo,
        (false, true) => SupportRelation::TwoInOne,
        (false, false) => SupportRelation::Incomparable,
    })
}

/// Finiteness of D_f^min per the support relation: always finite on equal
/// supports; supp ρ₁ ⊂ supp ρ₂ needs f*(−∞) > −∞; supp ρ₂ ⊂ supp ρ₁ needs
/// dom f* bounded above; incomparable supports need both.
pub fn finiteness_check(
    f: &DivergenceGenerator,
    rho1: &DensityOperator,
    rho2: &DensityOperator,
) -> Result<bool> {
    let relation = support_relation(rho1, rho2)?;
    let wf1 = f.conj_at_neg_infinity() > f64::NEG_INFINITY;
    let wf2 = f.conj_domain().is_bounded_above();
    Ok(match relation {
        SupportRelation::Equal => true,
        SupportRelation::OneInTwo => wf1,
        SupportRelation::TwoInOne => wf2,
        SupportRelation::Incomparable => wf1 && wf2,
    })
}

/// Largest generalized eigenvalue of ρ₁ relative to ρ₂ (on supp ρ₂), i.e.
/// the max eigenvalue of ρ₂^{−1/2} ρ₁ ρ₂^{−1/2} with pseudo-inverse powers.
fn max_relative_eigenvalue(rho1: &DensityOperator, rho2: &DensityOperator) -> f64 {
    let isqrt = rho2.pseudo_power(-0.5);
    let ratio = &isqrt * rho1.matrix() * &isqrt;
    let (vals, _) = eigh(&ratio);
    vals.iter().cloned().fold(0.0, f64::max)
}

/// Spectral interval for the optimizer variable T.
pub fn spectral_bounds(
    f: &DivergenceGenerator,
    rho1: &DensityOperator,
    rho2: &DensityOperator,
) -> Result<SpectralBounds> {
    let relation = support_relation(rho1, rho2)?;
    let dom = f.conj_domain();

    let b_star = match relation {
        SupportRelation::Equal | SupportRelation::OneInTwo => max_relative_eigenvalue(rho1, rho2),
        _ => f64::INFINITY,
    };
    let b_star_prime = match relation {
        SupportRelation::Equal | SupportRelation::TwoInOne => {
            // largest b with ρ₁ ≥ b·ρ₂ = 1 / max eigenvalue of the inverted ratio
            let m = max_relative_eigenvalue(rho2, rho1);
            if m > 0.0 { 1.0 / m } else { f64::INFINITY }
        }
        _ => 0.0,
    };

    let t_star = if b_star == f64::INFINITY { dom.hi } else { f.f_prime_right_at(b_star) };
    let t_star_prime = if b_star_prime == 0.0 { dom.lo } else { f.f_prime_left_at(b_star_prime) };
    Ok(SpectralBounds { b_star, b_star_prime, t_star, t_star_prime })
}

/// Restricts both operators to supp ρ₁ (compressed to rank(ρ₁) dimensions)
/// and returns the additive constant f(0)·tr ρ₂(1 − π_{ρ₁}).
///
/// Valid when f is canonical, f* is operator convex and dom f* is unbounded
/// below; the optimal measurement then factors through {π_{ρ₁}, 1 − π_{ρ₁}}.
pub fn kernel_reduce(
    f: &DivergenceGenerator,
    rho1: &DensityOperator,
    rho2: &DensityOperator,
) -> Result<(DensityOperator, DensityOperator, f64)> {
    kernel_reduce_hypotheses(f)?;
    if rho1.dim() != rho2.dim() {
        return Err(Error::DimensionMismatch(rho1.dim(), rho2.dim()));
    }
    let v = rho1.support_basis();
    let r1 = v.adjoint() * rho1.matrix() * &v;
    let r2 = v.adjoint() * rho2.matrix() * &v;
    let reduced1 = DensityOperator::new(r1)?;
    let reduced2 = DensityOperator::new(r2)?;
    let outside_mass = (rho2.trace() - reduced2.trace()).max(0.0);
    let constant = if outside_mass <= 1e-14 {
        0.0
    } else {
        let f0 = f.f_at_zero();
        if f0 == f64::INFINITY { f64::INFINITY } else { f0 * outside_mass }
    };
    Ok((reduced1, reduced2, constant))
}

fn kernel_reduce_hypotheses(f: &DivergenceGenerator) -> Result<()> {
    let mut missing = Vec::new();
    if !f.is_canonical() {
        missing.push("canonical generator");
    }
    if !f.cond_i() {
        missing.push("operator-convex conjugate (condition I)");
    }
    if f.conj_domain().is_bounded_below() {
        missing.push("dom f* unbounded below");
    }
    if missing.is_empty() {
        Ok(())
    } else {
        Err(Error::PreconditionFailed {
            op: "kernel_reduce",
            reason: format!("{}; use the generic or swapped path", missing.join(", ")),
        })
    }
}

/// Closed pure-state formula f̂(q) + f(0)(tr ρ₂ − q) with q = ⟨φ₁|ρ₂|φ₁⟩.
///
/// At q = 0 the value is the recession limit g(1, 0) + f(0)·tr ρ₂, which is
/// +∞ exactly when the finiteness classifier says so.
pub fn pure_state_value(
    f: &DivergenceGenerator,
    phi1: &DVector<Complex64>,
    rho2: &DensityOperator,
) -> Result<f64> {
    kernel_reduce_hypotheses(f).map_err(|_| Error::PreconditionFailed {
        op: "pure_state_value",
        reason: "kernel-reduction hypotheses not satisfied".into(),
    })?;
    let norm = phi1.norm();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::NotUnit(norm));
    }
    if phi1.len() != rho2.dim() {
        return Err(Error::DimensionMismatch(phi1.len(), rho2.dim()));
    }
    let q = (phi1.adjoint() * rho2.matrix() * phi1)[(0, 0)].re.max(0.0);
    Ok(weighted_pure_value(f, 1.0, q, rho2.trace()))
}

/// g(w, q) + f(0)·(total₂ − q): the rank-1 value for ρ₁ = w·|φ⟩⟨φ|.
fn weighted_pure_value(f: &DivergenceGenerator, w: f64, q: f64, total2: f64) -> f64 {
    let head = f.g_eval(w, q);
    if head == f64::INFINITY {
        return f64::INFINITY;
    }
    let outside = (total2 - q).max(0.0);
    if outside <= 1e-14 {
        head
    } else {
        let f0 = f.f_at_zero();
        if f0 == f64::INFINITY { f64::INFINITY } else { head + f0 * outside }
    }
}

/// The working interval for the ascent: [t*′, t*] ∩ dom f*, pulled inward
/// by a relative margin at any end that is open or where f*′ diverges.
fn ascent_box(f: &DivergenceGenerator, bounds: &SpectralBounds) -> (f64, f64) {
    let dom = f.conj_domain();
    let mut lo = bounds.t_star_prime.max(dom.lo);
    let mut hi = bounds.t_star.min(dom.hi);
    let lo_singular = dom.lo.is_finite() && (!dom.lo_closed || !f.conj_prime_at(dom.lo).is_finite());
    let hi_singular = dom.hi.is_finite() && (!dom.hi_closed || !f.conj_prime_at(dom.hi).is_finite());
    if lo_singular && lo <= dom.lo {
        lo = dom.lo + BOX_EDGE_EPS * (1.0 + dom.lo.abs());
    }
    if hi_singular && hi >= dom.hi {
        hi = dom.hi - BOX_EDGE_EPS * (1.0 + dom.hi.abs());
    }
    (lo, hi)
}

struct Ascent {
    value: f64,
    optimizer: DMatrix<Complex64>,
    iterations: usize,
    residual: f64,
    converged: bool,
}

/// Projected gradient ascent with Barzilai–Borwein steps safeguarded by
/// Armijo backtracking. The projection clamps eigenvalues into [lo, hi].
fn maximize_g(
    f: &DivergenceGenerator,
    rho1: &DensityOperator,
    rho2: &DensityOperator,
    lo: f64,
    hi: f64,
    tol: f64,
    max_iter: usize,
) -> Result<Ascent> {
    let n = rho1.dim();
    let dom = f.conj_domain();

    let project = |m: &DMatrix<Complex64>| -> (DMatrix<Complex64>, DVector<f64>, DMatrix<Complex64>) {
        let (mut vals, vecs) = eigh(m);
        for v in vals.iter_mut() {
            *v = v.clamp(lo, hi);
        }
        (from_spectral(&vals, &vecs), vals, vecs)
    };

    // G(T) and the gradient ρ₁ − Df*(T)(ρ₂), evaluated from a spectral
    // decomposition of T that is already inside the box.
    let g_value = |vals: &DVector<f64>, vecs: &DMatrix<Complex64>, t: &DMatrix<Complex64>| -> f64 {
        let conj_vals = DVector::from_iterator(n, vals.iter().map(|&v| f.conj_at(dom.clamp(v))));
        let fstar = from_spectral(&conj_vals, vecs);
        trace_product_re(rho1.matrix(), t) - trace_product_re(rho2.matrix(), &fstar)
    };
    let gradient = |vals: &DVector<f64>, vecs: &DMatrix<Complex64>| -> DMatrix<Complex64> {
        let rho2_t = vecs.adjoint() * rho2.matrix() * vecs;
        let mut d = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let (a, b) = (dom.clamp(vals[i]), dom.clamp(vals[j]));
                let dd = if (a - b).abs() < 1e-7 * (1.0 + a.abs() + b.abs()) {
                    f.conj_prime_at(0.5 * (a + b))
                } else {
                    (f.conj_at(a) - f.conj_at(b)) / (a - b)
                };
                d[(i, j)] = rho2_t[(i, j)] * Complex64::new(dd, 0.0);
            }
        }
        let dfstar = vecs * d * vecs.adjoint();
        rho1.matrix() - (&dfstar + dfstar.adjoint()) * Complex64::new(0.5, 0.0)
    };
    let fro = |m: &DMatrix<Complex64>| -> f64 { m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt() };

    let init = f.f_prime_right_at(1.0).clamp(lo, hi);
    let mut t = identity(n) * Complex64::new(init, 0.0);
    let (mut vals, mut vecs) = eigh(&t);
    let mut value = g_value(&vals, &vecs, &t);
    let mut grad = gradient(&vals, &vecs);

    let mut step = 1.0f64;
    let mut prev_t: Option<DMatrix<Complex64>> = None;
    let mut prev_grad: Option<DMatrix<Complex64>> = None;
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;
    let mut stagnated = false;

    for iter in 0..max_iter {
        iterations = iter + 1;

        // projected-gradient residual at unit step
        let (probe, _, _) = project(&(&t + &grad));
        residual = fro(&(&probe - &t));
        if residual <= tol {
            converged = true;
            break;
        }

        // Barzilai–Borwein step from the last displacement, safeguarded
        if let (Some(pt), Some(pg)) = (&prev_t, &prev_grad) {
            let ds = &t - pt;
            let dg = &grad - pg;
            let num = trace_product_re(&ds, &ds);
            let den = -trace_product_re(&ds, &dg);
            if den > 1e-300 {
                step = (num / den).clamp(1e-6, 1e6);
            }
        }

        prev_t = Some(t.clone());
        prev_grad = Some(grad.clone());

        // Armijo backtracking on the projected trial point
        let mut s = step;
        let mut accepted = false;
        for _ in 0..60 {
            let (cand, cvals, cvecs) = project(&(&t + &grad * Complex64::new(s, 0.0)));
            let delta = &cand - &t;
            let decrease = trace_product_re(&grad, &delta);
            let cval = g_value(&cvals, &cvecs, &cand);
            if cval >= value + 1e-4 * decrease || fro(&delta) < 1e-16 {
                t = cand;
                vals = cvals;
                vecs = cvecs;
                value = cval;
                accepted = true;
                break;
            }
            s *= 0.5;
        }
        if !accepted {
            stagnated = true;
            break;
        }
        grad = gradient(&vals, &vecs);
    }

    // Line-search stagnation with a small residual means no f64-representable
    // ascent step remains: the value is optimal at working precision even
    // though the nominal tolerance was not reached.
    if stagnated && residual <= (100.0 * tol).max(1e-7 * (1.0 + value.abs())) {
        converged = true;
    }

    Ok(Ascent { value, optimizer: t, iterations, residual, converged })
}

/// Generic concave maximization of G(T) = tr ρ₁T − tr ρ₂f*(T).
///
/// Requires condition (I) and a finite divergence; callers should have run
/// [`kernel_reduce`] first when ρ₁ is rank-deficient and the reduction
/// hypotheses hold. At an interior stationary point the value identity
/// G(T₀) = tr ρ₂ f(f*′(T₀)) is verified and a warning is attached if it
/// fails by more than 1e−7.
pub fn solve_generic(
    f: &DivergenceGenerator,
    rho1: &DensityOperator,
    rho2: &DensityOperator,
    opts: &SolveOptions,
) -> Result<DivergenceResult> {
    if !f.cond_i() {
        return Err(Error::PreconditionFailed {
            op: "solve_generic",
            reason: "conjugate is not operator convex; swap the arguments and use the reversal".into(),
        });
    }
    if !finiteness_check(f, rho1, rho2)? {
        return Ok(DivergenceResult::infinite(SolverPath::GenericGradient));
    }

    // ρ₂ = 0: every measurement sees (p, 0); only the recession slope remains.
    if rho2.rank() == 0 {
        let value = f.g_eval(rho1.trace(), 0.0);
        let mut res = DivergenceResult::exact(value, SolverPath::GenericGradient);
        res.finite = value.is_finite();
        if !res.finite {
            res.value = f64::INFINITY;
        }
        return Ok(res);
    }

    let bounds = spectral_bounds(f, rho1, rho2)?;
    let (lo, hi) = ascent_box(f, &bounds);
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        return Err(Error::PreconditionFailed {
            op: "solve_generic",
            reason: format!(
                "unbounded spectral interval [{lo}, {hi}]; reduce onto supp rho1 first"
            ),
        });
    }

    let ascent = maximize_g(f, rho1, rho2, lo, hi, opts.tol, opts.max_iter)?;
    let mut warnings = Vec::new();
    if !ascent.converged {
        warnings.push(format!(
            "gradient ascent stopped after {} iterations with projected-gradient norm {:.3e}",
            ascent.iterations, ascent.residual
        ));
    }

    // value identity diagnostic at an interior optimum
    let (tvals, tvecs) = eigh(&ascent.optimizer);
    let interior = tvals.iter().all(|&v| {
        v > lo + 1e-6 * (1.0 + lo.abs()) && v < hi - 1e-6 * (1.0 + hi.abs())
    });
    if interior && ascent.converged {
        let dom = f.conj_domain();
        let mapped = DVector::from_iterator(
            tvals.len(),
            tvals.iter().map(|&v| f.f_at(f.conj_prime_at(dom.clamp(v)))),
        );
        let f_of_rho = from_spectral(&mapped, &tvecs);
        let check = trace_product_re(rho2.matrix(), &f_of_rho);
        if (check - ascent.value).abs() > 1e-7 * (1.0 + ascent.value.abs()) {
            warnings.push(format!(
                "value identity tr rho2 f(f*'(T0)) = {:.12e} differs from G(T0) = {:.12e}",
                check, ascent.value
            ));
        }
    }

    Ok(DivergenceResult {
        value: ascent.value,
        finite: true,
        optimizer_t: Some(HermitianOperator::from_hermitian_unchecked(ascent.optimizer)),
        path: SolverPath::GenericGradient,
        iterations: ascent.iterations,
        gradient_residual: Some(ascent.residual),
        warnings,
    })
}

/// Joint eigenbasis of a commuting pair: diagonalize ρ₁, then ρ₂ within
/// each (near-)degenerate eigenspace of ρ₁.
fn joint_eigenbasis(rho1: &DensityOperator, rho2: &DensityOperator) -> DMatrix<Complex64> {
    let n = rho1.dim();
    let vals = rho1.eigenvalues();
    let vecs = rho1.eigenvectors();
    let scale = vals.iter().cloned().fold(1.0, f64::max);
    let mut basis = DMatrix::zeros(n, n);
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && (vals[end] - vals[end - 1]).abs() <= 1e-8 * scale {
            end += 1;
        }
        let block = vecs.columns(start, end - start).into_owned();
        let compressed = block.adjoint() * rho2.matrix() * &block;
        let herm = (&compressed + compressed.adjoint()) * Complex64::new(0.5, 0.0);
        let (_, w) = eigh(&herm);
        let rotated = block * w;
        for k in 0..(end - start) {
            basis.set_column(start + k, &rotated.column(k));
        }
        start = end;
    }
    basis
}

fn diagonal_measure(m: &DMatrix<Complex64>, basis: &DMatrix<Complex64>) -> DiscreteMeasure {
    let rotated = basis.adjoint() * m * basis;
    DiscreteMeasure::clamped((0..m.nrows()).map(|i| rotated[(i, i)].re).collect(), 1e-14)
}

/// χ² closed form 2Σᵢⱼ |ρ₁ᵢⱼ|²/(ρ₂ᵢᵢ + ρ₂ⱼⱼ) in ρ₂'s eigenbasis, together
/// with the Lyapunov optimizer T₀ = 4·lyap(ρ₂, ρ₁).
fn chi2_closed_form(
    rho1: &DensityOperator,
    rho2: &DensityOperator,
) -> Result<(f64, HermitianOperator)> {
    let vecs = rho2.eigenvectors();
    let vals = rho2.eigenvalues();
    let n = rho2.dim();
    let kernel = n - rho2.rank();
    let r1 = vecs.adjoint() * rho1.matrix() * vecs;
    let mut value = 0.0;
    let mut t0 = DMatrix::zeros(n, n);
    for i in kernel..n {
        for j in kernel..n {
            let denom = vals[i] + vals[j];
            value += 2.0 * r1[(i, j)].norm_sqr() / denom;
            t0[(i, j)] = r1[(i, j)] * Complex64::new(4.0 / denom, 0.0);
        }
    }
    let back = vecs * t0 * vecs.adjoint();
    Ok((value, HermitianOperator::from_hermitian_unchecked(back)))
}

/// Fidelity-path optimizer T₀ = −½ W^{−1} with W = ρ₂^{−1/2}√(ρ₂^{1/2}ρ₁ρ₂^{1/2})ρ₂^{−1/2}.
fn fidelity_optimizer(
    rho1: &DensityOperator,
    rho2: &DensityOperator,
) -> Option<HermitianOperator> {
    if !rho1.is_full_rank() || !rho2.is_full_rank() {
        return None;
    }
    let b = sqrtm_psd(rho2);
    let inner = DensityOperator::new(b.matrix() * rho1.matrix() * b.matrix()).ok()?;
    let root = sqrtm_psd(&inner);
    let isqrt = rho2.pseudo_power(-0.5);
    let w = &isqrt * root.matrix() * &isqrt;
    let w_op = DensityOperator::new((&w + w.adjoint()) * Complex64::new(0.5, 0.0)).ok()?;
    if !w_op.is_full_rank() {
        return None;
    }
    let t0 = w_op.pseudo_power(-1.0) * Complex64::new(-0.5, 0.0);
    Some(HermitianOperator::from_hermitian_unchecked(t0))
}

/// Sign-projector optimizer for the trace-distance path.
fn tv_optimizer(rho1: &DensityOperator, rho2: &DensityOperator) -> HermitianOperator {
    let diff = rho1.matrix() - rho2.matrix();
    let (vals, vecs) = eigh(&diff);
    let signs = DVector::from_iterator(
        vals.len(),
        vals.iter().map(|&v| if v >= 0.0 { 1.0 } else { -1.0 }),
    );
    HermitianOperator::from_hermitian_unchecked(from_spectral(&signs, &vecs))
}

fn is_renyi_order(f: &DivergenceGenerator, alpha: f64) -> bool {
    f.name() == "renyi" && f.param().map(|a| (a - alpha).abs() < 1e-12).unwrap_or(false)
}

/// Kernel reduction (when its hypotheses hold) followed by the generic
/// ascent; the optimizer is lifted back to the full space with the kernel
/// block filled below the support spectrum.
fn reduce_and_ascend(
    f: &DivergenceGenerator,
    rho1: &DensityOperator,
    rho2: &DensityOperator,
    opts: &SolveOptions,
) -> Result<DivergenceResult> {
    if rho1.is_full_rank() || kernel_reduce_hypotheses(f).is_err() {
        return solve_generic(f, rho1, rho2, opts);
    }
    let (r1, r2, constant) = kernel_reduce(f, rho1, rho2)?;
    if constant == f64::INFINITY {
        return Ok(DivergenceResult::infinite(SolverPath::GenericGradient));
    }
    let mut res = solve_generic(f, &r1, &r2, opts)?;
    if !res.finite {
        return Ok(res);
    }
    res.value += constant;
    res.optimizer_t = res.optimizer_t.take().map(|t| {
        let v = rho1.support_basis();
        let lifted = &v * t.matrix() * v.adjoint();
        let spectrum_floor =
            eigh(t.matrix()).0.iter().cloned().fold(f64::INFINITY, f64::min) - 1.0;
        let pi = rho1.support_projector();
        let complement = identity(rho1.dim()) - &pi;
        HermitianOperator::from_hermitian_unchecked(
            lifted + complement * Complex64::new(spectrum_floor, 0.0),
        )
    });
    Ok(res)
}

fn force_path_error(path: SolverPath, reason: &str) -> Error {
    Error::InvalidInput(format!("forced path {} does not apply: {reason}", path.as_str()))
}

/// Computes D_f^min(ρ₁‖ρ₂), routing to the cheapest certified path.
pub fn solve(
    f: &DivergenceGenerator,
    rho1: &DensityOperator,
    rho2: &DensityOperator,
    opts: &SolveOptions,
) -> Result<DivergenceResult> {
    if rho1.dim() != rho2.dim() {
        return Err(Error::DimensionMismatch(rho1.dim(), rho2.dim()));
    }
    if !f.is_canonical() {
        return solve(&f.canonicalize(), rho1, rho2, opts);
    }

    if let Some(forced) = opts.force_path {
        return solve_forced(f, rho1, rho2, opts, forced);
    }

    let finite = finiteness_check(f, rho1, rho2)?;
    let commuting = commutator_norm(rho1.matrix(), rho2.matrix()) <= COMMUTING_TOL;
    if !finite {
        let path = if commuting {
            SolverPath::CommutingClassical
        } else if f.cond_i() {
            SolverPath::GenericGradient
        } else {
            SolverPath::SwappedGeneric
        };
        return Ok(DivergenceResult::infinite(path));
    }

    if commuting {
        return solve_commuting(f, rho1, rho2);
    }

    if is_renyi_order(f, 2.0) {
        let (value, t0) = chi2_closed_form(rho1, rho2)?;
        let mut res = DivergenceResult::exact(value, SolverPath::ClosedFormF2);
        res.optimizer_t = Some(t0);
        return Ok(res);
    }
    if is_renyi_order(f, -1.0) {
        // D_{f₋₁}(ρ₁‖ρ₂) = D_{f₂}(ρ₂‖ρ₁)
        let (value, _) = chi2_closed_form(rho2, rho1)?;
        return Ok(DivergenceResult::exact(value, SolverPath::ClosedFormF2));
    }
    if is_renyi_order(f, 0.5) {
        let mut res =
            DivergenceResult::exact(-fidelity(rho1, rho2)?, SolverPath::ClosedFormFidelity);
        res.optimizer_t = fidelity_optimizer(rho1, rho2);
        return Ok(res);
    }
    if f.name() == "tv" {
        let diff = HermitianOperator::from_hermitian_unchecked(rho1.matrix() - rho2.matrix());
        let mut res = DivergenceResult::exact(trace_norm(&diff), SolverPath::ClosedFormTv);
        res.optimizer_t = Some(tv_optimizer(rho1, rho2));
        return Ok(res);
    }

    if rho1.rank() == 1 && kernel_reduce_hypotheses(f).is_ok() {
        let w = rho1.trace();
        let n = rho1.dim();
        let phi = rho1.eigenvectors().column(n - 1).into_owned();
        let q = (phi.adjoint() * rho2.matrix() * &phi)[(0, 0)].re.max(0.0);
        let value = weighted_pure_value(f, w, q, rho2.trace());
        let mut res = DivergenceResult::exact(value, SolverPath::PureState);
        res.finite = value.is_finite();
        if !res.finite {
            res.value = f64::INFINITY;
        }
        return Ok(res);
    }

    if f.cond_i() {
        let direct = reduce_and_ascend(f, rho1, rho2, opts)?;
        // Both suprema compute the same quantity; when the conjugate makes
        // the direct ascent ill-conditioned (stalled with warnings) and the
        // reversal is certified too, the swapped run can only improve the
        // lower bound reached.
        if !direct.warnings.is_empty() && direct.finite && f.cond_ii() {
            if let Ok(mut swapped) = reduce_and_ascend(&f.hat(), rho2, rho1, opts) {
                if swapped.finite && swapped.value > direct.value {
                    swapped.path = SolverPath::SwappedGeneric;
                    return Ok(swapped);
                }
            }
        }
        return Ok(direct);
    }
    if f.cond_ii() {
        let mut res = reduce_and_ascend(&f.hat(), rho2, rho1, opts)?;
        res.path = SolverPath::SwappedGeneric;
        return Ok(res);
    }
    Err(Error::UnsupportedFamily)
}

fn solve_commuting(
    f: &DivergenceGenerator,
    rho1: &DensityOperator,
    rho2: &DensityOperator,
) -> Result<DivergenceResult> {
    let basis = joint_eigenbasis(rho1, rho2);
    let p1 = diagonal_measure(rho1.matrix(), &basis);
    let p2 = diagonal_measure(rho2.matrix(), &basis);
    let value = f.classical_df(&p1, &p2)?;
    let mut res = DivergenceResult::exact(value, SolverPath::CommutingClassical);
    if value == f64::INFINITY {
        res.finite = false;
    } else {
        // the joint eigenbasis itself is an optimal measurement basis
        let slopes = DVector::from_iterator(
            rho1.dim(),
            p1.weights().iter().zip(p2.weights()).map(|(&a, &b)| {
                if b > 0.0 {
                    let t = f.f_prime_right_at(a / b);
                    if t.is_finite() { t } else { f.conj_domain().lo.max(-1e12) }
                } else {
                    f.conj_domain().hi.min(1e12)
                }
            }),
        );
        res.optimizer_t =
            Some(HermitianOperator::from_hermitian_unchecked(from_spectral(&slopes, &basis)));
    }
    Ok(res)
}

fn solve_forced(
    f: &DivergenceGenerator,
    rho1: &DensityOperator,
    rho2: &DensityOperator,
    opts: &SolveOptions,
    forced: SolverPath,
) -> Result<DivergenceResult> {
    let inner = SolveOptions { force_path: None, ..opts.clone() };
    if !finiteness_check(f, rho1, rho2)? {
        return Ok(DivergenceResult::infinite(forced));
    }
    match forced {
        SolverPath::CommutingClassical => {
            if commutator_norm(rho1.matrix(), rho2.matrix()) > COMMUTING_TOL {
                return Err(force_path_error(forced, "the operators do not commute"));
            }
            solve_commuting(f, rho1, rho2)
        }
        SolverPath::ClosedFormF2 => {
            if is_renyi_order(f, 2.0) {
                let (value, t0) = chi2_closed_form(rho1, rho2)?;
                let mut res = DivergenceResult::exact(value, SolverPath::ClosedFormF2);
                res.optimizer_t = Some(t0);
                Ok(res)
            } else if is_renyi_order(f, -1.0) {
                let (value, _) = chi2_closed_form(rho2, rho1)?;
                Ok(DivergenceResult::exact(value, SolverPath::ClosedFormF2))
            } else {
                Err(force_path_error(forced, "family is not renyi with order 2 or -1"))
            }
        }
        SolverPath::ClosedFormFidelity => {
            if !is_renyi_order(f, 0.5) {
                return Err(force_path_error(forced, "family is not renyi with order 1/2"));
            }
            let mut res =
                DivergenceResult::exact(-fidelity(rho1, rho2)?, SolverPath::ClosedFormFidelity);
            res.optimizer_t = fidelity_optimizer(rho1, rho2);
            Ok(res)
        }
        SolverPath::ClosedFormTv => {
            if f.name() != "tv" {
                return Err(force_path_error(forced, "family is not tv"));
            }
            let diff = HermitianOperator::from_hermitian_unchecked(rho1.matrix() - rho2.matrix());
            let mut res = DivergenceResult::exact(trace_norm(&diff), SolverPath::ClosedFormTv);
            res.optimizer_t = Some(tv_optimizer(rho1, rho2));
            Ok(res)
        }
        SolverPath::PureState => {
            if rho1.rank() != 1 {
                return Err(force_path_error(forced, "rho1 is not rank one"));
            }
            kernel_reduce_hypotheses(f)
                .map_err(|e| force_path_error(forced, &e.to_string()))?;
            let n = rho1.dim();
            let phi = rho1.eigenvectors().column(n - 1).into_owned();
            let q = (phi.adjoint() * rho2.matrix() * &phi)[(0, 0)].re.max(0.0);
            let value = weighted_pure_value(f, rho1.trace(), q, rho2.trace());
            let mut res = DivergenceResult::exact(value, SolverPath::PureState);
            res.finite = value.is_finite();
            if !res.finite {
                res.value = f64::INFINITY;
            }
            Ok(res)
        }
        SolverPath::GenericGradient => {
            if !f.cond_i() {
                return Err(force_path_error(forced, "condition (I) fails for this family"));
            }
            reduce_and_ascend(f, rho1, rho2, &inner)
        }
        SolverPath::SwappedGeneric => {
            if !f.cond_ii() {
                return Err(force_path_error(forced, "condition (II) fails for this family"));
            }
            let mut res = reduce_and_ascend(&f.hat(), rho2, rho1, &inner)?;
            res.path = SolverPath::SwappedGeneric;
            Ok(res)
        }
    }
}
