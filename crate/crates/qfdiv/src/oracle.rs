//! Brute-force verification of the solver: direct maximization of the
//! classical f-divergence over rank-1 projective measurements.
//!
//! Any measurement evaluated here yields a valid lower bound on
//! D_f^min(ρ₁‖ρ₂); with enough restarts plus warm starts from the solver's
//! optimizer eigenbasis the search attains the solver value on small
//! dimensions. Bases are parameterized as U = exp(iH)·U_base with H
//! Hermitian (dim² real parameters), refined derivative-free.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::convex::{DiscreteMeasure, DivergenceGenerator};
use crate::matrix::{eigh, identity, max_abs, DensityOperator};
use crate::solver::{self, SolveOptions, COMMUTING_TOL};
use crate::{Error, Result};

/// Allowed deviation of Σ effects from the identity and of each effect from
/// positive semidefiniteness.
pub const MEASUREMENT_TOL: f64 = 1e-10;
/// Outcome probabilities below this are clamped to exactly zero.
pub const PROBABILITY_FLOOR: f64 = 1e-14;

/// A finite-outcome POVM: PSD effects summing to the identity.
#[derive(Debug, Clone)]
pub struct Measurement {
    effects: Vec<DMatrix<Complex64>>,
}

impl Measurement {
    pub fn new(effects: Vec<DMatrix<Complex64>>) -> Result<Self> {
        if effects.is_empty() {
            return Err(Error::InvalidInput("measurement needs at least one effect".into()));
        }
        let dim = effects[0].nrows();
        let mut sum = DMatrix::<Complex64>::zeros(dim, dim);
        for e in &effects {
            if e.nrows() != dim || e.ncols() != dim {
                return Err(Error::DimensionMismatch(e.nrows(), dim));
            }
            let (vals, _) = eigh(&((e + e.adjoint()) * Complex64::new(0.5, 0.0)));
            if let Some(min) = vals.iter().cloned().reduce(f64::min) {
                if min < -MEASUREMENT_TOL {
                    return Err(Error::NotPsd(min));
                }
            }
            sum += e;
        }
        let defect = max_abs(&(&sum - identity(dim)));
        if defect > MEASUREMENT_TOL {
            return Err(Error::InvalidInput(format!(
                "effects sum to identity only within {defect:.3e}"
            )));
        }
        Ok(Measurement { effects })
    }

    /// Rank-1 projective measurement onto the columns of a unitary.
    pub fn from_basis(basis: &DMatrix<Complex64>) -> Self {
        let effects = (0..basis.ncols())
            .map(|k| {
                let col = basis.column(k);
                &col * col.adjoint()
            })
            .collect();
        Measurement { effects }
    }

    pub fn dim(&self) -> usize {
        self.effects[0].nrows()
    }

    pub fn outcomes(&self) -> usize {
        self.effects.len()
    }

    pub fn effects(&self) -> &[DMatrix<Complex64>] {
        &self.effects
    }
}

/// Outcome distributions p_θ(x) = tr ρ_θ M_x, clamped at zero from below.
pub fn induced_distributions(
    m: &Measurement,
    rho1: &DensityOperator,
    rho2: &DensityOperator,
) -> Result<(DiscreteMeasure, DiscreteMeasure)> {
    if m.dim() != rho1.dim() || m.dim() != rho2.dim() {
        return Err(Error::DimensionMismatch(m.dim(), rho1.dim()));
    }
    let probs = |rho: &DensityOperator| {
        DiscreteMeasure::clamped(
            m.effects
                .iter()
                .map(|e| {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for i in 0..e.nrows() {
                        for k in 0..e.ncols() {
                            acc += rho.matrix()[(i, k)] * e[(k, i)];
                        }
                    }
                    acc.re
                })
                .collect(),
            PROBABILITY_FLOOR,
        )
    };
    Ok((probs(rho1), probs(rho2)))
}

/// Classical divergence of the induced distributions.
pub fn measurement_value(
    f: &DivergenceGenerator,
    m: &Measurement,
    rho1: &DensityOperator,
    rho2: &DensityOperator,
) -> Result<f64> {
    let (p1, p2) = induced_distributions(m, rho1, rho2)?;
    f.classical_df(&p1, &p2)
}

/// Classical divergence under the two-outcome projective measurement
/// {|φ₁⟩⟨φ₁|, 1 − |φ₁⟩⟨φ₁|}; equals the pure-state closed form under its
/// hypotheses.
pub fn two_outcome_check(
    f: &DivergenceGenerator,
    phi1: &DVector<Complex64>,
    rho2: &DensityOperator,
) -> Result<f64> {
    let norm = phi1.norm();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::NotUnit(norm));
    }
    if phi1.len() != rho2.dim() {
        return Err(Error::DimensionMismatch(phi1.len(), rho2.dim()));
    }
    let proj = phi1 * phi1.adjoint();
    let rest = identity(phi1.len()) - &proj;
    let m = Measurement { effects: vec![proj, rest] };
    let rho1 = DensityOperator::from_pure(phi1)?;
    measurement_value(f, &m, &rho1, rho2)
}

fn hermitian_from_params(theta: &[f64], dim: usize) -> DMatrix<Complex64> {
    let mut h = DMatrix::zeros(dim, dim);
    let mut idx = 0;
    for i in 0..dim {
        h[(i, i)] = Complex64::new(theta[idx], 0.0);
        idx += 1;
    }
    for i in 0..dim {
        for j in (i + 1)..dim {
            let z = Complex64::new(theta[idx], theta[idx + 1]);
            idx += 2;
            h[(i, j)] = z;
            h[(j, i)] = z.conj();
        }
    }
    h
}

/// exp(iH) through the spectral decomposition of H.
fn unitary_exp(h: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let (vals, vecs) = eigh(h);
    let n = h.nrows();
    let mut scaled = vecs.clone();
    for k in 0..n {
        let phase = Complex64::new(0.0, vals[k]).exp();
        let mut col = scaled.column_mut(k);
        col *= phase;
    }
    scaled * vecs.adjoint()
}

/// Standard Nelder–Mead maximization (reflection/expansion/contraction/
/// shrink) of `obj` starting from `x0`.
fn nelder_mead(
    obj: &impl Fn(&[f64]) -> f64,
    x0: &[f64],
    init_step: f64,
    max_evals: usize,
) -> (Vec<f64>, f64) {
    let n = x0.len();
    let evals = std::cell::Cell::new(0usize);
    let eval = |x: &[f64]| {
        evals.set(evals.get() + 1);
        obj(x)
    };
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let v0 = eval(x0);
    simplex.push((x0.to_vec(), v0));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += init_step;
        let v = eval(&x);
        simplex.push((x, v));
    }

    while evals.get() < max_evals {
        simplex.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
        let spread = simplex[0].1 - simplex[n].1;
        if spread.abs() < 1e-13 * (1.0 + simplex[0].1.abs()) {
            break;
        }
        if simplex[0].1 == f64::INFINITY {
            break;
        }
        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|(x, _)| x[j]).sum::<f64>() / n as f64)
            .collect();
        let worst = simplex[n].clone();
        let at = |coef: f64| -> Vec<f64> {
            (0..n).map(|j| centroid[j] + coef * (centroid[j] - worst.0[j])).collect()
        };

        let xr = at(1.0);
        let vr = eval(&xr);
        if vr > simplex[0].1 {
            let xe = at(2.0);
            let ve = eval(&xe);
            if ve > vr {
                simplex[n] = (xe, ve);
            } else {
                simplex[n] = (xr, vr);
            }
        } else if vr > simplex[n - 1].1 {
            simplex[n] = (xr, vr);
        } else {
            let xc = at(-0.5);
            let vc = eval(&xc);
            if vc > worst.1 {
                simplex[n] = (xc, vc);
            } else {
                let best = simplex[0].0.clone();
                for item in simplex.iter_mut().skip(1) {
                    let shrunk: Vec<f64> = item
                        .0
                        .iter()
                        .zip(&best)
                        .map(|(&x, &b)| b + 0.5 * (x - b))
                        .collect();
                    let v = eval(&shrunk);
                    *item = (shrunk, v);
                }
            }
        }
    }
    simplex.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
    simplex.swap_remove(0)
}

fn refine_from_base(
    f: &DivergenceGenerator,
    rho1: &DensityOperator,
    rho2: &DensityOperator,
    base: &DMatrix<Complex64>,
    init_step: f64,
    max_evals: usize,
) -> (f64, DMatrix<Complex64>) {
    let dim = rho1.dim();
    let nparams = dim * dim;
    let obj = |theta: &[f64]| -> f64 {
        let u = unitary_exp(&hermitian_from_params(theta, dim)) * base;
        let m = Measurement::from_basis(&u);
        measurement_value(f, &m, rho1, rho2).unwrap_or(f64::NEG_INFINITY)
    };
    let (best_theta, best_val) = nelder_mead(&obj, &vec![0.0; nparams], init_step, max_evals);
    let u = unitary_exp(&hermitian_from_params(&best_theta, dim)) * base;
    (best_val, u)
}

/// Warm-start bases: the eigenbasis of the solver's optimizer when one is
/// available, and the joint eigenbasis for commuting pairs.
fn warm_start_bases(
    f: &DivergenceGenerator,
    rho1: &DensityOperator,
    rho2: &DensityOperator,
) -> Vec<DMatrix<Complex64>> {
    let mut bases = Vec::new();
    if let Ok(res) = solver::solve(f, rho1, rho2, &SolveOptions::default()) {
        if let Some(t0) = res.optimizer_t {
            let (_, vecs) = eigh(t0.matrix());
            bases.push(vecs);
        }
    }
    if crate::matrix::commutator_norm(rho1.matrix(), rho2.matrix()) <= COMMUTING_TOL {
        let combined = rho1.matrix() + rho2.matrix() * Complex64::new(std::f64::consts::E, 0.0);
        let (_, vecs) = eigh(&combined);
        bases.push(vecs);
    }
    bases
}

/// Maximizes the classical divergence over rank-1 PVMs from `restarts`
/// random bases plus warm starts. Deterministic for a fixed seed.
///
/// Returns the best value (always a lower bound on D_f^min) and the
/// measurement attaining it.
pub fn pvm_search(
    f: &DivergenceGenerator,
    rho1: &DensityOperator,
    rho2: &DensityOperator,
    restarts: usize,
    seed: u64,
) -> Result<(f64, Measurement)> {
    if rho1.dim() != rho2.dim() {
        return Err(Error::DimensionMismatch(rho1.dim(), rho2.dim()));
    }
    let dim = rho1.dim();
    if dim > 6 {
        return Err(Error::InvalidInput(format!(
            "pvm_search handles dimensions up to 6, got {dim}"
        )));
    }
    let budget = 300 * dim * dim;
    let mut best_val = f64::NEG_INFINITY;
    let mut best_basis = identity(dim);

    for basis in warm_start_bases(f, rho1, rho2) {
        let (v, u) = refine_from_base(f, rho1, rho2, &basis, 0.05, budget);
        if v > best_val {
            best_val = v;
            best_basis = u;
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..restarts {
        // Haar-like start: exp(i·GUE) applied to the reference basis
        let nparams = dim * dim;
        let theta: Vec<f64> = (0..nparams).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        let start = unitary_exp(&hermitian_from_params(&theta, dim));
        let (v, u) = refine_from_base(f, rho1, rho2, &start, 0.3, budget);
        if v > best_val {
            best_val = v;
            best_basis = u;
        }
        if best_val == f64::INFINITY {
            break;
        }
    }

    Ok((best_val, Measurement::from_basis(&best_basis)))
}

/// A POVM with `2·dim` outcomes built from rank-1 effects near the columns
/// of `basis`, randomly perturbed: A_j = w_j w_j†, normalized through
/// S^{−1/2} A_j S^{−1/2} with S = Σ A_j.
///
/// Used to probe that refinements beyond `dim` outcomes do not improve on
/// the best projective measurement.
pub fn random_povm_refinement(
    basis: &DMatrix<Complex64>,
    noise: f64,
    seed: u64,
) -> Result<Measurement> {
    let dim = basis.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut raw: Vec<DMatrix<Complex64>> = Vec::with_capacity(2 * dim);
    let mut sum = DMatrix::<Complex64>::zeros(dim, dim);
    for k in 0..dim {
        for _ in 0..2 {
            let mut w: DVector<Complex64> = basis.column(k).into_owned();
            for i in 0..dim {
                w[i] += Complex64::new(
                    noise * (rng.random::<f64>() - 0.5),
                    noise * (rng.random::<f64>() - 0.5),
                );
            }
            let a = &w * w.adjoint();
            sum += &a;
            raw.push(a);
        }
    }
    let sum_op = DensityOperator::new(sum)?;
    let isqrt = sum_op.pseudo_power(-0.5);
    let effects: Vec<DMatrix<Complex64>> = raw
        .into_iter()
        .map(|a| {
            let e = &isqrt * a * &isqrt;
            (&e + e.adjoint()) * Complex64::new(0.5, 0.0)
        })
        .collect();
    Measurement::new(effects)
}
