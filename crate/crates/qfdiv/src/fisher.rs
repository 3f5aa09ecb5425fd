//! SLD Fisher information and numerical verification of the second-order
//! expansion of the measured divergence between infinitesimally close
//! states.
//!
//! For a smooth constant-rank family ρ_η and a generator f that is three
//! times differentiable near 1 with f″(1) > 0,
//!
//! ```text
//! lim_{h→0} (D_f^min(ρ_η ‖ ρ_{η+h}) − f(1)) / h²
//!     = ½ f″(1) · tr ρ (L¹)²  +  ¼ (f′(1) − f(1) + f(0)) · tr ρ L²†L²
//! ```
//!
//! where L is the symmetric logarithmic derivative, L¹ = πLπ its support
//! block and L² = (1−π)Lπ the support→kernel coupling. For full-rank or
//! pure families this collapses to a constant multiple of the SLD Fisher
//! information J_S = tr ρL²; for intermediate ranks the two blocks carry
//! different weights and the naive ½f″(1)·J_S prediction is wrong.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::convex::DivergenceGenerator;
use crate::matrix::{max_abs, trace_product_re, DensityOperator, HermitianOperator};
use crate::solver::{solve, SolveOptions};
use crate::{Error, Result};

/// Allowed |tr dρ| relative to the scale of dρ.
const TRACELESS_TOL: f64 = 1e-9;
/// Allowed magnitude of the kernel-kernel block of dρ (constant rank).
const KERNEL_BLOCK_TOL: f64 = 1e-8;
/// Step for the central-difference estimate of dρ/dη.
const DRHO_STEP: f64 = 1e-5;

/// A state with its first derivative along a one-parameter family.
#[derive(Debug, Clone)]
pub struct StatePair1Jet {
    rho: DensityOperator,
    drho: HermitianOperator,
}

impl StatePair1Jet {
    /// Validates Hermiticity of dρ, tr dρ ≈ 0, and that the kernel-kernel
    /// block of dρ vanishes (otherwise the rank of the family changes).
    pub fn new(rho: DensityOperator, drho: HermitianOperator) -> Result<Self> {
        if rho.dim() != drho.dim() {
            return Err(Error::DimensionMismatch(rho.dim(), drho.dim()));
        }
        let scale = max_abs(drho.matrix()).max(1.0);
        let trace: f64 = (0..drho.dim()).map(|i| drho.matrix()[(i, i)].re).sum();
        if trace.abs() > TRACELESS_TOL * scale {
            return Err(Error::InvalidInput(format!(
                "drho must be traceless, got trace {trace:.3e}"
            )));
        }
        let kernel = rho.dim() - rho.rank();
        if kernel > 0 {
            let vecs = rho.eigenvectors();
            let rotated = vecs.adjoint() * drho.matrix() * vecs;
            let mut worst = 0.0f64;
            for i in 0..kernel {
                for j in 0..kernel {
                    worst = worst.max(rotated[(i, j)].norm());
                }
            }
            if worst > KERNEL_BLOCK_TOL * scale {
                return Err(Error::RankChange(format!(
                    "kernel-kernel block of drho has magnitude {worst:.3e}"
                )));
            }
        }
        Ok(StatePair1Jet { rho, drho })
    }

    pub fn rho(&self) -> &DensityOperator {
        &self.rho
    }

    pub fn drho(&self) -> &HermitianOperator {
        &self.drho
    }
}

/// Symmetric logarithmic derivative: the Hermitian L with
/// ½(Lρ + ρL) = dρ on supp ρ, zero on the kernel-kernel block.
/// In ρ's eigenbasis Lᵢⱼ = 2·dρᵢⱼ/(rᵢ + rⱼ) wherever rᵢ + rⱼ > 0.
pub fn sld(jet: &StatePair1Jet) -> HermitianOperator {
    let rho = &jet.rho;
    let n = rho.dim();
    let kernel = n - rho.rank();
    let vecs = rho.eigenvectors();
    let vals = rho.eigenvalues();
    let d = vecs.adjoint() * jet.drho.matrix() * vecs;
    let mut l = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i < kernel && j < kernel {
                continue;
            }
            let denom = vals[i] + vals[j];
            if denom > 0.0 {
                l[(i, j)] = d[(i, j)] * Complex64::new(2.0 / denom, 0.0);
            }
        }
    }
    let back = vecs * l * vecs.adjoint();
    HermitianOperator::from_hermitian_unchecked(
        (&back + back.adjoint()) * Complex64::new(0.5, 0.0),
    )
}

/// The SLD split into its support block and support→kernel coupling.
#[derive(Debug, Clone)]
pub struct SldComponents {
    /// L¹ = π L π (Hermitian).
    pub l1: HermitianOperator,
    /// L² = (1−π) L π; not Hermitian, returned as a raw matrix.
    pub l2: DMatrix<Complex64>,
    /// J_S = tr ρ L².
    pub j_s: f64,
    /// tr ρ (L¹)².
    pub j1: f64,
    /// tr ρ (L²†L² + L²L²†); the second summand vanishes identically, so
    /// this equals tr ρ L²†L² and J_S = J1 + J2.
    pub j2: f64,
}

/// Computes L¹, L² and the Fisher quantities J_S, J1, J2.
pub fn sld_components(jet: &StatePair1Jet) -> SldComponents {
    let l = sld(jet);
    let rho = &jet.rho;
    let pi = rho.support_projector();
    let compl = crate::matrix::identity(rho.dim()) - &pi;
    let l1_mat = &pi * l.matrix() * &pi;
    let l2 = &compl * l.matrix() * &pi;
    let j_s = trace_product_re(rho.matrix(), &(l.matrix() * l.matrix()));
    let j1 = trace_product_re(rho.matrix(), &(&l1_mat * &l1_mat));
    let sym = l2.adjoint() * &l2 + &l2 * l2.adjoint();
    let j2 = trace_product_re(rho.matrix(), &sym);
    SldComponents {
        l1: HermitianOperator::from_hermitian_unchecked(
            (&l1_mat + l1_mat.adjoint()) * Complex64::new(0.5, 0.0),
        ),
        l2,
        j_s,
        j1,
        j2,
    }
}

/// Outcome of [`second_order_check`].
#[derive(Debug, Clone)]
pub struct SecondOrderReport {
    /// Richardson-extrapolated limit of (D_f^min(ρ_η‖ρ_{η+h}) − f(1))/h².
    pub lhs: f64,
    /// ½f″(1)·J1 + ¼(f′(1) − f(1) + f(0))·J2.
    pub rhs: f64,
    pub gap: f64,
    /// Single-grid estimate at step h, before extrapolation.
    pub lhs_at_h: f64,
    /// The naive prediction ½f″(1)·J_S (exact only for full-rank or pure).
    pub naive_rhs: f64,
    pub j_s: f64,
    pub j1: f64,
    pub j2: f64,
    pub rank: usize,
}

fn state_at(family: &dyn Fn(f64) -> DMatrix<Complex64>, eta: f64) -> Result<DensityOperator> {
    DensityOperator::new(family(eta))
}

fn divergence_quotient(
    f: &DivergenceGenerator,
    rho0: &DensityOperator,
    family: &dyn Fn(f64) -> DMatrix<Complex64>,
    eta0: f64,
    h: f64,
    rank: usize,
) -> Result<f64> {
    let shifted = state_at(family, eta0 + h)?;
    if shifted.rank() != rank {
        return Err(Error::RankChange(format!(
            "rank {} at eta {} vs {} at base point",
            shifted.rank(),
            eta0 + h,
            rank
        )));
    }
    let res = solve(f, rho0, &shifted, &SolveOptions::default())?;
    if !res.finite {
        return Err(Error::InvalidInput(
            "divergence is infinite along the family; second-order limit undefined".into(),
        ));
    }
    Ok((res.value - f.f_at(1.0) * rho0.trace()) / (h * h))
}

/// Verifies the second-order expansion: evaluates the divergence quotient at
/// steps h and h/2 with Richardson extrapolation (the remainder is O(h)),
/// estimates dρ by a Hermitized central difference, and compares against the
/// weighted block formula.
pub fn second_order_check(
    f: &DivergenceGenerator,
    family: &dyn Fn(f64) -> DMatrix<Complex64>,
    eta0: f64,
    h: f64,
) -> Result<SecondOrderReport> {
    if !(h > 0.0) {
        return Err(Error::InvalidInput(format!("step must be positive, got {h}")));
    }
    let curvature = f.f_second_at_one().ok_or(Error::PreconditionFailed {
        op: "second_order_check",
        reason: "generator is not twice differentiable at 1".into(),
    })?;
    if curvature <= 0.0 {
        return Err(Error::PreconditionFailed {
            op: "second_order_check",
            reason: "f''(1) must be positive".into(),
        });
    }
    if !f.cond_i() {
        return Err(Error::PreconditionFailed {
            op: "second_order_check",
            reason: "the conjugate must be operator convex (condition I)".into(),
        });
    }
    let rho0 = state_at(family, eta0)?;
    let rank = rho0.rank();
    if rank < rho0.dim() && f.conj_domain().is_bounded_below() {
        return Err(Error::PreconditionFailed {
            op: "second_order_check",
            reason: "rank-deficient family needs dom f* unbounded below".into(),
        });
    }

    let lhs_at_h = divergence_quotient(f, &rho0, family, eta0, h, rank)?;
    let lhs_half = divergence_quotient(f, &rho0, family, eta0, 0.5 * h, rank)?;
    let lhs = 2.0 * lhs_half - lhs_at_h;

    // dρ by central differences, Hermitized
    let plus = family(eta0 + DRHO_STEP);
    let minus = family(eta0 - DRHO_STEP);
    let raw = (&plus - &minus) / Complex64::new(2.0 * DRHO_STEP, 0.0);
    let drho = HermitianOperator::new((&raw + raw.adjoint()) * Complex64::new(0.5, 0.0))?;
    let jet = StatePair1Jet::new(rho0, drho)?;
    let comps = sld_components(&jet);

    let weight1 = 0.5 * curvature;
    let weight2 =
        0.25 * (f.f_prime_right_at(1.0) - f.f_at(1.0) + f.f_at_zero());
    let rhs = weight1 * comps.j1 + weight2 * comps.j2;
    let naive_rhs = weight1 * comps.j_s;

    Ok(SecondOrderReport {
        lhs,
        rhs,
        gap: (lhs - rhs).abs(),
        lhs_at_h,
        naive_rhs,
        j_s: comps.j_s,
        j1: comps.j1,
        j2: comps.j2,
        rank,
    })
}

/// Second-order check from three sampled matrices at η₀ − h, η₀, η₀ + h.
///
/// With only one step available the divergence quotient cannot be
/// Richardson-extrapolated; `lhs` equals `lhs_at_h` and dρ is estimated by
/// the central difference of the two outer samples.
pub fn three_point_report(
    f: &DivergenceGenerator,
    rho_minus: &DMatrix<Complex64>,
    rho_zero: &DMatrix<Complex64>,
    rho_plus: &DMatrix<Complex64>,
    h: f64,
) -> Result<SecondOrderReport> {
    if !(h > 0.0) {
        return Err(Error::InvalidInput(format!("step must be positive, got {h}")));
    }
    let curvature = f.f_second_at_one().ok_or(Error::PreconditionFailed {
        op: "three_point_report",
        reason: "generator is not twice differentiable at 1".into(),
    })?;
    let rho0 = DensityOperator::new(rho_zero.clone())?;
    let minus = DensityOperator::new(rho_minus.clone())?;
    let plus = DensityOperator::new(rho_plus.clone())?;
    if minus.rank() != rho0.rank() || plus.rank() != rho0.rank() {
        return Err(Error::RankChange(format!(
            "ranks {}, {}, {} across the three samples",
            minus.rank(),
            rho0.rank(),
            plus.rank()
        )));
    }
    if rho0.rank() < rho0.dim() && f.conj_domain().is_bounded_below() {
        return Err(Error::PreconditionFailed {
            op: "three_point_report",
            reason: "rank-deficient family needs dom f* unbounded below".into(),
        });
    }
    let res = solve(f, &rho0, &plus, &SolveOptions::default())?;
    if !res.finite {
        return Err(Error::InvalidInput(
            "divergence is infinite along the family; second-order limit undefined".into(),
        ));
    }
    let lhs = (res.value - f.f_at(1.0) * rho0.trace()) / (h * h);

    let raw = (plus.matrix() - minus.matrix()) / Complex64::new(2.0 * h, 0.0);
    let drho = HermitianOperator::new((&raw + raw.adjoint()) * Complex64::new(0.5, 0.0))?;
    let rank = rho0.rank();
    let jet = StatePair1Jet::new(rho0, drho)?;
    let comps = sld_components(&jet);
    let weight1 = 0.5 * curvature;
    let weight2 = 0.25 * (f.f_prime_right_at(1.0) - f.f_at(1.0) + f.f_at_zero());
    let rhs = weight1 * comps.j1 + weight2 * comps.j2;
    Ok(SecondOrderReport {
        lhs,
        rhs,
        gap: (lhs - rhs).abs(),
        lhs_at_h: lhs,
        naive_rhs: weight1 * comps.j_s,
        j_s: comps.j_s,
        j1: comps.j1,
        j2: comps.j2,
        rank,
    })
}

/// Named one-parameter state families for the CLI and the test suite.
pub mod families {
    use super::*;

    fn cx(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    /// Full-rank qubit: a fixed mixture diag(0.75, 0.25) rotated by angle η.
    pub fn rotating_qubit(eta: f64) -> DMatrix<Complex64> {
        let (c, s) = (eta.cos(), eta.sin());
        let u = DMatrix::from_row_slice(2, 2, &[cx(c), cx(-s), cx(s), cx(c)]);
        let d = DMatrix::from_row_slice(2, 2, &[cx(0.75), cx(0.0), cx(0.0), cx(0.25)]);
        &u * d * u.adjoint()
    }

    /// Commuting binary mixture diag(1−η, η).
    pub fn binary_mixture(eta: f64) -> DMatrix<Complex64> {
        DMatrix::from_row_slice(2, 2, &[cx(1.0 - eta), cx(0.0), cx(0.0), cx(eta)])
    }

    /// Pure qubit |φ_η⟩ = cos η|0⟩ + sin η|1⟩.
    pub fn pure_qubit(eta: f64) -> DMatrix<Complex64> {
        let v = DVector::from_column_slice(&[cx(eta.cos()), cx(eta.sin())]);
        &v * v.adjoint()
    }

    /// Rank-2 state in dimension 3 mixing support rotation (the pure
    /// component leans into the kernel direction as η moves) with weight
    /// transfer inside the support.
    pub fn rank2_in_3d(eta: f64) -> DMatrix<Complex64> {
        let c = 1.5;
        let w = 0.3 + 0.4 * eta;
        let psi = DVector::from_column_slice(&[cx((c * eta).cos()), cx(0.0), cx((c * eta).sin())]);
        let e1 = DVector::from_column_slice(&[cx(0.0), cx(1.0), cx(0.0)]);
        (&psi * psi.adjoint()) * cx(1.0 - w) + (&e1 * e1.adjoint()) * cx(w)
    }

    /// Looks up a family by its CLI name.
    pub fn by_name(name: &str) -> Option<fn(f64) -> DMatrix<Complex64>> {
        match name {
            "rotating-qubit" => Some(rotating_qubit),
            "binary-mixture" => Some(binary_mixture),
            "pure-qubit" => Some(pure_qubit),
            "rank2-in-3d" => Some(rank2_in_3d),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::test_support::{random_density, random_hermitian};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cx(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn jet_from_family(
        family: &dyn Fn(f64) -> DMatrix<Complex64>,
        eta: f64,
    ) -> StatePair1Jet {
        let rho = DensityOperator::new(family(eta)).unwrap();
        let raw = (family(eta + DRHO_STEP) - family(eta - DRHO_STEP))
            / Complex64::new(2.0 * DRHO_STEP, 0.0);
        let drho =
            HermitianOperator::new((&raw + raw.adjoint()) * Complex64::new(0.5, 0.0)).unwrap();
        StatePair1Jet::new(rho, drho).unwrap()
    }

    #[test]
    fn sld_of_maximally_mixed_qubit_is_twice_drho() {
        // ρ = I/2, dρ = σ_z/2 → L = σ_z
        let rho = DensityOperator::new(DMatrix::from_row_slice(
            2,
            2,
            &[cx(0.5), cx(0.0), cx(0.0), cx(0.5)],
        ))
        .unwrap();
        let drho = HermitianOperator::new(DMatrix::from_row_slice(
            2,
            2,
            &[cx(0.5), cx(0.0), cx(0.0), cx(-0.5)],
        ))
        .unwrap();
        let jet = StatePair1Jet::new(rho, drho).unwrap();
        let l = sld(&jet);
        assert!((l.matrix()[(0, 0)].re - 1.0).abs() < 1e-12);
        assert!((l.matrix()[(1, 1)].re + 1.0).abs() < 1e-12);
    }

    #[test]
    fn sld_residual_small_on_random_full_rank_jets() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..8 {
            let rho = random_density(&mut rng, 3);
            let mut d = random_hermitian(&mut rng, 3, 0.1);
            let tr: f64 = (0..3).map(|i| d[(i, i)].re).sum();
            for i in 0..3 {
                d[(i, i)] -= cx(tr / 3.0);
            }
            let jet = StatePair1Jet::new(rho.clone(), HermitianOperator::new(d.clone()).unwrap())
                .unwrap();
            let l = sld(&jet);
            let residual = (l.matrix() * rho.matrix() + rho.matrix() * l.matrix())
                * Complex64::new(0.5, 0.0)
                - &d;
            assert!(max_abs(&residual) < 1e-10);
        }
    }

    #[test]
    fn pure_family_has_vanishing_support_block() {
        let jet = jet_from_family(&families::pure_qubit, 0.4);
        let comps = sld_components(&jet);
        assert!(comps.j1.abs() < 1e-8, "J1 = {}", comps.j1);
        assert!((comps.j2 - comps.j_s).abs() < 1e-8);
        // ⟨φ̇|φ̇⟩ = 1 for this family, so J_S = 4
        assert!((comps.j_s - 4.0).abs() < 1e-4, "J_S = {}", comps.j_s);
    }

    #[test]
    fn full_rank_family_has_no_kernel_coupling() {
        let jet = jet_from_family(&families::rotating_qubit, 0.3);
        let comps = sld_components(&jet);
        assert!(max_abs(&comps.l2) < 1e-10);
        assert!((comps.j1 - comps.j_s).abs() < 1e-10);
    }

    #[test]
    fn binary_mixture_matches_classical_fisher_information() {
        let jet = jet_from_family(&families::binary_mixture, 0.3);
        let comps = sld_components(&jet);
        let expected = 1.0 / 0.3 + 1.0 / 0.7;
        assert!((comps.j_s - expected).abs() < 1e-6, "J_S = {}", comps.j_s);
    }

    #[test]
    fn jet_rejects_rank_changing_derivative() {
        // ρ rank-1 but dρ has a kernel-kernel component
        let rho = DensityOperator::new(DMatrix::from_row_slice(
            2,
            2,
            &[cx(1.0), cx(0.0), cx(0.0), cx(0.0)],
        ))
        .unwrap();
        let bad = HermitianOperator::new(DMatrix::from_row_slice(
            2,
            2,
            &[cx(-0.1), cx(0.0), cx(0.0), cx(0.1)],
        ))
        .unwrap();
        assert!(matches!(StatePair1Jet::new(rho, bad), Err(Error::RankChange(_))));
    }

    #[test]
    fn second_order_full_rank_fidelity_is_eighth_of_fisher() {
        let f = DivergenceGenerator::renyi(0.5).unwrap();
        let report =
            second_order_check(&f, &families::rotating_qubit, 0.3, 1e-3).unwrap();
        let target = report.j_s / 8.0;
        assert!(
            (report.lhs - target).abs() <= 5e-3 * target.abs(),
            "lhs {} vs J_S/8 {}",
            report.lhs,
            target
        );
        assert!((report.rhs - target).abs() < 1e-9);
    }

    #[test]
    fn second_order_pure_family_keeps_only_the_kernel_term() {
        let f = DivergenceGenerator::renyi(0.3).unwrap();
        let report = second_order_check(&f, &families::pure_qubit, 0.2, 1e-3).unwrap();
        // closed form: −cos^{2(1−α)} h expands to (1−α)·J2/4 with J2 = 4
        let expected = 0.25 * (1.0 - 0.3) * report.j2;
        assert!(
            (report.lhs - expected).abs() <= 5e-3 * expected.abs(),
            "lhs {} vs {}",
            report.lhs,
            expected
        );
        assert!((report.rhs - expected).abs() < 1e-9);
    }

    #[test]
    fn second_order_rank2_needs_the_block_weights() {
        let alpha = 0.3;
        let f = DivergenceGenerator::renyi(alpha).unwrap();
        let report = second_order_check(&f, &families::rank2_in_3d, 0.2, 1e-3).unwrap();
        assert_eq!(report.rank, 2);
        // weights α(1−α)/2 and (1−α)/4
        let expected = 0.5 * alpha * (1.0 - alpha) * report.j1 + 0.25 * (1.0 - alpha) * report.j2;
        assert!((report.rhs - expected).abs() < 1e-9);
        assert!(report.gap <= 1e-2, "gap {}", report.gap);
        // the naive prediction misses by an order of magnitude more
        assert!((report.lhs - report.naive_rhs).abs() >= 0.1);
    }

    #[test]
    fn second_order_rejects_unsuitable_generators() {
        let tv = DivergenceGenerator::tv();
        assert!(second_order_check(&tv, &families::rotating_qubit, 0.1, 1e-3).is_err());
        let kl = DivergenceGenerator::kl();
        assert!(second_order_check(&kl, &families::rotating_qubit, 0.1, 1e-3).is_err());
        // rank-deficient family with a bounded-below conjugate domain
        let fb = DivergenceGenerator::fb();
        assert!(second_order_check(&fb, &families::pure_qubit, 0.1, 1e-3).is_err());
    }

    #[test]
    fn fb_weights_are_one_and_quarter() {
        let fb = DivergenceGenerator::fb();
        assert_eq!(fb.f_second_at_one(), Some(2.0));
        assert_eq!(fb.f_prime_right_at(1.0), 0.0);
        assert_eq!(fb.f_at(1.0), 0.0);
        assert_eq!(fb.f_at_zero(), 1.0);
        let w1 = 0.5 * fb.f_second_at_one().unwrap();
        let w2 = 0.25 * (fb.f_prime_right_at(1.0) - fb.f_at(1.0) + fb.f_at_zero());
        assert_eq!(w1, 1.0);
        assert_eq!(w2, 0.25);
    }

    #[test]
    fn renyi_weight_identity() {
        for alpha in [0.1, 0.25, 0.3, 0.5] {
            let f = DivergenceGenerator::renyi(alpha).unwrap();
            let w1 = 0.5 * f.f_second_at_one().unwrap();
            assert!((w1 - 0.5 * alpha * (1.0 - alpha)).abs() < 1e-14);
            let w2 = 0.25 * (f.f_prime_right_at(1.0) - f.f_at(1.0) + f.f_at_zero());
            assert!((w2 - 0.25 * (1.0 - alpha)).abs() < 1e-14);
        }
    }

    #[test]
    fn second_order_fb_full_rank_reduces_to_fisher() {
        let fb = DivergenceGenerator::fb();
        let report = second_order_check(&fb, &families::rotating_qubit, 0.3, 1e-3).unwrap();
        let target = report.j_s; // ½·f″(1) = 1
        assert!(
            (report.lhs - target).abs() <= 5e-3 * target.abs(),
            "lhs {} vs J_S {}",
            report.lhs,
            target
        );
    }

    #[test]
    fn second_order_chi2_full_rank_reduces_to_fisher() {
        let f2 = DivergenceGenerator::renyi(2.0).unwrap();
        let report = second_order_check(&f2, &families::rotating_qubit, 0.3, 1e-3).unwrap();
        let target = report.j_s; // ½·f″(1) = 1 for the χ² generator too
        assert!((report.rhs - target).abs() < 1e-10);
        assert!(
            (report.lhs - target).abs() <= 5e-3 * target.abs(),
            "lhs {} vs J_S {}",
            report.lhs,
            target
        );
    }
}
