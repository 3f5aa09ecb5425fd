//! Sandwiched Rényi asymptotic values, single-copy vs asymptotic gap
//! reports and pure-state Chernoff/Hoeffding bounds.
//!
//! The per-copy asymptotic optimum of the measured Rényi quantity is the
//! sandwiched trace functional
//!
//! ```text
//! |D̃_α| = tr (ρ₂^{(1−α)/2α} ρ₁ ρ₂^{(1−α)/2α})^α          (α ≥ 1/2)
//!        = tr (ρ₁^{α/2(1−α)} ρ₂ ρ₁^{α/2(1−α)})^{1−α}      (α ≤ 1/2)
//! ```
//!
//! with the sign convention of the single-copy generator (negative on
//! 0 < α < 1). Negative matrix powers act as pseudo-inverses on the support;
//! the value is declared +∞ when the sandwiching makes the functional
//! discontinuous: for α > 1 when ker ρ₂ ∩ supp ρ₁ ≠ {0}, for α < 0 when
//! ker ρ₁ ∩ supp ρ₂ ≠ {0}.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::convex::DivergenceGenerator;
use crate::matrix::{commutator_norm, eigh, DensityOperator};
use crate::solver::{solve, SolveOptions, COMMUTING_TOL};
use crate::{Error, Result};

/// Overlap eigenvalue above which two subspaces are considered to intersect.
const INTERSECTION_TOL: f64 = 1e-9;

/// Whether ker(a) ∩ supp(b) is nontrivial: the compressed projector
/// π_supp(b) π_ker(a) π_supp(b) has an eigenvalue 1.
fn kernel_meets_support(a: &DensityOperator, b: &DensityOperator) -> bool {
    if a.is_full_rank() {
        return false;
    }
    let ker_a = crate::matrix::identity(a.dim()) - a.support_projector();
    let supp_b = b.support_projector();
    let m = &supp_b * ker_a * &supp_b;
    let (vals, _) = eigh(&m);
    vals.iter().cloned().fold(0.0, f64::max) >= 1.0 - INTERSECTION_TOL
}

/// tr(M^p) of a PSD matrix. Eigenvalues at roundoff scale are zeroed first;
/// fractional powers would otherwise amplify O(ε) eigensolver residuals.
fn trace_power(m: &DMatrix<Complex64>, p: f64) -> f64 {
    let (vals, _) = eigh(m);
    let max = vals.iter().cloned().fold(0.0, f64::max);
    let cutoff = 32.0 * f64::EPSILON * vals.len() as f64 * max;
    vals.iter().map(|&v| if v > cutoff { v.powf(p) } else { 0.0 }).sum()
}

/// Sandwiched Rényi value D̃_α(ρ₁‖ρ₂). Errors on α ∈ {0, 1}.
pub fn sandwiched_renyi(
    alpha: f64,
    rho1: &DensityOperator,
    rho2: &DensityOperator,
) -> Result<f64> {
    if !alpha.is_finite() || alpha == 0.0 || alpha == 1.0 {
        return Err(Error::InvalidInput(format!(
            "sandwiched Renyi needs alpha outside {{0, 1}}, got {alpha}"
        )));
    }
    if rho1.dim() != rho2.dim() {
        return Err(Error::DimensionMismatch(rho1.dim(), rho2.dim()));
    }
    if alpha > 1.0 && kernel_meets_support(rho2, rho1) {
        return Ok(f64::INFINITY);
    }
    if alpha < 0.0 && kernel_meets_support(rho1, rho2) {
        return Ok(f64::INFINITY);
    }
    let sign = if alpha * (alpha - 1.0) >= 0.0 { 1.0 } else { -1.0 };
    let q = if alpha >= 0.5 {
        let e = (1.0 - alpha) / (2.0 * alpha);
        let power = rho2.pseudo_power(e);
        trace_power(&(&power * rho1.matrix() * &power), alpha)
    } else {
        let e = alpha / (2.0 * (1.0 - alpha));
        let power = rho1.pseudo_power(e);
        trace_power(&(&power * rho2.matrix() * &power), 1.0 - alpha)
    };
    Ok(sign * q)
}

/// Pure-state Chernoff bound C = −2 ln |⟨φ₁|φ₂⟩|; +∞ on zero overlap.
pub fn chernoff_pure(phi1: &DVector<Complex64>, phi2: &DVector<Complex64>) -> Result<f64> {
    for phi in [phi1, phi2] {
        let norm = phi.norm();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::NotUnit(norm));
        }
    }
    if phi1.len() != phi2.len() {
        return Err(Error::DimensionMismatch(phi1.len(), phi2.len()));
    }
    let overlap = (phi1.adjoint() * phi2)[(0, 0)].norm();
    if overlap <= 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(-2.0 * overlap.ln())
}

/// Pure-state Hoeffding bound: C when r ≤ C, +∞ when r > C.
pub fn hoeffding_pure(
    phi1: &DVector<Complex64>,
    phi2: &DVector<Complex64>,
    r: f64,
) -> Result<f64> {
    let c = chernoff_pure(phi1, phi2)?;
    Ok(if r <= c { c } else { f64::INFINITY })
}

/// Comparison between the single-copy optimum and the asymptotic per-copy
/// optimum at Rényi order α.
#[derive(Debug, Clone)]
pub struct GapReport {
    pub alpha: f64,
    /// ln |D_f^min(ρ₁‖ρ₂)| from the single-copy solver.
    pub single_copy_log: f64,
    /// ln |D̃_α(ρ₁‖ρ₂)|.
    pub asymptotic_log: f64,
    /// Advantage of collective measurements; nonnegative up to roundoff.
    /// For α > 1 (and α < 0) this is asymptotic − single-copy; on 0 < α < 1
    /// the divergence is negative and smaller magnitude is better, so the
    /// roles reverse.
    pub gap: f64,
    pub commuting: bool,
}

/// Computes both optima and their log-magnitude gap.
pub fn gap_report(
    alpha: f64,
    rho1: &DensityOperator,
    rho2: &DensityOperator,
) -> Result<GapReport> {
    let f = DivergenceGenerator::renyi(alpha)?;
    let single = solve(&f, rho1, rho2, &SolveOptions::default())?;
    if !single.finite {
        return Err(Error::InvalidInput(
            "single-copy divergence is infinite; no finite gap to report".into(),
        ));
    }
    let asym = sandwiched_renyi(alpha, rho1, rho2)?;
    if !asym.is_finite() {
        return Err(Error::InvalidInput(
            "sandwiched Renyi value is infinite; no finite gap to report".into(),
        ));
    }
    let single_copy_log = single.value.abs().ln();
    let asymptotic_log = asym.abs().ln();
    let gap = if alpha > 0.0 && alpha < 1.0 {
        single_copy_log - asymptotic_log
    } else {
        asymptotic_log - single_copy_log
    };
    Ok(GapReport {
        alpha,
        single_copy_log,
        asymptotic_log,
        gap,
        commuting: commutator_norm(rho1.matrix(), rho2.matrix()) <= COMMUTING_TOL,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::test_support::{random_density, random_unit};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cx(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn diag2(a: f64, b: f64) -> DensityOperator {
        DensityOperator::new(DMatrix::from_row_slice(
            2,
            2,
            &[cx(a), cx(0.0), cx(0.0), cx(b)],
        ))
        .unwrap()
    }

    #[test]
    fn commuting_pairs_give_classical_power_sums() {
        let rho1 = diag2(0.7, 0.3);
        let rho2 = diag2(0.5, 0.5);
        let v2 = sandwiched_renyi(2.0, &rho1, &rho2).unwrap();
        assert!((v2 - 1.16).abs() < 1e-12, "got {v2}");
        // 0 < α < 1: sign is negative and the magnitude is Σ p^α q^{1−α}
        let v03 = sandwiched_renyi(0.3, &rho1, &rho2).unwrap();
        let expected: f64 =
            -(0.7f64.powf(0.3) * 0.5f64.powf(0.7) + 0.3f64.powf(0.3) * 0.5f64.powf(0.7));
        assert!((v03 - expected).abs() < 1e-12);
        // both display branches agree at α = 1/2
        let lhs = sandwiched_renyi(0.5, &rho1, &rho2).unwrap();
        let rhs = -(0.7f64.sqrt() * 0.5f64.sqrt() + 0.3f64.sqrt() * 0.5f64.sqrt());
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn normalized_self_pair_gives_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        let rho = random_density(&mut rng, 3);
        let v = sandwiched_renyi(2.0, &rho, &rho).unwrap();
        assert!((v - 1.0).abs() < 1e-10);
    }

    #[test]
    fn support_conditions_give_infinity() {
        let pure = diag2(1.0, 0.0);
        let other = diag2(0.0, 1.0);
        assert_eq!(sandwiched_renyi(2.0, &pure, &other).unwrap(), f64::INFINITY);
        assert_eq!(sandwiched_renyi(-1.0, &other, &pure).unwrap(), f64::INFINITY);
        // 0 < α < 1 is always finite
        assert!(sandwiched_renyi(0.3, &pure, &other).unwrap().is_finite());
        // overlapping-but-not-nested supports stay finite for α > 1
        let plus = DensityOperator::new(DMatrix::from_row_slice(
            2,
            2,
            &[cx(0.5), cx(0.5), cx(0.5), cx(0.5)],
        ))
        .unwrap();
        assert!(sandwiched_renyi(2.0, &plus, &diag2(0.4, 0.6)).unwrap().is_finite());
        assert_eq!(sandwiched_renyi(2.0, &diag2(0.4, 0.6), &plus).unwrap(), f64::INFINITY);
    }

    #[test]
    fn rejects_degenerate_orders() {
        let rho = diag2(0.5, 0.5);
        assert!(sandwiched_renyi(0.0, &rho, &rho).is_err());
        assert!(sandwiched_renyi(1.0, &rho, &rho).is_err());
    }

    #[test]
    fn chernoff_and_hoeffding_cases() {
        let e0 = DVector::from_column_slice(&[cx(1.0), cx(0.0)]);
        assert_eq!(chernoff_pure(&e0, &e0).unwrap(), 0.0);

        let overlap = (-1.0f64).exp();
        let phi2 = DVector::from_column_slice(&[
            cx(overlap),
            cx((1.0 - overlap * overlap).sqrt()),
        ]);
        let c = chernoff_pure(&e0, &phi2).unwrap();
        assert!((c - 2.0).abs() < 1e-12);
        assert!((hoeffding_pure(&e0, &phi2, 1.9).unwrap() - 2.0).abs() < 1e-12);
        assert!((hoeffding_pure(&e0, &phi2, 2.0).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(hoeffding_pure(&e0, &phi2, 3.0).unwrap(), f64::INFINITY);

        let e1 = DVector::from_column_slice(&[cx(0.0), cx(1.0)]);
        assert_eq!(chernoff_pure(&e0, &e1).unwrap(), f64::INFINITY);
    }

    #[test]
    fn gap_zero_on_commuting_pairs() {
        let report = gap_report(2.0, &diag2(0.7, 0.3), &diag2(0.5, 0.5)).unwrap();
        assert!(report.commuting);
        assert!(report.gap.abs() <= 1e-9, "gap {}", report.gap);
    }

    #[test]
    fn gap_positive_on_noncommuting_witness() {
        let rho1 = DensityOperator::new(DMatrix::from_row_slice(
            2,
            2,
            &[cx(0.5), cx(0.4), cx(0.4), cx(0.5)],
        ))
        .unwrap();
        let rho2 = diag2(0.7, 0.3);
        let report = gap_report(2.0, &rho1, &rho2).unwrap();
        assert!(!report.commuting);
        assert!(report.gap >= 1e-6, "gap {}", report.gap);
    }

    #[test]
    fn gap_zero_for_pure_first_argument_small_alpha() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let phi = random_unit(&mut rng, 2);
        let rho1 = DensityOperator::from_pure(&phi).unwrap();
        let rho2 = random_density(&mut rng, 2);
        for alpha in [0.3, 0.5] {
            let report = gap_report(alpha, &rho1, &rho2).unwrap();
            assert!(report.gap.abs() <= 1e-9, "alpha {alpha}: gap {}", report.gap);
        }
    }

    #[test]
    fn gap_nonnegative_on_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(64);
        for _ in 0..10 {
            let r1 = random_density(&mut rng, 2);
            let r2 = random_density(&mut rng, 2);
            for alpha in [0.3, 2.0] {
                let report = gap_report(alpha, &r1, &r2).unwrap();
                assert!(report.gap >= -1e-8, "alpha {alpha}: gap {}", report.gap);
            }
        }
    }
}
