//! Hermitian linear algebra: density operators with cached spectral data,
//! operator functions h(T), Fréchet derivatives via first divided
//! differences, symmetric Lyapunov solves, square roots, trace norm and
//! fidelity.
//!
//! The eigendecomposition is the single matrix-function primitive here;
//! problem sizes are desk-scale dense Hermitian matrices, for which the
//! spectral route is exact to solver tolerance.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::convex::Interval;
use crate::{Error, Result};

/// Max absolute deviation ‖A − A†‖_max allowed at construction.
pub const HERMITICITY_TOL: f64 = 1e-12;
/// Most negative eigenvalue tolerated for a PSD input.
pub const PSD_TOL: f64 = 1e-10;
/// Scale factor of the rank cutoff: eig > dim·RANK_TOL·max_eig is support.
pub const RANK_TOL: f64 = 1e-10;
/// Allowed violation of a declared spectral box.
pub const BOX_TOL: f64 = 1e-9;
/// Allowed violation of πCπ = C in the Lyapunov solver.
pub const SUPPORT_TOL: f64 = 1e-9;

pub(crate) fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub(crate) fn hermiticity_defect(m: &DMatrix<Complex64>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

fn check_square(m: &DMatrix<Complex64>) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare { rows: m.nrows(), cols: m.ncols() });
    }
    Ok(m.nrows())
}

/// Hermitian eigendecomposition with eigenvalues sorted ascending.
pub(crate) fn eigh(m: &DMatrix<Complex64>) -> (DVector<f64>, DMatrix<Complex64>) {
    let n = m.nrows();
    if n == 0 {
        return (DVector::zeros(0), DMatrix::zeros(0, 0));
    }
    let sym = nalgebra::linalg::SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| sym.eigenvalues[a].partial_cmp(&sym.eigenvalues[b]).unwrap());
    let vals = DVector::from_iterator(n, order.iter().map(|&i| sym.eigenvalues[i]));
    let mut vecs = DMatrix::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        vecs.set_column(k, &sym.eigenvectors.column(i));
    }
    (vals, vecs)
}

/// Rebuild U diag(vals) U†.
pub(crate) fn from_spectral(vals: &DVector<f64>, vecs: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let n = vals.len();
    let mut scaled = vecs.clone();
    for k in 0..n {
        let c = Complex64::new(vals[k], 0.0);
        let mut col = scaled.column_mut(k);
        col *= c;
    }
    scaled * vecs.adjoint()
}

pub(crate) fn identity(n: usize) -> DMatrix<Complex64> {
    DMatrix::identity(n, n)
}

/// Re tr(AB); exact trace for products of Hermitian matrices.
pub(crate) fn trace_product_re(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..a.nrows() {
        for k in 0..a.ncols() {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc.re
}

pub(crate) fn commutator_norm(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    max_abs(&(a * b - b * a))
}

/// A positive-semidefinite Hermitian operator with cached spectral data.
///
/// The trace is not required to be 1: positive finite operators are legal
/// inputs everywhere (divergences extend to them by positive homogeneity).
#[derive(Debug, Clone)]
pub struct DensityOperator {
    mat: DMatrix<Complex64>,
    eigvals: DVector<f64>,
    eigvecs: DMatrix<Complex64>,
    rank: usize,
}

impl DensityOperator {
    /// Validates Hermiticity (within 1e−12) and positivity (min eigenvalue
    /// ≥ −1e−10, then clamped to 0) and caches the spectral decomposition.
    pub fn new(mat: DMatrix<Complex64>) -> Result<Self> {
        check_square(&mat)?;
        let defect = hermiticity_defect(&mat);
        if defect > HERMITICITY_TOL {
            return Err(Error::NotHermitian(defect));
        }
        let herm = (&mat + mat.adjoint()) * Complex64::new(0.5, 0.0);
        let (mut vals, vecs) = eigh(&herm);
        if let Some(min) = vals.iter().cloned().reduce(f64::min) {
            if min < -PSD_TOL {
                return Err(Error::NotPsd(min));
            }
        }
        for v in vals.iter_mut() {
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        let max = vals.iter().cloned().fold(0.0, f64::max);
        let cutoff = mat.nrows() as f64 * RANK_TOL * max;
        let rank = vals.iter().filter(|&&v| v > cutoff).count();
        Ok(DensityOperator { mat: herm, eigvals: vals, eigvecs: vecs, rank })
    }

    pub fn from_pure(phi: &DVector<Complex64>) -> Result<Self> {
        let norm = phi.norm();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::NotUnit(norm));
        }
        Self::new(phi * phi.adjoint())
    }

    pub(crate) fn from_spectral_parts(vals: DVector<f64>, vecs: DMatrix<Complex64>) -> Self {
        let mat = from_spectral(&vals, &vecs);
        let max = vals.iter().cloned().fold(0.0, f64::max);
        let cutoff = vals.len() as f64 * RANK_TOL * max;
        let rank = vals.iter().filter(|&&v| v > cutoff).count();
        DensityOperator { mat, eigvals: vals, eigvecs: vecs, rank }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.mat
    }

    /// Eigenvalues ascending, clamped nonnegative.
    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigvals
    }

    /// Unitary of eigenvectors, columns matching [`Self::eigenvalues`].
    pub fn eigenvectors(&self) -> &DMatrix<Complex64> {
        &self.eigvecs
    }

    /// Rank at the scale-invariant cutoff dim·1e−10·max eigenvalue.
    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn is_full_rank(&self) -> bool {
        self.rank == self.dim()
    }

    pub fn trace(&self) -> f64 {
        self.eigvals.sum()
    }

    /// Columns spanning the support (the top `rank` eigenvectors).
    pub fn support_basis(&self) -> DMatrix<Complex64> {
        let n = self.dim();
        let r = self.rank;
        let mut basis = DMatrix::zeros(n, r);
        for k in 0..r {
            basis.set_column(k, &self.eigvecs.column(n - r + k));
        }
        basis
    }

    /// Orthogonal projection onto the support.
    pub fn support_projector(&self) -> DMatrix<Complex64> {
        let basis = self.support_basis();
        &basis * basis.adjoint()
    }

    /// A^p on the support, zero on the kernel (pseudo-power).
    pub fn pseudo_power(&self, p: f64) -> DMatrix<Complex64> {
        let n = self.dim();
        let vals = DVector::from_iterator(
            n,
            self.eigvals.iter().enumerate().map(|(i, &v)| {
                if i < n - self.rank {
                    0.0
                } else {
                    v.powf(p)
                }
            }),
        );
        from_spectral(&vals, &self.eigvecs)
    }
}

/// A Hermitian operator, optionally tagged with the closed spectral interval
/// its spectrum is required to lie in.
#[derive(Debug, Clone)]
pub struct HermitianOperator {
    mat: DMatrix<Complex64>,
    spectral_box: Option<(f64, f64)>,
}

impl HermitianOperator {
    pub fn new(mat: DMatrix<Complex64>) -> Result<Self> {
        check_square(&mat)?;
        let defect = hermiticity_defect(&mat);
        if defect > HERMITICITY_TOL {
            return Err(Error::NotHermitian(defect));
        }
        let herm = (&mat + mat.adjoint()) * Complex64::new(0.5, 0.0);
        Ok(HermitianOperator { mat: herm, spectral_box: None })
    }

    /// As [`Self::new`], additionally checking spec T ⊂ [lo, hi] + 1e−9.
    pub fn with_spectral_box(mat: DMatrix<Complex64>, lo: f64, hi: f64) -> Result<Self> {
        let mut op = Self::new(mat)?;
        let (vals, _) = eigh(&op.mat);
        let mut worst = 0.0f64;
        for &v in vals.iter() {
            worst = worst.max(lo - v).max(v - hi);
        }
        if worst > BOX_TOL {
            return Err(Error::SpectralBoxViolation(worst));
        }
        op.spectral_box = Some((lo, hi));
        Ok(op)
    }

    pub(crate) fn from_hermitian_unchecked(mat: DMatrix<Complex64>) -> Self {
        HermitianOperator { mat, spectral_box: None }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.mat
    }

    pub fn spectral_box(&self) -> Option<(f64, f64)> {
        self.spectral_box
    }

    pub fn eigenvalues(&self) -> DVector<f64> {
        eigh(&self.mat).0
    }
}

fn domain_check(vals: &DVector<f64>, domain: &Interval) -> Result<()> {
    for &v in vals.iter() {
        let slack = 1e-10 * (1.0 + v.abs());
        if !domain.contains(v, slack) {
            return Err(Error::DomainViolation { eigenvalue: v, domain: domain.to_string() });
        }
    }
    Ok(())
}

/// Spectral calculus: h(T) = U h(Λ) U† for T = U Λ U†.
///
/// Errors with the offending eigenvalue when spec T ⊄ dom h. Eigenvalues are
/// clamped into the closure of dom h before evaluation so that roundoff at a
/// closed end cannot produce spurious NaNs.
pub fn op_func(
    h: impl Fn(f64) -> f64,
    domain: &Interval,
    t: &HermitianOperator,
) -> Result<HermitianOperator> {
    let (vals, vecs) = eigh(t.matrix());
    domain_check(&vals, domain)?;
    let mapped = DVector::from_iterator(vals.len(), vals.iter().map(|&v| h(domain.clamp(v))));
    Ok(HermitianOperator::from_hermitian_unchecked(from_spectral(&mapped, &vecs)))
}

/// First divided difference of h, with the symmetric-midpoint switch when
/// the nodes nearly coincide (cancellation control).
fn divided_difference(
    h: &impl Fn(f64) -> f64,
    h_prime: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
) -> f64 {
    if (a - b).abs() < 1e-7 * (1.0 + a.abs() + b.abs()) {
        h_prime(0.5 * (a + b))
    } else {
        (h(a) - h(b)) / (a - b)
    }
}

/// Fréchet derivative of the matrix function h at T in direction X:
/// in T's eigenbasis, entries h^{[1]}(tᵢ, tⱼ)·Xᵢⱼ.
///
/// Self-adjoint with respect to tr XY and linear in X.
pub fn frechet_derivative(
    h: impl Fn(f64) -> f64,
    h_prime: impl Fn(f64) -> f64,
    domain: &Interval,
    t: &HermitianOperator,
    x: &HermitianOperator,
) -> Result<HermitianOperator> {
    if t.dim() != x.dim() {
        return Err(Error::DimensionMismatch(t.dim(), x.dim()));
    }
    let (vals, vecs) = eigh(t.matrix());
    domain_check(&vals, domain)?;
    let clamped: Vec<f64> = vals.iter().map(|&v| domain.clamp(v)).collect();
    let xt = vecs.adjoint() * x.matrix() * &vecs;
    let n = vals.len();
    let mut out = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let dd = divided_difference(&h, &h_prime, clamped[i], clamped[j]);
            out[(i, j)] = xt[(i, j)] * Complex64::new(dd, 0.0);
        }
    }
    let back = &vecs * out * vecs.adjoint();
    Ok(HermitianOperator::from_hermitian_unchecked(
        (&back + back.adjoint()) * Complex64::new(0.5, 0.0),
    ))
}

/// Solves TA + AT = C for Hermitian T, with A PSD and C supported on
/// supp A (πCπ = C within 1e−9). In A's eigenbasis Tᵢⱼ = Cᵢⱼ/(aᵢ + aⱼ),
/// restricted to the support; the result satisfies T = πTπ.
pub fn solve_sylvester_symmetric(
    a: &DensityOperator,
    c: &HermitianOperator,
) -> Result<HermitianOperator> {
    if a.dim() != c.dim() {
        return Err(Error::DimensionMismatch(a.dim(), c.dim()));
    }
    let pi = a.support_projector();
    let compressed = &pi * c.matrix() * &pi;
    let violation = max_abs(&(&compressed - c.matrix()));
    if violation > SUPPORT_TOL * (1.0 + max_abs(c.matrix())) {
        return Err(Error::SupportViolation(violation));
    }
    let vecs = a.eigenvectors();
    let vals = a.eigenvalues();
    let ct = vecs.adjoint() * c.matrix() * vecs;
    let n = a.dim();
    let kernel = n - a.rank();
    let mut tt = DMatrix::zeros(n, n);
    for i in kernel..n {
        for j in kernel..n {
            tt[(i, j)] = ct[(i, j)] / Complex64::new(vals[i] + vals[j], 0.0);
        }
    }
    let back = vecs * tt * vecs.adjoint();
    Ok(HermitianOperator::from_hermitian_unchecked(
        (&back + back.adjoint()) * Complex64::new(0.5, 0.0),
    ))
}

/// Spectral square root of a PSD operator.
pub fn sqrtm_psd(a: &DensityOperator) -> DensityOperator {
    let vals = DVector::from_iterator(a.dim(), a.eigenvalues().iter().map(|&v| v.sqrt()));
    DensityOperator::from_spectral_parts(vals, a.eigenvectors().clone())
}

/// Trace norm ‖X‖₁ = Σ |eigenvalues|.
pub fn trace_norm(x: &HermitianOperator) -> f64 {
    eigh(x.matrix()).0.iter().map(|v| v.abs()).sum()
}

/// Fidelity tr √(ρ₂^{1/2} ρ₁ ρ₂^{1/2}).
///
/// Eigenvalues of the inner matrix at roundoff scale are zeroed before the
/// square root: √ amplifies an O(ε) eigensolver residual to O(√ε), which
/// would otherwise dominate the error on rank-deficient pairs.
pub fn fidelity(rho1: &DensityOperator, rho2: &DensityOperator) -> Result<f64> {
    if rho1.dim() != rho2.dim() {
        return Err(Error::DimensionMismatch(rho1.dim(), rho2.dim()));
    }
    let b = sqrtm_psd(rho2);
    let inner = b.matrix() * rho1.matrix() * b.matrix();
    let (vals, _) = eigh(&inner);
    let max = vals.iter().cloned().fold(0.0, f64::max);
    let cutoff = 32.0 * f64::EPSILON * vals.len() as f64 * max;
    Ok(vals.iter().map(|&v| if v > cutoff { v.sqrt() } else { 0.0 }).sum())
}

#[cfg(test)]
pub(crate) mod test_support {
    use super::*;
    use rand::Rng;

    pub fn random_hermitian(rng: &mut impl Rng, n: usize, scale: f64) -> DMatrix<Complex64> {
        let raw = DMatrix::from_fn(n, n, |_, _| {
            Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        (&raw + raw.adjoint()) * Complex64::new(scale, 0.0)
    }

    pub fn random_density(rng: &mut impl Rng, n: usize) -> DensityOperator {
        let raw = DMatrix::from_fn(n, n, |_, _| {
            Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        let psd = &raw * raw.adjoint();
        let tr: f64 = (0..n).map(|i| psd[(i, i)].re).sum();
        DensityOperator::new(psd / Complex64::new(tr, 0.0)).unwrap()
    }

    pub fn random_unit(rng: &mut impl Rng, n: usize) -> DVector<Complex64> {
        let v = DVector::from_fn(n, |_, _| {
            Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        let norm = v.norm();
        v / Complex64::new(norm, 0.0)
    }
}
