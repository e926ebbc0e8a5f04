//! Dense complex linear algebra on small matrices (dimension up to a few
//! hundred): tensor products, partial traces, Hermitian eigendecomposition,
//! exponentials, norms and frame orthonormalisation.
//!
//! Storage is `nalgebra::DMatrix<Complex64>`. nalgebra stores column-major,
//! so `as_slice()` is the column-stacking vectorisation used by
//! [`crate::channels::Superoperator`].

pub mod io;
pub mod quad;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tolerances;

pub type C64 = Complex64;
pub type ComplexMatrix = DMatrix<C64>;
pub type ComplexVector = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(d: usize) -> ComplexMatrix {
    ComplexMatrix::identity(d, d)
}

pub fn zeros(rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::zeros(rows, cols)
}

/// Builds a matrix from row-major real entries.
pub fn real_matrix(rows: usize, cols: usize, entries: &[f64]) -> ComplexMatrix {
    ComplexMatrix::from_row_iterator(rows, cols, entries.iter().map(|&x| c(x, 0.0)))
}

/// Builds a matrix from row-major complex entries.
pub fn complex_matrix(rows: usize, cols: usize, entries: &[C64]) -> ComplexMatrix {
    ComplexMatrix::from_row_slice(rows, cols, entries)
}

/// Single-qubit operators in the computational basis `|0>, |1>`.
pub mod pauli {
    use super::*;

    pub fn id() -> ComplexMatrix {
        identity(2)
    }

    pub fn x() -> ComplexMatrix {
        real_matrix(2, 2, &[0.0, 1.0, 1.0, 0.0])
    }

    pub fn y() -> ComplexMatrix {
        complex_matrix(2, 2, &[ZERO, -I, I, ZERO])
    }

    pub fn z() -> ComplexMatrix {
        real_matrix(2, 2, &[1.0, 0.0, 0.0, -1.0])
    }

    /// `σ+ = |0><1|`.
    pub fn plus() -> ComplexMatrix {
        real_matrix(2, 2, &[0.0, 1.0, 0.0, 0.0])
    }

    /// `σ- = |1><0|`.
    pub fn minus() -> ComplexMatrix {
        real_matrix(2, 2, &[0.0, 0.0, 1.0, 0.0])
    }
}

/// A density matrix: Hermitian, positive semidefinite, unit trace.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(ComplexMatrix);

impl DensityMatrix {
    pub fn new(rho: ComplexMatrix) -> Result<Self> {
        if !rho.is_square() {
            return Err(Error::Dimension(format!(
                "density matrix must be square, got {}x{}",
                rho.nrows(),
                rho.ncols()
            )));
        }
        check_finite(&rho)?;
        let herm = hermiticity_defect(&rho);
        if herm > 1e-12 {
            return Err(Error::InvalidState(format!("Hermiticity defect {herm:.3e}")));
        }
        let tr = rho.trace();
        if (tr - ONE).norm() > 1e-12 {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        let min = herm_eig(&hermitian_part(&rho))?.values[0];
        if min < -1e-10 {
            return Err(Error::InvalidState(format!("minimum eigenvalue {min:.3e}")));
        }
        Ok(Self(rho))
    }

    /// The pure state `|psi><psi|` of a (not necessarily normalised) vector.
    pub fn pure(psi: &ComplexVector) -> Result<Self> {
        let norm = psi.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidState("zero state vector".into()));
        }
        let v = psi / C64::from(norm);
        Ok(Self(&v * v.adjoint()))
    }

    /// The computational basis projector `|k><k|`.
    pub fn basis(d: usize, k: usize) -> Self {
        let mut m = zeros(d, d);
        m[(k, k)] = ONE;
        Self(m)
    }

    pub fn maximally_mixed(d: usize) -> Self {
        Self(identity(d) / C64::from(d as f64))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_inner(self) -> ComplexMatrix {
        self.0
    }
}

/// A square matrix with `‖U†U − 1‖ ≤ 1e−10`.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryMatrix(ComplexMatrix);

impl UnitaryMatrix {
    pub fn new(u: ComplexMatrix) -> Result<Self> {
        if !u.is_square() {
            return Err(Error::Dimension(format!("unitary must be square, got {}x{}", u.nrows(), u.ncols())));
        }
        check_finite(&u)?;
        let defect = unitarity_defect(&u);
        if defect > tolerances::STRUCTURAL {
            return Err(Error::NotUnitary { defect });
        }
        Ok(Self(u))
    }

    /// Skips the unitarity check; for matrices that are unitary by construction
    /// but whose rounding may drift past the structural tolerance.
    pub(crate) fn new_unchecked(u: ComplexMatrix) -> Self {
        Self(u)
    }

    pub fn identity(d: usize) -> Self {
        Self(identity(d))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn as_matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_inner(self) -> ComplexMatrix {
        self.0
    }
}

impl std::ops::Mul for &UnitaryMatrix {
    type Output = UnitaryMatrix;

    fn mul(self, rhs: Self) -> UnitaryMatrix {
        UnitaryMatrix(&self.0 * &rhs.0)
    }
}

fn check_finite(m: &ComplexMatrix) -> Result<()> {
    if m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::Dimension("matrix has non-finite entries".into()))
    }
}

/// `A ⊗ B` with the first factor as the major index.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

/// Which tensor factor of `H_a ⊗ H_b` to trace out.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subsystem {
    A,
    B,
}

/// Partial trace of `m` on `H_a ⊗ H_b` over `traced`.
pub fn partial_trace(m: &ComplexMatrix, traced: Subsystem, dims: (usize, usize)) -> Result<ComplexMatrix> {
    let (da, db) = dims;
    let n = da * db;
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::Dimension(format!(
            "partial trace over {da}x{db} needs a {n}x{n} matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let out = match traced {
        Subsystem::B => ComplexMatrix::from_fn(da, da, |i, j| (0..db).map(|k| m[(i * db + k, j * db + k)]).sum()),
        Subsystem::A => ComplexMatrix::from_fn(db, db, |i, j| (0..da).map(|k| m[(k * db + i, k * db + j)]).sum()),
    };
    Ok(out)
}

pub fn hermiticity_defect(m: &ComplexMatrix) -> f64 {
    (m - m.adjoint()).norm()
}

pub fn unitarity_defect(u: &ComplexMatrix) -> f64 {
    (u.adjoint() * u - identity(u.ncols())).norm()
}

pub fn hermitian_part(m: &ComplexMatrix) -> ComplexMatrix {
    (m + m.adjoint()) * C64::from(0.5)
}

/// Eigendecomposition of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    /// Ascending.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors as columns, in the order of `values`.
    pub vectors: ComplexMatrix,
}

impl HermitianEigen {
    pub fn vector(&self, k: usize) -> ComplexVector {
        self.vectors.column(k).into_owned()
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        let d = ComplexMatrix::from_diagonal(&DVector::from_iterator(
            self.values.len(),
            self.values.iter().map(|&x| c(x, 0.0)),
        ));
        &self.vectors * d * self.vectors.adjoint()
    }
}

/// Hermitian eigendecomposition with eigenvalues in ascending order.
pub fn herm_eig(h: &ComplexMatrix) -> Result<HermitianEigen> {
    if !h.is_square() {
        return Err(Error::Dimension(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            h.nrows(),
            h.ncols()
        )));
    }
    let defect = hermiticity_defect(h);
    if defect > tolerances::STRUCTURAL * h.norm().max(1.0) {
        return Err(Error::NotHermitian { defect });
    }
    let n = h.nrows();
    if n == 0 {
        return Ok(HermitianEigen { values: vec![], vectors: zeros(0, 0) });
    }
    let eig = nalgebra::SymmetricEigen::new(hermitian_part(h));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    Ok(HermitianEigen { values, vectors })
}

/// Matrix exponential.
///
/// Hermitian and anti-Hermitian arguments go through the spectral
/// decomposition; anything else through nalgebra's Padé scaling-and-squaring.
pub fn matrix_exp(a: &ComplexMatrix) -> ComplexMatrix {
    assert!(a.is_square(), "matrix_exp needs a square matrix");
    let n = a.nrows();
    let scale = a.norm().max(f64::MIN_POSITIVE);
    if a.norm() == 0.0 {
        return identity(n);
    }
    let structural = 1e-14 * scale;
    if hermiticity_defect(a) <= structural {
        if let Ok(e) = herm_eig(&hermitian_part(a)) {
            return spectral_apply(&e, |x| c(x.exp(), 0.0));
        }
    }
    let anti = (a + a.adjoint()).norm();
    if anti <= structural {
        // a = -i h with h Hermitian
        let h = a * I;
        if let Ok(e) = herm_eig(&hermitian_part(&h)) {
            return spectral_apply(&e, |x| C64::from_polar(1.0, -x));
        }
    }
    a.clone().exp()
}

/// `exp(-i t h)` for Hermitian `h`.
pub fn unitary_exp(h: &ComplexMatrix, t: f64) -> Result<UnitaryMatrix> {
    let e = herm_eig(h)?;
    Ok(UnitaryMatrix::new_unchecked(spectral_apply(&e, |x| C64::from_polar(1.0, -x * t))))
}

fn spectral_apply(e: &HermitianEigen, f: impl Fn(f64) -> C64) -> ComplexMatrix {
    let mut scaled = e.vectors.clone();
    for (k, &lam) in e.values.iter().enumerate() {
        let fk = f(lam);
        for z in scaled.column_mut(k).iter_mut() {
            *z *= fk;
        }
    }
    scaled * e.vectors.adjoint()
}

/// Hermitian generator `G` with `U = exp(-i G)` and spectrum in `(-π/2, π/2)`.
///
/// Returns the largest eigenphase magnitude as the error payload when the
/// principal branch is not unambiguous.
pub fn hermitian_generator(u: &ComplexMatrix) -> std::result::Result<ComplexMatrix, f64> {
    // U = V e^{-iθ} V†: (U + U†)/2 has eigenvalues cos θ, i(U − U†)/2 has sin θ.
    let sin_part = (u - u.adjoint()) * C64::new(0.0, 0.5);
    let cos_part = (u + u.adjoint()) * C64::from(0.5);
    let e = herm_eig(&hermitian_part(&sin_part)).map_err(|_| f64::INFINITY)?;
    let rotated = e.vectors.adjoint() * cos_part * &e.vectors;
    let mut worst: f64 = 0.0;
    let mut thetas = Vec::with_capacity(e.values.len());
    for (k, &s) in e.values.iter().enumerate() {
        let cs = rotated[(k, k)].re;
        let theta = s.atan2(cs);
        worst = worst.max(theta.abs());
        thetas.push(theta);
    }
    if worst >= std::f64::consts::FRAC_PI_2 {
        return Err(worst);
    }
    let diag = DVector::from_iterator(thetas.len(), thetas.iter().map(|&x| c(x, 0.0)));
    Ok(&e.vectors * ComplexMatrix::from_diagonal(&diag) * e.vectors.adjoint())
}

pub fn singular_values(a: &ComplexMatrix) -> Vec<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return vec![];
    }
    a.clone().singular_values().iter().copied().collect()
}

/// Largest singular value.
pub fn spectral_norm(a: &ComplexMatrix) -> f64 {
    singular_values(a).into_iter().fold(0.0, f64::max)
}

/// Sum of singular values.
pub fn trace_norm(a: &ComplexMatrix) -> f64 {
    singular_values(a).into_iter().sum()
}

/// Completes orthonormal `columns` (d×m) to a unitary whose first `m` columns
/// are exactly `columns`; the remaining `d − m` columns come from modified
/// Gram-Schmidt (two passes) of `seed` against everything before them.
///
/// The Gram determinant of `[columns | seed]` is the product of the squared
/// first-pass residual norms; below [`tolerances::GRAM_RESEED`] the seed is
/// rejected with [`Error::RankDeficient`].
pub fn orthonormalize(columns: &ComplexMatrix, seed: &ComplexMatrix) -> Result<UnitaryMatrix> {
    orthonormalize_with_threshold(columns, seed, tolerances::GRAM_RESEED)
}

pub fn orthonormalize_with_threshold(
    columns: &ComplexMatrix,
    seed: &ComplexMatrix,
    threshold: f64,
) -> Result<UnitaryMatrix> {
    let d = columns.nrows();
    let m = columns.ncols();
    if seed.nrows() != d || m + seed.ncols() != d {
        return Err(Error::Dimension(format!(
            "frame completion of {m} columns in dimension {d} needs a {d}x{} seed, got {}x{}",
            d - m.min(d),
            seed.nrows(),
            seed.ncols()
        )));
    }
    let gram = columns.adjoint() * columns - identity(m);
    if gram.norm() > 1e-8 {
        return Err(Error::Dimension(format!("given columns are not orthonormal (defect {:.3e})", gram.norm())));
    }
    let mut out = zeros(d, d);
    out.columns_mut(0, m).copy_from(columns);
    let mut gram_det = 1.0;
    for k in 0..seed.ncols() {
        let mut v = seed.column(k).into_owned();
        let seed_norm = v.norm();
        if seed_norm == 0.0 {
            return Err(Error::RankDeficient { gram_det: 0.0 });
        }
        v /= C64::from(seed_norm);
        let filled = m + k;
        for pass in 0..2 {
            for j in 0..filled {
                let q = out.column(j);
                let proj = q.dotc(&v);
                v -= q * proj;
            }
            if pass == 0 {
                gram_det *= v.norm_squared();
            }
        }
        if gram_det < threshold {
            return Err(Error::RankDeficient { gram_det });
        }
        let norm = v.norm();
        out.column_mut(filled).copy_from(&(v / C64::from(norm)));
    }
    Ok(UnitaryMatrix::new_unchecked(out))
}

/// Applies `x ↦ (1 ⊗ v) x (1 ⊗ v)†` for `v` acting on the second factor.
pub fn conjugate_second_factor(x: &ComplexMatrix, v: &ComplexMatrix, first_dim: usize) -> ComplexMatrix {
    let lifted = kron(&identity(first_dim), v);
    &lifted * x * lifted.adjoint()
}
