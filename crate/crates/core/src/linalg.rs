//! Dense symmetric linear algebra used throughout the crate.
//!
//! Quadratic forms `xᵀA⁻¹y` always go through a factorization: either a
//! Cholesky factor ([`SpdFactor`]) or a symmetric eigendecomposition
//! ([`SymSpectrum`]). Explicit inverses are never formed.

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, ShrinkError};
use crate::scalar::Scalar;

/// Cholesky factor of a symmetric positive-definite matrix.
#[derive(Debug, Clone)]
pub struct SpdFactor<T: Scalar> {
    chol: nalgebra::Cholesky<T, nalgebra::Dyn>,
}

impl<T: Scalar> SpdFactor<T> {
    /// Factorizes `a`, rejecting matrices that are not numerically positive
    /// definite (a pivot below `dim·eps·max|a_ii|`).
    pub fn new(a: &DMatrix<T>) -> Result<Self> {
        let dim = a.nrows();
        if dim == 0 || dim != a.ncols() {
            return Err(ShrinkError::InvalidData(format!(
                "expected a non-empty square matrix, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        let scale = (0..dim).fold(T::zero(), |m, i| m.max(a[(i, i)].abs()));
        let chol = nalgebra::Cholesky::new(a.clone()).ok_or_else(|| {
            ShrinkError::SingularCovariance("Cholesky factorization failed".into())
        })?;
        let floor = T::lit(dim as f64) * T::eps() * scale;
        let l = chol.l_dirty();
        for i in 0..dim {
            let pivot = l[(i, i)];
            if !(pivot * pivot > floor) {
                return Err(ShrinkError::SingularCovariance(format!(
                    "pivot {i} is numerically zero"
                )));
            }
        }
        Ok(Self { chol })
    }

    pub fn dim(&self) -> usize {
        self.chol.l_dirty().nrows()
    }

    /// `A⁻¹ b`.
    pub fn solve(&self, rhs: &DVector<T>) -> DVector<T> {
        self.chol.solve(rhs)
    }

    /// `xᵀ A⁻¹ y`.
    pub fn quad(&self, x: &DVector<T>, y: &DVector<T>) -> T {
        x.dot(&self.solve(y))
    }
}

/// Eigendecomposition `A = Q diag(d) Qᵀ` of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymSpectrum<T: Scalar> {
    pub eigenvalues: DVector<T>,
    pub eigenvectors: DMatrix<T>,
}

impl<T: Scalar> SymSpectrum<T> {
    pub fn new(a: &DMatrix<T>) -> Self {
        let eig = nalgebra::SymmetricEigen::new(a.clone());
        Self {
            eigenvalues: eig.eigenvalues,
            eigenvectors: eig.eigenvectors,
        }
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Coordinates of `v` in the eigenbasis, `Qᵀv`.
    pub fn project(&self, v: &DVector<T>) -> DVector<T> {
        self.eigenvectors.tr_mul(v)
    }

    pub fn max_eigenvalue(&self) -> T {
        self.eigenvalues
            .iter()
            .fold(T::min_value().unwrap(), |m, &x| m.max(x))
    }

    pub fn min_eigenvalue(&self) -> T {
        self.eigenvalues
            .iter()
            .fold(T::max_value().unwrap(), |m, &x| m.min(x))
    }

    /// Singular-value cutoff `max(rows, cols)·eps·σ_max`.
    pub fn rank_cutoff(&self) -> T {
        let smax = self
            .eigenvalues
            .iter()
            .fold(T::zero(), |m, &x| m.max(x.abs()));
        T::lit(self.dim() as f64) * T::eps() * smax
    }

    /// Number of singular values above [`Self::rank_cutoff`].
    pub fn numerical_rank(&self) -> usize {
        let cut = self.rank_cutoff();
        self.eigenvalues.iter().filter(|x| x.abs() > cut).count()
    }

    /// Rebuilds `Q diag(f(d)) Qᵀ`.
    pub fn map(&self, f: impl Fn(T) -> T) -> DMatrix<T> {
        let scaled = DMatrix::from_fn(self.dim(), self.dim(), |i, j| {
            self.eigenvectors[(i, j)] * f(self.eigenvalues[j])
        });
        let mut out = &scaled * self.eigenvectors.transpose();
        symmetrize_in_place(&mut out);
        out
    }

    /// Moore–Penrose pseudoinverse with the standard numerical-rank cutoff.
    pub fn pseudo_inverse(&self) -> DMatrix<T> {
        let cut = self.rank_cutoff();
        self.map(|d| {
            if d.abs() > cut {
                T::one() / d
            } else {
                T::zero()
            }
        })
    }

    /// Symmetric square root; tiny negative eigenvalues are clamped to zero.
    pub fn sqrt(&self) -> DMatrix<T> {
        self.map(|d| d.max(T::zero()).sqrt())
    }
}

/// Maximum asymmetry `|a_ij − a_ji|` relative to the largest entry.
pub fn asymmetry<T: Scalar>(a: &DMatrix<T>) -> T {
    let scale = a.iter().fold(T::zero(), |m, x| m.max(x.abs()));
    if scale == T::zero() {
        return T::zero();
    }
    let mut worst = T::zero();
    for i in 0..a.nrows() {
        for j in (i + 1)..a.ncols() {
            worst = worst.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    worst / scale
}

pub fn symmetrize_in_place<T: Scalar>(a: &mut DMatrix<T>) {
    let half = T::lit(0.5);
    for i in 0..a.nrows() {
        for j in (i + 1)..a.ncols() {
            let m = (a[(i, j)] + a[(j, i)]) * half;
            a[(i, j)] = m;
            a[(j, i)] = m;
        }
    }
}

pub fn ones<T: Scalar>(p: usize) -> DVector<T> {
    DVector::from_element(p, T::one())
}
