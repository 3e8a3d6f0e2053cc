//! Dense Hermitian operators on finite-dimensional Hilbert spaces.
//!
//! Every quantum object in the crate (effects, Toeplitz operators, noise
//! operators) is carried by [`HermitianOperator`]. Tolerances are expressed
//! relative to the operator norm so that results do not depend on scale.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex;

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Relative tolerance on `‖A − A†‖_max / ‖A‖_max` accepted by [`HermitianOperator::new`].
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Relative gap (in units of the operator norm) below which eigenvalues are merged.
pub const CLUSTER_TOL: f64 = 1e-7;

/// A finite-dimensional complex Hermitian matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianOperator {
    mat: CMatrix,
}

impl HermitianOperator {
    /// Validates `mat` and stores its exact Hermitian part `(A + A†)/2`.
    pub fn new(mat: CMatrix) -> Result<Self> {
        let (rows, cols) = mat.shape();
        if rows != cols {
            return Err(Error::NotSquare { rows, cols });
        }
        if rows == 0 {
            return Err(Error::EmptyOperator);
        }
        let scale = mat.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let adj = mat.adjoint();
        let asymmetry = mat.iter().zip(adj.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        let tolerance = HERMITIAN_TOL * scale.max(f64::MIN_POSITIVE);
        if asymmetry > tolerance && asymmetry > 0.0 {
            return Err(Error::NotHermitian { asymmetry, tolerance });
        }
        Ok(Self::from_matrix_unchecked(mat))
    }

    /// Symmetrizes without validation. Callers guarantee the input is Hermitian
    /// up to rounding.
    pub(crate) fn from_matrix_unchecked(mat: CMatrix) -> Self {
        let adj = mat.adjoint();
        let mut sym = (mat + adj) * C64::new(0.5, 0.0);
        for i in 0..sym.nrows() {
            sym[(i, i)].im = 0.0;
        }
        Self { mat: sym }
    }

    pub fn from_real(mat: DMatrix<f64>) -> Result<Self> {
        Self::new(mat.map(|x| C64::new(x, 0.0)))
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Result<Self> {
        if diag.is_empty() {
            return Err(Error::EmptyOperator);
        }
        let d = DVector::from_iterator(diag.len(), diag.iter().map(|&x| C64::new(x, 0.0)));
        Ok(Self { mat: DMatrix::from_diagonal(&d) })
    }

    pub fn identity(dim: usize) -> Self {
        assert!(dim > 0, "identity of dimension 0");
        Self { mat: DMatrix::identity(dim, dim) }
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim > 0, "zero operator of dimension 0");
        Self { mat: DMatrix::zeros(dim, dim) }
    }

    /// `|v⟩⟨v|` scaled by `weight`.
    pub fn rank_one(v: &CVector, weight: f64) -> Self {
        let mat = v * v.adjoint() * C64::new(weight, 0.0);
        Self::from_matrix_unchecked(mat)
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.mat[(i, i)].re).sum()
    }

    /// Largest absolute entry.
    pub fn max_abs_entry(&self) -> f64 {
        self.mat.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self.mat.clone().symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    pub fn max_eigenvalue(&self) -> f64 {
        *self.eigenvalues().last().expect("dim >= 1")
    }

    /// Operator norm: the largest absolute eigenvalue.
    pub fn op_norm(&self) -> f64 {
        let ev = self.eigenvalues();
        ev[0].abs().max(ev[ev.len() - 1].abs())
    }

    /// Eigenvector of the eigenvalue with the largest absolute value, with that eigenvalue.
    pub fn dominant_eigenpair(&self) -> (f64, CVector) {
        let eig = SymmetricEigen::new(self.mat.clone());
        let (idx, _) =
            eig.eigenvalues.iter().enumerate().max_by(|a, b| a.1.abs().total_cmp(&b.1.abs())).expect("dim >= 1");
        (eig.eigenvalues[idx], eig.eigenvectors.column(idx).into_owned())
    }

    pub fn is_positive(&self, tol: f64) -> bool {
        self.min_eigenvalue() >= -tol
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { mat: &self.mat * C64::new(s, 0.0) }
    }

    /// `A²`, Hermitian.
    pub fn square(&self) -> Self {
        Self::from_matrix_unchecked(&self.mat * &self.mat)
    }

    /// `S·A·S` for Hermitian `S`.
    pub fn sandwich(&self, s: &HermitianOperator) -> Result<Self> {
        check_dims(self, s)?;
        Ok(Self::from_matrix_unchecked(&s.mat * &self.mat * &s.mat))
    }

    /// Applies a real function to the spectrum.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> Self {
        let eig = SymmetricEigen::new(self.mat.clone());
        let vals = DVector::from_iterator(self.dim(), eig.eigenvalues.iter().map(|&l| C64::new(f(l), 0.0)));
        let v = &eig.eigenvectors;
        Self::from_matrix_unchecked(v * DMatrix::from_diagonal(&vals) * v.adjoint())
    }

    /// `⟨ξ, A ξ⟩` for a vector `ξ`.
    pub fn expectation(&self, xi: &CVector) -> f64 {
        xi.dotc(&(&self.mat * xi)).re
    }

    /// Compression `P A P` onto the range of the isometry `basis` (columns
    /// orthonormal), returned as a Hermitian operator on that range.
    pub fn compress(&self, basis: &CMatrix) -> Self {
        Self::from_matrix_unchecked(basis.adjoint() * &self.mat * basis)
    }

    /// Distance in operator norm.
    pub fn distance(&self, other: &Self) -> Result<f64> {
        check_dims(self, other)?;
        Ok((self - other).op_norm())
    }
}

pub(crate) fn check_dims(a: &HermitianOperator, b: &HermitianOperator) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { left: a.dim(), right: b.dim() });
    }
    Ok(())
}

impl<'a> Add<&'a HermitianOperator> for &'a HermitianOperator {
    type Output = HermitianOperator;
    fn add(self, rhs: &HermitianOperator) -> HermitianOperator {
        assert_eq!(self.dim(), rhs.dim(), "dimension mismatch in operator sum");
        HermitianOperator { mat: &self.mat + &rhs.mat }
    }
}

impl<'a> Sub<&'a HermitianOperator> for &'a HermitianOperator {
    type Output = HermitianOperator;
    fn sub(self, rhs: &HermitianOperator) -> HermitianOperator {
        assert_eq!(self.dim(), rhs.dim(), "dimension mismatch in operator difference");
        HermitianOperator { mat: &self.mat - &rhs.mat }
    }
}

impl Mul<f64> for &HermitianOperator {
    type Output = HermitianOperator;
    fn mul(self, rhs: f64) -> HermitianOperator {
        self.scale(rhs)
    }
}

impl Neg for &HermitianOperator {
    type Output = HermitianOperator;
    fn neg(self) -> HermitianOperator {
        self.scale(-1.0)
    }
}

/// `Σ c_i A_i`; all operators must share a dimension.
pub fn linear_combination(coeffs: &[f64], ops: &[HermitianOperator]) -> Result<HermitianOperator> {
    if coeffs.len() != ops.len() {
        return Err(Error::LengthMismatch { expected: ops.len(), got: coeffs.len() });
    }
    let first = ops.first().ok_or_else(|| Error::InvalidArgument("no operators".into()))?;
    let dim = first.dim();
    let mut acc = CMatrix::zeros(dim, dim);
    for (c, op) in coeffs.iter().zip(ops) {
        if op.dim() != dim {
            return Err(Error::DimensionMismatch { left: dim, right: op.dim() });
        }
        if *c != 0.0 {
            acc.zip_apply(&op.mat, |a, b| *a += b * *c);
        }
    }
    Ok(HermitianOperator { mat: acc })
}

/// `i[A, B]`, which is Hermitian.
pub fn commutator_hermitian(a: &HermitianOperator, b: &HermitianOperator) -> Result<HermitianOperator> {
    check_dims(a, b)?;
    let c = &a.mat * &b.mat - &b.mat * &a.mat;
    Ok(HermitianOperator::from_matrix_unchecked(c * C64::new(0.0, 1.0)))
}

/// `‖AB − BA‖_op`.
pub fn commutator_norm(a: &HermitianOperator, b: &HermitianOperator) -> Result<f64> {
    Ok(commutator_hermitian(a, b)?.op_norm())
}

pub fn op_norm(h: &HermitianOperator) -> f64 {
    h.op_norm()
}

/// Spectral resolution `H = Σ λ_j P_j` with distinct (clustered) eigenvalues.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    pub projectors: Vec<HermitianOperator>,
    /// Orthonormal eigenvectors spanning each projector's range.
    pub bases: Vec<CMatrix>,
}

impl SpectralDecomposition {
    pub fn reconstruct(&self) -> HermitianOperator {
        linear_combination(&self.eigenvalues, &self.projectors).expect("nonempty decomposition")
    }

    pub fn ranks(&self) -> Vec<usize> {
        self.bases.iter().map(|b| b.ncols()).collect()
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }
}

/// Eigen-decomposes `h`, merging eigenvalues closer than `CLUSTER_TOL · ‖h‖`.
pub fn spectral_decompose(h: &HermitianOperator) -> SpectralDecomposition {
    let eig = SymmetricEigen::new(h.mat.clone());
    let mut order: Vec<usize> = (0..h.dim()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let norm = eig.eigenvalues.iter().fold(0.0_f64, |m, l| m.max(l.abs()));
    let tol = CLUSTER_TOL * norm.max(f64::MIN_POSITIVE);

    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for &idx in &order {
        match clusters.last_mut() {
            Some(c) if eig.eigenvalues[idx] - eig.eigenvalues[*c.last().unwrap()] <= tol => c.push(idx),
            _ => clusters.push(vec![idx]),
        }
    }

    let mut eigenvalues = Vec::with_capacity(clusters.len());
    let mut projectors = Vec::with_capacity(clusters.len());
    let mut bases = Vec::with_capacity(clusters.len());
    for c in clusters {
        let mean = c.iter().map(|&i| eig.eigenvalues[i]).sum::<f64>() / c.len() as f64;
        let cols: Vec<CVector> = c.iter().map(|&i| eig.eigenvectors.column(i).into_owned()).collect();
        let basis = CMatrix::from_columns(&cols);
        let proj = HermitianOperator::from_matrix_unchecked(&basis * basis.adjoint());
        eigenvalues.push(mean);
        projectors.push(proj);
        bases.push(basis);
    }
    SpectralDecomposition { eigenvalues, projectors, bases }
}

/// Pauli matrices, handy for tests and examples.
pub mod pauli {
    use super::*;

    pub fn x() -> HermitianOperator {
        HermitianOperator::from_real(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0])).unwrap()
    }

    pub fn y() -> HermitianOperator {
        let z = C64::new(0.0, 0.0);
        let i = C64::new(0.0, 1.0);
        HermitianOperator::new(DMatrix::from_row_slice(2, 2, &[z, -i, i, z])).unwrap()
    }

    pub fn z() -> HermitianOperator {
        HermitianOperator::from_real_diagonal(&[1.0, -1.0]).unwrap()
    }
}
