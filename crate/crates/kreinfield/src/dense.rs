//! Dense complex operators tagged with the space they act on.
//!
//! Everything downstream (Krein analysis, functional calculus, kernels)
//! works with square complex matrices. The space tag exists to catch the
//! classic bug of mixing an n-site Schrödinger operator with a 2n-site
//! doubled-space operator; it costs nothing and fails loudly.

use ndarray::{Array1, Array2};
use ndarray_linalg::{Eigh, Norm, UPLO};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type CMat = Array2<Complex64>;
pub type CVec = Array1<Complex64>;

/// Which vector space a matrix acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Space {
    /// Plain scalar lattice functions, dimension = n sites.
    L2 { sites: usize },
    /// Doubled Klein-Gordon space L2 + L2 in plain coordinates.
    KreinDoubled { sites: usize },
    /// Two-component spinors over the lattice.
    DiracSpinor { sites: usize },
}

impl Space {
    pub fn dim(&self) -> usize {
        match self {
            Space::L2 { sites } => *sites,
            Space::KreinDoubled { sites } | Space::DiracSpinor { sites } => 2 * sites,
        }
    }
}

/// A complex square matrix together with its space tag.
#[derive(Debug, Clone)]
pub struct DenseOperator {
    pub space: Space,
    pub matrix: CMat,
}

impl DenseOperator {
    pub fn new(space: Space, matrix: CMat) -> Result<Self> {
        let (r, c) = (matrix.nrows(), matrix.ncols());
        if r != c {
            return Err(Error::DimensionMismatch(r, c));
        }
        if r != space.dim() {
            return Err(Error::DimensionMismatch(r, space.dim()));
        }
        Ok(Self { space, matrix })
    }

    pub fn identity(space: Space) -> Self {
        Self {
            space,
            matrix: CMat::eye(space.dim()),
        }
    }

    pub fn zeros(space: Space) -> Self {
        Self {
            space,
            matrix: CMat::zeros((space.dim(), space.dim())),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn same_space(&self, other: &Self) -> Result<()> {
        if self.space != other.space {
            return Err(Error::SpaceMismatch(self.space, other.space));
        }
        Ok(())
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self {
            space: self.space,
            matrix: adjoint(&self.matrix),
        }
    }

    pub fn dot(&self, other: &Self) -> Result<Self> {
        self.same_space(other)?;
        Ok(Self {
            space: self.space,
            matrix: self.matrix.dot(&other.matrix),
        })
    }

    /// Operator 2-norm (largest singular value).
    pub fn norm2(&self) -> f64 {
        norm2(&self.matrix)
    }

    pub fn norm_fro(&self) -> f64 {
        self.matrix.norm_l2()
    }

    /// Deviation from Hermitian symmetry in the 2-norm.
    pub fn hermiticity_defect(&self) -> f64 {
        norm2(&(&self.matrix - &adjoint(&self.matrix)))
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_defect() <= tol * self.norm2().max(1.0)
    }
}

pub fn adjoint(m: &CMat) -> CMat {
    m.t().mapv(|z| z.conj())
}

/// Hermitian part (M + M^H)/2.
pub fn hermitian_part(m: &CMat) -> CMat {
    let mh = adjoint(m);
    (m + &mh) * Complex64::new(0.5, 0.0)
}

/// Skew part (M - M^H)/2.
pub fn skew_part(m: &CMat) -> CMat {
    let mh = adjoint(m);
    (m - &mh) * Complex64::new(0.5, 0.0)
}

/// Operator 2-norm via singular values; falls back to the Frobenius norm
/// bound only if the SVD fails to converge (never observed in practice).
pub fn norm2(m: &CMat) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    match ndarray_linalg::SVD::svd(m, false, false) {
        Ok((_, s, _)) => s.iter().cloned().fold(0.0, f64::max),
        Err(_) => m.norm_l2(),
    }
}

/// Eigenvalues of the Hermitian part of `m`, ascending.
pub fn hermitian_eigenvalues(m: &CMat) -> Result<Array1<f64>> {
    let h = hermitian_part(m);
    let (w, _) = h.eigh(UPLO::Lower)?;
    Ok(w)
}

/// Smallest eigenvalue of the Hermitian part of `m`.
pub fn min_hermitian_eigenvalue(m: &CMat) -> Result<f64> {
    Ok(hermitian_eigenvalues(m)?[0])
}

pub fn real_diag(d: &[f64]) -> CMat {
    let n = d.len();
    let mut m = CMat::zeros((n, n));
    for (i, &v) in d.iter().enumerate() {
        m[(i, i)] = Complex64::new(v, 0.0);
    }
    m
}

/// Assemble a 2x2 block matrix [[a, b], [c, d]] of equal square blocks.
pub fn block2(a: &CMat, b: &CMat, c: &CMat, d: &CMat) -> CMat {
    let n = a.nrows();
    assert!(
        [a, b, c, d].iter().all(|m| m.nrows() == n && m.ncols() == n),
        "block2 expects four equal square blocks"
    );
    let mut out = CMat::zeros((2 * n, 2 * n));
    out.slice_mut(ndarray::s![..n, ..n]).assign(a);
    out.slice_mut(ndarray::s![..n, n..]).assign(b);
    out.slice_mut(ndarray::s![n.., ..n]).assign(c);
    out.slice_mut(ndarray::s![n.., n..]).assign(d);
    out
}

/// The block swap [[0, I], [I, 0]]; the matrix of the charge inner
/// product (u1|v2) + (u2|v1) in plain coordinates.
pub fn block_swap(sites: usize) -> CMat {
    let eye = CMat::eye(sites);
    let zero = CMat::zeros((sites, sites));
    block2(&zero, &eye, &eye, &zero)
}
