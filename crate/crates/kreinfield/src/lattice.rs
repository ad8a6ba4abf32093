//! Spatial grid, sampled potentials, and the discretized magnetic
//! Schrödinger operator eps^2 = -(d - iA)^2 + m^2 with its square root.
//!
//! The derivative is the 3-point central stencil with link phases
//! exp(±i A h) attached at the cell midpoints, which keeps the matrix
//! Hermitian and gauge covariant exactly. The square root comes from a
//! full Hermitian eigendecomposition; at these sizes exactness beats
//! iteration.

use ndarray::Array1;
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::dense::{CMat, DenseOperator, Space};
use crate::error::{Error, Result};
use crate::tolerances::Tolerances;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Periodic,
    Dirichlet,
}

/// 1-D lattice of n sites covering physical length L, natural units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub n: usize,
    pub length: f64,
    pub spacing: f64,
    pub boundary: Boundary,
}

impl Grid {
    /// Site coordinate x_j = -L/2 + j h.
    pub fn coord(&self, j: usize) -> f64 {
        -self.length / 2.0 + j as f64 * self.spacing
    }

    pub fn coords(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.coord(j)).collect()
    }

    /// Lattice momenta 2 pi j / L, j = 0..n-1 (periodic grids).
    pub fn momenta(&self) -> Vec<f64> {
        (0..self.n)
            .map(|j| 2.0 * std::f64::consts::PI * j as f64 / self.length)
            .collect()
    }
}

pub fn build_grid(n: usize, length: f64, boundary: Boundary) -> Result<Grid> {
    if n < 8 {
        return Err(Error::InvalidGrid(format!(
            "n = {n} < 8 gives unusable resolution"
        )));
    }
    if !(length > 0.0) {
        return Err(Error::InvalidGrid(format!("length = {length} must be positive")));
    }
    Ok(Grid {
        n,
        length,
        spacing: length / n as f64,
        boundary,
    })
}

/// Sampled electric potential V, magnetic potential A and mass m, one
/// value per site.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    pub v: Vec<f64>,
    pub a: Vec<f64>,
    pub m: Vec<f64>,
}

impl PotentialSpec {
    pub fn free(n: usize, mass: f64) -> Self {
        Self {
            v: vec![0.0; n],
            a: vec![0.0; n],
            m: vec![mass; n],
        }
    }

    pub fn validate(&self, grid: &Grid) -> Result<()> {
        for (name, arr) in [("V", &self.v), ("A", &self.a), ("m", &self.m)] {
            if arr.len() != grid.n {
                return Err(Error::InvalidPotential(format!(
                    "{name} has {} samples, grid has {} sites",
                    arr.len(),
                    grid.n
                )));
            }
            if arr.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidPotential(format!("{name} has non-finite entries")));
            }
        }
        if self.m.iter().any(|&m| m < 0.0) {
            return Err(Error::InvalidPotential("mass must be pointwise nonnegative".into()));
        }
        Ok(())
    }
}

/// eps^2, its principal square root, and mu = sqrt(min eig(eps^2)).
#[derive(Debug, Clone)]
pub struct EpsilonPair {
    pub eps2: DenseOperator,
    pub eps: DenseOperator,
    /// eps^{-1}, from the same eigenbasis.
    pub eps_inv: DenseOperator,
    pub mu: f64,
    pub eigenvalues: Vec<f64>,
}

/// Link phase angles theta_{j+1/2} = h * (A_j + A_{j+1})/2 for every bond.
/// For Dirichlet grids the wrap-around bond is dropped.
fn link_phases(grid: &Grid, a: &[f64]) -> Vec<f64> {
    let n = grid.n;
    let h = grid.spacing;
    let bonds = match grid.boundary {
        Boundary::Periodic => n,
        Boundary::Dirichlet => n - 1,
    };
    (0..bonds)
        .map(|j| h * 0.5 * (a[j] + a[(j + 1) % n]))
        .collect()
}

/// Assembles eps^2 from explicit link phases; shared by the public
/// constructor and by the gauge-covariance tests, where the phases are
/// shifted exactly.
fn eps2_from_links(grid: &Grid, theta: &[f64], m: &[f64]) -> CMat {
    let n = grid.n;
    let h2 = grid.spacing * grid.spacing;
    let mut out = CMat::zeros((n, n));
    for j in 0..n {
        out[(j, j)] = Complex64::new(2.0 / h2 + m[j] * m[j], 0.0);
    }
    for (b, &th) in theta.iter().enumerate() {
        let jp = (b + 1) % n;
        // hopping j -> j+1 carries exp(i theta)
        let u = Complex64::from_polar(1.0 / h2, th);
        out[(b, jp)] -= u.conj();
        out[(jp, b)] -= u;
    }
    out
}

/// Discretizes eps^2 = -(d - iA)^2 + m^2 and takes its principal square
/// root. Fails with NotPositive when the minimum eigenvalue is not
/// strictly positive (e.g. zero mass on a periodic grid).
pub fn discretize_schrodinger(grid: &Grid, pot: &PotentialSpec) -> Result<EpsilonPair> {
    pot.validate(grid)?;
    let theta = link_phases(grid, &pot.a);
    let eps2_mat = eps2_from_links(grid, &theta, &pot.m);
    epsilon_pair_from_matrix(grid, eps2_mat)
}

fn epsilon_pair_from_matrix(grid: &Grid, eps2_mat: CMat) -> Result<EpsilonPair> {
    let space = Space::L2 { sites: grid.n };
    let (w, u) = eps2_mat.eigh(UPLO::Lower)?;
    let lambda_min = w[0];
    let scale = w.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
    // Zero modes come back from LAPACK as O(eps * scale); a relative
    // threshold separates them from genuinely positive spectrum.
    if lambda_min <= 1e-12 * scale.max(1.0) {
        return Err(Error::NotPositive(lambda_min));
    }
    let uh = crate::dense::adjoint(&u);
    let scale_cols = |f: &dyn Fn(f64) -> f64| -> CMat {
        let mut s = u.clone();
        for (j, &wj) in w.iter().enumerate() {
            let factor = Complex64::new(f(wj), 0.0);
            s.slice_mut(ndarray::s![.., j]).mapv_inplace(|z| z * factor);
        }
        s.dot(&uh)
    };
    let eps = scale_cols(&|x: f64| x.sqrt());
    let eps_inv = scale_cols(&|x: f64| 1.0 / x.sqrt());
    Ok(EpsilonPair {
        eps2: DenseOperator::new(space, eps2_mat)?,
        eps: DenseOperator::new(space, eps)?,
        eps_inv: DenseOperator::new(space, eps_inv)?,
        mu: lambda_min.sqrt(),
        eigenvalues: w.to_vec(),
    })
}

/// Exact eigenvalues of the free periodic stencil, (2/h)^2 sin^2(k h/2) + m^2,
/// one per lattice momentum. Independent closed-form oracle for tests.
pub fn free_eps2_spectrum(grid: &Grid, mass: f64) -> Vec<f64> {
    let h = grid.spacing;
    grid.momenta()
        .iter()
        .map(|&k| {
            let s = (k * h / 2.0).sin() * 2.0 / h;
            s * s + mass * mass
        })
        .collect()
}

/// The discrete gauge gradient adapted to midpoint link phases: the site
/// field g with midpoint averages (g_j + g_{j+1})/2 equal to the exact
/// link differences (chi_{j+1} - chi_j)/h. Periodic grids only; chi must
/// have no Nyquist component (checked). Fourier symbol (2i/h) tan(k h/2).
pub fn gauge_gradient(grid: &Grid, chi: &[f64]) -> Result<Vec<f64>> {
    if grid.boundary != Boundary::Periodic {
        return Err(Error::InvalidGrid(
            "gauge_gradient is defined for periodic grids".into(),
        ));
    }
    let n = grid.n;
    if chi.len() != n {
        return Err(Error::InvalidPotential("chi sample count mismatch".into()));
    }
    let mut buf: Vec<Complex64> = chi.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buf);
    let h = grid.spacing;
    let nyquist_mass: f64 = if n % 2 == 0 { buf[n / 2].norm() } else { 0.0 };
    let total: f64 = buf.iter().map(|z| z.norm()).sum();
    if nyquist_mass > 1e-12 * total.max(1.0) {
        return Err(Error::InvalidPotential(
            "chi has Nyquist content; the adapted gauge gradient does not exist".into(),
        ));
    }
    for (j, z) in buf.iter_mut().enumerate() {
        let k = if j <= n / 2 {
            j as f64
        } else {
            j as f64 - n as f64
        } * 2.0
            * std::f64::consts::PI
            / grid.length;
        let sym = if n % 2 == 0 && j == n / 2 {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, (2.0 / h) * (k * h / 2.0).tan())
        };
        *z *= sym;
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    Ok(buf.iter().map(|z| z.re / n as f64).collect())
}

/// Diagonal unitary exp(i chi) on the single-component space.
pub fn site_phase_unitary(chi: &[f64]) -> CMat {
    let n = chi.len();
    let mut m = CMat::zeros((n, n));
    for (j, &c) in chi.iter().enumerate() {
        m[(j, j)] = Complex64::from_polar(1.0, c);
    }
    m
}

/// First-order gauge-covariant central difference with link phases:
/// (D_A psi)_j = (U_{j+1/2} psi_{j+1} - U*_{j-1/2} psi_{j-1}) / (2h).
/// Anti-Hermitian by construction. Used by the Dirac Hamiltonian.
pub fn covariant_derivative(grid: &Grid, a: &[f64]) -> CMat {
    let n = grid.n;
    let theta = link_phases(grid, a);
    let mut out = CMat::zeros((n, n));
    let inv2h = 1.0 / (2.0 * grid.spacing);
    for (b, &th) in theta.iter().enumerate() {
        let jp = (b + 1) % n;
        let u = Complex64::from_polar(inv2h, th);
        out[(b, jp)] += u.conj();
        out[(jp, b)] -= u;
    }
    out
}

/// Checks the EpsilonPair invariants; returns the worst relative defect.
pub fn epsilon_invariant_defect(pair: &EpsilonPair) -> f64 {
    let sq = pair.eps.matrix.dot(&pair.eps.matrix);
    let d1 = crate::dense::norm2(&(&sq - &pair.eps2.matrix)) / pair.eps2.norm2().max(1.0);
    let comm = pair.eps.matrix.dot(&pair.eps2.matrix) - pair.eps2.matrix.dot(&pair.eps.matrix);
    let d2 = crate::dense::norm2(&comm) / (pair.eps.norm2() * pair.eps2.norm2()).max(1.0);
    let d3 = pair.eps2.hermiticity_defect() / pair.eps2.norm2().max(1.0);
    d1.max(d2).max(d3)
}

pub fn array1_from(v: &[f64]) -> Array1<f64> {
    Array1::from_vec(v.to_vec())
}

pub fn default_tol() -> Tolerances {
    Tolerances::default()
}
