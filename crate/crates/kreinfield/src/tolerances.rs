//! Numerical tolerance knobs shared across the crate.

use serde::{Deserialize, Serialize};

/// All tolerances are relative to a natural scale of the object they
/// guard (matrix norm, spectral radius, total spectral mass) unless the
/// name says otherwise. Scenario files may override any field; the
/// defaults are the ones the shipped scenarios were frozen with.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Matrix identity checks: |A - B| <= tol_mat_rel * scale.
    pub tol_mat_rel: f64,
    /// Eigenvalue comparisons, relative to the spectral radius.
    pub tol_eig_rel: f64,
    /// Cluster isolation threshold, relative to the spectral radius.
    pub gap_min_rel: f64,
    /// Real/complex decision threshold on |Im(lambda)|, relative to the
    /// spectral radius. Eigenvalues between im_threshold/10 and
    /// im_threshold are ambiguous and rejected.
    pub im_threshold_rel: f64,
    /// Out-of-support mass fraction accepted by the FFT support check.
    pub leak_tol: f64,
    /// Resolvent norms above 1/eps_resolvent abort the Davies quadrature.
    pub eps_resolvent: f64,
    /// Singular values below rank_tol * max count as numerical kernel.
    pub rank_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            tol_mat_rel: 1e-10,
            tol_eig_rel: 1e-8,
            gap_min_rel: 1e-6,
            im_threshold_rel: 1e-7,
            leak_tol: 1e-4,
            eps_resolvent: 1e-13,
            rank_tol: 1e-8,
        }
    }
}
