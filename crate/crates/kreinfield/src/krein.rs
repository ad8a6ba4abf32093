//! Indefinite-inner-product linear algebra: Gram structures, Krein
//! adjoints, sign types, critical points and definitizing polynomials.
//!
//! The indefinite product is [u|v] = (u|Gv) for an invertible Hermitian
//! Gram matrix G. An operator A is Krein self-adjoint when G A is
//! Hermitian. Its real eigenvalue clusters carry a restriction of [.|.]
//! whose inertia decides the sign type; mixed or degenerate restrictions
//! (and Jordan structure) mark critical points. In finite dimension
//! every Krein self-adjoint matrix is definitizable — the characteristic
//! polynomial annihilates it — so a definitizing polynomial can always
//! be assembled from the spectral data and is verified a posteriori.

use ndarray::s;
use ndarray_linalg::{Eigh, Inverse, UPLO};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dense::{adjoint, block_swap, hermitian_part, norm2, CMat, DenseOperator, Space};
use crate::eigen::Eigensystem;
use crate::error::{Error, Result};
use crate::tolerances::Tolerances;

/// The Gram operator of the indefinite inner product, with its inverse.
#[derive(Debug, Clone)]
pub struct KreinStructure {
    pub space: Space,
    pub form: CMat,
    form_inv: CMat,
}

impl KreinStructure {
    pub fn new(space: Space, form: CMat, tol: &Tolerances) -> Result<Self> {
        if form.nrows() != space.dim() {
            return Err(Error::DimensionMismatch(form.nrows(), space.dim()));
        }
        let scale = norm2(&form);
        let herm_defect = norm2(&(&form - &adjoint(&form)));
        if herm_defect > tol.tol_mat_rel * scale.max(1.0) {
            return Err(Error::InconsistentClassification(format!(
                "Gram matrix is not Hermitian (defect {herm_defect:.3e})"
            )));
        }
        let (_, sv, _) = ndarray_linalg::SVD::svd(&form, false, false)?;
        let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
        if smin <= tol.rank_tol * scale {
            return Err(Error::InconsistentClassification(format!(
                "Gram matrix is numerically singular (sigma_min {smin:.3e})"
            )));
        }
        let form_inv = form.inv()?;
        Ok(Self {
            space,
            form,
            form_inv,
        })
    }

    /// Hilbert-space case: G = identity, [.|.] degenerates to (.|.).
    pub fn hilbert(space: Space) -> Self {
        Self {
            space,
            form: CMat::eye(space.dim()),
            form_inv: CMat::eye(space.dim()),
        }
    }

    /// The charge form of the doubled Klein-Gordon space in plain
    /// coordinates: [u|v] = (u1|v2) + (u2|v1), the block swap.
    pub fn kg_charge(sites: usize) -> Self {
        let g = block_swap(sites);
        Self {
            space: Space::KreinDoubled { sites },
            form: g.clone(),
            form_inv: g,
        }
    }

    pub fn dim(&self) -> usize {
        self.form.nrows()
    }

    /// [u|v] = (u|Gv).
    pub fn inner(&self, u: &crate::dense::CVec, v: &crate::dense::CVec) -> Complex64 {
        let gv = self.form.dot(v);
        u.iter().zip(gv.iter()).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn form_inv(&self) -> &CMat {
        &self.form_inv
    }
}

/// Krein adjoint G^{-1} A^H G.
pub fn krein_adjoint(a: &DenseOperator, k: &KreinStructure) -> Result<DenseOperator> {
    if a.space != k.space {
        return Err(Error::SpaceMismatch(a.space, k.space));
    }
    let m = k.form_inv.dot(&adjoint(&a.matrix)).dot(&k.form);
    DenseOperator::new(a.space, m)
}

/// Deviation of A from Krein self-adjointness, |A - A^dagger| / |A|.
pub fn krein_selfadjoint_defect(a: &DenseOperator, k: &KreinStructure) -> Result<f64> {
    let ad = krein_adjoint(a, k)?;
    Ok(norm2(&(&a.matrix - &ad.matrix)) / a.norm2().max(1.0))
}

/// Smallest eigenvalue of the Hermitian part of G A; nonnegative (up to
/// tol) exactly when A is Krein positive.
pub fn krein_positivity_min_eig(a: &DenseOperator, k: &KreinStructure) -> Result<f64> {
    if a.space != k.space {
        return Err(Error::SpaceMismatch(a.space, k.space));
    }
    let ga = k.form.dot(&a.matrix);
    let h = hermitian_part(&ga);
    let (w, _) = h.eigh(UPLO::Lower)?;
    Ok(w[0])
}

pub fn is_krein_positive(a: &DenseOperator, k: &KreinStructure, tol: f64) -> Result<bool> {
    Ok(krein_positivity_min_eig(a, k)? >= -tol)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignType {
    Positive,
    Negative,
    Mixed,
}

/// One spectral cluster of the report: value = cluster center, mult =
/// algebraic multiplicity.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EigenvalueEntry {
    pub re: f64,
    pub im: f64,
    pub mult: usize,
    pub sign_type: SignType,
    pub critical: bool,
    pub defective: bool,
}

impl EigenvalueEntry {
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }

    pub fn is_real(&self) -> bool {
        self.im == 0.0
    }
}

/// Classified spectrum of a Krein self-adjoint matrix. Entries are
/// eigenvalue clusters (single-linkage at gap_min); real entries have im
/// snapped to zero.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub eigenvalues: Vec<EigenvalueEntry>,
    pub complex_pairs: Vec<(usize, usize)>,
}

impl SpectrumReport {
    pub fn critical_points(&self) -> Vec<f64> {
        self.eigenvalues
            .iter()
            .filter(|e| e.critical)
            .map(|e| e.re)
            .collect()
    }

    pub fn has_complex(&self) -> bool {
        !self.complex_pairs.is_empty()
    }

    /// Real clusters in [0, inf) whose restriction of the form is not
    /// positive definite: the set a positive-frequency projection must
    /// avoid for Krein positivity. A superset of the critical points.
    pub fn positivity_obstructions(&self) -> Vec<f64> {
        self.eigenvalues
            .iter()
            .filter(|e| {
                e.is_real() && e.re >= 0.0 && (e.sign_type != SignType::Positive || e.defective)
            })
            .map(|e| e.re)
            .collect()
    }
}

/// Inertia of the restricted form on the range of a Riesz projection.
fn restricted_inertia(
    p: &CMat,
    g: &CMat,
    rank_hint: usize,
    tol: &Tolerances,
) -> Result<(usize, usize, usize)> {
    let (u_opt, sv, _) = ndarray_linalg::SVD::svd(p, true, false)?;
    let u = u_opt.expect("svd with u requested");
    let rank = sv.iter().filter(|&&s| s > 0.5).count();
    let rank = if rank == 0 { rank_hint } else { rank };
    let basis = u.slice(s![.., ..rank]).to_owned();
    let m = adjoint(&basis).dot(g).dot(&basis);
    let (w, _) = m.eigh(UPLO::Lower)?;
    let g_scale = norm2(g).max(1.0);
    let thr = tol.tol_eig_rel * g_scale;
    let n_pos = w.iter().filter(|&&x| x > thr).count();
    let n_neg = w.iter().filter(|&&x| x < -thr).count();
    let n_zero = w.len() - n_pos - n_neg;
    Ok((n_pos, n_neg, n_zero))
}

/// Classifies the spectrum of a Krein self-adjoint matrix: conjugate
/// pairing of complex clusters, sign types of real clusters via the
/// inertia of the restricted form, Jordan defect detection, and the
/// critical flag (real and mixed/degenerate/defective).
pub fn classify_spectrum(
    es: &Eigensystem,
    k: &KreinStructure,
    tol: &Tolerances,
) -> Result<SpectrumReport> {
    if es.space != k.space {
        return Err(Error::SpaceMismatch(es.space, k.space));
    }
    let pairs = es.conjugate_pairs()?;
    let mut entries = Vec::with_capacity(es.clusters.len());
    for (ci, cluster) in es.clusters.iter().enumerate() {
        let real = es.cluster_is_real(cluster)?;
        let p = es.riesz_projection(ci)?;
        let (n_pos, n_neg, n_zero) =
            restricted_inertia(&p.matrix, &k.form, cluster.members.len(), tol)?;
        let sign_type = if n_neg == 0 && n_zero == 0 && n_pos > 0 {
            SignType::Positive
        } else if n_pos == 0 && n_zero == 0 && n_neg > 0 {
            SignType::Negative
        } else {
            SignType::Mixed
        };
        // Nilpotent part on the cluster: P (A - lambda) P. A spread of
        // distinct eigenvalues inside one cluster also leaves a residue
        // of the order of the cluster radius, so the defect threshold
        // sits above it.
        let shifted = &es.matrix_ref().clone() - &(&CMat::eye(es.dim()) * cluster.center);
        let nil = p.matrix.dot(&shifted).dot(&p.matrix);
        let nil_norm = norm2(&nil);
        let defective =
            nil_norm > 10.0 * cluster.radius + tol.tol_eig_rel * es.spectral_radius.max(1.0);
        let critical = real && (sign_type == SignType::Mixed || defective);
        entries.push(EigenvalueEntry {
            re: cluster.center.re,
            im: if real { 0.0 } else { cluster.center.im },
            mult: cluster.members.len(),
            sign_type,
            critical,
            defective,
        });
    }
    Ok(SpectrumReport {
        eigenvalues: entries,
        complex_pairs: pairs,
    })
}

/// Sum of the Riesz projections over all conjugate pairs. Idempotent and
/// Krein self-adjoint; each individual root subspace is neutral for the
/// form.
pub fn complex_part_projection(es: &Eigensystem) -> Result<DenseOperator> {
    let pairs = es.conjugate_pairs()?;
    let mut indices = Vec::new();
    for (u, l) in pairs {
        indices.push(u);
        indices.push(l);
    }
    es.riesz_sum(&indices)
}

/// Real polynomial with ascending coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polynomial(pub Vec<f64>);

impl Polynomial {
    pub fn one() -> Self {
        Polynomial(vec![1.0])
    }

    pub fn from_real_roots(roots: &[f64]) -> Self {
        let mut p = Polynomial::one();
        for &r in roots {
            p = p.mul(&Polynomial(vec![-r, 1.0]));
        }
        p
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        let mut out = vec![0.0; self.0.len() + other.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in other.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Polynomial(out)
    }

    pub fn scale(&self, c: f64) -> Polynomial {
        Polynomial(self.0.iter().map(|a| a * c).collect())
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn degree(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    /// Horner evaluation on a matrix.
    pub fn apply(&self, a: &DenseOperator) -> DenseOperator {
        let n = a.dim();
        let eye = CMat::eye(n);
        let mut acc = CMat::zeros((n, n));
        for &c in self.0.iter().rev() {
            acc = acc.dot(&a.matrix) + &eye * Complex64::new(c, 0.0);
        }
        DenseOperator {
            space: a.space,
            matrix: acc,
        }
    }
}

/// Builds a definitizing polynomial from the classified spectrum:
/// squared factors at critical points, conjugate quadratics at complex
/// pairs, and a sign-interpolating base polynomial matching the sign
/// types of the remaining real clusters. Verified a posteriori by the
/// Krein positivity of p(A); failure means the spectrum was
/// mis-classified.
pub fn definitizing_polynomial(
    es: &Eigensystem,
    k: &KreinStructure,
    report: &SpectrumReport,
    _tol: &Tolerances,
) -> Result<Polynomial> {
    let mut p = Polynomial::one();
    for e in &report.eigenvalues {
        if e.is_real() && e.critical {
            let lin = Polynomial(vec![-e.re, 1.0]);
            p = p.mul(&lin).mul(&lin);
        }
    }
    for &(u, _) in &report.complex_pairs {
        let z = report.eigenvalues[u].value();
        // (x - z)(x - conj z) = x^2 - 2 Re(z) x + |z|^2
        p = p.mul(&Polynomial(vec![z.norm_sqr(), -2.0 * z.re, 1.0]));
    }

    let mut plain: Vec<(f64, f64)> = report
        .eigenvalues
        .iter()
        .filter(|e| e.is_real() && !e.critical)
        .map(|e| {
            let s = match e.sign_type {
                SignType::Positive => 1.0,
                SignType::Negative => -1.0,
                SignType::Mixed => 0.0,
            };
            (e.re, s)
        })
        .collect();
    plain.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

    let base = if plain.is_empty() {
        Polynomial::one()
    } else {
        let mut roots = Vec::new();
        for w in plain.windows(2) {
            if w[0].1 != w[1].1 {
                roots.push(0.5 * (w[0].0 + w[1].0));
            }
        }
        let base = Polynomial::from_real_roots(&roots);
        let first = plain[0];
        let sign_at_first = base.eval(first.0).signum();
        if sign_at_first == first.1 || first.1 == 0.0 {
            base
        } else {
            base.scale(-1.0)
        }
    };
    let p = p.mul(&base);

    let pa = p.apply(&DenseOperator {
        space: es.space,
        matrix: es.matrix_ref().clone(),
    });
    // Positivity tolerance scales with the polynomial's size on the
    // spectrum: the matrix entries of p(A) are that large.
    let scale = report
        .eigenvalues
        .iter()
        .map(|e| p.eval(e.re).abs())
        .fold(1.0, f64::max)
        * norm2(&k.form);
    let min_eig = krein_positivity_min_eig(&pa, k)?;
    if min_eig < -1e-6 * scale {
        return Err(Error::ConstructionFailed(min_eig));
    }
    Ok(p)
}
