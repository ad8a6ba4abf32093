//! General complex eigendecomposition with eigenvalue clustering and
//! Riesz spectral projections.
//!
//! In finite dimension the Riesz projection onto an isolated spectral
//! cluster equals the contour integral of the resolvent around it; for a
//! diagonalizable matrix it is X E X^{-1} with E selecting the cluster's
//! columns. That is the default path. When the eigenvector matrix is
//! numerically singular (Jordan structure) the projection falls back to a
//! trapezoidal contour integral on a circle enclosing the cluster, which
//! converges geometrically for isolated clusters and needs no
//! eigenvectors at all.

use ndarray::{s, Array1};
use ndarray_linalg::{Eig, Inverse, Solve};
use num_complex::Complex64;

use crate::dense::{norm2, CMat, DenseOperator, Space};
use crate::error::{Error, Result};
use crate::tolerances::Tolerances;

/// One single-linkage cluster of eigenvalues.
#[derive(Debug, Clone)]
pub struct Cluster {
    /// Indices into `Eigensystem::values`.
    pub members: Vec<usize>,
    /// Multiplicity-weighted mean of the member eigenvalues.
    pub center: Complex64,
    /// Max distance of a member from the center.
    pub radius: f64,
    /// Distance from the cluster to the rest of the spectrum.
    pub isolation: f64,
}

/// Eigendecomposition of a general complex square matrix, with the
/// spectrum grouped into single-linkage clusters at threshold `gap_min`.
pub struct Eigensystem {
    pub space: Space,
    pub values: Vec<Complex64>,
    pub clusters: Vec<Cluster>,
    pub spectral_radius: f64,
    pub gap_min: f64,
    pub im_threshold: f64,
    matrix: CMat,
    right: CMat,
    /// X^{-1}, absent when the eigenvector matrix is numerically singular.
    left: Option<CMat>,
    pub inverse_residual: f64,
}

impl Eigensystem {
    pub fn new(op: &DenseOperator, tol: &Tolerances) -> Result<Self> {
        let (values, right) = op.matrix.eig()?;
        let values: Vec<Complex64> = values.to_vec();
        let spectral_radius = values.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let scale = spectral_radius.max(1e-300);
        let gap_min = tol.gap_min_rel * scale;
        let im_threshold = tol.im_threshold_rel * scale;

        // A numerically singular eigenvector matrix means Jordan
        // structure; mode sums are then meaningless and the Riesz
        // projections fall back to the contour path. The reciprocal
        // condition number is the reliable detector (the residual of
        // X X^{-1} - I can look fine even at rcond ~ 1e-16).
        let rcond = {
            let (_, sv, _) = ndarray_linalg::SVD::svd(&right, false, false)?;
            let smax = sv.iter().cloned().fold(0.0, f64::max);
            let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
            if smax > 0.0 {
                smin / smax
            } else {
                0.0
            }
        };
        let (left, inverse_residual) = if rcond < 1e-10 {
            (None, f64::INFINITY)
        } else {
            match right.inv() {
                Ok(inv) => {
                    let res = norm2(&(right.dot(&inv) - CMat::eye(right.nrows())));
                    (Some(inv), res)
                }
                Err(_) => (None, f64::INFINITY),
            }
        };

        let clusters = cluster_single_linkage(&values, gap_min);

        Ok(Self {
            space: op.space,
            values,
            clusters,
            spectral_radius,
            gap_min,
            im_threshold,
            matrix: op.matrix.clone(),
            right,
            left,
            inverse_residual,
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix_ref(&self) -> &CMat {
        &self.matrix
    }

    pub fn is_diagonalizable(&self) -> bool {
        self.left.is_some()
    }

    /// True when |Im center| is below im_threshold/10; an error inside
    /// the dead band [im_threshold/10, im_threshold].
    pub fn cluster_is_real(&self, cluster: &Cluster) -> Result<bool> {
        let im = cluster.center.im.abs();
        if im >= self.im_threshold {
            Ok(false)
        } else if im <= self.im_threshold / 10.0 {
            Ok(true)
        } else {
            Err(Error::AmbiguousRealness(cluster.center))
        }
    }

    /// Indices of clusters with nonreal center, paired as (upper, lower)
    /// conjugate partners of equal multiplicity.
    pub fn conjugate_pairs(&self) -> Result<Vec<(usize, usize)>> {
        let mut upper: Vec<usize> = Vec::new();
        let mut lower: Vec<usize> = Vec::new();
        for (ci, c) in self.clusters.iter().enumerate() {
            if !self.cluster_is_real(c)? {
                if c.center.im > 0.0 {
                    upper.push(ci);
                } else {
                    lower.push(ci);
                }
            }
        }
        let mut pairs = Vec::with_capacity(upper.len());
        let mut used = vec![false; lower.len()];
        for &ui in &upper {
            let cu = &self.clusters[ui];
            let target = cu.center.conj();
            let mut best: Option<(usize, f64)> = None;
            for (k, &li) in lower.iter().enumerate() {
                if used[k] {
                    continue;
                }
                let d = (self.clusters[li].center - target).norm();
                if best.map_or(true, |(_, bd)| d < bd) {
                    best = Some((k, d));
                }
            }
            match best {
                Some((k, d))
                    if d <= 10.0 * (self.gap_min + cu.radius)
                        && self.clusters[lower[k]].members.len() == cu.members.len() =>
                {
                    used[k] = true;
                    pairs.push((ui, lower[k]));
                }
                _ => return Err(Error::UnpairedComplexEigenvalue(cu.center)),
            }
        }
        if used.iter().any(|u| !u) {
            let li = lower[used.iter().position(|u| !u).unwrap()];
            return Err(Error::UnpairedComplexEigenvalue(self.clusters[li].center));
        }
        Ok(pairs)
    }

    /// Riesz projection onto the invariant subspace of one cluster.
    pub fn riesz_projection(&self, cluster_index: usize) -> Result<DenseOperator> {
        let cluster = &self.clusters[cluster_index];
        if cluster.isolation <= self.gap_min && cluster.members.len() < self.dim() {
            return Err(Error::ClusterNotIsolated {
                gap: cluster.isolation,
                gap_min: self.gap_min,
            });
        }
        let matrix = match &self.left {
            Some(left) => self.mode_sum_selected(&cluster.members, left),
            None => self.contour_projection(cluster)?,
        };
        DenseOperator::new(self.space, matrix)
    }

    /// Sum of Riesz projections over a set of clusters.
    pub fn riesz_sum(&self, cluster_indices: &[usize]) -> Result<DenseOperator> {
        let mut acc = CMat::zeros((self.dim(), self.dim()));
        for &ci in cluster_indices {
            acc = acc + self.riesz_projection(ci)?.matrix;
        }
        DenseOperator::new(self.space, acc)
    }

    /// X diag(w) X^{-1} for arbitrary per-eigenvalue weights. This is the
    /// workhorse behind time evolution and the exact mode-sum calculus.
    pub fn weighted_mode_sum(&self, weights: &[Complex64]) -> Result<DenseOperator> {
        assert_eq!(weights.len(), self.values.len());
        let left = self.left.as_ref().ok_or_else(|| {
            Error::InconsistentClassification(
                "matrix is numerically defective; mode sums unavailable".into(),
            )
        })?;
        let mut scaled = self.right.clone();
        for (j, &w) in weights.iter().enumerate() {
            scaled.slice_mut(s![.., j]).mapv_inplace(|z| z * w);
        }
        DenseOperator::new(self.space, scaled.dot(left))
    }

    /// Applies a scalar function to the real part of the spectrum:
    /// sum of f(lambda) P_lambda over real clusters, zero on the rest.
    pub fn real_mode_function(
        &self,
        f: impl Fn(f64) -> Complex64,
    ) -> Result<DenseOperator> {
        let mut weights = vec![Complex64::new(0.0, 0.0); self.values.len()];
        for c in &self.clusters {
            if self.cluster_is_real(c)? {
                let w = f(c.center.re);
                for &m in &c.members {
                    weights[m] = w;
                }
            }
        }
        self.weighted_mode_sum(&weights)
    }

    fn mode_sum_selected(&self, members: &[usize], left: &CMat) -> CMat {
        let n = self.dim();
        let k = members.len();
        let mut xs = CMat::zeros((n, k));
        let mut ys = CMat::zeros((k, n));
        for (j, &m) in members.iter().enumerate() {
            xs.slice_mut(s![.., j]).assign(&self.right.slice(s![.., m]));
            ys.slice_mut(s![j, ..]).assign(&left.slice(s![m, ..]));
        }
        xs.dot(&ys)
    }

    /// Trapezoidal contour integral of the resolvent on a circle around
    /// the cluster. Exact path for defective matrices.
    fn contour_projection(&self, cluster: &Cluster) -> Result<CMat> {
        let margin = if cluster.isolation.is_finite() && cluster.isolation > 0.0 {
            cluster.isolation / 2.0
        } else {
            self.gap_min.max(1e-8)
        };
        let radius = cluster.radius + margin;
        let center = cluster.center;
        let nodes = 64;
        let n = self.dim();
        let mut acc = CMat::zeros((n, n));
        let eye = CMat::eye(n);
        for k in 0..nodes {
            let theta = 2.0 * std::f64::consts::PI * (k as f64 + 0.5) / nodes as f64;
            let w = Complex64::from_polar(radius, theta);
            let z = center + w;
            let shifted = &self.matrix - &(&eye * z);
            let inv = shifted.inv()?;
            // P = 1/(2 pi i) * contour_int (z - A)^{-1} dz; the midpoint
            // rule absorbs dz = i w dtheta, leaving -w/nodes * (A - z)^{-1}.
            acc = acc + inv * (-w / nodes as f64);
        }
        Ok(acc)
    }

    /// Min distance between real eigenvalue cluster centers and x.
    pub fn real_boundary_distance(&self, x: f64) -> f64 {
        self.clusters
            .iter()
            .filter(|c| c.center.im.abs() < self.im_threshold)
            .map(|c| (c.center.re - x).abs())
            .fold(f64::INFINITY, f64::min)
    }
}

/// Resolvent (z - A)^{-1} with a norm guard; shared by the Davies
/// quadrature. Independent of any eigendecomposition.
pub fn resolvent(a: &CMat, z: Complex64, blowup: f64) -> Result<CMat> {
    let n = a.nrows();
    let shifted = &(&CMat::eye(n) * z) - a;
    let inv = shifted.inv().map_err(|_| Error::ResolventBlowup {
        node: z,
        norm: f64::INFINITY,
    })?;
    let norm = inv.rows().into_iter().fold(0.0f64, |m, row| {
        m.max(row.iter().map(|v| v.norm()).sum())
    });
    if norm > blowup {
        return Err(Error::ResolventBlowup { node: z, norm });
    }
    Ok(inv)
}

/// Solve (z - A) x = rhs for a single vector.
pub fn resolvent_apply(a: &CMat, z: Complex64, rhs: &Array1<Complex64>) -> Result<Array1<Complex64>> {
    let n = a.nrows();
    let shifted = &(&CMat::eye(n) * z) - a;
    Ok(shifted.solve(rhs)?)
}

fn cluster_single_linkage(values: &[Complex64], gap_min: f64) -> Vec<Cluster> {
    let k = values.len();
    let mut parent: Vec<usize> = (0..k).collect();
    fn find(parent: &mut Vec<usize>, i: usize) -> usize {
        if parent[i] != i {
            let r = find(parent, parent[i]);
            parent[i] = r;
        }
        parent[i]
    }
    for i in 0..k {
        for j in (i + 1)..k {
            if (values[i] - values[j]).norm() <= gap_min {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri] = rj;
                }
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..k {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    let mut clusters: Vec<Cluster> = groups
        .into_values()
        .map(|members| {
            let center = members.iter().map(|&m| values[m]).sum::<Complex64>()
                / members.len() as f64;
            let radius = members
                .iter()
                .map(|&m| (values[m] - center).norm())
                .fold(0.0, f64::max);
            Cluster {
                members,
                center,
                radius,
                isolation: f64::INFINITY,
            }
        })
        .collect();
    // Stable ordering: by real part, then imaginary part.
    clusters.sort_by(|a, b| {
        (a.center.re, a.center.im)
            .partial_cmp(&(b.center.re, b.center.im))
            .unwrap()
    });
    let centers: Vec<(Vec<usize>, Complex64)> = clusters
        .iter()
        .map(|c| (c.members.clone(), c.center))
        .collect();
    for (ci, c) in clusters.iter_mut().enumerate() {
        let mut iso = f64::INFINITY;
        for (cj, (members, _)) in centers.iter().enumerate() {
            if ci == cj {
                continue;
            }
            for &m in members {
                for &own in &c.members {
                    iso = iso.min((values[own] - values[m]).norm());
                }
            }
        }
        c.isolation = iso;
    }
    clusters
}
