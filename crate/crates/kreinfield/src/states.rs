//! Quasi-free state data over the kernel structures: the symplectic
//! form sigma = -i G, the covariance mu built from the frequency
//! projection, the dominating-form test, Weyl expectation values, and
//! the ground/maximal state verdicts.
//!
//! The real subspace K_R consists of vectors (f, ig) with f, g real; it
//! is G-neutral, sigma is real antisymmetric on it and mu real
//! symmetric. The complexified identity G 1_J(b) = mu + (i/2) sigma
//! holds exactly by construction. A state exists iff mu dominates
//! sigma; degeneracy of mu on K_R (its numerical kernel) is what
//! separates the overcritical states from Fock-type ground states.

use ndarray::Array2;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use serde::Serialize;

use crate::dense::{norm2, CMat, CVec};
use crate::error::{Error, Result};
use crate::interval::IntervalUnion;
use crate::krein::{KreinStructure, SpectrumReport};
use crate::models::KGModel;
use crate::propagator::Propagator;
use crate::tolerances::Tolerances;

#[derive(Debug, Clone)]
pub struct StateData {
    pub j: IntervalUnion,
    /// Matrix of sigma(u, v) = -i [u|v] in plain coordinates.
    pub sigma: CMat,
    /// Matrix of mu(u, v) = sigma(u, j v)/2 = G (2 1_J - 1) / 2.
    pub mu: CMat,
    /// 1_J(b).
    pub one_j: CMat,
    pub dominating: bool,
    pub ground: bool,
    pub degeneracy_dim: usize,
    /// A sampled (u, v) violating the dominating inequality, when one
    /// exists.
    pub violating_pair: Option<(CVec, CVec)>,
    /// max |Im mu| over the real-subspace basis; a reality diagnostic.
    pub mu_reality_defect: f64,
}

/// Real-subspace basis vector a of K_R = Re L2 + i Re L2.
fn kr_basis(dim: usize, a: usize) -> CVec {
    let n = dim / 2;
    let mut v = CVec::zeros(dim);
    if a < n {
        v[a] = Complex64::new(1.0, 0.0);
    } else {
        v[a] = Complex64::new(0.0, 1.0);
    }
    v
}

/// Random vector of K_R with seeded coefficients.
fn random_kr(dim: usize, rng: &mut impl Rng) -> CVec {
    let n = dim / 2;
    CVec::from_shape_fn(dim, |i| {
        let c = rng.gen::<f64>() - 0.5;
        if i < n {
            Complex64::new(c, 0.0)
        } else {
            Complex64::new(0.0, c)
        }
    })
}

fn quad_form(m: &CMat, u: &CVec, v: &CVec) -> Complex64 {
    u.iter()
        .zip(m.dot(v).iter())
        .map(|(a, b)| a.conj() * b)
        .sum()
}

/// Assembles the forms for the frequency set carried by `prop` and runs
/// the dominating test: mu positive semidefinite on K_R plus the sampled
/// Cauchy-Schwarz inequality |sigma(u,v)|^2 <= 4 mu(u,u) mu(v,v).
pub fn build_state(
    prop: &Propagator,
    k: &KreinStructure,
    report: &SpectrumReport,
    samples: usize,
    seed: u64,
    tol: &Tolerances,
) -> Result<StateData> {
    let dim = prop.es.dim();
    let one_j = prop.frame_projection()?;
    let sigma = k.form.mapv(|z| z * Complex64::new(0.0, -1.0));
    let g_one_j = k.form.dot(&one_j);
    let mu = &g_one_j - &(&k.form * Complex64::new(0.5, 0.0));

    // Restriction of mu to K_R as a real symmetric matrix.
    let mut mu_real = Array2::<f64>::zeros((dim, dim));
    let mut reality_defect = 0.0f64;
    let basis: Vec<CVec> = (0..dim).map(|a| kr_basis(dim, a)).collect();
    let mu_cols: Vec<CVec> = basis.iter().map(|e| mu.dot(e)).collect();
    for a in 0..dim {
        for b in 0..dim {
            let val: Complex64 = basis[a]
                .iter()
                .zip(mu_cols[b].iter())
                .map(|(x, y)| x.conj() * y)
                .sum();
            mu_real[(a, b)] = val.re;
            reality_defect = reality_defect.max(val.im.abs());
        }
    }
    let mu_real = (&mu_real + &mu_real.t()) * 0.5;
    let (eigs, vecs) =
        ndarray_linalg::Eigh::eigh(&mu_real, ndarray_linalg::UPLO::Lower)?;
    let scale = eigs.iter().fold(0.0f64, |m, &x| m.max(x.abs())).max(1e-300);
    let psd = eigs[0] >= -tol.tol_eig_rel * scale;
    let degeneracy_dim = eigs.iter().filter(|&&x| x.abs() < tol.rank_tol * scale).count();

    // Sampled Cauchy-Schwarz on K_R.
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut violating_pair: Option<(CVec, CVec)> = None;
    let cs_tol = 1e-10 * norm2(&k.form).powi(2);
    for _ in 0..samples {
        let u = random_kr(dim, &mut rng);
        let v = random_kr(dim, &mut rng);
        let s = quad_form(&sigma, &u, &v);
        let muu = quad_form(&mu, &u, &u).re;
        let mvv = quad_form(&mu, &v, &v).re;
        if s.norm_sqr() > 4.0 * muu * mvv + cs_tol {
            violating_pair = Some((u, v));
            break;
        }
    }

    // A negative mu direction always yields an explicit violating pair:
    // sigma is nondegenerate, so some v sees the direction.
    if !psd && violating_pair.is_none() {
        let u_coeffs = vecs.column(0);
        let u = CVec::from_shape_fn(dim, |i| {
            let c = u_coeffs[i];
            if i < dim / 2 {
                Complex64::new(c, 0.0)
            } else {
                Complex64::new(0.0, c)
            }
        });
        // v maximizing |sigma(u, .)| over K_R: take the sigma-image of u
        // projected back to K_R coordinates.
        let su = sigma.dot(&u);
        let v = CVec::from_shape_fn(dim, |i| {
            if i < dim / 2 {
                Complex64::new(su[i].re, 0.0)
            } else {
                Complex64::new(0.0, su[i].im)
            }
        });
        violating_pair = Some((u, v));
    }

    let dominating = psd && violating_pair.is_none();

    // Ground verdict: positive frequencies only, nothing removed, no
    // complex modes, and b sgn(b) bounded away from zero.
    let ground = dominating
        && prop.j == IntervalUnion::positive_half_line()
        && report.critical_points().is_empty()
        && !report.has_complex()
        && ground_state_check(prop, report, 0.0).unwrap_or(false);

    Ok(StateData {
        j: prop.j.clone(),
        sigma,
        mu,
        one_j,
        dominating,
        ground,
        degeneracy_dim,
        violating_pair,
        mu_reality_defect: reality_defect,
    })
}

/// omega(W(v)) = exp(-mu(v, v)/2) for v in the real subspace.
pub fn weyl_expectation(state: &StateData, v: &CVec) -> Result<f64> {
    if !state.dominating {
        return Err(Error::NotAState);
    }
    let n = v.len() / 2;
    let scale: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let defect: f64 = v
        .iter()
        .enumerate()
        .map(|(i, z)| if i < n { z.im.abs() } else { z.re.abs() })
        .fold(0.0, f64::max);
    if defect > 1e-10 * scale.max(1.0) {
        return Err(Error::HypothesisViolated(
            "Weyl argument must lie in the real subspace (real upper, imaginary lower block)"
                .into(),
        ));
    }
    let mvv = quad_form(&state.mu, v, v).re;
    Ok((-0.5 * mvv).exp())
}

/// True iff the spectrum is real, away from zero, and b sgn(b) (the
/// mode-wise |lambda|) stays above `gap_threshold`. Errors when the
/// positive-frequency hypothesis fails (critical points present, J not
/// the positive half-line, or nonreal modes).
pub fn ground_state_check(
    prop: &Propagator,
    report: &SpectrumReport,
    gap_threshold: f64,
) -> Result<bool> {
    if !report.critical_points().is_empty() {
        return Err(Error::HypothesisViolated(format!(
            "critical points present: {:?}",
            report.critical_points()
        )));
    }
    if report.has_complex() {
        return Err(Error::HypothesisViolated(
            "nonreal eigenvalues present; sgn(b) is undefined on them".into(),
        ));
    }
    if prop.j != IntervalUnion::positive_half_line() {
        return Err(Error::HypothesisViolated(format!(
            "ground state construction requires J = [0, inf), got {}",
            prop.j
        )));
    }
    let min_abs = report
        .eigenvalues
        .iter()
        .map(|e| e.re.abs())
        .fold(f64::INFINITY, f64::min);
    Ok(min_abs >= gap_threshold.max(0.0) && min_abs > 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MaximalCase {
    GroundState,
    MaximalNonground,
}

#[derive(Debug, Clone, Serialize)]
pub struct MaximalSearchResult {
    pub j_max: IntervalUnion,
    pub case: MaximalCase,
    /// Real clusters in [0, inf) removed for positivity (critical or
    /// wrong-sign); empty in the subcritical case.
    pub removed: Vec<f64>,
}

/// The largest positive-frequency set whose projection stays Krein
/// positive: [0, inf) minus neighborhoods of every real cluster in
/// [0, inf) whose restricted form is not positive definite. In finite
/// dimension all critical points are regular, so the epsilon-shrinking
/// of the removed neighborhoods is exact: any epsilon below the
/// half-gap removes exactly the offending eigenspaces. The singular
/// case (no maximal state) cannot occur at finite matrix size.
pub fn maximal_state_search(
    model: &KGModel,
    report: &SpectrumReport,
    _tol: &Tolerances,
) -> Result<MaximalSearchResult> {
    let removed = report.positivity_obstructions();
    let subcritical_like = removed.is_empty() && !report.has_complex();
    if subcritical_like {
        return Ok(MaximalSearchResult {
            j_max: IntervalUnion::positive_half_line(),
            case: MaximalCase::GroundState,
            removed,
        });
    }
    // Half-gap epsilon per removed point keeps every kept cluster
    // strictly inside J and every removed one strictly outside.
    let real_positions: Vec<f64> = report
        .eigenvalues
        .iter()
        .filter(|e| e.is_real())
        .map(|e| e.re)
        .collect();
    let mut j = IntervalUnion::positive_half_line();
    for &c in &removed {
        let nearest_other = real_positions
            .iter()
            .filter(|&&x| (x - c).abs() > 1e-12)
            .map(|&x| (x - c).abs())
            .fold(f64::INFINITY, f64::min);
        let eps = if nearest_other.is_finite() {
            (nearest_other / 2.0).min(c.abs() / 2.0).max(1e-9)
        } else {
            (c.abs() / 2.0).max(1e-9)
        };
        j = j.remove_neighborhoods(&[c], eps);
    }
    let _ = model;
    Ok(MaximalSearchResult {
        j_max: j,
        case: MaximalCase::MaximalNonground,
        removed,
    })
}

/// JSON state report per the external interface.
pub fn state_report_json(state: &StateData) -> serde_json::Value {
    let violating = state.violating_pair.as_ref().map(|(u, v)| {
        let flat = |w: &CVec| -> Vec<f64> {
            w.iter().flat_map(|z| [z.re, z.im]).collect()
        };
        serde_json::json!({ "u": flat(u), "v": flat(v) })
    });
    serde_json::json!({
        "J": state.j.to_json_pairs(),
        "dominating": state.dominating,
        "ground": state.ground,
        "degeneracy_dim": state.degeneracy_dim,
        "violating_pair": violating,
    })
}
