//! Property-level invariants from the module contracts that the
//! acceptance criteria do not already pin down.

mod common;

use common::kg_setup;
use kreinfield::dense::{norm2, CMat, CVec};
use kreinfield::diagnostics::{fft_support_check, SupportCheckOptions};
use kreinfield::eigen::Eigensystem;
use kreinfield::funcalc::{davies_apply, AlmostAnalyticExtension, QuadratureSpec};
use kreinfield::functions::{NamedFunction, SmoothFunction};
use kreinfield::interval::IntervalUnion;
use kreinfield::krein::krein_adjoint;
use kreinfield::lattice::{build_grid, gauge_gradient, site_phase_unitary, Boundary, PotentialSpec};
use kreinfield::models::{build_dirac, build_kg};
use kreinfield::propagator::{two_point_kernels, Propagator};
use kreinfield::states::{build_state, weyl_expectation};
use kreinfield::tolerances::Tolerances;
use num_complex::Complex64;

#[test]
fn davies_parameter_independence() {
    let setup = kg_setup("DS1");
    let f = NamedFunction::gaussian(1.0, 0.0, 1.0);
    let q = QuadratureSpec::new(96, 64);
    let results: Vec<CMat> = [(2usize, 0.5f64), (3, 0.25)]
        .iter()
        .map(|&(order, delta)| {
            let ext = AlmostAnalyticExtension::new(&f, order, delta);
            davies_apply(&setup.model.b, &ext, &q, &setup.tol)
                .unwrap()
                .matrix
        })
        .collect();
    let diff = norm2(&(&results[0] - &results[1]));
    assert!(
        diff < 1e-3,
        "davies results must not depend on (N, delta): diff {diff:.3e}"
    );
}

#[test]
fn davies_kills_complex_pairs() {
    // DS2 with a band thin enough to avoid the pair at +/- 0.047i:
    // the quadrature result matches the oracle restricted to the real
    // spectrum; the pair contributes nothing.
    let setup = kg_setup("DS2");
    let es = Eigensystem::new(&setup.model.b, &setup.tol).unwrap();
    let f = NamedFunction::gaussian(1.0, 1.0, 1.2);
    let oracle = es.real_mode_function(|x| f.value(x)).unwrap();
    // band below the pair at Im = 0.047; the raised eps_band keeps the
    // quadrature off the resolvent peaks, whose width it cannot resolve,
    // and the edge-correction term owns the stripped region
    let ext = AlmostAnalyticExtension::new(&f, 3, 0.02);
    let q = QuadratureSpec {
        re_points: 1024,
        im_points: 48,
        eps_band: Some(0.01),
    };
    let fa = davies_apply(&setup.model.b, &ext, &q, &setup.tol).unwrap();
    let err = norm2(&(&fa.matrix - &oracle.matrix));
    assert!(
        err < 1e-2 * oracle.norm2().max(1.0),
        "complex pairs must not contribute: err {err:.3e}"
    );
    // and the pair subspace really gets zero
    let p_c = kreinfield::krein::complex_part_projection(&es).unwrap();
    let on_pair = norm2(&fa.matrix.dot(&p_c.matrix));
    assert!(on_pair < 1e-2, "f(A) on the pair subspace: {on_pair:.3e}");
}

#[test]
fn davies_adjoint_property() {
    // (f(A))^dagger = conj(f)(A); for real f the davies result is Krein
    // self-adjoint up to quadrature error.
    let setup = kg_setup("DS1");
    let f = NamedFunction::gaussian(1.0, 0.5, 1.0);
    let ext = AlmostAnalyticExtension::new(&f, 3, 0.25);
    let q = QuadratureSpec::new(96, 64);
    let fa = davies_apply(&setup.model.b, &ext, &q, &setup.tol).unwrap();
    let fad = krein_adjoint(&fa, &setup.model.k).unwrap();
    let defect = norm2(&(&fad.matrix - &fa.matrix));
    assert!(defect < 1e-3, "f(A)^dagger = f(A) for real f: {defect:.3e}");
}

#[test]
fn calculus_is_multiplicative_on_real_part() {
    let setup = kg_setup("DS1");
    let es = Eigensystem::new(&setup.model.b, &setup.tol).unwrap();
    let f = NamedFunction::gaussian(1.0, 0.4, 1.1);
    let g = NamedFunction::gaussian(0.7, -0.6, 0.9);
    let fa = es.real_mode_function(|x| f.value(x)).unwrap();
    let ga = es.real_mode_function(|x| g.value(x)).unwrap();
    let fga = es
        .real_mode_function(|x| f.value(x) * g.value(x))
        .unwrap();
    let defect = norm2(&(fa.matrix.dot(&ga.matrix) - &fga.matrix));
    assert!(defect < 1e-10, "multiplicativity defect {defect:.3e}");
}

#[test]
fn fft_mass_linearity_over_decomposition() {
    // Spectral masses of S and its three parts: the tone sets are
    // disjoint, so cross terms live only in window sidelobe overlap.
    let setup = kg_setup("DS2");
    let prop = Propagator::for_kg(
        &setup.model,
        &setup.scenario.frequency_set(),
        &setup.tol,
    )
    .unwrap();
    // short series to keep the growing S0 modes mild
    let times = kreinfield::propagator::symmetric_time_grid(40.0, 1024);
    let (s, sp, sm, sz) = two_point_kernels(&prop, &times).unwrap();
    let opts = SupportCheckOptions::with_leak_tol(1.0);
    let j = IntervalUnion::whole_line();
    let mass = |series| -> f64 {
        fft_support_check(series, &j, &opts)
            .unwrap()
            .power_profile
            .iter()
            .sum()
    };
    let total = mass(&s);
    let parts = mass(&sp) + mass(&sm) + mass(&sz);
    let rel = (total - parts).abs() / total;
    assert!(
        rel < 1e-6,
        "mass linearity: |S| mass {total:.6e} vs parts {parts:.6e}, rel {rel:.3e}"
    );
}

#[test]
fn gauge_covariance_of_dirac_and_kg() {
    let grid = build_grid(32, 16.0, Boundary::Periodic).unwrap();
    let xs = grid.coords();
    let chi: Vec<f64> = xs
        .iter()
        .map(|&x| 0.4 * (2.0 * std::f64::consts::PI * x / grid.length).sin())
        .collect();
    let grad = gauge_gradient(&grid, &chi).unwrap();
    let mut pot = PotentialSpec::free(grid.n, 1.0);
    for (j, v) in pot.v.iter_mut().enumerate() {
        *v = 0.3 * (-xs[j] * xs[j] / 4.0).exp();
    }
    let mut pot2 = pot.clone();
    for (a, g) in pot2.a.iter_mut().zip(&grad) {
        *a += g;
    }

    let tol = Tolerances::default();
    // Dirac: h(A + grad chi) = U h(A) U^H sitewise on both components
    let d1 = build_dirac(&grid, &pot).unwrap();
    let d2 = build_dirac(&grid, &pot2).unwrap();
    let u = site_phase_unitary(&chi);
    let mut u2 = CMat::zeros((2 * grid.n, 2 * grid.n));
    for c in 0..2 {
        for j in 0..grid.n {
            u2[(c * grid.n + j, c * grid.n + j)] = u[(j, j)];
        }
    }
    let conj = u2.dot(&d1.h.matrix).dot(&kreinfield::dense::adjoint(&u2));
    let defect = norm2(&(&conj - &d2.h.matrix)) / d1.h.norm2();
    assert!(defect < 1e-12, "dirac gauge conjugation defect {defect:.3e}");

    // KG: spectra of b agree
    let k1 = build_kg(&grid, &pot).unwrap();
    let k2 = build_kg(&grid, &pot2).unwrap();
    let e1 = Eigensystem::new(&k1.b, &tol).unwrap();
    let e2 = Eigensystem::new(&k2.b, &tol).unwrap();
    let key = |z: &Complex64| (z.re, z.im);
    let mut v1 = e1.values.clone();
    let mut v2 = e2.values.clone();
    v1.sort_by(|a, b| key(a).partial_cmp(&key(b)).unwrap());
    v2.sort_by(|a, b| key(a).partial_cmp(&key(b)).unwrap());
    let rho = e1.spectral_radius;
    for (a, b) in v1.iter().zip(&v2) {
        assert!(
            (a - b).norm() < 1e-8 * rho,
            "kg gauge spectrum mismatch {a} vs {b}"
        );
    }
}

#[test]
fn evolve_overflow_guard_fires_for_growing_modes() {
    let setup = kg_setup("DS2");
    let prop = Propagator::for_kg(
        &setup.model,
        &setup.scenario.frequency_set(),
        &setup.tol,
    )
    .unwrap();
    // Im lambda ~ 0.047: e^{0.047 t} overflows past t ~ 1.5e4
    assert!(matches!(
        prop.evolve(2.0e4),
        Err(kreinfield::Error::Overflow(_))
    ));
    assert!(prop.evolve(40.0).is_ok());
}

#[test]
fn weyl_value_against_stored_vector() {
    // Frozen test vector: e_0 + i e_n scaled; the expectation value must
    // match the direct quadratic form, and stay in (0, 1].
    let setup = kg_setup("DS1");
    let prop = Propagator::for_kg(
        &setup.model,
        &IntervalUnion::positive_half_line(),
        &setup.tol,
    )
    .unwrap();
    let state = build_state(
        &prop,
        &setup.model.k,
        &setup.report,
        200,
        setup.scenario.seed,
        &setup.tol,
    )
    .unwrap();
    let n = setup.model.grid.n;
    let mut v = CVec::zeros(2 * n);
    v[0] = Complex64::new(0.6, 0.0);
    v[3] = Complex64::new(-0.2, 0.0);
    v[n + 1] = Complex64::new(0.0, 0.4);
    let w = weyl_expectation(&state, &v).unwrap();
    let mvv: Complex64 = v
        .iter()
        .zip(state.mu.dot(&v).iter())
        .map(|(a, b)| a.conj() * b)
        .sum();
    assert!((w - (-0.5 * mvv.re).exp()).abs() < 1e-14);
    assert!(w > 0.0 && w <= 1.0);
}

#[test]
fn dirichlet_boundary_grid_end_to_end() {
    // Dirichlet scenarios must run the same pipeline pieces.
    let grid = build_grid(24, 12.0, Boundary::Dirichlet).unwrap();
    let pot = PotentialSpec::free(grid.n, 1.0);
    let model = build_kg(&grid, &pot).unwrap();
    let tol = Tolerances::default();
    let es = Eigensystem::new(&model.b, &tol).unwrap();
    let report = kreinfield::krein::classify_spectrum(&es, &model.k, &tol).unwrap();
    assert!(report.complex_pairs.is_empty());
    let verdict =
        kreinfield::models::classify_criticality(&model, &report, &tol).unwrap();
    assert_eq!(
        verdict.kind,
        kreinfield::models::CriticalityKind::Subcritical
    );
}

#[test]
fn dirac_kernels_use_positive_half_line_j() {
    let grid = build_grid(16, 8.0, Boundary::Periodic).unwrap();
    let pot = PotentialSpec::free(grid.n, 1.0);
    let model = build_dirac(&grid, &pot).unwrap();
    let tol = Tolerances::default();
    let prop = Propagator::for_dirac(&model, &tol).unwrap();
    assert_eq!(prop.j, IntervalUnion::positive_half_line());
    // S+(0) gamma0 acts as the positive-frequency projection
    let sp0 = prop.frame(kreinfield::propagator::KernelKind::SPlus, 0.0).unwrap();
    let p = sp0.matrix.dot(&model.gamma0.matrix);
    // p should be (1 + sgn(h))/2: idempotent of rank n
    let idem = norm2(&(p.dot(&p) - &p));
    assert!(idem < 1e-10, "projection defect {idem:.3e}");
    let rank: f64 = p.diag().iter().map(|z| z.re).sum();
    assert!((rank - grid.n as f64).abs() < 1e-8, "rank {rank}");
}
