//! Shared setup for the integration suites: the frozen scenarios and
//! the models built from them.

use kreinfield::eigen::Eigensystem;
use kreinfield::krein::{classify_spectrum, SpectrumReport};
use kreinfield::models::{build_kg, KGModel};
use kreinfield::scenario::Scenario;
use kreinfield::tolerances::Tolerances;

pub fn scenario_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .canonicalize()
        .expect("scenarios directory")
}

pub fn load_scenario(name: &str) -> (Scenario, std::path::PathBuf) {
    let path = scenario_dir().join(format!("{name}.json"));
    Scenario::from_path(&path).expect("frozen scenario parses")
}

pub struct KgSetup {
    pub scenario: Scenario,
    pub model: KGModel,
    pub report: SpectrumReport,
    pub tol: Tolerances,
}

pub fn kg_setup(name: &str) -> KgSetup {
    let (scenario, base) = load_scenario(name);
    let tol = scenario.tolerances;
    let grid = scenario.build_grid().unwrap();
    let pot = scenario.potential_spec(&grid, &base).unwrap();
    let model = build_kg(&grid, &pot).unwrap();
    let es = Eigensystem::new(&model.b, &tol).unwrap();
    let report = classify_spectrum(&es, &model.k, &tol).unwrap();
    KgSetup {
        scenario,
        model,
        report,
        tol,
    }
}

/// Random admissible interval unions built from the midpoints between
/// real eigenvalue clusters; admissible by construction.
pub fn random_admissible(
    es: &Eigensystem,
    rng: &mut impl rand::Rng,
) -> kreinfield::IntervalUnion {
    let mut reals: Vec<f64> = es
        .clusters
        .iter()
        .filter(|c| c.center.im.abs() < es.im_threshold)
        .map(|c| c.center.re)
        .collect();
    reals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    // Midpoints are admissible boundaries only when the flanking
    // clusters sit comfortably apart.
    let mut candidates: Vec<f64> = reals
        .windows(2)
        .filter(|w| w[1] - w[0] > 8.0 * es.gap_min)
        .map(|w| 0.5 * (w[0] + w[1]))
        .collect();
    candidates.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let k = rng.gen_range(0..=4usize.min(candidates.len()));
    let mut boundaries: Vec<f64> = (0..k)
        .map(|_| candidates[rng.gen_range(0..candidates.len())])
        .collect();
    boundaries.sort_by(|a, b| a.partial_cmp(b).unwrap());
    boundaries.dedup();
    let mut inside = rng.gen_bool(0.5);
    let mut lo = f64::NEG_INFINITY;
    let mut intervals = Vec::new();
    for b in boundaries {
        if inside {
            intervals.push((lo, b));
        }
        lo = b;
        inside = !inside;
    }
    if inside {
        intervals.push((lo, f64::INFINITY));
    }
    kreinfield::IntervalUnion::new(intervals)
}
