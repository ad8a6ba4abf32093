//! Parameter sweeps: vary one scalar config path, run the cheap part of
//! the pipeline (spectrum classification and the verdict), and emit a
//! CSV table. Used to locate the subcritical/overcritical transition
//! and to check verdict stability under grid refinement.

use kreinfield::diagnostics::positivity_check;
use kreinfield::eigen::Eigensystem;
use kreinfield::krein::classify_spectrum;
use kreinfield::models::{build_kg, classify_criticality};
use kreinfield::propagator::Propagator;
use kreinfield::scenario::{ModelKind, Scenario};

pub fn run(
    config: &std::path::Path,
    param: &str,
    values: &str,
    out: Option<&std::path::Path>,
) -> i32 {
    let text = match std::fs::read_to_string(config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("config error: cannot read {}: {e}", config.display());
            return 2;
        }
    };
    let base: serde_json::Value = match serde_json::from_str(&text) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("config error: {e}");
            return 2;
        }
    };
    let values: Vec<f64> = match values
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse::<f64>())
        .collect()
    {
        Ok(v) => v,
        Err(e) => {
            eprintln!("config error: bad value list: {e}");
            return 2;
        }
    };
    let base_dir = config
        .parent()
        .map(|p| p.to_path_buf())
        .unwrap_or_else(|| std::path::PathBuf::from("."));

    let mut rows = vec![
        "value,kind,gap_alpha,c_norm,complex_pairs,critical_points,min_eig_positivity".to_string(),
    ];
    for v in values {
        let mut cfg = base.clone();
        if let Err(e) = set_path(&mut cfg, param, v) {
            eprintln!("config error: {e}");
            return 2;
        }
        let scenario: Scenario = match serde_json::from_value(cfg) {
            Ok(s) => s,
            Err(e) => {
                eprintln!("config error: {e}");
                return 2;
            }
        };
        match classify_one(&scenario, &base_dir) {
            Ok(row) => rows.push(format!("{v},{row}")),
            Err(e) => {
                eprintln!("run error at {param} = {v}: {e}");
                return 1;
            }
        }
    }

    let table = rows.join("\n") + "\n";
    match out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, table) {
                eprintln!("cannot write {}: {e}", path.display());
                return 2;
            }
        }
        None => print!("{table}"),
    }
    0
}

fn classify_one(scenario: &Scenario, base_dir: &std::path::Path) -> kreinfield::Result<String> {
    if scenario.model != ModelKind::Kg {
        return Err(kreinfield::Error::Config(
            "sweep classifies Klein-Gordon scenarios".into(),
        ));
    }
    let tol = scenario.tolerances;
    let grid = scenario.build_grid()?;
    let pot = scenario.potential_spec(&grid, base_dir)?;
    let model = build_kg(&grid, &pot)?;
    let es = Eigensystem::new(&model.b, &tol)?;
    let report = classify_spectrum(&es, &model.k, &tol)?;
    let verdict = classify_criticality(&model, &report, &tol)?;
    let prop = Propagator::for_kg(&model, &scenario.frequency_set(), &tol)?;
    let positivity = positivity_check(&prop, &model.k, 50, scenario.seed, &tol)?;
    Ok(format!(
        "{:?},{},{:.6},{},{},{:.6e}",
        verdict.kind,
        verdict
            .gap_alpha
            .map(|a| format!("{a:.6}"))
            .unwrap_or_else(|| "".into()),
        verdict.c_norm,
        verdict.complex_pair_count,
        verdict.critical_points.len(),
        positivity.operator_min_eig
    ))
}

/// Sets a dotted-path scalar inside a JSON value; integers stay
/// integers (grid.n etc.).
fn set_path(value: &mut serde_json::Value, path: &str, v: f64) -> Result<(), String> {
    let mut cursor = value;
    let parts: Vec<&str> = path.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        if i + 1 == parts.len() {
            let obj = cursor
                .as_object_mut()
                .ok_or_else(|| format!("path {path} does not address an object"))?;
            let new_value = if v.fract() == 0.0 && obj.get(*part).map_or(false, |x| x.is_u64()) {
                serde_json::json!(v as u64)
            } else {
                serde_json::json!(v)
            };
            obj.insert((*part).to_string(), new_value);
            return Ok(());
        }
        cursor = cursor
            .get_mut(*part)
            .ok_or_else(|| format!("path component {part} missing in scenario"))?;
    }
    Err(format!("empty path {path}"))
}
