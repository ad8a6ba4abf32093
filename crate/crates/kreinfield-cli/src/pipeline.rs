//! The run pipeline: build -> classify -> kernels -> support check ->
//! positivity -> maximal state -> reports.

use kreinfield::diagnostics::{
    fft_support_check, positivity_check, write_power_profile, SupportCheckOptions,
};
use kreinfield::eigen::Eigensystem;
use kreinfield::interval::IntervalUnion;
use kreinfield::krein::{classify_spectrum, KreinStructure};
use kreinfield::models::{build_dirac, build_kg, classify_criticality};
use kreinfield::propagator::{
    dirac_positivity_min_eig, dump_kernel_series, two_point_kernels, KernelKind, Propagator,
};
use kreinfield::scenario::{ModelKind, Scenario};
use kreinfield::states::{build_state, maximal_state_search, state_report_json, MaximalCase};
use kreinfield::functions::TimeWindow;
use kreinfield::dense::norm2;

pub fn run(
    config: &std::path::Path,
    out: Option<&std::path::Path>,
    dump_kernels: bool,
    seed: Option<u64>,
    plots: bool,
) -> i32 {
    let (mut scenario, base_dir) = match Scenario::from_path(config) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("config error: {e}");
            return 2;
        }
    };
    if let Some(s) = seed {
        scenario.seed = s;
    }
    let out_dir = out
        .map(|p| p.to_path_buf())
        .unwrap_or_else(|| base_dir.clone());
    if let Err(e) = std::fs::create_dir_all(&out_dir) {
        eprintln!("config error: cannot create {}: {e}", out_dir.display());
        return 2;
    }
    match execute(&scenario, &base_dir, &out_dir, dump_kernels, plots) {
        Ok(outcome) => {
            for line in &outcome.summary {
                println!("{line}");
            }
            if outcome.failures.is_empty() {
                0
            } else {
                for f in &outcome.failures {
                    eprintln!("expectation failed: {f}");
                }
                1
            }
        }
        Err(e) => {
            eprintln!("config error: {e}");
            2
        }
    }
}

struct Outcome {
    summary: Vec<String>,
    failures: Vec<String>,
}

fn execute(
    scenario: &Scenario,
    base_dir: &std::path::Path,
    out_dir: &std::path::Path,
    dump_kernels: bool,
    plots: bool,
) -> kreinfield::Result<Outcome> {
    let tol = scenario.tolerances;
    let grid = scenario.build_grid()?;
    let pot = scenario.potential_spec(&grid, base_dir)?;
    let j = scenario.frequency_set();
    let times = scenario.times();
    let hash = scenario.content_hash();
    let mut summary = vec![format!(
        "scenario {} ({}), hash {}",
        scenario.name,
        match scenario.model {
            ModelKind::Kg => "klein-gordon",
            ModelKind::Dirac => "dirac",
        },
        &hash[..16]
    )];
    let mut failures = Vec::new();
    let expect = &scenario.expectations;

    let mut report = serde_json::Map::new();
    report.insert("schema_version".into(), serde_json::json!(1));
    report.insert("name".into(), serde_json::json!(scenario.name));
    report.insert("scenario_hash".into(), serde_json::json!(hash));

    match scenario.model {
        ModelKind::Kg => {
            let model = build_kg(&grid, &pot)?;
            let es = Eigensystem::new(&model.b, &tol)?;
            let spectrum = classify_spectrum(&es, &model.k, &tol)?;
            let verdict = classify_criticality(&model, &spectrum, &tol)?;
            summary.push(format!(
                "verdict: {:?}, gap_alpha {:?}, |c| = {:.4}, {} complex pairs, {} critical points",
                verdict.kind,
                verdict.gap_alpha,
                verdict.c_norm,
                verdict.complex_pair_count,
                verdict.critical_points.len()
            ));
            if let Some(k) = expect.kind {
                if k != verdict.kind {
                    failures.push(format!("kind: expected {k:?}, got {:?}", verdict.kind));
                }
            }

            let prop = Propagator::for_kg(&model, &j, &tol)?;
            let (s, sp, sm, sz) = two_point_kernels(&prop, &times)?;
            // decomposition spot check on a few frames
            let mut worst = 0.0f64;
            for k in (0..times.len()).step_by((times.len() / 16).max(1)) {
                let total = &s.frames[k];
                let sum = &(&sp.frames[k] + &sm.frames[k]) + &sz.frames[k];
                let d = norm2(&(total - &sum)) / norm2(total).max(1e-300);
                worst = worst.max(d);
            }
            summary.push(format!("kernel decomposition max relative defect {worst:.3e}"));

            let expected_support = expect
                .s_plus_support
                .as_ref()
                .map(|p| IntervalUnion::from_json_pairs(p))
                .unwrap_or_else(|| j.clone());
            let opts = SupportCheckOptions::with_leak_tol(tol.leak_tol);
            let support = fft_support_check(&sp, &expected_support, &opts)?;
            summary.push(format!(
                "S+ support: leakage {:.3e} vs tol {:.1e} ({}), alpha_hat {:.4}",
                support.leakage,
                tol.leak_tol,
                if support.pass { "pass" } else { "FAIL" },
                support.alpha_hat
            ));
            if !support.pass {
                failures.push(format!(
                    "S+ leakage {:.3e} exceeds {:.1e}",
                    support.leakage, tol.leak_tol
                ));
            }

            let positivity = positivity_check(&prop, &model.k, 200, scenario.seed, &tol)?;
            summary.push(format!(
                "positivity on J = {}: operator min eig {:.3e}, sampled min {:.3e}, agree = {}",
                j, positivity.operator_min_eig, positivity.sampled_min, positivity.verdicts_agree
            ));
            if let Some(kp) = expect.krein_positive {
                if kp != positivity.operator_pass {
                    failures.push(format!(
                        "krein_positive: expected {kp}, operator verdict {}",
                        positivity.operator_pass
                    ));
                }
            }

            let maximal = maximal_state_search(&model, &spectrum, &tol)?;
            summary.push(format!(
                "maximal state: case {:?}, J_max = {}, removed {:?}",
                maximal.case, maximal.j_max, maximal.removed
            ));
            if let Some(case) = expect.state_case {
                if !case.matches(maximal.case) {
                    failures.push(format!(
                        "state_case: expected {case:?}, got {:?}",
                        maximal.case
                    ));
                }
            }

            let prop_max = Propagator::for_kg(&model, &maximal.j_max, &tol)?;
            let state = build_state(&prop_max, &model.k, &spectrum, 500, scenario.seed, &tol)?;
            summary.push(format!(
                "state on J_max: dominating {}, ground {}, degeneracy_dim {}",
                state.dominating, state.ground, state.degeneracy_dim
            ));
            if let Some(d) = expect.dominating {
                if d != state.dominating {
                    failures.push(format!(
                        "dominating: expected {d}, got {}",
                        state.dominating
                    ));
                }
            }
            if let Some(g) = expect.ground {
                if g != state.ground {
                    failures.push(format!("ground: expected {g}, got {}", state.ground));
                }
            }
            if let Some(dp) = expect.degeneracy_dim_positive {
                if dp != (state.degeneracy_dim > 0) {
                    failures.push(format!(
                        "degeneracy_dim_positive: expected {dp}, degeneracy_dim = {}",
                        state.degeneracy_dim
                    ));
                }
            }
            if maximal.case == MaximalCase::MaximalNonground {
                let pos_max = positivity_check(&prop_max, &model.k, 200, scenario.seed, &tol)?;
                summary.push(format!(
                    "positivity on J_max: operator min eig {:.3e}",
                    pos_max.operator_min_eig
                ));
                if !pos_max.operator_pass {
                    failures.push(format!(
                        "maximal J positivity failed: min eig {:.3e}",
                        pos_max.operator_min_eig
                    ));
                }
            }

            report.insert("spectrum".into(), serde_json::to_value(&spectrum)?);
            report.insert("verdict".into(), serde_json::to_value(&verdict)?);
            report.insert(
                "support".into(),
                serde_json::json!({
                    "leakage": support.leakage,
                    "alpha_hat": support.alpha_hat,
                    "beta_hat": support.beta_hat,
                    "w_res": support.w_res,
                    "window": support.window,
                    "pass": support.pass,
                }),
            );
            report.insert("positivity".into(), serde_json::to_value(&positivity)?);
            report.insert("maximal".into(), serde_json::to_value(&maximal)?);
            report.insert("state".into(), state_report_json(&state));

            if plots {
                write_power_profile(&support, &out_dir.join(format!("{}_s_plus.dat", scenario.name)))?;
                write_gnuplot_script(&out_dir.join(format!("{}_s_plus.gp", scenario.name)), &scenario.name)?;
            }
            if dump_kernels {
                let stride = scenario.dump_stride.max(1);
                let sub_times: Vec<f64> = times.iter().step_by(stride).copied().collect();
                for (kind, label) in [
                    (KernelKind::S, "s"),
                    (KernelKind::SPlus, "s_plus"),
                    (KernelKind::SMinus, "s_minus"),
                    (KernelKind::SZero, "s_zero"),
                ] {
                    let series = prop.series(kind, &sub_times)?;
                    dump_kernel_series(
                        &series,
                        grid.n,
                        &hash,
                        &out_dir.join(format!("{}_{label}", scenario.name)),
                    )?;
                }
            }
        }
        ModelKind::Dirac => {
            let model = build_dirac(&grid, &pot)?;
            let k = KreinStructure::hilbert(model.h.space);
            let es = Eigensystem::new(&model.h, &tol)?;
            let spectrum = classify_spectrum(&es, &k, &tol)?;
            let min_abs = spectrum
                .eigenvalues
                .iter()
                .map(|e| e.re.abs())
                .fold(f64::INFINITY, f64::min);
            summary.push(format!(
                "dirac spectrum: {} clusters, min |lambda| = {min_abs:.6}",
                spectrum.eigenvalues.len()
            ));

            let prop = Propagator::for_dirac(&model, &tol)?;
            let sp = prop.series(KernelKind::SPlus, &times)?;
            let expected_support = expect
                .s_plus_support
                .as_ref()
                .map(|p| IntervalUnion::from_json_pairs(p))
                .unwrap_or_else(IntervalUnion::positive_half_line);
            let opts = SupportCheckOptions::with_leak_tol(tol.leak_tol);
            let support = fft_support_check(&sp, &expected_support, &opts)?;
            summary.push(format!(
                "S+ support: leakage {:.3e} ({}), alpha_hat {:.4}",
                support.leakage,
                if support.pass { "pass" } else { "FAIL" },
                support.alpha_hat
            ));
            if !support.pass {
                failures.push(format!(
                    "S+ leakage {:.3e} exceeds {:.1e}",
                    support.leakage, tol.leak_tol
                ));
            }
            let window = TimeWindow::raised_cosine(scenario.time.t_max / 4.0, 129);
            let gram_min = dirac_positivity_min_eig(&prop, &window)?;
            summary.push(format!("gram positivity min eig {gram_min:.3e}"));
            if gram_min < -1e-8 {
                failures.push(format!("gram operator not PSD: {gram_min:.3e}"));
            }

            report.insert("spectrum".into(), serde_json::to_value(&spectrum)?);
            report.insert(
                "support".into(),
                serde_json::json!({
                    "leakage": support.leakage,
                    "alpha_hat": support.alpha_hat,
                    "beta_hat": support.beta_hat,
                    "pass": support.pass,
                }),
            );
            report.insert("gram_min_eig".into(), serde_json::json!(gram_min));

            if plots {
                write_power_profile(&support, &out_dir.join(format!("{}_s_plus.dat", scenario.name)))?;
                write_gnuplot_script(&out_dir.join(format!("{}_s_plus.gp", scenario.name)), &scenario.name)?;
            }
            if dump_kernels {
                let stride = scenario.dump_stride.max(1);
                let sub_times: Vec<f64> = times.iter().step_by(stride).copied().collect();
                let series = prop.series(KernelKind::SPlus, &sub_times)?;
                dump_kernel_series(
                    &series,
                    grid.n,
                    &hash,
                    &out_dir.join(format!("{}_s_plus", scenario.name)),
                )?;
            }
        }
    }

    report.insert("pass".into(), serde_json::json!(failures.is_empty()));
    report.insert("failures".into(), serde_json::json!(failures));
    let path = out_dir.join(format!("{}.report.json", scenario.name));
    std::fs::write(&path, serde_json::to_string_pretty(&serde_json::Value::Object(report))?)?;
    summary.push(format!("report written to {}", path.display()));

    Ok(Outcome { summary, failures })
}

fn write_gnuplot_script(path: &std::path::Path, name: &str) -> kreinfield::Result<()> {
    let script = format!(
        "set logscale y\nset xlabel 'omega'\nset ylabel 'power'\nplot '{name}_s_plus.dat' using 1:2 with lines title 'F_0 S+'\n"
    );
    std::fs::write(path, script)?;
    Ok(())
}
