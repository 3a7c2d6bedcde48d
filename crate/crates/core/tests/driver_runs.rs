mod common;

use std::path::PathBuf;
use std::process::Command;
use std::sync::Arc;

use afem_param::driver::output::{read_column, write_records};
use afem_param::driver::problem_file::load_problem;
use afem_param::driver::{adaptive_loop, fit_rate, run_experiment, MarkingStrategy, ProblemSource, RunConfig};
use afem_param::space::FeSpace;
use common::*;

fn repo_file(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

fn strip_time(csv: &str) -> Vec<String> {
    csv.lines().map(|l| l.rsplit_once(',').unwrap().0.to_string()).collect()
}

#[test]
fn identical_configs_give_identical_csv() {
    let dir = tempfile::tempdir().unwrap();
    let mut texts = Vec::new();
    for k in 0..2 {
        let mut c = RunConfig::builtin("multi");
        c.max_elements = 20_000;
        c.sigma = 1e-5;
        c.seed = 99;
        c.output = Some(dir.path().join(format!("run{k}.csv")));
        adaptive_loop(&c).unwrap();
        texts.push(std::fs::read_to_string(c.output.unwrap()).unwrap());
    }
    assert_eq!(strip_time(&texts[0]), strip_time(&texts[1]));
    assert!(texts[0].starts_with(
        "level,n_elements,eta_total,zeta_total,rho,classical_rho,p_1,p_2,p_error,marked_count,wall_time_ms\n"
    ));
    // classical_rho is not computed for weighted marking
    let second = texts[0].lines().nth(1).unwrap();
    assert_eq!(second.split(',').nth(5), Some(""));
}

#[test]
fn every_level_satisfies_identities() {
    let e = multi();
    let mut c = RunConfig::builtin("multi");
    c.max_elements = 30_000;
    let mut previous_rho = None;
    let mut ratios = Vec::new();
    let records = run_experiment(&e, &c, |s| {
        let field = s.field;
        let total: f64 = field.rho_sq.iter().sum();
        let expected = 2.0 * field.eta_total_sq * field.zeta_total_sq;
        assert!((total - expected).abs() <= 1e-12 * expected);
        assert!(s.comps.max_galerkin_residual() <= 1e-9);
        let scale = s.system.b.amax();
        for i in 0..e.problem.n_q() {
            for j in 0..e.problem.n_c() {
                let dual = s.space.evaluate_functional(&e.problem.state_data[i + 1], &s.comps.costate[j]);
                assert!((s.system.b[(i, j)] - dual).abs() <= 1e-9 * scale);
            }
        }
        if let Some(r) = s.refinement {
            assert!(r.mesh.is_conforming() && r.satisfies_son_estimate());
        }
        if let Some(prev) = previous_rho {
            ratios.push(s.record.rho / prev);
        }
        previous_rho = Some(s.record.rho);
        Ok(())
    })
    .unwrap();
    assert!(records.windows(2).all(|w| w[1].n_elements > w[0].n_elements));
    // contraction on average over 5-level windows past level 3
    for w in ratios[3..].windows(5) {
        let mean = w.iter().sum::<f64>() / 5.0;
        assert!(mean < 1.0, "{w:?}");
    }
}

#[test]
fn reliability_constant_is_bounded() {
    let e = single();
    let mut c = RunConfig::builtin("single");
    c.max_elements = 20_000;
    let mut ratios = Vec::new();
    run_experiment(&e, &c, |s| {
        let err = energy_error_sq(&s.comps.state[1], grad_u1).sqrt();
        let eta: f64 = s.field.eta_sq[1].iter().sum::<f64>().sqrt();
        ratios.push(err / eta);
        Ok(())
    })
    .unwrap();
    let (lo, hi) = ratios.iter().fold((f64::MAX, 0.0f64), |(a, b), &r| (a.min(r), b.max(r)));
    assert!(hi <= 1.0 && hi / lo < 5.0, "{ratios:?}");
}

#[test]
fn classical_marking_reports_both_estimators() {
    let mut c = RunConfig::builtin("single");
    c.marking = MarkingStrategy::Classical;
    c.max_elements = 5_000;
    let records = adaptive_loop(&c).unwrap();
    assert!(records.iter().all(|r| r.classical_rho.is_some() && r.p_estimate.is_some()));
    let n: Vec<f64> = records.iter().map(|r| r.n_elements as f64).collect();
    let rho: Vec<f64> = records.iter().map(|r| r.classical_rho.unwrap()).collect();
    let slope = fit_rate(&n, &rho, 0.5).unwrap();
    assert!(slope > -0.7 && slope < -0.3, "{slope}");
}

#[test]
fn parameter_only_on_final_level() {
    let mut c = RunConfig::builtin("single");
    c.max_elements = 2_000;
    c.solve_p_every_level = false;
    let records = adaptive_loop(&c).unwrap();
    let (last, rest) = records.split_last().unwrap();
    assert!(rest.iter().all(|r| r.p_estimate.is_none() && r.p_error.is_none()));
    assert!(last.p_estimate.is_some() && last.p_error.is_some());
}

#[test]
fn estimator_tolerance_stops_the_loop() {
    let mut c = RunConfig::builtin("single");
    c.rho_tol = 1e-3;
    let records = adaptive_loop(&c).unwrap();
    assert!(records.last().unwrap().rho <= 1e-3);
    assert!(records[..records.len() - 1].iter().all(|r| r.rho > 1e-3));
}

#[test]
fn csv_round_trip_and_rate() {
    let mut c = RunConfig::builtin("single");
    c.max_elements = 20_000;
    let records = adaptive_loop(&c).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.csv");
    write_records(std::fs::File::create(&path).unwrap(), &records, 1).unwrap();
    let (n, q) = read_column(&path, "rho").unwrap();
    assert_eq!(n.len(), records.len());
    assert_eq!(q, records.iter().map(|r| r.rho).collect::<Vec<_>>());
    let slope = fit_rate(&n, &q, 0.5).unwrap();
    assert!(slope > -1.2 && slope < -0.8, "{slope}");
    assert!(read_column(&path, "nope").is_err());
}

#[test]
fn shipped_problem_files_match_builtins() {
    let single_file = load_problem(&repo_file("problems/single.toml")).unwrap();
    let builtin = single();
    assert_eq!(single_file.problem.state_data, builtin.problem.state_data);
    assert_eq!(single_file.problem.measure_data, builtin.problem.measure_data);
    assert_eq!(single_file.problem.measurements, builtin.problem.measurements);

    let text = std::fs::read_to_string(repo_file("problems/multi.toml")).unwrap();
    let text = text.replace("exact_elements = 200000", "exact_elements = 30000");
    let multi_file = afem_param::driver::problem_file::parse_problem(&text, "multi").unwrap();
    let builtin = multi();
    assert_eq!(multi_file.domain, builtin.domain);
    assert_eq!(multi_file.exact_parameter, builtin.exact_parameter);
    assert_eq!(multi_file.problem.measure_data, builtin.problem.measure_data);
    for (a, b) in multi_file.problem.measurements.iter().zip(&builtin.problem.measurements) {
        assert!((a - b).abs() < 5e-4);
    }
    // the scaled sine load evaluates like the built-in one
    let space = FeSpace::new(Arc::new(uniform_mesh(&builtin, 64)));
    let a = space.assemble_load(&multi_file.problem.state_data[2]);
    let b = space.assemble_load(&builtin.problem.state_data[2]);
    assert!(a.iter().zip(&b).all(|(x, y)| (x - y).abs() <= 1e-13 * y.abs().max(1.0)));
}

#[test]
fn problem_source_loads_files() {
    let e = ProblemSource::File(repo_file("problems/single.toml")).load().unwrap();
    assert_eq!(e.name, "single");
    assert!(ProblemSource::File(repo_file("problems/missing.toml")).load().is_err());
}

fn cli() -> Command {
    Command::new(env!("CARGO_BIN_EXE_afem-param"))
}

#[test]
fn cli_run_and_rate() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("out.csv");
    let mesh = dir.path().join("mesh.txt");
    let out = cli()
        .args(["run", "--experiment", "single", "--max-elements", "20000", "--out"])
        .arg(&csv)
        .arg("--dump-mesh")
        .arg(&mesh)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.lines().next().unwrap().starts_with("level\tn_elements"));
    let dumped = afem_param::mesh::Triangulation::read_dump(std::io::BufReader::new(std::fs::File::open(&mesh).unwrap())).unwrap();
    let (n, _) = read_column(&csv, "rho").unwrap();
    assert_eq!(dumped.n_elements() as f64, *n.last().unwrap());

    let out = cli().args(["rate", "--column", "p_error", "--in"]).arg(&csv).output().unwrap();
    assert!(out.status.success());
    let slope: f64 = String::from_utf8(out.stdout).unwrap().trim().parse().unwrap();
    assert!(slope > -1.25 && slope < -0.75, "{slope}");
}

#[test]
fn cli_problem_file_and_errors() {
    let out = cli()
        .args(["run", "--marking", "classical", "--max-elements", "1000", "--problem"])
        .arg(repo_file("problems/single.toml"))
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(!cli().args(["run", "--experiment", "single", "--theta", "0"]).output().unwrap().status.success());
    assert!(!cli().args(["run", "--experiment", "other"]).output().unwrap().status.success());
    assert!(!cli().args(["run"]).output().unwrap().status.success());
    let out = cli().args(["rate", "--in", "/nonexistent.csv", "--column", "rho"]).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8(out.stderr).unwrap().starts_with("error:"));
}
