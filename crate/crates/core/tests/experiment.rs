use std::path::PathBuf;

use rsma_isac::experiment::{
    beampattern, default_grid, emit_rows, load_scenario, read_rows, run_sweep, save_scenario, BeampatternRow,
    OutputFormat, ResultRow, SweepAxis, SweepSpec, TraceRow,
};
use rsma_isac::{run_algorithm, Algorithm, Scenario, Scheme};

fn shipped() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/reference.toml")
}

#[test]
fn shipped_scenario_is_reference() {
    let s = load_scenario(shipped()).unwrap();
    assert_eq!(s, Scenario::reference());
    assert_eq!((s.n_users(), s.n_eavesdroppers(), s.sensing.n_targets()), (3, 2, 2));
    let deg: Vec<f64> = s.users.iter().map(|u| u.azimuth.to_degrees().round()).collect();
    assert_eq!(deg, [-60.0, -5.0, 50.0]);
    assert_eq!(s.array.n_tx, 12);
}

#[test]
fn saved_scenario_reloads_identically() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.toml");
    let mut s = Scenario::reference().with_antennas(7);
    s.seed = 99;
    s.algorithm.crb_threshold = 3.3e-8;
    save_scenario(&s, &path).unwrap();
    assert_eq!(load_scenario(&path).unwrap(), s);
}

#[test]
fn config_errors_name_the_problem() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    let text = std::fs::read_to_string(shipped()).unwrap().replace("\"-60 deg\"", "\"-60 furlongs\"");
    std::fs::write(&path, text).unwrap();
    let err = load_scenario(&path).unwrap_err().to_string();
    assert!(err.contains("furlongs") && err.contains("angle"), "{err}");
    assert!(load_scenario(dir.path().join("missing.toml")).is_err());
}

fn sample_row() -> ResultRow {
    ResultRow {
        run_id: 0,
        algorithm: Algorithm::Alg1,
        scheme: Scheme::Scheme2,
        axis_value: Some(-70.0),
        objective: Some(955.123456789),
        power_w: Some(3.1399e-3),
        min_rate: Some(3.000001),
        min_secrecy_rate: Some(1.25),
        crb_det: Some(1e-7 / 3.0),
        iterations: 6,
        status: "converged".into(),
    }
}

#[test]
fn csv_headers_are_stable() {
    let dir = tempfile::tempdir().unwrap();
    let read_header = |name: &str| {
        let text = std::fs::read_to_string(dir.path().join(name)).unwrap();
        text.lines().next().unwrap().to_string()
    };
    emit_rows(&[sample_row()], OutputFormat::Csv, dir.path().join("r.csv")).unwrap();
    assert_eq!(
        read_header("r.csv"),
        "run_id,algorithm,scheme,axis_value,objective,power_w,min_rate,min_secrecy_rate,crb_det,iterations,status"
    );
    let trace = TraceRow {
        run_id: 0,
        iteration: 1,
        objective: 1.0,
        penalty: 0.0,
        dinkelbach: 0.5,
    };
    emit_rows(&[trace], OutputFormat::Csv, dir.path().join("t.csv")).unwrap();
    assert_eq!(read_header("t.csv"), "run_id,iteration,objective,penalty,dinkelbach");
    let bp = BeampatternRow {
        matrix_id: "W_c".into(),
        angle_deg: -90.0,
        gain_db: -3.0,
    };
    emit_rows(&[bp], OutputFormat::Csv, dir.path().join("b.csv")).unwrap();
    assert_eq!(read_header("b.csv"), "matrix_id,angle_deg,gain_db");
}

#[test]
fn json_and_csv_reload_values() {
    let dir = tempfile::tempdir().unwrap();
    let mut failed = sample_row();
    failed.run_id = 1;
    failed.objective = None;
    failed.axis_value = None;
    failed.status = "infeasible".into();
    let rows = vec![sample_row(), failed];
    for format in [OutputFormat::Json, OutputFormat::Csv] {
        let path = dir.path().join(format!("rows.{format}"));
        emit_rows(&rows, format, &path).unwrap();
        let back: Vec<ResultRow> = read_rows(format, &path).unwrap();
        assert_eq!(back.len(), 2);
        let (a, b) = (rows[0].objective.unwrap(), back[0].objective.unwrap());
        assert!((a - b).abs() <= 1e-12 * a.abs());
        assert_eq!(back, rows);
    }
}

#[test]
fn io_errors_carry_the_path() {
    let err = emit_rows(&[sample_row()], OutputFormat::Csv, "/nonexistent-dir/x.csv").unwrap_err();
    assert!(err.to_string().contains("/nonexistent-dir/x.csv"));
}

#[test]
fn single_point_sweep_matches_direct_run_and_is_reproducible() {
    let base = Scenario::reference();
    let spec = SweepSpec {
        axis: SweepAxis::CrbThreshold,
        values: vec![-70.0],
        algorithms: vec![Algorithm::Alg3],
        schemes: vec![Scheme::Scheme1],
    };
    let table = run_sweep(&spec, &base).unwrap();
    let direct = run_algorithm(Algorithm::Alg3, Scheme::Scheme1, &base).unwrap();
    let swept = table.runs[0].outcome.as_ref().unwrap();
    assert_eq!(swept.objective_trace, direct.objective_trace);
    assert_eq!(swept.objective().to_bits(), direct.objective().to_bits());

    let dir = tempfile::tempdir().unwrap();
    let again = run_sweep(&spec, &base).unwrap();
    for (name, t) in [("a", &table), ("b", &again)] {
        emit_rows(&t.rows(), OutputFormat::Csv, dir.path().join(format!("{name}.csv"))).unwrap();
        emit_rows(&t.traces(), OutputFormat::Csv, dir.path().join(format!("{name}_t.csv"))).unwrap();
    }
    let read = |n: &str| std::fs::read(dir.path().join(n)).unwrap();
    assert_eq!(read("a.csv"), read("b.csv"));
    assert_eq!(read("a_t.csv"), read("b_t.csv"));

    let rows = beampattern(&swept.beamformers, &default_grid(), &base.array).unwrap();
    let matrices = swept.beamformers.matrices().len() + 1; // plus W_AN
    assert_eq!(rows.len(), matrices * 361);
    assert!(rows.iter().all(|r| r.gain_db >= rsma_isac::experiment::GAIN_FLOOR_DB));
}
