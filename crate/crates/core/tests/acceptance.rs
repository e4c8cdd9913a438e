//! End-to-end acceptance checks on the reference scenario. Each check prints
//! one `PASS`/`FAIL` line before asserting.

mod common;

use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use rsma_isac::experiment::beampattern::{gain, local_maxima, to_db};
use rsma_isac::experiment::{beampattern, default_grid, run_grid, validate_statistics, SweepTable};
use rsma_isac::fim::{crb_determinant, crb_log_inverse, fisher_information, is_symmetric, sensing_covariance};
use rsma_isac::geometry::ArrayConfig;
use rsma_isac::linalg::{max_eigenvalue, min_eigenvalue, real_trace};
use rsma_isac::metrics::{evaluate, MatrixRole, MetricsReport};
use rsma_isac::scenario::db_to_linear;
use rsma_isac::{Algorithm, RunResult, Scenario, Scheme};

/// Relative tolerance of the monotonicity checks.
const MONO_TOL: f64 = 1e-6;
const FEAS_TOL: f64 = 1e-4;
/// Matrices carrying less than this share of the power count as unused.
const NEGLIGIBLE_SHARE: f64 = 1e-6;

struct Base {
    table: SweepTable,
    elapsed: Duration,
}

fn base() -> &'static Base {
    static BASE: OnceLock<Base> = OnceLock::new();
    BASE.get_or_init(|| {
        let start = Instant::now();
        let table = run_grid(&[(None, Scenario::reference())], &Algorithm::ALL, &Scheme::ALL);
        Base {
            table,
            elapsed: start.elapsed(),
        }
    })
}

fn run(alg: Algorithm, scheme: Scheme) -> &'static RunResult {
    base()
        .table
        .get(alg, scheme, None)
        .and_then(|r| r.outcome.as_ref().ok())
        .unwrap_or_else(|| panic!("{alg}/{scheme} returned an error"))
}

fn report(n: u32, name: &str, ok: bool, detail: &str) {
    println!("[{}] criterion {n:>2} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "criterion {n} ({name}) failed: {detail}");
}

/// First 1-based iteration whose relative change is within `tau`.
fn settle_iteration(trace: &[f64], tau: f64) -> Option<usize> {
    (1..trace.len())
        .find(|&j| (trace[j] - trace[j - 1]).abs() <= tau * trace[j - 1].abs())
        .map(|j| j + 1)
}

#[test]
fn criterion_01_convergence_speed() {
    let mut worst = 0;
    let mut bad = Vec::new();
    for alg in Algorithm::ALL {
        for scheme in Scheme::ALL {
            let r = run(alg, scheme);
            match settle_iteration(&r.objective_trace, 1e-3) {
                Some(j) if j <= 10 => worst = worst.max(j),
                other => bad.push(format!("{alg}/{scheme}: {other:?}")),
            }
        }
    }
    let secs = base().elapsed.as_secs_f64();
    let ok = bad.is_empty() && secs <= 300.0;
    report(
        1,
        "convergence speed",
        ok,
        &format!("slowest run settles at iteration {worst}, 15 runs took {secs:.0} s; unsettled: {bad:?}"),
    );
}

#[test]
fn criterion_02_scheme_ordering() {
    let mut ok = true;
    let mut detail = Vec::new();
    for alg in [Algorithm::Alg1, Algorithm::Alg2] {
        let obj = |s| run(alg, s).objective();
        let (sdma, s1, s2) = (obj(Scheme::Sdma), obj(Scheme::Scheme1), obj(Scheme::Scheme2));
        let group = [s2, obj(Scheme::Scheme3), obj(Scheme::Ben1)];
        let hi = group.iter().copied().fold(f64::MIN, f64::max);
        let lo = group.iter().copied().fold(f64::MAX, f64::min);
        let spread = hi / lo - 1.0;
        let this = sdma < s1 && s1 < s2 && spread <= 0.05;
        ok &= this;
        detail.push(format!(
            "{alg}: sdma {sdma:.2} < s1 {s1:.2} < s2 {s2:.2} is {}, s2/s3/ben1 spread {:.2}%",
            sdma < s1 && s1 < s2,
            100.0 * spread
        ));
    }
    report(2, "scheme ordering", ok, &detail.join("; "));
}

#[test]
fn criterion_03_power_minimization_ordering() {
    let npc = |s| run(Algorithm::Alg3, s).metrics.total_power;
    let (s1, s2, sdma) = (npc(Scheme::Scheme1), npc(Scheme::Scheme2), npc(Scheme::Sdma));
    let close = (s1 - sdma).abs() <= 0.1 * sdma;
    let saving = 1.0 - s2 / s1.min(sdma);
    let ok = close && saving >= 0.1;
    report(
        3,
        "power-minimization ordering",
        ok,
        &format!(
            "s1 {s1:.4e} W vs sdma {sdma:.4e} W ({:+.2}%), s2 {s2:.4e} W is {:.2}% below the smaller",
            100.0 * (s1 / sdma - 1.0),
            100.0 * saving
        ),
    );
}

fn non_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] >= w[0] - MONO_TOL * w[0].abs())
}

fn non_increasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] <= w[0] + MONO_TOL * w[0].abs())
}

#[test]
fn criterion_04_trends() {
    let base_scenario = Scenario::reference();
    let crb_db = [-75.0, -70.0, -65.0, -60.0];
    let points: Vec<_> = crb_db
        .iter()
        .filter(|&&v| v != -70.0)
        .map(|&v| {
            let mut s = base_scenario.clone();
            s.algorithm.crb_threshold = db_to_linear(v);
            (Some(v), s)
        })
        .collect();
    let crb_table = run_grid(&points, &Algorithm::ALL, &Scheme::ALL);
    let antennas = [8.0, 10.0];
    let ant_points: Vec<_> = antennas.iter().map(|&n| (Some(n), base_scenario.with_antennas(n as usize))).collect();
    let ant_table = run_grid(&ant_points, &[Algorithm::Alg1, Algorithm::Alg2], &Scheme::ALL);

    let value = |table: &SweepTable, alg, scheme, axis: Option<f64>| -> Option<f64> {
        let r = if axis.is_none() { base().table.get(alg, scheme, None) } else { table.get(alg, scheme, axis) };
        r.and_then(|r| r.outcome.as_ref().ok())
            .filter(|r| r.status.is_success())
            .map(|r| r.objective())
    };
    let mut bad = Vec::new();
    for alg in Algorithm::ALL {
        for scheme in Scheme::ALL {
            let series: Option<Vec<f64>> = crb_db
                .iter()
                .map(|&v| value(&crb_table, alg, scheme, (v != -70.0).then_some(v)))
                .collect();
            let ok = series.as_ref().is_some_and(|s| if alg.maximizes() { non_decreasing(s) } else { non_increasing(s) });
            if !ok {
                bad.push(format!("crb {alg}/{scheme}: {series:?}"));
            }
            if alg.maximizes() {
                let series: Option<Vec<f64>> = [Some(8.0), Some(10.0), None]
                    .iter()
                    .map(|&n| value(&ant_table, alg, scheme, n))
                    .collect();
                if !series.as_ref().is_some_and(|s| non_decreasing(s)) {
                    bad.push(format!("antennas {alg}/{scheme}: {series:?}"));
                }
            }
        }
    }
    report(4, "trends over CRB threshold and array size", bad.is_empty(), &format!("{} violations {bad:?}", bad.len()));
}

struct Exact {
    report: MetricsReport,
    crb_log_det: f64,
}

fn exact(r: &RunResult, s: &Scenario, bf: &rsma_isac::metrics::BeamformerSet) -> Exact {
    let report = evaluate(bf, &r.allocation, &s.link_model().unwrap()).unwrap();
    let cov = sensing_covariance(bf, &r.scheme.selector()).unwrap();
    let fim = fisher_information(&cov, &s.sensing, &s.array).unwrap();
    Exact {
        report,
        crb_log_det: -crb_log_inverse(&fim).unwrap(),
    }
}

#[test]
fn criterion_05_feasibility() {
    let s = Scenario::reference();
    let cfg = &s.algorithm;
    let mut worst: f64 = 0.0;
    let mut bad = Vec::new();
    for alg in Algorithm::ALL {
        for scheme in Scheme::ALL {
            let r = run(alg, scheme);
            let e = exact(r, &s, &r.beamformers);
            let mut residuals = vec![
                ("power", e.report.total_power - cfg.p_max),
                ("crb", e.crb_log_det - cfg.crb_threshold.ln()),
            ];
            if alg != Algorithm::Alg2 {
                residuals.push(("qos", cfg.qos_threshold - e.report.min_total_rate()));
            }
            if alg != Algorithm::Alg3 {
                residuals.push(("secrecy", cfg.secrecy_threshold - e.report.min_secrecy_rate()));
                residuals.push(("common security", -e.report.common_security_margin()));
            }
            for (name, v) in residuals {
                worst = worst.max(v);
                if !(v <= FEAS_TOL) {
                    bad.push(format!("{alg}/{scheme} {name}: {v:.3e}"));
                }
            }
        }
    }
    report(5, "feasibility at solution", bad.is_empty(), &format!("largest residual {worst:.2e}; {bad:?}"));
}

fn relative_gap(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

#[test]
fn criterion_06_rank_one_quality() {
    let s = Scenario::reference();
    let (mut worst_rank, mut worst_gap): (f64, f64) = (0.0, 0.0);
    let mut bad = Vec::new();
    for alg in Algorithm::ALL {
        for scheme in Scheme::ALL {
            let r = run(alg, scheme);
            let total = r.relaxed.total_power();
            for (role, w) in r.relaxed.matrices() {
                let tr = real_trace(w);
                if tr <= NEGLIGIBLE_SHARE * total {
                    continue;
                }
                let res = (tr - max_eigenvalue(w)) / tr;
                worst_rank = worst_rank.max(res);
                if res > 1e-3 {
                    bad.push(format!("{alg}/{scheme} {role}: rank residual {res:.2e}"));
                }
            }
            for (role, w) in r.beamformers.matrices() {
                let tr = real_trace(w);
                if tr > 0.0 && (tr - max_eigenvalue(w)) / tr > 1e-3 {
                    bad.push(format!("{alg}/{scheme} returned {role} is not rank one"));
                }
            }
            let a = exact(r, &s, &r.beamformers);
            // compare both points under the same artificial noise
            let mut relaxed = r.relaxed.clone();
            relaxed.w_an = r.beamformers.w_an.clone();
            let b = exact(r, &s, &relaxed);
            // a stream carried by a negligible matrix has no meaningful rate
            let common_used = r
                .relaxed
                .w_common
                .as_ref()
                .is_some_and(|w| real_trace(w) > NEGLIGIBLE_SHARE * total);
            let mut pairs = vec![
                ("power", a.report.total_power, b.report.total_power),
                ("crb", a.crb_log_det.exp(), b.crb_log_det.exp()),
            ];
            for k in 0..s.n_users() {
                pairs.push(("rate", a.report.total_rates[k], b.report.total_rates[k]));
                pairs.push(("secrecy", a.report.secrecy_rates[k], b.report.secrecy_rates[k]));
                if common_used {
                    pairs.push(("common", a.report.common_rates[k], b.report.common_rates[k]));
                }
            }
            for (name, x, y) in pairs {
                let g = relative_gap(x, y);
                worst_gap = worst_gap.max(g);
                if g > 0.02 {
                    bad.push(format!("{alg}/{scheme} {name}: extraction gap {g:.2e}"));
                }
            }
        }
    }
    report(
        6,
        "rank-one quality",
        bad.is_empty(),
        &format!("worst rank residual {worst_rank:.2e}, worst extraction gap {worst_gap:.2e}; {bad:?}"),
    );
}

#[test]
fn criterion_07_monotone_objective() {
    let mut bad = Vec::new();
    for alg in Algorithm::ALL {
        for scheme in Scheme::ALL {
            let t = &run(alg, scheme).objective_trace;
            let ok = if alg.maximizes() { non_decreasing(t) } else { non_increasing(t) };
            if !ok {
                bad.push(format!("{alg}/{scheme}: {t:?}"));
            }
        }
    }
    report(7, "monotone objective traces", bad.is_empty(), &format!("15 traces checked; {bad:?}"));
}

#[test]
fn criterion_08_statistical_identity() {
    let r = validate_statistics(&Scenario::reference(), 100_000).unwrap();
    report(
        8,
        "statistical identity",
        r.max_deviation <= 0.02,
        &format!("max relative deviation {:.3e} over {} node/matrix pairs", r.max_deviation, r.rows.len()),
    );
}

#[test]
fn criterion_09_fim_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst_oracle: f64 = 0.0;
    let mut structural = true;
    let mut worst_scale: f64 = 0.0;
    for t in [1, 2] {
        for n in [2, 3, 4] {
            for _ in 0..4 {
                let array = ArrayConfig::half_wavelength(n, n).unwrap();
                let geom = common::random_geometry(t, &mut rng);
                let r = common::random_psd(n, &mut rng);
                let fim = fisher_information(&r, &geom, &array).unwrap();
                let oracle = common::oracle_fim(&r, &geom, &array);
                worst_oracle = worst_oracle.max((&fim.full - &oracle).norm() / oracle.norm());
                structural &= is_symmetric(&fim.full, 1e-9);
                let fc = fim.full.map(|x| num_complex::Complex64::new(x, 0.0));
                structural &= min_eigenvalue(&fc) >= -1e-9 * fim.full.amax();
                let base = crb_determinant(&fim).unwrap();
                for c in [0.5, 2.0, 10.0] {
                    let scaled = crb_determinant(&fisher_information(&r.scale(c), &geom, &array).unwrap()).unwrap();
                    let expected = base * c.powi(-3 * t as i32);
                    worst_scale = worst_scale.max((scaled - expected).abs() / expected);
                }
            }
        }
    }
    let ok = worst_oracle <= 1e-3 && structural && worst_scale <= 1e-9;
    report(
        9,
        "FIM oracle",
        ok,
        &format!("oracle error {worst_oracle:.2e}, symmetric PSD {structural}, scale-law error {worst_scale:.2e}"),
    );
}

#[test]
fn criterion_10_beampattern_structure() {
    let s = Scenario::reference();
    let mut bad = Vec::new();
    let r = run(Algorithm::Alg1, Scheme::Scheme2);
    let rows = beampattern(&r.beamformers, &default_grid(), &s.array).unwrap();
    let peaks = local_maxima(&rows, &MatrixRole::Common.to_string());
    for target in &s.sensing.target_azimuths {
        let deg = target.to_degrees();
        if !peaks.iter().any(|p| (p - deg).abs() <= 3.0) {
            bad.push(format!("no W_c peak within 3 deg of {deg:.0} (peaks {peaks:?})"));
        }
    }
    let mut margin = f64::INFINITY;
    for alg in [Algorithm::Alg1, Algorithm::Alg2] {
        let r = run(alg, Scheme::Scheme2);
        for (k, w) in r.beamformers.w_private.iter().enumerate() {
            let own = to_db(gain(w, s.users[k].azimuth, &s.array).unwrap());
            for e in &s.eavesdroppers {
                let leak = to_db(gain(w, e.azimuth, &s.array).unwrap());
                margin = margin.min(own - leak);
                if own - leak < 3.0 {
                    bad.push(format!(
                        "{alg} W_{}: {own:.1} dB at user vs {leak:.1} dB at {:.0} deg",
                        k + 1,
                        e.azimuth.to_degrees()
                    ));
                }
            }
        }
    }
    report(
        10,
        "beampattern structure",
        bad.is_empty(),
        &format!("W_c peaks {:?} deg, smallest user/eavesdropper margin {margin:.1} dB; {bad:?}", peaks),
    );
}

#[test]
fn criterion_11_artificial_noise_budget() {
    let s = Scenario::reference();
    let mut worst_budget: f64 = 0.0;
    let mut worst_spread: f64 = 0.0;
    for scheme in Scheme::ALL {
        let r = run(Algorithm::Alg3, scheme);
        let an = r.beamformers.w_an.as_ref().expect("AN covariance attached");
        worst_budget = worst_budget.max((real_trace(an) + r.metrics.total_power - s.algorithm.p_max).abs());
        let d: Vec<f64> = (0..an.nrows()).map(|i| an[(i, i)].re).collect();
        let spread = d.iter().copied().fold(f64::MIN, f64::max) - d.iter().copied().fold(f64::MAX, f64::min);
        worst_spread = worst_spread.max(spread);
    }
    report(
        11,
        "artificial-noise budget",
        worst_budget <= 1e-9 && worst_spread <= 1e-15,
        &format!("budget error {worst_budget:.2e} W, diagonal spread {worst_spread:.2e} W"),
    );
}
