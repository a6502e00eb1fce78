//! Acceptance criteria. Each criterion prints one `[PASS]`/`[FAIL]` line;
//! the process exits nonzero if any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cohesive_transport::cli::{
    reproduce, BASELINE_DEFORMATION, BASELINE_FORCE, DSR_DEFORMATION, DSR_FORCE,
    MIN_IMPROVEMENT_PCT, SPEED_LIMIT,
};
use cohesive_transport::dynamics::{
    baseline_update_local, baseline_update_matrix, dsr_update_local, dsr_update_matrix,
    response_stats,
};
use cohesive_transport::stability::{
    baseline_gamma_bound, controller_report, dsr_beta_bound, dsr_bound_stable, jury_stable,
    spectral_radius,
};
use cohesive_transport::tuning::{settling_from_radius, tune_dsr, tune_gamma, TuningSpec};
use cohesive_transport::{
    ControlLaw, ControllerConfig, DsrGains, PinnedLaplacian, StiffnessChain, StiffnessGraph,
    TrajectorySpec,
};

const DT: f64 = 0.03;
const TABLE_TOL: f64 = 0.05;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn rel_ok(measured: f64, expected: f64, tol: f64) -> bool {
    (measured - expected).abs() <= tol * expected.abs()
}

fn reference_network() -> PinnedLaplacian {
    PinnedLaplacian::from_chain(&StiffnessChain::reference_experiment()).unwrap()
}

fn c1_table_row() -> Outcome {
    let started = Instant::now();
    let report = reproduce(TABLE_TOL).unwrap();
    let runtime = started.elapsed().as_secs_f64();
    let (b, d) = (&report.baseline, &report.dsr);
    let passed = rel_ok(b.max_force, BASELINE_FORCE, TABLE_TOL)
        && rel_ok(b.max_deformation, BASELINE_DEFORMATION, TABLE_TOL)
        && rel_ok(d.max_force, DSR_FORCE, TABLE_TOL)
        && rel_ok(d.max_deformation, DSR_DEFORMATION, TABLE_TOL)
        && runtime < 5.0;
    outcome(
        passed,
        format!(
            "baseline f_bar={:.5} N D_bar={:.4} cm; DSR f_bar={:.5} N D_bar={:.4} cm (±5% of {BASELINE_FORCE}/{BASELINE_DEFORMATION}/{DSR_FORCE}/{DSR_DEFORMATION}); runtime {runtime:.2} s < 5 s",
            b.max_force, b.max_deformation, d.max_force, d.max_deformation
        ),
    )
}

fn c2_improvement() -> Outcome {
    let imp = reproduce(TABLE_TOL).unwrap().improvement;
    outcome(
        imp.deformation_pct >= MIN_IMPROVEMENT_PCT && imp.force_pct >= MIN_IMPROVEMENT_PCT,
        format!(
            "D_bar {:.2}%, f_bar {:.2}% (>= {MIN_IMPROVEMENT_PCT}%)",
            imp.deformation_pct, imp.force_pct
        ),
    )
}

fn c3_eigenvalues() -> Outcome {
    let lap = reference_network();
    let (lo, hi) = (lap.lambda_min(), lap.lambda_max());
    outcome(
        (lo - 0.006).abs() <= 0.0005 && (hi - 0.176).abs() <= 0.0005,
        format!("lambda_min={lo:.8} (0.006±0.0005), lambda_max={hi:.8} (0.176±0.0005)"),
    )
}

fn c4_tuning() -> Outcome {
    let started = Instant::now();
    let lap = reference_network();
    let spec = TuningSpec::new(10.0, SPEED_LIMIT, DT);
    let gamma = tune_gamma(&lap, &spec).unwrap();
    let dsr = tune_dsr(&lap, &spec, gamma.result.max_speed).unwrap();
    let runtime = started.elapsed().as_secs_f64();
    let ControlLaw::Baseline { gamma: g } = gamma.result.controller.law else {
        unreachable!()
    };
    let ControlLaw::Dsr(gains) = dsr.result.controller.law else {
        unreachable!()
    };
    let alpha_anchor = 4.0 / spec.target_ts;
    let beta_anchor = 2.0 / (lap.lambda_min() + lap.lambda_max());
    let passed = rel_ok(g, 1.93, 0.02)
        && rel_ok(gains.alpha, 0.39, 0.05)
        && rel_ok(gains.beta, 10.92, 0.05)
        && rel_ok(alpha_anchor, gains.alpha, 0.05)
        && rel_ok(beta_anchor, gains.beta, 0.05)
        && runtime < 60.0;
    outcome(
        passed,
        format!(
            "gamma={g:.4} (1.93±2%), alpha={:.4} (0.39±5%), beta={:.3} (10.92±5%), anchors 4/T_s={alpha_anchor} and 2/(lmin+lmax)={beta_anchor:.3} within 5%; runtime {runtime:.1} s < 60 s",
            gains.alpha, gains.beta
        ),
    )
}

fn c5_settling() -> Outcome {
    let lap = reference_network();
    let unit = TrajectorySpec::unit_step();
    let ts = |ctrl: ControllerConfig| {
        response_stats(&lap, &ctrl, &unit, 60.0, 0.02)
            .unwrap()
            .settling_time
    };
    let base = ts(ControllerConfig::baseline(1.93, DT));
    let dsr = ts(ControllerConfig::dsr(0.39, 10.92, DT));
    outcome(
        (base - 10.0).abs() <= 0.5 && (dsr - 10.0).abs() <= 0.5,
        format!("unit-step 2% settling: baseline {base:.2} s, DSR {dsr:.2} s (10±0.5 s)"),
    )
}

fn c6_stability_equivalence() -> Outcome {
    let lap = reference_network();
    let beta_top = 4.0 / lap.lambda_max();
    let (mut checked, mut agree, mut skipped) = (0usize, 0usize, 0usize);
    let mut first_disagreement = None;
    for i in 1..=200 {
        let alpha = 2.0 * i as f64 / 200.0;
        let bound = dsr_beta_bound(&lap, alpha, DT);
        for j in 1..=200 {
            let beta = beta_top * j as f64 / 200.0;
            let sigma = spectral_radius(&lap, &DsrGains::new(alpha, beta), DT).spectral_radius;
            if (beta - bound).abs() <= 1e-9 * bound || (sigma - 1.0).abs() <= 1e-9 {
                skipped += 1;
                continue;
            }
            let bound_ok = dsr_bound_stable(&lap, alpha, beta, DT);
            let jury = lap
                .eigenvalues()
                .iter()
                .all(|&l| jury_stable(l, alpha, beta, DT));
            let roots = sigma < 1.0;
            checked += 1;
            if bound_ok == jury && jury == roots {
                agree += 1;
            } else if first_disagreement.is_none() {
                first_disagreement = Some((alpha, beta, bound_ok, jury, roots));
            }
        }
    }
    let mut detail =
        format!("{agree}/{checked} non-boundary points agree ({skipped} boundary points skipped)");
    if let Some((a, b, l, j, r)) = first_disagreement {
        detail += &format!("; first disagreement alpha={a} beta={b}: bound={l} jury={j} roots={r}");
    }
    outcome(agree == checked, detail)
}

fn random_network(rng: &mut ChaCha8Rng) -> PinnedLaplacian {
    let n = rng.gen_range(2..=8);
    if rng.gen_bool(0.5) {
        let springs = (0..n - 1).map(|_| rng.gen_range(0.01..0.2)).collect();
        let mut leader = vec![0.0; n];
        leader[rng.gen_range(0..n)] = rng.gen_range(0.01..0.2);
        PinnedLaplacian::from_chain(&StiffnessChain::new(springs, leader).unwrap()).unwrap()
    } else {
        // random spanning tree plus extra edges
        let mut edges: Vec<(usize, usize, f64)> = (1..n)
            .map(|j| (rng.gen_range(0..j), j, rng.gen_range(0.01..0.2)))
            .collect();
        for i in 0..n {
            for j in i + 1..n {
                if rng.gen_bool(0.2) && !edges.iter().any(|&(a, b, _)| a == i && b == j) {
                    edges.push((i, j, rng.gen_range(0.01..0.2)));
                }
            }
        }
        let leader = (0..n)
            .map(|k| {
                if k == 0 || rng.gen_bool(0.3) {
                    rng.gen_range(0.01..0.2)
                } else {
                    0.0
                }
            })
            .collect();
        PinnedLaplacian::from_graph(StiffnessGraph::new(n, &edges, leader).unwrap()).unwrap()
    }
}

fn random_controller(rng: &mut ChaCha8Rng, lap: &PinnedLaplacian) -> ControllerConfig {
    if rng.gen_bool(0.5) {
        ControllerConfig::baseline(rng.gen_range(0.1..0.9) * baseline_gamma_bound(lap), DT)
    } else {
        let alpha = rng.gen_range(0.05..2.0);
        let beta = rng.gen_range(0.1..0.9) * dsr_beta_bound(lap, alpha, DT);
        ControllerConfig::dsr(alpha, beta, DT)
    }
}

fn c7_convergence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    let mut accepted = 0;
    while accepted < 20 {
        let lap = random_network(&mut rng);
        let ctrl = random_controller(&mut rng, &lap);
        let report = controller_report(&lap, &ctrl);
        let ts = settling_from_radius(report.spectral_radius, DT, 4.0);
        // keep run lengths bounded
        if !report.stable || ts > 300.0 {
            continue;
        }
        accepted += 1;
        let reference = TrajectorySpec::step(rng.gen_range(-100.0..100.0));
        let err = response_stats(&lap, &ctrl, &reference, 10.0 * ts.max(DT), 0.02)
            .unwrap()
            .final_error;
        worst = worst.max(err);
    }
    outcome(
        worst < 1e-6,
        format!("20 random stable configurations, worst |Y - y_d|_inf after 10 T_s = {worst:.3e} cm (< 1e-6)"),
    )
}

fn c8_decentralization() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let lap = random_network(&mut rng);
        let n = lap.len();
        let state = |rng: &mut ChaCha8Rng| {
            (0..n)
                .map(|_| rng.gen_range(-100.0..100.0))
                .collect::<Vec<f64>>()
        };
        let y = state(&mut rng);
        let y_del = state(&mut rng);
        let yd = rng.gen_range(-100.0..100.0);
        let graph = lap.graph();
        let (f, f_del) = (graph.measured_forces(&y), graph.measured_forces(&y_del));
        let gamma = rng.gen_range(0.0..1.0) * baseline_gamma_bound(&lap);
        let mut gains = DsrGains::new(rng.gen_range(0.05..2.0), rng.gen_range(0.1..20.0));
        gains.delay = rng.gen_range(1..=3);
        let pairs = [
            (
                baseline_update_local(&lap, &y, &f, gamma, yd),
                baseline_update_matrix(&lap, &y, gamma, yd),
            ),
            (
                dsr_update_local(&lap, &y, &y_del, &f, &f_del, &gains, DT, yd),
                dsr_update_matrix(&lap, &y, &y_del, &gains, DT, yd),
            ),
        ];
        for (local, matrix) in pairs {
            for (a, b) in local.iter().zip(&matrix) {
                worst = worst.max((a - b).abs() / a.abs().max(b.abs()).max(1.0));
            }
        }
    }
    outcome(
        worst <= 1e-12,
        format!("1000 random states, worst relative local/matrix gap {worst:.3e} (<= 1e-12)"),
    )
}

fn c9_speed() -> Outcome {
    let report = reproduce(TABLE_TOL).unwrap();
    let (vb, vd) = (report.baseline.max_speed, report.dsr.max_speed);
    outcome(
        vd <= vb && vb <= SPEED_LIMIT,
        format!("DSR v_max={vd:.4} <= baseline v_max={vb:.4} <= {SPEED_LIMIT} cm/s"),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("C1 simulated table row", c1_table_row),
        ("C2 cohesion improvement", c2_improvement),
        ("C3 Laplacian eigenvalues", c3_eigenvalues),
        ("C4 tuning recovery", c4_tuning),
        ("C5 measured settling", c5_settling),
        ("C6 stability equivalence", c6_stability_equivalence),
        ("C7 convergence", c7_convergence),
        ("C8 decentralization", c8_decentralization),
        ("C9 speed constraint", c9_speed),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let o = check();
        println!(
            "[{}] {name}: {}",
            if o.passed { "PASS" } else { "FAIL" },
            o.detail
        );
        failed += usize::from(!o.passed);
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
