use cuspflow::diagnostics::{cusp_length, LENGTH_FROM};
use cuspflow::initial_data::{build_initial_profile, default_s_switch, Blend, InitialDataSpec};
use cuspflow::solver::{BoundaryTag, FlowTrajectory, Solver, SolverConfig};
use cuspflow::verify::{check_named_inequalities, check_ordering, names, Field, NamedParams, Region};
use cuspflow::{make_barrier_pair, ClosedFormMetric, Error};
use proptest::prelude::*;

const TIMES: [f64; 8] = [0.0, 0.01, 0.1, 0.5, 0.75, 1.0, 1.25, 1.5];

fn run(k: u32, t_end: f64) -> FlowTrajectory {
    let init = build_initial_profile(&InitialDataSpec::new(k)).unwrap();
    let (solver, state) = Solver::for_initial(&init, SolverConfig::default(), BoundaryTag::default()).unwrap();
    let times: Vec<f64> = TIMES.iter().copied().filter(|&t| t <= t_end).collect();
    solver.evolve(state, t_end, &times).unwrap()
}

#[test]
fn reference_member_satisfies_suite_except_initial_curvature() {
    let traj = run(10, 1.5);
    let report = check_named_inequalities(&traj, 10, &NamedParams::for_spacing(0.05)).unwrap();
    for e in &report.entries {
        if e.name == names::CHEN {
            continue;
        }
        assert!(e.pass, "{}\n{}", e.name, report.render_table());
    }
    // the glued data is far more negatively curved than -1 at t = 0
    let chen = report.get(names::CHEN).unwrap();
    assert!(!chen.pass);
    assert!(chen.note.as_ref().unwrap().contains("t = 0;"), "{:?}", chen.note);
}

#[test]
fn bound_at_k_holds_at_half() {
    let traj = run(10, 0.5);
    let u = traj.at(0.5).unwrap().polar.value_at(10.0).unwrap();
    assert!(u <= 0.5 * 5f64.ln() - 10f64.ln());
}

#[test]
fn short_time_bound_has_zero_margin_at_start() {
    let traj = run(10, 0.0);
    let report = check_named_inequalities(&traj, 10, &NamedParams::for_spacing(0.05)).unwrap();
    // on s <= k the data is exactly -ln s, so the lower bound holds with slack ½ln10
    let e = report.get(names::SHORT_TIME).unwrap();
    assert!((e.max_violation.unwrap() + 0.5 * 10f64.ln()).abs() < 1e-12);
    assert!(!report.get(names::ORIGIN).unwrap().is_applicable());
}

#[test]
fn missing_named_time_is_a_precondition_error() {
    let init = build_initial_profile(&InitialDataSpec::new(10)).unwrap();
    let (solver, state) = Solver::for_initial(&init, SolverConfig::default(), BoundaryTag::default()).unwrap();
    let traj = solver.evolve(state, 0.5, &[0.0, 0.5]).unwrap();
    let err = check_named_inequalities(&traj, 10, &NamedParams::for_spacing(0.05)).unwrap_err();
    assert!(matches!(err, Error::Precondition(_)), "{err}");
}

/// `∫ e^{u₀}` from `LENGTH_FROM` outward by composite Simpson on the closed
/// forms, with the flat cap `e^{v} r` negligible.
fn initial_length_oracle(k: u32, blend: Blend) -> f64 {
    let kf = f64::from(k);
    let bp = make_barrier_pair(k).unwrap();
    let u0 = |s: f64| {
        if s <= 2.0 * kf {
            -s.ln()
        } else if s >= 3.0 * kf {
            bp.lower.eval(s, 0.0).unwrap()
        } else {
            let lo = bp.lower.eval(s, 0.0).unwrap();
            let hi = bp.upper.eval(s, 0.0).unwrap();
            let phi = blend.weight((s - 2.0 * kf) / kf);
            ((1.0 - phi) * -s.ln() + phi * lo).clamp(lo, hi)
        }
    };
    let simpson = |a: f64, b: f64, n: usize| {
        let h = (b - a) / n as f64;
        let mut total = (u0(a).exp() + u0(b).exp()) / 3.0;
        for i in 1..n {
            total += u0(a + h * i as f64).exp() * if i % 2 == 1 { 4.0 / 3.0 } else { 2.0 / 3.0 };
        }
        total * h
    };
    let sw = default_s_switch(k);
    simpson(LENGTH_FROM, 2.0 * kf, 200_000) + simpson(2.0 * kf, 3.0 * kf, 200_000) + simpson(3.0 * kf, sw, 200_000)
}

#[test]
fn initial_length_matches_quadrature_and_grows_past_log() {
    let mut excess = Vec::new();
    for k in [10u32, 20, 30] {
        let traj = run(k, 0.0);
        let l0 = cusp_length(&traj.snapshots[0], LENGTH_FROM).unwrap();
        let oracle = initial_length_oracle(k, Blend::Smoothstep);
        assert!((l0 - oracle).abs() < 1e-3, "k={k}: {l0} vs {oracle}");
        excess.push(l0 - (2.0 * f64::from(k)).ln());
    }
    // the lower cigar's plateau between 3k and its centre adds about
    // (k²/10 - 2k)/(√5 k) to the cusp length
    let slope = (excess[2] - excess[1]) / 10.0;
    assert!((slope - 1.0 / (10.0 * 5f64.sqrt())).abs() < 0.005, "{excess:?}");
}

#[test]
fn ordering_of_trajectory_against_itself() {
    let traj = run(10, 0.01);
    let e = check_ordering(
        "self",
        Field::Trajectory(&traj),
        Field::Trajectory(&traj),
        Region::new(0.0, f64::INFINITY),
        &[0.0, 0.01],
        0.0,
    )
    .unwrap();
    assert_eq!(e.max_violation, Some(0.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn ordering_is_antisymmetric_for_offsets(c in -3.0f64..3.0, lambda in 0.5f64..5.0, lo in 0.1f64..3.0) {
        let m = ClosedFormMetric::cigar(lambda, 1.0).unwrap();
        let base = m.clone();
        let shifted = move |s: f64, t: f64| base.eval(s, t).unwrap() + c;
        let (a, b) = (Field::Closed(&m), Field::Bound(&shifted));
        let region = Region::new(lo, lo + 4.0);
        let ab = check_ordering("ab", a, b, region, &[0.0, 0.3], 0.0).unwrap().max_violation.unwrap();
        let ba = check_ordering("ba", b, a, region, &[0.0, 0.3], 0.0).unwrap().max_violation.unwrap();
        prop_assert!((ab + ba).abs() < 1e-12);
        prop_assert!((ab - c).abs() < 1e-12);
    }
}
