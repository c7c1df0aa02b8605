//! One pass/fail line per acceptance criterion.
//!
//! Run with `cargo test -p cuspflow-cli --test acceptance -- --nocapture`.

use cuspflow::grid::{graded_grid, uniform};
use cuspflow::solver::{Boundary, FlowTrajectory, Mesh, Scheme, Solver, SolverConfig, State};
use cuspflow::verify::{epsilon_stretch, names, Flow};
use cuspflow::{ClosedFormMetric, ScaleFactor};
use cuspflow_cli::config::ExperimentConfig;
use cuspflow_cli::run::{run, RunOutcome, Signature};

const ORACLE_TOL: f64 = 1e-3;
const MIN_ORDER: f64 = 1.9;
const STRETCH_TOL: f64 = 1e-6;
const SANDWICH_TOL: f64 = 0.05;
const INITIAL_EXCESS_BOUND: f64 = 0.5;
const SPREAD_BOUND: f64 = 2.0;
const ROBUSTNESS_TOL: f64 = 0.10;

/// Criteria that fail for the reference construction, with the reason.
const KNOWN_RED: [(&str, &str); 2] = [
    ("A5", "glued data has K(0) far below -1, so the floor -1/(1+2t) fails at t = 0"),
    ("A6", "lower-cigar plateau makes L_k(0) - ln 2k grow like k/22"),
];

const REFERENCE: &str = "[sweep]\nk_list = [10, 15, 20, 30]\nt_end = 1.5\n";

struct Line {
    id: &'static str,
    title: &'static str,
    pass: bool,
    detail: String,
}

fn sup_error(traj: &FlowTrajectory, exact: &ClosedFormMetric) -> f64 {
    traj.snapshots
        .iter()
        .flat_map(|sn| sn.polar.iter().map(move |(s, u)| (u - exact.eval(s, sn.time).unwrap()).abs()))
        .fold(0.0, f64::max)
}

fn evolve_exact(exact: &ClosedFormMetric, s: Vec<f64>, config: SolverConfig, t_end: f64, times: &[f64]) -> FlowTrajectory {
    let x = s.iter().map(|&v| exact.eval(v, 0.0).unwrap()).collect();
    let mesh = Mesh::interval(s, Boundary::Metric(exact.clone()), Boundary::Metric(exact.clone())).unwrap();
    Solver::new(mesh, config).unwrap().evolve(State { t: 0.0, x }, t_end, times).unwrap()
}

fn a1() -> Line {
    let mut pass = true;
    let mut detail = String::new();
    for lambda in [1.0, 10.0, 500.0] {
        let exact = ClosedFormMetric::cigar(lambda, 0.0).unwrap();
        let t_end = 1.0 / lambda;
        let times: Vec<f64> = (0..=4).map(|i| t_end * f64::from(i) / 4.0).collect();
        let errors: Vec<f64> = [101usize, 201, 401]
            .iter()
            .map(|&n| {
                let dt = t_end / ((n - 1) / 5) as f64;
                let cfg = SolverConfig::fixed(Scheme::CrankNicolson, dt);
                sup_error(&evolve_exact(&exact, uniform(-10.0, 10.0, n), cfg, t_end, &times), &exact)
            })
            .collect();
        let order = errors.windows(2).map(|w| (w[0] / w[1]).log2()).fold(f64::INFINITY, f64::min);
        pass &= errors[0] <= ORACLE_TOL && order >= MIN_ORDER;
        detail += &format!("lambda {lambda}: err {:.2e} order {order:.2}; ", errors[0]);
    }
    Line { id: "A1", title: "soliton oracle", pass, detail }
}

fn a2() -> Line {
    let exact = ClosedFormMetric::HyperbolicPunctured.scaled(ScaleFactor::Dilating).unwrap();
    let s = graded_grid(0.05, 10.0, 0.05, 1.05).unwrap();
    let cfg = SolverConfig { scheme: Scheme::CrankNicolson, ..SolverConfig::default() };
    let times: Vec<f64> = (0..=20).map(|i| f64::from(i) / 20.0).collect();
    let err = sup_error(&evolve_exact(&exact, s, cfg, 1.0, &times), &exact);
    Line { id: "A2", title: "dilating-hyperbolic oracle", pass: err <= ORACLE_TOL, detail: format!("sup error {err:.2e}") }
}

fn a3() -> Line {
    let mut worst: f64 = 0.0;
    for lambda in [1.0, 10.0] {
        let soliton = ClosedFormMetric::cigar(lambda, 0.5).unwrap();
        for eps in [0.01, 0.1, 0.3, 1.0] {
            let st = epsilon_stretch(soliton.clone(), eps).unwrap();
            for s in [-4.0, -1.0, 0.0, 0.5, 3.0, 9.0] {
                for t in [0.0, 0.25, 1.0, 2.0] {
                    let want = eps / (2.0 * (eps * t + 1.0));
                    worst = worst.max((st.residual(s, t).unwrap() - want).abs());
                }
            }
        }
    }
    Line { id: "A3", title: "stretch identity", pass: worst <= STRETCH_TOL, detail: format!("max deviation {worst:.2e}") }
}

fn entries_line(
    id: &'static str,
    title: &'static str,
    out: &RunOutcome,
    wanted: &[&str],
    limit: Option<f64>,
) -> Line {
    let mut pass = true;
    let mut failed = Vec::new();
    let mut worst = f64::NEG_INFINITY;
    for m in &out.members {
        for name in wanted {
            let e = m.report.get(name).unwrap_or_else(|| panic!("k = {}: no entry {name:?}", m.k));
            let v = e.max_violation.expect("applicable");
            worst = worst.max(v);
            let ok = e.pass && limit.map_or(true, |l| v <= l);
            if !ok {
                pass = false;
                failed.push(format!("{name} (k = {})", m.k));
            }
        }
    }
    let mut detail = format!("worst violation {worst:.2e}");
    if !failed.is_empty() {
        detail += &format!("; failing: {}", failed.join(", "));
    }
    Line { id, title, pass, detail }
}

fn a6(sig: &Signature) -> Line {
    let excess = sig.rows.iter().map(|r| r.initial_excess).fold(f64::NEG_INFINITY, f64::max);
    let lengths = sig.final_length_spread().unwrap();
    let curvature = sig.late_curvature_spread();
    let pass = excess <= INITIAL_EXCESS_BOUND
        && lengths <= SPREAD_BOUND
        && curvature.map_or(false, |c| c.is_finite() && c <= SPREAD_BOUND);
    let rows: Vec<String> = sig.rows.iter().map(|r| format!("k{} {:.3}", r.k, r.initial_excess)).collect();
    let detail = format!(
        "L(0) - ln 2k: {}; L(1.5) max/min {lengths:.4}; late sup|K| max/min {}",
        rows.join(" "),
        curvature.map_or("unresolved".into(), |c| format!("{c:.4}"))
    );
    Line { id: "A6", title: "counterexample signature", pass, detail }
}

fn a6_quantities(sig: &Signature) -> Vec<(String, f64)> {
    sig.rows
        .iter()
        .flat_map(|r| {
            [
                (format!("k{} initial excess", r.k), r.initial_excess),
                (format!("k{} final length", r.k), r.final_length),
                (format!("k{} late curvature", r.k), r.late_curvature_sup.unwrap_or(f64::NAN)),
            ]
        })
        .collect()
}

fn sweep(extra: &str) -> RunOutcome {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("{REFERENCE}output_dir = {:?}\n{extra}", dir.path().display().to_string());
    let cfg = ExperimentConfig::parse(&text, "acceptance.toml").unwrap();
    run(&cfg, &text).unwrap()
}

fn a8(reference: &Signature) -> Line {
    let base = a6_quantities(reference);
    let mut worst = (0.0, String::new());
    for (label, extra) in [("s_min/2", "[initial]\ns_min = 0.025\n"), ("clipped_linear", "[initial]\nblend = \"clipped_linear\"\n")] {
        let variant = sweep(extra);
        let other = a6_quantities(variant.signature.as_ref().expect("variant sweep complete"));
        for ((name, a), (_, b)) in base.iter().zip(&other) {
            let change = ((b - a) / a).abs();
            if !(change <= worst.0) {
                worst = (change, format!("{label}, {name}"));
            }
        }
    }
    Line {
        id: "A8",
        title: "robustness",
        pass: worst.0 < ROBUSTNESS_TOL,
        detail: format!("largest relative change {:.1}% ({})", 100.0 * worst.0, worst.1),
    }
}

#[test]
fn acceptance() {
    let mut lines = vec![a1(), a2(), a3()];
    let reference = sweep("");
    assert!(reference.members.iter().all(|m| m.complete()), "reference sweep incomplete");
    let sig = reference.signature.as_ref().expect("signature");
    lines.push(entries_line("A4", "barrier sandwich", &reference, &names::SANDWICH, Some(SANDWICH_TOL)));
    lines.push(entries_line("A5", "named-inequality suite", &reference, &names::SUITE, None));
    lines.push(a6(sig));
    lines.push(entries_line("A7", "origin control", &reference, &names::FITTED, None).with_fit(&reference));
    lines.push(a8(sig));

    let mut unexpected = Vec::new();
    for l in &lines {
        let known = KNOWN_RED.iter().find(|(id, _)| *id == l.id);
        let status = if l.pass { "PASS" } else { "FAIL" };
        match known {
            Some((_, why)) => println!("{} {status} {}: {} [known red: {why}]", l.id, l.title, l.detail),
            None => println!("{} {status} {}: {}", l.id, l.title, l.detail),
        }
        if l.pass == known.is_some() {
            unexpected.push(l.id);
        }
    }
    assert!(unexpected.is_empty(), "criteria with unexpected status: {unexpected:?}");
}

impl Line {
    fn with_fit(mut self, out: &RunOutcome) -> Self {
        let p = &out.params;
        self.detail = format!(
            "alpha_hat {:.4}, c {:.5}; {}",
            p.alpha_hat.unwrap_or(f64::NAN),
            p.decay_c.unwrap_or(f64::NAN),
            self.detail
        );
        self
    }
}
