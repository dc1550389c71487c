//! Acceptance suite. Runs without the libtest harness so each criterion
//! prints exactly one `PASS`/`FAIL` line; the process exits nonzero when any
//! criterion fails.

mod common;

use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use ipd_core::bench::{
    compute_reference_oracle, gen_basis_pursuit, gen_l1l2, gen_nlcqp, gen_toy, metrics, run_experiment,
    with_oracle_reference, ExperimentConfig,
};
use ipd_core::diagnostics::{
    energy_certificate, energy_series, feasibility_certificate, objective_certificate, perturbed_energy,
    rate_slope,
};
use ipd_core::linalg::{gaussian_vector, seeded_rng};
use ipd_core::solvers::{
    dual_anchor, run, AalmParams, AlgParams, EpsSchedule, InjectedEps, InnerPolicy, Method, MetricSchedule,
    RunOptions, StopReason, StopRule, Trace, TraceTable,
};
use ipd_core::{Metric, ProblemSpec, Vector};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn fixed_inner(tol: f64) -> InnerPolicy {
    InnerPolicy { eps: EpsSchedule::Fixed(tol), max_iter: 100_000 }
}

fn crit1_prox() -> Outcome {
    let s = common::run_prox_suite(2024);
    check(
        s.max_error <= 1e-6 && s.max_violation <= 1e-10,
        format!("100 cases, max |prox - brute| = {:.2e}, max membership violation = {:.2e}", s.max_error, s.max_violation),
    )
}

fn rel(diff: f64, scale: f64) -> f64 {
    if scale > 0.0 {
        diff / scale
    } else {
        diff
    }
}

/// Worst relative defect of the anchor recurrences and the dual-step
/// identity along a trace with retained vectors.
fn step_identity_defect(p: &ProblemSpec, t: &Trace, alpha: f64, s: f64, x_feas: &Vector) -> f64 {
    let mut worst: f64 = 0.0;
    let a = p.a();
    for w in t.records.windows(2) {
        let (cur, next) = (w[0].vectors.as_ref().unwrap(), w[1].vectors.as_ref().unwrap());
        let k = cur.k as f64;
        let c = (k + alpha - 2.0) / (alpha - 1.0);

        let lhs = &next.derived.x_hat - &cur.derived.x_hat;
        let step = (&cur.x_next - &cur.derived.x_bar) * c;
        let scale = next.derived.x_hat.norm().max(cur.derived.x_hat.norm()).max(step.norm());
        worst = worst.max(rel((lhs - &step).norm(), scale));

        let lhs = &next.derived.lambda_hat - &cur.derived.lambda_hat;
        let step = (&cur.lambda_next - &cur.derived.lambda_bar) * c;
        let scale = next.derived.lambda_hat.norm().max(cur.derived.lambda_hat.norm()).max(step.norm());
        worst = worst.max(rel((lhs - &step).norm(), scale));

        let coef = s * k / (k + alpha - 2.0);
        let lhs = &cur.lambda_next - &cur.derived.lambda_bar;
        let rhs = a * (&next.derived.x_hat - x_feas) * coef;
        let scale = lhs.norm().max(coef * a.norm() * (next.derived.x_hat.norm() + x_feas.norm()));
        worst = worst.max(rel((lhs - rhs).norm(), scale));

        // the stored anchor agrees with its closed form
        let direct = dual_anchor(next.k, alpha, &next.derived.x_bar, &next.x);
        worst = worst.max(rel((direct - &next.derived.x_hat).norm(), next.derived.x_hat.norm()));
    }
    worst
}

fn crit2_step_identities() -> Outcome {
    let opts = RunOptions { retain_vectors: true, ..RunOptions::default() };
    let mut worst: f64 = 0.0;
    let mut runs = 0;
    for (i, p) in common::desk_instances().iter().enumerate() {
        let x_feas = common::feasible_point(p);
        let alpha = [3.0, 5.0, 10.0, 40.0][i % 4];
        let s = [1.0, 0.5, 2.0][i % 3];
        let exact = AlgParams {
            alpha,
            s,
            metric: MetricSchedule::Constant(Metric::ScaledIdentity(1.0)),
            inner: fixed_inner(1e-10),
            max_outer: 40,
            ..AlgParams::default()
        };
        let mut methods = vec![Method::Ippd(exact)];
        if p.g().is_some() {
            let lin = AlgParams {
                alpha,
                s,
                metric: MetricSchedule::Constant(Metric::ScaledIdentity(s * p.lipschitz_g())),
                inner: fixed_inner(1e-10),
                max_outer: 40,
                ..AlgParams::default()
            };
            methods.push(Method::Iilppd(lin));
        }
        for m in &methods {
            let t = run(p, m, &opts).map_err(|e| format!("instance {i}: {e}"))?;
            if t.records.len() < 2 {
                return Err(format!("instance {i}: only {} records", t.records.len()));
            }
            worst = worst.max(step_identity_defect(p, &t, alpha, s, &x_feas));
            runs += 1;
        }
    }
    check(worst <= 1e-9, format!("{runs} traces on 10 instances, worst relative defect {worst:.2e}"))
}

struct ToyRun {
    p: ProblemSpec,
    trace: Trace,
    alpha: f64,
    s: f64,
    metric: MetricSchedule,
}

fn toy_run() -> ToyRun {
    let p = gen_toy(5, 20, 1).unwrap();
    let (alpha, s) = (3.0, 1.0);
    let metric = MetricSchedule::Constant(Metric::ScaledIdentity(1.0));
    let m = Method::Ippd(AlgParams { alpha, s, metric: metric.clone(), max_outer: 500, ..AlgParams::default() });
    let trace = run(&p, &m, &RunOptions { retain_vectors: true, ..RunOptions::default() }).unwrap();
    ToyRun { p, trace, alpha, s, metric }
}

fn crit3_energy(toy: &ToyRun) -> Outcome {
    let kkt = toy.p.kkt_point().unwrap();
    let series = energy_series(&toy.p, &toy.trace, &kkt, toy.alpha, toy.s, &toy.metric).map_err(|e| e.to_string())?;
    let exact = energy_certificate(&series, 1e-8);

    let lg = toy.p.lipschitz_g();
    let mut rng = seeded_rng(99);
    let dir = gaussian_vector(&mut rng, toy.p.n()).normalize();
    let metric = MetricSchedule::Constant(Metric::ScaledIdentity(toy.s * lg));
    let params = AlgParams {
        alpha: toy.alpha,
        s: toy.s,
        metric: metric.clone(),
        max_outer: 500,
        injected_eps: Some(InjectedEps { direction: dir, scale: 1e-2, power: 3.0 }),
        ..AlgParams::default()
    };
    let t = run(&toy.p, &Method::Iilppd(params), &RunOptions { retain_vectors: true, ..RunOptions::default() })
        .map_err(|e| e.to_string())?;
    let pert = perturbed_energy(&toy.p, &t, &kkt, toy.alpha, toy.s, &metric).map_err(|e| e.to_string())?;
    let perturbed = energy_certificate(&pert, 1e-8);
    check(
        exact.pass && perturbed.pass && series.len() == 501,
        format!(
            "500 steps, max energy increase {:.2e}, max perturbed-energy increase {:.2e}, allowance 1e-8*(1+E1) with E1 = {:.4}",
            exact.observed, perturbed.observed, series[0].1
        ),
    )
}

fn crit4_bounds(toy: &ToyRun) -> Outcome {
    let kkt = toy.p.kkt_point().unwrap();
    let e1 = 0.5 * toy.metric.at(0).seminorm_sq(&kkt.x_star).unwrap() + 0.5 * kkt.lambda_star.norm_squared();
    let table = TraceTable::from_trace(&toy.trace);
    let f_star = toy.p.reference().unwrap().f_star;
    let feas = feasibility_certificate(&table, e1, toy.alpha, toy.s, 1e-6);
    let obj = objective_certificate(&table, e1, toy.alpha, toy.s, f_star, kkt.lambda_star.norm(), 1e-6);
    let last = *table.k.last().unwrap();
    check(
        feas.pass && obj.pass && last == 501,
        format!(
            "k in (1, {last}], feasibility worst ratio {:.3}, objective worst ratio {:.3}",
            feas.observed / feas.predicted,
            obj.observed / obj.predicted
        ),
    )
}

fn crit5_slope(toy: &ToyRun) -> Outcome {
    let series = toy.trace.feasibility_series();
    let slope = rate_slope(&series, 10, 500).map_err(|e| e.to_string())?;
    check(slope <= -1.5, format!("log-log slope of feasibility over [10, 500] = {slope:.3}"))
}

fn crit6_basis_pursuit() -> Outcome {
    let p = gen_basis_pursuit(60, 100, 7).unwrap();
    let m = Method::Ippd(AlgParams {
        alpha: 100.0,
        s: 100.0,
        metric: MetricSchedule::Constant(Metric::Zero),
        inner: fixed_inner(1e-11),
        max_outer: 1000,
        stop: StopRule::ResPlusRel(1e-8),
        ..AlgParams::default()
    });
    let t = run(&p, &m, &RunOptions::default()).map_err(|e| e.to_string())?;
    let s = &t.summary;
    let rel = s.rel.unwrap_or(f64::INFINITY);
    check(
        s.stop == StopReason::Converged && s.iterations <= 160 && s.res <= 1e-8 && rel <= 1e-8,
        format!("Init {}, Res {:.2e}, Rel {:.2e}", s.iterations, s.res, rel),
    )
}

fn crit7_l1l2() -> Outcome {
    let p = gen_l1l2(300, 600, 1, 0.5, 1e-4).unwrap();
    let m = Method::Iilppd(AlgParams {
        alpha: 20.0,
        s: 1.0,
        metric: MetricSchedule::Constant(Metric::ScaledIdentity(0.5)),
        inner: fixed_inner(1e-8),
        max_outer: 2000,
        stop: StopRule::FeasTol(5e-4),
        ..AlgParams::default()
    });
    let t = run(&p, &m, &RunOptions::default()).map_err(|e| e.to_string())?;
    let mt = metrics(&t.x, p.reference(), p.a(), p.b()).map_err(|e| e.to_string())?;
    let (rel, snr) = (mt.rel.unwrap(), mt.snr.unwrap());
    check(
        t.summary.stop == StopReason::Converged && rel <= 1e-5 && snr >= 60.0,
        format!("Init {}, Res {:.2e}, Rel {:.2e}, SNR {:.1} dB", t.summary.iterations, mt.res, rel, snr),
    )
}

fn final_feas_gap(t: &Trace) -> (f64, f64) {
    let last = t.records.last().unwrap();
    (last.feas, last.obj_gap.unwrap_or(f64::INFINITY))
}

fn crit8_nlcqp() -> Outcome {
    let p = with_oracle_reference(gen_nlcqp(20, 100, 1).unwrap(), 1e-10).map_err(|e| e.to_string())?;
    let l = p.lipschitz_g();
    let aalm = Method::Aalm(AalmParams { inner: fixed_inner(1e-8), max_outer: 500, ..AalmParams::defaults_for(&p) });
    let ta = run(&p, &aalm, &RunOptions::default()).map_err(|e| e.to_string())?;
    let (fa, ga) = final_feas_gap(&ta);
    let mut ok = ta.records.len() == 500 && fa <= 1e-5;
    let mut detail = format!("AALM feas {fa:.2e} gap {ga:.2e}");
    for alpha in [10.0, 20.0, 30.0] {
        let m = Method::Iilppd(AlgParams {
            alpha,
            s: l,
            metric: MetricSchedule::Constant(Metric::ScaledIdentity(l * l)),
            inner: fixed_inner(1e-8),
            max_outer: 500,
            ..AlgParams::default()
        });
        let t = run(&p, &m, &RunOptions::default()).map_err(|e| e.to_string())?;
        let (f, g) = final_feas_gap(&t);
        ok &= t.records.len() == 500 && f <= 1e-5 && g <= 10.0 * ga;
        detail.push_str(&format!("; alpha={alpha}: feas {f:.2e} gap {g:.2e}"));
    }
    check(ok, detail)
}

fn crit9_oracle() -> Outcome {
    let mut qp_err: f64 = 0.0;
    for seed in 1..=5 {
        let p = common::tiny_qp(seed);
        let (h, q) = p.g().unwrap().as_quadratic().unwrap();
        let (x, lambda) = common::enumerate_active_sets(&h.to_dense(3), q, p.a(), p.b());
        let r = compute_reference_oracle(&p, 1e-10).map_err(|e| format!("qp {seed}: {e}"))?;
        qp_err = qp_err.max((&r.x_star - &x).amax());
        qp_err = qp_err.max((r.lambda_star.as_ref().unwrap() - &lambda).amax());
    }
    let mut bp_err: f64 = 0.0;
    for seed in 1..=5 {
        let mut p = gen_basis_pursuit(60, 100, seed).unwrap();
        let planted = p.reference().unwrap().x_star.clone();
        p.set_reference(None);
        let r = compute_reference_oracle(&p, 1e-10).map_err(|e| format!("bp {seed}: {e}"))?;
        bp_err = bp_err.max((&r.x_star - &planted).amax());
    }
    check(
        qp_err <= 1e-8 && bp_err <= 1e-6,
        format!("tiny QP max error {qp_err:.2e}, basis pursuit max distance to planted x* {bp_err:.2e}"),
    )
}

fn without_time_columns(text: &str) -> String {
    let mut lines = text.lines();
    let Some(header) = lines.next() else { return String::new() };
    let cols: Vec<&str> = header.split(',').collect();
    let keep: Vec<bool> = cols.iter().map(|c| !c.eq_ignore_ascii_case("time_ms")).collect();
    let strip = |line: &str| {
        line.split(',').zip(&keep).filter(|(_, k)| **k).map(|(v, _)| v).collect::<Vec<_>>().join(",")
    };
    std::iter::once(strip(header)).chain(lines.map(strip)).collect::<Vec<_>>().join("\n")
}

fn csv_files(dir: &Path) -> Vec<std::path::PathBuf> {
    let mut out = vec![dir.join("summary.csv")];
    let mut traces: Vec<_> = fs::read_dir(dir.join("traces")).unwrap().map(|e| e.unwrap().path()).collect();
    traces.sort();
    out.extend(traces);
    out
}

fn crit10_determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut dirs = Vec::new();
    for name in ["first", "second"] {
        let dir = tmp.path().join(name);
        let cfg = serde_json::json!({
            "family": "basis_pursuit",
            "dimensions": [[20, 50], [30, 60]],
            "seed": 3,
            "algorithms": [
                {"algorithm": "ippd", "alpha": "n", "s": 100.0, "stop": {"mode": "res_plus_rel", "tol": 1e-8}},
                {"algorithm": "prox-alm", "sigma": 1.0, "max_iter": 200},
            ],
            "subtol": 1e-10,
            "repeat": 2,
            "output_dir": dir,
        });
        let cfg = ExperimentConfig::from_json(&cfg.to_string()).map_err(|e| e.to_string())?;
        run_experiment(&cfg, false).map_err(|e| e.to_string())?;
        dirs.push(dir);
    }
    let (a, b) = (csv_files(&dirs[0]), csv_files(&dirs[1]));
    if a.len() != b.len() || a.len() < 2 {
        return Err(format!("file sets differ: {} vs {}", a.len(), b.len()));
    }
    for (fa, fb) in a.iter().zip(&b) {
        if fa.file_name() != fb.file_name() {
            return Err(format!("{} vs {}", fa.display(), fb.display()));
        }
        let (ta, tb) = (fs::read_to_string(fa).unwrap(), fs::read_to_string(fb).unwrap());
        if without_time_columns(&ta) != without_time_columns(&tb) {
            return Err(format!("{} differs", fa.file_name().unwrap().to_string_lossy()));
        }
    }
    Ok(format!("{} CSV files identical outside the time columns", a.len()))
}

fn main() -> ExitCode {
    let toy_start = Instant::now();
    let toy = toy_run();
    // criteria 3 to 5 share this run; each is charged for it
    let toy_time = toy_start.elapsed();
    let criteria: Vec<(&str, Duration, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("prox oracle suite", Duration::from_secs(5), Box::new(crit1_prox)),
        ("step identities", Duration::from_secs(10), Box::new(crit2_step_identities)),
        ("energy monotonicity", Duration::from_secs(30), Box::new(|| crit3_energy(&toy))),
        ("feasibility and objective bounds", Duration::from_secs(30), Box::new(|| crit4_bounds(&toy))),
        ("rate slope", Duration::from_secs(30), Box::new(|| crit5_slope(&toy))),
        ("basis pursuit 60x100", Duration::from_secs(60), Box::new(crit6_basis_pursuit)),
        ("l1-l2 recovery 300x600", Duration::from_secs(120), Box::new(crit7_l1l2)),
        ("nlcqp comparison 20x100", Duration::from_secs(120), Box::new(crit8_nlcqp)),
        ("oracle integrity", Duration::from_secs(120), Box::new(crit9_oracle)),
        ("bench determinism", Duration::from_secs(120), Box::new(crit10_determinism)),
    ];
    let mut failed = 0;
    for (i, (name, limit, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = f();
        let took = start.elapsed() + if (2..5).contains(&i) { toy_time } else { Duration::ZERO };
        let in_time = took <= *limit;
        let (pass, detail) = match out {
            Ok(d) => (in_time, d),
            Err(d) => (false, d),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "{} criterion {:>2} {name}: {detail} [{:.2} s, limit {} s]",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            took.as_secs_f64(),
            limit.as_secs()
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
