mod common;

use ipd_core::bench::{gen_basis_pursuit, gen_l1l2, gen_nlcqp, gen_toy, metrics};
use ipd_core::diagnostics::energy_certificate;
use ipd_core::prox::{prox_l1, prox_l1_l2, project_nonneg};
use ipd_core::solvers::{run, AlgParams, Method, MetricSchedule, RunOptions, TraceTable};
use ipd_core::{Metric, Vector};
use proptest::prelude::*;

fn vec_strategy(n: usize) -> impl Strategy<Value = Vector> {
    proptest::collection::vec(-10.0..10.0f64, n).prop_map(Vector::from_vec)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn prox_outputs_satisfy_optimality(v in vec_strategy(6), t in 0.0..4.0f64, beta in 0.01..5.0f64) {
        let p = prox_l1(&v, t).unwrap();
        let u = &v - &p;
        for i in 0..6 {
            if p[i] != 0.0 {
                prop_assert!((u[i] - t * p[i].signum()).abs() <= 1e-12);
            } else {
                prop_assert!(u[i].abs() <= t + 1e-12);
            }
        }
        let q = prox_l1_l2(&v, t, beta).unwrap();
        prop_assert!(q.iter().zip(p.iter()).all(|(a, b)| a.abs() <= b.abs()));
        let n = project_nonneg(&v);
        prop_assert!(n.iter().all(|x| *x >= 0.0));
        prop_assert!((&v - &n).iter().zip(n.iter()).all(|(r, x)| *r <= 0.0 || *x == 0.0));
    }

    #[test]
    fn generators_respect_shapes_and_planting(m in 2usize..12, extra in 1usize..20, seed in 0u64..1000) {
        let n = m + extra;
        let p = gen_nlcqp(m, n, seed).unwrap();
        prop_assert_eq!((p.m(), p.n()), (m, n));
        prop_assert!(p.b().iter().all(|v| (0.0..1.0).contains(v)));

        let bp = gen_basis_pursuit(m, n, seed).unwrap();
        let r = bp.reference().unwrap();
        prop_assert!(bp.feasibility(&r.x_star) <= 1e-12 * (1.0 + bp.b().norm()));
        prop_assert!((r.f_star - r.x_star.lp_norm(1)).abs() <= 1e-12 * (1.0 + r.f_star));
        prop_assert_eq!(r.x_star.iter().filter(|v| **v != 0.0).count(), ((n as f64) * 0.1).round() as usize);

        let l = gen_l1l2(m, n, seed, 0.5, 1e-3).unwrap();
        let r = l.reference().unwrap();
        prop_assert!((l.feasibility(&r.x_star) - 1e-3).abs() <= 1e-12);
        let mt = metrics(&r.x_star, Some(r), l.a(), l.b()).unwrap();
        prop_assert_eq!(mt.rel, Some(0.0));
    }

    #[test]
    fn toy_reference_is_kkt(m in 1usize..6, extra in 1usize..15, seed in 0u64..1000) {
        let p = gen_toy(m, m + extra, seed).unwrap();
        let kkt = p.kkt_point().unwrap();
        let r = p.kkt_residual(&kkt.x_star, &kkt.lambda_star, None).unwrap();
        prop_assert!(r.max() <= 1e-10, "{:?}", r);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn toy_energy_never_increases(seed in 0u64..500, alpha in 3.0..30.0f64, s in 0.05..3.0f64, c in 0.0..3.0f64) {
        let p = gen_toy(3, 10, seed).unwrap();
        let m = Method::Ippd(AlgParams {
            alpha,
            s,
            metric: MetricSchedule::Constant(Metric::ScaledIdentity(c)),
            max_outer: 150,
            ..AlgParams::default()
        });
        let t = run(&p, &m, &RunOptions::default()).unwrap();
        let table = TraceTable::from_trace(&t);
        let mut series = vec![(1, t.e1.unwrap())];
        series.extend(table.k.iter().copied().zip(table.energy.iter().map(|e| e.unwrap())));
        let cert = energy_certificate(&series, 1e-8);
        prop_assert!(cert.pass, "{:?}", cert);
    }
}
