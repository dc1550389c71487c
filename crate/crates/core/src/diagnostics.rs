//! Lyapunov energies and convergence-rate certificates evaluated on traces.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::Metric;
use crate::problem::{KKTPoint, ProblemSpec};
use crate::solvers::params::MetricSchedule;
use crate::solvers::{dual_anchor, extrapolate, Trace, TraceTable};
use crate::Vector;

/// Absolute slack added to every bound comparison.
pub const NOISE_FLOOR: f64 = 1e-12;

/// `Eₖ = s(k²−k)/(α−1)²·(𝓛(xₖ,λ*) − 𝓛(x*,λ*)) + ½‖x̂ₖ − x*‖²_{Mₖ₋₁} + ½‖λ̂ₖ − λ*‖²`.
///
/// Infinite when `F(xₖ)` is.
#[allow(clippy::too_many_arguments)]
pub fn energy(
    p: &ProblemSpec,
    kkt: &KKTPoint,
    alpha: f64,
    s: f64,
    m_prev: &Metric,
    k: usize,
    x_k: &Vector,
    x_bar: &Vector,
    lambda_k: &Vector,
    lambda_bar: &Vector,
) -> Result<f64> {
    if k < 1 {
        return Err(Error::arg("energy is defined for k >= 1"));
    }
    let kf = k as f64;
    let gap = if k == 1 {
        0.0
    } else {
        p.lagrangian(x_k, &kkt.lambda_star)? - p.lagrangian(&kkt.x_star, &kkt.lambda_star)?
    };
    let x_hat = dual_anchor(k, alpha, x_bar, x_k);
    let lambda_hat = dual_anchor(k, alpha, lambda_bar, lambda_k);
    let first = if gap == 0.0 {
        0.0
    } else {
        s * (kf * kf - kf) / ((alpha - 1.0) * (alpha - 1.0)) * gap
    };
    Ok(first
        + 0.5 * m_prev.seminorm_sq(&(x_hat - &kkt.x_star))?
        + 0.5 * (lambda_hat - &kkt.lambda_star).norm_squared())
}

/// `E₁ = ½‖x₁ − x*‖²_{M₀} + ½‖λ₁ − λ*‖²`.
pub fn initial_energy(m0: &Metric, kkt: &KKTPoint, x1: &Vector, lambda1: &Vector) -> Result<f64> {
    Ok(0.5 * m0.seminorm_sq(&(x1 - &kkt.x_star))? + 0.5 * (lambda1 - &kkt.lambda_star).norm_squared())
}

fn require_vectors(trace: &Trace) -> Result<()> {
    if trace.records.iter().any(|r| r.vectors.is_none()) {
        return Err(Error::capability(
            "trace has no iterate vectors; rerun with vector retention enabled",
        ));
    }
    Ok(())
}

/// `(k, Eₖ)` for `k = 1, …, K+1` recomputed from stored iterates.
pub fn energy_series(
    p: &ProblemSpec,
    trace: &Trace,
    kkt: &KKTPoint,
    alpha: f64,
    s: f64,
    metric: &MetricSchedule,
) -> Result<Vec<(usize, f64)>> {
    require_vectors(trace)?;
    let mut out = Vec::with_capacity(trace.records.len() + 1);
    for (i, r) in trace.records.iter().enumerate() {
        let v = r.vectors.as_ref().expect("checked");
        if i == 0 {
            let e1 = energy(p, kkt, alpha, s, metric.at(v.k - 1), v.k, &v.x, &v.derived.x_bar, &v.lambda, &v.derived.lambda_bar)?;
            out.push((v.k, e1));
        }
        let kn = v.k + 1;
        let x_bar = extrapolate(kn, alpha, &v.x_next, &v.x);
        let l_bar = extrapolate(kn, alpha, &v.lambda_next, &v.lambda);
        out.push((kn, energy(p, kkt, alpha, s, metric.at(v.k), kn, &v.x_next, &x_bar, &v.lambda_next, &l_bar)?));
    }
    Ok(out)
}

/// `E^ε_k = Eₖ − Σ_{j≤k} (s(j−1)/(α−1))·⟨x̂ⱼ − x*, εⱼ₋₁⟩` with `ε₀ = 0`.
pub fn perturbed_energy(
    p: &ProblemSpec,
    trace: &Trace,
    kkt: &KKTPoint,
    alpha: f64,
    s: f64,
    metric: &MetricSchedule,
) -> Result<Vec<(usize, f64)>> {
    let base = energy_series(p, trace, kkt, alpha, s, metric)?;
    let mut out = Vec::with_capacity(base.len());
    let mut acc = 0.0;
    for (i, (k, e)) in base.iter().enumerate() {
        if i > 0 {
            let v = trace.records[i - 1].vectors.as_ref().expect("checked");
            let x_bar = extrapolate(*k, alpha, &v.x_next, &v.x);
            let x_hat = dual_anchor(*k, alpha, &x_bar, &v.x_next);
            acc += s * (*k as f64 - 1.0) / (alpha - 1.0) * (x_hat - &kkt.x_star).dot(&v.eps);
        }
        out.push((*k, e - acc));
    }
    Ok(out)
}

/// `C = E₁ + (s/(α−1))·(√(2E₁/(sL_g)) + (2/((α−1)L_g))·S)·S` with `S = Σ j‖εⱼ‖`.
pub fn perturbed_constant(e1: f64, alpha: f64, s: f64, lg: f64, weighted_eps: f64) -> f64 {
    if weighted_eps == 0.0 {
        return e1;
    }
    if !(lg > 0.0) {
        return f64::INFINITY;
    }
    e1 + s / (alpha - 1.0)
        * ((2.0 * e1 / (s * lg)).sqrt() + 2.0 / ((alpha - 1.0) * lg) * weighted_eps)
        * weighted_eps
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateKind {
    EnergyMonotone,
    FeasibilityBound,
    ObjectiveBound,
    SquareSummability,
    RateSlope,
}

/// An evaluated bound. For bound kinds `pass ⇔ observed ≤ predicted·(1+margin)`
/// (plus [`NOISE_FLOOR`]); `predicted`/`observed` are taken at `k_worst`.
/// For the energy kind `observed` is the largest increase and the allowance
/// is `margin·(1+|E₁|)`; for the slope kind `predicted` is the threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub kind: CertificateKind,
    pub predicted: f64,
    pub observed: f64,
    pub margin: f64,
    pub pass: bool,
    pub k_worst: Option<usize>,
}

fn bound_certificate(
    kind: CertificateKind,
    rows: impl Iterator<Item = (usize, f64, f64)>,
    margin: f64,
) -> Certificate {
    let mut worst: Option<(f64, usize, f64, f64)> = None;
    let mut pass = true;
    for (k, observed, predicted) in rows {
        let allowed = predicted * (1.0 + margin) + NOISE_FLOOR;
        pass &= observed <= allowed;
        let ratio = observed / allowed;
        if worst.is_none_or(|w| ratio > w.0) {
            worst = Some((ratio, k, predicted, observed));
        }
    }
    match worst {
        Some((_, k, predicted, observed)) => Certificate {
            kind,
            predicted,
            observed,
            margin,
            pass,
            k_worst: Some(k),
        },
        None => Certificate {
            kind,
            predicted: 0.0,
            observed: 0.0,
            margin,
            pass: true,
            k_worst: None,
        },
    }
}

fn feas_bound(k: usize, e: f64, alpha: f64, s: f64) -> f64 {
    let kf = k as f64;
    4.0 * (alpha - 1.0).powi(2) * (2.0 * e).sqrt() / (s * (kf - 1.0) * (kf + alpha - 3.0))
}

/// Objective bound at `k > 1`.
pub fn objective_bound(k: usize, e: f64, alpha: f64, s: f64, lambda_norm: f64) -> f64 {
    let kf = k as f64;
    (alpha - 1.0).powi(2) * e / (s * (kf * kf - kf)) + feas_bound(k, e, alpha, s) * lambda_norm
}

/// `‖Axₖ − b‖ ≤ 4(α−1)²√(2E)/(s(k−1)(k+α−3))` for every row with `k > 1`.
/// `e` is `E₁` (exact method) or the perturbed constant `C`.
pub fn feasibility_certificate(table: &TraceTable, e: f64, alpha: f64, s: f64, margin: f64) -> Certificate {
    let rows = table
        .k
        .iter()
        .zip(&table.feas)
        .filter(|(k, _)| **k > 1)
        .map(|(&k, &f)| (k, f, feas_bound(k, e, alpha, s)));
    bound_certificate(CertificateKind::FeasibilityBound, rows, margin)
}

/// `|F(xₖ) − F*| ≤ (α−1)²E/(s(k²−k)) + 4(α−1)²√(2E)‖λ*‖/(s(k−1)(k+α−3))`.
pub fn objective_certificate(
    table: &TraceTable,
    e: f64,
    alpha: f64,
    s: f64,
    f_star: f64,
    lambda_norm: f64,
    margin: f64,
) -> Certificate {
    let rows = table
        .k
        .iter()
        .zip(&table.objective)
        .filter(|(k, _)| **k > 1)
        .map(|(&k, &obj)| (k, (obj - f_star).abs(), objective_bound(k, e, alpha, s, lambda_norm)));
    bound_certificate(CertificateKind::ObjectiveBound, rows, margin)
}

/// Largest increase of an energy sequence; passes when it stays within
/// `margin·(1 + |E₁|)`.
pub fn energy_certificate(series: &[(usize, f64)], margin: f64) -> Certificate {
    let scale = 1.0 + series.first().map_or(0.0, |(_, e)| e.abs());
    let mut worst = (f64::NEG_INFINITY, None);
    for w in series.windows(2) {
        let inc = w[1].1 - w[0].1;
        if inc > worst.0 || inc.is_nan() {
            worst = (inc, Some(w[1].0));
        }
    }
    let observed = if worst.1.is_some() { worst.0 } else { 0.0 };
    Certificate {
        kind: CertificateKind::EnergyMonotone,
        predicted: 0.0,
        observed,
        margin,
        pass: observed <= margin * scale,
        k_worst: worst.1,
    }
}

/// Partial sums of `k²·(‖xₖ₊₁ − x̄ₖ‖²_{Mₖ} + ‖λₖ₊₁ − λ̄ₖ‖²)` from the
/// `step_sq` column (row `k+1` holds step `k`).
pub fn square_partial_sums(table: &TraceTable) -> Vec<(usize, f64)> {
    let mut acc = 0.0;
    table
        .k
        .iter()
        .zip(&table.step_sq)
        .filter_map(|(&row, sq)| {
            let sq = (*sq)?;
            let k = row.saturating_sub(1) as f64;
            acc += k * k * sq;
            Some((row - 1, acc))
        })
        .collect()
}

/// Passes when the last-quartile mean increment does not exceed the
/// first-quartile mean and the total stays below `2(α−1)²E`.
pub fn square_summability(table: &TraceTable, e: f64, alpha: f64, margin: f64) -> Certificate {
    let sums = square_partial_sums(table);
    let predicted = 2.0 * (alpha - 1.0).powi(2) * e;
    let observed = sums.last().map_or(0.0, |s| s.1);
    let incs: Vec<f64> = sums
        .iter()
        .scan(0.0, |prev, &(_, s)| {
            let d = s - *prev;
            *prev = s;
            Some(d)
        })
        .collect();
    let q = (incs.len() / 4).max(1);
    let decays = if incs.len() < 2 {
        true
    } else {
        let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
        mean(&incs[incs.len() - q..]) <= mean(&incs[..q]) + NOISE_FLOOR
    };
    Certificate {
        kind: CertificateKind::SquareSummability,
        predicted,
        observed,
        margin,
        pass: decays && observed <= predicted * (1.0 + margin) + NOISE_FLOOR,
        k_worst: sums.last().map(|s| s.0),
    }
}

/// Least-squares slope of `log(value)` against `log(k)` over
/// `k ∈ [k_min, k_max]`, skipping values below `1e-14`.
pub fn rate_slope(series: &[(usize, f64)], k_min: usize, k_max: usize) -> Result<f64> {
    let pts: Vec<(f64, f64)> = series
        .iter()
        .filter(|(k, v)| *k >= k_min && *k <= k_max && *k > 0 && *v >= 1e-14 && v.is_finite())
        .map(|(k, v)| ((*k as f64).ln(), v.ln()))
        .collect();
    if pts.len() < 5 {
        return Err(Error::InsufficientData(format!(
            "rate slope needs at least 5 points in [{k_min}, {k_max}], found {}",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData("rate slope needs distinct k values".into()));
    }
    Ok(sxy / sxx)
}

pub fn rate_slope_certificate(series: &[(usize, f64)], k_min: usize, k_max: usize, threshold: f64) -> Result<Certificate> {
    let slope = rate_slope(series, k_min, k_max)?;
    Ok(Certificate {
        kind: CertificateKind::RateSlope,
        predicted: threshold,
        observed: slope,
        margin: 0.0,
        pass: slope <= threshold,
        k_worst: None,
    })
}

/// Inputs shared by the full certificate set.
#[derive(Debug, Clone)]
pub struct CertifyInputs {
    pub alpha: f64,
    pub s: f64,
    /// `E₁`, or `C` for the linearized method.
    pub e: f64,
    pub e1: f64,
    pub f_star: f64,
    pub lambda_norm: f64,
    pub margin: f64,
    pub energy_tol: f64,
    pub slope_window: (usize, usize),
    pub slope_threshold: f64,
}

/// All five certificates for a scalar trace.
pub fn certify_table(table: &TraceTable, inp: &CertifyInputs) -> Result<Vec<Certificate>> {
    if table.is_empty() {
        return Err(Error::InsufficientData("trace has no rows".into()));
    }
    let mut series = vec![(1usize, inp.e1)];
    for (k, e) in table.k.iter().zip(&table.energy) {
        let e = e.ok_or_else(|| Error::InsufficientData(format!("energy column empty at k={k}")))?;
        series.push((*k, e));
    }
    let feas: Vec<(usize, f64)> = table.k.iter().copied().zip(table.feas.iter().copied()).collect();
    let (lo, hi) = inp.slope_window;
    Ok(vec![
        energy_certificate(&series, inp.energy_tol),
        feasibility_certificate(table, inp.e, inp.alpha, inp.s, inp.margin),
        objective_certificate(table, inp.e, inp.alpha, inp.s, inp.f_star, inp.lambda_norm, inp.margin),
        square_summability(table, inp.e, inp.alpha, inp.margin),
        rate_slope_certificate(&feas, lo, hi, inp.slope_threshold)?,
    ])
}

/// `Σ j‖εⱼ‖` from the `eps_norm` column (row `j+1` holds `εⱼ`).
pub fn weighted_eps_sum(table: &TraceTable) -> f64 {
    table
        .k
        .iter()
        .zip(&table.eps_norm)
        .map(|(&row, &e)| row.saturating_sub(1) as f64 * e)
        .sum()
}

/// `E₁ − E_K` minus the telescoped step terms; nonnegative up to roundoff.
pub fn telescoping_gap(energies: &[(usize, f64)], table: &TraceTable, alpha: f64) -> f64 {
    let (Some(first), Some(last)) = (energies.first(), energies.last()) else {
        return 0.0;
    };
    let mut sum = 0.0;
    for (&row, sq) in table.k.iter().zip(&table.step_sq) {
        if row > last.0 {
            break;
        }
        if let Some(sq) = sq {
            let k = (row - 1) as f64;
            sum += (k + alpha - 2.0).powi(2) / (2.0 * (alpha - 1.0).powi(2)) * sq;
        }
    }
    (first.1 - last.1) - sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function::FunctionDescriptor;
    use crate::Matrix;

    fn table(rows: &[(usize, f64)]) -> TraceTable {
        TraceTable {
            k: rows.iter().map(|r| r.0).collect(),
            objective: rows.iter().map(|_| 0.0).collect(),
            obj_gap: rows.iter().map(|_| None).collect(),
            feas: rows.iter().map(|r| r.1).collect(),
            energy: rows.iter().map(|_| Some(0.0)).collect(),
            eps_norm: rows.iter().map(|_| 0.0).collect(),
            step_sq: rows.iter().map(|_| Some(0.0)).collect(),
        }
    }

    #[test]
    fn energy_at_start() {
        let p = ProblemSpec::new(
            FunctionDescriptor::l1(),
            None,
            Matrix::from_row_slice(1, 2, &[1.0, 1.0]),
            Vector::from_vec(vec![1.0]),
        )
        .unwrap();
        let kkt = KKTPoint {
            x_star: Vector::from_vec(vec![1.0, 0.0]),
            lambda_star: Vector::from_vec(vec![-1.0]),
        };
        let m = Metric::ScaledIdentity(2.0);
        let e = energy(&p, &kkt, 3.0, 1.0, &m, 1, &kkt.x_star, &kkt.x_star, &kkt.lambda_star, &kkt.lambda_star).unwrap();
        assert_eq!(e, 0.0);
        let x1 = Vector::from_vec(vec![0.0, 0.0]);
        let l1 = Vector::from_vec(vec![1.0]);
        let e = energy(&p, &kkt, 3.0, 1.0, &m, 1, &x1, &x1, &l1, &l1).unwrap();
        assert_eq!(e, initial_energy(&m, &kkt, &x1, &l1).unwrap());
        assert_eq!(e, 0.5 * 2.0 + 0.5 * 4.0);
    }

    #[test]
    fn energy_is_infinite_off_domain() {
        let p = ProblemSpec::new(
            FunctionDescriptor::nonneg_indicator(),
            None,
            Matrix::from_row_slice(1, 2, &[1.0, 1.0]),
            Vector::from_vec(vec![1.0]),
        )
        .unwrap();
        let kkt = KKTPoint {
            x_star: Vector::from_vec(vec![0.5, 0.5]),
            lambda_star: Vector::from_vec(vec![0.0]),
        };
        let x = Vector::from_vec(vec![-1.0, 2.0]);
        let e = energy(&p, &kkt, 3.0, 1.0, &Metric::Zero, 3, &x, &x, &kkt.lambda_star, &kkt.lambda_star).unwrap();
        assert!(e.is_infinite());
    }

    #[test]
    fn zero_energy_bounds_pass_on_zero_trace() {
        let t = table(&[(2, 0.0), (3, 0.0), (4, 0.0)]);
        assert!(feasibility_certificate(&t, 0.0, 3.0, 1.0, 1e-6).pass);
        assert!(objective_certificate(&t, 0.0, 3.0, 1.0, 0.0, 0.0, 1e-6).pass);
        assert_eq!(square_summability(&t, 0.0, 3.0, 1e-6).observed, 0.0);
    }

    #[test]
    fn feasibility_violation_is_reported() {
        let t = table(&[(2, 1.0), (3, 100.0)]);
        let c = feasibility_certificate(&t, 0.5, 3.0, 1.0, 1e-6);
        assert!(!c.pass);
        assert_eq!(c.k_worst, Some(3));
        // 4·4·1/(1·2·3)
        assert!((c.predicted - 16.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn objective_bound_at_two() {
        let (e, a, s, l) = (0.7, 5.0, 2.0, 1.3);
        let want = (a - 1.0f64).powi(2) * e / (2.0 * s) + 4.0 * (a - 1.0f64).powi(2) * (2.0 * e).sqrt() * l / (s * (a - 1.0));
        assert!((objective_bound(2, e, a, s, l) - want).abs() <= 1e-12 * want);
    }

    #[test]
    fn single_step_partial_sum() {
        let mut t = table(&[(2, 0.0)]);
        t.step_sq[0] = Some(0.25);
        let sums = square_partial_sums(&t);
        assert_eq!(sums, vec![(1, 0.25)]);
        let mut t = table(&[(2, 0.0), (3, 0.0)]);
        t.step_sq = vec![Some(1.0), Some(1.0)];
        assert_eq!(square_partial_sums(&t), vec![(1, 1.0), (2, 5.0)]);
    }

    #[test]
    fn slope_of_power_laws() {
        let s: Vec<(usize, f64)> = (1..200).map(|k| (k, 1.0 / (k * k) as f64)).collect();
        assert!((rate_slope(&s, 10, 150).unwrap() + 2.0).abs() < 1e-9);
        let c: Vec<(usize, f64)> = (1..50).map(|k| (k, 3.0)).collect();
        assert!(rate_slope(&c, 1, 50).unwrap().abs() < 1e-12);
        assert!(matches!(rate_slope(&c, 1, 4), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn slope_ignores_noise_floor() {
        let mut s: Vec<(usize, f64)> = (1..100).map(|k| (k, 1.0 / (k as f64).powi(3))).collect();
        s.extend((100..200).map(|k| (k, 0.0)));
        assert!((rate_slope(&s, 5, 200).unwrap() + 3.0).abs() < 1e-9);
    }

    #[test]
    fn energy_certificate_catches_increase() {
        let c = energy_certificate(&[(1, 1.0), (2, 0.5), (3, 0.6)], 1e-8);
        assert!(!c.pass);
        assert_eq!(c.k_worst, Some(3));
        assert!(energy_certificate(&[(1, 1.0), (2, 0.5), (3, 0.5)], 1e-8).pass);
    }

    #[test]
    fn perturbed_constant_reduces_to_e1() {
        assert_eq!(perturbed_constant(2.0, 3.0, 1.0, 1.0, 0.0), 2.0);
        let c = perturbed_constant(2.0, 3.0, 1.0, 4.0, 0.5);
        let want = 2.0 + 0.5 * (1.0 + 2.0 / 8.0 * 0.5) * 0.5;
        assert!((c - want).abs() < 1e-14);
    }

    #[test]
    fn certificate_json_fields() {
        let c = feasibility_certificate(&table(&[(2, 0.1)]), 1.0, 3.0, 1.0, 1e-6);
        let v: serde_json::Value = serde_json::to_value(&c).unwrap();
        for key in ["kind", "predicted", "observed", "margin", "pass", "k_worst"] {
            assert!(v.get(key).is_some());
        }
        assert_eq!(v["kind"], "feasibility_bound");
    }
}
