use serde::{Deserialize, Serialize};

use crate::error::{check_len, Result};
use crate::problem::ReferenceSolution;
use crate::{Matrix, Vector};

/// Reported in place of an infinite SNR at exact recovery.
pub const SNR_CAP: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecoveryMetrics {
    pub res: f64,
    pub rel: Option<f64>,
    pub snr: Option<f64>,
}

/// `Res = ‖Ax − b‖`, `Rel = ‖x − x*‖/‖x*‖`,
/// `SNR = 10·log₁₀(‖x* − mean(x*)‖² / ‖x − x*‖²)` in decibels.
pub fn metrics(x: &Vector, reference: Option<&ReferenceSolution>, a: &Matrix, b: &Vector) -> Result<RecoveryMetrics> {
    check_len("metrics x", a.ncols(), x.len())?;
    check_len("metrics b", a.nrows(), b.len())?;
    let res = (a * x - b).norm();
    let Some(r) = reference else {
        return Ok(RecoveryMetrics { res, rel: None, snr: None });
    };
    check_len("metrics x*", x.len(), r.x_star.len())?;
    let err = (x - &r.x_star).norm();
    let scale = r.x_star.norm();
    let rel = if scale > 0.0 { err / scale } else { err };
    let snr = if err == 0.0 {
        SNR_CAP
    } else {
        let mean = r.x_star.mean();
        let signal = r.x_star.map(|v| v - mean).norm_squared();
        (10.0 * (signal / (err * err)).log10()).min(SNR_CAP)
    };
    Ok(RecoveryMetrics {
        res,
        rel: Some(rel),
        snr: Some(snr),
    })
}
