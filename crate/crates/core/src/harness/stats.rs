//! Paired t-tests for comparing metrics between prior methods.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairedT {
    pub n: usize,
    pub mean_diff: f64,
    pub t: f64,
    pub df: f64,
    pub p_two_sided: f64,
    /// One-sided p-value for mean(a - b) > 0.
    pub p_greater: f64,
}

impl PairedT {
    pub fn significant(&self, level: f64) -> bool {
        self.p_two_sided < level
    }
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Paired t-test of `a` against `b`. Identical samples give t = 0, p = 1.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<PairedT> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(Error::Domain("paired t-test needs two equal samples of size >= 2".into()));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let n = d.len();
    let m = mean(&d);
    let var = d.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64;
    let df = (n - 1) as f64;
    if var == 0.0 {
        let (p2, pg) = if m == 0.0 { (1.0, 0.5) } else if m > 0.0 { (0.0, 0.0) } else { (0.0, 1.0) };
        let t = if m == 0.0 { 0.0 } else { m.signum() * f64::INFINITY };
        return Ok(PairedT { n, mean_diff: m, t, df, p_two_sided: p2, p_greater: pg });
    }
    let t = m / (var / n as f64).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| Error::Domain(e.to_string()))?;
    let p_greater = dist.sf(t);
    let p_two_sided = (2.0 * dist.sf(t.abs())).min(1.0);
    Ok(PairedT { n, mean_diff: m, t, df, p_two_sided, p_greater })
}
