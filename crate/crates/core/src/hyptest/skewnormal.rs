//! Skew-normal density, maximum-likelihood fitting and mode search.

use std::f64::consts::{LN_2, PI};

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use super::optim::nelder_mead;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

fn ln_phi(z: f64) -> f64 {
    -0.5 * z * z - LN_SQRT_2PI
}

/// Log of the standard normal CDF, stable far into the lower tail.
pub fn ln_norm_cdf(x: f64) -> f64 {
    if x > -37.0 {
        (0.5 * erfc(-x / std::f64::consts::SQRT_2)).ln()
    } else {
        let x2 = x * x;
        ln_phi(x) - (-x).ln() + (1.0 - 1.0 / x2 + 3.0 / (x2 * x2)).ln()
    }
}

pub fn ln_pdf(x: f64, xi: f64, omega: f64, beta: f64) -> f64 {
    let z = (x - xi) / omega;
    LN_2 - omega.ln() + ln_phi(z) + ln_norm_cdf(beta * z)
}

pub fn pdf(x: f64, xi: f64, omega: f64, beta: f64) -> f64 {
    ln_pdf(x, xi, omega, beta).exp()
}

pub fn nll(data: &[f64], xi: f64, omega: f64, beta: f64) -> f64 {
    -data.iter().map(|x| ln_pdf(*x, xi, omega, beta)).sum::<f64>()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SkewFit {
    pub xi: f64,
    pub omega: f64,
    pub beta: f64,
    pub nll: f64,
    /// All samples were equal; the fit is a point mass at `xi`.
    pub degenerate: bool,
}

fn mean_sd(data: &[f64]) -> (f64, f64) {
    let n = data.len() as f64;
    let m = data.iter().sum::<f64>() / n;
    let v = data.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
    (m, v.sqrt())
}

/// Method-of-moments estimate, with the sample skewness pulled inside the
/// family's attainable range.
pub fn moments_estimate(data: &[f64]) -> (f64, f64, f64) {
    let (m, s) = mean_sd(data);
    let n = data.len() as f64;
    let g1 = data.iter().map(|x| ((x - m) / s).powi(3)).sum::<f64>() / n;
    let max_g = 0.99 * 0.5 * (4.0 - PI) * (2.0 / (PI - 2.0)).powf(1.5);
    let g = g1.clamp(-max_g, max_g);
    let r = (2.0 * g.abs() / (4.0 - PI)).powf(2.0 / 3.0);
    let delta = g.signum() * (PI / 2.0 * r / (1.0 + r)).sqrt();
    let delta = delta.clamp(-0.995, 0.995);
    let beta = delta / (1.0 - delta * delta).sqrt();
    let omega = s / (1.0 - 2.0 * delta * delta / PI).sqrt();
    let xi = m - omega * delta * (2.0 / PI).sqrt();
    (xi, omega, beta)
}

/// Minimises the negative log-likelihood over `(xi, log omega, beta)`,
/// started from the moment estimate and the normal fit. With `beta_clamp`
/// the shape is confined to `[-c, c]`.
pub fn fit_skew_normal(data: &[f64], beta_clamp: Option<f64>) -> SkewFit {
    let first = data.first().copied().unwrap_or(0.0);
    if data.len() < 2 || data.iter().all(|x| *x == first) {
        return SkewFit { xi: first, omega: 0.0, beta: 0.0, nll: f64::NEG_INFINITY, degenerate: true };
    }
    let clamp = |b: f64| match beta_clamp {
        Some(c) => b.clamp(-c, c),
        None => b,
    };
    let objective = |p: &[f64]| nll(data, p[0], p[1].exp(), clamp(p[2]));
    let (m, s) = mean_sd(data);
    let normal = SkewFit { xi: m, omega: s, beta: 0.0, nll: nll(data, m, s, 0.0), degenerate: false };
    let (mx, mo, mb) = moments_estimate(data);

    let mut best = normal;
    let consider = |best: &mut SkewFit, p: &[f64], v: f64| {
        if v < best.nll {
            *best = SkewFit { xi: p[0], omega: p[1].exp(), beta: clamp(p[2]), nll: v, degenerate: false };
        }
    };
    for start in [[mx, mo.ln(), clamp(mb)], [m, s.ln(), 0.0]] {
        let step = [0.5 * s, 0.3, 1.0];
        let (p, v) = nelder_mead(objective, &start, &step, 200);
        // One restart around the returned point.
        let (p2, v2) = nelder_mead(objective, &p, &step, 200);
        consider(&mut best, &p, v);
        consider(&mut best, &p2, v2);
    }
    best
}

/// Location of the density maximum.
pub fn skew_normal_mode(xi: f64, omega: f64, beta: f64) -> f64 {
    if beta == 0.0 {
        return xi;
    }
    let g = |x: f64| ln_pdf(x, xi, omega, beta);
    let (mut a, mut b) = (xi - 3.0 * omega, xi + 3.0 * omega);
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut gc, mut gd) = (g(c), g(d));
    while b - a > 1e-12 * omega.max(1e-300) {
        if gc > gd {
            b = d;
            d = c;
            gd = gc;
            c = b - r * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + r * (b - a);
            gd = g(d);
        }
        if (b - a) < f64::EPSILON * (a.abs() + b.abs()) {
            break;
        }
    }
    0.5 * (a + b)
}

/// Density ratio of `q` to the mode, in `[0, 1]`.
pub fn p_value(q: f64, fit: &SkewFit, mode: f64) -> f64 {
    if fit.degenerate {
        return if (q - fit.xi).abs() <= 1e-12 { 1.0 } else { 0.0 };
    }
    let r = (ln_pdf(q, fit.xi, fit.omega, fit.beta) - ln_pdf(mode, fit.xi, fit.omega, fit.beta)).exp();
    r.clamp(0.0, 1.0)
}
