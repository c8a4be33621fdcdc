//! Tail diagnostics of a field: the tail distribution
//! `β(n) = (Σ_{|x|≥n} |f(x)|²)^{1/2}` and least-squares rate fits.
//!
//! The exponential rate `ν̂` is the slope of `-ln β(n)` against `n`; the
//! super-exponential rate `ν̂**` is the slope against `(n+1)ln(n+1)`. Both
//! fits use the window from the first `n` with `β(n) < β(0)/10` to the last
//! `n` with `β(n) > 100·floor`.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::lattice::LatticeField;
use crate::{Error, Result};

/// Minimum number of points in a fit window.
pub const MIN_WINDOW: usize = 8;

/// Default noise floor of tail amplitudes.
pub const DEFAULT_FLOOR: f64 = 1e-13;

/// `β(0), …, β(M+1)` with `β(M+1) = 0`.
pub fn tail_distribution(f: &LatticeField) -> Vec<f64> {
    let m = f.radius();
    let mut sq = alloc::vec![0.0; m + 2];
    let mut acc = 0.0;
    for n in (0..=m).rev() {
        let x = n as i64;
        acc += f.get(x).norm_sqr();
        if n > 0 {
            acc += f.get(-x).norm_sqr();
        }
        sq[n] = acc;
    }
    sq.iter().map(|s| s.sqrt()).collect()
}

/// Inclusive fit window `[n_lo, n_hi]`.
pub fn fit_window(beta: &[f64], floor: f64) -> Result<(usize, usize)> {
    let b0 = beta.first().copied().unwrap_or(0.0);
    let n_lo = beta.iter().position(|&b| b < 0.1 * b0);
    let n_hi = beta.iter().rposition(|&b| b > 100.0 * floor);
    match (n_lo, n_hi) {
        (Some(lo), Some(hi)) if hi >= lo && hi - lo + 1 >= MIN_WINDOW => Ok((lo, hi)),
        (Some(lo), Some(hi)) if hi >= lo => Err(Error::WindowTooSmall { points: hi - lo + 1, required: MIN_WINDOW }),
        _ => Err(Error::WindowTooSmall { points: 0, required: MIN_WINDOW }),
    }
}

/// Least-squares line `y = a + b x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub intercept: f64,
    pub slope: f64,
    /// Root-mean-square deviation from the line.
    pub rms: f64,
}

pub fn line_fit(xs: &[f64], ys: &[f64]) -> Result<LineFit> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return Err(Error::WindowTooSmall { points: n, required: 2 });
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("degenerate regressor"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    Ok(LineFit { intercept, slope, rms: (ss / n as f64).sqrt() })
}

fn regress(beta: &[f64], window: (usize, usize), regressor: impl Fn(f64) -> f64) -> Result<LineFit> {
    let (lo, hi) = window;
    let xs: Vec<f64> = (lo..=hi).map(|n| regressor(n as f64)).collect();
    let ys: Vec<f64> = beta[lo..=hi].iter().map(|b| -b.ln()).collect();
    line_fit(&xs, &ys)
}

/// Slope of `-ln β(n)` against `n`.
pub fn fit_exp_rate(beta: &[f64], window: (usize, usize)) -> Result<LineFit> {
    regress(beta, window, |n| n)
}

/// Slope of `-ln β(n)` against `(n+1)ln(n+1)`.
pub fn fit_superexp_rate(beta: &[f64], window: (usize, usize)) -> Result<LineFit> {
    regress(beta, window, |n| (n + 1.0) * (n + 1.0).ln())
}

/// `acosh(|ω|/(2d_av) + 1)`, the rate solving `2d_av(cosh ν - 1) = |ω|`.
pub fn heuristic_rate(omega: f64, d_av: f64) -> Result<f64> {
    if !(omega < 0.0) || !(d_av > 0.0) {
        return Err(Error::invalid("heuristic rate needs omega < 0 and d_av > 0"));
    }
    Ok((omega.abs() / (2.0 * d_av) + 1.0).acosh())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TailStats {
    pub beta: Vec<f64>,
    pub window: (usize, usize),
    pub floor: f64,
    pub exp_fit: LineFit,
    pub superexp_fit: LineFit,
}

impl TailStats {
    /// `ν̂`.
    pub fn nu_hat(&self) -> f64 {
        self.exp_fit.slope
    }

    /// `ν̂**`.
    pub fn nu2_hat(&self) -> f64 {
        self.superexp_fit.slope
    }
}

/// Noise floor for a field: `max(DEFAULT_FLOOR, leakage)`.
pub fn noise_floor(leakage: f64) -> f64 {
    DEFAULT_FLOOR.max(leakage)
}

/// `β`, the window and both fits.
pub fn analyze(f: &LatticeField, floor: f64) -> Result<TailStats> {
    let beta = tail_distribution(f);
    analyze_beta(beta, floor)
}

pub fn analyze_beta(beta: Vec<f64>, floor: f64) -> Result<TailStats> {
    let window = fit_window(&beta, floor)?;
    let exp_fit = fit_exp_rate(&beta, window)?;
    let superexp_fit = fit_superexp_rate(&beta, window)?;
    Ok(TailStats { beta, window, floor, exp_fit, superexp_fit })
}

/// `β(n+m) / (β(n)^θ + (m+1)^{-α(m+1)})` maximized over the index range.
#[derive(Debug, Clone, PartialEq)]
pub struct SelfConsistency {
    pub range: usize,
    pub c_star: f64,
    pub c_star_doubled: f64,
    /// `C*` grew by at most 5% when the range was doubled.
    pub stable: bool,
}

/// `C*` over `n, m ≥ 0` with `n + m ≤ range` and `β(n+m) > floor`.
pub fn self_consistency_constant(beta: &[f64], theta: f64, alpha: f64, range: usize, floor: f64) -> f64 {
    let mut c: f64 = 0.0;
    for n in 0..=range {
        for m in 0..=(range - n) {
            let Some(&num) = beta.get(n + m) else { continue };
            if num <= floor {
                continue;
            }
            let m1 = m as f64 + 1.0;
            let den = beta[n].powf(theta) + (-alpha * m1 * m1.ln()).exp();
            c = c.max(num / den);
        }
    }
    c
}

/// `C*` on the range up to half the last index above the floor, and on the
/// doubled range.
pub fn self_consistency_check(beta: &[f64], theta: f64, alpha: f64, floor: f64) -> Result<SelfConsistency> {
    if !(theta > 1.0) || !(alpha > 0.0 && alpha < 0.5) {
        return Err(Error::invalid("need theta > 1 and 0 < alpha < 1/2"));
    }
    let last = beta.iter().rposition(|&b| b > floor).unwrap_or(0);
    let range = (last / 2).max(1);
    let c_star = self_consistency_constant(beta, theta, alpha, range, floor);
    let c_star_doubled = self_consistency_constant(beta, theta, alpha, 2 * range, floor);
    Ok(SelfConsistency { range, c_star, c_star_doubled, stable: c_star_doubled <= 1.05 * c_star })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::ExpProfile;

    #[test]
    fn beta_basics() {
        let f = LatticeField::delta(5, 0, -1.5);
        let b = tail_distribution(&f);
        assert_eq!(b[0], 1.5);
        assert!(b[1..].iter().all(|&v| v == 0.0));
        assert_eq!(b.len(), 7);
    }

    #[test]
    fn beta_of_exponential_profile() {
        // β(n)² = 2A² e^{-2νn}/(1 - e^{-2ν}) for n ≥ 1
        let (a, nu) = (1.0, 0.7);
        let f = ExpProfile::new(a, nu).unwrap().field(60);
        let b = tail_distribution(&f);
        let q = (-2.0 * nu).exp();
        for n in 1..20 {
            let exact = (2.0 * a * a * q.powi(n as i32) / (1.0 - q)).sqrt();
            assert!((b[n] - exact).abs() < 1e-10 * exact);
        }
        let stats = analyze(&f, 1e-13).unwrap();
        assert!((stats.nu_hat() - nu).abs() < 1e-10);
    }

    #[test]
    fn heuristic_identity() {
        let r = heuristic_rate(-2.0, 1.0).unwrap();
        assert!((r - 2f64.acosh()).abs() < 1e-15);
        assert!((2.0 * 0.3 * (heuristic_rate(-0.7, 0.3).unwrap().cosh() - 1.0) - 0.7).abs() < 1e-12);
        assert!(heuristic_rate(0.5, 1.0).is_err());
    }

    #[test]
    fn superexp_fit_exact_on_weight_family() {
        let beta: Vec<f64> = (0..20).map(|n| ((n as f64 + 1.0) * (n as f64 + 1.0).ln() * -0.9).exp()).collect();
        let fit = fit_superexp_rate(&beta, (2, 15)).unwrap();
        assert!((fit.slope - 0.9).abs() < 1e-10);
    }

    #[test]
    fn window_rejects_short_tails() {
        let beta = [1.0, 0.05, 1e-20, 0.0];
        assert!(matches!(fit_window(&beta, 1e-13), Err(Error::WindowTooSmall { .. })));
    }

    #[test]
    fn self_consistency_single_site() {
        let b = tail_distribution(&LatticeField::delta(6, 0, 2.0));
        let c = self_consistency_check(&b, 3.0, 0.25, 1e-13).unwrap();
        assert!((c.c_star - 2.0 / 9.0).abs() < 1e-15);
        assert!(c.stable);
    }
}
