//! Subordinate functions: from a sampled non-decreasing `g` with
//! `g(ρ) ≤ M(Lρ) + ln C_L` for every `L`, build `ε` with `ε(ρ)/ρ → 0` and
//! `g(ρ) ≤ M(ε(ρ)) + ln C′`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assoc::AssociatedFunction;
use crate::error::{invalid, Result};
use crate::grid::halving;
use crate::numerics::next_up;

/// Piecewise-linear strictly increasing majorant of sampled data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Majorant {
    pub rho: Vec<f64>,
    pub f: Vec<f64>,
    pub delta: f64,
}

impl Majorant {
    /// Linear interpolation between samples; clamps outside the grid.
    pub fn eval(&self, rho: f64) -> f64 {
        interpolate(&self.rho, &self.f, rho)
    }
}

fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    if x <= xs[0] {
        return ys[0];
    }
    let i = xs.partition_point(|&t| t < x);
    if i >= xs.len() {
        return ys[ys.len() - 1];
    }
    let (x0, x1) = (xs[i - 1], xs[i]);
    let t = (x - x0) / (x1 - x0);
    ys[i - 1] + t * (ys[i] - ys[i - 1])
}

fn validate_samples(rho: &[f64], g: &[f64]) -> Result<()> {
    if rho.len() != g.len() || rho.len() < 2 {
        return Err(invalid("g", "need at least two (rho, g) samples of equal length"));
    }
    if rho[0] < 0.0 || rho.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("rho", "samples must be non-negative and strictly increasing"));
    }
    if let Some(i) = g.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(invalid("g", format!("g({}) = {} is not a non-negative number", rho[i], g[i])));
    }
    if let Some(i) = g.windows(2).position(|w| w[1] < w[0]) {
        return Err(invalid("g", format!("decreases between rho = {} and {}", rho[i], rho[i + 1])));
    }
    Ok(())
}

/// `f = g + δρ/(1+ρ)` with `δ = 1e-9·max(max g, 1)`, nudged upward wherever
/// the perturbation is lost to rounding so that `f` is strictly increasing.
pub fn majorize(rho: &[f64], g: &[f64]) -> Result<Majorant> {
    validate_samples(rho, g)?;
    let gmax = g.iter().copied().fold(0.0, f64::max);
    let delta = 1e-9 * gmax.max(1.0);
    let mut f: Vec<f64> = rho.iter().zip(g).map(|(r, v)| v + delta * r / (1.0 + r)).collect();
    for i in 1..f.len() {
        if f[i] <= f[i - 1] {
            f[i] = next_up(f[i - 1]);
        }
    }
    Ok(Majorant { rho: rho.to_vec(), f, delta })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisRow {
    #[serde(rename = "L")]
    pub l: f64,
    /// `max (g(ρ) − M(Lρ))` over the samples with `Lρ` in range.
    pub ln_c: f64,
    pub points_in_range: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubordinateFunction {
    pub rho1: f64,
    /// Slope of the linear piece on `[0, ρ_1)`.
    pub slope: f64,
    pub rho: Vec<f64>,
    pub eps: Vec<f64>,
    pub ln_c_prime: f64,
    #[serde(rename = "Cprime")]
    pub c_prime: f64,
    /// Bounded input: `ε(ρ) = m_1 √ρ` and `C′ = e^{max g}`.
    pub trivial: bool,
    pub majorant: Option<Majorant>,
    pub hypothesis: Vec<HypothesisRow>,
    pub note: String,
}

impl SubordinateFunction {
    /// `ε(ρ)`: linear below `ρ_1`, tabulated on the grid, interpolated between.
    pub fn eval(&self, rho: f64) -> f64 {
        if self.trivial {
            return self.slope * rho.max(0.0).sqrt();
        }
        if rho < self.rho1 {
            return self.slope * rho;
        }
        interpolate(&self.rho, &self.eps, rho)
    }

    pub fn ratios(&self) -> Vec<f64> {
        self.rho.iter().zip(&self.eps).map(|(r, e)| if *r > 0.0 { e / r } else { f64::NAN }).collect()
    }
}

/// Flat tail: the last quartile rises by at most `1e-9·max(1, max g)`.
fn looks_bounded(g: &[f64]) -> bool {
    let n = g.len();
    let start = n - n.div_ceil(4);
    let top = g[n - 1];
    top - g[start.min(n - 1)] <= 1e-9 * top.max(1.0)
}

fn hypothesis_table(rho: &[f64], g: &[f64], af: &AssociatedFunction) -> Result<Vec<HypothesisRow>> {
    halving(10)
        .into_par_iter()
        .map(|l| {
            let mut ln_c = f64::NEG_INFINITY;
            let mut n = 0;
            for (r, v) in rho.iter().zip(g) {
                let arg = l * r;
                if arg > af.max_rho() {
                    continue;
                }
                ln_c = ln_c.max(v - af.eval_fast(arg)?);
                n += 1;
            }
            Ok(HypothesisRow { l, ln_c, points_in_range: n })
        })
        .collect()
}

/// Smallest `ln C′ ≥ 0` with `g_i ≤ M(ε_i) + ln C′` under exact comparison.
fn fit_constant(g: &[f64], m_eps: &[f64]) -> f64 {
    let mut ln_c = g.iter().zip(m_eps).map(|(a, b)| a - b).fold(0.0, f64::max);
    while g.iter().zip(m_eps).any(|(a, b)| *a > b + ln_c) {
        ln_c = next_up(ln_c);
    }
    ln_c
}

pub fn build_subordinate(rho: &[f64], g: &[f64], af: &AssociatedFunction) -> Result<SubordinateFunction> {
    validate_samples(rho, g)?;
    let hypothesis = hypothesis_table(rho, g, af)?;
    let m1 = af.m1();

    if looks_bounded(g) {
        let gmax = g.iter().copied().fold(0.0, f64::max);
        let eps: Vec<f64> = rho.iter().map(|r| m1 * r.sqrt()).collect();
        let m_eps = eps.iter().map(|&e| af.eval(e.min(af.max_rho()))).collect::<Result<Vec<_>>>()?;
        let ln_c = fit_constant(g, &m_eps).max(gmax);
        return Ok(SubordinateFunction {
            rho1: rho[0],
            slope: m1,
            rho: rho.to_vec(),
            eps,
            ln_c_prime: ln_c,
            c_prime: ln_c.exp(),
            trivial: true,
            majorant: None,
            hypothesis,
            note: format!("bounded input: eps(rho) = {m1}*sqrt(rho), C' = e^(max g)"),
        });
    }

    let maj = majorize(rho, g)?;
    let i1 = maj
        .f
        .iter()
        .position(|&v| v > 0.0)
        .ok_or_else(|| invalid("g", "majorant never becomes positive"))?;
    let mut eps = vec![0.0; rho.len()];
    let tail: Vec<f64> = maj.f[i1..].par_iter().map(|&v| af.inverse(v)).collect::<Result<_>>()?;
    eps[i1..].copy_from_slice(&tail);
    for i in i1 + 1..eps.len() {
        if eps[i] <= eps[i - 1] {
            eps[i] = next_up(eps[i - 1]);
        }
    }
    let rho1 = rho[i1];
    let slope = eps[i1] / rho1;
    for i in 0..i1 {
        eps[i] = slope * rho[i];
    }
    let m_eps = eps.par_iter().map(|&e| af.eval(e.min(af.max_rho()))).collect::<Result<Vec<_>>>()?;
    let ln_c = fit_constant(g, &m_eps);
    Ok(SubordinateFunction {
        rho1,
        slope,
        rho: rho.to_vec(),
        eps,
        ln_c_prime: ln_c,
        c_prime: ln_c.exp(),
        trivial: false,
        majorant: Some(maj),
        hypothesis,
        note: String::new(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SublinearityReport {
    pub witnessed: bool,
    pub first_decade_min: f64,
    pub last_decade_max: f64,
    pub threshold: f64,
    pub trace: Vec<(f64, f64)>,
}

/// `ε(ρ)/ρ` over the last decade of the grid must sit below both its values
/// over the first decade and `threshold`.
pub fn check_sublinearity(rho: &[f64], eps: &[f64], threshold: f64) -> Result<SublinearityReport> {
    if rho.len() != eps.len() || rho.is_empty() {
        return Err(invalid("eps", "grid and values must be non-empty and equal length"));
    }
    let trace: Vec<(f64, f64)> = rho.iter().zip(eps).filter(|(r, _)| **r > 0.0).map(|(r, e)| (*r, e / r)).collect();
    if trace.len() < 2 {
        return Err(invalid("rho", "need two positive grid points"));
    }
    let lo = trace[0].0;
    let hi = trace[trace.len() - 1].0;
    let first_decade_min = trace
        .iter()
        .filter(|(r, _)| *r <= 10.0 * lo)
        .map(|t| t.1)
        .fold(f64::INFINITY, f64::min);
    let last_decade_max = trace
        .iter()
        .filter(|(r, _)| *r >= hi / 10.0)
        .map(|t| t.1)
        .fold(f64::NEG_INFINITY, f64::max);
    let witnessed = hi >= 100.0 * lo && last_decade_max < first_decade_min && last_decade_max < threshold;
    Ok(SublinearityReport { witnessed, first_decade_min, last_decade_max, threshold, trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::logspace;
    use crate::weights_seq::make_gevrey;

    fn gevrey2() -> AssociatedFunction {
        AssociatedFunction::new(&make_gevrey(2.0, 1000).unwrap()).unwrap()
    }

    #[test]
    fn majorize_examples() {
        let rho = logspace(1e-3, 1e3, 100);
        let zero = vec![0.0; 100];
        let m = majorize(&rho, &zero).unwrap();
        for (r, f) in rho.iter().zip(&m.f) {
            assert!((f - 1e-9 * r / (1.0 + r)).abs() < 1e-24);
        }
        let inc: Vec<f64> = rho.iter().map(|r| r.ln_1p()).collect();
        let m = majorize(&rho, &inc).unwrap();
        let gmax = inc[99];
        assert!(m.f.iter().zip(&inc).all(|(f, g)| f >= g && f - g <= 1e-9 * gmax));
        let step: Vec<f64> = rho.iter().map(|&r| if r < 1.0 { 0.0 } else { 2.0 }).collect();
        let m = majorize(&rho, &step).unwrap();
        assert!(m.f.windows(2).all(|w| w[1] > w[0]));
        assert!(m.f.iter().zip(&step).all(|(f, g)| f >= g));
        let mut dec = inc.clone();
        dec.reverse();
        assert!(majorize(&rho, &dec).is_err());
    }

    #[test]
    fn bounded_branch() {
        let af = gevrey2();
        let rho = logspace(1e-2, 1e6, 200);
        let g: Vec<f64> = rho.iter().map(|&r| r.min(3.0)).collect();
        let sf = build_subordinate(&rho, &g, &af).unwrap();
        assert!(sf.trivial);
        assert!((sf.c_prime - 3f64.exp()).abs() < 1e-12);
        let rep = check_sublinearity(&sf.rho, &sf.eps, 0.01).unwrap();
        assert!(rep.witnessed);
    }

    #[test]
    fn log_growth() {
        let af = gevrey2();
        let rho = logspace(1e-2, 1e6, 600);
        let g: Vec<f64> = rho.iter().map(|r| r.ln_1p()).collect();
        let sf = build_subordinate(&rho, &g, &af).unwrap();
        assert!(!sf.trivial);
        for (i, (gv, e)) in g.iter().zip(&sf.eps).enumerate() {
            assert!(*gv <= af.eval(*e).unwrap() + sf.ln_c_prime, "sample {i}");
        }
        assert!(sf.eps.windows(2).all(|w| w[1] > w[0]));
        let maj = sf.majorant.as_ref().unwrap();
        let i1 = rho.iter().position(|&r| r == sf.rho1).unwrap();
        for i in i1..rho.len() {
            assert!((af.eval(sf.eps[i]).unwrap() - maj.f[i]).abs() <= 1e-8);
        }
        assert!(check_sublinearity(&sf.rho, &sf.eps, 0.01).unwrap().witnessed);
    }

    #[test]
    fn identity_is_not_subordinate() {
        let rho = logspace(1e-2, 1e6, 100);
        let rep = check_sublinearity(&rho, &rho, 0.01).unwrap();
        assert!(!rep.witnessed);
    }
}
