use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::distribution::{spacing, TransformGrid};
use crate::error::{invalid, Error, Result};
use crate::ultrapoly::{ShiftedUltrapolynomial, Ultrapolynomial};

/// Relative change allowed when the `η`-extent is halved.
pub const TAIL_TOL: f64 = 1e-6;
/// Round-trip tolerance relative to `max|f_ξ|`.
pub const ROUND_TRIP_TOL: f64 = 1e-6;
/// The round trip is checked where `|P_ξ(η)|` stays below this; beyond it the
/// roundoff in the discrete transform, amplified by `|P_ξ|`, exceeds the tolerance.
pub const ROUND_TRIP_WINDOW: f64 = 1e8;

/// Trapezoid weights on a uniform grid.
fn trapezoid_weight(i: usize, n: usize, h: f64) -> f64 {
    if i == 0 || i + 1 == n {
        0.5 * h
    } else {
        h
    }
}

/// `(2π)^{-1} Σ_k w_k g_k e^{iη_k x}` over the nodes with `|η_k| ≤ r`.
fn inverse_fourier(eta: &[f64], g: &[Complex64], h: f64, x: f64, r: f64) -> Complex64 {
    let idx: Vec<usize> = (0..eta.len()).filter(|&k| eta[k].abs() <= r * (1.0 + 1e-12)).collect();
    let n = idx.len();
    let mut acc = Complex64::new(0.0, 0.0);
    for (j, &k) in idx.iter().enumerate() {
        acc += g[k] * Complex64::from_polar(trapezoid_weight(j, n, h), eta[k] * x);
    }
    acc / (2.0 * PI)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionReport {
    pub xi: f64,
    pub x: Vec<f64>,
    /// `H_ξ(x) = (2π)^{-1} ∫ f_ξ(η) e^{iηx} / P_ξ(η) dη`.
    pub h: Vec<Complex64>,
    /// `max |H_R − H_{R/2}| / max|H_R|`.
    pub tail_change: f64,
    /// `|H|` at the ends of the `x`-grid relative to `max|H|`.
    pub x_tail: f64,
    /// `(π/h_x) / R_η`, above 1 when the `x`-grid resolves the `η`-band.
    pub nyquist_ratio: f64,
    pub max_f: f64,
    /// `max |P_ξ·DFT(H) − f_ξ| / max|f_ξ|` over the window.
    pub round_trip_err: f64,
    pub window_points: usize,
    pub window_eta: f64,
    pub passed: bool,
}

/// `H_ξ` on `x_grid` from the row `xi_index` of `g`, then the multiplier
/// check `P_ξ(η)·ℱ(H_ξ)(η) = f_ξ(η)` with a discrete transform over `x_grid`.
/// `P(D)` is never applied in `x`-space.
pub fn reconstruct(g: &TransformGrid, xi_index: usize, p: &ShiftedUltrapolynomial, x_grid: &[f64]) -> Result<ReconstructionReport> {
    let xi = *g.xi.get(xi_index).ok_or_else(|| invalid("xi_index", "out of range"))?;
    if p.xi().len() != 1 || (p.xi()[0] - xi).abs() > 1e-15 {
        return Err(invalid("P_xi", format!("shift {:?} does not match xi = {xi}", p.xi())));
    }
    let h_x = spacing(x_grid, "x")?;
    let nyquist_ratio = (PI / h_x) / g.r_eta;
    if !(nyquist_ratio > 1.0) {
        return Err(Error::Aliasing(format!("pi/h_x = {} does not exceed the eta extent {}", PI / h_x, g.r_eta)));
    }
    let f = &g.values[xi_index];
    let max_f = f.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let pvals: Vec<Complex64> = g.eta.par_iter().map(|&e| p.eval_real(&[e])).collect::<Result<_>>()?;
    let q: Vec<Complex64> = f.iter().zip(&pvals).map(|(f, p)| f / p).collect();
    let (r, h_eta) = (g.r_eta, g.h_eta);
    let h: Vec<Complex64> = x_grid.par_iter().map(|&x| inverse_fourier(&g.eta, &q, h_eta, x, r)).collect();
    let half: Vec<Complex64> = x_grid.par_iter().map(|&x| inverse_fourier(&g.eta, &q, h_eta, x, 0.5 * r)).collect();
    let max_h = h.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if max_f == 0.0 || max_h == 0.0 {
        return Ok(ReconstructionReport {
            xi,
            x: x_grid.to_vec(),
            h,
            tail_change: 0.0,
            x_tail: 0.0,
            nyquist_ratio,
            max_f,
            round_trip_err: 0.0,
            window_points: g.eta.len(),
            window_eta: r,
            passed: true,
        });
    }
    let tail_change = h.iter().zip(&half).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max) / max_h;
    if tail_change > TAIL_TOL {
        return Err(Error::TailNotConverged(format!("halving the eta extent changes H by {tail_change:.3e}")));
    }
    let x_tail = h[0].norm().max(h[h.len() - 1].norm()) / max_h;
    if x_tail > 1e-12 {
        return Err(Error::TailNotConverged(format!("H has not decayed at the ends of the x-grid ({x_tail:.3e})")));
    }
    let n_x = x_grid.len();
    let window: Vec<usize> = (0..g.eta.len()).filter(|&k| pvals[k].norm() <= ROUND_TRIP_WINDOW).collect();
    let errs: Vec<f64> = window
        .par_iter()
        .map(|&k| {
            let e = g.eta[k];
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, (&x, hv)) in x_grid.iter().zip(&h).enumerate() {
                acc += hv * Complex64::from_polar(trapezoid_weight(j, n_x, h_x), -e * x);
            }
            (pvals[k] * acc - f[k]).norm() / max_f
        })
        .collect();
    let round_trip_err = errs.iter().copied().fold(0.0, f64::max);
    let window_eta = window.iter().map(|&k| g.eta[k].abs()).fold(0.0, f64::max);
    Ok(ReconstructionReport {
        xi,
        x: x_grid.to_vec(),
        h,
        tail_change,
        x_tail,
        nyquist_ratio,
        max_f,
        round_trip_err,
        window_points: window.len(),
        window_eta,
        passed: round_trip_err <= ROUND_TRIP_TOL,
    })
}

/// `e^{xξ}·ℱ^{-1}(f_ξ)(x)`, which is `T(x)` when `f_ξ` decays on its own.
pub fn direct_inversion(g: &TransformGrid, xi_index: usize, x_grid: &[f64]) -> Result<Vec<Complex64>> {
    let xi = *g.xi.get(xi_index).ok_or_else(|| invalid("xi_index", "out of range"))?;
    let f = &g.values[xi_index];
    Ok(x_grid
        .par_iter()
        .map(|&x| (xi * x).exp() * inverse_fourier(&g.eta, f, g.h_eta, x, g.r_eta))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourReport {
    pub xi: Vec<f64>,
    pub x: Vec<f64>,
    /// `values[j][i] = I(ξ_i, x_j)`.
    pub values: Vec<Vec<Complex64>>,
    /// Per `x`: `max_{i,i′} |I(ξ_i) − I(ξ_i′)| / max_i |I(ξ_i)|`.
    pub spreads: Vec<f64>,
    pub max_spread: f64,
    pub tail_change: f64,
}

/// `I(ξ, x) = (2π)^{-1} ∫ f(ξ+iη) e^{(ξ+iη)x} / P(η − iξ) dη` for every row of
/// `g` and every `x`; the integral is the same for every `ξ` by Cauchy–Poincaré.
pub fn contour_shift_independence(g: &TransformGrid, p: &Ultrapolynomial, x_probes: &[f64]) -> Result<ContourReport> {
    if x_probes.is_empty() {
        return Err(invalid("x_probes", "empty"));
    }
    let shifted: Vec<ShiftedUltrapolynomial> = g.xi.iter().map(|&x| p.shift(&[x])).collect::<Result<_>>()?;
    let q: Vec<Vec<Complex64>> = shifted
        .par_iter()
        .zip(&g.values)
        .map(|(ps, row)| g.eta.iter().zip(row).map(|(&e, f)| Ok(f / ps.eval_real(&[e])?)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let eval = |r: f64| -> Vec<Vec<Complex64>> {
        x_probes
            .iter()
            .map(|&x| {
                g.xi.iter().zip(&q).map(|(&xi, row)| (xi * x).exp() * inverse_fourier(&g.eta, row, g.h_eta, x, r)).collect()
            })
            .collect()
    };
    let values = eval(g.r_eta);
    let half = eval(0.5 * g.r_eta);
    let mut tail_change: f64 = 0.0;
    let mut spreads = Vec::with_capacity(x_probes.len());
    for (row, hrow) in values.iter().zip(&half) {
        let scale = row.iter().map(|v| v.norm()).fold(0.0, f64::max);
        if scale == 0.0 {
            spreads.push(0.0);
            continue;
        }
        let tc = row.iter().zip(hrow).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max) / scale;
        tail_change = tail_change.max(tc);
        let mut s: f64 = 0.0;
        for a in row {
            for b in row {
                s = s.max((a - b).norm());
            }
        }
        spreads.push(s / scale);
    }
    if tail_change > TAIL_TOL {
        return Err(Error::TailNotConverged(format!("halving the eta extent changes I by {tail_change:.3e}")));
    }
    let max_spread = spreads.iter().copied().fold(0.0, f64::max);
    Ok(ContourReport { xi: g.xi.clone(), x: x_probes.to_vec(), values, spreads, max_spread, tail_change })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::linspace;
    use crate::laplace::distribution::TestDistribution;
    use crate::ultrapoly::PolyKind;
    use crate::weights_seq::make_gevrey;

    fn poly() -> Ultrapolynomial {
        let seq = make_gevrey(2.0, 2000).unwrap();
        Ultrapolynomial::new(&seq, PolyKind::Beurling { l: 1.0 / 64.0 }, 2.5, 1, None).unwrap()
    }

    fn eta() -> Vec<f64> {
        linspace(-40.0, 40.0, 4001)
    }

    fn x_grid() -> Vec<f64> {
        let h = PI / (2.0 * 40.0);
        (-400..=400).map(|i| i as f64 * h).collect()
    }

    #[test]
    fn delta_round_trip() {
        let d0 = TestDistribution::delta(vec![0.0]).unwrap();
        let g = TransformGrid::closed_form(&d0, &[0.0, 0.3, 0.6], &eta()).unwrap();
        let p = poly();
        for i in 0..3 {
            let rep = reconstruct(&g, i, &p.shift(&[g.xi[i]]).unwrap(), &x_grid()).unwrap();
            assert!(rep.passed, "{} {} {} {}", rep.round_trip_err, rep.window_eta, rep.tail_change, rep.x_tail);
        }
        let c = contour_shift_independence(&g, &p, &[-1.0, 0.0, 2.0]).unwrap();
        assert!(c.max_spread <= 1e-6, "{:?}", c.spreads);
    }

    #[test]
    fn gaussian_inversion() {
        let t = TestDistribution::gaussian();
        let g = TransformGrid::closed_form(&t, &[0.0, 0.3, 0.6], &eta()).unwrap();
        let xs = linspace(-3.0, 3.0, 61);
        for i in 0..3 {
            let back = direct_inversion(&g, i, &xs).unwrap();
            for (x, v) in xs.iter().zip(&back) {
                assert!((v - (-x * x).exp()).norm() < 1e-6, "{x} {v}");
            }
        }
        let c = contour_shift_independence(&g, &poly(), &[-1.0, 0.0, 2.0]).unwrap();
        assert!(c.max_spread <= 1e-6, "{:?}", c.spreads);
    }

    #[test]
    fn zero_and_aliasing() {
        let g = TransformGrid::from_fn(&[0.0], &eta(), |_| Ok(Complex64::new(0.0, 0.0))).unwrap();
        let p = poly();
        let rep = reconstruct(&g, 0, &p.shift(&[0.0]).unwrap(), &x_grid()).unwrap();
        assert!(rep.h.iter().all(|v| v.norm() == 0.0));
        let coarse = linspace(-10.0, 10.0, 101);
        assert!(matches!(reconstruct(&g, 0, &p.shift(&[0.0]).unwrap(), &coarse), Err(Error::Aliasing(_))));
        let single = TransformGrid::from_fn(&[0.3], &eta(), |_| Ok(Complex64::new(1.0, 0.0))).unwrap();
        assert_eq!(contour_shift_independence(&single, &p, &[0.0]).unwrap().max_spread, 0.0);
    }
}
