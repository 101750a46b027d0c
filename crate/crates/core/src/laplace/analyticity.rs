use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::distribution::{spacing, TransformGrid};
use crate::error::{invalid, Result};

/// Order a halving study must reach.
pub const MIN_ORDER: f64 = 1.9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticityReport {
    pub h_xi: f64,
    pub h_eta: f64,
    pub max_residual: f64,
    pub argmax: (f64, f64),
    pub interior_points: usize,
}

/// `R = ∂_η f − i ∂_ξ f` by central differences at every interior grid point.
pub fn verify_analyticity(g: &TransformGrid) -> Result<AnalyticityReport> {
    let h_xi = spacing(&g.xi, "xi")?;
    let h_eta = g.h_eta;
    if g.xi.len() < 3 || g.eta.len() < 3 {
        return Err(invalid("grid", "needs interior points in both directions"));
    }
    let i_unit = Complex64::new(0.0, 1.0);
    let mut worst = (0.0, (g.xi[1], g.eta[1]));
    let mut n = 0;
    for i in 1..g.xi.len() - 1 {
        for k in 1..g.eta.len() - 1 {
            let d_eta = (g.values[i][k + 1] - g.values[i][k - 1]) / (2.0 * h_eta);
            let d_xi = (g.values[i + 1][k] - g.values[i - 1][k]) / (2.0 * h_xi);
            let r = (d_eta - i_unit * d_xi).norm();
            n += 1;
            if r > worst.0 {
                worst = (r, (g.xi[i], g.eta[k]));
            }
        }
    }
    Ok(AnalyticityReport { h_xi, h_eta, max_residual: worst.0, argmax: worst.1, interior_points: n })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OrderVerdict {
    /// The residual decays at the required order.
    Converging,
    /// The residual sits at the roundoff floor on every level.
    Exact,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderLevel {
    pub h: f64,
    pub max_residual: f64,
    pub floor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderStudy {
    pub levels: Vec<OrderLevel>,
    /// `log2` of successive residual ratios, over levels above the floor.
    pub orders: Vec<f64>,
    pub min_order: f64,
    pub verdict: OrderVerdict,
}

impl OrderStudy {
    pub fn passed(&self) -> bool {
        self.verdict != OrderVerdict::Failed
    }
}

/// Central-difference Cauchy–Riemann residual at fixed probes for
/// `h = h0, h0/2, …`; a level counts as exact when its residual is within
/// `64·ε_mach·max|f|/h`.
pub fn analyticity_order_study<F>(f: &F, probes: &[Complex64], h0: f64, levels: usize) -> Result<OrderStudy>
where
    F: Fn(Complex64) -> Result<Complex64> + Sync,
{
    if probes.is_empty() || levels < 2 || !(h0 > 0.0) {
        return Err(invalid("study", "needs probes, two levels and h0 > 0"));
    }
    let i_unit = Complex64::new(0.0, 1.0);
    let mut out = Vec::with_capacity(levels);
    for lev in 0..levels {
        let h = h0 / (1u64 << lev) as f64;
        let rows: Vec<(f64, f64)> = probes
            .par_iter()
            .map(|&z| {
                let e_p = f(z + i_unit * h)?;
                let e_m = f(z - i_unit * h)?;
                let x_p = f(z + h)?;
                let x_m = f(z - h)?;
                let r = ((e_p - e_m) / (2.0 * h) - i_unit * (x_p - x_m) / (2.0 * h)).norm();
                let scale = e_p.norm().max(e_m.norm()).max(x_p.norm()).max(x_m.norm());
                Ok((r, scale))
            })
            .collect::<Result<_>>()?;
        let max_residual = rows.iter().map(|r| r.0).fold(0.0, f64::max);
        let scale = rows.iter().map(|r| r.1).fold(0.0, f64::max);
        out.push(OrderLevel { h, max_residual, floor: 64.0 * f64::EPSILON * scale / h });
    }
    let mut orders = Vec::new();
    for w in out.windows(2) {
        if w[1].max_residual > w[1].floor {
            orders.push((w[0].max_residual / w[1].max_residual).log2());
        }
    }
    let min_order = orders.iter().copied().fold(f64::INFINITY, f64::min);
    let verdict = if out.iter().all(|l| l.max_residual <= l.floor) {
        OrderVerdict::Exact
    } else if orders.is_empty() || min_order >= MIN_ORDER {
        OrderVerdict::Converging
    } else {
        OrderVerdict::Failed
    };
    Ok(OrderStudy { levels: out, orders, min_order, verdict })
}
