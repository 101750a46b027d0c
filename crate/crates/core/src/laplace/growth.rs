use serde::{Deserialize, Serialize};

use super::distribution::TransformGrid;
use crate::assoc::{AssociatedFunction, RoumieuAssociatedFunction};
use crate::error::{invalid, Error, Result};
use crate::grid::halving;
use crate::numerics::tail_non_increasing;
use crate::subord::{build_subordinate, SubordinateFunction};
use crate::ultrapoly::radial_envelope;
use crate::weights_seq::{Extension, RSequence};

const ENVELOPE_BINS: usize = 64;
const TAIL_FRAC: f64 = 0.1;
const TAIL_SLACK: f64 = 1e-9;
/// Stand-in for `ln 0` so envelope comparisons stay finite.
const LN_ZERO: f64 = -1e4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Some `k` is witnessed.
    Beurling,
    /// Every `k` of the test grid is witnessed.
    Roumieu,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthRow {
    pub k: f64,
    pub ln_c: f64,
    #[serde(rename = "C")]
    pub c: f64,
    /// The radial envelope of `ln|f| − M(k|η|)` is non-increasing near `R_η`.
    pub witnessed: bool,
    /// Last envelope bins, for inspection.
    pub tail: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthCertificate {
    pub mode: Mode,
    pub rows: Vec<GrowthRow>,
    pub witnessed: bool,
    /// `C(k)` non-increasing in `k` across the table.
    pub monotone: bool,
    pub n_xi: usize,
    pub n_eta: usize,
    pub r_eta: f64,
    pub h_eta: f64,
}

impl GrowthCertificate {
    /// Largest witnessed `k` (the Beurling constant).
    pub fn beurling_k(&self) -> Option<f64> {
        self.rows.iter().filter(|r| r.witnessed).map(|r| r.k).fold(None, |a, k| Some(a.map_or(k, |a: f64| a.max(k))))
    }
}

/// `1, 1/2, …, 2^-8`.
pub fn default_k_grid() -> Vec<f64> {
    halving(8)
}

fn ln_abs(v: num_complex::Complex64) -> f64 {
    let n = v.norm();
    if n > 0.0 {
        n.ln()
    } else {
        LN_ZERO
    }
}

/// `C(k) = max |f(ξ+iη)| e^{−M(k|η|)}` over the grid for each `k`.
pub fn growth_certificate(g: &TransformGrid, af: &AssociatedFunction, k_grid: &[f64], mode: Mode) -> Result<GrowthCertificate> {
    if k_grid.is_empty() || k_grid.iter().any(|k| !(*k > 0.0)) {
        return Err(invalid("k_grid", "needs positive entries"));
    }
    let r_max = g.eta.iter().map(|e| e.abs()).fold(0.0, f64::max);
    let mut rows = Vec::with_capacity(k_grid.len());
    for &k in k_grid {
        let gauge: Vec<f64> = g.eta.iter().map(|e| af.eval(k * e.abs())).collect::<Result<_>>()?;
        let mut profile = Vec::with_capacity(g.xi.len() * g.eta.len());
        for row in &g.values {
            for ((e, v), m) in g.eta.iter().zip(row).zip(&gauge) {
                profile.push((e.abs(), ln_abs(*v).max(LN_ZERO) - m));
            }
        }
        let ln_c = profile.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
        let env = radial_envelope(&profile, ENVELOPE_BINS);
        let witnessed = r_max > 0.0 && tail_non_increasing(&env, TAIL_FRAC, TAIL_SLACK);
        let band = ((env.len() as f64 * TAIL_FRAC).ceil() as usize).clamp(2, env.len());
        let ln_c = if ln_c <= LN_ZERO { f64::NEG_INFINITY } else { ln_c };
        rows.push(GrowthRow { k, ln_c, c: ln_c.exp(), witnessed, tail: env[env.len() - band..].to_vec() });
    }
    let mut by_k: Vec<&GrowthRow> = rows.iter().collect();
    by_k.sort_by(|a, b| a.k.total_cmp(&b.k));
    let monotone = by_k.windows(2).all(|w| !(w[1].ln_c > w[0].ln_c));
    let witnessed = match mode {
        Mode::Beurling => rows.iter().any(|r| r.witnessed),
        Mode::Roumieu => rows.iter().all(|r| r.witnessed),
    };
    Ok(GrowthCertificate {
        mode,
        rows,
        witnessed,
        monotone,
        n_xi: g.xi.len(),
        n_eta: g.eta.len(),
        r_eta: g.r_eta,
        h_eta: g.h_eta,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoumieuReduction {
    /// `(k_p)` with `|f| ≤ C′ e^{N_{k_p}(|η|)}` on the grid.
    pub k: RSequence,
    pub subordinate: SubordinateFunction,
    pub ln_c: f64,
    /// `max M(ε(ρ)) − N_{k_p}(ρ)` over the radii; `≤ 0` up to slack.
    pub max_residual: f64,
    pub verified: bool,
}

/// Compresses a witnessed Roumieu certificate into a single sequence `(k_p)`.
///
/// The envelope `g(ρ) = max_{ξ, |η|≤ρ} ln₊|f|` feeds the subordinate
/// construction, then `k_p = min {ρ/ε(ρ) : ε(ρ) ≥ m_p}` on the sample radii,
/// continued linearly once `m_p` passes `ε(ρ_max)`. For `ρ` with argmax `p`
/// in `M(ε(ρ))` every `j ≤ p` has `k_j ≤ ρ/ε(ρ)`, hence `N_{k_p}(ρ) ≥ M(ε(ρ))`.
pub fn roumieu_reduction(g: &TransformGrid, af: &AssociatedFunction, cert: &GrowthCertificate) -> Result<RoumieuReduction> {
    if cert.mode != Mode::Roumieu || !cert.witnessed {
        return Err(Error::NotWitnessed("the Roumieu growth certificate is not witnessed".into()));
    }
    let mut radial: Vec<(f64, f64)> = Vec::new();
    for row in &g.values {
        for (e, v) in g.eta.iter().zip(row) {
            radial.push((e.abs(), ln_abs(*v).max(0.0)));
        }
    }
    radial.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut rho: Vec<f64> = Vec::new();
    let mut env: Vec<f64> = Vec::new();
    let mut run = 0.0f64;
    for (r, v) in radial {
        run = run.max(v);
        match rho.last() {
            Some(&last) if (r - last).abs() <= 1e-12 * r.max(1.0) => *env.last_mut().unwrap() = run,
            _ => {
                rho.push(r);
                env.push(run);
            }
        }
    }
    if rho.first() == Some(&0.0) {
        // the η = 0 value is folded into every later radius
        rho.remove(0);
        env.remove(0);
    }
    if rho.len() < 4 {
        return Err(invalid("grid", "too few radii for the envelope"));
    }
    let sf = build_subordinate(&rho, &env, af)?;
    let eps: Vec<f64> = rho.iter().map(|&r| sf.eval(r)).collect();
    let seq = af.sequence();
    let p_max = seq.p_max();
    let mut values = Vec::with_capacity(p_max);
    for p in 1..=p_max {
        let m_p = seq.quotient(p);
        let k = rho.iter().zip(&eps).filter(|(_, e)| **e >= m_p).map(|(r, e)| r / e).fold(f64::INFINITY, f64::min);
        if !k.is_finite() {
            break;
        }
        values.push(k.max(values.last().copied().unwrap_or(0.0)));
    }
    let (last_p, last_k) = match values.last() {
        Some(&k) => (values.len(), k),
        None => (1, 1.0),
    };
    if values.is_empty() {
        values.push(1.0);
    }
    for p in values.len() + 1..=p_max {
        values.push(last_k * p as f64 / last_p as f64);
    }
    let k = RSequence::new(values, Extension::Power { ln_scale: (last_k / last_p as f64).ln(), exponent: 1.0 })?;
    let nk = RoumieuAssociatedFunction::new(seq, &k)?;
    let mut max_residual = f64::NEG_INFINITY;
    let mut verified = true;
    for (&r, &e) in rho.iter().zip(&eps) {
        let m = af.eval(e.min(af.max_rho()))?;
        let n = nk.eval(r)?;
        let res = m - n;
        max_residual = max_residual.max(res);
        if res > 1e-12 * m.abs().max(1.0) {
            verified = false;
        }
    }
    Ok(RoumieuReduction { k, ln_c: sf.ln_c_prime, subordinate: sf, max_residual, verified })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::linspace;
    use crate::weights_seq::make_gevrey;
    use num_complex::Complex64;

    fn af() -> AssociatedFunction {
        AssociatedFunction::new(&make_gevrey(2.0, 400).unwrap()).unwrap()
    }

    #[test]
    fn constant_transform() {
        let g = TransformGrid::from_fn(&[0.0], &linspace(-5.0, 5.0, 101), |_| Ok(Complex64::new(1.0, 0.0))).unwrap();
        let cert = growth_certificate(&g, &af(), &default_k_grid(), Mode::Roumieu).unwrap();
        assert!(cert.witnessed && cert.monotone);
        assert!(cert.rows.iter().all(|r| r.c == 1.0));
        let red = roumieu_reduction(&g, &af(), &cert).unwrap();
        assert!(red.verified && red.subordinate.trivial);
    }

    #[test]
    fn gaussian_constant() {
        let xi = linspace(-1.0, 1.0, 5);
        let g = TransformGrid::from_fn(&xi, &linspace(-5.0, 5.0, 101), |z| {
            Ok(std::f64::consts::PI.sqrt() * (z * z / 4.0).exp())
        })
        .unwrap();
        let cert = growth_certificate(&g, &af(), &default_k_grid(), Mode::Roumieu).unwrap();
        assert!(cert.witnessed);
        let want = std::f64::consts::PI.sqrt() * 0.25f64.exp();
        assert!(cert.rows.iter().all(|r| (r.c - want).abs() < 1e-12 * want));
        assert!(roumieu_reduction(&g, &af(), &cert).unwrap().verified);
    }

    #[test]
    fn negative_control() {
        let g = TransformGrid::from_fn(&linspace(-1.0, 1.0, 5), &linspace(-5.0, 5.0, 101), |z| Ok((-z * z).exp())).unwrap();
        let cert = growth_certificate(&g, &af(), &default_k_grid(), Mode::Roumieu).unwrap();
        assert!(!cert.witnessed);
        assert!(cert.rows.iter().all(|r| !r.witnessed));
        assert!(matches!(roumieu_reduction(&g, &af(), &cert), Err(Error::NotWitnessed(_))));
    }

    #[test]
    fn growing_reduction() {
        // |f| = (1+η²)^{1/4} is eventually dominated by every M(k|η|)
        let g = TransformGrid::from_fn(&[0.0], &linspace(-2000.0, 2000.0, 4001), |z| {
            Ok(Complex64::new((1.0 + z.im * z.im).powf(0.25), 0.0))
        })
        .unwrap();
        let a = af();
        let cert = growth_certificate(&g, &a, &default_k_grid(), Mode::Roumieu).unwrap();
        assert!(cert.witnessed, "{:?}", cert.rows.iter().map(|r| r.witnessed).collect::<Vec<_>>());
        let red = roumieu_reduction(&g, &a, &cert).unwrap();
        assert!(red.verified && !red.subordinate.trivial, "{}", red.max_residual);
    }
}
