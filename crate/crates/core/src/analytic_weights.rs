//! The weights `a(x, ξ) = e^{−xξ} (Σ_k e^{−xξ^(k)})^{-1}` and `e^{±ε⟨x⟩}`,
//! `⟨x⟩ = √(1+|x|²)`, with their Cauchy derivative estimates, and a truncated
//! evaluator of the seminorms `s_m`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_4, SQRT_2};

use crate::assoc::AssociatedFunction;
use crate::error::{invalid, Error, Result};
use crate::numerics::{
    binomial, cauchy_derivatives, first_order_fd_error, logsumexp, logsumexp_complex, multi_factorial,
    multi_indices, tail_non_increasing, CauchyDerivatives,
};
use crate::ultrapoly::radial_envelope;

/// Slack on the bound ratios, which are `≤ 1` in exact arithmetic.
pub const RATIO_SLACK: f64 = 1e-6;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn japanese(x: &[f64]) -> f64 {
    (1.0 + dot(x, x)).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnchorSystem {
    anchors: Vec<Vec<f64>>,
    k_lo: Vec<f64>,
    k_hi: Vec<f64>,
    eps: f64,
    s: f64,
    /// Supporting half-spaces `n·ξ ≤ b` of the hull.
    facets: Vec<(Vec<f64>, f64)>,
}

fn cross(a: &[f64], b: &[f64]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn hull_facets(anchors: &[Vec<f64>], d: usize) -> Result<Vec<(Vec<f64>, f64)>> {
    let n = anchors.len();
    let mut candidates: Vec<Vec<f64>> = Vec::new();
    match d {
        1 => {
            candidates.push(vec![1.0]);
            candidates.push(vec![-1.0]);
        }
        2 => {
            for i in 0..n {
                for j in i + 1..n {
                    let e = sub(&anchors[j], &anchors[i]);
                    candidates.push(vec![-e[1], e[0]]);
                }
            }
        }
        3 => {
            for i in 0..n {
                for j in i + 1..n {
                    for k in j + 1..n {
                        let c = cross(&sub(&anchors[j], &anchors[i]), &sub(&anchors[k], &anchors[i]));
                        candidates.push(c.to_vec());
                    }
                }
            }
        }
        _ => return Err(invalid("d", format!("hull membership is implemented for d <= 3, got {d}"))),
    }
    let mut facets = Vec::new();
    for normal in candidates {
        let len = dot(&normal, &normal).sqrt();
        if len < 1e-12 {
            continue;
        }
        let unit: Vec<f64> = normal.iter().map(|v| v / len).collect();
        let vals: Vec<f64> = anchors.iter().map(|a| dot(&unit, a)).collect();
        let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
        facets.push((unit.clone(), hi));
        facets.push((unit.iter().map(|v| -v).collect(), -lo));
    }
    if facets.is_empty() {
        return Err(invalid("anchors", "hull is degenerate"));
    }
    Ok(facets)
}

impl AnchorSystem {
    /// Anchors `ξ^(k)`, box `K = [k_lo, k_hi]`, and `0 < ε < 1/4`; the
    /// 4ε-neighbourhood of `K` must lie in the hull `Π` of the anchors.
    pub fn new(anchors: Vec<Vec<f64>>, k_lo: Vec<f64>, k_hi: Vec<f64>, eps: f64) -> Result<Self> {
        if anchors.is_empty() {
            return Err(invalid("anchors", "empty"));
        }
        let d = anchors[0].len();
        if d == 0 || anchors.iter().any(|a| a.len() != d) || k_lo.len() != d || k_hi.len() != d {
            return Err(invalid("anchors", "inconsistent dimensions"));
        }
        if !(eps > 0.0 && eps < 0.25) {
            return Err(invalid("eps", format!("need 0 < eps < 1/4, got {eps}")));
        }
        if k_lo.iter().zip(&k_hi).any(|(a, b)| a > b) {
            return Err(invalid("K", "lower corner exceeds upper corner"));
        }
        let facets = hull_facets(&anchors, d)?;
        let s = anchors.iter().map(|a| dot(a, a).sqrt()).fold(0.0, f64::max);
        let sys = AnchorSystem { anchors, k_lo, k_hi, eps, s, facets };
        // the expanded box contains the Euclidean 4ε-neighbourhood; its corners suffice
        let pad = 4.0 * eps;
        for mask in 0..(1usize << d) {
            let corner: Vec<f64> = (0..d)
                .map(|j| if mask >> j & 1 == 1 { sys.k_hi[j] + pad } else { sys.k_lo[j] - pad })
                .collect();
            if !sys.in_hull(&corner) {
                return Err(Error::OutsideDomain(format!(
                    "4 eps-neighbourhood of K leaves the anchor hull at {corner:?}"
                )));
            }
        }
        Ok(sys)
    }

    /// `d = 1`: anchors `±2`, `K = [−1/2, 1/2]`, `ε = 0.1`.
    pub fn catalog_1d() -> Self {
        Self::new(vec![vec![-2.0], vec![2.0]], vec![-0.5], vec![0.5], 0.1).expect("valid catalog system")
    }

    /// `d = 2`: square corners `(±2, ±2)`, `K = [−1/2, 1/2]²`, `ε = 0.1`.
    pub fn catalog_2d() -> Self {
        let anchors = vec![vec![-2.0, -2.0], vec![2.0, -2.0], vec![-2.0, 2.0], vec![2.0, 2.0]];
        Self::new(anchors, vec![-0.5, -0.5], vec![0.5, 0.5], 0.1).expect("valid catalog system")
    }

    pub fn d(&self) -> usize {
        self.k_lo.len()
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// `s = max_{ξ∈Π} |ξ|`, attained at an anchor.
    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn anchors(&self) -> &[Vec<f64>] {
        &self.anchors
    }

    pub fn k_box(&self) -> (&[f64], &[f64]) {
        (&self.k_lo, &self.k_hi)
    }

    pub fn in_hull(&self, xi: &[f64]) -> bool {
        xi.len() == self.d() && self.facets.iter().all(|(n, b)| dot(n, xi) <= b + 1e-12 * (1.0 + b.abs()))
    }

    pub fn in_k(&self, xi: &[f64]) -> bool {
        xi.len() == self.d() && xi.iter().zip(self.k_lo.iter().zip(&self.k_hi)).all(|(x, (a, b))| a <= x && x <= b)
    }

    /// Corners of `K`.
    pub fn k_corners(&self) -> Vec<Vec<f64>> {
        let d = self.d();
        (0..(1usize << d))
            .map(|mask| (0..d).map(|j| if mask >> j & 1 == 1 { self.k_hi[j] } else { self.k_lo[j] }).collect())
            .collect()
    }

    /// `min(1/(8d+1), π/(8 s √d))`, inside both strip constraints.
    pub fn default_radius(&self) -> f64 {
        let d = self.d() as f64;
        (1.0 / (8.0 * d + 1.0)).min(std::f64::consts::PI / (8.0 * self.s * d.sqrt()))
    }

    /// `ln a(x, ξ) = −xξ − LSE_k(−xξ^(k))`.
    pub fn ln_a(&self, x: &[f64], xi: &[f64]) -> Result<f64> {
        if !self.in_hull(xi) {
            return Err(Error::OutsideDomain(format!("xi = {xi:?} is outside the anchor hull")));
        }
        if x.len() != self.d() {
            return Err(invalid("x", format!("expected {} components", self.d())));
        }
        let exps: Vec<f64> = self.anchors.iter().map(|a| -dot(x, a)).collect();
        Ok(-dot(x, xi) - logsumexp(&exps))
    }

    pub fn eval_a(&self, x: &[f64], xi: &[f64]) -> Result<f64> {
        Ok(self.ln_a(x, xi)?.exp())
    }

    /// Analytic continuation `a(z, ξ)` in `z`.
    pub fn a_complex(&self, z: &[Complex64], xi: &[f64]) -> Complex64 {
        let zdot = |v: &[f64]| -> Complex64 { z.iter().zip(v).map(|(a, b)| a * b).sum() };
        let exps: Vec<Complex64> = self.anchors.iter().map(|a| -zdot(a)).collect();
        (-zdot(xi) - logsumexp_complex(&exps)).exp()
    }

    /// `max ε′⟨x⟩ + ln a(x, ξ) − ε′` over the grid; `≤ 0` for `ξ ∈ K`, `ε′ ≤ 4ε`.
    pub fn check_weighted_bound(&self, eps_prime: f64, xs: &[Vec<f64>], xis: &[Vec<f64>]) -> Result<WeightedBoundReport> {
        if !(0.0..=4.0 * self.eps).contains(&eps_prime) {
            return Err(invalid("eps_prime", format!("need 0 <= eps' <= 4 eps = {}", 4.0 * self.eps)));
        }
        if let Some(xi) = xis.iter().find(|xi| !self.in_k(xi)) {
            return Err(Error::OutsideDomain(format!("xi = {xi:?} is outside K")));
        }
        let rows: Vec<(f64, usize, usize)> = xs
            .par_iter()
            .enumerate()
            .flat_map_iter(|(i, x)| {
                xis.iter().enumerate().map(move |(j, xi)| (i, j, x, xi))
            })
            .map(|(i, j, x, xi)| Ok((eps_prime * japanese(x) + self.ln_a(x, xi)? - eps_prime, i, j)))
            .collect::<Result<_>>()?;
        let (max_residual, i, j) = rows.iter().copied().fold((f64::NEG_INFINITY, 0, 0), |a, r| if r.0 > a.0 { r } else { a });
        Ok(WeightedBoundReport { eps_prime, max_residual, argmax_x: xs[i].clone(), argmax_xi: xis[j].clone(), holds: max_residual <= 0.0 })
    }

    /// `|Σ_k e^{−zξ^(k)}| ≥ (√2/2) Σ_k e^{−xξ^(k)}` for `|y| s < π/4`;
    /// returns the smallest log ratio of the two sides (`≥ 0` when it holds).
    pub fn check_denominator_bound(&self, xs: &[Vec<f64>], ys: &[Vec<f64>]) -> Result<f64> {
        if let Some(y) = ys.iter().find(|y| dot(y, y).sqrt() * self.s >= FRAC_PI_4) {
            return Err(Error::OutsideDomain(format!("|y| s >= pi/4 at y = {y:?}")));
        }
        let worst = xs
            .par_iter()
            .map(|x| {
                ys.iter()
                    .map(|y| {
                        let z = |a: &[f64]| Complex64::new(-dot(x, a), -dot(y, a));
                        let c: Vec<Complex64> = self.anchors.iter().map(|a| z(a)).collect();
                        let r: Vec<f64> = self.anchors.iter().map(|a| -dot(x, a)).collect();
                        logsumexp_complex(&c).re - logsumexp(&r) - (SQRT_2 / 2.0).ln()
                    })
                    .fold(f64::INFINITY, f64::min)
            })
            .reduce(|| f64::INFINITY, f64::min);
        Ok(worst)
    }

    fn check_radius(&self, r: Option<f64>) -> Result<f64> {
        let r = r.unwrap_or_else(|| self.default_radius());
        if !(r > 0.0 && r * self.s * (self.d() as f64).sqrt() < FRAC_PI_4) {
            return Err(invalid("r", format!("need r s sqrt(d) < pi/4, got r = {r}")));
        }
        Ok(r)
    }

    /// Cauchy derivatives `∂_x^α a(x, ξ)` for `|α| ≤ max_order`.
    pub fn deriv_a(&self, x: &[f64], xi: &[f64], max_order: usize, r: Option<f64>) -> Result<CauchyDerivatives> {
        let r = self.check_radius(r)?;
        if !self.in_hull(xi) {
            return Err(Error::OutsideDomain(format!("xi = {xi:?} is outside the anchor hull")));
        }
        let f = |z: &[Complex64]| self.a_complex(z, xi);
        cauchy_derivatives(&f, x, r, 256, &multi_indices(self.d(), max_order))
    }

    /// Ratios `|∂^α a| r^|α| / (√2 e^{2s} α! a(x, ξ))` over the sweep.
    pub fn a_bound_sweep(&self, xs: &[Vec<f64>], xis: &[Vec<f64>], max_order: usize, r: Option<f64>) -> Result<BoundSweep> {
        let r = self.check_radius(r)?;
        let pref = SQRT_2 * (2.0 * self.s).exp();
        let rows: Vec<(f64, f64)> = pairs(xs, xis)
            .par_iter()
            .map(|(x, xi)| {
                let d = self.deriv_a(x, xi, max_order, Some(r))?;
                let a = self.eval_a(x, xi)?;
                let ratio = max_scaled(&d, r) / (pref * a);
                let fd = first_order_fd_error(&|p: &[f64]| self.eval_a(p, xi).unwrap_or(f64::NAN), x, &d);
                Ok((ratio, fd))
            })
            .collect::<Result<_>>()?;
        Ok(BoundSweep::from_rows("anchor_weight", r, max_order, &rows))
    }
}

fn pairs(xs: &[Vec<f64>], xis: &[Vec<f64>]) -> Vec<(Vec<f64>, Vec<f64>)> {
    xs.iter().flat_map(|x| xis.iter().map(move |xi| (x.clone(), xi.clone()))).collect()
}

/// `max_α |∂^α f| r^|α| / α!`.
fn max_scaled(d: &CauchyDerivatives, r: f64) -> f64 {
    d.indices
        .iter()
        .zip(&d.values)
        .map(|(alpha, v)| v.norm() * r.powi(alpha.iter().sum::<usize>() as i32) / multi_factorial(alpha))
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedBoundReport {
    pub eps_prime: f64,
    pub max_residual: f64,
    pub argmax_x: Vec<f64>,
    pub argmax_xi: Vec<f64>,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundSweep {
    pub bound: String,
    pub r: f64,
    pub max_order: usize,
    pub max_ratio: f64,
    pub max_fd_rel_err: f64,
    pub points: usize,
    pub holds: bool,
}

impl BoundSweep {
    fn from_rows(bound: &str, r: f64, max_order: usize, rows: &[(f64, f64)]) -> Self {
        let max_ratio = rows.iter().map(|r| r.0).fold(0.0, f64::max);
        let max_fd_rel_err = rows.iter().map(|r| r.1).fold(0.0, f64::max);
        BoundSweep {
            bound: bound.to_string(),
            r,
            max_order,
            max_ratio,
            max_fd_rel_err,
            points: rows.len(),
            holds: max_ratio <= 1.0 + RATIO_SLACK,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// `e^{±ε⟨x⟩}` with a Cauchy radius `r ≤ 1/(8d)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqrtWeight {
    pub eps: f64,
    pub sign: Sign,
    pub d: usize,
    pub r: f64,
}

impl SqrtWeight {
    pub fn new(eps: f64, sign: Sign, d: usize, r: Option<f64>) -> Result<Self> {
        if !(eps > 0.0 && eps < 0.25) {
            return Err(invalid("eps", format!("need 0 < eps < 1/4, got {eps}")));
        }
        if d == 0 {
            return Err(invalid("d", "must be at least 1"));
        }
        let r = r.unwrap_or(1.0 / (8.0 * d as f64));
        if !(r > 0.0 && r <= 1.0 / (8.0 * d as f64)) {
            return Err(invalid("r", format!("need 0 < r <= 1/(8d), got {r}")));
        }
        Ok(SqrtWeight { eps, sign, d, r })
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.sign.value() * self.eps * japanese(x)).exp()
    }

    /// Principal branch of `e^{±ε√(1 + z²)}`.
    pub fn eval_complex(&self, z: &[Complex64]) -> Complex64 {
        let sq: Complex64 = z.iter().map(|v| v * v).sum();
        ((Complex64::new(1.0, 0.0) + sq).sqrt() * (self.sign.value() * self.eps)).exp()
    }

    pub fn derivatives(&self, x: &[f64], max_order: usize, r: Option<f64>) -> Result<CauchyDerivatives> {
        let r = r.unwrap_or(self.r);
        let f = |z: &[Complex64]| self.eval_complex(z);
        cauchy_derivatives(&f, x, r, 256, &multi_indices(self.d, max_order))
    }

    /// `ln` of the right-hand envelope: `2ε⟨x⟩` for the plus sign, `−(ε/4)⟨x⟩` for the minus sign.
    fn ln_envelope(&self, x: &[f64]) -> f64 {
        match self.sign {
            Sign::Plus => 2.0 * self.eps * japanese(x),
            Sign::Minus => -0.25 * self.eps * japanese(x),
        }
    }

    /// Ratios `|∂^α w| r^|α| / (α! envelope(x))`.
    pub fn bound_sweep(&self, xs: &[Vec<f64>], max_order: usize) -> Result<BoundSweep> {
        let rows: Vec<(f64, f64)> = xs
            .par_iter()
            .map(|x| {
                let d = self.derivatives(x, max_order, None)?;
                let ratio = max_scaled(&d, self.r) / self.ln_envelope(x).exp();
                let fd = first_order_fd_error(&|p: &[f64]| self.eval(p), x, &d);
                Ok((ratio, fd))
            })
            .collect::<Result<_>>()?;
        let tag = match self.sign {
            Sign::Plus => "growing_sqrt",
            Sign::Minus => "decaying_sqrt",
        };
        Ok(BoundSweep::from_rows(tag, self.r, max_order, &rows))
    }
}

/// Leibniz combination of the derivatives of `e^{ε⟨x⟩}` and `a(x, ξ)` with a
/// shared radius, against `√2 e^{2s+2ε} α! 2^|α| / r^|α|`.
pub fn product_rule_bound(
    anchors: &AnchorSystem,
    weight: &SqrtWeight,
    xs: &[Vec<f64>],
    xis: &[Vec<f64>],
    max_order: usize,
) -> Result<BoundSweep> {
    if weight.sign != Sign::Plus || weight.d != anchors.d() {
        return Err(invalid("weight", "needs the growing weight in the anchor dimension"));
    }
    if (weight.eps - anchors.eps()).abs() > 0.0 {
        return Err(invalid("weight", "eps must match the anchor system"));
    }
    if let Some(xi) = xis.iter().find(|xi| !anchors.in_k(xi)) {
        return Err(Error::OutsideDomain(format!("xi = {xi:?} is outside K")));
    }
    let r = anchors.default_radius().min(weight.r);
    let s = anchors.s();
    let eps = weight.eps;
    let ln_pref = SQRT_2.ln() + 2.0 * s + 2.0 * eps;
    let rows: Vec<(f64, f64)> = pairs(xs, xis)
        .par_iter()
        .map(|(x, xi)| {
            let da = anchors.deriv_a(x, xi, max_order, Some(r))?;
            let dw = weight.derivatives(x, max_order, Some(r))?;
            let mut worst: f64 = 0.0;
            for alpha in &da.indices {
                let mut total = Complex64::new(0.0, 0.0);
                for beta in da.indices.iter().filter(|b| b.iter().zip(alpha).all(|(b, a)| b <= a)) {
                    let gamma: Vec<usize> = alpha.iter().zip(beta).map(|(a, b)| a - b).collect();
                    let coeff: f64 = alpha.iter().zip(beta).map(|(&a, &b)| binomial(a, b)).product();
                    total += dw.get(beta).unwrap() * da.get(&gamma).unwrap() * coeff;
                }
                let order: usize = alpha.iter().sum();
                let ln_bound = ln_pref + multi_factorial(alpha).ln() + order as f64 * (2.0 / r).ln();
                worst = worst.max(total.norm() / ln_bound.exp());
            }
            let fd = {
                let f = |p: &[f64]| weight.eval(p) * anchors.eval_a(p, xi).unwrap_or(f64::NAN);
                let prod = |z: &[Complex64]| weight.eval_complex(z) * anchors.a_complex(z, xi);
                let dp = cauchy_derivatives(&prod, x, r, 256, &multi_indices(x.len(), 1))?;
                first_order_fd_error(&f, x, &dp)
            };
            Ok((worst, fd))
        })
        .collect::<Result<_>>()?;
    Ok(BoundSweep::from_rows("product", r, max_order, &rows))
}

/// Derivatives of a smooth function on `ℝ^d` up to a given order.
pub trait DerivativeOracle: Sync {
    fn dim(&self) -> usize;
    fn derivatives(&self, x: &[f64], max_order: usize) -> Result<CauchyDerivatives>;
}

impl DerivativeOracle for SqrtWeight {
    fn dim(&self) -> usize {
        self.d
    }

    fn derivatives(&self, x: &[f64], max_order: usize) -> Result<CauchyDerivatives> {
        SqrtWeight::derivatives(self, x, max_order, None)
    }
}

/// A function holomorphic near the real axis, differentiated by Cauchy quadrature.
pub struct Holomorphic<F> {
    pub d: usize,
    pub r: f64,
    pub f: F,
}

impl<F> DerivativeOracle for Holomorphic<F>
where
    F: Fn(&[Complex64]) -> Complex64 + Sync,
{
    fn dim(&self) -> usize {
        self.d
    }

    fn derivatives(&self, x: &[f64], max_order: usize) -> Result<CauchyDerivatives> {
        cauchy_derivatives(&self.f, x, self.r, 64, &multi_indices(self.d, max_order))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeminormReport {
    pub m: f64,
    pub alpha_max: usize,
    pub value: f64,
    pub argmax_radius: f64,
    pub divergent: bool,
}

/// Truncated `s_m(φ) = sup_{|α|≤α_max} sup_x m^|α| |D^αφ(x)| e^{M(m|x|)} / M_|α|`.
///
/// Flags divergence when the radial envelope of the weighted values is still
/// rising over the outer tenth of the grid.
pub fn seminorm_estimate(
    oracle: &dyn DerivativeOracle,
    af: &AssociatedFunction,
    m: f64,
    alpha_max: usize,
    xs: &[Vec<f64>],
) -> Result<SeminormReport> {
    if !(m > 0.0) {
        return Err(invalid("m", "must be positive"));
    }
    if alpha_max > af.sequence().p_max() {
        return Err(invalid("alpha_max", "exceeds the sequence table"));
    }
    let lm = af.sequence().log_m();
    let rows: Vec<(f64, f64)> = xs
        .par_iter()
        .map(|x| {
            let d = oracle.derivatives(x, alpha_max)?;
            let rad = dot(x, x).sqrt();
            let weight = af.eval(m * rad)?;
            let best = d
                .indices
                .iter()
                .zip(&d.values)
                .map(|(alpha, v)| {
                    let k: usize = alpha.iter().sum();
                    if v.norm() == 0.0 {
                        f64::NEG_INFINITY
                    } else {
                        k as f64 * m.ln() + v.norm().ln() + weight - lm[k]
                    }
                })
                .fold(f64::NEG_INFINITY, f64::max);
            Ok((rad, best))
        })
        .collect::<Result<_>>()?;
    let (argmax_radius, ln_value) = rows.iter().copied().fold((0.0, f64::NEG_INFINITY), |a, r| if r.1 > a.1 { r } else { a });
    if ln_value == f64::NEG_INFINITY {
        return Ok(SeminormReport { m, alpha_max, value: 0.0, argmax_radius: 0.0, divergent: false });
    }
    let mut profile = rows.clone();
    profile.sort_by(|a, b| a.0.total_cmp(&b.0));
    let env = radial_envelope(&profile, 64);
    let divergent = !tail_non_increasing(&env, 0.1, 1e-9);
    Ok(SeminormReport { m, alpha_max, value: ln_value.exp(), argmax_radius, divergent })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayProductReport {
    pub h: f64,
    pub ln_max: f64,
    pub bounded: bool,
}

/// `max_x M(h⟨x⟩) − (ε/4)⟨x⟩` on the grid, with a decay check at the boundary.
pub fn decay_product(af: &AssociatedFunction, h: f64, eps: f64, xs: &[Vec<f64>]) -> Result<DecayProductReport> {
    let mut profile: Vec<(f64, f64)> = xs
        .iter()
        .map(|x| {
            let j = japanese(x);
            Ok((j, af.eval(h * j)? - 0.25 * eps * j))
        })
        .collect::<Result<_>>()?;
    profile.sort_by(|a, b| a.0.total_cmp(&b.0));
    let ln_max = profile.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let env = radial_envelope(&profile, 64);
    Ok(DecayProductReport { h, ln_max, bounded: ln_max.is_finite() && tail_non_increasing(&env, 0.1, 1e-9) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::linspace;
    use crate::weights_seq::make_gevrey;

    fn line(a: f64, b: f64, n: usize) -> Vec<Vec<f64>> {
        linspace(a, b, n).into_iter().map(|x| vec![x]).collect()
    }

    #[test]
    fn a_examples() {
        let single = AnchorSystem::new(vec![vec![0.0]], vec![0.0], vec![0.0], 0.1);
        assert!(single.is_err(), "a single anchor has no room for the neighbourhood");
        let one = AnchorSystem {
            anchors: vec![vec![1.5]],
            k_lo: vec![1.5],
            k_hi: vec![1.5],
            eps: 0.1,
            s: 1.5,
            facets: vec![(vec![1.0], 1.5), (vec![-1.0], -1.5)],
        };
        for x in linspace(-30.0, 30.0, 61) {
            assert_eq!(one.eval_a(&[x], &[1.5]).unwrap(), 1.0);
        }
        let sym = AnchorSystem::new(vec![vec![-1.0], vec![1.0]], vec![-0.5], vec![0.5], 0.1).unwrap();
        for x in linspace(-50.0, 50.0, 201) {
            let a = sym.eval_a(&[x], &[0.0]).unwrap();
            assert!(a > 0.0 && a <= 1.0);
        }
        let far = sym.ln_a(&[1e4], &[0.5]).unwrap();
        assert!(far.is_finite() && far <= 0.0);
        assert!(sym.eval_a(&[0.0], &[1.5]).is_err());
    }

    #[test]
    fn weighted_bound_catalog() {
        let sys = AnchorSystem::catalog_1d();
        let xs = line(-100.0, 100.0, 801);
        let xis = vec![vec![-0.5], vec![0.0], vec![0.25], vec![0.5]];
        for e in [0.0, 0.1, 0.4] {
            assert!(sys.check_weighted_bound(e, &xs, &xis).unwrap().holds);
        }
        assert!(sys.check_weighted_bound(0.5, &xs, &xis).is_err());
    }

    #[test]
    fn denominator_bound() {
        let sys = AnchorSystem::catalog_2d();
        let xs: Vec<Vec<f64>> = linspace(-5.0, 5.0, 11).into_iter().flat_map(|a| linspace(-5.0, 5.0, 11).into_iter().map(move |b| vec![a, b])).collect();
        let lim = 0.99 * FRAC_PI_4 / sys.s() / SQRT_2;
        let ys: Vec<Vec<f64>> = linspace(-lim, lim, 5).into_iter().flat_map(|a| linspace(-lim, lim, 5).into_iter().map(move |b| vec![a, b])).collect();
        assert!(sys.check_denominator_bound(&xs, &ys).unwrap() >= 0.0);
    }

    #[test]
    fn a_derivatives() {
        let sys = AnchorSystem::catalog_1d();
        let d = sys.deriv_a(&[0.7], &[0.2], 4, None).unwrap();
        let a = sys.eval_a(&[0.7], &[0.2]).unwrap();
        assert!((d.values[0].re - a).abs() < 1e-12);
        let rep = sys.a_bound_sweep(&line(-10.0, 10.0, 41), &[vec![0.0], vec![0.5]], 4, None).unwrap();
        assert!(rep.holds && rep.max_fd_rel_err < 1e-6, "{rep:?}");
    }

    #[test]
    fn sqrt_weights() {
        let plus = SqrtWeight::new(0.1, Sign::Plus, 1, None).unwrap();
        let minus = SqrtWeight::new(0.1, Sign::Minus, 1, None).unwrap();
        assert!((plus.eval(&[0.0]) - 0.1f64.exp()).abs() < 1e-15);
        assert!((minus.eval(&[0.0]) - (-0.1f64).exp()).abs() < 1e-15);
        let xs = line(-20.0, 20.0, 81);
        for w in [plus, minus] {
            let rep = w.bound_sweep(&xs, 2).unwrap();
            assert!(rep.holds && rep.max_fd_rel_err < 1e-6, "{rep:?}");
        }
    }

    #[test]
    fn product_rule() {
        let sys = AnchorSystem::catalog_1d();
        let w = SqrtWeight::new(0.1, Sign::Plus, 1, None).unwrap();
        let rep = product_rule_bound(&sys, &w, &line(-10.0, 10.0, 21), &sys.k_corners(), 4).unwrap();
        assert!(rep.holds, "{rep:?}");
    }

    #[test]
    fn seminorms() {
        let af = AssociatedFunction::new(&make_gevrey(2.0, 200).unwrap()).unwrap();
        let xs = line(-200.0, 200.0, 401);
        let minus = SqrtWeight::new(0.1, Sign::Minus, 1, None).unwrap();
        let rep = seminorm_estimate(&minus, &af, 0.05, 4, &xs).unwrap();
        assert!(rep.value.is_finite() && !rep.divergent, "{rep:?}");
        let sq = Holomorphic { d: 1, r: 0.5, f: |z: &[Complex64]| z[0] * z[0] };
        assert!(seminorm_estimate(&sq, &af, 0.05, 4, &xs).unwrap().divergent);
        let zero = Holomorphic { d: 1, r: 0.5, f: |_: &[Complex64]| Complex64::new(0.0, 0.0) };
        assert_eq!(seminorm_estimate(&zero, &af, 0.05, 4, &xs).unwrap().value, 0.0);
    }

    #[test]
    fn decay_product_bounded() {
        let af = AssociatedFunction::new(&make_gevrey(2.0, 400).unwrap()).unwrap();
        let rep = decay_product(&af, 0.01, 0.1, &line(-2000.0, 2000.0, 801)).unwrap();
        assert!(rep.bounded);
    }
}
