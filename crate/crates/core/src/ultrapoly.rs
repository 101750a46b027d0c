//! Zero-free ultrapolynomials
//! `P(w) = Π_{j≥q} (1 + w²/(l_j m_j)²)`, `w² = w_1² + … + w_d²`,
//! with scalar `l` (Beurling) or a sequence `(l_p)` (Roumieu).
//!
//! `ln P` is accumulated factor by factor. Where `μ_j = l_j m_j` follows a
//! power law `A j^γ`, the tail past the explicit cutoff `J` is summed exactly
//! through `Σ_n (−1)^{n+1}/n · (w²/A²)^n ζ(2γn, J+1)`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assoc::{AssociatedFunction, RoumieuAssociatedFunction};
use crate::error::{invalid, Error, Result};
use crate::grid::{doubling, halving, linspace, logspace};
use crate::numerics::{
    cauchy_derivatives, first_order_fd_error, multi_factorial, multi_indices, scaled_hurwitz_zeta,
    tail_non_increasing, CauchyDerivatives,
};
use crate::weights_seq::{normalize_r_sequence, Generator, RSequence, WeightSequence, DEFAULT_GROWTH_FACTOR};

const CACHE_LEN: usize = 20_000;
const MAX_EXPLICIT_TERMS: usize = 1_000_000;
pub const DEFAULT_TOL: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PolyKind {
    Beurling { l: f64 },
    Roumieu { l: RSequence },
}

impl PolyKind {
    fn ln_l(&self, j: usize) -> Option<f64> {
        match self {
            PolyKind::Beurling { l } => Some(l.ln()),
            PolyKind::Roumieu { l } => l.ln_value(j),
        }
    }

    fn tabulated_len(&self) -> usize {
        match self {
            PolyKind::Beurling { .. } => usize::MAX,
            PolyKind::Roumieu { l } => l.len(),
        }
    }
}

/// Scalar `k > 0` or a sequence `(k_p)`, the gauge of a lower bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Gain {
    Scalar(f64),
    Sequence(RSequence),
}

/// `ln μ_j = ln A + γ ln j` for `j ≥ from`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct PowerTail {
    ln_a: f64,
    gamma: f64,
    from: usize,
}

fn generator_power_law(g: &Generator) -> Option<PowerTail> {
    match g {
        Generator::Gevrey { s } => Some(PowerTail { ln_a: 0.0, gamma: *s, from: 1 }),
        Generator::Table => None,
        Generator::Modified { base, r } => {
            let b = generator_power_law(base)?;
            match *r.extension() {
                crate::weights_seq::Extension::Power { ln_scale, exponent } => Some(PowerTail {
                    ln_a: b.ln_a + ln_scale,
                    gamma: b.gamma + exponent,
                    from: b.from.max(r.len() + 1),
                }),
                _ => None,
            }
        }
    }
}

fn gevrey_order(g: &Generator) -> Option<f64> {
    match g {
        Generator::Gevrey { s } => Some(*s),
        Generator::Table => None,
        Generator::Modified { base, .. } => gevrey_order(base),
    }
}

#[derive(Debug, Clone)]
pub struct Ultrapolynomial {
    kind: PolyKind,
    q: usize,
    d: usize,
    c: f64,
    seq: WeightSequence,
    tol: f64,
    inv_mu2: Vec<f64>,
    power_tail: Option<PowerTail>,
}

fn ln_mu(seq: &WeightSequence, kind: &PolyKind, j: usize) -> Option<f64> {
    Some(seq.ln_quotient(j)? + kind.ln_l(j)?)
}

/// Minimal `q` with `c√d/(l_p m_p) < 1/2` for every tabulated `p ≥ q`.
pub fn choose_q(seq: &WeightSequence, kind: &PolyKind, c: f64, d: usize) -> Result<usize> {
    if !(c > 0.0) || d == 0 {
        return Err(invalid("c", "need c > 0 and d >= 1"));
    }
    let top = seq.p_max().min(kind.tabulated_len());
    let lhs = c * (d as f64).sqrt();
    let fails = |p: usize| ln_mu(seq, kind, p).map(|lm| !(lhs < 0.5 * lm.exp())).unwrap_or(true);
    match (1..=top).rev().find(|&p| fails(p)) {
        None => Ok(1),
        Some(p) if p == top => Err(Error::NotSatisfiable(format!(
            "c sqrt(d)/(l_p m_p) < 1/2 fails at the last tabulated index p = {top}"
        ))),
        Some(p) => Ok(p + 1),
    }
}

impl Ultrapolynomial {
    /// `q = None` picks the minimal admissible start index.
    pub fn new(seq: &WeightSequence, kind: PolyKind, c: f64, d: usize, q: Option<usize>) -> Result<Self> {
        if let PolyKind::Beurling { l } = kind {
            if !(l > 0.0 && l.is_finite()) {
                return Err(invalid("l", format!("must be positive, got {l}")));
            }
        }
        let q_min = choose_q(seq, &kind, c, d)?;
        let q = match q {
            None => q_min,
            Some(q) if q >= q_min => q,
            Some(q) => {
                return Err(invalid("q", format!("q = {q} violates the strip condition; need q >= {q_min}")))
            }
        };
        let power_tail = generator_power_law(seq.generator()).and_then(|g| match &kind {
            PolyKind::Beurling { l } => Some(PowerTail { ln_a: g.ln_a + l.ln(), ..g }),
            PolyKind::Roumieu { l } => match *l.extension() {
                crate::weights_seq::Extension::Power { ln_scale, exponent } => Some(PowerTail {
                    ln_a: g.ln_a + ln_scale,
                    gamma: g.gamma + exponent,
                    from: g.from.max(l.len() + 1),
                }),
                _ => None,
            },
        });
        let power_tail = power_tail.filter(|t| 2.0 * t.gamma > 1.0);
        let mut inv_mu2 = Vec::new();
        for j in q..q + CACHE_LEN {
            match ln_mu(seq, &kind, j) {
                Some(lm) => inv_mu2.push((-2.0 * lm).exp()),
                None => break,
            }
        }
        Ok(Ultrapolynomial { kind, q, d, c, seq: seq.clone(), tol: DEFAULT_TOL, inv_mu2, power_tail })
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn kind(&self) -> &PolyKind {
        &self.kind
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn sequence(&self) -> &WeightSequence {
        &self.seq
    }

    fn inv_mu2_at(&self, j: usize) -> Option<f64> {
        match self.inv_mu2.get(j - self.q) {
            Some(v) => Some(*v),
            None => ln_mu(&self.seq, &self.kind, j).map(|lm| (-2.0 * lm).exp()),
        }
    }

    fn square(&self, w: &[Complex64]) -> Result<Complex64> {
        if w.len() != self.d {
            return Err(invalid("w", format!("expected {} components, got {}", self.d, w.len())));
        }
        Ok(w.iter().map(|x| x * x).sum())
    }

    /// `Σ_{j=q}^{J} Ln(1 + z/μ_j²)`.
    fn explicit(&self, z: Complex64, cutoff: usize) -> Result<Complex64> {
        let mut sum = Complex64::new(0.0, 0.0);
        for j in self.q..=cutoff {
            let inv = self.inv_mu2_at(j).ok_or_else(|| {
                Error::TruncationNotAchievable(format!("l_j m_j unavailable at j = {j}"))
            })?;
            sum += (Complex64::new(1.0, 0.0) + z * inv).ln();
        }
        Ok(sum)
    }

    fn series_tail(&self, z: Complex64, cutoff: usize, t: PowerTail) -> Complex64 {
        let n0 = (cutoff + 1) as f64;
        let u = z * (-2.0 * t.ln_a - 2.0 * t.gamma * n0.ln()).exp();
        let mut un = u;
        let mut sum = Complex64::new(0.0, 0.0);
        for n in 1..400 {
            let zeta = scaled_hurwitz_zeta(2.0 * t.gamma * n as f64, n0);
            let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
            let term = un * (sign * zeta / n as f64);
            sum += term;
            if term.norm() <= 1e-18 * sum.norm().max(1.0) {
                break;
            }
            un *= u;
        }
        sum
    }

    /// Smallest cutoff for which the tail parameter `|w²|/μ_{J+1}²` is at most 1/4.
    fn series_cutoff(&self, az: f64, t: PowerTail) -> usize {
        let base = (self.q - 1).max(t.from - 1);
        if az == 0.0 {
            return base;
        }
        let need = ((4.0 * az).ln() - 2.0 * t.ln_a) / (2.0 * t.gamma);
        let jn = need.exp().ceil() as usize;
        base.max(jn.saturating_sub(1))
    }

    /// `ln P(w)` (real part `ln |P(w)|`, imaginary part an argument of `P(w)`).
    pub fn eval_ln(&self, w: &[Complex64]) -> Result<Complex64> {
        let z = self.square(w)?;
        self.eval_ln_square(z)
    }

    fn eval_ln_square(&self, z: Complex64) -> Result<Complex64> {
        let az = z.norm();
        if let Some(t) = self.power_tail {
            let cutoff = self.series_cutoff(az, t);
            return Ok(self.explicit(z, cutoff)? + self.series_tail(z, cutoff, t));
        }
        self.eval_ln_bounded(z)
    }

    /// Explicit summation until a tail bound drops below `tol`; needs a
    /// Gevrey-based sequence so that `μ_j/j^s` is non-decreasing.
    fn eval_ln_bounded(&self, z: Complex64) -> Result<Complex64> {
        let s = gevrey_order(self.seq.generator()).ok_or_else(|| {
            Error::TruncationNotAchievable("no tail model for a tabulated sequence".into())
        })?;
        if 2.0 * s <= 1.0 {
            return Err(Error::TruncationNotAchievable(format!("tail diverges for s = {s}")));
        }
        let az = z.norm();
        let mut sum = Complex64::new(0.0, 0.0);
        let mut j = self.q;
        loop {
            let inv = self.inv_mu2_at(j).ok_or_else(|| {
                Error::TruncationNotAchievable(format!("l_j m_j unavailable at j = {j}"))
            })?;
            sum += (Complex64::new(1.0, 0.0) + z * inv).ln();
            let x = az * self.inv_mu2_at(j + 1).unwrap_or(f64::INFINITY);
            if x < 0.5 {
                // μ_i ≥ μ_{j+1} (i/(j+1))^s for i > j, |Ln(1+t)| ≤ |t|/(1−|t|)
                let jf = j as f64;
                let sum_bound = x * ((jf + 1.0).powf(2.0 * s) * jf.powf(1.0 - 2.0 * s) / (2.0 * s - 1.0));
                if sum_bound / (1.0 - x) <= self.tol {
                    return Ok(sum);
                }
            }
            j += 1;
            if j - self.q > MAX_EXPLICIT_TERMS {
                return Err(Error::TruncationNotAchievable(format!(
                    "tail bound above {} after {MAX_EXPLICIT_TERMS} factors",
                    self.tol
                )));
            }
        }
    }

    /// `ln P(w)` with the explicit product stopped at `cutoff`; errors when
    /// the series tail is unavailable or the cutoff is too short for it.
    pub fn eval_ln_with_cutoff(&self, w: &[Complex64], cutoff: usize) -> Result<Complex64> {
        let z = self.square(w)?;
        let t = self
            .power_tail
            .ok_or_else(|| Error::TruncationNotAchievable("no power-law tail model".into()))?;
        if cutoff < self.series_cutoff(z.norm(), t) {
            return Err(invalid("cutoff", format!("too small for the series tail at |w^2| = {}", z.norm())));
        }
        Ok(self.explicit(z, cutoff)? + self.series_tail(z, cutoff, t))
    }

    /// Cutoff chosen by [`Self::eval_ln`] for this argument.
    pub fn cutoff_for(&self, w: &[Complex64]) -> Result<Option<usize>> {
        let z = self.square(w)?;
        Ok(self.power_tail.map(|t| self.series_cutoff(z.norm(), t)))
    }

    pub fn eval(&self, w: &[Complex64]) -> Result<Complex64> {
        Ok(self.eval_ln(w)?.exp())
    }

    /// `ln |P|` at many points, in parallel.
    pub fn ln_abs_grid(&self, points: &[Vec<Complex64>]) -> Result<Vec<f64>> {
        points.par_iter().map(|w| self.eval_ln(w).map(|v| v.re)).collect()
    }

    /// `1 − d c²/μ_q²`, a lower bound for `Re(1 + w²/μ_j²)` on the strip for `j ≥ q`.
    pub fn factor_floor(&self) -> f64 {
        1.0 - self.d as f64 * self.c * self.c * self.inv_mu2[0]
    }

    pub fn in_strip(&self, w: &[Complex64]) -> bool {
        w.iter().all(|x| x.im.abs() <= self.c * (1.0 + 1e-12))
    }

    pub fn verify_zero_free(&self, points: &[Vec<Complex64>]) -> Result<ZeroFreeReport> {
        if points.is_empty() {
            return Err(invalid("grid", "empty"));
        }
        let outside = points.iter().filter(|w| !self.in_strip(w)).count();
        let ln_abs = self.ln_abs_grid(points)?;
        let (i, ln_min) = ln_abs
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc });
        // Re(1 + z/μ_q²) is the smallest real part among all factors
        let inv = self.inv_mu2[0];
        let min_factor_re = points
            .iter()
            .map(|w| {
                let z: Complex64 = w.iter().map(|x| x * x).sum();
                1.0 + z.re * inv
            })
            .fold(f64::INFINITY, f64::min);
        let floor = self.factor_floor();
        Ok(ZeroFreeReport {
            points: points.len(),
            points_outside_strip: outside,
            ln_min_modulus: ln_min,
            min_modulus: ln_min.exp(),
            argmin: points[i].iter().map(|x| (x.re, x.im)).collect(),
            factor_floor: floor,
            min_factor_re,
            zero_free: outside == 0 && ln_min.is_finite() && ln_min.exp() > 0.0 && floor > 0.0 && min_factor_re >= floor,
        })
    }

    fn gauge_fn(&self, af: &AssociatedFunction, k: &Gain) -> Result<Box<dyn Fn(f64) -> Result<f64> + Sync + '_>> {
        match k {
            Gain::Scalar(k) => {
                let (af, k) = (af.clone(), *k);
                Ok(Box::new(move |rho| af.eval_fast(rho / k)))
            }
            Gain::Sequence(kp) => {
                let raf = RoumieuAssociatedFunction::new(af.sequence(), kp)?;
                Ok(Box::new(move |rho| raf.eval_fast(rho)))
            }
        }
    }

    /// `ln C̃ = min (ln|P(w)| − M(|w|/k))`, resp. `N_{k_p}(|w|)`, and the
    /// intermediate constant `ln C_0 = min (ln|P| + 2M(|w|/k) − M(|w|/(2l)))`.
    pub fn lower_bound_certificate(
        &self,
        af: &AssociatedFunction,
        k: &Gain,
        points: &[Vec<Complex64>],
    ) -> Result<LowerBoundReport> {
        if points.is_empty() {
            return Err(invalid("grid", "empty"));
        }
        let gauge = self.gauge_fn(af, k)?;
        let two_l: Box<dyn Fn(f64) -> Result<f64> + Sync> = match &self.kind {
            PolyKind::Beurling { l } => {
                let (af, l) = (af.clone(), *l);
                Box::new(move |rho| af.eval_fast(rho / (2.0 * l)))
            }
            PolyKind::Roumieu { l } => {
                let raf = RoumieuAssociatedFunction::new(af.sequence(), &l.scaled(2.0)?)?;
                Box::new(move |rho| raf.eval_fast(rho))
            }
        };
        let rows: Vec<(f64, f64, f64)> = points
            .par_iter()
            .map(|w| {
                let lp = self.eval_ln(w)?.re;
                let r = norm(w);
                let g = gauge(r)?;
                Ok((r, lp - g, lp + 2.0 * g - two_l(r)?))
            })
            .collect::<Result<_>>()?;
        let (i, ln_ct) = rows
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, r)| if r.1 < acc.1 { (i, r.1) } else { acc });
        let ln_c0 = rows.iter().map(|r| r.2).fold(f64::INFINITY, f64::min);
        Ok(LowerBoundReport {
            ln_c_tilde: ln_ct,
            c_tilde: ln_ct.exp(),
            argmin_radius: rows[i].0,
            ln_c0,
            c0: ln_c0.exp(),
            positive: ln_ct.is_finite() && ln_ct.exp() > 0.0,
        })
    }

    /// For each `L` on the grid, `ln C′(L) = max (ln|P(w)| − M(L|w|))`, with a
    /// check that the radial profile of the ratio decays at the grid boundary.
    pub fn upper_bound_certificate(
        &self,
        af: &AssociatedFunction,
        points: &[Vec<Complex64>],
        l_grid: &[f64],
    ) -> Result<UpperBoundReport> {
        let ln_abs = self.ln_abs_grid(points)?;
        let radii: Vec<f64> = points.iter().map(|w| norm(w)).collect();
        upper_certificate_from(af, &ln_abs, &radii, l_grid, 1.0)
    }

    /// `∂^α (1/P)(x)` by polytorus Cauchy quadrature for every `|α| ≤ max_order`.
    pub fn deriv_inv_p(&self, x: &[f64], max_order: usize, r: Option<f64>) -> Result<CauchyDerivatives> {
        let r = self.check_radius(r)?;
        if x.len() != self.d {
            return Err(invalid("x", format!("expected {} components", self.d)));
        }
        let f = |z: &[Complex64]| match self.eval_ln(z) {
            Ok(v) => (-v).exp(),
            Err(_) => Complex64::new(f64::NAN, f64::NAN),
        };
        let out = cauchy_derivatives(&f, x, r, 256, &multi_indices(self.d, max_order))?;
        if out.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::QuadratureUnstable(format!("non-finite 1/P on T_r({x:?})")));
        }
        Ok(out)
    }

    pub fn default_radius(&self) -> f64 {
        self.c.min(1.0 / (8.0 * self.d as f64))
    }

    fn check_radius(&self, r: Option<f64>) -> Result<f64> {
        let r = r.unwrap_or_else(|| self.default_radius());
        if !(r > 0.0 && r <= self.c) {
            return Err(invalid("r", format!("need 0 < r <= c = {}, got {r}", self.c)));
        }
        Ok(r)
    }

    /// Sweep of `∂^α(1/P)` over a real grid: Cauchy-estimate ratios against the
    /// torus maximum, the constant `C = max |∂^α(1/P)| r^|α|/α! e^{M(|x|/k)}`,
    /// and central differences for the first-order derivatives.
    pub fn derivative_bound_sweep(
        &self,
        af: &AssociatedFunction,
        k: &Gain,
        xs: &[Vec<f64>],
        max_order: usize,
        r: Option<f64>,
    ) -> Result<DerivativeSweep> {
        let r = self.check_radius(r)?;
        let gauge = self.gauge_fn(af, k)?;
        let rows: Vec<SweepRow> = xs
            .par_iter()
            .map(|x| {
                let d = self.deriv_inv_p(x, max_order, Some(r))?;
                let g = gauge(norm_real(x))?;
                let mut cauchy_ratio: f64 = 0.0;
                let mut ln_c = f64::NEG_INFINITY;
                for (alpha, v) in d.indices.iter().zip(&d.values) {
                    let order: usize = alpha.iter().sum();
                    let scaled = v.norm() * r.powi(order as i32) / multi_factorial(alpha);
                    cauchy_ratio = cauchy_ratio.max(scaled / d.node_max);
                    if scaled > 0.0 {
                        ln_c = ln_c.max(scaled.ln() + g);
                    }
                }
                let fd = self.fd_check(x, &d)?;
                Ok(SweepRow { radius: norm_real(x), cauchy_ratio, ln_c, fd_rel_err: fd })
            })
            .collect::<Result<_>>()?;
        let max_cauchy_ratio = rows.iter().map(|r| r.cauchy_ratio).fold(0.0, f64::max);
        let ln_c = rows.iter().map(|r| r.ln_c).fold(f64::NEG_INFINITY, f64::max);
        let max_fd_rel_err = rows.iter().map(|r| r.fd_rel_err).fold(0.0, f64::max);
        let mut profile: Vec<(f64, f64)> = rows.iter().map(|r| (r.radius, r.ln_c)).collect();
        profile.sort_by(|a, b| a.0.total_cmp(&b.0));
        let bounded = tail_non_increasing(&radial_envelope(&profile, 64), 0.1, 1e-9);
        Ok(DerivativeSweep { r, max_order, max_cauchy_ratio, ln_c, max_fd_rel_err, bounded_at_boundary: bounded, points: xs.len() })
    }

    fn fd_check(&self, x: &[f64], d: &CauchyDerivatives) -> Result<f64> {
        let inv = |p: &[f64]| -> f64 {
            let w: Vec<Complex64> = p.iter().map(|&v| Complex64::new(v, 0.0)).collect();
            self.eval_ln(&w).map(|v| (-v).exp().re).unwrap_or(f64::NAN)
        };
        Ok(first_order_fd_error(&inv, x, d))
    }

    /// `P_ξ(w) = P(w − iξ)`; requires `|ξ_j| ≤ c/2`.
    pub fn shift(&self, xi: &[f64]) -> Result<ShiftedUltrapolynomial> {
        if xi.len() != self.d {
            return Err(invalid("xi", format!("expected {} components", self.d)));
        }
        if let Some(x) = xi.iter().find(|x| x.abs() > 0.5 * self.c) {
            return Err(Error::OutsideDomain(format!("|xi_j| = {} exceeds c/2 = {}", x.abs(), 0.5 * self.c)));
        }
        Ok(ShiftedUltrapolynomial { base: self.clone(), xi: xi.to_vec() })
    }
}

fn norm(w: &[Complex64]) -> f64 {
    w.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn norm_real(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Bin `(radius, value)` pairs into `bins` equal radial bins over
/// `[0, r_max]` and keep each non-empty bin's maximum, in radial order.
pub fn radial_envelope(profile: &[(f64, f64)], bins: usize) -> Vec<f64> {
    let r_max = profile.iter().map(|p| p.0).fold(0.0, f64::max);
    if r_max == 0.0 {
        return profile.iter().map(|p| p.1).collect();
    }
    let mut out = vec![f64::NEG_INFINITY; bins];
    for &(r, v) in profile {
        let b = ((r / r_max) * bins as f64).floor().min((bins - 1) as f64) as usize;
        out[b] = out[b].max(v);
    }
    out.into_iter().filter(|v| v.is_finite()).collect()
}

fn upper_certificate_from(
    af: &AssociatedFunction,
    ln_abs: &[f64],
    radii: &[f64],
    l_grid: &[f64],
    radius_factor: f64,
) -> Result<UpperBoundReport> {
    let r_max = radii.iter().copied().fold(0.0, f64::max);
    let rows: Vec<UpperRow> = l_grid
        .iter()
        .map(|&l| {
            if l * radius_factor * r_max > af.max_rho() {
                return Ok(UpperRow { l, ln_c_prime: None, boundary_decay: false, in_range: false });
            }
            let ratios: Vec<f64> = ln_abs
                .par_iter()
                .zip(radii)
                .map(|(lp, r)| Ok(lp - af.eval_fast(l * radius_factor * r)?))
                .collect::<Result<_>>()?;
            let ln_c = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let profile: Vec<(f64, f64)> = radii.iter().copied().zip(ratios).collect();
            let env = radial_envelope(&profile, 64);
            Ok(UpperRow {
                l,
                ln_c_prime: Some(ln_c),
                boundary_decay: ln_c.is_finite() && tail_non_increasing(&env, 0.1, 1e-9),
                in_range: true,
            })
        })
        .collect::<Result<_>>()?;
    let chosen = rows.iter().find(|r| r.boundary_decay).map(|r| (r.l, r.ln_c_prime.unwrap()));
    Ok(UpperBoundReport {
        l: chosen.map(|c| c.0),
        ln_c_prime: chosen.map(|c| c.1),
        c_prime: chosen.map(|c| c.1.exp()),
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroFreeReport {
    pub points: usize,
    pub points_outside_strip: usize,
    pub ln_min_modulus: f64,
    pub min_modulus: f64,
    pub argmin: Vec<(f64, f64)>,
    pub factor_floor: f64,
    pub min_factor_re: f64,
    pub zero_free: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundReport {
    pub ln_c_tilde: f64,
    #[serde(rename = "C_tilde")]
    pub c_tilde: f64,
    pub argmin_radius: f64,
    pub ln_c0: f64,
    #[serde(rename = "C0")]
    pub c0: f64,
    pub positive: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpperRow {
    #[serde(rename = "L")]
    pub l: f64,
    pub ln_c_prime: Option<f64>,
    pub boundary_decay: bool,
    pub in_range: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpperBoundReport {
    #[serde(rename = "L")]
    pub l: Option<f64>,
    pub ln_c_prime: Option<f64>,
    #[serde(rename = "C_prime")]
    pub c_prime: Option<f64>,
    pub rows: Vec<UpperRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SweepRow {
    radius: f64,
    cauchy_ratio: f64,
    ln_c: f64,
    fd_rel_err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivativeSweep {
    pub r: f64,
    pub max_order: usize,
    /// `max |∂^α f| r^|α| / (α! max_{T_r} |f|)`; at most 1 up to roundoff.
    pub max_cauchy_ratio: f64,
    /// `ln` of the uniform constant against the decaying gauge.
    pub ln_c: f64,
    pub max_fd_rel_err: f64,
    pub bounded_at_boundary: bool,
    pub points: usize,
}

#[derive(Debug, Clone)]
pub struct ShiftedUltrapolynomial {
    base: Ultrapolynomial,
    xi: Vec<f64>,
}

impl ShiftedUltrapolynomial {
    pub fn base(&self) -> &Ultrapolynomial {
        &self.base
    }

    pub fn xi(&self) -> &[f64] {
        &self.xi
    }

    fn shifted(&self, w: &[Complex64]) -> Vec<Complex64> {
        w.iter().zip(&self.xi).map(|(w, x)| w - Complex64::new(0.0, *x)).collect()
    }

    pub fn eval_ln(&self, w: &[Complex64]) -> Result<Complex64> {
        self.base.eval_ln(&self.shifted(w))
    }

    pub fn eval(&self, w: &[Complex64]) -> Result<Complex64> {
        Ok(self.eval_ln(w)?.exp())
    }

    /// `P_ξ(η)` for real `η`.
    pub fn eval_real(&self, eta: &[f64]) -> Result<Complex64> {
        let w: Vec<Complex64> = eta.iter().map(|&e| Complex64::new(e, 0.0)).collect();
        self.eval(&w)
    }

    /// `min_η ln|P_ξ(η)| − M(s|η|/2)` (scalar `s`), resp. `− N_{2 s_p}(|η|)`.
    pub fn lower_bound_on_axis(&self, af: &AssociatedFunction, s: &Gain, etas: &[Vec<f64>]) -> Result<LowerBoundReport> {
        let halved = match s {
            Gain::Scalar(s) => Gain::Scalar(2.0 / s),
            Gain::Sequence(sp) => Gain::Sequence(sp.scaled(2.0)?),
        };
        let points: Vec<Vec<Complex64>> = etas
            .iter()
            .map(|e| self.shifted(&e.iter().map(|&v| Complex64::new(v, 0.0)).collect::<Vec<_>>()))
            .collect();
        // the gauge is taken at |η|, not at |η − iξ|
        let gauge = self.base.gauge_fn(af, &halved)?;
        let rows: Vec<(f64, f64)> = points
            .par_iter()
            .zip(etas)
            .map(|(w, e)| {
                let r = norm_real(e);
                Ok((r, self.base.eval_ln(w)?.re - gauge(r)?))
            })
            .collect::<Result<_>>()?;
        let (i, ln_ct) = rows
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, r)| if r.1 < acc.1 { (i, r.1) } else { acc });
        Ok(LowerBoundReport {
            ln_c_tilde: ln_ct,
            c_tilde: ln_ct.exp(),
            argmin_radius: rows[i].0,
            ln_c0: f64::NAN,
            c0: f64::NAN,
            positive: ln_ct.is_finite() && ln_ct.exp() > 0.0,
        })
    }

    /// `max ln|P_ξ(w)| − M(2L|w|)` for each `L`.
    pub fn upper_bound_certificate(
        &self,
        af: &AssociatedFunction,
        points: &[Vec<Complex64>],
        l_grid: &[f64],
    ) -> Result<UpperBoundReport> {
        let ln_abs: Vec<f64> = points.par_iter().map(|w| self.eval_ln(w).map(|v| v.re)).collect::<Result<_>>()?;
        let radii: Vec<f64> = points.iter().map(|w| norm(w)).collect();
        upper_certificate_from(af, &ln_abs, &radii, l_grid, 2.0)
    }
}

/// Grid on `W`: `n_u` points `u ∈ [−u_max, u_max]` along the first axis and
/// `n_v` imaginary parts `v ∈ [−c, c]` applied to every coordinate.
pub fn strip_grid(d: usize, u_max: f64, n_u: usize, c: f64, n_v: usize) -> Vec<Vec<Complex64>> {
    let us = linspace(-u_max, u_max, n_u);
    let vs = linspace(-c, c, n_v);
    let mut out = Vec::with_capacity(n_u * n_v);
    for &u in &us {
        for &v in &vs {
            let mut w = vec![Complex64::new(0.0, v); d];
            w[0].re = u;
            out.push(w);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PickLTrial {
    pub l: f64,
    pub ln_c2: f64,
    pub decays: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PickLReport {
    pub kind: PolyKind,
    /// `ln C″` of the verified inequality on the test grid.
    pub ln_c2: f64,
    pub decays: bool,
    pub trials: Vec<PickLTrial>,
}

/// Beurling: walk `l = 1, 1/2, …, 2^-20` until
/// `h(x) = 2M(2x/k) + M(x/k) − M(x/(4l))` is non-increasing over the outer
/// tenth of a log grid in `x`, and report `ln C″ = max h`.
///
/// Roumieu: `l_p = k'_p/(16H²)`, `k' = normalize(k/2)`, checked against
/// `2N_k(2x) + N_k(x) − N_{4l}(x)`.
pub fn pick_l_for_k(af: &AssociatedFunction, k: &Gain, h: Option<f64>) -> Result<PickLReport> {
    let m_top = af.max_rho();
    let x_grid = |x_max: f64| logspace(x_max * 1e-9, x_max, 400);
    match k {
        Gain::Scalar(k) => {
            if !(*k > 0.0) {
                return Err(invalid("k", "must be positive"));
            }
            let mut trials = Vec::new();
            for l in halving(20) {
                let x_max = (k * m_top / 2.0).min(4.0 * l * m_top);
                let hs: Vec<f64> = x_grid(x_max)
                    .iter()
                    .map(|&x| {
                        Ok(2.0 * af.eval_fast(2.0 * x / k)? + af.eval_fast(x / k)? - af.eval_fast(x / (4.0 * l))?)
                    })
                    .collect::<Result<_>>()?;
                let ln_c2 = hs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let decays = tail_non_increasing(&hs, 0.1, 1e-9) && hs[hs.len() - 1] < hs[hs.len() * 9 / 10];
                trials.push(PickLTrial { l, ln_c2, decays });
                if decays {
                    return Ok(PickLReport { kind: PolyKind::Beurling { l }, ln_c2, decays, trials });
                }
            }
            Err(Error::NotSatisfiable("no l in the halving grid down to 2^-20".into()))
        }
        Gain::Sequence(kp) => {
            let h = h.ok_or_else(|| invalid("H", "the Roumieu recipe needs the (M.2) constant H"))?;
            let half = kp.scaled(0.5)?;
            let k_prime = normalize_r_sequence(&half, growth_factor_for(&half))?;
            let l = k_prime.scaled(1.0 / (16.0 * h * h))?;
            let seq = af.sequence();
            let p = seq.p_max().min(kp.len());
            let seq = seq.truncated(p)?;
            let nk = RoumieuAssociatedFunction::new(&seq, kp)?;
            let n4l = RoumieuAssociatedFunction::new(&seq, &l.scaled(4.0)?)?;
            let x_max = (nk.max_rho() / 2.0).min(n4l.max_rho());
            let hs: Vec<f64> = x_grid(x_max)
                .iter()
                .map(|&x| Ok(2.0 * nk.eval_fast(2.0 * x)? + nk.eval_fast(x)? - n4l.eval_fast(x)?))
                .collect::<Result<_>>()?;
            let ln_c2 = hs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let decays = tail_non_increasing(&hs, 0.1, 1e-9);
            let kind = PolyKind::Roumieu { l };
            let l0 = match &kind {
                PolyKind::Roumieu { l } => l.values()[0],
                _ => unreachable!(),
            };
            Ok(PickLReport { kind, ln_c2, decays, trials: vec![PickLTrial { l: l0, ln_c2, decays }] })
        }
    }
}

fn growth_factor_for(k: &RSequence) -> f64 {
    if k.looks_unbounded(DEFAULT_GROWTH_FACTOR) {
        DEFAULT_GROWTH_FACTOR
    } else {
        1.2
    }
}

/// Doubling grid `1, 2, …, 1024` for the upper-bound search.
pub fn default_l_grid() -> Vec<f64> {
    doubling(10)
}
