use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::Arc;

use crate::error::{invalid, Error, Result};
use crate::numerics::adaptive_simpson;

pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type ComplexFn = Arc<dyn Fn(&[Complex64]) -> Complex64 + Send + Sync>;

/// Truncation threshold relative to the peak of `|e^{−xξ}T(x)|`.
pub const TRUNCATION: f64 = 1e-14;
/// Absolute quadrature tolerance per unit length, relative to the peak.
const QUAD_TOL: f64 = 1e-13;
const SCAN_STEP: f64 = 0.25;
const MAX_SCAN: usize = 400_000;

#[derive(Clone)]
pub enum DistributionKind {
    /// `δ_a`.
    Delta { a: Vec<f64> },
    /// `∂^α δ_a`.
    DeltaDerivative { a: Vec<f64>, alpha: Vec<usize> },
    /// A locally integrable function on `ℝ` supported in `support`.
    Function { eval: RealFn, support: (f64, f64) },
}

impl fmt::Debug for DistributionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DistributionKind::Delta { a } => write!(f, "Delta {{ a: {a:?} }}"),
            DistributionKind::DeltaDerivative { a, alpha } => write!(f, "DeltaDerivative {{ a: {a:?}, alpha: {alpha:?} }}"),
            DistributionKind::Function { support, .. } => write!(f, "Function {{ support: {support:?} }}"),
        }
    }
}

/// A catalog distribution `T` with its domain `B` (an open box on which
/// `e^{−xξ}T` is temperate) and, when known, the closed form of `ℒ(T)`.
#[derive(Clone)]
pub struct TestDistribution {
    name: String,
    kind: DistributionKind,
    domain: Vec<(f64, f64)>,
    closed_form: Option<ComplexFn>,
}

impl fmt::Debug for TestDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TestDistribution")
            .field("name", &self.name)
            .field("kind", &self.kind)
            .field("domain", &self.domain)
            .field("closed_form", &self.closed_form.is_some())
            .finish()
    }
}

fn dot(a: &[f64], z: &[Complex64]) -> Complex64 {
    a.iter().zip(z).map(|(a, z)| z * a).sum()
}

impl TestDistribution {
    pub fn delta(a: Vec<f64>) -> Result<Self> {
        if a.is_empty() || a.iter().any(|v| !v.is_finite()) {
            return Err(invalid("a", "need a finite point"));
        }
        let d = a.len();
        let at = a.clone();
        Ok(TestDistribution {
            name: format!("delta{a:?}"),
            kind: DistributionKind::Delta { a },
            domain: vec![(f64::NEG_INFINITY, f64::INFINITY); d],
            closed_form: Some(Arc::new(move |z| (-dot(&at, z)).exp())),
        })
    }

    /// `⟨∂^α δ_a, e^{−xζ}⟩ = ζ^α e^{−aζ}`.
    pub fn delta_derivative(a: Vec<f64>, alpha: Vec<usize>) -> Result<Self> {
        if a.is_empty() || a.len() != alpha.len() {
            return Err(invalid("alpha", "must match the dimension of a"));
        }
        let d = a.len();
        let (at, al) = (a.clone(), alpha.clone());
        Ok(TestDistribution {
            name: format!("delta_derivative{alpha:?}{a:?}"),
            kind: DistributionKind::DeltaDerivative { a, alpha },
            domain: vec![(f64::NEG_INFINITY, f64::INFINITY); d],
            closed_form: Some(Arc::new(move |z| {
                let mono: Complex64 = z.iter().zip(&al).map(|(z, &k)| z.powu(k as u32)).product();
                mono * (-dot(&at, z)).exp()
            })),
        })
    }

    /// `e^{−x²}` with `ℒ = √π e^{ζ²/4}`.
    pub fn gaussian() -> Self {
        TestDistribution {
            name: "gaussian".into(),
            kind: DistributionKind::Function {
                eval: Arc::new(|x| (-x * x).exp()),
                support: (f64::NEG_INFINITY, f64::INFINITY),
            },
            domain: vec![(f64::NEG_INFINITY, f64::INFINITY)],
            closed_form: Some(Arc::new(|z| std::f64::consts::PI.sqrt() * (z[0] * z[0] / 4.0).exp())),
        }
    }

    /// `H(x)e^{−x}` with `ℒ = 1/(1+ζ)` on `B = (−1 + δ, ∞)`.
    pub fn one_sided_exp(delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(invalid("delta", "need 0 < delta < 1"));
        }
        Ok(TestDistribution {
            name: "one_sided_exp".into(),
            kind: DistributionKind::Function { eval: Arc::new(|x| (-x).exp()), support: (0.0, f64::INFINITY) },
            domain: vec![(-1.0 + delta, f64::INFINITY)],
            closed_form: Some(Arc::new(|z| Complex64::new(1.0, 0.0) / (1.0 + z[0]))),
        })
    }

    /// A function on `ℝ` with domain `B = (b.0, b.1)`.
    pub fn function(name: &str, eval: RealFn, support: (f64, f64), b: (f64, f64), closed_form: Option<ComplexFn>) -> Result<Self> {
        if !(support.0 < support.1) || !(b.0 < b.1) {
            return Err(invalid("support", "need non-empty intervals"));
        }
        Ok(TestDistribution {
            name: name.into(),
            kind: DistributionKind::Function { eval, support },
            domain: vec![b],
            closed_form,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> &DistributionKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.domain.len()
    }

    pub fn domain(&self) -> &[(f64, f64)] {
        &self.domain
    }

    pub fn has_closed_form(&self) -> bool {
        self.closed_form.is_some()
    }

    pub fn in_domain(&self, xi: &[f64]) -> bool {
        xi.len() == self.dim() && xi.iter().zip(&self.domain).all(|(x, (a, b))| a < x && x < b)
    }

    pub fn closed_form(&self, zeta: &[Complex64]) -> Option<Complex64> {
        self.closed_form.as_ref().map(|f| f(zeta))
    }

    /// `ℒ(T)(ζ)`: the pairing for point masses, quadrature for functions.
    pub fn transform(&self, zeta: &[Complex64]) -> Result<Complex64> {
        if zeta.len() != self.dim() {
            return Err(invalid("zeta", format!("expected {} components", self.dim())));
        }
        let xi: Vec<f64> = zeta.iter().map(|z| z.re).collect();
        if !self.in_domain(&xi) {
            return Err(Error::IntegrabilityViolated(xi));
        }
        match &self.kind {
            DistributionKind::Delta { .. } | DistributionKind::DeltaDerivative { .. } => {
                Ok(self.closed_form(zeta).expect("point masses carry their pairing"))
            }
            DistributionKind::Function { eval, support } => laplace_quadrature(eval.as_ref(), *support, zeta[0]),
        }
    }
}

/// Serializable catalog selector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistributionSpec {
    Delta {
        #[serde(default = "origin")]
        a: Vec<f64>,
    },
    DeltaDerivative {
        a: Vec<f64>,
        alpha: Vec<usize>,
    },
    Gaussian,
    OneSidedExp {
        #[serde(default = "default_margin")]
        delta: f64,
    },
}

fn origin() -> Vec<f64> {
    vec![0.0]
}

fn default_margin() -> f64 {
    0.05
}

impl DistributionSpec {
    pub fn build(&self) -> Result<TestDistribution> {
        match self {
            DistributionSpec::Delta { a } => TestDistribution::delta(a.clone()),
            DistributionSpec::DeltaDerivative { a, alpha } => TestDistribution::delta_derivative(a.clone(), alpha.clone()),
            DistributionSpec::Gaussian => Ok(TestDistribution::gaussian()),
            DistributionSpec::OneSidedExp { delta } => TestDistribution::one_sided_exp(*delta),
        }
    }
}

fn ln_abs(f: &dyn Fn(f64) -> f64, x: f64, xi: f64) -> f64 {
    let v = f(x).abs();
    if v > 0.0 {
        v.ln() - x * xi
    } else {
        f64::NEG_INFINITY
    }
}

/// Walk from `x0` in steps of `dir·SCAN_STEP` until eight consecutive samples
/// fall below the running peak by more than the truncation threshold.
fn scan(f: &dyn Fn(f64) -> f64, xi: f64, x0: f64, dir: f64, limit: f64, peak: &mut f64) -> Result<f64> {
    let cut = -(TRUNCATION.ln()) + 2.0;
    let mut below = 0;
    let mut x = x0;
    for _ in 0..MAX_SCAN {
        let next = x + dir * SCAN_STEP;
        if (dir > 0.0 && next >= limit) || (dir < 0.0 && next <= limit) {
            return Ok(limit);
        }
        x = next;
        let v = ln_abs(f, x, xi);
        if !v.is_finite() && v > 0.0 {
            return Err(Error::IntegrabilityViolated(vec![xi]));
        }
        *peak = peak.max(v);
        if v < *peak - cut {
            below += 1;
            if below >= 8 {
                return Ok(x);
            }
        } else {
            below = 0;
        }
    }
    Err(Error::IntegrabilityViolated(vec![xi]))
}

/// `∫ e^{−xζ} T(x) dx` on the support, truncated where the integrand drops
/// below [`TRUNCATION`] of its peak, by adaptive Simpson on panels of width
/// at most `min(1/2, π/(2|η|))`.
pub fn laplace_quadrature(f: &dyn Fn(f64) -> f64, support: (f64, f64), zeta: Complex64) -> Result<Complex64> {
    let (xi, eta) = (zeta.re, zeta.im);
    let x0 = 0.0f64.clamp(support.0, support.1);
    let x0 = if x0 == support.1 && support.1.is_finite() { support.1 - SCAN_STEP.min(0.5 * (support.1 - support.0)) } else { x0 };
    let mut peak = ln_abs(f, x0, xi).max(f64::MIN);
    let hi = scan(f, xi, x0, 1.0, support.1, &mut peak)?;
    let lo = scan(f, xi, x0, -1.0, support.0, &mut peak)?;
    if !peak.is_finite() || peak == f64::MIN {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let scale = peak.exp();
    let width = if eta == 0.0 { 0.5 } else { 0.5f64.min(std::f64::consts::PI / (2.0 * eta.abs())) };
    let n = ((hi - lo) / width).ceil().max(1.0) as usize;
    let h = (hi - lo) / n as f64;
    let integrand = |x: f64| -> Complex64 { (-zeta * x).exp() * f(x) };
    let mut total = Complex64::new(0.0, 0.0);
    let mut comp = Complex64::new(0.0, 0.0);
    for i in 0..n {
        let a = lo + i as f64 * h;
        let b = if i + 1 == n { hi } else { a + h };
        let part = adaptive_simpson(&integrand, a, b, QUAD_TOL * scale * h, 40)?;
        let y = part - comp;
        let t = total + y;
        comp = (t - total) - y;
        total = t;
    }
    Ok(total)
}

/// Samples of `f(ξ + iη)` on a product grid; `values[i][k]` sits at `(xi[i], eta[k])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformGrid {
    pub xi: Vec<f64>,
    pub eta: Vec<f64>,
    pub h_eta: f64,
    pub r_eta: f64,
    pub values: Vec<Vec<Complex64>>,
}

fn uniform_spacing(v: &[f64], name: &'static str) -> Result<f64> {
    if v.len() < 2 {
        return Err(invalid(name, "needs at least two points"));
    }
    let h = (v[v.len() - 1] - v[0]) / (v.len() - 1) as f64;
    if !(h > 0.0) || v.iter().enumerate().any(|(i, x)| (x - (v[0] + i as f64 * h)).abs() > 1e-9 * h.max(x.abs())) {
        return Err(invalid(name, "must be uniform and increasing"));
    }
    Ok(h)
}

/// Spacing of a uniform symmetric `η`-grid.
pub(crate) fn check_eta_grid(eta: &[f64]) -> Result<f64> {
    let h = uniform_spacing(eta, "eta")?;
    if (eta[0] + eta[eta.len() - 1]).abs() > 1e-9 * h {
        return Err(invalid("eta", "must be symmetric about 0"));
    }
    Ok(h)
}

pub(crate) fn spacing(v: &[f64], name: &'static str) -> Result<f64> {
    uniform_spacing(v, name)
}

impl TransformGrid {
    /// Samples a function of `ζ` directly.
    pub fn from_fn<F>(xi: &[f64], eta: &[f64], f: F) -> Result<Self>
    where
        F: Fn(Complex64) -> Result<Complex64> + Sync,
    {
        let h_eta = check_eta_grid(eta)?;
        let values = xi
            .par_iter()
            .map(|&x| eta.iter().map(|&e| f(Complex64::new(x, e))).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        let grid = TransformGrid { xi: xi.to_vec(), eta: eta.to_vec(), h_eta, r_eta: eta[eta.len() - 1], values };
        if grid.values.iter().flatten().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::QuadratureUnstable("non-finite transform sample".into()));
        }
        Ok(grid)
    }

    /// The closed-form transform of `T` on the grid.
    pub fn closed_form(t: &TestDistribution, xi: &[f64], eta: &[f64]) -> Result<Self> {
        if t.dim() != 1 || !t.has_closed_form() {
            return Err(invalid("T", "needs a one-dimensional distribution with a closed form"));
        }
        Self::from_fn(xi, eta, |z| {
            if !t.in_domain(&[z.re]) {
                return Err(Error::IntegrabilityViolated(vec![z.re]));
            }
            Ok(t.closed_form(&[z]).unwrap())
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().flatten().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// `(ξ, η, Re f, Im f)` rows in grid order.
    pub fn rows(&self) -> impl Iterator<Item = (f64, f64, f64, f64)> + '_ {
        self.xi.iter().zip(&self.values).flat_map(move |(&x, row)| {
            self.eta.iter().zip(row).map(move |(&e, v)| (x, e, v.re, v.im))
        })
    }
}

/// `ℒ(T)` on the grid `ξ × η` (`d = 1`); every `ξ` must lie inside `B`.
pub fn laplace_forward(t: &TestDistribution, xi: &[f64], eta: &[f64]) -> Result<TransformGrid> {
    if t.dim() != 1 {
        return Err(invalid("T", "transform grids are one-dimensional"));
    }
    if let Some(&x) = xi.iter().find(|&&x| !t.in_domain(&[x])) {
        return Err(Error::IntegrabilityViolated(vec![x]));
    }
    let h_eta = check_eta_grid(eta)?;
    let points: Vec<(usize, f64)> = (0..xi.len()).flat_map(|i| eta.iter().map(move |&e| (i, e))).collect();
    let flat: Vec<Complex64> = points
        .par_iter()
        .map(|&(i, e)| t.transform(&[Complex64::new(xi[i], e)]))
        .collect::<Result<_>>()?;
    let values = flat.chunks(eta.len()).map(|c| c.to_vec()).collect();
    Ok(TransformGrid { xi: xi.to_vec(), eta: eta.to_vec(), h_eta, r_eta: eta[eta.len() - 1], values })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormReport {
    pub max_rel_err: f64,
    pub argmax: (f64, f64),
    pub points: usize,
}

/// Largest `|f − f_closed|/|f_closed|` over the grid.
pub fn closed_form_agreement(t: &TestDistribution, grid: &TransformGrid) -> Result<ClosedFormReport> {
    if !t.has_closed_form() {
        return Err(invalid("T", "no closed form"));
    }
    let mut worst = (0.0, (f64::NAN, f64::NAN));
    for (&x, row) in grid.xi.iter().zip(&grid.values) {
        for (&e, v) in grid.eta.iter().zip(row) {
            let c = t.closed_form(&[Complex64::new(x, e)]).unwrap();
            let err = (v - c).norm() / c.norm();
            if !(err <= worst.0) {
                worst = (err, (x, e));
            }
        }
    }
    Ok(ClosedFormReport { max_rel_err: worst.0, argmax: worst.1, points: grid.xi.len() * grid.eta.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::linspace;

    #[test]
    fn pairings() {
        let d0 = TestDistribution::delta(vec![0.0]).unwrap();
        for z in [Complex64::new(0.3, -2.0), Complex64::new(-4.0, 7.0)] {
            assert_eq!(d0.transform(&[z]).unwrap(), Complex64::new(1.0, 0.0));
        }
        let da = TestDistribution::delta(vec![1.5, -0.5]).unwrap();
        let z = [Complex64::new(0.2, 1.0), Complex64::new(-0.1, 0.3)];
        let want = (-(z[0] * 1.5 - z[1] * 0.5)).exp();
        assert!((da.transform(&z).unwrap() - want).norm() < 1e-15);
        let dd = TestDistribution::delta_derivative(vec![0.0], vec![2]).unwrap();
        let z = Complex64::new(0.5, 2.0);
        assert!((dd.transform(&[z]).unwrap() - z * z).norm() < 1e-14);
    }

    #[test]
    fn gaussian_quadrature() {
        let g = TestDistribution::gaussian();
        let grid = laplace_forward(&g, &[-0.5, 0.0, 0.7], &linspace(-5.0, 5.0, 21)).unwrap();
        let rep = closed_form_agreement(&g, &grid).unwrap();
        assert!(rep.max_rel_err < 1e-8, "{rep:?}");
    }

    #[test]
    fn one_sided_quadrature() {
        let t = TestDistribution::one_sided_exp(0.05).unwrap();
        let grid = laplace_forward(&t, &[-0.5, 0.0, 1.0], &linspace(-5.0, 5.0, 11)).unwrap();
        let rep = closed_form_agreement(&t, &grid).unwrap();
        assert!(rep.max_rel_err < 1e-8, "{rep:?}");
        assert_eq!(
            t.transform(&[Complex64::new(-0.95, 0.0)]).unwrap_err(),
            Error::IntegrabilityViolated(vec![-0.95])
        );
    }

    #[test]
    fn grid_shape() {
        assert!(TransformGrid::from_fn(&[0.0], &[0.0, 1.0], |z| Ok(z)).is_err());
        let g = TransformGrid::from_fn(&[0.0, 1.0], &linspace(-1.0, 1.0, 3), |z| Ok(z)).unwrap();
        assert_eq!(g.rows().count(), 6);
        assert_eq!(g.h_eta, 1.0);
    }
}
