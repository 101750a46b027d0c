//! Shared numerical kernels: log-sum-exp, adaptive Simpson quadrature,
//! polytorus Cauchy differentiation, a scaled Hurwitz zeta, and the
//! boundary-trend test used by every grid certificate.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// `ln(sum(exp(v)))` with max-shift. Empty input yields `-inf`.
pub fn logsumexp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Complex log-sum-exp, shifting by the largest real part. The imaginary
/// part of the result is only defined modulo `2π`.
pub fn logsumexp_complex(values: &[Complex64]) -> Complex64 {
    let shift = values.iter().map(|v| v.re).fold(f64::NEG_INFINITY, f64::max);
    if !shift.is_finite() {
        return Complex64::new(shift, 0.0);
    }
    let sum: Complex64 = values.iter().map(|v| (v - shift).exp()).sum();
    sum.ln() + shift
}

/// Neumaier-compensated sum.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Smallest representable value strictly above `x` (finite `x`).
pub fn next_up(x: f64) -> f64 {
    if x.is_nan() || x == f64::INFINITY {
        return x;
    }
    if x == 0.0 {
        return f64::from_bits(1);
    }
    let bits = x.to_bits();
    if x > 0.0 {
        f64::from_bits(bits + 1)
    } else {
        f64::from_bits(bits - 1)
    }
}

/// `true` when the last `frac` share of `values` (at least two points) is
/// non-increasing, allowing `slack * max(1, |v|)` of upward noise per step.
///
/// This is the "ratio decays at the grid boundary" test shared by all
/// growth certificates.
pub fn tail_non_increasing(values: &[f64], frac: f64, slack: f64) -> bool {
    if values.len() < 2 {
        return true;
    }
    let band = ((values.len() as f64 * frac).ceil() as usize).clamp(2, values.len());
    let start = values.len() - band;
    values[start..]
        .windows(2)
        .all(|w| w[1] <= w[0] + slack * w[0].abs().max(1.0))
}

/// Adaptive Simpson quadrature of a complex integrand over `[a, b]` with
/// absolute tolerance `tol`.
pub fn adaptive_simpson<F>(f: &F, a: f64, b: f64, tol: f64, max_depth: u32) -> Result<Complex64>
where
    F: Fn(f64) -> Complex64,
{
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, max_depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F>(
    f: &F,
    a: f64,
    b: f64,
    fa: Complex64,
    fm: Complex64,
    fb: Complex64,
    whole: Complex64,
    tol: f64,
    depth: u32,
) -> Result<Complex64>
where
    F: Fn(f64) -> Complex64,
{
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if delta.norm() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(Error::QuadratureUnstable(format!(
            "adaptive Simpson exhausted its depth on [{a}, {b}] (error estimate {:.3e})",
            delta.norm() / 15.0
        )));
    }
    let l = simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?;
    let r = simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?;
    Ok(l + r)
}

/// All multi-indices in `d` variables with total order `<= max_order`,
/// ordered by total order and then lexicographically.
pub fn multi_indices(d: usize, max_order: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for order in 0..=max_order {
        let mut current = vec![0usize; d];
        compositions(order, 0, &mut current, &mut out);
    }
    out
}

fn compositions(remaining: usize, pos: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if pos + 1 == current.len() {
        current[pos] = remaining;
        out.push(current.clone());
        return;
    }
    for k in (0..=remaining).rev() {
        current[pos] = k;
        compositions(remaining - k, pos + 1, current, out);
    }
    current[pos] = 0;
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

pub fn multi_factorial(alpha: &[usize]) -> f64 {
    alpha.iter().map(|&a| factorial(a)).product()
}

pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Result of a polytorus Cauchy differentiation.
#[derive(Debug, Clone)]
pub struct CauchyDerivatives {
    pub indices: Vec<Vec<usize>>,
    pub values: Vec<Complex64>,
    /// `max |f|` over the quadrature nodes of the final torus.
    pub node_max: f64,
    pub nodes_per_circle: usize,
}

impl CauchyDerivatives {
    pub fn get(&self, alpha: &[usize]) -> Option<Complex64> {
        self.indices
            .iter()
            .position(|a| a.as_slice() == alpha)
            .map(|i| self.values[i])
    }
}

/// Partial derivatives `∂^α f(x)` for the requested multi-indices, from the
/// trapezoidal rule on the polytorus `T_r(x)`:
///
/// `∂^α f(x) = α!/r^{|α|} · mean_θ f(x + r e^{iθ}) e^{-i α·θ}`.
///
/// The node count starts at `n_theta` per circle and is doubled until two
/// successive results agree to `1e-8` relative (values that vanish by
/// symmetry are compared against `1e-6` of their Cauchy scale instead).
pub fn cauchy_derivatives<F>(
    f: &F,
    x: &[f64],
    r: f64,
    n_theta: usize,
    indices: &[Vec<usize>],
) -> Result<CauchyDerivatives>
where
    F: Fn(&[Complex64]) -> Complex64,
{
    let d = x.len();
    let max_nodes = if d == 1 { 4096 } else { 512 };
    let mut n = n_theta.max(8);
    let mut prev = cauchy_pass(f, x, r, n, indices);
    while n < max_nodes {
        n *= 2;
        let next = cauchy_pass(f, x, r, n, indices);
        let stable = indices.iter().enumerate().all(|(i, alpha)| {
            let order: usize = alpha.iter().sum();
            let scale = multi_factorial(alpha) / r.powi(order as i32) * next.1;
            let diff = (next.0[i] - prev.0[i]).norm();
            diff <= 1e-8 * next.0[i].norm().max(1e-6 * scale)
        });
        if stable {
            return Ok(CauchyDerivatives {
                indices: indices.to_vec(),
                values: next.0,
                node_max: next.1,
                nodes_per_circle: n,
            });
        }
        prev = next;
    }
    Err(Error::QuadratureUnstable(format!(
        "Cauchy quadrature at x = {x:?}, r = {r} unstable up to {max_nodes} nodes per circle"
    )))
}

fn cauchy_pass<F>(f: &F, x: &[f64], r: f64, n: usize, indices: &[Vec<usize>]) -> (Vec<Complex64>, f64)
where
    F: Fn(&[Complex64]) -> Complex64,
{
    let d = x.len();
    let roots: Vec<Complex64> = (0..n)
        .map(|k| Complex64::from_polar(1.0, 2.0 * PI * k as f64 / n as f64))
        .collect();
    let total = n.pow(d as u32);
    let mut sums = vec![Complex64::new(0.0, 0.0); indices.len()];
    let mut node_max = 0.0_f64;
    let mut point = vec![Complex64::new(0.0, 0.0); d];
    let mut digits = vec![0usize; d];
    for flat in 0..total {
        let mut rem = flat;
        for j in 0..d {
            digits[j] = rem % n;
            rem /= n;
            point[j] = Complex64::new(x[j], 0.0) + r * roots[digits[j]];
        }
        let value = f(&point);
        node_max = node_max.max(value.norm());
        for (s, alpha) in sums.iter_mut().zip(indices) {
            // e^{-i α·θ} is the conjugate of Π roots[(α_j k_j) mod n]
            let mut phase = Complex64::new(1.0, 0.0);
            for j in 0..d {
                phase *= roots[(alpha[j] * digits[j]) % n];
            }
            *s += value * phase.conj();
        }
    }
    let values = sums
        .into_iter()
        .zip(indices)
        .map(|(s, alpha)| {
            let order: usize = alpha.iter().sum();
            s / total as f64 * multi_factorial(alpha) / r.powi(order as i32)
        })
        .collect();
    (values, node_max)
}

/// Step of the central-difference cross-check of first derivatives.
pub const FD_STEP: f64 = 1e-4;

/// Largest relative discrepancy between the first-order entries of `d` and
/// central differences of the real function `f` with step [`FD_STEP`].
/// Derivatives that nearly vanish are measured against `1e-3 |f(x)|`.
pub fn first_order_fd_error<F>(f: &F, x: &[f64], d: &CauchyDerivatives) -> f64
where
    F: Fn(&[f64]) -> f64,
{
    let f0 = f(x).abs();
    let mut worst: f64 = 0.0;
    for j in 0..x.len() {
        let mut e = vec![0usize; x.len()];
        e[j] = 1;
        let Some(v) = d.get(&e) else { continue };
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[j] += FD_STEP;
        xm[j] -= FD_STEP;
        let fd = (f(&xp) - f(&xm)) / (2.0 * FD_STEP);
        let err = (fd - v.re).abs() / v.norm().max(1e-3 * f0);
        worst = worst.max(if err.is_nan() { f64::INFINITY } else { err });
    }
    worst
}

/// Largest `|f|` over `m` equispaced samples per circle of the polytorus
/// `T_r(x)`; a sampled stand-in for the torus supremum in Cauchy estimates.
pub fn torus_sup<F>(f: &F, x: &[f64], r: f64, m: usize) -> f64
where
    F: Fn(&[Complex64]) -> Complex64,
{
    let d = x.len();
    let total = m.pow(d as u32);
    let mut point = vec![Complex64::new(0.0, 0.0); d];
    let mut best = 0.0_f64;
    for flat in 0..total {
        let mut rem = flat;
        for j in 0..d {
            let k = rem % m;
            rem /= m;
            point[j] = Complex64::new(x[j], 0.0) + Complex64::from_polar(r, 2.0 * PI * k as f64 / m as f64);
        }
        best = best.max(f(&point).norm());
    }
    best
}

const BERNOULLI_EVEN: [f64; 8] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
];

/// `N^a · ζ(a, N) = Σ_{k≥0} (1 + k/N)^{-a}` for `a > 1`, `N ≥ 1`, via
/// direct summation followed by an Euler–Maclaurin tail.
pub fn scaled_hurwitz_zeta(a: f64, n: f64) -> f64 {
    debug_assert!(a > 1.0 && n >= 1.0);
    let start = (a + 16.0).max(n + 8.0).max(24.0);
    let k_direct = (start - n).ceil().max(0.0) as usize;
    let mut sum = 0.0;
    for k in 0..k_direct {
        sum += (-a * (k as f64 / n).ln_1p()).exp();
    }
    let m = n + k_direct as f64;
    let lead = (-a * (m / n).ln()).exp();
    let mut bracket = m / (a - 1.0) + 0.5;
    // (a)_{2j-1} m^{-(2j-1)}, advanced by (a+2j-1)(a+2j)/m^2 and the factorial ratio
    let mut rising = a / m;
    let mut fact = 2.0;
    for (j, b) in BERNOULLI_EVEN.iter().enumerate() {
        let term = b / fact * rising;
        bracket += term;
        if term.abs() < 1e-18 * bracket.abs() {
            break;
        }
        let p = (2 * j + 1) as f64;
        rising *= (a + p) * (a + p + 1.0) / (m * m);
        fact *= (p + 2.0) * (p + 3.0);
    }
    sum + lead * bracket
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn logsumexp_matches_naive_in_safe_range() {
        let v = [-1.0, -2.0, -3.0];
        let naive = v.iter().map(|x: &f64| x.exp()).sum::<f64>().ln();
        assert!((logsumexp(&v) - naive).abs() < 1e-15);
        assert_eq!(logsumexp(&[]), f64::NEG_INFINITY);
        assert!((logsumexp(&[1000.0, 1000.0]) - (1000.0 + 2f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn hurwitz_matches_brute_force() {
        for &(a, n) in &[(2.0, 1.0), (4.0, 1.0), (3.0, 7.0), (6.0, 300.0), (80.0, 12.0), (2.5, 1000.0)] {
            // brute force with an integral tail bound, far enough out to be negligible
            let terms = 2_000_000usize;
            let mut brute = 0.0;
            for k in (0..terms).rev() {
                brute += (1.0 + k as f64 / n).powf(-a);
            }
            let m: f64 = n + terms as f64;
            brute += (m / n).powf(-a) * (m / (a - 1.0) - 0.5);
            let fast = scaled_hurwitz_zeta(a, n);
            assert!((fast - brute).abs() <= 1e-11 * brute, "a={a} n={n}: {fast} vs {brute}");
        }
        // ζ(2) = π²/6
        assert!((scaled_hurwitz_zeta(2.0, 1.0) - PI * PI / 6.0).abs() < 1e-14);
    }

    #[test]
    fn cauchy_derivatives_of_exponential() {
        let f = |z: &[Complex64]| (z[0] * 0.7).exp();
        let idx = multi_indices(1, 6);
        let d = cauchy_derivatives(&f, &[0.3], 0.5, 64, &idx).unwrap();
        for (alpha, v) in idx.iter().zip(&d.values) {
            let exact = 0.7f64.powi(alpha[0] as i32) * (0.21f64).exp();
            assert!((v.re - exact).abs() < 1e-9 * exact, "{alpha:?}");
        }
    }

    #[test]
    fn multi_index_enumeration_counts() {
        assert_eq!(multi_indices(1, 6).len(), 7);
        assert_eq!(multi_indices(2, 4).len(), 15);
        assert_eq!(multi_indices(3, 2).len(), 10);
        assert_eq!(multi_indices(2, 1), vec![vec![0, 0], vec![1, 0], vec![0, 1]]);
    }

    #[test]
    fn simpson_integrates_oscillatory_gaussian() {
        let f = |x: f64| Complex64::new(0.0, -3.0 * x).exp() * (-x * x).exp();
        let v = adaptive_simpson(&f, -8.0, 8.0, 1e-14, 40).unwrap();
        let exact = PI.sqrt() * (-9.0f64 / 4.0).exp();
        assert!((v.re - exact).abs() < 1e-11);
        assert!(v.im.abs() < 1e-11);
    }

    #[test]
    fn trend_detection() {
        assert!(tail_non_increasing(&[1.0, 3.0, 2.0, 1.0], 0.5, 0.0));
        assert!(!tail_non_increasing(&[1.0, 2.0, 3.0, 4.0], 0.5, 0.0));
        assert!(next_up(1.0) > 1.0);
    }
}
