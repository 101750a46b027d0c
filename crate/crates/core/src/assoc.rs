//! Associated functions `M(ρ) = sup_p ln_+(ρ^p / M_p)` and their Roumieu
//! variants, with the inverse on `[m_1, m_{p_max}]`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::weights_seq::{check_m1, modified_sequence, RSequence, WeightSequence};

/// Relative agreement demanded between the sup form and the counting form.
pub const FORM_AGREEMENT: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct AssociatedFunction {
    seq: WeightSequence,
    /// `B_n = M(m_n) = n ln m_n − ln M_n`, non-decreasing in `n`.
    breakpoints: Vec<f64>,
}

impl AssociatedFunction {
    /// Requires (M.1); without it the argmax index is not a counting index.
    pub fn new(seq: &WeightSequence) -> Result<Self> {
        let m1 = check_m1(seq);
        if let Some(p) = m1.first_fail {
            return Err(Error::NotLogConvex(p));
        }
        let lq = seq.ln_quotients();
        let lm = seq.log_m();
        let breakpoints = (0..=seq.p_max())
            .map(|n| if n == 0 { 0.0 } else { (n as f64 * lq[n] - lm[n]).max(0.0) })
            .collect();
        Ok(AssociatedFunction { seq: seq.clone(), breakpoints })
    }

    pub fn sequence(&self) -> &WeightSequence {
        &self.seq
    }

    pub fn m1(&self) -> f64 {
        self.seq.quotient(1)
    }

    /// Largest admissible argument, `m_{p_max}`.
    pub fn max_rho(&self) -> f64 {
        self.seq.quotient(self.seq.p_max())
    }

    /// `M(m_{p_max})`, the largest admissible input of [`Self::inverse`].
    pub fn max_value(&self) -> f64 {
        self.breakpoints[self.seq.p_max()]
    }

    fn guard(&self, rho: f64) -> Result<()> {
        if rho.is_nan() || rho < 0.0 {
            return Err(invalid("rho", format!("must be non-negative, got {rho}")));
        }
        let limit = self.max_rho();
        if rho > limit {
            return Err(Error::RangeExceeded { arg: rho, limit });
        }
        Ok(())
    }

    /// `#{p ≥ 1 : ln m_p ≤ ln ρ}`.
    fn count_le(&self, ln_rho: f64) -> usize {
        self.seq.ln_quotients()[1..].partition_point(|&lq| lq <= ln_rho)
    }

    /// Smallest maximizing index `#{p ≥ 1 : m_p < ρ}`.
    pub fn argmax(&self, rho: f64) -> Result<usize> {
        self.guard(rho)?;
        if rho == 0.0 {
            return Ok(0);
        }
        let ln_rho = rho.ln();
        Ok(self.seq.ln_quotients()[1..].partition_point(|&lq| lq < ln_rho))
    }

    /// `M(ρ)` from the counting identity `Σ_{m_p ≤ ρ} ln(ρ/m_p)`, cross-checked
    /// against the sup form `p* ln ρ − ln M_{p*}`.
    pub fn eval(&self, rho: f64) -> Result<f64> {
        self.guard(rho)?;
        if rho == 0.0 {
            return Ok(0.0);
        }
        let ln_rho = rho.ln();
        let n = self.count_le(ln_rho);
        let lq = self.seq.ln_quotients();
        // plain left-to-right summation keeps the result monotone in ρ
        let mut counting = 0.0;
        for &q in &lq[1..=n] {
            counting += ln_rho - q;
        }
        let p_star = self.seq.ln_quotients()[1..].partition_point(|&q| q < ln_rho);
        let sup = if p_star == 0 { 0.0 } else { (p_star as f64 * ln_rho - self.seq.log_m()[p_star]).max(0.0) };
        let scale = counting.abs().max(sup.abs());
        if (counting - sup).abs() > FORM_AGREEMENT * scale + 1e-14 {
            return Err(Error::FormulaMismatch(format!(
                "M({rho}): counting form {counting} vs sup form {sup}"
            )));
        }
        Ok(counting)
    }

    /// Sup form only; for heavy sweeps.
    pub fn eval_fast(&self, rho: f64) -> Result<f64> {
        self.guard(rho)?;
        if rho == 0.0 {
            return Ok(0.0);
        }
        let ln_rho = rho.ln();
        let n = self.count_le(ln_rho);
        if n == 0 {
            return Ok(0.0);
        }
        Ok((n as f64 * ln_rho - self.seq.log_m()[n]).max(0.0))
    }

    /// Brute-force `max_p (p ln ρ − ln M_p)_+` over the whole table.
    pub fn eval_brute(&self, rho: f64) -> f64 {
        if rho <= 0.0 {
            return 0.0;
        }
        let ln_rho = rho.ln();
        self.seq
            .log_m()
            .iter()
            .enumerate()
            .map(|(p, lm)| p as f64 * ln_rho - lm)
            .fold(0.0, f64::max)
    }

    pub fn eval_grid(&self, rhos: &[f64]) -> Result<Vec<f64>> {
        rhos.par_iter().map(|&r| self.eval(r)).collect()
    }

    /// Inverse of `M` on `[m_1, m_{p_max}]`; `inverse(0) = m_1`.
    ///
    /// On `[m_n, m_{n+1}]` the function is `n ln ρ − ln M_n`, so after locating
    /// the segment by binary search over the breakpoints the root is explicit.
    pub fn inverse(&self, y: f64) -> Result<f64> {
        if y.is_nan() || y < 0.0 {
            return Err(invalid("y", format!("must be non-negative, got {y}")));
        }
        let top = self.max_value();
        if y > top {
            return Err(Error::RangeExceeded { arg: y, limit: top });
        }
        if y == 0.0 {
            return Ok(self.m1());
        }
        // largest n with B_n ≤ y; B_1 = 0 so n ≥ 1
        let n = self.breakpoints[1..].partition_point(|&b| b <= y);
        let rho = ((y + self.seq.log_m()[n]) / n as f64).exp();
        Ok(rho.clamp(self.m1(), self.max_rho()))
    }
}

#[derive(Debug, Clone)]
pub struct RoumieuAssociatedFunction {
    r: RSequence,
    inner: AssociatedFunction,
}

impl RoumieuAssociatedFunction {
    /// `N_{r_p}`, the associated function of `M_p Π_{j≤p} r_j`.
    pub fn new(seq: &WeightSequence, r: &RSequence) -> Result<Self> {
        let modified = modified_sequence(seq, r)?;
        Ok(RoumieuAssociatedFunction { r: r.clone(), inner: AssociatedFunction::new(&modified)? })
    }

    pub fn r(&self) -> &RSequence {
        &self.r
    }

    pub fn as_associated(&self) -> &AssociatedFunction {
        &self.inner
    }

    pub fn eval(&self, rho: f64) -> Result<f64> {
        self.inner.eval(rho)
    }

    pub fn eval_fast(&self, rho: f64) -> Result<f64> {
        self.inner.eval_fast(rho)
    }

    pub fn max_rho(&self) -> f64 {
        self.inner.max_rho()
    }
}

/// `M(λ+ν) − M(2λ) − M(2ν) − ln 2`; the inequality holds when this is `≤ 0`.
pub fn check_split_inequality(af: &AssociatedFunction, lambda: f64, nu: f64) -> Result<f64> {
    Ok(af.eval(lambda + nu)? - af.eval(2.0 * lambda)? - af.eval(2.0 * nu)? - std::f64::consts::LN_2)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominanceReport {
    pub k: f64,
    /// Smallest grid point past which `N(ρ) ≤ M(kρ)` holds on the grid.
    pub rho0: Option<f64>,
    pub last_violation: Option<f64>,
    pub grid_max: f64,
    pub witnessed: bool,
}

/// Scan for `ρ_0` with `N_{r_p}(ρ) ≤ M(kρ)` at every grid point `ρ > ρ_0`.
pub fn check_dominance(
    af: &AssociatedFunction,
    raf: &RoumieuAssociatedFunction,
    k: f64,
    rho_grid: &[f64],
) -> Result<DominanceReport> {
    if !(k > 0.0) {
        return Err(invalid("k", format!("must be positive, got {k}")));
    }
    if rho_grid.is_empty() {
        return Err(invalid("rho_grid", "empty"));
    }
    let ok: Vec<bool> = rho_grid
        .par_iter()
        .map(|&rho| Ok(raf.eval(rho)? <= af.eval(k * rho)?))
        .collect::<Result<_>>()?;
    let last_bad = ok.iter().rposition(|&b| !b);
    let grid_max = rho_grid[rho_grid.len() - 1];
    let (rho0, witnessed) = match last_bad {
        None => (Some(rho_grid[0]), true),
        Some(i) if i + 1 < rho_grid.len() => (Some(rho_grid[i + 1]), true),
        Some(_) => (None, false),
    };
    Ok(DominanceReport {
        k,
        rho0,
        last_violation: last_bad.map(|i| rho_grid[i]),
        grid_max,
        witnessed,
    })
}
