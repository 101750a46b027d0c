//! Weight sequences `M_p`, the conditions (M.1)–(M.3), positive increasing
//! sequences `(r_p)` and their normalization.
//!
//! Everything is stored in log domain: `M_p = p!^s` overflows an `f64` near
//! `p = 170 / s`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Absolute slack, in log domain, for every pass/fail inequality.
pub const LOG_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Generator {
    /// `M_p = p!^s`.
    Gevrey { s: f64 },
    /// Explicit values `M_0..M_{p_max}` with no closed form.
    Table,
    /// `N_p = M_p Π_{j≤p} r_j` on top of another generator.
    Modified { base: Box<Generator>, r: RSequence },
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightSequence {
    log_m: Vec<f64>,
    ln_q: Vec<f64>,
    generator: Generator,
}

/// Running Neumaier sum, used for cumulative log sums.
#[derive(Default, Clone, Copy)]
struct Accumulator {
    sum: f64,
    comp: f64,
}

impl Accumulator {
    fn add(&mut self, v: f64) -> f64 {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
        self.sum + self.comp
    }
}

/// `M_p = p!^s` for `p = 0..=p_max`.
pub fn make_gevrey(s: f64, p_max: usize) -> Result<WeightSequence> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(invalid("s", format!("Gevrey order must be positive, got {s}")));
    }
    if p_max < 2 {
        return Err(invalid("p_max", format!("need p_max >= 2, got {p_max}")));
    }
    let mut log_m = Vec::with_capacity(p_max + 1);
    let mut ln_q = Vec::with_capacity(p_max + 1);
    log_m.push(0.0);
    ln_q.push(0.0);
    let mut acc = Accumulator::default();
    for p in 1..=p_max {
        let lp = (p as f64).ln();
        log_m.push(s * acc.add(lp));
        ln_q.push(s * lp);
    }
    Ok(WeightSequence { log_m, ln_q, generator: Generator::Gevrey { s } })
}

impl WeightSequence {
    /// Sequence from `ln M_0 .. ln M_{p_max}`; `ln M_0` must be `0`.
    pub fn from_log_table(log_m: Vec<f64>) -> Result<Self> {
        if log_m.len() < 3 {
            return Err(invalid("table", "need at least M_0, M_1, M_2"));
        }
        if log_m[0] != 0.0 {
            return Err(invalid("table", format!("M_0 must be 1, got exp({})", log_m[0])));
        }
        if let Some(p) = log_m.iter().position(|v| !v.is_finite()) {
            return Err(invalid("table", format!("M_{p} is not a positive finite number")));
        }
        let mut ln_q = vec![0.0];
        ln_q.extend(log_m.windows(2).map(|w| w[1] - w[0]));
        Ok(WeightSequence { log_m, ln_q, generator: Generator::Table })
    }

    /// Sequence from the values `M_0 .. M_{p_max}` themselves.
    pub fn from_table(values: &[f64]) -> Result<Self> {
        if let Some(p) = values.iter().position(|&v| !(v > 0.0)) {
            return Err(invalid("table", format!("M_{p} = {} is not positive", values[p])));
        }
        Self::from_log_table(values.iter().map(|v| v.ln()).collect())
    }

    pub fn p_max(&self) -> usize {
        self.log_m.len() - 1
    }

    pub fn log_m(&self) -> &[f64] {
        &self.log_m
    }

    /// `ln m_p` for `p = 1..=p_max`; index `0` is a placeholder.
    pub fn ln_quotients(&self) -> &[f64] {
        &self.ln_q
    }

    pub fn generator(&self) -> &Generator {
        &self.generator
    }

    pub fn quotient(&self, p: usize) -> f64 {
        self.ln_q[p].exp()
    }

    /// `ln m_j`, continuing past the table through the generator.
    pub fn ln_quotient(&self, j: usize) -> Option<f64> {
        if j == 0 {
            return None;
        }
        if j <= self.p_max() {
            return Some(self.ln_q[j]);
        }
        generator_ln_quotient(&self.generator, j)
    }

    /// Table truncated to `p_max`.
    pub fn truncated(&self, p_max: usize) -> Result<Self> {
        if p_max < 2 || p_max > self.p_max() {
            return Err(invalid("p_max", format!("cannot truncate to {p_max}")));
        }
        Ok(WeightSequence {
            log_m: self.log_m[..=p_max].to_vec(),
            ln_q: self.ln_q[..=p_max].to_vec(),
            generator: self.generator.clone(),
        })
    }
}

fn generator_ln_quotient(g: &Generator, j: usize) -> Option<f64> {
    match g {
        Generator::Gevrey { s } => Some(s * (j as f64).ln()),
        Generator::Table => None,
        Generator::Modified { base, r } => Some(generator_ln_quotient(base, j)? + r.ln_value(j)?),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Condition {
    #[serde(rename = "(M.1)")]
    M1,
    #[serde(rename = "(M.2)")]
    M2,
    #[serde(rename = "(M.3)")]
    M3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub condition: Condition,
    pub verdict: Verdict,
    pub c0: Option<f64>,
    #[serde(rename = "H")]
    pub h: Option<f64>,
    pub first_fail: Option<usize>,
    pub tail_bound: Option<f64>,
    pub note: String,
}

impl ConditionReport {
    fn new(condition: Condition, verdict: Verdict) -> Self {
        ConditionReport {
            condition,
            verdict,
            c0: None,
            h: None,
            first_fail: None,
            tail_bound: None,
            note: String::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

/// (M.1): `M_p² ≤ M_{p-1} M_{p+1}` for `1 ≤ p < p_max`.
pub fn check_m1(seq: &WeightSequence) -> ConditionReport {
    let l = seq.log_m();
    let bad = (1..seq.p_max()).find(|&p| 2.0 * l[p] > l[p - 1] + l[p + 1] + LOG_SLACK);
    match bad {
        None => ConditionReport::new(Condition::M1, Verdict::Pass),
        Some(p) => {
            let mut r = ConditionReport::new(Condition::M1, Verdict::Fail);
            r.first_fail = Some(p);
            r.note = format!("2 ln M_{p} exceeds ln M_{} + ln M_{}", p - 1, p + 1);
            r
        }
    }
}

pub fn default_h_grid() -> Vec<f64> {
    crate::grid::doubling(10)
}

/// (M.2): smallest grid `H` for which
/// `ln c_0 = max_{p, q≤p} ln M_p − p ln H − ln M_{p−q} − ln M_q` stays bounded.
///
/// The running maximum of the row maxima over `p` is bounded when it does not
/// grow across the last quartile of the table.
pub fn check_m2(seq: &WeightSequence, h_grid: &[f64]) -> Result<ConditionReport> {
    if h_grid.is_empty() {
        return Err(invalid("H_grid", "empty"));
    }
    if let Some(h) = h_grid.iter().find(|&&h| !(h >= 1.0)) {
        return Err(invalid("H_grid", format!("candidate H = {h} is below 1")));
    }
    let mut grid = h_grid.to_vec();
    grid.sort_by(|a, b| a.total_cmp(b));
    let l = seq.log_m();
    let p_max = seq.p_max();
    let quartile = p_max - p_max / 4;
    let rows: Vec<f64> = (0..=p_max)
        .map(|p| {
            // without the H term; H enters linearly in p
            (0..=p).map(|q| l[p] - l[p - q] - l[q]).fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    let mut last_growth = None;
    for &h in &grid {
        let lh = h.ln();
        let mut running = f64::NEG_INFINITY;
        let mut at_quartile = f64::NEG_INFINITY;
        let mut argmax = 0;
        for (p, r) in rows.iter().enumerate() {
            let v = r - p as f64 * lh;
            if v > running {
                running = v;
                argmax = p;
            }
            if p == quartile {
                at_quartile = running;
            }
        }
        if running <= at_quartile + LOG_SLACK {
            let mut rep = ConditionReport::new(Condition::M2, Verdict::Pass);
            rep.c0 = Some(running.exp());
            rep.h = Some(h);
            rep.note = format!("max attained at p = {argmax}");
            return Ok(rep);
        }
        last_growth = Some(argmax);
    }
    let mut rep = ConditionReport::new(Condition::M2, Verdict::Fail);
    rep.first_fail = last_growth;
    rep.note = format!(
        "ratio still increasing at p_max = {p_max} for every H up to {}",
        grid[grid.len() - 1]
    );
    Ok(rep)
}

/// Cap on partial sums of `1/m_p` beyond which a table is declared divergent.
pub const M3_PARTIAL_SUM_CAP: f64 = 1e6;

/// (M.3): `Σ_{p>q} 1/m_p ≤ c_0 q / m_{q+1}` for `1 ≤ q ≤ q_max`.
///
/// Partial sums run to `tail_p`; the remainder is closed by an integral
/// comparison for Gevrey generators, by a geometric bound when the quotient
/// ratio `m_{p+1}/m_p` stays above some `ρ > 1`, and is otherwise left open.
pub fn check_m3(seq: &WeightSequence, q_max: usize, tail_p: usize) -> Result<ConditionReport> {
    if q_max < 1 {
        return Err(invalid("q_max", "must be at least 1"));
    }
    if tail_p <= q_max + 1 {
        return Err(invalid("tail_p", format!("need tail_p > q_max + 1, got {tail_p}")));
    }
    if tail_p > seq.p_max() {
        return Err(Error::RangeExceeded { arg: tail_p as f64, limit: seq.p_max() as f64 });
    }
    let lq = seq.ln_quotients();
    // suffix[p] = Σ_{j=p}^{tail_p} 1/m_j, summed small terms first
    let mut suffix = vec![0.0; tail_p + 2];
    let mut acc = Accumulator::default();
    for p in (1..=tail_p).rev() {
        suffix[p] = acc.add((-lq[p]).exp());
    }

    let tail = m3_tail(seq, tail_p);
    let lower_c0 = |extra: f64| {
        (1..=q_max)
            .map(|q| (suffix[q + 1] + extra) * lq[q + 1].exp() / q as f64)
            .fold(f64::NEG_INFINITY, f64::max)
    };

    let mut rep = ConditionReport::new(Condition::M3, Verdict::Pass);
    match tail {
        Tail::Bounded(t, how) => {
            rep.c0 = Some(lower_c0(t));
            rep.tail_bound = Some(t);
            rep.note = how;
        }
        Tail::Divergent(why) => {
            rep.verdict = Verdict::Fail;
            rep.c0 = Some(lower_c0(0.0));
            rep.first_fail = Some(tail_p);
            rep.note = format!("{why}; partial-sum constant at p = {tail_p} shown as c0");
        }
        Tail::Unknown => {
            if suffix[1] > M3_PARTIAL_SUM_CAP {
                rep.verdict = Verdict::Fail;
                let p = (1..=tail_p)
                    .find(|&p| suffix[1] - suffix[p + 1] > M3_PARTIAL_SUM_CAP)
                    .unwrap_or(tail_p);
                rep.first_fail = Some(p);
                rep.note = format!("partial sums exceed the cap {M3_PARTIAL_SUM_CAP:e} by p = {p}");
            } else {
                rep.verdict = Verdict::Inconclusive;
                rep.note = "inconclusive beyond p_max; c0 is a partial-sum lower bound".into();
            }
            rep.c0 = Some(lower_c0(0.0));
        }
    }
    Ok(rep)
}

enum Tail {
    Bounded(f64, String),
    Divergent(String),
    Unknown,
}

fn gevrey_base(g: &Generator) -> Option<(f64, Vec<&RSequence>)> {
    match g {
        Generator::Gevrey { s } => Some((*s, Vec::new())),
        Generator::Table => None,
        Generator::Modified { base, r } => {
            let (s, mut rs) = gevrey_base(base)?;
            rs.push(r);
            Some((s, rs))
        }
    }
}

fn m3_tail(seq: &WeightSequence, t: usize) -> Tail {
    let tf = t as f64;
    if let Some((s, rs)) = gevrey_base(seq.generator()) {
        // Σ_{p>T} 1/(p^s Π r_p) ≤ (Π r_T)^{-1} ∫_T^∞ x^{-s} dx, since every r is non-decreasing
        let ln_r_t: f64 = rs.iter().filter_map(|r| r.ln_value(t)).sum();
        if s > 1.0 {
            let bound = tf.powf(1.0 - s) / (s - 1.0) * (-ln_r_t).exp();
            return Tail::Bounded(bound, format!("integral comparison beyond p = {t}"));
        }
        if rs.is_empty() {
            return Tail::Divergent(format!("Σ p^(-{s}) diverges"));
        }
    }
    // ratio test over the last quartile; the ratio must not be drifting down
    let lq = seq.ln_quotients();
    let start = (t - t / 4).max(2);
    let ratios: Vec<f64> = (start..t).map(|p| lq[p + 1] - lq[p]).collect();
    if ratios.len() >= 2 {
        let half = ratios.len() / 2;
        let first = ratios[..half].iter().copied().fold(f64::INFINITY, f64::min);
        let second = ratios[half..].iter().copied().fold(f64::INFINITY, f64::min);
        let ln_rho = first.min(second);
        if ln_rho > 1e-6 && second >= first - LOG_SLACK {
            let rho = ln_rho.exp();
            let bound = (-lq[t]).exp() / (rho - 1.0);
            return Tail::Bounded(
                bound,
                format!("geometric comparison with ratio {rho:.6} beyond p = {t}"),
            );
        }
    }
    Tail::Unknown
}

/// Continuation rule of an `RSequence` past its table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Extension {
    None,
    /// `r_j = e^{ln_scale} j^exponent`
    Power { ln_scale: f64, exponent: f64 },
    /// `r_j = slope j + intercept`
    Affine { slope: f64, intercept: f64 },
    /// `r_j = e^{ln_a} e^{j ln_b}`
    Geometric { ln_a: f64, ln_b: f64 },
    /// `r_j = ln(j + e)`
    Log,
}

impl Extension {
    fn ln_value(&self, j: usize) -> Option<f64> {
        let x = j as f64;
        match *self {
            Extension::None => None,
            Extension::Power { ln_scale, exponent } => Some(ln_scale + exponent * x.ln()),
            Extension::Affine { slope, intercept } => Some((slope * x + intercept).ln()),
            Extension::Geometric { ln_a, ln_b } => Some(ln_a + x * ln_b),
            Extension::Log => Some((x + std::f64::consts::E).ln().ln()),
        }
    }
}

/// Positive non-decreasing sequence `r_1, r_2, …` (stored from index 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RSequence {
    values: Vec<f64>,
    extension: Extension,
}

impl RSequence {
    pub fn new(values: Vec<f64>, extension: Extension) -> Result<Self> {
        if values.is_empty() {
            return Err(invalid("r", "empty sequence"));
        }
        if let Some(i) = values.iter().position(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(invalid("r", format!("r_{} = {} is not positive", i + 1, values[i])));
        }
        if let Some(i) = values.windows(2).position(|w| w[1] < w[0]) {
            return Err(invalid("r", format!("decreases at index {}", i + 2)));
        }
        Ok(RSequence { values, extension })
    }

    fn from_fn(n: usize, extension: Extension) -> Result<Self> {
        let values = (1..=n).map(|j| extension.ln_value(j).map(f64::exp).unwrap_or(f64::NAN)).collect();
        Self::new(values, extension)
    }

    /// `r_p = p`.
    pub fn linear(n: usize) -> Result<Self> {
        let values = (1..=n).map(|j| j as f64).collect();
        Self::new(values, Extension::Power { ln_scale: 0.0, exponent: 1.0 })
    }

    /// `r_p = slope·p + intercept`.
    pub fn affine(slope: f64, intercept: f64, n: usize) -> Result<Self> {
        let values = (1..=n).map(|j| slope * j as f64 + intercept).collect();
        Self::new(values, Extension::Affine { slope, intercept })
    }

    /// `r_p = scale·p^exponent`.
    pub fn power(scale: f64, exponent: f64, n: usize) -> Result<Self> {
        Self::from_fn(n, Extension::Power { ln_scale: scale.ln(), exponent })
    }

    /// `r_p = a·b^p`.
    pub fn geometric(a: f64, b: f64, n: usize) -> Result<Self> {
        let values = (1..=n).map(|j| a * b.powi(j as i32)).collect();
        Self::new(values, Extension::Geometric { ln_a: a.ln(), ln_b: b.ln() })
    }

    /// `r_p = ln(p + e)`.
    pub fn log(n: usize) -> Result<Self> {
        Self::from_fn(n, Extension::Log)
    }

    pub fn constant(v: f64, n: usize) -> Result<Self> {
        Self::new(vec![v; n], Extension::Power { ln_scale: v.ln(), exponent: 0.0 })
    }

    pub fn table(values: Vec<f64>) -> Result<Self> {
        Self::new(values, Extension::None)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `r_1..r_n`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn extension(&self) -> &Extension {
        &self.extension
    }

    /// `r_j` for `j ≥ 1`, continuing past the table when possible.
    pub fn value(&self, j: usize) -> Option<f64> {
        if j == 0 {
            return None;
        }
        self.values.get(j - 1).copied().or_else(|| self.extension.ln_value(j).map(f64::exp))
    }

    pub fn ln_value(&self, j: usize) -> Option<f64> {
        if j == 0 {
            return None;
        }
        match self.values.get(j - 1) {
            Some(v) => Some(v.ln()),
            None => self.extension.ln_value(j),
        }
    }

    /// Elementwise `factor·r_p`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let ext = match self.extension {
            Extension::None => Extension::None,
            Extension::Power { ln_scale, exponent } => {
                Extension::Power { ln_scale: ln_scale + factor.ln(), exponent }
            }
            Extension::Affine { slope, intercept } => {
                Extension::Affine { slope: slope * factor, intercept: intercept * factor }
            }
            Extension::Geometric { ln_a, ln_b } => Extension::Geometric { ln_a: ln_a + factor.ln(), ln_b },
            Extension::Log => Extension::None,
        };
        Self::new(self.values.iter().map(|v| v * factor).collect(), ext)
    }

    /// Unboundedness heuristic: the smallest value of the last quartile must
    /// exceed `factor` times the largest value of the first quartile.
    pub fn looks_unbounded(&self, factor: f64) -> bool {
        let n = self.values.len();
        if n < 4 {
            return false;
        }
        let q = n.div_ceil(4);
        let first_max = self.values[..q].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let last_min = self.values[n - q..].iter().copied().fold(f64::INFINITY, f64::min);
        last_min > factor * first_max
    }
}

pub const DEFAULT_GROWTH_FACTOR: f64 = 2.0;

/// `k'_1 = k_1`, `k'_j = min{k_j, j k'_{j−1}/(j−1)}`.
///
/// Equivalently `k'_j/j` is the running minimum of `k_i/i`, so `k'` is
/// non-decreasing, `k' ≤ k`, and `Π_{j≤p+q} k'_j ≤ 2^{p+q} Π_{j≤p} k'_j Π_{j≤q} k'_j`.
pub fn normalize_r_sequence(k: &RSequence, growth_factor: f64) -> Result<RSequence> {
    if !k.looks_unbounded(growth_factor) {
        return Err(Error::NotUnbounded(format!(
            "last quartile does not exceed {growth_factor} x the first-quartile maximum"
        )));
    }
    let kv = k.values();
    let mut out = Vec::with_capacity(kv.len());
    out.push(kv[0]);
    for j in 2..=kv.len() {
        let prev = out[j - 2];
        let ratio_branch = (j as f64 * prev) / (j - 1) as f64;
        out.push(kv[j - 1].min(ratio_branch));
    }
    let n = kv.len();
    let last = out[n - 1];
    let follows_input = last == kv[n - 1];
    let linear_tail = Extension::Power { ln_scale: (last / n as f64).ln(), exponent: 1.0 };
    let extension = match *k.extension() {
        Extension::Power { exponent, .. } if exponent >= 1.0 => linear_tail,
        Extension::Power { exponent, .. } if follows_input && exponent <= 1.0 => k.extension().clone(),
        Extension::Affine { intercept, .. } if intercept <= 0.0 => linear_tail,
        Extension::Affine { .. } if follows_input => k.extension().clone(),
        Extension::Geometric { ln_b, .. } if ln_b > 0.0 && n as f64 * ln_b > 1.0 => linear_tail,
        Extension::Log if follows_input => Extension::Log,
        _ => Extension::None,
    };
    RSequence::new(out, extension)
}

/// Largest `ln Π_{j≤p+q} k_j − (p+q) ln 2 − ln Π_{j≤p} k_j − ln Π_{j≤q} k_j`
/// over `p + q ≤ max_sum`; the product inequality holds when this is `≤ 0`.
pub fn product_inequality_residual(k: &RSequence, max_sum: usize) -> Result<f64> {
    if max_sum > k.len() {
        return Err(Error::RangeExceeded { arg: max_sum as f64, limit: k.len() as f64 });
    }
    let mut cum = vec![0.0];
    let mut acc = Accumulator::default();
    for v in &k.values()[..max_sum] {
        cum.push(acc.add(v.ln()));
    }
    let ln2 = std::f64::consts::LN_2;
    let mut worst = f64::NEG_INFINITY;
    for n in 0..=max_sum {
        for p in 0..=n {
            let q = n - p;
            worst = worst.max(cum[n] - n as f64 * ln2 - cum[p] - cum[q]);
        }
    }
    Ok(worst)
}

/// `N_p = M_p Π_{j≤p} r_j`.
pub fn modified_sequence(seq: &WeightSequence, r: &RSequence) -> Result<WeightSequence> {
    let p_max = seq.p_max();
    if r.len() < p_max {
        return Err(invalid(
            "r",
            format!("has {} terms but the sequence needs {p_max}", r.len()),
        ));
    }
    let mut log_m = Vec::with_capacity(p_max + 1);
    let mut ln_q = Vec::with_capacity(p_max + 1);
    log_m.push(0.0);
    ln_q.push(0.0);
    let mut acc = Accumulator::default();
    let base_q = seq.ln_quotients();
    for p in 1..=p_max {
        let lq = base_q[p] + r.values()[p - 1].ln();
        ln_q.push(lq);
        log_m.push(acc.add(lq));
    }
    let truncated = RSequence { values: r.values()[..p_max].to_vec(), extension: r.extension().clone() };
    Ok(WeightSequence {
        log_m,
        ln_q,
        generator: Generator::Modified { base: Box::new(seq.generator().clone()), r: truncated },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gevrey_small_values() {
        let g1 = make_gevrey(1.0, 10).unwrap();
        assert!((g1.log_m()[3].exp() - 6.0).abs() < 1e-12);
        let g2 = make_gevrey(2.0, 10).unwrap();
        assert!((g2.log_m()[3].exp() - 36.0).abs() < 1e-11);
        assert!((g2.quotient(3) - 9.0).abs() < 1e-12);
        assert!(make_gevrey(0.0, 10).is_err());
        assert!(make_gevrey(2.0, 1).is_err());
    }

    #[test]
    fn m1_examples() {
        assert!(check_m1(&make_gevrey(2.0, 200).unwrap()).passed());
        let bad = WeightSequence::from_table(&[1.0, 1.0, 10.0, 11.0]).unwrap();
        let rep = check_m1(&bad);
        assert_eq!(rep.verdict, Verdict::Fail);
        assert_eq!(rep.first_fail, Some(2));
        let sq = WeightSequence::from_log_table((0..=50).map(|p| (p * p) as f64).collect()).unwrap();
        assert!(check_m1(&sq).passed());
    }

    #[test]
    fn m2_examples() {
        let g1 = make_gevrey(1.0, 200).unwrap();
        let rep = check_m2(&g1, &default_h_grid()).unwrap();
        assert_eq!(rep.h, Some(2.0));
        assert_eq!(rep.c0, Some(1.0));
        let g2 = make_gevrey(2.0, 200).unwrap();
        let rep = check_m2(&g2, &default_h_grid()).unwrap();
        assert_eq!(rep.h, Some(4.0));
        assert_eq!(rep.c0, Some(1.0));
        let sq = WeightSequence::from_log_table((0..=60).map(|p| (p * p) as f64).collect()).unwrap();
        assert_eq!(check_m2(&sq, &default_h_grid()).unwrap().verdict, Verdict::Fail);
        assert!(check_m2(&g1, &[]).is_err());
    }

    #[test]
    fn m3_examples() {
        let g2 = make_gevrey(2.0, 500).unwrap();
        let rep = check_m3(&g2, 50, 500).unwrap();
        assert!(rep.passed());
        // q = 1 dominates: (ζ(2) − 1)·m_2
        let z2 = std::f64::consts::PI.powi(2) / 6.0;
        assert!((rep.c0.unwrap() - (z2 - 1.0) * 4.0).abs() < 1e-4);
        let g1 = make_gevrey(1.0, 500).unwrap();
        assert_eq!(check_m3(&g1, 50, 500).unwrap().verdict, Verdict::Fail);
        assert!(check_m3(&g2, 50, 51).is_err());
    }

    #[test]
    fn m3_tables() {
        // M_p = e^{p²}: m_p = e^{2p−1}, ratio e²
        let sq = WeightSequence::from_log_table((0..=60).map(|p| (p * p) as f64).collect()).unwrap();
        let rep = check_m3(&sq, 10, 60).unwrap();
        assert!(rep.passed(), "{rep:?}");
        let g2 = make_gevrey(2.0, 300).unwrap();
        let table = WeightSequence::from_log_table(g2.log_m().to_vec()).unwrap();
        assert_eq!(check_m3(&table, 10, 300).unwrap().verdict, Verdict::Inconclusive);
    }

    #[test]
    fn normalize_examples() {
        let lin = RSequence::linear(100).unwrap();
        assert_eq!(normalize_r_sequence(&lin, 2.0).unwrap().values(), lin.values());
        let geo = RSequence::geometric(1.0, 2.0, 30).unwrap();
        let n = normalize_r_sequence(&geo, 2.0).unwrap();
        for (j, v) in n.values().iter().enumerate() {
            assert_eq!(*v, 2.0 * (j + 1) as f64);
        }
        assert!((n.value(40).unwrap() - 80.0).abs() < 1e-10);
        let c = RSequence::constant(5.0, 100).unwrap();
        assert!(matches!(normalize_r_sequence(&c, 2.0), Err(Error::NotUnbounded(_))));
    }

    #[test]
    fn modified_examples() {
        let g1 = make_gevrey(1.0, 20).unwrap();
        let one = RSequence::constant(1.0, 20).unwrap();
        assert_eq!(modified_sequence(&g1, &one).unwrap().log_m(), g1.log_m());
        let n = modified_sequence(&g1, &RSequence::linear(20).unwrap()).unwrap();
        for p in 0..=20 {
            assert!((n.log_m()[p] - 2.0 * g1.log_m()[p]).abs() < 1e-12);
        }
        let g2 = make_gevrey(2.0, 300).unwrap();
        let n = modified_sequence(&g2, &RSequence::log(300).unwrap()).unwrap();
        assert!(check_m1(&n).passed());
        assert!((n.ln_quotient(400).unwrap() - (2.0 * 400f64.ln() + (400.0 + std::f64::consts::E).ln().ln())).abs() < 1e-12);
    }
}
