//! Pipeline runner: executes configured stages and gathers their reports.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::time::Instant;

use crate::analytic_weights::{decay_product, product_rule_bound, seminorm_estimate, AnchorSystem, Sign, SqrtWeight};
use crate::assoc::AssociatedFunction;
use crate::config::{RunConfig, Stage, TransformSource};
use crate::error::{Error, Result};
use crate::grid::{linspace, GridSpec};
use crate::laplace::{
    analyticity_order_study, closed_form_agreement, contour_shift_independence, default_k_grid, direct_inversion,
    growth_certificate, laplace_forward, reconstruct, roumieu_reduction, DistributionKind, Mode, TestDistribution,
    TransformGrid,
};
use crate::ultrapoly::{default_l_grid, pick_l_for_k, strip_grid, Gain, PolyKind, Ultrapolynomial};
use crate::weights_seq::{check_m1, check_m2, check_m3, default_h_grid};

pub const SCHEMA_VERSION: u32 = 1;
/// Closed-form agreement of forward transforms.
pub const CLOSED_FORM_TOL: f64 = 1e-8;
pub const INVERSE_TOL: f64 = 1e-8;
pub const CONTOUR_TOL: f64 = 1e-6;
pub const RATIO_TOL: f64 = 1e-6;
pub const FD_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub stage: Stage,
    pub passed: bool,
    pub data: Value,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub passed: bool,
    pub stages: Vec<StageReport>,
    pub total_seconds: f64,
}

impl Report {
    /// The report with every timing field zeroed, for byte comparisons.
    pub fn without_timing(&self) -> Report {
        let mut r = self.clone();
        r.total_seconds = 0.0;
        for s in &mut r.stages {
            s.seconds = 0.0;
        }
        r
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).unwrap_or_else(|e| json!({ "serialization_error": e.to_string() }))
}

/// Runs every configured stage in order; a stage error becomes a failed stage.
pub fn run_suite(cfg: &RunConfig) -> Report {
    let start = Instant::now();
    let stages: Vec<StageReport> = cfg.pipeline.iter().map(|&s| run_stage(cfg, s)).collect();
    Report {
        schema_version: SCHEMA_VERSION,
        passed: stages.iter().all(|s| s.passed),
        stages,
        total_seconds: start.elapsed().as_secs_f64(),
    }
}

pub fn run_stage(cfg: &RunConfig, stage: Stage) -> StageReport {
    let start = Instant::now();
    let out = match stage {
        Stage::SeqCheck => seq_check(cfg),
        Stage::Assoc => assoc_stage(cfg),
        Stage::PolyCertify => poly_certify(cfg),
        Stage::WeightsCertify => weights_certify(cfg),
        Stage::LaplaceCertify => laplace_certify(cfg),
        Stage::Reconstruct => reconstruct_stage(cfg),
        Stage::Contour => contour_stage(cfg),
    };
    let (passed, data) = match out {
        Ok(v) => v,
        Err(e) => (false, json!({ "error": e.to_string() })),
    };
    StageReport { stage, passed, data, seconds: start.elapsed().as_secs_f64() }
}

type StageOut = Result<(bool, Value)>;

pub fn seq_check(cfg: &RunConfig) -> StageOut {
    let seq = cfg.sequence.build()?;
    let m1 = check_m1(&seq);
    let m2 = check_m2(&seq, cfg.conditions.h_grid.as_deref().unwrap_or(&default_h_grid()))?;
    let tail = cfg.conditions.tail_p.unwrap_or(seq.p_max());
    let m3 = check_m3(&seq, cfg.conditions.q_max.min(tail.saturating_sub(2)).max(1), tail)?;
    let passed = m1.passed() && m2.passed() && m3.passed();
    Ok((passed, json!({ "p_max": seq.p_max(), "conditions": [m1, m2, m3] })))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssocRow {
    pub rho: f64,
    #[serde(rename = "M")]
    pub m: f64,
    /// Roumieu counterpart `N_r(ρ)` when an `r` sequence is supplied.
    #[serde(rename = "N")]
    pub n: Option<f64>,
    pub argmax_p: usize,
}

/// Counting and sup forms on the grid, with the inverse round trip above `m_1`.
pub fn assoc_stage(cfg: &RunConfig) -> StageOut {
    let seq = cfg.sequence.build()?;
    let af = AssociatedFunction::new(&seq)?;
    let rho = cfg.assoc.rho_grid.points();
    let rows: Vec<(f64, f64, f64)> = rho
        .iter()
        .map(|&r| {
            let m = af.eval(r)?;
            let brute = af.eval_brute(r);
            let form = (m - brute).abs() / m.abs().max(1e-300);
            let inv = if r > af.m1() { (af.inverse(m)? - r).abs() / r } else { 0.0 };
            Ok((m, if m == 0.0 && brute == 0.0 { 0.0 } else { form }, inv))
        })
        .collect::<Result<_>>()?;
    let max_form = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    let max_inv = rows.iter().map(|r| r.2).fold(0.0, f64::max);
    let passed = max_form <= crate::assoc::FORM_AGREEMENT && max_inv <= INVERSE_TOL;
    Ok((
        passed,
        json!({
            "points": rho.len(),
            "max_form_rel_diff": max_form,
            "max_inverse_rel_err": max_inv,
            "m1": af.m1(),
            "max_rho": af.max_rho(),
        }),
    ))
}

fn range_af(cfg: &RunConfig) -> Result<AssociatedFunction> {
    AssociatedFunction::new(&cfg.sequence.build_with_range(cfg.poly.range_p_max)?)
}

fn poly_kind(cfg: &RunConfig, af: &AssociatedFunction, k: f64) -> Result<(PolyKind, Value)> {
    match cfg.poly.l {
        Some(l) => Ok((PolyKind::Beurling { l }, json!({ "l": l, "picked": false }))),
        None => {
            let pick = pick_l_for_k(af, &Gain::Scalar(k), None)?;
            if !pick.decays {
                return Err(Error::NotSatisfiable("no l with a decaying comparison".into()));
            }
            let v = to_value(&pick);
            Ok((pick.kind, v))
        }
    }
}

/// Zero-freeness on the strip, the lower bound `C̃`, the upper pair `(L, C′)`,
/// and the Cauchy derivative sweep of `1/P`.
pub fn poly_certify(cfg: &RunConfig) -> StageOut {
    let p = &cfg.poly;
    let af = range_af(cfg)?;
    let seq = af.sequence().truncated(p.poly_p_max.min(af.sequence().p_max()))?;
    let (kind, pick) = poly_kind(cfg, &af, p.k)?;
    let poly = Ultrapolynomial::new(&seq, kind, p.c, p.d, None)?;
    let grid = strip_grid(p.d, af.sequence().quotient(p.u_index.min(af.sequence().p_max())), p.n_u, p.c, p.n_v);
    let zf = poly.verify_zero_free(&grid)?;
    let lower = poly.lower_bound_certificate(&af, &Gain::Scalar(p.k), &grid)?;
    let upper = poly.upper_bound_certificate(&af, &grid, p.l_grid.as_deref().unwrap_or(&default_l_grid()))?;
    let xs: Vec<Vec<f64>> = p.deriv_x.points().into_iter().map(|x| {
        let mut v = vec![0.0; p.d];
        v[0] = x;
        v
    }).collect();
    let sweep = poly.derivative_bound_sweep(&af, &Gain::Scalar(p.k), &xs, p.deriv_order, None)?;
    let deriv_ok = sweep.max_cauchy_ratio <= 1.0 + RATIO_TOL && sweep.max_fd_rel_err <= FD_TOL;
    let passed = zf.zero_free && lower.positive && upper.l.is_some() && deriv_ok;
    Ok((
        passed,
        json!({ "q": poly.q(), "pick": pick, "zero_free": zf, "lower": lower, "upper": upper, "derivatives": sweep }),
    ))
}

fn probes(cfg: &RunConfig, d: usize) -> Vec<Vec<f64>> {
    let w = &cfg.weights;
    let axis = w.x.points();
    let mut out: Vec<Vec<f64>> = match d {
        1 => axis.iter().map(|&x| vec![x]).collect(),
        _ => {
            let coarse = linspace(w.x.start, w.x.end, 11);
            coarse.iter().flat_map(|&a| coarse.iter().map(move |&b| vec![a, b])).collect()
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for _ in 0..w.random_probes {
        out.push((0..d).map(|_| rng.random_range(w.x.start..=w.x.end)).collect());
    }
    out
}

/// Anchor-weight properties and derivative bounds on the catalog system.
pub fn weights_certify(cfg: &RunConfig) -> StageOut {
    let w = &cfg.weights;
    let sys = if w.d == 1 { AnchorSystem::catalog_1d() } else { AnchorSystem::catalog_2d() };
    let xs = probes(cfg, w.d);
    let corners = sys.k_corners();
    let eps = sys.eps();
    let weighted = sys.check_weighted_bound(4.0 * eps, &xs, &corners)?;
    let lim = 0.99 * std::f64::consts::FRAC_PI_4 / (sys.s() * (w.d as f64).sqrt());
    let ys: Vec<Vec<f64>> = linspace(-lim, lim, 5).into_iter().map(|y| vec![y; w.d]).collect();
    let denominator = sys.check_denominator_bound(&xs, &ys)?;
    let a_sweep = sys.a_bound_sweep(&xs, &corners, w.max_order, None)?;
    let plus = SqrtWeight::new(eps, Sign::Plus, w.d, None)?;
    let minus = SqrtWeight::new(eps, Sign::Minus, w.d, None)?;
    let plus_sweep = plus.bound_sweep(&xs, w.max_order)?;
    let minus_sweep = minus.bound_sweep(&xs, w.max_order)?;
    let product = product_rule_bound(&sys, &plus, &xs, &corners, w.max_order)?;
    let seq = cfg.sequence.build()?;
    let af = AssociatedFunction::new(&seq)?;
    let seminorm = seminorm_estimate(&minus, &af, w.seminorm_m, w.max_order.min(seq.p_max()), &xs)?;
    let decay = decay_product(&af, w.seminorm_m, eps, &xs)?;
    let sweeps = [&a_sweep, &plus_sweep, &minus_sweep, &product];
    let passed = weighted.holds
        && denominator >= 0.0
        && sweeps.iter().all(|s| s.holds && s.max_fd_rel_err <= FD_TOL)
        && !seminorm.divergent
        && decay.bounded;
    Ok((
        passed,
        json!({
            "anchors": sys.anchors(),
            "eps": eps,
            "weighted_bound": weighted,
            "denominator_min_log_ratio": denominator,
            "sweeps": sweeps,
            "seminorm": seminorm,
            "decay_product": decay,
        }),
    ))
}

fn distribution(cfg: &RunConfig) -> Result<TestDistribution> {
    cfg.laplace.distribution.build()
}

fn probe_points(xi: &[f64]) -> Vec<Complex64> {
    let inner: Vec<f64> = if xi.len() > 2 { xi[1..xi.len() - 1].to_vec() } else { xi.to_vec() };
    inner.iter().flat_map(|&x| linspace(-2.0, 2.0, 5).into_iter().map(move |e| Complex64::new(x, e))).collect()
}

/// Forward transform, closed-form agreement, analyticity order, growth
/// certificate and, in Roumieu mode, the reduction to a single `(k_p)`.
pub fn laplace_certify(cfg: &RunConfig) -> StageOut {
    let l = &cfg.laplace;
    let t = distribution(cfg)?;
    let eta = l.eta.points();
    let grid = laplace_forward(&t, &l.xi, &eta)?;
    let closed = if t.has_closed_form() { Some(closed_form_agreement(&t, &grid)?) } else { None };
    let closed_ok = closed.as_ref().is_none_or(|c| c.max_rel_err <= CLOSED_FORM_TOL);
    let h0 = l.analyticity_h0.min(0.5 * (l.xi[1] - l.xi[0]).abs());
    let study = analyticity_order_study(&|z| t.transform(&[z]), &probe_points(&l.xi), h0, l.analyticity_levels)?;
    let af = AssociatedFunction::new(&cfg.sequence.build()?)?;
    let cert = growth_certificate(&grid, &af, &l.k_grid, l.mode)?;
    let reduction = match l.mode {
        Mode::Roumieu if cert.witnessed => Some(roumieu_reduction(&grid, &af, &cert)?),
        _ => None,
    };
    let reduction_ok = reduction.as_ref().is_none_or(|r| r.verified);
    let passed = closed_ok && study.passed() && cert.witnessed && cert.monotone && reduction_ok;
    Ok((
        passed,
        json!({
            "distribution": t.name(),
            "closed_form": closed,
            "analyticity": study,
            "growth": cert,
            "reduction": reduction.map(|r| json!({
                "k_head": r.k.values().iter().take(16).collect::<Vec<_>>(),
                "ln_c": r.ln_c,
                "max_residual": r.max_residual,
                "verified": r.verified,
                "trivial_subordinate": r.subordinate.trivial,
            })),
        }),
    ))
}

/// Transform on the reconstruction probes and the ultrapolynomial `P`
/// picked for the largest witnessed Beurling gain.
pub struct ChainSetup {
    pub grid: TransformGrid,
    pub poly: Ultrapolynomial,
    pub k: f64,
    pub pick: Value,
}

pub fn chain_setup(cfg: &RunConfig) -> Result<ChainSetup> {
    let l = &cfg.laplace;
    let t = distribution(cfg)?;
    let eta = GridSpec::lin(-l.recon_eta_extent, l.recon_eta_extent, l.recon_eta_points).points();
    let grid = match (l.source, t.has_closed_form()) {
        (TransformSource::ClosedForm, true) => TransformGrid::closed_form(&t, &l.xi_probes, &eta)?,
        _ => laplace_forward(&t, &l.xi_probes, &eta)?,
    };
    let af = range_af(cfg)?;
    let cert_grid = laplace_forward(&t, &l.xi, &l.eta.points())?;
    let cert = growth_certificate(&cert_grid, &af, &default_k_grid(), Mode::Beurling)?;
    let k = cert.beurling_k().ok_or_else(|| Error::NotWitnessed("no Beurling gain is witnessed".into()))?;
    let (kind, pick) = poly_kind(cfg, &af, k)?;
    let seq = af.sequence().truncated(cfg.poly.poly_p_max.min(af.sequence().p_max()))?;
    let poly = Ultrapolynomial::new(&seq, kind, l.c, 1, None)?;
    Ok(ChainSetup { grid, poly, k, pick })
}

fn x_grid(cfg: &RunConfig) -> Vec<f64> {
    let l = &cfg.laplace;
    let h = std::f64::consts::PI / (2.0 * l.recon_eta_extent);
    let n = (l.recon_x_extent / h).ceil() as i64;
    (-n..=n).map(|i| i as f64 * h).collect()
}

/// `H_ξ` at each probe with the Fourier-side multiplier round trip; for
/// functions, also the direct inversion `e^{xξ}ℱ^{-1}(f_ξ) = T`.
pub fn reconstruct_stage(cfg: &RunConfig) -> StageOut {
    let setup = chain_setup(cfg)?;
    let t = distribution(cfg)?;
    let xs = x_grid(cfg);
    let mut rows = Vec::new();
    let mut passed = true;
    for (i, &xi) in setup.grid.xi.iter().enumerate() {
        let p = setup.poly.shift(&[xi])?;
        let rep = reconstruct(&setup.grid, i, &p, &xs)?;
        let inversion = match t.kind() {
            DistributionKind::Function { eval, .. } => {
                let near = linspace(-3.0, 3.0, 61);
                let back = direct_inversion(&setup.grid, i, &near)?;
                let scale = near.iter().map(|&x| eval(x).abs()).fold(0.0, f64::max).max(1e-300);
                Some(near.iter().zip(&back).map(|(&x, v)| (v - eval(x)).norm() / scale).fold(0.0, f64::max))
            }
            _ => None,
        };
        let ok = rep.passed && inversion.is_none_or(|e| e <= 1e-6);
        passed &= ok;
        rows.push(json!({
            "xi": xi,
            "round_trip_err": rep.round_trip_err,
            "window_eta": rep.window_eta,
            "window_points": rep.window_points,
            "tail_change": rep.tail_change,
            "x_tail": rep.x_tail,
            "nyquist_ratio": rep.nyquist_ratio,
            "direct_inversion_err": inversion,
            "passed": ok,
        }));
    }
    Ok((passed, json!({ "k": setup.k, "q": setup.poly.q(), "pick": setup.pick, "probes": rows })))
}

pub fn contour_stage(cfg: &RunConfig) -> StageOut {
    let setup = chain_setup(cfg)?;
    let rep = contour_shift_independence(&setup.grid, &setup.poly, &cfg.laplace.x_probes)?;
    Ok((rep.max_spread <= CONTOUR_TOL, to_value(&rep)))
}
