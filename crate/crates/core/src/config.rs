//! TOML run configuration for the certification pipeline.

use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{halving, GridSpec};
use crate::laplace::{DistributionSpec, Mode};
use crate::weights_seq::{make_gevrey, WeightSequence};

fn cfg_err(path: &str, message: impl Into<String>) -> Error {
    Error::Config { path: path.to_string(), message: message.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    SeqCheck,
    Assoc,
    PolyCertify,
    WeightsCertify,
    LaplaceCertify,
    Reconstruct,
    Contour,
}

impl Stage {
    pub const ALL: [Stage; 7] = [
        Stage::SeqCheck,
        Stage::Assoc,
        Stage::PolyCertify,
        Stage::WeightsCertify,
        Stage::LaplaceCertify,
        Stage::Reconstruct,
        Stage::Contour,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::SeqCheck => "seq_check",
            Stage::Assoc => "assoc",
            Stage::PolyCertify => "poly_certify",
            Stage::WeightsCertify => "weights_certify",
            Stage::LaplaceCertify => "laplace_certify",
            Stage::Reconstruct => "reconstruct",
            Stage::Contour => "contour",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SequenceSpec {
    Gevrey {
        s: f64,
        #[serde(default = "default_p_max")]
        p_max: usize,
    },
    /// `M_0 = 1, M_1, …`.
    Table { values: Vec<f64> },
}

fn default_p_max() -> usize {
    500
}

impl Default for SequenceSpec {
    fn default() -> Self {
        SequenceSpec::Gevrey { s: 2.0, p_max: default_p_max() }
    }
}

impl SequenceSpec {
    /// `gevrey:S` or `gevrey:S:P_MAX`.
    pub fn parse(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            ["gevrey", order] | ["gevrey", order, _] => {
                let order: f64 = order.parse().map_err(|_| cfg_err("sequence.s", format!("bad number {order:?}")))?;
                let p_max = match parts.get(2) {
                    Some(p) => p.parse().map_err(|_| cfg_err("sequence.p_max", format!("bad integer {p:?}")))?,
                    None => default_p_max(),
                };
                Ok(SequenceSpec::Gevrey { s: order, p_max })
            }
            _ => Err(cfg_err("sequence", format!("expected gevrey:S[:P_MAX], got {s:?}"))),
        }
    }

    pub fn build(&self) -> Result<WeightSequence> {
        match self {
            SequenceSpec::Gevrey { s, p_max } => make_gevrey(*s, *p_max),
            SequenceSpec::Table { values } => WeightSequence::from_table(values),
        }
    }

    /// The same sequence on a longer table where it has a generator.
    pub fn build_with_range(&self, p_max: usize) -> Result<WeightSequence> {
        match self {
            SequenceSpec::Gevrey { s, p_max: p } => make_gevrey(*s, (*p).max(p_max)),
            SequenceSpec::Table { values } => WeightSequence::from_table(values),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            SequenceSpec::Gevrey { s, p_max } => {
                if !(*s > 0.0 && s.is_finite()) {
                    return Err(cfg_err("sequence.s", "must be positive"));
                }
                if *p_max < 8 {
                    return Err(cfg_err("sequence.p_max", "must be at least 8"));
                }
            }
            SequenceSpec::Table { values } => {
                if values.len() < 9 {
                    return Err(cfg_err("sequence.values", "needs M_0..M_8 at least"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConditionsCfg {
    pub q_max: usize,
    /// Partial sums for (M.3) run to here; `None` uses `p_max`.
    pub tail_p: Option<usize>,
    pub h_grid: Option<Vec<f64>>,
}

impl Default for ConditionsCfg {
    fn default() -> Self {
        ConditionsCfg { q_max: 100, tail_p: None, h_grid: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AssocCfg {
    pub rho_grid: GridSpec,
}

impl Default for AssocCfg {
    fn default() -> Self {
        AssocCfg { rho_grid: GridSpec::log(1e-2, 1e4, 1000) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolyCfg {
    pub c: f64,
    pub d: usize,
    /// Gain `k` of the lower bound; `l` is picked for it.
    pub k: f64,
    /// Fixed `l`, bypassing the pick.
    pub l: Option<f64>,
    /// Table length for the associated function used by the certificates.
    pub range_p_max: usize,
    /// Table length of the product itself.
    pub poly_p_max: usize,
    /// `|u| ≤ m_{u_index}` on the strip grid.
    pub u_index: usize,
    pub n_u: usize,
    pub n_v: usize,
    pub l_grid: Option<Vec<f64>>,
    pub deriv_order: usize,
    pub deriv_x: GridSpec,
}

impl Default for PolyCfg {
    fn default() -> Self {
        PolyCfg {
            c: 3.0,
            d: 1,
            k: 1.0,
            l: None,
            range_p_max: 8000,
            poly_p_max: 2000,
            u_index: 300,
            n_u: 401,
            n_v: 21,
            l_grid: None,
            deriv_order: 6,
            deriv_x: GridSpec::lin(-10.0, 10.0, 21),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeightsCfg {
    /// Catalog anchor system in dimension 1 or 2.
    pub d: usize,
    pub max_order: usize,
    pub x: GridSpec,
    /// Extra uniformly drawn probes in `[x.start, x.end]^d`, seeded.
    pub random_probes: usize,
    pub seminorm_m: f64,
}

impl Default for WeightsCfg {
    fn default() -> Self {
        WeightsCfg { d: 1, max_order: 4, x: GridSpec::lin(-20.0, 20.0, 41), random_probes: 8, seminorm_m: 0.05 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransformSource {
    /// Closed form where the catalog has one, quadrature otherwise.
    ClosedForm,
    Quadrature,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LaplaceCfg {
    pub distribution: DistributionSpec,
    /// `ξ`-grid inside `K ⊂ B`.
    pub xi: Vec<f64>,
    pub eta: GridSpec,
    pub mode: Mode,
    pub k_grid: Vec<f64>,
    pub analyticity_h0: f64,
    pub analyticity_levels: usize,
    /// Strip half-width of the reconstruction ultrapolynomial; `c > 2`.
    pub c: f64,
    pub xi_probes: Vec<f64>,
    pub x_probes: Vec<f64>,
    pub recon_eta_extent: f64,
    pub recon_eta_points: usize,
    pub recon_x_extent: f64,
    pub source: TransformSource,
}

impl Default for LaplaceCfg {
    fn default() -> Self {
        LaplaceCfg {
            distribution: DistributionSpec::Gaussian,
            xi: vec![-0.5, 0.0, 0.5],
            eta: GridSpec::lin(-5.0, 5.0, 101),
            mode: Mode::Roumieu,
            k_grid: halving(8),
            analyticity_h0: 0.1,
            analyticity_levels: 3,
            c: 2.5,
            xi_probes: vec![0.0, 0.3, 0.6],
            x_probes: vec![-1.0, 0.0, 2.0],
            recon_eta_extent: 40.0,
            recon_eta_points: 4001,
            recon_x_extent: 15.0,
            source: TransformSource::ClosedForm,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub pipeline: Vec<Stage>,
    pub seed: u64,
    pub sequence: SequenceSpec,
    pub conditions: ConditionsCfg,
    pub assoc: AssocCfg,
    pub poly: PolyCfg,
    pub weights: WeightsCfg,
    pub laplace: LaplaceCfg,
}

impl RunConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(s).map_err(|e| cfg_err("<toml>", e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| cfg_err(&path.display().to_string(), e.to_string()))?;
        Self::from_toml_str(&text)
    }

    /// The full pipeline over the defaults.
    pub fn full() -> Self {
        RunConfig { pipeline: Stage::ALL.to_vec(), ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        self.sequence.validate()?;
        self.assoc.rho_grid.validate().map_err(|e| cfg_err("assoc.rho_grid", e.to_string()))?;
        let p = &self.poly;
        if !(p.c > 0.0) {
            return Err(cfg_err("poly.c", "must be positive"));
        }
        if !(1..=3).contains(&p.d) {
            return Err(cfg_err("poly.d", "must be 1, 2 or 3"));
        }
        if !(p.k > 0.0) {
            return Err(cfg_err("poly.k", "must be positive"));
        }
        if p.n_u < 2 || p.n_v < 2 {
            return Err(cfg_err("poly.n_u", "strip grid needs at least two points per axis"));
        }
        if !(1..=2).contains(&self.weights.d) {
            return Err(cfg_err("weights.d", "catalog anchor systems exist for d = 1, 2"));
        }
        let l = &self.laplace;
        if !(l.c > 2.0) {
            return Err(cfg_err("laplace.c", format!("need c > 2, got {}", l.c)));
        }
        let half = 0.5 * l.c;
        if let Some(x) = l.xi.iter().chain(&l.xi_probes).find(|x| x.abs() > half) {
            return Err(cfg_err("laplace.xi", format!("|xi| = {} exceeds c/2 = {half}", x.abs())));
        }
        let t = l.distribution.build().map_err(|e| cfg_err("laplace.distribution", e.to_string()))?;
        if t.dim() != 1 {
            return Err(cfg_err("laplace.distribution", "transform grids are one-dimensional"));
        }
        if let Some(x) = l.xi.iter().chain(&l.xi_probes).find(|x| !t.in_domain(&[**x])) {
            return Err(cfg_err("laplace.xi", format!("xi = {x} is outside the domain of {}", t.name())));
        }
        if l.xi.len() < 3 {
            return Err(cfg_err("laplace.xi", "needs at least three points"));
        }
        l.eta.validate().map_err(|e| cfg_err("laplace.eta", e.to_string()))?;
        if (l.eta.start + l.eta.end).abs() > 1e-12 || l.eta.n < 3 {
            return Err(cfg_err("laplace.eta", "must be a symmetric linear grid"));
        }
        if l.k_grid.is_empty() || l.k_grid.iter().any(|k| !(*k > 0.0)) {
            return Err(cfg_err("laplace.k_grid", "needs positive entries"));
        }
        let seq = self.sequence.build()?;
        let k_max = l.k_grid.iter().copied().fold(0.0, f64::max);
        let m_top = seq.quotient(seq.p_max());
        if k_max * l.eta.end > m_top {
            return Err(cfg_err(
                "laplace.eta",
                format!("k R_eta = {} exceeds the associated-function range m_pmax = {m_top}", k_max * l.eta.end),
            ));
        }
        if !(l.recon_eta_extent > 0.0) || l.recon_eta_points < 5 || !(l.recon_x_extent > 0.0) {
            return Err(cfg_err("laplace.recon_eta_extent", "reconstruction grids must be non-empty"));
        }
        if !(l.analyticity_h0 > 0.0) || l.analyticity_levels < 2 {
            return Err(cfg_err("laplace.analyticity_levels", "needs h0 > 0 and two levels"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        RunConfig::default().validate().unwrap();
        let cfg = RunConfig::from_toml_str("").unwrap();
        assert!(cfg.pipeline.is_empty());
    }

    #[test]
    fn strip_requirement() {
        let err = RunConfig::from_toml_str("[laplace]\nc = 1.0\nxi = [-0.8, 0.0, 0.8]\n").unwrap_err();
        assert!(matches!(err, Error::Config { ref path, .. } if path == "laplace.c"), "{err}");
        let err = RunConfig::from_toml_str("[laplace]\nxi = [0.0, 0.5, 1.3]\n").unwrap_err();
        assert!(matches!(err, Error::Config { ref path, .. } if path == "laplace.xi"), "{err}");
    }

    #[test]
    fn parse_sections() {
        let cfg = RunConfig::from_toml_str(
            r#"
pipeline = ["seq_check", "contour"]
[sequence]
kind = "gevrey"
s = 1.5
p_max = 600
[laplace]
distribution = { kind = "one_sided_exp" }
xi = [-0.5, 0.0, 1.0]
eta = "lin:-4:4:81"
"#,
        )
        .unwrap();
        assert_eq!(cfg.pipeline, vec![Stage::SeqCheck, Stage::Contour]);
        assert_eq!(cfg.sequence, SequenceSpec::Gevrey { s: 1.5, p_max: 600 });
        assert_eq!(cfg.laplace.eta, GridSpec::lin(-4.0, 4.0, 81));
        assert!(RunConfig::from_toml_str("[laplace]\nbogus = 1\n").is_err());
        assert_eq!(SequenceSpec::parse("gevrey:3").unwrap(), SequenceSpec::Gevrey { s: 3.0, p_max: 500 });
    }
}
