//! Forward Laplace transforms of catalog distributions, their analyticity and
//! growth certificates, and the reconstruction chain through shifted
//! ultrapolynomials.

pub mod analyticity;
pub mod distribution;
pub mod growth;
pub mod reconstruct;

pub use analyticity::{analyticity_order_study, verify_analyticity, AnalyticityReport, OrderStudy, OrderVerdict};
pub use distribution::{
    closed_form_agreement, laplace_forward, laplace_quadrature, ClosedFormReport, DistributionKind, DistributionSpec,
    TestDistribution, TransformGrid,
};
pub use growth::{default_k_grid, growth_certificate, roumieu_reduction, GrowthCertificate, GrowthRow, Mode, RoumieuReduction};
pub use reconstruct::{contour_shift_independence, direct_inversion, reconstruct, ContourReport, ReconstructionReport};
