//! Error type shared by all modules.

use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// |T| underflowed to exactly zero in linear-domain evaluation.
    #[error("transmission magnitude underflowed (log-magnitude {log_magnitude:.3}); use transmission_log")]
    TransmissionUnderflow { log_magnitude: f64 },

    /// The multiple-reflection series fails the ratio test.
    #[error("multiple-reflection series does not converge: |ratio| = {ratio}")]
    SeriesNotConvergent { ratio: f64 },

    #[error("momentum grid is not symmetric about zero: [{p_min}, {p_max}]")]
    AsymmetricGrid { p_min: f64, p_max: f64 },

    /// The transmission amplitude has not relaxed to the free value at the
    /// edge of the momentum grid.
    #[error("grid too narrow: ||T(p_max)| - 1| = {magnitude_defect:.3e}, |T(p_max) - 1| = {complex_defect:.3e}")]
    EdgeNotDecayed {
        magnitude_defect: f64,
        complex_defect: f64,
    },

    /// |T(p0)| is too small to divide by in the linear domain.
    #[error("|T(p0)| = {t_mag:.3e} below linear-domain threshold; log-domain input required")]
    LogDomainRequired { t_mag: f64 },

    #[error("finite-difference extrapolation did not converge at order {order}: est. error {error:.3e}")]
    DerivativeNotConverged { order: usize, error: f64 },

    /// Quadrature integrand has not decayed at the integration-grid edge.
    #[error("quadrature integrand not decayed at grid edge: relative magnitude {0:.3e}")]
    QuadratureEdgeNotDecayed(f64),

    #[error("probability norm drifted by {0:.3e} within one time step")]
    NormDrift(f64),

    /// |G|^2 has several comparable local maxima; no unambiguous peak.
    #[error("probability density has {0} comparable local maxima; peak location is ambiguous")]
    MultimodalPeak(usize),
}

pub type Result<T> = std::result::Result<T, Error>;
