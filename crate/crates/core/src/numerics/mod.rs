//! Special functions, quadrature and statistical primitives.

pub mod quadrature;
pub mod special;
pub mod stats;

pub use quadrature::{adaptive_simpson, GaussLegendre};
pub use special::{
    erf, erfc, g_kernel, heat_kernel, heat_kernel_dx, normal_cdf, normal_quantile, tail_k,
    SQRT_2PI,
};
pub use stats::{ks_normal, loglog_slope, sample_moments, KsResult, MomentSummary};
