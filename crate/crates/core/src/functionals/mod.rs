//! Path functionals: L^p moduli, self-intersection derivative γ_t, the
//! Clark–Ocone integrand and the reversed Tanaka identity.

pub mod clark_ocone;
pub mod gamma;
pub mod modulus;
pub mod tanaka;

pub use clark_ocone::{clark_ocone_sum, phi_terms, ClarkOconeSum, PhiEvaluator, PhiSample};
pub use gamma::{gamma_eps, gamma_rep, GammaEstimate, GammaMethod};
pub use modulus::{modulus_lp, self_lp, Estimator, LocalTimeView, ModulusStat};
pub use tanaka::{reversed_tanaka_residual, TanakaResidual};
