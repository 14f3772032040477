//! Special functions: gamma family, quadrature and the Meijer G-function.

pub mod gamma;
pub mod meijer;
pub mod quadrature;

pub use gamma::{beta, ln_beta, ln_gamma_complex, log_gamma, q_function};
pub use meijer::{meijer_g, meijer_g_scaled, mellin_barnes, GMethod, GParams, GValue, SeriesControl};
pub use quadrature::{gauss_legendre, GaussLegendre};
