//! Scalar helpers shared across the crate.

use num_complex::Complex;
use rand::Rng;
use rand_distr::StandardNormal;

/// Complex baseband sample.
pub type C64 = Complex<f64>;

pub const TAU: f64 = core::f64::consts::TAU;

/// `exp(j * phase)`.
#[inline]
pub fn cis(phase: f64) -> C64 {
    let (s, c) = libm::sincos(phase);
    C64::new(c, s)
}

/// Gaussian tail probability `Q(x) = P(N(0,1) > x)`, via `erfc`.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / core::f64::consts::SQRT_2)
}

pub fn db_to_linear(db: f64) -> f64 {
    libm::pow(10.0, db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * libm::log10(x)
}

/// Circularly symmetric complex Gaussian draw with total variance
/// `variance` (each part has half of it).
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> C64 {
    let s = libm::sqrt(0.5 * variance);
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(s * re, s * im)
}

/// Squared Euclidean norm of a complex slice.
pub fn energy(x: &[C64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum()
}
