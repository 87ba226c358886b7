//! Gaussian wavepackets: momentum amplitude, free envelope with complex
//! spatial argument, and the free probability density.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Gaussian pulse of spatial width `sigma` and mean momentum `p0`, centred
/// at x = 0 at t = 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianPacket {
    sigma: f64,
    p0: f64,
}

impl GaussianPacket {
    pub fn new(sigma: f64, p0: f64) -> Result<Self> {
        if !sigma.is_finite() || sigma <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "packet width must be positive and finite, got {sigma}"
            )));
        }
        if !p0.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "packet momentum must be finite, got {p0}"
            )));
        }
        Ok(Self { sigma, p0 })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn p0(&self) -> f64 {
        self.p0
    }

    /// Gaussian momentum-space width, `sigma_p = 2 / sigma`.
    pub fn sigma_p(&self) -> f64 {
        2.0 / self.sigma
    }

    /// Complex squared width `sigma_t^2 = sigma^2 + 2 i t` tracking the
    /// spreading of the free envelope.
    pub fn width_sq(&self, t: f64) -> Complex64 {
        Complex64::new(self.sigma * self.sigma, 2.0 * t)
    }
}

/// Momentum amplitude `A(p - p0) = sigma^{1/2} / (2 pi)^{3/4} *
/// exp[-(p - p0)^2 sigma^2 / 4]`.
///
/// Real and positive; normalized so that `2 pi Int |A|^2 dp = 1` in the
/// bare-`dp` integral convention used throughout.
pub fn momentum_amplitude(p: f64, pk: &GaussianPacket) -> f64 {
    let q = (p - pk.p0) * pk.sigma;
    pk.sigma.sqrt() / (2.0 * std::f64::consts::PI).powf(0.75) * (-q * q / 4.0).exp()
}

/// Free envelope `G0(z, t) = (2 sigma^2 / pi)^{1/4} exp[-(z - p0 t)^2 /
/// sigma_t^2] / sqrt(sigma_t^2)`.
///
/// Entire in the spatial argument `z`; complex arguments evaluate the same
/// closed form (needed for the wide-barrier complex shift).
pub fn free_envelope(z: Complex64, t: f64, pk: &GaussianPacket) -> Complex64 {
    let st2 = pk.width_sq(t);
    let u = z - pk.p0 * t;
    let norm = (2.0 * pk.sigma * pk.sigma / std::f64::consts::PI).powf(0.25);
    norm * (-u * u / st2).exp() / st2.sqrt()
}

/// Analytic spatial derivative of the free envelope.
pub fn free_envelope_dx(z: Complex64, t: f64, pk: &GaussianPacket) -> Complex64 {
    let st2 = pk.width_sq(t);
    let u = z - pk.p0 * t;
    -2.0 * u / st2 * free_envelope(z, t, pk)
}

/// Free probability density `rho0(x, t) = |G0(x, t)|^2`: a Gaussian whose
/// peak rides on x = p0 t and whose squared width grows as
/// `(sigma^4 + 4 t^2) / sigma^2`.
pub fn free_density(x: f64, t: f64, pk: &GaussianPacket) -> f64 {
    free_envelope(Complex64::new(x, 0.0), t, pk).norm_sqr()
}
