//! Transmission amplitude of a rectangular barrier.
//!
//! The closed form
//!
//! ```text
//! T(p, W) = 4 p k exp(-i p d) / [(k+p)^2 exp(-i k d) - (k-p)^2 exp(i k d)],
//! k = (p^2 - 2W)^{1/2}  (principal branch),
//! ```
//!
//! is evaluated in the algebraically equivalent form
//!
//! ```text
//! T = 4 p exp(-i p d) exp(i k d) / [4 p - 2 i d (k-p)^2 phi(2 i k d)],
//! phi(z) = (exp(z) - 1) / z,
//! ```
//!
//! which factors the decaying exponential out of the denominator.  No term
//! grows like exp(+kappa d), so the expression stays in floating range for
//! arbitrarily opaque barriers, and it is analytic across the branch point
//! p^2 = 2W where the textbook form degenerates to 0/0.

use num_complex::Complex64;

use crate::error::{Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Rectangular barrier of height `W` occupying `[x0, x0 + d]`.
///
/// The transmission amplitude does not depend on the offset `x0`; only the
/// grid-based time evolution needs a concrete barrier position.
#[derive(Debug, Clone, PartialEq)]
pub struct Barrier {
    height: f64,
    width: f64,
    offset: f64,
}

impl Barrier {
    pub fn new(height: f64, width: f64, offset: f64) -> Result<Self> {
        if !height.is_finite() || height <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "barrier height must be positive and finite, got {height}"
            )));
        }
        if !width.is_finite() || width <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "barrier width must be positive and finite, got {width}"
            )));
        }
        if !offset.is_finite() || offset < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "barrier offset must be non-negative, got {offset}"
            )));
        }
        Ok(Self {
            height,
            width,
            offset,
        })
    }

    /// Barrier with a given opacity `beta = sqrt(2 W) d` at fixed width.
    pub fn from_beta(beta: f64, width: f64) -> Result<Self> {
        if !beta.is_finite() || beta <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "beta must be positive and finite, got {beta}"
            )));
        }
        let height = 0.5 * (beta / width) * (beta / width);
        Self::new(height, width, 0.0)
    }

    pub fn height(&self) -> f64 {
        self.height
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn with_offset(mut self, offset: f64) -> Result<Self> {
        if !offset.is_finite() || offset < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "barrier offset must be non-negative, got {offset}"
            )));
        }
        self.offset = offset;
        Ok(self)
    }

    /// Opacity `beta = sqrt(2 W) d`.
    pub fn beta(&self) -> f64 {
        (2.0 * self.height).sqrt() * self.width
    }

    /// Potential at position `x`.
    pub fn potential(&self, x: f64) -> f64 {
        if x >= self.offset && x <= self.offset + self.width {
            self.height
        } else {
            0.0
        }
    }
}

/// Complex amplitude carried as (ln |z|, arg z); survives magnitudes far
/// below the double-precision underflow threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogAmplitude {
    pub log_mag: f64,
    pub phase: f64,
}

impl LogAmplitude {
    pub fn from_complex(z: Complex64) -> Self {
        Self {
            log_mag: z.norm().ln(),
            phase: z.arg(),
        }
    }

    /// exp(log_mag) * exp(i phase); may underflow or overflow gracefully.
    pub fn value(&self) -> Complex64 {
        Complex64::from_polar(self.log_mag.exp(), self.phase)
    }

    /// Ratio `self / other` as a linear-domain complex number.
    pub fn ratio(&self, other: &LogAmplitude) -> Complex64 {
        Complex64::from_polar(
            (self.log_mag - other.log_mag).exp(),
            self.phase - other.phase,
        )
    }

    /// Complex logarithm `log_mag + i phase`.
    pub fn to_complex_log(&self) -> Complex64 {
        Complex64::new(self.log_mag, self.phase)
    }
}

/// Wavenumber inside the barrier, `k = (p^2 - 2W)^{1/2}` on the principal
/// branch: real and positive above the barrier, `i kappa` with
/// `kappa = sqrt(2W - p^2) > 0` below.
pub fn wavenumber(p: f64, height: f64) -> Complex64 {
    let s = p * p - 2.0 * height;
    if s >= 0.0 {
        Complex64::new(s.sqrt(), 0.0)
    } else {
        Complex64::new(0.0, (-s).sqrt())
    }
}

/// (exp(z) - 1) / z, stable near z = 0.
fn phi(z: Complex64) -> Complex64 {
    if z.norm() < 1e-3 {
        // relative error below 1e-14 for |z| < 1e-3
        1.0 + z / 2.0 * (1.0 + z / 3.0 * (1.0 + z / 4.0 * (1.0 + z / 5.0)))
    } else {
        (z.exp() - 1.0) / z
    }
}

/// Denominator 4p - 2 i d (k-p)^2 phi(2 i k d) of the stable form.
fn denominator(p: Complex64, k: Complex64, d: f64) -> Complex64 {
    let km = k - p;
    4.0 * p - 2.0 * I * d * km * km * phi(2.0 * I * k * d)
}

/// Transmission amplitude for real momentum `p`.
///
/// `T(-p) = conj(T(p))`, `|T| <= 1`, and `T` is even in the sign choice of
/// the internal wavenumber.  Errors only when the magnitude underflows to
/// exactly zero; use [`transmission_log`] in that regime.
pub fn transmission(p: f64, b: &Barrier) -> Result<Complex64> {
    let d = b.width();
    let k = wavenumber(p, b.height());
    let damp = (I * k * d).exp();
    if p != 0.0 && damp.norm() == 0.0 {
        return Err(Error::TransmissionUnderflow {
            log_magnitude: transmission_log(p, b).log_mag,
        });
    }
    let den = denominator(Complex64::new(p, 0.0), k, d);
    Ok(4.0 * p * (-I * p * d).exp() * damp / den)
}

/// Transmission amplitude at complex momentum.
///
/// The wavenumber sign is chosen with `Im k >= 0` so the factored
/// exponential always decays; `T` is even in `k`, so the value is unchanged.
pub fn transmission_complex(p: Complex64, b: &Barrier) -> Complex64 {
    let d = b.width();
    let mut k = (p * p - 2.0 * b.height()).sqrt();
    if k.im < 0.0 || (k.im == 0.0 && k.re < 0.0) {
        k = -k;
    }
    let den = denominator(p, k, d);
    4.0 * p * (-I * p * d).exp() * (I * k * d).exp() / den
}

/// Transmission amplitude in the log domain.
///
/// Defined for all `p` (log-magnitude is -inf at `p = 0`), including opaque
/// barriers where `|T|` underflows doubles.  The dominant phase `-p d`
/// (plus `k d` above the barrier) enters analytically, so the returned phase
/// is continuous in `p` except where the slowly varying denominator crosses
/// the branch cut of `arg`.
pub fn transmission_log(p: f64, b: &Barrier) -> LogAmplitude {
    let d = b.width();
    if p == 0.0 {
        return LogAmplitude {
            log_mag: f64::NEG_INFINITY,
            phase: 0.0,
        };
    }
    let k = wavenumber(p, b.height());
    let ikd = I * k * d;
    let den = denominator(Complex64::new(p, 0.0), k, d);
    let sign_phase = if p < 0.0 { std::f64::consts::PI } else { 0.0 };
    LogAmplitude {
        log_mag: (4.0 * p.abs()).ln() + ikd.re - den.norm().ln(),
        phase: -p * d + ikd.im + sign_phase - den.arg(),
    }
}

/// Partial sum of the multiple-reflection expansion
///
/// ```text
/// T = [4 p k e^{-i(p-k)d} / (p+k)^2] * sum_n [((p-k)/(p+k))^2 e^{2ikd}]^n,
/// ```
///
/// whose ratio has modulus exp(-2 kappa d) < 1 under the barrier and
/// |(p-k)/(p+k)|^2 < 1 above it.  Fails the ratio test exactly at the branch
/// point `p^2 = 2W`.
pub fn transmission_series(p: f64, b: &Barrier, n_terms: usize) -> Result<Complex64> {
    if n_terms == 0 {
        return Err(Error::InvalidParameter(
            "series needs at least one term".into(),
        ));
    }
    let d = b.width();
    let k = wavenumber(p, b.height());
    let sum_pk = k + p;
    if sum_pk.norm() == 0.0 {
        return Err(Error::SeriesNotConvergent { ratio: f64::INFINITY });
    }
    let refl = (p - k) / sum_pk;
    let ratio = refl * refl * (2.0 * I * k * d).exp();
    if ratio.norm() >= 1.0 {
        return Err(Error::SeriesNotConvergent {
            ratio: ratio.norm(),
        });
    }
    let prefactor = 4.0 * p * k * (-I * (p - k) * d).exp() / (sum_pk * sum_pk);
    let mut sum = Complex64::new(0.0, 0.0);
    let mut term = Complex64::new(1.0, 0.0);
    for _ in 0..n_terms {
        sum += term;
        term *= ratio;
    }
    Ok(prefactor * sum)
}

/// Log-domain prefactor `B(W) = -4 i (2W)^{-1/2} exp(-sqrt(2W) d)` of the
/// high-barrier form `T ~ B(W) p exp(-i p d)`.
pub fn high_barrier_prefactor_log(b: &Barrier) -> LogAmplitude {
    let s2w = (2.0 * b.height()).sqrt();
    LogAmplitude {
        log_mag: (4.0 / s2w).ln() - b.beta(),
        phase: -std::f64::consts::FRAC_PI_2,
    }
}

/// High-barrier approximation `B(W) p exp(-i p d)` in the log domain.
pub fn high_barrier_approx_log(p: f64, b: &Barrier) -> LogAmplitude {
    let pre = high_barrier_prefactor_log(b);
    if p == 0.0 {
        return LogAmplitude {
            log_mag: f64::NEG_INFINITY,
            phase: 0.0,
        };
    }
    let sign_phase = if p < 0.0 { std::f64::consts::PI } else { 0.0 };
    LogAmplitude {
        log_mag: pre.log_mag + p.abs().ln(),
        phase: pre.phase + sign_phase - p * b.width(),
    }
}

/// High-barrier approximation as a linear-domain amplitude (underflows
/// gracefully to zero for very opaque barriers).
pub fn high_barrier_approx(p: f64, b: &Barrier) -> Complex64 {
    if p == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    high_barrier_approx_log(p, b).value()
}

/// Complex shift and prefactor of the wide-barrier form
/// `T(p) ~ B(p0, W) exp(-i p alpha)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftEstimate {
    /// alpha = d + i p0 d / sqrt(2W - p0^2); the real part is the barrier
    /// width, the imaginary part encodes momentum filtering.
    pub alpha: Complex64,
    /// Linear-domain prefactor B(p0, W); underflows to zero for very opaque
    /// barriers, in which case `prefactor_log` remains usable.
    pub prefactor_b: Complex64,
    /// Log-domain form of `prefactor_b`.
    pub prefactor_log: LogAmplitude,
}

impl ShiftEstimate {
    /// Log-domain value of the exponential family `B exp(-i p alpha)` at
    /// momentum `p`.
    pub fn amplitude_log(&self, p: f64) -> LogAmplitude {
        LogAmplitude {
            log_mag: self.prefactor_log.log_mag + p * self.alpha.im,
            phase: self.prefactor_log.phase - p * self.alpha.re,
        }
    }
}

/// Expansion of the transmission amplitude about `p0` in the tunnelling
/// regime `0 < p0^2 < 2W`: `T(p) ~ B exp(-i p alpha)` with
/// `k0 = i sqrt(2W - p0^2)` and
/// `B = 4 p0 k0 exp[-i d (p0 - k0) + i alpha p0] / (p0 + k0)^2`.
pub fn wide_barrier_params(p0: f64, b: &Barrier) -> Result<ShiftEstimate> {
    let two_w = 2.0 * b.height();
    if p0.is_nan() || p0 <= 0.0 || p0 * p0 >= two_w {
        return Err(Error::InvalidParameter(format!(
            "wide-barrier expansion needs 0 < p0^2 < 2W, got p0 = {p0}, 2W = {two_w}"
        )));
    }
    let d = b.width();
    let kappa0 = (two_w - p0 * p0).sqrt();
    let k0 = Complex64::new(0.0, kappa0);
    let alpha = Complex64::new(d, p0 * d / kappa0);
    // The exponent -i d (p0 - k0) + i alpha p0 is real and negative:
    // -d (kappa0 + p0^2 / kappa0).
    let exponent = -d * (kappa0 + p0 * p0 / kappa0);
    let pre = 4.0 * p0 * k0 / ((p0 + k0) * (p0 + k0));
    let prefactor_log = LogAmplitude {
        log_mag: pre.norm().ln() + exponent,
        phase: pre.arg(),
    };
    Ok(ShiftEstimate {
        alpha,
        prefactor_b: prefactor_log.value(),
        prefactor_log,
    })
}
