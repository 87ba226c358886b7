//! Transmitted-pulse synthesis by independent routes.
//!
//! Route 1 integrates `T(p) A(p - p0) exp(i p x - i p^2 t / 2)` over
//! momentum; route 2 convolves the free envelope against the delay amplitude
//! distribution in coordinate space; [`pde`] evolves the wavefunction on a
//! grid as a brute-force cross-check.  Closed-form high-barrier and
//! wide-barrier approximants complete the family.

pub mod pde;

use num_complex::Complex64;

use crate::barrier::{
    self, Barrier, LogAmplitude, ShiftEstimate,
};
use crate::dad::DelayAmplitudeDistribution;
use crate::error::{Error, Result};
use crate::grid::{KahanSum, SampledComplexFunction, UniformGrid};
use crate::packet::{self, GaussianPacket};

/// Normalization of a synthesized pulse.
///
/// `RatioToTransmission` divides the envelope by the transmission amplitude
/// at the packet's mean momentum (the exact routes by the exact `T(p0)`,
/// each closed-form approximant by its own `T(p0)`) using log-domain
/// arithmetic, so the samples stay order unity for arbitrarily opaque
/// barriers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormalizationMode {
    Absolute,
    RatioToTransmission,
}

/// Envelope of the transmitted pulse on a coordinate grid at fixed time.
#[derive(Debug, Clone)]
pub struct TransmittedPulse {
    pub envelope: SampledComplexFunction,
    pub p0: f64,
    pub t: f64,
    pub mode: NormalizationMode,
}

impl TransmittedPulse {
    /// Location of the maximum of |envelope|^2, refined by three-point
    /// parabolic interpolation around the grid argmax.
    pub fn peak_position(&self) -> Result<f64> {
        let dens: Vec<f64> = self.envelope.values.iter().map(|v| v.norm_sqr()).collect();
        peak_of_samples(&self.envelope.grid, &dens)
    }
}

/// Sub-grid peak of sampled values via parabolic interpolation; errors when
/// several comparable local maxima make the peak ambiguous.
pub(crate) fn peak_of_samples(grid: &UniformGrid, dens: &[f64]) -> Result<f64> {
    let n = dens.len();
    let (mut imax, mut vmax) = (0, f64::MIN);
    for (i, &v) in dens.iter().enumerate() {
        if v > vmax {
            vmax = v;
            imax = i;
        }
    }
    let mut comparable = 0usize;
    for i in 1..n - 1 {
        if dens[i] > dens[i - 1] && dens[i] > dens[i + 1] && dens[i] > 0.5 * vmax {
            comparable += 1;
        }
    }
    if comparable > 1 {
        return Err(Error::MultimodalPeak(comparable));
    }
    if imax == 0 || imax == n - 1 {
        return Ok(grid.point(imax));
    }
    let (y0, y1, y2) = (dens[imax - 1], dens[imax], dens[imax + 1]);
    let denom = y0 - 2.0 * y1 + y2;
    let shift = if denom != 0.0 {
        0.5 * (y0 - y2) / denom
    } else {
        0.0
    };
    Ok(grid.point(imax) + shift * grid.step())
}

/// Momentum quadrature for the integral route: a uniform grid of
/// `points` samples spanning `p0 +- half_width_sigmas * sigma_p`.
#[derive(Debug, Clone)]
pub struct MomentumQuadrature {
    pub half_width_sigmas: f64,
    pub points: usize,
    /// Largest tolerated edge magnitude of the integrand relative to its
    /// maximum.
    pub edge_tol: f64,
}

impl Default for MomentumQuadrature {
    fn default() -> Self {
        Self {
            half_width_sigmas: 14.0,
            points: 8192,
            edge_tol: 1e-12,
        }
    }
}

/// Synthesizes the envelope `exp(-i p0 x + i p0^2 t / 2) Int w(p)
/// A(p - p0) exp(i p x - i p^2 t / 2) dp` for an arbitrary spectral weight
/// `w`; the exact transmitted pulse uses `w = T`, the free envelope `w = 1`.
pub fn synthesize_envelope<F>(
    spectral_weight: F,
    pk: &GaussianPacket,
    t: f64,
    xgrid: &UniformGrid,
    quad: &MomentumQuadrature,
) -> Result<SampledComplexFunction>
where
    F: Fn(f64) -> Complex64,
{
    let half = quad.half_width_sigmas * pk.sigma_p();
    let pgrid = UniformGrid::from_bounds(pk.p0() - half, pk.p0() + half, quad.points)?;
    let dp = pgrid.step();
    let weights: Vec<Complex64> = pgrid
        .points()
        .map(|p| spectral_weight(p) * packet::momentum_amplitude(p, pk))
        .collect();
    let wmax = weights.iter().fold(0.0f64, |m, w| m.max(w.norm()));
    let edge = weights[0].norm().max(weights[quad.points - 1].norm());
    if wmax > 0.0 && edge > quad.edge_tol * wmax {
        return Err(Error::QuadratureEdgeNotDecayed(edge / wmax));
    }
    let mut values = Vec::with_capacity(xgrid.len());
    for x in xgrid.points() {
        let mut acc = KahanSum::new();
        for (j, p) in pgrid.points().enumerate() {
            let trap = if j == 0 || j == quad.points - 1 {
                0.5
            } else {
                1.0
            };
            let phase = p * x - 0.5 * p * p * t;
            acc.add(weights[j] * Complex64::from_polar(trap, phase));
        }
        let carrier = Complex64::from_polar(1.0, -pk.p0() * x + 0.5 * pk.p0() * pk.p0() * t);
        values.push(acc.value() * dp * carrier);
    }
    SampledComplexFunction::new(xgrid.clone(), values)
}

/// Route 1: transmitted envelope from the momentum integral.
///
/// In ratio mode the spectral weight is `T(p)/T(p0)` assembled from
/// log-domain differences, which never leaves floating range.
pub fn transmitted_envelope(
    b: &Barrier,
    pk: &GaussianPacket,
    t: f64,
    xgrid: &UniformGrid,
    mode: NormalizationMode,
    quad: &MomentumQuadrature,
) -> Result<TransmittedPulse> {
    let envelope = match mode {
        NormalizationMode::Absolute => {
            let failure = std::cell::RefCell::new(None::<Error>);
            let env = synthesize_envelope(
                |p| match barrier::transmission(p, b) {
                    Ok(tp) => tp,
                    Err(e) => {
                        failure.borrow_mut().get_or_insert(e);
                        Complex64::default()
                    }
                },
                pk,
                t,
                xgrid,
                quad,
            )?;
            if let Some(e) = failure.into_inner() {
                return Err(e);
            }
            env
        }
        NormalizationMode::RatioToTransmission => {
            let t0 = barrier::transmission_log(pk.p0(), b);
            synthesize_envelope(
                |p| barrier::transmission_log(p, b).ratio(&t0),
                pk,
                t,
                xgrid,
                quad,
            )?
        }
    };
    Ok(TransmittedPulse {
        envelope,
        p0: pk.p0(),
        t,
        mode,
    })
}

/// Applies the delay kernel to an arbitrary envelope:
/// `singular_weight * env(x) + Int smooth(x') env(x - x') dx'`.
///
/// This is the transmitted envelope divided by `T(p0)`; multiply by `T(p0)`
/// for the absolute pulse.
pub fn convolve_envelope<F>(
    dad: &DelayAmplitudeDistribution,
    envelope: F,
    xgrid: &UniformGrid,
) -> Result<SampledComplexFunction>
where
    F: Fn(f64) -> Complex64,
{
    let dx = dad.smooth.grid.step();
    let n = dad.smooth.len();
    let mut values = Vec::with_capacity(xgrid.len());
    for x in xgrid.points() {
        let mut acc = KahanSum::new();
        for (j, (xp, v)) in dad.smooth.iter().enumerate() {
            let trap = if j == 0 || j == n - 1 { 0.5 } else { 1.0 };
            acc.add(v * envelope(x - xp) * trap);
        }
        values.push(acc.value() * dx + dad.singular_weight * envelope(x));
    }
    SampledComplexFunction::new(xgrid.clone(), values)
}

/// Route 2: transmitted envelope reconstructed as a coordinate-space
/// convolution of the free envelope against the delay amplitude
/// distribution.  Serves as the independent cross-check of
/// [`transmitted_envelope`].
pub fn convolution_reconstruct(
    dad: &DelayAmplitudeDistribution,
    pk: &GaussianPacket,
    t: f64,
    xgrid: &UniformGrid,
    mode: NormalizationMode,
) -> Result<TransmittedPulse> {
    // restrict the kernel sum to shifts where the envelope is non-negligible;
    // skipped terms carry Gaussian factors below exp(-144)
    let reach = 12.0 * pk.width_sq(t).norm() / pk.sigma();
    let center = pk.p0() * t;

    let dx = dad.smooth.grid.step();
    let mut values = Vec::with_capacity(xgrid.len());
    for x in xgrid.points() {
        let mut acc = KahanSum::new();
        for (j, (xp, v)) in dad.smooth.iter().enumerate() {
            let u = x - xp;
            if (u - center).abs() > reach {
                continue;
            }
            let trap = if j == 0 || j == dad.smooth.len() - 1 {
                0.5
            } else {
                1.0
            };
            acc.add(v * packet::free_envelope(Complex64::new(u, 0.0), t, pk) * trap);
        }
        let env_x = packet::free_envelope(Complex64::new(x, 0.0), t, pk);
        values.push(acc.value() * dx + dad.singular_weight * env_x);
    }
    let mut envelope = SampledComplexFunction::new(xgrid.clone(), values)?;
    if mode == NormalizationMode::Absolute {
        let t_p0 = 1.0 / dad.singular_weight;
        for v in &mut envelope.values {
            *v *= t_p0;
        }
    }
    Ok(TransmittedPulse {
        envelope,
        p0: pk.p0(),
        t,
        mode,
    })
}

/// High-barrier closed form: `T(p0) [G0(x - d) - i dG0(x - d)/dx / p0]`, the
/// envelope advanced by the barrier width with a 1/p0 distortion correction.
///
/// Ratio mode divides by this family's own `T(p0)` (the high-barrier
/// amplitude), leaving the bracketed shape.
pub fn high_barrier_pulse(
    b: &Barrier,
    pk: &GaussianPacket,
    t: f64,
    xgrid: &UniformGrid,
    mode: NormalizationMode,
) -> Result<TransmittedPulse> {
    if pk.p0() == 0.0 {
        return Err(Error::InvalidParameter(
            "high-barrier correction term needs p0 != 0".into(),
        ));
    }
    let d = b.width();
    let scale = match mode {
        NormalizationMode::Absolute => barrier::high_barrier_approx(pk.p0(), b),
        NormalizationMode::RatioToTransmission => Complex64::new(1.0, 0.0),
    };
    let i = Complex64::new(0.0, 1.0);
    let values: Vec<Complex64> = xgrid
        .points()
        .map(|x| {
            let z = Complex64::new(x - d, 0.0);
            let g = packet::free_envelope(z, t, pk);
            let gp = packet::free_envelope_dx(z, t, pk);
            scale * (g - i * gp / pk.p0())
        })
        .collect();
    Ok(TransmittedPulse {
        envelope: SampledComplexFunction::new(xgrid.clone(), values)?,
        p0: pk.p0(),
        t,
        mode,
    })
}

/// Wide-barrier closed form: `B(p0, W) G0(x - alpha)` with the envelope
/// translated by the complex shift `alpha`, evaluated from the closed
/// Gaussian expression (never by continuing sampled data).
///
/// Ratio mode returns the bare shifted envelope `G0(x - alpha)`, which is
/// what the exact ratio-mode pulse converges to: with `T(p)/T(p0) ~
/// exp[-i (p - p0) alpha]` the momentum integral is precisely the free
/// envelope at the complex-shifted argument.
pub fn wide_barrier_pulse(
    shift: &ShiftEstimate,
    pk: &GaussianPacket,
    t: f64,
    xgrid: &UniformGrid,
    mode: NormalizationMode,
) -> Result<TransmittedPulse> {
    let scale: Complex64 = match mode {
        NormalizationMode::Absolute => shift.prefactor_b,
        NormalizationMode::RatioToTransmission => Complex64::new(1.0, 0.0),
    };
    let values: Vec<Complex64> = xgrid
        .points()
        .map(|x| {
            let z = Complex64::new(x, 0.0) - shift.alpha;
            scale * packet::free_envelope(z, t, pk)
        })
        .collect();
    Ok(TransmittedPulse {
        envelope: SampledComplexFunction::new(xgrid.clone(), values)?,
        p0: pk.p0(),
        t,
        mode,
    })
}

/// Log-domain amplitude by which a ratio-mode approximant differs from the
/// exact ratio-mode pulse: `T_family(p0) / T_exact(p0)`.
pub fn family_amplitude_defect(family_t0: &LogAmplitude, exact_t0: &LogAmplitude) -> Complex64 {
    family_t0.ratio(exact_t0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::barrier::{transmission, transmission_log, wide_barrier_params};
    use crate::dad::{dad_from_xi, xi_smooth};
    use crate::grid::{MomentumGrid, Taper};

    #[test]
    fn momentum_route_recovers_free_envelope() {
        // W -> 0: T = 1 and the synthesized envelope equals the closed form
        let b = Barrier::new(1e-14, 1.0, 0.0).unwrap();
        let pk = GaussianPacket::new(3.0, 1.2).unwrap();
        let t = 7.5;
        let xgrid = UniformGrid::from_bounds(t * 1.2 - 12.0, t * 1.2 + 12.0, 301).unwrap();
        let pulse = transmitted_envelope(
            &b,
            &pk,
            t,
            &xgrid,
            NormalizationMode::Absolute,
            &MomentumQuadrature::default(),
        )
        .unwrap();
        let mut worst = 0.0f64;
        let mut peak = 0.0f64;
        for (x, v) in pulse.envelope.iter() {
            let free = packet::free_envelope(Complex64::new(x, 0.0), t, &pk);
            worst = worst.max((v - free).norm());
            peak = peak.max(free.norm());
        }
        assert!(worst / peak < 1e-8, "defect {}", worst / peak);
    }

    #[test]
    fn quadrature_edge_guard_fires_for_narrow_grid() {
        let b = Barrier::new(1e-14, 1.0, 0.0).unwrap();
        let pk = GaussianPacket::new(3.0, 1.2).unwrap();
        let xgrid = UniformGrid::from_bounds(0.0, 1.0, 8).unwrap();
        let quad = MomentumQuadrature {
            half_width_sigmas: 2.0,
            points: 512,
            edge_tol: 1e-12,
        };
        match transmitted_envelope(
            &b,
            &pk,
            1.0,
            &xgrid,
            NormalizationMode::Absolute,
            &quad,
        ) {
            Err(Error::QuadratureEdgeNotDecayed(r)) => assert!(r > 1e-12),
            other => panic!("expected edge guard, got {other:?}"),
        }
    }

    #[test]
    fn convolution_with_pure_delta_scales_envelope() {
        // T = 1 kernel: smooth part vanishes; the absolute pulse is
        // T(p0) [singular * G0] = G0 and the ratio pulse is G0 / T(p0)
        let grid = MomentumGrid::new(-20.0, 20.0, 2048).unwrap();
        let xi = xi_smooth(|_p| Complex64::new(1.0, 0.0), &grid, &Taper::default()).unwrap();
        let t_p0 = Complex64::new(0.6, 0.3);
        let dad = dad_from_xi(&xi, 0.9, t_p0).unwrap();
        let pk = GaussianPacket::new(2.0, 0.9).unwrap();
        let t = 4.0;
        let xgrid = UniformGrid::from_bounds(-8.0, 14.0, 111).unwrap();
        let abs_pulse =
            convolution_reconstruct(&dad, &pk, t, &xgrid, NormalizationMode::Absolute).unwrap();
        let ratio_pulse = convolution_reconstruct(
            &dad,
            &pk,
            t,
            &xgrid,
            NormalizationMode::RatioToTransmission,
        )
        .unwrap();
        let mut worst = 0.0f64;
        for ((x, va), (_, vr)) in abs_pulse.envelope.iter().zip(ratio_pulse.envelope.iter()) {
            let g0 = packet::free_envelope(Complex64::new(x, 0.0), t, &pk);
            worst = worst.max((va - g0).norm());
            worst = worst.max((vr - g0 / t_p0).norm());
        }
        assert!(worst < 1e-12, "defect {worst}");
    }

    #[test]
    fn high_barrier_pulse_peak_advanced_by_width() {
        let b = Barrier::from_beta(700.0, 1.0).unwrap();
        let pk = GaussianPacket::new(5.0, 12.0).unwrap();
        let t = (10.0 * pk.sigma() + b.width()) / pk.p0();
        let center = pk.p0() * t;
        let xgrid = UniformGrid::from_bounds(center - 20.0, center + 20.0, 2001).unwrap();
        let pulse =
            high_barrier_pulse(&b, &pk, t, &xgrid, NormalizationMode::RatioToTransmission)
                .unwrap();
        let peak = pulse.peak_position().unwrap();
        let advance = peak - center;
        assert!(
            (advance - b.width()).abs() / b.width() < 0.05,
            "advance = {advance}"
        );
    }

    #[test]
    fn high_barrier_correction_fades_for_fast_packets() {
        let b = Barrier::from_beta(100.0, 1.0).unwrap();
        let t = 2.0;
        let mut last = f64::INFINITY;
        for p0 in [5.0, 20.0, 80.0] {
            let pk = GaussianPacket::new(5.0, p0).unwrap();
            let center = p0 * t + b.width();
            let xgrid = UniformGrid::from_bounds(center - 15.0, center + 15.0, 501).unwrap();
            let pulse =
                high_barrier_pulse(&b, &pk, t, &xgrid, NormalizationMode::RatioToTransmission)
                    .unwrap();
            // compare against the uncorrected shifted copy
            let mut worst = 0.0f64;
            let mut peak = 0.0f64;
            for (x, v) in pulse.envelope.iter() {
                let pure = packet::free_envelope(Complex64::new(x - b.width(), 0.0), t, &pk);
                worst = worst.max((v - pure).norm());
                peak = peak.max(pure.norm());
            }
            let rel = worst / peak;
            assert!(rel < last, "p0 = {p0}: {rel} >= {last}");
            last = rel;
        }
        assert!(last < 5e-3);
    }

    #[test]
    fn wide_barrier_pulse_with_real_shift_is_shifted_copy() {
        let pk = GaussianPacket::new(10.0, 0.5).unwrap();
        let t = 30.0;
        let shift = ShiftEstimate {
            alpha: Complex64::new(4.0, 0.0),
            prefactor_b: Complex64::new(0.2, -0.1),
            prefactor_log: LogAmplitude::from_complex(Complex64::new(0.2, -0.1)),
        };
        let xgrid = UniformGrid::from_bounds(0.0, 40.0, 201).unwrap();
        let pulse =
            wide_barrier_pulse(&shift, &pk, t, &xgrid, NormalizationMode::Absolute).unwrap();
        for (x, v) in pulse.envelope.iter() {
            let expect = shift.prefactor_b
                * packet::free_envelope(Complex64::new(x - 4.0, 0.0), t, &pk);
            assert!((v - expect).norm() < 1e-14);
        }
    }

    #[test]
    fn wide_barrier_family_defect_shrinks_with_width() {
        // |T_wide(p0) / T_exact(p0) - 1| is the weight of the n >= 1
        // multiple reflections, ~exp(-2 kappa0 d); it dies fast with width
        let w = 0.5;
        let p0 = 0.5;
        let mut last = f64::INFINITY;
        for d in [6.0, 12.0] {
            let b = Barrier::new(w, d, 0.0).unwrap();
            let shift = wide_barrier_params(p0, &b).unwrap();
            let exact = transmission_log(p0, &b);
            let defect =
                (family_amplitude_defect(&shift.amplitude_log(p0), &exact) - 1.0).norm();
            assert!(defect < last, "d = {d}: {defect}");
            last = defect;
        }
        assert!(last < 1e-6, "defect {last}");
    }

    #[test]
    fn tail_identity_no_information_from_the_tail() {
        // two envelopes identical ahead of a cut produce transmitted pulses
        // identical ahead of the cut
        let b = Barrier::new(2.0, 5.0, 0.0).unwrap();
        let grid = MomentumGrid::reference(b.height()).unwrap();
        let xi = xi_smooth(|p| transmission(p, &b).unwrap(), &grid, &Taper::default()).unwrap();
        let p0 = 0.6;
        let dad = dad_from_xi(&xi, p0, transmission(p0, &b).unwrap()).unwrap();
        let pk = GaussianPacket::new(8.0, p0).unwrap();
        let t = 60.0;
        let bump_center = p0 * t - 25.0;
        let bump_width = 2.0;
        let env1 = |u: f64| packet::free_envelope(Complex64::new(u, 0.0), t, &pk);
        let env2 = |u: f64| {
            env1(u)
                + 0.4 * (-(u - bump_center) * (u - bump_center) / (bump_width * bump_width)).exp()
        };
        // compare well ahead of the bump support and the causality guard
        let x_lo = bump_center + 12.0 * bump_width + 1.0;
        let xgrid = UniformGrid::from_bounds(x_lo, x_lo + 30.0, 61).unwrap();
        let o1 = convolve_envelope(&dad, env1, &xgrid).unwrap();
        let o2 = convolve_envelope(&dad, env2, &xgrid).unwrap();
        let scale = o1.max_abs();
        let mut worst = 0.0f64;
        for (a, b2) in o1.values.iter().zip(o2.values.iter()) {
            worst = worst.max((a - b2).norm());
        }
        assert!(worst / scale < 1e-6, "tail leak {}", worst / scale);
        // control: behind the bump the two outputs genuinely differ
        let xgrid_b =
            UniformGrid::from_bounds(bump_center - 10.0, bump_center + 10.0, 41).unwrap();
        let c1 = convolve_envelope(&dad, env1, &xgrid_b).unwrap();
        let c2 = convolve_envelope(&dad, env2, &xgrid_b).unwrap();
        let mut diff = 0.0f64;
        for (a, b2) in c1.values.iter().zip(c2.values.iter()) {
            diff = diff.max((a - b2).norm());
        }
        assert!(diff / scale > 1e-2, "control diff {}", diff / scale);
    }

    #[test]
    fn peak_finder_flags_multimodal_density() {
        let grid = UniformGrid::from_bounds(0.0, 10.0, 101).unwrap();
        let dens: Vec<f64> = grid
            .points()
            .map(|x| (-(x - 3.0) * (x - 3.0)).exp() + 0.9 * (-(x - 7.0) * (x - 7.0)).exp())
            .collect();
        match peak_of_samples(&grid, &dens) {
            Err(Error::MultimodalPeak(n)) => assert!(n >= 2),
            other => panic!("expected multimodal error, got {other:?}"),
        }
    }
}
