//! Observable diagnostics: momentum filtering, peak trajectories, complex
//! delay and phase times, and the superoscillation band curves.

use num_complex::Complex64;

use crate::barrier::{self, Barrier};
use crate::deriv::{self, DerivativeSpec};
use crate::error::{Error, Result};
use crate::grid::{KahanSum, UniformGrid};
use crate::packet::{self, GaussianPacket};
use crate::transmit::{peak_of_samples, MomentumQuadrature, TransmittedPulse};

/// Mean-momentum gain of the transmitted packet,
/// `Delta p0 = 2 p0 d / [sigma^2 sqrt(2W - p0^2)] = 2 Im(alpha) / sigma^2`.
pub fn delta_p0(b: &Barrier, pk: &GaussianPacket) -> Result<f64> {
    let p0 = pk.p0();
    let two_w = 2.0 * b.height();
    if p0.is_nan() || p0 <= 0.0 || p0 * p0 >= two_w {
        return Err(Error::InvalidParameter(format!(
            "momentum filtering formula needs 0 < p0^2 < 2W, got p0 = {p0}, 2W = {two_w}"
        )));
    }
    Ok(2.0 * p0 * b.width() / (pk.sigma() * pk.sigma() * (two_w - p0 * p0).sqrt()))
}

/// Quadrature mean momentum of the transmitted distribution `|T A|^2`,
/// evaluated with log-domain ratio weights so opaque barriers stay in range.
pub fn transmitted_momentum_mean(
    b: &Barrier,
    pk: &GaussianPacket,
    quad: &MomentumQuadrature,
) -> Result<f64> {
    let half = quad.half_width_sigmas * pk.sigma_p();
    let pgrid = UniformGrid::from_bounds(pk.p0() - half, pk.p0() + half, quad.points)?;
    let l0 = barrier::transmission_log(pk.p0(), b);
    let mut num = KahanSum::new();
    let mut den = KahanSum::new();
    for (j, p) in pgrid.points().enumerate() {
        let trap = if j == 0 || j == quad.points - 1 {
            0.5
        } else {
            1.0
        };
        let a = packet::momentum_amplitude(p, pk);
        let w = (2.0 * (barrier::transmission_log(p, b).log_mag - l0.log_mag)).exp() * a * a * trap;
        num.add(Complex64::new(w * p, 0.0));
        den.add(Complex64::new(w, 0.0));
    }
    let den = den.value().re;
    if den <= 0.0 || !den.is_finite() {
        return Err(Error::QuadratureEdgeNotDecayed(f64::INFINITY));
    }
    Ok(num.value().re / den)
}

/// Straight-line fit of transmitted-peak positions against time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the fit.
    pub residual: f64,
}

/// Least-squares line through the per-pulse peak positions; needs at least
/// five pulses, all taken after the packet has cleared the barrier.
pub fn peak_trajectory(pulses: &[TransmittedPulse]) -> Result<TrajectoryFit> {
    if pulses.len() < 5 {
        return Err(Error::InvalidParameter(format!(
            "trajectory fit needs at least 5 pulses, got {}",
            pulses.len()
        )));
    }
    let mut txs = Vec::with_capacity(pulses.len());
    for pulse in pulses {
        let dens: Vec<f64> = pulse.envelope.values.iter().map(|v| v.norm_sqr()).collect();
        let x = peak_of_samples(&pulse.envelope.grid, &dens)?;
        txs.push((pulse.t, x));
    }
    let n = txs.len() as f64;
    let (mut st, mut sx, mut stt, mut stx) = (0.0, 0.0, 0.0, 0.0);
    for &(t, x) in &txs {
        st += t;
        sx += x;
        stt += t * t;
        stx += t * x;
    }
    let denom = n * stt - st * st;
    if denom == 0.0 {
        return Err(Error::InvalidParameter(
            "trajectory times are degenerate".into(),
        ));
    }
    let slope = (n * stx - st * sx) / denom;
    let intercept = (sx - slope * st) / n;
    let mut ss = 0.0;
    for &(t, x) in &txs {
        let r = x - slope * t - intercept;
        ss += r * r;
    }
    Ok(TrajectoryFit {
        slope,
        intercept,
        residual: (ss / n).sqrt(),
    })
}

/// Complex delay and the phase time at mean momentum `p0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayTimes {
    /// tau = d/p0 - i d ln T / dp (p0) / p0.
    pub tau: Complex64,
    /// Re(tau) = d/p0 + Phi'(p0)/p0, the phase time.
    pub tau_phase: f64,
    /// Phase of the transmission amplitude at p0.
    pub phase: f64,
}

/// Computes the complex delay from the log-derivative of the transmission
/// amplitude, with the same differentiation engine as the kernel moments.
pub fn delay_times(b: &Barrier, p0: f64) -> Result<DelayTimes> {
    if p0.is_nan() || p0 <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "delay times need p0 > 0, got {p0}"
        )));
    }
    let spec = DerivativeSpec::for_point(p0);
    let dlog = deriv::derivatives(
        |p| barrier::transmission_log(p, b).to_complex_log(),
        p0,
        1,
        &spec,
    )?[0];
    let i = Complex64::new(0.0, 1.0);
    let tau = b.width() / p0 - i * dlog / p0;
    Ok(DelayTimes {
        tau,
        tau_phase: tau.re,
        phase: barrier::transmission_log(p0, b).phase,
    })
}

/// Removes 2 pi jumps from a phase sequence sampled along a grid, so the
/// curve can be differentiated or plotted as a continuous function.
pub fn unwrap_phases(phases: &mut [f64]) {
    const TAU: f64 = 2.0 * std::f64::consts::PI;
    for i in 1..phases.len() {
        let jump = phases[i] - phases[i - 1];
        phases[i] -= (jump / TAU).round() * TAU;
    }
}

/// Tabulated superoscillation-band curves at one momentum sample.
#[derive(Debug, Clone, Copy)]
pub struct BandSample {
    pub p: f64,
    /// Re[T(p)/p] normalized by the high-barrier prefactor magnitude |B(W)|.
    pub re_t_over_p_norm: f64,
    /// Reference superoscillatory wave sin(-p d).
    pub sin_neg_pd: f64,
    /// Packet momentum amplitude scaled to unit height.
    pub packet_amp_unit: f64,
    /// Ratio of the exact transmission amplitude to the wide-barrier
    /// exponential form.
    pub ratio_wide: Complex64,
}

/// Band curves over a momentum grid: the exact amplitude against the
/// superoscillatory references of the high- and wide-barrier forms.
///
/// All normalizations run through the log domain, so opaque barriers yield
/// finite order-unity curves.
pub fn superosc_band(
    b: &Barrier,
    pk: &GaussianPacket,
    pgrid: &UniformGrid,
) -> Result<Vec<BandSample>> {
    let pre = barrier::high_barrier_prefactor_log(b);
    let wide = barrier::wide_barrier_params(pk.p0(), b)?;
    let mut out = Vec::with_capacity(pgrid.len());
    for p in pgrid.points() {
        let lt = barrier::transmission_log(p, b);
        // Re[T/p] / |B|: magnitude exp(log|T| - ln|p| - log|B|), direction cos(arg T - arg p)
        let re_t_over_p_norm = if p == 0.0 {
            // T/p is regular at p = 0; evaluate one grid-step off zero
            let eps = pgrid.step() * 1e-3;
            let l = barrier::transmission_log(eps, b);
            (l.log_mag - eps.ln() - pre.log_mag).exp() * l.phase.cos()
        } else {
            let dir = if p > 0.0 {
                lt.phase.cos()
            } else {
                (lt.phase - std::f64::consts::PI).cos()
            };
            (lt.log_mag - p.abs().ln() - pre.log_mag).exp() * dir
        };
        // T(p) / [B(p0) exp(-i p alpha)] in the log domain
        let wl = wide.amplitude_log(p);
        let ratio_wide =
            Complex64::from_polar((lt.log_mag - wl.log_mag).exp(), lt.phase - wl.phase);
        out.push(BandSample {
            p,
            re_t_over_p_norm,
            sin_neg_pd: (-p * b.width()).sin(),
            packet_amp_unit: packet::momentum_amplitude(p, pk)
                / packet::momentum_amplitude(pk.p0(), pk),
            ratio_wide,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::barrier::wide_barrier_params;
    use crate::dad;
    use crate::transmit::{self, NormalizationMode};

    #[test]
    fn phase_unwrapping_restores_continuity() {
        // a steadily advancing phase wrapped into (-pi, pi] unwraps back
        let true_phases: Vec<f64> = (0..200).map(|i| -0.11 * i as f64).collect();
        let mut wrapped: Vec<f64> = true_phases
            .iter()
            .map(|p| {
                let mut v = p.rem_euclid(2.0 * std::f64::consts::PI);
                if v > std::f64::consts::PI {
                    v -= 2.0 * std::f64::consts::PI;
                }
                v
            })
            .collect();
        unwrap_phases(&mut wrapped);
        for (got, want) in wrapped.iter().zip(true_phases.iter()) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn delta_p0_frozen_arithmetic() {
        let b = Barrier::new(1.125, 10.0, 0.0).unwrap();
        let pk = GaussianPacket::new(10.0, 1.0).unwrap();
        let dp = delta_p0(&b, &pk).unwrap();
        assert!((dp - 0.178885438199983).abs() < 1e-14);
    }

    #[test]
    fn delta_p0_equals_twice_im_alpha_over_sigma_sq() {
        for (w, d, p0, sigma) in [(0.5, 30.0, 0.5, 45.0), (2.0, 7.0, 1.1, 20.0)] {
            let b = Barrier::new(w, d, 0.0).unwrap();
            let pk = GaussianPacket::new(sigma, p0).unwrap();
            let dp = delta_p0(&b, &pk).unwrap();
            let alpha = wide_barrier_params(p0, &b).unwrap().alpha;
            let other = 2.0 * alpha.im / (sigma * sigma);
            assert!((dp - other).abs() <= 1e-12 * dp.abs());
        }
    }

    #[test]
    fn delta_p0_rejects_above_barrier() {
        let b = Barrier::new(0.5, 10.0, 0.0).unwrap();
        let pk = GaussianPacket::new(10.0, 1.5).unwrap();
        assert!(delta_p0(&b, &pk).is_err());
    }

    #[test]
    fn free_packet_trajectory_null_control() {
        // W -> 0: slope = p0 and intercept = 0 within the fit residual
        let b = Barrier::new(1e-14, 1.0, 0.0).unwrap();
        let pk = GaussianPacket::new(5.0, 0.8).unwrap();
        let quad = MomentumQuadrature::default();
        let mut pulses = Vec::new();
        for i in 0..6 {
            let t = 40.0 + 12.0 * i as f64;
            let c = pk.p0() * t;
            let xgrid = UniformGrid::from_bounds(c - 30.0, c + 30.0, 801).unwrap();
            pulses.push(
                transmit::transmitted_envelope(
                    &b,
                    &pk,
                    t,
                    &xgrid,
                    NormalizationMode::Absolute,
                    &quad,
                )
                .unwrap(),
            );
        }
        let fit = peak_trajectory(&pulses).unwrap();
        assert!((fit.slope - pk.p0()).abs() < 1e-4, "slope {}", fit.slope);
        assert!(
            fit.intercept.abs() < (10.0 * fit.residual).max(1e-3),
            "intercept {} residual {}",
            fit.intercept,
            fit.residual
        );
    }

    #[test]
    fn trajectory_needs_five_pulses() {
        assert!(peak_trajectory(&[]).is_err());
    }

    #[test]
    fn delay_times_need_forward_momentum() {
        let b = Barrier::new(0.5, 10.0, 0.0).unwrap();
        assert!(delay_times(&b, 0.0).is_err());
        assert!(delay_times(&b, -0.3).is_err());
    }

    #[test]
    fn free_delay_is_classical_crossing_time() {
        let b = Barrier::new(1e-14, 3.0, 0.0).unwrap();
        let dt = delay_times(&b, 1.5).unwrap();
        assert!((dt.tau - Complex64::new(2.0, 0.0)).norm() < 1e-9);
        assert!((dt.tau_phase - 2.0).abs() < 1e-9);
        assert_eq!(dt.tau_phase, dt.tau.re);
    }

    #[test]
    fn delay_consistent_with_first_moment() {
        // tau = (d - x^1) / p0
        let b = Barrier::new(0.5, 40.0, 0.0).unwrap();
        let p0 = 0.5;
        let dt = delay_times(&b, p0).unwrap();
        let x1 = dad::moments_derivative(|p| barrier::transmission_log(p, &b), p0, 1)
            .unwrap()
            .moment(1);
        let other = (b.width() - x1) / p0;
        assert!((dt.tau - other).norm() < 1e-8, "{} vs {}", dt.tau, other);
    }

    #[test]
    fn band_curves_match_high_barrier_reference() {
        // normalized Re[T/p] converges to sin(-p d) pointwise on the packet
        // support as the barrier grows
        let pk = GaussianPacket::new(5.0, 12.0).unwrap();
        let mut last = f64::INFINITY;
        for beta in [700.0, 2000.0, 8000.0] {
            let b = Barrier::from_beta(beta, 1.0).unwrap();
            let pgrid = UniformGrid::from_bounds(
                pk.p0() - 4.0 * pk.sigma_p(),
                pk.p0() + 4.0 * pk.sigma_p(),
                101,
            )
            .unwrap();
            let band = superosc_band(&b, &pk, &pgrid).unwrap();
            let worst = band
                .iter()
                .fold(0.0f64, |m, s| m.max((s.re_t_over_p_norm - s.sin_neg_pd).abs()));
            assert!(worst < last, "beta = {beta}: {worst} >= {last}");
            last = worst;
            // packet curve peaks at p0 with unit height
            let mid = &band[50];
            assert!((mid.packet_amp_unit - 1.0).abs() < 1e-6);
            assert!(band.iter().all(|s| s.packet_amp_unit <= 1.0 + 1e-12));
        }
        assert!(last < 0.03, "final defect {last}");
    }

    #[test]
    fn wide_ratio_flattens_with_growing_width() {
        // max |T/T_wide - 1| over the packet core shrinks as d grows at
        // fixed sigma/d
        let w = 0.5;
        let p0 = 0.5;
        let mut last = f64::INFINITY;
        for d in [50.0, 100.0, 200.0] {
            let b = Barrier::new(w, d, 0.0).unwrap();
            let pk = GaussianPacket::new(d, p0).unwrap();
            let pgrid =
                UniformGrid::from_bounds(p0 - pk.sigma_p(), p0 + pk.sigma_p(), 81).unwrap();
            let band = superosc_band(&b, &pk, &pgrid).unwrap();
            let worst = band
                .iter()
                .fold(0.0f64, |m, s| m.max((s.ratio_wide - 1.0).norm()));
            assert!(worst < last, "d = {d}: {worst} >= {last}");
            last = worst;
        }
        assert!(last < 0.05, "final defect {last}");
    }
}
