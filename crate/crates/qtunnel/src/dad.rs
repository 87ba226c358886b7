//! Delay amplitude distribution: the coordinate-space kernel dual to the
//! transmission amplitude.
//!
//! The full kernel splits as `eta(x, p0) = [1/T(p0)] delta(x) + eta_smooth(x)`:
//! the singular term is handled analytically and only the smooth part
//! `eta_smooth(x) = exp(-i p0 x) xi_smooth(x) / T(p0)` is ever sampled, where
//! `xi_smooth` is the transform of `T(p) - 1`.  Causality (no poles of `T` in
//! the upper half momentum plane) forces `xi_smooth` to vanish for `x > 0` up
//! to truncation leakage, which [`causality_residual`] quantifies.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::barrier::LogAmplitude;
use crate::deriv::{self, DerivativeSpec};
use crate::error::{Error, Result};
use crate::grid::{KahanSum, MomentumGrid, SampledComplexFunction, Taper, UniformGrid};

const TAU: f64 = 2.0 * std::f64::consts::PI;

/// Linear-domain divisions by T(p0) below this magnitude are refused.
pub const LINEAR_DOMAIN_FLOOR: f64 = 1e-300;

/// Number of reciprocal cells `2 pi / p_range` separating truncation
/// ringing near x = 0 from the genuine x > 0 region.
pub const X_GUARD_CELLS: f64 = 32.0;

/// Default guard position for [`causality_residual`].
pub fn default_x_guard(grid: &MomentumGrid) -> f64 {
    X_GUARD_CELLS * TAU / grid.range()
}

/// Forward transform `(2 pi)^{-1} Int f(p) w(p) exp(i p x) dp` of tapered
/// samples onto the reciprocal coordinate grid
/// `x_m = m * 2 pi / (n dp)`, `m in [-n/2, n/2)`.
///
/// The momentum integral is evaluated as its Riemann sum, which the FFT
/// performs exactly; no separate quadrature error enters beyond the grid
/// discretization itself.
pub fn fourier_to_space<F>(
    f: F,
    grid: &MomentumGrid,
    taper: &Taper,
) -> Result<SampledComplexFunction>
where
    F: Fn(f64) -> Complex64,
{
    let n = grid.n();
    let dp = grid.step();
    let pg = grid.grid();
    let p_edge = grid.p_max().abs().max(grid.p_min().abs());
    let mut buf: Vec<Complex64> = pg
        .points()
        .map(|p| f(p) * taper.weight(p, p_edge))
        .collect();

    let mut planner = FftPlanner::new();
    planner.plan_fft_inverse(n).process(&mut buf);

    let dx = TAU / (n as f64 * dp);
    let half = n / 2;
    let xgrid = UniformGrid::new(-(half as f64) * dx, dx, n)?;
    let scale = dp / TAU;
    let mut values = vec![Complex64::default(); n];
    for (slot, value) in values.iter_mut().enumerate() {
        let m = slot as isize - half as isize;
        let src = m.rem_euclid(n as isize) as usize;
        let x = xgrid.point(slot);
        *value = scale * Complex64::from_polar(1.0, grid.p_min() * x) * buf[src];
    }
    SampledComplexFunction::new(xgrid, values)
}

/// Smooth part `xi_smooth(x) = (2 pi)^{-1} Int (T(p) - 1) w(p) exp(i p x) dp`
/// of the transform of the transmission amplitude.
///
/// The grid must be symmetric about zero and wide enough that the
/// transmission magnitude has relaxed to the free value at the edges; the
/// phase of `T - 1` decays only algebraically and is absorbed by the taper.
pub fn xi_smooth<F>(
    transmission: F,
    grid: &MomentumGrid,
    taper: &Taper,
) -> Result<SampledComplexFunction>
where
    F: Fn(f64) -> Complex64,
{
    if !grid.is_symmetric() {
        return Err(Error::AsymmetricGrid {
            p_min: grid.p_min(),
            p_max: grid.p_max(),
        });
    }
    for p_edge in [grid.p_min(), grid.p_max()] {
        let t_edge = transmission(p_edge);
        let magnitude_defect = (t_edge.norm() - 1.0).abs();
        if magnitude_defect > taper.decay_tol {
            return Err(Error::EdgeNotDecayed {
                magnitude_defect,
                complex_defect: (t_edge - 1.0).norm(),
            });
        }
    }
    fourier_to_space(|p| transmission(p) - 1.0, grid, taper)
}

/// Delay amplitude distribution at mean momentum `p0`: singular weight
/// `1/T(p0)` at x = 0 plus the smooth part sampled on the reciprocal grid.
#[derive(Debug, Clone)]
pub struct DelayAmplitudeDistribution {
    pub singular_weight: Complex64,
    pub smooth: SampledComplexFunction,
    pub p0: f64,
}

/// Builds the distribution from the transform of `T - 1`:
/// `smooth(x) = exp(-i p0 x) xi_smooth(x) / T(p0)`.
pub fn dad_from_xi(
    xi: &SampledComplexFunction,
    p0: f64,
    t_p0: Complex64,
) -> Result<DelayAmplitudeDistribution> {
    if t_p0.norm() < LINEAR_DOMAIN_FLOOR {
        return Err(Error::LogDomainRequired { t_mag: t_p0.norm() });
    }
    let singular_weight = 1.0 / t_p0;
    let values: Vec<Complex64> = xi
        .iter()
        .map(|(x, v)| Complex64::from_polar(1.0, -p0 * x) * v * singular_weight)
        .collect();
    Ok(DelayAmplitudeDistribution {
        singular_weight,
        smooth: SampledComplexFunction::new(xi.grid.clone(), values)?,
        p0,
    })
}

/// Total weight `1/T(p0) + Int eta_smooth dx`; equals 1 up to discretization
/// for any barrier kernel.
///
/// The quadrature is the trapezoidal rule on the periodic extension of the
/// reciprocal grid (first and last samples are wrap images of one cell, so
/// the closed-interval end weights coincide with the plain cell sum).
pub fn normalization_check(dad: &DelayAmplitudeDistribution) -> Complex64 {
    let mut acc = KahanSum::new();
    for v in &dad.smooth.values {
        acc.add(*v);
    }
    dad.singular_weight + acc.value() * dad.smooth.grid.step()
}

/// Largest smooth-part magnitude beyond the guard, relative to the global
/// maximum.  Small values certify that the kernel contains no advanced
/// shifts beyond truncation leakage.
pub fn causality_residual(xi: &SampledComplexFunction, x_guard: f64) -> f64 {
    let peak = xi.max_abs();
    if peak == 0.0 {
        return 0.0;
    }
    let mut worst = 0.0f64;
    for (x, v) in xi.iter() {
        if x > x_guard {
            worst = worst.max(v.norm());
        }
    }
    worst / peak
}

/// Moments `x^n` of the delay amplitude distribution, `n = 0..=K`.
#[derive(Debug, Clone)]
pub struct MomentSet {
    pub values: Vec<Complex64>,
}

impl MomentSet {
    pub fn order(&self) -> usize {
        self.values.len() - 1
    }

    pub fn moment(&self, n: usize) -> Complex64 {
        self.values[n]
    }
}

/// Maximum moment order; limited by the difference stencils.
pub const MAX_MOMENT_ORDER: usize = deriv::MAX_ORDER;

/// Moments via the derivative identity `x^n = i^n T^(n)(p0) / T(p0)`.
///
/// Differentiates the complex logarithm of the transmission amplitude
/// (stable however small `|T|` is) with Richardson-extrapolated central
/// differences, then maps log-derivatives to derivative ratios; the zeroth
/// moment is 1 by construction.
pub fn moments_derivative<F>(transmission_log: F, p0: f64, k_max: usize) -> Result<MomentSet>
where
    F: Fn(f64) -> LogAmplitude,
{
    if k_max > MAX_MOMENT_ORDER {
        return Err(Error::InvalidParameter(format!(
            "moment order must be at most {MAX_MOMENT_ORDER}, got {k_max}"
        )));
    }
    if k_max == 0 {
        return Ok(MomentSet {
            values: vec![Complex64::new(1.0, 0.0)],
        });
    }
    let spec = DerivativeSpec::for_point(p0);
    let log_derivs = deriv::derivatives(
        |p| transmission_log(p).to_complex_log(),
        p0,
        k_max,
        &spec,
    )?;
    let ratios = deriv::log_derivatives_to_ratios(&log_derivs);
    let values = ratios
        .iter()
        .enumerate()
        .map(|(n, r)| Complex64::from_polar(1.0, n as f64 * std::f64::consts::FRAC_PI_2) * r)
        .collect();
    Ok(MomentSet { values })
}

/// Spatial integration window for [`moments_direct`]: zero below `x_lo`,
/// cosine ramp over `[x_lo, x_lo + ramp]`, unity above.
#[derive(Debug, Clone)]
pub struct SpatialWindow {
    pub x_lo: f64,
    pub ramp: f64,
}

impl SpatialWindow {
    /// Window scaled to a barrier width: support down to -80 d with a 30 d
    /// ramp, which keeps the truncated-tail error of the oscillatory moment
    /// integrand below the cross-validation tolerance at low opacity.
    pub fn for_barrier_width(d: f64) -> Self {
        Self {
            x_lo: -80.0 * d,
            ramp: 30.0 * d,
        }
    }

    fn weight(&self, x: f64) -> f64 {
        if x >= self.x_lo + self.ramp {
            1.0
        } else if x <= self.x_lo {
            0.0
        } else {
            let u = (x - self.x_lo) / self.ramp;
            0.5 * (1.0 - (std::f64::consts::PI * u).cos())
        }
    }
}

/// Windowed direct moments plus a tail-decay diagnostic.
#[derive(Debug, Clone)]
pub struct DirectMoments {
    pub moments: MomentSet,
    /// Largest magnitude of the top-order integrand inside the ramp region,
    /// relative to its global maximum; order unity means the window cuts
    /// into undecayed kernel tail.
    pub edge_ratio: f64,
}

/// Moments by windowed quadrature `Int x^n eta(x) dx`; the singular term
/// contributes only to `n = 0`, which reuses the full normalization sum.
pub fn moments_direct(
    dad: &DelayAmplitudeDistribution,
    k_max: usize,
    window: &SpatialWindow,
) -> Result<DirectMoments> {
    if k_max > MAX_MOMENT_ORDER {
        return Err(Error::InvalidParameter(format!(
            "moment order must be at most {MAX_MOMENT_ORDER}, got {k_max}"
        )));
    }
    let dx = dad.smooth.grid.step();
    let mut values = vec![normalization_check(dad)];
    for n in 1..=k_max {
        let mut acc = KahanSum::new();
        for (x, v) in dad.smooth.iter() {
            acc.add(v * x.powi(n as i32) * window.weight(x));
        }
        values.push(acc.value() * dx);
    }
    // decay diagnostic on the top-order integrand
    let k_top = k_max.max(1) as i32;
    let mut ramp_max = 0.0f64;
    let mut global_max = 0.0f64;
    for (x, v) in dad.smooth.iter() {
        let mag = v.norm() * x.abs().powi(k_top);
        global_max = global_max.max(mag * window.weight(x));
        if x <= window.x_lo + window.ramp {
            ramp_max = ramp_max.max(mag);
        }
    }
    let edge_ratio = if global_max > 0.0 {
        ramp_max / global_max
    } else {
        0.0
    };
    Ok(DirectMoments {
        moments: MomentSet { values },
        edge_ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::barrier::{transmission, transmission_log, wide_barrier_params, Barrier};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn unit_transmission_gives_zero_smooth_part() {
        let grid = MomentumGrid::new(-20.0, 20.0, 4096).unwrap();
        let xi = xi_smooth(|_p| c(1.0, 0.0), &grid, &Taper::default()).unwrap();
        assert!(xi.max_abs() < 1e-14);
    }

    #[test]
    fn rejects_asymmetric_grid() {
        let grid = MomentumGrid::new(-10.0, 20.0, 1024).unwrap();
        match xi_smooth(|_p| c(1.0, 0.0), &grid, &Taper::default()) {
            Err(Error::AsymmetricGrid { .. }) => {}
            other => panic!("expected asymmetric-grid error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_undecayed_edge_and_reports_defects() {
        // a grid reaching only 1.2 sqrt(2W): |T| itself far from 1 at the edge
        let b = Barrier::from_beta(20.0, 1.0).unwrap();
        let s2w = (2.0 * b.height()).sqrt();
        let grid = MomentumGrid::new(-1.2 * s2w, 1.2 * s2w, 1024).unwrap();
        match xi_smooth(|p| transmission(p, &b).unwrap(), &grid, &Taper::default()) {
            Err(Error::EdgeNotDecayed {
                magnitude_defect,
                complex_defect,
            }) => {
                assert!(magnitude_defect > 1e-6);
                assert!(complex_defect >= magnitude_defect);
            }
            other => panic!("expected edge error, got {other:?}"),
        }
    }

    #[test]
    fn exponential_kernel_peaks_at_its_shift() {
        // T(p) = exp(-i alpha p) restricted to a band: transform peaks at x = alpha
        let alpha = 3.0;
        let grid = MomentumGrid::new(-40.0, 40.0, 1 << 14).unwrap();
        let flat = 2.0;
        let rolloff = 3.0;
        let band = move |p: f64| {
            let a: f64 = p.abs();
            if a <= flat {
                1.0
            } else if a >= flat + rolloff {
                0.0
            } else {
                0.5 * (1.0 + (std::f64::consts::PI * (a - flat) / rolloff).cos())
            }
        };
        let xi = fourier_to_space(
            |p| Complex64::from_polar(band(p), -alpha * p),
            &grid,
            &Taper::default(),
        )
        .unwrap();
        let (mut best_x, mut best) = (0.0, 0.0);
        for (x, v) in xi.iter() {
            if v.norm() > best {
                best = v.norm();
                best_x = x;
            }
        }
        assert!(
            (best_x - alpha).abs() < xi.grid.step() * 1.5,
            "peak at {best_x}, expected {alpha}"
        );
    }

    #[test]
    fn free_kernel_dad_is_pure_delta() {
        let grid = MomentumGrid::new(-20.0, 20.0, 4096).unwrap();
        let xi = xi_smooth(|_p| c(1.0, 0.0), &grid, &Taper::default()).unwrap();
        let dad = dad_from_xi(&xi, 0.7, c(1.0, 0.0)).unwrap();
        assert_eq!(dad.singular_weight, c(1.0, 0.0));
        assert!(dad.smooth.max_abs() < 1e-14);
        let norm = normalization_check(&dad);
        assert!((norm - 1.0).norm() < 1e-12);
    }

    #[test]
    fn division_guard_requires_log_domain() {
        let grid = MomentumGrid::new(-20.0, 20.0, 1024).unwrap();
        let xi = xi_smooth(|_p| c(1.0, 0.0), &grid, &Taper::default()).unwrap();
        match dad_from_xi(&xi, 0.0, c(0.0, 0.0)) {
            Err(Error::LogDomainRequired { .. }) => {}
            other => panic!("expected log-domain guard, got {other:?}"),
        }
    }

    #[test]
    fn transform_is_real_at_zero_momentum() {
        // T(-p) = conj T(p) makes the transform real, and with it the
        // p0 = 0 kernel
        let b = Barrier::from_beta(20.0, 1.0).unwrap();
        let grid = MomentumGrid::reference(b.height()).unwrap();
        let xi = xi_smooth(|p| transmission(p, &b).unwrap(), &grid, &Taper::default()).unwrap();
        let peak = xi.max_abs();
        let worst_im = xi.values.iter().fold(0.0f64, |m, v| m.max(v.im.abs()));
        assert!(worst_im / peak < 1e-10, "Im/peak = {}", worst_im / peak);
    }

    #[test]
    fn anticausal_control_kernel_fails_residual() {
        // advanced kernel exp(-i alpha p), alpha > 0: support at x = +alpha,
        // so essentially all weight sits beyond the guard
        let alpha = 3.0;
        let grid = MomentumGrid::new(-40.0, 40.0, 1 << 14).unwrap();
        let xi = fourier_to_space(
            |p| Complex64::from_polar(1.0, -alpha * p) - 1.0,
            &grid,
            &Taper::default(),
        )
        .unwrap();
        let r = causality_residual(&xi, default_x_guard(&grid));
        assert!(r > 0.9, "residual = {r}");
    }

    #[test]
    fn causality_residual_at_reference_grid() {
        let b = Barrier::from_beta(20.0, 1.0).unwrap();
        let grid = MomentumGrid::reference(b.height()).unwrap();
        let xi = xi_smooth(|p| transmission(p, &b).unwrap(), &grid, &Taper::default()).unwrap();
        let r = causality_residual(&xi, default_x_guard(&grid));
        assert!(r < 1e-3, "residual = {r}");
    }

    #[test]
    fn causality_residual_improves_with_stronger_taper() {
        let b = Barrier::from_beta(20.0, 1.0).unwrap();
        let grid = MomentumGrid::reference(b.height()).unwrap();
        let guard = default_x_guard(&grid);
        let residual_for = |fraction: f64| {
            let taper = Taper {
                fraction,
                ..Taper::default()
            };
            let xi = xi_smooth(|p| transmission(p, &b).unwrap(), &grid, &taper).unwrap();
            causality_residual(&xi, guard)
        };
        let weak = residual_for(0.05);
        let default = residual_for(0.1);
        let strong = residual_for(0.2);
        assert!(
            strong < default && default < weak,
            "residuals not improving with taper strength: {weak} -> {default} -> {strong}"
        );
    }

    #[test]
    fn derivative_moments_zeroth_is_exactly_one() {
        let b = Barrier::from_beta(20.0, 1.0).unwrap();
        let ms = moments_derivative(|p| transmission_log(p, &b), 5.0, 3).unwrap();
        assert_eq!(ms.moment(0), c(1.0, 0.0));
        assert_eq!(ms.order(), 3);
    }

    #[test]
    fn derivative_moments_vanish_for_free_motion() {
        let b = Barrier::new(1e-30, 1.0, 0.0).unwrap();
        let ms = moments_derivative(|p| transmission_log(p, &b), 1.0, 2).unwrap();
        assert!(ms.moment(1).norm() < 1e-10);
        assert!(ms.moment(2).norm() < 1e-8);
    }

    #[test]
    fn first_moment_approaches_complex_shift() {
        // wide barrier: x^1 / d -> alpha / d with an O(1/d) defect
        let w = 0.5;
        let p0 = 0.5;
        let mut last = f64::INFINITY;
        for d in [100.0, 200.0] {
            let b = Barrier::new(w, d, 0.0).unwrap();
            let ms = moments_derivative(|p| transmission_log(p, &b), p0, 1).unwrap();
            let alpha = wide_barrier_params(p0, &b).unwrap().alpha;
            let dev = (ms.moment(1) / d - alpha / d).norm();
            assert!(dev < last);
            last = dev;
        }
        assert!(last < 0.02);
    }

    #[test]
    fn moments_reject_order_beyond_stencils() {
        let b = Barrier::from_beta(20.0, 1.0).unwrap();
        assert!(moments_derivative(|p| transmission_log(p, &b), 5.0, 7).is_err());
        let grid = MomentumGrid::new(-20.0, 20.0, 1024).unwrap();
        let xi = xi_smooth(|_p| c(1.0, 0.0), &grid, &Taper::default()).unwrap();
        let dadk = dad_from_xi(&xi, 0.5, c(1.0, 0.0)).unwrap();
        assert!(moments_direct(&dadk, 7, &SpatialWindow::for_barrier_width(1.0)).is_err());
    }

    #[test]
    fn direct_moments_zeroth_matches_normalization() {
        let b = Barrier::new(0.5, 6.0, 0.0).unwrap();
        let grid = MomentumGrid::reference(b.height()).unwrap();
        let xi = xi_smooth(|p| transmission(p, &b).unwrap(), &grid, &Taper::default()).unwrap();
        let p0 = grid.snap(0.45);
        let dad = dad_from_xi(&xi, p0, transmission(p0, &b).unwrap()).unwrap();
        let dm = moments_direct(&dad, 2, &SpatialWindow::for_barrier_width(b.width())).unwrap();
        assert!((dm.moments.moment(0) - 1.0).norm() < 1e-6);
        assert!(dm.edge_ratio < 1e-3, "edge ratio {}", dm.edge_ratio);
    }

    #[test]
    fn trapezoid_order_verified_by_richardson_ratio() {
        // integral of the smooth part over [x_lo, 0] at step dx, 2dx, 4dx:
        // successive differences shrink by the second-order factor 4
        let b = Barrier::new(0.5, 20.0, 0.0).unwrap();
        let grid = MomentumGrid::reference(b.height()).unwrap();
        let xi = xi_smooth(|p| transmission(p, &b).unwrap(), &grid, &Taper::default()).unwrap();
        let p0 = grid.snap(0.8);
        let dad = dad_from_xi(&xi, p0, transmission(p0, &b).unwrap()).unwrap();
        let x_lo = -40.0 * b.width();
        let pts: Vec<(f64, Complex64)> = dad
            .smooth
            .iter()
            .filter(|(x, _)| *x >= x_lo && *x <= 0.0)
            .collect();
        // truncate to 4k+1 points so all strides share both endpoints
        let len = (pts.len() - 1) / 4 * 4 + 1;
        let pts = &pts[..len];
        let integral = |stride: usize| {
            let sel: Vec<&(f64, Complex64)> = pts.iter().step_by(stride).collect();
            let mut acc = KahanSum::new();
            for (i, (_x, v)) in sel.iter().enumerate() {
                let w = if i == 0 || i == sel.len() - 1 { 0.5 } else { 1.0 };
                acc.add(v * w);
            }
            acc.value() * dad.smooth.grid.step() * stride as f64
        };
        let i1 = integral(1);
        let i2 = integral(2);
        let i4 = integral(4);
        let ratio = (i4 - i2).norm() / (i2 - i1).norm();
        assert!(
            (2.5..6.0).contains(&ratio),
            "Richardson ratio {ratio}, expected about 4"
        );
    }
}
