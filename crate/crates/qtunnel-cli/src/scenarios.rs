//! One function per CLI scenario; each resolves parameters, runs the
//! library, and emits a CSV plus its metadata sidecar.

use qtunnel::analysis;
use qtunnel::barrier::{self, Barrier};
use qtunnel::dad::{self, SpatialWindow, X_GUARD_CELLS};
use qtunnel::grid::{MomentumGrid, Taper, UniformGrid};
use qtunnel::transmit::{self, MomentumQuadrature, NormalizationMode};

use crate::config::{self, default_time, resolve, CliResult, Defaults, Resolved};
use crate::output::Dataset;
use crate::CommonArgs;

const VERSION: &str = env!("CARGO_PKG_VERSION");

fn mode_name(mode: NormalizationMode) -> &'static str {
    match mode {
        NormalizationMode::Absolute => "absolute",
        NormalizationMode::RatioToTransmission => "ratio",
    }
}

/// Shared sidecar entries: software version, scenario, resolved physics.
fn stamp(ds: &mut Dataset, scenario: &str, r: &Resolved) {
    ds.meta("software", format!("qtunnel {VERSION}"));
    ds.meta("scenario", scenario);
    ds.meta_f64("barrier.height_W", r.barrier.height());
    ds.meta_f64("barrier.width_d", r.barrier.width());
    ds.meta_f64("barrier.beta", r.barrier.beta());
    ds.meta_f64("packet.sigma", r.sigma);
    ds.meta_f64("packet.p0", r.p0);
    ds.meta("mode", mode_name(r.mode));
    ds.meta_resolved(&r.log);
}

/// Transform grid: the reference grid unless --pmax / --n override it.
fn transform_grid(r: &Resolved, ds: &mut Dataset) -> CliResult<MomentumGrid> {
    let reference = MomentumGrid::reference(r.barrier.height()).map_err(|e| e.to_string())?;
    let pmax = r.pmax.unwrap_or(reference.p_max());
    let n = r.n.unwrap_or(reference.n());
    let grid = MomentumGrid::new(-pmax, pmax, n).map_err(|e| e.to_string())?;
    if r.pmax.is_none() {
        ds.meta("default.pmax", crate::output::fmt(pmax));
    }
    if r.n.is_none() {
        ds.meta("default.n", n);
    }
    ds.meta_f64("grid.p_min", grid.p_min());
    ds.meta_f64("grid.p_max", grid.p_max());
    ds.meta("grid.n", grid.n());
    Ok(grid)
}

fn stamp_taper(ds: &mut Dataset, taper: &Taper) {
    ds.meta_f64("window.taper_fraction", taper.fraction);
    ds.meta_f64("window.decay_tol", taper.decay_tol);
    ds.meta("window.kind", "raised-cosine");
    ds.meta_f64("window.x_guard_cells", X_GUARD_CELLS);
}

fn stamp_quadrature(ds: &mut Dataset, quad: &MomentumQuadrature) {
    ds.meta_f64("quadrature.half_width_sigmas", quad.half_width_sigmas);
    ds.meta("quadrature.points", quad.points);
    ds.meta_f64("quadrature.edge_tol", quad.edge_tol);
}

fn xi_for(r: &Resolved, grid: &MomentumGrid, taper: &Taper) -> CliResult<qtunnel::grid::SampledComplexFunction> {
    let b = r.barrier.clone();
    dad::xi_smooth(
        move |p| barrier::transmission(p, &b).unwrap_or_default(),
        grid,
        taper,
    )
    .map_err(|e| e.to_string())
}

/// Regular part of the delay kernel over the structure region around the
/// barrier.
pub fn figure1(args: CommonArgs) -> CliResult<()> {
    let r = resolve(
        args,
        Defaults {
            p0_over_s2w: 0.0,
            sigma_over_d: 5.0,
        },
    )?;
    let taper = Taper::default();
    let mut ds = Dataset::new(&["x[length]", "re_xi_smooth[1/length]", "im_xi_smooth[1/length]"]);
    stamp(&mut ds, "figure1", &r);
    let grid = transform_grid(&r, &mut ds)?;
    stamp_taper(&mut ds, &taper);
    let xi = xi_for(&r, &grid, &taper)?;
    let d = r.barrier.width();
    for (x, v) in xi.iter() {
        if x >= -12.0 * d && x <= 2.0 * d {
            ds.push_row(vec![x, v.re, v.im]);
        }
    }
    ds.meta_f64("emit.x_lo", -12.0 * d);
    ds.meta_f64("emit.x_hi", 2.0 * d);
    let guard = dad::default_x_guard(&grid);
    ds.meta_f64("causality.x_guard", guard);
    ds.meta_f64(
        "causality.residual",
        dad::causality_residual(&xi, guard),
    );
    ds.write(&r.out)
}

/// Kernel components at mean momentum p0.
pub fn dad(args: CommonArgs) -> CliResult<()> {
    let r = resolve(
        args,
        Defaults {
            p0_over_s2w: 0.5,
            sigma_over_d: 5.0,
        },
    )?;
    let taper = Taper::default();
    let mut ds = Dataset::new(&[
        "x[length]",
        "re_xi_smooth[1/length]",
        "im_xi_smooth[1/length]",
        "re_eta_smooth[1/length]",
        "im_eta_smooth[1/length]",
    ]);
    stamp(&mut ds, "dad", &r);
    let grid = transform_grid(&r, &mut ds)?;
    stamp_taper(&mut ds, &taper);
    let xi = xi_for(&r, &grid, &taper)?;
    // snap p0 to the momentum lattice: the discrete kernel's inverse
    // identity (and hence the normalization figure) holds on-grid
    let p0 = grid.snap(r.p0);
    ds.meta_f64("p0.requested", r.p0);
    ds.meta_f64("p0.used", p0);
    let t_p0 = barrier::transmission(p0, &r.barrier).map_err(|e| e.to_string())?;
    let kernel = dad::dad_from_xi(&xi, p0, t_p0).map_err(|e| e.to_string())?;
    let d = r.barrier.width();
    for ((x, v), (_, s)) in xi.iter().zip(kernel.smooth.iter()) {
        if x >= -12.0 * d && x <= 2.0 * d {
            ds.push_row(vec![x, v.re, v.im, s.re, s.im]);
        }
    }
    ds.meta_f64("emit.x_lo", -12.0 * d);
    ds.meta_f64("emit.x_hi", 2.0 * d);
    ds.meta_f64("kernel.singular_weight_re", kernel.singular_weight.re);
    ds.meta_f64("kernel.singular_weight_im", kernel.singular_weight.im);
    let norm = dad::normalization_check(&kernel);
    ds.meta_f64("kernel.normalization_re", norm.re);
    ds.meta_f64("kernel.normalization_im", norm.im);
    // the same integral under the alternative unit-delta convention, for
    // comparison with the 1/T(p0) weight actually used
    let unit_norm = norm - kernel.singular_weight + 1.0;
    ds.meta_f64("kernel.normalization_unit_delta_re", unit_norm.re);
    ds.meta_f64("kernel.normalization_unit_delta_im", unit_norm.im);
    let guard = dad::default_x_guard(&grid);
    ds.meta_f64("causality.x_guard", guard);
    ds.meta_f64(
        "causality.residual",
        dad::causality_residual(&xi, guard),
    );
    ds.write(&r.out)
}

/// Transmission amplitude and band curves over momentum.
pub fn transmission(args: CommonArgs) -> CliResult<()> {
    let r = resolve(
        args,
        Defaults {
            p0_over_s2w: 0.5,
            sigma_over_d: 5.0,
        },
    )?;
    let s2w = (2.0 * r.barrier.height()).sqrt();
    let pmax = r.pmax.unwrap_or(2.0 * s2w);
    let n = r.n.unwrap_or(2001);
    let mut ds = Dataset::new(&[
        "p[momentum]",
        "re_t[1]",
        "im_t[1]",
        "abs_t[1]",
        "log10_abs_t[1]",
        "phase[rad]",
        "re_t_over_p_norm[1]",
        "sin_neg_pd[1]",
        "packet_amp_unit[1]",
        "re_ratio_wide[1]",
        "im_ratio_wide[1]",
    ]);
    stamp(&mut ds, "transmission", &r);
    if r.pmax.is_none() {
        ds.meta("default.pmax", crate::output::fmt(pmax));
    }
    if r.n.is_none() {
        ds.meta("default.n", n);
    }
    let pgrid = UniformGrid::from_bounds(0.0, pmax, n).map_err(|e| e.to_string())?;
    let pk = r.packet()?;
    let band = analysis::superosc_band(&r.barrier, &pk, &pgrid).map_err(|e| e.to_string())?;
    // continuous phase along the grid: jumps across the arg branch cut are
    // removed before emission
    let mut phases: Vec<f64> = band
        .iter()
        .map(|s| barrier::transmission_log(s.p, &r.barrier).phase)
        .collect();
    analysis::unwrap_phases(&mut phases);
    ds.meta("phase.convention", "unwrapped along the momentum grid");
    for (s, phase) in band.iter().zip(phases.iter()) {
        let lt = barrier::transmission_log(s.p, &r.barrier);
        let t = barrier::transmission(s.p, &r.barrier).unwrap_or_default();
        ds.push_row(vec![
            s.p,
            t.re,
            t.im,
            t.norm(),
            lt.log_mag / std::f64::consts::LN_10,
            *phase,
            s.re_t_over_p_norm,
            s.sin_neg_pd,
            s.packet_amp_unit,
            s.ratio_wide.re,
            s.ratio_wide.im,
        ]);
    }
    ds.write(&r.out)
}

/// Momentum-integral transmitted pulse at one time.
pub fn pulse(args: CommonArgs) -> CliResult<()> {
    let r = resolve(
        args,
        Defaults {
            p0_over_s2w: 0.4,
            sigma_over_d: 5.0,
        },
    )?;
    let pk = r.packet()?;
    let t = default_time(&r)?;
    let quad = MomentumQuadrature::default();
    let mut ds = Dataset::new(&[
        "x[length]",
        "re_g[1/sqrt(length)]",
        "im_g[1/sqrt(length)]",
        "abs_g[1/sqrt(length)]",
    ]);
    stamp(&mut ds, "pulse", &r);
    if r.t.is_none() {
        ds.meta("default.t", crate::output::fmt(t));
    }
    ds.meta_f64("t", t);
    stamp_quadrature(&mut ds, &quad);
    let center = r.p0 * t + r.barrier.width();
    let n = r.n.unwrap_or(1201);
    if r.n.is_none() {
        ds.meta("default.n", n);
    }
    let xgrid =
        UniformGrid::from_bounds(center - 6.0 * r.sigma, center + 6.0 * r.sigma, n)
            .map_err(|e| e.to_string())?;
    let pulse = transmit::transmitted_envelope(&r.barrier, &pk, t, &xgrid, r.mode, &quad)
        .map_err(|e| e.to_string())?;
    for (x, v) in pulse.envelope.iter() {
        ds.push_row(vec![x, v.re, v.im, v.norm()]);
    }
    ds.write(&r.out)
}

/// Kernel moments by both routes.
pub fn moments(args: CommonArgs) -> CliResult<()> {
    let r = resolve(
        args,
        Defaults {
            p0_over_s2w: 0.45,
            sigma_over_d: 5.0,
        },
    )?;
    let taper = Taper::default();
    let mut ds = Dataset::new(&[
        "n[1]",
        "re_moment_derivative[length^n]",
        "im_moment_derivative[length^n]",
        "re_moment_direct[length^n]",
        "im_moment_direct[length^n]",
        "rel_diff[1]",
    ]);
    stamp(&mut ds, "moments", &r);
    let grid = transform_grid(&r, &mut ds)?;
    stamp_taper(&mut ds, &taper);
    let p0 = grid.snap(r.p0);
    ds.meta_f64("p0.requested", r.p0);
    ds.meta_f64("p0.used", p0);
    let b = r.barrier.clone();
    let deriv = dad::moments_derivative(move |p| barrier::transmission_log(p, &b), p0, 3)
        .map_err(|e| e.to_string())?;
    let xi = xi_for(&r, &grid, &taper)?;
    let t_p0 = barrier::transmission(p0, &r.barrier).map_err(|e| e.to_string())?;
    let kernel = dad::dad_from_xi(&xi, p0, t_p0).map_err(|e| e.to_string())?;
    let window = SpatialWindow::for_barrier_width(r.barrier.width());
    ds.meta_f64("moment_window.x_lo", window.x_lo);
    ds.meta_f64("moment_window.ramp", window.ramp);
    let direct = dad::moments_direct(&kernel, 3, &window).map_err(|e| e.to_string())?;
    ds.meta_f64("moment_window.edge_ratio", direct.edge_ratio);
    for n in 0..=3usize {
        let md = deriv.moment(n);
        let mi = direct.moments.moment(n);
        let rel = (md - mi).norm() / md.norm().max(f64::MIN_POSITIVE);
        ds.push_row(vec![n as f64, md.re, md.im, mi.re, mi.im, rel]);
    }
    ds.write(&r.out)
}

/// Transmitted-peak trajectory over a list of times.
pub fn trajectory(args: CommonArgs) -> CliResult<()> {
    let r = resolve(
        args,
        Defaults {
            p0_over_s2w: 0.5,
            sigma_over_d: 1.0,
        },
    )?;
    if r.times.len() < 5 {
        return Err("trajectory needs --times with at least 5 comma-separated entries".into());
    }
    let pk = r.packet()?;
    let quad = MomentumQuadrature::default();
    let mut ds = Dataset::new(&["t[time]", "peak_x[length]"]);
    stamp(&mut ds, "trajectory", &r);
    stamp_quadrature(&mut ds, &quad);
    let mut pulses = Vec::new();
    let slope_guess = r.p0.max(1e-3);
    for &t in &r.times {
        let center = slope_guess * t + r.barrier.width();
        let xgrid = UniformGrid::from_bounds(
            center - 6.0 * r.sigma,
            center + 6.0 * r.sigma,
            r.n.unwrap_or(1201),
        )
        .map_err(|e| e.to_string())?;
        pulses.push(
            transmit::transmitted_envelope(&r.barrier, &pk, t, &xgrid, r.mode, &quad)
                .map_err(|e| e.to_string())?,
        );
    }
    for pulse in &pulses {
        let peak = pulse.peak_position().map_err(|e| e.to_string())?;
        ds.push_row(vec![pulse.t, peak]);
    }
    let fit = analysis::peak_trajectory(&pulses).map_err(|e| e.to_string())?;
    ds.meta_f64("fit.slope", fit.slope);
    ds.meta_f64("fit.intercept", fit.intercept);
    ds.meta_f64("fit.residual_rms", fit.residual);
    if let Ok(dp0) = analysis::delta_p0(&r.barrier, &pk) {
        ds.meta_f64("expected.slope", r.p0 + dp0);
        ds.meta_f64("expected.intercept", r.barrier.width());
        ds.meta_f64("expected.delta_p0", dp0);
    }
    ds.write(&r.out)
}

/// Exact vs high-barrier normalized pulse shapes.
pub fn figure2(args: CommonArgs) -> CliResult<()> {
    let r = resolve(
        args,
        Defaults {
            p0_over_s2w: 0.4,
            sigma_over_d: 5.0,
        },
    )?;
    let pk = r.packet()?;
    let t = default_time(&r)?;
    let quad = MomentumQuadrature::default();
    let mut ds = Dataset::new(&[
        "x[length]",
        "abs_exact_over_t[1/sqrt(length)]",
        "abs_high_barrier_over_t[1/sqrt(length)]",
    ]);
    stamp(&mut ds, "figure2", &r);
    if r.t.is_none() {
        ds.meta("default.t", crate::output::fmt(t));
    }
    ds.meta_f64("t", t);
    ds.meta(
        "normalization",
        "each curve divided by its own T(p0): exact by the closed form, the approximant by the high-barrier amplitude",
    );
    stamp_quadrature(&mut ds, &quad);
    let center = r.p0 * t + r.barrier.width();
    let n = r.n.unwrap_or(1201);
    if r.n.is_none() {
        ds.meta("default.n", n);
    }
    let xgrid =
        UniformGrid::from_bounds(center - 5.0 * r.sigma, center + 5.0 * r.sigma, n)
            .map_err(|e| e.to_string())?;
    let exact = transmit::transmitted_envelope(
        &r.barrier,
        &pk,
        t,
        &xgrid,
        NormalizationMode::RatioToTransmission,
        &quad,
    )
    .map_err(|e| e.to_string())?;
    let approx = transmit::high_barrier_pulse(
        &r.barrier,
        &pk,
        t,
        &xgrid,
        NormalizationMode::RatioToTransmission,
    )
    .map_err(|e| e.to_string())?;
    for ((x, ve), (_, va)) in exact.envelope.iter().zip(approx.envelope.iter()) {
        ds.push_row(vec![x, ve.norm(), va.norm()]);
    }
    ds.write(&r.out)
}

/// Exact vs wide-barrier (complex shift) normalized pulse shapes.
pub fn figure3(args: CommonArgs) -> CliResult<()> {
    let r = resolve(
        args,
        Defaults {
            p0_over_s2w: 0.5,
            sigma_over_d: 1.0,
        },
    )?;
    let pk = r.packet()?;
    let t = default_time(&r)?;
    let quad = MomentumQuadrature::default();
    let mut ds = Dataset::new(&[
        "x[length]",
        "abs_exact_over_t[1/sqrt(length)]",
        "abs_wide_shift_over_t[1/sqrt(length)]",
    ]);
    stamp(&mut ds, "figure3", &r);
    if r.t.is_none() {
        ds.meta("default.t", crate::output::fmt(t));
    }
    ds.meta_f64("t", t);
    ds.meta(
        "normalization",
        "each curve divided by its own T(p0): exact by the closed form, the approximant by the wide-barrier amplitude",
    );
    stamp_quadrature(&mut ds, &quad);
    let shift = barrier::wide_barrier_params(r.p0, &r.barrier).map_err(|e| e.to_string())?;
    ds.meta_f64("shift.re_alpha", shift.alpha.re);
    ds.meta_f64("shift.im_alpha", shift.alpha.im);
    let center = r.p0 * t + r.barrier.width();
    let n = r.n.unwrap_or(1201);
    if r.n.is_none() {
        ds.meta("default.n", n);
    }
    let xgrid =
        UniformGrid::from_bounds(center - 5.0 * r.sigma, center + 5.0 * r.sigma, n)
            .map_err(|e| e.to_string())?;
    let exact = transmit::transmitted_envelope(
        &r.barrier,
        &pk,
        t,
        &xgrid,
        NormalizationMode::RatioToTransmission,
        &quad,
    )
    .map_err(|e| e.to_string())?;
    let approx = transmit::wide_barrier_pulse(
        &shift,
        &pk,
        t,
        &xgrid,
        NormalizationMode::RatioToTransmission,
    )
    .map_err(|e| e.to_string())?;
    for ((x, ve), (_, va)) in exact.envelope.iter().zip(approx.envelope.iter()) {
        ds.push_row(vec![x, ve.norm(), va.norm()]);
    }
    ds.write(&r.out)
}

/// Phase-time saturation: tau_phase against barrier width at fixed height.
pub fn hartman(args: CommonArgs, beta_list: Option<String>) -> CliResult<()> {
    let r = config::resolve_fixed_height(
        args,
        Defaults {
            p0_over_s2w: 0.5,
            sigma_over_d: 5.0,
        },
    )?;
    let betas = match &beta_list {
        Some(text) => config::parse_list(text, "--beta-list")?,
        None => vec![20.0, 40.0, 80.0],
    };
    let mut ds = Dataset::new(&[
        "beta[1]",
        "d[length]",
        "tau_phase[time]",
        "re_tau[time]",
        "im_tau[time]",
        "phase[rad]",
    ]);
    ds.meta("software", format!("qtunnel {VERSION}"));
    ds.meta("scenario", "hartman");
    ds.meta_f64("packet.p0", r.p0);
    ds.meta_resolved(&r.log);
    if beta_list.is_none() {
        ds.meta("default.beta_list", "20,40,80");
    }
    let w = r.barrier.height();
    let s2w = (2.0 * w).sqrt();
    ds.meta_f64("height_W_fixed", w);
    for &beta in &betas {
        if beta.is_nan() || beta <= 0.0 {
            return Err(format!("beta entries must be positive, got {beta}"));
        }
        let b = Barrier::new(w, beta / s2w, 0.0).map_err(|e| e.to_string())?;
        let dt = analysis::delay_times(&b, r.p0).map_err(|e| e.to_string())?;
        ds.push_row(vec![
            beta,
            b.width(),
            dt.tau_phase,
            dt.tau.re,
            dt.tau.im,
            dt.phase,
        ]);
    }
    ds.write(&r.out)
}
