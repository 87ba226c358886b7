//! Richardson-extrapolated central differences for complex-valued functions
//! of a real variable, plus the Bell-polynomial map from log-derivatives to
//! normalized derivative ratios.
//!
//! Differencing the (complex) logarithm instead of the function itself keeps
//! the stencil well conditioned when the function magnitude is exponentially
//! small, as it is for opaque-barrier transmission amplitudes.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Highest derivative order supported by the stencils below.
pub const MAX_ORDER: usize = 6;

/// Step-size ladder and convergence policy for [`derivatives`].
#[derive(Debug, Clone)]
pub struct DerivativeSpec {
    /// Step of the coarsest level; each level halves it.
    pub initial_step: f64,
    /// Number of Richardson levels.
    pub levels: usize,
    /// Relative convergence tolerance on the last extrapolation update.
    pub rel_tol: f64,
    /// Absolute floor below which an update counts as converged.
    pub abs_tol: f64,
}

impl DerivativeSpec {
    /// Default ladder at expansion point `x0`: initial step
    /// `1e-3 * max(1, |x0|)`, four levels.
    pub fn for_point(x0: f64) -> Self {
        Self {
            initial_step: 1e-3 * x0.abs().max(1.0),
            levels: 4,
            rel_tol: 1e-5,
            abs_tol: 1e-9,
        }
    }
}

/// Second-order central stencils, offsets -3..=3, orders 1..=6.
const STENCILS: [[f64; 7]; 6] = [
    [0.0, 0.0, -0.5, 0.0, 0.5, 0.0, 0.0],
    [0.0, 0.0, 1.0, -2.0, 1.0, 0.0, 0.0],
    [0.0, -0.5, 1.0, 0.0, -1.0, 0.5, 0.0],
    [0.0, 1.0, -4.0, 6.0, -4.0, 1.0, 0.0],
    [-0.5, 2.0, -2.5, 0.0, 2.5, -2.0, 0.5],
    [1.0, -6.0, 15.0, -20.0, 15.0, -6.0, 1.0],
];

/// Derivatives of `f` at `x0` up to order `orders`, by central differences
/// with Richardson extrapolation over halved steps.
///
/// Returns `[f'(x0), f''(x0), ..]`.  Reports a step-size failure when the
/// final extrapolation update of any order exceeds the ladder tolerance.
pub fn derivatives<F>(f: F, x0: f64, orders: usize, spec: &DerivativeSpec) -> Result<Vec<Complex64>>
where
    F: Fn(f64) -> Complex64,
{
    if orders == 0 || orders > MAX_ORDER {
        return Err(Error::InvalidParameter(format!(
            "derivative order must be in 1..={MAX_ORDER}, got {orders}"
        )));
    }
    if spec.levels < 2 {
        return Err(Error::InvalidParameter(
            "Richardson extrapolation needs at least 2 levels".into(),
        ));
    }
    // raw central-difference estimates per level; higher orders divide by
    // h^n, so their ladders start at proportionally larger steps to stay
    // above the round-off floor
    const STEP_SCALE: [f64; MAX_ORDER] = [1.0, 1.0, 5.0, 20.0, 50.0, 100.0];
    let mut raw = vec![vec![Complex64::default(); orders]; spec.levels];
    for n in 0..orders {
        let h0 = spec.initial_step * STEP_SCALE[n];
        for (level, row) in raw.iter_mut().enumerate() {
            let h = h0 / (1u64 << level) as f64;
            let samples: Vec<Complex64> = (-3..=3).map(|m| f(x0 + m as f64 * h)).collect();
            let mut acc = Complex64::default();
            for (j, c) in STENCILS[n].iter().enumerate() {
                if *c != 0.0 {
                    acc += samples[j] * *c;
                }
            }
            row[n] = acc / h.powi(n as i32 + 1);
        }
    }
    // Richardson tableau with the production entry chosen by the smallest
    // consistency estimate; deep extrapolation amplifies round-off for the
    // higher orders, so the best entry is not always the deepest one.
    let mut out = Vec::with_capacity(orders);
    for n in 0..orders {
        let mut tableau: Vec<Vec<Complex64>> = Vec::with_capacity(spec.levels);
        for (i, row) in raw.iter().enumerate() {
            let mut trow = vec![row[n]];
            for j in 1..=i {
                let factor = 4f64.powi(j as i32);
                let v = (factor * trow[j - 1] - tableau[i - 1][j - 1]) / (factor - 1.0);
                trow.push(v);
            }
            tableau.push(trow);
        }
        let mut best = tableau[1][1];
        let mut best_err = f64::INFINITY;
        for i in 1..spec.levels {
            for j in 1..=i {
                let up = (tableau[i][j] - tableau[i][j - 1]).norm();
                let left = (tableau[i][j] - tableau[i - 1][j - 1]).norm();
                let est = up.max(left);
                if est < best_err {
                    best_err = est;
                    best = tableau[i][j];
                }
            }
        }
        if best_err > spec.rel_tol * best.norm() + spec.abs_tol {
            return Err(Error::DerivativeNotConverged {
                order: n + 1,
                error: best_err,
            });
        }
        out.push(best);
    }
    Ok(out)
}

/// Complete Bell transform: given derivatives `a_k = L^(k)(x0)` of
/// `L = log f`, returns `b_n = f^(n)(x0) / f(x0)` for `n = 0..=a.len()`,
/// with `b_0 = 1` exactly.
pub fn log_derivatives_to_ratios(log_derivs: &[Complex64]) -> Vec<Complex64> {
    let kmax = log_derivs.len();
    let mut b = Vec::with_capacity(kmax + 1);
    b.push(Complex64::new(1.0, 0.0));
    let mut binom = vec![vec![0u64; kmax + 1]; kmax + 1];
    for (n, row) in binom.iter_mut().enumerate() {
        row[0] = 1;
        row[n] = 1;
    }
    for n in 2..=kmax {
        for k in 1..n {
            binom[n][k] = binom[n - 1][k - 1] + binom[n - 1][k];
        }
    }
    for n in 0..kmax {
        let mut acc = Complex64::default();
        for k in 0..=n {
            acc += binom[n][k] as f64 * b[n - k] * log_derivs[k];
        }
        b.push(acc);
    }
    b
}
