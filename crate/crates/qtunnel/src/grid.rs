//! Uniform grids, sampled complex functions and the momentum-space taper.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Uniformly spaced one-dimensional grid: `point(i) = start + i * step`.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformGrid {
    start: f64,
    step: f64,
    len: usize,
}

impl UniformGrid {
    pub fn new(start: f64, step: f64, len: usize) -> Result<Self> {
        if !start.is_finite() || !step.is_finite() || step <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "grid start/step must be finite with step > 0, got start = {start}, step = {step}"
            )));
        }
        if len < 2 {
            return Err(Error::InvalidParameter(format!(
                "grid needs at least 2 points, got {len}"
            )));
        }
        Ok(Self { start, step, len })
    }

    /// Grid with `len` points spanning `[start, end]` inclusive.
    pub fn from_bounds(start: f64, end: f64, len: usize) -> Result<Self> {
        if len < 2 {
            return Err(Error::InvalidParameter(format!(
                "grid needs at least 2 points, got {len}"
            )));
        }
        let step = (end - start) / (len - 1) as f64;
        Self::new(start, step, len)
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn end(&self) -> f64 {
        self.point(self.len - 1)
    }

    pub fn point(&self, i: usize) -> f64 {
        // single-rounding evaluation: grids produced by transforms anchor a
        // large negative start against i * step, and the cancellation must
        // stay accurate relative to the point value itself
        (i as f64).mul_add(self.step, self.start)
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len).map(move |i| self.point(i))
    }

    /// Grid point closest to `x` (clamped to the grid).
    pub fn nearest(&self, x: f64) -> f64 {
        let i = ((x - self.start) / self.step).round();
        let i = i.clamp(0.0, (self.len - 1) as f64);
        self.point(i as usize)
    }
}

/// Symmetric uniform momentum grid for transforming transmission amplitudes.
///
/// Endpoints are inclusive: `step * (n - 1) = p_max - p_min`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumGrid {
    p_min: f64,
    p_max: f64,
    n: usize,
}

impl MomentumGrid {
    pub fn new(p_min: f64, p_max: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter(format!(
                "momentum grid needs at least 2 points, got {n}"
            )));
        }
        if p_max.is_nan() || p_min.is_nan() || p_max <= p_min {
            return Err(Error::InvalidParameter(format!(
                "momentum grid needs p_max > p_min, got [{p_min}, {p_max}]"
            )));
        }
        Ok(Self { p_min, p_max, n })
    }

    /// Reference grid used for all figure outputs: p in [-40 sqrt(2W), 40 sqrt(2W)]
    /// with 2^16 points.
    pub fn reference(barrier_height: f64) -> Result<Self> {
        let p_edge = 40.0 * (2.0 * barrier_height).sqrt();
        Self::new(-p_edge, p_edge, 1 << 16)
    }

    pub fn p_min(&self) -> f64 {
        self.p_min
    }

    pub fn p_max(&self) -> f64 {
        self.p_max
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn step(&self) -> f64 {
        (self.p_max - self.p_min) / (self.n - 1) as f64
    }

    pub fn range(&self) -> f64 {
        self.p_max - self.p_min
    }

    pub fn grid(&self) -> UniformGrid {
        UniformGrid::new(self.p_min, self.step(), self.n).expect("validated on construction")
    }

    pub fn is_symmetric(&self) -> bool {
        (self.p_min + self.p_max).abs() <= 1e-9 * self.range()
    }

    /// Momentum grid point closest to `p`.
    pub fn snap(&self, p: f64) -> f64 {
        self.grid().nearest(p)
    }
}

/// Complex samples on a uniform grid; the common carrier for fields in both
/// coordinate and momentum space.
#[derive(Debug, Clone)]
pub struct SampledComplexFunction {
    pub grid: UniformGrid,
    pub values: Vec<Complex64>,
}

impl SampledComplexFunction {
    pub fn new(grid: UniformGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidParameter(format!(
                "sample count {} does not match grid length {}",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Trapezoidal integral over the sampled interval.
    pub fn trapezoid(&self) -> Complex64 {
        let mut acc = KahanSum::new();
        let n = self.values.len();
        for (i, v) in self.values.iter().enumerate() {
            let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
            acc.add(v * w);
        }
        acc.value() * self.grid.step()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.norm()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, Complex64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(move |(i, v)| (self.grid.point(i), *v))
    }
}

/// Raised-cosine taper over the outer `fraction` of each half of a symmetric
/// momentum grid, with a guard on how far the integrand must have relaxed at
/// the grid edge.
#[derive(Debug, Clone)]
pub struct Taper {
    /// Fraction of each half-range over which the weight rolls off to zero.
    pub fraction: f64,
    /// Largest tolerated value of ||T(p_max)| - 1|.
    pub decay_tol: f64,
}

impl Default for Taper {
    fn default() -> Self {
        Self {
            fraction: 0.1,
            decay_tol: 1e-6,
        }
    }
}

impl Taper {
    /// Taper weight at momentum `p` for a grid reaching to `p_edge`.
    pub fn weight(&self, p: f64, p_edge: f64) -> f64 {
        let flat = (1.0 - self.fraction) * p_edge;
        let a = p.abs();
        if a <= flat {
            1.0
        } else if a >= p_edge {
            0.0
        } else {
            let u = (a - flat) / (self.fraction * p_edge);
            0.5 * (1.0 + (std::f64::consts::PI * u).cos())
        }
    }
}

/// Compensated (Kahan) summation of complex values in a fixed order.
#[derive(Debug, Clone, Default)]
pub struct KahanSum {
    sum: Complex64,
    carry: Complex64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, v: Complex64) {
        let y = v - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> Complex64 {
        self.sum
    }
}
