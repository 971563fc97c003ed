//! Uniform periodic grid and real-valued fields on it.
//!
//! The real line of the underlying theory is truncated to the periodic box
//! `[-L, L)`. Initial data is expected to decay below round-off well inside
//! the box, so periodic images only perturb at the `e^{-2L}` level; every
//! consumer that is sensitive to the line/box mismatch (the kernel
//! convolution oracle, support trackers) checks boundary mass explicitly.

use crate::{ChError, Result};
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use std::sync::{Arc, Mutex, OnceLock};

/// Process-wide FFT plan cache, keyed by transform length.
fn planner() -> &'static Mutex<FftPlanner<f64>> {
    static PLANNER: OnceLock<Mutex<FftPlanner<f64>>> = OnceLock::new();
    PLANNER.get_or_init(|| Mutex::new(FftPlanner::new()))
}

pub(crate) fn plan_pair(len: usize) -> (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>) {
    let mut p = planner().lock().expect("fft planner poisoned");
    (p.plan_fft_forward(len), p.plan_fft_inverse(len))
}

/// Uniform periodic spatial grid with spectral wavenumbers.
///
/// `n_points` must be a power of two (>= 16); `dx * n_points == 2 L`
/// exactly. Wavenumbers follow the signed FFT bin layout `k_j = pi j / L`
/// for `j in -n/2+1 ..= n/2`.
pub struct Grid1D {
    n_points: usize,
    half_length: f64,
    dx: f64,
    nodes: Vec<f64>,
    wavenumbers: Vec<f64>,
    fft_fwd: Arc<dyn Fft<f64>>,
    fft_inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Grid1D {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Grid1D")
            .field("n_points", &self.n_points)
            .field("half_length", &self.half_length)
            .field("dx", &self.dx)
            .finish()
    }
}

impl Grid1D {
    pub fn new(n_points: usize, half_length: f64) -> Result<Arc<Self>> {
        if n_points < 16 || !n_points.is_power_of_two() {
            return Err(ChError::InvalidParameter(format!(
                "n_points must be a power of two >= 16, got {n_points}"
            )));
        }
        if !(half_length.is_finite() && half_length > 0.0) {
            return Err(ChError::InvalidParameter(format!(
                "half_length must be positive and finite, got {half_length}"
            )));
        }
        let n = n_points;
        let dx = 2.0 * half_length / n as f64;
        let nodes = (0..n).map(|i| -half_length + i as f64 * dx).collect();
        let k1 = std::f64::consts::PI / half_length;
        let wavenumbers = (0..n)
            .map(|i| {
                let f = if i <= n / 2 { i as isize } else { i as isize - n as isize };
                k1 * f as f64
            })
            .collect();
        let (fft_fwd, fft_inv) = plan_pair(n);
        Ok(Arc::new(Grid1D {
            n_points,
            half_length,
            dx,
            nodes,
            wavenumbers,
            fft_fwd,
            fft_inv,
        }))
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Signed wavenumber of FFT bin `i`.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    /// Largest wavenumber representable on the grid (Nyquist).
    pub fn nyquist(&self) -> f64 {
        std::f64::consts::PI / self.half_length * (self.n_points / 2) as f64
    }

    /// Wrap a position into `[-L, L)`.
    pub fn wrap(&self, x: f64) -> f64 {
        let l = self.half_length;
        let span = 2.0 * l;
        let mut y = (x + l) % span;
        if y < 0.0 {
            y += span;
        }
        y - l
    }

    pub fn same_layout(&self, other: &Grid1D) -> bool {
        self.n_points == other.n_points && self.half_length == other.half_length
    }

    /// Forward FFT of a real field into its complex spectrum (unnormalized).
    pub(crate) fn fft(&self, values: &[f64]) -> Vec<Complex<f64>> {
        debug_assert_eq!(values.len(), self.n_points);
        let mut buf: Vec<Complex<f64>> = values.iter().map(|&v| Complex::new(v, 0.0)).collect();
        self.fft_fwd.process(&mut buf);
        buf
    }

    /// Inverse FFT back to a real field; divides by `n` and drops the
    /// (round-off level) imaginary part.
    pub(crate) fn ifft(&self, mut spectrum: Vec<Complex<f64>>) -> Vec<f64> {
        debug_assert_eq!(spectrum.len(), self.n_points);
        self.fft_inv.process(&mut spectrum);
        let scale = 1.0 / self.n_points as f64;
        spectrum.iter().map(|c| c.re * scale).collect()
    }
}

/// Real scalar field sampled on the nodes of a [`Grid1D`].
#[derive(Clone, Debug)]
pub struct Field {
    grid: Arc<Grid1D>,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: Arc<Grid1D>, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), grid.n_points(), "field length must match grid");
        Field { grid, values }
    }

    pub fn zeros(grid: Arc<Grid1D>) -> Self {
        let n = grid.n_points();
        Field { grid, values: vec![0.0; n] }
    }

    pub fn from_fn(grid: Arc<Grid1D>, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.nodes().iter().map(|&x| f(x)).collect();
        Field { grid, values }
    }

    pub fn grid(&self) -> &Arc<Grid1D> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Errors unless every entry is finite. NaN/Inf is never silent.
    pub fn check_finite(&self, context: &str) -> Result<()> {
        if self.values.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(ChError::NonFinite { context: context.to_string() })
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().fold(f64::INFINITY, |acc, &v| acc.min(v))
    }

    pub fn max(&self) -> f64 {
        self.values.iter().fold(f64::NEG_INFINITY, |acc, &v| acc.max(v))
    }

    fn assert_same_grid(&self, other: &Field) {
        assert!(
            self.grid.same_layout(&other.grid),
            "fields live on different grids ({:?} vs {:?})",
            self.grid,
            other.grid
        );
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Field {
        self.assert_same_grid(other);
        Field {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn add(&self, other: &Field) -> Field {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Field) -> Field {
        self.zip(other, |a, b| a - b)
    }

    /// Pointwise product on the collocation grid (no de-aliasing).
    pub fn mul_pointwise(&self, other: &Field) -> Field {
        self.zip(other, |a, b| a * b)
    }

    pub fn scale(&self, s: f64) -> Field {
        self.map(|v| s * v)
    }

    /// `self += s * other`, the RK4 workhorse.
    pub fn axpy(&mut self, s: f64, other: &Field) {
        self.assert_same_grid(other);
        for (a, &b) in self.values.iter_mut().zip(&other.values) {
            *a += s * b;
        }
    }

    pub fn sup_distance(&self, other: &Field) -> f64 {
        self.assert_same_grid(other);
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |acc, (&a, &b)| acc.max((a - b).abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_invariants() {
        let g = Grid1D::new(64, 10.0).unwrap();
        assert_eq!(g.n_points(), 64);
        // dx * n == 2L exactly
        assert_eq!(g.dx() * 64.0, 20.0);
        assert_eq!(g.nodes()[0], -10.0);
        // fundamental wavenumber pi/L
        let k1 = std::f64::consts::PI / 10.0;
        assert_eq!(g.wavenumbers()[1], k1);
        assert_eq!(g.wavenumbers()[63], -k1);
        assert_eq!(g.wavenumbers()[32], k1 * 32.0);
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(Grid1D::new(12, 10.0).is_err());
        assert!(Grid1D::new(48, 10.0).is_err());
        assert!(Grid1D::new(16, 0.0).is_err());
    }

    #[test]
    fn wrap_into_box() {
        let g = Grid1D::new(16, 5.0).unwrap();
        assert_eq!(g.wrap(5.0), -5.0);
        assert_eq!(g.wrap(-5.0), -5.0);
        assert!((g.wrap(12.0) - 2.0).abs() < 1e-14);
        assert!((g.wrap(-6.0) - 4.0).abs() < 1e-14);
    }

    #[test]
    fn finite_check_catches_nan() {
        let g = Grid1D::new(16, 5.0).unwrap();
        let mut f = Field::zeros(g);
        assert!(f.check_finite("ok").is_ok());
        f.values_mut()[3] = f64::NAN;
        assert!(f.check_finite("bad").is_err());
    }

    #[test]
    #[should_panic(expected = "different grids")]
    fn mixing_grids_panics() {
        let a = Field::zeros(Grid1D::new(16, 5.0).unwrap());
        let b = Field::zeros(Grid1D::new(16, 6.0).unwrap());
        let _ = a.add(&b);
    }
}
