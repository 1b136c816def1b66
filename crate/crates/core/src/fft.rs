//! Forward/inverse discrete Fourier transforms on torus grids.
//!
//! The forward transform carries the 1/N normalization, so spectral
//! coefficients are the actual Fourier coefficients of the trigonometric
//! interpolant: `f(x) = Σ_k f̂_k e^{i k·x}`. Plans are cached per length and
//! direction and shared process-wide; rustfft plans are internally
//! thread-safe, so concurrent transforms of different fields are fine.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

use crate::grid::TorusGrid;

fn plan(len: usize, direction: FftDirection) -> Arc<dyn Fft<f64>> {
    static PLANS: OnceLock<Mutex<HashMap<(usize, bool), Arc<dyn Fft<f64>>>>> = OnceLock::new();
    let key = (len, direction == FftDirection::Forward);
    let cache = PLANS.get_or_init(|| Mutex::new(HashMap::new()));
    let mut cache = cache.lock().expect("FFT plan cache poisoned");
    cache
        .entry(key)
        .or_insert_with(|| FftPlanner::new().plan_fft(len, direction))
        .clone()
}

/// In-place transform of `buf` along `axis` of a row-major array of `shape`.
fn transform_axis(buf: &mut [Complex64], shape: [usize; 3], axis: usize, dir: FftDirection) {
    let len = shape[axis];
    if len == 1 {
        return;
    }
    let strides = [shape[1] * shape[2], shape[2], 1];
    let stride = strides[axis];
    let fft = plan(len, dir);
    let mut line = vec![Complex64::default(); len];

    // Iterate over all lines parallel to `axis`.
    let (oa, ob) = match axis {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    };
    for ia in 0..shape[oa] {
        for ib in 0..shape[ob] {
            let base = ia * strides[oa] + ib * strides[ob];
            if stride == 1 {
                fft.process(&mut buf[base..base + len]);
            } else {
                for (j, slot) in line.iter_mut().enumerate() {
                    *slot = buf[base + j * stride];
                }
                fft.process(&mut line);
                for (j, &v) in line.iter().enumerate() {
                    buf[base + j * stride] = v;
                }
            }
        }
    }
}

/// Physical samples → Fourier coefficients (1/N normalized).
pub fn forward(grid: &TorusGrid, phys: &[f64]) -> Vec<Complex64> {
    assert_eq!(phys.len(), grid.len(), "field length does not match grid");
    let shape = grid.shape();
    let mut buf: Vec<Complex64> = phys.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    for axis in 0..3 {
        transform_axis(&mut buf, shape, axis, FftDirection::Forward);
    }
    let scale = 1.0 / grid.len() as f64;
    for v in &mut buf {
        *v *= scale;
    }
    buf
}

/// Fourier coefficients → physical samples (real part; the imaginary part of
/// a transform of Hermitian data is roundoff and is discarded).
pub fn inverse(grid: &TorusGrid, spec: &[Complex64]) -> Vec<f64> {
    assert_eq!(spec.len(), grid.len(), "spectrum length does not match grid");
    let shape = grid.shape();
    let mut buf = spec.to_vec();
    for axis in 0..3 {
        transform_axis(&mut buf, shape, axis, FftDirection::Inverse);
    }
    buf.into_iter().map(|v| v.re).collect()
}
