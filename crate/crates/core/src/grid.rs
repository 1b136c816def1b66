//! Discretization of the periodic box [0, 2π)³.
//!
//! A grid is `n` equispaced points along each *active* axis; inactive axes
//! collapse to a single point, so a field on a grid with `active_dims = 2`
//! is a z-invariant field on the full torus. Wavenumbers follow the usual
//! FFT layout: index `i` maps to `i` for `i ≤ n/2` and to `i − n` above.

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GridError {
    #[error("grid size {0} is not a power of two ≥ 8")]
    BadSize(usize),
    #[error("active_dims must be 1, 2, or 3 (got {0})")]
    BadDims(usize),
}

/// A uniform grid on the periodic box, with `active_dims` axes resolved at
/// `n` points each and the remaining axes collapsed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TorusGrid {
    n: usize,
    active_dims: usize,
}

impl TorusGrid {
    /// `n` must be a power of two ≥ 8 (so the 2/3-rule cutoff keeps at least
    /// two resolved harmonics), `active_dims` in 1..=3.
    pub fn new(n: usize, active_dims: usize) -> Result<Self, GridError> {
        if !(1..=3).contains(&active_dims) {
            return Err(GridError::BadDims(active_dims));
        }
        if n < 8 || !n.is_power_of_two() {
            return Err(GridError::BadSize(n));
        }
        Ok(TorusGrid { n, active_dims })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn active_dims(&self) -> usize {
        self.active_dims
    }

    /// Points along each axis: `[n, n or 1, n or 1]`.
    pub fn shape(&self) -> [usize; 3] {
        [
            self.n,
            if self.active_dims >= 2 { self.n } else { 1 },
            if self.active_dims >= 3 { self.n } else { 1 },
        ]
    }

    /// Total number of grid points.
    pub fn len(&self) -> usize {
        let s = self.shape();
        s[0] * s[1] * s[2]
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Row-major strides matching [`shape`](Self::shape).
    pub fn strides(&self) -> [usize; 3] {
        let s = self.shape();
        [s[1] * s[2], s[2], 1]
    }

    /// Grid spacing along an active axis.
    pub fn dx(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.n as f64
    }

    /// Physical coordinate of index `i` along an active axis.
    pub fn coord(&self, i: usize) -> f64 {
        i as f64 * self.dx()
    }

    /// Integer wavenumber for FFT bin `idx` on an axis of `len` points:
    /// `idx` for `idx ≤ len/2`, `idx − len` above. A collapsed axis (len 1)
    /// always yields 0.
    pub fn wavenumber(len: usize, idx: usize) -> f64 {
        debug_assert!(idx < len);
        if idx <= len / 2 {
            idx as f64
        } else {
            idx as f64 - len as f64
        }
    }

    /// Wavenumbers for every bin along `axis`.
    pub fn axis_wavenumbers(&self, axis: usize) -> Vec<f64> {
        let len = self.shape()[axis];
        (0..len).map(|i| Self::wavenumber(len, i)).collect()
    }

    /// Largest retained harmonic under the 2/3 rule: modes with any active
    /// |kᵢ| > cutoff are annihilated by dealiasing.
    pub fn dealias_cutoff(&self) -> usize {
        self.n / 3
    }

    /// Maximum |k|² over modes that survive dealiasing; governs the
    /// stability limit of explicitly integrated diffusive terms.
    pub fn kmax_sq_retained(&self) -> f64 {
        let c = self.dealias_cutoff() as f64;
        c * c * self.active_dims as f64
    }

    /// Visit every grid point: `f(flat_index, [x, y, z])`.
    pub fn for_each_point(&self, mut f: impl FnMut(usize, [f64; 3])) {
        let [n0, n1, n2] = self.shape();
        let mut idx = 0;
        for i0 in 0..n0 {
            let x = self.coord(i0);
            for i1 in 0..n1 {
                let y = self.coord(i1);
                for i2 in 0..n2 {
                    f(idx, [x, y, self.coord(i2)]);
                    idx += 1;
                }
            }
        }
    }

    /// Visit every spectral mode: `f(flat_index, [k₁, k₂, k₃])`.
    pub fn for_each_mode(&self, mut f: impl FnMut(usize, [f64; 3])) {
        let [n0, n1, n2] = self.shape();
        let k0s = self.axis_wavenumbers(0);
        let k1s = self.axis_wavenumbers(1);
        let k2s = self.axis_wavenumbers(2);
        let mut idx = 0;
        for &k0 in &k0s {
            for &k1 in k1s.iter().take(n1) {
                for &k2 in k2s.iter().take(n2) {
                    f(idx, [k0, k1, k2]);
                    idx += 1;
                }
            }
        }
        debug_assert_eq!(idx, n0 * n1 * n2);
    }
}
