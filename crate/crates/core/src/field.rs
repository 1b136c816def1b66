//! Scalar and vector fields with dual physical/spectral representations.
//!
//! A field owns at least one of the two representations and synthesizes the
//! other on first use, caching it. Fields are immutable once built — all
//! operations return new fields — which keeps solver stages referentially
//! transparent, makes the lazy caches safe to fill behind a shared
//! reference, and lets fields be shared across worker threads.

use std::sync::OnceLock;

use num_complex::Complex64;

use crate::fft;
use crate::grid::TorusGrid;

fn filled<T>(value: T) -> OnceLock<T> {
    let cell = OnceLock::new();
    let _ = cell.set(value);
    cell
}

fn copied<T: Clone>(cell: &OnceLock<T>) -> OnceLock<T> {
    match cell.get() {
        Some(v) => filled(v.clone()),
        None => OnceLock::new(),
    }
}

/// A real scalar field on a [`TorusGrid`].
pub struct ScalarField {
    grid: TorusGrid,
    phys: OnceLock<Vec<f64>>,
    spec: OnceLock<Vec<Complex64>>,
}

impl Clone for ScalarField {
    fn clone(&self) -> Self {
        ScalarField {
            grid: self.grid,
            phys: copied(&self.phys),
            spec: copied(&self.spec),
        }
    }
}

impl std::fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ScalarField")
            .field("grid", &self.grid)
            .field("has_phys", &self.phys.get().is_some())
            .field("has_spec", &self.spec.get().is_some())
            .finish()
    }
}

impl ScalarField {
    pub fn from_phys(grid: TorusGrid, phys: Vec<f64>) -> Self {
        assert_eq!(phys.len(), grid.len(), "field length does not match grid");
        ScalarField {
            grid,
            phys: filled(phys),
            spec: OnceLock::new(),
        }
    }

    pub fn from_spec(grid: TorusGrid, spec: Vec<Complex64>) -> Self {
        assert_eq!(spec.len(), grid.len(), "spectrum length does not match grid");
        ScalarField {
            grid,
            phys: OnceLock::new(),
            spec: filled(spec),
        }
    }

    /// Sample `f(x, y, z)` at every grid point.
    pub fn from_fn(grid: TorusGrid, f: impl Fn([f64; 3]) -> f64) -> Self {
        let mut phys = vec![0.0; grid.len()];
        grid.for_each_point(|idx, x| phys[idx] = f(x));
        Self::from_phys(grid, phys)
    }

    pub fn constant(grid: TorusGrid, value: f64) -> Self {
        Self::from_phys(grid, vec![value; grid.len()])
    }

    pub fn zeros(grid: TorusGrid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    /// Physical samples (synthesized and cached on first call).
    pub fn phys(&self) -> &[f64] {
        self.phys.get_or_init(|| {
            let spec = self.spec.get().expect("field holds neither representation");
            fft::inverse(&self.grid, spec)
        })
    }

    /// Fourier coefficients (computed and cached on first call).
    pub fn spec(&self) -> &[Complex64] {
        self.spec.get_or_init(|| {
            let phys = self.phys.get().expect("field holds neither representation");
            fft::forward(&self.grid, phys)
        })
    }

    /// Pointwise map in physical space.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> ScalarField {
        let phys = self.phys();
        ScalarField::from_phys(self.grid, phys.iter().map(|&v| f(v)).collect())
    }

    /// Pointwise combination of two fields.
    pub fn zip(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> ScalarField {
        assert_eq!(self.grid, other.grid, "grid mismatch");
        let a = self.phys();
        let b = other.phys();
        ScalarField::from_phys(
            self.grid,
            a.iter().zip(b.iter()).map(|(&x, &y)| f(x, y)).collect(),
        )
    }

    /// Spectral map: `f(flat_index, k, coefficient) -> coefficient`.
    pub fn map_spec(&self, f: impl Fn(usize, [f64; 3], Complex64) -> Complex64) -> ScalarField {
        let spec = self.spec();
        let mut out = vec![Complex64::default(); self.grid.len()];
        self.grid.for_each_mode(|idx, k| out[idx] = f(idx, k, spec[idx]));
        ScalarField::from_spec(self.grid, out)
    }

    pub fn scale(&self, c: f64) -> ScalarField {
        self.map(|v| c * v)
    }

    pub fn add(&self, other: &ScalarField) -> ScalarField {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &ScalarField) -> ScalarField {
        self.zip(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &ScalarField) -> ScalarField {
        self.zip(other, |a, b| a * b)
    }

    pub fn min_value(&self) -> f64 {
        self.phys().iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.phys().iter().fold(0.0_f64, |m, &v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.phys().iter().all(|v| v.is_finite())
    }

    /// ∫ f dx over the torus (all three axes, active or not).
    pub fn integral(&self) -> f64 {
        let phys = self.phys();
        let mean = phys.iter().sum::<f64>() / phys.len() as f64;
        mean * crate::TORUS_VOLUME
    }
}

/// Linear combination `ca·a + cb·b` (physical space).
pub fn lin2(ca: f64, a: &ScalarField, cb: f64, b: &ScalarField) -> ScalarField {
    a.zip(b, |x, y| ca * x + cb * y)
}

/// Linear combination `ca·a + cb·b + cc·c` (physical space).
pub fn lin3(ca: f64, a: &ScalarField, cb: f64, b: &ScalarField, cc: f64, c: &ScalarField) -> ScalarField {
    assert_eq!(a.grid(), c.grid(), "grid mismatch");
    let (pa, pb, pc) = (a.phys(), b.phys(), c.phys());
    let out = pa
        .iter()
        .zip(pb.iter())
        .zip(pc.iter())
        .map(|((&x, &y), &z)| ca * x + cb * y + cc * z)
        .collect();
    ScalarField::from_phys(a.grid(), out)
}

/// A three-component vector field; components are scalar fields on a shared
/// grid. Reduced-dimension grids still carry all three components (a planar
/// flow can have an out-of-plane velocity or magnetic component).
#[derive(Clone, Debug)]
pub struct VectorField {
    pub c: [ScalarField; 3],
}

impl VectorField {
    pub fn new(c: [ScalarField; 3]) -> Self {
        assert_eq!(c[0].grid(), c[1].grid(), "component grid mismatch");
        assert_eq!(c[0].grid(), c[2].grid(), "component grid mismatch");
        VectorField { c }
    }

    pub fn from_fns(
        grid: TorusGrid,
        f: impl Fn([f64; 3]) -> [f64; 3],
    ) -> Self {
        let mut px = vec![0.0; grid.len()];
        let mut py = vec![0.0; grid.len()];
        let mut pz = vec![0.0; grid.len()];
        grid.for_each_point(|idx, x| {
            let v = f(x);
            px[idx] = v[0];
            py[idx] = v[1];
            pz[idx] = v[2];
        });
        VectorField::new([
            ScalarField::from_phys(grid, px),
            ScalarField::from_phys(grid, py),
            ScalarField::from_phys(grid, pz),
        ])
    }

    pub fn constant(grid: TorusGrid, v: [f64; 3]) -> Self {
        VectorField::new([
            ScalarField::constant(grid, v[0]),
            ScalarField::constant(grid, v[1]),
            ScalarField::constant(grid, v[2]),
        ])
    }

    pub fn zeros(grid: TorusGrid) -> Self {
        Self::constant(grid, [0.0; 3])
    }

    pub fn grid(&self) -> TorusGrid {
        self.c[0].grid()
    }

    pub fn map_components(&self, f: impl Fn(&ScalarField) -> ScalarField) -> VectorField {
        VectorField::new([f(&self.c[0]), f(&self.c[1]), f(&self.c[2])])
    }

    pub fn scale(&self, s: f64) -> VectorField {
        self.map_components(|c| c.scale(s))
    }

    pub fn add(&self, other: &VectorField) -> VectorField {
        VectorField::new([
            self.c[0].add(&other.c[0]),
            self.c[1].add(&other.c[1]),
            self.c[2].add(&other.c[2]),
        ])
    }

    pub fn sub(&self, other: &VectorField) -> VectorField {
        VectorField::new([
            self.c[0].sub(&other.c[0]),
            self.c[1].sub(&other.c[1]),
            self.c[2].sub(&other.c[2]),
        ])
    }

    /// Pointwise scalar multiple `s·v`.
    pub fn mul_scalar(&self, s: &ScalarField) -> VectorField {
        self.map_components(|c| c.mul(s))
    }

    pub fn is_finite(&self) -> bool {
        self.c.iter().all(|c| c.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.c.iter().map(|c| c.max_abs()).fold(0.0, f64::max)
    }

    /// Pointwise |v|² as a scalar field.
    pub fn norm_sq_field(&self) -> ScalarField {
        let (a, b, c) = (self.c[0].phys(), self.c[1].phys(), self.c[2].phys());
        let out = a
            .iter()
            .zip(b.iter())
            .zip(c.iter())
            .map(|((&x, &y), &z)| x * x + y * y + z * z)
            .collect();
        ScalarField::from_phys(self.grid(), out)
    }

    /// Pointwise maximum of |v| over the grid.
    pub fn max_norm(&self) -> f64 {
        self.norm_sq_field()
            .phys()
            .iter()
            .fold(0.0_f64, |m, &v| m.max(v))
            .sqrt()
    }
}

/// Pointwise cross product a × b.
pub fn cross(a: &VectorField, b: &VectorField) -> VectorField {
    assert_eq!(a.grid(), b.grid(), "grid mismatch");
    let (a0, a1, a2) = (a.c[0].phys(), a.c[1].phys(), a.c[2].phys());
    let (b0, b1, b2) = (b.c[0].phys(), b.c[1].phys(), b.c[2].phys());
    let n = a0.len();
    let mut c0 = vec![0.0; n];
    let mut c1 = vec![0.0; n];
    let mut c2 = vec![0.0; n];
    for i in 0..n {
        c0[i] = a1[i] * b2[i] - a2[i] * b1[i];
        c1[i] = a2[i] * b0[i] - a0[i] * b2[i];
        c2[i] = a0[i] * b1[i] - a1[i] * b0[i];
    }
    let g = a.grid();
    VectorField::new([
        ScalarField::from_phys(g, c0),
        ScalarField::from_phys(g, c1),
        ScalarField::from_phys(g, c2),
    ])
}

/// Pointwise dot product a · b.
pub fn dot(a: &VectorField, b: &VectorField) -> ScalarField {
    assert_eq!(a.grid(), b.grid(), "grid mismatch");
    let (a0, a1, a2) = (a.c[0].phys(), a.c[1].phys(), a.c[2].phys());
    let (b0, b1, b2) = (b.c[0].phys(), b.c[1].phys(), b.c[2].phys());
    let out = (0..a0.len())
        .map(|i| a0[i] * b0[i] + a1[i] * b1[i] + a2[i] * b2[i])
        .collect();
    ScalarField::from_phys(a.grid(), out)
}

/// Vector linear combination `ca·a + cb·b`.
pub fn vlin2(ca: f64, a: &VectorField, cb: f64, b: &VectorField) -> VectorField {
    VectorField::new([
        lin2(ca, &a.c[0], cb, &b.c[0]),
        lin2(ca, &a.c[1], cb, &b.c[1]),
        lin2(ca, &a.c[2], cb, &b.c[2]),
    ])
}

/// Vector linear combination `ca·a + cb·b + cc·c`.
pub fn vlin3(
    ca: f64,
    a: &VectorField,
    cb: f64,
    b: &VectorField,
    cc: f64,
    c: &VectorField,
) -> VectorField {
    VectorField::new([
        lin3(ca, &a.c[0], cb, &b.c[0], cc, &c.c[0]),
        lin3(ca, &a.c[1], cb, &b.c[1], cc, &c.c[1]),
        lin3(ca, &a.c[2], cb, &b.c[2], cc, &c.c[2]),
    ])
}
