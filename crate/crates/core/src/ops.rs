//! Spectral calculus on torus fields.
//!
//! Derivatives are exact multiplications by ik in Fourier space, with the
//! ambiguous Nyquist mode's derivative set to zero. Dealiasing enforces the
//! 2/3 rule (modes with any active |kᵢ| > n/3 are zeroed); nonlinear terms
//! formed pointwise in physical space are cleaned up with it before they feed
//! back into time integration. The Leray projector removes the curl-free part
//! mode by mode, and H^s norms are Parseval sums weighted by (1+|k|²)^s.

use num_complex::Complex64;

use crate::field::{ScalarField, VectorField};
use crate::grid::TorusGrid;
use crate::solver::SolverError;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Derivative along one axis: multiplication by i·k_axis (Nyquist zeroed).
pub fn deriv(f: &ScalarField, axis: usize) -> ScalarField {
    assert!(axis < 3, "axis out of range");
    let n = f.grid().shape()[axis];
    f.map_spec(|idx, k, c| {
        let _ = idx;
        // The n/2 bin aliases ±n/2; its true derivative has no consistent
        // sign on the real grid, so it is dropped.
        let nyquist = n > 1 && k[axis] == (n / 2) as f64;
        if nyquist {
            Complex64::default()
        } else {
            I * k[axis] * c
        }
    })
}

/// ∇f = (∂₁f, ∂₂f, ∂₃f).
pub fn grad(f: &ScalarField) -> VectorField {
    VectorField::new([deriv(f, 0), deriv(f, 1), deriv(f, 2)])
}

/// div v = ∂₁v₁ + ∂₂v₂ + ∂₃v₃.
pub fn div(v: &VectorField) -> ScalarField {
    deriv(&v.c[0], 0)
        .add(&deriv(&v.c[1], 1))
        .add(&deriv(&v.c[2], 2))
}

/// curl v = (∂₂v₃−∂₃v₂, ∂₃v₁−∂₁v₃, ∂₁v₂−∂₂v₁).
pub fn curl(v: &VectorField) -> VectorField {
    VectorField::new([
        deriv(&v.c[2], 1).sub(&deriv(&v.c[1], 2)),
        deriv(&v.c[0], 2).sub(&deriv(&v.c[2], 0)),
        deriv(&v.c[1], 0).sub(&deriv(&v.c[0], 1)),
    ])
}

/// Δf = −Σ|k|² f̂.
pub fn laplacian(f: &ScalarField) -> ScalarField {
    f.map_spec(|_, k, c| {
        let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        -k2 * c
    })
}

/// The antisymmetric generator matrices of the Maxwell block: for any
/// constant vector a, `(Σᵢ aᵢ Bᵢ) v = a × v`. Equivalently Σᵢ Bᵢ ∂ᵢ v =
/// −curl v, so the curl is assembled from the transposes.
pub const B_MATRICES: [[[f64; 3]; 3]; 3] = [
    [[0.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, -1.0, 0.0]],
    [[0.0, 0.0, -1.0], [0.0, 0.0, 0.0], [1.0, 0.0, 0.0]],
    [[0.0, 1.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 0.0, 0.0]],
];

/// curl assembled from the generator matrices, Σᵢ Bᵢᵀ ∂ᵢ v; agrees with
/// [`curl`] to roundoff and exists to pin the algebra of the symmetrized
/// Maxwell block to the differential operator it encodes.
pub fn curl_via_b(v: &VectorField) -> VectorField {
    let dv: [VectorField; 3] = [
        v.map_components(|c| deriv(c, 0)),
        v.map_components(|c| deriv(c, 1)),
        v.map_components(|c| deriv(c, 2)),
    ];
    let mut out = [
        ScalarField::zeros(v.grid()),
        ScalarField::zeros(v.grid()),
        ScalarField::zeros(v.grid()),
    ];
    for (i, b) in B_MATRICES.iter().enumerate() {
        for row in 0..3 {
            for col in 0..3 {
                // Transposed entry: Bᵢᵀ[row][col] = Bᵢ[col][row].
                let w = b[col][row];
                if w != 0.0 {
                    out[row] = out[row].add(&dv[i].c[col].scale(w));
                }
            }
        }
    }
    VectorField::new([out[0].clone(), out[1].clone(), out[2].clone()])
}

fn keeps_mode(grid: &TorusGrid, k: [f64; 3]) -> bool {
    let cutoff = grid.dealias_cutoff() as f64;
    k.iter().all(|ki| ki.abs() <= cutoff)
}

/// 2/3-rule dealiasing: zero every mode with any active |kᵢ| > n/3.
pub fn dealias(f: &ScalarField) -> ScalarField {
    let grid = f.grid();
    f.map_spec(|_, k, c| if keeps_mode(&grid, k) { c } else { Complex64::default() })
}

pub fn dealias_vec(v: &VectorField) -> VectorField {
    v.map_components(dealias)
}

/// Spectral restriction onto a coarser grid's dealiased space: zero every
/// mode outside the target's 2/3-rule band, then sample at the target's
/// points (exact, since the masked field is band-limited far below the
/// target's Nyquist). The target edge length must divide the source's.
pub fn restrict_to(f: &ScalarField, target: TorusGrid) -> ScalarField {
    let src = f.grid();
    assert_eq!(
        src.active_dims(),
        target.active_dims(),
        "restriction requires matching active dimensions"
    );
    assert!(
        target.n() <= src.n() && src.n() % target.n() == 0,
        "restriction requires the target edge to divide the source edge"
    );
    let cutoff = target.dealias_cutoff() as f64;
    let masked = f.map_spec(|_, k, c| {
        if k.iter().all(|ki| ki.abs() <= cutoff) {
            c
        } else {
            Complex64::default()
        }
    });
    let phys = masked.phys();
    let [sn0, sn1, sn2] = src.shape();
    let [tn0, tn1, tn2] = target.shape();
    let (r0, r1, r2) = (sn0 / tn0, sn1 / tn1, sn2 / tn2);
    let mut out = Vec::with_capacity(target.len());
    for i0 in 0..tn0 {
        for i1 in 0..tn1 {
            for i2 in 0..tn2 {
                out.push(phys[(i0 * r0 * sn1 + i1 * r1) * sn2 + i2 * r2]);
            }
        }
    }
    ScalarField::from_phys(target, out)
}

pub fn restrict_vec(v: &VectorField, target: TorusGrid) -> VectorField {
    VectorField::new([
        restrict_to(&v.c[0], target),
        restrict_to(&v.c[1], target),
        restrict_to(&v.c[2], target),
    ])
}

/// Leray projection onto divergence-free fields: v̂ ↦ v̂ − k (k·v̂)/|k|²
/// for every k ≠ 0; the mean is untouched.
pub fn leray_project(v: &VectorField) -> VectorField {
    let grid = v.grid();
    let (s0, s1, s2) = (v.c[0].spec(), v.c[1].spec(), v.c[2].spec());
    let mut o0 = s0.to_vec();
    let mut o1 = s1.to_vec();
    let mut o2 = s2.to_vec();
    grid.for_each_mode(|idx, k| {
        let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        if k2 == 0.0 {
            return;
        }
        let kdv = k[0] * o0[idx] + k[1] * o1[idx] + k[2] * o2[idx];
        let f = kdv / k2;
        o0[idx] -= k[0] * f;
        o1[idx] -= k[1] * f;
        o2[idx] -= k[2] * f;
    });
    let _ = (s0, s1, s2);
    VectorField::new([
        ScalarField::from_spec(grid, o0),
        ScalarField::from_spec(grid, o1),
        ScalarField::from_spec(grid, o2),
    ])
}

/// Advection u·∇f.
pub fn advect(u: &VectorField, f: &ScalarField) -> ScalarField {
    crate::field::dot(u, &grad(f))
}

/// Componentwise advection (u·∇)v.
pub fn advect_vec(u: &VectorField, v: &VectorField) -> VectorField {
    v.map_components(|c| advect(u, c))
}

/// H^s norm: ‖f‖ₛ = [ (2π)³ Σ_k (1+|k|²)^s |f̂_k|² ]^{1/2}. `s` may be any
/// non-negative real; s = 0 is the L² norm.
pub fn sobolev_norm(f: &ScalarField, s: f64) -> Result<f64, SolverError> {
    if !(s >= 0.0) {
        return Err(SolverError::usage(format!(
            "Sobolev index must be non-negative (got {s})"
        )));
    }
    let spec = f.spec();
    let mut sum = 0.0;
    f.grid().for_each_mode(|idx, k| {
        let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        let w = if s == 0.0 { 1.0 } else { (1.0 + k2).powf(s) };
        sum += w * spec[idx].norm_sqr();
    });
    Ok((crate::TORUS_VOLUME * sum).sqrt())
}

/// H^s norm of a vector field: component norms combined in quadrature,
/// ‖v‖ₛ = [Σᵢ ‖vᵢ‖ₛ²]^{1/2}.
pub fn sobolev_norm_vec(v: &VectorField, s: f64) -> Result<f64, SolverError> {
    let mut sq = 0.0;
    for c in &v.c {
        let n = sobolev_norm(c, s)?;
        sq += n * n;
    }
    Ok(sq.sqrt())
}

/// L² norm shorthand.
pub fn l2_norm(f: &ScalarField) -> f64 {
    sobolev_norm(f, 0.0).expect("s = 0 is always valid")
}

pub fn l2_norm_vec(v: &VectorField) -> f64 {
    sobolev_norm_vec(v, 0.0).expect("s = 0 is always valid")
}
