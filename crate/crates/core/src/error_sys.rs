//! The coupled error system between a relaxed Euler–Maxwell solution and a
//! limit MHD solution sharing the grid.
//!
//! With background (p⁰,u⁰,S⁰,H⁰) solving the limit system, E⁰ = curl H⁰ −
//! u⁰×H⁰ its Ohm field, and W = (P, U, Φ, F, G) the differences
//! (pᵉ−p⁰, uᵉ−u⁰, Sᵉ−S⁰, Eᵉ−E⁰, Hᵉ−H⁰), subtracting the two systems gives
//!
//! ```text
//!   aᵉ (∂ₜP + (U+u⁰)·∇P) + div U                = f₁
//!   ρᵉ (∂ₜU + ((U+u⁰)·∇)U) + ∇P                 = f₂
//!   bᵉ (∂ₜΦ + (U+u⁰)·∇Φ)                        = f₃
//!   ε ∂ₜF − curl G                               = f₄
//!   ∂ₜG + curl F = 0,  div G = 0
//! ```
//!
//! with coefficients evaluated at the perturbed state and sources f₁…f₄ built
//! from the background, its time derivatives, and W ([`source_terms`]). The
//! system is symmetrizable: [`symmetric_form`] materializes the diagonal
//! symmetrizer Dᵉ = diag(aᵉ, ρᵉI₃, bᵉ, εI₃, I₃) and the symmetric flux
//! blocks Aᵢ. The energy functionals the convergence study monitors come from
//! [`energy_report`], and [`error_residual`] certifies the whole algebra
//! mechanically: numerical trajectory pairs must satisfy the system above to
//! the order of the integrators.

use crate::eos::EosClosure;
use crate::em::EmState;
use crate::field::{self, cross, dot, ScalarField, VectorField};
use crate::mhd::{induced_e, MhdState, MhdTimeDerivs};
use crate::ops;
use crate::solver::SolverError;

/// The difference state W at one instant.
#[derive(Clone, Debug)]
pub struct ErrorState {
    pub t: f64,
    pub p: ScalarField,
    pub u: VectorField,
    pub phi: ScalarField,
    pub f: VectorField,
    pub g: VectorField,
}

/// W from a matched pair of solutions. Fails if the states sit at different
/// times; grids must agree (the harness never mixes resolutions).
pub fn error_state(em: &EmState, bg: &MhdState) -> Result<ErrorState, SolverError> {
    assert_eq!(em.grid(), bg.grid(), "grid mismatch between solutions");
    if (em.t - bg.t).abs() > 1e-9 * em.t.abs().max(1.0) {
        return Err(SolverError::usage(format!(
            "time mismatch between solutions: {} vs {}",
            em.t, bg.t
        )));
    }
    Ok(ErrorState {
        t: em.t,
        p: em.p.sub(&bg.p),
        u: em.u.sub(&bg.u),
        phi: em.s.sub(&bg.s),
        f: em.e.sub(&induced_e(&bg.u, &bg.h)),
        g: em.h.sub(&bg.h),
    })
}

/// Source terms f₁…f₄ of the error system.
pub struct SourceTerms {
    pub f1: ScalarField,
    pub f2: VectorField,
    pub f3: ScalarField,
    pub f4: VectorField,
}

/// Assemble f₁…f₄ from the background state, its continuous time derivatives,
/// and the error state. Every term is quadratic bookkeeping of the
/// subtraction — nothing here is modeled, so trajectory pairs satisfy the
/// error system to integrator accuracy (see [`error_residual`]).
pub fn source_terms(
    w: &ErrorState,
    bg: &MhdState,
    bg_dot: &MhdTimeDerivs,
    eos: &EosClosure,
    epsilon: f64,
) -> Result<SourceTerms, SolverError> {
    if !(epsilon > 0.0) {
        return Err(SolverError::usage(format!(
            "relaxation parameter must be positive (got {epsilon})"
        )));
    }
    // Coefficients at the background and at the perturbed state.
    let a0 = eos.coeff_a_field(&bg.s, &bg.p)?;
    let r0 = eos.density_field(&bg.s, &bg.p)?;
    let b0 = eos.coeff_b_field(&bg.s, &bg.p)?;
    let s_e = bg.s.add(&w.phi);
    let p_e = bg.p.add(&w.p);
    let ae = eos.coeff_a_field(&s_e, &p_e)?;
    let re = eos.density_field(&s_e, &p_e)?;
    let be = eos.coeff_b_field(&s_e, &p_e)?;

    // Material derivatives (∂ₜ + u⁰·∇) of the background.
    let mat_p = bg_dot.dp.add(&ops::advect(&bg.u, &bg.p));
    let mat_u = bg_dot.du.add(&ops::advect_vec(&bg.u, &bg.u));
    let mat_s = bg_dot.ds.add(&ops::advect(&bg.u, &bg.s));

    // f₁ = −(aᵉ−a⁰)(∂ₜ+u⁰·∇)p⁰ − aᵉ U·∇p⁰.
    let da = ae.sub(&a0);
    let f1 = da
        .mul(&mat_p)
        .add(&ae.mul(&ops::advect(&w.u, &bg.p)))
        .scale(-1.0);

    let curl_h0 = ops::curl(&bg.h);
    // Z = F + u⁰×G + U×H⁰ collects the first-order electromagnetic couplings.
    let u0xg = cross(&bg.u, &w.g);
    let uxh0 = cross(&w.u, &bg.h);
    let z = w.f.add(&u0xg).add(&uxh0);
    let uxg = cross(&w.u, &w.g);

    // f₂ = −(ρᵉ−ρ⁰)(∂ₜ+u⁰·∇)u⁰ − ρᵉ (U·∇)u⁰
    //      + curl H⁰×G + Z×H⁰ + Z×G + (U×G)×(H⁰+G).
    let dr = re.sub(&r0);
    let hydro2 = dr
        .mul(&mat_u.c[0])
        .add(&re.mul(&ops::advect(&w.u, &bg.u.c[0])));
    let hydro2 = VectorField::new([
        hydro2,
        dr.mul(&mat_u.c[1])
            .add(&re.mul(&ops::advect(&w.u, &bg.u.c[1]))),
        dr.mul(&mat_u.c[2])
            .add(&re.mul(&ops::advect(&w.u, &bg.u.c[2]))),
    ]);
    let lorentz2 = cross(&curl_h0, &w.g)
        .add(&cross(&z, &bg.h))
        .add(&cross(&z, &w.g))
        .add(&cross(&uxg, &bg.h.add(&w.g)));
    let f2 = lorentz2.sub(&hydro2);

    // f₃ = −(bᵉ−b⁰)(∂ₜ+u⁰·∇)S⁰ − bᵉ U·∇S⁰
    //      + |F+U×G|² + |u⁰×G+U×H⁰|²
    //      + 2(F+U×G)·[curl H⁰ + u⁰×G + U×H⁰] + 2 curl H⁰·(u⁰×G + U×H⁰).
    let db = be.sub(&b0);
    let q = w.f.add(&uxg);
    let m = u0xg.add(&uxh0);
    let joule3 = q
        .norm_sq_field()
        .add(&m.norm_sq_field())
        .add(&dot(&q, &curl_h0.add(&m)).scale(2.0))
        .add(&dot(&curl_h0, &m).scale(2.0));
    let f3 = joule3
        .sub(&db.mul(&mat_s))
        .sub(&be.mul(&ops::advect(&w.u, &bg.s)));

    // f₄ = −Z − U×G − ε curl ∂ₜH⁰ + ε ∂ₜ(u⁰×H⁰).
    let dt_u0xh0 = cross(&bg_dot.du, &bg.h).add(&cross(&bg.u, &bg_dot.dh));
    let f4 = z
        .add(&uxg)
        .add(&ops::curl(&bg_dot.dh).scale(epsilon))
        .scale(-1.0)
        .add(&dt_u0xh0.scale(epsilon));

    Ok(SourceTerms {
        f1: ops::dealias(&f1),
        f2: ops::dealias_vec(&f2),
        f3: ops::dealias(&f3),
        f4: ops::dealias_vec(&f4),
    })
}

/// Sup over interior snapshots of the L² residual of each error-system
/// equation, with ∂ₜW approximated by fourth-order central differences on
/// the snapshot cadence.
#[derive(Debug, Clone, Copy)]
pub struct ResidualReport {
    /// Residual norms for equations 1–4.
    pub eq: [f64; 4],
    /// Number of interior snapshots measured.
    pub interior: usize,
}

/// Certify a trajectory pair against the error system. `em` and `bg` are
/// matched snapshot series on a uniform cadence `dt_snap`; `bg_dot` holds
/// the continuous time derivatives of the background at each snapshot.
pub fn error_residual(
    em: &[EmState],
    bg: &[MhdState],
    bg_dot: &[MhdTimeDerivs],
    eos: &EosClosure,
    epsilon: f64,
    dt_snap: f64,
) -> Result<ResidualReport, SolverError> {
    if em.len() != bg.len() || bg.len() != bg_dot.len() {
        return Err(SolverError::usage(
            "snapshot series have mismatched lengths",
        ));
    }
    if em.len() < 5 {
        return Err(SolverError::usage(
            "need at least five snapshots for fourth-order time differences",
        ));
    }
    if !(dt_snap > 0.0) {
        return Err(SolverError::usage("snapshot spacing must be positive"));
    }
    let w: Vec<ErrorState> = em
        .iter()
        .zip(bg.iter())
        .map(|(e, b)| error_state(e, b))
        .collect::<Result<_, _>>()?;

    // Fourth-order centered derivative of a snapshot-indexed field.
    let ddt = |f: [&ScalarField; 4]| -> ScalarField {
        // (w[j−2] − 8w[j−1] + 8w[j+1] − w[j+2]) / (12 dt)
        let num = field::lin2(1.0, f[0], -8.0, f[1]).add(&field::lin2(8.0, f[2], -1.0, f[3]));
        num.scale(1.0 / (12.0 * dt_snap))
    };
    let vddt = |f: [&VectorField; 4]| -> VectorField {
        VectorField::new([0, 1, 2].map(|i| ddt([&f[0].c[i], &f[1].c[i], &f[2].c[i], &f[3].c[i]])))
    };

    let mut worst = [0.0_f64; 4];
    let mut interior = 0;
    for j in 2..w.len() - 2 {
        let wj = &w[j];
        let quad = |k: usize| [&w[j - 2], &w[j - 1], &w[j + 1], &w[j + 2]][k];
        let p_dot = ddt([&quad(0).p, &quad(1).p, &quad(2).p, &quad(3).p]);
        let u_dot = vddt([&quad(0).u, &quad(1).u, &quad(2).u, &quad(3).u]);
        let phi_dot = ddt([&quad(0).phi, &quad(1).phi, &quad(2).phi, &quad(3).phi]);
        let f_dot = vddt([&quad(0).f, &quad(1).f, &quad(2).f, &quad(3).f]);

        let src = source_terms(wj, &bg[j], &bg_dot[j], eos, epsilon)?;
        let s_e = bg[j].s.add(&wj.phi);
        let p_e = bg[j].p.add(&wj.p);
        let ae = eos.coeff_a_field(&s_e, &p_e)?;
        let re = eos.density_field(&s_e, &p_e)?;
        let be = eos.coeff_b_field(&s_e, &p_e)?;
        let v = wj.u.add(&bg[j].u); // U + u⁰

        let r1 = ae
            .mul(&p_dot.add(&ops::advect(&v, &wj.p)))
            .add(&ops::div(&wj.u))
            .sub(&src.f1);
        let r2 = VectorField::new([0, 1, 2].map(|i| {
            re.mul(&u_dot.c[i].add(&ops::advect(&v, &wj.u.c[i])))
        }))
        .add(&ops::grad(&wj.p))
        .sub(&src.f2);
        let r3 = be
            .mul(&phi_dot.add(&ops::advect(&v, &wj.phi)))
            .sub(&src.f3);
        let r4 = f_dot
            .scale(epsilon)
            .sub(&ops::curl(&wj.g))
            .sub(&src.f4);

        worst[0] = worst[0].max(ops::l2_norm(&r1));
        worst[1] = worst[1].max(ops::l2_norm_vec(&r2));
        worst[2] = worst[2].max(ops::l2_norm(&r3));
        worst[3] = worst[3].max(ops::l2_norm_vec(&r4));
        interior += 1;
    }
    Ok(ResidualReport {
        eq: worst,
        interior,
    })
}

/// The symmetrizer diagonal and symmetric flux matrices, materialized
/// pointwise. Variable order: (P, U₁, U₂, U₃, Φ, F₁, F₂, F₃, G₁, G₂, G₃).
pub struct SymmetricForm {
    /// Dᵉ diagonal at every grid point.
    pub d_diag: Vec<[f64; 11]>,
    /// A₁, A₂, A₃ at every grid point.
    pub a_mats: [Vec<[[f64; 11]; 11]>; 3],
}

impl SymmetricForm {
    /// Smallest symmetrizer entry over all points and variables.
    pub fn min_d(&self) -> f64 {
        self.d_diag
            .iter()
            .flat_map(|d| d.iter().copied())
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest |Aᵢ − Aᵢᵀ| entry — exactly zero by construction.
    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0_f64;
        for mats in &self.a_mats {
            for m in mats {
                for r in 0..11 {
                    for c in 0..11 {
                        worst = worst.max((m[r][c] - m[c][r]).abs());
                    }
                }
            }
        }
        worst
    }
}

/// Materialize Dᵉ and A₁…A₃ for the error system at one instant. Intended
/// for structural diagnostics on planar grids; the storage is 11×11 per
/// point, so full 3-D grids get large.
pub fn symmetric_form(
    w: &ErrorState,
    bg: &MhdState,
    eos: &EosClosure,
    epsilon: f64,
) -> Result<SymmetricForm, SolverError> {
    if !(epsilon > 0.0) {
        return Err(SolverError::usage(format!(
            "relaxation parameter must be positive (got {epsilon})"
        )));
    }
    let s_e = bg.s.add(&w.phi);
    let p_e = bg.p.add(&w.p);
    let ae = eos.coeff_a_field(&s_e, &p_e)?;
    let re = eos.density_field(&s_e, &p_e)?;
    let be = eos.coeff_b_field(&s_e, &p_e)?;
    let v = w.u.add(&bg.u);

    let n = w.p.grid().len();
    let (ap, rp, bp) = (ae.phys(), re.phys(), be.phys());
    let (v0, v1, v2) = (v.c[0].phys(), v.c[1].phys(), v.c[2].phys());

    let mut d_diag = vec![[0.0; 11]; n];
    for (i, d) in d_diag.iter_mut().enumerate() {
        *d = [
            ap[i], rp[i], rp[i], rp[i], bp[i], epsilon, epsilon, epsilon, 1.0, 1.0, 1.0,
        ];
    }

    let vs = [&v0, &v1, &v2];
    let mut a_mats: [Vec<[[f64; 11]; 11]>; 3] =
        [vec![[[0.0; 11]; 11]; n], vec![[[0.0; 11]; 11]; n], vec![[[0.0; 11]; 11]; n]];
    for i in 0..3 {
        let b = ops::B_MATRICES[i];
        for (pt, m) in a_mats[i].iter_mut().enumerate() {
            let vi = vs[i][pt];
            // Hydrodynamic advection block.
            m[0][0] = vi;
            for d in 0..3 {
                m[1 + d][1 + d] = vi;
            }
            m[4][4] = vi;
            // Pressure–velocity coupling eᵢ.
            m[0][1 + i] = 1.0;
            m[1 + i][0] = 1.0;
            // Maxwell block [[0, Bᵢ], [Bᵢᵀ, 0]] on (F, G).
            for r in 0..3 {
                for c in 0..3 {
                    m[5 + r][8 + c] = b[r][c];
                    m[8 + c][5 + r] = b[r][c];
                }
            }
        }
    }

    Ok(SymmetricForm { d_diag, a_mats })
}

/// Sobolev norms of the error state at a set of indices: per index s,
/// the combined norm ‖(P,U,Φ,G)‖ₛ (component norms summed), the electric
/// norm ‖F‖ₛ, the ε-weighted norm [‖(P,U,Φ,G)‖ₛ² + ε‖F‖ₛ²]^{1/2}, and its
/// square Γ.
#[derive(Debug, Clone)]
pub struct EnergyReport {
    pub t: f64,
    pub epsilon: f64,
    pub s: Vec<f64>,
    pub norm_e: Vec<f64>,
    pub f_norm: Vec<f64>,
    pub weighted: Vec<f64>,
    pub gamma: Vec<f64>,
}

pub fn energy_report(
    w: &ErrorState,
    epsilon: f64,
    s_list: &[f64],
) -> Result<EnergyReport, SolverError> {
    if !(epsilon > 0.0) {
        return Err(SolverError::usage(format!(
            "relaxation parameter must be positive (got {epsilon})"
        )));
    }
    for (f, name) in [(&w.p, "P"), (&w.phi, "Φ")] {
        if !f.is_finite() {
            return Err(SolverError::NonFinite { field: name, t: w.t });
        }
    }
    for (f, name) in [(&w.u, "U"), (&w.f, "F"), (&w.g, "G")] {
        if !f.is_finite() {
            return Err(SolverError::NonFinite { field: name, t: w.t });
        }
    }
    let mut norm_e = Vec::with_capacity(s_list.len());
    let mut f_norm = Vec::with_capacity(s_list.len());
    let mut weighted = Vec::with_capacity(s_list.len());
    let mut gamma = Vec::with_capacity(s_list.len());
    for &s in s_list {
        let ne = ops::sobolev_norm(&w.p, s)?
            + ops::sobolev_norm_vec(&w.u, s)?
            + ops::sobolev_norm(&w.phi, s)?
            + ops::sobolev_norm_vec(&w.g, s)?;
        let nf = ops::sobolev_norm_vec(&w.f, s)?;
        let wt = (ne * ne + epsilon * nf * nf).sqrt();
        norm_e.push(ne);
        f_norm.push(nf);
        weighted.push(wt);
        gamma.push(wt * wt);
    }
    Ok(EnergyReport {
        t: w.t,
        epsilon,
        s: s_list.to_vec(),
        norm_e,
        f_norm,
        weighted,
        gamma,
    })
}

/// Defect of the exact cancellation ∫ (curl F·G − F·curl G) = 0 that the
/// energy estimates of the Maxwell block rely on.
pub fn cancellation_check(f: &VectorField, g: &VectorField) -> f64 {
    (dot(&ops::curl(f), g).integral() - dot(f, &ops::curl(g)).integral()).abs()
}

/// Ratio ‖(P,U)‖_σ / (‖(div U, ∇P)‖_{σ−1} + ‖curl U‖_{σ−1} + ‖(P,U)‖_{σ−1}):
/// the div–curl elliptic estimate says this is bounded by a constant
/// depending only on σ. Tuple norms follow the summation convention.
pub fn div_curl_bound_check(
    p: &ScalarField,
    u: &VectorField,
    sigma: f64,
) -> Result<f64, SolverError> {
    if !(sigma >= 1.0) {
        return Err(SolverError::usage(format!(
            "div–curl check needs σ ≥ 1 (got {sigma})"
        )));
    }
    let num = ops::sobolev_norm(p, sigma)? + ops::sobolev_norm_vec(u, sigma)?;
    let den = ops::sobolev_norm(&ops::div(u), sigma - 1.0)?
        + ops::sobolev_norm_vec(&ops::grad(p), sigma - 1.0)?
        + ops::sobolev_norm_vec(&ops::curl(u), sigma - 1.0)?
        + ops::sobolev_norm(p, sigma - 1.0)?
        + ops::sobolev_norm_vec(u, sigma - 1.0)?;
    if den == 0.0 {
        // Zero fields: the estimate is vacuous; report ratio 0.
        return Ok(0.0);
    }
    Ok(num / den)
}
