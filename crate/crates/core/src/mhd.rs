//! Compressible non-isentropic MHD with magnetic diffusion — the relaxation
//! limit of the Euler–Maxwell system.
//!
//! ```text
//!   a(S,p) (∂ₜp + u·∇p) + div u = 0
//!   ρ(S,p) (∂ₜu + u·∇u) + ∇p   = curl H × H
//!   b(S,p) (∂ₜS + u·∇S)        = |curl H|²
//!   ∂ₜH − curl(u×H) = −curl curl H,   div H = 0
//! ```
//!
//! The electric field is slaved by Ohm's law, E = curl H − u×H; it is not a
//! state variable but [`induced_e`] reconstructs it for comparisons against
//! the relaxed system. Time stepping is Strang splitting: the stiffest part,
//! the linear diffusion −curl curl H = ΔH on solenoidal fields, is advanced
//! exactly in Fourier space by [`magnetic_diffusion_exact`], and transport
//! goes through the same SSP-RK3 used on the Euler–Maxwell side.

use crate::eos::EosClosure;
use crate::field::{self, cross, ScalarField, VectorField};
use crate::grid::TorusGrid;
use crate::ops;
use crate::solver::{check_positive, MetricsSink, SolverError, StepMetrics};

#[derive(Clone, Debug)]
pub struct MhdState {
    pub t: f64,
    pub p: ScalarField,
    pub u: VectorField,
    pub s: ScalarField,
    pub h: VectorField,
}

impl MhdState {
    pub fn grid(&self) -> TorusGrid {
        self.p.grid()
    }

    fn check_finite(&self) -> Result<(), SolverError> {
        for (f, name) in [(&self.u, "u"), (&self.h, "H")] {
            if !f.is_finite() {
                return Err(SolverError::NonFinite { field: name, t: self.t });
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug)]
pub struct MhdRunConfig {
    pub dt: f64,
    pub cfl: f64,
    pub eos: EosClosure,
}

pub struct MhdForcingFields {
    pub q_p: ScalarField,
    pub q_u: VectorField,
    pub q_s: ScalarField,
    pub q_h: VectorField,
}

pub trait MhdForcing {
    fn eval(&self, grid: TorusGrid, t: f64) -> MhdForcingFields;
}

/// Transport tendencies (diffusion excluded — it is advanced exactly).
pub struct MhdRhs {
    pub dp: ScalarField,
    pub du: VectorField,
    pub ds: ScalarField,
    pub dh: VectorField,
}

/// Full time derivatives of the state, diffusion included: what the
/// continuous equations assign to ∂ₜ(p, u, S, H) at this instant. Used for
/// background source terms that need ∂ₜ of limit-system fields.
#[derive(Clone)]
pub struct MhdTimeDerivs {
    pub dp: ScalarField,
    pub du: VectorField,
    pub ds: ScalarField,
    pub dh: VectorField,
}

/// Ohm's law electric field E = curl H − u×H (dealiased like every other
/// quadratic product).
pub fn induced_e(u: &VectorField, h: &VectorField) -> VectorField {
    ops::dealias_vec(&ops::curl(h).sub(&cross(u, h)))
}

/// Fast magnetosonic bound max(|u| + √(c² + |H|²/ρ)).
pub fn mhd_wave_speed(state: &MhdState, eos: &EosClosure) -> Result<f64, SolverError> {
    let sp = state.s.phys();
    let pp = state.p.phys();
    let hsq = state.h.norm_sq_field();
    let hp = hsq.phys();
    let up = state.u.norm_sq_field();
    let un = up.phys();
    let mut worst = 0.0_f64;
    for i in 0..sp.len() {
        let rho = eos.density(sp[i], pp[i])?;
        let c2 = eos.gamma * pp[i] / rho;
        worst = worst.max(un[i].sqrt() + (c2 + hp[i] / rho).sqrt());
    }
    Ok(worst)
}

/// Largest stable dt at unit Courant number (transport only; diffusion is
/// integrated exactly and imposes no constraint).
pub fn mhd_dt_limit(state: &MhdState, eos: &EosClosure) -> Result<f64, SolverError> {
    Ok(state.grid().dx() / mhd_wave_speed(state, eos)?)
}

/// Exact diffusion flow over `dt`: every Fourier mode decays by e^{−|k|² dt}.
/// The mean (k = 0) is preserved; the map is a contraction in every H^s norm.
pub fn magnetic_diffusion_exact(h: &VectorField, dt: f64) -> VectorField {
    h.map_components(|c| {
        c.map_spec(|_, k, v| {
            let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
            ((-k2 * dt).exp()) * v
        })
    })
}

pub fn mhd_transport_rhs(
    state: &MhdState,
    eos: &EosClosure,
    forcing: Option<&MhdForcingFields>,
) -> Result<MhdRhs, SolverError> {
    transport_rhs(&state.p, &state.u, &state.s, &state.h, eos, forcing)
}

fn transport_rhs(
    p: &ScalarField,
    u: &VectorField,
    s: &ScalarField,
    h: &VectorField,
    eos: &EosClosure,
    forcing: Option<&MhdForcingFields>,
) -> Result<MhdRhs, SolverError> {
    let a = eos.coeff_a_field(s, p)?;
    let rho = eos.density_field(s, p)?;
    let b = eos.coeff_b_field(s, p)?;

    let j = ops::curl(h); // current density; also the Joule source |j|²

    let mut dp = ops::advect(u, p)
        .scale(-1.0)
        .sub(&ops::div(u).zip(&a, |d, av| d / av));

    let grad_p = ops::grad(p);
    let lorentz = cross(&j, h);
    let adv_u = ops::advect_vec(u, u);
    let mut du = VectorField::new([0, 1, 2].map(|i| {
        adv_u.c[i]
            .scale(-1.0)
            .add(&lorentz.c[i].sub(&grad_p.c[i]).zip(&rho, |v, r| v / r))
    }));

    let mut ds = j
        .norm_sq_field()
        .zip(&b, |jj, bv| jj / bv)
        .sub(&ops::advect(u, s));

    // Ideal induction; diffusion is handled by the exact spectral flow.
    let mut dh = ops::curl(&ops::dealias_vec(&cross(u, h)));

    if let Some(q) = forcing {
        dp = dp.add(&q.q_p);
        du = du.add(&q.q_u);
        ds = ds.add(&q.q_s);
        dh = dh.add(&q.q_h);
    }

    Ok(MhdRhs {
        dp: ops::dealias(&dp),
        du: ops::dealias_vec(&du),
        ds: ops::dealias(&ds),
        dh: ops::dealias_vec(&dh),
    })
}

/// Continuous-equation time derivatives at the given state (transport plus
/// diffusion), for source terms that differentiate background fields in time.
pub fn mhd_time_derivs(state: &MhdState, eos: &EosClosure) -> Result<MhdTimeDerivs, SolverError> {
    let rhs = mhd_transport_rhs(state, eos, None)?;
    let diffusion = ops::curl(&ops::curl(&state.h)).scale(-1.0);
    Ok(MhdTimeDerivs {
        dp: rhs.dp,
        du: rhs.du,
        ds: rhs.ds,
        dh: rhs.dh.add(&diffusion),
    })
}

struct Tr {
    p: ScalarField,
    u: VectorField,
    s: ScalarField,
    h: VectorField,
}

fn tr_lin2(ca: f64, a: &Tr, cb: f64, b: &Tr) -> Tr {
    Tr {
        p: field::lin2(ca, &a.p, cb, &b.p),
        u: field::vlin2(ca, &a.u, cb, &b.u),
        s: field::lin2(ca, &a.s, cb, &b.s),
        h: field::vlin2(ca, &a.h, cb, &b.h),
    }
}

fn tr_lin3(ca: f64, a: &Tr, cb: f64, b: &Tr, cc: f64, c: &Tr) -> Tr {
    Tr {
        p: field::lin3(ca, &a.p, cb, &b.p, cc, &c.p),
        u: field::vlin3(ca, &a.u, cb, &b.u, cc, &c.u),
        s: field::lin3(ca, &a.s, cb, &b.s, cc, &c.s),
        h: field::vlin3(ca, &a.h, cb, &b.h, cc, &c.h),
    }
}

/// Advance one step of size `cfg.dt`: exact half-diffusion, SSP-RK3
/// transport, exact half-diffusion, with the solenoidal projection re-imposed.
pub fn mhd_step(
    state: &MhdState,
    cfg: &MhdRunConfig,
    forcing: Option<&dyn MhdForcing>,
    sink: &mut dyn MetricsSink,
) -> Result<MhdState, SolverError> {
    let grid = state.grid();
    let eos = &cfg.eos;
    let dt = cfg.dt;

    check_positive(&state.p, "p", eos.p_floor, state.t)?;
    check_positive(&state.s, "S", eos.s_floor, state.t)?;
    state.check_finite()?;

    let speed = mhd_wave_speed(state, eos)?;
    let limit = cfg.cfl * grid.dx() / speed;
    if dt > limit * (1.0 + 1e-9) {
        return Err(SolverError::CflViolation {
            dt,
            limit,
            t: state.t,
        });
    }

    let f0 = forcing.map(|f| f.eval(grid, state.t));
    let f1 = forcing.map(|f| f.eval(grid, state.t + dt));
    let fh = forcing.map(|f| f.eval(grid, state.t + 0.5 * dt));

    let w0 = Tr {
        p: state.p.clone(),
        u: state.u.clone(),
        s: state.s.clone(),
        h: magnetic_diffusion_exact(&state.h, 0.5 * dt),
    };

    let rhs = |w: &Tr, f: Option<&MhdForcingFields>| -> Result<Tr, SolverError> {
        let r = transport_rhs(&w.p, &w.u, &w.s, &w.h, eos, f)?;
        Ok(Tr {
            p: r.dp,
            u: r.du,
            s: r.ds,
            h: r.dh,
        })
    };

    let k1 = rhs(&w0, f0.as_ref())?;
    let w1 = tr_lin2(1.0, &w0, dt, &k1);
    let k2 = rhs(&w1, f1.as_ref())?;
    let w2 = tr_lin3(0.75, &w0, 0.25, &w1, 0.25 * dt, &k2);
    let k3 = rhs(&w2, fh.as_ref())?;
    let w3 = tr_lin3(1.0 / 3.0, &w0, 2.0 / 3.0, &w2, 2.0 * dt / 3.0, &k3);

    let h_new = ops::leray_project(&magnetic_diffusion_exact(&w3.h, 0.5 * dt));

    let t_new = state.t + dt;
    let min_p = check_positive(&w3.p, "p", eos.p_floor, t_new)?;
    let min_s = check_positive(&w3.s, "S", eos.s_floor, t_new)?;
    let out = MhdState {
        t: t_new,
        p: w3.p,
        u: w3.u,
        s: w3.s,
        h: h_new,
    };
    out.check_finite()?;

    sink.record(StepMetrics {
        t: t_new,
        dt,
        min_p,
        min_s,
        div_h: ops::div(&out.h).max_abs(),
        max_speed: speed,
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::NullSink;

    fn grid() -> TorusGrid {
        TorusGrid::new(16, 2).unwrap()
    }

    #[test]
    fn rest_state_without_field_is_steady() {
        let g = grid();
        let mut state = MhdState {
            t: 0.0,
            p: ScalarField::constant(g, 1.0),
            u: VectorField::zeros(g),
            s: ScalarField::constant(g, 1.0),
            h: VectorField::zeros(g),
        };
        let cfg = MhdRunConfig {
            dt: 5e-3,
            cfl: 0.4,
            eos: EosClosure::monatomic(),
        };
        for _ in 0..20 {
            state = mhd_step(&state, &cfg, None, &mut NullSink).unwrap();
        }
        assert!(state.u.max_abs() < 1e-14);
        assert!(state.p.sub(&ScalarField::constant(g, 1.0)).max_abs() < 1e-14);
        assert!(state.s.sub(&ScalarField::constant(g, 1.0)).max_abs() < 1e-14);
    }

    #[test]
    fn single_mode_lorentz_force() {
        // H = (0,0,sin x₁), u = 0, uniform p and S:
        // curl H × H = (−sin x₁ cos x₁, 0, 0) and du = that over ρ.
        let g = grid();
        let eos = EosClosure::monatomic();
        let state = MhdState {
            t: 0.0,
            p: ScalarField::constant(g, 1.0),
            u: VectorField::zeros(g),
            s: ScalarField::constant(g, 0.5),
            h: VectorField::from_fns(g, |[x, _, _]| [0.0, 0.0, x.sin()]),
        };
        let rhs = mhd_transport_rhs(&state, &eos, None).unwrap();
        let rho = eos.density(0.5, 1.0).unwrap();
        let expect = ScalarField::from_fn(g, |[x, _, _]| -x.sin() * x.cos() / rho);
        assert!(rhs.du.c[0].sub(&expect).max_abs() < 1e-13);
        assert!(rhs.du.c[1].max_abs() < 1e-14);
        assert!(rhs.du.c[2].max_abs() < 1e-14);
        assert!(rhs.dp.max_abs() < 1e-14);
        // Joule heating |curl H|² = cos² x₁ over b.
        let b = eos.coeff_b(0.5, 1.0).unwrap();
        let expect_ds = ScalarField::from_fn(g, |[x, _, _]| x.cos() * x.cos() / b);
        assert!(rhs.ds.sub(&expect_ds).max_abs() < 1e-13);
    }

    #[test]
    fn exact_diffusion_matches_heat_kernel() {
        let g = grid();
        // Constants are untouched.
        let c = VectorField::constant(g, [0.3, -0.4, 1.0]);
        let d = magnetic_diffusion_exact(&c, 0.7);
        assert!(d.sub(&c).max_abs() < 1e-15);
        // sin(x₁) decays by e^{−dt}; sin(2x₁+x₂)-type modes by e^{−5dt}.
        let h = VectorField::from_fns(g, |[x, y, _]| [0.0, 0.0, x.sin() + (2.0 * x + y).sin()]);
        let dt = 0.3;
        let out = magnetic_diffusion_exact(&h, dt);
        let expect = VectorField::from_fns(g, |[x, y, _]| {
            [
                0.0,
                0.0,
                (-dt).exp() * x.sin() + (-5.0 * dt).exp() * (2.0 * x + y).sin(),
            ]
        });
        assert!(out.sub(&expect).max_abs() < 1e-14);
    }

    #[test]
    fn exact_diffusion_agrees_with_explicit_euler_at_second_order() {
        // One exact flow step vs one forward-Euler step H + dt·ΔH: the gap
        // shrinks at O(dt²) as dt → 0.
        let g = grid();
        let h = VectorField::from_fns(g, |[x, y, _]| [y.sin(), x.sin(), (x + y).cos()]);
        let gap = |dt: f64| {
            let exact = magnetic_diffusion_exact(&h, dt);
            let euler = h.map_components(|c| {
                let lap = ops::laplacian(c);
                field::lin2(1.0, c, dt, &lap)
            });
            exact.sub(&euler).max_abs()
        };
        let (g1, g2) = (gap(1e-2), gap(5e-3));
        let order = (g1 / g2).log2();
        assert!(
            (order - 2.0).abs() < 0.05,
            "expected O(dt²) agreement, observed order {order:.3}"
        );
    }

    #[test]
    fn diffusion_is_a_contraction_in_sobolev_norms() {
        let g = grid();
        let h = VectorField::from_fns(g, |[x, y, _]| [0.2 * (x + y).sin(), x.cos(), y.sin()]);
        for s in [0.0, 1.0, 2.0] {
            let before = ops::sobolev_norm_vec(&h, s).unwrap();
            let after = ops::sobolev_norm_vec(&magnetic_diffusion_exact(&h, 0.2), s).unwrap();
            assert!(after <= before + 1e-13, "s={s}: {after} > {before}");
        }
    }

    #[test]
    fn magnetostatic_balance_has_no_residual_acceleration() {
        // ∇p = curl H × H with H = (0,0,sin x₁), p = p̄ + cos(2x₁)/4:
        // the momentum tendency vanishes to discretization accuracy.
        let g = grid();
        let eos = EosClosure::monatomic();
        let state = MhdState {
            t: 0.0,
            p: ScalarField::from_fn(g, |[x, _, _]| 1.0 + 0.25 * (2.0 * x).cos()),
            u: VectorField::zeros(g),
            s: ScalarField::constant(g, 1.0),
            h: VectorField::from_fns(g, |[x, _, _]| [0.0, 0.0, x.sin()]),
        };
        let rhs = mhd_transport_rhs(&state, &eos, None).unwrap();
        assert!(
            rhs.du.max_abs() < 1e-13,
            "magnetostatic residual: {:.3e}",
            rhs.du.max_abs()
        );
    }

    #[test]
    fn induced_field_closed_forms() {
        let g = grid();
        // u = 0, constant H → E = 0.
        let e0 = induced_e(&VectorField::zeros(g), &VectorField::constant(g, [0.0, 0.0, 2.0]));
        assert!(e0.max_abs() < 1e-15);
        // u = 0, H = (0,0,sin x₁) → E = curl H = (0, −cos x₁·… )
        let h = VectorField::from_fns(g, |[x, _, _]| [0.0, 0.0, x.sin()]);
        let e = induced_e(&VectorField::zeros(g), &h);
        let expect = VectorField::from_fns(g, |[x, _, _]| [0.0, -x.cos(), 0.0]);
        assert!(e.sub(&expect).max_abs() < 1e-13);
    }

    #[test]
    fn solenoidal_constraint_is_preserved() {
        let g = grid();
        let eos = EosClosure::monatomic();
        let mut state = MhdState {
            t: 0.0,
            p: ScalarField::from_fn(g, |[x, y, _]| 1.0 + 0.1 * x.sin() * y.cos()),
            u: VectorField::from_fns(g, |[x, y, _]| [0.1 * y.sin(), 0.1 * x.sin(), 0.0]),
            s: ScalarField::from_fn(g, |[x, _, _]| 1.0 + 0.1 * x.cos()),
            h: ops::leray_project(&VectorField::from_fns(g, |[x, y, _]| {
                [y.cos(), x.cos(), (x + y).sin()]
            }))
            .add(&VectorField::constant(g, [0.0, 0.0, 1.0])),
        };
        let dt = 0.25 * mhd_dt_limit(&state, &eos).unwrap();
        let cfg = MhdRunConfig { dt, cfl: 0.4, eos };
        for _ in 0..30 {
            state = mhd_step(&state, &cfg, None, &mut NullSink).unwrap();
            assert!(ops::div(&state.h).max_abs() < 1e-11);
        }
    }
}
