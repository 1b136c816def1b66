//! Non-isentropic compressible Euler–Maxwell integrator.
//!
//! State (p, u, S, E, H) on the torus, with unit conductivity and magnetic
//! permeability and relaxation parameter ε > 0:
//!
//! ```text
//!   a(S,p) (∂ₜp + u·∇p) + div u = 0
//!   ρ(S,p) (∂ₜu + u·∇u) + ∇p   = (E + u×H) × H
//!   b(S,p) (∂ₜS + u·∇S)        = |E + u×H|²
//!   ε ∂ₜE − curl H + (E + u×H) = 0
//!   ∂ₜH + curl E = 0,   div H = 0
//! ```
//!
//! Time stepping is Strang splitting around the stiff relaxation: a half-step
//! exact exponential update of E toward its frozen-coefficient equilibrium
//! E* = curl H − u×H, an SSP-RK3 transport step of (p, u, S, H) with E
//! frozen, then the second relaxation half-step with the updated coefficients.
//! The relaxation update is L-stable, so dt is independent of ε; what limits
//! dt instead is that the explicitly advanced ∂ₜH = −curl E behaves like
//! forward-Euler magnetic diffusion once E is slaved to curl H − u×H, giving
//! the step bound dt ≤ 2/max|k|² over retained modes alongside the acoustic
//! CFL bound. Both enter [`em_dt_limit`].

use crate::eos::EosClosure;
use crate::field::{self, cross, ScalarField, VectorField};
use crate::grid::TorusGrid;
use crate::ops;
use crate::solver::{check_positive, MetricsSink, SolverError, StepMetrics};

/// Full Euler–Maxwell state at one instant.
#[derive(Clone, Debug)]
pub struct EmState {
    pub t: f64,
    pub p: ScalarField,
    pub u: VectorField,
    pub s: ScalarField,
    pub e: VectorField,
    pub h: VectorField,
}

impl EmState {
    pub fn grid(&self) -> TorusGrid {
        self.p.grid()
    }

    fn check_finite(&self) -> Result<(), SolverError> {
        for (f, name) in [(&self.u, "u"), (&self.e, "E"), (&self.h, "H")] {
            if !f.is_finite() {
                return Err(SolverError::NonFinite { field: name, t: self.t });
            }
        }
        Ok(())
    }
}

/// Per-run integrator parameters.
#[derive(Clone, Copy, Debug)]
pub struct EmRunConfig {
    pub epsilon: f64,
    pub dt: f64,
    pub cfl: f64,
    pub eos: EosClosure,
}

/// External forcing sampled at one stage time.
pub struct EmForcingFields {
    pub q_p: ScalarField,
    pub q_u: VectorField,
    pub q_s: ScalarField,
    pub q_e: VectorField,
    pub q_h: VectorField,
}

/// Time-dependent forcing; the integrator samples it at the Strang anchors
/// and the Runge–Kutta stage times.
pub trait EmForcing {
    fn eval(&self, grid: TorusGrid, t: f64) -> EmForcingFields;
}

/// Time derivatives of the transport variables (E held frozen).
pub struct EmRhs {
    pub dp: ScalarField,
    pub du: VectorField,
    pub ds: ScalarField,
    pub dh: VectorField,
}

/// Signal speeds: `transport` bounds the hydrodynamic characteristics
/// (|u| + sound speed), `light` is the Maxwell propagation scale 1/√ε.
#[derive(Clone, Copy, Debug)]
pub struct EmWaveSpeeds {
    pub transport: f64,
    pub light: f64,
}

pub fn em_wave_speed(
    state: &EmState,
    eos: &EosClosure,
    epsilon: f64,
) -> Result<EmWaveSpeeds, SolverError> {
    if !(epsilon > 0.0) {
        return Err(SolverError::usage(format!(
            "relaxation parameter must be positive (got {epsilon})"
        )));
    }
    let sp = state.s.phys();
    let pp = state.p.phys();
    let mut cs_max = 0.0_f64;
    for (&sv, &pv) in sp.iter().zip(pp.iter()) {
        cs_max = cs_max.max(eos.sound_speed(sv, pv)?);
    }
    let _ = (sp, pp);
    let transport = state.u.max_norm() + cs_max;
    Ok(EmWaveSpeeds {
        transport,
        light: epsilon.sqrt().recip(),
    })
}

/// Largest stable dt at unit Courant number: the acoustic bound dx/speed
/// and the induction-damping bound 2/max|k|² over retained modes.
pub fn em_dt_limit(state: &EmState, eos: &EosClosure, epsilon: f64) -> Result<f64, SolverError> {
    let speeds = em_wave_speed(state, eos, epsilon)?;
    let grid = state.grid();
    let acoustic = grid.dx() / speeds.transport;
    let damping = 2.0 / grid.kmax_sq_retained();
    Ok(acoustic.min(damping))
}

/// Exact exponential relaxation of E over `dt` with (u, H) frozen:
/// E ← E* + e^{−dt/ε} (E − E*), E* = curl H − u×H (+ forcing).
pub fn stiff_e_update(
    state: &EmState,
    dt: f64,
    epsilon: f64,
    q_e: Option<&VectorField>,
) -> Result<EmState, SolverError> {
    if !(epsilon > 0.0) {
        return Err(SolverError::usage(format!(
            "relaxation parameter must be positive (got {epsilon})"
        )));
    }
    let e = relax_e(&state.e, &state.u, &state.h, dt, epsilon, q_e);
    Ok(EmState { e, ..state.clone() })
}

fn relax_e(
    e: &VectorField,
    u: &VectorField,
    h: &VectorField,
    dt: f64,
    epsilon: f64,
    q_e: Option<&VectorField>,
) -> VectorField {
    let mut target = ops::curl(h).sub(&cross(u, h));
    if let Some(q) = q_e {
        target = target.add(q);
    }
    let target = ops::dealias_vec(&target);
    let m = (-dt / epsilon).exp();
    field::vlin2(m, e, 1.0 - m, &target)
}

/// Transport right-hand side with the state's own E frozen.
pub fn em_transport_rhs(
    state: &EmState,
    eos: &EosClosure,
    forcing: Option<&EmForcingFields>,
) -> Result<EmRhs, SolverError> {
    transport_rhs(
        &state.p, &state.u, &state.s, &state.h, &state.e, eos, forcing,
    )
}

#[allow(clippy::too_many_arguments)]
fn transport_rhs(
    p: &ScalarField,
    u: &VectorField,
    s: &ScalarField,
    h: &VectorField,
    e_frozen: &VectorField,
    eos: &EosClosure,
    forcing: Option<&EmForcingFields>,
) -> Result<EmRhs, SolverError> {
    let a = eos.coeff_a_field(s, p)?;
    let rho = eos.density_field(s, p)?;
    let b = eos.coeff_b_field(s, p)?;

    // ζ = E + u×H drives both the Lorentz force and the Joule heating.
    let zeta = e_frozen.add(&cross(u, h));

    let mut dp = ops::advect(u, p)
        .scale(-1.0)
        .sub(&ops::div(u).zip(&a, |d, av| d / av));

    let grad_p = ops::grad(p);
    let lorentz = cross(&zeta, h);
    let adv_u = ops::advect_vec(u, u);
    let mut du = VectorField::new([0, 1, 2].map(|i| {
        adv_u.c[i]
            .scale(-1.0)
            .add(&lorentz.c[i].sub(&grad_p.c[i]).zip(&rho, |v, r| v / r))
    }));

    let joule = zeta.norm_sq_field();
    let mut ds = joule.zip(&b, |j, bv| j / bv).sub(&ops::advect(u, s));

    let mut dh = ops::curl(e_frozen).scale(-1.0);

    if let Some(q) = forcing {
        dp = dp.add(&q.q_p);
        du = du.add(&q.q_u);
        ds = ds.add(&q.q_s);
        dh = dh.add(&q.q_h);
    }

    Ok(EmRhs {
        dp: ops::dealias(&dp),
        du: ops::dealias_vec(&du),
        ds: ops::dealias(&ds),
        dh: ops::dealias_vec(&dh),
    })
}

/// Transport bundle for the Runge–Kutta stages.
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

fn rhs_as_tr(r: EmRhs) -> Tr {
    Tr {
        p: r.dp,
        u: r.du,
        s: r.ds,
        h: r.dh,
    }
}

/// Advance one step of size `cfg.dt`. Fails (without stepping) if monitors
/// trip or `dt` exceeds `cfl` times the stability limit of the entry state.
pub fn em_step(
    state: &EmState,
    cfg: &EmRunConfig,
    forcing: Option<&dyn EmForcing>,
    sink: &mut dyn MetricsSink,
) -> Result<EmState, SolverError> {
    let grid = state.grid();
    let eos = &cfg.eos;
    let dt = cfg.dt;

    check_positive(&state.p, "p", eos.p_floor, state.t)?;
    check_positive(&state.s, "S", eos.s_floor, state.t)?;
    state.check_finite()?;

    let speeds = em_wave_speed(state, eos, cfg.epsilon)?;
    let limit = cfg.cfl * em_dt_limit(state, eos, cfg.epsilon)?;
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

    // Leading relaxation half-step with entry-state coefficients.
    let e1 = relax_e(
        &state.e,
        &state.u,
        &state.h,
        0.5 * dt,
        cfg.epsilon,
        f0.as_ref().map(|f| &f.q_e),
    );

    // Shu–Osher SSP-RK3 on the transport variables, E frozen at e1.
    let w0 = Tr {
        p: state.p.clone(),
        u: state.u.clone(),
        s: state.s.clone(),
        h: state.h.clone(),
    };
    let k1 = rhs_as_tr(transport_rhs(&w0.p, &w0.u, &w0.s, &w0.h, &e1, eos, f0.as_ref())?);
    let w1 = tr_lin2(1.0, &w0, dt, &k1);
    let k2 = rhs_as_tr(transport_rhs(&w1.p, &w1.u, &w1.s, &w1.h, &e1, eos, f1.as_ref())?);
    let w2 = tr_lin3(0.75, &w0, 0.25, &w1, 0.25 * dt, &k2);
    let k3 = rhs_as_tr(transport_rhs(&w2.p, &w2.u, &w2.s, &w2.h, &e1, eos, fh.as_ref())?);
    let w3 = tr_lin3(1.0 / 3.0, &w0, 2.0 / 3.0, &w2, 2.0 * dt / 3.0, &k3);

    // Re-impose the solenoidal constraint, then the trailing relaxation
    // half-step with exit-state coefficients.
    let h_new = ops::leray_project(&w3.h);
    let e2 = relax_e(
        &e1,
        &w3.u,
        &h_new,
        0.5 * dt,
        cfg.epsilon,
        f1.as_ref().map(|f| &f.q_e),
    );

    let t_new = state.t + dt;
    let min_p = check_positive(&w3.p, "p", eos.p_floor, t_new)?;
    let min_s = check_positive(&w3.s, "S", eos.s_floor, t_new)?;
    let out = EmState {
        t: t_new,
        p: w3.p,
        u: w3.u,
        s: w3.s,
        e: e2,
        h: h_new,
    };
    out.check_finite()?;

    sink.record(StepMetrics {
        t: t_new,
        dt,
        min_p,
        min_s,
        div_h: ops::div(&out.h).max_abs(),
        max_speed: speeds.transport,
    });
    Ok(out)
}
