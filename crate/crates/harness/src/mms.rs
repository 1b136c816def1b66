//! Manufactured-solution verification of both integrators.
//!
//! A smooth band-limited state family W*(x, t) is substituted into each
//! system; the defect becomes the forcing, so W* is an exact solution of the
//! forced equations. The defect is assembled on a fine reference grid and
//! spectrally restricted to the run grid: the forcing therefore carries the
//! continuous equations' content, not the run grid's own truncation of it,
//! and coarse grids are left holding genuine spatial error. Temporal order
//! is measured by Richardson differences of final states under dt-halving
//! (differencing cancels the fixed spatial floor at a given resolution); the
//! spatial floor itself is exposed by comparing against the analytic truth
//! on two grids at one tiny dt.

use crate::checks::CheckItem;
use crate::config::Config;
use crate::csvio::CsvBuilder;
use crate::HarnessError;
use dll_core::em::em_step;
use dll_core::field::cross;
use dll_core::mhd::mhd_step;
use dll_core::{
    ops, EmForcing, EmForcingFields, EmRunConfig, EmState, EosClosure, MhdForcing,
    MhdForcingFields, MhdRunConfig, MhdState, NullSink, ScalarField, TorusGrid, VectorField,
};
use std::f64::consts::FRAC_PI_2;

/// Pinned verification protocol (deliberately not configurable).
const T_FINAL: f64 = 0.25;
const EPSILON: f64 = 5e-2;
const TEMPORAL_N: usize = 32;
const TEMPORAL_DIVISORS: [usize; 4] = [64, 128, 256, 512];
const SPATIAL_DIVISOR: usize = 2048;
const SPATIAL_COARSE_N: usize = 16;
const MMS_CFL: f64 = 0.9;
/// Edge length of the grid on which the defect forcing is assembled. Its
/// dealiased band (|kᵢ| ≤ 21) holds every polynomial product of the fields
/// below, so the assembly is exact there up to closure-composition tails.
const REFERENCE_N: usize = 64;

/// One Fourier mode of a manufactured component:
/// amp·cos(kx·x + px)·cos(ky·y + py)·cos(ωt + tp). Sines are written as
/// phase shifts (cos(θ − π/2) = sin θ). Amplitudes are relative; the family
/// scales them by its overall amplitude.
struct Mode {
    amp: f64,
    kx: f64,
    px: f64,
    ky: f64,
    py: f64,
    tp: f64,
}

const fn mode(amp: f64, kx: f64, px: f64, ky: f64, py: f64, tp: f64) -> Mode {
    Mode { amp, kx, px, ky, py, tp }
}

/// One field component: a mean plus a short mode table. The bands are chosen
/// around the coarse grid's dealiasing cutoff (n = 16 keeps |kᵢ| ≤ 5): the
/// velocity carries per-axis band-6 modes, above that cutoff but below the
/// coarse Nyquist (8) and inside the fine grid's cutoff (n = 32 keeps
/// |kᵢ| ≤ 10). The coarse grid samples those modes exactly yet cannot evolve
/// them — its right-hand side is band-limited to |kᵢ| ≤ 5 — and their
/// quadratic products (band up to 12) alias back into its retained band, so
/// the coarse run carries genuine spatial truncation error. On the fine grid
/// every product stays alias-free inside the retained band (a fold into
/// |kᵢ| ≤ 10 would need content beyond band 22), so its floor is set only by
/// the closure-composition tails, orders of magnitude lower.
struct Component {
    mean: f64,
    modes: &'static [Mode],
}

const C_P: Component = Component {
    mean: 1.0,
    modes: &[
        mode(1.0, 1.0, 0.30, 1.0, 5.20, 0.20),
        mode(0.4, 2.0, 1.10, 2.0, 2.30, 1.40),
    ],
};
const C_S: Component = Component {
    mean: 1.0,
    modes: &[
        mode(1.0, 1.0, 2.00, 1.0, 0.70, 1.10),
        mode(0.4, 2.0, 4.10, 1.0, 1.80, 2.60),
    ],
};
const C_U: [Component; 3] = [
    Component {
        mean: 0.0,
        modes: &[
            mode(1.0, 1.0, 0.00, 1.0, 0.40, 0.00),
            mode(0.2, 3.0, 0.80, 1.0, 1.70, 0.90),
            mode(0.2, 6.0, 0.80, 1.0, 1.70, 2.40),
        ],
    },
    Component {
        mean: 0.0,
        modes: &[
            mode(1.0, 1.0, 0.90, 1.0, 4.80, 0.70),
            mode(0.2, 1.0, 2.60, 3.0, 0.30, 1.80),
            mode(0.2, 1.0, 2.60, 6.0, 0.30, 4.20),
        ],
    },
    Component {
        mean: 0.0,
        modes: &[
            mode(1.0, 1.0, 1.30, 1.0, 3.40, 1.90),
            mode(0.4, 2.0, 0.50, 2.0, 2.90, 0.60),
            mode(0.1, 6.0, 1.10, 2.0, 0.70, 0.10),
        ],
    },
];
const C_E: [Component; 3] = [
    Component {
        mean: 0.0,
        modes: &[
            mode(1.0, 0.0, 0.00, 1.0, 1.20, 0.80),
            mode(0.4, 2.0, 0.70, 1.0, 0.10, 2.20),
        ],
    },
    Component {
        mean: 0.0,
        modes: &[
            mode(1.0, 1.0, 5.00, 0.0, 0.00, 1.30),
            mode(0.4, 1.0, 1.50, 2.0, 2.00, 0.40),
        ],
    },
    Component {
        mean: 0.0,
        modes: &[
            mode(1.0, 1.0, 0.50, 1.0, 0.90, 0.40),
            mode(0.4, 2.0, 3.30, 2.0, 1.00, 2.90),
        ],
    },
];
// The in-plane magnetic part derives from the stream function
//   ψ = Σ A·cos(kx·x + px)·cos(ky·y + py)·cos(ωt + tp)
// with modes A = 1.0 (k = 1, px 0.60, py 0.00, tp 0.50) and
//            A = 0.2 (k = 2, px 0.90, py 0.20, tp 1.70):
// h1 = ∂y ψ maps each mode to (−A·ky, py − π/2); h2 = −∂x ψ maps each to
// (A·kx, px − π/2). Divergence then cancels analytically, mode by mode.
const C_H: [Component; 3] = [
    Component {
        mean: 0.0,
        modes: &[
            mode(-1.0, 1.0, 0.60, 1.0, 0.00 - FRAC_PI_2, 0.50),
            mode(-0.4, 2.0, 0.90, 2.0, 0.20 - FRAC_PI_2, 1.70),
        ],
    },
    Component {
        mean: 0.0,
        modes: &[
            mode(1.0, 1.0, 0.60 - FRAC_PI_2, 1.0, 0.00, 0.50),
            mode(0.4, 2.0, 0.90 - FRAC_PI_2, 2.0, 0.20, 1.70),
        ],
    },
    Component {
        mean: 1.0,
        modes: &[
            mode(1.0, 1.0, 1.80, 1.0, 2.40, 0.90),
            mode(0.4, 2.0, 2.70, 2.0, 4.40, 0.30),
        ],
    },
];

/// The manufactured family. Amplitude 0.25 keeps p and S well inside the
/// closure's domain (both stay ≥ 0.65) while exercising every nonlinearity.
#[derive(Clone, Copy)]
pub struct Manufactured {
    pub omega: f64,
    pub amp: f64,
}

impl Default for Manufactured {
    fn default() -> Self {
        Manufactured { omega: 1.3, amp: 0.25 }
    }
}

/// Continuous time derivatives of the manufactured fields.
pub(crate) struct EmDerivs {
    pub dp: ScalarField,
    pub du: VectorField,
    pub ds: ScalarField,
    pub de: VectorField,
    pub dh: VectorField,
}

impl Manufactured {
    fn value(&self, c: &Component, x: f64, y: f64, t: f64) -> f64 {
        let mut v = c.mean;
        for m in c.modes {
            v += self.amp
                * m.amp
                * (m.kx * x + m.px).cos()
                * (m.ky * y + m.py).cos()
                * (self.omega * t + m.tp).cos();
        }
        v
    }

    fn deriv(&self, c: &Component, x: f64, y: f64, t: f64) -> f64 {
        let mut v = 0.0;
        for m in c.modes {
            v -= self.amp
                * m.amp
                * self.omega
                * (m.kx * x + m.px).cos()
                * (m.ky * y + m.py).cos()
                * (self.omega * t + m.tp).sin();
        }
        v
    }

    fn scalar(&self, grid: TorusGrid, c: &'static Component, t: f64) -> ScalarField {
        ScalarField::from_fn(grid, |[x, y, _]| self.value(c, x, y, t))
    }

    fn scalar_dt(&self, grid: TorusGrid, c: &'static Component, t: f64) -> ScalarField {
        ScalarField::from_fn(grid, |[x, y, _]| self.deriv(c, x, y, t))
    }

    fn vector(&self, grid: TorusGrid, cs: &'static [Component; 3], t: f64) -> VectorField {
        VectorField::from_fns(grid, |[x, y, _]| {
            [0, 1, 2].map(|i| self.value(&cs[i], x, y, t))
        })
    }

    fn vector_dt(&self, grid: TorusGrid, cs: &'static [Component; 3], t: f64) -> VectorField {
        VectorField::from_fns(grid, |[x, y, _]| {
            [0, 1, 2].map(|i| self.deriv(&cs[i], x, y, t))
        })
    }

    pub fn em_state(&self, grid: TorusGrid, t: f64) -> EmState {
        EmState {
            t,
            p: self.scalar(grid, &C_P, t),
            u: self.vector(grid, &C_U, t),
            s: self.scalar(grid, &C_S, t),
            e: self.vector(grid, &C_E, t),
            h: self.vector(grid, &C_H, t),
        }
    }

    pub fn mhd_state(&self, grid: TorusGrid, t: f64) -> MhdState {
        MhdState {
            t,
            p: self.scalar(grid, &C_P, t),
            u: self.vector(grid, &C_U, t),
            s: self.scalar(grid, &C_S, t),
            h: self.vector(grid, &C_H, t),
        }
    }

    pub(crate) fn em_derivs(&self, grid: TorusGrid, t: f64) -> EmDerivs {
        EmDerivs {
            dp: self.scalar_dt(grid, &C_P, t),
            du: self.vector_dt(grid, &C_U, t),
            ds: self.scalar_dt(grid, &C_S, t),
            de: self.vector_dt(grid, &C_E, t),
            dh: self.vector_dt(grid, &C_H, t),
        }
    }
}

/// Defect forcing that turns `w` (with time derivatives `d`) into an exact
/// solution of the forced relaxed system. The state family stays inside the
/// closure's domain by construction, so coefficient evaluation cannot fail.
pub(crate) fn em_defect(
    w: &EmState,
    d: &EmDerivs,
    eos: &EosClosure,
    epsilon: f64,
) -> EmForcingFields {
    let a = eos
        .coeff_a_field(&w.s, &w.p)
        .expect("manufactured state stays inside the closure domain");
    let rho = eos
        .density_field(&w.s, &w.p)
        .expect("manufactured state stays inside the closure domain");
    let b = eos
        .coeff_b_field(&w.s, &w.p)
        .expect("manufactured state stays inside the closure domain");

    let zeta = w.e.add(&cross(&w.u, &w.h));
    let grad_p = ops::grad(&w.p);
    let lorentz = cross(&zeta, &w.h);

    let q_p = d
        .dp
        .add(&ops::advect(&w.u, &w.p))
        .add(&ops::div(&w.u).zip(&a, |dv, av| dv / av));
    let q_u = VectorField::new([0, 1, 2].map(|i| {
        d.du.c[i]
            .add(&ops::advect_vec(&w.u, &w.u).c[i])
            .sub(&lorentz.c[i].sub(&grad_p.c[i]).zip(&rho, |v, r| v / r))
    }));
    let q_s = d
        .ds
        .add(&ops::advect(&w.u, &w.s))
        .sub(&zeta.norm_sq_field().zip(&b, |j, bv| j / bv));
    let q_e = d.de.scale(epsilon).add(&zeta).sub(&ops::curl(&w.h));
    let q_h = d.dh.add(&ops::curl(&w.e));
    EmForcingFields { q_p, q_u, q_s, q_e, q_h }
}

/// Defect forcing for the limit system (diffusion enters with the opposite
/// sign: the exact diffusion flow is part of the solver, so the forcing must
/// re-supply what diffusion removes from the manufactured field).
pub(crate) fn mhd_defect(
    w: &MhdState,
    dp: &ScalarField,
    du: &VectorField,
    ds: &ScalarField,
    dh: &VectorField,
    eos: &EosClosure,
) -> MhdForcingFields {
    let a = eos
        .coeff_a_field(&w.s, &w.p)
        .expect("manufactured state stays inside the closure domain");
    let rho = eos
        .density_field(&w.s, &w.p)
        .expect("manufactured state stays inside the closure domain");
    let b = eos
        .coeff_b_field(&w.s, &w.p)
        .expect("manufactured state stays inside the closure domain");

    let j = ops::curl(&w.h);
    let grad_p = ops::grad(&w.p);
    let lorentz = cross(&j, &w.h);

    let q_p = dp
        .add(&ops::advect(&w.u, &w.p))
        .add(&ops::div(&w.u).zip(&a, |dv, av| dv / av));
    let q_u = VectorField::new([0, 1, 2].map(|i| {
        du.c[i]
            .add(&ops::advect_vec(&w.u, &w.u).c[i])
            .sub(&lorentz.c[i].sub(&grad_p.c[i]).zip(&rho, |v, r| v / r))
    }));
    let q_s = ds
        .add(&ops::advect(&w.u, &w.s))
        .sub(&j.norm_sq_field().zip(&b, |jj, bv| jj / bv));
    let q_h = dh
        .sub(&ops::curl(&ops::dealias_vec(&cross(&w.u, &w.h))))
        .add(&ops::curl(&j));
    MhdForcingFields { q_p, q_u, q_s, q_h }
}

/// The grid on which the defect is assembled before restriction. Matching
/// active dimensions keeps the restriction well-defined; taking at least the
/// run size keeps it a genuine (or identity-band) coarsening.
fn reference_grid(run: TorusGrid) -> TorusGrid {
    TorusGrid::new(REFERENCE_N.max(run.n()), run.active_dims())
        .expect("reference grid parameters are valid by construction")
}

struct EmMmsForcing {
    m: Manufactured,
    eos: EosClosure,
    epsilon: f64,
}

impl EmForcing for EmMmsForcing {
    fn eval(&self, grid: TorusGrid, t: f64) -> EmForcingFields {
        let fine = reference_grid(grid);
        let w = self.m.em_state(fine, t);
        let d = self.m.em_derivs(fine, t);
        let q = em_defect(&w, &d, &self.eos, self.epsilon);
        EmForcingFields {
            q_p: ops::restrict_to(&q.q_p, grid),
            q_u: ops::restrict_vec(&q.q_u, grid),
            q_s: ops::restrict_to(&q.q_s, grid),
            q_e: ops::restrict_vec(&q.q_e, grid),
            q_h: ops::restrict_vec(&q.q_h, grid),
        }
    }
}

struct MhdMmsForcing {
    m: Manufactured,
    eos: EosClosure,
}

impl MhdForcing for MhdMmsForcing {
    fn eval(&self, grid: TorusGrid, t: f64) -> MhdForcingFields {
        let fine = reference_grid(grid);
        let w = self.m.mhd_state(fine, t);
        let d = self.m.em_derivs(fine, t);
        let q = mhd_defect(&w, &d.dp, &d.du, &d.ds, &d.dh, &self.eos);
        MhdForcingFields {
            q_p: ops::restrict_to(&q.q_p, grid),
            q_u: ops::restrict_vec(&q.q_u, grid),
            q_s: ops::restrict_to(&q.q_s, grid),
            q_h: ops::restrict_vec(&q.q_h, grid),
        }
    }
}

fn em_distance(a: &EmState, b: &EmState) -> f64 {
    ops::l2_norm(&a.p.sub(&b.p))
        + ops::l2_norm_vec(&a.u.sub(&b.u))
        + ops::l2_norm(&a.s.sub(&b.s))
        + ops::l2_norm_vec(&a.e.sub(&b.e))
        + ops::l2_norm_vec(&a.h.sub(&b.h))
}

fn mhd_distance(a: &MhdState, b: &MhdState) -> f64 {
    ops::l2_norm(&a.p.sub(&b.p))
        + ops::l2_norm_vec(&a.u.sub(&b.u))
        + ops::l2_norm(&a.s.sub(&b.s))
        + ops::l2_norm_vec(&a.h.sub(&b.h))
}

fn march_em(
    m: &Manufactured,
    eos: &EosClosure,
    n: usize,
    divisor: usize,
) -> Result<(EmState, f64), HarnessError> {
    let grid = TorusGrid::new(n, 2).map_err(|e| HarnessError::Config(e.to_string()))?;
    let dt = T_FINAL / divisor as f64;
    let cfg = EmRunConfig {
        epsilon: EPSILON,
        dt,
        cfl: MMS_CFL,
        eos: *eos,
    };
    let forcing = EmMmsForcing {
        m: *m,
        eos: *eos,
        epsilon: EPSILON,
    };
    let mut state = m.em_state(grid, 0.0);
    for _ in 0..divisor {
        state = em_step(&state, &cfg, Some(&forcing), &mut NullSink)?;
    }
    let err = em_distance(&state, &m.em_state(grid, T_FINAL));
    Ok((state, err))
}

fn march_mhd(
    m: &Manufactured,
    eos: &EosClosure,
    n: usize,
    divisor: usize,
) -> Result<(MhdState, f64), HarnessError> {
    let grid = TorusGrid::new(n, 2).map_err(|e| HarnessError::Config(e.to_string()))?;
    let dt = T_FINAL / divisor as f64;
    let cfg = MhdRunConfig {
        dt,
        cfl: MMS_CFL,
        eos: *eos,
    };
    let forcing = MhdMmsForcing { m: *m, eos: *eos };
    let mut state = m.mhd_state(grid, 0.0);
    for _ in 0..divisor {
        state = mhd_step(&state, &cfg, Some(&forcing), &mut NullSink)?;
    }
    let err = mhd_distance(&state, &m.mhd_state(grid, T_FINAL));
    Ok((state, err))
}

pub struct MmsOutcome {
    /// (dt, error vs analytic truth) per temporal level.
    pub em_temporal: Vec<(f64, f64)>,
    pub mhd_temporal: Vec<(f64, f64)>,
    /// Richardson orders from successive final-state differences.
    pub em_orders: Vec<f64>,
    pub mhd_orders: Vec<f64>,
    /// (coarse-grid error, fine-grid error) at the pinned tiny dt.
    pub em_spatial: (f64, f64),
    pub mhd_spatial: (f64, f64),
    pub items: Vec<CheckItem>,
    pub csv: String,
}

/// Run the full verification protocol. Only the closure parameters come from
/// the config; grids, horizon, relaxation value and step ladders are pinned.
pub fn mms_verify(cfg: &Config) -> Result<MmsOutcome, HarnessError> {
    let eos = cfg.eos_spec()?;
    let m = Manufactured::default();

    let mut em_finals = Vec::new();
    let mut em_temporal = Vec::new();
    let mut mhd_finals = Vec::new();
    let mut mhd_temporal = Vec::new();
    for &div in &TEMPORAL_DIVISORS {
        let dt = T_FINAL / div as f64;
        let (st, err) = march_em(&m, &eos, TEMPORAL_N, div)?;
        em_finals.push(st);
        em_temporal.push((dt, err));
        let (st, err) = march_mhd(&m, &eos, TEMPORAL_N, div)?;
        mhd_finals.push(st);
        mhd_temporal.push((dt, err));
    }

    let em_diffs: Vec<f64> = em_finals
        .windows(2)
        .map(|w| em_distance(&w[0], &w[1]))
        .collect();
    let mhd_diffs: Vec<f64> = mhd_finals
        .windows(2)
        .map(|w| mhd_distance(&w[0], &w[1]))
        .collect();
    let orders = |d: &[f64]| -> Vec<f64> {
        d.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
    };
    let em_orders = orders(&em_diffs);
    let mhd_orders = orders(&mhd_diffs);

    let (_, em_coarse) = march_em(&m, &eos, SPATIAL_COARSE_N, SPATIAL_DIVISOR)?;
    let (_, em_fine) = march_em(&m, &eos, TEMPORAL_N, SPATIAL_DIVISOR)?;
    let (_, mhd_coarse) = march_mhd(&m, &eos, SPATIAL_COARSE_N, SPATIAL_DIVISOR)?;
    let (_, mhd_fine) = march_mhd(&m, &eos, TEMPORAL_N, SPATIAL_DIVISOR)?;

    let em_drop = em_coarse / em_fine;
    let mhd_drop = mhd_coarse / mhd_fine;
    let finest_em = *em_orders.last().expect("two Richardson orders");
    let finest_mhd = *mhd_orders.last().expect("two Richardson orders");

    let items = vec![
        CheckItem::new(
            "relaxed_temporal_order",
            finest_em >= 1.9,
            format!(
                "Richardson orders under dt-halving: {:?} (finest must be ≥ 1.9); \
                 truth errors {:?}",
                round3(&em_orders),
                sci(&em_temporal)
            ),
        ),
        CheckItem::new(
            "limit_temporal_order",
            finest_mhd >= 1.9,
            format!(
                "Richardson orders under dt-halving: {:?} (finest must be ≥ 1.9); \
                 truth errors {:?}",
                round3(&mhd_orders),
                sci(&mhd_temporal)
            ),
        ),
        CheckItem::new(
            "relaxed_spatial_drop",
            em_drop >= 50.0,
            format!(
                "truth error {em_coarse:.3e} at n = {SPATIAL_COARSE_N} vs {em_fine:.3e} \
                 at n = {TEMPORAL_N}: drop ×{em_drop:.1} (needs ≥ 50)"
            ),
        ),
        CheckItem::new(
            "limit_spatial_drop",
            mhd_drop >= 50.0,
            format!(
                "truth error {mhd_coarse:.3e} at n = {SPATIAL_COARSE_N} vs {mhd_fine:.3e} \
                 at n = {TEMPORAL_N}: drop ×{mhd_drop:.1} (needs ≥ 50)"
            ),
        ),
    ];

    let mut csv = CsvBuilder::new(&cfg.hash(), "dt,em_truth_err,mhd_truth_err");
    for (i, &div) in TEMPORAL_DIVISORS.iter().enumerate() {
        let dt = T_FINAL / div as f64;
        csv.row(&[dt, em_temporal[i].1, mhd_temporal[i].1]);
    }
    csv.comment(&format!("em_richardson_orders {:?}", round3(&em_orders)));
    csv.comment(&format!("mhd_richardson_orders {:?}", round3(&mhd_orders)));
    csv.comment(&format!(
        "spatial_drop em {em_drop:.2} mhd {mhd_drop:.2} (n {SPATIAL_COARSE_N} -> {TEMPORAL_N}, dt = T/{SPATIAL_DIVISOR})"
    ));

    Ok(MmsOutcome {
        em_temporal,
        mhd_temporal,
        em_orders,
        mhd_orders,
        em_spatial: (em_coarse, em_fine),
        mhd_spatial: (mhd_coarse, mhd_fine),
        items,
        csv: csv.finish(),
    })
}

fn round3(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| (x * 1000.0).round() / 1000.0).collect()
}

fn sci(v: &[(f64, f64)]) -> Vec<String> {
    v.iter().map(|(_, e)| format!("{e:.2e}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use dll_core::em::{em_transport_rhs, stiff_e_update};
    use dll_core::mhd::mhd_transport_rhs;

    fn eos() -> EosClosure {
        EosClosure::monatomic()
    }

    fn grid16() -> TorusGrid {
        TorusGrid::new(16, 2).unwrap()
    }

    #[test]
    fn manufactured_magnetic_field_is_solenoidal_and_states_stay_positive() {
        let m = Manufactured::default();
        for &t in &[0.0, 0.17, 1.0] {
            for grid in [grid16(), TorusGrid::new(32, 2).unwrap()] {
                let w = m.em_state(grid, t);
                assert!(ops::div(&w.h).max_abs() < 1e-12);
                assert!(w.p.min_value() > 0.6);
                assert!(w.s.min_value() > 0.6);
            }
        }
    }

    /// The restriction pipeline agrees with assembling the defect directly
    /// on the run grid whenever that grid resolves every product: at n = 32
    /// the two differ only through closure-composition tails beyond the
    /// dealiased band, far below the tolerance here.
    #[test]
    fn restricted_forcing_matches_direct_assembly_on_a_resolving_grid() {
        let g = TorusGrid::new(32, 2).unwrap();
        let m = Manufactured::default();
        let t = 0.61;
        let tol = 1e-5;

        let w = m.em_state(g, t);
        let d = m.em_derivs(g, t);
        let fe = EmMmsForcing { m, eos: eos(), epsilon: EPSILON };
        let q_ref = fe.eval(g, t);
        let q_dir = em_defect(&w, &d, &eos(), EPSILON);
        assert!(q_ref.q_p.sub(&ops::dealias(&q_dir.q_p)).max_abs() < tol);
        assert!(q_ref.q_u.sub(&ops::dealias_vec(&q_dir.q_u)).max_abs() < tol);
        assert!(q_ref.q_s.sub(&ops::dealias(&q_dir.q_s)).max_abs() < tol);
        assert!(q_ref.q_e.sub(&ops::dealias_vec(&q_dir.q_e)).max_abs() < tol);
        assert!(q_ref.q_h.sub(&ops::dealias_vec(&q_dir.q_h)).max_abs() < tol);

        let wm = m.mhd_state(g, t);
        let fm = MhdMmsForcing { m, eos: eos() };
        let qm_ref = fm.eval(g, t);
        let qm_dir = mhd_defect(&wm, &d.dp, &d.du, &d.ds, &d.dh, &eos());
        assert!(qm_ref.q_p.sub(&ops::dealias(&qm_dir.q_p)).max_abs() < tol);
        assert!(qm_ref.q_u.sub(&ops::dealias_vec(&qm_dir.q_u)).max_abs() < tol);
        assert!(qm_ref.q_s.sub(&ops::dealias(&qm_dir.q_s)).max_abs() < tol);
        assert!(qm_ref.q_h.sub(&ops::dealias_vec(&qm_dir.q_h)).max_abs() < tol);
    }

    /// A time-independent family with uniform p and S and band-1 vector
    /// fields: every division in the defect has a constant denominator and
    /// every product stays below the dealiasing cutoff, so the forced step
    /// must hold the state fixed to roundoff.
    fn steady_em(grid: TorusGrid) -> EmState {
        let a = 0.2;
        EmState {
            t: 0.0,
            p: ScalarField::constant(grid, 1.0),
            u: VectorField::from_fns(grid, |[x, y, _]| [a * y.sin(), a * x.sin(), 0.0]),
            s: ScalarField::constant(grid, 1.0),
            e: VectorField::from_fns(grid, |[x, y, _]| {
                [a * y.cos(), a * x.cos(), a * (x - y).sin()]
            }),
            h: VectorField::from_fns(grid, |[x, y, _]| {
                [a * y.sin(), a * x.sin(), 1.0 + a * (x + y).cos()]
            }),
        }
    }

    struct FrozenEm(EmForcingFields);
    impl EmForcing for FrozenEm {
        fn eval(&self, _grid: TorusGrid, _t: f64) -> EmForcingFields {
            EmForcingFields {
                q_p: self.0.q_p.clone(),
                q_u: self.0.q_u.clone(),
                q_s: self.0.q_s.clone(),
                q_e: self.0.q_e.clone(),
                q_h: self.0.q_h.clone(),
            }
        }
    }

    struct FrozenMhd(MhdForcingFields);
    impl MhdForcing for FrozenMhd {
        fn eval(&self, _grid: TorusGrid, _t: f64) -> MhdForcingFields {
            MhdForcingFields {
                q_p: self.0.q_p.clone(),
                q_u: self.0.q_u.clone(),
                q_s: self.0.q_s.clone(),
                q_h: self.0.q_h.clone(),
            }
        }
    }

    #[test]
    fn steady_manufactured_state_is_a_fixed_point_of_the_relaxed_step() {
        let grid = grid16();
        let w0 = steady_em(grid);
        let zero_s = ScalarField::zeros(grid);
        let zero_v = VectorField::zeros(grid);
        let d = EmDerivs {
            dp: zero_s.clone(),
            du: zero_v.clone(),
            ds: zero_s,
            de: zero_v.clone(),
            dh: zero_v,
        };
        let forcing = FrozenEm(em_defect(&w0, &d, &eos(), 0.1));
        let cfg = EmRunConfig {
            epsilon: 0.1,
            dt: 0.01,
            cfl: 0.9,
            eos: eos(),
        };
        let mut w = w0.clone();
        for _ in 0..10 {
            w = em_step(&w, &cfg, Some(&forcing), &mut NullSink).unwrap();
        }
        assert!(w.p.sub(&w0.p).max_abs() < 1e-11);
        assert!(w.u.sub(&w0.u).max_abs() < 1e-11);
        assert!(w.s.sub(&w0.s).max_abs() < 1e-11);
        assert!(w.e.sub(&w0.e).max_abs() < 1e-11);
        assert!(w.h.sub(&w0.h).max_abs() < 1e-11);
    }

    #[test]
    fn steady_manufactured_state_is_a_fixed_point_of_the_limit_step() {
        let grid = grid16();
        let a = 0.2;
        // Uniform H: the exact diffusion flow is the identity on it, so the
        // fixed-point argument extends to the split limit step.
        let w0 = MhdState {
            t: 0.0,
            p: ScalarField::constant(grid, 1.0),
            u: VectorField::from_fns(grid, |[x, y, _]| [a * y.sin(), a * x.sin(), 0.0]),
            s: ScalarField::constant(grid, 1.0),
            h: VectorField::constant(grid, [0.0, 0.0, 1.0]),
        };
        let zero_s = ScalarField::zeros(grid);
        let zero_v = VectorField::zeros(grid);
        let forcing = FrozenMhd(mhd_defect(&w0, &zero_s, &zero_v, &zero_s, &zero_v, &eos()));
        let cfg = MhdRunConfig {
            dt: 0.01,
            cfl: 0.9,
            eos: eos(),
        };
        let mut w = w0.clone();
        for _ in 0..10 {
            w = mhd_step(&w, &cfg, Some(&forcing), &mut NullSink).unwrap();
        }
        assert!(w.p.sub(&w0.p).max_abs() < 1e-11);
        assert!(w.u.sub(&w0.u).max_abs() < 1e-11);
        assert!(w.s.sub(&w0.s).max_abs() < 1e-11);
        assert!(w.h.sub(&w0.h).max_abs() < 1e-11);
    }

    #[test]
    fn forced_right_hand_sides_reproduce_the_continuous_derivatives() {
        let grid = TorusGrid::new(32, 2).unwrap();
        let m = Manufactured::default();
        let t = 0.37;
        let tol = 1e-6;

        let w = m.em_state(grid, t);
        let d = m.em_derivs(grid, t);
        let q = em_defect(&w, &d, &eos(), EPSILON);
        let rhs = em_transport_rhs(&w, &eos(), Some(&q)).unwrap();
        assert!(rhs.dp.sub(&d.dp).max_abs() < tol);
        assert!(rhs.du.sub(&d.du).max_abs() < tol);
        assert!(rhs.ds.sub(&d.ds).max_abs() < tol);
        assert!(rhs.dh.sub(&d.dh).max_abs() < tol);
        // Huge relaxation time pushes E onto the forced target exactly; the
        // target must equal E* + ε·∂ₜE* up to dealiasing tails.
        let relaxed = stiff_e_update(&w, 1e9 * EPSILON, EPSILON, Some(&q.q_e)).unwrap();
        let expect = w.e.add(&d.de.scale(EPSILON));
        assert!(relaxed.e.sub(&expect).max_abs() < tol);

        let wm = m.mhd_state(grid, t);
        let qm = mhd_defect(&wm, &d.dp, &d.du, &d.ds, &d.dh, &eos());
        let rhsm = mhd_transport_rhs(&wm, &eos(), Some(&qm)).unwrap();
        assert!(rhsm.dp.sub(&d.dp).max_abs() < tol);
        assert!(rhsm.du.sub(&d.du).max_abs() < tol);
        assert!(rhsm.ds.sub(&d.ds).max_abs() < tol);
        // The transport block excludes diffusion, which the solver applies
        // exactly; its RHS must therefore equal ∂ₜH* + curl curl H*.
        let expect_dh = d.dh.add(&ops::curl(&ops::curl(&wm.h)));
        assert!(rhsm.dh.sub(&expect_dh).max_abs() < tol);
    }
}
