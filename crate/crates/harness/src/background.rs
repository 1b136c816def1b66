//! Step planning, the shared limit-system (background) trajectory, and the
//! dt-halving retry ladder.
//!
//! The background is integrated once per experiment at half the paired
//! solver's step so its discretization error stays subordinate, and only
//! snapshot-time states are retained: the paired run needs the background
//! exclusively where error states are evaluated. The step count is rounded
//! to a snapshot multiple so the cadence is uniform through the final time.

use crate::config::Config;
use crate::HarnessError;
use dll_core::mhd::{induced_e, mhd_dt_limit, mhd_step, mhd_time_derivs};
use dll_core::{EmState, MhdRunConfig, MhdState, MhdTimeDerivs, NullSink, VectorField};

/// The time discretization shared by a paired run and its background.
#[derive(Debug, Clone, Copy)]
pub struct StepPlan {
    pub dt: f64,
    pub steps: usize,
    pub snapshot_every: usize,
    /// Number of dt-halvings applied by the retry ladder.
    pub halvings: u32,
}

impl StepPlan {
    pub fn dt_snap(&self) -> f64 {
        self.snapshot_every as f64 * self.dt
    }

    pub fn snapshot_count(&self) -> usize {
        self.steps / self.snapshot_every + 1
    }
}

/// Choose dt and the step count for the given horizon starting from `start`:
/// dt is the CFL fraction of the tighter of the acoustic bound (with a 5%
/// drift margin) and the induction-damping bound, halved `halvings` times,
/// then rounded so the horizon splits into a whole number of snapshot
/// blocks. The half-step background integration is checked against its own
/// stability bound, which includes the Alfvén speed.
pub fn plan_steps(
    cfg: &Config,
    start: &MhdState,
    horizon: f64,
    halvings: u32,
) -> Result<StepPlan, HarnessError> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(HarnessError::Config(format!(
            "plan horizon must be positive (got {horizon})"
        )));
    }
    let grid = start.grid();
    let eos = cfg.eos_spec()?;
    let proxy = EmState {
        t: start.t,
        p: start.p.clone(),
        u: start.u.clone(),
        s: start.s.clone(),
        e: VectorField::zeros(grid),
        h: start.h.clone(),
    };
    let speeds = dll_core::em::em_wave_speed(&proxy, &eos, 1.0)?;
    let acoustic = grid.dx() / speeds.transport;
    let damping = 2.0 / grid.kmax_sq_retained();
    let em_limit = (0.95 * acoustic).min(damping);
    let bg_limit = 0.95 * mhd_dt_limit(start, &eos)?;
    let dt_target =
        (cfg.sweep.cfl * em_limit.min(2.0 * bg_limit)) / f64::powi(2.0, halvings as i32);

    let every = cfg.sweep.snapshot_every;
    let raw = (horizon / dt_target).ceil().max(1.0) as usize;
    let steps = raw.div_ceil(every) * every;
    Ok(StepPlan {
        dt: horizon / steps as f64,
        steps,
        snapshot_every: every,
        halvings,
    })
}

/// The background state, its continuous time derivatives, and the induced
/// electric field at one snapshot.
pub struct BackgroundSnapshot {
    pub state: MhdState,
    pub derivs: MhdTimeDerivs,
    pub e0: VectorField,
}

/// Snapshot-time samples of the limit trajectory on the plan's cadence.
pub struct BackgroundTrajectory {
    pub snaps: Vec<BackgroundSnapshot>,
    pub plan: StepPlan,
}

impl BackgroundTrajectory {
    pub fn initial_state(&self) -> &MhdState {
        &self.snaps[0].state
    }

    pub fn final_state(&self) -> &MhdState {
        &self.snaps[self.snaps.len() - 1].state
    }
}

/// Integrate the limit system from `start` across the plan's horizon at
/// half-steps, retaining snapshot-time data.
pub fn compute_background(
    cfg: &Config,
    start: MhdState,
    plan: &StepPlan,
) -> Result<BackgroundTrajectory, HarnessError> {
    let eos = cfg.eos_spec()?;
    let mcfg = MhdRunConfig {
        dt: 0.5 * plan.dt,
        cfl: cfg.sweep.cfl,
        eos,
    };
    let mut snaps = Vec::with_capacity(plan.snapshot_count());
    let mut st = start;
    for idx in 0..=plan.steps {
        if idx % plan.snapshot_every == 0 {
            snaps.push(BackgroundSnapshot {
                derivs: mhd_time_derivs(&st, &mcfg.eos)?,
                e0: induced_e(&st.u, &st.h),
                state: st.clone(),
            });
        }
        if idx < plan.steps {
            st = mhd_step(&st, &mcfg, None, &mut NullSink)?;
            st = mhd_step(&st, &mcfg, None, &mut NullSink)?;
        }
    }
    Ok(BackgroundTrajectory { snaps, plan: *plan })
}

/// Run an experiment body under the dt-halving ladder: on a stability or
/// monitor trip the whole computation (background included) reruns
/// deterministically at half the step, up to `max_halvings` times. Returns
/// the body's value and the plan that succeeded.
pub fn with_step_retries<T>(
    cfg: &Config,
    start: &MhdState,
    horizon: f64,
    max_halvings: u32,
    body: impl Fn(&BackgroundTrajectory) -> Result<T, HarnessError>,
) -> Result<(T, StepPlan), HarnessError> {
    for halvings in 0..=max_halvings {
        let plan = plan_steps(cfg, start, horizon, halvings)?;
        let bg = match compute_background(cfg, start.clone(), &plan) {
            Ok(bg) => bg,
            Err(e) if e.is_retryable() && halvings < max_halvings => continue,
            Err(e) => return Err(e),
        };
        match body(&bg) {
            Ok(v) => return Ok((v, plan)),
            Err(e) if e.is_retryable() && halvings < max_halvings => continue,
            Err(e) => return Err(e),
        }
    }
    unreachable!("retry ladder always returns from its last attempt");
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ic::default_background_ic;

    fn small_cfg() -> Config {
        let mut cfg = Config::default();
        cfg.grid.n = 16;
        cfg.sweep.t_final = 0.02;
        cfg.sweep.snapshot_every = 2;
        cfg.validate().unwrap();
        cfg
    }

    fn start_state(cfg: &Config) -> MhdState {
        let eos = cfg.eos_spec().unwrap();
        default_background_ic(cfg.grid_spec().unwrap(), &eos, cfg.ic.amp).unwrap()
    }

    #[test]
    fn plan_hits_the_horizon_exactly_on_snapshot_blocks() {
        let cfg = small_cfg();
        let start = start_state(&cfg);
        let plan = plan_steps(&cfg, &start, cfg.sweep.t_final, 0).unwrap();
        assert_eq!(plan.steps % plan.snapshot_every, 0);
        assert!((plan.dt * plan.steps as f64 - cfg.sweep.t_final).abs() < 1e-12);
        let halved = plan_steps(&cfg, &start, cfg.sweep.t_final, 1).unwrap();
        assert!(halved.dt < plan.dt);
        assert!(halved.steps >= 2 * plan.steps - plan.snapshot_every);
        assert!(plan_steps(&cfg, &start, -1.0, 0).is_err());
    }

    #[test]
    fn background_cadence_and_determinism() {
        let cfg = small_cfg();
        let start = start_state(&cfg);
        let plan = plan_steps(&cfg, &start, cfg.sweep.t_final, 0).unwrap();
        let a = compute_background(&cfg, start.clone(), &plan).unwrap();
        assert_eq!(a.snaps.len(), plan.snapshot_count());
        for (j, snap) in a.snaps.iter().enumerate() {
            let expect_t = (j * plan.snapshot_every) as f64 * plan.dt;
            assert!((snap.state.t - expect_t).abs() < 1e-10);
            assert!(snap.derivs.du.is_finite());
            assert!(snap.e0.is_finite());
        }
        let b = compute_background(&cfg, start, &plan).unwrap();
        let (ha, hb) = (
            a.final_state().h.c[0].phys(),
            b.final_state().h.c[0].phys(),
        );
        assert!(ha
            .iter()
            .zip(hb.iter())
            .all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn retry_ladder_halves_until_the_body_accepts() {
        let cfg = small_cfg();
        let start = start_state(&cfg);
        let base = plan_steps(&cfg, &start, cfg.sweep.t_final, 0).unwrap();
        // A body that rejects the first two plans with a retryable error.
        let (value, plan) = with_step_retries(&cfg, &start, cfg.sweep.t_final, 3, |bg| {
            if bg.plan.halvings < 2 {
                Err(HarnessError::Solver(dll_core::SolverError::CflViolation {
                    dt: bg.plan.dt,
                    limit: 0.0,
                    t: 0.0,
                }))
            } else {
                Ok(bg.plan.steps)
            }
        })
        .unwrap();
        assert_eq!(plan.halvings, 2);
        assert!(value > base.steps);
        // Non-retryable errors propagate immediately.
        let err = with_step_retries(&cfg, &start, cfg.sweep.t_final, 3, |_| {
            Err::<(), _>(HarnessError::Config("structural".into()))
        });
        assert!(matches!(err, Err(HarnessError::Config(_))));
    }
}
