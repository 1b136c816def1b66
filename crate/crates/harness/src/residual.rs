//! Residual certification of a trajectory pair against the coupled error
//! system, refined under dt-halving.
//!
//! Both integrators advance their own systems; the error fields assembled
//! from their snapshots must satisfy the coupled system up to the schemes'
//! truncation error. Fourth-order time differences on the snapshot cadence
//! keep the stencil error subdominant, so the measured residual tracks the
//! integrators' own O(dt²) error and must shrink at second order when every
//! step size is halved.

use crate::background::{compute_background, plan_steps};
use crate::checks::CheckItem;
use crate::config::Config;
use crate::ic::default_background_ic;
use crate::pair::run_pair;
use crate::HarnessError;
use dll_core::error_sys::error_residual;
use dll_core::{MhdState, MhdTimeDerivs};

pub struct ResidualStudy {
    pub epsilon: f64,
    /// Step-halving level at which the coarse run first succeeded.
    pub base_halvings: u32,
    pub coarse_dt: f64,
    pub coarse: [f64; 4],
    pub fine: [f64; 4],
    pub orders: [f64; 4],
    pub items: Vec<CheckItem>,
}

/// Residual norms for one plan level: run the pair, assemble the snapshot
/// series, and certify it against the coupled system.
fn measure(
    cfg: &Config,
    start: &MhdState,
    epsilon: f64,
    halvings: u32,
) -> Result<([f64; 4], f64), HarnessError> {
    let plan = plan_steps(cfg, start, cfg.sweep.t_final, halvings)?;
    let dt_snap = plan.dt_snap();
    let bg = compute_background(cfg, start.clone(), &plan)?;
    let out = run_pair(cfg, &bg, epsilon, true)?;
    let em = out.em_snaps.expect("snapshots were requested");
    let states: Vec<MhdState> = bg.snaps.iter().map(|s| s.state.clone()).collect();
    let derivs: Vec<MhdTimeDerivs> = bg.snaps.iter().map(|s| s.derivs.clone()).collect();
    let rep = error_residual(&em, &states, &derivs, &cfg.eos_spec()?, epsilon, dt_snap)?;
    Ok((rep.eq, dt_snap))
}

/// Measure the error-system residual at `epsilon` on the coarsest stable plan
/// and again with every step halved; report the observed orders.
///
/// Equations 1–3 (acoustic, velocity, entropy blocks) must converge at order
/// ≥ 1.9. The electromagnetic block is integrated by an exact exponential
/// relaxation, so its residual may already sit at roundoff on the coarse
/// plan; it passes either by order or by an absolute floor.
pub fn residual_study(cfg: &Config, epsilon: f64) -> Result<ResidualStudy, HarnessError> {
    if !(epsilon > 0.0) {
        return Err(HarnessError::Config(format!(
            "relaxation parameter must be positive (got {epsilon})"
        )));
    }
    let start = default_background_ic(cfg.grid_spec()?, &cfg.eos_spec()?, cfg.ic.amp)?;

    let mut base = None;
    for halvings in 0..=3u32 {
        match measure(cfg, &start, epsilon, halvings) {
            Ok(m) => {
                base = Some((m, halvings));
                break;
            }
            Err(e) if e.is_retryable() && halvings < 3 => continue,
            Err(e) => return Err(e),
        }
    }
    let ((coarse, coarse_dt), base_halvings) =
        base.expect("the loop either breaks with a measurement or returns the error");
    let (fine, _) = measure(cfg, &start, epsilon, base_halvings + 1)?;

    let orders = [0, 1, 2, 3].map(|i| (coarse[i] / fine[i]).log2());

    let mut items = Vec::new();
    let names = ["acoustic", "velocity", "entropy", "electromagnetic"];
    for i in 0..3 {
        items.push(CheckItem::new(
            format!("residual_order_{}", names[i]),
            orders[i] >= 1.9,
            format!(
                "residual {:.3e} -> {:.3e} under dt-halving: order {:.3} (needs ≥ 1.9)",
                coarse[i], fine[i], orders[i]
            ),
        ));
    }
    let em_floor = fine[3] <= 1e-10;
    items.push(CheckItem::new(
        format!("residual_order_{}", names[3]),
        orders[3] >= 1.9 || em_floor,
        format!(
            "residual {:.3e} -> {:.3e}: order {:.3} (passes at order ≥ 1.9 or floor ≤ 1e-10)",
            coarse[3], fine[3], orders[3]
        ),
    ));

    Ok(ResidualStudy {
        epsilon,
        base_halvings,
        coarse_dt,
        coarse,
        fine,
        orders,
        items,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Config;

    /// A small but non-trivial configuration: the residual study must
    /// produce finite positive norms on both levels and second-order decay
    /// in the transport blocks. The grid must resolve the nonlinear products
    /// well enough that their dealiasing tails sit below the schemes' own
    /// error, or the measured order degrades toward a spatial floor.
    #[test]
    fn residual_decays_at_second_order_on_a_small_grid() {
        let cfg = Config::from_toml(
            r#"
            [grid]
            n = 32
            active_dims = 2

            [sweep]
            epsilons = [1e-1, 5e-2, 2.5e-2, 1.25e-2, 6.25e-3]
            t_final = 0.2
            cfl = 0.4
            snapshot_every = 2

            [ic]
            seed = 7
            amp = 0.05
            perturb_amp = 0.1
        "#,
        )
        .unwrap();
        let study = residual_study(&cfg, 5e-2).unwrap();
        for i in 0..4 {
            assert!(study.coarse[i].is_finite() && study.coarse[i] >= 0.0);
            assert!(study.fine[i].is_finite());
        }
        for item in &study.items {
            assert!(item.pass, "{}", item.line());
        }
    }
}
