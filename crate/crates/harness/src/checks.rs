//! Structural certification: exact identities of the discrete calculus and
//! the symmetrizer, solenoidal-constraint tracking across a full default
//! run, and pointwise verification of the thermodynamic closure.

use crate::background::with_step_retries;
use crate::config::Config;
use crate::ic::{default_background_ic, random_shape, random_vec_shape};
use crate::pair::run_pair;
use crate::HarnessError;
use dll_core::eos::EosError;
use dll_core::error_sys::{cancellation_check, error_state, symmetric_form};
use dll_core::mhd::induced_e;
use dll_core::{ops, EmState, SolverError, VectorField};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// One named pass/fail result with a human-readable measurement.
#[derive(Debug, Clone)]
pub struct CheckItem {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl CheckItem {
    pub fn new(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        CheckItem {
            name: name.into(),
            pass,
            detail: detail.into(),
        }
    }

    /// Render for terminal output.
    pub fn line(&self) -> String {
        format!(
            "[{}] {} — {}",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.detail
        )
    }
}

pub fn all_pass(items: &[CheckItem]) -> bool {
    items.iter().all(|i| i.pass)
}

fn eos_err(e: EosError) -> HarnessError {
    HarnessError::Solver(SolverError::from(e))
}

/// Rescale to unit sup norm so identity defects are measured at a common
/// scale (the shapes themselves carry mode-dependent damping).
fn unit_scale(v: &VectorField) -> VectorField {
    let m = v.max_abs();
    if m > 0.0 {
        v.scale(1.0 / m)
    } else {
        v.clone()
    }
}

/// Exact identities the energy argument leans on: the curl-pairing
/// cancellation, vanishing second-derivative compositions, agreement of the
/// coefficient-matrix curl with the spectral curl, exact symmetry of the
/// coefficient matrices, and positivity of the symmetrizer on an admissible
/// perturbed state.
pub fn identity_checks(cfg: &Config) -> Result<Vec<CheckItem>, HarnessError> {
    let grid = cfg.grid_spec()?;
    let eos = cfg.eos_spec()?;
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.ic.seed ^ 0x1DE0);
    let mut items = Vec::new();

    let mut worst = 0.0_f64;
    for _ in 0..100 {
        let f = unit_scale(&random_vec_shape(grid, &mut rng));
        let g = unit_scale(&random_vec_shape(grid, &mut rng));
        worst = worst.max(cancellation_check(&f, &g));
    }
    items.push(CheckItem::new(
        "curl_pairing_cancellation",
        worst <= 1e-12,
        format!("max |∫(curl F·G − F·curl G)| = {worst:.3e} over 100 unit-scale pairs (tol 1e-12)"),
    ));

    let mut worst_div_curl = 0.0_f64;
    let mut worst_curl_grad = 0.0_f64;
    let mut worst_b = 0.0_f64;
    for _ in 0..20 {
        let v = unit_scale(&random_vec_shape(grid, &mut rng));
        let s = random_shape(grid, &mut rng);
        worst_div_curl = worst_div_curl.max(ops::div(&ops::curl(&v)).max_abs());
        worst_curl_grad = worst_curl_grad.max(ops::curl(&ops::grad(&s)).max_abs());
        worst_b = worst_b.max(ops::curl_via_b(&v).sub(&ops::curl(&v)).max_abs());
    }
    items.push(CheckItem::new(
        "second_derivative_compositions",
        worst_div_curl <= 1e-12 && worst_curl_grad <= 1e-12,
        format!(
            "max |div curl| = {worst_div_curl:.3e}, max |curl grad| = {worst_curl_grad:.3e} \
             over 20 samples (tol 1e-12)"
        ),
    ));
    items.push(CheckItem::new(
        "coefficient_matrix_curl",
        worst_b <= 1e-13,
        format!("max |Σ Bᵢᵀ∂ᵢv − curl v| = {worst_b:.3e} over 20 samples (tol 1e-13)"),
    ));

    // Symmetry and positivity at an admissible perturbed state.
    let bg = default_background_ic(grid, &eos, cfg.ic.amp)?;
    let em = EmState {
        t: bg.t,
        p: bg.p.add(&random_shape(grid, &mut rng).scale(0.05)),
        u: bg.u.add(&random_vec_shape(grid, &mut rng).scale(0.05)),
        s: bg.s.add(&random_shape(grid, &mut rng).scale(0.05)),
        e: induced_e(&bg.u, &bg.h).add(&random_vec_shape(grid, &mut rng).scale(0.05)),
        h: bg.h.add(&random_vec_shape(grid, &mut rng).scale(0.05)),
    };
    let w = error_state(&em, &bg)?;
    let epsilon = 1e-2;
    let sf = symmetric_form(&w, &bg, &eos, epsilon)?;
    let asym = sf.max_asymmetry();
    items.push(CheckItem::new(
        "coefficient_matrix_symmetry",
        asym == 0.0,
        format!("max |Aᵢ − Aᵢᵀ| entry = {asym:.3e} pointwise over the grid (must be exactly 0)"),
    ));
    let min_d = sf.min_d();
    items.push(CheckItem::new(
        "symmetrizer_positivity",
        min_d > 0.0 && min_d.is_finite(),
        format!("min diagonal of D = {min_d:.3e} (expected ε = {epsilon:.1e} here)"),
    ));

    Ok(items)
}

/// Track the solenoidal constraint across one full default-configuration
/// paired run at a mid-sweep ε: div H for the relaxed solution and, via
/// linearity of the divergence, div G = div Hᵉ − div H⁰ for the error field.
pub fn divergence_tracking_check(cfg: &Config) -> Result<Vec<CheckItem>, HarnessError> {
    let eos = cfg.eos_spec()?;
    let epsilon = cfg.sweep.epsilons[cfg.sweep.epsilons.len() / 2];
    let start = default_background_ic(cfg.grid_spec()?, &eos, cfg.ic.amp)?;
    let ((sup_em, sup_bg), plan) = with_step_retries(
        cfg,
        &start,
        cfg.sweep.t_final,
        3,
        |bg| {
            let pair = run_pair(cfg, bg, epsilon, false)?;
            let sup_em = pair.rows.iter().map(|r| r.div_h).fold(0.0_f64, f64::max);
            let sup_bg = bg
                .snaps
                .iter()
                .map(|s| ops::div(&s.state.h).max_abs())
                .fold(0.0_f64, f64::max);
            Ok((sup_em, sup_bg))
        },
    )?;
    let sup_g = sup_em + sup_bg;
    Ok(vec![
        CheckItem::new(
            "div_h_relaxed_run",
            sup_em <= 1e-11,
            format!(
                "sup |div H| = {sup_em:.3e} over a full run at ε = {epsilon} \
                 ({} steps, dt = {:.3e}; tol 1e-11)",
                plan.steps, plan.dt
            ),
        ),
        CheckItem::new(
            "div_g_error_field",
            sup_g <= 1e-11,
            format!(
                "sup |div G| ≤ |div Hᵉ| + |div H⁰| = {sup_em:.3e} + {sup_bg:.3e} \
                 = {sup_g:.3e} (tol 1e-11)"
            ),
        ),
    ])
}

/// Pointwise verification of the thermodynamic closure over 10⁴ random
/// states: the acoustic coefficient against a centered finite difference of
/// the density, and second-order convergence of the Gibbs-relation defect.
pub fn eos_checks(cfg: &Config) -> Result<Vec<CheckItem>, HarnessError> {
    let eos = cfg.eos_spec()?;
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.ic.seed ^ 0xE05);
    let count = 10_000;
    let fd_h = 1e-6;
    let (h1, h2) = (1e-4, 5e-5);

    let mut worst_a = 0.0_f64;
    let (mut sum1, mut sum2) = (0.0_f64, 0.0_f64);
    let (mut max1, mut max2) = (0.0_f64, 0.0_f64);
    for _ in 0..count {
        let s = rng.gen_range(0.2..2.0);
        let p = rng.gen_range(0.2..3.0);
        let fd = (eos.density(s, p + fd_h).map_err(eos_err)?
            - eos.density(s, p - fd_h).map_err(eos_err)?)
            / (2.0 * fd_h * eos.density(s, p).map_err(eos_err)?);
        let rel = (fd / eos.coeff_a(s, p).map_err(eos_err)? - 1.0).abs();
        worst_a = worst_a.max(rel);

        let r1 = eos.gibbs_residual(s, p, h1).map_err(eos_err)?;
        let r2 = eos.gibbs_residual(s, p, h2).map_err(eos_err)?;
        sum1 += r1;
        sum2 += r2;
        max1 = max1.max(r1);
        max2 = max2.max(r2);
    }
    let order_mean = (sum1 / sum2).log2();
    let order_max = (max1 / max2).log2();
    let in_band = |o: f64| (1.8..=2.2).contains(&o);

    Ok(vec![
        CheckItem::new(
            "acoustic_coefficient_fd",
            worst_a <= 1e-6,
            format!(
                "max relative error of (1/ρ)∂ρ/∂p vs centered FD (h = {fd_h:.0e}) \
                 = {worst_a:.3e} over {count} states (tol 1e-6)"
            ),
        ),
        CheckItem::new(
            "gibbs_relation_order",
            in_band(order_mean) && in_band(order_max),
            format!(
                "Gibbs defect halving order: mean {order_mean:.3}, max {order_max:.3} \
                 over {count} states (band [1.8, 2.2])"
            ),
        ),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg() -> Config {
        let mut cfg = Config::default();
        cfg.grid.n = 32;
        cfg.validate().unwrap();
        cfg
    }

    #[test]
    fn identity_items_pass_on_a_small_grid() {
        let items = identity_checks(&small_cfg()).unwrap();
        assert_eq!(items.len(), 5);
        for item in &items {
            assert!(item.pass, "{}", item.line());
        }
        assert!(all_pass(&items));
    }

    #[test]
    fn eos_items_pass_and_report_orders() {
        let items = eos_checks(&small_cfg()).unwrap();
        assert_eq!(items.len(), 2);
        for item in &items {
            assert!(item.pass, "{}", item.line());
        }
        assert!(items[1].detail.contains("mean"));
    }

    #[test]
    fn check_item_rendering_is_stable() {
        let item = CheckItem::new("thing", false, "detail text");
        assert_eq!(item.line(), "[FAIL] thing — detail text");
        assert!(!all_pass(&[CheckItem::new("a", true, ""), item]));
    }
}
