//! The relaxation sweep: one shared background, a paired run per ε
//! (optionally in parallel), convergence-rate fits on the time-suprema, and
//! the pass/fail gates for the convergence claims.

use std::path::{Path, PathBuf};

use crate::background::{with_step_retries, StepPlan};
use crate::checks::CheckItem;
use crate::config::Config;
use crate::csvio::{read_config_hash, CsvBuilder, REPORT_HEADER};
use crate::fit::{fit_rate, Fit};
use crate::ic::default_background_ic;
use crate::pair::{run_pair, PairOutcome};
use crate::parallel::run_indexed;
use crate::HarnessError;

/// Log–log rate fits of each sup-in-time metric against ε.
pub struct SweepFits {
    pub norm_s0: Fit,
    pub norm_s2: Fit,
    pub norm_s4: Fit,
    pub weighted_f: Fit,
    pub f: Fit,
    pub damping: Fit,
    pub gamma: Fit,
}

impl SweepFits {
    pub fn named(&self) -> [(&'static str, &Fit); 7] {
        [
            ("norm_s0", &self.norm_s0),
            ("norm_s2", &self.norm_s2),
            ("norm_s4", &self.norm_s4),
            ("weighted_f", &self.weighted_f),
            ("f", &self.f),
            ("damping", &self.damping),
            ("gamma", &self.gamma),
        ]
    }
}

pub struct SweepOutput {
    pub pairs: Vec<PairOutcome>,
    pub fits: SweepFits,
    /// Convergence gates, in reporting order.
    pub gates: Vec<CheckItem>,
    /// Non-fatal observations (e.g. a metric not monotone in ε).
    pub warnings: Vec<String>,
    pub report_csv: String,
    pub plan: StepPlan,
    pub config_hash: String,
}

/// Validate the ε ladder, compute the background once, run every pair
/// against it, fit rates, and evaluate the gates. Deterministic for a fixed
/// config regardless of `workers`.
pub fn sweep_epsilon(cfg: &Config, workers: usize) -> Result<SweepOutput, HarnessError> {
    cfg.validate()?;
    let eps = &cfg.sweep.epsilons;
    if eps.len() < 4 {
        return Err(HarnessError::Config(format!(
            "a rate fit needs at least 4 relaxation values (got {})",
            eps.len()
        )));
    }
    let decades = (eps[0] / eps[eps.len() - 1]).log10();
    if decades < 1.5 {
        return Err(HarnessError::Config(format!(
            "relaxation values must span at least 1.5 decades (got {decades:.3})"
        )));
    }

    let eos = cfg.eos_spec()?;
    let start = default_background_ic(cfg.grid_spec()?, &eos, cfg.ic.amp)?;
    let (pairs, plan) = with_step_retries(cfg, &start, cfg.sweep.t_final, 3, |bg| {
        let results = run_indexed(eps.len(), workers, |i| run_pair(cfg, bg, eps[i], false));
        let mut pairs = Vec::with_capacity(eps.len());
        for r in results {
            pairs.push(r?);
        }
        Ok(pairs)
    })?;

    let fits = assemble_fits(&pairs)?;
    let gates = rate_gates(&pairs, &fits);
    let warnings = monotonicity_warnings(&pairs);
    let config_hash = cfg.hash();
    let report_csv = assemble_report_csv(&config_hash, &pairs, &fits, &warnings, &plan);
    Ok(SweepOutput {
        pairs,
        fits,
        gates,
        warnings,
        report_csv,
        plan,
        config_hash,
    })
}

pub fn assemble_fits(pairs: &[PairOutcome]) -> Result<SweepFits, HarnessError> {
    let points = |f: fn(&PairOutcome) -> f64| -> Vec<(f64, f64)> {
        pairs.iter().map(|p| (p.epsilon, f(p))).collect()
    };
    Ok(SweepFits {
        norm_s0: fit_rate(&points(|p| p.sup_norm_s0))?,
        norm_s2: fit_rate(&points(|p| p.sup_norm_s2))?,
        norm_s4: fit_rate(&points(|p| p.sup_norm_s4))?,
        weighted_f: fit_rate(&points(|p| p.sup_weighted_f))?,
        f: fit_rate(&points(|p| p.sup_f))?,
        damping: fit_rate(&points(|p| p.damping_integral))?,
        gamma: fit_rate(&points(|p| p.sup_gamma))?,
    })
}

/// The convergence gates. Rate bands are fixed here, not configurable: they
/// are the acceptance contract, not tuning knobs.
pub fn rate_gates(pairs: &[PairOutcome], fits: &SweepFits) -> Vec<CheckItem> {
    let mut items = Vec::new();
    let band = |f: &Fit| (0.85..=1.15).contains(&f.slope);
    let slope_detail = |f: &Fit| {
        format!(
            "slope {:.4} (leave-one-out [{:.4}, {:.4}], {} pts)",
            f.slope, f.lo, f.hi, f.n_used
        )
    };

    items.push(CheckItem::new(
        "error_rate_s0",
        band(&fits.norm_s0),
        format!(
            "sup‖(P,U,Φ,G)‖₀ vs ε: {} — band [0.85, 1.15]",
            slope_detail(&fits.norm_s0)
        ),
    ));
    items.push(CheckItem::new(
        "error_rate_s2",
        band(&fits.norm_s2),
        format!(
            "sup‖(P,U,Φ,G)‖₂ vs ε: {} — band [0.85, 1.15]",
            slope_detail(&fits.norm_s2)
        ),
    ));
    items.push(CheckItem::new(
        "relaxation_field_weighted",
        fits.weighted_f.slope >= 0.85,
        format!(
            "√ε·sup‖F‖₀ vs ε: {} — needs ≥ 0.85",
            slope_detail(&fits.weighted_f)
        ),
    ));
    items.push(CheckItem::new(
        "relaxation_field_raw",
        fits.f.slope >= 0.4,
        format!("sup‖F‖₀ vs ε: {} — needs ≥ 0.4", slope_detail(&fits.f)),
    ));
    items.push(CheckItem::new(
        "damping_integral_rate",
        fits.damping.slope >= 1.7,
        format!(
            "∫‖F‖₀² dτ vs ε: {} — needs ≥ 1.7",
            slope_detail(&fits.damping)
        ),
    ));
    items.push(CheckItem::new(
        "energy_functional_rate",
        fits.gamma.slope >= 1.7,
        format!(
            "sup Γ vs ε: {} — needs ≥ 1.7",
            slope_detail(&fits.gamma)
        ),
    ));

    // Uniform-in-time quadratic bound: calibrate C on the largest ε (its own
    // rows satisfy Γ ≤ C·ε² by construction of C as the sup), then demand
    // every smaller ε stays within a factor 10 of the same constant.
    if let Some(cal) = pairs.iter().max_by(|a, b| a.epsilon.total_cmp(&b.epsilon)) {
        let c0 = cal.sup_gamma / (cal.epsilon * cal.epsilon);
        let mut worst_ratio = 0.0_f64;
        let mut worst_eps = cal.epsilon;
        for p in pairs {
            let allowed = 10.0 * c0 * p.epsilon * p.epsilon;
            for row in &p.rows {
                let ratio = row.gamma / allowed;
                if ratio > worst_ratio {
                    worst_ratio = ratio;
                    worst_eps = p.epsilon;
                }
            }
        }
        items.push(CheckItem::new(
            "energy_uniform_bound",
            worst_ratio <= 1.0 && c0.is_finite(),
            format!(
                "Γ(t) ≤ 10·C·ε² with C = {c0:.4e} from ε = {:.1e}; \
                 worst Γ/(10Cε²) = {worst_ratio:.4} at ε = {worst_eps:.1e}",
                cal.epsilon
            ),
        ));
    }
    items
}

/// Each sup metric is expected to shrink with ε; a violation is reported,
/// not fatal (rate fits already absorb scatter).
fn monotonicity_warnings(pairs: &[PairOutcome]) -> Vec<String> {
    let mut warnings = Vec::new();
    let metrics: [(&str, fn(&PairOutcome) -> f64); 5] = [
        ("sup_norm_s0", |p| p.sup_norm_s0),
        ("sup_norm_s2", |p| p.sup_norm_s2),
        ("sup_f_s0", |p| p.sup_f),
        ("damping_integral", |p| p.damping_integral),
        ("sup_gamma", |p| p.sup_gamma),
    ];
    for (name, f) in metrics {
        for w in pairs.windows(2) {
            // Config order is strictly decreasing in ε.
            if f(&w[1]) > f(&w[0]) {
                warnings.push(format!(
                    "{name} not monotone: {:.6e} at ε = {:.3e} exceeds {:.6e} at ε = {:.3e}",
                    f(&w[1]),
                    w[1].epsilon,
                    f(&w[0]),
                    w[0].epsilon
                ));
            }
        }
    }
    warnings
}

pub fn assemble_report_csv(
    config_hash: &str,
    pairs: &[PairOutcome],
    fits: &SweepFits,
    warnings: &[String],
    plan: &StepPlan,
) -> String {
    let mut csv = CsvBuilder::new(config_hash, REPORT_HEADER);
    for p in pairs {
        csv.row(&[
            p.epsilon,
            p.sup_norm_s0,
            p.sup_norm_s2,
            p.sup_norm_s4,
            p.sup_weighted_f,
            p.sup_f,
            p.damping_integral,
            p.sup_gamma,
            p.dt,
            p.steps as f64,
            plan.halvings as f64,
        ]);
    }
    for (name, fit) in fits.named() {
        csv.comment(&format!(
            "slope {name} {:.6} lo {:.6} hi {:.6} n {} excluded {}",
            fit.slope, fit.lo, fit.hi, fit.n_used, fit.excluded
        ));
    }
    for w in warnings {
        csv.comment(&format!("warning {w}"));
    }
    csv.finish()
}

/// File name for one ε's series (exponent form keeps names short and unique
/// for the ladder values in use).
pub fn series_file_name(epsilon: f64) -> String {
    format!("series_eps_{epsilon:e}.csv")
}

/// Write every series plus the report under `dir`. Refuses to mix configs:
/// every CSV must carry the sweep's own hash.
pub fn write_sweep_outputs(
    dir: &Path,
    out: &SweepOutput,
) -> Result<Vec<PathBuf>, HarnessError> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for p in &out.pairs {
        if read_config_hash(&p.csv)? != out.config_hash {
            return Err(HarnessError::Format(format!(
                "refusing to aggregate series at ε = {} under a different config hash",
                p.epsilon
            )));
        }
        let path = dir.join(series_file_name(p.epsilon));
        std::fs::write(&path, &p.csv)?;
        written.push(path);
    }
    let path = dir.join("sweep_report.csv");
    std::fs::write(&path, &out.report_csv)?;
    written.push(path);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pair::SeriesRow;
    use dll_core::{EmState, ScalarField, TorusGrid, VectorField};

    fn synthetic_pair(epsilon: f64, scale: f64) -> PairOutcome {
        let grid = TorusGrid::new(8, 2).unwrap();
        let e1 = scale * epsilon;
        let e2 = scale * epsilon * epsilon;
        let row = SeriesRow {
            t: 0.0,
            norm_s0: e1,
            norm_s2: e1,
            norm_s4: e1,
            weighted_s0: e1,
            weighted_s2: e1,
            f_norm_s0: e1,
            damping_accum: e2,
            gamma: e2,
            min_p: 1.0,
            min_s: 1.0,
            div_h: 0.0,
        };
        PairOutcome {
            epsilon,
            rows: vec![row],
            csv: format!("# config h\n{}\n", REPORT_HEADER),
            sup_norm_s0: e1,
            sup_norm_s2: e1,
            sup_norm_s4: e1,
            sup_weighted_f: epsilon.sqrt() * e1,
            sup_f: e1,
            damping_integral: e2,
            sup_gamma: e2,
            dt: 1e-3,
            steps: 100,
            final_em: EmState {
                t: 0.0,
                p: ScalarField::constant(grid, 1.0),
                u: VectorField::zeros(grid),
                s: ScalarField::constant(grid, 1.0),
                e: VectorField::zeros(grid),
                h: VectorField::zeros(grid),
            },
            em_snaps: None,
        }
    }

    #[test]
    fn exact_power_laws_fit_to_machine_precision_and_pass_gates() {
        let pairs: Vec<PairOutcome> = [1e-1, 5e-2, 2e-2, 1e-2, 5e-3, 2e-3]
            .iter()
            .map(|&e| synthetic_pair(e, 0.7))
            .collect();
        let fits = assemble_fits(&pairs).unwrap();
        assert!((fits.norm_s0.slope - 1.0).abs() < 1e-12);
        assert!((fits.weighted_f.slope - 1.5).abs() < 1e-12);
        assert!((fits.damping.slope - 2.0).abs() < 1e-12);
        assert!((fits.gamma.slope - 2.0).abs() < 1e-12);
        let gates = rate_gates(&pairs, &fits);
        assert_eq!(gates.len(), 7);
        for g in &gates {
            assert!(g.pass, "{}", g.line());
        }
        assert!(monotonicity_warnings(&pairs).is_empty());
    }

    #[test]
    fn uniform_bound_gate_catches_an_outlier_trajectory() {
        let mut pairs: Vec<PairOutcome> = [1e-1, 5e-2, 2e-2, 1e-2]
            .iter()
            .map(|&e| synthetic_pair(e, 0.7))
            .collect();
        // One snapshot of the smallest ε blows past 10·C·ε² while the sup
        // metrics (and hence the fits) stay on the ideal law.
        pairs[3].rows[0].gamma *= 25.0;
        let fits = assemble_fits(&pairs).unwrap();
        let gates = rate_gates(&pairs, &fits);
        let bound = gates
            .iter()
            .find(|g| g.name == "energy_uniform_bound")
            .unwrap();
        assert!(!bound.pass, "{}", bound.line());
    }

    #[test]
    fn report_carries_rows_slopes_and_warnings() {
        let mut pairs: Vec<PairOutcome> = [1e-1, 5e-2, 2e-2, 1e-2]
            .iter()
            .map(|&e| synthetic_pair(e, 0.7))
            .collect();
        pairs[2].sup_norm_s0 = pairs[1].sup_norm_s0 * 1.5; // break monotonicity
        let fits = assemble_fits(&pairs).unwrap();
        let warnings = monotonicity_warnings(&pairs);
        assert_eq!(warnings.len(), 1);
        let plan = StepPlan {
            dt: 1e-3,
            steps: 100,
            snapshot_every: 10,
            halvings: 1,
        };
        let csv = assemble_report_csv("abc", &pairs, &fits, &warnings, &plan);
        assert!(csv.starts_with("# config abc\n"));
        assert_eq!(csv.lines().nth(1).unwrap(), REPORT_HEADER);
        // Header plus one row per relaxation parameter.
        assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 5);
        assert_eq!(
            csv.lines()
                .filter(|l| l.starts_with("# slope "))
                .count(),
            7
        );
        assert!(csv.contains("# warning sup_norm_s0 not monotone"));
        assert!(csv.lines().any(|l| l.starts_with("0.02,")));
    }

    #[test]
    fn sweep_rejects_thin_ladders() {
        let mut cfg = Config::default();
        cfg.grid.n = 8;
        cfg.sweep.epsilons = vec![1e-1, 5e-2, 2e-2];
        assert!(matches!(
            sweep_epsilon(&cfg, 1),
            Err(HarnessError::Config(_))
        ));
        cfg.sweep.epsilons = vec![1e-1, 8e-2, 6e-2, 5e-2];
        assert!(matches!(
            sweep_epsilon(&cfg, 1),
            Err(HarnessError::Config(_))
        ));
    }
}
