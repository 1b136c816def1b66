//! `dll` — driver for paired relaxed/limit runs, convergence-rate sweeps,
//! manufactured-solution verification, and structural self-checks.
//!
//! Exit codes: 0 = everything requested passed; 1 = at least one gate
//! failed; 2 = the computation itself could not be carried out.

use clap::{Parser, Subcommand};
use dll_harness::background::with_step_retries;
use dll_harness::checkpoint::{load_pair, save_pair};
use dll_harness::checks::{divergence_tracking_check, eos_checks, identity_checks};
use dll_harness::ic::default_background_ic;
use dll_harness::mms::mms_verify;
use dll_harness::pair::{run_pair, run_pair_from, PairOutcome};
use dll_harness::residual::residual_study;
use dll_harness::sweep::{series_file_name, sweep_epsilon, write_sweep_outputs};
use dll_harness::{parallel, CheckItem, Config, HarnessError};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "dll",
    version,
    about = "Relaxed plasma / limit MHD trajectory pairs on the periodic box"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one trajectory pair at a single relaxation parameter.
    Run {
        /// TOML configuration; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Relaxation parameter ε (ignored when resuming: the checkpoint's
        /// stored value is authoritative).
        #[arg(long, default_value_t = 5e-2)]
        epsilon: f64,
        /// Output directory (overrides the configuration).
        #[arg(long)]
        out: Option<PathBuf>,
        /// RNG seed override for the well-prepared perturbation.
        #[arg(long)]
        seed: Option<u64>,
        /// Also certify the pair against the coupled error system under
        /// dt-halving.
        #[arg(long)]
        residual_study: bool,
        /// Write the final paired states to this file.
        #[arg(long)]
        checkpoint_out: Option<PathBuf>,
        /// Resume from a paired checkpoint instead of fresh initial data.
        #[arg(long)]
        checkpoint_in: Option<PathBuf>,
    },
    /// Sweep the relaxation-parameter ladder and fit convergence rates.
    Sweep {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (capped by DLL_THREADS and the task count).
        #[arg(long, default_value_t = 4)]
        workers: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Verify both integrators against a manufactured solution.
    Mms {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Structural self-checks: spectral identities, coefficient matrices,
    /// closure coefficients, and solenoidal-field tracking.
    Check {
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn load_config(path: &Option<PathBuf>) -> Result<Config, HarnessError> {
    match path {
        Some(p) => Config::load(p),
        None => Config::from_toml(""),
    }
}

fn print_items(items: &[CheckItem]) -> bool {
    let mut all = true;
    for item in items {
        println!("{}", item.line());
        all &= item.pass;
    }
    all
}

fn run_summary(out: &PairOutcome, halvings: u32) {
    println!(
        "epsilon {:e}  dt {:.6e}  steps {}  step-halvings {}",
        out.epsilon, out.dt, out.steps, halvings
    );
    println!(
        "sup |W|_0 {:.6e}  sup |W|_2 {:.6e}  sup |W|_4 {:.6e}",
        out.sup_norm_s0, out.sup_norm_s2, out.sup_norm_s4
    );
    println!(
        "sup sqrt(eps)|F|_0 {:.6e}  sup |F|_0 {:.6e}  damping integral {:.6e}  sup Gamma {:.6e}",
        out.sup_weighted_f, out.sup_f, out.damping_integral, out.sup_gamma
    );
}

fn write_text(dir: &Path, name: &str, text: &str) -> Result<PathBuf, HarnessError> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    std::fs::write(&path, text)?;
    Ok(path)
}

fn cmd_run(
    config: Option<PathBuf>,
    epsilon: f64,
    out: Option<PathBuf>,
    seed: Option<u64>,
    residual: bool,
    ckpt_out: Option<PathBuf>,
    ckpt_in: Option<PathBuf>,
) -> Result<bool, HarnessError> {
    let mut cfg = load_config(&config)?;
    if let Some(s) = seed {
        cfg.ic.seed = s;
    }
    if let Some(dir) = &out {
        cfg.output.dir = dir.to_string_lossy().into_owned();
    }
    let out_dir = PathBuf::from(&cfg.output.dir);

    let (outcome, plan, bg_final) = match &ckpt_in {
        Some(path) => {
            let ck = load_pair(path, Some(&cfg.physics_hash()))?;
            let remaining = cfg.sweep.t_final - ck.em.t;
            if !(remaining > 0.0) {
                return Err(HarnessError::Config(format!(
                    "checkpoint time {} is already at or past the horizon {}",
                    ck.em.t, cfg.sweep.t_final
                )));
            }
            println!(
                "resuming at t = {} with epsilon {:e} ({} of horizon left)",
                ck.em.t, ck.epsilon, remaining
            );
            let em0 = ck.em;
            let mhd0 = ck.mhd;
            let ((outcome, bg_final), plan) =
                with_step_retries(&cfg, &mhd0, remaining, 3, |bg| {
                    let o = run_pair_from(&cfg, bg, ck.epsilon, em0.clone(), false)?;
                    Ok((o, bg.final_state().clone()))
                })?;
            (outcome, plan, bg_final)
        }
        None => {
            let eos = cfg.eos_spec()?;
            let start = default_background_ic(cfg.grid_spec()?, &eos, cfg.ic.amp)?;
            let ((outcome, bg_final), plan) =
                with_step_retries(&cfg, &start, cfg.sweep.t_final, 3, |bg| {
                    let o = run_pair(&cfg, bg, epsilon, false)?;
                    Ok((o, bg.final_state().clone()))
                })?;
            (outcome, plan, bg_final)
        }
    };

    run_summary(&outcome, plan.halvings);
    let path = write_text(&out_dir, &series_file_name(outcome.epsilon), &outcome.csv)?;
    println!("series written to {}", path.display());

    if let Some(path) = &ckpt_out {
        save_pair(path, &outcome.final_em, &bg_final, outcome.epsilon, &cfg.physics_hash())?;
        println!("checkpoint written to {}", path.display());
    }

    let mut ok = true;
    if residual {
        let study = residual_study(&cfg, outcome.epsilon)?;
        println!(
            "residual study at epsilon {:e}: coarse snapshot spacing {:.3e} (step-halvings {})",
            study.epsilon, study.coarse_dt, study.base_halvings
        );
        ok &= print_items(&study.items);
    }
    Ok(ok)
}

fn cmd_sweep(
    config: Option<PathBuf>,
    out: Option<PathBuf>,
    workers: usize,
    seed: Option<u64>,
) -> Result<bool, HarnessError> {
    let mut cfg = load_config(&config)?;
    if let Some(s) = seed {
        cfg.ic.seed = s;
    }
    if let Some(dir) = &out {
        cfg.output.dir = dir.to_string_lossy().into_owned();
    }
    let workers = parallel::effective_workers(workers);
    println!("sweeping {} relaxation parameters on {workers} worker(s)", cfg.sweep.epsilons.len());

    let result = sweep_epsilon(&cfg, workers)?;
    for fit in result.fits.named() {
        println!(
            "slope {:>18}: {:+.4}  (interval [{:+.4}, {:+.4}], {} points, {} excluded)",
            fit.0, fit.1.slope, fit.1.lo, fit.1.hi, fit.1.n_used, fit.1.excluded
        );
    }
    for w in &result.warnings {
        println!("warning: {w}");
    }
    let ok = print_items(&result.gates);
    let paths = write_sweep_outputs(Path::new(&cfg.output.dir), &result)?;
    for p in paths {
        println!("wrote {}", p.display());
    }
    Ok(ok)
}

fn cmd_mms(config: Option<PathBuf>, out: Option<PathBuf>) -> Result<bool, HarnessError> {
    let mut cfg = load_config(&config)?;
    if let Some(dir) = &out {
        cfg.output.dir = dir.to_string_lossy().into_owned();
    }
    let outcome = mms_verify(&cfg)?;
    let ok = print_items(&outcome.items);
    let path = write_text(Path::new(&cfg.output.dir), "mms_report.csv", &outcome.csv)?;
    println!("wrote {}", path.display());
    Ok(ok)
}

fn cmd_check(config: Option<PathBuf>) -> Result<bool, HarnessError> {
    let cfg = load_config(&config)?;
    let mut items = identity_checks(&cfg)?;
    items.extend(eos_checks(&cfg)?);
    items.extend(divergence_tracking_check(&cfg)?);
    Ok(print_items(&items))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Run {
            config,
            epsilon,
            out,
            seed,
            residual_study,
            checkpoint_out,
            checkpoint_in,
        } => cmd_run(
            config,
            epsilon,
            out,
            seed,
            residual_study,
            checkpoint_out,
            checkpoint_in,
        ),
        Cmd::Sweep {
            config,
            out,
            workers,
            seed,
        } => cmd_sweep(config, out, workers, seed),
        Cmd::Mms { config, out } => cmd_mms(config, out),
        Cmd::Check { config } => cmd_check(config),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
