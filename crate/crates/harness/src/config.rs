//! Experiment configuration: a TOML tree with sections `[grid]`, `[eos]`,
//! `[sweep]`, `[ic]`, `[output]`. Unknown keys are rejected. Every output
//! file echoes the SHA-256 hash of the canonical serialized configuration so
//! mixed-config aggregation can be refused.

use crate::HarnessError;
use dll_core::{EosClosure, TorusGrid};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    /// Modes per active axis; power of two ≥ 8.
    pub n: usize,
    /// Spatial dimensions carrying nontrivial modes (1–3).
    pub active_dims: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection {
            n: 64,
            active_dims: 2,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EosSection {
    pub gamma: f64,
    pub p_floor: f64,
    pub s_floor: f64,
}

impl Default for EosSection {
    fn default() -> Self {
        EosSection {
            gamma: 5.0 / 3.0,
            p_floor: 1e-8,
            s_floor: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    /// Relaxation parameters, strictly decreasing.
    pub epsilons: Vec<f64>,
    /// Horizon T₀.
    pub t_final: f64,
    /// Courant safety factor in (0, 1].
    pub cfl: f64,
    /// Sobolev indices; the largest sets the initial-data normalization.
    /// Series output always reports s = 0, 2, 4, which must be present.
    pub s_list: Vec<f64>,
    /// Error-state evaluation cadence in solver steps.
    pub snapshot_every: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            epsilons: vec![1e-1, 5e-2, 2e-2, 1e-2, 5e-3, 2e-3],
            t_final: 0.5,
            cfl: 0.4,
            s_list: vec![0.0, 2.0, 4.0],
            snapshot_every: 8,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IcSection {
    /// Initial-condition recipe id; only "default" is implemented.
    pub recipe: String,
    /// Background field amplitude, < 0.5.
    pub amp: f64,
    /// L₀ scale of the well-prepared perturbation (≥ 0).
    pub perturb_amp: f64,
    /// RNG seed for the perturbation shapes.
    pub seed: u64,
}

impl Default for IcSection {
    fn default() -> Self {
        IcSection {
            recipe: "default".to_string(),
            amp: 0.1,
            perturb_amp: 1.0,
            seed: 20260819,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: String,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: "out".to_string(),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub grid: GridSection,
    pub eos: EosSection,
    pub sweep: SweepSection,
    pub ic: IcSection,
    pub output: OutputSection,
}

impl Config {
    /// Parse and validate a TOML document.
    pub fn from_toml(text: &str) -> Result<Config, HarnessError> {
        let cfg: Config =
            toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Load from a file path.
    pub fn load(path: &std::path::Path) -> Result<Config, HarnessError> {
        let text = std::fs::read_to_string(path)?;
        Config::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        self.grid_spec()?;
        self.eos_spec()?;
        let sw = &self.sweep;
        if sw.epsilons.is_empty() {
            return Err(HarnessError::Config("epsilons must be nonempty".into()));
        }
        for &e in &sw.epsilons {
            if !(e > 0.0 && e.is_finite()) {
                return Err(HarnessError::Config(format!(
                    "epsilons must be positive and finite (got {e})"
                )));
            }
        }
        if !sw.epsilons.windows(2).all(|w| w[0] > w[1]) {
            return Err(HarnessError::Config(
                "epsilons must be strictly decreasing".into(),
            ));
        }
        if !(sw.t_final > 0.0 && sw.t_final.is_finite()) {
            return Err(HarnessError::Config(format!(
                "t_final must be positive (got {})",
                sw.t_final
            )));
        }
        if !(sw.cfl > 0.0 && sw.cfl <= 1.0) {
            return Err(HarnessError::Config(format!(
                "cfl must lie in (0, 1] (got {})",
                sw.cfl
            )));
        }
        for &s in &sw.s_list {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(HarnessError::Config(format!(
                    "s_list entries must be nonnegative (got {s})"
                )));
            }
        }
        for required in [0.0, 2.0, 4.0] {
            if !sw.s_list.contains(&required) {
                return Err(HarnessError::Config(format!(
                    "s_list must contain {required} (series output reports s = 0, 2, 4)"
                )));
            }
        }
        if sw.snapshot_every == 0 {
            return Err(HarnessError::Config("snapshot_every must be ≥ 1".into()));
        }
        if self.ic.recipe != "default" {
            return Err(HarnessError::Config(format!(
                "unknown ic recipe {:?} (only \"default\" is implemented)",
                self.ic.recipe
            )));
        }
        if !(self.ic.amp.abs() < 0.5) {
            return Err(HarnessError::Config(format!(
                "ic amp must satisfy |amp| < 0.5 (got {})",
                self.ic.amp
            )));
        }
        if !(self.ic.perturb_amp >= 0.0 && self.ic.perturb_amp.is_finite()) {
            return Err(HarnessError::Config(format!(
                "perturb_amp must be ≥ 0 (got {})",
                self.ic.perturb_amp
            )));
        }
        Ok(())
    }

    pub fn grid_spec(&self) -> Result<TorusGrid, HarnessError> {
        TorusGrid::new(self.grid.n, self.grid.active_dims)
            .map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn eos_spec(&self) -> Result<EosClosure, HarnessError> {
        EosClosure::new(self.eos.gamma, self.eos.p_floor, self.eos.s_floor)
            .map_err(|e| HarnessError::Config(e.to_string()))
    }

    /// Largest Sobolev index: the initial-data normalization index.
    pub fn s_max(&self) -> f64 {
        self.sweep
            .s_list
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// SHA-256 of the canonical TOML serialization; echoed in every output
    /// file so mixed-config aggregation can be detected and refused.
    pub fn hash(&self) -> String {
        let canonical = toml::to_string(self).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        format!("{digest:x}")
    }

    /// SHA-256 over only the grid and closure sections — the parts a resumed
    /// run must agree on. Horizon, ladder, seeding and output settings may
    /// all change between the writing and the resuming run.
    pub fn physics_hash(&self) -> String {
        #[derive(Serialize)]
        struct Physics<'a> {
            grid: &'a GridSection,
            eos: &'a EosSection,
        }
        let physics = Physics { grid: &self.grid, eos: &self.eos };
        let canonical = toml::to_string(&physics).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        format!("{digest:x}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        let cfg = Config::default();
        cfg.validate().unwrap();
        let text = toml::to_string(&cfg).unwrap();
        let back = Config::from_toml(&text).unwrap();
        assert_eq!(cfg.hash(), back.hash());
        assert_eq!(back.grid.n, 64);
        assert_eq!(back.sweep.epsilons.len(), 6);
        assert_eq!(cfg.s_max(), 4.0);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = "[grid]\nn = 32\nactive_dims = 2\nextra = 1\n";
        assert!(Config::from_toml(text).is_err());
        let text2 = "[mystery]\nx = 1\n";
        assert!(Config::from_toml(text2).is_err());
    }

    #[test]
    fn partial_overrides_keep_defaults() {
        let cfg = Config::from_toml("[grid]\nn = 32\n").unwrap();
        assert_eq!(cfg.grid.n, 32);
        assert_eq!(cfg.grid.active_dims, 2);
        assert_eq!(cfg.sweep.t_final, 0.5);
    }

    #[test]
    fn invariants_are_enforced() {
        let increasing = "[sweep]\nepsilons = [1e-3, 1e-2]\n";
        assert!(Config::from_toml(increasing).is_err());
        let bad_amp = "[ic]\namp = 0.5\n";
        assert!(Config::from_toml(bad_amp).is_err());
        let bad_recipe = "[ic]\nrecipe = \"vortex\"\n";
        assert!(Config::from_toml(bad_recipe).is_err());
        let no_s2 = "[sweep]\ns_list = [0.0, 4.0]\n";
        assert!(Config::from_toml(no_s2).is_err());
        let bad_n = "[grid]\nn = 48\n";
        assert!(Config::from_toml(bad_n).is_err());
    }

    #[test]
    fn hash_tracks_content() {
        let a = Config::default();
        let mut b = Config::default();
        assert_eq!(a.hash(), b.hash());
        b.ic.seed += 1;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn physics_hash_pins_grid_and_closure_only() {
        let a = Config::default();
        let mut b = Config::default();
        b.sweep.t_final *= 2.0;
        b.ic.seed += 1;
        b.output.dir = "elsewhere".to_string();
        assert_eq!(a.physics_hash(), b.physics_hash());
        assert_ne!(a.hash(), b.hash());

        let mut c = Config::default();
        c.grid.n *= 2;
        assert_ne!(a.physics_hash(), c.physics_hash());
        let mut d = Config::default();
        d.eos.gamma = 1.4;
        assert_ne!(a.physics_hash(), d.physics_hash());
    }
}
