//! Run configuration: TOML schema, validation, and assembly of the
//! controller stack a closed-loop experiment needs.
//!
//! Unknown keys are rejected so a typo in a config file fails loudly
//! instead of silently running with a default.

use nalgebra::DVector;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::mpc::{CostWeights, PlantModel, SearchConfig, TerminalIngredients};
use crate::scheduler::TriggerConfig;
use crate::sim::cart::{self, CartParams};
use crate::sim::profiles::{DisturbanceProfile, ProfileBounds, ProfileKind, build_profile};
use crate::uncertainty::UncertaintyModel;

/// Estimation on or off.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Set-membership estimation drives the penalty and the scenario sets.
    Adaptive,
    /// The controller only ever uses the prior parameter set.
    Robust,
}

/// Disturbance realization: a named generator or explicit sequences.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum ProfileSpec {
    Named(ProfileKind),
    Inline { v: Vec<f64>, d: Vec<f64> },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlantSection {
    /// Only the cart benchmark is wired up.
    pub kind: String,
    pub m: f64,
    pub l: f64,
    pub h: f64,
    pub t: f64,
    /// Per-step drift bound on the unknown parameter.
    pub drift_rate: f64,
}

impl Default for PlantSection {
    fn default() -> Self {
        let p = CartParams::default();
        PlantSection {
            kind: "cart".into(),
            m: p.m,
            l: p.l,
            h: p.h,
            t: p.t,
            drift_rate: cart::V_RATE,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MpcSection {
    /// Prediction horizon.
    pub horizon: usize,
}

impl Default for MpcSection {
    fn default() -> Self {
        MpcSection { horizon: 6 }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchSection {
    pub starts: usize,
    pub max_iters: usize,
    pub tol: f64,
    pub branch_depth: usize,
    pub max_leaves: usize,
}

impl Default for SearchSection {
    fn default() -> Self {
        SearchSection {
            starts: 8,
            max_iters: 2000,
            tol: 1e-6,
            branch_depth: 2,
            max_leaves: 4096,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SchedulerSection {
    pub h_max: usize,
    pub beta0: f64,
    pub beta_max: f64,
}

impl Default for SchedulerSection {
    fn default() -> Self {
        SchedulerSection {
            h_max: 5,
            beta0: 1.1,
            beta_max: 5.0,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimSection {
    pub x0: Vec<f64>,
    pub steps: usize,
    pub profile: ProfileSpec,
    pub mode: Mode,
    pub seed: u64,
    /// Directory trace and metrics files are written into.
    pub out_dir: Option<String>,
}

impl Default for SimSection {
    fn default() -> Self {
        SimSection {
            x0: vec![1.0, 1.0],
            steps: 60,
            profile: ProfileSpec::Named(ProfileKind::Sinusoid),
            mode: Mode::Adaptive,
            seed: 0,
            out_dir: None,
        }
    }
}

/// Full experiment description. `Default` is the cart benchmark.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub plant: PlantSection,
    pub mpc: MpcSection,
    pub search: SearchSection,
    pub scheduler: SchedulerSection,
    pub sim: SimSection,
}

impl SimConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: SimConfig =
            toml::from_str(text).map_err(|e| Error::InvalidConfig(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.plant.kind != "cart" {
            return Err(Error::InvalidConfig(format!(
                "unknown plant kind '{}'",
                self.plant.kind
            )));
        }
        if !(self.plant.drift_rate >= 0.0 && self.plant.drift_rate.is_finite()) {
            return Err(Error::InvalidConfig("drift_rate must be finite and >= 0".into()));
        }
        if self.sim.steps == 0 {
            return Err(Error::InvalidConfig("steps must be at least 1".into()));
        }
        if self.sim.x0.len() != 2 {
            return Err(Error::InvalidConfig(format!(
                "cart needs a 2-dimensional x0, got {}",
                self.sim.x0.len()
            )));
        }
        if self.scheduler.h_max > self.mpc.horizon {
            return Err(Error::InvalidConfig(format!(
                "h_max {} exceeds the horizon {}",
                self.scheduler.h_max, self.mpc.horizon
            )));
        }
        if let ProfileSpec::Inline { v, d } = &self.sim.profile {
            let need = self.sim.steps + 1;
            if v.len() < need || d.len() < need {
                return Err(Error::InvalidConfig(format!(
                    "inline profile needs at least {need} entries, got v: {}, d: {}",
                    v.len(),
                    d.len()
                )));
            }
            let b = self.profile_bounds();
            for t in 0..need {
                if v[t].abs() > b.v_bound + 1e-12 {
                    return Err(Error::InvalidConfig(format!(
                        "inline v[{t}] = {} violates the magnitude bound",
                        v[t]
                    )));
                }
                if t + 1 < need && (v[t + 1] - v[t]).abs() > b.v_rate + 1e-12 {
                    return Err(Error::InvalidConfig(format!(
                        "inline v rate bound violated between {t} and {}",
                        t + 1
                    )));
                }
                if d[t].abs() > b.d_bound + 1e-12 {
                    return Err(Error::InvalidConfig(format!(
                        "inline d[{t}] = {} violates the magnitude bound",
                        d[t]
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn cart_params(&self) -> CartParams {
        CartParams {
            m: self.plant.m,
            l: self.plant.l,
            h: self.plant.h,
            t: self.plant.t,
        }
    }

    pub fn x0(&self) -> DVector<f64> {
        DVector::from_vec(self.sim.x0.clone())
    }

    pub fn profile_bounds(&self) -> ProfileBounds {
        ProfileBounds {
            v_bound: cart::V_BOUND,
            v_rate: self.plant.drift_rate,
            d_bound: cart::D_BOUND,
        }
    }

    /// Realize the disturbance sequences for this run.
    pub fn resolve_profile(&self, seed: u64) -> DisturbanceProfile {
        match &self.sim.profile {
            ProfileSpec::Named(kind) => {
                build_profile(*kind, self.sim.steps, seed, &self.profile_bounds())
            }
            ProfileSpec::Inline { v, d } => DisturbanceProfile {
                v: v.clone(),
                d: d.clone(),
                v_rate_clips: 0,
                d_magnitude_clips: 0,
            },
        }
    }
}

/// Everything the closed loop needs, built once per run.
pub struct Setup {
    pub plant: PlantModel,
    pub weights: CostWeights,
    pub term: TerminalIngredients,
    pub model: UncertaintyModel,
    pub trigger: TriggerConfig,
    pub search: SearchConfig,
    pub n: usize,
}

pub fn setup(cfg: &SimConfig) -> Result<Setup> {
    cfg.validate()?;
    let params = cfg.cart_params();
    let plant = cart::cart_plant(&params)?;
    let weights = cart::cart_weights()?;
    let term = cart::cart_terminal()?;
    let model = cart::cart_uncertainty(cfg.plant.drift_rate)?;

    // The penalty schedule is anchored to the width of the initial
    // parameter set; in robust mode the cap equals the base value so the
    // penalty never moves.
    let xi0 = model.prior.interval_hull().diagonal();
    let beta_max = match cfg.sim.mode {
        Mode::Adaptive => cfg.scheduler.beta_max,
        Mode::Robust => cfg.scheduler.beta0,
    };
    let trigger = TriggerConfig::new(cfg.scheduler.h_max, cfg.scheduler.beta0, beta_max, xi0)?;

    let search = SearchConfig {
        starts: cfg.search.starts,
        max_iters: cfg.search.max_iters,
        tol: cfg.search.tol,
        branch_depth: cfg.search.branch_depth,
        max_leaves: cfg.search.max_leaves,
        seed: cfg.sim.seed,
    };

    Ok(Setup {
        plant,
        weights,
        term,
        model,
        trigger,
        search,
        n: cfg.mpc.horizon,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;

    #[test]
    fn default_config_is_the_benchmark() {
        let cfg = SimConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.mpc.horizon, 6);
        assert_eq!(cfg.scheduler.h_max, 5);
        assert_eq!(cfg.scheduler.beta0, 1.1);
        assert_eq!(cfg.sim.steps, 60);
        assert_eq!(cfg.x0(), dvector![1.0, 1.0]);
    }

    #[test]
    fn minimal_toml_uses_defaults() {
        let cfg = SimConfig::from_toml_str("").unwrap();
        assert_eq!(cfg.mpc.horizon, 6);
        assert!(matches!(cfg.sim.mode, Mode::Adaptive));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = SimConfig::from_toml_str("[sim]\nstep_count = 60\n").unwrap_err();
        assert!(matches!(err, Error::InvalidConfig(_)));
    }

    #[test]
    fn sections_override_defaults() {
        let cfg = SimConfig::from_toml_str(
            "[sim]\nsteps = 10\nmode = \"robust\"\nseed = 9\n\n[scheduler]\nh_max = 3\n",
        )
        .unwrap();
        assert_eq!(cfg.sim.steps, 10);
        assert_eq!(cfg.sim.seed, 9);
        assert!(matches!(cfg.sim.mode, Mode::Robust));
        assert_eq!(cfg.scheduler.h_max, 3);
    }

    #[test]
    fn trigger_cap_above_horizon_is_rejected() {
        let err = SimConfig::from_toml_str("[scheduler]\nh_max = 7\n").unwrap_err();
        assert!(matches!(err, Error::InvalidConfig(_)));
    }

    #[test]
    fn inline_profile_is_validated() {
        let ok = SimConfig::from_toml_str(
            "[sim]\nsteps = 2\nprofile = { v = [0.0, 0.005, 0.01], d = [0.05, -0.05, 0.0] }\n",
        )
        .unwrap();
        let p = ok.resolve_profile(0);
        assert_eq!(p.v, vec![0.0, 0.005, 0.01]);

        let bad_rate = SimConfig::from_toml_str(
            "[sim]\nsteps = 2\nprofile = { v = [0.0, 0.05, 0.01], d = [0.0, 0.0, 0.0] }\n",
        );
        assert!(bad_rate.is_err());

        let too_short =
            SimConfig::from_toml_str("[sim]\nsteps = 2\nprofile = { v = [0.0], d = [0.0] }\n");
        assert!(too_short.is_err());
    }

    #[test]
    fn robust_mode_pins_the_penalty_cap() {
        let mut cfg = SimConfig::default();
        cfg.sim.mode = Mode::Robust;
        let s = setup(&cfg).unwrap();
        assert_eq!(s.trigger.beta_max, cfg.scheduler.beta0);
        // Initial width of the parameter set: the prior interval [-0.15, 0.15].
        assert!((s.trigger.xi0 - 0.3).abs() < 1e-12);
    }
}
