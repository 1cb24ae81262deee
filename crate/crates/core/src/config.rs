//! Run configuration. TOML, every key optional, unknown keys rejected.

use crate::algebra::{Couplings, ElectricVariant};
use crate::compiler::{compile_step, Mode, StepSpec};
use crate::error::{Result, SimError};
use crate::lattice::{build_layout, AncillaPolicy, LatticeGeometry, RegisterLayout};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationConfig {
    pub lx: usize,
    pub ly: usize,
    pub n: usize,
    pub lambda_e: f64,
    pub lambda_b: f64,
    pub lambda_gm: f64,
    pub mass: f64,
    /// total evolution time
    pub t: f64,
    pub n_steps: usize,
    pub order: u8,
    pub mode: Mode,
    pub ancilla_policy: AncillaPolicy,
    pub h_e_variant: ElectricVariant,
    pub theta: f64,
    pub theta_prime: f64,
    pub seed: u64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            lx: 2,
            ly: 2,
            n: 3,
            lambda_e: 1.0,
            lambda_b: 1.0,
            lambda_gm: 1.0,
            mass: 1.0,
            t: 1.0,
            n_steps: 20,
            order: 2,
            mode: Mode::Choreography,
            ancilla_policy: AncillaPolicy::PerPlaquette,
            h_e_variant: ElectricVariant::Group,
            theta: 0.0,
            theta_prime: 0.0,
            seed: 0,
        }
    }
}

impl SimulationConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: SimulationConfig = toml::from_str(text).map_err(|e| SimError::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| SimError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("plain struct always serializes")
    }

    pub fn couplings(&self) -> Couplings {
        Couplings {
            lambda_e: self.lambda_e,
            lambda_b: self.lambda_b,
            lambda_gm: self.lambda_gm,
            mass: self.mass,
            electric: self.h_e_variant,
        }
    }

    pub fn layout(&self) -> Result<RegisterLayout> {
        build_layout(LatticeGeometry::new(self.lx, self.ly)?, self.n, self.ancilla_policy)
    }

    pub fn step_spec(&self) -> StepSpec {
        StepSpec::new(self.t / self.n_steps as f64, self.mode, self.order).with_phases(self.theta, self.theta_prime)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(SimError::Config(m));
        let reals = [
            ("lambda_e", self.lambda_e),
            ("lambda_b", self.lambda_b),
            ("lambda_gm", self.lambda_gm),
            ("mass", self.mass),
            ("theta", self.theta),
            ("theta_prime", self.theta_prime),
        ];
        if let Some((k, v)) = reals.iter().find(|(_, v)| !v.is_finite()) {
            return bad(format!("{k} must be finite, got {v}"));
        }
        if !(self.t.is_finite() && self.t >= 0.0) {
            return bad(format!("t must be finite and nonnegative, got {}", self.t));
        }
        if self.n_steps == 0 {
            return bad("n_steps must be at least 1".into());
        }
        if !matches!(self.order, 1 | 2) {
            return bad(format!("order must be 1 or 2, got {}", self.order));
        }
        if self.h_e_variant == ElectricVariant::Z3Implementation && self.n != 3 {
            return bad(format!("h_e_variant z3-implementation needs n = 3, got {}", self.n));
        }
        let layout = self.layout().map_err(|e| SimError::Config(e.to_string()))?;
        if layout.total_dim() > 1 << 26 {
            return bad(format!("state dimension {} is beyond what a dense state vector can hold here", layout.total_dim()));
        }
        // catches ancilla policies that cannot host the chosen mode
        compile_step(&layout, &self.couplings(), &self.step_spec()).map_err(|e| SimError::Config(e.to_string()))?;
        Ok(())
    }
}
