//! TOML configuration shared by every command.
//!
//! Every section has defaults, so an empty document is a valid configuration;
//! unknown keys are rejected. `configs/default.toml` spells the defaults out.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::allocator::{PolicyKind, PolicyName};
use crate::channel::CellConfig;
use crate::error::{Error, Result};
use crate::predictor::LearningParams;
use crate::synth::{default_demands, default_personas, find_persona, DemandTable, GeneratorConfig, Persona, QosSampling};
use crate::zot::SatisfactionLevel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationSection {
    pub duration_s: f64,
    pub ts_len_s: f64,
    pub s_min: SatisfactionLevel,
    pub policy: PolicyName,
    /// Leading period excluded from satisfaction averages.
    pub warmup_s: f64,
    /// Persona id of every production user; user ids are the positions.
    pub users: Vec<u32>,
}

impl Default for SimulationSection {
    fn default() -> Self {
        SimulationSection {
            duration_s: 86_400.0,
            ts_len_s: 1.0,
            s_min: SatisfactionLevel::new(4).expect("valid level"),
            policy: PolicyName::Personalized,
            warmup_s: 600.0,
            users: vec![0, 1, 2],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DevelopmentSection {
    pub users_per_persona: u32,
    pub duration_s: f64,
    pub sampling: QosSampling,
    /// Train on k-means clusters instead of the generator's persona labels.
    pub withhold_personas: bool,
    pub num_clusters: usize,
}

impl Default for DevelopmentSection {
    fn default() -> Self {
        DevelopmentSection {
            users_per_persona: 5,
            duration_s: 86_400.0,
            sampling: QosSampling::Uniform,
            withhold_personas: false,
            num_clusters: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub seed: u64,
    pub simulation: SimulationSection,
    pub development: DevelopmentSection,
    pub cell: CellConfig,
    pub learning: LearningParams,
    pub generator: GeneratorConfig,
    pub demands: DemandTable,
    pub personas: Vec<Persona>,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            seed: 1,
            simulation: SimulationSection::default(),
            development: DevelopmentSection::default(),
            cell: CellConfig::default(),
            learning: LearningParams::default(),
            generator: GeneratorConfig::default(),
            demands: default_demands(),
            personas: default_personas(),
        }
    }
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Config = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Config::from_toml(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_toml()?).map_err(|e| Error::io(path, e))
    }

    pub fn policy(&self) -> PolicyKind {
        self.simulation.policy.with_s_min(self.simulation.s_min)
    }

    pub fn num_slots(&self) -> u64 {
        (self.simulation.duration_s / self.simulation.ts_len_s).floor() as u64
    }

    pub fn validate(&self) -> Result<()> {
        let sim = &self.simulation;
        let bad = |msg: String| Err(Error::Config(msg));
        if !(sim.ts_len_s > 0.0 && sim.ts_len_s.is_finite()) {
            return bad(format!("ts_len_s must be positive, got {}", sim.ts_len_s));
        }
        if !(sim.duration_s >= sim.ts_len_s && sim.duration_s.is_finite()) {
            return bad(format!("duration_s {} shorter than one slot", sim.duration_s));
        }
        if sim.warmup_s.is_nan() || sim.warmup_s < 0.0 {
            return bad(format!("warmup_s must be non-negative, got {}", sim.warmup_s));
        }
        if sim.users.is_empty() {
            return bad("at least one production user is required".into());
        }
        if sim.users.len() != self.cell.num_users as usize {
            return bad(format!(
                "cell.num_users is {} but {} users are listed",
                self.cell.num_users,
                sim.users.len()
            ));
        }
        if self.personas.is_empty() {
            return bad("at least one persona is required".into());
        }
        for (i, p) in self.personas.iter().enumerate() {
            p.validate()?;
            if self.personas[..i].iter().any(|q| q.id == p.id) {
                return bad(format!("duplicate persona id {}", p.id));
            }
            for app in p.applications() {
                self.demands.application_demand(app)?;
            }
        }
        for &u in &sim.users {
            find_persona(&self.personas, u)?;
        }
        let dev = &self.development;
        if dev.users_per_persona == 0 {
            return bad("development.users_per_persona must be at least 1".into());
        }
        if !(dev.duration_s >= sim.ts_len_s && dev.duration_s.is_finite()) {
            return bad(format!("development.duration_s {} shorter than one slot", dev.duration_s));
        }
        if let QosSampling::DemandFraction(f) = dev.sampling {
            if !(0.0..=1.0).contains(&f) {
                return bad(format!("sampling fraction {f} outside [0, 1]"));
            }
        }
        if dev.num_clusters == 0 {
            return bad("development.num_clusters must be at least 1".into());
        }
        self.cell.validate()?;
        self.learning.validate()?;
        self.generator.validate()?;
        self.demands.validate()
    }
}
