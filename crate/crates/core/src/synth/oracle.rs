use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{ContextRecord, DemandTable, Persona};
use crate::error::{Error, Result};
use crate::rng::{self, Purpose};
use crate::zot::ZoTProfile;

/// Fractions of `q_a5` at which `q_a2..=q_a4` sit.
pub type ThresholdFractions = [f64; 3];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeneratorConfig {
    /// `q_a5 / demand` at zero tightness.
    pub min_frac: f64,
    pub threshold_fractions: ThresholdFractions,
    pub mean_session_s: f64,
    /// Bound on the dwell jitter around an anchor, metres per axis.
    pub dwell_jitter_m: f64,
    /// Per-slot jitter step while dwelling, metres per axis.
    pub dwell_step_m: f64,
    /// Time of day of slot 0, seconds.
    pub start_time_s: f64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            min_frac: 0.4,
            threshold_fractions: [0.25, 0.5, 0.75],
            mean_session_s: 300.0,
            dwell_jitter_m: 2.0,
            dwell_step_m: 0.25,
            start_time_s: 0.0,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.min_frac) {
            return Err(Error::Config("generator.min_frac must be in [0, 1]".into()));
        }
        let f = self.threshold_fractions;
        if !(0.0 < f[0] && f[0] <= f[1] && f[1] <= f[2] && f[2] <= 1.0) {
            return Err(Error::Config("generator.threshold_fractions must be increasing within (0, 1]".into()));
        }
        if !(self.mean_session_s >= 0.0 && self.dwell_jitter_m >= 0.0 && self.dwell_step_m >= 0.0) {
            return Err(Error::Config("generator session/jitter parameters must be >= 0".into()));
        }
        if !self.start_time_s.is_finite() {
            return Err(Error::Config("generator.start_time_s must be finite".into()));
        }
        Ok(())
    }
}

/// True zone of tolerance of a user of `persona` in context `ctx`.
///
/// `q_a5 = demand * (min_frac + (1 - min_frac) * tightness)` plus Gaussian
/// jitter drawn from a stream keyed by `(seed, persona, slot)`, clamped to
/// `[0, demand]`; lower thresholds are fixed fractions of `q_a5`.
pub fn ground_truth_profile(
    persona: &Persona,
    ctx: &ContextRecord,
    demands: &DemandTable,
    gen: &GeneratorConfig,
    seed: u64,
) -> Result<ZoTProfile> {
    let demand = demands.application_demand(ctx.application)?;
    let tightness = persona.tolerance.tightness(ctx.location, ctx.application, ctx.phase());
    let mut q5 = demand * (gen.min_frac + (1.0 - gen.min_frac) * tightness);
    if persona.tolerance_noise_std > 0.0 {
        let mut rng = rng::slot_stream(seed, persona.id as u64, Purpose::Tolerance, ctx.ts_index);
        q5 += Normal::new(0.0, persona.tolerance_noise_std)
            .expect("validated std")
            .sample(&mut rng);
    }
    let q5 = q5.clamp(0.0, demand);
    let f = gen.threshold_fractions;
    ZoTProfile::new(demand, [0.0, f[0] * q5, f[1] * q5, f[2] * q5, q5])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::Geometry;
    use crate::synth::{
        default_demands, default_personas, generate_trace, Application, DayPhase, LocationCategory, ToleranceOverride,
    };
    use rand::{Rng, SeedableRng};

    fn ctx(app: Application, location: LocationCategory) -> ContextRecord {
        ContextRecord {
            ts_index: 3,
            time_of_day: 3600.0,
            cell: (50, 50),
            position: (0.0, 0.0),
            location,
            speed: 0.0,
            application: app,
        }
    }

    fn pinned(tightness: f64) -> Persona {
        let mut p = default_personas().remove(0);
        p.tolerance_noise_std = 0.0;
        p.tolerance.overrides.push(ToleranceOverride {
            location: LocationCategory::Home,
            application: Application::Video,
            phase: DayPhase::Night,
            tightness,
        });
        p
    }

    #[test]
    fn zero_tolerance_at_full_tightness() {
        let p = pinned(1.0);
        let prof = ground_truth_profile(&p, &ctx(Application::Video, LocationCategory::Home), &default_demands(), &GeneratorConfig::default(), 1).unwrap();
        assert_eq!(prof.adequate()[4], prof.qos_demand());
    }

    #[test]
    fn loose_tolerance_matches_formula() {
        let p = pinned(0.0);
        let prof = ground_truth_profile(&p, &ctx(Application::Video, LocationCategory::Home), &default_demands(), &GeneratorConfig::default(), 1).unwrap();
        assert!((prof.adequate()[4] - 2.0).abs() < 1e-12);
        assert_eq!(prof.adequate(), &[0.0, 0.5, 1.0, 1.5, 2.0]);
    }

    #[test]
    fn unknown_application_errors() {
        let p = default_personas().remove(0);
        let demands = crate::synth::DemandTable::new([(Application::Voice, 0.1)].into_iter().collect()).unwrap();
        let r = ground_truth_profile(&p, &ctx(Application::Video, LocationCategory::Home), &demands, &GeneratorConfig::default(), 1);
        assert!(matches!(r, Err(Error::UnknownApplication(Application::Video))));
    }

    #[test]
    fn deterministic_given_seed() {
        let p = default_personas().remove(1);
        let c = ctx(Application::Voice, LocationCategory::Work);
        let g = GeneratorConfig::default();
        let a = ground_truth_profile(&p, &c, &default_demands(), &g, 44).unwrap();
        let b = ground_truth_profile(&p, &c, &default_demands(), &g, 44).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn profiles_always_valid_over_random_draws() {
        let personas = default_personas();
        let demands = default_demands();
        let geometry = Geometry::new(500.0, 100);
        let traces: Vec<_> = personas
            .iter()
            .map(|p| generate_trace(p, &geometry, &GeneratorConfig::default(), 86_400.0, 1.0, 3).unwrap())
            .collect();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for _ in 0..10_000 {
            let pi = rng.random_range(0..personas.len());
            let mut p = personas[pi].clone();
            p.tolerance_noise_std = rng.random_range(0.0..2.0);
            p.tolerance.base = rng.random_range(-0.5..1.5);
            let c = traces[pi][rng.random_range(0..traces[pi].len())];
            let prof = ground_truth_profile(&p, &c, &demands, &GeneratorConfig::default(), rng.random()).unwrap();
            assert!(ZoTProfile::new(prof.qos_demand(), *prof.adequate()).is_ok());
        }
    }

    #[test]
    fn personas_separable_on_shared_context() {
        // Identical (location, app, phase) under different tolerance params
        // yields distinct thresholds when noise is off.
        let mut personas = default_personas();
        let c = ctx(Application::Video, LocationCategory::Work);
        let q: Vec<f64> = personas
            .iter_mut()
            .map(|p| {
                p.tolerance_noise_std = 0.0;
                ground_truth_profile(p, &c, &default_demands(), &GeneratorConfig::default(), 0).unwrap().adequate()[4]
            })
            .collect();
        for i in 0..q.len() {
            for j in i + 1..q.len() {
                assert_ne!(q[i], q[j], "personas {i} and {j}");
            }
        }
    }
}
