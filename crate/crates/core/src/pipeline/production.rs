use crate::allocator::{allocate_rbs, target_rate, PolicyKind};
use crate::channel::ChannelSampler;
use crate::config::Config;
use crate::error::{Error, Result};
use crate::predictor::{preprocess, Observation, PersonaProbVector, TwoPhaseModel};
use crate::rng;
use crate::synth::{find_persona, generate_trace, ground_truth_profile, ContextRecord};
use crate::zot::{satisfaction_of, SatisfactionLevel, ZoTProfile};

use super::results::{summarize, ResultRow, RunSummary};

/// Separates production streams from development streams drawn from the same seed.
const PRODUCTION_DOMAIN: u64 = 0x5052_4f44;

/// Root seed of production user `user`; feeds its trace and tolerance jitter.
pub fn production_seed(seed: u64, user: u32) -> u64 {
    rng::combine(rng::combine(seed, PRODUCTION_DOMAIN), user as u64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TsRecord {
    pub ts_index: u64,
    pub user_id: u32,
    pub persona_id: u32,
    pub context: ContextRecord,
    pub demand: f64,
    /// Only for the personalized policy.
    pub probs: Option<PersonaProbVector>,
    pub predicted: Option<ZoTProfile>,
    pub delta_opt: f64,
    pub target_rate: f64,
    pub rbs: Vec<usize>,
    pub achieved_rate: f64,
    /// Achieved rate capped at the demand.
    pub qos_p: f64,
    pub sat_meas: SatisfactionLevel,
    pub sat_pred: Option<SatisfactionLevel>,
    pub correct: Option<bool>,
    pub feasible: bool,
}

impl TsRecord {
    pub fn row(&self, policy: PolicyKind) -> ResultRow {
        ResultRow {
            ts_index: self.ts_index,
            user_id: self.user_id,
            policy: policy.name().to_string(),
            application: self.context.application,
            location_category: self.context.location,
            delta_opt_mbps: self.delta_opt,
            target_mbps: self.target_rate,
            rbs_used: self.rbs.len(),
            qos_p_mbps: self.qos_p,
            sat_pred: self.sat_pred.map(SatisfactionLevel::value),
            sat_meas: self.sat_meas.value(),
            correct: self.correct,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ProductionRun {
    pub policy: PolicyKind,
    pub records: Vec<TsRecord>,
    pub summary: RunSummary,
    /// The model after online learning; `None` for the baseline.
    pub model: Option<TwoPhaseModel>,
}

impl ProductionRun {
    pub fn rows(&self) -> Vec<ResultRow> {
        self.records.iter().map(|r| r.row(self.policy)).collect()
    }
}

/// Runs the closed loop for `config.simulation.users` over the configured
/// duration. Contexts, tolerance jitter and channel draws depend only on
/// `seed` and the user, so runs that differ only in policy see the same world.
pub fn run_production(config: &Config, policy: PolicyKind, model: Option<&TwoPhaseModel>, seed: u64) -> Result<ProductionRun> {
    config.validate()?;
    let sim = &config.simulation;
    let mut model = match (policy, model) {
        (PolicyKind::Personalized { .. }, Some(m)) if m.is_trained() => Some(m.clone()),
        (PolicyKind::Personalized { .. }, _) => return Err(Error::Untrained),
        (PolicyKind::NonPersonalized, _) => None,
    };
    let geometry = config.cell.geometry();
    let users: Vec<(u32, &crate::synth::Persona)> = sim
        .users
        .iter()
        .enumerate()
        .map(|(u, &p)| Ok((u as u32, find_persona(&config.personas, p)?)))
        .collect::<Result<_>>()?;
    let traces: Vec<Vec<ContextRecord>> = users
        .iter()
        .map(|&(u, persona)| {
            generate_trace(persona, &geometry, &config.generator, sim.duration_s, sim.ts_len_s, production_seed(seed, u))
        })
        .collect::<Result<_>>()?;
    let mut channel = ChannelSampler::new(
        config.cell.clone(),
        rng::combine(seed, PRODUCTION_DOMAIN),
        users.len(),
    );

    let slots = traces[0].len();
    let n = users.len();
    let mut records = Vec::with_capacity(slots * n);
    for t in 0..slots {
        let contexts: Vec<&ContextRecord> = traces.iter().map(|tr| &tr[t]).collect();
        let positions: Vec<_> = contexts.iter().map(|c| c.position).collect();
        let state = channel.sample(&positions);

        let mut demands = Vec::with_capacity(n);
        let mut plans = Vec::with_capacity(n);
        for ctx in &contexts {
            let demand = config.demands.application_demand(ctx.application)?;
            let plan = match &model {
                Some(m) => {
                    let features = preprocess(ctx);
                    let probs = m.predict_persona(&features)?;
                    let profile = m.predict_profile(&features, &probs, ctx.application)?;
                    Some((features, probs, profile))
                }
                None => None,
            };
            demands.push(demand);
            plans.push(plan);
        }
        let targets: Vec<f64> = plans
            .iter()
            .zip(&demands)
            .map(|(plan, &demand)| match plan {
                Some((_, _, profile)) => target_rate(policy, profile, demand),
                None => demand,
            })
            .collect();
        let allocation = allocate_rbs(&targets, &demands, &state);

        for (u, ((&(user_id, persona), ctx), plan)) in users.iter().zip(&contexts).zip(plans).enumerate() {
            let decision = &allocation.decisions[u];
            let demand = demands[u];
            let qos_p = decision.achieved_rate.min(demand);
            let truth = ground_truth_profile(persona, ctx, &config.demands, &config.generator, production_seed(seed, user_id))?;
            let sat_meas = satisfaction_of(&truth, qos_p);
            let (probs, predicted, sat_pred, correct) = match (plan, model.as_mut()) {
                (Some((features, probs, profile)), Some(m)) => {
                    let outcome = m.online_update(&Observation {
                        features: &features,
                        probs: &probs,
                        application: ctx.application,
                        qos_p,
                        measured: sat_meas,
                    })?;
                    (Some(probs), Some(profile), Some(outcome.predicted), Some(outcome.correct))
                }
                _ => (None, None, None, None),
            };
            records.push(TsRecord {
                ts_index: ctx.ts_index,
                user_id,
                persona_id: persona.id,
                context: **ctx,
                demand,
                probs,
                predicted,
                delta_opt: demand - targets[u],
                target_rate: targets[u],
                rbs: decision.assigned_rbs.clone(),
                achieved_rate: decision.achieved_rate,
                qos_p,
                sat_meas,
                sat_pred,
                correct,
                feasible: decision.feasible,
            });
        }
    }

    let rows: Vec<ResultRow> = records.iter().map(|r| r.row(policy)).collect();
    let mut summary = summarize(&rows, sim.ts_len_s, sim.warmup_s)?;
    summary.model_resets = model.as_ref().map(|m| m.reset_count);
    Ok(ProductionRun {
        policy,
        records,
        summary,
        model,
    })
}
