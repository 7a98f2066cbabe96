//! Two-phase persona/threshold model.
//!
//! Phase 1 keeps one feature centroid per persona and turns distances into a
//! probability vector with a temperature softmax. Phase 2 keeps, per
//! `(persona, location, application, day phase)` bucket, an estimate of the
//! adequate-threshold vector obtained by inverting observed
//! `(qos_p, satisfaction)` pairs, and refines it online.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::features::{preprocess, FeatureVector, DIM};
use crate::error::{Error, Result};
use crate::synth::{Application, DayPhase, DemandTable, LabeledSample, LocationCategory};
use crate::zot::{satisfaction_of, SatisfactionLevel, ZoTProfile, NUM_LEVELS};

/// Users per persona needed before the held-out split is done by user.
pub const MIN_USERS_FOR_USER_SPLIT: usize = 5;
/// Length of the time blocks used when the split falls back to time.
pub const HOLDOUT_BLOCK_S: f64 = 300.0;
/// One block or user in this many is held out.
pub const HOLDOUT_EVERY: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearningParams {
    /// Online learning rate; correct predictions refine at a tenth of it.
    pub eta: f64,
    /// Consecutive-error surplus after which a bucket is relearned.
    pub drift_threshold: u32,
    /// Softmax temperature of the persona classifier.
    pub temperature: f64,
    /// Pseudo-count pulling a bucket estimate toward its persona prior.
    pub prior_weight: f64,
}

impl Default for LearningParams {
    fn default() -> Self {
        LearningParams {
            eta: 0.1,
            drift_threshold: 50,
            temperature: 0.02,
            prior_weight: 1.0,
        }
    }
}

impl LearningParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::Config(format!("learning rate {} outside (0, 1]", self.eta)));
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(Error::Config(format!("temperature {} must be positive", self.temperature)));
        }
        if !(self.prior_weight >= 0.0 && self.prior_weight.is_finite()) {
            return Err(Error::Config(format!("prior weight {} must be non-negative", self.prior_weight)));
        }
        Ok(())
    }
}

/// Persona membership probabilities, indexed like [`TwoPhaseModel::persona_ids`].
#[derive(Debug, Clone, PartialEq)]
pub struct PersonaProbVector(Vec<f64>);

impl PersonaProbVector {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        let sum: f64 = probs.iter().sum();
        if probs.is_empty() || probs.iter().any(|p| !(0.0..=1.0).contains(p)) || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Parse(format!("not a probability vector: {probs:?}")));
        }
        Ok(PersonaProbVector(probs))
    }

    pub fn one_hot(len: usize, index: usize) -> Self {
        let mut v = vec![0.0; len];
        v[index] = 1.0;
        PersonaProbVector(v)
    }

    pub fn uniform(len: usize) -> Self {
        PersonaProbVector(vec![1.0 / len as f64; len])
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Most likely index; ties go to the lower index.
    pub fn argmax(&self) -> usize {
        self.0
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, &p)| if p > best.1 { (i, p) } else { best })
            .0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BucketKey {
    pub persona: u32,
    pub location: LocationCategory,
    pub application: Application,
    pub phase: DayPhase,
}

/// Threshold estimate of one bucket.
///
/// `lower[i]` is the largest `qos_p` seen below level `i + 1`, `upper[i]`
/// the smallest seen at or above it; together they bracket the threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct Bucket {
    pub adequate: [f64; NUM_LEVELS],
    pub lower: [Option<f64>; NUM_LEVELS],
    pub upper: [Option<f64>; NUM_LEVELS],
    pub samples: u64,
    pub drift: u32,
}

impl Bucket {
    fn fresh(adequate: [f64; NUM_LEVELS]) -> Self {
        Bucket {
            adequate,
            lower: [None; NUM_LEVELS],
            upper: [None; NUM_LEVELS],
            samples: 0,
            drift: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PersonaClass {
    pub id: u32,
    pub centroid: [f64; DIM],
    /// Thresholds as fractions of the demand, used for unseen buckets.
    pub prior: [f64; NUM_LEVELS],
    pub samples: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitKind {
    ByUser,
    ByTimeBlock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub split: SplitKind,
    pub train_samples: usize,
    pub heldout_samples: usize,
    pub buckets: usize,
    /// Held-out argmax persona accuracy.
    pub phase1_accuracy: f64,
    /// RMSE in Mb/s between the model's `q_a5` and the one inverted from
    /// held-out data, over buckets present in both.
    pub phase2_rmse_mbps: f64,
    pub phase2_buckets_compared: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Observation<'a> {
    pub features: &'a FeatureVector,
    pub probs: &'a PersonaProbVector,
    pub application: Application,
    pub qos_p: f64,
    pub measured: SatisfactionLevel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UpdateOutcome {
    pub predicted: SatisfactionLevel,
    pub correct: bool,
    pub reset: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TwoPhaseModel {
    pub params: LearningParams,
    pub demands: BTreeMap<Application, f64>,
    pub classes: Vec<PersonaClass>,
    pub buckets: BTreeMap<BucketKey, Bucket>,
    pub update_count: u64,
    /// Grows on mispredictions and decays on correct predictions.
    pub drift_counter: u64,
    pub reset_count: u64,
}

/// Best threshold for one level from `(qos_p, reached)` pairs sorted by `qos_p`.
///
/// Every cut between distinct values is scored by the number of pairs it
/// misclassifies; the first cut with the fewest errors wins. Returns the
/// midpoint estimate and the bracketing observations.
fn invert_level(points: &[(f64, bool)], demand: f64) -> (f64, Option<f64>, Option<f64>) {
    // errors for a cut before index k: reached pairs left of k + unreached pairs from k on
    let mut errors: usize = points.iter().filter(|p| !p.1).count();
    let mut best = (errors, 0);
    for k in 1..=points.len() {
        if points[k - 1].1 {
            errors += 1;
        } else {
            errors -= 1;
        }
        let distinct = k == points.len() || points[k].0 > points[k - 1].0;
        if distinct && errors < best.0 {
            best = (errors, k);
        }
    }
    let k = best.1;
    let lower = (k > 0).then(|| points[k - 1].0);
    let upper = (k < points.len()).then(|| points[k].0);
    let estimate = match (lower, upper) {
        (Some(l), Some(u)) => 0.5 * (l + u),
        (None, Some(u)) => 0.5 * u,
        (Some(l), None) => 0.5 * (l + demand),
        (None, None) => 0.5 * demand,
    };
    (estimate, lower, upper)
}

fn invert_bucket(obs: &mut [(f64, SatisfactionLevel)], demand: f64) -> Bucket {
    obs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut bucket = Bucket::fresh([0.0; NUM_LEVELS]);
    bucket.samples = obs.len() as u64;
    for i in 1..NUM_LEVELS {
        let points: Vec<(f64, bool)> = obs.iter().map(|&(q, s)| (q, s.index() >= i)).collect();
        let (estimate, lower, upper) = invert_level(&points, demand);
        bucket.adequate[i] = estimate;
        bucket.lower[i] = lower;
        bucket.upper[i] = upper;
    }
    bucket.adequate.sort_by(f64::total_cmp);
    bucket.adequate[0] = 0.0;
    bucket
}

fn key_of(persona: u32, sample: &LabeledSample) -> BucketKey {
    BucketKey {
        persona,
        location: sample.context.location,
        application: sample.context.application,
        phase: sample.context.phase(),
    }
}

fn persona_of(sample: &LabeledSample) -> Result<u32> {
    sample.persona_id.ok_or(Error::Unlabeled(sample.user_id))
}

fn inverted_buckets(samples: &[&LabeledSample], demands: &DemandTable) -> Result<BTreeMap<BucketKey, Bucket>> {
    let mut grouped: BTreeMap<BucketKey, Vec<(f64, SatisfactionLevel)>> = BTreeMap::new();
    for s in samples {
        grouped
            .entry(key_of(persona_of(s)?, s))
            .or_default()
            .push((s.qos_p, s.satisfaction));
    }
    grouped
        .into_iter()
        .map(|(key, mut obs)| Ok((key, invert_bucket(&mut obs, demands.application_demand(key.application)?))))
        .collect()
}

/// Partition of sample indices into training and held-out parts.
pub fn holdout_split(samples: &[LabeledSample]) -> Result<(SplitKind, Vec<bool>)> {
    let mut users: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
    for s in samples {
        let list = users.entry(persona_of(s)?).or_default();
        if !list.contains(&s.user_id) {
            list.push(s.user_id);
        }
    }
    if users.values().all(|u| u.len() >= MIN_USERS_FOR_USER_SPLIT) {
        let mut held = BTreeMap::new();
        for list in users.values_mut() {
            list.sort_unstable();
            for (rank, &u) in list.iter().enumerate() {
                held.insert(u, rank % HOLDOUT_EVERY == HOLDOUT_EVERY - 1);
            }
        }
        Ok((SplitKind::ByUser, samples.iter().map(|s| held[&s.user_id]).collect()))
    } else {
        let held = samples
            .iter()
            .map(|s| (s.context.time_of_day / HOLDOUT_BLOCK_S).floor() as usize % HOLDOUT_EVERY == HOLDOUT_EVERY - 1)
            .collect();
        Ok((SplitKind::ByTimeBlock, held))
    }
}

impl TwoPhaseModel {
    /// Fits both phases on `samples`, which must carry persona labels.
    pub fn fit(samples: &[&LabeledSample], demands: &DemandTable, params: LearningParams) -> Result<Self> {
        params.validate()?;
        if samples.is_empty() {
            return Err(Error::Empty("training samples"));
        }
        let mut sums: BTreeMap<u32, ([f64; DIM], u64)> = BTreeMap::new();
        for s in samples {
            let f = preprocess(&s.context);
            let e = sums.entry(persona_of(s)?).or_insert(([0.0; DIM], 0));
            e.0.iter_mut().zip(f.0).for_each(|(a, v)| *a += v);
            e.1 += 1;
        }
        let raw = inverted_buckets(samples, demands)?;

        let mut classes = Vec::with_capacity(sums.len());
        for (&id, &(sum, count)) in &sums {
            let mut prior = [0.0; NUM_LEVELS];
            let mut weight = 0.0;
            for (key, b) in raw.range(bucket_range(id)) {
                let demand = demands.application_demand(key.application)?;
                let w = b.samples as f64;
                for (p, q) in prior.iter_mut().zip(&b.adequate) {
                    *p += w * q / demand;
                }
                weight += w;
            }
            prior.iter_mut().for_each(|p| *p /= weight);
            classes.push(PersonaClass {
                id,
                centroid: sum.map(|v| v / count as f64),
                prior,
                samples: count,
            });
        }

        let mut model = TwoPhaseModel {
            params,
            demands: demands.iter().collect(),
            classes,
            buckets: BTreeMap::new(),
            update_count: 0,
            drift_counter: 0,
            reset_count: 0,
        };
        let k = params.prior_weight;
        for (key, mut b) in raw {
            let demand = model.demand(key.application)?;
            let prior = model.class_prior(key.persona);
            let n = b.samples as f64;
            for (q, p) in b.adequate.iter_mut().zip(prior).skip(1) {
                *q = (n * *q + k * p * demand) / (n + k);
            }
            model.buckets.insert(key, b);
        }
        Ok(model)
    }

    pub fn is_trained(&self) -> bool {
        !self.classes.is_empty()
    }

    pub fn persona_ids(&self) -> Vec<u32> {
        self.classes.iter().map(|c| c.id).collect()
    }

    pub fn class_index(&self, persona: u32) -> Option<usize> {
        self.classes.iter().position(|c| c.id == persona)
    }

    fn class_prior(&self, persona: u32) -> [f64; NUM_LEVELS] {
        self.class_index(persona)
            .map(|i| self.classes[i].prior)
            .unwrap_or([0.0; NUM_LEVELS])
    }

    pub fn demand(&self, application: Application) -> Result<f64> {
        self.demands
            .get(&application)
            .copied()
            .ok_or(Error::UnknownApplication(application))
    }

    fn ensure_trained(&self) -> Result<()> {
        if self.is_trained() {
            Ok(())
        } else {
            Err(Error::Untrained)
        }
    }

    pub fn predict_persona(&self, features: &FeatureVector) -> Result<PersonaProbVector> {
        self.ensure_trained()?;
        let logits: Vec<f64> = self
            .classes
            .iter()
            .map(|c| -features.squared_distance(&c.centroid).sqrt() / self.params.temperature)
            .collect();
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exp: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
        let total: f64 = exp.iter().sum();
        Ok(PersonaProbVector(exp.into_iter().map(|e| e / total).collect()))
    }

    /// Threshold estimate of one persona in one context, in Mb/s.
    pub fn persona_estimate(&self, class: usize, features: &FeatureVector, application: Application) -> Result<[f64; NUM_LEVELS]> {
        let c = &self.classes[class];
        let key = BucketKey {
            persona: c.id,
            location: features.location(),
            application,
            phase: features.phase(),
        };
        Ok(match self.buckets.get(&key) {
            Some(b) => b.adequate,
            None => {
                let demand = self.demand(application)?;
                c.prior.map(|f| f * demand)
            }
        })
    }

    pub fn predict_profile(&self, features: &FeatureVector, probs: &PersonaProbVector, application: Application) -> Result<ZoTProfile> {
        self.ensure_trained()?;
        if probs.len() != self.classes.len() {
            return Err(Error::Mismatch(format!(
                "probability vector of length {} for {} personas",
                probs.len(),
                self.classes.len()
            )));
        }
        let demand = self.demand(application)?;
        let mut mix = [0.0; NUM_LEVELS];
        for (j, &p) in probs.probs().iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let est = self.persona_estimate(j, features, application)?;
            for i in 0..NUM_LEVELS {
                mix[i] += p * est[i];
            }
        }
        Ok(ZoTProfile::project(demand, mix))
    }

    pub fn predict_satisfaction(
        &self,
        features: &FeatureVector,
        probs: &PersonaProbVector,
        application: Application,
        delta: f64,
    ) -> Result<SatisfactionLevel> {
        let profile = self.predict_profile(features, probs, application)?;
        Ok(satisfaction_of(&profile, profile.qos_demand() - delta))
    }

    /// Feeds one measured satisfaction back into the bucket of the most
    /// likely persona.
    pub fn online_update(&mut self, obs: &Observation<'_>) -> Result<UpdateOutcome> {
        let profile = self.predict_profile(obs.features, obs.probs, obs.application)?;
        let predicted = satisfaction_of(&profile, obs.qos_p);
        let correct = predicted == obs.measured;
        let class = obs.probs.argmax();
        let demand = self.demand(obs.application)?;
        let key = BucketKey {
            persona: self.classes[class].id,
            location: obs.features.location(),
            application: obs.application,
            phase: obs.features.phase(),
        };
        let fallback = self.classes[class].prior.map(|f| f * demand);
        let params = self.params;
        let bucket = self.buckets.entry(key).or_insert_with(|| Bucket::fresh(fallback));
        self.update_count += 1;
        bucket.samples += 1;

        let q = obs.qos_p;
        let m = obs.measured.index();
        for i in 1..NUM_LEVELS {
            if m >= i {
                bucket.upper[i] = Some(bucket.upper[i].map_or(q, |u| u.min(q)));
                if bucket.lower[i].is_some_and(|l| l >= q) {
                    bucket.lower[i] = None;
                }
            } else {
                bucket.lower[i] = Some(bucket.lower[i].map_or(q, |l| l.max(q)));
                if bucket.upper[i].is_some_and(|u| u <= q) {
                    bucket.upper[i] = None;
                }
            }
        }

        let mut reset = false;
        if correct {
            bucket.drift = bucket.drift.saturating_sub(1);
            self.drift_counter = self.drift_counter.saturating_sub(1);
            let rate = params.eta / 10.0;
            for i in 1..NUM_LEVELS {
                if let (Some(l), Some(u)) = (bucket.lower[i], bucket.upper[i]) {
                    let e = &mut bucket.adequate[i];
                    *e += rate * (0.5 * (l + u) - *e);
                }
            }
        } else {
            bucket.drift += 1;
            self.drift_counter += 1;
            for i in 1..NUM_LEVELS {
                let e = bucket.adequate[i];
                let reached = q >= e;
                let should = m >= i;
                if reached == should {
                    continue;
                }
                let step = params.eta * (q - e).abs().max(0.01 * demand);
                bucket.adequate[i] = if should {
                    let next = q - step;
                    match bucket.lower[i] {
                        Some(l) if next <= l => 0.5 * (l + q),
                        _ => next,
                    }
                } else {
                    let next = q + step;
                    match bucket.upper[i] {
                        Some(u) if next >= u => 0.5 * (q + u),
                        _ => next,
                    }
                };
            }
            if bucket.drift > params.drift_threshold {
                *bucket = Bucket::fresh(fallback);
                self.reset_count += 1;
                reset = true;
            }
        }
        for e in bucket.adequate.iter_mut() {
            *e = e.clamp(0.0, demand);
        }
        bucket.adequate.sort_by(f64::total_cmp);
        bucket.adequate[0] = 0.0;

        Ok(UpdateOutcome {
            predicted,
            correct,
            reset,
        })
    }
}

fn bucket_range(persona: u32) -> std::ops::RangeInclusive<BucketKey> {
    let first = BucketKey {
        persona,
        location: LocationCategory::ALL[0],
        application: Application::ALL[0],
        phase: DayPhase::ALL[0],
    };
    let last = BucketKey {
        persona,
        location: *LocationCategory::ALL.last().unwrap(),
        application: *Application::ALL.last().unwrap(),
        phase: *DayPhase::ALL.last().unwrap(),
    };
    first..=last
}

/// Trains on the training part of the split and scores on the held-out part.
pub fn train(samples: &[LabeledSample], demands: &DemandTable, params: LearningParams) -> Result<(TwoPhaseModel, TrainReport)> {
    if samples.is_empty() {
        return Err(Error::Empty("training samples"));
    }
    let (split, held) = holdout_split(samples)?;
    let (test, fit): (Vec<_>, Vec<_>) =
        samples.iter().zip(held).partition(|(_, h)| *h);
    let fit: Vec<&LabeledSample> = fit.into_iter().map(|(s, _)| s).collect();
    let test: Vec<&LabeledSample> = test.into_iter().map(|(s, _)| s).collect();
    let fit_set = if fit.is_empty() { test.clone() } else { fit };
    let model = TwoPhaseModel::fit(&fit_set, demands, params)?;

    let mut hits = 0usize;
    for s in &test {
        let probs = model.predict_persona(&preprocess(&s.context))?;
        if Some(model.classes[probs.argmax()].id) == s.persona_id {
            hits += 1;
        }
    }
    let reference = inverted_buckets(&test, demands)?;
    let mut sq = 0.0;
    let mut compared = 0usize;
    for (key, b) in &reference {
        if let Some(m) = model.buckets.get(key) {
            let d = m.adequate[NUM_LEVELS - 1] - b.adequate[NUM_LEVELS - 1];
            sq += d * d;
            compared += 1;
        }
    }
    let report = TrainReport {
        split,
        train_samples: fit_set.len(),
        heldout_samples: test.len(),
        buckets: model.buckets.len(),
        phase1_accuracy: if test.is_empty() { 0.0 } else { hits as f64 / test.len() as f64 },
        phase2_rmse_mbps: if compared == 0 { 0.0 } else { (sq / compared as f64).sqrt() },
        phase2_buckets_compared: compared,
    };
    Ok((model, report))
}
