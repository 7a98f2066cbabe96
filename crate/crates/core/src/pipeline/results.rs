use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::allocator::RATE_EPS;
use crate::error::{Error, Result};
use crate::synth::{Application, LocationCategory};

/// One line of `results.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub ts_index: u64,
    pub user_id: u32,
    pub policy: String,
    pub application: Application,
    pub location_category: LocationCategory,
    pub delta_opt_mbps: f64,
    pub target_mbps: f64,
    pub rbs_used: usize,
    pub qos_p_mbps: f64,
    pub sat_pred: Option<u8>,
    pub sat_meas: u8,
    pub correct: Option<bool>,
}

impl ResultRow {
    pub fn demand_mbps(&self) -> f64 {
        self.target_mbps + self.delta_opt_mbps
    }

    pub fn feasible(&self) -> bool {
        self.qos_p_mbps >= self.target_mbps - RATE_EPS
    }
}

/// Aggregates of one run; everything is recomputable from the result rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub policy: String,
    pub users: usize,
    pub slots: u64,
    pub ts_len_s: f64,
    pub warmup_s: f64,
    pub records: usize,
    /// Σ qos_p × ts_len over all records, Mbit.
    pub total_provided_mbits: f64,
    pub total_provided_after_warmup_mbits: f64,
    pub total_demand_mbits: f64,
    pub total_rbs_used: u64,
    /// Mean measured satisfaction after the warm-up.
    pub avg_satisfaction: f64,
    pub avg_satisfaction_all: f64,
    pub per_user_avg_satisfaction: Vec<f64>,
    pub min_user_avg_satisfaction: f64,
    pub max_user_avg_satisfaction: f64,
    /// Slots in which at least one user missed its target.
    pub infeasible_slots: u64,
    pub infeasible_records: u64,
    pub predictions: u64,
    pub mispredictions: u64,
    pub misprediction_rate: Option<f64>,
    pub misprediction_rate_after_warmup: Option<f64>,
    pub model_resets: Option<u64>,
}

fn mean(sum: f64, count: u64) -> f64 {
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

pub fn summarize(rows: &[ResultRow], ts_len_s: f64, warmup_s: f64) -> Result<RunSummary> {
    let first = rows.first().ok_or(Error::Empty("result rows"))?;
    let after = |r: &ResultRow| r.ts_index as f64 * ts_len_s >= warmup_s;
    let mut per_user: BTreeMap<u32, (f64, u64)> = BTreeMap::new();
    let mut infeasible_slots = std::collections::BTreeSet::new();
    let (mut provided, mut provided_after, mut demand, mut rbs) = (0.0, 0.0, 0.0, 0u64);
    let (mut sat_all, mut sat_after, mut n_after) = (0.0, 0.0, 0u64);
    let (mut predictions, mut wrong, mut predictions_after, mut wrong_after) = (0u64, 0u64, 0u64, 0u64);
    let mut infeasible_records = 0;
    let mut slots = 0;
    for r in rows {
        let sat = r.sat_meas as f64;
        provided += r.qos_p_mbps * ts_len_s;
        demand += r.demand_mbps() * ts_len_s;
        rbs += r.rbs_used as u64;
        sat_all += sat;
        slots = slots.max(r.ts_index + 1);
        if !r.feasible() {
            infeasible_records += 1;
            infeasible_slots.insert(r.ts_index);
        }
        if let Some(c) = r.correct {
            predictions += 1;
            wrong += !c as u64;
        }
        let entry = per_user.entry(r.user_id).or_default();
        if after(r) {
            provided_after += r.qos_p_mbps * ts_len_s;
            sat_after += sat;
            n_after += 1;
            entry.0 += sat;
            entry.1 += 1;
            if let Some(c) = r.correct {
                predictions_after += 1;
                wrong_after += !c as u64;
            }
        }
    }
    let per_user_avg: Vec<f64> = per_user.values().map(|&(s, n)| mean(s, n)).collect();
    Ok(RunSummary {
        policy: first.policy.clone(),
        users: per_user.len(),
        slots,
        ts_len_s,
        warmup_s,
        records: rows.len(),
        total_provided_mbits: provided,
        total_provided_after_warmup_mbits: provided_after,
        total_demand_mbits: demand,
        total_rbs_used: rbs,
        avg_satisfaction: mean(sat_after, n_after),
        avg_satisfaction_all: mean(sat_all, rows.len() as u64),
        min_user_avg_satisfaction: per_user_avg.iter().copied().fold(f64::INFINITY, f64::min),
        max_user_avg_satisfaction: per_user_avg.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        per_user_avg_satisfaction: per_user_avg,
        infeasible_slots: infeasible_slots.len() as u64,
        infeasible_records,
        predictions,
        mispredictions: wrong,
        misprediction_rate: (predictions > 0).then(|| mean(wrong as f64, predictions)),
        misprediction_rate_after_warmup: (predictions_after > 0).then(|| mean(wrong_after as f64, predictions_after)),
        model_resets: None,
    })
}

pub fn write_results_csv(path: &Path, rows: &[ResultRow]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn read_results_csv(path: &Path) -> Result<Vec<ResultRow>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    csv::Reader::from_reader(BufReader::new(file))
        .deserialize()
        .map(|r| r.map_err(Error::from))
        .collect()
}

pub fn write_summary(path: &Path, summary: &RunSummary) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(summary)? + "\n").map_err(|e| Error::io(path, e))
}

pub fn read_summary(path: &Path) -> Result<RunSummary> {
    Ok(serde_json::from_str(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)?)
}
