use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::results::ResultRow;
use crate::error::{Error, Result};

pub const SECONDS_PER_HOUR: f64 = 3600.0;

/// One hour of the paired runs. Rates are integrated over the hour (Mbit);
/// satisfaction is the mean over all records of the hour.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HourlyPoint {
    pub hour: u64,
    pub qos_d_mbits: f64,
    pub qos_np_mbits: f64,
    pub qos_pr_mbits: f64,
    pub saved_mbits: f64,
    pub sat_personalized: f64,
    pub sat_baseline: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub ts_len_s: f64,
    pub warmup_s: f64,
    pub slots: u64,
    /// Σ over slots of Σ_users (QoS_NP − QoS_Pr) × ts_len, Mbit.
    pub total_saved_mbits: f64,
    pub total_saved_after_warmup_mbits: f64,
    pub baseline_provided_mbits: f64,
    pub personalized_provided_mbits: f64,
    pub saved_fraction_of_baseline: f64,
    pub slots_saving_positive: u64,
    pub slots_saving_zero: u64,
    pub slots_saving_negative: u64,
    pub min_slot_saved_mbps: f64,
    pub max_slot_saved_mbps: f64,
    pub avg_satisfaction_personalized: f64,
    pub avg_satisfaction_baseline: f64,
    /// Per-slot saved rate, Mb/s, indexed by slot.
    #[serde(skip)]
    pub per_slot_saved_mbps: Vec<f64>,
    #[serde(skip)]
    pub hourly: Vec<HourlyPoint>,
}

/// Pairs two runs slot by slot. Both must list the same `(ts_index, user_id)`
/// sequence.
pub fn compare(personalized: &[ResultRow], baseline: &[ResultRow], ts_len_s: f64, warmup_s: f64) -> Result<ComparisonReport> {
    if personalized.len() != baseline.len() {
        return Err(Error::Mismatch(format!(
            "{} personalized rows against {} baseline rows",
            personalized.len(),
            baseline.len()
        )));
    }
    if personalized.is_empty() {
        return Err(Error::Empty("result rows"));
    }
    let slots = personalized.iter().map(|r| r.ts_index + 1).max().unwrap_or(0);
    let hours = ((slots as f64 * ts_len_s) / SECONDS_PER_HOUR).ceil() as usize;
    let mut per_slot = vec![0.0; slots as usize];
    let mut hourly: Vec<HourlyPoint> = (0..hours as u64)
        .map(|hour| HourlyPoint {
            hour,
            qos_d_mbits: 0.0,
            qos_np_mbits: 0.0,
            qos_pr_mbits: 0.0,
            saved_mbits: 0.0,
            sat_personalized: 0.0,
            sat_baseline: 0.0,
        })
        .collect();
    let mut hourly_count = vec![0u64; hours];
    let (mut pr_total, mut np_total, mut saved_after) = (0.0, 0.0, 0.0);
    let (mut sat_pr, mut sat_np, mut n_after) = (0.0, 0.0, 0u64);
    for (p, b) in personalized.iter().zip(baseline) {
        if (p.ts_index, p.user_id) != (b.ts_index, b.user_id) {
            return Err(Error::Mismatch(format!(
                "row for slot {} user {} paired with slot {} user {}",
                p.ts_index, p.user_id, b.ts_index, b.user_id
            )));
        }
        let saved = b.qos_p_mbps - p.qos_p_mbps;
        per_slot[p.ts_index as usize] += saved;
        pr_total += p.qos_p_mbps * ts_len_s;
        np_total += b.qos_p_mbps * ts_len_s;
        let h = ((p.ts_index as f64 * ts_len_s) / SECONDS_PER_HOUR) as usize;
        let point = &mut hourly[h];
        point.qos_d_mbits += b.demand_mbps() * ts_len_s;
        point.qos_np_mbits += b.qos_p_mbps * ts_len_s;
        point.qos_pr_mbits += p.qos_p_mbps * ts_len_s;
        point.saved_mbits += saved * ts_len_s;
        point.sat_personalized += p.sat_meas as f64;
        point.sat_baseline += b.sat_meas as f64;
        hourly_count[h] += 1;
        if p.ts_index as f64 * ts_len_s >= warmup_s {
            saved_after += saved * ts_len_s;
            sat_pr += p.sat_meas as f64;
            sat_np += b.sat_meas as f64;
            n_after += 1;
        }
    }
    for (point, &n) in hourly.iter_mut().zip(&hourly_count) {
        if n > 0 {
            point.sat_personalized /= n as f64;
            point.sat_baseline /= n as f64;
        }
    }
    let total_saved: f64 = per_slot.iter().map(|s| s * ts_len_s).sum();
    let avg = |s: f64| if n_after == 0 { 0.0 } else { s / n_after as f64 };
    Ok(ComparisonReport {
        ts_len_s,
        warmup_s,
        slots,
        total_saved_mbits: total_saved,
        total_saved_after_warmup_mbits: saved_after,
        baseline_provided_mbits: np_total,
        personalized_provided_mbits: pr_total,
        saved_fraction_of_baseline: if np_total > 0.0 { total_saved / np_total } else { 0.0 },
        slots_saving_positive: per_slot.iter().filter(|&&s| s > 0.0).count() as u64,
        slots_saving_zero: per_slot.iter().filter(|&&s| s == 0.0).count() as u64,
        slots_saving_negative: per_slot.iter().filter(|&&s| s < 0.0).count() as u64,
        min_slot_saved_mbps: per_slot.iter().copied().fold(f64::INFINITY, f64::min),
        max_slot_saved_mbps: per_slot.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        avg_satisfaction_personalized: avg(sat_pr),
        avg_satisfaction_baseline: avg(sat_np),
        per_slot_saved_mbps: per_slot,
        hourly,
    })
}

pub fn write_hourly_csv(path: &Path, hourly: &[HourlyPoint]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    for point in hourly {
        w.serialize(point)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}
