//! Per-run reports, invariant checks and multi-seed campaigns.

use serde::{Deserialize, Serialize};

use super::config::{BaselineKind, Protocol, ScenarioConfig};
use super::engine::run;
use super::SimError;
use crate::detection::Mode;
use crate::energy::EnergyParams;
use crate::exec::Execution;

/// Seconds spent in each power state, summed over the accounted nodes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PowerStateTimes {
    pub tx_s: f64,
    pub listen_s: f64,
    pub sense_s: f64,
    pub sleep_s: f64,
    pub passive_s: f64,
    pub off_s: f64,
}

impl PowerStateTimes {
    pub fn total_s(&self) -> f64 {
        self.tx_s + self.listen_s + self.sense_s + self.sleep_s + self.passive_s + self.off_s
    }

    /// Energy implied by the state times, before harvest credits.
    pub fn energy_j(&self, p: &EnergyParams) -> f64 {
        ((self.tx_s + self.listen_s) * p.power_comm
            + self.sense_s * p.power_sense
            + self.sleep_s * p.power_sleep)
            * 1e-3
    }
}

/// Raw outcomes of AES sensing decisions.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionCounts {
    pub active: u64,
    pub passive: u64,
    pub sleep: u64,
    /// Active decisions by non-boundary nodes, overridden to Sleep.
    pub suppressed: u64,
}

impl DecisionCounts {
    pub fn record(&mut self, mode: Mode) {
        match mode {
            Mode::Active => self.active += 1,
            Mode::Passive => self.passive += 1,
            Mode::Sleep => self.sleep += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.active + self.passive + self.sleep
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub protocol: Protocol,
    pub seed: u64,
    /// Nodes whose energy is accounted (sensors, plus the sink if configured).
    pub node_count: usize,
    pub sim_duration_s: f64,
    pub total_energy_j: f64,
    /// Net energy per accounted node: consumption minus harvest credit.
    pub per_node_energy_j: Vec<f64>,
    pub harvested_j: f64,
    pub packets_generated: u64,
    pub packets_delivered: u64,
    pub packets_dropped: u64,
    pub packets_in_flight: u64,
    pub active_s: f64,
    pub passive_s: f64,
    pub sleep_s: f64,
    pub power_state_s: PowerStateTimes,
    /// First battery depletion, or the end of the run.
    pub lifetime_s: f64,
    pub depleted_nodes: usize,
    pub savings_pct: Option<f64>,
    pub region_violations: u64,
    pub sleeping_transmissions: u64,
    pub decisions: DecisionCounts,
}

impl SimReport {
    pub fn mean_node_energy_j(&self) -> f64 {
        if self.node_count == 0 {
            0.0
        } else {
            self.total_energy_j / self.node_count as f64
        }
    }

    /// Check every per-run invariant; the message names the first failure.
    pub fn check_invariants(&self, energy: &EnergyParams) -> Result<(), String> {
        let expected_s = self.node_count as f64 * self.sim_duration_s;
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0);
        if self.packets_delivered > self.packets_generated {
            return Err(format!(
                "delivered {} exceeds generated {}",
                self.packets_delivered, self.packets_generated
            ));
        }
        let accounted = self.packets_delivered + self.packets_dropped + self.packets_in_flight;
        if accounted != self.packets_generated {
            return Err(format!(
                "packet conservation: {} delivered + {} dropped + {} in flight != {} generated",
                self.packets_delivered,
                self.packets_dropped,
                self.packets_in_flight,
                self.packets_generated
            ));
        }
        let per_node_sum: f64 = self.per_node_energy_j.iter().sum();
        if !close(per_node_sum, self.total_energy_j) {
            return Err(format!(
                "total {} J differs from per-node sum {} J",
                self.total_energy_j, per_node_sum
            ));
        }
        let mode_s = self.active_s + self.passive_s + self.sleep_s;
        if !close(mode_s, expected_s) {
            return Err(format!("mode seconds {mode_s} != {expected_s}"));
        }
        if !close(self.power_state_s.total_s(), expected_s) {
            return Err(format!(
                "power-state seconds {} != {expected_s}",
                self.power_state_s.total_s()
            ));
        }
        let implied = self.power_state_s.energy_j(energy) - self.harvested_j;
        if !close(implied, self.total_energy_j) {
            return Err(format!(
                "accounting: state energy {implied} J != reported {} J",
                self.total_energy_j
            ));
        }
        if self.protocol == Protocol::Aes && self.region_violations > 0 {
            return Err(format!(
                "{} region-discipline violations",
                self.region_violations
            ));
        }
        if self.sleeping_transmissions > 0 {
            return Err(format!(
                "{} transmissions from sleeping nodes",
                self.sleeping_transmissions
            ));
        }
        Ok(())
    }
}

/// Percentage of the baseline's energy that AES saves.
pub fn compute_savings(aes_total: f64, baseline_total: f64) -> Result<f64, SimError> {
    if !(baseline_total > 0.0) {
        return Err(SimError::ZeroBaseline);
    }
    Ok(100.0 * (baseline_total - aes_total) / baseline_total)
}

/// Sample mean and standard deviation (zero for a single sample).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

impl Stat {
    pub fn of(values: impl IntoIterator<Item = f64>) -> Self {
        let v: Vec<f64> = values.into_iter().collect();
        if v.is_empty() {
            return Self::default();
        }
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let std = if v.len() > 1 {
            (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Self { mean, std }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub protocol: Protocol,
    pub runs: usize,
    pub total_energy_j: Stat,
    pub mean_node_energy_j: Stat,
    pub packets_generated: Stat,
    pub packets_delivered: Stat,
    pub active_s: Stat,
    pub passive_s: Stat,
    pub sleep_s: Stat,
    pub lifetime_s: Stat,
    /// Baseline rows: saving of AES against this row. AES row: saving
    /// against the mean of the baseline rows. `None` without an AES row.
    pub savings_pct: Option<f64>,
}

impl SummaryRow {
    fn from_reports(protocol: Protocol, reports: &[&SimReport]) -> Self {
        let stat = |f: &dyn Fn(&SimReport) -> f64| Stat::of(reports.iter().map(|r| f(r)));
        Self {
            protocol,
            runs: reports.len(),
            total_energy_j: stat(&|r| r.total_energy_j),
            mean_node_energy_j: stat(&|r| r.mean_node_energy_j()),
            packets_generated: stat(&|r| r.packets_generated as f64),
            packets_delivered: stat(&|r| r.packets_delivered as f64),
            active_s: stat(&|r| r.active_s),
            passive_s: stat(&|r| r.passive_s),
            sleep_s: stat(&|r| r.sleep_s),
            lifetime_s: stat(&|r| r.lifetime_s),
            savings_pct: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Campaign {
    /// Every run, sorted by (protocol, seed).
    pub reports: Vec<SimReport>,
    /// One row per requested kind, in request order.
    pub summary: Vec<SummaryRow>,
}

impl Campaign {
    pub fn row(&self, protocol: Protocol) -> Option<&SummaryRow> {
        self.summary.iter().find(|r| r.protocol == protocol)
    }
}

/// Run every kind on every seed and aggregate.
///
/// Per-run savings compare AES with each baseline on the same seed (the AES
/// report gets its saving against the mean of those baselines).
pub fn run_campaign(
    cfg: &ScenarioConfig,
    kinds: &[BaselineKind],
    seeds: &[u64],
    exec: Execution,
) -> Result<Campaign, SimError> {
    if kinds.is_empty() || seeds.is_empty() {
        return Err(SimError::EmptyCampaign);
    }
    cfg.validate()?;
    let jobs: Vec<(usize, u64)> = (0..kinds.len())
        .flat_map(|k| seeds.iter().map(move |&s| (k, s)))
        .collect();
    let results = exec.map(jobs.clone(), |(k, seed)| run(cfg, &kinds[k], seed));
    let mut tagged = Vec::with_capacity(results.len());
    for ((k, _), r) in jobs.into_iter().zip(results) {
        tagged.push((k, r?));
    }

    let mean_of = |rows: &[(usize, SimReport)], pick: &dyn Fn(&(usize, SimReport)) -> bool| {
        let v: Vec<f64> = rows
            .iter()
            .filter(|x| pick(x))
            .map(|x| x.1.total_energy_j)
            .collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    };
    let mut per_run_savings = Vec::with_capacity(tagged.len());
    for (_, r) in &tagged {
        let aes_same_seed = mean_of(&tagged, &|x| {
            x.1.protocol == Protocol::Aes && x.1.seed == r.seed
        });
        let saving = if r.protocol == Protocol::Aes {
            mean_of(&tagged, &|x| {
                x.1.protocol != Protocol::Aes && x.1.seed == r.seed
            })
            .map(|base| compute_savings(r.total_energy_j, base))
        } else {
            aes_same_seed.map(|aes| compute_savings(aes, r.total_energy_j))
        };
        per_run_savings.push(saving.transpose().ok().flatten());
    }
    for ((_, r), s) in tagged.iter_mut().zip(per_run_savings) {
        r.savings_pct = s;
    }

    let mut summary: Vec<SummaryRow> = (0..kinds.len())
        .map(|k| {
            let reports: Vec<&SimReport> =
                tagged.iter().filter(|x| x.0 == k).map(|x| &x.1).collect();
            SummaryRow::from_reports(kinds[k].protocol, &reports)
        })
        .collect();
    let aes_mean = summary
        .iter()
        .find(|r| r.protocol == Protocol::Aes)
        .map(|r| r.total_energy_j.mean);
    let baseline_means: Vec<f64> = summary
        .iter()
        .filter(|r| r.protocol != Protocol::Aes)
        .map(|r| r.total_energy_j.mean)
        .collect();
    if let Some(aes) = aes_mean {
        for row in &mut summary {
            row.savings_pct = if row.protocol == Protocol::Aes {
                (!baseline_means.is_empty())
                    .then(|| baseline_means.iter().sum::<f64>() / baseline_means.len() as f64)
                    .and_then(|base| compute_savings(aes, base).ok())
            } else {
                compute_savings(aes, row.total_energy_j.mean).ok()
            };
        }
    }

    let mut reports: Vec<SimReport> = tagged.into_iter().map(|x| x.1).collect();
    reports.sort_by_key(|r| (r.protocol, r.seed));
    Ok(Campaign { reports, summary })
}
