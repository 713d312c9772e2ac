use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use super::environment::IndoorZone;
use super::SimError;
use crate::detection::{RocModel, SampleCountDistribution};
use crate::energy::EnergyParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Protocol {
    Aes,
    Smac,
    Tmac,
    Trama,
    Mmac,
    Cmac,
}

impl Protocol {
    pub const ALL: [Protocol; 6] = [
        Protocol::Aes,
        Protocol::Smac,
        Protocol::Tmac,
        Protocol::Trama,
        Protocol::Mmac,
        Protocol::Cmac,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Protocol::Aes => "AES",
            Protocol::Smac => "SMAC",
            Protocol::Tmac => "TMAC",
            Protocol::Trama => "TRAMA",
            Protocol::Mmac => "MMAC",
            Protocol::Cmac => "CMAC",
        }
    }

    /// Lower-case key used in configuration section names.
    pub fn key(self) -> &'static str {
        match self {
            Protocol::Aes => "aes",
            Protocol::Smac => "smac",
            Protocol::Tmac => "tmac",
            Protocol::Trama => "trama",
            Protocol::Mmac => "mmac",
            Protocol::Cmac => "cmac",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Protocol {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let wanted = s.trim().to_ascii_lowercase().replace(['.', '-', '_'], "");
        Protocol::ALL
            .into_iter()
            .find(|p| p.key() == wanted)
            .ok_or_else(|| SimError::Config(format!("unknown protocol `{s}`")))
    }
}

/// Energy envelope of a protocol. The baselines are duty-cycle models, not
/// protocol-faithful MAC implementations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineKind {
    pub protocol: Protocol,
    /// Fraction of non-transmitting time the radio listens. For TMAC this is the floor.
    pub duty_cycle_fraction: f64,
    /// Airtime multiplier per packet (control frames, contention, retries).
    pub overhead_factor: f64,
    pub schedule_based: bool,
    /// Extra listening fraction spent maintaining schedules.
    pub schedule_surcharge: f64,
    /// Listening extension after each transmission (TMAC adaptive timeout).
    pub adaptive_timeout_s: f64,
}

impl BaselineKind {
    pub fn default_for(protocol: Protocol) -> Self {
        let (duty, overhead, schedule_based, surcharge, timeout) = match protocol {
            Protocol::Aes => (1.0, 1.0, false, 0.0, 0.0),
            Protocol::Smac => (0.5, 1.2, false, 0.0, 0.0),
            Protocol::Tmac => (0.2, 1.2, false, 0.0, 1.0),
            Protocol::Trama => (0.4, 1.0, true, 0.05, 0.0),
            Protocol::Mmac => (0.4, 1.0, true, 0.08, 0.0),
            Protocol::Cmac => (0.3, 0.9, false, 0.0, 0.0),
        };
        Self {
            protocol,
            duty_cycle_fraction: duty,
            overhead_factor: overhead,
            schedule_based,
            schedule_surcharge: surcharge,
            adaptive_timeout_s: timeout,
        }
    }

    pub fn aes() -> Self {
        Self::default_for(Protocol::Aes)
    }

    pub fn is_aes(&self) -> bool {
        self.protocol == Protocol::Aes
    }

    /// Listening fraction including the schedule-maintenance surcharge.
    pub fn effective_duty(&self) -> f64 {
        let extra = if self.schedule_based {
            self.schedule_surcharge
        } else {
            0.0
        };
        (self.duty_cycle_fraction + extra).min(1.0)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let name = self.protocol.name();
        if !(self.duty_cycle_fraction > 0.0 && self.duty_cycle_fraction <= 1.0) {
            return Err(SimError::Config(format!(
                "{name}: duty_cycle_fraction {} must lie in (0, 1]",
                self.duty_cycle_fraction
            )));
        }
        if !(self.overhead_factor > 0.0 && self.overhead_factor.is_finite()) {
            return Err(SimError::Config(format!(
                "{name}: overhead_factor {} must be positive",
                self.overhead_factor
            )));
        }
        if !(self.schedule_surcharge >= 0.0 && self.schedule_surcharge <= 1.0) {
            return Err(SimError::Config(format!(
                "{name}: schedule_surcharge {} must lie in [0, 1]",
                self.schedule_surcharge
            )));
        }
        if !(self.adaptive_timeout_s >= 0.0 && self.adaptive_timeout_s.is_finite()) {
            return Err(SimError::Config(format!(
                "{name}: adaptive_timeout_s {} must be >= 0",
                self.adaptive_timeout_s
            )));
        }
        Ok(())
    }
}

/// Inputs of the per-node environment detector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionSettings {
    pub alpha: f64,
    pub roc_sensitivity: f64,
    pub roc_k_offset: usize,
    /// Sample-count distribution `p_0..p_kmax`.
    pub pk: Vec<f64>,
    pub pc: f64,
    pub epsilon_mode: f64,
    pub solver_tol: f64,
}

impl Default for DetectionSettings {
    fn default() -> Self {
        Self {
            alpha: 0.1,
            roc_sensitivity: 20.0,
            roc_k_offset: 1,
            pk: vec![0.2, 0.5, 0.3],
            pc: 0.01,
            epsilon_mode: 0.1,
            solver_tol: 1e-9,
        }
    }
}

impl DetectionSettings {
    pub fn roc(&self) -> Result<RocModel, SimError> {
        let k_max = self.pk.len().saturating_sub(1);
        Ok(RocModel::power_law(self.roc_sensitivity, k_max)?.with_k_offset(self.roc_k_offset))
    }

    pub fn distribution(&self) -> Result<SampleCountDistribution, SimError> {
        Ok(SampleCountDistribution::new(self.pk.clone())?)
    }
}

/// Every parameter of one simulated scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub field_width_m: f64,
    pub field_height_m: f64,
    pub region_size_m: f64,
    pub node_count: usize,
    pub sink_x: f64,
    pub sink_y: f64,
    pub bandwidth_kbps: f64,
    pub sim_duration_s: f64,
    pub init_phase_s: f64,
    pub connections: usize,
    pub data_total_bytes: u64,
    pub byte_service_time_s: f64,
    pub packet_size_bytes: u64,
    pub runs: usize,
    pub initial_battery_j: f64,
    pub seed: u64,
    /// Interval between sensing decisions.
    pub sense_epoch_s: f64,
    /// Length of one sensing burst.
    pub sense_duration_s: f64,
    pub radio_range_m: f64,
    /// Packets a node can buffer; a full node accepts no relay traffic.
    pub queue_capacity_packets: usize,
    pub include_sink_energy: bool,
    pub indoor_zones: Vec<IndoorZone>,
    /// Node counts swept for the energy/savings-vs-node-count plots.
    pub sweep_node_counts: Vec<usize>,
    /// Connection counts swept for the per-node-energy-vs-transmitters plot.
    pub sweep_transmitters: Vec<usize>,
    pub energy: EnergyParams,
    pub detection: DetectionSettings,
    /// One entry per protocol, in `Protocol::ALL` order.
    pub baselines: Vec<BaselineKind>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            field_width_m: 200.0,
            field_height_m: 200.0,
            region_size_m: 40.0,
            node_count: 105,
            sink_x: 140.0,
            sink_y: 60.0,
            bandwidth_kbps: 50.0,
            sim_duration_s: 2400.0,
            init_phase_s: 30.0,
            connections: 30,
            data_total_bytes: 30_000_000,
            byte_service_time_s: 377e-6,
            packet_size_bytes: 1000,
            runs: 12,
            initial_battery_j: 25.0,
            seed: 1,
            sense_epoch_s: 0.5,
            sense_duration_s: 0.005,
            radio_range_m: 40.0,
            queue_capacity_packets: 50,
            include_sink_energy: false,
            indoor_zones: IndoorZone::default_layout(200.0, 200.0),
            sweep_node_counts: vec![25, 50, 75, 105],
            sweep_transmitters: vec![2, 6, 10, 14],
            energy: EnergyParams::default(),
            detection: DetectionSettings::default(),
            baselines: Protocol::ALL
                .iter()
                .map(|&p| BaselineKind::default_for(p))
                .collect(),
        }
    }
}

fn positive(name: &str, v: f64) -> Result<(), SimError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(SimError::Config(format!(
            "{name} must be positive, got {v}"
        )))
    }
}

impl ScenarioConfig {
    pub fn regions_x(&self) -> usize {
        (self.field_width_m / self.region_size_m).round() as usize
    }

    pub fn regions_y(&self) -> usize {
        (self.field_height_m / self.region_size_m).round() as usize
    }

    pub fn region_count(&self) -> usize {
        self.regions_x() * self.regions_y()
    }

    /// Airtime per byte: the configured service time, never faster than the link bandwidth.
    pub fn byte_time_s(&self) -> f64 {
        self.byte_service_time_s
            .max(8.0 / (self.bandwidth_kbps * 1000.0))
    }

    pub fn baseline(&self, protocol: Protocol) -> &BaselineKind {
        self.baselines
            .iter()
            .find(|b| b.protocol == protocol)
            .expect("every protocol has a baseline entry")
    }

    pub fn baseline_mut(&mut self, protocol: Protocol) -> &mut BaselineKind {
        self.baselines
            .iter_mut()
            .find(|b| b.protocol == protocol)
            .expect("every protocol has a baseline entry")
    }

    pub fn validate(&self) -> Result<(), SimError> {
        positive("field_width_m", self.field_width_m)?;
        positive("field_height_m", self.field_height_m)?;
        positive("region_size_m", self.region_size_m)?;
        for (name, dim) in [
            ("field_width_m", self.field_width_m),
            ("field_height_m", self.field_height_m),
        ] {
            let ratio = dim / self.region_size_m;
            if (ratio - ratio.round()).abs() > 1e-9 || ratio.round() < 1.0 {
                return Err(SimError::Config(format!(
                    "region_size_m {} does not divide {name} {dim}",
                    self.region_size_m
                )));
            }
        }
        if self.node_count < self.region_count() {
            return Err(SimError::Config(format!(
                "node_count {} leaves some of the {} regions empty",
                self.node_count,
                self.region_count()
            )));
        }
        if !(0.0..=self.field_width_m).contains(&self.sink_x)
            || !(0.0..=self.field_height_m).contains(&self.sink_y)
        {
            return Err(SimError::Config(format!(
                "sink ({}, {}) lies outside the field",
                self.sink_x, self.sink_y
            )));
        }
        positive("bandwidth_kbps", self.bandwidth_kbps)?;
        positive("byte_service_time_s", self.byte_service_time_s)?;
        positive("initial_battery_j", self.initial_battery_j)?;
        positive("sense_epoch_s", self.sense_epoch_s)?;
        positive("sense_duration_s", self.sense_duration_s)?;
        positive("radio_range_m", self.radio_range_m)?;
        if self.sense_duration_s > self.sense_epoch_s {
            return Err(SimError::Config(format!(
                "sense_duration_s {} exceeds sense_epoch_s {}",
                self.sense_duration_s, self.sense_epoch_s
            )));
        }
        if !(self.sim_duration_s >= 0.0 && self.sim_duration_s.is_finite()) {
            return Err(SimError::Config(format!(
                "sim_duration_s must be >= 0, got {}",
                self.sim_duration_s
            )));
        }
        if !(self.init_phase_s >= 0.0) {
            return Err(SimError::Config(format!(
                "init_phase_s must be >= 0, got {}",
                self.init_phase_s
            )));
        }
        // a zero-length run is a valid degenerate scenario
        if self.sim_duration_s > 0.0 && self.init_phase_s >= self.sim_duration_s {
            return Err(SimError::Config(format!(
                "init_phase_s {} must be shorter than sim_duration_s {}",
                self.init_phase_s, self.sim_duration_s
            )));
        }
        if self.connections == 0 {
            return Err(SimError::Config("connections must be positive".into()));
        }
        if self.packet_size_bytes == 0 {
            return Err(SimError::Config(
                "packet_size_bytes must be positive".into(),
            ));
        }
        if self.queue_capacity_packets == 0 {
            return Err(SimError::Config(
                "queue_capacity_packets must be positive".into(),
            ));
        }
        if self.runs == 0 {
            return Err(SimError::Config("runs must be positive".into()));
        }
        for z in &self.indoor_zones {
            z.validate()?;
        }
        self.energy.validate()?;
        let d = &self.detection;
        if !(d.pc >= 0.0 && d.pc <= 1.0) {
            return Err(SimError::Config(format!("pc {} must lie in [0, 1]", d.pc)));
        }
        if !(d.epsilon_mode > 0.0 && d.epsilon_mode < 0.5) {
            return Err(SimError::Config(format!(
                "epsilon_mode {} must lie in (0, 0.5)",
                d.epsilon_mode
            )));
        }
        d.roc()?;
        d.distribution()?;
        if !(d.alpha > 0.0 && d.alpha < 1.0) {
            return Err(SimError::Config(format!(
                "alpha {} must lie in (0, 1)",
                d.alpha
            )));
        }
        for p in Protocol::ALL {
            if self.baselines.iter().filter(|b| b.protocol == p).count() != 1 {
                return Err(SimError::Config(format!(
                    "expected exactly one baseline entry for {p}"
                )));
            }
        }
        for b in &self.baselines {
            b.validate()?;
        }
        Ok(())
    }
}
