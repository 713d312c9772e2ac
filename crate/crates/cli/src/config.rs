//! Scenario files: TOML with `[simulation]`, `[energy]`, `[detection]` and
//! `[baselines.<kind>]` sections. Every key is optional; unknown keys are
//! rejected.

use std::collections::BTreeMap;
use std::path::Path;

use aes_core::simulator::{IndoorZone, Protocol, ScenarioConfig};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Environment variable that overrides the base seed of a config file.
pub const SEED_ENV: &str = "AES_SIM_SEED";

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    simulation: Option<SimulationSection>,
    energy: Option<EnergySection>,
    detection: Option<DetectionSection>,
    baselines: Option<BTreeMap<String, BaselineSection>>,
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct SimulationSection {
    field_width_m: Option<f64>,
    field_height_m: Option<f64>,
    region_size_m: Option<f64>,
    node_count: Option<usize>,
    sink_x: Option<f64>,
    sink_y: Option<f64>,
    bandwidth_kbps: Option<f64>,
    sim_duration_s: Option<f64>,
    init_phase_s: Option<f64>,
    connections: Option<usize>,
    data_total_bytes: Option<u64>,
    byte_service_time_s: Option<f64>,
    packet_size_bytes: Option<u64>,
    runs: Option<usize>,
    initial_battery_j: Option<f64>,
    seed: Option<u64>,
    sense_epoch_s: Option<f64>,
    sense_duration_s: Option<f64>,
    radio_range_m: Option<f64>,
    queue_capacity_packets: Option<usize>,
    include_sink_energy: Option<bool>,
    /// `[x_min, y_min, x_max, y_max]` per zone.
    indoor_zones: Option<Vec<[f64; 4]>>,
    sweep_node_counts: Option<Vec<usize>>,
    sweep_transmitters: Option<Vec<usize>>,
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct EnergySection {
    power_comm: Option<f64>,
    power_sense: Option<f64>,
    power_sleep: Option<f64>,
    tx_power_min: Option<f64>,
    tx_power_max: Option<f64>,
    e_min: Option<f64>,
    path_loss_n: Option<f64>,
    harvest_rate: Option<f64>,
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct DetectionSection {
    alpha: Option<f64>,
    roc_sensitivity: Option<f64>,
    roc_k_offset: Option<usize>,
    pk: Option<Vec<f64>>,
    pc: Option<f64>,
    epsilon_mode: Option<f64>,
    solver_tol: Option<f64>,
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct BaselineSection {
    duty_cycle_fraction: Option<f64>,
    overhead_factor: Option<f64>,
    schedule_based: Option<bool>,
    schedule_surcharge: Option<f64>,
    adaptive_timeout_s: Option<f64>,
}

macro_rules! apply {
    ($section:expr, $target:expr, $($field:ident),+ $(,)?) => {
        $( if let Some(v) = $section.$field.clone() { $target.$field = v; } )+
    };
}

/// Parse a scenario from TOML text. `origin` prefixes diagnostics.
pub fn parse_config(text: &str, origin: &str) -> Result<ScenarioConfig, CliError> {
    let file: FileConfig = toml::from_str(text).map_err(|e| {
        let line = e.span().map(|s| {
            text.as_bytes()[..s.start.min(text.len())]
                .iter()
                .filter(|&&b| b == b'\n')
                .count()
                + 1
        });
        let msg = e.message().replace('\n', " ");
        match line {
            Some(l) => CliError::Config(format!("{origin}:{l}: {msg}")),
            None => CliError::Config(format!("{origin}: {msg}")),
        }
    })?;
    let mut cfg = ScenarioConfig::default();
    if let Some(s) = file.simulation {
        apply!(
            s,
            cfg,
            field_width_m,
            field_height_m,
            region_size_m,
            node_count,
            sink_x,
            sink_y,
            bandwidth_kbps,
            sim_duration_s,
            init_phase_s,
            connections,
            data_total_bytes,
            byte_service_time_s,
            packet_size_bytes,
            runs,
            initial_battery_j,
            seed,
            sense_epoch_s,
            sense_duration_s,
            radio_range_m,
            queue_capacity_packets,
            include_sink_energy,
            sweep_node_counts,
            sweep_transmitters,
        );
        if let Some(zones) = s.indoor_zones {
            cfg.indoor_zones = zones
                .into_iter()
                .map(|[x0, y0, x1, y1]| IndoorZone::new(x0, y0, x1, y1))
                .collect();
        }
    }
    if let Some(e) = file.energy {
        apply!(
            e,
            cfg.energy,
            power_comm,
            power_sense,
            power_sleep,
            tx_power_min,
            tx_power_max,
            e_min,
            path_loss_n,
            harvest_rate,
        );
    }
    if let Some(d) = file.detection {
        apply!(
            d,
            cfg.detection,
            alpha,
            roc_sensitivity,
            roc_k_offset,
            pk,
            pc,
            epsilon_mode,
            solver_tol,
        );
    }
    for (key, b) in file.baselines.unwrap_or_default() {
        let protocol: Protocol = key
            .parse()
            .map_err(|_| CliError::Config(format!("{origin}: unknown baseline section `{key}`")))?;
        let target = cfg.baseline_mut(protocol);
        apply!(
            b,
            target,
            duty_cycle_fraction,
            overhead_factor,
            schedule_based,
            schedule_surcharge,
            adaptive_timeout_s,
        );
    }
    cfg.validate()
        .map_err(|e| CliError::Config(format!("{origin}: {e}")))?;
    Ok(cfg)
}

/// Read a scenario file, or the defaults when no path is given.
pub fn load_config(path: Option<&Path>) -> Result<ScenarioConfig, CliError> {
    match path {
        None => Ok(ScenarioConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            parse_config(&text, &p.display().to_string())
        }
    }
}

/// Seed precedence: command-line flag, then [`SEED_ENV`], then the file.
pub fn resolve_seed(flag: Option<u64>, env: Option<&str>, file: u64) -> Result<u64, CliError> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match env.map(str::trim).filter(|s| !s.is_empty()) {
        Some(v) => v
            .parse()
            .map_err(|_| CliError::Config(format!("{SEED_ENV}={v} is not a non-negative integer"))),
        None => Ok(file),
    }
}

/// The complete effective configuration as TOML; parses back to `cfg`.
pub fn dump_config(cfg: &ScenarioConfig) -> String {
    let file = FileConfig {
        simulation: Some(SimulationSection {
            field_width_m: Some(cfg.field_width_m),
            field_height_m: Some(cfg.field_height_m),
            region_size_m: Some(cfg.region_size_m),
            node_count: Some(cfg.node_count),
            sink_x: Some(cfg.sink_x),
            sink_y: Some(cfg.sink_y),
            bandwidth_kbps: Some(cfg.bandwidth_kbps),
            sim_duration_s: Some(cfg.sim_duration_s),
            init_phase_s: Some(cfg.init_phase_s),
            connections: Some(cfg.connections),
            data_total_bytes: Some(cfg.data_total_bytes),
            byte_service_time_s: Some(cfg.byte_service_time_s),
            packet_size_bytes: Some(cfg.packet_size_bytes),
            runs: Some(cfg.runs),
            initial_battery_j: Some(cfg.initial_battery_j),
            seed: Some(cfg.seed),
            sense_epoch_s: Some(cfg.sense_epoch_s),
            sense_duration_s: Some(cfg.sense_duration_s),
            radio_range_m: Some(cfg.radio_range_m),
            queue_capacity_packets: Some(cfg.queue_capacity_packets),
            include_sink_energy: Some(cfg.include_sink_energy),
            indoor_zones: Some(
                cfg.indoor_zones
                    .iter()
                    .map(|z| [z.x_min, z.y_min, z.x_max, z.y_max])
                    .collect(),
            ),
            sweep_node_counts: Some(cfg.sweep_node_counts.clone()),
            sweep_transmitters: Some(cfg.sweep_transmitters.clone()),
        }),
        energy: Some(EnergySection {
            power_comm: Some(cfg.energy.power_comm),
            power_sense: Some(cfg.energy.power_sense),
            power_sleep: Some(cfg.energy.power_sleep),
            tx_power_min: Some(cfg.energy.tx_power_min),
            tx_power_max: Some(cfg.energy.tx_power_max),
            e_min: Some(cfg.energy.e_min),
            path_loss_n: Some(cfg.energy.path_loss_n),
            harvest_rate: Some(cfg.energy.harvest_rate),
        }),
        detection: Some(DetectionSection {
            alpha: Some(cfg.detection.alpha),
            roc_sensitivity: Some(cfg.detection.roc_sensitivity),
            roc_k_offset: Some(cfg.detection.roc_k_offset),
            pk: Some(cfg.detection.pk.clone()),
            pc: Some(cfg.detection.pc),
            epsilon_mode: Some(cfg.detection.epsilon_mode),
            solver_tol: Some(cfg.detection.solver_tol),
        }),
        baselines: Some(
            cfg.baselines
                .iter()
                .map(|b| {
                    (
                        b.protocol.key().to_string(),
                        BaselineSection {
                            duty_cycle_fraction: Some(b.duty_cycle_fraction),
                            overhead_factor: Some(b.overhead_factor),
                            schedule_based: Some(b.schedule_based),
                            schedule_surcharge: Some(b.schedule_surcharge),
                            adaptive_timeout_s: Some(b.adaptive_timeout_s),
                        },
                    )
                })
                .collect(),
        ),
    };
    toml::to_string(&file).expect("scenario values are representable in TOML")
}
