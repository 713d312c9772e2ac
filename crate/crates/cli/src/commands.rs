//! Subcommand implementations. Each returns its output or a [`CliError`];
//! nothing here exits the process.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use aes_core::detection::{solve_thresholds, DetectionError, RocModel, SampleCountDistribution};
use aes_core::integrator::{
    integrate, EnergyFunction, GradientFlowSystem, HarmonicOscillator, IntegratorConfig,
    IntegratorError, Pendulum, Trajectory,
};
use aes_core::simulator::{run, run_campaign, BaselineKind, Campaign, Protocol, SimError};
use aes_core::{Execution, ScenarioConfig};

use crate::config::{dump_config, load_config, resolve_seed, SEED_ENV};
use crate::output::{fmt_sig, lifetime_plot, plot_blocks, runs_csv, summary_csv};
use crate::{
    CliError, CompareArgs, DetectSolveArgs, DumpConfigArgs, IntegrateArgs, SimulateArgs, SystemKind,
};

fn sim_error(e: SimError) -> CliError {
    match e {
        SimError::Config(_)
        | SimError::Detection(_)
        | SimError::Energy(_)
        | SimError::EmptyRegion(_) => CliError::Config(e.to_string()),
        _ => CliError::Runtime(e.to_string()),
    }
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))
}

fn env_seed() -> Option<String> {
    std::env::var(SEED_ENV).ok()
}

/// Load the config and fold the seed override into it.
fn effective_config(
    path: Option<&Path>,
    seed_flag: Option<u64>,
) -> Result<ScenarioConfig, CliError> {
    let mut cfg = load_config(path)?;
    cfg.seed = resolve_seed(seed_flag, env_seed().as_deref(), cfg.seed)?;
    Ok(cfg)
}

fn parse_protocol(s: &str) -> Result<Protocol, CliError> {
    s.parse()
        .map_err(|e: SimError| CliError::Input(e.to_string()))
}

/// `all` or a comma-separated list, deduplicated, in the order given.
pub fn parse_protocols(list: &str) -> Result<Vec<Protocol>, CliError> {
    if list.trim().eq_ignore_ascii_case("all") {
        return Ok(Protocol::ALL.to_vec());
    }
    let mut out = Vec::new();
    for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let p = parse_protocol(item)?;
        if !out.contains(&p) {
            out.push(p);
        }
    }
    if out.is_empty() {
        return Err(CliError::Input("no protocols selected".into()));
    }
    Ok(out)
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let cfg = effective_config(args.config.as_deref(), args.seed)?;
    let protocol = parse_protocol(&args.protocol)?;
    let report = run(&cfg, cfg.baseline(protocol), cfg.seed).map_err(sim_error)?;
    create_dir(&args.out)?;
    write_file(&args.out, "runs.csv", &runs_csv(&[report], cfg.seed))?;
    write_file(&args.out, "config.effective.toml", &dump_config(&cfg))
}

fn campaign(
    cfg: &ScenarioConfig,
    kinds: &[BaselineKind],
    seeds: &[u64],
    exec: Execution,
) -> Result<Campaign, CliError> {
    run_campaign(cfg, kinds, seeds, exec).map_err(sim_error)
}

pub fn cmd_compare(args: &CompareArgs) -> Result<(), CliError> {
    let cfg = effective_config(args.config.as_deref(), args.seed)?;
    let protocols = parse_protocols(&args.protocols)?;
    let runs = args.runs.unwrap_or(cfg.runs);
    if runs == 0 {
        return Err(CliError::Input("--runs must be at least 1".into()));
    }
    if args.jobs == Some(0) {
        return Err(CliError::Input("--jobs must be at least 1".into()));
    }
    let exec = Execution::from_jobs(args.jobs);
    let kinds: Vec<BaselineKind> = protocols.iter().map(|&p| cfg.baseline(p).clone()).collect();
    let seeds: Vec<u64> = (0..runs as u64).map(|i| cfg.seed.wrapping_add(i)).collect();

    let main = campaign(&cfg, &kinds, &seeds, exec)?;

    let (node_counts, transmitters) = if args.no_sweeps {
        (vec![cfg.node_count], vec![cfg.connections])
    } else {
        (
            cfg.sweep_node_counts.clone(),
            cfg.sweep_transmitters.clone(),
        )
    };
    let mut by_nodes = Vec::with_capacity(node_counts.len());
    for &n in &node_counts {
        let c = ScenarioConfig {
            node_count: n,
            ..cfg.clone()
        };
        by_nodes.push((n as f64, campaign(&c, &kinds, &seeds, exec)?));
    }
    let mut by_tx = Vec::with_capacity(transmitters.len());
    for &t in &transmitters {
        let c = ScenarioConfig {
            connections: t,
            ..cfg.clone()
        };
        by_tx.push((t as f64, campaign(&c, &kinds, &seeds, exec)?));
    }

    let series = |points: &[(f64, Campaign)], pick: &dyn Fn(&Campaign, Protocol) -> Option<f64>| {
        protocols
            .iter()
            .filter_map(|&p| {
                let pts: Vec<(f64, f64)> = points
                    .iter()
                    .filter_map(|(x, c)| pick(c, p).map(|y| (*x, y)))
                    .collect();
                (!pts.is_empty()).then(|| (p.name().to_string(), pts))
            })
            .collect::<Vec<_>>()
    };
    let energy = series(&by_nodes, &|c, p| c.row(p).map(|r| r.total_energy_j.mean));
    let savings = series(&by_nodes, &|c, p| {
        (p != Protocol::Aes)
            .then(|| c.row(p).and_then(|r| r.savings_pct))
            .flatten()
    });
    let per_node = series(&by_tx, &|c, p| c.row(p).map(|r| r.mean_node_energy_j.mean));
    let lifetimes: Vec<(Protocol, f64)> = main
        .summary
        .iter()
        .map(|r| (r.protocol, r.lifetime_s.mean))
        .collect();

    create_dir(&args.out)?;
    write_file(&args.out, "runs.csv", &runs_csv(&main.reports, cfg.seed))?;
    write_file(&args.out, "summary.csv", &summary_csv(&main.summary))?;
    write_file(
        &args.out,
        "energy_vs_nodes.dat",
        &plot_blocks(
            "total energy vs node count",
            "nodes",
            "total_energy_j",
            &energy,
        ),
    )?;
    write_file(
        &args.out,
        "savings_vs_nodes.dat",
        &plot_blocks(
            "AES saving against each baseline vs node count",
            "nodes",
            "savings_pct",
            &savings,
        ),
    )?;
    write_file(
        &args.out,
        "per_node_energy_vs_transmitters.dat",
        &plot_blocks(
            "mean per-node energy vs transmitters",
            "transmitters",
            "mean_node_energy_j",
            &per_node,
        ),
    )?;
    write_file(
        &args.out,
        "lifetime_vs_protocol.dat",
        &lifetime_plot(&lifetimes),
    )?;
    write_file(&args.out, "config.effective.toml", &dump_config(&cfg))
}

fn detection_error(e: DetectionError) -> CliError {
    match e {
        DetectionError::NonConvergence { .. } => CliError::Runtime(e.to_string()),
        _ => CliError::Input(e.to_string()),
    }
}

/// Returns the report printed on standard output.
pub fn cmd_detect_solve(args: &DetectSolveArgs) -> Result<String, CliError> {
    let dist = match &args.pk {
        Some(pk) => {
            if pk.len() != args.kmax + 1 {
                return Err(CliError::Input(format!(
                    "--pk has {} entries but --kmax {} needs {}",
                    pk.len(),
                    args.kmax,
                    args.kmax + 1
                )));
            }
            SampleCountDistribution::new(pk.clone()).map_err(detection_error)?
        }
        None => SampleCountDistribution::uniform(args.kmax),
    };
    let roc = RocModel::power_law(args.s, args.kmax)
        .map_err(detection_error)?
        .with_k_offset(args.k_offset);
    let sol = solve_thresholds(&roc, &dist, args.alpha, args.tol).map_err(detection_error)?;
    let g = |x: f64| fmt_sig(x, 12);
    let ue: Vec<String> = sol.ue.iter().map(|&u| g(u)).collect();
    let mut out = String::new();
    writeln!(out, "ue = {}", ue.join(" ")).expect("writing to a string");
    writeln!(out, "gamma = {}", g(sol.gamma)).expect("writing to a string");
    writeln!(out, "expected_ue = {}", g(sol.expected_ue)).expect("writing to a string");
    writeln!(out, "expected_pd = {}", g(sol.expected_pd)).expect("writing to a string");
    Ok(out)
}

fn integrator_error(e: IntegratorError) -> CliError {
    match e {
        IntegratorError::NonConvergence { .. } => CliError::Runtime(e.to_string()),
        _ => CliError::Input(e.to_string()),
    }
}

fn trajectory<E: EnergyFunction>(
    energy: E,
    x0: &[f64],
    cfg: &IntegratorConfig,
    steps: usize,
) -> Result<Trajectory, CliError> {
    integrate(&GradientFlowSystem::canonical(energy), x0, cfg, steps).map_err(integrator_error)
}

/// Plot data for a trajectory: one `t energy` line per step, then the drift.
pub fn energy_plot(name: &str, traj: &Trajectory) -> String {
    let mut out = format!(
        "# {name} h = {}\n# columns: t energy\n",
        fmt_sig(traj.step, 12)
    );
    for (n, e) in traj.energies.iter().enumerate() {
        writeln!(
            out,
            "{} {}",
            fmt_sig(n as f64 * traj.step, 12),
            fmt_sig(*e, 17)
        )
        .expect("writing to a string");
    }
    writeln!(out, "# max_drift {:e}", traj.max_drift()).expect("writing to a string");
    out
}

pub fn cmd_integrate(args: &IntegrateArgs) -> Result<(), CliError> {
    if !(args.h > 0.0 && args.h.is_finite()) {
        return Err(CliError::Input(format!(
            "--h must be positive, got {}",
            args.h
        )));
    }
    if !(args.q0.is_finite() && args.p0.is_finite()) {
        return Err(CliError::Input("initial state must be finite".into()));
    }
    let cfg = IntegratorConfig {
        step: args.h,
        points: args.points,
        fixed_point_tol: args.tol,
        max_fixed_point_iters: args.max_iters,
    };
    let x0 = [args.q0, args.p0];
    let (name, traj) = match args.system {
        SystemKind::Oscillator => (
            "oscillator",
            trajectory(HarmonicOscillator, &x0, &cfg, args.steps)?,
        ),
        SystemKind::Pendulum => ("pendulum", trajectory(Pendulum, &x0, &cfg, args.steps)?),
    };
    fs::write(&args.out, energy_plot(name, &traj))
        .map_err(|e| CliError::Io(format!("{}: {e}", args.out.display())))
}

pub fn cmd_dump_config(args: &DumpConfigArgs) -> Result<String, CliError> {
    Ok(dump_config(&load_config(args.config.as_deref())?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn protocol_lists() {
        assert_eq!(parse_protocols("all").unwrap(), Protocol::ALL.to_vec());
        assert_eq!(
            parse_protocols("tmac, AES,tmac").unwrap(),
            vec![Protocol::Tmac, Protocol::Aes]
        );
        assert_eq!(parse_protocols("bogus").unwrap_err().exit_code(), 2);
        assert_eq!(parse_protocols(" , ").unwrap_err().exit_code(), 2);
    }

    #[test]
    fn single_point_solution_is_closed_form() {
        let args = DetectSolveArgs {
            alpha: 0.25,
            s: 1.0,
            kmax: 0,
            pk: None,
            k_offset: 1,
            tol: 1e-12,
        };
        let text = cmd_detect_solve(&args).unwrap();
        assert!(text.starts_with("ue = 0.25\ngamma = 1\n"), "{text}");
        assert!(text.contains("expected_pd = 0.5\n"), "{text}");
    }
}
