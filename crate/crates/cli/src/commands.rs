//! The four CLI verbs: trajectory, ensemble, probe, template.

use crate::cli::CliError;
use crate::config::{Bundle, RunConfig};
use crate::output;
use std::path::Path;
use unravel_core::analysis::ensemble_vs_exact;
use unravel_core::beable::{bell_rates, born_probability};
use unravel_core::guiding::{evolve, GuidingTrajectory};
use unravel_core::unravel::{run_ensemble, run_trajectory};

/// Fraction of grid points that must sit inside the 3-sigma band for an
/// ensemble run to count as agreeing with the exact reduced state.
const BAND_SIGMA: f64 = 3.0;
const BAND_FRACTION: f64 = 0.99;

/// Integrate the guiding state, or reuse a matching snapshot cache when the
/// config names one.
fn obtain_guiding(cfg: &RunConfig, bundle: &Bundle) -> Result<GuidingTrajectory, CliError> {
    if let Some(cache_path) = &cfg.snapshot_cache {
        let path = if cache_path.is_absolute() {
            cache_path.clone()
        } else {
            cfg.out_dir.join(cache_path)
        };
        if path.exists() {
            let loaded = GuidingTrajectory::load(&path)
                .map_err(|e| CliError::Config(format!("snapshot cache {}: {e}", path.display())))?;
            loaded
                .verify_matches(&bundle.model, &bundle.grid)
                .map_err(|e| CliError::Config(format!("snapshot cache {}: {e}", path.display())))?;
            return Ok(loaded);
        }
        let guiding = evolve(&bundle.model, &bundle.initial, &bundle.grid, &bundle.evolve)
            .map_err(|e| CliError::Numerical(e.to_string()))?;
        guiding
            .save(&path)
            .map_err(|e| CliError::Config(format!("writing snapshot cache: {e}")))?;
        return Ok(guiding);
    }
    evolve(&bundle.model, &bundle.initial, &bundle.grid, &bundle.evolve)
        .map_err(|e| CliError::Numerical(e.to_string()))
}

fn check_hard_leakage(cfg: &RunConfig, guiding: &GuidingTrajectory) -> Result<(), CliError> {
    let worst = guiding.max_leakage();
    if worst > cfg.tolerances.leakage_hard {
        return Err(CliError::Numerical(format!(
            "truncation leakage {worst:.3e} exceeds the hard limit {:.3e}; raise run.cutoff",
            cfg.tolerances.leakage_hard
        )));
    }
    Ok(())
}

fn diagnostics_lines(cfg: &RunConfig, guiding: &GuidingTrajectory) -> Vec<String> {
    let norm_drift = guiding
        .norms()
        .iter()
        .map(|n| (n - 1.0).abs())
        .fold(0.0, f64::max);
    vec![
        format!("diagnostic: max_norm_drift = {norm_drift:.3e}"),
        format!("diagnostic: max_leakage = {:.3e}", guiding.max_leakage()),
        format!(
            "diagnostic: leakage_flagged = {}",
            guiding.leakage_flagged()
        ),
        format!("diagnostic: leakage_tolerance = {}", cfg.tolerances.leakage),
    ]
}

fn manifest_header(command: &str) -> Vec<String> {
    vec![
        format!("run manifest (unravel {})", env!("CARGO_PKG_VERSION")),
        format!("command: {command}"),
        "rerun with: unravel <command> --config run_manifest.txt".to_string(),
    ]
}

pub fn cmd_trajectory(cfg: &RunConfig) -> Result<(), CliError> {
    if cfg.trajectories_explicit && cfg.trajectories != 1 {
        eprintln!(
            "warning: run.trajectories = {} is ignored by the trajectory command",
            cfg.trajectories
        );
    }
    let bundle = cfg.build("config")?;
    output::ensure_dir(&cfg.out_dir)?;
    let guiding = obtain_guiding(cfg, &bundle)?;
    check_hard_leakage(cfg, &guiding)?;
    let traj = run_trajectory(
        &bundle.model,
        &bundle.measure,
        &guiding,
        cfg.seed,
        0,
        &bundle.policy,
    )
    .map_err(|e| CliError::Numerical(e.to_string()))?;

    output::ensure_dir(&cfg.out_dir)?;
    let t_csv = output::trajectory_csv(&cfg.out_dir, &traj, &bundle.measure)?;
    let j_csv = output::jumps_csv(&cfg.out_dir, &traj, &bundle.measure)?;
    let mut header = manifest_header("trajectory");
    header.extend(diagnostics_lines(cfg, &guiding));
    header.push(format!(
        "diagnostic: jumps = {} (clamp_events = {}, pmax_warnings = {})",
        traj.jumps.len(),
        traj.diagnostics.clamp_events,
        traj.diagnostics.pmax_warnings
    ));
    let manifest = output::write_manifest(&cfg.out_dir, &cfg.render(&header, true))?;

    println!(
        "trajectory: {} grid points, {} jumps -> {}, {}, {}",
        traj.configs.len(),
        traj.jumps.len(),
        t_csv.display(),
        j_csv.display(),
        manifest.display()
    );
    if guiding.leakage_flagged() {
        eprintln!(
            "warning: truncation leakage passed {:.1e}; results near the end of the run are degraded",
            cfg.tolerances.leakage
        );
    }
    if traj.diagnostics.pmax_warnings > 0 {
        eprintln!(
            "warning: per-step jump probability crossed the soft bound {} times; consider a smaller dt",
            traj.diagnostics.pmax_warnings
        );
    }
    Ok(())
}

pub fn cmd_ensemble(cfg: &RunConfig) -> Result<(), CliError> {
    let bundle = cfg.build("config")?;
    output::ensure_dir(&cfg.out_dir)?;
    let guiding = obtain_guiding(cfg, &bundle)?;
    check_hard_leakage(cfg, &guiding)?;
    if cfg.trajectories == 1 {
        eprintln!("warning: trajectories = 1, standard errors are zero by convention");
    }
    let ensemble = run_ensemble(
        &bundle.model,
        &bundle.measure,
        &guiding,
        cfg.trajectories,
        cfg.seed,
        0, // the global pool is already bounded by the threads setting
        &bundle.policy,
    )
    .map_err(|e| CliError::Numerical(e.to_string()))?;
    let series = ensemble_vs_exact(&ensemble, &bundle.model, &guiding)
        .map_err(|e| CliError::Numerical(e.to_string()))?;

    output::ensure_dir(&cfg.out_dir)?;
    let csv = output::ensemble_csv(&cfg.out_dir, &series)?;
    // band floor: the mean is quantized in one-trajectory steps of size 2/N
    let fractions = series.within_band_fraction(BAND_SIGMA, 2.0 / ensemble.n as f64);
    let td_max = series.trace_distance.iter().copied().fold(0.0, f64::max);
    let td_mean =
        series.trace_distance.iter().sum::<f64>() / series.trace_distance.len() as f64;
    let mut header = manifest_header("ensemble");
    header.extend(diagnostics_lines(cfg, &guiding));
    header.push(format!(
        "diagnostic: trace_distance mean = {td_mean:.3e}, max = {td_max:.3e}"
    ));
    header.push(format!(
        "diagnostic: within_3se_fraction = {}, {}, {}",
        fractions[0], fractions[1], fractions[2]
    ));
    header.push(format!(
        "diagnostic: clamp_events = {}, pmax_warnings = {}",
        ensemble.diagnostics.clamp_events, ensemble.diagnostics.pmax_warnings
    ));
    let manifest = output::write_manifest(&cfg.out_dir, &cfg.render(&header, true))?;

    println!(
        "ensemble: {} trajectories, within-3se fractions x={:.4} y={:.4} z={:.4}, \
         trace distance mean {:.2e} max {:.2e} -> {}, {}",
        ensemble.n,
        fractions[0],
        fractions[1],
        fractions[2],
        td_mean,
        td_max,
        csv.display(),
        manifest.display()
    );
    if ensemble.diagnostics.pmax_warnings > 0 {
        eprintln!(
            "warning: per-step jump probability crossed the soft bound {} times; consider a smaller dt",
            ensemble.diagnostics.pmax_warnings
        );
    }
    if fractions.iter().any(|&f| f < BAND_FRACTION) {
        return Err(CliError::Acceptance(format!(
            "ensemble mean strays outside {BAND_SIGMA} standard errors at more than {:.0}% of grid points",
            (1.0 - BAND_FRACTION) * 100.0
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbeKind {
    Ctau,
    RatesAt,
    BornAt,
}

pub fn cmd_probe(cfg: &RunConfig, what: ProbeKind, at: Option<f64>) -> Result<(), CliError> {
    let bundle = cfg.build("config")?;
    output::ensure_dir(&cfg.out_dir)?;
    match what {
        ProbeKind::Ctau => {
            let labels = bundle.spec.mode_labels();
            let mut text = String::from("t");
            for l in &labels {
                text.push_str(&format!(",re_c_{l},im_c_{l},abs2_c_{l}"));
            }
            text.push('\n');
            for j in 0..bundle.grid.num_points() {
                let t = bundle.grid.time(j);
                text.push_str(&format!("{t}"));
                for tau in 1..=bundle.spec.num_modes() {
                    let c = unravel_core::models::temporal_coefficient(
                        &bundle.model.params(),
                        tau,
                        t,
                    );
                    text.push_str(&format!(",{},{},{}", c.re, c.im, c.norm_sqr()));
                }
                text.push('\n');
            }
            let path = output::write_text(&cfg.out_dir, "ctau.csv", &text)?;
            let manifest =
                output::write_manifest(&cfg.out_dir, &cfg.render(&manifest_header("probe ctau"), true))?;
            println!("probe ctau -> {}, {}", path.display(), manifest.display());
        }
        ProbeKind::RatesAt | ProbeKind::BornAt => {
            let t_probe = at.ok_or_else(|| {
                CliError::Config("this probe needs --at <time>".to_string())
            })?;
            let j = snap_to_grid(cfg, t_probe)?;
            output::ensure_dir(&cfg.out_dir)?;
            let guiding = obtain_guiding(cfg, &bundle)?;
            check_hard_leakage(cfg, &guiding)?;
            let mut walker = guiding.walker(&bundle.model);
            let state = walker
                .get(j)
                .map_err(|e| CliError::Numerical(e.to_string()))?;
            let t = bundle.grid.time(j);
            if what == ProbeKind::BornAt {
                let mut text = String::from("config,probability\n");
                for rank in 0..bundle.measure.num_configs() {
                    let p = born_probability(state, &bundle.measure, rank);
                    text.push_str(&format!("{},{}\n", bundle.measure.config(rank).label(), p));
                }
                let path = output::write_text(&cfg.out_dir, "born.csv", &text)?;
                let manifest = output::write_manifest(
                    &cfg.out_dir,
                    &cfg.render(&manifest_header("probe born-at"), true),
                )?;
                println!(
                    "probe born-at t={t} -> {}, {}",
                    path.display(),
                    manifest.display()
                );
            } else {
                let mut text = String::from("t,from,to,mode,delta,current,rate\n");
                for rank in 0..bundle.measure.num_configs() {
                    let table =
                        bell_rates(state, &bundle.model, &bundle.measure, rank, t, &bundle.policy);
                    for e in &table.entries {
                        if e.current == 0.0 && e.rate == 0.0 {
                            continue;
                        }
                        text.push_str(&format!(
                            "{},{},{},{},{},{},{}\n",
                            t,
                            bundle.measure.config(rank).label(),
                            bundle.measure.config(e.target).label(),
                            e.mode,
                            e.delta,
                            e.current,
                            e.rate
                        ));
                    }
                }
                let path = output::write_text(&cfg.out_dir, "rates.csv", &text)?;
                let manifest = output::write_manifest(
                    &cfg.out_dir,
                    &cfg.render(&manifest_header("probe rates-at"), true),
                )?;
                println!(
                    "probe rates-at t={t} -> {}, {}",
                    path.display(),
                    manifest.display()
                );
            }
        }
    }
    Ok(())
}

fn snap_to_grid(cfg: &RunConfig, t: f64) -> Result<usize, CliError> {
    let steps = ((cfg.t_final - cfg.t0) / cfg.dt).round() as isize;
    let j = ((t - cfg.t0) / cfg.dt).round() as isize;
    if j < 0 || j > steps || !t.is_finite() {
        return Err(CliError::Config(format!(
            "probe time {t} outside the grid [{}, {}]",
            cfg.t0, cfg.t_final
        )));
    }
    Ok(j as usize)
}

pub fn cmd_template(preset: crate::config::Preset, out: Option<&Path>) -> Result<(), CliError> {
    let text = RunConfig::template(preset);
    match out {
        Some(dir) => {
            output::ensure_dir(dir)?;
            let path = output::write_text(dir, "template.ini", &text)?;
            println!("template -> {}", path.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}
