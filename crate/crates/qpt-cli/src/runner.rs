//! Experiment execution: expand the grid, run every point through the
//! order-preserving worker pool, and persist one CSV plus one metadata
//! sidecar. Content is identical for any worker count; per-point failures
//! are embedded in the table (`status` column) and flagged in the exit
//! code, never discarded.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};

use qpt_core::evolve::{run_quench_ion, run_quench_rabi, IonQuenchSpec, QuenchSpec, QuenchResult};
use qpt_core::models::{map_rabi_to_lasers, rabi_from_dimensionless, Sideband};
use qpt_core::scaling;
use qpt_core::spectral;
use qpt_core::sweep;

use crate::config::{validate, ExperimentConfig, ExperimentKind, IssueLevel};
use crate::table::{fmt_bool, fmt_f64, sidecar_path, ResultTable, Sidecar, SCHEMA_VERSION};

pub struct RunOutcome {
    pub csv_path: PathBuf,
    pub failed_points: usize,
}

/// Validate, execute, persist. Returns the process exit code contract via
/// `failed_points` (0 = clean).
pub fn execute(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    let issues = validate(cfg);
    for issue in &issues {
        match issue.level {
            IssueLevel::Warning => eprintln!("warning: {}", issue.message),
            IssueLevel::Error => eprintln!("error: {}", issue.message),
        }
    }
    if issues.iter().any(|i| i.level == IssueLevel::Error) {
        bail!("configuration is invalid; see errors above");
    }

    let workers = sweep::init_workers(resolved_workers(cfg));
    let started = Instant::now();

    let (table, echo_columns, extra_notes, failed_points) = match cfg.kind {
        ExperimentKind::GsSweep => run_gs_sweep(cfg),
        ExperimentKind::QuenchSweep | ExperimentKind::NoisyQuench => run_quench_sweep(cfg),
        ExperimentKind::IonSim => run_ion_sim(cfg),
        ExperimentKind::Adiabaticity => run_adiabaticity(cfg),
        ExperimentKind::Collapse => run_collapse(cfg)?,
        ExperimentKind::CompileLasers => run_compile_lasers(cfg)?,
    };

    let out_dir = Path::new(&cfg.out_dir);
    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("cannot create {}", out_dir.display()))?;
    let csv_path = out_dir.join(format!("{}.csv", cfg.effective_label()));
    table.write_csv(&csv_path)?;

    let mut notes: Vec<String> = issues
        .iter()
        .filter(|i| i.level == IssueLevel::Warning)
        .map(|i| format!("warning: {}", i.message))
        .collect();
    notes.extend(extra_notes);
    let sidecar = Sidecar {
        schema_version: SCHEMA_VERSION,
        kind: cfg.kind.name().to_string(),
        label: cfg.effective_label(),
        policy_hash: cfg.policy_hash(),
        config_hash: cfg.config_hash(),
        echo_columns,
        rows: table.rows.len(),
        workers,
        wall_time_s: started.elapsed().as_secs_f64(),
        notes,
        config_toml: cfg.to_toml(),
    };
    sidecar.write(&sidecar_path(&csv_path))?;

    println!(
        "wrote {} ({} rows, {} failed points, {:.1} s on {} workers)",
        csv_path.display(),
        table.rows.len(),
        failed_points,
        started.elapsed().as_secs_f64(),
        workers
    );
    Ok(RunOutcome {
        csv_path,
        failed_points,
    })
}

fn resolved_workers(cfg: &ExperimentConfig) -> usize {
    if cfg.workers > 0 {
        return cfg.workers;
    }
    std::env::var("QPT_WORKERS")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(0)
}

fn nan_row(echo: Vec<String>, width: usize, message: &str) -> Vec<String> {
    let mut row = echo;
    while row.len() < width - 1 {
        row.push("nan".to_string());
    }
    row.push(format!("error: {message}"));
    row
}

fn run_gs_sweep(cfg: &ExperimentConfig) -> (ResultTable, usize, Vec<String>, usize) {
    let header = [
        "R", "g", "sigma_z", "sigma_z_singular", "gap", "G", "S_s", "cutoff", "tail", "status",
    ];
    let mut table = ResultTable::new(&header);
    let mut grid = Vec::new();
    for &r in &cfg.r_list {
        let mut gs = cfg.g_list.clone();
        gs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for g in gs {
            grid.push((r, g));
        }
    }
    let omega0 = cfg.omega0;
    let seed = cfg.numerics.gs_cutoff_seed;
    let rows = sweep::par_map(grid, move |(r, g)| {
        let echo = vec![fmt_f64(r), fmt_f64(g)];
        let point = rabi_from_dimensionless(r, g, omega0)
            .and_then(|params| spectral::rabi_ground_state(&params, seed));
        match point {
            Ok(gs) => {
                let (big_g, s_s) = match scaling::rescale_equilibrium(r, g, gs.sigma_z_singular) {
                    Ok(p) => (p.g_big, p.rescaled),
                    Err(_) => (0.0, f64::NAN), // at the critical point
                };
                vec![
                    fmt_f64(r),
                    fmt_f64(g),
                    fmt_f64(gs.sigma_z),
                    fmt_f64(gs.sigma_z_singular),
                    fmt_f64(gs.gap),
                    fmt_f64(big_g),
                    fmt_f64(s_s),
                    gs.cutoff_used.to_string(),
                    fmt_f64(gs.tail),
                    "ok".to_string(),
                ]
            }
            Err(e) => nan_row(echo, header.len(), &e.to_string()),
        }
    });
    let failed = rows.iter().filter(|r| r.last().unwrap() != "ok").count();
    for row in rows {
        table.push(row);
    }
    (table, 2, Vec::new(), failed)
}

/// Grid entries for dynamic sweeps: `g_f` either direct or derived from a
/// rescaled target `G_f`.
fn quench_grid(cfg: &ExperimentConfig) -> Vec<(f64, f64, f64, f64)> {
    let mut taus = cfg.tau_q_list.clone();
    taus.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut grid = Vec::new();
    if !cfg.g_final_list.is_empty() {
        for &big_g in &cfg.g_final_list {
            for &r in &cfg.r_list {
                let g_f = ExperimentConfig::g_of_big_g(big_g, r);
                for &tau in &taus {
                    grid.push((big_g, r, g_f, tau));
                }
            }
        }
    } else {
        for &g_f in &cfg.g_list {
            for &r in &cfg.r_list {
                let big_g = r * (g_f - 1.0).abs().powf(1.5);
                for &tau in &taus {
                    grid.push((big_g, r, g_f, tau));
                }
            }
        }
    }
    grid
}

fn quench_outputs(r: f64, g_f: f64, tau: f64, res: &QuenchResult) -> Vec<String> {
    let point = scaling::rescale_dynamic(r, g_f, tau, res.residual);
    let sigma_z_singular_final = res.sigma_z_final + 1.0;
    let s_s_final = scaling::rescale_equilibrium(r, g_f, sigma_z_singular_final)
        .map(|p| p.rescaled)
        .unwrap_or(f64::NAN);
    let drift = res.stats.max_norm_drift.max(res.stats.max_trace_drift);
    vec![
        fmt_f64(res.sigma_z_final),
        fmt_f64(res.sigma_z_ground),
        fmt_f64(res.residual),
        fmt_f64(sigma_z_singular_final),
        fmt_f64(point.t_big.unwrap()),
        fmt_f64(point.rescaled),
        fmt_f64(s_s_final),
        res.cutoff_used.to_string(),
        res.stats.steps.to_string(),
        fmt_f64(drift),
        fmt_bool(res.non_universal),
        "ok".to_string(),
    ]
}

const QUENCH_HEADER: [&str; 16] = [
    "G_f",
    "R",
    "g_f",
    "tau_q",
    "sigma_z_final",
    "sigma_z_ground",
    "residual",
    "sigma_z_singular_final",
    "T",
    "S_r",
    "S_s_final",
    "cutoff",
    "steps",
    "drift",
    "non_universal",
    "status",
];

fn run_quench_sweep(cfg: &ExperimentConfig) -> (ResultTable, usize, Vec<String>, usize) {
    let mut table = ResultTable::new(&QUENCH_HEADER);
    let grid = quench_grid(cfg);
    let cfg = cfg.clone();
    let rows = sweep::par_map(grid, move |(big_g, r, g_f, tau)| {
        let echo = vec![fmt_f64(big_g), fmt_f64(r), fmt_f64(g_f), fmt_f64(tau)];
        let outcome = rabi_from_dimensionless(r, g_f, cfg.omega0).and_then(|target| {
            let spec = QuenchSpec {
                target,
                tau_q: tau / cfg.omega0,
                noise: cfg.noise.to_rates(cfg.omega0),
                cutoff_seed: cfg.quench_cutoff_seed(r),
                policy: cfg.step_policy(),
                samples: cfg.numerics.samples,
            };
            run_quench_rabi(&spec)
        });
        match outcome {
            Ok(res) => {
                let mut row = echo;
                row.extend(quench_outputs(r, g_f, tau, &res));
                row
            }
            Err(e) => nan_row(echo, QUENCH_HEADER.len(), &e.to_string()),
        }
    });
    let failed = rows.iter().filter(|r| r.last().unwrap() != "ok").count();
    for row in rows {
        table.push(row);
    }
    (table, 4, Vec::new(), failed)
}

const ION_HEADER: [&str; 21] = [
    "geometry",
    "R",
    "g_f",
    "G_f",
    "tau_q",
    "tau_q_seconds",
    "omega_d_final_hz",
    "delta_blue_hz",
    "delta_red_hz",
    "sigma_z_final",
    "sigma_z_ground",
    "residual",
    "sigma_z_singular_final",
    "T",
    "S_r",
    "S_s_final",
    "cutoff",
    "steps",
    "drift",
    "ion_frame_noise",
    "status",
];

fn run_ion_sim(cfg: &ExperimentConfig) -> (ResultTable, usize, Vec<String>, usize) {
    let mut table = ResultTable::new(&ION_HEADER);
    let mut grid = Vec::new();
    {
        let mut taus = cfg.tau_q_list.clone();
        taus.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for &r in &cfg.r_list {
            let pairs: Vec<(f64, f64)> = if !cfg.g_final_list.is_empty() {
                cfg.g_final_list
                    .iter()
                    .map(|&big_g| (ExperimentConfig::g_of_big_g(big_g, r), big_g))
                    .collect()
            } else {
                cfg.g_list
                    .iter()
                    .map(|&g| (g, r * (g - 1.0).abs().powf(1.5)))
                    .collect()
            };
            for (g_f, big_g) in pairs {
                for &tau in &taus {
                    grid.push((r, g_f, big_g, tau));
                }
            }
        }
    }

    let cfg = cfg.clone();
    let geometry = cfg.laser_geometry;
    let rows = sweep::par_map(grid, move |(r, g_f, big_g, tau)| {
        let echo = vec![
            geometry.name().to_string(),
            fmt_f64(r),
            fmt_f64(g_f),
            fmt_f64(big_g),
            fmt_f64(tau),
        ];
        let tau_seconds = cfg.ion_tau_seconds(tau);
        let outcome = map_rabi_to_lasers(
            r,
            g_f,
            cfg.omega0_eff_angular(),
            cfg.eta,
            geometry.to_core(),
            cfg.nu_angular(),
            tau_seconds,
            cfg.epsilon,
        )
        .and_then(|schedule| {
            let spec = IonQuenchSpec {
                noise: cfg.noise.to_rates(cfg.omega0_eff_angular()),
                cutoff_seed: cfg.quench_cutoff_seed(r),
                policy: cfg.step_policy(),
                samples: cfg.numerics.samples,
                schedule,
            };
            let res = run_quench_ion(&spec)?;
            Ok((spec.schedule, res))
        });
        match outcome {
            Ok((schedule, res)) => {
                let tau2pi = std::f64::consts::TAU;
                let delta_blue = schedule
                    .lasers
                    .iter()
                    .find(|l| l.sideband == Sideband::Blue)
                    .map(|l| l.detuning)
                    .unwrap_or(f64::NAN);
                let delta_red = schedule
                    .lasers
                    .iter()
                    .find(|l| l.sideband == Sideband::Red)
                    .map(|l| l.detuning)
                    .unwrap_or(f64::NAN);
                let mut row = echo;
                row.push(fmt_f64(tau_seconds));
                row.push(fmt_f64(schedule.mean_final_rabi() / tau2pi));
                row.push(fmt_f64(delta_blue / tau2pi));
                row.push(fmt_f64(delta_red / tau2pi));
                let point = scaling::rescale_dynamic(r, g_f, tau, res.residual);
                let singular = res.sigma_z_final + 1.0;
                let s_s_final = scaling::rescale_equilibrium(r, g_f, singular)
                    .map(|p| p.rescaled)
                    .unwrap_or(f64::NAN);
                let drift = res.stats.max_norm_drift.max(res.stats.max_trace_drift);
                row.extend([
                    fmt_f64(res.sigma_z_final),
                    fmt_f64(res.sigma_z_ground),
                    fmt_f64(res.residual),
                    fmt_f64(singular),
                    fmt_f64(point.t_big.unwrap()),
                    fmt_f64(point.rescaled),
                    fmt_f64(s_s_final),
                    res.cutoff_used.to_string(),
                    res.stats.steps.to_string(),
                    fmt_f64(drift),
                    fmt_bool(res.ion_frame_noise),
                    "ok".to_string(),
                ]);
                row
            }
            Err(e) => nan_row(echo, ION_HEADER.len(), &e.to_string()),
        }
    });
    let failed = rows.iter().filter(|r| r.last().unwrap() != "ok").count();
    for row in rows {
        table.push(row);
    }
    (table, 5, Vec::new(), failed)
}

fn run_adiabaticity(cfg: &ExperimentConfig) -> (ResultTable, usize, Vec<String>, usize) {
    let header = ["R", "tau_q", "g", "rel_deviation", "status"];
    let mut table = ResultTable::new(&header);
    let mut grid = Vec::new();
    for &r in &cfg.r_list {
        let mut taus = cfg.tau_q_list.clone();
        taus.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for tau in taus {
            grid.push((r, tau));
        }
    }
    let omega0 = cfg.omega0;
    let checkpoints = cfg.numerics.adiabaticity_checkpoints;
    let cfg2 = cfg.clone();
    let per_point = sweep::par_map(grid, move |(r, tau)| {
        let profile = scaling::adiabaticity_profile(
            r,
            tau / omega0,
            omega0,
            cfg2.quench_cutoff_seed(r),
            checkpoints,
        );
        match profile {
            Ok(p) => p
                .points
                .into_iter()
                .map(|(g, dev)| {
                    vec![
                        fmt_f64(r),
                        fmt_f64(tau),
                        fmt_f64(g),
                        fmt_f64(dev),
                        "ok".to_string(),
                    ]
                })
                .collect::<Vec<_>>(),
            Err(e) => vec![nan_row(
                vec![fmt_f64(r), fmt_f64(tau), "nan".to_string()],
                header.len(),
                &e.to_string(),
            )],
        }
    });
    let mut failed = 0;
    for rows in per_point {
        for row in rows {
            if row.last().unwrap() != "ok" {
                failed += 1;
            }
            table.push(row);
        }
    }
    (table, 3, Vec::new(), failed)
}

fn run_collapse(cfg: &ExperimentConfig) -> Result<(ResultTable, usize, Vec<String>, usize)> {
    let header = [
        "input",
        "group",
        "n_curves",
        "grid_points",
        "spread_max",
        "spread_rms",
        "threshold",
        "collapsed",
        "log_abscissa",
        "status",
    ];
    let mut table = ResultTable::new(&header);
    let mut failed = 0;
    let mut notes = Vec::new();

    for input in &cfg.inputs {
        let path = PathBuf::from(input);
        let data = ResultTable::read_csv(&path)?;
        let groups = group_curves(&data, cfg, &mut notes)
            .with_context(|| format!("{}: cannot group into curves", path.display()))?;
        for (group, curves, threshold) in groups {
            let echo = vec![input.clone(), group.clone()];
            match scaling::collapse_quality(&curves, threshold) {
                Ok(report) => table.push(vec![
                    input.clone(),
                    group,
                    report.n_curves.to_string(),
                    report.common_grid.len().to_string(),
                    fmt_f64(report.spread_max),
                    fmt_f64(report.spread_rms),
                    fmt_f64(report.threshold),
                    fmt_bool(report.collapsed),
                    fmt_bool(report.log_abscissa),
                    "ok".to_string(),
                ]),
                Err(e) => {
                    failed += 1;
                    table.push(nan_row(echo, header.len(), &e.to_string()));
                }
            }
        }
    }
    Ok((table, 2, notes, failed))
}

type CurveGroup = (String, Vec<scaling::Curve>, f64);

/// Split a result table into collapse groups: equilibrium tables (columns
/// `G`, `S_s`) form one group with one curve per `R`; dynamic tables
/// (columns `T`, `S_r`) form one group per `G_f`. Rows flagged
/// non-universal or failed are skipped.
fn group_curves(
    data: &ResultTable,
    cfg: &ExperimentConfig,
    notes: &mut Vec<String>,
) -> Result<Vec<CurveGroup>> {
    let status_col = data.column("status");
    let r_col = data.column("R").context("missing column R")?;
    let get = |row: &Vec<String>, col: usize| -> Option<f64> {
        row.get(col).and_then(|s| s.parse::<f64>().ok())
    };

    let usable = |row: &Vec<String>| -> bool {
        status_col.map_or(true, |c| row[c] == "ok")
    };

    if let (Some(x_col), Some(y_col)) = (data.column("T"), data.column("S_r")) {
        let threshold = if cfg.numerics.collapse_threshold > 0.0 {
            cfg.numerics.collapse_threshold
        } else {
            0.05
        };
        let group_col = data.column("G_f").context("missing column G_f")?;
        let nu_col = data.column("non_universal");
        let mut skipped = 0usize;
        let mut groups: Vec<(String, Vec<(f64, (f64, f64))>)> = Vec::new();
        for row in &data.rows {
            if !usable(row) {
                continue;
            }
            if nu_col.is_some_and(|c| row[c] == "true") {
                skipped += 1;
                continue;
            }
            let (Some(r), Some(x), Some(y)) = (get(row, r_col), get(row, x_col), get(row, y_col))
            else {
                continue;
            };
            let key = row[group_col].clone();
            let entry = match groups.iter_mut().find(|(k, _)| *k == key) {
                Some(e) => e,
                None => {
                    groups.push((key.clone(), Vec::new()));
                    groups.last_mut().unwrap()
                }
            };
            entry.1.push((r, (x, y)));
        }
        if skipped > 0 {
            notes.push(format!(
                "collapse: skipped {skipped} rows flagged non-universal (omega0 tau_q < 0.1)"
            ));
        }
        return Ok(groups
            .into_iter()
            .map(|(key, pts)| (format!("G_f={key}"), curves_by_r(pts), threshold))
            .collect());
    }

    if let (Some(x_col), Some(y_col)) = (data.column("G"), data.column("S_s")) {
        let threshold = if cfg.numerics.collapse_threshold > 0.0 {
            cfg.numerics.collapse_threshold
        } else {
            0.02
        };
        let mut pts = Vec::new();
        for row in &data.rows {
            if !usable(row) {
                continue;
            }
            let (Some(r), Some(x), Some(y)) = (get(row, r_col), get(row, x_col), get(row, y_col))
            else {
                continue;
            };
            pts.push((r, (x, y)));
        }
        return Ok(vec![("equilibrium".to_string(), curves_by_r(pts), threshold)]);
    }

    bail!("table has neither (T, S_r) nor (G, S_s) columns")
}

fn curves_by_r(points: Vec<(f64, (f64, f64))>) -> Vec<scaling::Curve> {
    let mut rs: Vec<f64> = points.iter().map(|(r, _)| *r).collect();
    rs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    rs.dedup();
    rs.into_iter()
        .map(|r| scaling::Curve {
            label: format!("R={r}"),
            points: points
                .iter()
                .filter(|(pr, _)| *pr == r)
                .map(|(_, xy)| *xy)
                .collect(),
        })
        .collect()
}

fn run_compile_lasers(cfg: &ExperimentConfig) -> Result<(ResultTable, usize, Vec<String>, usize)> {
    let header = [
        "laser",
        "sideband",
        "detuning_hz",
        "phase_rad",
        "eta",
        "rabi_final_hz",
        "status",
    ];
    let mut table = ResultTable::new(&header);
    let r = cfg.r_list[0];
    let g_f = cfg.g_list[0];
    let tau = cfg.tau_q_list.first().copied().unwrap_or(50.0);
    let tau_seconds = cfg.ion_tau_seconds(tau);
    let schedule = map_rabi_to_lasers(
        r,
        g_f,
        cfg.omega0_eff_angular(),
        cfg.eta,
        cfg.laser_geometry.to_core(),
        cfg.nu_angular(),
        tau_seconds,
        cfg.epsilon,
    )?;

    let two_pi = std::f64::consts::TAU;
    println!(
        "target: R = {r}, g_f = {g_f}, omega0_eff/2pi = {} Hz, Omega_eff/2pi = {} Hz",
        cfg.omega0_eff_hz,
        r * cfg.omega0_eff_hz
    );
    println!(
        "geometry: {} (epsilon = {}), nu/2pi = {} Hz, tau_q = {tau_seconds} s",
        cfg.laser_geometry.name(),
        schedule.epsilon,
        cfg.nu_hz
    );
    println!(
        "Omega_d_final/2pi = {:.3} kHz (mean over lasers)",
        schedule.mean_final_rabi() / two_pi / 1.0e3
    );
    for (j, laser) in schedule.lasers.iter().enumerate() {
        let side = match laser.sideband {
            Sideband::Blue => "blue",
            Sideband::Red => "red",
        };
        println!(
            "laser {}: {} sideband, delta/2pi = {:.3} Hz, phase = {:.6} rad, eta = {:+.3}, Omega_d/2pi = {:.3} Hz",
            j + 1,
            side,
            laser.detuning / two_pi,
            laser.phase,
            laser.eta,
            laser.ramp.final_value / two_pi
        );
        table.push(vec![
            (j + 1).to_string(),
            side.to_string(),
            fmt_f64(laser.detuning / two_pi),
            fmt_f64(laser.phase),
            fmt_f64(laser.eta),
            fmt_f64(laser.ramp.final_value / two_pi),
            "ok".to_string(),
        ]);
    }

    // serialized schedule next to the table
    let out_dir = Path::new(&cfg.out_dir);
    std::fs::create_dir_all(out_dir)?;
    let sched_path = out_dir.join(format!("{}_schedule.toml", cfg.effective_label()));
    std::fs::write(&sched_path, toml::to_string_pretty(&schedule)?)?;
    let notes = vec![format!("schedule written to {}", sched_path.display())];
    Ok((table, 1, notes, 0))
}
