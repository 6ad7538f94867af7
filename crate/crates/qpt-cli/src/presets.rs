//! Canned experiment configurations for the standard figures.
//!
//! Ion-simulation presets ship desk-scale reduced grids by default; pass
//! `--full` for the complete (long-running) grids.

use crate::config::{logspace, ExperimentConfig, ExperimentKind, GeometryChoice, NoiseConfig};

pub const PRESET_NAMES: [&str; 10] = [
    "fig1a", "fig1b", "fig2a", "fig2b", "fig2c", "fig2d", "fig3a", "fig3b", "suppC", "suppS1",
];

fn g_grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let n = ((stop - start) / step).round() as usize;
    (0..=n).map(|k| start + step * k as f64).collect()
}

fn standard_noise() -> NoiseConfig {
    NoiseConfig {
        gamma_dp: 0.1,
        gamma_c: 0.05,
        gamma_a: 0.05,
        gamma_h: 0.05,
    }
}

/// Build a preset by name. `full` switches ion presets to the complete
/// grids.
pub fn preset(name: &str, full: bool) -> Option<ExperimentConfig> {
    let mut cfg = ExperimentConfig {
        label: name.to_string(),
        full,
        ..ExperimentConfig::default()
    };
    match name {
        // Equilibrium scaling function S_s(G): four ratios, g in [0.9, 1).
        "fig1a" => {
            cfg.kind = ExperimentKind::GsSweep;
            cfg.g_list = g_grid(0.9, 0.995, 0.005);
        }
        // Dynamic scaling function S_r(T, G_f) for G_f = 0, 1/2, 1.
        "fig1b" => {
            cfg.kind = ExperimentKind::QuenchSweep;
            cfg.g_final_list = vec![0.0, 0.5, 1.0];
            cfg.tau_q_list = logspace(0.1, 100.0, 16);
        }
        // Ion runs, adiabatic preparation (tau_q = 50 / omega0_eff).
        "fig2a" | "fig2c" => {
            cfg.kind = ExperimentKind::IonSim;
            cfg.laser_geometry = if name == "fig2a" {
                GeometryChoice::Traveling
            } else {
                GeometryChoice::Standing
            };
            cfg.tau_q_list = vec![50.0];
            if full {
                cfg.g_list = g_grid(0.9, 1.0, 0.005);
            } else {
                cfg.r_list = vec![50.0, 400.0];
                cfg.g_list = vec![0.95, 1.0];
            }
        }
        // Ion runs, dynamic scaling (short quenches).
        "fig2b" | "fig2d" => {
            cfg.kind = ExperimentKind::IonSim;
            cfg.laser_geometry = if name == "fig2b" {
                GeometryChoice::Traveling
            } else {
                GeometryChoice::Standing
            };
            cfg.g_final_list = vec![0.0, 0.5, 1.0];
            if full {
                cfg.tau_q_list = logspace(0.1, 2.0, 10);
            } else {
                cfg.r_list = vec![50.0, 400.0];
                cfg.tau_q_list = logspace(0.1, 2.0, 6);
            }
        }
        // Noisy adiabatic preparation: equilibrium curves under noise.
        // G-targeted grid so every ratio shares the same abscissas; the
        // lowest decade [0.05, 0.5] holds six points for the tail fit.
        "fig3a" => {
            cfg.kind = ExperimentKind::NoisyQuench;
            cfg.noise = standard_noise();
            cfg.tau_q_list = vec![50.0];
            cfg.g_final_list = logspace(0.05, 12.8, 13);
        }
        // Noisy dynamic scaling: short quenches where the collapse
        // survives, longer ones where the noise degrades it.
        "fig3b" => {
            cfg.kind = ExperimentKind::NoisyQuench;
            cfg.noise = standard_noise();
            cfg.g_final_list = vec![0.0, 0.5, 1.0];
            let mut taus = logspace(0.1, 0.275, 6);
            taus.extend(logspace(0.32, 1.0, 6));
            cfg.tau_q_list = taus;
        }
        // Ramp adiabaticity study at the worst ratio.
        "suppC" => {
            cfg.kind = ExperimentKind::Adiabaticity;
            cfg.r_list = vec![400.0];
            cfg.tau_q_list = vec![1.0, 10.0, 25.0, 50.0];
        }
        // Critical-point scaling of the singular population and the gap.
        "suppS1" => {
            cfg.kind = ExperimentKind::GsSweep;
            cfg.r_list = vec![50.0, 100.0, 200.0, 400.0, 800.0, 1600.0];
            cfg.g_list = vec![1.0];
        }
        _ => return None,
    }
    Some(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_presets_build_and_validate() {
        for name in PRESET_NAMES {
            for full in [false, true] {
                let cfg = preset(name, full).unwrap_or_else(|| panic!("missing {name}"));
                let errors: Vec<_> = crate::config::validate(&cfg)
                    .into_iter()
                    .filter(|i| i.level == crate::config::IssueLevel::Error)
                    .collect();
                assert!(errors.is_empty(), "{name} (full={full}): {errors:?}");
            }
        }
        assert!(preset("nope", false).is_none());
    }

    #[test]
    fn reduced_ion_grids_are_smaller() {
        let reduced = preset("fig2c", false).unwrap();
        let full = preset("fig2c", true).unwrap();
        assert!(reduced.r_list.len() * reduced.g_list.len() < full.r_list.len() * full.g_list.len());
    }
}
