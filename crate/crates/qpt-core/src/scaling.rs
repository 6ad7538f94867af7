//! Rescaling transforms, data-collapse quality, power-law fits, and
//! adiabaticity profiling — the layer that turns raw sweeps into universal
//! curves.
//!
//! With the fixed exponents (gamma = 1, mu = 2/3, zeta = 1/2), equilibrium
//! data rescales as
//!
//! ```text
//! S_s = |g - 1|^(-gamma) <sigma_z>_s,    G = R |g - 1|^(gamma/mu)
//! ```
//!
//! and quench data as `T = tau_q / R`, `S_r = R^mu <sigma_z>_r`. Points
//! sharing `G` (equilibrium) or `(T, G_f)` (dynamics) fall on single curves;
//! [`collapse_quality`] quantifies how well a family of curves does so.

use serde::{Deserialize, Serialize};

use crate::error::{QptError, Result};
use crate::evolve::{run_quench_rabi, QuenchSpec};
use crate::models::{rabi_from_dimensionless, CriticalExponents};
use crate::spectral;

/// One rescaled observation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub r: f64,
    pub g: f64,
    pub tau_q: Option<f64>,
    /// The raw observable: singular atomic population or residual.
    pub raw: f64,
    pub g_big: f64,
    pub t_big: Option<f64>,
    /// `S_s` or `S_r`.
    pub rescaled: f64,
}

/// Equilibrium rescaling; undefined at the critical point itself
/// (`|g - 1| < 1e-6`), where the small-`G` asymptote applies instead.
pub fn rescale_equilibrium(r: f64, g: f64, sigma_z_singular: f64) -> Result<ScalingPoint> {
    let dist = (g - 1.0).abs();
    if dist < 1e-6 {
        return Err(QptError::AtCriticalPoint(dist));
    }
    let exponent = CriticalExponents::GAMMA / CriticalExponents::MU; // 3/2
    Ok(ScalingPoint {
        r,
        g,
        tau_q: None,
        raw: sigma_z_singular,
        g_big: r * dist.powf(exponent),
        t_big: None,
        rescaled: sigma_z_singular / dist.powf(CriticalExponents::GAMMA),
    })
}

/// Dynamic rescaling: `T = tau_q / R`, `S_r = R^mu * residual`. `g_f = 1`
/// (i.e. `G = 0`) is allowed here.
pub fn rescale_dynamic(r: f64, g_f: f64, tau_q: f64, residual: f64) -> ScalingPoint {
    let exponent = CriticalExponents::GAMMA / CriticalExponents::MU;
    ScalingPoint {
        r,
        g: g_f,
        tau_q: Some(tau_q),
        raw: residual,
        g_big: r * (g_f - 1.0).abs().powf(exponent),
        t_big: Some(tau_q / r),
        rescaled: r.powf(CriticalExponents::MU) * residual,
    }
}

/// Invert [`rescale_equilibrium`].
pub fn unrescale_equilibrium(g: f64, rescaled: f64) -> f64 {
    rescaled * (g - 1.0).abs().powf(CriticalExponents::GAMMA)
}

/// Invert [`rescale_dynamic`].
pub fn unrescale_dynamic(r: f64, rescaled: f64) -> f64 {
    rescaled / r.powf(CriticalExponents::MU)
}

/// A labeled curve: `(abscissa, ordinate)` points.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Curve {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

/// Collapse-quality report for one family of curves.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CollapseReport {
    /// Worst vertical spread across curves, normalized by the data range.
    pub spread_max: f64,
    /// Root-mean-square of the normalized spread over the common grid.
    pub spread_rms: f64,
    /// Abscissa values every curve could be interpolated onto.
    pub common_grid: Vec<f64>,
    pub n_curves: usize,
    pub log_abscissa: bool,
    pub threshold: f64,
    pub collapsed: bool,
}

/// Quantify how well the curves coincide.
///
/// Every curve is interpolated (piecewise linear; in log-abscissa when the
/// shared range spans more than a decade) onto the grid of all data points
/// inside the shared abscissa interval — interpolation only, never
/// extrapolation. The spread at a grid point is `(max - min)` across
/// curves, normalized by the global range of interpolated values.
pub fn collapse_quality(curves: &[Curve], threshold: f64) -> Result<CollapseReport> {
    if curves.len() < 2 {
        return Err(QptError::InsufficientPoints {
            needed: 2,
            got: curves.len(),
        });
    }
    let mut cleaned: Vec<Vec<(f64, f64)>> = Vec::with_capacity(curves.len());
    for c in curves {
        let mut pts = c.points.clone();
        if pts.len() < 2 {
            return Err(QptError::InsufficientPoints {
                needed: 2,
                got: pts.len(),
            });
        }
        pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        // merge duplicate abscissas
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(pts.len());
        for (x, y) in pts {
            match merged.last_mut() {
                Some((px, py)) if *px == x => *py = 0.5 * (*py + y),
                _ => merged.push((x, y)),
            }
        }
        cleaned.push(merged);
    }

    let lo = cleaned
        .iter()
        .map(|c| c.first().unwrap().0)
        .fold(f64::NEG_INFINITY, f64::max);
    let hi = cleaned
        .iter()
        .map(|c| c.last().unwrap().0)
        .fold(f64::INFINITY, f64::min);
    if lo > hi {
        return Err(QptError::EmptyIntersection);
    }

    let mut grid: Vec<f64> = cleaned
        .iter()
        .flat_map(|c| c.iter().map(|p| p.0))
        .filter(|x| *x >= lo && *x <= hi)
        .collect();
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    grid.dedup();

    let log_abscissa = lo > 0.0 && hi / lo > 10.0;
    let coord = |x: f64| if log_abscissa { x.ln() } else { x };

    let mut interpolated: Vec<Vec<f64>> = Vec::with_capacity(cleaned.len());
    for c in &cleaned {
        let mut row = Vec::with_capacity(grid.len());
        for &x in &grid {
            row.push(interp(c, x, &coord));
        }
        interpolated.push(row);
    }

    let mut global_max = f64::NEG_INFINITY;
    let mut global_min = f64::INFINITY;
    for row in &interpolated {
        for &v in row {
            global_max = global_max.max(v);
            global_min = global_min.min(v);
        }
    }
    let range = global_max - global_min;

    let mut spread_max = 0.0_f64;
    let mut sum_sq = 0.0_f64;
    for k in 0..grid.len() {
        let mut vmax = f64::NEG_INFINITY;
        let mut vmin = f64::INFINITY;
        for row in &interpolated {
            vmax = vmax.max(row[k]);
            vmin = vmin.min(row[k]);
        }
        let spread = if range > 0.0 {
            (vmax - vmin) / range
        } else {
            0.0
        };
        spread_max = spread_max.max(spread);
        sum_sq += spread * spread;
    }
    let spread_rms = (sum_sq / grid.len() as f64).sqrt();

    Ok(CollapseReport {
        spread_max,
        spread_rms,
        common_grid: grid,
        n_curves: curves.len(),
        log_abscissa,
        threshold,
        collapsed: spread_max < threshold,
    })
}

fn interp(curve: &[(f64, f64)], x: f64, coord: &impl Fn(f64) -> f64) -> f64 {
    // curve is sorted and x lies within its range
    let idx = curve.partition_point(|p| p.0 < x);
    if idx < curve.len() && curve[idx].0 == x {
        return curve[idx].1;
    }
    let (x0, y0) = curve[idx - 1];
    let (x1, y1) = curve[idx];
    let w = (coord(x) - coord(x0)) / (coord(x1) - coord(x0));
    y0 + w * (y1 - y0)
}

/// Least-squares power-law fit in log-log coordinates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub amplitude: f64,
    pub stderr: f64,
    pub window: (f64, f64),
    pub n_points: usize,
}

/// Fit `y = amplitude * x^exponent` over the window (inclusive). Without a
/// window, the lowest decade of abscissa holding at least six points is
/// used; if no decade has six, all points are.
pub fn fit_power_law(points: &[(f64, f64)], window: Option<(f64, f64)>) -> Result<PowerLawFit> {
    let mut xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let window = match window {
        Some(w) => w,
        None => {
            let mut chosen = None;
            for &x0 in &xs {
                if x0 <= 0.0 {
                    continue;
                }
                let count = xs.iter().filter(|x| **x >= x0 && **x <= 10.0 * x0).count();
                if count >= 6 {
                    chosen = Some((x0, 10.0 * x0));
                    break;
                }
            }
            chosen.unwrap_or((xs[0], *xs.last().unwrap()))
        }
    };

    let selected: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .filter(|(x, _)| *x >= window.0 && *x <= window.1)
        .collect();
    if selected.len() < 4 {
        return Err(QptError::InsufficientPoints {
            needed: 4,
            got: selected.len(),
        });
    }
    for &(x, y) in &selected {
        if x <= 0.0 {
            return Err(QptError::NonPositiveData(x));
        }
        if y <= 0.0 {
            return Err(QptError::NonPositiveData(y));
        }
    }

    let n = selected.len() as f64;
    let lx: Vec<f64> = selected.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = selected.iter().map(|p| p.1.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = lx.iter().zip(ly.iter()).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(QptError::InvalidParameter(
            "all abscissas equal; no slope".into(),
        ));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = lx
        .iter()
        .zip(ly.iter())
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    let stderr = if selected.len() > 2 {
        (ss_res / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };

    Ok(PowerLawFit {
        exponent: slope,
        amplitude: intercept.exp(),
        stderr,
        window,
        n_points: selected.len(),
    })
}

/// Deviation of a ramp from instantaneous ground states.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdiabaticityProfile {
    /// `(g, relative deviation of <sigma_z>(t) from the ground-state value)`
    pub points: Vec<(f64, f64)>,
    pub max_deviation: f64,
}

/// Propagate the linear ramp `g(t) = t/tau_q` at the given `R` and compare
/// `<sigma_z>(t)` with the instantaneous exact ground-state value at
/// `n_checkpoints` evenly spaced couplings.
pub fn adiabaticity_profile(
    r: f64,
    tau_q: f64,
    omega0: f64,
    cutoff_seed: usize,
    n_checkpoints: usize,
) -> Result<AdiabaticityProfile> {
    if n_checkpoints < 2 {
        return Err(QptError::InvalidParameter(
            "need at least two checkpoints".into(),
        ));
    }
    let target = rabi_from_dimensionless(r, 1.0, omega0)?;
    let mut spec = QuenchSpec::new(target, tau_q);
    spec.cutoff_seed = cutoff_seed;
    let result = run_quench_rabi(&spec)?;
    let samples = &result.trajectory;

    let mut points = Vec::with_capacity(n_checkpoints);
    let mut max_deviation = 0.0_f64;
    for k in 0..n_checkpoints {
        let g = k as f64 / (n_checkpoints - 1) as f64;
        // nearest sampled time (the sample grid is uniform)
        let idx = ((g * (samples.len() - 1) as f64).round() as usize).min(samples.len() - 1);
        let sample = &samples[idx];
        let g_actual = sample.t / tau_q;
        let deviation = if k == 0 {
            // the initial state is the exact ground state
            0.0
        } else {
            let gs =
                spectral::rabi_ground_state(&target.with_coupling_g(g_actual), cutoff_seed)?;
            (sample.sigma_z - gs.sigma_z).abs() / gs.sigma_z.abs()
        };
        max_deviation = max_deviation.max(deviation);
        points.push((g_actual, deviation));
    }
    Ok(AdiabaticityProfile {
        points,
        max_deviation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn approx(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn equilibrium_rescaling_examples() {
        let p = rescale_equilibrium(400.0, 0.99, 2.0e-3).unwrap();
        approx(p.g_big, 0.4, 1e-12);
        approx(p.rescaled, 0.2, 1e-12);

        let p = rescale_equilibrium(100.0, 0.9, 1.0e-2).unwrap();
        approx(p.g_big, 3.16227766, 1e-7);

        let p = rescale_equilibrium(50.0, 0.95, 0.0).unwrap();
        approx(p.rescaled, 0.0, 0.0);
    }

    #[test]
    fn critical_point_is_rejected() {
        assert!(matches!(
            rescale_equilibrium(100.0, 1.0, 1e-3),
            Err(QptError::AtCriticalPoint(_))
        ));
        assert!(rescale_equilibrium(100.0, 1.0 + 2e-6, 1e-3).is_ok());
    }

    #[test]
    fn dynamic_rescaling_examples() {
        let p = rescale_dynamic(100.0, 1.0, 200.0, 5.0e-3);
        approx(p.t_big.unwrap(), 2.0, 1e-12);
        approx(p.g_big, 0.0, 0.0);

        let p = rescale_dynamic(400.0, 1.0, 1.0, 1.0e-3);
        approx(p.rescaled, 0.0542884, 2e-6);

        let p = rescale_dynamic(50.0, 0.98, 1.0, 0.0);
        approx(p.rescaled, 0.0, 0.0);
    }

    #[test]
    fn rescaling_inverts_exactly() {
        for (r, g, raw) in [(50.0, 0.93, 4.2e-3), (400.0, 0.999, 8.0e-4)] {
            let p = rescale_equilibrium(r, g, raw).unwrap();
            let back = unrescale_equilibrium(g, p.rescaled);
            approx(back, raw, 1e-12 * raw.abs());

            let q = rescale_dynamic(r, g, 3.0, raw);
            approx(unrescale_dynamic(r, q.rescaled), raw, 1e-12 * raw.abs());
        }
    }

    #[test]
    fn identical_curves_have_zero_spread() {
        let pts: Vec<(f64, f64)> = (1..=20).map(|k| (k as f64, (k as f64).sqrt())).collect();
        let curves = vec![
            Curve {
                label: "a".into(),
                points: pts.clone(),
            },
            Curve {
                label: "b".into(),
                points: pts,
            },
        ];
        let report = collapse_quality(&curves, 0.02).unwrap();
        approx(report.spread_max, 0.0, 1e-14);
        assert!(report.collapsed);
        assert!(report.log_abscissa);
    }

    #[test]
    fn parallel_offset_lines_have_the_offset_as_spread() {
        // two parallel lines offset by 10% of the global range
        let base: Vec<(f64, f64)> = (0..=10).map(|k| (k as f64, k as f64)).collect();
        let offset = 10.0 / 9.0; // = 0.1 * (10 + offset)
        let shifted: Vec<(f64, f64)> = base.iter().map(|(x, y)| (*x, y + offset)).collect();
        let curves = vec![
            Curve {
                label: "a".into(),
                points: base,
            },
            Curve {
                label: "b".into(),
                points: shifted,
            },
        ];
        let report = collapse_quality(&curves, 0.02).unwrap();
        approx(report.spread_max, 0.10, 1e-12);
        assert!(!report.collapsed);
        assert!(!report.log_abscissa);
    }

    #[test]
    fn disjoint_curves_are_rejected() {
        let a = Curve {
            label: "a".into(),
            points: vec![(1.0, 1.0), (2.0, 2.0)],
        };
        let b = Curve {
            label: "b".into(),
            points: vec![(5.0, 1.0), (6.0, 2.0)],
        };
        assert!(matches!(
            collapse_quality(&[a, b], 0.02),
            Err(QptError::EmptyIntersection)
        ));
    }

    #[test]
    fn collapse_is_permutation_invariant() {
        let mk = |shift: f64| Curve {
            label: format!("s{shift}"),
            points: (1..=15)
                .map(|k| (k as f64 * 0.5, (k as f64 * 0.5).powf(-0.6) + shift))
                .collect(),
        };
        let curves = vec![mk(0.0), mk(0.01), mk(-0.02)];
        let fwd = collapse_quality(&curves, 0.05).unwrap();
        let rev: Vec<Curve> = curves.into_iter().rev().collect();
        let bwd = collapse_quality(&rev, 0.05).unwrap();
        approx(fwd.spread_max, bwd.spread_max, 1e-15);
        approx(fwd.spread_rms, bwd.spread_rms, 1e-15);
    }

    #[test]
    fn exact_power_law_is_recovered() {
        let pts: Vec<(f64, f64)> = (1..=30)
            .map(|k| {
                let x = 0.01 * 1.4_f64.powi(k);
                (x, 3.0 * x.powf(-2.0 / 3.0))
            })
            .collect();
        let fit = fit_power_law(&pts, Some((0.0, f64::INFINITY))).unwrap();
        approx(fit.exponent, -2.0 / 3.0, 1e-9);
        approx(fit.amplitude, 3.0, 1e-9);
        assert!(fit.stderr < 1e-10);
    }

    #[test]
    fn fit_rejects_bad_input() {
        let few = vec![(1.0, 1.0), (2.0, 0.5), (3.0, 0.3)];
        assert!(matches!(
            fit_power_law(&few, None),
            Err(QptError::InsufficientPoints { needed: 4, got: 3 })
        ));
        let neg = vec![(1.0, 1.0), (2.0, -0.5), (3.0, 0.3), (4.0, 0.2)];
        assert!(matches!(
            fit_power_law(&neg, Some((0.5, 5.0))),
            Err(QptError::NonPositiveData(_))
        ));
    }

    #[test]
    fn default_window_takes_the_lowest_decade_with_six_points() {
        // 6 points in [0.1, 1], then a sparse tail with a different slope
        let mut pts: Vec<(f64, f64)> = (0..6)
            .map(|k| {
                let x = 0.1 * 10.0_f64.powf(k as f64 / 5.0);
                (x, x.powf(-2.0 / 3.0))
            })
            .collect();
        pts.push((50.0, 50.0_f64.powf(-1.0)));
        pts.push((500.0, 500.0_f64.powf(-1.0)));
        let fit = fit_power_law(&pts, None).unwrap();
        assert_eq!(fit.n_points, 6);
        approx(fit.exponent, -2.0 / 3.0, 1e-9);
        approx(fit.window.1, 1.0, 1e-12);
    }

    #[test]
    fn adiabaticity_profile_starts_exact() {
        let profile = adiabaticity_profile(20.0, 10.0, 1.0, 30, 6).unwrap();
        assert_eq!(profile.points.len(), 6);
        approx(profile.points[0].1, 0.0, 0.0);
        assert!(profile.max_deviation >= 0.0);
        // a slow ramp on a small-R model is close to adiabatic throughout
        assert!(profile.max_deviation < 0.05, "{}", profile.max_deviation);
    }
}
