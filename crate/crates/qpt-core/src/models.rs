//! Hamiltonian builders and parameter maps.
//!
//! The Rabi model
//!
//! ```text
//! H = omega0 a^dag a + (Omega/2) sigma_z - lambda (a + a^dag) sigma_x
//! ```
//!
//! is characterized by the frequency ratio `R = Omega / omega0` and the
//! dimensionless coupling `g = 2 lambda / sqrt(omega0 Omega)`; `R -> inf` is
//! the thermodynamic-like limit with a phase transition at `g = 1`.
//!
//! A single trapped ion driven by sideband lasers realizes the same model
//! with an effective oscillator frequency set by the half-difference of the
//! sideband detunings. [`map_rabi_to_lasers`] compiles a target `(R, g)`
//! into a laser schedule; [`effective_rabi_of_schedule`] inverts the map.

use serde::{Deserialize, Serialize};

use crate::error::{QptError, Result};
use crate::fockspace::{
    make_pauli, number_operator, quadrature_operator, tensor, OpFlags, Operator, Pauli, SpaceSpec,
};
use crate::C64;

/// Physical frequencies of the Rabi model, all angular and in the same unit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RabiParams {
    /// Oscillator frequency omega0.
    pub omega0: f64,
    /// Atomic transition frequency Omega.
    pub omega: f64,
    /// Coupling strength lambda.
    pub lambda: f64,
}

impl RabiParams {
    pub fn new(omega0: f64, omega: f64, lambda: f64) -> Result<Self> {
        if omega0 <= 0.0 || omega <= 0.0 || lambda < 0.0 {
            return Err(QptError::InvalidParameter(format!(
                "RabiParams need omega0 > 0, Omega > 0, lambda >= 0 (got {omega0}, {omega}, {lambda})"
            )));
        }
        Ok(RabiParams {
            omega0,
            omega,
            lambda,
        })
    }

    /// Frequency ratio `R = Omega / omega0`, recomputed on demand.
    pub fn ratio(&self) -> f64 {
        self.omega / self.omega0
    }

    /// Dimensionless coupling `g = 2 lambda / sqrt(omega0 Omega)`.
    pub fn coupling_g(&self) -> f64 {
        2.0 * self.lambda / (self.omega0 * self.omega).sqrt()
    }

    /// Same frequencies, coupling set to reach the given `g`.
    pub fn with_coupling_g(&self, g: f64) -> RabiParams {
        RabiParams {
            omega0: self.omega0,
            omega: self.omega,
            lambda: 0.5 * g * (self.omega0 * self.omega).sqrt(),
        }
    }
}

/// Invert `(R, g)` into physical frequencies at a chosen `omega0`.
pub fn rabi_from_dimensionless(r: f64, g: f64, omega0: f64) -> Result<RabiParams> {
    if r <= 0.0 || g < 0.0 || omega0 <= 0.0 {
        return Err(QptError::InvalidParameter(format!(
            "need R > 0, g >= 0, omega0 > 0 (got {r}, {g}, {omega0})"
        )));
    }
    let omega = r * omega0;
    let lambda = 0.5 * g * (omega0 * omega).sqrt();
    RabiParams::new(omega0, omega, lambda)
}

/// Fixed critical exponents of the Rabi transition.
pub struct CriticalExponents;

impl CriticalExponents {
    /// Order-parameter exponent of the singular atomic population.
    pub const GAMMA: f64 = 1.0;
    /// Finite-frequency scaling exponent of sigma_z.
    pub const MU: f64 = 2.0 / 3.0;
    /// Gap exponent.
    pub const ZETA: f64 = 0.5;
    /// Transition-amplitude exponent. Housed for completeness; no operation
    /// consumes it.
    pub const BETA: f64 = -1.0;
}

/// `H = omega0 a^dag a + (Omega/2) sigma_z - lambda (a + a^dag) sigma_x` on
/// the composite space.
pub fn rabi_hamiltonian(p: &RabiParams, space: &SpaceSpec) -> Operator {
    let i2 = Operator::identity(2);
    let ib = Operator::identity(space.boson_dim());
    let n = number_operator(space);
    let x = quadrature_operator(space);

    let mut h = ndarray::Array2::<C64>::zeros((space.total_dim(), space.total_dim()));
    h += &tensor(&i2, &n).entries.mapv(|z| z * p.omega0);
    h += &tensor(&make_pauli(Pauli::Z), &ib)
        .entries
        .mapv(|z| z * (0.5 * p.omega));
    h -= &tensor(&make_pauli(Pauli::X), &x)
        .entries
        .mapv(|z| z * p.lambda);
    Operator::with_flags(
        h,
        OpFlags {
            hermitian: true,
            unitary: false,
        },
    )
}

/// Parity `Pi = sigma_z (x) exp(i pi a^dag a)`; commutes with the Rabi
/// Hamiltonian.
pub fn parity_operator(space: &SpaceSpec) -> Operator {
    let b = space.boson_dim();
    let mut alt = ndarray::Array2::<C64>::zeros((b, b));
    for n in 0..b {
        alt[(n, n)] = C64::new(if n % 2 == 0 { 1.0 } else { -1.0 }, 0.0);
    }
    tensor(
        &make_pauli(Pauli::Z),
        &Operator::with_flags(
            alt,
            OpFlags {
                hermitian: true,
                unitary: true,
            },
        ),
    )
}

/// Which motional sideband a drive is tuned near.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sideband {
    Blue,
    Red,
}

impl Sideband {
    /// Sign of the residual `-/+ nu` rotation left after the optical
    /// rotating-wave approximation: blue drives rotate at `(-nu + delta)`,
    /// red drives at `(+nu + delta)`.
    pub fn frame_sign(&self) -> f64 {
        match self {
            Sideband::Blue => -1.0,
            Sideband::Red => 1.0,
        }
    }
}

/// Linear turn-on from zero: `value(t) = final_value * t / duration`, held
/// at `final_value` past `duration`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearRamp {
    pub final_value: f64,
    pub duration: f64,
}

impl LinearRamp {
    pub fn value(&self, t: f64) -> f64 {
        self.final_value * (t / self.duration).clamp(0.0, 1.0)
    }
}

/// One drive laser after the optical rotating-wave approximation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaserConfig {
    /// Detuning relative to the named sideband, angular.
    pub detuning: f64,
    pub sideband: Sideband,
    /// Phase phi, radians.
    pub phase: f64,
    /// Signed Lamb-Dicke parameter (the sign carries the propagation
    /// direction).
    pub eta: f64,
    /// Rabi-frequency turn-on.
    pub ramp: LinearRamp,
}

/// Laser geometry of a schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LaserGeometry {
    Traveling,
    Standing,
}

/// A full drive program: lasers, trap frequency, quench duration, and the
/// effective Rabi model it is meant to realize.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaserSchedule {
    pub lasers: Vec<LaserConfig>,
    /// Trap (phonon) frequency nu, angular.
    pub nu: f64,
    /// Quench duration, seconds (or 1/omega units when omega0 is
    /// dimensionless).
    pub tau_q: f64,
    /// The effective Rabi model this schedule targets at the end of the
    /// ramp.
    pub target: RabiParams,
    pub geometry: LaserGeometry,
    /// Relative Rabi-frequency imbalance between counter-propagating pairs;
    /// an imperfection, not a target shift.
    pub epsilon: f64,
}

impl LaserSchedule {
    /// Advisory checks: Lamb-Dicke bound and the vibrational rotating-wave
    /// margin. Returns human-readable warnings, empty when clean.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (j, l) in self.lasers.iter().enumerate() {
            if l.eta.abs() >= 0.3 {
                out.push(format!(
                    "laser {}: |eta| = {} outside the Lamb-Dicke sanity bound 0.3",
                    j + 1,
                    l.eta.abs()
                ));
            }
            if l.detuning.abs() > self.nu / 10.0 {
                out.push(format!(
                    "laser {}: detuning {:.6e} rad/s exceeds nu/10 = {:.6e}; vibrational rotating-wave margin is thin",
                    j + 1,
                    l.detuning,
                    self.nu / 10.0
                ));
            }
        }
        out
    }

    /// Mean final Rabi frequency over all lasers (the imbalance averages
    /// out).
    pub fn mean_final_rabi(&self) -> f64 {
        self.lasers.iter().map(|l| l.ramp.final_value).sum::<f64>() / self.lasers.len() as f64
    }
}

/// Compile a target `(R, g_f)` at effective oscillator frequency
/// `omega0_eff` into a drive schedule.
///
/// Detunings follow `delta_1 = Omega~ + omega0~` (blue) and `delta_2 =
/// Omega~ - omega0~` (red) with `Omega~ = R omega0~`. The final Rabi
/// frequency is `g_f sqrt(delta_1^2 - delta_2^2) / (2 eta)` for a traveling
/// pair and half that for the standing configuration, whose effective
/// coupling is twice as strong. Standing schedules place the ion at a node:
/// counter-propagating partners get opposite `eta`, a `pi/2`-shifted phase,
/// and Rabi frequencies `(1 +/- epsilon/2)` apart.
#[allow(clippy::too_many_arguments)]
pub fn map_rabi_to_lasers(
    r: f64,
    g_f: f64,
    omega0_eff: f64,
    eta: f64,
    geometry: LaserGeometry,
    nu: f64,
    tau_q: f64,
    epsilon: f64,
) -> Result<LaserSchedule> {
    if r <= 1.0 {
        return Err(QptError::InvalidParameter(format!(
            "frequency ratio must exceed 1 (got {r})"
        )));
    }
    if g_f < 0.0 || eta <= 0.0 || omega0_eff <= 0.0 || nu <= 0.0 || tau_q <= 0.0 {
        return Err(QptError::InvalidParameter(
            "need g_f >= 0, eta > 0, omega0_eff > 0, nu > 0, tau_q > 0".into(),
        ));
    }
    let omega_eff = r * omega0_eff;
    let delta_blue = omega_eff + omega0_eff;
    let delta_red = omega_eff - omega0_eff;
    if delta_blue >= nu {
        return Err(QptError::RwaMargin {
            delta: delta_blue,
            nu,
        });
    }

    let sideband_scale = (delta_blue * delta_blue - delta_red * delta_red).sqrt();
    let rabi_final = match geometry {
        LaserGeometry::Traveling => g_f * sideband_scale / (2.0 * eta),
        LaserGeometry::Standing => g_f * sideband_scale / (4.0 * eta),
    };

    let ramp = |value: f64| LinearRamp {
        final_value: value,
        duration: tau_q,
    };
    let lasers = match geometry {
        LaserGeometry::Traveling => vec![
            LaserConfig {
                detuning: delta_blue,
                sideband: Sideband::Blue,
                phase: 1.5 * std::f64::consts::PI,
                eta,
                ramp: ramp(rabi_final),
            },
            LaserConfig {
                detuning: delta_red,
                sideband: Sideband::Red,
                phase: 1.5 * std::f64::consts::PI,
                eta,
                ramp: ramp(rabi_final),
            },
        ],
        LaserGeometry::Standing => {
            let forward = rabi_final * (1.0 + epsilon / 2.0);
            let backward = rabi_final * (1.0 - epsilon / 2.0);
            vec![
                LaserConfig {
                    detuning: delta_blue,
                    sideband: Sideband::Blue,
                    phase: 1.5 * std::f64::consts::PI,
                    eta,
                    ramp: ramp(forward),
                },
                LaserConfig {
                    detuning: delta_red,
                    sideband: Sideband::Red,
                    phase: 1.5 * std::f64::consts::PI,
                    eta,
                    ramp: ramp(forward),
                },
                LaserConfig {
                    detuning: delta_blue,
                    sideband: Sideband::Blue,
                    phase: 0.5 * std::f64::consts::PI,
                    eta: -eta,
                    ramp: ramp(backward),
                },
                LaserConfig {
                    detuning: delta_red,
                    sideband: Sideband::Red,
                    phase: 0.5 * std::f64::consts::PI,
                    eta: -eta,
                    ramp: ramp(backward),
                },
            ]
        }
    };

    let target = rabi_from_dimensionless(r, g_f, omega0_eff)?;
    Ok(LaserSchedule {
        lasers,
        nu,
        tau_q,
        target,
        geometry,
        epsilon: match geometry {
            LaserGeometry::Traveling => 0.0,
            LaserGeometry::Standing => epsilon,
        },
    })
}

/// Read the effective Rabi model off a schedule: `omega0~ = (delta_1 -
/// delta_2)/2`, `Omega~ = (delta_1 + delta_2)/2`, and `lambda~ = eta
/// Omega_d/2` (traveling) or `eta Omega_d` (standing) with the mean final
/// Rabi frequency.
pub fn effective_rabi_of_schedule(sched: &LaserSchedule) -> Result<RabiParams> {
    let blue: Vec<&LaserConfig> = sched
        .lasers
        .iter()
        .filter(|l| l.sideband == Sideband::Blue)
        .collect();
    let red: Vec<&LaserConfig> = sched
        .lasers
        .iter()
        .filter(|l| l.sideband == Sideband::Red)
        .collect();
    if blue.is_empty() || red.is_empty() {
        return Err(QptError::MalformedSchedule(
            "need at least one blue- and one red-sideband laser".into(),
        ));
    }
    let delta_blue = blue[0].detuning;
    let delta_red = red[0].detuning;
    if blue.iter().any(|l| l.detuning != delta_blue) || red.iter().any(|l| l.detuning != delta_red)
    {
        return Err(QptError::MalformedSchedule(
            "lasers on one sideband must share a detuning".into(),
        ));
    }
    let eta = blue[0].eta.abs();
    if sched.lasers.iter().any(|l| (l.eta.abs() - eta).abs() > 1e-15 * eta.max(1.0)) {
        return Err(QptError::MalformedSchedule(
            "lasers must share |eta|".into(),
        ));
    }

    let omega0_eff = 0.5 * (delta_blue - delta_red);
    let omega_eff = 0.5 * (delta_blue + delta_red);
    if omega0_eff <= 0.0 {
        return Err(QptError::MalformedSchedule(
            "blue detuning must exceed red detuning".into(),
        ));
    }
    let rabi_final = sched.mean_final_rabi();
    let lambda = match sched.geometry {
        LaserGeometry::Traveling => eta * rabi_final / 2.0,
        LaserGeometry::Standing => eta * rabi_final,
    };
    RabiParams::new(omega0_eff, omega_eff, lambda)
}

/// Evaluate the drive Hamiltonian at time `t` (see [`crate::ion`] for the
/// cached form used inside integration loops).
pub fn ion_hamiltonian(t: f64, sched: &LaserSchedule, space: &SpaceSpec) -> Result<Operator> {
    let mut h = crate::ion::IonHamiltonian::new(sched, space)?;
    Ok(h.operator(t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fockspace::{vacuum_spin_down, QuantumState};
    use crate::linalg;

    const TAU: f64 = std::f64::consts::TAU;

    fn approx(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn dimensionless_round_trip() {
        let p = rabi_from_dimensionless(100.0, 1.0, 1.0).unwrap();
        approx(p.omega, 100.0, 0.0);
        approx(p.lambda, 5.0, 1e-12);

        let p = rabi_from_dimensionless(400.0, 0.99, 1.0).unwrap();
        approx(p.lambda, 9.9, 1e-12);

        for (r, g) in [(50.0, 0.3), (400.0, 1.0), (7.0, 1.2)] {
            let p = rabi_from_dimensionless(r, g, 2.5).unwrap();
            approx(p.ratio(), r, 1e-12 * r);
            approx(p.coupling_g(), g, 1e-12);
        }
    }

    #[test]
    fn hamiltonian_is_hermitian() {
        let p = RabiParams::new(1.0, 400.0, 10.0).unwrap();
        let h = rabi_hamiltonian(&p, &SpaceSpec::new(60).unwrap());
        assert!(linalg::hermiticity_deviation(&h.entries) <= 1e-12);
        assert!(h.verify_hermitian());
    }

    #[test]
    fn parity_commutes_with_hamiltonian() {
        let space = SpaceSpec::new(40).unwrap();
        for (r, g) in [(50.0, 0.9), (400.0, 1.0), (20.0, 1.1)] {
            let p = rabi_from_dimensionless(r, g, 1.0).unwrap();
            let h = rabi_hamiltonian(&p, &space);
            let pi = parity_operator(&space);
            let comm = &(&h * &pi) - &(&pi * &h);
            assert!(
                linalg::max_abs(&comm.entries) <= 1e-10,
                "commutator too large at R={r}, g={g}"
            );
        }
    }

    #[test]
    fn decoupled_limit_energy() {
        // lambda = 0: ground state |0>|down> with energy -Omega/2
        let space = SpaceSpec::new(20).unwrap();
        let p = RabiParams::new(1.0, 50.0, 0.0).unwrap();
        let h = rabi_hamiltonian(&p, &space);
        let psi = vacuum_spin_down(&space);
        let e = psi.expectation(&h).unwrap();
        approx(e.re, -25.0, 1e-12);
        assert!(e.im.abs() < 1e-14);
    }

    #[test]
    fn laser_map_rabi_frequencies() {
        // omega0~/2pi = 200 Hz, eta = 0.06, g = 1
        let omega0 = TAU * 200.0;
        let nu = TAU * 1.0e6;
        let sched =
            map_rabi_to_lasers(400.0, 1.0, omega0, 0.06, LaserGeometry::Traveling, nu, 0.25, 0.0)
                .unwrap();
        approx(sched.mean_final_rabi() / TAU, 66.66e3, 0.1e3);
        approx(sched.lasers[0].detuning / TAU, 80.2e3, 1.0);
        approx(sched.lasers[1].detuning / TAU, 79.8e3, 1.0);

        let sched =
            map_rabi_to_lasers(50.0, 1.0, omega0, 0.06, LaserGeometry::Traveling, nu, 0.25, 0.0)
                .unwrap();
        approx(sched.mean_final_rabi() / TAU, 23.57e3, 0.05e3);

        let sched =
            map_rabi_to_lasers(400.0, 1.0, omega0, 0.06, LaserGeometry::Standing, nu, 0.25, 0.08)
                .unwrap();
        approx(sched.mean_final_rabi() / TAU, 33.33e3, 0.05e3);
        assert_eq!(sched.lasers.len(), 4);
        approx(sched.lasers[2].phase, 0.5 * std::f64::consts::PI, 0.0);
        approx(sched.lasers[2].eta, -0.06, 0.0);
        // imbalance splits pairs around the mean
        approx(
            sched.lasers[0].ramp.final_value,
            sched.mean_final_rabi() * 1.04,
            1e-6,
        );
    }

    #[test]
    fn schedule_round_trip() {
        let omega0 = TAU * 200.0;
        let nu = TAU * 1.0e6;
        for geometry in [LaserGeometry::Traveling, LaserGeometry::Standing] {
            for (r, g) in [(50.0, 1.0), (400.0, 0.95), (100.0, 0.5)] {
                let sched =
                    map_rabi_to_lasers(r, g, omega0, 0.06, geometry, nu, 0.25, 0.08).unwrap();
                let eff = effective_rabi_of_schedule(&sched).unwrap();
                approx(eff.ratio(), r, 1e-12 * r);
                approx(eff.coupling_g(), g, 1e-12);
                approx(eff.omega0, omega0, 1e-12 * omega0);
                // the imbalance is an imperfection, not a target shift
                approx(eff.coupling_g(), sched.target.coupling_g(), 1e-12);
            }
        }
    }

    #[test]
    fn effective_model_from_detunings() {
        // delta_1/2pi = 80.2 kHz, delta_2/2pi = 79.8 kHz -> omega0~/2pi =
        // 200 Hz, Omega~/2pi = 80 kHz, R = 400
        let sched = map_rabi_to_lasers(
            400.0,
            1.0,
            TAU * 200.0,
            0.06,
            LaserGeometry::Traveling,
            TAU * 1.0e6,
            0.25,
            0.0,
        )
        .unwrap();
        let eff = effective_rabi_of_schedule(&sched).unwrap();
        approx(eff.omega0 / TAU, 200.0, 1e-9);
        approx(eff.omega / TAU, 80.0e3, 1e-7);
        approx(eff.ratio(), 400.0, 1e-9);
    }

    #[test]
    fn rwa_margin_hard_failure() {
        // delta_1 >= nu must fail outright
        let err = map_rabi_to_lasers(
            400.0,
            1.0,
            TAU * 200.0,
            0.06,
            LaserGeometry::Traveling,
            TAU * 50.0e3,
            0.25,
            0.0,
        )
        .unwrap_err();
        assert!(matches!(err, QptError::RwaMargin { .. }));
    }

    #[test]
    fn malformed_schedule_missing_sideband() {
        let omega0 = TAU * 200.0;
        let nu = TAU * 1.0e6;
        let mut sched =
            map_rabi_to_lasers(50.0, 1.0, omega0, 0.06, LaserGeometry::Traveling, nu, 0.25, 0.0)
                .unwrap();
        sched.lasers.retain(|l| l.sideband == Sideband::Blue);
        assert!(matches!(
            effective_rabi_of_schedule(&sched),
            Err(QptError::MalformedSchedule(_))
        ));
    }

    #[test]
    fn warnings_flag_thin_rwa_margin() {
        // nu only 5x the blue detuning -> advisory warning, not an error
        let sched = map_rabi_to_lasers(
            400.0,
            1.0,
            TAU * 200.0,
            0.06,
            LaserGeometry::Traveling,
            TAU * 400.0e3,
            0.25,
            0.0,
        )
        .unwrap();
        assert!(!sched.warnings().is_empty());
    }
}
