//! Exact diagonalization of the Rabi Hamiltonian: ground states, gaps,
//! atomic-population observables, and the closed-form variational
//! approximations valid near the critical point.
//!
//! All sweeps escalate the Fock cutoff until both the ground energy is
//! converged (relative change below 1e-10 between consecutive cutoffs) and
//! the ground state keeps less than 1e-8 of its population in the top ten
//! retained levels.

use ndarray::Array1;

use crate::error::{QptError, Result};
use crate::fockspace::{
    make_pauli, squeeze_operator, tail_population, tensor, Operator, Pauli,
    SpaceSpec, StateVector,
};
use crate::linalg;
use crate::models::{rabi_from_dimensionless, rabi_hamiltonian, RabiParams};
use crate::sweep;
use crate::C64;

/// Relative ground-energy change regarded as converged under cutoff
/// escalation.
pub const ENERGY_CONVERGENCE: f64 = 1e-10;
/// Default cutoff the escalation starts from.
pub const DEFAULT_CUTOFF_SEED: usize = 40;
/// Gap below `1e-8 omega0` flags a parity doublet.
pub const NEAR_DEGENERATE_FACTOR: f64 = 1e-8;

/// Lowest eigenpair of a hermitian operator on the composite space.
#[derive(Debug, Clone)]
pub struct GroundState {
    pub energy: f64,
    pub state: StateVector,
    /// Gap to the first excited state, clamped at zero.
    pub gap: f64,
    pub sigma_z: f64,
    pub sigma_z_singular: f64,
}

/// [`GroundState`] plus the truncation diagnostics of the escalation that
/// produced it.
#[derive(Debug, Clone)]
pub struct GroundStateResult {
    pub energy: f64,
    pub state: StateVector,
    pub sigma_z: f64,
    pub sigma_z_singular: f64,
    pub gap: f64,
    pub near_degenerate: bool,
    pub cutoff_used: usize,
    pub tail: f64,
}

/// `<sigma_z>` of a composite-space state from its populations alone.
pub fn sigma_z_of_state(state: &StateVector) -> f64 {
    let b = state.dim() / 2;
    let mut val = 0.0;
    for (i, amp) in state.amplitudes.iter().enumerate() {
        let sign = if i < b { 1.0 } else { -1.0 };
        val += sign * amp.norm_sqr();
    }
    val
}

/// Full dense eigendecomposition; returns the lowest pair and the gap.
///
/// The global phase is fixed deterministically: the largest-magnitude
/// amplitude is made real and positive.
pub fn ground_state(h: &Operator) -> Result<GroundState> {
    let dev = linalg::hermiticity_deviation(&h.entries);
    if dev > crate::fockspace::HERMITIAN_TOL {
        return Err(QptError::NonHermitian { deviation: dev });
    }
    let (values, vectors) = linalg::eigh(&h.entries)?;
    let dim = h.dim();
    let mut amplitudes: Array1<C64> = vectors.column(0).to_owned();

    let mut best = 0;
    let mut best_mag = 0.0;
    for (i, z) in amplitudes.iter().enumerate() {
        let mag = z.norm();
        if mag > best_mag {
            best_mag = mag;
            best = i;
        }
    }
    let phase = amplitudes[best] / best_mag;
    amplitudes.mapv_inplace(|z| z * phase.conj());

    let state = StateVector { amplitudes };
    let sigma_z = sigma_z_of_state(&state);
    let gap = if dim >= 2 {
        (values[1] - values[0]).max(0.0)
    } else {
        0.0
    };
    Ok(GroundState {
        energy: values[0],
        state,
        gap,
        sigma_z,
        sigma_z_singular: sigma_z + 1.0,
    })
}

/// Ground state of the Rabi model with automatic cutoff escalation
/// (multiply by 1.5 until converged, cf. module docs).
pub fn rabi_ground_state(params: &RabiParams, cutoff_seed: usize) -> Result<GroundStateResult> {
    const MAX_CUTOFF: usize = 6000;
    let mut cutoff = cutoff_seed.max(2);
    let mut previous: Option<(f64, GroundState, usize)> = None;

    loop {
        let space = SpaceSpec::new(cutoff)?;
        let h = rabi_hamiltonian(params, &space);
        let gs = ground_state(&h)?;
        let tail = tail_population(&gs.state, &space, 10.min(space.fock_cutoff))?;

        if let Some((prev_energy, _, _)) = previous {
            let scale = gs.energy.abs().max(params.omega0);
            if (gs.energy - prev_energy).abs() <= ENERGY_CONVERGENCE * scale
                && tail < crate::fockspace::TAIL_TOL
            {
                return Ok(GroundStateResult {
                    energy: gs.energy,
                    sigma_z: gs.sigma_z,
                    sigma_z_singular: gs.sigma_z_singular,
                    gap: gs.gap,
                    near_degenerate: gs.gap < NEAR_DEGENERATE_FACTOR * params.omega0,
                    cutoff_used: cutoff,
                    tail,
                    state: gs.state,
                });
            }
        }
        previous = Some((gs.energy, gs, cutoff));
        cutoff = ((cutoff as f64) * 1.5).ceil() as usize;
        if cutoff > MAX_CUTOFF {
            return Err(QptError::Truncation {
                context: format!(
                    "cutoff escalation for R = {}, g = {}",
                    params.ratio(),
                    params.coupling_g()
                ),
                value: cutoff as f64,
                limit: MAX_CUTOFF as f64,
                cutoff: MAX_CUTOFF,
            });
        }
    }
}

/// Thermodynamic-limit atomic population: `-1` in the normal phase,
/// `-1/g^2` beyond the transition.
pub fn sigma_z_thermodynamic(g: f64) -> f64 {
    if g <= 1.0 {
        -1.0
    } else {
        -1.0 / (g * g)
    }
}

/// Squeeze parameter of the variational critical ground state,
/// `s(R) = ln(2R/3) / 6`.
pub fn variational_squeeze_parameter(r: f64) -> f64 {
    (2.0 * r / 3.0).ln() / 6.0
}

/// Variational atomic population at the critical point,
/// `-1 + (1/3)(2R/3)^(-2/3)`. Asymptotic in `R`; good already for `R >~ 50`.
pub fn variational_sigma_z(r: f64) -> f64 {
    -1.0 + (2.0 * r / 3.0).powf(-2.0 / 3.0) / 3.0
}

/// Variational critical ground state `S[s(R)] |0>|down>`.
pub fn variational_ground_state(r: f64, space: &SpaceSpec) -> Result<StateVector> {
    let s = variational_squeeze_parameter(r);
    let squeeze = squeeze_operator(s, space)?;
    let b = space.boson_dim();
    let mut vacuum = Array1::<C64>::zeros(b);
    vacuum[0] = C64::new(1.0, 0.0);
    let boson = squeeze.entries.dot(&vacuum);

    let mut amplitudes = Array1::<C64>::zeros(space.total_dim());
    for n in 0..b {
        amplitudes[b + n] = boson[n]; // spin-down block
    }
    Ok(StateVector { amplitudes })
}

/// One grid point of an equilibrium sweep.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub r: f64,
    pub g: f64,
    pub sigma_z: f64,
    pub sigma_z_singular: f64,
    pub gap: f64,
    pub cutoff_used: usize,
    pub tail: f64,
}

/// Ground-state observables over an `(R, g)` grid, R-major with `g`
/// ascending, one escalated diagonalization per point. Points are
/// independent and run through [`sweep::par_map`]; the row order is
/// deterministic regardless of how the work is scheduled.
pub fn sigma_z_sweep(
    r_list: &[f64],
    g_list: &[f64],
    omega0: f64,
    cutoff_seed: usize,
) -> Result<Vec<SweepPoint>> {
    if r_list.is_empty() || g_list.is_empty() {
        return Err(QptError::InvalidParameter(
            "sweep grids must be nonempty".into(),
        ));
    }
    let mut grid = Vec::with_capacity(r_list.len() * g_list.len());
    for &r in r_list {
        let mut gs: Vec<f64> = g_list.to_vec();
        gs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for g in gs {
            grid.push((r, g));
        }
    }
    let rows = sweep::par_map(grid, |(r, g)| -> Result<SweepPoint> {
        let params = rabi_from_dimensionless(r, g, omega0)?;
        let gs = rabi_ground_state(&params, cutoff_seed).map_err(|e| match e {
            QptError::Truncation {
                context,
                value,
                limit,
                cutoff,
            } => QptError::Truncation {
                context: format!("sweep point (R = {r}, g = {g}): {context}"),
                value,
                limit,
                cutoff,
            },
            other => other,
        })?;
        Ok(SweepPoint {
            r,
            g,
            sigma_z: gs.sigma_z,
            sigma_z_singular: gs.sigma_z_singular,
            gap: gs.gap,
            cutoff_used: gs.cutoff_used,
            tail: gs.tail,
        })
    });
    rows.into_iter().collect()
}

/// `sigma_z` operator on the composite space (handy for expectation values).
pub fn sigma_z_operator(space: &SpaceSpec) -> Operator {
    tensor(
        &make_pauli(Pauli::Z),
        &Operator::identity(space.boson_dim()),
    )
}
