//! Truncated bosonic and spin operators, states, and truncation diagnostics.
//!
//! Every composite object lives on the space spin (x) boson with the spin
//! factor first: basis index `s * (N + 1) + n` for spin `s` (0 = up, 1 =
//! down) and Fock level `n` in `0..=N`. All constructors produce plain dense
//! complex matrices; values are immutable after construction and safe to
//! share across workers.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{QptError, Result};
use crate::linalg;
use crate::C64;

/// `max |A - A^dag|` allowed when the hermitian flag is set.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// `max |A^dag A - I|` allowed when the unitary flag is set.
pub const UNITARY_TOL: f64 = 1e-10;
/// Population allowed near the top of the truncated ladder.
pub const TAIL_TOL: f64 = 1e-8;

/// Truncated composite space: Fock levels `0..=fock_cutoff`, two spin levels,
/// ordering spin (x) boson.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpaceSpec {
    pub fock_cutoff: usize,
}

impl SpaceSpec {
    pub const SPIN_DIM: usize = 2;

    pub fn new(fock_cutoff: usize) -> Result<Self> {
        if fock_cutoff < 1 {
            return Err(QptError::InvalidParameter(
                "fock_cutoff must be at least 1".into(),
            ));
        }
        Ok(SpaceSpec { fock_cutoff })
    }

    /// Number of retained Fock levels, `N + 1`.
    pub fn boson_dim(&self) -> usize {
        self.fock_cutoff + 1
    }

    /// Dimension of the composite space, `2 (N + 1)`.
    pub fn total_dim(&self) -> usize {
        Self::SPIN_DIM * self.boson_dim()
    }
}

/// Advisory structure flags; verified on demand, never trusted blindly.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OpFlags {
    pub hermitian: bool,
    pub unitary: bool,
}

/// Dense complex square matrix.
#[derive(Debug, Clone)]
pub struct Operator {
    pub entries: Array2<C64>,
    pub flags: OpFlags,
}

impl Operator {
    pub fn new(entries: Array2<C64>) -> Self {
        assert_eq!(entries.nrows(), entries.ncols(), "operator must be square");
        Operator {
            entries,
            flags: OpFlags::default(),
        }
    }

    pub fn with_flags(entries: Array2<C64>, flags: OpFlags) -> Self {
        let mut op = Operator::new(entries);
        op.flags = flags;
        op
    }

    pub fn identity(dim: usize) -> Self {
        Operator::with_flags(
            Array2::eye(dim),
            OpFlags {
                hermitian: true,
                unitary: true,
            },
        )
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn dagger(&self) -> Operator {
        Operator::with_flags(linalg::dagger(&self.entries), self.flags)
    }

    /// Check the hermitian flag claim against [`HERMITIAN_TOL`].
    pub fn verify_hermitian(&self) -> bool {
        linalg::hermiticity_deviation(&self.entries) <= HERMITIAN_TOL
    }

    /// Check the unitary flag claim against [`UNITARY_TOL`].
    pub fn verify_unitary(&self) -> bool {
        linalg::unitarity_deviation(&self.entries) <= UNITARY_TOL
    }
}

impl std::ops::Mul<&Operator> for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        Operator::new(self.entries.dot(&rhs.entries))
    }
}

impl std::ops::Add<&Operator> for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        Operator::new(&self.entries + &rhs.entries)
    }
}

impl std::ops::Sub<&Operator> for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        Operator::new(&self.entries - &rhs.entries)
    }
}

/// Bosonic annihilation operator on the boson factor alone:
/// `<n-1| a |n> = sqrt(n)`. Callers tensor with the spin identity.
pub fn make_annihilator(space: &SpaceSpec) -> Operator {
    let b = space.boson_dim();
    let mut a = Array2::<C64>::zeros((b, b));
    for n in 1..b {
        a[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    Operator::new(a)
}

/// Number operator `a^dag a` on the boson factor, diag(0..=N).
pub fn number_operator(space: &SpaceSpec) -> Operator {
    let b = space.boson_dim();
    let mut n = Array2::<C64>::zeros((b, b));
    for k in 0..b {
        n[(k, k)] = C64::new(k as f64, 0.0);
    }
    Operator::with_flags(
        n,
        OpFlags {
            hermitian: true,
            unitary: false,
        },
    )
}

/// Position quadrature `a + a^dag` on the boson factor.
pub fn quadrature_operator(space: &SpaceSpec) -> Operator {
    let a = make_annihilator(space);
    let mut x = &a.entries + &linalg::dagger(&a.entries);
    let b = space.boson_dim();
    // symmetrize exactly (entries are identical products anyway)
    for n in 1..b {
        x[(n, n - 1)] = x[(n - 1, n)];
    }
    Operator::with_flags(
        x,
        OpFlags {
            hermitian: true,
            unitary: false,
        },
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pauli {
    X,
    Z,
    Plus,
    Minus,
}

/// Standard 2x2 Pauli matrices in the basis (|up>, |down>); `sigma_z |down> =
/// -|down>` and `sigma_plus |down> = |up>`.
pub fn make_pauli(which: Pauli) -> Operator {
    let zero = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    let (entries, hermitian, unitary) = match which {
        Pauli::X => (
            ndarray::array![[zero, one], [one, zero]],
            true,
            true,
        ),
        Pauli::Z => (
            ndarray::array![[one, zero], [zero, -one]],
            true,
            true,
        ),
        Pauli::Plus => (
            ndarray::array![[zero, one], [zero, zero]],
            false,
            false,
        ),
        Pauli::Minus => (
            ndarray::array![[zero, zero], [one, zero]],
            false,
            false,
        ),
    };
    Operator::with_flags(entries, OpFlags { hermitian, unitary })
}

/// Kronecker product; the repo-wide ordering convention is spin (x) boson.
pub fn tensor(a: &Operator, b: &Operator) -> Operator {
    Operator::with_flags(
        ndarray::linalg::kron(&a.entries, &b.entries),
        OpFlags {
            hermitian: a.flags.hermitian && b.flags.hermitian,
            unitary: a.flags.unitary && b.flags.unitary,
        },
    )
}

/// Squeeze operator `S[s] = exp[(s/2)(a^dag^2 - a^2)]` on the boson factor,
/// synthesized from the spectrum of its hermitian generator.
///
/// Fails with a truncation error when the squeezed vacuum it produces leaks
/// more than [`TAIL_TOL`] of population into the top ten Fock levels.
pub fn squeeze_operator(s: f64, space: &SpaceSpec) -> Result<Operator> {
    let a = make_annihilator(space);
    let adag = linalg::dagger(&a.entries);
    let a2 = a.entries.dot(&a.entries);
    let adag2 = adag.dot(&adag);
    // (s/2)(a^dag^2 - a^2) = i M with M hermitian
    let m = (&adag2 - &a2).mapv(|z| z * C64::new(0.0, -0.5 * s));
    let u = linalg::unitary_exp_i_hermitian(&m, 1.0)?;
    let op = Operator::with_flags(
        u,
        OpFlags {
            hermitian: false,
            unitary: true,
        },
    );

    let mut vacuum = Array1::<C64>::zeros(space.boson_dim());
    vacuum[0] = C64::new(1.0, 0.0);
    let squeezed = StateVector {
        amplitudes: op.entries.dot(&vacuum),
    };
    let k = space.fock_cutoff.min(10);
    let tail = tail_population(&squeezed, space, k)?;
    if tail >= TAIL_TOL {
        return Err(QptError::Truncation {
            context: format!("squeezed-vacuum tail for s = {s}"),
            value: tail,
            limit: TAIL_TOL,
            cutoff: space.fock_cutoff,
        });
    }
    Ok(op)
}

/// Plane-wave (displacement-like) operator `exp(i eta (a + a^dag))` on the
/// boson factor, via the spectrum of the quadrature.
pub fn plane_wave_operator(eta: f64, space: &SpaceSpec) -> Result<Operator> {
    let x = quadrature_operator(space);
    let u = linalg::unitary_exp_i_hermitian(&x.entries, eta)?;
    let dev = linalg::unitarity_deviation(&u);
    if dev > 1e-8 {
        return Err(QptError::Truncation {
            context: format!("plane-wave unitarity for eta = {eta}"),
            value: dev,
            limit: 1e-8,
            cutoff: space.fock_cutoff,
        });
    }
    Ok(Operator::with_flags(
        u,
        OpFlags {
            hermitian: false,
            unitary: true,
        },
    ))
}

/// Normalized pure state.
#[derive(Debug, Clone)]
pub struct StateVector {
    pub amplitudes: Array1<C64>,
}

impl StateVector {
    /// Basis state |index>.
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut amplitudes = Array1::<C64>::zeros(dim);
        amplitudes[index] = C64::new(1.0, 0.0);
        StateVector { amplitudes }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn normalized(&self) -> StateVector {
        let n = self.norm();
        StateVector {
            amplitudes: self.amplitudes.mapv(|z| z / n),
        }
    }

    pub fn inner(&self, other: &StateVector) -> C64 {
        self.amplitudes
            .iter()
            .zip(other.amplitudes.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }
}

/// Density operator.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    pub entries: Array2<C64>,
}

impl DensityMatrix {
    pub fn from_pure(state: &StateVector) -> Self {
        let d = state.dim();
        let mut entries = Array2::<C64>::zeros((d, d));
        for i in 0..d {
            for j in 0..d {
                entries[(i, j)] = state.amplitudes[i] * state.amplitudes[j].conj();
            }
        }
        DensityMatrix { entries }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn trace(&self) -> C64 {
        self.entries.diag().iter().sum()
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        let vals = linalg::eigvalsh(&self.entries)?;
        Ok(vals[0])
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        linalg::hermiticity_deviation(&self.entries)
    }
}

/// Anything that yields expectation values and basis populations.
pub trait QuantumState {
    fn dim(&self) -> usize;

    /// `<psi| A |psi>` or `Tr(rho A)`.
    fn expectation(&self, op: &Operator) -> Result<C64>;

    /// Diagonal populations in the computational basis.
    fn probabilities(&self) -> Vec<f64>;

    /// Populations by Fock level, summed over spin when the state lives on
    /// the composite space.
    fn fock_populations(&self, space: &SpaceSpec) -> Result<Vec<f64>> {
        collect_fock_populations(&self.probabilities(), space)
    }
}

impl QuantumState for StateVector {
    fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    fn expectation(&self, op: &Operator) -> Result<C64> {
        if op.dim() != self.dim() {
            return Err(QptError::DimensionMismatch(op.dim(), self.dim()));
        }
        let applied = op.entries.dot(&self.amplitudes);
        Ok(self
            .amplitudes
            .iter()
            .zip(applied.iter())
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|z| z.norm_sqr()).collect()
    }
}

impl QuantumState for DensityMatrix {
    fn dim(&self) -> usize {
        self.entries.nrows()
    }

    fn expectation(&self, op: &Operator) -> Result<C64> {
        if op.dim() != self.dim() {
            return Err(QptError::DimensionMismatch(op.dim(), self.dim()));
        }
        // Tr(rho A) without forming the product
        let d = self.dim();
        let mut tr = C64::new(0.0, 0.0);
        for i in 0..d {
            for k in 0..d {
                tr += self.entries[(i, k)] * op.entries[(k, i)];
            }
        }
        Ok(tr)
    }

    fn probabilities(&self) -> Vec<f64> {
        self.entries.diag().iter().map(|z| z.re).collect()
    }
}

fn collect_fock_populations(probs: &[f64], space: &SpaceSpec) -> Result<Vec<f64>> {
    let b = space.boson_dim();
    let mut pops = vec![0.0; b];
    if probs.len() == b {
        pops.copy_from_slice(probs);
    } else if probs.len() == space.total_dim() {
        for s in 0..SpaceSpec::SPIN_DIM {
            for n in 0..b {
                pops[n] += probs[s * b + n];
            }
        }
    } else {
        return Err(QptError::DimensionMismatch(probs.len(), space.total_dim()));
    }
    Ok(pops)
}

/// Total population in the Fock levels above `N - k`; certifies that the
/// cutoff is adequate for the state at hand.
pub fn tail_population<S: QuantumState + ?Sized>(
    state: &S,
    space: &SpaceSpec,
    k: usize,
) -> Result<f64> {
    let pops = state.fock_populations(space)?;
    let n = space.fock_cutoff;
    Ok(pops
        .iter()
        .enumerate()
        .filter(|(level, _)| *level > n - k.min(n))
        .map(|(_, p)| p)
        .sum())
}

/// The initial state of every protocol here: |0>|down>.
pub fn vacuum_spin_down(space: &SpaceSpec) -> StateVector {
    StateVector::basis(space.total_dim(), space.boson_dim())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn approx(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn annihilator_matrix_elements() {
        let a = make_annihilator(&SpaceSpec::new(1).unwrap());
        assert_eq!(a.entries[(0, 1)], C64::new(1.0, 0.0));
        assert_eq!(a.entries[(0, 0)], C64::new(0.0, 0.0));
        assert_eq!(a.entries[(1, 0)], C64::new(0.0, 0.0));
        assert_eq!(a.entries[(1, 1)], C64::new(0.0, 0.0));

        let a = make_annihilator(&SpaceSpec::new(2).unwrap());
        assert_eq!(a.entries[(0, 1)], C64::new(1.0, 0.0));
        assert_eq!(a.entries[(1, 2)], C64::new(2.0_f64.sqrt(), 0.0));
    }

    #[test]
    fn number_operator_is_adag_a() {
        let space = SpaceSpec::new(3).unwrap();
        let a = make_annihilator(&space);
        let n = &a.dagger() * &a;
        for k in 0..4 {
            approx(n.entries[(k, k)].re, k as f64, 1e-15);
        }
    }

    #[test]
    fn ladder_commutator_corner() {
        // [a, a^dag] = I everywhere except the bottom-right corner, which is
        // -N in the truncated algebra.
        let space = SpaceSpec::new(7).unwrap();
        let a = make_annihilator(&space);
        let adag = a.dagger();
        let comm = &(&a * &adag) - &(&adag * &a);
        for k in 0..7 {
            approx(comm.entries[(k, k)].re, 1.0, 1e-14);
        }
        approx(comm.entries[(7, 7)].re, -7.0, 1e-14);
    }

    #[test]
    fn pauli_basics() {
        let z = make_pauli(Pauli::Z);
        assert_eq!(z.entries[(0, 0)], C64::new(1.0, 0.0));
        assert_eq!(z.entries[(1, 1)], C64::new(-1.0, 0.0));

        let x = make_pauli(Pauli::X);
        let x2 = &x * &x;
        assert_eq!(x2.entries[(0, 0)], C64::new(1.0, 0.0));
        assert_eq!(x2.entries[(0, 1)], C64::new(0.0, 0.0));

        // sigma_plus |down> = |up>
        let plus = make_pauli(Pauli::Plus);
        let down = StateVector::basis(2, 1);
        let up = plus.entries.dot(&down.amplitudes);
        assert_eq!(up[0], C64::new(1.0, 0.0));
        assert_eq!(up[1], C64::new(0.0, 0.0));
    }

    #[test]
    fn tensor_products() {
        let i2 = Operator::identity(2);
        let i3 = Operator::identity(3);
        let i6 = tensor(&i2, &i3);
        assert_eq!(i6.dim(), 6);
        for i in 0..6 {
            approx(i6.entries[(i, i)].re, 1.0, 0.0);
        }

        // diag(1,-1) (x) diag(0,1,2) = diag(0,1,2,0,-1,-2)
        let z = make_pauli(Pauli::Z);
        let n3 = {
            let mut m = Array2::<C64>::zeros((3, 3));
            for k in 0..3 {
                m[(k, k)] = C64::new(k as f64, 0.0);
            }
            Operator::new(m)
        };
        let prod = tensor(&z, &n3);
        let expect = [0.0, 1.0, 2.0, 0.0, -1.0, -2.0];
        for (i, e) in expect.iter().enumerate() {
            approx(prod.entries[(i, i)].re, *e, 0.0);
        }
    }

    #[test]
    fn tensor_mixed_product_property() {
        // (sigma_z (x) I) (I (x) a) = sigma_z (x) a
        let space = SpaceSpec::new(4).unwrap();
        let a = make_annihilator(&space);
        let z = make_pauli(Pauli::Z);
        let lhs = &tensor(&z, &Operator::identity(space.boson_dim()))
            * &tensor(&Operator::identity(2), &a);
        let rhs = tensor(&z, &a);
        let diff = &lhs - &rhs;
        assert!(linalg::max_abs(&diff.entries) < 1e-14);
    }

    #[test]
    fn squeeze_identity_at_zero() {
        let space = SpaceSpec::new(20).unwrap();
        let s = squeeze_operator(0.0, &space).unwrap();
        let diff = &s - &Operator::identity(space.boson_dim());
        assert!(linalg::max_abs(&diff.entries) < 1e-13);
    }

    #[test]
    fn squeezed_vacuum_photon_number() {
        // <n> of S[s]|0> equals sinh^2(s)
        let space = SpaceSpec::new(80).unwrap();
        let s = 0.9310;
        let sq = squeeze_operator(s, &space).unwrap();
        let mut vac = Array1::<C64>::zeros(space.boson_dim());
        vac[0] = C64::new(1.0, 0.0);
        let state = StateVector {
            amplitudes: sq.entries.dot(&vac),
        };
        let n = state.expectation(&number_operator(&space)).unwrap();
        approx(n.re, s.sinh().powi(2), 1e-9);
        assert!(n.im.abs() < 1e-12);

        let tail = tail_population(&state, &space, 10).unwrap();
        assert!(tail < 1e-8, "tail = {tail:.3e}");
    }

    #[test]
    fn squeeze_unitarity() {
        for (s, cutoff) in [(0.2, 40), (0.6, 40), (0.9, 60)] {
            let space = SpaceSpec::new(cutoff).unwrap();
            let sq = squeeze_operator(s, &space).unwrap();
            assert!(sq.verify_unitary(), "s = {s}, N = {cutoff}");
        }
    }

    /// Squeezed-vacuum population above level `n_min - 1` (even levels
    /// only): `P(2m) = binom(2m, m) 4^-m tanh(s)^{2m} / cosh(s)`.
    fn squeezed_tail_closed_form(s: f64, n_min: usize) -> f64 {
        let t2 = s.tanh().powi(2);
        let mut p = 1.0 / s.cosh(); // P(0)
        let mut m = 0usize;
        let mut tail = 0.0;
        while 2 * m < n_min + 400 {
            if 2 * m >= n_min {
                tail += p;
            }
            // P(2(m+1)) / P(2m) = (2m+1)/(2m+2) * tanh^2
            p *= (2 * m + 1) as f64 / (2 * m + 2) as f64 * t2;
            m += 1;
        }
        tail
    }

    #[test]
    fn squeeze_truncation_error() {
        // cutoff 6 cannot host an s = 1 squeezed vacuum
        let space = SpaceSpec::new(6).unwrap();
        match squeeze_operator(1.0, &space) {
            Err(QptError::Truncation { cutoff, .. }) => assert_eq!(cutoff, 6),
            other => panic!("expected truncation error, got {other:?}"),
        }

        // marginal case: s = 0.931 at cutoff 60 leaves ~1.3e-8 in the top
        // ten levels, just over the gate; the reported tail agrees with the
        // closed-form Fock distribution
        let space = SpaceSpec::new(60).unwrap();
        match squeeze_operator(0.931, &space) {
            Err(QptError::Truncation { value, .. }) => {
                let expect = squeezed_tail_closed_form(0.931, 51);
                assert!(
                    (value - expect).abs() / expect < 0.5,
                    "tail {value:.3e} vs closed form {expect:.3e}"
                );
                assert!(value > 1e-8 && value < 3e-8);
            }
            other => panic!("expected truncation error, got {other:?}"),
        }
    }

    #[test]
    fn plane_wave_identity_at_zero() {
        let space = SpaceSpec::new(10).unwrap();
        let p = plane_wave_operator(0.0, &space).unwrap();
        let diff = &p - &Operator::identity(space.boson_dim());
        assert!(linalg::max_abs(&diff.entries) < 1e-13);
    }

    #[test]
    fn plane_wave_vacuum_overlap() {
        // <0| exp(i eta (a + a^dag)) |0> = exp(-eta^2 / 2)
        let space = SpaceSpec::new(60).unwrap();
        let eta = 0.06;
        let p = plane_wave_operator(eta, &space).unwrap();
        let overlap = p.entries[(0, 0)];
        approx(overlap.re, (-eta * eta / 2.0).exp(), 1e-12);
        approx(overlap.re, 0.998201, 2e-6);
        assert!(overlap.im.abs() < 1e-12);
        assert!(p.verify_unitary());
    }

    #[test]
    fn plane_wave_inverse_pair() {
        let space = SpaceSpec::new(30).unwrap();
        for eta in [0.06, 0.3, 1.1] {
            let p = plane_wave_operator(eta, &space).unwrap();
            let q = plane_wave_operator(-eta, &space).unwrap();
            let prod = &p * &q;
            let diff = &prod - &Operator::identity(space.boson_dim());
            assert!(linalg::max_abs(&diff.entries) < 1e-10);
        }
    }

    #[test]
    fn expectation_examples() {
        let space = SpaceSpec::new(5).unwrap();
        let down = StateVector::basis(2, 1);
        let z = make_pauli(Pauli::Z);
        approx(down.expectation(&z).unwrap().re, -1.0, 0.0);

        let vac = StateVector::basis(space.boson_dim(), 0);
        let n = number_operator(&space);
        approx(vac.expectation(&n).unwrap().re, 0.0, 0.0);

        // maximally mixed spin: Tr(I/2 sigma_z) = 0
        let mixed = DensityMatrix {
            entries: Array2::eye(2).mapv(|z: C64| z * 0.5),
        };
        approx(mixed.expectation(&z).unwrap().re, 0.0, 0.0);
    }

    #[test]
    fn expectation_dimension_mismatch() {
        let state = StateVector::basis(4, 0);
        let z = make_pauli(Pauli::Z);
        assert!(matches!(
            state.expectation(&z),
            Err(QptError::DimensionMismatch(2, 4))
        ));
    }

    #[test]
    fn tail_population_examples() {
        let space = SpaceSpec::new(9).unwrap();
        let initial = vacuum_spin_down(&space);
        approx(tail_population(&initial, &space, 5).unwrap(), 0.0, 0.0);

        // uniform over all boson levels: tail with k = N is 1 - 1/(N+1)
        let b = space.boson_dim();
        let uniform = StateVector {
            amplitudes: Array1::from_elem(b, C64::new(1.0 / (b as f64).sqrt(), 0.0)),
        };
        approx(
            tail_population(&uniform, &space, space.fock_cutoff).unwrap(),
            1.0 - 1.0 / b as f64,
            1e-14,
        );
    }

    #[test]
    fn space_spec_rejects_zero() {
        assert!(SpaceSpec::new(0).is_err());
    }
}
