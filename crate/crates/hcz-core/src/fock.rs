//! Bosonic Fock-basis bookkeeping and multi-photon transition amplitudes.
//!
//! States are occupation vectors over labeled modes; transition amplitudes
//! through a mode unitary are matrix permanents of row/column-repeated
//! submatrices. This module is deliberately dumb and exact: it serves as the
//! brute-force oracle for every closed-form expression elsewhere in the crate.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::unitary::ModeUnitary;

/// Absolute tolerance for physics identities (norm preservation, hermiticity).
pub const PHYS_TOL: f64 = 1e-10;
/// Absolute tolerance for pure linear algebra (permanent cross-checks).
pub const LINALG_TOL: f64 = 1e-12;

/// Labels for the modes of the standard four-mode problem plus the two
/// fictitious copy modes used by the Jamiolkowski construction.
///
/// The canonical interacting order is `{C, T, A, B}` (indices 0..3).
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum ModeLabel {
    /// Control |1>-rail.
    C,
    /// Target |1>-rail.
    T,
    /// First ancilla.
    A,
    /// Second ancilla.
    B,
    /// Fictitious copy of the control rail (untouched by the circuit).
    C2,
    /// Fictitious copy of the target rail.
    T2,
}

impl ModeLabel {
    pub const INTERACTING: [ModeLabel; 4] = [ModeLabel::C, ModeLabel::T, ModeLabel::A, ModeLabel::B];

    pub fn index(self) -> usize {
        match self {
            ModeLabel::C => 0,
            ModeLabel::T => 1,
            ModeLabel::A => 2,
            ModeLabel::B => 3,
            ModeLabel::C2 => 4,
            ModeLabel::T2 => 5,
        }
    }
}

impl fmt::Display for ModeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ModeLabel::C => "C",
            ModeLabel::T => "T",
            ModeLabel::A => "A",
            ModeLabel::B => "B",
            ModeLabel::C2 => "C2",
            ModeLabel::T2 => "T2",
        };
        write!(f, "{s}")
    }
}

/// An occupation-number basis ket: one non-negative photon count per mode.
///
/// Ordering (and therefore map iteration order) is lexicographic over the
/// occupation vector, so serialized states are reproducible.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FockState(Vec<u32>);

impl FockState {
    pub fn new(occupations: Vec<u32>) -> Self {
        FockState(occupations)
    }

    /// The all-zeros ket.
    pub fn vacuum(modes: usize) -> Self {
        FockState(vec![0; modes])
    }

    pub fn occupations(&self) -> &[u32] {
        &self.0
    }

    pub fn modes(&self) -> usize {
        self.0.len()
    }

    /// Total photon number.
    pub fn photons(&self) -> u32 {
        self.0.iter().sum()
    }
}

impl fmt::Display for FockState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|")?;
        for (i, n) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{n}")?;
        }
        write!(f, ">")
    }
}

impl From<&[u32]> for FockState {
    fn from(occ: &[u32]) -> Self {
        FockState(occ.to_vec())
    }
}

impl<const N: usize> From<[u32; N]> for FockState {
    fn from(occ: [u32; N]) -> Self {
        FockState(occ.to_vec())
    }
}

/// All occupation vectors of `photons` photons over `modes` modes, in
/// lexicographic order.
pub fn enumerate_fock_states(modes: usize, photons: u32) -> Vec<FockState> {
    fn rec(modes: usize, photons: u32, prefix: &mut Vec<u32>, out: &mut Vec<FockState>) {
        if modes == 1 {
            prefix.push(photons);
            out.push(FockState(prefix.clone()));
            prefix.pop();
            return;
        }
        for k in 0..=photons {
            prefix.push(k);
            rec(modes - 1, photons - k, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if modes == 0 {
        return out;
    }
    rec(modes, photons, &mut Vec::new(), &mut out);
    out
}

/// A sparse superposition over Fock kets: amplitude map keyed by occupation
/// vector.
#[derive(Clone, Debug, Default)]
pub struct MultiPhotonState {
    amplitudes: BTreeMap<FockState, Complex64>,
}

impl MultiPhotonState {
    pub fn new() -> Self {
        Self::default()
    }

    /// A single basis ket with unit amplitude.
    pub fn ket(state: FockState) -> Self {
        let mut amplitudes = BTreeMap::new();
        amplitudes.insert(state, Complex64::new(1.0, 0.0));
        MultiPhotonState { amplitudes }
    }

    pub fn add(&mut self, state: FockState, amp: Complex64) {
        let entry = self.amplitudes.entry(state).or_insert(Complex64::new(0.0, 0.0));
        *entry += amp;
    }

    pub fn amplitude(&self, state: &FockState) -> Complex64 {
        self.amplitudes.get(state).copied().unwrap_or(Complex64::new(0.0, 0.0))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&FockState, &Complex64)> {
        self.amplitudes.iter()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn normalize(&mut self) {
        let n = self.norm_sqr().sqrt();
        if n > 0.0 {
            for a in self.amplitudes.values_mut() {
                *a /= n;
            }
        }
    }

    /// Drop amplitudes below `eps` in modulus.
    pub fn prune(&mut self, eps: f64) {
        self.amplitudes.retain(|_, a| a.norm() > eps);
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }
}

/// Matrix permanent by Gray-code inclusion-exclusion (Ryser), O(2^n * n).
///
/// The naive Laplace-expansion oracle lives in test code only.
pub fn permanent(m: &ndarray::Array2<Complex64>) -> Result<Complex64> {
    if m.nrows() != m.ncols() {
        return Err(Error::contract(format!(
            "permanent requires a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let n = m.nrows();
    if n == 0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    // Ryser: per(A) = (-1)^n * sum_{S != 0} (-1)^{|S|} prod_i sum_{j in S} a_ij,
    // with row sums updated incrementally along the Gray-code walk.
    let mut row_sums = vec![Complex64::new(0.0, 0.0); n];
    let mut total = Complex64::new(0.0, 0.0);
    let mut gray_prev: u64 = 0;
    let mut popcount: i32 = 0;
    for k in 1u64..(1u64 << n) {
        let gray = k ^ (k >> 1);
        let diff = gray ^ gray_prev;
        let j = diff.trailing_zeros() as usize;
        if gray & diff != 0 {
            for (i, rs) in row_sums.iter_mut().enumerate() {
                *rs += m[(i, j)];
            }
            popcount += 1;
        } else {
            for (i, rs) in row_sums.iter_mut().enumerate() {
                *rs -= m[(i, j)];
            }
            popcount -= 1;
        }
        gray_prev = gray;
        let prod: Complex64 = row_sums.iter().product();
        if popcount % 2 == 0 {
            total += prod;
        } else {
            total -= prod;
        }
    }
    if n % 2 == 0 {
        Ok(total)
    } else {
        Ok(-total)
    }
}

/// Amplitude <out| U |in> for photons entering per `input` and exiting per
/// `output`, with the single-photon convention that a photon in mode j exits
/// mode k with amplitude `U[k, j]`.
///
/// Returns zero when photon numbers differ.
pub fn transition_amplitude(u: &ModeUnitary, input: &FockState, output: &FockState) -> Result<Complex64> {
    let n = u.dim();
    if input.modes() != n || output.modes() != n {
        return Err(Error::contract(format!(
            "mode count mismatch: unitary is {}x{}, input has {} modes, output has {}",
            n,
            n,
            input.modes(),
            output.modes()
        )));
    }
    if input.photons() != output.photons() {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let p = input.photons() as usize;
    if p == 0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    // Columns repeated by input occupancy, rows by output occupancy.
    let mut cols = Vec::with_capacity(p);
    for (j, &nj) in input.occupations().iter().enumerate() {
        for _ in 0..nj {
            cols.push(j);
        }
    }
    let mut rows = Vec::with_capacity(p);
    for (k, &nk) in output.occupations().iter().enumerate() {
        for _ in 0..nk {
            rows.push(k);
        }
    }
    let mut sub = ndarray::Array2::<Complex64>::zeros((p, p));
    for (ri, &r) in rows.iter().enumerate() {
        for (ci, &c) in cols.iter().enumerate() {
            sub[(ri, ci)] = u.entry(r, c);
        }
    }
    let mut norm = 1.0f64;
    for &nj in input.occupations().iter().chain(output.occupations()) {
        for f in 2..=nj as u64 {
            norm *= f as f64;
        }
    }
    Ok(permanent(&sub)? / norm.sqrt())
}

/// Evolve a (possibly mixed-photon-number) superposition through `u` by
/// summing transition amplitudes into every same-photon-number output ket.
pub fn evolve(u: &ModeUnitary, state: &MultiPhotonState) -> Result<MultiPhotonState> {
    let modes = u.dim();
    let mut out = MultiPhotonState::new();
    // Photon number is conserved sector by sector; enumerate each sector once.
    let mut sectors: Vec<u32> = state.iter().map(|(k, _)| k.photons()).collect();
    sectors.sort_unstable();
    sectors.dedup();
    for n in sectors {
        let outputs = enumerate_fock_states(modes, n);
        for target in outputs {
            let mut amp = Complex64::new(0.0, 0.0);
            for (ket, a) in state.iter() {
                if ket.photons() != n {
                    continue;
                }
                amp += a * transition_amplitude(u, ket, &target)?;
            }
            if amp.norm_sqr() > 0.0 {
                out.add(target, amp);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_PI_4;

    /// Naive Laplace-expansion permanent, the oracle for the Ryser kernel.
    fn permanent_naive(m: &Array2<Complex64>) -> Complex64 {
        let n = m.nrows();
        if n == 0 {
            return Complex64::new(1.0, 0.0);
        }
        if n == 1 {
            return m[(0, 0)];
        }
        let mut total = Complex64::new(0.0, 0.0);
        for j in 0..n {
            let minor = Array2::from_shape_fn((n - 1, n - 1), |(r, c)| {
                m[(r + 1, if c < j { c } else { c + 1 })]
            });
            total += m[(0, j)] * permanent_naive(&minor);
        }
        total
    }

    fn random_matrix(rng: &mut impl Rng, n: usize) -> Array2<Complex64> {
        Array2::from_shape_fn((n, n), |_| {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        })
    }

    #[test]
    fn permanent_identity_is_one() {
        let id = Array2::<Complex64>::eye(3);
        assert!((permanent(&id).unwrap() - Complex64::new(1.0, 0.0)).norm() < LINALG_TOL);
    }

    #[test]
    fn permanent_two_by_two() {
        let m = ndarray::array![
            [Complex64::new(1.0, 0.0), Complex64::new(2.0, 0.0)],
            [Complex64::new(3.0, 0.0), Complex64::new(4.0, 0.0)]
        ];
        // 1*4 + 2*3
        assert!((permanent(&m).unwrap() - Complex64::new(10.0, 0.0)).norm() < LINALG_TOL);
    }

    #[test]
    fn permanent_rejects_non_square() {
        let m = Array2::<Complex64>::zeros((2, 3));
        assert!(matches!(permanent(&m), Err(Error::Contract(_))));
    }

    #[test]
    fn permanent_matches_naive_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for trial in 0..500 {
            let n = 1 + trial % 6;
            let m = random_matrix(&mut rng, n);
            let fast = permanent(&m).unwrap();
            let slow = permanent_naive(&m);
            let scale = slow.norm().max(1.0);
            assert!(
                (fast - slow).norm() / scale < LINALG_TOL,
                "n={n} fast={fast} slow={slow}"
            );
        }
    }

    #[test]
    fn transition_identity_is_diagonal() {
        let u = ModeUnitary::identity(4);
        let s = FockState::from([2, 0, 1, 1]);
        let a = transition_amplitude(&u, &s, &s).unwrap();
        assert!((a - Complex64::new(1.0, 0.0)).norm() < PHYS_TOL);
        let other = FockState::from([1, 1, 1, 1]);
        assert!(transition_amplitude(&u, &s, &other).unwrap().norm() < PHYS_TOL);
    }

    #[test]
    fn balanced_splitter_bunches_photon_pairs() {
        let u = crate::circuit::beamsplitter(FRAC_PI_4);
        let input = FockState::from([1, 1]);
        // Both photons exit the same port with amplitude i/sqrt(2)...
        let bunched = transition_amplitude(&u, &input, &FockState::from([2, 0])).unwrap();
        assert!((bunched - Complex64::new(0.0, 1.0 / 2f64.sqrt())).norm() < PHYS_TOL);
        // ...and the coincidence amplitude cancels.
        let coincide = transition_amplitude(&u, &input, &FockState::from([1, 1])).unwrap();
        assert!(coincide.norm() < PHYS_TOL);
    }

    #[test]
    fn single_photon_evolution_reads_off_matrix_columns() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let u = ModeUnitary::random(4, &mut rng);
            for j in 0..4 {
                let mut occ = vec![0u32; 4];
                occ[j] = 1;
                let out = evolve(&u, &MultiPhotonState::ket(FockState::new(occ))).unwrap();
                for k in 0..4 {
                    let mut occ_out = vec![0u32; 4];
                    occ_out[k] = 1;
                    let a = out.amplitude(&FockState::new(occ_out));
                    assert!((a - u.entry(k, j)).norm() < PHYS_TOL);
                }
            }
        }
    }

    #[test]
    fn evolve_preserves_norm_and_photon_number() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let u = ModeUnitary::random(5, &mut rng);
            let mut state = MultiPhotonState::new();
            for ket in enumerate_fock_states(5, 3).into_iter().step_by(7) {
                state.add(ket, Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
            }
            state.normalize();
            let out = evolve(&u, &state).unwrap();
            assert!((out.norm_sqr() - 1.0).abs() < PHYS_TOL);
            assert!(out.iter().all(|(k, _)| k.photons() == 3));
        }
    }

    #[test]
    fn transition_amplitude_dagger_symmetry() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for _ in 0..30 {
            let u = ModeUnitary::random(4, &mut rng);
            let ud = u.dagger();
            let states = enumerate_fock_states(4, 2);
            for inp in states.iter().step_by(3) {
                for out in states.iter().step_by(2) {
                    let fwd = transition_amplitude(&u, inp, out).unwrap();
                    let bwd = transition_amplitude(&ud, out, inp).unwrap();
                    assert!((fwd - bwd.conj()).norm() < PHYS_TOL);
                }
            }
        }
    }

    #[test]
    fn fock_enumeration_is_lexicographic_and_complete() {
        let states = enumerate_fock_states(3, 2);
        let expected: Vec<FockState> = vec![
            [0, 0, 2].into(),
            [0, 1, 1].into(),
            [0, 2, 0].into(),
            [1, 0, 1].into(),
            [1, 1, 0].into(),
            [2, 0, 0].into(),
        ];
        assert_eq!(states, expected);
        // 4 photons in 8 modes: the largest basis this crate sweeps densely.
        assert_eq!(enumerate_fock_states(8, 4).len(), 330);
    }
}
