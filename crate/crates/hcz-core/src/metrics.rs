//! Circuit quality metrics: gauge-optimized mode fidelity, the heralded
//! process state via the Jamiolkowski isomorphism, process fidelity, and
//! per-basis/herald success probabilities.

use ndarray::Array2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock;
use crate::unitary::ModeUnitary;

/// Physical output kets (n_C, n_T) with n_C + n_T <= 2, lexicographic.
pub const PHYS_KETS: [(u32, u32); 6] = [(0, 0), (0, 1), (0, 2), (1, 0), (1, 1), (2, 0)];
/// Fictitious-copy kets (n_C2, n_T2) = computational (control, target) bits.
pub const FICT_KETS: [(u32, u32); 4] = [(0, 0), (0, 1), (1, 0), (1, 1)];
/// Dimension of the (physical x fictitious) product space the heralded
/// process state lives on.
pub const PROCESS_DIM: usize = PHYS_KETS.len() * FICT_KETS.len();

/// Whether mode fidelity is maximized over external per-mode phases.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GaugeOpt {
    Off,
    On,
}

/// Configuration for the alternating phase-alignment gauge search.
#[derive(Copy, Clone, Debug)]
pub struct GaugeConfig {
    pub restarts: usize,
    pub max_iters: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for GaugeConfig {
    fn default() -> Self {
        GaugeConfig { restarts: 8, max_iters: 500, tol: 1e-12, seed: 0x6a6d_1a52 }
    }
}

/// Normalized Hilbert-Schmidt overlap |Tr(v† u)|^2 / N^2, optionally
/// maximized over diagonal phase matrices on both sides.
pub fn mode_fidelity(u: &ModeUnitary, v: &ModeUnitary, gauge: GaugeOpt) -> Result<f64> {
    mode_fidelity_with(u, v, gauge, &GaugeConfig::default())
}

/// [`mode_fidelity`] with explicit gauge-search configuration.
pub fn mode_fidelity_with(
    u: &ModeUnitary,
    v: &ModeUnitary,
    gauge: GaugeOpt,
    cfg: &GaugeConfig,
) -> Result<f64> {
    let n = u.dim();
    if v.dim() != n {
        return Err(Error::contract(format!(
            "mode fidelity requires equal dimensions, got {} and {}",
            n,
            v.dim()
        )));
    }
    if gauge == GaugeOpt::Off {
        return Ok(hs_overlap(u, v));
    }
    // Alternating maximization of |Tr(V† D1 U D2)|: with D1 fixed, the
    // optimal D2 negates the phases of diag(V† D1 U), and symmetrically.
    // Each step is monotone; random restarts guard against the rare
    // zero-diagonal stall.
    let vd = v.dagger();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut best = 0.0f64;
    for restart in 0..cfg.restarts.max(1) {
        let mut d1: Vec<Complex64> = if restart == 0 {
            vec![Complex64::new(1.0, 0.0); n]
        } else {
            (0..n)
                .map(|_| Complex64::from_polar(1.0, rng.gen_range(-3.14159..3.14159)))
                .collect()
        };
        let mut prev = -1.0f64;
        for _ in 0..cfg.max_iters {
            let m = vd.scale_cols(&d1).entries().dot(u.entries());
            let d2: Vec<Complex64> = (0..n)
                .map(|j| phase_conj(m[(j, j)]))
                .collect();
            let mk = u.scale_cols(&d2).entries().dot(vd.entries());
            d1 = (0..n).map(|k| phase_conj(mk[(k, k)])).collect();
            let mut tr = Complex64::new(0.0, 0.0);
            let m2 = vd.scale_cols(&d1).entries().dot(u.scale_cols(&d2).entries());
            for j in 0..n {
                tr += m2[(j, j)];
            }
            let f = tr.norm_sqr() / (n * n) as f64;
            if (f - prev).abs() < cfg.tol {
                prev = f;
                break;
            }
            prev = f;
        }
        best = best.max(prev);
    }
    Ok(best.min(1.0))
}

fn hs_overlap(u: &ModeUnitary, v: &ModeUnitary) -> f64 {
    let n = u.dim();
    let mut tr = Complex64::new(0.0, 0.0);
    for j in 0..n {
        for k in 0..n {
            tr += v.entry(k, j).conj() * u.entry(k, j);
        }
    }
    tr.norm_sqr() / (n * n) as f64
}

fn phase_conj(z: Complex64) -> Complex64 {
    if z.norm() < 1e-300 {
        Complex64::new(1.0, 0.0)
    } else {
        (z / z.norm()).conj()
    }
}

/// The heralded process state: the density operator on
/// (physical output occupancy) x (fictitious input copy) obtained by sending
/// half of a maximally entangled two-qubit state through the circuit and
/// post-selecting exactly one photon in each ancilla, plus the herald
/// probability.
///
/// Basis index = `4 * phys + fict` with `phys` indexing [`PHYS_KETS`] and
/// `fict` indexing [`FICT_KETS`]. Photon-number superselection ties each
/// fictitious pattern to physical kets with matching photon count; all other
/// matrix elements vanish.
#[derive(Clone, Debug)]
pub struct HeraldedProcessState {
    rho: Array2<Complex64>,
    herald_prob: f64,
    amplitudes: Vec<Complex64>,
}

impl HeraldedProcessState {
    pub fn rho(&self) -> &Array2<Complex64> {
        &self.rho
    }

    pub fn herald_prob(&self) -> f64 {
        self.herald_prob
    }

    /// Normalized state-vector amplitude on `(phys, fict)`; the heralded
    /// state of a unitary circuit is pure.
    pub fn amplitude(&self, phys: (u32, u32), fict: (u32, u32)) -> Complex64 {
        let p = PHYS_KETS.iter().position(|&k| k == phys);
        let f = FICT_KETS.iter().position(|&k| k == fict);
        match (p, f) {
            (Some(p), Some(f)) => self.amplitudes[4 * p + f],
            _ => Complex64::new(0.0, 0.0),
        }
    }

    pub fn trace(&self) -> f64 {
        (0..PROCESS_DIM).map(|i| self.rho[(i, i)].re).sum()
    }

    pub fn max_hermiticity_violation(&self) -> f64 {
        let mut max = 0.0f64;
        for i in 0..PROCESS_DIM {
            for j in 0..PROCESS_DIM {
                max = max.max((self.rho[(i, j)] - self.rho[(j, i)].conj()).norm());
            }
        }
        max
    }

    /// Smallest eigenvalue lower bound via Gershgorin-free direct check: for
    /// a pure normalized state the spectrum is {1, 0, ...}, so this reports
    /// `min(0, 1 - trace deviation)`-style slack from the vector
    /// representation.
    pub fn min_eigenvalue(&self) -> f64 {
        // rho = |v><v| exactly by construction; eigenvalues are |v|^2 and 0.
        let n2: f64 = self.amplitudes.iter().map(|a| a.norm_sqr()).sum();
        (n2 - 1.0).min(0.0)
    }
}

/// The four Jamiolkowski input branches: fictitious pattern -> circuit-side
/// input occupation over {C, T, A, B}.
fn branch_input(fict: (u32, u32)) -> fock::FockState {
    fock::FockState::from([fict.0, fict.1, 1, 1])
}

/// Build the heralded process state of a 4x4 circuit map by evolving each
/// branch of the maximally entangled input through `u` (fictitious modes
/// untouched) and projecting on exactly one photon in each ancilla.
pub fn jamiolkowski_state(u: &ModeUnitary) -> Result<HeraldedProcessState> {
    if u.dim() != 4 {
        return Err(Error::contract(format!(
            "process construction expects a 4x4 map, got {}x{}",
            u.dim(),
            u.dim()
        )));
    }
    if u.unitarity_deviation() > u.unitarity_tol().max(1e-6) {
        return Err(Error::contract(format!(
            "matrix deviates from unitarity by {:.3e}, beyond its tolerance",
            u.unitarity_deviation()
        )));
    }
    let mut v = vec![Complex64::new(0.0, 0.0); PROCESS_DIM];
    for (fi, &fict) in FICT_KETS.iter().enumerate() {
        let input = branch_input(fict);
        let remaining = input.photons() - 2;
        for (pi, &(nc, nt)) in PHYS_KETS.iter().enumerate() {
            if nc + nt != remaining {
                continue;
            }
            let output = fock::FockState::from([nc, nt, 1, 1]);
            // Each branch enters with amplitude 1/2 from the maximally
            // entangled state.
            v[4 * pi + fi] = 0.5 * fock::transition_amplitude(u, &input, &output)?;
        }
    }
    let herald_prob: f64 = v.iter().map(|a| a.norm_sqr()).sum();
    if herald_prob <= 0.0 {
        return Err(Error::IllConditioned(
            "herald never fires for this map; process state undefined".to_string(),
        ));
    }
    let norm = herald_prob.sqrt();
    let amplitudes: Vec<Complex64> = v.iter().map(|a| a / norm).collect();
    let rho = Array2::from_shape_fn((PROCESS_DIM, PROCESS_DIM), |(i, j)| {
        amplitudes[i] * amplitudes[j].conj()
    });
    Ok(HeraldedProcessState { rho, herald_prob, amplitudes })
}

/// The ideal CZ Jamiolkowski vector on the extended space: zero support on
/// every error ket.
fn cz_vector() -> Vec<Complex64> {
    let mut v = vec![Complex64::new(0.0, 0.0); PROCESS_DIM];
    for (sign, fict) in [(0.5, (0, 0)), (0.5, (0, 1)), (0.5, (1, 0)), (-0.5, (1, 1))] {
        let p = PHYS_KETS.iter().position(|&k| k == fict).unwrap();
        let f = FICT_KETS.iter().position(|&k| k == fict).unwrap();
        v[4 * p + f] = Complex64::new(sign, 0.0);
    }
    v
}

/// Process fidelity Tr(rho_CZ rho) against the extended ideal CZ state.
/// Any weight on double-occupancy or cross-talk kets strictly lowers it.
pub fn process_fidelity(state: &HeraldedProcessState) -> f64 {
    let cz = cz_vector();
    let mut overlap = Complex64::new(0.0, 0.0);
    for (i, c) in cz.iter().enumerate() {
        overlap += c.conj() * state.amplitudes[i];
    }
    overlap.norm_sqr()
}

/// Heralded amplitude for one computational basis input exiting in its
/// correct configuration: basis photons enter (plus both ancillas), and the
/// projector keeps one photon in each ancilla with the computational photons
/// unmoved.
pub fn basis_amplitude(u: &ModeUnitary, basis: (u32, u32)) -> Result<Complex64> {
    if basis.0 > 1 || basis.1 > 1 {
        return Err(Error::contract(format!("basis labels are bits, got {basis:?}")));
    }
    let occ = fock::FockState::from([basis.0, basis.1, 1, 1]);
    fock::transition_amplitude(u, &occ, &occ)
}

/// Probability of heralding with the photons exiting in the correct
/// computational configuration for `basis`.
pub fn basis_success_probability(u: &ModeUnitary, basis: (u32, u32)) -> Result<f64> {
    Ok(basis_amplitude(u, basis)?.norm_sqr())
}

/// Success-rate estimate for a six-photon experiment.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct RateEstimate {
    /// Probability of a heralded success per six-photon input.
    pub per_shot_success: f64,
    /// Expected successes per second.
    pub wall_rate_hz: f64,
    pub loss_db_per_waveguide: f64,
    pub source_rate_hz: f64,
}

/// Per-shot success (2/27) * eta^4 with eta = 10^(-loss/10): four photons
/// traverse the chip, the two triggers do not. Wall rate scales by the
/// six-photon generation rate.
pub fn rate_estimate(loss_db_per_waveguide: f64, six_photon_rate_hz: f64) -> Result<RateEstimate> {
    if loss_db_per_waveguide < 0.0 || six_photon_rate_hz < 0.0 {
        return Err(Error::contract("loss and rate must be non-negative".to_string()));
    }
    let eta = 10f64.powf(-loss_db_per_waveguide / 10.0);
    let per_shot = 2.0 / 27.0 * eta.powi(4);
    Ok(RateEstimate {
        per_shot_success: per_shot,
        wall_rate_hz: per_shot * six_photon_rate_hz,
        loss_db_per_waveguide,
        source_rate_hz: six_photon_rate_hz,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{build_circuit, swap_ancilla_rows, CircuitParams};
    use rand::Rng;

    const HERALD_IDEAL: f64 = 2.0 / 27.0;

    #[test]
    fn self_fidelity_is_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10 {
            let u = ModeUnitary::random(4, &mut rng);
            assert!((mode_fidelity(&u, &u, GaugeOpt::Off).unwrap() - 1.0).abs() < 1e-12);
            assert!((mode_fidelity(&u, &u, GaugeOpt::On).unwrap() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn gauge_optimization_undoes_diagonal_phases() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let v = build_circuit(&CircuitParams::ideal());
        for _ in 0..25 {
            let d1: Vec<Complex64> =
                (0..4).map(|_| Complex64::from_polar(1.0, rng.gen_range(-3.1..3.1))).collect();
            let d2: Vec<Complex64> =
                (0..4).map(|_| Complex64::from_polar(1.0, rng.gen_range(-3.1..3.1))).collect();
            let u = v.scale_rows(&d1).scale_cols(&d2);
            let f = mode_fidelity(&u, &v, GaugeOpt::On).unwrap();
            assert!(f > 1.0 - 1e-9, "f = {f}");
            // and gauge invariance of the optimized value against any input
            let w = ModeUnitary::random(4, &mut rng);
            let f1 = mode_fidelity(&w, &v, GaugeOpt::On).unwrap();
            let f2 = mode_fidelity(&w.scale_rows(&d1).scale_cols(&d2), &v, GaugeOpt::On).unwrap();
            assert!((f1 - f2).abs() < 1e-9, "{f1} vs {f2}");
        }
    }

    #[test]
    fn ideal_circuit_heralds_an_exact_cz() {
        let u = build_circuit(&CircuitParams::ideal());
        let state = jamiolkowski_state(&u).unwrap();
        assert!((state.herald_prob() - HERALD_IDEAL).abs() < 1e-10);
        assert!((process_fidelity(&state) - 1.0).abs() < 1e-10);
        // Sign flip on the |11> branch only.
        let a00 = state.amplitude((0, 0), (0, 0));
        let a11 = state.amplitude((1, 1), (1, 1));
        assert!((a00.re - 0.5).abs() < 1e-10 && a00.im.abs() < 1e-12);
        assert!((a11.re + 0.5).abs() < 1e-10 && a11.im.abs() < 1e-12);
        for fict in [(0, 1), (1, 0)] {
            let a = state.amplitude(fict, fict);
            assert!((a - a00).norm() < 1e-10);
        }
    }

    #[test]
    fn rho_is_a_valid_density_operator() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let p = CircuitParams::new(
                [
                    rng.gen_range(0.2..1.4),
                    rng.gen_range(0.2..1.4),
                    rng.gen_range(0.2..1.4),
                    rng.gen_range(0.2..1.4),
                ],
                rng.gen_range(-3.0..3.0),
            );
            let state = jamiolkowski_state(&build_circuit(&p)).unwrap();
            assert!((state.trace() - 1.0).abs() < 1e-10);
            assert!(state.max_hermiticity_violation() < 1e-12);
            assert!(state.min_eigenvalue() > -1e-10);
            assert!(state.herald_prob() >= 0.0 && state.herald_prob() <= 1.0);
        }
    }

    #[test]
    fn perturbed_splitter_populates_double_occupancy() {
        let mut p = CircuitParams::ideal();
        p.theta[3] += 0.3;
        let state = jamiolkowski_state(&build_circuit(&p)).unwrap();
        let w20 = state.amplitude((2, 0), (1, 1)).norm_sqr();
        let w02 = state.amplitude((0, 2), (1, 1)).norm_sqr();
        assert!(w20 > 1e-6 && w02 > 1e-6, "w20={w20} w02={w02}");
        assert!(process_fidelity(&state) < 1.0);
    }

    #[test]
    fn process_fidelity_drops_under_each_deviation() {
        for i in 0..5 {
            let mut d = [0.0f64; 4];
            let mut dphi = 0.0;
            if i < 4 {
                d[i] = 0.1;
            } else {
                dphi = 0.1;
            }
            let p = CircuitParams::from_deviations(d, dphi);
            let f = process_fidelity(&jamiolkowski_state(&build_circuit(&p)).unwrap());
            assert!(f < 1.0 - 1e-6, "deviation {i} left F_p = {f}");
        }
    }

    #[test]
    fn ancilla_swap_leaves_the_heralded_process_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..25 {
            let u = ModeUnitary::random(4, &mut rng);
            let f0 = process_fidelity(&jamiolkowski_state(&u).unwrap());
            let f1 = process_fidelity(&jamiolkowski_state(&swap_ancilla_rows(&u).unwrap()).unwrap());
            assert!((f0 - f1).abs() < 1e-10);
        }
    }

    #[test]
    fn basis_probabilities_at_the_design_point() {
        let u = build_circuit(&CircuitParams::ideal());
        let mut amps = Vec::new();
        for basis in FICT_KETS {
            let p = basis_success_probability(&u, basis).unwrap();
            assert!((p - HERALD_IDEAL).abs() < 1e-10, "basis {basis:?}: {p}");
            amps.push(basis_amplitude(&u, basis).unwrap());
        }
        // |11> amplitude is sign-flipped relative to |00>.
        assert!((amps[3] / amps[0] + Complex64::new(1.0, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn identity_circuit_passes_photons_straight_through() {
        let u = ModeUnitary::identity(4);
        for basis in FICT_KETS {
            let p = basis_success_probability(&u, basis).unwrap();
            assert!((p - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rate_estimates_reproduce_the_loss_budget() {
        let r = rate_estimate(1.8, 0.2).unwrap();
        assert!(r.per_shot_success < 0.015);
        assert!((r.per_shot_success - 0.014114523836764793).abs() < 1e-12);
        assert!(r.wall_rate_hz < 3e-3);
        let lossless = rate_estimate(0.0, 1.0).unwrap();
        assert!((lossless.per_shot_success - HERALD_IDEAL).abs() < 1e-15);
        assert!(rate_estimate(-0.1, 1.0).is_err());
    }
}
