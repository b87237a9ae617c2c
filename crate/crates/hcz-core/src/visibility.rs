//! Two-photon quantum-interference visibilities: closed-form predictions for
//! every input/output pair combination, coincidence-dip curve modeling and
//! fitting, and recovery of a unitary from a measured visibility table.
//!
//! Signed convention: normalizing the contrast by the larger of the
//! quantum/distinguishable rates maps coalescent dips to V in (0, 1] and
//! anti-coalescent peaks to V in [-1, 0).

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{mesh_unitary, MESH_PARAMS};
use crate::metrics::{mode_fidelity, GaugeOpt};
use crate::optimize::{multistart, nelder_mead, NelderMeadConfig};
use crate::unitary::ModeUnitary;

/// Unordered index pairs (j < k) over four modes, lexicographic.
pub const MODE_PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

/// One input-pair/output-pair interference entry.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct VisibilityEntry {
    pub input: (usize, usize),
    pub output: (usize, usize),
    /// Coincidence rate for indistinguishable photons.
    pub quantum: f64,
    /// Coincidence rate for distinguishable photons.
    pub distinguishable: f64,
    /// Signed visibility; `None` when both rates vanish (no photons can
    /// reach this output pair, so no interference is defined).
    pub visibility: Option<f64>,
}

impl VisibilityEntry {
    /// The visibility with undefined (zero-over-zero) entries read as "no
    /// interference".
    pub fn visibility_or_zero(&self) -> f64 {
        self.visibility.unwrap_or(0.0)
    }
}

/// Closed-form two-photon interference for photons entering modes (j, k) and
/// exiting modes (p, q): `Q = |U_pj U_qk + U_pk U_qj|^2`,
/// `D = |U_pj U_qk|^2 + |U_pk U_qj|^2`.
pub fn pair_visibility(
    u: &ModeUnitary,
    j: usize,
    k: usize,
    p: usize,
    q: usize,
) -> Result<VisibilityEntry> {
    let n = u.dim();
    if j == k || p == q {
        return Err(Error::contract(format!(
            "pair visibility needs distinct modes, got inputs ({j},{k}) outputs ({p},{q})"
        )));
    }
    if [j, k, p, q].iter().any(|&m| m >= n) {
        return Err(Error::contract(format!("mode index out of range for a {n}-mode map")));
    }
    let path_a = u.entry(p, j) * u.entry(q, k);
    let path_b = u.entry(p, k) * u.entry(q, j);
    let quantum = (path_a + path_b).norm_sqr();
    let distinguishable = path_a.norm_sqr() + path_b.norm_sqr();
    let visibility = if quantum == 0.0 && distinguishable == 0.0 {
        None
    } else if distinguishable >= quantum {
        Some((distinguishable - quantum) / distinguishable)
    } else {
        Some((distinguishable - quantum) / quantum)
    };
    Ok(VisibilityEntry { input: (j, k), output: (p, q), quantum, distinguishable, visibility })
}

/// All 36 unordered input-pair x output-pair combinations, lexicographic.
pub fn visibility_table(u: &ModeUnitary) -> Result<Vec<VisibilityEntry>> {
    let mut table = Vec::with_capacity(36);
    for &(j, k) in &MODE_PAIRS {
        for &(p, q) in &MODE_PAIRS {
            table.push(pair_visibility(u, j, k, p, q)?);
        }
    }
    Ok(table)
}

/// Wavepacket-overlap profile of the coincidence feature: Gaussian envelope
/// times a spectral-filter sinc.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct DipProfile {
    /// Gaussian 1/e half-width of the wavepacket overlap (delay units).
    pub sigma_tau: f64,
    /// Sinc scale of the filter contribution.
    pub sinc_scale: f64,
}

impl Default for DipProfile {
    fn default() -> Self {
        DipProfile { sigma_tau: 1.0, sinc_scale: 3.0 }
    }
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        x.sin() / x
    }
}

fn dip_model(tau: f64, q: f64, d: f64, profile: &DipProfile) -> f64 {
    let g = (-tau * tau / (2.0 * profile.sigma_tau * profile.sigma_tau)).exp()
        * sinc(tau / profile.sinc_scale);
    d + (q - d) * g * g
}

/// A coincidence-versus-delay curve with its fitted extremes.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DipCurve {
    pub delays: Vec<f64>,
    pub counts: Vec<f64>,
    pub c_max: f64,
    pub c_min: f64,
    pub profile: DipProfile,
}

/// Model coincidence curve `C(tau) = D + (Q - D) g(tau)^2` for one entry:
/// C(0) = Q, baseline D at large delay.
pub fn coincidence_curve(
    entry: &VisibilityEntry,
    profile: &DipProfile,
    delays: &[f64],
) -> Result<DipCurve> {
    if profile.sigma_tau <= 0.0 {
        return Err(Error::contract("dip profile needs sigma_tau > 0"));
    }
    let counts: Vec<f64> = delays
        .iter()
        .map(|&tau| dip_model(tau, entry.quantum, entry.distinguishable, profile))
        .collect();
    let (q, d) = (entry.quantum, entry.distinguishable);
    Ok(DipCurve {
        delays: delays.to_vec(),
        counts,
        c_max: q.max(d),
        c_min: q.min(d),
        profile: *profile,
    })
}

/// Result of fitting a noisy coincidence curve.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DipFit {
    pub quantum: f64,
    pub distinguishable: f64,
    pub c_max: f64,
    pub c_min: f64,
    pub visibility: f64,
    pub profile: DipProfile,
    /// Poisson-weighted chi-square per point at the optimum.
    pub chi2_per_point: f64,
}

/// Weighted least squares over (D, Q, sigma_tau, T) with Poissonian weights
/// (variance = max(counts, 1)); multistart guards against the mirrored
/// profile minima.
pub fn fit_dip(delays: &[f64], counts: &[f64], starts: usize, seed: u64) -> Result<DipFit> {
    if delays.len() != counts.len() {
        return Err(Error::contract("delay and count arrays differ in length"));
    }
    if delays.len() < 20 {
        return Err(Error::contract(format!(
            "dip fitting needs at least 20 delay points, got {}",
            delays.len()
        )));
    }
    let span = delays.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - delays.iter().cloned().fold(f64::INFINITY, f64::min);
    let weights: Vec<f64> = counts.iter().map(|&c| 1.0 / c.max(1.0)).collect();
    let baseline = counts.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let center = counts
        .iter()
        .zip(delays)
        .min_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap())
        .map(|(&c, _)| c)
        .unwrap_or(0.0);

    let mut objective = |x: &[f64]| {
        let (d, q, sigma, scale) = (x[0], x[1], x[2].abs().max(1e-6), x[3].abs().max(1e-6));
        let profile = DipProfile { sigma_tau: sigma, sinc_scale: scale };
        delays
            .iter()
            .zip(counts)
            .zip(&weights)
            .map(|((&tau, &c), &w)| {
                let m = dip_model(tau, q, d, &profile);
                w * (m - c) * (m - c)
            })
            .sum::<f64>()
    };

    let base = [baseline, center, span / 8.0, span / 3.0];
    let hi = baseline.max(1.0);
    let bounds = [
        (0.0, 2.0 * hi),
        (0.0, 2.0 * hi),
        (span / 40.0, span),
        (span / 40.0, 2.0 * span),
    ];
    let cfg = NelderMeadConfig { max_iters: 6000, ftol: 1e-18, xtol: 1e-12, initial_step: 0.2 };
    let (x, chi2) = multistart(&mut objective, &base, &bounds, starts.max(1), seed, &cfg);
    let n_params = 4.0;
    let dof = (delays.len() as f64 - n_params).max(1.0);
    // a wildly unconverged fit leaves chi2 far above the Poisson expectation
    if !chi2.is_finite() || chi2 / dof > 50.0 {
        return Err(Error::FitFailure(format!(
            "dip fit did not converge: chi2/dof = {:.2} over {} points",
            chi2 / dof,
            delays.len()
        )));
    }
    let (d, q) = (x[0], x[1]);
    let (c_max, c_min) = (d.max(q), d.min(q));
    let visibility = if c_max <= 0.0 {
        0.0
    } else if d >= q {
        (d - q) / d
    } else {
        (d - q) / q
    };
    Ok(DipFit {
        quantum: q,
        distinguishable: d,
        c_max,
        c_min,
        visibility,
        profile: DipProfile { sigma_tau: x[2].abs(), sinc_scale: x[3].abs() },
        chi2_per_point: chi2 / delays.len() as f64,
    })
}

/// Root-mean-square difference between a mesh unitary's visibility table and
/// a measured one, treating undefined entries as zero.
fn table_rms(u: &ModeUnitary, measured: &[f64]) -> f64 {
    let table = visibility_table(u).expect("mesh unitary is 4x4");
    let ss: f64 = table
        .iter()
        .zip(measured)
        .map(|(e, &m)| (e.visibility_or_zero() - m).powi(2))
        .sum();
    (ss / measured.len() as f64).sqrt()
}

/// Find the four-mode unitary whose visibility table best matches `v_meas`
/// (36 values in table order) in the RMS sense.
///
/// Visibility tables are invariant under complex conjugation of the unitary,
/// so the data determine the answer only up to that branch; when `reference`
/// is given, the branch with the higher gauge-optimized mode fidelity to it
/// is returned.
pub fn fit_unitary_to_visibilities(
    v_meas: &[f64],
    starts: usize,
    seed: u64,
    reference: Option<&ModeUnitary>,
) -> Result<(ModeUnitary, f64)> {
    if v_meas.len() != 36 {
        return Err(Error::contract(format!("expected 36 visibilities, got {}", v_meas.len())));
    }
    if v_meas.iter().any(|v| !(-1.0..=1.0).contains(v)) {
        return Err(Error::contract("visibilities must lie in [-1, 1]"));
    }
    let cfg = NelderMeadConfig { max_iters: 8000, ftol: 1e-18, xtol: 1e-11, initial_step: 0.25 };
    let results: Vec<(Vec<f64>, f64)> = (0..starts.max(1) as u64)
        .into_par_iter()
        .map(|s| {
            let mut rng = crate::stream_rng(seed, s);
            let start: Vec<f64> = (0..MESH_PARAMS)
                .map(|i| {
                    if i % 2 == 0 {
                        rng.gen_range(0.0..std::f64::consts::FRAC_PI_2)
                    } else {
                        rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI)
                    }
                })
                .collect();
            let mut objective = |x: &[f64]| table_rms(&mesh_unitary(x), v_meas);
            nelder_mead(&mut objective, &start, &cfg)
        })
        .collect();
    let best_rms = results.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    // polish the winner
    let winner = results.iter().find(|r| r.1 == best_rms).expect("non-empty");
    let mut objective = |x: &[f64]| table_rms(&mesh_unitary(x), v_meas);
    let polish_cfg = NelderMeadConfig { initial_step: 1e-3, ..cfg };
    let (params, rms) = nelder_mead(&mut objective, &winner.0, &polish_cfg);
    let fitted = mesh_unitary(&params);

    let chosen = match reference {
        None => fitted,
        Some(r) => {
            // Among near-optimal candidates (both conjugation branches of
            // every start), pick the one closest to the reference.
            let mut candidates: Vec<ModeUnitary> = vec![fitted.clone(), fitted.conjugate()];
            for (p, v) in &results {
                if *v <= rms + 1e-6 {
                    let u = mesh_unitary(p);
                    candidates.push(u.conjugate());
                    candidates.push(u);
                }
            }
            candidates
                .into_iter()
                .max_by(|a, b| {
                    let fa = mode_fidelity(a, r, GaugeOpt::On).unwrap_or(0.0);
                    let fb = mode_fidelity(b, r, GaugeOpt::On).unwrap_or(0.0);
                    fa.partial_cmp(&fb).unwrap_or(std::cmp::Ordering::Equal)
                })
                .expect("non-empty candidate set")
        }
    };
    let final_rms = table_rms(&chosen, v_meas);
    Ok((chosen, final_rms))
}

/// Elementwise mean and sample standard deviation of `a - b`.
pub fn residual_stats(a: &[f64], b: &[f64]) -> Result<(f64, f64)> {
    if a.len() != b.len() {
        return Err(Error::contract(format!(
            "residual tables differ in length: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let n = a.len() as f64;
    let mean = a.iter().zip(b).map(|(x, y)| x - y).sum::<f64>() / n;
    let var = a.iter().zip(b).map(|(x, y)| (x - y - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok((mean, var.sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{beamsplitter, build_circuit, CircuitParams};
    use crate::fock::{evolve, FockState, MultiPhotonState};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn balanced_splitter_has_unit_visibility() {
        let u = beamsplitter(std::f64::consts::FRAC_PI_4);
        let e = pair_visibility(&u, 0, 1, 0, 1).unwrap();
        assert!(e.quantum.abs() < 1e-12);
        assert!((e.visibility.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identity_map_shows_no_interference() {
        let u = ModeUnitary::identity(4);
        for e in visibility_table(&u).unwrap() {
            assert!((e.quantum - e.distinguishable).abs() < 1e-15);
            assert!(e.visibility_or_zero().abs() < 1e-15);
        }
    }

    #[test]
    fn degenerate_indices_are_rejected() {
        let u = ModeUnitary::identity(4);
        assert!(pair_visibility(&u, 1, 1, 0, 1).is_err());
        assert!(pair_visibility(&u, 0, 1, 2, 2).is_err());
    }

    #[test]
    fn table_has_36_entries_and_ignores_global_phase() {
        let u = build_circuit(&CircuitParams::ideal());
        let t = visibility_table(&u).unwrap();
        assert_eq!(t.len(), 36);
        let phased = u.scale_rows(&vec![num_complex::Complex64::from_polar(1.0, 0.7); 4]);
        let t2 = visibility_table(&phased).unwrap();
        for (a, b) in t.iter().zip(&t2) {
            assert!((a.visibility_or_zero() - b.visibility_or_zero()).abs() < 1e-12);
        }
    }

    #[test]
    fn quantum_rate_matches_two_photon_evolution() {
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        for _ in 0..50 {
            let u = ModeUnitary::random(4, &mut rng);
            for e in visibility_table(&u).unwrap() {
                let mut occ_in = [0u32; 4];
                occ_in[e.input.0] += 1;
                occ_in[e.input.1] += 1;
                let mut occ_out = [0u32; 4];
                occ_out[e.output.0] += 1;
                occ_out[e.output.1] += 1;
                let out = evolve(&u, &MultiPhotonState::ket(FockState::from(occ_in))).unwrap();
                let q_oracle = out.amplitude(&FockState::from(occ_out)).norm_sqr();
                assert!((q_oracle - e.quantum).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn visibility_bounds_and_dip_iff_no_quantum_rate() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..50 {
            let u = ModeUnitary::random(4, &mut rng);
            for e in visibility_table(&u).unwrap() {
                if let Some(v) = e.visibility {
                    assert!((-1.0..=1.0).contains(&v));
                    if (v - 1.0).abs() < 1e-14 {
                        assert!(e.quantum < 1e-14 && e.distinguishable > 0.0);
                    }
                    if e.quantum < 1e-14 && e.distinguishable > 1e-14 {
                        assert!((v - 1.0).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn curve_hits_quantum_rate_at_zero_delay_and_baseline_far_out() {
        let u = build_circuit(&CircuitParams::ideal());
        let e = pair_visibility(&u, 0, 1, 0, 1).unwrap();
        let profile = DipProfile::default();
        let delays: Vec<f64> = (-40..=40).map(|i| i as f64 * 0.25).collect();
        let curve = coincidence_curve(&e, &profile, &delays).unwrap();
        let at_zero = curve.counts[delays.iter().position(|&t| t == 0.0).unwrap()];
        assert!((at_zero - e.quantum).abs() < 1e-12);
        assert!((curve.counts[0] - e.distinguishable).abs() < 1e-6);
        // a V = 1 entry dips to zero coincidences
        let hom = pair_visibility(&beamsplitter(std::f64::consts::FRAC_PI_4), 0, 1, 0, 1).unwrap();
        let c0 = coincidence_curve(&hom, &profile, &[0.0]).unwrap();
        assert!(c0.counts[0].abs() < 1e-12);
    }

    #[test]
    fn noiseless_dip_fit_inverts_the_curve_model() {
        let profile = DipProfile { sigma_tau: 1.3, sinc_scale: 2.6 };
        let entry = VisibilityEntry {
            input: (0, 1),
            output: (0, 1),
            quantum: 180.0,
            distinguishable: 1000.0,
            visibility: Some(0.82),
        };
        let delays: Vec<f64> = (-30..=30).map(|i| i as f64 * 0.2).collect();
        let curve = coincidence_curve(&entry, &profile, &delays).unwrap();
        let fit = fit_dip(&curve.delays, &curve.counts, 12, 5).unwrap();
        assert!((fit.quantum - 180.0).abs() < 1e-6, "q = {}", fit.quantum);
        assert!((fit.distinguishable - 1000.0).abs() < 1e-6);
        assert!((fit.profile.sigma_tau - 1.3).abs() < 1e-6);
        assert!((fit.profile.sinc_scale - 2.6).abs() < 1e-6);
        assert!((fit.visibility - 0.82).abs() < 1e-9);
    }

    #[test]
    fn flat_curve_fits_to_zero_visibility() {
        let delays: Vec<f64> = (-15..=15).map(|i| i as f64 * 0.3).collect();
        let counts = vec![500.0; delays.len()];
        let fit = fit_dip(&delays, &counts, 8, 2).unwrap();
        assert!(fit.visibility.abs() < 1e-6);
    }

    #[test]
    fn poisson_noise_keeps_visibility_within_tolerance() {
        use rand_distr::{Distribution, Poisson};
        let profile = DipProfile { sigma_tau: 1.0, sinc_scale: 3.0 };
        let entry = VisibilityEntry {
            input: (0, 1),
            output: (0, 1),
            quantum: 150.0,
            distinguishable: 1000.0,
            visibility: Some(0.85),
        };
        let delays: Vec<f64> = (-25..=25).map(|i| i as f64 * 0.25).collect();
        let clean = coincidence_curve(&entry, &profile, &delays).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let mut worst: f64 = 0.0;
        for _ in 0..200 {
            let noisy: Vec<f64> = clean
                .counts
                .iter()
                .map(|&c| {
                    if c < 1e-9 {
                        0.0
                    } else {
                        Poisson::new(c).unwrap().sample(&mut rng)
                    }
                })
                .collect();
            let fit = fit_dip(&delays, &noisy, 6, 3).unwrap();
            worst = worst.max((fit.visibility - 0.85).abs());
        }
        assert!(worst < 0.03, "worst visibility error {worst}");
    }

    #[test]
    fn residual_stats_basics() {
        let a = [1.0, 2.0, 3.0];
        let (m, s) = residual_stats(&a, &a).unwrap();
        assert!(m.abs() < 1e-15 && s.abs() < 1e-15);
        let b = [0.9, 1.9, 2.9];
        let (m, s) = residual_stats(&a, &b).unwrap();
        assert!((m - 0.1).abs() < 1e-12 && s.abs() < 1e-12);
        assert!(residual_stats(&a, &[1.0]).is_err());
    }

    #[test]
    fn conjugate_unitary_shares_the_visibility_table() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let u = ModeUnitary::random(4, &mut rng);
        let t = visibility_table(&u).unwrap();
        let tc = visibility_table(&u.conjugate()).unwrap();
        for (a, b) in t.iter().zip(&tc) {
            assert!((a.visibility_or_zero() - b.visibility_or_zero()).abs() < 1e-14);
        }
    }
}
