//! Coherent device characterization: simulate noisy single-input intensity
//! tables and two-input fringe time series from a ground-truth map, extract
//! entry moduli and phases (DFT method), assemble the measured matrix,
//! diagnose unitarity, fit circuit parameters, and propagate measurement
//! uncertainty into the fidelity metrics.

use ndarray::Array2;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::circuit::{build_circuit, CircuitParams};
use crate::error::{Error, Result};
use crate::metrics::{
    jamiolkowski_state, mode_fidelity, process_fidelity, GaugeOpt,
};
use crate::optimize::{multistart, NelderMeadConfig};
use crate::stream_rng;
use crate::unitary::ModeUnitary;
use crate::visibility::MODE_PAIRS;

/// Fringe acquisition defaults: samples per sweep, full periods swept.
pub const FRINGE_SAMPLES: usize = 4096;
pub const FRINGE_PERIODS: f64 = 8.0;
/// Entries smaller than this cannot anchor a phase.
const MIN_MODULUS: f64 = 1e-3;
/// Expected fringe amplitudes below this are treated as signal-free.
const SIGNAL_FLOOR: f64 = 1e-5;

/// Noise model for the synthetic measurement.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct NoiseSpec {
    /// Multiplicative intensity noise per sample, N(0, sigma).
    pub intensity_sigma: f64,
    /// Fractional jitter of the phase-sweep velocity per step (random walk
    /// in accumulated phase).
    pub velocity_jitter: f64,
    /// Repeated acquisitions used for trial-to-trial uncertainty estimates.
    pub trials: usize,
}

impl NoiseSpec {
    pub fn none() -> Self {
        NoiseSpec { intensity_sigma: 0.0, velocity_jitter: 0.0, trials: 1 }
    }
}

impl Default for NoiseSpec {
    fn default() -> Self {
        NoiseSpec { intensity_sigma: 0.02, velocity_jitter: 0.01, trials: 10 }
    }
}

/// One two-input interference sweep: intensity versus time at every output
/// while the phase of `input_b` is ramped.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FringeSet {
    pub input_a: usize,
    pub input_b: usize,
    pub sample_period: f64,
    /// `series[k]` is output k's intensity trace.
    pub series: Vec<Vec<f64>>,
}

/// A complete synthetic (or ingested) characterization data set.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub schema_version: u32,
    pub n_modes: usize,
    /// Column-normalized mean output intensity fractions, `[output][input]`.
    pub moduli_sq: Vec<Vec<f64>>,
    /// Standard error of each intensity fraction over trials.
    pub moduli_sq_sigma: Vec<Vec<f64>>,
    /// One stored sweep per unordered input pair.
    pub fringes: Vec<FringeSet>,
    /// Standard error of each assembled entry phase over trials.
    pub phase_sigma: Vec<Vec<f64>>,
    pub noise: NoiseSpec,
    pub fringe_samples: usize,
    pub fringe_periods: f64,
    pub seed: u64,
}

impl MeasurementRecord {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("record serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::contract(format!("bad record JSON: {e}")))
    }

    fn missing_pairs(&self) -> Vec<(usize, usize)> {
        MODE_PAIRS
            .iter()
            .filter(|&&(a, b)| {
                !self.fringes.iter().any(|f| (f.input_a, f.input_b) == (a, b))
            })
            .copied()
            .collect()
    }
}

/// Unitarity diagnostic `D_jk = |(U U+ - I)_jk|`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct UnitarityDiagnostic {
    pub d: Vec<Vec<f64>>,
    pub max: f64,
    pub mean: f64,
}

impl UnitarityDiagnostic {
    pub fn of(u: &ModeUnitary) -> Self {
        let n = u.dim();
        let mut d = vec![vec![0.0; n]; n];
        let mut max = 0.0f64;
        let mut sum = 0.0f64;
        for j in 0..n {
            for k in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for m in 0..n {
                    acc += u.entry(j, m) * u.entry(k, m).conj();
                }
                if j == k {
                    acc -= Complex64::new(1.0, 0.0);
                }
                let v = acc.norm();
                d[j][k] = v;
                max = max.max(v);
                sum += v;
            }
        }
        UnitarityDiagnostic { d, max, mean: sum / (n * n) as f64 }
    }
}

fn wrap(x: f64) -> f64 {
    x.sin().atan2(x.cos())
}

fn circular_mean(values: &[f64]) -> f64 {
    let s: f64 = values.iter().map(|v| v.sin()).sum();
    let c: f64 = values.iter().map(|v| v.cos()).sum();
    s.atan2(c)
}

/// Simulate the coherent characterization of `u_true`: per-input intensity
/// tables averaged over `noise.trials` acquisitions, and one phase-swept
/// fringe set per input pair, with trial-to-trial uncertainty tables.
pub fn simulate_measurement(u_true: &ModeUnitary, noise: &NoiseSpec, seed: u64) -> Result<MeasurementRecord> {
    let n = u_true.dim();
    if n != 4 {
        return Err(Error::contract(format!("characterization expects a 4x4 map, got {n}x{n}")));
    }
    let trials = noise.trials.max(1);
    let eps = |rng: &mut rand_chacha::ChaCha8Rng, sigma: f64| -> f64 {
        if sigma > 0.0 {
            Normal::new(0.0, sigma).unwrap().sample(rng)
        } else {
            0.0
        }
    };

    // Intensities: per trial, per input column, multiplicative noise then
    // column normalization (absorbing input-coupling variation).
    let mut rng = stream_rng(seed, 0);
    let mut sums = vec![vec![0.0f64; n]; n];
    let mut sq_sums = vec![vec![0.0f64; n]; n];
    for _ in 0..trials {
        for j in 0..n {
            let mut col: Vec<f64> = (0..n)
                .map(|k| {
                    (u_true.entry(k, j).norm_sqr() * (1.0 + eps(&mut rng, noise.intensity_sigma)))
                        .max(0.0)
                })
                .collect();
            let total: f64 = col.iter().sum();
            if total > 0.0 {
                for v in col.iter_mut() {
                    *v /= total;
                }
            }
            for k in 0..n {
                sums[k][j] += col[k];
                sq_sums[k][j] += col[k] * col[k];
            }
        }
    }
    let mut moduli_sq = vec![vec![0.0f64; n]; n];
    let mut moduli_sq_sigma = vec![vec![0.0f64; n]; n];
    for k in 0..n {
        for j in 0..n {
            let mean = sums[k][j] / trials as f64;
            moduli_sq[k][j] = mean;
            if trials > 1 {
                let var = (sq_sums[k][j] / trials as f64 - mean * mean).max(0.0);
                moduli_sq_sigma[k][j] = (var / (trials - 1) as f64).sqrt();
            }
        }
    }
    // renormalize the mean columns exactly
    for j in 0..n {
        let total: f64 = (0..n).map(|k| moduli_sq[k][j]).sum();
        if total > 0.0 {
            for k in 0..n {
                moduli_sq[k][j] /= total;
            }
        }
    }

    // Fringes: sweep the phase of input_b against input_a over
    // FRINGE_PERIODS full periods; store trial 0, estimate per-entry phase
    // scatter from all trials.
    let n_samples = FRINGE_SAMPLES;
    let dphi = 2.0 * std::f64::consts::PI * FRINGE_PERIODS / n_samples as f64;
    let mut fringes = Vec::with_capacity(MODE_PAIRS.len());
    let mut phase_trials: Vec<Vec<Vec<f64>>> = vec![vec![Vec::new(); n]; n];
    for (pi, &(ja, jb)) in MODE_PAIRS.iter().enumerate() {
        let mut stored: Option<FringeSet> = None;
        for t in 0..trials {
            let mut rng = stream_rng(seed, 1 + (pi * trials + t) as u64);
            let start: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let mut series = vec![Vec::with_capacity(n_samples); n];
            let mut phi = start;
            for _ in 0..n_samples {
                let drive = Complex64::from_polar(1.0, phi);
                for (k, trace) in series.iter_mut().enumerate() {
                    let field = u_true.entry(k, ja) + u_true.entry(k, jb) * drive;
                    let i = field.norm_sqr() * (1.0 + eps(&mut rng, noise.intensity_sigma));
                    trace.push(i.max(0.0));
                }
                phi += dphi * (1.0 + eps(&mut rng, noise.velocity_jitter));
            }
            let set = FringeSet { input_a: ja, input_b: jb, sample_period: 1.0, series };
            // accumulate per-trial assembled phases for the reference pairs
            if ja == 0 {
                if let Ok(xs) = fringe_phases(&set, &moduli_sq) {
                    if let Some(x0) = xs[0] {
                        for k in 1..n {
                            if let Some(xk) = xs[k] {
                                phase_trials[k][jb].push(wrap(xk - x0));
                            }
                        }
                    }
                }
            }
            if t == 0 {
                stored = Some(set);
            }
        }
        fringes.push(stored.expect("at least one trial"));
    }
    let mut phase_sigma = vec![vec![0.0f64; n]; n];
    for k in 0..n {
        for j in 0..n {
            let obs = &phase_trials[k][j];
            if obs.len() > 1 {
                let mean = circular_mean(obs);
                let var = obs.iter().map(|&v| wrap(v - mean).powi(2)).sum::<f64>()
                    / (obs.len() - 1) as f64;
                phase_sigma[k][j] = (var / obs.len() as f64).sqrt();
            }
        }
    }

    Ok(MeasurementRecord {
        schema_version: 1,
        n_modes: n,
        moduli_sq,
        moduli_sq_sigma,
        fringes,
        phase_sigma,
        noise: *noise,
        fringe_samples: n_samples,
        fringe_periods: FRINGE_PERIODS,
        seed,
    })
}

/// Hann-windowed DFT phase of the dominant non-DC bin of one trace, or
/// `None` for a signal-free trace.
fn trace_phase(
    trace: &[f64],
    expected_amp: f64,
    planner: &mut FftPlanner<f64>,
) -> Result<Option<f64>> {
    if expected_amp < SIGNAL_FLOOR {
        return Ok(None);
    }
    let n = trace.len();
    let mut buf: Vec<Complex64> = trace
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let w = 0.5 - 0.5 * (std::f64::consts::TAU * i as f64 / n as f64).cos();
            Complex64::new(x * w, 0.0)
        })
        .collect();
    planner.plan_fft_forward(n).process(&mut buf);
    let half = n / 2;
    let mut dominant = 1usize;
    for b in 2..half {
        if buf[b].norm() > buf[dominant].norm() {
            dominant = b;
        }
    }
    // Ambiguity check: a second spectral feature within 3 dB, outside the
    // window main lobe, means the sweep cannot be trusted.
    let dom_mag = buf[dominant].norm();
    for b in 1..half {
        if (b as isize - dominant as isize).unsigned_abs() > 3
            && buf[b].norm() > dom_mag / 10f64.powf(3.0 / 20.0)
        {
            return Err(Error::DegradedSignal(format!(
                "fringe bins {dominant} and {b} within 3 dB"
            )));
        }
    }
    Ok(Some(buf[dominant].arg()))
}

/// Per-output fringe phases of one sweep; entries are `None` where the
/// moduli table says no interference signal can exist.
fn fringe_phases(set: &FringeSet, moduli_sq: &[Vec<f64>]) -> Result<Vec<Option<f64>>> {
    let mut planner = FftPlanner::new();
    set.series
        .iter()
        .enumerate()
        .map(|(k, trace)| {
            let amp =
                2.0 * (moduli_sq[k][set.input_a] * moduli_sq[k][set.input_b]).sqrt();
            trace_phase(trace, amp, &mut planner)
        })
        .collect()
}

/// Extract the 4x4 entry-phase matrix from the record's fringes, gauged so
/// the first row and first column are real (phase zero).
///
/// Assembly uses the sweeps that share input 0 as phase references; sweeps
/// between two non-reference inputs serve as redundancy. Phases of entries
/// that no fringe constrains (vanishing moduli) default to zero.
pub fn extract_phases_dft(record: &MeasurementRecord) -> Result<Array2<f64>> {
    let n = record.n_modes;
    let missing = record.missing_pairs();
    if !missing.is_empty() {
        return Err(Error::MissingData(missing));
    }
    for f in &record.fringes {
        if f.series.len() != n || f.series.iter().any(|s| s.len() < 64) {
            return Err(Error::contract("fringe series too short or wrong arity"));
        }
        let periods = record.fringe_periods;
        if periods < 5.0 {
            return Err(Error::contract(format!(
                "fringes must cover at least 5 full periods, got {periods}"
            )));
        }
    }
    let mut phases = Array2::<f64>::zeros((n, n));
    for set in &record.fringes {
        if set.input_a != 0 {
            continue;
        }
        let b = set.input_b;
        let xs = fringe_phases(set, &record.moduli_sq)?;
        let Some(x0) = xs[0] else {
            // Reference output dark for this column; any constrained phases
            // in the column are tied to an unobservable offset, so leave the
            // column in its own zero gauge.
            continue;
        };
        for k in 1..n {
            if let Some(xk) = xs[k] {
                phases[(k, b)] = wrap(xk - x0);
            }
        }
    }
    Ok(phases)
}

/// Consistency of the non-reference sweeps with an assembled phase matrix:
/// max wrapped deviation between measured and predicted fringe-phase
/// differences.
pub fn phase_consistency(record: &MeasurementRecord, phases: &Array2<f64>) -> Result<f64> {
    let mut worst = 0.0f64;
    for set in &record.fringes {
        if set.input_a == 0 {
            continue;
        }
        let (a, b) = (set.input_a, set.input_b);
        let xs = fringe_phases(set, &record.moduli_sq)?;
        // differences against the first live output cancel the drive offset
        let reference = xs.iter().position(|x| x.is_some());
        let Some(r) = reference else { continue };
        let xr = xs[r].unwrap();
        let pr = phases[(r, b)] - phases[(r, a)];
        for (k, x) in xs.iter().enumerate() {
            if let Some(xk) = x {
                let measured = wrap(xk - xr);
                let predicted = wrap(phases[(k, b)] - phases[(k, a)] - pr);
                worst = worst.max(wrap(measured - predicted).abs());
            }
        }
    }
    Ok(worst)
}

/// Assemble the measured matrix from square-rooted normalized intensities
/// and DFT phases, first row/column gauged real non-negative, plus its
/// unitarity diagnostic.
pub fn reconstruct_unitary(record: &MeasurementRecord) -> Result<(ModeUnitary, UnitarityDiagnostic)> {
    let n = record.n_modes;
    let missing = record.missing_pairs();
    if !missing.is_empty() {
        return Err(Error::MissingData(missing));
    }
    let phases = extract_phases_dft(record)?;
    let mut entries = Array2::<Complex64>::zeros((n, n));
    for j in 0..n {
        let col_sum: f64 = (0..n).map(|k| record.moduli_sq[k][j]).sum();
        if col_sum <= 0.0 {
            return Err(Error::IllConditioned(format!("input {j} has no recorded intensity")));
        }
        for k in 0..n {
            let r = (record.moduli_sq[k][j] / col_sum).max(0.0).sqrt();
            entries[(k, j)] = Complex64::from_polar(r, phases[(k, j)]);
        }
    }
    let u = ModeUnitary::from_measured(entries, 0.25)?;
    let diag = UnitarityDiagnostic::of(&u);
    Ok((u, diag))
}

/// Result of the splitting-parameter fit.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FittedParams {
    pub params: CircuitParams,
    /// RMS per-entry modulus residual of the best fit.
    pub residual: f64,
    /// Set when the residual exceeds the model-mismatch threshold.
    pub model_mismatch: bool,
    pub phi_n: PhiNExtraction,
}

/// Residual threshold above which the matrix is flagged as outside the
/// circuit family.
pub const MODEL_MISMATCH_THRESHOLD: f64 = 0.05;

/// Mean, spread, and raw values of the net internal phase read from its four
/// matrix entries.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PhiNExtraction {
    pub mean: f64,
    pub std: f64,
    pub values: [f64; 4],
}

/// Canonical-structure phases of the circuit matrix at phi_N = 0 for
/// theta in (0, pi/2): every entry is one of {+1, -1, +i, -i} times a
/// positive modulus.
const STRUCTURE_PHASES: [[f64; 4]; 4] = {
    use std::f64::consts::FRAC_PI_2;
    use std::f64::consts::PI;
    [
        [PI, FRAC_PI_2, FRAC_PI_2, 0.0],
        [FRAC_PI_2, PI, 0.0, FRAC_PI_2],
        [-FRAC_PI_2, 0.0, 0.0, FRAC_PI_2],
        [0.0, -FRAC_PI_2, FRAC_PI_2, 0.0],
    ]
};

/// Entries carrying the net phase: rows {A, B} x columns {T, B}.
const PHI_N_ENTRIES: [(usize, usize); 4] = [(2, 1), (2, 3), (3, 1), (3, 3)];

fn is_phi_n_entry(k: usize, j: usize) -> bool {
    PHI_N_ENTRIES.contains(&(k, j))
}

/// Solve the external row/column phases aligning `u` with the canonical
/// structure, using only the twelve phi_N-free entries.
fn solve_external_phases(u: &ModeUnitary) -> Result<(Vec<f64>, Vec<f64>)> {
    for k in 0..4 {
        for j in 0..4 {
            if u.entry(k, j).norm() < MIN_MODULUS {
                return Err(Error::IllConditioned(format!(
                    "entry ({k},{j}) modulus {:.1e} below {MIN_MODULUS:.0e}",
                    u.entry(k, j).norm()
                )));
            }
        }
    }
    let delta = |k: usize, j: usize| wrap(u.entry(k, j).arg() - STRUCTURE_PHASES[k][j]);
    // Row C anchors the column phases, rows then average their residuals
    // over their phi_N-free columns.
    let mut col = vec![0.0f64; 4];
    for (j, c) in col.iter_mut().enumerate() {
        *c = delta(0, j);
    }
    let mut row = vec![0.0f64; 4];
    for (k, r) in row.iter_mut().enumerate().skip(1) {
        let obs: Vec<f64> = (0..4)
            .filter(|&j| !is_phi_n_entry(k, j))
            .map(|j| wrap(delta(k, j) - col[j]))
            .collect();
        *r = circular_mean(&obs);
    }
    Ok((row, col))
}

/// Read the net internal phase from its four entries: subtract the canonical
/// structure phases and the solved external phases, then take the circular
/// mean and the sample standard deviation of the four values.
pub fn extract_phi_n(u_meas: &ModeUnitary) -> Result<PhiNExtraction> {
    if u_meas.dim() != 4 {
        return Err(Error::contract("phi_N extraction expects a 4x4 map"));
    }
    let (row, col) = solve_external_phases(u_meas)?;
    let mut values = [0.0f64; 4];
    for (i, &(k, j)) in PHI_N_ENTRIES.iter().enumerate() {
        values[i] =
            wrap(u_meas.entry(k, j).arg() - STRUCTURE_PHASES[k][j] - row[k] - col[j]);
    }
    let mean = circular_mean(&values);
    let var =
        values.iter().map(|&v| wrap(v - mean).powi(2)).sum::<f64>() / (values.len() - 1) as f64;
    Ok(PhiNExtraction { mean, std: var.sqrt(), values })
}

/// Rotate a measured matrix into the canonical-family gauge so that
/// process-level quantities are well-defined on it.
pub fn align_to_model_gauge(u: &ModeUnitary) -> Result<ModeUnitary> {
    let (row, col) = solve_external_phases(u)?;
    let d1: Vec<Complex64> = row.iter().map(|&a| Complex64::from_polar(1.0, -a)).collect();
    let d2: Vec<Complex64> = col.iter().map(|&b| Complex64::from_polar(1.0, -b)).collect();
    Ok(u.scale_rows(&d1).scale_cols(&d2))
}

/// Fit the four splitting angles to a measured matrix's entry moduli by
/// multistart derivative-free least squares over [0, pi/2]^4, then read the
/// net phase from the aligned matrix.
pub fn fit_params(u_meas: &ModeUnitary) -> Result<FittedParams> {
    if u_meas.dim() != 4 {
        return Err(Error::contract("parameter fit expects a 4x4 map"));
    }
    let diag = UnitarityDiagnostic::of(u_meas);
    if diag.max >= 0.1 {
        return Err(Error::contract(format!(
            "matrix too far from unitary to fit (D max = {:.3})",
            diag.max
        )));
    }
    let target: Vec<f64> =
        (0..4).flat_map(|k| (0..4).map(move |j| (k, j))).map(|(k, j)| u_meas.entry(k, j).norm()).collect();
    // Moduli are invariant under theta -> -theta and theta -> pi - theta;
    // fold the search space instead of constraining the optimizer.
    let fold = |x: f64| {
        let t = x.rem_euclid(std::f64::consts::PI);
        if t > std::f64::consts::FRAC_PI_2 {
            std::f64::consts::PI - t
        } else {
            t
        }
    };
    let mut objective = |x: &[f64]| {
        let p = CircuitParams::new([fold(x[0]), fold(x[1]), fold(x[2]), fold(x[3])], 0.0);
        let m = build_circuit(&p);
        let mut ss = 0.0;
        for k in 0..4 {
            for j in 0..4 {
                let d = m.entry(k, j).norm() - target[4 * k + j];
                ss += d * d;
            }
        }
        ss
    };
    let ideal = CircuitParams::ideal();
    let bounds = [(0.0, std::f64::consts::FRAC_PI_2); 4];
    let cfg = NelderMeadConfig { max_iters: 6000, ftol: 1e-22, xtol: 1e-12, initial_step: 0.15 };
    let (x, ss) = multistart(&mut objective, &ideal.theta, &bounds, 16, 0x0f17_aa01, &cfg);
    let theta = [fold(x[0]), fold(x[1]), fold(x[2]), fold(x[3])];
    let residual = (ss / 16.0).sqrt();
    let phi_n = extract_phi_n(u_meas)?;
    Ok(FittedParams {
        params: CircuitParams::new(theta, phi_n.mean),
        residual,
        model_mismatch: residual > MODEL_MISMATCH_THRESHOLD,
        phi_n,
    })
}

/// Monte Carlo propagation of the record's moduli and phase uncertainties
/// into the two fidelity metrics.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct UncertaintyReport {
    pub sigma_f_mode: f64,
    pub sigma_f_process: f64,
    pub n_mc: usize,
}

pub fn propagate_uncertainty(
    record: &MeasurementRecord,
    n_mc: usize,
    seed: u64,
) -> Result<UncertaintyReport> {
    if n_mc < 2 {
        return Err(Error::contract("uncertainty propagation needs n_mc >= 2"));
    }
    let (base, _) = reconstruct_unitary(record)?;
    let phases = extract_phases_dft(record)?;
    let ideal = build_circuit(&CircuitParams::ideal());
    let n = record.n_modes;
    let mut fms = Vec::with_capacity(n_mc);
    let mut fps = Vec::with_capacity(n_mc);
    for i in 0..n_mc {
        let mut rng = stream_rng(seed, i as u64);
        let mut entries = Array2::<Complex64>::zeros((n, n));
        let mut cols = vec![vec![0.0f64; n]; n];
        for j in 0..n {
            for (k, col) in cols.iter_mut().enumerate() {
                let s = record.moduli_sq_sigma[k][j];
                let jitter = if s > 0.0 {
                    Normal::new(0.0, s).unwrap().sample(&mut rng)
                } else {
                    0.0
                };
                col[j] = (record.moduli_sq[k][j] + jitter).max(0.0);
            }
        }
        for j in 0..n {
            let total: f64 = (0..n).map(|k| cols[k][j]).sum();
            for k in 0..n {
                let r = if total > 0.0 { (cols[k][j] / total).sqrt() } else { 0.0 };
                let sp = record.phase_sigma[k][j];
                let dphi = if sp > 0.0 {
                    Normal::new(0.0, sp).unwrap().sample(&mut rng)
                } else {
                    0.0
                };
                entries[(k, j)] = Complex64::from_polar(r, phases[(k, j)] + dphi);
            }
        }
        let u = ModeUnitary::from_measured(entries, 0.25)?;
        fms.push(mode_fidelity(&u, &ideal, GaugeOpt::On)?);
        let aligned = align_to_model_gauge(&u).unwrap_or_else(|_| u.clone());
        fps.push(process_fidelity(&jamiolkowski_state(&aligned)?));
    }
    let _ = base;
    let std = |v: &[f64]| {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
    };
    Ok(UncertaintyReport { sigma_f_mode: std(&fms), sigma_f_process: std(&fps), n_mc })
}
