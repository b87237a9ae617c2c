//! Fabrication-tolerance analysis: single-parameter fidelity sweeps and
//! Monte Carlo fidelity distributions under Gaussian deviations.

use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{build_circuit, CircuitParams};
use crate::error::{Error, Result};
use crate::metrics::{jamiolkowski_state, mode_fidelity, process_fidelity, GaugeOpt};
use crate::stream_rng;

/// The five deviation parameters.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DeviationParam {
    Theta1,
    Theta2,
    Theta3,
    Theta4,
    PhiN,
}

impl DeviationParam {
    pub const ALL: [DeviationParam; 5] = [
        DeviationParam::Theta1,
        DeviationParam::Theta2,
        DeviationParam::Theta3,
        DeviationParam::Theta4,
        DeviationParam::PhiN,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            DeviationParam::Theta1 => "dtheta1",
            DeviationParam::Theta2 => "dtheta2",
            DeviationParam::Theta3 => "dtheta3",
            DeviationParam::Theta4 => "dtheta4",
            DeviationParam::PhiN => "dphi",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "dtheta1" | "theta1" => Ok(DeviationParam::Theta1),
            "dtheta2" | "theta2" => Ok(DeviationParam::Theta2),
            "dtheta3" | "theta3" => Ok(DeviationParam::Theta3),
            "dtheta4" | "theta4" => Ok(DeviationParam::Theta4),
            "dphi" | "phi_n" | "phin" => Ok(DeviationParam::PhiN),
            other => Err(Error::contract(format!("unknown deviation parameter '{other}'"))),
        }
    }
}

/// Gaussian deviation model for the Monte Carlo driver.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DeviationSpec {
    /// Standard deviation of each drawn parameter (radians).
    pub sigma: f64,
    pub n_samples: usize,
    pub seed: u64,
    /// Which parameters deviate; the rest stay at their design values.
    pub which: Vec<DeviationParam>,
}

impl DeviationSpec {
    pub fn all(sigma: f64, n_samples: usize, seed: u64) -> Self {
        DeviationSpec { sigma, n_samples, seed, which: DeviationParam::ALL.to_vec() }
    }

    fn validate(&self) -> Result<()> {
        if self.sigma < 0.0 {
            return Err(Error::contract("sigma must be non-negative"));
        }
        if self.n_samples == 0 {
            return Err(Error::contract("n_samples must be at least 1"));
        }
        Ok(())
    }
}

/// One Monte Carlo draw: the deviations applied and the two fidelities.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ToleranceSample {
    pub dtheta: [f64; 4],
    pub dphi: f64,
    pub f_mode: f64,
    pub f_process: f64,
}

/// Mean/std/min/max summary of one metric.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct MetricStats {
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

fn stats(values: impl Iterator<Item = f64> + Clone) -> MetricStats {
    let n = values.clone().count().max(1) as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.clone().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    MetricStats {
        mean,
        std: var.sqrt(),
        min: values.clone().fold(f64::INFINITY, f64::min),
        max: values.fold(f64::NEG_INFINITY, f64::max),
    }
}

/// Histogram over [lo, 1] with uniform bins.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
}

pub const HISTOGRAM_BINS: usize = 40;

fn histogram(values: impl Iterator<Item = f64> + Clone, bins: usize) -> Histogram {
    let lo = values.clone().fold(f64::INFINITY, f64::min).min(1.0);
    let hi = 1.0;
    let width = (hi - lo).max(f64::MIN_POSITIVE);
    let mut counts = vec![0u64; bins];
    for v in values {
        let mut b = ((v - lo) / width * bins as f64) as usize;
        if b >= bins {
            b = bins - 1;
        }
        counts[b] += 1;
    }
    Histogram { lo, hi, counts }
}

/// Full Monte Carlo output: every sample plus aggregates.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ToleranceReport {
    pub spec: DeviationSpec,
    /// Gaussian draws are not truncated; large sigmas can push reflectivities
    /// through their extremes.
    pub truncated: bool,
    pub samples: Vec<ToleranceSample>,
    pub f_mode: MetricStats,
    pub f_process: MetricStats,
    pub f_mode_hist: Histogram,
    pub f_process_hist: Histogram,
}

impl ToleranceReport {
    /// CSV rows `sample,dtheta1..4,dphi,fm,fp` with full double precision.
    pub fn write_csv(&self, w: &mut impl std::io::Write) -> std::io::Result<()> {
        writeln!(w, "sample,dtheta1,dtheta2,dtheta3,dtheta4,dphi,fm,fp")?;
        for (i, s) in self.samples.iter().enumerate() {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                i, s.dtheta[0], s.dtheta[1], s.dtheta[2], s.dtheta[3], s.dphi, s.f_mode, s.f_process
            )?;
        }
        Ok(())
    }
}

fn evaluate(dtheta: [f64; 4], dphi: f64) -> ToleranceSample {
    let ideal = build_circuit(&CircuitParams::ideal());
    let p = CircuitParams::from_deviations(dtheta, dphi);
    let u = build_circuit(&p);
    let f_mode = mode_fidelity(&u, &ideal, GaugeOpt::On).expect("equal dims");
    let f_process = process_fidelity(&jamiolkowski_state(&u).expect("unitary by construction"));
    ToleranceSample { dtheta, dphi, f_mode, f_process }
}

/// Evaluate both fidelities at `ideal + delta` for each grid value of a
/// single deviation parameter.
pub fn sweep_parameter(which: DeviationParam, grid: &[f64]) -> Vec<ToleranceSample> {
    grid.par_iter()
        .map(|&delta| {
            let mut dtheta = [0.0f64; 4];
            let mut dphi = 0.0;
            match which {
                DeviationParam::Theta1 => dtheta[0] = delta,
                DeviationParam::Theta2 => dtheta[1] = delta,
                DeviationParam::Theta3 => dtheta[2] = delta,
                DeviationParam::Theta4 => dtheta[3] = delta,
                DeviationParam::PhiN => dphi = delta,
            }
            evaluate(dtheta, dphi)
        })
        .collect()
}

/// Default sweep grid: log-spaced magnitudes per sign, mirroring the
/// logarithmic axes of tolerance plots.
pub fn default_sweep_grid() -> Vec<f64> {
    log_grid(1e-3, 0.5, 50)
}

/// `points` log-spaced magnitudes in [lo, hi], each with both signs,
/// ascending.
pub fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let mut grid = Vec::with_capacity(2 * points);
    for i in 0..points {
        let t = i as f64 / (points.max(2) - 1) as f64;
        let mag = lo * (hi / lo).powf(t);
        grid.push(mag);
        grid.push(-mag);
    }
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    grid
}

/// Draw `n_samples` i.i.d. Gaussian deviation sets and evaluate both
/// fidelities for each. Per-sample RNG streams are derived from
/// `(seed, sample index)`, so the report is bit-identical for any worker
/// count.
pub fn monte_carlo(spec: &DeviationSpec) -> Result<ToleranceReport> {
    spec.validate()?;
    let normal = Normal::new(0.0, spec.sigma.max(f64::MIN_POSITIVE))
        .map_err(|e| Error::contract(format!("bad sigma: {e}")))?;
    let samples: Vec<ToleranceSample> = (0..spec.n_samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(spec.seed, i);
            let mut dtheta = [0.0f64; 4];
            let mut dphi = 0.0;
            // Draw all five in fixed order for stream stability, apply the
            // selected subset.
            let draws: [f64; 5] = std::array::from_fn(|_| {
                if spec.sigma == 0.0 { 0.0 } else { normal.sample(&mut rng) }
            });
            for (slot, param) in DeviationParam::ALL.iter().enumerate() {
                if spec.which.contains(param) {
                    match param {
                        DeviationParam::Theta1 => dtheta[0] = draws[slot],
                        DeviationParam::Theta2 => dtheta[1] = draws[slot],
                        DeviationParam::Theta3 => dtheta[2] = draws[slot],
                        DeviationParam::Theta4 => dtheta[3] = draws[slot],
                        DeviationParam::PhiN => dphi = draws[slot],
                    }
                }
            }
            evaluate(dtheta, dphi)
        })
        .collect();
    let fm = samples.iter().map(|s| s.f_mode);
    let fp = samples.iter().map(|s| s.f_process);
    Ok(ToleranceReport {
        spec: spec.clone(),
        truncated: false,
        f_mode: stats(fm.clone()),
        f_process: stats(fp.clone()),
        f_mode_hist: histogram(fm, HISTOGRAM_BINS),
        f_process_hist: histogram(fp, HISTOGRAM_BINS),
        samples,
    })
}
