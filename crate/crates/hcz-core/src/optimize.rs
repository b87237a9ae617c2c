//! Derivative-free local search (Nelder-Mead) with deterministic multistart,
//! shared by the parameter, dip, and unitary fitters.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Stopping/shape knobs for one Nelder-Mead descent.
#[derive(Clone, Copy, Debug)]
pub struct NelderMeadConfig {
    pub max_iters: usize,
    /// Stop when the simplex function spread falls below this.
    pub ftol: f64,
    /// Stop when the simplex diameter falls below this.
    pub xtol: f64,
    /// Initial simplex edge length per coordinate.
    pub initial_step: f64,
}

impl Default for NelderMeadConfig {
    fn default() -> Self {
        NelderMeadConfig { max_iters: 4000, ftol: 1e-16, xtol: 1e-12, initial_step: 0.1 }
    }
}

/// Minimize `f` from `start`; returns (argmin, min).
pub fn nelder_mead(
    f: &mut impl FnMut(&[f64]) -> f64,
    start: &[f64],
    cfg: &NelderMeadConfig,
) -> (Vec<f64>, f64) {
    let n = start.len();
    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(start.to_vec());
    for i in 0..n {
        let mut v = start.to_vec();
        v[i] += if v[i].abs() > 1.0 { cfg.initial_step * v[i].abs() } else { cfg.initial_step };
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| f(v)).collect();

    for _ in 0..cfg.max_iters {
        // order ascending by value
        let mut idx: Vec<usize> = (0..=n).collect();
        idx.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(std::cmp::Ordering::Equal));
        let reordered: Vec<Vec<f64>> = idx.iter().map(|&i| simplex[i].clone()).collect();
        let revalues: Vec<f64> = idx.iter().map(|&i| values[i]).collect();
        simplex = reordered;
        values = revalues;

        let spread = (values[n] - values[0]).abs();
        let diameter = simplex[1..]
            .iter()
            .map(|v| {
                v.iter()
                    .zip(&simplex[0])
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0f64, f64::max)
            })
            .fold(0.0f64, f64::max);
        if spread < cfg.ftol && diameter < cfg.xtol {
            break;
        }

        let centroid: Vec<f64> = (0..n)
            .map(|d| simplex[..n].iter().map(|v| v[d]).sum::<f64>() / n as f64)
            .collect();
        let reflect: Vec<f64> = (0..n)
            .map(|d| centroid[d] + alpha * (centroid[d] - simplex[n][d]))
            .collect();
        let fr = f(&reflect);
        if fr < values[0] {
            let expand: Vec<f64> = (0..n)
                .map(|d| centroid[d] + gamma * (reflect[d] - centroid[d]))
                .collect();
            let fe = f(&expand);
            if fe < fr {
                simplex[n] = expand;
                values[n] = fe;
            } else {
                simplex[n] = reflect;
                values[n] = fr;
            }
        } else if fr < values[n - 1] {
            simplex[n] = reflect;
            values[n] = fr;
        } else {
            let contract: Vec<f64> = (0..n)
                .map(|d| centroid[d] + rho * (simplex[n][d] - centroid[d]))
                .collect();
            let fc = f(&contract);
            if fc < values[n] {
                simplex[n] = contract;
                values[n] = fc;
            } else {
                for i in 1..=n {
                    for d in 0..n {
                        simplex[i][d] = simplex[0][d] + sigma * (simplex[i][d] - simplex[0][d]);
                    }
                    values[i] = f(&simplex[i]);
                }
            }
        }
    }
    let mut best = 0;
    for i in 1..=n {
        if values[i] < values[best] {
            best = i;
        }
    }
    (simplex[best].clone(), values[best])
}

/// Multistart Nelder-Mead: one descent from `base_start`, the rest from
/// seeded uniform draws over `bounds`; the best result is polished by one
/// further descent. Deterministic given `seed`.
pub fn multistart(
    f: &mut impl FnMut(&[f64]) -> f64,
    base_start: &[f64],
    bounds: &[(f64, f64)],
    starts: usize,
    seed: u64,
    cfg: &NelderMeadConfig,
) -> (Vec<f64>, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(Vec<f64>, f64)> = None;
    for s in 0..starts.max(1) {
        let start: Vec<f64> = if s == 0 {
            base_start.to_vec()
        } else {
            bounds.iter().map(|&(lo, hi)| rng.gen_range(lo..hi)).collect()
        };
        let (x, v) = nelder_mead(f, &start, cfg);
        if best.as_ref().map_or(true, |(_, bv)| v < *bv) {
            best = Some((x, v));
        }
    }
    let (x, _) = best.unwrap();
    // polish from the winner with a smaller initial simplex
    let polish_cfg = NelderMeadConfig { initial_step: cfg.initial_step * 0.01, ..*cfg };
    let (px, pv) = nelder_mead(f, &x, &polish_cfg);
    (px, pv)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimizes_a_shifted_quadratic() {
        let mut f = |x: &[f64]| (x[0] - 1.5).powi(2) + 3.0 * (x[1] + 0.5).powi(2);
        let (x, v) = nelder_mead(&mut f, &[0.0, 0.0], &NelderMeadConfig::default());
        assert!(v < 1e-14);
        assert!((x[0] - 1.5).abs() < 1e-6 && (x[1] + 0.5).abs() < 1e-6);
    }

    #[test]
    fn multistart_escapes_a_bad_basin() {
        // Two-well function with the global minimum away from the base start.
        let mut f = |x: &[f64]| {
            let a = (x[0] - 2.0).powi(2) - 1.0;
            let b = (x[0] + 1.0).powi(2);
            a.min(b) + 1.0
        };
        let (x, v) = multistart(
            &mut f,
            &[-1.0],
            &[(-4.0, 4.0)],
            16,
            7,
            &NelderMeadConfig::default(),
        );
        assert!(v < 1e-10, "v = {v}");
        assert!((x[0] - 2.0).abs() < 1e-4);
    }
}
