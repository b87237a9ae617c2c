//! Complex mode-transfer matrices with a unitarity tolerance.

use ndarray::Array2;
use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};

/// Default tolerance on max |U U† − I| for matrices asserted unitary.
pub const UNITARITY_TOL: f64 = 1e-10;

/// An N×N complex mode map. Objects constructed through [`ModeUnitary::new`]
/// are checked against `unitarity_tol`; measured matrices may carry a relaxed
/// tolerance via [`ModeUnitary::from_measured`].
#[derive(Clone, Debug, PartialEq)]
pub struct ModeUnitary {
    entries: Array2<Complex64>,
    unitarity_tol: f64,
}

impl ModeUnitary {
    /// Wrap a matrix asserted unitary within the default tolerance.
    pub fn new(entries: Array2<Complex64>) -> Result<Self> {
        Self::with_tol(entries, UNITARITY_TOL)
    }

    /// Wrap a matrix asserted unitary within `tol`.
    pub fn with_tol(entries: Array2<Complex64>, tol: f64) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::contract(format!(
                "mode map must be square, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        let u = ModeUnitary { entries, unitarity_tol: tol };
        let dev = u.unitarity_deviation();
        if dev > tol {
            return Err(Error::contract(format!(
                "matrix is not unitary within {tol:.1e} (max |UU+ - I| = {dev:.3e})"
            )));
        }
        Ok(u)
    }

    /// Wrap a measured (approximately unitary) matrix without a unitarity
    /// check; the stored tolerance records how far it may drift.
    pub fn from_measured(entries: Array2<Complex64>, tol: f64) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::contract("measured mode map must be square".to_string()));
        }
        Ok(ModeUnitary { entries, unitarity_tol: tol })
    }

    pub fn identity(n: usize) -> Self {
        ModeUnitary { entries: Array2::eye(n), unitarity_tol: UNITARITY_TOL }
    }

    /// Haar-ish random unitary by Gram-Schmidt on a complex Gaussian matrix.
    pub fn random(n: usize, rng: &mut impl Rng) -> Self {
        loop {
            let mut cols: Vec<Vec<Complex64>> = Vec::with_capacity(n);
            for _ in 0..n {
                let mut v: Vec<Complex64> = (0..n)
                    .map(|_| {
                        Complex64::new(
                            rng.sample::<f64, _>(rand_distr::StandardNormal),
                            rng.sample::<f64, _>(rand_distr::StandardNormal),
                        )
                    })
                    .collect();
                for prev in &cols {
                    let proj: Complex64 =
                        prev.iter().zip(&v).map(|(p, x)| p.conj() * x).sum();
                    for (x, p) in v.iter_mut().zip(prev) {
                        *x -= proj * p;
                    }
                }
                let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
                if norm < 1e-6 {
                    break; // numerically degenerate draw; restart
                }
                for x in v.iter_mut() {
                    *x /= norm;
                }
                cols.push(v);
            }
            if cols.len() == n {
                let entries = Array2::from_shape_fn((n, n), |(r, c)| cols[c][r]);
                return ModeUnitary { entries, unitarity_tol: UNITARITY_TOL };
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.entries[(row, col)]
    }

    pub fn entries(&self) -> &Array2<Complex64> {
        &self.entries
    }

    pub fn unitarity_tol(&self) -> f64 {
        self.unitarity_tol
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> ModeUnitary {
        let n = self.dim();
        let entries = Array2::from_shape_fn((n, n), |(r, c)| self.entries[(c, r)].conj());
        ModeUnitary { entries, unitarity_tol: self.unitarity_tol }
    }

    /// Entrywise complex conjugate (no transpose).
    pub fn conjugate(&self) -> ModeUnitary {
        ModeUnitary {
            entries: self.entries.mapv(|z| z.conj()),
            unitarity_tol: self.unitarity_tol,
        }
    }

    /// Matrix product `self * rhs`.
    pub fn compose(&self, rhs: &ModeUnitary) -> ModeUnitary {
        ModeUnitary {
            entries: self.entries.dot(&rhs.entries),
            unitarity_tol: self.unitarity_tol.max(rhs.unitarity_tol),
        }
    }

    /// max_jk |(U U† − I)_jk|.
    pub fn unitarity_deviation(&self) -> f64 {
        let n = self.dim();
        let mut max = 0.0f64;
        for j in 0..n {
            for k in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for m in 0..n {
                    acc += self.entries[(j, m)] * self.entries[(k, m)].conj();
                }
                if j == k {
                    acc -= Complex64::new(1.0, 0.0);
                }
                max = max.max(acc.norm());
            }
        }
        max
    }

    /// Scale rows by `phases` (output-side diagonal gauge).
    pub fn scale_rows(&self, phases: &[Complex64]) -> ModeUnitary {
        let n = self.dim();
        let entries = Array2::from_shape_fn((n, n), |(r, c)| phases[r] * self.entries[(r, c)]);
        ModeUnitary { entries, unitarity_tol: self.unitarity_tol }
    }

    /// Scale columns by `phases` (input-side diagonal gauge).
    pub fn scale_cols(&self, phases: &[Complex64]) -> ModeUnitary {
        let n = self.dim();
        let entries = Array2::from_shape_fn((n, n), |(r, c)| self.entries[(r, c)] * phases[c]);
        ModeUnitary { entries, unitarity_tol: self.unitarity_tol }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn random_unitaries_are_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in 2..=6 {
            for _ in 0..20 {
                let u = ModeUnitary::random(n, &mut rng);
                assert!(u.unitarity_deviation() < 1e-12, "n={n}");
            }
        }
    }

    #[test]
    fn new_rejects_non_unitary() {
        let m = Array2::from_elem((2, 2), Complex64::new(1.0, 0.0));
        assert!(ModeUnitary::new(m.clone()).is_err());
        assert!(ModeUnitary::from_measured(m, 0.1).is_ok());
    }

    #[test]
    fn dagger_inverts() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let u = ModeUnitary::random(4, &mut rng);
        let prod = u.compose(&u.dagger());
        assert!(prod.unitarity_deviation() < 1e-12);
        for i in 0..4 {
            let d = prod.entry(i, i) - Complex64::new(1.0, 0.0);
            assert!(d.norm() < 1e-12);
        }
    }
}
