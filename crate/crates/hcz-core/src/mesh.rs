//! Triangular mesh parametrization of a four-mode unitary: six two-mode
//! rotations with phases. Dropping the residual output-phase diagonal leaves
//! twelve real parameters, which is exactly the gauge class that
//! visibility data can determine.

use ndarray::Array2;
use num_complex::Complex64;

use crate::unitary::ModeUnitary;

/// Mode pairs of the triangular mesh, in application order.
pub const MESH_PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

/// Number of free real parameters (theta, phi per rotation).
pub const MESH_PARAMS: usize = 2 * MESH_PAIRS.len();

/// A phased two-mode rotation embedded on modes (m, k):
/// `[[cos t, -e^{i p} sin t], [e^{-i p} sin t, cos t]]`.
fn rotation_on(n: usize, m: usize, k: usize, theta: f64, phi: f64) -> Array2<Complex64> {
    let mut u = Array2::<Complex64>::eye(n);
    let (s, c) = theta.sin_cos();
    u[(m, m)] = Complex64::new(c, 0.0);
    u[(k, k)] = Complex64::new(c, 0.0);
    u[(m, k)] = -Complex64::from_polar(s, phi);
    u[(k, m)] = Complex64::from_polar(s, -phi);
    u
}

/// Build the mesh unitary from `[theta_1, phi_1, ..., theta_6, phi_6]`.
pub fn mesh_unitary(params: &[f64]) -> ModeUnitary {
    assert_eq!(params.len(), MESH_PARAMS, "mesh takes {MESH_PARAMS} parameters");
    let mut u = Array2::<Complex64>::eye(4);
    for (i, &(m, k)) in MESH_PAIRS.iter().enumerate() {
        let r = rotation_on(4, m, k, params[2 * i], params[2 * i + 1]);
        u = r.dot(&u);
    }
    ModeUnitary::with_tol(u, 1e-12).expect("mesh product is unitary")
}
