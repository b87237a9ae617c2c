//! Construction of the heralded-CZ circuit unitary from physical parameters,
//! both as a closed-form matrix and compositionally from beamsplitter stages,
//! plus the directional-coupler physics realizing each splitter.
//!
//! Mode order is `{C, T, A, B}` throughout. The circuit topology is: BS1 on
//! (C,A) and BS2 on (T,B); per-rail phases; BS3 on (C,T) with its coupling
//! phase flipped by the lengthened-coupler trick; BS4 on (A,B). External
//! input/output phases are fixed so that the ideal design point implements an
//! exact CZ on the heralded qubits (not merely CZ up to local phases).

use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::unitary::ModeUnitary;

/// Tolerance used when asserting circuit-construction linear algebra.
pub const CIRCUIT_TOL: f64 = 1e-12;

/// The five physical degrees of freedom: four splitting angles (radians) and
/// the net internal phase.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircuitParams {
    /// Effective splitting angles theta_1..theta_4; reflectivity R = cos^2(theta).
    pub theta: [f64; 4],
    /// Net internal phase phi_N collected between the splitter pairs.
    pub phi_n: f64,
}

impl CircuitParams {
    pub fn new(theta: [f64; 4], phi_n: f64) -> Self {
        CircuitParams { theta, phi_n }
    }

    /// Design-point parameters: theta_1..3 = arccos sqrt(1/3),
    /// theta_4 = arccos sqrt(1/2 + 1/sqrt(6)), phi_N = 0.
    pub fn ideal() -> Self {
        let t13 = (1.0f64 / 3.0).sqrt().acos();
        let t4 = (0.5 + 1.0 / 6.0f64.sqrt()).sqrt().acos();
        CircuitParams { theta: [t13, t13, t13, t4], phi_n: 0.0 }
    }

    /// Build parameters from fabrication deviations as quoted by device
    /// characterization: `theta_n = ideal_n + d` for BS1, BS2, BS4, but
    /// `theta_3 = ideal_3 - d` for BS3. BS3 is fabricated as the lengthened
    /// coupler (gamma = 2*pi - theta_3), so a positive coupling-length
    /// deviation lowers its effective splitting angle.
    pub fn from_deviations(dtheta: [f64; 4], dphi: f64) -> Self {
        let ideal = Self::ideal();
        CircuitParams {
            theta: [
                ideal.theta[0] + dtheta[0],
                ideal.theta[1] + dtheta[1],
                ideal.theta[2] - dtheta[2],
                ideal.theta[3] + dtheta[3],
            ],
            phi_n: dphi,
        }
    }

    /// Inverse of [`CircuitParams::from_deviations`].
    pub fn deviations(&self) -> ([f64; 4], f64) {
        let ideal = Self::ideal();
        (
            [
                self.theta[0] - ideal.theta[0],
                self.theta[1] - ideal.theta[1],
                ideal.theta[2] - self.theta[2],
                self.theta[3] - ideal.theta[3],
            ],
            self.phi_n,
        )
    }

    /// Straight-through reflectivity R(theta_n) = cos^2(theta_n).
    pub fn reflectivity(&self, n: usize) -> f64 {
        self.theta[n].cos().powi(2)
    }
}

/// Per-rail phases accumulated between the two splitter pairs.
///
/// The net phase seen by the circuit matrix is
/// `phi_c + phi_a - phi_b - phi_t`. The builder applies `phi_a` to rail B and
/// `phi_b` to rail A: with the {C,T,A,B} topology the four net-phase matrix
/// entries all route through rail B, so the positively-entering phase is the
/// one on that rail.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct InternalPhases {
    pub phi_c: f64,
    pub phi_a: f64,
    pub phi_b: f64,
    pub phi_t: f64,
}

impl InternalPhases {
    pub fn new(phi_c: f64, phi_a: f64, phi_b: f64, phi_t: f64) -> Self {
        InternalPhases { phi_c, phi_a, phi_b, phi_t }
    }

    /// The single collected phase phi_N = phi_c + phi_a - phi_b - phi_t.
    pub fn net(&self) -> f64 {
        self.phi_c + self.phi_a - self.phi_b - self.phi_t
    }
}

/// A uniform directional coupler: coupling constant `C` (1/mm) over length
/// `L` (mm), with an index-mismatch detuning `delta_beta` (1/mm) and an
/// additive coupling offset `gamma0` (radians) folding in s-bend
/// contributions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplerSpec {
    pub coupling_constant: f64,
    pub length: f64,
    pub delta_beta: f64,
    pub gamma0: f64,
}

impl CouplerSpec {
    pub fn new(coupling_constant: f64, length: f64) -> Self {
        CouplerSpec { coupling_constant, length, delta_beta: 0.0, gamma0: 0.0 }
    }

    pub fn with_detuning(mut self, delta_beta: f64) -> Self {
        self.delta_beta = delta_beta;
        self
    }

    pub fn with_gamma0(mut self, gamma0: f64) -> Self {
        self.gamma0 = gamma0;
        self
    }

    /// Integrated coupling gamma = C*L + gamma0.
    pub fn gamma(&self) -> f64 {
        self.coupling_constant * self.length + self.gamma0
    }
}

/// Power split and amplitude map of a directional coupler.
#[derive(Clone, Debug)]
pub struct CouplerResponse {
    /// Fraction of power staying in the launched waveguide (cos^2 gamma when
    /// phase-matched). This is the weight the circuit matrix calls R.
    pub straight_through: f64,
    /// Fraction coupling to the other waveguide; device datasheets often call
    /// this the coupler "reflectance".
    pub cross_coupled: f64,
    /// The 2x2 amplitude map.
    pub map: ModeUnitary,
}

/// Symmetric beamsplitter of Eq.-(1) form:
/// `a1 -> a1 cos(theta) + i a2 sin(theta)` and symmetrically for `a2`.
pub fn beamsplitter(theta: f64) -> ModeUnitary {
    let c = Complex64::new(theta.cos(), 0.0);
    let is = Complex64::new(0.0, theta.sin());
    let entries = ndarray::array![[c, is], [is, c]];
    ModeUnitary::with_tol(entries, CIRCUIT_TOL).expect("beamsplitter map is unitary")
}

/// Embed a symmetric beamsplitter on modes (m, k) of an n-mode identity.
fn beamsplitter_on(n: usize, m: usize, k: usize, theta: f64) -> Array2<Complex64> {
    let mut u = Array2::<Complex64>::eye(n);
    let c = Complex64::new(theta.cos(), 0.0);
    let is = Complex64::new(0.0, theta.sin());
    u[(m, m)] = c;
    u[(k, k)] = c;
    u[(m, k)] = is;
    u[(k, m)] = is;
    u
}

/// The closed-form 4x4 circuit matrix on modes {C, T, A, B}.
///
/// Unitary to 1e-12 for all real parameters. phi_N multiplies the four
/// entries (rows A,B x columns T,B). The external-phase gauge makes the
/// ideal design point an exact heralded CZ; entry moduli match the
/// trigonometric pattern `|U_CC| = cos(theta_1) cos(theta_3)` etc.
pub fn build_circuit(p: &CircuitParams) -> ModeUnitary {
    let c: Vec<f64> = p.theta.iter().map(|t| t.cos()).collect();
    let s: Vec<f64> = p.theta.iter().map(|t| t.sin()).collect();
    let re = |x: f64| Complex64::new(x, 0.0);
    let im = |x: f64| Complex64::new(0.0, x);
    let ph = Complex64::from_polar(1.0, p.phi_n);
    let entries = ndarray::array![
        [re(-c[0] * c[2]), im(c[1] * s[2]), im(s[0] * c[2]), re(s[1] * s[2])],
        [im(c[0] * s[2]), re(-c[1] * c[2]), re(s[0] * s[2]), im(c[2] * s[1])],
        [im(-c[3] * s[0]), ph * re(s[1] * s[3]), re(c[0] * c[3]), ph * im(c[1] * s[3])],
        [re(s[0] * s[3]), ph * im(-c[3] * s[1]), im(c[0] * s[3]), ph * re(c[1] * c[3])],
    ];
    ModeUnitary::with_tol(entries, CIRCUIT_TOL).expect("closed-form circuit matrix is unitary")
}

/// The same circuit as a product of stage maps: BS1(theta_1) on (C,A) and
/// BS2(theta_2) on (T,B); per-rail phases; BS3(-theta_3) on (C,T) and
/// BS4(theta_4) on (A,B).
///
/// Gauge-equivalent to [`build_circuit`] (mode fidelity 1 after optimizing
/// external phases) whenever `ph.net() == p.phi_n`.
pub fn build_compositional(p: &CircuitParams, ph: &InternalPhases) -> ModeUnitary {
    let layer1 =
        beamsplitter_on(4, 0, 2, p.theta[0]).dot(&beamsplitter_on(4, 1, 3, p.theta[1]));
    // phi_a rides rail B and phi_b rail A; see the InternalPhases docs.
    let rail_phases = [ph.phi_c, ph.phi_t, ph.phi_b, ph.phi_a];
    let mut phases = Array2::<Complex64>::zeros((4, 4));
    for (i, &f) in rail_phases.iter().enumerate() {
        phases[(i, i)] = Complex64::from_polar(1.0, f);
    }
    let layer2 =
        beamsplitter_on(4, 0, 1, -p.theta[2]).dot(&beamsplitter_on(4, 2, 3, p.theta[3]));
    let total = layer2.dot(&phases).dot(&layer1);
    ModeUnitary::with_tol(total, CIRCUIT_TOL).expect("stage product is unitary")
}

/// Power split and amplitude map of a directional coupler, allowing for
/// index-mismatch detuning.
///
/// Phase-matched (`delta_beta == 0`): straight-through fraction cos^2(gamma)
/// and the symmetric-splitter map at theta = gamma. Detuned: the coupled-mode
/// solution with generalized coupling Omega = sqrt(C^2 + (delta_beta/2)^2),
/// whose cross-coupled fraction (C/Omega)^2 sin^2(Omega L) is capped below 1.
pub fn coupler_reflectivity(spec: &CouplerSpec) -> Result<CouplerResponse> {
    if spec.length < 0.0 || spec.coupling_constant < 0.0 {
        return Err(Error::contract(format!(
            "coupler requires C >= 0 and L >= 0, got C={}, L={}",
            spec.coupling_constant, spec.length
        )));
    }
    let half_det = spec.delta_beta / 2.0;
    let map = if spec.delta_beta == 0.0 {
        beamsplitter(spec.gamma())
    } else {
        let omega = (spec.coupling_constant.powi(2) + half_det.powi(2)).sqrt();
        let phase = omega * spec.length;
        let (sin_p, cos_p) = phase.sin_cos();
        let bar_top = Complex64::new(cos_p, half_det / omega * sin_p);
        let bar_bot = Complex64::new(cos_p, -half_det / omega * sin_p);
        let cross = Complex64::new(0.0, spec.coupling_constant / omega * sin_p);
        let m = ndarray::array![[bar_top, cross], [cross, bar_bot]];
        let detuned = ModeUnitary::with_tol(m, CIRCUIT_TOL).expect("coupled-mode map is unitary");
        // s-bend offset folds in as extra ideal coupling
        if spec.gamma0 != 0.0 {
            detuned.compose(&beamsplitter(spec.gamma0))
        } else {
            detuned
        }
    };
    let straight_through = map.entry(0, 0).norm_sqr();
    let cross_coupled = map.entry(1, 0).norm_sqr();
    Ok(CouplerResponse { straight_through, cross_coupled, map })
}

/// The lengthened-coupler angle 2*pi - theta that flips the sign of the
/// imaginary coupling term (`a -> a cos(theta) - i a' sin(theta)`) while
/// preserving the power split.
pub fn pi_phase_gamma(theta: f64) -> Result<f64> {
    if !(0.0..PI / 2.0).contains(&theta) || theta == 0.0 {
        return Err(Error::contract(format!(
            "pi-phase lengthening expects 0 < theta < pi/2, got {theta}"
        )));
    }
    Ok(2.0 * PI - theta)
}

/// Exchange the two ancilla output rows (A and B) of a 4x4 circuit map.
pub fn swap_ancilla_rows(u: &ModeUnitary) -> Result<ModeUnitary> {
    if u.dim() != 4 {
        return Err(Error::contract(format!(
            "ancilla swap expects a 4x4 map, got {}x{}",
            u.dim(),
            u.dim()
        )));
    }
    let e = u.entries();
    let entries = Array2::from_shape_fn((4, 4), |(r, c)| {
        let src = match r {
            2 => 3,
            3 => 2,
            other => other,
        };
        e[(src, c)]
    });
    ModeUnitary::from_measured(entries, u.unitarity_tol())
}
