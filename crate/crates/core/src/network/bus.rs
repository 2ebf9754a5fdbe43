//! Algebraic phasor solve of the common bus.
//!
//! Two sources at E1∠d1 and E2∠d2 feed a constant-power load (P, Q) at the
//! bus through coupling impedances. The bus phasor V∠phi is found by damped
//! Newton iteration on the two real power-balance equations
//!
//! ```text
//! Re{ sum_k V conj((E_k - V) / Z_k) } = load_p
//! Im{ sum_k V conj((E_k - V) / Z_k) } = load_q
//! ```
//!
//! Per-source flows are then the receiving-end powers from `power_transfer`
//! with each angle measured relative to the bus.

use num_complex::Complex64;

use crate::droop::{power_transfer, CouplingImpedance};
use crate::error::{Result, SimError};

const MAX_ITERS: usize = 50;
/// Convergence threshold on the residual norm, in per-unit of `s_base`.
const TOL_PU: f64 = 1e-12;

/// Bus solve result: the bus phasor and the (P, Q) flow delivered to the bus
/// by each source.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BusSolution {
    pub v_bus: f64,
    pub phi_bus: f64,
    pub flows: [(f64, f64); 2],
    /// Final residual norm in per-unit.
    pub residual_pu: f64,
}

fn residual(
    v: f64,
    phi: f64,
    e_ph: &[Complex64; 2],
    z_ph: &[Complex64; 2],
    load_p: f64,
    load_q: f64,
) -> (f64, f64) {
    let vb = Complex64::from_polar(v, phi);
    let mut s = Complex64::new(0.0, 0.0);
    for k in 0..2 {
        s += vb * ((e_ph[k] - vb) / z_ph[k]).conj();
    }
    (s.re - load_p, s.im - load_q)
}

/// Solves the bus phasor for the two-source, one-load circuit.
///
/// `guess` warm-starts the iteration (previous time step); `s_base` sets the
/// per-unit scale of the convergence test. Non-convergence after 50
/// iterations is a solver error carrying the last residual, which signals an
/// infeasible dispatch such as a load beyond the maximum transferable power.
#[allow(clippy::too_many_arguments)]
pub fn solve_bus(
    e1: f64,
    delta1: f64,
    e2: f64,
    delta2: f64,
    z1: &CouplingImpedance,
    z2: &CouplingImpedance,
    load_p: f64,
    load_q: f64,
    guess: Option<(f64, f64)>,
    s_base: f64,
) -> Result<BusSolution> {
    let e_ph = [
        Complex64::from_polar(e1, delta1),
        Complex64::from_polar(e2, delta2),
    ];
    let z_ph = [
        Complex64::from_polar(z1.magnitude, z1.angle),
        Complex64::from_polar(z2.magnitude, z2.angle),
    ];
    let (mut v, mut phi) = guess.unwrap_or((0.5 * (e1 + e2), 0.5 * (delta1 + delta2)));
    let tol = TOL_PU * s_base;

    let mut f = residual(v, phi, &e_ph, &z_ph, load_p, load_q);
    let mut norm = f.0.hypot(f.1);
    for _ in 0..MAX_ITERS {
        if norm <= tol {
            let flows = [
                power_transfer(e1, delta1 - phi, v, z1),
                power_transfer(e2, delta2 - phi, v, z2),
            ];
            return Ok(BusSolution {
                v_bus: v,
                phi_bus: phi,
                flows,
                residual_pu: norm / s_base,
            });
        }
        // Numeric 2x2 Jacobian by forward differences.
        let h_v = 1e-7 * v.abs().max(1.0);
        let h_phi = 1e-8;
        let fv = residual(v + h_v, phi, &e_ph, &z_ph, load_p, load_q);
        let fp = residual(v, phi + h_phi, &e_ph, &z_ph, load_p, load_q);
        let j = [
            [(fv.0 - f.0) / h_v, (fp.0 - f.0) / h_phi],
            [(fv.1 - f.1) / h_v, (fp.1 - f.1) / h_phi],
        ];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det.abs() < 1e-300 || !det.is_finite() {
            return Err(SimError::Solver {
                message: "singular Jacobian in bus solve".into(),
                residual_pu: norm / s_base,
            });
        }
        let dv = (-f.0 * j[1][1] + f.1 * j[0][1]) / det;
        let dphi = (-f.1 * j[0][0] + f.0 * j[1][0]) / det;

        // Backtrack until the residual norm shrinks and v stays positive.
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let v_try = v + lambda * dv;
            let phi_try = phi + lambda * dphi;
            if v_try > 0.0 {
                let f_try = residual(v_try, phi_try, &e_ph, &z_ph, load_p, load_q);
                let norm_try = f_try.0.hypot(f_try.1);
                if norm_try < norm {
                    v = v_try;
                    phi = phi_try;
                    f = f_try;
                    norm = norm_try;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            return Err(SimError::Solver {
                message: "bus solve stalled (load may exceed maximum transferable power)".into(),
                residual_pu: norm / s_base,
            });
        }
    }
    if norm <= tol {
        let flows = [
            power_transfer(e1, delta1 - phi, v, z1),
            power_transfer(e2, delta2 - phi, v, z2),
        ];
        return Ok(BusSolution {
            v_bus: v,
            phi_bus: phi,
            flows,
            residual_pu: norm / s_base,
        });
    }
    Err(SimError::Solver {
        message: format!("bus solve did not converge in {MAX_ITERS} iterations"),
        residual_pu: norm / s_base,
    })
}
