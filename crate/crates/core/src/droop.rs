//! Power transfer across a coupling impedance and the voltage/frequency
//! droop law.
//!
//! Sign convention: P > 0 is power delivered by the inverter to the bus, so
//! a positive power angle (inverter leads the bus) across an inductive line
//! yields P > 0 and the droop law `w = w* - m P` is stabilizing.

use crate::error::{Result, SimError};

/// Line/filter impedance Z0 at angle theta between an inverter and the bus.
/// theta = pi/2 is the purely inductive case.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingImpedance {
    /// ohms
    pub magnitude: f64,
    /// radians, in [0, pi/2]
    pub angle: f64,
}

impl CouplingImpedance {
    pub fn new(magnitude: f64, angle: f64) -> Result<Self> {
        if !(magnitude.is_finite() && magnitude > 0.0) {
            return Err(SimError::Argument(format!(
                "impedance magnitude must be > 0, got {magnitude}"
            )));
        }
        if !(angle.is_finite() && (0.0..=std::f64::consts::FRAC_PI_2).contains(&angle)) {
            return Err(SimError::Argument(format!(
                "impedance angle must lie in [0, pi/2], got {angle}"
            )));
        }
        Ok(CouplingImpedance { magnitude, angle })
    }

    pub fn inductive(magnitude: f64) -> Result<Self> {
        CouplingImpedance::new(magnitude, std::f64::consts::FRAC_PI_2)
    }
}

/// Droop setpoints and coefficients: e = E* - n Q, w = w* - m P.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DroopParams {
    /// Voltage setpoint E*, V.
    pub e_set: f64,
    /// Frequency setpoint w*, rad/s.
    pub w_set: f64,
    /// Voltage-droop coefficient, V/var.
    pub n_coef: f64,
    /// Frequency-droop coefficient, rad/s/W.
    pub m_coef: f64,
}

impl DroopParams {
    pub fn new(e_set: f64, w_set: f64, n_coef: f64, m_coef: f64) -> Result<Self> {
        if !(e_set.is_finite() && e_set > 0.0) {
            return Err(SimError::Argument(format!("e_set must be > 0, got {e_set}")));
        }
        if !(w_set.is_finite() && w_set > 0.0) {
            return Err(SimError::Argument(format!("w_set must be > 0, got {w_set}")));
        }
        if !(n_coef.is_finite() && n_coef >= 0.0) {
            return Err(SimError::Argument(format!("n_coef must be >= 0, got {n_coef}")));
        }
        if !(m_coef.is_finite() && m_coef >= 0.0) {
            return Err(SimError::Argument(format!("m_coef must be >= 0, got {m_coef}")));
        }
        Ok(DroopParams {
            e_set,
            w_set,
            n_coef,
            m_coef,
        })
    }
}

/// Low-pass-filtered active/reactive power measurement feeding the droop law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerMeasurement {
    /// Filtered active power, W.
    pub p: f64,
    /// Filtered reactive power, var.
    pub q: f64,
    /// First-order filter cutoff, rad/s.
    pub filter_cutoff: f64,
}

impl PowerMeasurement {
    pub fn at_rest(filter_cutoff: f64) -> Result<Self> {
        if !(filter_cutoff.is_finite() && filter_cutoff > 0.0) {
            return Err(SimError::Argument(format!(
                "filter cutoff must be > 0, got {filter_cutoff}"
            )));
        }
        Ok(PowerMeasurement {
            p: 0.0,
            q: 0.0,
            filter_cutoff,
        })
    }

    /// Forward-Euler first-order smoothing: p <- p + w_c dt (p_raw - p).
    /// Requires w_c dt < 2 for discrete stability.
    pub fn lpf_update(&self, p_raw: f64, q_raw: f64, dt: f64) -> Result<PowerMeasurement> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(SimError::Argument(format!("dt must be > 0, got {dt}")));
        }
        let a = self.filter_cutoff * dt;
        if a >= 2.0 {
            return Err(SimError::Argument(format!(
                "filter_cutoff * dt = {a} >= 2 is discretely unstable"
            )));
        }
        Ok(PowerMeasurement {
            p: self.p + a * (p_raw - self.p),
            q: self.q + a * (q_raw - self.q),
            filter_cutoff: self.filter_cutoff,
        })
    }
}

/// Active/reactive power received at the bus (V0) from an inverter at E
/// leading by `delta` across impedance `z`:
///
/// ```text
/// P = (E V0/Z0 cos d - V0^2/Z0) cos t + (E V0/Z0) sin d sin t
/// Q = (E V0/Z0 cos d - V0^2/Z0) sin t - (E V0/Z0) sin d cos t
/// ```
pub fn power_transfer(e: f64, delta: f64, v0: f64, z: &CouplingImpedance) -> (f64, f64) {
    let a = e * v0 / z.magnitude * delta.cos() - v0 * v0 / z.magnitude;
    let b = e * v0 / z.magnitude * delta.sin();
    let (sin_t, cos_t) = z.angle.sin_cos();
    (a * cos_t + b * sin_t, a * sin_t - b * cos_t)
}

/// The theta = pi/2 (purely inductive) specialization.
pub fn power_transfer_inductive(e: f64, delta: f64, v0: f64, z0: f64) -> (f64, f64) {
    let p = e * v0 / z0 * delta.sin();
    let q = e * v0 / z0 * delta.cos() - v0 * v0 / z0;
    (p, q)
}

/// Droop law: (e, w) = (E* - n q, w* - m p) from the filtered measurement.
pub fn droop_update(params: &DroopParams, meas: &PowerMeasurement) -> (f64, f64) {
    (
        params.e_set - params.n_coef * meas.q,
        params.w_set - params.m_coef * meas.p,
    )
}
