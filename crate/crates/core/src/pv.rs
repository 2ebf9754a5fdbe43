//! Ideal single-diode photovoltaic array model.
//!
//! The array is a photocurrent source in parallel with one diode (no series
//! or shunt resistance):
//!
//! ```text
//! I(V) = i_pv - i_0 * (exp(V / v_t_eff) - 1)
//! v_t_eff = (k*T/q) * ideality * n_cell
//! ```
//!
//! `mpp_oracle` locates the maximum power point by bracketing search on the
//! unimodal P(V) curve and serves as the independent reference the MPPT
//! tracker is tested against.

use crate::error::{Result, SimError};

/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380649e-23;
/// Elementary charge, C.
pub const ELEMENTARY_CHARGE: f64 = 1.602176634e-19;

/// exp() argument above which the diode term is far outside f64 range.
const EXP_OVERFLOW_LIMIT: f64 = 700.0;

/// Parameters of the ideal single-diode PV array.
#[derive(Debug, Clone, PartialEq)]
pub struct PvArray {
    /// Photocurrent (light-generated), A.
    pub i_pv: f64,
    /// Diode reverse-saturation current, A.
    pub i_0: f64,
    /// Diode ideality factor, dimensionless, >= 1.
    pub ideality: f64,
    /// Series cell count.
    pub n_cell: u32,
    /// Cell temperature, K.
    pub temperature: f64,
}

/// One point of an I-V / P-V characteristic. `power == voltage * current`
/// by construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingPoint {
    pub voltage: f64,
    pub current: f64,
    pub power: f64,
}

impl OperatingPoint {
    fn at(voltage: f64, current: f64) -> Self {
        OperatingPoint {
            voltage,
            current,
            power: voltage * current,
        }
    }
}

impl PvArray {
    pub fn new(i_pv: f64, i_0: f64, ideality: f64, n_cell: u32, temperature: f64) -> Result<Self> {
        if !(i_pv.is_finite() && i_pv > 0.0) {
            return Err(SimError::Argument(format!("i_pv must be > 0, got {i_pv}")));
        }
        if !(i_0.is_finite() && i_0 > 0.0) {
            return Err(SimError::Argument(format!("i_0 must be > 0, got {i_0}")));
        }
        if !(ideality.is_finite() && ideality >= 1.0) {
            return Err(SimError::Argument(format!(
                "ideality must be >= 1, got {ideality}"
            )));
        }
        if n_cell < 1 {
            return Err(SimError::Argument("n_cell must be >= 1".into()));
        }
        if !(temperature.is_finite() && temperature > 0.0) {
            return Err(SimError::Argument(format!(
                "temperature must be > 0 K, got {temperature}"
            )));
        }
        Ok(PvArray {
            i_pv,
            i_0,
            ideality,
            n_cell,
            temperature,
        })
    }

    /// Effective thermal voltage (k*T/q) * ideality * n_cell, V.
    pub fn v_t_eff(&self) -> f64 {
        BOLTZMANN * self.temperature / ELEMENTARY_CHARGE * self.ideality * self.n_cell as f64
    }

    /// Same array under irradiance `g` (W/m^2) with linear photocurrent
    /// scaling relative to 1000 W/m^2. The saturation current is unchanged.
    pub fn with_irradiance(&self, g: f64) -> Result<Self> {
        if !(g.is_finite() && g > 0.0) {
            return Err(SimError::Argument(format!(
                "irradiance must be > 0 W/m^2, got {g}"
            )));
        }
        PvArray::new(
            self.i_pv * g / 1000.0,
            self.i_0,
            self.ideality,
            self.n_cell,
            self.temperature,
        )
    }

    /// Scale both current parameters by `c` (parallel-string scaling); the
    /// open-circuit voltage is unchanged and the MPP power scales by `c`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(SimError::Argument(format!("scale must be > 0, got {c}")));
        }
        PvArray::new(
            self.i_pv * c,
            self.i_0 * c,
            self.ideality,
            self.n_cell,
            self.temperature,
        )
    }

    /// Array terminal current at voltage `v`:
    /// `I = i_pv - i_0 * (exp(v / v_t_eff) - 1)`. Strictly decreasing in v.
    pub fn cell_current(&self, v: f64) -> Result<f64> {
        if !v.is_finite() {
            return Err(SimError::Domain(format!("voltage must be finite, got {v}")));
        }
        if v < 0.0 {
            return Err(SimError::Domain(format!("voltage must be >= 0, got {v}")));
        }
        let x = v / self.v_t_eff();
        if x > EXP_OVERFLOW_LIMIT {
            return Err(SimError::Domain(format!(
                "diode exponent overflow: v / v_t_eff = {x:.3e} exceeds {EXP_OVERFLOW_LIMIT}"
            )));
        }
        Ok(self.i_pv - self.i_0 * x.exp_m1())
    }

    /// Closed-form inversion of the diode equation at I = 0:
    /// `v_oc = v_t_eff * ln(i_pv / i_0 + 1)`.
    pub fn open_circuit_voltage(&self) -> f64 {
        self.v_t_eff() * (self.i_pv / self.i_0).ln_1p()
    }

    /// `n_points` operating points uniformly spaced on [0, v_oc].
    pub fn iv_sweep(&self, n_points: usize) -> Result<Vec<OperatingPoint>> {
        if n_points < 2 {
            return Err(SimError::Argument(format!(
                "iv_sweep needs n_points >= 2, got {n_points}"
            )));
        }
        let v_oc = self.open_circuit_voltage();
        let mut points = Vec::with_capacity(n_points);
        for k in 0..n_points {
            let v = v_oc * k as f64 / (n_points - 1) as f64;
            points.push(OperatingPoint::at(v, self.cell_current(v)?));
        }
        Ok(points)
    }

    /// Locates the maximizer of P(v) = v * I(v) on [0, v_oc] by golden-section
    /// search on the unimodal power curve, to within `tolerance` volts.
    pub fn mpp_oracle(&self, tolerance: f64) -> Result<OperatingPoint> {
        if !(tolerance.is_finite() && tolerance > 0.0) {
            return Err(SimError::Argument(format!(
                "tolerance must be > 0, got {tolerance}"
            )));
        }
        const INV_PHI: f64 = 0.618_033_988_749_894_8;
        let mut a = 0.0;
        let mut b = self.open_circuit_voltage();
        let power = |v: f64| -> Result<f64> { Ok(v * self.cell_current(v)?) };

        let mut x1 = b - INV_PHI * (b - a);
        let mut x2 = a + INV_PHI * (b - a);
        let mut f1 = power(x1)?;
        let mut f2 = power(x2)?;
        // Track the best evaluated point so the result dominates the probes.
        let mut best_v = if f1 >= f2 { x1 } else { x2 };
        let mut best_p = f1.max(f2);
        while b - a > tolerance {
            if f1 >= f2 {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - INV_PHI * (b - a);
                f1 = power(x1)?;
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + INV_PHI * (b - a);
                f2 = power(x2)?;
            }
            let (x, f) = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
            if f > best_p {
                best_p = f;
                best_v = x;
            }
        }
        Ok(OperatingPoint::at(best_v, self.cell_current(best_v)?))
    }
}
