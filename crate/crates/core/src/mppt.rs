//! Perturb-and-observe maximum power point tracker.
//!
//! The tracker perturbs the commanded operating voltage by a fixed step and
//! keeps the perturbation direction whenever the last move increased power.
//! The DC-DC converter is treated as an ideal voltage actuator.

use crate::error::{Result, SimError};
use crate::pv::PvArray;

/// P&O perturbation state. Small value type; `step` is a pure transition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MpptState {
    /// Commanded operating voltage, V. Clamped to [0, v_max].
    pub v_ref: f64,
    /// Perturbation step size, V (> 0).
    pub step: f64,
    /// Voltage ceiling for the clamp, V.
    pub v_max: f64,
    /// Last measured voltage, V.
    pub prev_voltage: f64,
    /// Last measured power, W.
    pub prev_power: f64,
    /// Current perturbation sign, +1 or -1.
    pub direction: i8,
}

/// One row of a tracker trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MpptSample {
    pub iter: usize,
    pub voltage: f64,
    pub current: f64,
    pub power: f64,
}

/// Initial tracker state at `v_start` with direction +1 and zero history.
pub fn mppt_init(v_start: f64, step: f64, v_max: f64) -> Result<MpptState> {
    if !(v_max.is_finite() && v_max > 0.0) {
        return Err(SimError::Argument(format!("v_max must be > 0, got {v_max}")));
    }
    if !(v_start.is_finite() && (0.0..=v_max).contains(&v_start)) {
        return Err(SimError::Argument(format!(
            "v_start must lie in [0, {v_max}], got {v_start}"
        )));
    }
    if !(step.is_finite() && step > 0.0) {
        return Err(SimError::Argument(format!("step must be > 0, got {step}")));
    }
    Ok(MpptState {
        v_ref: v_start,
        step,
        v_max,
        prev_voltage: v_start,
        prev_power: 0.0,
        direction: 1,
    })
}

impl MpptState {
    /// One P&O update from a (voltage, current) measurement.
    ///
    /// direction <- sign((p - prev_power) * (v - prev_voltage)), keeping the
    /// previous direction on ties, then v_ref = clamp(v + direction * step).
    pub fn step(&self, measured_v: f64, measured_i: f64) -> Result<MpptState> {
        if !measured_v.is_finite() || !measured_i.is_finite() {
            return Err(SimError::Domain(format!(
                "measurements must be finite, got v={measured_v}, i={measured_i}"
            )));
        }
        if measured_v < 0.0 {
            return Err(SimError::Domain(format!(
                "measured voltage must be >= 0, got {measured_v}"
            )));
        }
        let p = measured_v * measured_i;
        let slope = (p - self.prev_power) * (measured_v - self.prev_voltage);
        let direction = if slope > 0.0 {
            1
        } else if slope < 0.0 {
            -1
        } else {
            self.direction
        };
        let v_ref = (measured_v + direction as f64 * self.step).clamp(0.0, self.v_max);
        Ok(MpptState {
            v_ref,
            direction,
            prev_voltage: measured_v,
            prev_power: p,
            ..*self
        })
    }
}

/// Closed loop against a PV array: measure at v_ref, update, apply the new
/// v_ref. Returns exactly `max_iters` trajectory rows.
pub fn mppt_run(array: &PvArray, state: MpptState, max_iters: usize) -> Result<Vec<MpptSample>> {
    if max_iters < 1 {
        return Err(SimError::Argument("max_iters must be >= 1".into()));
    }
    let mut state = state;
    let mut trajectory = Vec::with_capacity(max_iters);
    for iter in 0..max_iters {
        let voltage = state.v_ref;
        let current = array.cell_current(voltage)?;
        trajectory.push(MpptSample {
            iter,
            voltage,
            current,
            power: voltage * current,
        });
        state = state.step(voltage, current)?;
    }
    Ok(trajectory)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example_array() -> PvArray {
        PvArray::new(8.0, 1e-10, 1.3, 54, 298.15).unwrap()
    }

    #[test]
    fn init_contract() {
        let s = mppt_init(10.0, 0.5, 50.0).unwrap();
        assert_eq!(s.v_ref, 10.0);
        assert_eq!(s.direction, 1);
        assert_eq!(s.prev_power, 0.0);
        let lower = mppt_init(0.0, 0.5, 50.0).unwrap();
        assert_eq!(lower.v_ref, 0.0);
        assert!(mppt_init(10.0, 0.0, 50.0).is_err());
        assert!(mppt_init(-1.0, 0.5, 50.0).is_err());
        assert!(mppt_init(51.0, 0.5, 50.0).is_err());
    }

    #[test]
    fn direction_kept_when_power_rises() {
        let s = MpptState {
            v_ref: 21.0,
            step: 0.5,
            v_max: 50.0,
            prev_voltage: 20.0,
            prev_power: 100.0,
            direction: 1,
        };
        let next = s.step(21.0, 5.0).unwrap(); // p = 105 > 100, dv > 0
        assert_eq!(next.direction, 1);
        assert_eq!(next.v_ref, 21.0 + 0.5);
    }

    #[test]
    fn direction_flips_when_power_falls() {
        let s = MpptState {
            v_ref: 21.0,
            step: 0.5,
            v_max: 50.0,
            prev_voltage: 20.0,
            prev_power: 100.0,
            direction: 1,
        };
        let next = s.step(21.0, 4.5).unwrap(); // p = 94.5 < 100, dv > 0
        assert_eq!(next.direction, -1);
        assert_eq!(next.v_ref, 21.0 - 0.5);
    }

    #[test]
    fn ties_keep_previous_direction() {
        let s = MpptState {
            v_ref: 20.0,
            step: 0.5,
            v_max: 50.0,
            prev_voltage: 20.0,
            prev_power: 100.0,
            direction: -1,
        };
        let next = s.step(20.0, 5.0).unwrap(); // dv = 0
        assert_eq!(next.direction, -1);
    }

    #[test]
    fn rejects_bad_measurements() {
        let s = mppt_init(10.0, 0.5, 50.0).unwrap();
        assert!(matches!(s.step(f64::NAN, 1.0), Err(SimError::Domain(_))));
        assert!(matches!(s.step(10.0, f64::INFINITY), Err(SimError::Domain(_))));
        assert!(matches!(s.step(-0.1, 1.0), Err(SimError::Domain(_))));
    }

    #[test]
    fn converges_to_oracle_mpp() {
        let a = example_array();
        let v_oc = a.open_circuit_voltage();
        let mpp = a.mpp_oracle(1e-9).unwrap();
        let step = 0.1;
        let state = mppt_init(0.2 * v_oc, step, v_oc).unwrap();
        let traj = mppt_run(&a, state, 500).unwrap();
        // Terminal limit cycle visits within one step of v_mpp every <= 3 rows.
        let close = traj
            .iter()
            .rev()
            .take(3)
            .any(|s| (s.voltage - mpp.voltage).abs() <= step + 1e-12);
        assert!(close, "tracker did not settle near v_mpp = {}", mpp.voltage);
    }

    #[test]
    fn limit_cycle_confined_from_exact_mpp() {
        let a = example_array();
        let v_oc = a.open_circuit_voltage();
        let mpp = a.mpp_oracle(1e-9).unwrap();
        let step = 0.2;
        let state = mppt_init(mpp.voltage, step, v_oc).unwrap();
        let traj = mppt_run(&a, state, 100).unwrap();
        for s in &traj {
            assert!(
                (s.voltage - mpp.voltage).abs() <= step + 1e-12,
                "left the oscillation band at iter {}: v = {}",
                s.iter,
                s.voltage
            );
        }
    }

    #[test]
    fn final_power_within_one_step_drop_of_mpp() {
        let a = example_array();
        let v_oc = a.open_circuit_voltage();
        let mpp = a.mpp_oracle(1e-9).unwrap();
        let step = 0.1;
        let traj = mppt_run(&a, mppt_init(0.2 * v_oc, step, v_oc).unwrap(), 500).unwrap();
        // Worst-case power drop over one step near the MPP.
        let band = |v: f64| v * a.cell_current(v).unwrap();
        let drop = (mpp.power - band(mpp.voltage - 2.0 * step))
            .max(mpp.power - band(mpp.voltage + 2.0 * step));
        assert!(traj.last().unwrap().power >= mpp.power - drop);
    }

    #[test]
    fn trajectory_length_and_determinism() {
        let a = example_array();
        let v_oc = a.open_circuit_voltage();
        let init = mppt_init(0.3 * v_oc, 0.25, v_oc).unwrap();
        let t1 = mppt_run(&a, init, 137).unwrap();
        let t2 = mppt_run(&a, init, 137).unwrap();
        assert_eq!(t1.len(), 137);
        assert_eq!(t1, t2);
    }

    #[test]
    fn converges_from_random_starts_within_bound() {
        // Convergence invariant: any start in [0.05, 0.95] * v_oc reaches the
        // MPP band within 3 * v_oc / step iterations.
        let a = example_array();
        let v_oc = a.open_circuit_voltage();
        let mpp = a.mpp_oracle(1e-9).unwrap();
        let step = 0.005 * v_oc;
        let budget = (3.0 * v_oc / step).ceil() as usize;
        for i in 0..20 {
            let frac = 0.05 + 0.9 * i as f64 / 19.0;
            let traj = mppt_run(&a, mppt_init(frac * v_oc, step, v_oc).unwrap(), budget).unwrap();
            let reached = traj
                .iter()
                .any(|s| (s.voltage - mpp.voltage).abs() <= step);
            assert!(reached, "no convergence from start fraction {frac}");
        }
    }
}
