//! Two droop-controlled sources (PV-fed and DMFC-fed) coupled to a common
//! constant-power load bus, integrated quasi-steady-state: the slow control
//! dynamics (filters, droop, angles) are time stepped while the electrical
//! network is solved as an algebraic phasor circuit at every step.

mod bus;
mod sim;

pub use bus::{solve_bus, BusSolution};
pub use sim::{
    initial_state, run, sim_step, steady_state_report, SimState, SimTrace, SteadyStateReport,
    TraceRow,
};

use std::f64::consts::{FRAC_PI_2, PI};

use crate::config::ScenarioConfig;
use crate::dmfc::DmfcCell;
use crate::droop::{CouplingImpedance, DroopParams};
use crate::error::{Result, SimError};
use crate::pv::PvArray;

/// DC side backing an inverter, with its available (peak) power.
#[derive(Debug, Clone, PartialEq)]
pub enum DcSide {
    Pv { array: PvArray, v_mpp: f64 },
    Fc { cell: DmfcCell },
}

/// One inverter-coupled source: droop controller, ratings, and the DC side
/// that must cover the dispatched active power.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceSpec {
    pub label: &'static str,
    pub droop: DroopParams,
    pub rated_p: f64,
    pub rated_q: f64,
    /// Peak power the DC side can deliver, W.
    pub dc_available: f64,
    pub dc: DcSide,
}

/// Fully populated two-source scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct MicrogridScenario {
    pub nominal_voltage_rms: f64,
    pub nominal_frequency_hz: f64,
    pub filter_inductance: f64,
    pub filter_capacitance: f64,
    /// Z0 = w * Lf at nominal frequency, theta = pi/2.
    pub coupling: CouplingImpedance,
    pub sources: [SourceSpec; 2],
    pub load_p: f64,
    pub load_q: f64,
    pub dt: f64,
    pub t_end: f64,
    pub filter_cutoff: f64,
    /// When set, a dispatch beyond a source's DC-side power fails the run.
    pub enforce_dc_limits: bool,
}

impl MicrogridScenario {
    pub fn omega_nominal(&self) -> f64 {
        2.0 * PI * self.nominal_frequency_hz
    }

    /// Per-unit power base: the natural scale V_nom^2 / Z0 of the network.
    pub fn s_base(&self) -> f64 {
        self.nominal_voltage_rms * self.nominal_voltage_rms / self.coupling.magnitude
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).floor() as usize
    }
}

fn require_positive(name: &str, value: f64) -> Result<()> {
    if !(value.is_finite() && value > 0.0) {
        return Err(SimError::Config(format!("{name} must be > 0, got {value}")));
    }
    Ok(())
}

/// Builds and sizes the scenario from a validated config.
///
/// Sizing picks the PV parallel-string scale and the DMFC series cell count
/// so each DC side covers `rated_p * headroom`; a DC side that cannot reach
/// its rating is a sizing error.
pub fn build_scenario(config: &ScenarioConfig) -> Result<MicrogridScenario> {
    let sys = &config.system;
    require_positive("system.voltage_rms", sys.voltage_rms)?;
    require_positive("system.frequency_hz", sys.frequency_hz)?;
    require_positive("system.filter_inductance", sys.filter_inductance)?;
    require_positive("system.filter_capacitance", sys.filter_capacitance)?;
    require_positive("sim.dt", config.sim.dt)?;
    require_positive("sim.filter_cutoff", config.sim.filter_cutoff)?;
    if config.sim.t_end < config.sim.dt {
        return Err(SimError::Config(format!(
            "sim.t_end ({}) must be >= sim.dt ({})",
            config.sim.t_end, config.sim.dt
        )));
    }
    for (name, v) in [("load.p", config.load.p), ("load.q", config.load.q)] {
        if !v.is_finite() {
            return Err(SimError::Config(format!("{name} must be finite")));
        }
    }

    let omega = 2.0 * PI * sys.frequency_hz;
    let coupling = CouplingImpedance::new(omega * sys.filter_inductance, FRAC_PI_2)
        .map_err(|e| SimError::Config(e.to_string()))?;

    let droop_for = |rated_p: f64, rated_q: f64, m: Option<f64>, n: Option<f64>| -> Result<DroopParams> {
        // Conventional sizing: 1% frequency droop at rated P, 5% voltage
        // droop at rated Q, unless overridden.
        let m_coef = m.unwrap_or(0.01 * omega / rated_p);
        let n_coef = n.unwrap_or(0.05 * sys.voltage_rms / rated_q);
        DroopParams::new(sys.voltage_rms, omega, n_coef, m_coef)
            .map_err(|e| SimError::Config(e.to_string()))
    };

    // PV source: scale the string count so the MPP covers the rating.
    let pv_cfg = &config.source.pv;
    require_positive("source.pv.rated_p", pv_cfg.rated_p)?;
    require_positive("source.pv.rated_q", pv_cfg.rated_q)?;
    require_positive("source.pv.headroom", pv_cfg.headroom)?;
    let unit_array = PvArray::new(
        pv_cfg.i_pv,
        pv_cfg.i_0,
        pv_cfg.ideality,
        pv_cfg.n_cell,
        pv_cfg.temperature,
    )
    .and_then(|a| a.with_irradiance(pv_cfg.irradiance))
    .map_err(|e| SimError::Config(format!("source.pv: {e}")))?;
    let unit_mpp = unit_array.mpp_oracle(1e-9)?;
    if unit_mpp.power <= 0.0 {
        return Err(SimError::Sizing("PV string has no positive MPP".into()));
    }
    let scale = pv_cfg.headroom * pv_cfg.rated_p / unit_mpp.power;
    let array = unit_array.scaled(scale)?;
    let mpp = array.mpp_oracle(1e-9)?;
    let pv = SourceSpec {
        label: "pv",
        droop: droop_for(pv_cfg.rated_p, pv_cfg.rated_q, pv_cfg.m_coef, pv_cfg.n_coef)?,
        rated_p: pv_cfg.rated_p,
        rated_q: pv_cfg.rated_q,
        dc_available: mpp.power,
        dc: DcSide::Pv {
            array,
            v_mpp: mpp.voltage,
        },
    };

    // FC source: series cell count from the per-cell power peak.
    let fc_cfg = &config.source.fc;
    require_positive("source.fc.rated_p", fc_cfg.rated_p)?;
    require_positive("source.fc.rated_q", fc_cfg.rated_q)?;
    require_positive("source.fc.headroom", fc_cfg.headroom)?;
    let unit_cell = DmfcCell::new(
        fc_cfg.temperature,
        fc_cfg.p_h2_anode,
        fc_cfg.p_h2_cathode,
        fc_cfg.n_h2_flow,
        fc_cfg.area,
        fc_cfg.r1,
        fc_cfg.r2,
        fc_cfg.i_max_norm,
        1,
    )
    .map_err(|e| SimError::Config(format!("source.fc: {e}")))?;
    let (_, p_cell_max) = unit_cell.stack_power_max();
    if p_cell_max <= 0.0 {
        return Err(SimError::Sizing(
            "DMFC cell has no positive power peak".into(),
        ));
    }
    let n_series = (fc_cfg.headroom * fc_cfg.rated_p / p_cell_max).ceil() as u32;
    let cell = DmfcCell {
        n_series: n_series.max(1),
        ..unit_cell
    };
    let (_, stack_peak) = cell.stack_power_max();
    let fc = SourceSpec {
        label: "fc",
        droop: droop_for(fc_cfg.rated_p, fc_cfg.rated_q, fc_cfg.m_coef, fc_cfg.n_coef)?,
        rated_p: fc_cfg.rated_p,
        rated_q: fc_cfg.rated_q,
        dc_available: stack_peak,
        dc: DcSide::Fc { cell },
    };

    for s in [&pv, &fc] {
        if s.dc_available + 1e-9 < s.rated_p {
            return Err(SimError::Sizing(format!(
                "{} DC side peaks at {:.1} W, below rated {:.1} W",
                s.label, s.dc_available, s.rated_p
            )));
        }
    }

    Ok(MicrogridScenario {
        nominal_voltage_rms: sys.voltage_rms,
        nominal_frequency_hz: sys.frequency_hz,
        filter_inductance: sys.filter_inductance,
        filter_capacitance: sys.filter_capacitance,
        coupling,
        sources: [pv, fc],
        load_p: config.load.p,
        load_q: config.load.q,
        dt: config.sim.dt,
        t_end: config.sim.t_end,
        filter_cutoff: config.sim.filter_cutoff,
        enforce_dc_limits: true,
    })
}
