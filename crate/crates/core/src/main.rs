//! Command-line front end: five subcommands over the scenario config, each
//! emitting CSV (to a file or stdout) plus a one-paragraph summary on stderr.
//!
//! Exit codes: 0 success, 2 usage, 3 config, 4 solver / not steady,
//! 5 sizing, 6 I/O.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use microgrid_sim::config::ScenarioConfig;
use microgrid_sim::dmfc::DmfcCell;
use microgrid_sim::error::{Result, SimError};
use microgrid_sim::mppt::{mppt_init, mppt_run};
use microgrid_sim::network::{build_scenario, run, steady_state_report, SimTrace};
use microgrid_sim::pv::PvArray;

#[derive(Parser)]
#[command(name = "microgrid-sim", version, about = "Islanded PV + DMFC microgrid simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Scenario config file (TOML sections [system], [source.pv],
    /// [source.fc], [load], [sim]); defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Output CSV path; stdout when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,

    /// Override a config key, e.g. --set source.pv.rated_p=9000.
    /// Bare keys are scoped to the subcommand's source section.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep the PV array I-V / P-V characteristic.
    PvCurve {
        #[command(flatten)]
        common: CommonArgs,
        /// Number of sweep points.
        #[arg(long, default_value_t = 201)]
        points: usize,
    },
    /// Run the perturb-and-observe tracker against the PV array.
    MpptRun {
        #[command(flatten)]
        common: CommonArgs,
        /// Perturbation step, V. Default: 0.5% of the open-circuit voltage.
        #[arg(long)]
        step: Option<f64>,
        /// Starting voltage, V. Default: 20% of the open-circuit voltage.
        #[arg(long)]
        v_start: Option<f64>,
        /// Iteration count.
        #[arg(long, default_value_t = 1000)]
        iters: usize,
    },
    /// Sweep the DMFC polarization curve.
    FcPolarization {
        #[command(flatten)]
        common: CommonArgs,
        /// Number of sweep points.
        #[arg(long, default_value_t = 201)]
        points: usize,
    },
    /// Time-step the two-inverter droop loop (no DC-side limits).
    DroopSim {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Full scenario run with source sizing and steady-state dispatch report.
    MicrogridRun {
        #[command(flatten)]
        common: CommonArgs,
    },
}

fn main() {
    let cli = Cli::parse();
    let code = match dispatch(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    std::process::exit(code);
}

fn dispatch(command: &Command) -> Result<()> {
    match command {
        Command::PvCurve { common, points } => pv_curve(common, *points),
        Command::MpptRun { common, step, v_start, iters } => {
            mppt_cmd(common, *step, *v_start, *iters)
        }
        Command::FcPolarization { common, points } => fc_polarization(common, *points),
        Command::DroopSim { common } => droop_sim(common),
        Command::MicrogridRun { common } => microgrid_run(common),
    }
}

/// Bare override keys get the subcommand's natural section prefix.
fn scoped_overrides(set: &[String], prefix: Option<&str>) -> Vec<String> {
    set.iter()
        .map(|item| match (prefix, item.split_once('=')) {
            (Some(pre), Some((key, value))) if !key.contains('.') => {
                format!("{pre}.{key}={value}")
            }
            _ => item.clone(),
        })
        .collect()
}

fn load_config(common: &CommonArgs, prefix: Option<&str>) -> Result<ScenarioConfig> {
    let overrides = scoped_overrides(&common.set, prefix);
    ScenarioConfig::load(common.config.as_deref(), &overrides)
}

fn pv_array_from(config: &ScenarioConfig) -> Result<PvArray> {
    let pv = &config.source.pv;
    PvArray::new(pv.i_pv, pv.i_0, pv.ideality, pv.n_cell, pv.temperature)?
        .with_irradiance(pv.irradiance)
}

fn dmfc_cell_from(config: &ScenarioConfig) -> Result<DmfcCell> {
    let fc = &config.source.fc;
    DmfcCell::new(
        fc.temperature,
        fc.p_h2_anode,
        fc.p_h2_cathode,
        fc.n_h2_flow,
        fc.area,
        fc.r1,
        fc.r2,
        fc.i_max_norm,
        1,
    )
}

fn write_output(path: Option<&Path>, content: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, content).map_err(SimError::Io),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn pv_curve(common: &CommonArgs, points: usize) -> Result<()> {
    let config = load_config(common, Some("source.pv"))?;
    let array = pv_array_from(&config)?;
    let sweep = array.iv_sweep(points)?;
    let mut csv = String::from("voltage_v,current_a,power_w\n");
    for p in &sweep {
        csv.push_str(&format!("{},{},{}\n", p.voltage, p.current, p.power));
    }
    write_output(common.output.as_deref(), &csv)?;
    let mpp = array.mpp_oracle(1e-9)?;
    eprintln!(
        "PV curve: {} points on [0, {:.4} V]; MPP at {:.4} V, {:.4} A, {:.4} W.",
        sweep.len(),
        array.open_circuit_voltage(),
        mpp.voltage,
        mpp.current,
        mpp.power
    );
    Ok(())
}

fn mppt_cmd(common: &CommonArgs, step: Option<f64>, v_start: Option<f64>, iters: usize) -> Result<()> {
    let config = load_config(common, Some("source.pv"))?;
    let array = pv_array_from(&config)?;
    let v_max = array.open_circuit_voltage();
    let step = step.unwrap_or(0.005 * v_max);
    let v_start = v_start.unwrap_or(0.2 * v_max);
    let trajectory = mppt_run(&array, mppt_init(v_start, step, v_max)?, iters)?;
    let mut csv = String::from("iter,voltage_v,current_a,power_w\n");
    for s in &trajectory {
        csv.push_str(&format!("{},{},{},{}\n", s.iter, s.voltage, s.current, s.power));
    }
    write_output(common.output.as_deref(), &csv)?;
    let mpp = array.mpp_oracle(1e-9)?;
    let last = trajectory.last().expect("non-empty trajectory");
    eprintln!(
        "MPPT: {} iterations, step {:.4} V from {:.4} V; final {:.4} V / {:.4} W \
         ({:.2}% of the {:.4} W oracle MPP).",
        trajectory.len(),
        step,
        v_start,
        last.voltage,
        last.power,
        100.0 * last.power / mpp.power,
        mpp.power
    );
    Ok(())
}

fn fc_polarization(common: &CommonArgs, points: usize) -> Result<()> {
    let config = load_config(common, Some("source.fc"))?;
    let cell = dmfc_cell_from(&config)?;
    let curve = cell.polarization_curve(points)?;
    let mut csv = String::from("current_density_a_per_m2,voltage_v,power_w_per_m2\n");
    for p in &curve {
        csv.push_str(&format!("{},{},{}\n", p.current_density, p.voltage, p.power_density));
    }
    write_output(common.output.as_deref(), &csv)?;
    eprintln!(
        "DMFC polarization: {} points; E_max = {:.6} V, i_max = {:.2} A/m^2, \
         open-circuit cell voltage {:.6} V.",
        curve.len(),
        cell.nernst_emax(),
        cell.faraday_imax(),
        curve[0].voltage
    );
    Ok(())
}

fn droop_sim(common: &CommonArgs) -> Result<()> {
    let config = load_config(common, None)?;
    let mut scenario = build_scenario(&config)?;
    scenario.enforce_dc_limits = false;
    let trace = run(&scenario)?;
    let mut csv = String::from("t_s,p1_w,q1_var,p2_w,q2_var,freq_hz,vbus_v\n");
    for row in &trace.rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            row.t,
            row.p[0],
            row.q[0],
            row.p[1],
            row.q[1],
            0.5 * (row.f_hz[0] + row.f_hz[1]),
            row.v_bus
        ));
    }
    write_output(common.output.as_deref(), &csv)?;
    eprintln!(
        "Droop simulation: {} steps of {} s; steady state {}.",
        trace.rows.len() - 1,
        scenario.dt,
        match trace.steady_at {
            Some(t) => format!("reached at t = {t:.3} s"),
            None => "not reached".to_string(),
        }
    );
    Ok(())
}

fn microgrid_run(common: &CommonArgs) -> Result<()> {
    let config = load_config(common, None)?;
    let scenario = build_scenario(&config)?;
    let trace = run(&scenario)?;
    let mut csv = String::from(
        "t_s,p1_w,q1_var,e1_v,f1_hz,delta1_rad,p2_w,q2_var,e2_v,f2_hz,delta2_rad,vbus_v,phibus_rad\n",
    );
    for row in &trace.rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            row.t,
            row.p[0],
            row.q[0],
            row.e[0],
            row.f_hz[0],
            row.delta[0],
            row.p[1],
            row.q[1],
            row.e[1],
            row.f_hz[1],
            row.delta[1],
            row.v_bus,
            row.phi_bus
        ));
    }
    write_output(common.output.as_deref(), &csv)?;
    summarize_run(&scenario, &trace)
}

fn summarize_run(
    scenario: &microgrid_sim::network::MicrogridScenario,
    trace: &SimTrace,
) -> Result<()> {
    let report = steady_state_report(trace, scenario)?;
    let mut dc_note = String::new();
    for source in &scenario.sources {
        match &source.dc {
            microgrid_sim::network::DcSide::Pv { v_mpp, .. } => {
                dc_note.push_str(&format!(
                    " PV operates at its MPP ({:.2} V DC, {:.0} W available).",
                    v_mpp, source.dc_available
                ));
            }
            microgrid_sim::network::DcSide::Fc { cell } => {
                dc_note.push_str(&format!(
                    " DMFC stack of {} cells ({:.0} W peak).",
                    cell.n_series, source.dc_available
                ));
            }
        }
    }
    eprintln!(
        "Steady state at t = {:.3} s: PV {:.1} W / {:.1} var at {:.2} V, FC {:.1} W / {:.1} var \
         at {:.2} V; bus {:.2} V, system frequency {:.4} Hz (nominal {:.1} Hz, w* = {:.3} rad/s); \
         load served {:.1} W / {:.1} var, balance residual {:.2e} W.{}",
        trace.steady_at.unwrap_or(f64::NAN),
        report.p[0],
        report.q[0],
        report.e[0],
        report.p[1],
        report.q[1],
        report.e[1],
        report.v_bus,
        report.f_hz[0],
        scenario.nominal_frequency_hz,
        2.0 * PI * scenario.nominal_frequency_hz,
        report.load_p_served,
        report.load_q_served,
        report.balance_residual_w,
        dc_note
    );
    Ok(())
}
