//! The subcommands. Each turns a [`RunConfig`] into a CSV table plus a few
//! summary lines; writing them out is left to the caller.

use deltakick::gain_formulas::tau_opt;
use deltakick::meanfield::PulseType;
use deltakick::scan::{scan_grid, ScanAxis, ScanTable};
use deltakick::sequence::{
    evaluate, protocol_trace, tune_linear_condition, tune_untwist, FormulaInputs, GainReport, Mode, ParamSet,
    ProtocolSpec, Readout,
};

use crate::config::{ConfigError, RunConfig};
use crate::CliError;

/// Header plus string rows, written as CSV.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        Table { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }
}

/// What a command produced.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Outcome {
    pub table: Table,
    pub summary: Vec<String>,
}

pub const PREP_SCAN_HEADER: [&str; 8] = ["pulse_type", "t_exp", "dt1", "tau1", "sign", "gain", "gain_db", "error"];
pub const ECHO_TUNE_HEADER: [&str; 2] = ["T_tau_prime", "dt2"];
pub const ROBUSTNESS_HEADER: [&str; 3] = ["delta_n", "gain_linear", "gain_echo"];
pub const CHI_TRACE_HEADER: [&str; 8] =
    ["time_s", "Rx_m", "Ry_m", "Rz_m", "chi_self_hz", "chi_cross_hz", "chi_eff_hz", "separation_m"];

fn report_table(prefix_header: &[&str], prefix: Vec<String>, report: &GainReport) -> Table {
    let mut header: Vec<&str> = prefix_header.to_vec();
    header.extend(GainReport::CSV_HEADER);
    let mut t = Table::new(&header);
    let mut row = prefix;
    row.extend(report.csv_record());
    t.rows.push(row);
    t
}

fn report_summary(report: &GainReport) -> Vec<String> {
    vec![
        format!(
            "tau1 = {:.6e}, tau_ai = {:.6e}, tau2 = {:.6e} ({} via {})",
            report.tau1, report.tau_ai, report.tau2, report.mode, report.branch
        ),
        format!("gain = {:.6} ({:.3} dB), delta_theta = {:.6e} rad", report.gain, report.gain_db, report.delta_theta),
    ]
}

/// Single formula-level evaluation from `mode`, `N`, twists and `delta_n`.
pub fn gain(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let inputs = cfg.formula();
    let report = inputs.evaluate()?;
    Ok(Outcome { table: report_table(&[], Vec::new(), &report), summary: report_summary(&report) })
}

fn sign_label(x: f64) -> &'static str {
    if x > 0.0 {
        "+1"
    } else if x < 0.0 {
        "-1"
    } else {
        "0"
    }
}

/// `(t_exp, dt1)` landscape of the preparation twist and linear gain, once
/// per pulse type in `pulse_types`.
pub fn prep_scan(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let (Some(t_grid), Some(dt_grid)) = (cfg.t_exp_grid, cfg.dt1_grid) else {
        return Err(CliError::Usage("prep-scan needs both t_exp_grid and dt1_grid".into()));
    };
    let axes = [t_grid.axis("t_exp"), dt_grid.axis("dt1")];
    let mut table = Table::new(&PREP_SCAN_HEADER);
    let mut summary = Vec::new();
    for pulse in cfg.scan_pulse_types() {
        let mut base = cfg.protocol()?;
        base.params.pulse_type = pulse;
        base.readout = Readout::Linear;
        let scan = scan_grid(&base, &axes)?;
        summary.push(prep_summary(pulse, &scan));
        for row in &scan.rows {
            let mut out = vec![pulse.to_string(), row.point[0].to_string(), row.point[1].to_string()];
            match &row.outcome {
                Ok(r) => out.extend([
                    format!("{:e}", r.tau1),
                    sign_label(r.tau1).to_string(),
                    r.gain.to_string(),
                    r.gain_db.to_string(),
                    String::new(),
                ]),
                Err(e) => {
                    out.extend(["NaN", "NaN", "NaN", "NaN"].map(String::from));
                    out.push(e.to_string());
                }
            }
            table.rows.push(out);
        }
    }
    Ok(Outcome { table, summary })
}

fn prep_summary(pulse: PulseType, scan: &ScanTable) -> String {
    let ok: Vec<&GainReport> = scan.rows.iter().filter_map(|r| r.outcome.as_ref().ok()).collect();
    let failed = scan.rows.len() - ok.len();
    let best = ok.iter().copied().max_by(|a, b| a.gain.total_cmp(&b.gain));
    let (pos, neg) = (ok.iter().filter(|r| r.tau1 > 0.0).count(), ok.iter().filter(|r| r.tau1 < 0.0).count());
    match best {
        Some(b) => format!(
            "{pulse}: {} points, {failed} failed, tau1 > 0 at {pos}, tau1 < 0 at {neg}, best gain {:.4} ({:.2} dB)",
            scan.rows.len(),
            b.gain,
            b.gain_db
        ),
        None => format!("{pulse}: all {} points failed", scan.rows.len()),
    }
}

fn tuned_protocol(cfg: &RunConfig, readout: Readout) -> Result<ProtocolSpec, CliError> {
    let mut spec = cfg.protocol()?;
    spec.readout = readout;
    if cfg.tune_linear {
        spec.t_tau_prime = tune_linear_condition(&spec)?;
    }
    Ok(spec)
}

/// Echo protocol with `dt2` chosen so that the echo undoes the preparation
/// twist (and `T_tau_prime` tuned first when `tune_linear` is set).
pub fn echo_tune(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let mut spec = tuned_protocol(cfg, Readout::Echo)?;
    spec.dt2 = tune_untwist(&spec)?;
    let report = evaluate(&spec)?;
    let mut summary = spec.warnings();
    summary.push(format!("T_tau_prime = {:.9e} s, dt2 = {:.9e} s", spec.t_tau_prime, spec.dt2));
    summary.extend(report_summary(&report));
    let prefix = vec![spec.t_tau_prime.to_string(), spec.dt2.to_string()];
    Ok(Outcome { table: report_table(&ECHO_TUNE_HEADER, prefix, &report), summary })
}

/// Linear and echo gains against detection noise at fixed twists.
pub fn robustness(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let Some(grid) = cfg.delta_n_grid else {
        return Err(CliError::Usage("robustness needs delta_n_grid".into()));
    };
    let axis: ScanAxis = grid.axis("delta_n");
    if axis.values.iter().any(|&x| x < 0.0) {
        return Err(ConfigError::for_key("delta_n_grid", "detection noise must be non-negative").into());
    }
    let base = cfg.formula();
    let linear = scan_grid(&FormulaInputs { mode: Mode::Linear, ..base }, std::slice::from_ref(&axis))?;
    let echo = scan_grid(&FormulaInputs { mode: Mode::Echo, ..base }, &[axis])?;
    let mut table = Table::new(&ROBUSTNESS_HEADER);
    for (l, e) in linear.rows.iter().zip(&echo.rows) {
        table.rows.push(vec![l.point[0].to_string(), l.gain().to_string(), e.gain().to_string()]);
    }
    let summary = vec![format!(
        "N = {}, tau1 = {:.6e} ({:.3} tau_opt), tau2 = {:.6e}, tau_ai = {:.3e}",
        base.n,
        base.tau1,
        base.tau1 / tau_opt(base.n),
        base.tau2,
        base.tau_ai
    )];
    Ok(Outcome { table, summary })
}

/// One mean-field protocol run with the configured readout.
pub fn sequence_eval(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let spec = tuned_protocol(cfg, cfg.readout)?;
    let report = evaluate(&spec)?;
    let lm = spec.landmarks();
    let mut summary = spec.warnings();
    summary.push(format!("BS1 {:.6e} s, BS2 {:.6e} s, BS3 {:.6e} s, end {:.6e} s", lm.bs1, lm.bs2, lm.bs3, lm.end));
    if cfg.tune_linear {
        summary.push(format!("tuned T_tau_prime = {:.9e} s", spec.t_tau_prime));
    }
    summary.extend(report_summary(&report));
    Ok(Outcome { table: report_table(&[], Vec::new(), &report), summary })
}

/// Radii, twisting rates and arm separation along the protocol timeline.
pub fn chi_trace(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let spec = cfg.protocol()?;
    let trace = protocol_trace(&spec)?;
    let mut table = Table::new(&CHI_TRACE_HEADER);
    for i in 0..trace.len() {
        let r = trace.radii[i];
        table.rows.push(
            [
                trace.times[i],
                r[0],
                r[1],
                r[2],
                trace.chi_self[i],
                trace.chi_cross[i],
                trace.chi_eff[i],
                trace.separation[i],
            ]
            .iter()
            .map(|v| format!("{v:e}"))
            .collect(),
        );
    }
    let summary = vec![format!("{} samples over {:.6e} s", trace.len(), trace.times.last().copied().unwrap_or(0.0))];
    Ok(Outcome { table, summary })
}
