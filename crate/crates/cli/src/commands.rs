use std::path::Path;
use std::time::Instant;

use clockdil::channels::check_cptp;
use clockdil::decoupling::{fit_rate, sweep, RateFit, SweepResult};
use clockdil::dilation::dilate;
use clockdil::numerics::herm_eig;
use clockdil::pointstate::{eps_trend, parity_limits, Demo};
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::RunManifest;

/// Residuals above this fail a run; sweep brackets may overshoot by this much.
const BRACKET_SLACK: f64 = 1e-10;

pub fn cmd_dilate(cfg: &RunConfig) -> Result<(), CliError> {
    let start = Instant::now();
    let mut manifest = RunManifest::new("dilate", cfg);
    let fam = cfg.family()?;
    let grid = cfg.grid()?;

    let mut tp: f64 = 0.0;
    let mut choi_min = f64::INFINITY;
    for &t in grid.points() {
        let report = check_cptp(&fam.at(t)?)?;
        tp = tp.max(report.tp_defect);
        choi_min = choi_min.min(report.choi_min_eig);
    }
    manifest.residual("cptp_trace_defect", tp);
    manifest.residual("cptp_choi_min_eigenvalue", choi_min);

    let d = dilate(&fam, &grid, &cfg.tolerances)?;
    manifest.timing("dilate", start);
    let pg = &d.propagators;
    let identity_residual = pg.dilation_residual(&fam)?;
    manifest.residual("kraus_reconstruction", d.kraus.max_reconstruction_residual());
    manifest.residual("kraus_normalization", d.kraus.max_normalization_defect());
    manifest.residual("dilation_identity", identity_residual);
    manifest.residual("unitarity", pg.max_unitarity_defect());
    manifest.residual("choi_eigen_equation", d.path.eigen_residual());
    manifest.residual("matching_margin", d.path.matching_margin());
    manifest.notes.push(format!(
        "bath dimension {}, {} grid points ({} inserted), {} frame re-seeds",
        pg.bath_dim(),
        pg.grid().len(),
        d.path.inserted_points(),
        pg.reseed_count()
    ));

    let dir = &cfg.out_dir;
    manifest.emit(dir, "propagators.json", pg.to_json()?.as_bytes())?;
    manifest.emit(dir, "kraus.csv", d.kraus.to_csv()?.as_bytes())?;
    manifest.timing("total", start);
    manifest.finish(dir)?;

    println!("dilation identity residual {identity_residual:.3e} (bath dimension {})", pg.bath_dim());
    if identity_residual > cfg.tolerances.dilation_fail {
        return Err(CliError::Tolerance(format!(
            "dilation identity residual {identity_residual:.3e} exceeds {:.1e}",
            cfg.tolerances.dilation_fail
        )));
    }
    Ok(())
}

/// Whether a sweep has enough spread for a rate fit.
fn fittable(sr: &SweepResult) -> Result<(), String> {
    let mut ns: Vec<usize> = sr.records.iter().map(|r| r.n).collect();
    ns.sort_unstable();
    ns.dedup();
    if ns.len() < 4 {
        return Err(format!("{} distinct n", ns.len()));
    }
    if (ns[ns.len() - 1] as f64) < 100.0 * ns[0] as f64 {
        return Err(format!("n spans {}..{}, under two decades", ns[0], ns[ns.len() - 1]));
    }
    Ok(())
}

fn report_fit(fit: &RateFit) {
    println!(
        "slope {:.4}, intercept {:.4}, r2 {:.6}, classification {:?}",
        fit.slope, fit.intercept, fit.r2, fit.classification
    );
}

pub fn cmd_decouple(cfg: &RunConfig) -> Result<(), CliError> {
    let start = Instant::now();
    let mut manifest = RunManifest::new("decouple", cfg);
    let source = cfg.source()?;
    let set = cfg.decoupling_set(source.system_dim())?;
    let sweep_cfg = cfg.sweep_config(&set)?;
    let sr = sweep(source.as_ref(), &set, &sweep_cfg)?;
    manifest.timing("sweep", start);
    manifest.notes.push(format!("dilation source {}", source.label()));

    let gap = sr.records.iter().map(|r| r.exact_lower - r.bound).fold(f64::MIN, f64::max);
    manifest.residual("bracket_max_lower_minus_upper", gap);
    let dir = &cfg.out_dir;
    manifest.emit(dir, "sweep.csv", sr.to_csv()?.as_bytes())?;
    manifest.emit(dir, "plot.csv", sr.plot_data().as_bytes())?;

    let mut failure = None;
    match fittable(&sr) {
        Err(why) => {
            log::warn!("rate fit skipped: {why}");
            manifest.notes.push(format!("rate fit skipped: {why}"));
        }
        Ok(()) => match fit_rate(&sr) {
            Ok(fit) => {
                report_fit(&fit);
                manifest.residual("fit_slope", fit.slope);
                manifest.residual("fit_r2", fit.r2);
                manifest.emit(dir, "fit.json", serde_json::to_string_pretty(&fit)?.as_bytes())?;
            }
            Err(e) => {
                manifest.notes.push(format!("rate fit failed: {e}"));
                failure = Some(CliError::Core(e));
            }
        },
    }
    let violations = sr.bracket_violations(BRACKET_SLACK);
    if !violations.is_empty() && failure.is_none() {
        failure = Some(CliError::Tolerance(format!(
            "probe lower bound exceeds the operator-norm bound at n = {:?}",
            violations.iter().map(|r| r.n).collect::<Vec<_>>()
        )));
    }
    manifest.timing("total", start);
    manifest.finish(dir)?;
    for r in &sr.records {
        println!("n = {:>6}  bound {:.6e}  exact lower {:.6e}", r.n, r.bound, r.exact_lower);
    }
    failure.map_or(Ok(()), Err)
}

pub fn cmd_rate_fit(cfg: &RunConfig, input: &Path) -> Result<(), CliError> {
    let mut manifest = RunManifest::new("rate-fit", cfg);
    let text = std::fs::read_to_string(input)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", input.display())))?;
    let sr = SweepResult::from_csv(&text)?;
    let fit = fit_rate(&sr)?;
    report_fit(&fit);
    manifest.residual("fit_slope", fit.slope);
    manifest.residual("fit_r2", fit.r2);
    manifest.notes.push(format!("input {}", input.display()));
    manifest.emit(&cfg.out_dir, "fit.json", serde_json::to_string_pretty(&fit)?.as_bytes())?;
    manifest.finish(&cfg.out_dir)?;
    Ok(())
}

pub fn cmd_pointstate(cfg: &RunConfig) -> Result<(), CliError> {
    let start = Instant::now();
    let mut manifest = RunManifest::new("pointstate", cfg);
    let demo = cfg.demo()?;
    let rows = demo.run(cfg.pointstate.eps_levels)?;
    let mut csv = String::from("eps,value\n");
    for (eps, v) in &rows {
        csv.push_str(&format!("{eps},{v}\n"));
    }
    let values: Vec<f64> = rows.iter().map(|r| r.1).collect();
    if demo == Demo::Oscillation {
        if let Some((even, odd)) = parity_limits(&values) {
            manifest.residual("accumulation_even", even);
            manifest.residual("accumulation_odd", odd);
            println!("accumulation points {even:.12} and {odd:.12}");
        }
    } else if let Some(trend) = eps_trend(&values) {
        manifest.residual("richardson_limit", trend.richardson);
        manifest.residual("observed_order", trend.observed_order);
        println!("richardson limit {:.12}, observed order {:.3}", trend.richardson, trend.observed_order);
    }
    manifest.emit(&cfg.out_dir, &format!("pointstate_{}.csv", demo.name()), csv.as_bytes())?;
    manifest.timing("total", start);
    manifest.finish(&cfg.out_dir)?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct TimeInfo {
    t: f64,
    trace_defect: f64,
    choi_eigenvalues: Vec<f64>,
    cptp: bool,
}

#[derive(Debug, Serialize)]
struct ChannelInfo {
    dim: usize,
    dissipative: bool,
    jumps: usize,
    times: Vec<TimeInfo>,
}

pub fn cmd_channel_info(cfg: &RunConfig, times: &[f64]) -> Result<(), CliError> {
    let mut manifest = RunManifest::new("channel-info", cfg);
    let l = cfg.lindbladian()?;
    let fam = clockdil::ChannelFamily::semigroup(l.clone());
    let mut out = ChannelInfo { dim: l.dim(), dissipative: l.is_dissipative(), jumps: l.jumps().len(), times: vec![] };
    for &t in times {
        let s = fam.at(t)?;
        let report = check_cptp(&s)?;
        let choi = clockdil::numerics::hermitian_part(&s.choi());
        let mut eig = herm_eig(&choi)?.values;
        eig.reverse();
        out.times.push(TimeInfo { t, trace_defect: report.tp_defect, choi_eigenvalues: eig, cptp: report.is_cptp() });
    }
    let json = serde_json::to_string_pretty(&out)?;
    println!("{json}");
    manifest.emit(&cfg.out_dir, "channel_info.json", json.as_bytes())?;
    manifest.finish(&cfg.out_dir)?;
    if out.times.iter().any(|t| !t.cptp) {
        return Err(CliError::Tolerance("channel is not CPTP at some requested time".into()));
    }
    Ok(())
}
