use std::fs;
use std::path::PathBuf;

use clap::{Args, Subcommand};

use gradsense::analysis::{
    boundary_completeness, gramian, interior_grid, interior_point_grid, locus_check,
    positive_definite_test, rank_test, scan_locations, ScanLocation,
};
use gradsense::reconstruct::{gradient_trace, reconstruct_gradient};
use gradsense::sensing::SensorGeometry;
use gradsense::simulate::{add_noise, simulate_outputs, time_grid, OutputRecord, StateCoeffs};
use gradsense::Error;

use crate::config::{parse_config, RunConfig, Setup};
use crate::error::{CliError, CliResult, EXIT_NOT_STRATEGIC, EXIT_OK};
use crate::report::{
    fmt_f64, read_outputs, to_json, write_all, CoefficientEntry, GramianReport, ReconstructionReport,
    SensorLocus, Table, VerdictReport, TOOL_VERSION,
};

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// TOML run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Directory for output files, created if missing.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Overrides `noise.seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Print the report as JSON on stdout.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Rank test, locus rules and Gramian for the configured suite; writes report.json.
    Check(Common),
    /// Rank test with the first sensor moved over a grid; writes scan.csv.
    Scan {
        #[command(flatten)]
        common: Common,
        /// `NXxNY` for interior templates, `N` for boundary templates.
        #[arg(long)]
        grid: String,
    },
    /// Sensor outputs of the configured initial state; writes outputs.csv.
    Simulate(Common),
    /// Recovers the gradient trace on gamma from an outputs CSV; writes
    /// reconstruction.json and trace.csv.
    Reconstruct {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        outputs: PathBuf,
    },
    /// Spectrum of the truncated observability Gramian; writes gramian.json.
    Gramian(Common),
}

struct Loaded {
    cfg: RunConfig,
    setup: Setup,
}

fn load(common: &Common) -> CliResult<Loaded> {
    let text = fs::read_to_string(&common.config)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", common.config.display())))?;
    let cfg = parse_config(&text)?;
    let mut setup = cfg.resolve()?;
    if let Some(seed) = common.seed {
        setup.seed = seed;
    }
    Ok(Loaded { cfg, setup })
}

fn require_sensors(setup: &Setup) -> CliResult<()> {
    if setup.suite.is_empty() {
        Err(CliError::config("sensors", "at least one sensor is required"))
    } else {
        Ok(())
    }
}

fn emit(common: &Common, json: &str, summary: &str) {
    if common.json {
        print!("{json}");
    } else {
        println!("{summary}");
    }
}

pub fn dispatch(cmd: Command) -> CliResult<i32> {
    match cmd {
        Command::Check(c) => check(&c),
        Command::Scan { common, grid } => scan(&common, &grid),
        Command::Simulate(c) => simulate(&c),
        Command::Reconstruct { common, outputs } => reconstruct(&common, &outputs),
        Command::Gramian(c) => gramian_cmd(&c),
    }
}

pub fn build_verdict_report(cfg: &RunConfig, s: &Setup) -> CliResult<VerdictReport> {
    require_sensors(s)?;
    let verdict = rank_test(&s.suite, &s.modeset, &s.gamma, &s.quad, s.rank_tol)?;
    let locus = s
        .suite
        .sensors
        .iter()
        .enumerate()
        .map(|(index, sensor)| match locus_check(sensor, &s.domain, &s.gamma, s.modeset.order()) {
            Ok(report) => Ok(SensorLocus {
                index,
                kind: sensor.kind(),
                report: Some(report),
                declined: None,
            }),
            Err(e @ Error::IrrationalUnsupported(_)) => Ok(SensorLocus {
                index,
                kind: sensor.kind(),
                report: None,
                declined: Some(e.to_string()),
            }),
            Err(e) => Err(CliError::from(e)),
        })
        .collect::<CliResult<Vec<_>>>()?;
    let gram = gramian(&s.suite, &s.modeset, s.horizon, &s.quad)?;
    let completeness = boundary_completeness(&s.modeset, &s.gamma, &s.quad, s.rank_tol)?;
    Ok(VerdictReport {
        tool_version: TOOL_VERSION.into(),
        config: cfg.clone(),
        verdict,
        locus,
        gramian: gram.summary(),
        gramian_positive_definite: positive_definite_test(&gram, s.pd_tol),
        completeness,
        simple_spectrum: s.modeset.is_simple_spectrum(),
    })
}

fn check(common: &Common) -> CliResult<i32> {
    let Loaded { cfg, setup } = load(common)?;
    let report = build_verdict_report(&cfg, &setup)?;
    let json = to_json(&report)?;
    write_all(&common.out, &[("report.json", json.clone())])?;
    let v = &report.verdict;
    let mut summary = format!(
        "strategic: {} (q = {}, r = {}, J = {}, sigma_min = {:e}, threshold = {:e})",
        v.strategic,
        v.q,
        v.r,
        v.order,
        v.sigma_min_overall(),
        v.threshold
    );
    for &k in &v.failing_groups {
        let g = &v.per_group[k];
        summary.push_str(&format!(
            "\n  failing group lambda = {:.6}: rank {} of {}",
            g.eigenvalue, g.rank, g.multiplicity
        ));
    }
    for l in &report.locus {
        if let Some(r) = l.report.as_ref().filter(|r| r.non_strategic_by_locus) {
            summary.push_str(&format!(
                "\n  sensor {} ruled out by {}: {}",
                l.index,
                r.matched_rule.as_str(),
                r.witness.as_deref().unwrap_or("")
            ));
        }
    }
    emit(common, &json, &summary);
    Ok(if v.strategic { EXIT_OK } else { EXIT_NOT_STRATEGIC })
}

fn parse_grid(spec: &str) -> CliResult<(usize, usize)> {
    let bad = || CliError::Usage(format!("--grid {spec:?}: expected NXxNY or N with counts >= 1"));
    let (nx, ny) = match spec.split_once(['x', 'X']) {
        Some((a, b)) => (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?),
        None => (spec.trim().parse().map_err(|_| bad())?, 1),
    };
    if nx == 0 || ny == 0 {
        return Err(bad());
    }
    Ok((nx, ny))
}

fn scan(common: &Common, grid_spec: &str) -> CliResult<i32> {
    let (nx, ny) = parse_grid(grid_spec)?;
    let Loaded { setup: s, .. } = load(common)?;
    require_sensors(&s)?;
    let template = &s.suite.sensors[0];
    let boundary = match &template.geometry {
        SensorGeometry::BoundaryPointwise { side, .. } => Some(*side),
        SensorGeometry::BoundaryZone { segments } => Some(segments[0].side()),
        _ => None,
    };
    let grid: Vec<ScanLocation> = match boundary {
        Some(side) => {
            if ny != 1 {
                return Err(CliError::Usage(format!(
                    "--grid {grid_spec:?}: boundary templates take a single count N"
                )));
            }
            interior_grid(0.0, s.domain.side_length(side), nx)
                .into_iter()
                .map(|arc| ScanLocation::Arc { side, s: arc })
                .collect()
        }
        None => interior_point_grid(&s.domain, nx, ny),
    };
    let records = scan_locations(template, &grid, &s.modeset, &s.gamma, &s.quad, s.rank_tol)?;

    let header: &[&str] = if boundary.is_some() {
        &["side", "s", "strategic", "sigma_min", "sigma_max", "status"]
    } else {
        &["x", "y", "strategic", "sigma_min", "sigma_max", "status"]
    };
    let mut table = Table::new(header)?;
    let mut computed = 0;
    let mut strategic = 0;
    for rec in &records {
        let (a, b) = match rec.location {
            ScanLocation::Point { x, y } => (fmt_f64(x), fmt_f64(y)),
            ScanLocation::Arc { side, s } => (side.as_str().to_string(), fmt_f64(s)),
        };
        match &rec.outcome {
            Ok(o) => {
                computed += 1;
                strategic += usize::from(o.strategic);
                table.row(&[
                    a,
                    b,
                    o.strategic.to_string(),
                    fmt_f64(o.sigma_min_overall),
                    fmt_f64(o.sigma_max),
                    "ok".into(),
                ])?;
            }
            Err(e) => table.row(&[a, b, String::new(), String::new(), String::new(), format!("error: {e}")])?,
        }
    }
    if computed == 0 {
        return Err(CliError::Numerical("no scan row could be computed".into()));
    }
    let csv = table.into_string()?;
    write_all(&common.out, &[("scan.csv", csv.clone())])?;
    let summary = format!(
        "scanned {} locations: {} strategic, {} not strategic, {} failed",
        records.len(),
        strategic,
        computed - strategic,
        records.len() - computed
    );
    emit(common, &csv, &summary);
    Ok(EXIT_OK)
}

fn initial_state(cfg: &RunConfig, s: &Setup, command: &str) -> CliResult<StateCoeffs> {
    cfg.initial_coeffs(s)?
        .ok_or_else(|| CliError::config("initial_state", format!("required by {command}")))
}

fn outputs_csv(record: &OutputRecord) -> CliResult<String> {
    let mut header = vec!["t".to_string()];
    header.extend((1..=record.q()).map(|i| format!("y_{i}")));
    let mut table = Table::new(&header)?;
    for (t, row) in record.times.iter().zip(&record.samples) {
        let mut fields = vec![fmt_f64(*t)];
        fields.extend(row.iter().map(|&y| fmt_f64(y)));
        table.row(&fields)?;
    }
    table.into_string()
}

fn simulate(common: &Common) -> CliResult<i32> {
    let Loaded { cfg, setup: s } = load(common)?;
    require_sensors(&s)?;
    let coeffs = initial_state(&cfg, &s, "simulate")?;
    let clean = simulate_outputs(&s.suite, &coeffs, &s.modeset, s.horizon, s.dt, &s.quad)?;
    let record = add_noise(&clean, s.sigma, s.seed)?;
    let csv = outputs_csv(&record)?;
    write_all(&common.out, &[("outputs.csv", csv.clone())])?;
    let summary = format!(
        "simulated {} samples of {} outputs over [0, {}] (sigma = {}, seed = {})",
        record.len(),
        record.q(),
        s.horizon,
        s.sigma,
        s.seed
    );
    emit(common, &csv, &summary);
    Ok(EXIT_OK)
}

fn reconstruct(common: &Common, outputs: &PathBuf) -> CliResult<i32> {
    let Loaded { cfg, setup: s } = load(common)?;
    require_sensors(&s)?;
    let text = fs::read_to_string(outputs)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", outputs.display())))?;
    let (header, times, samples) = read_outputs(&text)?;
    let q = s.suite.len();
    if header.len() != q + 1 {
        return Err(CliError::Data(format!(
            "{} has {} output columns, the configuration has {q} sensors",
            outputs.display(),
            header.len().saturating_sub(1)
        )));
    }
    let expected = time_grid(s.horizon, s.dt)?;
    if times.len() != expected.len() {
        return Err(CliError::Data(format!(
            "{} has {} samples, the configured time grid has {}",
            outputs.display(),
            times.len(),
            expected.len()
        )));
    }
    let slack = 1e-9 * s.horizon;
    if let Some((k, (t, e))) = times
        .iter()
        .zip(&expected)
        .enumerate()
        .find(|(_, (t, e))| !((*t - *e).abs() <= slack))
    {
        return Err(CliError::Data(format!("sample {k}: t = {t}, expected {e}")));
    }
    let record = OutputRecord {
        times: expected,
        samples,
        noise_sigma: s.sigma,
    };
    let truth = cfg.initial_coeffs(&s)?;
    let lambda = s.reg_lambda.unwrap_or(s.sigma * s.sigma * record.len() as f64);
    let result = reconstruct_gradient(&record, &s.suite, &s.modeset, &s.gamma, lambda, &s.quad, truth.as_ref())?;

    let est = &result.estimated_coeffs;
    let coefficient_error = truth.as_ref().map(|t| {
        let diff: f64 = t
            .values()
            .iter()
            .zip(est.values())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let norm = t.norm();
        if norm > 0.0 { diff / norm } else { diff }
    });
    let report = ReconstructionReport {
        tool_version: TOOL_VERSION.into(),
        samples: record.len(),
        channels: q,
        regularization: result.regularization,
        residual: result.residual,
        rcond: result.rcond,
        err_gamma: result.err_gamma,
        err_boundary: result.err_boundary,
        coefficient_error,
        estimated_coeffs: s
            .modeset
            .modes()
            .iter()
            .zip(est.values())
            .map(|(m, &value)| CoefficientEntry {
                n: m.index.n,
                m: m.index.m,
                value,
            })
            .collect(),
    };

    let trace = &result.trace_on_gamma;
    let true_trace = truth
        .as_ref()
        .map(|t| gradient_trace(t, &s.modeset, &s.gamma, trace.arc.len()))
        .transpose()?
        .map(|tr| tr.tangential_normal());
    let mut table = Table::new(&["s", "g_tangential", "g_normal", "g_true_tangential", "g_true_normal"])?;
    for (k, (s_arc, (gt, gn))) in trace.arc.iter().zip(trace.tangential_normal()).enumerate() {
        let (tt, tn) = match &true_trace {
            Some(v) => (fmt_f64(v[k].0), fmt_f64(v[k].1)),
            None => (String::new(), String::new()),
        };
        table.row(&[fmt_f64(*s_arc), fmt_f64(gt), fmt_f64(gn), tt, tn])?;
    }
    let json = to_json(&report)?;
    write_all(
        &common.out,
        &[("reconstruction.json", json.clone()), ("trace.csv", table.into_string()?)],
    )?;
    let fmt_opt = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{x:e}"));
    let summary = format!(
        "reconstructed {} coefficients: residual = {:e}, rcond = {:e}, err_gamma = {}, err_boundary = {}",
        report.estimated_coeffs.len(),
        report.residual,
        report.rcond,
        fmt_opt(report.err_gamma),
        fmt_opt(report.err_boundary)
    );
    emit(common, &json, &summary);
    Ok(EXIT_OK)
}

fn gramian_cmd(common: &Common) -> CliResult<i32> {
    let Loaded { setup: s, .. } = load(common)?;
    require_sensors(&s)?;
    let gram = gramian(&s.suite, &s.modeset, s.horizon, &s.quad)?;
    let report = GramianReport {
        tool_version: TOOL_VERSION.into(),
        summary: gram.summary(),
        pd_tol: s.pd_tol,
        positive_definite: positive_definite_test(&gram, s.pd_tol),
        eigenvalues: gram.eigenvalues.clone(),
    };
    let json = to_json(&report)?;
    write_all(&common.out, &[("gramian.json", json.clone())])?;
    let sm = &report.summary;
    let summary = format!(
        "gramian {}x{} over T = {}: min = {:e}, max = {:e}, condition = {}, positive definite: {}",
        sm.dimension,
        sm.dimension,
        sm.horizon,
        sm.min_eigenvalue,
        sm.max_eigenvalue,
        sm.condition.map_or("inf".to_string(), |c| format!("{c:e}")),
        report.positive_definite
    );
    emit(common, &json, &summary);
    Ok(EXIT_OK)
}
