use std::io::Write;
use std::path::Path;

use manifold_points::counter::{count_a, scan, BoundKind, CountFlags, CountReport, Method};
use manifold_points::expsum::{block_params_with, run_chain, ChainSummary, Window};
use manifold_points::manifold::{presets, DEFAULT_SAFETY};
use manifold_points::metric::{
    build_cover, classify_convergence, critical_exponents, series_partial_sum, Convergence, CoverSummary,
    CriticalExponents, SeriesResult, SeriesSpec,
};
use manifold_points::scalar::{format_rational, rational_to_f64};
use manifold_points::{
    estimate_constants, ApproxFunction, Error, ManifoldFile, MongeMap, Rational, Scalar, Shift,
};
use serde::Serialize;

use crate::config::{Arithmetic, Format, RunConfig, DEFAULT_QMIN, DEFAULT_SERIES_QMAX};
use crate::{verify, CliError, Command, Status};

pub const SCAN_HEADER: [&str; 9] = [
    "q",
    "psi_q",
    "A",
    "heuristic",
    "trivial",
    "bound_rhs",
    "ratio_A_over_heuristic",
    "borderline",
    "micros",
];

/// One row of the `scan` CSV.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanRow {
    pub q: u64,
    pub psi_q: f64,
    #[serde(rename = "A")]
    pub a: u64,
    pub heuristic: f64,
    pub trivial: u128,
    pub bound_rhs: f64,
    #[serde(rename = "ratio_A_over_heuristic")]
    pub ratio: f64,
    pub borderline: u64,
    pub micros: u128,
}

impl ScanRow {
    pub fn new(r: &CountReport, no_timing: bool) -> Self {
        ScanRow {
            q: r.q,
            psi_q: r.psi_q,
            a: r.count,
            heuristic: r.heuristic,
            trivial: r.trivial,
            bound_rhs: r.bound_thm,
            ratio: r.ratio_to_heuristic(),
            borderline: r.borderline,
            micros: if no_timing { 0 } else { r.elapsed.as_micros() },
        }
    }
}

#[derive(Serialize)]
struct CountJson {
    #[serde(flatten)]
    row: ScanRow,
    bound_kind: BoundKind,
    visited: u64,
    method: Method,
    arithmetic: &'static str,
    flags: CountFlags,
}

pub fn run(command: Command, cfg: &RunConfig, out: &mut dyn Write, diag: &mut dyn Write) -> Result<Status, CliError> {
    match command {
        Command::Count => cmd_count(cfg, out),
        Command::Scan => cmd_scan(cfg, out),
        Command::Bounds => cmd_bounds(cfg, out, diag),
        Command::Series => cmd_series(cfg, out),
        Command::Cover => cmd_cover(cfg, out, diag),
        Command::Verify => verify::cmd_verify(cfg, out),
        Command::Presets => cmd_presets(out),
    }
}

pub fn load_map<T: Scalar>(spec: &str) -> Result<MongeMap<T>, CliError> {
    if spec.ends_with(".toml") || Path::new(spec).is_file() {
        let text = std::fs::read_to_string(spec)
            .map_err(|e| CliError::Usage(format!("cannot read manifold file `{spec}`: {e}")))?;
        Ok(ManifoldFile::parse(&text)?.build()?)
    } else {
        Ok(presets::by_name(spec)?)
    }
}

pub fn shift_for<T: Scalar>(cfg: &RunConfig, d: usize, m: usize) -> Result<Shift<T>, CliError> {
    match &cfg.theta {
        None => Ok(Shift::zero(d, m)),
        Some(values) => Ok(Shift::from_flat(values.iter().map(T::from_rational).collect(), d, m)?),
    }
}

fn require<T: Copy>(value: Option<T>, flag: &str) -> Result<T, CliError> {
    value.ok_or_else(|| CliError::Usage(format!("missing --{flag}")))
}

fn require_psi(cfg: &RunConfig) -> Result<&ApproxFunction, CliError> {
    cfg.psi.as_ref().ok_or_else(|| CliError::Usage("missing --psi".into()))
}

/// Whether the computation runs over exact rationals.
fn exact_mode(cfg: &RunConfig, psi: &ApproxFunction, qs: &[u64]) -> bool {
    match cfg.arithmetic {
        Arithmetic::Exact => true,
        Arithmetic::Float => false,
        Arithmetic::Auto => qs.iter().all(|&q| psi.eval_exact(q).is_some()),
    }
}

fn arithmetic_name(exact: bool) -> &'static str {
    if exact {
        "exact"
    } else {
        "float"
    }
}

fn default_grid(d: usize) -> usize {
    match d {
        1 => 256,
        2 => 64,
        3 => 16,
        _ => 6,
    }
}

fn write_json<S: Serialize + ?Sized>(out: &mut dyn Write, value: &S) -> Result<(), CliError> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out)?;
    Ok(())
}

fn csv_writer(out: &mut dyn Write) -> csv::Writer<&mut dyn Write> {
    csv::WriterBuilder::new().has_headers(false).from_writer(out)
}

fn count_generic<T: Scalar>(cfg: &RunConfig, psi: &ApproxFunction, q: u64) -> Result<CountReport, CliError> {
    let map = load_map::<T>(&cfg.manifold)?;
    let theta = shift_for::<T>(cfg, map.d(), map.m())?;
    Ok(count_a(&map, psi, &theta, q, cfg.method)?)
}

pub fn cmd_count(cfg: &RunConfig, out: &mut dyn Write) -> Result<Status, CliError> {
    let psi = require_psi(cfg)?;
    let q = require(cfg.q, "q")?;
    let exact = exact_mode(cfg, psi, &[q]);
    let report = if exact {
        count_generic::<Rational>(cfg, psi, q)?
    } else {
        count_generic::<f64>(cfg, psi, q)?
    };
    let row = ScanRow::new(&report, cfg.no_timing);
    match cfg.format.unwrap_or(Format::Json) {
        Format::Json => write_json(
            out,
            &CountJson {
                row,
                bound_kind: report.bound_kind,
                visited: report.visited,
                method: cfg.method,
                arithmetic: arithmetic_name(exact),
                flags: report.flags,
            },
        )?,
        Format::Csv => {
            let mut w = csv_writer(out);
            w.write_record(SCAN_HEADER)?;
            w.serialize(row)?;
            w.flush()?;
        }
    }
    Ok(Status::Success)
}

fn scan_generic<T: Scalar>(cfg: &RunConfig, psi: &ApproxFunction, lo: u64, hi: u64) -> Result<Vec<CountReport>, CliError> {
    let map = load_map::<T>(&cfg.manifold)?;
    let theta = shift_for::<T>(cfg, map.d(), map.m())?;
    let bound = BoundKind::default_for(map.d(), map.m());
    Ok(scan(&map, psi, &theta, lo, hi, cfg.method, bound)?)
}

/// Rows for every support member in `[qmin, qmax]`, increasing in `q`.
pub fn scan_rows(cfg: &RunConfig) -> Result<Vec<ScanRow>, CliError> {
    let psi = require_psi(cfg)?;
    let hi = cfg.qmax.or(cfg.q).ok_or_else(|| CliError::Usage("missing --qmax".into()))?;
    let lo = cfg.qmin.unwrap_or(DEFAULT_QMIN).max(1);
    let qs = psi.support_in(lo, hi);
    let reports = if qs.is_empty() {
        Vec::new()
    } else if exact_mode(cfg, psi, &qs) {
        scan_generic::<Rational>(cfg, psi, lo, hi)?
    } else {
        scan_generic::<f64>(cfg, psi, lo, hi)?
    };
    Ok(reports.iter().map(|r| ScanRow::new(r, cfg.no_timing)).collect())
}

pub fn cmd_scan(cfg: &RunConfig, out: &mut dyn Write) -> Result<Status, CliError> {
    let rows = scan_rows(cfg)?;
    match cfg.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut w = csv_writer(out);
            w.write_record(SCAN_HEADER)?;
            for row in &rows {
                w.serialize(row)?;
            }
            w.flush()?;
        }
        Format::Json => write_json(out, &rows)?,
    }
    Ok(Status::Success)
}

fn bounds_generic<T: Scalar>(cfg: &RunConfig, psi: &ApproxFunction, q: u64) -> Result<ChainSummary, CliError> {
    let map = load_map::<T>(&cfg.manifold)?;
    let theta = shift_for::<T>(cfg, map.d(), map.m())?;
    let c1 = match &cfg.taylor_c1 {
        Some(c) => rational_to_f64(c),
        None => estimate_constants(&map, default_grid(map.d()), DEFAULT_SAFETY)?.taylor_c1,
    };
    let psi_q: T = psi.eval_as(q)?;
    let params = block_params_with(q, psi_q.as_f64(), c1, cfg.window)?;
    Ok(run_chain(&map, &psi_q, &theta, &params, cfg.budget as u128)?)
}

pub fn chain_summary(cfg: &RunConfig) -> Result<ChainSummary, CliError> {
    let psi = require_psi(cfg)?;
    let q = require(cfg.q, "q")?;
    if !psi.in_support(q) {
        return Err(CliError::Usage(format!("--q: {q} is outside the support of psi")));
    }
    if exact_mode(cfg, psi, &[q]) {
        bounds_generic::<Rational>(cfg, psi, q)
    } else {
        bounds_generic::<f64>(cfg, psi, q)
    }
}

pub fn cmd_bounds(cfg: &RunConfig, out: &mut dyn Write, diag: &mut dyn Write) -> Result<Status, CliError> {
    let summary = chain_summary(cfg)?;
    match cfg.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let d = summary.blocks.first().map_or(1, |b| b.u.len());
            let mut header: Vec<String> = if d == 1 {
                vec!["u".into()]
            } else {
                (1..=d).map(|i| format!("u{i}")).collect()
            };
            header.extend(["A_u", "B_u", "B_star", "chain_ok"].map(String::from));
            let mut w = csv_writer(out);
            w.write_record(&header)?;
            for b in &summary.blocks {
                let mut rec: Vec<String> = b.u.iter().map(u64::to_string).collect();
                rec.push(b.a_u.to_string());
                rec.push(b.b_u.to_string());
                rec.push(b.b_star.to_string());
                rec.push(b.chain_ok.to_string());
                w.write_record(&rec)?;
            }
            w.flush()?;
        }
        Format::Json => write_json(out, &summary)?,
    }
    let p = &summary.params;
    writeln!(
        diag,
        "q={} psi={} C1={} r={} H={} blocks={} window={}",
        p.q,
        p.psi_q,
        p.c1,
        p.r,
        p.h,
        summary.blocks.len(),
        match p.window {
            Window::Paper => "paper",
            Window::Half => "half",
        }
    )?;
    writeln!(diag, "sum of A_u = {}, A = {}", summary.sum_a_u, summary.a_total)?;
    writeln!(diag, "blocks with A_u > B_u: {}", summary.a_gt_b)?;
    writeln!(diag, "blocks with B_u > (pi^2/4)^m B*_u: {}", summary.b_gt_b_star)?;
    writeln!(diag, "blocks with imaginary residue: {}", summary.imag_violations)?;
    writeln!(diag, "blocks above the magnitude bound: {}", summary.magnitude_violations)?;
    writeln!(diag, "largest gap between summation orders: {:.3e}", summary.max_order_gap)?;
    Ok(if summary.all_ok() { Status::Success } else { Status::Violation })
}

#[derive(Debug, Serialize)]
pub struct SeriesReport {
    pub psi: String,
    pub support: String,
    pub d: usize,
    pub m: usize,
    pub s: String,
    pub partial_sum: f64,
    /// `n - (s+m)(1+τ)`, the power of `q` in each term.
    pub exponent: Option<String>,
    pub classification: String,
    pub series: SeriesResult,
    pub critical_exponents: CriticalExponents,
}

pub fn series_report(cfg: &RunConfig) -> Result<SeriesReport, CliError> {
    let psi = match (&cfg.psi, &cfg.tau) {
        (Some(p), _) => p.clone(),
        (None, Some(t)) => ApproxFunction::power(t.clone())?,
        (None, None) => return Err(CliError::Usage("missing --psi or --tau".into())),
    };
    let (d, m) = match (cfg.d, cfg.m) {
        (Some(d), Some(m)) => (d, m),
        _ => {
            let map = load_map::<f64>(&cfg.manifold)?;
            (cfg.d.unwrap_or(map.d()), cfg.m.unwrap_or(map.m()))
        }
    };
    let s = cfg.s.clone().ok_or_else(|| CliError::Usage("missing --s".into()))?;
    let spec = SeriesSpec::new(psi.clone(), s.clone(), d, m, cfg.qmax.unwrap_or(DEFAULT_SERIES_QMAX))?;
    let series = series_partial_sum(&spec)?;
    let classification = match classify_convergence(&spec) {
        Ok(Convergence::Converges) => "converges",
        Ok(Convergence::Diverges) => "diverges",
        Ok(Convergence::BoundaryLog) => "boundary_log",
        Err(Error::Unsupported(_)) => "unclassified",
        Err(e) => return Err(e.into()),
    };
    let tau = psi.exponents().map(|(t, _)| t);
    Ok(SeriesReport {
        psi: psi.to_string(),
        support: psi.support.to_string(),
        d,
        m,
        s: format_rational(&s),
        partial_sum: series.partial_sum,
        exponent: spec.exponent().map(|e| format_rational(&e)),
        classification: classification.into(),
        series,
        critical_exponents: critical_exponents(d, m, tau.as_ref())?,
    })
}

pub fn cmd_series(cfg: &RunConfig, out: &mut dyn Write) -> Result<Status, CliError> {
    write_json(out, &series_report(cfg)?)?;
    Ok(Status::Success)
}

fn cover_generic<T: Scalar>(cfg: &RunConfig, psi: &ApproxFunction, qs: &[u64], s: f64) -> Result<Vec<CoverSummary>, CliError> {
    let map = load_map::<T>(&cfg.manifold)?;
    let theta = shift_for::<T>(cfg, map.d(), map.m())?;
    let c1 = match &cfg.lipschitz {
        Some(c) => rational_to_f64(c),
        None => estimate_constants(&map, default_grid(map.d()), DEFAULT_SAFETY)?.lipschitz_c1,
    };
    qs.iter()
        .map(|&q| {
            let psi_q: T = psi.eval_as(q)?;
            Ok(build_cover(&map, &psi_q, &theta, q, s, c1)?)
        })
        .collect()
}

pub fn cover_summaries(cfg: &RunConfig) -> Result<Vec<CoverSummary>, CliError> {
    let psi = require_psi(cfg)?;
    let qs = match (cfg.q, cfg.qmax) {
        (Some(q), None) => vec![q],
        (q, Some(hi)) => psi.support_in(cfg.qmin.or(q).unwrap_or(DEFAULT_QMIN).max(1), hi),
        (None, None) => return Err(CliError::Usage("missing --q or --qmax".into())),
    };
    let s = cfg.s.as_ref().map_or(1.0, rational_to_f64);
    if exact_mode(cfg, psi, &qs) {
        cover_generic::<Rational>(cfg, psi, &qs, s)
    } else {
        cover_generic::<f64>(cfg, psi, &qs, s)
    }
}

pub fn cmd_cover(cfg: &RunConfig, out: &mut dyn Write, diag: &mut dyn Write) -> Result<Status, CliError> {
    let summaries = cover_summaries(cfg)?;
    let map = load_map::<f64>(&cfg.manifold)?;
    match cfg.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut header = vec!["q".to_string()];
            header.extend((1..=map.d()).map(|i| format!("a{i}")));
            header.extend((1..=map.m()).map(|j| format!("b{j}")));
            header.extend(["diameter", "s_power"].map(String::from));
            let mut w = csv_writer(out);
            w.write_record(&header)?;
            for cell in summaries.iter().flat_map(|s| &s.cells) {
                let mut rec = vec![cell.q.to_string()];
                rec.extend(cell.a.iter().map(i64::to_string));
                rec.extend(cell.b.iter().map(i64::to_string));
                rec.push(cell.diameter.to_string());
                rec.push(cell.s_power.to_string());
                w.write_record(&rec)?;
            }
            w.flush()?;
        }
        Format::Json => write_json(out, &summaries)?,
    }
    let mut ok = true;
    for s in &summaries {
        let bound = match s.bound_count {
            Some(b) => b.to_string(),
            None => "n/a".into(),
        };
        writeln!(
            diag,
            "q={} cells={} A(q, c2 psi)={} (c2={}, applies={}) sum diam^s={} cap={}",
            s.q,
            s.cells.len(),
            bound,
            s.c2,
            s.bound_applies,
            s.sum_s_power,
            s.diameter_cap
        )?;
        ok &= s.count_ok() && s.diameters_ok() && s.sum_ok();
    }
    Ok(if ok { Status::Success } else { Status::Violation })
}

pub fn cmd_presets(out: &mut dyn Write) -> Result<Status, CliError> {
    for p in presets::PRESETS {
        writeln!(out, "{:<30} {}", p.syntax, p.description)?;
    }
    Ok(Status::Success)
}

