use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64;
use serde_json::{json, Value};
use zigzag_core::exact::{intensity_map, xi_curves, SolverContext, XiCurves};
use zigzag_core::grid::PropagationGrid;
use zigzag_core::integrator::{edge_monitor, integrate, uniform_grid, EdgeReport, LatticeState, Trajectory};
use zigzag_core::lattice::bloch_period;
use zigzag_core::su11::{disentangle, factored_product_2x2, mat2_max_diff, su11_closed_form_2x2, TripleCoefficients};

use crate::compare::{compare_grids, CompareReport};
use crate::config::{resolve_params, ConfigArgs, Format, Method, Metric, ParamSource, RunConfig, DEFAULT_Z_SAMPLES};
use crate::error::{exit, CliError, Result};
use crate::gridio::{read_grid, write_atomic, write_grid, write_xi};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

fn out(w: &mut dyn Write, line: impl std::fmt::Display) {
    // Summary output is best effort; a closed pipe must not turn a finished
    // run into a failure.
    let _ = writeln!(w, "{line}");
}

/// One solver's grid with its metadata.
#[derive(Debug, Clone)]
pub struct GridRun {
    pub grid: PropagationGrid,
    pub meta: Value,
}

/// Everything `simulate` produced.
#[derive(Debug, Clone)]
pub struct SimulateOutput {
    pub numeric: Option<GridRun>,
    pub exact: Option<GridRun>,
    pub edge: Option<EdgeReport>,
    pub report: Option<CompareReport>,
    pub written: Vec<PathBuf>,
    pub exit_code: i32,
}

fn params_json(cfg: &RunConfig) -> Value {
    let p = &cfg.params;
    let mut v = json!({
        "lambda": p.lambda,
        "alpha-plus": p.alpha_plus,
        "alpha-minus": p.alpha_minus,
        "beta": p.beta,
        "input-site": cfg.input_site,
        "sites": cfg.sites,
        "zmax": cfg.z_max,
        "z-samples": cfg.z_samples,
        "m-min": cfg.m_min,
        "m-max": cfg.m_max,
    });
    if let ParamSource::Physical { physical, z_scale } = &cfg.source {
        v["z-scale-per-cm"] = json!(z_scale);
        v["mu-per-cm"] = json!(physical.mu.in_per_cm());
    }
    v
}

fn base_meta(cfg: &RunConfig, solver: &str, wall: f64) -> Value {
    json!({
        "solver": solver,
        "version": VERSION,
        "wall-time-s": wall,
        "config": cfg.echo,
        "resolved": params_json(cfg),
    })
}

pub fn run_numeric(cfg: &RunConfig) -> Result<(GridRun, Trajectory, EdgeReport)> {
    let t0 = Instant::now();
    let init = LatticeState::single_site(cfg.sites, cfg.input_site);
    let traj = integrate(&init, &cfg.params, &cfg.integrator_config())?;
    let edge = edge_monitor(&traj, cfg.edge_threshold);
    let grid = PropagationGrid::from_trajectory(&traj, cfg.m_min..=cfg.m_max, false)?;
    let mut meta = base_meta(cfg, "numeric", t0.elapsed().as_secs_f64());
    meta["integrator"] = json!({
        "method": "rkf45",
        "rtol": cfg.rtol,
        "atol": cfg.atol,
        "accepted-steps": traj.stats.accepted,
        "rejected-steps": traj.stats.rejected,
        "rhs-evaluations": traj.stats.rhs_evals,
    });
    meta["edge-monitor"] = json!({
        "threshold": cfg.edge_threshold,
        "flagged": edge.flagged,
        "worst-ratio": edge.worst_ratio,
        "worst-z": edge.worst_z,
    });
    Ok((GridRun { grid, meta }, traj, edge))
}

pub fn run_exact(cfg: &RunConfig) -> Result<GridRun> {
    let t0 = Instant::now();
    let ctx = SolverContext::new(&cfg.params)?;
    let z = uniform_grid(cfg.z_max, cfg.z_samples);
    let grid = intensity_map(cfg.input_site, &z, cfg.m_min..=cfg.m_max, &ctx, &cfg.policy)?;
    let mut meta = base_meta(cfg, "exact", t0.elapsed().as_secs_f64());
    meta["truncation"] = json!({
        "tail-tol": cfg.policy.tail_tol,
        "consecutive-below": cfg.policy.consecutive_below,
        "k-max": cfg.policy.k_max,
        "flagged-cells": grid.cells.iter().filter(|c| c.flag).count(),
    });
    Ok(GridRun { grid, meta })
}

/// `run.csv` → `run.<tag>.csv`.
pub fn tagged_path(path: &Path, tag: &str, ext: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "grid".into());
    path.with_file_name(format!("{stem}.{tag}.{ext}"))
}

fn describe_grid(w: &mut dyn Write, label: &str, g: &PropagationGrid) {
    let last = g.z.len() - 1;
    out(
        w,
        format!(
            "{label}: {} x {} cells, total intensity {:.6} at Z={} and {:.6} at Z={}",
            g.z.len(),
            g.m.len(),
            g.row_total(0),
            g.z[0],
            g.row_total(last),
            g.z[last]
        ),
    );
}

pub fn run_simulate(cfg: &RunConfig, w: &mut dyn Write) -> Result<SimulateOutput> {
    let p = &cfg.params;
    out(
        w,
        format!(
            "params: lambda={} alpha+={} alpha-={} beta={} | input site {} | Z in [0, {}] ({} samples) | m {}..={}",
            p.lambda, p.alpha_plus, p.alpha_minus, p.beta, cfg.input_site, cfg.z_max, cfg.z_samples, cfg.m_min, cfg.m_max
        ),
    );
    let mut result =
        SimulateOutput { numeric: None, exact: None, edge: None, report: None, written: Vec::new(), exit_code: exit::OK };

    if cfg.method != Method::Exact {
        let (run, traj, edge) = run_numeric(cfg)?;
        out(
            w,
            format!(
                "numeric: {} sites, {} accepted / {} rejected steps, {:.3} s",
                cfg.sites, traj.stats.accepted, traj.stats.rejected, wall(&run.meta)
            ),
        );
        describe_grid(w, "numeric", &run.grid);
        if edge.flagged {
            eprintln!(
                "warning: lattice edge reached (ratio {:.3e} at Z={} > {:.1e}); raise --sites",
                edge.worst_ratio, edge.worst_z, cfg.edge_threshold
            );
        }
        result.numeric = Some(run);
        result.edge = Some(edge);
    }
    if cfg.method != Method::Numeric {
        let run = run_exact(cfg)?;
        let flagged = run.grid.cells.iter().filter(|c| c.flag).count();
        out(w, format!("exact: {flagged} truncated cells, {:.3} s", wall(&run.meta)));
        describe_grid(w, "exact", &run.grid);
        result.exact = Some(run);
    }
    if let (Some(n), Some(e)) = (&result.numeric, &result.exact) {
        let report = compare_grids(&e.grid, &n.grid, cfg.metric, cfg.threshold)?;
        out(
            w,
            format!(
                "compare: maxAbs={:.3e} relL2={:.3e} worst at (Z={}, m={}) -> {} ({} <= {:e})",
                report.max_abs_error,
                report.rel_l2_error,
                report.worst_cell.z,
                report.worst_cell.m,
                if report.pass { "PASS" } else { "FAIL" },
                metric_name(report.metric),
                report.threshold
            ),
        );
        result.report = Some(report);
    }

    if let Some(path) = &cfg.output {
        let ext = cfg.format.extension();
        match (&result.numeric, &result.exact) {
            (Some(n), Some(e)) => {
                for (tag, run) in [("numeric", n), ("exact", e)] {
                    let p = tagged_path(path, tag, ext);
                    write_grid(&p, &run.grid, &run.meta, cfg.format)?;
                    result.written.push(p);
                }
                let p = tagged_path(path, "compare", "json");
                let report = serde_json::to_vec_pretty(result.report.as_ref().unwrap()).expect("report serializes");
                write_atomic(&p, &report)?;
                result.written.push(p);
            }
            (Some(run), None) | (None, Some(run)) => {
                write_grid(path, &run.grid, &run.meta, cfg.format)?;
                result.written.push(path.clone());
            }
            (None, None) => unreachable!(),
        }
        for p in &result.written {
            out(w, format!("wrote {}", p.display()));
        }
    }

    let flagged = result.exact.as_ref().is_some_and(|e| e.grid.any_flagged());
    result.exit_code = if flagged && !cfg.allow_flags {
        eprintln!("error: truncation flags present (k-max reached before the tail converged); pass --allow-flags to accept");
        exit::FLAGGED
    } else if result.report.as_ref().is_some_and(|r| !r.pass) {
        exit::THRESHOLD
    } else {
        exit::OK
    };
    Ok(result)
}

fn wall(meta: &Value) -> f64 {
    meta["wall-time-s"].as_f64().unwrap_or(0.0)
}

fn metric_name(m: Metric) -> &'static str {
    match m {
        Metric::RelL2 => "relL2",
        Metric::MaxAbs => "maxAbs",
    }
}

/// Compares two grid files; `a` is the reference for the relative norm.
pub fn run_compare(
    a: &Path,
    b: &Path,
    metric: Metric,
    threshold: f64,
    report_path: Option<&Path>,
    w: &mut dyn Write,
) -> Result<(CompareReport, i32)> {
    let (ga, _) = read_grid(a)?;
    let (gb, _) = read_grid(b)?;
    let report = compare_grids(&ga, &gb, metric, threshold)?;
    out(w, format!("maxAbs {:e}", report.max_abs_error));
    out(w, format!("relL2 {:e}", report.rel_l2_error));
    out(w, format!("worst Z={} m={}", report.worst_cell.z, report.worst_cell.m));
    out(w, format!("{} {} <= {:e}", if report.pass { "PASS" } else { "FAIL" }, metric_name(metric), threshold));
    if let Some(p) = report_path {
        write_atomic(p, &serde_json::to_vec_pretty(&report).expect("report serializes"))?;
    }
    let code = if report.pass { exit::OK } else { exit::THRESHOLD };
    Ok((report, code))
}

/// Bloch period to four decimals.
pub fn run_period(lambda: f64, beta: f64, w: &mut dyn Write) -> Result<f64> {
    let zp = bloch_period(lambda, beta)?;
    out(w, format!("{zp:.4}"));
    Ok(zp)
}

pub fn run_xi(args: &ConfigArgs, w: &mut dyn Write) -> Result<XiCurves> {
    let mut missing = Vec::new();
    let resolved = resolve_params(args, &mut missing)?;
    if args.zmax.is_none() {
        missing.push("zmax".into());
    }
    if !missing.is_empty() {
        return Err(CliError::MissingKeys(missing));
    }
    let (params, _) = resolved.expect("parameter keys present");
    let z_max = args.zmax.unwrap();
    let samples = args.z_samples.unwrap_or(DEFAULT_Z_SAMPLES);
    if !(z_max.is_finite() && z_max > 0.0) {
        return Err(CliError::Config(format!("--zmax / \"zmax\": must be positive, got {z_max}")));
    }
    if samples < 2 {
        return Err(CliError::Config(format!("--z-samples / \"z-samples\": needs at least 2 samples, got {samples}")));
    }
    let ctx = SolverContext::new(&params)?;
    let curves = xi_curves(&uniform_grid(z_max, samples), &ctx);
    let (mp, mm) = (curves.max_abs_plus(), curves.max_abs_minus());
    out(w, format!("max |xi+| = {mp:.6}"));
    out(w, format!("max |xi-| = {mm:.6}"));
    out(w, format!("dominant: {}", if mp > mm { "xi+ (amplification)" } else { "xi- (attenuation)" }));
    if let Some(path) = &args.output {
        let format = args.format.unwrap_or_else(|| Format::from_path(path));
        let meta = json!({
            "version": VERSION,
            "config": args.to_json(),
            "resolved": {"lambda": params.lambda, "alpha-plus": params.alpha_plus,
                         "alpha-minus": params.alpha_minus, "beta": params.beta},
        });
        write_xi(path, &curves, &meta, format)?;
        out(w, format!("wrote {}", path.display()));
    }
    Ok(curves)
}

/// Parses `re,im` or a bare real number.
pub fn parse_complex(s: &str) -> std::result::Result<Complex64, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let num = |t: &str| t.parse::<f64>().map_err(|_| format!("'{s}' is not a number or a re,im pair"));
    match parts.as_slice() {
        [re] => Ok(Complex64::new(num(re)?, 0.0)),
        [re, im] => Ok(Complex64::new(num(re)?, num(im)?)),
        _ => Err(format!("'{s}' is not a number or a re,im pair")),
    }
}

fn fmt_c(z: Complex64) -> String {
    format!("{:?},{:?}", z.re, z.im)
}

pub fn run_disentangle(t: &TripleCoefficients, w: &mut dyn Write) -> Result<f64> {
    let ff = disentangle(t)?;
    let residual = mat2_max_diff(&factored_product_2x2(&ff), &su11_closed_form_2x2(t));
    out(w, format!("f {}", fmt_c(ff.f)));
    out(w, format!("g {}", fmt_c(ff.g)));
    out(w, format!("h {}", fmt_c(ff.h)));
    out(w, format!("exp(-g/2) {}", fmt_c(ff.exp_neg_half_g)));
    out(w, format!("residual {residual:e}"));
    Ok(residual)
}
