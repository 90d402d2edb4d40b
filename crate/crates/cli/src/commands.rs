//! The four pipeline commands. Each writes its outputs plus a manifest into
//! the output directory; manifests are written on failure paths too, with
//! the failing stage recorded.

use crate::config::{Config, ConfigError};
use nuspectral::estimator::{self, SpectralEstimate};
use nuspectral::models::gp_simulate;
use nuspectral::nufourier::FrequencyGrid;
use nuspectral::sampling::{
    self, generate_gappy_grid, generate_jittered_grid, generate_uniform, write_atomic, Domain,
    SampleSet,
};
use nuspectral::weights::{
    self, forward_weights, omega_guidance, MethodTag, QuadratureWeights, SolveReport,
};
use nuspectral::windows::{self, WindowFunction};
use serde::Serialize;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

/// Exit code classification.
pub enum CmdError {
    /// Configuration or input problem (exit 2).
    Input(String),
    /// Numerical failure (exit 3).
    Numerical(String),
}

impl From<ConfigError> for CmdError {
    fn from(e: ConfigError) -> Self {
        CmdError::Input(e.to_string())
    }
}

impl From<nuspectral::Error> for CmdError {
    fn from(e: nuspectral::Error) -> Self {
        if e.is_input_error() {
            CmdError::Input(e.to_string())
        } else {
            CmdError::Numerical(e.to_string())
        }
    }
}

type CmdResult<T> = Result<T, CmdError>;

#[derive(Serialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    pub config_hash: String,
    pub seed: u64,
    pub status: String,
    pub failure_stage: Option<String>,
    pub timings_seconds: BTreeMap<String, f64>,
    pub diagnostics: serde_json::Value,
}

impl Manifest {
    pub fn new(command: &str, config_hash: &str, seed: u64) -> Self {
        Manifest {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash: config_hash.to_string(),
            seed,
            status: "failed".to_string(),
            failure_stage: Some("init".to_string()),
            timings_seconds: BTreeMap::new(),
            diagnostics: serde_json::Value::Null,
        }
    }

    pub fn write(&self, out_dir: &Path) {
        if let Ok(json) = serde_json::to_string_pretty(self) {
            let _ = write_atomic(&out_dir.join("manifest.json"), json.as_bytes());
        }
    }
}

fn io_input(e: nuspectral::Error) -> CmdError {
    CmdError::Input(e.to_string())
}

/// Build the sample locations per `sampling.*`.
fn build_locations(cfg: &Config, seed: u64) -> CmdResult<SampleSet> {
    let kind = cfg.get("sampling.kind").unwrap_or("uniform");
    let n = cfg.usize("sampling.n")?.unwrap_or(0);
    match kind {
        "uniform" => {
            let dom = cfg.domain()?;
            Ok(generate_uniform(&dom, n, seed)?)
        }
        "jittered" => {
            let dom = cfg.domain()?;
            let jitter = cfg.f64("sampling.jitter")?.ok_or_else(|| {
                CmdError::Input("field sampling.jitter required for jittered sampling".into())
            })?;
            Ok(generate_jittered_grid(&dom, n, jitter, seed)?)
        }
        "gappy" => {
            let dom = cfg.domain()?;
            let spacing = cfg.f64("sampling.spacing")?.ok_or_else(|| {
                CmdError::Input("field sampling.spacing required for gappy sampling".into())
            })?;
            let mut gaps = Vec::new();
            if let Some(v) = cfg.get("sampling.gaps") {
                for part in v.split(';') {
                    let Some((a, b)) = part.split_once(',') else {
                        return Err(CmdError::Input(format!("field sampling.gaps: bad gap {part:?}")));
                    };
                    let a: f64 = a.trim().parse().map_err(|_| CmdError::Input("field sampling.gaps: bad number".into()))?;
                    let b: f64 = b.trim().parse().map_err(|_| CmdError::Input("field sampling.gaps: bad number".into()))?;
                    gaps.push((a, b));
                }
            }
            Ok(generate_gappy_grid(&dom, spacing, &gaps)?)
        }
        "csv" => {
            let path = cfg.required("sampling.csv")?;
            Ok(sampling::load_csv(Path::new(path)).map_err(io_input)?)
        }
        other => Err(CmdError::Input(format!("field sampling.kind: unknown kind {other:?}"))),
    }
}

/// Window per `window.*` over the given domain.
fn build_window(cfg: &Config, domain: &Domain, omega: &[f64]) -> CmdResult<WindowFunction> {
    let kind = cfg.get("window.kind").unwrap_or("kaiser");
    let w = cfg.f64_or("window.w", windows::default_half_bandwidth(domain))?;
    match kind {
        "boxcar" => Ok(windows::boxcar(domain)),
        "kaiser" => {
            let hull = domain.hull();
            let len = hull[0][1] - hull[0][0];
            let kdom = if domain.pieces().len() > 1 {
                // a kaiser window spans the hull even over gappy domains
                Domain::interval(hull[0][0], hull[0][1]).map_err(CmdError::from)?
            } else {
                domain.clone()
            };
            let beta = cfg.f64_or("window.beta", windows::default_kaiser_beta(w, len))?;
            Ok(windows::kaiser(&kdom, beta)?)
        }
        "prolate1d" => {
            let omega_max = omega.iter().cloned().fold(0.0f64, f64::max);
            let suggested = domain
                .pieces()
                .iter()
                .map(|p| windows::suggested_quad_order(omega_max, p[0][1] - p[0][0]))
                .max()
                .unwrap_or(64);
            let order = cfg.usize("window.quad_order")?.unwrap_or(suggested);
            Ok(windows::prolate_1d(domain, w, order)?)
        }
        "prolate2d" => {
            let omega_max = omega.iter().cloned().fold(0.0f64, f64::max);
            let hull = domain.hull();
            let len = (hull[0][1] - hull[0][0]).max(hull[1][1] - hull[1][0]);
            let suggested = windows::suggested_quad_order(omega_max, len).min(48);
            let order = cfg.usize("window.quad_order")?.unwrap_or(suggested);
            Ok(windows::prolate_2d(domain, w, order)?)
        }
        other => Err(CmdError::Input(format!("field window.kind: unknown kind {other:?}"))),
    }
}

fn resolve_omega(cfg: &Config, n: usize, domain: &Domain) -> CmdResult<Vec<f64>> {
    if let Some(om) = cfg.omega()? {
        if om.len() != domain.dim() {
            return Err(CmdError::Input("field solver.omega: one entry per axis required".into()));
        }
        return Ok(om);
    }
    let g = omega_guidance(n, domain);
    if !g.guaranteed {
        eprintln!("warning: too few points for a guaranteed controlled band; solver.omega must be set explicitly");
        return Err(CmdError::Input("field solver.omega: required when guidance is unavailable".into()));
    }
    Ok(g.omega)
}

fn data_path(cfg: &Config, out_dir: &Path) -> PathBuf {
    out_dir.join(cfg.get("files.data").unwrap_or("data.csv"))
}

fn weights_path(cfg: &Config, out_dir: &Path) -> PathBuf {
    out_dir.join(cfg.get("files.weights").unwrap_or("weights.csv"))
}

/// Write a data CSV with one column per replicate.
fn write_data_csv(set: &SampleSet, reps: &[Vec<f64>], path: &Path) -> CmdResult<()> {
    let mut out = String::new();
    let dim = set.dim();
    out.push_str(if dim == 1 { "x" } else { "x,y" });
    if reps.len() == 1 {
        out.push_str(",value");
    } else {
        for r in 1..=reps.len() {
            out.push_str(&format!(",value_{r}"));
        }
    }
    out.push('\n');
    for i in 0..set.n() {
        for (d, v) in set.location(i).iter().enumerate() {
            if d > 0 {
                out.push(',');
            }
            out.push_str(&format!("{v}"));
        }
        for r in reps {
            out.push_str(&format!(",{}", r[i]));
        }
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())?;
    Ok(())
}

pub fn cmd_simulate(cfg: &Config, out_dir: &Path, seed: u64, manifest: &mut Manifest) -> CmdResult<()> {
    manifest.failure_stage = Some("sampling".into());
    let t0 = Instant::now();
    let set = build_locations(cfg, seed)?;
    manifest.timings_seconds.insert("sampling".into(), t0.elapsed().as_secs_f64());

    manifest.failure_stage = Some("model".into());
    let model = cfg.model()?;

    manifest.failure_stage = Some("simulate".into());
    let t1 = Instant::now();
    let replicates = cfg.usize("simulate.replicates")?.unwrap_or(1).max(1);
    let reps = gp_simulate(&model, &set, replicates, seed)?;
    manifest.timings_seconds.insert("simulate".into(), t1.elapsed().as_secs_f64());

    manifest.failure_stage = Some("write".into());
    write_data_csv(&set, &reps, &data_path(cfg, out_dir))?;
    manifest.diagnostics = serde_json::json!({
        "n": set.n(),
        "dim": set.dim(),
        "replicates": replicates,
        "variance": model.variance(),
    });
    manifest.failure_stage = None;
    Ok(())
}

pub fn cmd_weights(cfg: &Config, out_dir: &Path, seed: u64, manifest: &mut Manifest) -> CmdResult<()> {
    let _ = seed;
    manifest.failure_stage = Some("load-data".into());
    let dpath = data_path(cfg, out_dir);
    let data = sampling::load_csv_columns(&dpath).map_err(io_input)?;
    let set = data.set;

    manifest.failure_stage = Some("window".into());
    // prefer the configured domain; fall back to the inferred one
    let domain = match cfg.get("sampling.domain").or(cfg.get("sampling.domain_x")) {
        Some(_) => cfg.domain()?,
        None => set.domain().clone(),
    };
    let set = SampleSet::new(set.dim(), set.locations().to_vec(), set.values().to_vec(), domain.clone())?;
    let omega = resolve_omega(cfg, set.n(), &domain)?;
    let t0 = Instant::now();
    let window = build_window(cfg, &domain, &omega)?;
    manifest.timings_seconds.insert("window".into(), t0.elapsed().as_secs_f64());

    manifest.failure_stage = Some("solve".into());
    let solver = cfg.solver()?;
    let t1 = Instant::now();
    let (weights, report) = weights::solve(&set, &window, &omega, &solver)?;
    manifest.timings_seconds.insert("solve".into(), t1.elapsed().as_secs_f64());

    // loud norm warning: large |alpha|_2 voids the aliasing-bias control
    let warn_factor = cfg.f64_or("solver.norm_warn_factor", 1e3)?;
    let threshold = warn_factor / (set.n() as f64).sqrt();
    if weights.l2 > threshold {
        eprintln!(
            "warning: weight norm |alpha|_2 = {:.3e} exceeds {:.3e}; aliasing bias is uncontrolled \
             (poorly matched window or controlled band too wide)",
            weights.l2, threshold
        );
    }

    manifest.failure_stage = Some("write".into());
    weights::save_weights(&set, &weights, Some(&report), &weights_path(cfg, out_dir))?;
    manifest.diagnostics = serde_json::json!({
        "omega": weights.omega,
        "l1": weights.l1,
        "l2": weights.l2,
        "sup_residual": weights.sup_residual,
        "iterations": report.iterations,
        "converged": report.converged,
    });
    manifest.failure_stage = None;
    Ok(())
}

fn default_grid(omega: &[f64], domain: &Domain) -> Result<FrequencyGrid, nuspectral::Error> {
    match omega.len() {
        1 => {
            let measure = domain.measure();
            let step = 0.5 / measure;
            let m = (omega[0] / step).floor() as usize + 1;
            FrequencyGrid::uniform(0.0, (m - 1) as f64 * step, m)
        }
        _ => {
            let hull = domain.hull();
            let mut axes = Vec::new();
            for (d, &om) in omega.iter().enumerate() {
                let step = 0.5 / (hull[d][1] - hull[d][0]);
                let half = (om / step).floor() as usize;
                axes.push(FrequencyGrid::uniform(-(half as f64) * step, half as f64 * step, 2 * half + 1)?);
            }
            let mut it = axes.into_iter();
            FrequencyGrid::tensor(it.next().unwrap(), it.next().unwrap())
        }
    }
}

fn parse_grid(cfg: &Config, omega: &[f64], domain: &Domain) -> CmdResult<FrequencyGrid> {
    match cfg.get("estimate.grid") {
        None => Ok(default_grid(omega, domain)?),
        Some(v) => {
            let parts: Vec<&str> = v.split(':').collect();
            if parts.len() != 3 {
                return Err(CmdError::Input(format!("field estimate.grid: expected lo:hi:step, got {v:?}")));
            }
            let lo: f64 = parts[0].trim().parse().map_err(|_| CmdError::Input("field estimate.grid: bad lo".into()))?;
            let hi: f64 = parts[1].trim().parse().map_err(|_| CmdError::Input("field estimate.grid: bad hi".into()))?;
            let step: f64 = parts[2].trim().parse().map_err(|_| CmdError::Input("field estimate.grid: bad step".into()))?;
            if !(step > 0.0 && hi >= lo) {
                return Err(CmdError::Input("field estimate.grid: need hi >= lo and step > 0".into()));
            }
            let m = ((hi - lo) / step).floor() as usize + 1;
            if hi > omega.iter().cloned().fold(f64::INFINITY, f64::min) {
                eprintln!("warning: frequency grid extends beyond the controlled band; values there carry aliasing risk");
            }
            Ok(FrequencyGrid::uniform(lo, lo + (m - 1) as f64 * step, m)?)
        }
    }
}

fn write_estimate_csv(
    freqs: &FrequencyGrid,
    per_rep: &[Vec<f64>],
    path: &Path,
) -> CmdResult<()> {
    let dim = freqs.dim();
    let pts = freqs.points();
    let m = freqs.len();
    let mut out = String::new();
    out.push_str(if dim == 1 { "omega" } else { "omega1,omega2" });
    if per_rep.len() == 1 {
        out.push_str(",value");
    } else {
        for r in 1..=per_rep.len() {
            out.push_str(&format!(",value_{r}"));
        }
        out.push_str(",mean");
    }
    out.push('\n');
    for k in 0..m {
        for d in 0..dim {
            if d > 0 {
                out.push(',');
            }
            out.push_str(&format!("{}", pts[k * dim + d]));
        }
        let mut acc = 0.0;
        for rep in per_rep {
            out.push_str(&format!(",{}", rep[k]));
            acc += rep[k];
        }
        if per_rep.len() > 1 {
            out.push_str(&format!(",{}", acc / per_rep.len() as f64));
        }
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())?;
    Ok(())
}

pub fn cmd_estimate(cfg: &Config, out_dir: &Path, seed: u64, manifest: &mut Manifest) -> CmdResult<()> {
    let _ = seed;
    manifest.failure_stage = Some("load-data".into());
    let dpath = data_path(cfg, out_dir);
    let data = sampling::load_csv_columns(&dpath).map_err(io_input)?;
    if data.value_columns.is_empty() {
        return Err(CmdError::Input(format!("{} has no value columns", dpath.display())));
    }
    let set = data.set;
    let reps = &data.value_columns;

    let kinds: Vec<String> = cfg
        .get("estimate.kinds")
        .unwrap_or("quadrature")
        .split(',')
        .map(|s| s.trim().to_string())
        .collect();

    // quadrature/forward need the weights sidecar for omega and the window
    let needs_weights = kinds.iter().any(|k| k == "quadrature" || k == "forward");
    let (weights, omega) = if needs_weights {
        manifest.failure_stage = Some("load-weights".into());
        let wpath = weights_path(cfg, out_dir);
        let (locs, alpha, sidecar) = weights::load_weights(&wpath).map_err(io_input)?;
        if locs.len() != set.locations().len() {
            return Err(CmdError::Input("weights and data sizes differ".into()));
        }
        let window = rebuild_window(cfg, &sidecar)?;
        let mut qw = QuadratureWeights::from_alpha(alpha, sidecar.omega.clone(), &window, sidecar.method)?;
        qw.sup_residual = sidecar.sup_residual;
        (Some((qw, window)), sidecar.omega)
    } else {
        let om = resolve_omega(cfg, set.n(), set.domain())?;
        (None, om)
    };

    manifest.failure_stage = Some("estimate".into());
    let grid = parse_grid(cfg, &omega, set.domain())?;
    let t0 = Instant::now();
    let mut outputs = Vec::new();
    for kind in &kinds {
        let per_rep: Vec<Vec<f64>> = match kind.as_str() {
            "quadrature" => {
                let (qw, _) = weights.as_ref().expect("loaded above");
                reps.iter()
                    .map(|vals| {
                        estimator::estimate_with_values(&set, vals, qw, &grid).map(|e| e.values)
                    })
                    .collect::<Result<_, _>>()?
            }
            "forward" => {
                let (_, window) = weights.as_ref().expect("loaded above");
                let alpha = forward_weights(window, &set);
                let fw = QuadratureWeights::from_alpha(alpha, omega.clone(), window, MethodTag::Forward)?;
                reps.iter()
                    .map(|vals| {
                        estimator::estimate_with_values(&set, vals, &fw, &grid).map(|e| e.values)
                    })
                    .collect::<Result<_, _>>()?
            }
            "lomb-scargle" => {
                // shift the grid off zero, which the sinusoid fit excludes
                let pts = grid.points();
                let shifted: Vec<f64> = pts
                    .iter()
                    .map(|&w| if w == 0.0 { f64::MIN_POSITIVE.max(1e-9) } else { w })
                    .collect();
                let ls_grid = FrequencyGrid::explicit(shifted, 1)?;
                reps.iter()
                    .map(|vals| {
                        estimator::lomb_scargle_values(&set, vals, &ls_grid).map(|e| e.values)
                    })
                    .collect::<Result<_, _>>()?
            }
            "regrid" => {
                let grid_m = cfg.usize("regrid.m")?.unwrap_or(set.n());
                let range = cfg.f64_or("regrid.range", 0.001)?;
                let knn = cfg.usize("regrid.knn")?.unwrap_or(10);
                let window = match &weights {
                    Some((_, w)) => w.clone(),
                    None => {
                        let dom = set.domain().clone();
                        windows::kaiser(&dom, windows::default_kaiser_beta(windows::default_half_bandwidth(&dom), dom.measure()))?
                    }
                };
                // the regrid estimator fixes its own frequency grid
                let ests: Vec<SpectralEstimate> = reps
                    .iter()
                    .map(|vals| estimator::regrid_estimate_values(&set, vals, grid_m, range, knn, &window))
                    .collect::<Result<_, _>>()?;
                let rg = FrequencyGrid::explicit(ests[0].freqs.clone(), 1)?;
                let per: Vec<Vec<f64>> = ests.into_iter().map(|e| e.values).collect();
                write_estimate_csv(&rg, &per, &out_dir.join(format!("estimate_{kind}.csv")))?;
                outputs.push(kind.clone());
                continue;
            }
            other => return Err(CmdError::Input(format!("field estimate.kinds: unknown estimator {other:?}"))),
        };
        write_estimate_csv(&grid, &per_rep, &out_dir.join(format!("estimate_{kind}.csv")))?;
        outputs.push(kind.clone());
    }
    manifest.timings_seconds.insert("estimate".into(), t0.elapsed().as_secs_f64());
    manifest.diagnostics = serde_json::json!({
        "kinds": outputs,
        "replicates": reps.len(),
        "frequencies": grid.len(),
        "omega": omega,
    });
    manifest.failure_stage = None;
    Ok(())
}

/// Rebuild the window recorded in a weights sidecar.
fn rebuild_window(cfg: &Config, sidecar: &weights::WeightsSidecar) -> CmdResult<WindowFunction> {
    use nuspectral::windows::WindowKind;
    let domain = &sidecar.window.domain;
    match sidecar.window.kind {
        WindowKind::Boxcar => Ok(windows::boxcar(domain)),
        WindowKind::Kaiser => {
            let hull = domain.hull();
            let len = hull[0][1] - hull[0][0];
            let beta = sidecar
                .window
                .beta
                .unwrap_or_else(|| windows::default_kaiser_beta(sidecar.window.half_bandwidth, len));
            Ok(windows::kaiser(domain, beta)?)
        }
        WindowKind::Prolate1d => {
            let omega_max = sidecar.omega.iter().cloned().fold(0.0f64, f64::max);
            let suggested = domain
                .pieces()
                .iter()
                .map(|p| windows::suggested_quad_order(omega_max, p[0][1] - p[0][0]))
                .max()
                .unwrap_or(64);
            let order = cfg.usize("window.quad_order")?.unwrap_or(suggested);
            Ok(windows::prolate_1d(domain, sidecar.window.half_bandwidth, order)?)
        }
        WindowKind::Prolate2d => {
            let omega_max = sidecar.omega.iter().cloned().fold(0.0f64, f64::max);
            let hull = domain.hull();
            let len = (hull[0][1] - hull[0][0]).max(hull[1][1] - hull[1][0]);
            let suggested = windows::suggested_quad_order(omega_max, len).min(48);
            let order = cfg.usize("window.quad_order")?.unwrap_or(suggested);
            Ok(windows::prolate_2d(domain, sidecar.window.half_bandwidth, order)?)
        }
    }
}

pub fn cmd_bench(cfg: &Config, out_dir: &Path, seed: u64, manifest: &mut Manifest) -> CmdResult<()> {
    manifest.failure_stage = Some("bench-config".into());
    let ns: Vec<usize> = match cfg.get("bench.n") {
        None => Vec::new(),
        Some(v) => v
            .split(',')
            .map(|t| t.trim().parse::<usize>())
            .collect::<Result<_, _>>()
            .map_err(|_| CmdError::Input("field bench.n: bad count list".into()))?,
    };
    if ns.is_empty() {
        return Err(CmdError::Input("field bench.n: at least one size required".into()));
    }
    let scenario = cfg.get("bench.scenario").unwrap_or("gappy");
    let omega_ratio = cfg.f64_or("bench.omega_ratio", 1.0)?;
    let solver = cfg.solver()?;

    manifest.failure_stage = Some("bench-run".into());
    let mut rows: Vec<serde_json::Value> = Vec::new();
    let mut csv = String::from("n,iterations,precond_build_seconds,solve_seconds,total_seconds,converged,sup_residual\n");
    for &n in &ns {
        let t0 = Instant::now();
        let dom = Domain::interval(0.0, 1.0).map_err(CmdError::from)?;
        let (set, omega) = match scenario {
            "gappy" => {
                let n_full = (n as f64 / 0.7).ceil() as usize;
                let spacing = 1.0 / n_full as f64;
                let set = generate_gappy_grid(&dom, spacing, &[(0.3, 0.6)])?;
                let nyq = 0.5 / spacing;
                (set, vec![omega_ratio * nyq])
            }
            "uniform" => {
                let set = generate_uniform(&dom, n, seed)?;
                let omega = omega_ratio * n as f64 / 10.0;
                (set, vec![omega])
            }
            other => return Err(CmdError::Input(format!("field bench.scenario: unknown scenario {other:?}"))),
        };
        let win = windows::kaiser(&dom, windows::default_kaiser_beta(4.0, 1.0))?;
        let mut cfg_n = solver;
        cfg_n.method = weights::SolveMethod::NormalKrylov;
        let (w, report): (QuadratureWeights, SolveReport) =
            weights::solve_iterative(&set, &win, &omega, &cfg_n)?;
        let total = t0.elapsed().as_secs_f64();
        csv.push_str(&format!(
            "{n},{},{},{},{},{},{}\n",
            report.iterations,
            report.precond_build_seconds,
            report.solve_seconds,
            total,
            report.converged,
            w.sup_residual
        ));
        rows.push(serde_json::json!({
            "n": n,
            "iterations": report.iterations,
            "precond_build_seconds": report.precond_build_seconds,
            "solve_seconds": report.solve_seconds,
            "total_seconds": total,
            "converged": report.converged,
            "sup_residual": w.sup_residual,
        }));
    }
    manifest.failure_stage = Some("write".into());
    write_atomic(&out_dir.join("bench.csv"), csv.as_bytes())?;
    let json = serde_json::to_string_pretty(&rows)
        .map_err(|e| CmdError::Numerical(format!("bench serialization failed: {e}")))?;
    write_atomic(&out_dir.join("bench.json"), json.as_bytes())?;
    manifest.diagnostics = serde_json::Value::Array(rows);
    manifest.failure_stage = None;
    Ok(())
}
