//! Quadrature weights `alpha` solving `F alpha = b`, where `F` is the
//! nonuniform Fourier matrix at controlled-band nodes and `b` samples the
//! window transform `G`. Three solver paths: dense pivoted QR on the real
//! stacked system, randomized low-rank factorization for fixed small
//! `Omega * measure`, and preconditioned conjugate gradients on the normal
//! equations driven by fast transforms. Plus the simple baselines (forward
//! and irregular-trapezoid weights) and validation diagnostics.

mod dense;
mod iterative;
mod lowrank;

pub use dense::{solve_dense, DENSE_LIMIT};
pub use iterative::{build_gaussian_precond, solve_iterative, GaussianPrecond, Preconditioner};
pub use lowrank::solve_lowrank;

use crate::nufourier::{nufft_points, NuftOptions};
use crate::sampling::{write_atomic, Domain, SampleSet};
use crate::windows::{WindowFunction, WindowKind};
use crate::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Serializable snapshot of the window a weight vector was built for.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WindowSummary {
    pub kind: WindowKind,
    pub half_bandwidth: f64,
    pub beta: Option<f64>,
    pub domain: Domain,
}

impl From<&WindowFunction> for WindowSummary {
    fn from(w: &WindowFunction) -> Self {
        WindowSummary {
            kind: w.kind(),
            half_bandwidth: w.half_bandwidth(),
            beta: w.shape_param(),
            domain: w.domain().clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodTag {
    Forward,
    Trapezoid,
    DenseQr,
    LowRank,
    NormalKrylov,
}

/// Weight vector with diagnostics. `l1 >= l2` always (norm inequality).
#[derive(Debug, Clone)]
pub struct QuadratureWeights {
    pub alpha: Vec<f64>,
    /// Controlled band half-width per axis.
    pub omega: Vec<f64>,
    pub window: WindowSummary,
    pub l1: f64,
    pub l2: f64,
    /// `sup |H_alpha - G|` over the validation grid.
    pub sup_residual: f64,
    pub method: MethodTag,
}

impl QuadratureWeights {
    pub fn from_alpha(
        alpha: Vec<f64>,
        omega: Vec<f64>,
        window: &WindowFunction,
        method: MethodTag,
    ) -> Result<Self> {
        if alpha.iter().any(|a| !a.is_finite()) {
            return Err(Error::numerical("weights contain non-finite entries"));
        }
        let l1 = alpha.iter().map(|a| a.abs()).sum();
        let l2 = alpha.iter().map(|a| a * a).sum::<f64>().sqrt();
        Ok(QuadratureWeights {
            alpha,
            omega,
            window: window.into(),
            l1,
            l2,
            sup_residual: f64::NAN,
            method,
        })
    }

    pub fn n(&self) -> usize {
        self.alpha.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveMethod {
    DenseQr,
    LowRank,
    NormalKrylov,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Precond {
    None,
    ScaledIdentity,
    SparseGaussian,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SolverConfig {
    pub method: SolveMethod,
    pub tol: f64,
    pub max_iter: usize,
    pub precond: Precond,
    /// Near-machine-epsilon regularization: the relative rank cutoff of the
    /// dense solve and the ridge scale of the preconditioner.
    pub delta: f64,
    /// Node-count oversampling relative to `n`.
    pub oversample: f64,
    /// Gaussian preconditioner bandwidth constant `c` in `sigma = c / Omega`.
    /// Smaller keeps the controlled-band edges tightly enforced; larger makes
    /// the preconditioner sparser.
    pub precond_bandwidth: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            method: SolveMethod::DenseQr,
            tol: 1e-12,
            max_iter: 500,
            precond: Precond::None,
            delta: 1e-14,
            oversample: 1.0,
            precond_bandwidth: 0.5,
        }
    }
}

impl SolverConfig {
    pub fn validated(self) -> Result<Self> {
        if !(self.tol > 0.0) {
            return Err(Error::invalid("solver tol must be positive"));
        }
        if !(self.oversample >= 1.0) {
            return Err(Error::invalid("oversample must be at least 1"));
        }
        Ok(self)
    }
}

/// Timing and convergence record for one solve.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations: usize,
    pub final_residual: f64,
    pub precond_build_seconds: f64,
    pub solve_seconds: f64,
    pub converged: bool,
}

/// Dispatch on the configured method.
pub fn solve(
    set: &SampleSet,
    window: &WindowFunction,
    omega: &[f64],
    config: &SolverConfig,
) -> Result<(QuadratureWeights, SolveReport)> {
    match config.method {
        SolveMethod::DenseQr => solve_dense(set, window, omega, config),
        SolveMethod::LowRank => solve_lowrank(set, window, omega, config),
        SolveMethod::NormalKrylov => solve_iterative(set, window, omega, config),
    }
}

/// Irregular trapezoidal rule weights on strictly increasing locations.
pub fn trapezoid_weights(xs: &[f64]) -> Result<Vec<f64>> {
    let n = xs.len();
    if n < 2 {
        return Err(Error::invalid("trapezoid rule needs at least two locations"));
    }
    for w in xs.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::invalid(format!("locations must be strictly increasing, found {} then {}", w[0], w[1])));
        }
    }
    let mut g = vec![0.0; n];
    g[0] = 0.5 * (xs[1] - xs[0]);
    g[n - 1] = 0.5 * (xs[n - 1] - xs[n - 2]);
    for j in 1..n - 1 {
        g[j] = 0.5 * (xs[j + 1] - xs[j - 1]);
    }
    Ok(g)
}

/// Uncorrected forward weights `alpha_j = g(x_j) / n`.
pub fn forward_weights(window: &WindowFunction, set: &SampleSet) -> Vec<f64> {
    let n = set.n();
    (0..n).map(|j| window.eval_g(set.location(j)) / n as f64).collect()
}

/// Window-weighted trapezoid weights `alpha_j = g(x_j) gamma_j` (1-d).
pub fn trapezoid_window_weights(window: &WindowFunction, set: &SampleSet) -> Result<Vec<f64>> {
    let g = trapezoid_weights(set.xs())?;
    Ok((0..set.n()).map(|j| window.eval_g(set.location(j)) * g[j]).collect())
}

/// Largest controlled frequency with a guaranteed-accurate weight solution:
/// `(n - 35) / (5 measure)` per axis, with `n` replaced by `n^(1/d)` in 2-d.
/// Below the count threshold there is no guaranteed band; zero is returned
/// and `guaranteed` is false.
#[derive(Debug, Clone)]
pub struct OmegaGuidance {
    pub omega: Vec<f64>,
    pub guaranteed: bool,
}

pub fn omega_guidance(n: usize, domain: &Domain) -> OmegaGuidance {
    let dim = domain.dim();
    let n_eff = (n as f64).powf(1.0 / dim as f64);
    if n_eff <= 35.0 {
        return OmegaGuidance { omega: vec![0.0; dim], guaranteed: false };
    }
    let omega = match dim {
        1 => vec![(n_eff - 35.0) / (5.0 * domain.measure())],
        _ => domain.hull().iter().map(|iv| (n_eff - 35.0) / (5.0 * (iv[1] - iv[0]))).collect(),
    };
    OmegaGuidance { omega, guaranteed: true }
}

/// Residual diagnostics of a weight vector on a dense validation grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeightsDiagnostics {
    pub sup_abs_error: f64,
    pub l1: f64,
    pub l2: f64,
    pub grid_len: usize,
}

/// Evaluate `H_alpha` and `G` on a uniform grid with at least
/// `n_check_per_unit` points per unit frequency (at least 4096 points total
/// in 1-d, 64 per axis in 2-d) and record the sup error and weight norms.
pub fn validate_weights(
    set: &SampleSet,
    alpha: &[f64],
    window: &WindowFunction,
    omega: &[f64],
    n_check_per_unit: f64,
) -> Result<WeightsDiagnostics> {
    let dim = set.dim();
    if alpha.len() != set.n() {
        return Err(Error::invalid("weight length must match location count"));
    }
    let coeffs: Vec<Complex64> = alpha.iter().map(|&a| Complex64::new(a, 0.0)).collect();
    let grid: Vec<f64> = match dim {
        1 => {
            // odd count keeps 0 on the grid, where |G| peaks
            let count = ((n_check_per_unit * 2.0 * omega[0]).ceil() as usize).max(4096) | 1;
            (0..count)
                .map(|k| -omega[0] + 2.0 * omega[0] * k as f64 / (count - 1) as f64)
                .collect()
        }
        _ => {
            let counts: Vec<usize> = omega
                .iter()
                .map(|&om| (((n_check_per_unit * 2.0 * om).ceil() as usize).clamp(64, 256)) | 1)
                .collect();
            let mut pts = Vec::new();
            for i in 0..counts[0] {
                let w0 = -omega[0] + 2.0 * omega[0] * i as f64 / (counts[0] - 1) as f64;
                for j in 0..counts[1] {
                    let w1 = -omega[1] + 2.0 * omega[1] * j as f64 / (counts[1] - 1) as f64;
                    pts.push(w0);
                    pts.push(w1);
                }
            }
            pts
        }
    };
    let h = nufft_points(set.locations(), dim, &coeffs, &grid, &NuftOptions::default())?;
    let m = grid.len() / dim;
    let mut sup = 0.0f64;
    for k in 0..m {
        let g = window.eval_big_g(&grid[k * dim..(k + 1) * dim]);
        sup = sup.max((h[k] - g).norm());
    }
    Ok(WeightsDiagnostics {
        sup_abs_error: sup,
        l1: alpha.iter().map(|a| a.abs()).sum(),
        l2: alpha.iter().map(|a| a * a).sum::<f64>().sqrt(),
        grid_len: m,
    })
}

/// Sidecar metadata stored next to a weights CSV.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeightsSidecar {
    pub omega: Vec<f64>,
    pub window: WindowSummary,
    pub method: MethodTag,
    pub l1: f64,
    pub l2: f64,
    pub sup_residual: f64,
    pub iterations: usize,
}

/// Write weights as CSV `x[,y],alpha` plus a `.json` sidecar.
pub fn save_weights(
    set: &SampleSet,
    weights: &QuadratureWeights,
    report: Option<&SolveReport>,
    path: &Path,
) -> Result<()> {
    let mut out = String::new();
    out.push_str(if set.dim() == 1 { "x,alpha\n" } else { "x,y,alpha\n" });
    for i in 0..set.n() {
        for v in set.location(i) {
            out.push_str(&format!("{v},"));
        }
        out.push_str(&format!("{}\n", weights.alpha[i]));
    }
    write_atomic(path, out.as_bytes())?;
    let sidecar = WeightsSidecar {
        omega: weights.omega.clone(),
        window: weights.window.clone(),
        method: weights.method,
        l1: weights.l1,
        l2: weights.l2,
        sup_residual: weights.sup_residual,
        iterations: report.map_or(0, |r| r.iterations),
    };
    let json = serde_json::to_string_pretty(&sidecar)
        .map_err(|e| Error::numerical(format!("sidecar serialization failed: {e}")))?;
    write_atomic(&path.with_extension("json"), json.as_bytes())
}

/// Read weights CSV plus sidecar back.
pub fn load_weights(path: &Path) -> Result<(Vec<f64>, Vec<f64>, WeightsSidecar)> {
    let data = crate::sampling::load_csv_columns(path)?;
    let sidecar_path = path.with_extension("json");
    let text = std::fs::read_to_string(&sidecar_path)
        .map_err(|e| Error::Io { path: sidecar_path.display().to_string(), source: e })?;
    let sidecar: WeightsSidecar = serde_json::from_str(&text)
        .map_err(|e| Error::invalid(format!("bad weights sidecar: {e}")))?;
    let alpha = data
        .value_columns
        .first()
        .cloned()
        .ok_or_else(|| Error::invalid("weights csv needs an alpha column"))?;
    Ok((data.set.locations().to_vec(), alpha, sidecar))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::generate_uniform;
    use crate::windows::boxcar;

    #[test]
    fn trapezoid_examples() {
        let g = trapezoid_weights(&[0.0, 0.5, 1.0]).unwrap();
        assert_eq!(g, vec![0.25, 0.5, 0.25]);
        assert!((g.iter().sum::<f64>() - 1.0).abs() < 1e-15);

        // equispaced: interior h, ends h/2
        let xs: Vec<f64> = (0..9).map(|i| i as f64 * 0.125).collect();
        let g = trapezoid_weights(&xs).unwrap();
        assert!((g[0] - 0.0625).abs() < 1e-15);
        for w in &g[1..8] {
            assert!((w - 0.125).abs() < 1e-15);
        }
        assert!(trapezoid_weights(&[0.0, 0.0, 1.0]).is_err());
    }

    #[test]
    fn trapezoid_integrates_identity() {
        let dom = Domain::interval(0.0, 1.0).unwrap();
        let set = generate_uniform(&dom, 1000, 19).unwrap();
        let g = trapezoid_weights(set.xs()).unwrap();
        let integral: f64 = g.iter().zip(set.xs()).map(|(w, x)| w * x).sum();
        assert!((integral - 0.5).abs() < 2e-3, "got {integral}");
    }

    #[test]
    fn forward_weights_boxcar() {
        let dom = Domain::interval(0.0, 2.0).unwrap();
        let set = generate_uniform(&dom, 100, 1).unwrap();
        let win = boxcar(&dom);
        let a = forward_weights(&win, &set);
        let expect = 1.0 / (2.0f64.sqrt() * 100.0);
        assert!(a.iter().all(|&v| (v - expect).abs() < 1e-15));
    }

    #[test]
    fn omega_guidance_examples() {
        let dom = Domain::interval(0.0, 1.0).unwrap();
        let g = omega_guidance(535, &dom);
        assert!(g.guaranteed);
        assert!((g.omega[0] - 100.0).abs() < 1e-12);

        let g = omega_guidance(35, &dom);
        assert!(!g.guaranteed);
        assert_eq!(g.omega[0], 0.0);

        // doubling the measure halves the guidance
        let dom2 = Domain::interval(0.0, 2.0).unwrap();
        let g2 = omega_guidance(535, &dom2);
        assert!((g2.omega[0] - 50.0).abs() < 1e-12);
    }

    #[test]
    fn validate_zero_weights_reports_peak_of_g() {
        let dom = Domain::interval(0.0, 1.0).unwrap();
        let set = generate_uniform(&dom, 50, 2).unwrap();
        let win = boxcar(&dom);
        let d = validate_weights(&set, &vec![0.0; 50], &win, &[8.0], 10.0).unwrap();
        // sup |0 - G| over the grid equals max |G| on the grid, attained at 0
        let g0 = win.eval_big_g(&[0.0]).norm();
        assert!((d.sup_abs_error - g0).abs() <= 1e-6 * g0);
        assert_eq!(d.l1, 0.0);
        assert_eq!(d.l2, 0.0);
    }
}
