//! The spectral estimator `S(xi) = |sum_j exp(-2 pi i xi x_j) alpha_j y_j|^2`,
//! its exact expectation under a process model, the window-convolution and
//! aliasing-bias decomposition, theoretical bound calculators, and the
//! distributional moments of the weighted Fourier sum under random sampling.
//! Baseline estimators (Lomb-Scargle, regridding) live in [`baselines`].

mod baselines;

pub use baselines::{kernel_ridge_interpolate, lomb_scargle, lomb_scargle_values, regrid_estimate, regrid_estimate_values};

use crate::models::{process_cov_matrix, ProcessModel};
use crate::nufourier::{nufft, FrequencyGrid, NuftOptions};
use crate::quad::adaptive_quad;
use crate::sampling::{write_atomic, SampleSet, SamplingDensity};
use crate::weights::QuadratureWeights;
use crate::windows::WindowFunction;
use crate::{Error, Result};
use faer::Mat;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorKind {
    Quadrature,
    Forward,
    LombScargle,
    Regrid,
}

/// Diagnostics snapshot carried with an estimate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeightsDiag {
    pub omega: Vec<f64>,
    pub l2_alpha: f64,
    pub sup_residual: f64,
}

/// A spectral density estimate on a frequency grid. Values are nonnegative
/// by construction.
#[derive(Debug, Clone)]
pub struct SpectralEstimate {
    /// Row-major `m x dim` frequencies.
    pub freqs: Vec<f64>,
    pub dim: usize,
    pub values: Vec<f64>,
    pub kind: EstimatorKind,
    pub weights_ref: Option<WeightsDiag>,
}

impl SpectralEstimate {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn freq(&self, k: usize) -> &[f64] {
        &self.freqs[k * self.dim..(k + 1) * self.dim]
    }

    /// Value at the grid point closest to `xi` (1-d).
    pub fn value_near(&self, xi: f64) -> f64 {
        debug_assert_eq!(self.dim, 1);
        let mut best = 0usize;
        let mut dist = f64::INFINITY;
        for (k, &f) in self.freqs.iter().enumerate() {
            let d = (f - xi).abs();
            if d < dist {
                dist = d;
                best = k;
            }
        }
        self.values[best]
    }

    /// Write as CSV `omega[,omega2],value`.
    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        out.push_str(if self.dim == 1 { "omega,value\n" } else { "omega1,omega2,value\n" });
        for k in 0..self.len() {
            for d in 0..self.dim {
                out.push_str(&format!("{},", self.freqs[k * self.dim + d]));
            }
            out.push_str(&format!("{}\n", self.values[k]));
        }
        write_atomic(path, out.as_bytes())
    }
}

/// Evaluate the weighted estimator at the grid frequencies:
/// elementwise product `alpha . y`, one (fast) nonuniform transform, squared
/// modulus.
pub fn estimate(
    set: &SampleSet,
    weights: &QuadratureWeights,
    freqs: &FrequencyGrid,
) -> Result<SpectralEstimate> {
    estimate_with_values(set, set.values(), weights, freqs)
}

/// Same as [`estimate`] with explicit data values (replicate rows).
pub fn estimate_with_values(
    set: &SampleSet,
    values: &[f64],
    weights: &QuadratureWeights,
    freqs: &FrequencyGrid,
) -> Result<SpectralEstimate> {
    if weights.n() != set.n() {
        return Err(Error::invalid("weights and sample set sizes differ"));
    }
    if values.len() != set.n() {
        return Err(Error::invalid("sample set has no data values"));
    }
    if freqs.dim() != set.dim() {
        return Err(Error::invalid("frequency grid dimension mismatch"));
    }
    let coeffs: Vec<Complex64> = weights
        .alpha
        .iter()
        .zip(values)
        .map(|(&a, &y)| Complex64::new(a * y, 0.0))
        .collect();
    let h = nufft(set.locations(), set.dim(), &coeffs, freqs, &NuftOptions::default())?;
    let kind = match weights.method {
        crate::weights::MethodTag::Forward => EstimatorKind::Forward,
        _ => EstimatorKind::Quadrature,
    };
    Ok(SpectralEstimate {
        freqs: freqs.points(),
        dim: set.dim(),
        values: h.into_iter().map(|c| c.norm_sqr()).collect(),
        kind,
        weights_ref: Some(WeightsDiag {
            omega: weights.omega.clone(),
            l2_alpha: weights.l2,
            sup_residual: weights.sup_residual,
        }),
    })
}

/// Exact expectation `E S(xi) = h* Sigma h` with `h_j = alpha_j
/// exp(-2 pi i xi x_j)`, evaluated for every grid frequency through two real
/// matrix products.
pub fn expected_estimate(
    model: &ProcessModel,
    set: &SampleSet,
    weights: &QuadratureWeights,
    freqs: &FrequencyGrid,
) -> Result<Vec<f64>> {
    let n = set.n();
    let dim = set.dim();
    if weights.n() != n {
        return Err(Error::invalid("weights and sample set sizes differ"));
    }
    let cov = process_cov_matrix(model, set)?;
    // S~ = D_alpha Sigma D_alpha
    let alpha = &weights.alpha;
    let scaled = Mat::from_fn(n, n, |i, j| alpha[i] * cov[(i, j)] * alpha[j]);

    let pts = freqs.points();
    let m = freqs.len();
    let two_pi = 2.0 * std::f64::consts::PI;
    let locs = set.locations();
    let phase = |j: usize, k: usize| -> f64 {
        (0..dim).map(|d| pts[k * dim + d] * locs[j * dim + d]).sum::<f64>() * two_pi
    };
    let p_re = Mat::from_fn(n, m, |j, k| phase(j, k).cos());
    let p_im = Mat::from_fn(n, m, |j, k| -phase(j, k).sin());
    let t_re = &scaled * &p_re;
    let t_im = &scaled * &p_im;
    let mut out = vec![0.0; m];
    for k in 0..m {
        let mut acc = 0.0;
        for j in 0..n {
            acc += p_re[(j, k)] * t_re[(j, k)] + p_im[(j, k)] * t_im[(j, k)];
        }
        out[k] = acc;
    }
    Ok(out)
}

/// In-band expected value `int_{band} |G(xi - w)|^2 S(w) dw` for the model
/// continuum plus any spectral-line masses inside the band. 1-d uses adaptive
/// quadrature with seams at `xi +- W`; 2-d uses a paneled tensor rule over
/// the effective support of `G`.
pub fn convolution_oracle(
    model: &ProcessModel,
    window: &WindowFunction,
    xi: &[f64],
    omega: &[f64],
) -> Result<f64> {
    match xi.len() {
        1 => {
            let (xi, om) = (xi[0], omega[0]);
            let w = window.half_bandwidth();
            let mut seams = vec![xi - w, xi + w];
            for l in &model.lines {
                seams.push(l.freq);
                seams.push(-l.freq);
            }
            let mut val = adaptive_quad(
                |om_| window.eval_big_g(&[xi - om_]).norm_sqr() * model.sdf_continuum(&[om_]),
                xi - om,
                xi + om,
                1e-8,
                1e-300,
                &seams,
            )?;
            for l in &model.lines {
                for s in [l.freq, -l.freq] {
                    if s >= xi - om && s <= xi + om {
                        val += 0.5 * l.power * window.eval_big_g(&[xi - s]).norm_sqr();
                    }
                }
            }
            Ok(val)
        }
        2 => {
            let w = window.half_bandwidth();
            let pad = 3.0;
            let r = w + pad;
            // paneled tensor Gauss-Legendre over u in [-r, r]^2 clipped to
            // the controlled band
            let (t, wq) = crate::nufourier::gauss_legendre_rule(12)?;
            let panels = ((2.0 * r) / 0.5).ceil() as usize;
            let mut nodes = Vec::new();
            let mut wts = Vec::new();
            for p in 0..panels {
                let a = -r + 2.0 * r * p as f64 / panels as f64;
                let b = -r + 2.0 * r * (p + 1) as f64 / panels as f64;
                for (ti, wi) in t.iter().zip(&wq) {
                    nodes.push(0.5 * (a + b) + 0.5 * (b - a) * ti);
                    wts.push(0.5 * (b - a) * wi);
                }
            }
            let g = window.eval_big_g_grid(&nodes, &nodes);
            let mut acc = 0.0;
            for (i, (&u0, &w0)) in nodes.iter().zip(&wts).enumerate() {
                if u0.abs() > omega[0] {
                    continue;
                }
                for (j, (&u1, &w1)) in nodes.iter().zip(&wts).enumerate() {
                    if u1.abs() > omega[1] {
                        continue;
                    }
                    let s = model.sdf_continuum(&[xi[0] - u0, xi[1] - u1]);
                    acc += w0 * w1 * g[i * nodes.len() + j].norm_sqr() * s;
                }
            }
            Ok(acc)
        }
        d => Err(Error::invalid(format!("unsupported dimension {d}"))),
    }
}

/// One-point bias decomposition: `expected = window_convolution +
/// aliasing_eps` by construction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BiasReport {
    pub freq: Vec<f64>,
    pub expected: f64,
    pub window_convolution: f64,
    pub aliasing_eps: f64,
    /// `P{eps >= beta S(xi)}` bound when a `beta` was requested.
    pub bound_prob: Option<f64>,
}

/// Spectral mass of the model outside the controlled band around `xi`
/// (1-d): `int_{|w - xi| > Omega} S`.
pub fn tail_mass(model: &ProcessModel, omega: f64, xi: f64) -> Result<f64> {
    if !(omega > xi.abs()) {
        return Err(Error::invalid("tail mass needs |xi| < Omega"));
    }
    let tail_from = |c: f64| -> Result<f64> {
        // int_c^inf S(w) dw via the u = 1/w substitution
        adaptive_quad(
            |u| {
                if u <= 0.0 {
                    0.0
                } else {
                    model.sdf_continuum(&[1.0 / u]) / (u * u)
                }
            },
            0.0,
            1.0 / c,
            1e-9,
            1e-300,
            &[],
        )
    };
    let mut mass = tail_from(omega - xi)? + tail_from(omega + xi)?;
    for l in &model.lines {
        for s in [l.freq, -l.freq] {
            if (s - xi).abs() > omega {
                mass += 0.5 * l.power;
            }
        }
    }
    Ok(mass)
}

/// Aliasing-bias report at one frequency: exact expectation minus the
/// in-band window convolution.
pub fn aliasing_bias(
    model: &ProcessModel,
    set: &SampleSet,
    window: &WindowFunction,
    weights: &QuadratureWeights,
    xi: &[f64],
    beta: Option<f64>,
) -> Result<BiasReport> {
    let grid = FrequencyGrid::explicit(xi.to_vec(), xi.len())?;
    let expected = expected_estimate(model, set, weights, &grid)?[0];
    let conv = convolution_oracle(model, window, xi, &weights.omega)?;
    let eps = expected - conv;
    let bound_prob = match beta {
        Some(b) if xi.len() == 1 => {
            let s_xi = model.sdf_continuum(xi);
            let mass = tail_mass(model, weights.omega[0], xi[0])?;
            Some(thm_aliasing_bound(b, s_xi, mass, weights.l2))
        }
        _ => None,
    };
    Ok(BiasReport {
        freq: xi.to_vec(),
        expected,
        window_convolution: conv,
        aliasing_eps: eps,
        bound_prob,
    })
}

/// Tail-probability bound for the relative aliasing bias:
/// `P{eps(xi) >= beta S(xi)} <= min(1, 2 exp(-beta S(xi) /
/// (2 |alpha|_2^2 int_E S)))`.
pub fn thm_aliasing_bound(beta: f64, s_at_xi: f64, tail_mass: f64, l2_alpha: f64) -> f64 {
    assert!(beta >= 0.0 && s_at_xi > 0.0 && tail_mass > 0.0 && l2_alpha > 0.0);
    let exponent = beta * s_at_xi / (2.0 * l2_alpha * l2_alpha * tail_mass);
    (2.0 * (-exponent).exp()).min(1.0)
}

/// Rate bound for algebraic spectral tails:
/// `E eps(xi_n) <= C (Omega_n - xi_n)^(-2 nu) / nu`.
pub fn cor_rate_bound(nu: f64, c: f64, omega_n: f64, xi_n: f64) -> Result<f64> {
    if !(omega_n > xi_n) {
        return Err(Error::invalid("rate bound needs Omega_n > xi_n"));
    }
    if !(nu > 0.0) {
        return Err(Error::invalid("nu must be positive"));
    }
    Ok(c * (omega_n - xi_n).powf(-2.0 * nu) / nu)
}

/// Asymptotic mean and covariance of `(Re H, Im H)` for
/// `H(w) = sum_j exp(+2 pi i w x_j) alpha_j` with locations drawn i.i.d.
/// from a symmetric density. The second moments are exact for any `n`; the
/// normality is asymptotic.
#[derive(Debug, Clone, Copy)]
pub struct LemmaMoments {
    pub mean: [f64; 2],
    pub cov: [[f64; 2]; 2],
}

pub fn lemma_moments(density: &SamplingDensity, omega: f64, alpha: &[Complex64]) -> LemmaMoments {
    let phi1 = density.phi(omega);
    let phi2 = density.phi(2.0 * omega);
    let sum_a: f64 = alpha.iter().map(|c| c.re).sum();
    let sum_b: f64 = alpha.iter().map(|c| c.im).sum();
    let na: f64 = alpha.iter().map(|c| c.re * c.re).sum();
    let nb: f64 = alpha.iter().map(|c| c.im * c.im).sum();
    let ab: f64 = alpha.iter().map(|c| c.re * c.im).sum();
    let plus = 0.5 * (1.0 + phi2) - phi1 * phi1;
    let minus = 0.5 * (1.0 - phi2);
    LemmaMoments {
        mean: [sum_a * phi1, sum_b * phi1],
        cov: [
            [na * plus + nb * minus, ab * (phi2 - phi1 * phi1)],
            [ab * (phi2 - phi1 * phi1), na * minus + nb * plus],
        ],
    }
}
