//! Window functions `g` with Fourier transforms `G`: boxcar, Kaiser closed
//! form, prolate functions on unions of intervals (1-d) and box/disk pairs
//! (2-d), spectral concentration, and GPSS generalized-eigenvector weights.
//!
//! Every window is normalized to unit L2 norm on its domain and evaluates to
//! zero outside it. `G(w) = int g(x) exp(-2 pi i w x) dx`, so
//! `G(-w) = conj(G(w))` for real `g`.

mod gpss;
mod prolate;

pub use gpss::{gpss_solve, GpssWeights, GPSS_DENSE_LIMIT};
pub use prolate::{prolate_1d, prolate_2d, suggested_quad_order, Prolate1d, Prolate2d};

use crate::quad::adaptive_quad;
use crate::sampling::Domain;
use crate::special::{bessel_i0, sinc, sinhc_sqrt};
use crate::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WindowKind {
    Boxcar,
    Kaiser,
    Prolate1d,
    Prolate2d,
}

#[derive(Debug, Clone)]
enum WindowImpl {
    Boxcar {
        height: f64,
    },
    Kaiser {
        beta: f64,
        c0: f64,
        center: f64,
        half_len: f64,
    },
    Prolate1d(Prolate1d),
    Prolate2d(Prolate2d),
}

/// A window function: evaluable pair `(g, G)` with unit L2 normalization on
/// its domain and a concentration half-bandwidth `W`.
#[derive(Debug, Clone)]
pub struct WindowFunction {
    domain: Domain,
    half_bandwidth: f64,
    imp: WindowImpl,
}

/// Default concentration half-bandwidth: a few Rayleigh widths,
/// `4 / measure(domain)`.
pub fn default_half_bandwidth(domain: &Domain) -> f64 {
    4.0 / domain.measure()
}

/// Default Kaiser shape for a half-bandwidth `W` on an interval of length
/// `len`: `beta = pi W len`.
pub fn default_kaiser_beta(w: f64, len: f64) -> f64 {
    std::f64::consts::PI * w * len
}

impl WindowFunction {
    pub fn kind(&self) -> WindowKind {
        match &self.imp {
            WindowImpl::Boxcar { .. } => WindowKind::Boxcar,
            WindowImpl::Kaiser { .. } => WindowKind::Kaiser,
            WindowImpl::Prolate1d(_) => WindowKind::Prolate1d,
            WindowImpl::Prolate2d(_) => WindowKind::Prolate2d,
        }
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    /// Concentration half-bandwidth `W` (disk radius in 2-d).
    pub fn half_bandwidth(&self) -> f64 {
        self.half_bandwidth
    }

    /// Shape parameter where meaningful (Kaiser `beta`).
    pub fn shape_param(&self) -> Option<f64> {
        match &self.imp {
            WindowImpl::Kaiser { beta, .. } => Some(*beta),
            _ => None,
        }
    }

    /// Time-domain window; zero outside the domain.
    pub fn eval_g(&self, x: &[f64]) -> f64 {
        if !self.domain.contains(x) {
            return 0.0;
        }
        match &self.imp {
            WindowImpl::Boxcar { height } => *height,
            WindowImpl::Kaiser { beta, c0, center, half_len } => {
                let s = (x[0] - center) / half_len;
                let arg = (1.0 - s * s).max(0.0);
                c0 * bessel_i0(beta * arg.sqrt())
            }
            WindowImpl::Prolate1d(p) => p.eval_g(x[0]),
            WindowImpl::Prolate2d(p) => p.eval_g(x),
        }
    }

    /// Fourier transform `G(w) = int g(x) exp(-2 pi i w x) dx`.
    pub fn eval_big_g(&self, omega: &[f64]) -> Complex64 {
        match &self.imp {
            WindowImpl::Boxcar { height } => {
                let mut acc = Complex64::default();
                for piece in self.domain.pieces() {
                    let mut val = Complex64::new(*height, 0.0);
                    for (d, iv) in piece.iter().enumerate() {
                        let len = iv[1] - iv[0];
                        let center = 0.5 * (iv[0] + iv[1]);
                        let phase = -2.0 * std::f64::consts::PI * omega[d] * center;
                        val *= Complex64::new(phase.cos(), phase.sin())
                            * (len * sinc(std::f64::consts::PI * omega[d] * len));
                    }
                    acc += val;
                }
                acc
            }
            WindowImpl::Kaiser { beta, c0, center, half_len } => {
                let f = omega[0] * half_len;
                let u = beta * beta - (2.0 * std::f64::consts::PI * f).powi(2);
                let mag = c0 * half_len * 2.0 * sinhc_sqrt(u);
                let phase = -2.0 * std::f64::consts::PI * omega[0] * center;
                Complex64::new(phase.cos(), phase.sin()) * mag
            }
            WindowImpl::Prolate1d(p) => p.eval_big_g(omega[0]),
            WindowImpl::Prolate2d(p) => p.eval_big_g(omega),
        }
    }

    /// `G` on a 2-d tensor frequency grid, row-major over `f0 x f1`. Uses the
    /// separable fast path for prolate windows.
    pub fn eval_big_g_grid(&self, f0: &[f64], f1: &[f64]) -> Vec<Complex64> {
        debug_assert_eq!(self.dim(), 2);
        match &self.imp {
            WindowImpl::Prolate2d(p) => p.big_g_grid(f0, f1),
            _ => {
                let mut out = Vec::with_capacity(f0.len() * f1.len());
                for &a in f0 {
                    for &b in f1 {
                        out.push(self.eval_big_g(&[a, b]));
                    }
                }
                out
            }
        }
    }

    /// Concentration eigenvalue reported by prolate construction, when
    /// available.
    pub fn prolate_eigenvalue(&self) -> Option<f64> {
        match &self.imp {
            WindowImpl::Prolate1d(p) => Some(p.lambda()),
            WindowImpl::Prolate2d(p) => Some(p.lambda()),
            _ => None,
        }
    }

    /// `int_domain |g|` (enters the Theorem-style relative error scale).
    pub fn g_l1_norm(&self) -> f64 {
        match self.dim() {
            1 => {
                let mut acc = 0.0;
                for piece in self.domain.pieces() {
                    let [a, b] = piece[0];
                    acc += adaptive_quad(|x| self.eval_g(&[x]).abs(), a, b, 1e-10, 1e-14, &[])
                        .unwrap_or((b - a) * 1.0);
                }
                acc
            }
            _ => {
                // tensor Gauss-Legendre on the (single) box piece
                let piece = &self.domain.pieces()[0];
                let (t, w) = crate::nufourier::gauss_legendre_rule(96).expect("fixed rule");
                let mut acc = 0.0;
                for (i, &ti) in t.iter().enumerate() {
                    let x0 = 0.5 * (piece[0][0] + piece[0][1]) + 0.5 * (piece[0][1] - piece[0][0]) * ti;
                    for (j, &tj) in t.iter().enumerate() {
                        let x1 =
                            0.5 * (piece[1][0] + piece[1][1]) + 0.5 * (piece[1][1] - piece[1][0]) * tj;
                        acc += w[i] * w[j] * self.eval_g(&[x0, x1]).abs();
                    }
                }
                acc * 0.25 * (piece[0][1] - piece[0][0]) * (piece[1][1] - piece[1][0])
            }
        }
    }

    pub(crate) fn from_prolate_1d(p: Prolate1d, domain: Domain, w: f64) -> Self {
        WindowFunction { domain, half_bandwidth: w, imp: WindowImpl::Prolate1d(p) }
    }

    pub(crate) fn from_prolate_2d(p: Prolate2d, domain: Domain, w: f64) -> Self {
        WindowFunction { domain, half_bandwidth: w, imp: WindowImpl::Prolate2d(p) }
    }
}

/// Unit-L2 boxcar (flat) window on a domain.
pub fn boxcar(domain: &Domain) -> WindowFunction {
    let height = 1.0 / domain.measure().sqrt();
    WindowFunction {
        half_bandwidth: default_half_bandwidth(domain),
        domain: domain.clone(),
        imp: WindowImpl::Boxcar { height },
    }
}

/// Kaiser window on a single interval: `g(x) = c0 I0(beta sqrt(1 - s^2))`
/// in the unit-half-width coordinate `s`, with both transform branches
/// realized through one entire function so the crossover is exact.
pub fn kaiser(domain: &Domain, beta: f64) -> Result<WindowFunction> {
    if domain.dim() != 1 || domain.pieces().len() != 1 {
        return Err(Error::invalid("kaiser window expects a single 1-d interval"));
    }
    if !(beta > 0.0) {
        return Err(Error::invalid("kaiser shape beta must be positive"));
    }
    let [a, b] = domain.pieces()[0][0];
    let center = 0.5 * (a + b);
    let half_len = 0.5 * (b - a);
    // unit L2 norm: c0^2 half_len int_{-1}^{1} I0(beta sqrt(1-s^2))^2 ds = 1
    let (t, w) = crate::nufourier::gauss_legendre_rule(200)?;
    let q: f64 = t
        .iter()
        .zip(&w)
        .map(|(&s, &wi)| {
            let v = bessel_i0(beta * (1.0 - s * s).max(0.0).sqrt());
            wi * v * v
        })
        .sum();
    let c0 = 1.0 / (half_len * q).sqrt();
    Ok(WindowFunction {
        half_bandwidth: beta / (std::f64::consts::PI * (b - a)),
        domain: domain.clone(),
        imp: WindowImpl::Kaiser { beta, c0, center, half_len },
    })
}

/// Spectral concentration `lambda(g) = int_{-W}^{W} |G(w)|^2 dw` (1-d) or the
/// same integral over the disk of radius `W` (2-d). Always strictly below 1
/// for a compactly supported window.
pub fn concentration(window: &WindowFunction, w: f64) -> Result<f64> {
    if !(w > 0.0) {
        return Err(Error::invalid("concentration half-bandwidth must be positive"));
    }
    match window.dim() {
        1 => {
            // sinc-type |G|^2 oscillates on the unit scale of 1/measure;
            // seed panels accordingly
            let panels = ((2.0 * w * window.domain().measure()).ceil() as usize).clamp(4, 4096);
            let seams: Vec<f64> =
                (1..panels).map(|i| -w + 2.0 * w * i as f64 / panels as f64).collect();
            adaptive_quad(
                |om| window.eval_big_g(&[om]).norm_sqr(),
                -w,
                w,
                1e-9,
                1e-14,
                &seams,
            )
        }
        _ => {
            // polar tensor quadrature over the disk
            let (tr, wr) = crate::nufourier::gauss_legendre_rule(96)?;
            let ntheta = 128usize;
            let mut acc = 0.0;
            for (i, &ti) in tr.iter().enumerate() {
                let r = 0.5 * w * (ti + 1.0);
                let mut ring = 0.0;
                for k in 0..ntheta {
                    let th = 2.0 * std::f64::consts::PI * k as f64 / ntheta as f64;
                    ring += window.eval_big_g(&[r * th.cos(), r * th.sin()]).norm_sqr();
                }
                acc += wr[i] * (0.5 * w) * r * ring * (2.0 * std::f64::consts::PI / ntheta as f64);
            }
            Ok(acc)
        }
    }
}
