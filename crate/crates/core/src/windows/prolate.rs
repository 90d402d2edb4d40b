//! Prolate windows: dominant eigenfunctions of the band-concentration
//! integral operator, discretized with Gauss-Legendre quadrature per domain
//! piece and solved densely. Off-node evaluation uses the eigenfunction
//! integral identity `g(x) = lambda^{-1} int K(x, t) g(t) dt`, which is exact
//! at the quadrature nodes and preserves accuracy across disjoint pieces.

use super::WindowFunction;
use crate::nufourier::gauss_legendre_rule;
use crate::sampling::Domain;
use crate::special::{bandlimit_kernel, bessel_j1};
use crate::{Error, Result};
use faer::{Mat, Side};
use num_complex::Complex64;
use rayon::prelude::*;

/// Quadrature order per domain piece that resolves both the concentration
/// kernel and transform evaluations up to frequency `omega_max`.
pub fn suggested_quad_order(omega_max: f64, piece_len: f64) -> usize {
    ((1.8 * omega_max * piece_len).ceil() as usize + 32).max(64)
}

#[derive(Debug, Clone)]
pub struct Prolate1d {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    gvals: Vec<f64>,
    lambda: f64,
    w: f64,
}

impl Prolate1d {
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub(super) fn eval_g(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.nodes.len() {
            acc += self.weights[i] * bandlimit_kernel(self.w, x - self.nodes[i]) * self.gvals[i];
        }
        acc / self.lambda
    }

    pub(super) fn eval_big_g(&self, omega: f64) -> Complex64 {
        let mut acc = Complex64::default();
        for i in 0..self.nodes.len() {
            let phase = -2.0 * std::f64::consts::PI * omega * self.nodes[i];
            acc += Complex64::new(phase.cos(), phase.sin()) * (self.weights[i] * self.gvals[i]);
        }
        acc
    }
}

/// Dominant prolate on a union of intervals, concentrated on `[-w, w]`.
pub fn prolate_1d(domain: &Domain, w: f64, quad_order: usize) -> Result<WindowFunction> {
    if domain.dim() != 1 {
        return Err(Error::invalid("prolate_1d expects a 1-d domain"));
    }
    if !(w > 0.0) {
        return Err(Error::invalid("half-bandwidth must be positive"));
    }
    if quad_order < 64 {
        return Err(Error::invalid("quad_order must be at least 64 per piece"));
    }
    let (t01, w01) = gauss_legendre_rule(quad_order)?;
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    for piece in domain.pieces() {
        let [a, b] = piece[0];
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        for (ti, wi) in t01.iter().zip(&w01) {
            nodes.push(c + h * ti);
            weights.push(h * wi);
        }
    }
    let n = nodes.len();
    let sqrt_w: Vec<f64> = weights.iter().map(|x| x.sqrt()).collect();
    let mut m = Mat::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = sqrt_w[i] * bandlimit_kernel(w, nodes[i] - nodes[j]) * sqrt_w[j];
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    let eig = m
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::numerical(format!("prolate eigensolver failed: {e:?}")))?;
    let idx = n - 1; // eigenvalues ascending
    let mut lambda = eig.S()[idx];
    if !(lambda > 0.0) {
        return Err(Error::numerical(format!("dominant concentration eigenvalue {lambda} <= 0")));
    }
    let mut gvals: Vec<f64> = (0..n).map(|i| eig.U()[(i, idx)] / sqrt_w[i]).collect();

    // The top of the spectrum is numerically degenerate for large W |D|; for
    // an origin-symmetric domain pin the even representative (the node
    // vector is ascending, so reversal maps x to -x).
    if domain.is_origin_symmetric() {
        let avg: Vec<f64> = (0..n).map(|i| 0.5 * (gvals[i] + gvals[n - 1 - i])).collect();
        let norm: f64 = weights.iter().zip(&avg).map(|(w, g)| w * g * g).sum::<f64>().sqrt();
        if norm > 0.1 {
            gvals = avg.iter().map(|g| g / norm).collect();
            let v: Vec<f64> = (0..n).map(|i| sqrt_w[i] * gvals[i]).collect();
            let mut rq = 0.0;
            for i in 0..n {
                let mut acc = 0.0;
                for j in 0..n {
                    acc += sqrt_w[i] * bandlimit_kernel(w, nodes[i] - nodes[j]) * sqrt_w[j] * v[j];
                }
                rq += v[i] * acc;
            }
            lambda = rq;
        }
    }

    let s: f64 = weights.iter().zip(&gvals).map(|(w, g)| w * g).sum();
    if s < 0.0 {
        gvals.iter_mut().for_each(|g| *g = -*g);
    }
    let p = Prolate1d { nodes, weights, gvals, lambda, w };
    Ok(WindowFunction::from_prolate_1d(p, domain.clone(), w))
}

#[derive(Debug, Clone)]
pub struct Prolate2d {
    nodes0: Vec<f64>,
    weights0: Vec<f64>,
    nodes1: Vec<f64>,
    weights1: Vec<f64>,
    /// Row-major `n0 x n1` window values at the tensor nodes.
    gvals: Vec<f64>,
    lambda: f64,
    radius: f64,
}

/// Inner disk integral of the 2-d concentration operator:
/// `int_{|s| <= W} exp(2 pi i s.r) ds = (W/|r|) J1(2 pi W |r|)`.
fn disk_kernel(radius: f64, dx: f64, dy: f64) -> f64 {
    let r = dx.hypot(dy);
    if r < 1e-12 / radius.max(1.0) {
        return std::f64::consts::PI * radius * radius;
    }
    radius / r * bessel_j1(2.0 * std::f64::consts::PI * radius * r)
}

impl Prolate2d {
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub(super) fn eval_g(&self, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (p, &tp) in self.nodes0.iter().enumerate() {
            let mut inner = 0.0;
            for (q, &tq) in self.nodes1.iter().enumerate() {
                inner += self.weights1[q]
                    * disk_kernel(self.radius, x[0] - tp, x[1] - tq)
                    * self.gvals[p * self.nodes1.len() + q];
            }
            acc += self.weights0[p] * inner;
        }
        acc / self.lambda
    }

    pub(super) fn eval_big_g(&self, omega: &[f64]) -> Complex64 {
        let n1 = self.nodes1.len();
        let ph1: Vec<Complex64> = self
            .nodes1
            .iter()
            .zip(&self.weights1)
            .map(|(&t, &w)| {
                let phase = -2.0 * std::f64::consts::PI * omega[1] * t;
                Complex64::new(phase.cos(), phase.sin()) * w
            })
            .collect();
        let mut acc = Complex64::default();
        for (p, &tp) in self.nodes0.iter().enumerate() {
            let mut inner = Complex64::default();
            for q in 0..n1 {
                inner += ph1[q] * self.gvals[p * n1 + q];
            }
            let phase = -2.0 * std::f64::consts::PI * omega[0] * tp;
            acc += Complex64::new(phase.cos(), phase.sin()) * self.weights0[p] * inner;
        }
        acc
    }

    /// `G` on a tensor frequency grid (`f0 x f1`, row-major), using the
    /// separable phase structure: cost `O(n0 n1 (|f0| + |f1|))` instead of
    /// `O(n0 n1 |f0| |f1|)`.
    pub(super) fn big_g_grid(&self, f0: &[f64], f1: &[f64]) -> Vec<Complex64> {
        let n0 = self.nodes0.len();
        let n1 = self.nodes1.len();
        let two_pi = 2.0 * std::f64::consts::PI;
        // inner[p][j] = sum_q w1_q g_pq exp(-2 pi i f1_j t1_q)
        let mut inner = vec![Complex64::default(); n0 * f1.len()];
        for p in 0..n0 {
            for (q, (&tq, &wq)) in self.nodes1.iter().zip(&self.weights1).enumerate() {
                let gw = self.gvals[p * n1 + q] * wq;
                if gw == 0.0 {
                    continue;
                }
                for (j, &fj) in f1.iter().enumerate() {
                    let phase = -two_pi * fj * tq;
                    inner[p * f1.len() + j] += Complex64::new(phase.cos(), phase.sin()) * gw;
                }
            }
        }
        let mut out = vec![Complex64::default(); f0.len() * f1.len()];
        for (i, &fi) in f0.iter().enumerate() {
            for p in 0..n0 {
                let phase = -two_pi * fi * self.nodes0[p];
                let ph = Complex64::new(phase.cos(), phase.sin()) * self.weights0[p];
                for j in 0..f1.len() {
                    out[i * f1.len() + j] += ph * inner[p * f1.len() + j];
                }
            }
        }
        out
    }
}

/// Dominant prolate on a 2-d box, concentrated on the disk of radius `w`.
/// The returned window is pinned to the symmetric representative of the
/// (numerically degenerate) top eigenvalue cluster by averaging over the
/// reflection symmetries of the box, plus the quarter-turn symmetry for a
/// square box.
pub fn prolate_2d(domain: &Domain, w: f64, quad_order: usize) -> Result<WindowFunction> {
    if domain.dim() != 2 || domain.pieces().len() != 1 {
        return Err(Error::invalid("prolate_2d expects a single 2-d box"));
    }
    if !(w > 0.0) {
        return Err(Error::invalid("disk radius must be positive"));
    }
    if quad_order < 16 {
        return Err(Error::invalid("quad_order must be at least 16 per axis"));
    }
    let piece = &domain.pieces()[0];
    let n_total = quad_order * quad_order;
    if n_total > 4096 {
        return Err(Error::SizeOverLimit { what: "prolate_2d dense discretization", n: n_total, limit: 4096 });
    }
    let (t01, w01) = gauss_legendre_rule(quad_order)?;
    let axis = |iv: [f64; 2]| -> (Vec<f64>, Vec<f64>) {
        let c = 0.5 * (iv[0] + iv[1]);
        let h = 0.5 * (iv[1] - iv[0]);
        (t01.iter().map(|&t| c + h * t).collect(), w01.iter().map(|&x| h * x).collect())
    };
    let (nodes0, weights0) = axis(piece[0]);
    let (nodes1, weights1) = axis(piece[1]);
    let n0 = nodes0.len();
    let n1 = nodes1.len();
    let n = n0 * n1;

    let sqrt_w: Vec<f64> = (0..n)
        .map(|i| (weights0[i / n1] * weights1[i % n1]).sqrt())
        .collect();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let (pi, qi) = (i / n1, i % n1);
            let mut row = vec![0.0; i + 1];
            for (j, rj) in row.iter_mut().enumerate() {
                let (pj, qj) = (j / n1, j % n1);
                *rj = sqrt_w[i]
                    * disk_kernel(w, nodes0[pi] - nodes0[pj], nodes1[qi] - nodes1[qj])
                    * sqrt_w[j];
            }
            row
        })
        .collect();
    let mut m = Mat::<f64>::zeros(n, n);
    for (i, row) in rows.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    let eig = m
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::numerical(format!("prolate eigensolver failed: {e:?}")))?;
    let lambda_raw = eig.S()[n - 1];
    if !(lambda_raw > 0.0) {
        return Err(Error::numerical(format!("dominant concentration eigenvalue {lambda_raw} <= 0")));
    }
    let mut gvals: Vec<f64> = (0..n).map(|i| eig.U()[(i, n - 1)] / sqrt_w[i]).collect();

    // Symmetry averaging within the top cluster.
    let square = ((piece[0][1] - piece[0][0]) - (piece[1][1] - piece[1][0])).abs()
        < 1e-12 * (piece[0][1] - piece[0][0]);
    let avg = symmetrize(&gvals, n0, n1, square);
    let norm_sq: f64 = (0..n).map(|i| sqrt_w[i] * sqrt_w[i] * avg[i] * avg[i]).sum();
    if norm_sq.sqrt() > 0.1 {
        gvals = avg.iter().map(|v| v / norm_sq.sqrt()).collect();
    }
    let s: f64 = (0..n).map(|i| sqrt_w[i] * sqrt_w[i] * gvals[i]).sum();
    if s < 0.0 {
        gvals.iter_mut().for_each(|g| *g = -*g);
    }

    // Rayleigh quotient of the (possibly averaged) vector.
    let v: Vec<f64> = (0..n).map(|i| sqrt_w[i] * gvals[i]).collect();
    let mut lambda = 0.0;
    for i in 0..n {
        let mut acc = 0.0;
        for j in 0..n {
            let (pi, qi) = (i / n1, i % n1);
            let (pj, qj) = (j / n1, j % n1);
            acc += sqrt_w[i]
                * disk_kernel(w, nodes0[pi] - nodes0[pj], nodes1[qi] - nodes1[qj])
                * sqrt_w[j]
                * v[j];
        }
        lambda += v[i] * acc;
    }

    let p = Prolate2d { nodes0, weights0, nodes1, weights1, gvals, lambda, radius: w };
    Ok(WindowFunction::from_prolate_2d(p, domain.clone(), w))
}

fn symmetrize(g: &[f64], n0: usize, n1: usize, square: bool) -> Vec<f64> {
    let at = |p: usize, q: usize| g[p * n1 + q];
    let mut out = vec![0.0; g.len()];
    let mut count = 4.0;
    for p in 0..n0 {
        for q in 0..n1 {
            let mut acc = at(p, q) + at(n0 - 1 - p, q) + at(p, n1 - 1 - q) + at(n0 - 1 - p, n1 - 1 - q);
            if square {
                acc += at(q, p) + at(n1 - 1 - q, p) + at(q, n0 - 1 - p) + at(n1 - 1 - q, n0 - 1 - p);
            }
            out[p * n1 + q] = acc;
        }
    }
    if square {
        count = 8.0;
    }
    out.iter_mut().for_each(|v| *v /= count);
    out
}
