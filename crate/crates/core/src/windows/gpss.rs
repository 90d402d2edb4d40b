//! Generalized prolate spheroidal sequence weights: the dominant generalized
//! eigenvector of the pencil `A beta = lambda B beta` built from sinc
//! matrices over the concentration band `[-W, W]` and the controlled band
//! `[-Omega, Omega]`, normalized so `beta' B beta = 1`.

use crate::special::bandlimit_kernel;
use crate::{Error, Result};
use faer::{Mat, Side};

/// Dense generalized-eigenproblem size limit.
pub const GPSS_DENSE_LIMIT: usize = 2000;

#[derive(Debug, Clone)]
pub struct GpssWeights {
    pub beta: Vec<f64>,
    pub w: f64,
    pub omega: f64,
    /// Concentration ratio; lies in `(0, 1]` since `[-W, W]` nests in
    /// `[-Omega, Omega]`.
    pub lambda: f64,
}

/// Build the sinc matrix `M_jk = sin(2 pi c (x_j - x_k)) / (pi (x_j - x_k))`
/// with diagonal `2c`.
pub fn sinc_matrix(locations: &[f64], c: f64) -> Mat<f64> {
    let n = locations.len();
    Mat::from_fn(n, n, |j, k| bandlimit_kernel(c, locations[j] - locations[k]))
}

/// Solve for the GPSS weights at the given 1-d locations.
pub fn gpss_solve(locations: &[f64], w: f64, omega: f64) -> Result<GpssWeights> {
    let n = locations.len();
    if n == 0 || n > GPSS_DENSE_LIMIT {
        return Err(Error::SizeOverLimit { what: "dense generalized eigenproblem", n, limit: GPSS_DENSE_LIMIT });
    }
    if !(w > 0.0 && omega >= w) {
        return Err(Error::invalid("need 0 < W <= Omega"));
    }
    let a = sinc_matrix(locations, w);
    let b = sinc_matrix(locations, omega);

    // Cholesky of B, regularized by delta*|B|*I if needed.
    let norm_b = b.norm_max();
    let mut delta = 1e-12;
    let mut llt = b.llt(Side::Lower);
    let mut tries = 0;
    while llt.is_err() {
        if tries >= 3 {
            return Err(Error::numerical("band gram matrix numerically indefinite beyond regularization"));
        }
        let mut breg = b.clone();
        for i in 0..n {
            breg[(i, i)] += delta * norm_b;
        }
        llt = breg.llt(Side::Lower);
        delta *= 10.0;
        tries += 1;
    }
    let llt = llt.expect("checked above");
    let l = llt.L();

    // C = L^{-1} A L^{-T}, symmetric; its dominant eigenpair gives beta.
    let mut c = a.clone();
    l.solve_lower_triangular_in_place(&mut c);
    let mut ct = c.transpose().to_owned();
    l.solve_lower_triangular_in_place(&mut ct);
    // symmetrize against roundoff
    let cs = Mat::from_fn(n, n, |i, j| 0.5 * (ct[(i, j)] + ct[(j, i)]));
    let eig = cs
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::numerical(format!("gpss eigensolver failed: {e:?}")))?;
    let lambda = eig.S()[n - 1];
    if !(lambda > 0.0) {
        return Err(Error::numerical(format!("dominant gpss eigenvalue {lambda} <= 0")));
    }
    if lambda > 1.0 + 1e-10 {
        return Err(Error::numerical(format!("gpss concentration ratio {lambda} exceeds 1")));
    }
    let mut u = Mat::<f64>::zeros(n, 1);
    for i in 0..n {
        u[(i, 0)] = eig.U()[(i, n - 1)];
    }
    // beta = L^{-T} u
    l.transpose().solve_upper_triangular_in_place(&mut u);
    let mut beta: Vec<f64> = (0..n).map(|i| u[(i, 0)]).collect();

    // normalize beta' B beta = 1
    let mut bb = 0.0;
    for j in 0..n {
        let mut acc = 0.0;
        for k in 0..n {
            acc += b[(j, k)] * beta[k];
        }
        bb += beta[j] * acc;
    }
    if !(bb > 0.0) {
        return Err(Error::numerical("gpss normalization failed: beta' B beta <= 0"));
    }
    let s = bb.sqrt();
    beta.iter_mut().for_each(|x| *x /= s);

    Ok(GpssWeights { beta, w, omega, lambda })
}
