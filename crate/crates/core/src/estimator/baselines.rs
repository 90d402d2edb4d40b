//! Baseline estimators for comparison: the classical Lomb-Scargle
//! periodogram (phase-offset form, power in variance units) and the
//! regridding estimator (local kernel-ridge interpolation to an equispaced
//! grid followed by the standard windowed gridded estimator).

use super::{EstimatorKind, SpectralEstimate};
use crate::nufourier::{nufft_points, FrequencyGrid, NuftOptions};
use crate::sampling::SampleSet;
use crate::windows::WindowFunction;
use crate::{Error, Result};
use num_complex::Complex64;

/// Classical Lomb-Scargle periodogram with the time-offset that decouples
/// the sine and cosine fits. Data are mean-centered; the power at a pure
/// sinusoid of amplitude `A` approaches `n A^2 / 4`.
pub fn lomb_scargle(set: &SampleSet, freqs: &FrequencyGrid) -> Result<SpectralEstimate> {
    if set.dim() != 1 {
        return Err(Error::invalid("lomb-scargle is 1-d"));
    }
    let n = set.n();
    if n < 3 {
        return Err(Error::invalid("lomb-scargle needs at least 3 points"));
    }
    if !set.has_values() {
        return Err(Error::invalid("lomb-scargle needs data values"));
    }
    lomb_scargle_values(set, set.values(), freqs)
}

/// Lomb-Scargle with explicit values (replicate rows).
pub fn lomb_scargle_values(
    set: &SampleSet,
    values: &[f64],
    freqs: &FrequencyGrid,
) -> Result<SpectralEstimate> {
    let n = set.n();
    let xs = set.xs();
    let mean = values.iter().sum::<f64>() / n as f64;
    let y: Vec<f64> = values.iter().map(|v| v - mean).collect();

    let nodes = freqs.points();
    let mut out = Vec::with_capacity(nodes.len());
    for &xi in &nodes {
        if xi == 0.0 {
            return Err(Error::invalid("lomb-scargle frequency entries must be nonzero"));
        }
        let w = 2.0 * std::f64::consts::PI * xi;
        let (mut s2, mut c2) = (0.0, 0.0);
        for &x in xs {
            let (s, c) = (2.0 * w * x).sin_cos();
            s2 += s;
            c2 += c;
        }
        let theta = 0.5 * s2.atan2(c2);
        let (mut cc, mut ss, mut yc, mut ys) = (0.0, 0.0, 0.0, 0.0);
        for (&x, &yv) in xs.iter().zip(&y) {
            let (s, c) = (w * x - theta).sin_cos();
            cc += c * c;
            ss += s * s;
            yc += yv * c;
            ys += yv * s;
        }
        if cc < 1e-12 * n as f64 && ss < 1e-12 * n as f64 {
            return Err(Error::numerical(format!("degenerate frequency {xi}: sinusoid basis vanishes")));
        }
        let power = 0.5 * (yc * yc / cc.max(1e-300) + ys * ys / ss.max(1e-300));
        out.push(power);
    }
    Ok(SpectralEstimate {
        freqs: nodes,
        dim: 1,
        values: out,
        kind: EstimatorKind::LombScargle,
        weights_ref: None,
    })
}

/// Local kernel-ridge interpolation: for each target, fit
/// `(K + ridge I) c = y` on the `k_nn` nearest neighbors with the Gaussian
/// kernel `exp(-(x - x')^2 / range)` and predict. A target coinciding with a
/// data point returns that value exactly.
pub fn kernel_ridge_interpolate(
    xs: &[f64],
    ys: &[f64],
    targets: &[f64],
    range: f64,
    k_nn: usize,
    ridge: f64,
) -> Result<Vec<f64>> {
    let n = xs.len();
    if n == 0 || ys.len() != n {
        return Err(Error::invalid("interpolation needs matching nonempty x and y"));
    }
    if k_nn == 0 || k_nn > n || k_nn > 64 {
        return Err(Error::invalid("k_nn must be in 1..=min(n, 64)"));
    }
    if !(range > 0.0) {
        return Err(Error::invalid("kernel range must be positive"));
    }
    let mut out = Vec::with_capacity(targets.len());
    for &t in targets {
        // nearest-k window around the insertion point in the sorted xs
        let ins = xs.partition_point(|&x| x < t);
        let (mut lo, mut hi) = (ins, ins); // [lo, hi) grows to k_nn entries
        while hi - lo < k_nn {
            let left_d = if lo > 0 { t - xs[lo - 1] } else { f64::INFINITY };
            let right_d = if hi < n { xs[hi] - t } else { f64::INFINITY };
            if left_d <= right_d {
                lo -= 1;
            } else {
                hi += 1;
            }
        }
        let idx: Vec<usize> = (lo..hi).collect();
        // exact hit: an interpolant reproduces its observations
        if let Some(&j) = idx.iter().find(|&&j| xs[j] == t) {
            out.push(ys[j]);
            continue;
        }
        let k = idx.len();
        let mut kk = vec![0.0; k * k];
        for a in 0..k {
            for b in 0..k {
                let d = xs[idx[a]] - xs[idx[b]];
                kk[a * k + b] = (-d * d / range).exp();
            }
            kk[a * k + a] += ridge;
        }
        let rhs: Vec<f64> = idx.iter().map(|&j| ys[j]).collect();
        let coef = small_cholesky_solve(&mut kk, k, &rhs)?;
        let mut pred = 0.0;
        for a in 0..k {
            let d = t - xs[idx[a]];
            pred += (-d * d / range).exp() * coef[a];
        }
        out.push(pred);
    }
    Ok(out)
}

/// In-place Cholesky solve of a small positive-definite system.
fn small_cholesky_solve(a: &mut [f64], k: usize, rhs: &[f64]) -> Result<Vec<f64>> {
    for j in 0..k {
        for i in j..k {
            let mut s = a[i * k + j];
            for p in 0..j {
                s -= a[i * k + p] * a[j * k + p];
            }
            if i == j {
                if s <= 0.0 {
                    return Err(Error::numerical("local kernel system not positive definite"));
                }
                a[j * k + j] = s.sqrt();
            } else {
                a[i * k + j] = s / a[j * k + j];
            }
        }
    }
    let mut x = rhs.to_vec();
    for i in 0..k {
        for p in 0..i {
            x[i] -= a[i * k + p] * x[p];
        }
        x[i] /= a[i * k + i];
    }
    for i in (0..k).rev() {
        for p in i + 1..k {
            x[i] -= a[p * k + i] * x[p];
        }
        x[i] /= a[i * k + i];
    }
    Ok(x)
}

/// Ridge used by the regridding interpolation. Large enough that the local
/// Gaussian-kernel fit has the kernel's own effective bandwidth (the
/// regridding artifact of interest); small enough that observed values are
/// reproduced to high accuracy.
const REGRID_RIDGE: f64 = 1e-8;

/// Regridding estimator: interpolate the data to an equispaced grid of
/// `grid_m` points over the domain hull, then apply the standard windowed
/// gridded estimator (grid weights `g(t_j) dt`) on frequencies up to the
/// grid Nyquist.
pub fn regrid_estimate(
    set: &SampleSet,
    grid_m: usize,
    kernel_range: f64,
    k_nn: usize,
    window: &WindowFunction,
) -> Result<SpectralEstimate> {
    regrid_estimate_values(set, set.values(), grid_m, kernel_range, k_nn, window)
}

/// Regridding with explicit values (replicate rows).
pub fn regrid_estimate_values(
    set: &SampleSet,
    values: &[f64],
    grid_m: usize,
    kernel_range: f64,
    k_nn: usize,
    window: &WindowFunction,
) -> Result<SpectralEstimate> {
    if set.dim() != 1 {
        return Err(Error::invalid("regridding is 1-d"));
    }
    if grid_m < 2 {
        return Err(Error::invalid("grid_m must be at least 2"));
    }
    if values.len() != set.n() {
        return Err(Error::invalid("regridding needs data values"));
    }
    let hull = set.domain().hull()[0];
    let dt = (hull[1] - hull[0]) / grid_m as f64;
    let grid: Vec<f64> = (0..grid_m).map(|j| hull[0] + j as f64 * dt).collect();
    let interp = kernel_ridge_interpolate(set.xs(), values, &grid, kernel_range, k_nn, REGRID_RIDGE)?;

    // windowed gridded estimator with weights g(t_j) dt, evaluated on
    // [0, grid Nyquist] at Rayleigh spacing
    let nyq = 0.5 / dt;
    let measure = hull[1] - hull[0];
    let step = 0.5 / measure;
    let mfreq = (nyq / step).floor() as usize + 1;
    let freqs: Vec<f64> = (0..mfreq).map(|k| k as f64 * step).collect();
    let coeffs: Vec<Complex64> = grid
        .iter()
        .zip(&interp)
        .map(|(&t, &v)| Complex64::new(window.eval_g(&[t]) * dt * v, 0.0))
        .collect();
    let h = nufft_points(&grid, 1, &coeffs, &freqs, &NuftOptions::default())?;
    Ok(SpectralEstimate {
        freqs,
        dim: 1,
        values: h.into_iter().map(|c| c.norm_sqr()).collect(),
        kind: EstimatorKind::Regrid,
        weights_ref: None,
    })
}
