//! Ground-truth process models: Matern covariance/spectral density (with
//! optional anisotropy), additive spectral lines, white-noise nugget,
//! covariance matrices, and dense Gaussian-process simulation.

use crate::rng::stream_rng;
use crate::special::{bessel_k, gamma};
use crate::{sampling::SampleSet, Error, Result};
use faer::{Mat, Side};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Matern parameters. `rho` is the range in location units, `nu` the
/// smoothness. `anisotropy` is a row-major `dim x dim` invertible matrix `A`;
/// the covariance at lag `h` is the isotropic Matern evaluated at `|A h|`,
/// so the spectral density is `|det A|^{-1} S_iso(|A^{-T} w|)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaternSpec {
    pub sigma: f64,
    pub rho: f64,
    pub nu: f64,
    pub dim: usize,
    pub anisotropy: Vec<f64>,
}

impl MaternSpec {
    pub fn new(sigma: f64, rho: f64, nu: f64, dim: usize) -> Result<Self> {
        let mut anisotropy = vec![0.0; dim * dim];
        for d in 0..dim {
            anisotropy[d * dim + d] = 1.0;
        }
        MaternSpec { sigma, rho, nu, dim, anisotropy }.validated()
    }

    pub fn with_anisotropy(mut self, a: Vec<f64>) -> Result<Self> {
        self.anisotropy = a;
        self.validated()
    }

    fn validated(self) -> Result<Self> {
        if !(self.sigma > 0.0 && self.rho > 0.0 && self.nu > 0.0) {
            return Err(Error::invalid(format!(
                "matern parameters must be positive: sigma={}, rho={}, nu={}",
                self.sigma, self.rho, self.nu
            )));
        }
        if !(self.dim == 1 || self.dim == 2) {
            return Err(Error::invalid("dim must be 1 or 2"));
        }
        if self.anisotropy.len() != self.dim * self.dim {
            return Err(Error::invalid("anisotropy must be dim x dim"));
        }
        if self.det_a().abs() < 1e-300 {
            return Err(Error::invalid("anisotropy matrix must be invertible"));
        }
        Ok(self)
    }

    fn det_a(&self) -> f64 {
        match self.dim {
            1 => self.anisotropy[0],
            _ => self.anisotropy[0] * self.anisotropy[3] - self.anisotropy[1] * self.anisotropy[2],
        }
    }

    /// `|A h|` for a lag vector `h`.
    fn scaled_lag(&self, h: &[f64]) -> f64 {
        match self.dim {
            1 => (self.anisotropy[0] * h[0]).abs(),
            _ => {
                let u = self.anisotropy[0] * h[0] + self.anisotropy[1] * h[1];
                let v = self.anisotropy[2] * h[0] + self.anisotropy[3] * h[1];
                u.hypot(v)
            }
        }
    }

    /// `|A^{-T} w|` for a frequency vector `w`.
    fn scaled_freq(&self, w: &[f64]) -> f64 {
        match self.dim {
            1 => (w[0] / self.anisotropy[0]).abs(),
            _ => {
                // A^{-T} = adj(A)^T / det = [[a22, -a21], [-a12, a11]] / det
                let det = self.det_a();
                let u = (self.anisotropy[3] * w[0] - self.anisotropy[2] * w[1]) / det;
                let v = (-self.anisotropy[1] * w[0] + self.anisotropy[0] * w[1]) / det;
                u.hypot(v)
            }
        }
    }
}

/// A discrete spectral line: mass `power/2` at frequencies `+-freq`, i.e.
/// covariance contribution `power * cos(2 pi freq h)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralLine {
    pub freq: f64,
    pub power: f64,
}

/// Process model: optional Matern continuum plus spectral lines plus a
/// white-noise nugget on the covariance diagonal. Positive semidefinite by
/// construction (sum of valid covariances).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessModel {
    pub matern: Option<MaternSpec>,
    pub lines: Vec<SpectralLine>,
    pub nugget: f64,
}

impl ProcessModel {
    pub fn new(matern: Option<MaternSpec>, lines: Vec<SpectralLine>, nugget: f64) -> Result<Self> {
        if nugget < 0.0 {
            return Err(Error::invalid("nugget must be nonnegative"));
        }
        if lines.iter().any(|l| l.power < 0.0 || !l.freq.is_finite()) {
            return Err(Error::invalid("line powers must be nonnegative and finite"));
        }
        if !lines.is_empty() {
            let dim = matern.as_ref().map_or(1, |m| m.dim);
            if dim != 1 {
                return Err(Error::invalid("spectral lines are 1-d only"));
            }
        }
        Ok(ProcessModel { matern, lines, nugget })
    }

    pub fn dim(&self) -> usize {
        self.matern.as_ref().map_or(1, |m| m.dim)
    }

    /// Continuum spectral density (Matern part only; lines are point masses
    /// and the nugget acts on the covariance diagonal, not as a density).
    pub fn sdf_continuum(&self, omega: &[f64]) -> f64 {
        self.matern.as_ref().map_or(0.0, |m| matern_sdf(m, omega))
    }

    /// Process variance `K(0)`.
    pub fn variance(&self) -> f64 {
        self.matern.as_ref().map_or(0.0, |m| m.sigma * m.sigma)
            + self.lines.iter().map(|l| l.power).sum::<f64>()
            + self.nugget
    }

    /// Covariance at a lag vector (no nugget; the nugget applies only at
    /// identical indices).
    pub fn cov_lag(&self, h: &[f64]) -> f64 {
        let mut k = 0.0;
        if let Some(m) = &self.matern {
            k += matern_cov(m, m.scaled_lag(h));
        }
        if !self.lines.is_empty() {
            for l in &self.lines {
                k += l.power * (2.0 * std::f64::consts::PI * l.freq * h[0]).cos();
            }
        }
        k
    }
}

/// Matern spectral density in `spec.dim` dimensions,
/// `S(w) = C sigma^2 (2 nu / rho^2 + 4 pi^2 |A^{-T} w|^2)^(-nu - d/2) / |det A|`
/// with `C` fixed so that the density integrates to `sigma^2`.
pub fn matern_sdf(spec: &MaternSpec, omega: &[f64]) -> f64 {
    let d = spec.dim as f64;
    let a2 = 2.0 * spec.nu / (spec.rho * spec.rho);
    let c = spec.sigma
        * spec.sigma
        * 2f64.powf(d)
        * std::f64::consts::PI.powf(0.5 * d)
        * gamma(spec.nu + 0.5 * d)
        * a2.powf(spec.nu)
        / gamma(spec.nu);
    let wn = spec.scaled_freq(omega);
    let q = a2 + 4.0 * std::f64::consts::PI * std::f64::consts::PI * wn * wn;
    c / spec.det_a().abs() * q.powf(-(spec.nu + 0.5 * d))
}

/// Isotropic Matern covariance at lag `r >= 0` (Stein's normalization,
/// `K(0) = sigma^2`), consistent with [`matern_sdf`] under Fourier inversion.
pub fn matern_cov(spec: &MaternSpec, r: f64) -> f64 {
    assert!(r >= 0.0, "lag must be nonnegative");
    let z = (2.0 * spec.nu).sqrt() * r / spec.rho;
    if z < 1e-10 {
        return spec.sigma * spec.sigma;
    }
    // K_nu underflows for large z; the covariance is then zero.
    if z > 600.0 {
        return 0.0;
    }
    let k = bessel_k(spec.nu, z).expect("bessel_k on validated input");
    spec.sigma * spec.sigma * 2f64.powf(1.0 - spec.nu) / gamma(spec.nu) * z.powf(spec.nu) * k
}

/// Dense covariance matrix of the model at the sample locations:
/// `K(x_j - x_k) + sum_lines power cos(2 pi f (x_j - x_k)) + nugget 1{j=k}`.
pub fn process_cov_matrix(model: &ProcessModel, set: &SampleSet) -> Result<Mat<f64>> {
    if model.dim() != set.dim() {
        return Err(Error::invalid("model and sample set dimension mismatch"));
    }
    let n = set.n();
    let dim = set.dim();
    let locs = set.locations();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut row = vec![0.0; n];
            let xi = &locs[i * dim..(i + 1) * dim];
            for j in 0..=i {
                let xj = &locs[j * dim..(j + 1) * dim];
                let h: Vec<f64> = xi.iter().zip(xj).map(|(a, b)| a - b).collect();
                row[j] = model.cov_lag(&h);
            }
            row
        })
        .collect();
    let mut cov = Mat::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            cov[(i, j)] = rows[i][j];
            cov[(j, i)] = rows[i][j];
        }
        cov[(i, i)] += model.nugget;
    }
    Ok(cov)
}

/// Default dense simulation limit.
pub const GP_DENSE_LIMIT: usize = 8192;

/// Draw `replicates` i.i.d. zero-mean Gaussian vectors with covariance given
/// by the model at the sample locations, via a (jittered, if necessary)
/// Cholesky factorization. Deterministic in `(model, set, replicates, seed)`.
pub fn gp_simulate(
    model: &ProcessModel,
    set: &SampleSet,
    replicates: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    let n = set.n();
    if n > GP_DENSE_LIMIT {
        return Err(Error::SizeOverLimit { what: "dense gp simulation", n, limit: GP_DENSE_LIMIT });
    }
    let mut cov = process_cov_matrix(model, set)?;
    let trace_avg = (0..n).map(|i| cov[(i, i)]).sum::<f64>() / n as f64;

    let mut llt = cov.llt(Side::Lower);
    let mut jitter = 1e-12 * trace_avg.max(f64::MIN_POSITIVE);
    let mut tries = 0;
    while llt.is_err() {
        if tries >= 3 {
            return Err(Error::numerical("covariance factorization failed after jitter escalation"));
        }
        for i in 0..n {
            cov[(i, i)] += jitter;
        }
        jitter *= 10.0;
        tries += 1;
        llt = cov.llt(Side::Lower);
    }
    let llt = llt.expect("factorization checked above");
    let l = llt.L();

    // One standard-normal column per replicate, drawn replicate-major.
    let mut rng = stream_rng(seed, crate::rng::STREAM_REPLICATE_BASE);
    let mut z = Mat::<f64>::zeros(n, replicates);
    for r in 0..replicates {
        for i in 0..n {
            z[(i, r)] = rng.sample(StandardNormal);
        }
    }
    let y = l * &z;
    Ok((0..replicates).map(|r| (0..n).map(|i| y[(i, r)]).collect()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{generate_uniform, Domain};
    use crate::Error;

    fn spec_075() -> MaternSpec {
        MaternSpec::new(1.0, 0.1, 0.75, 1).unwrap()
    }

    #[test]
    fn sdf_is_even_and_nonnegative() {
        let s = spec_075();
        let mut rng = crate::rng::seeded_rng(4);
        use rand::Rng;
        for _ in 0..50 {
            let w: f64 = rng.random::<f64>() * 2000.0 - 1000.0;
            let a = matern_sdf(&s, &[w]);
            let b = matern_sdf(&s, &[-w]);
            assert!(a >= 0.0);
            assert!((a - b).abs() <= 1e-15 * a.max(1e-300));
        }
    }

    #[test]
    fn sdf_integrates_to_variance() {
        let s = spec_075();
        let cutoff = 1e5;
        let body =
            2.0 * crate::quad::integrate(|w| matern_sdf(&s, &[w]), 0.0, cutoff, 1e-11).unwrap();
        // algebraic tail: S ~ C (4 pi^2)^(-nu-1/2) w^(-2nu-1)
        let c = matern_sdf(&s, &[cutoff]) * cutoff.powf(2.0 * s.nu + 1.0)
            * (1.0 + 2.0 * s.nu / (s.rho * s.rho) / (4.0 * std::f64::consts::PI.powi(2) * cutoff * cutoff));
        let tail = 2.0 * c * cutoff.powf(-2.0 * s.nu) / (2.0 * s.nu);
        assert!(
            (body + tail - 1.0).abs() < 1e-8,
            "integral = {}",
            body + tail
        );
    }

    #[test]
    fn sdf_tail_slope() {
        let s = spec_075();
        let w = 1e4;
        let slope = (matern_sdf(&s, &[w * 1.01]).ln() - matern_sdf(&s, &[w]).ln())
            / ((w * 1.01f64).ln() - w.ln());
        let want = -(2.0 * s.nu + 1.0);
        assert!((slope - want).abs() < 0.01 * want.abs(), "slope {slope} vs {want}");
    }

    #[test]
    fn cov_at_zero_and_exponential_case() {
        let s = spec_075();
        assert!((matern_cov(&s, 0.0) - 1.0).abs() < 1e-14);
        let e = MaternSpec::new(2.0, 0.3, 0.5, 1).unwrap();
        for &r in &[0.01, 0.1, 1.0, 3.0] {
            let want = 4.0 * (-r / 0.3f64).exp();
            assert!((matern_cov(&e, r) - want).abs() <= 1e-12 * want.max(1.0));
        }
    }

    #[test]
    fn half_integer_consistency() {
        // general-order evaluation against closed forms for nu = 1/2, 3/2, 5/2
        for &(nu, rho) in &[(0.5, 0.2), (1.5, 0.2), (2.5, 0.2)] {
            let s = MaternSpec::new(1.3, rho, nu, 1).unwrap();
            for &r in &[0.01, 0.05, 0.2, 0.7] {
                let z = (2.0 * nu).sqrt() * r / rho;
                let closed = match nu {
                    x if x == 0.5 => (-z).exp(),
                    x if x == 1.5 => (1.0 + z) * (-z).exp(),
                    _ => (1.0 + z + z * z / 3.0) * (-z).exp(),
                };
                let want = 1.3 * 1.3 * closed;
                let got = matern_cov(&s, r);
                assert!(
                    (got - want).abs() <= 1e-10 * want.abs(),
                    "nu={nu} r={r}: {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn cov_matches_fourier_inversion_of_sdf() {
        let s = spec_075();
        for &r in &[0.01, 0.1, 0.5] {
            let cutoff = 2e4;
            let osc = crate::quad::integrate(
                |w| (2.0 * std::f64::consts::PI * w * r).cos() * matern_sdf(&s, &[w]),
                0.0,
                cutoff,
                1e-10,
            )
            .unwrap();
            let inv = 2.0 * osc; // tail below 1e-9 by the van der Corput bound
            let want = matern_cov(&s, r);
            assert!((inv - want).abs() < 1e-6, "r={r}: {inv} vs {want}");
        }
    }

    #[test]
    fn cov_monotone_bound() {
        let s = spec_075();
        let k0 = matern_cov(&s, 0.0);
        let mut r = 1e-4;
        while r < 10.0 {
            assert!(matern_cov(&s, r) <= k0 + 1e-12);
            r *= 1.3;
        }
    }

    #[test]
    fn cov_matrix_diagonal_and_line_rank() {
        let dom = Domain::interval(0.0, 1.0).unwrap();
        let set = generate_uniform(&dom, 40, 2).unwrap();
        let model = ProcessModel::new(
            Some(spec_075()),
            vec![SpectralLine { freq: 30.0, power: 0.25 }],
            0.1,
        )
        .unwrap();
        let cov = process_cov_matrix(&model, &set).unwrap();
        for i in 0..40 {
            assert!((cov[(i, i)] - (1.0 + 0.25 + 0.1)).abs() < 1e-12);
        }

        // line-only model: power * cos covariance, numerical rank <= 2
        let line = ProcessModel::new(None, vec![SpectralLine { freq: 7.0, power: 0.5 }], 0.0).unwrap();
        let cov = process_cov_matrix(&line, &set).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                let h = set.xs()[i] - set.xs()[j];
                let want = 0.5 * (2.0 * std::f64::consts::PI * 7.0 * h).cos();
                assert!((cov[(i, j)] - want).abs() < 1e-13);
            }
        }
        let evals = cov.self_adjoint_eigenvalues(Side::Lower).unwrap();
        let below = evals.iter().filter(|&&e| e.abs() > 1e-10).count();
        assert!(below <= 2, "cosine covariance rank {below}");
    }

    #[test]
    fn cov_matrix_is_psd() {
        let dom = Domain::interval(0.0, 1.0).unwrap();
        let set = generate_uniform(&dom, 50, 6).unwrap();
        let model =
            ProcessModel::new(Some(MaternSpec::new(1.0, 0.2, 1.5, 1).unwrap()), vec![], 0.0).unwrap();
        let cov = process_cov_matrix(&model, &set).unwrap();
        let evals = cov.self_adjoint_eigenvalues(Side::Lower).unwrap();
        assert!(evals.iter().all(|&e| e >= -1e-10), "min eig {:?}", evals.first());
    }

    #[test]
    fn simulate_deterministic_and_zero_mean() {
        let dom = Domain::interval(0.0, 1.0).unwrap();
        let set = generate_uniform(&dom, 32, 3).unwrap();
        let model =
            ProcessModel::new(Some(MaternSpec::new(1.0, 0.2, 1.5, 1).unwrap()), vec![], 0.0).unwrap();
        let a = gp_simulate(&model, &set, 3, 17).unwrap();
        let b = gp_simulate(&model, &set, 3, 17).unwrap();
        assert_eq!(a, b);

        let m = 2000;
        let reps = gp_simulate(&model, &set, m, 5).unwrap();
        for j in 0..set.n() {
            let mean: f64 = reps.iter().map(|r| r[j]).sum::<f64>() / m as f64;
            assert!(mean.abs() <= 4.0 / (m as f64).sqrt(), "entry {j} mean {mean}");
        }
    }

    #[test]
    fn simulate_covariance_matches_model() {
        let dom = Domain::interval(0.0, 1.0).unwrap();
        let set = generate_uniform(&dom, 16, 9).unwrap();
        let model =
            ProcessModel::new(Some(MaternSpec::new(1.0, 0.15, 0.75, 1).unwrap()), vec![], 0.0).unwrap();
        let cov = process_cov_matrix(&model, &set).unwrap();
        let m = 5000;
        let reps = gp_simulate(&model, &set, m, 21).unwrap();
        for i in 0..16 {
            for j in 0..16 {
                let mut acc = 0.0;
                for r in &reps {
                    acc += r[i] * r[j];
                }
                let emp = acc / m as f64;
                // MC standard error of a covariance entry of a Gaussian pair
                let se = ((cov[(i, i)] * cov[(j, j)] + cov[(i, j)] * cov[(i, j)]) / m as f64).sqrt();
                assert!(
                    (emp - cov[(i, j)]).abs() <= 4.0 * se,
                    "({i},{j}): emp {emp} vs {} (se {se})",
                    cov[(i, j)]
                );
            }
        }
    }

    #[test]
    fn nugget_only_simulation() {
        let dom = Domain::interval(0.0, 1.0).unwrap();
        let set = generate_uniform(&dom, 64, 11).unwrap();
        let model = ProcessModel::new(None, vec![], 0.25).unwrap();
        let reps = gp_simulate(&model, &set, 4000, 3).unwrap();
        let mut acc = 0.0;
        let mut cross = 0.0;
        for r in &reps {
            acc += r.iter().map(|v| v * v).sum::<f64>();
            cross += r[0] * r[1];
        }
        let var = acc / (4000.0 * 64.0);
        assert!((var - 0.25).abs() < 0.25 * 0.1, "variance {var}");
        assert!((cross / 4000.0).abs() < 0.05);
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(matches!(MaternSpec::new(-1.0, 0.1, 0.75, 1), Err(Error::InvalidInput(_))));
        assert!(matches!(MaternSpec::new(1.0, 0.1, -0.5, 1), Err(Error::InvalidInput(_))));
        let bad = MaternSpec::new(1.0, 0.1, 0.5, 2).unwrap().with_anisotropy(vec![1.0, 0.0, 2.0, 0.0]);
        assert!(bad.is_err());
    }
}
