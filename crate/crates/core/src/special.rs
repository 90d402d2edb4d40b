//! Scalar special functions used across the crate: gamma, modified and
//! ordinary Bessel functions, and sinc-type kernels.
//!
//! `bessel_k` follows the standard two-regime algorithm: Temme's series for
//! small argument and Steed's continued fraction for large argument, with
//! upward recurrence in the order. It is validated against the half-integer
//! closed forms in the tests.

use crate::{Error, Result};

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// sin(x)/x with the removable singularity filled in.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

/// Kernel of the ideal band-limiting operator to `[-c, c]`:
/// `int_{-c}^{c} exp(2 pi i s r) ds = sin(2 pi c r) / (pi r)`, with the
/// diagonal limit `2c`.
pub fn bandlimit_kernel(c: f64, r: f64) -> f64 {
    2.0 * c * sinc(2.0 * std::f64::consts::PI * c * r)
}

/// Entire function `sinh(sqrt(u))/sqrt(u)`, which continues to
/// `sin(sqrt(-u))/sqrt(-u)` for negative `u`. Both branches of the Kaiser
/// window transform are values of this function.
pub fn sinhc_sqrt(u: f64) -> f64 {
    if u.abs() < 1e-4 {
        // 1 + u/3! + u^2/5! + u^3/7!
        1.0 + u / 6.0 + u * u / 120.0 + u * u * u / 5040.0
    } else if u > 0.0 {
        let s = u.sqrt();
        s.sinh() / s
    } else {
        let s = (-u).sqrt();
        s.sin() / s
    }
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Gamma function by the Lanczos approximation (g = 7, 9 terms).
pub fn gamma(x: f64) -> f64 {
    if x < 0.5 {
        std::f64::consts::PI / ((std::f64::consts::PI * x).sin() * gamma(1.0 - x))
    } else {
        let x = x - 1.0;
        let mut a = LANCZOS[0];
        let t = x + LANCZOS_G + 0.5;
        for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
            a += c / (x + i as f64);
        }
        (2.0 * std::f64::consts::PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * a
    }
}

/// Modified Bessel function I0. Power series for moderate argument,
/// asymptotic series beyond.
pub fn bessel_i0(x: f64) -> f64 {
    let ax = x.abs();
    if ax <= 18.0 {
        let q = 0.25 * ax * ax;
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..200 {
            term *= q / ((k * k) as f64);
            sum += term;
            if term < sum * 1e-17 {
                break;
            }
        }
        sum
    } else {
        // I0(x) ~ e^x / sqrt(2 pi x) * sum_k prod_j (2j-1)^2 / (k! (8x)^k)
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..30 {
            let kk = k as f64;
            term *= (2.0 * kk - 1.0) * (2.0 * kk - 1.0) / (kk * 8.0 * ax);
            if term > sum {
                break; // divergent tail of the asymptotic series
            }
            sum += term;
            if term < sum * 1e-17 {
                break;
            }
        }
        ax.exp() / (2.0 * std::f64::consts::PI * ax).sqrt() * sum
    }
}

fn bessel_j_asymptotic(nu: f64, x: f64) -> f64 {
    // J_nu(x) ~ sqrt(2/(pi x)) [cos(w) P - sin(w) Q], w = x - nu pi/2 - pi/4,
    // with P, Q the usual (divergent) tail series in 1/(8x).
    let mu = 4.0 * nu * nu;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0;
    let mut prev = f64::INFINITY;
    for k in 1..40 {
        let kk = k as f64;
        term *= (mu - (2.0 * kk - 1.0) * (2.0 * kk - 1.0)) / (kk * 8.0 * x);
        if term.abs() > prev {
            break;
        }
        prev = term.abs();
        let signed = if (k / 2) % 2 == 0 { term } else { -term };
        if k % 2 == 0 {
            p += signed;
        } else {
            q += signed;
        }
        if term.abs() < 1e-17 {
            break;
        }
    }
    let w = x - nu * std::f64::consts::FRAC_PI_2 - std::f64::consts::FRAC_PI_4;
    (2.0 / (std::f64::consts::PI * x)).sqrt() * (w.cos() * p - w.sin() * q)
}

/// Bessel function J0.
pub fn bessel_j0(x: f64) -> f64 {
    let ax = x.abs();
    if ax <= 12.0 {
        let q = 0.25 * ax * ax;
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..80 {
            term *= -q / ((k * k) as f64);
            sum += term;
            if term.abs() < 1e-17 {
                break;
            }
        }
        sum
    } else {
        bessel_j_asymptotic(0.0, ax)
    }
}

/// Bessel function J1.
pub fn bessel_j1(x: f64) -> f64 {
    let ax = x.abs();
    let val = if ax <= 12.0 {
        let q = 0.25 * ax * ax;
        let mut term = 0.5 * ax;
        let mut sum = term;
        for k in 1..80 {
            term *= -q / ((k * (k + 1)) as f64);
            sum += term;
            if term.abs() < 1e-17 {
                break;
            }
        }
        sum
    } else {
        bessel_j_asymptotic(1.0, ax)
    };
    if x < 0.0 {
        -val
    } else {
        val
    }
}

/// Modified Bessel function of the second kind `K_nu(x)` for real order
/// `nu >= 0` and `x > 0`. Temme's series for `x <= 2`, Steed's continued
/// fraction CF2 for `x > 2`, then upward recurrence in the order.
pub fn bessel_k(nu: f64, x: f64) -> Result<f64> {
    if !(x > 0.0) || !nu.is_finite() {
        return Err(Error::invalid(format!("bessel_k requires x > 0, got nu={nu}, x={x}")));
    }
    let nu = nu.abs();
    let nl = (nu + 0.5).floor() as usize;
    let mu = nu - nl as f64; // mu in [-1/2, 1/2]
    let mu2 = mu * mu;
    const EPS: f64 = 1e-16;
    const MAXIT: usize = 10_000;

    let (kmu, kmu1);
    if x <= 2.0 {
        // Temme's series: K_mu = sum c_k f_k, K_{mu+1} = (2/x) sum c_k (p_k - k f_k).
        let x2 = 0.5 * x;
        let pimu = std::f64::consts::PI * mu;
        let fact = if pimu.abs() < 1e-12 { 1.0 } else { pimu / pimu.sin() };
        let d = -(x2.ln());
        let e = mu * d;
        let fact2 = if e.abs() < 1e-12 { 1.0 } else { e.sinh() / e };
        let gampl = 1.0 / gamma(1.0 + mu); // 1/Gamma(1+mu)
        let gammi = 1.0 / gamma(1.0 - mu); // 1/Gamma(1-mu)
        let gam1 = if mu.abs() >= 1e-5 {
            (gammi - gampl) / (2.0 * mu)
        } else {
            -EULER_GAMMA
        };
        let gam2 = 0.5 * (gammi + gampl);
        let mut ff = fact * (gam1 * e.cosh() + gam2 * fact2 * d);
        let mut sum = ff;
        let e = e.exp();
        let mut p = 0.5 * e / gampl; // (1/2) (x/2)^{-mu} Gamma(1+mu)
        let mut q = 0.5 / (e * gammi); // (1/2) (x/2)^{+mu} Gamma(1-mu)
        let mut c = 1.0;
        let x2sq = x2 * x2;
        let mut sum1 = p;
        let mut converged = false;
        for i in 1..=MAXIT {
            let fi = i as f64;
            ff = (fi * ff + p + q) / (fi * fi - mu2);
            c *= x2sq / fi;
            p /= fi - mu;
            q /= fi + mu;
            let del = c * ff;
            sum += del;
            let del1 = c * (p - fi * ff);
            sum1 += del1;
            if del.abs() < sum.abs() * EPS {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::numerical("bessel_k series failed to converge"));
        }
        kmu = sum;
        kmu1 = sum1 * (2.0 / x);
    } else {
        // Steed's continued fraction CF2.
        let mut b = 2.0 * (1.0 + x);
        let mut d = 1.0 / b;
        let mut h = d;
        let mut delh = d;
        let mut q1 = 0.0;
        let mut q2 = 1.0;
        let a1 = 0.25 - mu2;
        let mut q = a1;
        let mut c = a1;
        let mut a = -a1;
        let mut s = 1.0 + q * delh;
        let mut converged = false;
        for i in 2..=MAXIT {
            let fi = i as f64;
            a -= 2.0 * (fi - 1.0);
            c = -a * c / fi;
            let qnew = (q1 - b * q2) / a;
            q1 = q2;
            q2 = qnew;
            q += c * qnew;
            b += 2.0;
            d = 1.0 / (b + a * d);
            delh = (b * d - 1.0) * delh;
            h += delh;
            let dels = q * delh;
            s += dels;
            if (dels / s).abs() < EPS {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::numerical("bessel_k continued fraction failed to converge"));
        }
        let h = a1 * h;
        kmu = (std::f64::consts::PI / (2.0 * x)).sqrt() * (-x).exp() / s;
        kmu1 = kmu * (mu + x + 0.5 - h) / x;
    }

    // Upward recurrence K_{v+1} = (2v/x) K_v + K_{v-1} from (K_mu, K_{mu+1}).
    if nl == 0 {
        return Ok(kmu);
    }
    let mut klow = kmu;
    let mut khigh = kmu1;
    for i in 1..nl {
        let v = mu + i as f64;
        let knext = 2.0 * v / x * khigh + klow;
        klow = khigh;
        khigh = knext;
    }
    Ok(khigh)
}
