//! Special-function pieces of the NB2 log-likelihood, arranged to stay
//! accurate as the dispersion goes to zero.
//!
//! With `r = 1/alpha`, the gamma ratio is split as
//! `lnG(y + r) - lnG(r) = y ln r + H(y, alpha)` where
//! `H(y, alpha) = sum_{k<y} ln(1 + k alpha)`. The `y ln r` part cancels
//! analytically inside the likelihood, and `H` is evaluated by direct sums
//! for small counts, by gamma functions for small `r`, and by Stirling and
//! asymptotic-digamma differences otherwise.

use statrs::function::gamma::{digamma, ln_gamma};

const DIRECT_MAX: f64 = 64.0;
const ASYMPTOTIC_MIN_R: f64 = 10.0;
const SERIES_MAX: f64 = 1e-2;

/// `B_{2k} / (2k (2k - 1))` for the Stirling remainder of ln Gamma.
const STIRLING: [f64; 7] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360360.0,
    1.0 / 156.0,
];

/// `B_{2k} / (2k)` for the asymptotic expansion of digamma.
const DIGAMMA: [f64; 7] = [
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
    1.0 / 12.0,
];

fn stirling_remainder(x: f64) -> f64 {
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let mut pow = inv;
    let mut sum = 0.0;
    for c in STIRLING {
        sum += c * pow;
        pow *= inv2;
    }
    sum
}

/// `digamma(x) - ln x + 1/(2x)` by its asymptotic series (x >= 10).
fn digamma_remainder(x: f64) -> f64 {
    let inv2 = 1.0 / (x * x);
    let mut pow = inv2;
    let mut sum = 0.0;
    for c in DIGAMMA {
        sum -= c * pow;
        pow *= inv2;
    }
    sum
}

pub fn trigamma(mut x: f64) -> f64 {
    let mut acc = 0.0;
    while x < 10.0 {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    acc + inv
        + inv2 / 2.0
        + inv * inv2
            * (1.0 / 6.0
                + inv2 * (-1.0 / 30.0 + inv2 * (1.0 / 42.0 + inv2 * (-1.0 / 30.0 + inv2 * 5.0 / 66.0))))
}

/// `x - ln(1 + x)` without cancellation for small x.
fn x_minus_ln1p(x: f64) -> f64 {
    if x.abs() < SERIES_MAX {
        // x^2/2 - x^3/3 + x^4/4 - ...
        let mut term = x * x;
        let mut sum = 0.0;
        let mut k = 2.0;
        while term.abs() > 1e-300 && k < 40.0 {
            sum += term / k;
            term *= -x;
            k += 1.0;
        }
        sum
    } else {
        x - x.ln_1p()
    }
}

/// `phi(u) = ln(1 + u) - u / (1 + u)`.
pub(crate) fn phi(u: f64) -> f64 {
    if u < SERIES_MAX {
        // sum_{k>=2} (-1)^k (k-1)/k u^k
        let mut pow = u * u;
        let mut sum = 0.0;
        let mut k = 2.0f64;
        while k < 40.0 {
            let term = (k - 1.0) / k * pow;
            sum += term;
            if term.abs() < 1e-18 * sum.abs() {
                break;
            }
            pow *= -u;
            k += 1.0;
        }
        sum
    } else {
        u.ln_1p() - u / (1.0 + u)
    }
}

/// `chi(u) = u^2 / (1 + u)^2 - 2 phi(u)`, the numerator of d/dalpha [phi / alpha^2].
pub(crate) fn chi(u: f64) -> f64 {
    if u < SERIES_MAX {
        // sum_{k>=3} (-1)^k (k-1)(k-2)/k u^k
        let mut pow = -u * u * u;
        let mut sum = 0.0;
        let mut k = 3.0f64;
        while k < 40.0 {
            let term = (k - 1.0) * (k - 2.0) / k * pow;
            sum += term;
            if term.abs() < 1e-18 * sum.abs() {
                break;
            }
            pow *= -u;
            k += 1.0;
        }
        sum
    } else {
        let q = u / (1.0 + u);
        q * q - 2.0 * phi(u)
    }
}

/// `H(y, alpha)` together with its first two derivatives in alpha.
pub(crate) fn gamma_ratio_terms(y: f64, alpha: f64) -> (f64, f64, f64) {
    if y == 0.0 {
        return (0.0, 0.0, 0.0);
    }
    if y <= DIRECT_MAX {
        let (mut h, mut d1, mut d2) = (0.0, 0.0, 0.0);
        let mut k = 1.0;
        while k < y {
            let denom = 1.0 + k * alpha;
            h += (k * alpha).ln_1p();
            d1 += k / denom;
            d2 -= (k / denom) * (k / denom);
            k += 1.0;
        }
        return (h, d1, d2);
    }
    let r = 1.0 / alpha;
    if r < ASYMPTOTIC_MIN_R {
        let h = ln_gamma(y + r) - ln_gamma(r) - y * r.ln();
        let dg1 = digamma(y + r) - digamma(r);
        let dg2 = trigamma(y + r) - trigamma(r);
        let d1 = r * y - r * r * dg1;
        let d2 = -r * r * (y - 2.0 * r * dg1 - r * r * dg2);
        return (h, d1, d2);
    }
    let h = asymptotic_h(y, r);
    let d1 = asymptotic_dh(y, r);
    // Curvature by a central difference of the analytic first derivative.
    let step = 1e-4 * alpha;
    let up = asymptotic_or_exact_dh(y, alpha + step);
    let down = asymptotic_or_exact_dh(y, alpha - step);
    (h, d1, (up - down) / (2.0 * step))
}

fn asymptotic_or_exact_dh(y: f64, alpha: f64) -> f64 {
    let r = 1.0 / alpha;
    if r < ASYMPTOTIC_MIN_R {
        r * y - r * r * (digamma(y + r) - digamma(r))
    } else {
        asymptotic_dh(y, r)
    }
}

fn asymptotic_h(y: f64, r: f64) -> f64 {
    let x = y / r;
    // (r + y - 1/2) ln(1 + x) - y, rearranged to keep the cancellation exact.
    (r - 0.5) * x.ln_1p() + y * x.ln_1p() - y + stirling_remainder(r + y) - stirling_remainder(r)
}

fn asymptotic_dh(y: f64, r: f64) -> f64 {
    // r y - r^2 [digamma(r + y) - digamma(r)]
    let x = y / r;
    r * r * x_minus_ln1p(x) - r * y / (2.0 * (r + y))
        - r * r * (digamma_remainder(r + y) - digamma_remainder(r))
}

/// NB2 log-likelihood contribution of one observation.
pub(crate) fn nb_obs_loglik(y: f64, mu: f64, alpha: f64) -> f64 {
    let (h, _, _) = gamma_ratio_terms(y, alpha);
    h + y * mu.ln() - (y + 1.0 / alpha) * (alpha * mu).ln_1p() - ln_gamma(y + 1.0)
}

/// First and second alpha-derivatives of one observation's contribution.
pub(crate) fn nb_obs_alpha_derivs(y: f64, mu: f64, alpha: f64) -> (f64, f64) {
    let (_, dh, d2h) = gamma_ratio_terms(y, alpha);
    let u = alpha * mu;
    let a2 = alpha * alpha;
    let first = dh + phi(u) / a2 - y * mu / (1.0 + u);
    let second = d2h + chi(u) / (a2 * alpha) + y * mu * mu / ((1.0 + u) * (1.0 + u));
    (first, second)
}

pub(crate) fn poisson_obs_loglik(y: f64, eta: f64, mu: f64) -> f64 {
    y * eta - mu - ln_gamma(y + 1.0)
}
