//! Cancellation-free evaluation of the hyperbolic ratios that appear in the
//! Mehler formula, plus a few combinatorial helpers.
//!
//! Below `|s| < SERIES_CUTOFF` the ratios are evaluated from their Taylor
//! series; above it from closed forms written in terms of `exp(-|s|)` so that
//! nothing overflows for large arguments.

/// Switch point between Taylor series and closed forms.
pub const SERIES_CUTOFF: f64 = 1e-4;

/// `s / sinh(s)`, even in `s`, equal to 1 at 0.
pub fn x_over_sinh(s: f64) -> f64 {
    let a = s.abs();
    if a < SERIES_CUTOFF {
        let s2 = s * s;
        1.0 - s2 / 6.0 + 7.0 * s2 * s2 / 360.0
    } else if a < 20.0 {
        a / a.sinh()
    } else {
        let e = (-a).exp();
        2.0 * a * e / (1.0 - e * e)
    }
}

/// `ln(s / sinh(s))`, accurate for all real `s`.
pub fn ln_x_over_sinh(s: f64) -> f64 {
    let a = s.abs();
    if a < SERIES_CUTOFF {
        let s2 = s * s;
        -s2 / 6.0 + s2 * s2 / 180.0
    } else {
        // sinh a = e^a (1 - e^{-2a}) / 2
        (2.0 * a).ln() - a - (-(-2.0 * a).exp_m1()).ln()
    }
}

/// `s / tanh(s)` (= `s coth s`), equal to 1 at 0.
pub fn x_coth(s: f64) -> f64 {
    let a = s.abs();
    if a < SERIES_CUTOFF {
        let s2 = s * s;
        1.0 + s2 / 3.0 - s2 * s2 / 45.0
    } else {
        a / a.tanh()
    }
}

/// `tanh(s) / s`, equal to 1 at 0.
pub fn tanh_over_x(s: f64) -> f64 {
    let a = s.abs();
    if a < SERIES_CUTOFF {
        let s2 = s * s;
        1.0 - s2 / 3.0 + 2.0 * s2 * s2 / 15.0
    } else {
        a.tanh() / a
    }
}

/// `ln cosh(s)` without overflow.
pub fn ln_cosh(s: f64) -> f64 {
    let a = s.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

/// Binomial coefficient as `f64`; zero outside `0 <= k <= n`.
pub fn binomial(n: i64, k: i64) -> f64 {
    if k < 0 || n < 0 || k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0_f64;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}

/// Exact binomial coefficient for small arguments.
pub fn binomial_u64(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u64 = 1;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// Generalised binomial `C(x + n - 1, n - 1)` for real `x`, the Landau-level
/// multiplicity continued off the integers.
pub fn level_multiplicity(x: f64, n: usize) -> f64 {
    (1..n).fold(1.0, |acc, i| acc * (x + i as f64) / i as f64)
}

pub fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

pub fn factorial(n: u32) -> f64 {
    (1..=n).fold(1.0, |acc, i| acc * i as f64)
}
