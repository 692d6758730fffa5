//! p-value numerics: regularized incomplete gamma and erfc.
//!
//! The chi-square tail needs the regularized upper incomplete gamma
//! Q(a, x); following the usual split, the series for the lower function
//! is used when `x < a + 1` and a Lentz continued fraction for the upper
//! function otherwise, both iterated to 1e-12 tolerance. `erfc` reduces to
//! Q(1/2, x^2), so one implementation serves every test in the battery.

/// Iteration tolerance for the series and continued fraction.
const EPS: f64 = 1e-12;
const MAX_ITER: usize = 1_000_000;

/// Lanczos approximation (g = 7, 9 terms), accurate to ~1e-15 for z > 0.
#[allow(clippy::excessive_precision)] // published coefficients kept verbatim
pub fn ln_gamma(z: f64) -> f64 {
    const COEF: [f64; 8] = [
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    ];
    debug_assert!(z > 0.0);
    let mut acc = 0.99999999999980993;
    for (i, c) in COEF.iter().enumerate() {
        acc += c / (z + i as f64);
    }
    let t = z + 6.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (z - 0.5) * t.ln() - t + acc.ln()
}

/// Regularized lower incomplete gamma P(a, x) by series expansion.
fn lower_gamma_series(a: f64, x: f64) -> f64 {
    let mut term = 1.0 / a;
    let mut sum = term;
    let mut denom = a;
    for _ in 0..MAX_ITER {
        denom += 1.0;
        term *= x / denom;
        sum += term;
        if term.abs() < sum.abs() * EPS {
            let log_prefactor = a * x.ln() - x - ln_gamma(a);
            return (sum.ln() + log_prefactor).exp();
        }
    }
    unreachable!("incomplete gamma series failed to converge (a={a}, x={x})");
}

/// Regularized upper incomplete gamma Q(a, x) by Lentz continued fraction.
fn upper_gamma_cf(a: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            let log_prefactor = a * x.ln() - x - ln_gamma(a);
            return (h.ln() + log_prefactor).exp();
        }
    }
    unreachable!("incomplete gamma continued fraction failed to converge (a={a}, x={x})");
}

/// Regularized upper incomplete gamma Q(a, x) for `a > 0`, `x >= 0`.
pub fn reg_gamma_q(a: f64, x: f64) -> f64 {
    assert!(a > 0.0 && x >= 0.0, "reg_gamma_q domain: a > 0, x >= 0");
    if x == 0.0 {
        return 1.0;
    }
    if x < a + 1.0 {
        1.0 - lower_gamma_series(a, x)
    } else {
        upper_gamma_cf(a, x)
    }
}

/// Regularized lower incomplete gamma P(a, x).
pub fn reg_gamma_p(a: f64, x: f64) -> f64 {
    1.0 - reg_gamma_q(a, x)
}

/// Upper-tail p-value of a chi-square statistic with `df` degrees of
/// freedom: Q(df/2, statistic/2).
pub fn chi_square_p(statistic: f64, df: u64) -> f64 {
    assert!(statistic >= 0.0);
    reg_gamma_q(df as f64 / 2.0, statistic / 2.0)
}

/// Complementary error function via erfc(x) = Q(1/2, x^2) for x >= 0.
pub fn erfc(x: f64) -> f64 {
    if x < 0.0 {
        2.0 - erfc(-x)
    } else {
        reg_gamma_q(0.5, x * x)
    }
}

#[cfg(test)]
#[allow(clippy::excessive_precision)] // reference tables keep all oracle digits
mod tests {
    use super::*;

    fn assert_rel(actual: f64, expected: f64, tol: f64) {
        let rel = ((actual - expected) / expected).abs();
        assert!(
            rel <= tol,
            "actual {actual:e} vs expected {expected:e}: relative error {rel:e} > {tol:e}"
        );
    }

    #[test]
    fn ln_gamma_known_values() {
        // Gamma(1) = Gamma(2) = 1; Gamma(0.5) = sqrt(pi)
        assert!(ln_gamma(1.0).abs() < 1e-13);
        assert!(ln_gamma(2.0).abs() < 1e-13);
        assert_rel(ln_gamma(0.5), 0.5 * std::f64::consts::PI.ln(), 1e-14);
        // Gamma(11) = 10!
        assert_rel(ln_gamma(11.0), (3628800.0f64).ln(), 1e-14);
    }

    // Reference values from a 60-digit arbitrary-precision evaluation of
    // the regularized incomplete gamma, frozen here.
    const CHI2_DF255: [(f64, f64); 5] = [
        (200.0, 0.9954254445419519),
        (255.0, 0.48822252177040634),
        (290.25, 0.063820873014584386),
        (310.5, 0.0099559428959183896),
        (400.0, 1.6600025244124518e-8),
    ];
    const CHI2_DF65535: [(f64, f64); 5] = [
        (64000.0, 0.99999029748361242),
        (65535.0, 0.4992653724170944),
        (66000.0, 0.099707849240150684),
        (67000.0, 2.9268476745227089e-5),
        (70000.0, 8.0436662125921853e-34),
    ];
    const ERFC_TABLE: [(f64, f64); 5] = [
        (0.1, 0.88753708398171511),
        (0.75, 0.28884436634648487),
        (1.5, 0.033894853524689273),
        (3.0, 2.2090496998585441e-5),
        (6.0, 2.1519736712498913e-17),
    ];

    #[test]
    fn chi_square_p_matches_reference_df_255() {
        for (stat, expected) in CHI2_DF255 {
            assert_rel(chi_square_p(stat, 255), expected, 1e-6);
        }
    }

    #[test]
    fn chi_square_p_matches_reference_df_65535() {
        for (stat, expected) in CHI2_DF65535 {
            assert_rel(chi_square_p(stat, 65535), expected, 1e-6);
        }
    }

    #[test]
    fn erfc_matches_reference() {
        for (x, expected) in ERFC_TABLE {
            assert_rel(erfc(x), expected, 1e-6);
        }
    }

    #[test]
    fn erfc_symmetry_and_fixed_points() {
        assert_eq!(erfc(0.0), 1.0);
        assert_rel(erfc(-1.5) + erfc(1.5), 2.0, 1e-14);
    }

    #[test]
    fn gamma_q_boundaries() {
        assert_eq!(reg_gamma_q(5.0, 0.0), 1.0);
        assert!(reg_gamma_q(5.0, 1e6) < 1e-300);
        assert!((reg_gamma_p(5.0, 0.0)).abs() < 1e-15);
    }
}
