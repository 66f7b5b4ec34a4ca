use std::f64::consts::PI;

const SERIES_LIMIT: f64 = 12.0;

/// Zeroth-order Bessel function of the first kind.
///
/// Power series for `|x| ≤ 12`, Hankel asymptotic expansion beyond.
pub fn bessel_j0(x: f64) -> f64 {
    let x = x.abs();
    if x <= SERIES_LIMIT {
        series(x)
    } else {
        asymptotic(x)
    }
}

fn series(x: f64) -> f64 {
    let q = -0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..80 {
        let kf = k as f64;
        term *= q / (kf * kf);
        sum += term;
        if term.abs() < 1e-18 * sum.abs().max(1e-300) && kf > q.abs().sqrt() {
            break;
        }
    }
    sum
}

// J0(x) ≈ sqrt(2/(πx)) (P cos χ − Q sin χ), χ = x − π/4, with
// P = Σ (−1)^k a_{2k} / x^{2k}, Q = −Σ (−1)^k a_{2k+1} / x^{2k+1},
// a_k = ∏_{i=1..k} (2i−1)² / (k! 8^k).
fn asymptotic(x: f64) -> f64 {
    let mut p = 0.0;
    let mut q = 0.0;
    let mut a = 1.0;
    let mut prev = f64::INFINITY;
    for k in 0..60 {
        let term = a / x.powi(k);
        if term.abs() > prev {
            break;
        }
        prev = term.abs();
        match k % 4 {
            0 => p += term,
            1 => q -= term,
            2 => p -= term,
            _ => q += term,
        }
        if term.abs() < 1e-18 {
            break;
        }
        let next = (2 * k + 1) as f64;
        a *= next * next / (8.0 * (k + 1) as f64);
    }
    let chi = x - PI / 4.0;
    (2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Truncated power series, Σ_{k<30} (−x²/4)^k / (k!)².
    fn series_oracle(x: f64) -> f64 {
        let mut sum = 0.0;
        let mut fact = 1.0;
        for k in 0..30 {
            if k > 0 {
                fact *= k as f64;
            }
            sum += (-x * x / 4.0).powi(k) / (fact * fact);
        }
        sum
    }

    #[test]
    fn value_at_zero() {
        assert_eq!(bessel_j0(0.0), 1.0);
    }

    #[test]
    fn value_at_one() {
        assert!((bessel_j0(1.0) - 0.765_197_686_557_966_6).abs() < 1e-12);
        assert!((bessel_j0(1.0) - series_oracle(1.0)).abs() < 1e-14);
    }

    #[test]
    fn first_zero() {
        // bisection on the oracle series
        let (mut lo, mut hi) = (2.0, 3.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if series_oracle(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((lo - 2.404_825_557_7).abs() < 1e-9);
        assert!(bessel_j0(2.404_825_557_7).abs() <= 1e-9);
    }

    #[test]
    fn matches_series_up_to_eight() {
        let mut x = -8.0;
        while x <= 8.0 {
            assert!((bessel_j0(x) - series_oracle(x)).abs() <= 1e-10, "x = {x}");
            x += 0.01;
        }
    }

    #[test]
    fn large_arguments() {
        // reference values from an arbitrary-precision evaluation
        let cases = [
            (12.0, 0.047_689_310_796_833_54),
            (12.5, 0.146_884_054_700_421_1),
            (15.0, -0.014_224_472_826_780_773),
            (20.0, 0.167_024_664_340_583_23),
            (30.0, -0.086_367_983_581_040_22),
            (50.0, 0.055_812_327_669_251_85),
        ];
        for (x, want) in cases {
            assert!(
                (bessel_j0(x) - want).abs() <= 1e-10,
                "x = {x}: {}",
                bessel_j0(x)
            );
        }
    }

    #[test]
    fn branches_agree_at_switch_point() {
        for x in [SERIES_LIMIT - 0.5, SERIES_LIMIT, SERIES_LIMIT + 0.5] {
            assert!((series(x) - asymptotic(x)).abs() < 1e-11, "x = {x}");
        }
    }
}
