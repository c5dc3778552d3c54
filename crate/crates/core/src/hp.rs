//! High-precision evaluation and decimal rendering.
//!
//! Probabilities are carried exactly as `coeff * exp(-rate)` for as long
//! as the computation is a pure product. Whenever a real number is needed
//! (differences of such values, CDF walks, report rendering), `exp(-rate)`
//! is approximated by a rational with a guaranteed relative error bound
//! and the rest of the computation stays in rational arithmetic.
//!
//! Rendering is round-half-even at a requested number of significant
//! digits, so report output is a pure function of the exact inputs.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::{Int, Rat};

/// `10^n` as a big integer.
pub fn pow10(n: u32) -> Int {
    Int::from(10u8).pow(n)
}

/// Approximates `exp(-rate)` for `rate >= 0` by a rational whose relative
/// error is below `10^-sig`.
///
/// Argument reduction halves the rate until it is at most 1, sums the
/// alternating Taylor series there (truncation error bounded by the first
/// omitted term), and squares back up, rounding to a bounded number of
/// significant digits after each squaring. The guard digits cover the
/// error doubling per squaring step.
pub fn exp_neg(rate: &Rat, sig: u32) -> Rat {
    assert!(!rate.is_negative(), "exp_neg requires rate >= 0");
    if rate.is_zero() {
        return Rat::one();
    }
    // Halvings until the reduced argument is <= 1.
    let mut halvings = 0u32;
    let one = Rat::one();
    let two = Rat::from_integer(Int::from(2u8));
    let mut bound = one.clone();
    while rate > &bound {
        bound = &bound * &two;
        halvings += 1;
    }
    let guard = sig + halvings + 12;
    let y = rate / Rat::from_integer(Int::one() << halvings);

    // Alternating series sum_{k} (-y)^k / k!, truncated once the next term
    // is below the target; for y <= 1 the terms are nonincreasing from
    // k = 1, so the first omitted term bounds the truncation error.
    let eps = Rat::new(Int::one(), pow10(guard));
    let mut sum = Rat::one();
    let mut term = Rat::one();
    let mut k = Int::one();
    loop {
        term = term * &y / Rat::from_integer(k.clone());
        if term < eps {
            break;
        }
        if k.is_even() {
            sum += &term;
        } else {
            sum -= &term;
        }
        k += Int::one();
    }

    let mut value = round_sig(&sum, guard);
    for _ in 0..halvings {
        value = round_sig(&(&value * &value), guard);
    }
    value
}

/// Decimal exponent `e` with `10^e <= |x| < 10^(e+1)`; `x` must be nonzero.
fn dec_exponent(x: &Rat) -> i64 {
    let num = x.numer().abs();
    let den = x.denom().abs();
    // Digit counts give the exponent up to 1; fix up by comparison.
    let mut e = num.to_string().len() as i64 - den.to_string().len() as i64;
    let ten = Int::from(10u8);
    let scaled_cmp = |e: i64| -> std::cmp::Ordering {
        // compare |x| with 10^e
        if e >= 0 {
            num.cmp(&(&den * ten.pow(e as u32)))
        } else {
            (&num * ten.pow((-e) as u32)).cmp(&den)
        }
    };
    if scaled_cmp(e) == std::cmp::Ordering::Less {
        e -= 1;
    }
    if scaled_cmp(e + 1) != std::cmp::Ordering::Less {
        e += 1;
    }
    e
}

/// Rounds `x` to `sig` significant decimal digits, round-half-even.
pub fn round_sig(x: &Rat, sig: u32) -> Rat {
    assert!(sig >= 1);
    if x.is_zero() {
        return Rat::zero();
    }
    let e = dec_exponent(x);
    // mantissa = x / 10^(e - sig + 1), rounded half-even to an integer
    let shift = e - sig as i64 + 1;
    let scaled = scale_by_pow10(x, -shift);
    let mantissa = round_half_even(&scaled);
    scale_by_pow10(&Rat::from_integer(mantissa), shift)
}

/// `x * 10^k` for signed `k`.
fn scale_by_pow10(x: &Rat, k: i64) -> Rat {
    if k >= 0 {
        x * Rat::from_integer(pow10(k as u32))
    } else {
        x / Rat::from_integer(pow10((-k) as u32))
    }
}

/// Nearest integer, ties to even.
pub fn round_half_even(x: &Rat) -> Int {
    let floor = x.floor().to_integer();
    let frac = x - Rat::from_integer(floor.clone());
    let half = Rat::new(Int::one(), Int::from(2u8));
    match frac.cmp(&half) {
        std::cmp::Ordering::Less => floor,
        std::cmp::Ordering::Greater => floor + 1,
        std::cmp::Ordering::Equal => {
            if floor.is_even() {
                floor
            } else {
                floor + 1
            }
        }
    }
}

/// Renders `x` with `sig` significant digits, round-half-even.
///
/// Uses positional notation for decimal exponents in `[-6, 20]` and
/// scientific notation (`d.ddde<exp>`) outside that window. The output is
/// deterministic and suitable for byte-stable reports.
pub fn render_sig(x: &Rat, sig: u32) -> String {
    assert!(sig >= 1);
    if x.is_zero() {
        return "0".to_string();
    }
    let neg = x.is_negative();
    let ax = x.abs();
    let e = dec_exponent(&ax);
    let shift = e - sig as i64 + 1;
    let mut mantissa = round_half_even(&scale_by_pow10(&ax, -shift));
    let mut e = e;
    // Rounding can carry into an extra digit (e.g. 9.99 -> 10.0).
    if mantissa.to_string().len() as u32 > sig {
        mantissa = mantissa.div_floor(&Int::from(10u8));
        e += 1;
    }
    let digits = mantissa.to_string();
    debug_assert_eq!(digits.len() as u32, sig);
    let body = if (-6..=20).contains(&e) {
        positional(&digits, e)
    } else {
        scientific(&digits, e)
    };
    if neg {
        format!("-{body}")
    } else {
        body
    }
}

fn positional(digits: &str, e: i64) -> String {
    let n = digits.len() as i64;
    if e >= n - 1 {
        // integer with possible trailing zeros
        let zeros = (e - (n - 1)) as usize;
        format!("{digits}{}", "0".repeat(zeros))
    } else if e >= 0 {
        let point = (e + 1) as usize;
        format!("{}.{}", &digits[..point], &digits[point..])
    } else {
        let zeros = (-e - 1) as usize;
        format!("0.{}{}", "0".repeat(zeros), digits)
    }
}

fn scientific(digits: &str, e: i64) -> String {
    if digits.len() == 1 {
        format!("{digits}e{e}")
    } else {
        format!("{}.{}e{}", &digits[..1], &digits[1..], e)
    }
}

/// Parses a decimal string (optionally signed, optional fractional part,
/// optional exponent) into an exact rational.
pub fn parse_decimal(s: &str) -> Option<Rat> {
    let s = s.trim();
    if s.is_empty() {
        return None;
    }
    let (mant, exp) = match s.find(['e', 'E']) {
        Some(pos) => {
            let exp: i64 = s[pos + 1..].parse().ok()?;
            (&s[..pos], exp)
        }
        None => (s, 0),
    };
    let (sign, mant) = match mant.strip_prefix('-') {
        Some(rest) => (-1, rest),
        None => (1, mant.strip_prefix('+').unwrap_or(mant)),
    };
    let (int_part, frac_part) = match mant.find('.') {
        Some(pos) => (&mant[..pos], &mant[pos + 1..]),
        None => (mant, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().all(|c| c.is_ascii_digit())
        || !frac_part.chars().all(|c| c.is_ascii_digit())
    {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let numer: BigInt = digits.parse().ok()?;
    let value = Rat::from_integer(numer * BigInt::from(sign));
    Some(scale_by_pow10(&value, exp - frac_part.len() as i64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::ToPrimitive;

    /// Independent reference: direct alternating Taylor sum of exp(-x)
    /// without argument reduction, truncated once terms drop below
    /// 10^-(digits+10). Valid error bound once terms decrease.
    fn taylor_exp_neg(rate: &Rat, digits: u32) -> Rat {
        let eps = Rat::new(Int::one(), pow10(digits + 10));
        let mut sum = Rat::one();
        let mut term = Rat::one();
        let mut k = Int::one();
        loop {
            term = term * rate / Rat::from_integer(k.clone());
            let decreasing = rate < &Rat::from_integer(k.clone() + Int::one());
            if decreasing && term < eps {
                break;
            }
            if k.is_even() {
                sum += &term;
            } else {
                sum -= &term;
            }
            k += Int::one();
        }
        sum
    }

    fn assert_close(a: &Rat, b: &Rat, digits: u32) {
        let diff = (a - b).abs();
        let tol = Rat::new(Int::one(), pow10(digits));
        assert!(
            diff <= tol * b.abs().max(Rat::one()),
            "difference {} too large",
            diff
        );
    }

    #[test]
    fn exp_neg_zero_is_one() {
        assert_eq!(exp_neg(&Rat::zero(), 50), Rat::one());
    }

    #[test]
    fn exp_neg_matches_direct_taylor() {
        for (num, den) in [(1i64, 1i64), (1, 2), (3, 2), (2, 1), (13, 2), (4, 1)] {
            let rate = Rat::new(Int::from(num), Int::from(den));
            let got = exp_neg(&rate, 50);
            let reference = taylor_exp_neg(&rate, 60);
            assert_close(&got, &reference, 48);
        }
    }

    #[test]
    fn exp_neg_matches_f64_for_moderate_rates() {
        for rate_f in [0.25f64, 1.0, 1.5, 2.0, 6.5, 17.0] {
            let rate = Rat::new(Int::from((rate_f * 4.0) as i64), Int::from(4u8));
            let got = exp_neg(&rate, 30).to_f64().unwrap();
            assert!((got - (-rate_f).exp()).abs() < 1e-12);
        }
    }

    #[test]
    fn exp_neg_large_rate_stays_relatively_accurate() {
        // exp(-134) is around 1e-59, so the absolute-truncation reference
        // needs far more digits than the relative bound under test.
        let rate = Rat::from_integer(Int::from(134u8));
        let v = exp_neg(&rate, 50);
        let reference = taylor_exp_neg(&rate, 130);
        let rel = ((&v - &reference) / &reference).abs();
        assert!(rel < Rat::new(Int::one(), pow10(45)));
    }

    #[test]
    fn render_sig_basics() {
        let r = |n: i64, d: i64| Rat::new(Int::from(n), Int::from(d));
        assert_eq!(render_sig(&r(1, 8), 3), "0.125");
        assert_eq!(render_sig(&r(1, 8), 2), "0.12"); // half to even
        assert_eq!(render_sig(&r(3, 8), 2), "0.38"); // half to even
        assert_eq!(render_sig(&r(67, 1), 4), "67.00");
        assert_eq!(render_sig(&r(-201, 4), 6), "-50.2500");
        assert_eq!(render_sig(&r(999, 1000), 2), "1.0"); // carry
        assert_eq!(render_sig(&Rat::zero(), 5), "0");
        assert_eq!(render_sig(&r(1, 1_000_000_000), 3), "1.00e-9");
    }

    #[test]
    fn render_matches_known_constant() {
        // exp(-1) = 0.367879441171442321595...
        let v = exp_neg(&Rat::one(), 50);
        let rendered = render_sig(&v, 12);
        assert_eq!(rendered, "0.367879441171");
    }

    #[test]
    fn round_half_even_ties() {
        let r = |n: i64, d: i64| Rat::new(Int::from(n), Int::from(d));
        assert_eq!(round_half_even(&r(5, 2)), Int::from(2));
        assert_eq!(round_half_even(&r(7, 2)), Int::from(4));
        assert_eq!(round_half_even(&r(-5, 2)), Int::from(-2));
        assert_eq!(round_half_even(&r(9, 4)), Int::from(2));
    }

    #[test]
    fn parse_decimal_roundtrip() {
        let r = parse_decimal("12.5").unwrap();
        assert_eq!(r, Rat::new(Int::from(25), Int::from(2)));
        assert_eq!(
            parse_decimal("-0.25").unwrap(),
            Rat::new(Int::from(-1), Int::from(4))
        );
        assert_eq!(
            parse_decimal("3e2").unwrap(),
            Rat::from_integer(Int::from(300))
        );
        assert_eq!(
            parse_decimal("1.5e-1").unwrap(),
            Rat::new(Int::from(3), Int::from(20))
        );
        assert!(parse_decimal("abc").is_none());
        assert!(parse_decimal("").is_none());
    }
}
