//! Big-integer reference arithmetic used by tests as an oracle that is
//! independent of the library's own floating-point phase reduction.
//!
//! Pi is computed from scratch with Machin's formula in fixed-point
//! `BigInt` arithmetic, so none of the constants baked into the library
//! under test are reused here.

use num_bigint::{BigInt, BigUint, Sign};
use num_traits::{One, Signed, ToPrimitive, Zero};

/// floor(pi * 2^bits) via Machin's formula 16*atan(1/5) - 4*atan(1/239).
pub fn pi_fixed_point(bits: u32) -> BigUint {
    let guard = 32;
    let scale = bits + guard;
    let a = atan_inv_fixed_point(5u32, scale);
    let b = atan_inv_fixed_point(239u32, scale);
    let pi = (a << 4u32) - (b << 2u32);
    let pi = pi.to_biguint().expect("pi is positive");
    pi >> guard
}

/// floor(2*pi * 2^bits).
pub fn two_pi_fixed_point(bits: u32) -> BigUint {
    pi_fixed_point(bits + 1)
}

fn atan_inv_fixed_point(x: u32, bits: u32) -> BigInt {
    let x = BigInt::from(x);
    let x2 = &x * &x;
    let mut num = (BigInt::one() << bits) / &x;
    let mut acc = BigInt::zero();
    let mut k = 0u32;
    while !num.is_zero() {
        let term = &num / BigInt::from(2 * k + 1);
        if k % 2 == 0 {
            acc += term;
        } else {
            acc -= term;
        }
        num /= &x2;
        k += 1;
    }
    acc
}

/// Exact decomposition of a finite f64 as mantissa * 2^exponent.
pub fn f64_exact(x: f64) -> (BigInt, i64) {
    assert!(x.is_finite(), "f64_exact requires a finite value");
    let bits = x.to_bits();
    let sign = if bits >> 63 == 1 { Sign::Minus } else { Sign::Plus };
    let biased = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let (mantissa, exp) = if biased == 0 {
        (frac, -1074)
    } else {
        (frac | (1u64 << 52), biased - 1075)
    };
    (BigInt::from_biguint(sign, BigUint::from(mantissa)), exp)
}

const FP_BITS: u32 = 384;

/// Exact fixed-point value of lambda * t * 2^pow2 at FP_BITS fractional bits
/// (truncated toward zero if the product has fewer than zero integer bits).
fn product_fixed_point(lambda: f64, t: f64, pow2: i32) -> BigInt {
    let (m1, e1) = f64_exact(lambda);
    let (m2, e2) = f64_exact(t);
    let m = m1 * m2;
    let shift = e1 + e2 + i64::from(pow2) + i64::from(FP_BITS);
    if shift >= 0 {
        m << shift
    } else {
        m >> (-shift)
    }
}

/// Reference value of (lambda * t * 2^pow2) mod 2*pi, mapped to (-pi, pi].
pub fn angle_mod_two_pi_oracle(lambda: f64, t: f64, pow2: i32) -> f64 {
    let two_pi = BigInt::from(two_pi_fixed_point(FP_BITS));
    let pi = &two_pi >> 1;
    let x = product_fixed_point(lambda, t, pow2);
    let mut r = x % &two_pi;
    if r.is_negative() {
        r += &two_pi;
    }
    if r > pi {
        r -= &two_pi;
    }
    big_ratio_to_f64(&r, FP_BITS)
}

fn big_ratio_to_f64(value: &BigInt, frac_bits: u32) -> f64 {
    value.to_f64().expect("fixed-point value fits in f64 range") / 2f64.powi(frac_bits as i32)
}

/// The phase fraction frac(-lambda * t / (2*pi)) in [0, 1).
pub fn phase_fraction_oracle(lambda: f64, t: f64) -> f64 {
    let two_pi = BigInt::from(two_pi_fixed_point(FP_BITS));
    let x = product_fixed_point(lambda, t, 0);
    let mut r = (-x) % &two_pi;
    if r.is_negative() {
        r += &two_pi;
    }
    r.to_f64().expect("in range") / two_pi.to_f64().expect("in range")
}

/// The m-bit expansion of frac(-lambda * t / (2*pi)) rounded to nearest,
/// wrapped mod 1. Bits are most-significant first: f ~ 0.b[0] b[1] ...
pub fn rounded_phase_bits(lambda: f64, t: f64, m: u32) -> Vec<u8> {
    let two_pi = BigInt::from(two_pi_fixed_point(FP_BITS));
    let x = product_fixed_point(lambda, t, 0);
    let mut r = (-x) % &two_pi;
    if r.is_negative() {
        r += &two_pi;
    }
    let rounded: BigInt = ((r << m) + (&two_pi >> 1)) / &two_pi;
    let rounded = rounded.to_biguint().expect("non-negative");
    let modulus = BigUint::one() << m;
    let rounded = rounded % modulus;
    (0..m)
        .map(|i| {
            let bit: BigUint = (&rounded >> (m - 1 - i)) & BigUint::one();
            if bit.is_zero() {
                0
            } else {
                1
            }
        })
        .collect()
}

/// Distance between two angles on the circle of circumference 2*pi.
pub fn circular_distance(a: f64, b: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let d = (a - b).rem_euclid(two_pi);
    d.min(two_pi - d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pi_matches_canonical_hex_digits() {
        let p = pi_fixed_point(124);
        assert_eq!(format!("{:x}", p), "3243f6a8885a308d313198a2e0370734");
    }

    #[test]
    fn pi_matches_f64_constant() {
        let p = big_ratio_to_f64(&BigInt::from(pi_fixed_point(FP_BITS)), FP_BITS);
        assert!((p - std::f64::consts::PI).abs() < 1e-15);
    }

    #[test]
    fn angle_oracle_agrees_with_naive_for_small_products() {
        for i in 0..200 {
            let lambda = -3.0 + 0.031 * i as f64;
            let t = 1.7 + 0.013 * i as f64;
            let naive = {
                let two_pi = 2.0 * std::f64::consts::PI;
                let mut r = (lambda * t).rem_euclid(two_pi);
                if r > std::f64::consts::PI {
                    r -= two_pi;
                }
                r
            };
            let oracle = angle_mod_two_pi_oracle(lambda, t, 0);
            assert!(
                circular_distance(naive, oracle) < 1e-10,
                "lambda={lambda} t={t}: naive={naive} oracle={oracle}"
            );
        }
    }

    #[test]
    fn phase_fraction_matches_angle() {
        let f = phase_fraction_oracle(0.257, 26.0);
        let angle = angle_mod_two_pi_oracle(0.257, 26.0, 0);
        let two_pi = 2.0 * std::f64::consts::PI;
        let from_fraction = (-f * two_pi).rem_euclid(two_pi);
        assert!(circular_distance(from_fraction, angle) < 1e-12);
    }

    #[test]
    fn rounded_bits_reassemble_to_fraction() {
        let m = 32;
        let bits = rounded_phase_bits(0.183, 26.0, m);
        let f = phase_fraction_oracle(0.183, 26.0);
        let assembled: f64 = bits
            .iter()
            .enumerate()
            .map(|(i, &b)| f64::from(b) / 2f64.powi(i as i32 + 1))
            .sum();
        let d = (assembled - f).abs();
        let d = d.min(1.0 - d);
        assert!(d <= 2f64.powi(-(m as i32 + 1)) + 1e-15, "d={d}");
    }
}
