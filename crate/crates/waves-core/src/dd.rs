//! Double-double helpers for phase arithmetic.
//!
//! Iterative phase estimation needs angles of the form `lambda * t * 2^k`
//! reduced modulo 2*pi. At `k = 31` the product reaches ~1e10, where a plain
//! f64 remainder has already lost ~10 digits of the angle. Carrying the
//! product and the reduction in double-double (~32 significant digits) keeps
//! the absolute error of the reduced angle below 1e-18 for
//! `|lambda * t * 2^k| <= 1e15`.

/// An unevaluated sum `hi + lo` with `|lo| <= ulp(hi)/2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DD {
    pub hi: f64,
    pub lo: f64,
}

/// 2*pi to double-double precision.
pub const TWO_PI: DD = DD {
    hi: 6.283185307179586,
    lo: 2.4492935982947064e-16,
};

/// pi to double-double precision.
pub const PI: DD = DD {
    hi: 3.141592653589793,
    lo: 1.2246467991473532e-16,
};

fn two_sum(a: f64, b: f64) -> DD {
    let s = a + b;
    let bb = s - a;
    let lo = (a - (s - bb)) + (b - bb);
    DD { hi: s, lo }
}

fn quick_two_sum(a: f64, b: f64) -> DD {
    let s = a + b;
    let lo = b - (s - a);
    DD { hi: s, lo }
}

fn two_prod(a: f64, b: f64) -> DD {
    let p = a * b;
    let lo = a.mul_add(b, -p);
    DD { hi: p, lo }
}

impl DD {
    pub fn from_f64(x: f64) -> Self {
        DD { hi: x, lo: 0.0 }
    }

    /// Exact product of two f64 values.
    pub fn product(a: f64, b: f64) -> Self {
        two_prod(a, b)
    }

    pub fn add(self, other: DD) -> DD {
        let s = two_sum(self.hi, other.hi);
        let lo = self.lo + other.lo + s.lo;
        quick_two_sum(s.hi, lo)
    }

    pub fn sub(self, other: DD) -> DD {
        self.add(other.neg())
    }

    pub fn neg(self) -> DD {
        DD {
            hi: -self.hi,
            lo: -self.lo,
        }
    }

    pub fn mul_f64(self, x: f64) -> DD {
        let p = two_prod(self.hi, x);
        let lo = self.lo * x + p.lo;
        quick_two_sum(p.hi, lo)
    }

    /// Exact scaling by a power of two (no rounding as long as no overflow
    /// or underflow occurs).
    pub fn scale_pow2(self, k: i32) -> DD {
        let f = 2f64.powi(k);
        DD {
            hi: self.hi * f,
            lo: self.lo * f,
        }
    }

    pub fn value(self) -> f64 {
        self.hi + self.lo
    }

    fn gt(self, other: DD) -> bool {
        self.hi > other.hi || (self.hi == other.hi && self.lo > other.lo)
    }

    fn le(self, other: DD) -> bool {
        !self.gt(other)
    }
}

/// Reduces a double-double angle to the branch (-pi, pi].
pub fn reduce_to_branch(x: DD) -> DD {
    debug_assert!(x.hi.is_finite());
    let q = (x.hi / TWO_PI.hi).round();
    let mut r = x.sub(TWO_PI.mul_f64(q));
    while r.gt(PI) {
        r = r.sub(TWO_PI);
    }
    while r.le(PI.neg()) {
        r = r.add(TWO_PI);
    }
    r
}

/// `(lambda * t * 2^pow2) mod 2*pi`, mapped to (-pi, pi].
pub fn angle_mod_two_pi(lambda: f64, t: f64, pow2: i32) -> f64 {
    reduce_to_branch(DD::product(lambda, t).scale_pow2(pow2)).value()
}

/// `frac(-lambda * t / (2*pi))` in [0, 1).
pub fn phase_fraction(lambda: f64, t: f64) -> f64 {
    let r = reduce_to_branch(DD::product(lambda, t).neg());
    let positive = if r.hi < 0.0 || (r.hi == 0.0 && r.lo < 0.0) {
        r.add(TWO_PI)
    } else {
        r
    };
    let f = positive.value() / TWO_PI.value();
    if f >= 1.0 {
        0.0
    } else {
        f
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use waves_testkit::{angle_mod_two_pi_oracle, circular_distance, phase_fraction_oracle};

    #[test]
    fn two_pi_constant_is_consistent() {
        let four_pi = TWO_PI.add(TWO_PI);
        assert_eq!(TWO_PI.hi, 2.0 * PI.hi);
        assert_eq!(TWO_PI.lo, 2.0 * PI.lo);
        assert_eq!(four_pi.hi, 2.0 * TWO_PI.hi);
        assert!((TWO_PI.hi - 2.0 * std::f64::consts::PI).abs() < 1e-15);
    }

    #[test]
    fn reduction_matches_big_integer_oracle_at_large_scale() {
        let lambdas = [0.183, 0.257, -0.6, 1.0 / 3.0, 0.9999, -2.7e-3];
        let times = [26.0, 7.853981633974483, 1.25, 313.7];
        for &lambda in &lambdas {
            for &t in &times {
                for pow2 in [0, 1, 7, 16, 31, 40] {
                    let got = angle_mod_two_pi(-lambda, t, pow2);
                    let want = angle_mod_two_pi_oracle(-lambda, t, pow2);
                    assert!(
                        circular_distance(got, want) < 1e-13,
                        "lambda={lambda} t={t} pow2={pow2}: got={got} want={want}"
                    );
                }
            }
        }
    }

    #[test]
    fn reduction_stays_on_branch() {
        for i in 0..2000 {
            let x = -40.0 + 0.04003 * i as f64;
            let r = angle_mod_two_pi(x, 1.0, 0);
            assert!(r > -std::f64::consts::PI - 1e-15);
            assert!(r <= std::f64::consts::PI + 1e-15);
        }
    }

    #[test]
    fn phase_fraction_matches_oracle() {
        for &(lambda, t) in &[(0.183, 26.0), (0.257, 26.0), (-0.81, 3.3), (0.0, 26.0)] {
            let got = phase_fraction(lambda, t);
            let want = phase_fraction_oracle(lambda, t);
            let d = (got - want).abs();
            let d = d.min(1.0 - d);
            assert!(d < 1e-14, "lambda={lambda} t={t}: got={got} want={want}");
            assert!((0.0..1.0).contains(&got));
        }
    }
}
