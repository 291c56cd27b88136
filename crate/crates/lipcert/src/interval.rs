//! Closed real intervals with containment-sound arithmetic.
//!
//! Every operation returns an interval that contains all pointwise results of
//! its operands. Endpoints are computed with nearest rounding; callers absorb
//! the resulting error with the global comparison tolerance [`NUM_TOL`] rather
//! than paying for directed rounding.

use std::fmt;
use std::ops::{Add, Mul, Neg};

/// Absolute tolerance used for floating-point comparisons throughout the
/// crate (bound monotonicity checks, termination tests, activation-boundary
/// detection).
pub const NUM_TOL: f64 = 1e-9;

/// A closed interval `[lo, hi]` of reals with `lo <= hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    /// Creates `[lo, hi]`.
    ///
    /// Panics if `lo > hi` or either endpoint is NaN.
    pub fn new(lo: f64, hi: f64) -> Self {
        assert!(lo <= hi, "invalid interval [{lo}, {hi}]");
        Interval { lo, hi }
    }

    /// The degenerate interval `[v, v]`.
    pub fn point(v: f64) -> Self {
        Interval::new(v, v)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    /// Whether `other` lies entirely inside `self`.
    pub fn encloses(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    /// Scalar multiple `c * [lo, hi]`; endpoints swap when `c < 0`.
    pub fn scale(&self, c: f64) -> Interval {
        let a = c * self.lo;
        let b = c * self.hi;
        Interval::new(a.min(b), a.max(b))
    }

    /// Image under `max(0, .)`, the rectifier.
    pub fn relu(&self) -> Interval {
        Interval::new(self.lo.max(0.0), self.hi.max(0.0))
    }
}

impl Add for Interval {
    type Output = Interval;

    fn add(self, rhs: Interval) -> Interval {
        Interval::new(self.lo + rhs.lo, self.hi + rhs.hi)
    }
}

impl Mul for Interval {
    type Output = Interval;

    /// Interval product: min/max over the four endpoint products.
    fn mul(self, rhs: Interval) -> Interval {
        let p1 = self.lo * rhs.lo;
        let p2 = self.lo * rhs.hi;
        let p3 = self.hi * rhs.lo;
        let p4 = self.hi * rhs.hi;
        Interval::new(p1.min(p2).min(p3).min(p4), p1.max(p2).max(p3).max(p4))
    }
}

impl Neg for Interval {
    type Output = Interval;

    fn neg(self) -> Interval {
        Interval::new(-self.hi, -self.lo)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn add_endpoints() {
        assert_eq!(
            Interval::new(1.0, 2.0) + Interval::new(3.0, 5.0),
            Interval::new(4.0, 7.0)
        );
        assert_eq!(
            Interval::point(0.0) + Interval::new(-2.5, 4.0),
            Interval::new(-2.5, 4.0)
        );
        assert_eq!(
            Interval::new(-1.0, 1.0) + Interval::new(-2.0, 0.0),
            Interval::new(-3.0, 1.0)
        );
    }

    #[test]
    fn mul_endpoint_products() {
        assert_eq!(
            Interval::new(1.0, 2.0) * Interval::new(-1.0, 3.0),
            Interval::new(-2.0, 6.0)
        );
        assert_eq!(
            Interval::new(0.0, 1.0) * Interval::new(0.0, 1.0),
            Interval::new(0.0, 1.0)
        );
        assert_eq!(
            Interval::new(-2.0, -1.0) * Interval::new(-3.0, -2.0),
            Interval::new(2.0, 6.0)
        );
    }

    #[test]
    fn scale_swaps_for_negative_factor() {
        assert_eq!(
            Interval::new(0.0, 1.0).scale(-3.0),
            Interval::new(-3.0, 0.0)
        );
        assert_eq!(Interval::new(-4.0, 7.0).scale(0.0), Interval::point(0.0));
        assert_eq!(
            Interval::new(-1.0, 2.0).scale(2.0),
            Interval::new(-2.0, 4.0)
        );
    }

    #[test]
    #[should_panic(expected = "invalid interval")]
    fn rejects_inverted_endpoints() {
        Interval::new(1.0, 0.0);
    }

    fn random_interval(rng: &mut ChaCha8Rng) -> Interval {
        let a: f64 = rng.gen_range(-10.0..10.0);
        let b: f64 = rng.gen_range(-10.0..10.0);
        Interval::new(a.min(b), a.max(b))
    }

    fn point_in(rng: &mut ChaCha8Rng, iv: &Interval) -> f64 {
        if iv.width() == 0.0 {
            iv.lo()
        } else {
            rng.gen_range(iv.lo()..=iv.hi())
        }
    }

    /// Pointwise results of add/mul/scale land inside the interval results.
    #[test]
    fn containment_soundness() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10_000 {
            let p = random_interval(&mut rng);
            let q = random_interval(&mut rng);
            let x = point_in(&mut rng, &p);
            let y = point_in(&mut rng, &q);
            let c: f64 = rng.gen_range(-5.0..5.0);
            assert!((p + q).contains(x + y));
            assert!((p * q).contains(x * y));
            assert!(p.scale(c).contains(c * x));
        }
    }

    fn sub_interval(rng: &mut ChaCha8Rng, iv: &Interval) -> Interval {
        let a = point_in(rng, iv);
        let b = point_in(rng, iv);
        Interval::new(a.min(b), a.max(b))
    }

    /// Shrinking an operand can only shrink the result; the convergence of the
    /// branch and bound loop leans on this.
    #[test]
    fn monotone_under_refinement() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10_000 {
            let p = random_interval(&mut rng);
            let q = random_interval(&mut rng);
            let ps = sub_interval(&mut rng, &p);
            let qs = sub_interval(&mut rng, &q);
            let c: f64 = rng.gen_range(-5.0..5.0);
            assert!((p + q).encloses(&(ps + qs)));
            assert!((p * q).encloses(&(ps * qs)));
            assert!(p.scale(c).encloses(&ps.scale(c)));
        }
    }
}
