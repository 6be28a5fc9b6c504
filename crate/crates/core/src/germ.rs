//! Affine germs `value + slope * c` at `c -> 0+`.
//!
//! Comparing germs lexicographically decides every comparison of the
//! underlying affine functions for all sufficiently small `c > 0`, so
//! hull and max computations done on germs give the exact small-radius limit
//! without choosing a cutoff.

use std::fmt;
use std::ops::{Add, Neg, Sub};

use num_traits::Zero;

use crate::rational::{fmt_q, qi, Q};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Germ {
    pub value: Q,
    pub slope: Q,
}

impl Germ {
    pub fn new(value: Q, slope: Q) -> Self {
        Germ { value, slope }
    }

    pub fn constant(value: Q) -> Self {
        Germ { value, slope: Q::zero() }
    }

    pub fn zero() -> Self {
        Germ::constant(Q::zero())
    }

    pub fn eval(&self, c: &Q) -> Q {
        &self.value + &self.slope * c
    }

    pub fn scale(&self, k: &Q) -> Self {
        Germ { value: &self.value * k, slope: &self.slope * k }
    }
}

impl fmt::Display for Germ {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} + {}*c", fmt_q(&self.value), fmt_q(&self.slope))
    }
}

impl<'a> Add<&'a Germ> for &'a Germ {
    type Output = Germ;
    fn add(self, rhs: &Germ) -> Germ {
        Germ { value: &self.value + &rhs.value, slope: &self.slope + &rhs.slope }
    }
}

impl<'a> Sub<&'a Germ> for &'a Germ {
    type Output = Germ;
    fn sub(self, rhs: &Germ) -> Germ {
        Germ { value: &self.value - &rhs.value, slope: &self.slope - &rhs.slope }
    }
}

impl Neg for &Germ {
    type Output = Germ;
    fn neg(self) -> Germ {
        Germ { value: -&self.value, slope: -&self.slope }
    }
}

/// Values a Newton polygon can be built over: an ordered `Q`-vector space.
pub trait HullValue: Clone + Ord + fmt::Debug + Send + Sync {
    fn neutral() -> Self;
    fn plus(&self, other: &Self) -> Self;
    fn minus(&self, other: &Self) -> Self;
    fn times(&self, k: &Q) -> Self;

    fn div_int(&self, k: i64) -> Self {
        self.times(&(Q::from_integer(1.into()) / qi(k)))
    }
}

impl HullValue for Q {
    fn neutral() -> Self {
        Q::zero()
    }
    fn plus(&self, other: &Self) -> Self {
        self + other
    }
    fn minus(&self, other: &Self) -> Self {
        self - other
    }
    fn times(&self, k: &Q) -> Self {
        self * k
    }
}

impl HullValue for Germ {
    fn neutral() -> Self {
        Germ::constant(Q::zero())
    }
    fn plus(&self, other: &Self) -> Self {
        self + other
    }
    fn minus(&self, other: &Self) -> Self {
        self - other
    }
    fn times(&self, k: &Q) -> Self {
        self.scale(k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    #[test]
    fn lex_order_matches_small_c() {
        let a = Germ::new(qi(0), qi(5));
        let b = Germ::new(q(1, 100), qi(-3));
        assert!(a < b);
        assert!(a.eval(&q(1, 1000)) < b.eval(&q(1, 1000)));
        assert!(Germ::new(qi(0), qi(1)) > Germ::new(qi(0), qi(-1)));
    }
}
