//! The coefficient field `K = Q(pi)` with `pi^(p-1) = -p`.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::linalg;
use crate::rational::{fmt_q, is_prime, parse_q, qi, residue_mod_p, vp, Q};

/// Additive valuation with `v(p) = 1`; `Infinite` is the valuation of zero.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Valuation {
    Finite(Q),
    Infinite,
}

impl Valuation {
    pub fn finite(&self) -> Option<&Q> {
        match self {
            Valuation::Finite(v) => Some(v),
            Valuation::Infinite => None,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Valuation::Infinite)
    }

    pub fn add(&self, other: &Valuation) -> Valuation {
        match (self, other) {
            (Valuation::Finite(a), Valuation::Finite(b)) => Valuation::Finite(a + b),
            _ => Valuation::Infinite,
        }
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Valuation::Finite(v) => f.write_str(&fmt_q(v)),
            Valuation::Infinite => f.write_str("+inf"),
        }
    }
}

/// `sum_m coeffs[m] * pi^m` with `0 <= m < p - 1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PadicScalar {
    prime: u32,
    coeffs: Vec<Q>,
}

fn check_prime(p: u32) -> Result<()> {
    if is_prime(p as u64) {
        Ok(())
    } else {
        Err(Error::NotPrime(p as u64))
    }
}

impl PadicScalar {
    pub fn zero(p: u32) -> Self {
        assert!(is_prime(p as u64), "{p} is not prime");
        PadicScalar { prime: p, coeffs: vec![Q::zero(); (p - 1) as usize] }
    }

    pub fn from_q(p: u32, x: Q) -> Self {
        let mut s = Self::zero(p);
        s.coeffs[0] = x;
        s
    }

    pub fn from_int(p: u32, n: i64) -> Self {
        Self::from_q(p, qi(n))
    }

    pub fn one(p: u32) -> Self {
        Self::from_int(p, 1)
    }

    /// The Dwork element; for `p = 2` it is the rational `-2`.
    pub fn pi(p: u32) -> Self {
        if p == 2 {
            return Self::from_int(2, -2);
        }
        let mut s = Self::zero(p);
        s.coeffs[1] = Q::one();
        s
    }

    /// Builds from explicit coefficients, reducing any degree `>= p - 1`.
    pub fn from_coeffs(p: u32, coeffs: Vec<Q>) -> Result<Self> {
        check_prime(p)?;
        let mut s = Self::zero(p);
        let pi = Self::pi(p);
        let mut power = Self::one(p);
        for c in coeffs {
            if !c.is_zero() {
                s += &power.scale(&c);
            }
            power = &power * &pi;
        }
        Ok(s)
    }

    pub fn prime(&self) -> u32 {
        self.prime
    }

    pub fn coeffs(&self) -> &[Q] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Zero::is_zero)
    }

    /// The rational value, if the element lies in `Q`.
    pub fn as_rational(&self) -> Option<&Q> {
        if self.coeffs[1..].iter().all(Zero::is_zero) {
            Some(&self.coeffs[0])
        } else {
            None
        }
    }

    pub fn scale(&self, x: &Q) -> Self {
        PadicScalar { prime: self.prime, coeffs: self.coeffs.iter().map(|c| c * x).collect() }
    }

    /// `min_m (v_p(c_m) + m/(p-1))`; exact since the fractional parts differ.
    pub fn valuation(&self) -> Valuation {
        let e = (self.prime - 1) as i64;
        self.coeffs
            .iter()
            .enumerate()
            .filter_map(|(m, c)| vp(c, self.prime).map(|v| Q::new((v * e + m as i64).into(), e.into())))
            .min()
            .map_or(Valuation::Infinite, Valuation::Finite)
    }

    /// Image in the residue field `F_p`; requires `v >= 0`.
    pub fn residue(&self) -> Result<u64> {
        if let Valuation::Finite(v) = self.valuation() {
            if v < Q::zero() {
                return Err(Error::NotIntegral(self.to_string()));
            }
        }
        // v >= 0 forces every c_m integral, and c_m pi^m for m > 0 lies in the maximal ideal
        residue_mod_p(&self.coeffs[0], self.prime)
    }

    fn times_pi(&self) -> Self {
        let n = self.coeffs.len();
        if n == 1 {
            return self.scale(&qi(-2));
        }
        let mut out = vec![Q::zero(); n];
        out[1..].clone_from_slice(&self.coeffs[..n - 1]);
        out[0] = &self.coeffs[n - 1] * qi(-(self.prime as i64));
        PadicScalar { prime: self.prime, coeffs: out }
    }

    pub fn pow(&self, mut e: u32) -> Self {
        let mut acc = Self::one(self.prime);
        let mut base = self.clone();
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            base = &base * &base;
            e >>= 1;
        }
        acc
    }

    /// Multiplicative inverse via the multiplication-by-`self` matrix.
    pub fn inv(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let n = self.coeffs.len();
        let mut columns = Vec::with_capacity(n);
        let mut col = self.clone();
        for _ in 0..n {
            columns.push(col.coeffs.clone());
            col = col.times_pi();
        }
        let matrix: Vec<Vec<Q>> = (0..n).map(|row| (0..n).map(|c| columns[c][row].clone()).collect()).collect();
        let mut rhs = vec![Q::zero(); n];
        rhs[0] = Q::one();
        let sol = linalg::solve(matrix, rhs).ok_or(Error::DivisionByZero)?;
        Ok(PadicScalar { prime: self.prime, coeffs: sol })
    }

    pub fn checked_div(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(self * &other.inv()?)
    }

    pub fn check_same(&self, other: &Self) -> Result<()> {
        if self.prime == other.prime {
            Ok(())
        } else {
            Err(Error::PrimeMismatch(self.prime, other.prime))
        }
    }

    /// Parses the `c0 + c1*pi + c2*pi^2` form produced by `Display`.
    pub fn parse(p: u32, s: &str) -> Result<Self> {
        check_prime(p)?;
        let bad = || Error::Unsupported(format!("cannot parse scalar `{s}`"));
        let mut acc = Self::zero(p);
        for term in s.split(" + ") {
            let term = term.trim();
            let (coef, power) = match term.split_once('*') {
                None => (term, 0u32),
                Some((c, rest)) => {
                    let rest = rest.trim();
                    let power = if rest == "pi" {
                        1
                    } else {
                        rest.strip_prefix("pi^").and_then(|e| e.parse().ok()).ok_or_else(bad)?
                    };
                    (c, power)
                }
            };
            let c = parse_q(coef).ok_or_else(bad)?;
            acc += &Self::pi(p).pow(power).scale(&c);
        }
        Ok(acc)
    }
}

impl fmt::Display for PadicScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms: Vec<String> = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(m, c)| match m {
                0 => fmt_q(c),
                1 => format!("{}*pi", fmt_q(c)),
                _ => format!("{}*pi^{m}", fmt_q(c)),
            })
            .collect();
        if terms.is_empty() {
            f.write_str("0/1")
        } else {
            f.write_str(&terms.join(" + "))
        }
    }
}

impl<'a> Add<&'a PadicScalar> for &'a PadicScalar {
    type Output = PadicScalar;
    fn add(self, rhs: &PadicScalar) -> PadicScalar {
        assert_eq!(self.prime, rhs.prime, "prime mismatch");
        PadicScalar {
            prime: self.prime,
            coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a + b).collect(),
        }
    }
}

impl<'a> Sub<&'a PadicScalar> for &'a PadicScalar {
    type Output = PadicScalar;
    fn sub(self, rhs: &PadicScalar) -> PadicScalar {
        assert_eq!(self.prime, rhs.prime, "prime mismatch");
        PadicScalar {
            prime: self.prime,
            coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a - b).collect(),
        }
    }
}

impl<'a> Mul<&'a PadicScalar> for &'a PadicScalar {
    type Output = PadicScalar;
    fn mul(self, rhs: &PadicScalar) -> PadicScalar {
        assert_eq!(self.prime, rhs.prime, "prime mismatch");
        let n = self.coeffs.len();
        let mut wide = vec![Q::zero(); 2 * n - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                if !b.is_zero() {
                    wide[i + j] += a * b;
                }
            }
        }
        let minus_p = qi(-(self.prime as i64));
        if n == 1 {
            // p = 2: every coefficient is already rational
            return PadicScalar { prime: self.prime, coeffs: wide };
        }
        for k in (n..2 * n - 1).rev() {
            let top = std::mem::take(&mut wide[k]);
            if !top.is_zero() {
                wide[k - n] += top * &minus_p;
            }
        }
        wide.truncate(n);
        PadicScalar { prime: self.prime, coeffs: wide }
    }
}

impl Neg for &PadicScalar {
    type Output = PadicScalar;
    fn neg(self) -> PadicScalar {
        PadicScalar { prime: self.prime, coeffs: self.coeffs.iter().map(|c| -c).collect() }
    }
}

impl Neg for PadicScalar {
    type Output = PadicScalar;
    fn neg(self) -> PadicScalar {
        -&self
    }
}

impl Add for PadicScalar {
    type Output = PadicScalar;
    fn add(self, rhs: PadicScalar) -> PadicScalar {
        &self + &rhs
    }
}

impl Sub for PadicScalar {
    type Output = PadicScalar;
    fn sub(self, rhs: PadicScalar) -> PadicScalar {
        &self - &rhs
    }
}

impl Mul for PadicScalar {
    type Output = PadicScalar;
    fn mul(self, rhs: PadicScalar) -> PadicScalar {
        &self * &rhs
    }
}

impl AddAssign<&PadicScalar> for PadicScalar {
    fn add_assign(&mut self, rhs: &PadicScalar) {
        assert_eq!(self.prime, rhs.prime, "prime mismatch");
        for (a, b) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
            *a += b;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;
    use proptest::prelude::*;

    #[test]
    fn pi_squared_at_three() {
        let pi = PadicScalar::pi(3);
        assert_eq!((&pi * &pi).coeffs(), &[qi(-3), qi(0)]);
    }

    #[test]
    fn sum_cancels_pi() {
        let a = PadicScalar::from_coeffs(3, vec![qi(1), qi(1)]).unwrap();
        let b = PadicScalar::from_coeffs(3, vec![qi(2), qi(-1)]).unwrap();
        assert_eq!(&a + &b, PadicScalar::from_int(3, 3));
    }

    #[test]
    fn pi_fourth_at_five() {
        assert_eq!(PadicScalar::pi(5).pow(4), PadicScalar::from_int(5, -5));
    }

    #[test]
    fn basic_valuations() {
        for p in [2u32, 3, 5, 7, 11] {
            assert_eq!(PadicScalar::pi(p).valuation(), Valuation::Finite(q(1, p as i64 - 1)));
        }
        let x = &PadicScalar::from_int(3, 3) * &PadicScalar::pi(3);
        assert_eq!(x.valuation(), Valuation::Finite(q(3, 2)));
        assert_eq!(PadicScalar::zero(5).valuation(), Valuation::Infinite);
    }

    #[test]
    fn inverse_and_division() {
        let x = PadicScalar::from_coeffs(5, vec![qi(2), qi(1), qi(0), q(1, 3)]).unwrap();
        assert_eq!(&x * &x.inv().unwrap(), PadicScalar::one(5));
        assert_eq!(PadicScalar::zero(5).inv(), Err(Error::DivisionByZero));
        assert_eq!(PadicScalar::one(3).checked_div(&PadicScalar::one(5)), Err(Error::PrimeMismatch(3, 5)));
    }

    #[test]
    fn residues() {
        let x = PadicScalar::from_coeffs(5, vec![q(7, 2), qi(3)]).unwrap();
        assert_eq!(x.residue().unwrap(), 1);
        assert!(PadicScalar::from_q(5, q(1, 5)).residue().is_err());
    }

    #[test]
    fn display_round_trip() {
        let x = PadicScalar::from_coeffs(5, vec![q(-1, 2), qi(0), qi(3)]).unwrap();
        assert_eq!(x.to_string(), "-1/2 + 3/1*pi^2");
        assert_eq!(PadicScalar::parse(5, &x.to_string()).unwrap(), x);
        assert_eq!(PadicScalar::zero(3).to_string(), "0/1");
        assert_eq!(PadicScalar::parse(3, "2/1*pi").unwrap(), PadicScalar::pi(3).scale(&qi(2)));
    }

    fn scalar(p: u32) -> impl Strategy<Value = PadicScalar> {
        prop::collection::vec((-30i64..30, 1i64..12), (p - 1) as usize).prop_map(move |cs| {
            PadicScalar::from_coeffs(p, cs.into_iter().map(|(n, d)| q(n, d)).collect()).unwrap()
        })
    }

    fn prime_and_pair() -> impl Strategy<Value = (PadicScalar, PadicScalar)> {
        prop::sample::select(vec![2u32, 3, 5, 7]).prop_flat_map(|p| (scalar(p), scalar(p)))
    }

    proptest! {
        #[test]
        fn valuation_is_multiplicative((x, y) in prime_and_pair()) {
            prop_assert_eq!((&x * &y).valuation(), x.valuation().add(&y.valuation()));
        }

        #[test]
        fn ultrametric((x, y) in prime_and_pair()) {
            let (vx, vy) = (x.valuation(), y.valuation());
            let vs = (&x + &y).valuation();
            prop_assert!(vs >= vx.clone().min(vy.clone()));
            if vx != vy {
                prop_assert_eq!(vs, vx.min(vy));
            }
        }

        #[test]
        fn inverse_is_inverse((x, _y) in prime_and_pair()) {
            prop_assume!(!x.is_zero());
            prop_assert_eq!(&x * &x.inv().unwrap(), PadicScalar::one(x.prime()));
        }
    }
}
