//! Exact rationals and the handful of number-theoretic helpers the rest of
//! the crate leans on.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Exact rational number used everywhere (values, weights, valuations).
pub type Q = BigRational;

pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut k = 2u64;
    while k * k <= p {
        if p % k == 0 {
            return false;
        }
        k += 1;
    }
    true
}

/// p-adic valuation of a nonzero integer.
pub fn vp_int(n: &BigInt, p: u32) -> i64 {
    debug_assert!(!n.is_zero());
    let p = BigInt::from(p);
    let mut n = n.abs();
    let mut v = 0;
    loop {
        let (quot, rem) = n.div_rem(&p);
        if !rem.is_zero() {
            return v;
        }
        n = quot;
        v += 1;
    }
}

/// p-adic valuation of a rational; `None` for zero.
pub fn vp(x: &Q, p: u32) -> Option<i64> {
    if x.is_zero() {
        None
    } else {
        Some(vp_int(x.numer(), p) - vp_int(x.denom(), p))
    }
}

/// Residue of a p-integral rational in `F_p`.
pub fn residue_mod_p(x: &Q, p: u32) -> Result<u64> {
    if let Some(v) = vp(x, p) {
        if v < 0 {
            return Err(Error::NotIntegral(fmt_q(x)));
        }
    }
    let pb = BigInt::from(p);
    let num = x.numer().mod_floor(&pb);
    let den = x.denom().mod_floor(&pb);
    let num = num.to_u64().unwrap_or(0);
    let den = den.to_u64().unwrap_or(0);
    if den == 0 {
        // denominator divisible by p with v >= 0 means numerator also divisible
        return Ok(0);
    }
    Ok(num * inv_mod(den, p as u64) % p as u64)
}

pub fn inv_mod(a: u64, p: u64) -> u64 {
    pow_mod(a % p, p - 2, p)
}

pub fn pow_mod(mut a: u64, mut e: u64, p: u64) -> u64 {
    let mut acc = 1u64 % p;
    a %= p;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * a % p;
        }
        a = a * a % p;
        e >>= 1;
    }
    acc
}

/// Serialises as `num/den`, always with an explicit denominator.
pub fn fmt_q(x: &Q) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

pub fn fmt_q_list(xs: &[Q]) -> String {
    xs.iter().map(fmt_q).collect::<Vec<_>>().join(",")
}

/// Parses `n`, `-n` or `n/d`.
pub fn parse_q(s: &str) -> Option<Q> {
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().ok()?;
            let d: BigInt = d.trim().parse().ok()?;
            if d.is_zero() {
                None
            } else {
                Some(Q::new(n, d))
            }
        }
        None => s.parse::<BigInt>().ok().map(Q::from_integer),
    }
}

pub fn lcm_of_denominators<'a>(xs: impl IntoIterator<Item = &'a Q>) -> BigInt {
    xs.into_iter()
        .fold(BigInt::one(), |acc, x| acc.lcm(x.denom()))
}

/// Membership of `value` in the additive subgroup `Z + Z g_1 + ... + Z g_k` of `Q`.
///
/// The subgroup generated by finitely many rationals is `(G/L) Z`, where `L`
/// is the lcm of the denominators and `G` the gcd of the scaled numerators.
pub fn in_lattice(value: &Q, generators: &[Q]) -> bool {
    let all: Vec<Q> = std::iter::once(Q::one()).chain(generators.iter().cloned()).collect();
    let l = lcm_of_denominators(all.iter().chain(std::iter::once(value)));
    let g = all
        .iter()
        .map(|x| (x * Q::from_integer(l.clone())).to_integer())
        .fold(BigInt::zero(), |acc, n| acc.gcd(&n));
    let scaled = (value * Q::from_integer(l)).to_integer();
    if g.is_zero() {
        return scaled.is_zero();
    }
    (scaled % g).is_zero()
}

pub fn factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

pub fn q_min<'a>(a: &'a Q, b: &'a Q) -> &'a Q {
    if a <= b {
        a
    } else {
        b
    }
}

pub fn q_max<'a>(a: &'a Q, b: &'a Q) -> &'a Q {
    if a >= b {
        a
    } else {
        b
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn valuations() {
        assert_eq!(vp(&q(18, 5), 3), Some(2));
        assert_eq!(vp(&q(5, 9), 3), Some(-2));
        assert_eq!(vp(&qi(0), 3), None);
    }

    #[test]
    fn lattice_membership() {
        // 1/6 is not in Z + (1/3)Z + (2/3)Z
        assert!(!in_lattice(&q(1, 6), &[q(1, 3), q(2, 3)]));
        assert!(in_lattice(&q(4, 3), &[q(1, 3), q(2, 3)]));
        assert!(in_lattice(&qi(7), &[]));
        assert!(!in_lattice(&q(1, 2), &[]));
    }

    #[test]
    fn residues() {
        assert_eq!(residue_mod_p(&q(1, 2), 5).unwrap(), 3);
        assert_eq!(residue_mod_p(&qi(-1), 7).unwrap(), 6);
        assert!(residue_mod_p(&q(1, 5), 5).is_err());
    }

    #[test]
    fn format_and_parse() {
        assert_eq!(fmt_q(&qi(5)), "5/1");
        assert_eq!(parse_q("-3/6"), Some(q(-1, 2)));
        assert_eq!(parse_q("4"), Some(qi(4)));
        assert_eq!(parse_q("1/0"), None);
    }
}
