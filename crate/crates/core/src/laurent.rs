//! Laurent polynomials over `K` with formal partial derivations.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::germ::Germ;
use crate::padic::{PadicScalar, Valuation};
use crate::piecewise::PiecewiseAffine;
use crate::rational::{fmt_q, qi, Q};

/// Exponent vector `J` of a monomial `t^J`.
pub type Exponent = Vec<i64>;

/// Log-radii `r_i = -log R_i` of a monomial Gauss point.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct WeightVector(#[serde(serialize_with = "ser_q_vec")] Vec<Q>);

fn ser_q_vec<S: serde::Serializer>(xs: &[Q], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(xs.len()))?;
    for x in xs {
        seq.serialize_element(&fmt_q(x))?;
    }
    seq.end()
}

impl WeightVector {
    pub fn new(r: Vec<Q>) -> Self {
        WeightVector(r)
    }

    /// Entries must be nonnegative and not all zero.
    pub fn checked(r: Vec<Q>) -> Result<Self> {
        if r.is_empty() || r.iter().any(Signed::is_negative) || r.iter().all(Zero::is_zero) {
            return Err(Error::InvalidWeights(crate::rational::fmt_q_list(&r)));
        }
        Ok(WeightVector(r))
    }

    pub fn from_ints(r: &[i64]) -> Self {
        WeightVector(r.iter().map(|&x| qi(x)).collect())
    }

    pub fn as_slice(&self) -> &[Q] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn dot(&self, j: &[i64]) -> Q {
        self.0.iter().zip(j).fold(Q::zero(), |acc, (r, &e)| acc + r * qi(e))
    }

    pub fn total(&self) -> Q {
        self.0.iter().fold(Q::zero(), |acc, r| acc + r)
    }

    pub fn scaled(&self, c: &Q) -> Self {
        WeightVector(self.0.iter().map(|r| r * c).collect())
    }

    pub fn is_simplex(&self) -> bool {
        !self.0.iter().any(Signed::is_negative) && self.total() == Q::one()
    }

    pub fn permuted(&self, sigma: &[usize]) -> Self {
        let mut out = vec![Q::zero(); self.0.len()];
        for (i, &s) in sigma.iter().enumerate() {
            out[s] = self.0[i].clone();
        }
        WeightVector(out)
    }
}

impl fmt::Display for WeightVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::rational::fmt_q_list(&self.0))
    }
}

/// Finite sum of `c_J t^J`; no zero coefficients are stored.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LaurentElement {
    prime: u32,
    nvars: usize,
    terms: BTreeMap<Exponent, PadicScalar>,
}

impl LaurentElement {
    pub fn zero(p: u32, nvars: usize) -> Self {
        LaurentElement { prime: p, nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: PadicScalar) -> Self {
        Self::monomial(c, vec![0; nvars])
    }

    pub fn one(p: u32, nvars: usize) -> Self {
        Self::constant(nvars, PadicScalar::one(p))
    }

    pub fn monomial(c: PadicScalar, j: Exponent) -> Self {
        let mut out = Self::zero(c.prime(), j.len());
        if !c.is_zero() {
            out.terms.insert(j, c);
        }
        out
    }

    /// `t_i` (0-based axis).
    pub fn var(p: u32, nvars: usize, i: usize) -> Self {
        let mut j = vec![0; nvars];
        j[i] = 1;
        Self::monomial(PadicScalar::one(p), j)
    }

    /// Monomial with rational coefficient.
    pub fn term(p: u32, c: Q, j: Exponent) -> Self {
        Self::monomial(PadicScalar::from_q(p, c), j)
    }

    pub fn from_terms(p: u32, nvars: usize, terms: impl IntoIterator<Item = (Exponent, PadicScalar)>) -> Result<Self> {
        let mut out = Self::zero(p, nvars);
        for (j, c) in terms {
            if j.len() != nvars {
                return Err(Error::ArityMismatch(nvars, j.len()));
            }
            c.check_same(&PadicScalar::zero(p))?;
            out.add_term(j, &c);
        }
        Ok(out)
    }

    fn add_term(&mut self, j: Exponent, c: &PadicScalar) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&j) {
            Some(existing) => {
                *existing += c;
                if existing.is_zero() {
                    self.terms.remove(&j);
                }
            }
            None => {
                self.terms.insert(j, c.clone());
            }
        }
    }

    pub fn prime(&self) -> u32 {
        self.prime
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> &BTreeMap<Exponent, PadicScalar> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, j: &[i64]) -> Option<&PadicScalar> {
        self.terms.get(j)
    }

    pub fn as_monomial(&self) -> Option<(&Exponent, &PadicScalar)> {
        if self.terms.len() == 1 {
            self.terms.iter().next()
        } else {
            None
        }
    }

    pub fn as_constant(&self) -> Option<&PadicScalar> {
        self.as_monomial().filter(|(j, _)| j.iter().all(|&e| e == 0)).map(|(_, c)| c)
    }

    /// Lex-largest exponent with its coefficient.
    pub fn lead(&self) -> Option<(&Exponent, &PadicScalar)> {
        self.terms.iter().next_back()
    }

    pub fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.prime != other.prime {
            return Err(Error::PrimeMismatch(self.prime, other.prime));
        }
        if self.nvars != other.nvars {
            return Err(Error::ArityMismatch(self.nvars, other.nvars));
        }
        Ok(())
    }

    pub fn scale(&self, c: &PadicScalar) -> Self {
        let mut out = Self::zero(self.prime, self.nvars);
        if c.is_zero() {
            return out;
        }
        for (j, a) in &self.terms {
            out.terms.insert(j.clone(), a * c);
        }
        out
    }

    pub fn scale_q(&self, c: &Q) -> Self {
        self.scale(&PadicScalar::from_q(self.prime, c.clone()))
    }

    /// Multiplies by the monomial `t^shift`.
    pub fn shift(&self, shift: &[i64]) -> Self {
        self.map_exponents(self.nvars, |j| j.iter().zip(shift).map(|(a, b)| a + b).collect())
    }

    /// Formal partial derivative along axis `i` (0-based).
    pub fn derive(&self, i: usize) -> Result<Self> {
        if i >= self.nvars {
            return Err(Error::AxisOutOfRange { axis: i, nvars: self.nvars });
        }
        let mut out = Self::zero(self.prime, self.nvars);
        for (j, c) in &self.terms {
            if j[i] != 0 {
                let mut k = j.clone();
                k[i] -= 1;
                out.terms.insert(k, c.scale(&qi(j[i])));
            }
        }
        Ok(out)
    }

    /// `min_J (v(c_J) + <r, J>)`.
    pub fn gauss_valuation(&self, r: &WeightVector) -> Valuation {
        self.terms
            .iter()
            .filter_map(|(j, c)| c.valuation().finite().map(|v| v + r.dot(j)))
            .min()
            .map_or(Valuation::Infinite, Valuation::Finite)
    }

    /// Lines `(v(c_J), <r, J>)` whose lower envelope is `c -> v_{c r}(f)`.
    fn lines(&self, r: &WeightVector) -> Vec<(Q, Q)> {
        self.terms
            .iter()
            .map(|(j, c)| (c.valuation().finite().cloned().expect("stored coefficients are nonzero"), r.dot(j)))
            .collect()
    }

    /// Exact `c -> v_{c r}(f)` on `c >= 0`.
    pub fn valuation_line(&self, r: &WeightVector) -> Result<PiecewiseAffine> {
        PiecewiseAffine::lower_envelope(&self.lines(r))
    }

    /// `v_{c r}(f)` as `c -> 0+`; `None` for zero.
    pub fn valuation_germ(&self, r: &WeightVector) -> Option<Germ> {
        self.lines(r).into_iter().map(|(a, b)| Germ::new(a, b)).min()
    }

    /// Applies a map on exponents; colliding images are summed.
    pub fn map_exponents(&self, nvars: usize, f: impl Fn(&[i64]) -> Exponent) -> Self {
        let mut out = Self::zero(self.prime, nvars);
        for (j, c) in &self.terms {
            out.add_term(f(j), c);
        }
        out
    }

    /// Monomial substitution `t_i -> t^{columns[i]}`.
    pub fn monomial_substitution(&self, columns: &[Exponent]) -> Result<Self> {
        if columns.len() != self.nvars {
            return Err(Error::ArityMismatch(self.nvars, columns.len()));
        }
        let m = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|col| col.len() != m) {
            return Err(Error::Unsupported("ragged monomial substitution".into()));
        }
        Ok(self.map_exponents(m, |j| {
            (0..m).map(|k| j.iter().zip(columns).map(|(e, col)| e * col[k]).sum()).collect()
        }))
    }

    /// Renames variable `i` to `sigma[i]`.
    pub fn permute(&self, sigma: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.nvars];
        if sigma.len() != self.nvars || sigma.iter().any(|&s| s >= self.nvars || std::mem::replace(&mut seen[s], true)) {
            return Err(Error::Unsupported("not a permutation".into()));
        }
        Ok(self.map_exponents(self.nvars, |j| {
            let mut out = vec![0; j.len()];
            for (i, &s) in sigma.iter().enumerate() {
                out[s] = j[i];
            }
            out
        }))
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = Self::one(self.prime, self.nvars);
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    /// Substitutes `g` for variable `i`. Negative powers of `t_i` need `g` a monomial.
    pub fn substitute(&self, i: usize, g: &Self) -> Result<Self> {
        self.check_compatible(g)?;
        if i >= self.nvars {
            return Err(Error::AxisOutOfRange { axis: i, nvars: self.nvars });
        }
        let inverse = match g.as_monomial() {
            Some((j, c)) => Some(Self::monomial(c.inv()?, j.iter().map(|e| -e).collect())),
            None => None,
        };
        let mut out = Self::zero(self.prime, self.nvars);
        for (j, c) in &self.terms {
            let e = j[i];
            let mut rest = j.clone();
            rest[i] = 0;
            let factor = if e >= 0 {
                g.pow(e as u32)
            } else {
                inverse
                    .as_ref()
                    .ok_or_else(|| Error::Unsupported("negative power of a non-monomial substitution".into()))?
                    .pow((-e) as u32)
            };
            out = &out + &(&factor * &Self::monomial(c.clone(), rest));
        }
        Ok(out)
    }

    /// Exact quotient `self / d` if `d` divides `self` in the Laurent ring.
    pub fn try_exact_div(&self, d: &Self) -> Option<Self> {
        if d.is_zero() || self.check_compatible(d).is_err() {
            return None;
        }
        if let Some((j, c)) = d.as_monomial() {
            let inv = c.inv().ok()?;
            return Some(self.shift(&j.iter().map(|e| -e).collect::<Vec<_>>()).scale(&inv));
        }
        // lex division; the quotient's support stays inside the dividend's box
        let (dj, dc) = d.lead().map(|(j, c)| (j.clone(), c.clone()))?;
        let dinv = dc.inv().ok()?;
        let mut rem = self.clone();
        let mut quot = Self::zero(self.prime, self.nvars);
        let limit = 4 * (self.len() + 1) * (d.len() + 1) + 64;
        for _ in 0..limit {
            let Some((rj, rc)) = rem.lead().map(|(j, c)| (j.clone(), c.clone())) else {
                return Some(quot);
            };
            let qj: Exponent = rj.iter().zip(&dj).map(|(a, b)| a - b).collect();
            let term = Self::monomial(&rc * &dinv, qj);
            rem = &rem - &(&term * d);
            quot = &quot + &term;
        }
        None
    }

    /// Writes terms as `c * x^a * y^b`, splitting coefficients into `pi` components.
    pub fn display_with(&self, names: &[String]) -> String {
        if self.terms.is_empty() {
            return "0/1".to_string();
        }
        let mut parts = Vec::new();
        for (j, c) in &self.terms {
            let vars: String = j
                .iter()
                .zip(names)
                .filter(|(e, _)| **e != 0)
                .map(|(e, n)| format!(" * {n}^{e}"))
                .collect();
            for (m, cm) in c.coeffs().iter().enumerate() {
                if cm.is_zero() {
                    continue;
                }
                let scalar = if m == 0 { fmt_q(cm) } else { format!("{}*pi^{m}", fmt_q(cm)) };
                parts.push(format!("{scalar}{vars}"));
            }
        }
        parts.join(" + ")
    }

    pub fn default_names(nvars: usize) -> Vec<String> {
        (1..=nvars).map(|i| format!("t{i}")).collect()
    }
}

impl fmt::Display for LaurentElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.display_with(&Self::default_names(self.nvars)))
    }
}

impl<'a> Add<&'a LaurentElement> for &'a LaurentElement {
    type Output = LaurentElement;
    fn add(self, rhs: &LaurentElement) -> LaurentElement {
        assert!(self.check_compatible(rhs).is_ok(), "incompatible Laurent operands");
        let mut out = self.clone();
        for (j, c) in &rhs.terms {
            out.add_term(j.clone(), c);
        }
        out
    }
}

impl<'a> Sub<&'a LaurentElement> for &'a LaurentElement {
    type Output = LaurentElement;
    fn sub(self, rhs: &LaurentElement) -> LaurentElement {
        self + &(-rhs)
    }
}

impl<'a> Mul<&'a LaurentElement> for &'a LaurentElement {
    type Output = LaurentElement;
    fn mul(self, rhs: &LaurentElement) -> LaurentElement {
        assert!(self.check_compatible(rhs).is_ok(), "incompatible Laurent operands");
        let mut out = LaurentElement::zero(self.prime, self.nvars);
        for (ja, ca) in &self.terms {
            for (jb, cb) in &rhs.terms {
                let j: Exponent = ja.iter().zip(jb).map(|(a, b)| a + b).collect();
                out.add_term(j, &(ca * cb));
            }
        }
        out
    }
}

impl Neg for &LaurentElement {
    type Output = LaurentElement;
    fn neg(self) -> LaurentElement {
        self.scale(&PadicScalar::from_int(self.prime, -1))
    }
}

impl Add for LaurentElement {
    type Output = LaurentElement;
    fn add(self, rhs: LaurentElement) -> LaurentElement {
        &self + &rhs
    }
}

impl Sub for LaurentElement {
    type Output = LaurentElement;
    fn sub(self, rhs: LaurentElement) -> LaurentElement {
        &self - &rhs
    }
}

impl Mul for LaurentElement {
    type Output = LaurentElement;
    fn mul(self, rhs: LaurentElement) -> LaurentElement {
        &self * &rhs
    }
}

impl Neg for LaurentElement {
    type Output = LaurentElement;
    fn neg(self) -> LaurentElement {
        -&self
    }
}

/// Shorthand for a monomial with unit rational coefficient.
pub fn mono(p: u32, j: &[i64]) -> LaurentElement {
    LaurentElement::term(p, Q::one(), j.to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;
    use proptest::prelude::*;

    fn fin(x: Q) -> Valuation {
        Valuation::Finite(x)
    }

    #[test]
    fn gauss_valuation_examples() {
        let f = mono(3, &[1, -1]);
        assert_eq!(f.gauss_valuation(&WeightVector::new(vec![q(1, 2), q(1, 3)])), fin(q(1, 6)));
        let g = &LaurentElement::term(3, qi(3), vec![0, 0]) + &mono(3, &[1, 0]);
        assert_eq!(g.gauss_valuation(&WeightVector::new(vec![q(1, 2), q(1, 2)])), fin(q(1, 2)));
        let h = LaurentElement::monomial(PadicScalar::pi(3), vec![2]);
        assert_eq!(h.gauss_valuation(&WeightVector::new(vec![q(1, 4)])), fin(qi(1)));
        assert_eq!(LaurentElement::zero(3, 1).gauss_valuation(&WeightVector::from_ints(&[1])), Valuation::Infinite);
    }

    #[test]
    fn derive_examples() {
        let f = mono(5, &[2, 1]);
        assert_eq!(f.derive(0).unwrap(), LaurentElement::term(5, qi(2), vec![1, 1]));
        assert!(mono(5, &[1, 0]).derive(1).unwrap().is_zero());
        let g = mono(5, &[1, -5]);
        let d = g.derive(1).unwrap();
        assert_eq!(d, LaurentElement::term(5, qi(-5), vec![1, -6]));
        assert_eq!(d.coefficient(&[1, -6]).unwrap().valuation(), fin(qi(1)));
        assert!(g.derive(2).is_err());
    }

    #[test]
    fn valuation_line_examples() {
        let f = &mono(3, &[-1]) + &LaurentElement::term(3, qi(3), vec![-3]);
        let line = f.valuation_line(&WeightVector::from_ints(&[1])).unwrap();
        assert_eq!(line.breakpoints(), vec![q(1, 2)]);
        assert_eq!(line.pieces()[0].slope, qi(-1));
        assert_eq!(line.pieces()[1].slope, qi(-3));
        let t = mono(3, &[1]);
        assert_eq!(t.valuation_line(&WeightVector::from_ints(&[1])).unwrap().pieces().len(), 1);
        let one_t = &LaurentElement::one(3, 1) + &t;
        assert_eq!(one_t.valuation_line(&WeightVector::from_ints(&[1])).unwrap().germ().slope, qi(0));
        assert!(LaurentElement::zero(3, 1).valuation_line(&WeightVector::from_ints(&[1])).is_err());
    }

    #[test]
    fn exact_division() {
        let x = mono(5, &[1, 0]);
        let y = mono(5, &[0, 1]);
        let a = &x + &y;
        let b = &(&x - &y) + &LaurentElement::one(5, 2);
        let prod = &a * &b;
        assert_eq!(prod.try_exact_div(&a).unwrap(), b);
        assert!(a.try_exact_div(&b).is_none());
    }

    #[test]
    fn substitution() {
        // x^-1 with x -> 2x stays a monomial
        let f = mono(5, &[-1, 0]);
        let g = f.substitute(0, &LaurentElement::term(5, qi(2), vec![1, 0])).unwrap();
        assert_eq!(g, LaurentElement::term(5, q(1, 2), vec![-1, 0]));
        let h = mono(5, &[2, 0]).substitute(0, &(&mono(5, &[1, 0]) + &LaurentElement::one(5, 2))).unwrap();
        assert_eq!(h.len(), 3);
        assert!(f.substitute(0, &(&mono(5, &[1, 0]) + &LaurentElement::one(5, 2))).is_err());
    }

    #[test]
    fn display_splits_pi() {
        let c = PadicScalar::from_coeffs(3, vec![qi(1), qi(2)]).unwrap();
        let f = LaurentElement::monomial(c, vec![1, -3]);
        let names = vec!["x".to_string(), "t".to_string()];
        assert_eq!(f.display_with(&names), "1/1 * x^1 * t^-3 + 2/1*pi^1 * x^1 * t^-3");
    }

    fn laurent(p: u32, n: usize) -> impl Strategy<Value = LaurentElement> {
        prop::collection::vec((prop::collection::vec(-3i64..4, n), -6i64..7, 0usize..2), 1..4).prop_map(move |ts| {
            let mut f = LaurentElement::zero(p, n);
            for (j, c, m) in ts {
                let s = &PadicScalar::from_int(p, c) * &PadicScalar::pi(p).pow(m as u32);
                f = &f + &LaurentElement::monomial(s, j);
            }
            f
        })
    }

    fn weights(n: usize) -> impl Strategy<Value = WeightVector> {
        prop::collection::vec((0i64..9, 1i64..5), n).prop_map(|v| WeightVector::new(v.into_iter().map(|(a, b)| q(a, b)).collect()))
    }

    proptest! {
        #[test]
        fn gauss_valuation_multiplicative(f in laurent(3, 2), g in laurent(3, 2), r in weights(2)) {
            prop_assume!(!f.is_zero() && !g.is_zero());
            prop_assert_eq!((&f * &g).gauss_valuation(&r), f.gauss_valuation(&r).add(&g.gauss_valuation(&r)));
        }

        #[test]
        fn log_convexity(f in laurent(5, 2), a in weights(2), b in weights(2), k in 0i64..=6) {
            prop_assume!(!f.is_zero());
            let c = q(k, 6);
            let one_minus = Q::one() - &c;
            let mix = WeightVector::new(a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| x * &c + y * &one_minus).collect());
            let lhs = f.gauss_valuation(&mix);
            let va = f.gauss_valuation(&a).finite().cloned().unwrap();
            let vb = f.gauss_valuation(&b).finite().cloned().unwrap();
            prop_assert!(lhs >= Valuation::Finite(va * &c + vb * one_minus));
        }

        #[test]
        fn line_matches_pointwise(f in laurent(3, 2), r in weights(2), k in 1i64..20) {
            prop_assume!(!f.is_zero());
            let c = q(k, 4);
            let line = f.valuation_line(&r).unwrap();
            prop_assert_eq!(Valuation::Finite(line.eval(&c)), f.gauss_valuation(&r.scaled(&c)));
        }

        #[test]
        fn ring_axioms(f in laurent(3, 2), g in laurent(3, 2), h in laurent(3, 2)) {
            prop_assert_eq!(&(&f * &g) * &h, &f * &(&g * &h));
            prop_assert_eq!(&f * &(&g + &h), &(&f * &g) + &(&f * &h));
            prop_assert!((&f - &f).is_zero());
        }

        #[test]
        fn leibniz(f in laurent(5, 2), g in laurent(5, 2)) {
            let lhs = (&f * &g).derive(0).unwrap();
            let rhs = &(&f.derive(0).unwrap() * &g) + &(&f * &g.derive(0).unwrap());
            prop_assert_eq!(lhs, rhs);
        }
    }
}
