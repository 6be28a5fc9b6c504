//! Elements of the Laurent fraction field, kept as unreduced quotients.

use std::fmt;

use crate::error::{Error, Result};
use crate::germ::Germ;
use crate::laurent::{LaurentElement, WeightVector};
use crate::padic::{PadicScalar, Valuation};
use crate::piecewise::PiecewiseAffine;

/// `num / den` with `den != 0`. Monomial denominators are absorbed into `num`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Frac {
    num: LaurentElement,
    den: LaurentElement,
}

impl Frac {
    pub fn new(num: LaurentElement, den: LaurentElement) -> Result<Self> {
        num.check_compatible(&den)?;
        if den.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(Self::normalized(num, den))
    }

    fn normalized(num: LaurentElement, den: LaurentElement) -> Self {
        let (p, n) = (den.prime(), den.nvars());
        if num.is_zero() {
            return Frac { num, den: LaurentElement::one(p, n) };
        }
        if let Some(q) = num.try_exact_div(&den) {
            return Frac { num: q, den: LaurentElement::one(p, n) };
        }
        let lead = den.lead().map(|(_, c)| c.clone()).expect("nonzero denominator");
        let inv = lead.inv().expect("nonzero lead");
        Frac { num: num.scale(&inv), den: den.scale(&inv) }
    }

    pub fn from_laurent(f: LaurentElement) -> Self {
        let den = LaurentElement::one(f.prime(), f.nvars());
        Frac { num: f, den }
    }

    pub fn zero(p: u32, nvars: usize) -> Self {
        Self::from_laurent(LaurentElement::zero(p, nvars))
    }

    pub fn one(p: u32, nvars: usize) -> Self {
        Self::from_laurent(LaurentElement::one(p, nvars))
    }

    pub fn scalar(nvars: usize, c: PadicScalar) -> Self {
        Self::from_laurent(LaurentElement::constant(nvars, c))
    }

    pub fn num(&self) -> &LaurentElement {
        &self.num
    }

    pub fn den(&self) -> &LaurentElement {
        &self.den
    }

    pub fn prime(&self) -> u32 {
        self.num.prime()
    }

    pub fn nvars(&self) -> usize {
        self.num.nvars()
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn as_laurent(&self) -> Option<&LaurentElement> {
        self.den.as_constant().filter(|c| *c == &PadicScalar::one(self.prime())).map(|_| &self.num)
    }

    pub fn add(&self, other: &Self) -> Self {
        if self.den == other.den {
            return Self::normalized(&self.num + &other.num, self.den.clone());
        }
        Self::normalized(&(&self.num * &other.den) + &(&other.num * &self.den), &self.den * &other.den)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        Frac { num: -&self.num, den: self.den.clone() }
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero(self.prime(), self.nvars());
        }
        Self::normalized(&self.num * &other.num, &self.den * &other.den)
    }

    pub fn scale(&self, c: &PadicScalar) -> Self {
        Frac { num: self.num.scale(c), den: self.den.clone() }
    }

    pub fn inv(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(Self::normalized(self.den.clone(), self.num.clone()))
    }

    pub fn div(&self, other: &Self) -> Result<Self> {
        Ok(self.mul(&other.inv()?))
    }

    pub fn derive(&self, i: usize) -> Result<Self> {
        let dn = self.num.derive(i)?;
        let dd = self.den.derive(i)?;
        if dd.is_zero() {
            return Ok(Self::normalized(dn, self.den.clone()));
        }
        Ok(Self::normalized(&(&dn * &self.den) - &(&self.num * &dd), &self.den * &self.den))
    }

    pub fn gauss_valuation(&self, r: &WeightVector) -> Valuation {
        match (self.num.gauss_valuation(r), self.den.gauss_valuation(r)) {
            (Valuation::Finite(a), Valuation::Finite(b)) => Valuation::Finite(a - b),
            _ => Valuation::Infinite,
        }
    }

    pub fn valuation_line(&self, r: &WeightVector) -> Result<PiecewiseAffine> {
        Ok(self.num.valuation_line(r)?.difference(&self.den.valuation_line(r)?))
    }

    pub fn valuation_germ(&self, r: &WeightVector) -> Option<Germ> {
        Some(&self.num.valuation_germ(r)? - &self.den.valuation_germ(r)?)
    }

    pub fn monomial_substitution(&self, columns: &[Vec<i64>]) -> Result<Self> {
        Frac::new(self.num.monomial_substitution(columns)?, self.den.monomial_substitution(columns)?)
    }

    pub fn permute(&self, sigma: &[usize]) -> Result<Self> {
        Frac::new(self.num.permute(sigma)?, self.den.permute(sigma)?)
    }

    pub fn display_with(&self, names: &[String]) -> String {
        if self.as_laurent().is_some() {
            self.num.display_with(names)
        } else {
            format!("({})/({})", self.num.display_with(names), self.den.display_with(names))
        }
    }
}

impl fmt::Display for Frac {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.display_with(&LaurentElement::default_names(self.nvars())))
    }
}
