//! Variation of breaks along a boundary divisor of a toric surface.
//!
//! The ambient is `P^1 x P^1` or `P^2` with torus coordinates `(x, t)`.
//! Every boundary component `Z` is a torus-invariant curve; near each of its
//! two torus-fixed points it has a chart with coordinates `(xi, tau)`, where
//! `tau` cuts out `Z` and `xi` cuts out the neighbouring component. A torus
//! monomial `m` becomes `xi^<m, rho_other> * tau^<m, rho_Z>`.
//!
//! Leaves are rank-one Dwork modules. All point computations happen on the
//! residue `f mod p`, after replacing fully `p`-divisible dominant monomials
//! `c m^p` by `c m`; every local answer is cross-checked against the
//! Newton-polygon engine on the lifted local polynomial.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::{Signed, Zero};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::laurent::{LaurentElement, WeightVector};
use crate::nabla::{Block, NablaModule, PreparedModule};
use crate::padic::PadicScalar;
use crate::rational::{fmt_q, inv_mod, pow_mod, q, qi, vp, Q};
use crate::variation::{break_multiset, Normalization};

/// Seed of the generic sample point.
pub const GENERIC_SEED: u64 = 0x5eed_2b1d;

/// Largest expansion window tried before giving up on a point.
const MAX_WINDOW: i64 = 4096;

type Exp = (i64, i64);

fn ser_q<S: serde::Serializer>(x: &Q, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&fmt_q(x))
}

fn ser_opt_q<S: serde::Serializer>(x: &Option<Q>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match x {
        Some(v) => s.serialize_some(&fmt_q(v)),
        None => s.serialize_none(),
    }
}

// ---- residue polynomials ----

/// A Laurent polynomial in two variables over `F_p`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResiduePoly {
    p: u64,
    terms: BTreeMap<Exp, u64>,
}

impl ResiduePoly {
    pub fn zero(p: u64) -> Self {
        ResiduePoly { p, terms: BTreeMap::new() }
    }

    pub fn one(p: u64) -> Self {
        Self::monomial(p, (0, 0), 1)
    }

    pub fn monomial(p: u64, e: Exp, c: u64) -> Self {
        let mut out = Self::zero(p);
        out.add_term(e, c);
        out
    }

    /// Residue of an integral two-variable Laurent polynomial.
    pub fn from_laurent(f: &LaurentElement) -> Result<Self> {
        if f.nvars() != 2 {
            return Err(Error::ArityMismatch(2, f.nvars()));
        }
        let mut out = Self::zero(f.prime() as u64);
        for (j, c) in f.terms() {
            out.add_term((j[0], j[1]), c.residue()?);
        }
        Ok(out)
    }

    pub fn prime(&self) -> u64 {
        self.p
    }

    pub fn terms(&self) -> &BTreeMap<Exp, u64> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, e: Exp, c: u64) {
        let c = c % self.p;
        if c == 0 {
            return;
        }
        let v = (self.terms.get(&e).copied().unwrap_or(0) + c) % self.p;
        if v == 0 {
            self.terms.remove(&e);
        } else {
            self.terms.insert(e, v);
        }
    }

    pub fn scale(&self, c: u64) -> Self {
        let mut out = Self::zero(self.p);
        for (&e, &v) in &self.terms {
            out.add_term(e, v * (c % self.p));
        }
        out
    }

    pub fn shift(&self, by: Exp) -> Self {
        self.map_exponents(|(a, j)| (a + by.0, j + by.1))
    }

    pub fn map_exponents(&self, f: impl Fn(Exp) -> Exp) -> Self {
        let mut out = Self::zero(self.p);
        for (&e, &v) in &self.terms {
            out.add_term(f(e), v);
        }
        out
    }

    fn add(&mut self, other: &Self) {
        for (&e, &v) in &other.terms {
            self.add_term(e, v);
        }
    }

    /// Product keeping `j <= j_max` and `a <= a_max`; returns the least `j`
    /// among terms dropped for exceeding `a_max`.
    fn mul_window(&self, other: &Self, j_max: i64, a_max: i64) -> (Self, Option<i64>) {
        let mut out = Self::zero(self.p);
        let mut dropped: Option<i64> = None;
        for (&(a1, j1), &c1) in &self.terms {
            for (&(a2, j2), &c2) in &other.terms {
                let (a, j) = (a1 + a2, j1 + j2);
                if j > j_max {
                    continue;
                }
                if a > a_max {
                    dropped = Some(dropped.map_or(j, |d| d.min(j)));
                    continue;
                }
                out.add_term((a, j), c1 * c2);
            }
        }
        (out, dropped)
    }

    /// Integer lift with coefficients in `[1, p)`, or `None` for zero.
    pub fn lift(&self) -> Result<Option<LaurentElement>> {
        if self.is_zero() {
            return Ok(None);
        }
        let p = self.p as u32;
        let terms = self.terms.iter().map(|(&(a, j), &c)| (vec![a, j], PadicScalar::from_int(p, c as i64)));
        Ok(Some(LaurentElement::from_terms(p, 2, terms)?))
    }

    pub fn display_with(&self, names: &[&str; 2]) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(&(a, j), &c)| {
                let mut s = c.to_string();
                for (e, n) in [(a, names[0]), (j, names[1])] {
                    if e != 0 {
                        s.push_str(&format!("*{n}^{e}"));
                    }
                }
                s
            })
            .collect();
        parts.join(" + ")
    }
}

fn pow_signed(z: u64, e: i64, p: u64) -> u64 {
    if e >= 0 {
        pow_mod(z, e as u64, p)
    } else {
        pow_mod(inv_mod(z, p), e.unsigned_abs(), p)
    }
}

fn min_opt(a: Option<i64>, b: Option<i64>) -> Option<i64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, None) => x,
        (None, y) => y,
    }
}

/// Replaces fully `p`-divisible monomials with positive germ by their `p`-th
/// roots, dominant term first, until the dominant term is prime to `p`.
fn as_reduce(f: &mut ResiduePoly) {
    let p = f.p as i64;
    while let Some((&(a, j), &c)) = f.terms.iter().min_by_key(|(&(a, j), _)| (j, a)) {
        let positive = j < 0 || (j == 0 && a < 0);
        if !(positive && a % p == 0 && j % p == 0) {
            break;
        }
        f.terms.remove(&(a, j));
        f.add_term((a / p, j / p), c);
    }
}

/// Reduces the row of lowest `tau`-degree while it is a `p`-th power with a pole.
fn reduce_generic_row(f: &mut ResiduePoly) {
    let p = f.p as i64;
    while let Some(j) = f.terms.keys().map(|e| e.1).min() {
        if j >= 0 || j % p != 0 {
            return;
        }
        let row: Vec<(Exp, u64)> = f.terms.iter().filter(|(e, _)| e.1 == j).map(|(&e, &c)| (e, c)).collect();
        if row.iter().any(|((a, _), _)| a % p != 0) {
            return;
        }
        for ((a, _), c) in row {
            f.terms.remove(&(a, j));
            f.add_term((a / p, j / p), c);
        }
    }
}

/// Roots in `F_p^x` of a Laurent polynomial in one variable, with multiplicity.
/// Errors if not all roots are `F_p`-rational.
fn rational_roots(coeffs: &BTreeMap<i64, u64>, p: u64) -> std::result::Result<Vec<(u64, usize)>, usize> {
    let (lo, hi) = match (coeffs.keys().next(), coeffs.keys().next_back()) {
        (Some(&lo), Some(&hi)) => (lo, hi),
        _ => return Ok(Vec::new()),
    };
    let mut poly: Vec<u64> = (lo..=hi).map(|e| coeffs.get(&e).copied().unwrap_or(0)).collect();
    let degree = poly.len() - 1;
    let mut roots = Vec::new();
    let mut found = 0;
    for z in 1..p {
        let mut mult = 0;
        loop {
            // synthetic division by (X - z), coefficients low to high
            let n = poly.len();
            if n < 2 {
                break;
            }
            let mut quot = vec![0u64; n - 1];
            let mut carry = 0u64;
            for k in (0..n).rev() {
                let v = (poly[k] + carry) % p;
                if k == 0 {
                    carry = v;
                } else {
                    quot[k - 1] = v;
                    carry = v * z % p;
                }
            }
            if carry != 0 {
                break;
            }
            poly = quot;
            mult += 1;
        }
        if mult > 0 {
            roots.push((z, mult));
            found += mult;
        }
    }
    if found == degree {
        Ok(roots)
    } else {
        Err(degree - found)
    }
}

// ---- ambient geometry ----

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Ambient {
    P1xP1,
    P2,
}

impl Ambient {
    /// Boundary rays in cyclic order.
    pub fn rays(self) -> &'static [Exp] {
        match self {
            Ambient::P1xP1 => &[(1, 0), (0, 1), (-1, 0), (0, -1)],
            Ambient::P2 => &[(1, 0), (0, 1), (-1, -1)],
        }
    }

    pub fn num_components(self) -> usize {
        self.rays().len()
    }

    pub fn component_name(self, i: usize, names: &[String; 2]) -> String {
        let (x, t) = (&names[0], &names[1]);
        match (self, i) {
            (Ambient::P1xP1, 0) => format!("{x}=0"),
            (Ambient::P1xP1, 1) => format!("{t}=0"),
            (Ambient::P1xP1, 2) => format!("{x}=inf"),
            (Ambient::P1xP1, _) => format!("{t}=inf"),
            (Ambient::P2, 0) => format!("{x}=0"),
            (Ambient::P2, 1) => format!("{t}=0"),
            (Ambient::P2, _) => "line at infinity".into(),
        }
    }

    pub fn component_by_name(self, s: &str, names: &[String; 2]) -> Option<usize> {
        let key: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        (0..self.num_components()).find(|&i| {
            let n: String = self.component_name(i, names).chars().filter(|c| !c.is_whitespace()).collect();
            n == key || (self == Ambient::P2 && i == 2 && (key == "inf" || key == "L_inf"))
        })
    }

    /// The two components meeting component `z`, in cyclic order.
    pub fn neighbors(self, z: usize) -> [usize; 2] {
        let n = self.num_components();
        [(z + n - 1) % n, (z + 1) % n]
    }

    fn class(self, i: usize) -> Vec<i64> {
        match self {
            Ambient::P1xP1 if i % 2 == 0 => vec![1, 0],
            Ambient::P1xP1 => vec![0, 1],
            Ambient::P2 => vec![1],
        }
    }

    fn pairing(self, a: &[i64], b: &[i64]) -> i64 {
        match self {
            Ambient::P1xP1 => a[0] * b[1] + a[1] * b[0],
            Ambient::P2 => a[0] * b[0],
        }
    }

    fn canonical(self) -> Vec<i64> {
        match self {
            Ambient::P1xP1 => vec![-2, -2],
            Ambient::P2 => vec![-3],
        }
    }

    pub fn self_intersection(self, i: usize) -> i64 {
        let c = self.class(i);
        self.pairing(&c, &c)
    }

    pub fn genus(self, _i: usize) -> i64 {
        0
    }

    pub fn intersection(self, i: usize, j: usize) -> i64 {
        self.pairing(&self.class(i), &self.class(j))
    }
}

impl fmt::Display for Ambient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ambient::P1xP1 => write!(f, "P1xP1"),
            Ambient::P2 => write!(f, "P2"),
        }
    }
}

fn dot(m: Exp, rho: Exp) -> i64 {
    m.0 * rho.0 + m.1 * rho.1
}

/// Chart at the fixed point `Z cap other`: torus exponents to `(xi, tau)` exponents.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Chart {
    pub component: usize,
    pub other: usize,
    rho_z: Exp,
    rho_o: Exp,
}

impl Chart {
    fn new(ambient: Ambient, component: usize, other: usize) -> Self {
        let rays = ambient.rays();
        Chart { component, other, rho_z: rays[component], rho_o: rays[other] }
    }

    pub fn to_local(&self, m: Exp) -> Exp {
        (dot(m, self.rho_o), dot(m, self.rho_z))
    }

    pub fn to_torus(&self, l: Exp) -> Exp {
        // inverse of the unimodular matrix with rows rho_o, rho_z
        let (a, b) = self.rho_o;
        let (c, d) = self.rho_z;
        let det = a * d - b * c;
        ((d * l.0 - b * l.1) * det, (-c * l.0 + a * l.1) * det)
    }

    /// The coordinate `xi` as a torus monomial.
    pub fn xi(&self) -> Exp {
        self.to_torus((1, 0))
    }
}

/// A rank-one leaf of the module, by residue.
#[derive(Clone, Debug)]
struct Leaf {
    f: ResiduePoly,
}

/// Boundary component `Z` of a toric surface with a direct sum of Dwork leaves.
#[derive(Clone, Debug)]
pub struct SurfaceModel {
    pub ambient: Ambient,
    pub prime: u32,
    pub names: [String; 2],
    pub divisor: usize,
    pub boundary: Vec<usize>,
    leaves: Vec<Leaf>,
}

impl SurfaceModel {
    /// The boundary is `Z` together with every component along which some
    /// leaf has a pole.
    pub fn new(ambient: Ambient, module: &NablaModule, divisor: usize, names: [String; 2]) -> Result<Self> {
        if module.nvars() != 2 {
            return Err(Error::ArityMismatch(2, module.nvars()));
        }
        if divisor >= ambient.num_components() {
            return Err(Error::Unsupported(format!("no boundary component {divisor} on {ambient}")));
        }
        let p = module.prime() as u64;
        let mut leaves = Vec::new();
        for block in module.blocks() {
            match block {
                Block::Dwork(f) => leaves.push(Leaf { f: ResiduePoly::from_laurent(&f)? }),
                Block::Explicit(ms) => {
                    if ms.iter().any(|m| m.iter().flatten().any(|x| !x.is_zero())) {
                        return Err(Error::Unsupported(
                            "surface analysis needs a direct sum of Dwork leaves; found a nonzero explicit block".into(),
                        ));
                    }
                    let rank = ms.first().map_or(0, Vec::len);
                    leaves.extend((0..rank).map(|_| Leaf { f: ResiduePoly::zero(p) }));
                }
            }
        }
        let mut model = SurfaceModel { ambient, prime: module.prime(), names, divisor, boundary: Vec::new(), leaves };
        model.reduce_leaves();
        model.check_charts()?;
        let mut boundary: BTreeSet<usize> = BTreeSet::from([divisor]);
        for i in 0..ambient.num_components() {
            let rho = ambient.rays()[i];
            if model.leaves.iter().any(|l| l.f.terms.keys().any(|&m| dot(m, rho) < 0)) {
                boundary.insert(i);
            }
        }
        model.boundary = boundary.into_iter().collect();
        Ok(model)
    }

    /// Same module and boundary, another component as `Z`.
    pub fn with_divisor(&self, divisor: usize) -> Result<Self> {
        if !self.boundary.contains(&divisor) {
            return Err(Error::Unsupported(format!("{} is not a boundary component", self.component_name(divisor))));
        }
        let mut out = self.clone();
        out.divisor = divisor;
        Ok(out)
    }

    /// Replaces the boundary; it must contain `Z` and every polar component.
    pub fn with_boundary(&self, boundary: &[usize]) -> Result<Self> {
        let set: BTreeSet<usize> = boundary.iter().copied().collect();
        if set.iter().any(|&i| i >= self.ambient.num_components()) {
            return Err(Error::Unsupported("boundary must consist of torus-invariant components (SNC)".into()));
        }
        for &i in &self.boundary {
            let polar = i == self.divisor
                || self.leaves.iter().any(|l| l.f.terms.keys().any(|&m| dot(m, self.ambient.rays()[i]) < 0));
            if polar && !set.contains(&i) {
                return Err(Error::Unsupported(format!(
                    "boundary omits {}, where the module is not defined",
                    self.component_name(i)
                )));
            }
        }
        let mut out = self.clone();
        out.boundary = set.into_iter().collect();
        Ok(out)
    }

    pub fn rank(&self) -> usize {
        self.leaves.len()
    }

    pub fn component_name(&self, i: usize) -> String {
        self.ambient.component_name(i, &self.names)
    }

    pub fn charts(&self) -> [Chart; 2] {
        self.charts_of(self.divisor)
    }

    fn charts_of(&self, z: usize) -> [Chart; 2] {
        let [a, b] = self.ambient.neighbors(z);
        [Chart::new(self.ambient, z, a), Chart::new(self.ambient, z, b)]
    }

    /// Leaf residues in torus exponents.
    pub fn leaf_polys(&self) -> Vec<ResiduePoly> {
        self.leaves.iter().map(|l| l.f.clone()).collect()
    }

    fn p(&self) -> u64 {
        self.prime as u64
    }

    /// Removes `p`-th-power pole rows along every component until stable.
    fn reduce_leaves(&mut self) {
        let charts: Vec<Chart> = (0..self.ambient.num_components()).map(|z| self.charts_of(z)[0]).collect();
        for leaf in &mut self.leaves {
            loop {
                let before = leaf.f.clone();
                for ch in &charts {
                    let mut local = leaf.f.map_exponents(|m| ch.to_local(m));
                    reduce_generic_row(&mut local);
                    leaf.f = local.map_exponents(|l| ch.to_torus(l));
                }
                if leaf.f == before {
                    break;
                }
            }
        }
    }

    /// Chart changes must invert each other on every leaf, and the two
    /// charts along each component must glue by `xi -> 1/xi` on it.
    fn check_charts(&self) -> Result<()> {
        for z in 0..self.ambient.num_components() {
            let [a, b] = self.charts_of(z);
            for leaf in &self.leaves {
                let back = leaf.f.map_exponents(|m| a.to_local(m)).map_exponents(|l| a.to_torus(l));
                if back != leaf.f {
                    return Err(Error::Invariant(format!("chart at {} does not invert", self.component_name(a.other))));
                }
            }
            let xi_b_in_a = a.to_local(b.xi());
            if xi_b_in_a != (-1, 0) {
                return Err(Error::Invariant(format!("charts on {} do not glue", self.component_name(z))));
            }
        }
        Ok(())
    }

    fn chart_poly(&self, leaf: usize, chart: &Chart) -> ResiduePoly {
        self.leaves[leaf].f.map_exponents(|m| chart.to_local(m))
    }

    fn chart_module(&self, chart: &Chart) -> Result<NablaModule> {
        let p = self.prime;
        let mut acc: Option<NablaModule> = None;
        for i in 0..self.rank() {
            let m = match self.chart_poly(i, chart).lift()? {
                Some(f) => NablaModule::dwork(f)?,
                None => trivial_module(p)?,
            };
            acc = Some(match acc {
                None => m,
                Some(a) => NablaModule::direct_sum(&a, &m)?,
            });
        }
        acc.ok_or(Error::ZeroInput("module of rank zero"))
    }

    fn monomial_name(&self, m: Exp) -> String {
        let mut parts = Vec::new();
        for (e, n) in [(m.0, &self.names[0]), (m.1, &self.names[1])] {
            match e {
                0 => {}
                1 => parts.push(n.clone()),
                _ => parts.push(format!("{n}^{e}")),
            }
        }
        if parts.is_empty() {
            "1".into()
        } else {
            parts.join("*")
        }
    }
}

fn trivial_module(p: u32) -> Result<NablaModule> {
    NablaModule::explicit(vec![vec![vec![crate::frac::Frac::zero(p, 2)]]; 2])
}

// ---- generic data along a component ----

/// One leaf at the generic point of a component.
#[derive(Clone, Debug, Serialize)]
pub struct GenericLeaf {
    pub leaf: usize,
    #[serde(serialize_with = "ser_q")]
    pub break_value: Q,
    /// `tau` is not among the eventually dominant derivations; ties count as dominant.
    pub xi_dominant: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct GenericReport {
    pub component: String,
    /// Sorted by break, descending.
    pub leaves: Vec<GenericLeaf>,
    #[serde(serialize_with = "ser_q")]
    pub swan: Q,
    pub ell: usize,
    /// `(i, ell_i)` for each jump index `i`.
    pub ell_by_jump: Vec<(usize, usize)>,
}

impl GenericReport {
    pub fn jumps(&self) -> Vec<usize> {
        self.ell_by_jump.iter().map(|(i, _)| *i).collect()
    }
}

fn generic_along(model: &SurfaceModel, z: usize) -> Result<GenericReport> {
    let chart = model.charts_of(z)[0];
    let mut leaves = Vec::with_capacity(model.rank());
    for i in 0..model.rank() {
        let local = model.chart_poly(i, &chart);
        let top = local.terms.keys().map(|e| e.1).min();
        let expected = top.map_or(Q::zero(), |j| qi((-j).max(0)));
        let (engine_break, xi_only) = match local.lift()? {
            None => (Q::zero(), false),
            Some(f) => {
                let prep = PreparedModule::new(&NablaModule::dwork(f)?)?;
                let b = break_multiset(&prep, &WeightVector::from_ints(&[0, 1]), &Normalization::ByVariable(1))?;
                (b.breaks[0].clone(), !b.dominant[0].contains(&1))
            }
        };
        if engine_break != expected {
            return Err(Error::Invariant(format!(
                "generic break of leaf {} along {}: engine {} vs residue {}",
                i + 1,
                model.component_name(z),
                fmt_q(&engine_break),
                fmt_q(&expected)
            )));
        }
        leaves.push(GenericLeaf { leaf: i, break_value: expected, xi_dominant: xi_only });
    }
    leaves.sort_by(|a, b| b.break_value.cmp(&a.break_value).then(a.leaf.cmp(&b.leaf)));
    let swan = leaves.iter().fold(Q::zero(), |acc, l| acc + &l.break_value);
    let d = leaves.len();
    let mut ell_by_jump = Vec::new();
    let mut count = 0;
    for i in 1..=d {
        if leaves[i - 1].xi_dominant {
            count += 1;
        }
        if i == d || leaves[i - 1].break_value > leaves[i].break_value {
            ell_by_jump.push((i, count));
        }
    }
    Ok(GenericReport { component: model.component_name(z), leaves, swan, ell: count, ell_by_jump })
}

/// `ell(E, Z)` and `ell_i(E, Z)` at each jump index.
pub fn ell_invariant(model: &SurfaceModel) -> Result<GenericReport> {
    generic_along(model, model.divisor)
}

// ---- points ----

/// A closed point of `Z` rational over `F_p`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum PointSpec {
    /// Fixed point in chart 0 or 1, where `Z` meets a neighbouring component.
    Crossing(usize),
    /// `xi = z` in chart 0, `z` in `F_p^x`.
    Torus(u64),
}

impl PointSpec {
    /// `"0"`, `"inf"`, or a rational coordinate reduced mod `p`.
    pub fn parse(s: &str, p: u32) -> Result<Self> {
        let s = s.trim();
        if s == "inf" || s == "oo" {
            return Ok(PointSpec::Crossing(1));
        }
        let z = crate::rational::parse_q(s).ok_or_else(|| Error::Unsupported(format!("bad point '{s}'")))?;
        if vp(&z, p).is_some_and(|v| v < 0) {
            return Ok(PointSpec::Crossing(1));
        }
        let r = crate::rational::residue_mod_p(&z, p)?;
        Ok(if r == 0 { PointSpec::Crossing(0) } else { PointSpec::Torus(r) })
    }
}

/// A change of transverse coordinate `xi = lambda * x' + w(x', tau)` with
/// `w` in the ideal `(tau, x'^2)`.
#[derive(Clone, Debug)]
pub struct Reparam {
    pub lambda: u64,
    pub w: ResiduePoly,
}

impl Reparam {
    pub fn identity(p: u64) -> Self {
        Reparam { lambda: 1, w: ResiduePoly::zero(p) }
    }

    pub fn new(lambda: u64, w: ResiduePoly) -> Result<Self> {
        let p = w.p;
        if lambda % p == 0 {
            return Err(Error::Unsupported("reparametrization needs lambda != 0 mod p".into()));
        }
        if w.terms.keys().any(|&(a, j)| a < 0 || j < 0 || (j == 0 && a < 2)) {
            return Err(Error::Unsupported("w must lie in the ideal (t, x^2)".into()));
        }
        Ok(Reparam { lambda: lambda % p, w })
    }

    fn is_identity(&self) -> bool {
        self.lambda == 1 && self.w.is_zero()
    }
}

/// `(z + lambda x' + w)^a` truncated to `j <= budget`, `a <= a_max`.
fn power_expansion(z: u64, rep: &Reparam, a: i64, budget: i64, a_max: i64, p: u64) -> (ResiduePoly, Option<i64>) {
    let (base, shift, u) = if z != 0 {
        let zi = inv_mod(z, p);
        let mut u = rep.w.scale(zi);
        u.add_term((1, 0), rep.lambda * zi % p);
        (pow_signed(z, a, p), 0, u)
    } else {
        let li = inv_mod(rep.lambda, p);
        (pow_signed(rep.lambda, a, p), a, rep.w.scale(li).shift((-1, 0)))
    };
    // later factors lower the x'-degree by at most one per unit of tau-degree
    let cap = a_max - shift + budget;
    let mut dropped = None;
    let one = ResiduePoly::one(p);
    let mut one_plus_u = u.clone();
    one_plus_u.add(&one);
    let factor = if a >= 0 {
        one_plus_u
    } else if u.is_zero() {
        one.clone()
    } else {
        let neg_u = u.scale(p - 1);
        let mut inv = one.clone();
        let mut term = one.clone();
        let steps = (cap + 2 * budget).max(0);
        for _ in 0..steps {
            let (next, d) = term.mul_window(&neg_u, budget, cap);
            dropped = min_opt(dropped, d);
            if next.is_zero() {
                break;
            }
            inv.add(&next);
            term = next;
        }
        inv
    };
    let mut series = one;
    for _ in 0..a.unsigned_abs() {
        let (next, d) = series.mul_window(&factor, budget, cap);
        dropped = min_opt(dropped, d);
        series = next;
    }
    let mut out = ResiduePoly::zero(p);
    for (&(e, j), &c) in &series.terms {
        let e = e + shift;
        if e > a_max {
            dropped = Some(dropped.map_or(j, |d: i64| d.min(j)));
            continue;
        }
        out.add_term((e, j), c * base);
    }
    (out, dropped)
}

/// Local polynomial of `f` at `xi = z` after the coordinate change.
fn expand_at(f: &ResiduePoly, z: u64, rep: &Reparam, a_max: i64, j_hi: i64) -> (ResiduePoly, Option<i64>) {
    if z == 0 && rep.is_identity() {
        return (f.clone(), None);
    }
    let p = f.p;
    let mut out = ResiduePoly::zero(p);
    let mut dropped = None;
    for (&(a, j), &c) in &f.terms {
        let budget = j_hi - j;
        if budget < 0 {
            continue;
        }
        let (s, d) = power_expansion(z, rep, a, budget, a_max, p);
        out.add(&s.shift((0, j)).scale(c));
        dropped = min_opt(dropped, d.map(|dj| dj + j));
    }
    (out, dropped)
}

/// Local affine break `value + slope * r` of one leaf near `r = 0`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LocalBreak {
    pub leaf: usize,
    #[serde(serialize_with = "ser_q")]
    pub intercept: Q,
    #[serde(serialize_with = "ser_q")]
    pub slope: Q,
    /// End of the affine piece, when another term takes over.
    #[serde(serialize_with = "ser_opt_q")]
    pub valid_until: Option<Q>,
}

impl LocalBreak {
    fn eval(&self, r: &Q) -> Q {
        &self.intercept + &self.slope * r
    }
}

fn local_leaf(f: &ResiduePoly, z: u64, rep: &Reparam, leaf: usize) -> Result<(LocalBreak, ResiduePoly)> {
    let p = f.p;
    if f.is_zero() {
        let lb = LocalBreak { leaf, intercept: Q::zero(), slope: Q::zero(), valid_until: None };
        return Ok((lb, f.clone()));
    }
    let j_min = f.terms.keys().map(|e| e.1).min().unwrap_or(0);
    let j_max = f.terms.keys().map(|e| e.1).max().unwrap_or(0);
    let j_hi = j_max.max(j_min + 1) + 4;
    let span = f.terms.keys().map(|e| e.0.abs()).max().unwrap_or(0);
    let mut a_max = (2 * span).max(8);
    let local = loop {
        let (mut loc, dropped) = expand_at(f, z, rep, a_max, j_hi);
        as_reduce(&mut loc);
        let top_j = loc.terms.keys().map(|e| e.1).min().unwrap_or(i64::MAX);
        match dropped {
            Some(dj) if dj < top_j && dj < 1 => {
                a_max *= 2;
                if a_max > MAX_WINDOW {
                    return Err(Error::Unsupported(format!("local expansion at xi = {z} needs a window beyond {MAX_WINDOW}")));
                }
            }
            _ => break loc,
        }
    };
    // chosen line: dominant term if its germ is positive, else zero
    let top = local.terms.keys().min_by_key(|e| (e.1, e.0)).copied();
    let (value, slope) = match top {
        Some((a, j)) if j < 0 || (j == 0 && a < 0) => (qi(-j), qi(-a)),
        _ => (Q::zero(), Q::zero()),
    };
    let mut end: Option<Q> = None;
    let candidates = local.terms.keys().map(|&(a, j)| (qi(-j), qi(-a))).chain(std::iter::once((Q::zero(), Q::zero())));
    for (v, s) in candidates {
        if s > slope {
            let r = (&value - &v) / (&s - &slope);
            if r.is_positive() && end.as_ref().is_none_or(|e| r < *e) {
                end = Some(r);
            }
        }
    }
    let lb = LocalBreak { leaf, intercept: value, slope, valid_until: end };
    let _ = p;
    Ok((lb, local))
}

/// Recomputes the local break with the engine at two radii inside the piece.
fn engine_cross_check(lb: &LocalBreak, local: &ResiduePoly, label: &str) -> Result<()> {
    let Some(f) = local.lift()? else {
        return Ok(());
    };
    let prep = PreparedModule::new(&NablaModule::dwork(f)?)?;
    let r0 = lb.valid_until.clone().map_or(q(1, 2), |e| (e / qi(2)).min(q(1, 2)));
    for r in [r0.clone(), r0 / qi(2)] {
        let w = WeightVector::new(vec![r.clone(), qi(1)]);
        let b = break_multiset(&prep, &w, &Normalization::ByVariable(1))?;
        if b.breaks[0] != lb.eval(&r) {
            return Err(Error::Invariant(format!(
                "local break at {label}, r = {}: engine {} vs residue {}",
                fmt_q(&r),
                fmt_q(&b.breaks[0]),
                fmt_q(&lb.eval(&r))
            )));
        }
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum PointKind {
    Generic,
    Torus,
    Crossing,
}

/// Monotonicity at one jump index: `b'_1 + ... + b'_i + ell_i <= 0`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MonotonicityEntry {
    pub index: usize,
    #[serde(serialize_with = "ser_q")]
    pub slope_sum: Q,
    pub ell: usize,
    #[serde(serialize_with = "ser_q")]
    pub value: Q,
    pub holds: bool,
    pub strict: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct PointReport {
    pub label: String,
    pub kind: PointKind,
    /// Neighbouring component whose chart is used.
    pub chart: String,
    /// Transverse coordinate as a torus monomial, and its value.
    pub coordinate: String,
    pub value: String,
    /// On another boundary component (not a smooth point of the boundary).
    pub on_boundary_crossing: bool,
    /// Sorted by germ, descending.
    pub breaks: Vec<LocalBreak>,
    #[serde(serialize_with = "ser_q")]
    pub swan_intercept: Q,
    /// Right slope of the Swan conductor at `r = 0`.
    #[serde(serialize_with = "ser_q")]
    pub swan_slope: Q,
    #[serde(serialize_with = "ser_opt_q")]
    pub valid_until: Option<Q>,
    /// Empty at boundary crossings, where the statement does not apply.
    pub monotonicity: Vec<MonotonicityEntry>,
    pub exposed: bool,
}

impl PointReport {
    /// `sum_{k <= i} b'_k` in germ order.
    pub fn slope_prefix(&self, i: usize) -> Q {
        self.breaks[..i].iter().fold(Q::zero(), |a, b| a + &b.slope)
    }

    pub fn intercept_prefix(&self, i: usize) -> Q {
        self.breaks[..i].iter().fold(Q::zero(), |a, b| a + &b.intercept)
    }
}

fn point_chart(model: &SurfaceModel, point: &PointSpec) -> Result<(Chart, u64)> {
    let charts = model.charts();
    match *point {
        PointSpec::Crossing(i) if i < 2 => Ok((charts[i], 0)),
        PointSpec::Crossing(i) => Err(Error::Unsupported(format!("chart index {i} out of range"))),
        PointSpec::Torus(z) if z % model.p() != 0 => Ok((charts[0], z % model.p())),
        PointSpec::Torus(_) => Ok((charts[0], 0)),
    }
}

/// Local breaks at `point` in the coordinates `(xi, tau)` of its chart.
pub fn point_breaks(model: &SurfaceModel, point: &PointSpec) -> Result<PointReport> {
    point_breaks_with(model, point, &Reparam::identity(model.p()))
}

/// As `point_breaks`, after the transverse coordinate change `rep`.
pub fn point_breaks_with(model: &SurfaceModel, point: &PointSpec, rep: &Reparam) -> Result<PointReport> {
    let generic = ell_invariant(model)?;
    point_report(model, point, rep, &generic, PointKind::Torus)
}

fn point_report(
    model: &SurfaceModel,
    point: &PointSpec,
    rep: &Reparam,
    generic: &GenericReport,
    torus_kind: PointKind,
) -> Result<PointReport> {
    let (chart, z) = point_chart(model, point)?;
    let kind = if z == 0 { PointKind::Crossing } else { torus_kind };
    let coordinate = model.monomial_name(chart.xi());
    let label = if z == 0 {
        format!("{} cap {}", model.component_name(model.divisor), model.component_name(chart.other))
    } else {
        format!("{coordinate} = {z}")
    };
    let mut breaks = Vec::with_capacity(model.rank());
    let mut valid_until: Option<Q> = None;
    for i in 0..model.rank() {
        let f = model.chart_poly(i, &chart);
        let (lb, local) = local_leaf(&f, z, rep, i)?;
        engine_cross_check(&lb, &local, &label)?;
        if let Some(e) = &lb.valid_until {
            if valid_until.as_ref().is_none_or(|v| e < v) {
                valid_until = Some(e.clone());
            }
        }
        breaks.push(lb);
    }
    breaks.sort_by(|a, b| (&b.intercept, &b.slope, a.leaf).cmp(&(&a.intercept, &a.slope, b.leaf)));
    // b_i(z, 0) are the generic breaks
    let mut at_zero: Vec<Q> = breaks.iter().map(|b| b.intercept.clone()).collect();
    at_zero.sort_by(|a, b| b.cmp(a));
    let generic_breaks: Vec<Q> = generic.leaves.iter().map(|l| l.break_value.clone()).collect();
    if at_zero != generic_breaks {
        return Err(Error::Invariant(format!("local breaks at {label} do not start at the generic breaks")));
    }
    let swan_intercept = breaks.iter().fold(Q::zero(), |a, b| a + &b.intercept);
    let swan_slope = breaks.iter().fold(Q::zero(), |a, b| a + &b.slope);
    let on_boundary_crossing = z == 0 && model.boundary.contains(&chart.other);
    let mut report = PointReport {
        label,
        kind,
        chart: model.component_name(chart.other),
        coordinate,
        value: fmt_q(&qi(z as i64)),
        on_boundary_crossing,
        breaks,
        swan_intercept,
        swan_slope,
        valid_until,
        monotonicity: Vec::new(),
        exposed: false,
    };
    if !on_boundary_crossing {
        report.monotonicity = monotonicity_entries(&report, generic);
        report.exposed = report.monotonicity.iter().any(|m| m.strict);
    }
    Ok(report)
}

fn monotonicity_entries(report: &PointReport, generic: &GenericReport) -> Vec<MonotonicityEntry> {
    generic
        .ell_by_jump
        .iter()
        .map(|&(i, ell)| {
            let slope_sum = report.slope_prefix(i);
            let value = &slope_sum + qi(ell as i64);
            MonotonicityEntry {
                index: i,
                holds: !value.is_positive(),
                strict: value.is_negative(),
                slope_sum,
                ell,
                value,
            }
        })
        .collect()
}

/// Monotonicity entries at a smooth point of the boundary.
pub fn monotonicity_check(model: &SurfaceModel, point: &PointSpec) -> Result<Vec<MonotonicityEntry>> {
    let report = point_breaks(model, point)?;
    if report.on_boundary_crossing {
        return Err(Error::Unsupported(format!("{} is a crossing of boundary components", report.label)));
    }
    Ok(report.monotonicity)
}

/// Torus points of `Z` where some leaf can deviate from the generic slope,
/// together with both fixed points.
pub fn special_points(model: &SurfaceModel) -> Result<Vec<PointSpec>> {
    let p = model.p();
    let chart = model.charts()[0];
    let mut out: BTreeSet<PointSpec> = BTreeSet::from([PointSpec::Crossing(0), PointSpec::Crossing(1)]);
    for i in 0..model.rank() {
        let f = model.chart_poly(i, &chart);
        let Some(j) = f.terms.keys().map(|e| e.1).min() else {
            continue;
        };
        if j >= 0 {
            continue;
        }
        let mut h: BTreeMap<i64, u64> = BTreeMap::new();
        for (&(a, jj), &c) in &f.terms {
            if jj != j {
                continue;
            }
            if j % p as i64 != 0 {
                h.insert(a, c);
            } else {
                let da = (a.rem_euclid(p as i64) as u64) * c % p;
                if da != 0 {
                    h.insert(a - 1, da);
                }
            }
        }
        match rational_roots(&h, p) {
            Ok(roots) => out.extend(roots.into_iter().map(|(z, _)| PointSpec::Torus(z))),
            Err(missing) => {
                return Err(Error::Unenumerable(format!(
                    "{missing} special point(s) of {} in the chart at {} are not rational over F_{p}",
                    model.component_name(model.divisor),
                    model.component_name(chart.other)
                )))
            }
        }
    }
    Ok(out.into_iter().collect())
}

// ---- subharmonicity ----

#[derive(Clone, Debug, Serialize)]
pub struct SubharmonicityReport {
    pub ambient: Ambient,
    pub component: String,
    pub boundary: Vec<String>,
    pub generic: GenericReport,
    pub points: Vec<PointReport>,
    pub generic_seed: u64,
    pub generic_sample: Option<PointReport>,
    pub genus: i64,
    pub self_intersection: i64,
    /// `sum_z (Swan'(z) + ell)` over the special points.
    #[serde(serialize_with = "ser_q")]
    pub lhs: Q,
    /// `(2 - 2g) ell - Z^2 Swan(E, Z)`.
    #[serde(serialize_with = "ser_q")]
    pub rhs: Q,
    pub pass: bool,
    pub equality: bool,
    pub exposed_points: Vec<String>,
}

/// Sum of `Swan' + ell` over `Z` against `(2 - 2g) ell - Z^2 Swan(E, Z)`.
pub fn subharmonicity_check(model: &SurfaceModel) -> Result<SubharmonicityReport> {
    let generic = ell_invariant(model)?;
    let ell = qi(generic.ell as i64);
    let specials = special_points(model)?;
    let mut points = Vec::with_capacity(specials.len());
    for s in &specials {
        points.push(point_report(model, s, &Reparam::identity(model.p()), &generic, PointKind::Torus)?);
    }
    let generic_sample = generic_sample(model, &specials, &generic)?;
    if let Some(g) = &generic_sample {
        for lb in &g.breaks {
            let leaf = generic.leaves.iter().find(|l| l.leaf == lb.leaf).expect("leaf present");
            let expected = if leaf.xi_dominant { qi(-1) } else { Q::zero() };
            if leaf.break_value.is_positive() && lb.slope != expected {
                return Err(Error::Invariant(format!(
                    "generic slope of leaf {} at {} is {}, expected {}",
                    lb.leaf + 1,
                    g.label,
                    fmt_q(&lb.slope),
                    fmt_q(&expected)
                )));
            }
        }
    }
    let lhs = points.iter().fold(Q::zero(), |acc, pt| acc + &pt.swan_slope + &ell);
    let z = model.divisor;
    let genus = model.ambient.genus(z);
    let zz = model.ambient.self_intersection(z);
    let rhs = qi(2 - 2 * genus) * &ell - qi(zz) * &generic.swan;
    let exposed_points = points.iter().filter(|pt| pt.exposed).map(|pt| pt.label.clone()).collect();
    Ok(SubharmonicityReport {
        ambient: model.ambient,
        component: model.component_name(z),
        boundary: model.boundary.iter().map(|&i| model.component_name(i)).collect(),
        pass: lhs >= rhs,
        equality: lhs == rhs,
        generic,
        points,
        generic_seed: GENERIC_SEED,
        generic_sample,
        genus,
        self_intersection: zz,
        lhs,
        rhs,
        exposed_points,
    })
}

fn generic_sample(model: &SurfaceModel, specials: &[PointSpec], generic: &GenericReport) -> Result<Option<PointReport>> {
    let p = model.p();
    let free: Vec<u64> = (1..p).filter(|z| !specials.contains(&PointSpec::Torus(*z))).collect();
    if free.is_empty() {
        return Ok(None);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(GENERIC_SEED);
    let z = free[rng.gen_range(0..free.len())];
    let report = point_report(model, &PointSpec::Torus(z), &Reparam::identity(p), generic, PointKind::Generic)?;
    if report.exposed || report.monotonicity.iter().any(|m| !m.value.is_zero()) {
        return Err(Error::Invariant(format!("generic point {} is not generic", report.label)));
    }
    Ok(Some(report))
}

// ---- hidden turning points ----

#[derive(Clone, Debug, Serialize)]
pub struct EdgeFunction {
    pub index: usize,
    /// `f_i(k/N)` for `k = 0..=N`.
    pub values: Vec<String>,
    #[serde(serialize_with = "ser_q")]
    pub right_slope: Q,
    #[serde(serialize_with = "ser_q")]
    pub chord: Q,
    pub affine: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct HiddenScanReport {
    pub crossing: String,
    pub grid: u32,
    pub functions: Vec<EdgeFunction>,
    pub hidden: bool,
    /// `f_i'(0) <= f_i(1) - f_i(0)` for all `i`.
    pub slope_test: bool,
}

/// `f_i(s) = B_i` at weights `1 - s` on `Z` and `s` on the neighbour in chart `which`.
pub fn hidden_turning_scan(model: &SurfaceModel, which: usize, grid: u32) -> Result<HiddenScanReport> {
    if grid < 2 {
        return Err(Error::InvalidWeights(format!("grid {grid} must be at least 2")));
    }
    let chart = *model.charts().get(which).ok_or(Error::Unsupported(format!("chart index {which} out of range")))?;
    let module = model.chart_module(&chart)?;
    let prep = PreparedModule::new(&module)?;
    let d = model.rank();
    let n = qi(grid as i64);
    let mut table: Vec<Vec<Q>> = vec![Vec::with_capacity(grid as usize + 1); d];
    for k in 0..=grid {
        let s = qi(k as i64) / &n;
        let w = WeightVector::new(vec![s.clone(), qi(1) - &s]);
        let b = break_multiset(&prep, &w, &Normalization::Simplex).map_err(|e| Error::AtPoint(format!("s = {}", fmt_q(&s)), Box::new(e)))?;
        for (i, col) in table.iter_mut().enumerate() {
            col.push(b.partial_sum(i + 1));
        }
    }
    let generic = ell_invariant(model)?;
    let local = point_report(model, &PointSpec::Crossing(which), &Reparam::identity(model.p()), &generic, PointKind::Torus)?;
    let mut functions = Vec::with_capacity(d);
    for (i, vals) in table.iter().enumerate() {
        let (f0, f1) = (&vals[0], &vals[grid as usize]);
        let chord = f1 - f0;
        let affine = vals.iter().enumerate().all(|(k, v)| *v == f0 + &chord * qi(k as i64) / &n);
        // f_i(s) = (1 - s) B_i(z, s / (1 - s))
        let right_slope = local.slope_prefix(i + 1) - local.intercept_prefix(i + 1);
        if local.intercept_prefix(i + 1) != *f0 {
            return Err(Error::Invariant(format!("edge value f_{}(0) disagrees with the point report", i + 1)));
        }
        if (right_slope < chord) == affine {
            return Err(Error::Invariant(format!(
                "f_{}: right slope {} vs chord {} contradicts affinity on the grid",
                i + 1,
                fmt_q(&right_slope),
                fmt_q(&chord)
            )));
        }
        functions.push(EdgeFunction { index: i + 1, values: vals.iter().map(fmt_q).collect(), right_slope, chord, affine });
    }
    Ok(HiddenScanReport {
        crossing: local.label,
        grid,
        hidden: functions.iter().any(|f| !f.affine),
        slope_test: functions.iter().all(|f| f.right_slope <= f.chord),
        functions,
    })
}

// ---- Swan divisor ----

#[derive(Clone, Debug, Serialize)]
pub struct CrossingCheck {
    pub other: String,
    #[serde(serialize_with = "ser_q")]
    pub other_swan: Q,
    #[serde(serialize_with = "ser_q")]
    pub slope_here: Q,
    pub holds: bool,
    pub hidden: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ComponentReport {
    pub component: String,
    pub ell: usize,
    /// `Z . (Swan(E) + ell (K + D))`.
    #[serde(serialize_with = "ser_q")]
    pub intersection: Q,
    /// `(2g - 2) ell + Z^2 Swan(E, Z) + sum_z (Swan'(z) + ell)`.
    #[serde(serialize_with = "ser_q")]
    pub lemma_rhs: Q,
    pub crossings: Vec<CrossingCheck>,
    pub exposed_points: Vec<String>,
    pub clean: bool,
    pub nonnegative: bool,
    pub lemma_holds: bool,
    pub equality: bool,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SwanDivisorReport {
    pub ambient: Ambient,
    /// `(component, Swan(E, component))` over the boundary.
    pub swan_divisor: Vec<(String, String)>,
    pub components: Vec<ComponentReport>,
    pub pass: bool,
}

/// Intersection form of the subharmonicity inequality on every boundary component.
pub fn swan_divisor_check(model: &SurfaceModel, grid: u32) -> Result<SwanDivisorReport> {
    let amb = model.ambient;
    let mut swans: BTreeMap<usize, Q> = BTreeMap::new();
    for &c in &model.boundary {
        swans.insert(c, generic_along(model, c)?.swan);
    }
    let classes: Vec<Vec<i64>> = (0..amb.num_components()).map(|i| amb.class(i)).collect();
    let dim = classes[0].len();
    let mut components = Vec::new();
    for &c in &model.boundary {
        let m = model.with_divisor(c)?;
        let sub = subharmonicity_check(&m)?;
        let ell = qi(sub.generic.ell as i64);
        // Swan(E) + ell (K + D) as a rational class
        let mut class: Vec<Q> = amb.canonical().iter().map(|k| qi(*k) * &ell).collect();
        for &b in &model.boundary {
            for k in 0..dim {
                class[k] += (&swans[&b] + &ell) * qi(classes[b][k]);
            }
        }
        let zc = &classes[c];
        let intersection = match amb {
            Ambient::P1xP1 => qi(zc[0]) * &class[1] + qi(zc[1]) * &class[0],
            Ambient::P2 => qi(zc[0]) * &class[0],
        };
        let lemma_rhs = qi(2 * amb.genus(c) - 2) * &ell + qi(amb.self_intersection(c)) * &swans[&c] + &sub.lhs;
        let mut crossings = Vec::new();
        for (which, chart) in m.charts().iter().enumerate() {
            if !model.boundary.contains(&chart.other) {
                continue;
            }
            let pt = sub.points.iter().find(|pt| pt.kind == PointKind::Crossing && pt.chart == m.component_name(chart.other));
            let slope_here = pt.map(|pt| pt.swan_slope.clone()).unwrap_or_default();
            let other_swan = swans[&chart.other].clone();
            let scan = hidden_turning_scan(&m, which, grid)?;
            crossings.push(CrossingCheck {
                other: m.component_name(chart.other),
                holds: other_swan >= slope_here,
                other_swan,
                slope_here,
                hidden: scan.hidden,
            });
        }
        let clean = sub.exposed_points.is_empty() && crossings.iter().all(|x| !x.hidden);
        let nonnegative = !intersection.is_negative();
        let lemma_holds = intersection >= lemma_rhs && crossings.iter().all(|x| x.holds);
        let equality = intersection == lemma_rhs;
        components.push(ComponentReport {
            component: m.component_name(c),
            ell: sub.generic.ell,
            pass: nonnegative && lemma_holds && (!clean || equality),
            intersection,
            lemma_rhs,
            crossings,
            exposed_points: sub.exposed_points.clone(),
            clean,
            nonnegative,
            lemma_holds,
            equality,
        });
    }
    Ok(SwanDivisorReport {
        ambient: amb,
        swan_divisor: swans.iter().map(|(&c, s)| (model.component_name(c), fmt_q(s))).collect(),
        pass: components.iter().all(|c| c.pass),
        components,
    })
}

/// Parses a component name or index for `ambient`.
pub fn parse_component(ambient: Ambient, s: &str, names: &[String; 2]) -> Result<usize> {
    if let Ok(i) = s.trim().parse::<usize>() {
        if i < ambient.num_components() {
            return Ok(i);
        }
    }
    ambient
        .component_by_name(s, names)
        .ok_or_else(|| Error::Unsupported(format!("unknown boundary component '{s}' on {ambient}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laurent::mono;
    use crate::variation::sweep_simplex;

    fn names() -> [String; 2] {
        ["x".to_string(), "t".to_string()]
    }

    fn model(amb: Ambient, m: NablaModule, z: usize) -> SurfaceModel {
        SurfaceModel::new(amb, &m, z, names()).unwrap()
    }

    fn dwork(p: u32, terms: &[(i64, i64)]) -> NablaModule {
        let f = terms.iter().fold(LaurentElement::zero(p, 2), |acc, &(a, j)| acc + mono(p, &[a, j]));
        NablaModule::dwork(f).unwrap()
    }

    const T0: usize = 1;

    #[test]
    fn x_over_t_points() {
        let m = model(Ambient::P1xP1, dwork(5, &[(1, -1)]), T0);
        let g = point_breaks(&m, &PointSpec::Torus(2)).unwrap();
        assert_eq!((g.breaks[0].intercept.clone(), g.swan_slope.clone()), (qi(1), qi(0)));
        let o = point_breaks(&m, &PointSpec::Crossing(0)).unwrap();
        assert_eq!((o.breaks[0].intercept.clone(), o.swan_slope.clone()), (qi(1), qi(-1)));
        let inf = point_breaks(&m, &PointSpec::Crossing(1)).unwrap();
        assert_eq!(inf.swan_slope, qi(1));
        assert_eq!(ell_invariant(&m).unwrap().ell, 0);
        let s = subharmonicity_check(&m).unwrap();
        assert_eq!((s.lhs, s.rhs), (qi(0), qi(0)));
    }

    #[test]
    fn x_t_minus_p() {
        let p = 5;
        let m = model(Ambient::P1xP1, dwork(p, &[(1, -(p as i64))]), T0);
        assert_eq!(ell_invariant(&m).unwrap().ell, 1);
        let s = subharmonicity_check(&m).unwrap();
        assert_eq!((s.lhs.clone(), s.rhs.clone()), (qi(2), qi(2)));
        assert!(s.pass && s.equality);
        let g = s.generic_sample.unwrap();
        assert_eq!(g.swan_slope, qi(-1));
        assert_eq!(g.monotonicity[0].value, qi(0));
    }

    #[test]
    fn cubic_over_t_has_three_exposed_points() {
        let p = 7;
        let m = model(Ambient::P1xP1, dwork(p, &[(3, -1), (0, -1)]), T0);
        let s = subharmonicity_check(&m).unwrap();
        assert_eq!((s.lhs.clone(), s.rhs.clone()), (qi(0), qi(0)));
        let roots: Vec<&PointReport> = s.points.iter().filter(|pt| pt.kind == PointKind::Torus).collect();
        assert_eq!(roots.iter().map(|r| r.value.as_str()).collect::<Vec<_>>(), ["3/1", "5/1", "6/1"]);
        assert!(roots.iter().all(|r| r.exposed && r.swan_slope == qi(-1)));
        assert_eq!(s.exposed_points.len(), 3);
        let inf = s.points.iter().find(|pt| pt.label.contains("x=inf")).unwrap();
        assert_eq!(inf.swan_slope, qi(3));
    }

    #[test]
    fn non_rational_special_points_are_reported() {
        // x^2 + 1 has no roots mod 7
        let m = model(Ambient::P1xP1, dwork(7, &[(2, -1), (0, -1)]), T0);
        assert!(matches!(special_points(&m), Err(Error::Unenumerable(_))));
    }

    #[test]
    fn p_divisible_row_uses_derivative_zeros() {
        // (x^2 + x) t^-5 at p = 5: derivative 2x + 1 vanishes at x = 2
        let p = 5;
        let m = model(Ambient::P1xP1, dwork(p, &[(2, -5), (1, -5)]), T0);
        assert_eq!(ell_invariant(&m).unwrap().ell, 1);
        let pts = special_points(&m).unwrap();
        assert!(pts.contains(&PointSpec::Torus(2)));
        let r = point_breaks(&m, &PointSpec::Torus(2)).unwrap();
        assert_eq!(r.swan_slope, qi(-2));
        let s = subharmonicity_check(&m).unwrap();
        assert!(s.pass);
    }

    #[test]
    fn artin_schreier_reduction_at_a_point() {
        // x^5 t^-5 + x t^-1 ~ 2 x t^-1 up to a p-th power row
        let p = 5;
        let m = model(Ambient::P1xP1, dwork(p, &[(5, -5), (2, -1)]), T0);
        let g = ell_invariant(&m).unwrap();
        assert_eq!(g.swan, qi(1));
        let r = point_breaks(&m, &PointSpec::Crossing(0)).unwrap();
        assert_eq!(r.breaks[0].slope, qi(-1));
    }

    #[test]
    fn negative_powers_expand_at_torus_points() {
        let p = 7;
        let m = model(Ambient::P1xP1, dwork(p, &[(-2, -1), (0, -2)]), T0);
        let r = point_breaks(&m, &PointSpec::Torus(3)).unwrap();
        assert_eq!(r.breaks[0].intercept, qi(2));
        assert_eq!(r.breaks[0].slope, qi(0));
        assert!(r.valid_until.is_none());
    }

    #[test]
    fn reparametrization_invariance() {
        let p = 5;
        for leaf in [vec![(1, -1)], vec![(1, -5)], vec![(3, -1), (0, -1)], vec![(-1, -1), (2, -2)]] {
            let m = model(Ambient::P1xP1, dwork(p, &leaf), T0);
            for pt in [PointSpec::Crossing(0), PointSpec::Torus(2)] {
                let base = point_breaks(&m, &pt).unwrap();
                for w in [ResiduePoly::monomial(p as u64, (0, 1), 1), ResiduePoly::monomial(p as u64, (2, 0), 1)] {
                    let rep = Reparam::new(2, w).unwrap();
                    let other = point_breaks_with(&m, &pt, &rep).unwrap();
                    let strip = |r: &PointReport| r.breaks.iter().map(|b| (b.intercept.clone(), b.slope.clone())).collect::<Vec<_>>();
                    assert_eq!(strip(&base), strip(&other), "leaf {leaf:?} at {pt:?}");
                }
            }
        }
    }

    #[test]
    fn hidden_turning_point_of_two_poles() {
        let m = model(Ambient::P1xP1, dwork(5, &[(-1, 0), (0, -1)]), T0);
        let scan = hidden_turning_scan(&m, 0, 12).unwrap();
        assert!(scan.hidden && scan.slope_test);
        let f = &scan.functions[0];
        assert_eq!(f.values[6], "1/2");
        assert_eq!(f.right_slope, qi(-1));
    }

    #[test]
    fn hidden_scan_agrees_with_the_sweep() {
        for leaf in [vec![(-1, 0), (0, -1)], vec![(1, -5)], vec![(-2, 0), (0, -3)]] {
            let m = model(Ambient::P1xP1, dwork(5, &leaf), T0);
            let scan = hidden_turning_scan(&m, 0, 12).unwrap();
            let surface = sweep_simplex(&m.chart_module(&m.charts()[0]).unwrap(), 12).unwrap();
            let fit = surface.fit("1!*B_1").unwrap();
            let pieces = fit.fit.as_ref().map_or(0, |f| f.pieces.len());
            assert_eq!(scan.hidden, pieces > 1, "leaf {leaf:?}");
            assert!(fit.convex.ok);
        }
    }

    #[test]
    fn single_monomial_edge_is_affine() {
        let p = 5;
        let m = model(Ambient::P1xP1, dwork(p, &[(1, -(p as i64))]), T0);
        let scan = hidden_turning_scan(&m, 1, 12).unwrap();
        assert!(!scan.hidden && scan.slope_test);
        assert_eq!(scan.functions[0].values[0], "5/1");
        assert_eq!(scan.functions[0].values[12], "1/1");
    }

    #[test]
    fn trivial_module_everything_zero() {
        let m = model(Ambient::P1xP1, trivial_module(5).unwrap(), T0);
        let s = subharmonicity_check(&m).unwrap();
        assert_eq!((s.lhs.clone(), s.rhs.clone()), (qi(0), qi(0)));
        let scan = hidden_turning_scan(&m, 0, 4).unwrap();
        assert!(!scan.hidden);
        let d = swan_divisor_check(&m, 4).unwrap();
        assert!(d.pass);
        assert_eq!(d.components[0].intersection, qi(0));
    }

    #[test]
    fn swan_divisor_x_t_minus_p() {
        let p = 5;
        let m = model(Ambient::P1xP1, dwork(p, &[(1, -(p as i64))]), T0);
        assert_eq!(m.boundary, vec![1, 2]);
        let d = swan_divisor_check(&m, 8).unwrap();
        assert!(d.pass);
        let z = d.components.iter().find(|c| c.component == "t=0").unwrap();
        assert_eq!((z.intersection.clone(), z.lemma_rhs.clone()), (qi(0), qi(0)));
        assert!(z.clean && z.equality);
    }

    #[test]
    fn swan_divisor_lxy_at_infinity() {
        let names = ["x".to_string(), "y".to_string()];
        let m = SurfaceModel::new(Ambient::P1xP1, &dwork(5, &[(1, 1)]), 2, names).unwrap();
        assert_eq!(m.boundary, vec![2, 3]);
        let d = swan_divisor_check(&m, 6).unwrap();
        assert_eq!(d.swan_divisor, vec![("x=inf".to_string(), "1/1".to_string()), ("y=inf".to_string(), "1/1".to_string())]);
        assert!(d.pass);
        for c in &d.components {
            assert_eq!(c.intersection, qi(1));
            assert_eq!(c.lemma_rhs, qi(0));
            assert!(!c.clean);
        }
    }

    #[test]
    fn projective_plane_line() {
        let p = 5;
        let m = model(Ambient::P2, dwork(p, &[(1, -(p as i64))]), T0);
        let s = subharmonicity_check(&m).unwrap();
        assert_eq!(s.self_intersection, 1);
        assert_eq!((s.lhs.clone(), s.rhs.clone()), (qi(2 - p as i64), qi(2 - p as i64)));
        let d = swan_divisor_check(&m, 6).unwrap();
        assert!(d.pass);
    }

    #[test]
    fn chart_exponent_maps_invert() {
        for amb in [Ambient::P1xP1, Ambient::P2] {
            for z in 0..amb.num_components() {
                for o in amb.neighbors(z) {
                    let ch = Chart::new(amb, z, o);
                    for m in [(1, 0), (0, 1), (3, -2), (-5, 7)] {
                        assert_eq!(ch.to_torus(ch.to_local(m)), m);
                    }
                }
            }
        }
    }

    #[test]
    fn point_spec_parsing() {
        assert_eq!(PointSpec::parse("0", 5).unwrap(), PointSpec::Crossing(0));
        assert_eq!(PointSpec::parse("inf", 5).unwrap(), PointSpec::Crossing(1));
        assert_eq!(PointSpec::parse("1/5", 5).unwrap(), PointSpec::Crossing(1));
        assert_eq!(PointSpec::parse("7", 5).unwrap(), PointSpec::Torus(2));
        assert_eq!(PointSpec::parse("1/2", 5).unwrap(), PointSpec::Torus(3));
    }

    #[test]
    fn rational_roots_counts_multiplicity() {
        // x^2 + 1 is irreducible mod 7
        let h: BTreeMap<i64, u64> = [(0, 1), (2, 1)].into_iter().collect();
        assert_eq!(rational_roots(&h, 7), Err(2));
        // (x + 5)^2 = x^2 + 3x + 4 mod 7
        let sq: BTreeMap<i64, u64> = [(0, 4), (1, 3), (2, 1)].into_iter().collect();
        assert_eq!(rational_roots(&sq, 7).unwrap(), vec![(2, 2)]);
    }
}
