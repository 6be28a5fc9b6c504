//! Affine functionals, max-of-affine functions, and the convexity and
//! integrality tests run on simplex grid samples.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg;
use crate::rational::{fmt_q, fmt_q_list, in_lattice, qi, Q};

/// `x -> <a, x> + b`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AffineFunctional {
    pub a: Vec<Q>,
    pub b: Q,
}

impl AffineFunctional {
    pub fn new(a: Vec<Q>, b: Q) -> Self {
        AffineFunctional { a, b }
    }

    pub fn constant(n: usize, b: Q) -> Self {
        AffineFunctional { a: vec![Q::zero(); n], b }
    }

    pub fn eval(&self, x: &[Q]) -> Q {
        self.a.iter().zip(x).fold(self.b.clone(), |acc, (a, x)| acc + a * x)
    }

    pub fn is_transintegral(&self) -> bool {
        self.a.iter().all(|a| a.is_integer())
    }

    pub fn is_integral(&self) -> bool {
        self.is_transintegral() && self.b.is_integer()
    }

    /// Representative with `min a_i = 0`, unique among functionals agreeing on `sum x_i = 1`.
    pub fn canonical_on_simplex(&self) -> Self {
        let m = self.a.iter().min().cloned().unwrap_or_else(Q::zero);
        AffineFunctional { a: self.a.iter().map(|a| a - &m).collect(), b: &self.b + &m }
    }

    /// Record `a1,a2,...;b`.
    pub fn to_record(&self) -> String {
        format!("{};{}", fmt_q_list(&self.a), fmt_q(&self.b))
    }

    pub fn display_with(&self, names: &[String]) -> String {
        let mut parts = Vec::new();
        if !self.b.is_zero() || self.a.iter().all(Zero::is_zero) {
            parts.push(fmt_q(&self.b));
        }
        for (a, name) in self.a.iter().zip(names) {
            if !a.is_zero() {
                parts.push(format!("{}*{name}", fmt_q(a)));
            }
        }
        parts.join(" + ")
    }
}

impl fmt::Display for AffineFunctional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_record())
    }
}

impl Serialize for AffineFunctional {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_record())
    }
}

/// `max_i pieces[i]` on the region `{ x : lambda(x) >= 0 for lambda in region }`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PolyhedralFunction {
    pub pieces: Vec<AffineFunctional>,
    pub region: Vec<AffineFunctional>,
}

impl PolyhedralFunction {
    pub fn new(pieces: Vec<AffineFunctional>, region: Vec<AffineFunctional>) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::EmptyInput);
        }
        Ok(PolyhedralFunction { pieces, region })
    }

    /// The simplex `x_i >= 0, sum x_i = 1` as integral constraints.
    pub fn simplex_region(n: usize) -> Vec<AffineFunctional> {
        let mut out: Vec<AffineFunctional> = (0..n)
            .map(|i| {
                let mut a = vec![Q::zero(); n];
                a[i] = Q::one();
                AffineFunctional::new(a, Q::zero())
            })
            .collect();
        out.push(AffineFunctional::new(vec![Q::one(); n], -Q::one()));
        out.push(AffineFunctional::new(vec![-Q::one(); n], Q::one()));
        out
    }

    pub fn contains(&self, x: &[Q]) -> bool {
        self.region.iter().all(|c| c.a.len() == x.len() && !c.eval(x).is_negative())
    }

    pub fn eval(&self, x: &[Q]) -> Result<Q> {
        if !self.contains(x) {
            return Err(Error::OutsideRegion(fmt_q_list(x)));
        }
        Ok(self.eval_unchecked(x))
    }

    fn eval_unchecked(&self, x: &[Q]) -> Q {
        self.pieces.iter().map(|p| p.eval(x)).max().expect("nonempty pieces")
    }

    pub fn all_integral(&self) -> bool {
        self.pieces.iter().all(AffineFunctional::is_integral)
    }

    pub fn all_transintegral(&self) -> bool {
        self.pieces.iter().all(AffineFunctional::is_transintegral)
    }
}

/// Grid samples `x -> f(x)` keyed by exact coordinates.
pub type Samples = BTreeMap<Vec<Q>, Q>;

/// `T cap (1/N) Z^n`, in lexicographic order of the numerators.
pub fn simplex_grid(n: usize, denom: u32) -> Vec<Vec<Q>> {
    fn rec(n: usize, left: i64, prefix: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
        if n == 1 {
            prefix.push(left);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for k in 0..=left {
            prefix.push(k);
            rec(n - 1, left - k, prefix, out);
            prefix.pop();
        }
    }
    let mut ks = Vec::new();
    rec(n, denom as i64, &mut Vec::new(), &mut ks);
    let d = qi(denom as i64);
    ks.into_iter().map(|k| k.into_iter().map(|x| qi(x) / &d).collect()).collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub ok: bool,
    /// Offending points for a failed check, as `num/den` lists.
    pub witness: Option<Vec<String>>,
}

impl Verdict {
    fn pass() -> Self {
        Verdict { ok: true, witness: None }
    }

    fn fail(points: &[&[Q]]) -> Self {
        Verdict { ok: false, witness: Some(points.iter().map(|x| fmt_q_list(x)).collect()) }
    }
}

/// Midpoint convexity on every sampled triple `x, (x+z)/2, z`.
pub fn check_convex(samples: &Samples) -> Verdict {
    let pts: Vec<(&Vec<Q>, &Q)> = samples.iter().collect();
    let two = qi(2);
    for (i, (x, fx)) in pts.iter().enumerate() {
        for (z, fz) in &pts[i + 1..] {
            let mid: Vec<Q> = x.iter().zip(z.iter()).map(|(a, b)| (a + b) / &two).collect();
            if let Some(fm) = samples.get(&mid) {
                if fm * &two > *fx + *fz {
                    return Verdict::fail(&[x, &mid, z]);
                }
            }
        }
    }
    Verdict::pass()
}

/// Every value lies in `Z + Z x_1 + ... + Z x_n`.
pub fn check_integral_polyhedral(samples: &Samples) -> Verdict {
    for (x, v) in samples {
        if !in_lattice(v, x) {
            return Verdict::fail(&[x]);
        }
    }
    Verdict::pass()
}

/// Affine interpolant through `n` points in `R^n` lying on `sum x_i = 1`,
/// written in the canonical simplex form.
fn interpolate(points: &[&Vec<Q>], values: &[&Q]) -> Option<AffineFunctional> {
    let n = points[0].len();
    // f = sum_{i<n-1} alpha_i x_i + beta on the hull; coordinates x_1..x_{n-1}
    let rows: Vec<Vec<Q>> = points
        .iter()
        .map(|x| x[..n - 1].iter().cloned().chain(std::iter::once(Q::one())).collect())
        .collect();
    let sol = linalg::solve(rows, values.iter().map(|v| (*v).clone()).collect())?;
    let beta = sol[n - 1].clone();
    let mut a: Vec<Q> = sol[..n - 1].iter().map(|al| al + &beta).collect();
    a.push(beta);
    Some(AffineFunctional::new(a, Q::zero()).canonical_on_simplex())
}

/// Kuhn-triangulation simplices of the simplex grid, as index tuples into `keys`.
fn kuhn_cells(keys: &[Vec<Q>], denom: &Q) -> Vec<Vec<usize>> {
    let n = keys[0].len();
    let m = n - 1;
    let lookup: BTreeMap<Vec<i64>, usize> = keys
        .iter()
        .enumerate()
        .map(|(i, x)| (x[..m].iter().map(|c| (c * denom).to_integer().try_into().unwrap_or(i64::MAX)).collect(), i))
        .collect();
    let mut perms: Vec<Vec<usize>> = vec![vec![]];
    for _ in 0..m {
        let mut next = Vec::new();
        for p in &perms {
            for k in 0..m {
                if !p.contains(&k) {
                    let mut q = p.clone();
                    q.push(k);
                    next.push(q);
                }
            }
        }
        perms = next;
    }
    let mut cells = Vec::new();
    for base in lookup.keys() {
        for perm in &perms {
            let mut v = base.clone();
            let mut idx = vec![lookup[base]];
            for &k in perm {
                v[k] += 1;
                match lookup.get(&v) {
                    Some(&i) => idx.push(i),
                    None => break,
                }
            }
            if idx.len() == n {
                cells.push(idx);
            }
        }
    }
    cells
}

fn all_subsets(len: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, len: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..len {
            cur.push(i);
            rec(i + 1, len, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, len, k, &mut Vec::new(), &mut out);
    out
}

/// Recovers `max` of affine pieces from convex samples on a simplex grid.
///
/// Candidates are exact interpolants on grid cells; only those lying below
/// every sample are kept, and redundant ones are pruned. The result
/// reproduces every sample exactly or an error is returned.
pub fn fit_polyhedral(samples: &Samples) -> Result<PolyhedralFunction> {
    let (first, _) = samples.iter().next().ok_or(Error::EmptyInput)?;
    let n = first.len();
    if samples.keys().any(|x| x.len() != n || x.iter().fold(Q::zero(), |a, b| a + b) != Q::one()) {
        return Err(Error::Unsupported("fit samples must lie on the simplex".into()));
    }
    let verdict = check_convex(samples);
    if !verdict.ok {
        return Err(Error::NonConvex(verdict.witness.unwrap_or_default().join(" | ")));
    }
    let keys: Vec<Vec<Q>> = samples.keys().cloned().collect();
    let vals: Vec<&Q> = keys.iter().map(|k| &samples[k]).collect();
    let region = PolyhedralFunction::simplex_region(n);
    if n == 1 {
        return PolyhedralFunction::new(vec![AffineFunctional::constant(1, vals[0].clone())], region);
    }
    let denom = keys
        .iter()
        .flatten()
        .fold(num_bigint::BigInt::one(), |acc, x| num_integer::Integer::lcm(&acc, x.denom()));
    let denom = Q::from_integer(denom);
    let mut cells = kuhn_cells(&keys, &denom);
    if keys.len() <= 60 {
        cells.extend(all_subsets(keys.len(), n));
    }
    let mut candidates: BTreeSet<AffineFunctional> = BTreeSet::new();
    for cell in &cells {
        let pts: Vec<&Vec<Q>> = cell.iter().map(|&i| &keys[i]).collect();
        let vs: Vec<&Q> = cell.iter().map(|&i| vals[i]).collect();
        if let Some(f) = interpolate(&pts, &vs) {
            candidates.insert(f);
        }
    }
    let supporting: Vec<AffineFunctional> = candidates
        .into_iter()
        .filter(|f| keys.iter().zip(&vals).all(|(x, v)| f.eval(x) <= **v))
        .collect();
    let reproduces = |pieces: &[AffineFunctional]| {
        !pieces.is_empty() && keys.iter().zip(&vals).all(|(x, v)| pieces.iter().map(|f| f.eval(x)).max().as_ref() == Some(*v))
    };
    if !reproduces(&supporting) {
        return Err(Error::Unresolved("no max-of-affine function reproduces the samples".into()));
    }
    // greedy pruning in a fixed order keeps the result deterministic
    let mut pieces = supporting;
    let mut i = 0;
    while i < pieces.len() {
        let mut trial = pieces.clone();
        trial.remove(i);
        if reproduces(&trial) {
            pieces = trial;
        } else {
            i += 1;
        }
    }
    PolyhedralFunction::new(pieces, region)
}

/// `<a, x> + b (>|>=) 0`.
#[derive(Clone, Debug)]
struct Ineq {
    a: Vec<Q>,
    b: Q,
    strict: bool,
}

/// Strict feasibility by Fourier-Motzkin elimination.
fn feasible(mut ineqs: Vec<Ineq>, nvars: usize) -> bool {
    for var in 0..nvars {
        let (mut pos, mut neg, mut rest) = (Vec::new(), Vec::new(), Vec::new());
        for q in ineqs {
            if q.a[var].is_positive() {
                pos.push(q);
            } else if q.a[var].is_negative() {
                neg.push(q);
            } else {
                rest.push(q);
            }
        }
        for p in &pos {
            for q in &neg {
                let (sp, sq) = (-&q.a[var], p.a[var].clone());
                let a: Vec<Q> = p.a.iter().zip(&q.a).map(|(x, y)| x * &sp + y * &sq).collect();
                rest.push(Ineq { a, b: &p.b * &sp + &q.b * &sq, strict: p.strict || q.strict });
            }
        }
        ineqs = rest;
    }
    ineqs.iter().all(|q| if q.strict { q.b.is_positive() } else { !q.b.is_negative() })
}

/// Where two pieces of a fit exchange leadership inside the simplex.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Locus {
    pub pieces: (usize, usize),
    /// `<normal, r> = offset`.
    pub normal: Vec<String>,
    pub offset: String,
    pub equation: String,
}

/// Loci `<a_i - a_j, r> = b_j - b_i` for adjacent pieces: those meeting along a
/// codimension-one set in the open simplex where no third piece is larger.
pub fn breakpoint_loci(f: &PolyhedralFunction, names: &[String]) -> Vec<Locus> {
    let n = f.pieces.first().map_or(0, |p| p.a.len());
    let mut out = Vec::new();
    for i in 0..f.pieces.len() {
        for j in (i + 1)..f.pieces.len() {
            let (pi, pj) = (&f.pieces[i], &f.pieces[j]);
            let normal: Vec<Q> = pi.a.iter().zip(&pj.a).map(|(x, y)| x - y).collect();
            let offset = &pj.b - &pi.b;
            if adjacent(f, i, j, n) {
                let lhs = AffineFunctional::new(normal.clone(), Q::zero()).display_with(names);
                out.push(Locus {
                    pieces: (i, j),
                    normal: normal.iter().map(fmt_q).collect(),
                    offset: fmt_q(&offset),
                    equation: format!("{lhs} = {}", fmt_q(&offset)),
                });
            }
        }
    }
    out
}

fn adjacent(f: &PolyhedralFunction, i: usize, j: usize, n: usize) -> bool {
    // eliminate x_n through sum x = 1 and one more variable through lambda_i = lambda_j
    let (pi, pj) = (&f.pieces[i], &f.pieces[j]);
    let to_hull = |g: &AffineFunctional| -> (Vec<Q>, Q) {
        let last = g.a[n - 1].clone();
        (g.a[..n - 1].iter().map(|a| a - &last).collect(), &g.b + &last)
    };
    let (di, bi) = to_hull(pi);
    let (dj, bj) = to_hull(pj);
    let eq_a: Vec<Q> = di.iter().zip(&dj).map(|(x, y)| x - y).collect();
    let eq_b = &bi - &bj;
    let mut ineqs: Vec<Ineq> = Vec::new();
    for k in 0..n - 1 {
        let mut a = vec![Q::zero(); n - 1];
        a[k] = Q::one();
        ineqs.push(Ineq { a, b: Q::zero(), strict: true });
    }
    ineqs.push(Ineq { a: vec![-Q::one(); n - 1], b: Q::one(), strict: true });
    for k in 0..f.pieces.len() {
        if k != i && k != j {
            let (dk, bk) = to_hull(&f.pieces[k]);
            ineqs.push(Ineq { a: di.iter().zip(&dk).map(|(x, y)| x - y).collect(), b: &bi - &bk, strict: true });
        }
    }
    let Some(pivot) = eq_a.iter().position(|x| !x.is_zero()) else {
        return false;
    };
    // substitute x_pivot = -(eq_b + sum_{k != pivot} eq_a[k] x_k) / eq_a[pivot]
    let ineqs: Vec<Ineq> = ineqs
        .into_iter()
        .map(|q| {
            let coef = &q.a[pivot] / &eq_a[pivot];
            let a: Vec<Q> = q.a.iter().zip(&eq_a).enumerate().filter(|(k, _)| *k != pivot).map(|(_, (x, e))| x - &coef * e).collect();
            Ineq { a, b: &q.b - &coef * &eq_b, strict: q.strict }
        })
        .collect();
    feasible(ineqs, n - 2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;
    use proptest::prelude::*;

    fn names(n: usize) -> Vec<String> {
        (1..=n).map(|i| format!("r{i}")).collect()
    }

    fn one_plus_max() -> PolyhedralFunction {
        PolyhedralFunction::new(
            vec![
                AffineFunctional::new(vec![qi(1), qi(0)], qi(1)),
                AffineFunctional::new(vec![qi(0), qi(1)], qi(1)),
            ],
            PolyhedralFunction::simplex_region(2),
        )
        .unwrap()
    }

    fn sample(f: impl Fn(&[Q]) -> Q, n: usize, denom: u32) -> Samples {
        simplex_grid(n, denom).into_iter().map(|x| { let v = f(&x); (x, v) }).collect()
    }

    #[test]
    fn eval_examples() {
        let mx = PolyhedralFunction::new(
            vec![AffineFunctional::new(vec![qi(1), qi(0)], qi(0)), AffineFunctional::new(vec![qi(0), qi(1)], qi(0))],
            PolyhedralFunction::simplex_region(2),
        )
        .unwrap();
        assert_eq!(mx.eval(&[q(1, 3), q(2, 3)]).unwrap(), q(2, 3));
        let one = PolyhedralFunction::new(vec![AffineFunctional::constant(2, qi(1))], vec![]).unwrap();
        assert_eq!(one.eval(&[qi(7), qi(-3)]).unwrap(), qi(1));
        assert_eq!(one_plus_max().eval(&[q(1, 2), q(1, 2)]).unwrap(), q(3, 2));
        assert!(mx.eval(&[qi(1), qi(1)]).is_err());
    }

    #[test]
    fn convexity_checks() {
        let f = one_plus_max();
        assert!(check_convex(&sample(|x| f.eval(x).unwrap(), 2, 4)).ok);
        let concave = check_convex(&sample(|x| -(&x[0] * &x[0]), 2, 4));
        assert!(!concave.ok);
        assert!(concave.witness.is_some());
        assert!(check_convex(&sample(|_| qi(3), 3, 4)).ok);
    }

    #[test]
    fn lattice_checks() {
        let f = one_plus_max();
        assert!(check_integral_polyhedral(&sample(|x| f.eval(x).unwrap(), 2, 12)).ok);
        let mut s = Samples::new();
        s.insert(vec![q(1, 3), q(2, 3)], q(1, 6));
        assert!(!check_integral_polyhedral(&s).ok);
        assert!(check_integral_polyhedral(&sample(|_| qi(4), 3, 5)).ok);
    }

    #[test]
    fn fit_recovers_pieces() {
        let f = one_plus_max();
        let fit = fit_polyhedral(&sample(|x| f.eval(x).unwrap(), 2, 6)).unwrap();
        let got: BTreeSet<_> = fit.pieces.iter().cloned().collect();
        let want: BTreeSet<_> = f.pieces.iter().cloned().collect();
        assert_eq!(got, want);
        let loci = breakpoint_loci(&fit, &names(2));
        assert_eq!(loci.len(), 1);
        assert_eq!(loci[0].normal.len(), 2);
        let fit = fit_polyhedral(&sample(|_| qi(1), 3, 6)).unwrap();
        assert_eq!(fit.pieces.len(), 1);
        assert!(breakpoint_loci(&fit, &names(3)).is_empty());
    }

    #[test]
    fn fit_rejects_non_convex() {
        let mut s = sample(|x| x[0].clone(), 2, 6);
        s.insert(vec![q(1, 2), q(1, 2)], qi(5));
        assert!(matches!(fit_polyhedral(&s), Err(Error::NonConvex(_))));
    }

    #[test]
    fn three_pieces_two_loci() {
        let g = |x: &[Q]| (&x[0] * qi(4) - qi(2)).max(qi(1)).max(&x[1] * qi(4) - qi(2));
        let fit = fit_polyhedral(&sample(g, 2, 12)).unwrap();
        assert_eq!(fit.pieces.len(), 3);
        assert_eq!(breakpoint_loci(&fit, &names(2)).len(), 2);
    }

    #[test]
    fn three_variable_fit() {
        let g = |x: &[Q]| qi(1) + x[0].clone().max(x[1].clone()).max(x[2].clone());
        let fit = fit_polyhedral(&sample(g, 3, 6)).unwrap();
        assert_eq!(fit.pieces.len(), 3);
        assert!(fit.all_integral());
        assert_eq!(breakpoint_loci(&fit, &names(3)).len(), 3);
    }

    fn affine_set() -> impl Strategy<Value = Vec<AffineFunctional>> {
        prop::collection::vec((prop::collection::vec(-4i64..5, 2), -3i64..4), 1..4)
            .prop_map(|v| v.into_iter().map(|(a, b)| AffineFunctional::new(a.into_iter().map(qi).collect(), qi(b))).collect())
    }

    proptest! {
        #[test]
        fn fit_reproduces_samples(pieces in affine_set()) {
            let f = PolyhedralFunction::new(pieces, PolyhedralFunction::simplex_region(2)).unwrap();
            let s = sample(|x| f.eval(x).unwrap(), 2, 12);
            let fit = fit_polyhedral(&s).unwrap();
            for (x, v) in &s {
                prop_assert_eq!(&fit.eval(x).unwrap(), v);
            }
            prop_assert!(fit.pieces.len() <= f.pieces.len());
            // integral pieces imply lattice membership
            if fit.all_integral() {
                prop_assert!(check_integral_polyhedral(&s).ok);
            }
        }

        #[test]
        fn restriction_to_segments(pieces in affine_set(), a in 0i64..=12, b in 0i64..=12) {
            let f = PolyhedralFunction::new(pieces, PolyhedralFunction::simplex_region(2)).unwrap();
            let fit = fit_polyhedral(&sample(|x| f.eval(x).unwrap(), 2, 12)).unwrap();
            // along a rational segment the restriction is convex with at most #pieces affine parts
            let x0 = vec![q(a, 12), q(12 - a, 12)];
            let x1 = vec![q(b, 12), q(12 - b, 12)];
            let pts: Vec<Q> = (0..=24).map(|k| {
                let s = q(k, 24);
                let x: Vec<Q> = x0.iter().zip(&x1).map(|(u, v)| u * (Q::one() - &s) + v * &s).collect();
                fit.eval(&x).unwrap()
            }).collect();
            let mut changes = 0;
            for w in pts.windows(3) {
                let second = &w[0] + &w[2] - &w[1] * qi(2);
                prop_assert!(!second.is_negative());
                if second.is_positive() { changes += 1; }
            }
            // a kink between samples can show up in two consecutive windows
            prop_assert!(changes <= 2 * (fit.pieces.len() - 1));
        }
    }
}
